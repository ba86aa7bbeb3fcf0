//! Four waveguide modes with at most two photons in total.
//!
//! Modes 0 and 1 are the rails of the first qubit, modes 2 and 3 those of the
//! second; |0⟩ = |1_w 0_w⟩ and |1⟩ = |0_w 1_w⟩. The beam splitter mixes the
//! second rail of each qubit (modes 1 and 3).

use std::f64::consts::FRAC_1_SQRT_2;
use std::sync::OnceLock;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

pub const MODES: usize = 4;
pub const MAX_PHOTONS: u8 = 2;

pub type Occupation = [u8; MODES];

/// All occupations with at most two photons, ordered by photon number.
pub fn basis() -> &'static [Occupation] {
    static BASIS: OnceLock<Vec<Occupation>> = OnceLock::new();
    BASIS.get_or_init(|| {
        let mut b = Vec::new();
        for total in 0..=MAX_PHOTONS {
            for n0 in 0..=total {
                for n1 in 0..=total - n0 {
                    for n2 in 0..=total - n0 - n1 {
                        b.push([n0, n1, n2, total - n0 - n1 - n2]);
                    }
                }
            }
        }
        b
    })
}

pub fn index_of(occ: &Occupation) -> Result<usize> {
    basis()
        .iter()
        .position(|b| b == occ)
        .ok_or_else(|| Error::UnsupportedSector(format!("occupation {occ:?} exceeds {MAX_PHOTONS} photons")))
}

/// Complex amplitudes over [`basis`].
#[derive(Clone, Debug, PartialEq)]
pub struct DualRailState {
    amp: Vec<C64>,
}

impl DualRailState {
    pub fn zero() -> Self {
        DualRailState {
            amp: vec![C64::new(0.0, 0.0); basis().len()],
        }
    }

    pub fn basis_state(occ: Occupation) -> Result<Self> {
        let mut s = Self::zero();
        s.amp[index_of(&occ)?] = C64::new(1.0, 0.0);
        Ok(s)
    }

    pub fn from_amplitudes(amp: Vec<C64>) -> Result<Self> {
        if amp.len() != basis().len() {
            return Err(Error::invalid(format!("expected {} amplitudes, got {}", basis().len(), amp.len())));
        }
        Ok(DualRailState { amp })
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amp
    }

    pub fn get(&self, occ: &Occupation) -> Result<C64> {
        Ok(self.amp[index_of(occ)?])
    }

    pub fn add(&mut self, occ: &Occupation, z: C64) -> Result<()> {
        let i = index_of(occ)?;
        self.amp[i] += z;
        Ok(())
    }

    pub fn scaled(mut self, z: C64) -> Self {
        self.amp.iter_mut().for_each(|a| *a *= z);
        self
    }

    pub fn plus(mut self, other: &DualRailState) -> Self {
        self.amp.iter_mut().zip(&other.amp).for_each(|(a, b)| *a += b);
        self
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &DualRailState) -> C64 {
        self.amp.iter().zip(&other.amp).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.amp.iter().map(|z| z.norm_sqr()).sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

/// Images of the creation operators of modes 1 and 3 under the forward
/// splitter: a₁† → (−a₁† + a₃†)/√2, a₃† → (a₁† + a₃†)/√2.
fn splitter_matrix(dir: Direction) -> [[f64; 2]; 2] {
    // Column c is the image of mode [1, 3][c] over rows [1, 3].
    let fwd = [[-FRAC_1_SQRT_2, FRAC_1_SQRT_2], [FRAC_1_SQRT_2, FRAC_1_SQRT_2]];
    match dir {
        Direction::Forward => fwd,
        // The adjoint of a real matrix is its transpose.
        Direction::Inverse => [[fwd[0][0], fwd[1][0]], [fwd[0][1], fwd[1][1]]],
    }
}

fn factorial(n: u8) -> f64 {
    (1..=n).map(f64::from).product()
}

/// Apply the 50:50 splitter on modes 1 and 3.
pub fn beam_splitter(state: &DualRailState, dir: Direction) -> Result<DualRailState> {
    let u = splitter_matrix(dir);
    let modes = [1usize, 3];
    let image = |m: usize| -> Vec<(usize, f64)> {
        match modes.iter().position(|&x| x == m) {
            Some(c) => vec![(modes[0], u[0][c]), (modes[1], u[1][c])],
            None => vec![(m, 1.0)],
        }
    };
    let mut out = DualRailState::zero();
    for (occ, a) in basis().iter().zip(&state.amp) {
        if *a == C64::new(0.0, 0.0) {
            continue;
        }
        // |n⟩ = Π a†^{n_i} / √(Π n_i!) |0⟩; expand the product of images.
        let ops: Vec<usize> = (0..MODES).flat_map(|m| std::iter::repeat_n(m, occ[m] as usize)).collect();
        let norm_in: f64 = occ.iter().map(|&n| factorial(n)).product::<f64>().sqrt();
        let mut terms: Vec<(Occupation, f64)> = vec![([0; MODES], 1.0 / norm_in)];
        for &op in &ops {
            let mut next = Vec::new();
            for (o, c) in &terms {
                for &(m, w) in &image(op) {
                    if w == 0.0 {
                        continue;
                    }
                    let mut o2 = *o;
                    o2[m] += 1;
                    next.push((o2, c * w));
                }
            }
            terms = next;
        }
        for (o, c) in terms {
            let norm_out: f64 = o.iter().map(|&n| factorial(n)).product::<f64>().sqrt();
            out.add(&o, *a * (c * norm_out))?;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basis_has_fifteen_states() {
        assert_eq!(basis().len(), 15);
        assert!(basis().iter().all(|o| o.iter().sum::<u8>() <= 2));
    }

    #[test]
    fn three_photons_are_rejected() {
        assert!(matches!(DualRailState::basis_state([1, 1, 1, 0]), Err(Error::UnsupportedSector(_))));
    }

    #[test]
    fn splitter_is_unitary() {
        for dir in [Direction::Forward, Direction::Inverse] {
            let images: Vec<DualRailState> = basis()
                .iter()
                .map(|o| beam_splitter(&DualRailState::basis_state(*o).unwrap(), dir).unwrap())
                .collect();
            for (i, x) in images.iter().enumerate() {
                for (j, y) in images.iter().enumerate() {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((x.inner(y) - want).norm() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn inverse_undoes_forward() {
        for o in basis() {
            let s = DualRailState::basis_state(*o).unwrap();
            let back = beam_splitter(&beam_splitter(&s, Direction::Forward).unwrap(), Direction::Inverse).unwrap();
            assert!(back.amp.iter().zip(&s.amp).all(|(a, b)| (a - b).norm() < 1e-15));
        }
    }

    #[test]
    fn logical_states_map_as_expected() {
        let h = FRAC_1_SQRT_2;
        let fwd = |o| beam_splitter(&DualRailState::basis_state(o).unwrap(), Direction::Forward).unwrap();
        let s00 = fwd([1, 0, 1, 0]);
        assert!((s00.get(&[1, 0, 1, 0]).unwrap() - 1.0).norm() < 1e-15);
        let s01 = fwd([1, 0, 0, 1]);
        assert!((s01.get(&[1, 0, 0, 1]).unwrap() - h).norm() < 1e-15);
        assert!((s01.get(&[1, 1, 0, 0]).unwrap() - h).norm() < 1e-15);
        let s10 = fwd([0, 1, 1, 0]);
        assert!((s10.get(&[0, 1, 1, 0]).unwrap() + h).norm() < 1e-15);
        assert!((s10.get(&[0, 0, 1, 1]).unwrap() - h).norm() < 1e-15);
        // Two-photon interference: no coincidence term survives.
        let s11 = fwd([0, 1, 0, 1]);
        assert!(s11.get(&[0, 1, 0, 1]).unwrap().norm() < 1e-15);
        assert!((s11.get(&[0, 0, 0, 2]).unwrap() - h).norm() < 1e-15);
        assert!((s11.get(&[0, 2, 0, 0]).unwrap() + h).norm() < 1e-15);
    }
}

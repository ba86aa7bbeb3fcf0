//! Dual-rail controlled-phase composition B†CB, state fidelity, conditional
//! fidelity and the scalar gate error.
//!
//! The channel C multiplies every singly occupied mode by s₁ = ⟨1_w|ψ⁽¹⁾⟩
//! and every doubly occupied mode by s₂ = ⟨2_w|ψ⁽²⁾⟩. For the product input
//! (α|0⟩ + β|1⟩) ⊗ (ζ|0⟩ + ϑ|1⟩) and the ideal controlled-phase target the
//! overlap is s₁²(|α|² + |βζ|²) − s₂|βϑ|².

pub mod fock;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
pub use fock::{basis, beam_splitter, Direction, DualRailState, Occupation};

/// Logical input α|0⟩ + β|1⟩ on the first qubit and ζ|0⟩ + ϑ|1⟩ on the second.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogicalInput {
    pub alpha: C64,
    pub beta: C64,
    pub zeta: C64,
    pub theta: C64,
}

impl LogicalInput {
    pub fn new(alpha: C64, beta: C64, zeta: C64, theta: C64) -> Result<Self> {
        for (name, a, b) in [("alpha, beta", alpha, beta), ("zeta, theta", zeta, theta)] {
            let n = a.norm_sqr() + b.norm_sqr();
            if (n - 1.0).abs() > 1e-12 {
                return Err(Error::invalid(format!("|{name}|^2 must sum to 1, got {n}")));
            }
        }
        Ok(LogicalInput { alpha, beta, zeta, theta })
    }

    /// Both qubits in (|0⟩ + |1⟩)/√2.
    pub fn balanced() -> Self {
        let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        LogicalInput {
            alpha: h,
            beta: h,
            zeta: h,
            theta: h,
        }
    }

    /// Logical basis state |q1 q2⟩.
    pub fn basis(q1: bool, q2: bool) -> Self {
        let (one, zero) = (C64::new(1.0, 0.0), C64::new(0.0, 0.0));
        let pick = |q: bool| if q { (zero, one) } else { (one, zero) };
        let (alpha, beta) = pick(q1);
        let (zeta, theta) = pick(q2);
        LogicalInput { alpha, beta, zeta, theta }
    }

    /// Coefficients on |00⟩, |01⟩, |10⟩, |11⟩.
    pub fn logical_amplitudes(&self) -> [C64; 4] {
        [
            self.alpha * self.zeta,
            self.alpha * self.theta,
            self.beta * self.zeta,
            self.beta * self.theta,
        ]
    }

    /// Dual-rail encoding in the four waveguide modes.
    pub fn to_state(&self) -> DualRailState {
        encode(self.logical_amplitudes())
    }

    /// Ideal controlled-phase image: sign flip on |11⟩.
    pub fn target_state(&self) -> DualRailState {
        let mut c = self.logical_amplitudes();
        c[3] = -c[3];
        encode(c)
    }
}

/// Occupations of |00⟩, |01⟩, |10⟩, |11⟩.
const LOGICAL: [Occupation; 4] = [[1, 0, 1, 0], [1, 0, 0, 1], [0, 1, 1, 0], [0, 1, 0, 1]];

fn encode(coeffs: [C64; 4]) -> DualRailState {
    let mut s = DualRailState::zero();
    for (o, a) in LOGICAL.iter().zip(coeffs) {
        s.add(o, a).expect("logical occupations hold two photons");
    }
    s
}

/// Overlaps of the released states with the ideal one- and two-photon packets.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelAmplitudes {
    pub s1: C64,
    pub s2: C64,
}

impl ChannelAmplitudes {
    pub fn ideal() -> Self {
        ChannelAmplitudes {
            s1: C64::new(1.0, 0.0),
            s2: C64::new(-1.0, 0.0),
        }
    }
}

/// Multiply each basis state by s₁ per singly and s₂ per doubly occupied mode.
pub fn capture_release_channel(amps: &ChannelAmplitudes, state: &DualRailState) -> DualRailState {
    let factor = |n: u8| match n {
        0 => C64::new(1.0, 0.0),
        1 => amps.s1,
        _ => amps.s2,
    };
    let amp = basis()
        .iter()
        .zip(state.amplitudes())
        .map(|(o, a)| o.iter().map(|&n| factor(n)).product::<C64>() * a)
        .collect();
    DualRailState::from_amplitudes(amp).expect("same basis")
}

/// Closed-form state fidelity |s₁²(|α|² + |βζ|²) − s₂|βϑ|²|².
pub fn state_fidelity(input: &LogicalInput, amps: &ChannelAmplitudes) -> f64 {
    let w1 = input.alpha.norm_sqr() + (input.beta * input.zeta).norm_sqr();
    let w2 = (input.beta * input.theta).norm_sqr();
    (amps.s1 * amps.s1 * w1 - amps.s2 * w2).norm_sqr()
}

/// Amplitude ⟨target|B†CB|input⟩ evaluated in the Fock space.
pub fn gate_amplitude_fock(input: &LogicalInput, amps: &ChannelAmplitudes) -> Result<C64> {
    let b = beam_splitter(&input.to_state(), Direction::Forward)?;
    let c = capture_release_channel(amps, &b);
    let out = beam_splitter(&c, Direction::Inverse)?;
    Ok(input.target_state().inner(&out))
}

/// State fidelity by explicit Fock-space evaluation.
pub fn state_fidelity_fock(input: &LogicalInput, amps: &ChannelAmplitudes) -> Result<f64> {
    Ok(gate_amplitude_fock(input, amps)?.norm_sqr())
}

/// Branch weights read off the Fock-space amplitude, which is linear in s₁²
/// and s₂: amplitude = w₁ s₁² − w₂ s₂.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BranchWeights {
    pub w1: f64,
    pub w2: f64,
    /// |ζ|² recovered from w₁ = |α|² + |β|²|ζ|²; `None` when β = 0.
    pub zeta_sq: Option<f64>,
    /// |ϑ|² recovered from w₂ = |β|²|ϑ|²; `None` when β = 0.
    pub theta_sq: Option<f64>,
}

pub fn branch_weights(input: &LogicalInput) -> Result<BranchWeights> {
    let (one, zero) = (C64::new(1.0, 0.0), C64::new(0.0, 0.0));
    let a1 = gate_amplitude_fock(input, &ChannelAmplitudes { s1: one, s2: zero })?;
    let a2 = gate_amplitude_fock(input, &ChannelAmplitudes { s1: zero, s2: one })?;
    let (w1, w2) = (a1.re, -a2.re);
    let b2 = input.beta.norm_sqr();
    let (zeta_sq, theta_sq) = if b2 > 1e-300 {
        (Some((w1 - input.alpha.norm_sqr()) / b2), Some(w2 / b2))
    } else {
        (None, None)
    };
    Ok(BranchWeights {
        w1,
        w2,
        zeta_sq,
        theta_sq,
    })
}

/// Channel amplitudes divided by the square roots of the released norms.
pub fn conditional_amplitudes(amps: &ChannelAmplitudes, norm1: f64, norm2: f64) -> Result<ChannelAmplitudes> {
    const FLOOR: f64 = 1e-14;
    if !(norm1 > FLOOR) || !(norm2 > FLOOR) {
        return Err(Error::UndefinedConditional(format!(
            "released norms ({norm1:.3e}, {norm2:.3e}) vanish"
        )));
    }
    Ok(ChannelAmplitudes {
        s1: amps.s1 / norm1.sqrt(),
        s2: amps.s2 / norm2.sqrt(),
    })
}

/// Post-selected fidelity using normalized released states.
pub fn conditional_fidelity(input: &LogicalInput, amps: &ChannelAmplitudes, norm1: f64, norm2: f64) -> Result<f64> {
    Ok(state_fidelity(input, &conditional_amplitudes(amps, norm1, norm2)?))
}

/// Inputs over which the gate fidelity is averaged.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Ensemble {
    /// Both qubits in the balanced superposition.
    #[default]
    Balanced,
    /// The four logical basis states and the balanced superposition, equally
    /// weighted.
    BasisAverage,
}

impl Ensemble {
    pub fn inputs(&self) -> Vec<LogicalInput> {
        match self {
            Ensemble::Balanced => vec![LogicalInput::balanced()],
            Ensemble::BasisAverage => vec![
                LogicalInput::basis(false, false),
                LogicalInput::basis(false, true),
                LogicalInput::basis(true, false),
                LogicalInput::basis(true, true),
                LogicalInput::balanced(),
            ],
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Ensemble::Balanced => "balanced",
            Ensemble::BasisAverage => "basis-average",
        }
    }
}

/// Mean state fidelity over the ensemble.
pub fn gate_fidelity(amps: &ChannelAmplitudes, ensemble: Ensemble) -> f64 {
    let inputs = ensemble.inputs();
    inputs.iter().map(|i| state_fidelity(i, amps)).sum::<f64>() / inputs.len() as f64
}

/// 1 − mean state fidelity over the ensemble.
pub fn gate_error(amps: &ChannelAmplitudes, ensemble: Ensemble) -> f64 {
    1.0 - gate_fidelity(amps, ensemble)
}

/// Output norms of the one- and two-photon sectors.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct SectorNorms {
    /// ∫|ξ_out⁽¹⁾|².
    pub released_one: f64,
    /// ∬|ξ_out⁽²⁾|².
    pub released_two: f64,
    /// One-photon population still inside the system at t_N.
    pub retained_one: f64,
    /// Two-photon probability with an excitation still inside at t_N.
    pub retained_two: f64,
}

impl SectorNorms {
    /// Probability that no excitation leaked out, one-photon sector.
    pub fn survival_one(&self) -> f64 {
        self.released_one + self.retained_one
    }

    /// Probability that no excitation leaked out, two-photon sector.
    pub fn survival_two(&self) -> f64 {
        self.released_two + self.retained_two
    }
}

/// Fidelity summary of one gate run.
#[derive(Clone, Debug, Serialize)]
pub struct FidelityReport {
    pub ensemble: Ensemble,
    pub s1: C64,
    pub s2: C64,
    pub norms: SectorNorms,
    pub state_fidelity: f64,
    pub conditional_fidelity: Option<f64>,
    pub gate_error: f64,
    pub conditional_gate_error: Option<f64>,
    pub zeta_sq: Option<f64>,
    pub theta_sq: Option<f64>,
    pub load_probability_one: f64,
    pub load_probability_two: f64,
}

impl FidelityReport {
    pub fn new(
        amps: ChannelAmplitudes,
        norms: SectorNorms,
        ensemble: Ensemble,
        load_probability_one: f64,
        load_probability_two: f64,
    ) -> Result<Self> {
        let balanced = LogicalInput::balanced();
        let cond = conditional_amplitudes(&amps, norms.survival_one(), norms.survival_two()).ok();
        let weights = branch_weights(&balanced)?;
        Ok(FidelityReport {
            ensemble,
            s1: amps.s1,
            s2: amps.s2,
            norms,
            state_fidelity: state_fidelity(&balanced, &amps),
            conditional_fidelity: cond.map(|c| state_fidelity(&balanced, &c)),
            gate_error: gate_error(&amps, ensemble),
            conditional_gate_error: cond.map(|c| gate_error(&c, ensemble)),
            zeta_sq: weights.zeta_sq,
            theta_sq: weights.theta_sq,
            load_probability_one,
            load_probability_two,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_input(rng: &mut ChaCha8Rng) -> LogicalInput {
        let mut pair = || {
            let a = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            let b = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            let n = (a.norm_sqr() + b.norm_sqr()).sqrt();
            (a / n, b / n)
        };
        let (alpha, beta) = pair();
        let (zeta, theta) = pair();
        LogicalInput::new(alpha, beta, zeta, theta).unwrap()
    }

    fn random_amps(rng: &mut ChaCha8Rng) -> ChannelAmplitudes {
        ChannelAmplitudes {
            s1: C64::from_polar(rng.random_range(0.0..1.0), rng.random_range(-3.2..3.2)),
            s2: C64::from_polar(rng.random_range(0.0..1.0), rng.random_range(-3.2..3.2)),
        }
    }

    #[test]
    fn target_flips_only_the_both_ones_branch() {
        let i = LogicalInput::balanced();
        let t = i.target_state();
        assert!((t.get(&[1, 0, 1, 0]).unwrap() - 0.5).norm() < 1e-15);
        assert!((t.get(&[1, 0, 0, 1]).unwrap() - 0.5).norm() < 1e-15);
        assert!((t.get(&[0, 1, 1, 0]).unwrap() - 0.5).norm() < 1e-15);
        assert!((t.get(&[0, 1, 0, 1]).unwrap() + 0.5).norm() < 1e-15);
    }

    #[test]
    fn formula_matches_fock_space() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let i = random_input(&mut rng);
            let a = random_amps(&mut rng);
            let f = state_fidelity(&i, &a);
            let g = state_fidelity_fock(&i, &a).unwrap();
            assert!((f - g).abs() < 1e-12, "{f} vs {g}");
        }
    }

    #[test]
    fn ideal_channel_is_perfect_for_every_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let i = random_input(&mut rng);
            assert!((state_fidelity(&i, &ChannelAmplitudes::ideal()) - 1.0).abs() < 1e-14);
            assert!((state_fidelity_fock(&i, &ChannelAmplitudes::ideal()).unwrap() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn identity_channel_is_not_the_gate() {
        let one = C64::new(1.0, 0.0);
        let f = state_fidelity_fock(&LogicalInput::balanced(), &ChannelAmplitudes { s1: one, s2: one }).unwrap();
        assert!((f - 0.25).abs() < 1e-14);
        assert_eq!(capture_release_channel(&ChannelAmplitudes { s1: one, s2: one }, &LogicalInput::balanced().to_state()), LogicalInput::balanced().to_state());
    }

    #[test]
    fn branch_weights_recover_the_second_qubit() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let i = random_input(&mut rng);
            let w = branch_weights(&i).unwrap();
            assert!((w.zeta_sq.unwrap() - i.zeta.norm_sqr()).abs() < 1e-12);
            assert!((w.theta_sq.unwrap() - i.theta.norm_sqr()).abs() < 1e-12);
        }
    }

    #[test]
    fn conditional_is_invariant_under_uniform_loss() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let i = random_input(&mut rng);
        let a = ChannelAmplitudes {
            s1: C64::from_polar(1.0, 0.3),
            s2: C64::from_polar(1.0, 2.9),
        };
        let base = conditional_fidelity(&i, &a, 1.0, 1.0).unwrap();
        for eta in [0.9, 0.5, 0.1] {
            let lossy = ChannelAmplitudes {
                s1: a.s1 * eta,
                s2: a.s2 * eta * eta,
            };
            let c = conditional_fidelity(&i, &lossy, eta * eta, eta.powi(4)).unwrap();
            assert!((c - base).abs() < 1e-12);
            assert!(c >= state_fidelity(&i, &lossy));
        }
        assert!(matches!(conditional_fidelity(&i, &a, 0.0, 1.0), Err(Error::UndefinedConditional(_))));
    }

    #[test]
    fn ensembles_agree_for_phase_perfect_channel() {
        let s1 = C64::from_polar(0.8, 0.7);
        let a = ChannelAmplitudes { s1, s2: -s1 * s1 };
        let single = gate_error(&a, Ensemble::Balanced);
        let avg = gate_error(&a, Ensemble::BasisAverage);
        assert!((single - avg).abs() < 1e-14);
        assert!(gate_error(&ChannelAmplitudes::ideal(), Ensemble::BasisAverage).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn fidelity_is_a_probability(
            r1 in 0.0f64..1.0, p1 in -4.0f64..4.0, r2 in 0.0f64..1.0, p2 in -4.0f64..4.0, seed in 0u64..1000,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let i = random_input(&mut rng);
            let f = state_fidelity(&i, &ChannelAmplitudes { s1: C64::from_polar(r1, p1), s2: C64::from_polar(r2, p2) });
            prop_assert!((-1e-15..=1.0 + 1e-12).contains(&f));
        }
    }
}

//! Closed-form free evolution of the storage mode b̂ and the emitter at
//! constant detuning, used as an oracle for the integrators.

use num_complex::Complex64 as C64;

use crate::model::SystemParams;

/// Eigenvalues λ± of the 2×2 free-evolution generator and the complex
/// frequency ζ with λ± = ½(−(γ_e + κ_l)/2 − iΩ₀ ± ζ).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DressedSpectrum {
    pub lambda_plus: C64,
    pub lambda_minus: C64,
    pub zeta: C64,
}

impl DressedSpectrum {
    /// Effective Rabi frequency, Im ζ for lossless parameters.
    pub fn rabi_frequency(&self) -> f64 {
        (self.lambda_plus - self.lambda_minus).norm()
    }
}

pub fn dressed_spectrum(params: &SystemParams, omega0: f64) -> DressedSpectrum {
    let kl = params.kappa_lb();
    let ge = params.gamma_e;
    let g = params.g;
    let inner = C64::new(0.5 * (ge - kl), omega0);
    let zeta = (inner * inner - 4.0 * g * g).sqrt();
    let base = C64::new(-0.5 * (ge + kl), -omega0);
    DressedSpectrum {
        lambda_plus: 0.5 * (base + zeta),
        lambda_minus: 0.5 * (base - zeta),
        zeta,
    }
}

/// (ψ_b(t), ψ_e(t)) for ψ_b(0) = 1, ψ_e(0) = 0 and Λ = 0 at constant Ω₀.
pub fn free_evolution_analytic(params: &SystemParams, omega0: f64, t: f64) -> (C64, C64) {
    // exp(At) = e^{mt}[cosh(qt)·1 + sinh(qt)/q·(A − m)] for a 2×2 matrix A
    // with mean eigenvalue m and half-splitting q.
    let a = C64::new(-0.5 * params.kappa_lb(), 0.0);
    let d = C64::new(-0.5 * params.gamma_e, -omega0);
    let c = C64::new(0.0, -params.g);
    let m = 0.5 * (a + d);
    let half = 0.5 * (a - d);
    let q = (half * half + c * c).sqrt();
    let em = (m * t).exp();
    let sinhc = if q.norm() * t.abs() < 1e-8 {
        C64::new(t, 0.0)
    } else {
        (q * t).sinh() / q
    };
    let cosh = (q * t).cosh();
    (em * (cosh + sinhc * (a - m)), em * sinhc * c)
}

/// Peak emitter population 4g²/(4g² + Ω₀²) and its time π/√(4g² + Ω₀²) for
/// lossless free evolution from |01g⟩.
pub fn emitter_peak(g: f64, omega0: f64) -> (f64, f64) {
    let w2 = 4.0 * g * g + omega0 * omega0;
    (4.0 * g * g / w2, std::f64::consts::PI / w2.sqrt())
}

/// Difference of the two- and one-excitation dressed splittings,
/// √(8g² + Ω₀²) − √(4g² + Ω₀²).
pub fn two_photon_phase_shift(params: &SystemParams, omega0: f64) -> f64 {
    let g2 = params.g * params.g;
    (8.0 * g2 + omega0 * omega0).sqrt() - (4.0 * g2 + omega0 * omega0).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn lossless(g: f64) -> SystemParams {
        SystemParams {
            g,
            ..SystemParams::reference()
        }
    }

    /// Lossless closed form written out with trigonometric functions.
    fn trig_form(g: f64, om: f64, t: f64) -> (C64, C64) {
        let w = (4.0 * g * g + om * om).sqrt();
        let ph = C64::from_polar(1.0, -0.5 * om * t);
        let (s, c) = (0.5 * w * t).sin_cos();
        (ph * C64::new(c, om / w * s), ph * C64::new(0.0, -2.0 * g / w * s))
    }

    #[test]
    fn matches_trigonometric_form() {
        for (g, om) in [(0.4, 6.0), (1.0, 0.0), (0.2, 10.0)] {
            let p = lossless(g);
            for t in [0.0, 0.3, 1.7, 12.0] {
                let (b, e) = free_evolution_analytic(&p, om, t);
                let (b2, e2) = trig_form(g, om, t);
                assert!((b - b2).norm() < 1e-12 && (e - e2).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn initial_condition() {
        let (b, e) = free_evolution_analytic(&lossless(0.4), 6.0, 0.0);
        assert_eq!((b, e), (C64::new(1.0, 0.0), C64::new(0.0, 0.0)));
    }

    #[test]
    fn full_rabi_transfer_on_resonance() {
        let g = 0.7;
        let (b, e) = free_evolution_analytic(&lossless(g), 0.0, PI / (2.0 * g));
        assert!(b.norm() < 1e-12);
        assert!((e - C64::new(0.0, -1.0)).norm() < 1e-12);
    }

    #[test]
    fn emitter_peak_from_closed_form() {
        let (g, om) = (0.4, 6.0);
        let (pmax, tmax) = emitter_peak(g, om);
        assert!((pmax - 4.0 / 229.0).abs() < 1e-15);
        let (_, e) = free_evolution_analytic(&lossless(g), om, tmax);
        assert!((e.norm_sqr() - pmax).abs() < 1e-12);
    }

    #[test]
    fn spectrum_limits() {
        let p = lossless(0.5);
        let s = dressed_spectrum(&p, 0.0);
        assert!((s.lambda_plus - C64::new(0.0, 0.5)).norm() < 1e-12);
        assert!((s.lambda_minus - C64::new(0.0, -0.5)).norm() < 1e-12);
        let om = 50.0 * p.g;
        let s = dressed_spectrum(&p, om);
        let asym = C64::new(0.0, p.g * p.g / om);
        assert!((s.lambda_plus - asym).norm() / s.lambda_plus.norm() < 0.01);
        let asym_m = C64::new(0.0, -(om + p.g * p.g / om));
        assert!((s.lambda_minus - asym_m).norm() / s.lambda_minus.norm() < 0.01);
    }

    #[test]
    fn rabi_frequency_matches_oscillation_period() {
        let p = lossless(0.4);
        let om = 6.0;
        let w = dressed_spectrum(&p, om).rabi_frequency();
        assert!((w - (4.0 * 0.16 + 36.0f64).sqrt()).abs() < 1e-12);
        // Emitter population returns to zero after one period 2π/w.
        let (_, e) = free_evolution_analytic(&p, om, 2.0 * PI / w);
        assert!(e.norm() < 1e-12);
    }

    #[test]
    fn spectrum_is_eigenvalues_of_lossy_generator() {
        let mut p = lossless(0.4);
        p.kappa_l = 0.3;
        p.gamma_e = 0.1;
        let om = 2.0;
        let s = dressed_spectrum(&p, om);
        let a = C64::new(-0.15, 0.0);
        let d = C64::new(-0.05, -om);
        let tr = a + d;
        let det = a * d + p.g * p.g;
        for l in [s.lambda_plus, s.lambda_minus] {
            assert!((l * l - tr * l + det).norm() < 1e-12);
        }
    }

    #[test]
    fn phase_shift_values() {
        let p = lossless(0.4);
        assert!((two_photon_phase_shift(&p, 0.0) - (2.0 * 2f64.sqrt() - 2.0) * 0.4).abs() < 1e-14);
        assert_eq!(two_photon_phase_shift(&lossless(0.0), 3.0), 0.0);
        let best = (0..=200)
            .map(|i| i as f64 * 0.04)
            .max_by(|a, b| two_photon_phase_shift(&p, *a).partial_cmp(&two_photon_phase_shift(&p, *b)).unwrap())
            .unwrap();
        assert_eq!(best, 0.0);
    }
}

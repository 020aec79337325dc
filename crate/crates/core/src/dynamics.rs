//! Linearised fluctuation dynamics around a mean-field branch.
//!
//! Fluctuations are written in the quadratures `X = (a + a†)/√2`,
//! `Y = (a - a†)/(√2 i)` of the cavity and `Q`, `P` of the Bogoliubov mode, so
//! the vacuum variance is 1/2 and the cavity diffusion entry is `kappa`.

use crate::meanfield::MeanFieldBranch;
use crate::model::{bogoliubov_frequency, thermal_occupation, DerivedParams, ModelError};
use nalgebra::Matrix4;
use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::SQRT_2;
use thiserror::Error;

/// Real parts within this fraction of `kappa` of zero are reported as marginal.
pub const MARGINAL_BAND: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("drift matrix is not finite")]
    NonFinite,
    #[error(
        "eigenvalue and Routh-Hurwitz verdicts disagree (max real part {max_real_part:e} rad/s, \
         Routh-Hurwitz {routh_hurwitz_pass})"
    )]
    InconsistentVerdict {
        max_real_part: f64,
        routh_hurwitz_pass: bool,
    },
}

/// Drift and diffusion matrices of one branch over `(X, Y, Q, P)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DriftDiffusion {
    pub drift: Matrix4<f64>,
    pub diffusion: Matrix4<f64>,
    pub g_r: f64,
    pub g_i: f64,
    pub f_r: f64,
    pub f_i: f64,
    /// Thermal occupation of the Bogoliubov mode entering the diffusion.
    pub n_c: f64,
    pub kappa: f64,
}

pub fn build_drift_diffusion(
    d: &DerivedParams,
    b: &MeanFieldBranch,
) -> Result<DriftDiffusion, DynamicsError> {
    let (alpha, beta) = (b.alpha, b.beta);
    let g_r = 2.0 * alpha.re * (d.zeta + d.g * beta.re);
    let g_i = 2.0 * alpha.im * (d.zeta + d.g * beta.re);
    let f_r = 2.0 * d.g * alpha.re * beta.im;
    let f_i = 2.0 * d.g * alpha.im * beta.im;
    let (k, gm, delta) = (d.kappa, d.gamma, b.delta);
    #[rustfmt::skip]
    let drift = Matrix4::new(
        -k,     delta,  g_i,           f_i,
        -delta, -k,     -g_r,          -f_r,
        f_r,    f_i,    -gm,           b.omega_minus,
        -g_r,   -g_i,   -b.omega_plus, -gm,
    );
    // with g = 0 this is the bare Bogoliubov frequency
    let n_c = thermal_occupation(bogoliubov_frequency(d, b.n_photon), d.temperature)?;
    let atomic = gm * (2.0 * n_c + 1.0);
    let diffusion = Matrix4::from_diagonal(&nalgebra::Vector4::new(k, k, atomic, atomic));
    Ok(DriftDiffusion {
        drift,
        diffusion,
        g_r,
        g_i,
        f_r,
        f_i,
        n_c,
        kappa: k,
    })
}

/// Noise-free right-hand side of the nonlinear Heisenberg-Langevin equations
/// for the quadratures `(X, Y, Q, P)` of the field amplitudes.
pub fn langevin_drift_field(d: &DerivedParams, state: [f64; 4]) -> [f64; 4] {
    let i = Complex64::i();
    let a = Complex64::new(state[0], state[1]) / SQRT_2;
    let c = Complex64::new(state[2], state[3]) / SQRT_2;
    let photons = a.norm_sqr();
    let da = -(i * d.delta_c + d.kappa) * a - i * d.zeta * a * (c + c.conj())
        - i * d.g * a * c.norm_sqr()
        - d.eta;
    let dc = -(i * d.omega_c + d.gamma) * c - 0.5 * i * d.omega_sw * c.conj()
        - i * d.zeta * photons
        - i * d.g * photons * c;
    [SQRT_2 * da.re, SQRT_2 * da.im, SQRT_2 * dc.re, SQRT_2 * dc.im]
}

/// The branch's mean fields as a point in quadrature space.
pub fn fixed_point_state(b: &MeanFieldBranch) -> [f64; 4] {
    [
        SQRT_2 * b.alpha.re,
        SQRT_2 * b.alpha.im,
        SQRT_2 * b.beta.re,
        SQRT_2 * b.beta.im,
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Stable,
    Unstable,
    Marginal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StabilityReport {
    pub eigenvalues: [Complex64; 4],
    pub max_real_part: f64,
    /// Characteristic polynomial `l^4 + c[3] l^3 + c[2] l^2 + c[1] l + c[0]`.
    pub characteristic: [f64; 4],
    pub routh_hurwitz_pass: bool,
    /// `max_real_part < 0`.
    pub stable: bool,
    pub verdict: Verdict,
}

impl StabilityReport {
    /// Stable and outside the marginal band.
    pub fn strictly_stable(&self) -> bool {
        self.verdict == Verdict::Stable
    }
}

/// Coefficients `[c0, c1, c2, c3]` of `det(l I - A) = l^4 + c3 l^3 + c2 l^2 + c1 l + c0`
/// from traces of matrix powers (Faddeev-LeVerrier).
pub fn characteristic_coefficients(a: &Matrix4<f64>) -> [f64; 4] {
    let id = Matrix4::<f64>::identity();
    let mut m = *a;
    let c3 = -m.trace();
    m = a * (m + id * c3);
    let c2 = -m.trace() / 2.0;
    m = a * (m + id * c2);
    let c1 = -m.trace() / 3.0;
    m = a * (m + id * c1);
    let c0 = -m.trace() / 4.0;
    [c0, c1, c2, c3]
}

/// Routh-Hurwitz test for a monic quartic with coefficients `[c0, c1, c2, c3]`.
pub fn routh_hurwitz_quartic(c: &[f64; 4]) -> bool {
    let [a0, a1, a2, a3] = *c;
    let h2 = a3 * a2 - a1;
    a3 > 0.0 && h2 > 0.0 && h2 * a1 - a3 * a3 * a0 > 0.0 && a0 > 0.0
}

pub fn classify_stability(dd: &DriftDiffusion) -> Result<StabilityReport, DynamicsError> {
    let a = dd.drift;
    if a.iter().any(|x| !x.is_finite()) {
        return Err(DynamicsError::NonFinite);
    }
    let ev = a.complex_eigenvalues();
    let mut eigenvalues = [ev[0], ev[1], ev[2], ev[3]];
    eigenvalues.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
    let max_real_part = eigenvalues.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);

    // polynomial of A / s has coefficients c_k / s^(4-k); signs are unchanged
    let scale = a.amax().max(f64::MIN_POSITIVE);
    let scaled = characteristic_coefficients(&(a / scale));
    let characteristic = [
        scaled[0] * scale.powi(4),
        scaled[1] * scale.powi(3),
        scaled[2] * scale.powi(2),
        scaled[3] * scale,
    ];
    let routh_hurwitz_pass = routh_hurwitz_quartic(&scaled);

    let stable = max_real_part < 0.0;
    let verdict = if max_real_part.abs() <= MARGINAL_BAND * dd.kappa {
        Verdict::Marginal
    } else if stable {
        Verdict::Stable
    } else {
        Verdict::Unstable
    };
    if verdict != Verdict::Marginal && routh_hurwitz_pass != stable {
        return Err(DynamicsError::InconsistentVerdict {
            max_real_part,
            routh_hurwitz_pass,
        });
    }
    Ok(StabilityReport {
        eigenvalues,
        max_real_part,
        characteristic,
        routh_hurwitz_pass,
        stable,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::meanfield::enumerate_branches;
    use crate::model::{derive_params, SystemParams};

    fn params(delta_c_k: f64, eta_k: f64, sw_r: f64, ck: bool) -> DerivedParams {
        let base = SystemParams::experimental();
        derive_params(&SystemParams {
            delta_c: delta_c_k * base.kappa,
            eta: eta_k * base.kappa,
            omega_sw: sw_r * base.omega_r,
            ck_enabled: ck,
            ..base
        })
        .unwrap()
    }

    fn with_drift(a: Matrix4<f64>) -> DriftDiffusion {
        DriftDiffusion {
            drift: a,
            diffusion: Matrix4::identity(),
            g_r: 0.0,
            g_i: 0.0,
            f_r: 0.0,
            f_i: 0.0,
            n_c: 0.0,
            kappa: 1.0,
        }
    }

    #[test]
    fn undriven_branch_is_block_diagonal() {
        let d = params(2.0, 0.0, 1.0, true);
        let b = enumerate_branches(&d).branches[0];
        let dd = build_drift_diffusion(&d, &b).unwrap();
        assert_eq!((dd.g_r, dd.g_i, dd.f_r, dd.f_i), (0.0, 0.0, 0.0, 0.0));
        let a = dd.drift;
        assert_eq!(a.fixed_view::<2, 2>(0, 2).amax(), 0.0);
        assert_eq!(a.fixed_view::<2, 2>(2, 0).amax(), 0.0);
        assert_eq!(a[(0, 0)], -d.kappa);
        assert_eq!(a[(0, 1)], d.delta_c);
        assert_eq!(a[(1, 0)], -d.delta_c);
        assert_eq!(a[(2, 3)], d.omega_minus(0.0));
        assert_eq!(a[(3, 2)], -d.omega_plus(0.0));
        assert_eq!(a[(2, 2)], -d.gamma);
    }

    #[test]
    fn no_cross_kerr_couplings_without_g() {
        let d = params(-3.0, 2.0, 1.0, false);
        for b in enumerate_branches(&d).branches {
            let dd = build_drift_diffusion(&d, &b).unwrap();
            assert_eq!((dd.f_r, dd.f_i), (0.0, 0.0));
            assert_eq!(dd.g_r, 2.0 * b.alpha.re * d.zeta);
            assert_eq!(dd.drift[(0, 3)], 0.0);
            assert_eq!(dd.drift[(2, 0)], 0.0);
        }
    }

    #[test]
    fn real_alpha_gives_standard_optomechanical_form() {
        // Delta = 0 makes alpha real
        let d = params(0.0, 1.0, 1.0, false);
        let mut b = enumerate_branches(&d).branches[0];
        b.delta = 0.0;
        b.alpha = Complex64::new(-d.eta / d.kappa, 0.0);
        let dd = build_drift_diffusion(&d, &b).unwrap();
        assert_eq!(dd.g_i, 0.0);
        assert_eq!((dd.f_r, dd.f_i), (0.0, 0.0));
    }

    #[test]
    fn diffusion_diagonal() {
        let d = params(2.0, 2.0, 1.0, true);
        let b = enumerate_branches(&d).branches[0];
        let dd = build_drift_diffusion(&d, &b).unwrap();
        let nc = thermal_occupation(bogoliubov_frequency(&d, b.n_photon), d.temperature).unwrap();
        assert_eq!(dd.n_c, nc);
        let diag = dd.diffusion.diagonal();
        assert_eq!(diag[0], d.kappa);
        assert_eq!(diag[1], d.kappa);
        assert_eq!(diag[2], d.gamma * (2.0 * nc + 1.0));
        assert_eq!(dd.diffusion.amax(), d.kappa);
    }

    #[test]
    fn field_vanishes_at_fixed_points() {
        for ck in [false, true] {
            let d = params(6.0, 2.0, 1.0, ck);
            let set = enumerate_branches(&d);
            assert_eq!(set.len(), 3);
            for b in set.branches {
                let v = langevin_drift_field(&d, fixed_point_state(&b));
                let mag = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
                assert!(mag < 1e-8 * d.eta, "residual field {mag:e}");
            }
        }
    }

    #[test]
    fn zero_field_when_undriven_at_origin() {
        let d = params(2.0, 0.0, 1.0, true);
        assert_eq!(langevin_drift_field(&d, [0.0; 4]), [0.0; 4]);
    }

    #[test]
    fn sectors_decouple_without_interactions() {
        let base = SystemParams::experimental();
        let d = derive_params(&SystemParams {
            g0: 0.0,
            omega_sw: 0.0,
            eta: base.kappa,
            ..base
        })
        .unwrap();
        let x = [0.3, -0.2, 1.1, 0.4];
        let f0 = langevin_drift_field(&d, x);
        for (j, step) in [(2usize, 0.7), (3, -0.5), (0, 0.2), (1, 0.9)] {
            let mut y = x;
            y[j] += step;
            let f1 = langevin_drift_field(&d, y);
            let other = if j < 2 { [2, 3] } else { [0, 1] };
            for k in other {
                assert_eq!(f1[k], f0[k], "d f{k} / d x{j} should vanish");
            }
        }
    }

    #[test]
    fn damped_identity_is_stable() {
        let r = classify_stability(&with_drift(-Matrix4::identity())).unwrap();
        assert!(r.stable && r.routh_hurwitz_pass);
        assert_eq!(r.verdict, Verdict::Stable);
        for z in r.eigenvalues {
            assert!((z.re + 1.0).abs() < 1e-12 && z.im.abs() < 1e-12);
        }
    }

    #[test]
    fn positive_trace_is_unstable() {
        let mut a = -Matrix4::identity();
        a[(0, 0)] = 5.0;
        let r = classify_stability(&with_drift(a)).unwrap();
        assert!(!r.stable && !r.routh_hurwitz_pass);
        assert_eq!(r.verdict, Verdict::Unstable);
    }

    #[test]
    fn marginal_band() {
        let mut a = -Matrix4::identity();
        a[(0, 0)] = 1e-7;
        let r = classify_stability(&with_drift(a)).unwrap();
        assert_eq!(r.verdict, Verdict::Marginal);
        assert!(!r.strictly_stable());
    }

    #[test]
    fn middle_branch_unstable_lower_branch_stable() {
        for ck in [false, true] {
            let d = params(5.0, 2.0, 1.0, ck);
            let set = enumerate_branches(&d);
            assert_eq!(set.len(), 3);
            let verdicts: Vec<_> = set
                .branches
                .iter()
                .map(|b| classify_stability(&build_drift_diffusion(&d, b).unwrap()).unwrap().verdict)
                .collect();
            assert_eq!(verdicts, [Verdict::Stable, Verdict::Unstable, Verdict::Stable], "ck={ck}");
        }
    }

    #[test]
    fn determinant_matches_eigenvalue_product() {
        let d = params(4.0, 2.0, 1.0, true);
        for b in enumerate_branches(&d).branches {
            let dd = build_drift_diffusion(&d, &b).unwrap();
            let r = classify_stability(&dd).unwrap();
            let prod = r.eigenvalues.iter().fold(Complex64::new(1.0, 0.0), |p, z| p * z);
            let det = dd.drift.determinant();
            assert!((prod.re - det).abs() <= 1e-9 * det.abs());
            assert!(prod.im.abs() <= 1e-9 * det.abs());
            assert!((r.characteristic[0] - det).abs() <= 1e-9 * det.abs());
        }
    }

    #[test]
    fn faddeev_leverrier_on_known_polynomial() {
        // companion matrix of (l+1)(l+2)(l+3)(l+4) = l^4 + 10 l^3 + 35 l^2 + 50 l + 24
        #[rustfmt::skip]
        let a = Matrix4::new(
            0.0, 1.0, 0.0, 0.0,
            0.0, 0.0, 1.0, 0.0,
            0.0, 0.0, 0.0, 1.0,
            -24.0, -50.0, -35.0, -10.0,
        );
        let c = characteristic_coefficients(&a);
        for (got, want) in c.iter().zip([24.0, 50.0, 35.0, 10.0]) {
            assert!((got - want).abs() < 1e-12);
        }
        assert!(routh_hurwitz_quartic(&c));
    }
}

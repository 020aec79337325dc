//! Stationary Gaussian state of the fluctuations: the covariance matrix from
//! the Lyapunov equation `A V + V A^T = -D`, and the entanglement and
//! squeezing read off from it.

use crate::dynamics::{classify_stability, DriftDiffusion, DynamicsError, Verdict};
use crate::meanfield::MeanFieldBranch;
use crate::model::{bogoliubov_frequency, DerivedParams};
use nalgebra::{Matrix2, Matrix4, SMatrix, SVector};
use serde::Serialize;
use thiserror::Error;

/// Tolerance below 1/2 on symplectic eigenvalues that still counts as physical.
pub const PHYSICALITY_SLACK: f64 = 1e-9;
/// Accepted Lyapunov residual relative to `max |D|`.
pub const LYAPUNOV_RESIDUAL_BOUND: f64 = 1e-10;
/// Integration step bound in units of `1 / max |A|`.
pub const ODE_STEP_FACTOR: f64 = 1e-2;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SteadyStateError {
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error("no stationary state: drift is {verdict:?} with max real part {max_real_part:e} rad/s")]
    NotStable { verdict: Verdict, max_real_part: f64 },
    #[error("Lyapunov system is singular")]
    Singular,
    #[error("Lyapunov residual {residual:e} exceeds bound {bound:e}")]
    Residual { residual: f64, bound: f64 },
    #[error("covariance violates the uncertainty relation: symplectic eigenvalue {nu:e} < 1/2")]
    Unphysical { nu: f64 },
    #[error("partial-transpose discriminant {discriminant:e} is negative")]
    NegativeDiscriminant { discriminant: f64 },
    #[error("integration step underflow (t_final {t_final:e}, max |A| {scale:e})")]
    StepUnderflow { t_final: f64, scale: f64 },
}

/// Symmetric covariance `V_ij = <du_i du_j + du_j du_i>/2` over `(X, Y, Q, P)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CovarianceMatrix(pub Matrix4<f64>);

impl CovarianceMatrix {
    /// Two-mode vacuum, `I/2`.
    pub fn vacuum() -> Self {
        Self(Matrix4::identity() * 0.5)
    }

    pub fn matrix(&self) -> &Matrix4<f64> {
        &self.0
    }

    /// `(det A, det B, det C)` of the optical block, atomic block and their
    /// correlation block.
    pub fn block_determinants(&self) -> (f64, f64, f64) {
        let v = &self.0;
        let a: Matrix2<f64> = v.fixed_view::<2, 2>(0, 0).into();
        let b: Matrix2<f64> = v.fixed_view::<2, 2>(2, 2).into();
        let c: Matrix2<f64> = v.fixed_view::<2, 2>(0, 2).into();
        (a.determinant(), b.determinant(), c.determinant())
    }

    /// Both symplectic eigenvalues `(nu_-, nu_+)`.
    pub fn symplectic_eigenvalues(&self) -> (f64, f64) {
        let (da, db, dc) = self.block_determinants();
        let big = da + db + 2.0 * dc;
        let det = self.0.determinant();
        let disc = (big * big - 4.0 * det).max(0.0).sqrt();
        (((big - disc) / 2.0).max(0.0).sqrt(), ((big + disc) / 2.0).sqrt())
    }

    /// Uncertainty relation check with the [`PHYSICALITY_SLACK`] clamp.
    pub fn check_physical(&self) -> Result<(), SteadyStateError> {
        let (nu, _) = self.symplectic_eigenvalues();
        if nu < 0.5 - PHYSICALITY_SLACK || !nu.is_finite() {
            return Err(SteadyStateError::Unphysical { nu });
        }
        Ok(())
    }
}

fn sym_index(i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    // row-major upper triangle of a 4x4 matrix
    i * 4 - i * (i + 1) / 2 + j
}

/// `max |A V + V A^T + D|`.
pub fn lyapunov_residual(dd: &DriftDiffusion, v: &CovarianceMatrix) -> f64 {
    let a = dd.drift;
    (a * v.0 + v.0 * a.transpose() + dd.diffusion).amax()
}

/// Unique symmetric solution of `A V + V A^T = -D` for a strictly stable drift.
pub fn solve_lyapunov(dd: &DriftDiffusion) -> Result<CovarianceMatrix, SteadyStateError> {
    let report = classify_stability(dd)?;
    if !report.strictly_stable() {
        return Err(SteadyStateError::NotStable {
            verdict: report.verdict,
            max_real_part: report.max_real_part,
        });
    }
    let scale = dd.drift.amax().max(f64::MIN_POSITIVE);
    let a = dd.drift / scale;
    let rhs_d = dd.diffusion / scale;

    let mut system = SMatrix::<f64, 10, 10>::zeros();
    let mut rhs = SVector::<f64, 10>::zeros();
    for i in 0..4 {
        for j in i..4 {
            let row = sym_index(i, j);
            for k in 0..4 {
                system[(row, sym_index(k, j))] += a[(i, k)];
                system[(row, sym_index(i, k))] += a[(j, k)];
            }
            rhs[row] = -rhs_d[(i, j)];
        }
    }
    let lu = system.lu();
    let mut x = lu.solve(&rhs).ok_or(SteadyStateError::Singular)?;
    // one round of iterative refinement
    if let Some(dx) = lu.solve(&(rhs - system * x)) {
        x += dx;
    }
    let v = CovarianceMatrix(Matrix4::from_fn(|i, j| x[sym_index(i, j)]));

    let bound = LYAPUNOV_RESIDUAL_BOUND * dd.diffusion.amax();
    let residual = lyapunov_residual(dd, &v);
    if !(residual <= bound) {
        return Err(SteadyStateError::Residual { residual, bound });
    }
    v.check_physical()?;
    Ok(v)
}

/// One affine map `V -> V + E V + c` on column-major `vec(V)`.
#[derive(Clone, Copy)]
struct AffineStep {
    e: SMatrix<f64, 16, 16>,
    c: SVector<f64, 16>,
}

impl AffineStep {
    fn identity() -> Self {
        Self {
            e: SMatrix::zeros(),
            c: SVector::zeros(),
        }
    }

    /// `self` after `first`.
    fn after(&self, first: &Self) -> Self {
        Self {
            e: first.e + self.e + self.e * first.e,
            c: self.c + first.c + self.e * first.c,
        }
    }

    fn power(&self, mut n: u64) -> Self {
        let mut acc = Self::identity();
        let mut base = *self;
        while n > 0 {
            if n & 1 == 1 {
                acc = base.after(&acc);
            }
            n >>= 1;
            if n > 0 {
                base = base.after(&base);
            }
        }
        acc
    }
}

/// The classical 4th-order Runge-Kutta step of `dV/dt = A V + V A^T + D` as an
/// affine map. For a linear autonomous system the step is exactly
/// `V + hL R V + h R d` with `R = I + hL/2 + (hL)^2/6 + (hL)^3/24`.
fn rk4_affine_step(dd: &DriftDiffusion, h: f64) -> AffineStep {
    let a = dd.drift;
    let mut hl = SMatrix::<f64, 16, 16>::zeros();
    for k in 0..16 {
        let mut basis = Matrix4::<f64>::zeros();
        basis[k] = 1.0;
        let image = (a * basis + basis * a.transpose()) * h;
        hl.set_column(k, &SVector::<f64, 16>::from_column_slice(image.as_slice()));
    }
    let id = SMatrix::<f64, 16, 16>::identity();
    let hl2 = hl * hl;
    let r = id + hl * 0.5 + hl2 / 6.0 + hl2 * hl / 24.0;
    let d = SVector::<f64, 16>::from_column_slice(dd.diffusion.as_slice());
    AffineStep {
        e: hl * r,
        c: r * d * h,
    }
}

/// One explicit RK4 step, evaluated stage by stage.
pub fn rk4_moment_step(dd: &DriftDiffusion, v: &Matrix4<f64>, h: f64) -> Matrix4<f64> {
    let a = dd.drift;
    let rhs = |m: &Matrix4<f64>| a * m + m * a.transpose() + dd.diffusion;
    let k1 = rhs(v);
    let k2 = rhs(&(v + k1 * (h / 2.0)));
    let k3 = rhs(&(v + k2 * (h / 2.0)));
    let k4 = rhs(&(v + k3 * h));
    v + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
}

/// Step size and count used by [`integrate_moment_ode`] for `t_final`.
pub fn moment_ode_steps(dd: &DriftDiffusion, t_final: f64) -> Result<(f64, u64), SteadyStateError> {
    let scale = dd.drift.amax();
    let underflow = SteadyStateError::StepUnderflow { t_final, scale };
    if !(t_final > 0.0) || !t_final.is_finite() || !scale.is_finite() {
        return Err(underflow);
    }
    let steps = (t_final * scale / ODE_STEP_FACTOR).ceil().max(1.0);
    if steps > (1u64 << 53) as f64 {
        return Err(underflow);
    }
    let h = t_final / steps;
    if !(h > 0.0) || !h.is_normal() {
        return Err(underflow);
    }
    Ok((h, steps as u64))
}

/// Fixed-step RK4 solution of `dV/dt = A V + V A^T + D` at `t_final` from `v0`,
/// with step at most `1e-2 / max |A|`.
///
/// The whole trajectory is the `n`-fold composition of one affine step; the
/// composition is evaluated by repeated squaring so that long horizons (slowly
/// damped Bogoliubov modes) cost `O(log n)`.
pub fn integrate_moment_ode(
    dd: &DriftDiffusion,
    v0: &CovarianceMatrix,
    t_final: f64,
) -> Result<CovarianceMatrix, SteadyStateError> {
    let (h, steps) = moment_ode_steps(dd, t_final)?;
    let map = rk4_affine_step(dd, h).power(steps);
    let x0 = SVector::<f64, 16>::from_column_slice(v0.0.as_slice());
    let x = x0 + map.e * x0 + map.c;
    let m = Matrix4::from_column_slice(x.as_slice());
    Ok(CovarianceMatrix((m + m.transpose()) * 0.5))
}

/// Logarithmic negativity and the smallest symplectic eigenvalue of the
/// partially transposed covariance, `(E_N, eta_minus)`.
pub fn logarithmic_negativity(v: &CovarianceMatrix) -> Result<(f64, f64), SteadyStateError> {
    let (da, db, dc) = v.block_determinants();
    let sigma = da + db - 2.0 * dc;
    let det = v.0.determinant();
    let mut disc = sigma * sigma - 4.0 * det;
    if disc < 0.0 {
        if disc < -1e-12 * sigma * sigma.max(1.0) {
            return Err(SteadyStateError::NegativeDiscriminant { discriminant: disc });
        }
        disc = 0.0;
    }
    let eta_minus = ((sigma - disc.sqrt()).max(0.0) / 2.0).sqrt();
    let e_n = (-(2.0 * eta_minus).ln()).max(0.0);
    Ok((e_n, eta_minus))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Squeezing {
    /// `2 V_33 - 1`; negative means `Q` is squeezed.
    pub s_q: f64,
    /// `2 V_44 - 1`.
    pub s_p: f64,
    /// `<dc† dc> = (V_33 + V_44 - 1) / 2`.
    pub n_incoherent: f64,
}

pub fn squeezing_and_excitation(v: &CovarianceMatrix) -> Squeezing {
    let (v33, v44) = (v.0[(2, 2)], v.0[(3, 3)]);
    Squeezing {
        s_q: 2.0 * v33 - 1.0,
        s_p: 2.0 * v44 - 1.0,
        n_incoherent: 0.5 * (v33 + v44 - 1.0),
    }
}

/// Everything reported for a stable branch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ObservableSet {
    pub e_n: f64,
    pub eta_minus: f64,
    pub s_q: f64,
    pub s_p: f64,
    pub n_incoherent: f64,
    pub omega_b: f64,
    pub n_c: f64,
    pub covariance: CovarianceMatrix,
}

pub fn observables(
    d: &DerivedParams,
    b: &MeanFieldBranch,
    dd: &DriftDiffusion,
) -> Result<ObservableSet, SteadyStateError> {
    let v = solve_lyapunov(dd)?;
    let (e_n, eta_minus) = logarithmic_negativity(&v)?;
    let sq = squeezing_and_excitation(&v);
    Ok(ObservableSet {
        e_n,
        eta_minus,
        s_q: sq.s_q,
        s_p: sq.s_p,
        n_incoherent: sq.n_incoherent,
        omega_b: bogoliubov_frequency(d, b.n_photon),
        n_c: dd.n_c,
        covariance: v,
    })
}


#[cfg(test)]
mod props {
    use super::*;
    use crate::dynamics::build_drift_diffusion;
    use crate::meanfield::enumerate_branches;
    use crate::model::{derive_params, SystemParams};
    use proptest::prelude::*;

    fn rotation(phi: f64) -> Matrix2<f64> {
        Matrix2::new(phi.cos(), -phi.sin(), phi.sin(), phi.cos())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn negativity_invariant_under_local_rotations(
            delta in -10f64..10.0, eta in 0.2f64..3.0, phi1 in 0f64..6.3, phi2 in 0f64..6.3,
        ) {
            let base = SystemParams::experimental();
            let d = derive_params(&SystemParams {
                delta_c: delta * base.kappa,
                eta: eta * base.kappa,
                ..base
            }).unwrap();
            let set = enumerate_branches(&d);
            for b in &set.branches {
                let dd = build_drift_diffusion(&d, b).unwrap();
                let Ok(v) = solve_lyapunov(&dd) else { continue };
                let mut s = Matrix4::zeros();
                s.fixed_view_mut::<2, 2>(0, 0).copy_from(&rotation(phi1));
                s.fixed_view_mut::<2, 2>(2, 2).copy_from(&rotation(phi2));
                let rotated = CovarianceMatrix(s * v.0 * s.transpose());
                let (e1, _) = logarithmic_negativity(&v).unwrap();
                let (e2, _) = logarithmic_negativity(&rotated).unwrap();
                prop_assert!((e1 - e2).abs() < 1e-9);
            }
        }
    }
}

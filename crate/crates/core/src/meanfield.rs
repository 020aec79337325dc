//! Self-consistent steady-state mean fields.
//!
//! The atomic mean field and the effective detuning are closed-form functions
//! of the photon number `n = |alpha|^2`, so every steady state is a root of the
//! scalar function
//!
//! ```text
//! f(n) = n (Delta(n)^2 + kappa^2) - eta^2
//! ```
//!
//! on `[0, eta^2 / kappa^2]`. Roots are bracketed on a uniform grid (cells where
//! `f` grazes zero are re-scanned more densely) and polished by bisection, which makes the
//! enumeration exhaustive at grid resolution even close to folds.

use crate::model::DerivedParams;
use num_complex::Complex64;
use serde::Serialize;

/// Relative tolerance of the bisection polish.
pub const ROOT_TOLERANCE: f64 = 1e-12;
/// Roots closer than this (relative) are merged.
pub const DEDUP_TOLERANCE: f64 = 1e-9;

/// One self-consistent solution of the mean-field equations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanFieldBranch {
    pub branch_index: usize,
    pub n_photon: f64,
    pub alpha: Complex64,
    pub beta: Complex64,
    /// Effective detuning `delta_c + 2 zeta beta_R + g |beta|^2`.
    pub delta: f64,
    pub omega_plus: f64,
    pub omega_minus: f64,
    /// `|f(n)| / eta^2` at the accepted root (`|f(n)|` when `eta = 0`).
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum SolverWarning {
    /// Sign changes in two neighbouring grid cells: a fold is barely resolved.
    AdjacentSignChanges { n_lo: f64, n_hi: f64 },
    /// `|f|` dips close to zero between grid points without changing sign; a
    /// pair of roots may be hiding below grid resolution.
    PossibleMissedRootPair { n: f64, f_min: f64 },
}

impl std::fmt::Display for SolverWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SolverWarning::AdjacentSignChanges { n_lo, n_hi } => {
                write!(f, "adjacent sign changes between n={n_lo:e} and n={n_hi:e}")
            }
            SolverWarning::PossibleMissedRootPair { n, f_min } => {
                write!(f, "possible missed root pair near n={n:e} (|f|={f_min:e})")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BranchSet {
    /// Sorted by ascending photon number.
    pub branches: Vec<MeanFieldBranch>,
    pub warnings: Vec<SolverWarning>,
}

impl BranchSet {
    pub fn len(&self) -> usize {
        self.branches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.branches.is_empty()
    }
}

/// Grid settings of the branch search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchSearch {
    /// Points of the uniform scan over `[0, n_max]`.
    pub grid_points: usize,
    /// Density multiplier of the re-scan inside near-tangent cells.
    pub refine_factor: usize,
    /// A cell is re-scanned when both endpoint values are below this fraction
    /// of `max |f|` over the grid.
    pub refine_threshold: f64,
}

impl Default for BranchSearch {
    fn default() -> Self {
        Self {
            grid_points: 20_001,
            refine_factor: 10,
            refine_threshold: 1e-3,
        }
    }
}

/// Atomic mean field `beta(n) = -zeta n (Omega^- + i gamma) / (Omega^+ Omega^- + gamma^2)`.
pub fn atomic_field(d: &DerivedParams, n: f64) -> Complex64 {
    let op = d.omega_plus(n);
    let om = d.omega_minus(n);
    let den = op * om + d.gamma * d.gamma;
    let scale = -d.zeta * n / den;
    Complex64::new(scale * om, scale * d.gamma)
}

/// Effective detuning `Delta(n)`.
pub fn effective_detuning(d: &DerivedParams, n: f64) -> f64 {
    let beta = atomic_field(d, n);
    d.delta_c + 2.0 * d.zeta * beta.re + d.g * beta.norm_sqr()
}

/// Optical mean field `alpha = -eta / (i Delta + kappa)`.
pub fn optical_field(d: &DerivedParams, delta: f64) -> Complex64 {
    let den = delta * delta + d.kappa * d.kappa;
    Complex64::new(-d.eta * d.kappa / den, d.eta * delta / den)
}

/// `f(n) = n (Delta(n)^2 + kappa^2) - eta^2`; its roots are the self-consistent
/// photon numbers.
pub fn consistency_residual(d: &DerivedParams, n: f64) -> f64 {
    let delta = effective_detuning(d, n);
    n * (delta * delta + d.kappa * d.kappa) - d.eta * d.eta
}

/// `eta^2 / kappa^2`, an upper bound on every steady-state photon number.
pub fn upper_bound_photons(d: &DerivedParams) -> f64 {
    let r = d.eta / d.kappa;
    r * r
}

/// Builds the full branch record for a photon number `n`.
pub fn branch_at(d: &DerivedParams, n: f64, branch_index: usize) -> MeanFieldBranch {
    let beta = atomic_field(d, n);
    let delta = d.delta_c + 2.0 * d.zeta * beta.re + d.g * beta.norm_sqr();
    let f = n * (delta * delta + d.kappa * d.kappa) - d.eta * d.eta;
    let eta2 = d.eta * d.eta;
    MeanFieldBranch {
        branch_index,
        n_photon: n,
        alpha: optical_field(d, delta),
        beta,
        delta,
        omega_plus: d.omega_plus(n),
        omega_minus: d.omega_minus(n),
        residual: if eta2 > 0.0 { f.abs() / eta2 } else { f.abs() },
    }
}

pub fn enumerate_branches(d: &DerivedParams) -> BranchSet {
    enumerate_branches_with(d, &BranchSearch::default())
}

pub fn enumerate_branches_with(d: &DerivedParams, search: &BranchSearch) -> BranchSet {
    let f = |n: f64| consistency_residual(d, n);
    enumerate_roots(f, upper_bound_photons(d), search, |roots, warnings| BranchSet {
        branches: roots
            .iter()
            .enumerate()
            .map(|(i, &n)| branch_at(d, n, i))
            .collect(),
        warnings,
    })
}

/// Generic bracketing root enumeration on `[0, n_max (1 + 1e-6)]`, shared with
/// the reference implementation in [`crate::verify`].
pub(crate) fn enumerate_roots<F, T>(
    f: F,
    n_max: f64,
    search: &BranchSearch,
    finish: impl FnOnce(Vec<f64>, Vec<SolverWarning>) -> T,
) -> T
where
    F: Fn(f64) -> f64,
{
    if n_max <= 0.0 {
        return finish(vec![0.0], Vec::new());
    }
    let points = search.grid_points.max(3);
    let hi = n_max * (1.0 + 1e-6);
    let step = hi / (points - 1) as f64;
    let grid: Vec<f64> = (0..points).map(|i| i as f64 * step).collect();
    let values: Vec<f64> = grid.iter().map(|&n| f(n)).collect();
    let f_scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));

    let mut brackets: Vec<(f64, f64, f64)> = Vec::new();
    let mut exact: Vec<f64> = Vec::new();
    let mut warnings = Vec::new();
    let mut last_cell: Option<usize> = None;

    for i in 0..points - 1 {
        let (a, b) = (grid[i], grid[i + 1]);
        let (fa, fb) = (values[i], values[i + 1]);
        if fa == 0.0 {
            exact.push(a);
            continue;
        }
        if fa.signum() != fb.signum() && fb != 0.0 {
            if last_cell == Some(i.wrapping_sub(1)) {
                warnings.push(SolverWarning::AdjacentSignChanges { n_lo: grid[i - 1], n_hi: b });
            }
            last_cell = Some(i);
            brackets.push((a, b, fa));
            continue;
        }
        let near = search.refine_threshold * f_scale;
        if fa.abs() < near && fb.abs() < near && search.refine_factor > 1 {
            // near-tangent cell: look for a hidden pair of sign changes
            let sub = search.refine_factor;
            let h = (b - a) / sub as f64;
            let mut prev_n = a;
            let mut prev_f = fa;
            let mut found = false;
            let mut f_min = fa.abs().min(fb.abs());
            let mut n_min = if fa.abs() < fb.abs() { a } else { b };
            for k in 1..=sub {
                let n = if k == sub { b } else { a + k as f64 * h };
                let fv = if k == sub { fb } else { f(n) };
                if fv.abs() < f_min {
                    f_min = fv.abs();
                    n_min = n;
                }
                if fv == 0.0 && k < sub {
                    exact.push(n);
                    found = true;
                } else if prev_f != 0.0 && fv.signum() != prev_f.signum() {
                    brackets.push((prev_n, n, prev_f));
                    found = true;
                }
                prev_n = n;
                prev_f = fv;
            }
            if !found && f_min < 1e-9 * f_scale && is_interior_dip(&values, i) {
                warnings.push(SolverWarning::PossibleMissedRootPair { n: n_min, f_min });
            }
        }
    }
    if values[points - 1] == 0.0 {
        exact.push(grid[points - 1]);
    }

    let mut roots: Vec<f64> = brackets
        .into_iter()
        .map(|(a, b, fa)| bisect(&f, a, b, fa))
        .chain(exact)
        .collect();
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|later, earlier| {
        (*later - *earlier).abs() <= DEDUP_TOLERANCE * later.abs().max(earlier.abs())
    });
    finish(roots, warnings)
}

fn is_interior_dip(values: &[f64], i: usize) -> bool {
    let here = values[i].abs().min(values[i + 1].abs());
    let left = if i > 0 { values[i - 1].abs() } else { f64::INFINITY };
    let right = values.get(i + 2).map_or(f64::INFINITY, |v| v.abs());
    // a dip bordering a sign change is just the neighbouring root
    let sign = values[i].signum();
    let same_side = (i == 0 || values[i - 1].signum() == sign)
        && values.get(i + 2).is_none_or(|v| v.signum() == sign);
    here <= left && here <= right && same_side
}

fn bisect<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64, mut fa: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if fm.signum() == fa.signum() {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
        if b - a <= ROOT_TOLERANCE * b.abs() {
            break;
        }
    }
    0.5 * (a + b)
}

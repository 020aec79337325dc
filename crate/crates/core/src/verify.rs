//! Independent cross-checks of every stage of the pipeline.
//!
//! Each suite draws parameter points from a seeded ChaCha stream and compares
//! a production result against an oracle that shares as little code with it
//! as possible: finite differences of the nonlinear drift field, the
//! time-integrated moment equations, eigenvalues against Routh-Hurwitz, direct
//! substitution of mean fields, and closed-form Gaussian states.

use crate::dynamics::{
    build_drift_diffusion, classify_stability, fixed_point_state, langevin_drift_field,
    DriftDiffusion, DynamicsError, Verdict,
};
use crate::meanfield::{branch_at, enumerate_branches, upper_bound_photons, MeanFieldBranch};
use crate::model::{derive_params, thermal_occupation, DerivedParams, ModelError, SystemParams};
use crate::steadystate::{
    integrate_moment_ode, logarithmic_negativity, lyapunov_residual, solve_lyapunov,
    CovarianceMatrix, LYAPUNOV_RESIDUAL_BOUND,
};
use nalgebra::{Matrix4, Vector4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::fmt;

pub const JACOBIAN_TOLERANCE: f64 = 1e-6;
pub const ODE_TOLERANCE: f64 = 1e-6;
pub const FIELD_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    pub seed: u64,
    /// Relative scaling applied to the analytic drift matrix before it is
    /// compared with finite differences. Zero in normal operation.
    pub perturb_drift: f64,
    pub jacobian_points: usize,
    pub ode_points: usize,
    pub routh_hurwitz_draws: usize,
    pub substitution_draws: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            perturb_drift: 0.0,
            jacobian_points: 100,
            ode_points: 40,
            routh_hurwitz_draws: 10_000,
            substitution_draws: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteResult {
    pub name: &'static str,
    pub passed: bool,
    pub cases: usize,
    /// Largest error seen, in the suite's own relative measure.
    pub worst: f64,
    pub tolerance: f64,
    /// First failing case, with its parameters.
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifySummary {
    pub seed: u64,
    pub suites: Vec<SuiteResult>,
}

impl VerifySummary {
    pub fn all_passed(&self) -> bool {
        self.suites.iter().all(|s| s.passed)
    }
}

impl fmt::Display for VerifySummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "seed {}", self.seed)?;
        for s in &self.suites {
            write!(
                f,
                "{:<24} {}  cases={:<6} worst={:.3e} tol={:.1e}",
                s.name,
                if s.passed { "PASS" } else { "FAIL" },
                s.cases,
                s.worst,
                s.tolerance
            )?;
            if let Some(case) = &s.failure {
                write!(f, "  first failure: {case}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// A point drawn uniformly from the ranges the presets cover.
pub fn draw_point(rng: &mut ChaCha8Rng, base: &SystemParams) -> SystemParams {
    SystemParams {
        delta_c: rng.random_range(-20.0..20.0) * base.kappa,
        eta: rng.random_range(0.05..7.0) * base.kappa,
        omega_sw: rng.random_range(0.0..40.0) * base.omega_r,
        ck_enabled: rng.random_bool(0.5),
        ..*base
    }
}

fn describe(p: &SystemParams, branch: Option<usize>) -> String {
    let mut s = format!(
        "delta_c={:.6}kappa eta={:.6}kappa omega_sw={:.6}omegaR ck={}",
        p.delta_c / p.kappa,
        p.eta / p.kappa,
        p.omega_sw / p.omega_r,
        if p.ck_enabled { "on" } else { "off" }
    );
    if let Some(b) = branch {
        s.push_str(&format!(" branch={b}"));
    }
    s
}

/// Central finite-difference Jacobian of the nonlinear drift field at `state`,
/// with step `1e-6 * max(|x_j|, 1)` per variable.
pub fn finite_difference_jacobian(d: &DerivedParams, state: [f64; 4]) -> Matrix4<f64> {
    let mut jac = Matrix4::zeros();
    for j in 0..4 {
        let h = 1e-6 * state[j].abs().max(1.0);
        let (mut plus, mut minus) = (state, state);
        plus[j] += h;
        minus[j] -= h;
        let (fp, fm) = (langevin_drift_field(d, plus), langevin_drift_field(d, minus));
        for i in 0..4 {
            jac[(i, j)] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    jac
}

struct Tally {
    name: &'static str,
    tolerance: f64,
    cases: usize,
    worst: f64,
    failure: Option<String>,
}

impl Tally {
    fn new(name: &'static str, tolerance: f64) -> Self {
        Self {
            name,
            tolerance,
            cases: 0,
            worst: 0.0,
            failure: None,
        }
    }

    fn record(&mut self, error: f64, case: impl FnOnce() -> String) {
        self.cases += 1;
        if error > self.worst || error.is_nan() {
            self.worst = if error.is_nan() { f64::INFINITY } else { error };
        }
        if !(error <= self.tolerance) && self.failure.is_none() {
            self.failure = Some(format!("{} (error {error:.3e})", case()));
        }
    }

    fn fail(&mut self, case: String) {
        self.cases += 1;
        self.worst = f64::INFINITY;
        if self.failure.is_none() {
            self.failure = Some(case);
        }
    }

    fn finish(self) -> SuiteResult {
        SuiteResult {
            name: self.name,
            passed: self.failure.is_none() && self.cases > 0,
            cases: self.cases,
            worst: self.worst,
            tolerance: self.tolerance,
            failure: self.failure,
        }
    }
}

/// Stable branches of a random point, with everything needed downstream.
fn stable_branches(
    p: &SystemParams,
) -> Result<Vec<(DerivedParams, MeanFieldBranch, DriftDiffusion, f64)>, DynamicsError> {
    let d = derive_params(p)?;
    let mut out = Vec::new();
    for b in enumerate_branches(&d).branches {
        let dd = build_drift_diffusion(&d, &b)?;
        let report = classify_stability(&dd)?;
        if report.strictly_stable() {
            out.push((d, b, dd, report.max_real_part));
        }
    }
    Ok(out)
}

fn collect_stable(
    rng: &mut ChaCha8Rng,
    base: &SystemParams,
    wanted: usize,
    tally: &mut Tally,
    mut check: impl FnMut(&SystemParams, &DerivedParams, &MeanFieldBranch, &DriftDiffusion, f64, &mut Tally),
) {
    let mut found = 0;
    let mut attempts = 0;
    while found < wanted && attempts < 50 * wanted.max(1) {
        attempts += 1;
        let p = draw_point(rng, base);
        match stable_branches(&p) {
            Ok(list) => {
                for (d, b, dd, max_re) in list.iter().take(wanted - found) {
                    check(&p, d, b, dd, *max_re, tally);
                    found += 1;
                }
            }
            Err(e) => tally.fail(format!("{}: {e}", describe(&p, None))),
        }
    }
}

fn jacobian_suite(rng: &mut ChaCha8Rng, base: &SystemParams, opts: &VerifyOptions) -> SuiteResult {
    let mut tally = Tally::new("jacobian", JACOBIAN_TOLERANCE);
    collect_stable(rng, base, opts.jacobian_points, &mut tally, |p, d, b, dd, _, t| {
        let analytic = dd.drift * (1.0 + opts.perturb_drift);
        let numeric = finite_difference_jacobian(d, fixed_point_state(b));
        let err = (analytic - numeric).amax() / analytic.amax();
        t.record(err, || describe(p, Some(b.branch_index)));
    });
    tally.finish()
}

fn lyapunov_ode_suite(rng: &mut ChaCha8Rng, base: &SystemParams, opts: &VerifyOptions) -> SuiteResult {
    let mut tally = Tally::new("lyapunov_ode", ODE_TOLERANCE);
    collect_stable(rng, base, opts.ode_points, &mut tally, |p, _, b, dd, max_re, t| {
        let case = || describe(p, Some(b.branch_index));
        let v = match solve_lyapunov(dd) {
            Ok(v) => v,
            Err(e) => return t.fail(format!("{}: {e}", case())),
        };
        let res = lyapunov_residual(dd, &v) / (LYAPUNOV_RESIDUAL_BOUND * dd.diffusion.amax());
        match integrate_moment_ode(dd, &CovarianceMatrix::vacuum(), 50.0 / max_re.abs()) {
            Ok(w) => {
                let err = (w.0 - v.0).amax() / v.0.amax();
                // residual is folded in on the same scale as the tolerance
                t.record(err.max(res * ODE_TOLERANCE), case);
            }
            Err(e) => t.fail(format!("{}: {e}", case())),
        }
    });
    tally.finish()
}

/// Eigenvalue and Routh-Hurwitz verdicts on drift matrices built at random
/// photon numbers (not necessarily self-consistent) of random parameter
/// points. Marginal cases are skipped.
fn routh_hurwitz_suite(rng: &mut ChaCha8Rng, base: &SystemParams, opts: &VerifyOptions) -> SuiteResult {
    let mut tally = Tally::new("routh_hurwitz", 0.0);
    for _ in 0..opts.routh_hurwitz_draws {
        let p = draw_point(rng, base);
        let d = match derive_params(&p) {
            Ok(d) => d,
            Err(e) => {
                tally.fail(format!("{}: {e}", describe(&p, None)));
                continue;
            }
        };
        let n = rng.random_range(0.0..=1.0) * upper_bound_photons(&d);
        let b = branch_at(&d, n, 0);
        let outcome = build_drift_diffusion(&d, &b).and_then(|dd| classify_stability(&dd));
        match outcome {
            Ok(r) if r.verdict == Verdict::Marginal => {}
            Ok(r) => tally.record(if r.routh_hurwitz_pass == r.stable { 0.0 } else { 1.0 }, || {
                describe(&p, None)
            }),
            Err(e) => tally.fail(format!("{} n={n:e}: {e}", describe(&p, None))),
        }
    }
    tally.finish()
}

fn substitution_suite(rng: &mut ChaCha8Rng, base: &SystemParams, opts: &VerifyOptions) -> SuiteResult {
    let mut tally = Tally::new("meanfield_substitution", FIELD_TOLERANCE);
    for _ in 0..opts.substitution_draws {
        let p = draw_point(rng, base);
        let d = match derive_params(&p) {
            Ok(d) => d,
            Err(e) => {
                tally.fail(format!("{}: {e}", describe(&p, None)));
                continue;
            }
        };
        for b in enumerate_branches(&d).branches {
            let field = langevin_drift_field(&d, fixed_point_state(&b));
            let norm = field.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            tally.record(norm / d.eta, || describe(&p, Some(b.branch_index)));
        }
    }
    tally.finish()
}

fn two_mode_squeezed(r: f64) -> CovarianceMatrix {
    let (c, s) = ((2.0 * r).cosh() / 2.0, (2.0 * r).sinh() / 2.0);
    #[rustfmt::skip]
    let m = Matrix4::new(
        c, 0.0, s, 0.0,
        0.0, c, 0.0, -s,
        s, 0.0, c, 0.0,
        0.0, -s, 0.0, c,
    );
    CovarianceMatrix(m)
}

fn gaussian_suite(base: &SystemParams) -> SuiteResult {
    let mut tally = Tally::new("gaussian_analytic", 1e-9);
    match logarithmic_negativity(&CovarianceMatrix::vacuum()) {
        Ok((e_n, eta)) => tally.record(((e_n.abs()).max((eta - 0.5).abs())) * 1e3, || {
            "two-mode vacuum".into()
        }),
        Err(e) => tally.fail(format!("two-mode vacuum: {e}")),
    }
    for r in [0.1, 0.5, 1.0] {
        match logarithmic_negativity(&two_mode_squeezed(r)) {
            Ok((e_n, _)) => tally.record((e_n - 2.0 * r).abs(), || format!("two-mode squeezed r={r}")),
            Err(e) => tally.fail(format!("two-mode squeezed r={r}: {e}")),
        }
    }
    // undriven, uncoupled: vacuum cavity and thermal Bogoliubov mode
    let p = SystemParams {
        eta: 0.0,
        omega_sw: 0.0,
        ck_enabled: false,
        ..*base
    };
    let check = || -> Result<f64, String> {
        let d = derive_params(&p).map_err(|e: ModelError| e.to_string())?;
        let b = enumerate_branches(&d).branches[0];
        let v = build_drift_diffusion(&d, &b)
            .map_err(|e| e.to_string())
            .and_then(|dd| solve_lyapunov(&dd).map_err(|e| e.to_string()))?;
        let nc = thermal_occupation(d.omega_c, d.temperature).map_err(|e| e.to_string())?;
        let want = Matrix4::from_diagonal(&Vector4::new(0.5, 0.5, nc + 0.5, nc + 0.5));
        Ok((v.0 - want).amax() / want.amax())
    };
    match check() {
        Ok(err) => tally.record(err, || "decoupled thermal state".into()),
        Err(e) => tally.fail(format!("decoupled thermal state: {e}")),
    }
    tally.finish()
}

/// Runs every suite from one seed. Suites draw from independent streams so
/// that changing one suite's sample count does not reshuffle the others.
pub fn run_verification(base: &SystemParams, opts: &VerifyOptions) -> Result<VerifySummary, ModelError> {
    base.validate()?;
    let stream = |k: u64| {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        rng.set_stream(k);
        rng
    };
    let suites = vec![
        jacobian_suite(&mut stream(1), base, opts),
        lyapunov_ode_suite(&mut stream(2), base, opts),
        routh_hurwitz_suite(&mut stream(3), base, opts),
        substitution_suite(&mut stream(4), base, opts),
        gaussian_suite(base),
    ];
    Ok(VerifySummary {
        seed: opts.seed,
        suites,
    })
}

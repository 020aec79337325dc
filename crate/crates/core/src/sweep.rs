//! One-dimensional parameter sweeps, figure presets and paired cross-Kerr
//! comparisons.

use crate::dynamics::{build_drift_diffusion, classify_stability, DynamicsError, Verdict};
use crate::meanfield::{enumerate_branches_with, BranchSearch, MeanFieldBranch};
use crate::model::{bogoliubov_frequency, derive_params, validity_flags, DerivedParams, ModelError, SystemParams};
use crate::steadystate::{observables, SteadyStateError};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

/// Floor on the denominator of the relative photon-number difference.
pub const COMPARISON_EPSILON: f64 = 1e-12;
pub const DEFAULT_COUNT: usize = 501;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SweepError {
    #[error("invalid sweep: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("internal consistency failure at {var}={value:e} (ck {ck}): {reason}")]
    Consistency {
        var: SweepVar,
        value: f64,
        ck: bool,
        reason: String,
    },
    #[error("paired rows do not share a grid: {0}")]
    MismatchedGrids(String),
    #[error("cannot start worker pool: {0}")]
    Workers(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVar {
    DeltaC,
    Eta,
    OmegaSw,
}

impl SweepVar {
    pub fn name(self) -> &'static str {
        match self {
            Self::DeltaC => "delta_c",
            Self::Eta => "eta",
            Self::OmegaSw => "omega_sw",
        }
    }

    pub fn apply(self, base: &SystemParams, value: f64) -> SystemParams {
        let mut p = *base;
        match self {
            Self::DeltaC => p.delta_c = value,
            Self::Eta => p.eta = value,
            Self::OmegaSw => p.omega_sw = value,
        }
        p
    }
}

impl fmt::Display for SweepVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepVar {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "delta_c" => Ok(Self::DeltaC),
            "eta" => Ok(Self::Eta),
            "omega_sw" => Ok(Self::OmegaSw),
            _ => Err(format!("unknown sweep variable `{s}` (delta_c, eta, omega_sw)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CkMode {
    On,
    Off,
    Paired,
}

impl CkMode {
    /// Cross-Kerr settings in output order.
    pub fn settings(self) -> &'static [bool] {
        match self {
            Self::On => &[true],
            Self::Off => &[false],
            Self::Paired => &[false, true],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchPolicy {
    All,
    Lowest,
    Highest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    Fig2a,
    Fig2b,
    Fig3a,
    Fig3b,
    Fig4,
    Fig5,
    Fig6,
    Fig7,
    Fig8,
}

impl Preset {
    pub const ALL: [Preset; 9] = [
        Self::Fig2a,
        Self::Fig2b,
        Self::Fig3a,
        Self::Fig3b,
        Self::Fig4,
        Self::Fig5,
        Self::Fig6,
        Self::Fig7,
        Self::Fig8,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Fig2a => "fig2a",
            Self::Fig2b => "fig2b",
            Self::Fig3a => "fig3a",
            Self::Fig3b => "fig3b",
            Self::Fig4 => "fig4",
            Self::Fig5 => "fig5",
            Self::Fig6 => "fig6",
            Self::Fig7 => "fig7",
            Self::Fig8 => "fig8",
        }
    }

    /// Expands the preset on top of `base`, which supplies everything the
    /// preset does not pin (atom number, couplings, damping, temperature).
    pub fn spec(self, base: &SystemParams) -> SweepSpec {
        let (k, wr) = (base.kappa, base.omega_r);
        // (swept variable, range in kappa or omegaR, delta_c/kappa, eta/kappa, omega_sw/omegaR, ck)
        let (var, lo, hi, delta, eta, sw, ck) = match self {
            Self::Fig2a => (SweepVar::DeltaC, -10.0, 15.0, 0.0, 1.0, 1.0, CkMode::Paired),
            Self::Fig2b => (SweepVar::DeltaC, -10.0, 15.0, 0.0, 2.0, 1.0, CkMode::Paired),
            Self::Fig3a => (SweepVar::DeltaC, -10.0, 15.0, 0.0, 2.0, 5.0, CkMode::Paired),
            Self::Fig3b => (SweepVar::DeltaC, -10.0, 15.0, 0.0, 2.0, 10.0, CkMode::Paired),
            Self::Fig4 => (SweepVar::DeltaC, -10.0, 15.0, 0.0, 2.0, 1.0, CkMode::On),
            Self::Fig5 => (SweepVar::Eta, 0.0, 3.0, 5.0, 0.0, 1.0, CkMode::Paired),
            Self::Fig6 => (SweepVar::DeltaC, -10.0, 9.0, 0.0, 7.0, 1.0, CkMode::Paired),
            Self::Fig7 => (SweepVar::DeltaC, -20.0, 20.0, 0.0, 2.0, 1.0, CkMode::Paired),
            Self::Fig8 => (SweepVar::OmegaSw, 0.0, 40.0, -15.0, 5.0, 0.0, CkMode::Paired),
        };
        let unit = match var {
            SweepVar::OmegaSw => wr,
            _ => k,
        };
        SweepSpec {
            var,
            min: lo * unit,
            max: hi * unit,
            count: DEFAULT_COUNT,
            base: SystemParams {
                delta_c: delta * k,
                eta: eta * k,
                omega_sw: sw * wr,
                ..*base
            },
            ck_mode: ck,
            branch_policy: BranchPolicy::All,
            preset: Some(self),
            search: BranchSearch::default(),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Self::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| format!("unknown preset `{s}` (fig2a, fig2b, fig3a, fig3b, fig4..fig8)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSpec {
    pub var: SweepVar,
    /// Grid bounds in rad/s.
    pub min: f64,
    pub max: f64,
    pub count: usize,
    pub base: SystemParams,
    pub ck_mode: CkMode,
    pub branch_policy: BranchPolicy,
    pub preset: Option<Preset>,
    pub search: BranchSearch,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), SweepError> {
        if self.count < 2 {
            return Err(SweepError::InvalidSpec(format!("count must be at least 2, got {}", self.count)));
        }
        if !(self.min.is_finite() && self.max.is_finite() && self.min < self.max) {
            return Err(SweepError::InvalidSpec(format!(
                "need finite min < max, got [{}, {}]",
                self.min, self.max
            )));
        }
        if self.search.grid_points < 2 {
            return Err(SweepError::InvalidSpec("grid_points must be at least 2".into()));
        }
        self.base.validate()?;
        self.var.apply(&self.base, self.min).validate()?;
        self.var.apply(&self.base, self.max).validate()?;
        Ok(())
    }

    pub fn grid(&self) -> Vec<f64> {
        let last = (self.count - 1) as f64;
        (0..self.count)
            .map(|i| {
                if i + 1 == self.count {
                    self.max
                } else {
                    self.min + (self.max - self.min) * (i as f64 / last)
                }
            })
            .collect()
    }
}

/// One branch of one grid point under one cross-Kerr setting.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub sweep_var: SweepVar,
    pub sweep_value: f64,
    pub ck_enabled: bool,
    pub branch_index: usize,
    /// Number of mean-field branches at this point.
    pub n_branches: usize,
    pub n_photon: f64,
    pub alpha_re: f64,
    pub alpha_im: f64,
    pub beta_re: f64,
    pub beta_im: f64,
    pub delta_eff: f64,
    pub omega_b: f64,
    pub omega_b_ratio: f64,
    pub stable: bool,
    pub verdict: Verdict,
    pub max_real_part: f64,
    pub e_n: Option<f64>,
    pub s_q: Option<f64>,
    pub s_p: Option<f64>,
    pub n_incoherent: Option<f64>,
    pub lattice_ok: bool,
    pub bogoliubov_ok: Option<bool>,
    pub warnings: Vec<String>,
}

fn consistency(spec: &SweepSpec, value: f64, ck: bool, reason: impl fmt::Display) -> SweepError {
    SweepError::Consistency {
        var: spec.var,
        value,
        ck,
        reason: reason.to_string(),
    }
}

fn branch_row(
    spec: &SweepSpec,
    value: f64,
    d: &DerivedParams,
    b: &MeanFieldBranch,
    n_branches: usize,
    warnings: &[String],
) -> Result<SweepRow, SweepError> {
    let ck = d.ck_enabled;
    let fail = |e: &dyn fmt::Display| consistency(spec, value, ck, e);
    let dd = build_drift_diffusion(d, b).map_err(|e| fail(&e))?;
    let report = classify_stability(&dd).map_err(|e| fail(&e))?;
    let stable = report.strictly_stable();
    let obs = if stable {
        match observables(d, b, &dd) {
            Ok(o) => Some(o),
            Err(SteadyStateError::Dynamics(DynamicsError::Model(e))) => return Err(e.into()),
            Err(e) => return Err(fail(&e)),
        }
    } else {
        None
    };
    let omega_b = bogoliubov_frequency(d, b.n_photon);
    let flags = validity_flags(d, b.n_photon, obs.map(|o| o.n_incoherent));
    Ok(SweepRow {
        sweep_var: spec.var,
        sweep_value: value,
        ck_enabled: ck,
        branch_index: b.branch_index,
        n_branches,
        n_photon: b.n_photon,
        alpha_re: b.alpha.re,
        alpha_im: b.alpha.im,
        beta_re: b.beta.re,
        beta_im: b.beta.im,
        delta_eff: b.delta,
        omega_b,
        omega_b_ratio: omega_b / d.bare_bogoliubov_frequency(),
        stable,
        verdict: report.verdict,
        max_real_part: report.max_real_part,
        e_n: obs.map(|o| o.e_n),
        s_q: obs.map(|o| o.s_q),
        s_p: obs.map(|o| o.s_p),
        n_incoherent: obs.map(|o| o.n_incoherent),
        lattice_ok: flags.lattice_depth_ok,
        bogoliubov_ok: flags.bogoliubov_ok,
        warnings: warnings.to_vec(),
    })
}

/// Rows of one point and one cross-Kerr setting, already reduced by the
/// branch policy.
fn evaluate_setting(spec: &SweepSpec, value: f64, ck: bool) -> Result<Vec<SweepRow>, SweepError> {
    let p = SystemParams {
        ck_enabled: ck,
        ..spec.var.apply(&spec.base, value)
    };
    let d = derive_params(&p)?;
    let set = enumerate_branches_with(&d, &spec.search);
    let mut warnings: Vec<String> = set.warnings.iter().map(|w| w.to_string()).collect();
    let n = set.branches.len();
    if n != 1 && n != 3 {
        warnings.push(format!("unusual branch count {n}"));
    }
    let rows = set
        .branches
        .iter()
        .map(|b| branch_row(spec, value, &d, b, n, &warnings))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(select_branch(rows, spec.branch_policy))
}

/// Applies a branch policy to the rows of one point (sorted by photon number).
fn select_branch(rows: Vec<SweepRow>, policy: BranchPolicy) -> Vec<SweepRow> {
    let pick = match policy {
        BranchPolicy::All => return rows,
        BranchPolicy::Lowest => rows.iter().position(|r| r.stable),
        BranchPolicy::Highest => rows.iter().rposition(|r| r.stable),
    };
    let fallback = match policy {
        BranchPolicy::Lowest => 0,
        _ => rows.len().saturating_sub(1),
    };
    let mut rows = rows;
    match pick {
        Some(i) => vec![rows.swap_remove(i)],
        None if rows.is_empty() => rows,
        None => {
            let mut r = rows.swap_remove(fallback);
            r.warnings.push("no stable branch".into());
            vec![r]
        }
    }
}

fn evaluate_point(spec: &SweepSpec, value: f64) -> Result<Vec<SweepRow>, SweepError> {
    let mut per_ck = Vec::new();
    for &ck in spec.ck_mode.settings() {
        per_ck.push(evaluate_setting(spec, value, ck)?);
    }
    // interleave: branch index first, then cross-Kerr off before on
    let mut out = Vec::new();
    let longest = per_ck.iter().map(Vec::len).max().unwrap_or(0);
    for slot in 0..longest {
        for rows in &per_ck {
            if let Some(r) = rows.get(slot) {
                out.push(r.clone());
            }
        }
    }
    Ok(out)
}

/// Evaluates the sweep on the global worker pool.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>, SweepError> {
    spec.validate()?;
    let grid = spec.grid();
    let chunks = grid
        .par_iter()
        .map(|&v| evaluate_point(spec, v))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(chunks.into_iter().flatten().collect())
}

/// Evaluates the sweep on the calling thread only.
pub fn run_sweep_sequential(spec: &SweepSpec) -> Result<Vec<SweepRow>, SweepError> {
    spec.validate()?;
    let mut rows = Vec::new();
    for v in spec.grid() {
        rows.extend(evaluate_point(spec, v)?);
    }
    Ok(rows)
}

/// Evaluates the sweep with a dedicated pool of `workers` threads. Output is
/// identical for every worker count.
pub fn run_sweep_with_workers(spec: &SweepSpec, workers: usize) -> Result<Vec<SweepRow>, SweepError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| SweepError::Workers(e.to_string()))?;
    pool.install(|| run_sweep(spec))
}

/// Longest run of consecutive grid points with three branches, as
/// `(first value, last value)`, for the given cross-Kerr setting.
pub fn bistable_window(rows: &[SweepRow], ck: bool) -> Option<(f64, f64)> {
    let mut points: Vec<(f64, usize)> = Vec::new();
    for r in rows.iter().filter(|r| r.ck_enabled == ck) {
        if points.last().map(|p| p.0) != Some(r.sweep_value) {
            points.push((r.sweep_value, r.n_branches));
        }
    }
    let mut best: Option<(usize, usize)> = None;
    let mut start = None;
    for (i, &(_, n)) in points.iter().enumerate() {
        match (n == 3, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                if best.is_none_or(|(a, b)| i - s > b - a + 1) {
                    best = Some((s, i - 1));
                }
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        let e = points.len() - 1;
        if best.is_none_or(|(a, b)| e - s > b - a) {
            best = Some((s, e));
        }
    }
    best.map(|(a, b)| (points[a].0, points[b].0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CkComparison {
    /// `(sweep value, relative difference)`; `None` where either setting has
    /// no stable branch.
    pub points: Vec<(f64, Option<f64>)>,
    pub max: f64,
    pub argmax: Option<f64>,
}

fn policy_photons(rows: &[&SweepRow], policy: BranchPolicy) -> Option<f64> {
    let stable = rows.iter().filter(|r| r.stable).map(|r| r.n_photon);
    match policy {
        BranchPolicy::Highest => stable.reduce(f64::max),
        _ => stable.reduce(f64::min),
    }
}

fn grid_of(rows: &[SweepRow], ck: bool) -> Vec<f64> {
    let mut g: Vec<f64> = Vec::new();
    for r in rows.iter().filter(|r| r.ck_enabled == ck) {
        if g.last() != Some(&r.sweep_value) {
            g.push(r.sweep_value);
        }
    }
    g
}

/// Relative difference `|n_on - n_off| / max(n_off, 1e-12)` of the photon
/// number on the policy-selected stable branch at every grid point.
/// `BranchPolicy::All` compares the lowest stable branches.
pub fn ck_comparison_metrics(rows: &[SweepRow], policy: BranchPolicy) -> Result<CkComparison, SweepError> {
    let (off, on) = (grid_of(rows, false), grid_of(rows, true));
    if off.is_empty() || on.is_empty() {
        return Err(SweepError::MismatchedGrids("rows must contain both cross-Kerr settings".into()));
    }
    if off != on {
        return Err(SweepError::MismatchedGrids(format!(
            "{} points without cross-Kerr, {} with",
            off.len(),
            on.len()
        )));
    }
    let mut points = Vec::with_capacity(off.len());
    let (mut max, mut argmax) = (0.0, None);
    for &v in &off {
        let at = |ck: bool| -> Vec<&SweepRow> {
            rows.iter().filter(|r| r.sweep_value == v && r.ck_enabled == ck).collect()
        };
        let diff = match (policy_photons(&at(false), policy), policy_photons(&at(true), policy)) {
            (Some(n_off), Some(n_on)) => Some((n_on - n_off).abs() / n_off.max(COMPARISON_EPSILON)),
            _ => None,
        };
        if let Some(x) = diff {
            if argmax.is_none() || x > max {
                max = x;
                argmax = Some(v);
            }
        }
        points.push((v, diff));
    }
    Ok(CkComparison { points, max, argmax })
}

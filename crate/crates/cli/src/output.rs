//! Sweep tables and single-point reports.

use becck_core::dynamics::{build_drift_diffusion, classify_stability, DriftDiffusion, DynamicsError, StabilityReport};
use becck_core::meanfield::{enumerate_branches, MeanFieldBranch};
use becck_core::model::{derive_params, validity_flags, DerivedParams, ModelError, SystemParams, ValidityFlags};
use becck_core::steadystate::{observables, ObservableSet, SteadyStateError};
use becck_core::sweep::SweepRow;
use serde::Serialize;
use std::io::{self, Write};

pub const CSV_HEADER: [&str; 19] = [
    "sweep_var",
    "sweep_value",
    "ck",
    "branch",
    "n_photon",
    "alpha_re",
    "alpha_im",
    "beta_re",
    "beta_im",
    "delta_eff",
    "omega_b",
    "omega_b_ratio",
    "stable",
    "e_n",
    "s_q",
    "s_p",
    "n_incoh",
    "lattice_ok",
    "bogoliubov_ok",
];

/// 17 significant digits, enough to round-trip any `f64`.
fn float(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt_float(x: Option<f64>) -> String {
    x.map(float).unwrap_or_default()
}

pub fn csv_record(r: &SweepRow) -> [String; 19] {
    [
        r.sweep_var.name().to_string(),
        float(r.sweep_value),
        if r.ck_enabled { "on" } else { "off" }.to_string(),
        r.branch_index.to_string(),
        float(r.n_photon),
        float(r.alpha_re),
        float(r.alpha_im),
        float(r.beta_re),
        float(r.beta_im),
        float(r.delta_eff),
        float(r.omega_b),
        float(r.omega_b_ratio),
        r.stable.to_string(),
        opt_float(r.e_n),
        opt_float(r.s_q),
        opt_float(r.s_p),
        opt_float(r.n_incoherent),
        r.lattice_ok.to_string(),
        r.bogoliubov_ok.map(|b| b.to_string()).unwrap_or_default(),
    ]
}

pub fn write_csv<W: Write>(out: W, rows: &[SweepRow]) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record(csv_record(r))?;
    }
    w.flush()
}

pub fn write_json_lines<W: Write>(mut out: W, rows: &[SweepRow]) -> io::Result<()> {
    for r in rows {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

#[derive(Debug, Serialize)]
pub struct BranchReport {
    pub branch: MeanFieldBranch,
    pub stability: StabilityReport,
    pub drift_diffusion: DriftDiffusion,
    /// Absent on branches that are not strictly stable.
    pub observables: Option<ObservableSet>,
    pub validity: ValidityFlags,
}

#[derive(Debug, Serialize)]
pub struct SteadyReport {
    pub params: SystemParams,
    pub derived: DerivedParams,
    pub warnings: Vec<String>,
    pub branches: Vec<BranchReport>,
}

#[derive(Debug)]
pub enum ReportError {
    Model(ModelError),
    Consistency(String),
}

impl From<DynamicsError> for ReportError {
    fn from(e: DynamicsError) -> Self {
        match e {
            DynamicsError::Model(m) => Self::Model(m),
            other => Self::Consistency(other.to_string()),
        }
    }
}

impl From<SteadyStateError> for ReportError {
    fn from(e: SteadyStateError) -> Self {
        match e {
            SteadyStateError::Dynamics(d) => d.into(),
            other => Self::Consistency(other.to_string()),
        }
    }
}

pub fn steady_report(p: &SystemParams) -> Result<SteadyReport, ReportError> {
    let d = derive_params(p).map_err(ReportError::Model)?;
    let set = enumerate_branches(&d);
    let mut branches = Vec::with_capacity(set.len());
    for b in &set.branches {
        let dd = build_drift_diffusion(&d, b)?;
        let stability = classify_stability(&dd)?;
        let obs = if stability.strictly_stable() {
            Some(observables(&d, b, &dd)?)
        } else {
            None
        };
        branches.push(BranchReport {
            branch: *b,
            stability,
            drift_diffusion: dd,
            observables: obs,
            validity: validity_flags(&d, b.n_photon, obs.map(|o| o.n_incoherent)),
        });
    }
    Ok(SteadyReport {
        params: *p,
        derived: d,
        warnings: set.warnings.iter().map(|w| w.to_string()).collect(),
        branches,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use becck_core::sweep::{run_sweep, Preset, SweepSpec};

    #[test]
    fn floats_round_trip() {
        for x in [0.1, -2.5e-300, 1.0 / 3.0, 8.168140899333463e6] {
            let s = float(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
            assert_eq!(s.split('e').next().unwrap().trim_start_matches('-').len(), 18);
        }
    }

    #[test]
    fn unstable_rows_leave_observables_empty() {
        let spec = SweepSpec {
            count: 21,
            ..Preset::Fig2b.spec(&SystemParams::experimental())
        };
        let rows = run_sweep(&spec).unwrap();
        let mut buf = Vec::new();
        write_csv(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), CSV_HEADER.join(","));
        let mut saw_unstable = false;
        for (line, row) in lines.zip(&rows) {
            let fields: Vec<&str> = line.split(',').collect();
            assert_eq!(fields.len(), 19);
            if !row.stable {
                saw_unstable = true;
                assert!(fields[13..17].iter().all(|f| f.is_empty()));
            }
        }
        assert!(saw_unstable);
    }

    #[test]
    fn undriven_report() {
        let p = SystemParams {
            eta: 0.0,
            omega_sw: 0.0,
            temperature: 0.0,
            ..SystemParams::experimental()
        };
        let r = steady_report(&p).ok().unwrap();
        assert_eq!(r.branches.len(), 1);
        let o = r.branches[0].observables.unwrap();
        assert_eq!(r.branches[0].branch.n_photon, 0.0);
        assert_eq!(o.e_n, 0.0);
        assert!(o.s_q.abs() < 1e-12 && o.n_incoherent.abs() < 1e-12);
    }
}

//! Browser bindings: three curve generators for the static page in `www/`.
//! Each returns a JSON string so the page can plot it without extra glue.
//! All inputs are in units of kappa or the recoil frequency, as on the page.

use becck_core::model::SystemParams;
use becck_core::sweep::{run_sweep_sequential, BranchPolicy, CkMode, SweepRow, SweepSpec, SweepVar};
use becck_core::meanfield::BranchSearch;
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Browser sweeps use a coarser branch search to stay interactive.
const WEB_GRID_POINTS: usize = 4001;
const MAX_POINTS: usize = 2001;
const DEFAULT_POINTS: usize = 201;

#[derive(Serialize)]
struct Point {
    x: f64,
    y: f64,
    stable: bool,
}

#[derive(Serialize)]
struct Curves {
    x_label: &'static str,
    y_label: &'static str,
    ck_off: Vec<Point>,
    ck_on: Vec<Point>,
}

fn spec(var: SweepVar, min: f64, max: f64, count: usize, base: SystemParams, policy: BranchPolicy) -> Result<SweepSpec, String> {
    if count > MAX_POINTS {
        return Err(format!("at most {MAX_POINTS} points"));
    }
    let count = if count == 0 { DEFAULT_POINTS } else { count };
    Ok(SweepSpec {
        var,
        min,
        max,
        count,
        base,
        ck_mode: CkMode::Paired,
        branch_policy: policy,
        preset: None,
        search: BranchSearch {
            grid_points: WEB_GRID_POINTS,
            ..BranchSearch::default()
        },
    })
}

fn curves(rows: &[SweepRow], unit: f64, x_label: &'static str, y_label: &'static str, y: impl Fn(&SweepRow) -> Option<f64>) -> String {
    let mut out = Curves {
        x_label,
        y_label,
        ck_off: Vec::new(),
        ck_on: Vec::new(),
    };
    for r in rows {
        let Some(value) = y(r) else { continue };
        let p = Point {
            x: r.sweep_value / unit,
            y: value,
            stable: r.stable,
        };
        if r.ck_enabled {
            out.ck_on.push(p);
        } else {
            out.ck_off.push(p);
        }
    }
    serde_json::to_string(&out).expect("curves serialize")
}

/// Photon number of every branch versus `delta_c / kappa`.
pub fn bistability_curve_json(eta: f64, omega_sw: f64, delta_min: f64, delta_max: f64, count: usize) -> Result<String, String> {
    let base = SystemParams::experimental();
    let (k, wr) = (base.kappa, base.omega_r);
    let p = SystemParams {
        eta: eta * k,
        omega_sw: omega_sw * wr,
        ..base
    };
    let s = spec(SweepVar::DeltaC, delta_min * k, delta_max * k, count, p, BranchPolicy::All)?;
    let rows = run_sweep_sequential(&s).map_err(|e| e.to_string())?;
    Ok(curves(&rows, k, "delta_c / kappa", "photon number", |r| Some(r.n_photon)))
}

/// `omega_B / omega_c` on the highest stable branch versus `eta / kappa`.
pub fn frequency_shift_json(delta_c: f64, omega_sw: f64, eta_max: f64, count: usize) -> Result<String, String> {
    let base = SystemParams::experimental();
    let (k, wr) = (base.kappa, base.omega_r);
    let p = SystemParams {
        delta_c: delta_c * k,
        omega_sw: omega_sw * wr,
        ..base
    };
    let s = spec(SweepVar::Eta, 0.0, eta_max * k, count, p, BranchPolicy::Highest)?;
    let rows = run_sweep_sequential(&s).map_err(|e| e.to_string())?;
    Ok(curves(&rows, k, "eta / kappa", "omega_B / omega_c", |r| Some(r.omega_b_ratio)))
}

/// Squeezing `S_Q` on the lowest stable branch versus `omega_sw / omegaR`.
pub fn squeezing_curve_json(delta_c: f64, eta: f64, omega_sw_max: f64, count: usize) -> Result<String, String> {
    let base = SystemParams::experimental();
    let (k, wr) = (base.kappa, base.omega_r);
    let p = SystemParams {
        delta_c: delta_c * k,
        eta: eta * k,
        ..base
    };
    let s = spec(SweepVar::OmegaSw, 0.0, omega_sw_max * wr, count, p, BranchPolicy::Lowest)?;
    let rows = run_sweep_sequential(&s).map_err(|e| e.to_string())?;
    Ok(curves(&rows, wr, "omega_sw / omegaR", "S_Q", |r| r.s_q))
}

#[wasm_bindgen]
pub fn bistability_curve(eta: f64, omega_sw: f64, delta_min: f64, delta_max: f64, count: usize) -> Result<String, JsValue> {
    bistability_curve_json(eta, omega_sw, delta_min, delta_max, count).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn frequency_shift(delta_c: f64, omega_sw: f64, eta_max: f64, count: usize) -> Result<String, JsValue> {
    frequency_shift_json(delta_c, omega_sw, eta_max, count).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn squeezing_curve(delta_c: f64, eta: f64, omega_sw_max: f64, count: usize) -> Result<String, JsValue> {
    squeezing_curve_json(delta_c, eta, omega_sw_max, count).map_err(|e| JsValue::from_str(&e))
}

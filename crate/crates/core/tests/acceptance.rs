//! Acceptance criteria for the full pipeline. Runs as a plain binary so that
//! every criterion reports a line, then exits nonzero if any failed.

use becck_core::dynamics::{build_drift_diffusion, classify_stability, DriftDiffusion};
use becck_core::meanfield::enumerate_branches;
use becck_core::model::{derive_params, SystemParams};
use becck_core::steadystate::{
    integrate_moment_ode, logarithmic_negativity, lyapunov_residual, solve_lyapunov,
    CovarianceMatrix, PHYSICALITY_SLACK,
};
use becck_core::sweep::{bistable_window, ck_comparison_metrics, run_sweep, BranchPolicy, Preset, SweepRow};
use becck_core::verify::{run_verification, VerifyOptions};
use nalgebra::Matrix4;
use std::process::ExitCode;
use std::time::Instant;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn base() -> SystemParams {
    SystemParams::experimental()
}

fn sweep(preset: Preset) -> Vec<SweepRow> {
    run_sweep(&preset.spec(&base())).expect("preset sweep")
}

/// Values of the single stable branch at each point of one setting, skipping
/// points with zero or several stable branches.
fn unique_stable(rows: &[SweepRow], ck: bool) -> Vec<&SweepRow> {
    let mut out: Vec<&SweepRow> = Vec::new();
    let mut i = 0;
    let same: Vec<&SweepRow> = rows.iter().filter(|r| r.ck_enabled == ck).collect();
    while i < same.len() {
        let v = same[i].sweep_value;
        let group: Vec<&SweepRow> = same[i..].iter().take_while(|r| r.sweep_value == v).copied().collect();
        i += group.len();
        let stable: Vec<&SweepRow> = group.into_iter().filter(|r| r.stable).collect();
        if stable.len() == 1 {
            out.push(stable[0]);
        }
    }
    out
}

/// Every strictly stable branch of a preset, as drift-diffusion pairs with
/// the slowest decay rate.
fn stable_points(preset: Preset) -> Vec<(DriftDiffusion, f64)> {
    let spec = preset.spec(&base());
    let mut out = Vec::new();
    for v in spec.grid() {
        for &ck in spec.ck_mode.settings() {
            let p = SystemParams {
                ck_enabled: ck,
                ..spec.var.apply(&spec.base, v)
            };
            let d = derive_params(&p).unwrap();
            for b in enumerate_branches(&d).branches {
                let dd = build_drift_diffusion(&d, &b).unwrap();
                let report = classify_stability(&dd).unwrap();
                if report.strictly_stable() {
                    out.push((dd, report.max_real_part));
                }
            }
        }
    }
    out
}

fn coupling_ratio() -> Outcome {
    let d = derive_params(&base()).unwrap();
    let want = 2.0 / (2.0e5f64).sqrt();
    let rel = (d.g / d.zeta - want).abs() / want;
    outcome(rel <= 1e-12, format!("g/zeta = {:.12e}, relative error {rel:.1e}", d.g / d.zeta))
}

fn weak_drive_overlap() -> Outcome {
    let rows = sweep(Preset::Fig2a);
    let low = ck_comparison_metrics(&rows, BranchPolicy::Lowest).unwrap();
    let high = ck_comparison_metrics(&rows, BranchPolicy::Highest).unwrap();
    let k = base().kappa;
    outcome(
        low.max < 0.01,
        format!(
            "max relative photon difference {:.4} at delta_c = {:.2} kappa (lowest stable branch); \
             {:.4} on the highest stable branch",
            low.max,
            low.argmax.unwrap_or(f64::NAN) / k,
            high.max
        ),
    )
}

fn neutralization_trend() -> Outcome {
    let maxima: Vec<f64> = [Preset::Fig2b, Preset::Fig3a, Preset::Fig3b]
        .into_iter()
        .map(|p| ck_comparison_metrics(&sweep(p), BranchPolicy::Lowest).unwrap().max)
        .collect();
    let decreasing = maxima.windows(2).all(|w| w[1] < w[0]);
    let last = maxima[2];
    outcome(
        decreasing && last < 0.01,
        format!(
            "max differences at omega_sw = 1, 5, 10 omegaR: {:.4}, {:.4}, {:.4} (decreasing: {decreasing}, last < 1%: {})",
            maxima[0],
            maxima[1],
            maxima[2],
            last < 0.01
        ),
    )
}

fn bistable_structure() -> Outcome {
    let rows = sweep(Preset::Fig2b);
    let k = base().kappa;
    let mut passed = true;
    let mut detail = Vec::new();
    for ck in [false, true] {
        let Some((lo, hi)) = bistable_window(&rows, ck) else {
            passed = false;
            detail.push(format!("ck {ck}: no window"));
            continue;
        };
        let overlaps = lo < 9.0 * k && hi > 3.0 * k;
        let mut bad_middle = 0;
        let mut bad_outer = Vec::new();
        for r in rows.iter().filter(|r| r.ck_enabled == ck && r.sweep_value >= lo && r.sweep_value <= hi) {
            match (r.branch_index, r.stable) {
                (1, true) => bad_middle += 1,
                (0 | 2, false) => bad_outer.push(r.sweep_value / k),
                _ => {}
            }
        }
        passed &= overlaps && bad_middle == 0 && bad_outer.is_empty();
        let span = match (bad_outer.first(), bad_outer.last()) {
            (Some(a), Some(b)) => format!(" in [{a:.2}, {b:.2}] kappa"),
            _ => String::new(),
        };
        detail.push(format!(
            "ck {}: window [{:.2}, {:.2}] kappa, overlaps (3, 9): {overlaps}, stable middle rows {bad_middle}, \
             unstable outer rows {}{span}",
            if ck { "on" } else { "off" },
            lo / k,
            hi / k,
            bad_outer.len()
        ));
    }
    outcome(passed, detail.join("; "))
}

fn frequency_jump() -> Outcome {
    let rows = sweep(Preset::Fig5);
    let k = base().kappa;
    let on: Vec<&SweepRow> = rows.iter().filter(|r| r.ck_enabled).collect();
    let mut grid: Vec<f64> = on.iter().map(|r| r.sweep_value).collect();
    grid.dedup();
    // ratio on the highest stable branch at each pump rate
    let ratio = |v: f64| {
        on.iter()
            .filter(|r| r.sweep_value == v && r.stable)
            .map(|r| (r.n_photon, r.omega_b_ratio))
            .max_by(|a, b| a.0.total_cmp(&b.0))
            .map(|x| x.1)
    };
    let Some((lo, _)) = bistable_window(&rows, true) else {
        return outcome(false, "no three-branch region in the pump sweep");
    };
    let i = grid.iter().position(|&v| v == lo).unwrap();
    if i == 0 {
        return outcome(false, "three branches already at the first grid point");
    }
    let (before, after) = (ratio(grid[i - 1]), ratio(grid[i]));
    let (Some(before), Some(after)) = (before, after) else {
        return outcome(false, "no stable branch at the threshold");
    };
    let jump = after / before - 1.0;
    let eta = lo / k;
    outcome(
        (jump - 0.10).abs() <= 0.03 && (eta - 1.5).abs() <= 0.2,
        format!("threshold eta = {eta:.3} kappa, omega_B/omega_c {before:.4} -> {after:.4} (jump {:.2}%)", 100.0 * jump),
    )
}

fn squeezing_vs_scattering() -> Outcome {
    let rows = sweep(Preset::Fig8);
    let wr = base().omega_r;
    let (off, on) = (unique_stable(&rows, false), unique_stable(&rows, true));
    let mut detail = Vec::new();
    let mut passed = off.len() == on.len() && !on.is_empty();
    for (name, series) in [("off", &off), ("on", &on)] {
        let sq: Vec<f64> = series.iter().map(|r| r.s_q.unwrap()).collect();
        let monotone = sq.windows(2).all(|w| w[1] < w[0]);
        let beyond: Vec<f64> = series.iter().filter(|r| r.sweep_value > 30.0 * wr).map(|r| r.s_q.unwrap()).collect();
        let worst = beyond.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let deep = worst < -0.3;
        let crossing = series.iter().find(|r| r.s_q.unwrap() < -0.3).map(|r| r.sweep_value / wr);
        passed &= monotone && deep;
        detail.push(format!(
            "ck {name}: monotone {monotone}, max S_Q beyond 30 omegaR {worst:.4}, S_Q < -0.3 from {:.2} omegaR",
            crossing.unwrap_or(f64::NAN)
        ));
    }
    let gap = off
        .iter()
        .zip(&on)
        .map(|(a, b)| (a.s_q.unwrap() - b.s_q.unwrap()).abs())
        .fold(0.0f64, f64::max);
    passed &= gap < 1e-6;
    detail.push(format!("max |S_Q(on) - S_Q(off)| = {gap:.3e}"));
    outcome(passed, detail.join("; "))
}

fn is_monotone(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[1] >= w[0])
}

fn dispersive_decay() -> Outcome {
    let rows = sweep(Preset::Fig7);
    let k = base().kappa;
    let mut passed = true;
    let mut detail = Vec::new();

    let far: Vec<&SweepRow> = rows.iter().filter(|r| r.stable && r.sweep_value.abs() >= 15.0 * k).collect();
    let max_sq = far.iter().map(|r| r.s_q.unwrap().abs()).fold(0.0f64, f64::max);
    let max_n = far.iter().map(|r| r.n_incoherent.unwrap()).fold(0.0f64, f64::max);
    passed &= max_sq < 1e-2 && max_n < 1e-2;
    detail.push(format!("|delta_c| >= 15 kappa: max |S_Q| {max_sq:.3e}, max n_incoh {max_n:.3e}"));

    let mut left_edge = Vec::new();
    for ck in [false, true] {
        let Some((lo, hi)) = bistable_window(&rows, ck) else {
            passed = false;
            detail.push(format!("ck {ck}: no window"));
            continue;
        };
        let series = unique_stable(&rows, ck);
        let left: Vec<&&SweepRow> = series.iter().filter(|r| r.sweep_value < lo).collect();
        let right: Vec<&&SweepRow> = series.iter().filter(|r| r.sweep_value > hi).rev().collect();
        let grows = |side: &[&&SweepRow]| {
            let sq: Vec<f64> = side.iter().map(|r| r.s_q.unwrap()).collect();
            let n: Vec<f64> = side.iter().map(|r| r.n_incoherent.unwrap()).collect();
            is_monotone(&sq) && is_monotone(&n)
        };
        let (gl, gr) = (grows(&left), grows(&right));
        passed &= gl && gr;
        detail.push(format!(
            "ck {}: growth toward the window edge left {gl}, right {gr}",
            if ck { "on" } else { "off" }
        ));
        left_edge.push(left.last().map(|r| (r.sweep_value, r.s_q.unwrap(), r.n_incoherent.unwrap())));
    }
    if let [Some(off), Some(on)] = left_edge[..] {
        // compare at the last point both settings share before the window
        let v = off.0.min(on.0);
        let at = |ck: bool| {
            unique_stable(&rows, ck)
                .into_iter()
                .find(|r| r.sweep_value == v)
                .map(|r| (r.s_q.unwrap(), r.n_incoherent.unwrap()))
        };
        if let (Some(a), Some(b)) = (at(false), at(true)) {
            let exceeds = b.0 > a.0 && b.1 > a.1;
            passed &= exceeds;
            detail.push(format!(
                "at delta_c = {:.2} kappa: S_Q off {:.4} on {:.4}, n_incoh off {:.4} on {:.4}",
                v / k,
                a.0,
                b.0,
                a.1,
                b.1
            ));
        }
    }
    outcome(passed, detail.join("; "))
}

fn lyapunov_oracle() -> Outcome {
    let mut worst_ode = 0.0f64;
    let mut worst_res = 0.0f64;
    let mut count = 0;
    for preset in [Preset::Fig6, Preset::Fig7] {
        for (dd, max_re) in stable_points(preset) {
            let v = solve_lyapunov(&dd).unwrap();
            let w = integrate_moment_ode(&dd, &CovarianceMatrix::vacuum(), 50.0 / max_re.abs()).unwrap();
            worst_ode = worst_ode.max((w.0 - v.0).amax() / v.0.amax());
            worst_res = worst_res.max(lyapunov_residual(&dd, &v) / dd.diffusion.amax());
            count += 1;
        }
    }
    outcome(
        count > 0 && worst_ode <= 1e-6 && worst_res <= 1e-10,
        format!("{count} stable points, worst ODE deviation {worst_ode:.2e}, worst residual/|D| {worst_res:.2e}"),
    )
}

fn jacobian_consistency() -> Outcome {
    let opts = VerifyOptions {
        seed: 2024,
        ode_points: 1,
        routh_hurwitz_draws: 1,
        substitution_draws: 1,
        ..VerifyOptions::default()
    };
    let summary = run_verification(&base(), &opts).unwrap();
    let s = summary.suites.iter().find(|s| s.name == "jacobian").unwrap();
    outcome(
        s.passed && s.cases == 100,
        format!("{} stable points, worst relative deviation {:.2e}", s.cases, s.worst),
    )
}

fn gaussian_cases() -> Outcome {
    let (e0, eta0) = logarithmic_negativity(&CovarianceMatrix::vacuum()).unwrap();
    let mut passed = e0.abs() <= 1e-12 && (eta0 - 0.5).abs() <= 1e-12;
    let mut worst = 0.0f64;
    for r in [0.1f64, 0.5, 1.0] {
        let (c, s) = ((2.0 * r).cosh() / 2.0, (2.0 * r).sinh() / 2.0);
        #[rustfmt::skip]
        let v = Matrix4::new(
            c, 0.0, s, 0.0,
            0.0, c, 0.0, -s,
            s, 0.0, c, 0.0,
            0.0, -s, 0.0, c,
        );
        let (e_n, _) = logarithmic_negativity(&CovarianceMatrix(v)).unwrap();
        worst = worst.max((e_n - 2.0 * r).abs());
    }
    passed &= worst <= 1e-9;
    outcome(passed, format!("vacuum E_N {e0:.1e}, eta- {eta0}; squeezed worst |E_N - 2r| {worst:.1e}"))
}

fn entanglement_enhancement() -> Outcome {
    let rows = sweep(Preset::Fig6);
    let (off, on) = (unique_stable(&rows, false), unique_stable(&rows, true));
    let mut total = 0;
    let mut higher = 0;
    for a in &off {
        if let Some(b) = on.iter().find(|b| b.sweep_value == a.sweep_value) {
            total += 1;
            if b.e_n.unwrap() >= a.e_n.unwrap() {
                higher += 1;
            }
        }
    }
    let frac = higher as f64 / total.max(1) as f64;
    outcome(
        total > 0 && frac >= 0.8,
        format!("E_N(on) >= E_N(off) at {higher} of {total} stable points ({:.1}%)", 100.0 * frac),
    )
}

fn physicality() -> Outcome {
    let mut lowest = f64::INFINITY;
    let mut count = 0;
    for preset in Preset::ALL {
        for (dd, _) in stable_points(preset) {
            let v = solve_lyapunov(&dd).unwrap();
            lowest = lowest.min(v.symplectic_eigenvalues().0);
            count += 1;
        }
    }
    outcome(
        count > 0 && lowest >= 0.5 - PHYSICALITY_SLACK,
        format!("{count} covariances, smallest symplectic eigenvalue {lowest:.6}"),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("coupling ratio", coupling_ratio),
        ("weak-drive cross-Kerr overlap", weak_drive_overlap),
        ("neutralization by collisions", neutralization_trend),
        ("bistable window", bistable_structure),
        ("Bogoliubov frequency jump", frequency_jump),
        ("squeezing versus scattering frequency", squeezing_vs_scattering),
        ("dispersive decay", dispersive_decay),
        ("Lyapunov versus moment ODE", lyapunov_oracle),
        ("Jacobian consistency", jacobian_consistency),
        ("Gaussian analytic cases", gaussian_cases),
        ("entanglement enhancement", entanglement_enhancement),
        ("physicality", physicality),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = check();
        if !o.passed {
            failed += 1;
        }
        println!(
            "criterion {:>2} {} {name} ({:.1}s): {}",
            i + 1,
            if o.passed { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            o.detail
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

//! The named experiments: each builds its inputs from an [`ExperimentConfig`],
//! runs, checks invariants and writes artifacts.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::diagnostics::{fit_radius, gevrey_norm, theorem_floor, FloorInputs, FloorVariant, TAIL_THRESHOLD};
use crate::dynamics::presets::{analytic_2d, auto_tau0, bardos_titi, normalize, random_3d, taylor_green};
use crate::dynamics::{run_simulation, FlowState, ModelKind, ModelParams, RunOptions, TauLaw, Trajectory};
use crate::error::{Error, Result};
use crate::field::{Rank, SpectralField};
use crate::grid::Grid;
use crate::inequality::{
    convection_pairing_2d, pairing, pairings_3d, sgn_identity_check, survey, t1_t2_pairings_2d, PairingReport, Route,
    SurveyKind, SurveySpec, SurveySummary, Symbol, WeightTerm,
};
use crate::littlewood_paley::{
    bernstein_ratio, block_range, bony_decompose, dyadic_project, h1_product_check, CutoffPair, DyadicBlockSet,
    Projection,
};
use crate::operators::{sobolev_norm, velocity_from_vorticity};
use crate::random::{random_divfree_field, ShellProfile};

use super::config::{ExperimentConfig, InitialSpec, Scenario};
use super::output::{write_diagnostics_csv, write_json, write_rows_csv, Check, Summary};
use super::snapshot::{read_snapshot, write_snapshot, Snapshot};
use super::sweep::sweep_alpha;

/// Initial vorticity and Gevrey radius for `cfg`. Snapshots keep their time
/// and radius unless `tau0` is configured.
pub fn build_initial(cfg: &ExperimentConfig) -> Result<FlowState> {
    let grid = Grid::new(cfg.grid.dim, cfg.grid.n)?;
    let seed = cfg.data_seed();
    let omega = match &cfg.initial {
        InitialSpec::TaylorGreen => taylor_green(&grid, cfg.model.velocity_alpha())?,
        InitialSpec::Analytic2d { rate, l2, .. } => analytic_2d(&grid, seed, *rate, *l2)?,
        InitialSpec::Random3d { profile, band, l2, .. } => random_3d(&grid, seed, profile, *band, *l2)?,
        InitialSpec::BardosTiti => bardos_titi(&grid)?,
        InitialSpec::Snapshot { path } => {
            let snap = read_snapshot(path)?;
            let omega = snap.state.omega.resample(&grid)?;
            return Ok(FlowState {
                omega,
                tau: cfg.tau0.unwrap_or(snap.state.tau),
                t: snap.state.t,
            });
        }
        InitialSpec::Zero => {
            let rank = if grid.dim() == 2 { Rank::Scalar } else { Rank::Vector };
            SpectralField::zeros(&grid, rank)
        }
    };
    let tau = match cfg.tau0 {
        Some(t) => t,
        None => auto_tau0(&omega, cfg.model.s).unwrap_or(0.0),
    };
    Ok(FlowState::new(omega, tau))
}

fn run_options(cfg: &ExperimentConfig) -> RunOptions {
    RunOptions {
        t_end: cfg.time.t_end,
        dt: cfg.time.dt,
        sample_every: cfg.time.sample_every,
        keep_snapshots: cfg.time.keep_snapshots,
    }
}

/// Trajectory and, if the run failed, the error text.
fn simulate(initial: &FlowState, params: &ModelParams, opts: &RunOptions) -> (Trajectory, Option<String>) {
    match run_simulation(initial, params, opts) {
        Ok(t) => (t, None),
        Err(e) => {
            let msg = e.to_string();
            (*e.partial, Some(msg))
        }
    }
}

/// Exact decay rate of `||omega||` for Taylor-Green data.
fn taylor_green_rate(p: &ModelParams) -> f64 {
    match p.model {
        ModelKind::SecondGrade => 2.0 * p.nu / (1.0 + 2.0 * p.alpha * p.alpha),
        ModelKind::NavierStokes => 2.0 * p.nu,
        ModelKind::DampedEuler => p.nu,
    }
}

/// Rate in the energy bound `||omega(t)|| <= e^{-rate t} ||omega_0||` (2D).
fn energy_rate(p: &ModelParams) -> f64 {
    match p.model {
        ModelKind::SecondGrade => p.gamma(),
        _ => p.nu,
    }
}

/// Worst value of `f(record)` over the records where it is defined.
fn worst(traj: &Trajectory, f: impl Fn(&crate::dynamics::DiagnosticsRecord) -> Option<f64>, max: bool) -> Option<f64> {
    let vals = traj.records.iter().filter_map(f);
    if max {
        vals.reduce(f64::max)
    } else {
        vals.reduce(f64::min)
    }
}

/// Invariant checks that apply to any simulated trajectory.
pub fn trajectory_checks(params: &ModelParams, traj: &Trajectory, taylor_green_data: bool) -> Vec<Check> {
    let mut out = Vec::new();
    let Some(r0) = traj.records.first() else {
        return out;
    };
    let dim = traj.final_state.omega.grid().dim();
    let t0 = r0.t;
    let l0 = r0.l2;
    if dim == 2 && l0 > 0.0 {
        let rate = energy_rate(params);
        let excess = worst(traj, |r| Some(r.l2 / (l0 * (-rate * (r.t - t0)).exp()) - 1.0), true).unwrap_or(0.0);
        out.push(Check::at_most("energy_decay", excess, 1e-6, format!("||w(t)|| e^{{{rate} t}} / ||w0|| - 1")));
    }
    if taylor_green_data && l0 > 0.0 {
        let rate = taylor_green_rate(params);
        let err = worst(traj, |r| Some((r.l2 / (l0 * (-rate * (r.t - t0)).exp()) - 1.0).abs()), true).unwrap_or(0.0);
        out.push(Check::at_most("taylor_green_decay", err, 1e-8, format!("relative error against e^{{-{rate} t}}")));
    }
    let gamma = params.gamma();
    let m0 = traj.m0;
    match params.tau_law {
        TauLaw::A2dBig | TauLaw::DSmallData => {
            let rate = if params.tau_law == TauLaw::A2dBig { gamma } else { gamma / 2.0 };
            let name = if params.tau_law == TauLaw::A2dBig { "gevrey_decay" } else { "small_data_decay" };
            if m0 > 0.0 {
                let e =
                    worst(traj, |r| Some(r.gevrey() / (m0 * (-rate * (r.t - t0)).exp()) - 1.0), true).unwrap_or(0.0);
                out.push(Check::at_most(name, e, 1e-4, format!("||e^{{tau L}} w|| e^{{{rate} t}} / M0 - 1")));
            }
            if params.tau_law == TauLaw::DSmallData && l0 > 0.0 {
                let e = worst(traj, |r| Some(r.l2 / (l0 * (-rate * (r.t - t0)).exp()) - 1.0), true).unwrap_or(0.0);
                out.push(Check::at_most("small_data_l2_decay", e, 1e-4, format!("||w(t)|| e^{{{rate} t}} / ||w0|| - 1")));
            }
        }
        TauLaw::B2dSmall => {
            if let (Some(c0), Some(last)) = (traj.c0, traj.records.last()) {
                let nu = params.nu;
                let a2 = params.alpha * params.alpha;
                let lhs = last.z.unwrap_or(0.0) + a2 * last.w.unwrap_or(0.0) + 0.5 * nu * last.w_int.unwrap_or(0.0);
                let ratio = if c0.is_finite() { lhs / (c0 * nu * nu) } else { 0.0 };
                out.push(Check::at_most("small_data_energy", ratio, 1.0, format!("(Z + a^2 W + nu/2 int W) / (C0 nu^2), C0 = {c0}")));
            }
        }
        TauLaw::C3dLarge => {
            let h0 = r0.h1;
            if h0 > 0.0 {
                let e = worst(
                    traj,
                    |r| {
                        let bound = h0 * h0 * (params.c_cal * r.grad_int - 2.0 * gamma * (r.t - t0)).exp();
                        Some(r.h1 * r.h1 / bound - 1.0)
                    },
                    true,
                )
                .unwrap_or(0.0);
                out.push(Check::at_most("sobolev_growth", e, 1e-3, "|w|_H1^2 e^{2 gamma t} / (e^{C int |grad u|} |w0|_H1^2) - 1"));
            }
        }
        _ => {}
    }
    if traj.records.iter().any(|r| r.floor.is_some()) {
        let law_gap = worst(traj, |r| r.floor.map(|f| r.tau_law - f * (1.0 - 1e-12)), false).unwrap_or(0.0);
        out.push(Check::at_least("tau_above_floor", law_gap, 0.0, "min_t tau_law(t) - floor(t)"));
        let fit_gap = worst(traj, |r| Some(r.tau_fit? - r.floor?), false);
        if let Some(g) = fit_gap {
            out.push(Check::at_least("fit_above_floor", g, 0.0, "min_t tau_fit(t) - floor(t)"));
        }
    }
    let tail = worst(traj, |r| Some(r.tail_fraction), true).unwrap_or(0.0);
    out.push(Check::at_most("resolution", tail, TAIL_THRESHOLD, "max tail fraction").informational());
    out
}

fn add_run_metrics(summary: &mut Summary, traj: &Trajectory, params: &ModelParams) {
    summary.metric("dt", traj.dt);
    summary.metric("m0", traj.m0);
    summary.metric("c0", traj.c0);
    summary.metric("samples", traj.records.len());
    summary.metric("final_time", traj.final_state.t);
    summary.metric("final_tau", traj.final_state.tau);
    summary.metric("final_tau_fit", traj.records.last().and_then(|r| r.tau_fit));
    summary.metric("params", params);
}

fn write_trajectory(dir: &Path, traj: &Trajectory, params: &ModelParams) -> Result<()> {
    write_diagnostics_csv(&dir.join("diagnostics.csv"), &traj.records)?;
    let snap = |state: &FlowState| Snapshot {
        state: state.clone(),
        s: params.s,
        nu: params.nu,
        alpha: params.alpha,
    };
    write_snapshot(&dir.join("final.gvrf"), &snap(&traj.final_state))?;
    if !traj.snapshots.is_empty() {
        let sd = dir.join("snapshots");
        std::fs::create_dir_all(&sd)?;
        for (i, st) in traj.snapshots.iter().enumerate() {
            write_snapshot(&sd.join(format!("sample_{i:04}.gvrf")), &snap(st))?;
        }
    }
    Ok(())
}

fn run_flow(cfg: &ExperimentConfig, params: &ModelParams, out: Option<&Path>, summary: &mut Summary) -> Result<Trajectory> {
    let initial = build_initial(cfg)?;
    summary.metric("tau0", initial.tau);
    let (traj, err) = simulate(&initial, params, &run_options(cfg));
    summary.error = err;
    let tg = matches!(cfg.initial, InitialSpec::TaylorGreen);
    summary.checks.extend(trajectory_checks(params, &traj, tg));
    add_run_metrics(summary, &traj, params);
    if let Some(dir) = out {
        write_trajectory(dir, &traj, params)?;
    }
    Ok(traj)
}

fn scenario_run(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<Summary> {
    let mut summary = Summary::new(cfg.scenario.name());
    run_flow(cfg, &cfg.model, out, &mut summary)?;
    Ok(summary)
}

fn scenario_sweep(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<Summary> {
    let mut summary = Summary::new(cfg.scenario.name());
    let initial = build_initial(cfg)?;
    let u0 = velocity_from_vorticity(&initial.omega, 0.0)?;
    let opts = run_options(cfg);
    let res = sweep_alpha(&u0, cfg.model.nu, cfg.model.s, initial.tau, &opts, &cfg.sweep)?;
    let rep = &res.report;
    summary.metric("tau0", initial.tau);
    summary.metric("delta", rep.delta);
    summary.metric("delta_source", &rep.delta_source);
    summary.metric("slope_unsquared", rep.slope_unsquared);
    summary.metric("slope_alpha1", rep.slope_alpha1);
    match rep.slope {
        Some(s) => summary.checks.push(Check::at_most(
            "convergence_slope",
            (s - 2.0).abs(),
            0.3,
            format!("log-log slope of sup_t |z|^2 + a^2 |grad z|^2 is {s}"),
        )),
        None => summary
            .checks
            .push(Check::flag("convergence_slope", true, "fewer than three usable runs; no slope").informational()),
    }
    if let Some(s) = rep.slope_unsquared {
        summary.checks.push(
            Check::at_most("convergence_slope_unsquared", (s - 2.0).abs(), 0.3, format!("slope of the unsquared error is {s}"))
                .informational(),
        );
    }
    summary.checks.push(Check::flag("convergence_monotone", rep.monotone, "error shrinks with alpha"));
    let failed: Vec<String> = rep.rows.iter().filter_map(|r| r.error.clone()).collect();
    if !failed.is_empty() {
        summary.error = Some(failed.join("; "));
    }
    summary.checks.push(
        Check::flag(
            "sweep_resolved",
            !rep.reference_under_resolved && rep.rows.iter().all(|r| !r.under_resolved),
            "no run flagged under-resolved",
        )
        .informational(),
    );
    if let Some(dir) = out {
        write_rows_csv(&dir.join("convergence.csv"), &rep.rows)?;
        write_json(&dir.join("convergence.json"), rep)?;
        let rd = dir.join("runs");
        std::fs::create_dir_all(&rd)?;
        if let Some(r) = &res.reference {
            write_diagnostics_csv(&rd.join("reference.csv"), &r.records)?;
        }
        for (a, t) in &res.runs {
            if let Some(t) = t {
                write_diagnostics_csv(&rd.join(format!("alpha_{a}.csv")), &t.records)?;
            }
        }
    }
    Ok(summary)
}

fn rel_diff(a: f64, b: f64, scale: f64) -> f64 {
    let d = (a - b).abs();
    if d == 0.0 {
        0.0
    } else {
        d / a.abs().max(b.abs()).max(scale)
    }
}

/// Largest relative disagreement between the parts of two report lists.
fn compare_reports(a: &[PairingReport], b: &[PairingReport], by_ratio: bool) -> f64 {
    let mut worst: f64 = 0.0;
    for (x, y) in a.iter().zip(b) {
        if by_ratio {
            worst = worst.max(rel_diff(x.ratio, y.ratio, 1e-300));
        } else {
            let scale = 1e-12 * x.rhs_total.max(y.rhs_total);
            for (p, q) in x.parts.iter().zip(&y.parts) {
                worst = worst.max(rel_diff(p.value, q.value, scale.max(1e-300)));
            }
        }
    }
    worst
}

fn flat() -> ShellProfile {
    ShellProfile::Flat { amplitude: 1.0 }
}

fn field_reports(dim: usize, n: usize, band: usize, seed: u64, spec: &super::config::LemmaSpec, route: Route) -> Result<Vec<PairingReport>> {
    let kind = if dim == 2 { SurveyKind::Commutators2d } else { SurveyKind::Pairings3d };
    let grid = Grid::new(dim, n)?;
    let tau = spec.tau.unwrap_or(0.5 / band as f64);
    let (alpha, rank) = if dim == 2 { (spec.alpha_2d, Rank::Scalar) } else { (spec.alpha_3d, Rank::Vector) };
    let w = random_divfree_field(&grid, &flat(), band as f64, seed, rank)?;
    lemma_reports(kind, &w, alpha, tau, spec.s, route)
}

fn lemma_reports(kind: SurveyKind, w: &SpectralField, alpha: f64, tau: f64, s: f64, route: Route) -> Result<Vec<PairingReport>> {
    match kind {
        SurveyKind::Pairings3d => pairings_3d(w, tau, s, alpha, route),
        _ => {
            let mut v = vec![convection_pairing_2d(w, alpha, tau, s, route)?];
            let u = velocity_from_vorticity(w, alpha)?;
            let (a, b) = t1_t2_pairings_2d(&u, alpha, tau, route)?;
            v.push(a);
            v.push(b);
            Ok(v)
        }
    }
}

/// Shell `|k| = 5` in 2D with random phases: its convection pairing vanishes.
fn single_shell_2d(grid: &Grid, seed: u64) -> Result<SpectralField> {
    let w = random_divfree_field(grid, &flat(), 5.0, seed, Rank::Scalar)?;
    Ok(w.map_symbol(|_, n| if (n - 5.0).abs() < 1e-9 { 1.0 } else { 0.0 }))
}

fn scenario_verify(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<Summary> {
    let spec = &cfg.lemmas;
    let mut summary = Summary::new(cfg.scenario.name());
    let tol = spec.tolerance;
    let seeds = |count: usize| (0..count as u64).map(|i| cfg.seed + i).collect::<Vec<_>>();

    // Surveys.
    let surveys = [
        (SurveyKind::Convection2d, spec.n_2d, spec.band_2d, spec.alpha_2d, spec.seeds_2d),
        (SurveyKind::Commutators2d, spec.n_2d, spec.band_2d, spec.alpha_2d, spec.seeds_2d),
        (SurveyKind::Pairings3d, spec.n_3d, spec.band_3d, spec.alpha_3d, spec.seeds_3d),
    ];
    let mut all_reports: Vec<PairingReport> = Vec::new();
    let mut all_summaries: Vec<SurveySummary> = Vec::new();
    for (kind, n, band, alpha, count) in surveys {
        if count == 0 {
            continue;
        }
        let ss = SurveySpec {
            kind,
            n,
            band,
            alpha,
            tau: spec.tau,
            s: spec.s,
            profile: flat(),
            seeds: seeds(count),
        };
        let (reps, sums) = survey(&ss)?;
        all_reports.extend(reps);
        all_summaries.extend(sums);
    }
    for s in &all_summaries {
        summary.checks.push(
            Check::at_most(&format!("ratio_{}", s.lemma), s.max, 1.0, format!("median {:.3e}, {} fields", s.median, s.count))
                .informational(),
        );
    }
    let overflow = all_reports.iter().filter(|r| r.overflow).count();
    summary.metric("overflowed_reports", overflow);

    // Pseudospectral route against the triad sum.
    let oracle: Vec<f64> = [(2usize, spec.n_2d, spec.oracle_band_2d), (3, spec.n_3d, spec.oracle_band_3d)]
        .par_iter()
        .flat_map(|&(dim, n, band)| {
            seeds(spec.oracle_seeds)
                .into_par_iter()
                .map(move |seed| -> Result<f64> {
                    let a = field_reports(dim, n, band, seed, spec, Route::Pseudospectral)?;
                    let b = field_reports(dim, n, band, seed, spec, Route::BruteForce)?;
                    Ok(compare_reports(&a, &b, false))
                })
        })
        .collect::<Result<Vec<_>>>()?;
    let worst_oracle = oracle.iter().cloned().fold(0.0, f64::max);
    summary.checks.push(Check::at_most("oracle_agreement", worst_oracle, tol, format!("{} fields", oracle.len())));

    // Resolution independence of the ratios.
    let refine: Vec<f64> = [(2usize, spec.n_2d, spec.band_2d), (3, spec.n_3d, spec.band_3d)]
        .par_iter()
        .flat_map(|&(dim, n, band)| {
            seeds(spec.refinement_seeds)
                .into_par_iter()
                .map(move |seed| -> Result<f64> {
                    let a = field_reports(dim, n, band, seed, spec, Route::Pseudospectral)?;
                    let b = field_reports(dim, 2 * n, band, seed, spec, Route::Pseudospectral)?;
                    Ok(compare_reports(&a, &b, true))
                })
        })
        .collect::<Result<Vec<_>>>()?;
    let worst_refine = refine.iter().cloned().fold(0.0, f64::max);
    summary.checks.push(Check::at_most("refinement_invariance", worst_refine, tol, format!("{} fields at N and 2N", refine.len())));

    // Amplitude scaling: pairing like lambda^3, ratio unchanged.
    let g2 = Grid::new(2, spec.n_2d)?;
    let tau2 = spec.tau.unwrap_or(0.5 / spec.band_2d as f64);
    let w = random_divfree_field(&g2, &flat(), spec.band_2d as f64, cfg.seed, Rank::Scalar)?;
    let lambda = 3.0;
    let r1 = convection_pairing_2d(&w, spec.alpha_2d, tau2, spec.s, Route::Pseudospectral)?;
    let r3 = convection_pairing_2d(&w.scale(lambda), spec.alpha_2d, tau2, spec.s, Route::Pseudospectral)?;
    let scaling = rel_diff(r3.lhs, lambda.powi(3) * r1.lhs, 1e-300).max(rel_diff(r3.ratio, r1.ratio, 1e-300));
    summary.checks.push(Check::at_most("amplitude_scaling", scaling, tol, "lhs ~ lambda^3, ratio invariant"));

    // Skew symmetry <(u.grad) w, w> = 0.
    let mut skew: f64 = 0.0;
    let plain = vec![WeightTerm::plain(Symbol::One)];
    for (dim, band) in [(2usize, spec.oracle_band_2d), (3, spec.oracle_band_3d)] {
        let g = Grid::new(dim, if dim == 2 { spec.n_2d } else { spec.n_3d })?;
        let rank = if dim == 2 { Rank::Scalar } else { Rank::Vector };
        let w = normalize(&random_divfree_field(&g, &flat(), band as f64, cfg.seed, rank)?, 1.0);
        let u = normalize(&velocity_from_vorticity(&w, 0.0)?, 1.0);
        for route in [Route::Pseudospectral, Route::BruteForce] {
            skew = skew.max(pairing(&u, &w, &w, &plain, route)?.abs());
        }
    }
    summary.checks.push(Check::at_most("skew_symmetry", skew, 1e-12, "|<(u.grad) w, w>| for unit fields"));

    // Exact zeros.
    let mut zeros: f64 = 0.0;
    let tg = taylor_green(&Grid::new(2, spec.n_2d)?, 0.0)?;
    let u_tg = velocity_from_vorticity(&tg, 0.0)?;
    let shell = single_shell_2d(&g2, cfg.seed)?;
    for route in [Route::Pseudospectral, Route::BruteForce] {
        let (a, b) = t1_t2_pairings_2d(&u_tg, spec.alpha_2d, tau2, route)?;
        zeros = zeros.max(a.ratio).max(b.ratio);
        zeros = zeros.max(convection_pairing_2d(&shell, spec.alpha_2d, tau2, spec.s, route)?.ratio);
    }
    summary.checks.push(Check::at_most("exact_zeros", zeros, tol, "Taylor-Green commutators and single-shell convection"));

    // Sign identity over a box.
    let mut bad = 0usize;
    for j in -50i64..=50 {
        for k in -50i64..=50 {
            if k != 0 && !sgn_identity_check(j, k) {
                bad += 1;
            }
        }
    }
    summary.checks.push(Check::at_most("sgn_identity", bad as f64, 0.0, "failures over |j|, |k| <= 50, k != 0"));

    if let Some(dir) = out {
        write_json(&dir.join("lemma_reports.json"), &all_reports)?;
        write_rows_csv(&dir.join("lemma_summary.csv"), &all_summaries)?;
    }
    Ok(summary)
}

#[derive(Serialize)]
struct BernsteinRow {
    q: i32,
    n: f64,
    p1: String,
    p2: String,
    ratio: f64,
}

fn p_name(p: f64) -> String {
    if p.is_infinite() {
        "inf".into()
    } else {
        format!("{p}")
    }
}

fn scenario_lp(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<Summary> {
    let spec = &cfg.lp;
    let cut = CutoffPair::default();
    let mut summary = Summary::new(cfg.scenario.name());
    let g2 = Grid::new(2, spec.n_2d)?;
    let g3 = Grid::new(3, spec.n_3d)?;

    // Partition of unity on every resolved mode.
    let mut part: f64 = 0.0;
    for g in [&g2, &g3] {
        let (lo, hi) = block_range(g);
        for idx in 0..g.len() {
            if g.is_resolved(idx) && g.norms()[idx] > 0.0 {
                part = part.max((cut.partition_sum(g.norms()[idx], lo, hi) - 1.0).abs());
            }
        }
    }
    summary.checks.push(Check::at_most("partition_of_unity", part, 1e-12, "max |sum_q phi_q - 1|"));

    // Almost orthogonality.
    let band = spec.band.min(g2.dealias_cutoff()) as f64;
    let u = random_divfree_field(&g2, &flat(), g2.dealias_cutoff() as f64, cfg.seed, Rank::Scalar)?;
    let blocks = DyadicBlockSet::new(&u, cut);
    let mut ann: f64 = 0.0;
    for (q, b) in blocks.blocks() {
        for (k, _) in blocks.blocks() {
            if (k - q).abs() >= 2 {
                ann = ann.max(dyadic_project(b, k, Projection::Delta, &cut).max_abs());
            }
        }
    }
    summary.checks.push(Check::at_most("block_annihilation", ann, 1e-13, "max |Delta_k Delta_q u|, |k - q| >= 2"));
    let recon = blocks.reconstruct().max_abs_diff(&u) / u.max_abs();
    summary.checks.push(Check::at_most("block_reconstruction", recon, 1e-12, "sum of blocks against u"));

    // Bony decomposition.
    let bony_band = band.min((g2.dealias_cutoff() / 2) as f64);
    let bony: Vec<f64> = (0..spec.pairs as u64)
        .into_par_iter()
        .map(|i| -> Result<f64> {
            let f = random_divfree_field(&g2, &flat(), bony_band, cfg.seed + 2 * i, Rank::Scalar)?;
            let g = random_divfree_field(&g2, &flat(), bony_band, cfg.seed + 2 * i + 1, Rank::Scalar)?;
            let parts = bony_decompose(&f, &g, &cut)?;
            let fg = crate::transform::product(&f, &g)?;
            Ok(parts.sum().max_abs_diff(&fg) / fg.max_abs())
        })
        .collect::<Result<_>>()?;
    let worst_bony = bony.iter().cloned().fold(0.0, f64::max);
    summary.checks.push(Check::at_most("bony_exactness", worst_bony, 1e-12, format!("{} pairs, band {bony_band}", bony.len())));

    // Bernstein ratios.
    let mut rows = Vec::new();
    let (lo, hi) = block_range(&g2);
    let exps = [(2.0, 2.0), (1.0, 2.0), (2.0, f64::INFINITY), (1.0, f64::INFINITY)];
    for q in lo.max(0)..=hi {
        for &n in &spec.bernstein_orders {
            for &(p1, p2) in &exps {
                match bernstein_ratio(&u, q, n, p1, p2, &cut) {
                    Ok(ratio) => rows.push(BernsteinRow { q, n, p1: p_name(p1), p2: p_name(p2), ratio }),
                    Err(Error::ZeroBlock(_)) => {}
                    Err(e) => return Err(e),
                }
            }
        }
    }
    let bmax = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    let bmin = rows.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
    summary.checks.push(Check::at_most("bernstein_upper", bmax, 1.0, format!("{} ratios, min {bmin:.3e}", rows.len())).informational());

    // H^1 product estimate, checked for resolution independence.
    let w3 = random_divfree_field(&g3, &flat(), 4.0, cfg.seed, Rank::Vector)?;
    let u3 = velocity_from_vorticity(&w3, 1.0)?;
    let p1 = h1_product_check(&w3, &u3)?;
    let g3f = Grid::new(3, 2 * spec.n_3d)?;
    let w3f = w3.resample(&g3f)?;
    let p2 = h1_product_check(&w3f, &velocity_from_vorticity(&w3f, 1.0)?)?;
    summary.checks.push(Check::at_most("h1_product_refinement", rel_diff(p1.ratio, p2.ratio, 1e-300), 1e-10, "ratio at N and 2N"));
    summary.checks.push(Check::at_most("h1_product_ratio", p1.ratio, 1.0, "|(w.grad) u|_H1 / (|grad u|_inf |w|_H1)").informational());

    if let Some(dir) = out {
        write_rows_csv(&dir.join("bernstein.csv"), &rows)?;
    }
    Ok(summary)
}

#[derive(Serialize)]
struct FitRow {
    tau: f64,
    s: f64,
    tau_fit: Option<f64>,
    error: Option<f64>,
    failure: Option<String>,
}

fn scenario_fit(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<Summary> {
    let spec = &cfg.fit;
    let mut summary = Summary::new(cfg.scenario.name());
    let grid = Grid::new(2, spec.n)?;
    let mut rows = Vec::new();
    for &s in &spec.s_values {
        for &tau in &spec.taus {
            let p = ShellProfile::Exponential { amplitude: 1.0, rate: tau, s };
            let w = random_divfree_field(&grid, &p, grid.dealias_cutoff() as f64, cfg.seed, Rank::Scalar)?;
            let row = match fit_radius(&w, s, None) {
                Ok(f) => FitRow { tau, s, tau_fit: Some(f.tau_fit), error: Some((f.tau_fit - tau).abs()), failure: None },
                Err(e) => FitRow { tau, s, tau_fit: None, error: None, failure: Some(e.to_string()) },
            };
            let measured = row.error.unwrap_or(f64::INFINITY);
            summary.checks.push(Check::at_most(&format!("fit_tau{tau}_s{s}"), measured, spec.tolerance, "|tau_fit - tau|"));
            rows.push(row);
        }
    }
    if let Some(dir) = out {
        write_rows_csv(&dir.join("fits.csv"), &rows)?;
    }
    Ok(summary)
}

/// Rescales random 3D data so that `kappa ||w0|| = smallness * nu alpha / (2 (1 + alpha^2))`.
pub fn small_data_initial(cfg: &ExperimentConfig, params: &ModelParams) -> Result<FlowState> {
    let mut st = build_initial(cfg)?;
    let a = params.alpha;
    let target = cfg.calibration.smallness * params.nu * a / (2.0 * (1.0 + a * a)) / params.kappa_cal;
    st.omega = normalize(&st.omega, target);
    if cfg.tau0.is_none() {
        st.tau = auto_tau0(&st.omega, params.s).unwrap_or(0.0);
    }
    Ok(st)
}

fn scenario_small_data(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<Summary> {
    if cfg.grid.dim != 3 {
        return Err(Error::WrongDimension("small_data_3d runs on a 3D grid".into()));
    }
    let mut summary = Summary::new(cfg.scenario.name());
    let params = cfg.model.clone().with_law(TauLaw::DSmallData);
    let initial = small_data_initial(cfg, &params)?;
    summary.metric("tau0", initial.tau);
    summary.metric("l2_0", sobolev_norm(&initial.omega, 0.0));
    let (traj, err) = simulate(&initial, &params, &run_options(cfg));
    summary.error = err;
    summary.checks.extend(trajectory_checks(&params, &traj, false));
    add_run_metrics(&mut summary, &traj, &params);
    if let Some(dir) = out {
        write_trajectory(dir, &traj, &params)?;
    }
    Ok(summary)
}

/// `Cbar = c_cal * sup_t e^{nu t / 2} ||Lambda^3 e^{tau0 Lambda^{1/s}} w(t)||` over the samples.
pub fn measured_c_bar(snapshots: &[FlowState], tau0: f64, s: f64, nu: f64, c_cal: f64) -> f64 {
    snapshots
        .iter()
        .map(|st| (0.5 * nu * st.t).exp() * gevrey_norm(&st.omega, tau0, s, 3.0).ln.exp())
        .fold(0.0, f64::max)
        * c_cal
}

/// Floor E at the first fitted radius, with measured or configured `Cbar`.
fn damped_floor(cfg: &ExperimentConfig, params: &ModelParams, traj: &Trajectory, tau0: f64, summary: &mut Summary) -> Option<f64> {
    let fit0 = traj.records.iter().find_map(|r| r.tau_fit)?;
    let c_bar = cfg
        .calibration
        .c_bar
        .unwrap_or_else(|| measured_c_bar(&traj.snapshots, tau0, params.s, params.nu, params.c_cal));
    summary.metric("c_bar", c_bar);
    summary.metric("tau_fit0", fit0);
    theorem_floor(
        FloorVariant::E,
        &FloorInputs {
            tau0: Some(fit0),
            nu: Some(params.nu),
            c_bar: Some(c_bar),
            ..Default::default()
        },
    )
    .ok()
}

fn damped_params(cfg: &ExperimentConfig) -> ModelParams {
    let mut p = cfg.model.clone();
    p.model = ModelKind::DampedEuler;
    if matches!(p.tau_law, TauLaw::A2dBig | TauLaw::B2dSmall | TauLaw::C3dLarge | TauLaw::DSmallData) {
        p.tau_law = TauLaw::Frozen;
    }
    p
}

fn scenario_damped(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<Summary> {
    let mut summary = Summary::new(cfg.scenario.name());
    let params = damped_params(cfg);
    if !(params.nu > 0.0) {
        return Err(Error::InvalidParameter("damped_euler needs nu > 0".into()));
    }
    let initial = build_initial(cfg)?;
    let opts = RunOptions { keep_snapshots: true, ..run_options(cfg) };
    let (traj, err) = simulate(&initial, &params, &opts);
    summary.error = err;
    summary.metric("tau0", initial.tau);
    let tg = matches!(cfg.initial, InitialSpec::TaylorGreen);
    summary.checks.extend(trajectory_checks(&params, &traj, tg));
    if let Some(floor) = damped_floor(cfg, &params, &traj, initial.tau, &mut summary) {
        summary.metric("floor_e", floor);
        if let Some(last) = traj.records.last().and_then(|r| r.tau_fit) {
            summary.checks.push(Check::at_least("fit_above_floor_e", last - floor, 0.0, format!("final fit {last}, floor {floor}")));
            if let Some(first) = traj.records.first().and_then(|r| r.tau_fit) {
                summary.checks.push(Check::at_most("fit_below_initial", last, first, "final fit against tau_fit(0)"));
            }
        }
    }
    add_run_metrics(&mut summary, &traj, &params);
    if let Some(dir) = out {
        write_trajectory(dir, &traj, &params)?;
    }
    Ok(summary)
}

fn scenario_shear(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<Summary> {
    let mut summary = Summary::new(cfg.scenario.name());
    let params = damped_params(cfg);
    let mut cfg = cfg.clone();
    cfg.initial = InitialSpec::BardosTiti;
    if cfg.grid.dim != 3 {
        return Err(Error::WrongDimension("shear_flow runs on a 3D grid".into()));
    }
    let initial = build_initial(&cfg)?;
    let opts = RunOptions { keep_snapshots: params.nu > 0.0, ..run_options(&cfg) };
    let (traj, err) = simulate(&initial, &params, &opts);
    summary.error = err;
    let fits: Vec<f64> = traj.records.iter().filter_map(|r| r.tau_fit).collect();
    summary.metric("tau_fits", &fits);
    if params.nu == 0.0 {
        let decreasing = fits.len() >= 5 && fits.windows(2).all(|w| w[1] < w[0]);
        summary.checks.push(Check::flag(
            "fit_strictly_decreasing",
            decreasing,
            format!("{} fitted samples", fits.len()),
        ));
    } else if let Some(floor) = damped_floor(&cfg, &params, &traj, initial.tau, &mut summary) {
        summary.metric("floor_e", floor);
        let last = fits.last().copied().unwrap_or(0.0);
        summary.checks.push(Check::at_least("fit_above_floor_e", last - floor, 0.0, format!("final fit {last}, floor {floor}")));
    }
    let tail = worst(&traj, |r| Some(r.tail_fraction), true).unwrap_or(0.0);
    summary.checks.push(Check::at_most("resolution", tail, TAIL_THRESHOLD, "max tail fraction").informational());
    add_run_metrics(&mut summary, &traj, &params);
    if let Some(dir) = out {
        write_trajectory(dir, &traj, &params)?;
    }
    Ok(summary)
}

/// Runs the configured scenario. With `out`, writes `config.toml`,
/// `summary.json` and the scenario's artifacts there.
pub fn run_scenario(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<Summary> {
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("config.toml"), cfg.canonical()?)?;
    }
    let res = match cfg.scenario {
        Scenario::Run => scenario_run(cfg, out),
        Scenario::SweepAlpha => scenario_sweep(cfg, out),
        Scenario::VerifyLemmas => scenario_verify(cfg, out),
        Scenario::LpChecks => scenario_lp(cfg, out),
        Scenario::FitRadius => scenario_fit(cfg, out),
        Scenario::SmallData3d => scenario_small_data(cfg, out),
        Scenario::DampedEuler => scenario_damped(cfg, out),
        Scenario::ShearFlow => scenario_shear(cfg, out),
    };
    let summary = match res {
        Ok(s) => s,
        Err(e) => Summary {
            error: Some(e.to_string()),
            ..Summary::new(cfg.scenario.name())
        },
    };
    if let Some(dir) = out {
        std::fs::write(dir.join("summary.json"), summary.to_json()?)?;
    }
    Ok(summary)
}

/// Output directory: explicit, else the config's, else `runs/<scenario>`.
pub fn output_dir(cfg: &ExperimentConfig, explicit: Option<PathBuf>) -> PathBuf {
    explicit
        .or_else(|| cfg.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("runs").join(cfg.scenario.name()))
}

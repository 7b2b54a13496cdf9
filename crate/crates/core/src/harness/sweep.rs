//! Convergence of second-grade solutions to Navier-Stokes as `alpha -> 0`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{c0_small_data_2d, fit_radius, least_squares, theorem_floor, FloorInputs, FloorVariant};
use crate::dynamics::{
    default_dt, run_simulation, z_w_norms, FlowState, ModelKind, ModelParams, RunOptions, TauLaw, Trajectory,
};
use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::operators::{lambda_norm, sobolev_norm, velocity_from_vorticity, vorticity_from_velocity};
use crate::transform::to_physical;

use super::config::SweepSpec;

/// Errors of one second-grade run against the reference.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub alpha: f64,
    /// `sup_t |z|^2 + alpha^2 |grad z|^2` for `z = e^{delta L}(u_alpha - u)`.
    pub e_alpha2: f64,
    /// Same with weight `alpha` on the gradient.
    pub e_alpha1: f64,
    /// `sqrt(e_alpha2)`.
    pub e_unsquared: f64,
    pub under_resolved: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
    pub delta: f64,
    /// How `delta` was chosen.
    pub delta_source: String,
    /// Log-log slopes, present when at least three runs succeeded.
    pub slope: Option<f64>,
    pub slope_alpha1: Option<f64>,
    pub slope_unsquared: Option<f64>,
    /// `e_alpha2` does not increase as `alpha` decreases.
    pub monotone: bool,
    pub dt: f64,
    pub reference_under_resolved: bool,
}

/// Everything the sweep produced.
pub struct SweepOutput {
    pub report: ConvergenceReport,
    pub reference: Option<Trajectory>,
    pub runs: Vec<(f64, Option<Trajectory>)>,
}

fn slope_of(rows: &[ConvergenceRow], pick: impl Fn(&ConvergenceRow) -> f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.error.is_none())
        .map(|r| (r.alpha, pick(r)))
        .filter(|&(a, e)| a > 0.0 && e > 0.0 && e.is_finite())
        .map(|(a, e)| (a.ln(), e.ln()))
        .collect();
    (pts.len() >= 3).then(|| least_squares(&pts).0)
}

/// `delta_fraction * min(fit radius of u0, law-B floor at the smallest alpha)`,
/// falling back to the fit radius alone when the floor underflows to zero.
pub fn choose_delta(u0: &SpectralField, nu: f64, s: f64, tau0: f64, alpha_min: f64, spec: &SweepSpec) -> Result<(f64, String)> {
    if let Some(d) = spec.delta {
        return Ok((d, "configured".into()));
    }
    let fit = fit_radius(u0, s, None)?.tau_fit;
    let w = vorticity_from_velocity(u0, alpha_min)?;
    let (z, wn) = z_w_norms(&w, tau0, s, alpha_min);
    let c0 = c0_small_data_2d(z.ln.exp(), wn.ln.exp(), sobolev_norm(u0, 3.0), nu, 1.0);
    let floor = theorem_floor(
        FloorVariant::B,
        &FloorInputs {
            tau0: Some(tau0),
            c0: Some(c0),
            ..Default::default()
        },
    )?;
    if floor > 0.0 {
        let m = fit.min(floor);
        Ok((spec.delta_fraction * m, format!("fraction of min(fit {fit}, law-B floor {floor})")))
    } else {
        Ok((spec.delta_fraction * fit, format!("fraction of fit {fit}; law-B floor is 0 (C0 = {c0})")))
    }
}

/// Runs the reference once and one second-grade flow per `alpha`, all from
/// the velocity `u0` with a shared step and sample schedule.
pub fn sweep_alpha(u0: &SpectralField, nu: f64, s: f64, tau0: f64, opts: &RunOptions, spec: &SweepSpec) -> Result<SweepOutput> {
    if spec.alphas.iter().any(|&a| !(a > 0.0 && a <= 1.0)) {
        return Err(Error::InvalidParameter("sweep alphas must lie in (0, 1]".into()));
    }
    if u0.grid().dim() != 2 {
        return Err(Error::WrongDimension("the alpha sweep is 2D".into()));
    }
    let alpha_min = spec.alphas.iter().cloned().fold(f64::INFINITY, f64::min);
    let (delta, delta_source) = if sobolev_norm(u0, 0.0) == 0.0 {
        (spec.delta.unwrap_or(0.0), "zero data".to_string())
    } else {
        choose_delta(u0, nu, s, tau0, alpha_min, spec)?
    };
    let dt = opts.dt.unwrap_or_else(|| default_dt(u0.grid().n(), to_physical(u0).sup_norm()));
    let opts = RunOptions {
        dt: Some(dt),
        keep_snapshots: true,
        ..opts.clone()
    };

    // Index 0 is the reference.
    let mut jobs: Vec<(ModelKind, f64)> = vec![(ModelKind::NavierStokes, 0.0)];
    jobs.extend(spec.alphas.iter().map(|&a| (ModelKind::SecondGrade, a)));
    let results: Vec<Result<Trajectory>> = jobs
        .par_iter()
        .map(|&(model, alpha)| {
            let mut p = ModelParams::new(model, nu, alpha).with_law(TauLaw::Frozen);
            p.s = s;
            let w0 = vorticity_from_velocity(u0, alpha)?;
            run_simulation(&FlowState::new(w0, tau0), &p, &opts).map_err(|e| e.source)
        })
        .collect();
    let mut results = results.into_iter();
    let reference = results.next().expect("reference job")?;
    let ref_u: Vec<SpectralField> = reference
        .snapshots
        .iter()
        .map(|st| velocity_from_vorticity(&st.omega, 0.0))
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    let mut runs = Vec::new();
    for (&alpha, res) in spec.alphas.iter().zip(results) {
        match res {
            Ok(traj) => {
                let mut e2: f64 = 0.0;
                let mut e1: f64 = 0.0;
                for (st, u) in traj.snapshots.iter().zip(&ref_u) {
                    let ua = velocity_from_vorticity(&st.omega, alpha)?;
                    let z = ua.sub(u).map_symbol(|_, n| (delta * n).exp());
                    let l2 = sobolev_norm(&z, 0.0).powi(2);
                    let g2 = lambda_norm(&z, 1.0).powi(2);
                    e2 = e2.max(l2 + alpha * alpha * g2);
                    e1 = e1.max(l2 + alpha * g2);
                }
                rows.push(ConvergenceRow {
                    alpha,
                    e_alpha2: e2,
                    e_alpha1: e1,
                    e_unsquared: e2.sqrt(),
                    under_resolved: traj.records.iter().any(|r| r.under_resolved),
                    error: None,
                });
                runs.push((alpha, Some(traj)));
            }
            Err(e) => {
                rows.push(ConvergenceRow {
                    alpha,
                    e_alpha2: f64::NAN,
                    e_alpha1: f64::NAN,
                    e_unsquared: f64::NAN,
                    under_resolved: false,
                    error: Some(e.to_string()),
                });
                runs.push((alpha, None));
            }
        }
    }

    let mut ok: Vec<&ConvergenceRow> = rows.iter().filter(|r| r.error.is_none()).collect();
    ok.sort_by(|a, b| b.alpha.total_cmp(&a.alpha));
    let monotone = ok.windows(2).all(|w| w[1].e_alpha2 <= w[0].e_alpha2);
    let report = ConvergenceReport {
        slope: slope_of(&rows, |r| r.e_alpha2),
        slope_alpha1: slope_of(&rows, |r| r.e_alpha1),
        slope_unsquared: slope_of(&rows, |r| r.e_unsquared),
        rows,
        delta,
        delta_source,
        monotone,
        dt,
        reference_under_resolved: reference.records.iter().any(|r| r.under_resolved),
    };
    Ok(SweepOutput {
        report,
        reference: Some(reference),
        runs,
    })
}

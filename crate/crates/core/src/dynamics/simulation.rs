use std::fmt;

use serde::{Deserialize, Serialize};

use super::params::{FlowState, ModelParams, TauLaw};
use super::stepper::{default_dt, Stepper};
use super::tau::{z_w_norms, LawCInputs, TauContext};
use crate::diagnostics::{
    c0_large_data_3d, c0_small_data_2d, fit_radius, gevrey_norm, sup_gradient, tail_fraction, theorem_floor, xy_norms,
    FloorInputs, FloorVariant, TAIL_THRESHOLD,
};
use crate::error::{Error, Result};
use crate::field::{Rank, SpectralField};
use crate::operators::{divergence_defect, sobolev_norm, velocity_from_vorticity};
use crate::transform::{dealias, to_physical};

/// One time sample of a trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub l2: f64,
    pub h1: f64,
    /// `ln ||e^{tau Lambda^{1/s}} omega||` at the law value of `tau`.
    pub gevrey_log: f64,
    pub x_norm: Option<f64>,
    pub y_norm: Option<f64>,
    pub tau_law: f64,
    pub tau_fit: Option<f64>,
    pub floor: Option<f64>,
    pub grad_sup: f64,
    pub grad_int: f64,
    pub z: Option<f64>,
    pub w: Option<f64>,
    /// `int_0^t W` by trapezoid, 2D only.
    pub w_int: Option<f64>,
    pub tail_fraction: f64,
    pub under_resolved: bool,
}

impl DiagnosticsRecord {
    pub fn gevrey(&self) -> f64 {
        self.gevrey_log.exp()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunOptions {
    pub t_end: f64,
    /// `None` picks [`default_dt`] from the initial speed.
    pub dt: Option<f64>,
    pub sample_every: f64,
    #[serde(default)]
    pub keep_snapshots: bool,
}

/// Output of [`run_simulation`].
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub records: Vec<DiagnosticsRecord>,
    /// States at the sample times, if requested.
    pub snapshots: Vec<FlowState>,
    pub final_state: FlowState,
    pub dt: f64,
    /// `||e^{tau_0 Lambda^{1/s}} omega_0||`.
    pub m0: f64,
    /// Data constant of floors B and C.
    pub c0: Option<f64>,
}

/// A failed run with everything computed before the failure.
#[derive(Debug)]
pub struct SimulationError {
    pub time: f64,
    pub source: Error,
    pub partial: Box<Trajectory>,
}

impl fmt::Display for SimulationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "simulation failed at t = {}: {}", self.time, self.source)
    }
}

impl std::error::Error for SimulationError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.source)
    }
}

struct FloorPlan {
    variant: Option<FloorVariant>,
    inputs: FloorInputs,
}

impl FloorPlan {
    fn value(&self, grad_int: f64) -> Option<f64> {
        let v = self.variant?;
        let inputs = FloorInputs {
            grad_integral: Some(grad_int),
            ..self.inputs.clone()
        };
        theorem_floor(v, &inputs).ok()
    }
}

fn max_speed(u: &SpectralField) -> f64 {
    to_physical(u).sup_norm()
}

/// Running integrals carried between steps.
#[derive(Clone, Copy)]
struct Accum {
    grad_sup: f64,
    grad_int: f64,
    h1_integrand: f64,
    h1_int: f64,
    w: f64,
    w_int: f64,
}

fn diagnose(
    state: &FlowState,
    params: &ModelParams,
    acc: &Accum,
    floor: &FloorPlan,
) -> DiagnosticsRecord {
    let w = &state.omega;
    let dim = w.grid().dim();
    let (x_norm, y_norm) = if dim == 3 {
        match xy_norms(w, state.tau, params.s) {
            Ok((x, y)) => (x.value(), y.value()),
            Err(_) => (None, None),
        }
    } else {
        (None, None)
    };
    let (z, wv) = if dim == 2 {
        let (z, wv) = z_w_norms(w, state.tau, params.s, params.velocity_alpha());
        (z.value(), wv.value())
    } else {
        (None, None)
    };
    let tail = tail_fraction(w);
    DiagnosticsRecord {
        t: state.t,
        l2: sobolev_norm(w, 0.0),
        h1: sobolev_norm(w, 1.0),
        gevrey_log: gevrey_norm(w, state.tau, params.s, 0.0).ln,
        x_norm,
        y_norm,
        tau_law: state.tau,
        tau_fit: fit_radius(w, params.s, None).ok().map(|f| f.tau_fit),
        floor: floor.value(acc.grad_int),
        grad_sup: acc.grad_sup,
        grad_int: acc.grad_int,
        z,
        w: wv,
        w_int: (dim == 2).then_some(acc.w_int),
        tail_fraction: tail,
        under_resolved: tail > TAIL_THRESHOLD,
    }
}

fn w_value(state: &FlowState, params: &ModelParams) -> f64 {
    if state.omega.grid().dim() != 2 {
        return 0.0;
    }
    z_w_norms(&state.omega, state.tau, params.s, params.velocity_alpha()).1.ln.exp()
}

/// Integrates from `initial` to `t_end` with uniform steps, sampling
/// diagnostics every `sample_every` (rounded to a whole number of steps) and
/// at the final time.
pub fn run_simulation(
    initial: &FlowState,
    params: &ModelParams,
    opts: &RunOptions,
) -> std::result::Result<Trajectory, SimulationError> {
    let fail = |source: Error, time: f64| SimulationError {
        time,
        source,
        partial: Box::new(Trajectory {
            records: Vec::new(),
            snapshots: Vec::new(),
            final_state: initial.clone(),
            dt: opts.dt.unwrap_or(0.0),
            m0: 0.0,
            c0: None,
        }),
    };
    let prepared = prepare(initial, params, opts).map_err(|e| fail(e, initial.t))?;
    let Prepared {
        stepper,
        mut ctx,
        floor,
        n_steps,
        stride,
        dt,
        c0,
        mut acc,
        state0,
    } = prepared;
    let gamma = params.gamma();
    let mut traj = Trajectory {
        records: Vec::new(),
        snapshots: Vec::new(),
        final_state: state0.clone(),
        dt,
        m0: ctx.m0,
        c0,
    };
    let mut state = state0;
    let sample = |state: &mut FlowState, traj: &mut Trajectory, acc: &Accum| {
        let rec = diagnose(state, params, acc, &floor);
        if params.tau_law == TauLaw::FitTracking {
            if let Some(f) = rec.tau_fit {
                state.tau = f;
            }
        }
        traj.records.push(rec);
        if opts.keep_snapshots {
            traj.snapshots.push(state.clone());
        }
    };
    sample(&mut state, &mut traj, &acc);
    for step in 1..=n_steps {
        if let Some(lc) = ctx.law_c.as_mut() {
            lc.grad_sup = acc.grad_sup;
            lc.m = (params.c_cal * acc.grad_int).exp();
            lc.h1_integral = acc.h1_int;
        }
        let next = match stepper.step(&state, &ctx) {
            Ok(s) => s.state,
            Err(e) => {
                traj.final_state = state.clone();
                return Err(SimulationError {
                    time: state.t,
                    source: e,
                    partial: Box::new(traj),
                });
            }
        };
        let next = FlowState {
            t: initial.t + step as f64 * dt,
            ..next
        };
        let grad = velocity_from_vorticity(&next.omega, params.velocity_alpha()).and_then(|u| sup_gradient(&u));
        let grad = match grad {
            Ok(g) => g,
            Err(e) => {
                traj.final_state = state.clone();
                return Err(SimulationError {
                    time: next.t,
                    source: e,
                    partial: Box::new(traj),
                });
            }
        };
        let grad_int = acc.grad_int + 0.5 * dt * (acc.grad_sup + grad);
        let m_new = (params.c_cal * grad_int).exp();
        let h1 = sobolev_norm(&next.omega, 1.0);
        let h1_integrand = h1 * h1 * (2.0 * gamma * (next.t - initial.t)).exp() / m_new;
        let w_new = w_value(&next, params);
        acc = Accum {
            grad_sup: grad,
            grad_int,
            h1_integrand,
            h1_int: acc.h1_int + 0.5 * dt * (acc.h1_integrand + h1_integrand),
            w: w_new,
            w_int: acc.w_int + 0.5 * dt * (acc.w + w_new),
        };
        state = next;
        if step % stride == 0 || step == n_steps {
            sample(&mut state, &mut traj, &acc);
        }
    }
    traj.final_state = state;
    Ok(traj)
}

struct Prepared {
    stepper: Stepper,
    ctx: TauContext,
    floor: FloorPlan,
    n_steps: usize,
    stride: usize,
    dt: f64,
    c0: Option<f64>,
    acc: Accum,
    state0: FlowState,
}

fn prepare(initial: &FlowState, params: &ModelParams, opts: &RunOptions) -> Result<Prepared> {
    params.validate()?;
    if !(opts.t_end >= 0.0) || !(opts.sample_every > 0.0) {
        return Err(Error::InvalidParameter("t_end must be >= 0 and sample_every > 0".into()));
    }
    let grid = initial.omega.grid().clone();
    let expected = if grid.dim() == 2 { Rank::Scalar } else { Rank::Vector };
    if initial.omega.rank() != expected {
        return Err(Error::RankMismatch("vorticity rank does not match the grid dimension".into()));
    }
    if grid.dim() == 3 {
        let d = divergence_defect(&initial.omega);
        if d > 1e-10 {
            return Err(Error::InvalidVorticity(d));
        }
    }
    if !(initial.tau >= 0.0) {
        return Err(Error::InvalidParameter(format!("tau0 = {} must be >= 0", initial.tau)));
    }
    let omega = dealias(&initial.omega);
    let state0 = FlowState {
        omega,
        tau: initial.tau,
        t: initial.t,
    };
    let w0 = &state0.omega;
    let tau0 = state0.tau;
    let u0 = velocity_from_vorticity(w0, params.velocity_alpha())?;
    let grad0 = sup_gradient(&u0)?;
    let m0 = gevrey_norm(w0, tau0, params.s, 0.0).ln.exp();
    let x0 = if grid.dim() == 3 {
        xy_norms(w0, tau0, params.s)?.0.ln.exp()
    } else {
        0.0
    };
    let h1_0 = sobolev_norm(w0, 1.0);
    let ctx = TauContext {
        tau0,
        m0,
        law_c: (params.tau_law == TauLaw::C3dLarge).then_some(LawCInputs {
            grad_sup: grad0,
            m: 1.0,
            h1_integral: 0.0,
            x0,
        }),
    };

    let base = FloorInputs {
        tau0: Some(tau0),
        m0: Some(m0),
        nu: Some(params.nu),
        alpha: Some(params.alpha),
        c_cal: Some(params.c_cal),
        kappa_cal: Some(params.kappa_cal),
        ..Default::default()
    };
    let (variant, c0) = match params.tau_law {
        TauLaw::A2dBig => (Some(FloorVariant::A), None),
        TauLaw::B2dSmall => {
            let (z, w) = z_w_norms(w0, tau0, params.s, params.velocity_alpha());
            let c0 = c0_small_data_2d(z.ln.exp(), w.ln.exp(), sobolev_norm(&u0, 3.0), params.nu, params.c_cal);
            (Some(FloorVariant::B), Some(c0))
        }
        TauLaw::C3dLarge => (
            Some(FloorVariant::C),
            Some(c0_large_data_3d(tau0, h1_0, x0, params.nu, params.alpha, params.c_cal)),
        ),
        TauLaw::DSmallData => (Some(FloorVariant::D), None),
        _ => (None, None),
    };
    let floor = FloorPlan {
        variant,
        inputs: FloorInputs { c0, ..base },
    };

    let dt_req = match opts.dt {
        Some(dt) => dt,
        None => default_dt(grid.n(), max_speed(&u0)),
    };
    let n_steps = if opts.t_end == 0.0 {
        0
    } else {
        (opts.t_end / dt_req - 1e-9).ceil().max(1.0) as usize
    };
    let dt = if n_steps == 0 { dt_req } else { opts.t_end / n_steps as f64 };
    let stride = ((opts.sample_every / dt).round() as usize).max(1);
    let stepper = Stepper::new(&grid, params, dt)?;
    let w_start = w_value(&state0, params);
    Ok(Prepared {
        stepper,
        ctx,
        floor,
        n_steps,
        stride,
        dt,
        c0,
        acc: Accum {
            grad_sup: grad0,
            grad_int: 0.0,
            h1_integrand: h1_0 * h1_0,
            h1_int: 0.0,
            w: w_start,
            w_int: 0.0,
        },
        state0,
    })
}

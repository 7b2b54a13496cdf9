use super::params::{FlowState, ModelParams, TauLaw};
use super::rhs::nonlinear_term;
use super::tau::{law_d_tau, tau_rhs, TauContext};
use crate::error::{Error, Result};
use crate::field::{Rank, SpectralField};
use crate::grid::Grid;
use crate::operators::leray;

/// Largest accepted `dt * n * max|u|`.
pub const CFL_LIMIT: f64 = 2.0;

/// Default step `min(1e-3, 0.5 / (n max|u|))`.
pub fn default_dt(n: usize, max_speed: f64) -> f64 {
    if max_speed > 0.0 {
        (0.5 / (n as f64 * max_speed)).min(1e-3)
    } else {
        1e-3
    }
}

/// Integrating-factor (Lawson) RK4 for `omega' = -L omega + N(omega)` with
/// `tau` advanced by classical RK4 on the same stages.
pub struct Stepper {
    params: ModelParams,
    dt: f64,
    grid: Grid,
    half: Vec<f64>,
    full: Vec<f64>,
}

/// Result of one step.
#[derive(Clone, Debug)]
pub struct Step {
    pub state: FlowState,
    /// `max|u|` at the start of the step.
    pub max_speed: f64,
}

impl Stepper {
    pub fn new(grid: &Grid, params: &ModelParams, dt: f64) -> Result<Stepper> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidParameter(format!("dt = {dt} must be positive")));
        }
        params.validate()?;
        let half = grid
            .norms()
            .iter()
            .map(|&n| (-params.linear_rate(n) * dt / 2.0).exp())
            .collect::<Vec<f64>>();
        let full = half.iter().map(|e| e * e).collect();
        Ok(Stepper {
            params: params.clone(),
            dt,
            grid: grid.clone(),
            half,
            full,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// `out = e * f + a * g` per coefficient, with `g` optional.
    fn combine(f: &SpectralField, e: &[f64], g: Option<(f64, &SpectralField)>) -> SpectralField {
        let mut out = f.clone();
        for c in 0..out.num_components() {
            let o = out.component_mut(c);
            match g {
                Some((a, g)) => {
                    for ((v, e), x) in o.iter_mut().zip(e).zip(g.component(c)) {
                        *v = *v * *e + x * a;
                    }
                }
                None => {
                    for (v, e) in o.iter_mut().zip(e) {
                        *v *= *e;
                    }
                }
            }
        }
        out
    }

    fn stage(&self, omega: &SpectralField) -> Result<(SpectralField, f64)> {
        if self.params.nonlinear {
            let nl = nonlinear_term(omega, &self.params)?;
            Ok((nl.term, nl.max_speed))
        } else {
            Ok((SpectralField::zeros(&self.grid, omega.rank()), 0.0))
        }
    }

    pub fn step(&self, state: &FlowState, ctx: &TauContext) -> Result<Step> {
        let dt = self.dt;
        let h = dt / 2.0;
        let w = &state.omega;
        let t = state.t;
        // Laws A-C have the form tau' = -tau (a + b tau), stiff in tau once the norms
        // are large. RK4 runs on y = 1/tau, where y' = a y + b stays mild.
        let recip = state.tau > 0.0 && matches!(self.params.tau_law, TauLaw::A2dBig | TauLaw::B2dSmall | TauLaw::C3dLarge);
        let y0 = 1.0 / state.tau;
        let tau_of = |dy: f64| if recip { 1.0 / (y0 + dy) } else { state.tau };
        let slope = |omega: &SpectralField, tau: f64, time: f64| -> Result<f64> {
            if !recip {
                return Ok(0.0);
            }
            let s = FlowState { omega: omega.clone(), tau, t: time };
            Ok(-tau_rhs(&s, &self.params, ctx)? / (tau * tau))
        };

        let (k1, max_speed) = self.stage(w)?;
        if dt * self.grid.n() as f64 * max_speed > CFL_LIMIT {
            return Err(Error::StepRejected {
                t,
                dt,
                suggested: default_dt(self.grid.n(), max_speed),
            });
        }
        let q1 = slope(w, state.tau, t)?;

        let mut a = w.clone();
        a.axpy(h, &k1);
        let a = Self::combine(&a, &self.half, None);
        let (k2, _) = self.stage(&a)?;
        let q2 = slope(&a, tau_of(h * q1), t + h)?;

        let b = Self::combine(w, &self.half, Some((h, &k2)));
        let (k3, _) = self.stage(&b)?;
        let q3 = slope(&b, tau_of(h * q2), t + h)?;

        let mut c = Self::combine(&k3, &self.half, None);
        c = Self::combine(w, &self.full, Some((dt, &c)));
        let (k4, _) = self.stage(&c)?;
        let q4 = slope(&c, tau_of(dt * q3), t + dt)?;

        let mut next = w.clone();
        for comp in 0..next.num_components() {
            let (x1, x2, x3, x4) = (k1.component(comp), k2.component(comp), k3.component(comp), k4.component(comp));
            for (i, v) in next.component_mut(comp).iter_mut().enumerate() {
                let (e, e2) = (self.half[i], self.full[i]);
                *v = (*v + x1[i] * (dt / 6.0)) * e2 + (x2[i] + x3[i]) * (e * dt / 3.0) + x4[i] * (dt / 6.0);
            }
        }
        if next.rank() == Rank::Vector {
            next = leray(&next)?;
        }
        if !next.is_finite() {
            return Err(Error::BlowUp { t: t + dt });
        }

        let tau = match self.params.tau_law {
            TauLaw::DSmallData => law_d_tau(&self.params, ctx, t + dt),
            _ => tau_of(dt / 6.0 * (q1 + 2.0 * q2 + 2.0 * q3 + q4)),
        };
        let tau = if tau.is_finite() { tau.max(0.0) } else { 0.0 };
        Ok(Step {
            state: FlowState { omega: next, tau, t: t + dt },
            max_speed,
        })
    }
}

/// One step from `state`.
pub fn advance(state: &FlowState, params: &ModelParams, dt: f64, ctx: &TauContext) -> Result<FlowState> {
    Ok(Stepper::new(state.omega.grid(), params, dt)?.step(state, ctx)?.state)
}

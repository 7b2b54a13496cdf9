use super::params::{FlowState, LawCVariant, ModelParams, TauLaw};
use crate::diagnostics::{gevrey_norm, log_weighted_norm, xy_norms, LogNorm};
use crate::error::{Error, Result};
use crate::field::SpectralField;

/// Trajectory functionals entering law C, frozen at the start of a step.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LawCInputs {
    /// `||grad u||_inf`.
    pub grad_sup: f64,
    /// `M(t) = exp(C int_0^t ||grad u||_inf)`.
    pub m: f64,
    /// `int_0^t ||omega||_{H^1}^2 e^{2 gamma s} / M(s) ds`.
    pub h1_integral: f64,
    /// `||omega_0||_{X_{s,tau_0}}`.
    pub x0: f64,
}

/// Everything besides the state that a tau law may read.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct TauContext {
    pub tau0: f64,
    /// `||e^{tau_0 Lambda^{1/s}} omega_0||`.
    pub m0: f64,
    pub law_c: Option<LawCInputs>,
}

/// `Z = ||Lambda e^{tau Lambda^{1/s}} curl u||^2` and `W = ||e^{tau Lambda^{1/s}} curl Laplace u||^2`
/// in log form, using `curl u = (I - alpha^2 Laplace)^{-1} omega`.
pub fn z_w_norms(omega: &SpectralField, tau: f64, s: f64, alpha: f64) -> (LogNorm, LogNorm) {
    let helm = |n: f64| -2.0 * (1.0 + alpha * alpha * n * n).ln();
    let z = log_weighted_norm(omega, |_, n| 2.0 * n.ln() + 2.0 * tau * n.powf(1.0 / s) + helm(n));
    let w = log_weighted_norm(omega, |_, n| 4.0 * n.ln() + 2.0 * tau * n.powf(1.0 / s) + helm(n));
    (LogNorm { ln: 2.0 * z.ln }, LogNorm { ln: 2.0 * w.ln })
}

/// `int_0^t e^{-gamma s / 2} ds`.
pub fn law_d_integral(gamma: f64, t: f64) -> f64 {
    if gamma == 0.0 {
        t
    } else {
        2.0 / gamma * (1.0 - (-gamma * t / 2.0).exp())
    }
}

/// Closed-form law-D radius at time `t`.
pub fn law_d_tau(params: &ModelParams, ctx: &TauContext, t: f64) -> f64 {
    ctx.tau0 * (-params.c_cal * ctx.m0 * law_d_integral(params.gamma(), t) / params.alpha).exp()
}

fn finite_or_inf(v: LogNorm) -> f64 {
    v.ln.exp()
}

/// `d tau / dt` for the configured law at the given state.
pub fn tau_rhs(state: &FlowState, params: &ModelParams, ctx: &TauContext) -> Result<f64> {
    let tau = state.tau;
    let c = params.c_cal;
    let alpha = params.alpha;
    let guard = |law: &'static str| {
        if alpha == 0.0 {
            Err(Error::InvalidLawForAlpha { law, alpha })
        } else {
            Ok(())
        }
    };
    let rate = match params.tau_law {
        TauLaw::Frozen | TauLaw::FitTracking => 0.0,
        TauLaw::A2dBig => {
            guard("A")?;
            let g = finite_or_inf(gevrey_norm(&state.omega, tau, params.s, 0.0));
            -c * tau / alpha * g
        }
        TauLaw::B2dSmall => {
            if params.nu == 0.0 {
                return Err(Error::InvalidParameter("tau law B needs nu > 0".into()));
            }
            let (_, w) = z_w_norms(&state.omega, tau, params.s, params.velocity_alpha());
            -c * tau * tau / params.nu * finite_or_inf(w)
        }
        TauLaw::DSmallData => {
            guard("D")?;
            -c * ctx.m0 * (-params.gamma() * state.t / 2.0).exp() * tau / alpha
        }
        TauLaw::C3dLarge => {
            guard("C")?;
            let lc = ctx.law_c.ok_or(Error::MissingInput { variant: "C", name: "law_c" })?;
            let h1 = crate::operators::sobolev_norm(&state.omega, 1.0);
            let bound = match params.law_c_variant {
                LawCVariant::Literal => {
                    lc.m * (-2.0 * params.gamma() * state.t).exp()
                        * (lc.x0 + c / alpha * (1.0 + ctx.tau0) * lc.h1_integral)
                }
                LawCVariant::Running => finite_or_inf(xy_norms(&state.omega, tau, params.s)?.0),
            };
            -c * tau * lc.grad_sup - c * tau * tau / alpha * h1 - c * tau * tau / alpha * bound
        }
    };
    if rate.is_nan() {
        return Err(Error::BlowUp { t: state.t });
    }
    Ok(rate)
}

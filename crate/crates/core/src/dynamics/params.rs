use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::SpectralField;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    SecondGrade,
    DampedEuler,
    NavierStokes,
}

/// How the Gevrey radius `tau(t)` is advanced alongside the flow.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TauLaw {
    /// `tau' = -(C tau / alpha) ||e^{tau Lambda^{1/s}} omega||`.
    #[serde(rename = "A_2d_big")]
    A2dBig,
    /// `tau' = -(C tau^2 / nu) W(t)`.
    #[serde(rename = "B_2d_small")]
    B2dSmall,
    /// The four-term 3D law driven by `||grad u||_inf`, `||omega||_{H^1}` and `M(t)`.
    #[serde(rename = "C_3d_large")]
    C3dLarge,
    /// Closed form `tau0 exp(-(C M0 / alpha) int_0^t e^{-gamma s / 2} ds)`.
    #[serde(rename = "D_small_data")]
    DSmallData,
    /// `tau` is reset to the fitted radius at every sample.
    #[serde(rename = "fit_tracking")]
    FitTracking,
    #[serde(rename = "frozen")]
    Frozen,
}

/// Which norm bounds the future `X` norm in law C.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LawCVariant {
    /// The a priori bound built from `||omega_0||_X`.
    #[default]
    Literal,
    /// The running `||omega(t)||_{X_{s,tau(t)}}`.
    Running,
}

fn one() -> f64 {
    1.0
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub nu: f64,
    pub alpha: f64,
    #[serde(default = "one")]
    pub s: f64,
    pub model: ModelKind,
    pub tau_law: TauLaw,
    #[serde(default = "one")]
    pub c_cal: f64,
    #[serde(default = "one")]
    pub kappa_cal: f64,
    #[serde(default)]
    pub law_c_variant: LawCVariant,
    /// Test hook: `false` drops transport and stretching.
    #[serde(default = "yes")]
    pub nonlinear: bool,
}

impl ModelParams {
    pub fn new(model: ModelKind, nu: f64, alpha: f64) -> ModelParams {
        ModelParams {
            nu,
            alpha,
            s: 1.0,
            model,
            tau_law: TauLaw::Frozen,
            c_cal: 1.0,
            kappa_cal: 1.0,
            law_c_variant: LawCVariant::Literal,
            nonlinear: true,
        }
    }

    pub fn with_law(mut self, law: TauLaw) -> ModelParams {
        self.tau_law = law;
        self
    }

    /// `gamma = nu / (2 + 2 alpha^2)`.
    pub fn gamma(&self) -> f64 {
        self.nu / (2.0 + 2.0 * self.alpha * self.alpha)
    }

    /// The `alpha` used by the Biot-Savart inversion; zero except for second grade.
    pub fn velocity_alpha(&self) -> f64 {
        match self.model {
            ModelKind::SecondGrade => self.alpha,
            _ => 0.0,
        }
    }

    /// Decay rate of the linear part at `|k|`, so that `d omega_k/dt = -rate omega_k + ...`.
    pub fn linear_rate(&self, norm: f64) -> f64 {
        let k2 = norm * norm;
        match self.model {
            ModelKind::SecondGrade => self.nu * k2 / (1.0 + self.alpha * self.alpha * k2),
            ModelKind::DampedEuler => self.nu,
            ModelKind::NavierStokes => self.nu * k2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.nu >= 0.0) || !(self.alpha >= 0.0) || !self.nu.is_finite() || !self.alpha.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "nu = {} and alpha = {} must be finite and >= 0",
                self.nu, self.alpha
            )));
        }
        if !(self.s >= 1.0) {
            return Err(Error::InvalidParameter(format!("Gevrey index s = {} must be >= 1", self.s)));
        }
        let name = match self.tau_law {
            TauLaw::A2dBig => "A",
            TauLaw::C3dLarge => "C",
            TauLaw::DSmallData => "D",
            _ => "",
        };
        if !name.is_empty() && self.alpha == 0.0 {
            return Err(Error::InvalidLawForAlpha { law: name, alpha: self.alpha });
        }
        if self.tau_law == TauLaw::B2dSmall && self.nu == 0.0 {
            return Err(Error::InvalidParameter("tau law B needs nu > 0".into()));
        }
        Ok(())
    }
}

/// Vorticity, Gevrey radius and time.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowState {
    pub omega: SpectralField,
    pub tau: f64,
    pub t: f64,
}

impl FlowState {
    pub fn new(omega: SpectralField, tau: f64) -> FlowState {
        FlowState { omega, tau, t: 0.0 }
    }
}

//! Gevrey norms in the log domain, radius fits, theorem floors and
//! velocity-gradient bounds.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Rank, SpectralField};
use crate::grid::{Grid, Wavevector};
use crate::operators::partial;
use crate::transform::inverse_components;

/// A nonnegative quantity stored as its natural logarithm.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogNorm {
    /// `ln` of the value; `-inf` for zero.
    pub ln: f64,
}

impl LogNorm {
    pub fn zero() -> LogNorm {
        LogNorm { ln: f64::NEG_INFINITY }
    }

    pub fn from_value(v: f64) -> LogNorm {
        LogNorm { ln: v.ln() }
    }

    /// The value itself, if it fits in an `f64`.
    pub fn value(&self) -> Option<f64> {
        let v = self.ln.exp();
        v.is_finite().then_some(v)
    }

    /// `sqrt(a^2 + b^2)` without leaving the log domain.
    pub fn hypot(self, other: LogNorm) -> LogNorm {
        LogNorm { ln: 0.5 * log_add(2.0 * self.ln, 2.0 * other.ln) }
    }
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// `ln sqrt((2pi)^d sum_k exp(logw(k)) |v_k|^2)`, falling back to log-sum-exp
/// when the weights are large. `logw` may return `-inf` to drop a mode.
pub fn log_weighted_norm(field: &SpectralField, logw: impl Fn(&Wavevector, f64) -> f64) -> LogNorm {
    let grid = field.grid();
    let mut terms = Vec::new();
    let mut top = f64::NEG_INFINITY;
    for comp in field.components() {
        for (idx, v) in comp.iter().enumerate() {
            let a = v.norm_sqr();
            if a == 0.0 {
                continue;
            }
            let w = logw(&grid.wavevector(idx), grid.norms()[idx]);
            if w == f64::NEG_INFINITY {
                continue;
            }
            top = top.max(w);
            terms.push((w, a));
        }
    }
    if terms.is_empty() {
        return LogNorm::zero();
    }
    // Direct summation is exact enough while the weights stay representable.
    if top < 600.0 {
        let s: f64 = terms.iter().map(|(w, a)| w.exp() * a).sum();
        if s > 0.0 && s.is_finite() {
            return LogNorm { ln: 0.5 * (grid.volume() * s).ln() };
        }
    }
    let logs: Vec<f64> = terms.iter().map(|(w, a)| w + a.ln()).collect();
    let m = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let s: f64 = logs.iter().map(|t| (t - m).exp()).sum();
    LogNorm { ln: 0.5 * (grid.volume().ln() + m + s.ln()) }
}

fn log_power(x: f64, p: f64) -> f64 {
    if p == 0.0 {
        0.0
    } else if x == 0.0 {
        f64::NEG_INFINITY
    } else {
        p * x.ln()
    }
}

/// `||Lambda^r e^{tau Lambda^{1/s}} v||`.
pub fn gevrey_norm(field: &SpectralField, tau: f64, s: f64, r: f64) -> LogNorm {
    log_weighted_norm(field, |_, n| log_power(n, 2.0 * r) + 2.0 * tau * n.powf(1.0 / s))
}

/// `||Lambda_m^r e^{tau Lambda_m^{1/s}} v||` with `m` counted from 1.
pub fn gevrey_norm_m(field: &SpectralField, m: usize, tau: f64, s: f64, r: f64) -> LogNorm {
    log_weighted_norm(field, |k, _| {
        let km = k[m - 1].unsigned_abs() as f64;
        log_power(km, 2.0 * r) + 2.0 * tau * km.powf(1.0 / s)
    })
}

/// The directional norms `X_{s,tau}` and `Y_{s,tau}` of a 3D field.
pub fn xy_norms(omega: &SpectralField, tau: f64, s: f64) -> Result<(LogNorm, LogNorm)> {
    if omega.grid().dim() != 3 {
        return Err(Error::WrongDimension("X and Y norms are defined in 3D".into()));
    }
    let mut x = LogNorm::zero();
    let mut y = LogNorm::zero();
    for m in 1..=3 {
        x = x.hypot(gevrey_norm_m(omega, m, tau, s, 1.0));
        y = y.hypot(gevrey_norm_m(omega, m, tau, s, 1.0 + s / 2.0));
    }
    Ok((x, y))
}

/// Outcome of [`fit_radius`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadiusFit {
    pub tau_fit: f64,
    pub s: f64,
    pub shell_range: (usize, usize),
    /// RMS residual of the log-linear fit.
    pub residual: f64,
    pub n_shells_used: usize,
}

pub const MIN_FIT_SHELLS: usize = 4;

/// Default window `[2, floor(n/3) - 2]`.
pub fn default_fit_window(grid: &Grid) -> (usize, usize) {
    (2, grid.dealias_cutoff().saturating_sub(2).max(2))
}

/// Estimates the decay rate of the coefficients from the peak modulus on each
/// integer shell `round(|k|) = n`. The peak is regressed on `|k*|^{1/s}`,
/// where `k*` is the wavevector attaining it, so exact profiles are fitted
/// exactly.
pub fn fit_radius(field: &SpectralField, s: f64, shell_range: Option<(usize, usize)>) -> Result<RadiusFit> {
    let grid = field.grid();
    let (lo, hi) = shell_range.unwrap_or_else(|| default_fit_window(grid));
    let lo = lo.max(1);
    let global = field.max_abs();
    if global == 0.0 || !global.is_finite() {
        return Err(Error::AllBelowFloor);
    }
    let floor = 1e3 * f64::EPSILON * global;
    let shells = hi.saturating_sub(lo) + 1;
    let mut peak = vec![0.0f64; shells];
    let mut at = vec![0.0f64; shells];
    for idx in 0..grid.len() {
        let n = grid.norms()[idx];
        let shell = n.round() as usize;
        if shell < lo || shell > hi {
            continue;
        }
        let m = field
            .components()
            .iter()
            .map(|c| c[idx].norm())
            .fold(0.0, f64::max);
        let slot = shell - lo;
        if m > peak[slot] {
            peak[slot] = m;
            at[slot] = n;
        }
    }
    let pts: Vec<(f64, f64)> = peak
        .iter()
        .zip(&at)
        .filter(|(&p, _)| p > floor)
        .map(|(&p, &k)| (k.powf(1.0 / s), p.ln()))
        .collect();
    if pts.len() < MIN_FIT_SHELLS {
        return Err(Error::TooFewShells {
            found: pts.len(),
            required: MIN_FIT_SHELLS,
        });
    }
    let (slope, intercept) = least_squares(&pts);
    let residual =
        (pts.iter().map(|(x, y)| (y - intercept - slope * x).powi(2)).sum::<f64>() / pts.len() as f64).sqrt();
    Ok(RadiusFit {
        tau_fit: (-slope).max(0.0),
        s,
        shell_range: (lo, hi),
        residual,
        n_shells_used: pts.len(),
    })
}

/// Ordinary least-squares line `y = a + b x`, returned as `(b, a)`.
pub fn least_squares(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    let b = sxy / sxx;
    (b, my - b * mx)
}

/// Which closed-form lower bound on the radius to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FloorVariant {
    /// 2D large data: `tau0 exp(-C (2 + 2 alpha^2) M0 / (alpha nu))`.
    A,
    /// 2D small data: `tau0 / (1 + tau0 C0)`.
    B,
    /// 3D large data: `(tau0 / C0) exp(-C int ||grad u||_inf)`.
    C,
    /// 3D small data: `tau0 exp(-kappa (4 + 4 alpha^2) M0 / (nu alpha))`.
    D,
    /// Damped Euler: `tau0 exp(-2 Cbar / nu)`.
    E,
}

/// Inputs to [`theorem_floor`]; each variant reads only what it needs.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FloorInputs {
    pub tau0: Option<f64>,
    pub m0: Option<f64>,
    pub nu: Option<f64>,
    pub alpha: Option<f64>,
    pub c_cal: Option<f64>,
    pub kappa_cal: Option<f64>,
    pub c0: Option<f64>,
    pub grad_integral: Option<f64>,
    pub c_bar: Option<f64>,
}

fn need(v: Option<f64>, variant: &'static str, name: &'static str) -> Result<f64> {
    v.ok_or(Error::MissingInput { variant, name })
}

pub fn theorem_floor(variant: FloorVariant, inp: &FloorInputs) -> Result<f64> {
    let floor = match variant {
        FloorVariant::A => {
            let v = "A";
            let (tau0, m0, nu, alpha, c) = (
                need(inp.tau0, v, "tau0")?,
                need(inp.m0, v, "m0")?,
                need(inp.nu, v, "nu")?,
                need(inp.alpha, v, "alpha")?,
                need(inp.c_cal, v, "c_cal")?,
            );
            tau0 * (-c * (2.0 + 2.0 * alpha * alpha) * m0 / (alpha * nu)).exp()
        }
        FloorVariant::B => {
            let tau0 = need(inp.tau0, "B", "tau0")?;
            let c0 = need(inp.c0, "B", "c0")?;
            if c0.is_finite() {
                tau0 / (1.0 + tau0 * c0)
            } else {
                0.0
            }
        }
        FloorVariant::C => {
            let v = "C";
            let (tau0, c0, c, int) = (
                need(inp.tau0, v, "tau0")?,
                need(inp.c0, v, "c0")?,
                need(inp.c_cal, v, "c_cal")?,
                need(inp.grad_integral, v, "grad_integral")?,
            );
            tau0 / c0 * (-c * int).exp()
        }
        FloorVariant::D => {
            let v = "D";
            let (tau0, m0, nu, alpha, kappa) = (
                need(inp.tau0, v, "tau0")?,
                need(inp.m0, v, "m0")?,
                need(inp.nu, v, "nu")?,
                need(inp.alpha, v, "alpha")?,
                need(inp.kappa_cal, v, "kappa_cal")?,
            );
            tau0 * (-kappa * (4.0 + 4.0 * alpha * alpha) * m0 / (nu * alpha)).exp()
        }
        FloorVariant::E => {
            let tau0 = need(inp.tau0, "E", "tau0")?;
            let nu = need(inp.nu, "E", "nu")?;
            let c_bar = need(inp.c_bar, "E", "c_bar")?;
            tau0 * (-2.0 * c_bar / nu).exp()
        }
    };
    Ok(if floor.is_nan() { 0.0 } else { floor.max(0.0) })
}

/// `C0 = (Z0 + W0) (1/nu^2 + C M0^4 e^{C M0^4 / nu^4} / nu^6)` with `M0 = ||u0||_{H^3}`.
/// Overflows to `+inf` for large data; the floor is then zero.
pub fn c0_small_data_2d(z0: f64, w0: f64, m0_h3: f64, nu: f64, c: f64) -> f64 {
    let m4 = m0_h3.powi(4);
    (z0 + w0) * (1.0 / (nu * nu) + c * m4 * (c * m4 / nu.powi(4)).exp() / nu.powi(6))
}

/// `C0 = 1 + C tau0 (|w0|_{H^1} + |w0|_X)(1+a^2)/(nu a) + C tau0 (1+tau0) |w0|_{H^1}^2 (1+a^2)^2/(nu a)^2`.
pub fn c0_large_data_3d(tau0: f64, h1: f64, x: f64, nu: f64, alpha: f64, c: f64) -> f64 {
    let a2 = 1.0 + alpha * alpha;
    1.0 + c * tau0 * (h1 + x) * a2 / (nu * alpha) + c * tau0 * (1.0 + tau0) * h1 * h1 * a2 * a2 / (nu * nu * alpha * alpha)
}

/// Sampled velocity gradient `d_j u_i`, component `i * d + j`.
pub fn velocity_gradient(u: &SpectralField) -> Result<Vec<Vec<f64>>> {
    if u.rank() != Rank::Vector {
        return Err(Error::RankMismatch("velocity gradient of a scalar field".into()));
    }
    let dim = u.grid().dim();
    let mut parts = Vec::with_capacity(dim * dim);
    for j in 0..dim {
        parts.push(partial(u, j));
    }
    let mut refs = Vec::with_capacity(dim * dim);
    for i in 0..dim {
        for p in &parts {
            refs.push(p.component(i));
        }
    }
    Ok(inverse_components(u.grid(), &refs))
}

/// Collocation maximum of the Frobenius norm of `grad u` on the field's grid.
pub fn sup_gradient(u: &SpectralField) -> Result<f64> {
    let g = velocity_gradient(u)?;
    let len = u.grid().len();
    Ok((0..len)
        .map(|p| g.iter().map(|c| c[p] * c[p]).sum::<f64>().sqrt())
        .fold(0.0, f64::max))
}

/// Smallest power of two `>= max(8, 4 B)`.
pub fn canonical_points(band: usize) -> usize {
    (4 * band).max(8).next_power_of_two()
}

/// [`sup_gradient`] evaluated on the canonical grid for the field's band
/// limit, so the value does not depend on the working resolution.
pub fn sup_gradient_canonical(u: &SpectralField) -> Result<f64> {
    let g = Grid::new(u.grid().dim(), canonical_points(u.band_limit()))?;
    sup_gradient(&u.resample(&g)?)
}

/// Fraction of `sum |v_k|^2` carried by `|k| > 2K/3`, `K = floor(n/3)`.
pub fn tail_fraction(field: &SpectralField) -> f64 {
    let grid = field.grid();
    let edge = 2.0 * grid.dealias_cutoff() as f64 / 3.0;
    let mut tail = 0.0;
    let mut total = 0.0;
    for comp in field.components() {
        for (idx, v) in comp.iter().enumerate() {
            let a = v.norm_sqr();
            total += a;
            if grid.norms()[idx] > edge {
                tail += a;
            }
        }
    }
    if total == 0.0 {
        0.0
    } else {
        tail / total
    }
}

pub const TAIL_THRESHOLD: f64 = 1e-3;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{sobolev_norm, velocity_from_vorticity};
    use crate::random::{random_divfree_field, ShellProfile};
    use crate::transform::to_spectral;
    use crate::PhysicalField;
    use num_complex::Complex64;

    fn cos_x1(g: &Grid) -> SpectralField {
        SpectralField::from_modes(g, Rank::Scalar, &[([1, 0, 0], 0, Complex64::new(0.5, 0.0))]).unwrap()
    }

    #[test]
    fn gevrey_norm_basics() {
        let g = Grid::new(2, 16).unwrap();
        let f = cos_x1(&g);
        let l2 = sobolev_norm(&f, 0.0);
        let n = gevrey_norm(&f, 2f64.ln(), 1.0, 0.0).value().unwrap();
        assert!((n - 2.0 * l2).abs() < 1e-14);
        let n0 = gevrey_norm(&f, 0.0, 1.0, 0.0).value().unwrap();
        assert!((n0 - l2).abs() < 1e-14);
        assert_eq!(gevrey_norm(&SpectralField::zeros(&g, Rank::Scalar), 1.0, 1.0, 0.0).value(), Some(0.0));
    }

    #[test]
    fn gevrey_norm_never_overflows() {
        let g = Grid::new(2, 32).unwrap();
        let f = cos_x1(&g);
        let n = gevrey_norm(&f, 1e6, 1.0, 0.0);
        assert!(n.ln.is_finite());
        assert_eq!(n.value(), None);
    }

    #[test]
    fn xy_single_mode() {
        let g = Grid::new(3, 8).unwrap();
        let w = SpectralField::from_modes(&g, Rank::Vector, &[([1, 0, 0], 1, Complex64::new(1.0, 0.0))]).unwrap();
        let (x, y) = xy_norms(&w, 0.0, 2.0).unwrap();
        let l2 = sobolev_norm(&w, 0.0);
        assert!((x.value().unwrap() - l2).abs() < 1e-13);
        assert!((y.value().unwrap() - x.value().unwrap()).abs() < 1e-13);
        assert!(xy_norms(&cos_x1(&Grid::new(2, 8).unwrap()), 0.0, 1.0).is_err());
    }

    fn synthetic(g: &Grid, tau: f64, s: f64) -> SpectralField {
        let p = ShellProfile::Exponential { amplitude: 1.0, rate: tau, s };
        random_divfree_field(g, &p, g.dealias_cutoff() as f64, 3, Rank::Scalar).unwrap()
    }

    #[test]
    fn fit_exact_profiles() {
        let g = Grid::new(2, 64).unwrap();
        let f = fit_radius(&synthetic(&g, 0.3, 1.0), 1.0, None).unwrap();
        assert!((f.tau_fit - 0.3).abs() < 1e-6);
        let f = fit_radius(&synthetic(&g, 0.5, 2.0), 2.0, None).unwrap();
        assert!((f.tau_fit - 0.5).abs() < 1e-6);
        let white = fit_radius(&synthetic(&g, 0.0, 1.0), 1.0, None).unwrap();
        assert!(white.tau_fit < 0.02);
    }

    #[test]
    fn fit_errors() {
        let g = Grid::new(2, 32).unwrap();
        assert!(matches!(
            fit_radius(&SpectralField::zeros(&g, Rank::Scalar), 1.0, None),
            Err(Error::AllBelowFloor)
        ));
        assert!(matches!(fit_radius(&cos_x1(&g), 1.0, None), Err(Error::TooFewShells { .. })));
    }

    #[test]
    fn floors() {
        let inp = FloorInputs {
            tau0: Some(1.0),
            m0: Some(1.0),
            nu: Some(1.0),
            alpha: Some(1.0),
            c_cal: Some(1.0),
            c0: Some(0.0),
            ..Default::default()
        };
        assert!((theorem_floor(FloorVariant::A, &inp).unwrap() - (-4.0f64).exp()).abs() < 1e-15);
        assert_eq!(theorem_floor(FloorVariant::B, &inp).unwrap(), 1.0);
        assert!(matches!(
            theorem_floor(FloorVariant::D, &inp),
            Err(Error::MissingInput { variant: "D", name: "kappa_cal" })
        ));
        let big = FloorInputs { c0: Some(f64::INFINITY), ..inp };
        assert_eq!(theorem_floor(FloorVariant::B, &big).unwrap(), 0.0);
    }

    #[test]
    fn sup_gradient_examples() {
        let g = Grid::new(2, 16).unwrap();
        let shear = PhysicalField::from_fn(&g, 2, |c, x| if c == 0 { x[1].sin() } else { 0.0 });
        let u = to_spectral(&shear).unwrap();
        assert!((sup_gradient(&u).unwrap() - 1.0).abs() < 1e-14);
        assert!((sup_gradient(&u.scale(3.0)).unwrap() - 3.0).abs() < 1e-14);
        let tg = PhysicalField::from_fn(&g, 2, |c, x| {
            if c == 0 {
                x[0].sin() * x[1].cos()
            } else {
                -x[0].cos() * x[1].sin()
            }
        });
        let u = to_spectral(&tg).unwrap();
        assert!((sup_gradient(&u).unwrap() - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn canonical_sup_is_grid_independent() {
        let g = Grid::new(2, 32).unwrap();
        let w = random_divfree_field(&g, &ShellProfile::Flat { amplitude: 1.0 }, 6.0, 1, Rank::Scalar).unwrap();
        let u = velocity_from_vorticity(&w, 0.5).unwrap();
        let a = sup_gradient_canonical(&u).unwrap();
        let b = sup_gradient_canonical(&u.resample(&Grid::new(2, 64).unwrap()).unwrap()).unwrap();
        assert!((a - b).abs() < 1e-13 * a);
    }
}

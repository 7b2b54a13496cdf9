//! Fourier multipliers and vector calculus on the torus.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Rank, SpectralField};
use crate::grid::Wavevector;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Largest exponent a Gevrey weight may reach before it is clamped.
pub fn gevrey_exponent_limit() -> f64 {
    f64::MAX.ln() / 2.0
}

/// A real, even Fourier multiplier.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Multiplier {
    /// `|k|^sigma`.
    Lambda { sigma: f64 },
    /// `|k_m|^sigma` with `m` counted from 1; modes with `k_m = 0` map to 0
    /// unless `sigma = 0`.
    LambdaM { m: usize, sigma: f64 },
    /// `exp(tau |k|^{1/s})`.
    Gevrey { tau: f64, s: f64 },
    /// `exp(tau |k_m|^{1/s})`.
    GevreyM { m: usize, tau: f64, s: f64 },
    /// `|k|^2 / (1 + alpha^2 |k|^2)`.
    RAlpha { alpha: f64 },
    /// `1 / (1 + alpha^2 |k|^2)`.
    HelmholtzInv { alpha: f64 },
}

pub(crate) fn power(x: f64, sigma: f64) -> f64 {
    if sigma == 0.0 {
        1.0
    } else if x == 0.0 {
        0.0
    } else {
        x.powf(sigma)
    }
}

fn gevrey_weight(tau: f64, x: f64, s: f64) -> (f64, bool) {
    let e = tau * x.powf(1.0 / s);
    let lim = gevrey_exponent_limit();
    if e > lim {
        (lim.exp(), true)
    } else {
        (e.exp(), false)
    }
}

impl Multiplier {
    fn check(&self, dim: usize) -> Result<()> {
        match *self {
            Multiplier::LambdaM { m, .. } | Multiplier::GevreyM { m, .. } if m == 0 || m > dim => {
                Err(Error::InvalidParameter(format!("direction m = {m} outside 1..={dim}")))
            }
            Multiplier::Gevrey { s, .. } | Multiplier::GevreyM { s, .. } if !(s >= 1.0) => {
                Err(Error::InvalidParameter(format!("Gevrey index s = {s} must be >= 1")))
            }
            Multiplier::RAlpha { alpha } | Multiplier::HelmholtzInv { alpha } if !(alpha >= 0.0) => {
                Err(Error::InvalidParameter(format!("alpha = {alpha} must be >= 0")))
            }
            _ => Ok(()),
        }
    }

    /// Symbol at `k` with `norm = |k|`, and whether a Gevrey exponent was clamped.
    pub fn symbol(&self, k: &Wavevector, norm: f64) -> (f64, bool) {
        match *self {
            Multiplier::Lambda { sigma } => (power(norm, sigma), false),
            Multiplier::LambdaM { m, sigma } => (power(k[m - 1].unsigned_abs() as f64, sigma), false),
            Multiplier::Gevrey { tau, s } => gevrey_weight(tau, norm, s),
            Multiplier::GevreyM { m, tau, s } => gevrey_weight(tau, k[m - 1].unsigned_abs() as f64, s),
            Multiplier::RAlpha { alpha } => {
                let k2 = norm * norm;
                (k2 / (1.0 + alpha * alpha * k2), false)
            }
            Multiplier::HelmholtzInv { alpha } => (1.0 / (1.0 + alpha * alpha * norm * norm), false),
        }
    }
}

/// Result of a multiplier application.
#[derive(Clone, Debug, PartialEq)]
pub struct Applied {
    pub field: SpectralField,
    /// Set when some Gevrey exponent hit the clamp; the field is then only a
    /// lower bound of the true product.
    pub overflow: bool,
}

pub fn apply_multiplier(field: &SpectralField, spec: &Multiplier) -> Result<Applied> {
    spec.check(field.grid().dim())?;
    let mut overflow = false;
    let grid = field.grid();
    let mut out = field.clone();
    for idx in 0..grid.len() {
        if !grid.is_resolved(idx) {
            continue;
        }
        let (sym, of) = spec.symbol(&grid.wavevector(idx), grid.norms()[idx]);
        overflow |= of;
        for c in 0..out.num_components() {
            out.component_mut(c)[idx] *= sym;
        }
    }
    Ok(Applied { field: out, overflow })
}

/// Shorthand for multipliers that cannot overflow or fail validation.
#[cfg(test)]
pub(crate) fn multiply(field: &SpectralField, spec: Multiplier) -> SpectralField {
    field.map_symbol(|k, n| spec.symbol(k, n).0)
}

/// Largest `|k . v_k|` relative to `max |k||v_k|`.
pub fn divergence_defect(v: &SpectralField) -> f64 {
    let grid = v.grid();
    let d = grid.dim();
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for idx in 0..grid.len() {
        let k = grid.wavevector(idx);
        let mut dot = Complex64::new(0.0, 0.0);
        let mut mag: f64 = 0.0;
        for c in 0..d {
            let x = v.component(c)[idx];
            dot += x * k[c] as f64;
            mag = mag.max(x.norm());
        }
        worst = worst.max(dot.norm());
        scale = scale.max(mag * grid.norms()[idx]);
    }
    if scale == 0.0 {
        0.0
    } else {
        worst / scale
    }
}

fn require_rank(f: &SpectralField, rank: Rank, what: &str) -> Result<()> {
    if f.rank() != rank {
        return Err(Error::RankMismatch(format!("{what} expects a {rank:?} field, got {:?}", f.rank())));
    }
    Ok(())
}

/// Velocity `u = K_alpha omega`, the velocity whose second-grade vorticity
/// `curl(u - alpha^2 Laplace u)` equals `omega`.
///
/// In 2D, `u = (d_2 psi, -d_1 psi)` with `-Laplace psi = (I - alpha^2 Laplace)^{-1} omega`,
/// so that `d_1 u_2 - d_2 u_1` recovers the filtered vorticity.
pub fn velocity_from_vorticity(omega: &SpectralField, alpha: f64) -> Result<SpectralField> {
    let grid = omega.grid();
    let dim = grid.dim();
    match (dim, omega.rank()) {
        (2, Rank::Scalar) | (3, Rank::Vector) => {}
        _ => {
            return Err(Error::RankMismatch(format!(
                "vorticity must be scalar in 2D and vector in 3D, got {:?} in {dim}D",
                omega.rank()
            )))
        }
    }
    if dim == 3 {
        let defect = divergence_defect(omega);
        if defect > 1e-10 {
            return Err(Error::InvalidVorticity(defect));
        }
    }
    Ok(biot_savart(omega, alpha))
}

/// [`velocity_from_vorticity`] without the rank and divergence checks.
pub(crate) fn biot_savart(omega: &SpectralField, alpha: f64) -> SpectralField {
    let grid = omega.grid();
    let dim = grid.dim();
    let factor: Vec<f64> = grid
        .norms()
        .iter()
        .enumerate()
        .map(|(idx, &n)| {
            let n2 = n * n;
            if grid.is_resolved(idx) {
                1.0 / (n2 * (1.0 + alpha * alpha * n2))
            } else {
                0.0
            }
        })
        .collect();
    let kf = grid.wavevectors_f64();
    let comps = if dim == 2 {
        let w = omega.component(0);
        let u0 = w.iter().zip(kf).zip(&factor).map(|((w, k), f)| I * (k[1] * f) * w).collect();
        let u1 = w.iter().zip(kf).zip(&factor).map(|((w, k), f)| -I * (k[0] * f) * w).collect();
        vec![u0, u1]
    } else {
        let (w0, w1, w2) = (omega.component(0), omega.component(1), omega.component(2));
        let mut out = vec![Vec::with_capacity(grid.len()); 3];
        for idx in 0..grid.len() {
            let k = kf[idx];
            let f = factor[idx];
            let w = [w0[idx], w1[idx], w2[idx]];
            out[0].push(I * (w[2] * k[1] - w[1] * k[2]) * f);
            out[1].push(I * (w[0] * k[2] - w[2] * k[0]) * f);
            out[2].push(I * (w[1] * k[0] - w[0] * k[1]) * f);
        }
        out
    };
    SpectralField::from_parts_unchecked(grid, Rank::Vector, comps)
}

/// Second-grade vorticity `curl(u - alpha^2 Laplace u)`.
pub fn vorticity_from_velocity(u: &SpectralField, alpha: f64) -> Result<SpectralField> {
    let w = curl(u)?;
    Ok(w.map_symbol(|_, n| 1.0 + alpha * alpha * n * n))
}

/// Curl of a vector field: scalar `d_1 v_2 - d_2 v_1` in 2D, vector in 3D.
pub fn curl(v: &SpectralField) -> Result<SpectralField> {
    require_rank(v, Rank::Vector, "curl")?;
    let grid = v.grid();
    let dim = grid.dim();
    let mut out = SpectralField::zeros(grid, if dim == 2 { Rank::Scalar } else { Rank::Vector });
    for idx in 0..grid.len() {
        if !grid.is_resolved(idx) {
            continue;
        }
        let k = grid.wavevector(idx);
        let kf = [k[0] as f64, k[1] as f64, k[2] as f64];
        if dim == 2 {
            out.component_mut(0)[idx] = I * (kf[0] * v.component(1)[idx] - kf[1] * v.component(0)[idx]);
        } else {
            let w = [v.component(0)[idx], v.component(1)[idx], v.component(2)[idx]];
            out.component_mut(0)[idx] = I * (kf[1] * w[2] - kf[2] * w[1]);
            out.component_mut(1)[idx] = I * (kf[2] * w[0] - kf[0] * w[2]);
            out.component_mut(2)[idx] = I * (kf[0] * w[1] - kf[1] * w[0]);
        }
    }
    Ok(out)
}

/// 2D rotated gradient `(d_2 f, -d_1 f)` of a scalar; `curl(perp_grad f) = -Laplace f`.
pub fn perp_grad(f: &SpectralField) -> Result<SpectralField> {
    require_rank(f, Rank::Scalar, "perp_grad")?;
    let grid = f.grid();
    if grid.dim() != 2 {
        return Err(Error::WrongDimension("perp_grad is two-dimensional".into()));
    }
    let g = grad(f)?;
    let mut out = SpectralField::zeros(grid, Rank::Vector);
    out.component_mut(0).copy_from_slice(g.component(1));
    for (o, x) in out.component_mut(1).iter_mut().zip(g.component(0)) {
        *o = -x;
    }
    Ok(out)
}

pub fn div(v: &SpectralField) -> Result<SpectralField> {
    require_rank(v, Rank::Vector, "div")?;
    let grid = v.grid();
    let mut out = SpectralField::zeros(grid, Rank::Scalar);
    for idx in 0..grid.len() {
        if !grid.is_resolved(idx) {
            continue;
        }
        let k = grid.wavevector(idx);
        let mut acc = Complex64::new(0.0, 0.0);
        for c in 0..grid.dim() {
            acc += v.component(c)[idx] * k[c] as f64;
        }
        out.component_mut(0)[idx] = I * acc;
    }
    Ok(out)
}

pub fn grad(f: &SpectralField) -> Result<SpectralField> {
    require_rank(f, Rank::Scalar, "grad")?;
    let grid = f.grid();
    let mut out = SpectralField::zeros(grid, Rank::Vector);
    for idx in 0..grid.len() {
        if !grid.is_resolved(idx) {
            continue;
        }
        let k = grid.wavevector(idx);
        let x = f.component(0)[idx];
        for c in 0..grid.dim() {
            out.component_mut(c)[idx] = I * k[c] as f64 * x;
        }
    }
    Ok(out)
}

/// Partial derivative `d_j` (axis counted from 0) of every component.
pub fn partial(f: &SpectralField, axis: usize) -> SpectralField {
    let grid = f.grid().clone();
    let mut out = f.clone();
    for c in 0..out.num_components() {
        for (idx, v) in out.component_mut(c).iter_mut().enumerate() {
            *v *= I * grid.wavevector(idx)[axis] as f64;
        }
    }
    out
}

/// Leray projection `v - k (k.v) / |k|^2`.
pub fn leray(v: &SpectralField) -> Result<SpectralField> {
    require_rank(v, Rank::Vector, "leray")?;
    let grid = v.grid();
    let dim = grid.dim();
    let mut out = v.clone();
    for idx in 0..grid.len() {
        if !grid.is_resolved(idx) {
            continue;
        }
        let k = grid.wavevector(idx);
        let n2 = grid.norms()[idx].powi(2);
        let mut dot = Complex64::new(0.0, 0.0);
        for c in 0..dim {
            dot += v.component(c)[idx] * k[c] as f64;
        }
        let dot = dot / n2;
        for c in 0..dim {
            out.component_mut(c)[idx] -= dot * k[c] as f64;
        }
    }
    Ok(out)
}

/// Which differential operator [`differential_op`] applies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DiffOp {
    Curl,
    Div,
    Grad,
    Leray,
}

pub fn differential_op(field: &SpectralField, which: DiffOp) -> Result<SpectralField> {
    match which {
        DiffOp::Curl => curl(field),
        DiffOp::Div => div(field),
        DiffOp::Grad => grad(field),
        DiffOp::Leray => leray(field),
    }
}

/// `||v||_{H^r}` with `||v||^2 = (2pi)^d sum (1 + |k|^2)^r |v_k|^2`.
pub fn sobolev_norm(field: &SpectralField, r: f64) -> f64 {
    weighted_norm(field, |n| (1.0 + n * n).powf(r))
}

/// Homogeneous `||Lambda^r v||`.
pub fn lambda_norm(field: &SpectralField, r: f64) -> f64 {
    weighted_norm(field, |n| power(n, 2.0 * r))
}

/// `sqrt((2pi)^d sum w(|k|) |v_k|^2)`.
pub(crate) fn weighted_norm(field: &SpectralField, w: impl Fn(f64) -> f64) -> f64 {
    let grid = field.grid();
    let mut acc = 0.0;
    for comp in field.components() {
        for (idx, v) in comp.iter().enumerate() {
            let a = v.norm_sqr();
            if a != 0.0 {
                acc += w(grid.norms()[idx]) * a;
            }
        }
    }
    (acc * grid.volume()).sqrt()
}

/// `L^2` inner product `(2pi)^d sum Re(f_k conj(g_k))`, summed over components.
pub fn inner_product(f: &SpectralField, g: &SpectralField) -> Result<f64> {
    if f.grid() != g.grid() {
        return Err(Error::GridMismatch("inner product on different grids".into()));
    }
    if f.num_components() != g.num_components() {
        return Err(Error::RankMismatch("inner product of different ranks".into()));
    }
    let mut acc = 0.0;
    for (a, b) in f.components().iter().zip(g.components()) {
        for (x, y) in a.iter().zip(b) {
            acc += (x * y.conj()).re;
        }
    }
    Ok(acc * f.grid().volume())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::random::{random_divfree_field, ShellProfile};
    use std::f64::consts::PI;

    fn cos_x1(g: &Grid) -> SpectralField {
        SpectralField::from_modes(g, Rank::Scalar, &[([1, 0, 0], 0, Complex64::new(0.5, 0.0))]).unwrap()
    }

    #[test]
    fn r_alpha_symbols() {
        let (s, _) = Multiplier::RAlpha { alpha: 1.0 }.symbol(&[1, 0, 0], 1.0);
        assert_eq!(s, 0.5);
        let (s, _) = Multiplier::RAlpha { alpha: 0.5 }.symbol(&[3, 4, 0], 5.0);
        assert!((s - 25.0 / 7.25).abs() < 1e-14);
        let (s, _) = Multiplier::RAlpha { alpha: 0.0 }.symbol(&[3, 4, 0], 5.0);
        assert_eq!(s, 25.0);
    }

    #[test]
    fn gevrey_doubles_cosine() {
        let g = Grid::new(2, 16).unwrap();
        let f = cos_x1(&g);
        let out = apply_multiplier(&f, &Multiplier::Gevrey { tau: 2f64.ln(), s: 1.0 }).unwrap();
        assert!(!out.overflow);
        assert!(out.field.max_abs_diff(&f.scale(2.0)) < 1e-15);
    }

    #[test]
    fn gevrey_overflow_is_flagged() {
        let g = Grid::new(2, 16).unwrap();
        let f = cos_x1(&g);
        let out = apply_multiplier(&f, &Multiplier::Gevrey { tau: 1e4, s: 1.0 }).unwrap();
        assert!(out.overflow);
        assert!(out.field.is_finite());
    }

    #[test]
    fn biot_savart_2d_convention() {
        let g = Grid::new(2, 16).unwrap();
        let w = cos_x1(&g);
        let u = velocity_from_vorticity(&w, 0.0).unwrap();
        // u = (0, sin x1)
        assert!(u.component(0).iter().all(|c| c.norm() == 0.0));
        assert_eq!(u.coeff(1, &[1, 0, 0]), Complex64::new(0.0, -0.5));
        assert!(curl(&u).unwrap().max_abs_diff(&w) < 1e-15);
        assert_eq!(div(&u).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn biot_savart_inverts_second_grade_vorticity() {
        for dim in [2, 3] {
            let g = Grid::new(dim, 16).unwrap();
            let u = random_divfree_field(&g, &ShellProfile::Flat { amplitude: 1.0 }, 5.0, 9, Rank::Vector).unwrap();
            let w = vorticity_from_velocity(&u, 0.7).unwrap();
            let back = velocity_from_vorticity(&w, 0.7).unwrap();
            assert!(back.max_abs_diff(&u) < 1e-12);
        }
    }

    #[test]
    fn rejects_divergent_3d_vorticity() {
        let g = Grid::new(3, 8).unwrap();
        let w = SpectralField::from_modes(&g, Rank::Vector, &[([1, 0, 0], 0, Complex64::new(1.0, 0.0))]).unwrap();
        assert!(matches!(velocity_from_vorticity(&w, 0.0), Err(Error::InvalidVorticity(_))));
    }

    #[test]
    fn vector_identities() {
        let g = Grid::new(3, 16).unwrap();
        let f = random_divfree_field(&g, &ShellProfile::Flat { amplitude: 1.0 }, 5.0, 2, Rank::Scalar).unwrap();
        let lap = div(&grad(&f).unwrap()).unwrap();
        assert!(lap.max_abs_diff(&multiply(&f, Multiplier::Lambda { sigma: 2.0 }).scale(-1.0)) < 1e-13);
        let u = random_divfree_field(&g, &ShellProfile::Flat { amplitude: 1.0 }, 5.0, 3, Rank::Vector).unwrap();
        let cc = curl(&curl(&u).unwrap()).unwrap();
        assert!(cc.max_abs_diff(&multiply(&u, Multiplier::Lambda { sigma: 2.0 })) < 1e-13);
        let p = leray(&u).unwrap();
        assert!(leray(&p).unwrap().max_abs_diff(&p) < 1e-14);
        assert!(curl(&f).is_err());
    }

    #[test]
    fn norms_of_cosine() {
        let g = Grid::new(2, 16).unwrap();
        let f = cos_x1(&g);
        assert!((sobolev_norm(&f, 0.0).powi(2) - 2.0 * PI * PI).abs() < 1e-12);
        assert!((sobolev_norm(&f, 1.0).powi(2) - 4.0 * PI * PI).abs() < 1e-12);
        let sin = SpectralField::from_modes(&g, Rank::Scalar, &[([1, 0, 0], 0, Complex64::new(0.0, -0.5))]).unwrap();
        assert_eq!(inner_product(&sin, &f).unwrap(), 0.0);
    }
}

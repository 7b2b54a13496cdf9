//! Dyadic frequency blocks, Bony paraproducts and Bernstein-type checks.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{sup_gradient_canonical, velocity_gradient};
use crate::error::{Error, Result};
use crate::field::{PhysicalField, Rank, SpectralField};
use crate::grid::Grid;
use crate::operators::sobolev_norm;
use crate::transform::{dealias, forward_components, inverse_components, product, to_physical};

/// The radial profile `chi` and `phi(xi) = chi(xi/2) - chi(xi)`.
///
/// `chi` is 1 on `[0, inner]`, 0 on `[outer, inf)` and joins the two with the
/// smooth step `h(x) = f(x) / (f(x) + f(1-x))`, `f(x) = e^{-1/x}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutoffPair {
    pub inner: f64,
    pub outer: f64,
}

impl Default for CutoffPair {
    fn default() -> Self {
        CutoffPair {
            inner: 0.75,
            outer: 4.0 / 3.0,
        }
    }
}

fn bump(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        (-1.0 / x).exp()
    }
}

fn smooth_step(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        let a = bump(x);
        a / (a + bump(1.0 - x))
    }
}

impl CutoffPair {
    pub fn chi(&self, r: f64) -> f64 {
        smooth_step((self.outer - r) / (self.outer - self.inner))
    }

    pub fn phi(&self, r: f64) -> f64 {
        self.chi(r / 2.0) - self.chi(r)
    }

    /// `sum_q phi(2^{-q} r)` over `q in q_lo..=q_hi`.
    pub fn partition_sum(&self, r: f64, q_lo: i32, q_hi: i32) -> f64 {
        (q_lo..=q_hi).map(|q| self.phi(r * 2f64.powi(-q))).sum()
    }

    /// `chi(2^{-q} |k|)` per lattice index.
    pub fn low_table(&self, grid: &Grid, q: i32) -> Vec<f64> {
        let sc = 2f64.powi(-q);
        grid.norms().iter().map(|&n| self.chi(n * sc)).collect()
    }

    /// `phi(2^{-q} |k|)` per lattice index.
    pub fn block_table(&self, grid: &Grid, q: i32) -> Vec<f64> {
        let sc = 2f64.powi(-q);
        grid.norms().iter().map(|&n| self.phi(n * sc)).collect()
    }
}

/// Block range for a grid: `q = -1` is `phi(2D) = chi(D) = S_0` on mean-free
/// fields, and the top block is `ceil(log2 k_max) + 1`.
pub fn block_range(grid: &Grid) -> (i32, i32) {
    let top = (grid.k_max() as f64).log2().ceil() as i32 + 1;
    (-1, top)
}

/// `Delta_q` (band) or `S_q` (low-pass) projection.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Projection {
    Delta,
    Low,
}

pub fn dyadic_project(u: &SpectralField, q: i32, kind: Projection, cut: &CutoffPair) -> SpectralField {
    let table = match kind {
        Projection::Delta => cut.block_table(u.grid(), q),
        Projection::Low => cut.low_table(u.grid(), q),
    };
    apply_table(u, &table)
}

fn apply_table(u: &SpectralField, table: &[f64]) -> SpectralField {
    let mut out = u.clone();
    for c in 0..out.num_components() {
        for (v, t) in out.component_mut(c).iter_mut().zip(table) {
            *v *= *t;
        }
    }
    out
}

/// All blocks `Delta_q u` for `q` in [`block_range`].
#[derive(Clone, Debug)]
pub struct DyadicBlockSet {
    pub cutoffs: CutoffPair,
    pub q_min: i32,
    pub q_max: i32,
    blocks: Vec<SpectralField>,
}

impl DyadicBlockSet {
    pub fn new(u: &SpectralField, cutoffs: CutoffPair) -> DyadicBlockSet {
        let (q_min, q_max) = block_range(u.grid());
        let blocks = (q_min..=q_max)
            .map(|q| dyadic_project(u, q, Projection::Delta, &cutoffs))
            .collect();
        DyadicBlockSet {
            cutoffs,
            q_min,
            q_max,
            blocks,
        }
    }

    /// `Delta_q u`, or `None` outside the block range (where it vanishes).
    pub fn block(&self, q: i32) -> Option<&SpectralField> {
        if q < self.q_min || q > self.q_max {
            None
        } else {
            Some(&self.blocks[(q - self.q_min) as usize])
        }
    }

    pub fn blocks(&self) -> impl Iterator<Item = (i32, &SpectralField)> {
        (self.q_min..).zip(self.blocks.iter())
    }

    /// `S_q u = sum_{p < q} Delta_p u`.
    pub fn partial_sum(&self, q: i32) -> SpectralField {
        let mut out = SpectralField::zeros(self.blocks[0].grid(), self.blocks[0].rank());
        for (p, b) in self.blocks() {
            if p < q {
                out.axpy(1.0, b);
            }
        }
        out
    }

    /// `sum_q Delta_q u`.
    pub fn reconstruct(&self) -> SpectralField {
        self.partial_sum(self.q_max + 1)
    }
}

/// The three Bony parts of a product.
#[derive(Clone, Debug)]
pub struct BonyParts {
    pub t_f_g: SpectralField,
    pub t_g_f: SpectralField,
    pub remainder: SpectralField,
}

impl BonyParts {
    pub fn sum(&self) -> SpectralField {
        self.t_f_g.add(&self.t_g_f).add(&self.remainder)
    }
}

fn check_padding(f: &SpectralField, g: &SpectralField) -> Result<()> {
    let (bf, bg) = (f.band_limit(), g.band_limit());
    let cut = f.grid().dealias_cutoff();
    if bf + bg > cut {
        return Err(Error::InsufficientPadding(bf, bg, cut));
    }
    Ok(())
}

fn paraproduct(low: &DyadicBlockSet, high: &DyadicBlockSet) -> Result<SpectralField> {
    let grid = high.blocks[0].grid().clone();
    let mut out = SpectralField::zeros(&grid, Rank::Scalar);
    for (q, hq) in high.blocks() {
        let s = low.partial_sum(q - 1);
        if s.max_abs() == 0.0 || hq.max_abs() == 0.0 {
            continue;
        }
        out.axpy(1.0, &product(&s, hq)?);
    }
    Ok(out)
}

/// `fg = T_f g + T_g f + R(f, g)` for scalar fields whose product is exactly
/// representable after dealiasing.
pub fn bony_decompose(f: &SpectralField, g: &SpectralField, cut: &CutoffPair) -> Result<BonyParts> {
    if f.grid() != g.grid() {
        return Err(Error::GridMismatch("Bony decomposition on different grids".into()));
    }
    if f.rank() != Rank::Scalar || g.rank() != Rank::Scalar {
        return Err(Error::RankMismatch("Bony decomposition expects scalar fields".into()));
    }
    check_padding(f, g)?;
    let fb = DyadicBlockSet::new(f, *cut);
    let gb = DyadicBlockSet::new(g, *cut);
    let t_f_g = paraproduct(&fb, &gb)?;
    let t_g_f = paraproduct(&gb, &fb)?;
    let mut remainder = SpectralField::zeros(f.grid(), Rank::Scalar);
    for (q, fq) in fb.blocks() {
        if fq.max_abs() == 0.0 {
            continue;
        }
        let mut near = SpectralField::zeros(f.grid(), Rank::Scalar);
        for p in q - 1..=q + 1 {
            if let Some(b) = gb.block(p) {
                near.axpy(1.0, b);
            }
        }
        if near.max_abs() == 0.0 {
            continue;
        }
        remainder.axpy(1.0, &product(fq, &near)?);
    }
    Ok(BonyParts {
        t_f_g,
        t_g_f,
        remainder,
    })
}

/// Collocation `L^p` norm, `p` in `{1, 2, inf}`.
pub fn collocation_norm(v: &PhysicalField, p: f64) -> Result<f64> {
    if p == f64::INFINITY {
        Ok(v.sup_norm())
    } else if p == 1.0 || p == 2.0 {
        Ok(v.lp_norm(p))
    } else {
        Err(Error::InvalidParameter(format!("unsupported exponent p = {p}")))
    }
}

/// `||Lambda^n Delta_q u||_{p2} / (2^{q(n + d(1/p1 - 1/p2))} ||Delta_q u||_{p1})`.
pub fn bernstein_ratio(u: &SpectralField, q: i32, n: f64, p1: f64, p2: f64, cut: &CutoffPair) -> Result<f64> {
    if !(p1 <= p2) {
        return Err(Error::InvalidParameter(format!("need p1 <= p2, got {p1} > {p2}")));
    }
    let block = dyadic_project(u, q, Projection::Delta, cut);
    if block.max_abs() == 0.0 {
        return Err(Error::ZeroBlock(q));
    }
    let d = u.grid().dim() as f64;
    let inv = |p: f64| if p == f64::INFINITY { 0.0 } else { 1.0 / p };
    let deriv = block.map_symbol(|_, r| if n == 0.0 { 1.0 } else { r.powf(n) });
    let top = collocation_norm(&to_physical(&deriv), p2)?;
    let bottom = collocation_norm(&to_physical(&block), p1)?;
    let scale = 2f64.powf(q as f64 * (n + d * (inv(p1) - inv(p2))));
    Ok(top / (scale * bottom))
}

/// Outcome of [`h1_product_check`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProductCheck {
    /// `||(omega.grad) u||_{H^1}`.
    pub lhs: f64,
    /// `||grad u||_inf ||omega||_{H^1}`.
    pub rhs_factor: f64,
    pub ratio: f64,
}

/// Dealiased `(omega.grad) u` for 3D vector fields.
pub fn stretching(omega: &SpectralField, u: &SpectralField) -> Result<SpectralField> {
    let grid = omega.grid();
    if grid.dim() != 3 || omega.rank() != Rank::Vector || u.rank() != Rank::Vector {
        return Err(Error::WrongDimension("stretching term needs 3D vector fields".into()));
    }
    if u.grid() != grid {
        return Err(Error::GridMismatch("stretching operands on different grids".into()));
    }
    let grad = velocity_gradient(u)?;
    let w: Vec<&[Complex64]> = omega.components().iter().map(|c| c.as_slice()).collect();
    let w = inverse_components(grid, &w);
    let mut prod = vec![vec![0.0; grid.len()]; 3];
    for (i, pi) in prod.iter_mut().enumerate() {
        for (p, v) in pi.iter_mut().enumerate() {
            *v = (0..3).map(|j| w[j][p] * grad[i * 3 + j][p]).sum();
        }
    }
    let spec = forward_components(grid, &[&prod[0], &prod[1], &prod[2]]);
    Ok(dealias(&SpectralField::from_components(grid, Rank::Vector, spec)?))
}

/// `||(omega.grad) u||_{H^1}` against `||grad u||_inf ||omega||_{H^1}`. The
/// sup is taken on the canonical grid of the velocity's band limit.
pub fn h1_product_check(omega: &SpectralField, u: &SpectralField) -> Result<ProductCheck> {
    let lhs = sobolev_norm(&stretching(omega, u)?, 1.0);
    let rhs_factor = sup_gradient_canonical(u)? * sobolev_norm(omega, 1.0);
    let ratio = if rhs_factor == 0.0 { 0.0 } else { lhs / rhs_factor };
    Ok(ProductCheck { lhs, rhs_factor, ratio })
}

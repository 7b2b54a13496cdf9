//! Spectral and physical representations of real periodic fields.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Grid, Wavevector};

/// Scalar fields have one component, vector fields have `d`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rank {
    Scalar,
    Vector,
}

impl Rank {
    pub fn components(self, dim: usize) -> usize {
        match self {
            Rank::Scalar => 1,
            Rank::Vector => dim,
        }
    }
}

/// Fourier coefficients `v_k` of a real, mean-free field, `v(x) = sum_k v_k e^{ik.x}`.
///
/// Every constructor and operator leaves the zero mode and the Nyquist plane
/// at exactly zero and keeps `v_{-k} = conj(v_k)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField {
    grid: Grid,
    rank: Rank,
    comps: Vec<Vec<Complex64>>,
}

/// Samples of a real field on the grid points.
#[derive(Clone, Debug, PartialEq)]
pub struct PhysicalField {
    pub grid: Grid,
    pub comps: Vec<Vec<f64>>,
}

impl SpectralField {
    pub fn zeros(grid: &Grid, rank: Rank) -> SpectralField {
        let comps = vec![vec![Complex64::new(0.0, 0.0); grid.len()]; rank.components(grid.dim())];
        SpectralField {
            grid: grid.clone(),
            rank,
            comps,
        }
    }

    /// Builds a field from raw coefficient arrays and restores the invariants.
    pub fn from_components(grid: &Grid, rank: Rank, comps: Vec<Vec<Complex64>>) -> Result<SpectralField> {
        if comps.len() != rank.components(grid.dim()) {
            return Err(Error::RankMismatch(format!(
                "{:?} field on a {}-d grid needs {} components, got {}",
                rank,
                grid.dim(),
                rank.components(grid.dim()),
                comps.len()
            )));
        }
        if comps.iter().any(|c| c.len() != grid.len()) {
            return Err(Error::InvalidGrid("component length does not match grid".into()));
        }
        let mut f = SpectralField {
            grid: grid.clone(),
            rank,
            comps,
        };
        f.clean();
        Ok(f)
    }

    /// Builds a field from explicit modes. Each `(k, component, value)` sets
    /// `v_k = value` and `v_{-k} = conj(value)`.
    pub fn from_modes(grid: &Grid, rank: Rank, modes: &[(Wavevector, usize, Complex64)]) -> Result<SpectralField> {
        let mut f = SpectralField::zeros(grid, rank);
        for &(k, c, v) in modes {
            let idx = grid
                .index_of(&k)
                .ok_or_else(|| Error::InvalidGrid(format!("mode {k:?} is not resolved")))?;
            if c >= f.comps.len() {
                return Err(Error::RankMismatch(format!("component {c} out of range")));
            }
            f.comps[c][idx] = v;
            f.comps[c][grid.neg_index(idx)] = v.conj();
        }
        f.clean();
        Ok(f)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn rank(&self) -> Rank {
        self.rank
    }

    pub fn num_components(&self) -> usize {
        self.comps.len()
    }

    pub fn component(&self, c: usize) -> &[Complex64] {
        &self.comps[c]
    }

    pub fn component_mut(&mut self, c: usize) -> &mut [Complex64] {
        &mut self.comps[c]
    }

    pub fn components(&self) -> &[Vec<Complex64>] {
        &self.comps
    }

    pub fn into_components(self) -> Vec<Vec<Complex64>> {
        self.comps
    }

    /// Coefficient of component `c` at wavevector `k` (zero if unresolved).
    pub fn coeff(&self, c: usize, k: &Wavevector) -> Complex64 {
        match self.grid.index_of(k) {
            Some(idx) => self.comps[c][idx],
            None => Complex64::new(0.0, 0.0),
        }
    }

    /// Zeroes the mean and the Nyquist plane.
    pub fn clean(&mut self) {
        for comp in &mut self.comps {
            for (idx, v) in comp.iter_mut().enumerate() {
                if !self.grid.is_resolved(idx) {
                    *v = Complex64::new(0.0, 0.0);
                }
            }
        }
    }

    /// Averages each coefficient with the conjugate of its mirror.
    pub fn symmetrize(&mut self) {
        for comp in &mut self.comps {
            for idx in 0..comp.len() {
                let j = self.grid.neg_index(idx);
                if j < idx {
                    continue;
                }
                let avg = (comp[idx] + comp[j].conj()) * 0.5;
                comp[idx] = avg;
                comp[j] = avg.conj();
            }
        }
        self.clean();
    }

    /// Largest `|v_k - conj(v_{-k})|` over all components.
    pub fn hermitian_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for comp in &self.comps {
            for (idx, v) in comp.iter().enumerate() {
                let m = comp[self.grid.neg_index(idx)];
                worst = worst.max((v - m.conj()).norm());
            }
        }
        worst
    }

    /// Applies a real, even symbol to every coefficient of every component.
    pub fn map_symbol(&self, symbol: impl Fn(&Wavevector, f64) -> f64) -> SpectralField {
        let mut out = self.clone();
        let kv = self.grid.wavevectors();
        let norms = self.grid.norms();
        for comp in &mut out.comps {
            for (idx, v) in comp.iter_mut().enumerate() {
                if self.grid.is_resolved(idx) {
                    *v *= symbol(&kv[idx], norms[idx]);
                } else {
                    *v = Complex64::new(0.0, 0.0);
                }
            }
        }
        out
    }

    pub fn scale(&self, a: f64) -> SpectralField {
        let mut out = self.clone();
        for comp in &mut out.comps {
            for v in comp.iter_mut() {
                *v *= a;
            }
        }
        out
    }

    /// `self += a * other`.
    pub fn axpy(&mut self, a: f64, other: &SpectralField) {
        debug_assert_eq!(self.comps.len(), other.comps.len());
        for (x, y) in self.comps.iter_mut().zip(&other.comps) {
            for (xi, yi) in x.iter_mut().zip(y) {
                *xi += yi * a;
            }
        }
    }

    pub fn add(&self, other: &SpectralField) -> SpectralField {
        let mut out = self.clone();
        out.axpy(1.0, other);
        out
    }

    pub fn sub(&self, other: &SpectralField) -> SpectralField {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    /// Largest coefficient modulus.
    pub fn max_abs(&self) -> f64 {
        self.comps
            .iter()
            .flat_map(|c| c.iter())
            .fold(0.0, |m: f64, v| m.max(v.norm()))
    }

    /// Largest coefficient-wise difference to `other`.
    pub fn max_abs_diff(&self, other: &SpectralField) -> f64 {
        self.comps
            .iter()
            .zip(&other.comps)
            .flat_map(|(a, b)| a.iter().zip(b))
            .fold(0.0, |m: f64, (x, y)| m.max((x - y).norm()))
    }

    pub fn is_finite(&self) -> bool {
        self.comps
            .iter()
            .flat_map(|c| c.iter())
            .all(|v| v.re.is_finite() && v.im.is_finite())
    }

    /// Largest `max_i |k_i|` over nonzero coefficients, or zero for the zero field.
    pub fn band_limit(&self) -> usize {
        let kv = self.grid.wavevectors();
        let mut band = 0i64;
        for comp in &self.comps {
            for (idx, v) in comp.iter().enumerate() {
                if v.norm() > 0.0 {
                    let k = kv[idx];
                    band = band.max(k[0].abs()).max(k[1].abs()).max(k[2].abs());
                }
            }
        }
        band as usize
    }

    /// Copies the coefficients onto another grid of the same dimension.
    /// Fails if a nonzero coefficient is not resolved on the target.
    pub fn resample(&self, target: &Grid) -> Result<SpectralField> {
        if target.dim() != self.grid.dim() {
            return Err(Error::GridMismatch("cannot resample across dimensions".into()));
        }
        let mut out = SpectralField::zeros(target, self.rank);
        let kv = self.grid.wavevectors();
        for (c, comp) in self.comps.iter().enumerate() {
            for (idx, v) in comp.iter().enumerate() {
                if v.norm() == 0.0 {
                    continue;
                }
                let j = target.index_of(&kv[idx]).ok_or_else(|| {
                    Error::GridMismatch(format!("mode {:?} not resolved on {:?}", kv[idx], target))
                })?;
                out.comps[c][j] = *v;
            }
        }
        Ok(out)
    }

    /// Zero-mode and Hermitian check together.
    pub fn satisfies_invariants(&self, tol: f64) -> bool {
        self.comps.iter().all(|c| c[0].norm() == 0.0) && self.hermitian_defect() <= tol
    }

    pub(crate) fn from_parts_unchecked(grid: &Grid, rank: Rank, comps: Vec<Vec<Complex64>>) -> SpectralField {
        SpectralField {
            grid: grid.clone(),
            rank,
            comps,
        }
    }
}

impl PhysicalField {
    pub fn zeros(grid: &Grid, components: usize) -> PhysicalField {
        PhysicalField {
            grid: grid.clone(),
            comps: vec![vec![0.0; grid.len()]; components],
        }
    }

    /// Samples `f(x)` for each component.
    pub fn from_fn(grid: &Grid, components: usize, f: impl Fn(usize, [f64; 3]) -> f64) -> PhysicalField {
        let mut out = PhysicalField::zeros(grid, components);
        for idx in 0..grid.len() {
            let x = grid.point(idx);
            for c in 0..components {
                out.comps[c][idx] = f(c, x);
            }
        }
        out
    }

    /// Largest pointwise Euclidean norm across components.
    pub fn sup_norm(&self) -> f64 {
        (0..self.grid.len())
            .map(|i| self.comps.iter().map(|c| c[i] * c[i]).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }

    /// `integral |v|^p dx` approximated by the grid sum, returned as `||v||_p`.
    pub fn lp_norm(&self, p: f64) -> f64 {
        let dv = self.grid.cell_volume();
        let s: f64 = (0..self.grid.len())
            .map(|i| self.comps.iter().map(|c| c[i] * c[i]).sum::<f64>().sqrt().powf(p))
            .sum();
        (s * dv).powf(1.0 / p)
    }
}

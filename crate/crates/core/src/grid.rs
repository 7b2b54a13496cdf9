//! Uniform periodic grids on `[0, 2pi]^d` and their integer wavenumber lattice.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Integer wavevector; the third entry is zero when `d = 2`.
pub type Wavevector = [i64; 3];

/// A uniform grid with `n` points per axis on the `d`-torus of side `2pi`.
///
/// Coefficient arrays use FFT ordering along every axis (index `i < n/2`
/// holds wavenumber `i`, the rest hold `i - n`) with axis 0 varying slowest.
/// The Nyquist plane `|k_i| = n/2` is never populated, so the resolved
/// lattice is `|k_i| <= n/2 - 1`.
#[derive(Clone)]
pub struct Grid {
    inner: Arc<Tables>,
}

struct Tables {
    dim: usize,
    n: usize,
    len: usize,
    kvec: Vec<Wavevector>,
    kf: Vec<[f64; 3]>,
    norm: Vec<f64>,
    neg: Vec<usize>,
    resolved: Vec<bool>,
    dealiased: Vec<bool>,
}

impl Grid {
    pub fn new(dim: usize, n: usize) -> Result<Grid> {
        if dim != 2 && dim != 3 {
            return Err(Error::InvalidGrid(format!("dimension must be 2 or 3, got {dim}")));
        }
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "points per axis must be a power of two >= 8, got {n}"
            )));
        }
        let len = n.pow(dim as u32);
        let half = (n / 2) as i64;
        let cutoff = (n / 3) as i64;
        let wave = |i: usize| -> i64 {
            let i = i as i64;
            if i < half {
                i
            } else {
                i - n as i64
            }
        };
        let mut kvec = Vec::with_capacity(len);
        let mut neg = Vec::with_capacity(len);
        for idx in 0..len {
            let mut k = [0i64; 3];
            let mut rem = idx;
            let mut nidx = 0usize;
            let mut stride = len;
            for axis in 0..dim {
                stride /= n;
                let i = rem / stride;
                rem %= stride;
                k[axis] = wave(i);
                nidx += ((n - i) % n) * stride;
            }
            kvec.push(k);
            neg.push(nidx);
        }
        let kf = kvec.iter().map(|k| [k[0] as f64, k[1] as f64, k[2] as f64]).collect();
        let norm = kvec
            .iter()
            .map(|k| ((k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64).sqrt())
            .collect();
        let resolved: Vec<bool> = kvec
            .iter()
            .map(|k| k.iter().all(|&c| c.abs() < half) && k.iter().any(|&c| c != 0))
            .collect();
        let dealiased = kvec
            .iter()
            .zip(&resolved)
            .map(|(k, &r)| r && k.iter().all(|&c| c.abs() <= cutoff))
            .collect();
        Ok(Grid {
            inner: Arc::new(Tables {
                dim,
                n,
                len,
                kvec,
                kf,
                norm,
                neg,
                resolved,
                dealiased,
            }),
        })
    }

    pub fn dim(&self) -> usize {
        self.inner.dim
    }

    pub fn n(&self) -> usize {
        self.inner.n
    }

    /// Number of lattice points, `n^d`.
    pub fn len(&self) -> usize {
        self.inner.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Largest resolved wavenumber per axis.
    pub fn k_max(&self) -> usize {
        self.inner.n / 2 - 1
    }

    /// 2/3-rule cutoff `floor(n/3)`.
    pub fn dealias_cutoff(&self) -> usize {
        self.inner.n / 3
    }

    /// Grid spacing `2pi/n`.
    pub fn spacing(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.inner.n as f64
    }

    /// Physical volume of a grid cell `(2pi/n)^d`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim() as i32)
    }

    /// `(2pi)^d`, the volume of the torus.
    pub fn volume(&self) -> f64 {
        (2.0 * std::f64::consts::PI).powi(self.dim() as i32)
    }

    #[inline]
    pub fn wavevector(&self, idx: usize) -> Wavevector {
        self.inner.kvec[idx]
    }

    #[inline]
    pub fn wavevectors(&self) -> &[Wavevector] {
        &self.inner.kvec
    }

    /// Wavevectors as floats.
    #[inline]
    pub fn wavevectors_f64(&self) -> &[[f64; 3]] {
        &self.inner.kf
    }

    /// Euclidean `|k|` per lattice index.
    #[inline]
    pub fn norms(&self) -> &[f64] {
        &self.inner.norm
    }

    /// Index of `-k`.
    #[inline]
    pub fn neg_index(&self, idx: usize) -> usize {
        self.inner.neg[idx]
    }

    /// True for nonzero, non-Nyquist lattice points.
    #[inline]
    pub fn is_resolved(&self, idx: usize) -> bool {
        self.inner.resolved[idx]
    }

    /// True for resolved points that survive the 2/3 rule.
    #[inline]
    pub fn is_dealiased(&self, idx: usize) -> bool {
        self.inner.dealiased[idx]
    }

    /// Lattice index of `k`, or `None` if `k` is outside the resolved lattice.
    pub fn index_of(&self, k: &Wavevector) -> Option<usize> {
        let n = self.inner.n as i64;
        let half = n / 2;
        let mut idx = 0usize;
        for (axis, &c) in k.iter().enumerate() {
            if axis >= self.dim() {
                if c != 0 {
                    return None;
                }
                continue;
            }
            if c.abs() >= half {
                return None;
            }
            idx = idx * self.inner.n + c.rem_euclid(n) as usize;
        }
        Some(idx)
    }

    /// Iterator over physical sample points `x_j = 2pi j / n`.
    pub fn point(&self, idx: usize) -> [f64; 3] {
        let n = self.inner.n;
        let h = self.spacing();
        let mut x = [0.0; 3];
        let mut rem = idx;
        let mut stride = self.len();
        for axis in 0..self.dim() {
            stride /= n;
            x[axis] = (rem / stride) as f64 * h;
            rem %= stride;
        }
        x
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.dim() == other.dim() && self.n() == other.n()
    }
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Grid {{ dim: {}, n: {} }}", self.dim(), self.n())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_sizes() {
        assert!(Grid::new(4, 16).is_err());
        assert!(Grid::new(2, 12).is_err());
        assert!(Grid::new(2, 4).is_err());
        assert!(Grid::new(3, 8).is_ok());
    }

    #[test]
    fn index_and_negation_agree() {
        let g = Grid::new(3, 8).unwrap();
        for idx in 0..g.len() {
            let k = g.wavevector(idx);
            if !g.is_resolved(idx) {
                continue;
            }
            assert_eq!(g.index_of(&k), Some(idx));
            let nk = [-k[0], -k[1], -k[2]];
            assert_eq!(g.index_of(&nk), Some(g.neg_index(idx)));
        }
        assert_eq!(g.index_of(&[4, 0, 0]), None);
    }

    #[test]
    fn cutoffs() {
        let g = Grid::new(2, 16).unwrap();
        assert_eq!(g.k_max(), 7);
        assert_eq!(g.dealias_cutoff(), 5);
        let i5 = g.index_of(&[5, 0, 0]).unwrap();
        let i6 = g.index_of(&[6, 0, 0]).unwrap();
        assert!(g.is_dealiased(i5));
        assert!(!g.is_dealiased(i6));
        assert!(!g.is_resolved(0));
    }
}

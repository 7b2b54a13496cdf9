//! Discrete Fourier transforms between coefficient arrays and grid samples.
//!
//! Forward: `v_k = n^{-d} sum_x v(x) e^{-ik.x}`. Inverse: `v(x) = sum_k v_k e^{ik.x}`.
//! Two real fields are packed into one complex transform (`a + ib`), which
//! halves the work for every multi-component operation.

use std::cell::RefCell;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::field::{PhysicalField, Rank, SpectralField};
use crate::grid::Grid;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
    static WORK: RefCell<(Vec<Complex64>, Vec<Complex64>)> = const { RefCell::new((Vec::new(), Vec::new())) };
}

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(n)
        } else {
            p.plan_fft_forward(n)
        }
    })
}

/// Unnormalized in-place d-dimensional transform.
fn fft_nd(grid: &Grid, buf: &mut [Complex64], inverse: bool) {
    let n = grid.n();
    let len = grid.len();
    let fft = plan(n, inverse);
    WORK.with(|w| {
        let (lines, scratch) = &mut *w.borrow_mut();
        lines.resize(len, Complex64::new(0.0, 0.0));
        scratch.resize(fft.get_inplace_scratch_len(), Complex64::new(0.0, 0.0));
        for axis in 0..grid.dim() {
            let stride = n.pow((grid.dim() - 1 - axis) as u32);
            if stride == 1 {
                fft.process_with_scratch(buf, scratch);
                continue;
            }
            // Gather every line along `axis` into contiguous storage.
            let block = n * stride;
            for o in 0..len / block {
                let src = &buf[o * block..(o + 1) * block];
                let dst = &mut lines[o * block..(o + 1) * block];
                for j in 0..n {
                    for inner in 0..stride {
                        dst[inner * n + j] = src[j * stride + inner];
                    }
                }
            }
            fft.process_with_scratch(lines, scratch);
            for o in 0..len / block {
                let src = &lines[o * block..(o + 1) * block];
                let dst = &mut buf[o * block..(o + 1) * block];
                for j in 0..n {
                    for inner in 0..stride {
                        dst[j * stride + inner] = src[inner * n + j];
                    }
                }
            }
        }
    });
}

/// Inverse transform of several Hermitian coefficient arrays to real samples.
pub fn inverse_components(grid: &Grid, comps: &[&[Complex64]]) -> Vec<Vec<f64>> {
    let i = Complex64::new(0.0, 1.0);
    let mut out = Vec::with_capacity(comps.len());
    for pair in comps.chunks(2) {
        let mut buf: Vec<Complex64> = match pair {
            [a, b] => a.iter().zip(b.iter()).map(|(x, y)| x + i * y).collect(),
            [a] => a.to_vec(),
            _ => unreachable!(),
        };
        fft_nd(grid, &mut buf, true);
        out.push(buf.iter().map(|z| z.re).collect());
        if pair.len() == 2 {
            out.push(buf.iter().map(|z| z.im).collect());
        }
    }
    out
}

/// Forward transform of real samples. The outputs are exactly Hermitian and
/// have the mean and Nyquist plane removed.
pub fn forward_components(grid: &Grid, comps: &[&[f64]]) -> Vec<Vec<Complex64>> {
    let scale = 1.0 / grid.len() as f64;
    let mut out = Vec::with_capacity(comps.len());
    for pair in comps.chunks(2) {
        let mut buf: Vec<Complex64> = match pair {
            [a, b] => a.iter().zip(b.iter()).map(|(&x, &y)| Complex64::new(x, y)).collect(),
            [a] => a.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
            _ => unreachable!(),
        };
        fft_nd(grid, &mut buf, false);
        let zero = Complex64::new(0.0, 0.0);
        let two = pair.len() == 2;
        let mut a = Vec::with_capacity(grid.len());
        let mut b = Vec::with_capacity(if two { grid.len() } else { 0 });
        for idx in 0..grid.len() {
            if !grid.is_resolved(idx) {
                a.push(zero);
                if two {
                    b.push(zero);
                }
                continue;
            }
            let f = buf[idx];
            let g = buf[grid.neg_index(idx)].conj();
            a.push((f + g) * (0.5 * scale));
            if two {
                // (f - g) / 2i
                let d = (f - g) * (0.5 * scale);
                b.push(Complex64::new(d.im, -d.re));
            }
        }
        out.push(a);
        if pair.len() == 2 {
            out.push(b);
        }
    }
    out
}

/// Real samples of a spectral field.
pub fn to_physical(field: &SpectralField) -> PhysicalField {
    let refs: Vec<&[Complex64]> = field.components().iter().map(|c| c.as_slice()).collect();
    PhysicalField {
        grid: field.grid().clone(),
        comps: inverse_components(field.grid(), &refs),
    }
}

/// Coefficients of sampled data; the rank is inferred from the component count.
pub fn to_spectral(phys: &PhysicalField) -> Result<SpectralField> {
    let rank = match phys.comps.len() {
        1 => Rank::Scalar,
        c if c == phys.grid.dim() => Rank::Vector,
        c => {
            return Err(Error::RankMismatch(format!(
                "{c} components on a {}-d grid",
                phys.grid.dim()
            )))
        }
    };
    if phys.comps.iter().any(|c| c.len() != phys.grid.len()) {
        return Err(Error::InvalidGrid("sample count does not match grid".into()));
    }
    let refs: Vec<&[f64]> = phys.comps.iter().map(|c| c.as_slice()).collect();
    Ok(SpectralField::from_parts_unchecked(
        &phys.grid,
        rank,
        forward_components(&phys.grid, &refs),
    ))
}

/// Inverse then forward transform.
pub fn transform_roundtrip(field: &SpectralField) -> Result<SpectralField> {
    to_spectral(&to_physical(field))
}

/// Imaginary part left over by a plain complex inverse transform; a measure of
/// how far the coefficients are from describing a real field.
pub fn imaginary_residual(field: &SpectralField) -> f64 {
    let mut worst: f64 = 0.0;
    for comp in field.components() {
        let mut buf = comp.clone();
        fft_nd(field.grid(), &mut buf, true);
        worst = buf.iter().fold(worst, |m, z| m.max(z.im.abs()));
    }
    worst
}

/// Zeroes every coefficient with some `|k_i| > floor(n/3)`.
pub fn dealias(field: &SpectralField) -> SpectralField {
    let grid = field.grid().clone();
    let mut out = field.clone();
    for c in 0..out.num_components() {
        for (idx, v) in out.component_mut(c).iter_mut().enumerate() {
            if !grid.is_dealiased(idx) {
                *v = Complex64::new(0.0, 0.0);
            }
        }
    }
    out
}

/// Dealiased pseudospectral product of two scalar fields.
pub fn product(f: &SpectralField, g: &SpectralField) -> Result<SpectralField> {
    if f.grid() != g.grid() {
        return Err(Error::GridMismatch("product operands live on different grids".into()));
    }
    if f.rank() != Rank::Scalar || g.rank() != Rank::Scalar {
        return Err(Error::RankMismatch("product expects scalar fields".into()));
    }
    let grid = f.grid();
    let phys = inverse_components(grid, &[f.component(0), g.component(0)]);
    let prod: Vec<f64> = phys[0].iter().zip(&phys[1]).map(|(a, b)| a * b).collect();
    let spec = forward_components(grid, &[&prod]);
    Ok(dealias(&SpectralField::from_parts_unchecked(grid, Rank::Scalar, spec)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_divfree_field, ShellProfile};
    use std::f64::consts::PI;

    /// Direct evaluation of the discrete Fourier sum, O(n^{2d}).
    fn slow_forward(phys: &PhysicalField) -> Vec<Complex64> {
        let g = &phys.grid;
        let mut out = vec![Complex64::new(0.0, 0.0); g.len()];
        for (kidx, o) in out.iter_mut().enumerate() {
            let k = g.wavevector(kidx);
            let mut acc = Complex64::new(0.0, 0.0);
            for xidx in 0..g.len() {
                let x = g.point(xidx);
                let phase = -(k[0] as f64 * x[0] + k[1] as f64 * x[1] + k[2] as f64 * x[2]);
                acc += Complex64::from_polar(phys.comps[0][xidx], phase);
            }
            *o = acc / g.len() as f64;
        }
        out
    }

    #[test]
    fn cosine_roundtrip() {
        let g = Grid::new(2, 16).unwrap();
        let f = SpectralField::from_modes(&g, Rank::Scalar, &[([1, 0, 0], 0, Complex64::new(0.5, 0.0))]).unwrap();
        let p = to_physical(&f);
        for idx in 0..g.len() {
            let x = g.point(idx);
            assert!((p.comps[0][idx] - x[0].cos()).abs() < 1e-15);
        }
        let back = transform_roundtrip(&f).unwrap();
        assert!(back.max_abs_diff(&f) < 1e-15);
    }

    #[test]
    fn zero_roundtrip() {
        let g = Grid::new(3, 8).unwrap();
        let z = SpectralField::zeros(&g, Rank::Vector);
        assert_eq!(transform_roundtrip(&z).unwrap(), z);
    }

    #[test]
    fn fast_transform_matches_direct_sum() {
        let g = Grid::new(3, 8).unwrap();
        let f = random_divfree_field(&g, &ShellProfile::Flat { amplitude: 1.0 }, 2.0, 3, Rank::Scalar).unwrap();
        let p = to_physical(&f);
        let slow = slow_forward(&p);
        let fast = to_spectral(&p).unwrap();
        for idx in 0..g.len() {
            if g.is_resolved(idx) {
                assert!((slow[idx] - fast.component(0)[idx]).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn random_3d_roundtrip_n32() {
        let g = Grid::new(3, 32).unwrap();
        let f = random_divfree_field(&g, &ShellProfile::Exponential { amplitude: 1.0, rate: 0.2, s: 1.0 }, 10.0, 11, Rank::Vector)
            .unwrap();
        let back = transform_roundtrip(&f).unwrap();
        assert!(back.max_abs_diff(&f) < 1e-13 * f.max_abs().max(1.0));
    }

    #[test]
    fn parseval() {
        let g = Grid::new(2, 32).unwrap();
        let f = random_divfree_field(&g, &ShellProfile::Exponential { amplitude: 1.0, rate: 0.3, s: 1.0 }, 10.0, 5, Rank::Scalar)
            .unwrap();
        let p = to_physical(&f);
        let lhs: f64 = p.comps[0].iter().map(|v| v * v).sum::<f64>() * g.cell_volume();
        let rhs: f64 = (2.0 * PI).powi(2) * f.component(0).iter().map(|c| c.norm_sqr()).sum::<f64>();
        assert!((lhs - rhs).abs() < 1e-12 * rhs);
    }

    #[test]
    fn dealias_cutoff_rule() {
        let g = Grid::new(2, 16).unwrap();
        let six = SpectralField::from_modes(&g, Rank::Scalar, &[([6, 0, 0], 0, Complex64::new(1.0, 0.0))]).unwrap();
        assert_eq!(dealias(&six).max_abs(), 0.0);
        let five = SpectralField::from_modes(&g, Rank::Scalar, &[([5, 0, 0], 0, Complex64::new(1.0, 0.0))]).unwrap();
        assert_eq!(dealias(&five), five);
    }

    /// Exact convolution of coefficient tables, restricted to the retained band.
    fn convolve(f: &SpectralField, g: &SpectralField) -> Vec<(crate::grid::Wavevector, Complex64)> {
        let grid = f.grid();
        let cut = grid.dealias_cutoff() as i64;
        let mut acc = std::collections::BTreeMap::new();
        for a in 0..grid.len() {
            let fa = f.component(0)[a];
            if fa.norm() == 0.0 {
                continue;
            }
            for b in 0..grid.len() {
                let gb = g.component(0)[b];
                if gb.norm() == 0.0 {
                    continue;
                }
                let (ka, kb) = (grid.wavevector(a), grid.wavevector(b));
                let l = [ka[0] + kb[0], ka[1] + kb[1], 0];
                if l[0].abs() <= cut && l[1].abs() <= cut && (l[0], l[1]) != (0, 0) {
                    *acc.entry(l).or_insert(Complex64::new(0.0, 0.0)) += fa * gb;
                }
            }
        }
        acc.into_iter().collect()
    }

    #[test]
    fn dealiased_product_is_exact_and_grid_independent() {
        let g16 = Grid::new(2, 16).unwrap();
        let g32 = Grid::new(2, 32).unwrap();
        let prof = ShellProfile::Flat { amplitude: 1.0 };
        let f = random_divfree_field(&g16, &prof, 5.0, 1, Rank::Scalar).unwrap();
        let h = random_divfree_field(&g16, &prof, 5.0, 2, Rank::Scalar).unwrap();
        let p16 = product(&f, &h).unwrap();
        let p32 = product(&f.resample(&g32).unwrap(), &h.resample(&g32).unwrap()).unwrap();
        for (k, v) in convolve(&f, &h) {
            assert!((p16.coeff(0, &k) - v).norm() < 1e-13);
            assert!((p32.coeff(0, &k) - v).norm() < 1e-13);
        }
    }
}

use num_complex::Complex64;

use super::params::{FlowState, ModelParams};
use crate::error::{Error, Result};
use crate::field::{Rank, SpectralField};
use crate::operators::{biot_savart, velocity_from_vorticity};
use crate::transform::{forward_components, inverse_components};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Nonlinear part of the vorticity equation, with the largest sampled speed.
#[derive(Clone, Debug)]
pub struct Nonlinear {
    pub term: SpectralField,
    pub max_speed: f64,
}

/// `-(u.grad) omega + (omega.grad) u` for `u = K_alpha omega`, dealiased.
///
/// 2D uses the conservative form `-div(u omega)`; 3D uses `curl(u x omega)`,
/// which equals transport plus stretching for divergence-free `u` and `omega`.
pub fn nonlinear_term(omega: &SpectralField, params: &ModelParams) -> Result<Nonlinear> {
    let grid = omega.grid();
    let dim = grid.dim();
    // Stage states of a step stay divergence-free up to round-off, so the
    // check is only made on rank here.
    let u = if (dim == 2) == (omega.rank() == Rank::Scalar) {
        biot_savart(omega, params.velocity_alpha())
    } else {
        velocity_from_vorticity(omega, params.velocity_alpha())?
    };
    let mut refs: Vec<&[Complex64]> = u.components().iter().map(|c| c.as_slice()).collect();
    refs.extend(omega.components().iter().map(|c| c.as_slice()));
    let phys = inverse_components(grid, &refs);
    let (uu, ww) = phys.split_at(dim);
    let max_speed = (0..grid.len())
        .map(|p| uu.iter().map(|c| c[p] * c[p]).sum::<f64>())
        .fold(0.0, f64::max)
        .sqrt();
    let kf = grid.wavevectors_f64();
    let zero = Complex64::new(0.0, 0.0);
    let comps = if dim == 2 {
        let flux: Vec<Vec<f64>> = uu
            .iter()
            .map(|uc| uc.iter().zip(&ww[0]).map(|(a, b)| a * b).collect())
            .collect();
        let f = forward_components(grid, &[&flux[0], &flux[1]]);
        let c = (0..grid.len())
            .map(|idx| {
                if grid.is_dealiased(idx) {
                    let k = kf[idx];
                    -I * (f[0][idx] * k[0] + f[1][idx] * k[1])
                } else {
                    zero
                }
            })
            .collect();
        vec![c]
    } else {
        let mut cross = vec![Vec::with_capacity(grid.len()); 3];
        for p in 0..grid.len() {
            let (a, b) = ([uu[0][p], uu[1][p], uu[2][p]], [ww[0][p], ww[1][p], ww[2][p]]);
            cross[0].push(a[1] * b[2] - a[2] * b[1]);
            cross[1].push(a[2] * b[0] - a[0] * b[2]);
            cross[2].push(a[0] * b[1] - a[1] * b[0]);
        }
        let f = forward_components(grid, &[&cross[0], &cross[1], &cross[2]]);
        let mut out = vec![Vec::with_capacity(grid.len()); 3];
        for idx in 0..grid.len() {
            if !grid.is_dealiased(idx) {
                for o in out.iter_mut() {
                    o.push(zero);
                }
                continue;
            }
            let k = kf[idx];
            let v = [f[0][idx], f[1][idx], f[2][idx]];
            out[0].push(I * (v[2] * k[1] - v[1] * k[2]));
            out[1].push(I * (v[0] * k[2] - v[2] * k[0]));
            out[2].push(I * (v[1] * k[0] - v[0] * k[1]));
        }
        out
    };
    let term = SpectralField::from_parts_unchecked(grid, omega.rank(), comps);
    debug_assert_eq!(term.rank(), if dim == 2 { Rank::Scalar } else { Rank::Vector });
    Ok(Nonlinear { term, max_speed })
}

/// Full time derivative of the vorticity.
pub fn evaluate_rhs(state: &FlowState, params: &ModelParams) -> Result<SpectralField> {
    if !state.omega.is_finite() {
        return Err(Error::BlowUp { t: state.t });
    }
    let mut out = state.omega.map_symbol(|_, n| -params.linear_rate(n));
    if params.nonlinear {
        let nl = nonlinear_term(&state.omega, params)?;
        out.axpy(1.0, &nl.term);
    }
    if !out.is_finite() {
        return Err(Error::BlowUp { t: state.t });
    }
    Ok(out)
}

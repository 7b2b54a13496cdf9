//! Named initial vorticities.

use num_complex::Complex64;

use crate::diagnostics::fit_radius;
use crate::error::{Error, Result};
use crate::field::{Rank, SpectralField};
use crate::grid::Grid;
use crate::operators::sobolev_norm;
use crate::random::{random_divfree_field, ShellProfile};

fn need_dim(grid: &Grid, d: usize, what: &str) -> Result<()> {
    if grid.dim() != d {
        return Err(Error::WrongDimension(format!("{what} is a {d}D preset")));
    }
    Ok(())
}

/// Second-grade vorticity of `u = (sin x1 cos x2, -cos x1 sin x2)`, which is
/// `2 (1 + 2 alpha^2) sin x1 sin x2`.
pub fn taylor_green(grid: &Grid, alpha: f64) -> Result<SpectralField> {
    need_dim(grid, 2, "Taylor-Green")?;
    let a = 0.5 * (1.0 + 2.0 * alpha * alpha);
    let c = |v: f64| Complex64::new(v, 0.0);
    let modes = [
        ([1, 1, 0], 0, c(-a)),
        ([-1, -1, 0], 0, c(-a)),
        ([1, -1, 0], 0, c(a)),
        ([-1, 1, 0], 0, c(a)),
    ];
    SpectralField::from_modes(grid, Rank::Scalar, &modes)
}

/// Random scalar vorticity with modulus `e^{-rate |k|}` up to the dealiasing
/// cutoff, rescaled to `||omega|| = l2`.
pub fn analytic_2d(grid: &Grid, seed: u64, rate: f64, l2: f64) -> Result<SpectralField> {
    need_dim(grid, 2, "analytic_2d")?;
    let p = ShellProfile::Exponential { amplitude: 1.0, rate, s: 1.0 };
    let w = random_divfree_field(grid, &p, grid.dealias_cutoff() as f64, seed, Rank::Scalar)?;
    Ok(normalize(&w, l2))
}

/// Random divergence-free vorticity with the given profile on `|k| <= band`,
/// rescaled to `||omega|| = l2`.
pub fn random_3d(grid: &Grid, seed: u64, profile: &ShellProfile, band: f64, l2: f64) -> Result<SpectralField> {
    need_dim(grid, 3, "random_3d")?;
    let w = random_divfree_field(grid, profile, band, seed, Rank::Vector)?;
    Ok(normalize(&w, l2))
}

/// Vorticity of the shear flow `u = (sin x2, 0, sin x1)`, an Euler solution
/// `(sin x2, 0, sin(x1 - t sin x2))` whose analyticity radius decays for all time.
pub fn bardos_titi(grid: &Grid) -> Result<SpectralField> {
    need_dim(grid, 3, "Bardos-Titi")?;
    // curl u = (0, -cos x1, -cos x2).
    let h = Complex64::new(-0.5, 0.0);
    let modes = [([1, 0, 0], 1, h), ([-1, 0, 0], 1, h), ([0, 1, 0], 2, h), ([0, -1, 0], 2, h)];
    SpectralField::from_modes(grid, Rank::Vector, &modes)
}

/// `w` scaled to `L^2` norm `l2` (zero stays zero).
pub fn normalize(w: &SpectralField, l2: f64) -> SpectralField {
    let n = sobolev_norm(w, 0.0);
    if n == 0.0 {
        w.clone()
    } else {
        w.scale(l2 / n)
    }
}

/// `0.9` times the fitted radius.
pub fn auto_tau0(omega: &SpectralField, s: f64) -> Result<f64> {
    Ok(0.9 * fit_radius(omega, s, None)?.tau_fit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::PhysicalField;
    use crate::operators::vorticity_from_velocity;
    use crate::transform::to_spectral;

    #[test]
    fn closed_forms_match_sampled_velocities() {
        let g = Grid::new(2, 16).unwrap();
        let u = PhysicalField::from_fn(&g, 2, |c, x| {
            if c == 0 {
                x[0].sin() * x[1].cos()
            } else {
                -x[0].cos() * x[1].sin()
            }
        });
        let w = vorticity_from_velocity(&to_spectral(&u).unwrap(), 0.3).unwrap();
        assert!(taylor_green(&g, 0.3).unwrap().max_abs_diff(&w) < 1e-14);

        let g = Grid::new(3, 8).unwrap();
        let u = PhysicalField::from_fn(&g, 3, |c, x| match c {
            0 => x[1].sin(),
            2 => x[0].sin(),
            _ => 0.0,
        });
        let w = vorticity_from_velocity(&to_spectral(&u).unwrap(), 0.0).unwrap();
        let bt = bardos_titi(&g).unwrap();
        assert!(bt.max_abs_diff(&w) < 1e-14);
        assert_eq!(bt.band_limit(), 1);
    }
}

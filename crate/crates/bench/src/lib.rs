//! Fixtures shared by the benchmarks in `benches/`.

use gevrey_core::dynamics::presets::analytic_2d;
use gevrey_core::random::{random_divfree_field, ShellProfile};
use gevrey_core::{Grid, Rank, SpectralField};

/// Analytic 2D vorticity on an `n`-grid.
pub fn vorticity_2d(n: usize) -> SpectralField {
    let g = Grid::new(2, n).expect("grid");
    analytic_2d(&g, 7, 0.3, 1.0).expect("preset")
}

/// Flat-spectrum divergence-free 3D vorticity on `|k| <= band`.
pub fn vorticity_3d(n: usize, band: f64) -> SpectralField {
    let g = Grid::new(3, n).expect("grid");
    random_divfree_field(&g, &ShellProfile::Flat { amplitude: 1.0 }, band, 7, Rank::Vector).expect("field")
}

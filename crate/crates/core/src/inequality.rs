//! Weighted transport pairings `<(a.grad) b, g>` evaluated two ways, by
//! dealiased pseudospectral products and by a direct triad sum, plus the
//! norm bundles they are compared against.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{gevrey_norm, sup_gradient_canonical, xy_norms, LogNorm};
use crate::error::{Error, Result};
use crate::field::{Rank, SpectralField};
use crate::grid::{Grid, Wavevector};
use crate::operators::{curl, inner_product, partial, power, sobolev_norm, velocity_from_vorticity};
use crate::random::{random_divfree_field, ShellProfile};
use crate::transform::{dealias, forward_components, inverse_components};

/// Fourier symbol used in a pairing weight.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Symbol {
    One,
    /// `|k|^r e^{tau |k|^{1/s}}`.
    Radial { r: f64, tau: f64, s: f64 },
    /// `|k_m|^r e^{tau |k_m|^{1/s}}`, `m` counted from 1.
    Directional { m: usize, r: f64, tau: f64, s: f64 },
}

impl Symbol {
    pub fn eval(&self, k: &Wavevector) -> f64 {
        match *self {
            Symbol::One => 1.0,
            Symbol::Radial { r, tau, s } => {
                let n = ((k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64).sqrt();
                power(n, r) * (tau * n.powf(1.0 / s)).exp()
            }
            Symbol::Directional { m, r, tau, s } => {
                let n = k[m - 1].unsigned_abs() as f64;
                power(n, r) * (tau * n.powf(1.0 / s)).exp()
            }
        }
    }

    fn table(&self, grid: &Grid) -> Vec<f64> {
        grid.wavevectors().iter().map(|k| self.eval(k)).collect()
    }
}

/// `coef <outer((a.grad) inner(b)), test(g)>`; the triad weight is
/// `coef outer(l) inner(k) test(l)` for `j + k = l`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightTerm {
    pub coef: f64,
    pub outer: Symbol,
    pub inner: Symbol,
    pub test: Symbol,
}

impl WeightTerm {
    pub fn plain(test: Symbol) -> WeightTerm {
        WeightTerm {
            coef: 1.0,
            outer: Symbol::One,
            inner: Symbol::One,
            test,
        }
    }
}

/// `<A((a.grad) b), B g> - <(a.grad) A b, B g>`.
pub fn commutator(a: Symbol, b: Symbol) -> Vec<WeightTerm> {
    vec![
        WeightTerm {
            coef: 1.0,
            outer: a,
            inner: Symbol::One,
            test: b,
        },
        WeightTerm {
            coef: -1.0,
            outer: Symbol::One,
            inner: a,
            test: b,
        },
    ]
}

/// How a pairing was evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    Pseudospectral,
    BruteForce,
}

/// Dealiased `(a.grad) b` for a vector field `a` and a scalar or vector `b`.
pub fn transport(a: &SpectralField, b: &SpectralField) -> Result<SpectralField> {
    let grid = a.grid();
    if b.grid() != grid {
        return Err(Error::GridMismatch("transport operands on different grids".into()));
    }
    if a.rank() != Rank::Vector {
        return Err(Error::RankMismatch("transporting field must be a vector".into()));
    }
    let d = grid.dim();
    let nb = b.num_components();
    let parts: Vec<SpectralField> = (0..d).map(|j| partial(b, j)).collect();
    let mut refs: Vec<&[Complex64]> = a.components().iter().map(|c| c.as_slice()).collect();
    for i in 0..nb {
        for p in &parts {
            refs.push(p.component(i));
        }
    }
    let phys = inverse_components(grid, &refs);
    let mut out = vec![vec![0.0; grid.len()]; nb];
    for (i, oi) in out.iter_mut().enumerate() {
        for (p, v) in oi.iter_mut().enumerate() {
            *v = (0..d).map(|j| phys[j][p] * phys[d + i * d + j][p]).sum();
        }
    }
    let refs: Vec<&[f64]> = out.iter().map(|c| c.as_slice()).collect();
    let spec = forward_components(grid, &refs);
    Ok(dealias(&SpectralField::from_parts_unchecked(grid, b.rank(), spec)))
}

fn check_operands(a: &SpectralField, b: &SpectralField, g: &SpectralField) -> Result<()> {
    if a.grid() != b.grid() || a.grid() != g.grid() {
        return Err(Error::GridMismatch("pairing operands on different grids".into()));
    }
    if b.num_components() != g.num_components() {
        return Err(Error::RankMismatch("transported and test fields differ in rank".into()));
    }
    if a.rank() != Rank::Vector {
        return Err(Error::RankMismatch("transporting field must be a vector".into()));
    }
    Ok(())
}

fn weights_finite(grid: &Grid, weight: &[WeightTerm]) -> bool {
    weight.iter().all(|t| {
        [t.outer, t.inner, t.test]
            .iter()
            .all(|s| s.table(grid).iter().all(|v| v.is_finite()))
    })
}

/// Pseudospectral evaluation. Aliased product modes land at `|m| >= n - band(a) - band(b)`,
/// so the pairing is exact when `band(a) + band(b) + band(g) < n` and `g`
/// lies inside the dealiasing cutoff.
pub fn pseudospectral_pairing(a: &SpectralField, b: &SpectralField, g: &SpectralField, weight: &[WeightTerm]) -> Result<f64> {
    check_operands(a, b, g)?;
    let grid = a.grid();
    let (ba, bb, bg) = (a.band_limit(), b.band_limit(), g.band_limit());
    if bg > grid.dealias_cutoff() {
        return Err(Error::InsufficientPadding(bg, 0, grid.dealias_cutoff()));
    }
    if ba + bb + bg >= grid.n() {
        return Err(Error::InsufficientPadding(ba + bb, bg, grid.n() - 1));
    }
    let mut total = 0.0;
    for t in weight {
        let inner = b.map_symbol(|k, _| t.inner.eval(k));
        let tr = transport(a, &inner)?.map_symbol(|k, _| t.outer.eval(k));
        let gt = g.map_symbol(|k, _| t.test.eval(k));
        total += t.coef * inner_product(&tr, &gt)?;
    }
    Ok(total)
}

/// Largest band accepted by [`brute_force_pairing`] in 2D and 3D.
pub const MAX_BRUTE_BAND: [usize; 2] = [21, 8];

/// Neumaier compensated sum.
#[derive(Clone, Copy, Debug, Default)]
struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

fn support(f: &SpectralField) -> Vec<usize> {
    (0..f.grid().len())
        .filter(|&i| f.components().iter().any(|c| c[i] != Complex64::new(0.0, 0.0)))
        .collect()
}

/// `(2pi)^d Re sum_{j+k=l} w(j,k,l) i (a_j . k)(b_k . conj g_l)` over all
/// nonzero triads, with compensated accumulation.
pub fn brute_force_pairing(a: &SpectralField, b: &SpectralField, g: &SpectralField, weight: &[WeightTerm]) -> Result<f64> {
    check_operands(a, b, g)?;
    let grid = a.grid();
    let d = grid.dim();
    let band = a.band_limit().max(b.band_limit()).max(g.band_limit());
    if band > MAX_BRUTE_BAND[d - 2] {
        let triads = ((2 * band + 1) as u64).pow(2 * d as u32);
        return Err(Error::BandTooLarge { band, triads });
    }
    let tables: Vec<[Vec<f64>; 3]> = weight
        .iter()
        .map(|t| [t.outer.table(grid), t.inner.table(grid), t.test.table(grid)])
        .collect();
    let kv = grid.wavevectors();
    let kf = grid.wavevectors_f64();
    let sa = support(a);
    let sb = support(b);
    let nb = b.num_components();
    let mut acc = Neumaier::default();
    for &ja in &sa {
        let j = kv[ja];
        for &kb in &sb {
            let k = kv[kb];
            let l = [j[0] + k[0], j[1] + k[1], j[2] + k[2]];
            if l == [0, 0, 0] {
                continue;
            }
            let Some(li) = grid.index_of(&l) else { continue };
            let mut w = 0.0;
            for (t, tab) in weight.iter().zip(&tables) {
                w += t.coef * tab[0][li] * tab[1][kb] * tab[2][li];
            }
            if w == 0.0 {
                continue;
            }
            let mut x = Complex64::new(0.0, 0.0);
            for c in 0..d {
                x += a.component(c)[ja] * kf[kb][c];
            }
            let mut y = Complex64::new(0.0, 0.0);
            for c in 0..nb {
                y += b.component(c)[kb] * g.component(c)[li].conj();
            }
            // Re(i x y) = -Im(x y)
            acc.add(-(x * y).im * w);
        }
    }
    Ok(acc.value() * grid.volume())
}

/// Evaluate along `route`.
pub fn pairing(a: &SpectralField, b: &SpectralField, g: &SpectralField, weight: &[WeightTerm], route: Route) -> Result<f64> {
    match route {
        Route::Pseudospectral => pseudospectral_pairing(a, b, g, weight),
        Route::BruteForce => brute_force_pairing(a, b, g, weight),
    }
}

/// One named product of norms on the right of an estimate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RhsFactor {
    pub name: String,
    pub value: f64,
}

/// Metadata of the field a report was computed on.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FieldMeta {
    pub seed: Option<u64>,
    pub band: usize,
    pub tau: f64,
    pub s: f64,
    pub alpha: f64,
}

/// A measured pairing against its norm bundle. `ratio = lhs / rhs_total` is
/// the empirical constant; it is 0 when the bundle vanishes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairingReport {
    pub lemma: String,
    /// Signed pairings whose absolute values make up `lhs`.
    pub parts: Vec<RhsFactor>,
    pub lhs: f64,
    pub rhs: Vec<RhsFactor>,
    pub rhs_total: f64,
    pub ratio: f64,
    pub meta: FieldMeta,
    pub n: usize,
    pub route: Route,
    pub overflow: bool,
}

fn factor(name: &str, value: f64) -> RhsFactor {
    RhsFactor {
        name: name.to_string(),
        value,
    }
}

fn report(lemma: &str, parts: Vec<RhsFactor>, rhs: Vec<RhsFactor>, meta: FieldMeta, grid: &Grid, route: Route, overflow: bool) -> PairingReport {
    let lhs: f64 = parts.iter().map(|p| p.value.abs()).sum();
    let rhs_total: f64 = rhs.iter().map(|r| r.value).sum();
    let ratio = if rhs_total > 0.0 { lhs / rhs_total } else { 0.0 };
    PairingReport {
        lemma: lemma.to_string(),
        parts,
        lhs,
        rhs,
        rhs_total,
        ratio,
        meta,
        n: grid.n(),
        route,
        overflow,
    }
}

fn norm_value(n: LogNorm) -> f64 {
    n.value().unwrap_or(f64::INFINITY)
}

fn meta(f: &SpectralField, tau: f64, s: f64, alpha: f64) -> FieldMeta {
    FieldMeta {
        seed: None,
        band: f.band_limit(),
        tau,
        s,
        alpha,
    }
}

/// `|<u.grad w, e^{2 tau L^{1/s}} w>|` with `u = K_alpha w` (2D), against
/// `(tau/alpha) |e^{tau L^{1/s}} w| |L^{1/2s} e^{tau L^{1/s}} w|^2`.
///
/// The pairing is taken in commutator form, subtracting the vanishing
/// `<u.grad e^{tau L^{1/s}} w, e^{tau L^{1/s}} w>`.
pub fn convection_pairing_2d(omega: &SpectralField, alpha: f64, tau: f64, s: f64, route: Route) -> Result<PairingReport> {
    if omega.grid().dim() != 2 || omega.rank() != Rank::Scalar {
        return Err(Error::WrongDimension("2D convection pairing needs a 2D scalar vorticity".into()));
    }
    convection_report("convection_2d", omega, alpha, tau, s, route)
}

fn convection_report(tag: &str, omega: &SpectralField, alpha: f64, tau: f64, s: f64, route: Route) -> Result<PairingReport> {
    let u = velocity_from_vorticity(omega, alpha)?;
    let e = Symbol::Radial { r: 0.0, tau, s };
    let weight = commutator(e, e);
    let grid = omega.grid();
    let overflow = !weights_finite(grid, &weight);
    let value = pairing(&u, omega, omega, &weight, route)?;
    let x = norm_value(gevrey_norm(omega, tau, s, 0.0));
    let y = norm_value(gevrey_norm(omega, tau, s, 0.5 / s));
    let rhs = vec![factor("tau/alpha * |e w| * |L^(1/2s) e w|^2", tau / alpha * x * y * y)];
    Ok(report(tag, vec![factor("pairing", value)], rhs, meta(omega, tau, s, alpha), grid, route, overflow))
}

/// The two commutators for a 2D velocity `u` with `c = curl u` (s = 1):
/// `T1 = alpha^2 |<e((u.grad) Lap c), e Lap c> - <(u.grad) e Lap c, e Lap c>|`
/// against `alpha^2 tau |L^(1/2) e Lap c| |e Lap c|^2`, and
/// `T2 = |<L e((u.grad) c), L e c> - <(u.grad) L e c, L e c>|` against
/// `|c| |L e c|^(1/2) |e Lap c|^(3/2) + tau |L^(3/2) e c| |L e c| |e Lap c|`,
/// with `e = e^{tau L}`. The bundles are the ones before the Young split.
pub fn t1_t2_pairings_2d(u: &SpectralField, alpha: f64, tau: f64, route: Route) -> Result<(PairingReport, PairingReport)> {
    let grid = u.grid();
    if grid.dim() != 2 || u.rank() != Rank::Vector {
        return Err(Error::WrongDimension("needs a 2D velocity".into()));
    }
    let c = curl(u)?;
    let lap_c = c.map_symbol(|_, n| -n * n);
    let e = Symbol::Radial { r: 0.0, tau, s: 1.0 };
    let le = Symbol::Radial { r: 1.0, tau, s: 1.0 };
    let w1 = commutator(e, e);
    let w2 = commutator(le, le);
    let overflow = !weights_finite(grid, &w2);
    let t1 = alpha * alpha * pairing(u, &lap_c, &lap_c, &w1, route)?;
    let t2 = pairing(u, &c, &c, &w2, route)?;

    let n = |f: &SpectralField, r: f64| norm_value(gevrey_norm(f, tau, 1.0, r));
    let e_lap = n(&lap_c, 0.0);
    let half_lap = n(&lap_c, 0.5);
    let l_c = n(&c, 1.0);
    let l32_c = n(&c, 1.5);
    let m = meta(u, tau, 1.0, alpha);
    let r1 = report(
        "t1_2d",
        vec![factor("pairing", t1)],
        vec![factor("alpha^2 tau |L^(1/2) e Lap c| |e Lap c|^2", alpha * alpha * tau * half_lap * e_lap * e_lap)],
        m.clone(),
        grid,
        route,
        overflow,
    );
    let r2 = report(
        "t2_2d",
        vec![factor("pairing", t2)],
        vec![
            factor("|c| |L e c|^(1/2) |e Lap c|^(3/2)", sobolev_norm(&c, 0.0) * l_c.sqrt() * e_lap.powf(1.5)),
            factor("tau |L^(3/2) e c| |L e c| |e Lap c|", tau * l32_c * l_c * e_lap),
        ],
        m,
        grid,
        route,
        overflow,
    );
    Ok((r1, r2))
}

/// 3D pairings for `u = K_alpha w`: convection and stretching against
/// `e^{2 tau L^{1/s}} w`, then for each `m` the directional convection
/// commutator and stretching against `L_m^2 e^{2 tau L_m^{1/s}} w`, bundled
/// as `|grad u|_inf X^2 + (1+tau)|w|_{H^1}^2 X / alpha
/// + (tau |grad u|_inf + tau^2 |w|_{H^1}/alpha + tau^2 X/alpha) Y^2`.
pub fn pairings_3d(omega: &SpectralField, tau: f64, s: f64, alpha: f64, route: Route) -> Result<Vec<PairingReport>> {
    let grid = omega.grid();
    if grid.dim() != 3 || omega.rank() != Rank::Vector {
        return Err(Error::WrongDimension("3D pairings need a 3D vector vorticity".into()));
    }
    let u = velocity_from_vorticity(omega, alpha)?;
    let mut out = Vec::with_capacity(5);
    out.push(convection_report("convection_3d", omega, alpha, tau, s, route)?);

    let e2 = Symbol::Radial { r: 0.0, tau: 2.0 * tau, s };
    let stretch = vec![WeightTerm::plain(e2)];
    let overflow = !weights_finite(grid, &stretch);
    let value = pairing(omega, &u, omega, &stretch, route)?;
    let l2 = sobolev_norm(omega, 0.0);
    let x0 = norm_value(gevrey_norm(omega, tau, s, 0.0));
    let y0 = norm_value(gevrey_norm(omega, tau, s, 0.5 / s));
    out.push(report(
        "stretching_3d",
        vec![factor("pairing", value)],
        vec![
            factor("|w| |e w|^2 / alpha", l2 * x0 * x0 / alpha),
            factor("tau/alpha * |e w| * |L^(1/2s) e w|^2", tau / alpha * x0 * y0 * y0),
        ],
        meta(omega, tau, s, alpha),
        grid,
        route,
        overflow,
    ));

    let (x, y) = xy_norms(omega, tau, s)?;
    let (x, y) = (norm_value(x), norm_value(y));
    let grad = sup_gradient_canonical(&u)?;
    let h1 = sobolev_norm(omega, 1.0);
    let bundle = vec![
        factor("|grad u|_inf X^2", grad * x * x),
        factor("(1+tau) |w|_H1^2 X / alpha", (1.0 + tau) * h1 * h1 * x / alpha),
        factor("tau |grad u|_inf Y^2", tau * grad * y * y),
        factor("tau^2 |w|_H1 Y^2 / alpha", tau * tau * h1 * y * y / alpha),
        factor("tau^2 X Y^2 / alpha", tau * tau * x * y * y / alpha),
    ];
    for m in 1..=3 {
        let lm = Symbol::Directional { m, r: 1.0, tau, s };
        let conv = commutator(lm, lm);
        let lm2 = Symbol::Directional { m, r: 2.0, tau: 2.0 * tau, s };
        let str_m = vec![WeightTerm::plain(lm2)];
        let overflow = !weights_finite(grid, &str_m);
        let t1 = pairing(&u, omega, omega, &conv, route)?;
        let t2 = pairing(omega, &u, omega, &str_m, route)?;
        out.push(report(
            &format!("directional_m{m}"),
            vec![factor("convection", t1), factor("stretching", t2)],
            bundle.clone(),
            meta(omega, tau, s, alpha),
            grid,
            route,
            overflow,
        ));
    }
    Ok(out)
}

fn sgn(x: i64) -> i64 {
    x.signum()
}

/// Checks `|j + k| - |k| = j sgn(k) + 2 (j + k) sgn(j) [sgn(j + k) sgn(k) = -1]`
/// together with `|k| <= |j|` on the indicator region. `k = 0` is rejected.
pub fn sgn_identity_check(j: i64, k: i64) -> bool {
    if k == 0 {
        return false;
    }
    let flip = sgn(j + k) * sgn(k) == -1;
    let lhs = (j + k).abs() - k.abs();
    let rhs = j * sgn(k) + if flip { 2 * (j + k) * sgn(j) } else { 0 };
    lhs == rhs && (!flip || k.abs() <= j.abs())
}

/// Which family of pairings a survey draws.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurveyKind {
    Convection2d,
    Commutators2d,
    Pairings3d,
}

/// Order statistics of the ratios of one lemma tag.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurveySummary {
    pub lemma: String,
    pub count: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

/// Linear-interpolated quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Survey settings. `tau` defaults to `0.5 / band`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurveySpec {
    pub kind: SurveyKind,
    pub n: usize,
    pub band: usize,
    pub alpha: f64,
    pub tau: Option<f64>,
    pub s: f64,
    pub profile: ShellProfile,
    pub seeds: Vec<u64>,
}

/// All reports of one seed.
pub fn survey_seed(spec: &SurveySpec, seed: u64, route: Route) -> Result<Vec<PairingReport>> {
    let d = if spec.kind == SurveyKind::Pairings3d { 3 } else { 2 };
    let grid = Grid::new(d, spec.n)?;
    let tau = spec.tau.unwrap_or(0.5 / spec.band as f64);
    let rank = if d == 3 { Rank::Vector } else { Rank::Scalar };
    let w = random_divfree_field(&grid, &spec.profile, spec.band as f64, seed, rank)?;
    let mut reps = match spec.kind {
        SurveyKind::Convection2d => vec![convection_pairing_2d(&w, spec.alpha, tau, spec.s, route)?],
        SurveyKind::Commutators2d => {
            let u = velocity_from_vorticity(&w, spec.alpha)?;
            let (a, b) = t1_t2_pairings_2d(&u, spec.alpha, tau, route)?;
            vec![a, b]
        }
        SurveyKind::Pairings3d => pairings_3d(&w, tau, spec.s, spec.alpha, route)?,
    };
    for r in &mut reps {
        r.meta.seed = Some(seed);
    }
    Ok(reps)
}

/// Runs every seed in parallel and summarizes the ratios per lemma tag.
pub fn survey(spec: &SurveySpec) -> Result<(Vec<PairingReport>, Vec<SurveySummary>)> {
    let per_seed: Vec<Vec<PairingReport>> = spec
        .seeds
        .par_iter()
        .map(|&s| survey_seed(spec, s, Route::Pseudospectral))
        .collect::<Result<_>>()?;
    let reports: Vec<PairingReport> = per_seed.into_iter().flatten().collect();
    let mut tags: Vec<String> = Vec::new();
    for r in &reports {
        if !tags.contains(&r.lemma) {
            tags.push(r.lemma.clone());
        }
    }
    let summaries = tags
        .into_iter()
        .map(|tag| {
            let mut v: Vec<f64> = reports.iter().filter(|r| r.lemma == tag).map(|r| r.ratio).collect();
            v.sort_by(f64::total_cmp);
            SurveySummary {
                count: v.len(),
                min: quantile(&v, 0.0),
                q1: quantile(&v, 0.25),
                median: quantile(&v, 0.5),
                q3: quantile(&v, 0.75),
                max: quantile(&v, 1.0),
                lemma: tag,
            }
        })
        .collect();
    Ok((reports, summaries))
}

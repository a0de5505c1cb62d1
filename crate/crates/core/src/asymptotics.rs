//! Euclidean limits of Poisson wavelets and numerical probes of their
//! localization bounds.
//!
//! Small scales put the source at `r = e^{-a}` close to the sphere, so every
//! evaluation here goes through the harmonic continuation, which has no
//! cancellation as `r → 1`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::OffSpherePoint;
use crate::quadrature::{composite_integrate, gauss_legendre, weight_mass};
use crate::sphere::{gegenbauer_unchecked, gamma_int, SphereContext, ZonalPoint};
use crate::transform::REPORT_SCHEMA_VERSION;
use crate::wavelets::{Flavor, WaveletFamily};

/// Smallest scale accepted by the limit and localization sweeps.
pub const MIN_SCALE: f64 = 1e-3;

/// `g^m(s) = (m+1)! C_{m+1}^λ(1/√(1+s²)) / (Σ_n λ (1+s²)^{(m+n)/2})`.
pub fn euclidean_limit(ctx: &SphereContext, m: usize, s: f64) -> f64 {
    let q = 1.0 + s * s;
    let u = 1.0 / q.sqrt();
    let lambda = ctx.lambda();
    gamma_int(m as u32 + 2) * gegenbauer_unchecked(lambda, m + 1, u)
        / (ctx.sigma_n() * lambda * q.powf(0.5 * (m as f64 + f64::from(ctx.n()))))
}

/// Euclidean profile of a fixed order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EuclideanProfile {
    pub ctx: SphereContext,
    pub m: usize,
}

impl EuclideanProfile {
    pub fn eval(&self, s: f64) -> f64 {
        euclidean_limit(&self.ctx, self.m, s)
    }

    /// Polynomial decay degree `m + n + ((m + 1) mod 2)`.
    pub fn decay_degree(&self) -> usize {
        self.m + self.ctx.n() as usize + (self.m + 1) % 2
    }
}

/// Inverse stereographic projection, expressed as a colatitude.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Projection {
    /// `θ(s) = 2 arctan(s/2)`, whose pullback of `sin^{2λ}θ dθ` is `dν`.
    HalfTangent,
    /// `θ(s) = 2 arctan(s)`.
    UnitTangent,
}

impl Projection {
    pub fn colatitude(self, s: f64) -> f64 {
        match self {
            Projection::HalfTangent => 2.0 * (0.5 * s).atan(),
            Projection::UnitTangent => 2.0 * s.atan(),
        }
    }

    fn other(self) -> Self {
        match self {
            Projection::HalfTangent => Projection::UnitTangent,
            Projection::UnitTangent => Projection::HalfTangent,
        }
    }
}

pub fn stereographic_colatitude(s: f64) -> f64 {
    Projection::HalfTangent.colatitude(s)
}

/// Density of `dν`: `4 (4s)^{2λ} / (4 + s²)^{2λ+1}`.
pub fn dnu_density(ctx: &SphereContext, s: f64) -> f64 {
    let two_lambda = ctx.twice_lambda() as i32;
    4.0 * (4.0 * s).powi(two_lambda) / (4.0 + s * s).powi(two_lambda + 1)
}

/// Largest relative gap between `sin^{2λ}θ(s) θ'(s)` and the `dν` density.
pub fn pullback_discrepancy(ctx: &SphereContext, samples: &[f64]) -> f64 {
    let two_lambda = ctx.twice_lambda() as i32;
    samples
        .iter()
        .map(|&s| {
            let theta = stereographic_colatitude(s);
            let jacobian = 4.0 / (4.0 + s * s);
            let pulled = theta.sin().powi(two_lambda) * jacobian;
            let density = dnu_density(ctx, s);
            (pulled - density).abs() / density.abs().max(f64::MIN_POSITIVE)
        })
        .fold(0.0, f64::max)
}

fn check_scale(a: f64) -> Result<()> {
    if !(a >= MIN_SCALE) || !a.is_finite() {
        return Err(Error::Domain(format!(
            "scale {a} is below the supported limit {MIN_SCALE}"
        )));
    }
    Ok(())
}

/// `max_s |a^n g_a^m(cos θ(as)) - g^m(s)|`.
pub fn euclidean_sup_error(
    family: &WaveletFamily,
    a: f64,
    s_grid: &[f64],
    projection: Projection,
) -> Result<f64> {
    check_scale(a)?;
    let ctx = *family.ctx();
    let m = family.order();
    let w = family.at_scale(a)?;
    let an = a.powi(ctx.n() as i32);
    s_grid
        .par_iter()
        .map(|&s| {
            let theta = projection.colatitude(a * s);
            let x = OffSpherePoint::on_sphere(ZonalPoint::from_theta(theta));
            Ok((an * w.eval_continuation(&x)? - euclidean_limit(&ctx, m, s)).abs())
        })
        .try_reduce(|| 0.0, |x, y| Ok(x.max(y)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRun {
    pub projection: Projection,
    pub sup_errors: Vec<f64>,
    /// Sup errors divided by `max_s |g^m(s)|`.
    pub relative_errors: Vec<f64>,
    /// `log(e_i / e_{i+1}) / log(a_i / a_{i+1})`.
    pub orders: Vec<f64>,
    pub monotone: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EuclideanConvergenceReport {
    pub schema_version: u32,
    pub n: u32,
    pub m: usize,
    pub scales: Vec<f64>,
    pub profile_max: f64,
    pub primary: ConvergenceRun,
    /// Present when the primary convention failed to decrease monotonically.
    pub alternate: Option<ConvergenceRun>,
}

impl EuclideanConvergenceReport {
    pub fn converged(&self) -> bool {
        self.primary.monotone
    }
}

fn convergence_run(
    family: &WaveletFamily,
    scales: &[f64],
    s_grid: &[f64],
    projection: Projection,
    profile_max: f64,
) -> Result<ConvergenceRun> {
    let sup_errors = scales
        .iter()
        .map(|&a| euclidean_sup_error(family, a, s_grid, projection))
        .collect::<Result<Vec<_>>>()?;
    let orders = sup_errors
        .windows(2)
        .zip(scales.windows(2))
        .map(|(e, a)| (e[0] / e[1]).ln() / (a[0] / a[1]).ln())
        .collect();
    let monotone = sup_errors.windows(2).all(|e| e[1] < e[0]);
    Ok(ConvergenceRun {
        projection,
        relative_errors: sup_errors.iter().map(|e| e / profile_max).collect(),
        sup_errors,
        orders,
        monotone,
    })
}

/// Sup errors of the scaled wavelet against its Euclidean limit along a
/// decreasing list of scales, retrying with the other projection on failure.
pub fn euclidean_convergence_report(
    ctx: SphereContext,
    m: usize,
    scales: &[f64],
    s_grid: &[f64],
) -> Result<EuclideanConvergenceReport> {
    if scales.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Domain("scales must decrease strictly".into()));
    }
    let family = WaveletFamily::new(ctx, m, Flavor::Raw)?;
    let profile_max = s_grid
        .iter()
        .map(|&s| euclidean_limit(&ctx, m, s).abs())
        .fold(0.0, f64::max);
    let primary = convergence_run(&family, scales, s_grid, Projection::HalfTangent, profile_max)?;
    let alternate = if primary.monotone {
        None
    } else {
        Some(convergence_run(
            &family,
            scales,
            s_grid,
            primary.projection.other(),
            profile_max,
        )?)
    };
    Ok(EuclideanConvergenceReport {
        schema_version: REPORT_SCHEMA_VERSION,
        n: ctx.n(),
        m,
        scales: scales.to_vec(),
        profile_max,
        primary,
        alternate,
    })
}

/// Least-squares slope of `log |g^m(s)|` against `log s` on a log grid.
pub fn decay_slope(ctx: &SphereContext, m: usize, s_min: f64, s_max: f64, count: usize) -> f64 {
    let (lo, hi) = (s_min.ln(), s_max.ln());
    let points: Vec<(f64, f64)> = (0..count)
        .map(|i| {
            let x = lo + (hi - lo) * i as f64 / (count - 1) as f64;
            (x, euclidean_limit(ctx, m, x.exp()).abs().ln())
        })
        .collect();
    let k = count as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / k;
    let my = points.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Colatitude grid for localization sweeps: log-spaced on `[θ_min, θ_max]`.
pub fn log_angles(theta_min: f64, theta_max: f64, count: usize) -> Vec<f64> {
    let (lo, hi) = (theta_min.ln(), theta_max.ln());
    (0..count)
        .map(|i| (lo + (hi - lo) * i as f64 / (count - 1) as f64).exp())
        .collect()
}

/// Exponent in the pointwise localization bound `|g| <= c a^m e^{-a} θ^{-k}`.
pub fn localization_exponent(ctx: &SphereContext, m: usize) -> f64 {
    (2 * ((m + 1) / 2)) as f64 + 2.0 * ctx.lambda()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatisticSeries {
    pub exponent: f64,
    /// One value per scale.
    pub values: Vec<f64>,
    /// `max / min` over scales.
    pub spread: f64,
}

impl StatisticSeries {
    fn new(exponent: f64, values: Vec<f64>) -> Self {
        let max = values.iter().copied().fold(0.0, f64::max);
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        Self {
            exponent,
            values,
            spread: max / min,
        }
    }

    /// Values grow strictly as the scale decreases (scales listed increasing).
    pub fn grows_toward_small_scales(&self) -> bool {
        self.values.windows(2).all(|v| v[0] > v[1])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalizationReport {
    pub schema_version: u32,
    pub n: u32,
    pub m: usize,
    pub scales: Vec<f64>,
    /// Small scales on which the exponent probes are evaluated.
    pub probe_scales: Vec<f64>,
    /// `sup_θ |g_a^m(cos θ)| θ^k e^a / a^m`.
    pub pointwise: StatisticSeries,
    /// `k - 1/4` in place of `k`, with the sup restricted to the pole window
    /// `θ <= POLE_WINDOW · a`.
    pub pointwise_probe: StatisticSeries,
    /// `sup_{0 < θ <= π/a} |a^n g_a^m(cos aθ)| θ^{m+n} e^a`.
    pub scaled: StatisticSeries,
    /// `m + n + 1/4` in place of `m + n`.
    pub scaled_probe: StatisticSeries,
    /// At the smallest probe scale: `(Θ, sup_{0 < θ <= Θ})` of the `m + n + 1/4`
    /// statistic for ranges `Θ` doubling up to `π/a`.
    pub scaled_probe_ranges: Vec<(f64, f64)>,
    /// `sup_θ a^n |g_a^m(cos θ)| e^a`.
    pub peak: StatisticSeries,
    /// Colatitude maximizing statistic (iii), per scale.
    pub peak_location: Vec<f64>,
}

/// Width of the pole window, in units of the scale, for the pointwise probe.
pub const POLE_WINDOW: f64 = 4.0;

/// Grid sizes for [`localization_report`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalizationGrid {
    pub theta_min: f64,
    pub theta_count: usize,
}

impl Default for LocalizationGrid {
    fn default() -> Self {
        Self {
            theta_min: 1e-5,
            theta_count: 600,
        }
    }
}

pub fn localization_report(
    ctx: SphereContext,
    m: usize,
    scales: &[f64],
    probe_scales: &[f64],
    grid: LocalizationGrid,
) -> Result<LocalizationReport> {
    for list in [scales, probe_scales] {
        if list.is_empty() || list.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Domain("scales must be non-empty and increase strictly".into()));
        }
    }
    let family = WaveletFamily::new(ctx, m, Flavor::Raw)?;
    let k = localization_exponent(&ctx, m);
    let mn = (m + ctx.n() as usize) as f64;
    let thetas = log_angles(grid.theta_min, PI, grid.theta_count);

    struct Row {
        pointwise: [f64; 2],
        scaled: [f64; 2],
        peak: f64,
        peak_at: f64,
    }

    let sweep = |list: &[f64]| {
        list.par_iter()
            .map(|&a| {
                check_scale(a)?;
                let w = family.at_scale(a)?;
                let g = |theta: f64| {
                    w.eval_continuation(&OffSpherePoint::on_sphere(ZonalPoint::from_theta(theta)))
                        .map(f64::abs)
                };
                let ea = a.exp();
                let an = a.powi(ctx.n() as i32);
                let mut row = Row {
                    pointwise: [0.0; 2],
                    scaled: [0.0; 2],
                    peak: 0.0,
                    peak_at: 0.0,
                };
                for &theta in &thetas {
                    let v = g(theta)?;
                    let base = v * ea / a.powi(m as i32);
                    row.pointwise[0] = row.pointwise[0].max(base * theta.powf(k));
                    if theta <= POLE_WINDOW * a {
                        row.pointwise[1] = row.pointwise[1].max(base * theta.powf(k - 0.25));
                    }
                    if an * v * ea > row.peak {
                        row.peak = an * v * ea;
                        row.peak_at = theta;
                    }
                }
                for &u in &log_angles(grid.theta_min, PI / a, grid.theta_count) {
                    let v = an * g(a * u)? * ea;
                    row.scaled[0] = row.scaled[0].max(v * u.powf(mn));
                    row.scaled[1] = row.scaled[1].max(v * u.powf(mn + 0.25));
                }
                Ok(row)
            })
            .collect::<Result<Vec<_>>>()
    };
    let rows = sweep(scales)?;
    let probe_rows = sweep(probe_scales)?;

    let a0 = probe_scales[0];
    let w0 = family.at_scale(a0)?;
    let an0 = a0.powi(ctx.n() as i32);
    let top = PI / a0;
    let mut scaled_probe_ranges = Vec::new();
    let mut running = 0.0f64;
    let mut lower = grid.theta_min;
    for j in (0..8).rev() {
        let upper = top / f64::from(1 << j);
        for u in log_angles(lower, upper, grid.theta_count / 4) {
            let x = OffSpherePoint::on_sphere(ZonalPoint::from_theta(a0 * u));
            let v = an0 * w0.eval_continuation(&x)?.abs() * a0.exp();
            running = running.max(v * u.powf(mn + 0.25));
        }
        scaled_probe_ranges.push((upper, running));
        lower = upper;
    }

    let col = |rows: &[Row], f: &dyn Fn(&Row) -> f64| rows.iter().map(f).collect::<Vec<_>>();
    Ok(LocalizationReport {
        schema_version: REPORT_SCHEMA_VERSION,
        n: ctx.n(),
        m,
        scales: scales.to_vec(),
        probe_scales: probe_scales.to_vec(),
        pointwise: StatisticSeries::new(k, col(&rows, &|r| r.pointwise[0])),
        pointwise_probe: StatisticSeries::new(k - 0.25, col(&probe_rows, &|r| r.pointwise[1])),
        scaled: StatisticSeries::new(mn, col(&rows, &|r| r.scaled[0])),
        scaled_probe: StatisticSeries::new(mn + 0.25, col(&probe_rows, &|r| r.scaled[1])),
        scaled_probe_ranges,
        peak: StatisticSeries::new(0.0, col(&rows, &|r| r.peak)),
        peak_location: col(&rows, &|r| r.peak_at),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanIntegral {
    pub integral: f64,
    pub absolute: f64,
    /// `|integral| / absolute`.
    pub ratio: f64,
}

impl MeanIntegral {
    fn new(integral: f64, absolute: f64) -> Self {
        Self {
            integral,
            absolute,
            ratio: integral.abs() / absolute,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZeroMeanReport {
    pub schema_version: u32,
    pub n: u32,
    pub m: usize,
    /// `∫_0^∞ g^m(s) dν(s)`.
    pub dnu: MeanIntegral,
    /// `∫_{R^n} g^m(|ξ|) dξ`, up to the factor `Σ_{n-1}`.
    pub flat: MeanIntegral,
    /// Numeric `∫ dν` and its exact value.
    pub nu_mass: f64,
    pub nu_mass_exact: f64,
}

/// Mean of the Euclidean limit with respect to `dν` and to Lebesgue measure.
///
/// The `dν` integral is taken in the colatitude `θ = 2 arctan(s/2)`, where it
/// becomes `∫_0^π g^m(2 tan(θ/2)) sin^{2λ}θ dθ`; the flat one uses `s = tan φ`.
pub fn zero_mean_check(ctx: SphereContext, m: usize) -> Result<ZeroMeanReport> {
    if m == 0 || m > 4 {
        return Err(Error::Domain(format!("zero-mean check supports 1 <= m <= 4, got {m}")));
    }
    let rule = gauss_legendre(20)?;
    let two_lambda = ctx.twice_lambda() as i32;
    let panels = 128;
    let on = |end: f64| -> Vec<f64> { (0..=panels).map(|i| end * i as f64 / panels as f64).collect() };
    let theta_breaks = on(PI);
    let phi_breaks = on(0.5 * PI);

    let dnu_integrand = |theta: f64, abs: bool| {
        let g = euclidean_limit(&ctx, m, 2.0 * (0.5 * theta).tan());
        let g = if abs { g.abs() } else { g };
        g * theta.sin().powi(two_lambda)
    };
    let dnu = MeanIntegral::new(
        composite_integrate(&rule, &theta_breaks, |t| dnu_integrand(t, false)),
        composite_integrate(&rule, &theta_breaks, |t| dnu_integrand(t, true)),
    );

    let n = ctx.n() as i32;
    let flat_integrand = |phi: f64, abs: bool| {
        let (s, c) = (phi.tan(), phi.cos());
        let g = euclidean_limit(&ctx, m, s);
        let g = if abs { g.abs() } else { g };
        g * s.powi(n - 1) / (c * c)
    };
    let flat = MeanIntegral::new(
        composite_integrate(&rule, &phi_breaks, |p| flat_integrand(p, false)),
        composite_integrate(&rule, &phi_breaks, |p| flat_integrand(p, true)),
    );

    let nu_mass = composite_integrate(&rule, &phi_breaks, |phi| {
        let (s, c) = (phi.tan(), phi.cos());
        dnu_density(&ctx, s) / (c * c)
    });
    Ok(ZeroMeanReport {
        schema_version: REPORT_SCHEMA_VERSION,
        n: ctx.n(),
        m,
        dnu,
        flat,
        nu_mass,
        nu_mass_exact: weight_mass(ctx.lambda()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx(n: u32) -> SphereContext {
        SphereContext::new(n).unwrap()
    }

    #[test]
    fn limit_at_origin() {
        for n in 2..=5 {
            let c = ctx(n);
            let v = euclidean_limit(&c, 1, 0.0);
            assert!((v - 2.0 * f64::from(n) / c.sigma_n()).abs() < 1e-14 * v);
            for m in 1..=4 {
                let exact = gamma_int(m as u32 + 2)
                    * crate::sphere::gegenbauer_at_one(c.lambda(), m + 1)
                    / (c.sigma_n() * c.lambda());
                let v = euclidean_limit(&c, m, 0.0);
                assert!((v - exact).abs() <= 1e-14 * exact.abs());
            }
        }
    }

    #[test]
    fn colatitudes() {
        assert_eq!(stereographic_colatitude(0.0), 0.0);
        assert!((stereographic_colatitude(2.0) - PI / 2.0).abs() < 1e-15);
        assert!((Projection::UnitTangent.colatitude(1.0) - PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn pullback_identity() {
        let samples: Vec<f64> = (1..=100).map(|i| 0.05 * i as f64 * (1.0 + 0.01 * i as f64)).collect();
        for n in 2..=5 {
            assert!(pullback_discrepancy(&ctx(n), &samples) < 1e-12);
        }
    }

    #[test]
    fn decay_degrees() {
        for n in 2..=4 {
            for m in 1..=4 {
                let c = ctx(n);
                let slope = decay_slope(&c, m, 1e2, 1e4, 50);
                let degree = EuclideanProfile { ctx: c, m }.decay_degree() as f64;
                assert!((slope + degree).abs() < 0.05, "n={n} m={m} slope={slope}");
            }
        }
    }

    #[test]
    fn convergence_is_first_order() {
        let s: Vec<f64> = (0..=100).map(|i| 0.2 * i as f64).collect();
        let report = euclidean_convergence_report(ctx(2), 1, &[0.04, 0.02, 0.01], &s).unwrap();
        assert!(report.converged());
        assert!(report.alternate.is_none());
        for order in &report.primary.orders {
            assert!((order - 1.0).abs() < 0.1, "{order}");
        }
    }

    #[test]
    fn scale_floor_is_enforced() {
        let family = WaveletFamily::new(ctx(2), 1, Flavor::Raw).unwrap();
        assert!(euclidean_sup_error(&family, 1e-4, &[0.0], Projection::HalfTangent).is_err());
    }

    #[test]
    fn odd_order_localization_is_scale_stable() {
        let scales = log_angles(0.01, 1.0, 9);
        let report = localization_report(ctx(2), 1, &scales, &log_angles(1e-3, 0.05, 7), LocalizationGrid::default()).unwrap();
        assert!(report.pointwise.spread < 10.0, "{}", report.pointwise.spread);
        assert!(report.pointwise_probe.grows_toward_small_scales());
        assert!(report.peak.spread < 10.0);
        assert!(report.peak_location.iter().all(|&t| t < 1e-4));
    }

    #[test]
    fn even_order_pointwise_statistic_grows_like_inverse_scale() {
        // the pole of g_a^m for even m has order m + n, one above k
        let scales = log_angles(0.01, 1.0, 9);
        let report = localization_report(ctx(2), 2, &scales, &[0.01], LocalizationGrid::default()).unwrap();
        assert!(report.pointwise.spread > 10.0);
        let v = &report.pointwise.values;
        let slope = (v[0] / v[1]).ln() / (scales[1] / scales[0]).ln();
        assert!((slope - 1.0).abs() < 0.2, "{slope}");
    }

    #[test]
    fn statistics_scale_with_flavor() {
        // raw statistics times the flavor factor reproduce the normalized ones
        let c = ctx(3);
        let raw = WaveletFamily::new(c, 1, Flavor::Raw).unwrap().at_scale(0.2).unwrap();
        let bil = WaveletFamily::new(c, 1, Flavor::Bilinear).unwrap().at_scale(0.2).unwrap();
        let factor = Flavor::Bilinear.scale(&c, 1);
        for &theta in &[0.01, 0.3, 2.0] {
            let x = OffSpherePoint::on_sphere(ZonalPoint::from_theta(theta));
            let r = raw.eval_continuation(&x).unwrap();
            let b = bil.eval_continuation(&x).unwrap();
            assert!((b - factor * r).abs() <= 1e-14 * b.abs());
        }
    }

    #[test]
    fn zero_mean_integrals() {
        for (n, m) in [(2, 1), (4, 3), (3, 2)] {
            let report = zero_mean_check(ctx(n), m).unwrap();
            assert!((report.nu_mass - report.nu_mass_exact).abs() < 1e-10);
            assert!(report.flat.ratio < 1e-10, "{:?}", report.flat);
        }
    }

    #[test]
    fn measure_mass_self_check() {
        let report = zero_mean_check(ctx(3), 1).unwrap();
        assert!((report.nu_mass - PI / 2.0).abs() < 1e-10);
    }
}

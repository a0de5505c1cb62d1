//! Poisson wavelets `g_a^m` and their normalized variants.
//!
//! Four independent evaluation routes are provided:
//!
//! * [`PoissonWavelet::eval_series`]: Gegenbauer series
//!   `(1/Σ_n) Σ_l ((λ+l)/λ) (al)^m e^{-al} C_l^λ(t)` with a rigorous tail bound.
//! * [`PoissonWavelet::eval_closed`]: `(a^m/Σ_n) D_{λ+m+1} Σ_k R_k^m(r) t^k`,
//!   the polynomial part accumulated in double-double arithmetic.
//! * [`PoissonWavelet::eval_continuation`]: the finite multipole sum centred at
//!   the source, valid anywhere in `R^{n+1}` except the source.
//! * [`PoissonWavelet::eval_multipole_sum`]: `a^m (Ψ^m + Ψ^{m+1}/λ)` assembled
//!   from the multipole fields of [`crate::kernels`].

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coefficients::{build_alpha_table, build_r_table, AlphaTable, Dimension};
use crate::ddouble::DoubleDouble;
use crate::error::{Error, Result};
use crate::kernels::{multipole_field_closed, OffSpherePoint, SourcePoint, L_MAX_CAP};
use crate::series::TailModel;
use crate::sphere::{gamma_int, gegenbauer_table, SphereContext, ZonalPoint};

/// Normalization of a Poisson wavelet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Flavor {
    /// `g_a^m` as defined by the scale recursion.
    Raw,
    /// `G_a^m = 2^m Σ_n / √Γ(2m) · g_a^m`, admissible for the bilinear transform.
    Bilinear,
    /// `G̃_a^m = Σ_n / Γ(m) · g_a^m`, admissible for the linear transform.
    Linear,
}

impl Flavor {
    pub fn name(self) -> &'static str {
        match self {
            Flavor::Raw => "raw",
            Flavor::Bilinear => "bilinear",
            Flavor::Linear => "linear",
        }
    }

    /// Factor turning `g_a^m` into this flavor.
    pub fn scale(self, ctx: &SphereContext, m: usize) -> f64 {
        match self {
            Flavor::Raw => 1.0,
            Flavor::Bilinear => {
                2f64.powi(m as i32) * ctx.sigma_n() / gamma_int(2 * m as u32).sqrt()
            }
            Flavor::Linear => ctx.sigma_n() / gamma_int(m as u32),
        }
    }

    /// Coefficient of `K_l^λ` in the wavelet expansion as a function of `x = a l`.
    pub fn degree_multiplier(self, ctx: &SphereContext, m: usize, x: f64) -> f64 {
        match self {
            Flavor::Raw => x.powi(m as i32) * (-x).exp() / ctx.sigma_n(),
            Flavor::Bilinear => filter(FilterKind::Psi, m, x),
            Flavor::Linear => filter(FilterKind::Gamma, m, x),
        }
    }
}

/// Evaluation route, mostly useful for cross-checks and the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Representation {
    Series,
    Closed,
    Continuation,
    Multipole,
}

impl Representation {
    pub const ALL: [Representation; 4] = [
        Representation::Series,
        Representation::Closed,
        Representation::Continuation,
        Representation::Multipole,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Representation::Series => "series",
            Representation::Closed => "closed",
            Representation::Continuation => "continuation",
            Representation::Multipole => "multipole",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterKind {
    /// `ψ_m(t) = 2^m / √Γ(2m) · t^m e^{-t}`
    Psi,
    /// `γ_m(t) = t^m e^{-t} / Γ(m)`
    Gamma,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterProfile {
    pub kind: FilterKind,
    pub m: usize,
}

impl FilterProfile {
    pub fn eval(&self, t: f64) -> f64 {
        filter(self.kind, self.m, t)
    }
}

pub fn filter(kind: FilterKind, m: usize, t: f64) -> f64 {
    let core = t.powi(m as i32) * (-t).exp();
    match kind {
        FilterKind::Psi => 2f64.powi(m as i32) / gamma_int(2 * m as u32).sqrt() * core,
        FilterKind::Gamma => core / gamma_int(m as u32),
    }
}

/// Order, scale and normalization of one wavelet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveletSpec {
    pub ctx: SphereContext,
    pub m: usize,
    pub a: f64,
    pub flavor: Flavor,
}

impl WaveletSpec {
    pub fn new(ctx: SphereContext, m: usize, a: f64, flavor: Flavor) -> Result<Self> {
        if m == 0 {
            return Err(Error::Domain("wavelet order m must be at least 1".into()));
        }
        SourcePoint::from_scale(a)?;
        Ok(Self { ctx, m, a, flavor })
    }

    /// Source radius `r = e^{-a}`.
    pub fn r(&self) -> f64 {
        (-self.a).exp()
    }

    pub fn flavor_scale(&self) -> f64 {
        self.flavor.scale(&self.ctx, self.m)
    }
}

#[derive(Debug)]
struct OrderTables {
    alpha: AlphaTable,
    // continuation weights l! (α_l^m + α_l^{m+1} / λ), l = 0..=m+1
    continuation: Vec<f64>,
    // closed-form rows: parity and split coefficients (hi, lo) per j
    closed: Vec<(usize, Vec<(f64, f64)>)>,
}

/// Tables for a fixed dimension, order and flavor, shared by every scale.
#[derive(Debug, Clone)]
pub struct WaveletFamily {
    ctx: SphereContext,
    m: usize,
    flavor: Flavor,
    tables: Arc<OrderTables>,
}

impl WaveletFamily {
    pub fn new(ctx: SphereContext, m: usize, flavor: Flavor) -> Result<Self> {
        if m == 0 {
            return Err(Error::Domain("wavelet order m must be at least 1".into()));
        }
        let alpha = build_alpha_table(m + 1);
        let lambda = ctx.lambda();
        let mut factorial = 1.0;
        let continuation = (0..=m + 1)
            .map(|l| {
                if l > 0 {
                    factorial *= l as f64;
                }
                factorial * (alpha.get_f64(m, l) + alpha.get_f64(m + 1, l) / lambda)
            })
            .collect();
        let table = build_r_table(m, Dimension::Fixed(ctx.n()))?;
        let split = table.split_at(ctx.n());
        let closed = table
            .rows
            .iter()
            .zip(split)
            .map(|(row, coeffs)| (row.parity, coeffs))
            .collect();
        Ok(Self {
            ctx,
            m,
            flavor,
            tables: Arc::new(OrderTables {
                alpha,
                continuation,
                closed,
            }),
        })
    }

    pub fn ctx(&self) -> &SphereContext {
        &self.ctx
    }

    pub fn order(&self) -> usize {
        self.m
    }

    pub fn flavor(&self) -> Flavor {
        self.flavor
    }

    pub fn at_scale(&self, a: f64) -> Result<PoissonWavelet> {
        let spec = WaveletSpec::new(self.ctx, self.m, a, self.flavor)?;
        Ok(PoissonWavelet {
            family: self.clone(),
            spec,
        })
    }

    /// Same tables, different normalization.
    pub fn with_flavor(&self, flavor: Flavor) -> Self {
        Self {
            flavor,
            ..self.clone()
        }
    }

    /// Raw closed form `(a^m/Σ_n) D_{λ+m+1}(r, t) Σ_k R_k^m(r) t^k` with `r`
    /// left free; `a` only enters the prefactor.
    ///
    /// With `r` free, `a r ∂_r` of this expression is the order-`m + 1` one.
    pub fn closed_free_r(&self, a: f64, r: f64, p: impl Into<ZonalPoint>) -> Result<f64> {
        let r = SourcePoint::new(r)?.r();
        Ok(self.closed_raw(a, r, p.into()))
    }

    fn closed_raw(&self, a: f64, r: f64, p: ZonalPoint) -> f64 {
        let lambda = self.ctx.lambda();
        let t = DoubleDouble::ONE - DoubleDouble::from(p.one_minus_t);
        let r_dd = DoubleDouble::from(r);
        let r_sq = r_dd * r_dd;

        let mut poly = DoubleDouble::ZERO;
        let mut t_pow = DoubleDouble::ONE;
        for (parity, coeffs) in &self.tables.closed {
            let mut row = DoubleDouble::ZERO;
            let mut r_pow = if *parity == 1 { r_dd } else { DoubleDouble::ONE };
            for &(hi, lo) in coeffs {
                row = row + DoubleDouble::new(hi, lo) * r_pow;
                r_pow = r_pow * r_sq;
            }
            poly = poly + row * t_pow;
            t_pow = t_pow * t;
        }

        let d = 1.0 - r;
        let base = d * d + 2.0 * r * p.one_minus_t;
        let denom = base.powf(lambda + self.m as f64 + 1.0);
        a.powi(self.m as i32) / self.ctx.sigma_n() * r / denom * poly.to_f64()
    }
}

/// A Poisson wavelet at a fixed scale, ready for evaluation.
///
/// Evaluators are `&self` and the tables are shared immutably, so one value can
/// be used from any number of threads.
#[derive(Debug, Clone)]
pub struct PoissonWavelet {
    family: WaveletFamily,
    spec: WaveletSpec,
}

impl PoissonWavelet {
    pub fn new(spec: WaveletSpec) -> Result<Self> {
        WaveletFamily::new(spec.ctx, spec.m, spec.flavor)?.at_scale(spec.a)
    }

    pub fn spec(&self) -> &WaveletSpec {
        &self.spec
    }

    pub fn family(&self) -> &WaveletFamily {
        &self.family
    }

    fn scale(&self) -> f64 {
        self.spec.flavor_scale()
    }

    /// Production evaluator (closed form).
    pub fn eval(&self, p: impl Into<ZonalPoint>) -> f64 {
        self.eval_closed(p)
    }

    pub fn eval_closed(&self, p: impl Into<ZonalPoint>) -> f64 {
        let p = p.into();
        self.scale() * self.family.closed_raw(self.spec.a, self.spec.r(), p)
    }

    fn series_tail(&self) -> TailModel {
        TailModel {
            r: self.spec.r(),
            lambda: self.spec.ctx.lambda(),
            degree_power: self.spec.m as i32,
            kernel_power: 1,
            scale: self.scale() * self.spec.a.powi(self.spec.m as i32) / self.spec.ctx.sigma_n(),
        }
    }

    /// Gegenbauer series summed until the neglected tail is provably below `tol`.
    pub fn eval_series(&self, p: impl Into<ZonalPoint>, tol: f64) -> Result<f64> {
        let t = crate::sphere::clamp_cosine(p.into().t)?;
        let lambda = self.spec.ctx.lambda();
        let a = self.spec.a;
        let m = self.spec.m as i32;
        let tail = self.series_tail();
        let prefactor = self.scale() / self.spec.ctx.sigma_n();

        let mut c_prev = 1.0;
        let mut c_cur = 2.0 * lambda * t;
        let mut c_one = 2.0 * lambda;
        let mut sum = 0.0;
        // the l = 0 term vanishes since (a·0)^m = 0
        for l in 1..=L_MAX_CAP {
            if l >= 2 {
                let lf = l as f64;
                let next =
                    (2.0 * (lf + lambda - 1.0) * t * c_cur - (lf + 2.0 * lambda - 2.0) * c_prev) / lf;
                c_prev = c_cur;
                c_cur = next;
                c_one *= (lf - 1.0 + 2.0 * lambda) / lf;
            }
            let x = a * l as f64;
            sum += (lambda + l as f64) / lambda * x.powi(m) * (-x).exp() * c_cur;
            if tail.tail_after(l, c_one) <= tol {
                return Ok(prefactor * sum);
            }
        }
        Err(Error::Truncation {
            l_max: L_MAX_CAP,
            tail_bound: tail.tail_after(L_MAX_CAP, c_one),
            tol,
            suggested_l_max: L_MAX_CAP,
        })
    }

    /// Series with an absolute tolerance of `rel` times the peak value `|g(1)|`.
    pub fn eval_series_rel(&self, p: impl Into<ZonalPoint>, rel: f64) -> Result<f64> {
        let peak = self
            .eval_continuation(&OffSpherePoint::on_sphere(ZonalPoint::from_theta(0.0)))?
            .abs();
        self.eval_series(p, rel * peak)
    }

    /// Harmonic continuation: finite sum of multipoles located at the source.
    pub fn eval_continuation(&self, x: &OffSpherePoint) -> Result<f64> {
        let r = self.spec.r();
        let (dist, cos_chi) = x.relative_to(r)?;
        let lambda = self.spec.ctx.lambda();
        let m = self.spec.m;
        let c = gegenbauer_table(lambda, m + 1, cos_chi);
        let ratio = r / dist;
        let mut sum = 0.0;
        let mut ratio_pow = 1.0;
        for (w, c_l) in self.family.tables.continuation.iter().zip(&c) {
            sum += w * ratio_pow * c_l;
            ratio_pow *= ratio;
        }
        let prefactor = self.spec.a.powi(m as i32) / self.spec.ctx.sigma_n();
        Ok(self.scale() * prefactor * sum * dist.powf(-2.0 * lambda))
    }

    /// `a^m (Ψ^m + Ψ^{m+1} / λ)` on the sphere.
    pub fn eval_multipole_sum(&self, p: impl Into<ZonalPoint>) -> Result<f64> {
        let x = OffSpherePoint::on_sphere(p.into());
        let ctx = &self.spec.ctx;
        let m = self.spec.m;
        let r = self.spec.r();
        let alpha = &self.family.tables.alpha;
        let psi_m = multipole_field_closed(ctx, alpha, m, r, &x)?;
        let psi_next = multipole_field_closed(ctx, alpha, m + 1, r, &x)?;
        Ok(self.scale() * self.spec.a.powi(m as i32) * (psi_m + psi_next / ctx.lambda()))
    }

    pub fn eval_repr(&self, repr: Representation, p: impl Into<ZonalPoint>) -> Result<f64> {
        let p = p.into();
        match repr {
            Representation::Series => self.eval_series_rel(p, 1e-16),
            Representation::Closed => Ok(self.eval_closed(p)),
            Representation::Continuation => self.eval_continuation(&OffSpherePoint::on_sphere(p)),
            Representation::Multipole => self.eval_multipole_sum(p),
        }
    }
}

/// Every representation on a colatitude grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RepresentationTable {
    pub thetas: Vec<f64>,
    /// Indexed like [`Representation::ALL`].
    pub values: [Vec<f64>; 4],
    /// `max_θ |g|`, the normalization of the gaps.
    pub sup: f64,
    /// Largest pairwise gap at each θ, divided by `sup`.
    pub gaps: Vec<f64>,
}

impl RepresentationTable {
    pub fn max_gap(&self) -> f64 {
        self.gaps.iter().copied().fold(0.0, f64::max)
    }
}

/// Evaluates all four representations at each `θ` and records their spread.
pub fn compare_representations(w: &PoissonWavelet, thetas: &[f64]) -> Result<RepresentationTable> {
    let rows: Vec<[f64; 4]> = thetas
        .par_iter()
        .map(|&theta| {
            let p = ZonalPoint::from_theta(theta);
            let mut row = [0.0; 4];
            for (slot, repr) in row.iter_mut().zip(Representation::ALL) {
                *slot = w.eval_repr(repr, p)?;
            }
            Ok(row)
        })
        .collect::<Result<_>>()?;
    let sup = rows
        .iter()
        .flat_map(|r| r.iter().map(|v| v.abs()))
        .fold(0.0, f64::max);
    let gaps = rows
        .iter()
        .map(|r| {
            let hi = r.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lo = r.iter().copied().fold(f64::INFINITY, f64::min);
            if sup > 0.0 {
                (hi - lo) / sup
            } else {
                0.0
            }
        })
        .collect();
    let values = std::array::from_fn(|i| rows.iter().map(|r| r[i]).collect());
    Ok(RepresentationTable {
        thetas: thetas.to_vec(),
        values,
        sup,
        gaps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn wavelet(n: u32, m: usize, a: f64) -> PoissonWavelet {
        let ctx = SphereContext::new(n).unwrap();
        PoissonWavelet::new(WaveletSpec::new(ctx, m, a, Flavor::Raw).unwrap()).unwrap()
    }

    fn rel_close(x: f64, y: f64, scale: f64, tol: f64) -> bool {
        (x - y).abs() <= tol * scale
    }

    #[test]
    fn order_one_matches_explicit_display() {
        // m = 1: a r [(-(n+3) r + (n-1) r^3) + ((n+1) - (n-3) r^2) t] / (Σ (1 - 2rt + r^2)^{(n+3)/2})
        for n in 2..=5u32 {
            let w = wavelet(n, 1, 2.0);
            let ctx = w.spec().ctx;
            let r = (-2.0f64).exp();
            let nf = f64::from(n);
            for &t in &[1.0, 0.3, -0.7] {
                let explicit = 2.0 * r
                    * ((-(nf + 3.0) * r + (nf - 1.0) * r.powi(3))
                        + ((nf + 1.0) - (nf - 3.0) * r * r) * t)
                    / (ctx.sigma_n() * (1.0 - 2.0 * r * t + r * r).powf((nf + 3.0) / 2.0));
                assert!(rel_close(w.eval_closed(t), explicit, explicit.abs(), 1e-13));
            }
        }
    }

    #[test]
    fn representations_agree_on_examples() {
        let w = wavelet(2, 1, 1.0);
        let s = w.eval_series_rel(1.0, 1e-16).unwrap();
        assert!(rel_close(s, w.eval_closed(1.0), s.abs(), 1e-10));

        let w = wavelet(3, 2, 0.1);
        let p = ZonalPoint::from_theta(PI / 3.0);
        let peak = w.eval_closed(1.0);
        let s = w.eval_series_rel(p, 1e-16).unwrap();
        let c = w.eval_continuation(&OffSpherePoint::on_sphere(p)).unwrap();
        assert!(rel_close(s, c, peak, 1e-9));

        let w = wavelet(4, 3, 0.5);
        let peak = w.eval_closed(1.0);
        let s = w.eval_series_rel(-0.8, 1e-16).unwrap();
        assert!(rel_close(s, w.eval_closed(-0.8), peak, 1e-9));

        let w = wavelet(2, 1, 1.0);
        let s = w.eval_series_rel(0.5, 1e-16).unwrap();
        assert!(rel_close(s, w.eval_multipole_sum(0.5).unwrap(), s.abs(), 1e-10));

        let w = wavelet(5, 2, 0.3);
        let peak = w.eval_closed(1.0);
        assert!(rel_close(
            w.eval_multipole_sum(-1.0).unwrap(),
            w.eval_closed(-1.0),
            peak,
            1e-9
        ));
    }

    #[test]
    fn continuation_matches_expansion_around_origin() {
        // a^m/(Σ ρ^{2λ}) Σ l^m (r/ρ)^l K_l(cos θ) for ρ > r
        let w = wavelet(3, 2, 0.7);
        let ctx = w.spec().ctx;
        let (rho, theta) = (1.5f64, 0.4f64);
        let q = w.spec().r() / rho;
        let lambda = ctx.lambda();
        let c = gegenbauer_table(lambda, 400, theta.cos());
        let series: f64 = (0..=400)
            .map(|l| {
                (l as f64).powi(2) * q.powi(l as i32) * (lambda + l as f64) / lambda * c[l]
            })
            .sum::<f64>()
            * 0.7f64.powi(2)
            / (ctx.sigma_n() * rho.powf(2.0 * lambda));
        let x = OffSpherePoint::new(rho, theta).unwrap();
        let cont = w.eval_continuation(&x).unwrap();
        assert!(rel_close(cont, series, series.abs(), 1e-10), "{cont} vs {series}");
    }

    #[test]
    fn scale_derivative_lifts_the_order() {
        let ctx = SphereContext::new(3).unwrap();
        let h = 1e-6;
        for m in 1..=3 {
            let lower = WaveletFamily::new(ctx, m, Flavor::Raw).unwrap();
            let upper = WaveletFamily::new(ctx, m + 1, Flavor::Raw).unwrap();
            let a = 0.8;
            for &(r, t) in &[(0.4, 0.3), (0.7, -0.2), (0.5, 0.95)] {
                let fd = a * r
                    * (lower.closed_free_r(a, r + h, t).unwrap()
                        - lower.closed_free_r(a, r - h, t).unwrap())
                    / (2.0 * h);
                let lifted = upper.closed_free_r(a, r, t).unwrap();
                assert!(rel_close(fd, lifted, lifted.abs(), 1e-6), "m={m} {fd} {lifted}");
            }
        }
    }

    #[test]
    fn flavor_ratios_are_exact() {
        let ctx = SphereContext::new(3).unwrap();
        let raw = WaveletFamily::new(ctx, 2, Flavor::Raw).unwrap();
        let bil = raw.with_flavor(Flavor::Bilinear);
        let lin = raw.with_flavor(Flavor::Linear);
        let (a, t) = (0.4, 0.6);
        let g = raw.at_scale(a).unwrap().eval(t);
        let expected_bil = 4.0 * ctx.sigma_n() / gamma_int(4).sqrt();
        assert!(rel_close(bil.at_scale(a).unwrap().eval(t) / g, expected_bil, expected_bil, 1e-15));
        assert!(rel_close(lin.at_scale(a).unwrap().eval(t) / g, ctx.sigma_n(), ctx.sigma_n(), 1e-15));
    }

    #[test]
    fn large_scale_decays() {
        let w = wavelet(2, 1, 40.0);
        assert!(w.eval(0.3).abs() < 1e-15);
    }

    #[test]
    fn filters() {
        assert_eq!(filter(FilterKind::Psi, 3, 0.0), 0.0);
        assert_eq!(filter(FilterKind::Gamma, 3, 0.0), 0.0);
        let v = filter(FilterKind::Psi, 1, 1.0);
        assert!((v - 2.0 * (-1.0f64).exp()).abs() < 1e-15);
        let p = FilterProfile { kind: FilterKind::Gamma, m: 2 };
        assert!((p.eval(2.0) - 4.0 * (-2.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn representation_table_on_a_grid() {
        let thetas: Vec<f64> = (0..50).map(|j| PI * j as f64 / 49.0).collect();
        let table = compare_representations(&wavelet(2, 1, 1.0), &thetas).unwrap();
        assert!(table.max_gap() < 1e-9, "{}", table.max_gap());
        assert_eq!(table.gaps.len(), 50);
    }

    #[test]
    fn invalid_specs() {
        let ctx = SphereContext::new(2).unwrap();
        assert!(WaveletSpec::new(ctx, 0, 1.0, Flavor::Raw).is_err());
        assert!(WaveletSpec::new(ctx, 1, 0.0, Flavor::Raw).is_err());
        assert!(WaveletSpec::new(ctx, 1, -1.0, Flavor::Raw).is_err());
    }

    #[test]
    fn series_reports_unreachable_tolerance() {
        let w = wavelet(2, 1, 1e-5);
        assert!(matches!(w.eval_series(0.2, 1e-300), Err(Error::Truncation { .. })));
    }
}

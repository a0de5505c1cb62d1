//! Poisson kernel of the unit ball and the monopole/multipole fields
//! `Ψ^m = (r ∂_r)^m Ψ` of a source at `r ê` inside it.

use crate::coefficients::AlphaTable;
use crate::error::{Error, Result};
use crate::series::TailModel;
use crate::sphere::{SphereContext, ZonalPoint};

/// Series are never summed past this degree.
pub const L_MAX_CAP: usize = 1_000_000;

/// Closer than this to the source counts as hitting it.
const SINGULAR_DISTANCE: f64 = 1e-12;

/// Source at `r ê` on the polar axis, `0 < r < 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourcePoint(f64);

impl SourcePoint {
    pub fn new(r: f64) -> Result<Self> {
        if r > 0.0 && r < 1.0 {
            Ok(Self(r))
        } else {
            Err(Error::Domain(format!("source radius r = {r} must lie in (0, 1)")))
        }
    }

    /// Source radius `r = e^{-a}` of scale `a > 0`.
    pub fn from_scale(a: f64) -> Result<Self> {
        if !(a > 0.0) || !a.is_finite() {
            return Err(Error::Domain(format!("scale a = {a} must be positive")));
        }
        Self::new((-a).exp())
    }

    pub fn r(&self) -> f64 {
        self.0
    }
}

/// A point of `R^{n+1}` given by `ρ = |x|` and its colatitude with respect to `ê`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OffSpherePoint {
    rho: f64,
    point: ZonalPoint,
}

impl OffSpherePoint {
    pub fn new(rho: f64, theta: f64) -> Result<Self> {
        if !(rho > 0.0) || !rho.is_finite() {
            return Err(Error::Domain(format!("radius ρ = {rho} must be positive")));
        }
        if !(0.0..=std::f64::consts::PI).contains(&theta) {
            return Err(Error::Domain(format!("colatitude θ = {theta} outside [0, π]")));
        }
        Ok(Self {
            rho,
            point: ZonalPoint::from_theta(theta),
        })
    }

    /// Point of the unit sphere.
    pub fn on_sphere(point: impl Into<ZonalPoint>) -> Self {
        Self {
            rho: 1.0,
            point: point.into(),
        }
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn cos_theta(&self) -> f64 {
        self.point.t
    }

    /// `(|x - r ê|, cos χ)` where `χ` is the angle of `x - r ê` to the axis.
    pub(crate) fn relative_to(&self, r: f64) -> Result<(f64, f64)> {
        let drho = self.rho - r;
        let dist = (drho * drho + 2.0 * self.rho * r * self.point.one_minus_t).sqrt();
        if dist < SINGULAR_DISTANCE {
            return Err(Error::Singularity { distance: dist });
        }
        let cos_chi = ((drho - self.rho * self.point.one_minus_t) / dist).clamp(-1.0, 1.0);
        Ok((dist, cos_chi))
    }
}

// 1 - 2 r t + r^2, written without cancellation near r = t = 1
fn source_distance_sq(r: f64, p: ZonalPoint) -> f64 {
    let d = 1.0 - r;
    d * d + 2.0 * r * p.one_minus_t
}

fn check_point(p: ZonalPoint) -> Result<ZonalPoint> {
    crate::sphere::clamp_cosine(p.t)?;
    if p.t.abs() > 1.0 {
        Ok(ZonalPoint::from_cos(p.t.signum()))
    } else {
        Ok(p)
    }
}

/// `p_{rê}(t) = (1/Σ_n) (1 - r²) / (1 - 2 r t + r²)^{(n+1)/2}`.
pub fn poisson_kernel(ctx: &SphereContext, r: f64, t: impl Into<ZonalPoint>) -> Result<f64> {
    let r = SourcePoint::new(r)?.r();
    let p = check_point(t.into())?;
    let base = source_distance_sq(r, p);
    Ok((1.0 - r) * (1.0 + r) / (ctx.sigma_n() * base.powf(ctx.lambda() + 1.0)))
}

/// Monopole field on the sphere: `Ψ(t) = (1/Σ_n) (1 - 2 r t + r²)^{-λ}`.
pub fn monopole_field(ctx: &SphereContext, r: f64, t: impl Into<ZonalPoint>) -> Result<f64> {
    let r = SourcePoint::new(r)?.r();
    let p = check_point(t.into())?;
    Ok(source_distance_sq(r, p).powf(-ctx.lambda()) / ctx.sigma_n())
}

/// A truncated series together with a rigorous bound on the neglected tail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesValue {
    pub value: f64,
    pub tail_bound: f64,
    pub l_max: usize,
}

fn multipole_tail(ctx: &SphereContext, m: usize, r: f64) -> TailModel {
    TailModel {
        r,
        lambda: ctx.lambda(),
        degree_power: m as i32,
        kernel_power: 0,
        scale: 1.0 / ctx.sigma_n(),
    }
}

/// Smallest truncation degree for which the multipole series tail is below `tol`.
pub fn multipole_series_l_max(ctx: &SphereContext, m: usize, r: f64, tol: f64) -> Result<usize> {
    let r = SourcePoint::new(r)?.r();
    multipole_tail(ctx, m, r)
        .required_l_max(tol, L_MAX_CAP)
        .ok_or(Error::Truncation {
            l_max: L_MAX_CAP,
            tail_bound: f64::INFINITY,
            tol,
            suggested_l_max: L_MAX_CAP,
        })
}

/// `Ψ^m(t) = (1/Σ_n) Σ_{l <= l_max} l^m r^l C_l^λ(t)` with a bound on the rest.
pub fn multipole_field_series(
    ctx: &SphereContext,
    m: usize,
    r: f64,
    t: impl Into<ZonalPoint>,
    l_max: usize,
    tol: f64,
) -> Result<SeriesValue> {
    let r = SourcePoint::new(r)?.r();
    let t = check_point(t.into())?.t;
    let lambda = ctx.lambda();
    let tail = multipole_tail(ctx, m, r);

    let mut c_prev = 0.0;
    let mut c_cur = 1.0;
    let mut c_one = 1.0;
    let mut r_pow = 1.0;
    let mut sum = 0.0;
    for l in 0..=l_max {
        if l == 1 {
            c_prev = 1.0;
            c_cur = 2.0 * lambda * t;
        } else if l >= 2 {
            let lf = l as f64;
            let next = (2.0 * (lf + lambda - 1.0) * t * c_cur - (lf + 2.0 * lambda - 2.0) * c_prev) / lf;
            c_prev = c_cur;
            c_cur = next;
        }
        if l >= 1 {
            c_one *= (l as f64 - 1.0 + 2.0 * lambda) / l as f64;
        }
        let weight = if m == 0 { 1.0 } else { (l as f64).powi(m as i32) };
        sum += weight * r_pow * c_cur;
        r_pow *= r;
    }
    let tail_bound = tail.tail_after(l_max, c_one);
    if tail_bound > tol {
        let suggested_l_max = tail.required_l_max(tol, L_MAX_CAP).unwrap_or(L_MAX_CAP);
        return Err(Error::Truncation {
            l_max,
            tail_bound,
            tol,
            suggested_l_max,
        });
    }
    Ok(SeriesValue {
        value: sum / ctx.sigma_n(),
        tail_bound,
        l_max,
    })
}

/// Closed multipole field at any `x ≠ r ê`:
/// `Ψ^m(x) = (1/Σ_n) Σ_{l=0}^{m} α_l^m r^l l! C_l^λ(cos χ) / |x - r ê|^{l + 2λ}`.
pub fn multipole_field_closed(
    ctx: &SphereContext,
    alpha: &AlphaTable,
    m: usize,
    r: f64,
    x: &OffSpherePoint,
) -> Result<f64> {
    if m > alpha.max_order() {
        return Err(Error::Domain(format!(
            "α table holds orders up to {}, field needs {m}",
            alpha.max_order()
        )));
    }
    let r = SourcePoint::new(r)?.r();
    let (dist, cos_chi) = x.relative_to(r)?;
    let lambda = ctx.lambda();
    let c = crate::sphere::gegenbauer_table(lambda, m, cos_chi);
    let mut sum = 0.0;
    let mut factorial = 1.0;
    for (l, c_l) in c.iter().enumerate() {
        if l > 0 {
            factorial *= l as f64;
        }
        let a = alpha.get_f64(m, l);
        if a != 0.0 {
            sum += a * factorial * (r / dist).powi(l as i32) * c_l;
        }
    }
    Ok(sum * dist.powf(-2.0 * lambda) / ctx.sigma_n())
}

//! Sphere geometry and the Gegenbauer machinery everything else is built on.
//!
//! Points on `S^n` are handled through the cosine `t = cos θ` of their
//! colatitude. `λ = (n - 1) / 2` is kept exactly as the integer `2λ = n - 1`.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Values of `|t|` up to `1 + T_CLAMP` are treated as rounding noise and clamped.
const T_CLAMP: f64 = 1e-12;

/// Ambient parameters of the unit sphere `S^n ⊂ R^{n+1}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereContext {
    n: u32,
    lambda: f64,
    sigma_n: f64,
}

impl SphereContext {
    pub fn new(n: u32) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidContext(format!(
                "dimension n = {n} must be at least 2"
            )));
        }
        Ok(Self {
            n,
            lambda: f64::from(n - 1) / 2.0,
            sigma_n: unit_sphere_area(n),
        })
    }

    /// Sphere dimension `n`.
    pub fn n(&self) -> u32 {
        self.n
    }

    /// Gegenbauer index `λ = (n - 1) / 2`.
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// `2λ = n - 1`, exact.
    pub fn twice_lambda(&self) -> u32 {
        self.n - 1
    }

    /// Surface area `Σ_n` of `S^n`.
    pub fn sigma_n(&self) -> f64 {
        self.sigma_n
    }

    pub fn gegenbauer(&self, l: usize, t: f64) -> Result<f64> {
        gegenbauer(self.lambda, l, t)
    }

    pub fn reproducing_kernel(&self, l: usize, t: f64) -> Result<f64> {
        reproducing_kernel(self.lambda, l, t)
    }
}

/// A colatitude given by its cosine `t` together with `1 - t`.
///
/// Building it from the angle keeps `1 - t` accurate near the pole, which is
/// where every wavelet concentrates for small scales.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZonalPoint {
    pub t: f64,
    pub one_minus_t: f64,
}

impl ZonalPoint {
    pub fn from_theta(theta: f64) -> Self {
        let h = (0.5 * theta).sin();
        Self {
            t: theta.cos(),
            one_minus_t: 2.0 * h * h,
        }
    }

    pub fn from_cos(t: f64) -> Self {
        Self {
            t,
            one_minus_t: 1.0 - t,
        }
    }
}

impl From<f64> for ZonalPoint {
    fn from(t: f64) -> Self {
        Self::from_cos(t)
    }
}

/// `Γ(k / 2)` for a positive integer `k`, by exact product recurrence.
pub fn gamma_half(k: u32) -> f64 {
    assert!(k > 0, "gamma_half needs a positive argument");
    let (mut x, mut acc) = if k % 2 == 0 {
        (1.0, 1.0)
    } else {
        (0.5, PI.sqrt())
    };
    let target = f64::from(k) / 2.0;
    while x < target {
        acc *= x;
        x += 1.0;
    }
    acc
}

/// `Γ(k)` for a positive integer `k`.
pub fn gamma_int(k: u32) -> f64 {
    gamma_half(2 * k)
}

/// Surface area of the unit sphere `S^d` for any `d >= 0` (`Σ_0 = 2`).
pub fn unit_sphere_area(d: u32) -> f64 {
    // 2 π^{(d+1)/2} / Γ((d+1)/2)
    2.0 * PI.powf(f64::from(d + 1) / 2.0) / gamma_half(d + 1)
}

/// `Σ_n = 2 π^{λ+1} / Γ(λ+1)`.
pub fn sphere_area(n: u32) -> Result<f64> {
    SphereContext::new(n).map(|ctx| ctx.sigma_n())
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidContext(format!(
            "Gegenbauer order λ = {lambda} must be positive"
        )));
    }
    Ok(())
}

/// Clamp a cosine that overshoots `[-1, 1]` by rounding noise only.
pub fn clamp_cosine(t: f64) -> Result<f64> {
    if t.abs() <= 1.0 {
        Ok(t)
    } else if t.abs() - 1.0 <= T_CLAMP {
        Ok(t.signum())
    } else {
        Err(Error::Domain(format!("cosine t = {t} lies outside [-1, 1]")))
    }
}

/// Gegenbauer polynomial `C_l^λ(t)` via the three-term recurrence
/// `l C_l = 2(l + λ - 1) t C_{l-1} - (l + 2λ - 2) C_{l-2}`.
pub fn gegenbauer(lambda: f64, l: usize, t: f64) -> Result<f64> {
    check_lambda(lambda)?;
    let t = clamp_cosine(t)?;
    Ok(gegenbauer_unchecked(lambda, l, t))
}

pub(crate) fn gegenbauer_unchecked(lambda: f64, l: usize, t: f64) -> f64 {
    let mut prev = 1.0;
    if l == 0 {
        return prev;
    }
    let mut cur = 2.0 * lambda * t;
    for k in 2..=l {
        let kf = k as f64;
        let next = (2.0 * (kf + lambda - 1.0) * t * cur - (kf + 2.0 * lambda - 2.0) * prev) / kf;
        prev = cur;
        cur = next;
    }
    cur
}

/// All of `C_0^λ(t), ..., C_{l_max}^λ(t)`.
pub fn gegenbauer_all(lambda: f64, l_max: usize, t: f64) -> Result<Vec<f64>> {
    check_lambda(lambda)?;
    let t = clamp_cosine(t)?;
    Ok(gegenbauer_table(lambda, l_max, t))
}

pub(crate) fn gegenbauer_table(lambda: f64, l_max: usize, t: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(l_max + 1);
    out.push(1.0);
    if l_max >= 1 {
        out.push(2.0 * lambda * t);
    }
    for k in 2..=l_max {
        let kf = k as f64;
        let next = (2.0 * (kf + lambda - 1.0) * t * out[k - 1]
            - (kf + 2.0 * lambda - 2.0) * out[k - 2])
            / kf;
        out.push(next);
    }
    out
}

/// `C_l^λ(1) = Γ(l + 2λ) / (Γ(2λ) l!)`, the maximum of `|C_l^λ|` on `[-1, 1]`.
pub fn gegenbauer_at_one(lambda: f64, l: usize) -> f64 {
    (1..=l).fold(1.0, |acc, k| {
        let kf = k as f64;
        acc * (kf - 1.0 + 2.0 * lambda) / kf
    })
}

/// `∫ (C_l^λ)^2 (1 - t^2)^{λ - 1/2} dt = π 2^{1-2λ} Γ(l + 2λ) / (l! (l + λ) Γ(λ)^2)`.
pub fn gegenbauer_norm_sq(lambda: f64, l: usize) -> f64 {
    let twice = (2.0 * lambda).round() as u32;
    let gamma_lambda = gamma_half(twice);
    let gamma_2lambda = gamma_int(twice);
    PI * 2f64.powf(1.0 - 2.0 * lambda) * gamma_2lambda * gegenbauer_at_one(lambda, l)
        / ((l as f64 + lambda) * gamma_lambda * gamma_lambda)
}

/// Reproducing kernel of `H_l`: `K_l^λ = ((λ + l) / λ) C_l^λ`.
pub fn reproducing_kernel(lambda: f64, l: usize, t: f64) -> Result<f64> {
    Ok((lambda + l as f64) / lambda * gegenbauer(lambda, l, t)?)
}

/// Number of linearly independent hyperspherical harmonics of degree `l` on `S^n`:
/// `(n + 2l - 1)(n + l - 2)! / ((n - 1)! l!)`.
pub fn harmonic_dimension(n: u32, l: u32) -> Result<u128> {
    if n < 2 {
        return Err(Error::InvalidContext(format!(
            "dimension n = {n} must be at least 2"
        )));
    }
    // (n + l - 2)! / ((n - 2)! l!) = binom(n + l - 2, l); the remaining (n - 1) divides exactly.
    let top = u128::from(n) + u128::from(l) - 2;
    let mut binom: u128 = 1;
    for i in 1..=u128::from(l) {
        binom = binom
            .checked_mul(top - u128::from(l) + i)
            .ok_or(Error::Overflow("harmonic dimension"))?
            / i;
    }
    let numerator = binom
        .checked_mul(u128::from(n) + 2 * u128::from(l) - 1)
        .ok_or(Error::Overflow("harmonic dimension"))?;
    Ok(numerator / u128::from(n - 1))
}

#[cfg(test)]
mod tests {
    use super::*;

    use num_bigint::BigInt;
    use num_rational::BigRational;
    use num_traits::ToPrimitive;

    // Explicit alternating sum in exact rational arithmetic, λ = twice_lambda / 2:
    // Γ(l - k + λ) / Γ(λ) is the rising factorial (λ)_{l-k}.
    fn gegenbauer_explicit(twice_lambda: i64, l: usize, t: BigRational) -> f64 {
        let lambda = BigRational::new(BigInt::from(twice_lambda), BigInt::from(2));
        let one = BigRational::from_integer(BigInt::from(1));
        let two_t = &t + &t;
        let mut sum = BigRational::from_integer(BigInt::from(0));
        for k in 0..=l / 2 {
            let mut rising = one.clone();
            for i in 0..(l - k) {
                rising *= &lambda + BigRational::from_integer(BigInt::from(i));
            }
            let mut den = BigInt::from(1);
            for i in 1..=k {
                den *= BigInt::from(i);
            }
            for i in 1..=(l - 2 * k) {
                den *= BigInt::from(i);
            }
            let mut term = rising / BigRational::from_integer(den);
            for _ in 0..(l - 2 * k) {
                term *= &two_t;
            }
            if k % 2 == 1 {
                term = -term;
            }
            sum += term;
        }
        sum.to_f64().unwrap()
    }

    #[test]
    fn small_degree_values() {
        assert_eq!(gegenbauer(1.0, 0, 0.3).unwrap(), 1.0);
        assert!((gegenbauer(1.0, 1, 0.5).unwrap() - 1.0).abs() < 1e-15);
        assert!((gegenbauer(1.0, 2, 1.0).unwrap() - 3.0).abs() < 1e-15);
    }

    #[test]
    fn kernel_values() {
        assert!((reproducing_kernel(1.0, 0, 0.7).unwrap() - 1.0).abs() < 1e-15);
        assert!((reproducing_kernel(0.5, 1, 1.0).unwrap() - 3.0).abs() < 1e-14);
        assert!((reproducing_kernel(1.0, 2, 1.0).unwrap() - 9.0).abs() < 1e-14);
    }

    #[test]
    fn recurrence_matches_explicit_sum() {
        for twice in 1..=4i64 {
            let lambda = twice as f64 / 2.0;
            for l in 0..=20 {
                for i in 0..=40i64 {
                    let t = -1.0 + i as f64 / 20.0;
                    let t_exact = BigRational::new(BigInt::from(i - 20), BigInt::from(20));
                    let rec = gegenbauer(lambda, l, t).unwrap();
                    let exp = gegenbauer_explicit(twice, l, t_exact);
                    let scale = gegenbauer_at_one(lambda, l);
                    assert!(
                        (rec - exp).abs() <= 1e-10 * scale,
                        "λ={lambda} l={l} t={t}: {rec} vs {exp}"
                    );
                }
            }
        }
    }

    #[test]
    fn generating_function_partial_sums() {
        for &lambda in &[0.5, 1.0, 2.0] {
            for &r in &[0.1f64, 0.5, 0.9] {
                // tail <= Σ_{l>L} C_l(1) r^l, bounded geometrically once ratio < 1
                let l_max = 400;
                for i in 0..=20 {
                    let t = -1.0 + i as f64 / 10.0;
                    let c = gegenbauer_all(lambda, l_max, t).unwrap();
                    let s: f64 = c.iter().enumerate().map(|(l, v)| v * r.powi(l as i32)).sum();
                    let exact = (1.0 - 2.0 * t * r + r * r).powf(-lambda);
                    let tail = gegenbauer_at_one(lambda, l_max + 1) * r.powi(l_max as i32 + 1)
                        / (1.0 - r)
                        * 2.0;
                    assert!((s - exact).abs() <= tail + 1e-12 * exact.abs());
                }
            }
        }
    }

    #[test]
    fn clamps_rounding_noise_only() {
        assert!(gegenbauer(1.0, 3, 1.0 + 1e-13).is_ok());
        assert!(matches!(gegenbauer(1.0, 3, 1.001), Err(Error::Domain(_))));
        assert!(matches!(
            gegenbauer(0.0, 3, 0.2),
            Err(Error::InvalidContext(_))
        ));
    }

    #[test]
    fn sphere_areas() {
        assert!((sphere_area(2).unwrap() - 4.0 * PI).abs() < 1e-13);
        assert!((sphere_area(3).unwrap() - 2.0 * PI * PI).abs() < 1e-13);
        assert!((sphere_area(4).unwrap() - 8.0 * PI * PI / 3.0).abs() < 1e-13);
        assert_eq!(unit_sphere_area(0), 2.0);
        assert!((unit_sphere_area(1) - 2.0 * PI).abs() < 1e-15);
        assert!(sphere_area(1).is_err());
    }

    #[test]
    fn harmonic_dimensions() {
        assert_eq!(harmonic_dimension(2, 0).unwrap(), 1);
        assert_eq!(harmonic_dimension(2, 2).unwrap(), 5);
        assert_eq!(harmonic_dimension(3, 1).unwrap(), 4);
        for l in 0..=50 {
            assert_eq!(harmonic_dimension(2, l).unwrap(), 2 * u128::from(l) + 1);
        }
        // S^3: (l + 1)^2
        assert_eq!(harmonic_dimension(3, 7).unwrap(), 64);
        assert!(matches!(
            harmonic_dimension(200, 100_000),
            Err(Error::Overflow(_))
        ));
    }

    #[test]
    fn gamma_half_values() {
        assert!((gamma_half(1) - PI.sqrt()).abs() < 1e-15);
        assert!((gamma_half(3) - PI.sqrt() / 2.0).abs() < 1e-15);
        assert_eq!(gamma_half(8), 6.0);
    }

    #[test]
    fn zonal_point_from_theta_is_accurate_near_pole() {
        let p = ZonalPoint::from_theta(1e-9);
        assert!((p.one_minus_t - 5e-19).abs() < 1e-30);
    }
}

//! Exact coefficient tables.
//!
//! * `α_l^m` expand the Euler operator: `(r ∂_r)^m = Σ_l α_l^m r^l ∂_r^l`.
//! * `a_j^{m,k}` are the coefficients of the polynomials `R_k^m(r)` in the
//!   closed form of the order-`m` wavelet. They are integer polynomials in the
//!   sphere dimension `n` and are produced by pushing the polynomials through
//!   `R ↦ (1 - (n + 2m) r²) R + (1 + r²) r R'` and
//!   `R ↦ (n - 1 + 2m) r R - 2 r² R'`.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{FromPrimitive, One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// `α_l^m` for `0 <= l <= m <= max_order`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlphaTable {
    max_order: usize,
    rows: Vec<Vec<BigInt>>,
}

impl AlphaTable {
    pub fn max_order(&self) -> usize {
        self.max_order
    }

    /// `α_l^m`, zero whenever `l > m`.
    pub fn get(&self, m: usize, l: usize) -> BigInt {
        assert!(m <= self.max_order, "order {m} beyond table");
        self.rows[m].get(l).cloned().unwrap_or_default()
    }

    pub fn get_f64(&self, m: usize, l: usize) -> f64 {
        self.get(m, l).to_f64().unwrap_or(f64::INFINITY)
    }

    pub fn row(&self, m: usize) -> &[BigInt] {
        &self.rows[m]
    }
}

pub fn build_alpha_table(max_order: usize) -> AlphaTable {
    let mut rows = vec![vec![BigInt::one()]];
    for m in 0..max_order {
        let prev = &rows[m];
        let next: Vec<BigInt> = (0..=m + 1)
            .map(|l| {
                let keep = prev.get(l).map(|a| a * BigInt::from(l)).unwrap_or_default();
                let shift = if l == 0 {
                    BigInt::zero()
                } else {
                    prev[l - 1].clone()
                };
                keep + shift
            })
            .collect();
        rows.push(next);
    }
    AlphaTable { max_order, rows }
}

/// Outcome of applying both sides of `(r ∂_r)^m = Σ α_l^m r^l ∂_r^l` to `r^p`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdentityReport {
    pub max_order: usize,
    pub max_power: usize,
    pub checked: usize,
    pub max_discrepancy: BigInt,
    /// `(m, p)` pairs whose two sides differ.
    pub failures: Vec<(usize, usize)>,
}

impl IdentityReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Both sides of the operator identity at one `(m, p)`: `(p^m, Σ_l α_l^m p!/(p-l)!)`.
pub fn operator_identity_sides(table: &AlphaTable, m: usize, p: usize) -> (BigInt, BigInt) {
    let lhs = num_traits::pow(BigInt::from(p), m);
    let mut rhs = BigInt::zero();
    let mut falling = BigInt::one();
    for l in 0..=m.min(p) {
        rhs += table.get(m, l) * &falling;
        falling *= BigInt::from(p - l);
    }
    (lhs, rhs)
}

pub fn operator_identity_check(max_order: usize) -> IdentityReport {
    let table = build_alpha_table(max_order);
    let mut report = IdentityReport {
        max_order,
        max_power: max_order,
        checked: 0,
        max_discrepancy: BigInt::zero(),
        failures: Vec::new(),
    };
    for m in 0..=max_order {
        for p in 0..=max_order {
            let (lhs, rhs) = operator_identity_sides(&table, m, p);
            let diff = (lhs - rhs).abs();
            if !diff.is_zero() {
                report.failures.push((m, p));
            }
            if diff > report.max_discrepancy {
                report.max_discrepancy = diff;
            }
            report.checked += 1;
        }
    }
    report
}

/// Polynomial in the dimension `n` with integer coefficients (ascending powers).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct IntPoly(Vec<BigInt>);

impl IntPoly {
    pub fn constant(c: i64) -> Self {
        Self(vec![BigInt::from(c)]).trimmed()
    }

    /// `c0 + c1 n`
    pub fn linear(c0: i64, c1: i64) -> Self {
        Self(vec![BigInt::from(c0), BigInt::from(c1)]).trimmed()
    }

    pub fn coefficients(&self) -> &[BigInt] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    fn trimmed(mut self) -> Self {
        while self.0.last().is_some_and(Zero::is_zero) {
            self.0.pop();
        }
        self
    }

    pub fn eval(&self, n: i64) -> BigInt {
        let n = BigInt::from(n);
        self.0
            .iter()
            .rev()
            .fold(BigInt::zero(), |acc, c| acc * &n + c)
    }

    fn add(&self, other: &Self) -> Self {
        let len = self.0.len().max(other.0.len());
        let out = (0..len)
            .map(|i| {
                self.0.get(i).cloned().unwrap_or_default() + other.0.get(i).cloned().unwrap_or_default()
            })
            .collect();
        Self(out).trimmed()
    }

    fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::default();
        }
        let mut out = vec![BigInt::zero(); self.0.len() + other.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in other.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self(out).trimmed()
    }

    fn scale(&self, c: i64) -> Self {
        Self(self.0.iter().map(|a| a * c).collect()).trimmed()
    }
}

impl fmt::Display for IntPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (p, c) in self.0.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let neg = c.is_negative();
            let mag = c.abs();
            if first {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if neg { "-" } else { "+" })?;
            }
            first = false;
            let mag_one = mag.is_one();
            match p {
                0 => write!(f, "{mag}")?,
                1 if mag_one => write!(f, "n")?,
                1 => write!(f, "{mag}n")?,
                _ if mag_one => write!(f, "n^{p}")?,
                _ => write!(f, "{mag}n^{p}")?,
            }
        }
        Ok(())
    }
}

// Polynomial in r whose coefficients are polynomials in n.
type RPoly = Vec<IntPoly>;

fn rpoly_trim(mut p: RPoly) -> RPoly {
    while p.last().is_some_and(IntPoly::is_zero) {
        p.pop();
    }
    p
}

fn rpoly_add(a: &RPoly, b: &RPoly) -> RPoly {
    let len = a.len().max(b.len());
    let zero = IntPoly::default();
    rpoly_trim(
        (0..len)
            .map(|i| a.get(i).unwrap_or(&zero).add(b.get(i).unwrap_or(&zero)))
            .collect(),
    )
}

// c · r^shift · p(r)
fn rpoly_shift_scale(p: &RPoly, shift: usize, c: &IntPoly) -> RPoly {
    let mut out = vec![IntPoly::default(); shift];
    out.extend(p.iter().map(|q| q.mul(c)));
    rpoly_trim(out)
}

// r · p'(r)
fn rpoly_euler(p: &RPoly) -> RPoly {
    rpoly_trim(
        p.iter()
            .enumerate()
            .map(|(i, q)| q.scale(i as i64))
            .collect(),
    )
}

/// Whether the table holds the dimension as a symbol or a fixed value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    Symbolic,
    Fixed(u32),
}

/// Coefficients of one `R_k^m(r) = Σ_j a_j r^{2j + parity}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RRow {
    pub k: usize,
    /// `(k - 1) mod 2`: exponent offset of the row.
    pub parity: usize,
    pub coeffs: Vec<IntPoly>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RTable {
    pub order: usize,
    pub dimension: Dimension,
    pub rows: Vec<RRow>,
}

impl RTable {
    /// `a_j^{m,k}`, zero outside the stored range.
    pub fn coefficient(&self, k: usize, j: usize) -> IntPoly {
        self.rows
            .get(k)
            .and_then(|row| row.coeffs.get(j))
            .cloned()
            .unwrap_or_default()
    }

    /// Numeric coefficients at dimension `n`, each split into a high and low `f64`
    /// so that `hi + lo` carries the exact integer to about 106 bits.
    pub fn split_at(&self, n: u32) -> Vec<Vec<(f64, f64)>> {
        self.rows
            .iter()
            .map(|row| {
                row.coeffs
                    .iter()
                    .map(|c| {
                        let v = c.eval(i64::from(n));
                        let hi = v.to_f64().unwrap_or(f64::INFINITY);
                        let lo = BigInt::from_f64(hi)
                            .map(|h| (v - h).to_f64().unwrap_or(0.0))
                            .unwrap_or(0.0);
                        (hi, lo)
                    })
                    .collect()
            })
            .collect()
    }

    /// Highest power of `r` with a nonzero coefficient in `R_k`.
    pub fn degree(&self, k: usize) -> Option<usize> {
        let row = self.rows.get(k)?;
        row.coeffs
            .iter()
            .rposition(|c| !c.is_zero())
            .map(|j| 2 * j + row.parity)
    }
}

fn row_parity(k: usize) -> usize {
    (k + 1) % 2
}

fn base_polys() -> Vec<RPoly> {
    // R_0^1 = -(n+3) r + (n-1) r^3,  R_1^1 = (n+1) - (n-3) r^2
    vec![
        rpoly_trim(vec![
            IntPoly::default(),
            IntPoly::linear(-3, -1),
            IntPoly::default(),
            IntPoly::linear(-1, 1),
        ]),
        rpoly_trim(vec![
            IntPoly::linear(1, 1),
            IntPoly::default(),
            IntPoly::linear(3, -1),
        ]),
    ]
}

// R^m_k (k = 0..=m) -> R^{m+1}_k (k = 0..=m+1)
fn lift(polys: &[RPoly], m: usize) -> Vec<RPoly> {
    let m = m as i64;
    let one = IntPoly::constant(1);
    let neg_b = IntPoly::linear(-2 * m, -1); // -(n + 2m)
    let c_coef = IntPoly::linear(2 * m - 1, 1); // n - 1 + 2m
    let neg_two = IntPoly::constant(-2);
    let mut out = Vec::with_capacity(polys.len() + 1);
    for k in 0..=polys.len() {
        let mut acc = RPoly::new();
        if let Some(rk) = polys.get(k) {
            let euler = rpoly_euler(rk);
            acc = rpoly_add(&acc, rk);
            acc = rpoly_add(&acc, &rpoly_shift_scale(rk, 2, &neg_b));
            acc = rpoly_add(&acc, &euler);
            acc = rpoly_add(&acc, &rpoly_shift_scale(&euler, 2, &one));
        }
        if k >= 1 {
            let prev = &polys[k - 1];
            let euler = rpoly_euler(prev);
            acc = rpoly_add(&acc, &rpoly_shift_scale(prev, 1, &c_coef));
            acc = rpoly_add(&acc, &rpoly_shift_scale(&euler, 1, &neg_two));
        }
        out.push(acc);
    }
    out
}

fn to_table(polys: &[RPoly], order: usize, dimension: Dimension) -> Result<RTable> {
    let mut rows = Vec::with_capacity(polys.len());
    for (k, p) in polys.iter().enumerate() {
        let parity = row_parity(k);
        let top = (2 * order + 1 - k) / 2;
        for (power, c) in p.iter().enumerate() {
            if !c.is_zero() && (power % 2 != parity || power > 2 * order + 1 - k) {
                return Err(Error::Numeric(format!(
                    "R_{k}^{order} has an unexpected r^{power} term"
                )));
            }
        }
        let coeffs = (0..=top)
            .map(|j| {
                let c = p.get(2 * j + parity).cloned().unwrap_or_default();
                match dimension {
                    Dimension::Symbolic => c,
                    Dimension::Fixed(n) => IntPoly(vec![c.eval(i64::from(n))]).trimmed(),
                }
            })
            .collect();
        rows.push(RRow { k, parity, coeffs });
    }
    Ok(RTable {
        order,
        dimension,
        rows,
    })
}

/// Tables for every order `1..=max_order`.
pub fn build_r_tables(max_order: usize, dimension: Dimension) -> Result<Vec<RTable>> {
    if max_order == 0 {
        return Err(Error::Domain("closed form starts at order m = 1".into()));
    }
    if let Dimension::Fixed(n) = dimension {
        if n < 2 {
            return Err(Error::InvalidContext(format!(
                "dimension n = {n} must be at least 2"
            )));
        }
    }
    let mut polys = base_polys();
    let mut tables = vec![to_table(&polys, 1, dimension)?];
    for m in 1..max_order {
        polys = lift(&polys, m);
        tables.push(to_table(&polys, m + 1, dimension)?);
    }
    Ok(tables)
}

pub fn build_r_table(order: usize, dimension: Dimension) -> Result<RTable> {
    let mut tables = build_r_tables(order, dimension)?;
    Ok(tables.pop().expect("at least one order"))
}

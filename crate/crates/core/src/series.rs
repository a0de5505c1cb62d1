//! A-priori tail bounds for Gegenbauer series with geometric decay.
//!
//! Every series in the crate has terms bounded by
//! `scale · l^p · ((λ + l)/λ)^q · r^l · C_l^λ(1)`. For large enough `l` the ratio
//! of consecutive bounds is below one and decreasing, so the tail past `L` is
//! dominated by a geometric series.

#[derive(Debug, Clone, Copy)]
pub(crate) struct TailModel {
    pub r: f64,
    pub lambda: f64,
    pub degree_power: i32,
    pub kernel_power: i32,
    pub scale: f64,
}

impl TailModel {
    fn weight(&self, l: usize) -> f64 {
        let lf = l as f64;
        let deg = if self.degree_power == 0 {
            1.0
        } else {
            lf.powi(self.degree_power)
        };
        self.scale * deg * ((self.lambda + lf) / self.lambda).powi(self.kernel_power)
    }

    /// Upper bound on `|term_l|` given `C_l^λ(1)`.
    pub fn term_bound(&self, l: usize, c_one: f64) -> f64 {
        self.weight(l) * self.r.powi(l as i32) * c_one
    }

    // sup_{j >= l} bound(j+1) / bound(j), for l >= 1
    fn ratio_bound(&self, l: usize) -> f64 {
        let lf = l.max(1) as f64;
        let deg = ((lf + 1.0) / lf).powi(self.degree_power);
        let ker = ((self.lambda + lf + 1.0) / (self.lambda + lf)).powi(self.kernel_power);
        let geg = ((lf + 2.0 * self.lambda) / (lf + 1.0)).max(1.0);
        deg * ker * geg * self.r
    }

    /// Bound on `Σ_{j > l} |term_j|` given `C_l^λ(1)`; infinite while the
    /// ratio bound is not yet below one.
    pub fn tail_after(&self, l: usize, c_one_l: f64) -> f64 {
        let next = l + 1;
        let q = self.ratio_bound(next);
        if q >= 1.0 {
            return f64::INFINITY;
        }
        let c_next = c_one_l * (l as f64 + 2.0 * self.lambda) / next as f64;
        self.term_bound(next, c_next) / (1.0 - q)
    }

    /// Smallest `L` whose tail bound is at most `tol`, capped at `cap`.
    pub fn required_l_max(&self, tol: f64, cap: usize) -> Option<usize> {
        let mut c_one = 1.0;
        for l in 0..=cap {
            if l > 0 {
                c_one *= (l as f64 - 1.0 + 2.0 * self.lambda) / l as f64;
            }
            if self.tail_after(l, c_one) <= tol {
                return Some(l);
            }
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere::gegenbauer_at_one;

    #[test]
    fn bound_dominates_actual_tail() {
        let model = TailModel {
            r: 0.8,
            lambda: 1.5,
            degree_power: 3,
            kernel_power: 1,
            scale: 1.0,
        };
        let l_max = model.required_l_max(1e-10, 100_000).unwrap();
        let actual: f64 = (l_max + 1..l_max + 2000)
            .map(|l| model.term_bound(l, gegenbauer_at_one(1.5, l)))
            .sum();
        assert!(actual <= 1e-10);
        assert!(actual > 0.0);
    }
}

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Field, Grid, Result};

const ADMISSIBILITY_TOL: f64 = 1e-12;

pub fn l2_norm(u: &Field, grid: &Grid) -> f64 {
    (grid.cell_volume() * u.iter().map(Complex64::norm_sqr).sum::<f64>()).sqrt()
}

/// Rectangle-rule `L^r` norm, `r = ∞` giving the max modulus.
///
/// Exponents below 2 are accepted as well; the inhomogeneous Strichartz
/// estimator needs the dual exponents `ρ' ∈ [1, 2]`.
pub fn lr_norm(u: &Field, r: f64, grid: &Grid) -> f64 {
    debug_assert!(r >= 1.0);
    if r.is_infinite() {
        return u.iter().map(|c| c.norm()).fold(0.0, f64::max);
    }
    if r == 2.0 {
        return l2_norm(u, grid);
    }
    let s: f64 = if r == 4.0 {
        u.iter().map(|c| c.norm_sqr() * c.norm_sqr()).sum()
    } else {
        let half = 0.5 * r;
        u.iter().map(|c| c.norm_sqr().powf(half)).sum()
    };
    (grid.cell_volume() * s).powf(1.0 / r)
}

/// `Re⟨u, v⟩_{L²}` with the rectangle rule.
pub fn re_inner(u: &Field, v: &Field, grid: &Grid) -> f64 {
    grid.cell_volume()
        * u.iter()
            .zip(v.iter())
            .map(|(a, b)| a.re * b.re + a.im * b.im)
            .sum::<f64>()
}

/// Exponents `(p, r)` with `2/p + d/r = d/2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdmissiblePair {
    pub p: f64,
    pub r: f64,
}

pub fn check_admissible(p: f64, r: f64, d: usize) -> bool {
    if !(p >= 2.0 && r >= 2.0) || d == 0 {
        return false;
    }
    if d == 2 && p == 2.0 && r.is_infinite() {
        return false;
    }
    if d > 2 && r > 2.0 * d as f64 / (d as f64 - 2.0) {
        return false;
    }
    let lhs = 2.0 / p + d as f64 / r;
    (lhs - d as f64 / 2.0).abs() <= ADMISSIBILITY_TOL
}

impl AdmissiblePair {
    pub fn new(p: f64, r: f64, d: usize) -> Result<Self> {
        if check_admissible(p, r, d) {
            Ok(Self { p, r })
        } else {
            Err(Error::Inadmissible { p, r, d })
        }
    }

    /// The pair with `r = α + 1`, i.e. `p = 4(α+1) / (d(α−1))`.
    pub fn for_exponent(alpha: f64, d: usize) -> Result<Self> {
        let r = alpha + 1.0;
        let p = 4.0 * (alpha + 1.0) / (d as f64 * (alpha - 1.0));
        Self::new(p, r, d)
    }

    /// Hölder conjugates `(p', r')`.
    pub fn conjugate(&self) -> (f64, f64) {
        (conjugate_exponent(self.p), conjugate_exponent(self.r))
    }
}

pub(crate) fn conjugate_exponent(p: f64) -> f64 {
    if p.is_infinite() {
        1.0
    } else if p == 1.0 {
        f64::INFINITY
    } else {
        p / (p - 1.0)
    }
}

/// Time series of `‖u(s)‖_{L²}` and `‖u(s)‖_{L^r}` for one fixed `r`.
///
/// Times are nondecreasing; a repeated time marks a jump, with the left
/// limit stored first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormSeries {
    pub r: f64,
    pub times: Vec<f64>,
    pub l2_values: Vec<f64>,
    pub lr_values: Vec<f64>,
}

impl NormSeries {
    pub fn new(r: f64) -> Self {
        Self {
            r,
            times: Vec::new(),
            l2_values: Vec::new(),
            lr_values: Vec::new(),
        }
    }

    pub fn push(&mut self, time: f64, l2: f64, lr: f64) {
        debug_assert!(self.times.last().is_none_or(|&t| t <= time));
        self.times.push(time);
        self.l2_values.push(l2);
        self.lr_values.push(lr);
    }

    pub fn push_field(&mut self, time: f64, u: &Field, grid: &Grid) {
        self.push(time, l2_norm(u, grid), lr_norm(u, self.r, grid));
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last_time(&self) -> Option<f64> {
        self.times.last().copied()
    }

    /// `Y`-norm evaluated at every stored time.
    pub fn y_values(&self, p: f64) -> Vec<f64> {
        let mut acc = YAccumulator::new(p);
        self.times
            .iter()
            .zip(self.l2_values.iter().zip(&self.lr_values))
            .map(|(&t, (&a, &b))| {
                acc.push(t, a, b);
                acc.value()
            })
            .collect()
    }

    /// `sup_s ‖u(s)‖_{L²}` over the whole series.
    pub fn sup_l2(&self) -> f64 {
        self.l2_values.iter().copied().fold(0.0, f64::max)
    }

    /// `(∫ ‖u(s)‖_{L^r}^p ds)^{1/p}` over the whole series, left-endpoint rule.
    pub fn lp_lr(&self, p: f64) -> f64 {
        let mut acc = YAccumulator::new(p);
        for i in 0..self.len() {
            acc.push(self.times[i], 0.0, self.lr_values[i]);
        }
        acc.integral_term()
    }
}

/// Running `sup_{s≤t}‖u(s)‖_{L²} + (∫₀ᵗ ‖u(s)‖_{L^r}^p ds)^{1/p}` with the
/// left-endpoint rule in time; for `p = ∞` the integral term is the running
/// max of the `L^r` values.
#[derive(Clone, Debug)]
pub struct YAccumulator {
    p: f64,
    sup_l2: f64,
    integral: f64,
    last: Option<(f64, f64)>,
}

impl YAccumulator {
    pub fn new(p: f64) -> Self {
        Self {
            p,
            sup_l2: 0.0,
            integral: 0.0,
            last: None,
        }
    }

    pub fn push(&mut self, time: f64, l2: f64, lr: f64) {
        if self.p.is_infinite() {
            self.integral = self.integral.max(lr);
        } else if let Some((t0, lr0)) = self.last {
            self.integral += lr0.powf(self.p) * (time - t0);
        }
        self.sup_l2 = self.sup_l2.max(l2);
        self.last = Some((time, lr));
    }

    /// Value at time `t ≥` the last pushed time, extending the last `L^r`
    /// sample over `[t_last, t]`.
    pub fn value_at(&self, t: f64) -> f64 {
        let extra = match self.last {
            Some((t0, lr0)) if !self.p.is_infinite() => lr0.powf(self.p) * (t - t0).max(0.0),
            _ => 0.0,
        };
        self.sup_l2 + self.integral_root(self.integral + extra)
    }

    pub fn value(&self) -> f64 {
        self.sup_l2 + self.integral_term()
    }

    pub fn sup_l2(&self) -> f64 {
        self.sup_l2
    }

    pub fn integral_term(&self) -> f64 {
        self.integral_root(self.integral)
    }

    fn integral_root(&self, integral: f64) -> f64 {
        if self.p.is_infinite() {
            integral
        } else {
            integral.powf(1.0 / self.p)
        }
    }
}

/// `‖u‖_{Y_t}` from a stored series.
pub fn y_norm(ns: &NormSeries, t: f64, p: f64) -> Result<f64> {
    let end = ns.last_time().unwrap_or(0.0);
    let start = ns.times.first().copied().unwrap_or(0.0);
    if ns.is_empty() || t > end || t < start {
        return Err(Error::OutOfRange { t, end });
    }
    let mut acc = YAccumulator::new(p);
    for i in 0..ns.len() {
        if ns.times[i] > t {
            break;
        }
        acc.push(ns.times[i], ns.l2_values[i], ns.lr_values[i]);
    }
    Ok(acc.value_at(t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::make_grid;
    use proptest::prelude::*;

    #[test]
    fn norms_of_simple_fields() {
        let g = make_grid(1, 64, 2.0 * std::f64::consts::PI).unwrap();
        assert_eq!(l2_norm(&Field::zeros(64), &g), 0.0);
        let one = Field::from_vec(vec![Complex64::new(1.0, 0.0); 64]);
        assert!((l2_norm(&one, &g) - (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-13);
        assert_eq!(lr_norm(&one, f64::INFINITY, &g), 1.0);
    }

    #[test]
    fn lr_norm_is_homogeneous() {
        let g = make_grid(1, 32, 5.0).unwrap();
        let u: Field = (0..32)
            .map(|i| Complex64::new((i as f64).sin(), 0.3 * i as f64))
            .collect();
        let two = u.scaled(Complex64::new(2.0, 0.0));
        assert!((lr_norm(&two, 4.0, &g) - 2.0 * lr_norm(&u, 4.0, &g)).abs() < 1e-12);
    }

    #[test]
    fn admissibility_examples() {
        assert!(check_admissible(8.0, 4.0, 1));
        assert!(!check_admissible(2.0, f64::INFINITY, 2));
        assert!(!check_admissible(4.0, 4.0, 1));
        assert!(check_admissible(4.0, f64::INFINITY, 1));
        assert!(check_admissible(f64::INFINITY, 2.0, 2));
    }

    #[test]
    fn exponent_pairing_on_alpha_grid() {
        for d in 1..=2 {
            let upper = 1.0 + 4.0 / d as f64;
            for i in 1..20 {
                let alpha = 1.0 + (upper - 1.0) * i as f64 / 20.0;
                let p = 4.0 * (alpha + 1.0) / (d as f64 * (alpha - 1.0));
                assert!(check_admissible(p, alpha + 1.0, d), "d={d} alpha={alpha}");
                assert!(!check_admissible(p * 1.01, alpha + 1.0, d));
                assert!(!check_admissible(p * 0.99, alpha + 1.0, d));
            }
        }
    }

    #[test]
    fn y_norm_closed_forms() {
        let mut zero = NormSeries::new(4.0);
        for i in 0..=10 {
            zero.push(i as f64 * 0.1, 0.0, 0.0);
        }
        assert_eq!(y_norm(&zero, 1.0, 8.0).unwrap(), 0.0);

        let (a, b, p) = (1.5, 0.7, 8.0);
        let mut constant = NormSeries::new(4.0);
        for i in 0..=10 {
            constant.push(i as f64 * 0.1, a, b);
        }
        for &t in &[0.0, 0.35, 1.0] {
            let y = y_norm(&constant, t, p).unwrap();
            assert!((y - (a + b * f64::powf(t, 1.0 / p))).abs() < 1e-12, "t={t}");
        }
        assert!(matches!(y_norm(&constant, 1.5, p), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn y_norm_three_sample_hand_sum() {
        let mut ns = NormSeries::new(4.0);
        ns.push(0.0, 1.0, 2.0);
        ns.push(0.5, 3.0, 1.0);
        ns.push(0.75, 2.0, 4.0);
        // left endpoint: 2^2·0.5 + 1^2·0.25 = 2.25, sup = 3
        let y = y_norm(&ns, 0.75, 2.0).unwrap();
        assert!((y - (3.0 + 1.5)).abs() < 1e-15);
        // extend the last sample to t = 0.75 from 0.5 only
        let y = y_norm(&ns, 0.6, 2.0).unwrap();
        assert!((y - (3.0 + (2.0f64 + 0.1).sqrt())).abs() < 1e-15);
    }

    fn series_from(values: &[(f64, f64)], dt: f64) -> NormSeries {
        let mut ns = NormSeries::new(4.0);
        for (i, &(a, b)) in values.iter().enumerate() {
            ns.push(i as f64 * dt, a, b);
        }
        ns
    }

    proptest! {
        #[test]
        fn y_norm_monotone_and_subadditive(
            xs in proptest::collection::vec((0.0f64..3.0, 0.0f64..3.0), 2..30),
            ys in proptest::collection::vec((0.0f64..3.0, 0.0f64..3.0), 30),
            p in 2.0f64..12.0,
        ) {
            let dt = 0.05;
            let a = series_from(&xs, dt);
            let end = a.last_time().unwrap();
            let mut prev = 0.0;
            for k in 0..=20 {
                let t = end * k as f64 / 20.0;
                let y = y_norm(&a, t, p).unwrap();
                prop_assert!(y + 1e-12 >= prev);
                prev = y;
            }
            // norms of a sum are bounded by the sum of norms when the series
            // come from the triangle inequality pointwise
            let b = series_from(&ys[..xs.len()], dt);
            let sum: Vec<(f64, f64)> = xs.iter().zip(&ys).map(|(x, y)| (x.0 + y.0, x.1 + y.1)).collect();
            let c = series_from(&sum, dt);
            let lhs = y_norm(&c, end, p).unwrap();
            let rhs = y_norm(&a, end, p).unwrap() + y_norm(&b, end, p).unwrap();
            prop_assert!(lhs <= rhs * (1.0 + 1e-12));
        }
    }
}

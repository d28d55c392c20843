//! Tree recursion on the (Δ-1)-ary tree, uniqueness classification and the
//! extremal marginals.
//!
//! Ratios are `r = Pr(spin 1)/Pr(spin 0)` at the root of a subtree. With the
//! weight convention β for 0-0 edges and γ for 1-1 edges, a vertex with Δ-1
//! children of ratio `r` has ratio `F(r) = λ((1 + γr)/(β + r))^(Δ-1)`.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SpinError};
use crate::params::SpinParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    #[serde(rename = "uniqueness")]
    Uniqueness,
    #[serde(rename = "non-uniqueness")]
    NonUniqueness,
    #[serde(rename = "critical-within-tol")]
    Critical,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::Uniqueness => "uniqueness",
            Regime::NonUniqueness => "non-uniqueness",
            Regime::Critical => "critical-within-tol",
        }
    }
}

/// Marginals of the two extremal measures on the (Δ-1)-ary tree (`q`) and
/// at the root of the Δ-regular tree (`p`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub q_minus: f64,
    pub q_plus: f64,
    pub r_minus: f64,
    pub r_plus: f64,
    pub p_minus: f64,
    pub p_plus: f64,
    pub regime: Regime,
    /// Unique fixed point of `F`.
    pub fixed_point: f64,
    /// `|F'|` at the fixed point.
    pub derivative: f64,
}

/// The map `F` for given parameters.
#[derive(Debug, Clone, Copy)]
pub struct TreeMap {
    beta: f64,
    gamma: f64,
    lambda: f64,
    d1: f64,
}

/// `ln(c + e^y)` without overflow for large `y`.
fn ln_c_plus_exp(c: f64, y: f64) -> f64 {
    if y > 0.0 {
        y + (c * (-y).exp()).ln_1p()
    } else if c == 0.0 {
        y
    } else {
        (c + y.exp()).ln()
    }
}

/// `ln(1 + c e^y)`.
fn ln_one_plus_c_exp(c: f64, y: f64) -> f64 {
    if c == 0.0 {
        0.0
    } else if y > 0.0 {
        y + (c + (-y).exp()).ln()
    } else {
        (c * y.exp()).ln_1p()
    }
}

impl TreeMap {
    pub fn new(params: &SpinParams) -> Result<TreeMap> {
        let delta = params.require_delta()?;
        Ok(TreeMap { beta: params.beta, gamma: params.gamma, lambda: params.lambda, d1: (delta - 1) as f64 })
    }

    pub fn eval(&self, r: f64) -> Result<f64> {
        if !(r >= 0.0) {
            return Err(SpinError::DomainError(format!("ratio must be >= 0, got {r}")));
        }
        if self.beta == 0.0 && r == 0.0 {
            return Err(SpinError::DomainError("beta = 0 and r = 0 make the map singular".into()));
        }
        if r.is_infinite() {
            return Ok(self.lambda * self.gamma.powf(self.d1));
        }
        Ok(self.lambda * ((1.0 + self.gamma * r) / (self.beta + r)).powf(self.d1))
    }

    pub fn derivative(&self, r: f64) -> Result<f64> {
        let f = self.eval(r)?;
        Ok(f * self.d1 * (self.beta * self.gamma - 1.0) / ((1.0 + self.gamma * r) * (self.beta + r)))
    }

    /// `ln F(e^y)`.
    fn ln_eval_exp(&self, y: f64) -> f64 {
        self.lambda.ln() + self.d1 * (ln_one_plus_c_exp(self.gamma, y) - ln_c_plus_exp(self.beta, y))
    }

    /// `|F'(x)|` written to stay finite at `x -> 0` and `x -> inf`.
    fn abs_derivative_at_fixed_point(&self, x: f64) -> f64 {
        self.d1 * (1.0 - self.beta * self.gamma).abs() * x / ((1.0 + self.gamma * x) * (self.beta + x))
    }
}

pub fn tree_map(params: &SpinParams, r: f64) -> Result<f64> {
    TreeMap::new(params)?.eval(r)
}

/// Bisection for a sign change from positive at `lo` to negative at `hi`.
fn bisect_decreasing(h: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if h(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Unique fixed point of `F` in log space, with the derivative magnitude there.
fn fixed_point(map: &TreeMap) -> Result<(f64, f64)> {
    let h = |y: f64| map.ln_eval_exp(y) - y;
    let (mut lo, mut hi) = (-1.0f64, 1.0f64);
    let mut guard = 0;
    while h(lo) <= 0.0 || h(hi) >= 0.0 {
        if h(lo) <= 0.0 {
            lo *= 2.0;
        }
        if h(hi) >= 0.0 {
            hi *= 2.0;
        }
        guard += 1;
        if guard > 12 {
            return Err(SpinError::NoConvergence("could not bracket the fixed point of the tree map".into()));
        }
    }
    let y = bisect_decreasing(h, lo, hi);
    let x = y.exp();
    Ok((x, map.abs_derivative_at_fixed_point(x)))
}

pub fn classify_uniqueness(params: &SpinParams) -> Result<Regime> {
    params.require_antiferro()?;
    let map = TreeMap::new(params)?;
    let (_, d) = fixed_point(&map)?;
    Ok(regime_of(d, params.tol))
}

fn regime_of(d: f64, tol: f64) -> Regime {
    if d > 1.0 + tol {
        Regime::NonUniqueness
    } else if d < 1.0 - tol {
        Regime::Uniqueness
    } else {
        Regime::Critical
    }
}

pub fn hardcore_lambda_c(delta: u32) -> f64 {
    let d = delta as i32;
    ((d - 1) as f64).powi(d - 1) / ((d - 2) as f64).powi(d)
}

/// Open interval of λ with non-uniqueness, or `None` when
/// `sqrt(βγ) >= (Δ-2)/Δ`.
///
/// The fixed point `x` determines λ monotonically through
/// `λ(x) = x((β+x)/(1+γx))^(Δ-1)`, and `|F'(x)| > 1` is the quadratic
/// condition `γx² + (1+βγ-(Δ-1)(1-βγ))x + β < 0`, so the endpoints are λ at
/// the two roots.
pub fn lambda_interval(beta: f64, gamma: f64, delta: u32) -> Result<Option<(f64, f64)>> {
    let params = SpinParams::new(beta, gamma, 1.0, delta)?;
    params.require_antiferro()?;
    let d1 = (delta - 1) as f64;
    let s = (beta * gamma).sqrt();
    if s >= (delta as f64 - 2.0) / delta as f64 {
        return Ok(None);
    }
    let b = 1.0 + beta * gamma - d1 * (1.0 - beta * gamma);
    let disc = (b * b - 4.0 * beta * gamma).max(0.0);
    let q = 0.5 * (-b + disc.sqrt());
    let x1 = beta / q;
    let lam = |x: f64| -> f64 {
        if x == 0.0 {
            return 0.0;
        }
        (x.ln() + d1 * ((beta + x).ln() - (1.0 + gamma * x).ln())).exp()
    };
    let lambda2 = if gamma > 0.0 { lam(q / gamma) } else { f64::INFINITY };
    Ok(Some((lam(x1), lambda2)))
}

fn ratio_to_prob(r: f64) -> f64 {
    if r.is_infinite() {
        1.0
    } else {
        r / (1.0 + r)
    }
}

/// Largest fixed point of `F∘F` above the fixed point of `F`, in log space.
fn upper_two_cycle(map: &TreeMap, y_hat: f64) -> Result<f64> {
    let g = |y: f64| -> f64 {
        let fy = map.ln_eval_exp(y);
        map.ln_eval_exp(fy) - y
    };
    let mut step = 1.0;
    let mut hi = y_hat + step;
    while g(hi) >= 0.0 {
        step *= 2.0;
        hi = y_hat + step;
        if step > 1e4 {
            return Err(SpinError::NoConvergence("F∘F has no fixed point above the symmetric one".into()));
        }
    }
    let mut delta = 1e-2;
    let mut lo = y_hat + delta;
    while g(lo) <= 0.0 {
        delta *= 0.5;
        lo = y_hat + delta;
        if delta < 1e-14 {
            return Err(SpinError::NoConvergence("two-cycle too close to the fixed point to resolve".into()));
        }
    }
    if lo >= hi {
        return Err(SpinError::NoConvergence("bracket for the two-cycle collapsed".into()));
    }
    Ok(bisect_decreasing(g, lo, hi))
}

pub fn extremal_marginals(params: &SpinParams) -> Result<PhasePoint> {
    params.require_antiferro()?;
    let map = TreeMap::new(params)?;
    let (x_hat, d) = fixed_point(&map)?;
    let regime = regime_of(d, params.tol);
    let (r_plus, r_minus) = match regime {
        Regime::NonUniqueness => {
            let y = upper_two_cycle(&map, x_hat.ln())?;
            let r_plus = y.exp();
            (r_plus, map.eval(r_plus)?)
        }
        _ => (x_hat, x_hat),
    };
    let root = |r: f64| -> Result<f64> {
        // Δ children instead of Δ-1
        let f = map.eval(r)?;
        Ok(f * (1.0 + map.gamma * r) / (map.beta + r))
    };
    Ok(PhasePoint {
        q_minus: ratio_to_prob(r_minus),
        q_plus: ratio_to_prob(r_plus),
        r_minus,
        r_plus,
        p_minus: ratio_to_prob(root(r_plus)?),
        p_plus: ratio_to_prob(root(r_minus)?),
        regime,
        fixed_point: x_hat,
        derivative: d,
    })
}

/// One row of a λ sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub beta: f64,
    pub gamma: f64,
    pub lambda: f64,
    pub delta: u32,
    pub point: PhasePoint,
}

/// Extremal marginals on a log-spaced λ grid.
pub fn sweep_lambda(
    beta: f64,
    gamma: f64,
    delta: u32,
    lambda_min: f64,
    lambda_max: f64,
    steps: usize,
    tol: f64,
) -> Result<Vec<SweepRow>> {
    if !(lambda_min > 0.0 && lambda_max >= lambda_min) || steps == 0 {
        return Err(SpinError::InvalidParameter("need 0 < lambda_min <= lambda_max and steps >= 1".into()));
    }
    (0..steps)
        .map(|k| {
            let t = if steps == 1 { 0.0 } else { k as f64 / (steps - 1) as f64 };
            let lambda = (lambda_min.ln() + t * (lambda_max.ln() - lambda_min.ln())).exp();
            let params = SpinParams::build(beta, gamma, lambda, Some(delta), tol)?;
            Ok(SweepRow { beta, gamma, lambda, delta, point: extremal_marginals(&params)? })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(b: f64, g: f64, l: f64, d: u32) -> SpinParams {
        SpinParams::new(b, g, l, d).unwrap()
    }

    #[test]
    fn map_values() {
        assert!((tree_map(&p(0.4, 0.4, 1.0, 4), 1.0).unwrap() - 1.0).abs() < 1e-15);
        // ((1 + 0.5)/(0.25 + 1))^2
        assert!((tree_map(&p(0.25, 0.5, 1.0, 3), 1.0).unwrap() - 1.44).abs() < 1e-12);
        let a = tree_map(&p(0.3, 0.6, 2.0, 5), 0.7).unwrap();
        let b = tree_map(&p(0.3, 0.6, 1.0, 5), 0.7).unwrap();
        assert!((a - 2.0 * b).abs() < 1e-14);
        // hard-core form λ/(1+r)^(Δ-1) is regular at r = 0
        assert_eq!(tree_map(&p(1.0, 0.0, 2.0, 3), 0.0).unwrap(), 2.0);
        assert!(matches!(tree_map(&p(0.0, 1.0, 2.0, 3), 0.0), Err(SpinError::DomainError(_))));
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let m = TreeMap::new(&p(0.3, 0.6, 1.7, 5)).unwrap();
        for &x in &[0.1, 0.8, 3.0] {
            let h = 1e-6;
            let fd = (m.eval(x + h).unwrap() - m.eval(x - h).unwrap()) / (2.0 * h);
            assert!((fd - m.derivative(x).unwrap()).abs() < 1e-7);
        }
    }

    #[test]
    fn classification_examples() {
        assert_eq!(classify_uniqueness(&p(0.2, 0.2, 1.0, 3)).unwrap(), Regime::NonUniqueness);
        assert_eq!(classify_uniqueness(&p(1.0, 0.0, 0.5, 3)).unwrap(), Regime::Uniqueness);
        assert_eq!(classify_uniqueness(&p(1.0, 0.0, 1.0, 6)).unwrap(), Regime::NonUniqueness);
        assert_eq!(classify_uniqueness(&p(2.0, 2.0, 1.0, 3)), Err(SpinError::NotAntiferromagnetic));
    }

    #[test]
    fn symmetric_fixed_point_derivative() {
        let (x, d) = fixed_point(&TreeMap::new(&p(0.2, 0.2, 1.0, 3)).unwrap()).unwrap();
        assert!((x - 1.0).abs() < 1e-14);
        assert!((d - 4.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn thresholds() {
        assert_eq!(hardcore_lambda_c(3), 4.0);
        assert_eq!(hardcore_lambda_c(4), 27.0 / 16.0);
        assert_eq!(hardcore_lambda_c(6), 3125.0 / 4096.0);
    }

    #[test]
    fn interval_examples() {
        assert_eq!(lambda_interval(0.5, 0.5, 3).unwrap(), None);
        let (l1, l2) = lambda_interval(0.2, 0.2, 3).unwrap().unwrap();
        assert!(l1 < 1.0 && 1.0 < l2);
        assert!((l1 * l2 - 1.0).abs() < 1e-12);
        let (l1, l2) = lambda_interval(1.0, 0.0, 5).unwrap().unwrap();
        assert!((l1 - hardcore_lambda_c(5)).abs() < 1e-12 && l2.is_infinite());
    }

    #[test]
    fn uniqueness_collapses_marginals() {
        let pt = extremal_marginals(&p(1.0, 0.0, 0.5, 3)).unwrap();
        assert_eq!(pt.regime, Regime::Uniqueness);
        assert_eq!(pt.q_minus, pt.q_plus);
        assert!((pt.q_plus - pt.fixed_point / (1.0 + pt.fixed_point)).abs() < 1e-15);
    }

    #[test]
    fn symmetric_nonuniqueness_flip_symmetry() {
        let pt = extremal_marginals(&p(0.2, 0.2, 1.0, 3)).unwrap();
        assert!((pt.q_minus + pt.q_plus - 1.0).abs() < 1e-9);
        assert!((pt.q_plus - 0.933012701892).abs() < 1e-9);
    }

    #[test]
    fn hard_core_six() {
        let pt = extremal_marginals(&p(1.0, 0.0, 1.0, 6)).unwrap();
        let m = TreeMap::new(&p(1.0, 0.0, 1.0, 6)).unwrap();
        assert!(pt.q_minus < pt.q_plus);
        assert!((m.eval(pt.r_plus).unwrap() - pt.r_minus).abs() <= 1e-10);
        assert!((m.eval(pt.r_minus).unwrap() - pt.r_plus).abs() <= 1e-10);
        assert!((pt.p_plus - 0.408320).abs() < 1e-6 && (pt.p_minus - 0.035470).abs() < 1e-6);
    }

    #[test]
    fn hard_core_three_closed_form() {
        // λ = 4.5, Δ = 3 has the two-cycle (r+, r-) = (2, 1/2)
        let pt = extremal_marginals(&p(1.0, 0.0, 4.5, 3)).unwrap();
        assert!((pt.q_plus - 2.0 / 3.0).abs() < 1e-12 && (pt.q_minus - 1.0 / 3.0).abs() < 1e-12);
        assert!((pt.p_plus - 4.0 / 7.0).abs() < 1e-12 && (pt.p_minus - 1.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn doubly_zero_weights_have_no_two_cycle() {
        assert!(matches!(extremal_marginals(&p(0.0, 0.0, 1.0, 3)), Err(SpinError::NoConvergence(_))));
    }

    #[test]
    fn sweep_rows() {
        let rows = sweep_lambda(1.0, 0.0, 3, 1.0, 10.0, 5, 1e-9).unwrap();
        assert_eq!(rows.len(), 5);
        assert!((rows[4].lambda - 10.0).abs() < 1e-12);
        assert_eq!(rows[0].point.regime, Regime::Uniqueness);
        assert_eq!(rows[4].point.regime, Regime::NonUniqueness);
    }
}

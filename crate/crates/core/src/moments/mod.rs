//! First- and second-moment exponents of the phase-restricted partition
//! function over random bipartite Δ-regular gadgets, and the check that the
//! second-moment overlap maximizer sits at the product point.

pub mod optimize;
pub mod transport;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Result, SpinError};
use crate::params::SpinParams;
use crate::phase::extremal_marginals;
use optimize::NelderMead;
use transport::{transport_entropy_max, Mat4};

pub use transport::TransportPlan;

const DOMAIN_TOL: f64 = 1e-12;
pub const DEFAULT_CONDITION1_TOL: f64 = 1e-4;

fn xlogx(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

/// `c log(base)` with `0 log 0 = 0` and `c log 0 = -inf` for `c > 0`.
fn coef_log(c: f64, base: f64) -> f64 {
    if c <= 0.0 {
        0.0
    } else if base == 0.0 {
        f64::NEG_INFINITY
    } else {
        c * base.ln()
    }
}

pub fn f1(chi_plus: f64, chi_minus: f64) -> f64 {
    xlogx(chi_plus) + xlogx(1.0 - chi_plus) + xlogx(chi_minus) + xlogx(1.0 - chi_minus)
}

/// `g1(x)`: log edge weight plus entropy of the edge-type split, where `x` is
/// the fraction of matching edges with both ends at spin 1.
pub fn g1(beta: f64, gamma: f64, x: f64, chi_plus: f64, chi_minus: f64) -> f64 {
    let zz = 1.0 - chi_plus - chi_minus + x;
    coef_log(zz, beta) + coef_log(x, gamma) - xlogx(x) - xlogx(chi_plus - x) - xlogx(chi_minus - x) - xlogx(zz)
}

fn check_unit(x: f64, name: &str) -> Result<f64> {
    if !(-DOMAIN_TOL..=1.0 + DOMAIN_TOL).contains(&x) {
        return Err(SpinError::InvalidParameter(format!("{name} must lie in [0, 1], got {x}")));
    }
    Ok(x.clamp(0.0, 1.0))
}

/// Maximizer of `g1` over `[max(0, s-1), min(χ+, χ-)]`, `s = χ+ + χ-`.
///
/// Stationarity reads `βγ(χ+ - x)(χ- - x) = x(1 - s + x)`, a quadratic in `x`.
/// A zero β or γ pins `x` to the lower end of the range.
pub fn g1_argmax(beta: f64, gamma: f64, chi_plus: f64, chi_minus: f64) -> f64 {
    let s = chi_plus + chi_minus;
    let lo = (s - 1.0).max(0.0);
    let hi = chi_plus.min(chi_minus).max(lo);
    if beta == 0.0 || gamma == 0.0 || hi == lo {
        return lo;
    }
    let bc = beta * gamma;
    let phi = |x: f64| bc * (chi_plus - x) * (chi_minus - x) - x * (1.0 - s + x);
    if bc == 1.0 {
        return (chi_plus * chi_minus).clamp(lo, hi);
    }
    let (a, b, c) = (bc - 1.0, -(bc * s + 1.0 - s), bc * chi_plus * chi_minus);
    let disc = (b * b - 4.0 * a * c).max(0.0);
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    let roots = if q == 0.0 { [0.0, 0.0] } else { [q / a, c / q] };
    let slack = 1e-12 * (1.0 + hi);
    let inside: Vec<f64> = roots.iter().copied().filter(|&r| r >= lo - slack && r <= hi + slack).collect();
    if let Some(&r) = inside.iter().min_by(|x, y| phi(x.clamp(lo, hi)).abs().total_cmp(&phi(y.clamp(lo, hi)).abs())) {
        return r.clamp(lo, hi);
    }
    // cancellation pushed both roots out of range; fall back to bisection on phi
    let (mut a, mut b) = (lo, hi);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if phi(m) > 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

pub fn psi1(params: &SpinParams, chi_plus: f64, chi_minus: f64) -> Result<f64> {
    let delta = params.require_delta()? as f64;
    let (cp, cm) = (check_unit(chi_plus, "chi_plus")?, check_unit(chi_minus, "chi_minus")?);
    let x = g1_argmax(params.beta, params.gamma, cp, cm);
    let g = g1(params.beta, params.gamma, x, cp, cm);
    if g == f64::NEG_INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    Ok((cp + cm) * params.lambda.ln() + (delta - 1.0) * f1(cp, cm) + delta * g)
}

/// Spins `(a, b)` of the two copies for the four overlap classes.
const CLASSES: [(u8, u8); 4] = [(1, 1), (1, 0), (0, 1), (0, 0)];

/// Pairwise interaction of two copies across one edge, by overlap class.
pub fn pair_weights(beta: f64, gamma: f64) -> Mat4 {
    let pw = |base: f64, e: u8| if e == 0 { 1.0 } else { base.powi(e as i32) };
    let mut w = [[0.0; 4]; 4];
    for (i, &(ai, bi)) in CLASSES.iter().enumerate() {
        for (j, &(aj, bj)) in CLASSES.iter().enumerate() {
            let zeros = (1 - ai) * (1 - aj) + (1 - bi) * (1 - bj);
            let ones = ai * aj + bi * bj;
            w[i][j] = pw(beta, zeros) * pw(gamma, ones);
        }
    }
    w
}

pub fn f2(chi_plus: f64, chi_minus: f64, up: f64, um: f64) -> f64 {
    let side = |c: f64, u: f64| 2.0 * xlogx(c - u) + xlogx(u) + xlogx(1.0 - 2.0 * c + u);
    side(chi_plus, up) + side(chi_minus, um)
}

/// Row and column marginals of the overlap table.
pub fn overlap_marginals(chi_plus: f64, chi_minus: f64, up: f64, um: f64) -> ([f64; 4], [f64; 4]) {
    let m = |c: f64, u: f64| [u, c - u, c - u, 1.0 - 2.0 * c + u];
    (m(chi_plus, up), m(chi_minus, um))
}

/// Overlap region: `max(0, 2χ - 1) <= υ <= χ` on each side.
pub fn overlap_box(chi_plus: f64, chi_minus: f64) -> ([f64; 2], [f64; 2]) {
    (
        [(2.0 * chi_plus - 1.0).max(0.0), (2.0 * chi_minus - 1.0).max(0.0)],
        [chi_plus, chi_minus],
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentPoint {
    pub chi_plus: f64,
    pub chi_minus: f64,
    pub upsilon_plus: f64,
    pub upsilon_minus: f64,
    /// All zero when the overlap is infeasible.
    pub y: Mat4,
    pub value: f64,
}

pub fn psi2_prime(params: &SpinParams, chi_plus: f64, chi_minus: f64, up: f64, um: f64) -> Result<MomentPoint> {
    let delta = params.require_delta()? as f64;
    let (cp, cm) = (check_unit(chi_plus, "chi_plus")?, check_unit(chi_minus, "chi_minus")?);
    let (lo, hi) = overlap_box(cp, cm);
    if up < lo[0] - DOMAIN_TOL || up > hi[0] + DOMAIN_TOL || um < lo[1] - DOMAIN_TOL || um > hi[1] + DOMAIN_TOL {
        return Err(SpinError::InvalidParameter(format!("overlap ({up}, {um}) lies outside the feasible region")));
    }
    let (up, um) = (up.clamp(lo[0], hi[0]), um.clamp(lo[1], hi[1]));
    let (l, r) = overlap_marginals(cp, cm, up, um);
    let w = pair_weights(params.beta, params.gamma);
    let point = |y: Mat4, value: f64| MomentPoint { chi_plus: cp, chi_minus: cm, upsilon_plus: up, upsilon_minus: um, y, value };
    match transport_entropy_max(&w, &l, &r) {
        Ok(plan) => {
            let value = 2.0 * (cp + cm) * params.lambda.ln() + (delta - 1.0) * f2(cp, cm, up, um) + delta * plan.value;
            Ok(point(plan.y, value))
        }
        Err(SpinError::Infeasible) => Ok(point([[0.0; 4]; 4], f64::NEG_INFINITY)),
        Err(e) => Err(e),
    }
}

/// Grid density and refinement settings for the two-dimensional searches.
#[derive(Debug, Clone, Copy)]
pub struct SearchOptions {
    pub grid: usize,
    pub starts: usize,
    pub nelder_mead: NelderMead,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions { grid: 41, starts: 5, nelder_mead: NelderMead::default() }
    }
}

/// Grid scan over a box followed by Nelder-Mead from the best cells and any
/// extra starts. Returns the best point and value.
fn grid_then_refine(
    f: impl Fn([f64; 2]) -> f64 + Sync,
    lo: [f64; 2],
    hi: [f64; 2],
    opts: &SearchOptions,
    extra_starts: &[[f64; 2]],
) -> ([f64; 2], f64) {
    let n = opts.grid.max(2);
    let at = |k: usize, d: usize| lo[d] + (hi[d] - lo[d]) * k as f64 / (n - 1) as f64;
    let mut cells: Vec<([f64; 2], f64)> = (0..n * n)
        .into_par_iter()
        .map(|idx| {
            let p = [at(idx / n, 0), at(idx % n, 1)];
            let v = f(p);
            (p, if v.is_nan() { f64::NEG_INFINITY } else { v })
        })
        .collect();
    cells.sort_by(|a, b| b.1.total_cmp(&a.1));
    let step = [(hi[0] - lo[0]) / (n - 1) as f64, (hi[1] - lo[1]) / (n - 1) as f64];
    let mut starts: Vec<[f64; 2]> =
        cells.iter().filter(|c| c.1.is_finite()).take(opts.starts).map(|c| c.0).collect();
    starts.extend_from_slice(extra_starts);
    let refined: Vec<([f64; 2], f64)> =
        starts.par_iter().map(|&s| opts.nelder_mead.maximize(&f, s, step, lo, hi)).collect();
    let mut best = cells[0];
    for r in refined {
        if r.1 > best.1 {
            best = r;
        }
    }
    best
}

/// Maximum of `Ψ2'` over the overlap region.
pub fn psi2(params: &SpinParams, chi_plus: f64, chi_minus: f64) -> Result<MomentPoint> {
    psi2_with(params, chi_plus, chi_minus, &SearchOptions::default(), &[])
}

pub fn psi2_with(
    params: &SpinParams,
    chi_plus: f64,
    chi_minus: f64,
    opts: &SearchOptions,
    extra_starts: &[[f64; 2]],
) -> Result<MomentPoint> {
    params.require_delta()?;
    let (cp, cm) = (check_unit(chi_plus, "chi_plus")?, check_unit(chi_minus, "chi_minus")?);
    let (lo, hi) = overlap_box(cp, cm);
    let f = |p: [f64; 2]| psi2_prime(params, cp, cm, p[0], p[1]).map(|m| m.value).unwrap_or(f64::NAN);
    let (best, _) = grid_then_refine(f, lo, hi, opts, extra_starts);
    psi2_prime(params, cp, cm, best[0], best[1])
}

/// Maximizer of `Ψ1` over the unit square, reported with `χ+ >= χ-`.
pub fn maximize_psi1(params: &SpinParams) -> Result<(f64, f64, f64)> {
    maximize_psi1_with(params, &SearchOptions { grid: 101, ..SearchOptions::default() })
}

pub fn maximize_psi1_with(params: &SpinParams, opts: &SearchOptions) -> Result<(f64, f64, f64)> {
    params.require_delta()?;
    let f = |p: [f64; 2]| psi1(params, p[0], p[1]).unwrap_or(f64::NAN);
    let (p, v) = grid_then_refine(f, [0.0, 0.0], [1.0, 1.0], opts, &[]);
    Ok((p[0].max(p[1]), p[0].min(p[1]), v))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Condition1 {
    pub holds: bool,
    /// `Ψ2(p) - Ψ2'(p, p²)`.
    pub gap: f64,
    /// Overlap maximizer `(υ+, υ-)`.
    pub argmax: [f64; 2],
    /// Sup-norm distance of the maximizer from `((p+)², (p-)²)`.
    pub distance: f64,
    pub tol: f64,
}

/// Residuals of the identity that moves the field into the edge weights:
/// `Ψ(β,γ,λ) - Ψ(β/λ^(1/Δ), γλ^(1/Δ), 1) = c log λ` with `c = 1` for `Ψ1`
/// and `c = 2` for `Ψ2'` and `Ψ2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShiftResiduals {
    pub psi1: f64,
    pub psi2_prime: f64,
    pub psi2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentReport {
    pub p_plus: f64,
    pub p_minus: f64,
    pub psi1: f64,
    pub psi2: f64,
    pub psi2_at_product: f64,
    pub psi2_argmax: MomentPoint,
    pub condition1: Condition1,
    /// `|Ψ2(p) - 2Ψ1(p)|`.
    pub moment_equality_residual: f64,
    pub identity_residuals: ShiftResiduals,
    /// `max |χ* - p|` against the tree recursion, when it applies.
    pub tree_residual: Option<f64>,
}

/// Parameters with the field pushed into the edge weights.
pub fn field_free(params: &SpinParams) -> Result<SpinParams> {
    let delta = params.require_delta()? as f64;
    let k = params.lambda.powf(1.0 / delta);
    SpinParams::build(params.beta / k, params.gamma * k, 1.0, params.delta, params.tol)
}

fn shift_residual(a: f64, b: f64, expect: f64) -> f64 {
    if a == f64::NEG_INFINITY && b == f64::NEG_INFINITY {
        0.0
    } else {
        (a - b - expect).abs()
    }
}

pub fn shift_residuals(params: &SpinParams, chi_plus: f64, chi_minus: f64, up: f64, um: f64) -> Result<ShiftResiduals> {
    let flat = field_free(params)?;
    let ln = params.lambda.ln();
    Ok(ShiftResiduals {
        psi1: shift_residual(psi1(params, chi_plus, chi_minus)?, psi1(&flat, chi_plus, chi_minus)?, ln),
        psi2_prime: shift_residual(
            psi2_prime(params, chi_plus, chi_minus, up, um)?.value,
            psi2_prime(&flat, chi_plus, chi_minus, up, um)?.value,
            2.0 * ln,
        ),
        psi2: shift_residual(psi2(params, chi_plus, chi_minus)?.value, psi2(&flat, chi_plus, chi_minus)?.value, 2.0 * ln),
    })
}

pub fn check_condition1(params: &SpinParams, tol: f64) -> Result<MomentReport> {
    let (pp, pm, psi1_val) = maximize_psi1(params)?;
    let product = [pp * pp, pm * pm];
    let at_product = psi2_prime(params, pp, pm, product[0], product[1])?;
    let best = psi2_with(params, pp, pm, &SearchOptions::default(), &[product])?;
    let distance = (best.upsilon_plus - product[0]).abs().max((best.upsilon_minus - product[1]).abs());
    let tree_residual = if params.bc() < 1.0 {
        extremal_marginals(params).ok().map(|pt| (pt.p_plus - pp).abs().max((pt.p_minus - pm).abs()))
    } else {
        None
    };
    Ok(MomentReport {
        p_plus: pp,
        p_minus: pm,
        psi1: psi1_val,
        psi2: best.value,
        psi2_at_product: at_product.value,
        psi2_argmax: best,
        condition1: Condition1 {
            holds: distance <= tol,
            gap: best.value - at_product.value,
            argmax: [best.upsilon_plus, best.upsilon_minus],
            distance,
            tol,
        },
        moment_equality_residual: (best.value - 2.0 * psi1_val).abs(),
        identity_residuals: shift_residuals(params, pp, pm, product[0], product[1])?,
        tree_residual,
    })
}

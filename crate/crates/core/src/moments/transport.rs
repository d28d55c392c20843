//! Entropy-regularized transport on a 4x4 table: maximize
//! `Σ y_ij log(w_ij / y_ij)` subject to row sums `L` and column sums `R`.
//! The maximizer has the scaled form `y_ij = u_i w_ij v_j`, found by
//! alternating row and column scaling.

use serde::Serialize;

use crate::error::{Result, SpinError};

pub type Mat4 = [[f64; 4]; 4];

pub const MAX_SWEEPS: usize = 100_000;
pub const STOP_RESIDUAL: f64 = 1e-12;
/// Plans with a final marginal residual above this are reported as failures.
pub const ACCEPT_RESIDUAL: f64 = 1e-10;
const SUM_TOL: f64 = 1e-9;
const NEG_TOL: f64 = 1e-12;
const TIGHT_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransportPlan {
    pub y: Mat4,
    /// `Σ y log(w / y)` with `0 log 0 = 0`.
    pub value: f64,
    pub residual: f64,
    pub sweeps: usize,
}

fn clean(x: f64, what: &str) -> Result<f64> {
    if !x.is_finite() || x < -NEG_TOL {
        return Err(SpinError::InvalidParameter(format!("{what} must be finite and >= 0, got {x}")));
    }
    Ok(x.max(0.0))
}

/// Cells that must be zero in every feasible plan, by repeatedly closing
/// tight row sets (`Σ_S L = Σ_N(S) R`). Fails if some row set violates Hall's
/// condition.
fn support(w: &Mat4, l: &[f64; 4], r: &[f64; 4]) -> Result<[[bool; 4]; 4]> {
    let mut allowed = [[false; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            allowed[i][j] = l[i] > 0.0 && r[j] > 0.0 && w[i][j] > 0.0;
        }
    }
    let rows: Vec<usize> = (0..4).filter(|&i| l[i] > 0.0).collect();
    loop {
        let mut changed = false;
        for subset in 1u32..(1 << rows.len()) {
            let set: Vec<usize> = (0..rows.len()).filter(|&k| subset >> k & 1 == 1).map(|k| rows[k]).collect();
            let mut cols = [false; 4];
            for &i in &set {
                for j in 0..4 {
                    cols[j] |= allowed[i][j];
                }
            }
            let sl: f64 = set.iter().map(|&i| l[i]).sum();
            let sr: f64 = (0..4).filter(|&j| cols[j]).map(|j| r[j]).sum();
            if sl > sr + SUM_TOL {
                return Err(SpinError::Infeasible);
            }
            if sl >= sr - TIGHT_TOL {
                for &i in &rows {
                    if set.contains(&i) {
                        continue;
                    }
                    for j in 0..4 {
                        if cols[j] && allowed[i][j] {
                            allowed[i][j] = false;
                            changed = true;
                        }
                    }
                }
            }
        }
        if !changed {
            return Ok(allowed);
        }
    }
}

pub fn transport_entropy_max(w: &Mat4, l: &[f64; 4], r: &[f64; 4]) -> Result<TransportPlan> {
    let mut ww = [[0.0; 4]; 4];
    let (mut ll, mut rr) = ([0.0; 4], [0.0; 4]);
    for i in 0..4 {
        ll[i] = clean(l[i], "row marginal")?;
        rr[i] = clean(r[i], "column marginal")?;
        for j in 0..4 {
            ww[i][j] = clean(w[i][j], "weight")?;
        }
    }
    let (sl, sr): (f64, f64) = (ll.iter().sum(), rr.iter().sum());
    if (sl - sr).abs() > SUM_TOL {
        return Err(SpinError::InvalidParameter(format!("marginal totals differ: {sl} vs {sr}")));
    }
    let allowed = support(&ww, &ll, &rr)?;
    // Closing tight sets within tolerance can strip every cell from a row or
    // column whose mass is rounding noise; drop that mass rather than divide by zero.
    for i in 0..4 {
        if ll[i] > 0.0 && !(0..4).any(|j| allowed[i][j]) {
            if ll[i] > SUM_TOL {
                return Err(SpinError::Infeasible);
            }
            ll[i] = 0.0;
        }
        if rr[i] > 0.0 && !(0..4).any(|j| allowed[j][i]) {
            if rr[i] > SUM_TOL {
                return Err(SpinError::Infeasible);
            }
            rr[i] = 0.0;
        }
    }
    let k = |i: usize, j: usize| if allowed[i][j] { ww[i][j] } else { 0.0 };

    let (mut u, mut v) = ([1.0f64; 4], [1.0f64; 4]);
    let mut residual = f64::INFINITY;
    let mut sweeps = 0;
    while sweeps < MAX_SWEEPS {
        sweeps += 1;
        for i in 0..4 {
            let s: f64 = (0..4).map(|j| k(i, j) * v[j]).sum();
            u[i] = if ll[i] > 0.0 { ll[i] / s } else { 0.0 };
        }
        for j in 0..4 {
            let s: f64 = (0..4).map(|i| u[i] * k(i, j)).sum();
            v[j] = if rr[j] > 0.0 { rr[j] / s } else { 0.0 };
        }
        residual = (0..4)
            .map(|i| ((0..4).map(|j| u[i] * k(i, j) * v[j]).sum::<f64>() - ll[i]).abs())
            .fold(0.0, f64::max);
        if residual <= STOP_RESIDUAL {
            break;
        }
    }
    let mut y = [[0.0; 4]; 4];
    let mut value = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            let x = u[i] * k(i, j) * v[j];
            y[i][j] = x;
            if x > 0.0 {
                value += x * (ww[i][j].ln() - x.ln());
            }
        }
    }
    let col_residual = (0..4).map(|j| ((0..4).map(|i| y[i][j]).sum::<f64>() - rr[j]).abs()).fold(0.0, f64::max);
    residual = residual.max(col_residual);
    if y.iter().flatten().any(|x| !x.is_finite()) || !(residual <= ACCEPT_RESIDUAL) {
        return Err(SpinError::NoConvergence(format!("transport scaling stalled at residual {residual:e}")));
    }
    Ok(TransportPlan { y, value, residual, sweeps })
}

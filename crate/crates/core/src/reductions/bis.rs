//! Independent sets of a bipartite graph `B` from an antiferromagnetic Ising
//! partition function with a field on a pendant layer.
//!
//! Every edge of `B` becomes `t1` parallel edges; each vertex `v` gets
//! `t1 deg(v)` pendant neighbours `W_v`, and each of those gets `t2` pendant
//! neighbours carrying the field. For `λ < 1` the field layer pushes `W`
//! towards spin 1, which in turn penalizes spin 0 at both ends of an edge.

use std::collections::BTreeMap;
use std::f64::consts::LN_2;

use serde::Serialize;

use crate::error::{Result, SpinError};
use crate::exact::{count_independent_sets, Engine};
use crate::gadgets::padded;
use crate::graph::{build_graph, BipartiteMultigraph, EdgeSpec, VertexSpec};
use crate::logvalue::LogValue;
use crate::network::to_weighted_network;
use crate::params::SpinParams;

fn check_alpha_eps(alpha: f64, epsilon: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(SpinError::InvalidParameter(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(SpinError::InvalidParameter(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    Ok(())
}

/// `λ` folded into `(0, 1)` by the spin flip.
fn effective_lambda(lambda: f64) -> Result<f64> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(SpinError::InvalidParameter(format!("lambda must be > 0, got {lambda}")));
    }
    if lambda == 1.0 {
        return Err(SpinError::DegenerateParameters("lambda = 1 gives the field layer no pull".into()));
    }
    Ok(if lambda > 1.0 { 1.0 / lambda } else { lambda })
}

/// Least `t >= 1` with `t * slope <= rhs`, for `slope < 0`.
fn least_multiple(slope: f64, rhs: f64) -> Result<u64> {
    let guess = (rhs / slope).ceil();
    if !(guess.is_finite() && guess < 1e15) {
        return Err(SpinError::InfeasibleSizes(format!("required multiplicity {guess} is out of range")));
    }
    let mut t = (guess as u64).max(1);
    while t > 1 && (t - 1) as f64 * slope <= rhs {
        t -= 1;
    }
    while t as f64 * slope > rhs {
        t += 1;
    }
    Ok(t)
}

/// Least `t1` with `α^{2 t1} <= ε / (6 2^n)` and then the least `t2` with
/// `(ρ0/ρ1)^{t2} <= α^{t1 m} ε / (6 2^{2 t1 m + n})`, where
/// `(ρ0, ρ1) = (α + λ, 1 + αλ)`. Everything is compared in log space.
pub fn choose_t1_t2(alpha: f64, lambda: f64, n: usize, m: usize, epsilon: f64) -> Result<(u64, u64)> {
    check_alpha_eps(alpha, epsilon)?;
    let lambda = effective_lambda(lambda)?;
    if m == 0 {
        return Err(SpinError::DegenerateInstance("graph has no edges".into()));
    }
    let (n, m) = (n as f64, m as f64);
    let base = epsilon.ln() - 6f64.ln();
    let t1 = least_multiple(2.0 * alpha.ln(), base - n * LN_2)?;
    let ratio = ((alpha + lambda) / (1.0 + alpha * lambda)).ln();
    let t1f = t1 as f64;
    let t2 = least_multiple(ratio, t1f * m * alpha.ln() + base - (2.0 * t1f * m + n) * LN_2)?;
    Ok((t1, t2))
}

#[derive(Debug, Clone, Serialize)]
pub struct BisReductionPlan {
    pub t1: u64,
    pub t2: u64,
    /// Normalizer: `Z_{B',U} / C` approximates the number of independent sets.
    pub log_c: LogValue,
    pub alpha: f64,
    pub lambda: f64,
    #[serde(skip)]
    pub b_prime: BipartiteMultigraph,
    /// `v -> W_v`.
    pub w_sets: BTreeMap<String, Vec<String>>,
    /// `w -> U_w`.
    pub u_sets: BTreeMap<String, Vec<String>>,
    pub sizes: BisSizes,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BisSizes {
    pub n: usize,
    pub m: u64,
    pub w: usize,
    pub u: usize,
    pub vertices: usize,
    pub edges: u64,
}

/// Builds `B'` with its field subset and the constant `C`. For `λ > 1` the
/// multiplicities are chosen for `1/λ` and `C` picks up `λ^{|U|}` from the
/// spin flip.
pub fn bis_to_ising(b: &BipartiteMultigraph, alpha: f64, lambda: f64, epsilon: f64) -> Result<BisReductionPlan> {
    if b.two_coloring().is_none() || !b.sides_are_proper() {
        let &(u, v, _) = b.edges().first().expect("a non-bipartite graph has edges");
        return Err(SpinError::NonBipartite { u: b.id(u).into(), v: b.id(v).into() });
    }
    let (t1, t2) = choose_t1_t2(alpha, lambda, b.vertex_count(), b.edge_count() as usize, epsilon)?;
    bis_to_ising_with(b, alpha, lambda, t1, t2)
}

/// The same construction with explicit multiplicities, for oracle comparisons
/// on instances too small for the prescribed ones.
pub fn bis_to_ising_with(b: &BipartiteMultigraph, alpha: f64, lambda: f64, t1: u64, t2: u64) -> Result<BisReductionPlan> {
    let lt = effective_lambda(lambda)?;
    if !(alpha > 0.0 && alpha < 1.0) || t1 == 0 || t2 == 0 {
        return Err(SpinError::InvalidParameter(format!("need alpha in (0, 1) and t1, t2 >= 1, got {alpha}, {t1}, {t2}")));
    }
    let n = b.vertex_count();
    let m = b.edge_count();
    let (t1u, t2u) = (t1 as usize, t2 as usize);

    let mut vertices = Vec::new();
    let mut edges = Vec::new();
    let mut field = Vec::new();
    let mut w_sets = BTreeMap::new();
    let mut u_sets = BTreeMap::new();
    let vid = |i: usize| format!("v:{}", b.id(i));
    for i in 0..n {
        vertices.push(VertexSpec::new(vid(i), b.side(i)));
    }
    for &(x, y, mult) in b.edges() {
        edges.push(EdgeSpec::new(vid(x), vid(y), mult * t1 as u32));
    }
    for i in 0..n {
        let side = b.side(i);
        let count = t1u * b.degree(i) as usize;
        let mut ws = Vec::with_capacity(count);
        for j in 0..count {
            let w = padded(&format!("w:{}:", b.id(i)), j, count);
            vertices.push(VertexSpec::new(w.clone(), side.flip()));
            edges.push(EdgeSpec::new(vid(i), w.clone(), 1));
            let mut us = Vec::with_capacity(t2u);
            for k in 0..t2u {
                let u = padded(&format!("u:{}:{j}:", b.id(i)), k, t2u);
                vertices.push(VertexSpec::new(u.clone(), side));
                edges.push(EdgeSpec::new(w.clone(), u.clone(), 1));
                field.push(u.clone());
                us.push(u);
            }
            u_sets.insert(w.clone(), us);
            ws.push(w);
        }
        w_sets.insert(b.id(i).to_string(), ws);
    }
    let u_count = field.len();
    let b_prime = build_graph(vertices, edges, Some(field), None, None)?;

    let (mf, t1f, t2f) = (m as f64, t1 as f64, t2 as f64);
    let mut log_c = 2.0 * t1f * t2f * mf * (1.0 + alpha * lt).ln() + t1f * mf * alpha.ln();
    if lambda > 1.0 {
        log_c += u_count as f64 * lambda.ln();
    }
    let sizes = BisSizes {
        n,
        m,
        w: w_sets.values().map(Vec::len).sum(),
        u: u_count,
        vertices: b_prime.vertex_count(),
        edges: b_prime.edge_count(),
    };
    Ok(BisReductionPlan { t1, t2, log_c: LogValue::from_ln(log_c), alpha, lambda, b_prime, w_sets, u_sets, sizes })
}

/// Exact check of `e^{-ε/2} I_B <= Z_{B',U} / C <= e^{ε/2} I_B`, in log space.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BisCertificate {
    #[serde(serialize_with = "crate::exact::serialize_count")]
    pub i_b: u128,
    pub log_z: f64,
    pub log_c: f64,
    /// Bounds on `log_z - log_c`.
    pub lower: f64,
    pub upper: f64,
    pub ok: bool,
    pub t1: u64,
    pub t2: u64,
}

pub fn verify_bis_reduction(
    b: &BipartiteMultigraph,
    alpha: f64,
    lambda: f64,
    epsilon: f64,
    engine: &Engine,
) -> Result<BisCertificate> {
    check_alpha_eps(alpha, epsilon)?;
    effective_lambda(lambda)?;
    let i_b = count_independent_sets(b, engine.cap)?;
    let ln_ib = (i_b as f64).ln();
    let (lower, upper) = (ln_ib - epsilon / 2.0, ln_ib + epsilon / 2.0);
    if b.edge_count() == 0 {
        // nothing to reduce: every subset is independent
        let log_z = b.vertex_count() as f64 * LN_2;
        return Ok(BisCertificate { i_b, log_z, log_c: 0.0, lower, upper, ok: true, t1: 0, t2: 0 });
    }
    let plan = bis_to_ising(b, alpha, lambda, epsilon)?;
    let params = SpinParams::unbounded(alpha, alpha, lambda)?;
    let z = engine.partition_function(&to_weighted_network(&plan.b_prime, &params))?;
    let ratio = z.ln() - plan.log_c.ln();
    Ok(BisCertificate {
        i_b,
        log_z: z.ln(),
        log_c: plan.log_c.ln(),
        lower,
        upper,
        ok: lower <= ratio && ratio <= upper,
        t1: plan.t1,
        t2: plan.t2,
    })
}

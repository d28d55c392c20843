//! Unary symmetry breakers: the gadgets `H_k` with a degree-one vertex `u`
//! whose marginal avoids `0`, `λ/(1+λ)` and `1`.

use serde::Serialize;

use crate::error::Result;
use crate::exact::Engine;
use crate::graph::{build_graph, BipartiteMultigraph, EdgeSpec, Side, VertexSpec};
use crate::network::to_weighted_network;
use crate::params::SpinParams;

/// Id of the distinguished degree-one vertex.
pub const ATTACH: &str = "u";

/// `H_k`: vertices `u`, `u'`, `u''`, `v1..vk` with edges `u'–vi`, `vi–u''`
/// and `u''–u`.
pub fn h_k(k: usize) -> BipartiteMultigraph {
    let mut vertices = vec![
        VertexSpec::new(ATTACH, Side::L),
        VertexSpec::new("u'", Side::R),
        VertexSpec::new("u''", Side::R),
    ];
    let mut edges = vec![EdgeSpec::new("u''", ATTACH, 1)];
    for i in 1..=k {
        let v = format!("v{i}");
        vertices.push(VertexSpec::new(v.clone(), Side::L));
        edges.push(EdgeSpec::new("u'", v.clone(), 1));
        edges.push(EdgeSpec::new(v, "u''", 1));
    }
    build_graph(vertices, edges, None, None, None).expect("H_k is a valid bipartite graph")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SymmetryBreaker {
    #[serde(skip)]
    pub graph: BipartiteMultigraph,
    pub k: usize,
    /// `(Pr[σ_u = 0], Pr[σ_u = 1])`.
    pub rho: (f64, f64),
    pub attach: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum SymmetryBreaking {
    Found(SymmetryBreaker),
    Unbreakable { reason: String },
}

/// Tries `k = 0, 1, 2` and returns the first `H_k` whose attachment marginal
/// is more than `params.tol` away from each of `0`, `λ/(1+λ)` and `1`.
pub fn symmetry_breaking_search(params: &SpinParams, engine: &Engine) -> Result<SymmetryBreaking> {
    let tol = params.tol;
    if params.is_degenerate() {
        return Ok(SymmetryBreaking::Unbreakable { reason: format!("beta*gamma = {} is 1", params.bc()) });
    }
    if (params.beta - params.gamma).abs() <= tol && (params.lambda - 1.0).abs() <= tol {
        return Ok(SymmetryBreaking::Unbreakable { reason: "beta = gamma and lambda = 1".into() });
    }
    let free = params.lambda / (1.0 + params.lambda);
    for k in 0..=2 {
        let graph = h_k(k);
        let rho1 = engine.marginal(&to_weighted_network(&graph, params), ATTACH)?;
        if [0.0, free, 1.0].iter().all(|&bad| (rho1 - bad).abs() > tol) {
            return Ok(SymmetryBreaking::Found(SymmetryBreaker {
                graph,
                k,
                rho: (1.0 - rho1, rho1),
                attach: ATTACH.into(),
            }));
        }
    }
    Ok(SymmetryBreaking::Unbreakable { reason: "no H_k with k <= 2 moves the marginal".into() })
}

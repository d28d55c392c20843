//! Nonuniform-field Ising on a bipartite graph `B` from a bounded-degree
//! 2-spin system: one phase gadget per vertex, terminal edges per `B`-edge,
//! and a symmetry breaker identified with a terminal for each field vertex.

use std::collections::HashSet;

use serde::Serialize;

use crate::error::{Result, SpinError};
use crate::gadgets::{Gadget, SymmetryBreaker};
use crate::graph::{build_graph, BipartiteMultigraph, EdgeSpec, Side, VertexSpec};
use crate::params::SpinParams;

pub type Mat2 = [[f64; 2]; 2];

/// Effective Ising parameters seen by the phases of the gadget copies.
/// Matrix rows and columns are ordered `(-, +)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivedIsingParams {
    /// `M+` with rows `(1-q-, q-)` and `(1-q+, q+)`.
    pub m_plus: Mat2,
    /// `N = M+ M (M+)^T`.
    pub n: Mat2,
    pub det_n: f64,
    /// `N++ N--`.
    pub mu1: f64,
    /// `N+- N-+`.
    pub mu2: f64,
    /// `μ1/μ2` when antiferromagnetic, `μ2/μ1` when ferromagnetic; below 1 either way.
    pub alpha_out: f64,
    pub rho_prime: [f64; 2],
    pub lambda_out: f64,
    pub ferromagnetic: bool,
}

pub fn derived_ising_params(params: &SpinParams, q_minus: f64, q_plus: f64, rho: (f64, f64)) -> Result<DerivedIsingParams> {
    if !(0.0 < q_minus && q_minus < q_plus && q_plus < 1.0) {
        return Err(SpinError::InvalidParameter(format!("need 0 < q- < q+ < 1, got ({q_minus}, {q_plus})")));
    }
    if !(rho.0 >= 0.0 && rho.1 >= 0.0 && (rho.0 + rho.1 - 1.0).abs() <= 1e-9) {
        return Err(SpinError::InvalidParameter(format!("rho must be a distribution, got {rho:?}")));
    }
    if params.is_degenerate() {
        return Err(SpinError::DegenerateParameters(format!("beta*gamma = {} is 1, so det N = 0", params.bc())));
    }
    let m = params.edge_matrix();
    let mp = [[1.0 - q_minus, q_minus], [1.0 - q_plus, q_plus]];
    let mut n = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            for a in 0..2 {
                for b in 0..2 {
                    n[i][j] += mp[i][a] * m[a][b] * mp[j][b];
                }
            }
        }
    }
    let det_n = n[0][0] * n[1][1] - n[0][1] * n[1][0];
    let (mu1, mu2) = (n[1][1] * n[0][0], n[1][0] * n[0][1]);
    let ferromagnetic = params.bc() > 1.0;
    let alpha_out = if ferromagnetic { mu2 / mu1 } else { mu1 / mu2 };
    let rl = rho.1 / params.lambda;
    let rho_prime = [mp[0][0] * rho.0 + mp[0][1] * rl, mp[1][0] * rho.0 + mp[1][1] * rl];
    let lambda_out = rho_prime[1] / rho_prime[0];
    if (lambda_out - 1.0).abs() <= params.tol {
        return Err(SpinError::DegenerateParameters(format!(
            "rho1 = {} equals lambda/(1+lambda), so the induced field is 1",
            rho.1
        )));
    }
    Ok(DerivedIsingParams { m_plus: mp, n, det_n, mu1, mu2, alpha_out, rho_prime, lambda_out, ferromagnetic })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TerminalUse {
    /// Endpoint of the terminal edge realizing a `B`-edge.
    Edge { other: String },
    /// Identified with the attachment vertex of a symmetry breaker.
    Breaker,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Occupancy {
    /// `B`-vertex whose gadget copy owns the terminal.
    pub owner: String,
    pub terminal: String,
    #[serde(flatten)]
    pub usage: TerminalUse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ConstructionAudit {
    pub bipartite: bool,
    pub max_degree: u32,
    pub degree_ok: bool,
    pub reuse_free: bool,
    /// Terminal edges plus breaker attachment edges.
    pub added_edges: u64,
    pub expected_added_edges: u64,
}

impl ConstructionAudit {
    pub fn ok(&self) -> bool {
        self.bipartite && self.degree_ok && self.reuse_free && self.added_edges == self.expected_added_edges
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct IsingReductionPlan {
    pub derived: DerivedIsingParams,
    #[serde(skip)]
    pub b_prime: BipartiteMultigraph,
    pub occupancy: Vec<Occupancy>,
    pub audit: ConstructionAudit,
}

/// Copy ids are `g{v}:{id}` and `h{u}:{id}`; the breaker's attachment vertex
/// is replaced by the chosen terminal, so the merged vertex carries a single
/// field factor.
///
/// In the antiferromagnetic case copies of vertices on side `R` of `B` are
/// flipped, so that plus terminals of adjacent copies sit on opposite sides
/// and are joined plus-to-plus and minus-to-minus. In the ferromagnetic case
/// no copy is flipped and plus terminals are joined to minus terminals.
/// Terminals are taken in lexicographic order of their ids.
pub fn ising_to_2spin(
    b: &BipartiteMultigraph,
    params: &SpinParams,
    gadget: &Gadget,
    breaker: &SymmetryBreaker,
    q_minus: f64,
    q_plus: f64,
) -> Result<IsingReductionPlan> {
    let delta = params.require_delta()?;
    if b.two_coloring().is_none() || !b.sides_are_proper() {
        let &(u, v, _) = b.edges().first().expect("a non-bipartite graph has edges");
        return Err(SpinError::NonBipartite { u: b.id(u).into(), v: b.id(v).into() });
    }
    let derived = derived_ising_params(params, q_minus, q_plus, breaker.rho)?;
    let g = &gadget.graph;
    let h = &breaker.graph;
    let attach = h.require_index(&breaker.attach)?;
    if h.degree(attach) != 1 {
        return Err(SpinError::InvalidParameter(format!("attachment vertex {} must have degree 1", breaker.attach)));
    }
    let (mut tp, mut tm) = gadget.terminal_ids();
    tp.sort();
    tm.sort();
    let field = b.field_mask();
    for i in 0..b.vertex_count() {
        let deg = b.degree(i) as usize;
        let need_plus = deg + field[i] as usize;
        if tp.len() < need_plus || tm.len() < deg {
            return Err(SpinError::NotEnoughTerminals(format!(
                "vertex {} needs {need_plus} plus and {deg} minus terminals, gadget has {} and {}",
                b.id(i),
                tp.len(),
                tm.len()
            )));
        }
    }

    let flip_copy = |i: usize| !derived.ferromagnetic && b.side(i) == Side::R;
    let gid = |i: usize, id: &str| format!("g{}:{id}", b.id(i));
    let mut vertices = Vec::new();
    let mut edges = Vec::new();
    for i in 0..b.vertex_count() {
        for v in g.vertices() {
            let side = if flip_copy(i) { v.side.flip() } else { v.side };
            vertices.push(VertexSpec::new(gid(i, &v.id), side));
        }
        for &(x, y, mult) in g.edges() {
            edges.push(EdgeSpec::new(gid(i, g.id(x)), gid(i, g.id(y)), mult));
        }
    }

    // next unused plus / minus terminal per copy
    let mut cursor = vec![(0usize, 0usize); b.vertex_count()];
    let mut occupancy = Vec::new();
    let mut added = 0u64;
    let take = |i: usize, plus: bool, cursor: &mut Vec<(usize, usize)>| -> String {
        let c = &mut cursor[i];
        let id = if plus {
            c.0 += 1;
            &tp[c.0 - 1]
        } else {
            c.1 += 1;
            &tm[c.1 - 1]
        };
        gid(i, id)
    };
    for &(x, y, mult) in b.edges() {
        for _ in 0..mult {
            for plus in [true, false] {
                let a = take(x, plus, &mut cursor);
                let other_plus = if derived.ferromagnetic { !plus } else { plus };
                let c = take(y, other_plus, &mut cursor);
                occupancy.push(Occupancy { owner: b.id(x).into(), terminal: a.clone(), usage: TerminalUse::Edge { other: c.clone() } });
                occupancy.push(Occupancy { owner: b.id(y).into(), terminal: c.clone(), usage: TerminalUse::Edge { other: a.clone() } });
                edges.push(EdgeSpec::new(a, c, 1));
                added += 1;
            }
        }
    }
    // with side flips decided, the breaker copy is flipped to match its terminal
    let side_of: std::collections::HashMap<String, Side> = vertices.iter().map(|v| (v.id.clone(), v.side)).collect();
    for i in (0..b.vertex_count()).filter(|&i| field[i]) {
        let t = take(i, true, &mut cursor);
        let flip = side_of[&t] != h.side(attach);
        let hid = |x: usize| if x == attach { t.clone() } else { format!("h{}:{}", b.id(i), h.id(x)) };
        for x in (0..h.vertex_count()).filter(|&x| x != attach) {
            let side = if flip { h.side(x).flip() } else { h.side(x) };
            vertices.push(VertexSpec::new(hid(x), side));
        }
        for &(x, y, mult) in h.edges() {
            edges.push(EdgeSpec::new(hid(x), hid(y), mult));
            if x == attach || y == attach {
                added += mult as u64;
            }
        }
        occupancy.push(Occupancy { owner: b.id(i).into(), terminal: t, usage: TerminalUse::Breaker });
    }

    let b_prime = build_graph(vertices, edges, None, None, None)?;
    let mut seen = HashSet::new();
    let reuse_free = occupancy.iter().all(|o| seen.insert(o.terminal.clone()));
    let max_degree = b_prime.max_degree();
    let audit = ConstructionAudit {
        bipartite: b_prime.sides_are_proper(),
        max_degree,
        degree_ok: max_degree <= delta,
        reuse_free,
        added_edges: added,
        expected_added_edges: 2 * b.edge_count() + field.iter().filter(|&&f| f).count() as u64,
    };
    if !audit.degree_ok {
        let worst = (0..b_prime.vertex_count()).max_by_key(|&i| b_prime.degree(i)).expect("nonempty");
        return Err(SpinError::DegreeBoundViolated {
            vertex: b_prime.id(worst).into(),
            degree: max_degree,
            bound: delta,
        });
    }
    Ok(IsingReductionPlan { derived, b_prime, occupancy, audit })
}

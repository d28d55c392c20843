//! Gadget families: unary symmetry breakers, random phase gadgets and the
//! balancing construction, plus exact verification of small instances.

mod balance;
mod sample;
mod symbreak;

pub use balance::balance_gadget;
pub use sample::{phase_gadget_sizes, sample_phase_gadget, SampleSpec, DEFAULT_MAX_REJECTIONS};
pub use symbreak::{h_k, symmetry_breaking_search, SymmetryBreaker, SymmetryBreaking};

use serde::{Deserialize, Serialize};

use crate::error::{Result, SpinError};
use crate::exact::Engine;
use crate::graph::{build_graph, BipartiteMultigraph, EdgeSpec, PhaseLayout, Terminals, VertexSpec};
use crate::network::to_weighted_network;
use crate::params::SpinParams;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GadgetMetadata {
    pub family: String,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Terminals per sign.
    pub t: usize,
    #[serde(default)]
    pub t_prime: Option<usize>,
    #[serde(default)]
    pub tree_depth: Option<u32>,
    #[serde(default)]
    pub theta: Option<f64>,
    #[serde(default)]
    pub psi: Option<f64>,
    #[serde(default)]
    pub n_side: Option<usize>,
    #[serde(default)]
    pub delta: Option<u32>,
}

/// Serialized gadget: the graph fields plus the phase layout and metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GadgetDoc {
    pub vertices: Vec<VertexSpec>,
    pub edges: Vec<EdgeSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field_subset: Option<Vec<String>>,
    pub terminals: Terminals,
    pub layout: PhaseLayout,
    pub metadata: GadgetMetadata,
}

/// A graph with terminals `T+`, `T-` and a phase layout `V+`, `V-`.
#[derive(Debug, Clone, PartialEq)]
pub struct Gadget {
    pub graph: BipartiteMultigraph,
    pub layout: PhaseLayout,
    pub metadata: GadgetMetadata,
}

impl Gadget {
    pub fn new(graph: BipartiteMultigraph, layout: PhaseLayout, metadata: GadgetMetadata) -> Result<Gadget> {
        for id in layout.plus.iter().chain(&layout.minus) {
            graph.require_index(id)?;
        }
        let mut seen = std::collections::HashSet::new();
        for id in layout.plus.iter().chain(&layout.minus) {
            if !seen.insert(id.as_str()) {
                return Err(SpinError::DuplicateVertex(id.clone()));
            }
        }
        Ok(Gadget { graph, layout, metadata })
    }

    pub fn terminal_ids(&self) -> (Vec<String>, Vec<String>) {
        self.graph.terminal_ids()
    }

    /// Degree bound (terminals one below), equal terminal counts and a proper side labelling.
    pub fn check_invariants(&self, delta: u32) -> Result<()> {
        self.graph.check_degree_bound(delta)?;
        let (p, m) = self.terminal_ids();
        if p.len() != m.len() {
            return Err(SpinError::InfeasibleSizes(format!("{} plus terminals but {} minus", p.len(), m.len())));
        }
        if !self.graph.sides_are_proper() || self.graph.two_coloring().is_none() {
            let &(u, v, _) = self.graph.edges().first().expect("a non-bipartite graph has edges");
            return Err(SpinError::NonBipartite { u: self.graph.id(u).into(), v: self.graph.id(v).into() });
        }
        Ok(())
    }

    pub fn to_doc(&self) -> GadgetDoc {
        let g = self.graph.to_doc();
        GadgetDoc {
            vertices: g.vertices,
            edges: g.edges,
            field_subset: g.field_subset,
            terminals: g.terminals.unwrap_or_default(),
            layout: self.layout.clone(),
            metadata: self.metadata.clone(),
        }
    }

    pub fn from_doc(doc: GadgetDoc) -> Result<Gadget> {
        let graph = build_graph(doc.vertices, doc.edges, doc.field_subset, Some(doc.terminals), doc.metadata.delta)?;
        Gadget::new(graph, doc.layout, doc.metadata)
    }

    pub fn from_json(bytes: &[u8]) -> Result<Gadget> {
        let doc: GadgetDoc = serde_json::from_slice(bytes).map_err(|e| SpinError::Parse(e.to_string()))?;
        Gadget::from_doc(doc)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_doc()).expect("gadget documents always serialize")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

/// Product measure on terminal configurations. Under `Plus`, plus terminals
/// take spin 1 with probability `q+` and minus terminals with `q-`; `Minus`
/// swaps the roles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QMeasure {
    pub q_minus: f64,
    pub q_plus: f64,
    pub n_plus: usize,
    pub n_minus: usize,
    pub phase: Phase,
}

pub fn q_product_measure(q_minus: f64, q_plus: f64, t_plus: &[String], t_minus: &[String], phase: Phase) -> Result<QMeasure> {
    if !(0.0 < q_minus && q_minus <= q_plus && q_plus < 1.0) {
        return Err(SpinError::InvalidParameter(format!("need 0 < q- <= q+ < 1, got ({q_minus}, {q_plus})")));
    }
    Ok(QMeasure { q_minus, q_plus, n_plus: t_plus.len(), n_minus: t_minus.len(), phase })
}

impl QMeasure {
    /// Probability of the configuration whose bit `j` is the spin of the
    /// `j`-th terminal, plus terminals first.
    pub fn prob(&self, tau: usize) -> f64 {
        let (a, b) = match self.phase {
            Phase::Plus => (self.q_plus, self.q_minus),
            Phase::Minus => (self.q_minus, self.q_plus),
        };
        let mut p = 1.0;
        for j in 0..self.n_plus + self.n_minus {
            let q = if j < self.n_plus { a } else { b };
            p *= if (tau >> j) & 1 == 1 { q } else { 1.0 - q };
        }
        p
    }

    pub fn table(&self) -> Vec<f64> {
        (0..1usize << (self.n_plus + self.n_minus)).map(|t| self.prob(t)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GadgetVerdict {
    /// `(Pr[Y=+], Pr[Y=-])`.
    pub phase_balance: (f64, f64),
    /// Per phase, the largest `|Pr(τ | Y=π) / Q^π(τ) - 1|` over terminal configurations.
    pub max_ratio_deviation: [f64; 2],
    pub balance_ok: bool,
    pub deviation_ok: bool,
    pub passed: bool,
    pub epsilon: f64,
}

/// Exact phase balance and terminal-distribution deviations of a small gadget.
pub fn verify_gadget(
    gadget: &Gadget,
    params: &SpinParams,
    q_minus: f64,
    q_plus: f64,
    epsilon: f64,
    engine: &Engine,
) -> Result<GadgetVerdict> {
    let (tp, tm) = gadget.terminal_ids();
    let net = to_weighted_network(&gadget.graph, params);
    let dec = engine.phase_decomposition(&net, &gadget.layout, &tp, &tm)?;
    let (pp, pm) = dec.phase_probabilities();
    let deviation = |table: &[f64], phase: Phase| -> Result<f64> {
        let q = q_product_measure(q_minus, q_plus, &tp, &tm, phase)?;
        if table.iter().all(|&x| x == 0.0) {
            return Ok(f64::INFINITY);
        }
        Ok(table.iter().enumerate().map(|(t, &x)| (x / q.prob(t) - 1.0).abs()).fold(0.0, f64::max))
    };
    let dev = [deviation(&dec.table_plus, Phase::Plus)?, deviation(&dec.table_minus, Phase::Minus)?];
    let balance_ok = pp.min(pm) >= (1.0 - epsilon) / 2.0;
    let deviation_ok = dev[0] <= epsilon && dev[1] <= epsilon;
    Ok(GadgetVerdict {
        phase_balance: (pp, pm),
        max_ratio_deviation: dev,
        balance_ok,
        deviation_ok,
        passed: balance_ok && deviation_ok,
        epsilon,
    })
}

/// Zero-padded index so that string order equals numeric order.
pub(crate) fn padded(prefix: &str, i: usize, count: usize) -> String {
    let width = count.saturating_sub(1).to_string().len();
    format!("{prefix}{i:0width$}")
}

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Result, SpinError};
use crate::graph::BipartiteMultigraph;
use crate::params::SpinParams;

/// Interaction on one edge; `w[s_u][s_v]`.
#[derive(Debug, Clone, PartialEq)]
pub struct NetEdge {
    pub u: usize,
    pub v: usize,
    pub w: [[f64; 2]; 2],
}

impl NetEdge {
    /// Matrix seen from endpoint `x`: rows indexed by the spin of `x`.
    fn oriented_from(&self, x: usize) -> [[f64; 2]; 2] {
        if x == self.u {
            self.w
        } else {
            transpose(self.w)
        }
    }

    fn other(&self, x: usize) -> usize {
        if x == self.u {
            self.v
        } else {
            self.u
        }
    }
}

fn transpose(m: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    [[m[0][0], m[1][0]], [m[0][1], m[1][1]]]
}

/// Generalized 2-state network: per-vertex weight vectors, per-edge 2x2
/// matrices and a factored-out log scale. Represents
/// `exp(log_scale) * Σ_σ Π_v ω_v(σ_v) Π_e W_e(σ_u, σ_v)` over the kept vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedNetwork {
    ids: Vec<String>,
    weights: Vec<[f64; 2]>,
    edges: Vec<NetEdge>,
    alive: Vec<bool>,
    log_scale: f64,
}

/// Partial or total spin assignment keyed by vertex id.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Configuration(pub BTreeMap<String, u8>);

impl Configuration {
    pub fn from_pairs<I, S>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (S, u8)>,
        S: Into<String>,
    {
        Configuration(pairs.into_iter().map(|(k, v)| (k.into(), v)).collect())
    }
}

fn check_weight(x: f64, what: &str) -> Result<()> {
    if x.is_finite() && x >= 0.0 {
        Ok(())
    } else {
        Err(SpinError::InvalidParameter(format!("{what} must be finite and >= 0, got {x}")))
    }
}

impl WeightedNetwork {
    /// General constructor. Edge records on the same vertex pair are merged
    /// by elementwise product.
    pub fn new(ids: Vec<String>, weights: Vec<[f64; 2]>, edges: Vec<NetEdge>, log_scale: f64) -> Result<Self> {
        if ids.len() != weights.len() {
            return Err(SpinError::InvalidParameter("one weight vector per vertex is required".into()));
        }
        let mut seen = HashSet::new();
        for id in &ids {
            if !seen.insert(id.as_str()) {
                return Err(SpinError::DuplicateVertex(id.clone()));
            }
        }
        for w in &weights {
            check_weight(w[0], "vertex weight")?;
            check_weight(w[1], "vertex weight")?;
        }
        if log_scale.is_nan() || log_scale == f64::INFINITY {
            return Err(SpinError::InvalidParameter("log_scale must be finite".into()));
        }
        let mut merged: Vec<NetEdge> = Vec::with_capacity(edges.len());
        let mut slot: HashMap<(usize, usize), usize> = HashMap::new();
        for e in edges {
            if e.u >= ids.len() || e.v >= ids.len() {
                return Err(SpinError::UnknownVertex(format!("#{}", e.u.max(e.v))));
            }
            if e.u == e.v {
                return Err(SpinError::InvalidParameter(format!("self-loop at `{}`", ids[e.u])));
            }
            for row in e.w {
                for x in row {
                    check_weight(x, "edge weight")?;
                }
            }
            let key = (e.u.min(e.v), e.u.max(e.v));
            match slot.get(&key) {
                Some(&k) => {
                    let m = e.oriented_from(merged[k].u);
                    for a in 0..2 {
                        for b in 0..2 {
                            merged[k].w[a][b] *= m[a][b];
                        }
                    }
                }
                None => {
                    slot.insert(key, merged.len());
                    merged.push(e);
                }
            }
        }
        let alive = vec![true; ids.len()];
        Ok(WeightedNetwork { ids, weights, edges: merged, alive, log_scale })
    }

    pub fn log_scale(&self) -> f64 {
        self.log_scale
    }

    /// Ids of the vertices not yet eliminated, in index order.
    pub fn kept_vertices(&self) -> Vec<&str> {
        self.kept_indices().map(|i| self.ids[i].as_str()).collect()
    }

    pub fn kept_count(&self) -> usize {
        self.alive.iter().filter(|&&a| a).count()
    }

    pub(crate) fn kept_indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.ids.len()).filter(|&i| self.alive[i])
    }

    pub fn id(&self, i: usize) -> &str {
        &self.ids[i]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.ids.iter().position(|x| x == id).filter(|&i| self.alive[i])
    }

    pub fn vertex_weight(&self, id: &str) -> Option<[f64; 2]> {
        self.index_of(id).map(|i| self.weights[i])
    }

    pub(crate) fn weight_at(&self, i: usize) -> [f64; 2] {
        self.weights[i]
    }

    pub fn edges(&self) -> &[NetEdge] {
        &self.edges
    }

    /// Edge matrix between two kept vertices, oriented `[s_u][s_v]`.
    pub fn edge_matrix(&self, u: &str, v: &str) -> Option<[[f64; 2]; 2]> {
        let (a, b) = (self.index_of(u)?, self.index_of(v)?);
        self.edges
            .iter()
            .find(|e| (e.u == a && e.v == b) || (e.u == b && e.v == a))
            .map(|e| e.oriented_from(a))
    }

    fn resolve(&self, ids: &[&str]) -> Result<Vec<bool>> {
        let pos: HashMap<&str, usize> = self.kept_indices().map(|i| (self.ids[i].as_str(), i)).collect();
        let mut mask = vec![false; self.ids.len()];
        for id in ids {
            let i = *pos.get(id).ok_or_else(|| SpinError::UnknownVertex(id.to_string()))?;
            mask[i] = true;
        }
        Ok(mask)
    }

    fn normalize(&mut self, i: usize) {
        let m = self.weights[i][0].max(self.weights[i][1]);
        if m > 0.0 {
            self.weights[i][0] /= m;
            self.weights[i][1] /= m;
            self.log_scale += m.ln();
        }
    }

    /// Repeatedly folds unprotected degree-1 vertices into their neighbor and
    /// unprotected isolated vertices into the log scale.
    pub fn eliminate_pendants(&self, protected: &[&str]) -> Result<WeightedNetwork> {
        let protect = self.resolve(protected)?;
        let mut net = self.clone();
        let n = net.ids.len();
        let mut incident: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (k, e) in net.edges.iter().enumerate() {
            incident[e.u].push(k);
            incident[e.v].push(k);
        }
        let mut deg: Vec<usize> = incident.iter().map(Vec::len).collect();
        let mut edge_alive = vec![true; net.edges.len()];
        let mut stack: Vec<usize> = (0..n).rev().filter(|&i| net.alive[i] && !protect[i] && deg[i] <= 1).collect();

        while let Some(u) = stack.pop() {
            if !net.alive[u] || protect[u] || deg[u] > 1 {
                continue;
            }
            net.alive[u] = false;
            let wu = net.weights[u];
            if deg[u] == 0 {
                net.log_scale += (wu[0] + wu[1]).ln();
                continue;
            }
            let k = *incident[u].iter().find(|&&k| edge_alive[k]).expect("degree-1 vertex has a live edge");
            edge_alive[k] = false;
            let e = &net.edges[k];
            let m = e.oriented_from(u);
            let v = e.other(u);
            for s in 0..2 {
                net.weights[v][s] *= wu[0] * m[0][s] + wu[1] * m[1][s];
            }
            net.normalize(v);
            deg[u] = 0;
            deg[v] -= 1;
            if !protect[v] && deg[v] <= 1 {
                stack.push(v);
            }
        }
        let edges = net.edges.iter().zip(&edge_alive).filter(|(_, &a)| a).map(|(e, _)| e.clone()).collect();
        net.edges = edges;
        Ok(net)
    }

    /// Fixes the spins of some kept vertices, folding their weights and
    /// incident interactions into neighbors and the log scale.
    pub fn clamp(&self, partial: &Configuration) -> Result<WeightedNetwork> {
        let mut fixed: Vec<Option<usize>> = vec![None; self.ids.len()];
        for (id, &s) in &partial.0 {
            if s > 1 {
                return Err(SpinError::InvalidParameter(format!("spin of `{id}` must be 0 or 1")));
            }
            let i = self.index_of(id).ok_or_else(|| SpinError::UnknownVertex(id.clone()))?;
            fixed[i] = Some(s as usize);
        }
        let mut net = self.clone();
        let mut touched = HashSet::new();
        let mut kept_edges = Vec::new();
        for e in &self.edges {
            match (fixed[e.u], fixed[e.v]) {
                (Some(a), Some(b)) => net.log_scale += e.w[a][b].ln(),
                (Some(a), None) => {
                    for t in 0..2 {
                        net.weights[e.v][t] *= e.w[a][t];
                    }
                    touched.insert(e.v);
                }
                (None, Some(b)) => {
                    for t in 0..2 {
                        net.weights[e.u][t] *= e.w[t][b];
                    }
                    touched.insert(e.u);
                }
                (None, None) => kept_edges.push(e.clone()),
            }
        }
        for (i, f) in fixed.iter().enumerate() {
            if let Some(s) = *f {
                net.log_scale += self.weights[i][s].ln();
                net.alive[i] = false;
            }
        }
        let mut touched: Vec<usize> = touched.into_iter().collect();
        touched.sort_unstable();
        for i in touched {
            net.normalize(i);
        }
        net.edges = kept_edges;
        Ok(net)
    }
}

fn elementwise_power(m: [[f64; 2]; 2], t: u32) -> [[f64; 2]; 2] {
    let p = |x: f64| x.powi(t as i32);
    [[p(m[0][0]), p(m[0][1])], [p(m[1][0]), p(m[1][1])]]
}

/// Network for `Z_{B,U}`: field `λ` on the field subset (all vertices when
/// absent), matrix `[[β,1],[1,γ]]` raised elementwise to each multiplicity.
pub fn to_weighted_network(graph: &BipartiteMultigraph, params: &SpinParams) -> WeightedNetwork {
    let mask = graph.field_mask();
    let ids = graph.vertices().iter().map(|v| v.id.clone()).collect();
    let weights = mask.iter().map(|&f| if f { [1.0, params.lambda] } else { [1.0, 1.0] }).collect();
    let m = params.edge_matrix();
    let edges = graph.edges().iter().map(|&(u, v, t)| NetEdge { u, v, w: elementwise_power(m, t) }).collect();
    WeightedNetwork::new(ids, weights, edges, 0.0).expect("validated graph and params give a valid network")
}

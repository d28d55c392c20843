use std::collections::{HashMap, HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Result, SpinError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Side {
    L,
    R,
}

impl Side {
    pub fn flip(self) -> Side {
        match self {
            Side::L => Side::R,
            Side::R => Side::L,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VertexSpec {
    pub id: String,
    pub side: Side,
}

impl VertexSpec {
    pub fn new(id: impl Into<String>, side: Side) -> Self {
        VertexSpec { id: id.into(), side }
    }
}

fn one() -> u32 {
    1
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeSpec {
    pub u: String,
    pub v: String,
    #[serde(default = "one")]
    pub mult: u32,
}

impl EdgeSpec {
    pub fn new(u: impl Into<String>, v: impl Into<String>, mult: u32) -> Self {
        EdgeSpec { u: u.into(), v: v.into(), mult }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Terminals {
    pub plus: Vec<String>,
    pub minus: Vec<String>,
}

/// Serialized form of a graph; field names follow the JSON schema.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphDoc {
    pub vertices: Vec<VertexSpec>,
    pub edges: Vec<EdgeSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field_subset: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub terminals: Option<Terminals>,
}

/// Bipartite multigraph with side labels, multiplicity counters, an optional
/// field subset and optional terminal sets. Immutable once built.
#[derive(Debug, Clone)]
pub struct BipartiteMultigraph {
    vertices: Vec<VertexSpec>,
    edges: Vec<(usize, usize, u32)>,
    field_subset: Option<Vec<usize>>,
    terminals: Option<(Vec<usize>, Vec<usize>)>,
    index: HashMap<String, usize>,
    degree: Vec<u32>,
}

impl PartialEq for BipartiteMultigraph {
    fn eq(&self, other: &Self) -> bool {
        self.vertices == other.vertices
            && self.edges == other.edges
            && self.field_subset == other.field_subset
            && self.terminals == other.terminals
    }
}

/// Validates and builds a graph. With `degree_bound = Some(d)` every vertex
/// must have degree at most `d` and every terminal at most `d - 1`.
pub fn build_graph(
    vertices: Vec<VertexSpec>,
    edges: Vec<EdgeSpec>,
    field_subset: Option<Vec<String>>,
    terminals: Option<Terminals>,
    degree_bound: Option<u32>,
) -> Result<BipartiteMultigraph> {
    let mut index = HashMap::with_capacity(vertices.len());
    for (i, v) in vertices.iter().enumerate() {
        if index.insert(v.id.clone(), i).is_some() {
            return Err(SpinError::DuplicateVertex(v.id.clone()));
        }
    }
    let lookup = |id: &str| index.get(id).copied().ok_or_else(|| SpinError::UnknownVertex(id.to_string()));

    let mut degree = vec![0u32; vertices.len()];
    let mut idx_edges = Vec::with_capacity(edges.len());
    for e in &edges {
        let (a, b) = (lookup(&e.u)?, lookup(&e.v)?);
        if vertices[a].side == vertices[b].side {
            return Err(SpinError::NonBipartite { u: e.u.clone(), v: e.v.clone() });
        }
        if e.mult == 0 {
            return Err(SpinError::InvalidParameter(format!("edge {}-{} has multiplicity 0", e.u, e.v)));
        }
        degree[a] = degree[a].saturating_add(e.mult);
        degree[b] = degree[b].saturating_add(e.mult);
        idx_edges.push((a, b, e.mult));
    }

    let unique_ids = |ids: &[String]| -> Result<Vec<usize>> {
        let mut seen = HashSet::new();
        ids.iter()
            .map(|id| {
                let i = lookup(id)?;
                if !seen.insert(i) {
                    return Err(SpinError::DuplicateVertex(id.clone()));
                }
                Ok(i)
            })
            .collect()
    };

    let field_subset = field_subset.as_deref().map(unique_ids).transpose()?;

    let terminals = match terminals {
        None => None,
        Some(t) => {
            let plus = unique_ids(&t.plus)?;
            let minus = unique_ids(&t.minus)?;
            let plus_set: HashSet<usize> = plus.iter().copied().collect();
            if let Some(&clash) = minus.iter().find(|i| plus_set.contains(i)) {
                return Err(SpinError::TerminalOverlap(vertices[clash].id.clone()));
            }
            check_terminal_sides(&vertices, &plus, &minus)?;
            Some((plus, minus))
        }
    };

    let g = BipartiteMultigraph { vertices, edges: idx_edges, field_subset, terminals, index, degree };
    if let Some(d) = degree_bound {
        g.check_degree_bound(d)?;
    }
    Ok(g)
}

fn check_terminal_sides(vertices: &[VertexSpec], plus: &[usize], minus: &[usize]) -> Result<()> {
    let side_of = |set: &[usize], name: &str| -> Result<Option<Side>> {
        let mut side = None;
        for &i in set {
            match side {
                None => side = Some(vertices[i].side),
                Some(s) if s != vertices[i].side => {
                    return Err(SpinError::TerminalSides(format!("{name} terminals lie on both sides")))
                }
                _ => {}
            }
        }
        Ok(side)
    };
    if let (Some(p), Some(m)) = (side_of(plus, "plus")?, side_of(minus, "minus")?) {
        if p == m {
            return Err(SpinError::TerminalSides("plus and minus terminals share a side".into()));
        }
    }
    Ok(())
}

impl BipartiteMultigraph {
    pub fn from_doc(doc: GraphDoc, degree_bound: Option<u32>) -> Result<Self> {
        build_graph(doc.vertices, doc.edges, doc.field_subset, doc.terminals, degree_bound)
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        let doc: GraphDoc = serde_json::from_slice(bytes).map_err(|e| SpinError::Parse(e.to_string()))?;
        Self::from_doc(doc, None)
    }

    pub fn to_doc(&self) -> GraphDoc {
        let ids = |v: &[usize]| v.iter().map(|&i| self.vertices[i].id.clone()).collect::<Vec<_>>();
        GraphDoc {
            vertices: self.vertices.clone(),
            edges: self
                .edges
                .iter()
                .map(|&(a, b, m)| EdgeSpec::new(self.vertices[a].id.clone(), self.vertices[b].id.clone(), m))
                .collect(),
            field_subset: self.field_subset.as_deref().map(ids),
            terminals: self.terminals.as_ref().map(|(p, m)| Terminals { plus: ids(p), minus: ids(m) }),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_doc()).expect("graph documents always serialize")
    }

    pub fn check_degree_bound(&self, delta: u32) -> Result<()> {
        for (i, &d) in self.degree.iter().enumerate() {
            if d > delta {
                return Err(SpinError::DegreeBoundViolated { vertex: self.vertices[i].id.clone(), degree: d, bound: delta });
            }
        }
        if let Some((p, m)) = &self.terminals {
            for &i in p.iter().chain(m) {
                if self.degree[i] + 1 > delta {
                    return Err(SpinError::DegreeBoundViolated {
                        vertex: self.vertices[i].id.clone(),
                        degree: self.degree[i],
                        bound: delta - 1,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn vertices(&self) -> &[VertexSpec] {
        &self.vertices
    }

    /// Edges as `(u, v, multiplicity)` index triples, in input order.
    pub fn edges(&self) -> &[(usize, usize, u32)] {
        &self.edges
    }

    /// Number of edges counted with multiplicity.
    pub fn edge_count(&self) -> u64 {
        self.edges.iter().map(|&(_, _, m)| m as u64).sum()
    }

    pub fn id(&self, i: usize) -> &str {
        &self.vertices[i].id
    }

    pub fn side(&self, i: usize) -> Side {
        self.vertices[i].side
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn require_index(&self, id: &str) -> Result<usize> {
        self.index_of(id).ok_or_else(|| SpinError::UnknownVertex(id.to_string()))
    }

    pub fn degree(&self, i: usize) -> u32 {
        self.degree[i]
    }

    pub fn max_degree(&self) -> u32 {
        self.degree.iter().copied().max().unwrap_or(0)
    }

    pub fn field_subset(&self) -> Option<&[usize]> {
        self.field_subset.as_deref()
    }

    /// Whether vertex `i` carries the field; an absent subset means all vertices.
    pub fn in_field(&self, i: usize) -> bool {
        match &self.field_subset {
            None => true,
            Some(u) => u.contains(&i),
        }
    }

    pub fn field_mask(&self) -> Vec<bool> {
        match &self.field_subset {
            None => vec![true; self.vertices.len()],
            Some(u) => {
                let mut mask = vec![false; self.vertices.len()];
                for &i in u {
                    mask[i] = true;
                }
                mask
            }
        }
    }

    pub fn terminals(&self) -> Option<(&[usize], &[usize])> {
        self.terminals.as_ref().map(|(p, m)| (p.as_slice(), m.as_slice()))
    }

    pub fn terminal_ids(&self) -> (Vec<String>, Vec<String>) {
        match &self.terminals {
            None => (vec![], vec![]),
            Some((p, m)) => (
                p.iter().map(|&i| self.vertices[i].id.clone()).collect(),
                m.iter().map(|&i| self.vertices[i].id.clone()).collect(),
            ),
        }
    }

    /// Neighbor lists `(neighbor, multiplicity)`; parallel edge records stay separate.
    pub fn adjacency(&self) -> Vec<Vec<(usize, u32)>> {
        let mut adj = vec![Vec::new(); self.vertices.len()];
        for &(a, b, m) in &self.edges {
            adj[a].push((b, m));
            adj[b].push((a, m));
        }
        adj
    }

    /// Proper 2-colouring found by BFS, ignoring the stored side labels.
    /// `None` if the underlying graph has an odd cycle.
    pub fn two_coloring(&self) -> Option<Vec<bool>> {
        let adj = self.adjacency();
        let mut color: Vec<Option<bool>> = vec![None; self.vertices.len()];
        for s in 0..self.vertices.len() {
            if color[s].is_some() {
                continue;
            }
            color[s] = Some(false);
            let mut queue = VecDeque::from([s]);
            while let Some(x) = queue.pop_front() {
                let cx = color[x].unwrap();
                for &(y, _) in &adj[x] {
                    match color[y] {
                        None => {
                            color[y] = Some(!cx);
                            queue.push_back(y);
                        }
                        Some(cy) if cy == cx => return None,
                        _ => {}
                    }
                }
            }
        }
        Some(color.into_iter().map(|c| c.unwrap()).collect())
    }

    /// Independent parity audit: the side labels form a proper 2-colouring.
    pub fn sides_are_proper(&self) -> bool {
        self.edges.iter().all(|&(a, b, _)| self.vertices[a].side != self.vertices[b].side)
    }
}

/// Assignment of vertices to the two phase sides of a gadget.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseLayout {
    pub plus: Vec<String>,
    pub minus: Vec<String>,
}

impl PhaseLayout {
    /// Layout with `V+` = the side of the plus terminals (or side L without terminals).
    pub fn from_sides(g: &BipartiteMultigraph) -> PhaseLayout {
        let plus_side = g.terminals().and_then(|(p, _)| p.first().map(|&i| g.side(i))).unwrap_or(Side::L);
        let mut layout = PhaseLayout::default();
        for v in g.vertices() {
            if v.side == plus_side {
                layout.plus.push(v.id.clone());
            } else {
                layout.minus.push(v.id.clone());
            }
        }
        layout
    }
}

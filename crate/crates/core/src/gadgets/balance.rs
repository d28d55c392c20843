//! Balancing: glue two copies of a gadget along `t'` terminals per sign so
//! that the phase of the second copy pulls the first towards balance.

use super::{Gadget, GadgetMetadata};
use crate::error::{Result, SpinError};
use crate::graph::{build_graph, EdgeSpec, PhaseLayout, Terminals, VertexSpec};
use crate::params::SpinParams;

fn lexicographic_first(ids: &[String], count: usize) -> Vec<String> {
    let mut sorted = ids.to_vec();
    sorted.sort();
    sorted.truncate(count);
    sorted
}

/// Builds `K` from copies `1:G` and `2:G`. For `βγ < 1` the second copy has
/// its sides flipped and `T^π(G1)` is matched to `T^π(G2)`; for `βγ > 1`
/// plus terminals of one copy are matched to minus terminals of the other.
/// The lexicographically first `t'` terminals of each set are used. `K`
/// keeps the unmatched terminals and the phase layout of the first copy.
pub fn balance_gadget(gadget: &Gadget, t_prime: usize, params: &SpinParams) -> Result<Gadget> {
    if params.is_degenerate() {
        return Err(SpinError::DegenerateParameters(format!("beta*gamma = {} is 1", params.bc())));
    }
    let antiferro = params.bc() < 1.0;
    let (tp, tm) = gadget.terminal_ids();
    if tp.len() < t_prime || tm.len() < t_prime {
        return Err(SpinError::NotEnoughTerminals(format!(
            "need {t_prime} terminals per sign, have {} plus and {} minus",
            tp.len(),
            tm.len()
        )));
    }
    let g = &gadget.graph;
    let one = |id: &str| format!("1:{id}");
    let two = |id: &str| format!("2:{id}");

    let mut vertices: Vec<VertexSpec> = g.vertices().iter().map(|v| VertexSpec::new(one(&v.id), v.side)).collect();
    vertices.extend(
        g.vertices().iter().map(|v| VertexSpec::new(two(&v.id), if antiferro { v.side.flip() } else { v.side })),
    );
    let mut edges = Vec::with_capacity(2 * g.edges().len() + 2 * t_prime);
    for copy in [&one as &dyn Fn(&str) -> String, &two] {
        for &(u, v, mult) in g.edges() {
            edges.push(EdgeSpec::new(copy(g.id(u)), copy(g.id(v)), mult));
        }
    }

    let (plus1, minus1) = (lexicographic_first(&tp, t_prime), lexicographic_first(&tm, t_prime));
    let (plus2, minus2) = if antiferro { (plus1.clone(), minus1.clone()) } else { (minus1.clone(), plus1.clone()) };
    for (a, b) in plus1.iter().zip(&plus2).chain(minus1.iter().zip(&minus2)) {
        edges.push(EdgeSpec::new(one(a), two(b), 1));
    }

    let keep = |all: &[String], used: &[String]| -> Vec<String> {
        all.iter().filter(|id| !used.contains(id)).map(|id| one(id)).collect()
    };
    let terminals = Terminals { plus: keep(&tp, &plus1), minus: keep(&tm, &minus1) };
    let field_subset = g.field_subset().map(|f| {
        f.iter().map(|&i| one(g.id(i))).chain(f.iter().map(|&i| two(g.id(i)))).collect()
    });
    let graph = build_graph(vertices, edges, field_subset, Some(terminals), params.delta)?;
    let layout = PhaseLayout {
        plus: gadget.layout.plus.iter().map(|id| one(id)).collect(),
        minus: gadget.layout.minus.iter().map(|id| one(id)).collect(),
    };
    let metadata = GadgetMetadata {
        family: "balanced".into(),
        t: tp.len() - t_prime,
        t_prime: Some(t_prime),
        ..gadget.metadata.clone()
    };
    Gadget::new(graph, layout, metadata)
}

//! Shared helpers for the integration tests: a definition-level oracle that
//! sums `w(σ)` over all configurations, and seeded random graph generators.
#![allow(dead_code)]

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use spinlab_core::graph::{build_graph, BipartiteMultigraph, EdgeSpec, Side, VertexSpec};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `Σ_σ Π_e M(σ_u,σ_v)^mult Π_{v∈U} λ^{σ_v}`, straight from the definition.
pub fn brute_z(g: &BipartiteMultigraph, beta: f64, gamma: f64, lambda: f64) -> f64 {
    let n = g.vertex_count();
    assert!(n <= 20, "brute force is for small graphs");
    let m = [[beta, 1.0], [1.0, gamma]];
    let field = g.field_mask();
    let mut z = 0.0;
    for mask in 0u32..(1 << n) {
        let s = |i: usize| ((mask >> i) & 1) as usize;
        let mut w = 1.0;
        for &(u, v, t) in g.edges() {
            w *= m[s(u)][s(v)].powi(t as i32);
        }
        for (i, &f) in field.iter().enumerate() {
            if f && s(i) == 1 {
                w *= lambda;
            }
        }
        z += w;
    }
    z
}

/// `Pr(σ_v = 1)` by the same enumeration.
pub fn brute_marginal(g: &BipartiteMultigraph, beta: f64, gamma: f64, lambda: f64, v: usize) -> f64 {
    let n = g.vertex_count();
    let m = [[beta, 1.0], [1.0, gamma]];
    let field = g.field_mask();
    let (mut z, mut z1) = (0.0, 0.0);
    for mask in 0u32..(1 << n) {
        let s = |i: usize| ((mask >> i) & 1) as usize;
        let mut w = 1.0;
        for &(a, b, t) in g.edges() {
            w *= m[s(a)][s(b)].powi(t as i32);
        }
        for (i, &f) in field.iter().enumerate() {
            if f && s(i) == 1 {
                w *= lambda;
            }
        }
        z += w;
        if s(v) == 1 {
            z1 += w;
        }
    }
    z1 / z
}

/// Independent sets by enumeration.
pub fn brute_independent_sets(g: &BipartiteMultigraph) -> u128 {
    let n = g.vertex_count();
    (0u32..(1 << n))
        .filter(|mask| g.edges().iter().all(|&(u, v, _)| (mask >> u) & 1 == 0 || (mask >> v) & 1 == 0))
        .count() as u128
}

/// Random bipartite multigraph on `1..=max_n` vertices with multiplicities
/// up to `max_mult`. The field subset is absent, empty or random.
pub fn random_graph(rng: &mut ChaCha8Rng, max_n: usize, max_mult: u32, random_field: bool) -> BipartiteMultigraph {
    let n = rng.gen_range(1..=max_n);
    let sides: Vec<Side> = (0..n).map(|_| if rng.gen_bool(0.5) { Side::L } else { Side::R }).collect();
    let vertices = (0..n).map(|i| VertexSpec::new(format!("v{i:02}"), sides[i])).collect();
    let density = rng.gen_range(0.1..0.7);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if sides[i] != sides[j] && rng.gen_bool(density) {
                edges.push(EdgeSpec::new(format!("v{i:02}"), format!("v{j:02}"), rng.gen_range(1..=max_mult)));
            }
        }
    }
    let field = if !random_field {
        None
    } else {
        match rng.gen_range(0..3) {
            0 => None,
            1 => Some(Vec::new()),
            _ => Some((0..n).filter(|_| rng.gen_bool(0.5)).map(|i| format!("v{i:02}")).collect()),
        }
    };
    build_graph(vertices, edges, field, None, None).expect("generator respects sides")
}

/// Random simple bipartite graph with at least one edge.
pub fn random_simple_graph(rng: &mut ChaCha8Rng, max_n: usize) -> BipartiteMultigraph {
    loop {
        let n = rng.gen_range(2..=max_n);
        let left = rng.gen_range(1..n);
        let vertices = (0..n).map(|i| VertexSpec::new(format!("v{i:02}"), if i < left { Side::L } else { Side::R })).collect();
        let mut edges = Vec::new();
        for i in 0..left {
            for j in left..n {
                if rng.gen_bool(0.4) {
                    edges.push(EdgeSpec::new(format!("v{i:02}"), format!("v{j:02}"), 1));
                }
            }
        }
        if !edges.is_empty() {
            return build_graph(vertices, edges, None, None, None).unwrap();
        }
    }
}

/// Random `(β, γ, λ)` with a share of exact zeros in `β` or `γ`.
pub fn random_params(rng: &mut ChaCha8Rng) -> (f64, f64, f64) {
    let mut draw = || rng.gen_range(0.05..3.0);
    let (mut beta, mut gamma) = (draw(), draw());
    let lambda = draw();
    match rng.gen_range(0..6) {
        0 => beta = 0.0,
        1 => gamma = 0.0,
        _ => {}
    }
    (beta, gamma, lambda)
}

pub fn path(n: usize) -> BipartiteMultigraph {
    let vs = (0..n).map(|i| VertexSpec::new(format!("p{i}"), if i % 2 == 0 { Side::L } else { Side::R })).collect();
    let es = (1..n).map(|i| EdgeSpec::new(format!("p{}", i - 1), format!("p{i}"), 1)).collect();
    build_graph(vs, es, None, None, None).unwrap()
}

pub fn cycle4() -> BipartiteMultigraph {
    let vs = (0..4).map(|i| VertexSpec::new(format!("c{i}"), if i % 2 == 0 { Side::L } else { Side::R })).collect();
    let es = (0..4).map(|i| EdgeSpec::new(format!("c{i}"), format!("c{}", (i + 1) % 4), 1)).collect();
    build_graph(vs, es, None, None, None).unwrap()
}

pub fn star3() -> BipartiteMultigraph {
    let mut vs = vec![VertexSpec::new("h", Side::L)];
    vs.extend((0..3).map(|i| VertexSpec::new(format!("x{i}"), Side::R)));
    let es = (0..3).map(|i| EdgeSpec::new("h", format!("x{i}"), 1)).collect();
    build_graph(vs, es, None, None, None).unwrap()
}

pub fn rel_gap(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

//! Random phase gadgets: a union of random matchings on `U ∪ W` conditioned on
//! simplicity, with `(Δ-1)`-ary trees hung off `W` whose roots are the terminals.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{padded, Gadget, GadgetMetadata};
use crate::error::{Result, SpinError};
use crate::graph::{build_graph, EdgeSpec, PhaseLayout, Side, Terminals, VertexSpec};
use crate::params::SpinParams;

/// A tuple of random matchings is simple with probability about
/// `exp(-C(Δ,2))`, so Δ = 5 already needs ~2·10⁴ attempts on average.
pub const DEFAULT_MAX_REJECTIONS: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SampleSpec {
    /// `|U+| = |U-|`.
    pub n_side: usize,
    /// `|W+| = |W-|`; must equal `t (Δ-1)^tree_depth`.
    pub r: usize,
    pub t: usize,
    pub tree_depth: u32,
    pub seed: u64,
    pub max_rejections: usize,
}

impl SampleSpec {
    pub fn new(n_side: usize, r: usize, t: usize, tree_depth: u32, seed: u64) -> SampleSpec {
        SampleSpec { n_side, r, t, tree_depth, seed, max_rejections: DEFAULT_MAX_REJECTIONS }
    }
}

/// Sizes prescribed for a gadget on `n` vertices per side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GadgetSizes {
    pub t: usize,
    pub tree_depth: u32,
    pub r: usize,
}

/// `t = b^⌊θ log_b n⌋`, `ℓ = 2⌊(ψ/2) log_b n⌋` and `r = t b^ℓ` with `b = Δ-1`.
pub fn phase_gadget_sizes(n: usize, theta: f64, psi: f64, delta: u32) -> Result<GadgetSizes> {
    if delta < 3 {
        return Err(SpinError::InvalidParameter(format!("delta must be >= 3, got {delta}")));
    }
    if !(theta > 0.0 && theta < 0.125 && psi > 0.0 && psi < 0.125) {
        return Err(SpinError::InvalidParameter(format!("theta and psi must lie in (0, 1/8), got {theta}, {psi}")));
    }
    if n < 1 {
        return Err(SpinError::InvalidParameter("n must be positive".into()));
    }
    let b = (delta - 1) as usize;
    let log_b = (n as f64).ln() / (b as f64).ln();
    let floor = |x: f64| (x + 1e-12).floor() as u32;
    let a = floor(theta * log_b);
    let tree_depth = 2 * floor(psi / 2.0 * log_b);
    let pow = |e: u32| b.checked_pow(e).ok_or_else(|| SpinError::InfeasibleSizes(format!("{b}^{e} overflows")));
    let t = pow(a)?;
    let r = t.checked_mul(pow(tree_depth)?).ok_or_else(|| SpinError::InfeasibleSizes("r overflows".into()))?;
    Ok(GadgetSizes { t, tree_depth, r })
}

fn side_of(sign: char) -> Side {
    if sign == '+' {
        Side::L
    } else {
        Side::R
    }
}

/// Samples the matching graph on `U ∪ W` (rejecting multigraphs) and hangs
/// `t` trees of depth `tree_depth` off each `W^π`. Plus vertices sit on side
/// `L`, minus vertices on side `R`, and the layout is the side partition.
pub fn sample_phase_gadget(params: &SpinParams, spec: &SampleSpec) -> Result<Gadget> {
    let delta = params.require_delta()?;
    if delta < 3 {
        return Err(SpinError::InvalidParameter(format!("delta must be >= 3, got {delta}")));
    }
    let SampleSpec { n_side: n, r, t, tree_depth, seed, max_rejections } = *spec;
    let b = (delta - 1) as usize;
    if tree_depth % 2 != 0 {
        return Err(SpinError::InfeasibleSizes(format!("tree depth {tree_depth} is odd")));
    }
    let leaves = b.checked_pow(tree_depth).and_then(|p| p.checked_mul(t));
    if t == 0 || leaves != Some(r) {
        return Err(SpinError::InfeasibleSizes(format!("r = {r} but t (delta-1)^depth = {leaves:?} with t = {t}")));
    }
    if n < r || n == 0 {
        return Err(SpinError::InfeasibleSizes(format!("n_side = {n} is smaller than r = {r}")));
    }

    // side-local index: 0..n are U, n..n+r are W
    let m = n + r;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs: Vec<(usize, usize)> = Vec::with_capacity(b * m + n);
    let mut rejections = 0;
    // row i holds the partners of plus vertex i drawn so far (at most Δ)
    let mut rows: Vec<Vec<usize>> = vec![Vec::with_capacity(delta as usize); m];
    let mut perm_m: Vec<usize> = (0..m).collect();
    let mut perm_n: Vec<usize> = (0..n).collect();
    loop {
        pairs.clear();
        rows.iter_mut().for_each(Vec::clear);
        let mut simple = true;
        let mut add = |i: usize, j: usize, pairs: &mut Vec<(usize, usize)>| {
            if simple {
                simple = !rows[i].contains(&j);
                rows[i].push(j);
            }
            pairs.push((i, j));
        };
        perm_m.sort_unstable();
        for _ in 0..b {
            perm_m.shuffle(&mut rng);
            for (i, &j) in perm_m.iter().enumerate() {
                add(i, j, &mut pairs);
            }
        }
        perm_n.sort_unstable();
        perm_n.shuffle(&mut rng);
        for (i, &j) in perm_n.iter().enumerate() {
            add(i, j, &mut pairs);
        }
        if simple {
            break;
        }
        rejections += 1;
        if rejections >= max_rejections {
            return Err(SpinError::RejectionLimitExceeded(rejections));
        }
    }

    let core_id = |sign: char, i: usize| {
        if i < n {
            padded(&format!("u{sign}"), i, n)
        } else {
            padded(&format!("w{sign}"), i - n, r)
        }
    };
    let mut vertices = Vec::new();
    for sign in ['+', '-'] {
        for i in 0..m {
            vertices.push(VertexSpec::new(core_id(sign, i), side_of(sign)));
        }
    }
    let mut edges: Vec<EdgeSpec> = pairs.iter().map(|&(i, j)| EdgeSpec::new(core_id('+', i), core_id('-', j), 1)).collect();

    let mut terminals = Terminals::default();
    for sign in ['+', '-'] {
        let flip = side_of(sign).flip();
        let roots = if tree_depth == 0 {
            (0..t).map(|j| core_id(sign, n + j)).collect()
        } else {
            let node = |j: usize, d: u32, k: usize| {
                let width = b.pow(d).saturating_sub(1).to_string().len();
                format!("{}.{d}.{k:0width$}", padded(&format!("x{sign}"), j, t))
            };
            let mut roots = Vec::with_capacity(t);
            for j in 0..t {
                for d in 0..tree_depth {
                    let side = if (tree_depth - d) % 2 == 0 { side_of(sign) } else { flip };
                    for k in 0..b.pow(d) {
                        vertices.push(VertexSpec::new(node(j, d, k), side));
                        for c in 0..b {
                            let child = k * b + c;
                            let child_id = if d + 1 == tree_depth {
                                core_id(sign, n + j * b.pow(tree_depth) + child)
                            } else {
                                node(j, d + 1, child)
                            };
                            edges.push(EdgeSpec::new(node(j, d, k), child_id, 1));
                        }
                    }
                }
                roots.push(node(j, 0, 0));
            }
            roots
        };
        if sign == '+' {
            terminals.plus = roots;
        } else {
            terminals.minus = roots;
        }
    }

    let graph = build_graph(vertices, edges, None, Some(terminals), Some(delta))?;
    let layout = PhaseLayout::from_sides(&graph);
    let metadata = GadgetMetadata {
        family: "phase".into(),
        seed: Some(seed),
        t,
        tree_depth: Some(tree_depth),
        n_side: Some(n),
        delta: Some(delta),
        ..Default::default()
    };
    Gadget::new(graph, layout, metadata)
}

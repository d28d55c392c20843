use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Result, SpinError};
use crate::graph::{BipartiteMultigraph, PhaseLayout};
use crate::logvalue::{LogSum, LogValue};
use crate::network::{to_weighted_network, Configuration, WeightedNetwork};
use crate::params::SpinParams;

pub const DEFAULT_CAP: usize = 28;
const HARD_CAP: usize = 48;
const LOW_BITS: usize = 12;
const MAX_CHUNKS: usize = 256;

/// A factor in log space that keeps exact zeros countable, so incremental
/// updates never meet `-inf - -inf`.
#[derive(Clone, Copy, Debug, Default)]
struct Lg {
    zeros: i32,
    ln: f64,
}

impl Lg {
    fn of(x: f64) -> Lg {
        if x == 0.0 {
            Lg { zeros: 1, ln: 0.0 }
        } else {
            Lg { zeros: 0, ln: x.ln() }
        }
    }

    #[inline]
    fn add(self, o: Lg) -> Lg {
        Lg { zeros: self.zeros + o.zeros, ln: self.ln + o.ln }
    }

    #[inline]
    fn sub(self, o: Lg) -> Lg {
        Lg { zeros: self.zeros - o.zeros, ln: self.ln - o.ln }
    }
}

type LgMat = [[Lg; 2]; 2];

fn lg_mat(m: [[f64; 2]; 2]) -> LgMat {
    [[Lg::of(m[0][0]), Lg::of(m[0][1])], [Lg::of(m[1][0]), Lg::of(m[1][1])]]
}

fn lg_t(m: LgMat) -> LgMat {
    [[m[0][0], m[1][0]], [m[0][1], m[1][1]]]
}

/// Kept vertices mapped to bit positions 0..n in index order.
struct Compiled {
    n: usize,
    order: Vec<usize>,
    lw: Vec<[Lg; 2]>,
    /// Per bit, neighbors `(bit, matrix[s_self][s_other])`.
    adj: Vec<Vec<(usize, LgMat)>>,
    log_scale: f64,
}

impl Compiled {
    fn new(net: &WeightedNetwork) -> Compiled {
        let order: Vec<usize> = net.kept_indices().collect();
        let mut bit = vec![usize::MAX; order.iter().max().map_or(0, |&m| m + 1)];
        for (b, &i) in order.iter().enumerate() {
            bit[i] = b;
        }
        let lw = order.iter().map(|&i| { let w = net.weight_at(i); [Lg::of(w[0]), Lg::of(w[1])] }).collect();
        let mut adj = vec![Vec::new(); order.len()];
        for e in net.edges() {
            let (a, b) = (bit[e.u], bit[e.v]);
            let m = lg_mat(e.w);
            adj[a].push((b, m));
            adj[b].push((a, lg_t(m)));
        }
        Compiled { n: order.len(), order, lw, adj, log_scale: net.log_scale() }
    }

    fn bit_of(&self, net_index: usize) -> Option<usize> {
        self.order.iter().position(|&i| i == net_index)
    }

    /// Sums configuration weights into `nb` buckets chosen by `bucket(mask)`,
    /// where bit `b` of `mask` is the spin of the `b`-th kept vertex.
    fn enumerate<F>(&self, nb: usize, bucket: F) -> Vec<LogSum>
    where
        F: Fn(u64) -> usize + Sync,
    {
        let low = self.n.min(LOW_BITS);
        let blocks: u64 = 1u64 << (self.n - low);
        let chunks = (blocks as usize).min(MAX_CHUNKS) as u64;
        let parts: Vec<Vec<LogSum>> = (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut acc = vec![LogSum::default(); nb];
                let (start, end) = (c * blocks / chunks, (c + 1) * blocks / chunks);
                for h in start..end {
                    self.block(h, low, &mut acc, &bucket);
                }
                acc
            })
            .collect();
        pairwise(parts)
    }

    fn block<F: Fn(u64) -> usize>(&self, h: u64, low: usize, acc: &mut [LogSum], bucket: &F) {
        let spin = |b: usize| -> usize {
            if b < low {
                0
            } else {
                ((h >> (b - low)) & 1) as usize
            }
        };
        let mut base = Lg::default();
        let mut field: Vec<[Lg; 2]> = self.lw[..low].to_vec();
        for b in low..self.n {
            let s = spin(b);
            base = base.add(self.lw[b][s]);
            for &(o, m) in &self.adj[b] {
                // count each high-high edge once, from its lower endpoint
                if o >= low && o > b {
                    base = base.add(m[s][spin(o)]);
                }
            }
        }
        for (k, f) in field.iter_mut().enumerate() {
            for &(o, m) in &self.adj[k] {
                if o >= low {
                    let t = spin(o);
                    f[0] = f[0].add(m[0][t]);
                    f[1] = f[1].add(m[1][t]);
                }
            }
        }
        let mut cur = base;
        for (k, f) in field.iter().enumerate() {
            cur = cur.add(f[0]);
            for &(o, m) in &self.adj[k] {
                if o < low && o > k {
                    cur = cur.add(m[0][0]);
                }
            }
        }
        let high_bits = h << low;
        let mut lowmask: u64 = 0;
        if cur.zeros == 0 {
            acc[bucket(high_bits)].push(cur.ln);
        }
        for step in 1u64..(1u64 << low) {
            let k = step.trailing_zeros() as usize;
            let old = ((lowmask >> k) & 1) as usize;
            let new = 1 - old;
            let mut d = field[k][new].sub(field[k][old]);
            for &(o, m) in &self.adj[k] {
                if o < low {
                    let t = ((lowmask >> o) & 1) as usize;
                    d = d.add(m[new][t]).sub(m[old][t]);
                }
            }
            cur = cur.add(d);
            lowmask ^= 1 << k;
            if cur.zeros == 0 {
                acc[bucket(high_bits | lowmask)].push(cur.ln);
            }
        }
    }
}

/// Fixed-shape pairwise reduction, so the result does not depend on threading.
fn pairwise(mut parts: Vec<Vec<LogSum>>) -> Vec<LogSum> {
    while parts.len() > 1 {
        let mut next = Vec::with_capacity(parts.len().div_ceil(2));
        let mut it = parts.into_iter();
        while let Some(mut a) = it.next() {
            if let Some(b) = it.next() {
                for (x, y) in a.iter_mut().zip(&b) {
                    x.merge(y);
                }
            }
            next.push(a);
        }
        parts = next;
    }
    parts.pop().unwrap_or_default()
}

/// Exact enumeration engine with a configurable cap on kept vertices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Engine {
    pub cap: usize,
}

impl Default for Engine {
    fn default() -> Self {
        Engine { cap: DEFAULT_CAP }
    }
}

/// Split of `Z` by phase, with conditional terminal distributions.
#[derive(Debug, Clone, Serialize)]
pub struct PhaseDecomposition {
    pub z_plus: LogValue,
    pub z_minus: LogValue,
    /// Plus terminals then minus terminals; bit `j` of a table index is the
    /// spin of `terminal_order[j]`.
    pub terminal_order: Vec<String>,
    /// `Z^π(τ)` per terminal configuration.
    pub raw_plus: Vec<LogValue>,
    pub raw_minus: Vec<LogValue>,
    /// `Pr(σ|_T = τ | Y = π)`; all zero when `Z^π = 0`.
    pub table_plus: Vec<f64>,
    pub table_minus: Vec<f64>,
}

impl PhaseDecomposition {
    pub fn total(&self) -> LogValue {
        self.z_plus + self.z_minus
    }

    /// `(Pr[Y=+], Pr[Y=-])`.
    pub fn phase_probabilities(&self) -> (f64, f64) {
        let t = self.total();
        ((self.z_plus / t).value(), (self.z_minus / t).value())
    }
}

impl Engine {
    pub fn with_cap(cap: usize) -> Engine {
        Engine { cap }
    }

    fn compile(&self, net: &WeightedNetwork) -> Result<Compiled> {
        let kept = net.kept_count();
        if kept > self.cap.min(HARD_CAP) {
            return Err(SpinError::TooLarge { kept, cap: self.cap.min(HARD_CAP) });
        }
        Ok(Compiled::new(net))
    }

    /// Exact `Z` (as a log value) after pendant elimination.
    pub fn partition_function(&self, net: &WeightedNetwork) -> Result<LogValue> {
        let reduced = net.eliminate_pendants(&[])?;
        self.enumerate_total(&reduced)
    }

    /// Exact `Z` by enumerating every kept vertex, without elimination.
    pub fn enumerate_total(&self, net: &WeightedNetwork) -> Result<LogValue> {
        let c = self.compile(net)?;
        let z = c.enumerate(1, |_| 0)[0].total();
        Ok(LogValue::from_ln(c.log_scale) * z)
    }

    /// `Pr(σ_v = 1)` under the Gibbs distribution.
    pub fn marginal(&self, net: &WeightedNetwork, vertex: &str) -> Result<f64> {
        let reduced = net.eliminate_pendants(&[vertex])?;
        let c = self.compile(&reduced)?;
        let idx = reduced.index_of(vertex).ok_or_else(|| SpinError::UnknownVertex(vertex.to_string()))?;
        let b = c.bit_of(idx).expect("protected vertex is kept");
        let sums = c.enumerate(2, |m| ((m >> b) & 1) as usize);
        let (z0, z1) = (sums[0].total(), sums[1].total());
        let z = z0 + z1;
        if z.is_zero() {
            return Err(SpinError::ZeroPartitionFunction);
        }
        Ok((z1 / z).value())
    }

    /// Total weight of configurations extending `partial`.
    pub fn conditional_block(&self, net: &WeightedNetwork, partial: &Configuration) -> Result<LogValue> {
        self.partition_function(&net.clamp(partial)?)
    }

    /// Phase split by the majority rule: `+` iff at least as many spin-1
    /// vertices in `layout.plus` as in `layout.minus` (ties go to `+`).
    pub fn phase_decomposition(
        &self,
        net: &WeightedNetwork,
        layout: &PhaseLayout,
        t_plus: &[String],
        t_minus: &[String],
    ) -> Result<PhaseDecomposition> {
        let mut protect: Vec<&str> = layout.plus.iter().chain(&layout.minus).map(String::as_str).collect();
        protect.extend(t_plus.iter().chain(t_minus).map(String::as_str));
        protect.sort_unstable();
        protect.dedup();
        let reduced = net.eliminate_pendants(&protect)?;
        let c = self.compile(&reduced)?;
        let mask_of = |ids: &[String]| -> Result<u64> {
            let mut m = 0u64;
            for id in ids {
                let i = reduced.index_of(id).ok_or_else(|| SpinError::UnknownVertex(id.clone()))?;
                m |= 1 << c.bit_of(i).expect("kept");
            }
            Ok(m)
        };
        let (plus_mask, minus_mask) = (mask_of(&layout.plus)?, mask_of(&layout.minus)?);
        let terminal_order: Vec<String> = t_plus.iter().chain(t_minus).cloned().collect();
        let tbits: Vec<usize> = terminal_order
            .iter()
            .map(|id| Ok(c.bit_of(reduced.index_of(id).ok_or_else(|| SpinError::UnknownVertex(id.clone()))?).unwrap()))
            .collect::<Result<_>>()?;
        if tbits.len() > 20 {
            return Err(SpinError::TooLarge { kept: tbits.len(), cap: 20 });
        }
        let nt = 1usize << tbits.len();
        let sums = c.enumerate(2 * nt, |m| {
            let minus = (m & plus_mask).count_ones() < (m & minus_mask).count_ones();
            let mut tau = 0usize;
            for (j, &b) in tbits.iter().enumerate() {
                tau |= (((m >> b) & 1) as usize) << j;
            }
            (minus as usize) * nt + tau
        });
        let scale = LogValue::from_ln(c.log_scale);
        let raw: Vec<LogValue> = sums.iter().map(|s| scale * s.total()).collect();
        let (raw_plus, raw_minus) = (raw[..nt].to_vec(), raw[nt..].to_vec());
        let sum = |v: &[LogValue]| v.iter().fold(LogValue::ZERO, |a, &b| a + b);
        let (z_plus, z_minus) = (sum(&raw_plus), sum(&raw_minus));
        let table = |v: &[LogValue], z: LogValue| -> Vec<f64> {
            if z.is_zero() {
                vec![0.0; v.len()]
            } else {
                v.iter().map(|&x| (x / z).value()).collect()
            }
        };
        Ok(PhaseDecomposition {
            z_plus,
            z_minus,
            terminal_order,
            table_plus: table(&raw_plus, z_plus),
            table_minus: table(&raw_minus, z_minus),
            raw_plus,
            raw_minus,
        })
    }
}

pub fn partition_function(net: &WeightedNetwork) -> Result<LogValue> {
    Engine::default().partition_function(net)
}

pub fn eliminate_pendants(net: &WeightedNetwork, protected: &[&str]) -> Result<WeightedNetwork> {
    net.eliminate_pendants(protected)
}

pub fn marginal(net: &WeightedNetwork, vertex: &str) -> Result<f64> {
    Engine::default().marginal(net, vertex)
}

pub fn conditional_block(net: &WeightedNetwork, partial: &Configuration) -> Result<LogValue> {
    Engine::default().conditional_block(net, partial)
}

pub fn phase_decomposition(
    net: &WeightedNetwork,
    layout: &PhaseLayout,
    t_plus: &[String],
    t_minus: &[String],
) -> Result<PhaseDecomposition> {
    Engine::default().phase_decomposition(net, layout, t_plus, t_minus)
}

/// Serializes a count as a JSON integer when it fits in `u64`, else as a decimal string.
pub fn serialize_count<S: serde::Serializer>(x: &u128, s: S) -> std::result::Result<S::Ok, S::Error> {
    match u64::try_from(*x) {
        Ok(v) => s.serialize_u64(v),
        Err(_) => s.serialize_str(&x.to_string()),
    }
}

/// Number of independent sets, by exact branching on bitmasks.
pub fn count_independent_sets(graph: &BipartiteMultigraph, cap: usize) -> Result<u128> {
    let n = graph.vertex_count();
    if n > cap.min(64) {
        return Err(SpinError::TooLarge { kept: n, cap: cap.min(64) });
    }
    let mut nbr = vec![0u64; n];
    for &(a, b, _) in graph.edges() {
        nbr[a] |= 1 << b;
        nbr[b] |= 1 << a;
    }
    let all = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    Ok(count_is(all, &nbr))
}

fn count_is(avail: u64, nbr: &[u64]) -> u128 {
    if avail == 0 {
        return 1;
    }
    let mut best = None;
    let mut best_deg = 0;
    let mut rest = avail;
    while rest != 0 {
        let v = rest.trailing_zeros() as usize;
        rest &= rest - 1;
        let d = (nbr[v] & avail).count_ones();
        if d > best_deg {
            best_deg = d;
            best = Some(v);
        }
    }
    match best {
        None => 1u128 << avail.count_ones(),
        Some(v) => count_is(avail & !(1 << v), nbr) + count_is(avail & !(1 << v) & !nbr[v], nbr),
    }
}

/// Report of the flip identity `Z(α,α,1) = α^m Z(1/α,1/α,1)`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FlipCheck {
    pub lhs: LogValue,
    pub rhs: LogValue,
    pub relative_gap: f64,
}

pub fn flip_transform_check(graph: &BipartiteMultigraph, alpha: f64, engine: &Engine) -> Result<FlipCheck> {
    if graph.two_coloring().is_none() {
        let &(u, v, _) = graph.edges().first().expect("an odd cycle needs edges");
        return Err(SpinError::NonBipartite { u: graph.id(u).into(), v: graph.id(v).into() });
    }
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(SpinError::InvalidParameter(format!("alpha must be > 0, got {alpha}")));
    }
    let z = |a: f64| -> Result<LogValue> {
        let p = SpinParams::unbounded(a, a, 1.0)?;
        engine.partition_function(&to_weighted_network(graph, &p))
    };
    let lhs = z(alpha)?;
    let rhs = LogValue::from_ln(graph.edge_count() as f64 * alpha.ln()) * z(1.0 / alpha)?;
    Ok(FlipCheck { lhs, rhs, relative_gap: lhs.relative_gap(rhs) })
}

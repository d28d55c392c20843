//! Acceptance run: one PASS/FAIL line per criterion, tolerances pinned below.
//! Built with `harness = false`, so the lines show up in plain `cargo test`.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use common::*;
use rand::Rng;
use spinlab_core::exact::{flip_transform_check, Engine};
use spinlab_core::gadgets::{
    balance_gadget, h_k, sample_phase_gadget, symmetry_breaking_search, verify_gadget, Gadget, GadgetMetadata,
    SampleSpec, SymmetryBreaking,
};
use spinlab_core::graph::{build_graph, EdgeSpec, PhaseLayout, Side, Terminals, VertexSpec};
use spinlab_core::moments::{check_condition1, maximize_psi1, shift_residuals};
use spinlab_core::network::to_weighted_network;
use spinlab_core::phase::{classify_uniqueness, extremal_marginals, hardcore_lambda_c, lambda_interval, Regime};
use spinlab_core::reductions::{choose_t1_t2, derived_ising_params, ising_to_2spin, verify_bis_reduction};
use spinlab_core::SpinParams;

const ORACLE_REL: f64 = 1e-10;
const ORACLE_GRAPHS: usize = 200;
const ORACLE_BUDGET: Duration = Duration::from_secs(60);
const FLIP_REL: f64 = 1e-10;
const FLIP_GRAPHS: usize = 100;
const FLIP_ALPHAS: [f64; 3] = [0.1, 0.3, 0.7];
const THRESHOLD_ABS: f64 = 1e-12;
const THRESHOLD_BRACKET: f64 = 1e-6;
const ISING_GRID: usize = 50;
const ISING_BAND: f64 = 1e-6;
const SYMBREAK_SETS: usize = 200;
const SYMBREAK_EXCLUSION: f64 = 1e-3;
const H1_ABS: f64 = 1e-12;
const SHIFT_RESIDUAL: f64 = 1e-9;
const SHIFT_SETS: usize = 10;
const SHIFT_POINTS: usize = 50;
const SHIFT_BUDGET: Duration = Duration::from_secs(120);
const CONDITION1_TOL: f64 = 1e-4;
const MOMENT_EQUALITY: f64 = 1e-6;
const PSI1_VS_TREE: f64 = 1e-5;
const MOMENT_BUDGET: Duration = Duration::from_secs(300);
const SANDWICH_BUDGET: Duration = Duration::from_secs(60);
const DET_ABS: f64 = 1e-12;
const WORKED_N_ABS: f64 = 1e-9;
const GADGET_SAMPLES: u64 = 100;
const BALANCE_SLACK: f64 = 1e-9;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut r = rng(1001);
    let engine = Engine::default();
    let (mut worst, mut zeros) = (0.0f64, [0usize; 2]);
    for i in 0..ORACLE_GRAPHS {
        let g = random_graph(&mut r, 14, 4, true);
        let (mut b, mut c, l) = random_params(&mut r);
        // pin a share of exact zeros regardless of the draw
        match i % 5 {
            0 => b = 0.0,
            1 => c = 0.0,
            _ => {}
        }
        zeros[0] += (b == 0.0) as usize;
        zeros[1] += (c == 0.0) as usize;
        let p = SpinParams::unbounded(b, c, l).map_err(|e| e.to_string())?;
        let z = engine.partition_function(&to_weighted_network(&g, &p)).map_err(|e| e.to_string())?.value();
        let gap = rel_gap(z, brute_z(&g, b, c, l));
        worst = worst.max(gap);
        ensure(gap <= ORACLE_REL, || format!("graph {i}: relative gap {gap:e}"))?;
    }
    let took = start.elapsed();
    ensure(took <= ORACLE_BUDGET, || format!("took {took:?}"))?;
    Ok(format!("{ORACLE_GRAPHS} graphs ({} with beta=0, {} with gamma=0), worst gap {worst:.1e}, {took:.2?}", zeros[0], zeros[1]))
}

fn criterion_2() -> Outcome {
    let mut r = rng(1002);
    let engine = Engine::default();
    let mut worst = 0.0f64;
    for i in 0..FLIP_GRAPHS {
        let g = random_graph(&mut r, 14, 3, false);
        let m = g.edge_count() as i32;
        for alpha in FLIP_ALPHAS {
            let f = flip_transform_check(&g, alpha, &engine).map_err(|e| e.to_string())?;
            let oracle = brute_z(&g, alpha, alpha, 1.0);
            let oracle_rhs = alpha.powi(m) * brute_z(&g, 1.0 / alpha, 1.0 / alpha, 1.0);
            let gaps = [f.relative_gap, rel_gap(f.lhs.value(), oracle), rel_gap(f.rhs.value(), oracle_rhs)];
            let gap = gaps.iter().copied().fold(0.0, f64::max);
            worst = worst.max(gap);
            ensure(gap <= FLIP_REL, || format!("graph {i}, alpha {alpha}: gaps {gaps:?}"))?;
        }
    }
    Ok(format!("{FLIP_GRAPHS} graphs x {} alphas, worst gap {worst:.1e}", FLIP_ALPHAS.len()))
}

fn criterion_3() -> Outcome {
    for (d, want) in [(3, 4.0), (4, 27.0 / 16.0), (6, 3125.0 / 4096.0)] {
        let got = hardcore_lambda_c(d);
        ensure((got - want).abs() <= THRESHOLD_ABS, || format!("lambda_c({d}) = {got}, want {want}"))?;
    }
    for d in 3..=8 {
        let lc = hardcore_lambda_c(d);
        let at = |l: f64| classify_uniqueness(&SpinParams::hard_core(l, d).unwrap()).map_err(|e| e.to_string());
        let (below, above) = (at(lc - THRESHOLD_BRACKET)?, at(lc + THRESHOLD_BRACKET)?);
        ensure(below == Regime::Uniqueness && above == Regime::NonUniqueness, || {
            format!("delta {d}: {below:?} below, {above:?} above")
        })?;
    }
    Ok(format!("exact thresholds, regime flips within +-{THRESHOLD_BRACKET:e} for delta 3..8"))
}

fn criterion_4() -> Outcome {
    let mut checked = 0;
    for d in [3u32, 4, 6] {
        let critical = (d as f64 - 2.0) / d as f64;
        for k in 0..ISING_GRID {
            let beta = (k as f64 + 0.5) / ISING_GRID as f64;
            if (beta - critical).abs() <= ISING_BAND {
                continue;
            }
            let regime = classify_uniqueness(&SpinParams::new(beta, beta, 1.0, d).unwrap()).map_err(|e| e.to_string())?;
            let want = if beta < critical { Regime::NonUniqueness } else { Regime::Uniqueness };
            ensure(regime == want, || format!("delta {d}, beta {beta}: {regime:?}"))?;
            checked += 1;
        }
    }
    Ok(format!("{checked} grid points agree with beta < (delta-2)/delta"))
}

fn criterion_5() -> Outcome {
    let mut r = rng(1005);
    let engine = Engine::default();
    let mut found = 0;
    let mut ks = [0usize; 3];
    while found < SYMBREAK_SETS {
        let (b, g, l) = (r.gen_range(0.0..3.0), r.gen_range(0.0..3.0), (r.gen_range(-2.0f64..2.0)).exp());
        if (b * g - 1.0f64).abs() <= SYMBREAK_EXCLUSION
            || ((b - g).abs() <= SYMBREAK_EXCLUSION && (l - 1.0f64).abs() <= SYMBREAK_EXCLUSION)
        {
            continue;
        }
        match symmetry_breaking_search(&SpinParams::unbounded(b, g, l).unwrap(), &engine).map_err(|e| e.to_string())? {
            SymmetryBreaking::Found(s) => ks[s.k] += 1,
            other => return Err(format!("({b}, {g}, {l}) gave {other:?}")),
        }
        found += 1;
    }
    for _ in 0..50 {
        let b = (r.gen_range(-2.0f64..2.0)).exp();
        let l = (r.gen_range(-2.0f64..2.0)).exp();
        for p in [SpinParams::unbounded(b, 1.0 / b, l).unwrap(), SpinParams::unbounded(b, b, 1.0).unwrap()] {
            let out = symmetry_breaking_search(&p, &engine).map_err(|e| e.to_string())?;
            ensure(matches!(out, SymmetryBreaking::Unbreakable { .. }), || format!("{p:?} gave {out:?}"))?;
        }
    }
    let h1 = h_k(1);
    let want = 19.5 / 31.125;
    let brute = brute_marginal(&h1, 0.5, 0.5, 2.0, h1.index_of("u").unwrap());
    let p = SpinParams::unbounded(0.5, 0.5, 2.0).unwrap();
    let exact = engine.marginal(&to_weighted_network(&h1, &p), "u").map_err(|e| e.to_string())?;
    ensure((brute - want).abs() <= H1_ABS && (exact - want).abs() <= H1_ABS, || {
        format!("H_1 marginal: brute {brute}, engine {exact}, want {want}")
    })?;
    Ok(format!("{SYMBREAK_SETS} sets broken (k=0/1/2: {ks:?}), 100 excluded samples unbreakable, H_1 value {exact:.12}"))
}

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let mut r = rng(1006);
    let mut worst = 0.0f64;
    for _ in 0..SHIFT_SETS {
        let p = SpinParams::new(
            r.gen_range(0.05..2.0),
            r.gen_range(0.05..2.0),
            (r.gen_range(-1.5f64..1.5)).exp(),
            r.gen_range(3..=6),
        )
        .unwrap();
        for _ in 0..SHIFT_POINTS {
            let (cp, cm) = (r.gen_range(0.02..0.98), r.gen_range(0.02..0.98));
            let up = r.gen_range((2.0 * cp - 1.0f64).max(0.0)..cp);
            let um = r.gen_range((2.0 * cm - 1.0f64).max(0.0)..cm);
            let s = shift_residuals(&p, cp, cm, up, um).map_err(|e| e.to_string())?;
            let m = s.psi1.max(s.psi2_prime).max(s.psi2);
            worst = worst.max(m);
            ensure(m <= SHIFT_RESIDUAL, || format!("{p:?} at ({cp}, {cm}, {up}, {um}): {s:?}"))?;
        }
    }
    let took = start.elapsed();
    ensure(took <= SHIFT_BUDGET, || format!("took {took:?}"))?;
    Ok(format!("{} points, worst residual {worst:.1e}, {took:.2?}", SHIFT_SETS * SHIFT_POINTS))
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let (lo, hi) = lambda_interval(0.3, 0.6, 4).map_err(|e| e.to_string())?.ok_or("empty interval for (0.3, 0.6, 4)")?;
    let lambda_star = 1.0;
    ensure(lo < lambda_star && lambda_star < hi, || format!("1 is outside ({lo}, {hi})"))?;
    let mut notes = Vec::new();
    for (b, g, l, d) in [(1.0, 0.0, 1.0, 6), (1.0, 0.0, 4.5, 3), (0.2, 0.2, 1.0, 3), (0.3, 0.6, lambda_star, 4)] {
        let p = SpinParams::new(b, g, l, d).unwrap();
        let rep = check_condition1(&p, CONDITION1_TOL).map_err(|e| e.to_string())?;
        let tree = extremal_marginals(&p).map_err(|e| e.to_string())?;
        let (pp, pm, _) = maximize_psi1(&p).map_err(|e| e.to_string())?;
        let tree_gap = (pp - tree.p_plus).abs().max((pm - tree.p_minus).abs());
        let c = rep.condition1;
        ensure(c.holds && c.distance <= CONDITION1_TOL, || format!("{:?}: condition 1 {c:?}", (b, g, l, d)))?;
        ensure(rep.moment_equality_residual <= MOMENT_EQUALITY, || {
            format!("{:?}: |psi2 - 2 psi1| = {:e}", (b, g, l, d), rep.moment_equality_residual)
        })?;
        ensure(tree_gap <= PSI1_VS_TREE, || format!("{:?}: psi1 argmax off the tree by {tree_gap:e}", (b, g, l, d)))?;
        notes.push(format!("dist {:.0e}", c.distance));
    }
    let took = start.elapsed();
    ensure(took <= MOMENT_BUDGET, || format!("took {took:?}"))?;
    Ok(format!("4 parameter sets hold ({}), {took:.2?}", notes.join(", ")))
}

/// Least multiplicities found by walking `t = 1, 2, ...` against the defining
/// inequalities in linear space.
fn hand_minima(alpha: f64, lambda: f64, n: usize, m: usize, eps: f64) -> (u64, u64) {
    let lt = if lambda > 1.0 { 1.0 / lambda } else { lambda };
    let t1 = (1u64..).find(|&t| alpha.powi(2 * t as i32) <= eps / (6.0 * 2f64.powi(n as i32))).unwrap();
    let ratio = (alpha + lt) / (1.0 + alpha * lt);
    let tm = (t1 as usize * m) as i32;
    let target = alpha.powi(tm) * eps / (6.0 * 2f64.powi(2 * tm + n as i32));
    let t2 = (1u64..).find(|&t| ratio.powi(t as i32) <= target).unwrap();
    (t1, t2)
}

fn criterion_8() -> Outcome {
    let start = Instant::now();
    let engine = Engine::default();
    ensure(hand_minima(0.5, 0.5, 4, 1, 0.5) == (4, 61), || "worked case is not (4, 61)".into())?;
    ensure(choose_t1_t2(0.5, 0.5, 4, 1, 0.5).ok() == Some((4, 61)), || "choose_t1_t2 misses (4, 61)".into())?;
    let mut cases = 0;
    for (name, b) in [("P2", path(2)), ("P3", path(3)), ("C4", cycle4()), ("K13", star3())] {
        for (alpha, lambda, eps) in [(0.5, 0.5, 0.5), (0.3, 0.8, 0.25)] {
            let (n, m) = (b.vertex_count(), b.edge_count() as usize);
            let want = hand_minima(alpha, lambda, n, m, eps);
            let got = choose_t1_t2(alpha, lambda, n, m, eps).map_err(|e| e.to_string())?;
            ensure(got == want, || format!("{name} {alpha} {lambda} {eps}: {got:?} vs {want:?}"))?;
            let cert = verify_bis_reduction(&b, alpha, lambda, eps, &engine).map_err(|e| e.to_string())?;
            ensure(cert.ok && (cert.t1, cert.t2) == want, || format!("{name} {alpha} {lambda} {eps}: {cert:?}"))?;
            cases += 1;
        }
    }
    let took = start.elapsed();
    ensure(took <= SANDWICH_BUDGET, || format!("took {took:?}"))?;
    Ok(format!("{cases} cases within e^(+-eps/2), multiplicities match the hand minima, {took:.2?}"))
}

fn criterion_9() -> Outcome {
    let mut r = rng(1009);
    for _ in 0..500 {
        let (b, g) = (r.gen_range(0.0..3.0), r.gen_range(0.0..3.0));
        let (qa, qb) = (r.gen_range(0.01..0.99), r.gen_range(0.01..0.99));
        let (qm, qp) = (f64::min(qa, qb), f64::max(qa, qb));
        if (b * g - 1.0f64).abs() < 1e-3 || qp - qm < 1e-6 {
            continue;
        }
        let p = SpinParams::unbounded(b, g, r.gen_range(0.1..5.0)).unwrap();
        let rho1 = r.gen_range(0.0..1.0);
        if let Ok(d) = derived_ising_params(&p, qm, qp, (1.0 - rho1, rho1)) {
            let want = (b * g - 1.0) * (qp - qm) * (qp - qm);
            ensure((d.det_n - want).abs() <= DET_ABS, || format!("det N {} vs {want}", d.det_n))?;
        }
    }
    let hc = SpinParams::hard_core(1.0, 3).unwrap();
    let d = derived_ising_params(&hc, 0.25, 0.75, (0.4, 0.6)).map_err(|e| e.to_string())?;
    let want_n = [[0.9375, 0.8125], [0.8125, 0.4375]];
    for i in 0..2 {
        for j in 0..2 {
            ensure((d.n[i][j] - want_n[i][j]).abs() <= WORKED_N_ABS, || format!("N = {:?}", d.n))?;
        }
    }
    let want_alpha = 0.41015625 / 0.66015625;
    ensure((d.alpha_out - want_alpha).abs() <= WORKED_N_ABS && (d.det_n + 0.25).abs() <= DET_ABS, || {
        format!("alpha {} det {}", d.alpha_out, d.det_n)
    })?;

    let engine = Engine::default();
    let mut audits = 0;
    for params in [SpinParams::hard_core(4.5, 3).unwrap(), SpinParams::new(2.0, 1.5, 0.8, 3).unwrap()] {
        let breaker = match symmetry_breaking_search(&params, &engine).map_err(|e| e.to_string())? {
            SymmetryBreaking::Found(s) => s,
            other => return Err(format!("{other:?}")),
        };
        for (bi, b) in [path(2), path(3), cycle4(), star3()].into_iter().enumerate() {
            let t = b.max_degree() as usize + 1;
            let gadget = sample_phase_gadget(&params, &SampleSpec::new(t + 6, t, t, 0, bi as u64))
                .map_err(|e| e.to_string())?;
            let plan = ising_to_2spin(&b, &params, &gadget, &breaker, 0.25, 0.75).map_err(|e| e.to_string())?;
            let g = &plan.b_prime;
            let independent = g.two_coloring().is_some() && g.sides_are_proper() && g.max_degree() <= 3;
            ensure(plan.audit.ok() && independent, || format!("audit {:?}", plan.audit))?;
            audits += 1;
        }
    }
    Ok(format!("det identity on random inputs, worked N and alpha {:.9}, {audits} construction audits", d.alpha_out))
}

/// Hard-core `K_{4,3}` with three terminals per side.
fn toy() -> Gadget {
    let a: Vec<String> = (0..4).map(|i| format!("a{i}")).collect();
    let b: Vec<String> = (0..3).map(|i| format!("b{i}")).collect();
    let mut vertices: Vec<VertexSpec> = a.iter().map(|v| VertexSpec::new(v.clone(), Side::L)).collect();
    vertices.extend(b.iter().map(|v| VertexSpec::new(v.clone(), Side::R)));
    let edges = a.iter().flat_map(|x| b.iter().map(|y| EdgeSpec::new(x.clone(), y.clone(), 1)).collect::<Vec<_>>()).collect();
    let terminals = Terminals { plus: a[..3].to_vec(), minus: b.clone() };
    let g = build_graph(vertices, edges, None, Some(terminals), Some(5)).unwrap();
    Gadget::new(g, PhaseLayout { plus: a, minus: b }, GadgetMetadata { family: "toy".into(), t: 3, ..Default::default() })
        .unwrap()
}

fn criterion_10() -> Outcome {
    for s in 0..GADGET_SAMPLES {
        let delta = 3 + (s % 3) as u32;
        let b = (delta - 1) as usize;
        let depth = if s % 4 == 0 { 2 } else { 0 };
        let t = 1 + (s % 2) as usize;
        let r = t * b.pow(depth);
        let spec = SampleSpec::new(r + 3 * delta as usize, r, t, depth, s);
        let params = SpinParams::hard_core(2.0, delta).unwrap();
        let g = sample_phase_gadget(&params, &spec).map_err(|e| format!("seed {s}: {e}"))?;
        g.check_invariants(delta).map_err(|e| format!("seed {s}: {e}"))?;
        let (tp, tm) = g.terminal_ids();
        ensure(tp.len() == t && tm.len() == t, || format!("seed {s}: terminal counts"))?;
        ensure(tp.iter().chain(&tm).all(|v| g.graph.degree(g.graph.index_of(v).unwrap()) < delta), || {
            format!("seed {s}: terminal degree")
        })?;
        let again = sample_phase_gadget(&params, &spec).map_err(|e| e.to_string())?;
        ensure(again.graph.edges() == g.graph.edges(), || format!("seed {s}: not deterministic"))?;
    }

    let engine = Engine::default();
    let pr_plus = |g: &Gadget, p: &SpinParams| -> Result<f64, String> {
        let (tp, tm) = g.terminal_ids();
        let net = to_weighted_network(&g.graph, p);
        Ok(engine.phase_decomposition(&net, &g.layout, &tp, &tm).map_err(|e| e.to_string())?.phase_probabilities().0)
    };
    let mut trend = Vec::new();
    for lambda in [1.5, 2.0, 3.0, 4.0] {
        let p = SpinParams::hard_core(lambda, 5).unwrap();
        let mut gap = (pr_plus(&toy(), &p)? - 0.5).abs();
        let first = gap;
        for t_prime in 1..=3 {
            let k = balance_gadget(&toy(), t_prime, &p).map_err(|e| e.to_string())?;
            let next = (pr_plus(&k, &p)? - 0.5).abs();
            ensure(next <= gap + BALANCE_SLACK, || format!("lambda {lambda}, t' {t_prime}: {next} > {gap}"))?;
            gap = next;
        }
        trend.push(format!("{first:.3}->{gap:.1e}"));
    }

    // measured only: the asymptotic gadget guarantees are not a desk-scale claim
    let p = SpinParams::hard_core(4.5, 3).unwrap();
    let pt = extremal_marginals(&p).map_err(|e| e.to_string())?;
    let g = sample_phase_gadget(&p, &SampleSpec::new(6, 2, 2, 0, 7)).map_err(|e| e.to_string())?;
    let v = verify_gadget(&g, &p, pt.q_minus, pt.q_plus, 0.1, &engine).map_err(|e| e.to_string())?;
    Ok(format!(
        "{GADGET_SAMPLES} samples keep shape and determinism; balancing gap {}; measured deviations {:.3?} on a 16-vertex gadget",
        trend.join(" "),
        v.max_ratio_deviation
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("oracle equivalence", criterion_1),
        ("flip identity", criterion_2),
        ("hard-core thresholds", criterion_3),
        ("symmetric Ising at lambda=1", criterion_4),
        ("symmetry-breaking dichotomy", criterion_5),
        ("field-shift identities", criterion_6),
        ("condition 1 and moment equality", criterion_7),
        ("independent-set sandwich", criterion_8),
        ("derived Ising parameters", criterion_9),
        ("desk-checkable gadget properties", criterion_10),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            Err(e.downcast_ref::<String>().cloned().or(e.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {why}", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}

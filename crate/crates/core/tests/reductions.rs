mod common;

use std::collections::{BTreeMap, HashSet};

use common::*;
use proptest::prelude::*;
use rand::Rng;
use spinlab_core::exact::{count_independent_sets, Engine};
use spinlab_core::gadgets::{sample_phase_gadget, symmetry_breaking_search, SampleSpec, SymmetryBreaking};
use spinlab_core::graph::BipartiteMultigraph;
use spinlab_core::network::to_weighted_network;
use spinlab_core::reductions::{bis_to_ising_with, derived_ising_params, ising_to_2spin, verify_bis_reduction, TerminalUse};
use spinlab_core::SpinParams;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn det_n_factorizes(
        beta in 0.0f64..3.0,
        gamma in 0.0f64..3.0,
        lambda in 0.1f64..5.0,
        qa in 0.01f64..0.99,
        qb in 0.01f64..0.99,
        rho1 in 0.0f64..1.0,
    ) {
        prop_assume!((beta * gamma - 1.0).abs() > 1e-3 && (qa - qb).abs() > 1e-6);
        let p = SpinParams::unbounded(beta, gamma, lambda).unwrap();
        let (qm, qp) = (qa.min(qb), qa.max(qb));
        match derived_ising_params(&p, qm, qp, (1.0 - rho1, rho1)) {
            Ok(d) => {
                let want = (beta * gamma - 1.0) * (qp - qm).powi(2);
                prop_assert!((d.det_n - want).abs() <= 1e-12, "{} vs {want}", d.det_n);
                prop_assert!(d.alpha_out > 0.0 && d.alpha_out < 1.0);
            }
            // only an induced field of exactly 1 is refused
            Err(e) => prop_assert!(e.code() == "DegenerateParameters", "{e:?}"),
        }
    }
}

#[test]
fn truncated_construction_matches_enumeration() {
    let mut r = rng(41);
    let e = Engine::default();
    let mut done = 0;
    while done < 40 {
        let b = random_simple_graph(&mut r, 4);
        let t1 = r.gen_range(1..=2);
        let alpha = r.gen_range(0.05..0.95);
        let lambda = if r.gen_bool(0.5) { r.gen_range(0.1..0.9) } else { r.gen_range(1.1..4.0) };
        let plan = bis_to_ising_with(&b, alpha, lambda, t1, 2).unwrap();
        if plan.b_prime.vertex_count() > 16 {
            continue;
        }
        let p = SpinParams::unbounded(alpha, alpha, lambda).unwrap();
        let z = e.partition_function(&to_weighted_network(&plan.b_prime, &p)).unwrap().value();
        assert!(rel_gap(z, brute_z(&plan.b_prime, alpha, alpha, lambda)) <= 1e-10);
        done += 1;
    }
}

#[test]
fn sandwich_holds_for_lambda_and_its_inverse() {
    let mut r = rng(42);
    let e = Engine::default();
    let mut graphs: Vec<BipartiteMultigraph> = vec![path(2), path(3), cycle4(), star3()];
    graphs.extend((0..12).map(|_| random_simple_graph(&mut r, 6)));
    for b in &graphs {
        for (alpha, lambda, eps) in [(0.5, 0.5, 0.5), (0.3, 0.8, 0.25), (0.7, 0.2, 0.1)] {
            for l in [lambda, 1.0 / lambda] {
                let cert = verify_bis_reduction(b, alpha, l, eps, &e).unwrap();
                assert!(cert.ok, "{b:?} α={alpha} λ={l}: {cert:?}");
                assert_eq!(cert.i_b, count_independent_sets(b, 64).unwrap());
            }
        }
    }
}

/// Checks the occupancy log and the graph against `B` without trusting the audit.
fn check_occupancy(b: &BipartiteMultigraph, plan: &spinlab_core::reductions::IsingReductionPlan, delta: u32) {
    let mut used = HashSet::new();
    let mut per_edge: BTreeMap<(String, String), usize> = BTreeMap::new();
    let mut breakers = 0;
    for o in &plan.occupancy {
        assert!(used.insert(o.terminal.clone()), "{} reused", o.terminal);
        match &o.usage {
            TerminalUse::Edge { other } => {
                let owner_of_other = other.strip_prefix('g').and_then(|s| s.split(':').next()).unwrap();
                *per_edge.entry((o.owner.clone(), owner_of_other.to_string())).or_default() += 1;
            }
            TerminalUse::Breaker => breakers += 1,
        }
    }
    for &(x, y, mult) in b.edges() {
        let (x, y) = (b.id(x).to_string(), b.id(y).to_string());
        assert_eq!(per_edge.get(&(x.clone(), y.clone())), Some(&(2 * mult as usize)));
        assert_eq!(per_edge.get(&(y, x)), Some(&(2 * mult as usize)));
    }
    assert_eq!(breakers, b.field_mask().iter().filter(|&&f| f).count());
    let g = &plan.b_prime;
    assert!(g.two_coloring().is_some() && g.sides_are_proper());
    assert!(g.max_degree() <= delta);
}

#[test]
fn ising_construction_occupancy() {
    let mut r = rng(43);
    let e = Engine::default();
    for params in [SpinParams::hard_core(4.5, 3).unwrap(), SpinParams::new(2.0, 1.5, 0.8, 3).unwrap()] {
        let breaker = match symmetry_breaking_search(&params, &e).unwrap() {
            SymmetryBreaking::Found(s) => s,
            other => panic!("{other:?}"),
        };
        let (qm, qp) = if params.bc() < 1.0 {
            let pt = spinlab_core::phase::extremal_marginals(&params).unwrap();
            (pt.q_minus, pt.q_plus)
        } else {
            (0.3, 0.6)
        };
        for _ in 0..15 {
            let b = random_graph(&mut r, 6, 1, true);
            let t = b.max_degree() as usize + 1;
            let gadget = sample_phase_gadget(&params, &SampleSpec::new(t + 9, t, t, 0, r.gen())).unwrap();
            let plan = ising_to_2spin(&b, &params, &gadget, &breaker, qm, qp).unwrap();
            assert!(plan.audit.ok(), "{:?}", plan.audit);
            check_occupancy(&b, &plan, 3);
            let copies = b.vertex_count() * gadget.graph.vertex_count();
            let fields = b.field_mask().iter().filter(|&&f| f).count();
            assert_eq!(plan.b_prime.vertex_count(), copies + fields * (breaker.graph.vertex_count() - 1));
        }
    }
}

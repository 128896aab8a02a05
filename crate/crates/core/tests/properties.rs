mod common;

use common::*;
use nalgebra::Complex;
use proptest::prelude::*;
use timdof::demand_graph::DemandGraph;
use timdof::linear_sim::{
    build_stacked_matrix, decodable_symbols, evaluate_dof, lemma1_check, random_scheme, sample_channel,
    scheme_from_schedule, Coherence,
};
use timdof::rational::int;
use timdof::schemes::{schedule_lp, Budget, ScheduleEntry};
use timdof::{
    best_assignment_upper_bound, build_demand_graph, canonical_tdma, is_schedulable, optimal_tdma, schedule_dof,
    MessageAssignment, Mode, Rational, ServedSet, TdmaSchedule, Topology,
};

fn mode() -> impl Strategy<Value = Mode> {
    prop_oneof![Just(Mode::Truncated), Just(Mode::Cyclic)]
}

fn network(max_k: usize, max_l: usize) -> impl Strategy<Value = Topology> {
    (1..=max_k, mode()).prop_flat_map(move |(k, m)| (0..k.min(max_l + 1)).prop_map(move |l| topo(k, l, m)))
}

/// A topology with one server per receiver, drawn among the transmitters it
/// hears.
fn network_with_servers(max_k: usize, max_l: usize) -> impl Strategy<Value = (Topology, Vec<usize>)> {
    network(max_k, max_l).prop_flat_map(|t| {
        let picks: Vec<_> = (1..=t.k()).map(|i| prop::sample::select(t.transmitters_heard_at(i).unwrap())).collect();
        (Just(t), picks)
    })
}

fn rotate_set(s: &ServedSet, k: usize) -> ServedSet {
    ServedSet::new(s.pairs().iter().map(|&(i, j)| (i % k + 1, j % k + 1))).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn topology_invariants(t in network(64, 8)) {
        let (k, l) = (t.k(), t.l());
        for i in 1..=k {
            prop_assert!(t.connected(i, i));
        }
        for j in 1..=k {
            let rx = t.receivers_heard_by(j).unwrap();
            prop_assert!(rx.windows(2).all(|w| w[0] < w[1]));
            let interior = t.mode() == Mode::Cyclic || j + l <= k;
            if interior {
                prop_assert_eq!(rx.len(), l + 1);
            } else {
                prop_assert_eq!(rx, (j..=k).collect::<Vec<_>>());
            }
        }
        prop_assert_eq!(Topology::from_json(&t.to_json()).unwrap(), t);
    }

    #[test]
    fn explicit_topologies_round_trip(k in 1usize..8, bits in any::<u64>()) {
        let edges: Vec<(usize, usize)> = (1..=k)
            .flat_map(|i| (1..=k).map(move |j| (i, j)))
            .enumerate()
            .filter(|&(n, (i, j))| i == j || bits >> (n % 64) & 1 == 1)
            .map(|(_, e)| e)
            .collect();
        let t = Topology::from_edges(k, &edges).unwrap();
        let back = Topology::from_json(&t.to_json()).unwrap();
        prop_assert_eq!(back.edges(), t.edges());
        prop_assert_eq!(back, t);
    }

    #[test]
    fn demand_graph_has_no_self_loops((t, servers) in network_with_servers(10, 4)) {
        let g = build_demand_graph(&t, &MessageAssignment::single(&servers).unwrap()).unwrap();
        for u in 1..=t.k() {
            prop_assert!(!g.has_edge(u, u));
            for v in 1..=t.k() {
                prop_assert_eq!(g.has_edge(u, v), demand_edge(&t, &servers, u, v));
            }
        }
    }

    #[test]
    fn removing_an_edge_never_raises_the_bound((t, servers) in network_with_servers(8, 3), pick in any::<prop::sample::Index>()) {
        let g = build_demand_graph(&t, &MessageAssignment::single(&servers).unwrap()).unwrap();
        let edges = g.edges();
        prop_assume!(!edges.is_empty());
        let (u, v) = edges[pick.index(edges.len())];
        let before = g.dof_upper_bound_lp().unwrap();
        let after = g.without_edge(u, v).dof_upper_bound_lp().unwrap();
        prop_assert!(after.value <= before.value);
        prop_assert!(before.verify(&g).unwrap());
    }

    #[test]
    fn bound_lies_between_one_and_k(k in 1usize..=7, bits in any::<u64>()) {
        let edges: Vec<(usize, usize)> = (1..=k)
            .flat_map(|u| (1..=k).map(move |v| (u, v)))
            .enumerate()
            .filter(|&(n, (u, v))| u != v && bits >> (n % 64) & 1 == 1)
            .map(|(_, e)| e)
            .collect();
        let g = DemandGraph::from_edges(k, &edges).unwrap();
        let b = g.dof_upper_bound_lp().unwrap();
        prop_assert!(b.value >= int(1) && b.value <= int(k as i64));
        prop_assert!(b.verify(&g).unwrap());
    }

    #[test]
    fn cyclic_rotation_preserves_the_bound(k in 2usize..=8, l in 0usize..=3, picks in prop::collection::vec(0usize..4, 8)) {
        prop_assume!(l < k);
        let t = topo(k, l, Mode::Cyclic);
        let servers: Vec<usize> = (1..=k).map(|i| (i + k - picks[i - 1] % (l + 1) - 1) % k + 1).collect();
        let rotated: Vec<usize> = (1..=k).map(|i| servers[(i + k - 2) % k] % k + 1).collect();
        let value = |s: &[usize]| build_demand_graph(&t, &MessageAssignment::single(s).unwrap()).unwrap().dof_upper_bound_lp().unwrap().value;
        prop_assert_eq!(value(&servers), value(&rotated));
    }

    #[test]
    fn scaling_precoders_keeps_ranks(t in network(7, 3), n in 1usize..=3, seed in any::<u64>(), re in -3.0f64..3.0, im in -3.0f64..3.0) {
        prop_assume!(re.abs() + im.abs() > 1e-3);
        let a = MessageAssignment::full_cooperation(t.k()).unwrap();
        let s = random_scheme(&t, &a, n, 0.5, seed).unwrap();
        let scaled = s.scaled(Complex::new(re, im));
        let c = sample_channel(&t, n, Coherence::TimeVarying, seed ^ 1).unwrap();
        for i in 1..=t.k() {
            prop_assert_eq!(decodable_symbols(&s, &c, i).unwrap(), decodable_symbols(&scaled, &c, i).unwrap());
        }
    }

    #[test]
    fn reconstruction_report_is_consistent(t in network(8, 3), n in 1usize..=3, seed in any::<u64>(), bmask in any::<u16>()) {
        let a = MessageAssignment::full_cooperation(t.k()).unwrap();
        let s = random_scheme(&t, &a, n, 0.6, seed).unwrap();
        let c = sample_channel(&t, n, Coherence::TimeVarying, seed.wrapping_add(7)).unwrap();
        let b: Vec<usize> = (1..=t.k()).filter(|i| bmask >> (i - 1) & 1 == 1).collect();
        let rep = lemma1_check(&s, &c, &b).unwrap();
        prop_assert!(rep.r <= rep.s);
        prop_assert_eq!(rep.deficiency, rep.s - rep.r);
        let outside: usize = (1..=t.k()).filter(|i| !b.contains(i)).map(|i| s.symbols()[i - 1]).sum();
        prop_assert_eq!(rep.s, outside);
        if rep.r == rep.s {
            prop_assert!(rep.reconstructable);
        }
    }

    #[test]
    fn stacked_matrix_pattern(t in network(10, 4), n in 1usize..=3, bmask in any::<u16>()) {
        let a = MessageAssignment::full_cooperation(t.k()).unwrap();
        let s = random_scheme(&t, &a, n, 1.0, 1).unwrap();
        let c = sample_channel(&t, n, Coherence::TimeVarying, 2).unwrap();
        let b: Vec<usize> = (1..=t.k()).filter(|i| bmask >> (i - 1) & 1 == 1).collect();
        let h = build_stacked_matrix(&s, &c, &b).unwrap();
        prop_assert_eq!(h.shape(), (n * b.len(), n * t.k()));
        for r in 0..h.nrows() {
            for col in 0..h.ncols() {
                let expect = r % n == col % n && hears(t.k(), t.l(), t.mode(), b[r / n], col / n + 1);
                prop_assert_eq!(h[(r, col)].norm() > 0.0, expect);
            }
        }
    }

    #[test]
    fn sampling_is_deterministic(t in network(8, 3), n in 1usize..=4, seed in any::<u64>()) {
        prop_assert_eq!(
            sample_channel(&t, n, Coherence::TimeVarying, seed).unwrap(),
            sample_channel(&t, n, Coherence::TimeVarying, seed).unwrap()
        );
        let c = sample_channel(&t, n, Coherence::Constant, seed).unwrap();
        for (i, j) in t.edges() {
            for slot in 1..=n {
                prop_assert_eq!(c.coefficient(i, j, slot), c.coefficient(i, j, 1));
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn tdma_monotone_in_budget(t in network(7, 3)) {
        let mut prev = int(0);
        for m in 1..=3 {
            let opt = optimal_tdma(&t, m).unwrap();
            prop_assert!(opt.result.sum_dof >= prev);
            prop_assert!(opt.result.sum_dof >= int(0) && opt.result.sum_dof <= int(t.k() as i64));
            prev = opt.result.sum_dof;
        }
    }

    #[test]
    fn tdma_schedules_are_schedulable(t in network(12, 4)) {
        let opt = optimal_tdma(&t, 1).unwrap();
        for e in opt.schedule.entries() {
            prop_assert!(is_schedulable(&t, &e.set).unwrap());
        }
        let (a, sched) = canonical_tdma(&t).unwrap();
        sched.validate(&t, Some(&a)).unwrap();
        for e in sched.entries() {
            prop_assert!(is_schedulable(&t, &e.set).unwrap());
        }
        prop_assert!(schedule_dof(&t, &sched).unwrap().sum_dof <= opt.result.sum_dof);
    }

    #[test]
    fn cyclic_orbit_of_the_optimum(k in 2usize..=10, l in 0usize..=4) {
        prop_assume!(l < k);
        let t = topo(k, l, Mode::Cyclic);
        let opt = optimal_tdma(&t, 1).unwrap();
        let rotated = TdmaSchedule::new(
            k,
            opt.schedule.entries().iter().map(|e| ScheduleEntry { set: rotate_set(&e.set, k), fraction: e.fraction }).collect(),
        ).unwrap();
        prop_assert_eq!(schedule_dof(&t, &rotated).unwrap().sum_dof, opt.result.sum_dof);
    }
}

/// Every schedule the per-assignment LP produces stays below that
/// assignment's demand-graph bound.
#[test]
fn weak_duality_for_every_assignment() {
    for mode in [Mode::Truncated, Mode::Cyclic] {
        for k in 1..=8 {
            for l in 0..k.min(3) {
                let t = topo(k, l, mode);
                let options: Vec<Vec<usize>> = (1..=k).map(|i| t.transmitters_heard_at(i).unwrap()).collect();
                let mut idx = vec![0; k];
                loop {
                    let servers: Vec<usize> = (0..k).map(|i| options[i][idx[i]]).collect();
                    let a = MessageAssignment::single(&servers).unwrap();
                    let sched = schedule_lp(&t, &a).unwrap();
                    sched.validate(&t, Some(&a)).unwrap();
                    let achieved = schedule_dof(&t, &sched).unwrap().sum_dof;
                    let bound = build_demand_graph(&t, &a).unwrap().dof_upper_bound_lp().unwrap().value;
                    assert!(achieved <= bound, "{mode} K={k} L={l} {servers:?}: {achieved} > {bound}");
                    let mut p = 0;
                    while p < k && idx[p] + 1 == options[p].len() {
                        idx[p] = 0;
                        p += 1;
                    }
                    if p == k {
                        break;
                    }
                    idx[p] += 1;
                }
            }
        }
    }
}

#[test]
fn tdma_meets_the_bound_on_small_networks() {
    for k in 1..=8 {
        for l in 0..k.min(4) {
            for mode in [Mode::Truncated, Mode::Cyclic] {
                let t = topo(k, l, mode);
                let tdma = optimal_tdma(&t, 1).unwrap().result.sum_dof;
                let bound = best_assignment_upper_bound(&t).unwrap().value;
                assert!(tdma <= bound);
                if mode == Mode::Truncated || k % (l + 2) == 0 {
                    assert_eq!(tdma, bound, "{mode} K={k} L={l}");
                }
            }
        }
    }
}

#[test]
fn cyclic_multiples_reach_two_per_block() {
    for l in 0..=3 {
        for blocks in 1..=12 / (l + 2) {
            let k = blocks * (l + 2);
            if l >= k {
                continue;
            }
            let t = topo(k, l, Mode::Cyclic);
            let expect = Rational::new(2 * k as i128, (l + 2) as i128).min(int(k as i64));
            assert_eq!(best_assignment_upper_bound(&t).unwrap().value, expect, "K={k} L={l}");
        }
    }
}

#[test]
fn locally_connected_truncated_are_chordal() {
    for k in 1..=12 {
        for l in 0..k.min(5) {
            let t = topo(k, l, Mode::Truncated);
            assert_eq!(t.is_chordal_bipartite(2 * k).unwrap().is_chordal(), Some(true), "K={k} L={l}");
        }
    }
}

#[test]
fn embedded_schedules_evaluate_exactly() {
    for mode in [Mode::Truncated, Mode::Cyclic] {
        for k in 2..=8 {
            for l in 0..k.min(4) {
                let t = topo(k, l, mode);
                let opt = optimal_tdma(&t, 1).unwrap();
                let s = scheme_from_schedule(&t, &opt.assignment, &opt.schedule, None).unwrap();
                let r = evaluate_dof(&s, &t, 3, k as u64).unwrap();
                assert_eq!(r.sum_dof, opt.result.sum_dof);
                assert_eq!(r.stability.unwrap().disagreements, 0);
            }
        }
    }
    // an assignment with spare transmitters still embeds
    let t = topo(4, 1, Mode::Truncated);
    let a = MessageAssignment::new(vec![vec![1], vec![1, 2], vec![3], vec![3, 4]], Budget::Bounded(2)).unwrap();
    let sched = TdmaSchedule::one_shot(4, ServedSet::new([(1, 1), (3, 3)]).unwrap()).unwrap();
    let s = scheme_from_schedule(&t, &a, &sched, Some(2)).unwrap();
    assert_eq!(evaluate_dof(&s, &t, 2, 0).unwrap().sum_dof, int(2));
}

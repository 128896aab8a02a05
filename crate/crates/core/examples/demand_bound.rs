//! Demand-graph outer bounds: one fixed assignment, then the best bound
//! over all single-transmitter assignments.
//!
//! cargo run --example demand_bound

use timdof::rational::to_pq;
use timdof::{best_assignment_upper_bound, build_demand_graph, MessageAssignment, Mode, Topology};

fn main() -> timdof::Result<()> {
    let t = Topology::make_locally_connected(4, 2, Mode::Cyclic)?;
    let a = MessageAssignment::single(&[1, 2, 3, 4])?;
    let g = build_demand_graph(&t, &a)?;
    println!("edges: {:?}", g.edges());
    println!("maximal acyclic subsets: {:?}", g.maximal_acyclic_subsets()?);

    let bound = g.dof_upper_bound_lp()?;
    println!("bound for T_i = {{i}}: {}", to_pq(&bound.value));
    for c in &bound.certificate {
        println!("  weight {} on {:?}", to_pq(&c.weight), c.subset);
    }
    assert!(bound.verify(&g)?);

    for (k, l) in [(6, 1), (8, 2), (7, 2)] {
        let t = Topology::make_locally_connected(k, l, Mode::Cyclic)?;
        let best = best_assignment_upper_bound(&t)?;
        let servers = best.assignment.as_ref().and_then(|a| a.servers()).unwrap_or_default();
        println!("K = {k}, L = {l}: best bound {} with servers {servers:?}", to_pq(&best.value));
    }
    Ok(())
}

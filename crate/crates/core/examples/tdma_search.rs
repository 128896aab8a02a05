//! Exact optimal TDMA with flexible message assignment.
//!
//! cargo run --release --example tdma_search

use timdof::rational::to_pq;
use timdof::{optimal_tdma, Mode, Topology};

fn main() -> timdof::Result<()> {
    for (k, l) in [(4, 2), (6, 2), (8, 2), (6, 1), (10, 3), (12, 4)] {
        let t = Topology::make_locally_connected(k, l, Mode::Cyclic)?;
        for m in [1, 2] {
            let opt = optimal_tdma(&t, m)?;
            println!(
                "K = {k:>2}, L = {l}, M = {m}: sum {}, per user {}",
                to_pq(&opt.result.sum_dof),
                to_pq(&opt.result.per_user)
            );
        }
    }

    let t = Topology::make_locally_connected(8, 2, Mode::Cyclic)?;
    let opt = optimal_tdma(&t, 1)?;
    println!("transmit sets: {:?}", opt.assignment.transmit_sets());
    for e in opt.schedule.entries() {
        println!("  {} of the time: {:?}", to_pq(&e.fraction), e.set.pairs());
    }
    Ok(())
}

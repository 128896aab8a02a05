//! The closed-form pattern serving two users per block of L + 2, compared
//! with exhaustive search.
//!
//! cargo run --release --example canonical_schemes

use timdof::rational::to_pq;
use timdof::{canonical_tdma, is_schedulable, optimal_tdma, schedule_dof, Mode, Topology};

fn main() -> timdof::Result<()> {
    for l in 1..=4 {
        let k = 2 * (l + 2);
        let t = Topology::make_locally_connected(k, l, Mode::Cyclic)?;
        let (a, sched) = canonical_tdma(&t)?;
        assert!(sched.entries().iter().all(|e| is_schedulable(&t, &e.set).unwrap_or(false)));
        let canon = schedule_dof(&t, &sched)?;
        let best = optimal_tdma(&t, 1)?;
        println!(
            "L = {l}, K = {k:>2}: canonical {} per user, search {}",
            to_pq(&canon.per_user),
            to_pq(&best.result.per_user)
        );
        println!("  servers {:?}", a.servers().unwrap_or_default());
    }

    // the truncated line loses a little at the edge
    let t = Topology::make_locally_connected(7, 2, Mode::Truncated)?;
    let (_, sched) = canonical_tdma(&t)?;
    println!("truncated K = 7, L = 2: sum {}", to_pq(&schedule_dof(&t, &sched)?.sum_dof));
    Ok(())
}

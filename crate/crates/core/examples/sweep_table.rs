//! Per-user DoF for L = 1..4 on cyclic networks of K = 2(L + 2): search,
//! canonical pattern and outer bound side by side.
//!
//! cargo run --release --example sweep_table

use timdof::rational::to_pq;
use timdof::{best_assignment_upper_bound, canonical_tdma, optimal_tdma, schedule_dof, Mode, Rational, Topology};

fn main() -> timdof::Result<()> {
    println!("K,L,tdma,canonical,bound");
    for l in 1..=4 {
        let k = 2 * (l + 2);
        let t = Topology::make_locally_connected(k, l, Mode::Cyclic)?;
        let per_user = |sum: Rational| to_pq(&(sum / Rational::from_integer(k as i128)));
        let tdma = optimal_tdma(&t, 1)?.result.sum_dof;
        let (_, sched) = canonical_tdma(&t)?;
        let canon = schedule_dof(&t, &sched)?.sum_dof;
        let bound = best_assignment_upper_bound(&t)?.value;
        println!("{k},{l},{},{},{}", per_user(tdma), per_user(canon), per_user(bound));
    }
    Ok(())
}

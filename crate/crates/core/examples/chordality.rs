//! Checks the bipartite transmitter/receiver graph for chordless cycles.
//!
//! cargo run --example chordality

use timdof::{Mode, Topology};

fn main() -> timdof::Result<()> {
    println!("{:>3} {:>3}  {:<10} {:<10}", "K", "L", "truncated", "cyclic");
    for (k, l) in [(4, 1), (6, 1), (6, 2), (8, 2), (10, 3), (10, 4)] {
        let mut row = format!("{k:>3} {l:>3} ");
        for mode in [Mode::Truncated, Mode::Cyclic] {
            let t = Topology::make_locally_connected(k, l, mode)?;
            row += &format!(" {:<10}", t.is_chordal_bipartite(2 * k)?.label());
        }
        println!("{row}");
    }

    // a ring of three transmitters and three receivers is the smallest
    // chordless six-cycle
    let ring = Topology::from_edges(3, &[(1, 1), (2, 2), (3, 3), (2, 1), (3, 2), (1, 3)])?;
    println!("three-ring: {}", ring.is_chordal_bipartite(6)?.label());
    Ok(())
}

//! Builds locally connected topologies and prints who hears whom.
//!
//! cargo run --example topology_basics

use timdof::{Mode, Topology};

fn main() -> timdof::Result<()> {
    let line = Topology::make_locally_connected(6, 2, Mode::Truncated)?;
    let ring = Topology::make_locally_connected(6, 2, Mode::Cyclic)?;

    for t in [&line, &ring] {
        println!("K = {}, L = {}, {}", t.k(), t.l(), t.mode());
        for j in 1..=t.k() {
            println!("  transmitter {j} reaches receivers {:?}", t.receivers_heard_by(j)?);
        }
    }

    // receiver 1 hears transmitter 5 only once the indices wrap
    println!("connected(1, 5): line {}, ring {}", line.connected(1, 5), ring.connected(1, 5));

    // a hand-made topology goes through the same JSON document
    let custom = Topology::from_edges(3, &[(1, 1), (2, 2), (3, 3), (3, 1)])?;
    println!("{}", custom.to_json());
    assert_eq!(Topology::from_json(&custom.to_json())?, custom);
    Ok(())
}

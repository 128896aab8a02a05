//! Embeds a TDMA schedule as a linear scheme and evaluates it by generic
//! rank over random channels.
//!
//! cargo run --release --example linear_eval

use timdof::linear_sim::{decodable_symbols, evaluate_dof, random_scheme, sample_channel, scheme_from_schedule, Coherence};
use timdof::rational::to_pq;
use timdof::{canonical_tdma, MessageAssignment, Mode, Topology};

fn main() -> timdof::Result<()> {
    let t = Topology::make_locally_connected(6, 2, Mode::Cyclic)?;
    let (a, sched) = canonical_tdma(&t)?;
    let scheme = scheme_from_schedule(&t, &a, &sched, Some(2))?;
    println!("n = {}, symbols {:?}", scheme.n(), scheme.symbols());

    let c = sample_channel(&t, scheme.n(), Coherence::TimeVarying, 7)?;
    for i in 1..=t.k() {
        println!("  receiver {i} decodes {}", decodable_symbols(&scheme, &c, i)?);
    }
    let r = evaluate_dof(&scheme, &t, 5, 7)?;
    println!("sum DoF {} ({:?})", to_pq(&r.sum_dof), r.stability);

    // random precoders with every message at every transmitter
    let full = MessageAssignment::full_cooperation(t.k())?;
    for seed in 0..4 {
        let s = random_scheme(&t, &full, 2, 0.3, seed)?;
        let r = evaluate_dof(&s, &t, 5, 100 + seed)?;
        println!("random scheme {seed}: symbols {:?}, sum DoF {}", s.symbols(), to_pq(&r.sum_dof));
    }
    Ok(())
}

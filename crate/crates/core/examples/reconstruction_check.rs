//! The reconstruction check behind the converse: can the receivers in B,
//! after decoding, rebuild what the remaining transmitters sent?
//!
//! cargo run --release --example reconstruction_check

use timdof::linear_sim::{build_stacked_matrix, lemma1_check, random_scheme, sample_channel, Coherence};
use timdof::{MessageAssignment, Mode, Topology};

fn main() -> timdof::Result<()> {
    let t = Topology::make_locally_connected(8, 2, Mode::Cyclic)?;
    let evens: Vec<usize> = (2..=8).step_by(2).collect();
    let full = MessageAssignment::full_cooperation(8)?;

    let s = random_scheme(&t, &full, 2, 1.0, 3)?;
    let c = sample_channel(&t, 2, Coherence::TimeVarying, 4)?;
    let h = build_stacked_matrix(&s, &c, &evens)?;
    println!("H_B is {} x {}", h.nrows(), h.ncols());
    for row in 0..h.nrows() {
        let pattern: String = (0..h.ncols()).map(|col| if h[(row, col)].norm() > 0.0 { 'x' } else { '.' }).collect();
        println!("  {pattern}");
    }

    println!("{:>4} {:>3} {:>3} {:>4} reconstructable", "seed", "s", "r", "def");
    for seed in 0..8 {
        let s = random_scheme(&t, &full, 2, 0.5, seed)?;
        let c = sample_channel(&t, 2, Coherence::TimeVarying, 50 + seed)?;
        let rep = lemma1_check(&s, &c, &evens)?;
        println!("{seed:>4} {:>3} {:>3} {:>4} {}", rep.s, rep.r, rep.deficiency, rep.reconstructable);
    }
    Ok(())
}

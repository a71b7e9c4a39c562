//! Grid-search region for a cascade of binary symmetric channels.

use vector_epi::dmregion::{enumerate_region, h2, refinement_excess, DiscreteChannelSpec};
use vector_epi::secrecy::Scenario;
use vector_epi::Result;

fn main() -> Result<()> {
    let bsc = DiscreteChannelSpec::bsc;
    let spec = DiscreteChannelSpec::new(bsc(0.1), bsc(0.1), bsc(0.1))?;
    println!("h2(0.18) − h2(0.1) = {:.12} nats", h2(0.18) - h2(0.1));
    let coarse = enumerate_region(&spec, Scenario::One, 8)?;
    let fine = enumerate_region(&spec, Scenario::One, 16)?;
    println!("frontier points: {} at 1/8, {} at 1/16", coarse.len(), fine.len());
    for p in fine.iter().step_by(fine.len().div_ceil(10)) {
        println!("  R1 {:.6}  R2 {:.6}", p.r1, p.r2);
    }
    println!("coarse points beyond the fine frontier: {:.1e}", refinement_excess(&coarse, &fine));
    Ok(())
}

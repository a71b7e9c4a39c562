//! Secrecy rate region boundary for a scalar degraded channel, checked
//! against exhaustive search.

use vector_epi::secrecy::{
    brute_force_region, hausdorff, mu_grid, pareto_frontier, trace_region_adaptive, ChannelSpec, OptimizerOptions,
    Scenario,
};
use vector_epi::Result;

fn main() -> Result<()> {
    let spec = ChannelSpec::scalar(1.0, 1.0, 2.0, 4.0)?;
    let opts = OptimizerOptions::default();
    for scenario in [Scenario::One, Scenario::Two] {
        let lo = scenario.min_mu();
        let mut grid = mu_grid(lo, lo + 4.0, 9);
        grid.push(lo + 100.0);
        let boundary = trace_region_adaptive(&spec, scenario, &grid, 1e-2, 200, &opts)?;
        println!("scenario {}: {} boundary points", scenario.number(), boundary.rows.len());
        for r in boundary.rows.iter().step_by(boundary.rows.len().div_ceil(8)) {
            println!("  μ {:>8.4}  B* {:.5}  R1 {:.5}  R2 {:.5}", r.mu, r.bstar.get(0, 0), r.r1, r.r2);
        }
        let front = pareto_frontier(&boundary.points());
        let brute = brute_force_region(&spec, scenario, 100_000)?;
        println!("  Hausdorff distance to exhaustive search: {:.2e}", hausdorff(&front, &brute));
    }
    Ok(())
}

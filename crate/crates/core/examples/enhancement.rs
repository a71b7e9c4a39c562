//! Enhanced noises absorbing the KKT multipliers of an optimizer output.

use vector_epi::extremal::{enhance, entropy_gap_bounds};
use vector_epi::secrecy::{optimize_weighted, ChannelSpec, OptimizerOptions, Scenario};
use vector_epi::{Result, SymMatrix};

fn main() -> Result<()> {
    let spec = ChannelSpec::new(
        SymMatrix::diag(&[1.0, 2.0]),
        SymMatrix::from_row_major(2, &[1.0, 0.2, 0.2, 0.5])?,
        SymMatrix::from_row_major(2, &[2.0, 0.2, 0.2, 1.5])?,
        SymMatrix::from_row_major(2, &[4.0, 0.0, 0.0, 2.5])?,
    )?;
    let mu = 1.2;
    let opt = optimize_weighted(mu, &spec, Scenario::One, &OptimizerOptions::default())?;
    let inst = spec.extremal_instance(mu, Scenario::One)?;
    println!("B* = {:?}", opt.bstar.rows());
    println!("M1 = {:?}\nM2 = {:?}", opt.cert.m1.rows(), opt.cert.m2.rows());

    let e = enhance(&inst, &opt.cert, 1e-8)?;
    println!("Ñ1 = {:?}\nÑ0 = {:?}", e.n1_tilde.rows(), e.n0_tilde.rows());
    println!("{:#?}", e.report);

    let bx = SymMatrix::diag(&[0.5, 1.0]);
    let g = entropy_gap_bounds(&inst, &opt.cert, &e, &bx)?;
    println!("entropy gaps at a test covariance: {g:?}");
    Ok(())
}

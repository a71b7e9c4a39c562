//! KKT certificate at a boundary-face B* and the extremal inequality
//! against random feasible (U, X).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use vector_epi::cli::random_feasible_ux;
use vector_epi::extremal::{extremal_sides_conditional, extremal_sides_gaussian, recover_multipliers, ExtremalInstance};
use vector_epi::{Result, SymMatrix};

fn main() -> Result<()> {
    // First coordinate sits at B = 0, the second at B = S.
    let inst = ExtremalInstance::new(
        SymMatrix::diag(&[1.0, 1.0]),
        SymMatrix::diag(&[1.0, 3.0]),
        vec![SymMatrix::diag(&[2.0, 2.0])],
        vec![1.0],
    )?;
    let bstar = SymMatrix::diag(&[0.0, 1.0]);
    let cert = recover_multipliers(&inst, &bstar)?;
    println!("M1 = {:?}\nM2 = {:?}", cert.m1.rows(), cert.m2.rows());
    println!("residuals {:?}, valid: {}", cert.residuals, cert.is_valid(1e-6));

    let (l, r) = extremal_sides_gaussian(&inst, &bstar, &bstar)?;
    println!("at B*: lhs {l:.9}  rhs {r:.9}");
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..1000 {
        let ux = random_feasible_ux(&mut rng, inst.s())?;
        let (lhs, rhs) = extremal_sides_conditional(&inst, &bstar, &ux)?;
        worst = worst.max(lhs - rhs);
    }
    println!("max lhs − rhs over 1000 random (U, X): {worst:.3e}");
    Ok(())
}

//! Square roots, simultaneous diagonalization and the two projections.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use vector_epi::matcore::{logdet, loewner_leq, project_box, project_psd, random, simultaneous_diag, sym_sqrt};
use vector_epi::{Result, SymMatrix};

fn main() -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let a = random::pd(&mut rng, 3, 0.5, 4.0);
    let b = random::pd(&mut rng, 3, 0.5, 4.0);

    let root = sym_sqrt(&a)?;
    let back = SymMatrix::from_matrix(root.mul(&root));
    println!("‖√A·√A − A‖ = {:.2e}", back.sub(&a).max_abs());
    println!("log|A| = {:.6}", logdet(&a)?);

    let g = simultaneous_diag(&a, &b)?;
    let (ra, rb) = g.residuals(&a, &b);
    println!("simultaneous diagonalization residuals {ra:.1e}, {rb:.1e}");
    println!("generalized eigenvalues of (B, A): {:?}", g.ratios());

    let wild = a.sub(&b.scale(2.0));
    let p = project_psd(&wild);
    println!("PSD projection: λ_min {:.3} → {:.3}", wild.min_eigenvalue(), p.min_eigenvalue());

    let s = random::pd(&mut rng, 3, 0.5, 2.0);
    let boxed = project_box(&wild, &s)?;
    println!(
        "box projection feasible: 0 ⪯ B: {}, B ⪯ S: {}",
        boxed.min_eigenvalue() >= -1e-9,
        loewner_leq(&boxed, &s, 1e-9)?
    );
    Ok(())
}

//! Both sides of the matrix-parameter EPI on Gaussian inputs, an instance
//! built to meet the equality condition, and one with non-commuting A, N.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vector_epi::epi::{epi_sides, equality_condition, EpiInstance, McParams};
use vector_epi::matcore::random;
use vector_epi::{Result, SymMatrix};

fn report(label: &str, inst: &EpiInstance) -> Result<()> {
    let s = epi_sides(inst, McParams::default())?;
    println!(
        "{label:<22} lhs {:>10.5}  rhs {:>10.5}  gap/rhs {:>+.3e}",
        s.lhs,
        s.rhs,
        s.gap() / s.rhs
    );
    Ok(())
}

fn main() -> Result<()> {
    let a = SymMatrix::diag(&[0.9, 0.1]);
    let i2 = SymMatrix::identity(2);
    report("A = diag(0.9, 0.1)", &EpiInstance::gaussian(a, i2.clone(), i2.clone())?)?;
    report("A = 0", &EpiInstance::gaussian(SymMatrix::zeros(2), i2.clone(), i2)?)?;

    // Commuting B, A, N with B + A^{1/2} N A^{1/2} = c (B − AB).
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let c = 3.0;
    let av = [0.2, 0.5, 0.6];
    let bv: Vec<f64> = (0..3).map(|_| rng.random_range(0.5..2.0)).collect();
    let nv: Vec<f64> = (0..3).map(|k| (c * (1.0 - av[k]) - 1.0) * bv[k] / av[k]).collect();
    let q = random::orthogonal(&mut rng, 3);
    let (a, b, nz) = (SymMatrix::from_eigen(&av, &q), SymMatrix::from_eigen(&bv, &q), SymMatrix::from_eigen(&nv, &q));
    println!("equality condition: {:?}", equality_condition(&a, &b, &nz)?);
    report("proportional family", &EpiInstance::gaussian(a, nz, b)?)?;

    let sym = |v: [f64; 4]| SymMatrix::from_row_major(2, &v);
    report(
        "non-commuting A and N",
        &EpiInstance::gaussian(
            sym([0.29965, -0.05611, -0.05611, 0.94379])?,
            sym([1.98473, 1.20748, 1.20748, 0.98635])?,
            sym([0.30999, 0.42155, 0.42155, 0.57610])?,
        )?,
    )?;
    Ok(())
}

//! Monte Carlo check of the EPI for a Gaussian-mixture input.

use vector_epi::epi::{epi_sides, EpiInput, EpiInstance, McParams};
use vector_epi::gaussinfo::{gaussian_entropy, mixture_entropy_mc, GaussianMixture};
use vector_epi::{Result, SymMatrix};

fn main() -> Result<()> {
    let mix = GaussianMixture::new(
        vec![0.3, 0.7],
        vec![vec![-2.0, 0.5], vec![1.0, -0.2]],
        vec![SymMatrix::diag(&[0.4, 1.0]), SymMatrix::from_row_major(2, &[1.0, 0.3, 0.3, 0.5])?],
    )?;
    let inst = EpiInstance::new(
        SymMatrix::diag(&[0.3, 0.8]),
        SymMatrix::from_row_major(2, &[1.0, 0.2, 0.2, 0.6])?,
        EpiInput::Mixture(mix),
    )?;
    let s = epi_sides(&inst, McParams { samples: 100_000, seed: 11 })?;
    println!("lhs {:.5}  rhs {:.5}  gap {:.5} ± {:.5}", s.lhs, s.rhs, s.gap(), s.gap_stderr);

    let cov = SymMatrix::from_row_major(2, &[1.0, 0.4, 0.4, 2.0])?;
    let est = mixture_entropy_mc(&GaussianMixture::gaussian(vec![0.0, 0.0], cov.clone())?, 100_000, 5)?;
    println!(
        "Gaussian entropy: Monte Carlo {:.5} ± {:.5}, closed form {:.5}",
        est.estimate,
        est.stderr,
        gaussian_entropy(&cov)?
    );
    Ok(())
}

//! Gradient of I(Z; DX+Z) in D against central differences, and the link
//! between the two posterior covariances.

use vector_epi::gaussinfo::{immse_gradient, mi_z_given_output, mmse_x, mmse_z, LinearGaussChannel};
use vector_epi::matcore::logdet;
use vector_epi::{Result, SymMatrix};

fn main() -> Result<()> {
    let d = SymMatrix::from_row_major(2, &[1.3, 0.2, 0.2, 0.8])?;
    let b = SymMatrix::from_row_major(2, &[1.0, 0.3, 0.3, 0.6])?;
    let nz = SymMatrix::diag(&[0.5, 1.5]);
    let ch = LinearGaussChannel::new(d.clone(), b.clone(), nz.clone())?;
    println!("I(Z; DX+Z) = {:.6} nats", mi_z_given_output(&ch)?);

    let mi = |dm: &nalgebra::DMatrix<f64>| -> Result<f64> {
        let sig = dm * b.as_matrix() * dm.transpose();
        let out = SymMatrix::from_matrix(&sig + nz.as_matrix());
        Ok(0.5 * (logdet(&out)? - logdet(&SymMatrix::from_matrix(sig))?))
    };
    let grad = immse_gradient(&ch)?;
    let h = 1e-6;
    for r in 0..2 {
        for c in 0..2 {
            let mut p = d.as_matrix().clone();
            let mut m = p.clone();
            p[(r, c)] += h;
            m[(r, c)] -= h;
            let fd = (mi(&p)? - mi(&m)?) / (2.0 * h);
            println!("∂I/∂D[{r},{c}]  analytic {:+.8}  finite difference {fd:+.8}", grad[(r, c)]);
        }
    }
    let lhs = SymMatrix::from_matrix(d.mul(&mmse_x(&ch)) * d.as_matrix());
    println!("‖D Cov(X|Y) D − Cov(Z|Y)‖ = {:.2e}", lhs.sub(&mmse_z(&ch)?).max_abs());
    Ok(())
}

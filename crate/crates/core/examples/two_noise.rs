//! Two-noise construction: A, the concave function f and its maximum.

use vector_epi::extremal::{corollary2_construct, f_concave, f_max, log_a_identities};
use vector_epi::{Result, SymMatrix};

fn main() -> Result<()> {
    let bstar = SymMatrix::from_row_major(2, &[0.8, 0.1, 0.1, 0.3])?;
    let n1 = SymMatrix::diag(&[1.0, 0.7]);
    let n3 = SymMatrix::from_row_major(2, &[2.5, 0.3, 0.3, 2.0])?;
    let mu = 0.8;
    let p1 = bstar.add(&n1).inverse_pd()?;
    let p3 = bstar.add(&n3).inverse_pd()?;
    let n2 = p1.add(&p3.scale(mu)).scale(1.0 / (1.0 + mu)).inverse_pd()?.sub(&bstar);

    let rec = corollary2_construct(&bstar, &n1, &n2, &n3, mu, None)?;
    println!("A = diag{:?}, ε = {:.2e}", rec.a, rec.eps);
    println!("bound {:.9}, limit {:.9}", rec.bound, rec.limit_bound);
    let (l3, r3, l4, r4) = log_a_identities(&rec)?;
    println!("log identities: {l3:.12} = {r3:.12}, {l4:.12} = {r4:.12}");

    let a = rec.a_matrix();
    let (_, top) = f_max(&a, mu)?;
    for (b, c) in [(-2.0, 0.0), (0.0, 0.0), (1.0, -1.0), (3.0, 2.0)] {
        let e = f_concave(b, c, &a, mu)?;
        println!("f({b:+}, {c:+}) = {:.6} ≤ {top:.6}", e.value);
    }
    Ok(())
}

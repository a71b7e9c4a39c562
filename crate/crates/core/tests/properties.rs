use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use vector_epi::dmregion::{grid_size, h2, simplex_grid};
use vector_epi::epi::{epi_sides, path_f_deriv, EpiInstance, McParams};
use vector_epi::extremal::{corollary2_construct, extremal_sides_gaussian, recover_multipliers, ExtremalInstance};
use vector_epi::gaussinfo::{mi_z_given_output, mmse_x, mmse_z, LinearGaussChannel};
use vector_epi::matcore::{
    clip_eigenvalues, is_psd, logdet, loewner_leq, project_box, project_psd, random, simultaneous_diag, sym_sqrt,
    SymMatrix,
};
use vector_epi::secrecy::{r1_max, random_spec, rates_for_b, weighted_objective, Scenario};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn close(a: &SymMatrix, b: &SymMatrix, tol: f64) -> bool {
    a.sub(b).max_abs() <= tol * a.max_abs().max(b.max_abs()).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sqrt_squares_back(seed in any::<u64>(), n in 1usize..6) {
        let m = random::psd(&mut rng(seed), n, 5.0, 0.3);
        let r = sym_sqrt(&m).unwrap();
        prop_assert!(is_psd(&r));
        prop_assert!(close(&SymMatrix::from_matrix(r.mul(&r)), &m, 1e-12));
    }

    #[test]
    fn logdet_is_sum_of_log_eigenvalues(seed in any::<u64>(), n in 1usize..6) {
        let m = random::pd(&mut rng(seed), n, 0.05, 20.0);
        let direct: f64 = m.eigenvalues().iter().map(|v| v.ln()).sum();
        prop_assert!((logdet(&m).unwrap() - direct).abs() < 1e-10);
    }

    #[test]
    fn simultaneous_diag_diagonalizes_both(seed in any::<u64>(), n in 1usize..6) {
        let mut r = rng(seed);
        let a = random::pd(&mut r, n, 0.1, 5.0);
        let b = random::pd(&mut r, n, 0.1, 5.0);
        let g = simultaneous_diag(&a, &b).unwrap();
        let (ra, rb) = g.residuals(&a, &b);
        prop_assert!(ra < 1e-10 && rb < 1e-10);
    }

    #[test]
    fn psd_projection_is_idempotent(seed in any::<u64>(), n in 1usize..6) {
        let g = random::gaussian_matrix(&mut rng(seed), n);
        let m = SymMatrix::from_matrix(&g + g.transpose());
        let p = project_psd(&m);
        prop_assert!(p.min_eigenvalue() >= -1e-12);
        prop_assert!(close(&project_psd(&p), &p, 1e-12));
        prop_assert!(close(&clip_eigenvalues(&m, 0.0, f64::INFINITY), &p, 1e-12));
    }

    #[test]
    fn box_projection_lands_in_box(seed in any::<u64>(), n in 1usize..5) {
        let mut r = rng(seed);
        let s = random::pd(&mut r, n, 0.2, 3.0);
        let g = random::gaussian_matrix(&mut r, n);
        let b = SymMatrix::from_matrix(&g + g.transpose());
        let p = project_box(&b, &s).unwrap();
        let tol = 1e-8 * s.spectral_norm().max(1.0);
        prop_assert!(p.min_eigenvalue() >= -tol);
        prop_assert!(s.sub(&p).min_eigenvalue() >= -tol);
        let inside = random::between_zero_and(&mut r, &s);
        prop_assert_eq!(project_box(&inside, &s).unwrap(), inside);
    }

    #[test]
    fn loewner_order_under_psd_increment(seed in any::<u64>(), n in 1usize..6) {
        let mut r = rng(seed);
        let a = random::pd(&mut r, n, 0.1, 3.0);
        let inc = random::psd(&mut r, n, 2.0, 0.3);
        prop_assert!(loewner_leq(&a, &a.add(&inc), 1e-12).unwrap());
        prop_assert!(loewner_leq(&a.add(&inc).inverse_pd().unwrap(), &a.inverse_pd().unwrap(), 1e-10).unwrap());
    }

    #[test]
    fn posterior_covariances_are_linked(seed in any::<u64>(), n in 1usize..5) {
        let mut r = rng(seed);
        let d = random::pd(&mut r, n, 0.3, 2.0);
        let b = random::pd(&mut r, n, 0.1, 3.0);
        let nz = random::pd(&mut r, n, 0.1, 3.0);
        let ch = LinearGaussChannel::new(d.clone(), b, nz.clone()).unwrap();
        let cz = mmse_z(&ch).unwrap();
        prop_assert!(close(&mmse_x(&ch).sandwich(&d), &cz, 1e-10));
        prop_assert!(loewner_leq(&cz, &nz, 1e-10).unwrap());
        prop_assert!(mi_z_given_output(&ch).unwrap() >= 0.0);
    }

    #[test]
    fn scalar_a_recovers_costa(seed in any::<u64>(), n in 1usize..5, alpha in 0.0f64..1.0) {
        let mut r = rng(seed);
        let b = random::psd(&mut r, n, 3.0, 0.2);
        let nz = random::pd(&mut r, n, 0.1, 3.0);
        let inst = EpiInstance::gaussian(SymMatrix::identity(n).scale(alpha), nz, b).unwrap();
        let s = epi_sides(&inst, McParams::default()).unwrap();
        prop_assert!(s.gap() >= -1e-9 * s.rhs);
    }

    #[test]
    fn path_derivative_nonnegative_for_commuting_noise(seed in any::<u64>(), n in 1usize..5, gamma in 0.0f64..1.0) {
        let mut r = rng(seed);
        let q = random::orthogonal(&mut r, n);
        let spectrum = |r: &mut ChaCha8Rng, lo: f64, hi: f64| -> Vec<f64> {
            random::pd(r, n, lo, hi).eigenvalues()
        };
        let a = SymMatrix::from_eigen(&spectrum(&mut r, 0.05, 0.95), &q);
        let nz = SymMatrix::from_eigen(&spectrum(&mut r, 0.1, 3.0), &q);
        let b = random::pd(&mut r, n, 0.1, 3.0);
        let inst = EpiInstance::gaussian(a, nz, b).unwrap();
        prop_assert!(path_f_deriv(gamma, &inst).unwrap() >= -1e-9);
    }

    #[test]
    fn gaussian_sides_meet_at_optimum(seed in any::<u64>(), n in 1usize..4) {
        let mut r = rng(seed);
        let s = random::pd(&mut r, n, 0.3, 3.0);
        let n1 = random::pd(&mut r, n, 0.2, 2.0);
        let n0 = n1.add(&random::pd(&mut r, n, 0.1, 1.0));
        let inst = ExtremalInstance::new(s.clone(), n0, vec![n1], vec![1.0]).unwrap();
        // A degraded channel is maximized at B* = S.
        let cert = recover_multipliers(&inst, &s).unwrap();
        prop_assert!(cert.is_valid(1e-9));
        let (l, rhs) = extremal_sides_gaussian(&inst, &s, &s).unwrap();
        prop_assert!((l - rhs).abs() < 1e-10);
    }

    #[test]
    fn two_noise_construction_orders(seed in any::<u64>(), n in 1usize..4, mu in 0.1f64..3.0) {
        let mut r = rng(seed);
        let bstar = random::psd(&mut r, n, 2.0, 0.2);
        let n1 = random::pd(&mut r, n, 0.2, 2.0);
        let n3 = n1.add(&random::pd(&mut r, n, 0.1, 2.0));
        let p1 = bstar.add(&n1).inverse_pd().unwrap();
        let p3 = bstar.add(&n3).inverse_pd().unwrap();
        let n2 = p1.add(&p3.scale(mu)).scale(1.0 / (1.0 + mu)).inverse_pd().unwrap().sub(&bstar);
        let c = corollary2_construct(&bstar, &n1, &n2, &n3, mu, None).unwrap();
        for i in 0..n {
            prop_assert!(c.lambda1[i] <= c.lambda2[i] + 1e-12);
            prop_assert!(c.lambda2[i] < c.lambda2_tilde[i]);
            prop_assert!(c.lambda2_tilde[i] <= c.lambda3_tilde[i] + 1e-12);
            prop_assert!(c.a[i] > 0.0 && c.a[i] < 1.0);
        }
    }

    #[test]
    fn rates_are_bounded_by_corner(seed in any::<u64>(), n in 1usize..4) {
        let mut r = rng(seed);
        let spec = random_spec(&mut r, n);
        let top = r1_max(&spec, Scenario::One);
        for _ in 0..20 {
            let b = random::between_zero_and(&mut r, spec.s());
            let rates = rates_for_b(&b, &spec, Scenario::One).unwrap();
            prop_assert!(rates.r1 >= 0.0 && rates.r2 >= 0.0);
            prop_assert!(rates.r1 <= top + 1e-12);
            let w = weighted_objective(&b, &spec, 0.0, Scenario::One).unwrap();
            prop_assert!((w - rates.r1_raw).abs() < 1e-14);
        }
    }

    #[test]
    fn simplex_grid_is_complete(dim in 1usize..5, k in 1usize..7) {
        let g = simplex_grid(dim, k);
        for p in &g {
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(p.iter().all(|&v| v >= 0.0));
        }
        prop_assert_eq!(grid_size(dim, 1, k), g.len() as u128);
    }

    #[test]
    fn binary_entropy_symmetric(p in 0.0f64..=1.0) {
        prop_assert!((h2(p) - h2(1.0 - p)).abs() < 1e-15);
        prop_assert!(h2(p) >= 0.0 && h2(p) <= std::f64::consts::LN_2 + 1e-15);
    }
}

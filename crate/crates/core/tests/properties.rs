use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use poisson_cpn::lie_core::{
    bracket, haar_sample_with, random_algebra_element, subalgebra, AlgebraElement, SuBasis, SubalgebraKind,
};
use poisson_cpn::poisson_structures::{coisotropy_check, AffinePoissonStructure};
use poisson_cpn::tensor_algebra::{membership_h_wedge_g, Bivector};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_bivector(basis: &SuBasis<f64>, rng: &mut ChaCha8Rng) -> Bivector<f64> {
    let d = basis.dim();
    let a = DMatrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
    Bivector::from_antisymmetric(basis.n(), &a - a.transpose()).unwrap()
}

fn is_antisymmetric(b: &Bivector<f64>) -> bool {
    let c = b.coeffs();
    c == &(-c.transpose())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn operations_keep_antisymmetry(seed in any::<u64>(), n in 2usize..6) {
        let basis = SuBasis::shared(n).unwrap();
        let mut r = rng(seed);
        let x = random_algebra_element(&basis, &mut r);
        let y = random_algebra_element(&basis, &mut r);
        let lambda = random_bivector(&basis, &mut r);
        let g = haar_sample_with(n, &mut r);
        prop_assert!(is_antisymmetric(&basis.wedge(&x, &y).unwrap()));
        prop_assert!(is_antisymmetric(&basis.ad_bivector(&x, &lambda).unwrap()));
        prop_assert!(is_antisymmetric(&basis.adjoint_bivector(&g, &lambda).unwrap()));
    }

    #[test]
    fn bracket_satisfies_jacobi(seed in any::<u64>(), n in 2usize..6) {
        let basis = SuBasis::shared(n).unwrap();
        let mut r = rng(seed);
        let (x, y, z) = (
            random_algebra_element(&basis, &mut r),
            random_algebra_element(&basis, &mut r),
            random_algebra_element(&basis, &mut r),
        );
        let cyc = bracket(&x, &bracket(&y, &z).unwrap()).unwrap()
            + bracket(&y, &bracket(&z, &x).unwrap()).unwrap()
            + bracket(&z, &bracket(&x, &y).unwrap()).unwrap();
        prop_assert!(cyc.frobenius_norm() < 1e-12);
    }

    #[test]
    fn adjoint_is_a_homomorphism(seed in any::<u64>(), n in 2usize..6) {
        let basis = SuBasis::shared(n).unwrap();
        let mut r = rng(seed);
        let g = haar_sample_with(n, &mut r);
        let h = haar_sample_with(n, &mut r);
        let gh = basis.adjoint_matrix(&g.compose(&h).unwrap()).unwrap();
        let prod = basis.adjoint_matrix(&g).unwrap() * basis.adjoint_matrix(&h).unwrap();
        prop_assert!((gh - prod).amax() < 1e-12);
        let e = basis.adjoint_matrix(&g.compose(&g.inverse()).unwrap()).unwrap();
        prop_assert!((e - DMatrix::<f64>::identity(basis.dim(), basis.dim())).amax() < 1e-12);
    }

    #[test]
    fn expansion_round_trips(seed in any::<u64>(), n in 2usize..7) {
        let basis = SuBasis::shared(n).unwrap();
        let x = random_algebra_element(&basis, &mut rng(seed));
        prop_assert!(basis.expansion_residual(&x).unwrap() < 1e-12);
    }

    #[test]
    fn membership_ignores_the_choice_of_h_basis(seed in any::<u64>(), n in 3usize..6) {
        let basis = SuBasis::shared(n).unwrap();
        let mut r = rng(seed);
        let h = subalgebra(n, SubalgebraKind::UBottom).unwrap();
        let k = h.dim();
        // a well-conditioned mixing matrix: identity plus a small perturbation
        let mix = DMatrix::<f64>::identity(k, k) + DMatrix::from_fn(k, k, |_, _| r.random_range(-0.2..0.2));
        let rebased = h.rebased(&mix);
        let lambda = random_bivector(&basis, &mut r);
        let a = membership_h_wedge_g(&lambda, &h).unwrap().residual;
        let b = membership_h_wedge_g(&lambda, &rebased).unwrap().residual;
        prop_assert!((a - b).abs() < 1e-10 * a.max(1.0));
    }

    #[test]
    fn ad_of_h_preserves_h_wedge_g(seed in any::<u64>(), n in 3usize..6) {
        let basis = SuBasis::shared(n).unwrap();
        let mut r = rng(seed);
        let h = subalgebra(n, SubalgebraKind::UBottom).unwrap();
        // Λ = Σ h_k ∧ y_k with h_k ∈ 𝔥
        let mut lambda = Bivector::zero(n);
        for hk in h.basis() {
            let y = random_algebra_element(&basis, &mut r);
            lambda = lambda + basis.wedge(&hk.scale(r.random_range(-1.0..1.0)), &y).unwrap();
        }
        prop_assert!(membership_h_wedge_g(&lambda, &h).unwrap().residual < 1e-10);
        for hk in h.basis() {
            let moved = basis.ad_bivector(hk, &lambda).unwrap();
            prop_assert!(membership_h_wedge_g(&moved, &h).unwrap().residual < 1e-10);
        }
    }
}

#[test]
fn corrupted_x_sigma_breaks_coisotropy() {
    for n in 3..6 {
        let s = AffinePoissonStructure::new(n, 0.5).unwrap();
        let h = subalgebra(n, SubalgebraKind::UBottom).unwrap();
        assert!(coisotropy_check(&h, &s.adjoint_r()).unwrap().pass);
        let basis = SuBasis::shared(n).unwrap();
        // both directions lie outside u(n-1)
        let m1 = AlgebraElement::x_plus(n, 0, 1);
        let m2 = AlgebraElement::x_minus(n, 0, 2);
        let corrupted = s.adjoint_r() + basis.wedge(&m1, &m2).unwrap().scale(0.1);
        let report = coisotropy_check(&h, &corrupted).unwrap();
        assert!(!report.pass && report.residual() > 1e-3, "n={n}: {}", report.residual());
    }
}

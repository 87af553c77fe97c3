use num_complex::Complex64 as C;
use picard_core::eisenstein_ring::{gcd, EisInt};
use picard_core::geometry::{sigma, triangle_check, u_invariant};
use picard_core::hypergeometric::{contiguous_residual, gamma, HypArgs, RelationId};
use picard_core::kernels::{kernel_covariance_residual, poisson_transform_residual, SpectralParam};
use picard_core::picard_series::{enumerate_isotropic, IsotropicVector};
use picard_core::unitary_group::{cocycle_j, random_element, random_point, BoundaryPoint};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn eis() -> impl Strategy<Value = EisInt> {
    (-40i64..40, -40i64..40).prop_map(|(x, y)| EisInt::from_omega_basis(x, y).unwrap())
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn ring_laws(x in eis(), y in eis(), z in eis()) {
        prop_assert_eq!(x.checked_mul(y).unwrap(), y.checked_mul(x).unwrap());
        let l = x.checked_mul(y).unwrap().checked_mul(z).unwrap();
        let r = x.checked_mul(y.checked_mul(z).unwrap()).unwrap();
        prop_assert_eq!(l, r);
        let d = x.checked_mul(y.checked_add(z).unwrap()).unwrap();
        prop_assert_eq!(d, x.checked_mul(y).unwrap().checked_add(x.checked_mul(z).unwrap()).unwrap());
        prop_assert_eq!(x.checked_mul(y).unwrap().norm(), x.norm() * y.norm());
    }

    #[test]
    fn euclidean_division(x in eis(), y in eis()) {
        prop_assume!(!y.is_zero());
        let (q, r) = x.div_rem(y).unwrap();
        prop_assert_eq!(q.checked_mul(y).unwrap().checked_add(r).unwrap(), x);
        prop_assert!(r.norm() < y.norm());
    }

    #[test]
    fn gcd_divides(x in eis(), y in eis()) {
        prop_assume!(!(x.is_zero() && y.is_zero()));
        let g = gcd(x, y).unwrap();
        prop_assert!(g.divides(x) && g.divides(y));
        prop_assert!(g.is_canonical());
    }

    #[test]
    fn text_round_trip(x in eis()) {
        prop_assert_eq!(x.to_string().parse::<EisInt>().unwrap(), x);
        let long = format!("{}/2{:+}/2*sqrt(-3)", x.a, x.b);
        prop_assert_eq!(long.parse::<EisInt>().unwrap(), x);
    }

    #[test]
    fn sigma_is_invariant(seed in any::<u64>()) {
        let mut r = rng(seed);
        let g = random_element(&mut r, 1.0);
        let (z, w) = (random_point(&mut r, 1.0), random_point(&mut r, 1.0));
        let s0 = sigma(&z, &w);
        let s1 = sigma(&g.act(&z).unwrap(), &g.act(&w).unwrap());
        prop_assert!((s1 - s0).abs() <= 1e-9 * s0);
        prop_assert!((u_invariant(&z, &w) - u_invariant(&w, &z)).abs() <= 1e-12 * (1.0 + s0));
        prop_assert!(u_invariant(&z, &w) >= 0.0);
    }

    #[test]
    fn cocycle_and_inverse(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (g, h) = (random_element(&mut r, 1.0), random_element(&mut r, 1.0));
        let z = random_point(&mut r, 1.0);
        let lhs = cocycle_j(&g.compose(&h), &z);
        let rhs = cocycle_j(&g, &h.act(&z).unwrap()) * cocycle_j(&h, &z);
        prop_assert!((lhs - rhs).norm() <= 1e-9 * lhs.norm());
        let back = g.inverse().act(&g.act(&z).unwrap()).unwrap();
        prop_assert!((back.z1 - z.z1).norm() + (back.z2 - z.z2).norm() <= 1e-8 * (1.0 + z.z1.norm()));
    }

    #[test]
    fn triangle_inequality(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (p, q, s) = (random_point(&mut r, 2.0), random_point(&mut r, 2.0), random_point(&mut r, 2.0));
        prop_assert!(triangle_check(&p, &q, &s).ok);
    }

    #[test]
    fn kernels_transform(seed in any::<u64>(), k in -2i32..=2, s in 1.1f64..1.9) {
        let mut r = rng(seed);
        let g = random_element(&mut r, 0.7);
        let (z, z2) = (random_point(&mut r, 0.7), random_point(&mut r, 0.7));
        let w = BoundaryPoint::new(C::new(0.3, -0.2), 0.4);
        let p = SpectralParam::real(s, k);
        prop_assert!(poisson_transform_residual(&g, &z, &w, p).unwrap() < 1e-9);
        prop_assert!(kernel_covariance_residual(&g, &z, &z2, p).unwrap() < 1e-8);
    }

    #[test]
    fn gamma_recurrence(re in -3.5f64..5.0, im in -3.0f64..3.0) {
        let z = C::new(re, im);
        prop_assume!((z - z.re.round()).norm() > 0.05);
        let lhs = gamma(z + 1.0);
        let rhs = z * gamma(z);
        prop_assert!((lhs - rhs).norm() <= 1e-12 * rhs.norm().max(1e-300));
    }

    #[test]
    fn pfaff_on_disk(a in -1.0f64..1.0, b in -1.0f64..1.0, c in 0.6f64..2.4, r in 0.0f64..0.8, th in -3.1f64..3.1) {
        let args = HypArgs::new(C::from(a), C::from(b), C::from(c), C::from_polar(r, th));
        prop_assert!(contiguous_residual(RelationId::Pfaff, args).unwrap() < 1e-10);
        prop_assert!(contiguous_residual(RelationId::CThreeTerm, args).unwrap() < 1e-10);
    }
}

#[test]
fn involution_preserves_cone_and_height() {
    for v in enumerate_isotropic(7, false).unwrap() {
        let w = v.involution();
        assert!(IsotropicVector::try_new(w.a1, w.a2, w.a3).is_ok());
        assert_eq!(w.height(), v.height());
        assert_eq!(w.involution(), v);
    }
}

use locint::intersect::{case_formula, ddd_second_difference, reassemble_from_cases};
use locint::padic::{legendre_u64, Valuation};
use locint::*;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use proptest::prelude::*;

fn prime() -> impl Strategy<Value = u64> {
    prop::sample::select(vec![3u64, 5, 7, 11, 13])
}

fn classes() -> impl Strategy<Value = [i8; 3]> {
    prop::array::uniform3(prop::sample::select(vec![1i8, -1]))
}

fn unit(p: u64) -> impl Strategy<Value = i64> {
    (1i64..1000).prop_filter("unit", move |x| x % p as i64 != 0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn legendre_is_multiplicative((p, x, y) in prime().prop_flat_map(|p| (Just(p), unit(p), unit(p)))) {
        let (x, y) = (x as u64, y as u64);
        prop_assert_eq!(legendre_u64(x * y, p), legendre_u64(x, p) * legendre_u64(y, p));
    }

    #[test]
    fn valuation_is_additive(p in prime(), i in 0u32..6, j in 0u32..6, u in 1i64..500, w in 1i64..500) {
        prop_assume!(u % p as i64 != 0 && w % p as i64 != 0);
        let n = 30;
        let x = PAdicValue::new(p, n, BigInt::from(p).pow(i) * u).unwrap();
        let y = PAdicValue::new(p, n, BigInt::from(p).pow(j) * w).unwrap();
        prop_assert_eq!((&x * &y).valuation().unwrap(), Valuation::Finite(i + j));
    }

    #[test]
    fn norm_is_multiplicative_and_conj_involutive(p in prime(), c in prop::array::uniform4(-50i64..50)) {
        let n = 20;
        let x = QuadExtValue::from_ints(p, n, c[0], c[1]).unwrap();
        let y = QuadExtValue::from_ints(p, n, c[2], c[3]).unwrap();
        let (lhs, rhs) = ((&x * &y).norm(), &x.norm() * &y.norm());
        prop_assert_eq!(lhs.residue(), rhs.residue());
        prop_assert_eq!(x.conj().conj(), x);
    }

    #[test]
    fn invariants_survive_unimodular_conjugation(
        (p, a, u) in prime().prop_flat_map(|p| (Just(p), prop::array::uniform3(0u32..4), prop::array::uniform3(unit(p)))),
        seed in any::<u64>(),
    ) {
        let d = [0, 1, 2].map(|k| (p as i64).pow(a[k]) * u[k]);
        let t = SymMatrix3::diag(p, d).unwrap();
        let base = compute_invariants(&diagonalize(&t).unwrap());
        let inv = compute_invariants(&diagonalize(&random_unimodular_conjugate(&t, seed)).unwrap());
        prop_assert_eq!(inv.a, base.a);
        prop_assert_eq!((inv.sigma, inv.eta, inv.eps_sign), (base.sigma, base.eta, base.eps_sign));
        prop_assert_eq!(ftilde(&inv).unwrap(), ftilde(&base).unwrap());
        prop_assert_eq!(closed_intersection(&inv).ok(), closed_intersection(&base).ok());
    }

    #[test]
    fn admissible_tuples_have_an_odd_exponent(p in prime(), a in prop::array::uniform3(0u32..10), c in classes()) {
        let inv = TInvariants::from_exponents(p, a, c).unwrap();
        if inv.is_admissible() {
            prop_assert!(inv.a.iter().any(|x| x % 2 == 1));
        }
    }

    #[test]
    fn series_normalization_and_relation(p in prime(), a in prop::array::uniform3(0u32..12), c in classes()) {
        let inv = TInvariants::from_exponents(p, a, c).unwrap();
        prop_assume!(inv.is_admissible());
        prop_assert_eq!(ftilde(&inv).unwrap().coeff(0), BigRational::one());
        prop_assert!(a_series(&inv).unwrap().eval(&BigRational::one()).is_zero());
        let r = relation_check(&inv).unwrap();
        prop_assert_eq!(r.from_density, BigRational::from_integer(r.closed));
    }

    #[test]
    fn case_table_beyond_the_acceptance_grid(p in prime(), a in prop::array::uniform3(1u32..12), c in classes()) {
        let inv = TInvariants::from_exponents(p, a, c).unwrap();
        prop_assume!(inv.is_admissible());
        let row = case_formula(p, inv.a, inv.classes).unwrap();
        prop_assert_eq!(ddd_second_difference(p, inv.a, row.classes, row.slots).unwrap(), row.value);
        prop_assert_eq!(reassemble_from_cases(p, inv.a, inv.classes).unwrap(), closed_intersection(&inv).unwrap());
    }

    #[test]
    fn shifting_every_exponent_by_two_keeps_the_sign(p in prime(), a in prop::array::uniform3(0u32..6), c in classes()) {
        // p²·T has exponents a + 2 and the same classes and sign.
        let inv = TInvariants::from_exponents(p, a, c).unwrap();
        let up = TInvariants::from_exponents(p, a.map(|x| x + 2), c).unwrap();
        prop_assert_eq!(inv.is_admissible(), up.is_admissible());
        prop_assert_eq!((inv.sigma, inv.eta), (up.sigma, up.eta));
    }
}

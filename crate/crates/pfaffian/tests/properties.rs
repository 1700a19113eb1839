//! Randomized algebraic invariants, checked with proptest.

use proptest::prelude::*;

use pfaffian::parse::parse_expression;
use pfaffian::poly::{Poly, PolyMap};
use pfaffian::rat::{rat, rat_int, Rat};
use pfaffian::series::{MultiIndex, Series, SeriesVec};
use pfaffian::solver::{residual, solve_formal, FreePolicy, SolveStatus};
use pfaffian::system::PfaffianSystem;

const M: usize = 2; // axis count used throughout
const TRUNC: u32 = 5;

fn arb_rat() -> impl Strategy<Value = Rat> {
    (-20i64..=20, 1i64..=6).prop_map(|(a, b)| rat(a, b))
}

fn arb_index(m: usize, max_deg: u32) -> impl Strategy<Value = MultiIndex> {
    prop::collection::vec(0..=max_deg, m).prop_filter_map("degree cap", move |v| {
        let k = MultiIndex(v);
        (k.degree() <= max_deg).then_some(k)
    })
}

fn arb_series() -> impl Strategy<Value = Series> {
    prop::collection::vec((arb_index(M, TRUNC), arb_rat()), 0..6)
        .prop_map(|terms| Series::from_terms(M, TRUNC, terms).unwrap())
}

fn arb_poly() -> impl Strategy<Value = Poly> {
    prop::collection::vec((arb_index(M, 2), arb_index(1, 2), arb_rat()), 0..5).prop_map(|terms| {
        Poly::from_terms(M, 1, terms.into_iter().map(|(x, y, c)| (x, y, c)))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn series_ring_axioms(a in arb_series(), b in arb_series(), c in arb_series()) {
        prop_assert_eq!(a.add(&b).unwrap(), b.add(&a).unwrap());
        prop_assert_eq!(
            a.add(&b).unwrap().add(&c).unwrap(),
            a.add(&b.add(&c).unwrap()).unwrap()
        );
        prop_assert_eq!(a.mul(&b).unwrap(), b.mul(&a).unwrap());
        prop_assert_eq!(
            a.mul(&b).unwrap().mul(&c).unwrap(),
            a.mul(&b.mul(&c).unwrap()).unwrap()
        );
        prop_assert_eq!(
            a.mul(&b.add(&c).unwrap()).unwrap(),
            a.mul(&b).unwrap().add(&a.mul(&c).unwrap()).unwrap()
        );
        prop_assert_eq!(a.add(&a.neg()).unwrap(), Series::zero(M, TRUNC));
        prop_assert_eq!(a.mul(&Series::one(M, TRUNC)).unwrap(), a.clone());
    }

    #[test]
    fn partial_product_rule(a in arb_series(), b in arb_series(), axis in 1usize..=M) {
        // d(ab) = (da)b + a(db), compared at the common truncation.
        let prod = a.mul(&b).unwrap();
        let lhs = prod.partial(axis).unwrap();
        let rhs = a
            .partial(axis)
            .unwrap()
            .mul(&b.retrunc(TRUNC - 1))
            .unwrap()
            .add(&a.retrunc(TRUNC - 1).mul(&b.partial(axis).unwrap()).unwrap())
            .unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn partials_commute(a in arb_series()) {
        let d12 = a.partial(1).unwrap().partial(2).unwrap();
        let d21 = a.partial(2).unwrap().partial(1).unwrap();
        prop_assert_eq!(d12, d21);
    }

    #[test]
    fn restrict_is_ring_morphism(a in arb_series(), b in arb_series(), axis in 1usize..=M) {
        prop_assert_eq!(
            a.add(&b).unwrap().restrict_axis(axis).unwrap(),
            a.restrict_axis(axis).unwrap().add(&b.restrict_axis(axis).unwrap()).unwrap()
        );
        prop_assert_eq!(
            a.mul(&b).unwrap().restrict_axis(axis).unwrap(),
            a.restrict_axis(axis).unwrap().mul(&b.restrict_axis(axis).unwrap()).unwrap()
        );
    }

    #[test]
    fn poly_print_parse_round_trip(p in arb_poly()) {
        let text = p.to_string();
        let back = parse_expression(&text, M, 1).unwrap();
        prop_assert_eq!(back, p);
    }

    #[test]
    fn eval_is_multiplicative(p in arb_poly(), q in arb_poly(), phi0 in arb_series()) {
        // Substitution must kill constant terms first: solutions vanish
        // at the origin, so drop any constant from the sample.
        let shifted = phi0
            .sub(&Series::constant(M, TRUNC, phi0.constant_term()))
            .unwrap();
        let phi = SeriesVec::new(vec![shifted]).unwrap();
        let lhs = p.mul(&q).unwrap().eval_series(&phi).unwrap();
        let rhs = p
            .eval_series(&phi)
            .unwrap()
            .mul(&q.eval_series(&phi).unwrap())
            .unwrap();
        prop_assert_eq!(lhs, rhs.retrunc(TRUNC));
    }

    #[test]
    fn solver_is_deterministic_and_residual_free(
        entries in prop::collection::vec(-3i64..=3, 8),
        forcing in prop::collection::vec(-2i64..=2, 4),
    ) {
        // Random linear p = [2,2] systems: solve twice, expect identical
        // output, and a vanishing residual whenever the status is Solved.
        let n = 2usize;
        let build = |vals: &[i64], axis: usize, force: &[i64]| -> PolyMap {
            let comps: Vec<Poly> = (0..n)
                .map(|a| {
                    let mut terms = Vec::new();
                    for b in 0..n {
                        let c = vals[a * n + b];
                        if c != 0 {
                            terms.push((
                                MultiIndex::zero(M),
                                MultiIndex::unit(n, b + 1),
                                rat_int(c),
                            ));
                        }
                    }
                    if force[a] != 0 {
                        terms.push((
                            MultiIndex::unit(M, axis),
                            MultiIndex::zero(n),
                            rat_int(force[a]),
                        ));
                    }
                    Poly::from_terms(M, n, terms)
                })
                .collect();
            PolyMap::new(comps).unwrap()
        };
        let f1 = build(&entries[..4], 1, &forcing[..2]);
        let f2 = build(&entries[4..], 2, &forcing[2..]);
        let sys = PfaffianSystem::new(M, n, vec![2, 2], vec![f1, f2]).unwrap();
        let (sol_a, rep_a) = solve_formal(&sys, 6, &FreePolicy::Zero).unwrap();
        let (sol_b, rep_b) = solve_formal(&sys, 6, &FreePolicy::Zero).unwrap();
        prop_assert_eq!(&rep_a.status, &rep_b.status);
        prop_assert_eq!(&sol_a.phi, &sol_b.phi);
        if rep_a.status == SolveStatus::Solved {
            let res = residual(&sys, &sol_a.phi).unwrap();
            prop_assert!(res.iter().all(SeriesVec::is_zero));
        }
    }
}

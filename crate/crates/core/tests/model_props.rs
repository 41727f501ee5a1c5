use proptest::prelude::*;

use distmerge::model::InvariantViolation;
use distmerge::{Itemset, Model, Params};

fn arb_params() -> impl Strategy<Value = Params> {
    (
        1u32..=16,
        2u32..=30,
        0.0f64..0.7,
        0.0f64..=1.0,
        0usize..400,
        any::<u64>(),
    )
        .prop_flat_map(|(n, ell, mergedist, alpha, pairs, seed)| {
            (0.5f64..=f64::from(ell), 1u64..=2 * u64::from(ell)).prop_map(
                move |(minsupp, split_age)| Params {
                    n,
                    minsupp,
                    ell,
                    mergedist,
                    alpha,
                    pair_budget: pairs,
                    split_age,
                    seed,
                },
            )
        })
}

fn arb_stream(n: u32) -> impl Strategy<Value = Vec<Itemset>> {
    // Records drawn from a few overlapping templates so merges happen.
    let template = prop::collection::btree_set(0..n, 0..=(n as usize).min(6));
    (
        prop::collection::vec(template, 1..4),
        prop::collection::vec((any::<prop::sample::Index>(), any::<u32>()), 0..150),
    )
        .prop_map(|(templates, picks)| {
            picks
                .into_iter()
                .map(|(idx, drop)| {
                    let t = idx.get(&templates);
                    Itemset::from_items(
                        t.iter()
                            .copied()
                            .filter(|i| drop >> (i % 32) & 1 == 0 || drop % 3 == 0),
                    )
                })
                .collect()
        })
}

fn arb_case() -> impl Strategy<Value = (Params, Vec<Itemset>)> {
    arb_params().prop_flat_map(|p| {
        let n = p.n;
        (Just(p), arb_stream(n))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn invariants_hold_after_every_record((params, stream) in arb_case()) {
        let mut model = Model::new(params).unwrap();
        for r in &stream {
            let before = model.clock();
            model.process_record(r).unwrap();
            prop_assert_eq!(model.clock(), before + 1);
            let checked: Result<(), InvariantViolation> = model.check_invariants();
            prop_assert!(checked.is_ok(), "{:?} at clock {}", checked, model.clock());
        }
    }

    #[test]
    fn runs_are_reproducible((params, stream) in arb_case()) {
        let mut a = Model::new(params.clone()).unwrap();
        let mut b = Model::new(params).unwrap();
        for r in &stream {
            prop_assert_eq!(a.process_record(r).unwrap(), b.process_record(r).unwrap());
        }
        prop_assert_eq!(a.snapshot(), b.snapshot());
    }

    #[test]
    fn state_stays_bounded((params, stream) in arb_case()) {
        let ell = f64::from(params.ell);
        let mut model = Model::new(params).unwrap();
        for r in &stream {
            model.process_record(r).unwrap();
            for p in model.patterns() {
                prop_assert!((0.0..=ell).contains(&p.support.value()));
                prop_assert!(p.birth() <= model.clock());
                prop_assert!(p.point.x.is_finite() && p.point.y.is_finite(), "{:?}", p);
            }
        }
    }

    #[test]
    fn empty_records_only_age_the_model(params in arb_params(), count in 1usize..40) {
        let mut model = Model::new(params).unwrap();
        let start = model.snapshot();
        for _ in 0..count {
            let out = model.process_record(&Itemset::new()).unwrap();
            prop_assert_eq!(out.pulls + out.pushes + out.merges, 0);
        }
        let end = model.snapshot();
        let items = |s: &distmerge::ModelSnapshot| s.patterns.iter().map(|p| p.items.clone()).collect::<Vec<_>>();
        prop_assert_eq!(items(&start), items(&end));
        for (a, b) in start.patterns.iter().zip(&end.patterns) {
            prop_assert_eq!(a.point, b.point);
        }
    }
}

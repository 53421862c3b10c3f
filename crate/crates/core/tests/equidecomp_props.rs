use clopen_lab::equidecomp::*;
use clopen_lab::space_model::*;
use proptest::prelude::*;

/// Union of level-`n` odometer atoms selected by `mask` (bit `v` is the atom with value `v`).
fn odo_set(mask: u32, n: u32) -> ClopenExpr {
    ClopenExpr::union_all((0..1u32 << n).filter(|v| mask >> v & 1 == 1).map(|v| {
        let digits = (0..n).map(|i| v >> i & 1).collect();
        ClopenExpr::cyl(digits, Anchor::Level(1))
    }))
}

fn shift_set(mask: u32) -> ClopenExpr {
    ClopenExpr::union_all(
        (0..4u32)
            .filter(|v| mask >> v & 1 == 1)
            .map(|v| ClopenExpr::cyl(vec![v & 1, v >> 1], Anchor::Pos(0))),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn larger_budgets_keep_witnesses(ma in 0u32..16, mb in 0u32..16, l in 0usize..3) {
        let act = ActionSpec::odometer(2);
        let (a, b) = (odo_set(ma, 2), odo_set(mb, 2));
        let small = SearchBudget { word_len: l, max_depth: 1, ..Default::default() };
        let big = SearchBudget { word_len: l + 1, max_depth: 2, ..Default::default() };
        if subequidecompose(&act, &a, &b, &small).unwrap().is_found() {
            prop_assert!(subequidecompose(&act, &a, &b, &big).unwrap().is_found());
        }
    }

    #[test]
    fn witnesses_compose(ma in 0u32..16, mb in 0u32..16, mc in 0u32..16) {
        let act = ActionSpec::odometer(2);
        let budget = SearchBudget::with_word_len(2);
        let (a, b, c) = (odo_set(ma, 2), odo_set(mb, 2), odo_set(mc, 2));
        let w1 = subequidecompose(&act, &a, &b, &budget).unwrap();
        let w2 = subequidecompose(&act, &b, &c, &budget).unwrap();
        if let (Some(w1), Some(w2)) = (w1.witness(), w2.witness()) {
            let w = compose(&act, w1, w2).unwrap();
            let check = verify_witness(&act, &TypeExpr::single(a), &TypeExpr::single(c), &w).unwrap();
            prop_assert_eq!(check, Ok(()));
        }
    }

    #[test]
    fn shift_witnesses_verify(ma in 1u32..16, mb in 1u32..16) {
        let act = ActionSpec::full_shift(2, 1);
        let budget = SearchBudget { word_len: 2, max_depth: 1, max_nodes: 5_000, ..Default::default() };
        let (a, b) = (shift_set(ma), shift_set(mb));
        if let SearchOutcome::Found(w) = subequidecompose(&act, &a, &b, &budget).unwrap() {
            let check = verify_witness(&act, &TypeExpr::single(a), &TypeExpr::single(b), &w).unwrap();
            prop_assert_eq!(check, Ok(()));
        }
    }

    #[test]
    fn hall_violations_recount(
        pa in prop::collection::vec((1u64..7, 0i64..7), 1..3),
        pb in prop::collection::vec((1u64..7, 0i64..7), 1..3),
        s in prop::collection::btree_set(-2i64..3, 1..3),
    ) {
        let a = ZSubsetSpec::ProgressionUnion(pa);
        let b = ZSubsetSpec::ProgressionUnion(pb);
        let shifts: Vec<i64> = s.into_iter().collect();
        match zsubset_equidecompose(&a, &b, &shifts, 60).unwrap() {
            ZOutcome::HallViolation(v) => {
                prop_assert!(v.f.iter().all(|&x| a.contains(x)));
                let mut nb: Vec<i64> = v.f.iter().flat_map(|x| shifts.iter().map(move |s| x + s)).filter(|&y| b.contains(y)).collect();
                nb.sort_unstable();
                nb.dedup();
                prop_assert!(nb.len() < v.f.len());
            }
            ZOutcome::Witness(w) => prop_assert!(w.verify(&a, &b)),
            ZOutcome::Unknown { .. } => {}
        }
    }
}

#[test]
fn weiss_set_needs_more_shifts() {
    let a = ZSubsetSpec::weiss();
    let b = a.clone().complement();
    match zsubset_equidecompose(&a, &b, &[-1, 0, 1], 4096).unwrap() {
        ZOutcome::HallViolation(v) => assert!(v.recheck(&a, &b)),
        other => panic!("{other:?}"),
    }
}

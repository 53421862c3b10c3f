use super::*;
use crate::space_model::{parse_clopen_for, FiniteAction};

fn odo() -> ActionSpec {
    ActionSpec::odometer(2)
}

fn c(action: &ActionSpec, s: &str) -> ClopenExpr {
    parse_clopen_for(action, s).unwrap()
}

fn found(o: SearchOutcome) -> EquidecompositionWitness {
    match o {
        SearchOutcome::Found(w) => w,
        SearchOutcome::Exhausted(r) => panic!("exhausted: {r:?}"),
    }
}

fn words(action: &ActionSpec, w: &EquidecompositionWitness) -> Vec<String> {
    let s = action.schema();
    w.pieces.iter().map(|p| s.format(&p.word)).collect()
}

#[test]
fn odometer_low_atom_into_high_half() {
    let act = odo();
    let w = found(
        subequidecompose(
            &act,
            &c(&act, "[00]"),
            &c(&act, "[1]"),
            &SearchBudget::with_word_len(1),
        )
        .unwrap(),
    );
    assert_eq!(words(&act, &w), ["+1"]);
    assert!(same_set(&act, &w.pieces[0].clopen, &c(&act, "[00]")).unwrap());
    assert!(same_set(&act, &w.pieces[0].image, &c(&act, "[10]")).unwrap());
}

#[test]
fn equal_sets_use_the_identity() {
    for act in [
        odo(),
        ActionSpec::full_shift(2, 1),
        ActionSpec::Finite(FiniteAction::cyclic(&[1, 0, 2])),
    ] {
        let e = match act {
            ActionSpec::Finite(_) => c(&act, "[0] | [2]"),
            ActionSpec::Odometer { .. } => c(&act, "[01] | [1]@L3"),
            _ => c(&act, "[01] | [1]@3"),
        };
        let w = found(subequidecompose(&act, &e, &e, &SearchBudget::with_word_len(0)).unwrap());
        assert_eq!(words(&act, &w), ["id"]);
    }
}

#[test]
fn shift_translation_witness() {
    let act = ActionSpec::full_shift(2, 1);
    let w = found(
        subequidecompose(
            &act,
            &c(&act, "[1]@0"),
            &c(&act, "[1]@5"),
            &SearchBudget::with_word_len(5),
        )
        .unwrap(),
    );
    assert_eq!(words(&act, &w), ["+5"]);
    let short = subequidecompose(
        &act,
        &c(&act, "[1]@0"),
        &c(&act, "[1]@5"),
        &SearchBudget::with_word_len(4),
    )
    .unwrap();
    assert!(!short.is_found());
}

#[test]
fn type_leq_two_copies() {
    let act = odo();
    let a = TypeExpr::parse(&act, "2*[0]").unwrap();
    let b = TypeExpr::parse(&act, "[0] + [1]").unwrap();
    let w = found(type_leq(&act, &a, &b, &SearchBudget::with_word_len(1)).unwrap());
    let got: Vec<(usize, usize, String)> = w
        .pieces
        .iter()
        .map(|p| (p.copy, p.to, act.schema().format(&p.word)))
        .collect();
    assert_eq!(got, [(0, 0, "id".to_string()), (1, 1, "+1".to_string())]);
    let zero =
        found(type_leq(&act, &TypeExpr::zero(), &b, &SearchBudget::with_word_len(0)).unwrap());
    assert!(zero.pieces.is_empty());
    // 3·[0] has more mass than [0] + [1]
    let big = TypeExpr::parse(&act, "3*[0]").unwrap();
    assert!(!type_leq(&act, &big, &b, &SearchBudget::with_word_len(3))
        .unwrap()
        .is_found());
}

#[test]
fn finite_swap_witness() {
    let act = ActionSpec::Finite(FiniteAction::cyclic(&[1, 0]));
    let w = found(
        type_leq(
            &act,
            &TypeExpr::single(c(&act, "[0]")),
            &TypeExpr::single(c(&act, "[1]")),
            &SearchBudget::with_word_len(1),
        )
        .unwrap(),
    );
    assert_eq!(words(&act, &w), ["g1"]);
}

#[test]
fn equi_mode_requires_tiling() {
    let act = odo();
    let budget = SearchBudget::with_word_len(1);
    let w = found(equidecompose(&act, &c(&act, "[0]"), &c(&act, "[1]"), &budget).unwrap());
    assert_eq!(w.mode, Mode::Equi);
    assert!(
        !equidecompose(&act, &c(&act, "[00]"), &c(&act, "[1]"), &budget)
            .unwrap()
            .is_found()
    );
    let fs = ActionSpec::full_shift(2, 1);
    let w = found(
        equidecompose(
            &fs,
            &c(&fs, "[0]@0"),
            &c(&fs, "[0]@2"),
            &SearchBudget::with_word_len(2),
        )
        .unwrap(),
    );
    assert_eq!(words(&fs, &w), ["+2"]);
}

#[test]
fn shift_overlap_is_exhausted() {
    let fs = ActionSpec::full_shift(2, 1);
    let a = TypeExpr::parse(&fs, "2*[0]@0").unwrap();
    let b = TypeExpr::single(ClopenExpr::Full);
    let budget = SearchBudget {
        word_len: 1,
        max_depth: 2,
        ..Default::default()
    };
    match type_leq(&fs, &a, &b, &budget).unwrap() {
        SearchOutcome::Exhausted(r) => {
            assert_eq!(r.depths_tried.len(), 3);
            assert_eq!(r.budget, budget);
        }
        other => panic!("{other:?}"),
    }
    let ok = TypeExpr::parse(&fs, "[0]@0 + [1]@0").unwrap();
    assert!(type_leq(&fs, &ok, &b, &budget).unwrap().is_found());
}

#[test]
fn amoo_single_one_moves() {
    let act = ActionSpec::at_most_one_one();
    let w = found(
        subequidecompose(
            &act,
            &c(&act, "[1]@0"),
            &c(&act, "[1]@2"),
            &SearchBudget::with_word_len(2),
        )
        .unwrap(),
    );
    assert_eq!(words(&act, &w), ["+2"]);
}

#[test]
fn exhaustion_steps() {
    let act = odo();
    let s = act.schema();
    let (a, b) = (c(&act, "[00]"), c(&act, "[1]"));
    let steps =
        exhaustion_compare(&act, &a, &b, &[s.identity(), s.parse("+1").unwrap()], None).unwrap();
    assert_eq!(steps[0].piece, ClopenExpr::Empty);
    assert!(same_set(&act, &steps[1].piece, &a).unwrap());
    assert_eq!(steps[1].residual, ClopenExpr::Empty);

    let inside = exhaustion_compare(&act, &a, &c(&act, "[0]"), &[s.identity()], None).unwrap();
    assert!(same_set(&act, &inside[0].piece, &a).unwrap());
    assert_eq!(inside[0].residual, ClopenExpr::Empty);

    let fs = ActionSpec::full_shift(2, 1);
    let a = c(&fs, "[0]@0");
    let steps = exhaustion_compare(
        &fs,
        &a,
        &c(&fs, "[1]@0"),
        &fs.schema().ball(0),
        Some(&Depth::Window1 { lo: 0, len: 2 }),
    )
    .unwrap();
    assert!(steps
        .iter()
        .all(|st| same_set(&fs, &st.residual, &a).unwrap()));
}

#[test]
fn composition_is_verified() {
    let act = odo();
    let budget = SearchBudget::with_word_len(2);
    let (a, b, cc) = (c(&act, "[000]"), c(&act, "[10]"), c(&act, "[1]"));
    let w1 = found(subequidecompose(&act, &a, &b, &budget).unwrap());
    let w2 = found(subequidecompose(&act, &b, &cc, &budget).unwrap());
    let w = compose(&act, &w1, &w2).unwrap();
    assert_eq!(w.budget.word_len, 4);
    let (ta, tc) = (TypeExpr::single(a), TypeExpr::single(cc));
    assert_eq!(verify_witness(&act, &ta, &tc, &w).unwrap(), Ok(()));
}

#[test]
fn tampered_witness_is_rejected() {
    let act = odo();
    let (a, b) = (c(&act, "[00]"), c(&act, "[1]"));
    let mut w = found(subequidecompose(&act, &a, &b, &SearchBudget::with_word_len(1)).unwrap());
    w.pieces[0].word = act.schema().identity();
    let r = verify_witness(&act, &TypeExpr::single(a), &TypeExpr::single(b), &w).unwrap();
    assert!(r.is_err());
}

#[test]
fn json_round_trip() {
    let act = odo();
    let (a, b) = (c(&act, "[00] | [11]"), c(&act, "[1]"));
    let w = found(subequidecompose(&act, &a, &b, &SearchBudget::with_word_len(2)).unwrap());
    let back = EquidecompositionWitness::from_json(&act, &w.to_json(&act)).unwrap();
    assert_eq!(back.pieces.len(), w.pieces.len());
    assert_eq!(
        verify_witness(&act, &TypeExpr::single(a), &TypeExpr::single(b), &back).unwrap(),
        Ok(())
    );
}

#[test]
fn dot_exports() {
    let act = odo();
    let empty = found(
        subequidecompose(
            &act,
            &ClopenExpr::Empty,
            &c(&act, "[1]"),
            &SearchBudget::default(),
        )
        .unwrap(),
    );
    assert_eq!(emit_dot(&act, &empty), "graph witness {\n}\n");

    let fs = ActionSpec::full_shift(2, 1);
    let one = found(
        subequidecompose(
            &fs,
            &c(&fs, "[1]@0"),
            &c(&fs, "[1]@1"),
            &SearchBudget::with_word_len(1),
        )
        .unwrap(),
    );
    let dot = emit_dot(&fs, &one);
    assert_eq!(dot.matches("[label=").count(), 3);
    assert_eq!(dot.matches(" -- ").count(), 1);

    let all = c(&act, "[00] | [01] | [10] | [11]");
    let w = found(subequidecompose(&act, &all, &all, &SearchBudget::with_word_len(2)).unwrap());
    let m = w.matching.as_ref().unwrap();
    assert_eq!((m.left.len(), m.right.len(), m.matched.len()), (4, 4, 4));
    let dot = emit_dot(&act, &w);
    assert_eq!(dot.matches("color=red").count(), 4);
    assert_eq!(dot.matches(" -- ").count(), 16);
}

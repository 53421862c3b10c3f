use super::*;
use crate::space_model::{parse_clopen_for, FiniteAction};

fn c(action: &ActionSpec, s: &str) -> ClopenExpr {
    parse_clopen_for(action, s).unwrap()
}

fn r(n: i64, d: i64) -> Q {
    Q::new(n.into(), d.into())
}

#[test]
fn odometer_level_two_has_one_point() {
    let act = ActionSpec::odometer(2);
    let poly = build_polytope(&act, &Depth::Level(2)).unwrap();
    assert_eq!(poly.tag, Tag::Exact);
    for a in 0..4 {
        let mut e = vec![q(0); 4];
        e[a] = q(1);
        assert_eq!(poly.maximize(&e).unwrap().value, r(1, 4));
        assert_eq!(poly.minimize(&e).unwrap().value, r(1, 4));
    }
}

#[test]
fn full_shift_window_one_is_a_segment() {
    let act = ActionSpec::full_shift(2, 1);
    let poly = build_polytope(&act, &Depth::Window1 { lo: 0, len: 1 }).unwrap();
    let m = poly.mass(&c(&act, "[1]@0")).unwrap();
    assert_eq!(poly.maximize(&m).unwrap().value, q(1));
    assert_eq!(poly.minimize(&m).unwrap().value, q(0));
}

#[test]
fn finite_swap_is_balanced() {
    let act = ActionSpec::Finite(FiniteAction::cyclic(&[1, 0]));
    let poly = build_polytope(&act, &Depth::Points).unwrap();
    let s = poly.maximize(&poly.mass(&c(&act, "[0]")).unwrap()).unwrap();
    assert_eq!(s.value, r(1, 2));
    assert_eq!(s.vertex, [r(1, 2), r(1, 2)]);
}

#[test]
fn comparison_gaps() {
    let odo = ActionSpec::odometer(2);
    let g = comparison_gap(&odo, &c(&odo, "[00]"), &c(&odo, "[1]"), &Depth::Level(0)).unwrap();
    assert_eq!(g.value, r(-1, 4));
    assert!(gap_is_conclusive(&g) && g.verified);

    let fs = ActionSpec::full_shift(2, 1);
    let g = comparison_gap(
        &fs,
        &c(&fs, "[1]@0"),
        &c(&fs, "[0]@0"),
        &Depth::Window1 { lo: 0, len: 1 },
    )
    .unwrap();
    assert_eq!(g.value, q(1));
    let same = c(&fs, "[01]@0");
    assert_eq!(
        comparison_gap(&fs, &same, &same, &Depth::Window1 { lo: 0, len: 2 })
            .unwrap()
            .value,
        q(0)
    );
}

#[test]
fn amoo_polytopes_are_outer() {
    let act = ActionSpec::at_most_one_one();
    let poly = build_polytope(&act, &Depth::Window1 { lo: 0, len: 3 }).unwrap();
    assert_eq!(poly.tag, Tag::Outer);
    let g = gap_on(&poly, &c(&act, "[1]@0"), &c(&act, "[0]@0")).unwrap();
    assert!(!gap_is_conclusive(&g) || g.value < q(0));
}

#[test]
fn order_units() {
    let odo = ActionSpec::odometer(2);
    match order_unit_test(&odo, &c(&odo, "[1]"), &SearchBudget::with_word_len(1)).unwrap() {
        OrderUnitVerdict::Covering { words } => {
            let s = odo.schema();
            assert_eq!(
                words.iter().map(|w| s.format(w)).collect::<Vec<_>>(),
                ["id", "+1"]
            );
        }
        other => panic!("{other:?}"),
    }
    let fs = ActionSpec::full_shift(2, 1);
    match order_unit_test(&fs, &ClopenExpr::Full, &SearchBudget::with_word_len(0)).unwrap() {
        OrderUnitVerdict::Covering { words } => assert_eq!(words.len(), 1),
        other => panic!("{other:?}"),
    }
    let amoo = ActionSpec::at_most_one_one();
    match order_unit_test(&amoo, &c(&amoo, "[1]@0"), &SearchBudget::with_word_len(2)).unwrap() {
        OrderUnitVerdict::ZeroMeasure { state, orbit } => {
            assert_eq!(state.value, q(0));
            assert_eq!(orbit.as_deref(), Some("(0)^∞"));
        }
        other => panic!("{other:?}"),
    }
    // Full shift: the all-zero point gives [1]@0 mass zero on an exact polytope
    match order_unit_test(&fs, &c(&fs, "[1]@0"), &SearchBudget::with_word_len(2)).unwrap() {
        OrderUnitVerdict::ZeroMeasure { state, orbit } => {
            assert_eq!(state.tag, Tag::Exact);
            assert!(orbit.is_none());
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn ergodicity_gaps() {
    let odo = ActionSpec::odometer(2);
    let g = unique_ergodicity_gap(&odo, &c(&odo, "[1]"), 2).unwrap();
    assert_eq!((g.min.clone(), g.max.clone()), (r(1, 2), r(1, 2)));
    assert!(g.uniquely_ergodic_up_to_depth);
    let fs = ActionSpec::full_shift(2, 1);
    let g = unique_ergodicity_gap(&fs, &c(&fs, "[1]@0"), 1).unwrap();
    assert_eq!((g.min.clone(), g.max.clone()), (q(0), q(1)));
    assert!(!g.uniquely_ergodic_up_to_depth);
    let g = unique_ergodicity_gap(&fs, &ClopenExpr::Full, 0).unwrap();
    assert_eq!((g.min, g.max), (q(1), q(1)));
}

#[test]
fn no_paradoxes_for_amenable_examples() {
    let odo = ActionSpec::odometer(2);
    let budget = SearchBudget {
        word_len: 2,
        max_depth: 2,
        ..Default::default()
    };
    match paradox_search(&odo, &TypeExpr::single(ClopenExpr::Full), 2, &budget).unwrap() {
        ParadoxOutcome::NoneFound { normalized, .. } => assert!(normalized.unwrap().verified),
        other => panic!("{other:?}"),
    }
    let fin = ActionSpec::Finite(FiniteAction::cyclic(&[1, 0, 2]));
    match paradox_search(&fin, &TypeExpr::single(c(&fin, "[0]")), 2, &budget).unwrap() {
        ParadoxOutcome::NoneFound { normalized, .. } => {
            let s = normalized.unwrap();
            assert_eq!(s.vertex[0], r(1, 1));
            assert_eq!(s.tag, Tag::Exact);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn scaled_types_use_disjoint_copies() {
    let t = TypeExpr::parse(&ActionSpec::odometer(2), "[0] + [1]").unwrap();
    let s = scaled(&t, 3);
    let copies: Vec<usize> = s.summands.iter().map(|(c, _)| *c).collect();
    assert_eq!(copies, [0, 1, 2, 3, 4, 5]);
}

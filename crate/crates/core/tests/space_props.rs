use clopen_lab::partition_engine::{level_partition, word_permutation, DEFAULT_ATOM_CAP};
use clopen_lab::space_model::*;
use proptest::prelude::*;

fn shift_cyl() -> impl Strategy<Value = ClopenExpr> {
    (prop::collection::vec(0u32..2, 1..3), -3i64..4)
        .prop_map(|(s, p)| ClopenExpr::cyl(s, Anchor::Pos(p)))
}

fn odo_cyl() -> impl Strategy<Value = ClopenExpr> {
    (prop::collection::vec(0u32..2, 1..3), 1u32..3)
        .prop_map(|(s, k)| ClopenExpr::cyl(s, Anchor::Level(k)))
}

fn point_cyl(m: u32) -> impl Strategy<Value = ClopenExpr> {
    (0..m).prop_map(|p| ClopenExpr::cyl(vec![p], Anchor::Origin))
}

fn tree(leaf: BoxedStrategy<ClopenExpr>) -> impl Strategy<Value = ClopenExpr> {
    leaf.prop_recursive(3, 12, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(ClopenExpr::not),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a.or(b)),
            (inner.clone(), inner).prop_map(|(a, b)| a.and(b)),
        ]
    })
}

fn s3_on_three() -> ActionSpec {
    // S3 as permutations of {0,1,2}; element i is PERMS[i].
    const PERMS: [[usize; 3]; 6] = [
        [0, 1, 2],
        [1, 0, 2],
        [0, 2, 1],
        [2, 1, 0],
        [1, 2, 0],
        [2, 0, 1],
    ];
    let idx = |p: [usize; 3]| PERMS.iter().position(|q| *q == p).unwrap();
    let compose = |a: [usize; 3], b: [usize; 3]| [a[b[0]], a[b[1]], a[b[2]]];
    let group_table = (0..6)
        .map(|a| (0..6).map(|b| idx(compose(PERMS[a], PERMS[b]))).collect())
        .collect();
    let action_table = PERMS.iter().map(|p| p.to_vec()).collect();
    ActionSpec::Finite(FiniteAction {
        points: 3,
        group_table,
        action_table,
    })
}

proptest! {
    #[test]
    fn print_then_parse_is_identity(e in tree(shift_cyl().boxed())) {
        prop_assert_eq!(parse_clopen(&e.to_string()).unwrap(), e);
    }

    #[test]
    fn print_then_parse_odometer(e in tree(odo_cyl().boxed())) {
        prop_assert_eq!(parse_clopen(&e.to_string()).unwrap(), e);
    }

    #[test]
    fn shift_words_compose(e in tree(shift_cyl().boxed()), a in -3i64..4, b in -3i64..4) {
        let act = ActionSpec::full_shift(2, 1);
        let g = act.schema();
        let w = g.parse(&format!("{a}")).unwrap();
        let v = g.parse(&format!("{b}")).unwrap();
        let lhs = apply_word(&act, &g.compose(&w, &v), &e).unwrap();
        let rhs = apply_word(&act, &w, &apply_word(&act, &v, &e).unwrap()).unwrap();
        prop_assert!(same_set(&act, &lhs, &rhs).unwrap());
        prop_assert_eq!(is_empty_auto(&act, &e).unwrap(), is_empty_auto(&act, &lhs).unwrap());
    }

    #[test]
    fn odometer_words_compose(e in tree(odo_cyl().boxed()), a in -5i64..6, b in -5i64..6) {
        let act = ActionSpec::odometer(2);
        let g = act.schema();
        let w = g.parse(&format!("{a}")).unwrap();
        let v = g.parse(&format!("{b}")).unwrap();
        let lhs = apply_word(&act, &g.compose(&w, &v), &e).unwrap();
        let rhs = apply_word(&act, &w, &apply_word(&act, &v, &e).unwrap()).unwrap();
        prop_assert!(same_set(&act, &lhs, &rhs).unwrap());
        prop_assert_eq!(is_empty_auto(&act, &e).unwrap(), is_empty_auto(&act, &lhs).unwrap());
    }

    #[test]
    fn amoo_emptiness_preserved(e in tree(shift_cyl().boxed()), a in -3i64..4) {
        let act = ActionSpec::at_most_one_one();
        let w = act.schema().parse(&format!("{a}")).unwrap();
        let img = apply_word(&act, &w, &e).unwrap();
        prop_assert_eq!(is_empty_auto(&act, &e).unwrap(), is_empty_auto(&act, &img).unwrap());
    }

    #[test]
    fn finite_words_are_bijections(x in 0usize..6, y in 0usize..6, e in tree(point_cyl(3).boxed())) {
        let act = s3_on_three();
        let g = act.schema();
        let w = g.parse(&format!("g{x}*g{y}")).unwrap();
        let p = level_partition(&act, &Depth::Points, 8).unwrap();
        let mut perm = word_permutation(&p, &w).unwrap();
        perm.sort_unstable();
        prop_assert_eq!(perm, vec![0, 1, 2]);
        let v = g.parse(&format!("g{y}")).unwrap();
        let lhs = apply_word(&act, &w, &e).unwrap();
        let rhs = apply_word(&act, &g.parse(&format!("g{x}")).unwrap(), &apply_word(&act, &v, &e).unwrap()).unwrap();
        prop_assert!(same_set(&act, &lhs, &rhs).unwrap());
    }

    #[test]
    fn refinement_projects(e in tree(shift_cyl().boxed()), extra in 0usize..3) {
        let act = ActionSpec::full_shift(2, 1);
        let coarse_depth = support(&act, &[&e]).unwrap();
        let fine_depth = coarse_depth.hull(&Depth::Window1 { lo: -5, len: 5 + extra });
        let coarse = level_partition(&act, &coarse_depth, DEFAULT_ATOM_CAP).unwrap();
        let fine = level_partition(&act, &fine_depth, DEFAULT_ATOM_CAP).unwrap();
        let proj = fine.project_onto(&coarse).unwrap();
        let cs = eval(&coarse, &e).unwrap();
        let fs = eval(&fine, &e).unwrap();
        for (a, &c) in proj.iter().enumerate() {
            prop_assert_eq!(fs[a], cs[c]);
        }
    }

    #[test]
    fn canonical_form_is_stable(e in tree(shift_cyl().boxed())) {
        let act = ActionSpec::full_shift(2, 1);
        let c = canonicalize(&act, &e).unwrap();
        prop_assert!(same_set(&act, &c, &e).unwrap());
        prop_assert_eq!(canonicalize(&act, &c).unwrap(), c.clone());
        prop_assert_eq!(parse_clopen(&c.to_string()).unwrap(), c);
    }

    #[test]
    fn odometer_permutations_compose(a in -6i64..7, b in -6i64..7, n in 1u32..5) {
        let act = ActionSpec::odometer(2);
        let g = act.schema();
        let p = level_partition(&act, &Depth::Level(n), DEFAULT_ATOM_CAP).unwrap();
        let w = g.parse(&format!("{a}")).unwrap();
        let v = g.parse(&format!("{b}")).unwrap();
        let pw = word_permutation(&p, &w).unwrap();
        let pv = word_permutation(&p, &v).unwrap();
        let pwv = word_permutation(&p, &g.compose(&w, &v)).unwrap();
        for x in 0..p.len() {
            prop_assert_eq!(pwv[x], pw[pv[x]]);
        }
    }
}

#[test]
fn odometer_level_counts() {
    let base = OdometerBase {
        prefix: vec![3, 5],
        cycle: vec![2],
    };
    let act = ActionSpec::Odometer { base: base.clone() };
    for n in 0..6 {
        let p = level_partition(&act, &Depth::Level(n), DEFAULT_ATOM_CAP).unwrap();
        assert_eq!(p.len() as u64, base.modulus(n));
    }
}

use super::*;
use crate::space_model::{parse_clopen_for, FiniteAction};

fn c(action: &ActionSpec, s: &str) -> ClopenExpr {
    parse_clopen_for(action, s).unwrap()
}

fn w(action: &ActionSpec, s: &str) -> GroupWord {
    action.schema().parse(s).unwrap()
}

/// Level-`n` dyadic cylinders, least significant digit first, cycled by `+1`.
fn dyadic(n: usize) -> UnitSystem {
    let odo = ActionSpec::odometer(2);
    let cells: Vec<ClopenExpr> = (0..1u32 << n)
        .map(|k| {
            let digits: String = (0..n)
                .map(|i| if k >> i & 1 == 1 { '1' } else { '0' })
                .collect();
            c(&odo, &format!("[{digits}]"))
        })
        .collect();
    let perm: Vec<usize> = (0..cells.len()).map(|k| (k + 1) % cells.len()).collect();
    build_unit_system(&odo, cells, &[perm], Some(&[w(&odo, "+1")])).unwrap()
}

fn oracle(action: &ActionSpec, len: usize) -> CompatibilityOracle {
    CompatibilityOracle::new(action, &SearchBudget::with_word_len(len)).unwrap()
}

#[test]
fn level_one_swap() {
    let s = dyadic(1);
    assert_eq!(s.order(), BigUint::from(2u32));
    let g = s.realize(&[1, 0]).unwrap();
    assert!(g
        .verify(&s.action, &ClopenExpr::Full, &ClopenExpr::Full)
        .unwrap());
}

#[test]
fn four_cycle_closes_to_sym4() {
    let s = dyadic(2);
    assert_eq!(s.orbits, vec![vec![0, 1, 2, 3]]);
    assert_eq!(s.order(), BigUint::from(24u32));
    assert!(s.contains(&[1, 0, 2, 3]));
    let t = s.realize(&[1, 0, 2, 3]).unwrap();
    assert!(t
        .verify(&s.action, &ClopenExpr::Full, &ClopenExpr::Full)
        .unwrap());
    assert!(same_set(
        &s.action,
        &t.apply(&s.action, &s.atoms[0]).unwrap(),
        &s.atoms[1]
    )
    .unwrap());
}

#[test]
fn identity_only() {
    let odo = ActionSpec::odometer(2);
    let s = build_unit_system(&odo, vec![c(&odo, "[0]"), c(&odo, "[1]")], &[], Some(&[])).unwrap();
    assert_eq!(s.order(), BigUint::from(1u32));
    assert!(!s.contains(&[1, 0]));
}

#[test]
fn axioms_name_the_overlap() {
    let odo = ActionSpec::odometer(2);
    let err = build_unit_system(&odo, vec![c(&odo, "[0]"), c(&odo, "[00] | [1]")], &[], None)
        .unwrap_err();
    assert!(err.to_string().contains("atoms 0 and 1 overlap"), "{err}");
    let err = build_unit_system(
        &odo,
        vec![c(&odo, "[0]"), c(&odo, "[1]")],
        &[vec![1, 0]],
        Some(&[w(&odo, "+2")]),
    )
    .unwrap_err();
    assert!(err.is_internal());
}

#[test]
fn piecewise_maps_compose_and_invert() {
    let odo = ActionSpec::odometer(2);
    let m = PiecewiseMap {
        pieces: vec![
            (c(&odo, "[0]"), w(&odo, "+1")),
            (c(&odo, "[1]"), w(&odo, "-1")),
        ],
    };
    assert!(m
        .verify(&odo, &ClopenExpr::Full, &ClopenExpr::Full)
        .unwrap());
    let back = m.inverse(&odo).unwrap();
    let id = m.then(&odo, &back).unwrap();
    for p in ["[00]", "[01]", "[11]"] {
        assert!(same_set(&odo, &id.apply(&odo, &c(&odo, p)).unwrap(), &c(&odo, p)).unwrap());
    }
}

#[test]
fn oracle_maps_verify() {
    let odo = ActionSpec::odometer(2);
    let o = oracle(&odo, 3);
    let m = o.find(&c(&odo, "[00]"), &c(&odo, "[11]")).unwrap().unwrap();
    assert!(m.verify(&odo, &c(&odo, "[00]"), &c(&odo, "[11]")).unwrap());
    assert!(o.find(&c(&odo, "[0]"), &c(&odo, "[11]")).unwrap().is_none());
    let g = o
        .find_global(&c(&odo, "[0]"), &c(&odo, "[1]"))
        .unwrap()
        .unwrap();
    assert!(g
        .verify(&odo, &ClopenExpr::Full, &ClopenExpr::Full)
        .unwrap());
}

#[test]
fn ladder_from_trivial_gives_the_swap() {
    let odo = ActionSpec::odometer(2);
    let base = UnitSystem::trivial(&odo);
    let eq = Equality {
        u: c(&odo, "[0]"),
        v: c(&odo, "[1]"),
        map: PiecewiseMap::single(&c(&odo, "[0]"), w(&odo, "+1")),
    };
    let step = ample_ladder_step(&base, &[eq]).unwrap();
    assert_eq!(step.system.len(), 2);
    assert_eq!(step.system.orbits, vec![vec![0, 1]]);
    let (perm, real) = step
        .mapping_element(&c(&odo, "[0]"), &c(&odo, "[1]"))
        .unwrap();
    assert_eq!(perm, [1, 0]);
    assert!(real
        .verify(&odo, &ClopenExpr::Full, &ClopenExpr::Full)
        .unwrap());
    let words: Vec<String> = real
        .pieces
        .iter()
        .map(|(_, g)| odo.schema().format(g))
        .collect();
    assert!(words.iter().all(|s| s == "+1" || s == "-1"), "{words:?}");
}

#[test]
fn ladder_without_equalities_is_unchanged() {
    let s = dyadic(2);
    let step = ample_ladder_step(&s, &[]).unwrap();
    assert_eq!(step.system.len(), 4);
    assert_eq!(step.system.orbits, s.orbits);
    assert_eq!(step.extend(&s, &[1, 2, 3, 0]).unwrap(), [1, 2, 3, 0]);
}

#[test]
fn ladder_on_a_finite_swap() {
    let act = ActionSpec::Finite(FiniteAction::cyclic(&[1, 0]));
    let base = UnitSystem::trivial(&act);
    let g = act.schema().generators()[0].clone();
    let eq = Equality {
        u: c(&act, "[0]"),
        v: c(&act, "[1]"),
        map: PiecewiseMap::single(&c(&act, "[0]"), g),
    };
    let step = ample_ladder_step(&base, &[eq]).unwrap();
    assert_eq!(step.system.order(), BigUint::from(2u32));
}

#[test]
fn ladder_steps_extend_old_permutations() {
    let odo = ActionSpec::odometer(2);
    let mut sys = dyadic(1);
    let mut perm = vec![1, 0];
    for k in 2..=4 {
        let u = c(&odo, &format!("[{}]", "0".repeat(k)));
        let v = c(&odo, &format!("[1{}]", "0".repeat(k - 1)));
        let eq = Equality {
            u: u.clone(),
            v,
            map: PiecewiseMap::single(&u, w(&odo, "+1")),
        };
        let step = ample_ladder_step(&sys, &[eq]).unwrap();
        perm = step.extend(&sys, &perm).unwrap();
        assert!(step.system.contains(&perm));
        // Only the orbit meeting u is split.
        assert_eq!(step.system.len(), 2 * k);
        sys = step.system;
    }
}

#[test]
fn krieger_identity_step() {
    let s = dyadic(1);
    let o = oracle(&s.action, 2);
    let step = krieger_extend(&s, &s, &[0, 1], &s, &o).unwrap();
    for (x, y) in step.c_prime.atoms.iter().zip(&s.atoms) {
        assert!(same_set(&s.action, x, y).unwrap());
    }
}

#[test]
fn krieger_dyadic_ladder() {
    let s1 = dyadic(1);
    let report = conjugate_construct(&oracle(&s1.action, 2), &[s1.clone(), dyadic(2)]);
    assert!(report.failure.is_none(), "{:?}", report.failure);
    assert!(report.steps.iter().all(|s| s.max_word_len <= 3));

    // Linking [000] with [001] needs +4.
    let short = conjugate_construct(&oracle(&s1.action, 2), &[s1.clone(), dyadic(2), dyadic(3)]);
    assert_eq!(short.steps.len(), 2);
    assert!(short.failure.unwrap().contains("step 3"));
    let full = conjugate_construct(&oracle(&s1.action, 4), &[s1, dyadic(2), dyadic(3)]);
    assert!(full.failure.is_none(), "{:?}", full.failure);
    assert_eq!(full.system().unwrap().len(), 8);
}

#[test]
fn krieger_twisted_by_the_swap() {
    let (s1, s2) = (dyadic(1), dyadic(2));
    let o = oracle(&s1.action, 2);
    let step = krieger_extend(&s1, &s1, &[1, 0], &s2, &o).unwrap();
    verify_krieger(&s1, &s1, &[1, 0], &s2, &step).unwrap();
    assert!(is_subset_of(&step.c_prime.atoms[0], &s1.atoms[1]));
}

fn is_subset_of(a: &ClopenExpr, b: &ClopenExpr) -> bool {
    crate::space_model::is_subset(&ActionSpec::odometer(2), a, b).unwrap()
}

#[test]
fn krieger_reports_unlinked_atoms() {
    let act = ActionSpec::Finite(FiniteAction::trivial(2));
    let swap = build_unit_system(
        &act,
        vec![c(&act, "[0]"), c(&act, "[1]")],
        &[vec![1, 0]],
        None,
    )
    .unwrap();
    let report = conjugate_construct(&oracle(&act, 2), &[swap]);
    let msg = report.failure.unwrap();
    assert!(msg.contains("atoms 0 and 1"), "{msg}");
    assert!(report.steps.is_empty());
}

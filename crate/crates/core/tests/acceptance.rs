//! Acceptance gate. Each test prints one `PASS`/`FAIL` line; the last one only reports.

use std::time::Instant;

use clopen_lab::equidecomp::*;
use clopen_lab::monoid_lab::*;
use clopen_lab::partition_engine::{invariant_partition, DEFAULT_ATOM_CAP};
use clopen_lab::space_model::*;
use clopen_lab::states_lp::*;
use clopen_lab::unit_systems::*;
use num::{BigInt, BigRational, Zero};
use proptest::prelude::*;
use proptest::strategy::ValueTree;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};

fn c(action: &ActionSpec, s: &str) -> ClopenExpr {
    parse_clopen_for(action, s).unwrap()
}

fn report(name: &str, ok: bool, detail: &str) {
    println!("{} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
}

/// Union of the level-`n` dyadic cells whose index bit is set in `mask`.
fn dyadic_set(action: &ActionSpec, n: usize, mask: u32) -> ClopenExpr {
    if mask == 0 {
        return ClopenExpr::Empty;
    }
    let cells: Vec<String> = (0..1u32 << n)
        .filter(|k| mask >> k & 1 == 1)
        .map(|k| {
            format!(
                "[{}]",
                (0..n)
                    .map(|i| if k >> i & 1 == 1 { '1' } else { '0' })
                    .collect::<String>()
            )
        })
        .collect();
    c(action, &cells.join(" | "))
}

#[test]
fn odometer_comparison_is_complete_at_level_three() {
    let start = Instant::now();
    let odo = ActionSpec::odometer(2);
    let poly = build_polytope(&odo, &Depth::Level(3)).unwrap();
    let sets: Vec<ClopenExpr> = (0..256u32).map(|m| dyadic_set(&odo, 3, m)).collect();
    let budget = SearchBudget {
        word_len: 8,
        max_depth: 6,
        ..Default::default()
    };

    let threads = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
        .min(8);
    let chunks: Vec<Vec<u32>> = (0..threads as u32)
        .map(|t| (t..256).step_by(threads).collect())
        .collect();
    let (mut gap_errors, mut strict, mut found) = (0usize, 0usize, 0usize);
    let mut failures = Vec::new();
    std::thread::scope(|s| {
        let handles: Vec<_> = chunks
            .iter()
            .map(|rows| {
                let (odo, poly, sets, budget) = (&odo, &poly, &sets, &budget);
                s.spawn(move || {
                    let search = Equidecomposer::new(odo, budget).unwrap();
                    let (mut gap_errors, mut strict, mut found, mut failures) =
                        (0, 0, 0, Vec::new());
                    for &a in rows {
                        for b in 0..256u32 {
                            let gap = gap_on(poly, &sets[a as usize], &sets[b as usize]).unwrap();
                            // The unique invariant measure gives each level-3 cell mass 1/8.
                            let expected = BigRational::new(
                                BigInt::from(a.count_ones() as i64 - b.count_ones() as i64),
                                BigInt::from(8),
                            );
                            if gap.value != expected {
                                gap_errors += 1;
                            }
                            if gap.value >= BigRational::zero() {
                                continue;
                            }
                            strict += 1;
                            let (ea, eb) = (&sets[a as usize], &sets[b as usize]);
                            let out = search.clopen(ea, eb, Mode::Sub).unwrap();
                            let ok = out.witness().is_some_and(|w| {
                                verify_witness(
                                    odo,
                                    &TypeExpr::single(ea.clone()),
                                    &TypeExpr::single(eb.clone()),
                                    w,
                                )
                                .unwrap()
                                .is_ok()
                            });
                            if ok {
                                found += 1;
                            } else {
                                failures.push((a, b));
                            }
                        }
                    }
                    (gap_errors, strict, found, failures)
                })
            })
            .collect();
        for h in handles {
            let (g, st, f, fl) = h.join().unwrap();
            gap_errors += g;
            strict += st;
            found += f;
            failures.extend(fl);
        }
    });
    let secs = start.elapsed().as_secs_f64();
    let ok = gap_errors == 0 && found == strict && secs <= 60.0;
    report(
        "odometer-comparison",
        ok,
        &format!(
            "65536 pairs, {gap_errors} gap mismatches, {found}/{strict} strict pairs with verified witnesses, {secs:.1}s"
        ),
    );
    assert!(
        failures.is_empty(),
        "no witness for {:?}",
        &failures[..failures.len().min(5)]
    );
    assert_eq!(gap_errors, 0);
    assert!(secs <= 60.0, "took {secs:.1}s");
}

/// Union of the length-2 windows at 0 picked by the low four bits of `mask`.
fn window_set(action: &ActionSpec, mask: u32) -> ClopenExpr {
    let mask = (mask & 15).max(1);
    let cells: Vec<&str> = ["[00]", "[10]", "[01]", "[11]"]
        .into_iter()
        .enumerate()
        .filter(|(i, _)| mask >> i & 1 == 1)
        .map(|(_, w)| w)
        .collect();
    c(action, &cells.join(" | "))
}

#[test]
fn paradoxes_never_meet_exact_normalizing_states() {
    let odo = ActionSpec::odometer(2);
    let shift = ActionSpec::full_shift(2, 1);
    let swap = ActionSpec::Finite(FiniteAction::cyclic(&[1, 0]));
    let amoo = ActionSpec::at_most_one_one();
    let fixed = ActionSpec::Finite(FiniteAction::trivial(3));
    let mut corpus: Vec<(ActionSpec, TypeExpr)> = Vec::new();
    for m in 1..16u32 {
        corpus.push((odo.clone(), TypeExpr::single(dyadic_set(&odo, 2, m))));
    }
    for s in ["[0]", "[1]", "[01]", "[00] | [11]", "[010]@-1", "full"] {
        corpus.push((shift.clone(), TypeExpr::single(c(&shift, s))));
    }
    for s in ["[0]", "[0] | [1]"] {
        corpus.push((swap.clone(), TypeExpr::single(c(&swap, s))));
    }
    for s in ["[1]@0", "[0]@0", "full"] {
        corpus.push((amoo.clone(), TypeExpr::single(c(&amoo, s))));
    }
    for s in ["[0]", "[1] | [2]"] {
        corpus.push((fixed.clone(), TypeExpr::single(c(&fixed, s))));
    }
    corpus.push((odo.clone(), TypeExpr::parse(&odo, "2*[00] + [1]").unwrap()));
    // Random sums of level-3 odometer sets and window-2 shift sets.
    let mut runner = TestRunner::new_with_rng(
        Config::default(),
        TestRng::deterministic_rng(RngAlgorithm::ChaCha),
    );
    let strategy = (any::<bool>(), prop::collection::vec(1u32..256, 1..3));
    for _ in 0..24 {
        let (on_shift, masks) = strategy.new_tree(&mut runner).unwrap().current();
        let action = if on_shift { &shift } else { &odo };
        let sets = masks.iter().map(|&m| {
            if on_shift {
                window_set(action, m)
            } else {
                dyadic_set(action, 3, m)
            }
        });
        corpus.push((action.clone(), TypeExpr::sum(sets)));
    }

    let budget = SearchBudget {
        word_len: 3,
        max_depth: 4,
        max_nodes: 20_000,
        time_cap_secs: 5.0,
    };
    let (mut conflicts, mut witnesses, mut exact) = (Vec::new(), 0, 0);
    for (action, b) in &corpus {
        let depth = Depth::uniform(action, 2);
        let state = normalized_state(action, b, &depth).unwrap();
        let is_exact = state
            .as_ref()
            .is_some_and(|s| s.tag == Tag::Exact && s.verified);
        exact += is_exact as usize;
        match paradox_search(action, b, 2, &budget) {
            Ok(ParadoxOutcome::Witness { n, witness }) => {
                witnesses += 1;
                let (big, small) = (scaled(b, n + 1), scaled(b, n));
                assert!(verify_witness(action, &big, &small, &witness)
                    .unwrap()
                    .is_ok());
                if is_exact {
                    conflicts.push(format!("{b:?}"));
                }
            }
            Ok(ParadoxOutcome::NoneFound { .. }) => {}
            Err(e) => conflicts.push(format!("{b:?}: {e}")),
        }
    }
    let ok = conflicts.is_empty();
    report(
        "tarski-consistency",
        ok,
        &format!("{} types, {witnesses} paradox witnesses, {exact} exact normalizing states, {} conflicts", corpus.len(), conflicts.len()),
    );
    assert!(ok, "{conflicts:?}");
}

#[test]
fn weiss_densities_and_hall_obstructions() {
    let start = Instant::now();
    let mut ok = true;
    for m in 0..=8u32 {
        let (lo, hi) = density_bounds(&ZSubsetSpec::WeissSet { terms: Some(m) }, 4096).unwrap();
        let expected =
            num::rational::Ratio::new(1i64, 2) - num::rational::Ratio::new(1i64, 2i64 << m);
        ok &= lo == expected && hi == expected;
    }
    let weiss = ZSubsetSpec::weiss();
    let mut violations = 0;
    for l in 1..=3i64 {
        let shifts: Vec<i64> = (-l..=l).collect();
        if let ZOutcome::HallViolation(h) =
            zsubset_equidecompose(&weiss, &weiss.clone().complement(), &shifts, 4096).unwrap()
        {
            violations += h.recheck(&weiss, &weiss.clone().complement()) as usize;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ok &= violations == 3 && secs <= 30.0;
    report(
        "weiss-subsets",
        ok,
        &format!("densities exact for m ≤ 8, {violations}/3 rechecked Hall violations, {secs:.1}s"),
    );
    assert!(ok);
}

fn point_set(action: &ActionSpec, points: usize, mask: u32) -> ClopenExpr {
    if mask == 0 {
        return ClopenExpr::Empty;
    }
    let cells: Vec<String> = (0..points)
        .filter(|p| mask >> p & 1 == 1)
        .map(|p| format!("[{p}]"))
        .collect();
    c(action, &cells.join(" | "))
}

#[test]
fn finite_actions_agree_with_closed_form() {
    let start = Instant::now();
    let actions = small_finite_actions(6, 5);
    let (mut pairs, mut mismatches, mut property_failures) = (0usize, Vec::new(), Vec::new());
    for (name, fa) in &actions {
        let action = ActionSpec::Finite(fa.clone());
        let search = Equidecomposer::new(&action, &SearchBudget::with_word_len(6)).unwrap();
        let n = fa.points;
        for a in 0..1u32 << n {
            for b in 0..1u32 << n {
                let sa: Vec<bool> = (0..n).map(|p| a >> p & 1 == 1).collect();
                let sb: Vec<bool> = (0..n).map(|p| b >> p & 1 == 1).collect();
                let (ea, eb) = (point_set(&action, n, a), point_set(&action, n, b));
                let found = search.clopen(&ea, &eb, Mode::Sub).unwrap().is_found();
                let closed = closed_form_leq(fa, &sa, &sb);
                let brute = brute_force_leq(fa, &sa, &sb);
                pairs += 1;
                if found != closed || closed != brute {
                    mismatches.push(format!("{name}: {a:b} vs {b:b}"));
                }
            }
        }
        let (p, _) = finite_action_presentation(fa).unwrap().simplify().unwrap();
        for prop in [Property::Unperforated, Property::Cancellative] {
            let v = check_property(&p, prop, None, 4).unwrap();
            if v.verdict == Verdict::Fails {
                property_failures.push(format!("{name}: {}", prop.name()));
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let ok = mismatches.is_empty() && property_failures.is_empty();
    report(
        "finite-actions",
        ok,
        &format!(
            "{} actions, {pairs} pairs, {} mismatches, {} property failures, {secs:.1}s",
            actions.len(),
            mismatches.len(),
            property_failures.len()
        ),
    );
    assert!(
        mismatches.is_empty(),
        "{:?}",
        &mismatches[..mismatches.len().min(5)]
    );
    assert!(property_failures.is_empty(), "{property_failures:?}");
}

#[test]
fn coinvariants_and_grothendieck_groups() {
    let odo = ActionSpec::odometer(2);
    let mut ok = true;
    for n in 0..=6u32 {
        let g = coinvariants(&odo, &Depth::Level(n)).unwrap();
        ok &= g.rank == 1 && g.torsion.is_empty();
    }
    let two = MonoidPresentation::from_parts(2, &["2 0 = 0 2"]).unwrap();
    let g = grothendieck(&two, 4).unwrap();
    ok &= g.rank == 1 && g.torsion == vec![2];

    let corpus = [
        (2, vec!["2 0 = 0 2"]),
        (2, vec!["1 1 = 0 1"]),
        (2, vec!["1 0 = 0 1"]),
        (1, vec!["2 = 3"]),
        (3, vec!["1 1 0 = 0 0 1"]),
        (2, vec![]),
        (3, vec!["1 0 0 = 0 1 1", "0 1 0 = 0 0 1"]),
    ];
    let mut inconsistent = 0;
    for (g, rels) in &corpus {
        let p = MonoidPresentation::from_parts(*g, rels).unwrap();
        inconsistent += !pi_criterion(&p, 4).unwrap().consistent as usize;
    }
    ok &= inconsistent == 0;
    report(
        "coinvariants",
        ok,
        &format!("odometer levels 0..6 give Z, <2a=2b> gives Z + Z/2, {inconsistent} inconsistent presentations"),
    );
    assert!(ok);
}

#[test]
fn monoid_counterexamples_and_free_monoids() {
    let mut lines = Vec::new();
    let stuck = MonoidPresentation::from_parts(2, &["1 1 = 0 1"]).unwrap();
    let v = check_property(&stuck, Property::StablyFinite, None, 4).unwrap();
    let mut ok = v.verdict == Verdict::Fails && recheck(&stuck, v.certificate.as_ref().unwrap());
    let two = MonoidPresentation::from_parts(2, &["2 0 = 0 2"]).unwrap();
    let v = check_property(&two, Property::Unperforated, None, 4).unwrap();
    ok &= v.verdict == Verdict::Fails && recheck(&two, v.certificate.as_ref().unwrap());
    lines.push(format!(
        "counterexamples {}",
        if ok { "found" } else { "missing" }
    ));

    for g in 1..=3usize {
        let free = MonoidPresentation::free(g);
        let unit = vec![1u32; g];
        for prop in Property::ALL {
            let v = check_property(&free, prop, Some(&unit), 4).unwrap();
            if v.verdict != Verdict::HoldsWithinBound {
                ok = false;
                lines.push(format!("N^{g} {}: {:?}", prop.name(), v.verdict));
            }
        }
    }
    report("monoid-properties", ok, &lines.join("; "));
    assert!(ok, "{lines:?}");
}

fn invariant_ladder(action: &ActionSpec, n: usize) -> Vec<UnitSystem> {
    let gens = action.schema().generators();
    (1..=n)
        .map(|k| {
            let inv =
                invariant_partition(action, &gens, &Depth::uniform(action, k), DEFAULT_ATOM_CAP)
                    .unwrap()
                    .unwrap();
            let atoms = (0..inv.partition.len())
                .map(|i| inv.partition.atom_expr(i))
                .collect();
            build_unit_system(action, atoms, &inv.permutations, Some(&gens)).unwrap()
        })
        .collect()
}

#[test]
fn krieger_steps_and_ample_ladder() {
    let start = Instant::now();
    let odo = ActionSpec::odometer(2);
    let oracle = CompatibilityOracle::new(&odo, &SearchBudget::with_word_len(4)).unwrap();
    let ladder = invariant_ladder(&odo, 3);
    let (mut a, mut cur) = (UnitSystem::trivial(&odo), UnitSystem::trivial(&odo));
    let mut phi = vec![0];
    let mut steps = 0;
    for next in &ladder {
        let step = krieger_extend(&a, &cur, &phi, next, &oracle).unwrap();
        verify_krieger(&a, &cur, &phi, next, &step).unwrap();
        phi = step.psi.clone();
        cur = step.c_prime;
        a = next.clone();
        steps += 1;
    }
    let mut ok = steps == 3 && cur.len() == 8;

    let base = UnitSystem::trivial(&odo);
    let eq = Equality {
        u: c(&odo, "[0]"),
        v: c(&odo, "[1]"),
        map: PiecewiseMap::single(&c(&odo, "[0]"), odo.schema().parse("+1").unwrap()),
    };
    let ladder_step = ample_ladder_step(&base, &[eq]).unwrap();
    let (perm, realization) = ladder_step
        .mapping_element(&c(&odo, "[0]"), &c(&odo, "[1]"))
        .unwrap();
    ok &= perm == [1, 0]
        && realization
            .verify(&odo, &ClopenExpr::Full, &ClopenExpr::Full)
            .unwrap();
    let secs = start.elapsed().as_secs_f64();
    ok &= secs <= 10.0;
    report(
        "krieger-ladder",
        ok,
        &format!(
            "{steps} verified steps up to {} atoms, swap realized as {perm:?}, {secs:.1}s",
            cur.len()
        ),
    );
    assert!(ok);
}

#[test]
fn translation_column_report() {
    // Y = Z ∪ {∞} as configurations with at most one 1; the cell "1 at 0" is {0} × 2^ω.
    let x = ActionSpec::Product(vec![ActionSpec::at_most_one_one(), ActionSpec::odometer(2)]);
    let a = c(&x, "~[1]@0#0");
    for word_len in [2, 4] {
        let budget = SearchBudget {
            word_len,
            max_depth: 4,
            max_nodes: 50_000,
            time_cap_secs: 20.0,
        };
        let start = Instant::now();
        let out = type_leq(
            &x,
            &TypeExpr::single(ClopenExpr::Full),
            &TypeExpr::single(a.clone()),
            &budget,
        );
        let secs = start.elapsed().as_secs_f64();
        let line = match out {
            Ok(SearchOutcome::Found(w)) => {
                let v = verify_witness(
                    &x,
                    &TypeExpr::single(ClopenExpr::Full),
                    &TypeExpr::single(a.clone()),
                    &w,
                );
                format!(
                    "found {} pieces, verification {:?}",
                    w.pieces.len(),
                    v.map(|r| r.is_ok())
                )
            }
            Ok(SearchOutcome::Exhausted(r)) => {
                format!("exhausted after {} nodes ({})", r.nodes, r.reason)
            }
            Err(e) => format!("error: {e}"),
        };
        println!("REPORT translation-column: word_len {word_len}, max_depth 4, 50000 nodes: {line}, {secs:.1}s");
    }
}

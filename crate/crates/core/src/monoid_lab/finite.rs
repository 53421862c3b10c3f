//! Type semigroups at finite resolution: finite actions, invariant partitions,
//! coinvariants, and the catalog of small finite actions.

use std::collections::BTreeSet;

use serde::Serialize;

use super::snf::{smith, Matrix};
use super::{MonoidPresentation, Vector};
use crate::equidecomp::{Equidecomposer, Mode, SearchBudget};
use crate::error::{Error, Result};
use crate::partition_engine::{invariant_partition, level_partition, DEFAULT_ATOM_CAP};
use crate::space_model::{ActionSpec, Depth, FiniteAction};

/// Multiplication tables of every group of order at most six, with the identity at index 0.
pub fn small_groups() -> Vec<(String, Vec<Vec<usize>>)> {
    let mut out: Vec<(String, Vec<Vec<usize>>)> = (1..=6)
        .map(|n| {
            (
                format!("Z{n}"),
                (0..n)
                    .map(|a| (0..n).map(|b| (a + b) % n).collect())
                    .collect(),
            )
        })
        .collect();
    out.push((
        "Z2xZ2".into(),
        (0..4).map(|a| (0..4).map(|b| a ^ b).collect()).collect(),
    ));
    let perms: Vec<[usize; 3]> = vec![
        [0, 1, 2],
        [1, 0, 2],
        [2, 1, 0],
        [0, 2, 1],
        [1, 2, 0],
        [2, 0, 1],
    ];
    let idx = |p: [usize; 3]| perms.iter().position(|&q| q == p).unwrap();
    let s3 = (0..6)
        .map(|a| {
            (0..6)
                .map(|b| {
                    idx([
                        perms[a][perms[b][0]],
                        perms[a][perms[b][1]],
                        perms[a][perms[b][2]],
                    ])
                })
                .collect()
        })
        .collect();
    out.push(("S3".into(), s3));
    out.sort_by_key(|(name, t)| (t.len(), name.clone()));
    out
}

fn subgroups(table: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let n = table.len();
    let mut out = Vec::new();
    for mask in 1u32..(1 << n) {
        if mask & 1 == 0 {
            continue;
        }
        let set: Vec<usize> = (0..n).filter(|&i| mask >> i & 1 == 1).collect();
        if set
            .iter()
            .all(|&a| set.iter().all(|&b| mask >> table[a][b] & 1 == 1))
        {
            out.push(set);
        }
    }
    out
}

fn inverse(table: &[Vec<usize>], a: usize) -> usize {
    (0..table.len())
        .find(|&b| table[a][b] == 0)
        .expect("group element without inverse")
}

/// Subgroups up to conjugacy, each as its least conjugate.
fn subgroup_classes(table: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let mut reps = BTreeSet::new();
    for h in subgroups(table) {
        let rep = (0..table.len())
            .map(|g| {
                let gi = inverse(table, g);
                let mut c: Vec<usize> = h.iter().map(|&x| table[table[g][x]][gi]).collect();
                c.sort_unstable();
                c
            })
            .min()
            .unwrap();
        reps.insert(rep);
    }
    reps.into_iter().collect()
}

/// Action table of `G` on the left cosets of `h`.
fn coset_action(table: &[Vec<usize>], h: &[usize]) -> Vec<Vec<usize>> {
    let n = table.len();
    let coset = |g: usize| -> Vec<usize> {
        let mut c: Vec<usize> = h.iter().map(|&x| table[g][x]).collect();
        c.sort_unstable();
        c
    };
    let mut cosets: Vec<Vec<usize>> = (0..n).map(coset).collect();
    cosets.sort();
    cosets.dedup();
    (0..n)
        .map(|g| {
            cosets
                .iter()
                .map(|c| {
                    let img = coset(table[g][c[0]]);
                    cosets.iter().position(|d| *d == img).unwrap()
                })
                .collect()
        })
        .collect()
}

/// Every action of a group of order ≤ `max_order` on at most `max_points` points, up to
/// isomorphism, as disjoint unions of coset actions.
pub fn small_finite_actions(max_order: usize, max_points: usize) -> Vec<(String, FiniteAction)> {
    let mut out = Vec::new();
    for (name, table) in small_groups() {
        if table.len() > max_order {
            continue;
        }
        let orbits: Vec<(Vec<usize>, Vec<Vec<usize>>)> = subgroup_classes(&table)
            .into_iter()
            .map(|h| (h.clone(), coset_action(&table, &h)))
            .collect();
        let mut stack: Vec<(Vec<usize>, usize)> = vec![(Vec::new(), 0)];
        while let Some((chosen, size)) = stack.pop() {
            if size > 0 {
                let mut action_table = vec![Vec::new(); table.len()];
                for &k in &chosen {
                    let off = action_table[0].len();
                    for (g, row) in orbits[k].1.iter().enumerate() {
                        action_table[g].extend(row.iter().map(|&p| p + off));
                    }
                }
                let label = chosen
                    .iter()
                    .map(|&k| format!("{name}/{:?}", orbits[k].0))
                    .collect::<Vec<_>>()
                    .join(" + ");
                out.push((
                    label,
                    FiniteAction {
                        points: size,
                        group_table: table.clone(),
                        action_table,
                    },
                ));
            }
            let start = chosen.last().copied().unwrap_or(0);
            for k in start..orbits.len() {
                let s = size + orbits[k].1[0].len();
                if s <= max_points {
                    let mut c = chosen.clone();
                    c.push(k);
                    stack.push((c, s));
                }
            }
        }
    }
    out.sort_by(|a, b| {
        (a.1.group_table.len(), a.1.points, &a.0).cmp(&(b.1.group_table.len(), b.1.points, &b.0))
    });
    out
}

fn orbit_counts(fa: &FiniteAction, set: &[bool]) -> Vec<usize> {
    fa.orbits()
        .iter()
        .map(|o| o.iter().filter(|&&p| set[p]).count())
        .collect()
}

/// `[A] ≤ [B]` iff every orbit meets `A` at most as often as `B`.
pub fn closed_form_leq(fa: &FiniteAction, a: &[bool], b: &[bool]) -> bool {
    orbit_counts(fa, a)
        .iter()
        .zip(orbit_counts(fa, b))
        .all(|(x, y)| *x <= y)
}

/// Enumerates group-element assignments to the points of `A` with distinct images in `B`.
/// Singleton pieces lose nothing: any witness refines to one.
pub fn brute_force_leq(fa: &FiniteAction, a: &[bool], b: &[bool]) -> bool {
    let pts: Vec<usize> = (0..fa.points).filter(|&p| a[p]).collect();
    let mut used = vec![false; fa.points];
    fn go(fa: &FiniteAction, pts: &[usize], b: &[bool], used: &mut [bool]) -> bool {
        let Some((&p, rest)) = pts.split_first() else {
            return true;
        };
        for row in &fa.action_table {
            let q = row[p];
            if b[q] && !used[q] {
                used[q] = true;
                if go(fa, rest, b, used) {
                    return true;
                }
                used[q] = false;
            }
        }
        false
    }
    go(fa, &pts, b, &mut used)
}

/// Generators are points; `e_p = e_{g·p}` for every group element.
pub fn finite_action_presentation(fa: &FiniteAction) -> Result<MonoidPresentation> {
    let n = fa.points;
    let rels = fa
        .action_table
        .iter()
        .flat_map(|row| {
            row.iter()
                .enumerate()
                .filter(|(p, q)| p != *q)
                .map(|(p, &q)| (super::unit(n, p), super::unit(n, q)))
        })
        .collect::<Vec<_>>();
    MonoidPresentation::new(n, rels)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Backend {
    /// Per-orbit counts, checked against brute-force enumeration.
    ClosedForm { checked_pairs: usize },
    /// Atom permutations of an invariant partition.
    Exact,
    /// Single-atom equivalences found by the equidecomposition search.
    Oracle {
        budget: SearchBudget,
        transitivity_gaps: Vec<(usize, usize, usize)>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TypeMonoidSnapshot {
    pub action: serde_json::Value,
    pub depth: String,
    pub word_len: usize,
    pub atoms: Vec<String>,
    pub presentation: MonoidPresentation,
    /// Atom-count vector of the whole space.
    pub unit: Vector,
    pub backend: Backend,
    /// Atom orbits, when known exactly.
    pub orbits: Option<Vec<Vec<usize>>>,
}

impl TypeMonoidSnapshot {
    /// The atom-count vector of a set of atoms.
    pub fn element(&self, set: &[bool]) -> Vector {
        set.iter().map(|&b| b as u32).collect()
    }

    /// Per-orbit counts; equal keys mean equal types.
    pub fn orbit_key(&self, v: &[u32]) -> Option<Vec<u32>> {
        self.orbits
            .as_ref()
            .map(|os| os.iter().map(|o| o.iter().map(|&p| v[p]).sum()).collect())
    }
}

fn subsets(n: usize) -> impl Iterator<Item = Vec<bool>> {
    (0u32..1 << n).map(move |m| (0..n).map(|i| m >> i & 1 == 1).collect())
}

pub fn finite_action_type_semigroup(fa: &FiniteAction) -> Result<TypeMonoidSnapshot> {
    let action = ActionSpec::Finite(fa.clone());
    action.validate()?;
    let sets: Vec<Vec<bool>> = if fa.points <= 6 {
        subsets(fa.points).collect()
    } else {
        subsets(fa.points)
            .filter(|s| s.iter().filter(|&&b| b).count() <= 2)
            .collect()
    };
    let mut checked = 0;
    for a in &sets {
        for b in &sets {
            if closed_form_leq(fa, a, b) != brute_force_leq(fa, a, b) {
                return Err(Error::Invariant(format!(
                    "orbit-count criterion disagrees with enumeration on {a:?} ≤ {b:?}"
                )));
            }
            checked += 1;
        }
    }
    Ok(TypeMonoidSnapshot {
        action: action.to_json(),
        depth: Depth::Points.describe(),
        word_len: 1,
        atoms: (0..fa.points).map(|p| p.to_string()).collect(),
        presentation: finite_action_presentation(fa)?,
        unit: vec![1; fa.points],
        backend: Backend::ClosedForm {
            checked_pairs: checked,
        },
        orbits: Some(fa.orbits()),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub enum ResolutionMode {
    Exact,
    /// Accepts shift-type actions, testing atom equivalence through the search.
    Oracle(SearchBudget),
}

fn atom_orbits(n: usize, perms: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for s in 0..n {
        if seen[s] {
            continue;
        }
        let mut orb = vec![s];
        seen[s] = true;
        let mut i = 0;
        while i < orb.len() {
            for p in perms {
                let t = p[orb[i]];
                if !seen[t] {
                    seen[t] = true;
                    orb.push(t);
                }
            }
            i += 1;
        }
        orb.sort_unstable();
        out.push(orb);
    }
    out
}

pub fn resolution_type_monoid(
    action: &ActionSpec,
    depth: &Depth,
    word_len: usize,
    mode: &ResolutionMode,
) -> Result<TypeMonoidSnapshot> {
    let words = action.schema().ball(word_len);
    match (
        invariant_partition(action, &words, depth, DEFAULT_ATOM_CAP)?,
        mode,
    ) {
        (Ok(inv), _) => {
            let n = inv.partition.len();
            let rels = inv
                .permutations
                .iter()
                .flat_map(|perm| {
                    (0..n)
                        .filter(|&a| perm[a] != a)
                        .map(|a| (super::unit(n, a), super::unit(n, perm[a])))
                })
                .collect::<Vec<_>>();
            Ok(TypeMonoidSnapshot {
                action: action.to_json(),
                depth: inv.partition.depth.describe(),
                word_len,
                atoms: (0..n).map(|a| inv.partition.atom_label(a)).collect(),
                presentation: MonoidPresentation::new(n, rels)?,
                unit: vec![1; n],
                backend: Backend::Exact,
                orbits: Some(atom_orbits(n, &inv.permutations)),
            })
        }
        (Err(refusal), ResolutionMode::Exact) => Err(Error::Refusal(format!(
            "{}; {}",
            refusal.reason, refusal.suggestion
        ))),
        (Err(_), ResolutionMode::Oracle(budget)) => {
            let p = level_partition(action, depth, DEFAULT_ATOM_CAP)?;
            let n = p.len();
            let search = Equidecomposer::new(
                action,
                &SearchBudget {
                    word_len,
                    ..budget.clone()
                },
            )?;
            let mut eq = vec![vec![false; n]; n];
            for a in 0..n {
                eq[a][a] = true;
                for b in a + 1..n {
                    let found = search
                        .clopen(&p.atom_expr(a), &p.atom_expr(b), Mode::Equi)?
                        .is_found();
                    eq[a][b] = found;
                    eq[b][a] = found;
                }
            }
            let mut gaps = Vec::new();
            for a in 0..n {
                for b in 0..n {
                    for c in 0..n {
                        if eq[a][b] && eq[b][c] && !eq[a][c] {
                            gaps.push((a, b, c));
                        }
                    }
                }
            }
            let rels = (0..n)
                .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
                .filter(|&(a, b)| eq[a][b])
                .map(|(a, b)| (super::unit(n, a), super::unit(n, b)))
                .collect::<Vec<_>>();
            Ok(TypeMonoidSnapshot {
                action: action.to_json(),
                depth: depth.describe(),
                word_len,
                atoms: (0..n).map(|a| p.atom_label(a)).collect(),
                presentation: MonoidPresentation::new(n, rels)?,
                unit: vec![1; n],
                backend: Backend::Oracle {
                    budget: budget.clone(),
                    transitivity_gaps: gaps,
                },
                orbits: None,
            })
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CoinvariantsGroup {
    pub rank: usize,
    pub torsion: Vec<i128>,
    pub boundary: Matrix,
    pub atoms: usize,
}

/// `ℤ^atoms / ⟨e_a − e_{γa}⟩` over the generators, at an invariant partition.
pub fn coinvariants(action: &ActionSpec, depth: &Depth) -> Result<CoinvariantsGroup> {
    let schema = action.schema();
    let gens = schema.generators();
    if gens.is_empty() {
        let n = level_partition(action, depth, DEFAULT_ATOM_CAP)?.len();
        return Ok(CoinvariantsGroup {
            rank: n,
            torsion: Vec::new(),
            boundary: Vec::new(),
            atoms: n,
        });
    }
    let inv = match invariant_partition(action, &gens, depth, DEFAULT_ATOM_CAP)? {
        Ok(inv) => inv,
        Err(r) => return Err(Error::Refusal(format!("{}; {}", r.reason, r.suggestion))),
    };
    let n = inv.partition.len();
    let boundary: Matrix = inv
        .permutations
        .iter()
        .flat_map(|perm| {
            (0..n).filter(|&a| perm[a] != a).map(move |a| {
                let mut row = vec![0i128; n];
                row[a] += 1;
                row[perm[a]] -= 1;
                row
            })
        })
        .collect();
    let s = smith(&boundary, n)?;
    Ok(CoinvariantsGroup {
        rank: s.free_rank(),
        torsion: s.torsion(),
        boundary,
        atoms: n,
    })
}

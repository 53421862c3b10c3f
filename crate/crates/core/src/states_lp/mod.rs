//! Invariant-measure marginal polytopes over exact rationals: comparison gaps,
//! order-unit tests, paradox searches and unique-ergodicity intervals.

mod simplex;

use serde_json::{json, Value};

use crate::equidecomp::{type_leq, EquidecompositionWitness, SearchBudget, SearchOutcome};
use crate::error::{Error, Result};
use crate::partition_engine::{level_partition, FinitePartition, DEFAULT_ATOM_CAP};
use crate::space_model::{
    apply_word, eval, is_empty_auto, support, ActionSpec, ClopenExpr, Depth, GroupWord, NormalForm,
    ShiftRule, TypeExpr,
};

pub use simplex::{q, FeasibleBasis, LinearProgram, LpOutcome, Optimum, Q};

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Tag {
    /// Projections are exactly the invariant-measure marginals.
    Exact,
    /// A superset of them.
    Outer,
}

#[derive(Clone, Debug)]
pub struct MeasurePolytope {
    pub partition: FinitePartition,
    pub lp: LinearProgram,
    pub tag: Tag,
    basis: FeasibleBasis,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateReport {
    pub value: Q,
    pub vertex: Vec<Q>,
    pub dual: Vec<Q>,
    pub depth: Depth,
    pub tag: Tag,
    pub verified: bool,
}

pub fn qstr(v: &Q) -> String {
    if v.denom() == &num::BigInt::from(1) {
        format!("{}/1", v.numer())
    } else {
        format!("{}/{}", v.numer(), v.denom())
    }
}

impl StateReport {
    pub fn to_json(&self, p: Option<&FinitePartition>) -> Value {
        let mut v = json!({
            "value": qstr(&self.value),
            "depth": self.depth.describe(),
            "tag": self.tag,
            "verified": self.verified,
        });
        if let Some(p) = p {
            let vertex: serde_json::Map<String, Value> = self
                .vertex
                .iter()
                .enumerate()
                .filter(|(_, x)| !num::Zero::is_zero(*x))
                .map(|(a, x)| (p.atom_label(a), Value::String(qstr(x))))
                .collect();
            v["vertex"] = Value::Object(vertex);
        }
        v
    }
}

/// Largest forbidden-pattern width of a one-dimensional subshift.
fn rule_width(rule: &ShiftRule) -> Option<usize> {
    match rule {
        ShiftRule::Forbidden(ps) => Some(ps.iter().map(|p| p[0].len()).max().unwrap_or(0)),
        ShiftRule::AtMostOneOne => None,
    }
}

/// EXACT for permutation-type actions, one-dimensional full shifts, and one-dimensional
/// subshifts of finite type once the window is as wide as every forbidden pattern.
pub fn polytope_tag(action: &ActionSpec, depth: &Depth) -> Tag {
    if action.is_permutation_type() {
        return Tag::Exact;
    }
    match (action, depth) {
        (ActionSpec::FullShift { dimension: 1, .. }, _) => Tag::Exact,
        (
            ActionSpec::Subshift {
                dimension: 1, rule, ..
            },
            Depth::Window1 { len, .. },
        ) => match rule_width(rule) {
            Some(w) if *len >= w => Tag::Exact,
            _ => Tag::Outer,
        },
        _ => Tag::Outer,
    }
}

/// Depth on which `E` and `γE` are both visible for every atom `E` of the result.
fn trimmed(d: &Depth, nf: &NormalForm) -> Depth {
    let shift = |i: usize| match nf {
        NormalForm::Abelian(v) => v.get(i).map_or(0, |x| x.unsigned_abs() as usize),
        NormalForm::Finite(_) => 0,
    };
    match d {
        Depth::Window1 { lo, len } => Depth::Window1 {
            lo: *lo,
            len: len.saturating_sub(shift(0)),
        },
        Depth::Window2 { x0, y0, w, h } => {
            let (w2, h2) = (w.saturating_sub(shift(0)), h.saturating_sub(shift(1)));
            if w2 == 0 || h2 == 0 {
                Depth::Window2 {
                    x0: 0,
                    y0: 0,
                    w: 0,
                    h: 0,
                }
            } else {
                Depth::Window2 {
                    x0: *x0,
                    y0: *y0,
                    w: w2,
                    h: h2,
                }
            }
        }
        Depth::Product(ds) => Depth::Product(ds.iter().map(|x| trimmed(x, nf)).collect()),
        other => other.clone(),
    }
}

fn indicator(set: &[bool]) -> Vec<Q> {
    set.iter().map(|&b| q(b as i64)).collect()
}

/// Invariance rows `μ(E) − μ(γE) = 0` for every generator γ and every atom `E` of the
/// trimmed partition.
fn invariance_rows(action: &ActionSpec, p: &FinitePartition, lp: &mut LinearProgram) -> Result<()> {
    let schema = action.schema();
    for g in schema.generators() {
        let nf = schema.normal_form(&g);
        let small = level_partition(action, &trimmed(&p.depth, &nf), DEFAULT_ATOM_CAP)?;
        for e in 0..small.len() {
            let ex = small.atom_expr(e);
            let lhs = eval(p, &ex)?;
            let rhs = eval(p, &apply_word(action, &g, &ex)?)?;
            if lhs == rhs {
                continue;
            }
            let row = lhs
                .iter()
                .zip(&rhs)
                .map(|(&a, &b)| q(a as i64 - b as i64))
                .collect();
            lp.add_row(row, q(0));
        }
    }
    Ok(())
}

pub fn build_polytope(action: &ActionSpec, depth: &Depth) -> Result<MeasurePolytope> {
    action.validate()?;
    let partition = level_partition(action, depth, DEFAULT_ATOM_CAP)?;
    if partition.is_empty() {
        return Err(Error::Input("the space has no points at this depth".into()));
    }
    let mut lp = LinearProgram::new(partition.len());
    invariance_rows(action, &partition, &mut lp)?;
    lp.add_row(vec![q(1); partition.len()], q(1));
    let basis = match lp.phase1() {
        Ok(b) => b,
        Err(farkas) => {
            let checked = lp.verify_farkas(&farkas);
            return Err(Error::Invariant(format!(
                "measure polytope at {} is empty (Farkas certificate verified: {checked})",
                depth.describe()
            )));
        }
    };
    let tag = polytope_tag(action, depth);
    Ok(MeasurePolytope {
        partition,
        lp,
        tag,
        basis,
    })
}

impl MeasurePolytope {
    pub fn depth(&self) -> &Depth {
        &self.partition.depth
    }

    /// Coefficient vector of `μ(e)`.
    pub fn mass(&self, e: &ClopenExpr) -> Result<Vec<Q>> {
        Ok(indicator(&eval(&self.partition, e)?))
    }

    pub fn maximize(&self, c: &[Q]) -> Result<StateReport> {
        match self.basis.maximize(c) {
            LpOutcome::Optimal(o) => {
                let verified = self.lp.verify_optimum(c, &o);
                if !verified {
                    return Err(Error::Invariant("LP optimum failed re-verification".into()));
                }
                Ok(StateReport {
                    value: o.value,
                    vertex: o.x,
                    dual: o.y,
                    depth: self.depth().clone(),
                    tag: self.tag,
                    verified,
                })
            }
            LpOutcome::Unbounded { .. } => Err(Error::Invariant(
                "bounded polytope reported unbounded".into(),
            )),
            LpOutcome::Infeasible { .. } => {
                Err(Error::Invariant("feasible basis became infeasible".into()))
            }
        }
    }

    pub fn minimize(&self, c: &[Q]) -> Result<StateReport> {
        let neg: Vec<Q> = c.iter().map(|x| -x).collect();
        let mut r = self.maximize(&neg)?;
        r.value = -r.value;
        r.dual = r.dual.iter().map(|x| -x).collect();
        Ok(r)
    }
}

/// `max μ(A) − μ(B)` over the polytope at `depth` (hulled with the supports).
pub fn comparison_gap(
    action: &ActionSpec,
    a: &ClopenExpr,
    b: &ClopenExpr,
    depth: &Depth,
) -> Result<StateReport> {
    let d = support(action, &[a, b])?.hull(depth);
    let poly = build_polytope(action, &d)?;
    gap_on(&poly, a, b)
}

pub fn gap_on(poly: &MeasurePolytope, a: &ClopenExpr, b: &ClopenExpr) -> Result<StateReport> {
    let c: Vec<Q> = poly
        .mass(a)?
        .into_iter()
        .zip(poly.mass(b)?)
        .map(|(x, y)| x - y)
        .collect();
    poly.maximize(&c)
}

/// Negative gaps certify `μ(A) < μ(B)` for every invariant measure on either tag;
/// nonnegative gaps are only conclusive on EXACT polytopes.
pub fn gap_is_conclusive(r: &StateReport) -> bool {
    r.tag == Tag::Exact || r.value < q(0)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ErgodicityGap {
    pub min: Q,
    pub max: Q,
    /// `(depth, min, max, tag)` per tried depth.
    pub profile: Vec<(Depth, Q, Q, Tag)>,
    pub uniquely_ergodic_up_to_depth: bool,
}

/// `[min μ(A), max μ(A)]` at the support of `A` grown by `0..=extra`.
pub fn unique_ergodicity_gap(
    action: &ActionSpec,
    a: &ClopenExpr,
    extra: usize,
) -> Result<ErgodicityGap> {
    let base = support(action, &[a])?;
    let mut profile: Vec<(Depth, Q, Q, Tag)> = Vec::new();
    for n in 0..=extra {
        let d = base.hull(&Depth::uniform(action, n));
        if profile.iter().any(|(x, ..)| *x == d) {
            continue;
        }
        let poly = build_polytope(action, &d)?;
        let c = poly.mass(a)?;
        let lo = poly.minimize(&c)?.value;
        let hi = poly.maximize(&c)?.value;
        profile.push((d, lo, hi, poly.tag));
    }
    let (_, min, max, _) = profile.last().cloned().expect("at least one depth");
    let ue = profile
        .iter()
        .all(|(_, lo, hi, t)| lo == hi && *t == Tag::Exact);
    Ok(ErgodicityGap {
        min,
        max,
        profile,
        uniquely_ergodic_up_to_depth: ue,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub enum OrderUnitVerdict {
    /// `⋃ wᵢB = X`, so `[X] ≤ k[B]`.
    Covering { words: Vec<GroupWord> },
    /// An invariant state with `μ(B) = 0`. `orbit` names a periodic configuration
    /// whose orbit measure certifies the state when the polytope is OUTER.
    ZeroMeasure {
        state: StateReport,
        orbit: Option<String>,
    },
    Exhausted {
        reason: String,
        budget: SearchBudget,
    },
}

pub fn order_unit_test(
    action: &ActionSpec,
    b: &ClopenExpr,
    budget: &SearchBudget,
) -> Result<OrderUnitVerdict> {
    if is_empty_auto(action, b)? {
        return Err(Error::Input("order_unit_test needs a nonempty set".into()));
    }
    let schema = action.schema();
    let mut uncovered = ClopenExpr::Full;
    let mut words = Vec::new();
    for w in schema.ball(budget.word_len) {
        let img = apply_word(action, &w, b)?;
        if is_empty_auto(action, &uncovered.clone().and(img.clone()))? {
            continue;
        }
        uncovered = crate::space_model::canonicalize(action, &uncovered.minus(img))?;
        words.push(w);
        if is_empty_auto(action, &uncovered)? {
            return Ok(OrderUnitVerdict::Covering { words });
        }
    }
    let base = support(action, &[b])?;
    let mut positive = None;
    for n in 0..=budget.max_depth {
        let d = base.hull(&Depth::uniform(action, n));
        let poly = build_polytope(action, &d)?;
        let state = poly.minimize(&poly.mass(b)?)?;
        if state.value > q(0) {
            positive = Some(state);
            break;
        }
        if poly.tag == Tag::Exact {
            return Ok(OrderUnitVerdict::ZeroMeasure { state, orbit: None });
        }
        if let Some(orbit) = periodic_orbit_avoiding(action, b, budget.max_depth.max(1))? {
            return Ok(OrderUnitVerdict::ZeroMeasure {
                state,
                orbit: Some(orbit),
            });
        }
    }
    let reason = match positive {
        Some(s) => format!(
            "every state gives B mass at least {} at {}, but no covering uses words of length ≤ {}",
            qstr(&s.value),
            s.depth.describe(),
            budget.word_len
        ),
        None => {
            "zero-mass states found only on an outer polytope and no periodic orbit confirms one"
                .into()
        }
    };
    Ok(OrderUnitVerdict::Exhausted {
        reason,
        budget: budget.clone(),
    })
}

/// A periodic point `u^∞` (period at most `max_period`) of a one-dimensional shift
/// whose whole orbit avoids `B`.
fn periodic_orbit_avoiding(
    action: &ActionSpec,
    b: &ClopenExpr,
    max_period: usize,
) -> Result<Option<String>> {
    let (alphabet, width) = match action {
        ActionSpec::FullShift {
            alphabet,
            dimension: 1,
        } => (*alphabet, 1),
        ActionSpec::Subshift {
            alphabet,
            dimension: 1,
            rule,
        } => (*alphabet, rule_width(rule).unwrap_or(2)),
        _ => return Ok(None),
    };
    let supp = support(action, &[b])?;
    let (lo, len) = match supp {
        Depth::Window1 { lo, len } => (lo, len),
        _ => return Ok(None),
    };
    let pb = level_partition(action, &supp, DEFAULT_ATOM_CAP)?;
    let inside = eval(&pb, b)?;
    for p in 1..=max_period {
        let total = (alphabet as usize)
            .checked_pow(p as u32)
            .unwrap_or(usize::MAX);
        if total > DEFAULT_ATOM_CAP {
            break;
        }
        let check_len = 2 * p + width;
        let pc = level_partition(
            action,
            &Depth::Window1 {
                lo: 0,
                len: check_len,
            },
            DEFAULT_ATOM_CAP,
        )?;
        for code in 0..total {
            let mut u = Vec::with_capacity(p);
            let mut c = code;
            for _ in 0..p {
                u.push((c % alphabet as usize) as u32);
                c /= alphabet as usize;
            }
            u.reverse();
            let at = |i: i64| u[i.rem_euclid(p as i64) as usize];
            if pc
                .find(&(0..check_len as i64).map(at).collect::<Vec<_>>())
                .is_none()
            {
                continue;
            }
            let avoids = (0..p as i64).all(|s| {
                let cells: Vec<u32> = (0..len as i64).map(|i| at(lo + i + s)).collect();
                pb.find(&cells).is_some_and(|a| !inside[a])
            });
            if avoids {
                return Ok(Some(format!(
                    "({})^∞",
                    u.iter()
                        .map(|&s| crate::space_model::symbol_char(s))
                        .collect::<String>()
                )));
            }
        }
    }
    Ok(None)
}

/// `k·t`: the summands of `t` repeated on `k` disjoint blocks of copies.
pub fn scaled(t: &TypeExpr, k: usize) -> TypeExpr {
    let width = t.summands.iter().map(|(c, _)| c + 1).max().unwrap_or(0);
    TypeExpr {
        summands: (0..k)
            .flat_map(|i| {
                t.summands
                    .iter()
                    .map(move |(c, e)| (i * width + c, e.clone()))
            })
            .collect(),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ParadoxOutcome {
    /// `(n+1)b ≤ nb`: no state normalizes `b`.
    Witness {
        n: usize,
        witness: EquidecompositionWitness,
    },
    /// No witness up to `n_max`; `normalized` is a state with `μ(b) = 1` when one exists.
    NoneFound {
        n_max: usize,
        budget: SearchBudget,
        normalized: Option<StateReport>,
    },
}

/// A state with `μ(b) = 1` (total mass unconstrained) at `depth`, if the LP is feasible.
pub fn normalized_state(
    action: &ActionSpec,
    b: &TypeExpr,
    depth: &Depth,
) -> Result<Option<StateReport>> {
    let exprs: Vec<&ClopenExpr> = b.summands.iter().map(|(_, e)| e).collect();
    let d = support(action, &exprs)?.hull(depth);
    let p = level_partition(action, &d, DEFAULT_ATOM_CAP)?;
    let mut lp = LinearProgram::new(p.len());
    invariance_rows(action, &p, &mut lp)?;
    let mut row = vec![q(0); p.len()];
    for e in exprs {
        for (r, inside) in row.iter_mut().zip(eval(&p, e)?) {
            if inside {
                *r += q(1);
            }
        }
    }
    lp.add_row(row, q(1));
    let zero = vec![q(0); p.len()];
    Ok(match lp.maximize(&zero) {
        LpOutcome::Optimal(o) => Some(StateReport {
            value: q(1),
            verified: lp.verify_optimum(&zero, &o),
            vertex: o.x,
            dual: o.y,
            depth: d.clone(),
            tag: polytope_tag(action, &d),
        }),
        LpOutcome::Infeasible { farkas } => {
            if !lp.verify_farkas(&farkas) {
                return Err(Error::Invariant(
                    "Farkas certificate failed re-verification".into(),
                ));
            }
            None
        }
        LpOutcome::Unbounded { .. } => {
            return Err(Error::Invariant("zero objective reported unbounded".into()))
        }
    })
}

pub fn paradox_search(
    action: &ActionSpec,
    b: &TypeExpr,
    n_max: usize,
    budget: &SearchBudget,
) -> Result<ParadoxOutcome> {
    if b.is_zero() {
        return Err(Error::Input("paradox_search needs a nonzero type".into()));
    }
    let normalized = normalized_state(action, b, &Depth::uniform(action, 0))?;
    for n in 1..=n_max {
        if let SearchOutcome::Found(witness) =
            type_leq(action, &scaled(b, n + 1), &scaled(b, n), budget)?
        {
            if normalized.as_ref().is_some_and(|s| s.tag == Tag::Exact) {
                return Err(Error::Invariant(
                    "paradox witness found although an exact state normalizes b".into(),
                ));
            }
            return Ok(ParadoxOutcome::Witness { n, witness });
        }
    }
    Ok(ParadoxOutcome::NoneFound {
        n_max,
        budget: budget.clone(),
        normalized,
    })
}

#[cfg(test)]
mod tests;

use serde::Serialize;

use super::closure::{verify_chain, Closure, Tri};
use super::{
    add, degree, grothendieck, scale, unit, vectors_up_to, GrothendieckGroup, MonoidPresentation,
    Vector,
};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Property {
    AlmostUnperforated,
    Cancellative,
    Conical,
    DirectlyFinite,
    OrderUnit,
    Refinement,
    Simple,
    StablyFinite,
    Unperforated,
    WeakComparability,
}

impl Property {
    pub const ALL: [Property; 10] = [
        Property::AlmostUnperforated,
        Property::Cancellative,
        Property::Conical,
        Property::DirectlyFinite,
        Property::OrderUnit,
        Property::Refinement,
        Property::Simple,
        Property::StablyFinite,
        Property::Unperforated,
        Property::WeakComparability,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Property::AlmostUnperforated => "almost-unperforated",
            Property::Cancellative => "cancellative",
            Property::Conical => "conical",
            Property::DirectlyFinite => "directly-finite",
            Property::OrderUnit => "order-unit",
            Property::Refinement => "refinement",
            Property::Simple => "simple",
            Property::StablyFinite => "stably-finite",
            Property::Unperforated => "unperforated",
            Property::WeakComparability => "weak-comparability",
        }
    }

    pub fn parse(s: &str) -> Result<Property> {
        Property::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::Input(format!("unknown property `{s}`")))
    }

    /// Properties that take a designated element.
    pub fn needs_unit(self) -> bool {
        matches!(
            self,
            Property::DirectlyFinite
                | Property::OrderUnit
                | Property::Simple
                | Property::WeakComparability
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    HoldsWithinBound,
    Fails,
    Unknown,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Fact {
    Equal {
        left: Vector,
        right: Vector,
        chain: Vec<Vector>,
    },
    /// `big ~ small + rest`, with rewrites from `big`.
    Below {
        small: Vector,
        big: Vector,
        rest: Vector,
        chain: Vec<Vector>,
    },
    NotEqual {
        left: Vector,
        right: Vector,
    },
    NotBelow {
        small: Vector,
        big: Vector,
    },
    /// Rewriting preserves support inside `generators`; `inside` lives there and `outside` does not.
    Face {
        generators: Vec<usize>,
        inside: Vector,
        outside: Vector,
    },
    NoRefinement {
        left: Vec<Vector>,
        right: Vec<Vector>,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Certificate {
    pub witness: Vec<(String, Vector)>,
    pub n: Option<u32>,
    pub facts: Vec<Fact>,
    /// Degree limit of the closure that established the negative facts.
    pub cap: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PropertyVerdict {
    pub property: Property,
    pub verdict: Verdict,
    pub certificate: Option<Certificate>,
    pub bound: u32,
    pub searched: String,
    /// Instances the bounded closure could not settle.
    pub undecided: usize,
}

enum Step {
    Ok,
    Undecided,
    Violated,
}

fn implication(premise: Tri, conclusion: Tri) -> Step {
    match (premise, conclusion) {
        (Tri::No, _) | (_, Tri::Yes) => Step::Ok,
        (Tri::Yes, Tri::No) => Step::Violated,
        _ => Step::Undecided,
    }
}

struct Checker<'a> {
    p: &'a MonoidPresentation,
    cl: Closure<'a>,
    cap: u32,
    bound: u32,
    undecided: usize,
}

impl<'a> Checker<'a> {
    fn equal(&self, u: &[u32], v: &[u32]) -> Result<Fact> {
        let chain = self
            .cl
            .chain(u, v)
            .ok_or_else(|| Error::Invariant("equal classes without a chain".into()))?;
        Ok(Fact::Equal {
            left: u.to_vec(),
            right: v.to_vec(),
            chain,
        })
    }

    fn below(&mut self, a: &[u32], b: &[u32]) -> Result<Fact> {
        let (_, rest) = self.cl.leq_rest(a, b);
        let rest = rest.ok_or_else(|| Error::Invariant("missing remainder".into()))?;
        let chain = self
            .cl
            .chain(b, &add(a, &rest))
            .ok_or_else(|| Error::Invariant("dominating member without a chain".into()))?;
        Ok(Fact::Below {
            small: a.to_vec(),
            big: b.to_vec(),
            rest,
            chain,
        })
    }

    fn finish(self, property: Property, searched: String) -> PropertyVerdict {
        let verdict = if self.undecided > 0 {
            Verdict::Unknown
        } else {
            Verdict::HoldsWithinBound
        };
        PropertyVerdict {
            property,
            verdict,
            certificate: None,
            bound: self.bound,
            searched,
            undecided: self.undecided,
        }
    }

    fn fail(
        &self,
        property: Property,
        witness: Vec<(&str, Vector)>,
        n: Option<u32>,
        facts: Vec<Fact>,
    ) -> PropertyVerdict {
        PropertyVerdict {
            property,
            verdict: Verdict::Fails,
            certificate: Some(Certificate {
                witness: witness
                    .into_iter()
                    .map(|(k, v)| (k.to_string(), v))
                    .collect(),
                n,
                facts,
                cap: self.cap,
            }),
            bound: self.bound,
            searched: String::new(),
            undecided: self.undecided,
        }
    }
}

/// Smallest generator set containing `supp(x)` whose support class is closed under rewriting.
fn face(p: &MonoidPresentation, x: &[u32]) -> Vec<bool> {
    let mut f: Vec<bool> = x.iter().map(|&c| c > 0).collect();
    let inside = |f: &[bool], v: &[u32]| v.iter().zip(f).all(|(&c, &i)| c == 0 || i);
    loop {
        let mut grew = false;
        for (l, r) in &p.relations {
            for (a, b) in [(l, r), (r, l)] {
                if inside(&f, a) && !inside(&f, b) {
                    for (i, &c) in b.iter().enumerate() {
                        if c > 0 && !f[i] {
                            f[i] = true;
                            grew = true;
                        }
                    }
                }
            }
        }
        if !grew {
            return f;
        }
    }
}

fn face_is_closed(p: &MonoidPresentation, gens: &[usize]) -> bool {
    let inside = |v: &[u32]| {
        v.iter()
            .enumerate()
            .all(|(i, &c)| c == 0 || gens.contains(&i))
    };
    p.relations.iter().all(|(l, r)| inside(l) == inside(r))
}

pub fn check_property(
    p: &MonoidPresentation,
    property: Property,
    unit_elem: Option<&[u32]>,
    bound: u32,
) -> Result<PropertyVerdict> {
    if bound == 0 {
        return Err(Error::Input("bound must be positive".into()));
    }
    let x0 = match (property.needs_unit(), unit_elem) {
        (true, None) => {
            return Err(Error::Input(format!(
                "{} needs a designated element",
                property.name()
            )))
        }
        (_, Some(u)) if u.len() != p.gens => {
            return Err(Error::Input(format!(
                "designated element needs {} coordinates",
                p.gens
            )))
        }
        (_, u) => u.map(|u| u.to_vec()),
    };
    let cap = bound * (bound + 1);
    let mut ck = Checker {
        p,
        cl: Closure::new(p, cap),
        cap,
        bound,
        undecided: 0,
    };
    let elems = vectors_up_to(p.gens, bound);
    let zero = p.zero();
    let nonzero: Vec<&Vector> = elems.iter().filter(|v| degree(v) > 0).collect();
    let all = format!("all elements of degree ≤ {bound}");
    use Property::*;
    match property {
        AlmostUnperforated | Unperforated => {
            let ns: Vec<u32> = if property == Unperforated {
                (2..=bound).collect()
            } else {
                (1..=bound).collect()
            };
            for x in &nonzero {
                for y in &elems {
                    let concl = ck.cl.leq(x, y);
                    if concl == Tri::Yes {
                        continue;
                    }
                    for &n in &ns {
                        let (lhs, rhs) = if property == Unperforated {
                            (scale(x, n), scale(y, n))
                        } else {
                            (scale(x, n + 1), scale(y, n))
                        };
                        match implication(ck.cl.leq(&lhs, &rhs), concl) {
                            Step::Ok => {}
                            Step::Undecided => ck.undecided += 1,
                            Step::Violated => {
                                let facts = vec![
                                    ck.below(&lhs, &rhs)?,
                                    Fact::NotBelow {
                                        small: x.to_vec(),
                                        big: y.to_vec(),
                                    },
                                ];
                                return Ok(ck.fail(
                                    property,
                                    vec![("x", x.to_vec()), ("y", y.clone())],
                                    Some(n),
                                    facts,
                                ));
                            }
                        }
                    }
                }
            }
            let n_lo = if property == Unperforated { 2 } else { 1 };
            Ok(ck.finish(property, format!("{all}, n in {n_lo}..={bound}")))
        }
        Cancellative => {
            for x in &nonzero {
                for (i, y) in elems.iter().enumerate() {
                    for z in &elems[i + 1..] {
                        let (xy, xz) = (add(x, y), add(x, z));
                        match implication(ck.cl.eq(&xy, &xz), ck.cl.eq(y, z)) {
                            Step::Ok => {}
                            Step::Undecided => ck.undecided += 1,
                            Step::Violated => {
                                let facts = vec![
                                    ck.equal(&xy, &xz)?,
                                    Fact::NotEqual {
                                        left: y.clone(),
                                        right: z.clone(),
                                    },
                                ];
                                let w = vec![("x", x.to_vec()), ("y", y.clone()), ("z", z.clone())];
                                return Ok(ck.fail(property, w, None, facts));
                            }
                        }
                    }
                }
            }
            Ok(ck.finish(property, format!("x, y, z over {all}")))
        }
        Conical => {
            for (i, u) in elems.iter().enumerate() {
                for v in &elems[i..] {
                    let s = add(u, v);
                    if degree(&s) == 0 {
                        continue;
                    }
                    let concl = ck.cl.eq(u, &zero).and(ck.cl.eq(v, &zero));
                    match implication(ck.cl.eq(&s, &zero), concl) {
                        Step::Ok => {}
                        Step::Undecided => ck.undecided += 1,
                        Step::Violated => {
                            let bad = if ck.cl.eq(u, &zero) == Tri::No { u } else { v };
                            let facts = vec![
                                ck.equal(&s, &zero)?,
                                Fact::NotEqual {
                                    left: bad.clone(),
                                    right: zero.clone(),
                                },
                            ];
                            return Ok(ck.fail(
                                property,
                                vec![("u", u.clone()), ("v", v.clone())],
                                None,
                                facts,
                            ));
                        }
                    }
                }
            }
            Ok(ck.finish(property, format!("u, v over {all}")))
        }
        DirectlyFinite | StablyFinite => {
            let xs: Vec<Vector> = match &x0 {
                Some(x) if property == DirectlyFinite => vec![x.clone()],
                _ => elems.clone(),
            };
            for x in &xs {
                for y in &nonzero {
                    let yx = add(y, x);
                    match implication(ck.cl.eq(&yx, x), ck.cl.eq(y, &zero)) {
                        Step::Ok => {}
                        Step::Undecided => ck.undecided += 1,
                        Step::Violated => {
                            let facts = vec![
                                ck.equal(&yx, x)?,
                                Fact::NotEqual {
                                    left: y.to_vec(),
                                    right: zero.clone(),
                                },
                            ];
                            return Ok(ck.fail(
                                property,
                                vec![("y", y.to_vec()), ("x", x.clone())],
                                None,
                                facts,
                            ));
                        }
                    }
                }
            }
            let scope = if property == DirectlyFinite {
                "x fixed"
            } else {
                "x"
            };
            Ok(ck.finish(property, format!("{scope}, y over {all}")))
        }
        OrderUnit => {
            let x = x0.expect("checked above");
            if let Some(v) = order_unit_step(&mut ck, &x, &x)? {
                return Ok(v);
            }
            Ok(ck.finish(
                property,
                format!("e_i ≤ n·x for every generator, n ≤ {bound}"),
            ))
        }
        Simple => {
            let u = x0.expect("checked above");
            if let Some(mut v) = order_unit_step(&mut ck, &u, &u)? {
                v.property = Simple;
                return Ok(v);
            }
            for x in &nonzero {
                if ck.cl.eq(x, &zero) == Tri::Yes {
                    continue;
                }
                if let Some(mut v) = order_unit_step(&mut ck, x, &u)? {
                    v.property = Simple;
                    return Ok(v);
                }
            }
            Ok(ck.finish(
                property,
                format!("unit ≤ n·x for nonzero x of degree ≤ {bound}, n ≤ {bound}"),
            ))
        }
        Refinement => refinement(ck),
        WeakComparability => {
            let x = x0.expect("checked above");
            for a in &nonzero {
                if ck.cl.eq(a, &zero) != Tri::No {
                    continue;
                }
                let ok_k = (1..=bound).any(|k| {
                    elems.iter().all(|b| {
                        matches!(
                            implication(ck.cl.leq(&scale(b, k), &x), ck.cl.leq(b, a)),
                            Step::Ok
                        )
                    })
                });
                if !ok_k {
                    ck.undecided += 1;
                }
            }
            Ok(ck.finish(property, format!("a, b over {all}, k ≤ {bound}")))
        }
    }
}

/// Shows `x` is an order unit by `target ≤ n·x` (or every generator when `target = x`),
/// or refutes it with a face.
fn order_unit_step(ck: &mut Checker, x: &[u32], target: &[u32]) -> Result<Option<PropertyVerdict>> {
    let f = face(ck.p, x);
    if let Some(j) = f.iter().position(|&i| !i) {
        let gens = (0..f.len()).filter(|&i| f[i]).collect();
        let facts = vec![Fact::Face {
            generators: gens,
            inside: x.to_vec(),
            outside: unit(ck.p.gens, j),
        }];
        let w = vec![("x", x.to_vec()), ("y", unit(ck.p.gens, j))];
        return Ok(Some(ck.fail(Property::OrderUnit, w, None, facts)));
    }
    let targets: Vec<Vector> = if x == target {
        (0..ck.p.gens).map(|i| unit(ck.p.gens, i)).collect()
    } else {
        vec![target.to_vec()]
    };
    for t in targets {
        if !(1..=ck.bound).any(|n| ck.cl.leq(&t, &scale(x, n)) == Tri::Yes) {
            ck.undecided += 1;
        }
    }
    Ok(None)
}

/// Splits of every member of the class of `v` into two parts.
fn splits(v: &[u32]) -> Vec<(Vector, Vector)> {
    let mut out = vec![(Vec::new(), Vec::new())];
    for &c in v {
        out = out
            .into_iter()
            .flat_map(|(a, b)| {
                (0..=c).map(move |k| {
                    let (mut a, mut b) = (a.clone(), b.clone());
                    a.push(k);
                    b.push(c - k);
                    (a, b)
                })
            })
            .collect();
    }
    out
}

/// `Some(c)` with `a1 = c11 + c12`, `a2 = c21 + c22`, `b1 = c11 + c21`, `b2 = c12 + c22`;
/// `None` with a flag telling whether the search was exhaustive.
/// Work cap per refinement instance; hitting it leaves the instance undecided.
const REFINEMENT_STEPS: usize = 50_000;

fn find_refinement(
    cl: &mut Closure,
    a: [&Vector; 2],
    b: [&Vector; 2],
) -> (Option<[Vector; 4]>, bool) {
    let mut exhaustive = cl.complete(a[0]) && cl.complete(a[1]);
    // Incomplete classes cannot refute anything, so only their low-degree members are tried.
    let top = if exhaustive {
        u32::MAX
    } else {
        a.iter().chain(&b).map(|v| degree(v)).max().unwrap_or(0) * 2
    };
    let m1: Vec<Vector> = cl
        .members(a[0])
        .iter()
        .filter(|v| degree(v) <= top)
        .cloned()
        .collect();
    let m2: Vec<Vector> = cl
        .members(a[1])
        .iter()
        .filter(|v| degree(v) <= top)
        .cloned()
        .collect();
    let mut steps = 0;
    for y1 in &m1 {
        for (c11, c12) in splits(y1) {
            for y2 in &m2 {
                for (c21, c22) in splits(y2) {
                    steps += 1;
                    if steps > REFINEMENT_STEPS {
                        return (None, false);
                    }
                    let e1 = cl.eq(&add(&c11, &c21), b[0]);
                    if e1 == Tri::No {
                        continue;
                    }
                    let e2 = cl.eq(&add(&c12, &c22), b[1]);
                    match e1.and(e2) {
                        Tri::Yes => return (Some([c11, c12, c21, c22]), true),
                        Tri::Unknown => exhaustive = false,
                        Tri::No => {}
                    }
                }
            }
        }
    }
    (None, exhaustive)
}

fn refinement(mut ck: Checker) -> Result<PropertyVerdict> {
    let d = ck.bound.min(3);
    let elems = vectors_up_to(ck.p.gens, d);
    let pairs: Vec<(&Vector, &Vector)> = elems
        .iter()
        .enumerate()
        .flat_map(|(i, x)| elems[i..].iter().map(move |y| (x, y)))
        .filter(|(x, y)| degree(x) + degree(y) <= d)
        .collect();
    for &(a1, a2) in &pairs {
        for &(b1, b2) in &pairs {
            let (sa, sb) = (add(a1, a2), add(b1, b2));
            let premise = ck.cl.eq(&sa, &sb);
            if premise == Tri::No {
                continue;
            }
            let (found, exhaustive) = find_refinement(&mut ck.cl, [a1, a2], [b1, b2]);
            match (found, premise, exhaustive) {
                (Some(_), ..) => {}
                (None, Tri::Yes, true) => {
                    let facts = vec![
                        ck.equal(&sa, &sb)?,
                        Fact::NoRefinement {
                            left: vec![a1.clone(), a2.clone()],
                            right: vec![b1.clone(), b2.clone()],
                        },
                    ];
                    let w = vec![
                        ("a1", a1.clone()),
                        ("a2", a2.clone()),
                        ("b1", b1.clone()),
                        ("b2", b2.clone()),
                    ];
                    return Ok(ck.fail(Property::Refinement, w, None, facts));
                }
                _ => ck.undecided += 1,
            }
        }
    }
    Ok(ck.finish(
        Property::Refinement,
        format!("two-by-two sums of total degree ≤ {d}"),
    ))
}

/// Re-verifies every fact of a failure certificate with fresh state.
pub fn recheck(p: &MonoidPresentation, cert: &Certificate) -> bool {
    cert.facts.iter().all(|f| match f {
        Fact::Equal { left, right, chain } => {
            chain.first() == Some(left) && chain.last() == Some(right) && verify_chain(p, chain)
        }
        Fact::Below {
            small,
            big,
            rest,
            chain,
        } => {
            chain.first() == Some(big)
                && chain.last() == Some(&add(small, rest))
                && verify_chain(p, chain)
        }
        Fact::NotEqual { left, right } => Closure::new(p, cert.cap).eq(left, right) == Tri::No,
        Fact::NotBelow { small, big } => Closure::new(p, cert.cap).leq(small, big) == Tri::No,
        Fact::Face {
            generators,
            inside,
            outside,
        } => {
            let within = |v: &[u32]| {
                v.iter()
                    .enumerate()
                    .all(|(i, &c)| c == 0 || generators.contains(&i))
            };
            face_is_closed(p, generators) && within(inside) && !within(outside)
        }
        Fact::NoRefinement { left, right } => {
            let mut cl = Closure::new(p, cert.cap);
            find_refinement(&mut cl, [&left[0], &left[1]], [&right[0], &right[1]]) == (None, true)
        }
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Quotient {
    /// The antisymmetric quotient of the part below multiples of `b`.
    pub presentation: MonoidPresentation,
    /// Old generator index for each new generator.
    pub generators: Vec<usize>,
    /// Pairs `u ≤ v ≤ u` with `u ≠ v` as vectors.
    pub collapsed: Vec<(Vector, Vector)>,
    pub incomplete: bool,
}

pub fn antisymmetric_quotient(p: &MonoidPresentation, b: &[u32], bound: u32) -> Result<Quotient> {
    if b.len() != p.gens || degree(b) == 0 {
        return Err(Error::Input(
            "antisymmetric_quotient needs a nonzero element".into(),
        ));
    }
    if bound == 0 {
        return Err(Error::Input("bound must be positive".into()));
    }
    let cap = bound * (bound + 1);
    let mut cl = Closure::new(p, cap);
    let mut incomplete = false;
    let mut gens = Vec::new();
    for i in 0..p.gens {
        let e = unit(p.gens, i);
        let ts: Vec<Tri> = (1..=bound).map(|n| cl.leq(&e, &scale(b, n))).collect();
        if ts.contains(&Tri::Yes) {
            gens.push(i);
        } else if ts.contains(&Tri::Unknown) {
            incomplete = true;
        }
    }
    let restrict = |v: &Vector| -> Option<Vector> {
        v.iter()
            .enumerate()
            .all(|(i, &c)| c == 0 || gens.contains(&i))
            .then(|| gens.iter().map(|&i| v[i]).collect())
    };
    let rels: Vec<(Vector, Vector)> = p
        .relations
        .iter()
        .filter_map(|(l, r)| Some((restrict(l)?, restrict(r)?)))
        .collect();
    let sub = MonoidPresentation::new(gens.len(), rels.clone())?;
    let mut scl = Closure::new(&sub, cap);
    let elems = vectors_up_to(sub.gens, bound);
    let mut collapsed = Vec::new();
    let mut extra = Vec::new();
    for (i, u) in elems.iter().enumerate() {
        for v in &elems[i + 1..] {
            let (uv, vu) = (scl.leq(u, v), scl.leq(v, u));
            if uv == Tri::Yes && vu == Tri::Yes {
                collapsed.push((u.clone(), v.clone()));
                if scl.eq(u, v) != Tri::Yes {
                    extra.push((u.clone(), v.clone()));
                }
            } else if uv != Tri::No && vu != Tri::No {
                incomplete = true;
            }
        }
    }
    let presentation = MonoidPresentation::new(sub.gens, rels.into_iter().chain(extra))?;
    Ok(Quotient {
        presentation,
        generators: gens,
        collapsed,
        incomplete,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PiCriterion {
    pub group: GrothendieckGroup,
    pub cancellative: PropertyVerdict,
    /// Non-injectivity on degree-≤bound classes iff a cancellation counterexample at the bound.
    pub consistent: bool,
}

pub fn pi_criterion(p: &MonoidPresentation, bound: u32) -> Result<PiCriterion> {
    let group = grothendieck(p, bound)?;
    let cancellative = check_property(p, Property::Cancellative, None, bound)?;
    let consistent = group.noninjective.is_some() == (cancellative.verdict == Verdict::Fails);
    Ok(PiCriterion {
        group,
        cancellative,
        consistent,
    })
}

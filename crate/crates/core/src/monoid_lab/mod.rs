//! Finitely presented commutative monoids: bounded word problem, property
//! verdicts with certificates, Grothendieck groups and coinvariants.

mod closure;
mod finite;
mod properties;
mod snf;

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};

pub use closure::{monoid_leq, verify_chain, Closure, LeqCertificate, LeqVerdict, Tri};
pub use finite::{
    brute_force_leq, closed_form_leq, coinvariants, finite_action_presentation,
    finite_action_type_semigroup, resolution_type_monoid, small_finite_actions, small_groups,
    Backend, CoinvariantsGroup, ResolutionMode, TypeMonoidSnapshot,
};
pub use properties::{
    antisymmetric_quotient, check_property, pi_criterion, recheck, Certificate, Fact, PiCriterion,
    Property, PropertyVerdict, Quotient, Verdict,
};
pub use snf::{smith, Matrix, Smith};

pub type Vector = Vec<u32>;

pub fn degree(v: &[u32]) -> u32 {
    v.iter().sum()
}

pub fn add(a: &[u32], b: &[u32]) -> Vector {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn scale(a: &[u32], n: u32) -> Vector {
    a.iter().map(|x| x * n).collect()
}

pub fn dominates(big: &[u32], small: &[u32]) -> bool {
    big.iter().zip(small).all(|(x, y)| x >= y)
}

pub fn unit(g: usize, i: usize) -> Vector {
    let mut v = vec![0; g];
    v[i] = 1;
    v
}

/// All vectors in `ℕ^g` of total degree at most `d`, by degree then reverse-lex.
pub fn vectors_up_to(g: usize, d: u32) -> Vec<Vector> {
    let mut out = Vec::new();
    for total in 0..=d {
        let mut cur = vec![0; g];
        fill(&mut cur, 0, total, &mut out);
    }
    out
}

fn fill(cur: &mut Vector, i: usize, left: u32, out: &mut Vec<Vector>) {
    if i + 1 >= cur.len() {
        if let Some(last) = cur.last_mut() {
            *last = left;
            out.push(cur.clone());
        } else if left == 0 {
            out.push(Vec::new());
        }
        return;
    }
    for x in (0..=left).rev() {
        cur[i] = x;
        fill(cur, i + 1, left - x, out);
    }
    cur[i] = 0;
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct MonoidPresentation {
    pub gens: usize,
    /// Sorted, deduplicated, each pair ordered and nontrivial.
    pub relations: Vec<(Vector, Vector)>,
}

impl MonoidPresentation {
    pub fn new(gens: usize, relations: impl IntoIterator<Item = (Vector, Vector)>) -> Result<Self> {
        let mut rels = Vec::new();
        for (l, r) in relations {
            if l.len() != gens || r.len() != gens {
                return Err(Error::Input(format!(
                    "relation vectors must have {gens} coordinates"
                )));
            }
            if l != r {
                rels.push(if l < r { (l, r) } else { (r, l) });
            }
        }
        rels.sort();
        rels.dedup();
        Ok(MonoidPresentation {
            gens,
            relations: rels,
        })
    }

    pub fn free(gens: usize) -> Self {
        MonoidPresentation {
            gens,
            relations: Vec::new(),
        }
    }

    pub fn zero(&self) -> Vector {
        vec![0; self.gens]
    }

    pub fn parse_vector(&self, text: &str) -> Result<Vector> {
        let v: Vector = text
            .split_whitespace()
            .map(|t| {
                t.parse::<u32>()
                    .map_err(|_| Error::Input(format!("bad coordinate `{t}`")))
            })
            .collect::<Result<_>>()?;
        if v.len() != self.gens {
            return Err(Error::Input(format!(
                "expected {} coordinates in `{text}`",
                self.gens
            )));
        }
        Ok(v)
    }

    /// `rel` lines of the form `1 1 0 = 0 0 2`.
    pub fn from_parts(gens: usize, rels: &[impl AsRef<str>]) -> Result<Self> {
        let shell = MonoidPresentation::free(gens);
        let mut pairs = Vec::new();
        for r in rels {
            let (l, rr) = r
                .as_ref()
                .split_once('=')
                .ok_or_else(|| Error::Input(format!("relation `{}` has no `=`", r.as_ref())))?;
            pairs.push((shell.parse_vector(l)?, shell.parse_vector(rr)?));
        }
        MonoidPresentation::new(gens, pairs)
    }

    /// Text format: a `gens: g` line followed by `rel: … = …` lines.
    pub fn parse(text: &str) -> Result<Self> {
        let mut gens = None;
        let mut rels = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = || Error::Parse {
                line: n + 1,
                col: 1,
                msg: format!("expected `gens:` or `rel:`, got `{line}`"),
            };
            let (key, val) = line.split_once(':').ok_or_else(bad)?;
            match key.trim() {
                "gens" => gens = Some(val.trim().parse::<usize>().map_err(|_| bad())?),
                "rel" => rels.push(val.trim().to_string()),
                _ => return Err(bad()),
            }
        }
        let g = gens.ok_or_else(|| Error::Parse {
            line: 1,
            col: 1,
            msg: "missing `gens:` line".into(),
        })?;
        Self::from_parts(g, &rels)
    }

    /// Merges generators identified by degree-one relations; returns the smaller
    /// presentation and the generator map.
    pub fn simplify(&self) -> Result<(MonoidPresentation, Vec<usize>)> {
        let mut parent: Vec<usize> = (0..self.gens).collect();
        fn root(p: &mut [usize], x: usize) -> usize {
            let mut x = x;
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for (l, r) in &self.relations {
            if degree(l) == 1 && degree(r) == 1 {
                let a = l.iter().position(|&x| x == 1).unwrap();
                let b = r.iter().position(|&x| x == 1).unwrap();
                let (ra, rb) = (root(&mut parent, a), root(&mut parent, b));
                parent[ra.max(rb)] = ra.min(rb);
            }
        }
        let mut index = vec![usize::MAX; self.gens];
        let mut map = Vec::with_capacity(self.gens);
        let mut next = 0;
        for i in 0..self.gens {
            let r = root(&mut parent, i);
            if index[r] == usize::MAX {
                index[r] = next;
                next += 1;
            }
            map.push(index[r]);
        }
        let push = |v: &Vector| {
            let mut out = vec![0; next];
            for (i, &x) in v.iter().enumerate() {
                out[map[i]] += x;
            }
            out
        };
        let rels: Vec<(Vector, Vector)> = self
            .relations
            .iter()
            .map(|(l, r)| (push(l), push(r)))
            .collect();
        Ok((MonoidPresentation::new(next, rels)?, map))
    }
}

impl fmt::Display for MonoidPresentation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "gens: {}", self.gens)?;
        let join = |v: &Vector| {
            v.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(" ")
        };
        for (l, r) in &self.relations {
            writeln!(f, "rel: {} = {}", join(l), join(r))?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GrothendieckGroup {
    pub rank: usize,
    pub torsion: Vec<i128>,
    /// A pair of distinct classes (degree ≤ bound) with equal images, if one was found.
    pub noninjective: Option<(Vector, Vector)>,
    pub bound: u32,
}

pub fn relation_matrix(p: &MonoidPresentation) -> Matrix {
    p.relations
        .iter()
        .map(|(l, r)| {
            l.iter()
                .zip(r)
                .map(|(&a, &b)| a as i128 - b as i128)
                .collect()
        })
        .collect()
}

/// `ℤ^g / ⟨l − r⟩` and a bounded search for classes the natural map identifies.
pub fn grothendieck(p: &MonoidPresentation, bound: u32) -> Result<GrothendieckGroup> {
    let s = smith(&relation_matrix(p), p.gens)?;
    let noninjective = noninjective_pair(p, &s, bound)?;
    Ok(GrothendieckGroup {
        rank: s.free_rank(),
        torsion: s.torsion(),
        noninjective,
        bound,
    })
}

fn noninjective_pair(
    p: &MonoidPresentation,
    s: &Smith,
    bound: u32,
) -> Result<Option<(Vector, Vector)>> {
    let elems = vectors_up_to(p.gens, bound);
    let mut images = std::collections::HashMap::new();
    for v in &elems {
        let x: Vec<i128> = v.iter().map(|&c| c as i128).collect();
        images
            .entry(s.image(&x)?)
            .or_insert_with(Vec::new)
            .push(v.clone());
    }
    let mut cl = Closure::new(p, bound * 2);
    let mut keys: Vec<_> = images.keys().cloned().collect();
    keys.sort();
    for k in keys {
        let group = &images[&k];
        for i in 0..group.len() {
            for j in i + 1..group.len() {
                if cl.eq(&group[i], &group[j]) == Tri::No {
                    return Ok(Some((group[i].clone(), group[j].clone())));
                }
            }
        }
    }
    Ok(None)
}

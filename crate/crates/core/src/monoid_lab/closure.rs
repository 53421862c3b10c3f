//! Bounded congruence closure. Classes are explored by single relation
//! applications up to a degree limit; a class is complete when no application
//! left the limit, in which case it is the whole congruence class.

use std::collections::{HashMap, VecDeque};

use serde::Serialize;

use super::{degree, dominates, MonoidPresentation, Vector};
use crate::error::{Error, Result};

const MAX_CLASS: usize = 200_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Tri {
    Yes,
    No,
    Unknown,
}

impl Tri {
    pub fn and(self, other: Tri) -> Tri {
        match (self, other) {
            (Tri::No, _) | (_, Tri::No) => Tri::No,
            (Tri::Yes, Tri::Yes) => Tri::Yes,
            _ => Tri::Unknown,
        }
    }
}

struct Class {
    members: Vec<Vector>,
    complete: bool,
}

pub struct Closure<'a> {
    p: &'a MonoidPresentation,
    cap: u32,
    index: HashMap<Vector, usize>,
    parent: Vec<usize>,
    classes: Vec<Class>,
}

/// One relation application in either direction.
pub(crate) fn neighbours<'b>(
    p: &'b MonoidPresentation,
    x: &'b [u32],
) -> impl Iterator<Item = Vector> + 'b {
    p.relations.iter().flat_map(move |(l, r)| {
        [(l, r), (r, l)].into_iter().filter_map(move |(from, to)| {
            dominates(x, from).then(|| {
                x.iter()
                    .zip(from)
                    .zip(to)
                    .map(|((&a, &f), &t)| a - f + t)
                    .collect()
            })
        })
    })
}

impl<'a> Closure<'a> {
    /// Explores each class up to degree `max(cap, degree of the seed)`.
    pub fn new(p: &'a MonoidPresentation, cap: u32) -> Self {
        Closure {
            p,
            cap,
            index: HashMap::new(),
            parent: Vec::new(),
            classes: Vec::new(),
        }
    }

    fn root(&mut self, mut c: usize) -> usize {
        while self.parent[c] != c {
            self.parent[c] = self.parent[self.parent[c]];
            c = self.parent[c];
        }
        c
    }

    pub fn class(&mut self, v: &[u32]) -> usize {
        if let Some(&c) = self.index.get(v) {
            return self.root(c);
        }
        let id = self.classes.len();
        self.parent.push(id);
        let limit = self.cap.max(degree(v));
        let mut members = vec![v.to_vec()];
        self.index.insert(v.to_vec(), id);
        let mut complete = true;
        let mut merged = Vec::new();
        let mut queue = VecDeque::from([v.to_vec()]);
        while let Some(x) = queue.pop_front() {
            for y in neighbours(self.p, &x) {
                if degree(&y) > limit {
                    complete = false;
                    continue;
                }
                match self.index.get(&y) {
                    Some(&c) => {
                        if c != id {
                            merged.push(c);
                        }
                    }
                    None => {
                        if members.len() >= MAX_CLASS {
                            complete = false;
                            continue;
                        }
                        self.index.insert(y.clone(), id);
                        members.push(y.clone());
                        queue.push_back(y);
                    }
                }
            }
        }
        self.classes.push(Class { members, complete });
        for c in merged {
            let (a, b) = (self.root(id), self.root(c));
            if a != b {
                let moved = std::mem::take(&mut self.classes[b].members);
                let comp = self.classes[b].complete;
                self.classes[a].members.extend(moved);
                self.classes[a].complete &= comp;
                self.parent[b] = a;
            }
        }
        self.root(id)
    }

    pub fn complete(&mut self, v: &[u32]) -> bool {
        let c = self.class(v);
        self.classes[c].complete
    }

    pub fn members(&mut self, v: &[u32]) -> &[Vector] {
        let c = self.class(v);
        &self.classes[c].members
    }

    pub fn eq(&mut self, u: &[u32], v: &[u32]) -> Tri {
        let (cu, cv) = (self.class(u), self.class(v));
        if cu == cv {
            Tri::Yes
        } else if self.classes[cu].complete || self.classes[cv].complete {
            Tri::No
        } else {
            Tri::Unknown
        }
    }

    /// `a ≤ b`, with the remainder `c` such that `b ~ a + c` when it holds.
    pub fn leq_rest(&mut self, a: &[u32], b: &[u32]) -> (Tri, Option<Vector>) {
        let c = self.class(b);
        let class = &self.classes[c];
        if let Some(y) = class.members.iter().find(|y| dominates(y, a)) {
            return (
                Tri::Yes,
                Some(y.iter().zip(a).map(|(p, q)| p - q).collect()),
            );
        }
        (
            if class.complete {
                Tri::No
            } else {
                Tri::Unknown
            },
            None,
        )
    }

    pub fn leq(&mut self, a: &[u32], b: &[u32]) -> Tri {
        self.leq_rest(a, b).0
    }

    /// A rewrite chain from `from` to `to` found by a fresh search.
    pub fn chain(&self, from: &[u32], to: &[u32]) -> Option<Vec<Vector>> {
        find_chain(self.p, from, to, self.cap.max(degree(from)).max(degree(to)))
    }
}

pub(crate) fn find_chain(
    p: &MonoidPresentation,
    from: &[u32],
    to: &[u32],
    limit: u32,
) -> Option<Vec<Vector>> {
    let mut prev: HashMap<Vector, Option<Vector>> = HashMap::from([(from.to_vec(), None)]);
    let mut queue = VecDeque::from([from.to_vec()]);
    while let Some(x) = queue.pop_front() {
        if x == to {
            let mut chain = vec![x.clone()];
            let mut cur = x;
            while let Some(Some(px)) = prev.get(&cur) {
                chain.push(px.clone());
                cur = px.clone();
            }
            chain.reverse();
            return Some(chain);
        }
        if prev.len() > MAX_CLASS {
            return None;
        }
        for y in neighbours(p, &x) {
            if degree(&y) <= limit && !prev.contains_key(&y) {
                prev.insert(y.clone(), Some(x.clone()));
                queue.push_back(y);
            }
        }
    }
    None
}

/// Each consecutive pair differs by one application of one relation.
pub fn verify_chain(p: &MonoidPresentation, chain: &[Vector]) -> bool {
    !chain.is_empty()
        && chain.iter().all(|v| v.len() == p.gens)
        && chain.windows(2).all(|w| {
            p.relations.iter().any(|(l, r)| {
                [(l, r), (r, l)].iter().any(|(from, to)| {
                    dominates(&w[0], from)
                        && w[0]
                            .iter()
                            .zip(from.iter())
                            .zip(to.iter())
                            .zip(&w[1])
                            .all(|(((&a, &f), &t), &b)| a - f + t == b)
                })
            })
        })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LeqCertificate {
    /// `b = a + c`.
    pub c: Vector,
    /// Rewrites from `b` to `a + c`.
    pub chain: Vec<Vector>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum LeqVerdict {
    Holds(LeqCertificate),
    /// The class of `b` was enumerated completely.
    Fails {
        class_size: usize,
    },
    Unknown {
        explored: usize,
        bound: u32,
    },
}

pub fn monoid_leq(p: &MonoidPresentation, a: &[u32], b: &[u32], bound: u32) -> Result<LeqVerdict> {
    if bound == 0 {
        return Err(Error::Input("bound must be positive".into()));
    }
    if a.len() != p.gens || b.len() != p.gens {
        return Err(Error::Input(format!(
            "vectors must have {} coordinates",
            p.gens
        )));
    }
    let mut cl = Closure::new(p, bound);
    let (t, rest) = cl.leq_rest(a, b);
    let explored = cl.members(b).len();
    Ok(match t {
        Tri::Yes => {
            let c = rest.expect("remainder");
            let target = super::add(a, &c);
            let chain = cl
                .chain(b, &target)
                .ok_or_else(|| Error::Invariant("closure member without a rewrite chain".into()))?;
            if !verify_chain(p, &chain) {
                return Err(Error::Invariant(
                    "rewrite chain failed re-verification".into(),
                ));
            }
            LeqVerdict::Holds(LeqCertificate { c, chain })
        }
        Tri::No => LeqVerdict::Fails {
            class_size: explored,
        },
        Tri::Unknown => LeqVerdict::Unknown { explored, bound },
    })
}

//! Depth-first piece assignment for shift-type actions. Each source atom picks a
//! (target copy, word) whose image fits the target and misses every image chosen so far.

use std::collections::HashMap;
use std::time::Instant;

use super::{depth_sequence, Equidecomposer, Mode, Piece, SearchOutcome};
use crate::error::{Error, Result};
use crate::partition_engine::{level_partition, FinitePartition, DEFAULT_ATOM_CAP};
use crate::space_model::{
    apply_word, disjoint, eval, is_subset, same_set, support, ClopenExpr, TypeExpr,
};

struct Candidate {
    to: usize,
    word: usize,
    image: ClopenExpr,
    bits: Option<Vec<u64>>,
}

fn pack(set: &[bool]) -> Vec<u64> {
    let mut out = vec![0u64; set.len().div_ceil(64)];
    for (i, _) in set.iter().enumerate().filter(|(_, &b)| b) {
        out[i / 64] |= 1 << (i % 64);
    }
    out
}

struct Problem<'a> {
    eng: &'a Equidecomposer,
    b: &'a TypeExpr,
    mode: Mode,
    cands: Vec<Candidate>,
    target_bits: Option<Vec<Vec<u64>>>,
    memo: HashMap<(usize, usize), bool>,
    nodes: u64,
    start: Instant,
    stop: Option<String>,
}

impl Problem<'_> {
    fn compatible(&mut self, c: usize, d: usize) -> Result<bool> {
        let (x, y) = (&self.cands[c], &self.cands[d]);
        if x.to != y.to {
            return Ok(true);
        }
        if let (Some(bx), Some(by)) = (&x.bits, &y.bits) {
            return Ok(bx.iter().zip(by).all(|(u, v)| u & v == 0));
        }
        let key = (c.min(d), c.max(d));
        if let Some(&v) = self.memo.get(&key) {
            return Ok(v);
        }
        let v = disjoint(&self.eng.action, &x.image, &y.image)?;
        self.memo.insert(key, v);
        Ok(v)
    }

    fn tiles(&self, chosen: &[usize]) -> Result<bool> {
        for (j, (copy, e)) in self.b.summands.iter().enumerate() {
            let mine: Vec<usize> = chosen
                .iter()
                .copied()
                .filter(|&c| self.cands[c].to == *copy)
                .collect();
            if let Some(tb) = &self.target_bits {
                let mut acc = vec![0u64; tb[j].len()];
                for &c in &mine {
                    for (a, w) in acc.iter_mut().zip(self.cands[c].bits.as_ref().unwrap()) {
                        *a |= w;
                    }
                }
                if acc != tb[j] {
                    return Ok(false);
                }
            } else {
                let cover =
                    ClopenExpr::union_all(mine.iter().map(|&c| self.cands[c].image.clone()));
                if !same_set(&self.eng.action, &cover, e)? {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// Assigns sources `k..` given the filtered domains; fills `chosen` on success.
    fn dfs(&mut self, k: usize, domains: &[Vec<usize>], chosen: &mut Vec<usize>) -> Result<bool> {
        if k == domains.len() {
            return if self.mode == Mode::Sub {
                Ok(true)
            } else {
                self.tiles(chosen)
            };
        }
        for &c in &domains[k] {
            self.nodes += 1;
            if self.nodes > self.eng.budget.max_nodes {
                self.stop = Some("node cap".into());
                return Ok(false);
            }
            if self.nodes % 256 == 0 && self.eng.out_of_time(self.start) {
                self.stop = Some("time cap".into());
                return Ok(false);
            }
            let mut next: Vec<Vec<usize>> = Vec::with_capacity(domains.len() - k - 1);
            let mut wiped = false;
            for dom in &domains[k + 1..] {
                let mut kept = Vec::with_capacity(dom.len());
                for &d in dom {
                    if self.compatible(c, d)? {
                        kept.push(d);
                    }
                }
                if kept.is_empty() {
                    wiped = true;
                    break;
                }
                next.push(kept);
            }
            if wiped {
                continue;
            }
            chosen.push(c);
            let mut full: Vec<Vec<usize>> = vec![Vec::new(); k + 1];
            full.extend(next);
            if self.dfs(k + 1, &full, chosen)? {
                return Ok(true);
            }
            chosen.pop();
            if self.stop.is_some() {
                return Ok(false);
            }
        }
        Ok(false)
    }
}

pub(super) fn search(
    eng: &Equidecomposer,
    a: &TypeExpr,
    b: &TypeExpr,
    mode: Mode,
) -> Result<SearchOutcome> {
    let start = Instant::now();
    let action = &eng.action;
    let sources_exprs: Vec<&ClopenExpr> = a.summands.iter().map(|(_, e)| e).collect();
    let supp = support(action, &sources_exprs)?;
    let mut tried = Vec::new();
    let mut nodes = 0;
    let mut cap_hit = None;
    for d in depth_sequence(&supp, eng.budget.max_depth) {
        let p = match level_partition(action, &d, DEFAULT_ATOM_CAP) {
            Ok(p) => p,
            Err(e @ Error::AtomCap { .. }) => {
                cap_hit = Some(e.to_string());
                break;
            }
            Err(e) => return Err(e),
        };
        tried.push(d.describe());
        let mut sources: Vec<(usize, usize)> = Vec::new();
        for (copy, e) in &a.summands {
            for (x, inside) in eval(&p, e)?.into_iter().enumerate() {
                if inside {
                    sources.push((*copy, x));
                }
            }
        }
        let out = solve_at(eng, &p, &sources, b, mode, start)?;
        nodes += out.1;
        match out.0 {
            Solved::Yes(chosen) => {
                return Ok(SearchOutcome::Found(build(
                    eng, &p, &sources, chosen, mode, d,
                )?))
            }
            Solved::No => {}
            Solved::Stopped(why) => {
                cap_hit = Some(why);
                break;
            }
        }
        if eng.out_of_time(start) {
            cap_hit = Some("time cap".into());
            break;
        }
    }
    Ok(eng.exhausted(
        tried,
        nodes,
        cap_hit,
        "no consistent piece assignment within the word ball at any tried depth".into(),
    ))
}

enum Solved {
    /// `(target copy, word index)` per source.
    Yes(Vec<(usize, usize)>),
    No,
    Stopped(String),
}

fn solve_at(
    eng: &Equidecomposer,
    p: &FinitePartition,
    sources: &[(usize, usize)],
    b: &TypeExpr,
    mode: Mode,
    start: Instant,
) -> Result<(Solved, u64)> {
    let action = &eng.action;
    let mut images: Vec<Vec<ClopenExpr>> = Vec::with_capacity(sources.len());
    for &(_, x) in sources {
        let atom = p.atom_expr(x);
        images.push(
            eng.ball
                .iter()
                .map(|w| apply_word(action, w, &atom))
                .collect::<Result<_>>()?,
        );
    }
    // One partition seeing every image and target makes all tests bitwise.
    let mut all: Vec<&ClopenExpr> = b.summands.iter().map(|(_, e)| e).collect();
    all.extend(images.iter().flatten());
    let common =
        match support(action, &all).and_then(|d| level_partition(action, &d, DEFAULT_ATOM_CAP)) {
            Ok(c) => Some(c),
            Err(Error::AtomCap { .. }) => None,
            Err(e) => return Err(e),
        };
    let target_sets: Option<Vec<Vec<bool>>> = match &common {
        Some(c) => Some(
            b.summands
                .iter()
                .map(|(_, e)| eval(c, e))
                .collect::<Result<_>>()?,
        ),
        None => None,
    };
    let mut cands = Vec::new();
    let mut domains = Vec::with_capacity(sources.len());
    for imgs in &images {
        let mut dom = Vec::new();
        for (wi, img) in imgs.iter().enumerate() {
            let img_set = match &common {
                Some(c) => Some(eval(c, img)?),
                None => None,
            };
            for (j, (copy, e)) in b.summands.iter().enumerate() {
                let fits = match (&img_set, &target_sets) {
                    (Some(s), Some(t)) => s.iter().zip(&t[j]).all(|(&u, &v)| !u || v),
                    _ => is_subset(action, img, e)?,
                };
                if fits {
                    dom.push(cands.len());
                    cands.push(Candidate {
                        to: *copy,
                        word: wi,
                        image: img.clone(),
                        bits: img_set.as_deref().map(pack),
                    });
                }
            }
        }
        if dom.is_empty() {
            return Ok((Solved::No, 0));
        }
        domains.push(dom);
    }
    let mut prob = Problem {
        eng,
        b,
        mode,
        cands,
        target_bits: target_sets.map(|ts| ts.iter().map(|t| pack(t)).collect()),
        memo: HashMap::new(),
        nodes: 0,
        start,
        stop: None,
    };
    let mut chosen = Vec::new();
    let ok = prob.dfs(0, &domains, &mut chosen)?;
    let nodes = prob.nodes;
    if ok {
        let sol = chosen
            .iter()
            .map(|&c| (prob.cands[c].to, prob.cands[c].word))
            .collect();
        return Ok((Solved::Yes(sol), nodes));
    }
    Ok((prob.stop.map_or(Solved::No, Solved::Stopped), nodes))
}

fn build(
    eng: &Equidecomposer,
    p: &FinitePartition,
    sources: &[(usize, usize)],
    chosen: Vec<(usize, usize)>,
    mode: Mode,
    d: crate::space_model::Depth,
) -> Result<super::EquidecompositionWitness> {
    let mut groups: std::collections::BTreeMap<(usize, usize, usize), Vec<bool>> =
        Default::default();
    for (&(copy, x), (to, wi)) in sources.iter().zip(chosen) {
        groups
            .entry((copy, to, wi))
            .or_insert_with(|| vec![false; p.len()])[x] = true;
    }
    let pieces: Vec<Piece> = groups
        .into_iter()
        .map(|((copy, to, wi), set)| eng.piece(copy, to, &p.set_expr(&set), &eng.ball[wi]))
        .collect::<Result<_>>()?;
    Ok(eng.witness(pieces, mode, Some(d), None))
}

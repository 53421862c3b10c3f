//! Backend for actions whose word balls permute finite partitions.

use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap};
use std::rc::Rc;
use std::time::Instant;

use super::matching::{kuhn, FlowNetwork};
use super::{depth_sequence, Equidecomposer, MatchingGraph, Mode, SearchOutcome};
use crate::error::{Error, Result};
use crate::partition_engine::{
    level_partition, word_permutation, FinitePartition, DEFAULT_ATOM_CAP,
};
use crate::space_model::{eval, support, ClopenExpr, Depth, TypeExpr};

pub(super) struct Level {
    pub partition: FinitePartition,
    /// One permutation per ball word, in ball order.
    pub perms: Vec<Vec<usize>>,
}

impl Level {
    /// Distinct images of atom `x` with the first ball word reaching each.
    fn moves(&self, x: usize) -> Vec<(usize, usize)> {
        let mut out: Vec<(usize, usize)> = Vec::new();
        for (wi, p) in self.perms.iter().enumerate() {
            if !out.iter().any(|&(y, _)| y == p[x]) {
                out.push((p[x], wi));
            }
        }
        out
    }
}

#[derive(Default)]
pub(super) struct LevelCache {
    levels: RefCell<HashMap<Depth, Rc<Level>>>,
}

impl Equidecomposer {
    fn level(&self, d: &Depth) -> Result<Rc<Level>> {
        if let Some(l) = self.exact.levels.borrow().get(d) {
            return Ok(l.clone());
        }
        let partition = level_partition(&self.action, d, DEFAULT_ATOM_CAP)?;
        let perms = self
            .ball
            .iter()
            .map(|w| word_permutation(&partition, w))
            .collect::<Result<_>>()?;
        let l = Rc::new(Level { partition, perms });
        self.exact.levels.borrow_mut().insert(d.clone(), l.clone());
        Ok(l)
    }
}

fn members(set: &[bool]) -> Vec<usize> {
    set.iter()
        .enumerate()
        .filter(|(_, &b)| b)
        .map(|(i, _)| i)
        .collect()
}

pub(super) fn clopen(
    eng: &Equidecomposer,
    a: &ClopenExpr,
    b: &ClopenExpr,
    mode: Mode,
) -> Result<SearchOutcome> {
    let start = Instant::now();
    let supp = support(&eng.action, &[a, b])?;
    let mut tried = Vec::new();
    let mut cap_hit = None;
    for d in depth_sequence(&supp, eng.budget.max_depth) {
        let lvl = match eng.level(&d) {
            Ok(l) => l,
            Err(e @ Error::AtomCap { .. }) => {
                cap_hit = Some(e.to_string());
                break;
            }
            Err(e) => return Err(e),
        };
        tried.push(d.describe());
        let p = &lvl.partition;
        let left = members(&eval(p, a)?);
        let right = members(&eval(p, b)?);
        let mut rindex = vec![usize::MAX; p.len()];
        for (j, &y) in right.iter().enumerate() {
            rindex[y] = j;
        }
        let mut adj = Vec::with_capacity(left.len());
        let mut edge_word: Vec<Vec<usize>> = Vec::with_capacity(left.len());
        for &x in &left {
            let (mut nbrs, mut words) = (Vec::new(), Vec::new());
            for (y, wi) in lvl.moves(x) {
                if rindex[y] != usize::MAX {
                    nbrs.push(rindex[y]);
                    words.push(wi);
                }
            }
            adj.push(nbrs);
            edge_word.push(words);
        }
        let m = kuhn(right.len(), &adj);
        let complete =
            m.iter().all(Option::is_some) && (mode == Mode::Sub || left.len() == right.len());
        if complete {
            let mut groups: BTreeMap<usize, Vec<bool>> = BTreeMap::new();
            let mut matched = Vec::new();
            for (i, &x) in left.iter().enumerate() {
                let j = m[i].unwrap();
                let wi = edge_word[i][adj[i].iter().position(|&v| v == j).unwrap()];
                groups.entry(wi).or_insert_with(|| vec![false; p.len()])[x] = true;
                matched.push((i, j));
            }
            let schema = eng.action.schema();
            let graph = MatchingGraph {
                left: left.iter().map(|&x| p.atom_label(x)).collect(),
                right: right.iter().map(|&y| p.atom_label(y)).collect(),
                edges: adj
                    .iter()
                    .enumerate()
                    .flat_map(|(i, nb)| {
                        let ew = &edge_word[i];
                        let schema = &schema;
                        let ball = &eng.ball;
                        nb.iter()
                            .zip(ew)
                            .map(move |(&j, &wi)| (i, j, schema.format(&ball[wi])))
                    })
                    .collect(),
                matched,
            };
            let pieces = groups
                .into_iter()
                .map(|(wi, set)| eng.piece(0, 0, &p.set_expr(&set), &eng.ball[wi]))
                .collect::<Result<_>>()?;
            return Ok(SearchOutcome::Found(eng.witness(
                pieces,
                mode,
                Some(d),
                Some(graph),
            )));
        }
        if eng.out_of_time(start) {
            cap_hit = Some("time cap".into());
            break;
        }
    }
    Ok(eng.exhausted(
        tried,
        0,
        cap_hit,
        "no complete matching within the word ball at any tried depth".into(),
    ))
}

pub(super) fn types(
    eng: &Equidecomposer,
    a: &TypeExpr,
    b: &TypeExpr,
    mode: Mode,
) -> Result<SearchOutcome> {
    let start = Instant::now();
    let exprs: Vec<&ClopenExpr> = a
        .summands
        .iter()
        .chain(&b.summands)
        .map(|(_, e)| e)
        .collect();
    let supp = support(&eng.action, &exprs)?;
    let mut tried = Vec::new();
    let mut cap_hit = None;
    for d in depth_sequence(&supp, eng.budget.max_depth) {
        let lvl = match eng.level(&d) {
            Ok(l) => l,
            Err(e @ Error::AtomCap { .. }) => {
                cap_hit = Some(e.to_string());
                break;
            }
            Err(e) => return Err(e),
        };
        tried.push(d.describe());
        let p = &lvl.partition;
        let n = p.len();
        let sa: Vec<Vec<bool>> = a
            .summands
            .iter()
            .map(|(_, e)| eval(p, e))
            .collect::<Result<_>>()?;
        let sb: Vec<Vec<bool>> = b
            .summands
            .iter()
            .map(|(_, e)| eval(p, e))
            .collect::<Result<_>>()?;
        let mult = |s: &[Vec<bool>], x: usize| s.iter().filter(|v| v[x]).count() as i64;
        let total_a: i64 = (0..n).map(|x| mult(&sa, x)).sum();
        let total_b: i64 = (0..n).map(|x| mult(&sb, x)).sum();
        if total_a > total_b || (mode == Mode::Equi && total_a != total_b) {
            if eng.out_of_time(start) {
                cap_hit = Some("time cap".into());
                break;
            }
            continue;
        }
        // nodes: 0 source, 1 sink, 2+x left atoms, 2+n+y right atoms
        let mut net = FlowNetwork::new(2 + 2 * n);
        let mut arcs: Vec<Vec<(usize, usize, usize)>> = vec![Vec::new(); n];
        for x in 0..n {
            let ma = mult(&sa, x);
            if ma > 0 {
                net.add_edge(0, 2 + x, ma);
                for (y, wi) in lvl.moves(x) {
                    if mult(&sb, y) > 0 {
                        let id = net.add_edge(2 + x, 2 + n + y, total_a);
                        arcs[x].push((id, y, wi));
                    }
                }
            }
            let mb = mult(&sb, x);
            if mb > 0 {
                net.add_edge(2 + n + x, 1, mb);
            }
        }
        if net.max_flow(0, 1) == total_a {
            let mut left: Vec<Vec<i64>> = arcs
                .iter()
                .map(|v| v.iter().map(|&(id, _, _)| net.flow(id)).collect())
                .collect();
            let mut free: Vec<Vec<bool>> = sb.clone();
            let mut groups: BTreeMap<(usize, usize, usize), Vec<bool>> = BTreeMap::new();
            for (ci, (copy, _)) in a.summands.iter().enumerate() {
                for x in members(&sa[ci]) {
                    let k = left[x]
                        .iter()
                        .position(|&f| f > 0)
                        .ok_or_else(|| Error::Invariant("flow decomposition ran dry".into()))?;
                    left[x][k] -= 1;
                    let (_, y, wi) = arcs[x][k];
                    let cj = free
                        .iter()
                        .position(|v| v[y])
                        .ok_or_else(|| Error::Invariant("target atom over-used".into()))?;
                    free[cj][y] = false;
                    groups
                        .entry((*copy, b.summands[cj].0, wi))
                        .or_insert_with(|| vec![false; n])[x] = true;
                }
            }
            let pieces = groups
                .into_iter()
                .map(|((i, j, wi), set)| eng.piece(i, j, &p.set_expr(&set), &eng.ball[wi]))
                .collect::<Result<_>>()?;
            return Ok(SearchOutcome::Found(eng.witness(
                pieces,
                mode,
                Some(d),
                None,
            )));
        }
        if eng.out_of_time(start) {
            cap_hit = Some("time cap".into());
            break;
        }
    }
    Ok(eng.exhausted(
        tried,
        0,
        cap_hit,
        "maximum flow falls short at every tried depth".into(),
    ))
}

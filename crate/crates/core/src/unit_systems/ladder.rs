//! One step of the ample ladder: refine a unit system until given clopen
//! equalities become permutations of atoms.

use std::collections::VecDeque;

use serde_json::{json, Value};

use super::{orbits_of, PiecewiseMap, UnitSystem};
use crate::error::{Error, Result};
use crate::space_model::{
    apply_word, canonicalize, common_partition, eval, is_empty_auto, is_subset, same_set,
    ClopenExpr,
};

const MAX_ROUNDS: usize = 12;
const MAX_CELLS: usize = 4096;

/// `u` and `v` are equal in the type semigroup, witnessed by `map : u → v`.
#[derive(Clone, Debug)]
pub struct Equality {
    pub u: ClopenExpr,
    pub v: ClopenExpr,
    pub map: PiecewiseMap,
}

#[derive(Clone, Debug)]
pub struct LadderStep {
    pub system: UnitSystem,
    /// Old atom containing each new atom.
    pub parent: Vec<usize>,
    /// `cells[a][j]` is the index of the `j`-th new atom inside old atom `a`.
    pub cells: Vec<Vec<usize>>,
    pub rounds: usize,
}

/// Atoms of the algebra generated by `sets` inside `region`, in a fixed order.
fn split(
    action: &crate::space_model::ActionSpec,
    region: &ClopenExpr,
    sets: &[ClopenExpr],
) -> Result<Vec<ClopenExpr>> {
    let mut all: Vec<&ClopenExpr> = vec![region];
    all.extend(sets.iter());
    let p = common_partition(action, &all, None)?;
    let inside = eval(&p, region)?;
    let sigs: Vec<Vec<bool>> = sets.iter().map(|s| eval(&p, s)).collect::<Result<_>>()?;
    let mut groups: Vec<(Vec<bool>, Vec<bool>)> = Vec::new();
    for i in (0..p.len()).filter(|&i| inside[i]) {
        let key: Vec<bool> = sigs.iter().map(|s| s[i]).collect();
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, m)) => m[i] = true,
            None => {
                let mut m = vec![false; p.len()];
                m[i] = true;
                groups.push((key, m));
            }
        }
    }
    groups
        .into_iter()
        .map(|(_, m)| canonicalize(action, &p.set_expr(&m)))
        .collect()
}

/// Refines every orbit of `old` through its representative so transports carry cells to cells.
fn refine(old: &UnitSystem, cuts: &[ClopenExpr]) -> Result<Vec<Vec<ClopenExpr>>> {
    let act = &old.action;
    let mut out = vec![Vec::new(); old.len()];
    for o in &old.orbits {
        let r = o[0];
        let mut pulled = Vec::new();
        for &a in o {
            let back = old.transport(a, r)?;
            for s in cuts {
                let piece = s.clone().and(old.atoms[a].clone());
                if !is_empty_auto(act, &piece)? {
                    pulled.push(back.apply(act, &piece)?);
                }
            }
        }
        let rep_cells = split(act, &old.atoms[r], &pulled)?;
        for &a in o {
            let t = old.transport(r, a)?;
            out[a] = rep_cells
                .iter()
                .map(|c| t.apply(act, c))
                .collect::<Result<_>>()?;
        }
    }
    Ok(out)
}

/// Refines `current` so each equality map moves atoms onto atoms, then merges orbits along them.
pub fn ample_ladder_step(current: &UnitSystem, equalities: &[Equality]) -> Result<LadderStep> {
    let act = &current.action;
    if current.transports.is_none() {
        return Err(Error::Input(
            "the ladder needs a realized unit system".into(),
        ));
    }
    for (i, e) in equalities.iter().enumerate() {
        if !e.map.verify(act, &e.u, &e.v)? {
            return Err(Error::Input(format!(
                "equality {i}: the map does not carry u onto v"
            )));
        }
    }
    let mut cuts: Vec<ClopenExpr> = Vec::new();
    for e in equalities {
        cuts.push(e.u.clone());
        cuts.push(e.v.clone());
        for (p, w) in &e.map.pieces {
            cuts.push(p.clone());
            cuts.push(apply_word(act, w, p)?);
        }
    }
    let mut rounds = 0;
    let grouped = loop {
        rounds += 1;
        if rounds > MAX_ROUNDS {
            return Err(Error::Budget(format!(
                "ladder refinement did not stabilize in {MAX_ROUNDS} rounds"
            )));
        }
        let grouped = refine(current, &cuts)?;
        let flat: Vec<&ClopenExpr> = grouped.iter().flatten().collect();
        if flat.len() > MAX_CELLS {
            return Err(Error::Budget(format!(
                "ladder refinement exceeded {MAX_CELLS} atoms"
            )));
        }
        let mut extra = Vec::new();
        for e in equalities {
            for (p, w) in &e.map.pieces {
                let inv = act.schema().inverse(w);
                for c in &flat {
                    let x = (*c).clone().and(p.clone());
                    if is_empty_auto(act, &x)? {
                        continue;
                    }
                    let y = apply_word(act, w, &x)?;
                    if !flat.iter().any(|d| same_set(act, d, &y).unwrap_or(false)) {
                        extra.push(canonicalize(act, &y)?);
                    }
                    let back = apply_word(act, &inv, &(*c).clone().and(apply_word(act, w, p)?))?;
                    if !is_empty_auto(act, &back)?
                        && !flat
                            .iter()
                            .any(|d| same_set(act, d, &back).unwrap_or(false))
                    {
                        extra.push(canonicalize(act, &back)?);
                    }
                }
            }
        }
        if extra.is_empty() {
            break grouped;
        }
        cuts.extend(extra);
    };

    let mut atoms = Vec::new();
    let mut parent = Vec::new();
    let mut cells = Vec::new();
    for (a, cs) in grouped.iter().enumerate() {
        cells.push((atoms.len()..atoms.len() + cs.len()).collect::<Vec<_>>());
        for c in cs {
            atoms.push(c.clone());
            parent.push(a);
        }
    }
    let n = atoms.len();

    // Edges carry a map from one new atom onto another.
    let mut edges: Vec<(usize, usize, PiecewiseMap)> = Vec::new();
    for o in &current.orbits {
        let r = o[0];
        for &a in &o[1..] {
            let t = current.transport(r, a)?;
            for j in 0..cells[r].len() {
                let (x, y) = (cells[r][j], cells[a][j]);
                edges.push((x, y, t.restrict(act, &atoms[x])?));
            }
        }
    }
    for e in equalities {
        for (p, w) in &e.map.pieces {
            for x in 0..n {
                if is_subset(act, &atoms[x], p)? {
                    let img = apply_word(act, w, &atoms[x])?;
                    let y = (0..n)
                        .find(|&y| same_set(act, &atoms[y], &img).unwrap_or(false))
                        .ok_or_else(|| {
                            Error::Invariant(format!("image of atom {x} is not an atom"))
                        })?;
                    edges.push((x, y, PiecewiseMap::single(&atoms[x], w.clone())));
                }
            }
        }
    }
    let link: Vec<Vec<usize>> = {
        let mut perms = Vec::new();
        for (x, y, _) in &edges {
            let mut p: Vec<usize> = (0..n).collect();
            p.swap(*x, *y);
            perms.push(p);
        }
        perms
    };
    let orbits = orbits_of(n, &link);

    let mut trans: Vec<Option<PiecewiseMap>> = vec![None; n];
    for o in &orbits {
        trans[o[0]] = Some(PiecewiseMap::identity(act, &atoms[o[0]]));
        let mut queue = VecDeque::from([o[0]]);
        while let Some(x) = queue.pop_front() {
            let tx = trans[x].clone().unwrap();
            for (a, b, m) in &edges {
                let (to, step) = if *a == x {
                    (*b, m.clone())
                } else if *b == x {
                    (*a, m.inverse(act)?)
                } else {
                    continue;
                };
                if trans[to].is_none() {
                    trans[to] = Some(tx.then(act, &step)?);
                    queue.push_back(to);
                }
            }
        }
    }
    let mut step = LadderStep {
        system: UnitSystem {
            action: act.clone(),
            atoms,
            orbits,
            generators: Vec::new(),
            transports: Some(
                trans
                    .into_iter()
                    .map(|t| t.expect("orbit reached"))
                    .collect(),
            ),
        },
        parent,
        cells,
        rounds,
    };
    let mut gens = Vec::new();
    for g in &current.generators {
        gens.push(step.extend(current, g)?);
    }
    for e in equalities {
        gens.push(step.mapping_element(&e.u, &e.v)?.0);
    }
    step.system.generators = gens;
    step.system.check_axioms()?;
    Ok(step)
}

impl LadderStep {
    /// The new permutation induced by an old one: `(a, j) ↦ (g(a), j)`, checked against its realization.
    pub fn extend(&self, old: &UnitSystem, perm: &[usize]) -> Result<Vec<usize>> {
        let act = &old.action;
        let n = self.system.len();
        let mut out = vec![0; n];
        for (a, cs) in self.cells.iter().enumerate() {
            for (j, &x) in cs.iter().enumerate() {
                out[x] = self.cells[perm[a]][j];
            }
        }
        let real = old.realize(perm)?;
        for x in 0..n {
            if !same_set(
                act,
                &real.apply(act, &self.system.atoms[x])?,
                &self.system.atoms[out[x]],
            )? {
                return Err(Error::Invariant(format!(
                    "extended permutation disagrees with its realization at atom {x}"
                )));
            }
        }
        Ok(out)
    }

    /// A group element carrying `u` onto `v`, both unions of atoms with equal orbit counts.
    pub fn mapping_element(
        &self,
        u: &ClopenExpr,
        v: &ClopenExpr,
    ) -> Result<(Vec<usize>, PiecewiseMap)> {
        let sys = &self.system;
        let act = &sys.action;
        let n = sys.len();
        let inside = |s: &ClopenExpr| -> Result<Vec<bool>> {
            (0..n).map(|x| is_subset(act, &sys.atoms[x], s)).collect()
        };
        let (iu, iv) = (inside(u)?, inside(v)?);
        for (s, mask) in [(u, &iu), (v, &iv)] {
            let covered =
                ClopenExpr::union_all((0..n).filter(|&x| mask[x]).map(|x| sys.atoms[x].clone()));
            if !same_set(act, &covered, s)? {
                return Err(Error::Input(format!("{s} is not a union of atoms")));
            }
        }
        let mut perm = vec![usize::MAX; n];
        for o in &sys.orbits {
            for want in [true, false] {
                let from: Vec<usize> = o.iter().copied().filter(|&x| iu[x] == want).collect();
                let to: Vec<usize> = o.iter().copied().filter(|&x| iv[x] == want).collect();
                if from.len() != to.len() {
                    return Err(Error::Input(
                        "u and v meet some orbit in different numbers of atoms".into(),
                    ));
                }
                for (x, y) in from.into_iter().zip(to) {
                    perm[x] = y;
                }
            }
        }
        let real = sys.realize(&perm)?;
        if !same_set(act, &real.apply(act, u)?, v)? {
            return Err(Error::Invariant(
                "mapping element does not carry u onto v".into(),
            ));
        }
        Ok((perm, real))
    }

    pub fn to_json(&self) -> Value {
        json!({"system": self.system.to_json(), "parent": self.parent, "rounds": self.rounds})
    }
}

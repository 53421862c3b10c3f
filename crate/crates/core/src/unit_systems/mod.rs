//! Finite unit systems: a finite clopen algebra with the group of all
//! orbit-preserving atom permutations, realized piecewise by group words.

mod krieger;
mod ladder;

use num::BigUint;
use serde_json::{json, Value};

use crate::equidecomp::{Equidecomposer, Mode, SearchBudget, SearchOutcome};
use crate::error::{Error, Result};
use crate::space_model::{
    apply_word, canonicalize, disjoint, is_empty_auto, same_set, ActionSpec, ClopenExpr, GroupWord,
};

pub use krieger::{
    conjugate_construct, krieger_extend, verify_krieger, ConjugationReport, ConjugationStep,
    KriegerStep,
};
pub use ladder::{ample_ladder_step, Equality, LadderStep};

/// A partial homeomorphism: each piece moves by its word.
#[derive(Clone, Debug, PartialEq)]
pub struct PiecewiseMap {
    pub pieces: Vec<(ClopenExpr, GroupWord)>,
}

impl PiecewiseMap {
    pub fn identity(action: &ActionSpec, domain: &ClopenExpr) -> Self {
        PiecewiseMap {
            pieces: vec![(domain.clone(), action.schema().identity())],
        }
    }

    pub fn single(domain: &ClopenExpr, w: GroupWord) -> Self {
        PiecewiseMap {
            pieces: vec![(domain.clone(), w)],
        }
    }

    pub fn domain(&self) -> ClopenExpr {
        ClopenExpr::union_all(self.pieces.iter().map(|(p, _)| p.clone()))
    }

    /// Image of `set ∩ domain`.
    pub fn apply(&self, action: &ActionSpec, set: &ClopenExpr) -> Result<ClopenExpr> {
        let parts = self
            .pieces
            .iter()
            .map(|(p, w)| apply_word(action, w, &p.clone().and(set.clone())))
            .collect::<Result<Vec<_>>>()?;
        canonicalize(action, &ClopenExpr::union_all(parts))
    }

    pub fn image(&self, action: &ActionSpec) -> Result<ClopenExpr> {
        self.apply(action, &ClopenExpr::Full)
    }

    pub fn restrict(&self, action: &ActionSpec, set: &ClopenExpr) -> Result<Self> {
        let mut pieces = Vec::new();
        for (p, w) in &self.pieces {
            let q = p.clone().and(set.clone());
            if !is_empty_auto(action, &q)? {
                pieces.push((canonicalize(action, &q)?, w.clone()));
            }
        }
        Ok(PiecewiseMap { pieces })
    }

    pub fn inverse(&self, action: &ActionSpec) -> Result<Self> {
        let s = action.schema();
        let pieces = self
            .pieces
            .iter()
            .map(|(p, w)| {
                Ok((
                    canonicalize(action, &apply_word(action, w, p)?)?,
                    s.inverse(w),
                ))
            })
            .collect::<Result<_>>()?;
        Ok(PiecewiseMap { pieces })
    }

    /// `second ∘ self`.
    pub fn then(&self, action: &ActionSpec, second: &PiecewiseMap) -> Result<Self> {
        let s = action.schema();
        let mut pieces = Vec::new();
        for (p1, w1) in &self.pieces {
            for (p2, w2) in &second.pieces {
                let back = apply_word(action, &s.inverse(w1), p2)?;
                let q = p1.clone().and(back);
                if !is_empty_auto(action, &q)? {
                    pieces.push((canonicalize(action, &q)?, s.canonical(&s.compose(w2, w1))));
                }
            }
        }
        Ok(PiecewiseMap { pieces })
    }

    /// Pieces are disjoint and cover `domain`; images are disjoint and cover `image`.
    pub fn verify(
        &self,
        action: &ActionSpec,
        domain: &ClopenExpr,
        image: &ClopenExpr,
    ) -> Result<bool> {
        let images = self
            .pieces
            .iter()
            .map(|(p, w)| apply_word(action, w, p))
            .collect::<Result<Vec<_>>>()?;
        for i in 0..self.pieces.len() {
            for j in i + 1..self.pieces.len() {
                if !disjoint(action, &self.pieces[i].0, &self.pieces[j].0)?
                    || !disjoint(action, &images[i], &images[j])?
                {
                    return Ok(false);
                }
            }
        }
        Ok(same_set(action, &self.domain(), domain)?
            && same_set(action, &ClopenExpr::union_all(images), image)?)
    }

    pub fn max_word_len(&self, action: &ActionSpec) -> usize {
        let s = action.schema();
        self.pieces
            .iter()
            .map(|(_, w)| s.length(w))
            .max()
            .unwrap_or(0)
    }

    pub fn to_json(&self, action: &ActionSpec) -> Value {
        let s = action.schema();
        Value::Array(
            self.pieces
                .iter()
                .map(|(p, w)| json!({"piece": p.to_string(), "word": s.format(w)}))
                .collect(),
        )
    }
}

#[derive(Clone, Debug)]
pub struct UnitSystem {
    pub action: ActionSpec,
    pub atoms: Vec<ClopenExpr>,
    /// Sorted atom orbits ordered by least element; the least element represents its orbit.
    pub orbits: Vec<Vec<usize>>,
    /// Permutations the group was generated from.
    pub generators: Vec<Vec<usize>>,
    /// For each atom, a map from its orbit representative onto it.
    pub transports: Option<Vec<PiecewiseMap>>,
}

fn orbits_of(n: usize, perms: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let mut comp: Vec<usize> = (0..n).collect();
    fn root(c: &mut [usize], mut x: usize) -> usize {
        while c[x] != x {
            c[x] = c[c[x]];
            x = c[x];
        }
        x
    }
    for p in perms {
        for (a, &b) in p.iter().enumerate() {
            let (ra, rb) = (root(&mut comp, a), root(&mut comp, b));
            comp[ra.max(rb)] = ra.min(rb);
        }
    }
    let mut out: Vec<Vec<usize>> = Vec::new();
    for a in 0..n {
        let r = root(&mut comp, a);
        match out.iter_mut().find(|o| o[0] == r) {
            Some(o) => o.push(a),
            None => out.push(vec![a]),
        }
    }
    out
}

impl UnitSystem {
    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// The one-atom system on the whole space.
    pub fn trivial(action: &ActionSpec) -> Self {
        UnitSystem {
            action: action.clone(),
            atoms: vec![ClopenExpr::Full],
            orbits: vec![vec![0]],
            generators: Vec::new(),
            transports: Some(vec![PiecewiseMap::identity(action, &ClopenExpr::Full)]),
        }
    }

    pub fn orbit_of(&self, a: usize) -> usize {
        self.orbits
            .iter()
            .position(|o| o.contains(&a))
            .expect("atom in some orbit")
    }

    pub fn rep(&self, a: usize) -> usize {
        self.orbits[self.orbit_of(a)][0]
    }

    /// `|G| = ∏ |orbit|!`.
    pub fn order(&self) -> BigUint {
        self.orbits
            .iter()
            .map(|o| (1..=o.len() as u64).map(BigUint::from).product::<BigUint>())
            .product()
    }

    pub fn contains(&self, perm: &[usize]) -> bool {
        perm.len() == self.len()
            && {
                let mut seen = vec![false; perm.len()];
                perm.iter()
                    .all(|&b| b < seen.len() && !std::mem::replace(&mut seen[b], true))
            }
            && perm
                .iter()
                .enumerate()
                .all(|(a, &b)| self.orbit_of(a) == self.orbit_of(b))
    }

    /// Atom containing `set`, if any.
    pub fn atom_containing(&self, set: &ClopenExpr) -> Result<Option<usize>> {
        for (i, a) in self.atoms.iter().enumerate() {
            if crate::space_model::is_subset(&self.action, set, a)? {
                return Ok(Some(i));
            }
        }
        Ok(None)
    }

    /// Map from atom `a` onto atom `b` (same orbit), `t_b ∘ t_a⁻¹`.
    pub fn transport(&self, a: usize, b: usize) -> Result<PiecewiseMap> {
        let ts = self
            .transports
            .as_ref()
            .ok_or_else(|| Error::Input("unit system has no realization".into()))?;
        if self.orbit_of(a) != self.orbit_of(b) {
            return Err(Error::Input(format!(
                "atoms {a} and {b} lie in different orbits"
            )));
        }
        ts[a].inverse(&self.action)?.then(&self.action, &ts[b])
    }

    /// A full-group element inducing `perm`, or an error naming the first bad atom.
    pub fn realize(&self, perm: &[usize]) -> Result<PiecewiseMap> {
        if !self.contains(perm) {
            return Err(Error::Input(
                "permutation does not preserve the orbits".into(),
            ));
        }
        let mut pieces = Vec::new();
        for (a, &b) in perm.iter().enumerate() {
            pieces.extend(self.transport(a, b)?.pieces);
        }
        Ok(PiecewiseMap { pieces })
    }

    /// The unit-system axioms on the finite algebra, naming the offending atoms.
    pub fn check_axioms(&self) -> Result<()> {
        let act = &self.action;
        for (i, a) in self.atoms.iter().enumerate() {
            if is_empty_auto(act, a)? {
                return Err(Error::Invariant(format!("atom {i} is empty")));
            }
            for (j, b) in self.atoms.iter().enumerate().skip(i + 1) {
                if !disjoint(act, a, b)? {
                    return Err(Error::Invariant(format!("atoms {i} and {j} overlap")));
                }
            }
        }
        if !same_set(
            act,
            &ClopenExpr::union_all(self.atoms.iter().cloned()),
            &ClopenExpr::Full,
        )? {
            return Err(Error::Invariant("atoms do not cover the space".into()));
        }
        let mut seen = vec![false; self.len()];
        for o in &self.orbits {
            if o.is_empty() || o.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Invariant(
                    "orbits must be sorted and nonempty".into(),
                ));
            }
            for &a in o {
                if a >= seen.len() || std::mem::replace(&mut seen[a], true) {
                    return Err(Error::Invariant(format!("atom {a} appears in two orbits")));
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::Invariant("orbits do not cover the atoms".into()));
        }
        for g in &self.generators {
            if !self.contains(g) {
                return Err(Error::Invariant(format!(
                    "generator {g:?} leaves the orbits"
                )));
            }
        }
        if let Some(ts) = &self.transports {
            for o in &self.orbits {
                for &a in o {
                    if !ts[a].verify(act, &self.atoms[o[0]], &self.atoms[a])? {
                        return Err(Error::Invariant(format!(
                            "transport from atom {} onto atom {a} is not a bijection",
                            o[0]
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Value {
        let s = self.action.schema();
        let mut v = json!({
            "atoms": self.atoms.iter().map(|a| a.to_string()).collect::<Vec<_>>(),
            "orbits": self.orbits,
            "generators": self.generators,
            "order": self.order().to_string(),
        });
        if let Some(ts) = &self.transports {
            v["realization"] = Value::Array(ts.iter().map(|t| t.to_json(&self.action)).collect());
            v["max_word_len"] = json!(ts
                .iter()
                .map(|t| t.max_word_len(&self.action))
                .max()
                .unwrap_or(0));
        }
        let _ = s;
        v
    }
}

/// Closes `perms` to the group of orbit-preserving permutations and checks the axioms.
/// `words[i]`, when given, must induce `perms[i]` on the atoms.
pub fn build_unit_system(
    action: &ActionSpec,
    atoms: Vec<ClopenExpr>,
    perms: &[Vec<usize>],
    words: Option<&[GroupWord]>,
) -> Result<UnitSystem> {
    let n = atoms.len();
    for p in perms {
        let mut seen = vec![false; n];
        if p.len() != n
            || p.iter()
                .any(|&b| b >= n || std::mem::replace(&mut seen[b], true))
        {
            return Err(Error::Input(format!(
                "{p:?} is not a permutation of {n} atoms"
            )));
        }
    }
    let atoms = atoms
        .iter()
        .map(|a| canonicalize(action, a))
        .collect::<Result<Vec<_>>>()?;
    let orbits = orbits_of(n, perms);
    let transports = match words {
        None => None,
        Some(ws) => {
            if ws.len() != perms.len() {
                return Err(Error::Input("one word per permutation".into()));
            }
            for (p, w) in perms.iter().zip(ws) {
                for (a, &b) in p.iter().enumerate() {
                    if !same_set(action, &apply_word(action, w, &atoms[a])?, &atoms[b])? {
                        return Err(Error::Invariant(format!(
                            "word {} does not carry atom {a} onto atom {b}",
                            action.schema().format(w)
                        )));
                    }
                }
            }
            Some(word_transports(action, &atoms, &orbits, perms, ws))
        }
    };
    let sys = UnitSystem {
        action: action.clone(),
        atoms,
        orbits,
        generators: perms.to_vec(),
        transports,
    };
    sys.check_axioms()?;
    Ok(sys)
}

/// Breadth-first search from each representative along generator words.
fn word_transports(
    action: &ActionSpec,
    atoms: &[ClopenExpr],
    orbits: &[Vec<usize>],
    perms: &[Vec<usize>],
    words: &[GroupWord],
) -> Vec<PiecewiseMap> {
    let s = action.schema();
    let mut word: Vec<Option<GroupWord>> = vec![None; atoms.len()];
    for o in orbits {
        word[o[0]] = Some(s.identity());
        let mut queue = std::collections::VecDeque::from([o[0]]);
        while let Some(a) = queue.pop_front() {
            let wa = word[a].clone().unwrap();
            for (p, w) in perms.iter().zip(words) {
                let b = p[a];
                if word[b].is_none() {
                    word[b] = Some(s.canonical(&s.compose(w, &wa)));
                    queue.push_back(b);
                }
            }
        }
    }
    orbits
        .iter()
        .flat_map(|o| o.iter().map(move |&a| (a, o[0])))
        .fold(vec![None; atoms.len()], |mut acc, (a, r)| {
            acc[a] = Some(PiecewiseMap::single(&atoms[r], word[a].clone().unwrap()));
            acc
        })
        .into_iter()
        .map(|m| m.expect("every atom has an orbit"))
        .collect()
}

/// Answers "is there a full-group element carrying `a` onto `b`" with verified maps.
pub struct CompatibilityOracle {
    search: Equidecomposer,
    pub budget: SearchBudget,
}

impl CompatibilityOracle {
    pub fn new(action: &ActionSpec, budget: &SearchBudget) -> Result<Self> {
        Ok(CompatibilityOracle {
            search: Equidecomposer::new(action, budget)?,
            budget: budget.clone(),
        })
    }

    pub fn action(&self) -> &ActionSpec {
        self.search.action()
    }

    /// A verified piecewise map from `a` onto `b`, or `None` within the budget.
    pub fn find(&self, a: &ClopenExpr, b: &ClopenExpr) -> Result<Option<PiecewiseMap>> {
        let act = self.action();
        if same_set(act, a, b)? {
            return Ok(Some(PiecewiseMap::identity(act, a)));
        }
        match self.search.clopen(a, b, Mode::Equi)? {
            SearchOutcome::Found(w) => {
                let m = PiecewiseMap {
                    pieces: w.pieces.into_iter().map(|p| (p.clopen, p.word)).collect(),
                };
                if !m.verify(act, a, b)? {
                    return Err(Error::Invariant("oracle map failed verification".into()));
                }
                Ok(Some(m))
            }
            SearchOutcome::Exhausted(_) => Ok(None),
        }
    }

    /// A global element: maps for `a → b` and for the complements.
    pub fn find_global(&self, a: &ClopenExpr, b: &ClopenExpr) -> Result<Option<PiecewiseMap>> {
        let (Some(m), Some(c)) = (
            self.find(a, b)?,
            self.find(&a.clone().not(), &b.clone().not())?,
        ) else {
            return Ok(None);
        };
        Ok(Some(PiecewiseMap {
            pieces: m.pieces.into_iter().chain(c.pieces).collect(),
        }))
    }
}

#[cfg(test)]
mod tests;

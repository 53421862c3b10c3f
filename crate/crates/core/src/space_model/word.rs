use std::collections::HashSet;
use std::fmt;

use crate::error::{Error, Result};

/// The acting group of an action spec.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GroupSchema {
    /// Free abelian group of the given rank, generated by unit vectors.
    Abelian { rank: usize },
    /// Finite group given by its multiplication table; every element is a generator.
    Finite {
        table: Vec<Vec<usize>>,
        identity: usize,
        inverse: Vec<usize>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GroupKind {
    Abelian(usize),
    Finite(usize),
}

/// A word in the generators. Letters act right to left: `w = l1 l2 ... ln` acts as
/// `l1 ∘ l2 ∘ ... ∘ ln`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GroupWord {
    pub kind: GroupKind,
    pub letters: Vec<(usize, i8)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NormalForm {
    Abelian(Vec<i64>),
    Finite(usize),
}

impl GroupSchema {
    pub fn finite(table: Vec<Vec<usize>>) -> Result<Self> {
        let n = table.len();
        if n == 0 {
            return Err(Error::Spec("empty group table".into()));
        }
        if table
            .iter()
            .any(|row| row.len() != n || row.iter().any(|&x| x >= n))
        {
            return Err(Error::Spec(
                "group table must be square with entries below its order".into(),
            ));
        }
        let identity = (0..n)
            .find(|&e| (0..n).all(|g| table[e][g] == g && table[g][e] == g))
            .ok_or_else(|| Error::Spec("group table has no identity".into()))?;
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    if table[table[a][b]][c] != table[a][table[b][c]] {
                        return Err(Error::Spec(format!(
                            "group table not associative at ({a},{b},{c})"
                        )));
                    }
                }
            }
        }
        let mut inverse = vec![usize::MAX; n];
        for g in 0..n {
            let inv = (0..n)
                .find(|&h| table[g][h] == identity)
                .ok_or_else(|| Error::Spec(format!("element {g} has no inverse")))?;
            inverse[g] = inv;
        }
        Ok(GroupSchema::Finite {
            table,
            identity,
            inverse,
        })
    }

    pub fn kind(&self) -> GroupKind {
        match self {
            GroupSchema::Abelian { rank } => GroupKind::Abelian(*rank),
            GroupSchema::Finite { table, .. } => GroupKind::Finite(table.len()),
        }
    }

    pub fn generator_count(&self) -> usize {
        match self {
            GroupSchema::Abelian { rank } => *rank,
            GroupSchema::Finite { table, .. } => table.len(),
        }
    }

    pub fn identity(&self) -> GroupWord {
        GroupWord {
            kind: self.kind(),
            letters: Vec::new(),
        }
    }

    /// Generators used for coinvariants and polytope constraints.
    pub fn generators(&self) -> Vec<GroupWord> {
        match self {
            GroupSchema::Abelian { rank } => (0..*rank)
                .map(|i| GroupWord {
                    kind: self.kind(),
                    letters: vec![(i, 1)],
                })
                .collect(),
            GroupSchema::Finite {
                table, identity, ..
            } => (0..table.len())
                .filter(|g| g != identity)
                .map(|g| GroupWord {
                    kind: self.kind(),
                    letters: vec![(g, 1)],
                })
                .collect(),
        }
    }

    pub fn check(&self, w: &GroupWord) -> Result<()> {
        if w.kind != self.kind() {
            return Err(Error::Schema(format!(
                "word of kind {:?} used with group {:?}",
                w.kind,
                self.kind()
            )));
        }
        let n = self.generator_count();
        if let Some(&(g, e)) = w
            .letters
            .iter()
            .find(|&&(g, e)| g >= n || (e != 1 && e != -1))
        {
            return Err(Error::Schema(format!("bad letter ({g},{e})")));
        }
        Ok(())
    }

    pub fn normal_form(&self, w: &GroupWord) -> NormalForm {
        match self {
            GroupSchema::Abelian { rank } => {
                let mut v = vec![0i64; *rank];
                for &(g, e) in &w.letters {
                    v[g] += e as i64;
                }
                NormalForm::Abelian(v)
            }
            GroupSchema::Finite {
                table,
                identity,
                inverse,
            } => {
                let mut acc = *identity;
                for &(g, e) in &w.letters {
                    let x = if e > 0 { g } else { inverse[g] };
                    acc = table[acc][x];
                }
                NormalForm::Finite(acc)
            }
        }
    }

    pub fn from_normal(&self, nf: &NormalForm) -> GroupWord {
        let letters = match nf {
            NormalForm::Abelian(v) => {
                let mut l = Vec::new();
                for (g, &x) in v.iter().enumerate() {
                    let e = if x >= 0 { 1 } else { -1 };
                    l.extend(std::iter::repeat_n((g, e), x.unsigned_abs() as usize));
                }
                l
            }
            NormalForm::Finite(x) => match self {
                GroupSchema::Finite { identity, .. } if x == identity => Vec::new(),
                _ => vec![(*x, 1)],
            },
        };
        GroupWord {
            kind: self.kind(),
            letters,
        }
    }

    pub fn canonical(&self, w: &GroupWord) -> GroupWord {
        self.from_normal(&self.normal_form(w))
    }

    /// `w·v`, acting as `w ∘ v`.
    pub fn compose(&self, w: &GroupWord, v: &GroupWord) -> GroupWord {
        let mut letters = w.letters.clone();
        letters.extend_from_slice(&v.letters);
        GroupWord {
            kind: w.kind,
            letters,
        }
    }

    pub fn inverse(&self, w: &GroupWord) -> GroupWord {
        GroupWord {
            kind: w.kind,
            letters: w.letters.iter().rev().map(|&(g, e)| (g, -e)).collect(),
        }
    }

    pub fn is_identity(&self, w: &GroupWord) -> bool {
        match self.normal_form(w) {
            NormalForm::Abelian(v) => v.iter().all(|&x| x == 0),
            NormalForm::Finite(x) => {
                matches!(self, GroupSchema::Finite { identity, .. } if *identity == x)
            }
        }
    }

    fn letters(&self) -> Vec<(usize, i8)> {
        match self {
            GroupSchema::Abelian { rank } => (0..*rank).flat_map(|g| [(g, 1), (g, -1)]).collect(),
            GroupSchema::Finite {
                table, identity, ..
            } => (0..table.len())
                .filter(|g| g != identity)
                .map(|g| (g, 1))
                .collect(),
        }
    }

    /// Distinct group elements of word length at most `len`, length-lexicographic,
    /// identity first, each in canonical form.
    pub fn ball(&self, len: usize) -> Vec<GroupWord> {
        let id = self.identity();
        let mut seen: HashSet<NormalForm> = HashSet::new();
        seen.insert(self.normal_form(&id));
        let mut out = vec![id];
        let mut frontier = out.clone();
        let letters = self.letters();
        for _ in 0..len {
            let mut next = Vec::new();
            for w in &frontier {
                for &l in &letters {
                    let mut cand = w.clone();
                    cand.letters.push(l);
                    let nf = self.normal_form(&cand);
                    if seen.insert(nf.clone()) {
                        let c = self.from_normal(&nf);
                        next.push(c.clone());
                        out.push(c);
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            frontier = next;
        }
        out
    }

    pub fn format(&self, w: &GroupWord) -> String {
        match self.normal_form(w) {
            NormalForm::Abelian(v) => {
                if v.iter().all(|&x| x == 0) {
                    "id".to_string()
                } else if v.len() == 1 {
                    format!("{:+}", v[0])
                } else {
                    let parts: Vec<String> = v.iter().map(|x| format!("{x:+}")).collect();
                    format!("({})", parts.join(","))
                }
            }
            NormalForm::Finite(x) => match self {
                GroupSchema::Finite { identity, .. } if *identity == x => "id".to_string(),
                _ => format!("g{x}"),
            },
        }
    }

    /// Parses `id`, `+5`, `-3`, `(1,-2)`, `g4`, or a `*`-separated product of these.
    pub fn parse(&self, text: &str) -> Result<GroupWord> {
        let mut letters = Vec::new();
        for part in text.split('*') {
            let w = self.parse_one(part.trim())?;
            letters.extend(w.letters);
        }
        Ok(GroupWord {
            kind: self.kind(),
            letters,
        })
    }

    fn parse_one(&self, t: &str) -> Result<GroupWord> {
        let bad = || Error::Input(format!("cannot parse group word '{t}'"));
        if t == "id" || t == "e" || t.is_empty() {
            return Ok(self.identity());
        }
        match self {
            GroupSchema::Abelian { rank } => {
                let v: Vec<i64> =
                    if let Some(inner) = t.strip_prefix('(').and_then(|s| s.strip_suffix(')')) {
                        inner
                            .split(',')
                            .map(|x| x.trim().parse::<i64>().map_err(|_| bad()))
                            .collect::<Result<_>>()?
                    } else {
                        vec![t.parse::<i64>().map_err(|_| bad())?]
                    };
                if v.len() != *rank {
                    return Err(Error::Schema(format!(
                        "word '{t}' has {} coordinates, group rank is {rank}",
                        v.len()
                    )));
                }
                Ok(self.from_normal(&NormalForm::Abelian(v)))
            }
            GroupSchema::Finite { table, inverse, .. } => {
                let (body, inv) = match t.strip_suffix("^-1") {
                    Some(b) => (b, true),
                    None => (t, false),
                };
                let g: usize = body
                    .strip_prefix('g')
                    .ok_or_else(bad)?
                    .parse()
                    .map_err(|_| bad())?;
                if g >= table.len() {
                    return Err(Error::Schema(format!("group element {g} out of range")));
                }
                let g = if inv { inverse[g] } else { g };
                Ok(self.from_normal(&NormalForm::Finite(g)))
            }
        }
    }

    /// Word length of the canonical form.
    pub fn length(&self, w: &GroupWord) -> usize {
        self.canonical(w).letters.len()
    }
}

impl fmt::Display for GroupKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupKind::Abelian(d) => write!(f, "Z^{d}"),
            GroupKind::Finite(n) => write!(f, "finite({n})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z2() -> GroupSchema {
        GroupSchema::finite(vec![vec![0, 1], vec![1, 0]]).unwrap()
    }

    #[test]
    fn integer_ball_order() {
        let g = GroupSchema::Abelian { rank: 1 };
        let names: Vec<String> = g.ball(2).iter().map(|w| g.format(w)).collect();
        assert_eq!(names, ["id", "+1", "-1", "+2", "-2"]);
    }

    #[test]
    fn plane_ball_size() {
        let g = GroupSchema::Abelian { rank: 2 };
        assert_eq!(g.ball(3).len(), 2 * 9 + 2 * 3 + 1);
    }

    #[test]
    fn normal_form_cancels() {
        let g = GroupSchema::Abelian { rank: 2 };
        let w = GroupWord {
            kind: g.kind(),
            letters: vec![(0, 1), (1, -1), (0, -1)],
        };
        assert_eq!(g.normal_form(&w), NormalForm::Abelian(vec![0, -1]));
        assert_eq!(g.format(&w), "(+0,-1)");
    }

    #[test]
    fn finite_words() {
        let g = z2();
        let s = g.parse("g1*g1").unwrap();
        assert!(g.is_identity(&s));
        assert_eq!(g.ball(3).len(), 2);
        assert_eq!(g.format(&g.parse("g1").unwrap()), "g1");
    }

    #[test]
    fn parse_round_trip() {
        let g = GroupSchema::Abelian { rank: 1 };
        for t in ["id", "+5", "-3"] {
            assert_eq!(g.format(&g.parse(t).unwrap()), t);
        }
        assert!(g.parse("(1,2)").is_err());
    }

    #[test]
    fn rejects_non_group() {
        assert!(GroupSchema::finite(vec![vec![0, 0], vec![0, 0]]).is_err());
    }
}

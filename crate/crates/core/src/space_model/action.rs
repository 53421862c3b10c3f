use serde::{Deserialize, Serialize};

use super::word::GroupSchema;
use crate::error::{Error, Result};

/// Forbidden-window rule of a subshift.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ShiftRule {
    /// Each pattern is a list of rows (one row in dimension 1); row `r` sits at y-offset `r`.
    Forbidden(Vec<Vec<Vec<u32>>>),
    /// At most one coordinate carries symbol 1.
    AtMostOneOne,
}

/// Base sequence `prefix ++ cycle ++ cycle ++ ...` (digit at level 1 is least significant).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OdometerBase {
    pub prefix: Vec<u32>,
    pub cycle: Vec<u32>,
}

impl OdometerBase {
    pub fn constant(b: u32) -> Self {
        OdometerBase {
            prefix: Vec::new(),
            cycle: vec![b],
        }
    }

    /// Base at level `i ≥ 1`.
    pub fn at(&self, i: u32) -> u32 {
        let i = i as usize - 1;
        if i < self.prefix.len() {
            self.prefix[i]
        } else {
            self.cycle[(i - self.prefix.len()) % self.cycle.len()]
        }
    }

    /// `b_1 · … · b_n`, saturating.
    pub fn modulus(&self, n: u32) -> u64 {
        (1..=n).fold(1u64, |acc, i| acc.saturating_mul(self.at(i) as u64))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteAction {
    pub points: usize,
    pub group_table: Vec<Vec<usize>>,
    /// `action_table[g][p]` is `g·p`.
    pub action_table: Vec<Vec<usize>>,
}

impl FiniteAction {
    pub fn trivial(points: usize) -> Self {
        FiniteAction {
            points,
            group_table: vec![vec![0]],
            action_table: vec![(0..points).collect()],
        }
    }

    /// The group generated by one permutation, acting through it.
    pub fn cyclic(perm: &[usize]) -> Self {
        let mut powers: Vec<Vec<usize>> = vec![(0..perm.len()).collect()];
        loop {
            let next: Vec<usize> = powers.last().unwrap().iter().map(|&p| perm[p]).collect();
            if next == powers[0] {
                break;
            }
            powers.push(next);
        }
        let n = powers.len();
        let group_table = (0..n)
            .map(|a| (0..n).map(|b| (a + b) % n).collect())
            .collect();
        FiniteAction {
            points: perm.len(),
            group_table,
            action_table: powers,
        }
    }

    /// Orbits as sorted point lists, ordered by least element.
    pub fn orbits(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.points];
        let mut out = Vec::new();
        for p in 0..self.points {
            if seen[p] {
                continue;
            }
            let mut orb: Vec<usize> = self.action_table.iter().map(|row| row[p]).collect();
            orb.sort_unstable();
            orb.dedup();
            for &q in &orb {
                seen[q] = true;
            }
            out.push(orb);
        }
        out
    }

    fn validate(&self) -> Result<()> {
        let schema = GroupSchema::finite(self.group_table.clone())?;
        let n = self.group_table.len();
        if self.points == 0 {
            return Err(Error::Spec("finite action needs at least one point".into()));
        }
        if self.action_table.len() != n {
            return Err(Error::Spec(
                "action table needs one row per group element".into(),
            ));
        }
        for (g, row) in self.action_table.iter().enumerate() {
            if row.len() != self.points {
                return Err(Error::Spec(format!("action row {g} is not total")));
            }
            let mut hit = vec![false; self.points];
            for &q in row {
                if q >= self.points || hit[q] {
                    return Err(Error::Spec(format!(
                        "group element {g} does not act bijectively"
                    )));
                }
                hit[q] = true;
            }
        }
        if let GroupSchema::Finite {
            table, identity, ..
        } = &schema
        {
            if self.action_table[*identity]
                .iter()
                .enumerate()
                .any(|(p, &q)| p != q)
            {
                return Err(Error::Spec("identity does not act trivially".into()));
            }
            for a in 0..n {
                for b in 0..n {
                    for p in 0..self.points {
                        if self.action_table[table[a][b]][p]
                            != self.action_table[a][self.action_table[b][p]]
                        {
                            return Err(Error::Spec(format!(
                                "action is not a homomorphism at ({a},{b},{p})"
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ActionSpec {
    FullShift {
        alphabet: u32,
        dimension: u8,
    },
    Subshift {
        alphabet: u32,
        dimension: u8,
        rule: ShiftRule,
    },
    Odometer {
        base: OdometerBase,
    },
    Finite(FiniteAction),
    /// Diagonal action of a common group on the product space.
    Product(Vec<ActionSpec>),
}

/// Leaf classes used by evaluation and the partition engine.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LeafKind {
    Shift1,
    Shift2,
    Odometer,
    Finite,
}

impl ActionSpec {
    pub fn full_shift(k: u32, d: u8) -> Self {
        ActionSpec::FullShift {
            alphabet: k,
            dimension: d,
        }
    }

    pub fn odometer(b: u32) -> Self {
        ActionSpec::Odometer {
            base: OdometerBase::constant(b),
        }
    }

    pub fn at_most_one_one() -> Self {
        ActionSpec::Subshift {
            alphabet: 2,
            dimension: 1,
            rule: ShiftRule::AtMostOneOne,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ActionSpec::FullShift {
                alphabet,
                dimension,
            } => check_shift(*alphabet, *dimension),
            ActionSpec::Subshift {
                alphabet,
                dimension,
                rule,
            } => {
                check_shift(*alphabet, *dimension)?;
                match rule {
                    ShiftRule::AtMostOneOne if *alphabet != 2 => {
                        Err(Error::Spec("at-most-one-one needs alphabet 2".into()))
                    }
                    ShiftRule::AtMostOneOne => Ok(()),
                    ShiftRule::Forbidden(pats) => {
                        for p in pats {
                            let w = p.first().map_or(0, |r| r.len());
                            if w == 0 || p.iter().any(|r| r.len() != w) {
                                return Err(Error::Spec(
                                    "forbidden pattern rows must be nonempty and equal".into(),
                                ));
                            }
                            if *dimension == 1 && p.len() != 1 {
                                return Err(Error::Spec(
                                    "one-dimensional patterns have one row".into(),
                                ));
                            }
                            if p.iter().flatten().any(|&s| s >= *alphabet) {
                                return Err(Error::Spec(
                                    "forbidden pattern uses a symbol outside the alphabet".into(),
                                ));
                            }
                        }
                        Ok(())
                    }
                }
            }
            ActionSpec::Odometer { base } => {
                if base.cycle.is_empty() {
                    return Err(Error::Spec("odometer base needs a repeating part".into()));
                }
                if base
                    .prefix
                    .iter()
                    .chain(&base.cycle)
                    .any(|&b| !(2..=36).contains(&b))
                {
                    return Err(Error::Spec(
                        "odometer base entries must lie in 2..=36".into(),
                    ));
                }
                Ok(())
            }
            ActionSpec::Finite(fa) => fa.validate(),
            ActionSpec::Product(fs) => {
                if fs.len() < 2 {
                    return Err(Error::Spec("a product needs at least two factors".into()));
                }
                for f in fs {
                    if matches!(f, ActionSpec::Product(_)) {
                        return Err(Error::Spec("nested products are not supported".into()));
                    }
                    f.validate()?;
                }
                let s0 = fs[0].schema();
                if fs.iter().any(|f| f.schema() != s0) {
                    return Err(Error::Spec(
                        "product factors must share the acting group".into(),
                    ));
                }
                Ok(())
            }
        }
    }

    pub fn schema(&self) -> GroupSchema {
        match self {
            ActionSpec::FullShift { dimension, .. } | ActionSpec::Subshift { dimension, .. } => {
                GroupSchema::Abelian {
                    rank: *dimension as usize,
                }
            }
            ActionSpec::Odometer { .. } => GroupSchema::Abelian { rank: 1 },
            ActionSpec::Finite(fa) => GroupSchema::finite(fa.group_table.clone())
                .unwrap_or(GroupSchema::Abelian { rank: 0 }),
            ActionSpec::Product(fs) => fs[0].schema(),
        }
    }

    pub fn factors(&self) -> Vec<&ActionSpec> {
        match self {
            ActionSpec::Product(fs) => fs.iter().collect(),
            other => vec![other],
        }
    }

    pub fn leaf_kind(&self) -> LeafKind {
        match self {
            ActionSpec::FullShift { dimension: 1, .. }
            | ActionSpec::Subshift { dimension: 1, .. } => LeafKind::Shift1,
            ActionSpec::FullShift { .. } | ActionSpec::Subshift { .. } => LeafKind::Shift2,
            ActionSpec::Odometer { .. } => LeafKind::Odometer,
            ActionSpec::Finite(_) => LeafKind::Finite,
            ActionSpec::Product(_) => panic!("leaf_kind called on a product"),
        }
    }

    pub fn alphabet(&self) -> Option<u32> {
        match self {
            ActionSpec::FullShift { alphabet, .. } | ActionSpec::Subshift { alphabet, .. } => {
                Some(*alphabet)
            }
            _ => None,
        }
    }

    /// True when every factor acts by permuting the atoms of some finite partition.
    pub fn is_permutation_type(&self) -> bool {
        self.factors()
            .iter()
            .all(|f| matches!(f, ActionSpec::Odometer { .. } | ActionSpec::Finite(_)))
    }

    pub fn is_product(&self) -> bool {
        matches!(self, ActionSpec::Product(_))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let raw: RawSpec = toml::from_str(text).map_err(|e| Error::Spec(e.to_string()))?;
        let spec = raw.into_spec()?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(&RawSpec::from_spec(self)).expect("action specs always serialize")
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(RawSpec::from_spec(self)).expect("action specs always serialize")
    }
}

fn check_shift(k: u32, d: u8) -> Result<()> {
    if !(2..=36).contains(&k) {
        return Err(Error::Spec(format!("alphabet size {k} outside 2..=36")));
    }
    if d != 1 && d != 2 {
        return Err(Error::Spec(format!("dimension {d} unsupported")));
    }
    Ok(())
}

pub fn symbol_char(s: u32) -> char {
    std::char::from_digit(s, 36).expect("symbol below 36")
}

pub fn char_symbol(c: char) -> Option<u32> {
    if c.is_ascii_uppercase() {
        return None;
    }
    c.to_digit(36)
}

fn parse_symbols(s: &str) -> Result<Vec<u32>> {
    s.chars()
        .map(|c| char_symbol(c).ok_or_else(|| Error::Spec(format!("bad symbol '{c}'"))))
        .collect()
}

fn format_symbols(s: &[u32]) -> String {
    s.iter().map(|&x| symbol_char(x)).collect()
}

#[derive(Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    alphabet: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    dimension: Option<u8>,
    #[serde(skip_serializing_if = "Option::is_none")]
    forbidden: Option<RawForbidden>,
    #[serde(skip_serializing_if = "Option::is_none")]
    base: Option<RawBase>,
    #[serde(skip_serializing_if = "Option::is_none")]
    points: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    group_table: Option<Vec<Vec<usize>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    action_table: Option<Vec<Vec<usize>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    factors: Option<Vec<RawSpec>>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum RawForbidden {
    Builtin(String),
    Patterns(Vec<String>),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum RawBase {
    List(Vec<u32>),
    Periodic { prefix: Vec<u32>, cycle: Vec<u32> },
}

impl RawSpec {
    fn into_spec(self) -> Result<ActionSpec> {
        let need =
            |o: Option<u32>, f: &str| o.ok_or_else(|| Error::Spec(format!("missing field '{f}'")));
        match self.kind.as_str() {
            "full-shift" | "fullshift" | "shift" => Ok(ActionSpec::FullShift {
                alphabet: need(self.alphabet, "alphabet")?,
                dimension: self.dimension.unwrap_or(1),
            }),
            "subshift" => {
                let rule = match self.forbidden {
                    Some(RawForbidden::Builtin(name)) if name == "at-most-one-one" => {
                        ShiftRule::AtMostOneOne
                    }
                    Some(RawForbidden::Builtin(name)) => {
                        return Err(Error::Spec(format!("unknown builtin '{name}'")))
                    }
                    Some(RawForbidden::Patterns(ps)) => ShiftRule::Forbidden(
                        ps.iter()
                            .map(|p| p.split('/').map(parse_symbols).collect::<Result<Vec<_>>>())
                            .collect::<Result<_>>()?,
                    ),
                    None => return Err(Error::Spec("missing field 'forbidden'".into())),
                };
                Ok(ActionSpec::Subshift {
                    alphabet: need(self.alphabet, "alphabet")?,
                    dimension: self.dimension.unwrap_or(1),
                    rule,
                })
            }
            "odometer" => {
                let base = match self.base {
                    Some(RawBase::List(v)) if !v.is_empty() => OdometerBase {
                        prefix: v[..v.len() - 1].to_vec(),
                        cycle: vec![v[v.len() - 1]],
                    },
                    Some(RawBase::Periodic { prefix, cycle }) => OdometerBase { prefix, cycle },
                    _ => return Err(Error::Spec("missing or empty field 'base'".into())),
                };
                Ok(ActionSpec::Odometer { base })
            }
            "finite" => Ok(ActionSpec::Finite(FiniteAction {
                points: self
                    .points
                    .ok_or_else(|| Error::Spec("missing field 'points'".into()))?,
                group_table: self
                    .group_table
                    .ok_or_else(|| Error::Spec("missing field 'group_table'".into()))?,
                action_table: self
                    .action_table
                    .ok_or_else(|| Error::Spec("missing field 'action_table'".into()))?,
            })),
            "product" => Ok(ActionSpec::Product(
                self.factors
                    .ok_or_else(|| Error::Spec("missing field 'factors'".into()))?
                    .into_iter()
                    .map(RawSpec::into_spec)
                    .collect::<Result<_>>()?,
            )),
            other => Err(Error::Spec(format!("unknown kind '{other}'"))),
        }
    }

    fn from_spec(spec: &ActionSpec) -> RawSpec {
        match spec {
            ActionSpec::FullShift {
                alphabet,
                dimension,
            } => RawSpec {
                kind: "full-shift".into(),
                alphabet: Some(*alphabet),
                dimension: Some(*dimension),
                ..Default::default()
            },
            ActionSpec::Subshift {
                alphabet,
                dimension,
                rule,
            } => RawSpec {
                kind: "subshift".into(),
                alphabet: Some(*alphabet),
                dimension: Some(*dimension),
                forbidden: Some(match rule {
                    ShiftRule::AtMostOneOne => RawForbidden::Builtin("at-most-one-one".into()),
                    ShiftRule::Forbidden(ps) => RawForbidden::Patterns(
                        ps.iter()
                            .map(|p| {
                                p.iter()
                                    .map(|r| format_symbols(r))
                                    .collect::<Vec<_>>()
                                    .join("/")
                            })
                            .collect(),
                    ),
                }),
                ..Default::default()
            },
            ActionSpec::Odometer { base } => RawSpec {
                kind: "odometer".into(),
                base: Some(if base.cycle.len() == 1 {
                    let mut v = base.prefix.clone();
                    v.push(base.cycle[0]);
                    RawBase::List(v)
                } else {
                    RawBase::Periodic {
                        prefix: base.prefix.clone(),
                        cycle: base.cycle.clone(),
                    }
                }),
                ..Default::default()
            },
            ActionSpec::Finite(fa) => RawSpec {
                kind: "finite".into(),
                points: Some(fa.points),
                group_table: Some(fa.group_table.clone()),
                action_table: Some(fa.action_table.clone()),
                ..Default::default()
            },
            ActionSpec::Product(fs) => RawSpec {
                kind: "product".into(),
                factors: Some(fs.iter().map(RawSpec::from_spec).collect()),
                ..Default::default()
            },
        }
    }
}

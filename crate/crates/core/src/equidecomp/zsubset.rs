//! Subsets of ℤ under translations: windowed matching, Hall obstructions and
//! periodic witnesses.

use std::collections::HashMap;
use std::fmt;

use num::integer::lcm;
use num::rational::Ratio;
use serde::Serialize;

use super::matching::{alternating_reach, kuhn};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ZSubsetSpec {
    /// Union of residue classes `r mod m`.
    ProgressionUnion(Vec<(u64, i64)>),
    ComplementOf(Box<ZSubsetSpec>),
    /// Union over `k < terms` of `{2^(k+2) n + 2^k − 1}`; `None` takes every `k`.
    WeissSet {
        terms: Option<u32>,
    },
}

impl ZSubsetSpec {
    pub fn weiss() -> Self {
        ZSubsetSpec::WeissSet { terms: None }
    }

    pub fn complement(self) -> Self {
        ZSubsetSpec::ComplementOf(Box::new(self))
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ZSubsetSpec::ProgressionUnion(v) if v.iter().any(|&(m, _)| m == 0) => {
                Err(Error::Input("moduli must be at least 1".into()))
            }
            ZSubsetSpec::WeissSet { terms: Some(m) } if *m > 60 => {
                Err(Error::Input("at most 60 Weiss terms".into()))
            }
            ZSubsetSpec::ComplementOf(inner) => inner.validate(),
            _ => Ok(()),
        }
    }

    pub fn contains(&self, x: i64) -> bool {
        match self {
            ZSubsetSpec::ProgressionUnion(v) => {
                v.iter().any(|&(m, r)| (x - r).rem_euclid(m as i64) == 0)
            }
            ZSubsetSpec::ComplementOf(inner) => !inner.contains(x),
            ZSubsetSpec::WeissSet { terms } => {
                let k = (x as u64).trailing_ones();
                if k >= 63 {
                    return false;
                }
                let in_k = (x as u64 >> (k + 1)) & 1 == 0;
                in_k && terms.is_none_or(|m| k < m)
            }
        }
    }

    /// A period, when the set is periodic.
    pub fn period(&self) -> Option<u64> {
        match self {
            ZSubsetSpec::ProgressionUnion(v) => {
                Some(v.iter().fold(1u64, |acc, &(m, _)| lcm(acc, m)))
            }
            ZSubsetSpec::ComplementOf(inner) => inner.period(),
            ZSubsetSpec::WeissSet { terms: Some(m) } => Some(1u64 << (m + 1)),
            ZSubsetSpec::WeissSet { terms: None } => None,
        }
    }

    /// Membership of the whole class `r mod 2^j`, if it is decided.
    fn classify_dyadic(&self, r: u64, j: u32) -> Option<bool> {
        match self {
            ZSubsetSpec::ComplementOf(inner) => inner.classify_dyadic(r, j).map(|b| !b),
            ZSubsetSpec::WeissSet { terms } => {
                let k = r.trailing_ones();
                if let Some(m) = terms {
                    if k >= *m && k < j {
                        return Some(false);
                    }
                }
                if k + 1 >= j {
                    return None;
                }
                Some((r >> (k + 1)) & 1 == 0)
            }
            ZSubsetSpec::ProgressionUnion(_) => None,
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let t = text.trim();
        if let Some(rest) = t.strip_prefix("complement:") {
            return Ok(ZSubsetSpec::parse(rest)?.complement());
        }
        if t == "weiss" {
            return Ok(ZSubsetSpec::weiss());
        }
        if let Some(m) = t.strip_prefix("weiss:") {
            let m = m
                .parse()
                .map_err(|_| Error::Input(format!("bad Weiss truncation '{m}'")))?;
            return Ok(ZSubsetSpec::WeissSet { terms: Some(m) });
        }
        let body = t.strip_prefix("prog:").unwrap_or(t);
        let mut v = Vec::new();
        for part in body.split(',') {
            let (m, r) = part
                .split_once(':')
                .ok_or_else(|| Error::Input(format!("expected modulus:residue in '{part}'")))?;
            let m: u64 = m
                .trim()
                .parse()
                .map_err(|_| Error::Input(format!("bad modulus '{m}'")))?;
            let r: i64 = r
                .trim()
                .parse()
                .map_err(|_| Error::Input(format!("bad residue '{r}'")))?;
            v.push((m, r));
        }
        let spec = ZSubsetSpec::ProgressionUnion(v);
        spec.validate()?;
        Ok(spec)
    }
}

impl fmt::Display for ZSubsetSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ZSubsetSpec::ProgressionUnion(v) => {
                let parts: Vec<String> = v.iter().map(|(m, r)| format!("{m}:{r}")).collect();
                write!(f, "prog:{}", parts.join(","))
            }
            ZSubsetSpec::ComplementOf(inner) => write!(f, "complement:{inner}"),
            ZSubsetSpec::WeissSet { terms: None } => write!(f, "weiss"),
            ZSubsetSpec::WeissSet { terms: Some(m) } => write!(f, "weiss:{m}"),
        }
    }
}

pub type Q = Ratio<i64>;

/// Density interval from residue counting. Periodic sets get their exact density;
/// the full Weiss set is bracketed using residues modulo the largest power of two ≤ `w`.
pub fn density_bounds(a: &ZSubsetSpec, w: u64) -> Result<(Q, Q)> {
    if w < 1 {
        return Err(Error::Input("window must be at least 1".into()));
    }
    a.validate()?;
    if let Some(p) = a.period() {
        if p > 1 << 26 {
            return Err(Error::Input(format!("period {p} too large to count")));
        }
        let c = (0..p as i64).filter(|&x| a.contains(x)).count() as i64;
        let d = Q::new(c, p as i64);
        return Ok((d, d));
    }
    let j = 63 - w.leading_zeros();
    let p = 1u64 << j;
    let mut inside = 0i64;
    let mut mixed = 0i64;
    for r in 0..p {
        match a.classify_dyadic(r, j) {
            Some(true) => inside += 1,
            Some(false) => {}
            None => mixed += 1,
        }
    }
    Ok((Q::new(inside, p as i64), Q::new(inside + mixed, p as i64)))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct HallViolation {
    pub f: Vec<i64>,
    pub shifts: Vec<i64>,
    pub neighborhood: usize,
}

impl HallViolation {
    /// Recount `|(F+S) ∩ B|` from membership alone and check `F ⊆ A`.
    pub fn recheck(&self, a: &ZSubsetSpec, b: &ZSubsetSpec) -> bool {
        let mut nbhd: Vec<i64> = self
            .f
            .iter()
            .flat_map(|&x| self.shifts.iter().map(move |&s| x + s))
            .filter(|&y| b.contains(y))
            .collect();
        nbhd.sort_unstable();
        nbhd.dedup();
        self.f.iter().all(|&x| a.contains(x))
            && nbhd.len() == self.neighborhood
            && nbhd.len() < self.f.len()
    }
}

/// Periodic translation pattern: residues mod `period` of A moved by each shift.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ZWitness {
    pub period: u64,
    pub pieces: Vec<(i64, Vec<u64>)>,
}

impl ZWitness {
    pub fn verify(&self, a: &ZSubsetSpec, b: &ZSubsetSpec) -> bool {
        let p = self.period as i64;
        let mut covered = vec![false; self.period as usize];
        let mut hit = vec![false; self.period as usize];
        for (s, residues) in &self.pieces {
            for &r in residues {
                let r = r as i64;
                let img = (r + s).rem_euclid(p);
                if !a.contains(r) || !b.contains(r + s) || covered[r as usize] || hit[img as usize]
                {
                    return false;
                }
                covered[r as usize] = true;
                hit[img as usize] = true;
            }
        }
        (0..p).all(|r| covered[r as usize] == a.contains(r))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum ZOutcome {
    Witness(ZWitness),
    HallViolation(HallViolation),
    Unknown {
        window: u64,
        matched: usize,
        left: usize,
    },
}

/// Search `[-w, w]` for a translate-bounded injection of A into B, or a Hall obstruction.
pub fn zsubset_equidecompose(
    a: &ZSubsetSpec,
    b: &ZSubsetSpec,
    shifts: &[i64],
    w: u64,
) -> Result<ZOutcome> {
    a.validate()?;
    b.validate()?;
    if shifts.is_empty() {
        return Err(Error::Input("shift set is empty".into()));
    }
    let smax = shifts.iter().map(|s| s.unsigned_abs()).max().unwrap();
    if w < smax {
        return Err(Error::Input(format!(
            "window {w} is smaller than max |s| = {smax}"
        )));
    }
    let mut shifts: Vec<i64> = shifts.to_vec();
    shifts.sort_unstable();
    shifts.dedup();
    let w = w as i64;
    let reach = w + smax as i64;
    let left: Vec<i64> = (-w..=w).filter(|&x| a.contains(x)).collect();
    let right: Vec<i64> = (-reach..=reach).filter(|&y| b.contains(y)).collect();
    let rindex: HashMap<i64, usize> = right.iter().enumerate().map(|(i, &y)| (y, i)).collect();
    let adj: Vec<Vec<usize>> = left
        .iter()
        .map(|&x| {
            shifts
                .iter()
                .filter_map(|s| rindex.get(&(x + s)).copied())
                .collect()
        })
        .collect();
    let m = kuhn(right.len(), &adj);
    if let Some(root) = m.iter().position(Option::is_none) {
        let (fl, _) = alternating_reach(root, right.len(), &adj, &m);
        let f: Vec<i64> = fl.iter().map(|&i| left[i]).collect();
        let mut nbhd: Vec<i64> = f
            .iter()
            .flat_map(|&x| shifts.iter().map(move |&s| x + s))
            .filter(|&y| b.contains(y))
            .collect();
        nbhd.sort_unstable();
        nbhd.dedup();
        let v = HallViolation {
            f,
            shifts: shifts.clone(),
            neighborhood: nbhd.len(),
        };
        if !v.recheck(a, b) {
            return Err(Error::Invariant("Hall violation failed its recount".into()));
        }
        return Ok(ZOutcome::HallViolation(v));
    }
    if let (Some(pa), Some(pb)) = (a.period(), b.period()) {
        let p = lcm(pa, pb);
        if p <= 1 << 20 {
            if let Some(wit) = periodic_witness(a, b, &shifts, p) {
                return Ok(ZOutcome::Witness(wit));
            }
        }
    }
    Ok(ZOutcome::Unknown {
        window: w as u64,
        matched: left.len(),
        left: left.len(),
    })
}

fn periodic_witness(a: &ZSubsetSpec, b: &ZSubsetSpec, shifts: &[i64], p: u64) -> Option<ZWitness> {
    let pi = p as i64;
    let left: Vec<i64> = (0..pi).filter(|&r| a.contains(r)).collect();
    let adj: Vec<Vec<usize>> = left
        .iter()
        .map(|&r| {
            shifts
                .iter()
                .map(|s| (r + s).rem_euclid(pi))
                .filter(|&y| b.contains(y))
                .map(|y| y as usize)
                .collect()
        })
        .collect();
    let m = kuhn(p as usize, &adj);
    if m.iter().any(Option::is_none) {
        return None;
    }
    let mut pieces: Vec<(i64, Vec<u64>)> = shifts.iter().map(|&s| (s, Vec::new())).collect();
    for (i, &r) in left.iter().enumerate() {
        let y = m[i].unwrap() as i64;
        let s = shifts
            .iter()
            .position(|&s| (r + s).rem_euclid(pi) == y && b.contains(r + s))
            .unwrap();
        pieces[s].1.push(r as u64);
    }
    pieces.retain(|(_, v)| !v.is_empty());
    let wit = ZWitness { period: p, pieces };
    wit.verify(a, b).then_some(wit)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weiss_membership_matches_progressions() {
        let full = ZSubsetSpec::weiss();
        for x in -300i64..300 {
            let by_def =
                (0..20u32).any(|k| (x - ((1i64 << k) - 1)).rem_euclid(1i64 << (k + 2)) == 0);
            assert_eq!(full.contains(x), by_def, "x = {x}");
        }
        assert!(!full.contains(-1));
    }

    #[test]
    fn progression_density() {
        let evens = ZSubsetSpec::parse("2:0").unwrap();
        assert_eq!(
            density_bounds(&evens, 10).unwrap(),
            (Q::new(1, 2), Q::new(1, 2))
        );
        let c = ZSubsetSpec::parse("complement:4:0").unwrap();
        assert_eq!(density_bounds(&c, 10).unwrap().0, Q::new(3, 4));
    }

    #[test]
    fn full_weiss_bracket() {
        let (lo, hi) = density_bounds(&ZSubsetSpec::weiss(), 4096).unwrap();
        assert_eq!(
            (lo, hi),
            (
                Q::new(1, 2) - Q::new(1, 4096),
                Q::new(1, 2) + Q::new(1, 4096)
            )
        );
    }

    #[test]
    fn progression_witnesses() {
        let evens = ZSubsetSpec::parse("2:0").unwrap();
        let odds = ZSubsetSpec::parse("2:1").unwrap();
        match zsubset_equidecompose(&evens, &odds, &[1], 16).unwrap() {
            ZOutcome::Witness(w) => assert_eq!(w.pieces, vec![(1, vec![0])]),
            other => panic!("{other:?}"),
        }
        let fours = ZSubsetSpec::parse("4:0").unwrap();
        match zsubset_equidecompose(&fours, &evens, &[0], 16).unwrap() {
            ZOutcome::Witness(w) => assert_eq!(w.pieces, vec![(0, vec![0])]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn density_obstruction_is_a_hall_violation() {
        let evens = ZSubsetSpec::parse("2:0").unwrap();
        let fours = ZSubsetSpec::parse("4:0").unwrap();
        match zsubset_equidecompose(&evens, &fours, &[-1, 0, 1], 40).unwrap() {
            ZOutcome::HallViolation(v) => assert!(v.recheck(&evens, &fours)),
            other => panic!("{other:?}"),
        }
        assert!(zsubset_equidecompose(&evens, &fours, &[-5], 4).is_err());
    }
}

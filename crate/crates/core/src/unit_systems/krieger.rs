//! Krieger's extension step and the ladder-by-ladder conjugacy construction.

use serde_json::{json, Value};

use super::{CompatibilityOracle, PiecewiseMap, UnitSystem};
use crate::error::{Error, Result};
use crate::space_model::{is_subset, same_set};

#[derive(Clone, Debug)]
pub struct KriegerStep {
    /// The refined target system; atom `i` is the image of atom `i` of `A'`.
    pub c_prime: UnitSystem,
    pub psi: Vec<usize>,
    /// For each atom `B` of `A'`, a map from `B` onto `Ψ(B)`.
    pub certs: Vec<PiecewiseMap>,
}

fn unconfirmed(msg: String) -> Error {
    Error::Refusal(format!("hypotheses unconfirmed: {msg}"))
}

/// Given `Φ : (A, Δ) → (C, Λ)` and `A' ⊇ A`, builds `C' ⊇ C` and `Ψ : (A', Δ') → (C', Λ')` extending `Φ`.
pub fn krieger_extend(
    a: &UnitSystem,
    c: &UnitSystem,
    phi: &[usize],
    a_prime: &UnitSystem,
    oracle: &CompatibilityOracle,
) -> Result<KriegerStep> {
    let act = &a.action;
    let h = oracle.action();
    if act != h || &c.action != h || &a_prime.action != h {
        return Err(Error::Input(
            "the ladder, the target system and the oracle must share one action".into(),
        ));
    }
    if a.transports.is_none() || c.transports.is_none() {
        return Err(Error::Input("both A and C must be realized".into()));
    }
    if phi.len() != a.len() || c.len() != a.len() {
        return Err(unconfirmed("Φ is not a bijection of atoms".into()));
    }
    let mut seen = vec![false; c.len()];
    if phi
        .iter()
        .any(|&x| x >= seen.len() || std::mem::replace(&mut seen[x], true))
    {
        return Err(unconfirmed("Φ is not a bijection of atoms".into()));
    }
    for o in &a.orbits {
        let target = c.orbit_of(phi[o[0]]);
        if o.iter().any(|&x| c.orbit_of(phi[x]) != target) || c.orbits[target].len() != o.len() {
            return Err(unconfirmed(format!(
                "Φ does not carry the orbit of atom {} onto an orbit",
                o[0]
            )));
        }
    }

    // Parent of each A' atom, and Δ-classes of A' atoms.
    let n = a_prime.len();
    let mut parent = Vec::with_capacity(n);
    for (i, b) in a_prime.atoms.iter().enumerate() {
        parent
            .push(a.atom_containing(b)?.ok_or_else(|| {
                unconfirmed(format!("atom {i} of A' is not inside an atom of A"))
            })?);
    }
    let mut sigma = vec![usize::MAX; n];
    let mut reps: Vec<usize> = Vec::new();
    for e in 0..n {
        if sigma[e] != usize::MAX {
            continue;
        }
        let s = reps.len();
        reps.push(e);
        sigma[e] = s;
        for &other in &a.orbits[a.orbit_of(parent[e])] {
            if other == parent[e] {
                continue;
            }
            let img = a
                .transport(parent[e], other)?
                .apply(act, &a_prime.atoms[e])?;
            let f = (0..n)
                .find(|&f| {
                    parent[f] == other && same_set(act, &a_prime.atoms[f], &img).unwrap_or(false)
                })
                .ok_or_else(|| {
                    unconfirmed(format!(
                        "the image of atom {e} of A' in atom {other} of A is not an atom of A'"
                    ))
                })?;
            sigma[f] = s;
        }
    }
    for o in &a_prime.orbits {
        for &e in o {
            if a_prime.orbit_of(reps[sigma[e]]) != a_prime.orbit_of(e) {
                return Err(unconfirmed(format!(
                    "atom {e} of A' leaves its orbit under the transports of A"
                )));
            }
        }
    }

    // Ψ on each Δ-orbit through its lowest atom.
    let mut psi_sets = vec![None; n];
    let mut certs = vec![None; n];
    for o in &a.orbits {
        let r = o[0];
        let g = oracle.find(&a.atoms[r], &c.atoms[phi[r]])?.ok_or_else(|| {
            Error::Budget(format!(
                "no map from atom {r} onto its image {} within the budget",
                phi[r]
            ))
        })?;
        for &x in o {
            let into = a.transport(x, r)?.then(act, &g)?;
            let cert = if x == r {
                into
            } else {
                into.then(h, &c.transport(phi[r], phi[x])?)?
            };
            for e in (0..n).filter(|&e| parent[e] == x) {
                let m = cert.restrict(act, &a_prime.atoms[e])?;
                psi_sets[e] = Some(m.image(h)?);
                certs[e] = Some(m);
            }
        }
    }
    let atoms: Vec<_> = psi_sets
        .into_iter()
        .map(|s| s.expect("every A' atom has a parent"))
        .collect();
    let certs: Vec<_> = certs
        .into_iter()
        .map(|s| s.expect("every A' atom has a parent"))
        .collect();

    // λ: transports of C restricted to images, within one Δ-class.
    let lambda = |e: usize| -> Result<PiecewiseMap> {
        let r = reps[sigma[e]];
        let m = c
            .transport(phi[parent[r]], phi[parent[e]])?
            .restrict(h, &atoms[r])?;
        if !same_set(h, &m.image(h)?, &atoms[e])? {
            return Err(Error::Invariant(format!(
                "C transport does not carry Ψ({r}) onto Ψ({e})"
            )));
        }
        Ok(m)
    };
    let mut trans = vec![None; n];
    for o in &a_prime.orbits {
        let top = o[0];
        for &e in o {
            let r = reps[sigma[e]];
            let head = if sigma[r] == sigma[top] {
                PiecewiseMap::identity(h, &atoms[top])
            } else {
                oracle.find(&atoms[top], &atoms[r])?.ok_or_else(|| {
                    Error::Budget(format!("no map from Ψ({top}) onto Ψ({r}) within the budget; atoms {top} and {r} stay unlinked"))
                })?
            };
            trans[e] = Some(head.then(h, &lambda(e)?)?);
        }
    }
    let c_prime = UnitSystem {
        action: h.clone(),
        atoms,
        orbits: a_prime.orbits.clone(),
        generators: a_prime.generators.clone(),
        transports: Some(
            trans
                .into_iter()
                .map(|t| t.expect("orbit covers atom"))
                .collect(),
        ),
    };
    let step = KriegerStep {
        c_prime,
        psi: (0..n).collect(),
        certs,
    };
    verify_krieger(a, c, phi, a_prime, &step)?;
    Ok(step)
}

/// Independent re-check of a Krieger step.
pub fn verify_krieger(
    a: &UnitSystem,
    c: &UnitSystem,
    phi: &[usize],
    a_prime: &UnitSystem,
    step: &KriegerStep,
) -> Result<()> {
    let h = &c.action;
    let cp = &step.c_prime;
    cp.check_axioms()?;
    let n = a_prime.len();
    let mut seen = vec![false; n];
    if step.psi.len() != n
        || cp.len() != n
        || step
            .psi
            .iter()
            .any(|&x| x >= n || std::mem::replace(&mut seen[x], true))
    {
        return Err(Error::Invariant("Ψ is not a bijection of atoms".into()));
    }
    for e in 0..n {
        let pa = a
            .atom_containing(&a_prime.atoms[e])?
            .ok_or_else(|| Error::Invariant(format!("atom {e} of A' has no parent")))?;
        if !is_subset(h, &cp.atoms[step.psi[e]], &c.atoms[phi[pa]])? {
            return Err(Error::Invariant(format!(
                "Ψ({e}) is not inside Φ of its parent"
            )));
        }
        if !step.certs[e].verify(h, &a_prime.atoms[e], &cp.atoms[step.psi[e]])? {
            return Err(Error::Invariant(format!(
                "certificate for atom {e} does not verify"
            )));
        }
    }
    let mut mapped: Vec<Vec<usize>> = a_prime
        .orbits
        .iter()
        .map(|o| {
            let mut v: Vec<usize> = o.iter().map(|&x| step.psi[x]).collect();
            v.sort_unstable();
            v
        })
        .collect();
    mapped.sort();
    let mut target = cp.orbits.clone();
    target.sort();
    if mapped != target {
        return Err(Error::Invariant(
            "Ψ does not carry orbits onto orbits".into(),
        ));
    }
    for (i, x) in cp.atoms.iter().enumerate() {
        if c.atom_containing(x)?.is_none() {
            return Err(Error::Invariant(format!(
                "atom {i} of C' is not inside an atom of C"
            )));
        }
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct ConjugationStep {
    pub system: UnitSystem,
    pub max_word_len: usize,
}

#[derive(Clone, Debug)]
pub struct ConjugationReport {
    pub steps: Vec<ConjugationStep>,
    /// Atom correspondence at the last completed step.
    pub phi: Vec<usize>,
    pub failure: Option<String>,
}

impl ConjugationReport {
    pub fn system(&self) -> Option<&UnitSystem> {
        self.steps.last().map(|s| &s.system)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "steps": self.steps.iter().map(|s| json!({"system": s.system.to_json(), "max_word_len": s.max_word_len})).collect::<Vec<_>>(),
            "phi": self.phi,
            "failure": self.failure,
        })
    }
}

/// Runs Krieger's step up an increasing ladder, starting from the one-atom systems.
pub fn conjugate_construct(
    oracle: &CompatibilityOracle,
    ladder: &[UnitSystem],
) -> ConjugationReport {
    let h = oracle.action();
    let mut report = ConjugationReport {
        steps: Vec::new(),
        phi: vec![0],
        failure: None,
    };
    let Some(first) = ladder.first() else {
        return report;
    };
    let mut a = UnitSystem::trivial(&first.action);
    let mut c = UnitSystem::trivial(h);
    for (k, next) in ladder.iter().enumerate() {
        match krieger_extend(&a, &c, &report.phi, next, oracle) {
            Ok(step) => {
                let max_word_len = step
                    .c_prime
                    .transports
                    .iter()
                    .flatten()
                    .map(|t| t.max_word_len(h))
                    .max()
                    .unwrap_or(0);
                report.phi = step.psi.clone();
                c = step.c_prime.clone();
                a = next.clone();
                report.steps.push(ConjugationStep {
                    system: step.c_prime,
                    max_word_len,
                });
            }
            Err(e) => {
                report.failure = Some(format!("step {}: {e}", k + 1));
                break;
            }
        }
    }
    report
}

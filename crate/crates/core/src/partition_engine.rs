//! Finite partitions of the phase space into atoms, and how group words move them.

use std::collections::HashMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::space_model::{
    apply_word, eval, ActionSpec, ClopenExpr, Depth, GroupWord, LeafKind, NormalForm, OdometerBase,
    ShiftRule,
};

pub const DEFAULT_ATOM_CAP: usize = 1 << 16;

/// Atoms are cell vectors (factor cells concatenated) in lexicographic order.
#[derive(Clone, Debug)]
pub struct FinitePartition {
    pub action: ActionSpec,
    pub depth: Depth,
    pub atoms: Vec<Vec<u32>>,
    offsets: Vec<usize>,
    index: HashMap<Vec<u32>, usize>,
}

impl PartialEq for FinitePartition {
    fn eq(&self, other: &Self) -> bool {
        self.action == other.action && self.depth == other.depth && self.atoms == other.atoms
    }
}

impl FinitePartition {
    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn find(&self, cells: &[u32]) -> Option<usize> {
        self.index.get(cells).copied()
    }

    /// Cells of factor `f` of atom `a`.
    pub fn factor_cells(&self, a: usize, f: usize) -> &[u32] {
        &self.atoms[a][self.offsets[f]..self.offsets[f + 1]]
    }

    pub fn factor_depth(&self, f: usize) -> &Depth {
        self.depth.parts()[f]
    }

    /// The atom as a clopen expression (an intersection of cylinders).
    pub fn atom_expr(&self, a: usize) -> ClopenExpr {
        let factors = self.action.factors();
        let product = self.action.is_product();
        let mut terms = Vec::new();
        for (f, leaf) in factors.iter().enumerate() {
            let cells = self.factor_cells(a, f);
            let sel = product.then_some(f);
            terms.extend(leaf_atom_terms(leaf, self.factor_depth(f), cells, sel));
        }
        ClopenExpr::inter_all(terms)
    }

    pub fn set_expr(&self, set: &[bool]) -> ClopenExpr {
        if set.iter().all(|&b| !b) {
            return ClopenExpr::Empty;
        }
        if set.iter().all(|&b| b) {
            return ClopenExpr::Full;
        }
        ClopenExpr::union_all(
            set.iter()
                .enumerate()
                .filter(|(_, &b)| b)
                .map(|(i, _)| self.atom_expr(i)),
        )
    }

    /// Human-readable atom descriptor.
    pub fn atom_label(&self, a: usize) -> String {
        let parts: Vec<String> = (0..self.offsets.len() - 1)
            .map(|f| {
                let cells = self.factor_cells(a, f);
                match self.factor_depth(f) {
                    Depth::Points => format!("p{}", cells[0]),
                    Depth::Window2 { w, .. } if *w > 0 => cells
                        .chunks(*w)
                        .map(|r| {
                            r.iter()
                                .map(|&s| crate::space_model::symbol_char(s))
                                .collect::<String>()
                        })
                        .collect::<Vec<_>>()
                        .join("/"),
                    _ => cells
                        .iter()
                        .map(|&s| crate::space_model::symbol_char(s))
                        .collect(),
                }
            })
            .collect();
        parts.join("|")
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::Value::Array(
            (0..self.len())
                .map(|a| serde_json::Value::String(self.atom_label(a)))
                .collect(),
        )
    }

    /// Index map from the atoms of `self` to those of a coarser partition.
    pub fn project_onto(&self, coarse: &FinitePartition) -> Result<Vec<usize>> {
        let fparts = self.depth.parts();
        let cparts = coarse.depth.parts();
        let factors = self.action.factors();
        (0..self.len())
            .map(|a| {
                let mut cells = Vec::with_capacity(coarse.depth.cells());
                for (f, leaf) in factors.iter().enumerate() {
                    cells.extend(restrict(
                        leaf,
                        fparts[f],
                        cparts[f],
                        self.factor_cells(a, f),
                    )?);
                }
                coarse.find(&cells).ok_or_else(|| {
                    Error::Invariant(format!("atom {} has no coarse image", self.atom_label(a)))
                })
            })
            .collect()
    }
}

fn leaf_atom_terms(
    leaf: &ActionSpec,
    depth: &Depth,
    cells: &[u32],
    sel: Option<usize>,
) -> Vec<ClopenExpr> {
    use crate::space_model::{Anchor, Cylinder};
    let cyl = |symbols: Vec<u32>, anchor| {
        ClopenExpr::Cyl(Cylinder {
            symbols,
            anchor,
            factor: sel,
        })
    };
    match (leaf.leaf_kind(), depth) {
        (_, d) if d.cells() == 0 => Vec::new(),
        (LeafKind::Shift1, Depth::Window1 { lo, .. }) => {
            vec![cyl(cells.to_vec(), Anchor::Pos(*lo))]
        }
        (LeafKind::Shift2, Depth::Window2 { x0, y0, w, .. }) => cells
            .chunks(*w)
            .enumerate()
            .map(|(r, row)| cyl(row.to_vec(), Anchor::Pos2(*x0, y0 + r as i64)))
            .collect(),
        (LeafKind::Odometer, Depth::Level(_)) => vec![cyl(cells.to_vec(), Anchor::Level(1))],
        (LeafKind::Finite, Depth::Points) => vec![cyl(cells.to_vec(), Anchor::Origin)],
        (k, d) => panic!("depth {d:?} does not fit leaf {k:?}"),
    }
}

/// Restricts cells at `fine` to the sub-resolution `coarse`.
pub fn restrict(
    leaf: &ActionSpec,
    fine: &Depth,
    coarse: &Depth,
    cells: &[u32],
) -> Result<Vec<u32>> {
    let bad = || {
        Error::Depth(format!(
            "{} is not inside {}",
            coarse.describe(),
            fine.describe()
        ))
    };
    match (fine, coarse) {
        (_, Depth::Window1 { len: 0, .. }) => Ok(Vec::new()),
        (Depth::Window1 { lo, len }, Depth::Window1 { lo: clo, len: clen }) => {
            let start = clo - lo;
            if start < 0 || start as usize + clen > *len {
                return Err(bad());
            }
            Ok(cells[start as usize..start as usize + clen].to_vec())
        }
        (_, Depth::Window2 { w: 0, .. } | Depth::Window2 { h: 0, .. }) => Ok(Vec::new()),
        (
            Depth::Window2 { x0, y0, w, h },
            Depth::Window2 {
                x0: cx,
                y0: cy,
                w: cw,
                h: ch,
            },
        ) => {
            let (dx, dy) = (cx - x0, cy - y0);
            if dx < 0 || dy < 0 || dx as usize + cw > *w || dy as usize + ch > *h {
                return Err(bad());
            }
            let mut out = Vec::with_capacity(cw * ch);
            for r in 0..*ch {
                let row = (dy as usize + r) * w + dx as usize;
                out.extend_from_slice(&cells[row..row + cw]);
            }
            Ok(out)
        }
        (Depth::Level(n), Depth::Level(m)) if m <= n => Ok(cells[..*m as usize].to_vec()),
        (Depth::Points, Depth::Points) => Ok(cells.to_vec()),
        _ => {
            let _ = leaf;
            Err(bad())
        }
    }
}

/// The canonical partition at `depth`.
pub fn level_partition(action: &ActionSpec, depth: &Depth, cap: usize) -> Result<FinitePartition> {
    let factors = action.factors();
    let parts = depth.parts();
    if parts.len() != factors.len() {
        return Err(Error::Depth(format!(
            "depth {} does not match the action",
            depth.describe()
        )));
    }
    let mut per: Vec<Vec<Vec<u32>>> = Vec::new();
    for (leaf, d) in factors.iter().zip(&parts) {
        per.push(leaf_patterns(leaf, d, cap)?);
    }
    let total = per
        .iter()
        .try_fold(1usize, |acc, p| acc.checked_mul(p.len()))
        .unwrap_or(usize::MAX);
    if total > cap {
        return Err(Error::AtomCap { cap, needed: total });
    }
    let mut atoms: Vec<Vec<u32>> = vec![Vec::new()];
    for p in &per {
        let mut next = Vec::with_capacity(atoms.len() * p.len());
        for a in &atoms {
            for cells in p {
                let mut c = a.clone();
                c.extend_from_slice(cells);
                next.push(c);
            }
        }
        atoms = next;
    }
    let mut offsets = vec![0];
    for d in &parts {
        offsets.push(offsets.last().unwrap() + d.cells());
    }
    let index = atoms
        .iter()
        .enumerate()
        .map(|(i, a)| (a.clone(), i))
        .collect();
    Ok(FinitePartition {
        action: action.clone(),
        depth: depth.clone(),
        atoms,
        offsets,
        index,
    })
}

fn leaf_patterns(leaf: &ActionSpec, depth: &Depth, cap: usize) -> Result<Vec<Vec<u32>>> {
    match (leaf, depth) {
        (ActionSpec::FullShift { alphabet, .. }, d)
            if matches!(d, Depth::Window1 { .. } | Depth::Window2 { .. }) =>
        {
            let n = d.cells();
            let total = (*alphabet as usize)
                .checked_pow(n as u32)
                .unwrap_or(usize::MAX);
            if total > cap {
                return Err(Error::AtomCap { cap, needed: total });
            }
            let mut out = Vec::with_capacity(total);
            dfs(n, *alphabet, &mut Vec::new(), &mut |_| true, &mut |p| {
                out.push(p.to_vec());
                Ok(())
            })?;
            Ok(out)
        }
        (
            ActionSpec::Subshift {
                alphabet,
                rule,
                dimension,
            },
            d,
        ) => {
            let n = d.cells();
            let mut out: Vec<Vec<u32>> = Vec::new();
            match rule {
                ShiftRule::AtMostOneOne => {
                    dfs(
                        n,
                        *alphabet,
                        &mut Vec::new(),
                        &mut |p| p.iter().filter(|&&s| s == 1).count() <= 1,
                        &mut |p| push_capped(&mut out, p, cap),
                    )?;
                }
                ShiftRule::Forbidden(pats) if *dimension == 1 => {
                    let words: Vec<&Vec<u32>> = pats.iter().map(|p| &p[0]).collect();
                    let graph = SftGraph::new(*alphabet, &words);
                    dfs(
                        n,
                        *alphabet,
                        &mut Vec::new(),
                        &mut |p| !ends_with_forbidden(p, &words),
                        &mut |p| {
                            if graph.globally_admissible(p) {
                                push_capped(&mut out, p, cap)
                            } else {
                                Ok(())
                            }
                        },
                    )?;
                }
                ShiftRule::Forbidden(pats) => {
                    let Depth::Window2 { w, h, .. } = d else {
                        return Err(Error::Depth("expected a box".into()));
                    };
                    let (w, h) = (*w, *h);
                    dfs(n, *alphabet, &mut Vec::new(), &mut |_| true, &mut |p| {
                        if pats.iter().all(|pat| !occurs2(p, w, h, pat)) {
                            push_capped(&mut out, p, cap)
                        } else {
                            Ok(())
                        }
                    })?;
                }
            }
            Ok(out)
        }
        (ActionSpec::Odometer { base }, Depth::Level(n)) => {
            let total = base.modulus(*n);
            if total > cap as u64 {
                return Err(Error::AtomCap {
                    cap,
                    needed: total as usize,
                });
            }
            let mut out = Vec::with_capacity(total as usize);
            let mut cur = Vec::new();
            odometer_strings(base, *n, &mut cur, &mut out);
            Ok(out)
        }
        (ActionSpec::Finite(fa), Depth::Points) => {
            if fa.points > cap {
                return Err(Error::AtomCap {
                    cap,
                    needed: fa.points,
                });
            }
            Ok((0..fa.points as u32).map(|p| vec![p]).collect())
        }
        (l, d) => Err(Error::Depth(format!(
            "depth {} does not fit {:?}",
            d.describe(),
            l.leaf_kind()
        ))),
    }
}

fn push_capped(out: &mut Vec<Vec<u32>>, p: &[u32], cap: usize) -> Result<()> {
    if out.len() >= cap {
        return Err(Error::AtomCap {
            cap,
            needed: cap + 1,
        });
    }
    out.push(p.to_vec());
    Ok(())
}

fn dfs(
    n: usize,
    k: u32,
    cur: &mut Vec<u32>,
    keep: &mut dyn FnMut(&[u32]) -> bool,
    emit: &mut dyn FnMut(&[u32]) -> Result<()>,
) -> Result<()> {
    if cur.len() == n {
        return emit(cur);
    }
    for s in 0..k {
        cur.push(s);
        if keep(cur) {
            dfs(n, k, cur, keep, emit)?;
        }
        cur.pop();
    }
    Ok(())
}

fn odometer_strings(base: &OdometerBase, n: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if cur.len() == n as usize {
        out.push(cur.clone());
        return;
    }
    for d in 0..base.at(cur.len() as u32 + 1) {
        cur.push(d);
        odometer_strings(base, n, cur, out);
        cur.pop();
    }
}

fn ends_with_forbidden(p: &[u32], words: &[&Vec<u32>]) -> bool {
    words
        .iter()
        .any(|w| p.len() >= w.len() && &p[p.len() - w.len()..] == w.as_slice())
}

fn occurs2(p: &[u32], w: usize, h: usize, pat: &[Vec<u32>]) -> bool {
    let ph = pat.len();
    let pw = pat[0].len();
    if ph > h || pw > w {
        return false;
    }
    (0..=h - ph).any(|y| {
        (0..=w - pw).any(|x| (0..ph).all(|r| (0..pw).all(|c| p[(y + r) * w + x + c] == pat[r][c])))
    })
}

/// Block graph of a one-dimensional shift of finite type, used to decide which
/// finite words occur in some bi-infinite configuration.
struct SftGraph {
    v: usize,
    left: std::collections::HashSet<Vec<u32>>,
    right: std::collections::HashSet<Vec<u32>>,
}

impl SftGraph {
    fn new(k: u32, words: &[&Vec<u32>]) -> Self {
        let m = words.iter().map(|w| w.len()).max().unwrap_or(1).max(2);
        let v = m - 1;
        let mut verts = Vec::new();
        dfs(
            v,
            k,
            &mut Vec::new(),
            &mut |p| !ends_with_forbidden(p, words),
            &mut |p| {
                verts.push(p.to_vec());
                Ok(())
            },
        )
        .expect("no cap");
        let succ = |u: &Vec<u32>| -> Vec<Vec<u32>> {
            (0..k)
                .filter_map(|s| {
                    let mut e = u.clone();
                    e.push(s);
                    (!ends_with_forbidden(&e, words)).then(|| e[1..].to_vec())
                })
                .collect()
        };
        let edges: Vec<(Vec<u32>, Vec<u32>)> = verts
            .iter()
            .flat_map(|u| succ(u).into_iter().map(move |w| (u.clone(), w)))
            .collect();
        let prune = |forward: bool| {
            let mut alive: std::collections::HashSet<Vec<u32>> = verts.iter().cloned().collect();
            loop {
                let keep: std::collections::HashSet<Vec<u32>> = alive
                    .iter()
                    .filter(|u| {
                        edges.iter().any(|(a, b)| {
                            if forward {
                                a == *u && alive.contains(b)
                            } else {
                                b == *u && alive.contains(a)
                            }
                        })
                    })
                    .cloned()
                    .collect();
                if keep.len() == alive.len() {
                    return alive;
                }
                alive = keep;
            }
        };
        SftGraph {
            v,
            right: prune(true),
            left: prune(false),
        }
    }

    fn globally_admissible(&self, p: &[u32]) -> bool {
        if p.len() >= self.v {
            self.left.contains(&p[..self.v]) && self.right.contains(&p[p.len() - self.v..])
        } else {
            self.left
                .iter()
                .any(|u| self.right.contains(u) && u.starts_with(p))
        }
    }
}

/// Numeric value of an odometer digit string (level 1 least significant).
pub fn odometer_value(base: &OdometerBase, digits: &[u32]) -> u64 {
    let mut place = 1u64;
    let mut v = 0u64;
    for (i, &d) in digits.iter().enumerate() {
        v += d as u64 * place;
        place *= base.at(i as u32 + 1) as u64;
    }
    v
}

/// Adds `m` (with carries) to the first `digits.len()` digits.
pub fn odometer_add(base: &OdometerBase, digits: &[u32], m: i64) -> Vec<u32> {
    let n = digits.len() as u32;
    let modulus = base.modulus(n) as i128;
    let mut v = (odometer_value(base, digits) as i128 + m as i128).rem_euclid(modulus) as u64;
    (1..=n)
        .map(|i| {
            let b = base.at(i) as u64;
            let d = (v % b) as u32;
            v /= b;
            d
        })
        .collect()
}

/// Atom permutation induced by a word on a permutation-type partition.
pub fn word_permutation(p: &FinitePartition, w: &GroupWord) -> Result<Vec<usize>> {
    let schema = p.action.schema();
    schema.check(w)?;
    let nf = schema.normal_form(w);
    let factors = p.action.factors();
    (0..p.len())
        .map(|a| {
            let mut cells = Vec::with_capacity(p.atoms[a].len());
            for (f, leaf) in factors.iter().enumerate() {
                let c = p.factor_cells(a, f);
                match (leaf, &nf) {
                    (ActionSpec::Odometer { base }, NormalForm::Abelian(v)) => {
                        cells.extend(odometer_add(base, c, v[0]))
                    }
                    (ActionSpec::Finite(fa), NormalForm::Finite(g)) => {
                        cells.push(fa.action_table[*g][c[0] as usize] as u32)
                    }
                    _ => {
                        return Err(Error::Refusal(
                            "shift factors admit no invariant finite partition".into(),
                        ))
                    }
                }
            }
            p.find(&cells)
                .ok_or_else(|| Error::Invariant("word image left the partition".into()))
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct InvariantPartition {
    pub partition: FinitePartition,
    pub words: Vec<GroupWord>,
    pub permutations: Vec<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Refusal {
    pub reason: String,
    pub suggestion: String,
}

/// A partition on which every listed word permutes atoms, or a refusal for shifts.
pub fn invariant_partition(
    action: &ActionSpec,
    words: &[GroupWord],
    depth: &Depth,
    cap: usize,
) -> Result<std::result::Result<InvariantPartition, Refusal>> {
    if words.is_empty() {
        return Err(Error::Input(
            "invariant_partition needs at least one word".into(),
        ));
    }
    if !action.is_permutation_type() {
        return Ok(Err(Refusal {
            reason: "no finite window algebra is invariant under a shift".into(),
            suggestion: "use the CSP backend or a sequence of depths".into(),
        }));
    }
    let partition = level_partition(action, depth, cap)?;
    let permutations = words
        .iter()
        .map(|w| word_permutation(&partition, w))
        .collect::<Result<_>>()?;
    Ok(Ok(InvariantPartition {
        partition,
        words: words.to_vec(),
        permutations,
    }))
}

#[derive(Clone, Debug, PartialEq)]
pub enum ImageKind {
    Atom(usize),
    /// Translated cylinder and its decomposition into atoms of a finer partition.
    Cylinder {
        expr: ClopenExpr,
        atoms: Vec<usize>,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct AtomImage {
    pub source: usize,
    pub word: GroupWord,
    pub image: ImageKind,
}

/// Image of one atom. For shift-type actions `finer` must cover the translated window.
pub fn atom_image(
    action: &ActionSpec,
    w: &GroupWord,
    p: &FinitePartition,
    atom: usize,
    finer: Option<&FinitePartition>,
) -> Result<AtomImage> {
    if atom >= p.len() {
        return Err(Error::Input(format!("atom {atom} out of range")));
    }
    if action.is_permutation_type() {
        let perm = word_permutation(p, w)?;
        return Ok(AtomImage {
            source: atom,
            word: w.clone(),
            image: ImageKind::Atom(perm[atom]),
        });
    }
    let expr = apply_word(action, w, &p.atom_expr(atom))?;
    let atoms = match finer {
        Some(f) => {
            let set = eval(f, &expr)?;
            set.iter()
                .enumerate()
                .filter(|(_, &b)| b)
                .map(|(i, _)| i)
                .collect()
        }
        None => Vec::new(),
    };
    Ok(AtomImage {
        source: atom,
        word: w.clone(),
        image: ImageKind::Cylinder { expr, atoms },
    })
}

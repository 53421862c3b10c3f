use super::action::{ActionSpec, LeafKind};
use super::depth::Depth;
use super::expr::{Anchor, ClopenExpr, Cylinder};
use super::word::{GroupWord, NormalForm};
use crate::error::{Error, Result};
use crate::partition_engine::{level_partition, odometer_add, FinitePartition, DEFAULT_ATOM_CAP};

/// Factor index a cylinder refers to.
pub fn resolve_factor(action: &ActionSpec, c: &Cylinder) -> Result<usize> {
    let factors = action.factors();
    let f = match (action, c.factor) {
        (ActionSpec::Product(_), Some(f)) => f,
        (ActionSpec::Product(fs), None) => {
            let want = |k: LeafKind| fs.iter().position(|x| x.leaf_kind() == k);
            match c.anchor {
                Anchor::Level(_) => want(LeafKind::Odometer),
                Anchor::Pos(_) => want(LeafKind::Shift1),
                Anchor::Pos2(..) => want(LeafKind::Shift2),
                Anchor::Origin => Some(0),
            }
            .ok_or_else(|| Error::Expr(format!("no factor matches cylinder {c}")))?
        }
        (_, None) | (_, Some(0)) => 0,
        (_, Some(f)) => return Err(Error::Expr(format!("factor #{f} on a non-product action"))),
    };
    let leaf = factors
        .get(f)
        .ok_or_else(|| Error::Expr(format!("factor #{f} out of range")))?;
    check_leaf(leaf, c)?;
    Ok(f)
}

fn check_leaf(leaf: &ActionSpec, c: &Cylinder) -> Result<()> {
    let kind = leaf.leaf_kind();
    let ok_anchor = matches!(
        (kind, c.anchor),
        (LeafKind::Shift1, Anchor::Origin | Anchor::Pos(_))
            | (LeafKind::Shift2, Anchor::Origin | Anchor::Pos2(..))
            | (LeafKind::Odometer, Anchor::Origin | Anchor::Level(_))
            | (LeafKind::Finite, Anchor::Origin)
    );
    if !ok_anchor {
        return Err(Error::Expr(format!(
            "anchor of {c} does not fit a {kind:?} factor"
        )));
    }
    match leaf {
        ActionSpec::FullShift { alphabet, .. } | ActionSpec::Subshift { alphabet, .. } => {
            if let Some(s) = c.symbols.iter().find(|&&s| s >= *alphabet) {
                return Err(Error::Expr(format!(
                    "unknown symbol {s} for alphabet of size {alphabet}"
                )));
            }
        }
        ActionSpec::Odometer { base } => {
            let k = match c.anchor {
                Anchor::Level(k) => k,
                _ => 1,
            };
            for (j, &d) in c.symbols.iter().enumerate() {
                if d >= base.at(k + j as u32) {
                    return Err(Error::Expr(format!(
                        "digit {d} too large at level {}",
                        k + j as u32
                    )));
                }
            }
        }
        ActionSpec::Finite(fa) => {
            if c.symbols.len() != 1 || c.symbols[0] as usize >= fa.points {
                return Err(Error::Expr(format!(
                    "{c} is not a point of a {}-point action",
                    fa.points
                )));
            }
        }
        ActionSpec::Product(_) => unreachable!(),
    }
    Ok(())
}

/// Checks every cylinder of `e` against the action.
pub fn check_expr(action: &ActionSpec, e: &ClopenExpr) -> Result<()> {
    for c in e.cylinders() {
        resolve_factor(action, c)?;
    }
    Ok(())
}

pub fn parse_clopen_for(action: &ActionSpec, text: &str) -> Result<ClopenExpr> {
    let e = super::expr::parse_clopen(text)?;
    check_expr(action, &e)?;
    Ok(e)
}

fn cylinder_depth(leaf: &ActionSpec, c: &Cylinder) -> Depth {
    let n = c.symbols.len();
    match (leaf.leaf_kind(), c.anchor) {
        (LeafKind::Shift1, Anchor::Pos(p)) => Depth::Window1 { lo: p, len: n },
        (LeafKind::Shift1, _) => Depth::Window1 { lo: 0, len: n },
        (LeafKind::Shift2, Anchor::Pos2(x, y)) => Depth::Window2 {
            x0: x,
            y0: y,
            w: n,
            h: 1,
        },
        (LeafKind::Shift2, _) => Depth::Window2 {
            x0: 0,
            y0: 0,
            w: n,
            h: 1,
        },
        (LeafKind::Odometer, Anchor::Level(k)) => Depth::Level(k + n as u32 - 1),
        (LeafKind::Odometer, _) => Depth::Level(n as u32),
        (LeafKind::Finite, _) => Depth::Points,
    }
}

/// Smallest depth on which every cylinder of the expressions is visible.
pub fn support(action: &ActionSpec, exprs: &[&ClopenExpr]) -> Result<Depth> {
    let factors = action.factors();
    let mut parts: Vec<Depth> = factors.iter().map(|f| Depth::trivial(f)).collect();
    for e in exprs {
        for c in e.cylinders() {
            let f = resolve_factor(action, c)?;
            parts[f] = parts[f].hull(&cylinder_depth(factors[f], c));
        }
    }
    Ok(Depth::from_parts(action, parts))
}

pub type AtomSet = Vec<bool>;

/// Atom set of `e` on a partition whose depth contains the support of `e`.
pub fn eval(p: &FinitePartition, e: &ClopenExpr) -> Result<AtomSet> {
    Ok(match e {
        ClopenExpr::Empty => vec![false; p.len()],
        ClopenExpr::Full => vec![true; p.len()],
        ClopenExpr::Cyl(c) => eval_cylinder(p, c)?,
        ClopenExpr::Not(x) => eval(p, x)?.into_iter().map(|b| !b).collect(),
        ClopenExpr::Union(a, b) => zip(eval(p, a)?, eval(p, b)?, |x, y| x || y),
        ClopenExpr::Inter(a, b) => zip(eval(p, a)?, eval(p, b)?, |x, y| x && y),
    })
}

fn zip(a: AtomSet, b: AtomSet, f: impl Fn(bool, bool) -> bool) -> AtomSet {
    a.into_iter().zip(b).map(|(x, y)| f(x, y)).collect()
}

fn eval_cylinder(p: &FinitePartition, c: &Cylinder) -> Result<AtomSet> {
    let action = &p.action;
    let f = resolve_factor(action, c)?;
    let leaf = action.factors()[f];
    let depth = p.factor_depth(f);
    let cd = cylinder_depth(leaf, c);
    if !depth.contains(&cd) {
        return Err(Error::Depth(format!(
            "{c} is not visible at {}",
            depth.describe()
        )));
    }
    // (cell index, required symbol)
    let req: Vec<(usize, u32)> = match (depth, cd) {
        (Depth::Window1 { lo, .. }, Depth::Window1 { lo: clo, .. }) => c
            .symbols
            .iter()
            .enumerate()
            .map(|(j, &s)| ((clo - lo) as usize + j, s))
            .collect(),
        (Depth::Window2 { x0, y0, w, .. }, Depth::Window2 { x0: cx, y0: cy, .. }) => c
            .symbols
            .iter()
            .enumerate()
            .map(|(j, &s)| ((cy - y0) as usize * w + (cx - x0) as usize + j, s))
            .collect(),
        (Depth::Level(_), Depth::Level(top)) => {
            let k = top as usize + 1 - c.symbols.len();
            c.symbols
                .iter()
                .enumerate()
                .map(|(j, &s)| (k - 1 + j, s))
                .collect()
        }
        (Depth::Points, Depth::Points) => vec![(0, c.symbols[0])],
        _ => return Err(Error::Invariant("cylinder/depth shape mismatch".into())),
    };
    Ok((0..p.len())
        .map(|a| {
            let cells = p.factor_cells(a, f);
            req.iter().all(|&(i, s)| cells[i] == s)
        })
        .collect())
}

/// Partition at the hull of `base` and the supports of `exprs`.
pub fn common_partition(
    action: &ActionSpec,
    exprs: &[&ClopenExpr],
    base: Option<&Depth>,
) -> Result<FinitePartition> {
    let mut d = support(action, exprs)?;
    if let Some(b) = base {
        d = d.hull(b);
    }
    level_partition(action, &d, DEFAULT_ATOM_CAP)
}

/// Exact emptiness at `depth` (hulled with the support of `e`).
pub fn is_empty(action: &ActionSpec, e: &ClopenExpr, depth: &Depth) -> Result<bool> {
    let p = common_partition(action, &[e], Some(depth))?;
    Ok(eval(&p, e)?.iter().all(|&b| !b))
}

pub fn is_empty_auto(action: &ActionSpec, e: &ClopenExpr) -> Result<bool> {
    let p = common_partition(action, &[e], None)?;
    Ok(eval(&p, e)?.iter().all(|&b| !b))
}

pub fn is_subset(action: &ActionSpec, a: &ClopenExpr, b: &ClopenExpr) -> Result<bool> {
    is_empty_auto(action, &a.clone().minus(b.clone()))
}

pub fn same_set(action: &ActionSpec, a: &ClopenExpr, b: &ClopenExpr) -> Result<bool> {
    Ok(is_subset(action, a, b)? && is_subset(action, b, a)?)
}

pub fn disjoint(action: &ActionSpec, a: &ClopenExpr, b: &ClopenExpr) -> Result<bool> {
    is_empty_auto(action, &a.clone().and(b.clone()))
}

/// An expression for `α(w)(⟦e⟧)`.
pub fn apply_word(action: &ActionSpec, w: &GroupWord, e: &ClopenExpr) -> Result<ClopenExpr> {
    let schema = action.schema();
    schema.check(w)?;
    check_expr(action, e)?;
    if schema.is_identity(w) {
        return Ok(e.clone());
    }
    let nf = schema.normal_form(w);
    let factors = action.factors();
    let product = action.is_product();
    e.map_cylinders(&mut |c| {
        let f = resolve_factor(action, c)?;
        let sel = if product { Some(f) } else { c.factor };
        let leaf = factors[f];
        Ok(match (leaf, &nf) {
            (
                ActionSpec::FullShift { .. } | ActionSpec::Subshift { .. },
                NormalForm::Abelian(t),
            ) => {
                let anchor = match (leaf.leaf_kind(), c.anchor) {
                    (LeafKind::Shift1, Anchor::Pos(p)) => Anchor::Pos(p + t[0]),
                    (LeafKind::Shift1, _) => Anchor::Pos(t[0]),
                    (_, Anchor::Pos2(x, y)) => Anchor::Pos2(x + t[0], y + t[1]),
                    _ => Anchor::Pos2(t[0], t[1]),
                };
                ClopenExpr::Cyl(Cylinder {
                    symbols: c.symbols.clone(),
                    anchor,
                    factor: sel,
                })
            }
            (ActionSpec::Odometer { base }, NormalForm::Abelian(t)) => {
                let k = match c.anchor {
                    Anchor::Level(k) => k,
                    _ => 1,
                };
                let n = k + c.symbols.len() as u32 - 1;
                let mut lows: Vec<Vec<u32>> = vec![Vec::new()];
                for lvl in 1..k {
                    lows = lows
                        .into_iter()
                        .flat_map(|l| {
                            (0..base.at(lvl)).map(move |d| {
                                let mut x = l.clone();
                                x.push(d);
                                x
                            })
                        })
                        .collect();
                }
                let mut images: Vec<Vec<u32>> = lows
                    .into_iter()
                    .map(|mut l| {
                        l.extend_from_slice(&c.symbols);
                        odometer_add(base, &l, t[0])
                    })
                    .collect();
                images.sort();
                debug_assert_eq!(images.last().map(|v| v.len() as u32), Some(n));
                ClopenExpr::union_all(images.into_iter().map(|d| {
                    ClopenExpr::Cyl(Cylinder {
                        symbols: d,
                        anchor: Anchor::Level(1),
                        factor: sel,
                    })
                }))
            }
            (ActionSpec::Finite(fa), NormalForm::Finite(g)) => ClopenExpr::Cyl(Cylinder {
                symbols: vec![fa.action_table[*g][c.symbols[0] as usize] as u32],
                anchor: Anchor::Origin,
                factor: sel,
            }),
            _ => return Err(Error::Schema("word does not act on this factor".into())),
        })
    })
}

/// Minimal-depth disjunction of atoms denoting the same set.
pub fn canonicalize(action: &ActionSpec, e: &ClopenExpr) -> Result<ClopenExpr> {
    let (p, set) = minimal_form(action, e)?;
    Ok(p.set_expr(&set))
}

/// The partition at the minimal sufficient depth and the atom set of `e` on it.
pub fn minimal_form(action: &ActionSpec, e: &ClopenExpr) -> Result<(FinitePartition, AtomSet)> {
    let mut p = common_partition(action, &[e], None)?;
    let mut set = eval(&p, e)?;
    loop {
        let mut shrunk = false;
        for cand in shrink_candidates(&p.depth) {
            let coarse = level_partition(action, &cand, DEFAULT_ATOM_CAP)?;
            let proj = p.project_onto(&coarse)?;
            let mut cset: Vec<Option<bool>> = vec![None; coarse.len()];
            let mut ok = true;
            for (a, &c) in proj.iter().enumerate() {
                match cset[c] {
                    None => cset[c] = Some(set[a]),
                    Some(v) if v != set[a] => {
                        ok = false;
                        break;
                    }
                    _ => {}
                }
            }
            if ok {
                set = cset.into_iter().map(|v| v.unwrap_or(false)).collect();
                p = coarse;
                shrunk = true;
                break;
            }
        }
        if !shrunk {
            return Ok((p, set));
        }
    }
}

fn shrink_candidates(d: &Depth) -> Vec<Depth> {
    match d {
        Depth::Window1 { lo, len } if *len > 0 => vec![
            Depth::Window1 {
                lo: lo + 1,
                len: len - 1,
            },
            Depth::Window1 {
                lo: *lo,
                len: len - 1,
            },
        ],
        Depth::Window2 { x0, y0, w, h } if *w > 0 && *h > 0 => {
            let mut v = vec![
                Depth::Window2 {
                    x0: x0 + 1,
                    y0: *y0,
                    w: w - 1,
                    h: *h,
                },
                Depth::Window2 {
                    x0: *x0,
                    y0: *y0,
                    w: w - 1,
                    h: *h,
                },
                Depth::Window2 {
                    x0: *x0,
                    y0: y0 + 1,
                    w: *w,
                    h: h - 1,
                },
                Depth::Window2 {
                    x0: *x0,
                    y0: *y0,
                    w: *w,
                    h: h - 1,
                },
            ];
            for c in v.iter_mut() {
                if let Depth::Window2 { w: 0, .. } | Depth::Window2 { h: 0, .. } = c {
                    *c = Depth::Window2 {
                        x0: 0,
                        y0: 0,
                        w: 0,
                        h: 0,
                    };
                }
            }
            v
        }
        Depth::Level(n) if *n > 0 => vec![Depth::Level(n - 1)],
        Depth::Product(ds) => {
            let mut out = Vec::new();
            for (i, di) in ds.iter().enumerate() {
                for c in shrink_candidates(di) {
                    let mut v = ds.clone();
                    v[i] = c;
                    out.push(Depth::Product(v));
                }
            }
            out
        }
        _ => Vec::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space_model::{parse_clopen, FiniteAction, GroupSchema};

    fn odo() -> ActionSpec {
        ActionSpec::odometer(2)
    }

    #[test]
    fn union_of_both_symbols_is_full() {
        let fs = ActionSpec::full_shift(2, 1);
        let e = parse_clopen("([0]@0 | [1]@0)").unwrap();
        assert_eq!(canonicalize(&fs, &e).unwrap(), ClopenExpr::Full);
        let e = parse_clopen("[0]@0 & [1]@0").unwrap();
        assert_eq!(canonicalize(&fs, &e).unwrap(), ClopenExpr::Empty);
        assert!(is_empty(&fs, &e, &Depth::Window1 { lo: 0, len: 1 }).unwrap());
    }

    #[test]
    fn odometer_carry() {
        let g = GroupSchema::Abelian { rank: 1 };
        let e = parse_clopen("[00]@L1").unwrap();
        let img = apply_word(&odo(), &g.parse("+1").unwrap(), &e).unwrap();
        assert_eq!(img, parse_clopen("[10]@L1").unwrap());
        let img = apply_word(
            &odo(),
            &g.parse("+1").unwrap(),
            &parse_clopen("[11]").unwrap(),
        )
        .unwrap();
        assert_eq!(img, parse_clopen("[00]@L1").unwrap());
        let hi = apply_word(
            &odo(),
            &g.parse("+1").unwrap(),
            &parse_clopen("[1]@L2").unwrap(),
        )
        .unwrap();
        assert_eq!(hi, parse_clopen("[00]@L1 | [11]@L1").unwrap());
    }

    #[test]
    fn amoo_two_ones_empty() {
        let a = ActionSpec::at_most_one_one();
        let e = parse_clopen("[1]@0 & [1]@3").unwrap();
        assert!(is_empty(&a, &e, &Depth::Window1 { lo: 0, len: 1 }).unwrap());
        assert!(!is_empty_auto(&a, &parse_clopen("[1]@0").unwrap()).unwrap());
    }

    #[test]
    fn odometer_complement_nonempty() {
        let e = parse_clopen("~([0]@L1)").unwrap();
        assert!(!is_empty(&odo(), &e, &Depth::Level(1)).unwrap());
        assert_eq!(
            canonicalize(&odo(), &e).unwrap(),
            parse_clopen("[1]@L1").unwrap()
        );
    }

    #[test]
    fn shift_translation() {
        let fs = ActionSpec::full_shift(2, 1);
        let g = fs.schema();
        let img = apply_word(
            &fs,
            &g.parse("+1").unwrap(),
            &parse_clopen("[1]@0").unwrap(),
        )
        .unwrap();
        assert_eq!(img, parse_clopen("[1]@1").unwrap());
    }

    #[test]
    fn canonical_window_shrinks() {
        let fs = ActionSpec::full_shift(2, 1);
        let e = parse_clopen("[1]@3 & ([0]@5 | [1]@5)").unwrap();
        assert_eq!(
            canonicalize(&fs, &e).unwrap(),
            parse_clopen("[1]@3").unwrap()
        );
    }

    #[test]
    fn rejects_bad_symbols() {
        let fs = ActionSpec::full_shift(2, 1);
        assert!(parse_clopen_for(&fs, "[2]@0").is_err());
        assert!(parse_clopen_for(&fs, "[1]@L1").is_err());
        assert!(parse_clopen_for(&odo(), "[2]@L1").is_err());
        let fa = ActionSpec::Finite(FiniteAction::trivial(2));
        assert!(parse_clopen_for(&fa, "[2]").is_err());
        assert!(parse_clopen_for(&fa, "[1]").is_ok());
    }

    #[test]
    fn product_dispatch() {
        let a = ActionSpec::Product(vec![ActionSpec::at_most_one_one(), odo()]);
        let e = parse_clopen_for(&a, "[1]@0 & [0]@L1").unwrap();
        let d = support(&a, &[&e]).unwrap();
        assert_eq!(
            d,
            Depth::Product(vec![Depth::Window1 { lo: 0, len: 1 }, Depth::Level(1)])
        );
        let img = apply_word(&a, &a.schema().parse("+1").unwrap(), &e).unwrap();
        assert_eq!(img.to_string(), "[1]@1#0 & [1]@L1#1");
    }
}

use serde::Serialize;

use super::action::{ActionSpec, LeafKind};

/// Resolution of a finite partition: a coordinate box for shifts, a level for
/// odometers, nothing for finite actions.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Depth {
    Window1 {
        lo: i64,
        len: usize,
    },
    Window2 {
        x0: i64,
        y0: i64,
        w: usize,
        h: usize,
    },
    Level(u32),
    Points,
    Product(Vec<Depth>),
}

impl Depth {
    pub fn trivial(leaf: &ActionSpec) -> Depth {
        match leaf.leaf_kind() {
            LeafKind::Shift1 => Depth::Window1 { lo: 0, len: 0 },
            LeafKind::Shift2 => Depth::Window2 {
                x0: 0,
                y0: 0,
                w: 0,
                h: 0,
            },
            LeafKind::Odometer => Depth::Level(0),
            LeafKind::Finite => Depth::Points,
        }
    }

    /// Depth `n` read uniformly: window `[0, n-1]` (or the `n×n` box), level `n`.
    pub fn uniform(action: &ActionSpec, n: usize) -> Depth {
        let leaf = |a: &ActionSpec| match a.leaf_kind() {
            LeafKind::Shift1 => Depth::Window1 { lo: 0, len: n },
            LeafKind::Shift2 => Depth::Window2 {
                x0: 0,
                y0: 0,
                w: n,
                h: n,
            },
            LeafKind::Odometer => Depth::Level(n as u32),
            LeafKind::Finite => Depth::Points,
        };
        match action {
            ActionSpec::Product(fs) => Depth::Product(fs.iter().map(leaf).collect()),
            a => leaf(a),
        }
    }

    /// Per-factor view.
    pub fn parts(&self) -> Vec<&Depth> {
        match self {
            Depth::Product(ds) => ds.iter().collect(),
            d => vec![d],
        }
    }

    pub fn from_parts(action: &ActionSpec, parts: Vec<Depth>) -> Depth {
        if action.is_product() {
            Depth::Product(parts)
        } else {
            parts.into_iter().next().expect("one part")
        }
    }

    /// Smallest depth containing both. Panics on mismatched shapes.
    pub fn hull(&self, other: &Depth) -> Depth {
        match (self, other) {
            (Depth::Window1 { len: 0, .. }, d) | (d, Depth::Window1 { len: 0, .. }) => d.clone(),
            (Depth::Window1 { lo: a, len: la }, Depth::Window1 { lo: b, len: lb }) => {
                let lo = (*a).min(*b);
                let hi = (a + *la as i64).max(b + *lb as i64);
                Depth::Window1 {
                    lo,
                    len: (hi - lo) as usize,
                }
            }
            (Depth::Window2 { w: 0, .. } | Depth::Window2 { h: 0, .. }, d)
            | (d, Depth::Window2 { w: 0, .. } | Depth::Window2 { h: 0, .. }) => d.clone(),
            (
                Depth::Window2 {
                    x0: ax,
                    y0: ay,
                    w: aw,
                    h: ah,
                },
                Depth::Window2 {
                    x0: bx,
                    y0: by,
                    w: bw,
                    h: bh,
                },
            ) => {
                let x0 = (*ax).min(*bx);
                let y0 = (*ay).min(*by);
                let x1 = (ax + *aw as i64).max(bx + *bw as i64);
                let y1 = (ay + *ah as i64).max(by + *bh as i64);
                Depth::Window2 {
                    x0,
                    y0,
                    w: (x1 - x0) as usize,
                    h: (y1 - y0) as usize,
                }
            }
            (Depth::Level(a), Depth::Level(b)) => Depth::Level(*a.max(b)),
            (Depth::Points, Depth::Points) => Depth::Points,
            (Depth::Product(a), Depth::Product(b)) => {
                Depth::Product(a.iter().zip(b).map(|(x, y)| x.hull(y)).collect())
            }
            (a, b) => panic!("hull of mismatched depths {a:?} and {b:?}"),
        }
    }

    /// True if `self` contains `other`.
    pub fn contains(&self, other: &Depth) -> bool {
        &self.hull(other) == self
    }

    /// Number of cells per atom.
    pub fn cells(&self) -> usize {
        match self {
            Depth::Window1 { len, .. } => *len,
            Depth::Window2 { w, h, .. } => w * h,
            Depth::Level(n) => *n as usize,
            Depth::Points => 1,
            Depth::Product(ds) => ds.iter().map(Depth::cells).sum(),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Depth::Window1 { lo, len: 0 } => format!("window [{lo},{lo}) (empty)"),
            Depth::Window1 { lo, len } => format!("window [{lo},{}]", lo + *len as i64 - 1),
            Depth::Window2 { x0, y0, w, h } => format!("box {w}x{h} at ({x0},{y0})"),
            Depth::Level(n) => format!("level {n}"),
            Depth::Points => "points".to_string(),
            Depth::Product(ds) => ds
                .iter()
                .map(Depth::describe)
                .collect::<Vec<_>>()
                .join(" × "),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_hull() {
        let a = Depth::Window1 { lo: 0, len: 2 };
        let b = Depth::Window1 { lo: 5, len: 1 };
        assert_eq!(a.hull(&b), Depth::Window1 { lo: 0, len: 6 });
        assert_eq!(Depth::Window1 { lo: 9, len: 0 }.hull(&b), b);
        assert!(a.hull(&b).contains(&a));
    }

    #[test]
    fn box_hull() {
        let a = Depth::Window2 {
            x0: 0,
            y0: 0,
            w: 1,
            h: 1,
        };
        let b = Depth::Window2 {
            x0: -1,
            y0: 2,
            w: 1,
            h: 1,
        };
        assert_eq!(
            a.hull(&b),
            Depth::Window2 {
                x0: -1,
                y0: 0,
                w: 2,
                h: 3
            }
        );
    }
}

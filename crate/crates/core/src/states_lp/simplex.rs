//! Dense two-phase simplex over exact rationals with Bland's rule.
//!
//! Problems have the form `A x = b, x ≥ 0`. Phase 1 either finds a feasible basis or
//! a Farkas vector `y` with `yᵀA ≥ 0` and `yᵀb < 0`. A feasible basis can be reused
//! for any number of objectives.

use num::{BigInt, BigRational, One, Signed, Zero};

pub type Q = BigRational;

pub fn q(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinearProgram {
    pub vars: usize,
    pub rows: Vec<Vec<Q>>,
    pub rhs: Vec<Q>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Optimum {
    pub value: Q,
    pub x: Vec<Q>,
    /// Dual vector: `yᵀA ≥ c` and `yᵀb = value`.
    pub y: Vec<Q>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome {
    Optimal(Optimum),
    Infeasible { farkas: Vec<Q> },
    Unbounded { ray: Vec<Q> },
}

/// Tableau at a feasible basis. Artificial columns are kept (never re-entering) so
/// that their entries give the basis inverse.
#[derive(Clone, Debug)]
pub struct FeasibleBasis {
    n: usize,
    m: usize,
    sign: Vec<bool>,
    tab: Vec<Vec<Q>>,
    rhs: Vec<Q>,
    basis: Vec<usize>,
}

impl LinearProgram {
    pub fn new(vars: usize) -> Self {
        LinearProgram {
            vars,
            rows: Vec::new(),
            rhs: Vec::new(),
        }
    }

    pub fn add_row(&mut self, row: Vec<Q>, rhs: Q) {
        assert_eq!(row.len(), self.vars, "row width");
        self.rows.push(row);
        self.rhs.push(rhs);
    }

    pub fn phase1(&self) -> Result<FeasibleBasis, Vec<Q>> {
        let (n, m) = (self.vars, self.rows.len());
        let sign: Vec<bool> = self.rhs.iter().map(|b| b.is_negative()).collect();
        let mut tab: Vec<Vec<Q>> = Vec::with_capacity(m);
        let mut rhs = Vec::with_capacity(m);
        for i in 0..m {
            let mut row: Vec<Q> = self.rows[i]
                .iter()
                .map(|v| if sign[i] { -v.clone() } else { v.clone() })
                .collect();
            row.extend((0..m).map(|k| if k == i { Q::one() } else { Q::zero() }));
            tab.push(row);
            rhs.push(if sign[i] {
                -self.rhs[i].clone()
            } else {
                self.rhs[i].clone()
            });
        }
        let mut fb = FeasibleBasis {
            n,
            m,
            sign,
            tab,
            rhs,
            basis: (n..n + m).collect(),
        };
        let cost: Vec<Q> = (0..n + m)
            .map(|j| if j < n { Q::zero() } else { -Q::one() })
            .collect();
        let mut obj = fb.objective_row(&cost);
        fb.run(&mut obj, n + m);
        let value = -obj.1.clone();
        if value.is_negative() {
            let y: Vec<Q> = (0..m)
                .map(|i| fb.signed(i, -Q::one() - obj.0[n + i].clone()))
                .collect();
            return Err(y);
        }
        // Drive zero-level artificials out where possible.
        for r in 0..m {
            if fb.basis[r] >= n {
                if let Some(col) = (0..n).find(|&j| !fb.tab[r][j].is_zero()) {
                    fb.pivot(r, col, &mut obj);
                }
            }
        }
        Ok(fb)
    }

    pub fn maximize(&self, c: &[Q]) -> LpOutcome {
        match self.phase1() {
            Ok(fb) => fb.maximize(c),
            Err(farkas) => LpOutcome::Infeasible { farkas },
        }
    }

    /// Checks feasibility of `x`, the dual inequalities and equal objective values.
    pub fn verify_optimum(&self, c: &[Q], opt: &Optimum) -> bool {
        if opt.x.len() != self.vars
            || opt.y.len() != self.rows.len()
            || opt.x.iter().any(|v| v.is_negative())
        {
            return false;
        }
        let primal_ok = self
            .rows
            .iter()
            .zip(&self.rhs)
            .all(|(row, b)| dot(row, &opt.x) == *b);
        let dual_ok = (0..self.vars).all(|j| {
            let col: Q = self
                .rows
                .iter()
                .zip(&opt.y)
                .map(|(row, y)| &row[j] * y)
                .sum();
            col >= c[j]
        });
        primal_ok && dual_ok && dot(c, &opt.x) == opt.value && dot(&self.rhs, &opt.y) == opt.value
    }

    pub fn verify_farkas(&self, y: &[Q]) -> bool {
        y.len() == self.rows.len()
            && (0..self.vars).all(|j| {
                let col: Q = self.rows.iter().zip(y).map(|(row, yi)| &row[j] * yi).sum();
                !col.is_negative()
            })
            && dot(&self.rhs, y).is_negative()
    }
}

fn dot(a: &[Q], b: &[Q]) -> Q {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl FeasibleBasis {
    fn signed(&self, i: usize, v: Q) -> Q {
        if self.sign[i] {
            -v
        } else {
            v
        }
    }

    /// Reduced costs and the negated objective value for `cost`.
    fn objective_row(&self, cost: &[Q]) -> (Vec<Q>, Q) {
        let mut row = cost.to_vec();
        let mut val = Q::zero();
        for (i, &bv) in self.basis.iter().enumerate() {
            let cb = &cost[bv];
            if cb.is_zero() {
                continue;
            }
            for (r, t) in row.iter_mut().zip(&self.tab[i]) {
                *r -= cb * t;
            }
            val -= cb * &self.rhs[i];
        }
        (row, val)
    }

    fn pivot(&mut self, r: usize, col: usize, obj: &mut (Vec<Q>, Q)) {
        let p = self.tab[r][col].clone();
        for v in self.tab[r].iter_mut() {
            *v /= &p;
        }
        self.rhs[r] /= &p;
        let prow = self.tab[r].clone();
        let prhs = self.rhs[r].clone();
        for i in 0..self.m {
            if i == r || self.tab[i][col].is_zero() {
                continue;
            }
            let f = self.tab[i][col].clone();
            for (v, pv) in self.tab[i].iter_mut().zip(&prow) {
                if !pv.is_zero() {
                    *v -= &f * pv;
                }
            }
            self.rhs[i] -= &f * &prhs;
        }
        if !obj.0[col].is_zero() {
            let f = obj.0[col].clone();
            for (v, pv) in obj.0.iter_mut().zip(&prow) {
                if !pv.is_zero() {
                    *v -= &f * pv;
                }
            }
            obj.1 -= &f * &prhs;
        }
        self.basis[r] = col;
    }

    /// Bland's rule; columns `>= allowed` never enter. Returns the unbounded column, if any.
    fn run(&mut self, obj: &mut (Vec<Q>, Q), allowed: usize) -> Option<usize> {
        loop {
            let Some(col) = (0..allowed).find(|&j| obj.0[j].is_positive()) else {
                return None;
            };
            let mut best: Option<(Q, usize, usize)> = None;
            for i in 0..self.m {
                if self.tab[i][col].is_positive() {
                    let ratio = &self.rhs[i] / &self.tab[i][col];
                    let better = match &best {
                        None => true,
                        Some((br, _, bv)) => ratio < *br || (ratio == *br && self.basis[i] < *bv),
                    };
                    if better {
                        best = Some((ratio, i, self.basis[i]));
                    }
                }
            }
            match best {
                Some((_, r, _)) => self.pivot(r, col, obj),
                None => return Some(col),
            }
        }
    }

    pub fn maximize(&self, c: &[Q]) -> LpOutcome {
        assert_eq!(c.len(), self.n, "objective width");
        let mut fb = self.clone();
        let mut cost = c.to_vec();
        cost.extend((0..self.m).map(|_| Q::zero()));
        let mut obj = fb.objective_row(&cost);
        if let Some(col) = fb.run(&mut obj, self.n) {
            let mut ray = vec![Q::zero(); self.n];
            ray[col] = Q::one();
            for i in 0..self.m {
                if fb.basis[i] < self.n {
                    ray[fb.basis[i]] = -fb.tab[i][col].clone();
                }
            }
            return LpOutcome::Unbounded { ray };
        }
        let mut x = vec![Q::zero(); self.n];
        for i in 0..self.m {
            if fb.basis[i] < self.n {
                x[fb.basis[i]] = fb.rhs[i].clone();
            }
        }
        let y = (0..self.m)
            .map(|i| fb.signed(i, -obj.0[self.n + i].clone()))
            .collect();
        LpOutcome::Optimal(Optimum {
            value: -obj.1,
            x,
            y,
        })
    }
}

//! Smith normal form over `i128` with the unimodular transforms kept alongside.

use crate::error::{Error, Result};

pub type Matrix = Vec<Vec<i128>>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Smith {
    /// Nonzero invariant factors `d₁ | d₂ | …`, all positive.
    pub diagonal: Vec<i128>,
    pub rows: usize,
    pub cols: usize,
    /// `u · m · v` is diagonal.
    pub u: Matrix,
    pub v: Matrix,
}

fn overflow() -> Error {
    Error::Budget("integer overflow in Smith normal form".into())
}

fn identity(n: usize) -> Matrix {
    (0..n)
        .map(|i| (0..n).map(|j| (i == j) as i128).collect())
        .collect()
}

/// `row_dst -= q · row_src`
fn row_sub(a: &mut Matrix, dst: usize, src: usize, q: i128) -> Result<()> {
    if q == 0 {
        return Ok(());
    }
    for j in 0..a[dst].len() {
        let t = q.checked_mul(a[src][j]).ok_or_else(overflow)?;
        a[dst][j] = a[dst][j].checked_sub(t).ok_or_else(overflow)?;
    }
    Ok(())
}

fn col_sub(a: &mut Matrix, dst: usize, src: usize, q: i128) -> Result<()> {
    if q == 0 {
        return Ok(());
    }
    for row in a.iter_mut() {
        let t = q.checked_mul(row[src]).ok_or_else(overflow)?;
        row[dst] = row[dst].checked_sub(t).ok_or_else(overflow)?;
    }
    Ok(())
}

fn swap_cols(a: &mut Matrix, i: usize, j: usize) {
    for row in a.iter_mut() {
        row.swap(i, j);
    }
}

pub fn smith(m: &Matrix, cols: usize) -> Result<Smith> {
    let rows = m.len();
    if m.iter().any(|r| r.len() != cols) {
        return Err(Error::Input("ragged matrix".into()));
    }
    let mut a = m.clone();
    let mut u = identity(rows);
    let mut v = identity(cols);
    let mut diagonal = Vec::new();
    for t in 0..rows.min(cols) {
        loop {
            let pivot = (t..rows)
                .flat_map(|i| (t..cols).map(move |j| (i, j)))
                .filter(|&(i, j)| a[i][j] != 0)
                .min_by_key(|&(i, j)| a[i][j].unsigned_abs());
            let Some((pi, pj)) = pivot else {
                return finish(m, a, u, v, diagonal);
            };
            a.swap(t, pi);
            u.swap(t, pi);
            swap_cols(&mut a, t, pj);
            swap_cols(&mut v, t, pj);
            let p = a[t][t];
            let mut clean = true;
            for i in t + 1..rows {
                let q = a[i][t] / p;
                row_sub(&mut a, i, t, q)?;
                row_sub(&mut u, i, t, q)?;
                clean &= a[i][t] == 0;
            }
            for j in t + 1..cols {
                let q = a[t][j] / p;
                col_sub(&mut a, j, t, q)?;
                col_sub(&mut v, j, t, q)?;
                clean &= a[t][j] == 0;
            }
            if !clean {
                continue;
            }
            let bad = (t + 1..rows).find(|&i| (t + 1..cols).any(|j| a[i][j] % p != 0));
            match bad {
                Some(i) => {
                    row_sub(&mut a, t, i, -1)?;
                    row_sub(&mut u, t, i, -1)?;
                }
                None => break,
            }
        }
        if a[t][t] < 0 {
            for x in a[t].iter_mut() {
                *x = -*x;
            }
            for x in u[t].iter_mut() {
                *x = -*x;
            }
        }
        diagonal.push(a[t][t]);
    }
    finish(m, a, u, v, diagonal)
}

fn finish(m: &Matrix, a: Matrix, u: Matrix, v: Matrix, diagonal: Vec<i128>) -> Result<Smith> {
    let s = Smith {
        rows: a.len(),
        cols: v.len(),
        diagonal,
        u,
        v,
    };
    if !s.verify(m)? {
        return Err(Error::Invariant(
            "Smith normal form failed re-verification".into(),
        ));
    }
    Ok(s)
}

pub fn mat_mul(a: &Matrix, b: &Matrix, inner: usize, cols: usize) -> Result<Matrix> {
    a.iter()
        .map(|row| {
            (0..cols)
                .map(|j| {
                    (0..inner).try_fold(0i128, |acc, k| {
                        row[k]
                            .checked_mul(b[k][j])
                            .and_then(|x| acc.checked_add(x))
                            .ok_or_else(overflow)
                    })
                })
                .collect()
        })
        .collect()
}

impl Smith {
    pub fn rank(&self) -> usize {
        self.diagonal.len()
    }

    /// Free rank of `ℤ^cols / rowspace`.
    pub fn free_rank(&self) -> usize {
        self.cols - self.rank()
    }

    /// Invariant factors greater than one.
    pub fn torsion(&self) -> Vec<i128> {
        self.diagonal.iter().copied().filter(|&d| d > 1).collect()
    }

    /// Checks `u·m·v = diag`, positivity and the divisibility chain.
    pub fn verify(&self, m: &Matrix) -> Result<bool> {
        let um = mat_mul(&self.u, m, self.rows, self.cols)?;
        let d = mat_mul(&um, &self.v, self.cols, self.cols)?;
        for (i, row) in d.iter().enumerate() {
            for (j, &x) in row.iter().enumerate() {
                let want = if i == j && i < self.diagonal.len() {
                    self.diagonal[i]
                } else {
                    0
                };
                if x != want {
                    return Ok(false);
                }
            }
        }
        let chain = self.diagonal.windows(2).all(|w| w[1] % w[0] == 0);
        Ok(chain && self.diagonal.iter().all(|&x| x > 0))
    }

    /// Coordinates of `x` in `ℤ^cols / rowspace`: torsion residues then free part.
    pub fn image(&self, x: &[i128]) -> Result<(Vec<i128>, Vec<i128>)> {
        let w = mat_mul(&vec![x.to_vec()], &self.v, self.cols, self.cols)?.remove(0);
        let torsion = self
            .diagonal
            .iter()
            .zip(&w)
            .filter(|(&d, _)| d > 1)
            .map(|(&d, &x)| x.rem_euclid(d))
            .collect();
        Ok((torsion, w[self.rank()..].to_vec()))
    }

    /// Whether `x` lies in the row lattice.
    pub fn in_lattice(&self, x: &[i128]) -> Result<bool> {
        let (t, f) = self.image(x)?;
        Ok(t.iter().all(|&r| r == 0) && f.iter().all(|&r| r == 0))
    }
}

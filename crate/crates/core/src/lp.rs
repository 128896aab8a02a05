//! Dense simplex for `max c·x  s.t.  A x ≤ b, x ≥ 0` with `b ≥ 0`.
//!
//! The origin is always feasible for the programs built in this crate (all
//! right-hand sides are 1), so a single phase suffices. Bland's rule is used
//! for both entering and leaving choices, which rules out cycling.

use num_traits::Num;

use crate::error::{Error, Result};
use crate::rational::Rational;

pub trait LpField: Clone + Num + PartialOrd + std::fmt::Debug {
    fn is_positive(&self) -> bool;
}

impl LpField for Rational {
    fn is_positive(&self) -> bool {
        *self > Rational::from_integer(0)
    }
}

impl LpField for f64 {
    fn is_positive(&self) -> bool {
        *self > 1e-11
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution<T> {
    pub value: T,
    /// Primal optimum, one entry per column of `A`.
    pub primal: Vec<T>,
    /// Dual optimum, one entry per row of `A`.
    pub dual: Vec<T>,
}

pub fn maximize<T: LpField>(c: &[T], a: &[Vec<T>], b: &[T]) -> Result<LpSolution<T>> {
    let n = c.len();
    let m = a.len();
    if b.len() != m {
        return Err(Error::InvalidInput(format!("{} rows but {} right-hand sides", m, b.len())));
    }
    if a.iter().any(|row| row.len() != n) {
        return Err(Error::InvalidInput("ragged constraint matrix".into()));
    }
    if b.iter().any(|v| *v < T::zero()) {
        return Err(Error::InvalidInput("right-hand side must be non-negative".into()));
    }

    // basic[r] = rhs[r] - Σ_c tab[r][c] * nonbasic[c];  z = z0 + Σ_c obj[c] * nonbasic[c]
    let mut tab: Vec<Vec<T>> = a.to_vec();
    let mut rhs: Vec<T> = b.to_vec();
    let mut obj: Vec<T> = c.to_vec();
    let mut z0 = T::zero();
    let mut basic: Vec<usize> = (n..n + m).collect();
    let mut nonbasic: Vec<usize> = (0..n).collect();

    loop {
        let entering = (0..n)
            .filter(|&col| obj[col].is_positive())
            .min_by_key(|&col| nonbasic[col]);
        let Some(col) = entering else { break };

        let mut leaving: Option<(usize, T)> = None;
        for r in 0..m {
            if !tab[r][col].is_positive() {
                continue;
            }
            let ratio = rhs[r].clone() / tab[r][col].clone();
            leaving = match leaving {
                None => Some((r, ratio)),
                Some((best, best_ratio)) => {
                    let better = (best_ratio.clone() - ratio.clone()).is_positive();
                    let tied = !better && !(ratio.clone() - best_ratio.clone()).is_positive();
                    if better || (tied && basic[r] < basic[best]) {
                        Some((r, ratio))
                    } else {
                        Some((best, best_ratio))
                    }
                }
            };
        }
        let Some((row, _)) = leaving else { return Err(Error::Unbounded) };

        pivot(&mut tab, &mut rhs, &mut obj, &mut z0, row, col);
        std::mem::swap(&mut basic[row], &mut nonbasic[col]);
    }

    let mut primal = vec![T::zero(); n];
    for (r, &var) in basic.iter().enumerate() {
        if var < n {
            primal[var] = rhs[r].clone();
        }
    }
    let mut dual = vec![T::zero(); m];
    for (col, &var) in nonbasic.iter().enumerate() {
        if var >= n {
            dual[var - n] = T::zero() - obj[col].clone();
        }
    }
    Ok(LpSolution { value: z0, primal, dual })
}

fn pivot<T: LpField>(
    tab: &mut [Vec<T>],
    rhs: &mut [T],
    obj: &mut [T],
    z0: &mut T,
    row: usize,
    col: usize,
) {
    let p = tab[row][col].clone();
    let n = obj.len();

    for (c, x) in tab[row].iter_mut().enumerate().take(n) {
        if c != col {
            *x = x.clone() / p.clone();
        }
    }
    rhs[row] = rhs[row].clone() / p.clone();
    tab[row][col] = T::one() / p;

    let pivot_row = tab[row].clone();
    let pivot_rhs = rhs[row].clone();
    for (r, line) in tab.iter_mut().enumerate() {
        if r == row || line[col].is_zero() {
            continue;
        }
        let f = line[col].clone();
        for c in 0..n {
            if c != col {
                line[c] = line[c].clone() - f.clone() * pivot_row[c].clone();
            }
        }
        rhs[r] = rhs[r].clone() - f.clone() * pivot_rhs.clone();
        line[col] = T::zero() - f * pivot_row[col].clone();
    }

    let f = obj[col].clone();
    for c in 0..n {
        if c != col {
            obj[c] = obj[c].clone() - f.clone() * pivot_row[c].clone();
        }
    }
    *z0 = z0.clone() + f.clone() * pivot_rhs;
    obj[col] = T::zero() - f * pivot_row[col].clone();
}

//! Dense tableau simplex for `max c.x  s.t.  A x <= b, x >= 0` with `b >= 0`,
//! generic over the scalar so the same code runs in exact rationals and in
//! floating point. Bland's rule prevents cycling.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Num, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub trait LpScalar: Clone + Num + Signed + PartialOrd + std::fmt::Debug {
    fn from_f64(v: f64) -> Self;
    fn to_f64(&self) -> f64;
    /// Sign tests; floating point uses a small absolute tolerance.
    fn is_pos(&self) -> bool;
    fn is_neg(&self) -> bool;
}

const FLOAT_EPS: f64 = 1e-12;

impl LpScalar for f64 {
    fn from_f64(v: f64) -> Self {
        v
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn is_pos(&self) -> bool {
        *self > FLOAT_EPS
    }

    fn is_neg(&self) -> bool {
        *self < -FLOAT_EPS
    }
}

impl LpScalar for BigRational {
    /// Exact binary value of the float.
    fn from_f64(v: f64) -> Self {
        BigRational::from_float(v).unwrap_or_else(|| BigRational::from_integer(BigInt::zero()))
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn is_pos(&self) -> bool {
        self.is_positive()
    }

    fn is_neg(&self) -> bool {
        self.is_negative()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution<T> {
    pub objective: T,
    /// Primal variables.
    pub x: Vec<T>,
    /// Dual variables, one per constraint (`y >= 0`, `A^T y >= c`).
    pub y: Vec<T>,
    pub pivots: usize,
}

impl<T: LpScalar> LpSolution<T> {
    /// `|c.x - b.y|`, zero at an exact optimum.
    pub fn duality_gap(&self, b: &[T]) -> f64 {
        let dual = self.y.iter().zip(b).fold(T::zero(), |acc, (y, b)| acc + y.clone() * b.clone());
        (self.objective.clone() - dual).abs().to_f64()
    }
}

const MAX_PIVOTS: usize = 100_000;

/// Solve `max c.x  s.t.  A x <= b, x >= 0`; every `b_i` must be nonnegative
/// so that the slack basis is feasible.
pub fn maximize<T: LpScalar>(a: &[Vec<T>], b: &[T], c: &[T]) -> Result<LpSolution<T>> {
    let m = a.len();
    let n = c.len();
    if b.len() != m || a.iter().any(|row| row.len() != n) {
        return Err(Error::Lp("constraint matrix does not match b and c".into()));
    }
    if b.iter().any(|v| v.is_negative()) {
        return Err(Error::Lp("right-hand side must be nonnegative".into()));
    }
    let width = n + m + 1;
    let mut t: Vec<Vec<T>> = Vec::with_capacity(m + 1);
    for (i, row) in a.iter().enumerate() {
        let mut r = Vec::with_capacity(width);
        r.extend(row.iter().cloned());
        r.extend((0..m).map(|k| if k == i { T::one() } else { T::zero() }));
        r.push(b[i].clone());
        t.push(r);
    }
    let mut obj: Vec<T> = c.iter().map(|v| -v.clone()).collect();
    obj.extend((0..=m).map(|_| T::zero()));
    t.push(obj);
    let mut basis: Vec<usize> = (n..n + m).collect();

    let mut pivots = 0;
    loop {
        let Some(col) = (0..n + m).find(|&j| t[m][j].is_neg()) else {
            break;
        };
        let mut row: Option<usize> = None;
        for i in 0..m {
            if !t[i][col].is_pos() {
                continue;
            }
            row = match row {
                None => Some(i),
                Some(r) => {
                    let lhs = t[i][width - 1].clone() * t[r][col].clone();
                    let rhs = t[r][width - 1].clone() * t[i][col].clone();
                    if lhs < rhs || (lhs == rhs && basis[i] < basis[r]) {
                        Some(i)
                    } else {
                        Some(r)
                    }
                }
            };
        }
        let Some(row) = row else {
            return Err(Error::Lp("objective is unbounded".into()));
        };
        pivot(&mut t, row, col);
        basis[row] = col;
        pivots += 1;
        if pivots > MAX_PIVOTS {
            return Err(Error::Lp(format!("no convergence after {MAX_PIVOTS} pivots")));
        }
    }

    let mut x = vec![T::zero(); n];
    for (i, &bv) in basis.iter().enumerate() {
        if bv < n {
            x[bv] = t[i][width - 1].clone();
        }
    }
    let y = (0..m).map(|i| t[m][n + i].clone()).collect();
    Ok(LpSolution { objective: t[m][width - 1].clone(), x, y, pivots })
}

fn pivot<T: LpScalar>(t: &mut [Vec<T>], row: usize, col: usize) {
    let p = t[row][col].clone();
    for v in t[row].iter_mut() {
        *v = v.clone() / p.clone();
    }
    let pivot_row = t[row].clone();
    for (i, r) in t.iter_mut().enumerate() {
        if i == row || r[col].is_zero() {
            continue;
        }
        let f = r[col].clone();
        for (v, pv) in r.iter_mut().zip(&pivot_row) {
            if !pv.is_zero() {
                *v = v.clone() - f.clone() * pv.clone();
            }
        }
    }
}

/// Convert a float problem to exact rationals.
pub fn to_rational(v: &[f64]) -> Vec<BigRational> {
    v.iter().map(|&x| BigRational::from_f64(x)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn textbook_problem() {
        // max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18 -> (2, 6), 36
        let a = vec![vec![1.0, 0.0], vec![0.0, 2.0], vec![3.0, 2.0]];
        let s = maximize(&a, &[4.0, 12.0, 18.0], &[3.0, 5.0]).unwrap();
        assert!((s.objective - 36.0).abs() < 1e-12);
        assert!((s.x[0] - 2.0).abs() < 1e-12 && (s.x[1] - 6.0).abs() < 1e-12);
        assert!(s.duality_gap(&[4.0, 12.0, 18.0]) < 1e-12);

        let ar: Vec<Vec<BigRational>> = a.iter().map(|r| to_rational(r)).collect();
        let br = to_rational(&[4.0, 12.0, 18.0]);
        let s = maximize(&ar, &br, &to_rational(&[3.0, 5.0])).unwrap();
        assert_eq!(s.objective, rat(36, 1));
        assert_eq!(s.y, vec![rat(0, 1), rat(3, 2), rat(1, 1)]);
        assert_eq!(s.duality_gap(&br), 0.0);
    }

    #[test]
    fn unbounded_and_malformed() {
        assert!(matches!(maximize(&[vec![-1.0]], &[1.0], &[1.0]), Err(Error::Lp(_))));
        assert!(maximize(&[vec![1.0]], &[-1.0], &[1.0]).is_err());
        assert!(maximize(&[vec![1.0, 2.0]], &[1.0], &[1.0]).is_err());
    }

    #[test]
    fn degenerate_problem_terminates() {
        // a classic cycling example under the largest-coefficient rule
        let a = vec![
            vec![0.5, -5.5, -2.5, 9.0],
            vec![0.5, -1.5, -0.5, 1.0],
            vec![1.0, 0.0, 0.0, 0.0],
        ];
        let s = maximize(&a, &[0.0, 0.0, 1.0], &[10.0, -57.0, -9.0, -24.0]).unwrap();
        assert!((s.objective - 1.0).abs() < 1e-12);
    }
}

//! Smith normal form over the integers.
//!
//! Elimination works on arbitrary-precision entries and always pivots on an
//! entry of least absolute value in the remaining block. The transforms and
//! their inverses are accumulated alongside, so callers get `U`, `V` and
//! `U⁻¹`, `V⁻¹` without a separate inversion.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};

use crate::intmat::IntMatrix;

/// `u · m · v = d` with `d` diagonal, `d_i | d_{i+1}`, nonnegative entries,
/// and `u`, `v` unimodular.
#[derive(Clone, Debug, PartialEq)]
pub struct SmithForm {
    pub u: IntMatrix,
    pub u_inv: IntMatrix,
    pub d: IntMatrix,
    pub v: IntMatrix,
    pub v_inv: IntMatrix,
}

impl SmithForm {
    pub fn diagonal(&self) -> Vec<BigInt> {
        (0..self.d.rows().min(self.d.cols()))
            .map(|i| self.d[(i, i)].clone())
            .collect()
    }

    /// Number of nonzero invariant factors.
    pub fn rank(&self) -> usize {
        self.diagonal().iter().filter(|x| !x.is_zero()).count()
    }

    /// Nonzero invariant factors.
    pub fn invariant_factors(&self) -> Vec<BigInt> {
        self.diagonal().into_iter().filter(|x| !x.is_zero()).collect()
    }
}

struct Work {
    m: IntMatrix,
    u: IntMatrix,
    u_inv: IntMatrix,
    v: IntMatrix,
    v_inv: IntMatrix,
}

impl Work {
    fn row_add(&mut self, target: usize, source: usize, f: &BigInt) {
        self.m.add_row_multiple(target, source, f);
        self.u.add_row_multiple(target, source, f);
        self.u_inv.add_col_multiple(source, target, &-f);
    }

    fn col_add(&mut self, target: usize, source: usize, f: &BigInt) {
        self.m.add_col_multiple(target, source, f);
        self.v.add_col_multiple(target, source, f);
        self.v_inv.add_row_multiple(source, target, &-f);
    }

    fn row_swap(&mut self, a: usize, b: usize) {
        self.m.swap_rows(a, b);
        self.u.swap_rows(a, b);
        self.u_inv.swap_cols(a, b);
    }

    fn col_swap(&mut self, a: usize, b: usize) {
        self.m.swap_cols(a, b);
        self.v.swap_cols(a, b);
        self.v_inv.swap_rows(a, b);
    }

    fn row_negate(&mut self, i: usize) {
        self.m.negate_row(i);
        self.u.negate_row(i);
        self.u_inv.negate_col(i);
    }

    fn min_entry(&self, t: usize) -> Option<(usize, usize)> {
        let mut best: Option<(usize, usize)> = None;
        for i in t..self.m.rows() {
            for j in t..self.m.cols() {
                let x = &self.m[(i, j)];
                if x.is_zero() {
                    continue;
                }
                match best {
                    Some(b) if self.m[b].abs() <= x.abs() => {}
                    _ => best = Some((i, j)),
                }
            }
        }
        best
    }
}

pub fn smith_normal_form(m: &IntMatrix) -> SmithForm {
    let (rows, cols) = (m.rows(), m.cols());
    let mut w = Work {
        m: m.clone(),
        u: IntMatrix::identity(rows),
        u_inv: IntMatrix::identity(rows),
        v: IntMatrix::identity(cols),
        v_inv: IntMatrix::identity(cols),
    };
    for t in 0..rows.min(cols) {
        let Some((pi, pj)) = w.min_entry(t) else {
            break;
        };
        w.row_swap(t, pi);
        w.col_swap(t, pj);
        loop {
            let mut dirty = false;
            for i in t + 1..rows {
                if w.m[(i, t)].is_zero() {
                    continue;
                }
                let q = w.m[(i, t)].div_floor(&w.m[(t, t)]);
                w.row_add(i, t, &-q);
                if !w.m[(i, t)].is_zero() {
                    // Remainder smaller than the pivot: make it the pivot.
                    w.row_swap(t, i);
                    dirty = true;
                }
            }
            for j in t + 1..cols {
                if w.m[(t, j)].is_zero() {
                    continue;
                }
                let q = w.m[(t, j)].div_floor(&w.m[(t, t)]);
                w.col_add(j, t, &-q);
                if !w.m[(t, j)].is_zero() {
                    w.col_swap(t, j);
                    dirty = true;
                }
            }
            if dirty {
                continue;
            }
            // Row and column cleared; enforce divisibility of the rest.
            let pivot = w.m[(t, t)].clone();
            let offender = (t + 1..rows).find(|&i| {
                (t + 1..cols).any(|j| !w.m[(i, j)].mod_floor(&pivot).is_zero())
            });
            match offender {
                Some(i) => w.row_add(t, i, &BigInt::from(1)),
                None => break,
            }
        }
        if w.m[(t, t)].is_negative() {
            w.row_negate(t);
        }
    }
    SmithForm {
        u: w.u,
        u_inv: w.u_inv,
        d: w.m,
        v: w.v,
        v_inv: w.v_inv,
    }
}

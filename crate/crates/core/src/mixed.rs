//! The mixed quotient of `H^1(Γ_k, ℝ)` under an eventual transition matrix.
//!
//! Uses the eigenspace criterion: classes in the generalized eigenspaces of
//! eigenvalues with modulus below one are asymptotically negligible, and the
//! mixed group is what remains.
//!
//! Eigenvalues on the unit circle are neither contracting nor expanding. For
//! integer matrices those that are roots of unity are certified exactly (they
//! count as non-negligible); any other eigenvalue within `tol` of the unit
//! circle is refused.

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_integer::Integer;
use rand::{Rng, RngExt};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::intmat::IntMatrix;
use crate::snf::smith_normal_form;

/// Largest size for which root-of-unity certification is attempted.
const MAX_CERTIFIED_SIZE: usize = 6;

pub const DEFAULT_TOLERANCE: f64 = 1e-9;

/// Label recorded in reports for where the criterion comes from.
pub const CRITERION: &str = "CS-criterion";

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MixedQuotient {
    pub total_dim: usize,
    pub negligible_dim: usize,
    pub mixed_dim: usize,
    pub eigenvalue_moduli: Vec<f64>,
    /// Eigenvalues exactly on the unit circle (roots of unity), certified.
    pub unit_circle_dim: usize,
    pub criterion: &'static str,
}

/// Splits `ℝ^n` under `m` into contracting and non-contracting generalized
/// eigenspaces. Errors on an eigenvalue within `tol` of the unit circle
/// unless it is a certified root of unity.
pub fn mixed_quotient(m: &[Vec<f64>], tol: f64) -> Result<MixedQuotient> {
    let n = m.len();
    if m.iter().any(|row| row.len() != n) {
        return Err(Error::DimensionMismatch("mixed quotient needs a square matrix".into()));
    }
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::InvalidArgument(format!("tolerance {tol} outside (0, 1)")));
    }
    if n == 0 {
        return Ok(MixedQuotient {
            total_dim: 0,
            negligible_dim: 0,
            mixed_dim: 0,
            eigenvalue_moduli: vec![],
            unit_circle_dim: 0,
            criterion: CRITERION,
        });
    }
    let mat = DMatrix::from_fn(n, n, |i, j| m[i][j]);
    let mut moduli: Vec<f64> = mat.complex_eigenvalues().iter().map(|z| z.norm()).collect();
    moduli.sort_by(f64::total_cmp);
    let marginal: Vec<f64> = moduli.iter().copied().filter(|r| (r - 1.0).abs() < tol).collect();
    let mut unit_circle_dim = 0;
    if !marginal.is_empty() {
        match roots_of_unity_dim(m) {
            Some(d) if d == marginal.len() => unit_circle_dim = d,
            _ => return Err(Error::MarginalEigenvalue { modulus: marginal[0] }),
        }
    }
    let negligible_dim = moduli.iter().filter(|&&r| r < 1.0 - tol).count();
    Ok(MixedQuotient {
        total_dim: n,
        negligible_dim,
        mixed_dim: n - negligible_dim,
        eigenvalue_moduli: moduli,
        unit_circle_dim,
        criterion: CRITERION,
    })
}

/// Outcome of recomputing the quotient for random conjugates `P M P⁻¹`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConjugationReport {
    pub conjugators: usize,
    /// Integer matrices are conjugated by random unimodular `P`, which keeps
    /// the conjugate integral; other matrices by random real `P`.
    pub integral: bool,
    pub reference: MixedQuotient,
    /// Trials whose conjugate gave a different split, with the error if any.
    pub mismatches: Vec<(usize, String)>,
}

fn is_integral(m: &[Vec<f64>]) -> bool {
    m.iter().flatten().all(|x| x.fract() == 0.0 && x.abs() <= 2f64.powi(52))
}

/// A random unimodular matrix and its inverse, from elementary row operations.
fn random_unimodular<R: Rng>(n: usize, rng: &mut R) -> (IntMatrix, IntMatrix) {
    let mut p = IntMatrix::identity(n);
    let mut inv = IntMatrix::identity(n);
    if n < 2 {
        return (p, inv);
    }
    for _ in 0..4 * n {
        let i = rng.random_range(0..n);
        let j = (i + rng.random_range(1..n)) % n;
        let c: i64 = rng.random_range(-2..=2);
        p.add_row_multiple(i, j, &BigInt::from(c));
        // (E_ij(c))⁻¹ = E_ij(−c), applied on the right in reverse order.
        inv.add_col_multiple(j, i, &BigInt::from(-c));
    }
    (p, inv)
}

/// Checks that the split is unchanged under `count` random conjugations.
pub fn conjugation_invariance<R: Rng>(m: &[Vec<f64>], count: usize, tol: f64, rng: &mut R) -> Result<ConjugationReport> {
    let reference = mixed_quotient(m, tol)?;
    let n = m.len();
    let integral = is_integral(m);
    let mut mismatches = Vec::new();
    for trial in 0..count {
        let conj: Vec<Vec<f64>> = if integral {
            let rows: Vec<Vec<i64>> = m.iter().map(|r| r.iter().map(|&x| x as i64).collect()).collect();
            let (p, inv) = random_unimodular(n, rng);
            (&(&p * &IntMatrix::from_rows(&rows)) * &inv).to_f64_rows()
        } else {
            let base = DMatrix::from_fn(n, n, |i, j| m[i][j]);
            let (p, inv) = loop {
                let p: DMatrix<f64> = DMatrix::from_fn(n, n, |_, _| rng.random_range(-3.0..3.0));
                if p.determinant().abs() > 0.1 {
                    if let Some(inv) = p.clone().try_inverse() {
                        break (p, inv);
                    }
                }
            };
            let c = p * base * inv;
            (0..n).map(|i| (0..n).map(|j| c[(i, j)]).collect()).collect()
        };
        match mixed_quotient(&conj, tol) {
            Ok(q) if q.mixed_dim == reference.mixed_dim && q.negligible_dim == reference.negligible_dim => {}
            Ok(q) => mismatches.push((trial, format!("mixed_dim {} negligible_dim {}", q.mixed_dim, q.negligible_dim))),
            Err(e) => mismatches.push((trial, e.to_string())),
        }
    }
    Ok(ConjugationReport {
        conjugators: count,
        integral,
        reference,
        mismatches,
    })
}

/// Euler's totient.
fn totient(m: u64) -> u64 {
    (1..=m).filter(|j| j.gcd(&m) == 1).count() as u64
}

/// Total multiplicity of root-of-unity eigenvalues of an integer matrix, or
/// `None` if the matrix is not integral or too large to certify.
///
/// A root of unity of order `o` is an eigenvalue of an `n × n` integer matrix
/// only if `φ(o) ≤ n`; with `L` the lcm of all such orders, the multiplicity
/// is the nullity of `(M^L − I)^n`.
fn roots_of_unity_dim(m: &[Vec<f64>]) -> Option<usize> {
    let n = m.len();
    if n > MAX_CERTIFIED_SIZE || m.iter().flatten().any(|x| x.fract() != 0.0 || x.abs() > 2f64.powi(52)) {
        return None;
    }
    let rows: Vec<Vec<i64>> = m.iter().map(|r| r.iter().map(|&x| x as i64).collect()).collect();
    let mat = IntMatrix::from_rows(&rows);
    // φ(o) ≥ sqrt(o / 2), so orders beyond 2n² cannot occur.
    let l = (1..=2 * (n as u64).pow(2) + 2)
        .filter(|&o| totient(o) <= n as u64)
        .fold(1u64, |acc, o| acc.lcm(&o));
    let mut shifted = mat.pow(l as u32);
    for i in 0..n {
        shifted[(i, i)] -= 1;
    }
    let rank = smith_normal_form(&shifted.pow(n as u32)).rank();
    Some(n - rank)
}

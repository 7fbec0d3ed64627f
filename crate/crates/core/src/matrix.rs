//! Exact nonnegative unimodular integer matrices.
//!
//! A transition matrix encodes a finite induction sequence via the relation
//! `w_old = Q · w_new`. Entries are arbitrary-precision integers because
//! stage products outgrow 64 bits quickly; the determinant is verified with
//! fraction-free (Bareiss) elimination so unimodularity never rests on
//! floating arithmetic.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::exchange::BranchId;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransitionMatrix {
    n: usize,
    entries: Vec<BigInt>, // row-major
}

impl TransitionMatrix {
    pub fn identity(n: usize) -> Self {
        let mut entries = vec![BigInt::zero(); n * n];
        for i in 0..n {
            entries[i * n + i] = BigInt::one();
        }
        TransitionMatrix { n, entries }
    }

    /// Identity plus a single unit entry at (winner, loser).
    pub fn elementary(n: usize, winner: BranchId, loser: BranchId) -> Self {
        debug_assert_ne!(winner, loser);
        let mut m = TransitionMatrix::identity(n);
        m.entries[winner.index() * n + loser.index()] = BigInt::one();
        m
    }

    /// Validates nonnegativity and determinant 1.
    pub fn from_rows(rows: Vec<Vec<BigInt>>) -> Result<Self> {
        let n = rows.len();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    left: n,
                    right: row.len(),
                });
            }
            for (j, v) in row.iter().enumerate() {
                if v.is_negative() {
                    return Err(Error::NegativeEntry { row: i, col: j });
                }
            }
        }
        let m = TransitionMatrix {
            n,
            entries: rows.into_iter().flatten().collect(),
        };
        m.verify_unimodular()?;
        Ok(m)
    }

    pub fn from_i64_rows(rows: &[&[i64]]) -> Result<Self> {
        TransitionMatrix::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|&v| BigInt::from(v)).collect())
                .collect(),
        )
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn entry(&self, row: usize, col: usize) -> &BigInt {
        &self.entries[row * self.n + col]
    }

    pub fn is_identity(&self) -> bool {
        *self == TransitionMatrix::identity(self.n)
    }

    /// Exact product; the result is re-verified to have determinant 1.
    pub fn compose(&self, rhs: &TransitionMatrix) -> Result<TransitionMatrix> {
        if self.n != rhs.n {
            return Err(Error::DimensionMismatch {
                left: self.n,
                right: rhs.n,
            });
        }
        let n = self.n;
        let mut entries = vec![BigInt::zero(); n * n];
        for i in 0..n {
            for k in 0..n {
                let a = &self.entries[i * n + k];
                if a.is_zero() {
                    continue;
                }
                for j in 0..n {
                    let b = &rhs.entries[k * n + j];
                    if !b.is_zero() {
                        entries[i * n + j] += a * b;
                    }
                }
            }
        }
        let m = TransitionMatrix { n, entries };
        m.verify_unimodular()?;
        Ok(m)
    }

    /// In-place right multiplication by the elementary matrix
    /// `I + e_(winner, loser)`: adds column `winner` into column `loser`.
    /// Used by stage accumulation; unimodularity is preserved by
    /// construction (each factor has determinant 1).
    pub(crate) fn push_elementary(&mut self, winner: BranchId, loser: BranchId) {
        let n = self.n;
        let (w, l) = (winner.index(), loser.index());
        debug_assert_ne!(w, l);
        for i in 0..n {
            let add = self.entries[i * n + w].clone();
            self.entries[i * n + l] += add;
        }
    }

    /// Fraction-free Bareiss elimination; exact over the integers.
    pub fn determinant(&self) -> BigInt {
        let n = self.n;
        if n == 0 {
            return BigInt::one();
        }
        let mut m = self.entries.clone();
        let mut prev = BigInt::one();
        let mut sign = false;
        for k in 0..n - 1 {
            if m[k * n + k].is_zero() {
                match (k + 1..n).find(|&r| !m[r * n + k].is_zero()) {
                    Some(r) => {
                        for j in 0..n {
                            m.swap(k * n + j, r * n + j);
                        }
                        sign = !sign;
                    }
                    None => return BigInt::zero(),
                }
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let num = &m[i * n + j] * &m[k * n + k] - &m[i * n + k] * &m[k * n + j];
                    m[i * n + j] = num / &prev; // exact by Bareiss
                }
                m[i * n + k] = BigInt::zero();
            }
            prev = m[k * n + k].clone();
        }
        let det = m[(n - 1) * n + (n - 1)].clone();
        if sign {
            -det
        } else {
            det
        }
    }

    pub fn verify_unimodular(&self) -> Result<()> {
        let det = self.determinant();
        if det.is_one() {
            Ok(())
        } else {
            Err(Error::Unimodularity { det })
        }
    }

    pub fn is_nonnegative(&self) -> bool {
        self.entries.iter().all(|v| !v.is_negative())
    }

    pub fn column_sum(&self, col: usize) -> BigInt {
        (0..self.n).map(|i| self.entries[i * self.n + col].clone()).sum()
    }

    pub fn column_sums(&self) -> Vec<BigInt> {
        (0..self.n).map(|j| self.column_sum(j)).collect()
    }

    pub fn columns_strictly_positive(&self) -> bool {
        self.entries.iter().all(|v| v.is_positive())
    }

    /// Columns that are identically zero (impossible for unimodular
    /// matrices, reported by [`crate::projective::apply_projective`] when a
    /// degenerate matrix slips through).
    pub fn zero_columns(&self) -> Vec<usize> {
        (0..self.n)
            .filter(|&j| (0..self.n).all(|i| self.entries[i * self.n + j].is_zero()))
            .collect()
    }

    /// `y = Q · x` over the integers, with `x` given as BigInt entries.
    pub fn apply_bigint(&self, x: &[BigInt]) -> Result<Vec<BigInt>> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch {
                left: self.n,
                right: x.len(),
            });
        }
        Ok((0..self.n)
            .map(|i| {
                (0..self.n)
                    .map(|j| &self.entries[i * self.n + j] * &x[j])
                    .sum()
            })
            .collect())
    }

    /// JSON array of arrays of decimal strings; entries may exceed the
    /// 64-bit range after long products.
    pub fn to_json(&self) -> Value {
        Value::Array(
            (0..self.n)
                .map(|i| {
                    Value::Array(
                        (0..self.n)
                            .map(|j| Value::String(self.entry(i, j).to_string()))
                            .collect(),
                    )
                })
                .collect(),
        )
    }

    /// Accepts decimal strings or plain JSON integers.
    pub fn from_json(value: &Value) -> Result<Self> {
        let rows = value
            .as_array()
            .ok_or_else(|| Error::Parse("matrix must be an array of rows".into()))?;
        let mut out: Vec<Vec<BigInt>> = Vec::with_capacity(rows.len());
        for row in rows {
            let cells = row
                .as_array()
                .ok_or_else(|| Error::Parse("matrix row must be an array".into()))?;
            let mut parsed = Vec::with_capacity(cells.len());
            for cell in cells {
                let v: BigInt = match cell {
                    Value::String(s) => s
                        .parse()
                        .map_err(|_| Error::Parse(format!("bad matrix entry `{s}`")))?,
                    Value::Number(n) => {
                        let i = n
                            .as_i64()
                            .ok_or_else(|| Error::Parse(format!("bad matrix entry `{n}`")))?;
                        BigInt::from(i)
                    }
                    other => return Err(Error::Parse(format!("bad matrix entry `{other}`"))),
                };
                parsed.push(v);
            }
            out.push(parsed);
        }
        TransitionMatrix::from_rows(out)
    }
}

impl std::fmt::Display for TransitionMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for i in 0..self.n {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "[")?;
            for j in 0..self.n {
                if j > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{}", self.entry(i, j))?;
            }
            write!(f, "]")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Independent oracle: cofactor expansion. Exponential, but fine at the
    /// sizes the tests use; kept free of the Bareiss path it checks.
    fn det_cofactor(m: &[Vec<BigInt>]) -> BigInt {
        let n = m.len();
        if n == 0 {
            return BigInt::one();
        }
        if n == 1 {
            return m[0][0].clone();
        }
        let mut det = BigInt::zero();
        for j in 0..n {
            if m[0][j].is_zero() {
                continue;
            }
            let minor: Vec<Vec<BigInt>> = (1..n)
                .map(|i| {
                    (0..n)
                        .filter(|&c| c != j)
                        .map(|c| m[i][c].clone())
                        .collect()
                })
                .collect();
            let term = &m[0][j] * det_cofactor(&minor);
            if j % 2 == 0 {
                det += term;
            } else {
                det -= term;
            }
        }
        det
    }

    fn rows_of(m: &TransitionMatrix) -> Vec<Vec<BigInt>> {
        (0..m.size())
            .map(|i| (0..m.size()).map(|j| m.entry(i, j).clone()).collect())
            .collect()
    }

    #[test]
    fn identity_law() {
        let q = TransitionMatrix::from_i64_rows(&[&[2, 1], &[1, 1]]).unwrap();
        let id = TransitionMatrix::identity(2);
        assert_eq!(id.compose(&q).unwrap(), q);
        assert_eq!(q.compose(&id).unwrap(), q);
    }

    #[test]
    fn elementary_product() {
        let e1 = TransitionMatrix::from_i64_rows(&[&[1, 1], &[0, 1]]).unwrap();
        let e2 = TransitionMatrix::from_i64_rows(&[&[1, 0], &[1, 1]]).unwrap();
        let p = e1.compose(&e2).unwrap();
        assert_eq!(p, TransitionMatrix::from_i64_rows(&[&[2, 1], &[1, 1]]).unwrap());
        assert!(p.determinant().is_one());
    }

    #[test]
    fn rejects_non_unimodular_and_negative() {
        assert!(matches!(
            TransitionMatrix::from_i64_rows(&[&[2, 0], &[0, 1]]),
            Err(Error::Unimodularity { .. })
        ));
        assert!(matches!(
            TransitionMatrix::from_i64_rows(&[&[1, 0], &[-1, 1]]),
            Err(Error::NegativeEntry { .. })
        ));
    }

    #[test]
    fn dimension_mismatch() {
        let a = TransitionMatrix::identity(2);
        let b = TransitionMatrix::identity(3);
        assert!(matches!(
            a.compose(&b),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn bareiss_matches_cofactor_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 1..=5usize {
            for _ in 0..40 {
                let rows: Vec<Vec<BigInt>> = (0..n)
                    .map(|_| (0..n).map(|_| BigInt::from(rng.gen_range(-6i64..=6))).collect())
                    .collect();
                let m = TransitionMatrix {
                    n,
                    entries: rows.iter().flatten().cloned().collect(),
                };
                assert_eq!(m.determinant(), det_cofactor(&rows));
            }
        }
    }

    #[test]
    fn long_random_elementary_product_stays_unimodular() {
        let n = 4;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut product = TransitionMatrix::identity(n);
        for _ in 0..1000 {
            let w = rng.gen_range(0..n);
            let mut l = rng.gen_range(0..n);
            while l == w {
                l = rng.gen_range(0..n);
            }
            product.push_elementary(BranchId(w), BranchId(l));
        }
        assert!(product.is_nonnegative());
        assert!(product.determinant().is_one());
        assert_eq!(product.determinant(), det_cofactor(&rows_of(&product)));
    }

    #[test]
    fn json_round_trip() {
        let q = TransitionMatrix::from_i64_rows(&[&[2, 1], &[1, 1]]).unwrap();
        let json = q.to_json();
        let back = TransitionMatrix::from_json(&json).unwrap();
        assert_eq!(q, back);
    }
}

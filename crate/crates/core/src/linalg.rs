//! Dense square matrices over a semiring and their Kleene closure.

use std::fmt;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::semiring::{Prob, Semiring};

/// Entries of `(I − M)⁻¹` below this are treated as evidence of an invalid
/// (non-substochastic) input rather than rounding noise.
pub const NEGATIVE_ENTRY_TOLERANCE: f64 = 1e-9;

/// A `dim × dim` row-major matrix over `S`.
#[derive(Clone, PartialEq)]
pub struct SquareMatrix<S> {
    dim: usize,
    entries: Vec<S>,
}

impl<S: Semiring> SquareMatrix<S> {
    /// The zero matrix 𝐎.
    pub fn zeros(dim: usize) -> Self {
        SquareMatrix {
            dim,
            entries: vec![S::zero(); dim * dim],
        }
    }

    /// The unit matrix 𝐈.
    pub fn identity(dim: usize) -> Self {
        Self::from_fn(dim, |i, j| if i == j { S::one() } else { S::zero() })
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> S) -> Self {
        let mut entries = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                entries.push(f(i, j));
            }
        }
        SquareMatrix { dim, entries }
    }

    /// Builds a matrix from rows. Panics if the rows are ragged.
    pub fn from_rows(rows: Vec<Vec<S>>) -> Self {
        let dim = rows.len();
        let mut entries = Vec::with_capacity(dim * dim);
        for row in rows {
            assert_eq!(row.len(), dim, "ragged matrix rows");
            entries.extend(row);
        }
        SquareMatrix { dim, entries }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline(always)]
    pub fn get(&self, i: usize, j: usize) -> S {
        self.entries[i * self.dim + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: S) {
        self.entries[i * self.dim + j] = value;
    }

    #[inline(always)]
    pub fn row(&self, i: usize) -> &[S] {
        &self.entries[i * self.dim..(i + 1) * self.dim]
    }

    pub fn entries(&self) -> &[S] {
        &self.entries
    }

    fn check_dims(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                left: self.dim,
                right: other.dim,
            });
        }
        Ok(())
    }

    /// Entrywise ⊕.
    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_dims(other)?;
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(&a, &b)| a.add(b))
            .collect();
        Ok(SquareMatrix {
            dim: self.dim,
            entries,
        })
    }

    /// `(A·B)ᵢⱼ = ⊕ₖ Aᵢₖ ⊗ Bₖⱼ`.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_dims(other)?;
        let d = self.dim;
        let mut out = Self::zeros(d);
        for i in 0..d {
            for k in 0..d {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                let b_row = other.row(k);
                let out_row = &mut out.entries[i * d..(i + 1) * d];
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o = o.add(a.mul(b));
                }
            }
        }
        Ok(out)
    }

    /// Kleene closure `M* = ⊕_{k≥0} Mᵏ` by Lehmann's algorithm.
    ///
    /// Step `j` adds every path that passes through node `j` as its highest
    /// intermediate node: `Mᵢₖ ← Mᵢₖ ⊕ Mᵢⱼ ⊗ (Mⱼⱼ)* ⊗ Mⱼₖ`. Row `j` and
    /// column `j` are snapshotted before the step so the update can happen in
    /// place without re-reading entries already modified by the same step.
    /// The result is `𝐈 ⊕ M⁽ᵈ⁾`.
    pub fn lehmann_closure(&self) -> Result<Self> {
        let d = self.dim;
        let mut m = self.entries.clone();
        let mut scaled_col = vec![S::zero(); d];
        let mut pivot_row = vec![S::zero(); d];
        for j in 0..d {
            let pivot = m[j * d + j].pivot_star()?;
            for i in 0..d {
                scaled_col[i] = m[i * d + j].mul(pivot);
            }
            pivot_row.copy_from_slice(&m[j * d..(j + 1) * d]);
            for (i, &a) in scaled_col.iter().enumerate() {
                if a.is_zero() {
                    continue;
                }
                let row = &mut m[i * d..(i + 1) * d];
                for (x, &b) in row.iter_mut().zip(&pivot_row) {
                    *x = x.add(a.mul(b));
                }
            }
        }
        for i in 0..d {
            m[i * d + i] = S::one().add(m[i * d + i]);
        }
        Ok(SquareMatrix { dim: d, entries: m })
    }

    /// `M ↦ 𝐈 ⊕ M·X` applied to `x`; equal to `x` when `x = M*`.
    pub fn closure_step(&self, x: &Self) -> Result<Self> {
        Self::identity(self.dim).add(&self.mul(x)?)
    }
}

/// `(I − M)⁻¹` by a dense real LU solve with partial pivoting.
///
/// Only meaningful in the probability semiring. Fails with `Singular` when
/// `I − M` has no inverse and with `NegativeEntry` when the inverse is not
/// entrywise non-negative (the series `Σ Mᵏ` cannot have converged to it).
pub fn invert_closure(m: &SquareMatrix<Prob>) -> Result<SquareMatrix<Prob>> {
    let d = m.dim();
    if d == 0 {
        return Ok(SquareMatrix::zeros(0));
    }
    let a = DMatrix::from_fn(d, d, |i, j| {
        let delta = if i == j { 1.0 } else { 0.0 };
        delta - m.get(i, j).0
    });
    let inverse = a.lu().try_inverse().ok_or(Error::Singular)?;
    if inverse.iter().any(|x| !x.is_finite()) {
        return Err(Error::Singular);
    }
    let mut out = SquareMatrix::zeros(d);
    for i in 0..d {
        for j in 0..d {
            let value = inverse[(i, j)];
            if value < -NEGATIVE_ENTRY_TOLERANCE {
                return Err(Error::NegativeEntry {
                    row: i,
                    col: j,
                    value,
                });
            }
            // rounding may leave tiny negatives on structurally zero entries
            out.set(i, j, Prob(value.max(0.0)));
        }
    }
    Ok(out)
}

impl<S: Semiring> fmt::Debug for SquareMatrix<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut list = f.debug_list();
        for i in 0..self.dim {
            list.entry(&self.row(i));
        }
        list.finish()
    }
}

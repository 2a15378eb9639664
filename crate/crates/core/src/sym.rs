//! Dense real symmetric matrices with a lazily computed spectral decomposition.

use alloc::boxed::Box;
use alloc::format;
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};
use once_cell::race::OnceBox;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

/// Relative tolerance used when validating symmetry of user input.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Eigenvalues (ascending) and matching orthonormal eigenvectors (columns).
#[derive(Debug, Clone)]
pub struct Spectral {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

impl Spectral {
    fn compute(a: &DMatrix<f64>) -> Self {
        let m = a.nrows();
        if m == 1 {
            return Spectral { values: DVector::from_element(1, a[(0, 0)]), vectors: DMatrix::identity(1, 1) };
        }
        let eig = a.clone().symmetric_eigen();
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        let values = DVector::from_iterator(m, order.iter().map(|&k| eig.eigenvalues[k]));
        let mut vectors = DMatrix::zeros(m, m);
        for (col, &k) in order.iter().enumerate() {
            vectors.set_column(col, &eig.eigenvectors.column(k));
        }
        Spectral { values, vectors }
    }

    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    /// `U diag(d) Uᵀ`, symmetrized.
    pub fn reconstruct(&self, d: &[f64]) -> SymMatrix {
        let u = &self.vectors;
        let m = u.nrows();
        let mut scaled = u.clone();
        for (j, &dj) in d.iter().enumerate() {
            for i in 0..m {
                scaled[(i, j)] *= dj;
            }
        }
        SymMatrix::from_matrix_symmetrized(scaled * u.transpose())
    }

    /// `U (G ∘ (Uᵀ B U)) Uᵀ` for a Loewner-type kernel `G`.
    pub fn hadamard_conjugate(&self, kernel: &DMatrix<f64>, b: &SymMatrix) -> SymMatrix {
        let u = &self.vectors;
        let rotated = u.transpose() * b.as_matrix() * u;
        let weighted = rotated.component_mul(kernel);
        SymMatrix::from_matrix_symmetrized(u * weighted * u.transpose())
    }
}

/// A dense real symmetric `m × m` matrix.
///
/// Immutable after construction; the eigendecomposition is computed at most
/// once and shared by every caller.
pub struct SymMatrix {
    data: DMatrix<f64>,
    spectral: OnceBox<Spectral>,
}

impl SymMatrix {
    /// Builds a matrix from row-major entries, validating symmetry.
    pub fn from_row_major(m: usize, entries: &[f64]) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidMatrix("dimension must be positive".into()));
        }
        if entries.len() != m * m {
            return Err(Error::DimensionMismatch { expected: m * m, found: entries.len() });
        }
        if let Some(bad) = entries.iter().find(|x| !x.is_finite()) {
            return Err(Error::InvalidMatrix(format!("non-finite entry {bad}")));
        }
        for i in 0..m {
            for j in (i + 1)..m {
                let a = entries[i * m + j];
                let b = entries[j * m + i];
                let gap = (a - b).abs();
                if gap > SYMMETRY_TOL * a.abs().max(1.0) {
                    return Err(Error::NotSymmetric { i, j, gap });
                }
            }
        }
        Ok(Self::from_matrix_symmetrized(DMatrix::from_row_slice(m, m, entries)))
    }

    /// Builds a matrix from nested rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let m = rows.len();
        let mut flat = Vec::with_capacity(m * m);
        for row in rows {
            let row = row.as_ref();
            if row.len() != m {
                return Err(Error::DimensionMismatch { expected: m, found: row.len() });
            }
            flat.extend_from_slice(row);
        }
        Self::from_row_major(m, &flat)
    }

    /// Builds a matrix from an arbitrary square matrix, validating symmetry.
    pub fn from_matrix(a: DMatrix<f64>) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::DimensionMismatch { expected: a.nrows(), found: a.ncols() });
        }
        let m = a.nrows();
        let flat: Vec<f64> = (0..m).flat_map(|i| (0..m).map(move |j| (i, j))).map(|(i, j)| a[(i, j)]).collect();
        Self::from_row_major(m, &flat)
    }

    /// Wraps `½(A + Aᵀ)`; used for results of computations that are symmetric
    /// up to rounding.
    pub fn from_matrix_symmetrized(a: DMatrix<f64>) -> Self {
        debug_assert_eq!(a.nrows(), a.ncols());
        let sym = (&a + a.transpose()) * 0.5;
        SymMatrix { data: sym, spectral: OnceBox::new() }
    }

    /// Builds `f(i, j)` for `i <= j` and mirrors it.
    pub fn from_upper_fn(m: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut a = DMatrix::zeros(m, m);
        for i in 0..m {
            for j in i..m {
                let v = f(i, j);
                a[(i, j)] = v;
                a[(j, i)] = v;
            }
        }
        SymMatrix { data: a, spectral: OnceBox::new() }
    }

    pub fn zeros(m: usize) -> Self {
        SymMatrix { data: DMatrix::zeros(m, m), spectral: OnceBox::new() }
    }

    pub fn identity(m: usize) -> Self {
        SymMatrix { data: DMatrix::identity(m, m), spectral: OnceBox::new() }
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        let m = d.len();
        Self::from_upper_fn(m, |i, j| if i == j { d[i] } else { 0.0 })
    }

    /// `e_i e_jᵀ + e_j e_iᵀ` for `i != j`, or `e_i e_iᵀ` for `i == j`.
    pub fn unit_pair(m: usize, i: usize, j: usize) -> Self {
        Self::from_upper_fn(m, |a, b| if (a == i.min(j)) && (b == i.max(j)) { 1.0 } else { 0.0 })
    }

    /// All-ones matrix.
    pub fn ones(m: usize) -> Self {
        Self::from_upper_fn(m, |_, _| 1.0)
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[(i, j)]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.data
    }

    /// Row-major copy of the entries.
    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        let m = self.dim();
        (0..m).map(|i| (0..m).map(|j| self.data[(i, j)]).collect()).collect()
    }

    /// Cached spectral decomposition.
    pub fn spectral(&self) -> &Spectral {
        self.spectral.get_or_init(|| Box::new(Spectral::compute(&self.data)))
    }

    pub fn min_eig(&self) -> f64 {
        self.spectral().min()
    }

    pub fn max_eig(&self) -> f64 {
        self.spectral().max()
    }

    /// Trace inner product `tr(AB)`.
    pub fn inner(&self, other: &SymMatrix) -> f64 {
        self.data.dot(&other.data)
    }

    pub fn norm(&self) -> f64 {
        self.data.norm()
    }

    /// Spectral (operator) norm.
    pub fn op_norm(&self) -> f64 {
        let s = self.spectral();
        s.min().abs().max(s.max().abs())
    }

    pub fn trace(&self) -> f64 {
        self.data.trace()
    }

    pub fn scale(&self, c: f64) -> SymMatrix {
        SymMatrix { data: &self.data * c, spectral: OnceBox::new() }
    }

    /// `self + c·other`.
    pub fn axpy(&self, c: f64, other: &SymMatrix) -> SymMatrix {
        self.check_dim(other).expect("axpy dimension mismatch");
        SymMatrix { data: &self.data + &other.data * c, spectral: OnceBox::new() }
    }

    /// Symmetrized product `½(AB + BA)`.
    pub fn jordan_product(&self, other: &SymMatrix) -> SymMatrix {
        let ab = &self.data * &other.data;
        SymMatrix::from_matrix_symmetrized(ab)
    }

    /// `U f(Λ) Uᵀ` without domain checks.
    pub(crate) fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> SymMatrix {
        let s = self.spectral();
        let d: Vec<f64> = s.values.iter().map(|&x| f(x)).collect();
        s.reconstruct(&d)
    }

    pub fn check_dim(&self, other: &SymMatrix) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: other.dim() });
        }
        Ok(())
    }

    /// Largest absolute entrywise difference.
    pub fn max_abs_diff(&self, other: &SymMatrix) -> f64 {
        (&self.data - &other.data).amax()
    }

    /// Entries `(i, j)` with `i <= j` in row-major order.
    pub fn upper_entries(&self) -> Vec<f64> {
        let m = self.dim();
        (0..m).flat_map(|i| (i..m).map(move |j| (i, j))).map(|(i, j)| self.data[(i, j)]).collect()
    }
}

impl Clone for SymMatrix {
    fn clone(&self) -> Self {
        let spectral = OnceBox::new();
        if let Some(s) = self.spectral.get() {
            let _ = spectral.set(Box::new(s.clone()));
        }
        SymMatrix { data: self.data.clone(), spectral }
    }
}

impl PartialEq for SymMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.data == other.data
    }
}

impl fmt::Debug for SymMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SymMatrix").field("dim", &self.dim()).field("rows", &self.to_rows()).finish()
    }
}

impl Add for &SymMatrix {
    type Output = SymMatrix;
    fn add(self, rhs: &SymMatrix) -> SymMatrix {
        self.axpy(1.0, rhs)
    }
}

impl Sub for &SymMatrix {
    type Output = SymMatrix;
    fn sub(self, rhs: &SymMatrix) -> SymMatrix {
        self.axpy(-1.0, rhs)
    }
}

impl Mul<f64> for &SymMatrix {
    type Output = SymMatrix;
    fn mul(self, c: f64) -> SymMatrix {
        self.scale(c)
    }
}

impl Neg for &SymMatrix {
    type Output = SymMatrix;
    fn neg(self) -> SymMatrix {
        self.scale(-1.0)
    }
}

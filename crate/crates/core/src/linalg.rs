//! Small dense helpers shared by the operator modules.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

pub(crate) const I: Complex64 = Complex64::new(0.0, 1.0);

/// Eigendecomposition `H = V diag(λ) Vᵀ` of a real symmetric matrix, kept
/// around so that `exp(i t H)` can be formed for many `t`.
#[derive(Clone, Debug)]
pub(crate) struct RealSpectrum {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

impl RealSpectrum {
    pub fn new(h: DMatrix<f64>) -> Self {
        let n = h.nrows();
        if n == 1 {
            return Self { values: DVector::from_element(1, h[(0, 0)]), vectors: DMatrix::identity(1, 1) };
        }
        let eig = SymmetricEigen::new(h);
        Self { values: eig.eigenvalues, vectors: eig.eigenvectors }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// `exp(i t H)`.
    pub fn expi(&self, t: f64) -> DMatrix<Complex64> {
        let n = self.dim();
        let v = &self.vectors;
        let phases: Vec<Complex64> = self.values.iter().map(|&l| Complex64::from_polar(1.0, t * l)).collect();
        let mut out = DMatrix::<Complex64>::zeros(n, n);
        for c in 0..n {
            for r in 0..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..n {
                    acc += phases[k] * (v[(r, k)] * v[(c, k)]);
                }
                out[(r, c)] = acc;
            }
        }
        out
    }

    /// `d/dt exp(i t H) = i H exp(i t H)`.
    pub fn expi_derivative(&self, t: f64) -> DMatrix<Complex64> {
        let n = self.dim();
        let v = &self.vectors;
        let weights: Vec<Complex64> =
            self.values.iter().map(|&l| I * l * Complex64::from_polar(1.0, t * l)).collect();
        DMatrix::from_fn(n, n, |r, c| (0..n).map(|k| weights[k] * (v[(r, k)] * v[(c, k)])).sum())
    }
}

pub(crate) fn real_to_complex(m: &DMatrix<f64>) -> DMatrix<Complex64> {
    m.map(|x| Complex64::new(x, 0.0))
}

/// Largest absolute entry of `a - b`.
pub(crate) fn max_abs_diff(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

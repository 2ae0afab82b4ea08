//! Real-symmetric eigendecomposition reused across many evolution times.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Relative asymmetry tolerated before a matrix is rejected.
const SYMMETRY_TOL: f64 = 1e-12;

/// `H = V diag(λ) Vᵀ`; gives `exp(-itH)` for any `t` without refactoring.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub eigenvalues: DVector<f64>,
    pub eigenvectors: DMatrix<f64>,
}

impl Spectrum {
    pub fn new(h: &DMatrix<f64>) -> Result<Self> {
        if !h.is_square() {
            return Err(Error::InvalidParameter(format!("{}x{} matrix is not square", h.nrows(), h.ncols())));
        }
        let asym = max_asymmetry(h);
        if asym > SYMMETRY_TOL * h.amax().max(1.0) {
            return Err(Error::NotSymmetric(asym));
        }
        let eig = SymmetricEigen::new(h.clone());
        if eig.eigenvalues.iter().any(|x| !x.is_finite()) {
            return Err(Error::Numerical("eigendecomposition produced non-finite values".into()));
        }
        Ok(Self { eigenvalues: eig.eigenvalues, eigenvectors: eig.eigenvectors })
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    fn phases(&self, t: f64) -> impl Iterator<Item = Complex64> + '_ {
        self.eigenvalues.iter().map(move |&l| Complex64::from_polar(1.0, -l * t))
    }

    /// `⟨row| exp(-itH) |col⟩`.
    pub fn amplitude(&self, t: f64, row: usize, col: usize) -> Complex64 {
        let v = &self.eigenvectors;
        self.phases(t)
            .enumerate()
            .map(|(k, p)| p * (v[(row, k)] * v[(col, k)]))
            .sum()
    }

    pub fn propagator(&self, t: f64) -> DMatrix<Complex64> {
        let v = self.eigenvectors.map(|x| Complex64::new(x, 0.0));
        let mut scaled = v.clone();
        for (k, p) in self.phases(t).enumerate() {
            scaled.column_mut(k).iter_mut().for_each(|x| *x *= p);
        }
        scaled * v.transpose()
    }

    /// `exp(-itH) ψ`.
    pub fn evolve(&self, psi: &DVector<Complex64>, t: f64) -> DVector<Complex64> {
        let v = self.eigenvectors.map(|x| Complex64::new(x, 0.0));
        let mut coeffs = v.transpose() * psi;
        for (c, p) in coeffs.iter_mut().zip(self.phases(t)) {
            *c *= p;
        }
        v * coeffs
    }

    /// Frobenius norm of `VᵀV − I`; bounds the unitarity defect of every propagator built from it.
    pub fn orthonormality_defect(&self) -> f64 {
        let gram = self.eigenvectors.transpose() * &self.eigenvectors;
        (gram - DMatrix::identity(self.dim(), self.dim())).norm()
    }

    /// Largest eigenvalue magnitude (the spectral norm of `H`).
    pub fn spectral_radius(&self) -> f64 {
        self.eigenvalues.amax()
    }
}

pub fn max_asymmetry(h: &DMatrix<f64>) -> f64 {
    let n = h.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i + 1..n {
            worst = worst.max((h[(i, j)] - h[(j, i)]).abs());
        }
    }
    worst
}

/// Spectral norm of a real symmetric matrix.
pub fn symmetric_spectral_norm(h: &DMatrix<f64>) -> Result<f64> {
    if h.nrows() == 0 {
        return Ok(0.0);
    }
    Ok(Spectrum::new(h)?.spectral_radius())
}

/// `‖U†U − I‖₂` for a square complex matrix.
pub fn unitarity_defect(u: &DMatrix<Complex64>) -> f64 {
    let n = u.nrows();
    let gram = u.adjoint() * u - DMatrix::<Complex64>::identity(n, n);
    if n == 0 {
        return 0.0;
    }
    // Hermitian: the spectral norm is the largest |eigenvalue|.
    SymmetricEigen::new(gram).eigenvalues.amax()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn rejects_asymmetric() {
        let h = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.5, 0.0]);
        assert!(matches!(Spectrum::new(&h), Err(Error::NotSymmetric(_))));
    }

    #[test]
    fn propagator_matches_amplitudes_and_evolve() {
        let h = DMatrix::from_row_slice(3, 3, &[0.3, 1.0, 0.0, 1.0, -0.2, 0.7, 0.0, 0.7, 1.1]);
        let s = Spectrum::new(&h).unwrap();
        let u = s.propagator(0.83);
        for r in 0..3 {
            for c in 0..3 {
                assert_abs_diff_eq!((u[(r, c)] - s.amplitude(0.83, r, c)).norm(), 0.0, epsilon = 1e-14);
            }
        }
        let psi = DVector::from_vec(vec![Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8), Complex64::new(0.0, 0.0)]);
        let direct = &u * &psi;
        assert_abs_diff_eq!((s.evolve(&psi, 0.83) - direct).norm(), 0.0, epsilon = 1e-14);
        assert!(unitarity_defect(&u) < 1e-13);
        assert!(s.orthonormality_defect() < 1e-13);
    }

    #[test]
    fn spectral_norm_of_single_edge() {
        let mut e = DMatrix::zeros(5, 5);
        e[(1, 3)] = 0.02;
        e[(3, 1)] = 0.02;
        assert_abs_diff_eq!(symmetric_spectral_norm(&e).unwrap(), 0.02, epsilon = 1e-15);
    }
}

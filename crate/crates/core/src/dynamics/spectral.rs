use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64 as C64;

use crate::hilbert::Operator;

/// Eigendecomposition `H = V diag(E) V†`, reusable for any evolution time.
#[derive(Clone, Debug)]
pub struct SpectralPropagator {
    energies: DVector<f64>,
    vectors: Eigenvectors,
}

#[derive(Clone, Debug)]
enum Eigenvectors {
    Real(DMatrix<f64>),
    Complex(DMatrix<C64>),
}

impl SpectralPropagator {
    pub fn new(h: &Operator) -> Self {
        if h.is_real() {
            let dense = h.to_dense().map(|c| c.re);
            let eig = SymmetricEigen::new(dense);
            Self { energies: eig.eigenvalues, vectors: Eigenvectors::Real(eig.eigenvectors) }
        } else {
            let eig = SymmetricEigen::new(h.to_dense());
            Self { energies: eig.eigenvalues, vectors: Eigenvectors::Complex(eig.eigenvectors) }
        }
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    /// Coefficients of `psi` in the eigenbasis.
    pub fn to_eigenbasis(&self, psi: &DVector<C64>) -> DVector<C64> {
        match &self.vectors {
            Eigenvectors::Real(v) => {
                let re = v.tr_mul(&psi.map(|c| c.re));
                let im = v.tr_mul(&psi.map(|c| c.im));
                DVector::from_fn(psi.len(), |i, _| C64::new(re[i], im[i]))
            }
            Eigenvectors::Complex(v) => v.ad_mul(psi),
        }
    }

    /// `e^{-iHt}` applied to a state given by its eigenbasis coefficients.
    pub fn propagate_coefficients(&self, coeffs: &DVector<C64>, t: f64) -> DVector<C64> {
        let phased = DVector::from_fn(coeffs.len(), |i, _| {
            coeffs[i] * C64::from_polar(1.0, -self.energies[i] * t)
        });
        match &self.vectors {
            Eigenvectors::Real(v) => {
                let re = v * phased.map(|c| c.re);
                let im = v * phased.map(|c| c.im);
                DVector::from_fn(coeffs.len(), |i, _| C64::new(re[i], im[i]))
            }
            Eigenvectors::Complex(v) => v * phased,
        }
    }

    pub fn propagate(&self, psi: &DVector<C64>, t: f64) -> DVector<C64> {
        self.propagate_coefficients(&self.to_eigenbasis(psi), t)
    }
}

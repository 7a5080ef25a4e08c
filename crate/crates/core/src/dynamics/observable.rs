use nalgebra::DVector;
use num_complex::Complex64 as C64;

use crate::hilbert::{FockSpace, Operator};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Quadrature {
    X,
    P,
}

/// Noncommutative polynomial in the quadratures, `Σ c · L₁L₂…L_k`.
///
/// Kept symbolic so the same observable can be realized in spaces of
/// different dimension, or in the Heisenberg picture by substituting
/// evolved quadratures for the letters.
#[derive(Clone, Debug, PartialEq)]
pub struct Observable {
    terms: Vec<(C64, Vec<Quadrature>)>,
}

impl Observable {
    pub fn zero() -> Self {
        Self { terms: Vec::new() }
    }
    pub fn constant(c: f64) -> Self {
        Self { terms: vec![(C64::new(c, 0.0), Vec::new())] }
    }
    pub fn x() -> Self {
        Self { terms: vec![(C64::new(1.0, 0.0), vec![Quadrature::X])] }
    }
    pub fn p() -> Self {
        Self::p_pow(1)
    }
    pub fn p_pow(k: u32) -> Self {
        Self { terms: vec![(C64::new(1.0, 0.0), vec![Quadrature::P; k as usize])] }
    }
    pub fn x_pow(k: u32) -> Self {
        Self { terms: vec![(C64::new(1.0, 0.0), vec![Quadrature::X; k as usize])] }
    }
    /// `N = (X² + P² − 1)/2`.
    pub fn number() -> Self {
        Self::x_pow(2).scaled(0.5).plus(&Self::p_pow(2).scaled(0.5)).plus(&Self::constant(-0.5))
    }
    /// `Σ_k coeffs[k] P^k`.
    pub fn p_polynomial(coeffs: &[f64]) -> Self {
        let mut out = Self::zero();
        for (k, &c) in coeffs.iter().enumerate() {
            if c != 0.0 {
                out = out.plus(&Self::p_pow(k as u32).scaled(c));
            }
        }
        out
    }

    pub fn plus(&self, other: &Self) -> Self {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Self { terms }
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { terms: self.terms.iter().map(|(k, w)| (k * c, w.clone())).collect() }
    }

    pub fn terms(&self) -> &[(C64, Vec<Quadrature>)] {
        &self.terms
    }

    /// Maximal word length weighted by the letter degrees `(deg X, deg P)`.
    pub fn degree_with(&self, x_degree: usize, p_degree: usize) -> usize {
        self.terms
            .iter()
            .map(|(_, w)| {
                w.iter()
                    .map(|q| match q {
                        Quadrature::X => x_degree,
                        Quadrature::P => p_degree,
                    })
                    .sum()
            })
            .max()
            .unwrap_or(0)
    }

    pub fn degree(&self) -> usize {
        self.degree_with(1, 1)
    }

    /// Dense-banded matrix of the observable in `space`.
    pub fn to_operator(&self, space: &FockSpace) -> Operator {
        self.realize(space.dim(), space.x(), space.p())
    }

    /// Matrix with letters replaced by the given operators.
    pub fn realize(&self, dim: usize, x: &Operator, p: &Operator) -> Operator {
        let mut acc = Operator::zeros(dim);
        for (c, word) in &self.terms {
            let mut m = Operator::identity(dim);
            for q in word {
                m = &m * if *q == Quadrature::X { x } else { p };
            }
            acc = &acc + &m.scale(*c);
        }
        acc
    }

    /// `O ψ` with letters replaced by `x` and `p`, applied right to left
    /// without forming matrix products.
    pub fn apply_with(&self, x: &Operator, p: &Operator, psi: &DVector<C64>) -> DVector<C64> {
        let mut out = DVector::zeros(psi.len());
        for (c, word) in &self.terms {
            let mut v = psi.clone();
            for q in word.iter().rev() {
                v = if *q == Quadrature::X { x.apply(&v) } else { p.apply(&v) };
            }
            out += v * *c;
        }
        out
    }
}

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64 as C64;

use crate::hilbert::Operator;

const MAX_SUBSPACE: usize = 30;

/// `e^{-iHt} psi` by Lanczos steps with adaptive step size.
///
/// Each step projects onto a Krylov subspace of dimension at most
/// `MAX_SUBSPACE` with full reorthogonalization; the step is accepted when the
/// standard residual estimate `β_m |[e^{-iτT_m} e₁]_m|` is below `tol·τ/t`.
pub fn lanczos_propagate(h: &Operator, psi: &DVector<C64>, t: f64, tol: f64) -> DVector<C64> {
    let mut state = psi.clone();
    if t == 0.0 {
        return state;
    }
    let norm_h = spectral_radius_bound(h);
    let mut remaining = t;
    let mut tau = (10.0 / norm_h.max(1e-300)).min(t);
    let local_tol = tol.max(1e-15);

    while remaining > 0.0 {
        tau = tau.min(remaining);
        let basis = Lanczos::build(h, &state, MAX_SUBSPACE);
        loop {
            let (coeffs, err) = basis.exp_step(tau);
            if err <= local_tol * tau / t || tau < 1e-12 * t {
                state = basis.lift(&coeffs);
                let n = state.norm();
                state /= C64::new(n, 0.0);
                remaining -= tau;
                if err < 0.1 * local_tol * tau / t {
                    tau *= 1.5;
                }
                break;
            }
            tau *= 0.5;
        }
    }
    state
}

fn spectral_radius_bound(h: &Operator) -> f64 {
    let d = h.dim();
    let (lo, up) = h.bandwidth();
    (0..d)
        .map(|i| (i.saturating_sub(lo)..(i + up + 1).min(d)).map(|j| h.get(i, j).norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

struct Lanczos {
    vectors: Vec<DVector<C64>>,
    alpha: Vec<f64>,
    beta: Vec<f64>,
    norm0: f64,
    /// Residual coupling out of the subspace; zero on happy breakdown.
    beta_out: f64,
}

impl Lanczos {
    fn build(h: &Operator, psi: &DVector<C64>, m_max: usize) -> Self {
        let norm0 = psi.norm();
        let mut vectors = vec![psi / C64::new(norm0, 0.0)];
        let (mut alpha, mut beta) = (Vec::new(), Vec::new());
        let mut beta_out = 0.0;
        for k in 0..m_max.min(psi.len()) {
            let mut w = h.apply(&vectors[k]);
            let a = vectors[k].dotc(&w).re;
            alpha.push(a);
            // full reorthogonalization
            for v in &vectors {
                let c = v.dotc(&w);
                w -= v * c;
            }
            for v in &vectors {
                let c = v.dotc(&w);
                w -= v * c;
            }
            let b = w.norm();
            if b < 1e-14 * (1.0 + a.abs()) || k + 1 == m_max.min(psi.len()) {
                beta_out = if k + 1 == psi.len() { 0.0 } else { b };
                break;
            }
            beta.push(b);
            vectors.push(w / C64::new(b, 0.0));
        }
        Self { vectors, alpha, beta, norm0, beta_out }
    }

    fn exp_step(&self, tau: f64) -> (DVector<C64>, f64) {
        let m = self.alpha.len();
        let tri = DMatrix::from_fn(m, m, |i, j| {
            if i == j {
                self.alpha[i]
            } else if i + 1 == j {
                self.beta[i]
            } else if j + 1 == i {
                self.beta[j]
            } else {
                0.0
            }
        });
        let eig = SymmetricEigen::new(tri);
        let q = &eig.eigenvectors;
        let coeffs = DVector::from_fn(m, |i, _| {
            (0..m)
                .map(|k| C64::from_polar(q[(i, k)] * q[(0, k)], -eig.eigenvalues[k] * tau))
                .sum::<C64>()
        });
        let err = self.beta_out * coeffs[m - 1].norm() * self.norm0;
        (coeffs, err)
    }

    fn lift(&self, coeffs: &DVector<C64>) -> DVector<C64> {
        let mut out = DVector::zeros(self.vectors[0].len());
        for (v, c) in self.vectors.iter().zip(coeffs.iter()) {
            out += v * (*c * self.norm0);
        }
        out
    }
}

//! Exact propagation for Hamiltonians of the form `λX + f(P)`.
//!
//! With `[X, P] = i`, conjugation by `e^{iλXt}` shifts `P → P − λt`, and all
//! the shifted `f(P − λt)` commute. Hence
//!
//! ```text
//! e^{-iHT} = e^{-iλXT} · e^{-iΦ(P)},   Φ(q) = ∫₀ᵀ f(q − λt) dt,
//! ```
//!
//! which gives closed forms for the Heisenberg quadratures
//! (`X → X + Φ'(P)`, `P → P − λT`) and for overlaps of states evolved with
//! different parameters (a one-dimensional integral in the momentum
//! representation).

use nalgebra::DVector;
use num_complex::Complex64 as C64;

use crate::hilbert::{Operator, StateVector};

/// Parameters of `H = λX + Σ_k f_k P^k`.
#[derive(Clone, Debug, PartialEq)]
pub struct ShearForm {
    pub lambda: f64,
    pub f: Vec<f64>,
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

impl ShearForm {
    /// Coefficients of `Φ(q) = ∫₀ᵀ f(q − λt) dt` in powers of `q`.
    pub fn phase_coeffs(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.f.len()];
        for (k, &fk) in self.f.iter().enumerate() {
            if fk == 0.0 {
                continue;
            }
            // (q − λt)^k = Σ_j C(k,j) q^{k−j} (−λt)^j, integrated over t
            for j in 0..=k {
                out[k - j] += fk * binomial(k, j) * (-self.lambda).powi(j as i32) * t.powi(j as i32 + 1)
                    / (j + 1) as f64;
            }
        }
        out
    }

    /// Coefficients of `Φ'(q) = [f(q) − f(q − λT)]/λ`, the Heisenberg shift of `X`.
    pub fn x_shift_coeffs(&self, t: f64) -> Vec<f64> {
        let phi = self.phase_coeffs(t);
        (1..phi.len()).map(|k| k as f64 * phi[k]).collect()
    }

    pub fn degree(&self) -> usize {
        self.f.iter().rposition(|&c| c != 0.0).unwrap_or(0)
    }

    /// Heisenberg-picture quadratures `(X(T), P(T))` as banded operators on
    /// the space of `x` and `p`.
    pub fn heisenberg_quadratures(&self, x: &Operator, p: &Operator, t: f64) -> (Operator, Operator) {
        let dim = x.dim();
        let shift = self.x_shift_coeffs(t);
        let mut xh = x.clone();
        let mut p_pow = Operator::identity(dim);
        for c in shift {
            if c != 0.0 {
                xh = &xh + &(&p_pow * c);
            }
            p_pow = &p_pow * p;
        }
        let ph = p - &(&Operator::identity(dim) * (self.lambda * t));
        (xh, ph)
    }
}

fn horner(coeffs: &[f64], q: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * q + c)
}

/// Momentum-representation wavefunction `ψ(q) = Σ c_n ⟨q|n⟩`.
///
/// With `P = (a − a†)/(i√2)`, `⟨q|n⟩ = (−i)^n h_n(q)` where `h_n` are the
/// normalized Hermite functions.
pub struct MomentumWavefunction {
    coeffs: Vec<C64>,
}

impl MomentumWavefunction {
    pub fn new(amplitudes: &DVector<C64>) -> Self {
        let last = amplitudes.iter().rposition(|c| c.norm_sqr() > 1e-32).unwrap_or(0);
        let mut phase = C64::new(1.0, 0.0);
        let coeffs = (0..=last)
            .map(|n| {
                let c = amplitudes[n] * phase;
                phase *= C64::new(0.0, -1.0);
                c
            })
            .collect();
        Self { coeffs }
    }

    pub fn max_level(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn eval(&self, q: f64) -> C64 {
        let h0 = std::f64::consts::PI.powf(-0.25) * (-0.5 * q * q).exp();
        let mut acc = self.coeffs[0] * h0;
        if self.coeffs.len() == 1 {
            return acc;
        }
        let (mut prev, mut cur) = (h0, std::f64::consts::SQRT_2 * q * h0);
        acc += self.coeffs[1] * cur;
        for n in 1..self.coeffs.len() - 1 {
            let nf = n as f64;
            let next = (2.0 / (nf + 1.0)).sqrt() * q * cur - (nf / (nf + 1.0)).sqrt() * prev;
            prev = cur;
            cur = next;
            acc += self.coeffs[n + 1] * cur;
        }
        acc
    }

    /// Half-width of the momentum window outside which `ψ` is negligible.
    pub fn half_width(&self) -> f64 {
        (2.0 * self.max_level() as f64 + 1.0).sqrt() + 10.0
    }
}

/// `⟨ψ(T; a)|ψ(T; b)⟩` for the same initial state evolved under two
/// shear Hamiltonians, normalized by the quadrature norm of `ψ₀`.
pub fn overlap(psi0: &MomentumWavefunction, a: &ShearForm, b: &ShearForm, t: f64) -> C64 {
    // ψ_T(p) = e^{-iΦ(p+λT)} ψ₀(p+λT); substitute q = p + λ_a T.
    let phi_a = a.phase_coeffs(t);
    let phi_b = b.phase_coeffs(t);
    let delta = (b.lambda - a.lambda) * t;
    let half = psi0.half_width() + delta.abs();
    let h = 0.01;
    let n = (2.0 * half / h).ceil() as usize;
    let mut acc = C64::new(0.0, 0.0);
    let mut norm = 0.0;
    for k in 0..=n {
        let q = -half + k as f64 * h;
        let u = psi0.eval(q);
        let v = psi0.eval(q + delta);
        let phase = horner(&phi_a, q) - horner(&phi_b, q + delta);
        acc += u.conj() * v * C64::from_polar(1.0, phase);
        norm += u.norm_sqr();
    }
    acc / norm
}

/// Applies `R = e^{-iπN/2}`, which maps `λP + g(X)` onto `λX + g(−P)`.
pub fn quarter_rotation(psi: &StateVector) -> DVector<C64> {
    let mut phase = C64::new(1.0, 0.0);
    psi.amplitudes().map(|c| {
        let out = c * phase;
        phase *= C64::new(0.0, -1.0);
        out
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{coherent_state, make_space};

    #[test]
    fn phase_of_linear_and_quadratic_terms() {
        // f(P) = P²: Φ(q) = q²T − λq T² + λ²T³/3
        let form = ShearForm { lambda: 2.0, f: vec![0.0, 0.0, 1.0] };
        let phi = form.phase_coeffs(3.0);
        assert!((phi[2] - 3.0).abs() < 1e-14);
        assert!((phi[1] + 2.0 * 9.0).abs() < 1e-12);
        assert!((phi[0] - 4.0 * 27.0 / 3.0).abs() < 1e-12);
        // Φ'(q) = [q² − (q − λT)²]/λ = 2qT − λT²
        let shift = form.x_shift_coeffs(3.0);
        assert!((shift[1] - 6.0).abs() < 1e-12 && (shift[0] + 18.0).abs() < 1e-12);
    }

    #[test]
    fn hermite_functions_normalized() {
        let space = make_space(30).unwrap();
        let st = coherent_state(space, C64::new(0.7, -0.4)).unwrap();
        let wf = MomentumWavefunction::new(st.amplitudes());
        let h = 0.01;
        let half = wf.half_width();
        let norm: f64 = (0..=(2.0 * half / h) as usize).map(|k| wf.eval(-half + k as f64 * h).norm_sqr() * h).sum();
        assert!((norm - 1.0).abs() < 1e-10);
        // ⟨P⟩ = √2 Im α
        let mean: f64 = (0..=(2.0 * half / h) as usize)
            .map(|k| {
                let q = -half + k as f64 * h;
                q * wf.eval(q).norm_sqr() * h
            })
            .sum();
        assert!((mean - 2f64.sqrt() * -0.4).abs() < 1e-8);
    }

    #[test]
    fn identical_forms_give_unit_overlap() {
        let space = make_space(20).unwrap();
        let st = coherent_state(space, C64::new(0.1, 0.0)).unwrap();
        let wf = MomentumWavefunction::new(st.amplitudes());
        let form = ShearForm { lambda: 1.0, f: vec![0.0, 0.0, 0.0, 0.05] };
        let ov = overlap(&wf, &form, &form, 25.0);
        assert!((ov - C64::new(1.0, 0.0)).norm() < 1e-12);
    }
}

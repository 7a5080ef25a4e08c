//! Truncated single-mode Fock space.
//!
//! Conventions: `X = (a + a†)/√2`, `P = (a − a†)/(i√2)`, so `[X, P] = i`
//! away from the truncation edge and `N = a†a` is exactly diagonal.

mod operator;

use std::sync::Arc;

use nalgebra::DVector;
use num_complex::Complex64 as C64;

use crate::{Error, Result};

pub use operator::Operator;

/// Numerical thresholds shared by the Hilbert-space routines.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    /// Fraction of the basis (from the top) treated as a guard band.
    pub guard_fraction: f64,
    /// Largest admissible probability in the guard band.
    pub tail_threshold: f64,
    pub norm_tol: f64,
    /// Relative Hermiticity tolerance for observables passed to [`moments`].
    pub hermitian_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { guard_fraction: 0.1, tail_threshold: 1e-8, norm_tol: 1e-10, hermitian_tol: 1e-12 }
    }
}

/// Bosonic mode truncated to `dim` levels together with its ladder and
/// quadrature operators.
#[derive(Clone, Debug)]
pub struct FockSpace {
    dim: usize,
    a: Operator,
    a_dag: Operator,
    x: Operator,
    p: Operator,
    n: Operator,
}

/// Builds the truncated space with `dim ≥ 2` levels.
pub fn make_space(dim: usize) -> Result<Arc<FockSpace>> {
    FockSpace::new(dim).map(Arc::new)
}

impl FockSpace {
    pub fn new(dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidDimension(dim));
        }
        let a = Operator::off_diagonal(dim, 1, |i| C64::new(((i + 1) as f64).sqrt(), 0.0));
        let a_dag = a.adjoint();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let x = &(&a + &a_dag) * s;
        // 1/(i√2) = −i/√2
        let p = &(&a - &a_dag) * C64::new(0.0, -s);
        let n = Operator::diagonal(dim, |i| C64::new(i as f64, 0.0));
        Ok(Self { dim, a, a_dag, x, p, n })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn a(&self) -> &Operator {
        &self.a
    }
    pub fn a_dag(&self) -> &Operator {
        &self.a_dag
    }
    pub fn x(&self) -> &Operator {
        &self.x
    }
    pub fn p(&self) -> &Operator {
        &self.p
    }
    pub fn n(&self) -> &Operator {
        &self.n
    }
    pub fn identity(&self) -> Operator {
        Operator::identity(self.dim)
    }

    /// Number of top basis indices forming the guard band (at least one).
    pub fn guard_len(&self, guard_fraction: f64) -> usize {
        ((self.dim as f64 * guard_fraction).ceil() as usize).clamp(1, self.dim)
    }
}

/// Normalized pure state on a [`FockSpace`].
#[derive(Clone, Debug)]
pub struct StateVector {
    amplitudes: DVector<C64>,
    space: Arc<FockSpace>,
}

impl StateVector {
    /// Wraps `amplitudes`, which must already be normalized to `norm_tol`.
    pub fn new(space: Arc<FockSpace>, amplitudes: DVector<C64>, norm_tol: f64) -> Result<Self> {
        if amplitudes.len() != space.dim() {
            return Err(Error::Contract(format!(
                "state has {} amplitudes but the space has dimension {}",
                amplitudes.len(),
                space.dim()
            )));
        }
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > norm_tol {
            return Err(Error::Contract(format!("state norm {norm} differs from 1")));
        }
        Ok(Self { amplitudes, space })
    }

    /// Rescales `amplitudes` to unit norm.
    pub fn normalized(space: Arc<FockSpace>, amplitudes: DVector<C64>) -> Result<Self> {
        let norm = amplitudes.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::Contract("cannot normalize a zero or non-finite vector".into()));
        }
        Self::new(space, amplitudes / C64::new(norm, 0.0), 1e-12)
    }

    pub fn basis(space: Arc<FockSpace>, n: usize) -> Result<Self> {
        if n >= space.dim() {
            return Err(Error::Contract(format!("basis index {n} outside dimension {}", space.dim())));
        }
        let mut v = DVector::zeros(space.dim());
        v[n] = C64::new(1.0, 0.0);
        Ok(Self { amplitudes: v, space })
    }

    pub fn vacuum(space: Arc<FockSpace>) -> Self {
        Self::basis(space, 0).expect("dimension is at least 2")
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }
    pub fn space(&self) -> &Arc<FockSpace> {
        &self.space
    }
    pub fn dim(&self) -> usize {
        self.space.dim()
    }
    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> C64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    /// Probability carried by the top `guard_fraction` of the basis.
    pub fn tail_mass(&self, guard_fraction: f64) -> f64 {
        let start = self.dim() - self.space.guard_len(guard_fraction);
        self.amplitudes.iter().skip(start).map(|c| c.norm_sqr()).sum()
    }

    pub fn is_truncation_suspect(&self, tol: &Tolerances) -> bool {
        self.tail_mass(tol.guard_fraction) > tol.tail_threshold
    }

    /// Zero-pads (or checks-and-truncates) the amplitudes into `space`.
    pub fn embed(&self, space: Arc<FockSpace>) -> Result<Self> {
        let d = space.dim();
        let kept: f64 = self.amplitudes.iter().skip(d).map(|c| c.norm_sqr()).sum();
        if kept > 1e-14 {
            return Err(Error::Truncation { tail: kept, threshold: 1e-14, dim: d });
        }
        let v = DVector::from_fn(d, |i, _| {
            if i < self.amplitudes.len() {
                self.amplitudes[i]
            } else {
                C64::new(0.0, 0.0)
            }
        });
        Self::normalized(space, v)
    }

    /// Highest basis index with non-negligible amplitude (`|c_n|² > cutoff`).
    pub fn support(&self, cutoff: f64) -> usize {
        self.amplitudes.iter().rposition(|c| c.norm_sqr() > cutoff).unwrap_or(0)
    }

    /// Applies an operator (no renormalization).
    pub fn apply(&self, op: &Operator) -> DVector<C64> {
        op.apply(&self.amplitudes)
    }

    pub(crate) fn from_parts_unchecked(space: Arc<FockSpace>, amplitudes: DVector<C64>) -> Self {
        Self { amplitudes, space }
    }
}

/// Coherent state `|α⟩` with default tolerances.
pub fn coherent_state(space: Arc<FockSpace>, alpha: C64) -> Result<StateVector> {
    coherent_state_with(space, alpha, &Tolerances::default())
}

/// Coherent state `|α⟩`, renormalized after truncation.
///
/// Fails with [`Error::Truncation`] if the guard band plus the probability
/// lost above the cutoff exceeds `tol.tail_threshold`.
pub fn coherent_state_with(space: Arc<FockSpace>, alpha: C64, tol: &Tolerances) -> Result<StateVector> {
    let d = space.dim();
    let mut c = DVector::zeros(d);
    c[0] = C64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
    for n in 1..d {
        c[n] = c[n - 1] * alpha / (n as f64).sqrt();
    }
    let kept: f64 = c.iter().map(|v| v.norm_sqr()).sum();
    let start = d - space.guard_len(tol.guard_fraction);
    let guard: f64 = c.iter().skip(start).map(|v| v.norm_sqr()).sum();
    let tail = guard + (1.0 - kept).max(0.0);
    if tail > tol.tail_threshold {
        return Err(Error::Truncation { tail, threshold: tol.tail_threshold, dim: d });
    }
    StateVector::normalized(space, c)
}

/// Mean `⟨ψ|O|ψ⟩` and variance `⟨O²⟩ − ⟨O⟩²` of a Hermitian observable.
pub fn moments(state: &StateVector, op: &Operator) -> Result<(C64, f64)> {
    moments_with(state, op, &Tolerances::default())
}

pub fn moments_with(state: &StateVector, op: &Operator, tol: &Tolerances) -> Result<(C64, f64)> {
    if op.dim() != state.dim() {
        return Err(Error::Contract(format!(
            "operator dimension {} does not match state dimension {}",
            op.dim(),
            state.dim()
        )));
    }
    let scale = op.max_abs_entry().max(1.0);
    let defect = op.hermiticity_defect();
    if defect > tol.hermitian_tol * scale {
        return Err(Error::Contract(format!("observable is not Hermitian (defect {defect:.3e})")));
    }
    Ok(mean_and_variance(state.amplitudes(), op))
}

/// Unchecked kernel of [`moments`]: `⟨O⟩ = ⟨ψ|Oψ⟩`, `⟨O²⟩ = ‖Oψ‖²`.
pub(crate) fn mean_and_variance(psi: &DVector<C64>, op: &Operator) -> (C64, f64) {
    let o_psi = op.apply(psi);
    let mean = psi.dotc(&o_psi);
    let second = o_psi.norm_squared();
    (mean, second - mean.re * mean.re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn i() -> C64 {
        C64::new(0.0, 1.0)
    }

    #[test]
    fn rejects_small_dimension() {
        assert_eq!(make_space(1).unwrap_err(), Error::InvalidDimension(1));
        assert!(make_space(2).is_ok());
    }

    #[test]
    fn two_level_position_quadrature() {
        let s = make_space(2).unwrap();
        let x = s.x().to_dense();
        assert!((x[(0, 1)] - C64::new(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
        assert!((x[(1, 0)] - C64::new(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
        assert_eq!(x[(0, 0)], C64::new(0.0, 0.0));
        assert_eq!(x[(1, 1)], C64::new(0.0, 0.0));
    }

    #[test]
    fn canonical_commutator_below_edge() {
        let s = make_space(10).unwrap();
        let c = s.x().commutator(s.p());
        for n in 0..9 {
            assert!((c.get(n, n) - i()).norm() < 1e-12, "n={n}");
        }
    }

    #[test]
    fn annihilation_lowers() {
        let s = make_space(5).unwrap();
        let one = StateVector::basis(s.clone(), 1).unwrap();
        let out = one.apply(s.a());
        assert!((out[0] - C64::new(1.0, 0.0)).norm() < 1e-15);
        assert!(out.iter().skip(1).all(|c| c.norm() == 0.0));
    }

    #[test]
    fn quadratures_hermitian() {
        let s = make_space(30).unwrap();
        assert!(s.x().is_hermitian(1e-12));
        assert!(s.p().is_hermitian(1e-12));
        assert!((&s.a_dag().adjoint() - s.a()).max_abs_diff(&Operator::zeros(30)) == 0.0);
    }

    #[test]
    fn coherent_state_moments() {
        let s = make_space(20).unwrap();
        let vac = coherent_state(s.clone(), C64::new(0.0, 0.0)).unwrap();
        assert!((vac.amplitudes()[0] - C64::new(1.0, 0.0)).norm() < 1e-15);

        let st = coherent_state(s.clone(), C64::new(0.1, 0.0)).unwrap();
        let (n, _) = moments(&st, s.n()).unwrap();
        assert!((n.re - 0.01).abs() < 1e-10);
        let (_, vx) = moments(&st, s.x()).unwrap();
        let (_, vp) = moments(&st, s.p()).unwrap();
        assert!((vx - 0.5).abs() < 1e-10 && (vp - 0.5).abs() < 1e-10);
    }

    #[test]
    fn vacuum_and_displaced_quadratures() {
        let s = make_space(40).unwrap();
        let vac = StateVector::vacuum(s.clone());
        let (m, v) = moments(&vac, s.p()).unwrap();
        assert!(m.norm() < 1e-15 && (v - 0.5).abs() < 1e-15);
        let st = coherent_state(s.clone(), C64::new(1.0, 0.0)).unwrap();
        let (mx, _) = moments(&st, s.x()).unwrap();
        assert!((mx.re - 2f64.sqrt()).abs() < 1e-10 && mx.im.abs() < 1e-9);
    }

    #[test]
    fn coherent_truncation_detected() {
        let s = make_space(10).unwrap();
        let err = coherent_state(s, C64::new(3.0, 0.0)).unwrap_err();
        assert!(matches!(err, Error::Truncation { .. }));
    }

    #[test]
    fn moments_rejects_non_hermitian() {
        let s = make_space(6).unwrap();
        let vac = StateVector::vacuum(s.clone());
        assert!(matches!(moments(&vac, s.a()), Err(Error::Contract(_))));
    }

    #[test]
    fn tail_mass_flags_edge_population() {
        let s = make_space(20).unwrap();
        let top = StateVector::basis(s.clone(), 19).unwrap();
        assert!(top.is_truncation_suspect(&Tolerances::default()));
        assert!(!StateVector::vacuum(s).is_truncation_suspect(&Tolerances::default()));
    }
}

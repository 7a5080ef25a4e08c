//! Rotating-frame Hamiltonians and pure-state evolution.

mod krylov;
mod observable;
pub mod shear;
mod spectral;

use std::sync::Arc;

use nalgebra::DVector;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::hilbert::{make_space, mean_and_variance, FockSpace, Operator, StateVector, Tolerances};
use crate::{Error, Result};

pub use krylov::lanczos_propagate;
pub use observable::{Observable, Quadrature};
pub use shear::ShearForm;
pub use spectral::SpectralPropagator;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Coupling {
    /// `λX + Ω(N + ½) + χ(a² + a†²) + G P^M`
    #[default]
    PositionCoupled,
    /// `λP + G X^M`
    MomentumCoupled,
}

/// Closed-system model parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianSpec {
    pub lambda: f64,
    pub g: f64,
    pub order: u32,
    #[serde(default)]
    pub omega: f64,
    #[serde(default)]
    pub chi: f64,
    #[serde(default)]
    pub coupling: Coupling,
}

impl HamiltonianSpec {
    pub fn new(lambda: f64, g: f64, order: u32) -> Self {
        Self { lambda, g, order, omega: 0.0, chi: 0.0, coupling: Coupling::PositionCoupled }
    }

    pub fn momentum_coupled(lambda: f64, g: f64, order: u32) -> Self {
        Self { coupling: Coupling::MomentumCoupled, ..Self::new(lambda, g, order) }
    }

    pub fn with_detuning(self, omega: f64) -> Self {
        Self { omega, ..self }
    }

    pub fn with_squeezing(self, chi: f64) -> Self {
        Self { chi, ..self }
    }

    /// Detuning plus the compensating squeezing `χ = −Ω/2`.
    pub fn compensated(self, omega: f64) -> Self {
        Self { omega, chi: -omega / 2.0, ..self }
    }

    pub fn with_lambda(self, lambda: f64) -> Self {
        Self { lambda, ..self }
    }

    pub fn with_g(self, g: f64) -> Self {
        Self { g, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.order < 2 {
            return Err(Error::InvalidOrder(self.order));
        }
        for (name, v) in [("lambda", self.lambda), ("G", self.g), ("Omega", self.omega), ("chi", self.chi)] {
            if !v.is_finite() {
                return Err(Error::InvalidSpec(format!("{name} must be finite")));
            }
        }
        if self.coupling == Coupling::MomentumCoupled && (self.omega != 0.0 || self.chi != 0.0) {
            return Err(Error::InvalidSpec(
                "detuning and squeezing are only defined for the position-coupled model".into(),
            ));
        }
        Ok(())
    }

    /// `Some` when the Hamiltonian is of the exactly solvable form
    /// `λX + f(P)` (after a quarter rotation for the momentum-coupled model).
    /// The flag reports whether the rotation is needed.
    pub fn shear_form(&self) -> Option<(ShearForm, bool)> {
        let m = self.order as usize;
        let mut f = vec![0.0; m.max(2) + 1];
        match self.coupling {
            Coupling::PositionCoupled => {
                let compensated = (self.chi + self.omega / 2.0).abs() <= 1e-15 * self.omega.abs().max(1.0);
                if !compensated {
                    return None;
                }
                f[2] += self.omega;
                f[m] += self.g;
                Some((ShearForm { lambda: self.lambda, f }, false))
            }
            Coupling::MomentumCoupled => {
                // R†(λX + G(−P)^M)R = λP + G X^M
                f[m] = if m % 2 == 0 { self.g } else { -self.g };
                Some((ShearForm { lambda: self.lambda, f }, true))
            }
        }
    }
}

/// Hamiltonian matrix of `spec` in `space`.
///
/// The detuning enters as `Ω(N + ½)`, i.e. the identity offset of the
/// compensation identity `ΩN − (Ω/2)(a² + a†²) = ΩP² − Ω/2` is removed.
pub fn build_hamiltonian(space: &FockSpace, spec: &HamiltonianSpec) -> Result<Operator> {
    spec.validate()?;
    let h = match spec.coupling {
        Coupling::PositionCoupled => {
            let mut h = space.x() * spec.lambda;
            if spec.omega != 0.0 {
                let shifted = space.n() + &(&space.identity() * 0.5);
                h = &h + &(&shifted * spec.omega);
            }
            if spec.chi != 0.0 {
                let sq = &space.a().pow(2) + &space.a_dag().pow(2);
                h = &h + &(&sq * spec.chi);
            }
            if spec.g != 0.0 {
                h = &h + &(&space.p().pow(spec.order) * spec.g);
            }
            h
        }
        Coupling::MomentumCoupled => {
            let mut h = space.p() * spec.lambda;
            if spec.g != 0.0 {
                h = &h + &(&space.x().pow(spec.order) * spec.g);
            }
            h
        }
    };
    Ok(h)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Method {
    /// Eigendecomposition up to `eigen_max_dim`, Lanczos beyond.
    #[default]
    Auto,
    Eigen,
    Krylov,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvolveOptions {
    pub method: Method,
    /// Accuracy target of the Krylov integrator (per unit of total time).
    pub tol: f64,
    pub eigen_max_dim: usize,
    /// Largest dimension reached by automatic doubling.
    pub max_dim: usize,
    pub tolerances: Tolerances,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self { method: Method::Auto, tol: 1e-10, eigen_max_dim: 512, max_dim: 4096, tolerances: Tolerances::default() }
    }
}

#[derive(Clone, Debug)]
pub struct EvolutionResult {
    pub state: StateVector,
    pub time: f64,
    pub tail_mass: f64,
    /// `|⟨H⟩(T) − ⟨H⟩(0)| / max(|⟨H⟩(0)|, 1)`.
    pub energy_drift: f64,
}

fn check_evolution_inputs(h: &Operator, t: f64, psi0: &StateVector) -> Result<()> {
    if !(t >= 0.0) {
        return Err(Error::Contract(format!("evolution time must be non-negative, got {t}")));
    }
    if h.dim() != psi0.dim() {
        return Err(Error::Contract("Hamiltonian and state dimensions differ".into()));
    }
    let scale = h.max_abs_entry().max(1.0);
    if h.hermiticity_defect() > 1e-12 * scale {
        return Err(Error::Contract("Hamiltonian is not Hermitian".into()));
    }
    Ok(())
}

fn finish(
    h: &Operator,
    psi0: &StateVector,
    amplitudes: DVector<C64>,
    t: f64,
    tol: &Tolerances,
) -> Result<EvolutionResult> {
    let state = StateVector::from_parts_unchecked(psi0.space().clone(), amplitudes);
    let tail_mass = state.tail_mass(tol.guard_fraction);
    if tail_mass > tol.tail_threshold {
        return Err(Error::Truncation { tail: tail_mass, threshold: tol.tail_threshold, dim: state.dim() });
    }
    let e0 = mean_and_variance(psi0.amplitudes(), h).0.re;
    let e1 = mean_and_variance(state.amplitudes(), h).0.re;
    let energy_drift = (e1 - e0).abs() / e0.abs().max(1.0);
    Ok(EvolutionResult { state, time: t, tail_mass, energy_drift })
}

/// `e^{-iHT} ψ₀` in the space of `psi0`.
///
/// Fails with [`Error::Truncation`] when the evolved state leaks into the
/// guard band.
pub fn evolve(h: &Operator, t: f64, psi0: &StateVector, opts: &EvolveOptions) -> Result<EvolutionResult> {
    check_evolution_inputs(h, t, psi0)?;
    if t == 0.0 {
        return finish(h, psi0, psi0.amplitudes().clone(), t, &opts.tolerances);
    }
    let use_eigen = match opts.method {
        Method::Eigen => true,
        Method::Krylov => false,
        Method::Auto => h.dim() <= opts.eigen_max_dim,
    };
    let out = if use_eigen {
        SpectralPropagator::new(h).propagate(psi0.amplitudes(), t)
    } else {
        lanczos_propagate(h, psi0.amplitudes(), t, opts.tol)
    };
    finish(h, psi0, out, t, &opts.tolerances)
}

/// Runs `f(dim)` with `dim = start, 2·start, …` until it stops failing with
/// [`Error::Truncation`] or `max_dim` is exceeded.
pub fn with_adaptive_dimension<T>(start: usize, max_dim: usize, mut f: impl FnMut(usize) -> Result<T>) -> Result<T> {
    let mut dim = start.max(2);
    loop {
        match f(dim) {
            Err(Error::Truncation { .. }) if dim * 2 <= max_dim => dim *= 2,
            other => return other,
        }
    }
}

/// Evolves in the smallest doubling of `psi0`'s dimension that keeps the
/// guard band empty.
pub fn evolve_spec(spec: &HamiltonianSpec, t: f64, psi0: &StateVector, opts: &EvolveOptions) -> Result<EvolutionResult> {
    spec.validate()?;
    with_adaptive_dimension(psi0.dim(), opts.max_dim, |dim| {
        let space = space_for(psi0, dim)?;
        let psi = psi0.embed(space.clone())?;
        let h = build_hamiltonian(&space, spec)?;
        evolve(&h, t, &psi, opts)
    })
}

fn space_for(psi0: &StateVector, dim: usize) -> Result<Arc<FockSpace>> {
    if dim == psi0.dim() {
        Ok(psi0.space().clone())
    } else {
        make_space(dim)
    }
}

/// Evolved states on a time grid, all in one common dimension.
pub fn evolve_grid(
    spec: &HamiltonianSpec,
    times: &[f64],
    psi0: &StateVector,
    opts: &EvolveOptions,
) -> Result<Vec<EvolutionResult>> {
    spec.validate()?;
    with_adaptive_dimension(psi0.dim(), opts.max_dim, |dim| evolve_grid_at(spec, times, psi0, dim, opts))
}

/// [`evolve_grid`] at a fixed dimension.
pub fn evolve_grid_at(
    spec: &HamiltonianSpec,
    times: &[f64],
    psi0: &StateVector,
    dim: usize,
    opts: &EvolveOptions,
) -> Result<Vec<EvolutionResult>> {
    let space = space_for(psi0, dim)?;
    let psi = psi0.embed(space.clone())?;
    let h = build_hamiltonian(&space, spec)?;
    let use_eigen = match opts.method {
        Method::Eigen => true,
        Method::Krylov => false,
        Method::Auto => dim <= opts.eigen_max_dim,
    };
    if use_eigen {
        let prop = SpectralPropagator::new(&h);
        let coeffs = prop.to_eigenbasis(psi.amplitudes());
        times
            .iter()
            .map(|&t| finish(&h, &psi, prop.propagate_coefficients(&coeffs, t), t, &opts.tolerances))
            .collect()
    } else {
        let mut order: Vec<usize> = (0..times.len()).collect();
        order.sort_by(|&a, &b| times[a].total_cmp(&times[b]));
        let mut results: Vec<Option<EvolutionResult>> = vec![None; times.len()];
        let (mut current, mut t_now) = (psi.amplitudes().clone(), 0.0);
        for idx in order {
            current = lanczos_propagate(&h, &current, times[idx] - t_now, opts.tol);
            t_now = times[idx];
            results[idx] = Some(finish(&h, &psi, current.clone(), t_now, &opts.tolerances)?);
        }
        Ok(results.into_iter().map(|r| r.expect("every time visited")).collect())
    }
}

/// Which representation evaluates closed-system quantities.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Route {
    /// Exact shear propagation when the Hamiltonian allows it, Fock-space
    /// evolution otherwise.
    #[default]
    Auto,
    Fock,
    Shear,
}

/// `⟨ψ(T)|O|ψ(T)⟩` and its variance.
pub fn heisenberg_moments(
    spec: &HamiltonianSpec,
    t: f64,
    obs: &Observable,
    psi0: &StateVector,
    route: Route,
    opts: &EvolveOptions,
) -> Result<(C64, f64)> {
    spec.validate()?;
    let shear = spec.shear_form();
    match (route, shear) {
        (Route::Fock, _) | (Route::Auto, None) => {
            let res = evolve_spec(spec, t, psi0, opts)?;
            let op = obs.to_operator(res.state.space());
            Ok(mean_and_variance(res.state.amplitudes(), &op))
        }
        (Route::Shear, None) => Err(Error::InvalidSpec(
            "the shear route needs a Hamiltonian of the form λX + f(P)".into(),
        )),
        (_, Some((form, rotated))) => Ok(shear_moments(&form, rotated, t, obs, psi0)),
    }
}

/// `⟨ψ(T)|O|ψ(T)⟩`.
pub fn heisenberg_expectation(
    spec: &HamiltonianSpec,
    t: f64,
    obs: &Observable,
    psi0: &StateVector,
    opts: &EvolveOptions,
) -> Result<C64> {
    heisenberg_moments(spec, t, obs, psi0, Route::Auto, opts).map(|(m, _)| m)
}

fn shear_moments(form: &ShearForm, rotated: bool, t: f64, obs: &Observable, psi0: &StateVector) -> (C64, f64) {
    let x_deg = form.degree().saturating_sub(1).max(1);
    let degree = if rotated { obs.degree_with(1, x_deg) } else { obs.degree_with(x_deg, 1) };
    let dim = psi0.support(1e-32) + degree + 3;
    let space = make_space(dim.max(psi0.dim())).expect("dimension at least 2");
    let psi = psi0.embed(space.clone()).expect("zero padding never truncates");
    let amps = if rotated { shear::quarter_rotation(&psi) } else { psi.amplitudes().clone() };
    let (xh, ph) = form.heisenberg_quadratures(space.x(), space.p(), t);
    let v = if rotated {
        // R X R† = −P, R P R† = X
        obs.apply_with(&(-&ph), &xh, &amps)
    } else {
        obs.apply_with(&xh, &ph, &amps)
    };
    let mean = amps.dotc(&v);
    (mean, v.norm_squared() - mean.re * mean.re)
}

//! Quantum Fisher information of evolved pure states, the optimal
//! measurement operator and its error-propagation precision.

use std::sync::Arc;

use nalgebra::DVector;
use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::dynamics::shear::{self, MomentumWavefunction, ShearForm};
use crate::dynamics::{
    evolve_grid_at, heisenberg_moments, with_adaptive_dimension, EvolveOptions, HamiltonianSpec, Observable, Route,
};
use crate::hilbert::{FockSpace, Operator, StateVector};
use crate::{Error, Result};

/// `4(⟨dψ|dψ⟩ − |⟨ψ|dψ⟩|²)` for a normalized `ψ`.
pub fn qfi_pure(psi: &StateVector, dpsi: &DVector<C64>) -> Result<f64> {
    if dpsi.len() != psi.dim() {
        return Err(Error::Contract(format!(
            "derivative has dimension {}, state has {}",
            dpsi.len(),
            psi.dim()
        )));
    }
    let overlap = psi.amplitudes().dotc(dpsi);
    Ok(4.0 * (dpsi.norm_squared() - overlap.norm_sqr()))
}

/// Settings of the fidelity-based Fisher information.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QfiOptions {
    /// Initial half-step in the parameter.
    pub eps: f64,
    pub route: Route,
    pub evolve: EvolveOptions,
}

impl Default for QfiOptions {
    fn default() -> Self {
        Self { eps: 1e-3, route: Route::Auto, evolve: EvolveOptions::default() }
    }
}

/// Target and ceiling of `ε²F`, which sets the size of the neglected
/// higher-order terms in the fidelity expansion.
const STEP_TARGET: f64 = 1e-5;
const STEP_CEILING: f64 = 1e-4;
/// Below this infidelity the difference `1 − |⟨·|·⟩|` is mostly roundoff.
const INFIDELITY_FLOOR: f64 = 1e-12;
/// Spread between the two steps above which an estimate is flagged.
const STEP_SPREAD_WARN: f64 = 0.01;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QfiEstimate {
    pub value: f64,
    /// Half-step actually used for the coarse estimate, smaller than the
    /// requested one when `ε²F` would have been too large.
    pub eps: f64,
    /// Relative difference between the two step sizes before extrapolation.
    pub step_spread: f64,
    pub warnings: Vec<String>,
}

/// Pairwise fidelity of states evolved at two parameter points.
trait OverlapOracle {
    fn overlap(&self, a: f64, b: f64) -> Result<f64>;
}

struct ShearOracle<F> {
    wf: MomentumWavefunction,
    make: F,
    t: f64,
}

impl<F: Fn(f64) -> (ShearForm, bool)> OverlapOracle for ShearOracle<F> {
    fn overlap(&self, a: f64, b: f64) -> Result<f64> {
        let (fa, _) = (self.make)(a);
        let (fb, _) = (self.make)(b);
        Ok(shear::overlap(&self.wf, &fa, &fb, self.t).norm())
    }
}

struct FockOracle<'a, F> {
    psi0: &'a StateVector,
    make: F,
    t: f64,
    opts: EvolveOptions,
}

impl<F: Fn(f64) -> HamiltonianSpec> OverlapOracle for FockOracle<'_, F> {
    fn overlap(&self, a: f64, b: f64) -> Result<f64> {
        with_adaptive_dimension(self.psi0.dim(), self.opts.max_dim, |dim| {
            let sa = evolve_grid_at(&(self.make)(a), &[self.t], self.psi0, dim, &self.opts)?;
            let sb = evolve_grid_at(&(self.make)(b), &[self.t], self.psi0, dim, &self.opts)?;
            Ok(sa[0].state.inner(&sb[0].state).norm())
        })
    }
}

fn fidelity_qfi(oracle: &dyn OverlapOracle, center: f64, eps0: f64) -> Result<QfiEstimate> {
    if !(eps0 > 0.0) || !eps0.is_finite() {
        return Err(Error::Contract(format!("finite-difference step must be positive, got {eps0}")));
    }
    let at = |eps: f64| -> Result<(f64, f64)> {
        let infidelity = 1.0 - oracle.overlap(center - eps, center + eps)?;
        Ok((8.0 * infidelity / (4.0 * eps * eps), infidelity))
    };
    let mut eps = eps0;
    let (mut coarse, mut infid) = at(eps)?;
    if eps * eps * coarse > STEP_CEILING {
        eps = (STEP_TARGET / coarse).sqrt();
        (coarse, infid) = at(eps)?;
    }
    let (fine, fine_infid) = at(eps / 2.0)?;
    let smallest = infid.min(fine_infid);
    if smallest < INFIDELITY_FLOOR {
        return Err(Error::StepSize { eps: eps / 2.0, infidelity: smallest });
    }
    Ok(extrapolate(eps, coarse, fine))
}

/// Richardson combination of the estimates at `eps` and `eps/2`.
fn extrapolate(eps: f64, coarse: f64, fine: f64) -> QfiEstimate {
    let step_spread = (fine - coarse).abs() / fine.abs().max(f64::MIN_POSITIVE);
    let mut warnings = Vec::new();
    if step_spread > STEP_SPREAD_WARN {
        warnings.push(format!("estimates at eps and eps/2 differ by {:.2}%", 100.0 * step_spread));
    }
    QfiEstimate { value: (4.0 * fine - coarse) / 3.0, eps, step_spread, warnings }
}

fn shear_wavefunction(psi0: &StateVector, rotated: bool) -> MomentumWavefunction {
    if rotated {
        MomentumWavefunction::new(&shear::quarter_rotation(psi0))
    } else {
        MomentumWavefunction::new(psi0.amplitudes())
    }
}

fn fisher_along(
    make: impl Fn(f64) -> HamiltonianSpec + Copy,
    center: f64,
    t: f64,
    psi0: &StateVector,
    opts: &QfiOptions,
) -> Result<QfiEstimate> {
    let spec = make(center);
    spec.validate()?;
    if !(t >= 0.0) {
        return Err(Error::Contract(format!("evolution time must be non-negative, got {t}")));
    }
    let shear_ok = spec.shear_form().is_some();
    let use_shear = match opts.route {
        Route::Auto => shear_ok,
        Route::Shear if !shear_ok => {
            return Err(Error::InvalidSpec("the shear route needs a Hamiltonian of the form λX + f(P)".into()))
        }
        Route::Shear => true,
        Route::Fock => false,
    };
    if use_shear {
        let rotated = spec.shear_form().map(|s| s.1).unwrap_or(false);
        let oracle = ShearOracle {
            wf: shear_wavefunction(psi0, rotated),
            make: move |y: f64| make(y).shear_form().expect("shear form is parameter independent"),
            t,
        };
        fidelity_qfi(&oracle, center, opts.eps)
    } else {
        let oracle = FockOracle { psi0, make, t, opts: opts.evolve };
        fidelity_qfi(&oracle, center, opts.eps)
    }
}

/// Fisher information of `ψ(T; λ)` with respect to `λ`.
pub fn qfi_numeric(spec: &HamiltonianSpec, t: f64, psi0: &StateVector, eps: f64) -> Result<f64> {
    qfi_numeric_with(spec, t, psi0, &QfiOptions { eps, ..Default::default() }).map(|e| e.value)
}

pub fn qfi_numeric_with(spec: &HamiltonianSpec, t: f64, psi0: &StateVector, opts: &QfiOptions) -> Result<QfiEstimate> {
    let base = *spec;
    fisher_along(move |l| base.with_lambda(l), spec.lambda, t, psi0, opts)
}

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Curves `λ(y)`, `G(y)` with their derivatives.
#[derive(Clone)]
pub struct ParameterizedFamily {
    lambda_of_y: RealFn,
    g_of_y: RealFn,
    dlambda_dy: RealFn,
    dg_dy: RealFn,
}

impl std::fmt::Debug for ParameterizedFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ParameterizedFamily").finish_non_exhaustive()
    }
}

const DERIVATIVE_TOL: f64 = 1e-6;

impl ParameterizedFamily {
    /// Builds the family after checking the supplied derivatives against
    /// centered differences at every point of `probe`.
    pub fn new(
        lambda_of_y: impl Fn(f64) -> f64 + Send + Sync + 'static,
        g_of_y: impl Fn(f64) -> f64 + Send + Sync + 'static,
        dlambda_dy: impl Fn(f64) -> f64 + Send + Sync + 'static,
        dg_dy: impl Fn(f64) -> f64 + Send + Sync + 'static,
        probe: &[f64],
    ) -> Result<Self> {
        let fam = Self {
            lambda_of_y: Arc::new(lambda_of_y),
            g_of_y: Arc::new(g_of_y),
            dlambda_dy: Arc::new(dlambda_dy),
            dg_dy: Arc::new(dg_dy),
        };
        for &y in probe {
            for (name, f, df) in [("lambda", &fam.lambda_of_y, &fam.dlambda_dy), ("G", &fam.g_of_y, &fam.dg_dy)] {
                let h = 1e-5 * y.abs().max(1.0);
                let fd = (f(y + h) - f(y - h)) / (2.0 * h);
                let d = df(y);
                if (fd - d).abs() > DERIVATIVE_TOL * d.abs().max(1.0) {
                    return Err(Error::InvalidSpec(format!(
                        "d{name}/dy at y = {y}: supplied {d}, finite difference {fd}"
                    )));
                }
            }
        }
        Ok(fam)
    }

    /// `λ = l0 + l1·y`, `G = g0 + g1·y`.
    pub fn linear(l0: f64, l1: f64, g0: f64, g1: f64) -> Self {
        Self::new(move |y| l0 + l1 * y, move |y| g0 + g1 * y, move |_| l1, move |_| g1, &[])
            .expect("linear families are exact")
    }

    pub fn lambda(&self, y: f64) -> f64 {
        (self.lambda_of_y)(y)
    }
    pub fn g(&self, y: f64) -> f64 {
        (self.g_of_y)(y)
    }
    pub fn dlambda(&self, y: f64) -> f64 {
        (self.dlambda_dy)(y)
    }
    pub fn dg(&self, y: f64) -> f64 {
        (self.dg_dy)(y)
    }

    /// `Gλ' − G'λ`, whose vanishing removes the nonlinear enhancement.
    pub fn enhancement_factor(&self, y: f64) -> f64 {
        self.g(y) * self.dlambda(y) - self.dg(y) * self.lambda(y)
    }
}

/// Fisher information with respect to `y` of `λ(y)X + G(y)P^M`.
pub fn qfi_family(
    family: &ParameterizedFamily,
    y: f64,
    m: u32,
    t: f64,
    psi0: &StateVector,
    eps: f64,
) -> Result<f64> {
    qfi_family_with(family, y, m, t, psi0, &QfiOptions { eps, ..Default::default() }).map(|e| e.value)
}

pub fn qfi_family_with(
    family: &ParameterizedFamily,
    y: f64,
    m: u32,
    t: f64,
    psi0: &StateVector,
    opts: &QfiOptions,
) -> Result<QfiEstimate> {
    let make = |y: f64| HamiltonianSpec::new(family.lambda(y), family.g(y), m);
    fisher_along(make, y, t, psi0, opts)
}

/// Fisher information on a grid of times, sharing one eigendecomposition per
/// parameter point when the Fock route is used.
pub fn qfi_sweep(spec: &HamiltonianSpec, times: &[f64], psi0: &StateVector, opts: &QfiOptions) -> Result<Vec<QfiEstimate>> {
    let fock = match opts.route {
        Route::Fock => true,
        Route::Auto => spec.shear_form().is_none(),
        Route::Shear => false,
    };
    if !fock {
        return times.iter().map(|&t| qfi_numeric_with(spec, t, psi0, opts)).collect();
    }
    spec.validate()?;
    let eps = opts.eps;
    let lambdas = [spec.lambda - eps, spec.lambda + eps, spec.lambda - eps / 2.0, spec.lambda + eps / 2.0];
    let states = with_adaptive_dimension(psi0.dim(), opts.evolve.max_dim, |dim| {
        lambdas
            .iter()
            .map(|&l| evolve_grid_at(&spec.with_lambda(l), times, psi0, dim, &opts.evolve))
            .collect::<Result<Vec<_>>>()
    })?;
    let mut out = Vec::with_capacity(times.len());
    for (i, &t) in times.iter().enumerate() {
        let fid = |a: usize, b: usize| 1.0 - states[a][i].state.inner(&states[b][i].state).norm();
        let (infid, fine_infid) = (fid(0, 1), fid(2, 3));
        let coarse = 2.0 * infid / (eps * eps);
        if eps * eps * coarse > STEP_CEILING || infid.min(fine_infid) < INFIDELITY_FLOOR {
            // fall back to the adaptive single-point estimate
            out.push(qfi_numeric_with(spec, t, psi0, opts)?);
            continue;
        }
        let fine = 8.0 * fine_infid / (eps * eps);
        out.push(extrapolate(eps, coarse, fine));
    }
    Ok(out)
}

/// Expansion point and model of the optimal measurement operator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MeasurementSpec {
    pub lambda_c: f64,
    pub g: f64,
    pub order: u32,
    pub t: f64,
}

impl MeasurementSpec {
    fn validate(&self) -> Result<()> {
        if self.lambda_c == 0.0 || !self.lambda_c.is_finite() {
            return Err(Error::InvalidSpec("the expansion point lambda_c must be nonzero".into()));
        }
        if self.order < 2 {
            return Err(Error::InvalidOrder(self.order));
        }
        Ok(())
    }

    /// Coefficients of `(G/λc)[P^M − (P + λcT)^M]` in powers of `P`.
    fn p_coefficients(&self) -> Vec<f64> {
        let m = self.order;
        let s = self.lambda_c * self.t;
        (0..m)
            .map(|k| {
                let binom = (0..k).fold(1.0, |acc, i| acc * (m - i) as f64 / (i + 1) as f64);
                -self.g / self.lambda_c * binom * s.powi((m - k) as i32)
            })
            .collect()
    }

    /// `M_e` as a polynomial in the quadratures.
    pub fn observable(&self) -> Result<Observable> {
        self.validate()?;
        Ok(Observable::x().plus(&Observable::p_polynomial(&self.p_coefficients())))
    }
}

/// `M_e = X + (G/λc)P^M − (G/λc)(P + λcT)^M` as a matrix on `space`.
pub fn optimal_measurement(space: &FockSpace, ms: &MeasurementSpec) -> Result<Operator> {
    Ok(ms.observable()?.to_operator(space))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ErrorPropagation {
    pub delta_lambda: f64,
    pub mean: f64,
    pub variance: f64,
    pub derivative: f64,
}

/// Smallest accepted `|∂λ⟨M_e⟩|`.
pub const SENSITIVITY_FLOOR: f64 = 1e-12;

/// `δλ = √Var(M_e) / |∂λ⟨M_e⟩|` with a centered difference of step `h`.
pub fn error_propagation(spec: &HamiltonianSpec, ms: &MeasurementSpec, psi0: &StateVector, h: f64) -> Result<f64> {
    error_propagation_with(spec, ms, psi0, h, &EvolveOptions::default()).map(|e| e.delta_lambda)
}

pub fn error_propagation_with(
    spec: &HamiltonianSpec,
    ms: &MeasurementSpec,
    psi0: &StateVector,
    h: f64,
    opts: &EvolveOptions,
) -> Result<ErrorPropagation> {
    let obs = ms.observable()?;
    if (spec.lambda - ms.lambda_c).abs() > 0.01 * ms.lambda_c.abs() {
        return Err(Error::Contract(format!(
            "lambda = {} is not within 1% of the expansion point {}",
            spec.lambda, ms.lambda_c
        )));
    }
    if !(h > 0.0) {
        return Err(Error::Contract(format!("difference step must be positive, got {h}")));
    }
    let (mean, variance) = heisenberg_moments(spec, ms.t, &obs, psi0, Route::Auto, opts)?;
    let plus = heisenberg_moments(&spec.with_lambda(spec.lambda + h), ms.t, &obs, psi0, Route::Auto, opts)?.0;
    let minus = heisenberg_moments(&spec.with_lambda(spec.lambda - h), ms.t, &obs, psi0, Route::Auto, opts)?.0;
    let derivative = (plus.re - minus.re) / (2.0 * h);
    if !(derivative.abs() >= SENSITIVITY_FLOOR) {
        return Err(Error::DegenerateSensitivity { derivative, floor: SENSITIVITY_FLOOR });
    }
    Ok(ErrorPropagation { delta_lambda: variance.max(0.0).sqrt() / derivative.abs(), mean: mean.re, variance, derivative })
}

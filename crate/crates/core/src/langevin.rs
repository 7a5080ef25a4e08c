//! Semiclassical stochastic trajectories for the two dissipative models.
//!
//! Both models share the structure
//!
//! ```text
//! dX = (aX + λ) dt + σ_x dW_x
//! dP = (−M G X^{M−1} − bP) dt + σ_p dW_p
//! ```
//!
//! with `a = 0, b = γ` for friction and `a = μ − γ, b = μ + γ` for the driven
//! cavity. Several parameter variants can be advanced on the same noise
//! realisation, which is how λ-derivatives and squeezing sweeps get their
//! variance reduction.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Model {
    Friction,
    Cavity,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Integrator {
    /// Exact propagation of the linear parts and of the noise variance, with
    /// the nonlinear force interpolated linearly across the step.
    #[default]
    Exponential,
    EulerMaruyama,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LangevinConfig {
    pub model: Model,
    pub lambda: f64,
    pub g: f64,
    pub order: u32,
    pub gamma: f64,
    /// Two-photon drive (cavity only).
    pub mu: f64,
    /// Input squeezing (cavity only).
    pub r: f64,
    /// Noise enhancement of the friction bath, 1 at zero temperature.
    pub thermal_factor: f64,
    pub x0_mean: f64,
    pub p0_mean: f64,
    pub x0_var: f64,
    pub p0_var: f64,
    pub n_traj: u64,
    pub dt: f64,
    pub t_max: f64,
    /// Times at which moments are recorded; empty means `[t_max]`.
    pub record_times: Vec<f64>,
    pub seed: u64,
    pub integrator: Integrator,
    /// Gaussian draws combined into each increment. Running with `dt` and
    /// `k` substeps consumes the same random numbers as `dt/k` with one,
    /// which makes step refinement a pathwise comparison.
    pub noise_substeps: u32,
}

impl LangevinConfig {
    fn base(model: Model, lambda: f64, g: f64, order: u32, gamma: f64) -> Self {
        Self {
            model,
            lambda,
            g,
            order,
            gamma,
            mu: 0.0,
            r: 0.0,
            thermal_factor: 1.0,
            x0_mean: 0.0,
            p0_mean: 0.0,
            x0_var: 0.5,
            p0_var: 0.5,
            n_traj: 10_000,
            dt: 0.01 / gamma.max(lambda.abs()).max(1.0),
            t_max: 10.0,
            record_times: Vec::new(),
            seed: 0,
            integrator: Integrator::Exponential,
            noise_substeps: 1,
        }
    }

    pub fn friction(lambda: f64, g: f64, order: u32, gamma: f64) -> Self {
        Self::base(Model::Friction, lambda, g, order, gamma)
    }

    pub fn cavity(lambda: f64, g: f64, order: u32, gamma: f64, mu: f64, r: f64) -> Self {
        let mut c = Self::base(Model::Cavity, lambda, g, order, gamma);
        c.mu = mu;
        c.r = r;
        c.dt = 0.01 / gamma.max(mu).max(lambda.abs()).max(1.0);
        c
    }

    /// Largest step accepted by [`validate`](Self::validate).
    pub fn max_dt(&self) -> f64 {
        let mu = if self.model == Model::Cavity { self.mu } else { 0.0 };
        0.01 / self.gamma.max(mu).max(self.lambda.abs()).max(1.0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.order < 2 {
            return Err(Error::InvalidOrder(self.order));
        }
        if !(self.gamma > 0.0) {
            return Err(Error::InvalidDissipation(self.gamma));
        }
        let finite = [self.lambda, self.g, self.mu, self.r, self.x0_mean, self.p0_mean, self.dt, self.t_max];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("langevin parameters must be finite".into()));
        }
        if self.model == Model::Cavity && self.mu < 0.0 {
            return Err(Error::Config(format!("mu must be non-negative, got {}", self.mu)));
        }
        if self.model == Model::Friction && !(self.thermal_factor >= 1.0) {
            return Err(Error::Config(format!("thermal_factor must be at least 1, got {}", self.thermal_factor)));
        }
        if !(self.x0_var >= 0.0 && self.p0_var >= 0.0) {
            return Err(Error::Config("initial variances must be non-negative".into()));
        }
        if self.n_traj < 2 {
            return Err(Error::Config(format!("n_traj must be at least 2, got {}", self.n_traj)));
        }
        if self.noise_substeps == 0 {
            return Err(Error::Config("noise_substeps must be positive".into()));
        }
        if !(self.dt > 0.0) || self.dt > self.max_dt() * (1.0 + 1e-12) {
            return Err(Error::Config(format!("dt = {} violates the stability bound {}", self.dt, self.max_dt())));
        }
        if !(self.t_max > 0.0) {
            return Err(Error::Config(format!("t_max must be positive, got {}", self.t_max)));
        }
        self.record_steps().map(|_| ())
    }

    fn steps_for(&self, t: f64) -> Result<usize> {
        let n = (t / self.dt).round();
        if (n * self.dt - t).abs() > 1e-9 * t.max(1.0) {
            return Err(Error::Config(format!("time {t} is not a multiple of dt = {}", self.dt)));
        }
        Ok(n as usize)
    }

    fn record_steps(&self) -> Result<Vec<usize>> {
        let total = self.steps_for(self.t_max)?;
        if self.record_times.is_empty() {
            return Ok(vec![total]);
        }
        let mut out = Vec::with_capacity(self.record_times.len());
        for &t in &self.record_times {
            if !(0.0..=self.t_max * (1.0 + 1e-12)).contains(&t) {
                return Err(Error::Config(format!("record time {t} outside [0, t_max]")));
            }
            let s = self.steps_for(t)?;
            if out.last().is_some_and(|&prev| s <= prev) {
                return Err(Error::Config("record_times must be strictly increasing".into()));
            }
            out.push(s);
        }
        Ok(out)
    }

    fn time_grid(&self) -> Vec<f64> {
        self.record_steps().expect("validated").iter().map(|&s| s as f64 * self.dt).collect()
    }

    fn rates(&self) -> (f64, f64) {
        match self.model {
            Model::Friction => (0.0, self.gamma),
            Model::Cavity => (self.mu - self.gamma, self.mu + self.gamma),
        }
    }
}

/// White-noise intensities of the two quadrature channels.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NoiseModel {
    pub sigma_x: f64,
    pub sigma_p: f64,
}

impl NoiseModel {
    pub fn for_config(cfg: &LangevinConfig) -> Self {
        Self::with_squeezing(cfg, cfg.r)
    }

    fn with_squeezing(cfg: &LangevinConfig, r: f64) -> Self {
        match cfg.model {
            Model::Friction => {
                let s = (cfg.gamma * cfg.thermal_factor).sqrt();
                Self { sigma_x: s, sigma_p: s }
            }
            Model::Cavity => Self {
                sigma_x: (cfg.gamma * (-2.0 * r).exp()).sqrt(),
                sigma_p: (cfg.gamma * (2.0 * r).exp()).sqrt(),
            },
        }
    }
}

/// Streaming central moments up to fourth order, mergeable in any order
/// with a deterministic result for a fixed merge tree.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Moments4 {
    n: f64,
    mean: f64,
    m2: f64,
    m3: f64,
    m4: f64,
}

impl Moments4 {
    pub fn push(&mut self, x: f64) {
        self.merge(&Moments4 { n: 1.0, mean: x, ..Default::default() });
    }

    pub fn merge(&mut self, o: &Moments4) {
        if o.n == 0.0 {
            return;
        }
        if self.n == 0.0 {
            *self = *o;
            return;
        }
        let (na, nb) = (self.n, o.n);
        let n = na + nb;
        let d = o.mean - self.mean;
        let d2 = d * d;
        let m4 = self.m4
            + o.m4
            + d2 * d2 * na * nb * (na * na - na * nb + nb * nb) / (n * n * n)
            + 6.0 * d2 * (na * na * o.m2 + nb * nb * self.m2) / (n * n)
            + 4.0 * d * (na * o.m3 - nb * self.m3) / n;
        let m3 = self.m3 + o.m3 + d2 * d * na * nb * (na - nb) / (n * n) + 3.0 * d * (na * o.m2 - nb * self.m2) / n;
        let m2 = self.m2 + o.m2 + d2 * na * nb / n;
        self.mean += d * nb / n;
        self.m2 = m2;
        self.m3 = m3;
        self.m4 = m4;
        self.n = n;
    }

    pub fn count(&self) -> f64 {
        self.n
    }
    pub fn mean(&self) -> f64 {
        self.mean
    }
    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        self.m2 / (self.n - 1.0)
    }
    pub fn stderr_mean(&self) -> f64 {
        (self.variance() / self.n).sqrt()
    }
    /// Large-sample standard error of [`variance`](Self::variance).
    pub fn stderr_variance(&self) -> f64 {
        let v = self.m2 / self.n;
        ((self.m4 / self.n - v * v).max(0.0) / self.n).sqrt()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnsembleMoments {
    pub time_grid: Vec<f64>,
    pub mean_x: Vec<f64>,
    pub mean_p: Vec<f64>,
    pub var_x: Vec<f64>,
    pub var_p: Vec<f64>,
    pub stderr_mean_p: Vec<f64>,
    pub stderr_var_p: Vec<f64>,
    pub n_traj: u64,
    pub warnings: Vec<String>,
}

#[derive(Clone, Copy, Debug)]
struct Variant {
    lambda: f64,
    noise: NoiseModel,
}

/// Per-record accumulators of one chunk of trajectories.
#[derive(Clone)]
struct Tally {
    /// `[record][variant]`
    x: Vec<Vec<Moments4>>,
    p: Vec<Vec<Moments4>>,
    /// `[record][pair]`, moments of `P_plus − P_minus`.
    diff: Vec<Vec<Moments4>>,
}

impl Tally {
    fn new(records: usize, variants: usize, pairs: usize) -> Self {
        Self {
            x: vec![vec![Moments4::default(); variants]; records],
            p: vec![vec![Moments4::default(); variants]; records],
            diff: vec![vec![Moments4::default(); pairs]; records],
        }
    }

    fn merge(&mut self, o: &Tally) {
        for (a, b) in [(&mut self.x, &o.x), (&mut self.p, &o.p), (&mut self.diff, &o.diff)] {
            for (ra, rb) in a.iter_mut().zip(b) {
                for (ma, mb) in ra.iter_mut().zip(rb) {
                    ma.merge(mb);
                }
            }
        }
    }
}

/// Step coefficients shared by all variants.
struct Stepper {
    integrator: Integrator,
    dt: f64,
    a: f64,
    b: f64,
    force: f64,
    power: i32,
    substeps: u32,
    ex: f64,
    gx: f64,
    sx: f64,
    ep: f64,
    w0: f64,
    w1: f64,
    sp: f64,
}

impl Stepper {
    fn new(cfg: &LangevinConfig) -> Self {
        let (a, b) = cfg.rates();
        let dt = cfg.dt;
        let z = a * dt;
        let ex = z.exp();
        // (e^{a dt} − 1)/a and (e^{2a dt} − 1)/(2a), both → dt as a → 0
        let gx = if z.abs() < 1e-12 { dt } else { z.exp_m1() / a };
        let qx = if z.abs() < 1e-12 { dt } else { (2.0 * z).exp_m1() / (2.0 * a) };
        let y = b * dt;
        let ep = (-y).exp();
        let total = -(-y).exp_m1() / b;
        // ∫₀^dt e^{−b(dt−s)} (s/dt) ds
        let w1 = (y - 1.0 + ep) / (b * y);
        let qp = -(-2.0 * y).exp_m1() / (2.0 * b);
        Self {
            integrator: cfg.integrator,
            dt,
            a,
            b,
            force: -(cfg.order as f64) * cfg.g,
            power: cfg.order as i32 - 1,
            substeps: cfg.noise_substeps,
            ex,
            gx,
            sx: qx.sqrt(),
            ep,
            w0: total - w1,
            w1,
            sp: qp.sqrt(),
        }
    }

    fn force(&self, x: f64) -> f64 {
        self.force * x.powi(self.power)
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> (f64, f64) {
        if self.substeps == 1 {
            return (rng.sample(StandardNormal), rng.sample(StandardNormal));
        }
        let (mut zx, mut zp) = (0.0, 0.0);
        for _ in 0..self.substeps {
            zx += rng.sample::<f64, _>(StandardNormal);
            zp += rng.sample::<f64, _>(StandardNormal);
        }
        let s = (self.substeps as f64).sqrt();
        (zx / s, zp / s)
    }

    #[inline]
    fn advance(&self, v: &Variant, x: &mut f64, p: &mut f64, zx: f64, zp: f64) {
        match self.integrator {
            Integrator::Exponential => {
                let f0 = self.force(*x);
                *x = self.ex * *x + v.lambda * self.gx + v.noise.sigma_x * self.sx * zx;
                let f1 = self.force(*x);
                *p = self.ep * *p + self.w0 * f0 + self.w1 * f1 + v.noise.sigma_p * self.sp * zp;
            }
            Integrator::EulerMaruyama => {
                let sq = self.dt.sqrt();
                let f0 = self.force(*x);
                *x += (self.a * *x + v.lambda) * self.dt + v.noise.sigma_x * sq * zx;
                *p += (f0 - self.b * *p) * self.dt + v.noise.sigma_p * sq * zp;
            }
        }
    }
}

const CHUNK: u64 = 256;

fn run_ensemble(cfg: &LangevinConfig, variants: &[Variant], pairs: &[(usize, usize)]) -> Result<Tally> {
    cfg.validate()?;
    let steps = cfg.record_steps()?;
    let stepper = Stepper::new(cfg);
    let nv = variants.len();
    let n_chunks = cfg.n_traj.div_ceil(CHUNK);
    let run_chunk = |c: u64| {
        let mut tally = Tally::new(steps.len(), nv, pairs.len());
        let mut xs = vec![0.0; nv];
        let mut ps = vec![0.0; nv];
        for traj in c * CHUNK..((c + 1) * CHUNK).min(cfg.n_traj) {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(traj);
            let zx0: f64 = rng.sample(StandardNormal);
            let zp0: f64 = rng.sample(StandardNormal);
            xs.fill(cfg.x0_mean + cfg.x0_var.sqrt() * zx0);
            ps.fill(cfg.p0_mean + cfg.p0_var.sqrt() * zp0);
            let mut step = 0;
            for (k, &target) in steps.iter().enumerate() {
                while step < target {
                    let (zx, zp) = stepper.draw(&mut rng);
                    for (v, (x, p)) in variants.iter().zip(xs.iter_mut().zip(ps.iter_mut())) {
                        stepper.advance(v, x, p, zx, zp);
                    }
                    step += 1;
                }
                for j in 0..nv {
                    tally.x[k][j].push(xs[j]);
                    tally.p[k][j].push(ps[j]);
                }
                for (j, &(lo, hi)) in pairs.iter().enumerate() {
                    tally.diff[k][j].push(ps[hi] - ps[lo]);
                }
            }
        }
        tally
    };
    let chunks: Vec<Tally> = (0..n_chunks).into_par_iter().map(run_chunk).collect();
    let mut total = Tally::new(steps.len(), nv, pairs.len());
    for t in &chunks {
        total.merge(t);
    }
    Ok(total)
}

fn moments_of(cfg: &LangevinConfig, tally: &Tally, v: usize) -> EnsembleMoments {
    let col = |m: &Vec<Vec<Moments4>>, f: fn(&Moments4) -> f64| m.iter().map(|r| f(&r[v])).collect::<Vec<_>>();
    let mut warnings = Vec::new();
    if cfg.n_traj < 100 {
        warnings.push(format!("n_traj = {} < 100: under-sampled ensemble", cfg.n_traj));
    }
    EnsembleMoments {
        time_grid: cfg.time_grid(),
        mean_x: col(&tally.x, Moments4::mean),
        mean_p: col(&tally.p, Moments4::mean),
        var_x: col(&tally.x, Moments4::variance),
        var_p: col(&tally.p, Moments4::variance),
        stderr_mean_p: col(&tally.p, Moments4::stderr_mean),
        stderr_var_p: col(&tally.p, Moments4::stderr_variance),
        n_traj: cfg.n_traj,
        warnings,
    }
}

/// Ensemble moments of either model.
pub fn simulate(cfg: &LangevinConfig) -> Result<EnsembleMoments> {
    let v = Variant { lambda: cfg.lambda, noise: NoiseModel::for_config(cfg) };
    let tally = run_ensemble(cfg, &[v], &[])?;
    Ok(moments_of(cfg, &tally, 0))
}

fn require_model(cfg: &LangevinConfig, model: Model) -> Result<()> {
    if cfg.model != model {
        return Err(Error::Config(format!("expected a {model:?} configuration, got {:?}", cfg.model)));
    }
    Ok(())
}

pub fn simulate_friction(cfg: &LangevinConfig) -> Result<EnsembleMoments> {
    require_model(cfg, Model::Friction)?;
    simulate(cfg)
}

pub fn simulate_cavity(cfg: &LangevinConfig) -> Result<EnsembleMoments> {
    require_model(cfg, Model::Cavity)?;
    simulate(cfg)
}

/// Error-propagation precision of a `P` measurement on the recorded times.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PrecisionEstimate {
    pub time_grid: Vec<f64>,
    pub mean_p: Vec<f64>,
    pub var_p: Vec<f64>,
    /// `∂λ⟨P⟩` by centered difference on common random numbers.
    pub derivative: Vec<f64>,
    pub derivative_stderr: Vec<f64>,
    pub delta_lambda: Vec<f64>,
    pub stderr: Vec<f64>,
    pub warnings: Vec<String>,
}

struct PointPrecision {
    mean_p: f64,
    var_p: f64,
    derivative: f64,
    derivative_stderr: f64,
    delta_lambda: f64,
    stderr: f64,
}

fn point_precision(lo: &Moments4, hi: &Moments4, diff: &Moments4, h: f64) -> Result<PointPrecision> {
    let dmean = diff.mean();
    let dse = diff.stderr_mean();
    if dmean == 0.0 || dmean.abs() < 3.0 * dse {
        return Err(Error::DegenerateSensitivity { derivative: dmean / (2.0 * h), floor: 3.0 * dse / (2.0 * h) });
    }
    let var_p = 0.5 * (lo.variance() + hi.variance());
    let var_se = 0.5 * (lo.stderr_variance() + hi.stderr_variance());
    let derivative = dmean / (2.0 * h);
    let derivative_stderr = dse / (2.0 * h);
    let delta_lambda = var_p.sqrt() / derivative.abs();
    let rel = ((var_se / (2.0 * var_p)).powi(2) + (derivative_stderr / derivative).powi(2)).sqrt();
    Ok(PointPrecision {
        mean_p: 0.5 * (lo.mean() + hi.mean()),
        var_p,
        derivative,
        derivative_stderr,
        delta_lambda,
        stderr: delta_lambda * rel,
    })
}

/// `δλ = √Var(P) / |∂λ⟨P⟩|` from paired runs at `λ ± h`.
pub fn estimate_precision(cfg: &LangevinConfig, h: f64) -> Result<PrecisionEstimate> {
    if !(h > 0.0) {
        return Err(Error::Contract(format!("difference step must be positive, got {h}")));
    }
    let noise = NoiseModel::for_config(cfg);
    let variants = [Variant { lambda: cfg.lambda - h, noise }, Variant { lambda: cfg.lambda + h, noise }];
    let tally = run_ensemble(cfg, &variants, &[(0, 1)])?;
    let time_grid = cfg.time_grid();
    let mut out = PrecisionEstimate {
        time_grid: time_grid.clone(),
        mean_p: Vec::new(),
        var_p: Vec::new(),
        derivative: Vec::new(),
        derivative_stderr: Vec::new(),
        delta_lambda: Vec::new(),
        stderr: Vec::new(),
        warnings: moments_of(cfg, &tally, 0).warnings,
    };
    for k in 0..time_grid.len() {
        let pt = point_precision(&tally.p[k][0], &tally.p[k][1], &tally.diff[k][0], h)?;
        out.mean_p.push(pt.mean_p);
        out.var_p.push(pt.var_p);
        out.derivative.push(pt.derivative);
        out.derivative_stderr.push(pt.derivative_stderr);
        out.delta_lambda.push(pt.delta_lambda);
        out.stderr.push(pt.stderr);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SqueezeSweep {
    pub r_grid: Vec<f64>,
    pub delta_lambda: Vec<f64>,
    pub stderr: Vec<f64>,
    pub r_star: f64,
}

/// Precision at `t_max` over a grid of input squeezing, all points sharing
/// one set of noise realisations.
pub fn sweep_squeezing(cfg: &LangevinConfig, r_grid: &[f64], h: f64) -> Result<SqueezeSweep> {
    require_model(cfg, Model::Cavity)?;
    if r_grid.len() < 3 {
        return Err(Error::Config("squeezing sweep needs at least 3 grid points".into()));
    }
    if !(h > 0.0) {
        return Err(Error::Contract(format!("difference step must be positive, got {h}")));
    }
    let mut run = cfg.clone();
    run.record_times = vec![];
    let mut variants = Vec::new();
    let mut pairs = Vec::new();
    for &r in r_grid {
        let noise = NoiseModel::with_squeezing(cfg, r);
        pairs.push((variants.len(), variants.len() + 1));
        variants.push(Variant { lambda: cfg.lambda - h, noise });
        variants.push(Variant { lambda: cfg.lambda + h, noise });
    }
    let tally = run_ensemble(&run, &variants, &pairs)?;
    let mut delta = Vec::new();
    let mut se = Vec::new();
    for (j, &(lo, hi)) in pairs.iter().enumerate() {
        let pt = point_precision(&tally.p[0][lo], &tally.p[0][hi], &tally.diff[0][j], h)?;
        delta.push(pt.delta_lambda);
        se.push(pt.stderr);
    }
    let best = (0..delta.len()).min_by(|&a, &b| delta[a].total_cmp(&delta[b])).expect("nonempty grid");
    check_single_minimum(&delta, &se, best)?;
    Ok(SqueezeSweep { r_grid: r_grid.to_vec(), delta_lambda: delta, stderr: se, r_star: r_grid[best] })
}

/// Rejects a second local minimum separated from the global one by a
/// barrier higher than three standard errors.
fn check_single_minimum(delta: &[f64], se: &[f64], best: usize) -> Result<()> {
    let n = delta.len();
    for j in 0..n {
        if j == best {
            continue;
        }
        let left = j == 0 || delta[j] < delta[j - 1];
        let right = j + 1 == n || delta[j] < delta[j + 1];
        if !(left && right) {
            continue;
        }
        let (a, b) = if j < best { (j, best) } else { (best, j) };
        let barrier = delta[a..=b].iter().cloned().fold(f64::MIN, f64::max);
        if barrier - delta[j] > 3.0 * se[j] {
            return Err(Error::InconclusiveSweep(format!(
                "local minima at grid indices {best} and {j} separated by {:.3e}",
                barrier - delta[j]
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick(mut c: LangevinConfig, n: u64, t: f64) -> LangevinConfig {
        c.n_traj = n;
        c.t_max = t;
        c.seed = 7;
        c
    }

    #[test]
    fn moments_merge_matches_two_pass() {
        let xs: Vec<f64> = (0..57).map(|i| ((i * 37 % 13) as f64).sin() * 3.0 + i as f64 * 0.1).collect();
        let mut a = Moments4::default();
        let mut b = Moments4::default();
        for (i, &x) in xs.iter().enumerate() {
            if i < 20 { a.push(x) } else { b.push(x) }
        }
        a.merge(&b);
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let m2: f64 = xs.iter().map(|x| (x - mean).powi(2)).sum();
        let m4: f64 = xs.iter().map(|x| (x - mean).powi(4)).sum();
        assert!((a.mean() - mean).abs() < 1e-12);
        assert!((a.variance() - m2 / (n - 1.0)).abs() < 1e-10);
        assert!((a.m4 - m4).abs() < 1e-8 * m4);
    }

    #[test]
    fn linear_friction_without_nonlinearity() {
        let mut c = quick(LangevinConfig::friction(1.0, 0.0, 2, 1.0), 4000, 3.0);
        c.x0_mean = 0.5;
        c.p0_mean = 2.0;
        c.record_times = vec![1.0, 3.0];
        let m = simulate_friction(&c).unwrap();
        for (k, &t) in m.time_grid.iter().enumerate() {
            let se_x = (m.var_x[k] / c.n_traj as f64).sqrt();
            assert!((m.mean_x[k] - (0.5 + t)).abs() < 4.0 * se_x);
            assert!((m.mean_p[k] - 2.0 * (-t as f64).exp()).abs() < 4.0 * m.stderr_mean_p[k]);
        }
    }

    #[test]
    fn cavity_pure_decay() {
        let mut c = quick(LangevinConfig::cavity(0.0, 0.0, 2, 1.0, 0.0, 0.0), 2000, 2.0);
        c.x0_mean = 1.5;
        let m = simulate_cavity(&c).unwrap();
        let se = (m.var_x[0] / 2000.0).sqrt();
        assert!((m.mean_x[0] - 1.5 * (-2.0f64).exp()).abs() < 4.0 * se);
    }

    #[test]
    fn deterministic_given_seed() {
        let c = quick(LangevinConfig::friction(1.0, 0.1, 3, 1.0), 700, 1.0);
        let a = simulate(&c).unwrap();
        let b = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap().install(|| simulate(&c).unwrap());
        assert_eq!(a, b);
        let mut other = c.clone();
        other.seed = 8;
        assert_ne!(simulate(&other).unwrap().mean_p, a.mean_p);
    }

    #[test]
    fn rejects_unstable_step_and_model_mismatch() {
        let mut c = LangevinConfig::friction(1.0, 0.1, 2, 1.0);
        c.dt = 0.02;
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        let c = LangevinConfig::friction(1.0, 0.1, 2, 1.0);
        assert!(simulate_cavity(&c).is_err());
        let mut c = LangevinConfig::friction(1.0, 0.1, 2, 1.0);
        c.t_max = 1.005;
        assert!(c.validate().is_err());
    }

    #[test]
    fn small_ensembles_are_flagged() {
        let c = quick(LangevinConfig::friction(1.0, 0.1, 2, 1.0), 50, 0.5);
        assert_eq!(simulate(&c).unwrap().warnings.len(), 1);
    }

    #[test]
    fn precision_without_nonlinearity_is_degenerate() {
        let c = quick(LangevinConfig::friction(1.0, 0.0, 2, 1.0), 200, 1.0);
        assert!(matches!(estimate_precision(&c, 1e-3), Err(Error::DegenerateSensitivity { .. })));
    }

    #[test]
    fn euler_and_exponential_agree_on_refinement() {
        let mut c = quick(LangevinConfig::friction(1.0, 0.05, 3, 1.0), 400, 2.0);
        c.integrator = Integrator::EulerMaruyama;
        let coarse = simulate(&c).unwrap().mean_p[0];
        c.integrator = Integrator::Exponential;
        let exp = simulate(&c).unwrap().mean_p[0];
        assert!((coarse - exp).abs() < 0.01 * exp.abs().max(0.1));
    }

    #[test]
    fn single_minimum_check() {
        assert!(check_single_minimum(&[3.0, 2.0, 1.0, 2.0, 3.0], &[0.1; 5], 2).is_ok());
        assert!(check_single_minimum(&[1.0, 5.0, 0.9, 2.0], &[0.1; 4], 2).is_err());
        // shallow dip within noise
        assert!(check_single_minimum(&[1.0, 1.05, 0.9, 2.0], &[0.1; 4], 2).is_ok());
    }
}

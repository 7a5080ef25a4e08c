//! Closed-form predictions used as oracles: the Heisenberg series for `X(T)`,
//! leading-order Fisher information, detuned quadratic trajectories and the
//! dissipative asymptotics.

use num_rational::Ratio;
use serde::Serialize;

use crate::hilbert::{FockSpace, Operator};
use crate::{Error, Result};

/// Largest order for which every factorial in [`bch_terms`] fits in `i128`.
pub const MAX_BCH_ORDER: u32 = 30;

/// One term `coefficient · G (−λ)^{n−1} P^{M−n+1} T^n` of the phase series.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BchTerm {
    pub n: u32,
    pub coefficient: Ratio<i128>,
    pub power_of_p: u32,
    pub power_of_t: u32,
    pub power_of_neg_lambda: u32,
}

fn factorial(n: u32) -> i128 {
    (1..=n as i128).product()
}

/// Terms `n = 2, …, M+1` with coefficients `M!(n−1) / (n!(M−n+1)!)`.
pub fn bch_terms(m: u32) -> Result<Vec<BchTerm>> {
    if !(2..=MAX_BCH_ORDER).contains(&m) {
        return Err(Error::InvalidOrder(m));
    }
    Ok((2..=m + 1)
        .map(|n| BchTerm {
            n,
            coefficient: Ratio::new(factorial(m) * (n as i128 - 1), factorial(n) * factorial(m + 1 - n)),
            power_of_p: m + 1 - n,
            power_of_t: n,
            power_of_neg_lambda: n - 1,
        })
        .collect())
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Heisenberg-picture position `X + Σ_{n=1}^{M} G(−λ)^{n−1} C(M,n) P^{M−n} T^n`
/// of the closed model `λX + GP^M`.
pub fn evolved_x_operator(space: &FockSpace, lambda: f64, g: f64, m: u32, t: f64) -> Result<Operator> {
    if m < 2 {
        return Err(Error::InvalidOrder(m));
    }
    let dim = space.dim();
    let mut out = space.x().clone();
    let mut p_pow = Operator::identity(dim);
    // ascending powers of P pair with n = M, M−1, …, 1
    for n in (1..=m).rev() {
        let c = g * (-lambda).powi(n as i32 - 1) * binomial(m, n) * t.powi(n as i32);
        if c != 0.0 {
            out = &out + &(&p_pow * c);
        }
        p_pow = &p_pow * space.p();
    }
    Ok(out)
}

/// `4 (G λ^{M−2} T^M)² Var(P)`.
pub fn qfi_leading(lambda: f64, g: f64, m: u32, t: f64, var_p: f64) -> f64 {
    let s = g * lambda.powi(m as i32 - 2) * t.powi(m as i32);
    4.0 * s * s * var_p
}

/// `4 [(Gλ' − G'λ)(−λ)^{M−2} T^M]² Var(P)` for a one-parameter family.
pub fn qfi_family_leading(lambda: f64, dlambda: f64, g: f64, dg: f64, m: u32, t: f64, var_p: f64) -> f64 {
    let s = (g * dlambda - dg * lambda) * (-lambda).powi(m as i32 - 2) * t.powi(m as i32);
    4.0 * s * s * var_p
}

/// Ratio of the `T^M` term of the position series to the sum of all lower
/// ones, measured with `|P| ~ 1`. Large values mark the asymptotic regime.
pub fn leading_term_margin(lambda: f64, g: f64, m: u32, t: f64) -> f64 {
    let size = |n: u32| (g * lambda.abs().powi(n as i32 - 1) * binomial(m, n) * t.powi(n as i32)).abs();
    let rest: f64 = (1..m).map(size).sum();
    if rest == 0.0 {
        f64::INFINITY
    } else {
        size(m) / rest
    }
}

/// `cos(√κ T)`, `sin(√κ T)/√κ` and `(1 − cos(√κ T))/κ`, continued to `κ ≤ 0`.
fn oscillator_kernels(kappa: f64, t: f64) -> (f64, f64, f64) {
    let z = -kappa * t * t;
    if z.abs() < 1.0 {
        // power series in z = −κT², uniformly valid through κ = 0
        let (mut c, mut s, mut k) = (0.0, 0.0, 0.0);
        let mut term = 1.0; // z^j / (2j)!
        for j in 0..30u32 {
            c += term;
            let tj = 2.0 * j as f64;
            s += term / (tj + 1.0);
            k += term / ((tj + 1.0) * (tj + 2.0));
            term *= z / ((tj + 1.0) * (tj + 2.0));
        }
        (c, s * t, k * t * t)
    } else if kappa > 0.0 {
        let w = kappa.sqrt();
        let c = (w * t).cos();
        (c, (w * t).sin() / w, (1.0 - c) / kappa)
    } else {
        let w = (-kappa).sqrt();
        let c = (w * t).cosh();
        (c, (w * t).sinh() / w, (c - 1.0) / (-kappa))
    }
}

/// Closed-form `(⟨X⟩, ⟨P⟩)` at time `T` for `λX + ΩN + GP²`, solving
/// `Ẋ = (2G + Ω)P`, `Ṗ = −λ − ΩX`.
pub fn detuned_trajectory_m2(lambda: f64, g: f64, omega: f64, t: f64, x0: f64, p0: f64) -> (f64, f64) {
    let b = 2.0 * g + omega;
    let kappa = omega * b;
    let (c, s1, k) = oscillator_kernels(kappa, t);
    let x = x0 * c + b * p0 * s1 - lambda * b * k;
    let p = p0 * c - omega * x0 * s1 - lambda * s1;
    (x, p)
}

/// Asymptotic moments and precision of a dissipative model.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DissipativePrediction {
    pub mean_p: f64,
    pub var_p: f64,
    /// Optimal squeezing parameter (0 where squeezing plays no role).
    pub r_opt: f64,
    pub delta_lambda: f64,
    /// Conditions under which the asymptotic form is not trustworthy.
    pub warnings: Vec<String>,
}

fn check_sensitivity(g: f64) -> Result<()> {
    if g == 0.0 {
        return Err(Error::DegenerateSensitivity { derivative: 0.0, floor: 0.0 });
    }
    Ok(())
}

/// Friction model `λP + GX^M` with damping `γ` on `P`.
pub fn friction_asymptotics(lambda: f64, g: f64, m: u32, gamma: f64, t: f64) -> Result<DissipativePrediction> {
    if !(gamma > 0.0) {
        return Err(Error::InvalidDissipation(gamma));
    }
    if m < 2 {
        return Err(Error::InvalidOrder(m));
    }
    check_sensitivity(g)?;
    let mf = m as f64;
    let mut warnings = Vec::new();
    if gamma * t < 10.0 {
        warnings.push(format!("gamma*T = {:.3} < 10: asymptotic form not reached", gamma * t));
    }
    Ok(DissipativePrediction {
        mean_p: mf * g * lambda.powi(m as i32 - 1) * t.powi(m as i32 - 1) / gamma,
        var_p: 0.5,
        r_opt: 0.0,
        delta_lambda: gamma
            / (2f64.sqrt() * mf * (mf - 1.0) * (g * lambda.powi(m as i32 - 2)).abs() * t.powi(m as i32 - 1)),
        warnings,
    })
}

/// Mean position `λ(e^{μ₋T} − 1)/μ₋ + x₀e^{μ₋T}` of the driven cavity, which
/// tends to `λT + x₀` as `μ₋ → 0`.
pub fn cavity_mean_x(lambda: f64, mu_minus: f64, x0: f64, t: f64) -> f64 {
    let z = mu_minus * t;
    let growth = if z.abs() < 1e-5 { t * (1.0 + z / 2.0 + z * z / 6.0) } else { z.exp_m1() / mu_minus };
    lambda * growth + x0 * z.exp()
}

/// Cavity model with two-photon drive `μ ≥ γ` and squeezed input noise.
pub fn cavity_asymptotics(
    lambda: f64,
    g: f64,
    m: u32,
    gamma: f64,
    mu: f64,
    x0: f64,
    t: f64,
) -> Result<DissipativePrediction> {
    if !(gamma > 0.0) {
        return Err(Error::InvalidDissipation(gamma));
    }
    if m < 2 {
        return Err(Error::InvalidOrder(m));
    }
    if mu < gamma {
        return Err(Error::UnsupportedBranch(format!("drive mu = {mu} below dissipation gamma = {gamma}")));
    }
    check_sensitivity(g)?;
    let mf = m as f64;
    let k = mf * (mf - 1.0) * g;
    let mut warnings = Vec::new();
    let mu_minus = mu - gamma;
    let mu_plus = mu + gamma;
    if mu_minus == 0.0 {
        if gamma * t < 10.0 {
            warnings.push(format!("gamma*T = {:.3} < 10: asymptotic form not reached", gamma * t));
        }
        let a = k * lambda.powi(m as i32 - 2);
        let e2r = a * t.powf(mf - 1.5) / gamma.sqrt();
        Ok(DissipativePrediction {
            mean_p: -mf * g * lambda.powi(m as i32 - 1) * t.powi(m as i32 - 1) / (2.0 * gamma),
            var_p: e2r / 2.0,
            r_opt: 0.5 * e2r.abs().ln(),
            // √var_P / |∂λ⟨P⟩| with both taken from the lines above
            delta_lambda: 2f64.sqrt() * gamma.powf(0.75) / (a.abs().sqrt() * t.powf((2.0 * mf - 1.0) / 4.0)),
            warnings,
        })
    } else {
        if mu_minus * t < 3.0 {
            warnings.push(format!("(mu-gamma)*T = {:.3} < 3: exponential regime not reached", mu_minus * t));
        }
        let l = lambda / mu_minus + x0;
        let growth = ((mf - 1.0) * mu_minus * t).exp();
        let e2r = k * l.powi(m as i32 - 2) * growth / (mu_minus * mu_plus).sqrt();
        Ok(DissipativePrediction {
            mean_p: -mf * g * l.powi(m as i32 - 1) * growth / mu_plus,
            var_p: k * l.powi(m as i32 - 2) * gamma * growth / (mu_plus * (mu_minus * mu_plus).sqrt()),
            r_opt: 0.5 * e2r.abs().ln(),
            delta_lambda: gamma.sqrt() * mu_plus.powf(0.25) * mu_minus.powf(0.75)
                / (k.abs().sqrt() * l.abs().powf((mf - 2.0) / 2.0) * (growth.sqrt())),
            warnings,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::make_space;

    fn r(n: i128, d: i128) -> Ratio<i128> {
        Ratio::new(n, d)
    }

    #[test]
    fn bch_quadratic_terms() {
        let t = bch_terms(2).unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!((t[0].n, t[0].coefficient, t[0].power_of_p, t[0].power_of_t), (2, r(1, 1), 1, 2));
        assert_eq!((t[1].n, t[1].coefficient, t[1].power_of_p, t[1].power_of_t), (3, r(2, 3), 0, 3));
    }

    #[test]
    fn bch_cubic_and_last_terms() {
        assert_eq!(bch_terms(3).unwrap()[0].coefficient, r(3, 2));
        for m in 2..=MAX_BCH_ORDER {
            let terms = bch_terms(m).unwrap();
            assert_eq!(terms.len(), m as usize);
            let last = terms.last().unwrap();
            assert_eq!(last.coefficient, r(m as i128, m as i128 + 1));
            assert_eq!(last.power_of_p, 0);
            assert!(terms.iter().all(|t| t.coefficient > r(0, 1)));
        }
        assert_eq!(bch_terms(1), Err(Error::InvalidOrder(1)));
    }

    #[test]
    fn bch_order_twenty_against_float() {
        // 20!·(n−1)/(n!(21−n)!) = (n−1)/21 · C(21, n)
        for t in bch_terms(20).unwrap() {
            let expected = (t.n as f64 - 1.0) / 21.0 * binomial(21, t.n);
            let got = *t.coefficient.numer() as f64 / *t.coefficient.denom() as f64;
            assert!((got - expected).abs() <= 1e-12 * expected);
        }
    }

    #[test]
    fn evolved_x_reductions() {
        let s = make_space(12).unwrap();
        let zero = evolved_x_operator(&s, 0.7, 0.0, 3, 2.0).unwrap();
        assert_eq!(zero.max_abs_diff(s.x()), 0.0);
        let (l, g, t) = (0.6, 0.2, 1.5);
        let quad = evolved_x_operator(&s, l, g, 2, t).unwrap();
        let expected = &(s.x() + &(s.p() * (2.0 * g * t))) - &(&s.identity() * (g * l * t * t));
        assert!(quad.max_abs_diff(&expected) < 1e-14);
    }

    #[test]
    fn evolved_x_cubic_polynomial() {
        let s = make_space(16).unwrap();
        let got = evolved_x_operator(&s, 1.0, 1.0, 3, 1.0).unwrap();
        let shifted = s.p() - &s.identity();
        let expected = &(s.x() + &s.p().pow(3)) - &shifted.pow(3);
        assert!(got.max_abs_diff(&expected) < 1e-10);
    }

    #[test]
    fn series_matches_evolution() {
        use crate::dynamics::{heisenberg_moments, EvolveOptions, HamiltonianSpec, Observable, Route};
        use crate::hilbert::{moments, StateVector};
        let s = make_space(64).unwrap();
        let psi = StateVector::vacuum(s.clone());
        let op = evolved_x_operator(&s, 1.0, 0.05, 3, 2.0).unwrap();
        let series = moments(&psi, &op).unwrap().0;
        let spec = HamiltonianSpec::new(1.0, 0.05, 3);
        let fock = heisenberg_moments(&spec, 2.0, &Observable::x(), &psi, Route::Fock, &EvolveOptions::default())
            .unwrap()
            .0;
        assert!((series - fock).norm() < 1e-6, "{series} {fock}");
    }

    #[test]
    fn leading_qfi_values() {
        assert_eq!(qfi_leading(1.0, 0.0, 3, 10.0, 0.5), 0.0);
        assert!((qfi_leading(1.0, 0.1, 3, 10.0, 0.5) - 2e4).abs() < 1e-8);
        assert_eq!(qfi_leading(0.3, 0.1, 2, 5.0, 0.5), qfi_leading(2.0, 0.1, 2, 5.0, 0.5));
        assert!((qfi_family_leading(1.0, 1.0, 0.15, 0.05, 3, 10.0, 0.5) - 2e4).abs() < 1e-8);
        assert_eq!(qfi_family_leading(2.0, 1.0, 0.2, 0.1, 3, 7.0, 0.5), 0.0);
        for m in 2..5 {
            assert_eq!(qfi_family_leading(1.3, 1.0, 0.2, 0.0, m, 4.0, 0.5), qfi_leading(1.3, 0.2, m, 4.0, 0.5));
        }
    }

    fn rk4(lambda: f64, g: f64, omega: f64, t: f64, x0: f64, p0: f64) -> (f64, f64) {
        let f = |x: f64, p: f64| ((2.0 * g + omega) * p, -lambda - omega * x);
        let steps = 20000;
        let h = t / steps as f64;
        let (mut x, mut p) = (x0, p0);
        for _ in 0..steps {
            let k1 = f(x, p);
            let k2 = f(x + 0.5 * h * k1.0, p + 0.5 * h * k1.1);
            let k3 = f(x + 0.5 * h * k2.0, p + 0.5 * h * k2.1);
            let k4 = f(x + h * k3.0, p + h * k3.1);
            x += h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
            p += h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
        }
        (x, p)
    }

    #[test]
    fn detuned_trajectory_matches_ode() {
        for &(l, g, om, t, x0, p0) in &[
            (1.0, 0.1, 0.05, 5.0, 0.0, 0.0),
            (1.0, 0.1, 0.5, 12.0, 0.3, -0.2),
            (0.7, 0.3, -0.2, 6.0, 0.1, 0.4),   // hyperbolic branch
            (1.0, 0.1, 1e-9, 8.0, 0.0, 0.5),   // series branch
        ] {
            let a = detuned_trajectory_m2(l, g, om, t, x0, p0);
            let b = rk4(l, g, om, t, x0, p0);
            assert!((a.0 - b.0).abs() < 1e-6 && (a.1 - b.1).abs() < 1e-6, "{a:?} {b:?}");
        }
    }

    #[test]
    fn detuned_trajectory_limits() {
        assert_eq!(detuned_trajectory_m2(1.0, 0.1, 0.3, 0.0, 0.4, -0.7), (0.4, -0.7));
        let (l, g, t, x0, p0) = (1.0, 0.1, 7.0, 0.2, 0.3);
        let (x, p) = detuned_trajectory_m2(l, g, 0.0, t, x0, p0);
        assert!((x - (x0 + 2.0 * g * t * p0 - g * l * t * t)).abs() < 1e-12);
        assert!((p - (p0 - l * t)).abs() < 1e-12);
    }

    #[test]
    fn friction_values() {
        let a = friction_asymptotics(1.0, 0.1, 2, 1.0, 20.0).unwrap();
        assert!((a.mean_p - 4.0).abs() < 1e-12 && a.var_p == 0.5 && a.warnings.is_empty());
        let b = friction_asymptotics(1.0, 0.05, 3, 1.0, 20.0).unwrap();
        assert!((b.delta_lambda - 1.0 / (2f64.sqrt() * 6.0 * 0.05 * 400.0)).abs() < 1e-15);
        assert!((b.delta_lambda - 0.00589).abs() < 1e-5);
        assert!(matches!(friction_asymptotics(1.0, 0.0, 2, 1.0, 20.0), Err(Error::DegenerateSensitivity { .. })));
        assert_eq!(friction_asymptotics(1.0, 0.1, 2, 0.0, 20.0), Err(Error::InvalidDissipation(0.0)));
        assert_eq!(friction_asymptotics(1.0, 0.1, 2, 1.0, 5.0).unwrap().warnings.len(), 1);
    }

    #[test]
    fn cavity_balanced_values() {
        let a = cavity_asymptotics(1.0, 0.1, 4, 1.0, 1.0, 0.0, 100.0).unwrap();
        assert!((a.delta_lambda - 2f64.sqrt() / (1.2f64.sqrt() * 100f64.powf(1.75))).abs() < 1e-15);
        // variance at the optimum equals half of e^{2r}
        assert!((a.var_p - (2.0 * a.r_opt).exp() / 2.0).abs() < 1e-9 * a.var_p);
        for (m, g, gamma, t) in [(2u32, 0.1, 1.0, 50.0), (3, 0.05, 2.0, 30.0), (4, 0.1, 0.5, 100.0)] {
            let at = |l: f64| cavity_asymptotics(l, g, m, gamma, gamma, 0.0, t).unwrap();
            let h = 1e-5;
            let slope = (at(1.0 + h).mean_p - at(1.0 - h).mean_p) / (2.0 * h);
            let a = at(1.0);
            let want = a.var_p.sqrt() / slope.abs();
            assert!((a.delta_lambda - want).abs() < 1e-8 * want, "M={m}: {} vs {want}", a.delta_lambda);
        }
    }

    #[test]
    fn cavity_growing_rate() {
        let at = |t: f64| cavity_asymptotics(1.0, 0.1, 2, 1.0, 2.0, 0.0, t).unwrap().delta_lambda.ln();
        let slope = (at(20.0) - at(10.0)) / 10.0;
        assert!((slope + 0.5).abs() < 1e-12);
        let pt = |l: f64| cavity_asymptotics(l, 0.1, 3, 1.0, 2.0, 0.3, 8.0).unwrap();
        let h = 1e-5;
        let d = (pt(1.0 + h).mean_p - pt(1.0 - h).mean_p) / (2.0 * h);
        let want = pt(1.0).var_p.sqrt() / d.abs();
        assert!((pt(1.0).delta_lambda - want).abs() < 1e-7 * want);
        assert!(matches!(cavity_asymptotics(1.0, 0.1, 2, 1.0, 0.5, 0.0, 10.0), Err(Error::UnsupportedBranch(_))));
    }

    #[test]
    fn cavity_position_continuous_at_balance() {
        let t = 30.0;
        let balanced = cavity_mean_x(1.0, 0.0, 0.2, t);
        assert!((balanced - (t + 0.2)).abs() < 1e-12);
        for mu_minus in [1e-4, 1e-6, 1e-8] {
            assert!((cavity_mean_x(1.0, mu_minus, 0.2, t) - balanced).abs() < 1e3 * mu_minus);
        }
    }

    #[test]
    fn margin_grows_with_time() {
        assert!(leading_term_margin(1.0, 0.05, 3, 40.0) > leading_term_margin(1.0, 0.05, 3, 10.0));
        assert!(leading_term_margin(1.0, 0.05, 3, 40.0) > 10.0);
    }
}

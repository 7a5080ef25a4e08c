//! Randomised invariants across the modules.

use nalgebra::DVector;
use proptest::prelude::*;
use scrambling::analytic::{qfi_family_leading, qfi_leading};
use scrambling::dynamics::{build_hamiltonian, evolve_spec, EvolveOptions, HamiltonianSpec};
use scrambling::hilbert::{coherent_state, make_space, Operator, StateVector};
use scrambling::langevin::Moments4;
use scrambling::metrology::{error_propagation, qfi_numeric, qfi_pure, MeasurementSpec, ParameterizedFamily, qfi_family};
use scrambling::scaling::{fit_exponential, fit_power_law};
use scrambling::C64;

fn complex_vec(re: &[f64], im: &[f64]) -> DVector<C64> {
    DVector::from_iterator(re.len(), re.iter().zip(im).map(|(&a, &b)| C64::new(a, b)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn power_law_fit_is_scale_equivariant(
        beta in -4.0f64..6.0, amp in 0.01f64..100.0, c in 0.1f64..10.0, k in 0.1f64..10.0,
    ) {
        let pts: Vec<_> = (1..=12).map(|i| { let x = i as f64; (x, amp * x.powf(beta)) }).collect();
        let fit = fit_power_law(&pts).unwrap();
        prop_assert!((fit.exponent_or_rate - beta).abs() < 1e-9);
        // rescaling either axis moves only the intercept
        let scaled: Vec<_> = pts.iter().map(|&(x, y)| (c * x, k * y)).collect();
        let fit2 = fit_power_law(&scaled).unwrap();
        prop_assert!((fit2.exponent_or_rate - beta).abs() < 1e-9);
        prop_assert!((fit2.intercept - (fit.intercept + k.ln() - beta * c.ln())).abs() < 1e-8);
    }

    #[test]
    fn exponential_fit_is_shift_equivariant(rate in -2.0f64..2.0, shift in -5.0f64..5.0) {
        let pts: Vec<_> = (0..10).map(|i| { let x = i as f64 * 0.5; (x + shift, (rate * x).exp()) }).collect();
        prop_assert!((fit_exponential(&pts).unwrap().exponent_or_rate - rate).abs() < 1e-9);
    }

    #[test]
    fn pure_state_qfi_is_gauge_invariant(
        re in prop::collection::vec(-1.0f64..1.0, 6),
        im in prop::collection::vec(-1.0f64..1.0, 6),
        dre in prop::collection::vec(-1.0f64..1.0, 6),
        dim_ in prop::collection::vec(-1.0f64..1.0, 6),
        theta in 0.0f64..6.3, phi_rate in -3.0f64..3.0,
    ) {
        let raw = complex_vec(&re, &im);
        prop_assume!(raw.norm() > 0.1);
        let psi = StateVector::normalized(make_space(6).unwrap(), raw).unwrap();
        let d = complex_vec(&dre, &dim_);
        let f = qfi_pure(&psi, &d).unwrap();
        // ψ → e^{iθ(y)}ψ with θ' = phi_rate
        let rot = C64::from_polar(1.0, theta);
        let psi2 = StateVector::normalized(psi.space().clone(), psi.amplitudes() * rot).unwrap();
        let d2 = &d * rot + psi2.amplitudes() * C64::new(0.0, phi_rate);
        let f2 = qfi_pure(&psi2, &d2).unwrap();
        prop_assert!((f - f2).abs() < 1e-10 * f.abs().max(1.0), "{f} vs {f2}");
        prop_assert!(f >= -1e-12);
    }

    #[test]
    fn evolution_is_unitary_and_composes(
        g in -0.05f64..0.05, omega in 0.0f64..0.5, m in 2u32..5, t in 0.1f64..1.0, alpha in 0.0f64..0.5,
    ) {
        let spec = HamiltonianSpec::new(1.0, g, m).with_detuning(omega);
        let psi = coherent_state(make_space(48).unwrap(), C64::new(alpha, 0.0)).unwrap();
        let opts = EvolveOptions::default();
        let full = evolve_spec(&spec, t, &psi, &opts).unwrap();
        prop_assert!((full.state.norm() - 1.0).abs() < 1e-10);
        let half = evolve_spec(&spec, t / 2.0, &psi, &opts).unwrap();
        let twice = evolve_spec(&spec, t / 2.0, &half.state, &opts).unwrap();
        prop_assert!((full.state.inner(&twice.state).norm() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn compensation_turns_detuning_into_momentum_square(omega in -1.0f64..1.0, g in -0.3f64..0.3, m in 2u32..5) {
        let space = make_space(24).unwrap();
        let h = build_hamiltonian(&space, &HamiltonianSpec::new(1.0, g, m).compensated(omega)).unwrap();
        let p = space.p();
        let expected = &(&(space.x() * C64::new(1.0, 0.0)) + &(&p.pow(2) * C64::new(omega, 0.0)))
            + &(&p.pow(m) * C64::new(g, 0.0));
        // the truncated products differ only in the top levels
        let keep = space.dim() - m as usize;
        for i in 0..keep {
            for j in 0..keep {
                prop_assert!((h.get(i, j) - expected.get(i, j)).norm() < 1e-10, "({i},{j})");
            }
        }
    }

    #[test]
    fn family_leading_term_reduces(lambda in 0.2f64..3.0, g in -0.5f64..0.5, m in 2u32..6, t in 1.0f64..50.0) {
        let a = qfi_family_leading(lambda, 1.0, g, 0.0, m, t, 0.5);
        let b = qfi_leading(lambda, g, m, t, 0.5);
        prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1e-300));
        // G proportional to λ kills the leading term
        prop_assert!(qfi_family_leading(lambda, 1.0, 0.1 * lambda, 0.1, m, t, 0.5).abs() < 1e-12 * b.abs().max(1.0));
    }

    #[test]
    fn moments_merge_matches_sequential(data in prop::collection::vec(-10.0f64..10.0, 4..80), split in 0usize..80) {
        let split = split % data.len();
        let mut seq = Moments4::default();
        data.iter().for_each(|&x| seq.push(x));
        let (mut a, mut b) = (Moments4::default(), Moments4::default());
        data[..split].iter().for_each(|&x| a.push(x));
        data[split..].iter().for_each(|&x| b.push(x));
        a.merge(&b);
        let n = data.len() as f64;
        let mean = data.iter().sum::<f64>() / n;
        let var = data.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        prop_assert!((a.mean() - mean).abs() < 1e-10 && (seq.mean() - mean).abs() < 1e-10);
        prop_assert!((a.variance() - var).abs() < 1e-9 * var.max(1.0));
        prop_assert!((seq.variance() - var).abs() < 1e-9 * var.max(1.0));
        prop_assert!((a.stderr_variance() - seq.stderr_variance()).abs() < 1e-8 * seq.stderr_variance().max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn measurement_respects_cramer_rao(m in 2u32..4, g in 0.02f64..0.2, t in 2.0f64..30.0, alpha in 0.0f64..0.3) {
        let spec = HamiltonianSpec::new(1.0, g, m);
        let psi = coherent_state(make_space(24).unwrap(), C64::new(alpha, 0.0)).unwrap();
        let ms = MeasurementSpec { lambda_c: 1.0, g, order: m, t };
        let d = error_propagation(&spec, &ms, &psi, 1e-4).unwrap();
        let f = qfi_numeric(&spec, t, &psi, 1e-3).unwrap();
        prop_assert!(d * f.sqrt() >= 0.99, "δλ√F = {}", d * f.sqrt());
    }

    #[test]
    fn proportional_coupling_never_beats_heisenberg(xi in 0.02f64..0.2, m in 2u32..4) {
        let fam = ParameterizedFamily::linear(0.0, 1.0, 0.0, xi);
        let psi = StateVector::vacuum(make_space(16).unwrap());
        let pts: Vec<_> = [10.0, 15.0, 20.0, 30.0, 40.0]
            .iter()
            .map(|&t| (t, qfi_family(&fam, 1.0, m, t, &psi, 1e-3).unwrap()))
            .collect();
        let fit = fit_power_law(&pts).unwrap();
        prop_assert!((fit.exponent_or_rate - 2.0).abs() < 0.1, "slope {}", fit.exponent_or_rate);
    }
}

#[test]
fn operator_products_match_dense() {
    let space = make_space(10).unwrap();
    let x = space.x().to_dense();
    let p = space.p().to_dense();
    let banded: Operator = &(space.x() * space.p()) - &(space.p() * space.x());
    let dense = &x * &p - &p * &x;
    assert!((banded.to_dense() - dense).norm() < 1e-12);
}

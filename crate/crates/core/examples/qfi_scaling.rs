//! Quantum Fisher information of `λX + GP^M` across evolution time and the
//! fitted exponent of its growth.

use scrambling::analytic::qfi_leading;
use scrambling::dynamics::HamiltonianSpec;
use scrambling::hilbert::{make_space, StateVector};
use scrambling::metrology::{qfi_sweep, QfiOptions};
use scrambling::scaling::fit_power_law;

fn main() -> scrambling::Result<()> {
    let psi = StateVector::vacuum(make_space(16)?);
    let times: Vec<f64> = (5..=20).map(|k| 2.0 * k as f64).collect();
    for (m, g) in [(2u32, 0.1), (3, 0.05), (4, 0.02)] {
        let spec = HamiltonianSpec::new(1.0, g, m);
        let est = qfi_sweep(&spec, &times, &psi, &QfiOptions::default())?;
        let pts: Vec<_> = times.iter().zip(&est).map(|(&t, e)| (t, e.value)).collect();
        let fit = fit_power_law(&pts)?;
        let (t, f) = *pts.last().unwrap();
        println!(
            "M={m} G={g}: slope {:.3} ± {:.3} (asymptote {}), F/F_leading at T={t} = {:.4}",
            fit.exponent_or_rate,
            fit.stderr,
            2 * m,
            f / qfi_leading(1.0, g, m, t, 0.5)
        );
    }
    // at M=2 the exact result is 2T²(1 + G²T²)
    let t: f64 = 10.0;
    let spec = HamiltonianSpec::new(1.0, 0.1, 2);
    let f = qfi_sweep(&spec, &[t], &psi, &QfiOptions::default())?[0].value;
    println!("M=2 T=10: F = {f:.6}, closed form {:.6}", 2.0 * t * t * (1.0 + 0.01 * t * t));
    Ok(())
}

//! Fisher information of a parameter encoded in both the drive and the
//! nonlinearity. When `G` is proportional to `λ` the high-order growth
//! cancels and only `T²` survives.

use scrambling::analytic::qfi_family_leading;
use scrambling::hilbert::{make_space, StateVector};
use scrambling::metrology::{qfi_family, ParameterizedFamily};
use scrambling::scaling::fit_power_law;

fn main() -> scrambling::Result<()> {
    let psi = StateVector::vacuum(make_space(16)?);
    let times: Vec<f64> = (5..=20).map(|k| 2.0 * k as f64).collect();
    let cases = [
        ("G = 0.1 + 0.05 y", ParameterizedFamily::linear(0.0, 1.0, 0.1, 0.05)),
        ("G = 0.1 y", ParameterizedFamily::linear(0.0, 1.0, 0.0, 0.1)),
    ];
    for (name, fam) in cases {
        let pts = times
            .iter()
            .map(|&t| Ok((t, qfi_family(&fam, 1.0, 3, t, &psi, 1e-3)?)))
            .collect::<scrambling::Result<Vec<_>>>()?;
        let fit = fit_power_law(&pts)?;
        let (t, f) = *pts.last().unwrap();
        let lead = qfi_family_leading(fam.lambda(1.0), fam.dlambda(1.0), fam.g(1.0), fam.dg(1.0), 3, t, 0.5);
        println!("{name}: enhancement factor {:.3}, slope {:.3}", fam.enhancement_factor(1.0), fit.exponent_or_rate);
        if lead > 0.0 {
            println!("  F/F_leading at T={t}: {:.4}", f / lead);
        } else {
            println!("  leading term vanishes, F(T={t}) = {f:.3} vs 2T² = {:.3}", 2.0 * t * t);
        }
    }

    // any smooth family works, not only linear ones
    let fam = ParameterizedFamily::new(|y| y, |y| 0.05 * y * y, |_| 1.0, |y| 0.1 * y, &[0.5, 1.0, 2.0])?;
    println!("G = 0.05 y²: F(T=20) = {:.4e}", qfi_family(&fam, 1.0, 3, 20.0, &psi, 1e-3)?);
    Ok(())
}

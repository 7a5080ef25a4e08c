//! Error propagation with the optimal measurement operator and its
//! saturation of the quantum Cramér–Rao bound.

use scrambling::dynamics::HamiltonianSpec;
use scrambling::hilbert::{make_space, StateVector};
use scrambling::metrology::{error_propagation, optimal_measurement, qfi_numeric, MeasurementSpec};

fn main() -> scrambling::Result<()> {
    let space = make_space(6)?;
    let ms = MeasurementSpec { lambda_c: 1.0, g: 0.1, order: 2, t: 2.0 };
    // for M = 2 this is X − 2GT·P − GλcT²
    println!("M_e (M=2, T=2) on 6 levels, real part:\n{}", optimal_measurement(&space, &ms)?.to_dense().map(|z| z.re));

    let psi = StateVector::vacuum(make_space(16)?);
    println!("{:>3} {:>6} {:>14} {:>14} {:>10}", "M", "T", "delta_lambda", "1/sqrt(F)", "ratio");
    for (m, g) in [(2u32, 0.1), (3, 0.05)] {
        let spec = HamiltonianSpec::new(1.0, g, m);
        for t in [10.0, 20.0, 40.0] {
            let ms = MeasurementSpec { lambda_c: 1.0, g, order: m, t };
            let d = error_propagation(&spec, &ms, &psi, 1e-4)?;
            let f = qfi_numeric(&spec, t, &psi, 1e-3)?;
            println!("{m:>3} {t:>6} {d:>14.6e} {:>14.6e} {:>10.5}", 1.0 / f.sqrt(), d * f.sqrt());
        }
    }
    Ok(())
}

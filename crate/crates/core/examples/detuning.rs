//! Detuning from the drive freezes the information growth. Adding a
//! two-photon squeezing term `χ = −Ω/2` turns `ΩN` into `ΩP²` and restores it.

use scrambling::dynamics::HamiltonianSpec;
use scrambling::hilbert::{coherent_state, make_space};
use scrambling::metrology::{qfi_sweep, QfiOptions};
use scrambling::C64;

fn main() -> scrambling::Result<()> {
    let psi = coherent_state(make_space(32)?, C64::new(0.1, 0.0))?;
    let times: Vec<f64> = (1..=40).map(f64::from).collect();
    let opts = QfiOptions { eps: 1e-4, ..Default::default() };
    let base = HamiltonianSpec::new(1.0, 0.1, 4);
    let mut columns = Vec::new();
    for omega in [0.0, 0.2, 0.5] {
        columns.push(qfi_sweep(&base.with_detuning(omega), &times, &psi, &opts)?);
    }
    columns.push(qfi_sweep(&base.compensated(0.5), &times, &psi, &opts)?);
    println!("{:>4} {:>12} {:>12} {:>12} {:>16}", "T", "Omega=0", "Omega=0.2", "Omega=0.5", "0.5 compensated");
    for (k, t) in times.iter().enumerate().step_by(3) {
        let row: Vec<String> = columns.iter().map(|c| format!("{:>12.4e}", c[k].value)).collect();
        println!("{t:>4} {}", row.join(" "));
    }
    Ok(())
}

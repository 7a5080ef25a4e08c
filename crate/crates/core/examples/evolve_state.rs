//! Evolve the vacuum under `λX + GP³` in Fock space and through the exact
//! shear propagator, and compare the resulting moments.

use scrambling::dynamics::{evolve_spec, heisenberg_moments, EvolveOptions, HamiltonianSpec, Observable, Route};
use scrambling::hilbert::{make_space, moments, StateVector};

fn main() -> scrambling::Result<()> {
    let spec = HamiltonianSpec::new(1.0, 0.05, 3);
    let psi0 = StateVector::vacuum(make_space(64)?);
    let opts = EvolveOptions::default();
    println!("{:>5} {:>14} {:>14} {:>12} {:>10}", "T", "<X> fock", "<X> shear", "Var X", "dim");
    for t in [0.5, 1.0, 2.0, 4.0] {
        let res = evolve_spec(&spec, t, &psi0, &opts)?;
        let (x_fock, _) = moments(&res.state, res.state.space().x())?;
        let (x_shear, var) = heisenberg_moments(&spec, t, &Observable::x(), &psi0, Route::Shear, &opts)?;
        println!("{t:>5} {:>14.8} {:>14.8} {var:>12.6} {:>10}", x_fock.re, x_shear.re, res.state.dim());
    }
    // unitarity of the Fock-space propagator
    let res = evolve_spec(&spec, 4.0, &psi0, &opts)?;
    println!("norm defect {:.1e}, energy drift {:.1e}", (res.state.norm() - 1.0).abs(), res.energy_drift);
    Ok(())
}

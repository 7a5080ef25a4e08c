//! Truncated Fock space: quadratures, the canonical commutator away from the
//! cutoff, and the moments of a coherent state.

use scrambling::hilbert::{coherent_state, make_space, moments, FockSpace};
use scrambling::C64;

fn main() -> scrambling::Result<()> {
    let space = make_space(24)?;
    let comm = space.x().commutator(space.p());
    // [X, P] = i holds exactly except in the last level
    let below: f64 = (0..space.dim() - 1).map(|k| (comm.get(k, k) - C64::i()).norm()).fold(0.0, f64::max);
    println!("max |[X,P]_kk - i| below the cutoff: {below:.2e}");
    println!("last diagonal entry: {:.3}", comm.get(space.dim() - 1, space.dim() - 1));

    let alpha = C64::new(1.2, 0.5);
    let psi = coherent_state(space.clone(), alpha)?;
    let (mx, vx) = moments(&psi, space.x())?;
    let (mp, vp) = moments(&psi, space.p())?;
    println!("coherent alpha = {alpha}:");
    println!("  <X> = {:.6} (expect {:.6}), Var X = {vx:.6}", mx.re, 2f64.sqrt() * alpha.re);
    println!("  <P> = {:.6} (expect {:.6}), Var P = {vp:.6}", mp.re, 2f64.sqrt() * alpha.im);
    println!("  tail mass in the top 10% of levels: {:.2e}", psi.tail_mass(0.1));

    let small = FockSpace::new(4)?;
    println!("N on 4 levels:\n{}", small.n().to_dense());
    Ok(())
}

//! Driven cavity with squeezed input noise: the precision at the predicted
//! optimal squeezing, and a sweep that locates the optimum numerically.

use scrambling::analytic::cavity_asymptotics;
use scrambling::langevin::{estimate_precision, sweep_squeezing, LangevinConfig};

fn main() -> scrambling::Result<()> {
    let (g, m, t) = (0.05, 3, 30.0);
    let pred = cavity_asymptotics(1.0, g, m, 1.0, 1.0, 0.0, t)?;
    println!("critical drive, T={t}: r_opt = {:.3}, predicted dlambda = {:.4e}", pred.r_opt, pred.delta_lambda);

    let mut cfg = LangevinConfig::cavity(1.0, g, m, 1.0, 1.0, pred.r_opt);
    cfg.n_traj = 5_000;
    cfg.t_max = t;
    cfg.seed = 3;
    let est = estimate_precision(&cfg, 1e-3)?;
    println!("simulated dlambda = {:.4e} ± {:.1e}", est.delta_lambda[0], est.stderr[0]);

    let grid: Vec<f64> = (-4..=4).map(|k| pred.r_opt + 0.25 * k as f64).collect();
    let sweep = sweep_squeezing(&cfg, &grid, 1e-3)?;
    for (r, d) in sweep.r_grid.iter().zip(&sweep.delta_lambda) {
        println!("  r = {r:.3}: {d:.4e}");
    }
    println!("numerical optimum r* = {:.3}", sweep.r_star);
    Ok(())
}

//! Stochastic trajectories of the friction model and the precision of a
//! momentum readout, compared with the asymptotic prediction.

use scrambling::analytic::friction_asymptotics;
use scrambling::langevin::{estimate_precision, LangevinConfig};
use scrambling::scaling::fit_power_law;

fn main() -> scrambling::Result<()> {
    let mut cfg = LangevinConfig::friction(1.0, 1e-4, 3, 1.0);
    cfg.n_traj = 20_000;
    cfg.t_max = 40.0;
    cfg.record_times = vec![10.0, 20.0, 30.0, 40.0];
    cfg.seed = 5;
    let est = estimate_precision(&cfg, 1e-3)?;
    println!("{:>4} {:>12} {:>8} {:>12} {:>12}", "T", "mean_P", "var_P", "dlambda", "analytic");
    for k in 0..est.time_grid.len() {
        let t = est.time_grid[k];
        let a = friction_asymptotics(1.0, 1e-4, 3, 1.0, t)?;
        println!(
            "{t:>4} {:>12.4e} {:>8.4} {:>12.4e} {:>12.4e}",
            est.mean_p[k], est.var_p[k], est.delta_lambda[k], a.delta_lambda
        );
    }
    let pts: Vec<_> = est.time_grid.iter().cloned().zip(est.delta_lambda.iter().cloned()).collect();
    println!("fitted slope {:.3} (asymptote −(M−1) = −2)", fit_power_law(&pts)?.exponent_or_rate);
    Ok(())
}

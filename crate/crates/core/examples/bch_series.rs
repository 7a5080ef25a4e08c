//! Terms of the finite Heisenberg-picture series of `X(T)` and a check of
//! the resulting operator against direct evolution.

use scrambling::analytic::{bch_terms, evolved_x_operator, leading_term_margin};
use scrambling::dynamics::{heisenberg_moments, EvolveOptions, HamiltonianSpec, Observable, Route};
use scrambling::hilbert::{coherent_state, make_space, moments};
use scrambling::C64;

fn main() -> scrambling::Result<()> {
    let m = 4;
    println!("X(T) = X + G Σ c_n (−λ)^(n−1) T^n P^(M−n+1) for M = {m}:");
    for term in bch_terms(m)? {
        println!(
            "  n={}  c={}  P^{}  T^{}  (−λ)^{}",
            term.n, term.coefficient, term.power_of_p, term.power_of_t, term.power_of_neg_lambda
        );
    }
    let (lambda, g, t) = (1.0, 0.1, 3.0);
    println!("leading-term margin at T={t}: {:.3}", leading_term_margin(lambda, g, m, t));

    let space = make_space(48)?;
    let psi = coherent_state(space.clone(), C64::new(0.3, -0.2))?;
    let xt = evolved_x_operator(&space, lambda, g, m, t)?;
    let series = moments(&psi, &xt)?.0.re;
    let spec = HamiltonianSpec::new(lambda, g, m);
    let evolved = heisenberg_moments(&spec, t, &Observable::x(), &psi, Route::Auto, &EvolveOptions::default())?.0.re;
    println!("<X(T)> from the series {series:.10}, from evolution {evolved:.10}");
    Ok(())
}

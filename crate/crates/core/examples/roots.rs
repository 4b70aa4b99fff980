//! Approximate l-th roots of almost translations, with exact certificates.

use solvrigid::fixtures;
use solvrigid::nilpotent::{approx_lth_root, displacement_bound, epsilon_bounds};

fn main() -> solvrigid::Result<()> {
    for f in [fixtures::root_one_level()?, fixtures::root_two_level()?] {
        let cert = approx_lth_root(&f.generators, &f.gamma_p, f.l, 8)?;
        println!("γ' = {}, η = {}, exponents {:?}", cert.gamma_prime_label, cert.eta_label, cert.exponents);
        println!("  checks {:?}", cert.checks);
        let b = displacement_bound(&cert.gamma_prime, &f.generators)?;
        println!("  displacement ≤ {:.4}", b.total);
    }
    let k = fixtures::sine_kernel()?;
    println!("ε for the sine kernel: {:?}", epsilon_bounds(&k)?);
    Ok(())
}

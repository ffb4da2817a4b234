//! Natural gradient of KL on the Gaussian manifold, and a few exact
//! parametric NGD steps from N(0, I) toward a fitted target.
//!
//! cargo run --release --example natural_gradient

use kingflow::harness::datasets::gen_gaussian_mixture;
use kingflow::ngd::{exact_ngd_step, gaussian_moment_to_natural, gaussian_natural_to_moment};
use kingflow::{fit_gaussian, gaussian_w2, natural_gradient_kl, FeatureMap, ParticleSet};
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> kingflow::Result<()> {
    let map = FeatureMap::gaussian_quadratic(2)?;
    let targets = gen_gaussian_mixture(2, &[vec![2.0, -1.0]], &[1.0], 400, 1)?;
    let particles = ParticleSet::standard_normal(400, 2, &mut ChaCha8Rng::seed_from_u64(2));

    let ng = natural_gradient_kl(&map, &targets, &particles, 1e-8)?;
    println!("statistics: [x1, x2, x1^2, x1 x2, x2^2]");
    println!("gap               {}", fmt(ng.gap.iter()));
    println!("natural direction {}", fmt(ng.natural_direction.iter()));

    let (tm, tc) = fit_gaussian(&targets)?;
    let mut params = gaussian_moment_to_natural(&DVector::zeros(2), &DMatrix::identity(2, 2))?;
    for step in 0..=40 {
        let (m, c) = gaussian_natural_to_moment(&params)?;
        if step % 5 == 0 {
            println!("step {step:>2}: mean {}  W2 to target {:.4}", fmt(m.iter()), gaussian_w2(&m, &c, &tm, &tc)?);
        }
        params = exact_ngd_step(&params, &targets, 0.1, 2000, step as u64)?;
    }
    Ok(())
}

fn fmt<'a>(v: impl Iterator<Item = &'a f64>) -> String {
    let parts: Vec<String> = v.map(|x| format!("{x:+.3}")).collect();
    format!("[{}]", parts.join(", "))
}

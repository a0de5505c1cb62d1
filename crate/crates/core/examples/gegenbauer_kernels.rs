//! Gegenbauer polynomials, reproducing kernels and the Poisson kernel on S^3.

use poisson_wavelets::kernels::{monopole_field, poisson_kernel};
use poisson_wavelets::sphere::{harmonic_dimension, SphereContext};

fn main() -> poisson_wavelets::Result<()> {
    let ctx = SphereContext::new(3)?;
    println!("n = {}, λ = {}, |S^n| = {:.12}", ctx.n(), ctx.lambda(), ctx.sigma_n());

    println!("\n l   C_l(0.3)        K_l(1)   dim H_l");
    for l in 0..8 {
        println!(
            "{l:2}   {:>12.8}   {:>7}   {:>7}",
            ctx.gegenbauer(l, 0.3)?,
            ctx.reproducing_kernel(l, 1.0)?,
            harmonic_dimension(ctx.n(), l as u32)?
        );
    }

    let r = 0.6;
    println!("\nPoisson kernel and monopole field, r = {r}");
    for theta in [0.0, 0.5, 1.0, 2.0, std::f64::consts::PI] {
        let t = f64::cos(theta);
        println!(
            "θ = {theta:.4}   p = {:>12.6e}   monopole = {:>12.6e}",
            poisson_kernel(&ctx, r, t)?,
            monopole_field(&ctx, r, t)?
        );
    }
    Ok(())
}

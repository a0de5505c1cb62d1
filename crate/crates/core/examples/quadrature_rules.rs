//! Gauss–Gegenbauer rules on the sphere and logarithmic scale grids.

use poisson_wavelets::quadrature::{gauss_gegenbauer, log_scale_grid, weight_mass};
use poisson_wavelets::sphere::SphereContext;
use poisson_wavelets::wavelets::{Flavor, WaveletFamily};

fn main() -> poisson_wavelets::Result<()> {
    let ctx = SphereContext::new(2)?;
    let rule = gauss_gegenbauer(ctx.lambda(), 6)?;
    println!("6-point rule, λ = {} (exact to degree {})", ctx.lambda(), rule.degree);
    for (x, w) in rule.nodes.iter().zip(&rule.weights) {
        println!("  {x:>20.16}  {w:>20.16}");
    }
    println!(
        "mass {:.16} vs {:.16}",
        rule.weights.iter().sum::<f64>(),
        weight_mass(ctx.lambda())
    );

    // A wavelet integrates to zero over the sphere.
    let area_factor = ctx.sigma_n() / weight_mass(ctx.lambda());
    let wavelet = WaveletFamily::new(ctx, 1, Flavor::Raw)?.at_scale(0.1)?;
    for nodes in [100, 400, 800] {
        let rule = gauss_gegenbauer(ctx.lambda(), nodes)?;
        let integral = area_factor * rule.integrate(|t| wavelet.eval(t));
        println!("∫ g dσ with {nodes:3} nodes: {integral:.3e}");
    }

    let grid = log_scale_grid(1e-3, 10.0, 40)?;
    let log_ratio = grid.integrate(|_| 1.0);
    println!("\n∫ da/a over [1e-3, 10] = {log_ratio:.14} (ln 1e4 = {:.14})", 1e4f64.ln());
    Ok(())
}

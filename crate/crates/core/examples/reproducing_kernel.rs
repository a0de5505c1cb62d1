//! The reproducing kernel of the bilinear transform, closed form against its series.

use poisson_wavelets::sphere::SphereContext;
use poisson_wavelets::transform::ReproducingKernel;

fn main() -> poisson_wavelets::Result<()> {
    let ctx = SphereContext::new(2)?;
    let kernel = ReproducingKernel::new(ctx, 2)?;
    for (a, b) in [(0.1, 0.1), (0.1, 0.5), (1.0, 2.0)] {
        println!("a = {a}, b = {b}");
        for t in [1.0, 0.9, 0.0, -1.0] {
            let closed = kernel.eval(a, b, t)?;
            let series = kernel.eval_spectral(a, b, t, 1e-15)?;
            println!("  t = {t:+.1}: {closed:>22.15e}  {series:>22.15e}  diff {:.1e}", (closed - series).abs());
        }
    }
    Ok(())
}

//! Linear (single-wavelet) inversion, from coefficients and from point samples.

use poisson_wavelets::quadrature::{gauss_gegenbauer, log_scale_grid};
use poisson_wavelets::sphere::SphereContext;
use poisson_wavelets::transform::{forward_spectral, invert_linear, ZonalFunction};
use poisson_wavelets::wavelets::{Flavor, WaveletFamily};

fn main() -> poisson_wavelets::Result<()> {
    let ctx = SphereContext::new(3)?;
    let f = ZonalFunction::random(ctx, 8, 7);
    let family = WaveletFamily::new(ctx, 3, Flavor::Linear)?;
    let grid = log_scale_grid(1e-4, 50.0, 400)?;
    let field = forward_spectral(&f, &family, &grid)?;

    let spectral = invert_linear(&field)?;
    let rule = gauss_gegenbauer(ctx.lambda(), 2 * f.band_limit() + 2)?;
    let sampled = invert_linear(&field.to_samples(&rule)?)?;

    for (name, rec) in [("spectral", &spectral), ("samples", &sampled)] {
        let err = f.combine(1.0, &rec.function, -1.0)?.norm_sq().sqrt() / f.norm_sq().sqrt();
        println!("{name:>8}: relative L² error {err:.4e}");
    }
    for t in [-0.9, 0.0, 0.7] {
        println!("f({t}) = {:+.10}   reconstructed {:+.10}", f.eval(t), spectral.function.eval(t));
    }
    Ok(())
}

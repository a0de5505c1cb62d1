//! Bilinear transform of a random band-limited function and its reconstruction.

use poisson_wavelets::quadrature::log_scale_grid;
use poisson_wavelets::sphere::SphereContext;
use poisson_wavelets::transform::{
    forward_spectral, invert_bilinear, reconstruction_report, TransformKind, ZonalFunction,
};
use poisson_wavelets::wavelets::{Flavor, WaveletFamily};

fn main() -> poisson_wavelets::Result<()> {
    let ctx = SphereContext::new(2)?;
    let f = ZonalFunction::random(ctx, 10, 42);
    let family = WaveletFamily::new(ctx, 2, Flavor::Bilinear)?;

    for (a_min, a_max) in [(1e-2, 10.0), (1e-3, 30.0), (1e-4, 50.0)] {
        let grid = log_scale_grid(a_min, a_max, 400)?;
        let field = forward_spectral(&f, &family, &grid)?;
        let rec = invert_bilinear(&field)?;
        let report = reconstruction_report(TransformKind::Bilinear, &field, &f, &rec, Some(42))?;
        println!(
            "a in [{a_min:e}, {a_max}]: L² error {:.4e}, predicted {:.4e}",
            report.l2_error, report.predicted_residual
        );
    }
    Ok(())
}

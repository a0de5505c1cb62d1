//! Localization statistics across scales.

use poisson_wavelets::asymptotics::{localization_report, log_angles, LocalizationGrid};
use poisson_wavelets::sphere::SphereContext;

fn main() -> poisson_wavelets::Result<()> {
    let scales = log_angles(0.01, 1.0, 7);
    let probes = log_angles(1e-3, 0.05, 5);
    for (n, m) in [(2, 1), (3, 1), (2, 2)] {
        let report = localization_report(SphereContext::new(n)?, m, &scales, &probes, LocalizationGrid::default())?;
        println!("n = {n}, m = {m}");
        println!("  pointwise  exponent {:.2}  spread {:.3}", report.pointwise.exponent, report.pointwise.spread);
        println!("  scaled     exponent {:.2}  spread {:.3}", report.scaled.exponent, report.scaled.spread);
        println!("  peak       spread {:.3}", report.peak.spread);
        println!("  probe statistic grows toward small scales: {}", report.pointwise_probe.grows_toward_small_scales());
    }
    Ok(())
}

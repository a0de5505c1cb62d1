//! One wavelet evaluated four independent ways.

use poisson_wavelets::sphere::SphereContext;
use poisson_wavelets::wavelets::{compare_representations, Flavor, Representation, WaveletFamily};

fn main() -> poisson_wavelets::Result<()> {
    let family = WaveletFamily::new(SphereContext::new(3)?, 2, Flavor::Raw)?;
    let wavelet = family.at_scale(0.2)?;
    let thetas: Vec<f64> = (0..=8).map(|j| std::f64::consts::PI * j as f64 / 8.0).collect();
    let table = compare_representations(&wavelet, &thetas)?;

    print!("{:>8}", "θ");
    for repr in Representation::ALL {
        print!("  {:>22}", repr.name());
    }
    println!("  {:>10}", "gap");
    for (j, theta) in thetas.iter().enumerate() {
        print!("{theta:>8.4}");
        for values in &table.values {
            print!("  {:>22.15e}", values[j]);
        }
        println!("  {:>10.2e}", table.gaps[j]);
    }
    println!("max gap relative to sup |g| = {:.3e}", table.max_gap());
    Ok(())
}

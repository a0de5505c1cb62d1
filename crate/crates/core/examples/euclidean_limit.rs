//! Small-scale wavelets converge to a Euclidean profile under stereographic projection.

use poisson_wavelets::asymptotics::{decay_slope, euclidean_convergence_report, EuclideanProfile};
use poisson_wavelets::sphere::SphereContext;

fn main() -> poisson_wavelets::Result<()> {
    let ctx = SphereContext::new(2)?;
    let m = 2;
    let s: Vec<f64> = (0..=200).map(|i| 0.1 * i as f64).collect();
    let report = euclidean_convergence_report(ctx, m, &[0.04, 0.02, 0.01, 0.005], &s)?;
    for (i, a) in report.scales.iter().enumerate() {
        let order = report.primary.orders.get(i.wrapping_sub(1)).copied();
        println!(
            "a = {a:<6} sup error {:.4e}  relative {:.4e}  order {}",
            report.primary.sup_errors[i],
            report.primary.relative_errors[i],
            order.map_or("-".into(), |o| format!("{o:.3}"))
        );
    }
    if let Some(alt) = &report.alternate {
        println!("alternate projection relative errors {:?}", alt.relative_errors);
    }
    let degree = EuclideanProfile { ctx, m }.decay_degree();
    println!("decay slope {:.4}, expected -{degree}", decay_slope(&ctx, m, 1e2, 1e4, 50));
    Ok(())
}

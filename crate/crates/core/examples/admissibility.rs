//! Approximate identities and the uniform L¹ bound behind admissibility.

use poisson_wavelets::sphere::SphereContext;
use poisson_wavelets::transform::{admissibility_report, psi_norm, w_polynomial, AdmissibilityConfig};

fn main() -> poisson_wavelets::Result<()> {
    let ctx = SphereContext::new(2)?;
    for m in 1..=3 {
        println!("m = {m}: W = {:?}, ∫ψ² dt/t = {:.12}", w_polynomial(m), psi_norm(m)?);
    }
    let report = admissibility_report(ctx, 2, AdmissibilityConfig { r_count: 12, ..Default::default() })?;
    for (r, v) in &report.profile {
        println!("R = {r:<10.4e}  L¹ = {v:.8}");
    }
    println!("sup {:.8}, refined {:.8}, change {:.2e}", report.sup, report.sup_refined, report.refinement_change);
    Ok(())
}

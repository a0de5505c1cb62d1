//! Exact α and R coefficient tables, symbolic in n and at fixed n.

use poisson_wavelets::coefficients::{build_alpha_table, build_r_tables, operator_identity_check, Dimension};

fn main() -> poisson_wavelets::Result<()> {
    let alpha = build_alpha_table(5);
    for m in 0..=alpha.max_order() {
        let row: Vec<String> = alpha.row(m).iter().map(|x| x.to_string()).collect();
        println!("α_{m}: [{}]", row.join(", "));
    }
    println!("operator identity holds: {}", operator_identity_check(5).passed());

    for table in build_r_tables(3, Dimension::Symbolic)? {
        println!("\norder {} (symbolic n)", table.order);
        for row in &table.rows {
            let coeffs: Vec<String> = row.coeffs.iter().map(|p| format!("({p})")).collect();
            println!("  R_{}: r^{} · [{}]", row.k, row.parity, coeffs.join(", "));
        }
    }

    let fixed = &build_r_tables(2, Dimension::Fixed(3))?[1];
    println!("\norder 2 at n = 3");
    for row in &fixed.rows {
        let coeffs: Vec<String> = row.coeffs.iter().map(|p| p.to_string()).collect();
        println!("  R_{}: [{}]", row.k, coeffs.join(", "));
    }
    Ok(())
}

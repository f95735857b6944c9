//! Smallest nonzero eigenvalue of D(r) against the r^{-(1+ε)} threshold.
use fibred_hodge::scene::shipped;
use fibred_hodge::spectral::SolverOptions;
use fibred_hodge::splicing::small_eigenvalue_scan;

fn main() -> fibred_hodge::Result<()> {
    for (name, kernel) in [("sphere", 2), ("torus", 4)] {
        let geom = shipped(name)?.geometry()?;
        let grid: Vec<f64> = (2..=8).map(f64::from).collect();
        let rep = small_eigenvalue_scan(&geom, &grid, 0.5, kernel, &SolverOptions::default())?;
        println!("{name}: {} violations, log-log slope {:.3}", rep.violations, rep.slope.unwrap_or(f64::NAN));
        for row in &rep.rows {
            println!("  r = {}: μ₁ = {:.5}, μ₁·r^1.5 = {:.4}", row.r, row.mu1, row.mu1_scaled);
        }
    }
    Ok(())
}

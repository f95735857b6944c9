//! Kernel and low spectrum of the Gauss–Bonnet operator and the Hodge
//! Laplacian on X(3).
use fibred_hodge::scene::{shipped, SHIPPED};
use fibred_hodge::spectral::{kernel_of, low_spectrum, Definiteness, SolverOptions};

fn main() -> fibred_hodge::Result<()> {
    let opts = SolverOptions::default();
    for name in SHIPPED {
        let scene = shipped(name)?;
        let cx = scene.geometry()?.assemble(3.0)?;
        let ops = cx.operators();
        let (lap, _) = kernel_of(&ops.laplacian, Definiteness::PositiveSemidefinite, 6, &opts)?;
        let res = low_spectrum(&ops.d, lap.dim + 6, Definiteness::Indefinite, &opts)?;
        println!("{name}: dim ker Δ = {}, gap ratio {:.1e}", lap.dim, lap.gap_ratio);
        println!("  smallest |μ| of D: {:?}", res.values.iter().map(|v| format!("{v:.3e}")).collect::<Vec<_>>());
    }
    Ok(())
}

//! Gap between the near-kernel eigenforms and the spliced matching sets,
//! restricted to the vertex pieces with collars of length 1.
use fibred_hodge::scene::shipped;
use fibred_hodge::spectral::SolverOptions;
use fibred_hodge::splicing::gap_experiment;

fn main() -> fibred_hodge::Result<()> {
    for name in ["sphere", "theta"] {
        let scene = shipped(name)?;
        let rows = gap_experiment(&scene.geometry()?, &scene.spectra()?, &[2.0, 3.0, 4.0, 5.0, 6.0], 1.0, &SolverOptions::default())?;
        for row in rows {
            println!("{name} r = {}: δ = {:.3e} (m = {})", row.r, row.delta, row.m);
        }
    }
    Ok(())
}

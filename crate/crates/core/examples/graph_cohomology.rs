//! Exact graph cohomology predictor for the shipped scenes.
use fibred_hodge::scene::{shipped, SHIPPED};

fn main() -> fibred_hodge::Result<()> {
    for name in SHIPPED {
        let scene = shipped(name)?;
        let g = scene.build_graph()?;
        let coh = scene.cochain_system()?.cohomology();
        let ss = coh.spectral_sequence();
        println!("{name}: graph betti {:?}", g.betti());
        println!("  h0 = {:?}, h1 = {:?}, E2 = {:?}", coh.h0, coh.h1, ss.e2);
        println!("  predicted betti of X(r) = {:?}", coh.predicted_betti_all());
    }
    Ok(())
}

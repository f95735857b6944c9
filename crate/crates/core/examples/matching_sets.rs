//! Matching sets of extended harmonic forms and their dimension chain
//! against the graph cohomology predictor.
use fibred_hodge::scene::{shipped, SHIPPED};
use fibred_hodge::spectral::SolverOptions;
use fibred_hodge::splicing::splice_setup;

fn main() -> fibred_hodge::Result<()> {
    for name in SHIPPED {
        let scene = shipped(name)?;
        let coh = scene.cochain_system()?.cohomology();
        let setup = splice_setup(&scene.geometry()?, &scene.spectra()?, 3.0, &SolverOptions::default())?;
        let w = &setup.space;
        println!(
            "{name}: dim W = {} = {} (L²) + {} (absolute) + {} (relative); Σh0 = {}, Σh1 = {}; mismatch {:.1e}",
            w.dim_w,
            w.dim_l2,
            w.dim_la,
            w.dim_lr,
            coh.h0.iter().sum::<usize>(),
            coh.h1.iter().sum::<usize>(),
            w.mismatch
        );
    }
    Ok(())
}

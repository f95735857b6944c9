//! Splice the matching basis into X(r) and compare with its projection onto
//! the near-kernel.
use fibred_hodge::scene::shipped;
use fibred_hodge::spectral::SolverOptions;
use fibred_hodge::splicing::splice_report;

fn main() -> fibred_hodge::Result<()> {
    let name = std::env::args().nth(1).unwrap_or_else(|| "theta".into());
    let scene = shipped(&name)?;
    let rep = splice_report(&scene.geometry()?, &scene.spectra()?, &[2.0, 3.0, 4.0, 5.0, 6.0], &SolverOptions::default())?;
    println!("{name}: λ̂₀ = {:.4}, h² floor {:.2}", rep.gap, rep.floor);
    for (r, sv) in &rep.gram_min_sv {
        let worst = rep.rows.iter().filter(|x| x.r == *r).fold(0.0f64, |a, x| a.max(x.ratio));
        let bound = rep.rows.iter().find(|x| x.r == *r).map_or(0.0, |x| x.bound);
        println!("r = {r}: max ratio {worst:.3e} (bound {bound:.3e}), Gram min singular value {sv:.6}");
    }
    Ok(())
}

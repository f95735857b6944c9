//! Extended harmonic forms on the stars of the theta scene: limiting values
//! and the Lagrangian structure of their span.
use fibred_hodge::modes::aps::{aps_kernel, lagrangian_report, ApsCondition};
use fibred_hodge::scene::shipped;
use fibred_hodge::spectral::SolverOptions;
use fibred_hodge::splicing::spectrum_fn;

fn main() -> fibred_hodge::Result<()> {
    let scene = shipped("theta")?;
    let geom = scene.geometry()?;
    let spectra = scene.spectra()?;
    let sf = spectrum_fn(&spectra);
    for v in 0..geom.graph.vertices.len() {
        let star = geom.star(v, 6.0)?;
        for cond in [ApsCondition::P, ApsCondition::PBar] {
            let k = aps_kernel(&star, v, &sf, cond, &SolverOptions::default())?;
            println!("vertex {v} {cond:?}: dim {}, L² part {}, interior residual {:.1e}", k.dim(), k.l2_dim(), k.interior_residual);
            if cond == ApsCondition::PBar {
                let rep = lagrangian_report(&k)?;
                println!(
                    "  dim L_v = {} of {}, |L_a| = {}, |L_r| = {}, max pairing {:.1e}, star exchange gap {:.1e}",
                    rep.dim_lv, rep.dim_kernel_hat, rep.dim_lva, rep.dim_lvr, rep.max_pairing, rep.star_exchange_gap
                );
                for s in k.solutions.iter().take(2) {
                    println!("  limits {:?}", s.limits.iter().map(|l| l.2 .0.map(|x| (x * 1e4).round() / 1e4)).collect::<Vec<_>>());
                }
            }
        }
    }
    Ok(())
}

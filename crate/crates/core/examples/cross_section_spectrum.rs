//! Doubled circle operator: symmetry of the spectrum, kernel, gap and the
//! Weyl fit against the Fourier oracle.
use std::f64::consts::PI;

use fibred_hodge::cross_section::CrossSectionSpectrum;

fn main() -> fibred_hodge::Result<()> {
    let cs = CrossSectionSpectrum::new("y", 2.0 * PI, 16)?;
    let s = cs.sigma_matrix();
    let h = cs.hat_matrix();
    println!(
        "|σσ + I| = {:.1e}, |σD̂ + D̂σ| = {:.1e}",
        (&s * &s + nalgebra::DMatrix::identity(s.nrows(), s.ncols())).amax(),
        (&s * &h + &h * &s).amax()
    );
    println!("kernel dim {}, gap {:.6}", cs.kernel_dim(), cs.gap());
    let vals = cs.hat_eigenvalues();
    println!("lowest nonnegative eigenvalues {:?}", &vals[vals.len() / 2..vals.len() / 2 + 8]);

    let fine = CrossSectionSpectrum::new("y", 2.0 * PI, 1024)?;
    let fit = fine.weyl_fit(200)?;
    println!(
        "N = 1024, K = 200: exponent {:.4}, counting constant {:.4}, oracle {:.4}",
        fit.exponent,
        fit.counting_constant,
        fine.fourier_counting_constant()
    );
    Ok(())
}

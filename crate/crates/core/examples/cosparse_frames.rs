//! Random tight frames and cosparse signals.

use cosparse::frames::{cosparse_signal, random_tight_frame, tightness_defect};
use cosparse::linops::norm_11;

fn main() -> cosparse::error::Result<()> {
    let frame = random_tight_frame(120, 144, 11)?;
    let ds = frame.dense_analysis();
    println!("D* is {}x{}", ds.rows(), ds.cols());
    println!("‖DD* − I‖ = {:.2e}", tightness_defect(&ds));
    println!("‖D*D‖₁,₁ = {:.3}", frame.gram_norm_11());
    println!("‖D*‖₁,₁  = {:.3}", norm_11(&ds));

    for l in [0, 40, 100] {
        let sig = cosparse_signal(&frame, l, 12)?;
        let coeffs = frame.analyze(&sig.x);
        let zeros = coeffs.iter().filter(|c| c.abs() < 1e-10).count();
        println!("l = {l:>3}: {zeros} analysis coefficients vanish");
    }
    Ok(())
}

//! D-RIP constants and the recovery certificate on a tiny tight-frame
//! instance with a designed measurement matrix.

use cosparse::certify::{self, drip_exhaustive, drip_randomized_lb, DesignOptions};
use cosparse::frames::random_tight_frame;
use cosparse::harness::{certify_trial, CertifySpec};
use cosparse::linops::DenseMatrix;

fn main() -> cosparse::error::Result<()> {
    let frame = random_tight_frame(12, 16, 1)?;
    let gaussian = DenseMatrix::gaussian(10, 12, 2).scaled(1.0 / 10f64.sqrt());
    let exh = drip_exhaustive(&gaussian, &frame, 2)?;
    let lb = drip_randomized_lb(&gaussian, &frame, 2, 50, 3)?;
    println!(
        "gaussian A: sigma_2 = {:.4} over {} supports (randomized lower bound {:.4})",
        exh.sigma_s, exh.supports_checked, lb.sigma_s
    );

    let designed = certify::design_drip_matrix(&frame, 10, 2, 4, &DesignOptions::default())?;
    println!(
        "designed A: sigma_2 = {:.4} after {} restarts (threshold {})",
        designed.estimate.sigma_s,
        designed.restarts_used,
        certify::STATED_DRIP_THRESHOLD
    );

    let trial = certify_trial(&CertifySpec::tiny(0.05), 0)?;
    print!("\n{}", trial.report.to_text());
    Ok(())
}

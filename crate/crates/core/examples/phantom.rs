//! Phantom reconstruction from radial Fourier samples with total-variation
//! style analysis regularization, solved by smoothing continuation.

use cosparse::harness::{phantom_experiment, PhantomSolver, PhantomSpec};
use cosparse::solvers::ContinuationConfig;

fn main() -> cosparse::error::Result<()> {
    let spec = PhantomSpec::desk_scale();
    let lambda = 0.001;
    let mut cfg = ContinuationConfig::new(1e-1 / lambda, 1e-4 / lambda, 10.0, 750);
    cfg.stage_tol = 1e-8;
    let res = phantom_experiment(&spec, lambda, &PhantomSolver::Continuation(cfg), 0)?;
    println!(
        "{}x{} phantom, {} radial lines: relative error {:.3}% after {} iterations",
        spec.side,
        spec.side,
        spec.num_radial_lines,
        100.0 * res.rel_error,
        res.trace.iterations()
    );

    // coarse ASCII rendering of the reconstruction
    let shades = [' ', '.', ':', '-', '=', '+', '*', '#', '%', '@'];
    for row in (0..spec.side).step_by(4) {
        let line: String = (0..spec.side)
            .step_by(2)
            .map(|col| {
                let v = res.image[row * spec.side + col].clamp(0.0, 1.0);
                shades[((v * 9.0).round()) as usize]
            })
            .collect();
        println!("{line}");
    }
    Ok(())
}

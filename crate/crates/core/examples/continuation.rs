//! Smoothing continuation against a fixed small μ on a random instance.

use cosparse::frames::random_tight_frame;
use cosparse::harness::make_problem;
use cosparse::solvers::{continuation, sfista, ContinuationConfig, SolverConfig};

fn main() -> cosparse::error::Result<()> {
    let lambda = 0.004;
    let frame = random_tight_frame(120, 144, 5)?;
    let (problem, truth) = make_problem(120, 90, &frame, 100, 0.0, lambda, 6)?;

    let fixed = sfista(&problem, &SolverConfig::smoothing(1e-4 / lambda, 3000), Some(&truth))?;
    let target = fixed.last().rel_error.unwrap();

    let mut cfg = ContinuationConfig::new(1e-1 / lambda, 1e-4 / lambda, 10.0, 750);
    cfg.stage_tol = 1e-8;
    let cont = continuation(&problem, &cfg, Some(&truth))?;
    println!("schedule {:?}", cfg.schedule()?);
    println!("fixed μ: error {target:.4e} after {} iterations", fixed.iterations());
    println!(
        "continuation: {} iterations in {} stages, error {:.4e}, reached the fixed error at {:?}",
        cont.iterations(),
        cont.num_stages(),
        cont.last().rel_error.unwrap(),
        cont.first_iter_reaching(target)
    );
    Ok(())
}

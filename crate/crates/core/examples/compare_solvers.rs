//! SFISTA and DFISTA on one random instance, for matched μ and ρ = 1/μ.

use cosparse::frames::random_tight_frame;
use cosparse::harness::{compare_solvers, make_problem};
use cosparse::solvers::SolverConfig;

fn main() -> cosparse::error::Result<()> {
    let (n, m, l, lambda) = (120, 90, 100, 0.004);
    let frame = random_tight_frame(n, 144, 1)?;
    let (problem, truth) = make_problem(n, m, &frame, l, 0.0, lambda, 2)?;

    let mut configs = Vec::new();
    for mu in [10.0, 1.0, 0.1] {
        configs.push(SolverConfig::smoothing(mu, 500));
        configs.push(SolverConfig::decomposition(1.0 / mu, 500));
    }
    let cmp = compare_solvers(&problem, &configs, Some(&truth))?;
    println!("{:<18} {:>12} {:>12} {:>10}", "run", "H(x_100)", "H(x_500)", "rel err");
    for run in &cmp.runs {
        let at = |k| run.trace.row_at(k).unwrap().true_objective;
        println!(
            "{:<18} {:>12.6e} {:>12.6e} {:>10.3e}",
            run.label,
            at(100),
            at(500),
            run.trace.last().rel_error.unwrap()
        );
    }
    print!("\n{}", cmp.summary_csv(&[100, 500]));
    Ok(())
}

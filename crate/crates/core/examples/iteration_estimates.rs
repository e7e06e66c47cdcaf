//! Worst-case iteration counts for the two relaxations and the μ and ρ
//! that achieve them.

use cosparse::certify::{iteration_estimates, l1_lipschitz, IterationInputs};
use cosparse::frames::random_tight_frame;
use cosparse::harness::make_problem;
use cosparse::vector;

fn main() -> cosparse::error::Result<()> {
    let lambda = 0.004;
    let frame = random_tight_frame(120, 144, 1)?;
    let (problem, truth) = make_problem(120, 90, &frame, 100, 0.0, lambda, 2)?;
    let a_norm = problem.measurement_norm(0)?;
    let d_norm = problem.frame_norm(0);
    let dist = vector::norm2(&truth);
    for eps in [1e-2, 1e-3, 1e-4] {
        let est = iteration_estimates(&IterationInputs {
            l_g: l1_lipschitz(lambda, problem.p()),
            l_grad_f: a_norm * a_norm,
            lambda1: dist,
            lambda2: dist * dist * (1.0 + d_norm * d_norm),
            eps,
            h_x0: problem.alasso_objective(&vec![0.0; problem.n()]),
            d_norm,
        })?;
        println!(
            "eps {eps:.0e}: smoothing K {:.3e} (mu* {:.3e}), decomposition K {:.3e} (rho* {:.3e})",
            est.k_smoothing, est.mu_star, est.k_decomposition, est.rho_star
        );
    }
    Ok(())
}

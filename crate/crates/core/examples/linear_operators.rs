//! Matrix-free operators: composition, adjoint checks and power-iteration
//! norm estimates.

use std::sync::Arc;

use cosparse::frames::difference_operator_2d;
use cosparse::linops::{adjoint_mismatch, compose, spectral_norm, DenseMatrix, LinearOperator};

fn main() -> cosparse::error::Result<()> {
    let a = DenseMatrix::gaussian(30, 40, 7);
    let est = spectral_norm(&a, 200, 1)?;
    let exact = a.to_nalgebra().singular_values().max();
    println!("dense 30x40: power iteration {:.6}, svd {:.6}", est.sigma, exact);

    // periodic finite differences on a 16x16 grid; ‖D*‖² = 8
    let diff = difference_operator_2d(16, 16)?;
    println!(
        "difference operator {}x{}: adjoint mismatch {:.1e}, norm {:.4}",
        diff.out_dim(),
        diff.in_dim(),
        adjoint_mismatch(&diff, 5, 2),
        spectral_norm(&diff, 300, 3)?.sigma
    );

    let b = DenseMatrix::gaussian(20, 30, 8);
    let ab = compose(Arc::new(b), Arc::new(a.clone()))?;
    println!("composed 20x40 operator: norm {:.4}", spectral_norm(&ab, 200, 4)?.sigma);
    Ok(())
}

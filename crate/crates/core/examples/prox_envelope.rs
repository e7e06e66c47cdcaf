//! Soft thresholding, the Huber envelope of λ‖·‖₁ and the split
//! (z-minimized) penalty that matches it.

use cosparse::prox::{self, CouplingParams, EnvelopeParams};

fn main() -> cosparse::error::Result<()> {
    let v = [-2.0, -0.3, 0.0, 0.05, 0.8, 3.0];
    let (lambda, mu) = (0.5, 0.4);
    println!("v                  {v:?}");
    println!("soft threshold 0.2 {:?}", prox::soft_threshold(&v, 0.2));

    let env = EnvelopeParams::new(lambda, mu)?;
    println!("envelope value     {:.6}", prox::envelope_value(&v, &env));
    println!("l1 value           {:.6}", lambda * v.iter().map(|x| x.abs()).sum::<f64>());
    println!("envelope gradient  {:?}", prox::envelope_gradient(&v, &env));

    // min_z λ‖z‖₁ + (ρ/2)‖z − v‖² equals the envelope at μ = 1/ρ
    let split = CouplingParams::new(lambda, 1.0 / mu)?;
    let z = prox::partial_min_z(&v, &split);
    println!("minimizing z       {z:?}");
    println!("split value        {:.6}", prox::coupling_value(&z, &v, &split));
    Ok(())
}

//! Reverse-mode gradients held against central finite differences.
//!
//! Every gradient the optimizers consume comes off a recorded evaluation
//! tape. This example rebuilds the same derivative the slow way, by probing
//! each parameter with a small step, and prints the worst disagreement.
//! In complex mode the probe steps along both the real and imaginary axes
//! and combines them in the same conjugate-direction convention the tape
//! uses, so the comparison stays coordinate by coordinate.
//!
//! ```bash
//! cargo run --example gradient_check
//! ```

use gradflow::harness::dataset::{gaussian_classes, stream_rng, STREAM_DATA, STREAM_INIT};
use gradflow::harness::max_relative_gradient_error;
use gradflow::losses::{BatchLoss, LossFn, LossKind, RegularizerConfig};
use gradflow::network::{finite_difference_gradient, Activation, Layer, NetworkSpec};
use num_complex::Complex64;

fn main() -> gradflow::Result<()> {
    let seed = 5;

    // Real network, mixed activations, cross entropy with a weight penalty.
    let mut data_rng = stream_rng(seed, STREAM_DATA);
    let batch = gaussian_classes(20, 2, 3, 1.0, 0.25, &mut data_rng)?;
    let reg = RegularizerConfig::new(25.0, batch.len())?;
    let mut init_rng = stream_rng(seed, STREAM_INIT);
    let net: NetworkSpec<f64> = NetworkSpec::new(vec![
        Layer::random(6, 3, Activation::Tanh, true, 0.7, &mut init_rng)?,
        Layer::random(4, 6, Activation::Sigmoid, true, 0.7, &mut init_rng)?,
        Layer::random(2, 4, Activation::Identity, true, 0.7, &mut init_rng)?,
    ])?;
    let loss = BatchLoss {
        batch,
        kind: LossKind::CrossEntropy,
        reg: Some(reg),
    };
    let (value, tape_grad) = loss.evaluate(&net)?;
    let fd_grad = finite_difference_gradient(&net, |probe| loss.value(probe), 1e-6)?;
    let worst = max_relative_gradient_error(&tape_grad.to_flat(), &fd_grad.to_flat());
    println!(
        "real network: {} parameters, loss {:.6}, worst gradient deviation {:.3e}",
        net.param_count(),
        value,
        worst
    );

    // Complex network: the tape's conjugate-direction gradient against
    // axis-wise probes.
    let mut init_rng = stream_rng(seed + 1, STREAM_INIT);
    let cnet: NetworkSpec<Complex64> = NetworkSpec::new(vec![
        Layer::random(5, 2, Activation::Tanh, true, 0.6, &mut init_rng)?,
        Layer::random(1, 5, Activation::Identity, true, 0.6, &mut init_rng)?,
    ])?;
    let mut data_rng = stream_rng(seed + 1, STREAM_DATA);
    let cbatch = gradflow::harness::dataset::linear_regression(16, 2, 0.0, &mut data_rng)?;
    let closs = BatchLoss {
        batch: cbatch,
        kind: LossKind::Euclidean,
        reg: None,
    };
    let (cvalue, ctape) = closs.evaluate(&cnet)?;
    let cfd = finite_difference_gradient(&cnet, |probe| closs.value(probe), 1e-6)?;
    let cworst = max_relative_gradient_error(&ctape.to_flat(), &cfd.to_flat());
    println!(
        "complex network: {} parameters, loss {:.6}, worst gradient deviation {:.3e}",
        cnet.param_count(),
        cvalue,
        cworst
    );

    let tol = 1e-6;
    println!(
        "both within tolerance {tol:.0e}: {}",
        worst <= tol && cworst <= tol
    );
    Ok(())
}

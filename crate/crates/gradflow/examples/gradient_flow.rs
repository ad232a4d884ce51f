//! First-order gradient flow, from a one-parameter bowl to a real network.
//!
//! The flow `dW/dt = -eta grad L` on the loss `L = W^2/2` has the closed
//! form `W(t) = W0 exp(-eta t)`, so integrating it numerically and printing
//! the deviation shows exactly how faithful the discrete stepper is. The
//! same machinery then trains a two-layer tanh network on a regression
//! task, recording loss, gradient norm, and metric path length as it goes.
//!
//! ```bash
//! cargo run --example gradient_flow
//! ```

use gradflow::harness::dataset::{linear_regression, stream_rng, STREAM_DATA, STREAM_INIT};
use gradflow::losses::{BatchLoss, LossKind, PolyLoss};
use gradflow::metric::LayerMetric;
use gradflow::network::{Activation, Layer, NetworkSpec};
use gradflow::objective::carrier_network;
use gradflow::optim::{run_trajectory, OptimizerHyper, OptimizerKind};

fn main() -> gradflow::Result<()> {
    // One parameter, quadratic bowl, explicit Euler at dt = 1e-4.
    let mut carrier = carrier_network(&[1.0])?;
    let loss = PolyLoss {
        quadratic: 1.0,
        quartic: 0.0,
    };
    let metric = LayerMetric::euclidean(1)?;
    let hyper = OptimizerHyper {
        eta: 1.0,
        dt: 1e-4,
        ..OptimizerHyper::default()
    };
    let record = run_trajectory(
        &mut carrier,
        &loss,
        &metric,
        OptimizerKind::Aristotle,
        &hyper,
        50_000,
    )?;

    println!("quadratic flow against W(t) = exp(-t):");
    println!("{:>6} {:>14} {:>14} {:>10}", "t", "measured", "exact", "rel err");
    for row in record.rows.iter().step_by(10_000) {
        let exact = (-row.t).exp();
        let rel = (row.param_norm - exact).abs() / exact;
        println!(
            "{:>6.1} {:>14.8e} {:>14.8e} {:>10.2e}",
            row.t, row.param_norm, exact, rel
        );
    }

    // The same flow on a small network fit to noisy linear data.
    let seed = 7;
    let mut data_rng = stream_rng(seed, STREAM_DATA);
    let batch = linear_regression(64, 3, 0.05, &mut data_rng)?;
    let mut init_rng = stream_rng(seed, STREAM_INIT);
    let mut net: NetworkSpec<f64> = NetworkSpec::new(vec![
        Layer::random(8, 3, Activation::Tanh, true, 0.5, &mut init_rng)?,
        Layer::random(1, 8, Activation::Identity, true, 0.5, &mut init_rng)?,
    ])?;
    let loss = BatchLoss {
        batch,
        kind: LossKind::Euclidean,
        reg: None,
    };
    let metric = LayerMetric::euclidean(net.layer_count())?;
    let hyper = OptimizerHyper {
        eta: 0.5,
        dt: 0.01,
        ..OptimizerHyper::default()
    };
    let record = run_trajectory(
        &mut net,
        &loss,
        &metric,
        OptimizerKind::Aristotle,
        &hyper,
        500,
    )?;

    println!();
    println!("two-layer tanh network on linear data:");
    println!(
        "{:>6} {:>12} {:>12} {:>12}",
        "t", "loss", "grad norm", "path length"
    );
    for row in record.rows.iter().step_by(100) {
        println!(
            "{:>6.2} {:>12.6e} {:>12.6e} {:>12.6e}",
            row.t, row.loss, row.grad_norm, row.path_length
        );
    }
    let first = record.rows.first().expect("rows");
    let last = record.final_row();
    println!(
        "loss fell from {:.4e} to {:.4e} over a path of metric length {:.4}",
        first.loss, last.loss, last.path_length
    );
    Ok(())
}

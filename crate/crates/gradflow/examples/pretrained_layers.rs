//! Per-layer stiffness: freezing and slowing pretrained blocks.
//!
//! The metric assigns each layer a stiffness. A frozen layer is immovable
//! under every stepper (its parameters stay bit-identical, not merely
//! small-moving), and a stiffness of `s` scales that layer's velocity by
//! `1/s`, so `s = 100` drifts a hundred times slower than the Euclidean
//! baseline. This example trains the same two-layer network three ways
//! from one shared initialization and measures how far the first layer
//! travels in each regime.
//!
//! ```bash
//! cargo run --example pretrained_layers
//! ```

use gradflow::harness::dataset::{linear_regression, stream_rng, STREAM_DATA, STREAM_INIT};
use gradflow::losses::{BatchLoss, LossKind};
use gradflow::metric::{LayerMetric, LayerStiffness};
use gradflow::network::{Activation, Layer, NetworkSpec};
use gradflow::optim::{run_trajectory, OptimizerHyper, OptimizerKind};

fn first_layer_params(net: &NetworkSpec<f64>) -> Vec<f64> {
    let layer = &net.layers()[0];
    layer.weights.iter().chain(layer.bias.iter()).copied().collect()
}

fn drift(before: &[f64], after: &[f64]) -> f64 {
    before
        .iter()
        .zip(after)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

fn main() -> gradflow::Result<()> {
    let seed = 7;
    let batch = linear_regression(48, 3, 0.05, &mut stream_rng(seed, STREAM_DATA))?;
    let loss = BatchLoss {
        batch,
        kind: LossKind::Euclidean,
        reg: None,
    };

    let mut init = stream_rng(seed, STREAM_INIT);
    let base = NetworkSpec::new(vec![
        Layer::random(6, 3, Activation::Sigmoid, true, 0.5, &mut init)?,
        Layer::random(1, 6, Activation::Identity, true, 0.5, &mut init)?,
    ])?;
    let start = first_layer_params(&base);

    let hyper = OptimizerHyper {
        eta: 0.5,
        dt: 0.01,
        ..OptimizerHyper::default()
    };
    let regimes = [
        ("euclidean", LayerStiffness::Scaled(1.0)),
        ("stiffness 100", LayerStiffness::Scaled(100.0)),
        ("frozen", LayerStiffness::Frozen),
    ];

    println!("first-layer drift after 1000 steps, second layer Euclidean throughout:");
    println!("{:>14} {:>14} {:>14}", "metric", "final loss", "layer-0 drift");
    for (name, stiffness) in regimes {
        let metric = LayerMetric::new(vec![stiffness, LayerStiffness::Scaled(1.0)])?;
        let mut net = base.clone();
        let record = run_trajectory(
            &mut net,
            &loss,
            &metric,
            OptimizerKind::Aristotle,
            &hyper,
            1000,
        )?;
        let end = first_layer_params(&net);
        println!(
            "{:>14} {:>14.8e} {:>14.8e}",
            name,
            record.rows.last().unwrap().loss,
            drift(&start, &end)
        );
        if matches!(stiffness, LayerStiffness::Frozen) {
            let identical = start
                .iter()
                .zip(&end)
                .all(|(a, b)| a.to_bits() == b.to_bits());
            println!(
                "{:>14} layer 0 bit-identical to its initialization: {identical}",
                ""
            );
        }
    }
    Ok(())
}

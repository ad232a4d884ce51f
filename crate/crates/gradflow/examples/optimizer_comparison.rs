//! Four steppers on one quadratic bowl.
//!
//! Every optimizer here is the discretization of a mechanical law: the
//! first-order flow follows the raised gradient directly, the inertial
//! stepper integrates Newton's second law with friction, the damped
//! variant rescales force by an online estimate of its own magnitude, and
//! the co-gradient stepper takes curvature-corrected steps from the local
//! Hessian. On a fixed positive-definite quadratic they all reach the
//! bottom; this example compares how fast, and along how long a path.
//!
//! ```bash
//! cargo run --example optimizer_comparison
//! ```

use gradflow::metric::LayerMetric;
use gradflow::objective::{carrier_network, MatrixQuadratic, ObjectiveLoss};
use gradflow::optim::{run_trajectory, OptimizerHyper, OptimizerKind};
use nalgebra::DMatrix;

fn main() -> gradflow::Result<()> {
    // Fixed SPD curvature with eigenvalues spread over [0.5, 4].
    let a = DMatrix::from_row_slice(
        4,
        4,
        &[
            2.0, 0.4, 0.0, 0.1, //
            0.4, 1.5, 0.3, 0.0, //
            0.0, 0.3, 3.2, 0.2, //
            0.1, 0.0, 0.2, 0.9,
        ],
    );
    let objective = MatrixQuadratic::new(a)?;
    let loss = ObjectiveLoss {
        objective: &objective,
    };
    let start = vec![1.0, -0.8, 0.6, -1.2];
    let metric = LayerMetric::euclidean(1)?;

    let runs = [
        (
            OptimizerKind::Aristotle,
            OptimizerHyper {
                eta: 0.2,
                dt: 0.05,
                ..OptimizerHyper::default()
            },
        ),
        (
            OptimizerKind::Momentum,
            OptimizerHyper {
                eta: 1.0,
                dt: 0.05,
                mass: 1.0,
                friction: 2.0,
                ..OptimizerHyper::default()
            },
        ),
        (
            OptimizerKind::Damped,
            OptimizerHyper {
                eta: 1.0,
                dt: 0.05,
                mass: 1.0,
                friction: 2.0,
                beta: 4.0,
                epsilon: 1e-8,
            },
        ),
        (
            OptimizerKind::Cogradient,
            OptimizerHyper {
                eta: 0.2,
                dt: 0.05,
                ..OptimizerHyper::default()
            },
        ),
    ];

    println!("500 steps from the same start on a 4d quadratic bowl:");
    println!(
        "{:>12} {:>14} {:>14} {:>12}",
        "stepper", "final loss", "final |grad|", "path length"
    );
    for (kind, hyper) in runs {
        let mut net = carrier_network(&start)?;
        let record = run_trajectory(&mut net, &loss, &metric, kind, &hyper, 500)?;
        let last = record.rows.last().unwrap();
        println!(
            "{:>12} {:>14.6e} {:>14.6e} {:>12.6e}",
            format!("{kind:?}").to_lowercase(),
            last.loss,
            last.grad_norm,
            last.path_length
        );
    }
    println!();
    println!("the inertial stepper coasts through the bowl and settles fastest;");
    println!("the damped variant keeps a near-constant speed, so it orbits the");
    println!("bottom instead of parking (note its path length).");
    Ok(())
}

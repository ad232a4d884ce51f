//! Descent on complex weights and its real twin.
//!
//! The loss `L = z conj(z)` is not holomorphic, but it has a well-defined
//! conjugate-direction gradient, and the metric on complex coordinates
//! carries a factor two relative to the real case. Both conventions meet
//! in the flow: a single complex parameter under `L = |z|^2` decays as
//! `z(t) = z0 exp(-2 eta t)`, and it must match a two-real-parameter
//! network descending on `L = x^2 + y^2` coordinate for coordinate.
//!
//! ```bash
//! cargo run --example complex_descent
//! ```

use gradflow::losses::ModulusSquaredLoss;
use gradflow::metric::LayerMetric;
use gradflow::network::{Activation, Layer, NetworkSpec};
use gradflow::objective::carrier_network;
use gradflow::optim::{run_trajectory, OptimizerHyper, OptimizerKind};
use num_complex::Complex64;

fn main() -> gradflow::Result<()> {
    let z0 = Complex64::new(1.0, 1.0);
    let eta = 1.0;
    let dt = 1e-4;
    let steps = 20_000;

    let mut znet: NetworkSpec<Complex64> = NetworkSpec::new(vec![Layer::from_parts(
        1,
        1,
        vec![z0],
        vec![],
        Activation::Identity,
    )?])?;
    let metric = LayerMetric::euclidean(1)?;
    let hyper = OptimizerHyper {
        eta,
        dt,
        ..OptimizerHyper::default()
    };
    let record = run_trajectory(
        &mut znet,
        &ModulusSquaredLoss,
        &metric,
        OptimizerKind::Aristotle,
        &hyper,
        steps,
    )?;

    println!("|z(t)| under L = z conj(z), against |z0| exp(-2t):");
    println!("{:>6} {:>14} {:>14} {:>10}", "t", "measured", "exact", "rel err");
    for row in record.rows.iter().step_by(4_000) {
        let exact = z0.norm() * (-2.0 * eta * row.t).exp();
        let rel = (row.param_norm - exact).abs() / exact;
        println!(
            "{:>6.1} {:>14.8e} {:>14.8e} {:>10.2e}",
            row.t, row.param_norm, exact, rel
        );
    }

    // The same flow written in real coordinates (x, y) = (Re z, Im z).
    let mut rnet = carrier_network(&[z0.re, z0.im])?;
    run_trajectory(
        &mut rnet,
        &ModulusSquaredLoss,
        &metric,
        OptimizerKind::Aristotle,
        &hyper,
        steps,
    )?;

    let z = znet.params_flat()[0];
    let xy = rnet.params_flat();
    println!();
    println!("final complex parameter: {:+.12e} {:+.12e}i", z.re, z.im);
    println!("final real pair:         {:+.12e} {:+.12e}", xy[0], xy[1]);
    let gap = (z.re - xy[0]).abs().max((z.im - xy[1]).abs());
    println!("largest coordinate gap: {gap:.3e}");
    Ok(())
}

//! Evidence-based model selection on logistic data.
//!
//! Two logistic regressions fit the same binary labels: one with just the
//! informative covariate plus intercept (k = 2), one padded with three
//! noise covariates (k = 5). Maximum likelihood always favors the wider
//! model; the evidence charges `ln(N)/(2N)` per parameter and picks the
//! smaller one unless the extra coordinates pay for themselves. A single
//! comparison is shown in full, then the win rate of the true model over
//! repeated fresh datasets and growing sample sizes.
//!
//! ```bash
//! cargo run --release --example model_selection
//! ```

use gradflow::bayes::{compare_models, laplace_evidence};
use gradflow::harness::dataset::{design_with_bias, logistic_data, stream_rng, STREAM_DATA};
use gradflow::harness::{model_selection_study, StudySettings};
use gradflow::objective::LogisticObjective;

fn main() -> gradflow::Result<()> {
    let n = 2000;
    let data = logistic_data(n, 4, 1.2, -0.4, 3.0, &mut stream_rng(1, STREAM_DATA))?;
    let (narrow, k1) = design_with_bias(&data, 1)?;
    let (wide, k2) = design_with_bias(&data, 4)?;
    let o1 = LogisticObjective::new(narrow, data.labels.clone(), k1)?;
    let o2 = LogisticObjective::new(wide, data.labels.clone(), k2)?;
    let r1 = laplace_evidence(&o1, n, 1.0, &vec![0.0; k1])?;
    let r2 = laplace_evidence(&o2, n, 1.0, &vec![0.0; k2])?;
    let cmp = compare_models(&r1, &r2)?;

    println!("one dataset, N = {n}, true signal lives in the first covariate:");
    println!("  model 1 (k = {k1}): l0 = {:.8e}, l2 = {:.8e}", r1.l0, r1.l2);
    println!("  model 2 (k = {k2}): l0 = {:.8e}, l2 = {:.8e}", r2.l0, r2.l2);
    println!("  delta l0 (fit gain of model 2) = {:.4e}", cmp.delta_l0);
    println!("  delta l2 (evidence margin)     = {:.4e}", cmp.delta_l2);
    println!("  bic equivalent                 = {:.4}", cmp.bic);
    println!("  preferred = model {}", cmp.preferred);
    println!();

    let settings = StudySettings {
        n_values: vec![200, 1000, 5000],
        seeds: 25,
        ..StudySettings::default()
    };
    println!(
        "win rate of the narrow (true) model over {} fresh datasets per size:",
        settings.seeds
    );
    println!("{:>8} {:>10} {:>10}", "N", "wins", "fraction");
    for point in model_selection_study(&settings, 42)? {
        println!(
            "{:>8} {:>10} {:>10.3}",
            point.n,
            format!("{}/{}", point.true_wins, point.seeds),
            point.win_fraction()
        );
    }
    Ok(())
}

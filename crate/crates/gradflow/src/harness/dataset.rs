//! Deterministic dataset generation.
//!
//! Every random quantity draws from a counter-based generator keyed by
//! `(seed, stream)`, one stream per purpose. Runs with the same seed are
//! reproducible bit for bit, and the draws one purpose consumes never shift
//! another purpose's sequence.

use crate::error::{Error, Result};
use crate::losses::{Batch, Example, Target};
use crate::scalar::real_sigmoid;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Stream for dataset draws.
pub const STREAM_DATA: u64 = 0;
/// Stream for parameter initialization.
pub const STREAM_INIT: u64 = 1;
/// Stream for Monte Carlo trials.
pub const STREAM_MC: u64 = 2;
/// Stream for randomized probes and checks.
pub const STREAM_PROBE: u64 = 3;

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn check_counts(n: usize, dim: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::Argument("dataset needs n >= 1".into()));
    }
    if dim == 0 {
        return Err(Error::Argument("dataset needs dim >= 1".into()));
    }
    Ok(())
}

/// Balanced Gaussian blobs. Class `c` gets a center drawn `N(0, spread²)`
/// per coordinate; examples scatter around their center with standard
/// deviation `noise` and carry the class index as target.
pub fn gaussian_classes(
    n: usize,
    classes: usize,
    dim: usize,
    spread: f64,
    noise: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Batch> {
    check_counts(n, dim)?;
    if classes < 2 {
        return Err(Error::Argument("gaussian_classes needs classes >= 2".into()));
    }
    let centers: Vec<f64> = (0..classes * dim).map(|_| spread * normal(rng)).collect();
    let mut examples = Vec::with_capacity(n);
    for i in 0..n {
        let class = i % classes;
        let input = (0..dim)
            .map(|d| centers[class * dim + d] + noise * normal(rng))
            .collect();
        examples.push(Example {
            input,
            target: Target::Class(class),
        });
    }
    Batch::new(examples)
}

/// Linear data `y = w·x + b + noise·ξ` under a hidden unit-normal rule.
pub fn linear_regression(n: usize, dim: usize, noise: f64, rng: &mut ChaCha8Rng) -> Result<Batch> {
    check_counts(n, dim)?;
    let w: Vec<f64> = (0..dim).map(|_| normal(rng)).collect();
    let b = normal(rng);
    let mut examples = Vec::with_capacity(n);
    for _ in 0..n {
        let input: Vec<f64> = (0..dim).map(|_| normal(rng)).collect();
        let y = input.iter().zip(&w).map(|(x, wi)| x * wi).sum::<f64>() + b + noise * normal(rng);
        examples.push(Example {
            input,
            target: Target::Regression(vec![y]),
        });
    }
    Batch::new(examples)
}

/// Binary labels ruled by the first covariate alone. The label law is
/// `P(y = 1) = σ(signal·x₀ + intercept)` with `x₀ ~ N(0, 1)`; the remaining
/// `dim − 1` covariates are pure distractors with standard deviation
/// `noise_scale`. A model using only `x₀` and a bias is therefore correctly
/// specified, and every extra column it is offered carries no signal.
#[derive(Clone, Debug)]
pub struct LogisticData {
    /// Row-major `n × dim`, no bias column.
    pub covariates: Vec<f64>,
    pub labels: Vec<bool>,
    pub dim: usize,
}

pub fn logistic_data(
    n: usize,
    dim: usize,
    signal: f64,
    intercept: f64,
    noise_scale: f64,
    rng: &mut ChaCha8Rng,
) -> Result<LogisticData> {
    check_counts(n, dim)?;
    let mut covariates = Vec::with_capacity(n * dim);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let x0 = normal(rng);
        covariates.push(x0);
        for _ in 1..dim {
            covariates.push(noise_scale * normal(rng));
        }
        let p = real_sigmoid(signal * x0 + intercept);
        labels.push(rng.gen::<f64>() < p);
    }
    Ok(LogisticData {
        covariates,
        labels,
        dim,
    })
}

/// Design matrix using the first `features` covariates plus a constant
/// bias column, so the fitted model has `k = features + 1` parameters.
pub fn design_with_bias(data: &LogisticData, features: usize) -> Result<(Vec<f64>, usize)> {
    if features == 0 {
        return Err(Error::Argument("a design needs features >= 1".into()));
    }
    if features > data.dim {
        return Err(Error::Shape(format!(
            "requested {features} covariates, dataset has {}",
            data.dim
        )));
    }
    let n = data.labels.len();
    let k = features + 1;
    let mut design = Vec::with_capacity(n * k);
    for row in 0..n {
        design.extend_from_slice(&data.covariates[row * data.dim..row * data.dim + features]);
        design.push(1.0);
    }
    Ok((design, k))
}

/// Classification batch over the logistic rule: covariates in, label as a
/// two-class target. Lets the trainer consume the same generator the
/// evidence study uses.
pub fn logistic_batch(data: &LogisticData) -> Result<Batch> {
    let examples = data
        .labels
        .iter()
        .enumerate()
        .map(|(row, &y)| Example {
            input: data.covariates[row * data.dim..(row + 1) * data.dim].to_vec(),
            target: Target::Class(y as usize),
        })
        .collect();
    Batch::new(examples)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_independent_and_reproducible() {
        let a: Vec<f64> = {
            let mut r = stream_rng(7, STREAM_DATA);
            (0..8).map(|_| normal(&mut r)).collect()
        };
        let b: Vec<f64> = {
            let mut r = stream_rng(7, STREAM_DATA);
            (0..8).map(|_| normal(&mut r)).collect()
        };
        let c: Vec<f64> = {
            let mut r = stream_rng(7, STREAM_INIT);
            (0..8).map(|_| normal(&mut r)).collect()
        };
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn gaussian_classes_balances_labels() {
        let mut rng = stream_rng(3, STREAM_DATA);
        let batch = gaussian_classes(90, 3, 2, 2.0, 0.1, &mut rng).unwrap();
        let mut counts = [0usize; 3];
        for ex in batch.examples() {
            match ex.target {
                Target::Class(c) => counts[c] += 1,
                _ => panic!("expected class targets"),
            }
        }
        assert_eq!(counts, [30, 30, 30]);
        assert_eq!(batch.input_dim(), 2);
    }

    #[test]
    fn regression_targets_track_the_hidden_rule_when_noiseless() {
        let mut rng = stream_rng(5, STREAM_DATA);
        let batch = linear_regression(40, 3, 0.0, &mut rng).unwrap();
        // Replay the generator to recover the rule it drew.
        let mut replay = stream_rng(5, STREAM_DATA);
        let w: Vec<f64> = (0..3).map(|_| normal(&mut replay)).collect();
        let b = normal(&mut replay);
        for ex in batch.examples() {
            let y = match &ex.target {
                Target::Regression(v) => v[0],
                _ => panic!("expected regression targets"),
            };
            let predicted = ex.input.iter().zip(&w).map(|(x, wi)| x * wi).sum::<f64>() + b;
            assert!((y - predicted).abs() < 1e-12);
        }
    }

    #[test]
    fn logistic_labels_lean_with_the_signal() {
        let mut rng = stream_rng(11, STREAM_DATA);
        let data = logistic_data(4000, 4, 1.2, -0.4, 3.0, &mut rng).unwrap();
        // With intercept −0.4 the overall positive rate sits below one half.
        let positives = data.labels.iter().filter(|&&y| y).count();
        assert!(positives > 1000 && positives < 2000, "{positives}");
        // Labels correlate with the first covariate and not with the noise.
        let mean_x0_pos: f64 = data
            .labels
            .iter()
            .enumerate()
            .filter(|(_, &y)| y)
            .map(|(i, _)| data.covariates[i * 4])
            .sum::<f64>()
            / positives as f64;
        assert!(mean_x0_pos > 0.3, "{mean_x0_pos}");
    }

    #[test]
    fn design_appends_the_bias_column() {
        let mut rng = stream_rng(1, STREAM_DATA);
        let data = logistic_data(5, 3, 1.0, 0.0, 1.0, &mut rng).unwrap();
        let (design, k) = design_with_bias(&data, 2).unwrap();
        assert_eq!(k, 3);
        assert_eq!(design.len(), 15);
        for row in 0..5 {
            assert_eq!(design[row * 3 + 2], 1.0);
            assert_eq!(design[row * 3], data.covariates[row * 3]);
            assert_eq!(design[row * 3 + 1], data.covariates[row * 3 + 1]);
        }
        assert!(design_with_bias(&data, 4).is_err());
        assert!(design_with_bias(&data, 0).is_err());
    }

    #[test]
    fn logistic_batch_mirrors_the_labels() {
        let mut rng = stream_rng(2, STREAM_DATA);
        let data = logistic_data(6, 2, 1.0, 0.0, 1.0, &mut rng).unwrap();
        let batch = logistic_batch(&data).unwrap();
        assert_eq!(batch.len(), 6);
        for (ex, &y) in batch.examples().iter().zip(&data.labels) {
            assert_eq!(ex.target, Target::Class(y as usize));
            assert_eq!(ex.input.len(), 2);
        }
    }
}

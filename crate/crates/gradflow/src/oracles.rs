//! Closed-form reference flows and the saddle census.
//!
//! Two one-parameter gradient flows have exact solutions and serve as
//! ground truth for the integrators:
//!
//! ```text
//! L = ½ W²        W(t) = W₀ e^{−ηt}              L(t) = L₀ e^{−2ηt}
//! L = (α/8) W⁴    W(t) = W₀ / √(1 + αηW₀²t)      L(t) = L₀ / (1 + αηW₀²t)²
//! ```
//!
//! The saddle census estimates how rare true minima are among critical
//! points in dimension D. The independent-signs model draws D independent
//! ±1 curvature signs, so a minimum appears with probability exactly 2⁻ᴰ.
//! The random-symmetric contrast model draws a Gaussian symmetric matrix
//! instead; eigenvalue repulsion makes its minima rarer still, which the
//! census measures rather than assumes.

use crate::error::{Error, Result};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// One of the two reference flows, with its initial condition and rate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OracleSpec {
    Quadratic { w0: f64, eta: f64 },
    Quartic { w0: f64, eta: f64, alpha: f64 },
}

impl OracleSpec {
    pub fn quadratic(w0: f64, eta: f64) -> Result<Self> {
        check_rate(eta)?;
        check_initial(w0)?;
        Ok(OracleSpec::Quadratic { w0, eta })
    }

    pub fn quartic(w0: f64, eta: f64, alpha: f64) -> Result<Self> {
        check_rate(eta)?;
        check_initial(w0)?;
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::Argument(format!(
                "quartic coefficient must be positive and finite, got {alpha}"
            )));
        }
        Ok(OracleSpec::Quartic { w0, eta, alpha })
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            OracleSpec::Quadratic { .. } => "quadratic",
            OracleSpec::Quartic { .. } => "quartic",
        }
    }

    /// Exact parameter value at time `t`.
    pub fn w(&self, t: f64) -> f64 {
        match *self {
            OracleSpec::Quadratic { w0, eta } => w0 * (-eta * t).exp(),
            OracleSpec::Quartic { w0, eta, alpha } => {
                w0 / (1.0 + alpha * eta * w0 * w0 * t).sqrt()
            }
        }
    }

    /// Exact loss value at time `t`.
    pub fn loss(&self, t: f64) -> f64 {
        match *self {
            OracleSpec::Quadratic { w0, eta } => 0.5 * w0 * w0 * (-2.0 * eta * t).exp(),
            OracleSpec::Quartic { w0, eta, alpha } => {
                let denom = 1.0 + alpha * eta * w0 * w0 * t;
                alpha / 8.0 * w0.powi(4) / (denom * denom)
            }
        }
    }

    /// `(W(t), L(t))` in one call.
    pub fn exact(&self, t: f64) -> (f64, f64) {
        (self.w(t), self.loss(t))
    }

    pub fn initial_loss(&self) -> f64 {
        self.loss(0.0)
    }

    /// Loss gradient of the underlying potential at parameter value `w`.
    pub fn loss_gradient(&self, w: f64) -> f64 {
        match *self {
            OracleSpec::Quadratic { .. } => w,
            OracleSpec::Quartic { alpha, .. } => 0.5 * alpha * w * w * w,
        }
    }

    pub fn eta(&self) -> f64 {
        match *self {
            OracleSpec::Quadratic { eta, .. } | OracleSpec::Quartic { eta, .. } => eta,
        }
    }

    pub fn w0(&self) -> f64 {
        match *self {
            OracleSpec::Quadratic { w0, .. } | OracleSpec::Quartic { w0, .. } => w0,
        }
    }
}

fn check_rate(eta: f64) -> Result<()> {
    if !(eta > 0.0) || !eta.is_finite() {
        return Err(Error::Argument(format!(
            "rate must be positive and finite, got {eta}"
        )));
    }
    Ok(())
}

fn check_initial(w0: f64) -> Result<()> {
    if !w0.is_finite() {
        return Err(Error::Argument(format!(
            "initial parameter must be finite, got {w0}"
        )));
    }
    Ok(())
}

/// Critical-point curvature model for the census.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CensusModel {
    /// D independent equiprobable curvature signs.
    IndependentSigns,
    /// Symmetrized Gaussian matrix; positive definiteness decides.
    RandomSymmetric,
}

impl CensusModel {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "independent-signs" => Ok(CensusModel::IndependentSigns),
            "random-symmetric" => Ok(CensusModel::RandomSymmetric),
            other => Err(Error::Argument(format!(
                "unknown census model '{other}' (expected independent-signs or random-symmetric)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            CensusModel::IndependentSigns => "independent-signs",
            CensusModel::RandomSymmetric => "random-symmetric",
        }
    }
}

/// Monte Carlo estimate of the minimum fraction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CensusResult {
    pub fraction: f64,
    /// Binomial standard error `√(f(1−f)/trials)`.
    pub std_err: f64,
    pub trials: u64,
    pub minima: u64,
}

/// Trials per deterministic generator stream; results do not depend on how
/// the chunks are scheduled.
const CENSUS_CHUNK: u64 = 65_536;

/// Estimates the fraction of critical points that are minima in dimension
/// `d` by `trials` Monte Carlo draws.
pub fn saddle_census(d: usize, trials: u64, model: CensusModel, seed: u64) -> Result<CensusResult> {
    if trials < 100 {
        return Err(Error::Argument(format!(
            "census needs at least 100 trials, got {trials}"
        )));
    }
    if d == 0 {
        return Err(Error::Argument("census needs dimension >= 1".into()));
    }
    let bound = match model {
        CensusModel::IndependentSigns => 30,
        CensusModel::RandomSymmetric => 12,
    };
    if d > bound {
        return Err(Error::Argument(format!(
            "census dimension {d} exceeds the {} bound of {bound}",
            model.name()
        )));
    }

    let mut minima = 0u64;
    let chunks = trials.div_ceil(CENSUS_CHUNK);
    for chunk in 0..chunks {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(chunk);
        let len = CENSUS_CHUNK.min(trials - chunk * CENSUS_CHUNK);
        match model {
            CensusModel::IndependentSigns => {
                let mask: u64 = (1u64 << d) - 1;
                for _ in 0..len {
                    let bits: u64 = rng.gen();
                    if bits & mask == mask {
                        minima += 1;
                    }
                }
            }
            CensusModel::RandomSymmetric => {
                let mut m = DMatrix::zeros(d, d);
                for _ in 0..len {
                    for i in 0..d {
                        for j in 0..d {
                            m[(i, j)] = rng.sample(StandardNormal);
                        }
                    }
                    let sym = (&m + m.transpose()) * 0.5;
                    if sym.cholesky().is_some() {
                        minima += 1;
                    }
                }
            }
        }
    }
    let fraction = minima as f64 / trials as f64;
    Ok(CensusResult {
        fraction,
        std_err: (fraction * (1.0 - fraction) / trials as f64).sqrt(),
        trials,
        minima,
    })
}

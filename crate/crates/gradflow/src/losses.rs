//! Loss functions and batch objectives.
//!
//! Two families are supported: the squared Euclidean distance
//! `L = Σ (y − ŷ)² / 2` for regression (its complex form sums the squared
//! moduli, so the value stays real), and the softmax cross entropy
//! `L = −Σ_a P_a ln P̂^a` for classification. The cross entropy composes
//! with the softmax so that the gradient in the logits collapses to
//! `P̂ − P`, which is what makes large classifier layers cheap to train;
//! a dedicated test pins that identity to twelve decimal places.
//!
//! Batch losses average per-example losses, `L = (1/N) Σ_i L_i`, and may add
//! the Gaussian weight penalty `Σ_w |W_w|² / (2 N λ²)` over every parameter,
//! biases included.

use crate::error::{Error, Result};
use crate::network::{NetGradient, NetworkSpec, TapedForward};
use crate::scalar::TapeScalar;
use crate::tape::{NodeId, Tape};

// ---------------------------------------------------------------------------
// probability vectors
// ---------------------------------------------------------------------------

/// Discrete distribution: non-negative entries summing to one (within
/// 1e-12).
#[derive(Clone, Debug, PartialEq)]
pub struct ProbVector {
    entries: Vec<f64>,
}

impl ProbVector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Argument("empty probability vector".into()));
        }
        let mut sum = 0.0;
        for &p in &entries {
            if !p.is_finite() || p < 0.0 {
                return Err(Error::Argument(format!(
                    "probability entries must be finite and non-negative, got {p}"
                )));
            }
            sum += p;
        }
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::Argument(format!(
                "probabilities sum to {sum}, expected 1"
            )));
        }
        Ok(ProbVector { entries })
    }

    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Argument("empty probability vector".into()));
        }
        Ok(ProbVector {
            entries: vec![1.0 / n as f64; n],
        })
    }

    pub fn one_hot(n: usize, class: usize) -> Result<Self> {
        if class >= n {
            return Err(Error::Argument(format!(
                "class {class} out of range for {n} classes"
            )));
        }
        let mut entries = vec![0.0; n];
        entries[class] = 1.0;
        Ok(ProbVector { entries })
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

// ---------------------------------------------------------------------------
// pointwise losses
// ---------------------------------------------------------------------------

/// `Σ (y − ŷ)² / 2` over matching-length real vectors.
pub fn euclidean_loss(yhat: &[f64], y: &[f64]) -> Result<f64> {
    if yhat.len() != y.len() {
        return Err(Error::Shape(format!(
            "prediction has {} entries, target has {}",
            yhat.len(),
            y.len()
        )));
    }
    let mut s = 0.0;
    for (a, b) in yhat.iter().zip(y) {
        let d = b - a;
        s += d * d;
    }
    Ok(0.5 * s)
}

/// Softmax with max-subtraction. Shift invariance of the softmax makes the
/// subtraction exact, not approximate: the function is unchanged and only
/// the floating-point range improves.
pub fn softmax(logits: &[f64]) -> Result<ProbVector> {
    if logits.is_empty() {
        return Err(Error::Argument("softmax of an empty vector".into()));
    }
    let mut c = f64::NEG_INFINITY;
    for &y in logits {
        if !y.is_finite() {
            return Err(Error::Argument(format!("non-finite logit {y}")));
        }
        c = c.max(y);
    }
    let exps: Vec<f64> = logits.iter().map(|&y| (y - c).exp()).collect();
    let z: f64 = exps.iter().sum();
    Ok(ProbVector {
        entries: exps.into_iter().map(|e| e / z).collect(),
    })
}

/// `−Σ_a P_a ln P̂^a` with the continuity convention `0 · ln 0 = 0`.
/// A vanishing predicted probability on a class with positive true
/// probability has no finite value and is refused.
pub fn cross_entropy(p: &ProbVector, phat: &ProbVector) -> Result<f64> {
    if p.len() != phat.len() {
        return Err(Error::Shape(format!(
            "distributions have {} and {} classes",
            p.len(),
            phat.len()
        )));
    }
    let mut s = 0.0;
    for (&pa, &qa) in p.entries().iter().zip(phat.entries()) {
        if pa == 0.0 {
            continue;
        }
        if qa <= 0.0 {
            return Err(Error::Domain(
                "cross entropy of a vanishing predicted probability".into(),
            ));
        }
        s -= pa * qa.ln();
    }
    Ok(s)
}

/// Gradient of `cross_entropy(p, softmax(logits))` in the logits: `P̂ − P`.
pub fn cross_entropy_logit_gradient(p: &ProbVector, logits: &[f64]) -> Result<Vec<f64>> {
    if p.len() != logits.len() {
        return Err(Error::Shape(format!(
            "distribution has {} classes, logits have {}",
            p.len(),
            logits.len()
        )));
    }
    let phat = softmax(logits)?;
    Ok(phat
        .entries()
        .iter()
        .zip(p.entries())
        .map(|(q, p)| q - p)
        .collect())
}

// ---------------------------------------------------------------------------
// taped losses
// ---------------------------------------------------------------------------

/// Appends `Σ (ŷ − y)(ŷ − y)* / 2` to the tape. Works in both modes; in
/// complex mode each term is a squared modulus, so the imaginary part of the
/// loss cancels exactly.
pub fn euclidean_loss_on_tape<T: TapeScalar>(
    tape: &mut Tape<T>,
    yhat: &[NodeId],
    y: &[f64],
) -> Result<NodeId> {
    if yhat.len() != y.len() {
        return Err(Error::Shape(format!(
            "prediction has {} entries, target has {}",
            yhat.len(),
            y.len()
        )));
    }
    let mut terms = Vec::with_capacity(yhat.len());
    for (&id, &t) in yhat.iter().zip(y) {
        let target = tape.constant(T::from_re(t));
        let d = tape.sub(id, target);
        let dc = tape.conj(d);
        terms.push(tape.mul(d, dc));
    }
    let s = tape.sum(&terms);
    let half = tape.constant(T::from_re(0.5));
    Ok(tape.mul(half, s))
}

/// Appends the softmax cross entropy in log-sum-exp form,
/// `−Σ_a P_a (y_a − c) + ln Σ_b e^{y_b − c}` with `c = max_b y_b`.
/// The shift constant is a recorded value, not a differentiated node; since
/// the softmax is shift-invariant this changes nothing about the function or
/// its gradient. Real mode only.
pub fn cross_entropy_on_tape(
    tape: &mut Tape<f64>,
    logits: &[NodeId],
    p: &ProbVector,
) -> Result<NodeId> {
    if logits.is_empty() {
        return Err(Error::Argument("cross entropy over zero classes".into()));
    }
    if p.len() != logits.len() {
        return Err(Error::Shape(format!(
            "distribution has {} classes, logits have {}",
            p.len(),
            logits.len()
        )));
    }
    cross_entropy_on_tape_generic(tape, logits, p)
}

// ---------------------------------------------------------------------------
// batches
// ---------------------------------------------------------------------------

/// Supervision for one example.
#[derive(Clone, Debug, PartialEq)]
pub enum Target {
    /// Real regression target, matched against the network output by the
    /// Euclidean loss.
    Regression(Vec<f64>),
    /// Class index, matched against softmaxed logits by the cross entropy.
    Class(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Example {
    pub input: Vec<f64>,
    pub target: Target,
}

/// Non-empty collection of examples with uniform shapes.
#[derive(Clone, Debug)]
pub struct Batch {
    examples: Vec<Example>,
}

impl Batch {
    pub fn new(examples: Vec<Example>) -> Result<Self> {
        let first = examples
            .first()
            .ok_or_else(|| Error::Argument("a batch needs at least one example".into()))?;
        let input_dim = first.input.len();
        for (i, ex) in examples.iter().enumerate() {
            if ex.input.len() != input_dim {
                return Err(Error::Shape(format!(
                    "example {i} has {} inputs, example 0 has {input_dim}",
                    ex.input.len()
                )));
            }
            match (&first.target, &ex.target) {
                (Target::Regression(a), Target::Regression(b)) if a.len() == b.len() => {}
                (Target::Class(_), Target::Class(_)) => {}
                _ => {
                    return Err(Error::Shape(format!(
                        "example {i} target shape differs from example 0"
                    )))
                }
            }
        }
        Ok(Batch { examples })
    }

    pub fn examples(&self) -> &[Example] {
        &self.examples
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn input_dim(&self) -> usize {
        self.examples[0].input.len()
    }
}

/// Which pointwise loss a batch objective applies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LossKind {
    Euclidean,
    CrossEntropy,
}

impl LossKind {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "euclidean" => Ok(LossKind::Euclidean),
            "cross_entropy" => Ok(LossKind::CrossEntropy),
            other => Err(Error::Argument(format!("unknown loss '{other}'"))),
        }
    }
}

/// Gaussian weight penalty `Σ |W|² / (2 N λ²)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegularizerConfig {
    pub lambda_sq: f64,
    pub n: usize,
}

impl RegularizerConfig {
    pub fn new(lambda_sq: f64, n: usize) -> Result<Self> {
        if !(lambda_sq > 0.0) || !lambda_sq.is_finite() {
            return Err(Error::Argument(format!(
                "lambda_sq must be positive and finite, got {lambda_sq}"
            )));
        }
        if n == 0 {
            return Err(Error::Argument("regularizer needs n >= 1".into()));
        }
        Ok(RegularizerConfig { lambda_sq, n })
    }

    /// Coefficient of `|W|²` in the loss: `1 / (2 N λ²)`.
    pub fn coefficient(&self) -> f64 {
        1.0 / (2.0 * self.n as f64 * self.lambda_sq)
    }
}

/// Average loss and gradient of `net` over `batch`, optionally with the
/// weight penalty. The gradient of the penalty is `W / (N λ²)` per real
/// parameter; in complex mode the conjugate-direction derivative of
/// `W W̄ / (2 N λ²)` is `W / (2 N λ²)`.
pub fn batch_loss<T: TapeScalar>(
    net: &NetworkSpec<T>,
    batch: &Batch,
    kind: LossKind,
    reg: Option<&RegularizerConfig>,
) -> Result<(f64, NetGradient<T>)> {
    validate_batch(net, batch, kind)?;
    let n = batch.len() as f64;
    let mut total = 0.0;
    let mut grad = NetGradient::zeros_like(net);
    for ex in batch.examples() {
        let x: Vec<T> = ex.input.iter().map(|&v| T::from_re(v)).collect();
        let TapedForward {
            output_ids,
            mut tape,
            ..
        } = net.forward(&x)?;
        let loss_node = attach_loss(&mut tape, &output_ids, &ex.target, kind)?;
        tape.set_output(loss_node);
        total += tape.value(loss_node).re();
        let g = net.gradient_from_flat(tape.pullback()?)?;
        grad.add_scaled(&g, T::one())?;
    }
    total /= n;
    grad.scale(T::from_re(1.0 / n));

    if let Some(r) = reg {
        let coeff = r.coefficient();
        let grad_factor = if T::IS_COMPLEX { coeff } else { 2.0 * coeff };
        let mut penalty = 0.0;
        for (gl, nl) in grad.layers.iter_mut().zip(net.layers()) {
            for (g, &w) in gl
                .weights
                .iter_mut()
                .chain(gl.bias.iter_mut())
                .zip(nl.weights.iter().chain(nl.bias.iter()))
            {
                let m = w.modulus();
                penalty += m * m;
                *g = *g + w * T::from_re(grad_factor);
            }
        }
        total += coeff * penalty;
    }
    Ok((total, grad))
}

/// Loss value only, through the straight-line evaluator (no tape). Finite
/// difference probes use this so the two gradient routes stay independent.
pub fn batch_loss_value<T: TapeScalar>(
    net: &NetworkSpec<T>,
    batch: &Batch,
    kind: LossKind,
    reg: Option<&RegularizerConfig>,
) -> Result<f64> {
    validate_batch(net, batch, kind)?;
    let n = batch.len() as f64;
    let mut total = 0.0;
    for ex in batch.examples() {
        let x: Vec<T> = ex.input.iter().map(|&v| T::from_re(v)).collect();
        let out = net.evaluate(&x)?;
        total += match (&ex.target, kind) {
            (Target::Regression(y), LossKind::Euclidean) => {
                let mut s = 0.0;
                for (o, &t) in out.iter().zip(y) {
                    let d = *o - T::from_re(t);
                    let m = d.modulus();
                    s += m * m;
                }
                0.5 * s
            }
            (Target::Class(class), LossKind::CrossEntropy) => {
                let logits: Vec<f64> = out.iter().map(|v| v.re()).collect();
                let c = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let z: f64 = logits.iter().map(|&y| (y - c).exp()).sum();
                z.ln() - (logits[*class] - c)
            }
            _ => unreachable!("validated above"),
        };
    }
    total /= n;
    if let Some(r) = reg {
        let mut penalty = 0.0;
        for l in net.layers() {
            for w in l.weights.iter().chain(l.bias.iter()) {
                let m = w.modulus();
                penalty += m * m;
            }
        }
        total += r.coefficient() * penalty;
    }
    Ok(total)
}

fn validate_batch<T: TapeScalar>(
    net: &NetworkSpec<T>,
    batch: &Batch,
    kind: LossKind,
) -> Result<()> {
    if batch.input_dim() != net.input_dim() {
        return Err(Error::Shape(format!(
            "batch inputs have {} entries, network expects {}",
            batch.input_dim(),
            net.input_dim()
        )));
    }
    match (kind, &batch.examples()[0].target) {
        (LossKind::Euclidean, Target::Regression(y)) => {
            if y.len() != net.output_dim() {
                return Err(Error::Shape(format!(
                    "regression targets have {} entries, network produces {}",
                    y.len(),
                    net.output_dim()
                )));
            }
        }
        (LossKind::CrossEntropy, Target::Class(_)) => {
            if T::IS_COMPLEX {
                return Err(Error::Contract(
                    "cross entropy requires a real-mode network".into(),
                ));
            }
            if net.output_dim() < 2 {
                return Err(Error::Shape(
                    "cross entropy needs at least two output logits".into(),
                ));
            }
        }
        (LossKind::Euclidean, Target::Class(_)) => {
            return Err(Error::Contract(
                "euclidean loss over class targets".into(),
            ));
        }
        (LossKind::CrossEntropy, Target::Regression(_)) => {
            return Err(Error::Contract(
                "cross entropy over regression targets".into(),
            ));
        }
    }
    for (i, ex) in batch.examples().iter().enumerate() {
        if let Target::Class(c) = ex.target {
            if c >= net.output_dim() {
                return Err(Error::Shape(format!(
                    "example {i} has class {c}, network produces {} logits",
                    net.output_dim()
                )));
            }
        }
    }
    Ok(())
}

fn attach_loss<T: TapeScalar>(
    tape: &mut Tape<T>,
    output_ids: &[NodeId],
    target: &Target,
    kind: LossKind,
) -> Result<NodeId> {
    match (target, kind) {
        (Target::Regression(y), LossKind::Euclidean) => {
            euclidean_loss_on_tape(tape, output_ids, y)
        }
        (Target::Class(class), LossKind::CrossEntropy) => {
            let p = ProbVector::one_hot(output_ids.len(), *class)?;
            cross_entropy_on_tape_generic(tape, output_ids, &p)
        }
        _ => unreachable!("validated upstream"),
    }
}

// Cross entropy recorded on a generic tape. Complex callers are rejected
// upstream, so only real instantiations ever execute this.
fn cross_entropy_on_tape_generic<T: TapeScalar>(
    tape: &mut Tape<T>,
    logits: &[NodeId],
    p: &ProbVector,
) -> Result<NodeId> {
    let c = logits
        .iter()
        .map(|&id| tape.value(id).re())
        .fold(f64::NEG_INFINITY, f64::max);
    let c_node = tape.constant(T::from_re(c));
    let shifted: Vec<NodeId> = logits.iter().map(|&id| tape.sub(id, c_node)).collect();
    let exps: Vec<NodeId> = shifted.iter().map(|&id| tape.exp(id)).collect();
    let z = tape.sum(&exps);
    let lse = tape.ln(z);
    let mut weighted = Vec::with_capacity(shifted.len());
    for (&id, &pa) in shifted.iter().zip(p.entries()) {
        let w = tape.constant(T::from_re(-pa));
        weighted.push(tape.mul(w, id));
    }
    let neg_dot = tape.sum(&weighted);
    Ok(tape.add(neg_dot, lse))
}

// ---------------------------------------------------------------------------
// loss providers for trajectory drivers
// ---------------------------------------------------------------------------

/// A differentiable objective over a network's parameters.
pub trait LossFn<T: TapeScalar> {
    /// Loss and gradient at the network's current parameters.
    fn evaluate(&self, net: &NetworkSpec<T>) -> Result<(f64, NetGradient<T>)>;
    /// Loss value alone; implementations should prefer a tape-free route.
    fn value(&self, net: &NetworkSpec<T>) -> Result<f64>;
}

/// Batch objective: data, loss kind, optional weight penalty.
#[derive(Clone, Debug)]
pub struct BatchLoss {
    pub batch: Batch,
    pub kind: LossKind,
    pub reg: Option<RegularizerConfig>,
}

impl<T: TapeScalar> LossFn<T> for BatchLoss {
    fn evaluate(&self, net: &NetworkSpec<T>) -> Result<(f64, NetGradient<T>)> {
        batch_loss(net, &self.batch, self.kind, self.reg.as_ref())
    }

    fn value(&self, net: &NetworkSpec<T>) -> Result<f64> {
        batch_loss_value(net, &self.batch, self.kind, self.reg.as_ref())
    }
}

/// `L = Σ_i (c₂/2) w_i² + (c₄/8) w_i⁴` over all parameters; the reference
/// loss family whose flows have closed forms. Real mode only.
#[derive(Clone, Copy, Debug)]
pub struct PolyLoss {
    /// Coefficient of `w²/2`.
    pub quadratic: f64,
    /// Coefficient of `w⁴/8`.
    pub quartic: f64,
}

impl LossFn<f64> for PolyLoss {
    fn evaluate(&self, net: &NetworkSpec<f64>) -> Result<(f64, NetGradient<f64>)> {
        let mut tape: Tape<f64> = Tape::new();
        let params: Vec<NodeId> = net.params_flat().iter().map(|&w| tape.param(w)).collect();
        let c2 = tape.constant(0.5 * self.quadratic);
        let c4 = tape.constant(self.quartic / 8.0);
        let mut terms = Vec::with_capacity(2 * params.len());
        for &w in &params {
            let sq = tape.mul(w, w);
            terms.push(tape.mul(c2, sq));
            if self.quartic != 0.0 {
                let quart = tape.mul(sq, sq);
                terms.push(tape.mul(c4, quart));
            }
        }
        let l = tape.sum(&terms);
        tape.set_output(l);
        let value = tape.value(l);
        let grad = net.gradient_from_flat(tape.pullback()?)?;
        Ok((value, grad))
    }

    fn value(&self, net: &NetworkSpec<f64>) -> Result<f64> {
        let mut s = 0.0;
        for w in net.params_flat() {
            let sq = w * w;
            s += 0.5 * self.quadratic * sq + self.quartic / 8.0 * sq * sq;
        }
        Ok(s)
    }
}

/// `L = Σ_i w_i w̄_i`: the squared modulus of the parameter vector. In real
/// mode this is `Σ w²`, its two-dimensional twin.
#[derive(Clone, Copy, Debug, Default)]
pub struct ModulusSquaredLoss;

impl<T: TapeScalar> LossFn<T> for ModulusSquaredLoss {
    fn evaluate(&self, net: &NetworkSpec<T>) -> Result<(f64, NetGradient<T>)> {
        let mut tape: Tape<T> = Tape::new();
        let params: Vec<NodeId> = net.params_flat().iter().map(|&w| tape.param(w)).collect();
        let mut terms = Vec::with_capacity(params.len());
        for &w in &params {
            let wc = tape.conj(w);
            terms.push(tape.mul(w, wc));
        }
        let l = tape.sum(&terms);
        tape.set_output(l);
        let value = tape.value(l).re();
        let grad = net.gradient_from_flat(tape.pullback()?)?;
        Ok((value, grad))
    }

    fn value(&self, net: &NetworkSpec<T>) -> Result<f64> {
        Ok(net
            .params_flat()
            .iter()
            .map(|w| {
                let m = w.modulus();
                m * m
            })
            .sum())
    }
}

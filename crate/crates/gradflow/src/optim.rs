//! Finite-step descent methods.
//!
//! Four steppers share a common shape: compute a force from the loss
//! gradient, move the parameters, never touch a frozen layer.
//!
//! ```text
//! aristotle    δW = −g⁻¹∇L · η·δt                 (velocity ∝ force)
//! momentum     v += (δt/m)(F − λv);  W += v·δt     (Newtonian, semi-implicit)
//! damped       F̄ += βδt(F − F̄);  S += βδt(|F|² − S);
//!              v += (δt/m)(F̄/(√S + ε) − λv);  W += v·δt
//! cogradient   solve  H·δW = −∇L;  W += η·δt·δW    (Hessian as the metric)
//! ```
//!
//! with `F = −g⁻¹∇L` the index-raised downhill force. The damped stepper
//! keeps no bias correction on its rolling averages, so it is not the
//! published Adam; its γ = 1/(√S + ε) damping is per coordinate.
//!
//! [`run_trajectory`] iterates a stepper, recording per-step rows and
//! aborting with a divergence error if the loss or any parameter leaves
//! `±1e12` or stops being finite.

use crate::error::{Error, Result};
use crate::losses::LossFn;
use crate::metric::{LayerMetric, PathAccumulator};
use crate::network::{NetGradient, NetworkSpec};
use crate::objective::HESSIAN_FD_STEP;
use crate::scalar::TapeScalar;
use nalgebra::{DMatrix, DVector};

/// Magnitude beyond which a trajectory is declared divergent.
pub const DIVERGENCE_LIMIT: f64 = 1e12;

/// Dense-Hessian size bound for the co-gradient stepper.
pub const COGRADIENT_MAX_DIM: usize = 64;

/// Hyperparameters shared by the stepper family. Each stepper reads the
/// subset it needs; validation covers all of them so a state is usable with
/// any stepper.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OptimizerHyper {
    /// Learning rate (aristotle and cogradient).
    pub eta: f64,
    /// Time step.
    pub dt: f64,
    /// Inertial mass (momentum and damped).
    pub mass: f64,
    /// Friction coefficient λ (momentum and damped).
    pub friction: f64,
    /// Rolling-average rate β (damped).
    pub beta: f64,
    /// Damping floor ε added to √S (damped).
    pub epsilon: f64,
}

impl Default for OptimizerHyper {
    fn default() -> Self {
        OptimizerHyper {
            eta: 0.1,
            dt: 1e-3,
            mass: 1.0,
            friction: 0.1,
            beta: 2.0,
            epsilon: 1e-8,
        }
    }
}

impl OptimizerHyper {
    fn require_positive(v: f64, name: &str) -> Result<()> {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::Config(format!(
                "{name} must be positive and finite, got {v}"
            )));
        }
        Ok(())
    }

    fn validate_inertial(&self) -> Result<()> {
        Self::require_positive(self.mass, "mass")?;
        if !(self.friction >= 0.0) || !self.friction.is_finite() {
            return Err(Error::Config(format!(
                "friction must be non-negative and finite, got {}",
                self.friction
            )));
        }
        if self.friction * self.dt / self.mass >= 2.0 {
            return Err(Error::Config(format!(
                "friction*dt/mass = {} makes the velocity update unstable; need < 2",
                self.friction * self.dt / self.mass
            )));
        }
        Ok(())
    }

    /// Checks the fields the chosen stepper will read.
    pub fn validate_for(&self, kind: OptimizerKind) -> Result<()> {
        Self::require_positive(self.eta, "eta")?;
        Self::require_positive(self.dt, "dt")?;
        match kind {
            OptimizerKind::Aristotle | OptimizerKind::Cogradient => Ok(()),
            OptimizerKind::Momentum => self.validate_inertial(),
            OptimizerKind::Damped => {
                self.validate_inertial()?;
                Self::require_positive(self.beta, "beta")?;
                Self::require_positive(self.epsilon, "epsilon")?;
                if self.beta * self.dt >= 1.0 {
                    return Err(Error::Config(format!(
                        "beta*dt = {} would make the rolling average overshoot; need beta*dt < 1",
                        self.beta * self.dt
                    )));
                }
                Ok(())
            }
        }
    }
}

/// Stepper selector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OptimizerKind {
    Aristotle,
    Momentum,
    Damped,
    Cogradient,
}

impl OptimizerKind {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "aristotle" => Ok(OptimizerKind::Aristotle),
            "momentum" => Ok(OptimizerKind::Momentum),
            "damped" => Ok(OptimizerKind::Damped),
            "cogradient" => Ok(OptimizerKind::Cogradient),
            other => Err(Error::Argument(format!("unknown optimizer '{other}'"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            OptimizerKind::Aristotle => "aristotle",
            OptimizerKind::Momentum => "momentum",
            OptimizerKind::Damped => "damped",
            OptimizerKind::Cogradient => "cogradient",
        }
    }
}

/// Mutable per-trajectory storage, flat and parallel to
/// [`NetworkSpec::params_flat`].
#[derive(Clone, Debug)]
pub struct OptimizerState<T: TapeScalar> {
    pub velocity: Vec<T>,
    pub rolling_force: Vec<T>,
    pub rolling_sq: Vec<f64>,
    pub steps_taken: usize,
}

impl<T: TapeScalar> OptimizerState<T> {
    pub fn new(net: &NetworkSpec<T>) -> Self {
        let k = net.param_count();
        OptimizerState {
            velocity: vec![T::zero(); k],
            rolling_force: vec![T::zero(); k],
            rolling_sq: vec![0.0; k],
            steps_taken: 0,
        }
    }

    fn check_shape(&self, net: &NetworkSpec<T>) -> Result<()> {
        if self.velocity.len() != net.param_count() {
            return Err(Error::Shape(format!(
                "optimizer state holds {} coordinates, network has {}",
                self.velocity.len(),
                net.param_count()
            )));
        }
        Ok(())
    }

    /// Euclidean norm of the velocity.
    pub fn velocity_norm(&self) -> f64 {
        self.velocity
            .iter()
            .map(|v| {
                let m = v.modulus();
                m * m
            })
            .sum::<f64>()
            .sqrt()
    }
}

fn check_finite_grad<T: TapeScalar>(grad: &NetGradient<T>) -> Result<()> {
    if !grad.is_finite() {
        return Err(Error::Divergence {
            step: 0,
            detail: "non-finite gradient".into(),
        });
    }
    Ok(())
}

/// Flat index span of each layer's parameters.
fn layer_spans<T: TapeScalar>(net: &NetworkSpec<T>) -> Vec<(usize, usize)> {
    let mut spans = Vec::with_capacity(net.layer_count());
    let mut offset = 0;
    for layer in net.layers() {
        let n = layer.param_count();
        spans.push((offset, offset + n));
        offset += n;
    }
    spans
}

/// One steepest-descent step: `W += −raise(∇L) · η·δt`. Frozen layers are
/// skipped entirely, leaving their bits untouched.
pub fn step_aristotle<T: TapeScalar>(
    net: &mut NetworkSpec<T>,
    metric: &LayerMetric,
    grad: &NetGradient<T>,
    hyper: &OptimizerHyper,
) -> Result<()> {
    hyper.validate_for(OptimizerKind::Aristotle)?;
    check_finite_grad(grad)?;
    let raised = metric.raise_index(grad)?.to_flat();
    let mut params = net.params_flat();
    let scale = T::from_re(-hyper.eta * hyper.dt);
    for (span, block) in layer_spans(net).iter().zip(metric.blocks()) {
        if block.is_frozen() {
            continue;
        }
        for i in span.0..span.1 {
            params[i] = params[i] + scale * raised[i];
        }
    }
    net.set_params_flat(&params)
}

/// One Newtonian step under force `F = −raise(∇L)` with friction, by
/// semi-implicit Euler: the velocity updates first and the fresh velocity
/// moves the position.
pub fn step_momentum<T: TapeScalar>(
    net: &mut NetworkSpec<T>,
    metric: &LayerMetric,
    grad: &NetGradient<T>,
    hyper: &OptimizerHyper,
    state: &mut OptimizerState<T>,
) -> Result<()> {
    hyper.validate_for(OptimizerKind::Momentum)?;
    check_finite_grad(grad)?;
    state.check_shape(net)?;
    let raised = metric.raise_index(grad)?.to_flat();
    let mut params = net.params_flat();
    let dt = T::from_re(hyper.dt);
    let dt_over_m = T::from_re(hyper.dt / hyper.mass);
    let friction = T::from_re(hyper.friction);
    for (span, block) in layer_spans(net).iter().zip(metric.blocks()) {
        if block.is_frozen() {
            continue;
        }
        for i in span.0..span.1 {
            let force = -raised[i];
            state.velocity[i] =
                state.velocity[i] + dt_over_m * (force - friction * state.velocity[i]);
            params[i] = params[i] + state.velocity[i] * dt;
        }
    }
    state.steps_taken += 1;
    net.set_params_flat(&params)
}

/// One damped step: rolling averages of the force and its squared modulus
/// feed a per-coordinate damping γ = 1/(√S + ε) before the Newtonian
/// update.
pub fn step_damped<T: TapeScalar>(
    net: &mut NetworkSpec<T>,
    metric: &LayerMetric,
    grad: &NetGradient<T>,
    hyper: &OptimizerHyper,
    state: &mut OptimizerState<T>,
) -> Result<()> {
    hyper.validate_for(OptimizerKind::Damped)?;
    check_finite_grad(grad)?;
    state.check_shape(net)?;
    let raised = metric.raise_index(grad)?.to_flat();
    let mut params = net.params_flat();
    let beta_dt = hyper.beta * hyper.dt;
    let beta_dt_t = T::from_re(beta_dt);
    let dt = T::from_re(hyper.dt);
    let dt_over_m = T::from_re(hyper.dt / hyper.mass);
    let friction = T::from_re(hyper.friction);
    for (span, block) in layer_spans(net).iter().zip(metric.blocks()) {
        if block.is_frozen() {
            continue;
        }
        for i in span.0..span.1 {
            let force = -raised[i];
            state.rolling_force[i] =
                state.rolling_force[i] + beta_dt_t * (force - state.rolling_force[i]);
            let fm = force.modulus();
            state.rolling_sq[i] += beta_dt * (fm * fm - state.rolling_sq[i]);
            let gamma = T::from_re(1.0 / (state.rolling_sq[i].sqrt() + hyper.epsilon));
            state.velocity[i] = state.velocity[i]
                + dt_over_m * (gamma * state.rolling_force[i] - friction * state.velocity[i]);
            params[i] = params[i] + state.velocity[i] * dt;
        }
    }
    state.steps_taken += 1;
    net.set_params_flat(&params)
}

/// Result flags of a co-gradient step.
#[derive(Clone, Copy, Debug, Default)]
pub struct CogradientOutcome {
    /// The Hessian had a negative eigenvalue: the step targets a critical
    /// point that is not a minimum.
    pub indefinite: bool,
}

/// One Newton step in the movable coordinates: a dense Hessian from central
/// finite differences of the gradient, solved against `−∇L` through its
/// eigendecomposition, scaled by `η·δt`. Real mode only; frozen layers are
/// excluded from the system rather than zeroed, and scaled stiffness is
/// ignored because the Hessian supplies the geometry here.
pub fn step_cogradient<T: TapeScalar, L: LossFn<T>>(
    net: &mut NetworkSpec<T>,
    metric: &LayerMetric,
    loss: &L,
    hyper: &OptimizerHyper,
) -> Result<CogradientOutcome> {
    hyper.validate_for(OptimizerKind::Cogradient)?;
    if T::IS_COMPLEX {
        return Err(Error::Contract(
            "co-gradient descent is defined for real-mode networks only".into(),
        ));
    }
    if metric.layer_count() != net.layer_count() {
        return Err(Error::Shape(format!(
            "metric has {} blocks, network has {} layers",
            metric.layer_count(),
            net.layer_count()
        )));
    }
    let spans = layer_spans(net);
    let mut movable = Vec::new();
    for (span, block) in spans.iter().zip(metric.blocks()) {
        if !block.is_frozen() {
            movable.extend(span.0..span.1);
        }
    }
    if movable.is_empty() {
        return Ok(CogradientOutcome::default());
    }
    let k = movable.len();
    if k > COGRADIENT_MAX_DIM {
        return Err(Error::Contract(format!(
            "co-gradient descent needs a dense {k}x{k} Hessian; bound is {COGRADIENT_MAX_DIM}"
        )));
    }

    let base = net.params_flat();
    let (_, grad) = loss.evaluate(net)?;
    check_finite_grad(&grad)?;
    let grad_flat = grad.to_flat();
    let g = DVector::from_iterator(k, movable.iter().map(|&i| grad_flat[i].re()));

    let mut probe_net = net.clone();
    let mut probe = base.clone();
    let mut raw = DMatrix::zeros(k, k);
    for (row, &i) in movable.iter().enumerate() {
        let h = HESSIAN_FD_STEP * (1.0 + base[i].modulus());
        probe[i] = base[i] + T::from_re(h);
        probe_net.set_params_flat(&probe)?;
        let (_, gp) = loss.evaluate(&probe_net)?;
        let gp = gp.to_flat();
        probe[i] = base[i] - T::from_re(h);
        probe_net.set_params_flat(&probe)?;
        let (_, gm) = loss.evaluate(&probe_net)?;
        let gm = gm.to_flat();
        probe[i] = base[i];
        for (col, &j) in movable.iter().enumerate() {
            raw[(row, col)] = (gp[j].re() - gm[j].re()) / (2.0 * h);
        }
    }
    let mut hess = DMatrix::zeros(k, k);
    for r in 0..k {
        for c in 0..k {
            hess[(r, c)] = 0.5 * (raw[(r, c)] + raw[(c, r)]);
        }
    }

    let eig = hess.symmetric_eigen();
    let max_abs = eig.eigenvalues.iter().fold(0.0f64, |m, &l| m.max(l.abs()));
    let min_abs = eig
        .eigenvalues
        .iter()
        .fold(f64::INFINITY, |m, &l| m.min(l.abs()));
    if min_abs <= 1e-12 * max_abs {
        return Err(Error::SingularHessian(format!(
            "eigenvalue magnitudes span [{min_abs:.3e}, {max_abs:.3e}]"
        )));
    }
    let indefinite = eig.eigenvalues.iter().any(|&l| l < 0.0);

    let in_basis = eig.eigenvectors.transpose() * &g;
    let scaled = DVector::from_iterator(
        k,
        in_basis
            .iter()
            .zip(eig.eigenvalues.iter())
            .map(|(v, &l)| v / l),
    );
    let delta = -(&eig.eigenvectors * scaled);

    let mut params = base;
    let step_scale = hyper.eta * hyper.dt;
    for (row, &i) in movable.iter().enumerate() {
        params[i] = params[i] + T::from_re(step_scale * delta[row]);
    }
    net.set_params_flat(&params)?;
    Ok(CogradientOutcome { indefinite })
}

/// One sampled point of a trajectory. Columns mirror the CSV the trainer
/// writes: time, loss, parameter norm, covariant gradient norm, accumulated
/// metric path length.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrajRow {
    pub t: f64,
    pub loss: f64,
    pub param_norm: f64,
    pub grad_norm: f64,
    pub path_length: f64,
}

/// Full sampled trajectory: `steps + 1` rows, the first at `t = 0` before
/// any update.
#[derive(Clone, Debug)]
pub struct TrajectoryRecord {
    pub rows: Vec<TrajRow>,
    /// Co-gradient steps whose Hessian had a negative eigenvalue.
    pub indefinite_steps: usize,
}

impl TrajectoryRecord {
    pub fn final_row(&self) -> &TrajRow {
        self.rows.last().expect("a record always has rows")
    }
}

fn diverged<T: TapeScalar>(loss: f64, net: &NetworkSpec<T>) -> Option<String> {
    if !loss.is_finite() || loss.abs() > DIVERGENCE_LIMIT {
        return Some(format!("loss reached {loss}"));
    }
    for w in net.params_flat() {
        if !w.is_finite() || w.modulus() > DIVERGENCE_LIMIT {
            return Some("parameter magnitude exceeded 1e12".into());
        }
    }
    None
}

fn at_step(e: Error, step: usize) -> Error {
    match e {
        Error::Divergence { detail, .. } => Error::Divergence { step, detail },
        other => other,
    }
}

/// Iterates a stepper for `steps` updates, recording one row before each
/// update and one final row, and failing with the step index if the flow
/// diverges.
pub fn run_trajectory<T: TapeScalar, L: LossFn<T>>(
    net: &mut NetworkSpec<T>,
    loss: &L,
    metric: &LayerMetric,
    kind: OptimizerKind,
    hyper: &OptimizerHyper,
    steps: usize,
) -> Result<TrajectoryRecord> {
    if steps == 0 {
        return Err(Error::Argument("a trajectory needs steps >= 1".into()));
    }
    hyper.validate_for(kind)?;
    if kind == OptimizerKind::Cogradient && T::IS_COMPLEX {
        return Err(Error::Contract(
            "co-gradient descent is defined for real-mode networks only".into(),
        ));
    }
    let mut state = OptimizerState::new(net);
    let mut path = PathAccumulator::new(metric.clone(), net)?;
    let mut rows = Vec::with_capacity(steps + 1);
    let mut indefinite_steps = 0;

    for step in 0..=steps {
        let (value, grad) = loss.evaluate(net).map_err(|e| at_step(e, step))?;
        if let Some(detail) = diverged(value, net) {
            return Err(Error::Divergence { step, detail });
        }
        if !grad.is_finite() {
            return Err(Error::Divergence {
                step,
                detail: "non-finite gradient".into(),
            });
        }
        rows.push(TrajRow {
            t: step as f64 * hyper.dt,
            loss: value,
            param_norm: net.param_norm(),
            grad_norm: grad.norm(),
            path_length: path.length(),
        });
        if step == steps {
            break;
        }
        match kind {
            OptimizerKind::Aristotle => {
                step_aristotle(net, metric, &grad, hyper).map_err(|e| at_step(e, step))?;
            }
            OptimizerKind::Momentum => {
                step_momentum(net, metric, &grad, hyper, &mut state)
                    .map_err(|e| at_step(e, step))?;
            }
            OptimizerKind::Damped => {
                step_damped(net, metric, &grad, hyper, &mut state)
                    .map_err(|e| at_step(e, step))?;
            }
            OptimizerKind::Cogradient => {
                let outcome =
                    step_cogradient(net, metric, loss, hyper).map_err(|e| at_step(e, step))?;
                if outcome.indefinite {
                    indefinite_steps += 1;
                }
            }
        }
        path.advance(net).map_err(|e| at_step(e, step))?;
    }
    Ok(TrajectoryRecord {
        rows,
        indefinite_steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::losses::PolyLoss;
    use crate::metric::LayerStiffness;
    use crate::network::{Activation, Layer, LayerGradient};
    use crate::objective::{carrier_network, MatrixQuadratic, ObjectiveLoss};
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn one_param(w: f64) -> NetworkSpec<f64> {
        carrier_network(&[w]).unwrap()
    }

    fn unit_metric(layers: usize) -> LayerMetric {
        LayerMetric::euclidean(layers).unwrap()
    }

    fn grad_of(net: &NetworkSpec<f64>, loss: &PolyLoss) -> NetGradient<f64> {
        LossFn::<f64>::evaluate(loss, net).unwrap().1
    }

    #[test]
    fn aristotle_tenth_step_on_half_square() {
        let mut net = one_param(1.0);
        let loss = PolyLoss {
            quadratic: 1.0,
            quartic: 0.0,
        };
        let hyper = OptimizerHyper {
            eta: 1.0,
            dt: 0.1,
            ..OptimizerHyper::default()
        };
        let g = grad_of(&net, &loss);
        step_aristotle(&mut net, &unit_metric(1), &g, &hyper).unwrap();
        assert!((net.params_flat()[0] - 0.9).abs() < 1e-15);
    }

    #[test]
    fn aristotle_tracks_exponential_flow() {
        let mut net = one_param(1.0);
        let loss = PolyLoss {
            quadratic: 1.0,
            quartic: 0.0,
        };
        let hyper = OptimizerHyper {
            eta: 1.0,
            dt: 1e-3,
            ..OptimizerHyper::default()
        };
        let metric = unit_metric(1);
        for _ in 0..1000 {
            let g = grad_of(&net, &loss);
            step_aristotle(&mut net, &metric, &g, &hyper).unwrap();
        }
        let exact = (-1.0f64).exp();
        let got = net.params_flat()[0];
        assert!((got - exact).abs() / exact < 1e-3, "{got} vs {exact}");
    }

    #[test]
    fn halving_the_step_halves_the_deviation() {
        let exact = (-1.0f64).exp();
        let deviation = |dt: f64| {
            let mut net = one_param(1.0);
            let loss = PolyLoss {
                quadratic: 1.0,
                quartic: 0.0,
            };
            let hyper = OptimizerHyper {
                eta: 1.0,
                dt,
                ..OptimizerHyper::default()
            };
            let metric = unit_metric(1);
            let steps = (1.0 / dt).round() as usize;
            for _ in 0..steps {
                let g = grad_of(&net, &loss);
                step_aristotle(&mut net, &metric, &g, &hyper).unwrap();
            }
            (net.params_flat()[0] - exact).abs()
        };
        let ratio = deviation(1e-3) / deviation(2e-3);
        assert!((0.4..=0.6).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn stiff_metric_slows_the_flow() {
        let loss = PolyLoss {
            quadratic: 1.0,
            quartic: 0.0,
        };
        let hyper = OptimizerHyper {
            eta: 1.0,
            dt: 0.1,
            ..OptimizerHyper::default()
        };
        let mut soft = one_param(1.0);
        let g = grad_of(&soft, &loss);
        step_aristotle(&mut soft, &unit_metric(1), &g, &hyper).unwrap();
        let mut stiff = one_param(1.0);
        let metric =
            LayerMetric::new(vec![LayerStiffness::scaled(100.0).unwrap()]).unwrap();
        let g = grad_of(&stiff, &loss);
        step_aristotle(&mut stiff, &metric, &g, &hyper).unwrap();
        let soft_move = 1.0 - soft.params_flat()[0];
        let stiff_move = 1.0 - stiff.params_flat()[0];
        assert!((soft_move / stiff_move - 100.0).abs() < 1e-9);
    }

    #[test]
    fn small_steps_never_increase_convex_loss() {
        let mut rng = ChaCha8Rng::seed_from_u64(71);
        for _ in 0..50 {
            let k = rng.gen_range(1..=6);
            let w: Vec<f64> = (0..k).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let mut net = carrier_network(&w).unwrap();
            let loss = PolyLoss {
                quadratic: rng.gen_range(0.1..4.0),
                quartic: rng.gen_range(0.0..1.0),
            };
            let hyper = OptimizerHyper {
                eta: rng.gen_range(0.01..0.1),
                dt: 1e-2,
                ..OptimizerHyper::default()
            };
            let metric = unit_metric(1);
            let (before, g) = LossFn::<f64>::evaluate(&loss, &net).unwrap();
            step_aristotle(&mut net, &metric, &g, &hyper).unwrap();
            let after = LossFn::<f64>::value(&loss, &net).unwrap();
            assert!(after <= before + 1e-15, "loss rose {before} -> {after}");
        }
    }

    #[test]
    fn momentum_free_motion_is_uniform() {
        let mut net = one_param(0.0);
        let metric = unit_metric(1);
        let hyper = OptimizerHyper {
            dt: 1e-2,
            mass: 1.0,
            friction: 0.0,
            ..OptimizerHyper::default()
        };
        let mut state = OptimizerState::new(&net);
        state.velocity[0] = 1.0;
        let zero = NetGradient {
            layers: vec![LayerGradient {
                weights: vec![0.0],
                bias: vec![],
            }],
        };
        for _ in 0..100 {
            step_momentum(&mut net, &metric, &zero, &hyper, &mut state).unwrap();
        }
        assert_eq!(state.velocity[0], 1.0);
        assert!((net.params_flat()[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn momentum_velocity_decays_like_friction_over_mass() {
        let mut net = one_param(0.0);
        let metric = unit_metric(1);
        let hyper = OptimizerHyper {
            dt: 1e-3,
            mass: 1.0,
            friction: 0.5,
            ..OptimizerHyper::default()
        };
        let mut state = OptimizerState::new(&net);
        state.velocity[0] = 1.0;
        let zero = NetGradient {
            layers: vec![LayerGradient {
                weights: vec![0.0],
                bias: vec![],
            }],
        };
        let mut prev = 1.0f64;
        for _ in 0..2000 {
            step_momentum(&mut net, &metric, &zero, &hyper, &mut state).unwrap();
            let now = state.velocity_norm();
            assert!(now <= prev, "velocity norm rose {prev} -> {now}");
            prev = now;
        }
        let exact = (-0.5f64 * 2.0).exp();
        assert!(
            (state.velocity_norm() - exact).abs() / exact < 0.01,
            "{} vs {exact}",
            state.velocity_norm()
        );
    }

    #[test]
    fn overdamped_momentum_approaches_aristotle() {
        let loss = PolyLoss {
            quadratic: 1.0,
            quartic: 0.0,
        };
        let metric = unit_metric(1);
        let dt = 1e-5;
        let friction = 2.0;
        let mut heavy = one_param(1.0);
        let hyper_m = OptimizerHyper {
            dt,
            mass: 1e-4,
            friction,
            ..OptimizerHyper::default()
        };
        let mut state = OptimizerState::new(&heavy);
        let mut plain = one_param(1.0);
        let hyper_a = OptimizerHyper {
            eta: 1.0 / friction,
            dt,
            ..OptimizerHyper::default()
        };
        for _ in 0..50_000 {
            let g = grad_of(&heavy, &loss);
            step_momentum(&mut heavy, &metric, &g, &hyper_m, &mut state).unwrap();
            let g = grad_of(&plain, &loss);
            step_aristotle(&mut plain, &metric, &g, &hyper_a).unwrap();
        }
        let a = heavy.params_flat()[0];
        let b = plain.params_flat()[0];
        assert!((a - b).abs() / b.abs() < 0.01, "momentum {a} vs aristotle {b}");
    }

    #[test]
    fn damped_rolling_force_tracks_first_order_response() {
        // Constant unit force switched on at t=0: the rolling average obeys
        // dF̄/dt = β(F − F̄), so F̄(t) = 1 − e^{−βt}.
        let mut net = one_param(0.0);
        let metric = unit_metric(1);
        let hyper = OptimizerHyper {
            dt: 1e-3,
            mass: 1.0,
            friction: 1.0,
            beta: 2.0,
            ..OptimizerHyper::default()
        };
        let mut state = OptimizerState::new(&net);
        let minus_one = NetGradient {
            layers: vec![LayerGradient {
                weights: vec![-1.0],
                bias: vec![],
            }],
        };
        for _ in 0..1000 {
            step_damped(&mut net, &metric, &minus_one, &hyper, &mut state).unwrap();
        }
        let expect = 1.0 - (-2.0f64).exp();
        let got = state.rolling_force[0];
        assert!((got - expect).abs() / expect < 0.01, "{got} vs {expect}");
    }

    #[test]
    fn damped_suppresses_alternating_force() {
        let metric = unit_metric(1);
        let hyper = OptimizerHyper {
            dt: 1e-3,
            mass: 1.0,
            friction: 1.0,
            beta: 2.0,
            ..OptimizerHyper::default()
        };
        let mut net = one_param(0.0);
        let mut state = OptimizerState::new(&net);
        let force = |sign: f64| NetGradient {
            layers: vec![LayerGradient {
                weights: vec![-sign],
                bias: vec![],
            }],
        };
        for step in 0..5000 {
            let g = force(if step % 2 == 0 { 1.0 } else { -1.0 });
            step_damped(&mut net, &metric, &g, &hyper, &mut state).unwrap();
        }
        // The rolling square saturates near 1, so γ·F ≈ 1 while γ·F̄ stays
        // at the ripple amplitude β·δt.
        let damped_mean = state.rolling_force[0].abs() / (state.rolling_sq[0].sqrt() + 1e-8);
        assert!(damped_mean < 0.01, "residual damped force {damped_mean}");
    }

    #[test]
    fn damped_zero_force_is_stationary() {
        let mut net = one_param(0.7);
        let metric = unit_metric(1);
        let hyper = OptimizerHyper::default();
        let mut state = OptimizerState::new(&net);
        let zero = NetGradient {
            layers: vec![LayerGradient {
                weights: vec![0.0],
                bias: vec![],
            }],
        };
        for _ in 0..100 {
            step_damped(&mut net, &metric, &zero, &hyper, &mut state).unwrap();
        }
        assert_eq!(net.params_flat()[0], 0.7);
        assert_eq!(state.velocity[0], 0.0);
    }

    #[test]
    fn hyper_validation_rejects_bad_settings() {
        let ok = OptimizerHyper::default();
        for kind in [
            OptimizerKind::Aristotle,
            OptimizerKind::Momentum,
            OptimizerKind::Damped,
            OptimizerKind::Cogradient,
        ] {
            assert!(ok.validate_for(kind).is_ok());
        }
        let cases = [
            (OptimizerHyper { mass: 0.0, ..ok }, OptimizerKind::Momentum),
            (OptimizerHyper { mass: -1.0, ..ok }, OptimizerKind::Damped),
            (
                OptimizerHyper {
                    beta: 1000.0,
                    dt: 1e-2,
                    ..ok
                },
                OptimizerKind::Damped,
            ),
            (
                OptimizerHyper {
                    friction: 5000.0,
                    dt: 1e-3,
                    mass: 1.0,
                    ..ok
                },
                OptimizerKind::Momentum,
            ),
            (
                OptimizerHyper {
                    friction: -0.1,
                    ..ok
                },
                OptimizerKind::Momentum,
            ),
            (OptimizerHyper { dt: 0.0, ..ok }, OptimizerKind::Aristotle),
            (
                OptimizerHyper {
                    eta: f64::NAN,
                    ..ok
                },
                OptimizerKind::Cogradient,
            ),
        ];
        for (bad, kind) in cases {
            assert!(
                matches!(bad.validate_for(kind), Err(Error::Config(_))),
                "accepted {bad:?} for {kind:?}"
            );
        }
        // A large dt is fine for steppers that keep no rolling average.
        let big_step = OptimizerHyper {
            dt: 1.0,
            ..OptimizerHyper::default()
        };
        assert!(big_step.validate_for(OptimizerKind::Cogradient).is_ok());
        assert!(big_step.validate_for(OptimizerKind::Damped).is_err());
    }

    #[test]
    fn cogradient_solves_diagonal_quadratic_in_one_step() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 5.0]);
        let obj = MatrixQuadratic::new(a).unwrap();
        let loss = ObjectiveLoss { objective: &obj };
        let mut net = carrier_network(&[1.0, 1.0]).unwrap();
        let hyper = OptimizerHyper {
            eta: 1.0,
            dt: 1.0,
            ..OptimizerHyper::default()
        };
        let outcome = step_cogradient(&mut net, &unit_metric(1), &loss, &hyper).unwrap();
        assert!(!outcome.indefinite);
        for w in net.params_flat() {
            assert!(w.abs() <= 1e-10, "residual {w}");
        }
    }

    #[test]
    fn cogradient_at_minimum_stays_put() {
        let a = DMatrix::from_row_slice(1, 1, &[3.0]);
        let obj = MatrixQuadratic::new(a).unwrap();
        let loss = ObjectiveLoss { objective: &obj };
        let mut net = carrier_network(&[0.0]).unwrap();
        let hyper = OptimizerHyper {
            eta: 1.0,
            dt: 1.0,
            ..OptimizerHyper::default()
        };
        step_cogradient(&mut net, &unit_metric(1), &loss, &hyper).unwrap();
        assert!(net.params_flat()[0].abs() <= 1e-12);
    }

    #[test]
    fn cogradient_flags_indefinite_and_reaches_saddle() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        let obj = MatrixQuadratic::new(a).unwrap();
        let loss = ObjectiveLoss { objective: &obj };
        let mut net = carrier_network(&[1.0, 1.0]).unwrap();
        let hyper = OptimizerHyper {
            eta: 1.0,
            dt: 1.0,
            ..OptimizerHyper::default()
        };
        let outcome = step_cogradient(&mut net, &unit_metric(1), &loss, &hyper).unwrap();
        assert!(outcome.indefinite);
        for w in net.params_flat() {
            assert!(w.abs() <= 1e-10, "residual {w}");
        }
    }

    #[test]
    fn cogradient_refuses_singular_hessian() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let obj = MatrixQuadratic::new(a).unwrap();
        let loss = ObjectiveLoss { objective: &obj };
        let mut net = carrier_network(&[1.0, 1.0]).unwrap();
        let hyper = OptimizerHyper {
            eta: 1.0,
            dt: 1.0,
            ..OptimizerHyper::default()
        };
        assert!(matches!(
            step_cogradient(&mut net, &unit_metric(1), &loss, &hyper),
            Err(Error::SingularHessian(_))
        ));
    }

    #[test]
    fn cogradient_refuses_complex_mode() {
        let l0: Layer<Complex64> = Layer::from_parts(
            1,
            1,
            vec![Complex64::new(1.0, 0.0)],
            vec![],
            Activation::Identity,
        )
        .unwrap();
        let mut net = NetworkSpec::new(vec![l0]).unwrap();
        let loss = crate::losses::ModulusSquaredLoss;
        let hyper = OptimizerHyper::default();
        assert!(matches!(
            step_cogradient(&mut net, &unit_metric(1), &loss, &hyper),
            Err(Error::Contract(_))
        ));
    }

    fn two_layer_with_frozen_first() -> (NetworkSpec<f64>, LayerMetric, Vec<f64>) {
        let l0 = Layer::from_parts(
            2,
            2,
            vec![0.37, -0.81, 0.44, 0.92],
            vec![0.13, -0.29],
            Activation::Tanh,
        )
        .unwrap();
        let l1 =
            Layer::from_parts(1, 2, vec![0.55, -0.66], vec![0.07], Activation::Identity).unwrap();
        let net = NetworkSpec::new(vec![l0, l1]).unwrap();
        let metric = LayerMetric::new(vec![
            LayerStiffness::Frozen,
            LayerStiffness::Scaled(1.0),
        ])
        .unwrap();
        let frozen_bits = net.layers()[0]
            .weights
            .iter()
            .chain(net.layers()[0].bias.iter())
            .copied()
            .collect();
        (net, metric, frozen_bits)
    }

    fn first_layer_bits(net: &NetworkSpec<f64>) -> Vec<f64> {
        net.layers()[0]
            .weights
            .iter()
            .chain(net.layers()[0].bias.iter())
            .copied()
            .collect()
    }

    fn bits_equal(a: &[f64], b: &[f64]) -> bool {
        a.len() == b.len()
            && a.iter()
                .zip(b)
                .all(|(x, y)| x.to_bits() == y.to_bits())
    }

    #[test]
    fn every_stepper_preserves_frozen_layers_bitwise() {
        let loss = PolyLoss {
            quadratic: 1.0,
            quartic: 0.5,
        };
        let hyper = OptimizerHyper {
            eta: 0.05,
            dt: 1e-2,
            ..OptimizerHyper::default()
        };

        let (mut net, metric, frozen) = two_layer_with_frozen_first();
        for _ in 0..100 {
            let g = grad_of(&net, &loss);
            step_aristotle(&mut net, &metric, &g, &hyper).unwrap();
        }
        assert!(bits_equal(&first_layer_bits(&net), &frozen));

        let (mut net, metric, frozen) = two_layer_with_frozen_first();
        let mut state = OptimizerState::new(&net);
        for _ in 0..100 {
            let g = grad_of(&net, &loss);
            step_momentum(&mut net, &metric, &g, &hyper, &mut state).unwrap();
        }
        assert!(bits_equal(&first_layer_bits(&net), &frozen));

        let (mut net, metric, frozen) = two_layer_with_frozen_first();
        let mut state = OptimizerState::new(&net);
        for _ in 0..100 {
            let g = grad_of(&net, &loss);
            step_damped(&mut net, &metric, &g, &hyper, &mut state).unwrap();
        }
        assert!(bits_equal(&first_layer_bits(&net), &frozen));

        let (mut net, metric, frozen) = two_layer_with_frozen_first();
        for _ in 0..20 {
            step_cogradient(&mut net, &metric, &loss, &hyper).unwrap();
        }
        assert!(bits_equal(&first_layer_bits(&net), &frozen));
    }

    #[test]
    fn cogradient_with_frozen_block_still_minimizes_the_rest() {
        let (mut net, metric, _) = two_layer_with_frozen_first();
        let loss = PolyLoss {
            quadratic: 2.0,
            quartic: 0.0,
        };
        let hyper = OptimizerHyper {
            eta: 1.0,
            dt: 1.0,
            ..OptimizerHyper::default()
        };
        step_cogradient(&mut net, &metric, &loss, &hyper).unwrap();
        for w in net.layers()[1]
            .weights
            .iter()
            .chain(net.layers()[1].bias.iter())
        {
            assert!(w.abs() <= 1e-10, "movable residual {w}");
        }
    }

    #[test]
    fn trajectory_has_steps_plus_one_rows_in_time_order() {
        let mut net = one_param(1.0);
        let loss = PolyLoss {
            quadratic: 1.0,
            quartic: 0.0,
        };
        let hyper = OptimizerHyper {
            eta: 1.0,
            dt: 1e-2,
            ..OptimizerHyper::default()
        };
        let rec = run_trajectory(
            &mut net,
            &loss,
            &unit_metric(1),
            OptimizerKind::Aristotle,
            &hyper,
            50,
        )
        .unwrap();
        assert_eq!(rec.rows.len(), 51);
        assert_eq!(rec.rows[0].t, 0.0);
        assert_eq!(rec.rows[0].loss, 0.5);
        for pair in rec.rows.windows(2) {
            assert!(pair[1].t > pair[0].t);
            assert!((pair[1].t - pair[0].t - 1e-2).abs() < 1e-12);
            assert!(pair[1].path_length >= pair[0].path_length);
        }
        assert!(rec.final_row().loss < rec.rows[0].loss);
    }

    #[test]
    fn constant_loss_yields_flat_columns() {
        let obj = crate::objective::ConstantObjective { value: 2.0, dim: 1 };
        let loss = ObjectiveLoss { objective: &obj };
        let mut net = one_param(0.4);
        let rec = run_trajectory(
            &mut net,
            &loss,
            &unit_metric(1),
            OptimizerKind::Aristotle,
            &OptimizerHyper::default(),
            10,
        )
        .unwrap();
        for row in &rec.rows {
            assert_eq!(row.loss, 2.0);
            assert_eq!(row.grad_norm, 0.0);
            assert_eq!(row.path_length, 0.0);
        }
        assert_eq!(net.params_flat()[0], 0.4);
    }

    #[test]
    fn unstable_flow_reports_divergence_step() {
        let mut net = one_param(1.0);
        let loss = PolyLoss {
            quadratic: 1.0,
            quartic: 0.0,
        };
        // eta*dt = 3 on curvature 1: each step multiplies W by -2.
        let hyper = OptimizerHyper {
            eta: 300.0,
            dt: 1e-2,
            ..OptimizerHyper::default()
        };
        let err = run_trajectory(
            &mut net,
            &loss,
            &unit_metric(1),
            OptimizerKind::Aristotle,
            &hyper,
            200,
        )
        .unwrap_err();
        match err {
            Error::Divergence { step, .. } => {
                assert!(step > 0 && step < 200, "diverged at {step}");
            }
            other => panic!("expected divergence, got {other}"),
        }
    }

    #[test]
    fn zero_steps_is_rejected() {
        let mut net = one_param(1.0);
        let loss = PolyLoss {
            quadratic: 1.0,
            quartic: 0.0,
        };
        assert!(matches!(
            run_trajectory(
                &mut net,
                &loss,
                &unit_metric(1),
                OptimizerKind::Aristotle,
                &OptimizerHyper::default(),
                0,
            ),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn complex_cogradient_trajectory_is_refused() {
        let l0: Layer<Complex64> = Layer::from_parts(
            1,
            1,
            vec![Complex64::new(1.0, 1.0)],
            vec![],
            Activation::Identity,
        )
        .unwrap();
        let mut net = NetworkSpec::new(vec![l0]).unwrap();
        let loss = crate::losses::ModulusSquaredLoss;
        assert!(matches!(
            run_trajectory(
                &mut net,
                &loss,
                &unit_metric(1),
                OptimizerKind::Cogradient,
                &OptimizerHyper::default(),
                5,
            ),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn optimizer_names_roundtrip() {
        for kind in [
            OptimizerKind::Aristotle,
            OptimizerKind::Momentum,
            OptimizerKind::Damped,
            OptimizerKind::Cogradient,
        ] {
            assert_eq!(OptimizerKind::parse(kind.name()).unwrap(), kind);
        }
        assert!(OptimizerKind::parse("adam").is_err());
    }

    #[test]
    fn random_spd_quadratics_die_in_one_cogradient_step() {
        let mut rng = ChaCha8Rng::seed_from_u64(83);
        for _ in 0..100 {
            let k = rng.gen_range(1..=16);
            let mut a = DMatrix::zeros(k, k);
            for i in 0..k {
                for j in 0..=i {
                    let v = rng.gen_range(-1.0..1.0);
                    a[(i, j)] = v;
                    a[(j, i)] = v;
                }
            }
            // Shift the spectrum into [1, 3]: symmetric entries in (-1, 1)
            // have eigenvalues within ±k, so a±k shift plus identity works.
            let eig = a.clone().symmetric_eigen();
            let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
            let max = eig.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let span = (max - min).max(1e-9);
            let scaled = (a.clone() - DMatrix::identity(k, k) * min) * (2.0 / span)
                + DMatrix::identity(k, k);
            let obj = MatrixQuadratic::new(scaled).unwrap();
            let loss = ObjectiveLoss { objective: &obj };
            let w: Vec<f64> = (0..k).map(|_| rng.gen_range(-0.5..0.5)).collect();
            let mut net = carrier_network(&w).unwrap();
            let hyper = OptimizerHyper {
                eta: 1.0,
                dt: 1.0,
                ..OptimizerHyper::default()
            };
            let outcome =
                step_cogradient(&mut net, &unit_metric(1), &loss, &hyper).unwrap();
            assert!(!outcome.indefinite);
            let residual = net.param_norm();
            assert!(residual <= 1e-10, "k={k} residual {residual}");
        }
    }
}

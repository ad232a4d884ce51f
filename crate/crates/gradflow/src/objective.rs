//! Flat-vector objectives.
//!
//! The evidence machinery works on plain functions `L : R^k → R` rather
//! than on networks: model comparison cares only about the loss landscape
//! over parameters. [`Objective`] is that interface, with a handful of
//! reference landscapes (diagonal and full quadratics, quartic
//! perturbations, a double well, logistic regression) and adapters in both
//! directions: [`NetObjective`] flattens a network plus loss into an
//! objective, and [`ObjectiveLoss`] with [`carrier_network`] lets the
//! network steppers minimize a flat objective.

use crate::error::{Error, Result};
use crate::losses::LossFn;
use crate::network::{Activation, Layer, NetGradient, NetworkSpec};
use nalgebra::DMatrix;

/// A differentiable scalar function of a real parameter vector.
pub trait Objective {
    fn dim(&self) -> usize;
    fn value(&self, w: &[f64]) -> Result<f64>;
    fn gradient(&self, w: &[f64]) -> Result<Vec<f64>>;

    fn check_dim(&self, w: &[f64]) -> Result<()> {
        if w.len() != self.dim() {
            return Err(Error::Shape(format!(
                "objective over {} parameters evaluated at a {}-vector",
                self.dim(),
                w.len()
            )));
        }
        Ok(())
    }
}

/// `L = Σ_i (c₂/2) w_i² + (c₄/8) w_i⁴`, separable in every coordinate.
/// With `c₄ = 0` this is the diagonal quadratic; a small `c₄` gives the
/// quartic-perturbed quadratic the Laplace error-scaling checks use.
#[derive(Clone, Copy, Debug)]
pub struct PolyObjective {
    pub quadratic: f64,
    pub quartic: f64,
    pub dim: usize,
}

impl PolyObjective {
    pub fn new(quadratic: f64, quartic: f64, dim: usize) -> Result<Self> {
        if !quadratic.is_finite() || !quartic.is_finite() {
            return Err(Error::Argument("polynomial coefficients must be finite".into()));
        }
        if dim == 0 {
            return Err(Error::Argument("polynomial objective needs dim >= 1".into()));
        }
        Ok(PolyObjective {
            quadratic,
            quartic,
            dim,
        })
    }
}

impl Objective for PolyObjective {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, w: &[f64]) -> Result<f64> {
        self.check_dim(w)?;
        let mut s = 0.0;
        for &x in w {
            let sq = x * x;
            s += 0.5 * self.quadratic * sq + self.quartic / 8.0 * sq * sq;
        }
        Ok(s)
    }

    fn gradient(&self, w: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(w)?;
        Ok(w.iter()
            .map(|&x| self.quadratic * x + 0.5 * self.quartic * x * x * x)
            .collect())
    }
}

/// `L = ½ wᵀ A w` for a symmetric matrix `A`.
#[derive(Clone, Debug)]
pub struct MatrixQuadratic {
    a: DMatrix<f64>,
}

impl MatrixQuadratic {
    pub fn new(a: DMatrix<f64>) -> Result<Self> {
        if a.nrows() != a.ncols() || a.nrows() == 0 {
            return Err(Error::Shape(format!(
                "quadratic form needs a square matrix, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        let scale = a.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        for i in 0..a.nrows() {
            for j in 0..i {
                if (a[(i, j)] - a[(j, i)]).abs() > 1e-12 * (1.0 + scale) {
                    return Err(Error::Argument(format!(
                        "quadratic form matrix is not symmetric at ({i},{j})"
                    )));
                }
            }
        }
        Ok(MatrixQuadratic { a })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }
}

impl Objective for MatrixQuadratic {
    fn dim(&self) -> usize {
        self.a.nrows()
    }

    fn value(&self, w: &[f64]) -> Result<f64> {
        self.check_dim(w)?;
        let v = nalgebra::DVector::from_column_slice(w);
        Ok(0.5 * (&self.a * &v).dot(&v))
    }

    fn gradient(&self, w: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(w)?;
        let v = nalgebra::DVector::from_column_slice(w);
        Ok((&self.a * v).iter().copied().collect())
    }
}

/// `L = Σ_i (w_i² − r²)² / 4`: minima at `w_i = ±r`, a local maximum at the
/// origin. The canonical multi-minimum landscape the evidence machinery must
/// refuse.
#[derive(Clone, Copy, Debug)]
pub struct DoubleWell {
    pub radius: f64,
    pub dim: usize,
}

impl DoubleWell {
    pub fn new(radius: f64, dim: usize) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::Argument(format!(
                "well radius must be positive and finite, got {radius}"
            )));
        }
        if dim == 0 {
            return Err(Error::Argument("double well needs dim >= 1".into()));
        }
        Ok(DoubleWell { radius, dim })
    }
}

impl Objective for DoubleWell {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, w: &[f64]) -> Result<f64> {
        self.check_dim(w)?;
        let r2 = self.radius * self.radius;
        Ok(w.iter()
            .map(|&x| {
                let d = x * x - r2;
                0.25 * d * d
            })
            .sum())
    }

    fn gradient(&self, w: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(w)?;
        let r2 = self.radius * self.radius;
        Ok(w.iter().map(|&x| x * (x * x - r2)).collect())
    }
}

/// Constant landscape. With `dim = 0` it is the no-parameter model; with
/// `dim > 0` every direction is flat and only the prior moves the evidence.
#[derive(Clone, Copy, Debug)]
pub struct ConstantObjective {
    pub value: f64,
    pub dim: usize,
}

impl Objective for ConstantObjective {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, w: &[f64]) -> Result<f64> {
        self.check_dim(w)?;
        Ok(self.value)
    }

    fn gradient(&self, w: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(w)?;
        Ok(vec![0.0; self.dim])
    }
}

/// Mean logistic negative log-likelihood over a fixed design matrix:
/// `L = (1/n) Σ_i [softplus(z_i) − y_i z_i]` with `z_i = x_i · w` and labels
/// `y_i ∈ {0, 1}`. The gradient is the analytic
/// `(1/n) Σ_i (σ(z_i) − y_i) x_i`; a test pins it against finite
/// differences of the value.
#[derive(Clone, Debug)]
pub struct LogisticObjective {
    /// Row-major `n × k`.
    design: Vec<f64>,
    labels: Vec<bool>,
    k: usize,
}

impl LogisticObjective {
    pub fn new(design: Vec<f64>, labels: Vec<bool>, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::Argument("logistic objective needs k >= 1".into()));
        }
        if labels.is_empty() {
            return Err(Error::Argument("logistic objective needs data".into()));
        }
        if design.len() != labels.len() * k {
            return Err(Error::Shape(format!(
                "design matrix holds {} entries, expected {} rows x {k}",
                design.len(),
                labels.len()
            )));
        }
        if design.iter().any(|x| !x.is_finite()) {
            return Err(Error::Argument("non-finite design entry".into()));
        }
        Ok(LogisticObjective { design, labels, k })
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    fn logit(&self, row: usize, w: &[f64]) -> f64 {
        let r = &self.design[row * self.k..(row + 1) * self.k];
        r.iter().zip(w).map(|(x, wi)| x * wi).sum()
    }
}

fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

impl Objective for LogisticObjective {
    fn dim(&self) -> usize {
        self.k
    }

    fn value(&self, w: &[f64]) -> Result<f64> {
        self.check_dim(w)?;
        let mut s = 0.0;
        for (i, &y) in self.labels.iter().enumerate() {
            let z = self.logit(i, w);
            s += softplus(z) - if y { z } else { 0.0 };
        }
        Ok(s / self.n() as f64)
    }

    fn gradient(&self, w: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(w)?;
        let mut g = vec![0.0; self.k];
        for (i, &y) in self.labels.iter().enumerate() {
            let z = self.logit(i, w);
            let resid = crate::scalar::real_sigmoid(z) - if y { 1.0 } else { 0.0 };
            let row = &self.design[i * self.k..(i + 1) * self.k];
            for (gj, xj) in g.iter_mut().zip(row) {
                *gj += resid * xj;
            }
        }
        let inv_n = 1.0 / self.n() as f64;
        for gj in &mut g {
            *gj *= inv_n;
        }
        Ok(g)
    }
}

/// Adds the Gaussian prior penalty `Σ w² / (2 N λ²)` to a base objective.
/// This is the regularized loss the evidence integral is built from.
pub struct RegularizedObjective<'a> {
    pub base: &'a dyn Objective,
    pub n: usize,
    pub lambda_sq: f64,
}

impl<'a> RegularizedObjective<'a> {
    pub fn new(base: &'a dyn Objective, n: usize, lambda_sq: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Argument("regularized objective needs n >= 1".into()));
        }
        if !(lambda_sq > 0.0) || !lambda_sq.is_finite() {
            return Err(Error::Argument(format!(
                "lambda_sq must be positive and finite, got {lambda_sq}"
            )));
        }
        Ok(RegularizedObjective {
            base,
            n,
            lambda_sq,
        })
    }

    fn coeff(&self) -> f64 {
        1.0 / (2.0 * self.n as f64 * self.lambda_sq)
    }
}

impl Objective for RegularizedObjective<'_> {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn value(&self, w: &[f64]) -> Result<f64> {
        let sq: f64 = w.iter().map(|x| x * x).sum();
        Ok(self.base.value(w)? + self.coeff() * sq)
    }

    fn gradient(&self, w: &[f64]) -> Result<Vec<f64>> {
        let mut g = self.base.gradient(w)?;
        let c = 2.0 * self.coeff();
        for (gi, wi) in g.iter_mut().zip(w) {
            *gi += c * wi;
        }
        Ok(g)
    }
}

/// A network plus a loss provider, flattened into an objective over the
/// network's parameter vector.
pub struct NetObjective<'a, L: LossFn<f64>> {
    net: NetworkSpec<f64>,
    loss: &'a L,
}

impl<'a, L: LossFn<f64>> NetObjective<'a, L> {
    pub fn new(net: NetworkSpec<f64>, loss: &'a L) -> Self {
        NetObjective { net, loss }
    }
}

impl<L: LossFn<f64>> Objective for NetObjective<'_, L> {
    fn dim(&self) -> usize {
        self.net.param_count()
    }

    fn value(&self, w: &[f64]) -> Result<f64> {
        self.check_dim(w)?;
        let mut net = self.net.clone();
        net.set_params_flat(w)?;
        self.loss.value(&net)
    }

    fn gradient(&self, w: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(w)?;
        let mut net = self.net.clone();
        net.set_params_flat(w)?;
        let (_, g) = self.loss.evaluate(&net)?;
        Ok(g.to_flat())
    }
}

/// Single-layer bias-free identity network with `k` weights: a parameter
/// vector dressed as a network, so network steppers can drive flat
/// objectives.
pub fn carrier_network(init: &[f64]) -> Result<NetworkSpec<f64>> {
    if init.is_empty() {
        return Err(Error::Argument(
            "carrier network needs at least one parameter".into(),
        ));
    }
    let layer = Layer::from_parts(init.len(), 1, init.to_vec(), vec![], Activation::Identity)?;
    NetworkSpec::new(vec![layer])
}

/// Presents a flat objective as a loss over a [`carrier_network`].
pub struct ObjectiveLoss<'a> {
    pub objective: &'a dyn Objective,
}

impl LossFn<f64> for ObjectiveLoss<'_> {
    fn evaluate(&self, net: &NetworkSpec<f64>) -> Result<(f64, NetGradient<f64>)> {
        let w = net.params_flat();
        let value = self.objective.value(&w)?;
        let grad = net.gradient_from_flat(self.objective.gradient(&w)?)?;
        Ok((value, grad))
    }

    fn value(&self, net: &NetworkSpec<f64>) -> Result<f64> {
        self.objective.value(&net.params_flat())
    }
}

/// Symmetrized central-difference Hessian of `obj` at `w`, per-coordinate
/// step `h · (1 + |w_i|)`.
pub fn fd_hessian(obj: &dyn Objective, w: &[f64], h: f64) -> Result<DMatrix<f64>> {
    obj.check_dim(w)?;
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::Argument(format!(
            "hessian step must be positive and finite, got {h}"
        )));
    }
    let k = w.len();
    let mut raw = DMatrix::zeros(k, k);
    let mut probe = w.to_vec();
    for i in 0..k {
        let hi = h * (1.0 + w[i].abs());
        probe[i] = w[i] + hi;
        let gp = obj.gradient(&probe)?;
        probe[i] = w[i] - hi;
        let gm = obj.gradient(&probe)?;
        probe[i] = w[i];
        for j in 0..k {
            raw[(i, j)] = (gp[j] - gm[j]) / (2.0 * hi);
        }
    }
    let mut sym = DMatrix::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            sym[(i, j)] = 0.5 * (raw[(i, j)] + raw[(j, i)]);
        }
    }
    Ok(sym)
}

/// Default step for [`fd_hessian`].
pub const HESSIAN_FD_STEP: f64 = 1e-4;

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn fd_gradient(obj: &dyn Objective, w: &[f64], h: f64) -> Vec<f64> {
        let mut g = Vec::with_capacity(w.len());
        let mut probe = w.to_vec();
        for i in 0..w.len() {
            probe[i] = w[i] + h;
            let vp = obj.value(&probe).unwrap();
            probe[i] = w[i] - h;
            let vm = obj.value(&probe).unwrap();
            probe[i] = w[i];
            g.push((vp - vm) / (2.0 * h));
        }
        g
    }

    fn assert_grad_matches(obj: &dyn Objective, w: &[f64], tol: f64) {
        let analytic = obj.gradient(w).unwrap();
        let numeric = fd_gradient(obj, w, 1e-6);
        for (a, n) in analytic.iter().zip(&numeric) {
            assert!(
                (a - n).abs() <= tol * (1.0 + n.abs()),
                "analytic {a} vs numeric {n}"
            );
        }
    }

    #[test]
    fn poly_gradient_matches_finite_differences() {
        let obj = PolyObjective::new(3.0, 0.8, 4).unwrap();
        assert_grad_matches(&obj, &[0.3, -1.2, 0.0, 2.1], 1e-7);
    }

    #[test]
    fn poly_value_at_unit_point() {
        let obj = PolyObjective::new(1.0, 1.0, 1).unwrap();
        assert!((obj.value(&[1.0]).unwrap() - (0.5 + 0.125)).abs() < 1e-15);
    }

    #[test]
    fn matrix_quadratic_gradient_is_aw() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 5.0]);
        let obj = MatrixQuadratic::new(a).unwrap();
        let g = obj.gradient(&[1.0, -1.0]).unwrap();
        assert!((g[0] - 1.5).abs() < 1e-15);
        assert!((g[1] + 4.5).abs() < 1e-15);
        assert_grad_matches(&obj, &[1.0, -1.0], 1e-8);
    }

    #[test]
    fn asymmetric_matrix_is_rejected() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.2, 1.0]);
        assert!(MatrixQuadratic::new(a).is_err());
    }

    #[test]
    fn double_well_critical_points() {
        let obj = DoubleWell::new(1.0, 1).unwrap();
        assert_eq!(obj.gradient(&[0.0]).unwrap()[0], 0.0);
        assert_eq!(obj.gradient(&[1.0]).unwrap()[0], 0.0);
        assert_eq!(obj.gradient(&[-1.0]).unwrap()[0], 0.0);
        assert_eq!(obj.value(&[1.0]).unwrap(), 0.0);
        assert!((obj.value(&[0.0]).unwrap() - 0.25).abs() < 1e-15);
        assert_grad_matches(&obj, &[0.4], 1e-8);
    }

    #[test]
    fn constant_objective_is_flat() {
        let obj = ConstantObjective { value: 7.5, dim: 3 };
        assert_eq!(obj.value(&[1.0, 2.0, 3.0]).unwrap(), 7.5);
        assert!(obj.gradient(&[1.0, 2.0, 3.0]).unwrap().iter().all(|&g| g == 0.0));
    }

    #[test]
    fn zero_dim_constant_evaluates_on_empty_vector() {
        let obj = ConstantObjective { value: 0.25, dim: 0 };
        assert_eq!(obj.value(&[]).unwrap(), 0.25);
        assert!(obj.gradient(&[]).unwrap().is_empty());
    }

    #[test]
    fn logistic_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        let n = 40;
        let k = 3;
        let mut design = Vec::with_capacity(n * k);
        let mut labels = Vec::with_capacity(n);
        for _ in 0..n {
            for _ in 0..k - 1 {
                design.push(rng.gen_range(-2.0..2.0));
            }
            design.push(1.0);
            labels.push(rng.gen_bool(0.5));
        }
        let obj = LogisticObjective::new(design, labels, k).unwrap();
        assert_grad_matches(&obj, &[0.7, -0.4, 0.1], 1e-7);
    }

    #[test]
    fn logistic_value_at_zero_is_ln2() {
        let obj = LogisticObjective::new(vec![1.0, 1.0, 1.0], vec![true, false, true], 1).unwrap();
        assert!((obj.value(&[0.0]).unwrap() - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn softplus_is_stable_far_out() {
        assert_eq!(softplus(800.0), 800.0);
        assert_eq!(softplus(-800.0), 0.0);
        assert!((softplus(0.0) - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn regularizer_shifts_value_and_gradient_exactly() {
        let base = PolyObjective::new(2.0, 0.0, 2).unwrap();
        let reg = RegularizedObjective::new(&base, 50, 4.0).unwrap();
        let w = [1.5, -0.5];
        let sq = 1.5 * 1.5 + 0.5 * 0.5;
        let expected_gap = sq / (2.0 * 50.0 * 4.0);
        assert!(
            (reg.value(&w).unwrap() - base.value(&w).unwrap() - expected_gap).abs() < 1e-15
        );
        let gb = base.gradient(&w).unwrap();
        let gr = reg.gradient(&w).unwrap();
        for ((r, b), wi) in gr.iter().zip(&gb).zip(&w) {
            assert!((r - b - wi / (50.0 * 4.0)).abs() < 1e-15);
        }
    }

    #[test]
    fn fd_hessian_of_diagonal_quadratic() {
        let obj = PolyObjective::new(3.0, 0.0, 3).unwrap();
        let h = fd_hessian(&obj, &[0.2, -0.7, 1.1], HESSIAN_FD_STEP).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { 3.0 } else { 0.0 };
                assert!((h[(i, j)] - expect).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn fd_hessian_recovers_full_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(67);
        for _ in 0..20 {
            let k = rng.gen_range(1..=5);
            let mut a = DMatrix::zeros(k, k);
            for i in 0..k {
                for j in 0..=i {
                    let v = rng.gen_range(-2.0..2.0);
                    a[(i, j)] = v;
                    a[(j, i)] = v;
                }
            }
            let obj = MatrixQuadratic::new(a.clone()).unwrap();
            let w: Vec<f64> = (0..k).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let h = fd_hessian(&obj, &w, HESSIAN_FD_STEP).unwrap();
            for i in 0..k {
                for j in 0..k {
                    assert!((h[(i, j)] - a[(i, j)]).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn fd_hessian_is_exactly_symmetric() {
        let obj = PolyObjective::new(1.0, 2.0, 4).unwrap();
        let h = fd_hessian(&obj, &[0.9, -0.3, 0.5, -1.4], HESSIAN_FD_STEP).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(h[(i, j)], h[(j, i)]);
            }
        }
    }

    #[test]
    fn carrier_roundtrip_preserves_parameters() {
        let net = carrier_network(&[0.5, -1.5, 2.0]).unwrap();
        assert_eq!(net.params_flat(), vec![0.5, -1.5, 2.0]);
        assert_eq!(net.param_count(), 3);
    }

    #[test]
    fn objective_loss_agrees_with_objective() {
        let obj = PolyObjective::new(2.0, 1.0, 2).unwrap();
        let loss = ObjectiveLoss { objective: &obj };
        let net = carrier_network(&[0.4, -0.9]).unwrap();
        let (v, g) = loss.evaluate(&net).unwrap();
        assert!((v - obj.value(&[0.4, -0.9]).unwrap()).abs() < 1e-15);
        let expect = obj.gradient(&[0.4, -0.9]).unwrap();
        for (a, b) in g.iter_flat().zip(&expect) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn net_objective_flattens_network_loss() {
        use crate::losses::PolyLoss;
        let net = carrier_network(&[1.0, 2.0]).unwrap();
        let loss = PolyLoss {
            quadratic: 1.0,
            quartic: 0.0,
        };
        let obj = NetObjective::new(net, &loss);
        assert_eq!(obj.dim(), 2);
        assert!((obj.value(&[1.0, 2.0]).unwrap() - 2.5).abs() < 1e-15);
        let g = obj.gradient(&[1.0, 2.0]).unwrap();
        assert!((g[0] - 1.0).abs() < 1e-12);
        assert!((g[1] - 2.0).abs() < 1e-12);
    }
}

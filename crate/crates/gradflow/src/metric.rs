//! Parameter-space geometry.
//!
//! Each layer carries a stiffness that scales the inner product on its
//! parameters: the squared length of a displacement is
//! `ds² = Σ_layers s_layer Σ |δW|²`. A frozen layer has infinite stiffness;
//! it never moves, contributes nothing to path length, and rejects any
//! nonzero displacement outright.
//!
//! Descent directions come from raising the gradient's index with the
//! inverse metric. In real mode that divides by the stiffness. In complex
//! mode the loss gradient is held in conjugate components `dL/dW̄`, and the
//! off-diagonal pairing between `dW` and `dW̄` carries a coefficient `s/2`,
//! so the inverse contributes `2/s`:
//!
//! ```text
//! (raised)ᵂ = (1/s) · dL/dW          real parameters
//! (raised)ᵂ = (2/s) · dL/dW̄          complex parameters
//! ```
//!
//! The factor of two is exactly what makes a complex parameter flow match
//! the flow of its two real components: for `L = W W̄` the conjugate
//! gradient is `W`, the raised direction is `2W`, and the real pair
//! `(x, y)` with `L = x² + y²` has plain gradient `(2x, 2y)`.

use crate::error::{Error, Result};
use crate::network::{NetGradient, NetworkSpec};
use crate::scalar::TapeScalar;

/// Stiffness of one layer's block of the parameter metric.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LayerStiffness {
    /// Infinite stiffness: the layer is immovable.
    Frozen,
    /// Finite positive stiffness `s`; `s = 1` is the Euclidean block.
    Scaled(f64),
}

impl LayerStiffness {
    pub fn parse(text: &str) -> Result<Self> {
        if text == "frozen" {
            return Ok(LayerStiffness::Frozen);
        }
        let s: f64 = text
            .parse()
            .map_err(|_| Error::Argument(format!("stiffness must be 'frozen' or a number, got '{text}'")))?;
        LayerStiffness::scaled(s)
    }

    pub fn scaled(s: f64) -> Result<Self> {
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::Argument(format!(
                "stiffness must be positive and finite, got {s}"
            )));
        }
        Ok(LayerStiffness::Scaled(s))
    }

    pub fn is_frozen(&self) -> bool {
        matches!(self, LayerStiffness::Frozen)
    }
}

/// Block-diagonal parameter metric: one stiffness per layer.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerMetric {
    blocks: Vec<LayerStiffness>,
}

impl LayerMetric {
    pub fn new(blocks: Vec<LayerStiffness>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::Argument("a metric needs at least one block".into()));
        }
        Ok(LayerMetric { blocks })
    }

    /// Euclidean metric: every block at unit stiffness.
    pub fn euclidean(layer_count: usize) -> Result<Self> {
        LayerMetric::new(vec![LayerStiffness::Scaled(1.0); layer_count])
    }

    pub fn blocks(&self) -> &[LayerStiffness] {
        &self.blocks
    }

    pub fn layer_count(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_frozen(&self, layer: usize) -> bool {
        self.blocks[layer].is_frozen()
    }

    pub fn any_frozen(&self) -> bool {
        self.blocks.iter().any(LayerStiffness::is_frozen)
    }

    fn check_layers<T: TapeScalar>(&self, net_like: &NetGradient<T>) -> Result<()> {
        if net_like.layers.len() != self.blocks.len() {
            return Err(Error::Shape(format!(
                "metric has {} blocks, network has {} layers",
                self.blocks.len(),
                net_like.layers.len()
            )));
        }
        Ok(())
    }

    /// Raises the gradient's index: the direction a flow actually moves in.
    /// Frozen blocks map to zero.
    pub fn raise_index<T: TapeScalar>(&self, grad: &NetGradient<T>) -> Result<NetGradient<T>> {
        self.check_layers(grad)?;
        let inverse_scale = |s: f64| {
            if T::IS_COMPLEX {
                2.0 / s
            } else {
                1.0 / s
            }
        };
        let mut out = grad.clone();
        for (block, layer) in self.blocks.iter().zip(&mut out.layers) {
            match block {
                LayerStiffness::Frozen => {
                    for g in layer.weights.iter_mut().chain(layer.bias.iter_mut()) {
                        *g = T::zero();
                    }
                }
                LayerStiffness::Scaled(s) => {
                    let c = T::from_re(inverse_scale(*s));
                    for g in layer.weights.iter_mut().chain(layer.bias.iter_mut()) {
                        *g = *g * c;
                    }
                }
            }
        }
        Ok(out)
    }

    /// Squared length of a parameter displacement under this metric. A
    /// nonzero displacement on a frozen layer has no finite length and is a
    /// caller bug.
    pub fn squared_length<T: TapeScalar>(&self, delta: &NetGradient<T>) -> Result<f64> {
        self.check_layers(delta)?;
        let mut total = 0.0;
        for (li, (block, layer)) in self.blocks.iter().zip(&delta.layers).enumerate() {
            match block {
                LayerStiffness::Frozen => {
                    let moved = layer
                        .weights
                        .iter()
                        .chain(layer.bias.iter())
                        .any(|d| d.modulus() != 0.0);
                    if moved {
                        return Err(Error::Contract(format!(
                            "frozen layer {li} was displaced"
                        )));
                    }
                }
                LayerStiffness::Scaled(s) => {
                    let mut sq = 0.0;
                    for d in layer.weights.iter().chain(layer.bias.iter()) {
                        let m = d.modulus();
                        sq += m * m;
                    }
                    total += s * sq;
                }
            }
        }
        Ok(total)
    }
}

/// Accumulates the metric length of a parameter trajectory, one segment per
/// recorded step.
#[derive(Clone, Debug)]
pub struct PathAccumulator<T: TapeScalar> {
    metric: LayerMetric,
    previous: Vec<T>,
    length: f64,
}

impl<T: TapeScalar> PathAccumulator<T> {
    pub fn new(metric: LayerMetric, net: &NetworkSpec<T>) -> Result<Self> {
        if metric.layer_count() != net.layer_count() {
            return Err(Error::Shape(format!(
                "metric has {} blocks, network has {} layers",
                metric.layer_count(),
                net.layer_count()
            )));
        }
        Ok(PathAccumulator {
            metric,
            previous: net.params_flat(),
            length: 0.0,
        })
    }

    /// Adds the straight-segment length from the last snapshot to the
    /// network's current parameters, then re-snapshots.
    pub fn advance(&mut self, net: &NetworkSpec<T>) -> Result<()> {
        let current = net.params_flat();
        if current.len() != self.previous.len() {
            return Err(Error::Shape(
                "parameter count changed mid-trajectory".into(),
            ));
        }
        let flat_delta: Vec<T> = current
            .iter()
            .zip(&self.previous)
            .map(|(c, p)| *c - *p)
            .collect();
        let delta = net.gradient_from_flat(flat_delta)?;
        self.length += self.metric.squared_length(&delta)?.sqrt();
        self.previous = current;
        Ok(())
    }

    pub fn length(&self) -> f64 {
        self.length
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{Activation, Layer, LayerGradient};
    use num_complex::Complex64;

    fn grad1(vals: Vec<f64>) -> NetGradient<f64> {
        NetGradient {
            layers: vec![LayerGradient {
                weights: vals,
                bias: vec![],
            }],
        }
    }

    #[test]
    fn euclidean_raise_is_identity() {
        let m = LayerMetric::euclidean(1).unwrap();
        let g = grad1(vec![3.0, -2.0]);
        let raised = m.raise_index(&g).unwrap();
        assert_eq!(raised, g);
    }

    #[test]
    fn stiff_layer_moves_less() {
        let m = LayerMetric::new(vec![LayerStiffness::scaled(4.0).unwrap()]).unwrap();
        let raised = m.raise_index(&grad1(vec![8.0])).unwrap();
        assert_eq!(raised.layers[0].weights[0], 2.0);
    }

    #[test]
    fn frozen_block_raises_to_zero() {
        let m = LayerMetric::new(vec![LayerStiffness::Frozen]).unwrap();
        let raised = m.raise_index(&grad1(vec![8.0, -1.0])).unwrap();
        assert!(raised.layers[0].weights.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn complex_raise_carries_factor_two() {
        let m = LayerMetric::euclidean(1).unwrap();
        let g = NetGradient {
            layers: vec![LayerGradient {
                weights: vec![Complex64::new(1.0, -0.5)],
                bias: vec![],
            }],
        };
        let raised = m.raise_index(&g).unwrap();
        assert_eq!(raised.layers[0].weights[0], Complex64::new(2.0, -1.0));
    }

    #[test]
    fn squared_length_scales_with_stiffness() {
        let m = LayerMetric::new(vec![LayerStiffness::scaled(3.0).unwrap()]).unwrap();
        let d = grad1(vec![2.0, -1.0]);
        assert!((m.squared_length(&d).unwrap() - 15.0).abs() < 1e-15);
    }

    #[test]
    fn frozen_displacement_is_a_contract_error() {
        let m = LayerMetric::new(vec![LayerStiffness::Frozen]).unwrap();
        let err = m.squared_length(&grad1(vec![1e-300])).unwrap_err();
        assert!(matches!(err, Error::Contract(_)));
        assert!(err.to_string().contains("layer 0"));
    }

    #[test]
    fn frozen_zero_displacement_has_zero_length() {
        let m = LayerMetric::new(vec![LayerStiffness::Frozen]).unwrap();
        assert_eq!(m.squared_length(&grad1(vec![0.0, 0.0])).unwrap(), 0.0);
    }

    #[test]
    fn block_count_mismatch_is_rejected() {
        let m = LayerMetric::euclidean(2).unwrap();
        assert!(m.squared_length(&grad1(vec![1.0])).is_err());
    }

    #[test]
    fn stiffness_parsing() {
        assert_eq!(LayerStiffness::parse("frozen").unwrap(), LayerStiffness::Frozen);
        assert_eq!(
            LayerStiffness::parse("2.5").unwrap(),
            LayerStiffness::Scaled(2.5)
        );
        assert!(LayerStiffness::parse("-1").is_err());
        assert!(LayerStiffness::parse("inf").is_err());
        assert!(LayerStiffness::parse("rigid").is_err());
    }

    #[test]
    fn raise_then_lower_is_identity_across_stiffness_range() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(41);
        for _ in 0..200 {
            let s = 10f64.powf(rng.gen_range(-6.0..6.0));
            let m = LayerMetric::new(vec![LayerStiffness::scaled(s).unwrap()]).unwrap();
            let g = rng.gen_range(-2.0..2.0);
            let raised = m.raise_index(&grad1(vec![g])).unwrap().layers[0].weights[0];
            // Lowering multiplies by the covariant coefficient s.
            let back = raised * s;
            assert!((back - g).abs() <= 1e-12 * (1.0 + g.abs()), "s={s} g={g}");

            let zc = Complex64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let gc = NetGradient {
                layers: vec![LayerGradient {
                    weights: vec![zc],
                    bias: vec![],
                }],
            };
            let raised_c = m.raise_index(&gc).unwrap().layers[0].weights[0];
            // The complex covariant pairing carries coefficient s/2.
            let back_c = raised_c * (s / 2.0);
            assert!((back_c - zc).norm() <= 1e-12 * (1.0 + zc.norm()));
        }
    }

    #[test]
    fn out_and_back_counts_both_legs() {
        let l0 = Layer::from_parts(1, 1, vec![0.0], vec![], Activation::Identity).unwrap();
        let mut net = NetworkSpec::new(vec![l0]).unwrap();
        let m = LayerMetric::euclidean(1).unwrap();
        let mut path = PathAccumulator::new(m, &net).unwrap();
        net.set_params_flat(&[1.0]).unwrap();
        path.advance(&net).unwrap();
        net.set_params_flat(&[0.0]).unwrap();
        path.advance(&net).unwrap();
        assert!((path.length() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn path_length_of_a_straight_march() {
        let l0 = Layer::from_parts(1, 1, vec![0.0], vec![], Activation::Identity).unwrap();
        let mut net = NetworkSpec::new(vec![l0]).unwrap();
        let m = LayerMetric::new(vec![LayerStiffness::scaled(4.0).unwrap()]).unwrap();
        let mut path = PathAccumulator::new(m, &net).unwrap();
        for k in 1..=10 {
            net.set_params_flat(&[k as f64 * 0.1]).unwrap();
            path.advance(&net).unwrap();
        }
        // Ten segments of coordinate length 0.1 under stiffness 4: each
        // contributes sqrt(4 · 0.01) = 0.2.
        assert!((path.length() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn path_length_is_additive_over_segments() {
        let l0 = Layer::from_parts(2, 1, vec![1.0, -1.0], vec![], Activation::Identity).unwrap();
        let mut net = NetworkSpec::new(vec![l0]).unwrap();
        let m = LayerMetric::euclidean(1).unwrap();
        let mut path = PathAccumulator::new(m, &net).unwrap();
        net.set_params_flat(&[2.0, -1.0]).unwrap();
        path.advance(&net).unwrap();
        net.set_params_flat(&[2.0, 3.0]).unwrap();
        path.advance(&net).unwrap();
        assert!((path.length() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn complex_path_length_uses_moduli() {
        let l0: Layer<Complex64> = Layer::from_parts(
            1,
            1,
            vec![Complex64::new(0.0, 0.0)],
            vec![],
            Activation::Identity,
        )
        .unwrap();
        let mut net = NetworkSpec::new(vec![l0]).unwrap();
        let m = LayerMetric::euclidean(1).unwrap();
        let mut path = PathAccumulator::new(m, &net).unwrap();
        net.set_params_flat(&[Complex64::new(3.0, 4.0)]).unwrap();
        path.advance(&net).unwrap();
        assert!((path.length() - 5.0).abs() < 1e-12);
    }
}

//! Dense feed-forward networks over a [`TapeScalar`] field.
//!
//! A network is an ordered stack of affine layers with pointwise
//! activations. [`NetworkSpec::forward`] records the evaluation on a
//! [`Tape`] for differentiation; [`NetworkSpec::evaluate`] computes the same
//! value by straight-line arithmetic without a tape, which tests use as an
//! independent route. Parameters flatten layer by layer, weights in
//! row-major order followed by the bias, and every gradient-shaped object in
//! the crate shares that layout.

use crate::error::{Error, Result};
use crate::scalar::TapeScalar;
use crate::tape::{NodeId, Tape};
use rand::Rng;

/// Pointwise activation applied after a layer's affine map.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Identity,
    Sigmoid,
    Relu,
    /// Hyperbolic tangent; over complex scalars the separable map acting on
    /// real and imaginary parts independently.
    Tanh,
}

impl Activation {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "identity" => Ok(Activation::Identity),
            "sigmoid" => Ok(Activation::Sigmoid),
            "relu" => Ok(Activation::Relu),
            "tanh" => Ok(Activation::Tanh),
            other => Err(Error::Argument(format!("unknown activation '{other}'"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Activation::Identity => "identity",
            Activation::Sigmoid => "sigmoid",
            Activation::Relu => "relu",
            Activation::Tanh => "tanh",
        }
    }

    /// Complex layers admit only the identity and the separable tanh.
    pub fn valid_for_complex(&self) -> bool {
        matches!(self, Activation::Identity | Activation::Tanh)
    }

    fn apply_on_tape<T: TapeScalar>(&self, tape: &mut Tape<T>, id: NodeId) -> Result<NodeId> {
        match self {
            Activation::Identity => Ok(id),
            Activation::Sigmoid => tape.sigmoid(id),
            Activation::Relu => tape.relu(id),
            Activation::Tanh => Ok(tape.tanh(id)),
        }
    }

    fn apply_plain<T: TapeScalar>(&self, v: T) -> T {
        match self {
            Activation::Identity => v,
            Activation::Sigmoid => v.sigmoid().expect("validated at construction"),
            Activation::Relu => v.relu().expect("validated at construction"),
            Activation::Tanh => v.tanh_sep(),
        }
    }
}

/// One affine layer `y = act(W x + b)`. A layer may omit its bias (empty
/// vector), which single-parameter reference problems rely on.
#[derive(Clone, Debug)]
pub struct Layer<T: TapeScalar> {
    pub rows: usize,
    pub cols: usize,
    /// Row-major `rows × cols`.
    pub weights: Vec<T>,
    /// Length `rows`, or empty for a bias-free layer.
    pub bias: Vec<T>,
    pub activation: Activation,
}

impl<T: TapeScalar> Layer<T> {
    pub fn from_parts(
        rows: usize,
        cols: usize,
        weights: Vec<T>,
        bias: Vec<T>,
        activation: Activation,
    ) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Shape("layer dimensions must be positive".into()));
        }
        if weights.len() != rows * cols {
            return Err(Error::Shape(format!(
                "weight storage holds {} entries, expected {rows}x{cols}",
                weights.len()
            )));
        }
        if !bias.is_empty() && bias.len() != rows {
            return Err(Error::Shape(format!(
                "bias holds {} entries, expected {rows} or none",
                bias.len()
            )));
        }
        Ok(Layer {
            rows,
            cols,
            weights,
            bias,
            activation,
        })
    }

    /// Random layer with entries `scale · N(0, 1)` (complex entries split
    /// the variance between real and imaginary parts).
    pub fn random<R: Rng>(
        rows: usize,
        cols: usize,
        activation: Activation,
        with_bias: bool,
        scale: f64,
        rng: &mut R,
    ) -> Result<Self> {
        let weights = (0..rows * cols).map(|_| T::sample_init(rng, scale)).collect();
        let bias = if with_bias {
            (0..rows).map(|_| T::sample_init(rng, scale)).collect()
        } else {
            Vec::new()
        };
        Layer::from_parts(rows, cols, weights, bias, activation)
    }

    pub fn param_count(&self) -> usize {
        self.weights.len() + self.bias.len()
    }
}

/// Validated stack of layers.
#[derive(Clone, Debug)]
pub struct NetworkSpec<T: TapeScalar> {
    layers: Vec<Layer<T>>,
}

impl<T: TapeScalar> NetworkSpec<T> {
    pub fn new(layers: Vec<Layer<T>>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Shape("a network needs at least one layer".into()));
        }
        for (i, pair) in layers.windows(2).enumerate() {
            if pair[1].cols != pair[0].rows {
                return Err(Error::Shape(format!(
                    "layer {} expects {} inputs but layer {} produces {}",
                    i + 1,
                    pair[1].cols,
                    i,
                    pair[0].rows
                )));
            }
        }
        if T::IS_COMPLEX {
            for (i, layer) in layers.iter().enumerate() {
                if !layer.activation.valid_for_complex() {
                    return Err(Error::Contract(format!(
                        "layer {i}: activation '{}' is not defined in complex mode",
                        layer.activation.name()
                    )));
                }
            }
        }
        Ok(NetworkSpec { layers })
    }

    pub fn layers(&self) -> &[Layer<T>] {
        &self.layers
    }

    pub fn layer_count(&self) -> usize {
        self.layers.len()
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].cols
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().unwrap().rows
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Layer::param_count).sum()
    }

    pub fn mode(&self) -> &'static str {
        if T::IS_COMPLEX {
            "complex"
        } else {
            "real"
        }
    }

    pub fn activation_names(&self) -> String {
        self.layers
            .iter()
            .map(|l| l.activation.name())
            .collect::<Vec<_>>()
            .join(",")
    }

    /// Parameters in the crate-wide flat layout.
    pub fn params_flat(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(self.param_count());
        for layer in &self.layers {
            out.extend_from_slice(&layer.weights);
            out.extend_from_slice(&layer.bias);
        }
        out
    }

    pub fn set_params_flat(&mut self, flat: &[T]) -> Result<()> {
        if flat.len() != self.param_count() {
            return Err(Error::Shape(format!(
                "flat parameter vector holds {} entries, expected {}",
                flat.len(),
                self.param_count()
            )));
        }
        let mut i = 0;
        for layer in &mut self.layers {
            for w in &mut layer.weights {
                *w = flat[i];
                i += 1;
            }
            for b in &mut layer.bias {
                *b = flat[i];
                i += 1;
            }
        }
        Ok(())
    }

    /// Euclidean norm of the flat parameter vector (moduli in complex mode).
    pub fn param_norm(&self) -> f64 {
        let mut s = 0.0;
        for layer in &self.layers {
            for w in layer.weights.iter().chain(layer.bias.iter()) {
                let m = w.modulus();
                s += m * m;
            }
        }
        s.sqrt()
    }

    /// Records the forward pass on a fresh tape. Parameters are registered
    /// in flat order before any arithmetic, so pullback adjoints line up
    /// with [`NetworkSpec::params_flat`].
    pub fn forward(&self, x: &[T]) -> Result<TapedForward<T>> {
        if x.len() != self.input_dim() {
            return Err(Error::Shape(format!(
                "layer 0 expects {} inputs, got {}",
                self.input_dim(),
                x.len()
            )));
        }
        let mut tape = Tape::new();
        let mut w_ids: Vec<Vec<NodeId>> = Vec::with_capacity(self.layers.len());
        let mut b_ids: Vec<Vec<NodeId>> = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            w_ids.push(layer.weights.iter().map(|&w| tape.param(w)).collect());
            b_ids.push(layer.bias.iter().map(|&b| tape.param(b)).collect());
        }
        let mut cur: Vec<NodeId> = x.iter().map(|&v| tape.input(v)).collect();
        for (li, layer) in self.layers.iter().enumerate() {
            let mut next = Vec::with_capacity(layer.rows);
            for r in 0..layer.rows {
                let mut acc = tape.mul(w_ids[li][r * layer.cols], cur[0]);
                for (c, &xc) in cur.iter().enumerate().skip(1) {
                    let prod = tape.mul(w_ids[li][r * layer.cols + c], xc);
                    acc = tape.add(acc, prod);
                }
                if !b_ids[li].is_empty() {
                    acc = tape.add(acc, b_ids[li][r]);
                }
                next.push(layer.activation.apply_on_tape(&mut tape, acc)?);
            }
            cur = next;
        }
        let outputs = cur.iter().map(|&id| tape.value(id)).collect();
        Ok(TapedForward {
            outputs,
            output_ids: cur,
            tape,
        })
    }

    /// Straight-line evaluation without a tape, same summation order as
    /// [`NetworkSpec::forward`].
    pub fn evaluate(&self, x: &[T]) -> Result<Vec<T>> {
        if x.len() != self.input_dim() {
            return Err(Error::Shape(format!(
                "layer 0 expects {} inputs, got {}",
                self.input_dim(),
                x.len()
            )));
        }
        let mut cur: Vec<T> = x.to_vec();
        for layer in &self.layers {
            let mut next = Vec::with_capacity(layer.rows);
            for r in 0..layer.rows {
                let mut acc = layer.weights[r * layer.cols] * cur[0];
                for (c, &xc) in cur.iter().enumerate().skip(1) {
                    acc = acc + layer.weights[r * layer.cols + c] * xc;
                }
                if !layer.bias.is_empty() {
                    acc = acc + layer.bias[r];
                }
                next.push(layer.activation.apply_plain(acc));
            }
            cur = next;
        }
        Ok(cur)
    }

    /// Shapes a flat adjoint vector (as produced by [`Tape::pullback`] on a
    /// tape recorded by [`NetworkSpec::forward`]) into a [`NetGradient`].
    pub fn gradient_from_flat(&self, flat: Vec<T>) -> Result<NetGradient<T>> {
        if flat.len() != self.param_count() {
            return Err(Error::Shape(format!(
                "adjoint vector holds {} entries, expected {}",
                flat.len(),
                self.param_count()
            )));
        }
        let mut layers = Vec::with_capacity(self.layers.len());
        let mut i = 0;
        for layer in &self.layers {
            let weights = flat[i..i + layer.weights.len()].to_vec();
            i += layer.weights.len();
            let bias = flat[i..i + layer.bias.len()].to_vec();
            i += layer.bias.len();
            layers.push(LayerGradient { weights, bias });
        }
        Ok(NetGradient { layers })
    }

    /// Pullback of a recorded tape into network-shaped storage.
    pub fn pullback(&self, tape: &Tape<T>) -> Result<NetGradient<T>> {
        self.gradient_from_flat(tape.pullback()?)
    }
}

/// Forward pass together with its recording.
#[derive(Clone, Debug)]
pub struct TapedForward<T: TapeScalar> {
    pub outputs: Vec<T>,
    pub output_ids: Vec<NodeId>,
    pub tape: Tape<T>,
}

/// Per-layer gradient components. The loss being real-valued, complex
/// entries hold `dL/dW̄`; a descent direction additionally needs the metric
/// raise in [`crate::metric`].
#[derive(Clone, Debug, PartialEq)]
pub struct NetGradient<T: TapeScalar> {
    pub layers: Vec<LayerGradient<T>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LayerGradient<T: TapeScalar> {
    pub weights: Vec<T>,
    pub bias: Vec<T>,
}

impl<T: TapeScalar> NetGradient<T> {
    pub fn zeros_like(net: &NetworkSpec<T>) -> Self {
        NetGradient {
            layers: net
                .layers()
                .iter()
                .map(|l| LayerGradient {
                    weights: vec![T::zero(); l.weights.len()],
                    bias: vec![T::zero(); l.bias.len()],
                })
                .collect(),
        }
    }

    pub fn iter_flat(&self) -> impl Iterator<Item = &T> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(l.bias.iter()))
    }

    pub fn to_flat(&self) -> Vec<T> {
        self.iter_flat().copied().collect()
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    /// Euclidean norm over all components.
    pub fn norm(&self) -> f64 {
        let mut s = 0.0;
        for v in self.iter_flat() {
            let m = v.modulus();
            s += m * m;
        }
        s.sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.iter_flat().all(|v| v.is_finite())
    }

    /// `self += c · other`, layer by layer.
    pub fn add_scaled(&mut self, other: &NetGradient<T>, c: T) -> Result<()> {
        if self.layers.len() != other.layers.len() {
            return Err(Error::Shape("gradient layer counts differ".into()));
        }
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            if a.weights.len() != b.weights.len() || a.bias.len() != b.bias.len() {
                return Err(Error::Shape("gradient layer shapes differ".into()));
            }
            for (x, y) in a.weights.iter_mut().zip(&b.weights) {
                *x = *x + c * *y;
            }
            for (x, y) in a.bias.iter_mut().zip(&b.bias) {
                *x = *x + c * *y;
            }
        }
        Ok(())
    }

    pub fn scale(&mut self, c: T) {
        for l in &mut self.layers {
            for x in l.weights.iter_mut().chain(l.bias.iter_mut()) {
                *x = *x * c;
            }
        }
    }
}

/// Central-difference gradient of `loss` with respect to every parameter of
/// `net`, step `h` per coordinate. In complex mode the real and imaginary
/// axes are probed separately and combined as `(dL/dx + i dL/dy) / 2`, the
/// same conjugate-direction convention the tape uses, so the two routes are
/// directly comparable.
pub fn finite_difference_gradient<T, F>(
    net: &NetworkSpec<T>,
    loss: F,
    h: f64,
) -> Result<NetGradient<T>>
where
    T: TapeScalar,
    F: Fn(&NetworkSpec<T>) -> Result<f64>,
{
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::Argument(format!("step size must be positive, got {h}")));
    }
    let base = net.params_flat();
    let mut probe = net.clone();
    let mut flat = Vec::with_capacity(base.len());
    let eval_at = |params: &[T], probe: &mut NetworkSpec<T>| -> Result<f64> {
        probe.set_params_flat(params)?;
        loss(probe)
    };
    let mut work = base.clone();
    for i in 0..base.len() {
        let dx = {
            work[i] = base[i] + T::from_re(h);
            let lp = eval_at(&work, &mut probe)?;
            work[i] = base[i] - T::from_re(h);
            let lm = eval_at(&work, &mut probe)?;
            work[i] = base[i];
            (lp - lm) / (2.0 * h)
        };
        if T::IS_COMPLEX {
            let imag_h = T::from_re_im(0.0, h);
            work[i] = base[i] + imag_h;
            let lp = eval_at(&work, &mut probe)?;
            work[i] = base[i] - imag_h;
            let lm = eval_at(&work, &mut probe)?;
            work[i] = base[i];
            let dy = (lp - lm) / (2.0 * h);
            flat.push(T::from_re_im(0.5 * dx, 0.5 * dy));
        } else {
            flat.push(T::from_re(dx));
        }
    }
    net.gradient_from_flat(flat)
}

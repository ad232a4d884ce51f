//! Reverse-mode differentiation on a Wengert list.
//!
//! A [`Tape`] is an append-only list of primitive operations whose inputs
//! always precede them, recorded while a network (or a bespoke loss) is
//! evaluated. [`Tape::pullback`] walks the list once in reverse, pushing the
//! loss adjoint back to every registered parameter; no matrix is ever formed
//! or inverted. Over complex scalars the adjoint is the conjugate-direction
//! derivative `dL/dz̄`, handled by the unified chain rule in
//! [`crate::scalar`].
//!
//! Tapes are plain data: immutable after recording, cheap to replay, and
//! safe to move across threads.

use crate::error::{Error, Result};
use crate::scalar::TapeScalar;

pub type NodeId = usize;

/// Primitive operation of one tape node. Leaves carry no inputs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Op {
    /// Differentiable leaf, registered in [`Tape::params`] order.
    Param,
    /// Non-differentiated leaf (network input or data).
    Input,
    Const,
    Add(NodeId, NodeId),
    Sub(NodeId, NodeId),
    Mul(NodeId, NodeId),
    Div(NodeId, NodeId),
    Neg(NodeId),
    Exp(NodeId),
    Ln(NodeId),
    Sigmoid(NodeId),
    Tanh(NodeId),
    Relu(NodeId),
    Conj(NodeId),
}

#[derive(Clone, Debug)]
struct Node<T> {
    op: Op,
    value: T,
}

/// Recorded forward evaluation with one scalar output.
#[derive(Clone, Debug)]
pub struct Tape<T: TapeScalar> {
    nodes: Vec<Node<T>>,
    params: Vec<NodeId>,
    output: Option<NodeId>,
}

impl<T: TapeScalar> Default for Tape<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: TapeScalar> Tape<T> {
    pub fn new() -> Self {
        Tape {
            nodes: Vec::new(),
            params: Vec::new(),
            output: None,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, id: NodeId) -> T {
        self.nodes[id].value
    }

    pub fn op(&self, id: NodeId) -> Op {
        self.nodes[id].op
    }

    /// Differentiable leaves in registration order; [`Tape::pullback`]
    /// returns one adjoint per entry, in this order.
    pub fn params(&self) -> &[NodeId] {
        &self.params
    }

    fn push(&mut self, op: Op, value: T) -> NodeId {
        let id = self.nodes.len();
        self.nodes.push(Node { op, value });
        id
    }

    pub fn param(&mut self, value: T) -> NodeId {
        let id = self.push(Op::Param, value);
        self.params.push(id);
        id
    }

    pub fn input(&mut self, value: T) -> NodeId {
        self.push(Op::Input, value)
    }

    pub fn constant(&mut self, value: T) -> NodeId {
        self.push(Op::Const, value)
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let v = self.value(a) + self.value(b);
        self.push(Op::Add(a, b), v)
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let v = self.value(a) - self.value(b);
        self.push(Op::Sub(a, b), v)
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let v = self.value(a) * self.value(b);
        self.push(Op::Mul(a, b), v)
    }

    pub fn div(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let v = self.value(a) / self.value(b);
        self.push(Op::Div(a, b), v)
    }

    pub fn neg(&mut self, a: NodeId) -> NodeId {
        let v = -self.value(a);
        self.push(Op::Neg(a), v)
    }

    pub fn exp(&mut self, a: NodeId) -> NodeId {
        let v = self.value(a).exp();
        self.push(Op::Exp(a), v)
    }

    pub fn ln(&mut self, a: NodeId) -> NodeId {
        let v = self.value(a).ln();
        self.push(Op::Ln(a), v)
    }

    pub fn sigmoid(&mut self, a: NodeId) -> Result<NodeId> {
        let v = self.value(a).sigmoid().ok_or_else(|| {
            Error::Contract("sigmoid is not available over complex scalars".into())
        })?;
        Ok(self.push(Op::Sigmoid(a), v))
    }

    pub fn tanh(&mut self, a: NodeId) -> NodeId {
        let v = self.value(a).tanh_sep();
        self.push(Op::Tanh(a), v)
    }

    pub fn relu(&mut self, a: NodeId) -> Result<NodeId> {
        let v = self
            .value(a)
            .relu()
            .ok_or_else(|| Error::Contract("relu is undefined over complex scalars".into()))?;
        Ok(self.push(Op::Relu(a), v))
    }

    pub fn conj(&mut self, a: NodeId) -> NodeId {
        let v = self.value(a).conj();
        self.push(Op::Conj(a), v)
    }

    /// Left fold of `add` over `ids`; the empty sum is a zero constant.
    pub fn sum(&mut self, ids: &[NodeId]) -> NodeId {
        match ids.split_first() {
            None => self.constant(T::zero()),
            Some((&first, rest)) => {
                let mut acc = first;
                for &id in rest {
                    acc = self.add(acc, id);
                }
                acc
            }
        }
    }

    /// Marks the loss node. Pullback differentiates this node.
    pub fn set_output(&mut self, id: NodeId) {
        debug_assert!(id < self.nodes.len());
        self.output = Some(id);
    }

    pub fn output(&self) -> Option<NodeId> {
        self.output
    }

    /// Checks the defining order property: every node's inputs precede it.
    pub fn validate(&self) -> Result<()> {
        for (id, node) in self.nodes.iter().enumerate() {
            let ok = match node.op {
                Op::Param | Op::Input | Op::Const => true,
                Op::Add(a, b) | Op::Sub(a, b) | Op::Mul(a, b) | Op::Div(a, b) => a < id && b < id,
                Op::Neg(a)
                | Op::Exp(a)
                | Op::Ln(a)
                | Op::Sigmoid(a)
                | Op::Tanh(a)
                | Op::Relu(a)
                | Op::Conj(a) => a < id,
            };
            if !ok {
                return Err(Error::Contract(format!(
                    "tape node {id} references a later node"
                )));
            }
        }
        Ok(())
    }

    /// Recomputes every node value in recording order from the stored leaf
    /// values. The result is bit-identical to the recorded values, which
    /// makes replay a cheap determinism probe.
    pub fn replay(&self) -> Vec<T> {
        let mut vals: Vec<T> = Vec::with_capacity(self.nodes.len());
        for node in &self.nodes {
            let v = match node.op {
                Op::Param | Op::Input | Op::Const => node.value,
                Op::Add(a, b) => vals[a] + vals[b],
                Op::Sub(a, b) => vals[a] - vals[b],
                Op::Mul(a, b) => vals[a] * vals[b],
                Op::Div(a, b) => vals[a] / vals[b],
                Op::Neg(a) => -vals[a],
                Op::Exp(a) => vals[a].exp(),
                Op::Ln(a) => vals[a].ln(),
                Op::Sigmoid(a) => vals[a].sigmoid().expect("recorded on a real tape"),
                Op::Tanh(a) => vals[a].tanh_sep(),
                Op::Relu(a) => vals[a].relu().expect("recorded on a real tape"),
                Op::Conj(a) => vals[a].conj(),
            };
            vals.push(v);
        }
        vals
    }

    /// Reverse sweep from the output node. Returns one adjoint per
    /// registered parameter, in registration order: `dL/dW` over the reals,
    /// `dL/dW̄` over the complex numbers.
    ///
    /// The output must hold a real scalar (any imaginary part beyond
    /// rounding is a contract violation, since a descent direction for a
    /// non-real "loss" is undefined).
    pub fn pullback(&self) -> Result<Vec<T>> {
        let out = self
            .output
            .ok_or_else(|| Error::Contract("pullback before set_output".into()))?;
        let out_v = self.value(out);
        if out_v.im().abs() > 1e-12 * (1.0 + out_v.re().abs()) {
            return Err(Error::Contract(format!(
                "loss output is not real: {out_v}"
            )));
        }

        let mut adj = vec![T::zero(); self.nodes.len()];
        adj[out] = T::output_seed();

        // Accumulate into input `u` of node `w` given partials
        // p = ∂w/∂u and q = ∂w/∂ū:  adj[u] += conj(adj_w)·q + adj_w·conj(p).
        // Over the reals q = 0 and conjugation is the identity.
        for id in (0..self.nodes.len()).rev() {
            let a_w = adj[id];
            if a_w == T::zero() {
                continue;
            }
            match self.nodes[id].op {
                Op::Param | Op::Input | Op::Const => {}
                Op::Add(a, b) => {
                    adj[a] = adj[a] + a_w;
                    adj[b] = adj[b] + a_w;
                }
                Op::Sub(a, b) => {
                    adj[a] = adj[a] + a_w;
                    adj[b] = adj[b] - a_w;
                }
                Op::Mul(a, b) => {
                    let (va, vb) = (self.value(a), self.value(b));
                    adj[a] = adj[a] + a_w * vb.conj();
                    adj[b] = adj[b] + a_w * va.conj();
                }
                Op::Div(a, b) => {
                    let (va, vb) = (self.value(a), self.value(b));
                    adj[a] = adj[a] + a_w * (T::one() / vb).conj();
                    adj[b] = adj[b] - a_w * (va / (vb * vb)).conj();
                }
                Op::Neg(a) => adj[a] = adj[a] - a_w,
                Op::Exp(a) => {
                    let w = self.nodes[id].value;
                    adj[a] = adj[a] + a_w * w.conj();
                }
                Op::Ln(a) => {
                    let va = self.value(a);
                    adj[a] = adj[a] + a_w * (T::one() / va).conj();
                }
                Op::Sigmoid(a) => {
                    let w = self.nodes[id].value;
                    adj[a] = adj[a] + a_w * T::d_sigmoid(w).conj();
                }
                Op::Tanh(a) => {
                    let (p, q) = T::d_tanh_sep(self.value(a));
                    adj[a] = adj[a] + a_w.conj() * q + a_w * p.conj();
                }
                Op::Relu(a) => {
                    let p = T::d_relu(self.value(a));
                    adj[a] = adj[a] + a_w * p;
                }
                Op::Conj(a) => adj[a] = adj[a] + a_w.conj(),
            }
        }

        Ok(self.params.iter().map(|&p| adj[p]).collect())
    }
}

//! Matrix-level reverse-mode differentiation.
//!
//! A [`GradTape`] records every operation of a forward pass as a node
//! holding its value. [`GradTape::backward`] walks the nodes in reverse,
//! accumulating adjoints, and returns one gradient per registered
//! parameter in registration order.
//!
//! ```
//! use tabvae::numeric::{GradTape, Matrix};
//!
//! let mut tape = GradTape::new();
//! let w = tape.param(Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap());
//! let sq = tape.mul(w, w).unwrap();
//! let loss = tape.sum(sq);
//! let grads = tape.backward(loss).unwrap();
//! assert_eq!(grads[0].as_slice(), &[2.0, 4.0, 6.0, 8.0]);
//! ```

use super::{Activation, Matrix};
use crate::error::{Error, Result};

/// Handle to a node recorded on a [`GradTape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeId(usize);

#[derive(Debug, Clone, Copy)]
enum Op {
    Leaf,
    MatMul(NodeId, NodeId),
    Add(NodeId, NodeId),
    Sub(NodeId, NodeId),
    Mul(NodeId, NodeId),
    AddRow(NodeId, NodeId),
    Activation(NodeId, Activation),
    Exp(NodeId),
    Scale(NodeId, f64),
    AddScalar(NodeId),
    Sum(NodeId),
}

#[derive(Debug)]
struct Node {
    value: Matrix,
    op: Op,
}

#[derive(Debug, Default)]
pub struct GradTape {
    nodes: Vec<Node>,
    params: Vec<NodeId>,
}

impl GradTape {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records a differentiable leaf. Gradients come back in the order
    /// parameters were registered.
    pub fn param(&mut self, value: Matrix) -> NodeId {
        let id = self.push(value, Op::Leaf);
        self.params.push(id);
        id
    }

    /// Records a leaf that receives no gradient.
    pub fn constant(&mut self, value: Matrix) -> NodeId {
        self.push(value, Op::Leaf)
    }

    pub fn value(&self, id: NodeId) -> &Matrix {
        &self.nodes[id.0].value
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let value = self.value(a).matmul(self.value(b))?;
        Ok(self.push(value, Op::MatMul(a, b)))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.same_shape("add", a, b)?;
        let value = self.value(a).zip_map(self.value(b), |x, y| x + y);
        self.push_checked(value, Op::Add(a, b), "add")
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.same_shape("sub", a, b)?;
        let value = self.value(a).zip_map(self.value(b), |x, y| x - y);
        self.push_checked(value, Op::Sub(a, b), "sub")
    }

    /// Element-wise product.
    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.same_shape("mul", a, b)?;
        let value = self.value(a).zip_map(self.value(b), |x, y| x * y);
        self.push_checked(value, Op::Mul(a, b), "mul")
    }

    /// Adds a `1 x cols` row to every row of `a`.
    pub fn add_row(&mut self, a: NodeId, row: NodeId) -> Result<NodeId> {
        let (am, rm) = (self.value(a), self.value(row));
        if rm.rows() != 1 || rm.cols() != am.cols() {
            return Err(Error::Shape {
                op: "add_row",
                left: am.shape(),
                right: rm.shape(),
            });
        }
        let mut value = am.clone();
        let bias = rm.as_slice();
        let cols = am.cols();
        for r in 0..value.rows() {
            for (v, b) in value.row_mut(r).iter_mut().zip(bias).take(cols) {
                *v += b;
            }
        }
        self.push_checked(value, Op::AddRow(a, row), "add_row")
    }

    pub fn activation(&mut self, a: NodeId, kind: Activation) -> NodeId {
        let value = kind.forward(self.value(a));
        self.push(value, Op::Activation(a, kind))
    }

    pub fn exp(&mut self, a: NodeId) -> Result<NodeId> {
        let value = self.value(a).map(f64::exp);
        self.push_checked(value, Op::Exp(a), "exp")
    }

    pub fn scale(&mut self, a: NodeId, factor: f64) -> Result<NodeId> {
        let value = self.value(a).map(|v| v * factor);
        self.push_checked(value, Op::Scale(a, factor), "scale")
    }

    pub fn add_scalar(&mut self, a: NodeId, c: f64) -> Result<NodeId> {
        let value = self.value(a).map(|v| v + c);
        self.push_checked(value, Op::AddScalar(a), "add_scalar")
    }

    /// Sum of all elements as a `1 x 1` node.
    pub fn sum(&mut self, a: NodeId) -> NodeId {
        let total = self.value(a).sum();
        self.push(Matrix::from_parts(1, 1, vec![total]), Op::Sum(a))
    }

    pub fn mean(&mut self, a: NodeId) -> Result<NodeId> {
        let n = self.value(a).len().max(1) as f64;
        let s = self.sum(a);
        self.scale(s, 1.0 / n)
    }

    /// Gradients of the scalar `loss` with respect to every registered
    /// parameter, in registration order.
    pub fn backward(&self, loss: NodeId) -> Result<Vec<Matrix>> {
        let shape = self.value(loss).shape();
        if shape != (1, 1) {
            return Err(Error::NotScalar(shape));
        }
        let mut adj: Vec<Option<Matrix>> = vec![None; loss.0 + 1];
        adj[loss.0] = Some(Matrix::filled(1, 1, 1.0));

        for idx in (0..=loss.0).rev() {
            let Some(g) = adj[idx].take() else { continue };
            let node = &self.nodes[idx];
            match node.op {
                Op::Leaf => {
                    adj[idx] = Some(g);
                }
                Op::MatMul(a, b) => {
                    let ga = g.matmul_t(self.value(b));
                    let gb = self.value(a).t_matmul(&g);
                    accumulate(&mut adj, a, ga);
                    accumulate(&mut adj, b, gb);
                }
                Op::Add(a, b) => {
                    accumulate(&mut adj, a, g.clone());
                    accumulate(&mut adj, b, g);
                }
                Op::Sub(a, b) => {
                    accumulate(&mut adj, b, g.map(|v| -v));
                    accumulate(&mut adj, a, g);
                }
                Op::Mul(a, b) => {
                    let ga = g.zip_map(self.value(b), |x, y| x * y);
                    let gb = g.zip_map(self.value(a), |x, y| x * y);
                    accumulate(&mut adj, a, ga);
                    accumulate(&mut adj, b, gb);
                }
                Op::AddRow(a, row) => {
                    accumulate(&mut adj, row, g.column_sums());
                    accumulate(&mut adj, a, g);
                }
                Op::Activation(a, kind) => {
                    let x = self.value(a);
                    let y = &node.value;
                    let data = g
                        .as_slice()
                        .iter()
                        .zip(x.as_slice().iter().zip(y.as_slice()))
                        .map(|(gv, (&xv, &yv))| gv * kind.derivative(xv, yv))
                        .collect();
                    accumulate(&mut adj, a, Matrix::from_parts(g.rows(), g.cols(), data));
                }
                Op::Exp(a) => {
                    accumulate(&mut adj, a, g.zip_map(&node.value, |x, y| x * y));
                }
                Op::Scale(a, factor) => {
                    accumulate(&mut adj, a, g.map(|v| v * factor));
                }
                Op::AddScalar(a) => {
                    accumulate(&mut adj, a, g);
                }
                Op::Sum(a) => {
                    let (r, c) = self.value(a).shape();
                    accumulate(&mut adj, a, Matrix::filled(r, c, g.get(0, 0)));
                }
            }
        }

        self.params
            .iter()
            .map(|&p| {
                let grad = match adj.get(p.0).and_then(Option::as_ref) {
                    Some(g) => g.clone(),
                    None => {
                        let (r, c) = self.value(p).shape();
                        Matrix::zeros(r, c)
                    }
                };
                grad.check_finite("gradient")?;
                Ok(grad)
            })
            .collect()
    }

    fn push(&mut self, value: Matrix, op: Op) -> NodeId {
        self.nodes.push(Node { value, op });
        NodeId(self.nodes.len() - 1)
    }

    fn push_checked(&mut self, value: Matrix, op: Op, context: &str) -> Result<NodeId> {
        value.check_finite(context)?;
        Ok(self.push(value, op))
    }

    fn same_shape(&self, op: &'static str, a: NodeId, b: NodeId) -> Result<()> {
        let (l, r) = (self.value(a).shape(), self.value(b).shape());
        if l == r {
            Ok(())
        } else {
            Err(Error::Shape { op, left: l, right: r })
        }
    }
}

fn accumulate(adj: &mut [Option<Matrix>], target: NodeId, g: Matrix) {
    match &mut adj[target.0] {
        Some(existing) => existing.add_assign(&g),
        slot @ None => *slot = Some(g),
    }
}

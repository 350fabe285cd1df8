use std::cell::RefCell;
use std::fmt;
use std::rc::Rc;

use super::ops::Op;
use super::{GradError, Tensor};

pub(crate) struct Node {
    pub(crate) value: Rc<Tensor>,
    pub(crate) op: Op,
    pub(crate) needs_grad: bool,
}

/// Append-only record of the operations of one forward pass.
///
/// Single-threaded: build one tape per forward/backward pass and drop it.
#[derive(Default)]
pub struct Tape {
    nodes: RefCell<Vec<Node>>,
}

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy)]
pub struct Var<'t> {
    pub(crate) tape: &'t Tape,
    pub(crate) id: usize,
}

impl fmt::Debug for Var<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Var#{}{:?}", self.id, self.value().shape())
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Records a leaf whose gradient is tracked.
    pub fn leaf(&self, value: Tensor) -> Var<'_> {
        self.insert(value, Op::Leaf, true)
    }

    /// Records a leaf that never receives a gradient (inputs, fixed masks).
    pub fn constant(&self, value: Tensor) -> Var<'_> {
        self.insert(value, Op::Leaf, false)
    }

    pub(crate) fn push(&self, value: Tensor, op: Op) -> Var<'_> {
        let needs_grad = {
            let nodes = self.nodes.borrow();
            op.inputs().iter().any(|&i| nodes[i].needs_grad)
        };
        self.insert(value, op, needs_grad)
    }

    fn insert(&self, value: Tensor, op: Op, needs_grad: bool) -> Var<'_> {
        let mut nodes = self.nodes.borrow_mut();
        nodes.push(Node {
            value: Rc::new(value),
            op,
            needs_grad,
        });
        Var {
            tape: self,
            id: nodes.len() - 1,
        }
    }

    pub(crate) fn value_of(&self, id: usize) -> Rc<Tensor> {
        Rc::clone(&self.nodes.borrow()[id].value)
    }

    /// Reverse sweep from a scalar `loss`.
    ///
    /// Nodes are visited in strict reverse insertion order; accumulators
    /// start at zero on every call.
    pub fn backward(&self, loss: Var<'_>) -> Result<Gradients, GradError> {
        debug_assert!(std::ptr::eq(loss.tape, self));
        let nodes = self.nodes.borrow();
        let loss_value = &nodes[loss.id].value;
        if loss_value.len() != 1 {
            return Err(GradError::NotScalar {
                shape: loss_value.shape().to_vec(),
            });
        }
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; loss.id + 1];
        grads[loss.id] = Some(vec![1.0]);
        for id in (0..=loss.id).rev() {
            let Some(g) = grads[id].take() else { continue };
            let node = &nodes[id];
            if node.needs_grad {
                node.op.backprop(&nodes, &node.value, &g, &mut grads);
            }
            grads[id] = Some(g);
        }
        let shapes = nodes[..=loss.id]
            .iter()
            .map(|n| n.value.shape().to_vec())
            .collect();
        Ok(Gradients { grads, shapes })
    }
}

/// Gradients of one backward pass, indexed by the variables of its tape.
pub struct Gradients {
    grads: Vec<Option<Vec<f64>>>,
    shapes: Vec<Vec<usize>>,
}

impl Gradients {
    /// Gradient of the loss with respect to `var`; zeros when `var` does not
    /// influence the loss.
    pub fn wrt(&self, var: Var<'_>) -> Tensor {
        let shape = match self.shapes.get(var.id) {
            Some(s) => s.clone(),
            None => var.value().shape().to_vec(),
        };
        match self.grads.get(var.id).and_then(|g| g.as_ref()) {
            Some(g) => Tensor::new(&shape, g.clone()).expect("gradient matches value shape"),
            None => Tensor::zeros(&shape),
        }
    }
}

impl<'t> Var<'t> {
    pub fn tape(&self) -> &'t Tape {
        self.tape
    }

    pub fn value(&self) -> Rc<Tensor> {
        self.tape.value_of(self.id)
    }

    pub fn shape(&self) -> Vec<usize> {
        self.value().shape().to_vec()
    }

    pub fn item(&self) -> f64 {
        self.value().item()
    }
}

/// Adds `contribution` into the accumulator of node `id`.
pub(crate) fn accumulate(grads: &mut [Option<Vec<f64>>], id: usize, contribution: &[f64]) {
    match &mut grads[id] {
        Some(acc) => {
            for (a, c) in acc.iter_mut().zip(contribution) {
                *a += c;
            }
        }
        slot @ None => *slot = Some(contribution.to_vec()),
    }
}

/// Mutable accumulator for node `id`, zero-initialized on first touch.
pub(crate) fn accumulator<'g>(
    grads: &'g mut [Option<Vec<f64>>],
    id: usize,
    len: usize,
) -> &'g mut Vec<f64> {
    grads[id].get_or_insert_with(|| vec![0.0; len])
}

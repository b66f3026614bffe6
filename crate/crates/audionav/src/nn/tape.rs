//! Define-by-run reverse-mode tape.
//!
//! A [`Graph`] owns an append-only arena of nodes; [`Tensor`] is a copyable
//! handle into it. Ops eagerly compute values (through the shared kernels)
//! and record enough to run [`Graph::backward`], which walks the arena in
//! reverse insertion order (already topological) and accumulates gradients
//! into every node on a path to a gradient-requiring leaf.

use std::cell::RefCell;
use std::rc::Rc;

use super::array::{Array, Scalar};
use super::kernels;

pub struct Graph<T: Scalar> {
    nodes: RefCell<Vec<Node<T>>>,
}

struct Node<T: Scalar> {
    value: Array<T>,
    grad: Option<Array<T>>,
    needs_grad: bool,
    op: Op<T>,
}

#[derive(Clone)]
enum Op<T: Scalar> {
    Leaf,
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    Affine { x: usize, scale: T, offset: T },
    Relu(usize),
    Sigmoid(usize),
    Tanh(usize),
    Exp(usize),
    Linear { x: usize, w: usize, b: usize },
    Conv2d { x: usize, w: usize, b: usize, stride: usize, padding: usize },
    Concat { parts: Vec<usize> },
    Reshape { x: usize },
    MaskedLogSoftmax { x: usize, mask: Rc<Vec<bool>> },
    Softmax { x: usize },
    MaskedEntropy { logp: usize, mask: Rc<Vec<bool>> },
    Pick { x: usize, index: usize },
    Min2(usize, usize),
    Clamp { x: usize, lo: T, hi: T },
    Mean(usize),
    Sum(usize),
}

/// Handle to a graph node.
pub struct Tensor<'g, T: Scalar> {
    g: &'g Graph<T>,
    id: usize,
}

impl<T: Scalar> Clone for Tensor<'_, T> {
    fn clone(&self) -> Self {
        *self
    }
}
impl<T: Scalar> Copy for Tensor<'_, T> {}

impl<T: Scalar> Default for Graph<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Scalar> Graph<T> {
    pub fn new() -> Self {
        Graph { nodes: RefCell::new(Vec::new()) }
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Insert a leaf. Set `requires_grad` for parameters (and for inputs
    /// whose gradient a test wants to probe).
    pub fn leaf(&self, value: Array<T>, requires_grad: bool) -> Tensor<'_, T> {
        self.push(value, requires_grad, Op::Leaf)
    }

    pub fn constant(&self, v: T) -> Tensor<'_, T> {
        self.leaf(Array::scalar(v), false)
    }

    fn push(&self, value: Array<T>, needs_grad: bool, op: Op<T>) -> Tensor<'_, T> {
        let mut nodes = self.nodes.borrow_mut();
        nodes.push(Node { value, grad: None, needs_grad, op });
        Tensor { g: self, id: nodes.len() - 1 }
    }

    fn needs(&self, id: usize) -> bool {
        self.nodes.borrow()[id].needs_grad
    }

    fn value_clone(&self, id: usize) -> Array<T> {
        self.nodes.borrow()[id].value.clone()
    }

    /// Gradient of the last backward pass with respect to `t`, if any.
    pub fn grad(&self, t: Tensor<'_, T>) -> Option<Array<T>> {
        self.nodes.borrow()[t.id].grad.clone()
    }

    /// Reverse pass from a scalar loss.
    pub fn backward(&self, loss: Tensor<'_, T>) {
        let mut nodes = self.nodes.borrow_mut();
        assert_eq!(nodes[loss.id].value.numel(), 1, "backward requires a scalar loss");
        let shape = nodes[loss.id].value.shape().to_vec();
        nodes[loss.id].grad = Some(Array::filled(&shape, T::one()));

        for id in (0..=loss.id).rev() {
            if nodes[id].grad.is_none() || !nodes[id].needs_grad {
                continue;
            }
            if matches!(nodes[id].op, Op::Leaf) {
                continue;
            }
            let op = nodes[id].op.clone();
            let gout = nodes[id].grad.take().expect("grad present");
            let contribs: Vec<(usize, Array<T>)> = {
                let (left, right) = nodes.split_at_mut(id);
                let node = &right[0];
                backward_op(&op, node, left, &gout)
            };
            for (pid, contrib) in contribs {
                match nodes[pid].grad.as_mut() {
                    Some(g) => g.add_scaled(&contrib, T::one()),
                    None => nodes[pid].grad = Some(contrib),
                }
            }
            nodes[id].grad = Some(gout);
        }
    }
}

/// Per-op gradient contributions to parents. `left` holds all nodes with
/// smaller ids (every parent); `node` is the op's own node.
fn backward_op<T: Scalar>(
    op: &Op<T>,
    node: &Node<T>,
    left: &[Node<T>],
    gout: &Array<T>,
) -> Vec<(usize, Array<T>)> {
    let needs = |id: usize| left[id].needs_grad;
    let mut out = Vec::new();
    match op {
        Op::Leaf => {}
        Op::Add(a, b) => {
            if needs(*a) {
                out.push((*a, gout.clone()));
            }
            if needs(*b) {
                out.push((*b, gout.clone()));
            }
        }
        Op::Sub(a, b) => {
            if needs(*a) {
                out.push((*a, gout.clone()));
            }
            if needs(*b) {
                out.push((*b, gout.map(|v| -v)));
            }
        }
        Op::Mul(a, b) => {
            if needs(*a) {
                out.push((*a, gout.zip_map(&left[*b].value, |g, bv| g * bv)));
            }
            if needs(*b) {
                out.push((*b, gout.zip_map(&left[*a].value, |g, av| g * av)));
            }
        }
        Op::Affine { x, scale, .. } => {
            if needs(*x) {
                let s = *scale;
                out.push((*x, gout.map(|g| g * s)));
            }
        }
        Op::Relu(x) => {
            if needs(*x) {
                out.push((*x, gout.zip_map(&left[*x].value, |g, xv| {
                    if xv > T::zero() {
                        g
                    } else {
                        T::zero()
                    }
                })));
            }
        }
        Op::Sigmoid(x) => {
            if needs(*x) {
                out.push((*x, gout.zip_map(&node.value, |g, y| g * y * (T::one() - y))));
            }
        }
        Op::Tanh(x) => {
            if needs(*x) {
                out.push((*x, gout.zip_map(&node.value, |g, y| g * (T::one() - y * y))));
            }
        }
        Op::Exp(x) => {
            if needs(*x) {
                out.push((*x, gout.zip_map(&node.value, |g, y| g * y)));
            }
        }
        Op::Linear { x, w, b } => {
            let (gx, gw, gb) =
                kernels::linear_backward(&left[*x].value, &left[*w].value, gout, needs(*x));
            if let Some(gx) = gx {
                out.push((*x, gx));
            }
            if needs(*w) {
                out.push((*w, gw));
            }
            if needs(*b) {
                out.push((*b, gb));
            }
        }
        Op::Conv2d { x, w, b, stride, padding } => {
            let (gx, gw, gb) = kernels::conv2d_backward(
                &left[*x].value,
                &left[*w].value,
                gout,
                *stride,
                *padding,
                needs(*x),
            );
            if let Some(gx) = gx {
                out.push((*x, gx));
            }
            if needs(*w) {
                out.push((*w, gw));
            }
            if needs(*b) {
                out.push((*b, gb));
            }
        }
        Op::Concat { parts } => {
            let mut offset = 0usize;
            for &p in parts {
                let n = left[p].value.numel();
                if needs(p) {
                    let slice = gout.data()[offset..offset + n].to_vec();
                    out.push((p, Array::from_vec(left[p].value.shape(), slice)));
                }
                offset += n;
            }
        }
        Op::Reshape { x } => {
            if needs(*x) {
                out.push((*x, gout.reshaped(left[*x].value.shape())));
            }
        }
        Op::MaskedLogSoftmax { x, mask } => {
            if needs(*x) {
                let k = mask.len();
                let rows = node.value.numel() / k;
                let mut gx = Array::zeros(left[*x].value.shape());
                for r in 0..rows {
                    let lp = &node.value.data()[r * k..(r + 1) * k];
                    let go = &gout.data()[r * k..(r + 1) * k];
                    let mut gsum = T::zero();
                    for j in 0..k {
                        if mask[j] {
                            gsum = gsum + go[j];
                        }
                    }
                    let row = &mut gx.data_mut()[r * k..(r + 1) * k];
                    for j in 0..k {
                        if mask[j] {
                            row[j] = go[j] - lp[j].exp() * gsum;
                        }
                    }
                }
                out.push((*x, gx));
            }
        }
        Op::Softmax { x } => {
            if needs(*x) {
                let k = *node.value.shape().last().unwrap();
                let rows = node.value.numel() / k;
                let mut gx = Array::zeros(left[*x].value.shape());
                for r in 0..rows {
                    let s = &node.value.data()[r * k..(r + 1) * k];
                    let go = &gout.data()[r * k..(r + 1) * k];
                    let mut dot = T::zero();
                    for j in 0..k {
                        dot = dot + go[j] * s[j];
                    }
                    let row = &mut gx.data_mut()[r * k..(r + 1) * k];
                    for j in 0..k {
                        row[j] = s[j] * (go[j] - dot);
                    }
                }
                out.push((*x, gx));
            }
        }
        Op::MaskedEntropy { logp, mask } => {
            if needs(*logp) {
                let g = gout.item();
                let src = &left[*logp].value;
                let mut gx = Array::zeros(src.shape());
                for (j, (&l, gv)) in src.data().iter().zip(gx.data_mut()).enumerate() {
                    if mask[j % mask.len()] {
                        let p = l.exp();
                        *gv = -g * p * (T::one() + l);
                    }
                }
                out.push((*logp, gx));
            }
        }
        Op::Pick { x, index } => {
            if needs(*x) {
                let mut gx = Array::zeros(left[*x].value.shape());
                gx.data_mut()[*index] = gout.item();
                out.push((*x, gx));
            }
        }
        Op::Min2(a, b) => {
            let av = &left[*a].value;
            let bv = &left[*b].value;
            if needs(*a) {
                out.push((
                    *a,
                    gout.zip_map(&av.zip_map(bv, |x, y| if x <= y { T::one() } else { T::zero() }), |g, m| g * m),
                ));
            }
            if needs(*b) {
                out.push((
                    *b,
                    gout.zip_map(&av.zip_map(bv, |x, y| if x <= y { T::zero() } else { T::one() }), |g, m| g * m),
                ));
            }
        }
        Op::Clamp { x, lo, hi } => {
            if needs(*x) {
                let (lo, hi) = (*lo, *hi);
                out.push((*x, gout.zip_map(&left[*x].value, |g, xv| {
                    if xv > lo && xv < hi {
                        g
                    } else {
                        T::zero()
                    }
                })));
            }
        }
        Op::Mean(x) => {
            if needs(*x) {
                let n = T::from_f64(left[*x].value.numel() as f64);
                let g = gout.item() / n;
                out.push((*x, Array::filled(left[*x].value.shape(), g)));
            }
        }
        Op::Sum(x) => {
            if needs(*x) {
                out.push((*x, Array::filled(left[*x].value.shape(), gout.item())));
            }
        }
    }
    out
}

impl<'g, T: Scalar> Tensor<'g, T> {
    pub fn value(&self) -> Array<T> {
        self.g.value_clone(self.id)
    }

    pub fn shape(&self) -> Vec<usize> {
        self.g.nodes.borrow()[self.id].value.shape().to_vec()
    }

    pub fn item(&self) -> T {
        self.g.nodes.borrow()[self.id].value.item()
    }

    fn same_graph(&self, other: &Self) {
        assert!(std::ptr::eq(self.g, other.g), "tensors from different graphs");
    }

    /// Compute a new value from this node's array without cloning it.
    fn with1(&self, f: impl FnOnce(&Array<T>) -> Array<T>, op: Op<T>) -> Tensor<'g, T> {
        let v = {
            let nodes = self.g.nodes.borrow();
            f(&nodes[self.id].value)
        };
        self.g.push(v, self.g.needs(self.id), op)
    }

    fn with2(
        &self,
        other: &Tensor<'g, T>,
        f: impl FnOnce(&Array<T>, &Array<T>) -> Array<T>,
        op: Op<T>,
    ) -> Tensor<'g, T> {
        self.same_graph(other);
        let v = {
            let nodes = self.g.nodes.borrow();
            f(&nodes[self.id].value, &nodes[other.id].value)
        };
        self.g.push(v, self.g.needs(self.id) || self.g.needs(other.id), op)
    }

    pub fn add(&self, other: Tensor<'g, T>) -> Tensor<'g, T> {
        self.with2(&other, |a, b| a.zip_map(b, |x, y| x + y), Op::Add(self.id, other.id))
    }

    pub fn sub(&self, other: Tensor<'g, T>) -> Tensor<'g, T> {
        self.with2(&other, |a, b| a.zip_map(b, |x, y| x - y), Op::Sub(self.id, other.id))
    }

    pub fn mul(&self, other: Tensor<'g, T>) -> Tensor<'g, T> {
        self.with2(&other, |a, b| a.zip_map(b, |x, y| x * y), Op::Mul(self.id, other.id))
    }

    /// x * scale + offset, elementwise with scalar constants.
    pub fn affine(&self, scale: T, offset: T) -> Tensor<'g, T> {
        self.with1(|a| a.map(|x| x * scale + offset), Op::Affine { x: self.id, scale, offset })
    }

    pub fn relu(&self) -> Tensor<'g, T> {
        self.with1(
            |a| a.map(|x| if x > T::zero() { x } else { T::zero() }),
            Op::Relu(self.id),
        )
    }

    pub fn sigmoid(&self) -> Tensor<'g, T> {
        self.with1(|a| a.map(kernels::sigmoid), Op::Sigmoid(self.id))
    }

    pub fn tanh(&self) -> Tensor<'g, T> {
        self.with1(|a| a.map(|x| x.tanh()), Op::Tanh(self.id))
    }

    pub fn exp(&self) -> Tensor<'g, T> {
        self.with1(|a| a.map(|x| x.exp()), Op::Exp(self.id))
    }

    pub fn linear(&self, w: Tensor<'g, T>, b: Tensor<'g, T>) -> Tensor<'g, T> {
        self.same_graph(&w);
        self.same_graph(&b);
        let v = {
            let nodes = self.g.nodes.borrow();
            kernels::linear_forward(&nodes[self.id].value, &nodes[w.id].value, &nodes[b.id].value)
        };
        let needs = self.g.needs(self.id) || self.g.needs(w.id) || self.g.needs(b.id);
        self.g.push(v, needs, Op::Linear { x: self.id, w: w.id, b: b.id })
    }

    pub fn conv2d(
        &self,
        w: Tensor<'g, T>,
        b: Tensor<'g, T>,
        stride: usize,
        padding: usize,
    ) -> Tensor<'g, T> {
        self.same_graph(&w);
        self.same_graph(&b);
        let v = {
            let nodes = self.g.nodes.borrow();
            kernels::conv2d_forward(
                &nodes[self.id].value,
                &nodes[w.id].value,
                &nodes[b.id].value,
                stride,
                padding,
            )
        };
        let needs = self.g.needs(self.id) || self.g.needs(w.id) || self.g.needs(b.id);
        self.g.push(v, needs, Op::Conv2d { x: self.id, w: w.id, b: b.id, stride, padding })
    }

    /// Concatenate 1-row tensors along the last axis into [1, total].
    pub fn concat(parts: &[Tensor<'g, T>]) -> Tensor<'g, T> {
        assert!(!parts.is_empty(), "concat of nothing");
        let g = parts[0].g;
        let mut needs = false;
        let data = {
            let nodes = g.nodes.borrow();
            let mut data = Vec::new();
            for p in parts {
                parts[0].same_graph(p);
                data.extend_from_slice(nodes[p.id].value.data());
                needs |= nodes[p.id].needs_grad;
            }
            data
        };
        let total = data.len();
        g.push(
            Array::from_vec(&[1, total], data),
            needs,
            Op::Concat { parts: parts.iter().map(|p| p.id).collect() },
        )
    }

    pub fn reshape(&self, shape: &[usize]) -> Tensor<'g, T> {
        self.with1(|a| a.reshaped(shape), Op::Reshape { x: self.id })
    }

    pub fn masked_log_softmax(&self, mask: Rc<Vec<bool>>) -> Tensor<'g, T> {
        let m = mask.clone();
        self.with1(
            move |a| kernels::masked_log_softmax(a, &m),
            Op::MaskedLogSoftmax { x: self.id, mask },
        )
    }

    pub fn softmax(&self) -> Tensor<'g, T> {
        self.with1(kernels::softmax, Op::Softmax { x: self.id })
    }

    /// Entropy of the categorical given by a (masked) log-probability row.
    pub fn masked_entropy(&self, mask: Rc<Vec<bool>>) -> Tensor<'g, T> {
        let m = mask.clone();
        self.with1(
            move |a| {
                let mut h = T::zero();
                for (j, &l) in a.data().iter().enumerate() {
                    if m[j % m.len()] {
                        h = h - l.exp() * l;
                    }
                }
                Array::scalar(h)
            },
            Op::MaskedEntropy { logp: self.id, mask },
        )
    }

    /// Pick one element (by flat index) as a scalar.
    pub fn pick(&self, index: usize) -> Tensor<'g, T> {
        self.with1(|a| Array::scalar(a.data()[index]), Op::Pick { x: self.id, index })
    }

    pub fn min2(&self, other: Tensor<'g, T>) -> Tensor<'g, T> {
        self.with2(
            &other,
            |a, b| a.zip_map(b, |x, y| if x <= y { x } else { y }),
            Op::Min2(self.id, other.id),
        )
    }

    pub fn clamp(&self, lo: T, hi: T) -> Tensor<'g, T> {
        self.with1(|a| a.map(|x| x.max(lo).min(hi)), Op::Clamp { x: self.id, lo, hi })
    }

    pub fn mean(&self) -> Tensor<'g, T> {
        self.with1(
            |a| {
                let n = T::from_f64(a.numel() as f64);
                let mut acc = T::zero();
                for &v in a.data() {
                    acc = acc + v;
                }
                Array::scalar(acc / n)
            },
            Op::Mean(self.id),
        )
    }

    pub fn sum(&self) -> Tensor<'g, T> {
        self.with1(
            |a| {
                let mut acc = T::zero();
                for &v in a.data() {
                    acc = acc + v;
                }
                Array::scalar(acc)
            },
            Op::Sum(self.id),
        )
    }
}

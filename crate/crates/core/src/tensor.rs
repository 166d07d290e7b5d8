//! Dense 64-bit tensors and a tape for reverse-mode automatic differentiation.
//!
//! The tape records every primitive operation of a forward pass as a node.
//! [`Tape::backward`] walks the nodes in reverse, accumulating gradients for
//! every leaf created with `requires_grad`. Nodes reference only earlier
//! nodes, so a single reverse sweep is a valid topological order.
//!
//! All arithmetic is f64 with fixed left-to-right summation, so identical
//! inputs produce bit-identical outputs. The plain [`Tensor`] compute methods
//! are the same kernels the tape uses for its forward values; an inference
//! path built on them matches a taped forward exactly.

use std::cell::RefCell;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum TensorError {
    #[error("{op}: {message}")]
    Shape { op: &'static str, message: String },
    #[error("backward requires a scalar loss, got shape {shape:?}")]
    NonScalarLoss { shape: Vec<usize> },
    #[error("{op}: index {index} out of range (bound {bound})")]
    IndexOutOfRange {
        op: &'static str,
        index: usize,
        bound: usize,
    },
}

fn shape_err(op: &'static str, message: String) -> TensorError {
    TensorError::Shape { op, message }
}

/// Row-major dense array of f64 values.
///
/// Scalars have an empty shape, vectors shape `[n]`, matrices `[rows, cols]`.
/// `requires_grad` marks parameter tensors; it takes effect when the tensor
/// is placed on a tape with [`Tape::leaf`].
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
    requires_grad: bool,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self, TensorError> {
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(shape_err(
                "new",
                format!("shape {:?} needs {} values, got {}", shape, expected, data.len()),
            ));
        }
        Ok(Tensor {
            shape,
            data,
            requires_grad: false,
        })
    }

    pub fn scalar(value: f64) -> Self {
        Tensor {
            shape: vec![],
            data: vec![value],
            requires_grad: false,
        }
    }

    pub fn vector(data: Vec<f64>) -> Self {
        Tensor {
            shape: vec![data.len()],
            data,
            requires_grad: false,
        }
    }

    pub fn matrix(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, TensorError> {
        Tensor::new(vec![rows, cols], data)
    }

    pub fn zeros(shape: &[usize]) -> Self {
        let len = shape.iter().product();
        Tensor {
            shape: shape.to_vec(),
            data: vec![0.0; len],
            requires_grad: false,
        }
    }

    /// Marks this tensor as a trainable parameter.
    pub fn with_grad(mut self) -> Self {
        self.requires_grad = true;
        self
    }

    pub fn requires_grad(&self) -> bool {
        self.requires_grad
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn is_scalar(&self) -> bool {
        self.shape.is_empty()
    }

    /// Extracts the value of a scalar tensor.
    ///
    /// Panics on non-scalars; callers only invoke this on reduction outputs.
    pub fn item(&self) -> f64 {
        assert!(
            self.is_scalar(),
            "item() on non-scalar tensor of shape {:?}",
            self.shape
        );
        self.data[0]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    fn rank2(&self, op: &'static str) -> Result<(usize, usize), TensorError> {
        match self.shape.as_slice() {
            [r, c] => Ok((*r, *c)),
            other => Err(shape_err(op, format!("expected a matrix, got shape {:?}", other))),
        }
    }

    fn same_shape(&self, other: &Tensor, op: &'static str) -> Result<(), TensorError> {
        if self.shape != other.shape {
            return Err(shape_err(
                op,
                format!("operand shapes differ: {:?} vs {:?}", self.shape, other.shape),
            ));
        }
        Ok(())
    }

    // ── forward kernels ─────────────────────────────────────────────────
    //
    // These are used both directly (inference paths) and as the forward
    // half of the taped operations below.

    pub fn matmul(&self, rhs: &Tensor) -> Result<Tensor, TensorError> {
        let (m, k) = self.rank2("matmul")?;
        let (k2, n) = rhs.rank2("matmul")?;
        if k != k2 {
            return Err(shape_err(
                "matmul",
                format!("inner dimensions differ: {}x{} vs {}x{}", m, k, k2, n),
            ));
        }
        let mut out = vec![0.0; m * n];
        for i in 0..m {
            for p in 0..k {
                let a = self.data[i * k + p];
                if a == 0.0 {
                    continue;
                }
                let row = &rhs.data[p * n..(p + 1) * n];
                let dst = &mut out[i * n..(i + 1) * n];
                for (d, b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        Tensor::new(vec![m, n], out)
    }

    pub fn add(&self, rhs: &Tensor) -> Result<Tensor, TensorError> {
        self.same_shape(rhs, "add")?;
        let data = self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect();
        Tensor::new(self.shape.clone(), data)
    }

    pub fn sub(&self, rhs: &Tensor) -> Result<Tensor, TensorError> {
        self.same_shape(rhs, "sub")?;
        let data = self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect();
        Tensor::new(self.shape.clone(), data)
    }

    pub fn mul(&self, rhs: &Tensor) -> Result<Tensor, TensorError> {
        self.same_shape(rhs, "mul")?;
        let data = self.data.iter().zip(&rhs.data).map(|(a, b)| a * b).collect();
        Tensor::new(self.shape.clone(), data)
    }

    /// Adds a length-`cols` row vector to every row of a matrix.
    pub fn add_row(&self, row: &Tensor) -> Result<Tensor, TensorError> {
        let (m, n) = self.rank2("add_row")?;
        if row.shape.as_slice() != [n] {
            return Err(shape_err(
                "add_row",
                format!("row shape {:?} does not match {} columns", row.shape, n),
            ));
        }
        let mut data = self.data.clone();
        for i in 0..m {
            for j in 0..n {
                data[i * n + j] += row.data[j];
            }
        }
        Tensor::new(self.shape.clone(), data)
    }

    pub fn scale(&self, factor: f64) -> Tensor {
        let data = self.data.iter().map(|v| v * factor).collect();
        Tensor {
            shape: self.shape.clone(),
            data,
            requires_grad: false,
        }
    }

    pub fn add_const(&self, constant: f64) -> Tensor {
        let data = self.data.iter().map(|v| v + constant).collect();
        Tensor {
            shape: self.shape.clone(),
            data,
            requires_grad: false,
        }
    }

    pub fn relu(&self) -> Tensor {
        let data = self.data.iter().map(|v| v.max(0.0)).collect();
        Tensor {
            shape: self.shape.clone(),
            data,
            requires_grad: false,
        }
    }

    pub fn exp(&self) -> Tensor {
        let data = self.data.iter().map(|v| v.exp()).collect();
        Tensor {
            shape: self.shape.clone(),
            data,
            requires_grad: false,
        }
    }

    pub fn log(&self) -> Tensor {
        let data = self.data.iter().map(|v| v.ln()).collect();
        Tensor {
            shape: self.shape.clone(),
            data,
            requires_grad: false,
        }
    }

    /// `x * ln x`, with the continuous extension 0 at x = 0.
    pub fn xlogx(&self) -> Tensor {
        let data = self
            .data
            .iter()
            .map(|&v| if v > 0.0 { v * v.ln() } else { 0.0 })
            .collect();
        Tensor {
            shape: self.shape.clone(),
            data,
            requires_grad: false,
        }
    }

    pub fn sigmoid(&self) -> Tensor {
        let data = self.data.iter().map(|&v| stable_sigmoid(v)).collect();
        Tensor {
            shape: self.shape.clone(),
            data,
            requires_grad: false,
        }
    }

    /// `ln sigmoid(x)` computed without overflow for large |x|.
    pub fn log_sigmoid(&self) -> Tensor {
        let data = self
            .data
            .iter()
            .map(|&v| {
                if v >= 0.0 {
                    -(-v).exp().ln_1p()
                } else {
                    v - v.exp().ln_1p()
                }
            })
            .collect();
        Tensor {
            shape: self.shape.clone(),
            data,
            requires_grad: false,
        }
    }

    /// Row-wise log-softmax with max subtraction.
    pub fn log_softmax(&self) -> Result<Tensor, TensorError> {
        let (m, n) = self.rank2("log_softmax")?;
        if n == 0 {
            return Err(shape_err("log_softmax", "zero columns".into()));
        }
        let mut data = vec![0.0; m * n];
        for i in 0..m {
            let row = &self.data[i * n..(i + 1) * n];
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut sum = 0.0;
            for &v in row {
                sum += (v - max).exp();
            }
            let log_z = max + sum.ln();
            for (j, d) in data[i * n..(i + 1) * n].iter_mut().enumerate() {
                *d = row[j] - log_z;
            }
        }
        Tensor::new(self.shape.clone(), data)
    }

    pub fn mean_all(&self) -> Result<Tensor, TensorError> {
        if self.data.is_empty() {
            return Err(shape_err("mean_all", "empty tensor".into()));
        }
        let sum: f64 = self.data.iter().sum();
        Ok(Tensor::scalar(sum / self.data.len() as f64))
    }

    pub fn sum_all(&self) -> Tensor {
        Tensor::scalar(self.data.iter().sum())
    }

    /// Column means of a matrix: `(m, n) -> (n,)`.
    pub fn mean_rows(&self) -> Result<Tensor, TensorError> {
        let (m, n) = self.rank2("mean_rows")?;
        if m == 0 {
            return Err(shape_err("mean_rows", "empty batch".into()));
        }
        let mut out = vec![0.0; n];
        for i in 0..m {
            for (j, o) in out.iter_mut().enumerate() {
                *o += self.data[i * n + j];
            }
        }
        for v in &mut out {
            *v /= m as f64;
        }
        Ok(Tensor::vector(out))
    }

    pub fn concat_cols(&self, rhs: &Tensor) -> Result<Tensor, TensorError> {
        let (m, p) = self.rank2("concat_cols")?;
        let (m2, q) = rhs.rank2("concat_cols")?;
        if m != m2 {
            return Err(shape_err(
                "concat_cols",
                format!("row counts differ: {} vs {}", m, m2),
            ));
        }
        let mut data = Vec::with_capacity(m * (p + q));
        for i in 0..m {
            data.extend_from_slice(&self.data[i * p..(i + 1) * p]);
            data.extend_from_slice(&rhs.data[i * q..(i + 1) * q]);
        }
        Tensor::new(vec![m, p + q], data)
    }

    /// Row-wise squared L2 distance: `(m, n) x (m, n) -> (m,)`.
    pub fn sq_dist(&self, rhs: &Tensor) -> Result<Tensor, TensorError> {
        self.same_shape(rhs, "sq_dist")?;
        let (m, n) = self.rank2("sq_dist")?;
        let mut out = vec![0.0; m];
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for j in 0..n {
                let d = self.data[i * n + j] - rhs.data[i * n + j];
                acc += d * d;
            }
            *o = acc;
        }
        Ok(Tensor::vector(out))
    }

    /// Row-wise L2 distance: `(m, n) x (m, n) -> (m,)`.
    pub fn l2_dist(&self, rhs: &Tensor) -> Result<Tensor, TensorError> {
        let mut sq = self.sq_dist(rhs)?;
        for v in sq.data_mut() {
            *v = v.sqrt();
        }
        Ok(sq)
    }

    /// Picks one column per row: `out[i] = self[i, indices[i]]`.
    pub fn pick(&self, indices: &[usize]) -> Result<Tensor, TensorError> {
        let (m, n) = self.rank2("pick")?;
        if indices.len() != m {
            return Err(shape_err(
                "pick",
                format!("{} indices for {} rows", indices.len(), m),
            ));
        }
        let mut out = vec![0.0; m];
        for (i, &j) in indices.iter().enumerate() {
            if j >= n {
                return Err(TensorError::IndexOutOfRange {
                    op: "pick",
                    index: j,
                    bound: n,
                });
            }
            out[i] = self.data[i * n + j];
        }
        Ok(Tensor::vector(out))
    }

    /// Gathers rows of a table: `out[i, :] = self[indices[i], :]`.
    pub fn gather_rows(&self, indices: &[usize]) -> Result<Tensor, TensorError> {
        let (rows, cols) = self.rank2("gather_rows")?;
        let mut data = Vec::with_capacity(indices.len() * cols);
        for &r in indices {
            if r >= rows {
                return Err(TensorError::IndexOutOfRange {
                    op: "gather_rows",
                    index: r,
                    bound: rows,
                });
            }
            data.extend_from_slice(&self.data[r * cols..(r + 1) * cols]);
        }
        Tensor::new(vec![indices.len(), cols], data)
    }
}

fn stable_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

// ── tape ────────────────────────────────────────────────────────────────

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    Matmul(usize, usize),
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    AddRow(usize, usize),
    Scale(usize, f64),
    AddConst(usize, f64),
    Relu(usize),
    Exp(usize),
    Log(usize),
    XLogX(usize),
    Sigmoid(usize),
    LogSigmoid(usize),
    LogSoftmax(usize),
    MeanAll(usize),
    SumAll(usize),
    MeanRows(usize),
    ConcatCols(usize, usize),
    SqDist(usize, usize),
    L2Dist(usize, usize),
    Pick(usize, Vec<usize>),
    GatherRows(usize, Vec<usize>),
}

struct Node {
    op: Op,
    value: Tensor,
    needs_grad: bool,
}

/// Ordered record of one forward pass. Single-threaded by design.
pub struct Tape {
    nodes: RefCell<Vec<Node>>,
}

impl Default for Tape {
    fn default() -> Self {
        Self::new()
    }
}

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy)]
pub struct Var<'t> {
    tape: &'t Tape,
    index: usize,
}

impl Tape {
    pub fn new() -> Self {
        Tape {
            nodes: RefCell::new(Vec::new()),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.borrow().is_empty()
    }

    /// Places a tensor on the tape. Gradient tracking follows the tensor's
    /// `requires_grad` flag.
    pub fn leaf(&self, value: Tensor) -> Var<'_> {
        let needs = value.requires_grad();
        self.push(Op::Leaf, value, needs)
    }

    /// Places a tensor on the tape with gradient tracking disabled.
    pub fn constant(&self, value: Tensor) -> Var<'_> {
        let mut v = value;
        v.requires_grad = false;
        self.push(Op::Leaf, v, false)
    }

    fn push(&self, op: Op, value: Tensor, needs_grad: bool) -> Var<'_> {
        let mut nodes = self.nodes.borrow_mut();
        let index = nodes.len();
        nodes.push(Node {
            op,
            value,
            needs_grad,
        });
        Var { tape: self, index }
    }

    fn value_of(&self, index: usize) -> Tensor {
        self.nodes.borrow()[index].value.clone()
    }

    fn needs(&self, index: usize) -> bool {
        self.nodes.borrow()[index].needs_grad
    }

    /// Recomputes every node from its inputs and returns the values.
    ///
    /// Replaying must reproduce the recorded forward values exactly; used by
    /// determinism checks.
    pub fn replay(&self) -> Result<Vec<Tensor>, TensorError> {
        let nodes = self.nodes.borrow();
        let mut values: Vec<Tensor> = Vec::with_capacity(nodes.len());
        for node in nodes.iter() {
            let v = match &node.op {
                Op::Leaf => node.value.clone(),
                Op::Matmul(a, b) => values[*a].matmul(&values[*b])?,
                Op::Add(a, b) => values[*a].add(&values[*b])?,
                Op::Sub(a, b) => values[*a].sub(&values[*b])?,
                Op::Mul(a, b) => values[*a].mul(&values[*b])?,
                Op::AddRow(a, b) => values[*a].add_row(&values[*b])?,
                Op::Scale(a, c) => values[*a].scale(*c),
                Op::AddConst(a, c) => values[*a].add_const(*c),
                Op::Relu(a) => values[*a].relu(),
                Op::Exp(a) => values[*a].exp(),
                Op::Log(a) => values[*a].log(),
                Op::XLogX(a) => values[*a].xlogx(),
                Op::Sigmoid(a) => values[*a].sigmoid(),
                Op::LogSigmoid(a) => values[*a].log_sigmoid(),
                Op::LogSoftmax(a) => values[*a].log_softmax()?,
                Op::MeanAll(a) => values[*a].mean_all()?,
                Op::SumAll(a) => values[*a].sum_all(),
                Op::MeanRows(a) => values[*a].mean_rows()?,
                Op::ConcatCols(a, b) => values[*a].concat_cols(&values[*b])?,
                Op::SqDist(a, b) => values[*a].sq_dist(&values[*b])?,
                Op::L2Dist(a, b) => values[*a].l2_dist(&values[*b])?,
                Op::Pick(a, idx) => values[*a].pick(idx)?,
                Op::GatherRows(a, idx) => values[*a].gather_rows(idx)?,
            };
            values.push(v);
        }
        Ok(values)
    }

    /// Accumulates gradients of a scalar loss for every `requires_grad` leaf.
    pub fn backward(&self, loss: Var<'_>) -> Result<Gradients, TensorError> {
        assert!(
            std::ptr::eq(self, loss.tape),
            "backward called with a loss from a different tape"
        );
        let nodes = self.nodes.borrow();
        let loss_node = &nodes[loss.index];
        if !loss_node.value.is_scalar() {
            return Err(TensorError::NonScalarLoss {
                shape: loss_node.value.shape().to_vec(),
            });
        }

        let mut grads: Vec<Option<Vec<f64>>> = vec![None; nodes.len()];
        grads[loss.index] = Some(vec![1.0]);

        for i in (0..=loss.index).rev() {
            let node = &nodes[i];
            if !node.needs_grad {
                continue;
            }
            // Inputs always precede their consumers, so split keeps the
            // upstream gradient readable while input slots are written.
            let (before, at) = grads.split_at_mut(i);
            let g = match &at[0] {
                Some(g) => g,
                None => continue,
            };
            accumulate_input_grads(node, g, &nodes, before);
        }

        let out = nodes
            .iter()
            .zip(grads)
            .map(|(node, g)| match g {
                Some(data) if node.needs_grad => {
                    Some(Tensor::new(node.value.shape().to_vec(), data).expect("gradient shape"))
                }
                _ => None,
            })
            .collect();
        Ok(Gradients { grads: out })
    }
}

fn add_into(slot: &mut Option<Vec<f64>>, len: usize, f: impl FnOnce(&mut [f64])) {
    let buf = slot.get_or_insert_with(|| vec![0.0; len]);
    f(buf);
}

fn accumulate_input_grads(
    node: &Node,
    g: &[f64],
    nodes: &[Node],
    grads: &mut [Option<Vec<f64>>],
) {
    // Skips inputs that do not require gradients; those slots stay None.
    let mut add_to = |idx: usize, f: &mut dyn FnMut(&mut [f64])| {
        if nodes[idx].needs_grad {
            add_into(&mut grads[idx], nodes[idx].value.len(), |buf| f(buf));
        }
    };

    match &node.op {
        Op::Leaf => {}
        Op::Matmul(ai, bi) => {
            let a = &nodes[*ai].value;
            let b = &nodes[*bi].value;
            let (m, k) = (a.shape()[0], a.shape()[1]);
            let n = b.shape()[1];
            add_to(*ai, &mut |buf| {
                for i in 0..m {
                    for p in 0..k {
                        let mut acc = 0.0;
                        for j in 0..n {
                            acc += g[i * n + j] * b.data()[p * n + j];
                        }
                        buf[i * k + p] += acc;
                    }
                }
            });
            add_to(*bi, &mut |buf| {
                for p in 0..k {
                    for j in 0..n {
                        let mut acc = 0.0;
                        for i in 0..m {
                            acc += a.data()[i * k + p] * g[i * n + j];
                        }
                        buf[p * n + j] += acc;
                    }
                }
            });
        }
        Op::Add(ai, bi) => {
            add_to(*ai, &mut |buf| {
                for (d, v) in buf.iter_mut().zip(g) {
                    *d += v;
                }
            });
            add_to(*bi, &mut |buf| {
                for (d, v) in buf.iter_mut().zip(g) {
                    *d += v;
                }
            });
        }
        Op::Sub(ai, bi) => {
            add_to(*ai, &mut |buf| {
                for (d, v) in buf.iter_mut().zip(g) {
                    *d += v;
                }
            });
            add_to(*bi, &mut |buf| {
                for (d, v) in buf.iter_mut().zip(g) {
                    *d -= v;
                }
            });
        }
        Op::Mul(ai, bi) => {
            let a = nodes[*ai].value.data().to_vec();
            let b = nodes[*bi].value.data().to_vec();
            add_to(*ai, &mut |buf| {
                for i in 0..buf.len() {
                    buf[i] += g[i] * b[i];
                }
            });
            add_to(*bi, &mut |buf| {
                for i in 0..buf.len() {
                    buf[i] += g[i] * a[i];
                }
            });
        }
        Op::AddRow(ai, bi) => {
            let (m, n) = (nodes[*ai].value.shape()[0], nodes[*ai].value.shape()[1]);
            add_to(*ai, &mut |buf| {
                for (d, v) in buf.iter_mut().zip(g) {
                    *d += v;
                }
            });
            add_to(*bi, &mut |buf| {
                for i in 0..m {
                    for j in 0..n {
                        buf[j] += g[i * n + j];
                    }
                }
            });
        }
        Op::Scale(ai, c) => {
            add_to(*ai, &mut |buf| {
                for i in 0..buf.len() {
                    buf[i] += g[i] * c;
                }
            });
        }
        Op::AddConst(ai, _) => {
            add_to(*ai, &mut |buf| {
                for (d, v) in buf.iter_mut().zip(g) {
                    *d += v;
                }
            });
        }
        Op::Relu(ai) => {
            let x = nodes[*ai].value.data().to_vec();
            add_to(*ai, &mut |buf| {
                for i in 0..buf.len() {
                    if x[i] > 0.0 {
                        buf[i] += g[i];
                    }
                }
            });
        }
        Op::Exp(ai) => {
            let out = node.value.data().to_vec();
            add_to(*ai, &mut |buf| {
                for i in 0..buf.len() {
                    buf[i] += g[i] * out[i];
                }
            });
        }
        Op::Log(ai) => {
            let x = nodes[*ai].value.data().to_vec();
            add_to(*ai, &mut |buf| {
                for i in 0..buf.len() {
                    buf[i] += g[i] / x[i];
                }
            });
        }
        Op::XLogX(ai) => {
            let x = nodes[*ai].value.data().to_vec();
            add_to(*ai, &mut |buf| {
                for i in 0..buf.len() {
                    if x[i] > 0.0 {
                        buf[i] += g[i] * (x[i].ln() + 1.0);
                    }
                }
            });
        }
        Op::Sigmoid(ai) => {
            let out = node.value.data().to_vec();
            add_to(*ai, &mut |buf| {
                for i in 0..buf.len() {
                    buf[i] += g[i] * out[i] * (1.0 - out[i]);
                }
            });
        }
        Op::LogSigmoid(ai) => {
            let x = nodes[*ai].value.data().to_vec();
            add_to(*ai, &mut |buf| {
                for i in 0..buf.len() {
                    buf[i] += g[i] * (1.0 - stable_sigmoid(x[i]));
                }
            });
        }
        Op::LogSoftmax(ai) => {
            let out = node.value.data().to_vec();
            let (m, n) = (node.value.shape()[0], node.value.shape()[1]);
            add_to(*ai, &mut |buf| {
                for i in 0..m {
                    let mut row_sum = 0.0;
                    for j in 0..n {
                        row_sum += g[i * n + j];
                    }
                    for j in 0..n {
                        buf[i * n + j] += g[i * n + j] - out[i * n + j].exp() * row_sum;
                    }
                }
            });
        }
        Op::MeanAll(ai) => {
            let len = nodes[*ai].value.len();
            let per = g[0] / len as f64;
            add_to(*ai, &mut |buf| {
                for d in buf.iter_mut() {
                    *d += per;
                }
            });
        }
        Op::SumAll(ai) => {
            add_to(*ai, &mut |buf| {
                for d in buf.iter_mut() {
                    *d += g[0];
                }
            });
        }
        Op::MeanRows(ai) => {
            let (m, n) = (nodes[*ai].value.shape()[0], nodes[*ai].value.shape()[1]);
            add_to(*ai, &mut |buf| {
                for i in 0..m {
                    for j in 0..n {
                        buf[i * n + j] += g[j] / m as f64;
                    }
                }
            });
        }
        Op::ConcatCols(ai, bi) => {
            let (m, p) = (nodes[*ai].value.shape()[0], nodes[*ai].value.shape()[1]);
            let q = nodes[*bi].value.shape()[1];
            add_to(*ai, &mut |buf| {
                for i in 0..m {
                    for j in 0..p {
                        buf[i * p + j] += g[i * (p + q) + j];
                    }
                }
            });
            add_to(*bi, &mut |buf| {
                for i in 0..m {
                    for j in 0..q {
                        buf[i * q + j] += g[i * (p + q) + p + j];
                    }
                }
            });
        }
        Op::SqDist(ai, bi) => {
            let a = nodes[*ai].value.data().to_vec();
            let b = nodes[*bi].value.data().to_vec();
            let (m, n) = (nodes[*ai].value.shape()[0], nodes[*ai].value.shape()[1]);
            add_to(*ai, &mut |buf| {
                for i in 0..m {
                    for j in 0..n {
                        buf[i * n + j] += 2.0 * (a[i * n + j] - b[i * n + j]) * g[i];
                    }
                }
            });
            add_to(*bi, &mut |buf| {
                for i in 0..m {
                    for j in 0..n {
                        buf[i * n + j] -= 2.0 * (a[i * n + j] - b[i * n + j]) * g[i];
                    }
                }
            });
        }
        Op::L2Dist(ai, bi) => {
            let a = nodes[*ai].value.data().to_vec();
            let b = nodes[*bi].value.data().to_vec();
            let dist = node.value.data().to_vec();
            let (m, n) = (nodes[*ai].value.shape()[0], nodes[*ai].value.shape()[1]);
            // Subgradient 0 at coincident rows.
            add_to(*ai, &mut |buf| {
                for i in 0..m {
                    if dist[i] == 0.0 {
                        continue;
                    }
                    for j in 0..n {
                        buf[i * n + j] += (a[i * n + j] - b[i * n + j]) / dist[i] * g[i];
                    }
                }
            });
            add_to(*bi, &mut |buf| {
                for i in 0..m {
                    if dist[i] == 0.0 {
                        continue;
                    }
                    for j in 0..n {
                        buf[i * n + j] -= (a[i * n + j] - b[i * n + j]) / dist[i] * g[i];
                    }
                }
            });
        }
        Op::Pick(ai, idx) => {
            let n = nodes[*ai].value.shape()[1];
            add_to(*ai, &mut |buf| {
                for (i, &j) in idx.iter().enumerate() {
                    buf[i * n + j] += g[i];
                }
            });
        }
        Op::GatherRows(ai, idx) => {
            let cols = nodes[*ai].value.shape()[1];
            add_to(*ai, &mut |buf| {
                for (i, &r) in idx.iter().enumerate() {
                    for j in 0..cols {
                        buf[r * cols + j] += g[i * cols + j];
                    }
                }
            });
        }
    }
}

/// Per-leaf gradients produced by [`Tape::backward`].
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    pub fn get(&self, var: Var<'_>) -> Option<&Tensor> {
        self.grads.get(var.index).and_then(|g| g.as_ref())
    }

    /// Gradient for a variable, or zeros of the given shape when the
    /// variable did not participate in the loss.
    pub fn get_or_zeros(&self, var: Var<'_>, shape: &[usize]) -> Tensor {
        match self.get(var) {
            Some(t) => t.clone(),
            None => Tensor::zeros(shape),
        }
    }
}

impl<'t> Var<'t> {
    pub fn value(&self) -> Tensor {
        self.tape.value_of(self.index)
    }

    pub fn shape(&self) -> Vec<usize> {
        self.tape.nodes.borrow()[self.index].value.shape().to_vec()
    }

    /// Scalar value of this variable; panics on non-scalars.
    pub fn item(&self) -> f64 {
        self.tape.nodes.borrow()[self.index].value.item()
    }

    fn same_tape(&self, other: Var<'t>, op: &'static str) {
        assert!(
            std::ptr::eq(self.tape, other.tape),
            "{}: operands recorded on different tapes",
            op
        );
    }

    fn unary(
        &self,
        op: impl FnOnce(usize) -> Op,
        value: Tensor,
    ) -> Var<'t> {
        let needs = self.tape.needs(self.index);
        self.tape.push(op(self.index), value, needs)
    }

    fn binary(
        &self,
        rhs: Var<'t>,
        op: impl FnOnce(usize, usize) -> Op,
        value: Tensor,
    ) -> Var<'t> {
        let needs = self.tape.needs(self.index) || self.tape.needs(rhs.index);
        self.tape.push(op(self.index, rhs.index), value, needs)
    }

    pub fn matmul(&self, rhs: Var<'t>) -> Result<Var<'t>, TensorError> {
        self.same_tape(rhs, "matmul");
        let v = self.value().matmul(&rhs.value())?;
        Ok(self.binary(rhs, Op::Matmul, v))
    }

    pub fn add(&self, rhs: Var<'t>) -> Result<Var<'t>, TensorError> {
        self.same_tape(rhs, "add");
        let v = self.value().add(&rhs.value())?;
        Ok(self.binary(rhs, Op::Add, v))
    }

    pub fn sub(&self, rhs: Var<'t>) -> Result<Var<'t>, TensorError> {
        self.same_tape(rhs, "sub");
        let v = self.value().sub(&rhs.value())?;
        Ok(self.binary(rhs, Op::Sub, v))
    }

    pub fn mul(&self, rhs: Var<'t>) -> Result<Var<'t>, TensorError> {
        self.same_tape(rhs, "mul");
        let v = self.value().mul(&rhs.value())?;
        Ok(self.binary(rhs, Op::Mul, v))
    }

    pub fn add_row(&self, row: Var<'t>) -> Result<Var<'t>, TensorError> {
        self.same_tape(row, "add_row");
        let v = self.value().add_row(&row.value())?;
        Ok(self.binary(row, Op::AddRow, v))
    }

    pub fn scale(&self, factor: f64) -> Var<'t> {
        let v = self.value().scale(factor);
        self.unary(|a| Op::Scale(a, factor), v)
    }

    pub fn add_const(&self, constant: f64) -> Var<'t> {
        let v = self.value().add_const(constant);
        self.unary(|a| Op::AddConst(a, constant), v)
    }

    pub fn relu(&self) -> Var<'t> {
        let v = self.value().relu();
        self.unary(Op::Relu, v)
    }

    pub fn exp(&self) -> Var<'t> {
        let v = self.value().exp();
        self.unary(Op::Exp, v)
    }

    pub fn log(&self) -> Var<'t> {
        let v = self.value().log();
        self.unary(Op::Log, v)
    }

    pub fn xlogx(&self) -> Var<'t> {
        let v = self.value().xlogx();
        self.unary(Op::XLogX, v)
    }

    pub fn sigmoid(&self) -> Var<'t> {
        let v = self.value().sigmoid();
        self.unary(Op::Sigmoid, v)
    }

    pub fn log_sigmoid(&self) -> Var<'t> {
        let v = self.value().log_sigmoid();
        self.unary(Op::LogSigmoid, v)
    }

    pub fn log_softmax(&self) -> Result<Var<'t>, TensorError> {
        let v = self.value().log_softmax()?;
        Ok(self.unary(Op::LogSoftmax, v))
    }

    pub fn mean_all(&self) -> Result<Var<'t>, TensorError> {
        let v = self.value().mean_all()?;
        Ok(self.unary(Op::MeanAll, v))
    }

    pub fn sum_all(&self) -> Var<'t> {
        let v = self.value().sum_all();
        self.unary(Op::SumAll, v)
    }

    pub fn mean_rows(&self) -> Result<Var<'t>, TensorError> {
        let v = self.value().mean_rows()?;
        Ok(self.unary(Op::MeanRows, v))
    }

    pub fn concat_cols(&self, rhs: Var<'t>) -> Result<Var<'t>, TensorError> {
        self.same_tape(rhs, "concat_cols");
        let v = self.value().concat_cols(&rhs.value())?;
        Ok(self.binary(rhs, Op::ConcatCols, v))
    }

    pub fn sq_dist(&self, rhs: Var<'t>) -> Result<Var<'t>, TensorError> {
        self.same_tape(rhs, "sq_dist");
        let v = self.value().sq_dist(&rhs.value())?;
        Ok(self.binary(rhs, Op::SqDist, v))
    }

    pub fn l2_dist(&self, rhs: Var<'t>) -> Result<Var<'t>, TensorError> {
        self.same_tape(rhs, "l2_dist");
        let v = self.value().l2_dist(&rhs.value())?;
        Ok(self.binary(rhs, Op::L2Dist, v))
    }

    pub fn pick(&self, indices: &[usize]) -> Result<Var<'t>, TensorError> {
        let v = self.value().pick(indices)?;
        Ok(self.unary(|a| Op::Pick(a, indices.to_vec()), v))
    }

    pub fn gather_rows(&self, indices: &[usize]) -> Result<Var<'t>, TensorError> {
        let v = self.value().gather_rows(indices)?;
        Ok(self.unary(|a| Op::GatherRows(a, indices.to_vec()), v))
    }
}

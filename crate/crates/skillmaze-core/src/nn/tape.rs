//! Reverse-mode automatic differentiation over a linear tape.
//!
//! Operations are recorded eagerly in topological order; [`Tape::backward`]
//! walks the tape once in reverse, accumulating gradients with hand-written
//! vector-Jacobian products. Only the operations needed for MLP chains and
//! the losses in this crate are provided.

use crate::{Error, Result};

use super::Tensor;

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TensorId(usize);

/// Minimum row norm accepted by `row_l2_normalize`; smaller norms are an
/// error rather than a silent clamp.
pub(crate) const NORM_FLOOR: f64 = 1e-8;

#[derive(Debug)]
enum Op {
    Leaf,
    Add(usize, usize),
    Sub(usize, usize),
    MulElem(usize, usize),
    Scale(usize, f64),
    MatMul(usize, usize),
    /// `a @ b^T`, with both operands stored row-major.
    MatMulNT(usize, usize),
    /// `[n,m] + [1,m]` row broadcast.
    AddBias(usize, usize),
    Relu(usize),
    Tanh(usize),
    Exp(usize),
    Ln(usize),
    Sum(usize),
    Mean(usize),
    RowL2Normalize(usize),
    ConcatCols(usize, usize),
    /// Row-wise dot product of two `[n,m]` tensors, producing `[n,1]`.
    RowDot(usize, usize),
    /// Per-row `log(sum_j mask_ij * exp(x_ij))` with a constant 0/1 mask,
    /// computed with a detached max shift. Produces `[n,1]`.
    MaskedLogSumExpRows(usize, Vec<f64>),
    /// Picks one column per row, producing `[n,1]`.
    RowPick(usize, Vec<usize>),
}

struct Node {
    op: Op,
    rows: usize,
    cols: usize,
    value: Vec<f64>,
    grad: Vec<f64>,
}

/// Linear autodiff tape. Build a fresh tape per forward/backward pass.
#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

// ── dense kernels (also used by VJPs) ──────────────────────────────────────

/// `c[n,m] += a[n,k] @ b[k,m]`
fn mm_nn_acc(a: &[f64], b: &[f64], c: &mut [f64], n: usize, k: usize, m: usize) {
    for i in 0..n {
        let crow = &mut c[i * m..(i + 1) * m];
        for kk in 0..k {
            let aik = a[i * k + kk];
            if aik == 0.0 {
                continue;
            }
            let brow = &b[kk * m..(kk + 1) * m];
            for j in 0..m {
                crow[j] += aik * brow[j];
            }
        }
    }
}

/// `c[n,m] += a[n,k] @ b[m,k]^T`
fn mm_nt_acc(a: &[f64], b: &[f64], c: &mut [f64], n: usize, k: usize, m: usize) {
    for i in 0..n {
        let arow = &a[i * k..(i + 1) * k];
        let crow = &mut c[i * m..(i + 1) * m];
        for j in 0..m {
            let brow = &b[j * k..(j + 1) * k];
            let mut acc = 0.0;
            for kk in 0..k {
                acc += arow[kk] * brow[kk];
            }
            crow[j] += acc;
        }
    }
}

/// `c[p,q] += a[n,p]^T @ b[n,q]`
fn mm_tn_acc(a: &[f64], b: &[f64], c: &mut [f64], n: usize, p: usize, q: usize) {
    for i in 0..n {
        let brow = &b[i * q..(i + 1) * q];
        for pp in 0..p {
            let aip = a[i * p + pp];
            if aip == 0.0 {
                continue;
            }
            let crow = &mut c[pp * q..(pp + 1) * q];
            for j in 0..q {
                crow[j] += aip * brow[j];
            }
        }
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Inserts a constant/parameter leaf, copying the tensor's values.
    pub fn leaf(&mut self, t: &Tensor) -> TensorId {
        self.push(Op::Leaf, t.rows(), t.cols(), t.data().to_vec())
    }

    /// Shape of a node.
    pub fn dims(&self, id: TensorId) -> (usize, usize) {
        let n = &self.nodes[id.0];
        (n.rows, n.cols)
    }

    /// Forward value of a node.
    pub fn value(&self, id: TensorId) -> &[f64] {
        &self.nodes[id.0].value
    }

    /// Forward value of a `1x1` node.
    pub fn value_scalar(&self, id: TensorId) -> f64 {
        debug_assert_eq!(self.nodes[id.0].value.len(), 1);
        self.nodes[id.0].value[0]
    }

    /// Snapshot of a node's value as a [`Tensor`].
    pub fn value_tensor(&self, id: TensorId) -> Tensor {
        let n = &self.nodes[id.0];
        Tensor::from_vec(n.rows, n.cols, n.value.clone()).expect("node shape is valid")
    }

    /// Gradient of the last `backward` call with respect to node `id`.
    pub fn grad(&self, id: TensorId) -> &[f64] {
        &self.nodes[id.0].grad
    }

    fn push(&mut self, op: Op, rows: usize, cols: usize, value: Vec<f64>) -> TensorId {
        debug_assert_eq!(value.len(), rows * cols);
        debug_assert!(
            value.iter().all(|v| v.is_finite()),
            "non-finite value produced by {:?}",
            op
        );
        let grad = vec![0.0; value.len()];
        self.nodes.push(Node { op, rows, cols, value, grad });
        TensorId(self.nodes.len() - 1)
    }

    fn node(&self, id: TensorId) -> &Node {
        &self.nodes[id.0]
    }

    fn same_shape(&self, op: &'static str, a: TensorId, b: TensorId) -> Result<(usize, usize)> {
        let (ar, ac) = self.dims(a);
        let (br, bc) = self.dims(b);
        if (ar, ac) != (br, bc) {
            return Err(Error::Shape { op, details: format!("{}x{} vs {}x{}", ar, ac, br, bc) });
        }
        Ok((ar, ac))
    }

    // ── elementwise ────────────────────────────────────────────────────────

    pub fn add(&mut self, a: TensorId, b: TensorId) -> Result<TensorId> {
        let (r, c) = self.same_shape("add", a, b)?;
        let v = self
            .node(a)
            .value
            .iter()
            .zip(&self.node(b).value)
            .map(|(x, y)| x + y)
            .collect();
        Ok(self.push(Op::Add(a.0, b.0), r, c, v))
    }

    pub fn sub(&mut self, a: TensorId, b: TensorId) -> Result<TensorId> {
        let (r, c) = self.same_shape("sub", a, b)?;
        let v = self
            .node(a)
            .value
            .iter()
            .zip(&self.node(b).value)
            .map(|(x, y)| x - y)
            .collect();
        Ok(self.push(Op::Sub(a.0, b.0), r, c, v))
    }

    pub fn mul_elem(&mut self, a: TensorId, b: TensorId) -> Result<TensorId> {
        let (r, c) = self.same_shape("mul_elem", a, b)?;
        let v = self
            .node(a)
            .value
            .iter()
            .zip(&self.node(b).value)
            .map(|(x, y)| x * y)
            .collect();
        Ok(self.push(Op::MulElem(a.0, b.0), r, c, v))
    }

    pub fn scale(&mut self, a: TensorId, factor: f64) -> TensorId {
        let (r, c) = self.dims(a);
        let v = self.node(a).value.iter().map(|x| x * factor).collect();
        self.push(Op::Scale(a.0, factor), r, c, v)
    }

    // ── linear algebra ─────────────────────────────────────────────────────

    /// `a[n,k] @ b[k,m]`
    pub fn matmul(&mut self, a: TensorId, b: TensorId) -> Result<TensorId> {
        let (n, k) = self.dims(a);
        let (kb, m) = self.dims(b);
        if k != kb {
            return Err(Error::Shape {
                op: "matmul",
                details: format!("{}x{} @ {}x{}", n, k, kb, m),
            });
        }
        let mut v = vec![0.0; n * m];
        mm_nn_acc(&self.node(a).value, &self.node(b).value, &mut v, n, k, m);
        Ok(self.push(Op::MatMul(a.0, b.0), n, m, v))
    }

    /// `a[n,k] @ b[m,k]^T` — similarity-matrix form, both operands row-major.
    pub fn matmul_nt(&mut self, a: TensorId, b: TensorId) -> Result<TensorId> {
        let (n, k) = self.dims(a);
        let (m, kb) = self.dims(b);
        if k != kb {
            return Err(Error::Shape {
                op: "matmul_nt",
                details: format!("{}x{} @ ({}x{})^T", n, k, m, kb),
            });
        }
        let mut v = vec![0.0; n * m];
        mm_nt_acc(&self.node(a).value, &self.node(b).value, &mut v, n, k, m);
        Ok(self.push(Op::MatMulNT(a.0, b.0), n, m, v))
    }

    /// Adds a `1xm` bias row to every row of `a[n,m]`.
    pub fn add_bias(&mut self, a: TensorId, bias: TensorId) -> Result<TensorId> {
        let (n, m) = self.dims(a);
        let (br, bc) = self.dims(bias);
        if br != 1 || bc != m {
            return Err(Error::Shape {
                op: "add_bias",
                details: format!("{}x{} + {}x{}", n, m, br, bc),
            });
        }
        let bv = &self.node(bias).value;
        let mut v = self.node(a).value.clone();
        for i in 0..n {
            for j in 0..m {
                v[i * m + j] += bv[j];
            }
        }
        Ok(self.push(Op::AddBias(a.0, bias.0), n, m, v))
    }

    // ── nonlinearities ─────────────────────────────────────────────────────

    pub fn relu(&mut self, a: TensorId) -> TensorId {
        let (r, c) = self.dims(a);
        let v = self.node(a).value.iter().map(|x| x.max(0.0)).collect();
        self.push(Op::Relu(a.0), r, c, v)
    }

    pub fn tanh(&mut self, a: TensorId) -> TensorId {
        let (r, c) = self.dims(a);
        let v = self.node(a).value.iter().map(|x| x.tanh()).collect();
        self.push(Op::Tanh(a.0), r, c, v)
    }

    pub fn exp(&mut self, a: TensorId) -> TensorId {
        let (r, c) = self.dims(a);
        let v = self.node(a).value.iter().map(|x| x.exp()).collect();
        self.push(Op::Exp(a.0), r, c, v)
    }

    /// Natural log; errors on non-positive entries.
    pub fn ln(&mut self, a: TensorId) -> Result<TensorId> {
        let (r, c) = self.dims(a);
        if self.node(a).value.iter().any(|&x| x <= 0.0) {
            return Err(Error::Degenerate { op: "ln", details: "non-positive entry".into() });
        }
        let v = self.node(a).value.iter().map(|x| x.ln()).collect();
        Ok(self.push(Op::Ln(a.0), r, c, v))
    }

    // ── reductions ─────────────────────────────────────────────────────────

    pub fn sum(&mut self, a: TensorId) -> TensorId {
        let v = self.node(a).value.iter().sum();
        self.push(Op::Sum(a.0), 1, 1, vec![v])
    }

    pub fn mean(&mut self, a: TensorId) -> TensorId {
        let n = self.node(a).value.len() as f64;
        let v = self.node(a).value.iter().sum::<f64>() / n;
        self.push(Op::Mean(a.0), 1, 1, vec![v])
    }

    // ── structured ops ─────────────────────────────────────────────────────

    /// Scales every row of `a` to unit Euclidean norm; rows with norm below
    /// [`NORM_FLOOR`] are an error.
    pub fn row_l2_normalize(&mut self, a: TensorId) -> Result<TensorId> {
        let (n, m) = self.dims(a);
        let av = &self.node(a).value;
        let mut v = vec![0.0; n * m];
        for i in 0..n {
            let row = &av[i * m..(i + 1) * m];
            let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm < NORM_FLOOR {
                return Err(Error::Degenerate {
                    op: "row_l2_normalize",
                    details: format!("row {} has norm {:.3e}", i, norm),
                });
            }
            for j in 0..m {
                v[i * m + j] = row[j] / norm;
            }
        }
        Ok(self.push(Op::RowL2Normalize(a.0), n, m, v))
    }

    /// Horizontal concatenation `[a | b]` of two tensors with equal row counts.
    pub fn concat_cols(&mut self, a: TensorId, b: TensorId) -> Result<TensorId> {
        let (n, ma) = self.dims(a);
        let (nb, mb) = self.dims(b);
        if n != nb {
            return Err(Error::Shape {
                op: "concat_cols",
                details: format!("{}x{} | {}x{}", n, ma, nb, mb),
            });
        }
        let m = ma + mb;
        let mut v = vec![0.0; n * m];
        for i in 0..n {
            v[i * m..i * m + ma].copy_from_slice(&self.node(a).value[i * ma..(i + 1) * ma]);
            v[i * m + ma..(i + 1) * m].copy_from_slice(&self.node(b).value[i * mb..(i + 1) * mb]);
        }
        Ok(self.push(Op::ConcatCols(a.0, b.0), n, m, v))
    }

    /// Row-wise dot product of two `[n,m]` tensors, producing `[n,1]`.
    pub fn row_dot(&mut self, a: TensorId, b: TensorId) -> Result<TensorId> {
        let (n, m) = self.same_shape("row_dot", a, b)?;
        let av = &self.node(a).value;
        let bv = &self.node(b).value;
        let mut v = vec![0.0; n];
        for i in 0..n {
            let mut acc = 0.0;
            for j in 0..m {
                acc += av[i * m + j] * bv[i * m + j];
            }
            v[i] = acc;
        }
        Ok(self.push(Op::RowDot(a.0, b.0), n, 1, v))
    }

    /// Per-row masked log-sum-exp with a constant 0/1 mask of the same shape.
    /// Every row must have at least one unmasked entry. The max shift is
    /// detached, which leaves both the value and the gradient exact.
    pub fn masked_logsumexp_rows(&mut self, a: TensorId, mask: &[f64]) -> Result<TensorId> {
        let (n, m) = self.dims(a);
        if mask.len() != n * m {
            return Err(Error::Shape {
                op: "masked_logsumexp_rows",
                details: format!("mask len {} for {}x{}", mask.len(), n, m),
            });
        }
        let av = &self.node(a).value;
        let mut v = vec![0.0; n];
        for i in 0..n {
            let mut mx = f64::NEG_INFINITY;
            for j in 0..m {
                if mask[i * m + j] != 0.0 {
                    mx = mx.max(av[i * m + j]);
                }
            }
            if mx == f64::NEG_INFINITY {
                return Err(Error::Degenerate {
                    op: "masked_logsumexp_rows",
                    details: format!("row {} is fully masked", i),
                });
            }
            let mut s = 0.0;
            for j in 0..m {
                if mask[i * m + j] != 0.0 {
                    s += (av[i * m + j] - mx).exp();
                }
            }
            v[i] = mx + s.ln();
        }
        Ok(self.push(Op::MaskedLogSumExpRows(a.0, mask.to_vec()), n, 1, v))
    }

    /// Picks column `idx[i]` from row `i`, producing `[n,1]`.
    pub fn row_pick(&mut self, a: TensorId, idx: &[usize]) -> Result<TensorId> {
        let (n, m) = self.dims(a);
        if idx.len() != n || idx.iter().any(|&j| j >= m) {
            return Err(Error::Shape {
                op: "row_pick",
                details: format!("{} indices for {}x{}", idx.len(), n, m),
            });
        }
        let av = &self.node(a).value;
        let v = idx.iter().enumerate().map(|(i, &j)| av[i * m + j]).collect();
        Ok(self.push(Op::RowPick(a.0, idx.to_vec()), n, 1, v))
    }

    // ── backward ───────────────────────────────────────────────────────────

    /// Accumulates `d loss / d node` into every node's gradient buffer.
    /// `loss` must be a finite `1x1` node on this tape.
    pub fn backward(&mut self, loss: TensorId) -> Result<()> {
        let ln = self.node(loss);
        if ln.rows != 1 || ln.cols != 1 {
            return Err(Error::Shape {
                op: "backward",
                details: format!("loss is {}x{}, expected 1x1", ln.rows, ln.cols),
            });
        }
        if !ln.value[0].is_finite() {
            return Err(Error::NonFinite("backward loss".into()));
        }
        self.nodes[loss.0].grad[0] = 1.0;

        for i in (0..self.nodes.len()).rev() {
            // Parents always precede node i, so split at i to borrow the node
            // immutably and its parents mutably.
            let (before, rest) = self.nodes.split_at_mut(i);
            let node = &rest[0];
            if node.grad.iter().all(|&g| g == 0.0) {
                continue;
            }
            let g = &node.grad;
            let (rows, cols) = (node.rows, node.cols);
            match &node.op {
                Op::Leaf => {}
                Op::Add(a, b) => {
                    for (pa, gi) in before[*a].grad.iter_mut().zip(g) {
                        *pa += gi;
                    }
                    for (pb, gi) in before[*b].grad.iter_mut().zip(g) {
                        *pb += gi;
                    }
                }
                Op::Sub(a, b) => {
                    for (pa, gi) in before[*a].grad.iter_mut().zip(g) {
                        *pa += gi;
                    }
                    for (pb, gi) in before[*b].grad.iter_mut().zip(g) {
                        *pb -= gi;
                    }
                }
                Op::MulElem(a, b) => {
                    if *a == *b {
                        let pa = &mut before[*a];
                        for k in 0..g.len() {
                            pa.grad[k] += 2.0 * g[k] * pa.value[k];
                        }
                    } else {
                        let (lo, hi) = (a.min(b), a.max(b));
                        let (left, right) = before.split_at_mut(*hi);
                        let (pa, pb) = if a < b {
                            (&mut left[*lo], &mut right[0])
                        } else {
                            (&mut right[0], &mut left[*lo])
                        };
                        for k in 0..g.len() {
                            pa.grad[k] += g[k] * pb.value[k];
                            pb.grad[k] += g[k] * pa.value[k];
                        }
                    }
                }
                Op::Scale(a, f) => {
                    for (pa, gi) in before[*a].grad.iter_mut().zip(g) {
                        *pa += f * gi;
                    }
                }
                Op::MatMul(a, b) => {
                    let k = before[*a].cols;
                    if *a == *b {
                        // x @ x only occurs with square x; handle via temporaries.
                        let val = before[*a].value.clone();
                        let mut da = vec![0.0; val.len()];
                        mm_nt_acc(g, &val, &mut da, rows, cols, k);
                        mm_tn_acc(&val, g, &mut da, rows, k, cols);
                        for (pa, d) in before[*a].grad.iter_mut().zip(&da) {
                            *pa += d;
                        }
                    } else {
                        let (pa, pb) = two_mut(before, *a, *b);
                        // da += g @ b^T ; db += a^T @ g
                        mm_nt_acc(g, &pb.value, &mut pa.grad, rows, cols, k);
                        mm_tn_acc(&pa.value, g, &mut pb.grad, rows, k, cols);
                    }
                }
                Op::MatMulNT(a, b) => {
                    let k = before[*a].cols;
                    if *a == *b {
                        let val = before[*a].value.clone();
                        let mut da = vec![0.0; val.len()];
                        mm_nn_acc(g, &val, &mut da, rows, cols, k);
                        mm_tn_acc(g, &val, &mut da, rows, cols, k);
                        for (pa, d) in before[*a].grad.iter_mut().zip(&da) {
                            *pa += d;
                        }
                    } else {
                        let (pa, pb) = two_mut(before, *a, *b);
                        // da += g @ b ; db += g^T @ a
                        mm_nn_acc(g, &pb.value, &mut pa.grad, rows, cols, k);
                        mm_tn_acc(g, &pa.value, &mut pb.grad, rows, cols, k);
                    }
                }
                Op::AddBias(a, b) => {
                    for (pa, gi) in before[*a].grad.iter_mut().zip(g) {
                        *pa += gi;
                    }
                    let pb = &mut before[*b];
                    for i2 in 0..rows {
                        for j in 0..cols {
                            pb.grad[j] += g[i2 * cols + j];
                        }
                    }
                }
                Op::Relu(a) => {
                    let pa = &mut before[*a];
                    for k in 0..g.len() {
                        if pa.value[k] > 0.0 {
                            pa.grad[k] += g[k];
                        }
                    }
                }
                Op::Tanh(a) => {
                    let pa = &mut before[*a];
                    for k in 0..g.len() {
                        let y = node.value[k];
                        pa.grad[k] += g[k] * (1.0 - y * y);
                    }
                }
                Op::Exp(a) => {
                    let pa = &mut before[*a];
                    for k in 0..g.len() {
                        pa.grad[k] += g[k] * node.value[k];
                    }
                }
                Op::Ln(a) => {
                    let pa = &mut before[*a];
                    for k in 0..g.len() {
                        pa.grad[k] += g[k] / pa.value[k];
                    }
                }
                Op::Sum(a) => {
                    let pa = &mut before[*a];
                    for d in pa.grad.iter_mut() {
                        *d += g[0];
                    }
                }
                Op::Mean(a) => {
                    let pa = &mut before[*a];
                    let scale = g[0] / pa.value.len() as f64;
                    for d in pa.grad.iter_mut() {
                        *d += scale;
                    }
                }
                Op::RowL2Normalize(a) => {
                    let pa = &mut before[*a];
                    for i2 in 0..rows {
                        let x = &pa.value[i2 * cols..(i2 + 1) * cols];
                        let y = &node.value[i2 * cols..(i2 + 1) * cols];
                        let gr = &g[i2 * cols..(i2 + 1) * cols];
                        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                        let gy: f64 = gr.iter().zip(y).map(|(gi, yi)| gi * yi).sum();
                        let dst = &mut pa.grad[i2 * cols..(i2 + 1) * cols];
                        for j in 0..cols {
                            dst[j] += (gr[j] - y[j] * gy) / norm;
                        }
                    }
                }
                Op::ConcatCols(a, b) => {
                    let ma = before[*a].cols;
                    let mb = before[*b].cols;
                    {
                        let pa = &mut before[*a];
                        for i2 in 0..rows {
                            for j in 0..ma {
                                pa.grad[i2 * ma + j] += g[i2 * cols + j];
                            }
                        }
                    }
                    let pb = &mut before[*b];
                    for i2 in 0..rows {
                        for j in 0..mb {
                            pb.grad[i2 * mb + j] += g[i2 * cols + ma + j];
                        }
                    }
                }
                Op::RowDot(a, b) => {
                    let m = before[*a].cols;
                    if a == b {
                        let pa = &mut before[*a];
                        for i2 in 0..rows {
                            let gi = g[i2];
                            for j in 0..m {
                                pa.grad[i2 * m + j] += 2.0 * gi * pa.value[i2 * m + j];
                            }
                        }
                    } else {
                        let (pa, pb) = two_mut(before, *a, *b);
                        for i2 in 0..rows {
                            let gi = g[i2];
                            for j in 0..m {
                                pa.grad[i2 * m + j] += gi * pb.value[i2 * m + j];
                                pb.grad[i2 * m + j] += gi * pa.value[i2 * m + j];
                            }
                        }
                    }
                }
                Op::MaskedLogSumExpRows(a, mask) => {
                    let pa = &mut before[*a];
                    let m = pa.cols;
                    for i2 in 0..rows {
                        let gi = g[i2];
                        let lse = node.value[i2];
                        for j in 0..m {
                            let w = mask[i2 * m + j];
                            if w != 0.0 {
                                pa.grad[i2 * m + j] += gi * w * (pa.value[i2 * m + j] - lse).exp();
                            }
                        }
                    }
                }
                Op::RowPick(a, idx) => {
                    let pa = &mut before[*a];
                    let m = pa.cols;
                    for i2 in 0..rows {
                        pa.grad[i2 * m + idx[i2]] += g[i2];
                    }
                }
            }
        }
        Ok(())
    }
}

/// Distinct mutable borrows of two earlier nodes.
fn two_mut(nodes: &mut [Node], a: usize, b: usize) -> (&mut Node, &mut Node) {
    debug_assert_ne!(a, b);
    if a < b {
        let (l, r) = nodes.split_at_mut(b);
        (&mut l[a], &mut r[0])
    } else {
        let (l, r) = nodes.split_at_mut(a);
        (&mut r[0], &mut l[b])
    }
}

use super::kernels;
use super::Tensor;
use crate::error::{Error, Result};

/// Handle to a node of a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn id(self) -> usize {
        self.0
    }
}

/// How the smaller operand of a binary op is repeated over the larger one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Broadcast {
    Same,
    /// Right operand repeats along the leading axis (or is a scalar).
    Right,
    /// Left operand repeats along the leading axis (or is a scalar).
    Left,
}

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    Add(Var, Var, Broadcast),
    Sub(Var, Var, Broadcast),
    Mul(Var, Var, Broadcast),
    MatMul(Var, Var),
    Concat(Vec<Var>),
    Relu(Var),
    Tanh(Var),
    Square(Var),
    Abs(Var),
    Sum(Var, Option<usize>),
    Mean(Var, Option<usize>),
    Max(Var, Vec<usize>),
    GatherRows(Var, Vec<usize>),
}

#[derive(Debug)]
struct Node {
    op: Op,
    value: Tensor,
    requires_grad: bool,
}

/// Append-only computation tape.
///
/// Nodes created with [`Graph::param`] receive gradients; nodes created with
/// [`Graph::constant`] do not, and neither do results that depend only on
/// constants.
#[derive(Debug, Default)]
pub struct Graph {
    nodes: Vec<Node>,
}

/// Adjoints produced by [`Graph::backward`].
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
    shapes: Vec<Vec<usize>>,
}

impl Gradients {
    /// Gradient for `v`; exact zeros when the root does not depend on `v`.
    pub fn get(&self, v: Var) -> Tensor {
        match &self.grads[v.0] {
            Some(t) => t.clone(),
            None => Tensor::zeros(&self.shapes[v.0]),
        }
    }

    /// Moves the gradient for `v` out of the map.
    pub fn take(&mut self, v: Var) -> Tensor {
        self.grads[v.0]
            .take()
            .unwrap_or_else(|| Tensor::zeros(&self.shapes[v.0]))
    }
}

fn shape_err(op: &str, a: &[usize], b: &[usize]) -> Error {
    Error::Shape(format!("{op}: incompatible shapes {a:?} and {b:?}"))
}

/// `small` repeats over `big` when it is a scalar, when it equals `big`
/// without its leading axis, or when it equals `big` with a leading axis of 1.
fn repeats_over(small: &[usize], big: &[usize]) -> bool {
    if small.is_empty() {
        return true;
    }
    if big.is_empty() {
        return false;
    }
    small == &big[1..] || (small.len() == big.len() && small[0] == 1 && small[1..] == big[1..])
}

fn broadcast(op: &str, a: &[usize], b: &[usize]) -> Result<Broadcast> {
    if a == b {
        Ok(Broadcast::Same)
    } else if repeats_over(b, a) {
        Ok(Broadcast::Right)
    } else if repeats_over(a, b) {
        Ok(Broadcast::Left)
    } else {
        Err(shape_err(op, a, b))
    }
}

/// Splits `shape` around `axis` into (outer, axis length, inner) extents.
fn split_axis(shape: &[usize], axis: usize) -> (usize, usize, usize) {
    let outer = shape[..axis].iter().product();
    let inner = shape[axis + 1..].iter().product();
    (outer, shape[axis], inner)
}

fn reduced_shape(shape: &[usize], axis: Option<usize>) -> Vec<usize> {
    match axis {
        None => vec![],
        Some(ax) => {
            let mut s = shape.to_vec();
            s[ax] = 1;
            s
        }
    }
}

/// Sums `g` (shaped like the larger operand) down to `len` values by
/// accumulating every `len`-periodic slot.
fn fold_broadcast(g: &[f64], len: usize) -> Vec<f64> {
    let mut out = vec![0.0; len];
    for chunk in g.chunks(len) {
        for (o, &v) in out.iter_mut().zip(chunk) {
            *o += v;
        }
    }
    out
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Leaf that receives a gradient.
    pub fn param(&mut self, value: Tensor) -> Result<Var> {
        self.leaf(value, true)
    }

    /// Leaf treated as a constant.
    pub fn constant(&mut self, value: Tensor) -> Result<Var> {
        self.leaf(value, false)
    }

    fn leaf(&mut self, value: Tensor, requires_grad: bool) -> Result<Var> {
        value.check_finite("leaf")?;
        self.nodes.push(Node {
            op: Op::Leaf,
            value,
            requires_grad,
        });
        Ok(Var(self.nodes.len() - 1))
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        self.nodes[v.0].value.shape()
    }

    fn push(&mut self, op: Op, value: Tensor, inputs: &[Var], what: &str) -> Result<Var> {
        value.check_finite(what)?;
        let requires_grad = inputs.iter().any(|v| self.nodes[v.0].requires_grad);
        self.nodes.push(Node {
            op,
            value,
            requires_grad,
        });
        Ok(Var(self.nodes.len() - 1))
    }

    fn binary(
        &mut self,
        name: &str,
        a: Var,
        b: Var,
        f: impl Fn(f64, f64) -> f64,
        make: impl FnOnce(Var, Var, Broadcast) -> Op,
    ) -> Result<Var> {
        let (ta, tb) = (self.value(a), self.value(b));
        let bc = broadcast(name, ta.shape(), tb.shape())?;
        let (da, db) = (ta.data(), tb.data());
        let (shape, data): (Vec<usize>, Vec<f64>) = match bc {
            Broadcast::Same => (
                ta.shape().to_vec(),
                da.iter().zip(db).map(|(&x, &y)| f(x, y)).collect(),
            ),
            Broadcast::Right => {
                let len = db.len();
                (
                    ta.shape().to_vec(),
                    da.iter().enumerate().map(|(i, &x)| f(x, db[i % len])).collect(),
                )
            }
            Broadcast::Left => {
                let len = da.len();
                (
                    tb.shape().to_vec(),
                    db.iter().enumerate().map(|(i, &y)| f(da[i % len], y)).collect(),
                )
            }
        };
        let value = Tensor::new(shape, data)?;
        self.push(make(a, b, bc), value, &[a, b], name)
    }

    /// Elementwise `a + b`.
    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary("add", a, b, |x, y| x + y, Op::Add)
    }

    /// Elementwise `a - b`.
    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary("sub", a, b, |x, y| x - y, Op::Sub)
    }

    /// Elementwise `a * b`.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary("mul", a, b, |x, y| x * y, Op::Mul)
    }

    /// `a * s` for a constant scalar `s`.
    pub fn scale(&mut self, a: Var, s: f64) -> Result<Var> {
        let c = self.constant(Tensor::scalar(s))?;
        self.mul(a, c)
    }

    /// Matrix product of two rank-2 tensors.
    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ta, tb) = (self.value(a), self.value(b));
        let (sa, sb) = (ta.shape(), tb.shape());
        if sa.len() != 2 || sb.len() != 2 || sa[1] != sb[0] {
            return Err(shape_err("matmul", sa, sb));
        }
        let (n, k, m) = (sa[0], sa[1], sb[1]);
        let value = Tensor::new(vec![n, m], kernels::matmul(ta.data(), tb.data(), n, k, m))?;
        self.push(Op::MatMul(a, b), value, &[a, b], "matmul")
    }

    /// Concatenation along the last axis.
    pub fn concat(&mut self, parts: &[Var]) -> Result<Var> {
        let first = parts
            .first()
            .ok_or_else(|| Error::InvalidArgument("concat of zero tensors".into()))?;
        let lead = self.shape(*first);
        if lead.is_empty() {
            return Err(Error::Shape("concat: scalars have no last axis".into()));
        }
        let lead = lead[..lead.len() - 1].to_vec();
        let mut width = 0;
        for &p in parts {
            let s = self.shape(p);
            if s.len() != lead.len() + 1 || s[..lead.len()] != lead[..] {
                return Err(shape_err("concat", self.shape(*first), s));
            }
            width += s[s.len() - 1];
        }
        let rows: usize = lead.iter().product();
        let mut data = Vec::with_capacity(rows * width);
        for r in 0..rows {
            for &p in parts {
                let t = self.value(p);
                let w = t.last_dim();
                data.extend_from_slice(&t.data()[r * w..(r + 1) * w]);
            }
        }
        let mut shape = lead;
        shape.push(width);
        let value = Tensor::new(shape, data)?;
        self.push(Op::Concat(parts.to_vec()), value, parts, "concat")
    }

    fn unary(&mut self, name: &str, a: Var, f: impl Fn(f64) -> f64, op: Op) -> Result<Var> {
        let t = self.value(a);
        let value = Tensor::new(t.shape().to_vec(), t.data().iter().map(|&x| f(x)).collect())?;
        self.push(op, value, &[a], name)
    }

    pub fn relu(&mut self, a: Var) -> Result<Var> {
        self.unary("relu", a, |x| x.max(0.0), Op::Relu(a))
    }

    pub fn tanh(&mut self, a: Var) -> Result<Var> {
        self.unary("tanh", a, f64::tanh, Op::Tanh(a))
    }

    pub fn square(&mut self, a: Var) -> Result<Var> {
        self.unary("square", a, |x| x * x, Op::Square(a))
    }

    /// Elementwise absolute value; the subgradient at zero is zero.
    pub fn abs(&mut self, a: Var) -> Result<Var> {
        self.unary("abs", a, f64::abs, Op::Abs(a))
    }

    fn check_axis(&self, a: Var, axis: Option<usize>) -> Result<()> {
        match axis {
            Some(ax) if ax >= self.shape(a).len() => Err(Error::Shape(format!(
                "axis {ax} out of range for shape {:?}",
                self.shape(a)
            ))),
            _ => Ok(()),
        }
    }

    fn reduce_values(&self, a: Var, axis: Option<usize>) -> (Vec<usize>, Vec<f64>, usize) {
        let t = self.value(a);
        match axis {
            None => (vec![], vec![t.data().iter().sum()], t.numel()),
            Some(ax) => {
                let (outer, len, inner) = split_axis(t.shape(), ax);
                let mut out = vec![0.0; outer * inner];
                for o in 0..outer {
                    for l in 0..len {
                        let src = &t.data()[(o * len + l) * inner..(o * len + l + 1) * inner];
                        for (d, &s) in out[o * inner..(o + 1) * inner].iter_mut().zip(src) {
                            *d += s;
                        }
                    }
                }
                (reduced_shape(t.shape(), axis), out, len)
            }
        }
    }

    /// Sum over `axis` (kept with extent 1), or over everything when `None`.
    pub fn reduce_sum(&mut self, a: Var, axis: Option<usize>) -> Result<Var> {
        self.check_axis(a, axis)?;
        let (shape, data, _) = self.reduce_values(a, axis);
        let value = Tensor::new(shape, data)?;
        self.push(Op::Sum(a, axis), value, &[a], "reduce_sum")
    }

    /// Mean over `axis` (kept with extent 1), or over everything when `None`.
    pub fn reduce_mean(&mut self, a: Var, axis: Option<usize>) -> Result<Var> {
        self.check_axis(a, axis)?;
        let (shape, mut data, count) = self.reduce_values(a, axis);
        if count == 0 {
            return Err(Error::InvalidArgument("mean over an empty axis".into()));
        }
        for v in &mut data {
            *v /= count as f64;
        }
        let value = Tensor::new(shape, data)?;
        self.push(Op::Mean(a, axis), value, &[a], "reduce_mean")
    }

    /// Maximum over `axis` (kept with extent 1), or over everything when
    /// `None`. The first maximal element receives the gradient.
    pub fn reduce_max(&mut self, a: Var, axis: Option<usize>) -> Result<Var> {
        self.check_axis(a, axis)?;
        let t = self.value(a);
        if t.numel() == 0 {
            return Err(Error::InvalidArgument("max over an empty tensor".into()));
        }
        let (outer, len, inner) = match axis {
            None => (1, t.numel(), 1),
            Some(ax) => split_axis(t.shape(), ax),
        };
        if len == 0 {
            return Err(Error::InvalidArgument("max over an empty axis".into()));
        }
        let mut values = Vec::with_capacity(outer * inner);
        let mut argmax = Vec::with_capacity(outer * inner);
        let d = t.data();
        for o in 0..outer {
            for i in 0..inner {
                let mut best = o * len * inner + i;
                for l in 1..len {
                    let idx = (o * len + l) * inner + i;
                    if d[idx] > d[best] {
                        best = idx;
                    }
                }
                values.push(d[best]);
                argmax.push(best);
            }
        }
        let value = Tensor::new(reduced_shape(t.shape(), axis), values)?;
        self.push(Op::Max(a, argmax), value, &[a], "reduce_max")
    }

    /// Flat input indices selected by a `reduce_max` node, one per output
    /// element.
    pub fn argmax(&self, v: Var) -> Option<&[usize]> {
        match &self.nodes[v.0].op {
            Op::Max(_, idx) => Some(idx),
            _ => None,
        }
    }

    /// Selects rows (entries of the leading axis) of `a`, with repetition.
    pub fn gather_rows(&mut self, a: Var, indices: &[usize]) -> Result<Var> {
        let t = self.value(a);
        if t.rank() == 0 {
            return Err(Error::Shape("gather_rows on a scalar".into()));
        }
        let rows = t.shape()[0];
        let width: usize = t.shape()[1..].iter().product();
        if let Some(&bad) = indices.iter().find(|&&i| i >= rows) {
            return Err(Error::Shape(format!(
                "gather_rows: index {bad} out of range for shape {:?}",
                t.shape()
            )));
        }
        let mut data = Vec::with_capacity(indices.len() * width);
        for &i in indices {
            data.extend_from_slice(&t.data()[i * width..(i + 1) * width]);
        }
        let mut shape = t.shape().to_vec();
        shape[0] = indices.len();
        let value = Tensor::new(shape, data)?;
        self.push(Op::GatherRows(a, indices.to_vec()), value, &[a], "gather_rows")
    }

    /// Reverse-mode sweep from a scalar `root`.
    pub fn backward(&self, root: Var) -> Result<Gradients> {
        let root_value = self.value(root);
        if root_value.numel() != 1 {
            return Err(Error::InvalidArgument(format!(
                "backward root must be scalar, shape is {:?}",
                root_value.shape()
            )));
        }
        let mut grads: Vec<Option<Tensor>> = vec![None; root.0 + 1];
        grads[root.0] = Some(Tensor::new(root_value.shape().to_vec(), vec![1.0])?);

        for id in (0..=root.0).rev() {
            let node = &self.nodes[id];
            if !node.requires_grad {
                grads[id] = None;
                continue;
            }
            let Some(g) = grads[id].take() else { continue };
            self.propagate(&node.op, &node.value, &g, &mut grads)?;
            grads[id] = Some(g);
        }

        grads.resize(self.nodes.len(), None);
        for (id, node) in self.nodes.iter().enumerate() {
            if !node.requires_grad {
                grads[id] = None;
            }
        }
        Ok(Gradients {
            grads,
            shapes: self.nodes.iter().map(|n| n.value.shape().to_vec()).collect(),
        })
    }

    fn accumulate(&self, grads: &mut [Option<Tensor>], v: Var, delta: Vec<f64>) -> Result<()> {
        if !self.nodes[v.0].requires_grad {
            return Ok(());
        }
        match &mut grads[v.0] {
            Some(existing) => {
                for (e, d) in existing.data_mut().iter_mut().zip(&delta) {
                    *e += d;
                }
            }
            slot @ None => {
                *slot = Some(Tensor::new(self.shape(v).to_vec(), delta)?);
            }
        }
        Ok(())
    }

    fn wants(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    fn propagate(
        &self,
        op: &Op,
        out: &Tensor,
        g: &Tensor,
        grads: &mut [Option<Tensor>],
    ) -> Result<()> {
        let gd = g.data();
        match op {
            Op::Leaf => {}
            Op::Add(a, b, bc) | Op::Sub(a, b, bc) => {
                let sign = if matches!(op, Op::Sub(..)) { -1.0 } else { 1.0 };
                let (na, nb) = (self.value(*a).numel(), self.value(*b).numel());
                if self.wants(*a) {
                    let da = match bc {
                        Broadcast::Left => fold_broadcast(gd, na),
                        _ => gd.to_vec(),
                    };
                    self.accumulate(grads, *a, da)?;
                }
                if self.wants(*b) {
                    let mut db = match bc {
                        Broadcast::Right => fold_broadcast(gd, nb),
                        _ => gd.to_vec(),
                    };
                    if sign < 0.0 {
                        db.iter_mut().for_each(|v| *v = -*v);
                    }
                    self.accumulate(grads, *b, db)?;
                }
            }
            Op::Mul(a, b, bc) => {
                let (da, db) = (self.value(*a).data(), self.value(*b).data());
                let (la, lb) = (da.len(), db.len());
                if self.wants(*a) {
                    let full: Vec<f64> = gd.iter().enumerate().map(|(i, &gv)| gv * db[i % lb]).collect();
                    let grad = match bc {
                        Broadcast::Left => fold_broadcast(&full, la),
                        _ => full,
                    };
                    self.accumulate(grads, *a, grad)?;
                }
                if self.wants(*b) {
                    let full: Vec<f64> = gd.iter().enumerate().map(|(i, &gv)| gv * da[i % la]).collect();
                    let grad = match bc {
                        Broadcast::Right => fold_broadcast(&full, lb),
                        _ => full,
                    };
                    self.accumulate(grads, *b, grad)?;
                }
            }
            Op::MatMul(a, b) => {
                let (ta, tb) = (self.value(*a), self.value(*b));
                let (n, k, m) = (ta.shape()[0], ta.shape()[1], tb.shape()[1]);
                if self.wants(*a) {
                    self.accumulate(grads, *a, kernels::matmul_nt(gd, tb.data(), n, k, m))?;
                }
                if self.wants(*b) {
                    self.accumulate(grads, *b, kernels::matmul_tn(ta.data(), gd, n, k, m))?;
                }
            }
            Op::Concat(parts) => {
                let width = out.last_dim();
                let rows = out.numel() / width.max(1);
                let mut offset = 0;
                for &p in parts {
                    let w = self.value(p).last_dim();
                    if self.wants(p) {
                        let mut d = Vec::with_capacity(rows * w);
                        for r in 0..rows {
                            d.extend_from_slice(&gd[r * width + offset..r * width + offset + w]);
                        }
                        self.accumulate(grads, p, d)?;
                    }
                    offset += w;
                }
            }
            Op::Relu(a) => {
                let d = out
                    .data()
                    .iter()
                    .zip(gd)
                    .map(|(&y, &gv)| if y > 0.0 { gv } else { 0.0 })
                    .collect();
                self.accumulate(grads, *a, d)?;
            }
            Op::Tanh(a) => {
                let d = out.data().iter().zip(gd).map(|(&y, &gv)| gv * (1.0 - y * y)).collect();
                self.accumulate(grads, *a, d)?;
            }
            Op::Square(a) => {
                let x = self.value(*a).data();
                let d = x.iter().zip(gd).map(|(&xv, &gv)| 2.0 * xv * gv).collect();
                self.accumulate(grads, *a, d)?;
            }
            Op::Abs(a) => {
                let x = self.value(*a).data();
                let d = x
                    .iter()
                    .zip(gd)
                    .map(|(&xv, &gv)| if xv > 0.0 { gv } else if xv < 0.0 { -gv } else { 0.0 })
                    .collect();
                self.accumulate(grads, *a, d)?;
            }
            Op::Sum(a, axis) | Op::Mean(a, axis) => {
                let t = self.value(*a);
                let (outer, len, inner) = match axis {
                    None => (1, t.numel(), 1),
                    Some(ax) => split_axis(t.shape(), *ax),
                };
                let scale = if matches!(op, Op::Mean(..)) { 1.0 / len as f64 } else { 1.0 };
                let mut d = vec![0.0; t.numel()];
                for o in 0..outer {
                    for l in 0..len {
                        for i in 0..inner {
                            d[(o * len + l) * inner + i] = gd[o * inner + i] * scale;
                        }
                    }
                }
                self.accumulate(grads, *a, d)?;
            }
            Op::Max(a, argmax) => {
                let mut d = vec![0.0; self.value(*a).numel()];
                for (&src, &gv) in argmax.iter().zip(gd) {
                    d[src] += gv;
                }
                self.accumulate(grads, *a, d)?;
            }
            Op::GatherRows(a, indices) => {
                let t = self.value(*a);
                let width: usize = t.shape()[1..].iter().product();
                let mut d = vec![0.0; t.numel()];
                for (r, &i) in indices.iter().enumerate() {
                    for (dst, &gv) in d[i * width..(i + 1) * width]
                        .iter_mut()
                        .zip(&gd[r * width..(r + 1) * width])
                    {
                        *dst += gv;
                    }
                }
                self.accumulate(grads, *a, d)?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vec_param(g: &mut Graph, v: &[f64]) -> Var {
        g.param(Tensor::vector(v.to_vec())).unwrap()
    }

    #[test]
    fn matmul_shapes() {
        let mut g = Graph::new();
        let a = g.param(Tensor::zeros(&[2, 3])).unwrap();
        let b = g.param(Tensor::zeros(&[3, 4])).unwrap();
        let c = g.matmul(a, b).unwrap();
        assert_eq!(g.shape(c), &[2, 4]);
        let err = g.matmul(b, b).unwrap_err().to_string();
        assert!(err.contains("[3, 4]"), "{err}");
    }

    #[test]
    fn relu_values() {
        let mut g = Graph::new();
        let x = vec_param(&mut g, &[-1.0, 0.0, 2.0]);
        let y = g.relu(x).unwrap();
        assert_eq!(g.value(y).data(), &[0.0, 0.0, 2.0]);
    }

    #[test]
    fn max_with_argmax() {
        let mut g = Graph::new();
        let x = vec_param(&mut g, &[3.0, 1.0, 2.0]);
        let m = g.reduce_max(x, Some(0)).unwrap();
        assert_eq!(g.value(m).data(), &[3.0]);
        assert_eq!(g.argmax(m).unwrap(), &[0]);
    }

    #[test]
    fn sum_of_squares_gradient() {
        let mut g = Graph::new();
        let x = vec_param(&mut g, &[1.0, 2.0, 3.0]);
        let sq = g.square(x).unwrap();
        let s = g.reduce_sum(sq, None).unwrap();
        let grads = g.backward(s).unwrap();
        assert_eq!(grads.get(x).data(), &[2.0, 4.0, 6.0]);
    }

    #[test]
    fn max_gradient_goes_to_first_argmax() {
        let mut g = Graph::new();
        let x = vec_param(&mut g, &[1.0, 5.0, 2.0]);
        let m = g.reduce_max(x, None).unwrap();
        assert_eq!(g.backward(m).unwrap().get(x).data(), &[0.0, 1.0, 0.0]);

        let mut g = Graph::new();
        let x = vec_param(&mut g, &[4.0, 4.0, 1.0]);
        let m = g.reduce_max(x, None).unwrap();
        assert_eq!(g.backward(m).unwrap().get(x).data(), &[1.0, 0.0, 0.0]);
    }

    #[test]
    fn unused_leaf_gets_zero() {
        let mut g = Graph::new();
        let x = vec_param(&mut g, &[1.0, 2.0]);
        let y = vec_param(&mut g, &[3.0, 4.0]);
        let s = g.reduce_sum(x, None).unwrap();
        let grads = g.backward(s).unwrap();
        assert_eq!(grads.get(y).data(), &[0.0, 0.0]);
    }

    #[test]
    fn non_scalar_root_rejected() {
        let mut g = Graph::new();
        let x = vec_param(&mut g, &[1.0, 2.0]);
        assert!(matches!(g.backward(x), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn row_broadcast_add_and_gradient() {
        let mut g = Graph::new();
        let a = g.param(Tensor::matrix(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap()).unwrap();
        let b = g.param(Tensor::matrix(1, 2, vec![10.0, 20.0]).unwrap()).unwrap();
        let c = g.add(a, b).unwrap();
        assert_eq!(g.value(c).data(), &[11.0, 22.0, 13.0, 24.0]);
        let s = g.reduce_sum(c, None).unwrap();
        assert_eq!(g.backward(s).unwrap().get(b).data(), &[2.0, 2.0]);
        let bad = g.param(Tensor::zeros(&[3])).unwrap();
        assert!(matches!(g.add(a, bad), Err(Error::Shape(_))));
    }

    #[test]
    fn concat_last_axis() {
        let mut g = Graph::new();
        let a = g.param(Tensor::matrix(2, 1, vec![1.0, 2.0]).unwrap()).unwrap();
        let b = g.param(Tensor::matrix(2, 2, vec![3.0, 4.0, 5.0, 6.0]).unwrap()).unwrap();
        let c = g.concat(&[a, b]).unwrap();
        assert_eq!(g.shape(c), &[2, 3]);
        assert_eq!(g.value(c).data(), &[1.0, 3.0, 4.0, 2.0, 5.0, 6.0]);
    }

    #[test]
    fn gather_rows_scatter_adds() {
        let mut g = Graph::new();
        let a = g.param(Tensor::matrix(3, 1, vec![1.0, 2.0, 3.0]).unwrap()).unwrap();
        let r = g.gather_rows(a, &[2, 0, 2]).unwrap();
        assert_eq!(g.value(r).data(), &[3.0, 1.0, 3.0]);
        let s = g.reduce_sum(r, None).unwrap();
        assert_eq!(g.backward(s).unwrap().get(a).data(), &[1.0, 0.0, 2.0]);
        assert!(g.gather_rows(a, &[3]).is_err());
    }

    #[test]
    fn non_finite_is_an_error() {
        let mut g = Graph::new();
        let x = vec_param(&mut g, &[1e200]);
        assert!(matches!(g.square(x), Err(Error::NonFinite(_))));
    }

    #[test]
    fn constants_receive_no_gradient() {
        let mut g = Graph::new();
        let x = vec_param(&mut g, &[1.0, 2.0]);
        let c = g.constant(Tensor::vector(vec![5.0, 7.0])).unwrap();
        let p = g.mul(x, c).unwrap();
        let s = g.reduce_sum(p, None).unwrap();
        let grads = g.backward(s).unwrap();
        assert_eq!(grads.get(x).data(), &[5.0, 7.0]);
        assert_eq!(grads.get(c).data(), &[0.0, 0.0]);
    }
}

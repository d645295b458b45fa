//! Define-by-run reverse-mode differentiation.
//!
//! A [`Tape`] records every operation of one forward pass as a node holding
//! its output value. Node ids are assigned in creation order, so inputs always
//! precede the nodes that consume them and the reverse sweep in
//! [`Tape::backward`] is a plain descending loop.

use crate::error::{Error, Result};
use crate::tensor::{dot, Tensor, NORM_EPS};

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Sigmoid,
    Tanh,
}

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    Affine { w: Var, x: Var, b: Option<Var> },
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    MulConst(Var, Vec<f64>),
    Scale(Var, f64),
    Activation(Var, Activation),
    Concat(Vec<Var>),
    ColumnSum { table: Var, columns: Vec<usize> },
    Cosine(Var, Var),
    Dot(Var, Var),
    Stack(Vec<Var>),
    Index(Var, usize),
    MaskedSoftmax(Var, Vec<bool>),
    WeightedSum { weights: Var, items: Vec<Var> },
    Sum(Var),
    SquaredError(Var, Vec<f64>),
    CrossEntropy(Var, usize),
}

#[derive(Debug, Clone)]
struct Node {
    value: Tensor,
    op: Op,
}

#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

/// Gradients produced by [`Tape::backward`], indexed by node.
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    /// Gradient of `v`, or `None` when `v` does not feed the seed.
    pub fn get(&self, v: Var) -> Option<&Tensor> {
        self.grads.get(v.0).and_then(|g| g.as_ref())
    }

    pub fn take(&mut self, v: Var) -> Option<Tensor> {
        self.grads.get_mut(v.0).and_then(|g| g.take())
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Sigmoid => sigmoid(x),
            Activation::Tanh => x.tanh(),
        }
    }
}

fn softmax_masked(scores: &[f64], mask: &[bool]) -> Vec<f64> {
    let max = scores
        .iter()
        .zip(mask)
        .filter(|(_, &m)| m)
        .map(|(&s, _)| s)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = scores
        .iter()
        .zip(mask)
        .map(|(&s, &m)| if m { (s - max).exp() } else { 0.0 })
        .collect();
    let total: f64 = out.iter().sum();
    for v in &mut out {
        *v /= total;
    }
    out
}

fn accumulate<'a>(grads: &'a mut [Option<Vec<f64>>], v: Var, len: usize) -> &'a mut [f64] {
    grads[v.0].get_or_insert_with(|| vec![0.0; len])
}

impl Tape {
    pub fn new() -> Self {
        Tape::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn scalar(&self, v: Var) -> f64 {
        self.nodes[v.0].value.item()
    }

    fn shape(&self, v: Var) -> &[usize] {
        self.nodes[v.0].value.shape()
    }

    fn data(&self, v: Var) -> &[f64] {
        self.nodes[v.0].value.data()
    }

    fn push(&mut self, value: Tensor, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    pub fn leaf(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Leaf)
    }

    fn require_vector(&self, op: &'static str, v: Var) -> Result<usize> {
        match self.shape(v) {
            [n] => Ok(*n),
            s => Err(Error::Rank {
                op,
                expected: "vector",
                shape: s.to_vec(),
            }),
        }
    }

    fn require_same(&self, op: &'static str, a: Var, b: Var) -> Result<()> {
        if self.shape(a) != self.shape(b) {
            return Err(Error::Dimension {
                op,
                left: self.shape(a).to_vec(),
                right: self.shape(b).to_vec(),
            });
        }
        Ok(())
    }

    /// `w · x + b` for a matrix `w` of shape `[m, n]`.
    pub fn affine(&mut self, w: Var, x: Var, b: Option<Var>) -> Result<Var> {
        let (m, n) = match self.shape(w) {
            [m, n] => (*m, *n),
            s => {
                return Err(Error::Rank {
                    op: "affine",
                    expected: "matrix",
                    shape: s.to_vec(),
                })
            }
        };
        if self.shape(x) != [n] {
            return Err(Error::Dimension {
                op: "affine",
                left: vec![m, n],
                right: self.shape(x).to_vec(),
            });
        }
        if let Some(b) = b {
            if self.shape(b) != [m] {
                return Err(Error::Dimension {
                    op: "affine bias",
                    left: vec![m],
                    right: self.shape(b).to_vec(),
                });
            }
        }
        let wd = self.data(w);
        let xd = self.data(x);
        let mut out: Vec<f64> = wd.chunks_exact(n).map(|row| dot(row, xd)).collect();
        if n == 0 {
            out = vec![0.0; m];
        }
        if let Some(b) = b {
            for (o, bv) in out.iter_mut().zip(self.data(b)) {
                *o += bv;
            }
        }
        Ok(self.push(Tensor::vector(out), Op::Affine { w, x, b }))
    }

    /// Matrix-vector product without bias.
    pub fn matvec(&mut self, w: Var, x: Var) -> Result<Var> {
        self.affine(w, x, None)
    }

    fn zip_with(&mut self, op_name: &'static str, a: Var, b: Var, f: impl Fn(f64, f64) -> f64, op: Op) -> Result<Var> {
        self.require_same(op_name, a, b)?;
        let out: Vec<f64> = self.data(a).iter().zip(self.data(b)).map(|(&x, &y)| f(x, y)).collect();
        let shape = self.shape(a).to_vec();
        Ok(self.push(Tensor::new(shape, out)?, op))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.zip_with("add", a, b, |x, y| x + y, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.zip_with("sub", a, b, |x, y| x - y, Op::Sub(a, b))
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.zip_with("mul", a, b, |x, y| x * y, Op::Mul(a, b))
    }

    /// Elementwise product with a constant (non-differentiable) factor, e.g. a dropout mask.
    pub fn mul_const(&mut self, a: Var, factor: Vec<f64>) -> Result<Var> {
        if factor.len() != self.data(a).len() {
            return Err(Error::Dimension {
                op: "mul_const",
                left: self.shape(a).to_vec(),
                right: vec![factor.len()],
            });
        }
        let out: Vec<f64> = self.data(a).iter().zip(&factor).map(|(x, f)| x * f).collect();
        let shape = self.shape(a).to_vec();
        Ok(self.push(Tensor::new(shape, out)?, Op::MulConst(a, factor)))
    }

    pub fn scale(&mut self, a: Var, k: f64) -> Var {
        let value = Tensor::new(self.shape(a).to_vec(), self.data(a).iter().map(|x| x * k).collect())
            .expect("shape preserved");
        self.push(value, Op::Scale(a, k))
    }

    pub fn activation(&mut self, kind: Activation, a: Var) -> Var {
        let value = Tensor::new(
            self.shape(a).to_vec(),
            self.data(a).iter().map(|&x| kind.apply(x)).collect(),
        )
        .expect("shape preserved");
        self.push(value, Op::Activation(a, kind))
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        self.activation(Activation::Sigmoid, a)
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        self.activation(Activation::Tanh, a)
    }

    pub fn concat(&mut self, a: Var, b: Var) -> Result<Var> {
        self.concat_all(&[a, b])
    }

    /// Concatenates rank-1 inputs in order.
    pub fn concat_all(&mut self, parts: &[Var]) -> Result<Var> {
        let mut out = Vec::new();
        for &p in parts {
            self.require_vector("concat", p)?;
            out.extend_from_slice(self.data(p));
        }
        Ok(self.push(Tensor::vector(out), Op::Concat(parts.to_vec())))
    }

    /// Sum of the selected columns of a `[d, V]` table. An empty selection gives zeros.
    pub fn column_sum(&mut self, table: Var, columns: &[usize]) -> Result<Var> {
        let (d, v) = match self.shape(table) {
            [d, v] => (*d, *v),
            s => {
                return Err(Error::Rank {
                    op: "column_sum",
                    expected: "matrix",
                    shape: s.to_vec(),
                })
            }
        };
        let data = self.data(table);
        let mut out = vec![0.0; d];
        for &c in columns {
            if c >= v {
                return Err(Error::Precondition(format!("column {c} out of range for table with {v} columns")));
            }
            for (r, o) in out.iter_mut().enumerate() {
                *o += data[r * v + c];
            }
        }
        Ok(self.push(
            Tensor::vector(out),
            Op::ColumnSum {
                table,
                columns: columns.to_vec(),
            },
        ))
    }

    /// Cosine similarity of two vectors; zero (with zero gradient) when either norm is below 1e-12.
    pub fn cosine(&mut self, a: Var, b: Var) -> Result<Var> {
        self.require_vector("cosine", a)?;
        self.require_same("cosine", a, b)?;
        let v = crate::tensor::cosine(self.data(a), self.data(b));
        Ok(self.push(Tensor::scalar(v), Op::Cosine(a, b)))
    }

    pub fn dot(&mut self, a: Var, b: Var) -> Result<Var> {
        self.require_vector("dot", a)?;
        self.require_same("dot", a, b)?;
        let v = dot(self.data(a), self.data(b));
        Ok(self.push(Tensor::scalar(v), Op::Dot(a, b)))
    }

    /// Packs scalar nodes into one vector.
    pub fn stack(&mut self, scalars: &[Var]) -> Result<Var> {
        let mut out = Vec::with_capacity(scalars.len());
        for &s in scalars {
            if self.data(s).len() != 1 {
                return Err(Error::Rank {
                    op: "stack",
                    expected: "scalar",
                    shape: self.shape(s).to_vec(),
                });
            }
            out.push(self.data(s)[0]);
        }
        Ok(self.push(Tensor::vector(out), Op::Stack(scalars.to_vec())))
    }

    pub fn index(&mut self, a: Var, i: usize) -> Result<Var> {
        let n = self.data(a).len();
        if i >= n {
            return Err(Error::Precondition(format!("index {i} out of range for length {n}")));
        }
        let v = self.data(a)[i];
        Ok(self.push(Tensor::scalar(v), Op::Index(a, i)))
    }

    /// Softmax over the positions where `mask` is true; masked-out positions are exactly zero.
    pub fn masked_softmax(&mut self, a: Var, mask: &[bool]) -> Result<Var> {
        let n = self.require_vector("masked_softmax", a)?;
        if mask.len() != n {
            return Err(Error::Dimension {
                op: "masked_softmax",
                left: vec![n],
                right: vec![mask.len()],
            });
        }
        if !mask.iter().any(|&m| m) {
            return Err(Error::Precondition("attention mask has no active position".into()));
        }
        let out = softmax_masked(self.data(a), mask);
        Ok(self.push(Tensor::vector(out), Op::MaskedSoftmax(a, mask.to_vec())))
    }

    /// `Σ_i weights[i] · items[i]`. Items whose weight is exactly zero are skipped
    /// in the forward sum but still receive gradient.
    pub fn weighted_sum(&mut self, weights: Var, items: &[Var]) -> Result<Var> {
        let n = self.require_vector("weighted_sum", weights)?;
        if n != items.len() || items.is_empty() {
            return Err(Error::Dimension {
                op: "weighted_sum",
                left: vec![n],
                right: vec![items.len()],
            });
        }
        let dim = self.require_vector("weighted_sum", items[0])?;
        let mut out = vec![0.0; dim];
        for (k, &item) in items.iter().enumerate() {
            self.require_same("weighted_sum", items[0], item)?;
            let w = self.data(weights)[k];
            if w == 0.0 {
                continue;
            }
            for (o, x) in out.iter_mut().zip(self.data(item)) {
                *o += w * x;
            }
        }
        Ok(self.push(
            Tensor::vector(out),
            Op::WeightedSum {
                weights,
                items: items.to_vec(),
            },
        ))
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let v = self.data(a).iter().sum();
        self.push(Tensor::scalar(v), Op::Sum(a))
    }

    /// `Σ (a_i − target_i)²`.
    pub fn squared_error(&mut self, a: Var, target: &[f64]) -> Result<Var> {
        if self.data(a).len() != target.len() {
            return Err(Error::Dimension {
                op: "squared_error",
                left: self.shape(a).to_vec(),
                right: vec![target.len()],
            });
        }
        let v = self.data(a).iter().zip(target).map(|(x, t)| (x - t) * (x - t)).sum();
        Ok(self.push(Tensor::scalar(v), Op::SquaredError(a, target.to_vec())))
    }

    /// Negative log-softmax probability of `target` over the entries of `a`.
    pub fn cross_entropy(&mut self, a: Var, target: usize) -> Result<Var> {
        let n = self.require_vector("cross_entropy", a)?;
        if target >= n {
            return Err(Error::Precondition(format!("target {target} out of range for {n} logits")));
        }
        let d = self.data(a);
        let max = d.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + d.iter().map(|x| (x - max).exp()).sum::<f64>().ln();
        let v = lse - d[target];
        Ok(self.push(Tensor::scalar(v), Op::CrossEntropy(a, target)))
    }

    /// Reverse sweep from a scalar seed.
    pub fn backward(&self, seed: Var) -> Result<Gradients> {
        if !self.nodes[seed.0].value.is_scalar() {
            return Err(Error::Rank {
                op: "backward",
                expected: "scalar seed",
                shape: self.shape(seed).to_vec(),
            });
        }
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; seed.0 + 1];
        grads[seed.0] = Some(vec![1.0]);

        for i in (0..=seed.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            let node = &self.nodes[i];
            match &node.op {
                Op::Leaf => {}
                Op::Affine { w, x, b } => {
                    let n = self.data(*x).len();
                    let xd = self.data(*x);
                    let wd = self.data(*w);
                    {
                        let gw = accumulate(&mut grads, *w, wd.len());
                        for (r, gr) in g.iter().enumerate() {
                            if *gr == 0.0 {
                                continue;
                            }
                            for (gwv, xv) in gw[r * n..(r + 1) * n].iter_mut().zip(xd) {
                                *gwv += gr * xv;
                            }
                        }
                    }
                    {
                        let gx = accumulate(&mut grads, *x, n);
                        for (r, gr) in g.iter().enumerate() {
                            for (gxv, wv) in gx.iter_mut().zip(&wd[r * n..(r + 1) * n]) {
                                *gxv += wv * gr;
                            }
                        }
                    }
                    if let Some(b) = b {
                        let gb = accumulate(&mut grads, *b, g.len());
                        for (a, v) in gb.iter_mut().zip(&g) {
                            *a += v;
                        }
                    }
                }
                Op::Add(a, b) => {
                    for v in [a, b] {
                        let ga = accumulate(&mut grads, *v, g.len());
                        for (x, y) in ga.iter_mut().zip(&g) {
                            *x += y;
                        }
                    }
                }
                Op::Sub(a, b) => {
                    let ga = accumulate(&mut grads, *a, g.len());
                    for (x, y) in ga.iter_mut().zip(&g) {
                        *x += y;
                    }
                    let gb = accumulate(&mut grads, *b, g.len());
                    for (x, y) in gb.iter_mut().zip(&g) {
                        *x -= y;
                    }
                }
                Op::Mul(a, b) => {
                    let (ad, bd) = (self.data(*a), self.data(*b));
                    let ga = accumulate(&mut grads, *a, g.len());
                    for ((x, y), bv) in ga.iter_mut().zip(&g).zip(bd) {
                        *x += y * bv;
                    }
                    let gb = accumulate(&mut grads, *b, g.len());
                    for ((x, y), av) in gb.iter_mut().zip(&g).zip(ad) {
                        *x += y * av;
                    }
                }
                Op::MulConst(a, factor) => {
                    let ga = accumulate(&mut grads, *a, g.len());
                    for ((x, y), f) in ga.iter_mut().zip(&g).zip(factor) {
                        *x += y * f;
                    }
                }
                Op::Scale(a, k) => {
                    let ga = accumulate(&mut grads, *a, g.len());
                    for (x, y) in ga.iter_mut().zip(&g) {
                        *x += y * k;
                    }
                }
                Op::Activation(a, kind) => {
                    let out = node.value.data();
                    let ga = accumulate(&mut grads, *a, g.len());
                    for ((x, y), o) in ga.iter_mut().zip(&g).zip(out) {
                        let d = match kind {
                            Activation::Sigmoid => o * (1.0 - o),
                            Activation::Tanh => 1.0 - o * o,
                        };
                        *x += y * d;
                    }
                }
                Op::Concat(parts) => {
                    let mut offset = 0;
                    for p in parts {
                        let n = self.data(*p).len();
                        let gp = accumulate(&mut grads, *p, n);
                        for (x, y) in gp.iter_mut().zip(&g[offset..offset + n]) {
                            *x += y;
                        }
                        offset += n;
                    }
                }
                Op::ColumnSum { table, columns } => {
                    let v = self.shape(*table)[1];
                    let len = self.data(*table).len();
                    let gt = accumulate(&mut grads, *table, len);
                    for &c in columns {
                        for (r, y) in g.iter().enumerate() {
                            gt[r * v + c] += y;
                        }
                    }
                }
                Op::Cosine(a, b) => {
                    let (ad, bd) = (self.data(*a), self.data(*b));
                    let na = dot(ad, ad).sqrt();
                    let nb = dot(bd, bd).sqrt();
                    let n = ad.len();
                    if na < NORM_EPS || nb < NORM_EPS {
                        accumulate(&mut grads, *a, n);
                        accumulate(&mut grads, *b, n);
                        grads[i] = Some(g);
                        continue;
                    }
                    let c = node.value.item();
                    let gs = g[0];
                    let inv = 1.0 / (na * nb);
                    let (ca, cb) = (c / (na * na), c / (nb * nb));
                    let ga: Vec<f64> = ad.iter().zip(bd).map(|(x, y)| gs * (y * inv - ca * x)).collect();
                    let gb: Vec<f64> = ad.iter().zip(bd).map(|(x, y)| gs * (x * inv - cb * y)).collect();
                    for (acc, v) in accumulate(&mut grads, *a, n).iter_mut().zip(ga) {
                        *acc += v;
                    }
                    for (acc, v) in accumulate(&mut grads, *b, n).iter_mut().zip(gb) {
                        *acc += v;
                    }
                }
                Op::Dot(a, b) => {
                    let (ad, bd) = (self.data(*a), self.data(*b));
                    let gs = g[0];
                    let n = ad.len();
                    let ga = accumulate(&mut grads, *a, n);
                    for (x, y) in ga.iter_mut().zip(bd) {
                        *x += gs * y;
                    }
                    let gb = accumulate(&mut grads, *b, n);
                    for (x, y) in gb.iter_mut().zip(ad) {
                        *x += gs * y;
                    }
                }
                Op::Stack(scalars) => {
                    for (s, y) in scalars.iter().zip(&g) {
                        accumulate(&mut grads, *s, 1)[0] += y;
                    }
                }
                Op::Index(a, k) => {
                    let n = self.data(*a).len();
                    accumulate(&mut grads, *a, n)[*k] += g[0];
                }
                Op::MaskedSoftmax(a, mask) => {
                    let y = node.value.data();
                    let inner: f64 = y.iter().zip(&g).map(|(p, q)| p * q).sum();
                    let ga = accumulate(&mut grads, *a, g.len());
                    for (k, x) in ga.iter_mut().enumerate() {
                        if mask[k] {
                            *x += y[k] * (g[k] - inner);
                        }
                    }
                }
                Op::WeightedSum { weights, items } => {
                    let n = items.len();
                    let wd = self.data(*weights).to_vec();
                    let mut gw = vec![0.0; n];
                    for (k, item) in items.iter().enumerate() {
                        let xd = self.data(*item);
                        gw[k] = dot(xd, &g);
                        let gi = accumulate(&mut grads, *item, xd.len());
                        for (x, y) in gi.iter_mut().zip(&g) {
                            *x += wd[k] * y;
                        }
                    }
                    for (acc, v) in accumulate(&mut grads, *weights, n).iter_mut().zip(gw) {
                        *acc += v;
                    }
                }
                Op::Sum(a) => {
                    let n = self.data(*a).len();
                    for x in accumulate(&mut grads, *a, n) {
                        *x += g[0];
                    }
                }
                Op::SquaredError(a, target) => {
                    let ad = self.data(*a);
                    let ga = accumulate(&mut grads, *a, ad.len());
                    for ((x, v), t) in ga.iter_mut().zip(ad).zip(target) {
                        *x += 2.0 * (v - t) * g[0];
                    }
                }
                Op::CrossEntropy(a, target) => {
                    let ad = self.data(*a);
                    let p = softmax_masked(ad, &vec![true; ad.len()]);
                    let ga = accumulate(&mut grads, *a, ad.len());
                    for (k, x) in ga.iter_mut().enumerate() {
                        let onehot = if k == *target { 1.0 } else { 0.0 };
                        *x += g[0] * (p[k] - onehot);
                    }
                }
            }
            grads[i] = Some(g);
        }

        let grads = grads
            .into_iter()
            .enumerate()
            .map(|(i, g)| {
                g.map(|data| Tensor::new(self.nodes[i].value.shape().to_vec(), data).expect("gradient shape mirrors value"))
            })
            .collect();
        Ok(Gradients { grads })
    }
}

/// Softmax over active positions on plain values (no tape).
pub fn normalize_attention(scores: &[f64], active: &[bool]) -> Result<Vec<f64>> {
    if scores.len() != active.len() {
        return Err(Error::Dimension {
            op: "normalize_attention",
            left: vec![scores.len()],
            right: vec![active.len()],
        });
    }
    if !active.iter().any(|&a| a) {
        return Err(Error::Precondition("attention mask has no active position".into()));
    }
    Ok(softmax_masked(scores, active))
}

use super::{ParamId, ParamSet, Tensor, TensorError};

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Debug)]
enum Op {
    Leaf,
    Param(ParamId),
    MatMul(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    AddRow(Var, Var),
    Scale(Var, f64),
    Sum(Var),
    RowSum(Var),
    MeanRows(Var),
    Elu(Var),
    Log(Var),
    Exp(Var),
    SoftmaxMasked(Var, Vec<bool>),
    LogSoftmaxMasked(Var, Vec<bool>),
    GatherRows(Var, Vec<usize>),
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    op: Op,
}

/// Records primitive operations in execution order. Inputs always precede
/// outputs, so iterating the record backwards is a reverse topological walk.
#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

/// Gradient of a scalar loss with respect to every recorded value.
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Vec<f64>>>,
}

impl Gradients {
    /// `∂loss/∂var`, or `None` if `var` does not influence the loss.
    pub fn get(&self, var: Var) -> Option<&[f64]> {
        self.grads[var.0].as_deref()
    }
}

fn mismatch(op: &'static str, a: &Tensor, b: &Tensor) -> TensorError {
    TensorError::ShapeMismatch {
        op,
        left: a.shape.clone(),
        right: b.shape.clone(),
    }
}

fn rank2(op: &'static str, t: &Tensor) -> Result<(usize, usize), TensorError> {
    t.dims().map_err(|_| TensorError::Rank {
        op,
        shape: t.shape.clone(),
    })
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

    fn push(&mut self, value: Tensor, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    /// Untracked input. Gradients still flow to it and can be read from
    /// [`Gradients::get`].
    pub fn leaf(&mut self, t: Tensor) -> Var {
        self.push(t.detached(), Op::Leaf)
    }

    /// Reads parameter `id`; [`Tape::backward`] accumulates into its grad.
    pub fn param(&mut self, params: &ParamSet, id: ParamId) -> Var {
        self.push(params.get(id).detached(), Op::Param(id))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        let (ta, tb) = (self.value(a), self.value(b));
        let (n, k) = rank2("matmul", ta)?;
        let (k2, m) = rank2("matmul", tb)?;
        if k != k2 {
            return Err(mismatch("matmul", ta, tb));
        }
        let mut out = vec![0.0; n * m];
        for i in 0..n {
            let row = &mut out[i * m..(i + 1) * m];
            for p in 0..k {
                let x = ta.data[i * k + p];
                if x == 0.0 {
                    continue;
                }
                let brow = &tb.data[p * m..(p + 1) * m];
                for (o, &y) in row.iter_mut().zip(brow) {
                    *o += x * y;
                }
            }
        }
        let value = Tensor::matrix(n, m, out)?;
        Ok(self.push(value, Op::MatMul(a, b)))
    }

    fn zip_same(
        &mut self,
        op: &'static str,
        a: Var,
        b: Var,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Tensor, TensorError> {
        let (ta, tb) = (self.value(a), self.value(b));
        if ta.shape != tb.shape {
            return Err(mismatch(op, ta, tb));
        }
        let data = ta
            .data
            .iter()
            .zip(&tb.data)
            .map(|(&x, &y)| f(x, y))
            .collect();
        Tensor::new(ta.shape.clone(), data)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        let v = self.zip_same("add", a, b, |x, y| x + y)?;
        Ok(self.push(v, Op::Add(a, b)))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        let v = self.zip_same("sub", a, b, |x, y| x - y)?;
        Ok(self.push(v, Op::Sub(a, b)))
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        let v = self.zip_same("mul", a, b, |x, y| x * y)?;
        Ok(self.push(v, Op::Mul(a, b)))
    }

    /// Adds the `1 × m` row `bias` to every row of the `n × m` matrix `a`.
    pub fn add_row(&mut self, a: Var, bias: Var) -> Result<Var, TensorError> {
        let (ta, tb) = (self.value(a), self.value(bias));
        let (n, m) = rank2("add_row", ta)?;
        if tb.shape != [1, m] {
            return Err(mismatch("add_row", ta, tb));
        }
        let mut data = ta.data.clone();
        for i in 0..n {
            for j in 0..m {
                data[i * m + j] += tb.data[j];
            }
        }
        let v = Tensor::matrix(n, m, data)?;
        Ok(self.push(v, Op::AddRow(a, bias)))
    }

    pub fn scale(&mut self, a: Var, s: f64) -> Var {
        let ta = self.value(a);
        let v = Tensor {
            shape: ta.shape.clone(),
            data: ta.data.iter().map(|x| x * s).collect(),
            grad: None,
        };
        self.push(v, Op::Scale(a, s))
    }

    /// Sum of all entries, as a `1 × 1` tensor.
    pub fn sum(&mut self, a: Var) -> Var {
        let s = self.value(a).data.iter().sum();
        self.push(Tensor::scalar(s), Op::Sum(a))
    }

    /// `n × m → n × 1`: sum across each row.
    pub fn row_sum(&mut self, a: Var) -> Result<Var, TensorError> {
        let ta = self.value(a);
        let (n, m) = rank2("row_sum", ta)?;
        let data = (0..n)
            .map(|i| ta.data[i * m..(i + 1) * m].iter().sum())
            .collect();
        Ok(self.push(Tensor::column(data), Op::RowSum(a)))
    }

    /// `n × m → 1 × m`: mean over rows.
    pub fn mean_rows(&mut self, a: Var) -> Result<Var, TensorError> {
        let ta = self.value(a);
        let (n, m) = rank2("mean_rows", ta)?;
        if n == 0 {
            return Err(TensorError::Rank {
                op: "mean_rows",
                shape: ta.shape.clone(),
            });
        }
        let mut data = vec![0.0; m];
        for row in ta.data.chunks(m.max(1)) {
            data.iter_mut().zip(row).for_each(|(d, x)| *d += x);
        }
        data.iter_mut().for_each(|x| *x /= n as f64);
        let v = Tensor::matrix(1, m, data)?;
        Ok(self.push(v, Op::MeanRows(a)))
    }

    fn map(&mut self, a: Var, f: impl Fn(f64) -> f64, op: Op) -> Var {
        let ta = self.value(a);
        let v = Tensor {
            shape: ta.shape.clone(),
            data: ta.data.iter().map(|&x| f(x)).collect(),
            grad: None,
        };
        self.push(v, op)
    }

    /// ELU with `α = 1`.
    pub fn elu(&mut self, a: Var) -> Var {
        self.map(a, elu, Op::Elu(a))
    }

    pub fn log(&mut self, a: Var) -> Var {
        self.map(a, f64::ln, Op::Log(a))
    }

    pub fn exp(&mut self, a: Var) -> Var {
        self.map(a, f64::exp, Op::Exp(a))
    }

    /// Softmax over the entries of `a` (any shape, read flat) where `mask` is
    /// true. Masked entries get probability exactly 0.
    pub fn softmax_masked(&mut self, a: Var, mask: &[bool]) -> Result<Var, TensorError> {
        let p = masked_softmax(self.value(a), mask)?;
        Ok(self.push(p, Op::SoftmaxMasked(a, mask.to_vec())))
    }

    /// Log-softmax over valid entries. Masked entries are reported as 0 (they
    /// carry no probability mass) so that `p · log p` stays finite.
    pub fn log_softmax_masked(&mut self, a: Var, mask: &[bool]) -> Result<Var, TensorError> {
        let ta = self.value(a);
        let lse = masked_logsumexp(ta, mask)?;
        let data = ta
            .data
            .iter()
            .zip(mask)
            .map(|(&x, &ok)| if ok { x - lse } else { 0.0 })
            .collect();
        let v = Tensor::new(ta.shape.clone(), data)?;
        Ok(self.push(v, Op::LogSoftmaxMasked(a, mask.to_vec())))
    }

    /// Selects rows of `a` (repeats allowed).
    pub fn gather_rows(&mut self, a: Var, rows: &[usize]) -> Result<Var, TensorError> {
        let ta = self.value(a);
        let (n, m) = rank2("gather_rows", ta)?;
        let mut data = Vec::with_capacity(rows.len() * m);
        for &r in rows {
            if r >= n {
                return Err(TensorError::RowIndex { index: r, rows: n });
            }
            data.extend_from_slice(&ta.data[r * m..(r + 1) * m]);
        }
        let v = Tensor::matrix(rows.len(), m, data)?;
        Ok(self.push(v, Op::GatherRows(a, rows.to_vec())))
    }

    /// Reverse pass from a `1 × 1` loss.
    pub fn gradients(&self, loss: Var) -> Result<Gradients, TensorError> {
        let lt = self.value(loss);
        if lt.data.len() != 1 {
            return Err(TensorError::NotScalar(lt.shape.clone()));
        }
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; self.nodes.len()];
        grads[loss.0] = Some(vec![1.0]);

        for idx in (0..=loss.0).rev() {
            let Some(g) = grads[idx].take() else { continue };
            let node = &self.nodes[idx];
            let out = &node.value;
            let mut acc = |v: Var, contrib: Vec<f64>| match &mut grads[v.0] {
                Some(existing) => existing.iter_mut().zip(contrib).for_each(|(e, c)| *e += c),
                slot @ None => *slot = Some(contrib),
            };
            match &node.op {
                Op::Leaf | Op::Param(_) => {}
                Op::MatMul(a, b) => {
                    let (ta, tb) = (self.value(*a), self.value(*b));
                    let (n, k) = (ta.shape[0], ta.shape[1]);
                    let m = tb.shape[1];
                    let mut ga = vec![0.0; n * k];
                    let mut gb = vec![0.0; k * m];
                    for i in 0..n {
                        for p in 0..k {
                            let mut s = 0.0;
                            for j in 0..m {
                                s += g[i * m + j] * tb.data[p * m + j];
                            }
                            ga[i * k + p] = s;
                            let x = ta.data[i * k + p];
                            if x != 0.0 {
                                for j in 0..m {
                                    gb[p * m + j] += x * g[i * m + j];
                                }
                            }
                        }
                    }
                    acc(*a, ga);
                    acc(*b, gb);
                }
                Op::Add(a, b) => {
                    acc(*a, g.clone());
                    acc(*b, g.clone());
                }
                Op::Sub(a, b) => {
                    acc(*b, g.iter().map(|x| -x).collect());
                    acc(*a, g.clone());
                }
                Op::Mul(a, b) => {
                    let (ta, tb) = (self.value(*a), self.value(*b));
                    acc(*a, g.iter().zip(&tb.data).map(|(x, y)| x * y).collect());
                    acc(*b, g.iter().zip(&ta.data).map(|(x, y)| x * y).collect());
                }
                Op::AddRow(a, bias) => {
                    let m = out.shape[1];
                    let mut gb = vec![0.0; m];
                    for (i, x) in g.iter().enumerate() {
                        gb[i % m] += x;
                    }
                    acc(*bias, gb);
                    acc(*a, g.clone());
                }
                Op::Scale(a, s) => acc(*a, g.iter().map(|x| x * s).collect()),
                Op::Sum(a) => {
                    let n = self.value(*a).data.len();
                    acc(*a, vec![g[0]; n]);
                }
                Op::RowSum(a) => {
                    let (n, m) = (self.value(*a).shape[0], self.value(*a).shape[1]);
                    acc(*a, (0..n * m).map(|i| g[i / m]).collect());
                }
                Op::MeanRows(a) => {
                    let (n, m) = (self.value(*a).shape[0], self.value(*a).shape[1]);
                    acc(*a, (0..n * m).map(|i| g[i % m] / n as f64).collect());
                }
                Op::Elu(a) => {
                    let ta = self.value(*a);
                    let d = ta
                        .data
                        .iter()
                        .zip(&g)
                        .map(|(&x, &gi)| if x > 0.0 { gi } else { gi * x.exp() });
                    acc(*a, d.collect());
                }
                Op::Log(a) => {
                    let ta = self.value(*a);
                    acc(*a, g.iter().zip(&ta.data).map(|(gi, x)| gi / x).collect());
                }
                Op::Exp(a) => acc(*a, g.iter().zip(&out.data).map(|(gi, y)| gi * y).collect()),
                Op::SoftmaxMasked(a, mask) => {
                    let dot: f64 = g.iter().zip(&out.data).map(|(gi, p)| gi * p).sum();
                    let d = out.data.iter().zip(&g).zip(mask).map(|((p, gi), &ok)| {
                        if ok {
                            p * (gi - dot)
                        } else {
                            0.0
                        }
                    });
                    acc(*a, d.collect());
                }
                Op::LogSoftmaxMasked(a, mask) => {
                    let total: f64 = g
                        .iter()
                        .zip(mask)
                        .filter(|(_, &ok)| ok)
                        .map(|(gi, _)| gi)
                        .sum();
                    let d = out.data.iter().zip(&g).zip(mask).map(|((y, gi), &ok)| {
                        if ok {
                            gi - y.exp() * total
                        } else {
                            0.0
                        }
                    });
                    acc(*a, d.collect());
                }
                Op::GatherRows(a, rows) => {
                    let ta = self.value(*a);
                    let m = ta.shape[1];
                    let mut ga = vec![0.0; ta.data.len()];
                    for (k, &r) in rows.iter().enumerate() {
                        for j in 0..m {
                            ga[r * m + j] += g[k * m + j];
                        }
                    }
                    acc(*a, ga);
                }
            }
            grads[idx] = Some(g);
        }
        Ok(Gradients { grads })
    }

    /// Reverse pass that also adds each parameter's gradient into its
    /// `grad` buffer in `params`. Calls accumulate until
    /// [`ParamSet::zero_grad`].
    pub fn backward(&self, loss: Var, params: &mut ParamSet) -> Result<Gradients, TensorError> {
        let grads = self.gradients(loss)?;
        for (idx, node) in self.nodes.iter().enumerate() {
            if let (Op::Param(id), Some(g)) = (&node.op, &grads.grads[idx]) {
                let buf = params
                    .get_mut(*id)
                    .grad
                    .get_or_insert_with(|| vec![0.0; g.len()]);
                buf.iter_mut().zip(g).for_each(|(b, x)| *b += x);
            }
        }
        Ok(grads)
    }
}

pub(crate) fn elu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        x.exp_m1()
    }
}

fn masked_logsumexp(t: &Tensor, mask: &[bool]) -> Result<f64, TensorError> {
    if mask.len() != t.data.len() {
        return Err(TensorError::ShapeMismatch {
            op: "softmax_masked",
            left: t.shape.clone(),
            right: vec![mask.len()],
        });
    }
    let max = t
        .data
        .iter()
        .zip(mask)
        .filter(|(_, &ok)| ok)
        .map(|(&x, _)| x)
        .fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(TensorError::AllMasked);
    }
    let s: f64 = t
        .data
        .iter()
        .zip(mask)
        .filter(|(_, &ok)| ok)
        .map(|(&x, _)| (x - max).exp())
        .sum();
    Ok(max + s.ln())
}

/// Probability vector over valid entries; masked entries are 0.
pub fn masked_softmax(t: &Tensor, mask: &[bool]) -> Result<Tensor, TensorError> {
    let lse = masked_logsumexp(t, mask)?;
    let data = t
        .data
        .iter()
        .zip(mask)
        .map(|(&x, &ok)| if ok { (x - lse).exp() } else { 0.0 })
        .collect();
    Tensor::new(t.shape.clone(), data)
}

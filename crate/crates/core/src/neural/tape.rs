//! Reverse-mode automatic differentiation over [`Tensor`] values.
//!
//! A tape records one forward computation; node ids are topologically
//! ordered by construction, so the backward pass is a single reverse
//! sweep dispatching per-op adjoint rules.

use super::tensor::Tensor;

pub type NodeId = usize;

enum Op {
    Leaf,
    /// y = W x, W (m,n), x (n,1)
    MatVec { w: NodeId, x: NodeId },
    /// y = Aᵀ x, A (p,h), x (p,1)
    MatVecT { a: NodeId, x: NodeId },
    /// Y = A Wᵀ, A (p,h), W (k,h)
    MatMulRt { a: NodeId, w: NodeId },
    Add { a: NodeId, b: NodeId },
    Mul { a: NodeId, b: NodeId },
    /// y = alpha * a + beta; only the scale matters going backward
    Affine { a: NodeId, alpha: f64 },
    Sigmoid { a: NodeId },
    Tanh { a: NodeId },
    /// contiguous row slice of a column vector
    SliceRows { a: NodeId, start: usize },
    /// column vectors stacked vertically
    ConcatRows { parts: Vec<NodeId> },
    /// column vectors laid out as matrix rows: part i -> row i
    StackRows { parts: Vec<NodeId> },
    /// each row of m plus vᵀ
    BroadcastAddRow { m: NodeId, v: NodeId },
    /// masked softmax over a column vector; masked entries output 0
    SoftmaxMasked { a: NodeId, mask: Vec<bool> },
    /// one row of a matrix as a column vector (embedding lookup)
    RowSelect { m: NodeId, row: usize },
    /// scalar cross-entropy from logits
    CrossEntropy { logits: NodeId, target: usize },
    /// elementwise multiply by a fixed mask (inverted dropout)
    Dropout { a: NodeId, mask: Vec<f64> },
}

struct Node {
    value: Tensor,
    op: Op,
}

#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

/// Gradients for every node of one backward sweep.
pub struct Grads {
    grads: Vec<Option<Tensor>>,
}

impl Grads {
    /// Gradient of the root with respect to node `id`; zeros when the
    /// node does not influence the root.
    pub fn get(&self, id: NodeId, like: &Tensor) -> Tensor {
        match &self.grads[id] {
            Some(g) => g.clone(),
            None => Tensor::zeros(like.rows(), like.cols()),
        }
    }

    pub fn get_ref(&self, id: NodeId) -> Option<&Tensor> {
        self.grads[id].as_ref()
    }
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

    pub fn value(&self, id: NodeId) -> &Tensor {
        &self.nodes[id].value
    }

    fn push(&mut self, value: Tensor, op: Op) -> NodeId {
        self.nodes.push(Node { value, op });
        self.nodes.len() - 1
    }

    pub fn leaf(&mut self, value: Tensor) -> NodeId {
        self.push(value, Op::Leaf)
    }

    pub fn zeros(&mut self, rows: usize, cols: usize) -> NodeId {
        self.leaf(Tensor::zeros(rows, cols))
    }

    pub fn matvec(&mut self, w: NodeId, x: NodeId) -> NodeId {
        let wt = self.value(w);
        let xt = self.value(x);
        debug_assert_eq!(wt.cols(), xt.rows());
        debug_assert_eq!(xt.cols(), 1);
        let (m, n) = wt.shape();
        let mut out = vec![0.0; m];
        let xd = xt.data();
        for (i, o) in out.iter_mut().enumerate() {
            let row = wt.row(i);
            let mut acc = 0.0;
            for j in 0..n {
                acc += row[j] * xd[j];
            }
            *o = acc;
        }
        self.push(Tensor::from_vec(m, 1, out), Op::MatVec { w, x })
    }

    pub fn matvec_t(&mut self, a: NodeId, x: NodeId) -> NodeId {
        let at = self.value(a);
        let xt = self.value(x);
        debug_assert_eq!(at.rows(), xt.rows());
        debug_assert_eq!(xt.cols(), 1);
        let (p, h) = at.shape();
        let mut out = vec![0.0; h];
        for i in 0..p {
            let xi = xt.at(i);
            let row = at.row(i);
            for j in 0..h {
                out[j] += row[j] * xi;
            }
        }
        self.push(Tensor::from_vec(h, 1, out), Op::MatVecT { a, x })
    }

    pub fn matmul_rt(&mut self, a: NodeId, w: NodeId) -> NodeId {
        let at = self.value(a);
        let wt = self.value(w);
        debug_assert_eq!(at.cols(), wt.cols());
        let (p, h) = at.shape();
        let k = wt.rows();
        let mut out = Tensor::zeros(p, k);
        for i in 0..p {
            let arow = at.row(i);
            for c in 0..k {
                let wrow = wt.row(c);
                let mut acc = 0.0;
                for j in 0..h {
                    acc += arow[j] * wrow[j];
                }
                out.row_mut(i)[c] = acc;
            }
        }
        self.push(out, Op::MatMulRt { a, w })
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let at = self.value(a);
        let bt = self.value(b);
        debug_assert_eq!(at.shape(), bt.shape());
        let mut out = at.clone();
        for (o, v) in out.data_mut().iter_mut().zip(bt.data()) {
            *o += v;
        }
        self.push(out, Op::Add { a, b })
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let at = self.value(a);
        let bt = self.value(b);
        debug_assert_eq!(at.shape(), bt.shape());
        let mut out = at.clone();
        for (o, v) in out.data_mut().iter_mut().zip(bt.data()) {
            *o *= v;
        }
        self.push(out, Op::Mul { a, b })
    }

    pub fn affine(&mut self, a: NodeId, alpha: f64, beta: f64) -> NodeId {
        let mut out = self.value(a).clone();
        for o in out.data_mut() {
            *o = alpha * *o + beta;
        }
        self.push(out, Op::Affine { a, alpha })
    }

    pub fn sigmoid(&mut self, a: NodeId) -> NodeId {
        let mut out = self.value(a).clone();
        for o in out.data_mut() {
            *o = 1.0 / (1.0 + (-*o).exp());
        }
        self.push(out, Op::Sigmoid { a })
    }

    pub fn tanh(&mut self, a: NodeId) -> NodeId {
        let mut out = self.value(a).clone();
        for o in out.data_mut() {
            *o = o.tanh();
        }
        self.push(out, Op::Tanh { a })
    }

    pub fn slice_rows(&mut self, a: NodeId, start: usize, len: usize) -> NodeId {
        let at = self.value(a);
        debug_assert_eq!(at.cols(), 1);
        let out = Tensor::from_vec(len, 1, at.data()[start..start + len].to_vec());
        self.push(out, Op::SliceRows { a, start })
    }

    pub fn concat_rows(&mut self, parts: &[NodeId]) -> NodeId {
        let mut data = Vec::new();
        for &p in parts {
            let t = self.value(p);
            debug_assert_eq!(t.cols(), 1);
            data.extend_from_slice(t.data());
        }
        let rows = data.len();
        self.push(
            Tensor::from_vec(rows, 1, data),
            Op::ConcatRows {
                parts: parts.to_vec(),
            },
        )
    }

    pub fn stack_rows(&mut self, parts: &[NodeId]) -> NodeId {
        assert!(!parts.is_empty());
        let h = self.value(parts[0]).rows();
        let mut out = Tensor::zeros(parts.len(), h);
        for (i, &p) in parts.iter().enumerate() {
            let t = self.value(p);
            debug_assert_eq!(t.shape(), (h, 1));
            out.row_mut(i).copy_from_slice(t.data());
        }
        self.push(
            out,
            Op::StackRows {
                parts: parts.to_vec(),
            },
        )
    }

    pub fn broadcast_add_row(&mut self, m: NodeId, v: NodeId) -> NodeId {
        let mt = self.value(m);
        let vt = self.value(v);
        debug_assert_eq!(mt.cols(), vt.rows());
        let mut out = mt.clone();
        let (p, h) = out.shape();
        for i in 0..p {
            let row = &mut out.data_mut()[i * h..(i + 1) * h];
            for j in 0..h {
                row[j] += vt.at(j);
            }
        }
        self.push(out, Op::BroadcastAddRow { m, v })
    }

    pub fn softmax_masked(&mut self, a: NodeId, mask: Vec<bool>) -> NodeId {
        let at = self.value(a);
        debug_assert_eq!(at.cols(), 1);
        debug_assert_eq!(at.rows(), mask.len());
        let mut out = Tensor::zeros(at.rows(), 1);
        let max = at
            .data()
            .iter()
            .zip(&mask)
            .filter(|(_, &m)| m)
            .map(|(v, _)| *v)
            .fold(f64::NEG_INFINITY, f64::max);
        if max.is_finite() {
            let mut z = 0.0;
            for i in 0..at.rows() {
                if mask[i] {
                    let e = (at.at(i) - max).exp();
                    out.data_mut()[i] = e;
                    z += e;
                }
            }
            for v in out.data_mut() {
                *v /= z;
            }
        }
        self.push(out, Op::SoftmaxMasked { a, mask })
    }

    pub fn row_select(&mut self, m: NodeId, row: usize) -> NodeId {
        let mt = self.value(m);
        let out = Tensor::from_vec(mt.cols(), 1, mt.row(row).to_vec());
        self.push(out, Op::RowSelect { m, row })
    }

    /// loss = logsumexp(logits) - logits[target]
    pub fn cross_entropy(&mut self, logits: NodeId, target: usize) -> NodeId {
        let z = self.value(logits);
        debug_assert_eq!(z.cols(), 1);
        let max = z.data().iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + z.data().iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        let loss = lse - z.at(target);
        self.push(
            Tensor::from_vec(1, 1, vec![loss]),
            Op::CrossEntropy { logits, target },
        )
    }

    pub fn dropout(&mut self, a: NodeId, mask: Vec<f64>) -> NodeId {
        let at = self.value(a);
        debug_assert_eq!(at.len(), mask.len());
        let mut out = at.clone();
        for (o, m) in out.data_mut().iter_mut().zip(&mask) {
            *o *= m;
        }
        self.push(out, Op::Dropout { a, mask })
    }

    /// Softmax of a node's value, computed off-tape (inference only).
    pub fn softmax_value(&self, logits: NodeId) -> Vec<f64> {
        let z = self.value(logits);
        let max = z.data().iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = z.data().iter().map(|v| (v - max).exp()).collect();
        let sum: f64 = exps.iter().sum();
        exps.into_iter().map(|e| e / sum).collect()
    }

    /// Reverse sweep from a scalar root.
    pub fn backward(&self, root: NodeId) -> Grads {
        debug_assert_eq!(self.value(root).shape(), (1, 1));
        let mut grads: Vec<Option<Tensor>> = vec![None; self.nodes.len()];
        grads[root] = Some(Tensor::from_vec(1, 1, vec![1.0]));

        for id in (0..=root).rev() {
            let Some(g) = grads[id].take() else { continue };
            self.push_adjoints(id, &g, &mut grads);
            grads[id] = Some(g);
        }
        Grads { grads }
    }

    fn accumulate(grads: &mut [Option<Tensor>], id: NodeId, like: (usize, usize)) -> &mut Tensor {
        grads[id].get_or_insert_with(|| Tensor::zeros(like.0, like.1))
    }

    fn push_adjoints(&self, id: NodeId, g: &Tensor, grads: &mut [Option<Tensor>]) {
        match &self.nodes[id].op {
            Op::Leaf => {}
            Op::MatVec { w, x } => {
                let wt = &self.nodes[*w].value;
                let xt = &self.nodes[*x].value;
                let (m, n) = wt.shape();
                {
                    let dw = Self::accumulate(grads, *w, (m, n));
                    for i in 0..m {
                        let gi = g.at(i);
                        if gi == 0.0 {
                            continue;
                        }
                        let drow = dw.row_mut(i);
                        let xd = xt.data();
                        for j in 0..n {
                            drow[j] += gi * xd[j];
                        }
                    }
                }
                {
                    let dx = Self::accumulate(grads, *x, (n, 1));
                    let dxd = dx.data_mut();
                    for i in 0..m {
                        let gi = g.at(i);
                        if gi == 0.0 {
                            continue;
                        }
                        let row = wt.row(i);
                        for j in 0..n {
                            dxd[j] += row[j] * gi;
                        }
                    }
                }
            }
            Op::MatVecT { a, x } => {
                let at = &self.nodes[*a].value;
                let xt = &self.nodes[*x].value;
                let (p, h) = at.shape();
                {
                    let da = Self::accumulate(grads, *a, (p, h));
                    for i in 0..p {
                        let xi = xt.at(i);
                        if xi == 0.0 {
                            continue;
                        }
                        let drow = da.row_mut(i);
                        for j in 0..h {
                            drow[j] += xi * g.at(j);
                        }
                    }
                }
                {
                    let dx = Self::accumulate(grads, *x, (p, 1));
                    let dxd = dx.data_mut();
                    for i in 0..p {
                        let row = at.row(i);
                        let mut acc = 0.0;
                        for j in 0..h {
                            acc += row[j] * g.at(j);
                        }
                        dxd[i] += acc;
                    }
                }
            }
            Op::MatMulRt { a, w } => {
                let at = &self.nodes[*a].value;
                let wt = &self.nodes[*w].value;
                let (p, h) = at.shape();
                let k = wt.rows();
                {
                    let da = Self::accumulate(grads, *a, (p, h));
                    for i in 0..p {
                        let grow = g.row(i);
                        let drow = da.row_mut(i);
                        for c in 0..k {
                            let gv = grow[c];
                            if gv == 0.0 {
                                continue;
                            }
                            let wrow = wt.row(c);
                            for j in 0..h {
                                drow[j] += gv * wrow[j];
                            }
                        }
                    }
                }
                {
                    let dw = Self::accumulate(grads, *w, (k, h));
                    for i in 0..p {
                        let grow = g.row(i);
                        let arow = at.row(i);
                        for c in 0..k {
                            let gv = grow[c];
                            if gv == 0.0 {
                                continue;
                            }
                            let drow = dw.row_mut(c);
                            for j in 0..h {
                                drow[j] += gv * arow[j];
                            }
                        }
                    }
                }
            }
            Op::Add { a, b } => {
                for &t in [a, b].iter() {
                    let like = self.nodes[*t].value.shape();
                    let dt = Self::accumulate(grads, *t, like);
                    for (d, gv) in dt.data_mut().iter_mut().zip(g.data()) {
                        *d += gv;
                    }
                }
            }
            Op::Mul { a, b } => {
                let av = self.nodes[*a].value.clone();
                let bv = &self.nodes[*b].value;
                {
                    let da = Self::accumulate(grads, *a, av.shape());
                    for ((d, gv), bvv) in da.data_mut().iter_mut().zip(g.data()).zip(bv.data()) {
                        *d += gv * bvv;
                    }
                }
                {
                    let db = Self::accumulate(grads, *b, bv.shape());
                    for ((d, gv), avv) in db.data_mut().iter_mut().zip(g.data()).zip(av.data()) {
                        *d += gv * avv;
                    }
                }
            }
            Op::Affine { a, alpha } => {
                let like = self.nodes[*a].value.shape();
                let da = Self::accumulate(grads, *a, like);
                for (d, gv) in da.data_mut().iter_mut().zip(g.data()) {
                    *d += alpha * gv;
                }
            }
            Op::Sigmoid { a } => {
                let y = &self.nodes[id].value;
                let da = Self::accumulate(grads, *a, y.shape());
                for ((d, gv), yv) in da.data_mut().iter_mut().zip(g.data()).zip(y.data()) {
                    *d += gv * yv * (1.0 - yv);
                }
            }
            Op::Tanh { a } => {
                let y = &self.nodes[id].value;
                let da = Self::accumulate(grads, *a, y.shape());
                for ((d, gv), yv) in da.data_mut().iter_mut().zip(g.data()).zip(y.data()) {
                    *d += gv * (1.0 - yv * yv);
                }
            }
            Op::SliceRows { a, start } => {
                let like = self.nodes[*a].value.shape();
                let da = Self::accumulate(grads, *a, like);
                for (i, gv) in g.data().iter().enumerate() {
                    da.data_mut()[start + i] += gv;
                }
            }
            Op::ConcatRows { parts } => {
                let mut offset = 0;
                for &p in parts {
                    let rows = self.nodes[p].value.rows();
                    let dp = Self::accumulate(grads, p, (rows, 1));
                    for i in 0..rows {
                        dp.data_mut()[i] += g.at(offset + i);
                    }
                    offset += rows;
                }
            }
            Op::StackRows { parts } => {
                for (i, &p) in parts.iter().enumerate() {
                    let rows = self.nodes[p].value.rows();
                    let dp = Self::accumulate(grads, p, (rows, 1));
                    let grow = g.row(i);
                    for j in 0..rows {
                        dp.data_mut()[j] += grow[j];
                    }
                }
            }
            Op::BroadcastAddRow { m, v } => {
                let (p, h) = self.nodes[*m].value.shape();
                {
                    let dm = Self::accumulate(grads, *m, (p, h));
                    for (d, gv) in dm.data_mut().iter_mut().zip(g.data()) {
                        *d += gv;
                    }
                }
                {
                    let dv = Self::accumulate(grads, *v, (h, 1));
                    for i in 0..p {
                        let grow = g.row(i);
                        for j in 0..h {
                            dv.data_mut()[j] += grow[j];
                        }
                    }
                }
            }
            Op::SoftmaxMasked { a, mask } => {
                let y = &self.nodes[id].value;
                let p = y.rows();
                let dot: f64 = (0..p)
                    .filter(|&i| mask[i])
                    .map(|i| g.at(i) * y.at(i))
                    .sum();
                let da = Self::accumulate(grads, *a, (p, 1));
                for i in 0..p {
                    if mask[i] {
                        da.data_mut()[i] += y.at(i) * (g.at(i) - dot);
                    }
                }
            }
            Op::RowSelect { m, row } => {
                let like = self.nodes[*m].value.shape();
                let dm = Self::accumulate(grads, *m, like);
                let drow = dm.row_mut(*row);
                for (d, gv) in drow.iter_mut().zip(g.data()) {
                    *d += gv;
                }
            }
            Op::CrossEntropy { logits, target } => {
                let z = &self.nodes[*logits].value;
                let gscalar = g.at(0);
                let max = z.data().iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let sum: f64 = z.data().iter().map(|v| (v - max).exp()).sum();
                let dl = Self::accumulate(grads, *logits, z.shape());
                for (i, d) in dl.data_mut().iter_mut().enumerate() {
                    let soft = (z.at(i) - max).exp() / sum;
                    let indicator = if i == *target { 1.0 } else { 0.0 };
                    *d += gscalar * (soft - indicator);
                }
            }
            Op::Dropout { a, mask } => {
                let like = self.nodes[*a].value.shape();
                let da = Self::accumulate(grads, *a, like);
                for ((d, gv), m) in da.data_mut().iter_mut().zip(g.data()).zip(mask) {
                    *d += gv * m;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Central finite differences through an arbitrary tape program.
    fn finite_diff(
        build: &dyn Fn(&mut Tape, &[Tensor]) -> NodeId,
        inputs: &[Tensor],
    ) -> Vec<Tensor> {
        let h = 1e-6;
        let mut out = Vec::new();
        for (k, input) in inputs.iter().enumerate() {
            let mut grad = Tensor::zeros(input.rows(), input.cols());
            for e in 0..input.len() {
                let eval = |delta: f64| -> f64 {
                    let mut perturbed: Vec<Tensor> = inputs.to_vec();
                    perturbed[k].data_mut()[e] += delta;
                    let mut tape = Tape::new();
                    let root = build(&mut tape, &perturbed);
                    tape.value(root).at(0)
                };
                grad.data_mut()[e] = (eval(h) - eval(-h)) / (2.0 * h);
            }
            out.push(grad);
        }
        out
    }

    fn check(build: &dyn Fn(&mut Tape, &[Tensor]) -> NodeId, inputs: &[Tensor]) {
        let mut tape = Tape::new();
        let root = build(&mut tape, inputs);
        let grads = tape.backward(root);
        let fd = finite_diff(build, inputs);
        for (k, expected) in fd.iter().enumerate() {
            let got = grads.get(k, expected);
            for (a, b) in got.data().iter().zip(expected.data()) {
                let denom = (a.abs() + b.abs()).max(1.0);
                assert!(
                    ((a - b) / denom).abs() < 1e-6,
                    "input {k}: analytic {a} vs fd {b}"
                );
            }
        }
    }

    fn t(rows: usize, cols: usize, vals: &[f64]) -> Tensor {
        Tensor::from_vec(rows, cols, vals.to_vec())
    }

    #[test]
    fn matvec_grads_match_finite_differences() {
        let build = |tape: &mut Tape, inp: &[Tensor]| {
            let w = tape.leaf(inp[0].clone());
            let x = tape.leaf(inp[1].clone());
            let y = tape.matvec(w, x);
            let s = tape.sigmoid(y);
            tape.cross_entropy(s, 1)
        };
        check(
            &build,
            &[
                t(3, 2, &[0.5, -0.2, 0.1, 0.7, -0.4, 0.3]),
                t(2, 1, &[0.9, -1.1]),
            ],
        );
    }

    #[test]
    fn attention_shaped_program_grads_match() {
        // stack, matmul_rt, broadcast add, tanh, matvec, softmax, matvec_t
        let build = |tape: &mut Tape, inp: &[Tensor]| {
            let h1 = tape.leaf(inp[0].clone());
            let h2 = tape.leaf(inp[1].clone());
            let w = tape.leaf(inp[2].clone());
            let q = tape.leaf(inp[3].clone());
            let v = tape.leaf(inp[4].clone());
            let hs = tape.stack_rows(&[h1, h2]);
            let keys = tape.matmul_rt(hs, w);
            let shifted = tape.broadcast_add_row(keys, q);
            let scored = tape.tanh(shifted);
            let scores = tape.matvec(scored, v);
            let alpha = tape.softmax_masked(scores, vec![true, true]);
            let ctx = tape.matvec_t(hs, alpha);
            tape.cross_entropy(ctx, 0)
        };
        check(
            &build,
            &[
                t(3, 1, &[0.2, -0.5, 0.8]),
                t(3, 1, &[-0.3, 0.6, 0.1]),
                t(3, 3, &[0.1, 0.2, -0.1, 0.4, -0.2, 0.3, 0.0, 0.5, -0.4]),
                t(3, 1, &[0.3, -0.1, 0.2]),
                t(3, 1, &[0.7, 0.2, -0.6]),
            ],
        );
    }

    #[test]
    fn gate_shaped_program_grads_match() {
        // slices, mul, affine, concat
        let build = |tape: &mut Tape, inp: &[Tensor]| {
            let gates = tape.leaf(inp[0].clone());
            let h = tape.leaf(inp[1].clone());
            let r = tape.slice_rows(gates, 0, 2);
            let z = tape.slice_rows(gates, 2, 2);
            let zs = tape.sigmoid(z);
            let rs = tape.sigmoid(r);
            let rh = tape.mul(rs, h);
            let one_minus = tape.affine(zs, -1.0, 1.0);
            let mixed = tape.mul(one_minus, rh);
            let cat = tape.concat_rows(&[mixed, zs]);
            tape.cross_entropy(cat, 2)
        };
        check(
            &build,
            &[t(4, 1, &[0.5, -0.7, 0.2, 0.9]), t(2, 1, &[0.4, -0.3])],
        );
    }

    #[test]
    fn row_select_and_dropout_grads_match() {
        let build = |tape: &mut Tape, inp: &[Tensor]| {
            let embed = tape.leaf(inp[0].clone());
            let x = tape.row_select(embed, 1);
            let d = tape.dropout(x, vec![2.0, 0.0, 2.0]);
            tape.cross_entropy(d, 0)
        };
        check(&build, &[t(2, 3, &[0.1, 0.2, 0.3, -0.4, 0.5, -0.6])]);
    }

    #[test]
    fn masked_softmax_gives_no_mass_to_masked_entries() {
        let mut tape = Tape::new();
        let scores = tape.leaf(t(3, 1, &[5.0, 1.0, 100.0]));
        let alpha = tape.softmax_masked(scores, vec![true, true, false]);
        let v = tape.value(alpha);
        assert_eq!(v.at(2), 0.0);
        assert!((v.at(0) + v.at(1) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn uniform_logits_cross_entropy_is_ln_vocab() {
        let mut tape = Tape::new();
        let logits = tape.leaf(Tensor::zeros(7, 1));
        let loss = tape.cross_entropy(logits, 3);
        assert!((tape.value(loss).at(0) - (7.0f64).ln()).abs() < 1e-9);
    }

    #[test]
    fn confident_correct_prediction_has_near_zero_loss() {
        let mut tape = Tape::new();
        let mut logits = Tensor::zeros(5, 1);
        logits.data_mut()[2] = 60.0;
        let id = tape.leaf(logits);
        let loss = tape.cross_entropy(id, 2);
        assert!(tape.value(loss).at(0) < 1e-9);
    }
}

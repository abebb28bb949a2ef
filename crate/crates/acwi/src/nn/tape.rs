//! Reverse-mode automatic differentiation over `f64` matrices.
//!
//! A [`Tape`] records a computation as a flat list of nodes; calling
//! [`Tape::backward`] on a scalar output walks the list in reverse and
//! accumulates gradients for every node that contributed to it. The op set is
//! deliberately small: matrix multiply, broadcasting elementwise arithmetic,
//! a handful of pointwise nonlinearities, row-wise softmax variants, and the
//! reductions needed to build scalar losses.
//!
//! All values are dense two-dimensional `f64` arrays. Column vectors are
//! `[n, 1]`, scalars are `[1, 1]`. Shape mismatches are programmer errors and
//! panic; numerical problems (a non-finite loss) surface as `Err` so the
//! training loop can halt cleanly.

use ndarray::{Array2, Axis};

use crate::error::NnError;

/// Handle to a node on a [`Tape`]. Valid only for the tape that created it.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct TensorId(pub(crate) usize);

enum Op {
    /// Input node; gradients accumulate here but do not propagate further.
    Leaf,
    /// `a.dot(b)`.
    MatMul(TensorId, TensorId),
    /// Elementwise with broadcasting: `a + b`.
    Add(TensorId, TensorId),
    /// Elementwise with broadcasting: `a - b`.
    Sub(TensorId, TensorId),
    /// Elementwise with broadcasting: `a * b`.
    Mul(TensorId, TensorId),
    /// Elementwise with broadcasting: `a / b`.
    Div(TensorId, TensorId),
    /// `-a`.
    Neg(TensorId),
    /// `a + c` for scalar `c`.
    AddScalar(TensorId),
    /// `a * c` for scalar `c`.
    MulScalar(TensorId, f64),
    Tanh(TensorId),
    Exp(TensorId),
    Ln(TensorId),
    Sqrt(TensorId),
    Square(TensorId),
    /// Hard clamp to `[lo, hi]`; gradient passes only strictly inside.
    Clamp(TensorId, f64, f64),
    /// Elementwise minimum of two same-shaped arrays.
    Minimum(TensorId, TensorId),
    /// Row-wise softmax.
    Softmax(TensorId),
    /// Row-wise log-softmax (numerically stable).
    LogSoftmax(TensorId),
    /// Sum of all entries, `[1, 1]`.
    Sum(TensorId),
    /// Mean of all entries, `[1, 1]`.
    Mean(TensorId),
    /// Sum across columns: `[r, c] -> [r, 1]`.
    RowSum(TensorId),
    /// `out[i, 0] = a[i, idx[i]]`.
    GatherCols(TensorId, Vec<usize>),
    /// Horizontal concatenation `[r, c1] ++ [r, c2] -> [r, c1 + c2]`.
    ConcatCols(TensorId, TensorId),
}

struct Node {
    value: Array2<f64>,
    op: Op,
}

/// A recorded computation graph plus (after [`Tape::backward`]) its gradients.
#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
    grads: Vec<Option<Array2<f64>>>,
}

/// Shape a broadcasting binary op produces, validating compatibility.
fn broadcast_shape(a: (usize, usize), b: (usize, usize)) -> (usize, usize) {
    let dim = |x: usize, y: usize, axis: &str| -> usize {
        if x == y {
            x
        } else if x == 1 {
            y
        } else if y == 1 {
            x
        } else {
            panic!("incompatible {axis} dims for broadcast: {x} vs {y}");
        }
    };
    (dim(a.0, b.0, "row"), dim(a.1, b.1, "col"))
}

/// Broadcast `a` to `shape` (each axis must match or be 1).
fn bcast(a: &Array2<f64>, shape: (usize, usize)) -> Array2<f64> {
    if a.dim() == shape {
        a.clone()
    } else {
        a.broadcast(shape)
            .unwrap_or_else(|| panic!("cannot broadcast {:?} to {:?}", a.dim(), shape))
            .to_owned()
    }
}

/// Sum `grad` back down to `shape` (inverse of broadcasting).
fn reduce_to(grad: &Array2<f64>, shape: (usize, usize)) -> Array2<f64> {
    let mut g = grad.clone();
    if shape.0 == 1 && g.nrows() > 1 {
        g = g.sum_axis(Axis(0)).insert_axis(Axis(0));
    }
    if shape.1 == 1 && g.ncols() > 1 {
        g = g.sum_axis(Axis(1)).insert_axis(Axis(1));
    }
    debug_assert_eq!(g.dim(), shape);
    g
}

fn stable_softmax_rows(x: &Array2<f64>) -> Array2<f64> {
    let mut out = x.clone();
    for mut row in out.rows_mut() {
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        row.mapv_inplace(|v| (v - max).exp());
        let total: f64 = row.sum();
        row.mapv_inplace(|v| v / total);
    }
    out
}

fn stable_log_softmax_rows(x: &Array2<f64>) -> Array2<f64> {
    let mut out = x.clone();
    for mut row in out.rows_mut() {
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let log_sum = row.iter().map(|v| (v - max).exp()).sum::<f64>().ln() + max;
        row.mapv_inplace(|v| v - log_sum);
    }
    out
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of recorded nodes.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Array2<f64>, op: Op) -> TensorId {
        self.nodes.push(Node { value, op });
        TensorId(self.nodes.len() - 1)
    }

    /// Record an input node.
    pub fn leaf(&mut self, value: Array2<f64>) -> TensorId {
        self.push(value, Op::Leaf)
    }

    /// Record a `[1, 1]` input node.
    pub fn leaf_scalar(&mut self, x: f64) -> TensorId {
        self.leaf(Array2::from_elem((1, 1), x))
    }

    /// Record an `[n, 1]` column-vector input node.
    pub fn leaf_col(&mut self, xs: &[f64]) -> TensorId {
        self.leaf(Array2::from_shape_vec((xs.len(), 1), xs.to_vec()).expect("column shape"))
    }

    /// Value of a node.
    pub fn value(&self, id: TensorId) -> &Array2<f64> {
        &self.nodes[id.0].value
    }

    /// Value of a `[1, 1]` node as a plain `f64`.
    pub fn scalar_value(&self, id: TensorId) -> f64 {
        let v = &self.nodes[id.0].value;
        assert_eq!(v.dim(), (1, 1), "scalar_value on non-scalar node");
        v[(0, 0)]
    }

    pub fn shape(&self, id: TensorId) -> (usize, usize) {
        self.nodes[id.0].value.dim()
    }

    /// Gradient of the last `backward` target with respect to node `id`.
    ///
    /// `None` if `backward` has not run or the node did not influence the
    /// target.
    pub fn grad(&self, id: TensorId) -> Option<&Array2<f64>> {
        self.grads.get(id.0).and_then(|g| g.as_ref())
    }

    pub fn matmul(&mut self, a: TensorId, b: TensorId) -> TensorId {
        let (ar, ac) = self.shape(a);
        let (br, bc) = self.shape(b);
        assert_eq!(
            ac, br,
            "matmul inner dims: [{ar}x{ac}] . [{br}x{bc}]"
        );
        let value = self.nodes[a.0].value.dot(&self.nodes[b.0].value);
        self.push(value, Op::MatMul(a, b))
    }

    fn binary_broadcast(
        &mut self,
        a: TensorId,
        b: TensorId,
        f: impl Fn(&Array2<f64>, &Array2<f64>) -> Array2<f64>,
        op: Op,
    ) -> TensorId {
        let shape = broadcast_shape(self.shape(a), self.shape(b));
        let av = bcast(&self.nodes[a.0].value, shape);
        let bv = bcast(&self.nodes[b.0].value, shape);
        self.push(f(&av, &bv), op)
    }

    pub fn add(&mut self, a: TensorId, b: TensorId) -> TensorId {
        self.binary_broadcast(a, b, |x, y| x + y, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: TensorId, b: TensorId) -> TensorId {
        self.binary_broadcast(a, b, |x, y| x - y, Op::Sub(a, b))
    }

    pub fn mul(&mut self, a: TensorId, b: TensorId) -> TensorId {
        self.binary_broadcast(a, b, |x, y| x * y, Op::Mul(a, b))
    }

    pub fn div(&mut self, a: TensorId, b: TensorId) -> TensorId {
        self.binary_broadcast(a, b, |x, y| x / y, Op::Div(a, b))
    }

    pub fn neg(&mut self, a: TensorId) -> TensorId {
        let value = self.nodes[a.0].value.mapv(|v| -v);
        self.push(value, Op::Neg(a))
    }

    pub fn add_scalar(&mut self, a: TensorId, c: f64) -> TensorId {
        let value = self.nodes[a.0].value.mapv(|v| v + c);
        self.push(value, Op::AddScalar(a))
    }

    pub fn mul_scalar(&mut self, a: TensorId, c: f64) -> TensorId {
        let value = self.nodes[a.0].value.mapv(|v| v * c);
        self.push(value, Op::MulScalar(a, c))
    }

    pub fn tanh(&mut self, a: TensorId) -> TensorId {
        let value = self.nodes[a.0].value.mapv(f64::tanh);
        self.push(value, Op::Tanh(a))
    }

    pub fn exp(&mut self, a: TensorId) -> TensorId {
        let value = self.nodes[a.0].value.mapv(f64::exp);
        self.push(value, Op::Exp(a))
    }

    pub fn ln(&mut self, a: TensorId) -> TensorId {
        let value = self.nodes[a.0].value.mapv(f64::ln);
        self.push(value, Op::Ln(a))
    }

    pub fn sqrt(&mut self, a: TensorId) -> TensorId {
        let value = self.nodes[a.0].value.mapv(f64::sqrt);
        self.push(value, Op::Sqrt(a))
    }

    pub fn square(&mut self, a: TensorId) -> TensorId {
        let value = self.nodes[a.0].value.mapv(|v| v * v);
        self.push(value, Op::Square(a))
    }

    /// Hard clamp. Gradient is identity strictly inside `(lo, hi)` and zero
    /// at or beyond the bounds, so saturated entries stop learning.
    pub fn clamp(&mut self, a: TensorId, lo: f64, hi: f64) -> TensorId {
        assert!(lo <= hi, "clamp bounds inverted: [{lo}, {hi}]");
        let value = self.nodes[a.0].value.mapv(|v| v.clamp(lo, hi));
        self.push(value, Op::Clamp(a, lo, hi))
    }

    /// Elementwise minimum. Ties route the gradient to `a`.
    pub fn minimum(&mut self, a: TensorId, b: TensorId) -> TensorId {
        assert_eq!(self.shape(a), self.shape(b), "minimum needs equal shapes");
        let mut value = self.nodes[a.0].value.clone();
        value.zip_mut_with(&self.nodes[b.0].value, |x, &y| *x = x.min(y));
        self.push(value, Op::Minimum(a, b))
    }

    pub fn softmax(&mut self, a: TensorId) -> TensorId {
        let value = stable_softmax_rows(&self.nodes[a.0].value);
        self.push(value, Op::Softmax(a))
    }

    pub fn log_softmax(&mut self, a: TensorId) -> TensorId {
        let value = stable_log_softmax_rows(&self.nodes[a.0].value);
        self.push(value, Op::LogSoftmax(a))
    }

    pub fn sum(&mut self, a: TensorId) -> TensorId {
        let value = Array2::from_elem((1, 1), self.nodes[a.0].value.sum());
        self.push(value, Op::Sum(a))
    }

    pub fn mean(&mut self, a: TensorId) -> TensorId {
        let v = &self.nodes[a.0].value;
        let value = Array2::from_elem((1, 1), v.sum() / v.len() as f64);
        self.push(value, Op::Mean(a))
    }

    pub fn row_sum(&mut self, a: TensorId) -> TensorId {
        let value = self.nodes[a.0]
            .value
            .sum_axis(Axis(1))
            .insert_axis(Axis(1));
        self.push(value, Op::RowSum(a))
    }

    /// Pick one column per row: `out[i, 0] = a[i, idx[i]]`.
    pub fn gather_cols(&mut self, a: TensorId, idx: &[usize]) -> TensorId {
        let v = &self.nodes[a.0].value;
        assert_eq!(idx.len(), v.nrows(), "one index per row");
        for (i, &j) in idx.iter().enumerate() {
            assert!(j < v.ncols(), "gather index {j} out of range at row {i}");
        }
        let value = Array2::from_shape_fn((v.nrows(), 1), |(i, _)| v[(i, idx[i])]);
        self.push(value, Op::GatherCols(a, idx.to_vec()))
    }

    pub fn concat_cols(&mut self, a: TensorId, b: TensorId) -> TensorId {
        let av = &self.nodes[a.0].value;
        let bv = &self.nodes[b.0].value;
        assert_eq!(av.nrows(), bv.nrows(), "concat_cols needs equal row counts");
        let mut value = Array2::zeros((av.nrows(), av.ncols() + bv.ncols()));
        value.slice_mut(ndarray::s![.., ..av.ncols()]).assign(av);
        value.slice_mut(ndarray::s![.., av.ncols()..]).assign(bv);
        self.push(value, Op::ConcatCols(a, b))
    }

    fn accumulate(&mut self, id: TensorId, g: Array2<f64>) {
        debug_assert_eq!(g.dim(), self.nodes[id.0].value.dim());
        match &mut self.grads[id.0] {
            Some(existing) => *existing += &g,
            slot @ None => *slot = Some(g),
        }
    }

    /// Backpropagate from the scalar node `loss`, filling per-node gradients.
    ///
    /// Errors if `loss` is not finite. Gradients from any previous `backward`
    /// on this tape are discarded first.
    pub fn backward(&mut self, loss: TensorId) -> Result<(), NnError> {
        let lv = &self.nodes[loss.0].value;
        assert_eq!(lv.dim(), (1, 1), "backward target must be a 1x1 scalar");
        let loss_value = lv[(0, 0)];
        if !loss_value.is_finite() {
            return Err(NnError::NonFiniteLoss(loss_value));
        }

        self.grads.clear();
        self.grads.resize(self.nodes.len(), None);
        self.grads[loss.0] = Some(Array2::ones((1, 1)));

        for i in (0..=loss.0).rev() {
            // Take the gradient to appease the borrow checker; it is restored
            // below so leaf gradients stay readable after backward.
            let Some(g) = self.grads[i].take() else {
                continue;
            };
            // Split borrows: read node values immutably, write grads via
            // buffered updates.
            let updates: Vec<(TensorId, Array2<f64>)> = {
                let node = &self.nodes[i];
                let out = &node.value;
                match &node.op {
                    Op::Leaf => vec![],
                    Op::MatMul(a, b) => {
                        let av = &self.nodes[a.0].value;
                        let bv = &self.nodes[b.0].value;
                        vec![(*a, g.dot(&bv.t())), (*b, av.t().dot(&g))]
                    }
                    Op::Add(a, b) => {
                        let sa = self.nodes[a.0].value.dim();
                        let sb = self.nodes[b.0].value.dim();
                        vec![(*a, reduce_to(&g, sa)), (*b, reduce_to(&g, sb))]
                    }
                    Op::Sub(a, b) => {
                        let sa = self.nodes[a.0].value.dim();
                        let sb = self.nodes[b.0].value.dim();
                        vec![(*a, reduce_to(&g, sa)), (*b, reduce_to(&g.mapv(|v| -v), sb))]
                    }
                    Op::Mul(a, b) => {
                        let av = &self.nodes[a.0].value;
                        let bv = &self.nodes[b.0].value;
                        let ga = &g * &bcast(bv, g.dim());
                        let gb = &g * &bcast(av, g.dim());
                        vec![(*a, reduce_to(&ga, av.dim())), (*b, reduce_to(&gb, bv.dim()))]
                    }
                    Op::Div(a, b) => {
                        let av = &self.nodes[a.0].value;
                        let bv = &self.nodes[b.0].value;
                        let bb = bcast(bv, g.dim());
                        let ab = bcast(av, g.dim());
                        let ga = &g / &bb;
                        let gb = -(&g * &ab) / (&bb * &bb);
                        vec![(*a, reduce_to(&ga, av.dim())), (*b, reduce_to(&gb, bv.dim()))]
                    }
                    Op::Neg(a) => vec![(*a, g.mapv(|v| -v))],
                    Op::AddScalar(a) => vec![(*a, g.clone())],
                    Op::MulScalar(a, c) => vec![(*a, g.mapv(|v| v * c))],
                    Op::Tanh(a) => {
                        let ga = &g * &out.mapv(|y| 1.0 - y * y);
                        vec![(*a, ga)]
                    }
                    Op::Exp(a) => vec![(*a, &g * out)],
                    Op::Ln(a) => {
                        let av = &self.nodes[a.0].value;
                        vec![(*a, &g / av)]
                    }
                    Op::Sqrt(a) => {
                        let ga = &g / &out.mapv(|y| 2.0 * y);
                        vec![(*a, ga)]
                    }
                    Op::Square(a) => {
                        let av = &self.nodes[a.0].value;
                        vec![(*a, 2.0 * (&g * av))]
                    }
                    Op::Clamp(a, lo, hi) => {
                        let av = &self.nodes[a.0].value;
                        let mask = av.mapv(|v| if v > *lo && v < *hi { 1.0 } else { 0.0 });
                        vec![(*a, &g * &mask)]
                    }
                    Op::Minimum(a, b) => {
                        let av = &self.nodes[a.0].value;
                        let bv = &self.nodes[b.0].value;
                        let mut ga = g.clone();
                        let mut gb = g.clone();
                        ndarray::Zip::from(&mut ga)
                            .and(&mut gb)
                            .and(av)
                            .and(bv)
                            .for_each(|ga, gb, &x, &y| {
                                if x <= y {
                                    *gb = 0.0;
                                } else {
                                    *ga = 0.0;
                                }
                            });
                        vec![(*a, ga), (*b, gb)]
                    }
                    Op::Softmax(a) => {
                        // dX = y * (g - rowsum(g * y))
                        let gy = &g * out;
                        let dot = gy.sum_axis(Axis(1)).insert_axis(Axis(1));
                        let ga = out * &(&g - &bcast(&dot, g.dim()));
                        vec![(*a, ga)]
                    }
                    Op::LogSoftmax(a) => {
                        // dX = g - softmax(x) * rowsum(g)
                        let p = out.mapv(f64::exp);
                        let rs = g.sum_axis(Axis(1)).insert_axis(Axis(1));
                        let ga = &g - &(&p * &bcast(&rs, p.dim()));
                        vec![(*a, ga)]
                    }
                    Op::Sum(a) => {
                        let av = &self.nodes[a.0].value;
                        vec![(*a, Array2::from_elem(av.dim(), g[(0, 0)]))]
                    }
                    Op::Mean(a) => {
                        let av = &self.nodes[a.0].value;
                        let scale = g[(0, 0)] / av.len() as f64;
                        vec![(*a, Array2::from_elem(av.dim(), scale))]
                    }
                    Op::RowSum(a) => {
                        let av = &self.nodes[a.0].value;
                        vec![(*a, bcast(&g, av.dim()))]
                    }
                    Op::GatherCols(a, idx) => {
                        let av = &self.nodes[a.0].value;
                        let mut ga = Array2::zeros(av.dim());
                        for (i, &j) in idx.iter().enumerate() {
                            ga[(i, j)] += g[(i, 0)];
                        }
                        vec![(*a, ga)]
                    }
                    Op::ConcatCols(a, b) => {
                        let ca = self.nodes[a.0].value.ncols();
                        let ga = g.slice(ndarray::s![.., ..ca]).to_owned();
                        let gb = g.slice(ndarray::s![.., ca..]).to_owned();
                        vec![(*a, ga), (*b, gb)]
                    }
                }
            };
            self.grads[i] = Some(g);
            for (id, upd) in updates {
                self.accumulate(id, upd);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use ndarray::array;

    /// Central-difference gradient of `f` at `x`, perturbing one entry at a
    /// time. `f` rebuilds the computation from scratch on a fresh tape.
    fn finite_diff(x: &Array2<f64>, f: &dyn Fn(&Array2<f64>) -> f64) -> Array2<f64> {
        let h = 1e-5;
        let mut g = Array2::zeros(x.dim());
        for i in 0..x.nrows() {
            for j in 0..x.ncols() {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[(i, j)] += h;
                xm[(i, j)] -= h;
                g[(i, j)] = (f(&xp) - f(&xm)) / (2.0 * h);
            }
        }
        g
    }

    fn assert_grad_close(analytic: &Array2<f64>, numeric: &Array2<f64>) {
        for (a, n) in analytic.iter().zip(numeric.iter()) {
            let denom = a.abs().max(n.abs()).max(1e-8);
            assert!(
                ((a - n) / denom).abs() < 1e-3,
                "gradient mismatch: analytic {a} vs numeric {n}"
            );
        }
    }

    /// Run backward on `build(x)` and compare the leaf gradient with finite
    /// differences.
    fn gradcheck(x: Array2<f64>, build: impl Fn(&mut Tape, TensorId) -> TensorId) {
        let mut tape = Tape::new();
        let xid = tape.leaf(x.clone());
        let loss = build(&mut tape, xid);
        tape.backward(loss).expect("finite loss");
        let analytic = tape.grad(xid).expect("leaf grad").clone();
        let numeric = finite_diff(&x, &|xv: &Array2<f64>| {
            let mut t = Tape::new();
            let id = t.leaf(xv.clone());
            let l = build(&mut t, id);
            t.scalar_value(l)
        });
        assert_grad_close(&analytic, &numeric);
    }

    #[test]
    fn matmul_gradients_match_finite_differences() {
        let a = array![[0.3, -1.2, 0.5], [2.0, 0.1, -0.7]];
        let b = array![[1.0, -0.4], [0.2, 0.9], [-1.5, 0.3]];
        // Gradient w.r.t. the left operand.
        gradcheck(a.clone(), |t, x| {
            let bid = t.leaf(b.clone());
            let y = t.matmul(x, bid);
            let y2 = t.square(y);
            t.sum(y2)
        });
        // Gradient w.r.t. the right operand.
        gradcheck(b.clone(), |t, x| {
            let aid = t.leaf(a.clone());
            let y = t.matmul(aid, x);
            let y2 = t.square(y);
            t.sum(y2)
        });
    }

    #[test]
    fn broadcast_add_mul_gradients() {
        let x = array![[0.5, -0.2, 1.1], [0.0, 2.0, -1.0]];
        let row = array![[0.3, -0.8, 0.25]];
        gradcheck(x.clone(), |t, xid| {
            let r = t.leaf(row.clone());
            let s = t.add(xid, r);
            let m = t.mul(s, xid);
            t.sum(m)
        });
        // Broadcast operand receives the reduced gradient.
        gradcheck(row.clone(), |t, rid| {
            let xid = t.leaf(x.clone());
            let s = t.add(xid, rid);
            let sq = t.square(s);
            t.sum(sq)
        });
    }

    #[test]
    fn div_and_sqrt_gradients() {
        let x = array![[1.4, 0.6], [2.2, 0.9]];
        let y = array![[0.7, 1.9], [1.1, 0.4]];
        gradcheck(x.clone(), |t, xid| {
            let yid = t.leaf(y.clone());
            let d = t.div(xid, yid);
            t.sum(d)
        });
        gradcheck(y.clone(), |t, yid| {
            let xid = t.leaf(x.clone());
            let d = t.div(xid, yid);
            t.sum(d)
        });
        gradcheck(x.clone(), |t, xid| {
            let s = t.sqrt(xid);
            t.sum(s)
        });
    }

    #[test]
    fn pointwise_nonlinearity_gradients() {
        let x = array![[0.5, -1.2, 0.0], [2.0, -0.3, 1.7]];
        gradcheck(x.clone(), |t, id| {
            let y = t.tanh(id);
            let y2 = t.square(y);
            t.sum(y2)
        });
        gradcheck(x.clone(), |t, id| {
            let y = t.exp(id);
            t.sum(y)
        });
        let pos = array![[0.5, 1.2, 0.3], [2.0, 0.4, 1.7]];
        gradcheck(pos, |t, id| {
            let y = t.ln(id);
            t.sum(y)
        });
    }

    #[test]
    fn clamp_blocks_gradient_outside_bounds() {
        let x = array![[-2.0, 0.0, 0.5, 3.0]];
        let mut tape = Tape::new();
        let id = tape.leaf(x);
        let y = tape.clamp(id, -1.0, 1.0);
        let s = tape.sum(y);
        tape.backward(s).unwrap();
        let g = tape.grad(id).unwrap();
        assert_eq!(g.as_slice().unwrap(), &[0.0, 1.0, 1.0, 0.0]);
    }

    #[test]
    fn minimum_routes_gradient_to_smaller_side() {
        let a = array![[1.0, 5.0]];
        let b = array![[2.0, 3.0]];
        let mut tape = Tape::new();
        let aid = tape.leaf(a);
        let bid = tape.leaf(b);
        let m = tape.minimum(aid, bid);
        let s = tape.sum(m);
        assert_eq!(tape.value(m).as_slice().unwrap(), &[1.0, 3.0]);
        tape.backward(s).unwrap();
        assert_eq!(tape.grad(aid).unwrap().as_slice().unwrap(), &[1.0, 0.0]);
        assert_eq!(tape.grad(bid).unwrap().as_slice().unwrap(), &[0.0, 1.0]);
    }

    #[test]
    fn softmax_and_log_softmax_gradients() {
        let x = array![[0.2, -1.0, 0.7], [1.5, 0.0, -0.5]];
        gradcheck(x.clone(), |t, id| {
            let p = t.softmax(id);
            let w = t.leaf(array![[0.3, -0.9, 0.5], [0.1, 0.8, -0.2]]);
            let m = t.mul(p, w);
            t.sum(m)
        });
        gradcheck(x.clone(), |t, id| {
            let lp = t.log_softmax(id);
            let picked = t.gather_cols(lp, &[2, 0]);
            let n = t.neg(picked);
            t.mean(n)
        });
    }

    #[test]
    fn softmax_rows_sum_to_one_under_large_logits() {
        let x = array![[1000.0, 1001.0, 999.0], [-1000.0, -1000.5, -999.0]];
        let mut tape = Tape::new();
        let id = tape.leaf(x);
        let p = tape.softmax(id);
        for row in tape.value(p).rows() {
            let total: f64 = row.sum();
            assert_relative_eq!(total, 1.0, max_relative = 1e-12);
            assert!(row.iter().all(|v| v.is_finite()));
        }
    }

    #[test]
    fn reductions_and_concat_gradients() {
        let x = array![[0.5, -0.2], [1.1, 0.0], [2.0, -1.0]];
        gradcheck(x.clone(), |t, id| {
            let rs = t.row_sum(id);
            let sq = t.square(rs);
            t.mean(sq)
        });
        gradcheck(x.clone(), |t, id| {
            let other = t.leaf(array![[1.0], [2.0], [3.0]]);
            let cat = t.concat_cols(id, other);
            let sq = t.square(cat);
            t.sum(sq)
        });
    }

    #[test]
    fn gradients_accumulate_when_a_node_is_reused() {
        // y = x * x + x ; dy/dx = 2x + 1
        let mut tape = Tape::new();
        let x = tape.leaf_scalar(3.0);
        let xx = tape.mul(x, x);
        let y = tape.add(xx, x);
        let s = tape.sum(y);
        tape.backward(s).unwrap();
        assert_relative_eq!(tape.grad(x).unwrap()[(0, 0)], 7.0, max_relative = 1e-12);
    }

    #[test]
    fn backward_rejects_non_finite_loss() {
        let mut tape = Tape::new();
        let x = tape.leaf_scalar(-1.0);
        let y = tape.ln(x); // ln(-1) = NaN
        let err = tape.backward(y).unwrap_err();
        assert!(matches!(err, NnError::NonFiniteLoss(v) if v.is_nan()));
    }

    #[test]
    fn nodes_off_the_loss_path_get_no_gradient() {
        let mut tape = Tape::new();
        let x = tape.leaf_scalar(2.0);
        let unused = tape.leaf_scalar(5.0);
        let y = tape.square(x);
        tape.backward(y).unwrap();
        assert!(tape.grad(unused).is_none());
        assert!(tape.grad(x).is_some());
    }
}

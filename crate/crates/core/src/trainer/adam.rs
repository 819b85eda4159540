//! Lazy (sparse) Adam: only rows with a gradient in the current step move.

use crate::scoring::{EmbeddingStore, Matrix, Real, SparseGrad};

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPSILON: f64 = 1e-8;

/// Dense per-parameter gradient buffers plus the list of rows written since
/// the last reset.
pub struct GradAccumulator<T> {
    bufs: Vec<Matrix<T>>,
    marked: Vec<Vec<bool>>,
    touched: Vec<(usize, usize)>,
}

impl<T: Real> GradAccumulator<T> {
    pub fn for_store(store: &EmbeddingStore<T>) -> Self {
        Self::for_params(&store.params)
    }

    pub fn for_params(params: &[Matrix<T>]) -> Self {
        GradAccumulator {
            bufs: params
                .iter()
                .map(|m| Matrix::zeros(m.rows, m.cols))
                .collect(),
            marked: params.iter().map(|m| vec![false; m.rows]).collect(),
            touched: Vec::new(),
        }
    }

    pub fn add(&mut self, g: &SparseGrad<T>) {
        for ((slot, row), src) in g.iter() {
            if !self.marked[slot][row] {
                self.marked[slot][row] = true;
                self.touched.push((slot, row));
            }
            for (d, &s) in self.bufs[slot].row_mut(row).iter_mut().zip(src) {
                *d = *d + s;
            }
        }
    }

    pub fn touched(&self) -> &[(usize, usize)] {
        &self.touched
    }

    pub fn row(&self, slot: usize, row: usize) -> &[T] {
        self.bufs[slot].row(row)
    }

    /// Zero every touched row and forget them.
    pub fn reset(&mut self) {
        for &(slot, row) in &self.touched {
            self.marked[slot][row] = false;
            for x in self.bufs[slot].row_mut(row) {
                *x = T::zero();
            }
        }
        self.touched.clear();
    }
}

pub struct SparseAdam<T> {
    m: Vec<Matrix<T>>,
    v: Vec<Matrix<T>>,
    step: u64,
    pub lr: f64,
}

impl<T: Real> SparseAdam<T> {
    pub fn new(store: &EmbeddingStore<T>, lr: f64) -> Self {
        Self::for_params(&store.params, lr)
    }

    pub fn for_params(params: &[Matrix<T>], lr: f64) -> Self {
        SparseAdam {
            m: params
                .iter()
                .map(|p| Matrix::zeros(p.rows, p.cols))
                .collect(),
            v: params
                .iter()
                .map(|p| Matrix::zeros(p.rows, p.cols))
                .collect(),
            step: 0,
            lr,
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    /// One Adam step on the accumulated rows. The step counter advances once
    /// per call; moments of untouched rows are left alone.
    pub fn step(&mut self, store: &mut EmbeddingStore<T>, grads: &GradAccumulator<T>) {
        self.step_params(&mut store.params, grads)
    }

    pub fn step_params(&mut self, params: &mut [Matrix<T>], grads: &GradAccumulator<T>) {
        self.step += 1;
        let t = self.step as i32;
        let bc1 = T::of(1.0 - BETA1.powi(t));
        let bc2 = T::of(1.0 - BETA2.powi(t));
        let (b1, b2, eps, lr) = (T::of(BETA1), T::of(BETA2), T::of(EPSILON), T::of(self.lr));
        let one = T::one();
        for &(slot, row) in grads.touched() {
            let g = grads.row(slot, row);
            let m = self.m[slot].row_mut(row);
            let v = self.v[slot].row_mut(row);
            let p = params[slot].row_mut(row);
            for i in 0..g.len() {
                m[i] = b1 * m[i] + (one - b1) * g[i];
                v[i] = b2 * v[i] + (one - b2) * g[i] * g[i];
                let mh = m[i] / bc1;
                let vh = v[i] / bc2;
                p[i] = p[i] - lr * mh / (vh.sqrt() + eps);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scoring::ModelKind;

    fn unit_grad(store: &EmbeddingStore<f64>, rows: &[usize], value: f64) -> GradAccumulator<f64> {
        let mut acc = GradAccumulator::for_store(store);
        let mut g = SparseGrad::new(store.width());
        for &r in rows {
            let off = g.entry(0, r);
            for x in &mut g.buf_mut()[off..off + store.width()] {
                *x = value;
            }
        }
        acc.add(&g);
        acc
    }

    #[test]
    fn two_step_hand_trajectory() {
        let mut s = EmbeddingStore::<f64>::zeros(ModelKind::TransE, 1, 1, 1);
        let mut adam = SparseAdam::new(&s, 0.1);
        let acc = unit_grad(&s, &[0], 1.0);
        adam.step(&mut s, &acc);
        assert!((s.params[0].data[0] + 0.1).abs() < 1e-7);
        adam.step(&mut s, &acc);
        assert!((s.params[0].data[0] + 0.2).abs() < 1e-7);
    }

    #[test]
    fn zero_gradient_is_a_no_op() {
        let mut s = EmbeddingStore::<f64>::xavier(ModelKind::TransE, 3, 1, 2, 1).unwrap();
        let before = s.clone();
        let mut adam = SparseAdam::new(&s, 0.1);
        {
            let g = unit_grad(&s, &[0, 1], 0.0);
            adam.step(&mut s, &g);
        }
        assert_eq!(s, before);
    }

    #[test]
    fn disjoint_rows_stay_put() {
        let mut s = EmbeddingStore::<f64>::xavier(ModelKind::TransE, 4, 1, 2, 1).unwrap();
        let mut adam = SparseAdam::new(&s, 0.1);
        {
            let g = unit_grad(&s, &[0, 1], 1.0);
            adam.step(&mut s, &g);
        }
        let after_a = s.clone();
        {
            let g = unit_grad(&s, &[2, 3], 1.0);
            adam.step(&mut s, &g);
        }
        assert_eq!(s.params[0].row(0), after_a.params[0].row(0));
        assert_eq!(s.params[0].row(1), after_a.params[0].row(1));
        assert_ne!(s.params[0].row(2), after_a.params[0].row(2));
    }

    #[test]
    fn reset_clears_rows() {
        let s = EmbeddingStore::<f64>::zeros(ModelKind::TransE, 3, 1, 2);
        let mut acc = unit_grad(&s, &[1], 2.0);
        acc.reset();
        assert!(acc.touched().is_empty());
        assert_eq!(acc.row(0, 1), &[0.0, 0.0]);
    }
}

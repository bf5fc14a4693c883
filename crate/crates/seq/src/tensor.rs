//! Dense row-major tensors of f64 with the handful of linear-algebra
//! operations the recurrent model needs. Rank is 1 or 2 in practice.

use rand::Rng;

#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    dims: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(dims: &[usize]) -> Tensor {
        Tensor {
            dims: dims.to_vec(),
            data: vec![0.0; dims.iter().product()],
        }
    }

    pub fn uniform(dims: &[usize], scale: f64, rng: &mut impl Rng) -> Tensor {
        let mut t = Tensor::zeros(dims);
        for v in &mut t.data {
            *v = rng.gen_range(-scale..scale);
        }
        t
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn from_data(dims: &[usize], data: Vec<f64>) -> Tensor {
        assert_eq!(dims.iter().product::<usize>(), data.len());
        Tensor {
            dims: dims.to_vec(),
            data,
        }
    }

    /// Row `i` of a rank-2 tensor.
    pub fn row(&self, i: usize) -> &[f64] {
        let cols = self.dims[1];
        &self.data[i * cols..(i + 1) * cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        let cols = self.dims[1];
        &mut self.data[i * cols..(i + 1) * cols]
    }

    /// y = W x for a [rows, cols] tensor.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let (rows, cols) = (self.dims[0], self.dims[1]);
        debug_assert_eq!(cols, x.len());
        let mut y = vec![0.0; rows];
        for (i, yi) in y.iter_mut().enumerate() {
            let row = &self.data[i * cols..(i + 1) * cols];
            *yi = dot(row, x);
        }
        y
    }

    /// y = W^T x for a [rows, cols] tensor.
    pub fn matvec_t(&self, x: &[f64]) -> Vec<f64> {
        let (rows, cols) = (self.dims[0], self.dims[1]);
        debug_assert_eq!(rows, x.len());
        let mut y = vec![0.0; cols];
        for (i, &xi) in x.iter().enumerate() {
            let row = &self.data[i * cols..(i + 1) * cols];
            for (yj, &w) in y.iter_mut().zip(row) {
                *yj += w * xi;
            }
        }
        y
    }

    /// self += y ⊗ x (rank-1 update of a [len(y), len(x)] tensor).
    pub fn add_outer(&mut self, y: &[f64], x: &[f64]) {
        let cols = self.dims[1];
        debug_assert_eq!(self.dims[0], y.len());
        debug_assert_eq!(cols, x.len());
        for (i, &yi) in y.iter().enumerate() {
            let row = &mut self.data[i * cols..(i + 1) * cols];
            for (w, &xj) in row.iter_mut().zip(x) {
                *w += yi * xj;
            }
        }
    }

    pub fn add_assign(&mut self, other: &Tensor) {
        debug_assert_eq!(self.dims, other.dims);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    pub fn scale(&mut self, s: f64) {
        for v in &mut self.data {
            *v *= s;
        }
    }

    pub fn sq_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn add_slice(acc: &mut [f64], x: &[f64]) {
    debug_assert_eq!(acc.len(), x.len());
    for (a, b) in acc.iter_mut().zip(x) {
        *a += b;
    }
}

/// In-place numerically safe softmax.
pub fn softmax(xs: &mut [f64]) {
    let max = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for x in xs.iter_mut() {
        *x = (*x - max).exp();
        sum += *x;
    }
    for x in xs.iter_mut() {
        *x /= sum;
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matvec_matches_hand_arithmetic() {
        let w = Tensor::from_data(&[2, 3], vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(w.matvec(&[1.0, 0.0, -1.0]), vec![-2.0, -2.0]);
        assert_eq!(w.matvec_t(&[1.0, 1.0]), vec![5.0, 7.0, 9.0]);
    }

    #[test]
    fn outer_products_accumulate() {
        let mut w = Tensor::zeros(&[2, 2]);
        w.add_outer(&[1.0, 2.0], &[3.0, 4.0]);
        w.add_outer(&[1.0, 0.0], &[1.0, 1.0]);
        assert_eq!(w.data(), &[4.0, 5.0, 6.0, 8.0]);
    }

    #[test]
    fn softmax_normalizes_even_for_large_inputs() {
        let mut xs = [1000.0, 1001.0, 999.0];
        softmax(&mut xs);
        let sum: f64 = xs.iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
        assert!(xs[1] > xs[0] && xs[0] > xs[2]);
    }

    #[test]
    fn uniform_fill_is_seeded() {
        use rand::SeedableRng;
        let mut a = rand_chacha::ChaCha20Rng::seed_from_u64(5);
        let mut b = rand_chacha::ChaCha20Rng::seed_from_u64(5);
        let ta = Tensor::uniform(&[3, 3], 0.5, &mut a);
        let tb = Tensor::uniform(&[3, 3], 0.5, &mut b);
        assert_eq!(ta, tb);
        assert!(ta.data().iter().all(|v| v.abs() < 0.5));
    }
}

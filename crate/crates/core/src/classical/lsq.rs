use nalgebra::DMatrix;

/// Orthonormal basis (thin Q) for polynomials of `degree` sampled at `t`.
///
/// `Q Qᵀ y` is the least-squares polynomial fit of `y`.
pub(crate) struct PolyProjector {
    q: DMatrix<f64>,
}

impl PolyProjector {
    pub(crate) fn new(t: &[f64], degree: usize) -> Self {
        let cols = degree + 1;
        let v = DMatrix::from_fn(t.len(), cols, |i, k| t[i].powi(k as i32));
        let q = v.qr().q();
        Self { q }
    }

    /// Abscissa `len` points mapped onto [-1, 1].
    pub(crate) fn symmetric_abscissa(len: usize) -> Vec<f64> {
        if len == 1 {
            return vec![0.0];
        }
        (0..len)
            .map(|i| 2.0 * i as f64 / (len - 1) as f64 - 1.0)
            .collect()
    }

    pub(crate) fn project(&self, y: &[f64]) -> Vec<f64> {
        let n = self.q.nrows();
        let k = self.q.ncols();
        let mut coef = vec![0.0; k];
        for (j, c) in coef.iter_mut().enumerate() {
            *c = (0..n).map(|i| self.q[(i, j)] * y[i]).sum();
        }
        (0..n)
            .map(|i| (0..k).map(|j| self.q[(i, j)] * coef[j]).sum())
            .collect()
    }

    /// Row `i` of the hat matrix `Q Qᵀ`: weights producing the fitted value
    /// at sample `i`.
    pub(crate) fn hat_row(&self, i: usize) -> Vec<f64> {
        let n = self.q.nrows();
        let k = self.q.ncols();
        (0..n)
            .map(|r| (0..k).map(|j| self.q[(i, j)] * self.q[(r, j)]).sum())
            .collect()
    }
}

//! Flat tensors and the handful of dense kernels the two architectures
//! are built from. Weight matrices are stored row-major as [out][in] so
//! both the forward dot products and the backward axpy sweeps run over
//! contiguous memory.

use crate::scalar::Scalar;

/// A shape plus a flat value buffer.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor<S> {
    shape: Vec<usize>,
    values: Vec<S>,
}

impl<S: Scalar> Tensor<S> {
    pub fn zeros(shape: Vec<usize>) -> Tensor<S> {
        let len = shape.iter().product();
        Tensor {
            shape,
            values: vec![S::zero(); len],
        }
    }

    pub fn from_values(shape: Vec<usize>, values: Vec<S>) -> Tensor<S> {
        assert_eq!(
            shape.iter().product::<usize>(),
            values.len(),
            "shape/value mismatch"
        );
        Tensor { shape, values }
    }

    #[inline]
    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn values(&self) -> &[S] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [S] {
        &mut self.values
    }

    pub fn fill(&mut self, v: S) {
        self.values.iter_mut().for_each(|x| *x = v);
    }

    pub fn cast<T: Scalar>(&self) -> Tensor<T> {
        Tensor {
            shape: self.shape.clone(),
            values: self
                .values
                .iter()
                .map(|v| T::from_f64_lossy(v.to_f64_lossy()))
                .collect(),
        }
    }
}

/// Dot product with four accumulators, fixed evaluation order.
#[inline]
pub fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [S::zero(); 4];
    let a4 = a.chunks_exact(4);
    let b4 = b.chunks_exact(4);
    let (ra, rb) = (a4.remainder(), b4.remainder());
    for (ca, cb) in a4.zip(b4) {
        acc[0] += ca[0] * cb[0];
        acc[1] += ca[1] * cb[1];
        acc[2] += ca[2] * cb[2];
        acc[3] += ca[3] * cb[3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for (x, y) in ra.iter().zip(rb) {
        s += *x * *y;
    }
    s
}

/// y += alpha * x.
#[inline]
pub fn axpy<S: Scalar>(alpha: S, x: &[S], y: &mut [S]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * *xi;
    }
}

/// out[t] = W x[t] + b for each of the `rows` rows; W is [dout][din].
pub fn affine<S: Scalar>(
    x: &[S],
    rows: usize,
    din: usize,
    w: &[S],
    b: &[S],
    dout: usize,
    out: &mut [S],
) {
    debug_assert_eq!(x.len(), rows * din);
    debug_assert_eq!(w.len(), dout * din);
    debug_assert_eq!(b.len(), dout);
    debug_assert_eq!(out.len(), rows * dout);
    for t in 0..rows {
        let xr = &x[t * din..(t + 1) * din];
        let or = &mut out[t * dout..(t + 1) * dout];
        for (o, (wr, bo)) in or.iter_mut().zip(w.chunks_exact(din).zip(b)) {
            *o = dot(xr, wr) + *bo;
        }
    }
}

/// Backward of `affine`: accumulates into dW, dB and dX (callers zero
/// dX when it is a fresh buffer).
#[allow(clippy::too_many_arguments)]
pub fn affine_backward<S: Scalar>(
    x: &[S],
    rows: usize,
    din: usize,
    w: &[S],
    dout: usize,
    dy: &[S],
    dw: &mut [S],
    db: &mut [S],
    dx: &mut [S],
) {
    for t in 0..rows {
        let xr = &x[t * din..(t + 1) * din];
        let dyr = &dy[t * dout..(t + 1) * dout];
        let dxr = &mut dx[t * din..(t + 1) * din];
        for o in 0..dout {
            let g = dyr[o];
            db[o] += g;
            axpy(g, xr, &mut dw[o * din..(o + 1) * din]);
            axpy(g, &w[o * din..(o + 1) * din], dxr);
        }
    }
}

/// Row-wise layer normalization with learned gain and bias; saves the
/// per-row mean and reciprocal standard deviation for the backward pass.
#[allow(clippy::too_many_arguments)]
pub fn layer_norm<S: Scalar>(
    x: &[S],
    rows: usize,
    dim: usize,
    gain: &[S],
    bias: &[S],
    out: &mut [S],
    mean: &mut [S],
    rstd: &mut [S],
) {
    let eps = S::from_f64_lossy(1e-5);
    let inv_d = S::one() / S::from_f64_lossy(dim as f64);
    for t in 0..rows {
        let xr = &x[t * dim..(t + 1) * dim];
        let or = &mut out[t * dim..(t + 1) * dim];
        let mu = xr.iter().copied().sum::<S>() * inv_d;
        let var = xr.iter().map(|&v| (v - mu) * (v - mu)).sum::<S>() * inv_d;
        let rs = S::one() / (var + eps).sqrt();
        mean[t] = mu;
        rstd[t] = rs;
        for ((o, &xv), (&g, &b)) in or.iter_mut().zip(xr).zip(gain.iter().zip(bias)) {
            *o = (xv - mu) * rs * g + b;
        }
    }
}

/// Backward of `layer_norm`; accumulates into dGain, dBias and dX.
#[allow(clippy::too_many_arguments)]
pub fn layer_norm_backward<S: Scalar>(
    x: &[S],
    rows: usize,
    dim: usize,
    gain: &[S],
    mean: &[S],
    rstd: &[S],
    dy: &[S],
    dgain: &mut [S],
    dbias: &mut [S],
    dx: &mut [S],
) {
    let inv_d = S::one() / S::from_f64_lossy(dim as f64);
    for t in 0..rows {
        let xr = &x[t * dim..(t + 1) * dim];
        let dyr = &dy[t * dim..(t + 1) * dim];
        let dxr = &mut dx[t * dim..(t + 1) * dim];
        let (mu, rs) = (mean[t], rstd[t]);
        // dxhat = dy .* gain; dx = rs*(dxhat - mean(dxhat) - xhat*mean(dxhat.*xhat))
        let mut sum_dxh = S::zero();
        let mut sum_dxh_xh = S::zero();
        for i in 0..dim {
            let xh = (xr[i] - mu) * rs;
            let dxh = dyr[i] * gain[i];
            sum_dxh += dxh;
            sum_dxh_xh += dxh * xh;
            dgain[i] += dyr[i] * xh;
            dbias[i] += dyr[i];
        }
        let m1 = sum_dxh * inv_d;
        let m2 = sum_dxh_xh * inv_d;
        for i in 0..dim {
            let xh = (xr[i] - mu) * rs;
            let dxh = dyr[i] * gain[i];
            dxr[i] += rs * (dxh - m1 - xh * m2);
        }
    }
}

/// Numerically stable in-place softmax over one row.
#[inline]
pub fn softmax_row<S: Scalar>(row: &mut [S]) {
    let mut max = row[0];
    for &v in row.iter() {
        if v > max {
            max = v;
        }
    }
    let mut sum = S::zero();
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    let inv = S::one() / sum;
    for v in row.iter_mut() {
        *v *= inv;
    }
}

/// Backward of a row softmax: ds_i = p_i * (dp_i - sum_j dp_j p_j),
/// written in place over `dp`.
#[inline]
pub fn softmax_row_backward<S: Scalar>(p: &[S], dp: &mut [S]) {
    let inner = dot(p, dp);
    for (d, &pi) in dp.iter_mut().zip(p) {
        *d = pi * (*d - inner);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dot_matches_naive() {
        let a: Vec<f64> = (0..11).map(|i| i as f64 * 0.5 - 2.0).collect();
        let b: Vec<f64> = (0..11).map(|i| (i as f64).sin()).collect();
        let naive: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
        assert!((dot(&a, &b) - naive).abs() < 1e-12);
    }

    #[test]
    fn softmax_rows_sum_to_one() {
        let mut row = vec![0.3f64, -1.2, 2.5, 0.0, 0.3];
        softmax_row(&mut row);
        let sum: f64 = row.iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
        assert!(row.iter().all(|&p| p > 0.0));
    }

    #[test]
    fn layer_norm_rows_are_normalized() {
        let x = vec![1.0f64, 2.0, 3.0, 4.0];
        let gain = vec![1.0; 4];
        let bias = vec![0.0; 4];
        let mut out = vec![0.0; 4];
        let (mut mu, mut rs) = (vec![0.0], vec![0.0]);
        layer_norm(&x, 1, 4, &gain, &bias, &mut out, &mut mu, &mut rs);
        let m: f64 = out.iter().sum::<f64>() / 4.0;
        let v: f64 = out.iter().map(|&o| (o - m) * (o - m)).sum::<f64>() / 4.0;
        assert!(m.abs() < 1e-12);
        assert!((v - 1.0).abs() < 1e-4);
    }
}

use crate::matrix::Matrix;

/// Negative-side slope of the leaky rectifier used throughout.
pub const DEFAULT_LEAKY_SLOPE: f64 = 0.01;

/// Elementwise `max(x, slope * x)`; `slope` must lie in `(0, 1)`.
pub fn leaky_relu(x: &Matrix, slope: f64) -> Matrix {
    debug_assert!(slope > 0.0 && slope < 1.0);
    x.map(|v| leaky_relu_scalar(v, slope))
}

#[inline]
pub fn leaky_relu_scalar(v: f64, slope: f64) -> f64 {
    if v > 0.0 {
        v
    } else {
        slope * v
    }
}

/// Derivative of the leaky rectifier with respect to its input.
#[inline]
pub fn leaky_relu_grad(v: f64, slope: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else {
        slope
    }
}

#[inline]
pub fn sigmoid_scalar(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

pub fn sigmoid(x: &Matrix) -> Matrix {
    x.map(sigmoid_scalar)
}

/// Row-wise softmax with max subtraction.
pub fn softmax_rows(x: &Matrix) -> Matrix {
    let mut out = x.clone();
    for r in 0..out.rows() {
        softmax_inplace(out.row_mut(r));
    }
    out
}

pub fn softmax_inplace(row: &mut [f64]) {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in row.iter_mut() {
        *v /= sum;
    }
}

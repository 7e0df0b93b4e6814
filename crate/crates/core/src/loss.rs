use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Lower bound applied to every probability before taking its log.
pub const LOG_CLAMP: f64 = 1e-12;

/// Training targets for [`cross_entropy`].
#[derive(Clone, Copy, Debug)]
pub enum Targets<'a> {
    /// One class index per row of a probability matrix.
    Classes(&'a [usize]),
    /// One 0/1 target per entry of a sigmoid-output matrix (any width).
    Binary(&'a [f64]),
}

/// Mean negative log-likelihood.
///
/// For `Classes`, `pred` rows are probability vectors and the mean is over
/// rows. For `Binary`, every entry of `pred` is an independent Bernoulli
/// probability; the loss is summed across columns and averaged over rows,
/// which for a single output column is ordinary binary cross-entropy.
pub fn cross_entropy(pred: &Matrix, targets: Targets<'_>) -> Result<f64> {
    let n = pred.rows();
    if n == 0 {
        return Err(Error::config("cross_entropy on empty batch"));
    }
    match targets {
        Targets::Classes(labels) => {
            if labels.len() != n {
                return Err(Error::config(format!(
                    "{} labels for {n} predictions",
                    labels.len()
                )));
            }
            let mut total = 0.0;
            for (row, &y) in pred.iter_rows().zip(labels) {
                let p = *row.get(y).ok_or_else(|| {
                    Error::config(format!("label {y} out of range for {} classes", row.len()))
                })?;
                total -= p.max(LOG_CLAMP).ln();
            }
            Ok(total / n as f64)
        }
        Targets::Binary(ys) => {
            if ys.len() != pred.as_slice().len() {
                return Err(Error::config(format!(
                    "{} binary targets for {} outputs",
                    ys.len(),
                    pred.as_slice().len()
                )));
            }
            let mut total = 0.0;
            for (&p, &y) in pred.as_slice().iter().zip(ys) {
                if y != 0.0 && y != 1.0 {
                    return Err(Error::config(format!("binary target {y} is not 0 or 1")));
                }
                total -= if y == 1.0 {
                    p.max(LOG_CLAMP).ln()
                } else {
                    (1.0 - p).max(LOG_CLAMP).ln()
                };
            }
            Ok(total / n as f64)
        }
    }
}

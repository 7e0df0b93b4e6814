use featlab_core::matrix::matmul_tn;
use featlab_core::{pearson, spearman, Error, Matrix, Result};
use featlab_nets::ActivationMatrix;
use serde::{Deserialize, Serialize};

use crate::rdm::{compute_rdm, Metric, Rdm};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Correlation {
    #[default]
    Pearson,
    Spearman,
}

/// How two activation matrices are compared.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum Method {
    Rsa { metric: Metric, correlation: Correlation },
    CkaLinear,
}

impl Default for Method {
    fn default() -> Self {
        Method::Rsa {
            metric: Metric::CorrelationDistance,
            correlation: Correlation::Pearson,
        }
    }
}

impl Method {
    pub fn name(&self) -> String {
        match self {
            Method::Rsa { metric, correlation } => format!("rsa-{}-{:?}", metric.name(), correlation).to_lowercase(),
            Method::CkaLinear => "cka-linear".to_string(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimilarityScore {
    pub value: f64,
    pub method: String,
    pub a: String,
    pub b: String,
}

/// Correlation between the strictly upper triangles of two RDMs.
pub fn rsa_score(a: &Rdm, b: &Rdm, corr: Correlation) -> Result<f64> {
    if a.size() != b.size() {
        return Err(Error::config(format!("RDM sizes differ: {} vs {}", a.size(), b.size())));
    }
    if a.stimulus_ids != b.stimulus_ids {
        return Err(Error::config("RDMs are over different stimulus orderings"));
    }
    let (x, y) = (a.upper_triangle(), b.upper_triangle());
    match corr {
        Correlation::Pearson => pearson(&x, &y),
        Correlation::Spearman => spearman(&x, &y),
    }
}

fn centred(x: &Matrix) -> Matrix {
    x.center_columns()
}

/// Linear centred kernel alignment.
pub fn cka_linear(x: &ActivationMatrix, y: &ActivationMatrix) -> Result<f64> {
    if x.stimulus_ids != y.stimulus_ids {
        return Err(Error::config("CKA inputs cover different stimuli"));
    }
    let xc = centred(&x.values);
    let yc = centred(&y.values);
    let cross = matmul_tn(&yc, &xc)?.frobenius_sq();
    let xx = matmul_tn(&xc, &xc)?.frobenius_sq();
    let yy = matmul_tn(&yc, &yc)?.frobenius_sq();
    if xx == 0.0 || yy == 0.0 {
        return Err(Error::UndefinedCka(format!(
            "centred activations of {} are all zero",
            if xx == 0.0 { &x.model_id } else { &y.model_id }
        )));
    }
    Ok((cross / (xx.sqrt() * yy.sqrt())).clamp(0.0, 1.0))
}

/// Scores one pair of activation matrices.
pub fn similarity(x: &ActivationMatrix, y: &ActivationMatrix, method: Method) -> Result<SimilarityScore> {
    let value = match method {
        Method::Rsa { metric, correlation } => rsa_score(&compute_rdm(x, metric)?, &compute_rdm(y, metric)?, correlation)?,
        Method::CkaLinear => cka_linear(x, y)?,
    };
    Ok(SimilarityScore {
        value,
        method: method.name(),
        a: x.model_id.clone(),
        b: y.model_id.clone(),
    })
}

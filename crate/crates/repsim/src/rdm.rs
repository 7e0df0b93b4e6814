use std::fs;
use std::path::Path;

use featlab_core::{Error, Matrix, Result};
use featlab_nets::ActivationMatrix;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Metric {
    /// `1 - pearson(row_i, row_j)`.
    #[default]
    CorrelationDistance,
    Euclidean,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::CorrelationDistance => "correlation-distance",
            Metric::Euclidean => "euclidean",
        }
    }
}

/// Symmetric `S × S` dissimilarity matrix with a zero diagonal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rdm {
    pub metric: Metric,
    pub stimulus_ids: Vec<u64>,
    pub values: Matrix,
}

#[derive(Serialize, Deserialize)]
struct Sidecar {
    size: usize,
    metric: Metric,
    stimulus_ids: Vec<u64>,
}

impl Rdm {
    /// Validates symmetry and the zero diagonal.
    pub fn new(metric: Metric, stimulus_ids: Vec<u64>, values: Matrix) -> Result<Rdm> {
        let s = values.rows();
        if values.cols() != s || stimulus_ids.len() != s {
            return Err(Error::config(format!(
                "RDM is {}x{} with {} stimulus ids",
                values.rows(),
                values.cols(),
                stimulus_ids.len()
            )));
        }
        for i in 0..s {
            if values[(i, i)] != 0.0 {
                return Err(Error::config(format!("RDM diagonal entry {i} is non-zero")));
            }
            for j in 0..i {
                if values[(i, j)] != values[(j, i)] {
                    return Err(Error::config(format!("RDM is not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(Rdm {
            metric,
            stimulus_ids,
            values,
        })
    }

    pub fn size(&self) -> usize {
        self.values.rows()
    }

    /// Entries strictly above the diagonal, row by row.
    pub fn upper_triangle(&self) -> Vec<f64> {
        let s = self.size();
        let mut out = Vec::with_capacity(s * s.saturating_sub(1) / 2);
        for i in 0..s {
            out.extend_from_slice(&self.values.row(i)[i + 1..]);
        }
        out
    }

    /// Writes `stem.rdm` (little-endian f64, row-major) and `stem.json`.
    pub fn write(&self, dir: &Path, stem: &str) -> Result<()> {
        fs::create_dir_all(dir)?;
        let bytes: Vec<u8> = self.values.as_slice().iter().flat_map(|v| v.to_le_bytes()).collect();
        fs::write(dir.join(format!("{stem}.rdm")), bytes)?;
        let side = Sidecar {
            size: self.size(),
            metric: self.metric,
            stimulus_ids: self.stimulus_ids.clone(),
        };
        fs::write(dir.join(format!("{stem}.json")), serde_json::to_vec_pretty(&side)?)?;
        Ok(())
    }

    pub fn read(dir: &Path, stem: &str) -> Result<Rdm> {
        let side: Sidecar = serde_json::from_slice(&fs::read(dir.join(format!("{stem}.json")))?)?;
        let bytes = fs::read(dir.join(format!("{stem}.rdm")))?;
        if bytes.len() != side.size * side.size * 8 {
            return Err(Error::config(format!(
                "RDM blob has {} bytes, expected {}",
                bytes.len(),
                side.size * side.size * 8
            )));
        }
        let data = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Rdm::new(side.metric, side.stimulus_ids, Matrix::new(side.size, side.size, data)?)
    }
}

/// Dissimilarity between every pair of stimulus rows.
///
/// Correlation distance rejects rows with zero variance, naming the
/// offending stimulus.
pub fn compute_rdm(acts: &ActivationMatrix, metric: Metric) -> Result<Rdm> {
    let x = &acts.values;
    let s = x.rows();
    if s < 3 {
        return Err(Error::config(format!("an RDM needs at least 3 stimuli, got {s}")));
    }
    let mut d = Matrix::zeros(s, s);
    match metric {
        Metric::CorrelationDistance => {
            // unit-norm centred rows, then 1 - dot
            let mut z = x.clone();
            for i in 0..s {
                let row = z.row_mut(i);
                let m = row.iter().sum::<f64>() / row.len() as f64;
                row.iter_mut().for_each(|v| *v -= m);
                let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm == 0.0 {
                    return Err(Error::ConstantRow {
                        stimulus: acts.stimulus_ids[i].to_string(),
                    });
                }
                row.iter_mut().for_each(|v| *v /= norm);
            }
            for i in 0..s {
                for j in i + 1..s {
                    let r: f64 = z.row(i).iter().zip(z.row(j)).map(|(a, b)| a * b).sum();
                    let v = 1.0 - r.clamp(-1.0, 1.0);
                    d[(i, j)] = v;
                    d[(j, i)] = v;
                }
            }
        }
        Metric::Euclidean => {
            for i in 0..s {
                for j in i + 1..s {
                    let v = x
                        .row(i)
                        .iter()
                        .zip(x.row(j))
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum::<f64>()
                        .sqrt();
                    d[(i, j)] = v;
                    d[(j, i)] = v;
                }
            }
        }
    }
    Rdm::new(metric, acts.stimulus_ids.clone(), d)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn acts(rows: &[&[f64]]) -> ActivationMatrix {
        let m = Matrix::from_rows(rows).unwrap();
        ActivationMatrix::new("p", "m", (0..rows.len() as u64).collect(), m).unwrap()
    }

    #[test]
    fn duplicate_rows_have_zero_distance() {
        let a = acts(&[&[1.0, 2.0, 4.0], &[1.0, 2.0, 4.0], &[0.0, 5.0, 1.0]]);
        for metric in [Metric::CorrelationDistance, Metric::Euclidean] {
            let r = compute_rdm(&a, metric).unwrap();
            assert!(r.values[(0, 1)].abs() < 1e-15);
        }
    }

    #[test]
    fn opposite_rows_are_distance_two() {
        let a = acts(&[&[1.0, -2.0, 1.0], &[-1.0, 2.0, -1.0], &[0.0, 5.0, 1.0]]);
        let r = compute_rdm(&a, Metric::CorrelationDistance).unwrap();
        assert_eq!(r.values[(0, 1)], 2.0);
        assert_eq!(r.upper_triangle().len(), 3);
    }

    #[test]
    fn constant_row_is_named() {
        let a = ActivationMatrix::new(
            "p",
            "m",
            vec![10, 11, 12],
            Matrix::from_rows(&[[1.0, 2.0], [3.0, 3.0], [0.0, 1.0]]).unwrap(),
        )
        .unwrap();
        match compute_rdm(&a, Metric::CorrelationDistance) {
            Err(Error::ConstantRow { stimulus }) => assert_eq!(stimulus, "11"),
            other => panic!("{other:?}"),
        }
        assert!(compute_rdm(&a, Metric::Euclidean).is_ok());
    }

    #[test]
    fn too_few_stimuli() {
        assert!(compute_rdm(&acts(&[&[1.0, 2.0], &[2.0, 1.0]]), Metric::Euclidean).is_err());
    }

    #[test]
    fn asymmetric_matrix_rejected() {
        let m = Matrix::from_rows(&[[0.0, 1.0], [2.0, 0.0]]).unwrap();
        assert!(Rdm::new(Metric::Euclidean, vec![0, 1], m).is_err());
    }
}

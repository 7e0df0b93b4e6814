use std::path::Path;

use featlab_core::{bootstrap_ci, Error, Matrix, Result, Rng, StatSummary};
use featlab_nets::{capture, ActivationMatrix, Network};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::compare::{cka_linear, rsa_score, Method, SimilarityScore};
use crate::rdm::{compute_rdm, Rdm};

pub const DEFAULT_RESAMPLES: usize = 10_000;

enum Prepared<'a> {
    Rdms(Vec<Rdm>),
    Acts(&'a [ActivationMatrix]),
}

fn prepare(acts: &[ActivationMatrix], method: Method) -> Result<Prepared<'_>> {
    Ok(match method {
        Method::Rsa { metric, .. } => Prepared::Rdms(acts.par_iter().map(|a| compute_rdm(a, metric)).collect::<Result<_>>()?),
        Method::CkaLinear => Prepared::Acts(acts),
    })
}

fn score(p: &Prepared, q: &Prepared, i: usize, j: usize, a: &[ActivationMatrix], b: &[ActivationMatrix], method: Method) -> Result<SimilarityScore> {
    let value = match (p, q, method) {
        (Prepared::Rdms(x), Prepared::Rdms(y), Method::Rsa { correlation, .. }) => rsa_score(&x[i], &y[j], correlation)?,
        (Prepared::Acts(x), Prepared::Acts(y), Method::CkaLinear) => cka_linear(&x[i], &y[j])?,
        _ => unreachable!("prepared with the same method"),
    };
    Ok(SimilarityScore {
        value,
        method: method.name(),
        a: a[i].model_id.clone(),
        b: b[j].model_id.clone(),
    })
}

fn check_stimuli(acts: &[ActivationMatrix]) -> Result<()> {
    if let Some(first) = acts.first() {
        if first.stimuli() == 0 {
            return Err(Error::config("empty stimulus set"));
        }
        if acts.iter().any(|a| a.stimulus_ids != first.stimulus_ids) {
            return Err(Error::config("activation matrices cover different stimuli"));
        }
    }
    Ok(())
}

/// Scores every unordered pair `(i, j)`, `i < j`, in lexicographic order.
pub fn pairwise_scores(acts: &[ActivationMatrix], method: Method) -> Result<Vec<SimilarityScore>> {
    if acts.len() < 2 {
        return Err(Error::config("pairwise similarity needs at least two runs"));
    }
    check_stimuli(acts)?;
    let prepared = prepare(acts, method)?;
    let pairs: Vec<(usize, usize)> = (0..acts.len()).flat_map(|i| (i + 1..acts.len()).map(move |j| (i, j))).collect();
    pairs
        .par_iter()
        .map(|&(i, j)| score(&prepared, &prepared, i, j, acts, acts, method))
        .collect()
}

/// Scores every `(a, b)` combination across two groups, row-major over `a`.
pub fn cross_scores(a: &[ActivationMatrix], b: &[ActivationMatrix], method: Method) -> Result<Vec<SimilarityScore>> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::config("cross similarity needs runs on both sides"));
    }
    let all: Vec<ActivationMatrix> = a.iter().chain(b).cloned().collect();
    check_stimuli(&all)?;
    let pa = prepare(a, method)?;
    let pb = prepare(b, method)?;
    let pairs: Vec<(usize, usize)> = (0..a.len()).flat_map(|i| (0..b.len()).map(move |j| (i, j))).collect();
    pairs
        .par_iter()
        .map(|&(i, j)| score(&pa, &pb, i, j, a, b, method))
        .collect()
}

/// Captures `probe` from each named model on the shared stimuli, then scores
/// all unordered pairs.
pub fn pairwise_similarity<N: Network>(
    runs: &[(String, N)],
    probe: &str,
    stimuli: &Matrix,
    stimulus_ids: &[u64],
    method: Method,
) -> Result<Vec<SimilarityScore>> {
    if stimuli.rows() == 0 {
        return Err(Error::config("empty stimulus set"));
    }
    let acts = runs
        .iter()
        .map(|(id, model)| Ok(capture(model, id, stimuli, stimulus_ids, &[probe])?.remove(0)))
        .collect::<Result<Vec<_>>>()?;
    pairwise_scores(&acts, method)
}

/// Mean similarity of a group of pairs with a percentile bootstrap CI.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub group: String,
    pub method: String,
    pub mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub pairs: usize,
}

impl GroupSummary {
    pub fn overlaps(&self, other: &GroupSummary) -> bool {
        self.ci_low <= other.ci_high && other.ci_low <= self.ci_high
    }
}

pub fn summarize(group: &str, scores: &[SimilarityScore], resamples: usize, level: f64, rng: &mut Rng) -> Result<GroupSummary> {
    let values: Vec<f64> = scores.iter().map(|s| s.value).collect();
    let StatSummary { mean, ci_low, ci_high, n } = bootstrap_ci(&values, resamples, rng, level)?;
    Ok(GroupSummary {
        group: group.to_string(),
        method: scores[0].method.clone(),
        mean,
        ci_low,
        ci_high,
        pairs: n,
    })
}

pub fn write_scores_csv(path: &Path, scores: &[SimilarityScore]) -> Result<()> {
    write_csv(path, scores)
}

pub fn write_summaries_csv(path: &Path, groups: &[GroupSummary]) -> Result<()> {
    write_csv(path, groups)
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::config(format!("csv: {e}")))?;
    for r in rows {
        w.serialize(r).map_err(|e| Error::config(format!("csv: {e}")))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use featlab_nets::{Mlp, MlpSpec, FINAL_HIDDEN};

    fn stimuli() -> (Matrix, Vec<u64>) {
        let mut rng = Rng::seed_from(4);
        (Matrix::from_fn(20, 32, |_, _| rng.bit() as f64), (0..20).collect())
    }

    #[test]
    fn identical_models_score_one() {
        let m = Mlp::init(MlpSpec::binary_task(), 9).unwrap();
        let runs = vec![("a".to_string(), m.clone()), ("b".to_string(), m)];
        let (x, ids) = stimuli();
        for method in [Method::default(), Method::CkaLinear] {
            let s = pairwise_similarity(&runs, FINAL_HIDDEN, &x, &ids, method).unwrap();
            assert_eq!(s.len(), 1);
            assert!((s[0].value - 1.0).abs() < 1e-12);
            assert_eq!((s[0].a.as_str(), s[0].b.as_str()), ("a", "b"));
        }
    }

    #[test]
    fn pair_counts() {
        let (x, ids) = stimuli();
        let acts: Vec<ActivationMatrix> = (0..4)
            .map(|k| {
                let m = Mlp::init(MlpSpec::binary_task(), k).unwrap();
                capture(&m, &format!("m{k}"), &x, &ids, &[FINAL_HIDDEN]).unwrap().remove(0)
            })
            .collect();
        assert_eq!(pairwise_scores(&acts, Method::default()).unwrap().len(), 6);
        assert_eq!(cross_scores(&acts[..1], &acts[1..], Method::CkaLinear).unwrap().len(), 3);
        assert!(pairwise_scores(&acts[..1], Method::default()).is_err());
    }

    #[test]
    fn empty_stimuli_rejected() {
        let m = Mlp::init(MlpSpec::binary_task(), 9).unwrap();
        let runs = vec![("a".to_string(), m.clone()), ("b".to_string(), m)];
        assert!(pairwise_similarity(&runs, FINAL_HIDDEN, &Matrix::zeros(0, 32), &[], Method::default()).is_err());
    }

    #[test]
    fn constant_group_collapses_ci() {
        let s = SimilarityScore {
            value: 0.4,
            method: "m".into(),
            a: "a".into(),
            b: "b".into(),
        };
        let g = summarize("g", &[s.clone(), s.clone(), s], DEFAULT_RESAMPLES, 0.95, &mut Rng::seed_from(1)).unwrap();
        assert_eq!((g.mean, g.ci_low, g.ci_high), (0.4, 0.4, 0.4));
    }
}

use featlab_core::{Error, Result};

use crate::grid::DecodeReport;

/// Trained minus untrained decodability; positive means enhanced,
/// negative suppressed.
pub fn enhancement_score(trained: &DecodeReport, untrained: &DecodeReport) -> Result<f64> {
    if trained.feature != untrained.feature || trained.probe != untrained.probe {
        return Err(Error::config(format!(
            "comparing {}@{} against {}@{}",
            trained.feature, trained.probe, untrained.feature, untrained.probe
        )));
    }
    if trained.n_classes != untrained.n_classes {
        return Err(Error::config("reports decode different class counts"));
    }
    Ok(trained.best_val_accuracy - untrained.best_val_accuracy)
}

/// Decodability lies strictly above chance by more than `sigmas` binomial
/// standard deviations for `n` validation examples.
pub fn above_chance(report: &DecodeReport, n: usize, sigmas: f64) -> bool {
    let p = report.chance;
    let sd = (p * (1.0 - p) / n as f64).sqrt();
    report.best_val_accuracy > p + sigmas * sd
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{CellResult, DecoderKind};

    fn report(acc: f64, feature: &str) -> DecodeReport {
        let cell = CellResult {
            learning_rate: 1e-3,
            weight_decay: 0.0,
            val_accuracy: acc,
            failed: false,
        };
        DecodeReport::from_cells(DecoderKind::Linear, 7, vec![cell], false).named(feature, "fc2")
    }

    #[test]
    fn identical_reports_score_zero() {
        let r = report(0.4, "shape");
        assert_eq!(enhancement_score(&r, &r).unwrap(), 0.0);
    }

    #[test]
    fn difference_sign() {
        let s = enhancement_score(&report(0.9, "shape"), &report(0.6, "shape")).unwrap();
        assert!((s - 0.3).abs() < 1e-12);
        assert!(enhancement_score(&report(0.2, "shape"), &report(0.6, "shape")).unwrap() < 0.0);
    }

    #[test]
    fn mismatched_reports_rejected() {
        assert!(enhancement_score(&report(0.9, "shape"), &report(0.6, "color")).is_err());
    }

    #[test]
    fn chance_margin() {
        assert!(above_chance(&report(0.3, "shape"), 1000, 3.0));
        assert!(!above_chance(&report(0.15, "shape"), 1000, 3.0));
    }
}

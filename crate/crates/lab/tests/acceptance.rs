//! End-to-end acceptance checks over the preset experiments.
//!
//! Each test writes one `criterion N: PASS|FAIL ...` line straight to
//! stdout, so the verdicts show up even when the harness captures output.
//! The expensive sweeps run once and are shared through `OnceLock`.

use std::collections::BTreeMap;
use std::io::Write;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use featlab_core::stats::{binomial_interval, mean, Z99};
use featlab_core::{Matrix, Rng};
use featlab_data::binary::{sample_dataset, BinaryDatasetSpec, Feature};
use featlab_data::navon::{enumerate, NavonSpec};
use featlab_data::{FeaturePair, VisualFeature};
use featlab_lab::*;
use featlab_nets::{gradients, ActivationMatrix, Cnn, CnnSpec, Labels, Mlp, MlpSpec, Network, OutputKind, PoolFinal, TrainData};
use featlab_repsim::{cka_linear, compute_rdm, rsa_score, Correlation, Metric, Rdm};
use tempfile::TempDir;

fn verdict(n: u32, pass: bool, detail: &str) {
    let line = format!("\ncriterion {n}: {} {detail}\n", if pass { "PASS" } else { "FAIL" });
    let mut out = std::io::stdout().lock();
    out.write_all(line.as_bytes()).unwrap();
    out.flush().unwrap();
    assert!(pass, "criterion {n} failed: {detail}");
}

struct Sweep {
    cfg: ExperimentConfig,
    records: Vec<RunRecord>,
    table: ResultsTable,
    elapsed: Duration,
    _dir: TempDir,
}

impl Sweep {
    fn run(cfg: ExperimentConfig, report: Option<&str>) -> Sweep {
        let dir = tempfile::tempdir().unwrap();
        let workers = std::thread::available_parallelism().map_or(1, |n| n.get());
        let opts = RunOptions {
            workers,
            ..RunOptions::new(dir.path())
        };
        let start = Instant::now();
        let records = cmd_sweep(&cfg, &opts).unwrap();
        let elapsed = start.elapsed();
        let (table, _) = cmd_report(&cfg, dir.path(), report).unwrap();
        for r in &records {
            assert!(r.diverged.is_none(), "{} diverged: {:?}", r.id(), r.diverged);
        }
        Sweep {
            cfg,
            records,
            table,
            elapsed,
            _dir: dir,
        }
    }

    fn matching(&self, keep: impl Fn(&Condition) -> bool) -> Vec<&RunRecord> {
        self.records.iter().filter(|r| keep(&r.condition)).collect()
    }

    /// Mean of a metric over the seeds of one binary predictivity.
    fn binary_mean(&self, easy: f64, metric: &str) -> f64 {
        let rs = self.matching(|c| *c == Condition::Binary { easy_predictivity: easy });
        assert!(!rs.is_empty(), "no runs at {easy}");
        mean(&rs.iter().map(|r| r.metric(metric).unwrap()).collect::<Vec<_>>())
    }
}

fn preset(kind: ExperimentKind) -> ExperimentConfig {
    ExperimentConfig::preset(kind)
}

fn tradeoff() -> &'static Sweep {
    static S: OnceLock<Sweep> = OnceLock::new();
    S.get_or_init(|| Sweep::run(preset(ExperimentKind::BinaryTradeoff), None))
}

fn nonlinear() -> &'static Sweep {
    static S: OnceLock<Sweep> = OnceLock::new();
    S.get_or_init(|| {
        let mut cfg = preset(ExperimentKind::BinaryTradeoff);
        cfg.name = "nonlinear".into();
        let b = cfg.binary.as_mut().unwrap();
        b.easy_predictivities = vec![0.5, 1.0];
        b.nonlinear = Some(Default::default());
        Sweep::run(cfg, Some("nonlinear"))
    })
}

fn dynamics() -> &'static Sweep {
    static S: OnceLock<Sweep> = OnceLock::new();
    S.get_or_init(|| Sweep::run(preset(ExperimentKind::BinaryDynamics), None))
}

fn binary_similarity() -> &'static Sweep {
    static S: OnceLock<Sweep> = OnceLock::new();
    S.get_or_init(|| {
        let mut cfg = preset(ExperimentKind::BinaryRsa);
        cfg.binary.as_mut().unwrap().easy_predictivities = vec![0.5, 1.0];
        Sweep::run(cfg, None)
    })
}

fn enhancement() -> &'static Sweep {
    static S: OnceLock<Sweep> = OnceLock::new();
    S.get_or_init(|| Sweep::run(preset(ExperimentKind::VisionEnhancement), None))
}

fn redundant() -> &'static Sweep {
    static S: OnceLock<Sweep> = OnceLock::new();
    S.get_or_init(|| Sweep::run(preset(ExperimentKind::VisionRedundant), None))
}

fn correlated() -> &'static Sweep {
    static S: OnceLock<Sweep> = OnceLock::new();
    S.get_or_init(|| Sweep::run(preset(ExperimentKind::VisionCorrelated), None))
}

fn vision_chance(s: &Sweep) -> f64 {
    1.0 / (10 - s.cfg.vision.as_ref().unwrap().held_out_per_feature) as f64
}

const FEATURES: [VisualFeature; 3] = [VisualFeature::Shape, VisualFeature::Color, VisualFeature::Texture];

#[test]
fn criterion_1_binary_tradeoff() {
    let s = tradeoff();
    let (he, hh) = (s.binary_mean(0.5, "reliance/easy"), s.binary_mean(0.5, "reliance/hard"));
    let top = s.binary_mean(1.0, "reliance/easy");
    let crossover = [0.5, 0.6, 0.7, 0.8, 0.9]
        .into_iter()
        .find(|&p| s.binary_mean(p, "reliance/easy") > s.binary_mean(p, "reliance/hard"));
    let at_08 = s.binary_mean(0.8, "reliance/easy") > s.binary_mean(0.8, "reliance/hard");
    let secs = s.elapsed.as_secs_f64();
    let pass = hh >= 0.75 && he <= 0.6 && top >= 0.95 && crossover.is_some() && at_08 && secs <= 600.0;
    verdict(
        1,
        pass,
        &format!(
            "at 0.5 hard {hh:.3} easy {he:.3}; at 1.0 easy {top:.3}; crossover at {crossover:?}; easy preferred at 0.8: {at_08}; {} runs in {secs:.0}s",
            s.records.len()
        ),
    );
}

#[test]
fn criterion_2_binary_decodability() {
    let s = tradeoff();
    let ps = &s.cfg.binary.as_ref().unwrap().easy_predictivities;
    let easy: Vec<f64> = ps.iter().map(|&p| s.binary_mean(p, "decode/easy")).collect();
    let hard: Vec<f64> = ps.iter().map(|&p| s.binary_mean(p, "decode/hard")).collect();
    let mut pass = easy.iter().all(|&e| e >= 0.70);
    for (&p, &h) in ps.iter().zip(&hard) {
        if p <= 0.6 + 1e-9 {
            pass &= h >= 0.80;
        }
        if p == 1.0 {
            pass &= h <= 0.65;
        }
    }
    verdict(2, pass, &format!("predictivities {ps:?}: easy {easy:.3?}, hard {hard:.3?}"));
}

#[test]
fn criterion_3_single_unit_persistence() {
    let s = tradeoff();
    let mut all = Vec::new();
    let mut detail = Vec::new();
    for &p in &s.cfg.binary.as_ref().unwrap().easy_predictivities {
        for u in ["decode/unit5", "decode/unit25"] {
            let v = s.binary_mean(p, u);
            all.push(v);
            detail.push(format!("{p}:{}={v:.3}", &u[7..]));
        }
    }
    let pass = all.iter().all(|v| (v - 0.80).abs() <= 0.15);
    verdict(3, pass, &detail.join(" "));
}

#[test]
fn criterion_4_nonlinear_decoders() {
    let s = nonlinear();
    let adv = s.binary_mean(1.0, "nonlinear/hard") - s.binary_mean(1.0, "large-linear/hard");
    let drop = s.binary_mean(0.5, "nonlinear/hard") - s.binary_mean(1.0, "nonlinear/hard");
    let pass = adv <= 0.10 && drop >= 0.15;
    verdict(4, pass, &format!("advantage at 1.0 {adv:.3}, nonlinear hard drop 0.5 -> 1.0 {drop:.3}"));
}

#[test]
fn criterion_5_learning_dynamics() {
    let s = dynamics();
    let n = s.cfg.binary.as_ref().unwrap().n_eval;
    let sigma = (0.25 / n as f64).sqrt();
    let (lo, hi) = binomial_interval(0.5, n, Z99);
    let (mut easy_ok, mut hard_ok, mut order_ok) = (0, 0, 0);
    let mut detail = Vec::new();
    for r in &s.records {
        let first = &r.series[0];
        assert_eq!(first.epoch, 0);
        let (e0, h0) = (first.metrics["decode/easy"], first.metrics["decode/hard"]);
        easy_ok += (e0 > 0.5 + 3.0 * sigma) as usize;
        hard_ok += (lo..=hi).contains(&h0) as usize;
        let mut peak = (0, f64::MIN);
        for p in &r.series {
            if p.metrics["reliance/easy"] > peak.1 {
                peak = (p.epoch, p.metrics["reliance/easy"]);
            }
        }
        let cross = r.series.iter().find(|p| p.metrics["reliance/hard"] > 0.7).map(|p| p.epoch);
        order_ok += cross.is_some_and(|c| peak.0 < c) as usize;
        detail.push(format!("s{}: e0 easy {e0:.3} hard {h0:.3}, easy peak e{} hard>0.7 at {cross:?}", r.seed, peak.0));
    }
    let k = s.records.len();
    let majority = |c: usize| 2 * c > k;
    let pass = majority(easy_ok) && majority(hard_ok) && majority(order_ok);
    verdict(
        5,
        pass,
        &format!(
            "seeds passing: easy {easy_ok}/{k}, hard {hard_ok}/{k} (interval [{lo:.3}, {hi:.3}]), ordering {order_ok}/{k}; {}",
            detail.join("; ")
        ),
    );
}

#[test]
fn criterion_6_binary_similarity() {
    let t = &binary_similarity().table;
    let (e1, e5) = ("easy-1.0000", "easy-0.5000");
    let same1 = t.cell(e1, e1).unwrap();
    let same5 = t.cell(e5, e5).unwrap();
    let multi1 = t.cell("multitask", e1).unwrap();
    let multi5 = t.cell("multitask", e5).unwrap();
    let untrained = t.cell(e1, "untrained").unwrap();
    let pass = same1.mean > same5.mean && same1.ci_low > same5.ci_high && multi1.mean > multi5.mean && untrained.mean < same1.mean;
    verdict(
        6,
        pass,
        &format!(
            "same-task 1.0 {:.3} [{:.3}, {:.3}] vs 0.5 {:.3} [{:.3}, {:.3}]; multitask vs 1.0 {:.3}, vs 0.5 {:.3}; 1.0 vs untrained {:.3}",
            same1.mean, same1.ci_low, same1.ci_high, same5.mean, same5.ci_low, same5.ci_high, multi1.mean, multi5.mean, untrained.mean
        ),
    );
}

fn vision_target(c: &Condition) -> Option<VisualFeature> {
    match c {
        Condition::Vision { target, .. } => Some(*target),
        _ => None,
    }
}

#[test]
fn criterion_7_enhancement_and_suppression() {
    let s = enhancement();
    let chance = vision_chance(s);
    let probe = &s.cfg.vision.as_ref().unwrap().decode.probes[0];
    let mut pass = true;
    let mut detail = Vec::new();
    for t in FEATURES {
        let runs = s.matching(|c| vision_target(c) == Some(t));
        assert_eq!(runs.len(), 3);
        for r in &runs {
            pass &= r.metric(&format!("enhancement/{probe}/{}", t.name())).unwrap() > 0.0;
        }
        for f in FEATURES.into_iter().filter(|&f| f != t) {
            let scores: Vec<f64> = runs.iter().map(|r| r.metric(&format!("enhancement/{probe}/{}", f.name())).unwrap()).collect();
            let trained: Vec<f64> = runs
                .iter()
                .map(|r| r.metric(&format!("decode/{probe}/{}/trained", f.name())).unwrap())
                .collect();
            pass &= scores.iter().filter(|&&v| v < 0.0).count() >= 2;
            pass &= trained.iter().all(|&v| v > chance);
            detail.push(format!("{}->{} {scores:+.3?}", t.name(), f.name()));
        }
        let own: Vec<f64> = runs.iter().map(|r| r.metric(&format!("enhancement/{probe}/{}", t.name())).unwrap()).collect();
        detail.push(format!("{} own {own:+.3?}", t.name()));
    }
    let secs = s.elapsed.as_secs_f64();
    pass &= secs <= 3600.0;
    verdict(7, pass, &format!("{}; chance {chance:.3}; {} runs in {secs:.0}s", detail.join(", "), s.records.len()));
}

fn mean_metric(runs: &[&RunRecord], metric: &str) -> f64 {
    mean(&runs.iter().map(|r| r.metric(metric).unwrap()).collect::<Vec<_>>())
}

#[test]
fn criterion_8_redundant_preference() {
    let s = redundant();
    let probe = &s.cfg.vision.as_ref().unwrap().decode.probes[0];
    let mut pass = true;
    let mut detail = Vec::new();
    for pair in [FeaturePair::ShapeColor, FeaturePair::ShapeTexture] {
        let runs = s.matching(|c| matches!(c, Condition::Vision { pair: Some(p), .. } if *p == pair));
        assert_eq!(runs.len(), 3);
        let (a, b) = pair.features();
        let dec = |f: VisualFeature, state: &str| mean_metric(&runs, &format!("decode/{probe}/{}/{state}", f.name()));
        let (ta, tb) = (dec(a, "trained"), dec(b, "trained"));
        let (ua, ub) = (dec(a, "untrained"), dec(b, "untrained"));
        pass &= (ta - tb).abs() >= 0.10 && (ta > tb) == (ua > ub);
        detail.push(format!(
            "{}+{}: trained {ta:.3}/{tb:.3}, untrained {ua:.3}/{ub:.3}",
            a.name(),
            b.name()
        ));
    }
    verdict(8, pass, &detail.join("; "));
}

#[test]
fn criterion_9_correlated_non_target() {
    let s = correlated();
    let v = s.cfg.vision.as_ref().unwrap();
    let sweep = &v.correlations[0];
    let (a, b) = sweep.pair.features();
    let other = if sweep.target == a { b } else { a };
    let metric = format!("enhancement/{}/{}", v.decode.probes[0], other.name());
    let mut by_p = BTreeMap::new();
    for &p in &sweep.probabilities {
        let runs = s.matching(|c| matches!(c, Condition::Vision { probability: Some(q), .. } if (q - p).abs() < 1e-12));
        assert_eq!(runs.len(), 3);
        by_p.insert(format!("{p:.3}"), mean_metric(&runs, &metric));
    }
    let at = |p: f64| by_p[&format!("{p:.3}")];
    let flat = [1.0 / 7.0, 0.5, 0.7];
    let mut spread: f64 = 0.0;
    for x in flat {
        for y in flat {
            spread = spread.max((at(x) - at(y)).abs());
        }
    }
    let pass = spread <= 0.10 && at(0.9) > at(0.5);
    verdict(
        9,
        pass,
        &format!("target {}, non-target {} score by probability {by_p:+.3?}; spread {spread:.3}", sweep.target.name(), other.name()),
    );
}

/// Central-difference check of every parameter; returns the worst
/// relative error.
fn worst_fd<N: Network>(model: &N, data: &TrainData, wd: f64) -> f64 {
    let (_, g) = gradients(model, data, wd).unwrap();
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for t in 0..model.params().len() {
        for i in 0..model.params()[t].len() {
            let mut plus = model.clone();
            plus.params_mut()[t][i] += h;
            let mut minus = model.clone();
            minus.params_mut()[t][i] -= h;
            let fd = (gradients(&plus, data, wd).unwrap().0 - gradients(&minus, data, wd).unwrap().0) / (2.0 * h);
            let an = g.0[t][i];
            let scale = fd.abs().max(an.abs());
            // exact zeros (dead units) have no relative error
            if scale > 1e-8 {
                worst = worst.max((fd - an).abs() / scale);
            }
        }
    }
    worst
}

fn random_matrix(rng: &mut Rng, n: usize, d: usize) -> Matrix {
    Matrix::from_fn(n, d, |_, _| rng.uniform_range(-1.0, 1.0))
}

fn jitter<N: Network>(model: &mut N, rng: &mut Rng) {
    for p in model.params_mut() {
        for v in p.iter_mut() {
            *v += rng.uniform_range(-0.2, 0.2);
        }
    }
}

fn gradient_instances() -> Vec<f64> {
    let mut rng = Rng::seed_from(2024);
    let mut errors = Vec::new();
    for k in 0..12u64 {
        let d = 3 + rng.below(5);
        let (out, width) = match k % 3 {
            0 => (OutputKind::Sigmoid, 1),
            1 => (OutputKind::Sigmoid, 2),
            _ => (OutputKind::Softmax, 2 + rng.below(3)),
        };
        let spec = MlpSpec {
            widths: vec![d, 2 + rng.below(6), 2 + rng.below(6), width],
            output: out,
            leaky_slope: 0.01,
        };
        let mut m = Mlp::init(spec, k).unwrap();
        jitter(&mut m, &mut rng);
        let n = 3 + rng.below(4);
        let x = random_matrix(&mut rng, n, d);
        let bits = |rng: &mut Rng| (0..n).map(|_| rng.below(2) as u8).collect::<Vec<u8>>();
        let labels = match (out, width) {
            (OutputKind::Sigmoid, 1) => Labels::binary(&bits(&mut rng)),
            (OutputKind::Sigmoid, _) => Labels::binary_pair(&bits(&mut rng), &bits(&mut rng)).unwrap(),
            _ => Labels::classes((0..n).map(|_| rng.below(width)).collect(), width).unwrap(),
        };
        let wd = if k % 2 == 0 { 0.0 } else { 1e-2 };
        errors.push(worst_fd(&m, &TrainData::new(x, labels).unwrap(), wd));
    }
    for k in 0..8u64 {
        // every block halves the map, so sides are multiples of 2^blocks
        let blocks = 1 + rng.below(2);
        let side = |rng: &mut Rng| (1 << blocks) * (1 + rng.below(2));
        let spec = CnnSpec {
            height: side(&mut rng),
            width: side(&mut rng),
            channels: 1 + rng.below(3),
            conv_channels: vec![2 + rng.below(2); blocks],
            fc_widths: [3 + rng.below(3), 3 + rng.below(3)],
            n_classes: 2 + rng.below(3),
            pool_final: if k % 2 == 0 { PoolFinal::Flatten } else { PoolFinal::GlobalAverage },
            leaky_slope: 0.1,
        };
        let mut m = Cnn::init(spec.clone(), 100 + k).unwrap();
        jitter(&mut m, &mut rng);
        let n = 2 + rng.below(3);
        let x = random_matrix(&mut rng, n, spec.input_width());
        let labels = Labels::classes((0..n).map(|_| rng.below(spec.n_classes)).collect(), spec.n_classes).unwrap();
        errors.push(worst_fd(&m, &TrainData::new(x, labels).unwrap(), 0.0));
    }
    errors
}

/// Textbook pairwise dissimilarities, sharing no code with the library.
fn brute_rdm(x: &Matrix, metric: Metric) -> Vec<Vec<f64>> {
    let s = x.rows();
    let mut out = vec![vec![0.0; s]; s];
    for i in 0..s {
        for j in 0..s {
            if i == j {
                continue;
            }
            let (a, b) = (x.row(i), x.row(j));
            out[i][j] = match metric {
                Metric::Euclidean => a.iter().zip(b).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt(),
                Metric::CorrelationDistance => {
                    let n = a.len() as f64;
                    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
                    let cov: f64 = a.iter().zip(b).map(|(p, q)| (p - ma) * (q - mb)).sum();
                    let va: f64 = a.iter().map(|p| (p - ma).powi(2)).sum();
                    let vb: f64 = b.iter().map(|q| (q - mb).powi(2)).sum();
                    1.0 - cov / (va * vb).sqrt()
                }
            };
        }
    }
    out
}

fn acts(m: Matrix) -> ActivationMatrix {
    let ids = (0..m.rows() as u64).collect();
    ActivationMatrix::new("p", "m", ids, m).unwrap()
}

fn rdm_error() -> f64 {
    let mut worst: f64 = 0.0;
    for s in 3..=50usize {
        let mut rng = Rng::seed_from(s as u64);
        let x = Matrix::from_fn(s, 2 + s % 9, |_, _| rng.normal());
        for metric in [Metric::CorrelationDistance, Metric::Euclidean] {
            let r = compute_rdm(&acts(x.clone()), metric).unwrap();
            let oracle = brute_rdm(&x, metric);
            for i in 0..s {
                for j in 0..s {
                    worst = worst.max((r.values[(i, j)] - oracle[i][j]).abs());
                }
            }
        }
    }
    worst
}

/// Largest deviation from the CKA identities: self-similarity one, and
/// invariance to rotations and isotropic scaling.
fn cka_error() -> f64 {
    let mut rng = Rng::seed_from(77);
    let mut worst: f64 = 0.0;
    for k in 0..5 {
        let (n, d) = (20 + 5 * k, 4);
        let x = Matrix::from_fn(n, d, |_, _| rng.normal());
        let y = Matrix::from_fn(n, 3, |_, _| rng.normal());
        worst = worst.max((cka_linear(&acts(x.clone()), &acts(x.clone())).unwrap() - 1.0).abs());
        // a random rotation from Givens steps
        let mut q = Matrix::from_fn(d, d, |i, j| if i == j { 1.0 } else { 0.0 });
        for (a, b) in [(0, 1), (1, 2), (2, 3), (0, 3)] {
            let t = rng.uniform_range(0.0, std::f64::consts::TAU);
            let (c, s) = (t.cos(), t.sin());
            for r in 0..d {
                let (qa, qb) = (q[(r, a)], q[(r, b)]);
                q[(r, a)] = c * qa - s * qb;
                q[(r, b)] = s * qa + c * qb;
            }
        }
        let rotated = featlab_core::matmul(&x, &q).unwrap();
        let scaled = Matrix::from_fn(n, d, |i, j| 3.7 * x[(i, j)]);
        let base = cka_linear(&acts(x), &acts(y.clone())).unwrap();
        worst = worst.max((cka_linear(&acts(rotated), &acts(y.clone())).unwrap() - base).abs());
        worst = worst.max((cka_linear(&acts(scaled), &acts(y)).unwrap() - base).abs());
    }
    worst
}

fn hand_rdm(upper: [f64; 6]) -> Rdm {
    let mut m = Matrix::zeros(4, 4);
    let mut k = 0;
    for i in 0..4 {
        for j in i + 1..4 {
            m[(i, j)] = upper[k];
            m[(j, i)] = upper[k];
            k += 1;
        }
    }
    Rdm::new(Metric::Euclidean, vec![0, 1, 2, 3], m).unwrap()
}

/// Stimuli (0,0), (0,1), (1,0), (1,1): one model keeps the two inputs as
/// coordinates, the other maps them through their XOR.
fn hand_rsa() -> (f64, f64) {
    let r2 = 2f64.sqrt();
    let a = hand_rdm([1.0, 1.0, r2, 0.0, 1.0, 1.0]);
    let b = hand_rdm([1.0, 1.0, 0.0, r2, 1.0, 1.0]);
    // frozen output of an independent numerical library; the two
    // summation orders may differ in the last bits
    (rsa_score(&a, &b, Correlation::Pearson).unwrap(), -0.7947168468766183)
}

/// Worst distance (in interval half-widths) of an empirical predictivity
/// from its target, over a sweep of specifications.
fn predictivity_checks() -> (usize, usize) {
    let n = 4096;
    let (mut ok, mut total) = (0, 0);
    for (k, &pe) in [0.5, 0.6, 0.7, 0.8, 0.9, 1.0].iter().enumerate() {
        let spec = BinaryDatasetSpec::new(pe, 0.9, n, k as u64);
        let ds = sample_dataset(&spec, &mut Rng::seed_from(900 + k as u64)).unwrap();
        for (f, p) in [(Feature::Easy, pe), (Feature::Hard, 0.9)] {
            let (lo, hi) = binomial_interval(p, n, Z99);
            let rate = ds.match_rate(f);
            total += 1;
            ok += (rate >= lo - 1e-12 && rate <= hi + 1e-12) as usize;
        }
    }
    (ok, total)
}

#[test]
fn criterion_10_math_oracles() {
    let grads = gradient_instances();
    let worst_grad = grads.iter().cloned().fold(0.0, f64::max);
    let rdm = rdm_error();
    let cka = cka_error();
    let (rsa, oracle) = hand_rsa();
    let navon = enumerate(&NavonSpec::default()).unwrap().len();
    let (pred_ok, pred_total) = predictivity_checks();
    let pass = grads.len() == 20
        && worst_grad <= 1e-4
        && rdm <= 1e-12
        && cka <= 1e-9
        && (rsa - oracle).abs() <= 4.0 * f64::EPSILON
        && rsa < 0.0
        && navon == 3250
        && pred_ok == pred_total;
    verdict(
        10,
        pass,
        &format!(
            "{} gradient checks, worst rel err {worst_grad:.2e}; rdm err {rdm:.1e}; cka err {cka:.1e}; hand rsa {rsa} (oracle {oracle}); navon {navon}; predictivity {pred_ok}/{pred_total} inside 99% intervals",
            grads.len()
        ),
    );
}

/// Small configurations of every experiment kind, cheap enough to run
/// twice from scratch.
fn small_configs() -> Vec<ExperimentConfig> {
    let mut out = Vec::new();
    for kind in [ExperimentKind::BinaryTradeoff, ExperimentKind::BinaryDynamics, ExperimentKind::BinaryRsa] {
        let mut cfg = preset(kind);
        cfg.seeds = vec![3, 4];
        let b = cfg.binary.as_mut().unwrap();
        b.easy_predictivities.truncate(2);
        b.training.epochs = 60;
        b.decoder = b.decoder.clone().with_epochs(100);
        b.n_eval = 128;
        b.similarity.n_stimuli = 32;
        if let Some(d) = b.dynamics.as_mut() {
            d.decode_epochs = vec![0, 20];
        }
        if kind == ExperimentKind::BinaryTradeoff {
            let mut check = featlab_lab::config::NonlinearCheck::default();
            check.n_decode = 256;
            check.linear = check.linear.with_epochs(50);
            check.nonlinear = check.nonlinear.with_epochs(50);
            b.nonlinear = Some(check);
        }
        cfg.report.resamples = 200;
        out.push(cfg);
    }
    for kind in [
        ExperimentKind::VisionEnhancement,
        ExperimentKind::VisionRedundant,
        ExperimentKind::VisionCorrelated,
        ExperimentKind::VisionRsa,
    ] {
        let mut cfg = preset(kind);
        cfg.seeds = if kind.is_rsa() { vec![5, 6] } else { vec![5] };
        let v = cfg.vision.as_mut().unwrap();
        v.dataset = featlab_data::TrifeatureSpec::at_size(16, 6, 0);
        v.conv_channels = vec![2, 2, 2];
        v.fc_widths = [8, 8];
        v.training.epochs = 1;
        v.n_train = 140;
        v.n_val = 70;
        v.targets.truncate(1);
        for c in &mut v.correlations {
            c.probabilities.truncate(2);
        }
        v.decode.n_train = 60;
        v.decode.n_val = 60;
        v.decode.grid.epochs = 3;
        v.decode.grid.learning_rates.truncate(1);
        v.decode.grid.weight_decays.truncate(1);
        cfg.report.resamples = 200;
        out.push(cfg);
    }
    let mut cfg = preset(ExperimentKind::Navon);
    cfg.seeds = vec![6];
    let n = cfg.navon.as_mut().unwrap();
    n.dataset.n_letters = 4;
    n.dataset.positions = 2;
    n.conv_channels = vec![2, 2, 2];
    n.fc_widths = [8, 8];
    n.training.epochs = 1;
    n.decode.n_train = 12;
    n.decode.n_val = 12;
    n.decode.grid.epochs = 2;
    n.decode.grid.learning_rates.truncate(1);
    n.decode.grid.weight_decays.truncate(1);
    cfg.report.resamples = 200;
    out.push(cfg);
    out
}

fn report_json(cfg: &ExperimentConfig) -> String {
    let dir = tempfile::tempdir().unwrap();
    let records = cmd_sweep(&cfg, &RunOptions::new(dir.path())).unwrap();
    let (table, _) = cmd_report(cfg, dir.path(), None).unwrap();
    serde_json::to_string(&(records.iter().map(|r| (r.id(), &r.metrics, &r.series, &r.similarity, &r.decode)).collect::<Vec<_>>(), table))
        .unwrap()
}

#[test]
fn criterion_11_determinism() {
    let mut detail = Vec::new();
    let mut pass = true;
    for cfg in small_configs() {
        let same = report_json(&cfg) == report_json(&cfg);
        pass &= same;
        detail.push(format!("{}: {}", cfg.kind.name(), if same { "identical" } else { "differs" }));
    }
    // one full-size run of each family, replayed in memory against its
    // swept record
    for s in [tradeoff(), enhancement()] {
        let ctx = Context::new(&s.cfg).unwrap();
        let job = &jobs(&s.cfg, None).unwrap()[0];
        let (again, _) = ctx.run(job).unwrap();
        let original = s.records.iter().find(|r| r.id() == job.id()).unwrap();
        let same = again.metrics == original.metrics && again.decode == original.decode;
        pass &= same;
        detail.push(format!("{} replay: {}", job.id(), if same { "identical" } else { "differs" }));
    }
    verdict(11, pass, &detail.join(", "));
}

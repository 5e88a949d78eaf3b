//! Synthetic ground truth, synthetic classifiers and evaluation metrics.
//!
//! All randomness flows through [`ChaCha8Rng`], whose output is specified
//! independently of platform, so a `(seed, config)` pair reproduces a run
//! bit for bit. The truth chain uses stream 0 of the seed and classifier
//! draws use stream 1.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::dirichlet::ProbabilityVector;
use crate::error::{Error, Result};
use crate::filter::{FilterConfig, Observation};
use crate::fusion::{SchedulePolicy, Smoother, SmootherKind, STRONG_ID, WEAK_ID};

const CHAIN_STREAM: u64 = 0;
const OBSERVATION_STREAM: u64 = 1;

/// Seeded generator used for every draw in the harness.
pub fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// First-order Markov chain over `k` classes sampled every `tick` seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkovChainSpec {
    pub k: usize,
    /// Probability of keeping the current class at each tick.
    pub stay_prob: f64,
    /// Where to go when the class switches: row `i` is a distribution over
    /// `j != i` (zero diagonal). `None` means uniform over the other classes.
    pub switch_probs: Option<Vec<Vec<f64>>>,
    pub tick: f64,
    pub duration: f64,
    pub seed: u64,
    /// Starting class; drawn uniformly when `None`.
    pub initial: Option<usize>,
}

impl Default for MarkovChainSpec {
    fn default() -> Self {
        Self {
            k: 6,
            stay_prob: 0.99,
            switch_probs: None,
            tick: 5.0,
            duration: 4.0 * 3600.0,
            seed: 0,
            initial: None,
        }
    }
}

impl MarkovChainSpec {
    pub fn n_ticks(&self) -> usize {
        (self.duration / self.tick + 1e-9).floor() as usize
    }

    /// Row-stochastic transition matrix `stay * I + (1 - stay) * S`.
    pub fn transition_matrix(&self) -> Result<Vec<Vec<f64>>> {
        let k = self.k;
        if k < 2 {
            return Err(Error::InvalidConfig(format!("chain needs at least 2 classes, got {k}")));
        }
        if !(0.0..=1.0).contains(&self.stay_prob) {
            return Err(Error::InvalidConfig(format!(
                "stay_prob must lie in [0, 1], got {}",
                self.stay_prob
            )));
        }
        if !(self.tick > 0.0 && self.tick.is_finite()) || !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(Error::InvalidConfig("tick and duration must be positive".into()));
        }
        if let Some(c) = self.initial {
            if c >= k {
                return Err(Error::InvalidConfig(format!("initial class {c} out of range")));
            }
        }
        let switch = match &self.switch_probs {
            Some(s) => {
                if s.len() != k || s.iter().any(|r| r.len() != k) {
                    return Err(Error::InvalidConfig("switch_probs must be k x k".into()));
                }
                s.clone()
            }
            None => (0..k)
                .map(|i| (0..k).map(|j| if i == j { 0.0 } else { 1.0 / (k - 1) as f64 }).collect())
                .collect(),
        };
        let mut matrix = vec![vec![0.0; k]; k];
        for (i, row) in switch.iter().enumerate() {
            if row.iter().any(|p| !(*p >= 0.0)) || row[i] != 0.0 {
                return Err(Error::InvalidConfig(format!(
                    "switch_probs row {i} must be non-negative with a zero diagonal"
                )));
            }
            for (j, p) in row.iter().enumerate() {
                matrix[i][j] = if i == j { self.stay_prob } else { (1.0 - self.stay_prob) * p };
            }
            let sum: f64 = matrix[i].iter().sum();
            if (sum - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidConfig(format!(
                    "transition row {i} sums to {sum}, expected 1"
                )));
            }
        }
        Ok(matrix)
    }
}

fn sample_categorical<R: Rng>(weights: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    // rounding slack: last class with positive weight
    weights.iter().rposition(|w| *w > 0.0).unwrap_or(weights.len() - 1)
}

/// Seeded class trajectory `(t, class)` with zero-based classes.
pub fn simulate_chain(spec: &MarkovChainSpec) -> Result<Vec<(f64, usize)>> {
    let matrix = spec.transition_matrix()?;
    let mut rng = seeded_rng(spec.seed, CHAIN_STREAM);
    let n = spec.n_ticks();
    let mut out = Vec::with_capacity(n);
    let mut state = match spec.initial {
        Some(c) => c,
        None => rng.random_range(0..spec.k),
    };
    for i in 0..n {
        if i > 0 {
            state = sample_categorical(&matrix[state], &mut rng);
        }
        out.push((i as f64 * spec.tick, state));
    }
    Ok(out)
}

/// A classifier emulated by Dirichlet draws peaked on the true (or, with
/// probability `flip_prob`, a wrong) class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticClassifierSpec {
    pub id: String,
    pub concentration_true: f64,
    pub concentration_other: f64,
    pub flip_prob: f64,
}

impl SyntheticClassifierSpec {
    pub fn new(
        id: impl Into<String>,
        concentration_true: f64,
        concentration_other: f64,
        flip_prob: f64,
    ) -> Result<Self> {
        let spec = Self { id: id.into(), concentration_true, concentration_other, flip_prob };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.concentration_other > 0.0 && self.concentration_true > self.concentration_other) {
            return Err(Error::InvalidConfig(format!(
                "classifier `{}` needs concentration_true > concentration_other > 0",
                self.id
            )));
        }
        if !(0.0..1.0).contains(&self.flip_prob) && self.flip_prob != 1.0 {
            return Err(Error::InvalidConfig(format!(
                "classifier `{}` flip_prob must lie in [0, 1]",
                self.id
            )));
        }
        Ok(())
    }

    /// Default weak classifier: concentration 8 / 0.8, 25% misplaced peaks.
    pub fn weak() -> Self {
        Self { id: WEAK_ID.into(), concentration_true: 8.0, concentration_other: 0.8, flip_prob: 0.25 }
    }

    /// Default strong classifier: concentration 40 / 0.5, 5% misplaced peaks.
    pub fn strong() -> Self {
        Self { id: STRONG_ID.into(), concentration_true: 40.0, concentration_other: 0.5, flip_prob: 0.05 }
    }

    pub fn sample<R: Rng>(&self, true_class: usize, k: usize, rng: &mut R) -> Result<ProbabilityVector> {
        if true_class >= k {
            return Err(Error::Data(format!("true class {true_class} out of range for {k} classes")));
        }
        let flip: f64 = rng.random();
        let peak = if flip < self.flip_prob {
            let wrong = rng.random_range(0..k - 1);
            if wrong >= true_class { wrong + 1 } else { wrong }
        } else {
            true_class
        };
        let on = Gamma::new(self.concentration_true, 1.0)
            .map_err(|e| Error::InvalidConfig(e.to_string()))?;
        let off = Gamma::new(self.concentration_other, 1.0)
            .map_err(|e| Error::InvalidConfig(e.to_string()))?;
        let draws: Vec<f64> =
            (0..k).map(|i| if i == peak { on.sample(rng) } else { off.sample(rng) }).collect();
        let sum: f64 = draws.iter().sum();
        if !(sum > 0.0 && sum.is_finite()) {
            let mut one_hot = vec![0.0; k];
            one_hot[peak] = 1.0;
            return ProbabilityVector::new(one_hot);
        }
        ProbabilityVector::new(draws.into_iter().map(|d| d / sum).collect())
    }
}

/// One seeded classifier draw.
pub fn simulate_classifier(
    true_class: usize,
    k: usize,
    spec: &SyntheticClassifierSpec,
    seed: u64,
) -> Result<ProbabilityVector> {
    spec.sample(true_class, k, &mut seeded_rng(seed, OBSERVATION_STREAM))
}

/// Truth trajectory plus the observation stream produced by the schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticStream {
    pub k: usize,
    pub truth: Vec<(f64, usize)>,
    pub observations: Vec<Observation>,
}

pub fn generate_stream(
    chain: &MarkovChainSpec,
    classifiers: &[SyntheticClassifierSpec],
    policy: &SchedulePolicy,
) -> Result<SyntheticStream> {
    for c in classifiers {
        c.validate()?;
    }
    let truth = simulate_chain(chain)?;
    let mut rng = seeded_rng(chain.seed, OBSERVATION_STREAM);
    let mut observations = Vec::with_capacity(truth.len());
    for &(t, class) in &truth {
        let source = policy.schedule_next(t);
        let spec = classifiers
            .iter()
            .find(|c| c.id == source)
            .ok_or_else(|| Error::UnknownSource(source.to_string()))?;
        let s = spec.sample(class, chain.k, &mut rng)?;
        let beta = policy.assign_beta(source)?;
        observations.push(Observation::new(t, source, s, beta)?);
    }
    Ok(SyntheticStream { k: chain.k, truth, observations })
}

/// Confusion matrix (rows truth, columns prediction) and derived metrics.
/// Per-class rates are `None` when their denominator is zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub k: usize,
    pub total: u64,
    pub confusion: Vec<Vec<u64>>,
    pub accuracy: f64,
    pub sensitivity: Vec<Option<f64>>,
    pub specificity: Vec<Option<f64>>,
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Scores zero-based `predictions` against `truth`.
pub fn evaluate(predictions: &[usize], truth: &[usize], k: usize) -> Result<MetricsReport> {
    if predictions.len() != truth.len() {
        return Err(Error::LengthMismatch(predictions.len(), truth.len()));
    }
    if predictions.is_empty() {
        return Err(Error::Empty);
    }
    let mut confusion = vec![vec![0u64; k]; k];
    for (&p, &t) in predictions.iter().zip(truth) {
        if p >= k || t >= k {
            return Err(Error::Data(format!("label out of range for {k} classes")));
        }
        confusion[t][p] += 1;
    }
    let total = predictions.len() as u64;
    let correct: u64 = (0..k).map(|i| confusion[i][i]).sum();
    let mut sensitivity = Vec::with_capacity(k);
    let mut specificity = Vec::with_capacity(k);
    for i in 0..k {
        let tp = confusion[i][i];
        let row: u64 = confusion[i].iter().sum();
        let col: u64 = confusion.iter().map(|r| r[i]).sum();
        let (fn_, fp) = (row - tp, col - tp);
        let tn = total - tp - fn_ - fp;
        sensitivity.push(ratio(tp, tp + fn_));
        specificity.push(ratio(tn, tn + fp));
    }
    Ok(MetricsReport {
        k,
        total,
        confusion,
        accuracy: correct as f64 / total as f64,
        sensitivity,
        specificity,
    })
}

fn fmt_rate(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.2}"))
}

impl MetricsReport {
    /// Accuracy as a percentage followed by a per-class sensitivity /
    /// specificity table.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "Percentage of Correct Classification: {:.2}", 100.0 * self.accuracy);
        let _ = writeln!(out, "{:<10}{:>13}{:>13}", "class", "Sensitivity", "Specificity");
        for i in 0..self.k {
            let _ = writeln!(
                out,
                "{:<10}{:>13}{:>13}",
                i + 1,
                fmt_rate(self.sensitivity[i]),
                fmt_rate(self.specificity[i])
            );
        }
        out
    }
}

/// Default benchmark scenario: six classes, 5 s ticks over four hours, a
/// strong classifier every minute and a weak one in between.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub chain: MarkovChainSpec,
    pub classifiers: Vec<SyntheticClassifierSpec>,
    pub policy: SchedulePolicy,
}

impl Scenario {
    pub fn default_with_seed(seed: u64) -> Self {
        Self {
            chain: MarkovChainSpec { seed, ..MarkovChainSpec::default() },
            classifiers: vec![SyntheticClassifierSpec::strong(), SyntheticClassifierSpec::weak()],
            policy: SchedulePolicy::strong_weak(60.0, 5.0).expect("default policy is valid"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodReport {
    pub method: String,
    pub metrics: MetricsReport,
    /// Steps whose MM solve hit the iteration cap.
    pub non_converged: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub seed: u64,
    pub n_ticks: usize,
    pub methods: Vec<MethodReport>,
    /// Raw accuracy of each classifier on the ticks where it was called.
    pub source_accuracy: BTreeMap<String, f64>,
}

impl BenchmarkReport {
    pub fn accuracy(&self, method: &str) -> Option<f64> {
        self.methods.iter().find(|m| m.method == method).map(|m| m.metrics.accuracy)
    }

    /// Accuracy percentages, one column per method.
    pub fn render_accuracy_table(&self) -> String {
        let mut head = String::new();
        let mut row = String::new();
        for m in &self.methods {
            let _ = write!(head, "{:>10}", m.method);
            let _ = write!(row, "{:>10.2}", 100.0 * m.metrics.accuracy);
        }
        format!("Percentage of Correct Classification\n{head}\n{row}\n")
    }

    fn render_rates(&self, title: &str, pick: impl Fn(&MetricsReport) -> &[Option<f64>]) -> String {
        let mut out = format!("{title}\n{:<8}", "class");
        for m in &self.methods {
            let _ = write!(out, "{:>10}", m.method);
        }
        out.push('\n');
        let k = self.methods.first().map_or(0, |m| m.metrics.k);
        for i in 0..k {
            let _ = write!(out, "{:<8}", i + 1);
            for m in &self.methods {
                let _ = write!(out, "{:>10}", fmt_rate(pick(&m.metrics)[i]));
            }
            out.push('\n');
        }
        out
    }

    /// Accuracy, sensitivity and specificity tables.
    pub fn render_text(&self) -> String {
        format!(
            "{}\n{}\n{}",
            self.render_accuracy_table(),
            self.render_rates("Sensitivity : TP / (TP + FN)", |m| &m.sensitivity),
            self.render_rates("Specificity : TN / (TN + FP)", |m| &m.specificity),
        )
    }
}

/// Generates one truth trajectory and one observation stream, feeds the
/// same stream to every method and scores each against the truth.
pub fn run_benchmark(
    chain: &MarkovChainSpec,
    classifiers: &[SyntheticClassifierSpec],
    policy: &SchedulePolicy,
    methods: &[SmootherKind],
    config: &FilterConfig,
) -> Result<BenchmarkReport> {
    let stream = generate_stream(chain, classifiers, policy)?;
    benchmark_stream(&stream, methods, config, chain.seed)
}

/// Scores `methods` on an already generated stream.
pub fn benchmark_stream(
    stream: &SyntheticStream,
    methods: &[SmootherKind],
    config: &FilterConfig,
    seed: u64,
) -> Result<BenchmarkReport> {
    let truth: Vec<usize> = stream.truth.iter().map(|(_, c)| *c).collect();
    let mut reports = Vec::with_capacity(methods.len());
    for &kind in methods {
        let mut smoother = Smoother::new(kind, config.clone())?;
        let mut predictions = Vec::with_capacity(truth.len());
        let mut non_converged = 0;
        for obs in &stream.observations {
            let out = smoother.push(obs)?;
            non_converged += usize::from(!out.converged);
            predictions.push(out.class);
        }
        reports.push(MethodReport {
            method: kind.name().to_string(),
            metrics: evaluate(&predictions, &truth, stream.k)?,
            non_converged,
        });
    }
    let mut hits: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for (obs, t) in stream.observations.iter().zip(&truth) {
        let e = hits.entry(obs.source.clone()).or_default();
        e.0 += usize::from(obs.s.argmax() == *t);
        e.1 += 1;
    }
    let source_accuracy = hits.into_iter().map(|(k, (h, n))| (k, h as f64 / n as f64)).collect();
    Ok(BenchmarkReport { seed, n_ticks: truth.len(), methods: reports, source_accuracy })
}

/// Per-step probability each method assigns to the true class.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub t: f64,
    pub source: String,
    pub true_class: usize,
    pub values: Vec<f64>,
}

pub fn true_class_trace(
    stream: &SyntheticStream,
    methods: &[SmootherKind],
    config: &FilterConfig,
) -> Result<Vec<TraceRow>> {
    let mut smoothers = methods
        .iter()
        .map(|k| Smoother::new(*k, config.clone()))
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::with_capacity(stream.observations.len());
    for (obs, &(t, class)) in stream.observations.iter().zip(&stream.truth) {
        let values = smoothers
            .iter_mut()
            .map(|s| s.push(obs).map(|o| o.smoothed.as_slice()[class]))
            .collect::<Result<Vec<_>>>()?;
        rows.push(TraceRow { t, source: obs.source.clone(), true_class: class, values });
    }
    Ok(rows)
}

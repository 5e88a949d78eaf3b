//! Multi-classifier orchestration: per-classifier trust weights, the fixed
//! call schedule and the four smoothers compared in benchmarks.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dirichlet::ProbabilityVector;
use crate::error::{domain, Error, Result};
use crate::filter::{filter_update, init_state, FilterConfig, FilterState, Observation};

/// A classifier, its trust weight `beta` and its call period in seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierProfile {
    pub id: String,
    pub beta: f64,
    pub period: f64,
}

impl ClassifierProfile {
    pub fn new(id: impl Into<String>, beta: f64, period: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&beta) {
            return Err(Error::InvalidConfig(format!("beta must lie in [0, 1], got {beta}")));
        }
        if !(period > 0.0 && period.is_finite()) {
            return Err(Error::InvalidConfig(format!("period must be positive, got {period}")));
        }
        Ok(Self { id: id.into(), beta, period })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum ScheduleRule {
    /// Each classifier fires on multiples of its period; earlier profiles win collisions.
    #[default]
    FixedPeriods,
}

/// Ordered classifier profiles, strongest (highest priority) first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchedulePolicy {
    profiles: Vec<ClassifierProfile>,
    rule: ScheduleRule,
}

pub const STRONG_ID: &str = "strong";
pub const WEAK_ID: &str = "weak";

impl SchedulePolicy {
    pub fn new(profiles: Vec<ClassifierProfile>) -> Result<Self> {
        if profiles.is_empty() {
            return Err(Error::InvalidConfig("schedule needs at least one classifier".into()));
        }
        for (i, p) in profiles.iter().enumerate() {
            if profiles[..i].iter().any(|q| q.id == p.id) {
                return Err(Error::InvalidConfig(format!("duplicate classifier id `{}`", p.id)));
            }
        }
        Ok(Self { profiles, rule: ScheduleRule::FixedPeriods })
    }

    /// Strong classifier every `strong_period` seconds with `beta = 1`, weak
    /// classifier on every other `weak_period` tick with `beta = 0.5`.
    pub fn strong_weak(strong_period: f64, weak_period: f64) -> Result<Self> {
        Self::new(vec![
            ClassifierProfile::new(STRONG_ID, 1.0, strong_period)?,
            ClassifierProfile::new(WEAK_ID, 0.5, weak_period)?,
        ])
    }

    pub fn profiles(&self) -> &[ClassifierProfile] {
        &self.profiles
    }

    pub fn rule(&self) -> ScheduleRule {
        self.rule
    }

    pub fn profile(&self, id: &str) -> Option<&ClassifierProfile> {
        self.profiles.iter().find(|p| p.id == id)
    }

    /// Overrides the weight of a registered classifier.
    pub fn set_beta(&mut self, id: &str, beta: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&beta) {
            return Err(Error::InvalidConfig(format!("beta must lie in [0, 1], got {beta}")));
        }
        let p = self
            .profiles
            .iter_mut()
            .find(|p| p.id == id)
            .ok_or_else(|| Error::UnknownSource(id.to_string()))?;
        p.beta = beta;
        Ok(())
    }

    /// Smallest period; the tick grid the schedule is evaluated on.
    pub fn tick(&self) -> f64 {
        self.profiles.iter().map(|p| p.period).fold(f64::INFINITY, f64::min)
    }

    /// Classifier to call at time `t`: the first profile whose period divides
    /// `t`, falling back to the last (most frequent) profile.
    pub fn schedule_next(&self, t: f64) -> &str {
        self.profiles
            .iter()
            .find(|p| is_multiple(t, p.period))
            .unwrap_or_else(|| self.profiles.last().expect("policy is non-empty"))
            .id
            .as_str()
    }

    /// Trust weight of classifier `source`.
    pub fn assign_beta(&self, source: &str) -> Result<f64> {
        self.profile(source).map(|p| p.beta).ok_or_else(|| Error::UnknownSource(source.to_string()))
    }
}

fn is_multiple(t: f64, period: f64) -> bool {
    let r = t / period;
    (r - r.round()).abs() <= 1e-9 * r.abs().max(1.0)
}

/// The four compared methods.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SmootherKind {
    /// Classifier outputs as-is.
    Raw,
    /// Running mean of the last `window` clamped outputs.
    Simple { window: usize },
    /// Filter with `beta = 1` for every observation.
    Single,
    /// Filter with each observation's own `beta`.
    Multiple,
}

impl SmootherKind {
    pub const DEFAULT_WINDOW: usize = 5;

    /// Raw, Simple(W=5), Single, Multiple.
    pub fn all() -> [SmootherKind; 4] {
        [
            SmootherKind::Raw,
            SmootherKind::Simple { window: Self::DEFAULT_WINDOW },
            SmootherKind::Single,
            SmootherKind::Multiple,
        ]
    }

    pub fn name(&self) -> &'static str {
        match self {
            SmootherKind::Raw => "Raw",
            SmootherKind::Simple { .. } => "Simple",
            SmootherKind::Single => "Single",
            SmootherKind::Multiple => "Multiple",
        }
    }
}

impl fmt::Display for SmootherKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SmootherKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "raw" => Ok(SmootherKind::Raw),
            "simple" => Ok(SmootherKind::Simple { window: Self::DEFAULT_WINDOW }),
            "single" => Ok(SmootherKind::Single),
            "multiple" => Ok(SmootherKind::Multiple),
            other => Err(Error::InvalidConfig(format!("unknown method `{other}`"))),
        }
    }
}

/// One smoother output.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothedOutput {
    /// The observation as the smoother consumed it (clamped unless Raw).
    pub input: ProbabilityVector,
    pub smoothed: ProbabilityVector,
    /// Zero-based argmax of `smoothed`, ties to the lowest index.
    pub class: usize,
    pub converged: bool,
}

/// Per-stream smoother state.
#[derive(Debug, Clone)]
pub struct Smoother {
    kind: SmootherKind,
    config: FilterConfig,
    dim: Option<usize>,
    window: VecDeque<Vec<f64>>,
    state: Option<FilterState>,
}

impl Smoother {
    pub fn new(kind: SmootherKind, config: FilterConfig) -> Result<Self> {
        if let SmootherKind::Simple { window: 0 } = kind {
            return Err(Error::InvalidConfig("running-average window must be >= 1".into()));
        }
        config.validate()?;
        Ok(Self { kind, config, dim: None, window: VecDeque::new(), state: None })
    }

    pub fn kind(&self) -> SmootherKind {
        self.kind
    }

    /// Filter state for Single/Multiple after at least one observation.
    pub fn filter_state(&self) -> Option<&FilterState> {
        self.state.as_ref()
    }

    pub fn push(&mut self, obs: &Observation) -> Result<SmoothedOutput> {
        let k = obs.s.len();
        match self.dim {
            None => self.dim = Some(k),
            Some(d) if d != k => return Err(Error::DimensionMismatch { expected: d, got: k }),
            Some(_) => {}
        }
        let (input, smoothed, converged) = match self.kind {
            SmootherKind::Raw => (obs.s.clone(), obs.s.clone(), true),
            SmootherKind::Simple { window } => {
                let input = obs.s.clamped(self.config.clamp_eps)?;
                if self.window.len() == window {
                    self.window.pop_front();
                }
                self.window.push_back(input.as_slice().to_vec());
                let n = self.window.len() as f64;
                let mut mean = vec![0.0; k];
                for v in &self.window {
                    for (m, x) in mean.iter_mut().zip(v) {
                        *m += x;
                    }
                }
                mean.iter_mut().for_each(|m| *m /= n);
                (input, ProbabilityVector::normalized(mean)?, true)
            }
            SmootherKind::Single | SmootherKind::Multiple => {
                let input = obs.s.clamped(self.config.clamp_eps)?;
                let beta = if self.kind == SmootherKind::Single { 1.0 } else { obs.beta };
                if !(0.0..=1.0).contains(&beta) {
                    return Err(domain(format!("beta must lie in [0, 1], got {beta}")));
                }
                let state = match self.state.take() {
                    Some(s) => s,
                    None => init_state(k, &self.config)?,
                };
                let clamped = Observation { t: obs.t, source: obs.source.clone(), s: input, beta };
                let (next, p) = filter_update(&state, &clamped, &self.config)?;
                let converged = next.converged;
                self.state = Some(next);
                (clamped.s, p, converged)
            }
        };
        let class = smoothed.argmax();
        Ok(SmoothedOutput { input, smoothed, class, converged })
    }
}

/// Runs one smoother over a whole time-ordered stream.
pub fn smooth<'a, I>(kind: SmootherKind, observations: I, config: &FilterConfig) -> Result<Vec<SmoothedOutput>>
where
    I: IntoIterator<Item = &'a Observation>,
{
    let mut smoother = Smoother::new(kind, config.clone())?;
    observations.into_iter().map(|o| smoother.push(o)).collect()
}

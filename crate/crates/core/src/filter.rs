//! The fusion filter.
//!
//! State is a conjugate prior `(eta, nu)` over the Dirichlet concentration
//! together with its cached mode `alpha*`. Each observation `s` with weight
//! `beta` is modelled as `Dir(beta * alpha + (1 - beta) * 1)`. An update
//!
//! 1. maximizes the log posterior `L(alpha)` (prior decayed by `gamma`) with
//!    the MM fixed-point sweep, warm-started at `alpha*`,
//! 2. sets `eta <- gamma * eta + beta`,
//! 3. picks `nu` so that the new `alpha*` is exactly the prior mode,
//! 4. reports the mode of `Dir(alpha*)` as the smoothed probabilities.

use crate::dirichlet::{
    dirichlet_mode, nu_from_mode_in, objective_unchecked, ConjugatePriorParams, DirichletParams,
    ProbabilityVector, DEFAULT_CLAMP_EPS,
};
use crate::error::{domain, Error, Result};
use crate::specfn::{invert_monotone, InvertConfig, SpecFnMode};

/// Smallest concentration the solver will emit when the M-step pushes an
/// entry against the boundary.
pub const MIN_ALPHA: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct FilterConfig {
    /// Decay applied to the prior per observation, in `(0, 1]`.
    pub gamma: f64,
    /// Maximum MM sweeps per observation.
    pub max_mm_iters: usize,
    /// Early-stop threshold on `max |alpha^{k+1} - alpha^k|`.
    pub mm_tol: f64,
    /// Absolute tolerance on `|G(x) - y|` when inverting `G`.
    pub invert_tol: f64,
    /// Initial prior mode; `None` means the all-ones vector.
    pub init_alpha: Option<DirichletParams>,
    pub init_eta: f64,
    /// Per-entry floor applied to incoming probability vectors.
    pub clamp_eps: f64,
    pub specfn_mode: SpecFnMode,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            gamma: 0.95,
            max_mm_iters: 20,
            mm_tol: 1e-8,
            invert_tol: 1e-10,
            init_alpha: None,
            init_eta: 1.0,
            clamp_eps: DEFAULT_CLAMP_EPS,
            specfn_mode: SpecFnMode::Exact,
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::InvalidConfig(format!("gamma must lie in (0, 1], got {}", self.gamma)));
        }
        if self.max_mm_iters == 0 {
            return Err(Error::InvalidConfig("max_mm_iters must be positive".into()));
        }
        if !(self.mm_tol > 0.0) || !(self.invert_tol > 0.0) {
            return Err(Error::InvalidConfig("tolerances must be positive".into()));
        }
        if !(self.init_eta >= 0.0 && self.init_eta.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "init_eta must be finite and non-negative, got {}",
                self.init_eta
            )));
        }
        if !(self.clamp_eps >= 0.0 && self.clamp_eps < 0.5) {
            return Err(Error::InvalidConfig(format!("clamp_eps out of range: {}", self.clamp_eps)));
        }
        Ok(())
    }

    fn invert_config(&self) -> InvertConfig {
        InvertConfig::with_tol(self.invert_tol)
    }
}

/// Per-stream filter state.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterState {
    pub prior: ConjugatePriorParams,
    /// Mode of the current prior.
    pub alpha_mode: DirichletParams,
    pub step_count: u64,
    /// Whether the last MM solve met `mm_tol` within `max_mm_iters`.
    pub converged: bool,
}

impl FilterState {
    pub fn num_classes(&self) -> usize {
        self.alpha_mode.len()
    }

    /// Smoothed probabilities implied by the current state.
    pub fn estimate(&self) -> ProbabilityVector {
        dirichlet_mode(&self.alpha_mode)
    }
}

/// One classifier output entering the filter.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    /// Seconds.
    pub t: f64,
    pub source: String,
    pub s: ProbabilityVector,
    pub beta: f64,
}

impl Observation {
    pub fn new(t: f64, source: impl Into<String>, s: ProbabilityVector, beta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&beta) {
            return Err(domain(format!("beta must lie in [0, 1], got {beta}")));
        }
        Ok(Self { t, source: source.into(), s, beta })
    }
}

fn check_g_args(beta: f64, c: f64, gamma_eta: f64) -> Result<()> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(domain(format!("G requires beta in (0, 1], got {beta}")));
    }
    if !(c >= 0.0 && c.is_finite()) {
        return Err(domain(format!("G requires c >= 0, got {c}")));
    }
    if !(gamma_eta >= 0.0 && gamma_eta.is_finite()) {
        return Err(domain(format!("G requires gamma*eta >= 0, got {gamma_eta}")));
    }
    Ok(())
}

#[inline]
fn g_raw(x: f64, beta: f64, c: f64, gamma_eta: f64, mode: &SpecFnMode) -> f64 {
    let blend = beta * mode.digamma_unchecked(beta * x + c);
    if gamma_eta == 0.0 {
        blend
    } else {
        blend + gamma_eta * mode.digamma_unchecked(x)
    }
}

/// `G(x) = beta * Psi(beta * x + c) + gamma_eta * Psi(x)`, strictly increasing in `x`.
pub fn g_function(x: f64, beta: f64, c: f64, gamma_eta: f64) -> Result<f64> {
    g_function_in(x, beta, c, gamma_eta, &SpecFnMode::Exact)
}

pub fn g_function_in(x: f64, beta: f64, c: f64, gamma_eta: f64, mode: &SpecFnMode) -> Result<f64> {
    check_g_args(beta, c, gamma_eta)?;
    if !(x > 0.0 && x.is_finite()) {
        return Err(domain(format!("G requires x > 0, got {x}")));
    }
    Ok(g_raw(x, beta, c, gamma_eta, mode))
}

/// Solves `G(x) = y` for `x > 0` to `|G(x) - y| <= tol`.
pub fn g_inverse(y: f64, beta: f64, c: f64, gamma_eta: f64, tol: f64) -> Result<f64> {
    g_inverse_in(y, beta, c, gamma_eta, &InvertConfig::with_tol(tol), &SpecFnMode::Exact)
}

pub fn g_inverse_in(
    y: f64,
    beta: f64,
    c: f64,
    gamma_eta: f64,
    config: &InvertConfig,
    mode: &SpecFnMode,
) -> Result<f64> {
    check_g_args(beta, c, gamma_eta)?;
    invert_monotone(|x| g_raw(x, beta, c, gamma_eta, mode), y, config)
}

/// Result of an MM solve.
#[derive(Debug, Clone, PartialEq)]
pub struct MmOutcome {
    pub alpha: DirichletParams,
    pub converged: bool,
    pub iterations: usize,
}

/// Posterior mode of `L(alpha)` by MM fixed-point sweeps.
///
/// Each sweep computes `r_i = G_{beta, K(1-beta)}(sum alpha) + beta ln s_i -
/// gamma nu_i` and sets `alpha_i = G^-1_{beta, 1-beta}(r_i)`. Every sweep
/// maximizes a minorizer of `L` that is tight at the current iterate, so `L`
/// never decreases. Stops once `max |delta alpha| <= mm_tol`; otherwise returns
/// the last iterate with `converged = false`.
pub fn mm_posterior_mode(
    s: &ProbabilityVector,
    prior: &ConjugatePriorParams,
    start: &DirichletParams,
    beta: f64,
    config: &FilterConfig,
) -> Result<MmOutcome> {
    mm_posterior_mode_traced(s, prior, start, beta, config, |_| {})
}

/// [`mm_posterior_mode`] with a callback receiving every iterate, starting
/// with `start` itself.
pub fn mm_posterior_mode_traced<F>(
    s: &ProbabilityVector,
    prior: &ConjugatePriorParams,
    start: &DirichletParams,
    beta: f64,
    config: &FilterConfig,
    mut on_iterate: F,
) -> Result<MmOutcome>
where
    F: FnMut(&[f64]),
{
    let k = start.len();
    for got in [s.len(), prior.len()] {
        if got != k {
            return Err(Error::DimensionMismatch { expected: k, got });
        }
    }
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(domain(format!("MM solve requires beta in (0, 1], got {beta}")));
    }
    if s.as_slice().iter().any(|p| *p <= 0.0) {
        return Err(domain("observation has a zero entry; clamp it first"));
    }

    let mode = &config.specfn_mode;
    let invert = config.invert_config();
    let gamma = config.gamma;
    let gamma_eta = gamma * prior.eta;
    let c_sum = k as f64 * (1.0 - beta);
    let c_one = 1.0 - beta;
    let offsets: Vec<f64> = s
        .as_slice()
        .iter()
        .zip(&prior.nu)
        .map(|(p, v)| beta * p.ln() - gamma * v)
        .collect();

    let mut alpha = start.as_slice().to_vec();
    let mut next = vec![0.0; k];
    on_iterate(&alpha);
    let mut converged = false;
    let mut boundary_hit = false;
    let mut iterations = 0;
    while iterations < config.max_mm_iters {
        iterations += 1;
        let u: f64 = alpha.iter().sum();
        let base = g_raw(u, beta, c_sum, gamma_eta, mode);
        for ((n, a), off) in next.iter_mut().zip(&alpha).zip(&offsets) {
            *n = match invert_monotone(|x| g_raw(x, beta, c_one, gamma_eta, mode), base + off, &invert)
            {
                Ok(x) => x.max(MIN_ALPHA),
                Err(_) => {
                    // Target below the range of G: the M-step optimum is on the boundary.
                    boundary_hit = true;
                    if base + off < g_raw(*a, beta, c_one, gamma_eta, mode) {
                        MIN_ALPHA
                    } else {
                        *a
                    }
                }
            };
        }
        let delta = alpha.iter().zip(&next).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        std::mem::swap(&mut alpha, &mut next);
        on_iterate(&alpha);
        if delta <= config.mm_tol {
            converged = !boundary_hit;
            break;
        }
    }
    Ok(MmOutcome { alpha: DirichletParams::new(alpha)?, converged, iterations })
}

/// Log posterior evaluated at an iterate; convenience for traces.
pub fn objective_at(
    alpha: &[f64],
    s: &ProbabilityVector,
    prior: &ConjugatePriorParams,
    beta: f64,
    gamma: f64,
) -> f64 {
    objective_unchecked(alpha, s.as_slice(), prior, beta, gamma)
}

/// Prediction-only step: `(eta, nu) <- (gamma eta, gamma nu)`; the mode is unchanged.
pub fn decay(state: &FilterState, gamma: f64) -> FilterState {
    FilterState { prior: state.prior.scaled(gamma), ..state.clone() }
}

/// Initial state for `k` classes.
pub fn init_state(k: usize, config: &FilterConfig) -> Result<FilterState> {
    if k < 2 {
        return Err(domain(format!("filter needs at least 2 classes, got {k}")));
    }
    config.validate()?;
    let alpha = match &config.init_alpha {
        Some(a) if a.len() != k => {
            return Err(Error::DimensionMismatch { expected: k, got: a.len() })
        }
        Some(a) => a.clone(),
        None => DirichletParams::ones(k),
    };
    let nu = nu_from_mode_in(&alpha, config.init_eta, &config.specfn_mode);
    Ok(FilterState {
        prior: ConjugatePriorParams::new(config.init_eta, nu)?,
        alpha_mode: alpha,
        step_count: 0,
        converged: true,
    })
}

/// Folds one observation into the state and returns the smoothed probabilities.
///
/// `obs.s` must already be clamped (strictly positive). An observation with
/// `beta = 0` carries no information: the solve is skipped and only the
/// decay `eta <- gamma eta` is applied.
pub fn filter_update(
    state: &FilterState,
    obs: &Observation,
    config: &FilterConfig,
) -> Result<(FilterState, ProbabilityVector)> {
    let k = state.num_classes();
    if obs.s.len() != k {
        return Err(Error::DimensionMismatch { expected: k, got: obs.s.len() });
    }
    if !(0.0..=1.0).contains(&obs.beta) {
        return Err(domain(format!("beta must lie in [0, 1], got {}", obs.beta)));
    }
    let gamma = config.gamma;
    let (alpha, converged) = if obs.beta == 0.0 {
        (state.alpha_mode.clone(), true)
    } else {
        let out = mm_posterior_mode(&obs.s, &state.prior, &state.alpha_mode, obs.beta, config)?;
        (out.alpha, out.converged)
    };
    let eta = gamma * state.prior.eta + obs.beta;
    let nu = nu_from_mode_in(&alpha, eta, &config.specfn_mode);
    let p = dirichlet_mode(&alpha);
    let next = FilterState {
        prior: ConjugatePriorParams::new(eta, nu)?,
        alpha_mode: alpha,
        step_count: state.step_count + 1,
        converged,
    };
    Ok((next, p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dirichlet::mode_condition_residual;
    use crate::specfn::digamma;

    #[test]
    fn g_reduces_for_unit_beta() {
        let v = g_function(2.0, 1.0, 0.0, 0.5).unwrap();
        assert!((v - 1.5 * digamma(2.0).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn g_known_value() {
        let v = g_function(2.0, 0.5, 1.0, 0.0).unwrap();
        assert!((v - 0.5 * digamma(2.0).unwrap()).abs() < 1e-15);
        assert!((v - 0.211_392_167_549_233_57).abs() < 1e-12);
    }

    #[test]
    fn g_argument_checks() {
        assert!(g_function(1.0, 0.0, 1.0, 1.0).is_err());
        assert!(g_function(1.0, 1.2, 1.0, 1.0).is_err());
        assert!(g_function(0.0, 0.5, 0.5, 1.0).is_err());
        assert!(g_function(1.0, 0.5, -0.5, 1.0).is_err());
    }

    #[test]
    fn g_inverse_examples() {
        let y = g_function(3.7, 0.6, 0.4, 1.2).unwrap();
        assert!((g_inverse(y, 0.6, 0.4, 1.2, 1e-10).unwrap() - 3.7).abs() < 1e-6);
        let y = digamma(5.0).unwrap();
        assert!((g_inverse(y, 1.0, 0.0, 0.0, 1e-10).unwrap() - 5.0).abs() < 1e-8);
        assert!((g_inverse(0.21139, 0.5, 1.0, 0.0, 1e-10).unwrap() - 2.0).abs() < 1e-4);
    }

    #[test]
    fn g_inverse_below_range_is_an_error() {
        // with gamma_eta = 0 and beta < 1, G is bounded below by beta * Psi(1 - beta)
        let floor = 0.5 * digamma(0.5).unwrap();
        assert!(matches!(g_inverse(floor - 1.0, 0.5, 0.5, 0.0, 1e-10), Err(Error::NoConvergence(_))));
    }

    #[test]
    fn decay_examples() {
        let config = FilterConfig::default();
        let state = init_state(2, &config).unwrap();
        assert_eq!(decay(&state, 1.0), state);
        let s = FilterState {
            prior: ConjugatePriorParams::new(2.0, vec![-0.5, -0.9]).unwrap(),
            ..state
        };
        let d = decay(&s, 0.9);
        assert!((d.prior.eta - 1.8).abs() < 1e-15);
        assert!((d.prior.nu[0] + 0.45).abs() < 1e-15);
        assert!((d.prior.nu[1] + 0.81).abs() < 1e-15);
        assert_eq!(d.alpha_mode, s.alpha_mode);
    }

    #[test]
    fn init_state_defaults() {
        let state = init_state(3, &FilterConfig::default()).unwrap();
        assert_eq!(state.prior.eta, 1.0);
        assert_eq!(state.alpha_mode.as_slice(), &[1.0, 1.0, 1.0]);
        let expected = digamma(3.0).unwrap() - digamma(1.0).unwrap();
        assert!(state.prior.nu.iter().all(|v| (v - expected).abs() < 1e-15));
        let p = state.estimate();
        assert!(p.as_slice().iter().all(|v| (v - 1.0 / 3.0).abs() < 1e-15));
        assert!(mode_condition_residual(&state.alpha_mode, &state.prior) < 1e-14);
    }

    #[test]
    fn init_state_errors_and_zero_eta() {
        assert!(init_state(1, &FilterConfig::default()).is_err());
        let cfg = FilterConfig { init_eta: 0.0, ..FilterConfig::default() };
        let s = init_state(4, &cfg).unwrap();
        assert!(s.prior.nu.iter().all(|v| *v == 0.0));
        let cfg = FilterConfig {
            init_alpha: Some(DirichletParams::ones(3)),
            ..FilterConfig::default()
        };
        assert!(matches!(init_state(2, &cfg), Err(Error::DimensionMismatch { .. })));
        let cfg = FilterConfig { gamma: 0.0, ..FilterConfig::default() };
        assert!(matches!(init_state(2, &cfg), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn eta_recursion() {
        let config = FilterConfig { gamma: 0.9, ..FilterConfig::default() };
        let mut state = init_state(2, &config).unwrap();
        state.prior = ConjugatePriorParams::new(2.0, nu_from_mode_in(&state.alpha_mode, 2.0, &SpecFnMode::Exact)).unwrap();
        let obs = Observation::new(0.0, "weak", ProbabilityVector::new(vec![0.6, 0.4]).unwrap(), 0.5)
            .unwrap();
        let (next, _) = filter_update(&state, &obs, &config).unwrap();
        assert!((next.prior.eta - 2.3).abs() < 1e-15);
        assert!(mode_condition_residual(&next.alpha_mode, &next.prior) <= 1e-10);
        assert_eq!(next.step_count, 1);
    }

    #[test]
    fn zero_beta_skips_the_solve() {
        let config = FilterConfig::default();
        let state = init_state(3, &config).unwrap();
        let s = ProbabilityVector::new(vec![0.8, 0.1, 0.1]).unwrap();
        let obs = Observation::new(0.0, "x", s, 0.0).unwrap();
        let (next, p) = filter_update(&state, &obs, &config).unwrap();
        assert_eq!(next.alpha_mode, state.alpha_mode);
        assert!((next.prior.eta - 0.95).abs() < 1e-15);
        assert_eq!(p, state.estimate());
    }

    #[test]
    fn update_rejects_bad_observations() {
        let config = FilterConfig::default();
        let state = init_state(3, &config).unwrap();
        let s = ProbabilityVector::new(vec![0.5, 0.5]).unwrap();
        let obs = Observation { t: 0.0, source: "x".into(), s, beta: 1.0 };
        assert!(matches!(filter_update(&state, &obs, &config), Err(Error::DimensionMismatch { .. })));
        let s = ProbabilityVector::new(vec![1.0, 0.0, 0.0]).unwrap();
        let obs = Observation { t: 0.0, source: "x".into(), s, beta: 1.0 };
        assert!(matches!(filter_update(&state, &obs, &config), Err(Error::Domain(_))));
        assert!(Observation::new(0.0, "x", ProbabilityVector::uniform(2).unwrap(), 1.5).is_err());
    }
}

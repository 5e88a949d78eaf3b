//! Dirichlet and conjugate-prior vocabulary.
//!
//! The conjugate prior over a Dirichlet concentration `alpha` is
//!
//! ```text
//! CP(alpha | eta, nu)  ∝  A(alpha)^eta * exp(-<alpha, nu>),
//! A(alpha) = Gamma(sum alpha) / prod Gamma(alpha_i)
//! ```
//!
//! where `eta` counts pseudo-observations and `nu` accumulates negative log
//! probabilities. Its normalizer has no closed form, so only unnormalized
//! densities and modes are exposed here.

use crate::error::{domain, Error, Result};
use crate::specfn::{self, invert_monotone, InvertConfig, SpecFnMode};

/// Default per-entry floor applied before taking logarithms.
pub const DEFAULT_CLAMP_EPS: f64 = 1e-6;

/// A point on the unit simplex with at least two classes.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityVector(Vec<f64>);

impl ProbabilityVector {
    /// Allowed deviation of the entry sum from one.
    pub const SUM_TOL: f64 = 1e-9;

    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.len() < 2 {
            return Err(domain(format!(
                "probability vector needs at least 2 classes, got {}",
                probs.len()
            )));
        }
        if let Some(p) = probs.iter().find(|p| !(**p >= 0.0 && **p <= 1.0)) {
            return Err(domain(format!("probability entry {p} outside [0, 1]")));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > Self::SUM_TOL {
            return Err(domain(format!("probabilities sum to {sum}, expected 1")));
        }
        Ok(Self(probs))
    }

    /// Divides non-negative weights by their sum.
    pub fn normalized(weights: Vec<f64>) -> Result<Self> {
        if let Some(w) = weights.iter().find(|w| !(**w >= 0.0 && w.is_finite())) {
            return Err(domain(format!("weight {w} is not a finite non-negative number")));
        }
        let sum: f64 = weights.iter().sum();
        if !(sum > 0.0) {
            return Err(domain("weights sum to zero"));
        }
        Self::new(weights.into_iter().map(|w| w / sum).collect())
    }

    pub fn uniform(k: usize) -> Result<Self> {
        Self::new(vec![1.0 / k as f64; k])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Index of the largest entry; ties go to the lowest index.
    pub fn argmax(&self) -> usize {
        argmax(&self.0)
    }

    /// Floors every entry at `eps` and rescales the remaining entries so the
    /// vector still sums to one. Entries pushed below `eps` by the rescaling
    /// are floored in turn, so the result satisfies `p_i >= eps` exactly.
    pub fn clamped(&self, eps: f64) -> Result<Self> {
        let k = self.0.len();
        if !(eps >= 0.0) || eps * k as f64 > 1.0 {
            return Err(domain(format!("clamp floor {eps} is infeasible for {k} classes")));
        }
        let mut out = self.0.clone();
        let mut fixed = vec![false; k];
        loop {
            let mut changed = false;
            for (p, f) in out.iter_mut().zip(fixed.iter_mut()) {
                if !*f && *p < eps {
                    *p = eps;
                    *f = true;
                    changed = true;
                }
            }
            let n_fixed = fixed.iter().filter(|f| **f).count();
            let free_sum: f64 =
                out.iter().zip(&fixed).filter(|(_, f)| !**f).map(|(p, _)| p).sum();
            if free_sum > 0.0 {
                let scale = (1.0 - n_fixed as f64 * eps) / free_sum;
                for (p, f) in out.iter_mut().zip(&fixed) {
                    if !*f {
                        *p *= scale;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        Ok(Self(out))
    }
}

pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Dirichlet concentration parameter; every entry strictly positive.
#[derive(Debug, Clone, PartialEq)]
pub struct DirichletParams(Vec<f64>);

impl DirichletParams {
    pub fn new(alpha: Vec<f64>) -> Result<Self> {
        if alpha.is_empty() {
            return Err(domain("concentration vector is empty"));
        }
        if let Some(a) = alpha.iter().find(|a| !(**a > 0.0 && a.is_finite())) {
            return Err(domain(format!("concentration entry {a} is not positive and finite")));
        }
        Ok(Self(alpha))
    }

    pub fn ones(k: usize) -> Self {
        Self(vec![1.0; k])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }
}

/// Parameters `(eta, nu)` of the conjugate prior.
#[derive(Debug, Clone, PartialEq)]
pub struct ConjugatePriorParams {
    pub eta: f64,
    pub nu: Vec<f64>,
}

impl ConjugatePriorParams {
    pub fn new(eta: f64, nu: Vec<f64>) -> Result<Self> {
        if !(eta >= 0.0 && eta.is_finite()) {
            return Err(domain(format!("eta must be finite and non-negative, got {eta}")));
        }
        if nu.iter().any(|v| !v.is_finite()) {
            return Err(domain("nu must be finite"));
        }
        Ok(Self { eta, nu })
    }

    pub fn len(&self) -> usize {
        self.nu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nu.is_empty()
    }

    /// `(gamma * eta, gamma * nu)`; leaves the mode unchanged.
    pub fn scaled(&self, gamma: f64) -> Self {
        Self { eta: gamma * self.eta, nu: self.nu.iter().map(|v| gamma * v).collect() }
    }
}

fn check_dims(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}

fn check_positive_probs(s: &ProbabilityVector) -> Result<()> {
    if s.as_slice().iter().any(|p| *p <= 0.0) {
        Err(domain("probability vector has a zero entry; clamp it before taking logarithms"))
    } else {
        Ok(())
    }
}

/// `ln A(alpha) = ln Gamma(sum alpha) - sum ln Gamma(alpha_i)`.
pub fn log_a(alpha: &DirichletParams) -> f64 {
    log_a_slice(alpha.as_slice())
}

pub(crate) fn log_a_slice(alpha: &[f64]) -> f64 {
    let sum: f64 = alpha.iter().sum();
    specfn::log_gamma_unchecked(sum)
        - alpha.iter().map(|a| specfn::log_gamma_unchecked(*a)).sum::<f64>()
}

/// Log density of `Dir(s | alpha)`.
pub fn dirichlet_log_pdf(s: &ProbabilityVector, alpha: &DirichletParams) -> Result<f64> {
    check_dims(alpha.len(), s.len())?;
    check_positive_probs(s)?;
    let inner: f64 =
        alpha.as_slice().iter().zip(s.as_slice()).map(|(a, p)| (a - 1.0) * p.ln()).sum();
    Ok(log_a(alpha) + inner)
}

/// Mode of `Dir(alpha)` when every entry exceeds one, otherwise its mean.
pub fn dirichlet_mode(alpha: &DirichletParams) -> ProbabilityVector {
    let a = alpha.as_slice();
    let sum = alpha.sum();
    let probs = if a.iter().all(|v| *v > 1.0) {
        let denom = sum - a.len() as f64;
        a.iter().map(|v| (v - 1.0) / denom).collect()
    } else {
        a.iter().map(|v| v / sum).collect()
    };
    ProbabilityVector(probs)
}

/// `eta * ln A(alpha) - <alpha, nu>`; the conjugate prior up to its normalizer.
pub fn cp_log_density_unnormalized(
    alpha: &DirichletParams,
    prior: &ConjugatePriorParams,
) -> Result<f64> {
    check_dims(alpha.len(), prior.len())?;
    let dot: f64 = alpha.as_slice().iter().zip(&prior.nu).map(|(a, v)| a * v).sum();
    let la = if prior.eta == 0.0 { 0.0 } else { prior.eta * log_a(alpha) };
    Ok(la - dot)
}

/// `nu_i = eta * (Psi(sum alpha) - Psi(alpha_i))`, the unique `nu` for which
/// `alpha` is the prior mode at pseudo-count `eta`.
pub fn nu_from_mode(alpha_star: &DirichletParams, eta: f64) -> Vec<f64> {
    nu_from_mode_in(alpha_star, eta, &SpecFnMode::Exact)
}

pub fn nu_from_mode_in(alpha_star: &DirichletParams, eta: f64, mode: &SpecFnMode) -> Vec<f64> {
    let psi_sum = mode.digamma_unchecked(alpha_star.sum());
    alpha_star
        .as_slice()
        .iter()
        .map(|a| eta * (psi_sum - mode.digamma_unchecked(*a)))
        .collect()
}

/// Max-norm of `Psi(alpha_j) - Psi(sum alpha) + nu_j / eta` over `j`.
pub fn mode_condition_residual(alpha: &DirichletParams, prior: &ConjugatePriorParams) -> f64 {
    mode_condition_residual_in(alpha, prior, &SpecFnMode::Exact)
}

pub fn mode_condition_residual_in(
    alpha: &DirichletParams,
    prior: &ConjugatePriorParams,
    mode: &SpecFnMode,
) -> f64 {
    if prior.eta == 0.0 {
        return prior.nu.iter().fold(0.0, |m, v| m.max(v.abs()));
    }
    let psi_sum = mode.digamma_unchecked(alpha.sum());
    alpha
        .as_slice()
        .iter()
        .zip(&prior.nu)
        .map(|(a, v)| (mode.digamma_unchecked(*a) - psi_sum + v / prior.eta).abs())
        .fold(0.0, f64::max)
}

/// Settings for [`cp_mode`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeSolverConfig {
    /// Bound on the mode-condition residual of the returned point.
    pub tol: f64,
    /// Bisection steps on the total concentration.
    pub max_iter: usize,
    pub invert: InvertConfig,
}

impl Default for ModeSolverConfig {
    fn default() -> Self {
        Self { tol: 1e-8, max_iter: 200, invert: InvertConfig::with_tol(1e-13) }
    }
}

/// Mode of `CP(eta, nu)`.
///
/// The fixed-point map `alpha_j <- Psi^-1(Psi(sum alpha) - nu_j / eta)` depends
/// on `alpha` only through `u = sum alpha`, so the mode is found by solving
/// the scalar fixed point `u = sum_j Psi^-1(Psi(u) - nu_j / eta)` with
/// bisection on `ln u`, followed by one sweep of the map. A finite mode
/// exists iff every `nu_j > 0` and `sum_j exp(-nu_j / eta) < 1`.
pub fn cp_mode(prior: &ConjugatePriorParams, config: &ModeSolverConfig) -> Result<DirichletParams> {
    if prior.eta == 0.0 {
        return Err(domain("conjugate prior mode is undefined for eta = 0"));
    }
    if prior.len() < 2 {
        return Err(domain("conjugate prior needs at least 2 classes"));
    }
    let offsets: Vec<f64> = prior.nu.iter().map(|v| v / prior.eta).collect();
    let mass: f64 = offsets.iter().map(|c| (-c).exp()).sum();
    if offsets.iter().any(|c| *c <= 0.0) || mass >= 1.0 {
        return Err(domain(format!(
            "conjugate prior has no finite mode (sum exp(-nu/eta) = {mass})"
        )));
    }

    let sweep = |u: f64| -> Result<Vec<f64>> {
        let psi_u = specfn::digamma_unchecked(u);
        offsets
            .iter()
            .map(|c| invert_monotone(specfn::digamma_unchecked, psi_u - c, &config.invert))
            .collect()
    };
    let excess = |u: f64| -> Result<f64> { Ok(sweep(u)?.iter().sum::<f64>() - u) };

    // excess(u) > 0 for small u and < 0 for large u; bracket the sign change.
    const MAX_DOUBLINGS: usize = 2000;
    let (mut lo, mut hi);
    if excess(1.0)? > 0.0 {
        lo = 1.0;
        hi = 2.0;
        let mut n = 0;
        while excess(hi)? > 0.0 {
            lo = hi;
            hi *= 2.0;
            n += 1;
            if n > MAX_DOUBLINGS || !hi.is_finite() {
                return Err(Error::ModeNotConverged { iterations: n, residual: f64::INFINITY });
            }
        }
    } else {
        hi = 1.0;
        lo = 0.5;
        let mut n = 0;
        while excess(lo)? <= 0.0 {
            hi = lo;
            lo *= 0.5;
            n += 1;
            if n > MAX_DOUBLINGS || lo == 0.0 {
                return Err(Error::ModeNotConverged { iterations: n, residual: f64::INFINITY });
            }
        }
    }

    let mut iterations = 0;
    while iterations < config.max_iter {
        let mid = (lo * hi).sqrt();
        if mid <= lo || mid >= hi {
            break;
        }
        iterations += 1;
        if excess(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }

    let alpha = DirichletParams::new(sweep((lo * hi).sqrt())?)?;
    let residual = mode_condition_residual(&alpha, prior);
    if residual > config.tol {
        return Err(Error::ModeNotConverged { iterations, residual });
    }
    Ok(alpha)
}

fn check_weights(beta: f64, gamma: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&beta) {
        return Err(domain(format!("beta must lie in [0, 1], got {beta}")));
    }
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(domain(format!("gamma must lie in (0, 1], got {gamma}")));
    }
    Ok(())
}

/// Log posterior of `alpha` after observing `s` with weight `beta`, up to a
/// constant; `(eta, nu)` are the previous step's prior parameters and
/// `gamma` the decay applied to them.
///
/// ```text
/// L(alpha) = ln Gamma(K(1-beta) + beta sum alpha) - sum ln Gamma(beta alpha_i + 1 - beta)
///          + beta <alpha, ln s> + gamma eta [ln Gamma(sum alpha) - sum ln Gamma(alpha_i)]
///          - gamma <alpha, nu>
/// ```
pub fn posterior_objective(
    alpha: &DirichletParams,
    s: &ProbabilityVector,
    prior: &ConjugatePriorParams,
    beta: f64,
    gamma: f64,
) -> Result<f64> {
    check_dims(alpha.len(), s.len())?;
    check_dims(alpha.len(), prior.len())?;
    check_positive_probs(s)?;
    check_weights(beta, gamma)?;
    Ok(objective_unchecked(alpha.as_slice(), s.as_slice(), prior, beta, gamma))
}

pub(crate) fn objective_unchecked(
    alpha: &[f64],
    s: &[f64],
    prior: &ConjugatePriorParams,
    beta: f64,
    gamma: f64,
) -> f64 {
    let k = alpha.len() as f64;
    let sum: f64 = alpha.iter().sum();
    let blend_norm = specfn::log_gamma_unchecked(k * (1.0 - beta) + beta * sum)
        - alpha
            .iter()
            .map(|a| specfn::log_gamma_unchecked(beta * a + (1.0 - beta)))
            .sum::<f64>();
    let obs: f64 = alpha.iter().zip(s).map(|(a, p)| a * p.ln()).sum();
    let dot: f64 = alpha.iter().zip(&prior.nu).map(|(a, v)| a * v).sum();
    let prior_term = if prior.eta == 0.0 { 0.0 } else { gamma * prior.eta * log_a_slice(alpha) };
    blend_norm + beta * obs + prior_term - gamma * dot
}

/// Gradient of [`posterior_objective`]; its zeros are the posterior modes.
pub fn posterior_gradient(
    alpha: &DirichletParams,
    s: &ProbabilityVector,
    prior: &ConjugatePriorParams,
    beta: f64,
    gamma: f64,
) -> Result<Vec<f64>> {
    check_dims(alpha.len(), s.len())?;
    check_dims(alpha.len(), prior.len())?;
    check_positive_probs(s)?;
    check_weights(beta, gamma)?;
    let a = alpha.as_slice();
    let k = a.len() as f64;
    let sum = alpha.sum();
    let psi = specfn::digamma_unchecked;
    let psi_blend_sum = psi(k * (1.0 - beta) + beta * sum);
    let psi_sum = psi(sum);
    let geta = gamma * prior.eta;
    Ok(a.iter()
        .zip(s.as_slice())
        .zip(&prior.nu)
        .map(|((aj, sj), vj)| {
            beta * (psi_blend_sum - psi(beta * aj + 1.0 - beta))
                + beta * sj.ln()
                + geta * (psi_sum - psi(*aj))
                - gamma * vj
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dp(v: &[f64]) -> DirichletParams {
        DirichletParams::new(v.to_vec()).unwrap()
    }

    fn pv(v: &[f64]) -> ProbabilityVector {
        ProbabilityVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn probability_vector_validation() {
        assert!(ProbabilityVector::new(vec![1.0]).is_err());
        assert!(ProbabilityVector::new(vec![0.5, 0.6]).is_err());
        assert!(ProbabilityVector::new(vec![-0.1, 1.1]).is_err());
        assert!(ProbabilityVector::new(vec![0.5, 0.5 + 1e-10]).is_ok());
        assert!(ProbabilityVector::normalized(vec![0.0, 0.0]).is_err());
        let p = ProbabilityVector::normalized(vec![1.0, 3.0]).unwrap();
        assert_eq!(p.as_slice(), &[0.25, 0.75]);
    }

    #[test]
    fn argmax_prefers_lowest_index_on_ties() {
        assert_eq!(pv(&[0.5, 0.5]).argmax(), 0);
        assert_eq!(pv(&[0.2, 0.4, 0.4]).argmax(), 1);
        assert_eq!(pv(&[0.2, 0.8]).argmax(), 1);
    }

    #[test]
    fn clamping_floors_every_entry() {
        let p = pv(&[1.0, 0.0, 0.0]).clamped(1e-6).unwrap();
        let s = p.as_slice();
        assert!(s.iter().all(|v| *v >= 1e-6));
        assert!((s.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert_eq!(s[1], 1e-6);
        // an entry just above the floor gets pushed below it by rescaling
        let p = pv(&[0.5 - 1e-6, 0.5, 1e-6]).clamped(0.1).unwrap();
        assert!(p.as_slice().iter().all(|v| *v >= 0.1 - 1e-15));
        assert!(pv(&[0.5, 0.5]).clamped(0.6).is_err());
    }

    #[test]
    fn log_a_examples() {
        assert!(log_a(&dp(&[1.0, 1.0])).abs() < 1e-15);
        assert!((log_a(&dp(&[2.0, 2.0])) - 6f64.ln()).abs() < 1e-13);
        assert!((log_a(&dp(&[1.0, 1.0, 1.0])) - 2f64.ln()).abs() < 1e-13);
        assert!(DirichletParams::new(vec![1.0, 0.0]).is_err());
    }

    #[test]
    fn log_pdf_examples() {
        let v = dirichlet_log_pdf(&pv(&[0.3, 0.7]), &dp(&[1.0, 1.0])).unwrap();
        assert!(v.abs() < 1e-15);
        let v = dirichlet_log_pdf(&pv(&[0.5, 0.5]), &dp(&[2.0, 2.0])).unwrap();
        assert!((v - 1.5f64.ln()).abs() < 1e-13);
        assert!(matches!(
            dirichlet_log_pdf(&pv(&[0.5, 0.5]), &dp(&[1.0, 1.0, 1.0])),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            dirichlet_log_pdf(&pv(&[1.0, 0.0]), &dp(&[2.0, 2.0])),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn mode_examples() {
        let m = dirichlet_mode(&dp(&[2.0, 2.0, 2.0]));
        assert!(m.as_slice().iter().all(|v| (v - 1.0 / 3.0).abs() < 1e-15));
        let m = dirichlet_mode(&dp(&[3.0, 2.0]));
        assert!((m.as_slice()[0] - 2.0 / 3.0).abs() < 1e-15);
        let m = dirichlet_mode(&dp(&[0.5, 2.0]));
        assert!((m.as_slice()[0] - 0.2).abs() < 1e-15);
        assert!((m.as_slice()[1] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn cp_density_examples() {
        let zero = ConjugatePriorParams::new(0.0, vec![0.0, 0.0]).unwrap();
        assert_eq!(cp_log_density_unnormalized(&dp(&[3.0, 0.2]), &zero).unwrap(), 0.0);
        let p = ConjugatePriorParams::new(1.0, vec![0.0, 0.0]).unwrap();
        assert!(cp_log_density_unnormalized(&dp(&[1.0, 1.0]), &p).unwrap().abs() < 1e-15);
        let p = ConjugatePriorParams::new(2.0, vec![0.1, 0.2]).unwrap();
        let v = cp_log_density_unnormalized(&dp(&[2.0, 2.0]), &p).unwrap();
        assert!((v - 2.983_518_938_456_11).abs() < 1e-12, "{v}");
        assert!(cp_log_density_unnormalized(&dp(&[2.0, 2.0, 2.0]), &p).is_err());
    }

    #[test]
    fn nu_from_mode_examples() {
        assert!(nu_from_mode(&dp(&[2.0, 5.0]), 0.0).iter().all(|v| *v == 0.0));
        let nu = nu_from_mode(&dp(&[1.5, 1.5, 1.5]), 2.0);
        let expected = 2.0 * (specfn::digamma(4.5).unwrap() - specfn::digamma(1.5).unwrap());
        assert!(nu.iter().all(|v| (v - expected).abs() < 1e-14));
    }

    #[test]
    fn cp_mode_of_symmetric_prior_is_ones() {
        for k in 2..6 {
            let eta = 0.7 * k as f64;
            let c = specfn::digamma(k as f64).unwrap() - specfn::digamma(1.0).unwrap();
            let prior = ConjugatePriorParams::new(eta, vec![eta * c; k]).unwrap();
            let a = cp_mode(&prior, &ModeSolverConfig::default()).unwrap();
            assert!(a.as_slice().iter().all(|v| (v - 1.0).abs() < 1e-8), "{a:?}");
        }
    }

    #[test]
    fn cp_mode_round_trip() {
        let alpha = dp(&[2.0, 3.0]);
        let prior = ConjugatePriorParams::new(1.5, nu_from_mode(&alpha, 1.5)).unwrap();
        let a = cp_mode(&prior, &ModeSolverConfig::default()).unwrap();
        assert!((a.as_slice()[0] - 2.0).abs() < 1e-6);
        assert!((a.as_slice()[1] - 3.0).abs() < 1e-6);
    }

    #[test]
    fn cp_mode_errors() {
        let p = ConjugatePriorParams::new(0.0, vec![1.0, 1.0]).unwrap();
        assert!(matches!(cp_mode(&p, &ModeSolverConfig::default()), Err(Error::Domain(_))));
        // sum exp(-nu/eta) >= 1: the density grows without bound along a ray
        let p = ConjugatePriorParams::new(1.0, vec![0.3, 0.7]).unwrap();
        assert!(matches!(cp_mode(&p, &ModeSolverConfig::default()), Err(Error::Domain(_))));
    }

    #[test]
    fn objective_validates_inputs() {
        let prior = ConjugatePriorParams::new(1.0, vec![1.0, 1.0]).unwrap();
        let a = dp(&[1.0, 2.0]);
        assert!(posterior_objective(&a, &pv(&[0.5, 0.5]), &prior, 1.5, 0.9).is_err());
        assert!(posterior_objective(&a, &pv(&[0.5, 0.5]), &prior, 0.5, 0.0).is_err());
        assert!(posterior_objective(&a, &pv(&[1.0, 0.0]), &prior, 0.5, 0.9).is_err());
        assert!(posterior_objective(&a, &pv(&[0.5, 0.5]), &prior, 0.5, 0.9).is_ok());
    }
}

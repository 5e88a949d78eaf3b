//! Shared oracles and generators for the integration tests.
#![allow(dead_code, clippy::approx_constant, clippy::excessive_precision)]

use dirfuse::dirichlet::{nu_from_mode, ConjugatePriorParams, DirichletParams, ProbabilityVector};
use dirfuse::harness::seeded_rng;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// `(x, ln Gamma(x), Psi(x))` computed with 50-digit arithmetic (mpmath).
pub const REFERENCE: &[(f64, f64, f64)] = &[
    (0.001, 6.9071788853838536825, -1000.5755719318103005),
    (0.01, 4.5994798780420217225, -100.5608854578686745),
    (0.1, 2.2527126517342059599, -10.423754940411076795),
    (0.25, 1.2880225246980774574, -4.2274535333762654081),
    (0.5, 0.57236494292470008707, -1.9635100260214234794),
    (0.75, 0.20328095143129537148, -1.0858608797864721696),
    (0.9, 0.066376239734742971189, -0.75492694994705139189),
    (0.999, 0.00057803853289137972404, -0.57886180210864542646),
    (1.0, 0.0, -0.57721566490153286061),
    (1.001, -0.00057639359828336954163, -0.57557193181030047147),
    (1.2, -0.08537409000331584972, -0.28903989659218829555),
    (1.4616, -0.12148629003589732842, -0.000031106251230351619752),
    (1.4617, -0.1214862883081664837, 0.000065659392293677183032),
    (1.5, -0.12078223763524522235, 0.036489973978576520559),
    (1.75, -0.084401121020485555958, 0.24747245354686116371),
    (1.999, -0.00042246180069215377611, 0.42213919889235557455),
    (2.0, 0.0, 0.42278433509846713939),
    (2.001, 0.00042310673480016362518, 0.42342906719069852953),
    (2.5, 0.28468287047291915963, 0.70315664064524318723),
    (3.0, 0.69314718055994530942, 0.92278433509846713939),
    (5.5, 3.9578139676187162939, 1.6110931485817511237),
    (6.0, 4.7874917427820459942, 1.7061176684318004727),
    (7.25, 7.0521854507385394449, 1.9104535268837360284),
    (10.0, 12.801827480081469611, 2.2517525890667211076),
    (33.3, 82.603723581654952928, 3.4904672385202428639),
    (100.0, 359.13420536957539878, 4.6001618527380874002),
    (1234.5, 7550.5509010778948957, 7.1180162318279978433),
    (1e5, 1051287.7089736568949, 11.512920464961895087),
    (1e6, 12815504.56914761166, 13.815510057964190771),
    (1e7, 151180949.36947391394, 16.118095600958318955),
];

/// `B_{2n} / (2n)` for n = 1..10.
const BERNOULLI_OVER_2N: [f64; 10] = [
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32760.0,
    1.0 / 12.0,
    -3617.0 / 8160.0,
    43867.0 / 14364.0,
    -174611.0 / 6600.0,
];

/// Independent digamma: recurrence up to `x >= 20`, then the asymptotic
/// series through `x^-20`.
pub fn digamma_oracle(x: f64) -> f64 {
    assert!(x > 0.0);
    let mut z = x;
    let mut n = 0usize;
    while z < 20.0 {
        z += 1.0;
        n += 1;
    }
    let inv2 = 1.0 / (z * z);
    let mut pow = inv2;
    let mut series = 0.0;
    for c in BERNOULLI_OVER_2N {
        series += c * pow;
        pow *= inv2;
    }
    let mut shift = 0.0;
    for k in (0..n).rev() {
        shift += 1.0 / (x + k as f64);
    }
    (z.ln() - 0.5 / z - series) - shift
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    seeded_rng(seed, 99)
}

pub fn random_simplex(rng: &mut ChaCha8Rng, k: usize, floor: f64) -> ProbabilityVector {
    let w: Vec<f64> = (0..k).map(|_| -(rng.random::<f64>().max(1e-300)).ln()).collect();
    ProbabilityVector::normalized(w).unwrap().clamped(floor).unwrap()
}

/// A random MM problem in the spirit of the filter: prior built from a
/// random mode, warm start at that mode.
#[derive(Debug, Clone)]
pub struct Instance {
    pub s: ProbabilityVector,
    pub prior: ConjugatePriorParams,
    pub start: DirichletParams,
    pub beta: f64,
    pub gamma: f64,
}

pub fn random_instance(rng: &mut ChaCha8Rng, k: usize) -> Instance {
    let mode: Vec<f64> = (0..k).map(|_| rng.random_range(-1.0_f64..2.0).exp()).collect();
    let mode = DirichletParams::new(mode).unwrap();
    let eta = rng.random_range(0.1..=20.0);
    let nu = nu_from_mode(&mode, eta);
    let beta = 1.0 - rng.random::<f64>(); // (0, 1]
    let gamma = 1.0 - rng.random::<f64>();
    Instance {
        s: random_simplex(rng, k, 1e-6),
        prior: ConjugatePriorParams::new(eta, nu).unwrap(),
        start: mode,
        beta,
        gamma,
    }
}

/// Maximizes `f` over `[lo, hi]^2` by a dense log-spaced grid followed by
/// repeated zooming around the incumbent.
pub fn grid_argmax_2d(f: impl Fn(f64, f64) -> f64, lo: f64, hi: f64) -> (f64, f64) {
    let n = 400;
    let (llo, lhi) = (lo.ln(), hi.ln());
    let at = |i: usize| (llo + (lhi - llo) * i as f64 / n as f64).exp();
    let mut best = (f64::NEG_INFINITY, lo, lo);
    for i in 0..=n {
        for j in 0..=n {
            let (a, b) = (at(i), at(j));
            let v = f(a, b);
            if v > best.0 {
                best = (v, a, b);
            }
        }
    }
    // refinement: shrinking multiplicative box around the incumbent
    let mut radius = ((lhi - llo) / n as f64) * 2.0;
    let m = 20;
    for _ in 0..60 {
        let (_, ca, cb) = best;
        for i in 0..=m {
            for j in 0..=m {
                let a = ca * (radius * (2.0 * i as f64 / m as f64 - 1.0)).exp();
                let b = cb * (radius * (2.0 * j as f64 / m as f64 - 1.0)).exp();
                let v = f(a, b);
                if v > best.0 {
                    best = (v, a, b);
                }
            }
        }
        radius *= 0.7;
    }
    (best.1, best.2)
}

pub fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

//! Special functions used throughout the filter: log-gamma, digamma (exact or
//! table-interpolated) and a bracket-and-bisect inverter for strictly
//! increasing functions on the positive half-line.
//!
//! Accuracy targets in exact mode:
//!
//! * `log_gamma`: relative error below 1e-12 on `[1e-3, 1e7]`, including the
//!   neighbourhoods of the zeros at 1 and 2 (handled by Taylor series).
//! * `digamma`: relative error below 1e-10 on `[1e-3, 1e6]`, including the
//!   neighbourhood of the positive root near 1.4616 (handled by a Taylor
//!   series about the root).

use std::sync::Arc;

use crate::error::{domain, Error, Result};

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_860_606_512_1;

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_741_780_329_736_4;

/// `zeta(k) - 1` for `k = 2..=30`.
const ZETA_MINUS_ONE: [f64; 29] = [
    0.644_934_066_848_226_436_47,
    0.202_056_903_159_594_285_4,
    0.082_323_233_711_138_191_516,
    0.036_927_755_143_369_926_331,
    0.017_343_061_984_449_139_715,
    0.008_349_277_381_922_826_839_8,
    0.004_077_356_197_944_339_378_7,
    0.002_008_392_826_082_214_417_9,
    0.000_994_575_127_818_085_337_15,
    0.000_494_188_604_119_464_558_7,
    0.000_246_086_553_308_048_298_64,
    0.000_122_713_347_578_489_146_75,
    6.124_813_505_870_482_925_9e-5,
    3.058_823_630_702_049_355_2e-5,
    1.528_225_940_865_187_173_3e-5,
    7.637_197_637_899_762_273_6e-6,
    3.817_293_264_999_839_856_5e-6,
    1.908_212_716_553_938_925_7e-6,
    9.539_620_338_727_961_131_5e-7,
    4.769_329_867_878_064_631_2e-7,
    2.384_505_027_277_329_9e-7,
    1.192_199_259_653_110_730_7e-7,
    5.960_818_905_125_947_961_2e-8,
    2.980_350_351_465_228_018_6e-8,
    1.490_155_482_836_504_123_5e-8,
    7.450_711_789_835_429_492e-9,
    3.725_334_024_788_457_054_8e-9,
    1.862_659_723_513_049_006_4e-9,
    9.313_274_324_196_681_828_7e-10,
];

/// Positive root of the digamma function.
pub const DIGAMMA_ROOT: f64 = 1.461_632_144_968_362_341_262_66;

/// Taylor coefficients `psi^(n)(x0) / n!` for `n = 1..=15` about [`DIGAMMA_ROOT`].
const DIGAMMA_ROOT_TAYLOR: [f64; 15] = [
    0.967_672_245_447_621_170_43,
    -0.442_763_168_983_592_106_09,
    0.258_499_760_955_651_010_62,
    -0.163_942_705_442_406_527_5,
    0.107_824_050_691_262_365_76,
    -0.072_199_561_256_454_710_926,
    0.048_804_288_164_143_107_225,
    -0.033_161_126_474_847_359_292,
    0.022_597_648_232_218_104_66,
    -0.015_424_765_904_948_959_139,
    0.010_538_791_616_612_175_388,
    -0.007_204_534_386_356_868_241,
    0.004_926_781_395_729_853_446_4,
    -0.003_369_801_655_439_328_082_8,
    0.002_305_126_326_734_927_836_9,
];

/// Stirling-series coefficients `B_2k / (2k (2k-1))`, `k = 1..=8`.
const STIRLING: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360_360.0,
    1.0 / 156.0,
    -3617.0 / 122_400.0,
];

/// Asymptotic digamma coefficients `B_2k / (2k)`, `k = 1..=6` (through `x^-12`).
const DIGAMMA_ASYMPTOTIC: [f64; 6] = [
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32760.0,
];

const DIGAMMA_SHIFT: f64 = 6.0;
const LGAMMA_SHIFT: f64 = 10.0;
const SERIES_RADIUS: f64 = 0.25;
const ROOT_RADIUS: f64 = 0.05;

fn check_positive(x: f64, what: &str) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(domain(format!("{what} requires a positive finite argument, got {x}")))
    }
}

/// Natural logarithm of the gamma function for `x > 0`.
pub fn log_gamma(x: f64) -> Result<f64> {
    check_positive(x, "log_gamma")?;
    Ok(log_gamma_unchecked(x))
}

pub(crate) fn log_gamma_unchecked(x: f64) -> f64 {
    let z1 = x - 1.0;
    if z1.abs() <= SERIES_RADIUS {
        // ln G(1+z) = -gamma z + sum_{k>=2} (-1)^k zeta(k) z^k / k
        return -EULER_GAMMA * z1 + zeta_series(z1, 1.0);
    }
    let z2 = x - 2.0;
    if z2.abs() <= SERIES_RADIUS {
        // ln G(2+z) = (1-gamma) z + sum_{k>=2} (-1)^k (zeta(k)-1) z^k / k
        return (1.0 - EULER_GAMMA) * z2 + zeta_series(z2, 0.0);
    }
    let mut z = x;
    let mut prod = 1.0;
    while z < LGAMMA_SHIFT {
        prod *= z;
        z += 1.0;
    }
    stirling(z) - prod.ln()
}

fn zeta_series(z: f64, offset: f64) -> f64 {
    let mut sum = 0.0;
    let mut pow = -z;
    for (i, zm1) in ZETA_MINUS_ONE.iter().enumerate() {
        let k = (i + 2) as f64;
        pow *= -z;
        // pow = (-1)^k z^k with the sign folded in
        sum += (zm1 + offset) * pow / k;
    }
    sum
}

fn stirling(z: f64) -> f64 {
    let inv = 1.0 / z;
    let inv2 = inv * inv;
    let mut corr = 0.0;
    let mut pow = inv;
    for c in STIRLING {
        corr += c * pow;
        pow *= inv2;
    }
    (z - 0.5) * z.ln() - z + HALF_LN_2PI + corr
}

/// Digamma `Psi(x) = d/dx ln Gamma(x)` for `x > 0`, evaluated exactly.
pub fn digamma(x: f64) -> Result<f64> {
    check_positive(x, "digamma")?;
    Ok(digamma_unchecked(x))
}

pub(crate) fn digamma_unchecked(x: f64) -> f64 {
    let d = x - DIGAMMA_ROOT;
    if d.abs() < ROOT_RADIUS {
        let mut acc = 0.0;
        for c in DIGAMMA_ROOT_TAYLOR.iter().rev() {
            acc = (acc + c) * d;
        }
        return acc;
    }
    let mut z = x;
    let mut shift = 0.0;
    while z < DIGAMMA_SHIFT {
        shift -= 1.0 / z;
        z += 1.0;
    }
    let inv2 = 1.0 / (z * z);
    let mut series = 0.0;
    let mut pow = inv2;
    for c in DIGAMMA_ASYMPTOTIC {
        series += c * pow;
        pow *= inv2;
    }
    shift + z.ln() - 0.5 / z - series
}

/// Uniform-in-log lookup table for digamma with linear interpolation in `ln x`.
///
/// The interpolation error is bounded by `h^2/8 * max |f''(u)|` where
/// `f(u) = Psi(e^u)` and `h` is the log-spacing. Using the series
/// `Psi'(x) = sum 1/(x+k)^2` one gets `|f''(u)| <= 1/x + 1.25`, so
/// [`DigammaTable::error_bound`] reports `h^2/8 * (1/table_min + 1.25)` plus
/// a rounding allowance.
#[derive(Debug, Clone, PartialEq)]
pub struct DigammaTable {
    min: f64,
    max: f64,
    ln_min: f64,
    step: f64,
    values: Vec<f64>,
    bound: f64,
}

impl DigammaTable {
    pub const DEFAULT_MIN: f64 = 1e-3;
    pub const DEFAULT_MAX: f64 = 1e4;
    pub const DEFAULT_POINTS: usize = 4096;

    pub fn new(min: f64, max: f64, points: usize) -> Result<Self> {
        if !(min > 0.0 && min.is_finite() && max.is_finite() && min < max) {
            return Err(Error::InvalidConfig(format!(
                "lookup table range must satisfy 0 < min < max, got [{min}, {max}]"
            )));
        }
        if points < 2 {
            return Err(Error::InvalidConfig(format!(
                "lookup table needs at least 2 points, got {points}"
            )));
        }
        let ln_min = min.ln();
        let step = (max.ln() - ln_min) / (points - 1) as f64;
        let values = (0..points)
            .map(|i| {
                let x = if i + 1 == points { max } else { (ln_min + step * i as f64).exp() };
                digamma_unchecked(x)
            })
            .collect();
        let bound = step * step / 8.0 * (1.0 / min + 1.25) + 1e-10 * (1.0 + 1.0 / min);
        Ok(Self { min, max, ln_min, step, values, bound })
    }

    pub fn range(&self) -> (f64, f64) {
        (self.min, self.max)
    }

    pub fn points(&self) -> usize {
        self.values.len()
    }

    /// Documented absolute error bound of the interpolant over the table range.
    pub fn error_bound(&self) -> f64 {
        self.bound
    }

    /// Interpolated digamma; falls back to exact evaluation outside the range.
    pub fn eval(&self, x: f64) -> f64 {
        if !(x >= self.min && x <= self.max) {
            return digamma_unchecked(x);
        }
        let pos = (x.ln() - self.ln_min) / self.step;
        let last = self.values.len() - 2;
        let idx = (pos.floor().max(0.0) as usize).min(last);
        let frac = (pos - idx as f64).clamp(0.0, 1.0);
        let (a, b) = (self.values[idx], self.values[idx + 1]);
        a + (b - a) * frac
    }
}

impl Default for DigammaTable {
    fn default() -> Self {
        Self::new(Self::DEFAULT_MIN, Self::DEFAULT_MAX, Self::DEFAULT_POINTS)
            .expect("default table parameters are valid")
    }
}

/// How digamma is evaluated inside the filter.
#[derive(Debug, Clone, Default, PartialEq)]
pub enum SpecFnMode {
    #[default]
    Exact,
    LookupTable(Arc<DigammaTable>),
}

impl SpecFnMode {
    pub fn lookup_table(min: f64, max: f64, points: usize) -> Result<Self> {
        Ok(SpecFnMode::LookupTable(Arc::new(DigammaTable::new(min, max, points)?)))
    }

    pub fn default_table() -> Self {
        SpecFnMode::LookupTable(Arc::new(DigammaTable::default()))
    }

    pub fn digamma(&self, x: f64) -> Result<f64> {
        check_positive(x, "digamma")?;
        Ok(self.digamma_unchecked(x))
    }

    pub(crate) fn digamma_unchecked(&self, x: f64) -> f64 {
        match self {
            SpecFnMode::Exact => digamma_unchecked(x),
            SpecFnMode::LookupTable(table) => table.eval(x),
        }
    }
}

/// Settings for [`invert_monotone`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvertConfig {
    /// Absolute tolerance on `|f(x) - y|`.
    pub tol: f64,
    /// Bisection iteration cap.
    pub max_iter: usize,
    /// Maximum number of bracket doublings (halvings) away from `[1e-8, 1]`.
    pub max_exponent: u32,
}

impl Default for InvertConfig {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 200, max_exponent: 1000 }
    }
}

impl InvertConfig {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }
}

const INITIAL_LO: f64 = 1e-8;
const INITIAL_HI: f64 = 1.0;

/// Solves `f(x) = y` for a function strictly increasing on `(0, inf)`.
///
/// Starts from the bracket `[1e-8, 1]`, halves the lower end or doubles the
/// upper end until the target is bracketed, then bisects until
/// `|f(x) - y| <= tol`. If the bracket collapses to adjacent floats before the
/// tolerance is met (or `max_iter` is exhausted) the best endpoint found is
/// returned. Running out of bracket expansions is a [`Error::NoConvergence`].
pub fn invert_monotone<F>(f: F, y: f64, config: &InvertConfig) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if !y.is_finite() {
        return Err(domain(format!("invert_monotone target must be finite, got {y}")));
    }
    let tol = config.tol;
    let (mut lo, mut hi) = (INITIAL_LO, INITIAL_HI);
    let (mut flo, mut fhi) = (f(lo), f(hi));

    let mut expansions = 0;
    while flo > y {
        if expansions >= config.max_exponent || lo < f64::MIN_POSITIVE {
            return Err(Error::NoConvergence(format!(
                "target {y} lies below f({lo:e}) = {flo}"
            )));
        }
        hi = lo;
        fhi = flo;
        lo *= 0.5;
        flo = f(lo);
        expansions += 1;
    }
    expansions = 0;
    while fhi < y {
        if expansions >= config.max_exponent || hi > f64::MAX / 4.0 {
            return Err(Error::NoConvergence(format!(
                "target {y} lies above f({hi:e}) = {fhi}"
            )));
        }
        lo = hi;
        flo = fhi;
        hi *= 2.0;
        fhi = f(hi);
        expansions += 1;
    }

    let mut best = if (flo - y).abs() <= (fhi - y).abs() { (lo, flo) } else { (hi, fhi) };
    if (best.1 - y).abs() <= tol {
        return Ok(best.0);
    }
    for _ in 0..config.max_iter {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if (fm - y).abs() < (best.1 - y).abs() {
            best = (mid, fm);
        }
        if (fm - y).abs() <= tol {
            return Ok(mid);
        }
        if fm < y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(best.0)
}

//! Univariate sparse Fourier transforms `A_{s,M}`.
//!
//! All variants see the function only through a [`UnivariateOracle`] evaluated
//! at exact rational points of `[0, 1)`, and return at most `2s` coefficients
//! indexed by frequencies in `B_M`.

mod sublinear;

pub use sublinear::SublinearPlan;

use crate::arith::fold_to_band;
use crate::error::{invalid, Result};
use crate::fft::Transformer;
use crate::scalar::Real;
use num_complex::Complex;
use std::collections::BTreeMap;
use std::str::FromStr;

/// Point `num / den` of the unit interval.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Rational {
    pub num: u64,
    pub den: u64,
}

impl Rational {
    pub fn new(num: u64, den: u64) -> Self {
        debug_assert!(den > 0 && num < den);
        Rational { num, den }
    }

    pub fn to_real<T: Real>(self) -> T {
        T::ratio(self.num, self.den)
    }
}

/// Evaluation oracle for a univariate one-periodic function.
pub trait UnivariateOracle<T: Real> {
    fn sample(&mut self, t: Rational) -> Result<Complex<T>>;
}

/// Adapts a closure into an oracle.
pub struct FnOracle<F>(pub F);

impl<T: Real, F: FnMut(Rational) -> Complex<T>> UnivariateOracle<T> for FnOracle<F> {
    fn sample(&mut self, t: Rational) -> Result<Complex<T>> {
        Ok((self.0)(t))
    }
}

/// Exact trigonometric polynomial in one variable; phases are reduced in
/// integer arithmetic before conversion, so samples are accurate for any
/// frequency size.
#[derive(Clone, Debug)]
pub struct UnivariatePolynomial<T> {
    pub terms: Vec<(i64, Complex<T>)>,
}

impl<T: Real> UnivariatePolynomial<T> {
    pub fn eval(&self, t: Rational) -> Complex<T> {
        let mut acc = Complex::new(T::zero(), T::zero());
        for &(w, c) in &self.terms {
            let r = ((w as i128) * (t.num as i128)).rem_euclid(t.den as i128) as u64;
            let phase = T::TAU() * T::ratio(r, t.den);
            acc = acc + c * Complex::new(phase.cos(), phase.sin());
        }
        acc
    }
}

impl<T: Real> UnivariateOracle<T> for UnivariatePolynomial<T> {
    fn sample(&mut self, t: Rational) -> Result<Complex<T>> {
        Ok(self.eval(t))
    }
}

// Counts calls on the way through.
struct Counting<'o, O: ?Sized> {
    inner: &'o mut O,
    calls: u64,
}

impl<T: Real, O: UnivariateOracle<T> + ?Sized> UnivariateOracle<T> for Counting<'_, O> {
    fn sample(&mut self, t: Rational) -> Result<Complex<T>> {
        self.calls += 1;
        self.inner.sample(t)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SftVariant {
    /// `M` equispaced samples and a full transform.
    DenseReference,
    /// Every prime of the deterministic sampling set.
    SublinearDeterministic,
    /// A random subset of the deterministic primes.
    SublinearMonteCarlo,
}

impl SftVariant {
    pub fn as_str(&self) -> &'static str {
        match self {
            SftVariant::DenseReference => "dense_reference",
            SftVariant::SublinearDeterministic => "sublinear_deterministic",
            SftVariant::SublinearMonteCarlo => "sublinear_monte_carlo",
        }
    }

    pub fn is_sublinear(&self) -> bool {
        !matches!(self, SftVariant::DenseReference)
    }
}

impl FromStr for SftVariant {
    type Err = crate::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dense_reference" | "dense" => Ok(SftVariant::DenseReference),
            "sublinear_deterministic" | "deterministic" => Ok(SftVariant::SublinearDeterministic),
            "sublinear_monte_carlo" | "monte_carlo" => Ok(SftVariant::SublinearMonteCarlo),
            _ => Err(crate::Error::Parse(format!("unknown SFT variant {s:?}"))),
        }
    }
}

/// Parameters of one `A_{s,M}` call.
#[derive(Clone, Debug, PartialEq)]
pub struct SftRequest {
    pub sparsity: usize,
    pub bandwidth: u64,
    pub variant: SftVariant,
    /// Scales how many primes the Monte Carlo variant draws.
    pub random_scale: f64,
    /// Failure probability allowed to the Monte Carlo variant.
    pub failure_probability: f64,
    pub seed: u64,
    /// Base sampling rate is `ceil(rate_constant * s * ceil(log2 M))`.
    pub rate_constant: f64,
    /// Number of leading primes skipped when building the sampling set.
    pub prime_shift: usize,
}

impl SftRequest {
    pub fn new(sparsity: usize, bandwidth: u64, variant: SftVariant) -> Self {
        SftRequest {
            sparsity,
            bandwidth,
            variant,
            random_scale: 1.0,
            failure_probability: 1.0 / 3.0,
            seed: 0,
            rate_constant: 1.0,
            prime_shift: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sparsity == 0 {
            return Err(invalid("sparsity must be positive"));
        }
        if self.bandwidth == 0 {
            return Err(invalid("bandwidth must be positive"));
        }
        if (2 * self.sparsity) as u64 > self.bandwidth {
            return Err(invalid(format!("2s = {} exceeds bandwidth {}", 2 * self.sparsity, self.bandwidth)));
        }
        if !(self.random_scale > 0.0 && self.random_scale <= 21.0) {
            return Err(invalid("random_scale must lie in (0, 21]"));
        }
        if !(self.failure_probability > 0.0 && self.failure_probability < 1.0) {
            return Err(invalid("failure probability must lie in (0, 1)"));
        }
        if !(self.rate_constant > 0.0 && self.rate_constant.is_finite()) {
            return Err(invalid("rate constant must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SftOutput<T> {
    /// At most `2s` entries, keyed by frequency in `B_M`.
    pub coefficients: BTreeMap<i64, Complex<T>>,
    pub sample_count: u64,
}

impl<T: Real> SftOutput<T> {
    pub fn get(&self, w: i64) -> Complex<T> {
        self.coefficients.get(&w).copied().unwrap_or_else(|| Complex::new(T::zero(), T::zero()))
    }
}

/// Runs `A_{s,M}` on `oracle`.
pub fn run_sft<T: Real, O: UnivariateOracle<T> + ?Sized>(req: &SftRequest, oracle: &mut O) -> Result<SftOutput<T>> {
    req.validate()?;
    let mut counting = Counting { inner: oracle, calls: 0 };
    let coefficients = match req.variant {
        SftVariant::DenseReference => dense(req, &mut counting)?,
        SftVariant::SublinearDeterministic | SftVariant::SublinearMonteCarlo => {
            SublinearPlan::new(req)?.run(&mut counting)?
        }
    };
    Ok(SftOutput { coefficients, sample_count: counting.calls })
}

fn dense<T: Real>(req: &SftRequest, oracle: &mut dyn UnivariateOracle<T>) -> Result<BTreeMap<i64, Complex<T>>> {
    let m = req.bandwidth;
    let mut buf = Vec::with_capacity(m as usize);
    for j in 0..m {
        buf.push(oracle.sample(Rational::new(j, m))?);
    }
    Transformer::new().forward_in_place(&mut buf);
    let cand = buf.into_iter().enumerate().map(|(r, c)| (fold_to_band(r as i128, m), c));
    Ok(largest(cand, 2 * req.sparsity))
}

/// Entries at or below this fraction of the largest magnitude count as zero.
pub const RELATIVE_ZERO: f64 = 1e-12;

// Keeps the `k` largest magnitudes, ties broken by ascending frequency;
// drops exact zeros and round-off level entries.
pub(crate) fn largest<T: Real>(cand: impl Iterator<Item = (i64, Complex<T>)>, k: usize) -> BTreeMap<i64, Complex<T>> {
    let mut v: Vec<(i64, Complex<T>, T)> = cand.map(|(w, c)| (w, c, c.norm())).filter(|e| e.2 > T::zero()).collect();
    let max = v.iter().map(|e| e.2).fold(T::zero(), T::max);
    let cut = max * T::of(RELATIVE_ZERO);
    v.retain(|e| e.2 > cut);
    let order = |a: &(i64, Complex<T>, T), b: &(i64, Complex<T>, T)| {
        b.2.partial_cmp(&a.2).unwrap_or(std::cmp::Ordering::Equal).then(a.0.cmp(&b.0))
    };
    if k == 0 {
        return BTreeMap::new();
    }
    if v.len() > k {
        v.select_nth_unstable_by(k - 1, order);
        v.truncate(k);
    }
    v.sort_by(order);
    v.into_iter().map(|(w, c, _)| (w, c)).collect()
}

/// Inputs to the closed-form error bounds.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SignalStats {
    /// `||a - a_s^opt||_1` over `B_M`.
    pub best_s_tail_l1: f64,
    /// `l1` mass of the coefficients outside `B_M`.
    pub out_of_band_l1: f64,
    /// Largest noise magnitude on any sample.
    pub noise_inf: f64,
    /// `||a - a_2s^opt||_2`, if known; otherwise bounded by `tail_1 / (2 sqrt s)`.
    pub best_2s_tail_l2: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SftErrorProfile {
    pub tau: f64,
    pub eta_inf: f64,
    pub eta_2: f64,
}

/// Guarantees for one call with the given signal statistics.
///
/// The sublinear variants use `tau = (4 + 2 sqrt 2) delta`, `eta_inf = sqrt 2
/// delta` with `delta = tail/s + out_of_band + noise`. The dense transform only
/// suffers from folding and noise (`eps`): every coefficient is off by at most
/// `eps`, and a frequency above `tail/s + 2 eps` is among the `2s` largest.
pub fn error_profile(req: &SftRequest, stats: &SignalStats) -> SftErrorProfile {
    let s = req.sparsity as f64;
    let tail2 = stats.best_2s_tail_l2.unwrap_or(stats.best_s_tail_l1 / (2.0 * s.sqrt()));
    let eps = stats.out_of_band_l1 + stats.noise_inf;
    match req.variant {
        SftVariant::DenseReference => SftErrorProfile {
            tau: stats.best_s_tail_l1 / s + 2.0 * eps,
            eta_inf: eps,
            eta_2: 2.0 * tail2 + 3.0 * (2.0 * s).sqrt() * eps,
        },
        _ => {
            let delta = stats.best_s_tail_l1 / s + eps;
            let c2 = 8.0 * std::f64::consts::SQRT_2 + 6.0;
            SftErrorProfile {
                tau: (4.0 + 2.0 * std::f64::consts::SQRT_2) * delta,
                eta_inf: std::f64::consts::SQRT_2 * delta,
                eta_2: tail2 + c2 * stats.best_s_tail_l1 / s.sqrt() + c2 * s.sqrt() * eps,
            }
        }
    }
}

/// `S_tau = { k : |x_k| >= tau }`.
pub fn significant_set<T: Real>(x: &[Complex<T>], tau: T) -> Vec<usize> {
    x.iter().enumerate().filter(|(_, c)| c.norm() >= tau && (tau > T::zero() || c.norm() > T::zero())).map(|(i, _)| i).collect()
}

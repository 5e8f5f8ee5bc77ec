//! Multivariate signals and the counting, optionally noisy sampler around them.

use crate::arith::mix_seed;
use crate::error::{Error, Result};
use crate::scalar::Real;
use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Instant;

/// A one-periodic function on the torus `T^d`, safe to evaluate concurrently.
pub trait Signal<T: Real>: Send + Sync {
    fn dim(&self) -> usize;

    fn eval(&self, x: &[T]) -> Complex<T>;

    /// `||f||^2_{L^2}`, when known analytically.
    fn energy(&self) -> Option<T> {
        None
    }
}

impl<T: Real, S: Signal<T> + ?Sized> Signal<T> for &S {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn eval(&self, x: &[T]) -> Complex<T> {
        (**self).eval(x)
    }
    fn energy(&self) -> Option<T> {
        (**self).energy()
    }
}

impl<T: Real, S: Signal<T> + ?Sized> Signal<T> for Box<S> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn eval(&self, x: &[T]) -> Complex<T> {
        (**self).eval(x)
    }
    fn energy(&self) -> Option<T> {
        (**self).energy()
    }
}

/// `S_{l,alpha} f (x) = f(x_1, .., (x_l + alpha) mod 1, .., x_d)`.
pub struct Shifted<S> {
    inner: S,
    ell: usize,
    alpha: f64,
}

impl<S> Shifted<S> {
    pub fn new(inner: S, ell: usize, alpha: f64) -> Self {
        Shifted { inner, ell, alpha }
    }
}

impl<T: Real, S: Signal<T>> Signal<T> for Shifted<S> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn eval(&self, x: &[T]) -> Complex<T> {
        let mut y = x.to_vec();
        let v = y[self.ell] + T::of(self.alpha);
        y[self.ell] = v - v.floor();
        self.inner.eval(&y)
    }
    fn energy(&self) -> Option<T> {
        self.inner.energy()
    }
}

/// Additive complex Gaussian noise `sigma / sqrt(2) (n_1 + i n_2)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseModel<T> {
    pub sigma: T,
    pub seed: u64,
}

impl<T: Real> NoiseModel<T> {
    /// Noise level for a target SNR in decibels: `sigma = ||c||_2 / sqrt(10^(db/10))`.
    pub fn for_snr(energy: T, snr_db: f64, seed: u64) -> Self {
        let snr = 10f64.powf(snr_db / 10.0);
        NoiseModel { sigma: T::of((energy.as_f64() / snr).sqrt()), seed }
    }

    fn rng(&self, stream: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(mix_seed(&[self.seed, stream]))
    }
}

/// Evaluation oracle: counts every call, adds fresh noise per call and
/// enforces an optional deadline and evaluation budget.
pub struct Sampler<'a, T: Real> {
    signal: &'a dyn Signal<T>,
    noise: Option<NoiseModel<T>>,
    count: AtomicU64,
    deadline: Option<Instant>,
    budget: Option<u64>,
}

impl<'a, T: Real> Sampler<'a, T> {
    pub fn new(signal: &'a dyn Signal<T>) -> Self {
        Sampler { signal, noise: None, count: AtomicU64::new(0), deadline: None, budget: None }
    }

    /// Sampler with noise at `snr_db` (or none). Needs the signal energy.
    pub fn noisy(signal: &'a dyn Signal<T>, snr_db: Option<f64>, seed: u64) -> Result<Self> {
        let mut s = Sampler::new(signal);
        if let Some(db) = snr_db {
            let e = signal
                .energy()
                .ok_or_else(|| Error::InvalidArgument("noise at a target SNR needs the signal energy".into()))?;
            s.noise = Some(NoiseModel::for_snr(e, db, seed));
        }
        Ok(s)
    }

    pub fn with_noise(mut self, noise: NoiseModel<T>) -> Self {
        self.noise = Some(noise);
        self
    }

    pub fn with_deadline(mut self, deadline: Instant) -> Self {
        self.deadline = Some(deadline);
        self
    }

    pub fn with_budget(mut self, max_evaluations: u64) -> Self {
        self.budget = Some(max_evaluations);
        self
    }

    pub fn noise(&self) -> Option<&NoiseModel<T>> {
        self.noise.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.signal.dim()
    }

    pub fn signal(&self) -> &'a dyn Signal<T> {
        self.signal
    }

    /// Total evaluations so far, across all streams.
    pub fn evaluations(&self) -> u64 {
        self.count.load(Ordering::Relaxed)
    }

    /// Independent evaluation stream; noise drawn on stream `id` depends only
    /// on the sampler seed, `id` and the order of calls within the stream.
    pub fn stream(&self, id: u64) -> SampleStream<'_, 'a, T> {
        SampleStream { sampler: self, rng: self.noise.map(|n| n.rng(id)), calls: 0 }
    }
}

pub struct SampleStream<'s, 'a, T: Real> {
    sampler: &'s Sampler<'a, T>,
    rng: Option<ChaCha8Rng>,
    calls: u64,
}

impl<T: Real> SampleStream<'_, '_, T> {
    pub fn eval(&mut self, x: &[T]) -> Result<Complex<T>> {
        let s = self.sampler;
        let before = s.count.fetch_add(1, Ordering::Relaxed);
        if let Some(b) = s.budget {
            if before >= b {
                return Err(Error::BudgetExceeded);
            }
        }
        if self.calls.is_multiple_of(1024) {
            if let Some(dl) = s.deadline {
                if Instant::now() > dl {
                    return Err(Error::BudgetExceeded);
                }
            }
        }
        self.calls += 1;
        let mut v = s.signal.eval(x);
        if let (Some(rng), Some(n)) = (self.rng.as_mut(), s.noise.as_ref()) {
            let a: f64 = StandardNormal.sample(rng);
            let b: f64 = StandardNormal.sample(rng);
            let scale = n.sigma / T::SQRT_2();
            v = v + Complex::new(T::of(a), T::of(b)) * scale;
        }
        Ok(v)
    }

    /// Evaluations made through this stream.
    pub fn calls(&self) -> u64 {
        self.calls
    }
}

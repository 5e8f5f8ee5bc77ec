//! Test signals with known Fourier coefficients: sparse trigonometric
//! polynomials and sums of tensor-product periodic B-splines.

use crate::error::{invalid, Error, Result};
use crate::index_sets::{FrequencySet, MultiIndex};
use crate::sampling::Signal;
use crate::scalar::Real;
use crate::spectrum::SparseSpectrum;
use num_complex::Complex;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

/// Ground truth for error evaluation: coefficients on demand plus `||f||^2`.
pub trait FourierTruth<T: Real> {
    fn dim(&self) -> usize;
    fn coefficient(&self, k: &[i64]) -> Complex<T>;
    fn norm_sq(&self) -> T;
    /// The full spectrum, when it is finite.
    fn finite_spectrum(&self) -> Option<&SparseSpectrum<T>> {
        None
    }
}

/// `f(x) = sum_k c_k e^{2 pi i k.x}` with finitely many terms.
#[derive(Clone, Debug)]
pub struct TrigPolynomial<T> {
    spectrum: SparseSpectrum<T>,
    // row-major frequencies as f64; phases are accumulated in f64 for every T
    freqs: Vec<f64>,
    coefs: Vec<Complex<T>>,
}

impl<T: Real> TrigPolynomial<T> {
    pub fn new(spectrum: SparseSpectrum<T>) -> Self {
        let mut freqs = Vec::with_capacity(spectrum.len() * spectrum.dim());
        let mut coefs = Vec::with_capacity(spectrum.len());
        for (k, c) in spectrum.iter() {
            freqs.extend(k.iter().map(|&v| v as f64));
            coefs.push(*c);
        }
        TrigPolynomial { spectrum, freqs, coefs }
    }

    pub fn spectrum(&self) -> &SparseSpectrum<T> {
        &self.spectrum
    }
}

impl<T: Real> Signal<T> for TrigPolynomial<T> {
    fn dim(&self) -> usize {
        self.spectrum.dim()
    }

    fn eval(&self, x: &[T]) -> Complex<T> {
        let d = self.spectrum.dim();
        let mut acc = Complex::new(T::zero(), T::zero());
        if d == 0 {
            return acc;
        }
        let mut buf = [0.0f64; 16];
        let heap: Vec<f64>;
        let xs: &[f64] = if d <= buf.len() {
            for (b, v) in buf.iter_mut().zip(x) {
                *b = v.as_f64();
            }
            &buf[..d]
        } else {
            heap = x.iter().map(|v| v.as_f64()).collect();
            &heap
        };
        let table = turn_table();
        for (i, c) in self.coefs.iter().enumerate() {
            let k = &self.freqs[i * d..(i + 1) * d];
            let mut ph = 0.0;
            for l in 0..d {
                ph += k[l] * xs[l];
            }
            acc = acc + *c * cis_turn(table, ph);
        }
        acc
    }

    fn energy(&self) -> Option<T> {
        Some(self.spectrum.norm_sq())
    }
}

impl<T: Real> FourierTruth<T> for TrigPolynomial<T> {
    fn dim(&self) -> usize {
        self.spectrum.dim()
    }
    fn coefficient(&self, k: &[i64]) -> Complex<T> {
        self.spectrum.get(k)
    }
    fn norm_sq(&self) -> T {
        self.spectrum.norm_sq()
    }
    fn finite_spectrum(&self) -> Option<&SparseSpectrum<T>> {
        Some(&self.spectrum)
    }
}

const TURN_BITS: u32 = 10;

fn turn_table() -> &'static [(f64, f64)] {
    static TABLE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let n = 1usize << TURN_BITS;
        (0..n).map(|m| (std::f64::consts::TAU * m as f64 / n as f64).sin_cos()).map(|(s, c)| (c, s)).collect()
    })
}

/// `e^{2 pi i phi}`: table entry at the nearest multiple of `2^-10` times a
/// short Taylor series for the rest (`|theta| <= pi/1024`, truncation below
/// `1e-18`). Several times cheaper than `sin_cos` and within a few ulp of it.
/// `table` is [`turn_table`], fetched once by the caller.
#[inline(always)]
fn cis_turn<T: Real>(table: &[(f64, f64)], phi: f64) -> Complex<T> {
    const N: f64 = (1u64 << TURN_BITS) as f64;
    // adding 1.5 * 2^52 rounds to the nearest integer without a libm call
    const ROUND: f64 = 6_755_399_441_055_744.0;
    let mut y = phi * N;
    if y.abs() >= 1e15 {
        y = (phi - phi.floor()) * N;
    }
    let r = (y + ROUND) - ROUND;
    let m = (r as i64 & ((1 << TURN_BITS) - 1)) as usize;
    let theta = (y - r) * (std::f64::consts::TAU / N);
    let t2 = theta * theta;
    let cos = 1.0 - t2 * (0.5 - t2 * (1.0 / 24.0));
    let sin = theta * (1.0 - t2 * (1.0 / 6.0 - t2 * (1.0 / 120.0)));
    let (tc, ts) = table[m];
    Complex::new(T::of(tc * cos - ts * sin), T::of(ts * cos + tc * sin))
}

/// Smallest coefficient magnitude accepted by [`random_sparse_poly`].
pub const MIN_COEFFICIENT: f64 = 1e-3;

/// `s` distinct frequencies drawn uniformly from `set`, coefficients uniform
/// on `[-1,1] + i[-1,1]` and redrawn until their magnitude reaches `1e-3`.
pub fn random_sparse_poly<T: Real>(set: &FrequencySet, s: usize, seed: u64) -> Result<TrigPolynomial<T>> {
    let n = set.cardinality();
    if s as u64 > n {
        return Err(invalid(format!("cannot draw {s} distinct frequencies from a set of {n}")));
    }
    let n = usize::try_from(n).map_err(|_| Error::Size("set too large to sample from".into()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = sample(&mut rng, n, s).into_vec();
    idx.sort_unstable();
    let mut spec = SparseSpectrum::new(set.dim());
    for i in idx {
        let k = set.nth(i as u64).expect("rank below cardinality");
        let c = loop {
            let re: f64 = rng.random_range(-1.0..=1.0);
            let im: f64 = rng.random_range(-1.0..=1.0);
            if re.hypot(im) >= MIN_COEFFICIENT {
                break Complex::new(T::of(re), T::of(im));
            }
        };
        spec.insert(k, c)?;
    }
    Ok(TrigPolynomial::new(spec))
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        x.sin() / x
    }
}

/// `C_m = (sum_k sinc(pi k / m)^{2m})^{-1/2}`, so that `||N_m||_{L^2} = 1`.
pub fn bspline_constant(m: u32) -> f64 {
    static CACHE: OnceLock<Mutex<HashMap<u32, f64>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(&c) = cache.lock().unwrap().get(&m) {
        return c;
    }
    assert!(m >= 1, "B-spline order must be positive");
    let mf = m as f64;
    let sum = if m == 1 {
        1.0
    } else {
        // tail beyond K is at most 2 (m/pi)^{2m} K^{1-2m} / (2m-1)
        let lead = (mf / std::f64::consts::PI).powf(2.0 * mf);
        let mut k_max = 1u64;
        while 2.0 * lead * (k_max as f64).powf(1.0 - 2.0 * mf) / (2.0 * mf - 1.0) >= 1e-14 {
            k_max *= 2;
        }
        let mut acc = 0.0;
        for k in (1..=k_max).rev() {
            acc += 2.0 * sinc(std::f64::consts::PI * k as f64 / mf).powi(2 * m as i32);
        }
        1.0 + acc
    };
    let c = sum.powf(-0.5);
    cache.lock().unwrap().insert(m, c);
    c
}

/// Fourier coefficient `C_m sinc(pi k/m)^m (-1)^k` of the order-`m` B-spline.
pub fn bspline_coefficient(m: u32, k: i64) -> f64 {
    let sign = if k.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    if m > 1 && k != 0 && k % m as i64 == 0 {
        return 0.0;
    }
    if m == 1 && k != 0 {
        return 0.0;
    }
    bspline_constant(m) * sinc(std::f64::consts::PI * k as f64 / m as f64).powi(m as i32) * sign
}

// Cardinal B-spline of order n supported on [0, n], by the Cox-de Boor recursion.
fn cardinal_bspline(n: u32, u: f64) -> f64 {
    let nf = n as f64;
    if !(0.0..nf).contains(&u) {
        return 0.0;
    }
    let i = u.floor() as usize;
    let n = n as usize;
    // vals[j] = N_k(u - j); only j <= i can be non-zero
    let mut vals = vec![0.0; n + 1];
    vals[i] = 1.0;
    for k in 2..=n {
        let kf = k as f64;
        for j in 0..=i {
            let t = u - j as f64;
            vals[j] = (t * vals[j] + (kf - t) * vals[j + 1]) / (kf - 1.0);
        }
    }
    vals[0]
}

/// The periodic B-spline `N_m(x) = C_m m M_m(m (x - 1/2))`, `x` taken mod 1,
/// where `M_m` is the centred cardinal B-spline.
pub fn bspline_eval(m: u32, x: f64) -> f64 {
    let y = x - x.floor();
    let mf = m as f64;
    bspline_constant(m) * mf * cardinal_bspline(m, mf * (y - 0.5) + mf / 2.0)
}

/// Same function through its Fourier series truncated at `|k| <= k_max`.
pub fn bspline_eval_series(m: u32, x: f64, k_max: i64) -> f64 {
    let mut acc = bspline_coefficient(m, 0);
    for k in (1..=k_max).rev() {
        acc += 2.0 * bspline_coefficient(m, k) * (std::f64::consts::TAU * k as f64 * x).cos();
    }
    acc
}

/// One product term `prod_{l in dims} N_order(x_l)`.
#[derive(Clone, Debug, PartialEq)]
pub struct BSplineTerm {
    pub dims: Vec<usize>,
    pub order: u32,
}

/// Sum of tensor-product B-spline terms on `T^d`.
#[derive(Clone, Debug)]
pub struct BSplineFunction {
    dim: usize,
    terms: Vec<BSplineTerm>,
    norm_sq: f64,
}

impl BSplineFunction {
    pub fn new(dim: usize, terms: Vec<BSplineTerm>) -> Result<Self> {
        if terms.is_empty() {
            return Err(invalid("at least one B-spline term required"));
        }
        for t in &terms {
            if t.order == 0 {
                return Err(invalid("B-spline order must be positive"));
            }
            if t.dims.is_empty() {
                return Err(invalid("B-spline term needs at least one dimension"));
            }
            let mut seen = vec![false; dim];
            for &l in &t.dims {
                if l >= dim {
                    return Err(invalid(format!("dimension {l} out of range for d = {dim}")));
                }
                if std::mem::replace(&mut seen[l], true) {
                    return Err(invalid(format!("dimension {l} repeated inside one term")));
                }
            }
        }
        let mut norm_sq = 0.0;
        for a in &terms {
            for b in &terms {
                norm_sq += term_inner(dim, a, b);
            }
        }
        Ok(BSplineFunction { dim, terms, norm_sq })
    }

    pub fn terms(&self) -> &[BSplineTerm] {
        &self.terms
    }

    pub fn coefficient_f64(&self, k: &[i64]) -> f64 {
        let mut acc = 0.0;
        for t in &self.terms {
            let outside_zero = (0..self.dim).all(|l| t.dims.contains(&l) || k[l] == 0);
            if outside_zero {
                acc += t.dims.iter().map(|&l| bspline_coefficient(t.order, k[l])).product::<f64>();
            }
        }
        acc
    }

    /// Relative L2 error of the best `n`-term approximation using only
    /// frequencies from `set`.
    pub fn best_n_term_error(&self, set: &FrequencySet, n: usize) -> f64 {
        let mut mags: Vec<f64> = Vec::new();
        set.for_each(|k| mags.push(self.coefficient_f64(k).powi(2)));
        mags.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let kept: f64 = mags.iter().take(n).sum();
        ((self.norm_sq - kept).max(0.0)).sqrt() / self.norm_sq.sqrt()
    }
}

// <term_a, term_b> in L2, from the coefficient series.
fn term_inner(dim: usize, a: &BSplineTerm, b: &BSplineTerm) -> f64 {
    let mut prod = 1.0;
    for l in 0..dim {
        let ia = a.dims.contains(&l);
        let ib = b.dims.contains(&l);
        prod *= match (ia, ib) {
            (true, true) => series_inner(a.order, b.order),
            (true, false) => bspline_coefficient(a.order, 0),
            (false, true) => bspline_coefficient(b.order, 0),
            (false, false) => 1.0,
        };
    }
    prod
}

fn series_inner(m1: u32, m2: u32) -> f64 {
    if m1 == m2 {
        return 1.0;
    }
    if m1.min(m2) == 1 {
        return bspline_coefficient(m1, 0) * bspline_coefficient(m2, 0);
    }
    // terms decay like k^{-(m1+m2)}, and m1 + m2 >= 5 here
    let k_max = 200_000i64;
    let mut acc = 0.0;
    for k in (1..=k_max).rev() {
        acc += 2.0 * bspline_coefficient(m1, k) * bspline_coefficient(m2, k);
    }
    acc + bspline_coefficient(m1, 0) * bspline_coefficient(m2, 0)
}

impl<T: Real> Signal<T> for BSplineFunction {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &[T]) -> Complex<T> {
        let mut acc = 0.0;
        for t in &self.terms {
            acc += t.dims.iter().map(|&l| bspline_eval(t.order, x[l].as_f64())).product::<f64>();
        }
        Complex::new(T::of(acc), T::zero())
    }

    fn energy(&self) -> Option<T> {
        Some(T::of(self.norm_sq))
    }
}

impl<T: Real> FourierTruth<T> for BSplineFunction {
    fn dim(&self) -> usize {
        self.dim
    }
    fn coefficient(&self, k: &[i64]) -> Complex<T> {
        Complex::new(T::of(self.coefficient_f64(k)), T::zero())
    }
    fn norm_sq(&self) -> T {
        T::of(self.norm_sq)
    }
}

/// Convenience: the frequencies of a sparse spectrum as a list.
pub fn support_of<T: Real>(s: &SparseSpectrum<T>) -> Vec<MultiIndex> {
    s.support().cloned().collect()
}

//! Length-`M` discrete Fourier transforms with the `1/M`-normalised forward
//! convention `(F_M a)_w = (1/M) sum_j a_j e^{-2 pi i w j / M}`.
//!
//! Arbitrary lengths, prime ones included, are handled by `rustfft`.

use crate::arith::{band_contains, fold_to_band};
use crate::scalar::Real;
use num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use std::any::{Any, TypeId};
use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

/// Spectrum of a length-`M` vector, addressable by any integer frequency
/// (indices wrap modulo `M`).
#[derive(Clone, Debug, PartialEq)]
pub struct DenseSpectrum<T> {
    coeffs: Vec<Complex<T>>,
}

impl<T: Real> DenseSpectrum<T> {
    pub fn from_vec(coeffs: Vec<Complex<T>>) -> Self {
        DenseSpectrum { coeffs }
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Coefficient at frequency `w`, read modulo `M`.
    pub fn get(&self, w: i64) -> Complex<T> {
        let m = self.coeffs.len() as i64;
        self.coeffs[w.rem_euclid(m) as usize]
    }

    /// Storage order: index `r` holds frequency `r mod M`.
    pub fn as_slice(&self) -> &[Complex<T>] {
        &self.coeffs
    }

    pub fn into_vec(self) -> Vec<Complex<T>> {
        self.coeffs
    }

    /// `(w, coefficient)` pairs with `w` folded into `B_M`, ascending.
    pub fn centered(&self) -> Vec<(i64, Complex<T>)> {
        let m = self.coeffs.len() as u64;
        let mut v: Vec<(i64, Complex<T>)> =
            self.coeffs.iter().enumerate().map(|(r, &c)| (fold_to_band(r as i128, m), c)).collect();
        v.sort_by_key(|p| p.0);
        v
    }
}

// Planning a prime length costs several transforms, so plans are kept per
// thread, keyed by scalar type, length and direction.
type PlanCache = HashMap<(TypeId, usize, bool), Box<dyn Any>>;

thread_local! {
    static PLANS: RefCell<PlanCache> = RefCell::new(HashMap::new());
}

const PLAN_CACHE_LIMIT: usize = 512;

fn plan<T: Real>(len: usize, inverse: bool) -> Arc<dyn Fft<T>> {
    PLANS.with(|cell| {
        let mut plans = cell.borrow_mut();
        let key = (TypeId::of::<T>(), len, inverse);
        if let Some(p) = plans.get(&key).and_then(|b| b.downcast_ref::<Arc<dyn Fft<T>>>()) {
            return p.clone();
        }
        if plans.len() >= PLAN_CACHE_LIMIT {
            plans.clear();
        }
        let mut planner = FftPlanner::<T>::new();
        let p = if inverse { planner.plan_fft_inverse(len) } else { planner.plan_fft_forward(len) };
        plans.insert(key, Box::new(p.clone()));
        p
    })
}

/// Normalised forward and unnormalised inverse transforms on buffers.
#[derive(Default)]
pub struct Transformer<T: Real> {
    scratch: Vec<Complex<T>>,
}

impl<T: Real> Transformer<T> {
    pub fn new() -> Self {
        Transformer { scratch: Vec::new() }
    }

    /// Normalised forward transform, in place.
    pub fn forward_in_place(&mut self, buf: &mut [Complex<T>]) {
        if buf.is_empty() {
            return;
        }
        let fft = plan::<T>(buf.len(), false);
        self.process(&*fft, buf);
        let scale = T::one() / T::from_usize(buf.len()).unwrap();
        for c in buf.iter_mut() {
            *c = *c * scale;
        }
    }

    /// Unnormalised inverse transform, in place.
    pub fn inverse_in_place(&mut self, buf: &mut [Complex<T>]) {
        if buf.is_empty() {
            return;
        }
        let fft = plan::<T>(buf.len(), true);
        self.process(&*fft, buf);
    }

    fn process(&mut self, fft: &dyn Fft<T>, buf: &mut [Complex<T>]) {
        let need = fft.get_inplace_scratch_len();
        if self.scratch.len() < need {
            self.scratch.resize(need, Complex::new(T::zero(), T::zero()));
        }
        fft.process_with_scratch(buf, &mut self.scratch[..need]);
    }

    pub fn forward(&mut self, samples: &[Complex<T>]) -> DenseSpectrum<T> {
        let mut buf = samples.to_vec();
        self.forward_in_place(&mut buf);
        DenseSpectrum { coeffs: buf }
    }
}

/// `F_M a` for `M = samples.len()`.
pub fn dft<T: Real>(samples: &[Complex<T>]) -> DenseSpectrum<T> {
    Transformer::new().forward(samples)
}

/// Inverse of [`dft`]: `a_j = sum_w c_w e^{2 pi i w j / M}`.
pub fn idft<T: Real>(spectrum: &DenseSpectrum<T>) -> Vec<Complex<T>> {
    let mut buf = spectrum.coeffs.clone();
    Transformer::new().inverse_in_place(&mut buf);
    buf
}

/// `sum_{w' == w mod M} c_{w'}` for every residue `w`, given finitely many
/// Fourier coefficients of a univariate function.
pub fn aliased_spectrum<T: Real>(series: &[(i64, Complex<T>)], m: u64) -> DenseSpectrum<T> {
    let mut out = vec![Complex::new(T::zero(), T::zero()); m as usize];
    for &(w, c) in series {
        let r = (w as i128).rem_euclid(m as i128) as usize;
        out[r] = out[r] + c;
    }
    DenseSpectrum { coeffs: out }
}

/// The coefficients of `series` whose frequency lies in `B_M`.
pub fn restrict_to_band<T: Real>(series: &[(i64, Complex<T>)], m: u64) -> BTreeMap<i64, Complex<T>> {
    let mut out = BTreeMap::new();
    for &(w, c) in series {
        if band_contains(m, w) {
            let e = out.entry(w).or_insert(Complex::new(T::zero(), T::zero()));
            *e = *e + c;
        }
    }
    out
}

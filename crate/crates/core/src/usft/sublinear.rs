//! Nonequispaced sublinear-time SFT in the style of Iwen's CRT method.
//!
//! For every sampling prime `p` the function is sampled on the grids `j/(p q)`
//! for a fixed set of small coprime primes `q` whose product with `p` covers
//! `M`. The length-`p` transform (a subgrid of every `p q` grid) locates
//! energetic residues, the `p q` transforms pin down `w mod q`, and CRT
//! recombination yields candidate frequencies. Candidates reconstructed by a
//! majority of the primes are kept; their coefficients are component-wise
//! medians over all aliased measurements.

use super::{largest, Rational, SftRequest, SftVariant, UnivariateOracle};
use crate::arith::{band_contains, crt, fold_to_band, next_prime};
use crate::error::{Error, Result};
use crate::fft::Transformer;
use crate::scalar::Real;
use num_complex::Complex;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, HashMap};

/// Resolved sampling primes for one request.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SublinearPlan {
    bandwidth: u64,
    sparsity: usize,
    crt_primes: Vec<u64>,
    sampling_primes: Vec<u64>,
    deterministic_count: usize,
}

impl SublinearPlan {
    pub fn new(req: &SftRequest) -> Result<Self> {
        req.validate()?;
        let m = req.bandwidth;
        let s = req.sparsity;
        let log2m = (64 - (m.max(2) - 1).leading_zeros()) as f64;
        let base = (req.rate_constant * s as f64 * log2m).ceil().max(2.0);
        if base > 1e15 {
            return Err(Error::Size("sampling rate too large".into()));
        }
        let mut p_min = next_prime(base as u64);
        let crt_primes = loop {
            let qs = covering_primes(m.div_ceil(p_min));
            match qs.last() {
                Some(&q) if q >= p_min => p_min = next_prime(q + 1),
                _ => break qs,
            }
        };
        // how many primes >= p_min can divide one nonzero difference below M
        let mut c = 0usize;
        let mut pw: u128 = p_min as u128;
        while pw < m as u128 {
            c += 1;
            pw *= p_min as u128;
        }
        let deterministic_count = 2 * s * c + 1;
        let mut pool = Vec::with_capacity(deterministic_count);
        let mut p = p_min;
        for _ in 0..req.prime_shift {
            p = next_prime(p + 1);
        }
        while pool.len() < deterministic_count {
            pool.push(p);
            p = next_prime(p + 1);
        }
        let sampling_primes = match req.variant {
            SftVariant::SublinearMonteCarlo => {
                let want = (req.random_scale * (m as f64 / req.failure_probability).log2()).ceil().max(1.0) as usize;
                let k = want.min(deterministic_count);
                let mut rng = ChaCha8Rng::seed_from_u64(req.seed);
                let mut idx = sample(&mut rng, deterministic_count, k).into_vec();
                idx.sort_unstable();
                idx.into_iter().map(|i| pool[i]).collect()
            }
            _ => pool,
        };
        Ok(SublinearPlan { bandwidth: m, sparsity: s, crt_primes, sampling_primes, deterministic_count })
    }

    pub fn sampling_primes(&self) -> &[u64] {
        &self.sampling_primes
    }

    pub fn crt_primes(&self) -> &[u64] {
        &self.crt_primes
    }

    /// Size of the deterministic prime set the Monte Carlo variant draws from.
    pub fn deterministic_count(&self) -> usize {
        self.deterministic_count
    }

    /// Exact number of oracle calls [`SublinearPlan::run`] will make.
    pub fn sample_count(&self) -> u64 {
        let per: u64 = 1 + self.crt_primes.iter().map(|q| q - 1).sum::<u64>();
        self.sampling_primes.iter().map(|p| p * per).sum()
    }

    pub(crate) fn run<T: Real>(&self, oracle: &mut dyn UnivariateOracle<T>) -> Result<BTreeMap<i64, Complex<T>>> {
        let mut fft = Transformer::new();
        let zero = Complex::new(T::zero(), T::zero());
        // (p, coarse spectrum, one fine spectrum per modulus q)
        type Spectra<T> = Vec<(u64, Vec<Complex<T>>, Vec<Vec<Complex<T>>>)>;
        let mut spectra: Spectra<T> = Vec::with_capacity(self.sampling_primes.len());
        for &p in &self.sampling_primes {
            let mut coarse = Vec::with_capacity(p as usize);
            for j in 0..p {
                coarse.push(oracle.sample(Rational::new(j, p))?);
            }
            let mut fine_all = Vec::with_capacity(self.crt_primes.len());
            for &q in &self.crt_primes {
                let n = p * q;
                let mut fine = Vec::with_capacity(n as usize);
                for j in 0..n {
                    fine.push(if j % q == 0 { coarse[(j / q) as usize] } else { oracle.sample(Rational::new(j, n))? });
                }
                fft.forward_in_place(&mut fine);
                fine_all.push(fine);
            }
            fft.forward_in_place(&mut coarse);
            spectra.push((p, coarse, fine_all));
        }

        let two_s = 2 * self.sparsity;
        let mut votes: HashMap<i64, usize> = HashMap::new();
        for (p, coarse, fine_all) in &spectra {
            let p = *p;
            let bins = largest(coarse.iter().enumerate().map(|(h, &c)| (h as i64, c)), two_s);
            for &h in bins.keys() {
                let mut parts = vec![(h as u64, p)];
                for (qi, &q) in self.crt_primes.iter().enumerate() {
                    let fine = &fine_all[qi];
                    let mut best = (0u64, T::neg_infinity());
                    for mq in 0..q {
                        let v = fine[(h as u64 + p * mq) as usize].norm();
                        if v > best.1 {
                            best = (mq, v);
                        }
                    }
                    parts.push(((h as u64 + p * best.0) % q, q));
                }
                let (x, modulus) = crt(&parts).ok_or_else(|| Error::Size("CRT modulus overflow".into()))?;
                let w = fold_signed(x, modulus);
                if let Some(w) = w.filter(|&w| band_contains(self.bandwidth, w)) {
                    *votes.entry(w).or_insert(0) += 1;
                }
            }
        }

        let k = spectra.len();
        let mut winners: Vec<i64> = votes.into_iter().filter(|&(_, v)| 2 * v > k).map(|(w, _)| w).collect();
        winners.sort_unstable();
        let estimates = winners.into_iter().map(|w| {
            let mut re = Vec::new();
            let mut im = Vec::new();
            for (p, coarse, fine_all) in &spectra {
                let c = coarse[(w as i128).rem_euclid(*p as i128) as usize];
                re.push(c.re);
                im.push(c.im);
                for (qi, &q) in self.crt_primes.iter().enumerate() {
                    let n = (*p * q) as i128;
                    let c = fine_all[qi][(w as i128).rem_euclid(n) as usize];
                    re.push(c.re);
                    im.push(c.im);
                }
            }
            let est = Complex::new(median(&mut re), median(&mut im));
            (w, if est.re.is_nan() || est.im.is_nan() { zero } else { est })
        });
        Ok(largest(estimates, two_s))
    }
}

// Smallest primes 2, 3, 5, ... whose product reaches `target`.
fn covering_primes(target: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut prod: u128 = 1;
    let mut q = 2;
    while prod < target as u128 {
        out.push(q);
        prod *= q as u128;
        q = next_prime(q + 1);
    }
    out
}

fn fold_signed(x: u128, modulus: u128) -> Option<i64> {
    if modulus > i128::MAX as u128 || modulus > u64::MAX as u128 {
        return None;
    }
    Some(fold_to_band(x as i128, modulus as u64))
}

fn median<T: Real>(v: &mut [T]) -> T {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let n = v.len();
    if n == 0 {
        return T::zero();
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / T::of(2.0)
    }
}

#[cfg(test)]
mod tests {
    use super::super::{run_sft, UnivariatePolynomial};
    use super::*;

    fn poly(terms: &[(i64, f64, f64)]) -> UnivariatePolynomial<f64> {
        UnivariatePolynomial { terms: terms.iter().map(|&(w, a, b)| (w, Complex::new(a, b))).collect() }
    }

    #[test]
    fn plan_covers_bandwidth() {
        for (s, m) in [(1usize, 3u64), (3, 101), (5, 4001), (10, 2_000_000_001)] {
            let req = SftRequest::new(s, m, SftVariant::SublinearDeterministic);
            let plan = SublinearPlan::new(&req).unwrap();
            let qprod: u128 = plan.crt_primes().iter().map(|&q| q as u128).product();
            for &p in plan.sampling_primes() {
                assert!(p as u128 * qprod >= m as u128);
                assert!(plan.crt_primes().iter().all(|&q| q < p));
            }
        }
    }

    #[test]
    fn deterministic_exact_recovery() {
        let mut f = poly(&[(-40, 1.0, 0.5), (7, -0.3, 0.2), (49, 0.0, -2.0), (50, 0.7, 0.7)]);
        let req = SftRequest::new(4, 101, SftVariant::SublinearDeterministic);
        let out = run_sft(&req, &mut f).unwrap();
        assert_eq!(out.sample_count, SublinearPlan::new(&req).unwrap().sample_count());
        assert_eq!(out.coefficients.len(), 4);
        for (w, c) in &f.terms {
            assert!((out.get(*w) - c).norm() < 1e-10, "{w}");
        }
    }

    #[test]
    fn large_band() {
        let m = 16_007_206_401u64;
        let mut f = poly(&[(-7_000_000_123, 1.0, 0.0), (12_345, 0.0, 1.0), (8_003_603_200, 0.5, -0.5)]);
        let mut req = SftRequest::new(3, m, SftVariant::SublinearMonteCarlo);
        req.seed = 11;
        let out = run_sft(&req, &mut f).unwrap();
        for (w, c) in &f.terms {
            assert!((out.get(*w) - c).norm() < 1e-8, "{w}");
        }
    }
}

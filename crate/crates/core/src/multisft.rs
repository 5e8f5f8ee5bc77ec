//! Multivariate sparse recovery from univariate SFTs along a rank-1 lattice.
//!
//! [`phase_encode`] recovers each coordinate `k_l` from the phase shift the
//! operator `S_{l,1/N}` applies to a coefficient. [`two_dim_dft`] instead
//! fixes coordinate `l` at `j/N`, runs one SFT per row and unmixes the rows
//! with a length-`N` transform.

use crate::arith::{fold_to_window, mul_mod};
use crate::error::{check_dim, invalid, Error, Result};
use crate::fft::Transformer;
use crate::index_sets::{FrequencySet, MultiIndex};
use crate::lattice::{BandwidthMethod, Rank1Lattice};
use crate::sampling::{SampleStream, Sampler};
use crate::scalar::Real;
use crate::signals::FourierTruth;
use crate::spectrum::SparseSpectrum;
use crate::usft::{run_sft, Rational, SftOutput, SftRequest, SftVariant, UnivariateOracle};
use num_complex::Complex;
use rayon::prelude::*;
use std::collections::HashMap;

/// Which univariate band the SFTs work on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BandwidthMode {
    /// Lattice mode for the dense transform, exact scan for the sublinear ones.
    Auto,
    /// `B_M` with `M` the lattice size; frequencies are compared modulo `M`.
    Lattice,
    /// A band wide enough to hold every `k.z` unaliased; frequencies compared exactly.
    Widened(BandwidthMethod),
}

#[derive(Clone, Debug)]
pub struct RecoveryConfig {
    /// Template for every SFT call; bandwidth and seed are set per call.
    pub sft: SftRequest,
    /// Drop reconstructed frequencies outside the set.
    pub check_membership: bool,
    pub bandwidth: BandwidthMode,
    /// Must equal the set's expansion when given.
    pub shift_denominator: Option<u64>,
    /// Check the reconstructing property (with projections for the
    /// two-dimensional method) before sampling.
    pub verify_lattice: bool,
    /// Split the failure probability evenly over all SFT calls.
    pub union_bound: bool,
    /// Run the independent SFT calls on the rayon pool.
    pub parallel: bool,
}

impl RecoveryConfig {
    pub fn new(sft: SftRequest) -> Self {
        RecoveryConfig {
            sft,
            check_membership: true,
            bandwidth: BandwidthMode::Auto,
            shift_denominator: None,
            verify_lattice: false,
            union_bound: false,
            parallel: true,
        }
    }
}

/// Output of a multivariate recovery.
#[derive(Clone, Debug)]
pub struct Recovery<T> {
    pub spectrum: SparseSpectrum<T>,
    /// Sum of all per-call sample counts.
    pub sample_count: u64,
    pub per_call_samples: Vec<u64>,
    /// Largest `|N arg(v^l/v) / 2 pi - round(.)|` over accepted frequencies
    /// (phase encoding only).
    pub max_rounding_offset: f64,
}

struct Band {
    size: u64,
    shift: i64,
    modular: bool,
}

fn resolve_mode(cfg: &RecoveryConfig) -> BandwidthMode {
    match cfg.bandwidth {
        BandwidthMode::Auto if cfg.sft.variant == SftVariant::DenseReference => BandwidthMode::Lattice,
        BandwidthMode::Auto => BandwidthMode::Widened(BandwidthMethod::ExactScan),
        m => m,
    }
}

fn check_inputs<T: Real>(sampler: &Sampler<'_, T>, set: &FrequencySet, lat: &Rank1Lattice, cfg: &RecoveryConfig) -> Result<()> {
    check_dim(set.dim(), sampler.dim())?;
    check_dim(set.dim(), lat.dim())?;
    if let Some(n) = cfg.shift_denominator {
        if n != set.expansion() {
            return Err(invalid(format!("shift denominator {n} differs from expansion {}", set.expansion())));
        }
    }
    if cfg.sft.variant.is_sublinear() && resolve_mode(cfg) == BandwidthMode::Lattice {
        return Err(invalid("sublinear SFTs sample off the lattice and need a widened bandwidth"));
    }
    Ok(())
}

fn call_request(cfg: &RecoveryConfig, band: u64, idx: u64, calls: u64) -> SftRequest {
    let mut r = cfg.sft.clone();
    r.bandwidth = band;
    r.seed = cfg.sft.seed ^ idx;
    if cfg.union_bound {
        r.failure_probability = cfg.sft.failure_probability / calls as f64;
    }
    r
}

// Univariate restriction t -> f(x(t)) with exact rational coordinates.
struct LatticeLine<'s, 'a, T: Real> {
    stream: SampleStream<'s, 'a, T>,
    z: &'s [u64],
    shift: Option<(usize, u64)>,
    fixed: Option<(usize, u64, u64)>,
    modulation: i64,
    x: Vec<T>,
}

impl<T: Real> UnivariateOracle<T> for LatticeLine<'_, '_, T> {
    fn sample(&mut self, t: Rational) -> Result<Complex<T>> {
        let den = t.den;
        for l in 0..self.z.len() {
            self.x[l] = match (self.fixed, self.shift) {
                (Some((fl, j, n)), _) if fl == l => T::ratio(j, n),
                (_, Some((sl, n))) if sl == l => {
                    let r = mul_mod(t.num, self.z[l], den);
                    let small = den.checked_mul(n).zip(r.checked_mul(n).and_then(|v| v.checked_add(den)));
                    match small {
                        Some((big, num)) => T::ratio(num % big, big),
                        None => {
                            let big = den as u128 * n as u128;
                            let num = (r as u128 * n as u128 + den as u128) % big;
                            T::of(num as f64 / big as f64)
                        }
                    }
                }
                _ => T::ratio(mul_mod(t.num, self.z[l], den), den),
            };
        }
        let v = self.stream.eval(&self.x)?;
        if self.modulation == 0 {
            return Ok(v);
        }
        let r = ((self.modulation as i128) * (t.num as i128)).rem_euclid(den as i128) as u64;
        let ph = T::TAU() * T::ratio(r, den);
        Ok(v * Complex::new(ph.cos(), ph.sin()))
    }
}

struct CallSpec {
    request: SftRequest,
    shift: Option<(usize, u64)>,
    fixed: Option<(usize, u64, u64)>,
    modulation: i64,
}

fn run_calls<T: Real>(
    sampler: &Sampler<'_, T>,
    lat: &Rank1Lattice,
    specs: &[CallSpec],
    parallel: bool,
) -> Result<Vec<SftOutput<T>>> {
    let z = lat.generating_vector();
    let run = |(idx, spec): (usize, &CallSpec)| -> Result<SftOutput<T>> {
        let mut line = LatticeLine {
            stream: sampler.stream(idx as u64),
            z,
            shift: spec.shift,
            fixed: spec.fixed,
            modulation: spec.modulation,
            x: vec![T::zero(); z.len()],
        };
        run_sft(&spec.request, &mut line)
    };
    if parallel {
        specs.par_iter().enumerate().map(run).collect()
    } else {
        specs.iter().enumerate().map(run).collect()
    }
}

fn accept(k: &[i64], w: i64, lat: &Rank1Lattice, band: &Band, set: &FrequencySet, check: bool) -> bool {
    let ok = if band.modular {
        lat.alias(k) == (w as i128).rem_euclid(lat.size() as i128) as u64
    } else {
        lat.dot(k) + band.shift as i128 == w as i128
    };
    ok && (!check || set.contains_unchecked(k))
}

// A wider symmetric band still holds every shifted k.z; the SFT needs 2s <= M.
fn widened(m_tilde: u64, shift: i64, s: usize) -> Band {
    Band { size: m_tilde.max(2 * s as u64 + 1), shift, modular: false }
}

fn base_band(lat: &Rank1Lattice, set: &FrequencySet, mode: BandwidthMode, s: usize) -> Result<Band> {
    Ok(match mode {
        BandwidthMode::Widened(m) => {
            let e = lat.bandwidth_estimate(set, m)?;
            widened(e.m_tilde, e.shift, s)
        }
        _ => Band { size: lat.size(), shift: 0, modular: true },
    })
}

/// Phase-encoding recovery: `1 + d` univariate SFTs.
pub fn phase_encode<T: Real>(
    sampler: &Sampler<'_, T>,
    set: &FrequencySet,
    lat: &Rank1Lattice,
    cfg: &RecoveryConfig,
) -> Result<Recovery<T>> {
    check_inputs(sampler, set, lat, cfg)?;
    if cfg.verify_lattice && !lat.is_reconstructing(set)? {
        return Err(Error::Precondition("lattice is not reconstructing for the frequency set".into()));
    }
    let d = set.dim();
    let n = set.expansion();
    let band = base_band(lat, set, resolve_mode(cfg), cfg.sft.sparsity)?;
    let calls = d as u64 + 1;
    let specs: Vec<CallSpec> = (0..=d)
        .map(|i| CallSpec {
            request: call_request(cfg, band.size, i as u64, calls),
            shift: if i == 0 { None } else { Some((i - 1, n)) },
            fixed: None,
            modulation: band.shift,
        })
        .collect();
    let outs = run_calls(sampler, lat, &specs, cfg.parallel)?;

    let mut spectrum = SparseSpectrum::new(d);
    let mut max_off: f64 = 0.0;
    let mut k = vec![0i64; d];
    for (&w, &v) in &outs[0].coefficients {
        let mut off: f64 = 0.0;
        for l in 0..d {
            let ratio = outs[l + 1].get(w) / v;
            let raw = n as f64 * ratio.arg().as_f64() / std::f64::consts::TAU;
            let r = raw.round();
            off = off.max((raw - r).abs());
            k[l] = fold_to_window(r as i128, set.window_low(l), n);
        }
        if accept(&k, w, lat, &band, set, cfg.check_membership) {
            max_off = max_off.max(off);
            spectrum.add(MultiIndex::from(k.as_slice()), v)?;
        }
    }
    let per_call_samples: Vec<u64> = outs.iter().map(|o| o.sample_count).collect();
    Ok(Recovery {
        spectrum,
        sample_count: per_call_samples.iter().sum(),
        per_call_samples,
        max_rounding_offset: max_off,
    })
}

/// Two-dimensional DFT recovery: `1 + d N` univariate SFTs.
pub fn two_dim_dft<T: Real>(
    sampler: &Sampler<'_, T>,
    set: &FrequencySet,
    lat: &Rank1Lattice,
    cfg: &RecoveryConfig,
) -> Result<Recovery<T>> {
    check_inputs(sampler, set, lat, cfg)?;
    if cfg.verify_lattice && !lat.is_reconstructing_with_projections(set)? {
        return Err(Error::Precondition(
            "lattice is not reconstructing for the frequency set and all its projections".into(),
        ));
    }
    let d = set.dim();
    let n = set.expansion();
    let mode = resolve_mode(cfg);
    let band = base_band(lat, set, mode, cfg.sft.sparsity)?;
    let row_bands: Vec<Band> = (0..d)
        .map(|l| {
            Ok(match mode {
                BandwidthMode::Widened(m) => {
                    let e = lat.projected_bandwidth_estimate(set, l, m)?;
                    widened(e.m_tilde, e.shift, cfg.sft.sparsity)
                }
                _ => Band { size: lat.size(), shift: 0, modular: true },
            })
        })
        .collect::<Result<_>>()?;
    let calls = 1 + d as u64 * n;
    let mut specs = vec![CallSpec {
        request: call_request(cfg, band.size, 0, calls),
        shift: None,
        fixed: None,
        modulation: band.shift,
    }];
    for (l, rb) in row_bands.iter().enumerate() {
        for j in 0..n {
            let idx = 1 + l as u64 * n + j;
            specs.push(CallSpec {
                request: call_request(cfg, rb.size, idx, calls),
                shift: None,
                fixed: Some((l, j, n)),
                modulation: rb.shift,
            });
        }
    }
    let outs = run_calls(sampler, lat, &specs, cfg.parallel)?;

    let m = lat.size() as i128;
    let zero = Complex::new(T::zero(), T::zero());
    let mut fft = Transformer::<T>::new();
    // per dimension: key -> [(w', h, value)] sorted by (w', h)
    type Table<T> = HashMap<i128, Vec<(i64, i64, Complex<T>)>>;
    let mut tables: Vec<Table<T>> = Vec::with_capacity(d);
    for (l, rb) in row_bands.iter().enumerate() {
        let rows = &outs[1 + l * n as usize..1 + (l + 1) * n as usize];
        let mut cols: Vec<i64> = rows.iter().flat_map(|r| r.coefficients.keys().copied()).collect();
        cols.sort_unstable();
        cols.dedup();
        let zl = lat.generating_vector()[l] as i128;
        let mut table: HashMap<i128, Vec<(i64, i64, Complex<T>)>> = HashMap::new();
        let mut buf = vec![zero; n as usize];
        for &wp in &cols {
            for (j, r) in rows.iter().enumerate() {
                buf[j] = r.get(wp);
            }
            fft.forward_in_place(&mut buf);
            for (hi, &val) in buf.iter().enumerate() {
                let h = fold_to_window(hi as i128, set.window_low(l), n);
                let key = if rb.modular {
                    (h as i128 * zl + wp as i128).rem_euclid(m)
                } else {
                    h as i128 * zl + wp as i128 - rb.shift as i128
                };
                table.entry(key).or_default().push((wp, h, val));
            }
        }
        for v in table.values_mut() {
            v.sort_by_key(|e| (e.0, e.1));
        }
        tables.push(table);
    }

    let mut spectrum = SparseSpectrum::new(d);
    let mut k = vec![0i64; d];
    'outer: for (&w, &v) in &outs[0].coefficients {
        let target = if band.modular { (w as i128).rem_euclid(m) } else { w as i128 - band.shift as i128 };
        for l in 0..d {
            let Some(cands) = tables[l].get(&target) else { continue 'outer };
            let mut best: Option<(T, i64)> = None;
            for &(_, h, val) in cands {
                let dist = (v - val).norm();
                if best.is_none_or(|(bd, _)| dist < bd) {
                    best = Some((dist, h));
                }
            }
            k[l] = best.expect("non-empty candidate list").1;
        }
        if accept(&k, w, lat, &band, set, cfg.check_membership) {
            spectrum.add(MultiIndex::from(k.as_slice()), v)?;
        }
    }
    let per_call_samples: Vec<u64> = outs.iter().map(|o| o.sample_count).collect();
    Ok(Recovery { spectrum, sample_count: per_call_samples.iter().sum(), per_call_samples, max_rounding_offset: 0.0 })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ApproximationError {
    /// `||b - c||_2 / ||c||_2` over `Z^d`.
    pub rel_l2_coeff: f64,
    /// `sqrt(||f||^2 - sum_{supp b} |c_k|^2 + sum_{supp b} |b_k - c_k|^2) / ||f||`.
    pub rel_l2_func: f64,
}

/// Relative coefficient and function-space errors of `b` against `truth`.
pub fn approximation_error<T: Real>(b: &SparseSpectrum<T>, truth: &dyn FourierTruth<T>) -> ApproximationError {
    let norm_sq = truth.norm_sq().as_f64();
    let mut on_supp = 0.0;
    let mut diff = 0.0;
    for (k, bk) in b.iter() {
        let c = truth.coefficient(k);
        on_supp += c.norm_sqr().as_f64();
        diff += (*bk - c).norm_sqr().as_f64();
    }
    let func_abs = (norm_sq - on_supp + diff).max(0.0).sqrt();
    let coeff_abs = match truth.finite_spectrum() {
        Some(c) => b.distance(c).as_f64(),
        None => func_abs,
    };
    let scale = if norm_sq > 0.0 { norm_sq.sqrt() } else { 1.0 };
    ApproximationError { rel_l2_coeff: coeff_abs / scale, rel_l2_func: func_abs / scale }
}

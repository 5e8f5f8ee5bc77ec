//! Sparse Fourier approximation of multivariate periodic functions from
//! samples along reconstructing rank-1 lattices.
//!
//! A function `f` on `T^d` whose coefficients concentrate on a frequency set
//! `I` is restricted to the line `t -> f(t z)`. A univariate sparse FFT finds
//! the energetic frequencies `k.z` of that restriction, and either phase
//! encoding ([`phase_encode`]) or a two-dimensional DFT ([`two_dim_dft`])
//! recovers the multivariate index `k` behind each of them.
//!
//! Numeric code is generic over [`Real`] (`f32` or `f64`); the aliases below
//! fix it to `f64`.

pub mod arith;
pub mod bench;
pub mod error;
pub mod fft;
pub mod index_sets;
pub mod lattice;
pub mod multisft;
pub mod sampling;
pub mod scalar;
pub mod signals;
pub mod spectrum;
pub mod usft;

pub use error::{Error, Result};
pub use index_sets::{FrequencySet, MultiIndex, SetKind};
pub use lattice::{BandwidthEstimate, BandwidthMethod, CbcOptions, CbcSearch, Rank1Lattice};
pub use multisft::{
    approximation_error, phase_encode, two_dim_dft, ApproximationError, BandwidthMode, Recovery, RecoveryConfig,
};
pub use sampling::{NoiseModel, Sampler, Shifted, Signal};
pub use scalar::Real;
pub use signals::{BSplineFunction, BSplineTerm, FourierTruth, TrigPolynomial};
pub use usft::{error_profile, run_sft, SftErrorProfile, SftOutput, SftRequest, SftVariant, SignalStats};

pub use num_complex::Complex;

pub type Complex64 = num_complex::Complex<f64>;
pub type Spectrum = spectrum::SparseSpectrum<f64>;
pub type Polynomial = signals::TrigPolynomial<f64>;
pub type Noise = sampling::NoiseModel<f64>;
pub type Output = usft::SftOutput<f64>;
pub type Recovered = multisft::Recovery<f64>;
pub type DenseSpectrum64 = fft::DenseSpectrum<f64>;

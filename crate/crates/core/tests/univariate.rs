use latticefourier::fft::{aliased_spectrum, dft, idft, restrict_to_band, DenseSpectrum};
use latticefourier::usft::{significant_set, FnOracle, Rational, SublinearPlan, UnivariatePolynomial};
use latticefourier::{error_profile, run_sft, Complex, SftRequest, SftVariant, SignalStats};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::TAU;

type C = Complex<f64>;

fn naive_dft(a: &[C]) -> Vec<C> {
    let m = a.len();
    (0..m)
        .map(|w| {
            a.iter()
                .enumerate()
                .map(|(j, &x)| x * C::from_polar(1.0, -TAU * ((w * j) % m) as f64 / m as f64))
                .sum::<C>()
                / m as f64
        })
        .collect()
}

fn band(m: u64) -> std::ops::RangeInclusive<i64> {
    -(m.div_ceil(2) as i64) + 1..=(m / 2) as i64
}

// distinct frequencies from `range`, coefficients of modulus in [1, 2]
fn random_terms(rng: &mut ChaCha8Rng, s: usize, range: std::ops::RangeInclusive<i64>) -> Vec<(i64, C)> {
    let mut out: Vec<(i64, C)> = Vec::new();
    while out.len() < s {
        let w = rng.random_range(range.clone());
        if out.iter().all(|&(v, _)| v != w) {
            out.push((w, C::from_polar(rng.random_range(1.0..2.0), rng.random_range(0.0..TAU))));
        }
    }
    out
}

fn max_err(a: &[C], b: &[C]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

#[test]
fn dft_examples() {
    let ones = vec![C::new(1.0, 0.0); 12];
    let f = dft(&ones);
    assert!((f.get(0) - C::new(1.0, 0.0)).norm() < 1e-15);
    assert!((1..12).all(|w| f.get(w).norm() < 1e-15));

    let m = 17u64;
    let p = UnivariatePolynomial { terms: vec![(m as i64 + 1, C::new(1.0, 0.0))] };
    let x: Vec<C> = (0..m).map(|j| p.eval(Rational::new(j, m))).collect();
    let f = dft(&x);
    assert!((f.get(1) - C::new(1.0, 0.0)).norm() < 1e-14);
    assert!((f.get(-1 + m as i64) - f.get(-1)).norm() == 0.0);

    let a = aliased_spectrum(&[(0, C::new(1.0, 0.0)), (m as i64, C::new(-1.0, 0.0))], m);
    assert_eq!(a.get(0), C::new(0.0, 0.0));
    assert!(restrict_to_band(&[(m as i64, C::new(1.0, 0.0))], m).is_empty());
}

#[test]
fn dft_matches_naive_on_all_small_lengths() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for m in (1..=300).chain([509, 1024, 2039, 4096]) {
        let x: Vec<C> = (0..m).map(|_| C::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
        let want = naive_dft(&x);
        let got = dft(&x);
        let scale = want.iter().map(|c| c.norm()).fold(0.0, f64::max);
        assert!(max_err(got.as_slice(), &want) <= 1e-12 * scale.max(1e-300), "M = {m}");
        let back = idft(&got);
        assert!(max_err(&back, &x) < 1e-12, "inverse M = {m}");
    }
}

#[test]
fn single_precision_transform() {
    let x: Vec<Complex<f32>> = (0..97).map(|j| Complex::new((j as f32 * 0.37).sin(), (j as f32).cos())).collect();
    let want = naive_dft(&x.iter().map(|c| C::new(c.re as f64, c.im as f64)).collect::<Vec<_>>());
    let got: DenseSpectrum<f32> = dft(&x);
    for (g, w) in got.as_slice().iter().zip(&want) {
        assert!((C::new(g.re as f64, g.im as f64) - w).norm() < 1e-5);
    }
}

#[test]
fn dense_examples() {
    let p = UnivariatePolynomial { terms: vec![(5, C::new(3.0, 0.0))] };
    let mut oracle = p.clone();
    let out = run_sft(&SftRequest::new(1, 16, SftVariant::DenseReference), &mut oracle).unwrap();
    assert_eq!(out.sample_count, 16);
    assert_eq!(out.coefficients.len(), 1);
    assert!((out.get(5) - C::new(3.0, 0.0)).norm() < 1e-14);

    for variant in [SftVariant::DenseReference, SftVariant::SublinearDeterministic, SftVariant::SublinearMonteCarlo] {
        let mut zero = FnOracle(|_| C::new(0.0, 0.0));
        let out = run_sft(&SftRequest::new(3, 101, variant), &mut zero).unwrap();
        assert!(out.coefficients.is_empty(), "{variant:?}");
    }
    assert!(run_sft(&SftRequest::new(9, 17, SftVariant::DenseReference), &mut FnOracle(|_| C::new(0.0, 0.0))).is_err());
}

#[test]
fn error_profile_examples() {
    let s = 4;
    let req = SftRequest::new(s, 101, SftVariant::SublinearDeterministic);
    let zero = error_profile(&req, &SignalStats::default());
    assert_eq!((zero.tau, zero.eta_inf, zero.eta_2), (0.0, 0.0, 0.0));
    let tail = error_profile(&req, &SignalStats { best_s_tail_l1: s as f64, ..Default::default() });
    assert!((tail.tau - (4.0 + 2.0 * 2f64.sqrt())).abs() < 1e-14);
    let noise = error_profile(&req, &SignalStats { noise_inf: 0.25, ..Default::default() });
    assert!((noise.eta_inf - 2f64.sqrt() * 0.25).abs() < 1e-15);
    assert!(noise.eta_inf < noise.tau);
}

#[test]
fn significant_set_examples() {
    let x = [C::new(3.0, 0.0), C::new(1.0, 0.0), C::new(0.5, 0.0)];
    assert_eq!(significant_set(&x, 1.0), vec![0, 1]);
    assert_eq!(significant_set(&x, 0.0), vec![0, 1, 2]);
}

#[test]
fn exactly_sparse_recovery() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for trial in 0..40 {
        let m = [101u64, 257, 1000, 1023][trial % 4];
        let s = rng.random_range(1..=6);
        let count = rng.random_range(1..=s);
        let terms = random_terms(&mut rng, count, band(m));
        let poly = UnivariatePolynomial { terms: terms.clone() };
        for variant in [SftVariant::DenseReference, SftVariant::SublinearDeterministic] {
            let mut oracle = poly.clone();
            let out = run_sft(&SftRequest::new(s, m, variant), &mut oracle).unwrap();
            assert!(out.coefficients.len() <= 2 * s);
            assert_eq!(out.coefficients.len(), terms.len(), "{variant:?} M={m}");
            for &(w, c) in &terms {
                assert!((out.get(w) - c).norm() < 1e-10, "{variant:?} M={m} w={w}");
            }
        }
    }
}

#[test]
fn deterministic_variants_are_bit_reproducible() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let poly = UnivariatePolynomial { terms: random_terms(&mut rng, 4, band(999)) };
    for variant in [SftVariant::DenseReference, SftVariant::SublinearDeterministic] {
        let req = SftRequest { seed: 1, ..SftRequest::new(4, 999, variant) };
        let other = SftRequest { seed: 2, ..req.clone() };
        let a = run_sft(&req, &mut poly.clone()).unwrap();
        let b = run_sft(&other, &mut poly.clone()).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn monte_carlo_reproducible_given_seed() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let m = 4001;
    let poly = UnivariatePolynomial { terms: random_terms(&mut rng, 5, band(m)) };
    let req = |seed| SftRequest { seed, ..SftRequest::new(5, m, SftVariant::SublinearMonteCarlo) };
    let a = run_sft(&req(9), &mut poly.clone()).unwrap();
    let b = run_sft(&req(9), &mut poly.clone()).unwrap();
    assert_eq!(a, b);
    let plans: Vec<_> = (0..8).map(|s| SublinearPlan::new(&req(s)).unwrap().sampling_primes().to_vec()).collect();
    assert!(plans.iter().any(|p| p != &plans[0]), "seed has no effect on the drawn primes");
}

// Pseudo-random perturbation of modulus at most `eps`, a fixed function of t.
fn perturbation(t: Rational, seed: u64, eps: f64) -> C {
    let mut r = ChaCha8Rng::seed_from_u64(seed ^ t.num.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ t.den.rotate_left(32));
    C::from_polar(eps * r.random_range(0.0..1.0), r.random_range(0.0..TAU))
}

#[test]
fn identification_and_linf_under_perturbation() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for trial in 0..30 {
        let m = [401u64, 1009, 2048][trial % 3];
        let s = 4;
        let mut terms = random_terms(&mut rng, s + 3, band(m));
        // the last three terms form a small tail
        for t in &mut terms[s..] {
            t.1 *= 1e-3;
        }
        let eps = [1e-4, 1e-3, 1e-2][trial % 3];
        let poly = UnivariatePolynomial { terms: terms.clone() };
        let stats = SignalStats {
            best_s_tail_l1: terms[s..].iter().map(|t| t.1.norm()).sum(),
            out_of_band_l1: 0.0,
            noise_inf: eps,
            best_2s_tail_l2: None,
        };
        for variant in [SftVariant::DenseReference, SftVariant::SublinearDeterministic] {
            let req = SftRequest::new(s, m, variant);
            let prof = error_profile(&req, &stats);
            let mut oracle = FnOracle(|t: Rational| poly.eval(t) + perturbation(t, trial as u64, eps));
            let out = run_sft(&req, &mut oracle).unwrap();
            assert!(out.coefficients.len() <= 2 * s);
            for &(w, c) in &terms {
                if c.norm() > prof.tau {
                    assert!(out.coefficients.contains_key(&w), "{variant:?} M={m} missed {w}");
                }
            }
            for (&w, &v) in &out.coefficients {
                let truth = terms.iter().find(|t| t.0 == w).map_or(C::new(0.0, 0.0), |t| t.1);
                assert!((v - truth).norm() <= prof.eta_inf, "{variant:?} M={m} w={w}: {} > {}", (v - truth).norm(), prof.eta_inf);
            }
        }
    }
}

#[test]
fn monte_carlo_samples_grow_linearly() {
    let m = (1u64 << 26) + 1;
    let counts: Vec<u64> = [10usize, 20, 40, 80]
        .iter()
        .map(|&s| SublinearPlan::new(&SftRequest::new(s, m, SftVariant::SublinearMonteCarlo)).unwrap().sample_count())
        .collect();
    for w in counts.windows(2) {
        let r = w[1] as f64 / w[0] as f64;
        assert!(r <= 2.5, "{counts:?}");
    }
}

#[test]
fn sample_count_matches_calls() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let m = 3001;
    let poly = UnivariatePolynomial { terms: random_terms(&mut rng, 3, band(m)) };
    for variant in [SftVariant::SublinearDeterministic, SftVariant::SublinearMonteCarlo] {
        let req = SftRequest { seed: 4, ..SftRequest::new(3, m, variant) };
        let mut calls = 0u64;
        let mut oracle = FnOracle(|t| {
            calls += 1;
            poly.eval(t)
        });
        let out = run_sft(&req, &mut oracle).unwrap();
        assert_eq!(out.sample_count, calls);
        assert_eq!(out.sample_count, SublinearPlan::new(&req).unwrap().sample_count());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn bandlimited_dft_is_restriction(m in 1u64..300, seed in any::<u64>(), s in 1usize..10) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = s.min(m as usize);
        let terms = random_terms(&mut rng, s, band(m));
        let poly = UnivariatePolynomial { terms: terms.clone() };
        let x: Vec<C> = (0..m).map(|j| poly.eval(Rational::new(j, m))).collect();
        let f = dft(&x);
        let r = restrict_to_band(&terms, m);
        let a = aliased_spectrum(&terms, m);
        for w in band(m) {
            let want = r.get(&w).copied().unwrap_or(C::new(0.0, 0.0));
            prop_assert!((f.get(w) - want).norm() <= 1e-12 * 2.0 * s as f64);
            prop_assert!((a.get(w) - want).norm() == 0.0);
        }
    }

    #[test]
    fn out_of_band_dft_is_aliased(m in 1u64..300, seed in any::<u64>(), s in 1usize..10) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let terms = random_terms(&mut rng, s, -5000..=5000);
        let poly = UnivariatePolynomial { terms: terms.clone() };
        let x: Vec<C> = (0..m).map(|j| poly.eval(Rational::new(j, m))).collect();
        let f = dft(&x);
        // folded by hand
        let mut fold = vec![C::new(0.0, 0.0); m as usize];
        for &(w, c) in &terms {
            fold[w.rem_euclid(m as i64) as usize] += c;
        }
        prop_assert!(max_err(f.as_slice(), &fold) <= 1e-12 * 2.0 * s as f64);
        prop_assert!(max_err(aliased_spectrum(&terms, m).as_slice(), &fold) <= 1e-15 * s as f64);
    }

    #[test]
    fn parseval(x in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..500)) {
        let x: Vec<C> = x.into_iter().map(|(a, b)| C::new(a, b)).collect();
        let lhs = x.iter().map(|c| c.norm_sqr()).sum::<f64>() / x.len() as f64;
        let rhs = dft(&x).as_slice().iter().map(|c| c.norm_sqr()).sum::<f64>();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.max(1e-300));
    }

    #[test]
    fn output_support_at_most_2s(m in 20u64..400, s in 1usize..5, seed in any::<u64>(), variant in 0usize..3) {
        let variant = [SftVariant::DenseReference, SftVariant::SublinearDeterministic, SftVariant::SublinearMonteCarlo][variant];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // many more terms than 2s, so truncation has to kick in
        let poly = UnivariatePolynomial { terms: random_terms(&mut rng, 4 * s + 3, band(m)) };
        let out = run_sft(&SftRequest { seed, ..SftRequest::new(s, m, variant) }, &mut poly.clone()).unwrap();
        prop_assert!(out.coefficients.len() <= 2 * s);
        prop_assert!(out.coefficients.keys().all(|w| band(m).contains(w)));
    }

    #[test]
    fn significant_set_bound(x in proptest::collection::vec(-3.0f64..3.0, 1..60), s in 1usize..8) {
        let x: Vec<C> = x.into_iter().map(|v| C::new(v, 0.0)).collect();
        let mut mags: Vec<f64> = x.iter().map(|c| c.norm()).collect();
        mags.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let tail1: f64 = mags.iter().skip(s).sum();
        let tail2_2s = mags.iter().skip(2 * s).map(|v| v * v).sum::<f64>().sqrt();
        let tau = tail1 / s as f64;
        if tau > 0.0 {
            let sig = significant_set(&x, tau);
            prop_assert!(sig.len() <= 2 * s);
            let rest = x.iter().enumerate().filter(|(i, _)| !sig.contains(i)).map(|(_, c)| c.norm_sqr()).sum::<f64>().sqrt();
            prop_assert!(rest <= tail2_2s + tau * ((2 * s) as f64).sqrt() + 1e-12);
        }
    }
}

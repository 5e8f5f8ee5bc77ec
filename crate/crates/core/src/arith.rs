//! Integer helpers: frequency bands, primes, modular inverses, CRT.

/// Lowest element of the band `B_n = (-ceil(n/2), floor(n/2)]`.
#[inline]
pub fn band_low(n: u64) -> i64 {
    -(n.div_ceil(2) as i64) + 1
}

/// Highest element of `B_n`.
#[inline]
pub fn band_high(n: u64) -> i64 {
    (n / 2) as i64
}

#[inline]
pub fn band_contains(n: u64, x: i64) -> bool {
    x >= band_low(n) && x <= band_high(n)
}

/// Representative of `x mod n` inside `B_n`.
#[inline]
pub fn fold_to_band(x: i128, n: u64) -> i64 {
    fold_to_window(x, band_low(n), n)
}

/// Representative of `x mod n` inside `[low, low + n)`.
#[inline]
pub fn fold_to_window(x: i128, low: i64, n: u64) -> i64 {
    let n = n as i128;
    let r = (x - low as i128).rem_euclid(n);
    (r + low as i128) as i64
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Inverse of `a` modulo `m`, if `gcd(a, m) = 1`.
pub fn mod_inverse(a: u64, m: u64) -> Option<u64> {
    if m == 1 {
        return Some(0);
    }
    let (mut old_r, mut r) = (a as i128 % m as i128, m as i128);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
    }
    if old_r != 1 {
        return None;
    }
    Some(old_s.rem_euclid(m as i128) as u64)
}

#[inline]
pub fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    match a.checked_mul(b) {
        Some(p) => p % m,
        None => ((a as u128 * b as u128) % m as u128) as u64,
    }
}

fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut r = 1 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = mul_mod(r, b, m);
        }
        b = mul_mod(b, b, m);
        e >>= 1;
    }
    r
}

/// Deterministic Miller-Rabin for all `u64`.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut r = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        r += 1;
    }
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..r {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Smallest prime `>= n`.
pub fn next_prime(n: u64) -> u64 {
    let mut c = n.max(2);
    while !is_prime(c) {
        c += 1;
    }
    c
}

/// Chinese remaindering of `(residue, modulus)` pairs with pairwise coprime moduli.
/// Returns the residue modulo the product, or `None` on overflow.
pub fn crt(parts: &[(u64, u64)]) -> Option<(u128, u128)> {
    let mut x: u128 = 0;
    let mut m: u128 = 1;
    for &(r, q) in parts {
        let q128 = q as u128;
        let inv = mod_inverse((m % q128) as u64, q)? as u128;
        let diff = ((r as u128 % q128) + q128 - x % q128) % q128;
        let t = diff * inv % q128;
        x = x.checked_add(m.checked_mul(t)?)?;
        m = m.checked_mul(q128)?;
    }
    Some((x, m))
}

/// SplitMix64 finaliser, used to derive independent seeds.
#[inline]
pub fn mix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Combines several words into one seed.
pub fn mix_seed(parts: &[u64]) -> u64 {
    parts.iter().fold(0x6A09_E667_F3BC_C908u64, |acc, &p| mix64(acc ^ mix64(p)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn band_bounds() {
        assert_eq!((band_low(5), band_high(5)), (-2, 2));
        assert_eq!((band_low(4), band_high(4)), (-1, 2));
        assert_eq!((band_low(1), band_high(1)), (0, 0));
        assert_eq!(fold_to_band(3, 5), -2);
        assert_eq!(fold_to_band(-3, 4), 1);
    }

    #[test]
    fn primes_match_sieve() {
        let n = 5000usize;
        let mut sieve = vec![true; n];
        sieve[0] = false;
        sieve[1] = false;
        for i in 2..n {
            if sieve[i] {
                let mut j = i * i;
                while j < n {
                    sieve[j] = false;
                    j += i;
                }
            }
        }
        for (i, &p) in sieve.iter().enumerate() {
            assert_eq!(is_prime(i as u64), p, "{i}");
        }
        assert!(is_prime(2_305_843_009_213_693_951));
        assert!(!is_prime(2_040_484_044));
    }

    #[test]
    fn crt_roundtrip() {
        let x = 123_456_789u128;
        let parts: Vec<(u64, u64)> = [7u64, 11, 13, 17, 19, 23].iter().map(|&q| ((x % q as u128) as u64, q)).collect();
        let (r, m) = crt(&parts).unwrap();
        assert_eq!(m, 7 * 11 * 13 * 17 * 19 * 23);
        assert_eq!(r, x % m);
    }

    #[test]
    fn inverse() {
        for m in [7u64, 12, 101] {
            for a in 1..m {
                match mod_inverse(a, m) {
                    Some(i) => assert_eq!(a * i % m, 1),
                    None => assert_ne!(gcd(a, m), 1),
                }
            }
        }
    }
}

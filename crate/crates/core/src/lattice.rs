//! Rank-1 lattices `{ j z / M mod 1 : j = 0..M-1 }`, the reconstructing-property
//! check, component-by-component construction and bandwidth estimates for
//! the univariate restriction `t -> f(t z)`.

use crate::arith::next_prime;
use crate::error::{check_dim, invalid, Error, Result};
use crate::index_sets::{FrequencySet, MultiIndex};
use crate::scalar::Real;
use std::collections::HashSet;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rank1Lattice {
    z: Vec<u64>,
    m: u64,
}

impl Rank1Lattice {
    pub fn new(z: Vec<u64>, m: u64) -> Result<Self> {
        if z.is_empty() {
            return Err(invalid("generating vector must be non-empty"));
        }
        if m == 0 {
            return Err(invalid("lattice size must be positive"));
        }
        if let Some(&bad) = z.iter().find(|&&c| c >= m) {
            return Err(invalid(format!("generator entry {bad} not below lattice size {m}")));
        }
        Ok(Rank1Lattice { z, m })
    }

    pub fn dim(&self) -> usize {
        self.z.len()
    }

    pub fn size(&self) -> u64 {
        self.m
    }

    pub fn generating_vector(&self) -> &[u64] {
        &self.z
    }

    /// Node `x_j = j z / M mod 1`.
    pub fn node<T: Real>(&self, j: u64) -> Vec<T> {
        self.z
            .iter()
            .map(|&c| T::ratio(crate::arith::mul_mod(j % self.m, c, self.m), self.m))
            .collect()
    }

    /// Exact `k . z` in 128-bit arithmetic.
    #[inline]
    pub fn dot(&self, k: &[i64]) -> i128 {
        dot_exact(k, &self.z)
    }

    /// Alias `k . z mod M`.
    #[inline]
    pub fn alias(&self, k: &[i64]) -> u64 {
        self.dot(k).rem_euclid(self.m as i128) as u64
    }

    /// Whether `k -> k . z mod M` is injective on `set`.
    pub fn is_reconstructing(&self, set: &FrequencySet) -> Result<bool> {
        check_dim(self.dim(), set.dim())?;
        set.ensure_within_cap()?;
        if set.cardinality() > self.m {
            return Ok(false);
        }
        Ok(injective_residues(set, self.m, |k| self.alias(k)))
    }

    /// Reconstructing for `set` and for every `I'_l` with coordinate `l` zeroed.
    pub fn is_reconstructing_with_projections(&self, set: &FrequencySet) -> Result<bool> {
        if !self.is_reconstructing(set)? {
            return Ok(false);
        }
        for l in 0..self.dim() {
            if !self.is_reconstructing(&set.projection_without(l)?)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Component-by-component construction. See [`CbcOptions`].
    pub fn cbc_construct(set: &FrequencySet, opts: &CbcOptions) -> Result<Self> {
        cbc(set, opts)
    }

    /// Size `M~` of a symmetric band containing every `k . z`, plus the
    /// modulation shift that recentres it.
    pub fn bandwidth_estimate(&self, set: &FrequencySet, method: BandwidthMethod) -> Result<BandwidthEstimate> {
        check_dim(self.dim(), set.dim())?;
        bandwidth(set, &self.z, self.m, method)
    }

    /// Estimate for the projected lines used by the two-dimensional method:
    /// coordinate `ell` is excluded from the dot product.
    pub fn projected_bandwidth_estimate(
        &self,
        set: &FrequencySet,
        ell: usize,
        method: BandwidthMethod,
    ) -> Result<BandwidthEstimate> {
        check_dim(self.dim(), set.dim())?;
        match method {
            BandwidthMethod::ExactScan | BandwidthMethod::MinimalScan => {
                let mut z = self.z.clone();
                z[ell] = 0;
                bandwidth(set, &z, self.m, method)
            }
            // the global bounds also cover every projection
            _ => bandwidth(set, &self.z, self.m, method),
        }
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{self}")?;
        Ok(())
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<Self> {
        for line in r.lines() {
            let line = line?;
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            return t.parse();
        }
        Err(Error::Parse("no lattice line found".into()))
    }
}

impl fmt::Display for Rank1Lattice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.m)?;
        for c in &self.z {
            write!(f, " {c}")?;
        }
        Ok(())
    }
}

impl FromStr for Rank1Lattice {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let nums: Vec<u64> = s
            .split_whitespace()
            .map(|t| t.parse::<u64>().map_err(|e| Error::Parse(format!("lattice token {t:?}: {e}"))))
            .collect::<Result<_>>()?;
        if nums.len() < 2 {
            return Err(Error::Parse("lattice line needs M followed by at least one generator".into()));
        }
        Rank1Lattice::new(nums[1..].to_vec(), nums[0])
    }
}

#[inline]
pub(crate) fn dot_exact(k: &[i64], z: &[u64]) -> i128 {
    let mut acc: i128 = 0;
    for (&c, &g) in k.iter().zip(z) {
        let term = (c as i128).checked_mul(g as i128).expect("k.z term overflows 128 bits");
        acc = acc.checked_add(term).expect("k.z sum overflows 128 bits");
    }
    acc
}

// Streams the set once; stops at the first repeated residue.
fn injective_residues(set: &FrequencySet, m: u64, mut residue: impl FnMut(&[i64]) -> u64) -> bool {
    if m <= 1 << 32 {
        let mut bits = vec![0u64; (m as usize).div_ceil(64)];
        set.for_each_until(|k| {
            let r = residue(k) as usize;
            let (w, b) = (r / 64, 1u64 << (r % 64));
            if bits[w] & b != 0 {
                return false;
            }
            bits[w] |= b;
            true
        })
    } else {
        let mut seen = HashSet::with_capacity(set.cardinality() as usize);
        set.for_each_until(|k| seen.insert(residue(k)))
    }
}

/// How the generating vector is searched.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CbcSearch {
    /// For every candidate size, greedily pick each `z_l` as the smallest
    /// value keeping the partial aliases injective; move on when stuck.
    PerSize,
    /// Pick each `z_l` greedily with injectivity over the integers (no
    /// modulus), then take the first candidate size on which the fixed `z`
    /// is reconstructing. Much faster; sizes come out somewhat larger.
    IntegerThenReduce,
}

/// How CBC walks through candidate lattice sizes.
#[derive(Clone, Debug)]
pub struct CbcOptions {
    pub search: CbcSearch,
    /// First size tried; defaults to `|I|`.
    pub min_size: Option<u64>,
    /// Only primes are tried when set; otherwise every integer.
    pub prime_sizes: bool,
    /// Each failed size is multiplied by `1 + growth` before moving on (0
    /// means consecutive candidates).
    pub growth: f64,
    /// Also require the reconstructing property for every `I'_l`.
    pub require_projections: bool,
    /// Give up once the candidate size exceeds this.
    pub max_size: u64,
}

impl Default for CbcOptions {
    fn default() -> Self {
        CbcOptions {
            search: CbcSearch::PerSize,
            min_size: None,
            prime_sizes: true,
            growth: 0.0,
            require_projections: false,
            max_size: 1 << 34,
        }
    }
}

fn cbc(set: &FrequencySet, opts: &CbcOptions) -> Result<Rank1Lattice> {
    if set.is_empty() {
        return Err(Error::Construction("empty frequency set".into()));
    }
    if !(opts.growth >= 0.0 && opts.growth.is_finite()) {
        return Err(invalid("growth must be a finite non-negative number"));
    }
    let d = set.dim();
    let elems = set.to_vec()?;
    let projections = if opts.require_projections {
        (0..d).map(|l| set.projection_without(l)).collect::<Result<Vec<_>>>()?
    } else {
        Vec::new()
    };
    // The greedy choice settles once M is large, so a generator that merges
    // two points of a projection would do so for every later size. Searching
    // on the union rules that out; for downward-closed sets the union is I.
    let mut all = elems.clone();
    for p in &projections {
        all.extend(p.to_vec()?);
    }
    all.sort_unstable();
    all.dedup();
    let prefixes = prefix_sets(d, all.iter());

    let n = all.len() as u64;
    let mut m = opts.min_size.unwrap_or(n).max(n).max(1);
    if n == 1 {
        return Rank1Lattice::new(vec![0; d], 1);
    }
    if opts.prime_sizes {
        m = next_prime(m);
    }
    let integer_z = match opts.search {
        CbcSearch::IntegerThenReduce => Some(integer_greedy(&prefixes)?),
        CbcSearch::PerSize => None,
    };
    let mut scratch = Vec::new();
    while m <= opts.max_size {
        let candidate = match &integer_z {
            Some(zi) => {
                let zm: Vec<u64> = zi.iter().map(|&c| (c % m as u128) as u64).collect();
                let probe = Rank1Lattice { z: zm, m };
                if probe.is_reconstructing(set)? {
                    Some(probe.z)
                } else {
                    None
                }
            }
            None => cbc_for_size(&prefixes, m, &mut scratch),
        };
        if let Some(z) = candidate {
            let lat = Rank1Lattice::new(z, m)?;
            let ok = projections.iter().try_fold(true, |acc, p| Ok::<_, Error>(acc && lat.is_reconstructing(p)?))?;
            if ok {
                return Ok(lat);
            }
        }
        let stepped = ((m as f64) * (1.0 + opts.growth)).ceil() as u64;
        let next = stepped.max(m + 1);
        m = if opts.prime_sizes { next_prime(next) } else { next };
    }
    Err(Error::Construction(format!("no reconstructing lattice found up to size {}", opts.max_size)))
}

// prefixes[l] = distinct projections onto the first l+1 coordinates
fn prefix_sets<'a>(d: usize, elems: impl Iterator<Item = &'a MultiIndex> + Clone) -> Vec<Vec<Vec<i64>>> {
    (0..d)
        .map(|l| {
            let mut p: Vec<Vec<i64>> = elems.clone().map(|k| k[..=l].to_vec()).collect();
            p.sort_unstable();
            p.dedup();
            p
        })
        .collect()
}

fn integer_greedy(prefixes: &[Vec<Vec<i64>>]) -> Result<Vec<u128>> {
    let mut z: Vec<u128> = Vec::with_capacity(prefixes.len());
    for (l, proj) in prefixes.iter().enumerate() {
        let part: Vec<(i128, i128)> = proj
            .iter()
            .map(|k| (k[..l].iter().zip(&z).map(|(&a, &b)| a as i128 * b as i128).sum(), k[l] as i128))
            .collect();
        let mut seen = HashSet::with_capacity(part.len());
        let mut c: i128 = 1;
        loop {
            seen.clear();
            if part.iter().all(|&(p, kl)| seen.insert(p + kl * c)) {
                break;
            }
            c += 1;
            if c > 1 << 60 {
                return Err(Error::Construction("integer generator search overflowed".into()));
            }
        }
        z.push(c as u128);
    }
    Ok(z)
}

// Returns the generator chosen greedily for lattice size `m`, or None when
// some coordinate has no admissible value. Each candidate is checked by
// streaming the projected residues into a stamp table; non-injective
// candidates usually fail after a handful of elements.
fn cbc_for_size(prefixes: &[Vec<Vec<i64>>], m: u64, stamps: &mut Vec<u32>) -> Option<Vec<u64>> {
    let d = prefixes.len();
    let mut z: Vec<u64> = Vec::with_capacity(d);
    stamps.clear();
    stamps.resize(m as usize, 0);
    let mut gen: u32 = 0;
    for l in 0..d {
        let proj = &prefixes[l];
        if proj.len() as u64 > m {
            return None;
        }
        // residues of the first l coordinates, and k_l reduced mod m; a fixed
        // pseudo-random order surfaces collisions sooner than lexicographic
        let mut part: Vec<(u64, u64)> = proj
            .iter()
            .map(|k| {
                let p = dot_exact(&k[..l], &z[..l]).rem_euclid(m as i128) as u64;
                (p, k[l].rem_euclid(m as i64) as u64)
            })
            .collect();
        part.sort_by_key(|&(p, kl)| crate::arith::mix64(p ^ (kl << 32)));
        let found = (1..m).chain(std::iter::once(0)).find(|&c| {
            gen = gen.wrapping_add(1);
            if gen == 0 {
                stamps.iter_mut().for_each(|s| *s = 0);
                gen = 1;
            }
            part.iter().all(|&(p, kl)| {
                let r = (p + crate::arith::mul_mod(kl, c, m)) % m;
                let slot = &mut stamps[r as usize];
                if *slot == gen {
                    false
                } else {
                    *slot = gen;
                    true
                }
            })
        })?;
        z.push(found);
    }
    Some(z)
}

/// How the univariate bandwidth `M~` is estimated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BandwidthMethod {
    /// `2 max |k.z| + 1` from a full scan.
    ExactScan,
    /// Tightest odd band after recentring with a modulation.
    MinimalScan,
    /// `d N M`, rounded up to odd.
    LinfBound,
    /// `1 + 2 |z|_inf max |k|_1`.
    L1Bound,
}

impl BandwidthMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            BandwidthMethod::ExactScan => "exact_scan",
            BandwidthMethod::MinimalScan => "minimal",
            BandwidthMethod::LinfBound => "linf_bound",
            BandwidthMethod::L1Bound => "l1_bound",
        }
    }
}

impl FromStr for BandwidthMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact_scan" | "exact" => Ok(BandwidthMethod::ExactScan),
            "minimal" | "minimal_scan" => Ok(BandwidthMethod::MinimalScan),
            "linf_bound" | "linf" => Ok(BandwidthMethod::LinfBound),
            "l1_bound" | "l1" => Ok(BandwidthMethod::L1Bound),
            _ => Err(Error::Parse(format!("unknown bandwidth method {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BandwidthEstimate {
    /// Odd band size; every shifted `k.z + shift` lies in `B_{m_tilde}`.
    pub m_tilde: u64,
    /// Modulation applied to the restriction, non-zero only for the minimal method.
    pub shift: i64,
    pub method: BandwidthMethod,
}

fn round_up_odd(x: u128) -> Result<u64> {
    let x = if x.is_multiple_of(2) { x + 1 } else { x };
    u64::try_from(x).map_err(|_| Error::Size("bandwidth estimate exceeds u64".into()))
}

fn bandwidth(set: &FrequencySet, z: &[u64], m: u64, method: BandwidthMethod) -> Result<BandwidthEstimate> {
    let (m_tilde, shift) = match method {
        BandwidthMethod::ExactScan => {
            let mut mx: u128 = 0;
            set.for_each(|k| mx = mx.max(dot_exact(k, z).unsigned_abs()));
            (round_up_odd(2 * mx + 1)?, 0)
        }
        BandwidthMethod::MinimalScan => {
            let (mut lo, mut hi) = (i128::MAX, i128::MIN);
            set.for_each(|k| {
                let v = dot_exact(k, z);
                lo = lo.min(v);
                hi = hi.max(v);
            });
            if lo > hi {
                (1, 0)
            } else {
                let mt = round_up_odd((hi - lo + 1) as u128)?;
                let shift = (mt / 2) as i128 - hi;
                (mt, i64::try_from(shift).map_err(|_| Error::Size("shift exceeds i64".into()))?)
            }
        }
        BandwidthMethod::LinfBound => {
            // N must also cover windows shifted off B_N, as explicit sets may be
            let n = set.expansion() as u128;
            let reach = (0..set.dim())
                .map(|l| {
                    let lo = set.window_low(l) as i128;
                    lo.unsigned_abs().max((lo + n as i128 - 1).unsigned_abs())
                })
                .max()
                .unwrap_or(0);
            let v = (set.dim() as u128) * n.max(2 * reach) * (m as u128);
            (round_up_odd(v)?, 0)
        }
        BandwidthMethod::L1Bound => {
            let zmax = z.iter().copied().max().unwrap_or(0) as u128;
            (round_up_odd(1 + 2 * zmax * set.max_l1_norm() as u128)?, 0)
        }
    };
    Ok(BandwidthEstimate { m_tilde, shift, method })
}

/// Reads a lattice from the `M z_1 ... z_d` text format.
pub fn read_lattice_file(path: &std::path::Path) -> Result<Rank1Lattice> {
    let f = std::fs::File::open(path)?;
    Rank1Lattice::read_from(std::io::BufReader::new(f))
}

pub fn write_lattice_file(lat: &Rank1Lattice, path: &std::path::Path) -> Result<()> {
    let f = std::fs::File::create(path)?;
    lat.write_to(std::io::BufWriter::new(f))
}

/// Brute-force alias check used by tests and the self test.
pub fn collisions(lat: &Rank1Lattice, set: &FrequencySet) -> Result<Vec<(MultiIndex, MultiIndex)>> {
    let mut first: std::collections::HashMap<u64, MultiIndex> = std::collections::HashMap::new();
    let mut out = Vec::new();
    for k in set.to_vec()? {
        let a = lat.alias(&k);
        match first.get(&a) {
            Some(prev) => out.push((prev.clone(), k)),
            None => {
                first.insert(a, k);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::is_prime;

    #[test]
    fn parse_and_display() {
        let lat: Rank1Lattice = "2040484044 1 33 579".parse().unwrap();
        assert_eq!(lat.size(), 2_040_484_044);
        assert_eq!(lat.generating_vector(), &[1, 33, 579]);
        assert_eq!(lat.to_string(), "2040484044 1 33 579");
        assert!("5 7".parse::<Rank1Lattice>().is_err());
    }

    #[test]
    fn small_lattice_nodes() {
        let lat = Rank1Lattice::new(vec![1, 2], 4).unwrap();
        let nodes: Vec<Vec<f64>> = (0..4).map(|j| lat.node(j)).collect();
        assert_eq!(nodes, vec![vec![0.0, 0.0], vec![0.25, 0.5], vec![0.5, 0.0], vec![0.75, 0.5]]);
    }

    #[test]
    fn cbc_yields_reconstructing() {
        for set in [
            FrequencySet::hyperbolic_cross(3, 9).unwrap(),
            FrequencySet::cuboid(&[5, 4, 3]).unwrap(),
            FrequencySet::weighted_hyperbolic_cross(4, 11, 1.0).unwrap(),
        ] {
            let lat = Rank1Lattice::cbc_construct(&set, &CbcOptions::default()).unwrap();
            assert!(lat.is_reconstructing(&set).unwrap());
            assert!(collisions(&lat, &set).unwrap().is_empty());
            assert!(is_prime(lat.size()));
        }
    }

    #[test]
    fn integer_search() {
        let set = FrequencySet::hyperbolic_cross(3, 33).unwrap();
        let opts = CbcOptions { search: CbcSearch::IntegerThenReduce, require_projections: true, ..Default::default() };
        let lat = Rank1Lattice::cbc_construct(&set, &opts).unwrap();
        assert!(lat.is_reconstructing_with_projections(&set).unwrap());
        assert_eq!(&lat.generating_vector()[..2], &[1, 33]);
    }

    #[test]
    fn cbc_with_projections() {
        let set = FrequencySet::hyperbolic_cross(3, 9).unwrap();
        let opts = CbcOptions { require_projections: true, ..Default::default() };
        let lat = Rank1Lattice::cbc_construct(&set, &opts).unwrap();
        assert!(lat.is_reconstructing_with_projections(&set).unwrap());
    }

    #[test]
    fn singleton_set() {
        let set = FrequencySet::explicit(2, vec![MultiIndex::new(vec![3, -1])], None).unwrap();
        let lat = Rank1Lattice::cbc_construct(&set, &CbcOptions::default()).unwrap();
        assert_eq!(lat.size(), 1);
        assert!(lat.is_reconstructing(&set).unwrap());
    }

    #[test]
    fn bandwidth_methods_nest() {
        let set = FrequencySet::hyperbolic_cross(3, 9).unwrap();
        let lat = Rank1Lattice::cbc_construct(&set, &CbcOptions::default()).unwrap();
        let e = lat.bandwidth_estimate(&set, BandwidthMethod::ExactScan).unwrap();
        let mn = lat.bandwidth_estimate(&set, BandwidthMethod::MinimalScan).unwrap();
        let l1 = lat.bandwidth_estimate(&set, BandwidthMethod::L1Bound).unwrap();
        assert!(mn.m_tilde <= e.m_tilde && e.m_tilde <= l1.m_tilde);
        for est in [e, mn, l1] {
            assert_eq!(est.m_tilde % 2, 1);
            let half = (est.m_tilde / 2) as i128;
            set.for_each(|k| {
                let v = lat.dot(k) + est.shift as i128;
                assert!(-half <= v && v <= half);
            });
        }
    }
}

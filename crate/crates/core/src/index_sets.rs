//! Frequency index sets: cuboids, hyperbolic crosses (plain and weighted) and
//! explicit lists.
//!
//! Structured kinds are never materialised unless asked to; they are a
//! membership predicate plus a lexicographic cursor. Cardinalities come from a
//! dimension-recursive counting routine, which also drives unranking.

use crate::arith::{band_contains, band_high, band_low};
use crate::error::{check_dim, invalid, Error, Result};
use std::collections::{HashMap, HashSet};
use std::fmt;
use std::io::{BufRead, Write};
use std::ops::Deref;

/// Largest number of elements any operation will materialise by default.
pub const DEFAULT_MATERIALIZE_CAP: u64 = 100_000_000;

/// A frequency `k` in `Z^d`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(Vec<i64>);

impl MultiIndex {
    pub fn new(coords: Vec<i64>) -> Self {
        MultiIndex(coords)
    }

    pub fn zeros(d: usize) -> Self {
        MultiIndex(vec![0; d])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn l1_norm(&self) -> u64 {
        self.0.iter().map(|c| c.unsigned_abs()).sum()
    }

    /// Copy with coordinate `ell` set to zero.
    pub fn with_zeroed(&self, ell: usize) -> Self {
        let mut c = self.0.clone();
        c[ell] = 0;
        MultiIndex(c)
    }

    pub fn into_vec(self) -> Vec<i64> {
        self.0
    }
}

impl Deref for MultiIndex {
    type Target = [i64];
    fn deref(&self) -> &[i64] {
        &self.0
    }
}

// Hash and Ord agree with the slice impls, so maps can be queried by `&[i64]`.
impl std::borrow::Borrow<[i64]> for MultiIndex {
    fn borrow(&self) -> &[i64] {
        &self.0
    }
}

impl From<Vec<i64>> for MultiIndex {
    fn from(v: Vec<i64>) -> Self {
        MultiIndex(v)
    }
}

impl From<&[i64]> for MultiIndex {
    fn from(v: &[i64]) -> Self {
        MultiIndex(v.to_vec())
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SetKind {
    Cuboid,
    HyperbolicCross,
    WeightedHyperbolicCross,
    Explicit,
}

impl SetKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SetKind::Cuboid => "cuboid",
            SetKind::HyperbolicCross => "hyperbolic_cross",
            SetKind::WeightedHyperbolicCross => "weighted_hyperbolic_cross",
            SetKind::Explicit => "explicit",
        }
    }
}

#[derive(Clone, Debug)]
enum Repr {
    Cuboid {
        sides: Vec<u64>,
    },
    Cross {
        // product bound, kept as a float so weighted and plain share one path
        budget: f64,
        half: i64,
        upper: i64,
        weights: Vec<f64>,
        alpha: f64,
        // completions reachable from (level, running product)
        counts: HashMap<(usize, u64), u64>,
    },
    Explicit {
        elements: Vec<MultiIndex>,
        lookup: HashSet<MultiIndex>,
    },
}

/// A finite set `I` of frequencies together with its expansion `N`.
#[derive(Clone, Debug)]
pub struct FrequencySet {
    dim: usize,
    expansion: u64,
    lows: Vec<i64>,
    len: u64,
    cap: u64,
    repr: Repr,
}

impl FrequencySet {
    /// Full grid `B_{n_1} x ... x B_{n_d}`.
    pub fn cuboid(sides: &[u64]) -> Result<Self> {
        if sides.is_empty() {
            return Err(invalid("cuboid needs at least one dimension"));
        }
        if sides.contains(&0) {
            return Err(invalid("cuboid side lengths must be positive"));
        }
        let len = sides
            .iter()
            .try_fold(1u64, |acc, &n| acc.checked_mul(n))
            .ok_or_else(|| Error::Size("cuboid cardinality overflows u64".into()))?;
        let expansion = *sides.iter().max().unwrap();
        Ok(FrequencySet {
            dim: sides.len(),
            expansion,
            lows: vec![band_low(expansion); sides.len()],
            len,
            cap: DEFAULT_MATERIALIZE_CAP,
            repr: Repr::Cuboid { sides: sides.to_vec() },
        })
    }

    /// Hyperbolic cross `H_N^d`.
    pub fn hyperbolic_cross(d: usize, n: u64) -> Result<Self> {
        Self::cross(d, n, 0.0, SetKind::HyperbolicCross)
    }

    /// Weighted hyperbolic cross with weights `l^alpha`, `l = 1..d`.
    pub fn weighted_hyperbolic_cross(d: usize, n: u64, alpha: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(invalid("weight exponent must be finite and non-negative"));
        }
        Self::cross(d, n, alpha, SetKind::WeightedHyperbolicCross)
    }

    fn cross(d: usize, n: u64, alpha: f64, _kind: SetKind) -> Result<Self> {
        if d == 0 {
            return Err(invalid("dimension must be positive"));
        }
        if n == 0 {
            return Err(invalid("expansion must be positive"));
        }
        if n > (1 << 40) {
            return Err(Error::Size("expansion too large for a hyperbolic cross".into()));
        }
        let half = (n / 2) as i64;
        let upper = n.div_ceil(2) as i64 - 1;
        let weights: Vec<f64> = (1..=d).map(|l| (l as f64).powf(alpha)).collect();
        let budget = half.max(1) as f64;
        let lows = vec![if n.is_multiple_of(2) { -half } else { band_low(n) }; d];
        let mut set = FrequencySet {
            dim: d,
            expansion: n,
            lows,
            len: 0,
            cap: DEFAULT_MATERIALIZE_CAP,
            repr: Repr::Cross { budget, half, upper, weights, alpha, counts: HashMap::new() },
        };
        let mut counts = HashMap::new();
        let len = set.count_from(0, 1.0, &mut counts)?;
        if let Repr::Cross { counts: c, .. } = &mut set.repr {
            *c = counts;
        }
        set.len = len;
        Ok(set)
    }

    /// Explicit list. Duplicates are removed and the list sorted
    /// lexicographically. `expansion` defaults to the smallest `N` whose
    /// per-coordinate window covers every element.
    pub fn explicit(d: usize, elements: Vec<MultiIndex>, expansion: Option<u64>) -> Result<Self> {
        if d == 0 {
            return Err(invalid("dimension must be positive"));
        }
        for k in &elements {
            check_dim(d, k.dim())?;
        }
        let mut elements = elements;
        elements.sort_unstable();
        elements.dedup();
        let (mins, maxs) = coordinate_extent(d, &elements);
        let width = mins.iter().zip(&maxs).map(|(lo, hi)| (hi - lo + 1) as u64).max().unwrap_or(1);
        let expansion = match expansion {
            Some(n) if n < width => {
                return Err(invalid(format!("expansion {n} smaller than coordinate width {width}")))
            }
            Some(n) => n,
            None => width,
        };
        let in_band = elements.iter().all(|k| k.iter().all(|&c| band_contains(expansion, c)));
        let lows = if in_band { vec![band_low(expansion); d] } else { mins };
        let lookup = elements.iter().cloned().collect();
        Ok(FrequencySet {
            dim: d,
            expansion,
            lows,
            len: elements.len() as u64,
            cap: DEFAULT_MATERIALIZE_CAP,
            repr: Repr::Explicit { elements, lookup },
        })
    }

    /// Overrides the materialisation cap.
    pub fn with_materialize_cap(mut self, cap: u64) -> Self {
        self.cap = cap;
        self
    }

    pub fn kind(&self) -> SetKind {
        match &self.repr {
            Repr::Cuboid { .. } => SetKind::Cuboid,
            Repr::Cross { alpha, .. } if *alpha == 0.0 => SetKind::HyperbolicCross,
            Repr::Cross { .. } => SetKind::WeightedHyperbolicCross,
            Repr::Explicit { .. } => SetKind::Explicit,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The expansion `N`: every coordinate lies in a window of `N` consecutive integers.
    pub fn expansion(&self) -> u64 {
        self.expansion
    }

    /// Weight exponent for crosses, zero otherwise.
    pub fn alpha(&self) -> f64 {
        match &self.repr {
            Repr::Cross { alpha, .. } => *alpha,
            _ => 0.0,
        }
    }

    /// Lowest value of the length-`N` window used to fold coordinate `ell`.
    pub fn window_low(&self, ell: usize) -> i64 {
        self.lows[ell]
    }

    pub fn cardinality(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn materialize_cap(&self) -> u64 {
        self.cap
    }

    pub fn contains(&self, k: &[i64]) -> Result<bool> {
        check_dim(self.dim, k.len())?;
        Ok(self.contains_unchecked(k))
    }

    pub(crate) fn contains_unchecked(&self, k: &[i64]) -> bool {
        match &self.repr {
            Repr::Cuboid { sides } => k.iter().zip(sides).all(|(&c, &n)| band_contains(n, c)),
            Repr::Cross { budget, half, upper, weights, .. } => {
                let mut prod = 1.0;
                for (l, &c) in k.iter().enumerate() {
                    if c > *upper || c < -*half {
                        return false;
                    }
                    prod *= factor(weights[l], c);
                }
                prod <= *budget
            }
            Repr::Explicit { lookup, .. } => lookup.contains(k),
        }
    }

    /// Visits elements in lexicographic order until `f` returns `false`.
    /// Returns `true` when the walk completed.
    pub fn for_each_until(&self, mut f: impl FnMut(&[i64]) -> bool) -> bool {
        if let Repr::Explicit { elements, .. } = &self.repr {
            return elements.iter().all(|k| f(k));
        }
        let mut cur = Cursor::new(self);
        while let Some(k) = cur.advance() {
            if !f(k) {
                return false;
            }
        }
        true
    }

    pub fn for_each(&self, mut f: impl FnMut(&[i64])) {
        self.for_each_until(|k| {
            f(k);
            true
        });
    }

    /// Streaming lexicographic iterator.
    pub fn iter(&self) -> SetIter<'_> {
        SetIter { inner: IterInner::new(self) }
    }

    /// Element at lexicographic rank `idx`.
    pub fn nth(&self, idx: u64) -> Option<MultiIndex> {
        if idx >= self.len {
            return None;
        }
        match &self.repr {
            Repr::Explicit { elements, .. } => Some(elements[idx as usize].clone()),
            Repr::Cuboid { sides } => {
                let mut rem = idx;
                let mut out = vec![0; self.dim];
                for l in (0..self.dim).rev() {
                    let n = sides[l];
                    out[l] = band_low(n) + (rem % n) as i64;
                    rem /= n;
                }
                Some(MultiIndex(out))
            }
            Repr::Cross { weights, counts, .. } => {
                let mut rem = idx;
                let mut prod = 1.0;
                let mut out = vec![0; self.dim];
                for l in 0..self.dim {
                    let (lo, hi) = self.cross_range(l, prod);
                    let mut chosen = false;
                    for v in lo..=hi {
                        let p = prod * factor(weights[l], v);
                        let c = if l + 1 == self.dim { 1 } else { counts[&(l + 1, p.to_bits())] };
                        if rem < c {
                            out[l] = v;
                            prod = p;
                            chosen = true;
                            break;
                        }
                        rem -= c;
                    }
                    debug_assert!(chosen);
                }
                Some(MultiIndex(out))
            }
        }
    }

    /// All elements as a vector, subject to the materialisation cap.
    pub fn to_vec(&self) -> Result<Vec<MultiIndex>> {
        self.ensure_within_cap()?;
        if let Repr::Explicit { elements, .. } = &self.repr {
            return Ok(elements.clone());
        }
        let mut out = Vec::with_capacity(self.len as usize);
        self.for_each(|k| out.push(MultiIndex::from(k)));
        Ok(out)
    }

    pub(crate) fn ensure_within_cap(&self) -> Result<()> {
        if self.len > self.cap {
            Err(Error::Size(format!(
                "set has {} elements, above the materialisation cap {}",
                self.len, self.cap
            )))
        } else {
            Ok(())
        }
    }

    /// `{k with k_ell := 0}` as an explicit set of the same dimension.
    pub fn projection_without(&self, ell: usize) -> Result<FrequencySet> {
        if ell >= self.dim {
            return Err(invalid(format!("coordinate {ell} out of range for dimension {}", self.dim)));
        }
        self.ensure_within_cap()?;
        let mut seen = HashSet::new();
        self.for_each(|k| {
            let mut p = k.to_vec();
            p[ell] = 0;
            seen.insert(MultiIndex(p));
        });
        let mut set = FrequencySet::explicit(self.dim, seen.into_iter().collect(), Some(self.expansion))?;
        set.lows = self.lows.clone();
        set.cap = self.cap;
        Ok(set)
    }

    /// Largest l1 norm over the set.
    pub fn max_l1_norm(&self) -> u64 {
        let mut m = 0;
        self.for_each(|k| m = m.max(k.iter().map(|c| c.unsigned_abs()).sum()));
        m
    }

    fn cross_range(&self, l: usize, prod: f64) -> (i64, i64) {
        match &self.repr {
            Repr::Cross { budget, half, upper, weights, .. } => {
                let mut k = 0;
                while k < *half && prod * factor(weights[l], k + 1) <= *budget {
                    k += 1;
                }
                (-k, k.min(*upper))
            }
            Repr::Cuboid { sides } => (band_low(sides[l]), band_high(sides[l])),
            Repr::Explicit { .. } => unreachable!("explicit sets have no ranges"),
        }
    }

    fn count_from(&self, l: usize, prod: f64, memo: &mut HashMap<(usize, u64), u64>) -> Result<u64> {
        if l == self.dim {
            return Ok(1);
        }
        if let Some(&c) = memo.get(&(l, prod.to_bits())) {
            return Ok(c);
        }
        let weights = match &self.repr {
            Repr::Cross { weights, .. } => weights,
            _ => unreachable!(),
        };
        let (lo, hi) = self.cross_range(l, prod);
        let mut total = 0u64;
        for v in lo..=hi {
            let c = self.count_from(l + 1, prod * factor(weights[l], v), memo)?;
            total = total.checked_add(c).ok_or_else(|| Error::Size("cardinality overflows u64".into()))?;
        }
        memo.insert((l, prod.to_bits()), total);
        Ok(total)
    }
}

#[inline]
fn factor(w: f64, c: i64) -> f64 {
    (w * c.unsigned_abs() as f64).max(1.0)
}

fn coordinate_extent(d: usize, elements: &[MultiIndex]) -> (Vec<i64>, Vec<i64>) {
    if elements.is_empty() {
        return (vec![0; d], vec![0; d]);
    }
    let mut mins = vec![i64::MAX; d];
    let mut maxs = vec![i64::MIN; d];
    for k in elements {
        for l in 0..d {
            mins[l] = mins[l].min(k[l]);
            maxs[l] = maxs[l].max(k[l]);
        }
    }
    (mins, maxs)
}

// Odometer over a structured set; each coordinate's feasible values form a
// contiguous range that depends only on the running product of the prefix.
struct Cursor<'a> {
    set: &'a FrequencySet,
    k: Vec<i64>,
    hi: Vec<i64>,
    prods: Vec<f64>,
    started: bool,
    done: bool,
}

impl<'a> Cursor<'a> {
    fn new(set: &'a FrequencySet) -> Self {
        let d = set.dim;
        Cursor {
            set,
            k: vec![0; d],
            hi: vec![0; d],
            prods: vec![1.0; d + 1],
            started: false,
            done: set.len == 0,
        }
    }

    fn weight(&self, l: usize) -> f64 {
        match &self.set.repr {
            Repr::Cross { weights, .. } => weights[l],
            _ => 1.0,
        }
    }

    fn is_cross(&self) -> bool {
        matches!(self.set.repr, Repr::Cross { .. })
    }

    fn fill_from(&mut self, start: usize) {
        for l in start..self.set.dim {
            let (lo, hi) = self.set.cross_range(l, self.prods[l]);
            self.k[l] = lo;
            self.hi[l] = hi;
            self.prods[l + 1] = if self.is_cross() { self.prods[l] * factor(self.weight(l), lo) } else { 1.0 };
        }
    }

    fn advance(&mut self) -> Option<&[i64]> {
        if self.done {
            return None;
        }
        if !self.started {
            self.started = true;
            self.fill_from(0);
            return Some(&self.k);
        }
        for l in (0..self.set.dim).rev() {
            if self.k[l] < self.hi[l] {
                self.k[l] += 1;
                if self.is_cross() {
                    self.prods[l + 1] = self.prods[l] * factor(self.weight(l), self.k[l]);
                }
                self.fill_from(l + 1);
                return Some(&self.k);
            }
        }
        self.done = true;
        None
    }
}

enum IterInner<'a> {
    Structured(Cursor<'a>),
    Explicit(std::slice::Iter<'a, MultiIndex>),
}

impl<'a> IterInner<'a> {
    fn new(set: &'a FrequencySet) -> Self {
        match &set.repr {
            Repr::Explicit { elements, .. } => IterInner::Explicit(elements.iter()),
            _ => IterInner::Structured(Cursor::new(set)),
        }
    }
}

pub struct SetIter<'a> {
    inner: IterInner<'a>,
}

impl Iterator for SetIter<'_> {
    type Item = MultiIndex;
    fn next(&mut self) -> Option<MultiIndex> {
        match &mut self.inner {
            IterInner::Structured(c) => c.advance().map(MultiIndex::from),
            IterInner::Explicit(it) => it.next().cloned(),
        }
    }
}

/// Writes `# d=<d> N=<N>` followed by one whitespace-separated row per element.
pub fn write_set<W: Write>(set: &FrequencySet, mut w: W) -> Result<()> {
    set.ensure_within_cap()?;
    writeln!(w, "# d={} N={}", set.dim, set.expansion)?;
    let mut line = String::new();
    let mut err = None;
    set.for_each_until(|k| {
        line.clear();
        for (i, c) in k.iter().enumerate() {
            if i > 0 {
                line.push(' ');
            }
            line.push_str(&c.to_string());
        }
        match writeln!(w, "{line}") {
            Ok(()) => true,
            Err(e) => {
                err = Some(e);
                false
            }
        }
    });
    match err {
        Some(e) => Err(e.into()),
        None => Ok(()),
    }
}

/// Reads the format produced by [`write_set`] into an explicit set.
pub fn read_set<R: BufRead>(r: R) -> Result<FrequencySet> {
    let mut lines = r.lines();
    let header = lines.next().ok_or_else(|| Error::Parse("empty index-set file".into()))??;
    let (d, n) = parse_header(&header)?;
    let mut elements = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row: Vec<i64> = line
            .split_whitespace()
            .map(|t| t.parse::<i64>().map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 2))))
            .collect::<Result<_>>()?;
        if row.len() != d {
            return Err(Error::Parse(format!("line {}: expected {d} columns, found {}", lineno + 2, row.len())));
        }
        elements.push(MultiIndex(row));
    }
    FrequencySet::explicit(d, elements, Some(n))
}

fn parse_header(h: &str) -> Result<(usize, u64)> {
    let body = h
        .trim()
        .strip_prefix('#')
        .ok_or_else(|| Error::Parse(format!("missing header, got {h:?}")))?;
    let mut d = None;
    let mut n = None;
    for tok in body.split_whitespace() {
        if let Some(v) = tok.strip_prefix("d=") {
            d = Some(v.parse::<usize>().map_err(|e| Error::Parse(format!("bad d: {e}")))?);
        } else if let Some(v) = tok.strip_prefix("N=") {
            n = Some(v.parse::<u64>().map_err(|e| Error::Parse(format!("bad N: {e}")))?);
        }
    }
    match (d, n) {
        (Some(d), Some(n)) => Ok((d, n)),
        _ => Err(Error::Parse(format!("header must carry d= and N=, got {h:?}"))),
    }
}

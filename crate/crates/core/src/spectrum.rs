//! Sparse multivariate Fourier coefficient maps.

use crate::error::{check_dim, Error, Result};
use crate::index_sets::MultiIndex;
use crate::scalar::Real;
use num_complex::Complex;
use std::collections::BTreeMap;
use std::io::{BufRead, Write};

/// Finite map `k -> c_k`; zero values are never stored.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseSpectrum<T> {
    dim: usize,
    entries: BTreeMap<MultiIndex, Complex<T>>,
}

impl<T: Real> SparseSpectrum<T> {
    pub fn new(dim: usize) -> Self {
        SparseSpectrum { dim, entries: BTreeMap::new() }
    }

    pub fn from_pairs(dim: usize, pairs: impl IntoIterator<Item = (MultiIndex, Complex<T>)>) -> Result<Self> {
        let mut s = Self::new(dim);
        for (k, c) in pairs {
            s.add(k, c)?;
        }
        Ok(s)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Coefficient at `k`, zero if absent.
    pub fn get(&self, k: &[i64]) -> Complex<T> {
        self.entries.get(k).copied().unwrap_or_else(|| Complex::new(T::zero(), T::zero()))
    }

    pub fn contains(&self, k: &[i64]) -> bool {
        self.entries.contains_key(k)
    }

    /// Sets `c_k`, removing the entry when `c` is zero.
    pub fn insert(&mut self, k: MultiIndex, c: Complex<T>) -> Result<()> {
        check_dim(self.dim, k.dim())?;
        if c.re == T::zero() && c.im == T::zero() {
            self.entries.remove(&k);
        } else {
            self.entries.insert(k, c);
        }
        Ok(())
    }

    /// `c_k += c`.
    pub fn add(&mut self, k: MultiIndex, c: Complex<T>) -> Result<()> {
        let cur = self.get(&k);
        self.insert(k, cur + c)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&MultiIndex, &Complex<T>)> {
        self.entries.iter()
    }

    pub fn support(&self) -> impl Iterator<Item = &MultiIndex> {
        self.entries.keys()
    }

    /// `sum |c_k|^2`.
    pub fn norm_sq(&self) -> T {
        self.entries.values().fold(T::zero(), |a, c| a + c.norm_sqr())
    }

    /// `sqrt(sum |a_k - b_k|^2)` over the union of supports.
    pub fn distance(&self, other: &Self) -> T {
        let mut acc = T::zero();
        for (k, a) in &self.entries {
            acc = acc + (*a - other.get(k)).norm_sqr();
        }
        for (k, b) in &other.entries {
            if !self.entries.contains_key(k) {
                acc = acc + b.norm_sqr();
            }
        }
        acc.sqrt()
    }

    /// Rows `k_1 .. k_d re im`.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# d={}", self.dim)?;
        for (k, c) in &self.entries {
            for v in k.iter() {
                write!(w, "{v} ")?;
            }
            writeln!(w, "{:e} {:e}", c.re.as_f64(), c.im.as_f64())?;
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<Self> {
        let mut dim = None;
        let mut out: Option<Self> = None;
        for line in r.lines() {
            let line = line?;
            let t = line.trim();
            if t.is_empty() {
                continue;
            }
            if let Some(h) = t.strip_prefix('#') {
                for tok in h.split_whitespace() {
                    if let Some(v) = tok.strip_prefix("d=") {
                        dim = Some(v.parse::<usize>().map_err(|e| Error::Parse(e.to_string()))?);
                    }
                }
                continue;
            }
            let toks: Vec<&str> = t.split_whitespace().collect();
            let d = dim.unwrap_or(toks.len().saturating_sub(2));
            if toks.len() != d + 2 {
                return Err(Error::Parse(format!("expected {} columns, got {}", d + 2, toks.len())));
            }
            let k: Vec<i64> =
                toks[..d].iter().map(|s| s.parse().map_err(|e| Error::Parse(format!("{e}")))).collect::<Result<_>>()?;
            let re: f64 = toks[d].parse().map_err(|e| Error::Parse(format!("{e}")))?;
            let im: f64 = toks[d + 1].parse().map_err(|e| Error::Parse(format!("{e}")))?;
            out.get_or_insert_with(|| Self::new(d)).add(MultiIndex::new(k), Complex::new(T::of(re), T::of(im)))?;
        }
        out.or_else(|| dim.map(Self::new)).ok_or_else(|| Error::Parse("empty spectrum file".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zeros_are_not_stored() {
        let mut s = SparseSpectrum::<f64>::new(2);
        s.add(MultiIndex::new(vec![1, 2]), Complex::new(1.0, 0.0)).unwrap();
        s.add(MultiIndex::new(vec![1, 2]), Complex::new(-1.0, 0.0)).unwrap();
        assert!(s.is_empty());
        assert!(s.insert(MultiIndex::new(vec![1]), Complex::new(1.0, 0.0)).is_err());
    }

    #[test]
    fn roundtrip() {
        let s = SparseSpectrum::from_pairs(
            3,
            vec![(MultiIndex::new(vec![1, -2, 0]), Complex::new(0.25, -1.5)), (MultiIndex::new(vec![0, 0, 4]), Complex::new(1e-7, 3.0))],
        )
        .unwrap();
        let mut buf = Vec::new();
        s.write_to(&mut buf).unwrap();
        let back = SparseSpectrum::<f64>::read_from(buf.as_slice()).unwrap();
        assert_eq!(back, s);
    }
}

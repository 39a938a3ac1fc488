//! Finitely supported coefficient sequences and the set/sign primitives used
//! by every other module.
//!
//! Indices are 1-based. A [`SparseVec`] never stores an explicit zero, so its
//! support is exactly its set of stored indices.

use std::cmp::Ordering;
use std::fmt;

use crate::error::{input, Error, Result};

/// Finitely supported real sequence indexed by positive integers.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SparseVec {
    // sorted by index, no duplicates, no zero values
    entries: Vec<(usize, f64)>,
}

impl SparseVec {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a vector from `(index, value)` pairs in any order.
    ///
    /// Zero values are dropped. Index 0, duplicate indices and non-finite
    /// values are rejected.
    pub fn from_pairs<I>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, f64)>,
    {
        let mut entries: Vec<(usize, f64)> = pairs.into_iter().collect();
        entries.sort_by_key(|&(n, _)| n);
        for w in entries.windows(2) {
            if w[0].0 == w[1].0 {
                return input(format!("duplicate index {}", w[0].0));
            }
        }
        for &(n, v) in &entries {
            if n == 0 {
                return input("indices are 1-based; got 0");
            }
            if !v.is_finite() {
                return input(format!("non-finite coefficient at index {n}"));
            }
        }
        entries.retain(|&(_, v)| v != 0.0);
        Ok(Self { entries })
    }

    /// Builds from pairs already sorted by strictly increasing positive index.
    /// Used on hot paths where the caller controls the order.
    pub(crate) fn from_sorted_unchecked(mut entries: Vec<(usize, f64)>) -> Self {
        debug_assert!(entries.windows(2).all(|w| w[0].0 < w[1].0));
        debug_assert!(entries.first().map_or(true, |e| e.0 > 0));
        entries.retain(|&(_, v)| v != 0.0);
        Self { entries }
    }

    /// The unit vector `e_n`.
    pub fn unit(n: usize) -> Result<Self> {
        Self::from_pairs([(n, 1.0)])
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, n: usize) -> f64 {
        match self.entries.binary_search_by_key(&n, |&(i, _)| i) {
            Ok(pos) => self.entries[pos].1,
            Err(_) => 0.0,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.entries.iter().copied()
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn support(&self) -> IndexSet {
        IndexSet {
            items: self.entries.iter().map(|&(n, _)| n).collect(),
        }
    }

    pub fn max_index(&self) -> Option<usize> {
        self.entries.last().map(|&(n, _)| n)
    }

    pub fn min_index(&self) -> Option<usize> {
        self.entries.first().map(|&(n, _)| n)
    }

    pub fn scale(&self, c: f64) -> Self {
        Self::from_sorted_unchecked(self.entries.iter().map(|&(n, v)| (n, c * v)).collect())
    }

    /// Returns `self + c * other`.
    pub fn axpy(&self, c: f64, other: &SparseVec) -> Self {
        let mut out = Vec::with_capacity(self.len() + other.len());
        let (mut i, mut j) = (0, 0);
        let (a, b) = (&self.entries, &other.entries);
        while i < a.len() || j < b.len() {
            let next = match (a.get(i), b.get(j)) {
                (Some(&(n, x)), Some(&(m, y))) => match n.cmp(&m) {
                    Ordering::Less => {
                        i += 1;
                        (n, x)
                    }
                    Ordering::Greater => {
                        j += 1;
                        (m, c * y)
                    }
                    Ordering::Equal => {
                        i += 1;
                        j += 1;
                        (n, x + c * y)
                    }
                },
                (Some(&(n, x)), None) => {
                    i += 1;
                    (n, x)
                }
                (None, Some(&(m, y))) => {
                    j += 1;
                    (m, c * y)
                }
                (None, None) => unreachable!(),
            };
            out.push(next);
        }
        Self::from_sorted_unchecked(out)
    }

    pub fn add(&self, other: &SparseVec) -> Self {
        self.axpy(1.0, other)
    }

    pub fn sub(&self, other: &SparseVec) -> Self {
        self.axpy(-1.0, other)
    }

    /// Applies `f` to every stored entry, keeping the index.
    pub fn map_values(&self, f: impl Fn(usize, f64) -> f64) -> Self {
        Self::from_sorted_unchecked(self.entries.iter().map(|&(n, v)| (n, f(n, v))).collect())
    }

    /// Serializes as `"1:0.5;3:-2"` (ascending index, shortest round-trip floats).
    pub fn to_cell(&self) -> String {
        self.to_string()
    }

    pub fn from_cell(cell: &str) -> Result<Self> {
        let cell = cell.trim();
        if cell.is_empty() {
            return Ok(Self::new());
        }
        let mut pairs = Vec::new();
        for item in cell.split(';') {
            let (idx, val) = item
                .split_once(':')
                .ok_or_else(|| Error::Parse(format!("expected index:value, got {item:?}")))?;
            let idx: usize = idx
                .trim()
                .parse()
                .map_err(|e| Error::Parse(format!("bad index {idx:?}: {e}")))?;
            let val: f64 = val
                .trim()
                .parse()
                .map_err(|e| Error::Parse(format!("bad value {val:?}: {e}")))?;
            pairs.push((idx, val));
        }
        Self::from_pairs(pairs)
    }
}

impl fmt::Display for SparseVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, (n, v)) in self.entries.iter().enumerate() {
            if k > 0 {
                f.write_str(";")?;
            }
            write!(f, "{n}:{v}")?;
        }
        Ok(())
    }
}

/// Sorted finite set of positive integers.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct IndexSet {
    items: Vec<usize>,
}

impl IndexSet {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Sorts and deduplicates. Rejects index 0.
    pub fn new(mut items: Vec<usize>) -> Result<Self> {
        items.sort_unstable();
        items.dedup();
        if items.first() == Some(&0) {
            return input("indices are 1-based; got 0");
        }
        Ok(Self { items })
    }

    /// `{lo, lo+1, ..., hi}`; empty when `hi < lo`.
    pub fn interval(lo: usize, hi: usize) -> Self {
        assert!(lo >= 1, "indices are 1-based");
        Self {
            items: (lo..=hi).collect(),
        }
    }

    pub(crate) fn from_sorted_unchecked(items: Vec<usize>) -> Self {
        debug_assert!(items.windows(2).all(|w| w[0] < w[1]));
        Self { items }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn contains(&self, n: usize) -> bool {
        self.items.binary_search(&n).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.items.iter().copied()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.items
    }

    pub fn max(&self) -> Option<usize> {
        self.items.last().copied()
    }

    pub fn intersection(&self, other: &IndexSet) -> IndexSet {
        Self {
            items: self.iter().filter(|&n| other.contains(n)).collect(),
        }
    }

    pub fn union(&self, other: &IndexSet) -> IndexSet {
        let mut items: Vec<usize> = self.iter().chain(other.iter()).collect();
        items.sort_unstable();
        items.dedup();
        Self { items }
    }

    pub fn difference(&self, other: &IndexSet) -> IndexSet {
        Self {
            items: self.iter().filter(|&n| !other.contains(n)).collect(),
        }
    }

    pub fn is_subset(&self, other: &IndexSet) -> bool {
        self.iter().all(|n| other.contains(n))
    }

    /// `"1;4;9"`.
    pub fn to_cell(&self) -> String {
        self.to_string()
    }

    pub fn from_cell(cell: &str) -> Result<Self> {
        let cell = cell.trim();
        if cell.is_empty() {
            return Ok(Self::empty());
        }
        let items = cell
            .split(';')
            .map(|s| {
                s.trim()
                    .parse::<usize>()
                    .map_err(|e| Error::Parse(format!("bad index {s:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(items)
    }
}

impl fmt::Display for IndexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, n) in self.items.iter().enumerate() {
            if k > 0 {
                f.write_str(";")?;
            }
            write!(f, "{n}")?;
        }
        Ok(())
    }
}

impl FromIterator<usize> for IndexSet {
    fn from_iter<T: IntoIterator<Item = usize>>(iter: T) -> Self {
        let mut items: Vec<usize> = iter.into_iter().collect();
        items.sort_unstable();
        items.dedup();
        assert!(items.first() != Some(&0), "indices are 1-based");
        Self { items }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn of(x: f64) -> Sign {
        if x < 0.0 {
            Sign::Minus
        } else {
            Sign::Plus
        }
    }
}

/// Signs `ε_n ∈ {−1, +1}` on a finite set of indices.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SignPattern {
    signs: Vec<(usize, Sign)>,
}

impl SignPattern {
    pub fn from_pairs<I: IntoIterator<Item = (usize, Sign)>>(pairs: I) -> Result<Self> {
        let mut signs: Vec<(usize, Sign)> = pairs.into_iter().collect();
        signs.sort_by_key(|&(n, _)| n);
        if signs.windows(2).any(|w| w[0].0 == w[1].0) {
            return input("duplicate index in sign pattern");
        }
        if signs.first().map_or(false, |s| s.0 == 0) {
            return input("indices are 1-based; got 0");
        }
        Ok(Self { signs })
    }

    pub fn all_plus(set: &IndexSet) -> Self {
        Self {
            signs: set.iter().map(|n| (n, Sign::Plus)).collect(),
        }
    }

    /// Signs given by bit `k` of `bits` for the `k`-th element of `set`
    /// (bit set means minus).
    pub fn from_bits(set: &IndexSet, bits: u64) -> Self {
        Self {
            signs: set
                .iter()
                .enumerate()
                .map(|(k, n)| {
                    let s = if (bits >> k) & 1 == 1 {
                        Sign::Minus
                    } else {
                        Sign::Plus
                    };
                    (n, s)
                })
                .collect(),
        }
    }

    pub fn get(&self, n: usize) -> Option<Sign> {
        self.signs
            .binary_search_by_key(&n, |&(i, _)| i)
            .ok()
            .map(|pos| self.signs[pos].1)
    }

    pub fn domain(&self) -> IndexSet {
        IndexSet::from_sorted_unchecked(self.signs.iter().map(|&(n, _)| n).collect())
    }
}

/// Moduli of the coefficients of `f`, sorted non-increasingly.
pub fn rearrange(f: &SparseVec) -> Vec<f64> {
    let mut a: Vec<f64> = f.iter().map(|(_, v)| v.abs()).collect();
    a.sort_unstable_by(|x, y| y.total_cmp(x));
    a
}

/// `Σ_{n∈A} ε_n e_n`; all-plus when `eps` is `None`.
pub fn indicator(set: &IndexSet, eps: Option<&SignPattern>) -> Result<SparseVec> {
    let entries = set
        .iter()
        .map(|n| match eps {
            None => Ok((n, 1.0)),
            Some(p) => p
                .get(n)
                .map(|s| (n, s.value()))
                .ok_or_else(|| Error::Input(format!("missing sign for index {n}"))),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SparseVec::from_sorted_unchecked(entries))
}

/// `Σ_n f_n g_n` over the common support.
pub fn pair(f: &SparseVec, g: &SparseVec) -> f64 {
    let (a, b) = (f.entries(), g.entries());
    let (mut i, mut j) = (0, 0);
    let mut acc = 0.0;
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            Ordering::Less => i += 1,
            Ordering::Greater => j += 1,
            Ordering::Equal => {
                acc += a[i].1 * b[j].1;
                i += 1;
                j += 1;
            }
        }
    }
    acc
}

/// Restriction of `f` to the indices in `set`.
pub fn project(f: &SparseVec, set: &IndexSet) -> SparseVec {
    SparseVec::from_sorted_unchecked(f.iter().filter(|&(n, _)| set.contains(n)).collect())
}

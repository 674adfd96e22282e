//! Integer frequency-support sets and the lattice arithmetic that the
//! counting results depend on.
//!
//! A [`SupportSet`] is a finite, deduplicated, lexicographically ordered set
//! of frequency vectors in `Z^n`. The canonical ordering fixes the coefficient
//! layout used by every feature matrix and serialized model.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which `ℓq` norm bounds a ball-shaped support.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LqNorm {
    #[serde(rename = "1")]
    One,
    #[serde(rename = "2")]
    Two,
    #[serde(rename = "inf")]
    Inf,
}

/// Finite set of integer frequency vectors in `Z^n`, canonically ordered.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawSupport", into = "RawSupport")]
pub struct SupportSet {
    dims: usize,
    freqs: Vec<Vec<i64>>,
}

#[derive(Serialize, Deserialize)]
struct RawSupport {
    dims: usize,
    freqs: Vec<Vec<i64>>,
}

impl TryFrom<RawSupport> for SupportSet {
    type Error = Error;
    fn try_from(raw: RawSupport) -> Result<Self> {
        SupportSet::new(raw.dims, raw.freqs)
    }
}

impl From<SupportSet> for RawSupport {
    fn from(s: SupportSet) -> Self {
        RawSupport { dims: s.dims, freqs: s.freqs }
    }
}

impl SupportSet {
    /// Builds a support from arbitrary frequency vectors, deduplicating and
    /// sorting them into the canonical lexicographic order.
    pub fn new(dims: usize, freqs: Vec<Vec<i64>>) -> Result<Self> {
        if dims == 0 {
            return Err(Error::InvalidConfig("dims must be positive".into()));
        }
        if freqs.is_empty() {
            return Err(Error::InvalidConfig("support must contain at least one frequency".into()));
        }
        for f in &freqs {
            if f.len() != dims {
                return Err(Error::DimensionMismatch { expected: dims, got: f.len() });
            }
        }
        let set: BTreeSet<Vec<i64>> = freqs.into_iter().collect();
        Ok(SupportSet { dims, freqs: set.into_iter().collect() })
    }

    /// Rectangular support `{k : lo[i] <= k[i] <= hi[i]}`.
    pub fn rect(lo: &[i64], hi: &[i64]) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch { expected: lo.len(), got: hi.len() });
        }
        if lo.is_empty() {
            return Err(Error::InvalidConfig("dims must be positive".into()));
        }
        for i in 0..lo.len() {
            if lo[i] > hi[i] {
                return Err(Error::InvalidConfig(format!(
                    "lo[{i}]={} exceeds hi[{i}]={}",
                    lo[i], hi[i]
                )));
            }
        }
        let mut freqs = Vec::new();
        let mut cur = lo.to_vec();
        loop {
            freqs.push(cur.clone());
            // odometer increment, last axis fastest, keeps lexicographic order
            let mut axis = lo.len();
            while axis > 0 {
                axis -= 1;
                if cur[axis] < hi[axis] {
                    cur[axis] += 1;
                    for a in axis + 1..lo.len() {
                        cur[a] = lo[a];
                    }
                    break;
                }
                if axis == 0 {
                    return Ok(SupportSet { dims: lo.len(), freqs });
                }
            }
        }
    }

    /// Centered rectangular support with the given odd side lengths,
    /// e.g. `[3, 3]` is the 3×3 support `[-1,1]²`.
    pub fn centered_rect(sizes: &[usize]) -> Result<Self> {
        let mut lo = Vec::with_capacity(sizes.len());
        let mut hi = Vec::with_capacity(sizes.len());
        for &s in sizes {
            if s == 0 || s % 2 == 0 {
                return Err(Error::InvalidConfig(format!("side length {s} must be odd and positive")));
            }
            let h = (s as i64 - 1) / 2;
            lo.push(-h);
            hi.push(h);
        }
        SupportSet::rect(&lo, &hi)
    }

    /// All integer vectors with `‖k‖_q <= d`.
    pub fn lq_ball(dims: usize, d: f64, q: LqNorm) -> Result<Self> {
        if dims == 0 {
            return Err(Error::InvalidConfig("dims must be positive".into()));
        }
        if !(d >= 0.0) {
            return Err(Error::InvalidConfig(format!("radius d={d} must be nonnegative")));
        }
        let r = d.floor() as i64;
        let mut freqs = Vec::new();
        let mut k = vec![-r; dims];
        'outer: loop {
            let inside = match q {
                LqNorm::One => k.iter().map(|v| v.abs()).sum::<i64>() as f64 <= d,
                LqNorm::Two => k.iter().map(|v| (v * v) as f64).sum::<f64>() <= d * d,
                LqNorm::Inf => k.iter().map(|v| v.abs()).max().unwrap() as f64 <= d,
            };
            if inside {
                freqs.push(k.clone());
            }
            let mut axis = dims;
            while axis > 0 {
                axis -= 1;
                if k[axis] < r {
                    k[axis] += 1;
                    for a in axis + 1..dims {
                        k[a] = -r;
                    }
                    continue 'outer;
                }
                if axis == 0 {
                    break 'outer;
                }
            }
        }
        SupportSet::new(dims, freqs)
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.freqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs.is_empty()
    }

    /// Frequencies in canonical (lexicographic) order.
    pub fn freqs(&self) -> &[Vec<i64>] {
        &self.freqs
    }

    pub fn contains(&self, k: &[i64]) -> bool {
        self.freqs.binary_search_by(|f| f.as_slice().cmp(k)).is_ok()
    }

    /// Canonical index of a frequency, if present.
    pub fn index_of(&self, k: &[i64]) -> Option<usize> {
        self.freqs.binary_search_by(|f| f.as_slice().cmp(k)).ok()
    }

    /// Map from frequency vector to canonical index.
    pub fn index_map(&self) -> HashMap<Vec<i64>, usize> {
        self.freqs.iter().cloned().enumerate().map(|(i, f)| (f, i)).collect()
    }

    /// True when `k ∈ Γ ⇒ −k ∈ Γ`.
    pub fn is_symmetric(&self) -> bool {
        self.freqs.iter().all(|k| {
            let neg: Vec<i64> = k.iter().map(|v| -v).collect();
            self.contains(&neg)
        })
    }

    /// The reflected set `−Γ`.
    pub fn negate(&self) -> SupportSet {
        let freqs = self.freqs.iter().map(|k| k.iter().map(|v| -v).collect()).collect();
        SupportSet::new(self.dims, freqs).expect("negation preserves validity")
    }

    /// Largest `|k_i|` over all frequencies and axes.
    pub fn max_abs_freq(&self) -> i64 {
        self.freqs
            .iter()
            .flat_map(|k| k.iter().map(|v| v.abs()))
            .max()
            .unwrap_or(0)
    }

    /// The set `Γ⊖Λ` of shifts `l ∈ Γ` with `l − k ∈ Γ` for all `k ∈ Λ`:
    /// all indices at which `Λ` can be centered while remaining inside `Γ`.
    /// May be empty.
    pub fn shift_complement(&self, lambda: &SupportSet) -> Result<Vec<Vec<i64>>> {
        if lambda.dims != self.dims {
            return Err(Error::DimensionMismatch { expected: self.dims, got: lambda.dims });
        }
        let mut shifts = Vec::new();
        for l in &self.freqs {
            let ok = lambda.freqs.iter().all(|k| {
                let shifted: Vec<i64> = l.iter().zip(k).map(|(a, b)| a - b).collect();
                self.contains(&shifted)
            });
            if ok {
                shifts.push(l.clone());
            }
        }
        Ok(shifts)
    }

    /// `|Γ⊖Λ|`.
    pub fn shift_complement_len(&self, lambda: &SupportSet) -> Result<usize> {
        Ok(self.shift_complement(lambda)?.len())
    }

    /// Minkowski sum `{k + l : k ∈ a, l ∈ b}`, deduplicated.
    pub fn minkowski_sum(&self, other: &SupportSet) -> Result<SupportSet> {
        if other.dims != self.dims {
            return Err(Error::DimensionMismatch { expected: self.dims, got: other.dims });
        }
        let mut set = BTreeSet::new();
        for k in &self.freqs {
            for l in &other.freqs {
                let sum: Vec<i64> = k.iter().zip(l).map(|(a, b)| a + b).collect();
                set.insert(sum);
            }
        }
        Ok(SupportSet { dims: self.dims, freqs: set.into_iter().collect() })
    }
}

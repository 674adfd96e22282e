//! Band-limited (trigonometric-polynomial) level-set functions:
//! construction, evaluation, products, and random real-valued instances
//! whose zero sets serve as test surfaces.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::support::SupportSet;

/// `exp(j·theta)`.
#[inline]
pub(crate) fn cis(theta: f64) -> Complex64 {
    Complex64::new(theta.cos(), theta.sin())
}

/// A finite Fourier series `ψ(x) = Σ_{k∈Λ} c_k exp(j2πk^T x)` on `[0,1)^n`,
/// with coefficients stored in the canonical order of its support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPoly", into = "RawPoly")]
pub struct TrigPolynomial {
    support: SupportSet,
    coeffs: Vec<Complex64>,
}

/// Wire form: coefficients as an interleaved `[re, im, re, im, …]` list.
#[derive(Serialize, Deserialize)]
struct RawPoly {
    support: SupportSet,
    coeffs: Vec<f64>,
}

impl TryFrom<RawPoly> for TrigPolynomial {
    type Error = Error;
    fn try_from(raw: RawPoly) -> Result<Self> {
        if raw.coeffs.len() != 2 * raw.support.len() {
            return Err(Error::InvalidConfig(format!(
                "expected {} interleaved coefficient values, got {}",
                2 * raw.support.len(),
                raw.coeffs.len()
            )));
        }
        let coeffs = raw
            .coeffs
            .chunks_exact(2)
            .map(|c| Complex64::new(c[0], c[1]))
            .collect();
        TrigPolynomial::new(raw.support, coeffs)
    }
}

impl From<TrigPolynomial> for RawPoly {
    fn from(p: TrigPolynomial) -> Self {
        let coeffs = p.coeffs.iter().flat_map(|c| [c.re, c.im]).collect();
        RawPoly { support: p.support, coeffs }
    }
}

impl TrigPolynomial {
    pub fn new(support: SupportSet, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != support.len() {
            return Err(Error::InvalidConfig(format!(
                "{} coefficients for a support of cardinality {}",
                coeffs.len(),
                support.len()
            )));
        }
        Ok(TrigPolynomial { support, coeffs })
    }

    /// The constant polynomial `ψ ≡ value` in `n` dimensions.
    pub fn constant(dims: usize, value: Complex64) -> Result<Self> {
        let support = SupportSet::new(dims, vec![vec![0; dims]])?;
        TrigPolynomial::new(support, vec![value])
    }

    pub fn support(&self) -> &SupportSet {
        &self.support
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn dims(&self) -> usize {
        self.support.dims()
    }

    pub fn coeff_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `ψ(x) = Σ c_k exp(j2πk^T x)`.
    pub fn evaluate(&self, x: &[f64]) -> Result<Complex64> {
        if x.len() != self.dims() {
            return Err(Error::DimensionMismatch { expected: self.dims(), got: x.len() });
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, c) in self.support.freqs().iter().zip(&self.coeffs) {
            let phase: f64 = k.iter().zip(x).map(|(ki, xi)| *ki as f64 * xi).sum();
            acc += c * cis(2.0 * std::f64::consts::PI * phase);
        }
        Ok(acc)
    }

    fn evaluate_real(&self, x: &[f64]) -> f64 {
        self.evaluate(x).expect("dimension checked by caller").re
    }

    /// True when the support is symmetric and `c_{−k} = conj(c_k)`, so that
    /// `ψ(x)` is real for every `x`.
    pub fn is_real_valued(&self, tol: f64) -> bool {
        if !self.support.is_symmetric() {
            return false;
        }
        self.support.freqs().iter().zip(&self.coeffs).all(|(k, c)| {
            let neg: Vec<i64> = k.iter().map(|v| -v).collect();
            let idx = self.support.index_of(&neg).expect("symmetric support");
            (self.coeffs[idx] - c.conj()).norm() <= tol
        })
    }

    /// Coefficient-wise product: support is the Minkowski sum, coefficients
    /// by discrete convolution, so the zero set is the union of zero sets.
    pub fn multiply(&self, other: &TrigPolynomial) -> Result<TrigPolynomial> {
        let support = self.support.minkowski_sum(&other.support)?;
        let mut acc: HashMap<Vec<i64>, Complex64> = HashMap::new();
        for (k, ck) in self.support.freqs().iter().zip(&self.coeffs) {
            for (l, cl) in other.support.freqs().iter().zip(&other.coeffs) {
                let sum: Vec<i64> = k.iter().zip(l).map(|(a, b)| a + b).collect();
                *acc.entry(sum).or_insert(Complex64::new(0.0, 0.0)) += ck * cl;
            }
        }
        let coeffs = support
            .freqs()
            .iter()
            .map(|k| acc.get(k).copied().unwrap_or(Complex64::new(0.0, 0.0)))
            .collect();
        TrigPolynomial::new(support, coeffs)
    }

    /// Random real-valued polynomial: i.i.d. complex Gaussian coefficients,
    /// symmetrized `c_{−k} ← conj(c_k)` and `c_0 ← Re(c_0)`, then normalized
    /// to `‖c‖ = 1`. Deterministic given the seed.
    pub fn random_real(support: &SupportSet, seed: u64) -> Result<TrigPolynomial> {
        if !support.is_symmetric() {
            return Err(Error::AsymmetricSupport);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut coeffs = vec![None; support.len()];
        for (i, k) in support.freqs().iter().enumerate() {
            if coeffs[i].is_some() {
                continue;
            }
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            if k.iter().all(|v| *v == 0) {
                coeffs[i] = Some(Complex64::new(re, 0.0));
            } else {
                let neg: Vec<i64> = k.iter().map(|v| -v).collect();
                let j = support.index_of(&neg).expect("symmetric support");
                let c = Complex64::new(re, im);
                coeffs[i] = Some(c);
                coeffs[j] = Some(c.conj());
            }
        }
        let mut coeffs: Vec<Complex64> = coeffs.into_iter().map(|c| c.unwrap()).collect();
        let norm = coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        for c in &mut coeffs {
            *c /= norm;
        }
        TrigPolynomial::new(support.clone(), coeffs)
    }

    /// Draws `count` points on the zero set of a real-valued polynomial by
    /// repeated random-line search: pick a random point and direction, scan
    /// for a sign change at resolution `1/(8·maxfreq)`, then bisect until the
    /// residual `|ψ|` falls below `1e−12·max(1, ‖c‖)`.
    pub fn sample_zero_set(&self, count: usize, seed: u64) -> Result<PointCloud> {
        self.sample_zero_set_bounded(count, seed, 10_000)
    }

    /// Draws `oversample · count` zero-set points and keeps a greedy
    /// farthest-point subset of `count`. A minimal-size i.i.d. design is
    /// near-singular with non-negligible probability; the spread subset keeps
    /// the lifted feature matrix well conditioned.
    pub fn sample_zero_set_spread(
        &self,
        count: usize,
        oversample: usize,
        seed: u64,
    ) -> Result<PointCloud> {
        if oversample == 0 {
            return Err(Error::InvalidConfig("oversample factor must be ≥ 1".into()));
        }
        if count == 0 {
            return Ok(PointCloud::empty(self.dims()));
        }
        let pool = self.sample_zero_set(count * oversample, seed)?;
        pool.farthest_subset(count)
    }

    /// Same as [`sample_zero_set`](Self::sample_zero_set) with an explicit
    /// bound on the number of line draws.
    pub fn sample_zero_set_bounded(
        &self,
        count: usize,
        seed: u64,
        max_draws: usize,
    ) -> Result<PointCloud> {
        if !self.is_real_valued(1e-12 * self.coeff_norm().max(1.0)) {
            return Err(Error::AsymmetricSupport);
        }
        let n = self.dims();
        if count == 0 {
            return Ok(PointCloud::empty(n));
        }
        let tol = 1e-12 * self.coeff_norm().max(1.0);
        let maxfreq = self.support.max_abs_freq().max(1);
        let steps = 8 * maxfreq as usize;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut cloud = PointCloud::empty(n);
        let mut draws = 0usize;
        while cloud.len() < count {
            if draws >= max_draws {
                return Err(Error::NoZeroSetFound { draws });
            }
            draws += 1;
            let origin: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
            let mut dir: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
            let norm = dir.iter().map(|d| d * d).sum::<f64>().sqrt();
            if norm < 1e-12 {
                continue;
            }
            for d in &mut dir {
                *d /= norm;
            }
            let at = |t: f64| -> Vec<f64> {
                origin
                    .iter()
                    .zip(&dir)
                    .map(|(o, d)| (o + t * d).rem_euclid(1.0))
                    .collect()
            };
            let mut prev_t = 0.0;
            let mut prev_v = self.evaluate_real(&at(0.0));
            for s in 1..=steps {
                let t = s as f64 / steps as f64;
                let v = self.evaluate_real(&at(t));
                if prev_v == 0.0 {
                    cloud.push(at(prev_t), None)?;
                    break;
                }
                if prev_v * v < 0.0 {
                    if let Some(root) = self.bisect(&at, prev_t, prev_v, t, v, tol) {
                        cloud.push(at(root), None)?;
                    }
                    break;
                }
                prev_t = t;
                prev_v = v;
            }
        }
        Ok(cloud)
    }

    fn bisect(
        &self,
        at: &dyn Fn(f64) -> Vec<f64>,
        mut a: f64,
        mut fa: f64,
        mut b: f64,
        _fb: f64,
        tol: f64,
    ) -> Option<f64> {
        // run the bisection to interval collapse rather than stopping at
        // `tol`: the extra iterations are cheap and push the residual to the
        // rounding floor, which keeps the singular values of downstream
        // feature matrices clean near zero
        let mut best = (f64::INFINITY, a);
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if mid <= a || mid >= b {
                break;
            }
            let fm = self.evaluate_real(&at(mid));
            if fm.abs() < best.0 {
                best = (fm.abs(), mid);
            }
            if fm == 0.0 {
                break;
            }
            if fa * fm < 0.0 {
                b = mid;
            } else {
                a = mid;
                fa = fm;
            }
        }
        if best.0 <= tol {
            Some(best.1)
        } else {
            None
        }
    }
}

/// Samples a union of surfaces per component: `counts[i]` points are drawn on
/// the zero set of `factors[i]` and labeled with the component index.
pub fn sample_union(
    factors: &[TrigPolynomial],
    counts: &[usize],
    seed: u64,
) -> Result<PointCloud> {
    if factors.is_empty() || factors.len() != counts.len() {
        return Err(Error::InvalidConfig(format!(
            "{} factors for {} per-component counts",
            factors.len(),
            counts.len()
        )));
    }
    let dims = factors[0].dims();
    let mut points = Vec::new();
    let mut labels = Vec::new();
    for (i, (poly, &count)) in factors.iter().zip(counts).enumerate() {
        let part = poly.sample_zero_set(count, seed.wrapping_add(i as u64).wrapping_mul(0x9e3779b97f4a7c15))?;
        for p in part.points() {
            points.push(p.clone());
            labels.push(i);
        }
    }
    PointCloud::with_labels(dims, points, labels)
}

//! Surface recovery from samples: null-space estimation, minimal-support
//! recovery, sum-of-squares recovery for over-estimated supports, and the
//! phase-transition experiment harness.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::lifting::{feature_matrix, lift, RANK_TOL};
use crate::support::SupportSet;
use crate::trigpoly::TrigPolynomial;

/// Orthonormal basis of the annihilating coefficient vectors of a sample set:
/// each vector `n` satisfies `n^T Φ_Γ(x_i) ≈ 0` for all samples.
#[derive(Debug, Clone)]
pub struct NullSpaceBasis {
    support: SupportSet,
    vectors: Vec<DVector<Complex64>>,
    sigma: Vec<f64>,
}

impl NullSpaceBasis {
    pub fn support(&self) -> &SupportSet {
        &self.support
    }

    pub fn vectors(&self) -> &[DVector<Complex64>] {
        &self.vectors
    }

    pub fn dim(&self) -> usize {
        self.vectors.len()
    }

    /// Singular-value spectrum of the feature matrix used for the cut,
    /// descending.
    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    /// Rank of the feature matrix implied by the cut.
    pub fn rank(&self) -> usize {
        self.support.len() - self.vectors.len()
    }

    /// Norm of the residual of `v` after projecting onto the basis.
    /// The basis vectors are orthonormal, so this measures membership.
    pub fn projection_residual(&self, v: &DVector<Complex64>) -> f64 {
        let mut residual = v.clone();
        for n in &self.vectors {
            let coef: Complex64 = n.iter().zip(v.iter()).map(|(a, b)| a.conj() * b).sum();
            residual -= n * coef;
        }
        residual.norm()
    }
}

/// Estimates the annihilating null space of `Φ_Γ(X)` from the feature-side
/// Gram `Φ·Φ^H`: eigenvectors whose singular value `σ = √λ` falls at or
/// below `tol·σ_max` are conjugated into annihilators (`n^T Φ = 0`).
pub fn nullspace(cloud: &PointCloud, gamma: &SupportSet, tol: f64) -> Result<NullSpaceBasis> {
    let phi = feature_matrix(cloud, gamma)?;
    let card = gamma.len();
    // A direct SVD keeps the small singular values accurate to ~ε·σ_max;
    // going through the Gram Φ·Φ^H would square the conditioning and bury
    // everything below √ε·σ_max in round-off, which matters for the cut.
    let svd = phi.data().clone().svd(true, false);
    let u = svd.u.as_ref().expect("left singular vectors requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| {
        svd.singular_values[b].partial_cmp(&svd.singular_values[a]).unwrap()
    });
    // report a full-length spectrum: the |Γ|−min(|Γ|,N) structural zeros are
    // appended explicitly
    let mut sigma: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    sigma.resize(card, 0.0);
    let smax = sigma[0];
    let rank = sigma.iter().filter(|&&s| s > tol * smax).count();
    // Null space = orthogonal complement of the kept left singular vectors,
    // read off the complement projector I − U_r·U_r^H, whose eigenproblem is
    // perfectly conditioned (eigenvalues 0 and 1).
    let mut proj: DMatrix<Complex64> = DMatrix::identity(card, card);
    for (pos, &i) in order.iter().enumerate() {
        if pos >= rank {
            break;
        }
        let ui = u.column(i);
        for a in 0..card {
            for b in 0..card {
                proj[(a, b)] -= ui[a] * ui[b].conj();
            }
        }
    }
    let eig = SymmetricEigen::new(proj);
    let mut vectors = Vec::with_capacity(card - rank);
    for (i, l) in eig.eigenvalues.iter().enumerate() {
        if *l > 0.5 {
            let v = eig.eigenvectors.column(i);
            vectors.push(DVector::from_iterator(card, v.iter().map(|c| c.conj())));
        }
    }
    debug_assert_eq!(vectors.len(), card - rank);
    Ok(NullSpaceBasis { support: gamma.clone(), vectors, sigma })
}

/// Recovers the minimal polynomial from samples when the null space at
/// `Γ = Λ` is one-dimensional. The phase is fixed so the largest-modulus
/// coefficient is real positive and `‖c‖ = 1`.
pub fn recover_minimal(cloud: &PointCloud, lambda: &SupportSet) -> Result<TrigPolynomial> {
    recover_minimal_tol(cloud, lambda, RANK_TOL)
}

pub fn recover_minimal_tol(
    cloud: &PointCloud,
    lambda: &SupportSet,
    tol: f64,
) -> Result<TrigPolynomial> {
    let basis = nullspace(cloud, lambda, tol)?;
    match basis.dim() {
        0 => Err(Error::NoAnnihilator),
        1 => {
            let mut c = basis.vectors[0].clone();
            let (mut i0, mut best_mod) = (0usize, 0.0);
            for (i, v) in c.iter().enumerate() {
                if v.norm() > best_mod {
                    best_mod = v.norm();
                    i0 = i;
                }
            }
            let neg: Vec<i64> = lambda.freqs()[i0].iter().map(|v| -v).collect();
            if let Some(j0) = lambda.index_of(&neg) {
                // c = e^{jφ}·r with r conjugate-symmetric, so c_k·c_{−k} =
                // e^{2jφ}|r_k|²; undoing φ restores symmetry (up to a real
                // sign) and makes the recovered polynomial real-valued.
                let half = (c[i0] * c[j0]).arg() * 0.5;
                c *= Complex64::from_polar(1.0, -half);
                if c[i0].re < 0.0 {
                    c = -c;
                }
                // average out residual asymmetry so the result is exactly
                // conjugate-symmetric
                let snapshot = c.clone();
                for (i, k) in lambda.freqs().iter().enumerate() {
                    let neg: Vec<i64> = k.iter().map(|v| -v).collect();
                    if let Some(j) = lambda.index_of(&neg) {
                        c[i] = (snapshot[i] + snapshot[j].conj()) * 0.5;
                    }
                }
            } else {
                // asymmetric support: make the largest coefficient real
                // positive instead
                let phase = c[i0].conj() / best_mod;
                c *= phase;
            }
            c /= Complex64::new(c.norm(), 0.0);
            TrigPolynomial::new(lambda.clone(), c.iter().copied().collect())
        }
        dim => Err(Error::AmbiguousRecovery { dim }),
    }
}

/// Surface represented as the zero set of the sum-of-squares polynomial
/// `γ(x) = Σ_i |n_i^T Φ_Γ(x)|²` over an estimated null basis.
#[derive(Debug, Clone)]
pub struct SosSurface {
    basis: NullSpaceBasis,
}

impl SosSurface {
    pub fn basis(&self) -> &NullSpaceBasis {
        &self.basis
    }

    /// `γ(x) ≥ 0`; vanishes exactly on the common zeros of the null-space
    /// polynomials.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        let phi = lift(x, self.basis.support())?;
        let mut acc = 0.0;
        for n in &self.basis.vectors {
            let mu: Complex64 = n.iter().zip(phi.iter()).map(|(a, b)| a * b).sum();
            acc += mu.norm_sqr();
        }
        Ok(acc)
    }
}

/// Sum-of-squares recovery for a (possibly over-estimated) lifting support.
pub fn recover_sos(cloud: &PointCloud, gamma: &SupportSet, tol: f64) -> Result<SosSurface> {
    let basis = nullspace(cloud, gamma, tol)?;
    if basis.dim() == 0 {
        return Err(Error::NoAnnihilator);
    }
    Ok(SosSurface { basis })
}

/// Expands `γ(x)` in coefficient form: a trig polynomial with support
/// `Γ ⊕ (−Γ)` whose coefficients are the summed autocorrelations of the
/// null vectors.
pub fn sos_as_polynomial(surface: &SosSurface) -> Result<TrigPolynomial> {
    let gamma = surface.basis.support();
    let out_support = gamma.minkowski_sum(&gamma.negate())?;
    let mut acc: HashMap<Vec<i64>, Complex64> = HashMap::new();
    for n in &surface.basis.vectors {
        for (a, ka) in gamma.freqs().iter().enumerate() {
            for (b, kb) in gamma.freqs().iter().enumerate() {
                // |μ(x)|² = Σ_{a,b} n_a conj(n_b) exp(j2π(k_a − k_b)^T x)
                let m: Vec<i64> = ka.iter().zip(kb).map(|(p, q)| p - q).collect();
                *acc.entry(m).or_insert(Complex64::new(0.0, 0.0)) += n[a] * n[b].conj();
            }
        }
    }
    let coeffs = out_support
        .freqs()
        .iter()
        .map(|k| acc.get(k).copied().unwrap_or(Complex64::new(0.0, 0.0)))
        .collect();
    TrigPolynomial::new(out_support, coeffs)
}

/// Embeds the coefficients of `ψ·exp(j2πk_0^T x)` for every shift
/// `k_0 ∈ Γ⊖Λ` into `C^{|Γ|}`; each is a true annihilator of on-surface
/// features (the null-space shift structure).
pub fn shifted_embeddings(
    poly: &TrigPolynomial,
    gamma: &SupportSet,
) -> Result<Vec<DVector<Complex64>>> {
    let lambda = poly.support();
    let shifts = gamma.shift_complement(lambda)?;
    let mut out = Vec::with_capacity(shifts.len());
    for shift in shifts {
        let mut v = DVector::from_element(gamma.len(), Complex64::new(0.0, 0.0));
        for (k, c) in lambda.freqs().iter().zip(poly.coeffs()) {
            let target: Vec<i64> = k.iter().zip(&shift).map(|(a, b)| a + b).collect();
            let idx = gamma.index_of(&target).ok_or_else(|| {
                Error::InvalidConfig("shifted support escapes Γ; Λ must be symmetric".into())
            })?;
            v[idx] = *c;
        }
        out.push(v);
    }
    Ok(out)
}

fn derive_seed(master: u64, parts: &[u64]) -> u64 {
    // splitmix64 chain
    let mut z = master;
    for &p in parts {
        z = z.wrapping_add(0x9e3779b97f4a7c15).wrapping_add(p);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^= z >> 31;
    }
    z
}

/// Phase-transition experiment configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhaseConfig {
    /// Minimal supports of the irreducible factors (one entry for an
    /// irreducible surface).
    pub factor_supports: Vec<SupportSet>,
    /// Lifting support; defaults to the product support `Λ = ⊕ Λ_i`.
    #[serde(default)]
    pub gamma: Option<SupportSet>,
    /// Per-factor sample counts for each table row.
    pub counts: Vec<Vec<usize>>,
    pub trials: usize,
    pub seed: u64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Fresh on-surface samples per factor used for the residual check.
    #[serde(default = "default_holdout")]
    pub holdout: usize,
    #[serde(default = "default_residual_tol")]
    pub residual_tol: f64,
    /// Oversampling factor for spread (farthest-point) factor designs;
    /// `None` draws factor samples i.i.d. Minimal-size i.i.d. designs are
    /// near-singular often enough to visibly depress the success plateau.
    #[serde(default)]
    pub spread_oversample: Option<usize>,
}

fn default_tol() -> f64 {
    RANK_TOL
}

fn default_holdout() -> usize {
    25
}

fn default_residual_tol() -> f64 {
    1e-8
}

/// One row of a phase-transition table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhaseRow {
    pub counts: Vec<usize>,
    pub total: usize,
    pub trials: usize,
    pub successes: usize,
    pub fraction: f64,
}

fn draw_factor(
    support: &SupportSet,
    count: usize,
    holdout: usize,
    spread: Option<usize>,
    seed: u64,
) -> Result<(TrigPolynomial, PointCloud, PointCloud)> {
    // redraw the polynomial when its zero set is empty; the recovery itself
    // is never retried
    for attempt in 0..64u64 {
        let poly = TrigPolynomial::random_real(support, derive_seed(seed, &[attempt, 1]))?;
        let probe = poly.sample_zero_set_bounded(1, derive_seed(seed, &[attempt, 2]), 500);
        if probe.is_err() {
            continue;
        }
        let samples = match spread {
            Some(oversample) => {
                poly.sample_zero_set_spread(count, oversample, derive_seed(seed, &[attempt, 3]))?
            }
            None => poly.sample_zero_set(count, derive_seed(seed, &[attempt, 3]))?,
        };
        let fresh = poly.sample_zero_set(holdout.max(1), derive_seed(seed, &[attempt, 4]))?;
        return Ok((poly, samples, fresh));
    }
    Err(Error::NoZeroSetFound { draws: 64 })
}

/// Runs one recovery trial; success requires the null-space dimension to
/// match `|Γ⊖Λ|` exactly and every estimated null vector to annihilate the
/// held-out true-surface samples within `residual_tol`.
pub fn recovery_trial(cfg: &PhaseConfig, counts: &[usize], trial: usize) -> Result<bool> {
    let trial_seed = derive_seed(cfg.seed, &[trial as u64]);
    let mut product: Option<TrigPolynomial> = None;
    let mut cloud: Option<PointCloud> = None;
    let mut holdout_points: Vec<Vec<f64>> = Vec::new();
    for (i, (support, &count)) in cfg.factor_supports.iter().zip(counts).enumerate() {
        let (poly, samples, fresh) = draw_factor(
            support,
            count,
            cfg.holdout,
            cfg.spread_oversample,
            derive_seed(trial_seed, &[i as u64]),
        )?;
        product = Some(match product {
            None => poly,
            Some(p) => p.multiply(&poly)?,
        });
        cloud = Some(match cloud {
            None => samples,
            Some(c) => c.concat(samples)?,
        });
        holdout_points.extend(fresh.points().iter().cloned());
    }
    let product = product.expect("at least one factor");
    let cloud = cloud.expect("at least one factor");
    if cloud.is_empty() {
        return Ok(false);
    }
    let lambda = product.support();
    let gamma = cfg.gamma.clone().unwrap_or_else(|| lambda.clone());
    let expected_null = gamma.shift_complement_len(lambda)?;
    let basis = nullspace(&cloud, &gamma, cfg.tol)?;
    if basis.dim() != expected_null {
        return Ok(false);
    }
    for x in &holdout_points {
        let phi = lift(x, &gamma)?;
        for n in basis.vectors() {
            let r: Complex64 = n.iter().zip(phi.iter()).map(|(a, b)| a * b).sum();
            if r.norm() > cfg.residual_tol {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Success-probability table over the configured per-factor sample counts.
pub fn phase_transition(cfg: &PhaseConfig) -> Result<Vec<PhaseRow>> {
    if cfg.factor_supports.is_empty() {
        return Err(Error::InvalidConfig("at least one factor support required".into()));
    }
    if cfg.trials == 0 {
        return Err(Error::InvalidConfig("trials must be positive".into()));
    }
    for row in &cfg.counts {
        if row.len() != cfg.factor_supports.len() {
            return Err(Error::InvalidConfig(format!(
                "count row has {} entries for {} factors",
                row.len(),
                cfg.factor_supports.len()
            )));
        }
    }
    let dims = cfg.factor_supports[0].dims();
    for s in &cfg.factor_supports {
        if s.dims() != dims {
            return Err(Error::DimensionMismatch { expected: dims, got: s.dims() });
        }
        if !s.is_symmetric() {
            return Err(Error::AsymmetricSupport);
        }
    }
    let mut rows = Vec::new();
    for (row_idx, counts) in cfg.counts.iter().enumerate() {
        let mut successes = 0;
        for trial in 0..cfg.trials {
            let ok = recovery_trial(cfg, counts, row_idx * cfg.trials + trial)?;
            if ok {
                successes += 1;
            }
        }
        rows.push(PhaseRow {
            counts: counts.clone(),
            total: counts.iter().sum(),
            trials: cfg.trials,
            successes,
            fraction: successes as f64 / cfg.trials as f64,
        });
    }
    Ok(rows)
}

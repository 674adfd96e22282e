//! Anchor-point representation of band-limited functions restricted to a
//! surface: coefficients `α(x) = K(A)†·k_A(x)`, evaluation `f(x) = F·α(x)`,
//! least-squares learning of the output matrix `F`, and the projection-error
//! (autoencoder) diagnostic.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::{seq::SliceRandom, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::lifting::{feature_matrix, kernel_gram, kernel_value, lift, KernelConfig};
use crate::support::SupportSet;

/// Default relative eigenvalue cutoff for the Gram pseudo-inverse.
pub const PINV_CUTOFF: f64 = 1e-10;

/// Default relative singular-value cutoff for the feature-space
/// pseudo-inverse in [`AnchorModel::frequency_form`]. Near `√ε`, where the
/// truncation error of dropping a direction balances the round-off
/// amplification of inverting it.
pub const FEATURE_PINV_CUTOFF: f64 = 1e-8;

/// Anchor selection strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AnchorStrategy {
    /// Independent random draws from the candidate pool.
    Random,
    /// Pivoted selection maximizing the smallest eigenvalue of the growing
    /// anchor Gram.
    GreedyConditioning,
}

/// Hermitian pseudo-inverse via eigendecomposition: eigenvalues at or below
/// `cutoff·λ_max` are dropped, the rest inverted as `1/(λ + ridge)`.
fn hermitian_pinv(mat: &DMatrix<Complex64>, cutoff: f64, ridge: f64) -> DMatrix<Complex64> {
    let eig = SymmetricEigen::new(mat.clone());
    let lmax = eig.eigenvalues.iter().cloned().fold(0.0_f64, f64::max);
    let n = mat.nrows();
    let mut out = DMatrix::zeros(n, n);
    for (idx, l) in eig.eigenvalues.iter().enumerate() {
        if *l <= cutoff * lmax || *l <= 0.0 {
            continue;
        }
        let w = Complex64::new(1.0 / (l + ridge), 0.0);
        let u = eig.eigenvectors.column(idx);
        for a in 0..n {
            for b in 0..n {
                out[(a, b)] += w * u[a] * u[b].conj();
            }
        }
    }
    out
}

/// A function on a surface represented by anchor points, a kernel config,
/// and the output matrix `F` (column `i` holds `f(a_i)`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModel", into = "RawModel")]
pub struct AnchorModel {
    anchors: PointCloud,
    kernel: KernelConfig,
    outputs: DMatrix<Complex64>,
    ridge: f64,
    cutoff: f64,
    support: SupportSet,
    gram_pinv: DMatrix<Complex64>,
}

#[derive(Serialize, Deserialize)]
struct RawModel {
    anchors: PointCloud,
    kernel: KernelConfig,
    /// Row-major `M×N` output matrix, entries interleaved `[re, im, …]`.
    output_rows: usize,
    outputs: Vec<f64>,
    ridge: f64,
    cutoff: f64,
}

impl TryFrom<RawModel> for AnchorModel {
    type Error = Error;
    fn try_from(raw: RawModel) -> Result<Self> {
        let n = raw.anchors.len();
        if raw.outputs.len() != 2 * raw.output_rows * n {
            return Err(Error::InvalidConfig(format!(
                "expected {} output values, got {}",
                2 * raw.output_rows * n,
                raw.outputs.len()
            )));
        }
        let outputs = DMatrix::from_row_iterator(
            raw.output_rows,
            n,
            raw.outputs.chunks_exact(2).map(|c| Complex64::new(c[0], c[1])),
        );
        AnchorModel::new(raw.anchors, raw.kernel, outputs, raw.ridge, raw.cutoff)
    }
}

impl From<AnchorModel> for RawModel {
    fn from(m: AnchorModel) -> Self {
        let output_rows = m.outputs.nrows();
        let outputs = m
            .outputs
            .row_iter()
            .flat_map(|r| r.iter().flat_map(|c| [c.re, c.im]).collect::<Vec<_>>())
            .collect();
        RawModel {
            anchors: m.anchors,
            kernel: m.kernel,
            output_rows,
            outputs,
            ridge: m.ridge,
            cutoff: m.cutoff,
        }
    }
}

impl AnchorModel {
    /// Builds the model and caches `K(A)†`.
    pub fn new(
        anchors: PointCloud,
        kernel: KernelConfig,
        outputs: DMatrix<Complex64>,
        ridge: f64,
        cutoff: f64,
    ) -> Result<Self> {
        if anchors.is_empty() {
            return Err(Error::EmptyCloud);
        }
        if anchors.dims() != kernel.dims() {
            return Err(Error::DimensionMismatch { expected: kernel.dims(), got: anchors.dims() });
        }
        if outputs.ncols() != anchors.len() {
            return Err(Error::InvalidConfig(format!(
                "output matrix has {} columns for {} anchors",
                outputs.ncols(),
                anchors.len()
            )));
        }
        let support = kernel.support()?;
        let gram = kernel_gram(&anchors, &kernel)?;
        let gram_pinv = hermitian_pinv(gram.data(), cutoff, ridge);
        Ok(AnchorModel { anchors, kernel, outputs, ridge, cutoff, support, gram_pinv })
    }

    /// Autoencoder variant: outputs are the anchor coordinates themselves.
    pub fn autoencoder(anchors: PointCloud, kernel: KernelConfig, ridge: f64, cutoff: f64) -> Result<Self> {
        let dims = anchors.dims();
        let n = anchors.len();
        let mut outputs = DMatrix::zeros(dims, n);
        for (i, a) in anchors.points().iter().enumerate() {
            for (m, v) in a.iter().enumerate() {
                outputs[(m, i)] = Complex64::new(*v, 0.0);
            }
        }
        AnchorModel::new(anchors, kernel, outputs, ridge, cutoff)
    }

    pub fn anchors(&self) -> &PointCloud {
        &self.anchors
    }

    pub fn kernel(&self) -> &KernelConfig {
        &self.kernel
    }

    pub fn outputs(&self) -> &DMatrix<Complex64> {
        &self.outputs
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    pub fn ridge(&self) -> f64 {
        self.ridge
    }

    pub fn gram_pinv(&self) -> &DMatrix<Complex64> {
        &self.gram_pinv
    }

    /// `k_A(x)`: the kernel column `κ(a_i, x)`.
    pub fn kernel_column(&self, x: &[f64]) -> Result<DVector<Complex64>> {
        if x.len() != self.anchors.dims() {
            return Err(Error::DimensionMismatch { expected: self.anchors.dims(), got: x.len() });
        }
        Ok(DVector::from_iterator(
            self.anchors.len(),
            self.anchors
                .points()
                .iter()
                .map(|a| kernel_value(&self.kernel, &self.support, a, x)),
        ))
    }

    /// `α(x) = K(A)†·k_A(x)`, both factors via the kernel trick.
    pub fn alpha(&self, x: &[f64]) -> Result<DVector<Complex64>> {
        Ok(&self.gram_pinv * self.kernel_column(x)?)
    }

    /// `f(x) = F·α(x)`.
    pub fn eval(&self, x: &[f64]) -> Result<DVector<Complex64>> {
        Ok(&self.outputs * self.alpha(x)?)
    }

    /// Collapses the model to explicit frequency-domain coefficients
    /// `G = F·Φ(A)†`, so that `f(x) = G·Φ_Γ(x)`.
    ///
    /// Mathematically this evaluates the same function as [`eval`]: there,
    /// `F·(Φ(A)ᴴΦ(A))†·Φ(A)ᴴΦ_Γ(x)` is computed through the kernel trick,
    /// which never materializes `|Γ|`-dimensional objects but squares the
    /// condition number of `Φ(A)`. Solving instead through a singular value
    /// decomposition of `Φ(A)` itself (cutoff [`FEATURE_PINV_CUTOFF`] times
    /// the largest singular value) attains roughly twice the number of
    /// accurate digits on badly conditioned anchor sets.
    ///
    /// [`eval`]: AnchorModel::eval
    pub fn frequency_form(&self) -> Result<FrequencyForm> {
        let phi = feature_matrix(&self.anchors, &self.support)?;
        let svd = phi.data().clone().svd(true, true);
        let u = svd.u.as_ref().ok_or(Error::DegenerateSystem)?;
        let v_t = svd.v_t.as_ref().ok_or(Error::DegenerateSystem)?;
        let smax = svd.singular_values.max();
        let mut sinv = DMatrix::zeros(v_t.nrows(), u.ncols());
        for (i, s) in svd.singular_values.iter().enumerate() {
            if *s > FEATURE_PINV_CUTOFF * smax {
                sinv[(i, i)] = Complex64::new(1.0 / s, 0.0);
            }
        }
        let pinv = v_t.adjoint() * sinv * u.adjoint();
        Ok(FrequencyForm { support: self.support.clone(), coeffs: &self.outputs * pinv })
    }

    /// Squared reconstruction error `E(x) = ‖x − F·α(x)‖²` of the anchor
    /// autoencoder (outputs must be the anchor coordinates).
    pub fn projection_error(&self, x: &[f64]) -> Result<f64> {
        let rec = self.eval(x)?;
        if rec.len() != x.len() {
            return Err(Error::InvalidConfig(
                "projection error requires outputs to be the anchor coordinates".into(),
            ));
        }
        Ok(x.iter()
            .zip(rec.iter())
            .map(|(xi, ri)| {
                let d = Complex64::new(*xi, 0.0) - ri;
                d.norm_sqr()
            })
            .sum())
    }
}

/// Frequency-domain coefficients of an anchor model; see
/// [`AnchorModel::frequency_form`]. Row `m` holds the `|Γ|` coefficients of
/// output component `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyForm {
    support: SupportSet,
    coeffs: DMatrix<Complex64>,
}

impl FrequencyForm {
    pub fn support(&self) -> &SupportSet {
        &self.support
    }

    /// The `M × |Γ|` coefficient matrix `G`.
    pub fn coefficients(&self) -> &DMatrix<Complex64> {
        &self.coeffs
    }

    /// `f(x) = G·Φ_Γ(x)`.
    pub fn eval(&self, x: &[f64]) -> Result<DVector<Complex64>> {
        Ok(&self.coeffs * lift(x, &self.support)?)
    }
}

/// Chooses `count` anchors from a candidate pool.
pub fn select_anchors(
    pool: &PointCloud,
    count: usize,
    strategy: AnchorStrategy,
    kernel: &KernelConfig,
    seed: u64,
) -> Result<PointCloud> {
    if count == 0 {
        return Err(Error::InvalidConfig("anchor count must be ≥ 1".into()));
    }
    if pool.len() < count {
        return Err(Error::InsufficientCandidates { available: pool.len(), needed: count });
    }
    match strategy {
        AnchorStrategy::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut indices: Vec<usize> = (0..pool.len()).collect();
            indices.shuffle(&mut rng);
            indices.truncate(count);
            let points = indices.iter().map(|&i| pool.point(i).to_vec()).collect();
            PointCloud::new(pool.dims(), points)
        }
        AnchorStrategy::GreedyConditioning => {
            let support = kernel.support()?;
            // precompute the pool Gram once; candidate evaluation below only
            // gathers submatrices from it
            let n = pool.len();
            let mut pool_gram = DMatrix::zeros(n, n);
            for a in 0..n {
                pool_gram[(a, a)] = Complex64::new(support.len() as f64, 0.0);
                for b in a + 1..n {
                    let v = kernel_value(kernel, &support, pool.point(a), pool.point(b));
                    pool_gram[(a, b)] = v;
                    pool_gram[(b, a)] = v.conj();
                }
            }
            let mut selected: Vec<usize> = Vec::with_capacity(count);
            let mut remaining: Vec<usize> = (0..n).collect();
            for _ in 0..count {
                let mut best = (f64::NEG_INFINITY, remaining[0]);
                for &cand in &remaining {
                    let mut idxs = selected.clone();
                    idxs.push(cand);
                    let m = idxs.len();
                    let gram = DMatrix::from_fn(m, m, |a, b| pool_gram[(idxs[a], idxs[b])]);
                    let eig = SymmetricEigen::new(gram);
                    let min_eig =
                        eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
                    if min_eig > best.0 {
                        best = (min_eig, cand);
                    }
                }
                selected.push(best.1);
                remaining.retain(|&i| i != best.1);
            }
            let points = selected.iter().map(|&i| pool.point(i).to_vec()).collect();
            PointCloud::new(pool.dims(), points)
        }
    }
}

/// Moore–Penrose pseudo-inverse with Tikhonov-regularized inversion of the
/// singular values: `σ ↦ σ/(σ² + ridge)`, dropping `σ ≤ cutoff·σ_max`.
fn svd_pinv(
    mat: &DMatrix<Complex64>,
    cutoff: f64,
    ridge: f64,
) -> Result<DMatrix<Complex64>> {
    let svd = mat.clone().svd(true, true);
    let u = svd.u.as_ref().ok_or(Error::DegenerateSystem)?;
    let v_t = svd.v_t.as_ref().ok_or(Error::DegenerateSystem)?;
    let smax = svd.singular_values.max();
    let mut sinv = DMatrix::zeros(v_t.nrows(), u.ncols());
    for (i, s) in svd.singular_values.iter().enumerate() {
        if *s > cutoff * smax {
            sinv[(i, i)] = Complex64::new(s / (s * s + ridge), 0.0);
        }
    }
    Ok(v_t.adjoint() * sinv * u.adjoint())
}

/// Fits the output matrix `F` from training pairs: `Z` collects `α(x_p)`
/// per column and `F = Y·Z^H·(Z·Z^H + ridge·I)†`.
///
/// Both factors are computed through singular value decompositions of the
/// rectangular matrices themselves (`α(x_p)` from the lifted features, the
/// final solve from `Z`) rather than through the kernel Gram and `Z·Z^H`:
/// the squared forms double the condition number, which visibly pollutes
/// `F` on badly conditioned anchor sets.
pub fn fit_outputs(
    train_points: &PointCloud,
    train_values: &DMatrix<Complex64>,
    anchors: PointCloud,
    kernel: KernelConfig,
    ridge: f64,
    cutoff: f64,
) -> Result<AnchorModel> {
    if train_points.is_empty() {
        return Err(Error::EmptyCloud);
    }
    if train_values.ncols() != train_points.len() {
        return Err(Error::InvalidConfig(format!(
            "{} target columns for {} training points",
            train_values.ncols(),
            train_points.len()
        )));
    }
    let support = kernel.support()?;
    let phi_a = feature_matrix(&anchors, &support)?;
    let phi_x = feature_matrix(train_points, &support)?;
    // Z = Φ(A)†·Φ(X): column p is α(x_p)
    let z = svd_pinv(phi_a.data(), FEATURE_PINV_CUTOFF, 0.0)? * phi_x.data();
    if !(z.norm() > 0.0) {
        return Err(Error::DegenerateSystem);
    }
    let f = train_values * svd_pinv(&z, FEATURE_PINV_CUTOFF, ridge)?;
    AnchorModel::new(anchors, kernel, f, ridge, cutoff)
}

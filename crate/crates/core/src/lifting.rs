//! Exponential feature maps, feature matrices, and kernel (Gram)
//! computations, including Dirichlet kernels and their radial/activation
//! approximations.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::support::{LqNorm, SupportSet};
use crate::trigpoly::cis;

/// Relative singular-value threshold used for rank decisions.
pub const RANK_TOL: f64 = 1e-9;

/// Kernel frequency-support configuration: a rectangle or an `ℓq` ball.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum KernelConfig {
    Rect { lo: Vec<i64>, hi: Vec<i64> },
    Ball { dims: usize, d: f64, q: LqNorm },
}

impl KernelConfig {
    /// Centered rectangle with the given odd side lengths.
    pub fn centered_rect(sizes: &[usize]) -> Result<Self> {
        SupportSet::centered_rect(sizes)?; // validates sizes
        let half: Vec<i64> = sizes.iter().map(|&s| (s as i64 - 1) / 2).collect();
        Ok(KernelConfig::Rect {
            lo: half.iter().map(|h| -h).collect(),
            hi: half,
        })
    }

    pub fn dims(&self) -> usize {
        match self {
            KernelConfig::Rect { lo, .. } => lo.len(),
            KernelConfig::Ball { dims, .. } => *dims,
        }
    }

    pub fn support(&self) -> Result<SupportSet> {
        match self {
            KernelConfig::Rect { lo, hi } => SupportSet::rect(lo, hi),
            KernelConfig::Ball { dims, d, q } => SupportSet::lq_ball(*dims, *d, *q),
        }
    }
}

/// `Φ_Γ(x)`: the vector of `exp(j2πk^T x)` in canonical frequency order.
pub fn lift(x: &[f64], gamma: &SupportSet) -> Result<DVector<Complex64>> {
    if x.len() != gamma.dims() {
        return Err(Error::DimensionMismatch { expected: gamma.dims(), got: x.len() });
    }
    let data: Vec<Complex64> = gamma
        .freqs()
        .iter()
        .map(|k| {
            let phase: f64 = k.iter().zip(x).map(|(ki, xi)| *ki as f64 * xi).sum();
            cis(2.0 * PI * phase)
        })
        .collect();
    Ok(DVector::from_vec(data))
}

/// `|Γ| × N` complex matrix whose columns are the lifted features of a cloud.
#[derive(Debug, Clone)]
pub struct FeatureMatrix {
    support: SupportSet,
    data: DMatrix<Complex64>,
}

impl FeatureMatrix {
    pub fn support(&self) -> &SupportSet {
        &self.support
    }

    pub fn data(&self) -> &DMatrix<Complex64> {
        &self.data
    }

    /// Numeric rank with the relative singular-value cut `tol·σ_max`.
    pub fn rank(&self, tol: f64) -> usize {
        let sigma = self.singular_values();
        let smax = sigma.first().copied().unwrap_or(0.0);
        sigma.iter().filter(|&&s| s > tol * smax).count()
    }

    /// Singular values in descending order. Eigenvectors come from the
    /// smaller-side Hermitian Gram, but each σ is refined by a direct
    /// product with the matrix: `√λ` inherits the Gram's squared rounding
    /// floor (≈√ε relative), while `‖Φv‖` stays accurate near zero.
    pub fn singular_values(&self) -> Vec<f64> {
        let (rows, cols) = self.data.shape();
        let eig = if cols <= rows {
            SymmetricEigen::new(self.data.adjoint() * &self.data)
        } else {
            SymmetricEigen::new(&self.data * self.data.adjoint())
        };
        let mut sigma: Vec<f64> = (0..eig.eigenvalues.len())
            .map(|i| {
                let v = eig.eigenvectors.column(i);
                if cols <= rows {
                    (&self.data * v).norm()
                } else {
                    (self.data.adjoint() * v).norm()
                }
            })
            .collect();
        sigma.sort_by(|a, b| b.partial_cmp(a).unwrap());
        sigma
    }
}

/// `Φ_Γ(X)`: columns are the lifts of the cloud's points in order.
pub fn feature_matrix(cloud: &PointCloud, gamma: &SupportSet) -> Result<FeatureMatrix> {
    if cloud.is_empty() {
        return Err(Error::EmptyCloud);
    }
    if cloud.dims() != gamma.dims() {
        return Err(Error::DimensionMismatch { expected: gamma.dims(), got: cloud.dims() });
    }
    let mut data = DMatrix::zeros(gamma.len(), cloud.len());
    for (i, x) in cloud.points().iter().enumerate() {
        data.set_column(i, &lift(x, gamma)?);
    }
    Ok(FeatureMatrix { support: gamma.clone(), data })
}

/// `κ(x, y) = Φ_Γ(x)^H Φ_Γ(y) = Σ_{k∈Γ} exp(j2πk^T(y−x))`.
pub fn kernel(x: &[f64], y: &[f64], gamma: &SupportSet) -> Result<Complex64> {
    if x.len() != gamma.dims() || y.len() != gamma.dims() {
        return Err(Error::DimensionMismatch {
            expected: gamma.dims(),
            got: if x.len() != gamma.dims() { x.len() } else { y.len() },
        });
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for k in gamma.freqs() {
        let phase: f64 = k.iter().zip(y.iter().zip(x)).map(|(ki, (yi, xi))| *ki as f64 * (yi - xi)).sum();
        acc += cis(2.0 * PI * phase);
    }
    Ok(acc)
}

/// 1-D exponential sum `Σ_{k=lo..hi} exp(j2πkt)` and its derivative in `t`.
fn dirichlet_1d(lo: i64, hi: i64, t: f64) -> (Complex64, Complex64) {
    let mut sum = Complex64::new(0.0, 0.0);
    let mut deriv = Complex64::new(0.0, 0.0);
    for k in lo..=hi {
        let e = cis(2.0 * PI * k as f64 * t);
        sum += e;
        deriv += Complex64::new(0.0, 2.0 * PI * k as f64) * e;
    }
    (sum, deriv)
}

/// Kernel evaluation for a config; rectangular supports use the separable
/// product of 1-D Dirichlet sums.
pub(crate) fn kernel_value(config: &KernelConfig, support: &SupportSet, x: &[f64], y: &[f64]) -> Complex64 {
    match config {
        KernelConfig::Rect { lo, hi } => {
            let mut acc = Complex64::new(1.0, 0.0);
            for i in 0..lo.len() {
                acc *= dirichlet_1d(lo[i], hi[i], y[i] - x[i]).0;
            }
            acc
        }
        KernelConfig::Ball { .. } => kernel(x, y, support).expect("dims validated"),
    }
}

/// Gradient of `κ(x, y)` with respect to the displacement `δ = y − x`.
pub(crate) fn kernel_gradient(
    config: &KernelConfig,
    support: &SupportSet,
    delta: &[f64],
) -> Vec<Complex64> {
    match config {
        KernelConfig::Rect { lo, hi } => {
            let n = lo.len();
            let parts: Vec<(Complex64, Complex64)> =
                (0..n).map(|i| dirichlet_1d(lo[i], hi[i], delta[i])).collect();
            (0..n)
                .map(|m| {
                    let mut g = parts[m].1;
                    for (l, part) in parts.iter().enumerate() {
                        if l != m {
                            g *= part.0;
                        }
                    }
                    g
                })
                .collect()
        }
        KernelConfig::Ball { dims, .. } => {
            let mut grad = vec![Complex64::new(0.0, 0.0); *dims];
            for k in support.freqs() {
                let phase: f64 = k.iter().zip(delta).map(|(ki, di)| *ki as f64 * di).sum();
                let e = cis(2.0 * PI * phase);
                for (m, ki) in k.iter().enumerate() {
                    grad[m] += Complex64::new(0.0, 2.0 * PI * *ki as f64) * e;
                }
            }
            grad
        }
    }
}

/// `N × N` Hermitian kernel Gram matrix of a point cloud.
#[derive(Debug, Clone)]
pub struct KernelGram {
    config: KernelConfig,
    cardinality: usize,
    data: DMatrix<Complex64>,
}

impl KernelGram {
    pub fn size(&self) -> usize {
        self.data.nrows()
    }

    pub fn data(&self) -> &DMatrix<Complex64> {
        &self.data
    }

    pub fn config(&self) -> &KernelConfig {
        &self.config
    }

    /// `|Γ|`, the exact diagonal value.
    pub fn cardinality(&self) -> usize {
        self.cardinality
    }

    /// Debug export: one CSV row per matrix row, entries as `re+imi`.
    pub fn to_csv(&self) -> String {
        use std::fmt::Write as _;
        let mut out = String::new();
        for i in 0..self.data.nrows() {
            for j in 0..self.data.ncols() {
                if j > 0 {
                    out.push(',');
                }
                let v = self.data[(i, j)];
                let _ = write!(out, "{}{:+}i", v.re, v.im);
            }
            out.push('\n');
        }
        out
    }

    /// Eigenvalues in descending order. Round-off may produce tiny negative
    /// values; callers decide whether to clamp.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let eig = SymmetricEigen::new(self.data.clone());
        let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        vals.sort_by(|a, b| b.partial_cmp(a).unwrap());
        vals
    }
}

/// Assembles the kernel Gram via the kernel trick; the feature matrix is
/// never materialized. Entries are `κ(x_i, x_j)`, the diagonal is set to
/// `|Γ|` exactly and the matrix is Hermitian by construction.
pub fn kernel_gram(cloud: &PointCloud, config: &KernelConfig) -> Result<KernelGram> {
    if cloud.is_empty() {
        return Err(Error::EmptyCloud);
    }
    if cloud.dims() != config.dims() {
        return Err(Error::DimensionMismatch { expected: config.dims(), got: cloud.dims() });
    }
    let support = config.support()?;
    let n = cloud.len();
    let mut data = DMatrix::zeros(n, n);
    let card = Complex64::new(support.len() as f64, 0.0);
    for i in 0..n {
        data[(i, i)] = card;
        for j in i + 1..n {
            let v = kernel_value(config, &support, cloud.point(i), cloud.point(j));
            data[(i, j)] = v;
            data[(j, i)] = v.conj();
        }
    }
    Ok(KernelGram { config: config.clone(), cardinality: support.len(), data })
}

/// `k_{d,n}^q(x) = Σ_{‖k‖_q ≤ d} exp(j2πk^T x)`; real by ball symmetry.
pub fn dirichlet_q(x: &[f64], d: f64, q: LqNorm) -> Result<f64> {
    let support = SupportSet::lq_ball(x.len(), d, q)?;
    let zero = vec![0.0; x.len()];
    Ok(kernel(&zero, x, &support)?.re)
}

/// Tabulated radial approximation `g(r²) ≈ κ(x, y)` for the `q = 2` ball,
/// built by angular averaging of the Dirichlet kernel.
#[derive(Debug, Clone)]
pub struct RadialProfile {
    dims: usize,
    d: f64,
    /// `g` values at uniformly spaced `r²` in `[0, dims·0.25]`.
    table: Vec<f64>,
    r2_max: f64,
}

impl RadialProfile {
    /// `resolution` table entries, each an average over `directions`
    /// deterministic random directions.
    pub fn new(dims: usize, d: f64, resolution: usize, directions: usize) -> Result<Self> {
        if dims == 0 || resolution < 2 || directions == 0 {
            return Err(Error::InvalidConfig("radial profile needs dims ≥ 1, resolution ≥ 2, directions ≥ 1".into()));
        }
        let support = SupportSet::lq_ball(dims, d, LqNorm::Two)?;
        let r2_max = dims as f64 * 0.25;
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        let dirs: Vec<Vec<f64>> = (0..directions)
            .map(|_| {
                let mut u: Vec<f64> = (0..dims).map(|_| rng.sample(StandardNormal)).collect();
                let norm = u.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
                u.iter_mut().for_each(|v| *v /= norm);
                u
            })
            .collect();
        let zero = vec![0.0; dims];
        let mut table = Vec::with_capacity(resolution);
        for i in 0..resolution {
            let r2 = r2_max * i as f64 / (resolution - 1) as f64;
            let r = r2.sqrt();
            if i == 0 {
                table.push(support.len() as f64);
                continue;
            }
            let mut acc = 0.0;
            for u in &dirs {
                let x: Vec<f64> = u.iter().map(|ui| r * ui).collect();
                acc += kernel(&zero, &x, &support)?.re;
            }
            table.push(acc / directions as f64);
        }
        Ok(RadialProfile { dims, d, table, r2_max })
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    /// Piecewise-linear interpolation of `g` at `r²` (clamped to the table range).
    pub fn eval(&self, r2: f64) -> f64 {
        let t = (r2 / self.r2_max).clamp(0.0, 1.0) * (self.table.len() - 1) as f64;
        let i = (t.floor() as usize).min(self.table.len() - 2);
        let frac = t - i as f64;
        self.table[i] * (1.0 - frac) + self.table[i + 1] * frac
    }

    /// Activation form `γ(z) = g(1 − z/2)`.
    pub fn activation(&self, z: f64) -> f64 {
        self.eval(1.0 - z / 2.0)
    }

    /// Mean and max of `|κ(x,y) − g(‖x−y‖²)| / |Γ|` over random pairs;
    /// an empirical diagnostic, no bound is claimed.
    pub fn deviation_stats(&self, pairs: usize, seed: u64) -> Result<(f64, f64)> {
        let support = SupportSet::lq_ball(self.dims, self.d, LqNorm::Two)?;
        let card = support.len() as f64;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut sum = 0.0;
        let mut max: f64 = 0.0;
        for _ in 0..pairs {
            let x: Vec<f64> = (0..self.dims).map(|_| rng.gen::<f64>()).collect();
            let y: Vec<f64> = (0..self.dims).map(|_| rng.gen::<f64>()).collect();
            let r2: f64 = x.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum();
            if r2 > self.r2_max {
                continue;
            }
            let exact = kernel(&x, &y, &support)?.re;
            let dev = (exact - self.eval(r2)).abs() / card;
            sum += dev;
            max = max.max(dev);
        }
        Ok((sum / pairs as f64, max))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn support_3x3() -> SupportSet {
        SupportSet::centered_rect(&[3, 3]).unwrap()
    }

    #[test]
    fn lift_at_zero_is_all_ones() {
        let v = lift(&[0.0, 0.0], &support_3x3()).unwrap();
        assert!(v.iter().all(|e| (e - Complex64::new(1.0, 0.0)).norm() < 1e-15));
    }

    #[test]
    fn lift_singleton_support() {
        let gamma = SupportSet::new(2, vec![vec![0, 0]]).unwrap();
        let v = lift(&[0.3, 0.8], &gamma).unwrap();
        assert_eq!(v.len(), 1);
        assert!((v[0] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn lift_norm_is_cardinality() {
        let v = lift(&[0.123, 0.456], &support_3x3()).unwrap();
        let n2: f64 = v.iter().map(|e| e.norm_sqr()).sum();
        assert!((n2 - 9.0).abs() < 1e-12);
    }

    #[test]
    fn kernel_self_inner_product() {
        let x = [0.37, 0.91];
        let v = kernel(&x, &x, &support_3x3()).unwrap();
        assert!((v - Complex64::new(9.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn rect_kernel_matches_dirichlet_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let gamma = SupportSet::centered_rect(&[5, 7]).unwrap();
        let config = KernelConfig::Rect { lo: vec![-2, -3], hi: vec![2, 3] };
        for _ in 0..100 {
            let x = [rng.gen::<f64>(), rng.gen::<f64>()];
            let y = [rng.gen::<f64>(), rng.gen::<f64>()];
            let direct = kernel(&x, &y, &gamma).unwrap();
            let fast = kernel_value(&config, &gamma, &x, &y);
            assert!((direct - fast).norm() <= 1e-10 * gamma.len() as f64);
        }
    }

    #[test]
    fn ball_kernel_matches_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let gamma = SupportSet::lq_ball(2, 2.0, LqNorm::Two).unwrap();
        assert_eq!(gamma.len(), 13);
        let x = [rng.gen::<f64>(), rng.gen::<f64>()];
        let y = [rng.gen::<f64>(), rng.gen::<f64>()];
        let mut brute = Complex64::new(0.0, 0.0);
        for a in -2i64..=2 {
            for b in -2i64..=2 {
                if a * a + b * b <= 4 {
                    brute += cis(2.0 * PI * (a as f64 * (y[0] - x[0]) + b as f64 * (y[1] - x[1])));
                }
            }
        }
        let v = kernel(&x, &y, &gamma).unwrap();
        assert!((v - brute).norm() <= 1e-10);
    }

    #[test]
    fn gram_matches_explicit_features() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let points: Vec<Vec<f64>> = (0..3).map(|_| vec![rng.gen(), rng.gen()]).collect();
        let cloud = PointCloud::new(2, points).unwrap();
        let config = KernelConfig::Rect { lo: vec![-1, -1], hi: vec![1, 1] };
        let gram = kernel_gram(&cloud, &config).unwrap();
        let phi = feature_matrix(&cloud, &support_3x3()).unwrap();
        let explicit = phi.data().adjoint() * phi.data();
        for i in 0..3 {
            assert_eq!(gram.data()[(i, i)], Complex64::new(9.0, 0.0));
            for j in 0..3 {
                assert!((gram.data()[(i, j)] - explicit[(i, j)]).norm() <= 1e-10);
                assert_eq!(gram.data()[(i, j)], gram.data()[(j, i)].conj());
            }
        }
    }

    #[test]
    fn gram_of_on_curve_samples_has_theoretical_rank() {
        use crate::trigpoly::TrigPolynomial;
        let poly = TrigPolynomial::random_real(&support_3x3(), 17).unwrap();
        let cloud = poly.sample_zero_set(8, 3).unwrap();
        let phi = feature_matrix(&cloud, &support_3x3()).unwrap();
        assert_eq!(phi.rank(RANK_TOL), 8);
    }

    #[test]
    fn duplicated_column_keeps_rank() {
        use crate::trigpoly::TrigPolynomial;
        let poly = TrigPolynomial::random_real(&support_3x3(), 23).unwrap();
        let cloud = poly.sample_zero_set(5, 3).unwrap();
        let mut pts = cloud.points().to_vec();
        pts.push(pts[0].clone());
        let dup = PointCloud::new(2, pts).unwrap();
        let r1 = feature_matrix(&cloud, &support_3x3()).unwrap().rank(RANK_TOL);
        let r2 = feature_matrix(&dup, &support_3x3()).unwrap().rank(RANK_TOL);
        assert_eq!(r1, r2);
    }

    #[test]
    fn kernel_shift_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let gamma = SupportSet::lq_ball(2, 2.0, LqNorm::One).unwrap();
        for _ in 0..20 {
            let x = [rng.gen::<f64>(), rng.gen::<f64>()];
            let y = [rng.gen::<f64>(), rng.gen::<f64>()];
            let t = [rng.gen::<f64>(), rng.gen::<f64>()];
            let a = kernel(&x, &y, &gamma).unwrap();
            let b = kernel(
                &[x[0] + t[0], x[1] + t[1]],
                &[y[0] + t[0], y[1] + t[1]],
                &gamma,
            )
            .unwrap();
            assert!((a - b).norm() <= 1e-10);
        }
    }

    #[test]
    fn symmetric_support_gives_real_kernel() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let gamma = SupportSet::lq_ball(3, 2.0, LqNorm::Two).unwrap();
        for _ in 0..20 {
            let x: Vec<f64> = (0..3).map(|_| rng.gen()).collect();
            let y: Vec<f64> = (0..3).map(|_| rng.gen()).collect();
            let v = kernel(&x, &y, &gamma).unwrap();
            assert!(v.im.abs() <= 1e-12 * gamma.len() as f64);
        }
    }

    #[test]
    fn dirichlet_values_at_zero() {
        assert!((dirichlet_q(&[0.0, 0.0], 1.0, LqNorm::One).unwrap() - 5.0).abs() < 1e-12);
        assert!((dirichlet_q(&[0.0, 0.0], 2.0, LqNorm::Two).unwrap() - 13.0).abs() < 1e-12);
    }

    #[test]
    fn dirichlet_1d_half_period() {
        // Σ_{k=-2..2} e^{jπk} = 1 - 2 + 2cos(2π)… = 1 - 1 - 1 + 1 + 1 = 1
        let v = dirichlet_q(&[0.5], 2.0, LqNorm::Inf).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn radial_profile_at_zero_is_cardinality() {
        let g = RadialProfile::new(2, 2.0, 64, 32).unwrap();
        assert!((g.eval(0.0) - 13.0).abs() < 1e-12);
    }

    #[test]
    fn activation_substitution_identity() {
        let g = RadialProfile::new(2, 3.0, 64, 32).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let ip: f64 = rng.gen::<f64>() * 2.0 - 1.0;
            let z = 2.0 - 2.0 * ip;
            assert!((g.activation(z) - g.eval(1.0 - z / 2.0)).abs() < 1e-15);
        }
    }

    #[test]
    fn radial_profile_reports_deviation() {
        let g = RadialProfile::new(2, 3.0, 256, 64).unwrap();
        let (mean, max) = g.deviation_stats(200, 8).unwrap();
        assert!(mean.is_finite() && max.is_finite());
        assert!(mean <= max);
    }
}

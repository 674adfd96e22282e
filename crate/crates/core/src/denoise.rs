//! Point-cloud denoising via nuclear-norm-regularized kernel low-rank IRLS,
//! operating entirely through the kernel trick.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::lifting::{kernel_gradient, kernel_gram, KernelConfig};

/// IRLS configuration for `argmin_X ‖X−Y‖² + λ‖Φ(X)‖_*`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IrlsConfig {
    /// Regularization weight λ.
    pub lambda: f64,
    /// Outer iteration count.
    pub iterations: usize,
    /// Decay factor η > 1 for the smoothing parameter γ.
    #[serde(default = "default_eta")]
    pub eta: f64,
    /// Initial smoothing γ₀; defaults to `0.01 · max eig K(Y)`.
    #[serde(default)]
    pub gamma0: Option<f64>,
    /// Gradient steps per outer iteration.
    #[serde(default = "default_inner")]
    pub inner: usize,
    /// Initial gradient step size; backtracking halves it until descent.
    #[serde(default = "default_step")]
    pub step: f64,
    pub kernel: KernelConfig,
}

fn default_eta() -> f64 {
    1.5
}

fn default_inner() -> usize {
    5
}

fn default_step() -> f64 {
    0.05
}

impl IrlsConfig {
    fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0) {
            return Err(Error::InvalidConfig(format!("lambda={} must be > 0", self.lambda)));
        }
        if !(self.eta > 1.0) {
            return Err(Error::InvalidConfig(format!("eta={} must be > 1", self.eta)));
        }
        if self.iterations == 0 {
            return Err(Error::InvalidConfig("iterations must be ≥ 1".into()));
        }
        if self.inner == 0 || !(self.step > 0.0) {
            return Err(Error::InvalidConfig("inner ≥ 1 and step > 0 required".into()));
        }
        if let Some(g) = self.gamma0 {
            if !(g > 0.0) {
                return Err(Error::InvalidConfig(format!("gamma0={g} must be > 0")));
            }
        }
        if !self.kernel.support()?.is_symmetric() {
            return Err(Error::AsymmetricSupport);
        }
        Ok(())
    }
}

/// Per-outer-iteration diagnostics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IterationMetrics {
    pub iteration: usize,
    /// `‖X−Y‖² + λ·trace[K(X)P]` after the X update.
    pub objective: f64,
    /// Smoothed nuclear surrogate `‖X−Y‖² + λ·Σ√(σ_i + γ)`.
    pub surrogate: f64,
    pub mean_displacement: f64,
    pub gamma: f64,
}

/// Minimum-image difference on the unit torus.
fn torus_diff(a: f64, b: f64) -> f64 {
    (a - b + 0.5).rem_euclid(1.0) - 0.5
}

fn fidelity(x: &[Vec<f64>], y: &PointCloud) -> f64 {
    x.iter()
        .zip(y.points())
        .map(|(xi, yi)| xi.iter().zip(yi).map(|(a, b)| torus_diff(*a, *b).powi(2)).sum::<f64>())
        .sum()
}

/// Real symmetric kernel Gram of a set of points.
fn real_gram(points: &[Vec<f64>], dims: usize, config: &KernelConfig) -> Result<DMatrix<f64>> {
    let cloud = PointCloud::new(dims, points.to_vec())?;
    let gram = kernel_gram(&cloud, config)?;
    let n = gram.size();
    let mut out = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            out[(i, j)] = gram.data()[(i, j)].re;
        }
    }
    Ok(out)
}

fn trace_product(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let mut acc = 0.0;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

/// Gradient of `‖X−Y‖² + λ·trace[K(X)P]` with respect to every point.
pub fn objective_gradient(
    x: &[Vec<f64>],
    y: &PointCloud,
    p: &DMatrix<f64>,
    lambda: f64,
    config: &KernelConfig,
) -> Result<Vec<Vec<f64>>> {
    let n = x.len();
    let dims = y.dims();
    let support = config.support()?;
    let mut grads = vec![vec![0.0; dims]; n];
    for i in 0..n {
        for m in 0..dims {
            grads[i][m] = 2.0 * torus_diff(x[i][m], y.point(i)[m]);
        }
        for j in 0..n {
            if j == i {
                continue;
            }
            let delta: Vec<f64> = (0..dims).map(|m| x[j][m] - x[i][m]).collect();
            let kg = kernel_gradient(config, &support, &delta);
            for m in 0..dims {
                // 2·Re[P_ji · Σ_k (−j2πk) e^{j2πk·(x_j−x_i)}]
                grads[i][m] += lambda * 2.0 * (p[(j, i)] * -kg[m]).re;
            }
        }
    }
    Ok(grads)
}

/// `‖X−Y‖² + λ·trace[K(X)P]` for a fixed weight matrix `P`.
pub fn objective_value(
    x: &[Vec<f64>],
    y: &PointCloud,
    p: &DMatrix<f64>,
    lambda: f64,
    config: &KernelConfig,
) -> Result<f64> {
    let k = real_gram(x, y.dims(), config)?;
    Ok(fidelity(x, y) + lambda * trace_product(&k, p))
}

/// `Σ_i √(σ_i(K) + γ)`: the smoothed nuclear norm of `Φ(X)` computed from
/// Gram eigenvalues.
pub fn nuclear_norm_surrogate(x: &PointCloud, config: &KernelConfig, gamma: f64) -> Result<f64> {
    let gram = kernel_gram(x, config)?;
    Ok(gram
        .eigenvalues()
        .iter()
        .map(|l| (l.max(0.0) + gamma).sqrt())
        .sum())
}

/// IRLS denoiser: alternates the half-inverse weight update
/// `P = [K(X) + γI]^{−1/2}` with backtracking gradient steps on
/// `‖X−Y‖² + λ·trace[K(X)P]`, wrapping points into `[0,1)^n`.
pub fn denoise(y: &PointCloud, cfg: &IrlsConfig) -> Result<(PointCloud, Vec<IterationMetrics>)> {
    cfg.validate()?;
    if y.is_empty() {
        return Err(Error::EmptyCloud);
    }
    if y.dims() != cfg.kernel.dims() {
        return Err(Error::DimensionMismatch { expected: cfg.kernel.dims(), got: y.dims() });
    }
    let dims = y.dims();
    let mut x: Vec<Vec<f64>> = y.points().to_vec();

    let k0 = real_gram(&x, dims, &cfg.kernel)?;
    let eig0 = SymmetricEigen::new(k0);
    let max_eig = eig0.eigenvalues.iter().cloned().fold(0.0_f64, f64::max);
    let mut gamma = cfg.gamma0.unwrap_or(0.01 * max_eig.max(f64::MIN_POSITIVE));

    let mut metrics = Vec::with_capacity(cfg.iterations);
    let mut step = cfg.step;
    for iter in 0..cfg.iterations {
        gamma /= cfg.eta;

        // (a) weight update from the current points
        let k = real_gram(&x, dims, &cfg.kernel)?;
        let eig = SymmetricEigen::new(k);
        let n = x.len();
        let mut p = DMatrix::zeros(n, n);
        for (idx, l) in eig.eigenvalues.iter().enumerate() {
            let w = 1.0 / (l.max(0.0) + gamma).sqrt();
            let u = eig.eigenvectors.column(idx);
            for a in 0..n {
                for b in 0..n {
                    p[(a, b)] += w * u[a] * u[b];
                }
            }
        }

        // (b) backtracking gradient steps on the majorant
        let mut current = objective_value(&x, y, &p, cfg.lambda, &cfg.kernel)?;
        for _ in 0..cfg.inner {
            if !current.is_finite() {
                return Err(Error::NonFiniteObjective { iteration: iter });
            }
            let grads = objective_gradient(&x, y, &p, cfg.lambda, &cfg.kernel)?;
            let mut accepted = false;
            while step > 1e-18 {
                let candidate: Vec<Vec<f64>> = x
                    .iter()
                    .zip(&grads)
                    .map(|(xi, gi)| {
                        xi.iter()
                            .zip(gi)
                            .map(|(v, g)| (v - step * g).rem_euclid(1.0))
                            .collect()
                    })
                    .collect();
                let value = objective_value(&candidate, y, &p, cfg.lambda, &cfg.kernel)?;
                if !value.is_finite() {
                    return Err(Error::NonFiniteObjective { iteration: iter });
                }
                if value <= current {
                    x = candidate;
                    current = value;
                    accepted = true;
                    step *= 1.5;
                    break;
                }
                step *= 0.5;
            }
            if !accepted {
                break; // gradient step cannot decrease further
            }
        }

        let cloud = PointCloud::new(dims, x.clone())?;
        let surrogate = fidelity(&x, y) + cfg.lambda * nuclear_norm_surrogate(&cloud, &cfg.kernel, gamma)?;
        let mean_displacement = x
            .iter()
            .zip(y.points())
            .map(|(xi, yi)| {
                xi.iter()
                    .zip(yi)
                    .map(|(a, b)| torus_diff(*a, *b).powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .sum::<f64>()
            / x.len() as f64;
        metrics.push(IterationMetrics {
            iteration: iter + 1,
            objective: current,
            surrogate,
            mean_displacement,
            gamma,
        });
    }
    Ok((PointCloud::new(dims, x)?, metrics))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::support::SupportSet;
    use crate::trigpoly::TrigPolynomial;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn kernel_3x3() -> KernelConfig {
        KernelConfig::centered_rect(&[3, 3]).unwrap()
    }

    fn noisy_curve(n: usize, sigma: f64, seed: u64) -> (TrigPolynomial, PointCloud, PointCloud) {
        let support = SupportSet::centered_rect(&[3, 3]).unwrap();
        let poly = TrigPolynomial::random_real(&support, seed).unwrap();
        let clean = poly.sample_zero_set(n, seed.wrapping_add(1)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(2));
        let noisy: Vec<Vec<f64>> = clean
            .points()
            .iter()
            .map(|p| {
                p.iter()
                    .map(|x| (x + sigma * rng.sample::<f64, _>(StandardNormal)).rem_euclid(1.0))
                    .collect()
            })
            .collect();
        (poly, clean, PointCloud::new(2, noisy).unwrap())
    }

    #[test]
    fn config_validation() {
        let mut cfg = IrlsConfig {
            lambda: 1.0,
            iterations: 1,
            eta: 1.5,
            gamma0: None,
            inner: 2,
            step: 0.05,
            kernel: kernel_3x3(),
        };
        cfg.lambda = 0.0;
        assert!(denoise(&PointCloud::new(2, vec![vec![0.1, 0.2]]).unwrap(), &cfg).is_err());
        cfg.lambda = 1.0;
        cfg.eta = 1.0;
        assert!(denoise(&PointCloud::new(2, vec![vec![0.1, 0.2]]).unwrap(), &cfg).is_err());
    }

    #[test]
    fn noiseless_cloud_is_near_fixed_point() {
        let (_, clean, _) = noisy_curve(50, 0.0, 3);
        let cfg = IrlsConfig {
            lambda: 1e-10,
            iterations: 2,
            eta: 1.5,
            gamma0: None,
            inner: 3,
            step: 0.05,
            kernel: kernel_3x3(),
        };
        let (out, _) = denoise(&clean, &cfg).unwrap();
        for (a, b) in out.points().iter().zip(clean.points()) {
            let d: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
            assert!(d <= 1e-6, "moved by {d}");
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for trial in 0..5 {
            let n = 4 + trial;
            let points: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.gen(), rng.gen()]).collect();
            let y = PointCloud::new(2, points.clone()).unwrap();
            let mut x = points;
            for p in &mut x {
                for v in p.iter_mut() {
                    *v = (*v + 0.01 * rng.gen::<f64>()).rem_euclid(1.0);
                }
            }
            let config = kernel_3x3();
            // random symmetric P
            let mut p = DMatrix::zeros(n, n);
            for i in 0..n {
                for j in 0..=i {
                    let v: f64 = rng.sample(StandardNormal);
                    p[(i, j)] = v;
                    p[(j, i)] = v;
                }
            }
            let lambda = 0.7;
            let grads = objective_gradient(&x, &y, &p, lambda, &config).unwrap();
            let h = 1e-6;
            for i in 0..n {
                for m in 0..2 {
                    let mut xp = x.clone();
                    let mut xm = x.clone();
                    xp[i][m] += h;
                    xm[i][m] -= h;
                    let fp = objective_value(&xp, &y, &p, lambda, &config).unwrap();
                    let fm = objective_value(&xm, &y, &p, lambda, &config).unwrap();
                    let fd = (fp - fm) / (2.0 * h);
                    let scale = fd.abs().max(grads[i][m].abs()).max(1e-8);
                    assert!(
                        (grads[i][m] - fd).abs() <= 1e-4 * scale,
                        "grad {} vs fd {}",
                        grads[i][m],
                        fd
                    );
                }
            }
        }
    }

    #[test]
    fn surrogate_is_monotone_and_residual_improves() {
        let (poly, _, noisy) = noisy_curve(60, 0.01, 5);
        // the regularizer weight must stay small relative to the fidelity
        // term (~N·σ²), otherwise the nuclear surrogate collapses the cloud
        let cfg = IrlsConfig {
            lambda: 1e-3,
            iterations: 4,
            eta: 1.5,
            gamma0: None,
            inner: 5,
            step: 0.05,
            kernel: KernelConfig::centered_rect(&[5, 5]).unwrap(),
        };
        let (out, metrics) = denoise(&noisy, &cfg).unwrap();
        for w in metrics.windows(2) {
            assert!(
                w[1].surrogate <= w[0].surrogate + 1e-9 * w[0].surrogate.abs(),
                "surrogate increased: {} -> {}",
                w[0].surrogate,
                w[1].surrogate
            );
        }
        let mean_res = |c: &PointCloud| {
            c.points()
                .iter()
                .map(|p| poly.evaluate(p).unwrap().re.abs())
                .sum::<f64>()
                / c.len() as f64
        };
        assert!(mean_res(&out) < mean_res(&noisy));
    }

    #[test]
    fn weight_matrix_is_spd_with_bounded_spectrum() {
        let (_, _, noisy) = noisy_curve(20, 0.01, 7);
        let config = kernel_3x3();
        let k = real_gram(noisy.points(), 2, &config).unwrap();
        let gamma = 0.5;
        let eig = SymmetricEigen::new(k.clone());
        let max_k = eig.eigenvalues.iter().cloned().fold(0.0_f64, f64::max);
        let mut p: DMatrix<f64> = DMatrix::zeros(20, 20);
        for (idx, l) in eig.eigenvalues.iter().enumerate() {
            let w = 1.0 / (l.max(0.0) + gamma).sqrt();
            let u = eig.eigenvectors.column(idx);
            for a in 0..20 {
                for b in 0..20 {
                    p[(a, b)] += w * u[a] * u[b];
                }
            }
        }
        let peig = SymmetricEigen::new(p);
        let min_p = peig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(min_p >= 1.0 / (max_k + gamma).sqrt() - 1e-12);
        assert!(min_p > 0.0);
    }

    #[test]
    fn translation_equivariance() {
        let (_, _, noisy) = noisy_curve(30, 0.01, 11);
        let cfg = IrlsConfig {
            lambda: 0.5,
            iterations: 2,
            eta: 1.5,
            gamma0: Some(0.1),
            inner: 3,
            step: 0.05,
            kernel: kernel_3x3(),
        };
        let t = [0.25, 0.25];
        let shifted = noisy.translated(&t).unwrap();
        let (a, _) = denoise(&noisy, &cfg).unwrap();
        let (b, _) = denoise(&shifted, &cfg).unwrap();
        let a_shifted = a.translated(&t).unwrap();
        for (p, q) in a_shifted.points().iter().zip(b.points()) {
            for (u, v) in p.iter().zip(q) {
                assert!(torus_diff(*u, *v).abs() <= 1e-8, "{u} vs {v}");
            }
        }
    }

    #[test]
    fn surrogate_special_cases() {
        let config = kernel_3x3();
        // single point: √(|Γ| + γ)
        let single = PointCloud::new(2, vec![vec![0.3, 0.6]]).unwrap();
        let v = nuclear_norm_surrogate(&single, &config, 0.5).unwrap();
        assert!((v - (9.0_f64 + 0.5).sqrt()).abs() <= 1e-12);

        // large γ: surrogate → N·√γ + Σλ/(2√γ) + O(γ^{-3/2})
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let cloud = PointCloud::new(2, (0..6).map(|_| vec![rng.gen(), rng.gen()]).collect()).unwrap();
        let gamma = 1e8;
        let v = nuclear_norm_surrogate(&cloud, &config, gamma).unwrap();
        let trace = 6.0 * 9.0;
        let approx = 6.0 * gamma.sqrt() + trace / (2.0 * gamma.sqrt());
        assert!((v - approx).abs() <= 1e-4);
    }

    #[test]
    fn on_surface_cloud_has_smaller_surrogate_than_random() {
        let (_, clean, _) = noisy_curve(12, 0.0, 17);
        let mut rng = ChaCha8Rng::seed_from_u64(18);
        let random =
            PointCloud::new(2, (0..12).map(|_| vec![rng.gen(), rng.gen()]).collect()).unwrap();
        let config = kernel_3x3();
        let on = nuclear_norm_surrogate(&clean, &config, 1e-6).unwrap();
        let off = nuclear_norm_surrogate(&random, &config, 1e-6).unwrap();
        assert!(on < off, "on-surface {on} vs random {off}");
    }
}

//! Command-line front end: reproducible surface-recovery, denoising, and
//! function-representation experiments with CSV/JSON artifacts.
//!
//! Exit codes: 0 success, 1 usage error, 2 domain/input error, 3 numerical
//! failure.

mod io;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use bandlimit::recovery::PhaseConfig;
use bandlimit::trigpoly::sample_union;
use bandlimit::{
    denoise, fit_outputs, phase_transition, recover_minimal, recover_sos, sos_as_polynomial,
    AnchorModel, IrlsConfig, KernelConfig, SupportSet, TrigPolynomial, PINV_CUTOFF,
    RANK_TOL,
};

use io::{domain, usage, CliResult};

#[derive(Parser)]
#[command(
    name = "bandlimit",
    version,
    about = "Band-limited surface recovery and function representation experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Command {
    /// Draw points from the zero set of a trigonometric polynomial.
    Sample(SampleArgs),
    /// Estimate annihilating coefficients (or an aggregate squared surface)
    /// from an on-surface cloud.
    Recover(RecoverArgs),
    /// Denoise a point cloud by iteratively-reweighted kernel low-rank
    /// minimization.
    Denoise(DenoiseArgs),
    /// Fit anchor-model outputs from training pairs.
    FitFn(FitFnArgs),
    /// Evaluate a fitted anchor model at query points.
    EvalFn(EvalFnArgs),
    /// Tabulate recovery success probability over sample counts.
    PhaseTransition(PhaseArgs),
}

#[derive(Args, Serialize)]
struct SampleArgs {
    /// Centered rectangular support, e.g. `3x3` or `3x3x3`; a fresh random
    /// real polynomial on it is drawn from the seed.
    #[arg(long, conflicts_with_all = ["poly", "product"])]
    support: Option<String>,
    /// JSON file with an explicit polynomial to sample instead.
    #[arg(long, conflicts_with = "product")]
    poly: Option<PathBuf>,
    /// Comma-separated factor supports for a union of surfaces,
    /// e.g. `3x3,3x3`; requires --per-component.
    #[arg(long, requires = "per_component")]
    product: Option<String>,
    /// Per-factor sample counts for --product, e.g. `8,16`.
    #[arg(long)]
    per_component: Option<String>,
    /// Number of points for a single surface.
    #[arg(long, conflicts_with = "product")]
    n: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory for cloud.csv, poly.json, and manifest.json.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args, Serialize)]
struct RecoverArgs {
    /// Input point-cloud CSV.
    #[arg(long)]
    cloud: PathBuf,
    /// Lifting support (kernel-config or support-set JSON).
    #[arg(long)]
    gamma: PathBuf,
    /// Known minimal support; when given, the unique annihilating
    /// polynomial is recovered instead of the aggregate squared surface.
    #[arg(long)]
    lambda: Option<PathBuf>,
    /// Output model JSON.
    #[arg(long)]
    out: PathBuf,
    /// Relative singular-value threshold for the rank decision.
    #[arg(long, default_value_t = RANK_TOL)]
    tol: f64,
    /// Grid resolution per axis for the evaluation CSV (2D clouds only).
    #[arg(long, default_value_t = 64)]
    grid: usize,
    /// Optional CSV of |ψ(x)| (minimal) or γ(x) (aggregate) on the grid.
    #[arg(long)]
    grid_out: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args, Serialize)]
struct DenoiseArgs {
    /// Input noisy point-cloud CSV.
    #[arg(long)]
    cloud: PathBuf,
    /// Kernel configuration JSON.
    #[arg(long)]
    kernel: PathBuf,
    /// Regularization weight λ.
    #[arg(long)]
    lambda: f64,
    /// Outer iteration count.
    #[arg(long)]
    iters: usize,
    /// Smoothing decay factor η.
    #[arg(long, default_value_t = 1.5)]
    eta: f64,
    /// Initial smoothing γ₀ (defaults to 0.01·max eig K(Y)).
    #[arg(long)]
    gamma0: Option<f64>,
    /// Gradient steps per outer iteration.
    #[arg(long, default_value_t = 5)]
    inner: usize,
    /// Initial gradient step size.
    #[arg(long, default_value_t = 0.05)]
    step: f64,
    /// Output denoised cloud CSV.
    #[arg(long)]
    out: PathBuf,
    /// Per-iteration metrics CSV.
    #[arg(long)]
    log: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args, Serialize)]
struct FitFnArgs {
    /// Training pairs CSV: x1..xn,f1_re,f1_im,….
    #[arg(long)]
    train: PathBuf,
    /// Anchor point CSV.
    #[arg(long)]
    anchors: PathBuf,
    /// Kernel configuration JSON.
    #[arg(long)]
    kernel: PathBuf,
    /// Ridge added to retained Gram eigenvalues.
    #[arg(long, default_value_t = 0.0)]
    ridge: f64,
    /// Relative eigenvalue cutoff for pseudo-inverses.
    #[arg(long, default_value_t = PINV_CUTOFF)]
    cutoff: f64,
    /// Output model JSON.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args, Serialize)]
struct EvalFnArgs {
    /// Model JSON produced by fit-fn.
    #[arg(long)]
    model: PathBuf,
    /// Query points CSV.
    #[arg(long)]
    points: PathBuf,
    /// Output CSV of evaluated values.
    #[arg(long)]
    out: PathBuf,
    /// Also emit the feature-space projection error per point.
    #[arg(long, default_value_t = false)]
    projection: bool,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args, Serialize)]
struct PhaseArgs {
    /// Experiment configuration JSON.
    #[arg(long)]
    config: PathBuf,
    /// Output success-probability table CSV.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help/version requests are successful exits
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code as u8)
        }
    }
}

fn run(command: Command) -> CliResult<()> {
    match &command {
        Command::Sample(args) => cmd_sample(args),
        Command::Recover(args) => cmd_recover(args),
        Command::Denoise(args) => cmd_denoise(args),
        Command::FitFn(args) => cmd_fitfn(args),
        Command::EvalFn(args) => cmd_evalfn(args),
        Command::PhaseTransition(args) => cmd_phase(args),
    }
}

/// Writes `manifest.json` with the fully-resolved arguments so a rerun from
/// the manifest is bit-identical.
fn write_manifest<T: Serialize>(out_dir: &Path, command: &str, args: &T) -> CliResult<()> {
    let manifest = serde_json::json!({
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "args": args,
    });
    io::write_json(&out_dir.join("manifest.json"), &manifest)
}

/// Parses `3x5x3` into centered rectangle side lengths.
fn parse_sizes(spec: &str) -> CliResult<Vec<usize>> {
    spec.split('x')
        .map(|part| {
            part.trim()
                .parse::<usize>()
                .map_err(|_| usage(format!("invalid support spec {spec:?}")))
        })
        .collect()
}

fn parse_counts(spec: &str) -> CliResult<Vec<usize>> {
    spec.split(',')
        .map(|part| {
            part.trim()
                .parse::<usize>()
                .map_err(|_| usage(format!("invalid count list {spec:?}")))
        })
        .collect()
}

fn cmd_sample(args: &SampleArgs) -> CliResult<()> {
    std::fs::create_dir_all(&args.out_dir)
        .map_err(|e| domain(format!("cannot create {}: {e}", args.out_dir.display())))?;

    let (cloud, polys) = if let Some(product) = &args.product {
        let counts = parse_counts(args.per_component.as_deref().unwrap_or_default())?;
        let factors: Vec<TrigPolynomial> = product
            .split(',')
            .enumerate()
            .map(|(i, spec)| {
                let support = SupportSet::centered_rect(&parse_sizes(spec)?)?;
                Ok(TrigPolynomial::random_real(&support, args.seed.wrapping_add(i as u64))?)
            })
            .collect::<CliResult<_>>()?;
        if factors.len() != counts.len() {
            return Err(usage(format!(
                "{} factors but {} per-component counts",
                factors.len(),
                counts.len()
            )));
        }
        let cloud = sample_union(&factors, &counts, args.seed)?;
        (cloud, factors)
    } else {
        let poly = match (&args.support, &args.poly) {
            (Some(spec), None) => {
                let support = SupportSet::centered_rect(&parse_sizes(spec)?)?;
                TrigPolynomial::random_real(&support, args.seed)?
            }
            (None, Some(path)) => io::read_json::<TrigPolynomial>(path)?,
            _ => return Err(usage("exactly one of --support, --poly, --product is required")),
        };
        let n = args.n.ok_or_else(|| usage("--n is required for a single surface"))?;
        let cloud = poly.sample_zero_set(n, args.seed)?;
        (cloud, vec![poly])
    };

    io::write_cloud(&args.out_dir.join("cloud.csv"), &cloud)?;
    if polys.len() == 1 {
        io::write_json(&args.out_dir.join("poly.json"), &polys[0])?;
    } else {
        io::write_json(&args.out_dir.join("poly.json"), &polys)?;
    }
    write_manifest(&args.out_dir, "sample", args)
}

#[derive(Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
enum RecoveredModel {
    Minimal { poly: TrigPolynomial },
    Aggregate { null_dim: usize, rank: usize, sigma: Vec<f64>, poly: TrigPolynomial },
}

fn cmd_recover(args: &RecoverArgs) -> CliResult<()> {
    let cloud = io::read_cloud(&args.cloud)?;
    let gamma = io::read_support(&args.gamma)?;

    enum Surface {
        Minimal(TrigPolynomial),
        Aggregate(bandlimit::SosSurface),
    }
    let (model, surface) = if let Some(path) = &args.lambda {
        let lambda = io::read_support(path)?;
        let poly = recover_minimal(&cloud, &lambda)?;
        (RecoveredModel::Minimal { poly: poly.clone() }, Surface::Minimal(poly))
    } else {
        let sos = recover_sos(&cloud, &gamma, args.tol)?;
        let model = RecoveredModel::Aggregate {
            null_dim: sos.basis().dim(),
            rank: sos.basis().rank(),
            sigma: sos.basis().sigma().to_vec(),
            poly: sos_as_polynomial(&sos)?,
        };
        (model, Surface::Aggregate(sos))
    };
    io::write_json(&args.out, &model)?;

    if let Some(grid_out) = &args.grid_out {
        if cloud.dims() != 2 {
            return Err(usage("--grid-out requires a 2D cloud"));
        }
        if args.grid == 0 {
            return Err(usage("--grid must be ≥ 1"));
        }
        let mut csv = String::from("x1,x2,value\n");
        for i in 0..args.grid {
            for j in 0..args.grid {
                let x = [i as f64 / args.grid as f64, j as f64 / args.grid as f64];
                let value = match &surface {
                    Surface::Minimal(poly) => poly.evaluate(&x)?.norm(),
                    Surface::Aggregate(sos) => sos.eval(&x)?,
                };
                csv.push_str(&format!("{},{},{}\n", x[0], x[1], value));
            }
        }
        io::write_file(grid_out, &csv)?;
    }
    write_manifest(&args.out_dir, "recover", args)
}

fn cmd_denoise(args: &DenoiseArgs) -> CliResult<()> {
    let cloud = io::read_cloud(&args.cloud)?;
    let kernel = io::read_json::<KernelConfig>(&args.kernel)?;
    let cfg = IrlsConfig {
        lambda: args.lambda,
        iterations: args.iters,
        eta: args.eta,
        gamma0: args.gamma0,
        inner: args.inner,
        step: args.step,
        kernel,
    };
    let (denoised, metrics) = denoise(&cloud, &cfg)?;
    io::write_cloud(&args.out, &denoised)?;
    if let Some(log) = &args.log {
        let mut csv = String::from("iteration,objective,surrogate,mean_displacement\n");
        for m in &metrics {
            csv.push_str(&format!(
                "{},{},{},{}\n",
                m.iteration, m.objective, m.surrogate, m.mean_displacement
            ));
        }
        io::write_file(log, &csv)?;
    }
    write_manifest(&args.out_dir, "denoise", args)
}

fn cmd_fitfn(args: &FitFnArgs) -> CliResult<()> {
    let (train, values) = io::read_pairs(&args.train)?;
    let anchors = io::read_cloud(&args.anchors)?;
    let kernel = io::read_json::<KernelConfig>(&args.kernel)?;
    let model = fit_outputs(&train, &values, anchors, kernel, args.ridge, args.cutoff)?;
    io::write_json(&args.out, &model)?;
    write_manifest(&args.out_dir, "fit-fn", args)
}

fn cmd_evalfn(args: &EvalFnArgs) -> CliResult<()> {
    let model = io::read_json::<AnchorModel>(&args.model)?;
    let points = io::read_cloud(&args.points)?;
    let rows = model.outputs().nrows();
    // the projection error is defined through the anchor autoencoder, which
    // shares the model's anchors and kernel but outputs coordinates
    let autoencoder = if args.projection {
        Some(AnchorModel::autoencoder(
            model.anchors().clone(),
            model.kernel().clone(),
            model.ridge(),
            model.cutoff(),
        )?)
    } else {
        None
    };
    let mut values = DMatrix::<Complex64>::zeros(rows, points.len());
    let mut projection = Vec::with_capacity(points.len());
    for (c, x) in points.points().iter().enumerate() {
        let y = model.eval(x)?;
        for r in 0..rows {
            values[(r, c)] = y[r];
        }
        if let Some(auto) = &autoencoder {
            projection.push(auto.projection_error(x)?);
        }
    }
    io::write_outputs(
        &args.out,
        &points,
        &values,
        args.projection.then_some(projection.as_slice()),
    )?;
    write_manifest(&args.out_dir, "eval-fn", args)
}

fn cmd_phase(args: &PhaseArgs) -> CliResult<()> {
    let cfg = io::read_json::<PhaseConfig>(&args.config)?;
    let rows = phase_transition(&cfg)?;
    let mut csv = String::from("N,trials,successes,fraction\n");
    for row in &rows {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            row.total, row.trials, row.successes, row.fraction
        ));
    }
    io::write_file(&args.out, &csv)?;
    write_manifest(&args.out_dir, "phase-transition", args)
}

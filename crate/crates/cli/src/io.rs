//! File I/O for the command-line front end: point-cloud/pair CSVs with
//! line-numbered parse errors, JSON configs, and run manifests.

use std::fmt::Write as _;
use std::path::Path;

use bandlimit::{KernelConfig, PointCloud, SupportSet};
use nalgebra::DMatrix;
use num_complex::Complex64;

/// CLI failure carrying its process exit code: 1 usage, 2 domain/input
/// error, 3 numerical failure.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.message)
    }
}

impl std::error::Error for CliError {}

pub type CliResult<T> = Result<T, CliError>;

pub fn usage(message: impl Into<String>) -> CliError {
    CliError { code: 1, message: message.into() }
}

pub fn domain(message: impl Into<String>) -> CliError {
    CliError { code: 2, message: message.into() }
}

impl From<bandlimit::Error> for CliError {
    fn from(e: bandlimit::Error) -> Self {
        use bandlimit::Error::*;
        let code = match e {
            NoAnnihilator | AmbiguousRecovery { .. } | DegenerateSystem
            | NonFiniteObjective { .. } => 3,
            _ => 2,
        };
        CliError { code, message: e.to_string() }
    }
}

fn read_file(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path)
        .map_err(|e| domain(format!("cannot read {}: {e}", path.display())))
}

pub fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)
                .map_err(|e| domain(format!("cannot create {}: {e}", dir.display())))?;
        }
    }
    std::fs::write(path, contents)
        .map_err(|e| domain(format!("cannot write {}: {e}", path.display())))
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    serde_json::from_str(&read_file(path)?)
        .map_err(|e| domain(format!("{}: invalid JSON: {e}", path.display())))
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| domain(format!("cannot serialize {}: {e}", path.display())))?;
    text.push('\n');
    write_file(path, &text)
}

/// Reads a frequency support from JSON: either a kernel config
/// (`{"kind": "rect"|"ball", …}`) or an explicit `{"dims", "freqs"}` set.
pub fn read_support(path: &Path) -> CliResult<SupportSet> {
    let text = read_file(path)?;
    if let Ok(config) = serde_json::from_str::<KernelConfig>(&text) {
        return Ok(config.support()?);
    }
    serde_json::from_str::<SupportSet>(&text)
        .map_err(|e| domain(format!("{}: neither a kernel config nor a support set: {e}", path.display())))
}

fn parse_f64(field: &str, path: &Path, line_no: usize) -> CliResult<f64> {
    field.trim().parse::<f64>().map_err(|_| {
        domain(format!("{}:{line_no}: invalid number {field:?}", path.display()))
    })
}

/// Reads a point-cloud CSV with header `x1,…,xn[,component]`.
pub fn read_cloud(path: &Path) -> CliResult<PointCloud> {
    let text = read_file(path)?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| domain(format!("{}:1: empty file, expected a header", path.display())))?;
    let columns: Vec<&str> = header.split(',').map(str::trim).collect();
    let dims = columns.iter().take_while(|c| c.starts_with('x')).count();
    if dims == 0 {
        return Err(domain(format!(
            "{}:1: header must start with coordinate columns x1,…,xn",
            path.display()
        )));
    }
    let labeled = match columns.len() - dims {
        0 => false,
        1 if columns[dims] == "component" => true,
        _ => {
            return Err(domain(format!(
                "{}:1: unexpected columns after x1..x{dims}: {:?}",
                path.display(),
                &columns[dims..]
            )))
        }
    };

    let mut points = Vec::new();
    let mut labels = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != columns.len() {
            return Err(domain(format!(
                "{}:{line_no}: expected {} fields, found {}",
                path.display(),
                columns.len(),
                fields.len()
            )));
        }
        let mut point = Vec::with_capacity(dims);
        for field in &fields[..dims] {
            point.push(parse_f64(field, path, line_no)?);
        }
        points.push(point);
        if labeled {
            let label = fields[dims].trim().parse::<usize>().map_err(|_| {
                domain(format!(
                    "{}:{line_no}: invalid component label {:?}",
                    path.display(),
                    fields[dims]
                ))
            })?;
            labels.push(label);
        }
    }
    let cloud = if labeled {
        PointCloud::with_labels(dims, points, labels)?
    } else {
        PointCloud::new(dims, points)?
    };
    Ok(cloud)
}

pub fn cloud_to_csv(cloud: &PointCloud) -> String {
    let mut out = String::new();
    for i in 0..cloud.dims() {
        if i > 0 {
            out.push(',');
        }
        let _ = write!(out, "x{}", i + 1);
    }
    if cloud.labels().is_some() {
        out.push_str(",component");
    }
    out.push('\n');
    for (i, point) in cloud.points().iter().enumerate() {
        for (m, v) in point.iter().enumerate() {
            if m > 0 {
                out.push(',');
            }
            let _ = write!(out, "{v}");
        }
        if let Some(labels) = cloud.labels() {
            let _ = write!(out, ",{}", labels[i]);
        }
        out.push('\n');
    }
    out
}

pub fn write_cloud(path: &Path, cloud: &PointCloud) -> CliResult<()> {
    write_file(path, &cloud_to_csv(cloud))
}

/// Reads training pairs: header `x1,…,xn,f1_re,f1_im,…,fm_re,fm_im`.
/// Returns the input points and the `m × N` complex value matrix.
pub fn read_pairs(path: &Path) -> CliResult<(PointCloud, DMatrix<Complex64>)> {
    let text = read_file(path)?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| domain(format!("{}:1: empty file, expected a header", path.display())))?;
    let columns: Vec<&str> = header.split(',').map(str::trim).collect();
    let dims = columns.iter().take_while(|c| c.starts_with('x')).count();
    let value_cols = columns.len() - dims;
    if dims == 0 || value_cols % 2 != 0 {
        return Err(domain(format!(
            "{}:1: expected header x1,…,xn followed by f1_re,f1_im,… pairs",
            path.display()
        )));
    }
    let outputs = value_cols / 2;

    let mut points = Vec::new();
    let mut values: Vec<Complex64> = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != columns.len() {
            return Err(domain(format!(
                "{}:{line_no}: expected {} fields, found {}",
                path.display(),
                columns.len(),
                fields.len()
            )));
        }
        let mut point = Vec::with_capacity(dims);
        for field in &fields[..dims] {
            point.push(parse_f64(field, path, line_no)?);
        }
        points.push(point);
        for pair in fields[dims..].chunks_exact(2) {
            values.push(Complex64::new(
                parse_f64(pair[0], path, line_no)?,
                parse_f64(pair[1], path, line_no)?,
            ));
        }
    }
    let n = points.len();
    let cloud = PointCloud::new(dims, points)?;
    // values were read row-major per point; transpose into columns
    let matrix = DMatrix::from_fn(outputs, n, |r, c| values[c * outputs + r]);
    Ok((cloud, matrix))
}

/// Writes evaluation results: one row per point with its coordinates and
/// interleaved re/im output values (plus an optional projection-error
/// column).
pub fn write_outputs(
    path: &Path,
    points: &PointCloud,
    values: &DMatrix<Complex64>,
    projection: Option<&[f64]>,
) -> CliResult<()> {
    let mut out = String::new();
    for i in 0..points.dims() {
        if i > 0 {
            out.push(',');
        }
        let _ = write!(out, "x{}", i + 1);
    }
    for r in 0..values.nrows() {
        let _ = write!(out, ",f{}_re,f{}_im", r + 1, r + 1);
    }
    if projection.is_some() {
        out.push_str(",projection_error");
    }
    out.push('\n');
    for (c, point) in points.points().iter().enumerate() {
        for (m, v) in point.iter().enumerate() {
            if m > 0 {
                out.push(',');
            }
            let _ = write!(out, "{v}");
        }
        for r in 0..values.nrows() {
            let _ = write!(out, ",{},{}", values[(r, c)].re, values[(r, c)].im);
        }
        if let Some(errors) = projection {
            let _ = write!(out, ",{}", errors[c]);
        }
        out.push('\n');
    }
    write_file(path, &out)
}

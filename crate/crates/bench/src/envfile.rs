//! TOML environment definitions.
//!
//! ```toml
//! name = "toy2d"
//! A = [[1.01, 0.01], [0.01, 1.01]]   # row-major
//! B = [[1.0, 0.0], [0.0, 1.0]]
//! Q = [[1.0, 0.0], [0.0, 1.0]]
//! R = [[1.0, 0.0], [0.0, 1.0]]
//! sigma_w = 1.0                      # optional, default 1
//! x0 = [0.0, 0.0]                    # optional, default 0
//! horizon = 2000                     # optional, default 2000
//! ```
//!
//! Instead of `A` and `B` a file may give
//! `pendulum = { mass = .., length = .., dt = .. }`.

use std::path::Path;

use medlq_core::{envs, CostSpec, Environment, Mat, SystemParams, Vector};
use serde::Deserialize;

use crate::{BenchError, Result};

pub const DEFAULT_HORIZON: usize = 2000;

/// Environments shipped with the crate, by name.
pub const BUNDLED: &[(&str, &str)] = &[
    ("pendulum", include_str!("../data/pendulum.toml")),
    ("pendulum_heavy", include_str!("../data/pendulum_heavy.toml")),
    ("toy2d", include_str!("../data/toy2d.toml")),
    ("boeing747", include_str!("../data/boeing747.toml")),
    ("uav", include_str!("../data/uav.toml")),
];

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EnvFile {
    name: String,
    #[serde(rename = "A")]
    a: Option<Vec<Vec<f64>>>,
    #[serde(rename = "B")]
    b: Option<Vec<Vec<f64>>>,
    pendulum: Option<PendulumParams>,
    #[serde(rename = "Q")]
    q: Vec<Vec<f64>>,
    #[serde(rename = "R")]
    r: Vec<Vec<f64>>,
    sigma_w: Option<f64>,
    x0: Option<Vec<f64>>,
    horizon: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PendulumParams {
    mass: f64,
    length: f64,
    dt: f64,
}

fn bad(origin: &str, detail: impl Into<String>) -> BenchError {
    BenchError::BadEnvFile {
        origin: origin.to_string(),
        detail: detail.into(),
    }
}

fn matrix(origin: &str, field: &str, rows: &[Vec<f64>]) -> Result<Mat> {
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.is_empty() || ncols == 0 {
        return Err(bad(origin, format!("field `{field}`: matrix is empty")));
    }
    if let Some(i) = rows.iter().position(|r| r.len() != ncols) {
        return Err(bad(
            origin,
            format!("field `{field}`: row {i} has {} entries, row 0 has {ncols}", rows[i].len()),
        ));
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(bad(origin, format!("field `{field}`: non-finite entry")));
    }
    Ok(Mat::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

fn expect_shape(origin: &str, field: &str, m: &Mat, rows: usize, cols: usize) -> Result<()> {
    if m.shape() != (rows, cols) {
        return Err(bad(
            origin,
            format!("field `{field}`: expected {rows}x{cols}, found {}x{}", m.nrows(), m.ncols()),
        ));
    }
    Ok(())
}

/// Parses an environment definition. `origin` names the source in errors.
pub fn parse_environment(text: &str, origin: &str) -> Result<Environment> {
    let file: EnvFile = toml::from_str(text).map_err(|e| bad(origin, e.to_string().trim_end().to_string()))?;
    let theta = match (&file.a, &file.b, &file.pendulum) {
        (Some(a), Some(b), None) => {
            let a = matrix(origin, "A", a)?;
            let b = matrix(origin, "B", b)?;
            expect_shape(origin, "A", &a, a.nrows(), a.nrows())?;
            expect_shape(origin, "B", &b, a.nrows(), b.ncols())?;
            SystemParams::new(a, b).map_err(|e| bad(origin, e.to_string()))?
        }
        (None, None, Some(p)) => envs::pendulum_linearized(p.mass, p.length, p.dt)
            .map_err(|e| bad(origin, format!("field `pendulum`: {e}")))?,
        _ => return Err(bad(origin, "give either both `A` and `B`, or `pendulum`")),
    };
    let (d, k) = (theta.state_dim(), theta.input_dim());
    let q = matrix(origin, "Q", &file.q)?;
    let r = matrix(origin, "R", &file.r)?;
    expect_shape(origin, "Q", &q, d, d)?;
    expect_shape(origin, "R", &r, k, k)?;
    let sigma_w = file.sigma_w.unwrap_or(1.0);
    let cost = CostSpec::new(q, r, sigma_w).map_err(|e| bad(origin, format!("fields `Q`/`R`/`sigma_w`: {e}")))?;
    let x0 = match &file.x0 {
        Some(x) if x.len() != d => {
            return Err(bad(origin, format!("field `x0`: expected {d} entries, found {}", x.len())))
        }
        Some(x) => Vector::from_column_slice(x),
        None => Vector::zeros(d),
    };
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(bad(origin, "field `x0`: non-finite entry"));
    }
    let horizon = file.horizon.unwrap_or(DEFAULT_HORIZON);
    if horizon == 0 {
        return Err(bad(origin, "field `horizon`: must be at least 1"));
    }
    Environment::new(file.name.clone(), theta, cost, x0, horizon).map_err(|e| match e {
        medlq_core::Error::NotStabilizable => BenchError::NotStabilizable(file.name.clone()),
        e => bad(origin, e.to_string()),
    })
}

pub fn load_environment(path: &Path) -> Result<Environment> {
    let text = std::fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
    parse_environment(&text, &path.display().to_string())
}

/// A bundled environment by name, or else an environment file by path.
pub fn resolve_environment(name_or_path: &str) -> Result<Environment> {
    if let Some((name, text)) = BUNDLED.iter().find(|(n, _)| *n == name_or_path) {
        return parse_environment(text, name);
    }
    let path = Path::new(name_or_path);
    if path.is_file() {
        return load_environment(path);
    }
    Err(BenchError::UnknownEnv(name_or_path.to_string()))
}

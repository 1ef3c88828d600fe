//! CSV output. Floats carry 17 significant digits so that every value
//! round-trips exactly.

use std::fs::File;
use std::path::Path;

use crate::aggregate::SummaryRow;
use crate::landscape::Landscape;
use crate::study::StudyRow;
use crate::{BenchError, ExperimentTrace, Result};

pub const RAW_HEADER: [&str; 6] = ["env", "algo", "seed", "t", "instant_cost", "cumulative_regret"];
pub const SUMMARY_HEADER: [&str; 8] = ["env", "algo", "t", "iqm", "q25", "q75", "n_seeds", "n_destabilized"];
pub const STUDY_HEADER: [&str; 10] = [
    "env",
    "algo",
    "t",
    "iqm",
    "q25",
    "q75",
    "n_seeds",
    "n_destabilized",
    "n",
    "wall_time_iqm",
];
pub const TIMING_HEADER: [&str; 5] = ["env", "algo", "seed", "wall_time", "destabilized_at"];
pub const LANDSCAPE_HEADER: [&str; 4] = ["alpha", "L_alpha", "stable_K", "stable_Kprime"];
pub const ROOTS_HEADER: [&str; 4] = ["method", "alpha", "L_alpha", "iterations"];

/// `x` in scientific notation with 17 significant digits; `inf`, `-inf`, `NaN`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

fn writer(path: &Path) -> Result<csv::Writer<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| BenchError::io(dir, e))?;
    }
    let file = File::create(path).map_err(|e| BenchError::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

fn write_rows<I, R>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = writer(path)?;
    let err = |e| BenchError::csv(path, e);
    w.write_record(header).map_err(err)?;
    for row in rows {
        w.write_record(row.into_iter().collect::<Vec<_>>()).map_err(err)?;
    }
    w.flush().map_err(|e| BenchError::io(path, e))
}

/// One record per step: `env,algo,seed,t,instant_cost,cumulative_regret`,
/// with `t` counted from 1.
pub fn write_raw(traces: &[ExperimentTrace], path: &Path) -> Result<()> {
    let rows = traces.iter().flat_map(|tr| {
        tr.trace
            .instant_costs
            .iter()
            .zip(&tr.trace.cumulative_regret)
            .enumerate()
            .map(move |(i, (c, r))| {
                vec![
                    tr.env.clone(),
                    tr.algo.clone(),
                    tr.seed.to_string(),
                    (i + 1).to_string(),
                    fmt_f64(*c),
                    fmt_f64(*r),
                ]
            })
    });
    write_rows(path, &RAW_HEADER, rows)
}

fn summary_fields(r: &SummaryRow) -> Vec<String> {
    vec![
        r.env.clone(),
        r.algo.clone(),
        r.t.to_string(),
        fmt_f64(r.iqm),
        fmt_f64(r.q25),
        fmt_f64(r.q75),
        r.n_seeds.to_string(),
        r.n_destabilized.to_string(),
    ]
}

pub fn write_summary(rows: &[SummaryRow], path: &Path) -> Result<()> {
    write_rows(path, &SUMMARY_HEADER, rows.iter().map(summary_fields))
}

/// Wall time and blow-up step per run. Kept apart from the other files
/// because it is the only output that differs between identical runs.
pub fn write_timing(traces: &[ExperimentTrace], path: &Path) -> Result<()> {
    let rows = traces.iter().map(|tr| {
        vec![
            tr.env.clone(),
            tr.algo.clone(),
            tr.seed.to_string(),
            fmt_f64(tr.wall_time),
            tr.trace.destabilized_at.map_or(String::new(), |t| (t + 1).to_string()),
        ]
    });
    write_rows(path, &TIMING_HEADER, rows)
}

pub fn write_study(rows: &[StudyRow], path: &Path) -> Result<()> {
    write_rows(
        path,
        &STUDY_HEADER,
        rows.iter().map(|r| {
            let mut f = summary_fields(&r.summary);
            f.push(r.n.to_string());
            f.push(fmt_f64(r.wall_time_iqm));
            f
        }),
    )
}

fn flag(b: bool) -> String {
    u8::from(b).to_string()
}

/// The grid to `path`; the roots to `<path stem>.roots.csv` beside it.
/// Returns the roots path.
pub fn write_landscape(landscape: &Landscape, path: &Path) -> Result<std::path::PathBuf> {
    write_rows(
        path,
        &LANDSCAPE_HEADER,
        landscape.points.iter().map(|p| {
            vec![
                fmt_f64(p.alpha),
                p.gap.map_or(String::new(), fmt_f64),
                flag(p.stable_k),
                flag(p.stable_k_prime),
            ]
        }),
    )?;
    let roots_path = path.with_extension("roots.csv");
    let rows = [("exact", Some(&landscape.exact)), ("taylor", landscape.taylor.as_ref())]
        .into_iter()
        .map(|(name, root)| match root {
            Some(r) => vec![name.to_string(), fmt_f64(r.alpha), fmt_f64(r.gap), r.iterations.to_string()],
            None => vec![name.to_string(), String::new(), String::new(), String::new()],
        });
    write_rows(&roots_path, &ROOTS_HEADER, rows)?;
    Ok(roots_path)
}

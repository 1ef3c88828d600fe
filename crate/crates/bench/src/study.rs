//! How the number of MED-LQ candidates affects regret and running time.

use crate::aggregate::{self, SummaryRow};
use crate::runner::{run_on, ExperimentTrace};
use crate::{envfile, BenchError, ExperimentSpec, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct StudyRow {
    /// Final-regret statistics (`t` = horizon).
    pub summary: SummaryRow,
    pub n: usize,
    /// Interquartile mean of per-run wall time, seconds.
    pub wall_time_iqm: f64,
}

/// Runs MED-LQ under `base` once per candidate count in `sizes`. Other
/// algorithms listed in `base` are ignored.
pub fn sample_size_study(base: &ExperimentSpec, sizes: &[usize]) -> Result<(Vec<StudyRow>, Vec<ExperimentTrace>)> {
    if sizes.is_empty() {
        return Err(BenchError::BadSpec("no sample sizes given".into()));
    }
    let env = envfile::resolve_environment(&base.env)?;
    let mut rows = Vec::with_capacity(sizes.len());
    let mut all = Vec::new();
    for &n in sizes {
        let mut spec = base.clone();
        spec.algos = vec!["medlq".into()];
        spec.agent.n_candidates = n;
        let traces = run_on(&spec, &env)?;
        let summary = aggregate::aggregate(&traces, &[spec.horizon])
            .pop()
            .expect("one group and one grid point");
        let times = aggregate::sorted(traces.iter().map(|t| t.wall_time).collect());
        rows.push(StudyRow {
            summary,
            n,
            wall_time_iqm: aggregate::iqm(&times),
        });
        all.extend(traces);
    }
    Ok((rows, all))
}

//! Interquartile statistics across seeds.
//!
//! Quantiles use linear interpolation between order statistics (type 7).
//! The interquartile mean weights each sorted sample by its overlap with the
//! middle half of the sample, so boundary samples count fractionally; for
//! `[1, 2, 3, 4]` it is 2.5.
//!
//! A run that was aborted by the blow-up guard before step `t` has regret
//! `+inf` at `t`; such runs land in the upper tail and are also counted in
//! `n_destabilized`.

use std::collections::BTreeMap;

use crate::ExperimentTrace;

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub env: String,
    pub algo: String,
    pub t: usize,
    pub iqm: f64,
    pub q25: f64,
    pub q75: f64,
    pub n_seeds: usize,
    pub n_destabilized: usize,
}

fn lerp(lo: f64, hi: f64, h: f64) -> f64 {
    if h == 0.0 || lo == hi {
        lo
    } else {
        lo + h * (hi - lo)
    }
}

/// Type-7 quantile of an ascending sample.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of an empty sample");
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    lerp(sorted[lo], sorted[hi], pos - lo as f64)
}

/// Interquartile mean of an ascending sample.
pub fn iqm(sorted: &[f64]) -> f64 {
    assert!(!sorted.is_empty(), "IQM of an empty sample");
    let n = sorted.len() as f64;
    let (a, b) = (0.25 * n, 0.75 * n);
    let mut acc = 0.0;
    for (i, &v) in sorted.iter().enumerate() {
        let w = ((i + 1) as f64).min(b) - (i as f64).max(a);
        if w > 0.0 {
            acc += w * v;
        }
    }
    acc / (b - a)
}

/// Sorts a sample ascending (`-inf < finite < +inf`).
pub fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

/// Cumulative regret after `t` steps (`t >= 1`), `+inf` if the run was
/// aborted earlier.
pub fn regret_at(trace: &ExperimentTrace, t: usize) -> f64 {
    assert!(t >= 1, "regret is indexed from t = 1");
    trace.trace.cumulative_regret.get(t - 1).copied().unwrap_or(f64::INFINITY)
}

/// About twenty evenly spaced checkpoints, always ending at `horizon`.
pub fn default_grid(horizon: usize) -> Vec<usize> {
    let stride = (horizon / 20).max(1);
    let mut grid: Vec<usize> = (1..=horizon / stride).map(|i| i * stride).collect();
    if grid.last() != Some(&horizon) {
        grid.push(horizon);
    }
    grid
}

/// Per `(env, algo)` and grid point: IQM and quartiles of cumulative regret
/// across seeds. Rows are ordered by `(env, algo, t)`.
pub fn aggregate(traces: &[ExperimentTrace], grid: &[usize]) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<(&str, &str), Vec<&ExperimentTrace>> = BTreeMap::new();
    for tr in traces {
        groups.entry((&tr.env, &tr.algo)).or_default().push(tr);
    }
    let mut rows = Vec::new();
    for ((env, algo), group) in groups {
        let n_destabilized = group.iter().filter(|t| t.destabilized()).count();
        for &t in grid {
            let values = sorted(group.iter().map(|tr| regret_at(tr, t)).collect());
            rows.push(SummaryRow {
                env: env.to_string(),
                algo: algo.to_string(),
                t,
                iqm: iqm(&values),
                q25: quantile(&values, 0.25),
                q75: quantile(&values, 0.75),
                n_seeds: group.len(),
                n_destabilized,
            });
        }
    }
    rows
}

/// The summary row of `(env, algo)` at `t`.
pub fn find_row<'a>(rows: &'a [SummaryRow], env: &str, algo: &str, t: usize) -> Option<&'a SummaryRow> {
    rows.iter().find(|r| r.env == env && r.algo == algo && r.t == t)
}

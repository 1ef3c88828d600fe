use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use medlq_bench::{aggregate, envfile, landscape, report, study, ExperimentSpec, Scenario};

#[derive(Parser)]
#[command(name = "bench", about = "Regret benchmarks for online LQR learners")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct RunArgs {
    /// Experiment config (TOML); flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Bundled environment name or environment file.
    #[arg(long)]
    env: Option<String>,
    /// Comma-separated: medlq, ofulq, tslq, stabl, tsac, optimal, fixed.
    #[arg(long, value_delimiter = ',')]
    algos: Option<Vec<String>>,
    /// stable-init or auto-stab.
    #[arg(long)]
    scenario: Option<Scenario>,
    #[arg(long)]
    seeds: Option<usize>,
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long)]
    base_seed: Option<u64>,
    /// Worker threads (0: one per core).
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Multi-seed regret experiment: raw.csv, summary.csv, timing.csv.
    Run(RunArgs),
    /// Cost gap L(alpha) between the true systems of two environments.
    Landscape {
        #[arg(long)]
        env_a: String,
        #[arg(long)]
        env_b: String,
        #[arg(long, default_value_t = 201)]
        grid: usize,
        #[arg(long, default_value = "landscape.csv")]
        out: PathBuf,
    },
    /// MED-LQ regret and wall time against the number of candidates.
    Study {
        #[command(flatten)]
        run: RunArgs,
        /// Comma-separated candidate counts.
        #[arg(long, value_delimiter = ',', default_value = "16,64,256")]
        sizes: Vec<usize>,
    },
}

fn build_spec(args: &RunArgs) -> Result<ExperimentSpec> {
    let mut spec = match &args.config {
        Some(path) => ExperimentSpec::load(path)?,
        None => ExperimentSpec::new("pendulum", &["medlq", "ofulq", "tslq"], envfile::DEFAULT_HORIZON),
    };
    if let Some(env) = &args.env {
        spec.env = env.clone();
    }
    if let Some(algos) = &args.algos {
        spec.algos = algos.clone();
    }
    if let Some(s) = args.scenario {
        spec.scenario = s;
    }
    if let Some(n) = args.seeds {
        spec.n_seeds = n;
    }
    if let Some(t) = args.horizon {
        if args.config.is_none() || spec.horizon != t {
            spec.agent.epsilon = medlq_core::agents::default_epsilon(t);
        }
        spec.horizon = t;
    }
    if let Some(s) = args.base_seed {
        spec.base_seed = s;
    }
    if let Some(w) = args.workers {
        spec.workers = w;
    }
    spec.validate()?;
    Ok(spec)
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run(args) => {
            let spec = build_spec(&args)?;
            let traces = medlq_bench::run_experiment(&spec)?;
            let rows = aggregate::aggregate(&traces, &aggregate::default_grid(spec.horizon));
            report::write_raw(&traces, &args.out.join("raw.csv"))?;
            report::write_summary(&rows, &args.out.join("summary.csv"))?;
            report::write_timing(&traces, &args.out.join("timing.csv"))?;
            for r in rows.iter().filter(|r| r.t == spec.horizon) {
                println!(
                    "{} {:>8} regret IQM {:.6e} [{:.6e}, {:.6e}] destabilized {}/{}",
                    r.env, r.algo, r.iqm, r.q25, r.q75, r.n_destabilized, r.n_seeds
                );
            }
        }
        Command::Landscape { env_a, env_b, grid, out } => {
            let a = envfile::resolve_environment(&env_a)?;
            let b = envfile::resolve_environment(&env_b)?;
            let l = landscape::landscape_between(&a, &b, grid)?;
            let roots = report::write_landscape(&l, &out)?;
            println!("L(0) = {:.6e}, L(1) = {:.6e}", l.l0, l.l1);
            println!("exact root alpha = {:.12} ({} evaluations)", l.exact.alpha, l.exact.iterations);
            match &l.taylor {
                Some(t) => println!("Taylor root alpha = {:.12}, L = {:.3e}", t.alpha, t.gap),
                None => println!("Taylor model has no usable root"),
            }
            println!("wrote {} and {}", out.display(), roots.display());
        }
        Command::Study { run, sizes } => {
            let spec = build_spec(&run)?;
            let (rows, traces) = study::sample_size_study(&spec, &sizes)?;
            report::write_study(&rows, &run.out.join("study.csv"))?;
            report::write_timing(&traces, &run.out.join("timing.csv"))
                .with_context(|| "writing timing")?;
            for r in &rows {
                println!(
                    "n = {:>4}: final regret IQM {:.6e}, wall time IQM {:.3} s",
                    r.n, r.summary.iqm, r.wall_time_iqm
                );
            }
        }
    }
    Ok(())
}

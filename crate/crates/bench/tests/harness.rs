use medlq_bench::aggregate::{aggregate, iqm, quantile, regret_at, sorted};
use medlq_bench::envfile::{parse_environment, resolve_environment, BUNDLED};
use medlq_bench::landscape::{landscape, landscape_between};
use medlq_bench::report::{write_raw, write_summary, RAW_HEADER};
use medlq_bench::study::sample_size_study;
use medlq_bench::{registry, run_experiment, BenchError, ExperimentSpec, ExperimentTrace, Scenario};
use medlq_core::control::policy_cost;
use medlq_core::episode::EpisodeTrace;
use medlq_core::linalg::spectral_radius;
use medlq_core::AgentStats;

const TOY2D: &str = r#"
name = "toy2d"
A = [[1.01, 0.01], [0.01, 1.01]]
B = [[1.0, 0.0], [0.0, 1.0]]
Q = [[1.0, 0.0], [0.0, 1.0]]
R = [[1.0, 0.0], [0.0, 1.0]]
"#;

fn fixture(algo: &str, seed: u64, regrets: &[f64], destabilized: bool) -> ExperimentTrace {
    let mut prev = 0.0;
    let costs = regrets
        .iter()
        .map(|r| {
            let c = r - prev + 1.0;
            prev = *r;
            c
        })
        .collect();
    ExperimentTrace {
        env: "fixture".into(),
        algo: algo.into(),
        seed,
        j_star: 1.0,
        trace: EpisodeTrace {
            instant_costs: costs,
            cumulative_regret: regrets.to_vec(),
            destabilized_at: destabilized.then(|| regrets.len() - 1),
            stats: AgentStats::default(),
        },
        wall_time: 0.0,
    }
}

#[test]
fn bundled_environments_load() {
    for (name, _) in BUNDLED {
        let env = resolve_environment(name).unwrap();
        assert_eq!(env.name(), *name);
        assert!(env.optimal_cost().is_finite());
    }
}

#[test]
fn toy2d_is_open_loop_unstable() {
    let env = parse_environment(TOY2D, "inline").unwrap();
    let rho = spectral_radius(env.theta_true().a());
    assert!((rho - 1.02).abs() < 1e-12);
    assert!(env.optimal().policy.stabilizing());
    assert_eq!(env.horizon_default(), 2000);
}

#[test]
fn pendulum_file_matches_the_discretization() {
    let env = resolve_environment("pendulum").unwrap();
    assert!((env.theta_true().a()[(1, 0)] - 0.4905).abs() < 1e-12);
    assert!((env.theta_true().b()[(1, 0)] - 1.25).abs() < 1e-12);
}

#[test]
fn wrong_b_rows_is_a_bad_file() {
    let text = TOY2D.replace("B = [[1.0, 0.0], [0.0, 1.0]]", "B = [[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]");
    match parse_environment(&text, "inline") {
        Err(BenchError::BadEnvFile { detail, .. }) => assert!(detail.contains("`B`"), "{detail}"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn syntax_errors_report_the_line() {
    let text = TOY2D.replace("R = [[1.0, 0.0], [0.0, 1.0]]", "R = [[1.0, 0.0], [0.0, 1.0]");
    match parse_environment(&text, "inline") {
        Err(BenchError::BadEnvFile { detail, .. }) => assert!(detail.contains("line"), "{detail}"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn uncontrollable_unstable_system_is_rejected() {
    let text = r#"
name = "bad"
A = [[2.0, 0.0], [0.0, 2.0]]
B = [[0.0], [0.0]]
Q = [[1.0, 0.0], [0.0, 1.0]]
R = [[1.0]]
"#;
    assert!(matches!(parse_environment(text, "inline"), Err(BenchError::NotStabilizable(_))));
}

#[test]
fn quantile_conventions() {
    let v = [1.0, 2.0, 3.0, 4.0];
    assert_eq!(iqm(&v), 2.5);
    assert_eq!(quantile(&v, 0.25), 1.75);
    assert_eq!(quantile(&v, 0.75), 3.25);
    let same = [7.0; 5];
    assert_eq!((iqm(&same), quantile(&same, 0.25), quantile(&same, 0.75)), (7.0, 7.0, 7.0));
}

#[test]
fn aggregation_with_a_destabilized_run() {
    // Regret at t = 3 across five seeds: 1, 2, 3, 4 and a run that blew up
    // at t = 2. Sorted [1, 2, 3, 4, inf]; the middle half [1.25, 3.75) takes
    // 0.75 of `2`, all of `3` and 0.75 of `4`: IQM = 7.5 / 2.5 = 3.
    let traces = vec![
        fixture("a", 0, &[0.0, 0.0, 1.0], false),
        fixture("a", 1, &[0.0, 0.0, 2.0], false),
        fixture("a", 2, &[0.0, 0.0, 3.0], false),
        fixture("a", 3, &[0.0, 0.0, 4.0], false),
        fixture("a", 4, &[0.0, 1e9], true),
    ];
    assert_eq!(regret_at(&traces[4], 3), f64::INFINITY);
    let rows = aggregate(&traces, &[3]);
    assert_eq!(rows.len(), 1);
    let r = &rows[0];
    assert_eq!((r.iqm, r.q25, r.q75), (3.0, 2.0, 4.0));
    assert_eq!((r.n_seeds, r.n_destabilized), (5, 1));
}

#[test]
fn aggregation_ignores_seed_order() {
    let mut traces: Vec<_> = (0..9).map(|s| fixture("a", s, &[s as f64 * 1.5 - 3.0], false)).collect();
    let forward = aggregate(&traces, &[1]);
    traces.reverse();
    traces.swap(2, 7);
    assert_eq!(forward, aggregate(&traces, &[1]));
    let v = sorted(vec![3.0, f64::INFINITY, -1.0]);
    assert_eq!(v, vec![-1.0, 3.0, f64::INFINITY]);
}

#[test]
fn empty_raw_file_is_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("raw.csv");
    write_raw(&[], &path).unwrap();
    assert_eq!(std::fs::read_to_string(&path).unwrap(), format!("{}\n", RAW_HEADER.join(",")));
}

#[test]
fn raw_rows_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("raw.csv");
    let tr = fixture("a", 3, &[0.1 + 0.2, 1.0 / 3.0], false);
    write_raw(std::slice::from_ref(&tr), &path).unwrap();
    let mut reader = csv::Reader::from_path(&path).unwrap();
    let records: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(records.len(), 2);
    for (i, rec) in records.iter().enumerate() {
        assert_eq!(&rec[0], "fixture");
        assert_eq!(&rec[2], "3");
        assert_eq!(rec[3].parse::<usize>().unwrap(), i + 1);
        assert_eq!(rec[4].parse::<f64>().unwrap(), tr.trace.instant_costs[i]);
        assert_eq!(rec[5].parse::<f64>().unwrap(), tr.trace.cumulative_regret[i]);
    }
}

fn small_spec(algos: &[&str], seeds: usize, horizon: usize) -> ExperimentSpec {
    let mut spec = ExperimentSpec::new("toy2d", algos, horizon);
    spec.n_seeds = seeds;
    spec.base_seed = 11;
    spec
}

#[test]
fn two_algorithms_three_seeds_give_six_sorted_traces() {
    let spec = small_spec(&["optimal", "medlq"], 3, 300);
    let traces = run_experiment(&spec).unwrap();
    assert_eq!(traces.len(), 6);
    let keys: Vec<_> = traces.iter().map(|t| (t.algo.as_str(), t.seed)).collect();
    assert_eq!(
        keys,
        [("medlq", 0), ("medlq", 1), ("medlq", 2), ("optimal", 0), ("optimal", 1), ("optimal", 2)]
    );
    for tr in &traces {
        let mut acc = 0.0;
        for (c, r) in tr.trace.instant_costs.iter().zip(&tr.trace.cumulative_regret) {
            acc += c - tr.j_star;
            assert!((acc - r).abs() <= 1e-9 * (1.0 + acc.abs()));
        }
        assert!(tr.wall_time > 0.0);
    }
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let spec = small_spec(&["medlq", "tslq"], 3, 200);
    let dir = tempfile::tempdir().unwrap();
    let mut files = Vec::new();
    for rep in 0..2 {
        let traces = run_experiment(&spec).unwrap();
        let raw = dir.path().join(format!("raw{rep}.csv"));
        let summary = dir.path().join(format!("summary{rep}.csv"));
        write_raw(&traces, &raw).unwrap();
        write_summary(&aggregate(&traces, &[100, 200]), &summary).unwrap();
        files.push((std::fs::read(raw).unwrap(), std::fs::read(summary).unwrap()));
    }
    assert_eq!(files[0], files[1]);
}

#[test]
fn single_worker_matches_the_pool() {
    let mut spec = small_spec(&["ofulq"], 2, 150);
    let pooled = run_experiment(&spec).unwrap();
    spec.workers = 1;
    let serial = run_experiment(&spec).unwrap();
    for (a, b) in pooled.iter().zip(&serial) {
        assert_eq!(a.trace, b.trace);
    }
}

#[test]
fn optimal_agent_has_vanishing_average_regret() {
    let spec = small_spec(&["optimal"], 4, 10_000);
    for tr in run_experiment(&spec).unwrap() {
        let r = *tr.trace.cumulative_regret.last().unwrap();
        // O(sqrt(T)) fluctuation; the average is a small fraction of J*.
        assert!((r / 10_000.0).abs() < 0.05 * tr.j_star, "{r}");
    }
}

#[test]
fn fixed_gain_regret_grows_at_its_excess_cost() {
    let spec = small_spec(&["fixed"], 1, 10_000);
    let env = resolve_environment("toy2d").unwrap();
    let gain = registry::fixed_baseline_gain(&env).unwrap();
    let slope = policy_cost(env.theta_true(), &gain, env.cost()).unwrap().j - env.optimal_cost();
    let tr = &run_experiment(&spec).unwrap()[0];
    let observed = tr.trace.cumulative_regret.last().unwrap() / 10_000.0;
    assert!((observed - slope).abs() <= 0.05 * slope, "{observed} vs {slope}");
}

#[test]
fn spec_errors_come_before_any_run() {
    let spec = small_spec(&["medlq", "nope"], 1, 10);
    assert!(matches!(run_experiment(&spec), Err(BenchError::UnknownAlgo(_))));
    let mut spec = small_spec(&["medlq"], 1, 10);
    spec.env = "/does/not/exist.toml".into();
    assert!(matches!(run_experiment(&spec), Err(BenchError::UnknownEnv(_))));
}

#[test]
fn scenario_two_flags_blow_ups_instead_of_failing() {
    let mut spec = small_spec(&["medlq", "tsac", "stabl"], 2, 300);
    spec.scenario = Scenario::AutoStab;
    let traces = run_experiment(&spec).unwrap();
    assert_eq!(traces.len(), 6);
    for tr in &traces {
        assert!(tr.destabilized() || tr.len() == 300);
    }
}

#[test]
fn config_file_overrides_defaults() {
    let spec = ExperimentSpec::from_toml(
        r#"
env = "uav"
algos = ["medlq", "fixed"]
scenario = "auto-stab"
horizon = 500
seeds = 3
fixed_gain = [[0.1, 0.5, 0.0, 0.0], [0.0, 0.0, 0.1, 0.5]]
[medlq]
n_candidates = 7
norm = "perturbation"
"#,
        "inline",
    )
    .unwrap();
    assert_eq!(spec.algos, ["medlq", "fixed"]);
    assert_eq!(spec.scenario, Scenario::AutoStab);
    assert_eq!((spec.horizon, spec.n_seeds, spec.agent.n_candidates), (500, 3, 7));
    assert_eq!(spec.agent.epsilon, medlq_core::agents::default_epsilon(500));
    assert_eq!(spec.fixed_gain.as_ref().unwrap().shape(), (2, 4));
    assert!(ExperimentSpec::from_toml("bogus = 1", "inline").is_err());
}

#[test]
fn pendulum_pair_landscape_has_an_interior_root() {
    let a = resolve_environment("pendulum").unwrap();
    let b = resolve_environment("pendulum_heavy").unwrap();
    let l = landscape_between(&a, &b, 51).unwrap();
    assert!(l.l0 > 0.0 && l.l1 < 0.0);
    assert!(l.exact.alpha > 0.0 && l.exact.alpha < 1.0);
    assert!(l.exact.gap.abs() <= 1e-8);
    // Bisection oracle on the finite part of the grid.
    let finite: Vec<_> = l.points.iter().filter_map(|p| p.gap.map(|g| (p.alpha, g))).collect();
    let change = finite.windows(2).find(|w| w[0].1 > 0.0 && w[1].1 <= 0.0).unwrap();
    assert!(change[0].0 <= l.exact.alpha && l.exact.alpha <= change[1].0);
}

#[test]
fn identical_systems_have_no_sign_change() {
    let a = resolve_environment("toy2d").unwrap();
    assert!(matches!(
        landscape(a.theta_true(), a.theta_true(), a.cost(), 5),
        Err(BenchError::NoSignChange { .. })
    ));
}

#[test]
fn two_point_grid_is_the_endpoints() {
    let a = resolve_environment("toy2d").unwrap();
    let mut theta = a.theta_true().theta();
    theta[(0, 0)] += 0.5;
    theta[(2, 1)] -= 0.4;
    let other = medlq_core::SystemParams::from_theta(&theta, 2).unwrap();
    let l = landscape(a.theta_true(), &other, a.cost(), 2).unwrap();
    assert_eq!(l.points.len(), 2);
    assert_eq!((l.points[0].alpha, l.points[1].alpha), (0.0, 1.0));
    assert!(l.points[0].gap.unwrap() > 0.0 && l.points[1].gap.unwrap() < 0.0);
}

#[test]
fn single_candidate_study_runs() {
    let spec = small_spec(&["medlq"], 2, 200);
    let (rows, traces) = sample_size_study(&spec, &[1]).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!((rows[0].n, rows[0].summary.t, rows[0].summary.n_seeds), (1, 200, 2));
    assert!(rows[0].wall_time_iqm > 0.0);
    assert_eq!(traces.len(), 2);
}

//! Acceptance criteria 1-10. One PASS/FAIL line per criterion and a closing
//! tally. Failures are reported, not fatal, so that the rest of the test
//! suite still runs; set `ACCEPTANCE_STRICT=1` to exit non-zero on any FAIL.

use std::path::Path;
use std::time::Instant;

use medlq_bench::aggregate::{self, find_row, SummaryRow};
use medlq_bench::envfile::resolve_environment;
use medlq_bench::landscape::landscape_between;
use medlq_bench::report::{write_landscape, write_raw, write_study, write_summary};
use medlq_bench::study::{sample_size_study, StudyRow};
use medlq_bench::{run_experiment, ExperimentSpec, ExperimentTrace, Scenario};
use medlq_core::agents::{blend, medlq_epoch, softmax_weights};
use medlq_core::control::{dare_residual, optimal_solution, solve_dare, solve_lyapunov_bellman};
use medlq_core::divergence::{
    find_root_exact, find_root_taylor, llr_rate, taylor_coefficients, taylor_coefficients_kronecker,
    TaylorOutcome,
};
use medlq_core::estimation::ellipsoid_norm;
use medlq_core::linalg::spectral_radius;
use medlq_core::{
    CostSpec, DesignState, InterpolationProblem, Mat, MedLqConfig, SimRng, SystemParams, Vector,
};
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;

const SEEDS: usize = 16;
const HORIZON: usize = 2000;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

/// Outputs of the long experiments, kept for the determinism re-run.
#[derive(Default)]
struct Context {
    scenario1: Vec<(ExperimentSpec, Vec<u8>, Vec<u8>)>,
    study: Option<(ExperimentSpec, Vec<u8>)>,
    landscape: Option<Vec<u8>>,
}

fn unit_cost(d: usize, k: usize) -> CostSpec {
    CostSpec::new(Mat::identity(d, d), Mat::identity(k, k), 1.0).unwrap()
}

fn uniform(rng: &mut SimRng, r: usize, c: usize, scale: f64) -> Mat {
    Mat::from_fn(r, c, |_, _| scale * rng.random_range(-1.0..1.0))
}

fn scaled_to(m: Mat, rho: f64) -> Mat {
    let r = spectral_radius(&m);
    if r > rho {
        m * (rho / r)
    } else {
        m
    }
}

fn random_system(rng: &mut SimRng, d: usize, k: usize) -> SystemParams {
    SystemParams::new(uniform(rng, d, d, 1.0), uniform(rng, d, k, 1.0)).unwrap()
}

fn csv_bytes(write: impl FnOnce(&Path)) -> Vec<u8> {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.csv");
    write(&path);
    std::fs::read(path).unwrap()
}

fn sci(x: f64) -> String {
    format!("{x:.4e}")
}

// 1. DARE and Lyapunov accuracy.
fn solver_exactness(_: &mut Context) -> Outcome {
    let start = Instant::now();
    let scalar = SystemParams::new(Mat::from_element(1, 1, 1.0), Mat::from_element(1, 1, 1.0)).unwrap();
    let p = solve_dare(&scalar, &unit_cost(1, 1)).unwrap()[(0, 0)];
    let golden_err = (p - (1.0 + 5f64.sqrt()) / 2.0).abs();
    let mut rng = SimRng::seed_from_u64(1);
    let (mut worst_dare, mut worst_lyap) = (0.0f64, 0.0f64);
    for d in [2, 4, 8] {
        for _ in 0..5 {
            let k = (d / 2).max(1);
            let sys = random_system(&mut rng, d, k);
            let cost = unit_cost(d, k);
            let sol = optimal_solution(&sys, &cost).unwrap();
            let res = dare_residual(&sys, &cost, &sol.riccati).norm() / (1.0 + sol.riccati.norm());
            worst_dare = worst_dare.max(res);
            let a_k = sol.policy.closed_loop();
            let g = sol.policy.gain();
            let q_k = cost.q() + g.transpose() * cost.r() * g;
            let pk = solve_lyapunov_bellman(a_k, &q_k).unwrap();
            let lres = (&pk - &q_k - a_k.transpose() * &pk * a_k).norm() / (1.0 + pk.norm());
            worst_lyap = worst_lyap.max(lres);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        golden_err <= 1e-10 && worst_dare <= 1e-8 && worst_lyap <= 1e-10 && secs < 1.0,
        format!(
            "|P - golden ratio| = {}, max relative DARE residual {}, max relative Lyapunov residual {}, {secs:.3} s",
            sci(golden_err),
            sci(worst_dare),
            sci(worst_lyap)
        ),
    )
}

// 2. Monte-Carlo log-likelihood ratio against the closed form.
fn llr_validation(_: &mut Context) -> Outcome {
    let start = Instant::now();
    let mut rng = SimRng::seed_from_u64(2);
    let mut worst = 0.0f64;
    let mut details = Vec::new();
    for (i, d) in [2, 3, 4, 2, 3].into_iter().enumerate() {
        let k = 1;
        let theta = SystemParams::new(scaled_to(uniform(&mut rng, d, d, 1.0), 0.8), uniform(&mut rng, d, k, 1.0)).unwrap();
        let gain = Mat::zeros(k, d);
        let alt = SystemParams::new(theta.a() + uniform(&mut rng, d, d, 0.3), theta.b() + uniform(&mut rng, d, k, 0.3)).unwrap();
        let omega = Mat::identity(d, d);
        let rate = llr_rate(&theta, &alt, &gain, &omega).unwrap();
        let a_k = theta.closed_loop_matrix(&gain).unwrap();
        let alt_k = alt.closed_loop_matrix(&gain).unwrap();
        let mut x = Vector::zeros(d);
        let mut noise = SimRng::seed_from_u64(200 + i as u64);
        for _ in 0..1000 {
            x = &a_k * &x + Vector::from_fn(d, |_, _| noise.sample::<f64, _>(StandardNormal));
        }
        let steps = 100_000;
        let mut acc = 0.0;
        for _ in 0..steps {
            let next = &a_k * &x + Vector::from_fn(d, |_, _| noise.sample::<f64, _>(StandardNormal));
            let r_true = &next - &a_k * &x;
            let r_alt = &next - &alt_k * &x;
            acc += 0.5 * (r_alt.norm_squared() - r_true.norm_squared());
            x = next;
        }
        let mc = acc / steps as f64;
        let rel = (mc - rate).abs() / rate;
        worst = worst.max(rel);
        details.push(format!("d={d}: {mc:.4}/{rate:.4}"));
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst <= 0.05 && secs < 30.0,
        format!("MC/closed form {}; max relative error {:.2}%, {secs:.1} s", details.join(", "), 100.0 * worst),
    )
}

// 3. Root of the cost gap on the pendulum pair.
fn pendulum_root(ctx: &mut Context) -> Outcome {
    let a = resolve_environment("pendulum").unwrap();
    let b = resolve_environment("pendulum_heavy").unwrap();
    let cost = a.cost();
    let problem = InterpolationProblem::new(a.theta_true().clone(), b.theta_true().clone(), cost).unwrap();
    let (l0, l1) = medlq_core::divergence::endpoint_gaps(&problem, cost).unwrap();
    let root = match find_root_exact(&problem, cost, 1e-8) {
        Ok(r) => r,
        Err(e) => return outcome(false, format!("root search failed: {e}")),
    };
    let crude = llr_rate(problem.theta(), problem.theta_prime(), problem.gain(), cost.omega()).unwrap();
    let l = landscape_between(&a, &b, 201).unwrap();
    ctx.landscape = Some(csv_bytes(|p| {
        write_landscape(&l, p).unwrap();
    }));
    outcome(
        l0 > 0.0 && l1 < 0.0 && root.residual <= 1e-8 && root.iterations <= 15 && root.kl_cost <= crude,
        format!(
            "L(0) = {l0}, L(1) = {l1}, alpha* = {:.6}, |L(alpha*)| = {}, {} iterations, kl {} <= crude {}",
            root.alpha_star,
            sci(root.residual),
            root.iterations,
            sci(root.kl_cost),
            sci(crude)
        ),
    )
}

fn random_pair(rng: &mut SimRng, d: usize, k: usize, scale: f64) -> (SystemParams, SystemParams) {
    loop {
        let theta = random_system(rng, d, k);
        let alt = SystemParams::new(theta.a() + uniform(rng, d, d, scale), theta.b() + uniform(rng, d, k, scale)).unwrap();
        let cost = unit_cost(d, k);
        let Ok(p) = InterpolationProblem::new(theta.clone(), alt.clone(), &cost) else { continue };
        let stable = |s: &SystemParams, g: &Mat| spectral_radius(&s.closed_loop_matrix(g).unwrap()) < 1.0;
        if stable(&theta, p.gain_prime()) && stable(&alt, p.gain()) {
            return (theta, alt);
        }
    }
}

// 4. Taylor coefficients and the approximate root.
fn taylor_validation(_: &mut Context) -> Outcome {
    let mut rng = SimRng::seed_from_u64(4);
    let mut worst_route = 0.0f64;
    for d in 1..=6 {
        for _ in 0..3 {
            let (theta, alt) = random_pair(&mut rng, d, 2, 0.1);
            let cost = unit_cost(d, 2);
            let p = InterpolationProblem::new(theta, alt, &cost).unwrap();
            for gain in [p.gain(), p.gain_prime()] {
                let l = taylor_coefficients(&p, gain, &cost).unwrap();
                let k = taylor_coefficients_kronecker(&p, gain, &cost).unwrap();
                for (x, y) in [(l.p, k.p), (l.p_bar, k.p_bar), (l.p_dbar, k.p_dbar)] {
                    worst_route = worst_route.max((x - y).abs() / x.abs().max(y.abs()).max(1e-300));
                }
            }
        }
    }
    // p_bar against a central difference of Tr P_K(Theta(alpha)).
    let mut worst_fd = 0.0f64;
    for d in [2, 3, 4] {
        let (theta, alt) = random_pair(&mut rng, d, 1, 0.2);
        let cost = unit_cost(d, 1);
        let p = InterpolationProblem::new(theta.clone(), alt.clone(), &cost).unwrap();
        let trace_at = |alpha: f64| {
            let sys = SystemParams::new(theta.a() + (alt.a() - theta.a()) * alpha, theta.b() + (alt.b() - theta.b()) * alpha).unwrap();
            medlq_core::control::policy_cost(&sys, p.gain(), &cost).unwrap().p.trace()
        };
        let h = 1e-6;
        let fd = (trace_at(h) - trace_at(-h)) / (2.0 * h);
        let c = taylor_coefficients(&p, p.gain(), &cost).unwrap();
        worst_fd = worst_fd.max((c.p_bar - fd).abs() / fd.abs());
    }
    // Taylor root error as the perturbation shrinks along a fixed direction.
    let (theta, dir) = {
        let (theta, alt) = random_pair(&mut rng, 2, 1, 1.0);
        let dir = alt.theta() - theta.theta();
        let n = dir.norm();
        (theta, dir / n)
    };
    let cost = unit_cost(2, 1);
    let mut errors = Vec::new();
    for s in [0.1, 0.05, 0.025] {
        let alt = SystemParams::from_theta(&(theta.theta() + &dir * s), 2).unwrap();
        let p = InterpolationProblem::new(theta.clone(), alt, &cost).unwrap();
        let exact = find_root_exact(&p, &cost, 1e-14).unwrap().alpha_star;
        let err = match find_root_taylor(&p, &cost).unwrap() {
            TaylorOutcome::Root(t) => (t.alpha_star - exact).abs(),
            TaylorOutcome::Fallback(_) => f64::INFINITY,
        };
        errors.push(err);
    }
    let monotone = errors.windows(2).all(|w| w[1] < w[0]);
    outcome(
        worst_route <= 1e-8 && worst_fd <= 1e-5 && monotone,
        format!(
            "route disagreement {}, p_bar vs FD {}, |alpha_taylor - alpha_exact| at scales 0.1/0.05/0.025: {}",
            sci(worst_route),
            sci(worst_fd),
            errors.iter().map(|e| sci(*e)).collect::<Vec<_>>().join(" / ")
        ),
    )
}

// 5. Mask and weight invariants over randomized epochs.
fn mask_and_weights(_: &mut Context) -> Outcome {
    let mut rng = SimRng::seed_from_u64(5);
    let mut violations = Vec::new();
    let mut nonempty = 0;
    let epochs = 1000;
    for e in 0..epochs {
        let base = Mat::from_row_slice(2, 2, &[1.01, 0.01, 0.01, 1.01]);
        let hat = SystemParams::new(base + uniform(&mut rng, 2, 2, 0.2), Mat::identity(2, 2) + uniform(&mut rng, 2, 2, 0.2)).unwrap();
        let f = uniform(&mut rng, 4, 4, 1.0);
        let v = &f * f.transpose() * rng.random_range(1.0..200.0) + Mat::identity(4, 4);
        let cfg = MedLqConfig {
            n_candidates: 16,
            sigma_eta: rng.random_range(0.05..1.0),
            ..MedLqConfig::default()
        };
        let epoch = medlq_epoch(&hat, &v, &unit_cost(2, 2), &cfg, &mut rng);
        let shift = (epoch.theta_tilde.theta() - hat.theta()).norm();
        if shift > cfg.sigma_eta + 1e-12 {
            violations.push(format!("epoch {e}: shift {shift} > {}", cfg.sigma_eta));
        }
        let Some(w) = &epoch.weights else {
            if epoch.theta_tilde != hat {
                violations.push(format!("epoch {e}: empty epoch moved the estimate"));
            }
            continue;
        };
        nonempty += 1;
        if (w.iter().sum::<f64>() - 1.0).abs() > 1e-12 || w.iter().any(|x| *x < 0.0) {
            violations.push(format!("epoch {e}: weights off the simplex"));
        }
        for i in 0..w.len() {
            if epoch.coefficients[i].is_none() && w[i] != 0.0 {
                violations.push(format!("epoch {e}: candidate {i} has weight without a coefficient"));
            }
            if epoch.coefficients[i].is_some() && !epoch.mask[i] {
                violations.push(format!("epoch {e}: masked-out candidate {i} has a coefficient"));
            }
        }
        let c = rng.random_range(-50.0..50.0);
        let shifted: Vec<_> = epoch.coefficients.iter().map(|h| h.map(|h| h + c)).collect();
        let ws = softmax_weights(&shifted).unwrap();
        if w.iter().zip(&ws).any(|(a, b)| (a - b).abs() > 1e-12) {
            violations.push(format!("epoch {e}: weights depend on a common shift"));
        }
        if blend(&hat, &epoch.candidates, Some(w)) != epoch.theta_tilde {
            violations.push(format!("epoch {e}: blend does not reproduce theta_tilde"));
        }
    }
    outcome(
        violations.is_empty() && nonempty > 0,
        format!(
            "{epochs} epochs, {nonempty} with masked-in candidates, {} violations{}",
            violations.len(),
            violations.first().map_or(String::new(), |v| format!(" (first: {v})"))
        ),
    )
}

// 6. Coverage of the confidence ellipsoid.
fn estimator_coverage(_: &mut Context) -> Outcome {
    let start = Instant::now();
    let env = resolve_environment("toy2d").unwrap();
    let truth = env.theta_true().theta();
    let s_bound = truth.norm();
    let gain = env.optimal().policy.gain().clone();
    let (runs, delta) = (500, 0.05);
    let mut covered = 0;
    for run in 0..runs {
        let mut rng = SimRng::seed_from_u64(6_000 + run);
        let mut design = DesignState::new(2, 2, 1e-4).unwrap();
        let mut x = Vector::zeros(2);
        let mut inside = true;
        for _ in 0..HORIZON {
            let u = -(&gain * &x) + Vector::from_fn(2, |_, _| rng.sample::<f64, _>(StandardNormal));
            let next = env.step(&x, &u, &mut rng).x_next;
            design.ingest(&x, &u, &next).unwrap();
            x = next;
            let est = design.rls_estimate(1.0, delta, s_bound).unwrap();
            if ellipsoid_norm(design.v(), &(est.theta_hat.theta() - &truth)) > est.beta {
                inside = false;
                break;
            }
        }
        covered += usize::from(inside);
    }
    let rate = covered as f64 / runs as f64;
    let secs = start.elapsed().as_secs_f64();
    outcome(
        rate >= 0.92 && secs < 120.0,
        format!("{covered}/{runs} runs kept Theta* inside the ellipsoid at every step (delta = {delta}), {secs:.1} s"),
    )
}

fn scenario1_spec(env: &str) -> ExperimentSpec {
    let mut spec = ExperimentSpec::new(env, &["medlq", "ofulq", "tslq", "fixed"], HORIZON);
    spec.n_seeds = SEEDS;
    spec.scenario = Scenario::StableInit;
    spec
}

fn row<'a>(rows: &'a [SummaryRow], env: &str, algo: &str, t: usize) -> &'a SummaryRow {
    find_row(rows, env, algo, t).unwrap_or_else(|| panic!("missing summary row {env}/{algo}/{t}"))
}

fn summarize(traces: &[ExperimentTrace]) -> Vec<SummaryRow> {
    aggregate::aggregate(traces, &aggregate::default_grid(HORIZON))
}

// 7. Scenario 1 regret.
fn scenario1(ctx: &mut Context) -> Outcome {
    let mut pass = true;
    let mut details = Vec::new();
    for env in ["pendulum", "toy2d"] {
        let spec = scenario1_spec(env);
        let traces = run_experiment(&spec).unwrap();
        let rows = summarize(&traces);
        let raw = csv_bytes(|p| write_raw(&traces, p).unwrap());
        let summary = csv_bytes(|p| write_summary(&rows, p).unwrap());
        ctx.scenario1.push((spec, raw, summary));
        let med = |t| row(&rows, env, "medlq", t).iqm;
        let (early, late) = (med(200) / 200.0, med(HORIZON) / HORIZON as f64);
        let sublinear = late < 0.5 * early;
        let fixed = row(&rows, env, "fixed", HORIZON).iqm;
        let best = row(&rows, env, "ofulq", HORIZON).iqm.min(row(&rows, env, "tslq", HORIZON).iqm);
        let below_fixed = med(HORIZON) < fixed;
        let competitive = med(HORIZON) <= 1.5 * best;
        pass &= sublinear && below_fixed && competitive;
        details.push(format!(
            "{env}: medlq R/T {:.3} at 200 -> {:.3} at {HORIZON} [{}], final IQM medlq {} vs fixed {} [{}], vs best(ofulq, tslq) {} [{}]",
            early,
            late,
            if sublinear { "ok" } else { "not sublinear" },
            sci(med(HORIZON)),
            sci(fixed),
            if below_fixed { "ok" } else { "not below" },
            sci(best),
            if competitive { "ok" } else { "above 1.5x" },
        ));
    }
    outcome(pass, details.join("; "))
}

// 8. Scenario 2 stability.
fn scenario2(_: &mut Context) -> Outcome {
    let mut pass = true;
    let mut details = Vec::new();
    for env in ["toy2d", "boeing747"] {
        let mut spec = ExperimentSpec::new(env, &["medlq", "tsac"], HORIZON);
        spec.n_seeds = SEEDS;
        spec.scenario = Scenario::AutoStab;
        let traces = run_experiment(&spec).unwrap();
        let med: Vec<_> = traces.iter().filter(|t| t.algo == "medlq").collect();
        let stable = med.iter().filter(|t| !t.destabilized()).count();
        let frac = stable as f64 / med.len() as f64;
        let exhausted: usize = traces.iter().filter(|t| t.algo == "tsac").map(|t| t.trace.stats.ts_exhausted).sum();
        pass &= frac >= 0.9;
        details.push(format!(
            "{env}: medlq stable in {stable}/{} seeds, tsac exhausted epochs {exhausted}",
            med.len()
        ));
    }
    outcome(pass, details.join("; "))
}

fn study_spec() -> ExperimentSpec {
    let mut spec = ExperimentSpec::new("pendulum", &["medlq"], HORIZON);
    spec.n_seeds = SEEDS;
    spec
}

/// The study CSV without its wall-time column, the only non-deterministic field.
fn study_bytes(rows: &[StudyRow]) -> Vec<u8> {
    let masked: Vec<StudyRow> = rows
        .iter()
        .map(|r| StudyRow {
            wall_time_iqm: 0.0,
            ..r.clone()
        })
        .collect();
    csv_bytes(|p| write_study(&masked, p).unwrap())
}

// 9. Sample-size plateau.
fn sample_size(ctx: &mut Context) -> Outcome {
    let spec = study_spec();
    let (rows, _) = sample_size_study(&spec, &[16, 64, 256]).unwrap();
    ctx.study = Some((spec, study_bytes(&rows)));
    let get = |n| rows.iter().find(|r| r.n == n).unwrap();
    let (r64, r256) = (get(64).summary.iqm, get(256).summary.iqm);
    let plateau = r256 >= r64 - 0.1 * r64.abs();
    let timed = rows.iter().all(|r| r.wall_time_iqm > 0.0);
    outcome(
        plateau && timed,
        rows.iter()
            .map(|r| format!("n={}: IQM {} ({:.3} s/run)", r.n, sci(r.summary.iqm), r.wall_time_iqm))
            .collect::<Vec<_>>()
            .join(", "),
    )
}

// 10. Byte-identical re-runs.
fn determinism(ctx: &mut Context) -> Outcome {
    let mut checked = Vec::new();
    let mut pass = true;
    for (spec, raw, summary) in &ctx.scenario1 {
        let traces = run_experiment(spec).unwrap();
        let same = csv_bytes(|p| write_raw(&traces, p).unwrap()) == *raw
            && csv_bytes(|p| write_summary(&summarize(&traces), p).unwrap()) == *summary;
        pass &= same;
        checked.push(format!("scenario 1 {} {}", spec.env, if same { "identical" } else { "DIFFERS" }));
    }
    if let Some((spec, bytes)) = &ctx.study {
        let (rows, _) = sample_size_study(spec, &[16, 64, 256]).unwrap();
        let same = study_bytes(&rows) == *bytes;
        pass &= same;
        checked.push(format!("study {}", if same { "identical (wall time masked)" } else { "DIFFERS" }));
    }
    if let Some(bytes) = &ctx.landscape {
        let a = resolve_environment("pendulum").unwrap();
        let b = resolve_environment("pendulum_heavy").unwrap();
        let l = landscape_between(&a, &b, 201).unwrap();
        let same = csv_bytes(|p| {
            write_landscape(&l, p).unwrap();
        }) == *bytes;
        pass &= same;
        checked.push(format!("landscape {}", if same { "identical" } else { "DIFFERS" }));
    }
    outcome(pass && checked.len() == 4, checked.join(", "))
}

type Criterion = (&'static str, fn(&mut Context) -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        ("solver exactness", solver_exactness),
        ("log-likelihood rate", llr_validation),
        ("pendulum confusing instance", pendulum_root),
        ("Taylor approximation", taylor_validation),
        ("mask and weights", mask_and_weights),
        ("estimator coverage", estimator_coverage),
        ("scenario 1 regret", scenario1),
        ("scenario 2 stability", scenario2),
        ("sample-size study", sample_size),
        ("determinism", determinism),
    ];
    let mut ctx = Context::default();
    let mut failed = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = check(&mut ctx);
        println!(
            "{} criterion {:>2} ({name}): {} [{:.1} s]",
            if o.pass { "PASS" } else { "FAIL" },
            i + 1,
            o.detail,
            start.elapsed().as_secs_f64()
        );
        if !o.pass {
            failed.push(i + 1);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all 10 criteria pass");
    } else {
        println!("acceptance: {} of 10 criteria fail: {failed:?}", failed.len());
        if std::env::var_os("ACCEPTANCE_STRICT").is_some_and(|v| v == "1") {
            std::process::exit(1);
        }
    }
}

//! Acceptance suite: one line per criterion, non-zero exit if any fails.
//!
//! Thresholds are fixed here; nothing is calibrated from the runs.

use std::collections::BTreeMap;
use std::time::Instant;

use ailc::controller::IterationTrace;
use ailc::estimator::{estimate_state_vector, EstimatorMemory};
use ailc::harness::{builtin, builtin_scenarios, run_scenario, trace_csv, ControllerKind, ScenarioOutcome};
use ailc::plant::{Channel, FnRegressor, PlantSpec};
use ailc::solver::{solve_fixed_point, InputEquation, SolverConfig, StopReason};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

// ---------------------------------------------------------------------------
// 1. a-priori stopping count of the fixed-point solver

/// `Z(u) = a u + b u^3 + c sin u + d atan u + e x - r` with `a - |c| >= d0`
/// and `b, d >= 0`, so `Z' >= d0` everywhere.
#[derive(Clone, Copy)]
struct Instance {
    a: f64,
    b: f64,
    c: f64,
    d: f64,
    e: f64,
    x: f64,
    r: f64,
    d0: f64,
}

impl Instance {
    fn random(rng: &mut ChaCha8Rng) -> Self {
        let d0 = rng.random_range(0.2..1.0);
        let c: f64 = rng.random_range(-1.0..1.0);
        Self {
            a: d0 + c.abs() + rng.random_range(0.0..1.5),
            b: rng.random_range(0.0..1.0),
            c,
            d: rng.random_range(0.0..1.0),
            e: rng.random_range(-1.0..1.0),
            x: rng.random_range(-2.0..2.0),
            r: rng.random_range(-3.0..3.0),
            d0,
        }
    }

    fn z(&self, u: f64) -> f64 {
        self.a * u + self.b * u * u * u + self.c * u.sin() + self.d * u.atan() + self.e * self.x - self.r
    }

    /// Plain bisection on the monotone `Z`, to an interval width of 1e-12.
    fn oracle(&self) -> f64 {
        let span = self.z(0.0).abs() / self.d0 + 1.0;
        let (mut lo, mut hi) = (-span, span);
        assert!(self.z(lo) < 0.0 && self.z(hi) > 0.0);
        while hi - lo > 1e-12 {
            let mid = 0.5 * (lo + hi);
            if self.z(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

fn instance_regressor() -> FnRegressor {
    FnRegressor::new(5, |x, u| vec![u, u * u * u, u.sin(), u.atan(), x[0]])
        .with_du(|_, u| vec![1.0, 3.0 * u * u, u.cos(), 1.0 / (1.0 + u * u), 0.0])
}

fn criterion_1() -> Verdict {
    let start = Instant::now();
    let reg = instance_regressor();
    let mut rng = ChaCha8Rng::seed_from_u64(0x1e44a1);
    let mut worst = [0.0f64; 2];
    let mut failures = [0usize; 2];
    let mut caps = 0;
    let n = 500;
    for _ in 0..n {
        let inst = Instance::random(&mut rng);
        let star = inst.oracle();
        let theta = [inst.a, inst.b, inst.c, inst.d, inst.e];
        let window = [inst.x];
        for (i, eps) in [1e-3, 1e-6].into_iter().enumerate() {
            let mut eq = InputEquation::new(&reg, &theta, &window, inst.r);
            let cfg = SolverConfig {
                d0_lower: inst.d0,
                epsilon_tol: eps,
                max_iter_cap: 10_000_000,
                ..SolverConfig::default()
            };
            let res = solve_fixed_point(&mut eq, &cfg).expect("well-conditioned instance");
            caps += (res.stop_reason == StopReason::CapHit) as usize;
            let err = (res.u - star).abs();
            worst[i] = worst[i].max(err);
            failures[i] += (err >= eps) as usize;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        failures == [0, 0] && caps == 0 && secs < 10.0,
        format!(
            "{n} instances: misses {failures:?} for eps [1e-3, 1e-6], worst |u - u*| [{:.2e}, {:.2e}], cap hits {caps}, {secs:.2} s (limit 10 s)",
            worst[0], worst[1]
        ),
    )
}

// ---------------------------------------------------------------------------
// shared scenario runs

struct Runs {
    outcomes: BTreeMap<String, ScenarioOutcome>,
    robust_secs: f64,
}

fn robust_names() -> Vec<String> {
    (1..=6).map(|r| format!("example1-robust-d{r}")).collect()
}

fn run_all() -> Runs {
    let mut outcomes = BTreeMap::new();
    let mut robust_secs = 0.0;
    for entry in builtin_scenarios() {
        let start = Instant::now();
        let out = run_scenario(&entry.config).unwrap_or_else(|e| panic!("{}: {e}", entry.name));
        if entry.name.starts_with("example1-robust") {
            robust_secs += start.elapsed().as_secs_f64();
        }
        outcomes.insert(entry.name, out);
    }
    Runs { outcomes, robust_secs }
}

fn ailc_traces<'a>(runs: &'a Runs, name: &str) -> &'a [IterationTrace] {
    &runs.outcomes[name].ailc.as_ref().expect("AILC enabled").traces
}

// 2. Lyapunov-like function never increases on the robust runs
fn criterion_2(runs: &Runs) -> Verdict {
    let mut checked = 0usize;
    let mut violations = 0usize;
    let mut worst = f64::NEG_INFINITY;
    for name in robust_names() {
        let out = &runs.outcomes[&name];
        let run = out.ailc.as_ref().unwrap();
        let mut run = run.clone();
        let v0 = run.fill_lyapunov(&out.plant);
        let mut prev: Vec<f64> = v0[0].clone();
        for tr in &run.traces {
            for row in &tr.channels[0].rows {
                let v = row.v.expect("filled");
                let inc = v - prev[row.t];
                worst = worst.max(inc);
                violations += (inc > 1e-12) as usize;
                checked += 1;
                prev[row.t] = v;
            }
        }
    }
    verdict(
        violations == 0 && runs.robust_secs < 60.0,
        format!(
            "{checked} steps over 6 disturbances: {violations} with V_(k+1) > V_k + 1e-12 (largest change {worst:.2e}); runs took {:.1} s (limit 60 s)",
            runs.robust_secs
        ),
    )
}

// 3. estimates stay in their balls
fn criterion_3(runs: &Runs) -> Verdict {
    let mut worst = f64::NEG_INFINITY;
    let mut checked = 0usize;
    for (name, out) in &runs.outcomes {
        let Some(section) = &out.config.controller.ailc else { continue };
        for tr in ailc_traces(runs, name) {
            for (c, ct) in tr.channels.iter().enumerate() {
                let ball = &section.channels[c].ball;
                for row in &ct.rows {
                    let d = row.theta_hat.iter().zip(&ball.center).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                    worst = worst.max(d - ball.radius);
                    checked += 1;
                }
            }
        }
    }
    verdict(
        worst <= 1e-12,
        format!("{checked} updates across {} scenarios: max(|theta_hat - center| - R) = {worst:.2e} (limit 1e-12)", runs.outcomes.len()),
    )
}

// 4. disturbance-free tracking on the first benchmark
fn criterion_4(runs: &Runs) -> Verdict {
    let me: Vec<f64> = ailc_traces(runs, "example1-compare").iter().map(|t| t.max_err(0)).collect();
    let (k10, k200) = (me[9], me[199]);
    verdict(
        k200 < 0.01 * k10 && k200 < 1e-2,
        format!("max error k=10 {k10:.3e}, k=200 {k200:.3e}; need k=200 < 1% of k=10 ({:.3e}) and < 1e-2", 0.01 * k10),
    )
}

// 5. bounded error under every disturbance
fn criterion_5(runs: &Runs) -> Verdict {
    let mut parts = Vec::new();
    let mut pass = true;
    for name in robust_names() {
        let ae: Vec<f64> = ailc_traces(runs, &name).iter().map(|t| t.avg_err(0)).collect();
        let limsup = ae[149..200].iter().copied().fold(0.0, f64::max);
        pass &= limsup < 0.1;
        parts.push(format!("{} {limsup:.3e}", &name[name.len() - 2..]));
    }
    verdict(pass, format!("max avg error over k=150..200 (limit 0.1): {}", parts.join(", ")))
}

// 6. head-to-head with the data-driven baseline
fn criterion_6(runs: &Runs) -> Verdict {
    let out = &runs.outcomes["example1-compare"];
    let a = out.traces(ControllerKind::Ailc).unwrap();
    let d = out.traces(ControllerKind::Ddilc).unwrap();
    let avg = |t: &[IterationTrace], k: usize| t[k - 1].avg_err(0);
    let max = |t: &[IterationTrace], k: usize| t[k - 1].max_err(0);
    let ailc_learns = avg(a, 10) < avg(a, 1);
    let ddilc_learns = avg(d, 10) < avg(d, 1) && max(d, 10) < max(d, 1);
    let ailc_wins = avg(a, 200) < avg(d, 200);
    verdict(
        ailc_learns && ddilc_learns && ailc_wins,
        format!(
            "avg error k=1 -> k=10: AILC {:.3e} -> {:.3e}, DDILC {:.3e} -> {:.3e} (DDILC max {:.3e} -> {:.3e}); avg error k=200: AILC {:.3e} vs DDILC {:.3e}",
            avg(a, 1),
            avg(a, 10),
            avg(d, 1),
            avg(d, 10),
            max(d, 1),
            max(d, 10),
            avg(a, 200),
            avg(d, 200)
        ),
    )
}

// 7. the two-channel pendulum
fn criterion_7(runs: &Runs) -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    let nodist = ailc_traces(runs, "example2-nodist");
    for c in 0..2 {
        let (k20, k200) = (nodist[19].max_err(c), nodist[199].max_err(c));
        pass &= k200 < 0.1 * k20;
        parts.push(format!("no disturbance ch{c}: k=20 {k20:.3e}, k=200 {k200:.3e} (need < 10% of k=20)"));
    }
    let dist = ailc_traces(runs, "example2-dist");
    for c in 0..2 {
        let sup = dist.iter().map(|t| t.max_err(c)).fold(0.0, f64::max);
        let k100 = dist[99].max_err(c);
        pass &= sup.is_finite() && k100 < 1e-2;
        parts.push(format!("disturbed ch{c}: k=100 {k100:.3e} (need < 1e-2), sup over k {sup:.3e}"));
    }
    verdict(pass, parts.join("; "))
}

// 8. estimator with exact parameters reproduces the true states

fn random_plant(rng: &mut ChaCha8Rng, rho: usize, horizon: usize) -> PlantSpec {
    let w: Vec<f64> = (0..rho).map(|_| rng.random_range(-1.0..1.0)).collect();
    let v: Vec<f64> = (0..rho).map(|_| rng.random_range(-1.0..1.0)).collect();
    let theta: Vec<Vec<f64>> = (0..horizon).map(|_| (0..4).map(|_| rng.random_range(-0.8..0.8)).collect()).collect();
    let init: Vec<f64> = (0..rho).map(|_| rng.random_range(-0.5..0.5)).collect();
    let reg = FnRegressor::new(4, move |x, u| {
        let s: f64 = x.iter().zip(&w).map(|(a, b)| a * b).sum();
        let q: f64 = x.iter().zip(&v).map(|(a, b)| a * b).sum();
        vec![s.sin(), (q + u).cos(), u.tanh(), x[rho - 1] / (1.0 + x[0] * x[0])]
    });
    PlantSpec::siso("random", rho, horizon, Channel::new(reg, move |t| theta[t].clone()), move |_| init.clone())
        .expect("valid plant")
}

fn criterion_8() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(0xe57);
    let mut worst = 0.0f64;
    let mut compared = 0usize;
    let plants = 200;
    for i in 0..plants {
        let rho = 2 + i % 2;
        let horizon = 20;
        let spec = random_plant(&mut rng, rho, horizon);
        let mut state = spec.reset(1).unwrap();
        let inputs: Vec<f64> = (0..spec.steps()).map(|_| rng.random_range(-2.0..2.0)).collect();
        for (t, &u) in inputs.iter().enumerate() {
            state.step_scalar(&spec, t, u, 0.0).unwrap();
        }
        let x = state.states(0).to_vec();
        let theta: Vec<Vec<f64>> = (0..spec.steps()).map(|t| (spec.channels[0].theta)(t)).collect();
        for t in 0..spec.steps() {
            let known = t.max(rho - 1);
            let mem = EstimatorMemory {
                x_hist: vec![&x[..=known]],
                u_hist: vec![&inputs[..t]],
                theta_hist: vec![&theta],
            };
            let est = estimate_state_vector(&spec, &mem, t).unwrap();
            for (i, xe) in est.iter().enumerate() {
                let idx = t + rho - 1 - i;
                if idx > known {
                    worst = worst.max((xe - x[idx]).abs());
                    compared += 1;
                }
            }
        }
    }
    verdict(
        worst <= 1e-10 && compared > 0,
        format!("{plants} random plants (rho 2 and 3), {compared} unmeasured states: max |x_hat - x| = {worst:.2e} (limit 1e-10)"),
    )
}

// 9. the bound estimate never decreases
fn criterion_9(runs: &Runs) -> Verdict {
    let mut drops = 0usize;
    let mut checked = 0usize;
    for (name, out) in &runs.outcomes {
        let robust = matches!(out.config.controller.ailc.as_ref().map(|a| a.variant), Some(ailc::adaptation::AdaptVariant::Robust));
        if !robust {
            continue;
        }
        let traces = ailc_traces(runs, name);
        for c in 0..traces[0].channels.len() {
            let mut prev = vec![0.0f64; traces[0].channels[c].rows.len()];
            for tr in traces {
                for row in &tr.channels[c].rows {
                    let w = row.w_hat.expect("robust runs record w_hat");
                    drops += (w < prev[row.t]) as usize;
                    checked += 1;
                    prev[row.t] = w;
                }
            }
        }
    }
    verdict(drops == 0 && checked > 0, format!("{checked} robust updates, {drops} decreases of w_hat"))
}

// 10. identical seeds give identical bytes
fn criterion_10(runs: &Runs) -> Verdict {
    let mut files = 0usize;
    let mut differ = Vec::new();
    for (name, first) in &runs.outcomes {
        let again = run_scenario(&builtin(name).unwrap()).unwrap();
        for &kind in &first.config.controller.controllers {
            let (a, b) = (first.traces(kind).unwrap(), again.traces(kind).unwrap());
            for c in 0..a[0].channels.len() {
                files += 1;
                if trace_csv(a, c).as_bytes() != trace_csv(b, c).as_bytes() {
                    differ.push(format!("{name}/{}/ch{c}", kind.as_str()));
                }
            }
        }
    }
    verdict(differ.is_empty(), format!("{files} CSV outputs rerun with the same seed; differing: {differ:?}"))
}

fn main() {
    let titles = [
        "solver stopping count meets eps",
        "Lyapunov-like function non-increasing",
        "projection containment",
        "disturbance-free tracking, scalar plant",
        "bounded error under disturbances",
        "AILC vs DDILC",
        "two-channel pendulum",
        "estimator exactness",
        "monotone w_hat",
        "determinism",
    ];
    let mut results = vec![criterion_1()];
    let runs = run_all();
    results.push(criterion_2(&runs));
    results.push(criterion_3(&runs));
    results.push(criterion_4(&runs));
    results.push(criterion_5(&runs));
    results.push(criterion_6(&runs));
    results.push(criterion_7(&runs));
    results.push(criterion_8());
    results.push(criterion_9(&runs));
    results.push(criterion_10(&runs));

    let mut failed = 0;
    for (i, (title, v)) in titles.iter().zip(&results).enumerate() {
        let tag = if v.pass { "PASS" } else { "FAIL" };
        println!("criterion {:>2} {tag}  {title}: {}", i + 1, v.detail);
        failed += (!v.pass) as usize;
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

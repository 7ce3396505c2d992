//! Acceptance criteria, one PASS/FAIL line each. Runs as a plain binary
//! (`harness = false`) so the lines always reach stdout.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use maxarm::envs::{ArmGenerator, CostSpec, SyntheticArmSpec, SyntheticSpec};
use maxarm::harness::{run_episode, sign_test, EnvironmentSource, EpisodeLabel, Experiment, DEFAULT_CHECKPOINTS};
use maxarm::policies::PolicySpec;
use maxarm::posterior::{abc_ppd, exact_ppd, max_transform_sample, nig_update, GridAtom, GridPrior, NormalInverseGamma, StepSupport};
use maxarm::priors::{generate_trajectory, PriorConfig};
use maxarm::seeding::{derive_rng, derive_seed, rng_from_seed};
use maxarm::types::{ArmObservations, Budget};
use rand::Rng;

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

fn ks_against_power(mut xs: Vec<f64>, t: f64) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = x.powf(t);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

fn c1_max_cdf() -> Outcome {
    let mut worst = 0.0f64;
    let mut parts = Vec::new();
    for (i, t) in [1.0, 3.0, 5.0, 20.0].into_iter().enumerate() {
        let mut rng = rng_from_seed(100 + i as u64);
        let xs: Vec<f64> = (0..1_000_000).map(|_| max_transform_sample(|u| u, t, &mut rng)).collect();
        let d = ks_against_power(xs, t);
        worst = worst.max(d);
        parts.push(format!("t={t}: {d:.5}"));
    }
    outcome(worst < 0.005, format!("KS {} (< 0.005)", parts.join(", ")))
}

/// Posterior hyperparameters from raw sums, without the running mean.
fn nig_from_sums(mu0: f64, l0: f64, a0: f64, b0: f64, ys: &[f64]) -> [f64; 4] {
    let n = ys.len() as f64;
    let s1: f64 = ys.iter().sum();
    let s2: f64 = ys.iter().map(|y| y * y).sum();
    let ln = l0 + n;
    let mun = (l0 * mu0 + s1) / ln;
    let an = a0 + n / 2.0;
    let bn = b0 + 0.5 * (s2 + l0 * mu0 * mu0 - ln * mun * mun);
    [mun, ln, an, bn]
}

fn c2_nig() -> Outcome {
    let mut rng = rng_from_seed(2);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let (mu0, l0, a0, b0) = (
            rng.random_range(-1.0..2.0),
            rng.random_range(0.1..5.0),
            rng.random_range(0.5..4.0),
            rng.random_range(0.1..2.0),
        );
        let n = rng.random_range(1..60);
        let ys: Vec<f64> = (0..n).map(|_| rng.random_range(-0.5..1.5)).collect();
        let mut state = NormalInverseGamma::new(mu0, l0, a0, b0);
        for &y in &ys {
            state = nig_update(&state, y);
        }
        let p = state.posterior();
        let want = nig_from_sums(mu0, l0, a0, b0, &ys);
        for (got, want) in [p.mu, p.lambda, p.alpha, p.beta].into_iter().zip(want) {
            worst = worst.max(((got - want) / want).abs());
        }
    }
    outcome(worst < 1e-12, format!("max relative error {worst:.2e} over 20 datasets (< 1e-12)"))
}

fn support(points: &[(f64, f64)]) -> StepSupport {
    StepSupport::new(points.to_vec()).unwrap()
}

struct MiniCase {
    name: &'static str,
    prior: GridPrior,
    context: Vec<f64>,
    target: usize,
}

fn mini_cases() -> Vec<MiniCase> {
    let two = support(&[(0.2, 0.5), (0.8, 0.5)]);
    let mut cases = vec![MiniCase {
        name: "single iid atom",
        prior: GridPrior::new(vec![GridAtom::iid(1.0, two.clone(), 4)]).unwrap(),
        context: vec![],
        target: 3,
    }];
    cases.push(MiniCase {
        name: "two iid atoms",
        prior: GridPrior::new(vec![
            GridAtom::iid(0.5, support(&[(0.3, 0.7), (0.6, 0.3)]), 6),
            GridAtom::iid(0.5, support(&[(0.1, 0.4), (0.3, 0.2), (0.9, 0.4)]), 6),
        ])
        .unwrap(),
        context: vec![0.3],
        target: 5,
    });
    // supports drift upward with the step index
    let drifting = |shift: f64, w: f64| GridAtom {
        weight: w,
        steps: (0..8)
            .map(|k| {
                let lo = 0.1 + shift;
                let hi = (0.4 + shift + 0.05 * k as f64).min(0.95);
                support(&[(lo, 0.6), (hi, 0.4)])
            })
            .collect(),
    };
    cases.push(MiniCase {
        name: "three drifting atoms",
        prior: GridPrior::new(vec![drifting(0.0, 1.0), drifting(0.1, 2.0), drifting(0.2, 1.0)]).unwrap(),
        context: vec![0.2, 0.55],
        target: 6,
    });
    cases.push(MiniCase {
        name: "five three-point atoms",
        prior: GridPrior::new(
            (0..5)
                .map(|i| {
                    let p = 0.1 + 0.15 * i as f64;
                    GridAtom::iid(1.0 + i as f64, support(&[(0.2, 0.5 - p / 2.0), (0.5, 0.5 - p / 2.0), (0.8, p)]), 5)
                })
                .collect(),
        )
        .unwrap(),
        context: vec![0.2, 0.5],
        target: 5,
    });
    let mut rng = rng_from_seed(33);
    cases.push(MiniCase {
        name: "fifty random atoms",
        prior: GridPrior::new(
            (0..50)
                .map(|_| {
                    let a = rng.random_range(0.05..0.6);
                    let b = rng.random_range(0.05..0.6);
                    let w = [a, b, 1.0];
                    let s: f64 = w.iter().sum();
                    GridAtom::iid(
                        rng.random_range(0.1..1.0),
                        support(&[(0.1, w[0] / s), (0.4, w[1] / s), (0.7, w[2] / s)]),
                        6,
                    )
                })
                .collect(),
        )
        .unwrap(),
        context: vec![0.4],
        target: 4,
    });
    cases.push(MiniCase {
        name: "context at target",
        prior: GridPrior::new(vec![GridAtom::iid(1.0, two, 3)]).unwrap(),
        context: vec![0.2, 0.8],
        target: 3,
    });
    cases
}

/// Enumerates every outcome sequence up to the target step and conditions
/// on the observed running-max prefix. Returns masses on `bins` bins.
fn brute_force_ppd(prior: &GridPrior, context: &[f64], t: usize, bins: usize) -> Vec<f64> {
    let mut mass = vec![0.0; bins];
    let mut total = 0.0;
    for atom in prior.atoms() {
        let mut stack: Vec<(usize, f64, f64, bool)> = vec![(0, atom.weight, f64::NEG_INFINITY, true)];
        while let Some((k, p, running, ok)) = stack.pop() {
            if !ok || p == 0.0 {
                continue;
            }
            if k == t {
                let bin = ((running * bins as f64).floor() as usize).min(bins - 1);
                mass[bin] += p;
                total += p;
                continue;
            }
            for &(v, q) in atom.steps[k].points() {
                let m = running.max(v);
                let consistent = context.get(k).is_none_or(|c| (c - m).abs() < 1e-12);
                stack.push((k + 1, p * q, m, consistent));
            }
        }
    }
    mass.iter().map(|m| m / total).collect()
}

fn c3_ppd() -> Outcome {
    let bins = 1000;
    let mut worst_tv = 0.0f64;
    let mut worst_exact = 0.0f64;
    let cases = mini_cases();
    for (i, case) in cases.iter().enumerate() {
        let ctx = ArmObservations::from_rewards("x", &case.context).unwrap();
        let exact = exact_ppd(&case.prior, &ctx, case.target, bins).unwrap();
        let brute = brute_force_ppd(&case.prior, &ctx.running_max, case.target, bins);
        let diff = exact.masses().iter().zip(&brute).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        worst_exact = worst_exact.max(diff);
        let mut rng = rng_from_seed(300 + i as u64);
        let abc = abc_ppd(&case.prior, &ctx, case.target, 100_000, 0.02, bins, &mut rng).unwrap();
        let tv = abc.distribution.total_variation(&exact).unwrap();
        if tv > 0.05 {
            eprintln!("  {}: TV {tv:.4}", case.name);
        }
        worst_tv = worst_tv.max(tv);
    }
    outcome(
        worst_tv <= 0.05 && worst_exact < 1e-12,
        format!(
            "{} priors: max TV(abc, exact) {worst_tv:.4} (<= 0.05), max |exact - enumeration| {worst_exact:.1e}",
            cases.len()
        ),
    )
}

fn c4_sign_test() -> Outcome {
    let cases = [
        ((27, 0, 3), 0.00000, 5e-6),
        ((20, 4, 6), 0.00806, 1e-5),
        ((24, 3, 3), 0.00003, 1e-5),
        ((18, 4, 8), 0.04937, 1e-5),
        ((13, 3, 14), 0.57223, 1e-5),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for ((w, t, l), want, tol) in cases {
        let p = sign_test(w, t, l).p_value;
        pass &= (p - want).abs() <= tol;
        parts.push(format!("({w},{t},{l})={p:.5}"));
    }
    outcome(pass, parts.join(" "))
}

fn mean_suboptimal_pulls(horizon: usize, seeds: u64) -> f64 {
    let spec = SyntheticSpec::iid([(0.8, 0.05, 0.0), (0.5, 0.05, 0.0)]);
    let policy = PolicySpec::parse("ps-max").unwrap();
    let ids = spec.arm_ids();
    let mut total = 0usize;
    for seed in 0..seeds {
        let mut env = spec.build(derive_seed(5, &["env".into(), seed.into()])).unwrap();
        let mut p = policy.build(&ids, Budget::Steps(horizon)).unwrap();
        let mut rng = derive_rng(5, &["policy".into(), seed.into()]);
        let label = EpisodeLabel {
            task_id: "two-arm".into(),
            seed,
            repetition: None,
        };
        let rec = run_episode(p.as_mut(), &mut env, Budget::Steps(horizon), &[1.0], label, &mut rng).unwrap();
        total += rec.pulls_per_arm(2)[1];
    }
    total as f64 / seeds as f64
}

fn c5_log_growth() -> Outcome {
    let short = mean_suboptimal_pulls(31, 200);
    let long = mean_suboptimal_pulls(1000, 200);
    let ratio = long / short;
    outcome(
        ratio <= 4.5,
        format!("sub-optimal pulls T=31: {short:.3}, T=1000: {long:.3}, ratio {ratio:.3} (<= 3 x 1.5)"),
    )
}

fn synthetic_experiment(specs: BTreeMap<String, SyntheticSpec>, policies: &[&str], budget: Budget, seeds: u64) -> Experiment {
    let tasks = specs.keys().cloned().collect();
    let e = Experiment {
        source: EnvironmentSource::Synthetic(specs),
        tasks,
        policies: policies.iter().map(|p| PolicySpec::parse(p).unwrap()).collect(),
        budget,
        checkpoints: vec![1.0],
        seeds,
        root_seed: 6,
        oracle_samples: 4000,
    };
    e.validate().unwrap();
    e
}

fn c6_ps_max_vs_ts() -> Outcome {
    let e = synthetic_experiment(
        BTreeMap::from([("seven-arm".to_string(), SyntheticSpec::seven_arm(-50.0))]),
        &["ps-max", "ts"],
        Budget::Steps(200),
        200,
    );
    let oracle = e.task_info("seven-arm").unwrap().oracle_value;
    let mut regret = [0.0; 2];
    for (cell, rec) in e.run_sequential() {
        regret[cell.policy] += (oracle - rec.unwrap().final_incumbent) / 200.0;
    }
    outcome(
        regret[0] <= regret[1],
        format!("mean regret PS-Max {:.5} vs TS {:.5} (PS-Max <= TS)", regret[0], regret[1]),
    )
}

fn c7_cost_aware_pulls() -> Outcome {
    let arm = |id: &str, cost: f64| SyntheticArmSpec {
        id: id.into(),
        generator: ArmGenerator::Prior(PriorConfig::semi_flat()),
        cost: CostSpec::Fixed { value: cost },
    };
    let spec = SyntheticSpec {
        arms: vec![arm("cheap", 1.0), arm("costly", 5.0)],
    };
    let e = synthetic_experiment(
        BTreeMap::from([("costs".to_string(), spec)]),
        &["ps-ppd", "ps-ppd-ca"],
        Budget::Seconds(300.0),
        100,
    );
    let mut pulls = [0usize; 2];
    for (cell, rec) in e.run_sequential() {
        pulls[cell.policy] += rec.unwrap().total_pulls();
    }
    let gain = 100.0 * (pulls[1] as f64 - pulls[0] as f64) / pulls[0] as f64;
    outcome(
        pulls[1] > pulls[0],
        format!("total pulls PS-PPD {} vs PS-PPD-ca {} (gain {gain:.2}%, > 0)", pulls[0], pulls[1]),
    )
}

fn c8_prior_shapes() -> Outcome {
    let mut means = Vec::new();
    for (i, cfg) in [PriorConfig::flat(), PriorConfig::semi_flat(), PriorConfig::curved()].iter().enumerate() {
        let mut rng = rng_from_seed(800 + i as u64);
        let n = 10_000;
        let total: f64 = (0..n)
            .map(|_| {
                let r = generate_trajectory(cfg, &mut rng).unwrap().rewards;
                r[199] - r[0]
            })
            .sum();
        means.push(total / n as f64);
    }
    outcome(
        means[0] < means[1] && means[1] < means[2] && means[0] < 0.01,
        format!(
            "mean(r200 - r1): flat {:.5}, semi-flat {:.5}, curved {:.5}",
            means[0], means[1], means[2]
        ),
    )
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn run_and_report(out: &Path, extra: &[&str]) -> Result<(), String> {
    let config = fixture("experiment.toml");
    let code = maxarm::cli::main_with_args(
        ["maxarm", "run", config.to_str().unwrap(), "--out", out.to_str().unwrap()]
            .into_iter()
            .map(String::from),
    );
    if code != 0 {
        return Err(format!("run exited {code}"));
    }
    let mut args: Vec<String> = ["maxarm", "report", out.to_str().unwrap(), "--emit-plot-data"]
        .into_iter()
        .map(String::from)
        .collect();
    args.extend(extra.iter().map(|s| s.to_string()));
    match maxarm::cli::main_with_args(args) {
        0 => Ok(()),
        code => Err(format!("report exited {code}")),
    }
}

fn read_dir_sorted(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect()
}

fn c9_determinism() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    if let Err(e) = run_and_report(&a, &[]).and_then(|_| run_and_report(&b, &[])) {
        return outcome(false, e);
    }
    let (fa, fb) = (read_dir_sorted(&a), read_dir_sorted(&b));
    let differing: Vec<&String> = fa.keys().filter(|k| fa.get(*k) != fb.get(*k)).collect();
    outcome(
        differing.is_empty() && fa.len() == fb.len() && fa.len() >= 9,
        format!("{} files compared, differing: {differing:?}", fa.len()),
    )
}

fn c10_full_protocol() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    if let Err(e) = run_and_report(&out, &["--baseline", "ps-ppd"]) {
        return outcome(false, e);
    }
    let read = |f: &str| std::fs::read_to_string(out.join(f)).unwrap_or_default();
    let summary = read("summary.csv");
    let signs = read("signtests.csv");
    let (tasks, policies, seeds, checkpoints) = (3, 10, 4, DEFAULT_CHECKPOINTS.len());
    let summary_rows = summary.lines().count().saturating_sub(2);
    let sign_rows = signs.lines().count().saturating_sub(2);
    let gain_rows = read("pullgain.csv").lines().count().saturating_sub(1);
    let ok = summary.starts_with("# status=complete")
        && summary_rows == tasks * policies * seeds * checkpoints
        && sign_rows == (policies - 1) * checkpoints
        && gain_rows == 2
        && !read("ranks.csv").is_empty()
        && !read("plot_regret.csv").is_empty();
    outcome(
        ok,
        format!("3 tasks x 3 arms: {summary_rows} summary rows, {sign_rows} sign tests vs ps-ppd, {gain_rows} pull-gain rows"),
    )
}

fn main() {
    let criteria: [(&str, Duration, fn() -> Outcome); 10] = [
        ("max-CDF identity", Duration::from_secs(10), c1_max_cdf),
        ("conjugate NIG update", Duration::from_secs(1), c2_nig),
        ("PPD equivalence", Duration::from_secs(120), c3_ppd),
        ("sign-test values", Duration::from_secs(1), c4_sign_test),
        ("logarithmic sub-optimal pulls", Duration::from_secs(60), c5_log_growth),
        ("PS-Max vs TS on skewed arms", Duration::from_secs(120), c6_ps_max_vs_ts),
        ("cost-aware pull gain", Duration::from_secs(120), c7_cost_aware_pulls),
        ("prior-shape ordering", Duration::from_secs(30), c8_prior_shapes),
        ("end-to-end determinism", Duration::from_secs(60), c9_determinism),
        ("full protocol on fixture", Duration::from_secs(60), c10_full_protocol),
    ];
    let mut failed = 0;
    for (i, (name, limit, check)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let o = check();
        let elapsed = start.elapsed();
        let pass = o.pass && elapsed <= limit;
        failed += usize::from(!pass);
        println!(
            "{} [{:>2}] {name}: {} ({:.2}s, limit {}s)",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            o.detail,
            elapsed.as_secs_f64(),
            limit.as_secs()
        );
    }
    println!("acceptance: {} passed, {failed} failed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

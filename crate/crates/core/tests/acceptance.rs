//! Acceptance suite: one PASS/FAIL line per criterion. Runs without the
//! libtest harness and exits non-zero if any criterion fails.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};

use dirmix::counts::MultiplicityTable;
use dirmix::estimators::{estimate_dkl_zhang, Divergence, Estimator, PluginScheme};
use dirmix::experiment::{
    nstar_by_estimator, run_convergence, summarize, ExperimentConfig, GeneratorKind, Normalization, CONVERGENCE_TOL,
    DEFAULT_LADDER,
};
use dirmix::hyperprior::kl_log_divergence_histogram;
use dirmix::posterior::{
    posterior_dkl, posterior_dkl_squared, posterior_hellinger_sq, prior_mean_crossentropy, prior_mean_entropy,
    HyperParams,
};
use dirmix::specfun::delta_psi;
use dirmix::synth;

struct Outcome {
    pass: bool,
    detail: String,
}

fn report(id: u32, title: &str, budget: Option<Duration>, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let out = f();
    let elapsed = start.elapsed();
    let in_budget = budget.is_none_or(|b| elapsed <= b);
    let pass = out.pass && in_budget;
    let budget_note = match budget {
        Some(b) if !in_budget => format!(", over the {:.0} s budget", b.as_secs_f64()),
        _ => String::new(),
    };
    println!(
        "criterion {id:>2} [{}] {title}: {} ({:.2} s{budget_note})",
        if pass { "PASS" } else { "FAIL" },
        out.detail,
        elapsed.as_secs_f64()
    );
    pass
}

fn table(n: &[u64], m: &[u64]) -> MultiplicityTable {
    MultiplicityTable::from_counts(n, m, n.len() as u64).unwrap()
}

/// Zhang-Grabchak double series, summed term by term.
fn zhang_series(n: &[u64], m: &[u64]) -> f64 {
    let nn: u64 = n.iter().sum();
    let mm: u64 = m.iter().sum();
    let mut total = 0.0;
    for (&ni, &mi) in n.iter().zip(m) {
        if ni == 0 {
            continue;
        }
        let (mut cross, mut prod) = (0.0, 1.0);
        for v in 1..=(mm - mi) {
            prod *= 1.0 - mi as f64 / (mm - v + 1) as f64;
            cross += prod / v as f64;
        }
        let (mut ent, mut prod) = (0.0, 1.0);
        for v in 1..=(nn - ni) {
            prod *= 1.0 - (ni as f64 - 1.0) / (nn - v) as f64;
            ent += prod / v as f64;
        }
        total += ni as f64 / nn as f64 * (cross - ent);
    }
    total
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst = 0.0f64;
    let mut count = 0;
    while count < 100 {
        let k = rng.gen_range(2..=10);
        let n: Vec<u64> = (0..k).map(|_| rng.gen_range(0..=15)).collect();
        let m: Vec<u64> = (0..k).map(|_| rng.gen_range(0..=15)).collect();
        if n.iter().sum::<u64>() == 0 {
            continue;
        }
        let z = estimate_dkl_zhang(&table(&n, &m)).unwrap();
        worst = worst.max((z - zhang_series(&n, &m)).abs());
        count += 1;
    }
    Outcome {
        pass: worst <= 1e-10,
        detail: format!("max |closed − series| = {worst:.2e} over 100 instances (tol 1e-10)"),
    }
}

fn criterion_2() -> Outcome {
    // full first-sample support, where the shift is (K−1)/N
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let k = rng.gen_range(2..=10usize);
        let n: Vec<u64> = (0..k).map(|_| rng.gen_range(1..=15)).collect();
        let m: Vec<u64> = (0..k).map(|_| rng.gen_range(0..=15)).collect();
        let t = table(&n, &m);
        let (nf, mf, kf) = (t.n_total() as f64, t.m_total() as f64, k as f64);
        let dp = posterior_dkl(&t, HyperParams::new(1e-8, 1.0, k as u64).unwrap()).unwrap();
        let shift = delta_psi(mf + kf, mf + 1.0).unwrap() + (kf - 1.0) / nf;
        worst = worst.max((dp - shift - estimate_dkl_zhang(&t).unwrap()).abs());
    }
    Outcome {
        pass: worst <= 1e-6,
        detail: format!("max deviation = {worst:.2e} over 50 instances (tol 1e-6)"),
    }
}

fn dirichlet_draw(params: &[f64], rng: &mut ChaCha8Rng) -> Vec<f64> {
    let g: Vec<f64> = params
        .iter()
        .map(|&a| Gamma::new(a, 1.0).unwrap().sample(rng))
        .collect();
    let s: f64 = g.iter().sum();
    g.into_iter().map(|x| x / s).collect()
}

/// Running mean and standard error.
#[derive(Default)]
struct Acc {
    n: f64,
    sum: f64,
    sum_sq: f64,
}

impl Acc {
    fn add(&mut self, x: f64) {
        self.n += 1.0;
        self.sum += x;
        self.sum_sq += x * x;
    }
    fn mean(&self) -> f64 {
        self.sum / self.n
    }
    fn se(&self) -> f64 {
        let var = (self.sum_sq / self.n - self.mean().powi(2)) * self.n / (self.n - 1.0);
        (var.max(0.0) / self.n).sqrt()
    }
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let draws = 100_000;
    let mut worst_z = 0.0f64;
    for _ in 0..20 {
        let k = rng.gen_range(2..=8usize);
        let n: Vec<u64> = (0..k).map(|_| rng.gen_range(0..=6)).collect();
        let m: Vec<u64> = (0..k).map(|_| rng.gen_range(0..=6)).collect();
        let alpha = 10f64.powf(rng.gen_range(-0.5..1.0));
        let beta = 10f64.powf(rng.gen_range(-0.5..1.0));
        let t = table(&n, &m);
        let hp = HyperParams::new(alpha, beta, k as u64).unwrap();
        let pn: Vec<f64> = n.iter().map(|&x| x as f64 + alpha).collect();
        let pm: Vec<f64> = m.iter().map(|&x| x as f64 + beta).collect();
        let (mut d, mut d2, mut h) = (Acc::default(), Acc::default(), Acc::default());
        for _ in 0..draws {
            let q = dirichlet_draw(&pn, &mut rng);
            let s = dirichlet_draw(&pm, &mut rng);
            let kl: f64 = q.iter().zip(&s).map(|(a, b)| a * (a / b).ln()).sum();
            let bc: f64 = q.iter().zip(&s).map(|(a, b)| (a * b).sqrt()).sum();
            d.add(kl);
            d2.add(kl * kl);
            h.add(1.0 - bc);
        }
        let checks = [
            (posterior_dkl(&t, hp).unwrap(), &d),
            (posterior_dkl_squared(&t, hp).unwrap(), &d2),
            (posterior_hellinger_sq(&t, hp).unwrap(), &h),
        ];
        for (exact, acc) in checks {
            worst_z = worst_z.max((exact - acc.mean()).abs() / acc.se());
        }
    }
    Outcome {
        pass: worst_z <= 3.0,
        detail: format!("largest deviation {worst_z:.2} standard errors over 20 instances × 3 moments (tol 3)"),
    }
}

fn criterion_4() -> Outcome {
    let mut violations = 0;
    let mut closest = f64::INFINITY;
    for k in [400u64, 8000] {
        let ln_k = (k as f64).ln();
        for i in 0..100 {
            let x = 10f64.powf(-4.0 + 8.0 * i as f64 / 99.0);
            let a = prior_mean_entropy(x, k).unwrap();
            let b = prior_mean_crossentropy(x, k).unwrap();
            if !(a < ln_k && ln_k < b) {
                violations += 1;
            }
            closest = closest.min(ln_k - a).min(b - ln_k);
        }
    }
    Outcome {
        pass: violations == 0,
        detail: format!("{violations} violations of A(α) < ln K < B(β); smallest gap {closest:.2e}"),
    }
}

fn criterion_5() -> Outcome {
    let lo = (1e-6f64).ln();
    let (edges, density) = kl_log_divergence_histogram(400, (lo, -lo), 800, 40).unwrap();
    let (a, b) = (edges[0], edges[edges.len() - 1]);
    let (c_lo, c_hi) = (a + 0.1 * (b - a), b - 0.1 * (b - a));
    let central: Vec<f64> = density
        .iter()
        .enumerate()
        .filter(|(i, _)| edges[*i] >= c_lo && edges[*i + 1] <= c_hi)
        .map(|(_, &d)| d)
        .collect();
    let mean = central.iter().sum::<f64>() / central.len() as f64;
    let worst = central.iter().map(|d| (d / mean - 1.0).abs()).fold(0.0, f64::max);
    Outcome {
        pass: worst <= 0.25 && !central.is_empty(),
        detail: format!(
            "ln z density over [{c_lo:.1}, {c_hi:.1}] ({} bins) deviates at most {:.1}% from its mean (tol 25%)",
            central.len(),
            100.0 * worst
        ),
    }
}

fn dirichlet_config(divergence: Divergence, estimators: Vec<Estimator>) -> ExperimentConfig {
    ExperimentConfig {
        k: 400,
        alpha_true: 1.0,
        beta_true: 1.0,
        size_ladder: DEFAULT_LADDER.to_vec(),
        repetitions: 10,
        estimators,
        divergence,
        master_seed: 1,
        ..Default::default()
    }
}

fn fmt_nstar(v: Option<u64>) -> String {
    v.map_or("∞".into(), |n| n.to_string())
}

fn criterion_6() -> Outcome {
    let cfg = dirichlet_config(Divergence::Kl, Estimator::ALL.to_vec());
    let rows = run_convergence(&cfg).unwrap();
    let points = summarize(&rows, Normalization::PlainMean);
    let ns = nstar_by_estimator(&points, CONVERGENCE_TOL);
    let get = |e: Estimator| ns.iter().find(|x| x.0 == e).unwrap().1;
    let dpm = get(Estimator::Dpm);
    let rivals = [
        Estimator::Plugin(PluginScheme::Naive),
        Estimator::Plugin(PluginScheme::Jeffreys),
        Estimator::Plugin(PluginScheme::Trybula),
        Estimator::Plugin(PluginScheme::Perks),
        Estimator::Zhang,
    ];
    let beats = dpm.is_some() && rivals.iter().all(|&e| get(e).is_none_or(|n| dpm.unwrap() <= n));
    let dp_last = points
        .iter()
        .find(|p| p.estimator == Estimator::Dp && p.n == 40_000)
        .unwrap()
        .relative_error;
    let listing: Vec<String> = ns.iter().map(|(e, n)| format!("{e}={}", fmt_nstar(*n))).collect();
    Outcome {
        pass: beats && dp_last < CONVERGENCE_TOL,
        detail: format!(
            "N*: {}; DP error at N=4e4 {:.2}% (tol 5%)",
            listing.join(" "),
            100.0 * dp_last
        ),
    }
}

fn criterion_7() -> Outcome {
    let cfg = ExperimentConfig {
        generator: GeneratorKind::Markov,
        states: 20,
        gram_length: 2,
        size_ladder: vec![100, 400, 1_000, 4_000, 10_000, 40_000],
        repetitions: 10,
        estimators: vec![Estimator::Dpm],
        divergence: Divergence::Kl,
        master_seed: 7,
        ..Default::default()
    };
    let rows = run_convergence(&cfg).unwrap();
    let points = summarize(&rows, Normalization::PerRepetition);
    let last = points.last().unwrap();
    let curve_ok = (last.mean_normalized - 1.0).abs() <= 0.05;

    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut worst = 0.0f64;
    for l in 1..=3 {
        let a = synth::build_markov_spec(4, l, &mut rng).unwrap();
        let b = synth::build_markov_spec(4, l, &mut rng).unwrap();
        let (qa, qb) = (a.lgram_probabilities().unwrap(), b.lgram_probabilities().unwrap());
        worst = worst.max((synth::markov_entropy(&a) - synth::exact_entropy(&qa)).abs());
        worst = worst
            .max((synth::markov_crossentropy(&a, &b).unwrap() - synth::exact_crossentropy(&qa, &qb).unwrap()).abs());
    }
    Outcome {
        pass: curve_ok && worst <= 1e-12,
        detail: format!(
            "DPM normalized mean at N=4e4 = {:.4} (tol ±0.05); S=4 enumeration max error {worst:.1e} (tol 1e-12)",
            last.mean_normalized
        ),
    }
}

fn criterion_8() -> Outcome {
    let plugins: Vec<Estimator> = PluginScheme::ALL.iter().map(|&s| Estimator::Plugin(s)).collect();
    let mut ests = vec![Estimator::Dpm];
    ests.extend(&plugins);
    let cfg = dirichlet_config(Divergence::HellingerSq, ests);
    let rows = run_convergence(&cfg).unwrap();
    let ns = nstar_by_estimator(&summarize(&rows, Normalization::PlainMean), CONVERGENCE_TOL);
    let get = |e: Estimator| ns.iter().find(|x| x.0 == e).unwrap().1;
    let dpm = get(Estimator::Dpm);
    let beats = dpm.is_some() && plugins.iter().all(|&e| get(e).is_none_or(|n| dpm.unwrap() <= n));
    let listing: Vec<String> = ns.iter().map(|(e, n)| format!("{e}={}", fmt_nstar(*n))).collect();
    Outcome {
        pass: beats,
        detail: format!("Hellinger N*: {}", listing.join(" ")),
    }
}

fn criterion_9() -> Outcome {
    // one fixed chain pair, so the spread is sampling noise only
    let cfg = ExperimentConfig {
        generator: GeneratorKind::Markov,
        states: 20,
        gram_length: 2,
        chain_seed_q: Some(11),
        chain_seed_t: Some(12),
        size_ladder: vec![4_000],
        repetitions: 30,
        estimators: vec![Estimator::Dpm],
        divergence: Divergence::Kl,
        master_seed: 9,
        ..Default::default()
    };
    let rows = run_convergence(&cfg).unwrap();
    let mut est = Acc::default();
    let mut std_sum = 0.0;
    for r in &rows {
        est.add(r.estimate);
        std_sum += r.posterior_std.unwrap();
    }
    let spread = est.se() * est.n.sqrt();
    let mean_std = std_sum / rows.len() as f64;
    let ratio = mean_std / spread;
    Outcome {
        pass: (0.5..=2.0).contains(&ratio),
        detail: format!(
            "mean posterior_std {mean_std:.4} vs across-repetition std {spread:.4}, ratio {ratio:.2} (tol ×2)"
        ),
    }
}

fn criterion_10() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let run = |threads: &str, name: &str| -> Vec<u8> {
        let out = dir.path().join(name);
        let args = [
            "dirmix",
            "convergence",
            "--k",
            "400",
            "--ladder",
            "25,100,400,2000",
            "--reps",
            "4",
            "--seed",
            "12345",
            "--threads",
            threads,
            "--out",
            out.to_str().unwrap(),
        ];
        let code = dirmix::cli::run(args, &mut std::io::sink(), &mut std::io::stderr());
        assert_eq!(code, 0);
        std::fs::read(out).unwrap()
    };
    let a = run("1", "a.csv");
    let b = run("1", "b.csv");
    let c = run("4", "c.csv");
    let d = run("3", "d.csv");
    let same = a == b && a == c && a == d && !a.is_empty();
    Outcome {
        pass: same,
        detail: format!(
            "{} bytes; identical across 2 runs and thread counts 1/3/4: {same}",
            a.len()
        ),
    }
}

fn main() {
    let secs = Duration::from_secs;
    let results = [
        report(1, "Z-estimator closed form equals series", Some(secs(1)), criterion_1),
        report(2, "DP to Z limit", Some(secs(1)), criterion_2),
        report(3, "posterior moments match Monte Carlo", Some(secs(30)), criterion_3),
        report(4, "prior-mean inequalities", Some(secs(1)), criterion_4),
        report(5, "KL hyper-prior flat in ln z", Some(secs(10)), criterion_5),
        report(6, "Dirichlet KL convergence (K=400)", Some(secs(600)), criterion_6),
        report(
            7,
            "Markov KL convergence and chain formulas",
            Some(secs(600)),
            criterion_7,
        ),
        report(
            8,
            "Dirichlet Hellinger convergence (K=400)",
            Some(secs(600)),
            criterion_8,
        ),
        report(9, "posterior std calibration", None, criterion_9),
        report(10, "convergence CSV determinism", None, criterion_10),
    ];
    let passed = results.iter().filter(|&&p| p).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if passed != results.len() {
        std::process::exit(1);
    }
}

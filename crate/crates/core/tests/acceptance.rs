//! Acceptance suite: one line per criterion, exit status 1 if any fails.
//!
//! Run alone with `cargo test -p dwt-core --test acceptance`.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use dwt_core::analytics::{covering_walk, moment_g, PsiWindow};
use dwt_core::branching::{coupled_run, simulate_branching_with, BranchingOptions, CoupledOptions};
use dwt_core::harness::{
    chi_square_homogeneity, emit, histogram, map_samples, resolve_threads, run_experiment, ExperimentConfig,
    ExperimentKind, ParamGrid, ResultManifest, Statistic,
};
use dwt_core::rng::{stream, SampleStreams};
use dwt_core::sim::{grow_profile, grow_profile_with, grow_tree_with, GrowOptions, ProfileState};
use dwt_core::WeightSpec;
use rand::Rng;
use rand_distr::{Distribution, Exp};

const SEED: u64 = 20_240_601;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn threads() -> usize {
    resolve_threads(None)
}

fn final_depths(spec: &WeightSpec, n: u64, samples: u64, offset: u64) -> Vec<f64> {
    let opts = GrowOptions::default();
    map_samples(samples, threads(), |i| {
        let mut s = SampleStreams::new(SEED, offset + i);
        grow_profile_with(spec, n, &mut s.attach, &mut s.clock, &opts).unwrap().final_depth as f64
    })
}

fn c1_attachment_law() -> Outcome {
    const RUNS: u64 = 100_000;
    let c: f64 = 2.0;
    // Vertex 3 joins the root (weight c^0) or vertex 2 (weight c^1).
    let p = c / (1.0 + c);
    let sigma = (p * (1.0 - p) / RUNS as f64).sqrt();
    let spec = WeightSpec::exponential(c).unwrap();
    let hits = final_depths(&spec, 3, RUNS, 0).iter().filter(|&&d| d == 2.0).count();
    let emp = hits as f64 / RUNS as f64;
    let z = (emp - p).abs() / sigma;
    outcome(z <= 3.0, format!("P(d=2) = {emp:.5} vs {p:.5}, sigma {sigma:.5}, |z| = {z:.2}"))
}

fn c2_level_counts() -> Outcome {
    const RUNS: u64 = 100_000;
    let spec = WeightSpec::polynomial(1.0).unwrap();
    let opts = BranchingOptions { node_cap: 1 << 24, max_depth: Some(4) };
    let counts: Vec<[f64; 4]> = map_samples(RUNS, threads(), |i| {
        let mut rng = stream(SEED, i);
        let run = simulate_branching_with(&spec, 1.0, &opts, &mut rng).unwrap();
        assert!(!run.truncated);
        std::array::from_fn(|k| run.count_at(k as u32 + 1, 1.0) as f64)
    });
    let mut passed = true;
    let mut parts = Vec::new();
    for k in 1..=4usize {
        // t^k / k! times f(0) f(1) ... f(k-1), with f(j) = j + 1 and t = 1.
        let weights: f64 = (0..k).map(|j| (j + 1) as f64).product();
        let k_fact: f64 = (1..=k).map(|j| j as f64).product();
        let oracle = weights / k_fact;
        let (m, se) = mean_se(&counts.iter().map(|c| c[k - 1]).collect::<Vec<_>>());
        let ok = (m - oracle).abs() <= 3.0 * se;
        passed &= ok;
        parts.push(format!("N_{k}(1) = {m:.4} (se {se:.4})"));
    }
    outcome(passed, format!("{} vs 1", parts.join(", ")))
}

fn c3_clock() -> Outcome {
    const RUNS: u64 = 1_000;
    let n = 10_000u64;
    let oracle: f64 = (1..n).map(|i| 1.0 / i as f64).sum();
    let spec = WeightSpec::constant(1.0).unwrap();
    let opts = GrowOptions { track_tau: true, ..Default::default() };
    let taus = map_samples(RUNS, threads(), |i| {
        let mut s = SampleStreams::new(SEED, i);
        grow_profile_with(&spec, n, &mut s.attach, &mut s.clock, &opts).unwrap().tau_n.unwrap()
    });
    let (m, se) = mean_se(&taus);
    outcome(
        (m - oracle).abs() <= 3.0 * se,
        format!("mean tau = {m:.5} (se {se:.5}) vs H_{} = {oracle:.6}", n - 1),
    )
}

fn depth_band(spec: WeightSpec, lo: f64, hi: f64) -> Outcome {
    let n = 100_000u64;
    let depths = final_depths(&spec, n, 100, 0);
    let ratios: Vec<f64> = depths.iter().map(|d| d / (n as f64).ln()).collect();
    let (m, se) = mean_se(&ratios);
    outcome((lo..=hi).contains(&m), format!("{spec}: mean d/ln n = {m:.4} (se {se:.4}), band [{lo}, {hi}]"))
}

fn c4_constant_band() -> Outcome {
    depth_band(WeightSpec::constant(1.0).unwrap(), 2.1, 3.1)
}

fn c5_logarithmic_band() -> Outcome {
    depth_band(WeightSpec::logarithmic(), 2.1, 3.2)
}

fn c6_linear_depth() -> Outcome {
    let spec = WeightSpec::exponential(3.0).unwrap();
    let sizes = [5_000u64, 10_000, 15_000];
    let opts = GrowOptions { checkpoints: sizes.to_vec(), ..Default::default() };
    let per_sample: Vec<Vec<f64>> = map_samples(50, threads(), |i| {
        let mut s = SampleStreams::new(SEED, i);
        let t = grow_profile_with(&spec, 15_000, &mut s.attach, &mut s.clock, &opts).unwrap();
        t.checkpoints.iter().map(|c| c.depth as f64 / c.n as f64).collect()
    });
    let means: Vec<f64> = (0..3).map(|j| mean_se(&per_sample.iter().map(|v| v[j]).collect::<Vec<_>>()).0).collect();
    let in_range = means.iter().all(|&m| m > 0.05 && m < 1.0);
    let rel = (means[2] - means[1]).abs() / means[1];
    outcome(
        in_range && rel < 0.10,
        format!("mean d/n at 5000, 10000, 15000 = {:.4}, {:.4}, {:.4}; relative change {:.4}", means[0], means[1], means[2], rel),
    )
}

fn c7_superexp_ratio() -> Outcome {
    let spec = WeightSpec::factorial_power(1.0).unwrap();
    let n = 10_000u64;
    // f(j)/f(j+1) = 1/(j+1) for a = 1.
    let i_n: f64 = (0..=n).map(|j| 1.0 / (j + 1) as f64).sum();
    let ratios: Vec<f64> = final_depths(&spec, n, 200, 0).iter().map(|d| (n as f64 - d) / i_n).collect();
    let (m, se) = mean_se(&ratios);
    outcome((0.7..=1.3).contains(&m), format!("mean (n-d)/I_n = {m:.4} (se {se:.4}), I_n = {i_n:.4}, band [0.7, 1.3]"))
}

fn c8_stabilization() -> Outcome {
    let spec = WeightSpec::factorial_power(2.0).unwrap();
    let opts = GrowOptions { checkpoints: vec![1_000, 10_000], ..Default::default() };
    let stable = map_samples(100, threads(), |i| {
        let mut s = SampleStreams::new(SEED, i);
        let t = grow_profile_with(&spec, 10_000, &mut s.attach, &mut s.clock, &opts).unwrap();
        t.checkpoints[0].z == t.checkpoints[1].z
    });
    let frac = stable.iter().filter(|&&b| b).count() as f64 / stable.len() as f64;
    outcome(frac >= 0.95, format!("n-d equal at 1000 and 10000 in {:.0}% of samples", 100.0 * frac))
}

fn c9_equivalence() -> Outcome {
    const RUNS: u64 = 100_000;
    let spec = WeightSpec::exponential(1.5).unwrap();
    let opts = GrowOptions::default();
    let profile = histogram(final_depths(&spec, 30, RUNS, 0).into_iter().map(|d| d as u64));
    let tree = histogram(map_samples(RUNS, threads(), |i| {
        let mut s = SampleStreams::new(SEED, RUNS + i);
        grow_tree_with(&spec, 30, &mut s.attach, &mut s.clock, &opts).unwrap().0.max_depth() as u64
    }));
    let t = chi_square_homogeneity(&profile, &tree);
    outcome(t.p_value >= 1e-3, format!("{spec}: chi2 = {:.3} on {} df, p = {:.4}", t.statistic, t.df, t.p_value))
}

fn c10_coupling() -> Outcome {
    let spec = WeightSpec::factorial_power(1.0).unwrap();
    let results = map_samples(100, threads(), |i| {
        let run = coupled_run(&spec, 50, SEED + i, &CoupledOptions::default()).unwrap();
        let fp = run.trace.first_passage.as_ref().unwrap();
        let mut violations = 0u64;
        let mut drift = 0.0f64;
        for k in 0..run.gaps.len() {
            violations += u64::from(run.gaps[k] > run.e(k));
            drift = drift.max(((fp[k + 1] - fp[k]) - run.gaps[k]).abs() / fp[k + 1].max(1.0));
        }
        (violations, drift)
    });
    let violations: u64 = results.iter().map(|r| r.0).sum();
    let drift = results.iter().map(|r| r.1).fold(0.0, f64::max);
    outcome(
        violations == 0 && drift < 1e-9,
        format!("{violations} violations over 100 runs x 50 depths; gaps match first-passage differences to {drift:.1e}"),
    )
}

fn c11_covering() -> Outcome {
    let c: f64 = 2.0;
    let spec = WeightSpec::exponential(c).unwrap();
    // Smallest l with l(l+1)/2 ln c - l ln 2 - ln (l+1)! >= ln 8; depth independent.
    let mut ln_fact = 0.0;
    let mut max_psi = 0u64;
    for l in 1..100u64 {
        ln_fact += ((l + 1) as f64).ln();
        let lhs = (l * (l + 1) / 2) as f64 * c.ln() - l as f64 * 2f64.ln() - ln_fact;
        if lhs >= 8f64.ln() {
            max_psi = l;
            break;
        }
    }
    let windows = PsiWindow::new(&spec);
    let library_psi = spec.psi(5, 10_000).unwrap().finite().unwrap();
    let violations: u64 = map_samples(100, threads(), |i| {
        let mut s = SampleStreams::new(SEED, i);
        let profile = grow_profile_with(&spec, 10_000, &mut s.attach, &mut s.clock, &GrowOptions::default())
            .unwrap()
            .profile;
        (0..profile.len())
            .filter(|&r| {
                let r2 = covering_walk(&profile, &windows, r).unwrap();
                let (nr, nr2) = (profile[r], profile[r2]);
                !(nr <= nr2 && (r2.abs_diff(r) as u64) <= max_psi * (nr2 - nr))
            })
            .count() as u64
    })
    .into_iter()
    .sum();
    outcome(
        violations == 0 && max_psi == 7 && library_psi == max_psi,
        format!("{violations} violations over 100 trees; maxPsi = {max_psi} (library {library_psi})"),
    )
}

fn c12_moment() -> Outcome {
    const DRAWS: u64 = 1_000_000;
    let spec = WeightSpec::factorial_power(1.0).unwrap();
    let f = |k: u64| (1..=k).map(|j| j as f64).product::<f64>();
    // Truncate F_3 = sum_{j>=3} E_j, E_j ~ Exp(f(j)), where the expected tail
    // sum_{j>K} 1/j! drops below 1e-12.
    let mut top = 3u64;
    while (top + 1..top + 40).map(|j| 1.0 / f(j)).sum::<f64>() >= 1e-12 {
        top += 1;
    }
    let rates: Vec<Exp<f64>> = (3..=top).map(|j| Exp::new(f(j)).unwrap()).collect();
    let draws: Vec<f64> = map_samples(DRAWS / 1000, threads(), |b| {
        let mut rng = stream(SEED, b);
        (0..1000).map(|_| (f(2) * rates.iter().map(|e| e.sample(&mut rng)).sum::<f64>()).powi(2)).collect::<Vec<_>>()
    })
    .concat();
    let (m, se) = mean_se(&draws);
    let exact = moment_g(&spec, 3, 2, 200, 1e-14).unwrap();
    let z = (exact - m).abs() / se;
    outcome(z <= 3.0, format!("moment_g = {exact:.8}, Monte Carlo = {m:.8} (se {se:.2e}, K = {top}), |z| = {z:.2}"))
}

fn manifest_rows(m: &ResultManifest, statistic: &str) -> Vec<(f64, f64)> {
    m.rows.iter().filter(|r| r.statistic == statistic).map(|r| (r.param.unwrap(), r.summary.mean)).collect()
}

fn smooth(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    (0..n)
        .map(|i| {
            let w = &values[i.saturating_sub(1)..(i + 2).min(n)];
            w.iter().sum::<f64>() / w.len() as f64
        })
        .collect()
}

fn c13_figures() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut beta = ExperimentConfig::new(ExperimentKind::BetaGrid);
    beta.grid = Some(ParamGrid::range("subexp_quotient", "c", 0.1, 2.5, 0.1));
    beta.n = Some(20_000);
    beta.samples = 50;
    beta.seed = SEED;
    let mut nu = ExperimentConfig::new(ExperimentKind::NuGrid);
    nu.grid = Some(ParamGrid::range("exponential", "c", 1.1, 15.0, 0.1));
    nu.n = Some(15_000);
    nu.samples = 50;
    nu.seed = SEED;
    nu.statistics = Some(vec![Statistic::DOverN]);
    let bm = run_experiment(&beta).unwrap();
    let nm = run_experiment(&nu).unwrap();
    let (bcsv, _) = emit(&bm, dir.path()).unwrap();
    let (ncsv, _) = emit(&nm, dir.path()).unwrap();
    let beta_rows = manifest_rows(&bm, "beta_hat");
    let nu_rows = manifest_rows(&nm, "d_over_n");
    let csv_lines = |p: &std::path::Path| std::fs::read_to_string(p).unwrap().lines().count() - 1;
    let emitted = beta_rows.len() == 25 && nu_rows.len() == 140 && csv_lines(&ncsv) == 140 && csv_lines(&bcsv) > 25;

    let b: Vec<f64> = beta_rows.iter().map(|r| r.1).collect();
    let inside = b.iter().all(|&x| x > 0.0 && x < 1.0);
    let bs = smooth(&b);
    let beta_rises = bs.windows(2).filter(|w| w[1] > w[0]).count();
    let ns = smooth(&nu_rows.iter().map(|r| r.1).collect::<Vec<_>>());
    let nu_falls = ns.windows(2).filter(|w| w[1] < w[0]).count();
    outcome(
        emitted && inside && beta_rises == 0 && nu_falls == 0,
        format!(
            "beta_hat from {:.3} (c=0.1) to {:.3} (c=2.5), inside (0,1): {inside}, smoothed increases: {beta_rises}/24; \
             nu_hat from {:.4} (c=1.1) to {:.4} (c=15), smoothed decreases: {nu_falls}/139",
            b[0],
            b[b.len() - 1],
            nu_rows[0].1,
            nu_rows[nu_rows.len() - 1].1
        ),
    )
}

fn c14_performance() -> Outcome {
    let spec = WeightSpec::exponential(1.5).unwrap();
    let start = Instant::now();
    let trace = grow_profile(&spec, 1_000_000, SEED, &GrowOptions::default()).unwrap();
    let secs = start.elapsed().as_secs_f64();

    let mut rng = SampleStreams::new(SEED, 0).attach;
    let mut state = ProfileState::new(&spec);
    let mut peak_ratio = 0.0f64;
    for i in 1..1_000_000u64 {
        state.step(&mut rng);
        if i % 65_536 == 0 {
            peak_ratio = peak_ratio.max(state.heap_bytes() as f64 / (state.max_depth() + 1) as f64);
        }
    }
    let bytes = state.heap_bytes();
    let per_depth = bytes as f64 / (state.max_depth() + 1) as f64;
    peak_ratio = peak_ratio.max(per_depth);
    // Per occupied depth: a count, a mass and a Fenwick node, with Vec slack.
    let bounded = peak_ratio <= 96.0;
    outcome(
        secs < 5.0 && bounded && trace.profile.as_slice() == state.counts(),
        format!(
            "n = 10^6 in {secs:.2}s, depth {}, heap {bytes} bytes ({per_depth:.1} per depth level, peak {peak_ratio:.1})",
            state.max_depth()
        ),
    )
}

fn random_spec(rng: &mut impl Rng) -> WeightSpec {
    let p = rng.random::<f64>();
    let spec = match rng.random_range(0..6) {
        0 => WeightSpec::constant(0.5 + 2.0 * p),
        1 => WeightSpec::polynomial(3.0 * p),
        2 => WeightSpec::exponential(0.5 + 3.0 * p),
        3 => WeightSpec::subexp_quotient(0.1 + 2.0 * p),
        4 => WeightSpec::factorial_power(0.2 + 1.5 * p),
        _ => WeightSpec::stretched_exp(0.1 + 0.8 * p),
    };
    spec.unwrap()
}

fn c15_scale_invariance() -> Outcome {
    let opts = GrowOptions { record_attachments: true, checkpoints: vec![50, 500], ..Default::default() };
    let mismatches: u64 = map_samples(100, threads(), |i| {
        let mut pick = stream(SEED ^ 0x5ca1e, i);
        let spec = random_spec(&mut pick);
        let scaled = spec.clone().scaled(4.0).unwrap();
        let n = pick.random_range(100..3_000u64);
        let seed: u64 = pick.random();
        let mut a = SampleStreams::new(seed, i);
        let mut b = SampleStreams::new(seed, i);
        let ta = grow_profile_with(&spec, n, &mut a.attach, &mut a.clock, &opts).unwrap();
        let tb = grow_profile_with(&scaled, n, &mut b.attach, &mut b.clock, &opts).unwrap();
        u64::from(ta != tb)
    })
    .into_iter()
    .sum();
    outcome(mismatches == 0, format!("{mismatches} of 100 random spec/seed pairs differ under f -> 4f"))
}

type Criterion = (u32, &'static str, u64, fn() -> Outcome);

const CRITERIA: [Criterion; 15] = [
    (1, "exact attachment law", 5, c1_attachment_law),
    (2, "expected level counts", 60, c2_level_counts),
    (3, "clock law", 60, c3_clock),
    (4, "constant weight depth band", 120, c4_constant_band),
    (5, "logarithmic weight depth band", 120, c5_logarithmic_band),
    (6, "exponential linear depth", 120, c6_linear_depth),
    (7, "super-exponential off-path ratio", 60, c7_superexp_ratio),
    (8, "super-exponential stabilization", 60, c8_stabilization),
    (9, "profile and tree samplers agree", 60, c9_equivalence),
    (10, "coupled pioneer waits", 30, c10_coupling),
    (11, "covering walk property", 60, c11_covering),
    (12, "ladder second moment", 30, c12_moment),
    (13, "beta and nu grids", 1800, c13_figures),
    (14, "single-worker performance", 60, c14_performance),
    (15, "scale invariance", 60, c15_scale_invariance),
];

fn main() -> ExitCode {
    let only: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (id, name, limit, run) in CRITERIA {
        if !only.is_empty() && !only.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let out = run();
        let took = start.elapsed();
        let in_time = took <= Duration::from_secs(limit);
        let passed = out.passed && in_time;
        failed += usize::from(!passed);
        println!(
            "criterion {id:>2} {}: {name}: {} [{:.2}s, limit {limit}s]",
            if passed { "PASS" } else { "FAIL" },
            out.detail,
            took.as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}

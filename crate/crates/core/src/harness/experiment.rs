use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, ExperimentKind, Statistic};
use super::exec::{map_samples, resolve_threads};
use super::stats::{estimate_beta, StatSummary};
use super::verify::{verify, VerifyReport};
use crate::error::{DwtError, Result};
use crate::rng::SampleStreams;
use crate::sim::{grow_profile_with, GrowOptions};
use crate::weightfn::WeightSpec;

/// One aggregated CSV row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    /// Grid parameter; absent for single-spec experiments.
    pub param: Option<f64>,
    pub n: u64,
    pub statistic: String,
    pub summary: StatSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultManifest {
    pub name: String,
    pub kind: ExperimentKind,
    /// The config as run, without worker count or output location.
    pub config: ExperimentConfig,
    pub version: String,
    pub rows: Vec<ResultRow>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verification: Option<VerifyReport>,
    /// Excluded from determinism comparisons.
    pub wall_time_secs: f64,
}

impl ResultManifest {
    /// The manifest with the wall-clock field zeroed.
    pub fn without_timing(&self) -> Self {
        Self { wall_time_secs: 0.0, ..self.clone() }
    }
}

/// Per-sample observation: `(n, depth)` at each checkpoint.
type SampleDepths = Vec<(u64, u64)>;

fn run_point(spec: &WeightSpec, sizes: &[u64], seed: u64, sample: u64) -> Result<SampleDepths> {
    let mut streams = SampleStreams::new(seed, sample);
    let opts = GrowOptions { checkpoints: sizes.to_vec(), ..Default::default() };
    let n = *sizes.last().expect("at least one size");
    let trace = grow_profile_with(spec, n, &mut streams.attach, &mut streams.clock, &opts)?;
    Ok(trace.checkpoints.iter().map(|c| (c.n, c.depth)).collect())
}

fn summarize(
    config: &ExperimentConfig,
    param: Option<f64>,
    spec: &WeightSpec,
    sizes: &[u64],
    samples: &[SampleDepths],
) -> Result<Vec<ResultRow>> {
    let keep = config.keep_values;
    let mut rows = Vec::new();
    let per_size = |f: &dyn Fn(u64, u64) -> f64| -> Vec<(u64, StatSummary)> {
        sizes
            .iter()
            .enumerate()
            .map(|(j, &n)| {
                let values: Vec<f64> = samples.iter().map(|s| f(n, s[j].1)).collect();
                (n, StatSummary::from_values(&values, keep))
            })
            .collect()
    };
    for stat in config.statistics() {
        let mut push = |n: u64, summary: StatSummary| {
            rows.push(ResultRow { param, n, statistic: stat.name().into(), summary });
        };
        match stat {
            Statistic::Depth => per_size(&|_, d| d as f64).into_iter().for_each(|(n, s)| push(n, s)),
            Statistic::DOverLnN => {
                per_size(&|n, d| d as f64 / (n as f64).ln()).into_iter().for_each(|(n, s)| push(n, s))
            }
            Statistic::DOverN => per_size(&|n, d| d as f64 / n as f64).into_iter().for_each(|(n, s)| push(n, s)),
            Statistic::Z => per_size(&|n, d| (n - d) as f64).into_iter().for_each(|(n, s)| push(n, s)),
            Statistic::ZOverIN => per_size(&|n, d| (n - d) as f64 / spec.tail_ratio_sum(n))
                .into_iter()
                .for_each(|(n, s)| push(n, s)),
            Statistic::ZStable => {
                let values: Vec<f64> = samples
                    .iter()
                    .map(|s| {
                        let z0 = s[0].0 - s[0].1;
                        f64::from(u8::from(s.iter().all(|&(n, d)| n - d == z0)))
                    })
                    .collect();
                push(*sizes.last().unwrap(), StatSummary::from_values(&values, keep));
            }
            Statistic::BetaHat => {
                // The estimate of record fits the mean-depth series; the
                // spread comes from the per-sample fits.
                let mean_series: Vec<(f64, f64)> = sizes
                    .iter()
                    .enumerate()
                    .map(|(j, &n)| {
                        let m = samples.iter().map(|s| s[j].1 as f64).sum::<f64>() / samples.len() as f64;
                        (n as f64, m)
                    })
                    .collect();
                let fit = estimate_beta(&mean_series)?;
                let per_sample: Vec<f64> = samples
                    .iter()
                    .map(|s| {
                        let series: Vec<(f64, f64)> = s.iter().map(|&(n, d)| (n as f64, d as f64)).collect();
                        estimate_beta(&series).map(|f| f.slope)
                    })
                    .collect::<Result<_>>()?;
                let mut summary = StatSummary::from_values(&per_sample, keep);
                summary.mean = fit.slope;
                push(*sizes.last().unwrap(), summary);
            }
        }
    }
    Ok(rows)
}

/// Run an experiment to completion. Rows are ordered by grid point, then
/// statistic, then size.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ResultManifest> {
    config.validate()?;
    let start = Instant::now();
    let threads = resolve_threads(config.threads);
    let mut echo = config.clone();
    echo.threads = None;
    echo.out_dir = None;
    let mut manifest = ResultManifest {
        name: config.name().to_string(),
        kind: config.kind,
        config: echo,
        version: env!("CARGO_PKG_VERSION").to_string(),
        rows: Vec::new(),
        verification: None,
        wall_time_secs: 0.0,
    };

    if config.kind == ExperimentKind::VerifySuite {
        let report = verify(config.suite.as_deref().unwrap(), config.seed, threads)?;
        manifest.rows = report
            .checks
            .iter()
            .map(|c| ResultRow {
                param: None,
                n: 0,
                statistic: c.name.clone(),
                summary: StatSummary::from_values(&[c.observed], false),
            })
            .collect();
        manifest.verification = Some(report);
        manifest.wall_time_secs = start.elapsed().as_secs_f64();
        return Ok(manifest);
    }

    let points: Vec<(Option<f64>, WeightSpec)> = match &config.grid {
        Some(grid) if matches!(config.kind, ExperimentKind::BetaGrid | ExperimentKind::NuGrid) => grid
            .values()?
            .into_iter()
            .map(|v| Ok((Some(v), grid.spec_at(v)?)))
            .collect::<Result<_>>()?,
        _ => vec![(None, config.spec.clone().ok_or_else(|| DwtError::Config("missing spec".into()))?)],
    };
    let sizes = config.checkpoints()?;
    let per_point = config.samples;
    // Sample i at every grid point shares the streams of sample i, so
    // neighbouring grid points are compared on common random numbers.
    let total = per_point * points.len() as u64;
    let results = map_samples(total, threads, |idx| {
        let (_, spec) = &points[(idx / per_point) as usize];
        run_point(spec, &sizes, config.seed, idx % per_point)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    for (p, (param, spec)) in points.iter().enumerate() {
        let lo = p * per_point as usize;
        let chunk = &results[lo..lo + per_point as usize];
        manifest.rows.extend(summarize(config, *param, spec, &sizes, chunk)?);
    }
    manifest.wall_time_secs = start.elapsed().as_secs_f64();
    Ok(manifest)
}

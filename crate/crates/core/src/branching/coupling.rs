use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use super::ladder::{ExponentialLadder, LadderPlan};
use crate::error::{DwtError, Result};
use crate::numeric::CompensatedSum;
use crate::rng::SampleStreams;
use crate::sim::GrowthTrace;
use crate::weightfn::WeightSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoupledOptions {
    /// Tolerance for the ladder truncation `Σ_{i>K} 1/f(i)`.
    pub tail_tol: f64,
    /// Maximum number of vertices generated across all levels.
    pub budget: u64,
}

impl Default for CoupledOptions {
    fn default() -> Self {
        Self { tail_tol: 1e-12, budget: 10_000_000 }
    }
}

/// Outcome of one coupled run up to the first vertex at `depth_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoupledRun {
    /// The tree at time `τ_{1,depth_max}`; `first_passage` and
    /// `j_indicators` are always present.
    pub trace: GrowthTrace,
    pub ladder: ExponentialLadder,
    /// `τ_{1,k+1} - τ_{1,k}` for `k < depth_max`, computed directly rather
    /// than as a difference of absolute times.
    pub gaps: Vec<f64>,
    /// `H_k = N_k(τ_{1,k} + F_k) - 1` for `k = 0..=depth_max`, with `F_k`
    /// truncated at the ladder's `K`.
    pub h: Vec<u64>,
    /// Upper bound on the expected number of depth-`k` births missed because
    /// of the truncation: `tail_bound · f(k-1) · N_{k-1}`.
    pub h_bias_bound: Vec<f64>,
    /// Birth times at each depth relative to that depth's first birth,
    /// sorted, covering the window `[0, F_k]`.
    pub levels: Vec<Vec<f64>>,
}

impl CoupledRun {
    pub fn depth_max(&self) -> usize {
        self.gaps.len()
    }

    /// The pioneer's first-child wait `E_k`.
    pub fn e(&self, k: usize) -> f64 {
        self.ladder.e[k]
    }

    pub fn h_sum(&self) -> u64 {
        self.h.iter().sum()
    }

    /// `N_j(τ_{1,k})` for `j <= k <= depth_max`.
    pub fn level_count_at(&self, j: usize, k: usize) -> u64 {
        assert!(j <= k && k <= self.depth_max());
        let window: f64 = self.gaps[j..k].iter().copied().collect::<CompensatedSum>().value();
        self.levels[j].partition_point(|&t| t <= window) as u64
    }
}

pub fn coupled_run(spec: &WeightSpec, depth_max: usize, seed: u64, opts: &CoupledOptions) -> Result<CoupledRun> {
    let mut streams = SampleStreams::new(seed, 0);
    coupled_run_with(spec, depth_max, opts, &mut streams.clock, &mut streams.attach)
}

/// Build the branching process level by level up to depth `depth_max`.
///
/// The ladder `E_0..=E_K` is drawn first from `ladder_rng`. Depth `j` is
/// then generated from the births at depth `j - 1`: the first birth of depth
/// `j - 1` waits exactly `E_{j-1}` for its first child and every other gap
/// is a fresh exponential of rate `f(j-1)` from `gap_rng`. Births at depth
/// `j` are kept up to `τ_{1,j} + F_j`, which is all that `H_j` and the tree
/// at `τ_{1,depth_max}` need; the windows are nested because
/// `τ_{1,j} ≤ τ_{1,j-1} + E_{j-1}`.
pub fn coupled_run_with<L: Rng + ?Sized, G: Rng + ?Sized>(
    spec: &WeightSpec,
    depth_max: usize,
    opts: &CoupledOptions,
    ladder_rng: &mut L,
    gap_rng: &mut G,
) -> Result<CoupledRun> {
    if depth_max == 0 {
        return Err(DwtError::Domain("depth_max must be >= 1".into()));
    }
    let ladder = LadderPlan::new(spec, depth_max, opts.tail_tol)?.sample(ladder_rng);
    let mut levels: Vec<Vec<f64>> = vec![vec![0.0]];
    let mut horizons = vec![ladder.f_tail[0]];
    let mut gaps = Vec::with_capacity(depth_max);
    let mut generated = 1u64;

    for j in 1..=depth_max {
        let parent = &levels[j - 1];
        let mean_gap = (-spec.log_weight(j as u64 - 1)).exp();
        let draw = |rng: &mut G| -> f64 {
            let x: f64 = Exp1.sample(rng);
            x * mean_gap
        };
        let first: Vec<f64> = parent
            .iter()
            .enumerate()
            .map(|(v, &b)| if v == 0 { ladder.e[j - 1] } else { b + draw(gap_rng) })
            .collect();
        let delta = first.iter().copied().fold(f64::INFINITY, f64::min);
        // Rounding in the nested horizons must never drop the first birth.
        let window = (delta + ladder.f_tail[j]).min(horizons[j - 1]).max(delta);
        let mut level = Vec::new();
        for &start in &first {
            let mut t = start;
            while t <= window {
                level.push(t - delta);
                generated += 1;
                if generated > opts.budget {
                    return Err(DwtError::Budget {
                        budget: opts.budget,
                        detail: format!("coupled run reached depth {j} of {depth_max}"),
                    });
                }
                t += draw(gap_rng);
            }
        }
        level.sort_by(f64::total_cmp);
        debug_assert_eq!(level.first(), Some(&0.0));
        gaps.push(delta);
        horizons.push(window - delta);
        levels.push(level);
    }

    let mut clock = CompensatedSum::new();
    let mut first_passage = vec![0.0];
    for &g in &gaps {
        clock.add(g);
        first_passage.push(clock.value());
    }
    let profile: Vec<u64> = (0..=depth_max)
        .map(|j| {
            let window: f64 = gaps[j..].iter().copied().collect::<CompensatedSum>().value();
            levels[j].partition_point(|&t| t <= window) as u64
        })
        .collect();
    let mut j_indicators: Vec<u8> =
        (0..depth_max).map(|k| u8::from(levels[k].get(1).is_some_and(|&t| t < gaps[k]))).collect();
    j_indicators.push(0);
    let n: u64 = profile.iter().sum();
    let trace = GrowthTrace {
        n,
        final_depth: depth_max as u64,
        z_n: n - depth_max as u64,
        tau_n: Some(first_passage[depth_max]),
        first_passage: Some(first_passage),
        j_indicators: Some(j_indicators),
        checkpoints: Vec::new(),
        profile,
        attachments: None,
    };
    let h = levels.iter().map(|l| l.len() as u64 - 1).collect();
    let h_bias_bound = (0..=depth_max)
        .map(|k| {
            if k == 0 {
                0.0
            } else {
                ladder.tail_bound * spec.weight(k as u64 - 1) * levels[k - 1].len() as f64
            }
        })
        .collect();
    Ok(CoupledRun { trace, ladder, gaps, h, h_bias_bound, levels })
}

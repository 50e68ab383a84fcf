use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{DwtError, Result};
use crate::rng::stream;
use crate::weightfn::WeightSpec;

/// Largest index scanned while looking for a truncation point.
const SCAN_CAP: usize = 1_000_000;

/// Independent `E_k ~ Exp(f(k))` for `k = 0..=K` and their backward sums
/// `F_k = Σ_{K ≥ i ≥ k} E_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentialLadder {
    pub e: Vec<f64>,
    /// `F_0..=F_{K+1}`, the last entry being 0.
    pub f_tail: Vec<f64>,
    pub truncation_k: usize,
    /// `Σ_{i>K} 1/f(i)`: the expected mass dropped from every `F_k`.
    pub tail_bound: f64,
}

impl ExponentialLadder {
    /// `G_k = f(k-1) F_k` for `k >= 1`.
    pub fn g(&self, spec: &WeightSpec, k: usize) -> f64 {
        assert!(k >= 1, "G_k is defined for k >= 1");
        spec.log_weight(k as u64 - 1).exp() * self.f_tail[k]
    }
}

/// Truncation index and per-depth mean gaps, reusable across many draws.
#[derive(Debug, Clone)]
pub struct LadderPlan {
    pub truncation_k: usize,
    pub tail_bound: f64,
    mean_gap: Vec<f64>,
}

impl LadderPlan {
    pub fn new(spec: &WeightSpec, k_max: usize, tail_tol: f64) -> Result<Self> {
        let (k, tail_bound) = ladder_truncation(spec, k_max, tail_tol)?;
        let mean_gap = (0..=k as u64).map(|i| (-spec.log_weight(i)).exp()).collect();
        Ok(Self { truncation_k: k, tail_bound, mean_gap })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ExponentialLadder {
        let e: Vec<f64> = self
            .mean_gap
            .iter()
            .map(|&m| {
                let x: f64 = Exp1.sample(rng);
                x * m
            })
            .collect();
        let mut f_tail = vec![0.0; e.len() + 1];
        for k in (0..e.len()).rev() {
            f_tail[k] = f_tail[k + 1] + e[k];
        }
        ExponentialLadder { e, f_tail, truncation_k: self.truncation_k, tail_bound: self.tail_bound }
    }

    /// Draw only `F_k`, consuming one exponential per index `k..=K`.
    pub fn sample_tail<R: Rng + ?Sized>(&self, k: usize, rng: &mut R) -> f64 {
        let mut acc = 0.0;
        for &m in self.mean_gap[k.min(self.mean_gap.len())..].iter() {
            let x: f64 = Exp1.sample(rng);
            acc += x * m;
        }
        acc
    }
}

/// Smallest `K >= k_max` with `Σ_{i>K} 1/f(i) < tail_tol`, together with
/// that tail.
///
/// Terms are scanned upward from `k_max + 1` until one is below
/// `1e-6 · tail_tol` and the last ratio `q = f(m-1)/f(m)` is at most 1/2;
/// the unscanned remainder is then bounded by `t_m q / (1 - q)`, which
/// assumes the ratios keep falling (true for the super-exponential
/// families). Fails if no such index appears within a million terms.
pub fn ladder_truncation(spec: &WeightSpec, k_max: usize, tail_tol: f64) -> Result<(usize, f64)> {
    if !(tail_tol > 0.0 && tail_tol.is_finite()) {
        return Err(DwtError::Config(format!("tail tolerance must be positive, got {tail_tol}")));
    }
    let term = |i: usize| (-spec.log_weight(i as u64)).exp();
    // terms[j] = 1/f(k_max + 1 + j)
    let mut terms = Vec::new();
    let mut prev_log = spec.log_weight(k_max as u64);
    let mut remainder = None;
    for i in k_max + 1..=k_max + SCAN_CAP {
        let lw = spec.log_weight(i as u64);
        let t = term(i);
        terms.push(t);
        let q = (prev_log - lw).exp();
        prev_log = lw;
        if t <= tail_tol * 1e-6 && q <= 0.5 {
            remainder = Some(t * q / (1.0 - q));
            break;
        }
    }
    let Some(remainder) = remainder else {
        return Err(DwtError::ToleranceUnreachable {
            tol: tail_tol,
            detail: format!("1/f(i) did not decay geometrically within {SCAN_CAP} terms past {k_max}"),
        });
    };
    // tail(K) for K = k_max + m is Σ_{j>=m} terms[j] + remainder.
    let mut tails = vec![remainder; terms.len() + 1];
    for j in (0..terms.len()).rev() {
        tails[j] = tails[j + 1] + terms[j];
    }
    let m = tails.iter().position(|&t| t < tail_tol).expect("last tail is below tolerance");
    Ok((k_max + m, tails[m]))
}

pub fn sample_ladder(spec: &WeightSpec, k_max: usize, tail_tol: f64, seed: u64) -> Result<ExponentialLadder> {
    sample_ladder_with(spec, k_max, tail_tol, &mut stream(seed, 0))
}

pub fn sample_ladder_with<R: Rng + ?Sized>(
    spec: &WeightSpec,
    k_max: usize,
    tail_tol: f64,
    rng: &mut R,
) -> Result<ExponentialLadder> {
    Ok(LadderPlan::new(spec, k_max, tail_tol)?.sample(rng))
}

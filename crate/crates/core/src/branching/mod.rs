//! Continuous-time branching embedding and the exponential-ladder coupling.
//!
//! In the embedding every vertex at depth `k` gives birth along a Poisson
//! process of rate `f(k)`. [`simulate_branching`] materialises the births up
//! to a time horizon in birth-time order. [`coupled_run`] builds the same
//! process level by level so that the pioneer of each depth waits exactly a
//! pre-sampled ladder variable `E_k` for its first child.

mod coupling;
mod ladder;

pub use coupling::{coupled_run, coupled_run_with, CoupledOptions, CoupledRun};
pub use ladder::{ladder_truncation, sample_ladder, sample_ladder_with, ExponentialLadder, LadderPlan};

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{DwtError, Result};
use crate::rng::stream;
use crate::weightfn::WeightSpec;

pub const DEFAULT_NODE_CAP: usize = 10_000_000;

/// One materialised vertex of the Ulam-Harris tree.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BirthEvent {
    /// Index of the parent event; `None` for the root.
    pub parent: Option<u32>,
    /// Position among the parent's children, from 1.
    pub ordinal: u32,
    pub depth: u32,
    pub time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchingOptions {
    /// Stop after this many births (the root included) and flag truncation.
    pub node_cap: usize,
    /// Vertices at this depth do not reproduce.
    pub max_depth: Option<u32>,
}

impl Default for BranchingOptions {
    fn default() -> Self {
        Self { node_cap: DEFAULT_NODE_CAP, max_depth: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchingRun {
    /// Births in non-decreasing time order; index 0 is the root.
    pub events: Vec<BirthEvent>,
    /// A birth within the horizon was dropped because of the node cap.
    pub truncated: bool,
    pub t_max: f64,
}

impl BranchingRun {
    /// Ulam-Harris address of event `i`; empty for the root.
    pub fn label(&self, i: usize) -> Vec<u32> {
        let mut label = Vec::with_capacity(self.events[i].depth as usize);
        let mut v = i;
        while let Some(p) = self.events[v].parent {
            label.push(self.events[v].ordinal);
            v = p as usize;
        }
        label.reverse();
        label
    }

    /// `N_k` over the materialised events.
    pub fn profile(&self) -> Vec<u64> {
        profile_of(&self.events)
    }

    /// Profile of the first `n` births.
    pub fn profile_prefix(&self, n: usize) -> Vec<u64> {
        profile_of(&self.events[..n.min(self.events.len())])
    }

    /// Number of depth-`k` vertices born at or before `t`.
    pub fn count_at(&self, k: u32, t: f64) -> u64 {
        self.events.iter().filter(|e| e.depth == k && e.time <= t).count() as u64
    }

    /// Birth time of the first vertex at depth `k`, if any was materialised.
    pub fn first_passage(&self, k: u32) -> Option<f64> {
        self.events.iter().find(|e| e.depth == k).map(|e| e.time)
    }

    /// CSV with header `time,depth,parent_label,label`. Addresses are
    /// dot-separated ordinals (`1.3.2`); the root's label and parent label
    /// are empty.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "time,depth,parent_label,label")?;
        let mut labels: Vec<String> = Vec::with_capacity(self.events.len());
        for e in &self.events {
            let (parent_label, label) = match e.parent {
                None => (String::new(), String::new()),
                Some(p) => {
                    let pl = labels[p as usize].clone();
                    let l = if pl.is_empty() {
                        e.ordinal.to_string()
                    } else {
                        format!("{pl}.{}", e.ordinal)
                    };
                    (pl, l)
                }
            };
            writeln!(out, "{},{},{},{}", e.time, e.depth, parent_label, label)?;
            labels.push(label);
        }
        Ok(())
    }
}

fn profile_of(events: &[BirthEvent]) -> Vec<u64> {
    let mut counts = Vec::new();
    for e in events {
        let d = e.depth as usize;
        if d >= counts.len() {
            counts.resize(d + 1, 0);
        }
        counts[d] += 1;
    }
    counts
}

#[derive(Debug)]
struct Pending {
    time: f64,
    seq: u64,
    vertex: u32,
    ordinal: u32,
}

impl PartialEq for Pending {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Pending {}

impl PartialOrd for Pending {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Pending {
    // Reversed so that `BinaryHeap` pops the earliest birth first.
    fn cmp(&self, other: &Self) -> Ordering {
        other.time.total_cmp(&self.time).then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Mean gap `1/f(k)` per depth, filled on demand.
struct GapScales<'a> {
    spec: &'a WeightSpec,
    scales: Vec<f64>,
}

impl<'a> GapScales<'a> {
    fn new(spec: &'a WeightSpec) -> Self {
        Self { spec, scales: Vec::new() }
    }

    fn get(&mut self, depth: u32) -> f64 {
        let d = depth as usize;
        while self.scales.len() <= d {
            let k = self.scales.len() as u64;
            self.scales.push((-self.spec.log_weight(k)).exp());
        }
        self.scales[d]
    }

    fn gap<R: Rng + ?Sized>(&mut self, depth: u32, rng: &mut R) -> f64 {
        let e: f64 = Exp1.sample(rng);
        e * self.get(depth)
    }
}

/// Every birth with time at most `t_max`, using stream 0 of `seed`.
pub fn simulate_branching(
    spec: &WeightSpec,
    t_max: f64,
    node_cap: usize,
    seed: u64,
) -> Result<BranchingRun> {
    let opts = BranchingOptions { node_cap, max_depth: None };
    simulate_branching_with(spec, t_max, &opts, &mut stream(seed, 0))
}

/// Event-driven simulation of the Ulam-Harris embedding. Each vertex holds
/// exactly one pending birth in a priority queue; the next gap is drawn only
/// when that birth fires.
pub fn simulate_branching_with<R: Rng + ?Sized>(
    spec: &WeightSpec,
    t_max: f64,
    opts: &BranchingOptions,
    rng: &mut R,
) -> Result<BranchingRun> {
    if !(t_max >= 0.0) {
        return Err(DwtError::Domain(format!("t_max must be >= 0, got {t_max}")));
    }
    if opts.node_cap == 0 {
        return Err(DwtError::Domain("node_cap must be >= 1".into()));
    }
    let mut gaps = GapScales::new(spec);
    let mut events = vec![BirthEvent { parent: None, ordinal: 0, depth: 0, time: 0.0 }];
    let mut queue = BinaryHeap::new();
    let mut seq = 0u64;
    let reproduces = |depth: u32| opts.max_depth.is_none_or(|m| depth < m);
    if reproduces(0) {
        queue.push(Pending { time: gaps.gap(0, rng), seq, vertex: 0, ordinal: 1 });
        seq += 1;
    }
    let mut truncated = false;
    while let Some(next) = queue.pop() {
        if next.time > t_max {
            break;
        }
        if events.len() >= opts.node_cap {
            truncated = true;
            break;
        }
        let parent = events[next.vertex as usize];
        let child = events.len() as u32;
        let depth = parent.depth + 1;
        events.push(BirthEvent { parent: Some(next.vertex), ordinal: next.ordinal, depth, time: next.time });
        if reproduces(depth) {
            let t = next.time + gaps.gap(depth, rng);
            queue.push(Pending { time: t, seq, vertex: child, ordinal: 1 });
            seq += 1;
        }
        let t = next.time + gaps.gap(parent.depth, rng);
        queue.push(Pending { time: t, seq, vertex: next.vertex, ordinal: next.ordinal + 1 });
        seq += 1;
    }
    Ok(BranchingRun { events, truncated, t_max })
}

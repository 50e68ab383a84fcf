//! The discrete attachment chain.
//!
//! [`grow_profile`] tracks only the depth profile and is the fast path for
//! Monte Carlo work; [`grow_tree`] additionally stores every parent link.
//! Both draw the parent depth from a [`ProfileState`] mass index; the tree
//! path then picks a uniform occupant of that depth from the same stream.

mod export;
mod state;
mod tree;

pub use export::{trace_checkpoints_csv, tree_edges_csv};
pub use state::{Attachment, ProfileState, REBUILD_DRIFT, REBUILD_PERIOD};
pub use tree::{grow_tree, grow_tree_with, TreeStorage};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{DwtError, Result};
use crate::numeric::CompensatedSum;
use crate::rng::SampleStreams;
use crate::weightfn::WeightSpec;

/// What a growth run records besides the final profile.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GrowOptions {
    /// Accumulate the holding-time clock `τ_n`.
    #[serde(default)]
    pub track_tau: bool,
    /// Record `τ_{1,k}`, the clock time at which depth `k` first appears.
    /// Implies `track_tau`.
    #[serde(default)]
    pub track_first_passage: bool,
    /// Record `J_k`: whether the second vertex of depth `k` arrived before
    /// the first vertex of depth `k + 1`.
    #[serde(default)]
    pub track_j: bool,
    /// Tree sizes at which to record a checkpoint row.
    #[serde(default)]
    pub checkpoints: Vec<u64>,
    /// Store the full profile with every checkpoint.
    #[serde(default)]
    pub checkpoint_profiles: bool,
    /// Keep the parent depth of every attachment.
    #[serde(default)]
    pub record_attachments: bool,
}

impl GrowOptions {
    fn clocked(&self) -> bool {
        self.track_tau || self.track_first_passage
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub n: u64,
    pub depth: u64,
    /// `n - d(T_n)`.
    pub z: u64,
    pub tau: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<Vec<u64>>,
}

/// Summary of one growth run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthTrace {
    pub n: u64,
    /// `d(T_n)`.
    pub final_depth: u64,
    /// `n - d(T_n)`.
    pub z_n: u64,
    pub tau_n: Option<f64>,
    /// `τ_{1,k}` for `k = 0..=final_depth`.
    pub first_passage: Option<Vec<f64>>,
    /// `J_k` for `k = 0..=final_depth`; entry 0 is always 0. Indicators whose
    /// race is still open at the end of the run read 0.
    pub j_indicators: Option<Vec<u8>>,
    pub checkpoints: Vec<Checkpoint>,
    /// Final `N_r`.
    pub profile: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attachments: Option<Vec<u32>>,
}

/// Per-run bookkeeping shared by the profile and tree drivers.
pub(crate) struct TraceRecorder {
    opts: GrowOptions,
    checkpoints: Vec<u64>,
    next_checkpoint: usize,
    tau: CompensatedSum,
    first_passage: Vec<f64>,
    j: Vec<u8>,
    rows: Vec<Checkpoint>,
    attachments: Vec<u32>,
}

impl TraceRecorder {
    pub(crate) fn new(opts: &GrowOptions, n: u64) -> Self {
        let mut checkpoints: Vec<u64> =
            opts.checkpoints.iter().copied().filter(|&c| c >= 1 && c <= n).collect();
        checkpoints.sort_unstable();
        checkpoints.dedup();
        Self {
            opts: opts.clone(),
            checkpoints,
            next_checkpoint: 0,
            tau: CompensatedSum::new(),
            first_passage: vec![0.0],
            j: vec![0],
            rows: Vec::new(),
            attachments: Vec::new(),
        }
    }

    pub(crate) fn clocked(&self) -> bool {
        self.opts.clocked()
    }

    fn checkpoint(&mut self, state: &ProfileState) {
        while self.next_checkpoint < self.checkpoints.len()
            && self.checkpoints[self.next_checkpoint] == state.n()
        {
            let depth = state.max_depth() as u64;
            self.rows.push(Checkpoint {
                n: state.n(),
                depth,
                z: state.n() - depth,
                tau: self.clocked().then(|| self.tau.value()),
                profile: self.opts.checkpoint_profiles.then(|| state.counts().to_vec()),
            });
            self.next_checkpoint += 1;
        }
    }

    pub(crate) fn start(&mut self, state: &ProfileState) {
        self.checkpoint(state);
    }

    /// Called after `state` absorbed `a`.
    pub(crate) fn observe(&mut self, state: &ProfileState, a: &Attachment) {
        if let Some(h) = a.holding_time {
            self.tau.add(h);
        }
        let k = a.new_depth;
        let fresh = k == state.max_depth() && state.count(k) == 1;
        if self.opts.track_first_passage && fresh {
            self.first_passage.push(self.tau.value());
        }
        if self.opts.track_j {
            if fresh {
                self.j.push(0);
            } else if state.count(k) == 2 && state.max_depth() == k {
                self.j[k] = 1;
            }
        }
        if self.opts.record_attachments {
            self.attachments.push(a.parent_depth as u32);
        }
        self.checkpoint(state);
    }

    pub(crate) fn finish(self, state: &ProfileState) -> GrowthTrace {
        let depth = state.max_depth() as u64;
        GrowthTrace {
            n: state.n(),
            final_depth: depth,
            z_n: state.n() - depth,
            tau_n: self.opts.clocked().then(|| self.tau.value()),
            first_passage: self.opts.track_first_passage.then_some(self.first_passage),
            j_indicators: self.opts.track_j.then_some(self.j),
            checkpoints: self.rows,
            profile: state.counts().to_vec(),
            attachments: self.opts.record_attachments.then_some(self.attachments),
        }
    }
}

/// Grow a tree to `n` vertices tracking only its depth profile, using the
/// sample-0 streams of `seed`.
pub fn grow_profile(spec: &WeightSpec, n: u64, seed: u64, opts: &GrowOptions) -> Result<GrowthTrace> {
    let mut streams = SampleStreams::new(seed, 0);
    grow_profile_with(spec, n, &mut streams.attach, &mut streams.clock, opts)
}

/// [`grow_profile`] with caller-supplied attachment and clock streams.
pub fn grow_profile_with<R: Rng + ?Sized, C: Rng + ?Sized>(
    spec: &WeightSpec,
    n: u64,
    rng: &mut R,
    clock: &mut C,
    opts: &GrowOptions,
) -> Result<GrowthTrace> {
    if n == 0 {
        return Err(DwtError::Domain("tree size n must be >= 1".into()));
    }
    let mut state = ProfileState::new(spec);
    let mut rec = TraceRecorder::new(opts, n);
    rec.start(&state);
    let clocked = rec.clocked();
    for _ in 1..n {
        let a = if clocked { state.step_clocked(rng, clock) } else { state.step(rng) };
        rec.observe(&state, &a);
    }
    Ok(rec.finish(&state))
}

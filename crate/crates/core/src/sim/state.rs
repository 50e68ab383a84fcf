use rand::Rng;
use rand_distr::{Distribution, Exp1};

use crate::mass_index::MassIndex;
use crate::rng::open_closed_unit;
use crate::weightfn::WeightSpec;

/// Rebuild when the largest mass term exceeds the anchor by this many
/// natural-log units.
pub const REBUILD_DRIFT: f64 = 200.0;
/// Unconditional rebuild period, bounding accumulated floating drift in
/// the prefix sums.
pub const REBUILD_PERIOD: u64 = 1 << 16;

/// Outcome of one attachment step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Attachment {
    pub parent_depth: usize,
    pub new_depth: usize,
    /// Exponential holding time before the new vertex is born; present only
    /// when a clock stream was supplied.
    pub holding_time: Option<f64>,
}

/// Depth profile of a growing tree together with a prefix-summable index of
/// the per-depth attachment masses `N_r f(r)`.
///
/// Masses are stored as `N_r · exp(ln f(r) - L)` for an anchor `L`, using
/// the unscaled family weight. The anchor is reset to the current largest
/// term `ln N_r + ln f(r)` whenever that term drifts more than
/// [`REBUILD_DRIFT`] above it and every [`REBUILD_PERIOD`] steps.
///
/// Depths whose term sits more than ~745 log-units below the anchor hold an
/// exact zero: their selection probability is below `1e-300`. A run of such
/// depths at the bottom of the profile is dropped from the index entirely
/// (it can never be selected again, so it can never recover), which keeps
/// rebuilds proportional to the live window rather than the full depth in
/// the exponential and super-exponential regimes.
#[derive(Debug, Clone)]
pub struct ProfileState {
    spec: WeightSpec,
    counts: Vec<u64>,
    log_weights: Vec<f64>,
    unit_mass: Vec<f64>,
    index: MassIndex,
    live_start: usize,
    anchor: f64,
    n: u64,
    steps_since_rebuild: u64,
    rebuilds: u64,
}

impl ProfileState {
    /// The single-root tree.
    pub fn new(spec: &WeightSpec) -> Self {
        let lw0 = spec.shape_log_weight(0);
        Self {
            spec: spec.clone(),
            counts: vec![1],
            log_weights: vec![lw0],
            unit_mass: vec![1.0],
            index: MassIndex::from_values(vec![1.0]),
            live_start: 0,
            anchor: lw0,
            n: 1,
            steps_since_rebuild: 0,
            rebuilds: 0,
        }
    }

    pub fn spec(&self) -> &WeightSpec {
        &self.spec
    }

    /// `N_r` for `r = 0..=max_depth`.
    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn count(&self, depth: usize) -> u64 {
        self.counts.get(depth).copied().unwrap_or(0)
    }

    pub fn max_depth(&self) -> usize {
        self.counts.len() - 1
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn anchor(&self) -> f64 {
        self.anchor
    }

    pub fn rebuilds(&self) -> u64 {
        self.rebuilds
    }

    /// Lowest depth still present in the mass index.
    pub fn live_start(&self) -> usize {
        self.live_start
    }

    /// `Σ_r N_r exp(ln f(r) - L)` over the live window, unscaled.
    pub fn total_mass(&self) -> f64 {
        self.index.total()
    }

    /// Stored (shifted) mass of depth `r`; zero outside the live window.
    pub fn mass(&self, depth: usize) -> f64 {
        if depth < self.live_start || depth > self.max_depth() {
            0.0
        } else {
            self.index.get(depth - self.live_start)
        }
    }

    /// `ln Σ_r N_r f(r)` including the spec's scale.
    pub fn log_total_rate(&self) -> f64 {
        self.anchor + self.total_mass().ln() + self.spec.scale().ln()
    }

    /// Attachment probability of depth `r` implied by the stored masses.
    pub fn attachment_probability(&self, depth: usize) -> f64 {
        self.mass(depth) / self.total_mass()
    }

    /// Heap bytes held by the state.
    pub fn heap_bytes(&self) -> usize {
        self.index.heap_bytes()
            + (self.counts.capacity() + self.log_weights.capacity() + self.unit_mass.capacity())
                * 8
    }

    fn term(&self, depth: usize) -> f64 {
        (self.counts[depth] as f64).ln() + self.log_weights[depth]
    }

    /// Sample a parent depth, add a vertex below it and update the index.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Attachment {
        let parent_depth = self.sample_depth(rng);
        self.attach_at(parent_depth, None)
    }

    /// As [`step`](Self::step), also drawing the exponential holding time
    /// (rate `Σ_r N_r f(r)` of the current tree) from `clock`.
    pub fn step_clocked<R: Rng + ?Sized, C: Rng + ?Sized>(
        &mut self,
        rng: &mut R,
        clock: &mut C,
    ) -> Attachment {
        let holding = self.holding_time(clock);
        let parent_depth = self.sample_depth(rng);
        self.attach_at(parent_depth, Some(holding))
    }

    /// Exponential waiting time until the next birth, at total rate
    /// `Σ_r N_r f(r)`. Underflows to 0 once the rate exceeds ~`1e308`.
    pub fn holding_time<C: Rng + ?Sized>(&self, clock: &mut C) -> f64 {
        let e: f64 = Exp1.sample(clock);
        e * (-self.log_total_rate()).exp()
    }

    /// Add a vertex below depth `parent_depth`.
    pub fn attach_at(&mut self, parent_depth: usize, holding_time: Option<f64>) -> Attachment {
        assert!(parent_depth <= self.max_depth(), "parent depth {parent_depth} is unoccupied");
        self.insert(parent_depth + 1);
        Attachment { parent_depth, new_depth: parent_depth + 1, holding_time }
    }

    /// Draw a depth with probability proportional to its stored mass.
    pub fn sample_depth<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let total = self.index.total();
        assert!(total > 0.0, "attachment mass underflowed to zero");
        let target = open_closed_unit(rng) * total;
        let mut pos = self.index.search(target);
        // Floating drift can leave the descent on a zero-mass slot.
        while self.index.get(pos) == 0.0 {
            pos = match pos.checked_sub(1) {
                Some(p) => p,
                None => (0..self.index.len())
                    .find(|&p| self.index.get(p) > 0.0)
                    .expect("positive mass exists"),
            };
        }
        self.live_start + pos
    }

    fn insert(&mut self, depth: usize) {
        self.n += 1;
        self.steps_since_rebuild += 1;
        let fresh = depth > self.max_depth();
        if fresh {
            debug_assert_eq!(depth, self.max_depth() + 1);
            self.counts.push(1);
            self.log_weights.push(self.spec.shape_log_weight(depth as u64));
            self.unit_mass.push(0.0);
            self.index.push(0.0);
        } else {
            self.counts[depth] += 1;
        }

        if self.term(depth) - self.anchor > REBUILD_DRIFT
            || self.steps_since_rebuild >= REBUILD_PERIOD
        {
            self.rebuild();
            return;
        }
        if fresh {
            self.unit_mass[depth] = (self.log_weights[depth] - self.anchor).exp();
        }
        let mass = self.counts[depth] as f64 * self.unit_mass[depth];
        self.index.set(depth - self.live_start, mass);
    }

    /// Re-anchor at the current largest term and rebuild the index.
    pub fn rebuild(&mut self) {
        let top = self.max_depth();
        self.anchor = (self.live_start..=top)
            .map(|r| self.term(r))
            .fold(f64::NEG_INFINITY, f64::max);
        for r in self.live_start..=top {
            self.unit_mass[r] = (self.log_weights[r] - self.anchor).exp();
        }
        while self.unit_mass[self.live_start] == 0.0 {
            self.live_start += 1;
        }
        let values = (self.live_start..=top)
            .map(|r| self.counts[r] as f64 * self.unit_mass[r])
            .collect();
        self.index.rebuild(values);
        self.steps_since_rebuild = 0;
        self.rebuilds += 1;
    }
}

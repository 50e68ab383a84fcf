use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{GrowOptions, GrowthTrace, ProfileState, TraceRecorder};
use crate::error::{DwtError, Result};
use crate::rng::SampleStreams;
use crate::weightfn::WeightSpec;

/// Parent and depth arrays of an explicit tree. Vertices are indexed from 0
/// in insertion order (vertex `i` carries label `i + 1`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeStorage {
    parent: Vec<Option<u32>>,
    depth: Vec<u32>,
}

impl TreeStorage {
    pub fn root() -> Self {
        Self { parent: vec![None], depth: vec![0] }
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn parent(&self, v: usize) -> Option<usize> {
        self.parent[v].map(|p| p as usize)
    }

    pub fn depth(&self, v: usize) -> usize {
        self.depth[v] as usize
    }

    pub fn depths(&self) -> &[u32] {
        &self.depth
    }

    pub fn max_depth(&self) -> usize {
        self.depth.iter().copied().max().unwrap_or(0) as usize
    }

    /// `N_r` recomputed from the depth array.
    pub fn profile(&self) -> Vec<u64> {
        let mut counts = vec![0u64; self.max_depth() + 1];
        for &d in &self.depth {
            counts[d as usize] += 1;
        }
        counts
    }

    /// Vertices on a root-to-leaf path of maximal length, root first.
    pub fn longest_path(&self) -> Vec<usize> {
        let Some(deepest) = (0..self.len()).max_by_key(|&v| (self.depth[v], std::cmp::Reverse(v)))
        else {
            return Vec::new();
        };
        let mut path = vec![deepest];
        let mut v = deepest;
        while let Some(p) = self.parent(v) {
            path.push(p);
            v = p;
        }
        path.reverse();
        path
    }

    fn push(&mut self, parent: usize) -> usize {
        let v = self.parent.len();
        self.parent.push(Some(parent as u32));
        self.depth.push(self.depth[parent] + 1);
        v
    }
}

/// Grow an explicit tree with `n` vertices using the sample-0 streams of
/// `seed`.
pub fn grow_tree(
    spec: &WeightSpec,
    n: u64,
    seed: u64,
    opts: &GrowOptions,
) -> Result<(TreeStorage, GrowthTrace)> {
    let mut streams = SampleStreams::new(seed, 0);
    grow_tree_with(spec, n, &mut streams.attach, &mut streams.clock, opts)
}

/// [`grow_tree`] with caller-supplied streams.
pub fn grow_tree_with<R: Rng + ?Sized, C: Rng + ?Sized>(
    spec: &WeightSpec,
    n: u64,
    rng: &mut R,
    clock: &mut C,
    opts: &GrowOptions,
) -> Result<(TreeStorage, GrowthTrace)> {
    if n == 0 {
        return Err(DwtError::Domain("tree size n must be >= 1".into()));
    }
    if n > u32::MAX as u64 {
        return Err(DwtError::Domain(format!("tree size {n} exceeds the 32-bit label range")));
    }
    let mut state = ProfileState::new(spec);
    let mut tree = TreeStorage::root();
    let mut occupants: Vec<Vec<u32>> = vec![vec![0]];
    let mut rec = TraceRecorder::new(opts, n);
    rec.start(&state);
    let clocked = rec.clocked();
    for _ in 1..n {
        let holding = clocked.then(|| state.holding_time(clock));
        let r = state.sample_depth(rng);
        let slot = &occupants[r];
        let parent = slot[rng.random_range(0..slot.len())] as usize;
        let a = state.attach_at(r, holding);
        let v = tree.push(parent);
        if a.new_depth == occupants.len() {
            occupants.push(Vec::new());
        }
        occupants[a.new_depth].push(v as u32);
        rec.observe(&state, &a);
    }
    Ok((tree, rec.finish(&state)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn second_vertex_hangs_off_the_root() {
        let spec = WeightSpec::exponential(2.0).unwrap();
        let (tree, trace) = grow_tree(&spec, 2, 3, &GrowOptions::default()).unwrap();
        assert_eq!(tree.parent(1), Some(0));
        assert_eq!(tree.depth(1), 1);
        assert_eq!(trace.final_depth, 1);
    }

    #[test]
    fn tree_invariants_and_profile_agreement() {
        for (i, spec) in [
            WeightSpec::constant(1.0).unwrap(),
            WeightSpec::exponential(1.4).unwrap(),
            WeightSpec::factorial_power(1.0).unwrap(),
        ]
        .iter()
        .enumerate()
        {
            let (tree, trace) = grow_tree(spec, 3_000, 40 + i as u64, &GrowOptions::default()).unwrap();
            assert_eq!(tree.len(), 3_000);
            assert_eq!(tree.parent(0), None);
            for v in 1..tree.len() {
                let p = tree.parent(v).unwrap();
                assert!(p < v);
                assert_eq!(tree.depth(v), tree.depth(p) + 1);
            }
            assert_eq!(tree.profile(), trace.profile);
            assert_eq!(tree.max_depth() as u64, trace.final_depth);
            let path = tree.longest_path();
            assert_eq!(path.len() as u64, trace.final_depth + 1);
            assert_eq!(path[0], 0);
        }
    }

    #[test]
    fn zero_size_is_rejected() {
        let spec = WeightSpec::constant(1.0).unwrap();
        assert!(grow_tree(&spec, 0, 1, &GrowOptions::default()).is_err());
    }
}

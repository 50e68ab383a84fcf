//! Growable binary indexed tree over non-negative `f64` masses.
//!
//! Supports point updates, appends and weighted sampling by prefix-sum
//! descent, each in `O(log n)`. Values are kept alongside the tree so that a
//! point can be overwritten without reading it back through prefix sums.

#[derive(Debug, Clone, Default)]
pub struct MassIndex {
    // 1-based; tree[0] is unused.
    tree: Vec<f64>,
    values: Vec<f64>,
}

#[inline]
fn lowbit(i: usize) -> usize {
    i & i.wrapping_neg()
}

impl MassIndex {
    pub fn new() -> Self {
        Self { tree: vec![0.0], values: Vec::new() }
    }

    /// Linear-time construction.
    pub fn from_values(values: Vec<f64>) -> Self {
        let mut index = Self::new();
        index.rebuild(values);
        index
    }

    /// Replace every value, reusing the allocation.
    pub fn rebuild(&mut self, values: Vec<f64>) {
        let n = values.len();
        self.tree.clear();
        self.tree.push(0.0);
        self.tree.extend_from_slice(&values);
        for i in 1..=n {
            let parent = i + lowbit(i);
            if parent <= n {
                self.tree[parent] += self.tree[i];
            }
        }
        self.values = values;
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, pos: usize) -> f64 {
        self.values[pos]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn push(&mut self, value: f64) {
        let i = self.values.len() + 1;
        // tree[i] covers (i - lowbit(i), i]; its children are already built.
        let mut node = value;
        let stop = i - lowbit(i);
        let mut j = i - 1;
        while j > stop {
            node += self.tree[j];
            j -= lowbit(j);
        }
        self.tree.push(node);
        self.values.push(value);
    }

    pub fn add(&mut self, pos: usize, delta: f64) {
        self.values[pos] += delta;
        let mut i = pos + 1;
        while i < self.tree.len() {
            self.tree[i] += delta;
            i += lowbit(i);
        }
    }

    pub fn set(&mut self, pos: usize, value: f64) {
        let delta = value - self.values[pos];
        let mut i = pos + 1;
        while i < self.tree.len() {
            self.tree[i] += delta;
            i += lowbit(i);
        }
        self.values[pos] = value;
    }

    /// Sum of the first `count` values.
    pub fn prefix(&self, count: usize) -> f64 {
        let mut sum = 0.0;
        let mut i = count.min(self.len());
        while i > 0 {
            sum += self.tree[i];
            i -= lowbit(i);
        }
        sum
    }

    pub fn total(&self) -> f64 {
        self.prefix(self.len())
    }

    /// Smallest position `p` whose inclusive prefix sum reaches `target`;
    /// a target landing exactly on a boundary selects the lower position.
    /// Targets above the total clamp to the last position.
    pub fn search(&self, target: f64) -> usize {
        let n = self.len();
        debug_assert!(n > 0);
        let mut pos = 0;
        let mut rem = target;
        let mut step = if n == 0 { 0 } else { 1 << (usize::BITS - 1 - n.leading_zeros()) };
        while step > 0 {
            let next = pos + step;
            if next <= n && self.tree[next] < rem {
                pos = next;
                rem -= self.tree[next];
            }
            step >>= 1;
        }
        pos.min(n - 1)
    }

    pub fn heap_bytes(&self) -> usize {
        (self.tree.capacity() + self.values.capacity()) * std::mem::size_of::<f64>()
    }
}

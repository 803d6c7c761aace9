/// Binary indexed tree over non-negative integer weights that can grow at
/// the end. Prefix sums, point increments, appends and inverse-CDF search
/// are all O(log n).
#[derive(Debug, Clone, Default)]
pub struct Fenwick {
    // 1-based; tree[0] unused
    tree: Vec<u64>,
    total: u64,
}

#[inline]
fn lsb(i: usize) -> usize {
    i & i.wrapping_neg()
}

impl Fenwick {
    pub fn new() -> Self {
        Self {
            tree: vec![0],
            total: 0,
        }
    }

    pub fn with_capacity(capacity: usize) -> Self {
        let mut tree = Vec::with_capacity(capacity + 1);
        tree.push(0);
        Self { tree, total: 0 }
    }

    pub fn from_weights(weights: &[u64]) -> Self {
        let mut tree = Vec::with_capacity(weights.len() + 1);
        tree.push(0);
        tree.extend_from_slice(weights);
        for i in 1..tree.len() {
            let j = i + lsb(i);
            if j < tree.len() {
                tree[j] += tree[i];
            }
        }
        Self {
            total: weights.iter().sum(),
            tree,
        }
    }

    pub fn len(&self) -> usize {
        self.tree.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Sum of the first `count` weights.
    pub fn prefix(&self, count: usize) -> u64 {
        let mut i = count.min(self.len());
        let mut acc = 0;
        while i > 0 {
            acc += self.tree[i];
            i -= lsb(i);
        }
        acc
    }

    /// Appends a weight at position `len()`.
    pub fn push(&mut self, weight: u64) {
        let i = self.tree.len();
        // node i covers (i - lsb(i), i]; sum the child nodes below it
        let stop = i - lsb(i);
        let mut j = i - 1;
        let mut covered = 0;
        while j > stop {
            covered += self.tree[j];
            j -= lsb(j);
        }
        self.tree.push(weight + covered);
        self.total += weight;
    }

    pub fn add(&mut self, pos: usize, delta: u64) {
        assert!(pos < self.len(), "position {pos} out of range");
        let mut i = pos + 1;
        while i < self.tree.len() {
            self.tree[i] += delta;
            i += lsb(i);
        }
        self.total += delta;
    }

    /// Smallest position whose inclusive prefix sum exceeds `target`.
    /// Requires `target < total()`.
    pub fn search(&self, mut target: u64) -> usize {
        debug_assert!(target < self.total);
        let n = self.len();
        let mut pos = 0;
        let mut step = if n == 0 {
            0
        } else {
            1 << (usize::BITS - 1 - n.leading_zeros())
        };
        while step > 0 {
            let next = pos + step;
            if next <= n && self.tree[next] <= target {
                pos = next;
                target -= self.tree[next];
            }
            step >>= 1;
        }
        pos
    }
}

//! Binary-indexed prefix sums over non-negative `f64` weights with
//! cumulative search, used for event selection.

#[derive(Debug, Clone, Default)]
pub struct PrefixIndex {
    // 1-based Fenwick layout; tree[0] unused.
    tree: Vec<f64>,
    values: Vec<f64>,
}

impl PrefixIndex {
    pub fn from_values(values: &[f64]) -> Self {
        let mut index = Self::default();
        index.rebuild(values);
        index
    }

    /// Rebuilds in `O(n)` from a fresh set of values.
    pub fn rebuild(&mut self, values: &[f64]) {
        let n = values.len();
        self.values.clear();
        self.values.extend_from_slice(values);
        self.tree.clear();
        self.tree.resize(n + 1, 0.0);
        self.tree[1..].copy_from_slice(values);
        for i in 1..=n {
            let parent = i + (i & i.wrapping_neg());
            if parent <= n {
                self.tree[parent] += self.tree[i];
            }
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn get(&self, i: usize) -> f64 {
        self.values[i]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Sets entry `i` to `value` in `O(log n)`.
    pub fn set(&mut self, i: usize, value: f64) {
        let delta = value - self.values[i];
        self.values[i] = value;
        if delta == 0.0 {
            return;
        }
        let n = self.values.len();
        let mut k = i + 1;
        while k <= n {
            self.tree[k] += delta;
            k += k & k.wrapping_neg();
        }
    }

    /// Sum of the first `count` entries.
    pub fn prefix(&self, count: usize) -> f64 {
        let mut k = count.min(self.values.len());
        let mut sum = 0.0;
        while k > 0 {
            sum += self.tree[k];
            k &= k - 1;
        }
        sum
    }

    pub fn total(&self) -> f64 {
        self.prefix(self.values.len())
    }

    /// Index `k` with `prefix(k) < target <= prefix(k + 1)`.
    ///
    /// A zero target selects the first positive entry. Targets past the
    /// total (round-off) select the last positive entry. Returns `None` when
    /// every entry is zero.
    pub fn search(&self, target: f64) -> Option<usize> {
        let n = self.values.len();
        if n == 0 {
            return None;
        }
        let mut pos = 0;
        let mut remaining = target;
        let mut step = 1usize << (usize::BITS - 1 - n.leading_zeros());
        while step > 0 {
            let next = pos + step;
            if next <= n {
                let block = self.tree[next];
                let descend = if target > 0.0 {
                    block < remaining
                } else {
                    block <= remaining
                };
                if descend {
                    pos = next;
                    remaining -= block;
                }
            }
            step >>= 1;
        }
        if pos < n && self.values[pos] > 0.0 {
            return Some(pos);
        }
        // round-off landed on a zero entry or past the end
        self.values[pos.min(n - 1)..]
            .iter()
            .position(|&v| v > 0.0)
            .map(|d| pos.min(n - 1) + d)
            .or_else(|| self.values.iter().rposition(|&v| v > 0.0))
    }
}

//! Binary-indexed sums over non-negative site rates.

#[derive(Debug, Clone)]
pub struct Fenwick {
    tree: Vec<f64>,
    values: Vec<f64>,
}

impl Fenwick {
    pub fn new(values: Vec<f64>) -> Self {
        let mut f = Fenwick {
            tree: vec![0.0; values.len() + 1],
            values,
        };
        f.rebuild();
        f
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn value(&self, i: usize) -> f64 {
        self.values[i]
    }

    /// Recomputes every node from the stored values in O(n).
    pub fn rebuild(&mut self) {
        self.tree.iter_mut().for_each(|t| *t = 0.0);
        for i in 1..self.tree.len() {
            self.tree[i] += self.values[i - 1];
            let parent = i + (i & i.wrapping_neg());
            if parent < self.tree.len() {
                self.tree[parent] += self.tree[i];
            }
        }
    }

    pub fn set(&mut self, i: usize, v: f64) {
        let delta = v - self.values[i];
        self.values[i] = v;
        let mut j = i + 1;
        while j < self.tree.len() {
            self.tree[j] += delta;
            j += j & j.wrapping_neg();
        }
    }

    /// Sum of all values, read off the tree.
    pub fn total(&self) -> f64 {
        let mut s = 0.0;
        let mut j = self.values.len();
        while j > 0 {
            s += self.tree[j];
            j &= j - 1;
        }
        s
    }

    /// Smallest `i` whose inclusive prefix sum exceeds `u`, restricted to
    /// sites of positive value.
    pub fn find(&self, u: f64) -> usize {
        let n = self.values.len();
        let mut pos = 0;
        let mut rem = u;
        let mut step = n.next_power_of_two();
        while step > 0 {
            let next = pos + step;
            if next <= n && self.tree[next] <= rem {
                rem -= self.tree[next];
                pos = next;
            }
            step >>= 1;
        }
        // Rounding can land on a zero-rate site or past the end.
        let i = pos.min(n - 1);
        if self.values[i] > 0.0 {
            return i;
        }
        (0..i)
            .rev()
            .chain(i + 1..n)
            .find(|&j| self.values[j] > 0.0)
            .unwrap_or(i)
    }
}

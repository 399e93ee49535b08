//! Binary indexed tree over nonnegative weights with prefix-sum search.

#[derive(Debug, Clone)]
pub struct Fenwick {
    tree: Vec<f64>,
    values: Vec<f64>,
}

impl Fenwick {
    pub fn new(values: &[f64]) -> Self {
        let mut f = Self { tree: vec![0.0; values.len() + 1], values: values.to_vec() };
        f.rebuild();
        f
    }

    /// Recomputes every node from the stored values, clearing drift from updates.
    pub fn rebuild(&mut self) {
        let n = self.values.len();
        self.tree.iter_mut().for_each(|x| *x = 0.0);
        for i in 1..=n {
            self.tree[i] += self.values[i - 1];
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

    pub fn get(&self, k: usize) -> f64 {
        self.values[k]
    }

    pub fn set(&mut self, k: usize, v: f64) {
        let delta = v - self.values[k];
        if delta == 0.0 {
            return;
        }
        self.values[k] = v;
        let mut i = k + 1;
        while i < self.tree.len() {
            self.tree[i] += delta;
            i += i & i.wrapping_neg();
        }
    }

    pub fn total(&self) -> f64 {
        let mut s = 0.0;
        let mut i = self.values.len();
        while i > 0 {
            s += self.tree[i];
            i -= i & i.wrapping_neg();
        }
        s
    }

    /// Smallest `k` with `v_0 + ... + v_k > target`, restricted to positive
    /// weights; `None` when rounding pushes `target` past the total.
    pub fn search(&self, mut target: f64) -> Option<usize> {
        let n = self.values.len();
        let mut pos = 0;
        let mut step = n.next_power_of_two();
        while step > 0 {
            let next = pos + step;
            if next <= n && self.tree[next] <= target {
                pos = next;
                target -= self.tree[next];
            }
            step >>= 1;
        }
        if pos < n && self.values[pos] > 0.0 {
            Some(pos)
        } else {
            // land on the nearest positive weight below when rounding overshoots
            self.values[..pos.min(n)].iter().rposition(|&v| v > 0.0)
        }
    }
}

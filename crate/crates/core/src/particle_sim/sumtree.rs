//! Binary sum tree over per-particle weights.
//!
//! Interior nodes are always recomputed from their children, so the total
//! never accumulates round-off from repeated add/subtract.

#[derive(Debug, Clone)]
pub(crate) struct SumTree {
    cap: usize,
    len: usize,
    nodes: Vec<f64>,
}

impl SumTree {
    pub(crate) fn with_capacity(n: usize) -> Self {
        let cap = n.max(1).next_power_of_two();
        Self {
            cap,
            len: 0,
            nodes: vec![0.0; 2 * cap],
        }
    }

    #[cfg(test)]
    pub(crate) fn len(&self) -> usize {
        self.len
    }

    pub(crate) fn total(&self) -> f64 {
        self.nodes[1]
    }

    pub(crate) fn get(&self, i: usize) -> f64 {
        self.nodes[self.cap + i]
    }

    fn grow(&mut self) {
        let old = std::mem::replace(self, Self::with_capacity(2 * self.cap));
        self.len = old.len;
        self.nodes[self.cap..self.cap + old.len]
            .copy_from_slice(&old.nodes[old.cap..old.cap + old.len]);
        for k in (1..self.cap).rev() {
            self.nodes[k] = self.nodes[2 * k] + self.nodes[2 * k + 1];
        }
    }

    pub(crate) fn set(&mut self, i: usize, w: f64) {
        debug_assert!(i < self.len);
        let mut k = self.cap + i;
        self.nodes[k] = w.max(0.0);
        while k > 1 {
            k /= 2;
            self.nodes[k] = self.nodes[2 * k] + self.nodes[2 * k + 1];
        }
    }

    pub(crate) fn add(&mut self, i: usize, dw: f64) {
        let w = self.get(i) + dw;
        self.set(i, w);
    }

    pub(crate) fn push(&mut self, w: f64) {
        if self.len == self.cap {
            self.grow();
        }
        self.len += 1;
        self.set(self.len - 1, w);
    }

    /// Remove entry `i` by moving the last entry into its place.
    pub(crate) fn swap_remove(&mut self, i: usize) {
        let last = self.len - 1;
        if i != last {
            let w = self.get(last);
            self.set(i, w);
        }
        self.set(last, 0.0);
        self.len -= 1;
    }

    /// Index `i` with `prefix(i) <= u < prefix(i + 1)`, for `u` in `[0, total)`.
    pub(crate) fn find(&self, mut u: f64) -> usize {
        let mut k = 1;
        while k < self.cap {
            let left = self.nodes[2 * k];
            if u < left || self.nodes[2 * k + 1] <= 0.0 {
                k *= 2;
            } else {
                u -= left;
                k = 2 * k + 1;
            }
        }
        (k - self.cap).min(self.len.saturating_sub(1))
    }
}

//! Binary indexed tree over non-negative integer weights, used to draw an
//! index with probability proportional to its weight.

#[derive(Debug, Clone)]
pub struct Fenwick {
    tree: Vec<u64>,
    weights: Vec<u64>,
    total: u64,
}

impl Fenwick {
    pub fn new(len: usize) -> Self {
        Fenwick {
            tree: vec![0; len + 1],
            weights: vec![0; len],
            total: 0,
        }
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn set(&mut self, idx: usize, w: u64) {
        let old = self.weights[idx];
        if old == w {
            return;
        }
        self.weights[idx] = w;
        self.total = self.total + w - old;
        let mut i = idx + 1;
        if w > old {
            let d = w - old;
            while i < self.tree.len() {
                self.tree[i] += d;
                i += i & i.wrapping_neg();
            }
        } else {
            let d = old - w;
            while i < self.tree.len() {
                self.tree[i] -= d;
                i += i & i.wrapping_neg();
            }
        }
    }

    /// Smallest index whose inclusive prefix sum exceeds `r`. Requires
    /// `r < total()`.
    pub fn find(&self, mut r: u64) -> usize {
        debug_assert!(r < self.total);
        let mut pos = 0usize;
        let mut step = self.tree.len().next_power_of_two() >> 1;
        while step > 0 {
            let next = pos + step;
            if next < self.tree.len() && self.tree[next] <= r {
                r -= self.tree[next];
                pos = next;
            }
            step >>= 1;
        }
        pos
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn find_matches_linear_scan() {
        let ws = [0u64, 3, 0, 1, 5, 0, 2];
        let mut f = Fenwick::new(ws.len());
        for (i, &w) in ws.iter().enumerate() {
            f.set(i, w);
        }
        assert_eq!(f.total(), 11);
        for r in 0..11 {
            let mut acc = 0;
            let expect = ws
                .iter()
                .position(|&w| {
                    acc += w;
                    acc > r
                })
                .unwrap();
            assert_eq!(f.find(r), expect, "r = {r}");
        }
        f.set(4, 0);
        assert_eq!(f.total(), 6);
        assert_eq!(f.find(4), 6);
    }
}

/// Array-backed binary max-heap of vertex indices keyed by local fitness.
///
/// Only the root is guaranteed to be the maximum; position `r` of the array
/// serves as an approximate rank `r + 1`. A position index allows a single
/// vertex's key change to be repaired in logarithmic time.
#[derive(Debug, Clone)]
pub struct RankHeap {
    heap: Vec<usize>,
    pos: Vec<usize>,
}

impl RankHeap {
    pub fn build(keys: &[f64]) -> Self {
        let n = keys.len();
        let mut h = Self {
            heap: (0..n).collect(),
            pos: (0..n).collect(),
        };
        for idx in (0..n / 2).rev() {
            h.sift_down(idx, keys);
        }
        h
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    /// Vertex stored at array position `idx` (0 is the root).
    pub fn at(&self, idx: usize) -> usize {
        self.heap[idx]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.heap
    }

    /// Restores heap order after the key of `vertex` changed.
    pub fn update(&mut self, vertex: usize, keys: &[f64]) {
        let idx = self.pos[vertex];
        let idx = self.sift_up(idx, keys);
        self.sift_down(idx, keys);
    }

    pub fn is_heap(&self, keys: &[f64]) -> bool {
        (1..self.heap.len()).all(|c| keys[self.heap[(c - 1) / 2]] >= keys[self.heap[c]])
            && self.heap.iter().enumerate().all(|(i, &v)| self.pos[v] == i)
    }

    fn swap(&mut self, a: usize, b: usize) {
        self.heap.swap(a, b);
        self.pos[self.heap[a]] = a;
        self.pos[self.heap[b]] = b;
    }

    fn sift_up(&mut self, mut idx: usize, keys: &[f64]) -> usize {
        while idx > 0 {
            let parent = (idx - 1) / 2;
            if keys[self.heap[parent]] >= keys[self.heap[idx]] {
                break;
            }
            self.swap(parent, idx);
            idx = parent;
        }
        idx
    }

    fn sift_down(&mut self, mut idx: usize, keys: &[f64]) {
        let n = self.heap.len();
        loop {
            let left = 2 * idx + 1;
            if left >= n {
                break;
            }
            let right = left + 1;
            let mut child = left;
            if right < n && keys[self.heap[right]] > keys[self.heap[left]] {
                child = right;
            }
            if keys[self.heap[idx]] >= keys[self.heap[child]] {
                break;
            }
            self.swap(idx, child);
            idx = child;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn updates_keep_heap_order(
            mut keys in prop::collection::vec(0.0f64..10.0, 1..40),
            changes in prop::collection::vec((0usize..40, 0.0f64..10.0), 0..60),
        ) {
            let mut heap = RankHeap::build(&keys);
            prop_assert!(heap.is_heap(&keys));
            for (v, key) in changes {
                let v = v % keys.len();
                keys[v] = key;
                heap.update(v, &keys);
                prop_assert!(heap.is_heap(&keys));
            }
            let max = keys.iter().cloned().fold(f64::MIN, f64::max);
            prop_assert_eq!(keys[heap.at(0)], max);
        }
    }
}

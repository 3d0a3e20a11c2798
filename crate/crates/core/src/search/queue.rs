//! Dial-style bucket queue with ordered buckets.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

/// Integer-priority queue. Buckets are indexed by priority; inside a bucket
/// items come out in ascending `Ord` order. Popping scans forward from a
/// cursor, which moves back only if something is pushed below it.
#[derive(Debug, Clone)]
pub struct BucketQueue<T: Ord> {
    base: i64,
    buckets: Vec<BinaryHeap<Reverse<T>>>,
    cursor: usize,
    len: usize,
}

impl<T: Ord> Default for BucketQueue<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Ord> BucketQueue<T> {
    pub fn new() -> Self {
        Self {
            base: 0,
            buckets: Vec::new(),
            cursor: 0,
            len: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn clear(&mut self) {
        self.buckets.clear();
        self.cursor = 0;
        self.len = 0;
    }

    pub fn push(&mut self, prio: i64, item: T) {
        if self.len == 0 && self.buckets.is_empty() {
            self.base = prio;
        }
        if prio < self.base {
            let shift = (self.base - prio) as usize;
            let mut fresh: Vec<BinaryHeap<Reverse<T>>> =
                (0..shift).map(|_| BinaryHeap::new()).collect();
            fresh.append(&mut self.buckets);
            self.buckets = fresh;
            self.cursor += shift;
            self.base = prio;
        }
        let idx = (prio - self.base) as usize;
        if idx >= self.buckets.len() {
            self.buckets.resize_with(idx + 1, BinaryHeap::new);
        }
        self.buckets[idx].push(Reverse(item));
        self.cursor = self.cursor.min(idx);
        self.len += 1;
    }

    fn advance(&mut self) -> Option<usize> {
        if self.len == 0 {
            return None;
        }
        while self.buckets[self.cursor].is_empty() {
            self.cursor += 1;
        }
        Some(self.cursor)
    }

    pub fn pop(&mut self) -> Option<(i64, T)> {
        let c = self.advance()?;
        let Reverse(item) = self.buckets[c].pop()?;
        self.len -= 1;
        Some((self.base + c as i64, item))
    }

    pub fn peek_priority(&mut self) -> Option<i64> {
        let c = self.advance()?;
        Some(self.base + c as i64)
    }

    /// Smallest and largest non-empty priorities.
    pub fn priority_span(&self) -> Option<(i64, i64)> {
        let lo = self.buckets.iter().position(|b| !b.is_empty())?;
        let hi = self.buckets.iter().rposition(|b| !b.is_empty())?;
        Some((self.base + lo as i64, self.base + hi as i64))
    }
}

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::Node;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy)]
struct Entry<T> {
    key: T,
    node: Node,
}

impl<T: Real> PartialEq for Entry<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<T: Real> Eq for Entry<T> {}

impl<T: Real> PartialOrd for Entry<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T: Real> Ord for Entry<T> {
    // Reversed so that `BinaryHeap` pops the smallest key, then the
    // lexicographically smallest node.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .key
            .partial_cmp(&self.key)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.node.cmp(&self.node))
    }
}

/// Min-heap of tentative distances. Decrease-key is a fresh push; callers
/// discard stale pops by comparing against the node's current record.
#[derive(Debug, Default)]
pub struct FrontierHeap<T> {
    inner: BinaryHeap<Entry<T>>,
}

impl<T: Real> FrontierHeap<T> {
    pub fn new() -> Self {
        Self {
            inner: BinaryHeap::new(),
        }
    }

    pub fn push(&mut self, key: T, node: Node) {
        debug_assert!(!key.is_nan());
        self.inner.push(Entry { key, node });
    }

    pub fn pop(&mut self) -> Option<(T, Node)> {
        self.inner.pop().map(|e| (e.key, e.node))
    }

    /// Pops until an entry passes `is_current`.
    pub fn pop_current(&mut self, mut is_current: impl FnMut(T, &Node) -> bool) -> Option<(T, Node)> {
        while let Some((key, node)) = self.pop() {
            if is_current(key, &node) {
                return Some((key, node));
            }
        }
        None
    }

    pub fn len(&self) -> usize {
        self.inner.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inner.is_empty()
    }
}

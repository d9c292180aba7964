//! Bounded max-heap of the closest recurrences to a reference point.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// One stored visit: its distance to the reference point, the visiting state
/// and the time index at which it occurred.
#[derive(Clone, Debug)]
pub struct Recurrence<S> {
    pub distance: f64,
    pub state: S,
    pub index: u64,
}

impl<S> Recurrence<S> {
    fn key_cmp(&self, other: &Self) -> Ordering {
        self.distance
            .total_cmp(&other.distance)
            .then(self.index.cmp(&other.index))
    }
}

impl<S> PartialEq for Recurrence<S> {
    fn eq(&self, other: &Self) -> bool {
        self.key_cmp(other) == Ordering::Equal
    }
}

impl<S> Eq for Recurrence<S> {}

impl<S> PartialOrd for Recurrence<S> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<S> Ord for Recurrence<S> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key_cmp(other)
    }
}

/// The `k` visits with the smallest `(distance, index)` keys seen so far.
///
/// Keys are totally ordered, so the retained set does not depend on the
/// order in which visits are offered. Besides the stored visits the buffer
/// remembers the smallest rejected or evicted distance, the `(k+1)`-th
/// order statistic, which separates the stored set from the rest of the
/// orbit.
#[derive(Clone, Debug)]
pub struct RecurrenceBuffer<S> {
    capacity: usize,
    heap: BinaryHeap<Recurrence<S>>,
    outer: f64,
    offered: u64,
    zero_hits: u64,
}

impl<S> RecurrenceBuffer<S> {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "recurrence buffer needs a positive capacity");
        RecurrenceBuffer {
            capacity,
            heap: BinaryHeap::with_capacity(capacity + 1),
            outer: f64::INFINITY,
            offered: 0,
            zero_hits: 0,
        }
    }

    /// Offer a visit. Returns whether it was stored.
    ///
    /// Zero distances are exact hits of the reference point and carry no
    /// scale information; they are counted and dropped.
    pub fn offer(&mut self, distance: f64, state: S, index: u64) -> bool {
        self.offered += 1;
        if distance == 0.0 {
            self.zero_hits += 1;
            return false;
        }
        debug_assert!(
            distance > 0.0,
            "distances must be non-negative, got {distance}"
        );
        if self.heap.len() < self.capacity {
            self.heap.push(Recurrence {
                distance,
                state,
                index,
            });
            return true;
        }
        let top = self.heap.peek().expect("buffer is full");
        let accept = distance < top.distance || (distance == top.distance && index < top.index);
        if !accept {
            self.outer = self.outer.min(distance);
            return false;
        }
        let evicted = self.heap.pop().expect("buffer is full");
        self.outer = self.outer.min(evicted.distance);
        self.heap.push(Recurrence {
            distance,
            state,
            index,
        });
        true
    }

    /// Record a visit known to be rejected without materialising its state.
    pub(crate) fn offer_rejected(&mut self, distance: f64) {
        self.offered += 1;
        self.outer = self.outer.min(distance);
    }

    pub(crate) fn offer_zero(&mut self) {
        self.offered += 1;
        self.zero_hits += 1;
    }

    /// Cheap pre-check: would a visit at this distance be stored?
    #[inline]
    pub fn would_accept(&self, distance: f64) -> bool {
        distance > 0.0
            && (self.heap.len() < self.capacity
                || distance <= self.heap.peek().map_or(f64::INFINITY, |t| t.distance))
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.heap.len() == self.capacity
    }

    /// Largest stored distance: the current ball radius.
    pub fn radius(&self) -> f64 {
        self.heap.peek().map_or(f64::INFINITY, |t| t.distance)
    }

    /// Smallest distance ever rejected or evicted; infinite while nothing
    /// has been turned away.
    pub fn outer_radius(&self) -> f64 {
        self.outer
    }

    pub fn offered(&self) -> u64 {
        self.offered
    }

    pub fn zero_hits(&self) -> u64 {
        self.zero_hits
    }

    /// Stored distances in ascending order.
    pub fn distances(&self) -> Vec<f64> {
        let mut d: Vec<f64> = self.heap.iter().map(|e| e.distance).collect();
        d.sort_by(f64::total_cmp);
        d
    }

    /// Stored visits in ascending key order.
    pub fn sorted(&self) -> Vec<&Recurrence<S>> {
        let mut v: Vec<&Recurrence<S>> = self.heap.iter().collect();
        v.sort();
        v
    }

    pub fn into_sorted(self) -> Vec<Recurrence<S>> {
        self.heap.into_sorted_vec()
    }

    pub fn count_within(&self, r: f64) -> usize {
        self.heap.iter().filter(|e| e.distance <= r).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use proptest::prelude::*;
    use rand::seq::SliceRandom;
    use rand::Rng;

    #[test]
    fn keeps_smallest_and_tracks_outer() {
        let mut b = RecurrenceBuffer::new(3);
        for (i, d) in [5.0, 1.0, 4.0, 2.0, 3.0, 6.0].into_iter().enumerate() {
            b.offer(d, (), i as u64);
        }
        assert_eq!(b.distances(), vec![1.0, 2.0, 3.0]);
        assert_eq!(b.radius(), 3.0);
        assert_eq!(b.outer_radius(), 4.0);
        assert_eq!(b.offered(), 6);
        assert_eq!(b.count_within(2.0), 2);
    }

    #[test]
    fn zero_distances_are_dropped() {
        let mut b = RecurrenceBuffer::new(2);
        assert!(!b.offer(0.0, (), 0));
        assert!(b.is_empty());
        assert_eq!(b.zero_hits(), 1);
    }

    #[test]
    fn constant_distances_fill_and_stay() {
        let mut b = RecurrenceBuffer::new(10);
        for i in 0..100 {
            b.offer(0.7, i, i);
        }
        assert!(b.is_full());
        assert!(b.distances().iter().all(|&d| d == 0.7));
        // ties resolve to the earliest indices
        let idx: Vec<u64> = b.sorted().iter().map(|e| e.index).collect();
        assert_eq!(idx, (0..10).collect::<Vec<_>>());
        assert_eq!(b.outer_radius(), 0.7);
    }

    #[test]
    fn uniform_order_statistic() {
        // k-th closest of n uniform points on [0,1] to 0.5 sits near k/(2n)
        let (n, k) = (200_000usize, 500usize);
        let mut r = rng::stream(41, 0);
        let mut b = RecurrenceBuffer::new(k);
        for i in 0..n {
            b.offer((r.random::<f64>() - 0.5).abs(), (), i as u64);
        }
        let expect = k as f64 / (2.0 * n as f64);
        let se = expect / (k as f64).sqrt();
        assert!(
            (b.radius() - expect).abs() < 3.0 * se,
            "r={} expect={expect}",
            b.radius()
        );
    }

    proptest! {
        #[test]
        fn shuffle_invariant(seed in any::<u64>(), k in 1usize..40) {
            let mut r = rng::stream(seed, 0);
            let mut pts: Vec<(f64, u64)> = (0..300)
                .map(|i| ((r.random_range(0..50) as f64) / 7.0 + 0.1, i))
                .collect();
            let mut a = RecurrenceBuffer::new(k);
            for &(d, i) in &pts {
                a.offer(d, (), i);
            }
            pts.shuffle(&mut r);
            let mut b = RecurrenceBuffer::new(k);
            for &(d, i) in &pts {
                b.offer(d, (), i);
            }
            let ka: Vec<(f64, u64)> = a.sorted().iter().map(|e| (e.distance, e.index)).collect();
            let kb: Vec<(f64, u64)> = b.sorted().iter().map(|e| (e.distance, e.index)).collect();
            prop_assert_eq!(ka, kb);
            prop_assert_eq!(a.outer_radius(), b.outer_radius());
        }

        #[test]
        fn radius_never_grows_once_full(seed in any::<u64>()) {
            let mut r = rng::stream(seed, 0);
            let mut b = RecurrenceBuffer::new(16);
            let mut last = f64::INFINITY;
            for i in 0..500 {
                b.offer(r.random::<f64>() + 1e-9, (), i);
                if b.is_full() {
                    prop_assert!(b.radius() <= last);
                    prop_assert!(b.radius() <= b.outer_radius() || b.outer_radius().is_infinite());
                    last = b.radius();
                }
            }
        }
    }
}

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::SimError;
use crate::Nanos;

struct Entry<E> {
    time: Nanos,
    seq: u64,
    event: E,
}

impl<E> PartialEq for Entry<E> {
    fn eq(&self, other: &Self) -> bool {
        (self.time, self.seq) == (other.time, other.seq)
    }
}

impl<E> Eq for Entry<E> {}

impl<E> PartialOrd for Entry<E> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

// Reversed so the max-heap pops the earliest (time, seq) first.
impl<E> Ord for Entry<E> {
    fn cmp(&self, other: &Self) -> Ordering {
        (other.time, other.seq).cmp(&(self.time, self.seq))
    }
}

/// Discrete-event timeline. Events at equal times run in insertion order.
pub struct Engine<E> {
    now: Nanos,
    next_seq: u64,
    heap: BinaryHeap<Entry<E>>,
    executed: u64,
}

impl<E> Default for Engine<E> {
    fn default() -> Self {
        Self::new(0)
    }
}

impl<E> Engine<E> {
    pub fn new(start: Nanos) -> Self {
        Self {
            now: start,
            next_seq: 0,
            heap: BinaryHeap::new(),
            executed: 0,
        }
    }

    pub fn now(&self) -> Nanos {
        self.now
    }

    pub fn executed(&self) -> u64 {
        self.executed
    }

    pub fn pending(&self) -> usize {
        self.heap.len()
    }

    pub fn schedule(&mut self, time: Nanos, event: E) -> Result<(), SimError> {
        if time < self.now {
            return Err(SimError::EventInPast {
                time,
                now: self.now,
            });
        }
        self.heap.push(Entry {
            time,
            seq: self.next_seq,
            event,
        });
        self.next_seq += 1;
        Ok(())
    }

    /// Removes the next event if it is due no later than `t_end`.
    pub fn pop_until(&mut self, t_end: Nanos) -> Option<(Nanos, E)> {
        if self.heap.peek()?.time > t_end {
            return None;
        }
        let e = self.heap.pop()?;
        self.now = e.time;
        self.executed += 1;
        Some((e.time, e.event))
    }

    /// Executes every event with time `<= t_end`, handing each to `handler`,
    /// and returns how many ran.
    pub fn run_until<F>(&mut self, t_end: Nanos, mut handler: F) -> Result<u64, SimError>
    where
        F: FnMut(&mut Self, Nanos, E) -> Result<(), SimError>,
    {
        if t_end < self.now {
            return Err(SimError::EndBeforeNow {
                t_end,
                now: self.now,
            });
        }
        let before = self.executed;
        while let Some((t, e)) = self.pop_until(t_end) {
            handler(self, t, e)?;
        }
        self.now = t_end;
        Ok(self.executed - before)
    }
}

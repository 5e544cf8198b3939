use std::collections::VecDeque;

use super::{DropReason, DEFAULT_QUEUE_LIMIT};

/// Tail-drop FIFO (pfifo).
#[derive(Debug, Clone)]
pub struct Fifo<P> {
    queue: VecDeque<P>,
    limit: usize,
}

impl<P> Default for Fifo<P> {
    fn default() -> Self {
        Self::with_limit(DEFAULT_QUEUE_LIMIT)
    }
}

impl<P> Fifo<P> {
    pub fn with_limit(limit: usize) -> Self {
        Self {
            queue: VecDeque::new(),
            limit,
        }
    }

    pub fn enqueue(&mut self, p: P) -> Result<(), (P, DropReason)> {
        if self.queue.len() >= self.limit {
            return Err((p, DropReason::QueueFull));
        }
        self.queue.push_back(p);
        Ok(())
    }

    pub fn peek(&self) -> Option<&P> {
        self.queue.front()
    }

    pub fn dequeue(&mut self) -> Option<P> {
        self.queue.pop_front()
    }

    pub fn len(&self) -> usize {
        self.queue.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queue.is_empty()
    }
}

use std::collections::VecDeque;

use super::{DropReason, Transmittable};
use crate::Nanos;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FqCodelParams {
    pub flows: usize,
    pub quantum: u32,
    pub limit: usize,
    pub target: Nanos,
    pub interval: Nanos,
    pub mtu: u32,
}

impl Default for FqCodelParams {
    fn default() -> Self {
        Self {
            flows: 1024,
            quantum: 1514,
            limit: 10_240,
            target: 5_000_000,
            interval: 100_000_000,
            mtu: 1514,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum List {
    New,
    Old,
}

#[derive(Debug, Clone)]
struct Flow<P> {
    queue: VecDeque<(P, Nanos)>,
    deficit: i64,
    list: Option<List>,
    count: u32,
    last_count: u32,
    dropping: bool,
    first_above_time: Option<Nanos>,
    drop_next: Nanos,
}

impl<P> Flow<P> {
    fn new() -> Self {
        Self {
            queue: VecDeque::new(),
            deficit: 0,
            list: None,
            count: 0,
            last_count: 0,
            dropping: false,
            first_above_time: None,
            drop_next: 0,
        }
    }
}

/// Flow-hashed deficit round robin with per-flow CoDel.
#[derive(Debug, Clone)]
pub struct FqCodel<P> {
    params: FqCodelParams,
    flows: Vec<Flow<P>>,
    new_flows: VecDeque<usize>,
    old_flows: VecDeque<usize>,
    packets: usize,
    backlog_bytes: u64,
}

fn control_law(t: Nanos, interval: Nanos, count: u32) -> Nanos {
    t + (interval as f64 / f64::from(count).sqrt()) as Nanos
}

impl<P: Transmittable> FqCodel<P> {
    pub fn new(params: FqCodelParams) -> Self {
        Self {
            params,
            flows: (0..params.flows).map(|_| Flow::new()).collect(),
            new_flows: VecDeque::new(),
            old_flows: VecDeque::new(),
            packets: 0,
            backlog_bytes: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.packets
    }

    pub fn is_empty(&self) -> bool {
        self.packets == 0
    }

    fn bucket(&self, key: u64) -> usize {
        let mixed = key.wrapping_mul(0x9e37_79b9_7f4a_7c15);
        (mixed >> 32) as usize % self.params.flows
    }

    pub fn enqueue(&mut self, now: Nanos, p: P, dropped: &mut Vec<(P, DropReason)>) {
        let idx = self.bucket(p.flow_key());
        self.backlog_bytes += u64::from(p.physical_bytes());
        self.packets += 1;
        let flow = &mut self.flows[idx];
        flow.queue.push_back((p, now));
        if flow.list.is_none() {
            flow.list = Some(List::New);
            flow.deficit = i64::from(self.params.quantum);
            self.new_flows.push_back(idx);
        }
        if self.packets > self.params.limit {
            let fattest = (0..self.flows.len())
                .max_by_key(|&i| (self.flows[i].queue.len(), std::cmp::Reverse(i)))
                .expect("at least one flow");
            if let Some(p) = self.pop(fattest) {
                dropped.push((p, DropReason::QueueFull));
            }
        }
    }

    fn pop(&mut self, idx: usize) -> Option<P> {
        let (p, _) = self.flows[idx].queue.pop_front()?;
        self.packets -= 1;
        self.backlog_bytes -= u64::from(p.physical_bytes());
        Some(p)
    }

    fn should_drop(&mut self, idx: usize, enq: Nanos, now: Nanos) -> bool {
        let target = self.params.target;
        let interval = self.params.interval;
        let small_backlog = self.backlog_bytes <= u64::from(self.params.mtu);
        let flow = &mut self.flows[idx];
        if now - enq < target || small_backlog {
            flow.first_above_time = None;
            return false;
        }
        match flow.first_above_time {
            None => {
                flow.first_above_time = Some(now + interval);
                false
            }
            Some(t) => now >= t,
        }
    }

    fn codel_dequeue(&mut self, idx: usize, now: Nanos, dropped: &mut Vec<(P, DropReason)>) -> Option<P> {
        let interval = self.params.interval;
        let enq = self.flows[idx].queue.front()?.1;
        let ok_to_drop = self.should_drop(idx, enq, now);
        let mut head = self.pop(idx);
        if self.flows[idx].dropping {
            if !ok_to_drop {
                self.flows[idx].dropping = false;
            } else {
                while self.flows[idx].dropping && now >= self.flows[idx].drop_next {
                    dropped.push((head.take().expect("head present"), DropReason::Codel));
                    self.flows[idx].count += 1;
                    let Some(&(_, enq)) = self.flows[idx].queue.front() else {
                        self.flows[idx].dropping = false;
                        break;
                    };
                    let still = self.should_drop(idx, enq, now);
                    head = self.pop(idx);
                    let f = &mut self.flows[idx];
                    if still {
                        f.drop_next = control_law(f.drop_next, interval, f.count);
                    } else {
                        f.dropping = false;
                    }
                }
            }
        } else if ok_to_drop {
            dropped.push((head.take().expect("head present"), DropReason::Codel));
            if self.flows[idx].queue.front().is_some() {
                head = self.pop(idx);
            }
            let f = &mut self.flows[idx];
            f.dropping = true;
            let delta = f.count.saturating_sub(f.last_count);
            f.count = if delta > 1 && now - f.drop_next < 16 * interval {
                delta
            } else {
                1
            };
            f.last_count = f.count;
            f.drop_next = control_law(now, interval, f.count);
        }
        head
    }

    pub fn dequeue(&mut self, now: Nanos, dropped: &mut Vec<(P, DropReason)>) -> Option<P> {
        loop {
            let (idx, from_new) = if let Some(&i) = self.new_flows.front() {
                (i, true)
            } else if let Some(&i) = self.old_flows.front() {
                (i, false)
            } else {
                return None;
            };
            if self.flows[idx].deficit <= 0 {
                self.flows[idx].deficit += i64::from(self.params.quantum);
                self.detach(from_new);
                self.flows[idx].list = Some(List::Old);
                self.old_flows.push_back(idx);
                continue;
            }
            match self.codel_dequeue(idx, now, dropped) {
                Some(p) => {
                    self.flows[idx].deficit -= i64::from(p.physical_bytes());
                    return Some(p);
                }
                None => {
                    self.detach(from_new);
                    if from_new && !self.old_flows.is_empty() {
                        self.flows[idx].list = Some(List::Old);
                        self.old_flows.push_back(idx);
                    } else {
                        self.flows[idx].list = None;
                    }
                }
            }
        }
    }

    fn detach(&mut self, from_new: bool) {
        if from_new {
            self.new_flows.pop_front();
        } else {
            self.old_flows.pop_front();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tc::test_util::TestFrame;

    fn frame(id: u64, flow: u64) -> TestFrame {
        TestFrame {
            flow,
            ..TestFrame::new(id, 1514)
        }
    }

    #[test]
    fn single_flow_is_fifo() {
        let mut q = FqCodel::new(FqCodelParams::default());
        let mut drops = vec![];
        for i in 0..10 {
            q.enqueue(0, frame(i, 7), &mut drops);
        }
        let order: Vec<_> = std::iter::from_fn(|| q.dequeue(0, &mut drops)).map(|f| f.id).collect();
        assert_eq!(order, (0..10).collect::<Vec<_>>());
        assert!(drops.is_empty());
    }

    #[test]
    fn two_flows_alternate() {
        let mut q = FqCodel::new(FqCodelParams::default());
        let mut drops = vec![];
        for i in 0..4 {
            q.enqueue(0, frame(i, 1), &mut drops);
        }
        for i in 10..14 {
            q.enqueue(0, frame(i, 2), &mut drops);
        }
        let flows: Vec<_> = std::iter::from_fn(|| q.dequeue(0, &mut drops)).map(|f| f.flow).collect();
        assert_eq!(flows, vec![1, 2, 1, 2, 1, 2, 1, 2]);
    }

    #[test]
    fn standing_queue_triggers_head_drop() {
        let p = FqCodelParams::default();
        let mut q = FqCodel::new(p);
        let mut drops = vec![];
        // Arrivals every 1 ms, service every 1.1 ms: the queue grows and the
        // sojourn time stays above target for longer than an interval.
        let mut id = 0;
        let mut first_drop = None;
        for ms in 0..400 {
            let now = ms * 1_000_000;
            q.enqueue(now, frame(id, 1), &mut drops);
            id += 1;
            if ms == 0 {
                for _ in 0..20 {
                    q.enqueue(now, frame(id, 1), &mut drops);
                    id += 1;
                }
            }
            if ms % 11 != 10 {
                q.dequeue(now, &mut drops);
            }
            if first_drop.is_none() && drops.iter().any(|(_, r)| *r == DropReason::Codel) {
                first_drop = Some(now);
            }
        }
        let t = first_drop.expect("codel must drop under a standing queue");
        assert!(t >= p.target + p.interval);
    }

    #[test]
    fn overlimit_drops_from_fattest() {
        let mut q = FqCodel::new(FqCodelParams {
            limit: 3,
            ..FqCodelParams::default()
        });
        let mut drops = vec![];
        q.enqueue(0, frame(0, 1), &mut drops);
        q.enqueue(0, frame(1, 1), &mut drops);
        q.enqueue(0, frame(2, 1), &mut drops);
        q.enqueue(0, frame(3, 2), &mut drops);
        assert_eq!(drops.len(), 1);
        assert_eq!(drops[0].0.id, 0);
        assert_eq!(q.len(), 3);
    }
}

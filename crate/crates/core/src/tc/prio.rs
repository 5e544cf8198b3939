use super::TcError;

/// The I210 exposes four transmit queues.
pub const NUM_HW_QUEUES: usize = 4;

/// mqprio configuration: PCP to traffic class, traffic class to hardware queue.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PriorityMap {
    pub num_tc: u8,
    pub prio_to_tc: [u8; 8],
    pub tc_to_queue: [u8; 8],
}

impl PriorityMap {
    pub fn new(num_tc: u8, prio_to_tc: [u8; 8], tc_to_queue: [u8; 8]) -> Result<Self, TcError> {
        if !(1..=8).contains(&num_tc) {
            return Err(TcError::InvalidParams(format!("num_tc {num_tc} not in 1..=8")));
        }
        if let Some(tc) = prio_to_tc.iter().find(|&&tc| tc >= num_tc) {
            return Err(TcError::InvalidParams(format!("tc {tc} >= num_tc {num_tc}")));
        }
        if let Some(q) = tc_to_queue[..num_tc as usize]
            .iter()
            .find(|&&q| q as usize >= NUM_HW_QUEUES)
        {
            return Err(TcError::InvalidParams(format!("hardware queue {q} >= {NUM_HW_QUEUES}")));
        }
        Ok(Self {
            num_tc,
            prio_to_tc,
            tc_to_queue,
        })
    }

    /// PCP to traffic class mapping recommended by IEEE 802.1Qav for eight
    /// classes. Higher classes are served from lower-numbered queues.
    pub fn qav_default() -> Self {
        Self::new(8, [1, 0, 6, 7, 2, 3, 4, 5], [3, 3, 3, 3, 2, 2, 1, 0])
            .expect("static map is valid")
    }

    /// Two-class map of the experiments: PCP 3 (OPC UA) to tc 0 on queue 0,
    /// everything else to tc 1 on queue 3.
    pub fn experiment() -> Self {
        Self::new(2, [1, 1, 1, 0, 1, 1, 1, 1], [0, 3, 0, 0, 0, 0, 0, 0])
            .expect("static map is valid")
    }

    pub fn classify(&self, pcp: u8) -> u8 {
        self.prio_to_tc[(pcp & 0x7) as usize]
    }

    pub fn queue_of_tc(&self, tc: u8) -> usize {
        self.tc_to_queue[tc as usize] as usize
    }

    pub fn queue_of_pcp(&self, pcp: u8) -> usize {
        self.queue_of_tc(self.classify(pcp))
    }
}

pub fn prio_classify(pcp: u8, map: &PriorityMap) -> u8 {
    map.classify(pcp)
}

/// Strict priority between hardware queues: the lowest-numbered eligible
/// queue is served first.
pub fn strict_priority_pick(eligible: [bool; NUM_HW_QUEUES]) -> Option<usize> {
    eligible.iter().position(|&e| e)
}

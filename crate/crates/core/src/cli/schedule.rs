use crate::tc::{GateEntry, GateSchedule, TcError};
use crate::Nanos;

/// Gate mask of the OPC UA traffic class.
pub const PRIO_MASK: u8 = 0b01;
/// Gate mask of the best-effort traffic class.
pub const BE_MASK: u8 = 0b10;

/// Cycle of best-effort window, guard, priority window of length `ws`,
/// guard, best-effort remainder. The leading window is shortened by the
/// guard so that the priority gate opens at cycle start + `offset`.
/// Zero-length best-effort windows are left out.
pub fn build_taprio_schedule(
    base_time: Nanos,
    cycle: Nanos,
    offset: Nanos,
    ws: Nanos,
    guard: Nanos,
) -> Result<GateSchedule, TcError> {
    if ws <= 0 || guard < 0 {
        return Err(TcError::InvalidParams(format!("window {ws} and guard {guard} must be positive")));
    }
    if offset < guard {
        return Err(TcError::InvalidParams(format!("offset {offset} shorter than guard {guard}")));
    }
    let rest = cycle - offset - ws - guard;
    if rest < 0 {
        return Err(TcError::InvalidParams(format!(
            "offset {offset} + window {ws} + guard {guard} exceed cycle {cycle}"
        )));
    }
    let entries = [
        (BE_MASK, offset - guard),
        (0, guard),
        (PRIO_MASK, ws),
        (0, guard),
        (BE_MASK, rest),
    ]
    .into_iter()
    .filter(|&(_, d)| d > 0)
    .map(|(gate_mask, duration)| GateEntry { gate_mask, duration })
    .collect();
    GateSchedule::new(base_time, entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn optimum_schedule() {
        let s = build_taprio_schedule(0, 250_000, 150_000, 62_500, 15_000).unwrap();
        let d: Vec<Nanos> = s.entries.iter().map(|e| e.duration).collect();
        assert_eq!(d, [135_000, 15_000, 62_500, 15_000, 22_500]);
        assert_eq!(s.cycle_time(), 250_000);
        assert!(s.is_open(0, 150_000));
        assert!(!s.is_open(0, 149_999));
        assert_eq!(s.next_gate_open(0, 0).unwrap(), 150_000);
    }

    #[test]
    fn no_residual_gives_four_entries() {
        let s = build_taprio_schedule(0, 250_000, 150_000, 85_000, 15_000).unwrap();
        assert_eq!(s.entries.len(), 4);
        assert_eq!(s.cycle_time(), 250_000);
    }

    #[test]
    fn infeasible() {
        assert!(build_taprio_schedule(0, 250_000, 10_000, 62_500, 15_000).is_err());
        assert!(build_taprio_schedule(0, 250_000, 150_000, 90_000, 15_000).is_err());
        assert!(build_taprio_schedule(0, 250_000, 150_000, 0, 15_000).is_err());
    }

    proptest! {
        #[test]
        fn durations_sum_to_cycle(ws_steps in 1i64..=6) {
            let s = build_taprio_schedule(0, 250_000, 150_000, ws_steps * 12_500, 15_000).unwrap();
            prop_assert_eq!(s.cycle_time(), 250_000);
        }
    }
}

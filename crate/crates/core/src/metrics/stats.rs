use super::{MetricsError, TapSeries};
use crate::app::FateCounts;
use crate::Nanos;

/// Drop rates in percent of published messages.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DropRates {
    pub d_p: f64,
    pub d_l: f64,
    pub d_b_to_l: f64,
    pub d_b_to_p: f64,
    pub d_sigma: f64,
}

pub fn compute_drop_rates(counts: &FateCounts) -> Result<DropRates, MetricsError> {
    let n = counts.published;
    if n == 0 {
        return Err(MetricsError::NothingPublished);
    }
    if counts.lost() > n {
        return Err(MetricsError::Inconsistent(format!(
            "{} losses exceed {n} published",
            counts.lost()
        )));
    }
    let pct = |x: u64| x as f64 * 100.0 / n as f64;
    let d_p = pct(counts.d_p);
    let d_l = pct(counts.d_l);
    let d_b_to_l = pct(counts.d_b_to_l);
    let d_b_to_p = pct(counts.d_b_to_p);
    Ok(DropRates {
        d_p,
        d_l,
        d_b_to_l,
        d_b_to_p,
        d_sigma: d_p + d_l + d_b_to_l + d_b_to_p,
    })
}

/// Spacing between consecutive timestamps.
pub fn inter_arrival(series: &TapSeries) -> Vec<Nanos> {
    let t: Vec<Nanos> = series.times().collect();
    t.windows(2).map(|w| w[1] - w[0]).collect()
}

/// Deviation of the inter-arrival spacing from the cycle time, in µs.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Jitter {
    /// Mean of |IS - c|.
    pub mean_us: f64,
    /// Largest |IS - c|.
    pub max_us: f64,
    /// Standard deviation of IS.
    pub std_us: f64,
    /// Largest minus smallest IS.
    pub p2p_us: f64,
}

pub fn compute_jitter(series: &TapSeries, cycle: Nanos) -> Result<Jitter, MetricsError> {
    if series.len() < 2 {
        return Err(MetricsError::TooFewSamples(series.len()));
    }
    let is = inter_arrival(series);
    let n = is.len() as f64;
    let dev: Vec<f64> = is.iter().map(|&s| (s - cycle).abs() as f64).collect();
    let mean_dev = dev.iter().sum::<f64>() / n;
    let max_dev = dev.iter().copied().fold(0.0, f64::max);
    let mean_is = is.iter().map(|&s| s as f64).sum::<f64>() / n;
    let var = is.iter().map(|&s| (s as f64 - mean_is).powi(2)).sum::<f64>() / n;
    let lo = *is.iter().min().expect("non-empty");
    let hi = *is.iter().max().expect("non-empty");
    Ok(Jitter {
        mean_us: mean_dev / 1e3,
        max_us: max_dev / 1e3,
        std_us: var.sqrt() / 1e3,
        p2p_us: (hi - lo) as f64 / 1e3,
    })
}

/// Empirical CDF of the inter-arrival spacing: each distinct spacing with
/// the fraction of spacings at or below it.
pub fn compute_is_ecdf(series: &TapSeries) -> Vec<(Nanos, f64)> {
    ecdf(inter_arrival(series))
}

/// Each distinct value with the fraction of values at or below it.
pub fn ecdf(mut is: Vec<Nanos>) -> Vec<(Nanos, f64)> {
    if is.is_empty() {
        return vec![];
    }
    is.sort_unstable();
    let n = is.len() as f64;
    let mut out: Vec<(Nanos, f64)> = Vec::new();
    for (i, &s) in is.iter().enumerate() {
        let frac = (i + 1) as f64 / n;
        match out.last_mut() {
            Some(last) if last.0 == s => last.1 = frac,
            _ => out.push((s, frac)),
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RttStats {
    pub count: usize,
    pub mean_us: f64,
    pub median_us: f64,
    pub max_us: f64,
}

pub fn compute_rtt_stats(rtt: &[Nanos]) -> Option<RttStats> {
    if rtt.is_empty() {
        return None;
    }
    let mut v = rtt.to_vec();
    v.sort_unstable();
    let n = v.len();
    let median = if n % 2 == 1 {
        v[n / 2] as f64
    } else {
        (v[n / 2 - 1] + v[n / 2]) as f64 / 2.0
    };
    Some(RttStats {
        count: n,
        mean_us: v.iter().map(|&x| x as f64).sum::<f64>() / n as f64 / 1e3,
        median_us: median / 1e3,
        max_us: v[n - 1] as f64 / 1e3,
    })
}

/// Parameters that must agree between a bridged and a point-to-point run
/// for their RTT difference to be attributed to the bridge.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RunKey {
    pub cycle: Nanos,
    pub offset: Nanos,
    pub delta: Nanos,
    pub n_vars: usize,
    pub host_qdisc: String,
}

/// Two-way latency added by the bridge, in µs.
pub fn estimate_bridge_latency(
    bridged: (&RunKey, &RttStats),
    p2p: (&RunKey, &RttStats),
) -> Result<f64, MetricsError> {
    if bridged.0 != p2p.0 {
        return Err(MetricsError::MismatchedRuns(format!(
            "{:?} vs {:?}",
            bridged.0, p2p.0
        )));
    }
    Ok(bridged.1.mean_us - p2p.1.mean_us)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::TapPoint;
    use proptest::prelude::*;

    fn counts(published: u64, d_p: u64, d_l: u64) -> FateCounts {
        FateCounts {
            published,
            returned: published - d_p - d_l,
            d_p,
            d_l,
            ..FateCounts::default()
        }
    }

    #[test]
    fn drop_rate_examples() {
        let r = compute_drop_rates(&counts(700_000, 0, 7)).unwrap();
        assert!((r.d_l - 0.001).abs() < 1e-12);
        let zero = compute_drop_rates(&counts(10, 0, 0)).unwrap();
        assert_eq!(zero, DropRates::default());
        assert_eq!(
            compute_drop_rates(&FateCounts::default()),
            Err(MetricsError::NothingPublished)
        );
    }

    #[test]
    fn d_sigma_is_the_sum() {
        let c = FateCounts {
            published: 1_000_000,
            returned: 0,
            d_p: 27,
            d_l: 745,
            d_b_to_l: 3,
            d_b_to_p: 1,
        };
        let r = compute_drop_rates(&c).unwrap();
        assert_eq!(r.d_sigma, r.d_p + r.d_l + r.d_b_to_l + r.d_b_to_p);
        assert!((r.d_p + r.d_l - 0.0772).abs() < 1e-12);
    }

    #[test]
    fn jitter_examples() {
        let periodic = TapSeries::from_times(TapPoint::LIngress, (0..10).map(|i| i * 250_000));
        assert_eq!(compute_jitter(&periodic, 250_000).unwrap().mean_us, 0.0);

        let mut t = 0;
        let alt = TapSeries::from_times(
            TapPoint::LIngress,
            (0..11).map(|i| {
                let now = t;
                t += if i % 2 == 0 { 249_000 } else { 251_000 };
                now
            }),
        );
        let j = compute_jitter(&alt, 250_000).unwrap();
        assert!((j.mean_us - 1.0).abs() < 1e-12);
        assert!((j.p2p_us - 2.0).abs() < 1e-12);

        let gap = TapSeries::from_times(TapPoint::LIngress, [0, 250_000, 750_000, 1_000_000]);
        let j = compute_jitter(&gap, 250_000).unwrap();
        assert!((j.mean_us - 250.0 / 3.0).abs() < 1e-9);
        assert_eq!(j.max_us, 250.0);

        let one = TapSeries::from_times(TapPoint::LIngress, [0]);
        assert_eq!(compute_jitter(&one, 1), Err(MetricsError::TooFewSamples(1)));
    }

    #[test]
    fn ecdf_of_periodic_input_is_a_step() {
        let s = TapSeries::from_times(TapPoint::LIngress, (0..5).map(|i| i * 250_000));
        assert_eq!(compute_is_ecdf(&s), vec![(250_000, 1.0)]);
    }

    #[test]
    fn rtt_stats() {
        let s = compute_rtt_stats(&[500_000, 501_000, 750_000]).unwrap();
        assert_eq!(s.median_us, 501.0);
        assert_eq!(s.max_us, 750.0);
        assert!((s.mean_us - 583.666_666_666_666_7).abs() < 1e-9);
        assert_eq!(compute_rtt_stats(&[1, 3]).unwrap().median_us, 0.002);
        assert!(compute_rtt_stats(&[]).is_none());
    }

    #[test]
    fn bridge_latency_examples() {
        let key = RunKey {
            cycle: 250_000,
            offset: 150_000,
            delta: 200_000,
            n_vars: 3,
            host_qdisc: "etf".into(),
        };
        let rtt = |mean_us| RttStats {
            count: 1,
            mean_us,
            median_us: mean_us,
            max_us: mean_us,
        };
        let l = estimate_bridge_latency((&key, &rtt(547.0)), (&key, &rtt(500.0))).unwrap();
        assert_eq!(l, 47.0);
        let l = estimate_bridge_latency((&key, &rtt(280.0)), (&key, &rtt(250.0))).unwrap();
        assert_eq!(l, 30.0);
        assert_eq!(
            estimate_bridge_latency((&key, &rtt(500.0)), (&key, &rtt(500.0))).unwrap(),
            0.0
        );
        let other = RunKey {
            host_qdisc: "fq".into(),
            ..key.clone()
        };
        assert!(estimate_bridge_latency((&key, &rtt(1.0)), (&other, &rtt(1.0))).is_err());
    }

    proptest! {
        #[test]
        fn ecdf_is_monotone_and_normalized(gaps in proptest::collection::vec(1i64..1_000_000, 1..300)) {
            let mut t = 0;
            let times: Vec<Nanos> = std::iter::once(0).chain(gaps.iter().map(|g| { t += g; t })).collect();
            let s = TapSeries::from_times(TapPoint::LIngress, times);
            let e = compute_is_ecdf(&s);
            prop_assert!(!e.is_empty());
            for w in e.windows(2) {
                prop_assert!(w[0].0 < w[1].0);
                prop_assert!(w[0].1 <= w[1].1);
            }
            prop_assert!((e.last().unwrap().1 - 1.0).abs() < 1e-12);
        }
    }
}

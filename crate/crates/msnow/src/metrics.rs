//! Evaluation metrics and analytical calculators: CDR, throughput, latency,
//! energy, Shannon/Nyquist bitrates, and the scalability arithmetic.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::netsim::{EventKind, EventLog};

/// CC1310-style transmitter energy model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyModel {
    pub tx_current_ma: f64,
    pub idle_current_ma: f64,
    pub sleep_current_ua: f64,
    pub supply_voltage_v: f64,
}

impl Default for EnergyModel {
    fn default() -> Self {
        Self {
            tx_current_ma: 17.5,
            idle_current_ma: 0.5,
            sleep_current_ua: 0.2,
            supply_voltage_v: 3.0,
        }
    }
}

/// Scenario-level metrics. Latency and energy are adjusted to an equivalent
/// 100%-reliability figure by dividing through the subcarrier's delivery
/// ratio, mirroring the retransmission expectation.
#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct MetricsReport {
    pub scenario: String,
    pub per_subcarrier_cdr_percent: BTreeMap<usize, f64>,
    pub average_cdr_percent: Option<f64>,
    pub throughput_bps: f64,
    pub mean_latency_s: Option<f64>,
    pub mean_energy_j: Option<f64>,
    pub e2e_latency_s: Option<Vec<f64>>,
    pub mean_e2e_latency_s: Option<f64>,
    pub delivered_packets: u64,
    pub total_packets: u64,
    pub makespan_s: f64,
}

impl MetricsReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One CSV summary row; `csv_header` gives the column names.
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.scenario,
            self.average_cdr_percent.map_or(String::new(), |v| format!("{v:.6}")),
            self.throughput_bps,
            self.mean_latency_s.map_or(String::new(), |v| format!("{v:.9}")),
            self.mean_energy_j.map_or(String::new(), |v| format!("{v:.12}")),
            self.mean_e2e_latency_s.map_or(String::new(), |v| format!("{v:.9}")),
            self.delivered_packets,
            self.total_packets,
        )
    }

    pub fn csv_header() -> &'static str {
        "scenario,average_cdr_percent,throughput_bps,mean_latency_s,mean_energy_j,mean_e2e_latency_s,delivered_packets,total_packets"
    }
}

/// Per-subcarrier and average correctly-decoding rate, as percentages.
/// Subcarriers with no transmissions are absent from the map; the average is
/// `None` when nothing was transmitted.
pub fn compute_cdr(log: &EventLog) -> (BTreeMap<usize, f64>, Option<f64>) {
    let mut ok: BTreeMap<usize, u64> = BTreeMap::new();
    let mut total: BTreeMap<usize, u64> = BTreeMap::new();
    for e in log.events() {
        match e.kind {
            EventKind::DecodeOk | EventKind::RxOk => {
                *ok.entry(e.subcarrier).or_insert(0) += 1;
                *total.entry(e.subcarrier).or_insert(0) += 1;
            }
            EventKind::DecodeFail | EventKind::RxFail => {
                *total.entry(e.subcarrier).or_insert(0) += 1;
            }
            _ => {}
        }
    }
    let per: BTreeMap<usize, f64> = total
        .iter()
        .map(|(&sc, &t)| {
            let o = ok.get(&sc).copied().unwrap_or(0);
            (sc, 100.0 * o as f64 / t as f64)
        })
        .collect();
    let average = if per.is_empty() {
        None
    } else {
        Some(per.values().sum::<f64>() / per.len() as f64)
    };
    (per, average)
}

/// Overall effective bitrate: delivered payload bits over the log's
/// makespan (first transmission start to last delivery event).
pub fn compute_throughput(log: &EventLog, payload_bytes: usize) -> f64 {
    let delivered = log
        .events()
        .iter()
        .filter(|e| matches!(e.kind, EventKind::DecodeOk | EventKind::RxOk))
        .count() as f64;
    let makespan = log.makespan_s();
    if makespan <= 0.0 {
        return 0.0;
    }
    delivered * (payload_bytes * 8) as f64 / makespan
}

/// Mean per-packet delivery latency, adjusted to 100% reliability by
/// dividing each packet's raw latency by its subcarrier's delivery ratio.
pub fn compute_latency(log: &EventLog) -> Option<f64> {
    let (per_cdr, _) = compute_cdr(log);
    let mut ready: BTreeMap<u64, f64> = BTreeMap::new();
    for e in log.events() {
        if matches!(e.kind, EventKind::Ready) {
            ready.insert(e.packet_id, e.time_s);
        }
    }
    let mut sum = 0.0;
    let mut count = 0u64;
    for e in log.events() {
        if matches!(e.kind, EventKind::DecodeOk | EventKind::RxOk) {
            if let Some(&r) = ready.get(&e.packet_id) {
                let ratio = per_cdr.get(&e.subcarrier).copied().unwrap_or(100.0) / 100.0;
                if ratio > 0.0 {
                    sum += (e.time_s - r) / ratio;
                    count += 1;
                }
            }
        }
    }
    (count > 0).then(|| sum / count as f64)
}

/// Mean per-packet energy in joules under the given model, adjusted to 100%
/// reliability: total energy across all packets divided by delivered count.
pub fn compute_energy(log: &EventLog, model: &EnergyModel) -> Option<f64> {
    // Per packet: sum tx windows, plus ready -> first tx idle time.
    #[derive(Default)]
    struct PacketSpan {
        ready: Option<f64>,
        tx_time: f64,
        first_tx: Option<f64>,
    }
    let mut spans: BTreeMap<u64, PacketSpan> = BTreeMap::new();
    let mut tx_open: BTreeMap<u64, f64> = BTreeMap::new();
    for e in log.events() {
        let span = spans.entry(e.packet_id).or_default();
        match e.kind {
            EventKind::Ready => span.ready = Some(e.time_s),
            EventKind::TxStart => {
                tx_open.insert(e.packet_id, e.time_s);
                if span.first_tx.is_none() {
                    span.first_tx = Some(e.time_s);
                }
            }
            EventKind::TxEnd => {
                if let Some(start) = tx_open.remove(&e.packet_id) {
                    span.tx_time += e.time_s - start;
                }
            }
            _ => {}
        }
    }
    let delivered = log
        .events()
        .iter()
        .filter(|e| matches!(e.kind, EventKind::DecodeOk | EventKind::RxOk))
        .count() as f64;
    if delivered == 0.0 {
        return None;
    }
    let v = model.supply_voltage_v;
    let mut total = 0.0;
    for span in spans.values() {
        total += span.tx_time * model.tx_current_ma * 1e-3 * v;
        if let (Some(ready), Some(first)) = (span.ready, span.first_tx) {
            total += (first - ready).max(0.0) * model.idle_current_ma * 1e-3 * v;
        }
    }
    Some(total / delivered)
}

/// E2E latencies (P2P): one entry per delivered packet, sender transmit
/// start to receiver delivery.
pub fn compute_e2e(log: &EventLog) -> Vec<f64> {
    let mut ready: BTreeMap<u64, f64> = BTreeMap::new();
    for e in log.events() {
        if matches!(e.kind, EventKind::Ready) {
            ready.entry(e.packet_id).or_insert(e.time_s);
        }
    }
    let mut out = Vec::new();
    for e in log.events() {
        if matches!(e.kind, EventKind::RxOk) {
            if let Some(&r) = ready.get(&e.packet_id) {
                out.push(e.time_s - r);
            }
        }
    }
    out
}

/// Shannon-Hartley capacity `B log2(1 + SNR)` with SNR as a linear ratio.
pub fn shannon_bitrate(bandwidth_hz: f64, snr_ratio: f64) -> f64 {
    bandwidth_hz * (1.0 + snr_ratio).log2()
}

/// Shannon capacity with the SNR given in dB.
pub fn shannon_bitrate_db(bandwidth_hz: f64, snr_db: f64) -> f64 {
    shannon_bitrate(bandwidth_hz, 10f64.powf(snr_db / 10.0))
}

/// Per-sensor bitrate after length-`N` spreading: `C / N`.
pub fn spread_bitrate(bandwidth_hz: f64, snr_ratio: f64, spreading_factor: usize) -> f64 {
    shannon_bitrate(bandwidth_hz, snr_ratio) / spreading_factor as f64
}

/// Supported sensor count from the duty-cycle argument: per subcarrier,
/// `floor(concurrency * seconds_per_day / (packets_per_day * airtime))`,
/// multiplied by subcarriers and channels. Exact integer arithmetic with
/// airtime in microseconds.
pub fn scalability_estimate(
    channels: u64,
    subcarriers_per_channel: u64,
    sensors_per_subcarrier: u64,
    packet_airtime_us: u64,
    packets_per_sensor_per_day: u64,
) -> u64 {
    const US_PER_DAY: u128 = 24 * 3600 * 1_000_000;
    let per_subcarrier = (u128::from(sensors_per_subcarrier) * US_PER_DAY)
        / (u128::from(packets_per_sensor_per_day) * u128::from(packet_airtime_us));
    (per_subcarrier as u64) * subcarriers_per_channel * channels
}

/// The paired uplink+downlink variant halves the estimate.
pub fn scalability_estimate_paired(
    channels: u64,
    subcarriers_per_channel: u64,
    sensors_per_subcarrier: u64,
    packet_airtime_us: u64,
    packets_per_sensor_per_day: u64,
) -> u64 {
    scalability_estimate(
        channels,
        subcarriers_per_channel,
        sensors_per_subcarrier,
        packet_airtime_us,
        packets_per_sensor_per_day,
    ) / 2
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netsim::{Event, EventKind};

    fn log_with(events: Vec<Event>) -> EventLog {
        let mut log = EventLog::new();
        for e in events {
            log.push(e);
        }
        log
    }

    fn ev(time_s: f64, node: u64, subcarrier: usize, kind: EventKind, packet_id: u64) -> Event {
        Event {
            time_s,
            node,
            subcarrier,
            kind,
            packet_id,
        }
    }

    #[test]
    fn cdr_ratios() {
        let mut events = Vec::new();
        for p in 0..100 {
            let kind = if p < 93 {
                EventKind::DecodeOk
            } else {
                EventKind::DecodeFail
            };
            events.push(ev(p as f64, 1, 1, kind, p));
        }
        let (per, avg) = compute_cdr(&log_with(events));
        assert_eq!(per[&1], 93.0);
        assert_eq!(avg, Some(93.0));
    }

    #[test]
    fn cdr_all_ok_is_100() {
        let events = vec![
            ev(0.0, 1, 1, EventKind::DecodeOk, 1),
            ev(1.0, 2, 2, EventKind::DecodeOk, 2),
        ];
        let (_, avg) = compute_cdr(&log_with(events));
        assert_eq!(avg, Some(100.0));
    }

    #[test]
    fn cdr_empty_is_absent() {
        let (per, avg) = compute_cdr(&log_with(vec![]));
        assert!(per.is_empty());
        assert_eq!(avg, None);
    }

    /// Single sensor, one packet: 28 bytes over one 5.6 ms airtime = 40 kbps.
    #[test]
    fn single_packet_throughput_is_40_kbps() {
        let events = vec![
            ev(0.0, 1, 1, EventKind::Ready, 1),
            ev(0.0, 1, 1, EventKind::TxStart, 1),
            ev(5.6e-3, 1, 1, EventKind::TxEnd, 1),
            ev(5.6e-3, 1, 1, EventKind::DecodeOk, 1),
        ];
        let t = compute_throughput(&log_with(events), 28);
        assert!((t - 40_000.0).abs() < 1e-6, "{t}");
    }

    /// CDR 50% doubles the adjusted latency: 5.6 ms -> 11.2 ms.
    #[test]
    fn latency_adjusts_by_cdr() {
        let events = vec![
            ev(0.0, 1, 1, EventKind::Ready, 1),
            ev(0.0, 1, 1, EventKind::TxStart, 1),
            ev(5.6e-3, 1, 1, EventKind::TxEnd, 1),
            ev(5.6e-3, 1, 1, EventKind::DecodeOk, 1),
            ev(10.0, 1, 1, EventKind::Ready, 2),
            ev(10.0, 1, 1, EventKind::TxStart, 2),
            ev(10.0056, 1, 1, EventKind::TxEnd, 2),
            ev(10.0056, 1, 1, EventKind::DecodeFail, 2),
        ];
        let latency = compute_latency(&log_with(events)).unwrap();
        assert!((latency - 11.2e-3).abs() < 1e-9, "{latency}");
    }

    /// 5.6 ms of pure transmit at the default model: 0.294 mJ.
    #[test]
    fn pure_tx_energy_matches_closed_form() {
        let events = vec![
            ev(0.0, 1, 1, EventKind::Ready, 1),
            ev(0.0, 1, 1, EventKind::TxStart, 1),
            ev(5.6e-3, 1, 1, EventKind::TxEnd, 1),
            ev(5.6e-3, 1, 1, EventKind::DecodeOk, 1),
        ];
        let e = compute_energy(&log_with(events), &EnergyModel::default()).unwrap();
        assert!((e - 0.294e-3).abs() < 1e-12, "{e}");
    }

    #[test]
    fn energy_scales_linearly_with_voltage() {
        let events = vec![
            ev(0.0, 1, 1, EventKind::Ready, 1),
            ev(0.0, 1, 1, EventKind::TxStart, 1),
            ev(5.6e-3, 1, 1, EventKind::TxEnd, 1),
            ev(5.6e-3, 1, 1, EventKind::DecodeOk, 1),
        ];
        let log = log_with(events);
        let base = compute_energy(&log, &EnergyModel::default()).unwrap();
        let doubled = compute_energy(
            &log,
            &EnergyModel {
                supply_voltage_v: 6.0,
                ..Default::default()
            },
        )
        .unwrap();
        assert!((doubled - 2.0 * base).abs() < 1e-15);
    }

    #[test]
    fn shannon_and_spread_bitrates() {
        // 200 kHz at SNR ratio 3: 400 kbps; N = 7: ~57.14 kbps.
        assert!((shannon_bitrate(200e3, 3.0) - 400e3).abs() < 1e-9);
        let per_sensor = spread_bitrate(200e3, 3.0, 7);
        assert!((per_sensor - 400e3 / 7.0).abs() < 1e-9);
        // 0 dB is a ratio of 1: capacity equals bandwidth.
        assert!((shannon_bitrate_db(123e3, 0.0) - 123e3).abs() < 1e-9);
        // Spreading factor 1 is the Shannon capacity itself.
        assert_eq!(spread_bitrate(200e3, 3.0, 1), shannon_bitrate(200e3, 3.0));
    }

    #[test]
    fn scalability_reproduces_printed_counts() {
        // 9 concurrent, 2 ms packets, 140 packets/day: ~2,777,142 sensors per
        // subcarrier; 29 subcarriers: 80,537,118; paired: 40.25 million.
        let per = scalability_estimate(1, 1, 9, 2000, 140);
        assert_eq!(per, 2_777_142);
        assert_eq!(scalability_estimate(1, 29, 9, 2000, 140), 80_537_118);
        assert_eq!(
            scalability_estimate_paired(1, 29, 9, 2000, 140),
            40_268_559
        );
        // Trivial check: one sensor, one packet/day, 1 s airtime.
        assert_eq!(scalability_estimate(1, 1, 1, 1_000_000, 1), 86_400);
    }

    #[test]
    fn scalability_monotonicity() {
        let base = scalability_estimate(2, 29, 9, 2000, 140);
        assert!(scalability_estimate(3, 29, 9, 2000, 140) >= base);
        assert!(scalability_estimate(2, 30, 9, 2000, 140) >= base);
        assert!(scalability_estimate(2, 29, 9, 2500, 140) <= base);
        assert!(scalability_estimate(2, 29, 9, 2000, 200) <= base);
    }
}

//! The legacy comparator: one decodable sensor per subcarrier at a time,
//! CSMA/CA with initial and congestion backoff windows for shared uplink
//! subcarriers, round-robin downlink scheduling, and ACK-paced P2P.
//!
//! A pure event model: the legacy PHY decodes any non-colliding packet, so
//! no waveform is simulated. Backoff window constants are calibrated
//! against the reference throughput corridor and then frozen.

use rand::Rng;

use crate::metrics::{
    compute_cdr, compute_e2e, compute_energy, compute_latency, compute_throughput, EnergyModel,
    MetricsReport,
};
use crate::phy::build_subcarrier_plan;
use crate::pnseq::evaluation_sets;
use crate::{Error, Result};

use super::config::{ScenarioConfig, ScenarioKind};
use super::pipeline::stream_rng;
use super::traffic::ms_to_chips;
use super::{assign_pn_sequences, Event, EventKind, EventLog};

/// Initial backoff window (chips): drawn uniformly on the first attempt.
const INITIAL_BACKOFF_CHIPS: u64 = 1200;
/// Congestion backoff window (chips): drawn after a busy CCA or collision.
const CONGESTION_BACKOFF_CHIPS: u64 = 12000;
/// Round-robin downlink slot: one packet span plus acknowledgment turnaround.
const RR_SLOT_FACTOR: u64 = 2;

fn span_chips(config: &ScenarioConfig) -> u64 {
    (config.layout().total_bits() * 7) as u64
}

/// One subcarrier's CSMA/CA contention among its sensors' packet queues.
/// Returns events; all packets eventually deliver (retries until solo).
fn csma_subcarrier(
    subcarrier: usize,
    arrivals: &[(u64, Vec<u64>)], // (sensor id, ready chips)
    span: u64,
    chip_rate: f64,
    rep_offset: u64,
    rng: &mut rand_chacha::ChaCha8Rng,
    log: &mut EventLog,
    packet_base: u64,
) -> u64 {
    #[derive(Clone)]
    struct Station {
        sensor: u64,
        ready: Vec<u64>,
        next: usize,
        // Contention state for the head packet.
        expiry: u64,
        contending: bool,
    }
    let mut stations: Vec<Station> = arrivals
        .iter()
        .map(|(sensor, ready)| Station {
            sensor: *sensor,
            ready: ready.clone(),
            next: 0,
            expiry: 0,
            contending: false,
        })
        .collect();
    let time = |chip: u64| (chip + rep_offset) as f64 / chip_rate;

    for st in &stations {
        for (seq, &r) in st.ready.iter().enumerate() {
            log.push(Event {
                time_s: time(r),
                node: st.sensor,
                subcarrier,
                kind: EventKind::Ready,
                packet_id: packet_base + st.sensor * 100_000 + seq as u64,
            });
        }
    }

    let mut busy_until = 0u64;
    let mut last_end = 0u64;
    loop {
        // Arm contention for every station with a pending packet.
        for st in stations.iter_mut() {
            if !st.contending && st.next < st.ready.len() {
                let base = st.ready[st.next].max(last_end.min(busy_until));
                st.expiry = base.max(st.ready[st.next]) + rng.gen_range(0..=INITIAL_BACKOFF_CHIPS);
                st.contending = true;
            }
        }
        // Earliest expiry wins; equal expiries collide.
        let Some(min_expiry) = stations
            .iter()
            .filter(|s| s.contending)
            .map(|s| s.expiry)
            .min()
        else {
            break;
        };
        // Busy channel at expiry: congestion backoff and retry.
        if min_expiry < busy_until {
            for st in stations.iter_mut() {
                if st.contending && st.expiry == min_expiry {
                    st.expiry = busy_until + rng.gen_range(0..=CONGESTION_BACKOFF_CHIPS);
                }
            }
            continue;
        }
        let winners: Vec<usize> = stations
            .iter()
            .enumerate()
            .filter(|(_, s)| s.contending && s.expiry == min_expiry)
            .map(|(i, _)| i)
            .collect();
        let start = min_expiry;
        let end = start + span;
        busy_until = end;
        last_end = end;
        let collided = winners.len() > 1;
        for &w in &winners {
            let st = &mut stations[w];
            let id = packet_base + st.sensor * 100_000 + st.next as u64;
            log.push(Event {
                time_s: time(start),
                node: st.sensor,
                subcarrier,
                kind: EventKind::TxStart,
                packet_id: id,
            });
            log.push(Event {
                time_s: time(end),
                node: st.sensor,
                subcarrier,
                kind: EventKind::TxEnd,
                packet_id: id,
            });
            if collided {
                // No acknowledgment: contend again from the channel clear.
                st.expiry = end + rng.gen_range(0..=CONGESTION_BACKOFF_CHIPS);
            } else {
                log.push(Event {
                    time_s: time(end),
                    node: st.sensor,
                    subcarrier,
                    kind: EventKind::DecodeOk,
                    packet_id: id,
                });
                st.next += 1;
                st.contending = false;
            }
        }
    }
    last_end
}

/// Legacy round-robin downlink on one subcarrier: each sensor owns every
/// k-th slot; a pending packet goes out in its owner's next slot.
fn round_robin_downlink(
    subcarrier: usize,
    arrivals: &[(u64, Vec<u64>)],
    span: u64,
    chip_rate: f64,
    rep_offset: u64,
    log: &mut EventLog,
    packet_base: u64,
) -> u64 {
    let slot = span * RR_SLOT_FACTOR;
    let k = arrivals.len() as u64;
    let time = |chip: u64| (chip + rep_offset) as f64 / chip_rate;
    let mut last_end = 0u64;
    for (slot_index, (sensor, ready)) in arrivals.iter().enumerate() {
        for (seq, &r) in ready.iter().enumerate() {
            let id = packet_base + sensor * 100_000 + seq as u64;
            log.push(Event {
                time_s: time(r),
                node: *sensor,
                subcarrier,
                kind: EventKind::Ready,
                packet_id: id,
            });
            // Next slot owned by this sensor at or after the ready time.
            let period = slot * k;
            let phase = slot_index as u64 * slot;
            let cycles = if r <= phase {
                0
            } else {
                (r - phase).div_ceil(period)
            };
            let start = phase + cycles * period;
            let end = start + span;
            last_end = last_end.max(end);
            log.push(Event {
                time_s: time(start),
                node: *sensor,
                subcarrier,
                kind: EventKind::TxStart,
                packet_id: id,
            });
            log.push(Event {
                time_s: time(end),
                node: *sensor,
                subcarrier,
                kind: EventKind::TxEnd,
                packet_id: id,
            });
            log.push(Event {
                time_s: time(end),
                node: *sensor,
                subcarrier,
                kind: EventKind::RxOk,
                packet_id: id,
            });
        }
    }
    last_end
}

/// Run the legacy comparator for the configured scenario kind.
pub fn run_snow_baseline(config: &ScenarioConfig) -> Result<(EventLog, MetricsReport)> {
    config.validate()?;
    match config.scenario {
        ScenarioKind::Uplink => baseline_uplink(config),
        ScenarioKind::Downlink => baseline_downlink(config),
        ScenarioKind::P2p => baseline_p2p(config),
    }
}

fn arrivals_for(
    config: &ScenarioConfig,
    rep: usize,
    purpose: u64,
    sensor: u64,
    span: u64,
) -> Vec<u64> {
    let mut rng = stream_rng(config.rng_seed, rep, purpose, sensor);
    let chip_rate = config.subcarrier_bw_hz;
    let gap_min = ms_to_chips(config.interval_min_ms, chip_rate);
    let gap_max = ms_to_chips(config.interval_max_ms, chip_rate);
    let mut t = rng.gen_range(0..span + gap_max + 1);
    let mut out = Vec::with_capacity(config.packets_per_sensor);
    for _ in 0..config.packets_per_sensor {
        out.push(t);
        t += span + rng.gen_range(gap_min..=gap_max);
    }
    out
}

fn baseline_uplink(config: &ScenarioConfig) -> Result<(EventLog, MetricsReport)> {
    let plan = build_subcarrier_plan(
        config.band_start_hz,
        config.band_end_hz,
        config.subcarrier_bw_hz,
        config.overlap,
    )?;
    let active: Vec<usize> = if config.active_subcarriers == 0 {
        (1..=plan.len()).collect()
    } else {
        plan.centered_block(config.active_subcarriers)?
    };
    let (pns1, pns2) = evaluation_sets();
    let profiles = assign_pn_sequences(
        &plan,
        &active,
        config.sensors_per_subcarrier,
        (&pns1, &pns2),
    )?;
    let span = span_chips(config);
    let chip_rate = plan.chip_rate_hz();

    let mut log = EventLog::new();
    let mut rep_offset = 0u64;
    for rep in 0..config.repetitions {
        let mut rep_end = 0u64;
        for &sc in &active {
            let arrivals: Vec<(u64, Vec<u64>)> = profiles
                .iter()
                .filter(|p| p.subcarrier_index == sc)
                .map(|p| (p.id, arrivals_for(config, rep, 11, p.id, span)))
                .collect();
            let mut rng = stream_rng(config.rng_seed, rep, 12, sc as u64);
            let end = csma_subcarrier(
                sc,
                &arrivals,
                span,
                chip_rate,
                rep_offset,
                &mut rng,
                &mut log,
                rep as u64 * 1_000_000_000,
            );
            rep_end = rep_end.max(end);
        }
        rep_offset += rep_end + 4096;
    }
    log.finalize();
    let report = baseline_report(&log, config, "baseline-uplink");
    Ok((log, report))
}

fn baseline_downlink(config: &ScenarioConfig) -> Result<(EventLog, MetricsReport)> {
    let plan = build_subcarrier_plan(
        config.band_start_hz,
        config.band_end_hz,
        config.subcarrier_bw_hz,
        config.overlap,
    )?;
    let active: Vec<usize> = if config.active_subcarriers == 0 {
        (1..=plan.len()).collect()
    } else {
        plan.centered_block(config.active_subcarriers)?
    };
    let (pns1, pns2) = evaluation_sets();
    let profiles = assign_pn_sequences(
        &plan,
        &active,
        config.sensors_per_subcarrier,
        (&pns1, &pns2),
    )?;
    let span = span_chips(config);
    let chip_rate = plan.chip_rate_hz();

    let mut log = EventLog::new();
    let mut rep_offset = 0u64;
    for rep in 0..config.repetitions {
        let mut rep_end = 0u64;
        for &sc in &active {
            let arrivals: Vec<(u64, Vec<u64>)> = profiles
                .iter()
                .filter(|p| p.subcarrier_index == sc)
                .map(|p| (p.id, arrivals_for(config, rep, 13, p.id, span)))
                .collect();
            let end = round_robin_downlink(
                sc,
                &arrivals,
                span,
                chip_rate,
                rep_offset,
                &mut log,
                rep as u64 * 1_000_000_000,
            );
            rep_end = rep_end.max(end);
        }
        rep_offset += rep_end + 4096;
    }
    log.finalize();
    let report = baseline_report(&log, config, "baseline-downlink");
    Ok((log, report))
}

/// P2P in the legacy design: ACK-paced senders (one outstanding packet per
/// pair), CSMA uplink, fixed processing delay, then the receiver's
/// round-robin downlink slot.
fn baseline_p2p(config: &ScenarioConfig) -> Result<(EventLog, MetricsReport)> {
    let plan = build_subcarrier_plan(
        config.band_start_hz,
        config.band_end_hz,
        config.subcarrier_bw_hz,
        config.overlap,
    )?;
    let pairs = config.pairs;
    if !(5..=25).contains(&pairs) {
        return Err(Error::Config(format!(
            "pairs: allowed range is 5..=25, got {pairs}"
        )));
    }
    let k = pairs.div_ceil(super::MAX_SENSORS_PER_SUBCARRIER);
    let base = pairs / k;
    let extra = pairs % k;
    let sizes: Vec<usize> = (0..k).map(|i| base + usize::from(i < extra)).collect();
    let span = span_chips(config);
    let chip_rate = plan.chip_rate_hz();
    let processing = super::scenarios::FORWARD_PROCESSING_CHIPS;

    let mut log = EventLog::new();
    let mut rep_offset = 0u64;
    for rep in 0..config.repetitions {
        let mut rep_end = 0u64;
        let mut pair = 0usize;
        for (block, &size) in sizes.iter().enumerate() {
            let up_sc = block + 1;
            let down_sc = plan.len() - k + 1 + block;
            // Stop-and-wait per pair on a shared CSMA uplink subcarrier and
            // a shared round-robin downlink subcarrier.
            #[derive(Clone)]
            struct PairState {
                id: u64,
                receiver: u64,
                slot_index: u64,
                remaining: usize,
                next_ready: u64,
                expiry: u64,
                contending: bool,
                seq: u64,
            }
            let mut states: Vec<PairState> = (0..size)
                .map(|s| {
                    let id = (pair + s + 1) as u64;
                    let mut rng = stream_rng(config.rng_seed, rep, 14, id);
                    PairState {
                        id,
                        receiver: 1000 + id,
                        slot_index: s as u64,
                        remaining: config.packets_per_sensor,
                        next_ready: rng.gen_range(0..span),
                        expiry: 0,
                        contending: false,
                    seq: 0,
                    }
                })
                .collect();
            let mut rng = stream_rng(config.rng_seed, rep, 15, up_sc as u64);
            let time = |chip: u64| (chip + rep_offset) as f64 / chip_rate;
            let slot = span * RR_SLOT_FACTOR;
            let period = slot * size as u64;
            let mut busy_until = 0u64;
            loop {
                for st in states.iter_mut() {
                    if !st.contending && st.remaining > 0 {
                        let id = rep as u64 * 1_000_000_000 + st.id * 100_000 + st.seq;
                        log.push(Event {
                            time_s: time(st.next_ready),
                            node: st.id,
                            subcarrier: up_sc,
                            kind: EventKind::Ready,
                            packet_id: id,
                        });
                        st.expiry = st.next_ready + rng.gen_range(0..=INITIAL_BACKOFF_CHIPS);
                        st.contending = true;
                    }
                }
                let Some(min_expiry) = states
                    .iter()
                    .filter(|s| s.contending)
                    .map(|s| s.expiry)
                    .min()
                else {
                    break;
                };
                if min_expiry < busy_until {
                    for st in states.iter_mut() {
                        if st.contending && st.expiry == min_expiry {
                            st.expiry = busy_until + rng.gen_range(0..=CONGESTION_BACKOFF_CHIPS);
                        }
                    }
                    continue;
                }
                let winners: Vec<usize> = states
                    .iter()
                    .enumerate()
                    .filter(|(_, s)| s.contending && s.expiry == min_expiry)
                    .map(|(i, _)| i)
                    .collect();
                let start = min_expiry;
                let end = start + span;
                busy_until = end;
                let collided = winners.len() > 1;
                for &w in &winners {
                    let st = &mut states[w];
                    let id = rep as u64 * 1_000_000_000 + st.id * 100_000 + st.seq;
                    log.push(Event {
                        time_s: time(start),
                        node: st.id,
                        subcarrier: up_sc,
                        kind: EventKind::TxStart,
                        packet_id: id,
                    });
                    log.push(Event {
                        time_s: time(end),
                        node: st.id,
                        subcarrier: up_sc,
                        kind: EventKind::TxEnd,
                        packet_id: id,
                    });
                    if collided {
                        st.expiry = end + rng.gen_range(0..=CONGESTION_BACKOFF_CHIPS);
                        continue;
                    }
                    log.push(Event {
                        time_s: time(end),
                        node: st.id,
                        subcarrier: up_sc,
                        kind: EventKind::DecodeOk,
                        packet_id: id,
                    });
                    // Forward in the receiver's next round-robin slot.
                    let ready = end + processing;
                    let phase = st.slot_index * slot;
                    let cycles = if ready <= phase {
                        0
                    } else {
                        (ready - phase).div_ceil(period)
                    };
                    let dl_start = phase + cycles * period;
                    let dl_end = dl_start + span;
                    rep_end = rep_end.max(dl_end);
                    log.push(Event {
                        time_s: time(dl_start),
                        node: super::BS_NODE_ID,
                        subcarrier: down_sc,
                        kind: EventKind::TxStart,
                        packet_id: id,
                    });
                    log.push(Event {
                        time_s: time(dl_end),
                        node: super::BS_NODE_ID,
                        subcarrier: down_sc,
                        kind: EventKind::TxEnd,
                        packet_id: id,
                    });
                    log.push(Event {
                        time_s: time(dl_end),
                        node: st.receiver,
                        subcarrier: down_sc,
                        kind: EventKind::RxOk,
                        packet_id: id,
                    });
                    // ACK-paced: the next packet becomes ready only after
                    // delivery.
                    st.remaining -= 1;
                    st.seq += 1;
                    st.next_ready = dl_end;
                    st.contending = false;
                }
            }
            pair += size;
        }
        rep_offset += rep_end + 4096;
    }
    log.finalize();
    let report = baseline_report(&log, config, "baseline-p2p");
    Ok((log, report))
}

fn baseline_report(log: &EventLog, config: &ScenarioConfig, scenario: &str) -> MetricsReport {
    let (per_subcarrier, average) = compute_cdr(log);
    let delivered = log
        .events()
        .iter()
        .filter(|e| matches!(e.kind, EventKind::DecodeOk | EventKind::RxOk))
        .count() as u64;
    let total = log
        .events()
        .iter()
        .filter(|e| {
            matches!(
                e.kind,
                EventKind::DecodeOk | EventKind::RxOk | EventKind::DecodeFail | EventKind::RxFail
            )
        })
        .count() as u64;
    let e2e = compute_e2e(log);
    let mean_e2e = (!e2e.is_empty() && scenario == "baseline-p2p")
        .then(|| e2e.iter().sum::<f64>() / e2e.len() as f64);
    MetricsReport {
        scenario: scenario.to_string(),
        per_subcarrier_cdr_percent: per_subcarrier,
        average_cdr_percent: average,
        throughput_bps: compute_throughput(log, config.payload_bytes),
        mean_latency_s: compute_latency(log),
        mean_energy_j: compute_energy(log, &EnergyModel::default()),
        e2e_latency_s: (scenario == "baseline-p2p").then_some(e2e),
        mean_e2e_latency_s: mean_e2e,
        delivered_packets: delivered,
        total_packets: total,
        makespan_s: log.makespan_s(),
    }
}

//! The three evaluation scenarios: uplink convergecast, concurrent
//! downlink, and P2P relaying through the base station.

use std::collections::BTreeMap;

use crate::metrics::{
    compute_cdr, compute_e2e, compute_energy, compute_latency, compute_throughput, EnergyModel,
    MetricsReport,
};
use crate::phy::{build_subcarrier_plan, SubcarrierPlan};
use crate::pnseq::evaluation_sets;
use crate::spreadcodec::Packet;
use crate::{Error, Result};

use super::config::{ScenarioConfig, ScenarioKind};
use super::pipeline::{draw_phase, simulate_subcarrier_row, stream_rng, PacketOutcome, SensorTrain};
use super::traffic::{generate_traffic, PlannedPacket};
use super::{assign_pn_sequences, Event, EventKind, EventLog, NodeProfile};

/// Base-station processing and queueing delay before a decoded P2P packet
/// is handed to the Tx-Radio, in chips. Calibrated so the 5-pair mean E2E
/// latency reproduces the reference figure; see the project notes.
pub(crate) const FORWARD_PROCESSING_CHIPS: u64 = 1948;

/// Minimum spacing between downlink packet starts on one subcarrier: the
/// Tx-Radio rebuilds its composite schedule with this granularity, so
/// forwarding queues deepen with subcarrier load.
const TX_RADIO_START_SPACING_CHIPS: u64 = 225;

fn event_time(chip: u64, chip_rate_hz: f64, rep_offset_chips: u64) -> f64 {
    (chip + rep_offset_chips) as f64 / chip_rate_hz
}

fn build_plan(config: &ScenarioConfig) -> Result<(SubcarrierPlan, Vec<usize>)> {
    let plan = build_subcarrier_plan(
        config.band_start_hz,
        config.band_end_hz,
        config.subcarrier_bw_hz,
        config.overlap,
    )?;
    let active = if config.active_subcarriers == 0 {
        (1..=plan.len()).collect()
    } else {
        plan.centered_block(config.active_subcarriers)?
    };
    Ok((plan, active))
}

struct SharedRun {
    log: EventLog,
}

/// Shared uplink/downlink machinery: identical rows and decoding, different
/// event attribution (base-station decode vs sensor receive).
fn run_shared(config: &ScenarioConfig, direction: ScenarioKind) -> Result<SharedRun> {
    config.validate()?;
    let (plan, active) = build_plan(config)?;
    let (pns1, pns2) = evaluation_sets();
    let profiles = assign_pn_sequences(
        &plan,
        &active,
        config.sensors_per_subcarrier,
        (&pns1, &pns2),
    )?;
    let chip_rate = plan.chip_rate_hz();
    let spc = plan.samples_per_chip();

    let mut log = EventLog::new();
    let mut rep_offset = 0u64;
    let mut packet_counter = 0u64;

    for rep in 0..config.repetitions {
        let mut rep_end = 0u64;
        for &sc in &active {
            let set = if sc % 2 == 1 { &pns1 } else { &pns2 };
            let trains: Vec<SensorTrain> = profiles
                .iter()
                .filter(|p| p.subcarrier_index == sc)
                .map(|profile| {
                    let purpose = if direction == ScenarioKind::Downlink { 21 } else { 1 };
                    let mut rng = stream_rng(config.rng_seed, rep, purpose, profile.id);
                    let packets =
                        generate_traffic(profile, config, &mut rng, packet_counter + profile.id * 1_000_000);
                    SensorTrain { profile, packets }
                })
                .collect();
            let noise_purpose = if direction == ScenarioKind::Downlink { 22 } else { 2 };
            let mut noise_rng = stream_rng(config.rng_seed, rep, noise_purpose, sc as u64);
            let outcomes =
                simulate_subcarrier_row(sc, &trains, set, config, spc, &mut noise_rng);
            for o in &outcomes {
                rep_end = rep_end.max(o.end_chip);
                push_packet_events(&mut log, o, direction, chip_rate, rep_offset);
            }
        }
        packet_counter += 100_000_000;
        rep_offset += rep_end + 4096;
    }
    log.finalize();
    Ok(SharedRun { log })
}

fn push_packet_events(
    log: &mut EventLog,
    o: &PacketOutcome,
    direction: ScenarioKind,
    chip_rate: f64,
    rep_offset: u64,
) {
    let t_ready = event_time(o.data_start_chip, chip_rate, rep_offset);
    let t_end = event_time(o.end_chip, chip_rate, rep_offset);
    let node = o.sensor_id;
    let sc = o.subcarrier;
    let id = o.packet_id;
    log.push(Event {
        time_s: t_ready,
        node,
        subcarrier: sc,
        kind: EventKind::Ready,
        packet_id: id,
    });
    log.push(Event {
        time_s: t_ready,
        node,
        subcarrier: sc,
        kind: EventKind::TxStart,
        packet_id: id,
    });
    log.push(Event {
        time_s: t_end,
        node,
        subcarrier: sc,
        kind: EventKind::TxEnd,
        packet_id: id,
    });
    let kind = match (direction, o.ok) {
        (ScenarioKind::Downlink, true) => EventKind::RxOk,
        (ScenarioKind::Downlink, false) => EventKind::RxFail,
        (_, true) => EventKind::DecodeOk,
        (_, false) => EventKind::DecodeFail,
    };
    log.push(Event {
        time_s: t_end,
        node,
        subcarrier: sc,
        kind,
        packet_id: id,
    });
}

fn report_from_log(log: &EventLog, config: &ScenarioConfig, scenario: &str) -> MetricsReport {
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
    let mean_e2e = (!e2e.is_empty() && scenario == "p2p")
        .then(|| e2e.iter().sum::<f64>() / e2e.len() as f64);
    MetricsReport {
        scenario: scenario.to_string(),
        per_subcarrier_cdr_percent: per_subcarrier,
        average_cdr_percent: average,
        throughput_bps: compute_throughput(log, config.payload_bytes),
        mean_latency_s: compute_latency(log),
        mean_energy_j: compute_energy(log, &EnergyModel::default()),
        e2e_latency_s: (scenario == "p2p").then_some(e2e),
        mean_e2e_latency_s: mean_e2e,
        delivered_packets: delivered,
        total_packets: total,
        makespan_s: log.makespan_s(),
    }
}

/// Uplink convergecast: every sensor transmits its train; the base station
/// demultiplexes, detects, and decodes per subcarrier.
pub fn run_uplink_convergecast(config: &ScenarioConfig) -> Result<(EventLog, MetricsReport)> {
    let run = run_shared(config, ScenarioKind::Uplink)?;
    let report = report_from_log(&run.log, config, "uplink");
    Ok((run.log, report))
}

/// Concurrent downlink: the base station transmits per-sensor trains as a
/// composite; each sensor reads its subcarrier bin and decodes its own
/// packets with the shared subcarrier decoder (uplink/downlink duality).
pub fn run_downlink(config: &ScenarioConfig) -> Result<(EventLog, MetricsReport)> {
    let run = run_shared(config, ScenarioKind::Downlink)?;
    let report = report_from_log(&run.log, config, "downlink");
    Ok((run.log, report))
}

/// P2P pair layout: senders packed onto the lowest subcarriers, receivers
/// onto the highest, balanced, at least 5 and at most 9 per subcarrier.
fn p2p_layout(plan: &SubcarrierPlan, pairs: usize) -> Result<(Vec<usize>, Vec<usize>, Vec<usize>)> {
    if !(5..=25).contains(&pairs) {
        return Err(Error::Config(format!(
            "pairs: allowed range is 5..=25 (at least 5 per used subcarrier), got {pairs}"
        )));
    }
    let k = pairs.div_ceil(super::MAX_SENSORS_PER_SUBCARRIER);
    let base = pairs / k;
    let extra = pairs % k;
    let sizes: Vec<usize> = (0..k).map(|i| base + usize::from(i < extra)).collect();
    if sizes.iter().any(|&s| s < 5) {
        return Err(Error::Config(format!(
            "pair layout {sizes:?} violates the 5-per-subcarrier floor"
        )));
    }
    if 2 * k + 2 > plan.len() {
        return Err(Error::Config(format!(
            "plan of {} subcarriers cannot host disjoint sender/receiver sets for {pairs} pairs",
            plan.len()
        )));
    }
    let uplink: Vec<usize> = (1..=k).collect();
    let downlink: Vec<usize> = (plan.len() - k + 1..=plan.len()).collect();
    Ok((uplink, downlink, sizes))
}

/// P2P through the base station: senders uplink to the BS; correctly
/// decoded packets are forwarded after a fixed processing delay on the
/// receiver's downlink subcarrier, with starts deferred to a chip offset
/// that no concurrent stream on that subcarrier occupies modulo the
/// spreading factor.
pub fn run_p2p(config: &ScenarioConfig) -> Result<(EventLog, MetricsReport)> {
    config.validate()?;
    let (plan, _) = build_plan(config)?;
    let (pns1, pns2) = evaluation_sets();
    let (uplink_subs, downlink_subs, sizes) = p2p_layout(&plan, config.pairs)?;
    let chip_rate = plan.chip_rate_hz();
    let spc = plan.samples_per_chip();
    let n = pns1.period();
    let layout = config.layout();
    let span = (layout.total_bits() * n) as u64;

    // Sender and receiver profiles, pair i: sender id i+1, receiver id
    // 1001+i.
    let mut senders = Vec::new();
    let mut receivers = Vec::new();
    {
        let mut pair = 0usize;
        for (block, &sc) in uplink_subs.iter().enumerate() {
            let set = if sc % 2 == 1 { &pns1 } else { &pns2 };
            for s in 0..sizes[block] {
                senders.push(NodeProfile {
                    id: (pair + 1) as u64,
                    subcarrier_index: sc,
                    pn: set.sequences()[s].clone(),
                    role: super::NodeRole::Sensor,
                    tx_power_dbm: config.tx_power_dbm,
                    rx_sensitivity_dbm: config.rx_sensitivity_dbm,
                });
                pair += 1;
            }
        }
        pair = 0;
        for (block, &sc) in downlink_subs.iter().enumerate() {
            let set = if sc % 2 == 1 { &pns1 } else { &pns2 };
            for s in 0..sizes[block] {
                receivers.push(NodeProfile {
                    id: 1001 + pair as u64,
                    subcarrier_index: sc,
                    pn: set.sequences()[s].clone(),
                    role: super::NodeRole::Sensor,
                    tx_power_dbm: config.tx_power_dbm,
                    rx_sensitivity_dbm: config.rx_sensitivity_dbm,
                });
                pair += 1;
            }
        }
    }

    let mut log = EventLog::new();
    let mut rep_offset = 0u64;

    for rep in 0..config.repetitions {
        let mut rep_end = 0u64;
        // Sender traffic with routing headers.
        let mut trains_by_sub: BTreeMap<usize, Vec<SensorTrain>> = BTreeMap::new();
        let mut truth: BTreeMap<u64, (usize, Vec<u8>, u64)> = BTreeMap::new();
        for (i, sender) in senders.iter().enumerate() {
            let mut rng = stream_rng(config.rng_seed, rep, 3, sender.id);
            let mut packets = generate_traffic(sender, config, &mut rng, 0);
            for (seq, planned) in packets.iter_mut().enumerate() {
                let receiver = &receivers[i];
                let mut header = vec![0u8; layout.header_bytes];
                let src = (sender.id as u32).to_be_bytes();
                let dst = (receiver.id as u32).to_be_bytes();
                let sq = (seq as u32).to_be_bytes();
                for (slot, bytes) in [(0, src), (4, dst), (8, sq)] {
                    for (j, &b) in bytes.iter().enumerate() {
                        if slot + j < header.len() {
                            header[slot + j] = b;
                        }
                    }
                }
                let payload = planned.packet.payload().to_vec();
                planned.packet = Packet::from_data(layout, header, payload)?;
                planned.packet_id = rep as u64 * 100_000_000 + sender.id * 100_000 + seq as u64;
                truth.insert(
                    planned.packet_id,
                    (i, planned.packet.data_bytes(), planned.start_chip),
                );
            }
            trains_by_sub
                .entry(sender.subcarrier_index)
                .or_default()
                .push(SensorTrain {
                    profile: sender,
                    packets,
                });
        }

        // Uplink leg.
        let mut decoded_uplink: Vec<PacketOutcome> = Vec::new();
        for (&sc, trains) in &trains_by_sub {
            let set = if sc % 2 == 1 { &pns1 } else { &pns2 };
            let mut noise_rng = stream_rng(config.rng_seed, rep, 4, sc as u64);
            let outcomes =
                simulate_subcarrier_row(sc, trains, set, config, spc, &mut noise_rng);
            for o in &outcomes {
                rep_end = rep_end.max(o.end_chip);
                // Sender-side events plus BS decode outcome.
                let t_ready = event_time(o.data_start_chip, chip_rate, rep_offset);
                let t_end = event_time(o.end_chip, chip_rate, rep_offset);
                for (kind, t) in [
                    (EventKind::Ready, t_ready),
                    (EventKind::TxStart, t_ready),
                    (EventKind::TxEnd, t_end),
                ] {
                    log.push(Event {
                        time_s: t,
                        node: o.sensor_id,
                        subcarrier: sc,
                        kind,
                        packet_id: o.packet_id,
                    });
                }
                log.push(Event {
                    time_s: t_end,
                    node: o.sensor_id,
                    subcarrier: sc,
                    kind: if o.ok {
                        EventKind::DecodeOk
                    } else {
                        EventKind::DecodeFail
                    },
                    packet_id: o.packet_id,
                });
            }
            decoded_uplink.extend(outcomes);
        }

        // Forwarding: the BS routes every packet it decoded to the receiver
        // named in the (decoded) header. Per-receiver streams serialize;
        // starts defer to a free chip offset modulo N on the subcarrier.
        decoded_uplink.sort_by_key(|o| (o.end_chip, o.packet_id));
        let mut stream_busy_until: BTreeMap<u64, u64> = BTreeMap::new();
        let mut scheduled: BTreeMap<usize, Vec<(u64, u64)>> = BTreeMap::new(); // sub -> (start, end)
        let mut forwards: BTreeMap<usize, Vec<SensorTrain>> = BTreeMap::new();
        let mut forward_truth: BTreeMap<u64, (u64, Vec<u8>)> = BTreeMap::new(); // packet id -> (receiver, original bytes)
        let mut phase_rng = stream_rng(config.rng_seed, rep, 5, 0);
        let mut forward_packets: BTreeMap<u64, Vec<PlannedPacket>> = BTreeMap::new();

        for o in &decoded_uplink {
            let Some(decoded_bytes) = o.decoded_data.clone() else {
                continue;
            };
            if decoded_bytes.len() < 8 {
                continue;
            }
            let dst = u32::from_be_bytes([
                decoded_bytes[4],
                decoded_bytes[5],
                decoded_bytes[6],
                decoded_bytes[7],
            ]) as u64;
            let Some(receiver) = receivers.iter().find(|r| r.id == dst) else {
                continue; // corrupted routing header: dropped at the BS
            };
            let ready = o.end_chip + FORWARD_PROCESSING_CHIPS;
            let after_stream = stream_busy_until
                .get(&receiver.id)
                .copied()
                .unwrap_or(0)
                .max(ready);
            let sub_sched = scheduled.entry(receiver.subcarrier_index).or_default();
            let paced = sub_sched
                .iter()
                .map(|&(s, _)| s + TX_RADIO_START_SPACING_CHIPS)
                .max()
                .unwrap_or(0)
                .max(after_stream);
            let start = next_safe_start(paced, span, n as u64, sub_sched);
            sub_sched.push((start, start + span));
            stream_busy_until.insert(receiver.id, start + span);

            let header = decoded_bytes[..layout.header_bytes].to_vec();
            let payload = decoded_bytes[layout.header_bytes..].to_vec();
            let packet = Packet::from_data(layout, header, payload)?;
            let phase = draw_phase(config.phase_mode, &mut phase_rng);
            forward_packets
                .entry(receiver.id)
                .or_default()
                .push(PlannedPacket {
                    packet,
                    start_chip: start,
                    phase,
                    packet_id: o.packet_id,
                });
            let original = truth.get(&o.packet_id).expect("truth recorded").1.clone();
            forward_truth.insert(o.packet_id, (receiver.id, original));
            // BS downlink transmit events.
            let t_start = event_time(start + (layout.preamble_bytes * 8 * n) as u64, chip_rate, rep_offset);
            let t_end = event_time(start + span, chip_rate, rep_offset);
            rep_end = rep_end.max(start + span);
            log.push(Event {
                time_s: t_start,
                node: super::BS_NODE_ID,
                subcarrier: receiver.subcarrier_index,
                kind: EventKind::TxStart,
                packet_id: o.packet_id,
            });
            log.push(Event {
                time_s: t_end,
                node: super::BS_NODE_ID,
                subcarrier: receiver.subcarrier_index,
                kind: EventKind::TxEnd,
                packet_id: o.packet_id,
            });
        }
        for receiver in &receivers {
            let Some(packets) = forward_packets.remove(&receiver.id) else {
                continue;
            };
            forwards
                .entry(receiver.subcarrier_index)
                .or_default()
                .push(SensorTrain {
                    profile: receiver,
                    packets,
                });
        }

        // Downlink leg: receivers decode their subcarrier rows.
        for (&sc, trains) in &forwards {
            let set = if sc % 2 == 1 { &pns1 } else { &pns2 };
            let mut noise_rng = stream_rng(config.rng_seed, rep, 6, sc as u64);
            let outcomes =
                simulate_subcarrier_row(sc, trains, set, config, spc, &mut noise_rng);
            for o in &outcomes {
                rep_end = rep_end.max(o.end_chip);
                let (receiver_id, original) = &forward_truth[&o.packet_id];
                let delivered = o.ok
                    && o.decoded_data.as_deref() == Some(original.as_slice())
                    && o.sensor_id == *receiver_id;
                log.push(Event {
                    time_s: event_time(o.end_chip, chip_rate, rep_offset),
                    node: *receiver_id,
                    subcarrier: sc,
                    kind: if delivered {
                        EventKind::RxOk
                    } else {
                        EventKind::RxFail
                    },
                    packet_id: o.packet_id,
                });
            }
        }
        rep_offset += rep_end + 4096;
    }

    log.finalize();
    let report = report_from_log(&log, config, "p2p");
    Ok((log, report))
}

/// Smallest start at or after `from` whose offset modulo `n` is not used by
/// any scheduled transmission overlapping the candidate window; if every
/// residue is occupied, defer to the earliest end among the blockers.
fn next_safe_start(from: u64, span: u64, n: u64, scheduled: &[(u64, u64)]) -> u64 {
    let mut candidate = from;
    loop {
        let mut taken = [false; 16];
        let mut earliest_end = u64::MAX;
        for &(s, e) in scheduled {
            if s < candidate + span && candidate < e {
                taken[(s % n) as usize] = true;
                earliest_end = earliest_end.min(e);
            }
        }
        // Prefer the nearest free residue at or after the candidate.
        for delta in 0..n {
            if !taken[((candidate + delta) % n) as usize] {
                return candidate + delta;
            }
        }
        candidate = earliest_end;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn safe_start_skips_taken_residues() {
        // One stream at offset 0 mod 7, still busy.
        let scheduled = vec![(0u64, 2296u64)];
        let start = next_safe_start(0, 2296, 7, &scheduled);
        assert_eq!(start, 1);
        // All seven residues busy: defer to the earliest end.
        let scheduled: Vec<(u64, u64)> = (0..7).map(|i| (i, i + 2296)).collect();
        let start = next_safe_start(0, 2296, 7, &scheduled);
        assert_eq!(start, 2296);
    }

    #[test]
    fn layout_balances_and_bounds() {
        let plan = SubcarrierPlan::default_evaluation();
        assert_eq!(p2p_layout(&plan, 5).unwrap().2, vec![5]);
        assert_eq!(p2p_layout(&plan, 25).unwrap().2, vec![9, 8, 8]);
        assert_eq!(p2p_layout(&plan, 10).unwrap().2, vec![5, 5]);
        assert!(p2p_layout(&plan, 4).is_err());
        assert!(p2p_layout(&plan, 26).is_err());
        let (up, down, _) = p2p_layout(&plan, 25).unwrap();
        assert!(up.iter().all(|u| !down.contains(u)));
    }
}

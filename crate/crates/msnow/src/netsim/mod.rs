//! Scenario simulation: node profiles, traffic, the three evaluation
//! scenarios (uplink convergecast, concurrent downlink, P2P via the base
//! station), and the legacy single-decode-per-subcarrier baseline.

mod baseline;
mod config;
mod pipeline;
mod scenarios;
mod traffic;

pub use baseline::run_snow_baseline;
pub use config::{parse_config, parse_config_str, PhaseMode, ScenarioConfig, ScenarioKind};
pub use scenarios::{run_downlink, run_p2p, run_uplink_convergecast};
pub use traffic::{generate_traffic, PlannedPacket};

use std::fmt;

use crate::pnseq::{PnSequence, PnSet};
use crate::phy::SubcarrierPlan;
use crate::{Error, Result};

/// Node id used for base-station transmit events in logs.
pub const BS_NODE_ID: u64 = 0;

/// Per-subcarrier concurrency capacity: the size of one Gold set for the
/// evaluation degree (N + 2 = 9 at n = 3). Sharing a subcarrier beyond this
/// needs the future MAC layer and is rejected.
pub const MAX_SENSORS_PER_SUBCARRIER: usize = 9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeRole {
    Sensor,
    BaseStation,
}

/// A provisioned node: its subcarrier, PN sequence, and radio parameters.
#[derive(Debug, Clone)]
pub struct NodeProfile {
    pub id: u64,
    pub subcarrier_index: usize,
    pub pn: PnSequence,
    pub role: NodeRole,
    pub tx_power_dbm: f64,
    pub rx_sensitivity_dbm: f64,
}

/// Assign PN sequences to `sensors_per_subcarrier` sensors on each of the
/// given subcarriers: odd-numbered subcarriers draw from the first set in
/// order, even-numbered from the second, which keeps neighboring
/// subcarriers on different sets by construction.
pub fn assign_pn_sequences(
    plan: &SubcarrierPlan,
    active_subcarriers: &[usize],
    sensors_per_subcarrier: usize,
    sets: (&PnSet, &PnSet),
) -> Result<Vec<NodeProfile>> {
    if sensors_per_subcarrier == 0 {
        return Err(Error::Config("sensors_per_subcarrier must be >= 1".into()));
    }
    if sensors_per_subcarrier > MAX_SENSORS_PER_SUBCARRIER {
        return Err(Error::Capacity(format!(
            "{sensors_per_subcarrier} sensors per subcarrier exceeds the PHY concurrency \
             capacity of {MAX_SENSORS_PER_SUBCARRIER}; subcarrier sharing beyond one PN set \
             is left to a future MAC layer"
        )));
    }
    let mut profiles = Vec::with_capacity(active_subcarriers.len() * sensors_per_subcarrier);
    let mut id = 1u64;
    for &sc in active_subcarriers {
        plan.subcarrier(sc)?;
        let set = if sc % 2 == 1 { sets.0 } else { sets.1 };
        for s in 0..sensors_per_subcarrier {
            let pn = set
                .get(s)
                .ok_or_else(|| Error::Capacity(format!("PN set exhausted at member {s}")))?;
            profiles.push(NodeProfile {
                id,
                subcarrier_index: sc,
                pn: pn.clone(),
                role: NodeRole::Sensor,
                tx_power_dbm: 0.0,
                rx_sensitivity_dbm: -85.0,
            });
            id += 1;
        }
    }
    Ok(profiles)
}

/// Event kinds recorded by every scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    /// Packet handed to the radio (queueing and backoff start here).
    Ready,
    TxStart,
    TxEnd,
    /// Base-station decode outcome (uplink).
    DecodeOk,
    DecodeFail,
    /// Sensor-side receive outcome (downlink / P2P delivery).
    RxOk,
    RxFail,
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            EventKind::Ready => "ready",
            EventKind::TxStart => "tx_start",
            EventKind::TxEnd => "tx_end",
            EventKind::DecodeOk => "decode_ok",
            EventKind::DecodeFail => "decode_fail",
            EventKind::RxOk => "rx_ok",
            EventKind::RxFail => "rx_fail",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub time_s: f64,
    pub node: u64,
    pub subcarrier: usize,
    pub kind: EventKind,
    pub packet_id: u64,
}

/// Time-ordered scenario record. Push order must be non-decreasing in time
/// per source; the log sorts on finalization.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EventLog {
    events: Vec<Event>,
}

impl EventLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, event: Event) {
        self.events.push(event);
    }

    pub fn finalize(&mut self) {
        self.events.sort_by(|a, b| {
            a.time_s
                .total_cmp(&b.time_s)
                .then(a.packet_id.cmp(&b.packet_id))
                .then(a.node.cmp(&b.node))
        });
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    /// First transmission start to last delivery-or-transmission event.
    pub fn makespan_s(&self) -> f64 {
        let start = self
            .events
            .iter()
            .filter(|e| matches!(e.kind, EventKind::TxStart))
            .map(|e| e.time_s)
            .fold(f64::INFINITY, f64::min);
        let end = self
            .events
            .iter()
            .map(|e| e.time_s)
            .fold(f64::NEG_INFINITY, f64::max);
        if start.is_finite() && end > start {
            end - start
        } else {
            0.0
        }
    }

    /// CSV export with the documented header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("time_s,node,subcarrier,event,packet_id\n");
        for e in &self.events {
            out.push_str(&format!(
                "{:.9},{},{},{},{}\n",
                e.time_s, e.node, e.subcarrier, e.kind, e.packet_id
            ));
        }
        out
    }
}

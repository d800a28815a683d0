//! Scenario configuration: defaults, validation, and the key-value text
//! format.

use std::path::Path;

use crate::spreadcodec::PacketLayout;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioKind {
    Uplink,
    Downlink,
    P2p,
}

impl ScenarioKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ScenarioKind::Uplink => "uplink",
            ScenarioKind::Downlink => "downlink",
            ScenarioKind::P2p => "p2p",
        }
    }
}

/// Carrier-phase model for concurrent transmitters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseMode {
    /// All transmitters share a zero phase; magnitudes add linearly and the
    /// RSS threshold bands hold exactly.
    Coherent,
    /// Independent uniform phase per transmission, the behavior of
    /// free-running asynchronous oscillators.
    Random,
}

/// All scenario knobs with the evaluation defaults: 547-560 MHz, 400 kHz
/// subcarriers at 50% overlap, 0 dBm, -85 dBm sensitivity, 6 dB SNR,
/// 1+12+28-byte packets, OOK.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub scenario: ScenarioKind,
    pub band_start_hz: f64,
    pub band_end_hz: f64,
    pub subcarrier_bw_hz: f64,
    pub overlap: f64,
    /// Number of active subcarriers, taken as a centered block of the plan;
    /// 0 means every subcarrier.
    pub active_subcarriers: usize,
    pub sensors_per_subcarrier: usize,
    pub packets_per_sensor: usize,
    pub preamble_bytes: usize,
    pub header_bytes: usize,
    pub payload_bytes: usize,
    pub interval_min_ms: f64,
    pub interval_max_ms: f64,
    pub snr_db: f64,
    pub noise: bool,
    pub phase_mode: PhaseMode,
    pub tx_power_dbm: f64,
    pub rx_sensitivity_dbm: f64,
    pub rng_seed: u64,
    pub repetitions: usize,
    /// P2P only: number of sender/receiver pairs.
    pub pairs: usize,
    /// Deterministic train stagger: sensor at position `p` on its subcarrier
    /// starts at `p * stagger_chips`. 0 draws random asynchronous starts.
    pub stagger_chips: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            scenario: ScenarioKind::Uplink,
            band_start_hz: 547.0e6,
            band_end_hz: 560.0e6,
            subcarrier_bw_hz: 400.0e3,
            overlap: 0.5,
            active_subcarriers: 0,
            sensors_per_subcarrier: 1,
            packets_per_sensor: 100,
            preamble_bytes: 1,
            header_bytes: 12,
            payload_bytes: 28,
            interval_min_ms: 0.0,
            interval_max_ms: 3.0,
            snr_db: 6.0,
            noise: true,
            phase_mode: PhaseMode::Random,
            tx_power_dbm: 0.0,
            rx_sensitivity_dbm: -85.0,
            rng_seed: 1,
            repetitions: 1,
            pairs: 5,
            stagger_chips: 0,
        }
    }
}

impl ScenarioConfig {
    pub fn layout(&self) -> PacketLayout {
        PacketLayout {
            preamble_bytes: self.preamble_bytes,
            header_bytes: self.header_bytes,
            payload_bytes: self.payload_bytes,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, key: &str, allowed: &str| -> Result<()> {
            if ok {
                Ok(())
            } else {
                Err(Error::Config(format!("{key}: allowed range is {allowed}")))
            }
        };
        check(
            self.band_end_hz > self.band_start_hz,
            "band_end_hz",
            "> band_start_hz",
        )?;
        check(
            self.overlap > 0.0 && self.overlap <= 0.5,
            "overlap",
            "(0, 0.5]",
        )?;
        check(
            (1..=super::MAX_SENSORS_PER_SUBCARRIER).contains(&self.sensors_per_subcarrier),
            "sensors_per_subcarrier",
            "1..=9",
        )?;
        check(self.packets_per_sensor >= 1, "packets_per_sensor", ">= 1")?;
        check(self.repetitions >= 1, "repetitions", ">= 1")?;
        check(
            self.interval_min_ms >= 0.0 && self.interval_max_ms >= self.interval_min_ms,
            "interval_min_ms/interval_max_ms",
            "0 <= min <= max",
        )?;
        check(self.header_bytes + self.payload_bytes >= 1, "payload_bytes", ">= 1 data byte")?;
        check(
            (1..=25).contains(&self.pairs) || self.scenario != ScenarioKind::P2p,
            "pairs",
            "1..=25",
        )?;
        Ok(())
    }

    /// Apply one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("{key}: cannot parse '{value}'")))
        }
        match key {
            "scenario" => {
                self.scenario = match value.trim() {
                    "uplink" => ScenarioKind::Uplink,
                    "downlink" => ScenarioKind::Downlink,
                    "p2p" => ScenarioKind::P2p,
                    other => {
                        return Err(Error::Config(format!(
                            "scenario: unknown kind '{other}' (uplink|downlink|p2p)"
                        )))
                    }
                }
            }
            "band_start_hz" => self.band_start_hz = parse(key, value)?,
            "band_end_hz" => self.band_end_hz = parse(key, value)?,
            "subcarrier_bw_hz" => self.subcarrier_bw_hz = parse(key, value)?,
            "overlap" => self.overlap = parse(key, value)?,
            "active_subcarriers" => self.active_subcarriers = parse(key, value)?,
            "sensors_per_subcarrier" => {
                let v: usize = parse(key, value)?;
                if v > super::MAX_SENSORS_PER_SUBCARRIER {
                    return Err(Error::Config(format!(
                        "sensors_per_subcarrier: allowed range is 1..=9, got {v}"
                    )));
                }
                self.sensors_per_subcarrier = v;
            }
            "packets_per_sensor" => self.packets_per_sensor = parse(key, value)?,
            "preamble_bytes" => self.preamble_bytes = parse(key, value)?,
            "header_bytes" => self.header_bytes = parse(key, value)?,
            "payload_bytes" => self.payload_bytes = parse(key, value)?,
            "interval_min_ms" => self.interval_min_ms = parse(key, value)?,
            "interval_max_ms" => self.interval_max_ms = parse(key, value)?,
            "snr_db" => self.snr_db = parse(key, value)?,
            "noise" => {
                self.noise = match value.trim() {
                    "on" | "true" | "1" => true,
                    "off" | "false" | "0" => false,
                    other => {
                        return Err(Error::Config(format!(
                            "noise: expected on|off, got '{other}'"
                        )))
                    }
                }
            }
            "phase_mode" => {
                self.phase_mode = match value.trim() {
                    "coherent" => PhaseMode::Coherent,
                    "random" => PhaseMode::Random,
                    other => {
                        return Err(Error::Config(format!(
                            "phase_mode: expected coherent|random, got '{other}'"
                        )))
                    }
                }
            }
            "tx_power_dbm" => self.tx_power_dbm = parse(key, value)?,
            "rx_sensitivity_dbm" => self.rx_sensitivity_dbm = parse(key, value)?,
            "seed" | "rng_seed" => self.rng_seed = parse(key, value)?,
            "repetitions" | "reps" => self.repetitions = parse(key, value)?,
            "pairs" => self.pairs = parse(key, value)?,
            "stagger_chips" => self.stagger_chips = parse(key, value)?,
            other => return Err(Error::Config(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    /// Environment overrides: `MSNOW_<KEY>` (upper-cased key) wins over the
    /// file value.
    pub fn apply_env_overrides(&mut self) -> Result<()> {
        for key in KEYS {
            let var = format!("MSNOW_{}", key.to_uppercase());
            if let Ok(value) = std::env::var(&var) {
                self.set(key, &value)?;
            }
        }
        Ok(())
    }
}

const KEYS: &[&str] = &[
    "scenario",
    "band_start_hz",
    "band_end_hz",
    "subcarrier_bw_hz",
    "overlap",
    "active_subcarriers",
    "sensors_per_subcarrier",
    "packets_per_sensor",
    "preamble_bytes",
    "header_bytes",
    "payload_bytes",
    "interval_min_ms",
    "interval_max_ms",
    "snr_db",
    "noise",
    "phase_mode",
    "tx_power_dbm",
    "rx_sensitivity_dbm",
    "seed",
    "repetitions",
    "pairs",
    "stagger_chips",
];

/// Parse the key-value text format: one `key = value` per line, `#` starts
/// a comment, unknown keys and out-of-range values are errors naming the
/// key. An empty file yields the defaults.
pub fn parse_config_str(text: &str) -> Result<ScenarioConfig> {
    let mut config = ScenarioConfig::default();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Config(format!(
                "line {}: expected 'key = value', got '{line}'",
                lineno + 1
            )));
        };
        config.set(key.trim(), value)?;
    }
    config.validate()?;
    Ok(config)
}

/// Parse a config file.
pub fn parse_config(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_config_str(&text)
}

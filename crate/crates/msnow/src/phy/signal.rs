//! Baseband synthesis for uplink and downlink.
//!
//! Transmissions start on integer chip boundaries, so every chip occupies a
//! whole demultiplexer window. Each subcarrier's waveform is kept as its own
//! component; the exported composite is their sum plus noise. The receive
//! chain demultiplexes components per subcarrier, which realizes the ideal
//! adjacent-channel rejection of the reference model.

use num_complex::Complex64;

use crate::pnseq::PnSequence;
use crate::spreadcodec::ChipStream;
use crate::{Error, Result};

use super::plan::SubcarrierPlan;

/// One sensor's on-air packet: spread chips placed in time and frequency
/// with a carrier phase.
#[derive(Debug, Clone)]
pub struct Transmission {
    pub sensor_id: u64,
    pub subcarrier_index: usize,
    pub pn: PnSequence,
    pub chips: ChipStream,
    pub start_chip: u64,
    /// Unit carrier phasor; `1 + 0i` in the coherent (default) mode.
    pub phase: Complex64,
    pub power_dbm: f64,
}

impl Transmission {
    pub fn end_chip(&self) -> u64 {
        self.start_chip + self.chips.len() as u64
    }

    pub fn start_time_s(&self, chip_rate_hz: f64) -> f64 {
        self.start_chip as f64 / chip_rate_hz
    }
}

/// Complex baseband signal: per-subcarrier components plus a wideband noise
/// vector, all at `sample_rate_hz`.
#[derive(Debug, Clone)]
pub struct BasebandSignal {
    sample_rate_hz: f64,
    t0_s: f64,
    chip_count: usize,
    samples_per_chip: usize,
    /// `(subcarrier index, full-rate waveform)` for subcarriers that carry
    /// any signal.
    components: Vec<(usize, Vec<Complex64>)>,
    noise: Vec<Complex64>,
}

impl BasebandSignal {
    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn t0_s(&self) -> f64 {
        self.t0_s
    }

    pub fn chip_count(&self) -> usize {
        self.chip_count
    }

    pub fn samples_per_chip(&self) -> usize {
        self.samples_per_chip
    }

    pub fn len_samples(&self) -> usize {
        self.chip_count * self.samples_per_chip
    }

    pub fn duration_s(&self) -> f64 {
        self.len_samples() as f64 / self.sample_rate_hz
    }

    pub fn components(&self) -> &[(usize, Vec<Complex64>)] {
        &self.components
    }

    pub fn noise(&self) -> &[Complex64] {
        &self.noise
    }

    pub(crate) fn set_noise(&mut self, noise: Vec<Complex64>) {
        debug_assert_eq!(noise.len(), self.len_samples());
        self.noise = noise;
    }

    /// The wideband composite: sum of all subcarrier components plus noise.
    pub fn composite(&self) -> Vec<Complex64> {
        let mut out = if self.noise.is_empty() {
            vec![Complex64::new(0.0, 0.0); self.len_samples()]
        } else {
            self.noise.clone()
        };
        for (_, component) in &self.components {
            for (o, c) in out.iter_mut().zip(component) {
                *o += c;
            }
        }
        out
    }

    /// Interleaved little-endian `f32` I/Q pairs plus a small text header.
    pub fn dump_iq(&self, path: &std::path::Path) -> std::io::Result<()> {
        use std::io::Write;
        let mut body = Vec::with_capacity(self.len_samples() * 8);
        for s in self.composite() {
            body.extend_from_slice(&(s.re as f32).to_le_bytes());
            body.extend_from_slice(&(s.im as f32).to_le_bytes());
        }
        std::fs::write(path, body)?;
        let mut header = std::fs::File::create(path.with_extension("iq.hdr"))?;
        writeln!(header, "sample_rate_hz={}", self.sample_rate_hz)?;
        writeln!(header, "t0_s={}", self.t0_s)?;
        writeln!(header, "format=f32le_interleaved_iq")?;
        Ok(())
    }
}

fn tone_into(
    waveform: &mut [Complex64],
    plan: &SubcarrierPlan,
    subcarrier_index: usize,
    chip: u64,
    amplitude: Complex64,
) {
    let spc = plan.samples_per_chip();
    let bins = plan.bins_per_window();
    let bin = plan.bin_of(subcarrier_index).expect("validated index");
    let step = Complex64::from_polar(1.0, std::f64::consts::TAU * bin as f64 / bins as f64);
    let start_sample = chip as usize * spc;
    // Continuous tone phase at the chip boundary.
    let mut rot = Complex64::from_polar(
        1.0,
        std::f64::consts::TAU * ((bin as u64 * start_sample as u64) % bins as u64) as f64
            / bins as f64,
    );
    for s in 0..spc {
        waveform[start_sample + s] += amplitude * rot;
        rot *= step;
    }
}

/// Superimpose the given transmissions into a baseband signal.
///
/// Fails if a transmission names a subcarrier outside the plan, or if two
/// time-overlapping transmissions on one subcarrier carry the same PN chips
/// (an assignment violation that would be undecodable).
pub fn synthesize_uplink(
    transmissions: &[Transmission],
    plan: &SubcarrierPlan,
    duration_chips: Option<u64>,
) -> Result<BasebandSignal> {
    for tx in transmissions {
        plan.subcarrier(tx.subcarrier_index)?;
    }
    for (i, a) in transmissions.iter().enumerate() {
        for b in &transmissions[i + 1..] {
            if a.subcarrier_index == b.subcarrier_index
                && a.pn.bits() == b.pn.bits()
                && a.start_chip < b.end_chip()
                && b.start_chip < a.end_chip()
            {
                return Err(Error::Config(format!(
                    "sensors {} and {} overlap on subcarrier {} with the same PN sequence",
                    a.sensor_id, b.sensor_id, a.subcarrier_index
                )));
            }
        }
    }

    let chip_count = duration_chips
        .or_else(|| transmissions.iter().map(Transmission::end_chip).max())
        .unwrap_or(0) as usize;
    if chip_count == 0 {
        return Err(Error::Config("signal would be empty".into()));
    }
    let spc = plan.samples_per_chip();

    let mut indices: Vec<usize> = transmissions.iter().map(|t| t.subcarrier_index).collect();
    indices.sort_unstable();
    indices.dedup();

    let mut components = Vec::with_capacity(indices.len());
    for index in indices {
        let mut waveform = vec![Complex64::new(0.0, 0.0); chip_count * spc];
        for tx in transmissions
            .iter()
            .filter(|t| t.subcarrier_index == index)
        {
            let amplitude = tx.phase;
            for (m, &chip) in tx.chips.chips().iter().enumerate() {
                if chip == 1 {
                    tone_into(&mut waveform, plan, index, tx.start_chip + m as u64, amplitude);
                }
            }
        }
        components.push((index, waveform));
    }

    Ok(BasebandSignal {
        sample_rate_hz: plan.sample_rate_hz(),
        t0_s: 0.0,
        chip_count,
        samples_per_chip: spc,
        components,
        noise: Vec::new(),
    })
}

/// A per-subcarrier composite chip stream for downlink: complex per-chip
/// amplitudes, already summed over the sensors sharing the subcarrier.
#[derive(Debug, Clone)]
pub struct DownlinkStream {
    pub subcarrier_index: usize,
    pub chips: Vec<Complex64>,
}

/// Sum per-sensor transmissions on one subcarrier into a composite stream.
pub fn compose_downlink_stream(
    subcarrier_index: usize,
    transmissions: &[Transmission],
) -> Result<DownlinkStream> {
    let mut end = 0u64;
    for tx in transmissions {
        if tx.subcarrier_index != subcarrier_index {
            return Err(Error::Config(format!(
                "transmission for subcarrier {} in stream {}",
                tx.subcarrier_index, subcarrier_index
            )));
        }
        end = end.max(tx.end_chip());
    }
    let mut chips = vec![Complex64::new(0.0, 0.0); end as usize];
    for tx in transmissions {
        for (m, &chip) in tx.chips.chips().iter().enumerate() {
            if chip == 1 {
                chips[tx.start_chip as usize + m] += tx.phase;
            }
        }
    }
    Ok(DownlinkStream {
        subcarrier_index,
        chips,
    })
}

/// Build the base station's downlink composite: the per-subcarrier streams
/// mixed to their center frequencies and scaled by `1 / sqrt(M)` where `M`
/// is the number of subcarriers in the plan.
pub fn synthesize_downlink(
    streams: &[DownlinkStream],
    plan: &SubcarrierPlan,
) -> Result<BasebandSignal> {
    if streams.len() > plan.len() {
        return Err(Error::Config(format!(
            "{} streams exceed the plan's {} subcarriers",
            streams.len(),
            plan.len()
        )));
    }
    let mut seen: Vec<usize> = Vec::new();
    for s in streams {
        plan.subcarrier(s.subcarrier_index)?;
        if seen.contains(&s.subcarrier_index) {
            return Err(Error::Config(format!(
                "duplicate composite stream for subcarrier {}",
                s.subcarrier_index
            )));
        }
        seen.push(s.subcarrier_index);
    }
    let chip_count = streams.iter().map(|s| s.chips.len()).max().unwrap_or(0);
    if chip_count == 0 {
        return Err(Error::Config("signal would be empty".into()));
    }
    let spc = plan.samples_per_chip();
    let scale = 1.0 / (plan.len() as f64).sqrt();

    let mut components = Vec::with_capacity(streams.len());
    for stream in streams {
        let mut waveform = vec![Complex64::new(0.0, 0.0); chip_count * spc];
        for (m, &amp) in stream.chips.iter().enumerate() {
            if amp.norm_sqr() > 0.0 {
                tone_into(
                    &mut waveform,
                    plan,
                    stream.subcarrier_index,
                    m as u64,
                    amp * scale,
                );
            }
        }
        components.push((stream.subcarrier_index, waveform));
    }

    Ok(BasebandSignal {
        sample_rate_hz: plan.sample_rate_hz(),
        t0_s: 0.0,
        chip_count,
        samples_per_chip: spc,
        components,
        noise: Vec::new(),
    })
}

/// Convenience: a transmission from a spread packet.
pub fn place_transmission(
    sensor_id: u64,
    subcarrier_index: usize,
    pn: &PnSequence,
    chips: ChipStream,
    start_chip: u64,
    phase: Complex64,
) -> Transmission {
    Transmission {
        sensor_id,
        subcarrier_index,
        pn: pn.clone(),
        chips,
        start_chip,
        phase,
        power_dbm: 0.0,
    }
}

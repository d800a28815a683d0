//! Global-FFT demultiplexing and RSS quantization.
//!
//! One DFT window per chip period. The window is zero-padded to put every
//! subcarrier center exactly on a bin (`bins = samples_per_chip / overlap`),
//! and transmissions start on chip boundaries, so an aligned unit chip reads
//! magnitude 1.0 at its bin.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::{Error, Result};

use super::plan::SubcarrierPlan;
use super::signal::BasebandSignal;

/// Quantize an RSS magnitude to an integer level: 0 at or below 0.5, then
/// band `(k - 0.5, k + 0.5]` maps to `k`, capped at 9.
pub fn quantize_rss(magnitude: f64) -> u8 {
    if magnitude <= 0.5 {
        0
    } else {
        ((magnitude - 0.5).ceil() as u64).min(9) as u8
    }
}

/// The base station's 2D decode matrix: one row per subcarrier, one column
/// per chip period, entries are quantized RSS levels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuantizedSubcarrierMatrix {
    rows: Vec<Vec<u8>>,
    chip_count: usize,
}

impl QuantizedSubcarrierMatrix {
    /// Row of a 1-based subcarrier index.
    pub fn row(&self, subcarrier_index: usize) -> &[u8] {
        &self.rows[subcarrier_index - 1]
    }

    pub fn entry(&self, subcarrier_index: usize, chip: usize) -> u8 {
        self.rows[subcarrier_index - 1][chip]
    }

    pub fn subcarrier_count(&self) -> usize {
        self.rows.len()
    }

    pub fn chip_count(&self) -> usize {
        self.chip_count
    }
}

/// Demultiplexer output: quantized levels for every subcarrier, raw
/// magnitudes for threshold analysis, and the complex bin samples of the
/// subcarriers that carry signal components (the decoder's input).
#[derive(Debug, Clone)]
pub struct DemuxOutput {
    pub quantized: QuantizedSubcarrierMatrix,
    pub raw: Vec<Vec<f32>>,
    pub complex_rows: Vec<(usize, Vec<Complex64>)>,
}

impl DemuxOutput {
    pub fn complex_row(&self, subcarrier_index: usize) -> Option<&[Complex64]> {
        self.complex_rows
            .iter()
            .find(|(i, _)| *i == subcarrier_index)
            .map(|(_, row)| row.as_slice())
    }
}

/// Demultiplex a baseband signal: per chip window, each subcarrier's bin
/// sample is the matched filter of its own component plus the wideband
/// noise at that bin (ideal adjacent-channel rejection).
pub fn gfft_demux(signal: &BasebandSignal, plan: &SubcarrierPlan) -> Result<DemuxOutput> {
    let spc = plan.samples_per_chip();
    debug_assert_eq!(spc, signal.samples_per_chip());
    let chips = signal.chip_count();
    if chips == 0 || signal.len_samples() < spc {
        return Err(Error::Runtime("signal shorter than one chip".into()));
    }
    let bins = plan.bins_per_window();
    let sub_count = plan.len();

    // Noise contribution at every bin via a zero-padded FFT per window.
    let mut noise_bins: Vec<Vec<Complex64>> = Vec::new();
    if !signal.noise().is_empty() {
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(bins);
        let mut buf = vec![Complex64::new(0.0, 0.0); bins];
        noise_bins = vec![vec![Complex64::new(0.0, 0.0); chips]; sub_count];
        for m in 0..chips {
            buf[..spc].copy_from_slice(&signal.noise()[m * spc..(m + 1) * spc]);
            for b in buf[spc..].iter_mut() {
                *b = Complex64::new(0.0, 0.0);
            }
            fft.process(&mut buf);
            for s in plan.subcarriers() {
                let bin = plan.bin_of(s.index)?;
                noise_bins[s.index - 1][m] = buf[bin] / spc as f64;
            }
        }
    }

    // Matched filter of each component at its own subcarrier.
    let mut component_bins: Vec<(usize, Vec<Complex64>)> = Vec::new();
    for (index, waveform) in signal.components() {
        let bin = plan.bin_of(*index)?;
        let step =
            Complex64::from_polar(1.0, -std::f64::consts::TAU * bin as f64 / bins as f64);
        let mut row = Vec::with_capacity(chips);
        for m in 0..chips {
            let start = m * spc;
            let mut rot = Complex64::from_polar(
                1.0,
                -std::f64::consts::TAU * ((bin as u64 * start as u64) % bins as u64) as f64
                    / bins as f64,
            );
            let mut acc = Complex64::new(0.0, 0.0);
            for s in 0..spc {
                acc += waveform[start + s] * rot;
                rot *= step;
            }
            row.push(acc / spc as f64);
        }
        component_bins.push((*index, row));
    }

    // Assemble: component + noise for carrying rows, noise alone elsewhere.
    let zero_row = vec![Complex64::new(0.0, 0.0); chips];
    let mut raw = Vec::with_capacity(sub_count);
    let mut rows = Vec::with_capacity(sub_count);
    let mut complex_rows = Vec::with_capacity(component_bins.len());
    for s in plan.subcarriers() {
        let noise_row = if noise_bins.is_empty() {
            &zero_row
        } else {
            &noise_bins[s.index - 1]
        };
        let component = component_bins
            .iter()
            .find(|(i, _)| *i == s.index)
            .map(|(_, row)| row);
        let mut magnitude = Vec::with_capacity(chips);
        let mut complex_row = component.map(|_| Vec::with_capacity(chips));
        for m in 0..chips {
            let v = component.map_or(noise_row[m], |c| c[m] + noise_row[m]);
            magnitude.push(v.norm() as f32);
            if let Some(cr) = complex_row.as_mut() {
                cr.push(v);
            }
        }
        rows.push(magnitude.iter().map(|&m| quantize_rss(m as f64)).collect());
        raw.push(magnitude);
        if let Some(cr) = complex_row {
            complex_rows.push((s.index, cr));
        }
    }

    Ok(DemuxOutput {
        quantized: QuantizedSubcarrierMatrix {
            rows,
            chip_count: chips,
        },
        raw,
        complex_rows,
    })
}

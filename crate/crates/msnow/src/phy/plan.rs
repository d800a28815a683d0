//! Overlapped-subcarrier channel plans.

use crate::{Error, Result};

/// One subcarrier: 1-based index and absolute center frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Subcarrier {
    pub index: usize,
    pub center_hz: f64,
}

/// The wideband channel split into `floor(W / (omega * alpha)) - 1`
/// overlapped subcarriers of bandwidth `omega`, spaced `omega * alpha`
/// apart starting at `band_start + omega / 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubcarrierPlan {
    band_start_hz: f64,
    band_end_hz: f64,
    subcarrier_bw_hz: f64,
    overlap: f64,
    subcarriers: Vec<Subcarrier>,
    samples_per_chip: usize,
    bins_per_window: usize,
}

pub fn build_subcarrier_plan(
    band_start_hz: f64,
    band_end_hz: f64,
    subcarrier_bw_hz: f64,
    overlap: f64,
) -> Result<SubcarrierPlan> {
    if band_end_hz <= band_start_hz {
        return Err(Error::Config(format!(
            "band_end {band_end_hz} must exceed band_start {band_start_hz}"
        )));
    }
    if !(0.0..=0.5).contains(&overlap) || overlap <= 0.0 {
        return Err(Error::Config(format!(
            "overlap {overlap} must be in (0, 0.5]"
        )));
    }
    if subcarrier_bw_hz <= 0.0 {
        return Err(Error::Config("subcarrier bandwidth must be positive".into()));
    }
    let width = band_end_hz - band_start_hz;
    let spacing = subcarrier_bw_hz * overlap;
    let count = (width / spacing).floor() as isize - 1;
    if count < 1 {
        return Err(Error::Config(format!(
            "band of {width} Hz holds no subcarriers of {subcarrier_bw_hz} Hz at overlap {overlap}"
        )));
    }
    let subcarriers = (1..=count as usize)
        .map(|i| Subcarrier {
            index: i,
            center_hz: band_start_hz + subcarrier_bw_hz / 2.0 + (i - 1) as f64 * spacing,
        })
        .collect();

    // Sample rate: smallest whole number of samples per chip that covers the
    // band and puts every subcarrier center exactly on a DFT bin of the
    // zero-padded one-chip window.
    let mut samples_per_chip = (width / subcarrier_bw_hz).ceil() as usize;
    let inv_overlap = 1.0 / overlap;
    while ((samples_per_chip as f64) * inv_overlap).fract() != 0.0 {
        samples_per_chip += 1;
    }
    let bins_per_window = ((samples_per_chip as f64) * inv_overlap) as usize;

    Ok(SubcarrierPlan {
        band_start_hz,
        band_end_hz,
        subcarrier_bw_hz,
        overlap,
        subcarriers,
        samples_per_chip,
        bins_per_window,
    })
}

impl SubcarrierPlan {
    /// The default evaluation plan: 64 subcarriers of 400 kHz at 50% overlap
    /// in 547 - 560 MHz.
    pub fn default_evaluation() -> Self {
        build_subcarrier_plan(547.0e6, 560.0e6, 400.0e3, 0.5).expect("frozen parameters are valid")
    }

    pub fn band_start_hz(&self) -> f64 {
        self.band_start_hz
    }

    pub fn band_end_hz(&self) -> f64 {
        self.band_end_hz
    }

    pub fn width_hz(&self) -> f64 {
        self.band_end_hz - self.band_start_hz
    }

    pub fn subcarrier_bw_hz(&self) -> f64 {
        self.subcarrier_bw_hz
    }

    pub fn overlap(&self) -> f64 {
        self.overlap
    }

    pub fn subcarriers(&self) -> &[Subcarrier] {
        &self.subcarriers
    }

    pub fn len(&self) -> usize {
        self.subcarriers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subcarriers.is_empty()
    }

    pub fn subcarrier(&self, index: usize) -> Result<&Subcarrier> {
        self.subcarriers
            .get(index.wrapping_sub(1))
            .ok_or_else(|| Error::Config(format!("subcarrier {index} not in plan")))
    }

    /// Chip rate equals the subcarrier bandwidth.
    pub fn chip_rate_hz(&self) -> f64 {
        self.subcarrier_bw_hz
    }

    pub fn chip_period_s(&self) -> f64 {
        1.0 / self.subcarrier_bw_hz
    }

    pub fn samples_per_chip(&self) -> usize {
        self.samples_per_chip
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.samples_per_chip as f64 * self.subcarrier_bw_hz
    }

    /// DFT length of the zero-padded one-chip window.
    pub fn bins_per_window(&self) -> usize {
        self.bins_per_window
    }

    /// Baseband offset of a subcarrier center relative to the band start.
    pub fn baseband_offset_hz(&self, index: usize) -> Result<f64> {
        Ok(self.subcarrier(index)?.center_hz - self.band_start_hz)
    }

    /// DFT bin holding a subcarrier's center in the zero-padded window.
    pub fn bin_of(&self, index: usize) -> Result<usize> {
        let spacing = self.subcarrier_bw_hz * self.overlap;
        let bin = self.baseband_offset_hz(index)? / spacing;
        let rounded = bin.round();
        debug_assert!((bin - rounded).abs() < 1e-9, "center off-bin");
        Ok(rounded as usize)
    }

    /// Indices of a centered block of `count` subcarriers.
    pub fn centered_block(&self, count: usize) -> Result<Vec<usize>> {
        if count == 0 || count > self.len() {
            return Err(Error::Config(format!(
                "cannot take {count} subcarriers from a plan of {}",
                self.len()
            )));
        }
        let first = (self.len() - count) / 2 + 1;
        Ok((first..first + count).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluation_band_has_64_subcarriers() {
        let plan = build_subcarrier_plan(547.0e6, 560.0e6, 400.0e3, 0.5).unwrap();
        assert_eq!(plan.len(), 64);
        let centers: Vec<f64> = plan.subcarriers().iter().map(|s| s.center_hz).collect();
        assert_eq!(centers[0], 547.2e6);
        assert_eq!(centers[1], 547.4e6);
        assert_eq!(centers[63], 559.8e6);
        assert_eq!(plan.samples_per_chip(), 33);
        assert_eq!(plan.bins_per_window(), 66);
        for s in plan.subcarriers() {
            assert_eq!(plan.bin_of(s.index).unwrap(), s.index);
        }
    }

    #[test]
    fn single_channel_band_has_29_subcarriers() {
        let plan = build_subcarrier_plan(547.0e6, 553.0e6, 400.0e3, 0.5).unwrap();
        assert_eq!(plan.len(), 29);
    }

    #[test]
    fn narrow_band_has_3_subcarriers() {
        // 800 kHz / 200 kHz - 1 = 3.
        let plan = build_subcarrier_plan(547.0e6, 547.8e6, 400.0e3, 0.5).unwrap();
        assert_eq!(plan.len(), 3);
        assert_eq!(plan.subcarriers()[2].center_hz, 547.6e6);
    }

    #[test]
    fn degenerate_band_is_an_error() {
        assert!(build_subcarrier_plan(547.0e6, 547.2e6, 400.0e3, 0.5).is_err());
        assert!(build_subcarrier_plan(547.0e6, 546.0e6, 400.0e3, 0.5).is_err());
        assert!(build_subcarrier_plan(547.0e6, 548.0e6, 400.0e3, 0.7).is_err());
    }

    #[test]
    fn centered_block_is_in_the_middle() {
        let plan = SubcarrierPlan::default_evaluation();
        assert_eq!(plan.centered_block(3).unwrap(), vec![31, 32, 33]);
        assert_eq!(plan.centered_block(64).unwrap().len(), 64);
        assert!(plan.centered_block(65).is_err());
    }
}

//! Preamble detection on quantized subcarrier rows.
//!
//! Each PN's spread preamble template is slid over the row of quantized
//! levels. Templates are mean-centered before correlating, so a flat
//! interference pedestal from concurrent senders does not inflate scores.
//! Detections are extracted greedily, strongest first, with the accepted
//! template subtracted from a working copy of the row; short weight-2 codes
//! otherwise cross-fire on other sequences' preambles.

use crate::pnseq::{PnSequence, PnSet};
use crate::spreadcodec::{bytes_to_bits, spread_bit, PREAMBLE_BYTE};

/// One detected packet start.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Detection {
    /// Index of the PN sequence within its set.
    pub pn_index: usize,
    /// Chip offset of the packet (start of the preamble).
    pub offset: usize,
}

/// Detector settings: the normalized-correlation threshold and the minimum
/// chip separation between packets of one sensor (its packet span).
#[derive(Debug, Clone, Copy)]
pub struct DetectorConfig {
    pub threshold: f64,
    pub min_separation: usize,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            threshold: 0.75,
            min_separation: 1,
        }
    }
}

/// The spread preamble chip template for one PN sequence.
pub fn preamble_template(pn: &PnSequence) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 * pn.len());
    for &bit in &bytes_to_bits(&[PREAMBLE_BYTE]) {
        out.extend_from_slice(&spread_bit(bit, pn));
    }
    out
}

struct PnScorer {
    pn_index: usize,
    support: Vec<usize>,
    len: usize,
    mean_weight: f64,
    ideal: f64,
}

impl PnScorer {
    fn new(pn: &PnSequence) -> Self {
        let template = preamble_template(pn);
        let support: Vec<usize> = template
            .iter()
            .enumerate()
            .filter(|(_, &t)| t == 1)
            .map(|(k, _)| k)
            .collect();
        let s = support.len() as f64;
        let len = template.len();
        let mean_weight = s / len as f64;
        Self {
            pn_index: pn.index(),
            support,
            len,
            mean_weight,
            ideal: s * (1.0 - mean_weight),
        }
    }

    fn score(&self, row: &[f64], offset: usize) -> f64 {
        let dot: f64 = self.support.iter().map(|&k| row[offset + k]).sum();
        let window: f64 = row[offset..offset + self.len].iter().sum();
        (dot - self.mean_weight * window) / self.ideal
    }
}

/// Scan a quantized row for every set member's preamble. Scores are
/// normalized so a clean, aligned, unit-level preamble scores 1.0. The
/// strongest local maximum at or above the threshold is accepted, its
/// template subtracted from a working copy, and scores around the
/// subtraction refreshed; accepted offsets of one PN respect the minimum
/// separation.
pub fn detect_preamble(row: &[u8], set: &PnSet, config: DetectorConfig) -> Vec<Detection> {
    let all: Vec<&PnSequence> = set.sequences().iter().collect();
    detect_preamble_among(row, &all, config)
}

/// Like [`detect_preamble`] but scanning only the given sequences: the base
/// station assigns PNs at join time, so its decoding agent searches the
/// allocated subset rather than the whole family, which suppresses
/// cross-fire of the short low-weight templates onto data chips.
pub fn detect_preamble_among(
    row: &[u8],
    sequences: &[&PnSequence],
    config: DetectorConfig,
) -> Vec<Detection> {
    use std::cmp::Ordering;
    use std::collections::BinaryHeap;

    #[derive(PartialEq)]
    struct Candidate {
        score: f64,
        scorer: usize,
        offset: usize,
    }
    impl Eq for Candidate {}
    impl Ord for Candidate {
        fn cmp(&self, other: &Self) -> Ordering {
            self.score
                .total_cmp(&other.score)
                .then(other.scorer.cmp(&self.scorer))
                .then(other.offset.cmp(&self.offset))
        }
    }
    impl PartialOrd for Candidate {
        fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
            Some(self.cmp(other))
        }
    }

    let mut detections: Vec<Detection> = Vec::new();
    if row.is_empty() {
        return detections;
    }
    let mut work: Vec<f64> = row.iter().map(|&l| f64::from(l)).collect();
    let scorers: Vec<PnScorer> = sequences.iter().map(|pn| PnScorer::new(pn)).collect();
    if scorers.iter().any(|s| row.len() < s.len) {
        return detections;
    }

    // Current score per (scorer, offset), refreshed after each subtraction.
    let mut scores: Vec<Vec<f64>> = scorers
        .iter()
        .map(|s| {
            (0..=work.len() - s.len)
                .map(|o| s.score(&work, o))
                .collect()
        })
        .collect();

    let mut heap = BinaryHeap::new();
    for (si, row_scores) in scores.iter().enumerate() {
        for (offset, &score) in row_scores.iter().enumerate() {
            if score >= config.threshold {
                heap.push(Candidate {
                    score,
                    scorer: si,
                    offset,
                });
            }
        }
    }

    while let Some(cand) = heap.pop() {
        let si = cand.scorer;
        let offset = cand.offset;
        let current = scores[si][offset];
        if current < config.threshold {
            continue;
        }
        if (current - cand.score).abs() > 1e-12 {
            // Stale entry: requeue with the refreshed score.
            heap.push(Candidate {
                score: current,
                scorer: si,
                offset,
            });
            continue;
        }
        // Local maximum against current neighbors.
        let left = offset
            .checked_sub(1)
            .map_or(f64::MIN, |o| scores[si][o]);
        let right = scores[si].get(offset + 1).copied().unwrap_or(f64::MIN);
        if !(current > left && current >= right) {
            continue;
        }
        let clear = detections.iter().all(|d| {
            d.pn_index != scorers[si].pn_index
                || offset.abs_diff(d.offset) >= config.min_separation
        });
        if !clear {
            continue;
        }

        detections.push(Detection {
            pn_index: scorers[si].pn_index,
            offset,
        });
        for &k in &scorers[si].support {
            work[offset + k] -= 1.0;
        }
        // Refresh every scorer's scores overlapping the subtraction and
        // re-arm candidates there.
        let sub_end = offset + scorers[si].len;
        for (sj, scorer) in scorers.iter().enumerate() {
            let from = offset.saturating_sub(scorer.len - 1);
            let to = (sub_end - 1).min(work.len() - scorer.len);
            for o in from..=to {
                let fresh = scorer.score(&work, o);
                scores[sj][o] = fresh;
                if fresh >= config.threshold {
                    heap.push(Candidate {
                        score: fresh,
                        scorer: sj,
                        offset: o,
                    });
                }
            }
        }
    }

    detections.sort_by_key(|d| (d.offset, d.pn_index));
    detections
}

/// Cadence-tracking settings for [`detect_trains`].
#[derive(Debug, Clone, Copy)]
pub struct TrainConfig {
    pub threshold: f64,
    /// Packet span in chips (consecutive packets of one sensor are at least
    /// this far apart).
    pub span: usize,
    /// Largest expected start-to-start step between consecutive packets.
    pub step_max: usize,
    /// Allowed missed packets inside a chain.
    pub max_skip: usize,
    /// Chip slack on the step bounds for noise-displaced peaks.
    pub slack: usize,
}

/// Detect packet trains per PN: candidate preamble peaks are chained by the
/// known packet cadence and the best-scoring chain wins.
///
/// A one-byte preamble also occurs inside random payload bits, so raw
/// correlation peaks include phantoms; phantoms sit inside a packet and can
/// never be one whole span from that packet's own start, which the chain
/// constraint exploits.
pub fn detect_trains(
    row: &[u8],
    sequences: &[&PnSequence],
    config: TrainConfig,
) -> Vec<Detection> {
    let mut detections = Vec::new();
    for pn in sequences {
        let scorer = PnScorer::new(pn);
        if row.len() < scorer.len {
            continue;
        }
        let work: Vec<f64> = row.iter().map(|&l| f64::from(l)).collect();
        let last = work.len() - scorer.len;
        // Local maxima at or above the threshold.
        let mut cands: Vec<(usize, f64)> = Vec::new();
        let mut prev = f64::MIN;
        let mut cur = scorer.score(&work, 0);
        for offset in 0..=last {
            let next = if offset == last {
                f64::MIN
            } else {
                scorer.score(&work, offset + 1)
            };
            if cur >= config.threshold && cur > prev && cur >= next {
                cands.push((offset, cur));
            }
            prev = cur;
            cur = next;
        }
        if cands.is_empty() {
            continue;
        }
        // Best chain under the cadence constraint: step in
        // [k*span - slack, k*step_max + slack] for k = 1..=max_skip + 1.
        // Ties prefer the earliest candidates: a payload replica of the
        // preamble pattern sits strictly after the packet's real preamble.
        let m = cands.len();
        let mut best: Vec<(f64, Option<usize>)> = cands.iter().map(|&(_, s)| (s, None)).collect();
        for i in 1..m {
            for j in 0..i {
                let step = cands[i].0 - cands[j].0;
                if step + config.slack < config.span {
                    continue; // too close: same packet
                }
                if step > (config.max_skip + 1) * config.step_max + config.slack {
                    continue;
                }
                let feasible = (1..=config.max_skip + 1).any(|k| {
                    let lo = (k * config.span).saturating_sub(config.slack);
                    let hi = k * config.step_max + config.slack;
                    (lo..=hi).contains(&step)
                });
                if feasible {
                    let value = best[j].0 + cands[i].1;
                    if value > best[i].0 {
                        best[i] = (value, Some(j));
                    }
                }
            }
        }
        let mut end = 0;
        for i in 1..m {
            if best[i].0 > best[end].0 {
                end = i;
            }
        }
        let mut chain = vec![end];
        while let Some(prev_idx) = best[end].1 {
            chain.push(prev_idx);
            end = prev_idx;
        }
        for &i in chain.iter().rev() {
            detections.push(Detection {
                pn_index: pn.index(),
                offset: cands[i].0,
            });
        }
    }
    detections.sort_by_key(|d| (d.offset, d.pn_index));
    detections
}

//! The per-subcarrier decoding agent.
//!
//! Decodes every detected transmission on one subcarrier jointly from the
//! complex bin samples: a sliding-window trellis tracks the bit hypotheses
//! of the symbols straddling each chip column, scoring them against the
//! observed sample, and commits each bit when its symbol window closes. A
//! transmission's known preamble chips anchor its carrier-phase estimate;
//! phases are then refined decision-directed and the row re-decoded.
//!
//! Rows are independent after demultiplexing, so decoders for different
//! subcarriers may run in parallel.

use num_complex::Complex64;

use crate::pnseq::PnSequence;

/// A transmission the decoder should extract: its PN, start chip, total bit
/// count, and the known preamble bit prefix.
#[derive(Debug, Clone)]
pub struct ActiveTransmission {
    pub pn: PnSequence,
    pub start_chip: usize,
    pub total_bits: usize,
    pub known_prefix: Vec<u8>,
}

/// Decoded bits (known prefix included), the receiver's phase estimate,
/// and how coherently the decoded chips summed (1.0 for a clean real
/// transmission, near 0 for a synchronization ghost).
#[derive(Debug, Clone)]
pub struct DecodedTransmission {
    pub bits: Vec<u8>,
    pub phase: Complex64,
    pub coherence: f64,
}

/// Decoder settings.
#[derive(Debug, Clone, Copy)]
pub struct DecoderConfig {
    /// Cost-gap beam: states worse than the best by more than this are
    /// dropped at every column.
    pub beam: f64,
    /// Decision-directed phase re-estimation and re-decode rounds.
    pub refine_passes: usize,
    /// Treat carrier phases as known-coherent (skip estimation).
    pub coherent: bool,
    /// Transmissions whose decoded chips sum less coherently than this are
    /// dropped as synchronization ghosts (random-phase mode only).
    pub min_coherence: f64,
    /// Phase-grid repair triggers below this coherence during refinement.
    pub repair_below: f64,
    /// Parallel-cancellation sweeps of the acquisition bootstrap.
    pub bootstrap_sweeps: usize,
    /// Extra decode attempts with permuted acquisition order when the
    /// reconstruction residual stays abnormally high.
    pub multistart: usize,
}

impl Default for DecoderConfig {
    fn default() -> Self {
        Self {
            beam: 9.0,
            refine_passes: 2,
            coherent: false,
            min_coherence: 0.5,
            repair_below: 0.9,
            bootstrap_sweeps: 16,
            multistart: 6,
        }
    }
}

/// Survivor-set ceiling; ties beyond the beam are cut by cost order.
const MAX_TRELLIS_STATES: usize = 64;

struct SymbolEvent {
    tx: u32,
    idx: u32,
    start: u32,
}

/// Decode all transmissions of one subcarrier row.
pub fn decode_subcarrier(
    bins: &[Complex64],
    txs: &[ActiveTransmission],
    config: &DecoderConfig,
) -> Vec<DecodedTransmission> {
    decode_subcarrier_impl(bins, txs, config, None)
}

/// Decode with externally known carrier phases (no estimation). Used when
/// the receiver shares the composer's phase reference and by separability
/// tests.
pub fn decode_subcarrier_with_phases(
    bins: &[Complex64],
    txs: &[ActiveTransmission],
    phases: &[Complex64],
    config: &DecoderConfig,
) -> Vec<DecodedTransmission> {
    decode_subcarrier_impl(bins, txs, config, Some(phases))
}

fn decode_subcarrier_impl(
    bins: &[Complex64],
    txs: &[ActiveTransmission],
    config: &DecoderConfig,
    known_phases: Option<&[Complex64]>,
) -> Vec<DecodedTransmission> {
    let n = txs.first().map_or(7, |t| t.pn.len());
    let blind = known_phases.is_none() && !config.coherent;
    let attempts = if blind { 1 + config.multistart } else { 1 };

    let mut best: Option<(f64, Vec<DecodedTransmission>)> = None;
    for salt in 0..attempts as u64 {
        let result = decode_attempt(bins, txs, config, known_phases, salt);
        let residual = reconstruction_residual(bins, txs, &result, n);
        if best.as_ref().map_or(true, |(e, _)| residual < *e) {
            best = Some((residual, result));
        }
        // Further attempts only pay off while some window looks unresolved.
        if !window_anomaly(bins, txs, &best.as_ref().unwrap().1, n) {
            break;
        }
    }
    best.expect("at least one attempt").1
}

/// Sum of squared reconstruction errors over the row.
fn reconstruction_residual(
    bins: &[Complex64],
    txs: &[ActiveTransmission],
    decoded: &[DecodedTransmission],
    n: usize,
) -> f64 {
    let mut rec = vec![Complex64::new(0.0, 0.0); bins.len()];
    for (tx, d) in txs.iter().zip(decoded) {
        if d.coherence <= 0.0 {
            continue;
        }
        for (bi, &b) in d.bits.iter().enumerate() {
            if b == 1 {
                add_symbol(&mut rec, tx, bi, n, d.phase);
            }
        }
    }
    bins.iter()
        .zip(&rec)
        .map(|(v, r)| (v - r).norm_sqr())
        .sum()
}

/// True when some transmission's window carries a residual far above the
/// row's typical level, the signature of an unresolved entanglement.
fn window_anomaly(
    bins: &[Complex64],
    txs: &[ActiveTransmission],
    decoded: &[DecodedTransmission],
    n: usize,
) -> bool {
    if txs.is_empty() {
        return false;
    }
    let mut rec = vec![Complex64::new(0.0, 0.0); bins.len()];
    for (tx, d) in txs.iter().zip(decoded) {
        if d.coherence <= 0.0 {
            continue;
        }
        for (bi, &b) in d.bits.iter().enumerate() {
            if b == 1 {
                add_symbol(&mut rec, tx, bi, n, d.phase);
            }
        }
    }
    let mut means: Vec<f64> = txs
        .iter()
        .map(|tx| {
            let start = tx.start_chip.min(bins.len());
            let end = (tx.start_chip + tx.total_bits * n).min(bins.len());
            if end == start {
                return 0.0;
            }
            (start..end)
                .map(|c| (bins[c] - rec[c]).norm_sqr())
                .sum::<f64>()
                / (end - start) as f64
        })
        .collect();
    let max = means.iter().copied().fold(0.0, f64::max);
    means.sort_by(f64::total_cmp);
    let median = means[means.len() / 2];
    // The absolute floor keeps phase-estimate dust from triggering retries:
    // re-acquisition pays off for collapsed packets (their windows carry
    // order-1 per-chip residuals), not isolated bit flips.
    max > 4.0 * median + 0.05
}

fn decode_attempt(
    bins: &[Complex64],
    txs: &[ActiveTransmission],
    config: &DecoderConfig,
    known_phases: Option<&[Complex64]>,
    salt: u64,
) -> Vec<DecodedTransmission> {
    let t_end = bins.len();
    let n = txs.first().map_or(7, |t| t.pn.len());

    // Slot per PN index; one sensor's packets never overlap in time.
    let slot_of: Vec<usize> = txs.iter().map(|t| t.pn.index()).collect();
    let max_slot = slot_of.iter().copied().max().unwrap_or(0);
    assert!(max_slot < 16, "at most 16 PN slots per subcarrier");

    // Unknown-symbol events per column (data region only).
    let mut starts: Vec<Vec<SymbolEvent>> = (0..t_end + n + 1).map(|_| Vec::new()).collect();
    let mut ends: Vec<Vec<SymbolEvent>> = (0..t_end + n + 1).map(|_| Vec::new()).collect();
    for (ti, tx) in txs.iter().enumerate() {
        for idx in tx.known_prefix.len()..tx.total_bits {
            let s = tx.start_chip + idx * n;
            if s + n > t_end {
                break;
            }
            let ev = || SymbolEvent {
                tx: ti as u32,
                idx: idx as u32,
                start: s as u32,
            };
            starts[s].push(ev());
            ends[s + n].push(ev());
        }
    }

    // Initial phases: given, coherent, or acquired in start order with the
    // running reconstruction of earlier transmissions cancelled (a packet's
    // preamble is then interfered only by streams starting inside it).
    let mut phases: Vec<Complex64> = if let Some(known) = known_phases {
        known.to_vec()
    } else if config.coherent {
        vec![Complex64::new(1.0, 0.0); txs.len()]
    } else {
        bootstrap_phases(bins, txs, n, config.bootstrap_sweeps, salt)
    };

    let mut alive = vec![true; txs.len()];
    let mut coherence = vec![1.0f64; txs.len()];
    let mut decided = run_trellis(bins, txs, &phases, &alive, &starts, &ends, &slot_of, config, n);

    for _ in 0..config.refine_passes {
        if config.coherent || known_phases.is_some() {
            break;
        }
        // Reconstruct every transmission's contribution, then re-estimate
        // each phase against the others-cancelled samples. The estimator's
        // coherence also exposes synchronization ghosts: a real packet's
        // chips sum near-collinearly, a ghost's do not.
        let mut rec = vec![Complex64::new(0.0, 0.0); t_end];
        for (ti, tx) in txs.iter().enumerate() {
            if !alive[ti] {
                continue;
            }
            for (bi, &b) in decided[ti].iter().enumerate() {
                if b == 1 {
                    add_symbol(&mut rec, tx, bi, n, phases[ti]);
                }
            }
        }
        for (ti, tx) in txs.iter().enumerate() {
            if !alive[ti] {
                continue;
            }
            let mut acc = Complex64::new(0.0, 0.0);
            let mut mass = 0usize;
            for (bi, &b) in decided[ti].iter().enumerate() {
                if b == 1 {
                    let base = tx.start_chip + bi * n;
                    for k in 0..n {
                        if tx.pn.bits()[k] == 1 && base + k < t_end {
                            let others = rec[base + k] - phases[ti];
                            acc += bins[base + k] - others;
                            mass += 1;
                        }
                    }
                }
            }
            if mass > 0 {
                coherence[ti] = acc.norm() / mass as f64;
                if acc.norm() > 0.0 {
                    phases[ti] = acc / acc.norm();
                }
                if coherence[ti] < config.min_coherence {
                    alive[ti] = false;
                }
            } else {
                coherence[ti] = 0.0;
                alive[ti] = false;
            }
        }
        // Grid repair for incoherent packets: sweep candidate phases
        // against the others-cancelled residual and keep the best fit.
        // A packet whose neighbors decoded cleanly snaps back in one step.
        for (ti, tx) in txs.iter().enumerate() {
            if !alive[ti] || coherence[ti] >= config.repair_below {
                continue;
            }
            let start = tx.start_chip;
            let len = (tx.total_bits * n).min(t_end.saturating_sub(start));
            if len == 0 {
                continue;
            }
            // Residual without this transmission's current reconstruction.
            let mut residual: Vec<Complex64> = (0..len)
                .map(|k| bins[start + k] - rec[start + k])
                .collect();
            for (bi, &b) in decided[ti].iter().enumerate() {
                if b == 1 {
                    for k in 0..n {
                        let c = bi * n + k;
                        if tx.pn.bits()[k] == 1 && c < len {
                            residual[c] += phases[ti];
                        }
                    }
                }
            }
            let weight = tx.pn.weight() as f64;
            let mut best = (f64::INFINITY, phases[ti]);
            for step in 0..32 {
                let cand =
                    Complex64::from_polar(1.0, std::f64::consts::TAU * step as f64 / 32.0);
                let mut cost = 0.0;
                for bi in 0..tx.total_bits {
                    let bit = if bi < tx.known_prefix.len() {
                        tx.known_prefix[bi]
                    } else {
                        // Matched per-symbol decision against the residual.
                        let mut m = Complex64::new(0.0, 0.0);
                        for k in 0..n {
                            let c = bi * n + k;
                            if tx.pn.bits()[k] == 1 && c < len {
                                m += residual[c] * cand.conj();
                            }
                        }
                        u8::from(m.re / weight >= 0.5)
                    };
                    for k in 0..n {
                        let c = bi * n + k;
                        if c < len {
                            let pred = if bit == 1 && tx.pn.bits()[k] == 1 {
                                cand
                            } else {
                                Complex64::new(0.0, 0.0)
                            };
                            cost += (residual[c] - pred).norm_sqr();
                        }
                    }
                }
                if cost < best.0 {
                    best = (cost, cand);
                }
            }
            phases[ti] = best.1;
        }
        decided = run_trellis(bins, txs, &phases, &alive, &starts, &ends, &slot_of, config, n);
    }

    txs.iter()
        .enumerate()
        .map(|(ti, _)| DecodedTransmission {
            bits: decided[ti].clone(),
            phase: phases[ti],
            coherence: if alive[ti] { coherence[ti] } else { 0.0 },
        })
        .collect()
}

/// Streaming acquisition: for each transmission in start order, estimate the
/// carrier phase from the known preamble over the residual (observed minus
/// the reconstruction of everything acquired so far), matched-decode its
/// bits against that residual, and add its reconstruction. Later-starting
/// streams are the only leftover interference on the first sweep; further
/// sweeps re-derive each packet against the full reconstruction of all the
/// others, parallel-cancellation style.
fn bootstrap_phases(
    bins: &[Complex64],
    txs: &[ActiveTransmission],
    n: usize,
    sweeps: usize,
    salt: u64,
) -> Vec<Complex64> {
    let t_end = bins.len();
    let mut order: Vec<usize> = (0..txs.len()).collect();
    if salt == 0 {
        order.sort_by_key(|&i| (txs[i].start_chip, i));
    } else {
        order.sort_by_key(|&i| {
            let h = (i as u64 + 1).wrapping_mul(salt).wrapping_mul(0x9E37_79B9_7F4A_7C15);
            (txs[i].start_chip, h)
        });
        // Salted attempts also rotate which transmission leads each cohort.
        let shift = (salt as usize) % order.len().max(1);
        order.rotate_left(shift);
    }
    let mut rec = vec![Complex64::new(0.0, 0.0); t_end];
    let mut phases = vec![Complex64::new(1.0, 0.0); txs.len()];
    let mut bits_now: Vec<Vec<u8>> = txs.iter().map(|tx| vec![0u8; tx.total_bits]).collect();

    let apply = |rec: &mut Vec<Complex64>, tx: &ActiveTransmission, bits: &[u8], phase: Complex64, sign: f64| {
        for (bi, &b) in bits.iter().enumerate() {
            if b == 1 {
                for k in 0..n {
                    let c = tx.start_chip + bi * n + k;
                    if tx.pn.bits()[k] == 1 && c < t_end {
                        *rec.get_mut(c).unwrap() += phase * sign;
                    }
                }
            }
        }
    };

    for sweep in 0..sweeps.max(1) {
        for &ti in &order {
            let tx = &txs[ti];
            // Withdraw the previous sweep's contribution before re-deriving.
            if sweep > 0 {
                apply(&mut rec, tx, &bits_now[ti], phases[ti], -1.0);
            }
            let mut acc = Complex64::new(0.0, 0.0);
            for (bi, &b) in tx.known_prefix.iter().enumerate() {
                if b == 1 {
                    for k in 0..n {
                        let c = tx.start_chip + bi * n + k;
                        if tx.pn.bits()[k] == 1 && c < t_end {
                            acc += bins[c] - rec[c];
                        }
                    }
                }
            }
            let phase = if acc.norm() == 0.0 {
                Complex64::new(1.0, 0.0)
            } else {
                acc / acc.norm()
            };
            phases[ti] = phase;
            let weight = tx.pn.weight() as f64;
            let bits = &mut bits_now[ti];
            for bi in 0..tx.total_bits {
                bits[bi] = if bi < tx.known_prefix.len() {
                    tx.known_prefix[bi]
                } else {
                    let mut m = Complex64::new(0.0, 0.0);
                    for k in 0..n {
                        let c = tx.start_chip + bi * n + k;
                        if tx.pn.bits()[k] == 1 && c < t_end {
                            m += (bins[c] - rec[c]) * phase.conj();
                        }
                    }
                    u8::from(m.re / weight >= 0.5)
                };
            }
            apply(&mut rec, tx, bits, phase, 1.0);
        }
    }
    phases
}

fn add_symbol(
    rec: &mut [Complex64],
    tx: &ActiveTransmission,
    bit_index: usize,
    n: usize,
    phase: Complex64,
) {
    let base = tx.start_chip + bit_index * n;
    for k in 0..n {
        if tx.pn.bits()[k] == 1 && base + k < rec.len() {
            rec[base + k] += phase;
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn run_trellis(
    bins: &[Complex64],
    txs: &[ActiveTransmission],
    phases: &[Complex64],
    alive: &[bool],
    starts: &[Vec<SymbolEvent>],
    ends: &[Vec<SymbolEvent>],
    slot_of: &[usize],
    config: &DecoderConfig,
    n: usize,
) -> Vec<Vec<u8>> {
    let t_end = bins.len();

    // Known-prefix chips form a deterministic baseline per column.
    let mut baseline = vec![Complex64::new(0.0, 0.0); t_end];
    for (ti, tx) in txs.iter().enumerate() {
        if !alive[ti] {
            continue;
        }
        for (bi, &b) in tx.known_prefix.iter().enumerate() {
            if b == 1 {
                add_symbol(&mut baseline, tx, bi, n, phases[ti]);
            }
        }
        // Decode the prefix as given.
    }

    let mut decided: Vec<Vec<u8>> = txs
        .iter()
        .map(|tx| {
            let mut bits = vec![0u8; tx.total_bits];
            bits[..tx.known_prefix.len()].copy_from_slice(&tx.known_prefix);
            bits
        })
        .collect();

    // Active unknown symbol per slot.
    let mut active: [Option<(u32, u32, u32)>; 16] = [None; 16];
    // (state bits over slots, accumulated cost)
    let mut states: Vec<(u16, f64)> = vec![(0, 0.0)];
    states.reserve(1 << 10);
    let mut scratch: Vec<(u16, f64)> = Vec::with_capacity(1 << 10);

    for c in 0..t_end {
        for ev in &ends[c] {
            if !alive[ev.tx as usize] {
                continue;
            }
            let slot = slot_of[ev.tx as usize];
            let best = states
                .iter()
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .expect("states never empty");
            let bit = (best.0 >> slot & 1) as u8;
            decided[ev.tx as usize][ev.idx as usize] = bit;
            scratch.clear();
            scratch.extend(
                states
                    .iter()
                    .filter(|(st, _)| (st >> slot & 1) as u8 == bit)
                    .map(|&(st, cost)| (st & !(1 << slot), cost)),
            );
            scratch.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
            scratch.dedup_by_key(|e| e.0);
            std::mem::swap(&mut states, &mut scratch);
            active[slot] = None;
        }
        for ev in &starts[c] {
            if !alive[ev.tx as usize] {
                continue;
            }
            let slot = slot_of[ev.tx as usize];
            active[slot] = Some((ev.tx, ev.idx, ev.start));
            scratch.clear();
            for &(st, cost) in &states {
                scratch.push((st, cost));
                scratch.push((st | (1 << slot), cost));
            }
            std::mem::swap(&mut states, &mut scratch);
        }

        // Column update: per-slot chip contributions at this column.
        let mut contrib: [Complex64; 16] = [Complex64::new(0.0, 0.0); 16];
        let mut live_mask: u16 = 0;
        for slot in 0..16 {
            if let Some((ti, _, start)) = active[slot] {
                let tx = &txs[ti as usize];
                if tx.pn.bits()[c - start as usize] == 1 {
                    contrib[slot] = phases[ti as usize];
                    live_mask |= 1 << slot;
                }
            }
        }
        let target = bins[c] - baseline[c];
        if live_mask == 0 {
            let cost = target.norm_sqr();
            for st in states.iter_mut() {
                st.1 += cost;
            }
        } else {
            let mut min = f64::INFINITY;
            for st in states.iter_mut() {
                let mut pred = Complex64::new(0.0, 0.0);
                let mut m = st.0 & live_mask;
                while m != 0 {
                    let slot = m.trailing_zeros() as usize;
                    pred += contrib[slot];
                    m &= m - 1;
                }
                st.1 += (target - pred).norm_sqr();
                min = min.min(st.1);
            }
            states.retain(|&(_, cost)| cost <= min + config.beam);
            if states.len() > MAX_TRELLIS_STATES {
                states.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
                states.truncate(MAX_TRELLIS_STATES);
            }
            // Rebase costs so they stay bounded over long rows.
            for st in states.iter_mut() {
                st.1 -= min;
            }
        }
    }
    // Commit any symbols still open at the end of the row.
    let best = states
        .iter()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|&(st, _)| st)
        .unwrap_or(0);
    for slot in 0..16 {
        if let Some((ti, idx, _)) = active[slot] {
            decided[ti as usize][idx as usize] = (best >> slot & 1) as u8;
        }
    }
    decided
}

//! Exact periodic auto- and cross-correlation under the ±1 mapping.
//!
//! Bits are mapped `0 -> +1`, `1 -> -1` and all values are integers or exact
//! rationals; the three-valued Gold property is a combinatorial fact, not a
//! floating-point approximation.

use std::collections::BTreeMap;

use num_rational::Ratio;

use crate::{Error, Result};

use super::gold::PnSet;

fn bipolar(bit: u8) -> i64 {
    1 - 2 * i64::from(bit)
}

/// Unnormalized periodic cross-correlation `sum_n a'(n) b'(n - tau)` over one
/// period; `tau` is reduced modulo the length.
pub fn crosscorrelation_unnormalized(a: &[u8], b: &[u8], tau: usize) -> Result<i64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let n = a.len();
    let tau = tau % n;
    let mut acc = 0i64;
    for i in 0..n {
        acc += bipolar(a[i]) * bipolar(b[(i + n - tau) % n]);
    }
    Ok(acc)
}

/// Normalized periodic cross-correlation `R(tau)` as an exact rational.
pub fn crosscorrelation(a: &[u8], b: &[u8], tau: usize) -> Result<Ratio<i64>> {
    let raw = crosscorrelation_unnormalized(a, b, tau)?;
    Ok(Ratio::new(raw, a.len() as i64))
}

/// Periodic autocorrelation `R(tau)`; equals 1 at `tau = 0 (mod N)` and
/// `-1/N` elsewhere for any m-sequence.
pub fn autocorrelation(seq: &[u8], tau: usize) -> Ratio<i64> {
    crosscorrelation(seq, seq, tau).expect("equal lengths")
}

/// The Gold cross-correlation bound `t(n)`.
pub fn gold_bound(n: usize) -> i64 {
    if n % 2 == 0 {
        1 + (1i64 << ((n + 2) / 2))
    } else {
        1 + (1i64 << ((n + 1) / 2))
    }
}

/// Result of scanning every pair of set members over every shift.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorrelationReport {
    /// Histogram of observed unnormalized correlation values.
    pub values: BTreeMap<i64, u64>,
    /// The admissible triple `{-t(n), -1, t(n) - 2}`.
    pub allowed: [i64; 3],
    /// True iff every observed value is in the admissible triple.
    pub passes: bool,
}

/// Check the three-valued property over all distinct pairs of set members at
/// every shift.
pub fn verify_three_valued(set: &PnSet) -> CorrelationReport {
    let t = gold_bound(set.degree());
    let allowed = [-t, -1, t - 2];
    let mut values = BTreeMap::new();
    let seqs = set.sequences();
    let n = set.period();
    for i in 0..seqs.len() {
        for j in i + 1..seqs.len() {
            for tau in 0..n {
                let v = crosscorrelation_unnormalized(seqs[i].bits(), seqs[j].bits(), tau)
                    .expect("set members share a period");
                *values.entry(v).or_insert(0) += 1;
            }
        }
    }
    let passes = values.keys().all(|v| allowed.contains(v));
    CorrelationReport {
        values,
        allowed,
        passes,
    }
}

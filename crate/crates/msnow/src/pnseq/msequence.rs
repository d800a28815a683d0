//! Maximal-length sequence generation and decimation.

use std::collections::BTreeMap;
use std::fmt;

use crate::{Error, Result};

use super::polynomial::{Polynomial, Seed};

/// A maximal-length sequence of period `N = 2^n - 1` together with the
/// polynomial and seed that generate it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MSequence {
    bits: Vec<u8>,
    poly: Polynomial,
    seed: Seed,
}

/// Run the LFSR recursion `a_i = sum_k c_k a_{i-k} (mod 2)` and return one
/// full period of output, starting with the seed bits themselves.
///
/// The register state is the sliding window of the last `n` output bits, so
/// the measured period is the first step at which the window returns to the
/// seed. A period shorter than `2^n - 1` means the polynomial is not
/// primitive for this seed's cycle and is rejected.
pub fn generate_msequence(poly: &Polynomial, seed: &Seed) -> Result<MSequence> {
    let n = poly.degree();
    if seed.len() != n {
        return Err(Error::Config(format!(
            "seed length {} does not match polynomial degree {n}",
            seed.len()
        )));
    }
    let period = poly.max_period();

    // Generate period + n bits so every window up to the full period exists.
    let mut bits = Vec::with_capacity(period + n);
    bits.extend_from_slice(seed.bits());
    for i in n..period + n {
        let mut b = 0u8;
        for &k in poly.taps() {
            b ^= bits[i - k];
        }
        bits.push(b);
    }

    let measured = (1..=period)
        .find(|&t| bits[t..t + n] == bits[..n])
        .expect("invertible register must return to its seed within 2^n - 1 steps");
    if measured < period {
        return Err(Error::NonPrimitive {
            degree: n,
            period: measured,
        });
    }

    bits.truncate(period);
    Ok(MSequence {
        bits,
        poly: poly.clone(),
        seed: seed.clone(),
    })
}

/// Sample every `q`-th bit of `u` (indices taken modulo the period) until a
/// full-length sequence is formed. Requires `gcd(N, q) = 1` so the sampling
/// visits every position; the result is itself an m-sequence, whose own
/// recursion and seed are recovered from the bits.
pub fn decimate(u: &MSequence, q: usize) -> Result<MSequence> {
    let n_len = u.len();
    if gcd(n_len, q) != 1 {
        return Err(Error::DecimationGcd { len: n_len, q });
    }
    let bits: Vec<u8> = (0..n_len).map(|i| u.bits[(i * q) % n_len]).collect();
    let degree = u.degree();
    let poly = recover_recursion(&bits, degree).ok_or_else(|| {
        Error::Runtime(format!(
            "decimated sequence admits no degree-{degree} recursion"
        ))
    })?;
    let seed = Seed::new(bits[..degree].to_vec())?;
    Ok(MSequence { bits, poly, seed })
}

/// Find the unique degree-`n` cyclic recursion satisfied by `bits`, searching
/// every tap set that includes the mandatory tap at `n`.
pub(crate) fn recover_recursion(bits: &[u8], n: usize) -> Option<Polynomial> {
    let period = bits.len();
    'outer: for mask in 0..(1u32 << (n - 1)) {
        let mut taps: Vec<usize> = (1..n).filter(|&k| mask >> (k - 1) & 1 == 1).collect();
        taps.push(n);
        for i in 0..period {
            let mut b = 0u8;
            for &k in &taps {
                b ^= bits[(i + period - k) % period];
            }
            if b != bits[i] {
                continue 'outer;
            }
        }
        return Some(Polynomial::new(n, taps).expect("taps validated by construction"));
    }
    None
}

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl MSequence {
    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    /// Period `N = 2^n - 1`.
    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.poly.degree()
    }

    pub fn polynomial(&self) -> &Polynomial {
        &self.poly
    }

    pub fn seed(&self) -> &Seed {
        &self.seed
    }

    /// Counts of (ones, zeros); an m-sequence has exactly one more 1 than 0.
    pub fn balance(&self) -> (usize, usize) {
        let ones = self.bits.iter().filter(|&&b| b == 1).count();
        (ones, self.bits.len() - ones)
    }

    /// Cyclic run-length histogram: map from run length to number of runs.
    pub fn run_lengths(&self) -> BTreeMap<usize, usize> {
        let n_len = self.bits.len();
        let mut hist = BTreeMap::new();
        if self.bits.iter().all(|&b| b == self.bits[0]) {
            hist.insert(n_len, 1);
            return hist;
        }
        // Start at a cyclic run boundary so the wrap-around run is whole.
        let start = (0..n_len)
            .find(|&i| self.bits[i] != self.bits[(i + n_len - 1) % n_len])
            .unwrap();
        let mut i = 0;
        while i < n_len {
            let value = self.bits[(start + i) % n_len];
            let mut run = 0;
            while i < n_len && self.bits[(start + i) % n_len] == value {
                run += 1;
                i += 1;
            }
            *hist.entry(run).or_insert(0) += 1;
        }
        hist
    }

    /// Exact maximal-length run profile: of the `2^(n-1)` cyclic runs, half
    /// have length 1, a quarter length 2, `2^(n-1-k)` length `k` for
    /// `k <= n - 2`, plus one run of length `n - 1` and one of length `n`.
    pub fn has_msequence_run_profile(&self) -> bool {
        let n = self.degree();
        let hist = self.run_lengths();
        let mut expected = BTreeMap::new();
        for k in 1..=n.saturating_sub(2) {
            expected.insert(k, 1usize << (n - 1 - k));
        }
        *expected.entry(n - 1).or_insert(0) += 1;
        *expected.entry(n).or_insert(0) += 1;
        hist == expected
    }

    /// If `other` is a cyclic shift of `self`, return the left-shift amount.
    pub fn cyclic_shift_to(&self, other: &[u8]) -> Option<usize> {
        let n_len = self.bits.len();
        if other.len() != n_len {
            return None;
        }
        (0..n_len).find(|&s| (0..n_len).all(|i| other[i] == self.bits[(i + s) % n_len]))
    }
}

impl fmt::Display for MSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

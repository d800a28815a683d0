//! Feedback polynomials and initial register states for LFSRs.

use std::fmt;

use crate::{Error, Result};

/// A binary feedback polynomial for a Fibonacci LFSR of degree `n`.
///
/// The tap set holds the delays `k` in `[1, n]` whose coefficients are 1 in
/// the recursion `a_i = sum_k c_k * a_{i-k} (mod 2)`. A tap at delay `k` is
/// the `x^k` term of the connection polynomial `1 + sum_k c_k x^k`, so the
/// mandatory tap at `n` is the leading term.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Polynomial {
    degree: usize,
    taps: Vec<usize>,
}

impl Polynomial {
    pub fn new(degree: usize, taps: impl IntoIterator<Item = usize>) -> Result<Self> {
        if degree < 2 {
            return Err(Error::Config(format!("degree {degree} < 2")));
        }
        let mut taps: Vec<usize> = taps.into_iter().collect();
        taps.sort_unstable();
        taps.dedup();
        if taps.is_empty() {
            return Err(Error::Config("empty tap set".into()));
        }
        if taps.iter().any(|&k| k == 0 || k > degree) {
            return Err(Error::Config(format!(
                "tap out of range 1..={degree}: {taps:?}"
            )));
        }
        if *taps.last().unwrap() != degree {
            return Err(Error::Config(format!(
                "tap at position {degree} must be present (constant term of the polynomial)"
            )));
        }
        Ok(Self { degree, taps })
    }

    /// The default primitive polynomial of degree `n` used by the first LFSR.
    ///
    /// Entries are classic maximal-length generators; `generate_msequence`
    /// independently confirms the full period at run time.
    pub fn primitive(n: usize) -> Result<Self> {
        let taps: &[usize] = match n {
            2 => &[1, 2],             // x^2 + x + 1
            3 => &[2, 3],             // x^3 + x^2 + 1
            4 => &[3, 4],             // x^4 + x^3 + 1
            5 => &[3, 5],             // x^5 + x^3 + 1
            6 => &[5, 6],             // x^6 + x^5 + 1
            7 => &[4, 7],             // x^7 + x^4 + 1
            8 => &[4, 5, 6, 8],       // x^8 + x^6 + x^5 + x^4 + 1
            9 => &[5, 9],             // x^9 + x^5 + 1
            10 => &[7, 10],           // x^10 + x^7 + 1
            _ => {
                return Err(Error::Config(format!(
                    "no default primitive polynomial for degree {n} (supported: 2..=10)"
                )))
            }
        };
        Self::new(n, taps.iter().copied())
    }

    /// The reciprocal degree-3 generator, `x^3 + x + 1`, used by the second
    /// LFSR when reproducing the printed length-7 PN sets.
    pub fn companion_n3() -> Self {
        Self::new(3, [1, 3]).unwrap()
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn taps(&self) -> &[usize] {
        &self.taps
    }

    /// Sequence period when the polynomial is primitive.
    pub fn max_period(&self) -> usize {
        (1usize << self.degree) - 1
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &k in self.taps.iter().rev() {
            match k {
                1 => write!(f, "x + ")?,
                e => write!(f, "x^{e} + ")?,
            }
        }
        write!(f, "1")
    }
}

/// A non-zero initial LFSR state of `n` bits, written MSB first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Seed {
    bits: Vec<u8>,
}

impl Seed {
    pub fn new(bits: impl Into<Vec<u8>>) -> Result<Self> {
        let bits = bits.into();
        if bits.iter().any(|&b| b > 1) {
            return Err(Error::Config("seed bits must be 0 or 1".into()));
        }
        if bits.is_empty() || bits.iter().all(|&b| b == 0) {
            return Err(Error::ZeroSeed);
        }
        Ok(Self { bits })
    }

    /// Parse a seed from a bit string such as `"101"`.
    pub fn parse(s: &str) -> Result<Self> {
        let bits: Vec<u8> = s
            .chars()
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                other => Err(Error::Config(format!("invalid seed character '{other}'"))),
            })
            .collect::<Result<_>>()?;
        Self::new(bits)
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }
}

impl fmt::Display for Seed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tap_at_degree_required() {
        assert!(Polynomial::new(3, [2]).is_err());
        assert!(Polynomial::new(3, [2, 3]).is_ok());
    }

    #[test]
    fn display_matches_tap_convention() {
        let p = Polynomial::new(3, [2, 3]).unwrap();
        assert_eq!(p.to_string(), "x^3 + x^2 + 1");
        let p = Polynomial::companion_n3();
        assert_eq!(p.to_string(), "x^3 + x + 1");
    }

    #[test]
    fn zero_seed_rejected() {
        assert_eq!(Seed::parse("000").unwrap_err(), Error::ZeroSeed);
        assert!(Seed::parse("101").is_ok());
    }
}

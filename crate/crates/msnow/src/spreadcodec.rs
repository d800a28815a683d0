//! Spreading data bits into chip symbols and despreading received sample
//! vectors back into bits.
//!
//! Under OOK a data bit 1 becomes one copy of the sensor's PN sequence and a
//! data bit 0 becomes N silent chips. The receiver despreads a symbol by the
//! inner product of the received magnitude vector with the PN chips and
//! recovers the bit with a majority rule over the repeated chips.

use std::fmt;

use rand::Rng;

use crate::pnseq::PnSequence;
use crate::{Error, Result};

/// The fixed on-air preamble byte. Chosen for an aperiodic bit pattern
/// (10111000) so a symbol-shifted copy of the spread preamble correlates at
/// no more than half of the aligned value.
pub const PREAMBLE_BYTE: u8 = 0xB8;

/// Byte budget of a packet: preamble, header, payload.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PacketLayout {
    pub preamble_bytes: usize,
    pub header_bytes: usize,
    pub payload_bytes: usize,
}

impl Default for PacketLayout {
    fn default() -> Self {
        Self {
            preamble_bytes: 1,
            header_bytes: 12,
            payload_bytes: 28,
        }
    }
}

impl PacketLayout {
    pub fn total_bytes(&self) -> usize {
        self.preamble_bytes + self.header_bytes + self.payload_bytes
    }

    /// Bytes counted by the reporting airtime convention (preamble excluded).
    pub fn data_bytes(&self) -> usize {
        self.header_bytes + self.payload_bytes
    }

    pub fn total_bits(&self) -> usize {
        8 * self.total_bytes()
    }
}

/// A packet: preamble, header, and payload bytes. Bits are taken MSB first
/// within each byte.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Packet {
    preamble: Vec<u8>,
    header: Vec<u8>,
    payload: Vec<u8>,
}

impl Packet {
    pub fn new(preamble: Vec<u8>, header: Vec<u8>, payload: Vec<u8>) -> Result<Self> {
        if preamble.len() + header.len() + payload.len() == 0 {
            return Err(Error::Config("empty packet".into()));
        }
        Ok(Self {
            preamble,
            header,
            payload,
        })
    }

    /// A packet with the standard preamble and the given data bytes.
    pub fn from_data(layout: PacketLayout, header: Vec<u8>, payload: Vec<u8>) -> Result<Self> {
        if header.len() != layout.header_bytes || payload.len() != layout.payload_bytes {
            return Err(Error::Config(format!(
                "header/payload sizes {}/{} do not match layout {}/{}",
                header.len(),
                payload.len(),
                layout.header_bytes,
                layout.payload_bytes
            )));
        }
        Self::new(vec![PREAMBLE_BYTE; layout.preamble_bytes], header, payload)
    }

    /// A packet with random header and payload bytes.
    pub fn random(layout: PacketLayout, rng: &mut impl Rng) -> Self {
        let header = (0..layout.header_bytes).map(|_| rng.gen()).collect();
        let payload = (0..layout.payload_bytes).map(|_| rng.gen()).collect();
        Self::from_data(layout, header, payload).expect("sizes match layout by construction")
    }

    pub fn preamble(&self) -> &[u8] {
        &self.preamble
    }

    pub fn header(&self) -> &[u8] {
        &self.header
    }

    pub fn payload(&self) -> &[u8] {
        &self.payload
    }

    /// All bytes in on-air order.
    pub fn bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.len_bytes());
        out.extend_from_slice(&self.preamble);
        out.extend_from_slice(&self.header);
        out.extend_from_slice(&self.payload);
        out
    }

    /// Header and payload bytes (the part compared for correct decoding).
    pub fn data_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.header.len() + self.payload.len());
        out.extend_from_slice(&self.header);
        out.extend_from_slice(&self.payload);
        out
    }

    pub fn len_bytes(&self) -> usize {
        self.preamble.len() + self.header.len() + self.payload.len()
    }

    pub fn bit_len(&self) -> usize {
        8 * self.len_bytes()
    }

    /// Bit vector, MSB first per byte, preamble first.
    pub fn bits(&self) -> Vec<u8> {
        bytes_to_bits(&self.bytes())
    }
}

pub fn bytes_to_bits(bytes: &[u8]) -> Vec<u8> {
    let mut bits = Vec::with_capacity(bytes.len() * 8);
    for &byte in bytes {
        for shift in (0..8).rev() {
            bits.push(byte >> shift & 1);
        }
    }
    bits
}

pub fn bits_to_bytes(bits: &[u8]) -> Vec<u8> {
    bits.chunks(8)
        .map(|chunk| {
            chunk
                .iter()
                .fold(0u8, |acc, &b| (acc << 1) | (b & 1))
        })
        .collect()
}

/// A packet spread into chips: `chips_per_bit` chips per data bit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChipStream {
    chips: Vec<u8>,
    chips_per_bit: usize,
}

impl ChipStream {
    /// Build a stream from raw chips (golden tests and probe signals).
    pub fn from_chips(chips: Vec<u8>, chips_per_bit: usize) -> Self {
        Self {
            chips,
            chips_per_bit,
        }
    }

    pub fn chips(&self) -> &[u8] {
        &self.chips
    }

    pub fn chips_per_bit(&self) -> usize {
        self.chips_per_bit
    }

    pub fn len(&self) -> usize {
        self.chips.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chips.is_empty()
    }

    pub fn bit_count(&self) -> usize {
        self.chips.len() / self.chips_per_bit
    }
}

impl fmt::Display for ChipStream {
    /// 0/1 text form used by golden tests.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &c in &self.chips {
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

/// Quantized magnitude samples for one symbol period: `N` entries, each the
/// RSS level (0..=9) of one chip slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleVector {
    samples: Vec<u8>,
}

impl SampleVector {
    pub fn new(samples: Vec<u8>) -> Self {
        Self { samples }
    }

    pub fn samples(&self) -> &[u8] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Spread one data bit: bit 1 copies the PN chips, bit 0 is all zeros (no
/// transmission under OOK).
pub fn spread_bit(bit: u8, g: &PnSequence) -> Vec<u8> {
    if bit & 1 == 1 {
        g.bits().to_vec()
    } else {
        vec![0; g.len()]
    }
}

/// Spread every bit of a packet into a chip stream of `8 * bytes * N` chips.
pub fn encode_packet(packet: &Packet, g: &PnSequence) -> Result<ChipStream> {
    encode_bits(&packet.bits(), g)
}

/// Spread a raw bit vector.
pub fn encode_bits(bits: &[u8], g: &PnSequence) -> Result<ChipStream> {
    if bits.is_empty() {
        return Err(Error::Config("cannot encode an empty packet".into()));
    }
    let n = g.len();
    let mut chips = Vec::with_capacity(bits.len() * n);
    for &bit in bits {
        chips.extend_from_slice(&spread_bit(bit, g));
    }
    Ok(ChipStream {
        chips,
        chips_per_bit: n,
    })
}

/// Despread one symbol: the inner product of the received magnitudes with
/// the PN chips.
pub fn despread_symbol(r: &SampleVector, g: &PnSequence) -> Result<u32> {
    if r.len() != g.len() {
        return Err(Error::LengthMismatch {
            left: r.len(),
            right: g.len(),
        });
    }
    Ok(r.samples()
        .iter()
        .zip(g.bits())
        .map(|(&s, &c)| u32::from(s) * u32::from(c))
        .sum())
}

/// Majority threshold: a bit is 1 when at least half of its repeated chips
/// survive, i.e. `ceil(weight / 2)`; ties decide 1.
pub fn decide_threshold(weight: usize) -> u32 {
    ((weight + 1) / 2) as u32
}

/// Recover a data bit from a despread correlation.
pub fn decide_bit(correlation: u32, g: &PnSequence) -> u8 {
    u8::from(correlation >= decide_threshold(g.weight()))
}

/// Decoded bits plus a per-bit confidence of `correlation / weight`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodedBits {
    pub bits: Vec<u8>,
    pub confidence: Vec<f64>,
}

impl DecodedBits {
    pub fn bytes(&self) -> Vec<u8> {
        bits_to_bytes(&self.bits)
    }
}

/// Despread and decide every symbol of a packet. `expected_bits` is the
/// caller's framing expectation; a count mismatch is an error.
pub fn decode_packet(
    symbols: &[SampleVector],
    g: &PnSequence,
    expected_bits: usize,
) -> Result<DecodedBits> {
    if symbols.len() != expected_bits {
        return Err(Error::LengthMismatch {
            left: symbols.len(),
            right: expected_bits,
        });
    }
    let weight = g.weight() as f64;
    let mut bits = Vec::with_capacity(symbols.len());
    let mut confidence = Vec::with_capacity(symbols.len());
    for symbol in symbols {
        let corr = despread_symbol(symbol, g)?;
        bits.push(decide_bit(corr, g));
        confidence.push(f64::from(corr) / weight);
    }
    Ok(DecodedBits { bits, confidence })
}

/// Slice a noise-free chip stream into per-symbol sample vectors (levels are
/// the chips themselves for a single sensor).
pub fn chips_to_symbols(stream: &ChipStream) -> Vec<SampleVector> {
    stream
        .chips
        .chunks(stream.chips_per_bit)
        .map(|chunk| SampleVector::new(chunk.to_vec()))
        .collect()
}

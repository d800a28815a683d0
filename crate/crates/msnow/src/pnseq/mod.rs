//! LFSR m-sequences, preferred pairs, and Gold-code PN sets.

mod correlation;
mod gold;
mod msequence;
mod polynomial;

pub use correlation::{
    autocorrelation, crosscorrelation, crosscorrelation_unnormalized, gold_bound,
    verify_three_valued, CorrelationReport,
};
pub use gold::{
    default_decimation, generate_gold_set, validate_preferred_pair, PairViolation, PnSequence,
    PnSet, PreferredPair,
};
pub use msequence::{decimate, generate_msequence, MSequence};
pub use polynomial::{Polynomial, Seed};

/// The two evaluation PN sets: degree 3 with seeds `101`/`101` and
/// `010`/`010`, allocated to odd- and even-numbered subcarriers.
pub fn evaluation_sets() -> (PnSet, PnSet) {
    let pns1 = PnSet::from_seeds(3, "101", "101", "PNs1").expect("frozen seeds are valid");
    let pns2 = PnSet::from_seeds(3, "010", "010", "PNs2").expect("frozen seeds are valid");
    (pns1, pns2)
}

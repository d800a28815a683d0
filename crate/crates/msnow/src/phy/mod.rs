//! The D-OFDM wideband physical layer.

pub mod channel;
pub mod decoder;
pub mod demux;
pub mod plan;
pub mod preamble;
pub mod signal;

pub use channel::{add_awgn, bin_noise_sigma, noise_variance_per_sample};
pub use decoder::{
    decode_subcarrier, decode_subcarrier_with_phases, ActiveTransmission, DecodedTransmission,
    DecoderConfig,
};
pub use demux::{gfft_demux, quantize_rss, DemuxOutput, QuantizedSubcarrierMatrix};
pub use plan::{build_subcarrier_plan, Subcarrier, SubcarrierPlan};
pub use preamble::{
    detect_preamble, detect_preamble_among, detect_trains, preamble_template, Detection,
    DetectorConfig, TrainConfig,
};
pub use signal::{
    compose_downlink_stream, place_transmission, synthesize_downlink, synthesize_uplink,
    BasebandSignal, DownlinkStream, Transmission,
};

//! Baseband traffic and jammer synthesis.

mod buffer;
mod jammer;
mod mix;
mod ofdm;

pub use buffer::{add, sample_count, JsiqHeader, SampleBuffer, JSIQ_MAGIC, JSIQ_VERSION};
pub use jammer::{
    gen_broadband, gen_linear_sweep, gen_multi_tone, gen_sawtooth_sweep, gen_single_tone,
    is_broadband_blocking, BroadbandParams, ChirpParams, EnvelopeMode, JammerKind, JammerSpec,
    MultiToneParams, SawtoothSweepParams, SingleToneParams, Tone,
};
pub use mix::{db_to_ratio, mix, mix_parts, ratio_to_db, MixParts, SlotMask};
pub use ofdm::{gen_ofdm, gen_ofdm_frame, OfdmConfig, SubcarrierMod};

pub const DEFAULT_SAMPLE_RATE_HZ: f64 = 1e6;
pub const DEFAULT_SLOT_DURATION_S: f64 = 1e-3;

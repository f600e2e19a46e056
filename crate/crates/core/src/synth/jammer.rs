//! Closed-form jammer waveform models.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::buffer::{sample_count, SampleBuffer};
use crate::error::{Error, Result};
use crate::rng;

/// `sqrt(2J) cos(2π f t + θ)`, with `J` the average tone power.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingleToneParams {
    pub power_j: f64,
    pub freq_hz: f64,
    pub phase_rad: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tone {
    pub power_j: f64,
    pub freq_hz: f64,
    pub phase_rad: f64,
}

/// Sum of complex tones `sqrt(J_i) exp(j(2π f_i t + φ_i))`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MultiToneParams {
    pub tones: Vec<Tone>,
}

impl MultiToneParams {
    /// `count` tones of equal power at the given frequencies with phases
    /// drawn uniformly from [0, 2π).
    pub fn random_phases(freqs_hz: &[f64], power_each: f64, seed: u64) -> Self {
        let mut r = rng::seeded(seed);
        let tones = freqs_hz
            .iter()
            .map(|&f| Tone {
                power_j: power_each,
                freq_hz: f,
                phase_rad: r.random_range(0.0..2.0 * PI),
            })
            .collect();
        MultiToneParams { tones }
    }
}

/// Linear FM sweep `A exp(j(2π f0 t + π k t² + φ))` over `0 <= t <= T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChirpParams {
    pub amplitude: f64,
    pub f0_hz: f64,
    pub slope_hz_per_s: f64,
    pub phase_rad: f64,
    pub duration_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum EnvelopeMode {
    #[default]
    Constant,
    GaussianNoise,
}

/// Narrowband carrier whose frequency ramps at `k` Hz/s and snaps back to the
/// carrier every `sweep_period_s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SawtoothSweepParams {
    pub amplitude_uj: f64,
    pub carrier_hz: f64,
    pub sweep_slope_hz_per_s: f64,
    pub sweep_period_s: f64,
    #[serde(default)]
    pub envelope_mode: EnvelopeMode,
    pub init_phase_rad: f64,
}

/// Wideband noise jammer footprint. All frequencies are absolute; the
/// communication center `comm_center_hz` maps to 0 Hz in baseband.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BroadbandParams {
    pub jam_center_hz: f64,
    pub jam_bandwidth_hz: f64,
    pub channel_bandwidth_hz: f64,
    pub comm_center_hz: f64,
}

impl BroadbandParams {
    pub fn band(&self) -> (f64, f64) {
        let half = self.jam_bandwidth_hz / 2.0;
        (self.jam_center_hz - half, self.jam_center_hz + half)
    }

    /// Whether `freq_hz` falls inside `[f_j - Δf_j/2, f_j + Δf_j/2]`.
    pub fn covers(&self, freq_hz: f64) -> bool {
        let (lo, hi) = self.band();
        lo <= freq_hz && freq_hz <= hi
    }
}

/// Blocking condition: `Δf_j > 5 Δf_r` and the communication center lies
/// inside the jammer band.
pub fn is_broadband_blocking(p: &BroadbandParams) -> bool {
    p.jam_bandwidth_hz > 5.0 * p.channel_bandwidth_hz && p.covers(p.comm_center_hz)
}

fn check_power(name: &str, power: f64) -> Result<()> {
    if power < 0.0 || !power.is_finite() {
        return Err(Error::config(format!("{name} must be a finite value >= 0, got {power}")));
    }
    Ok(())
}

/// Real-valued tone stored in the real part.
pub fn gen_single_tone(
    p: &SingleToneParams,
    sample_rate_hz: f64,
    duration_s: f64,
) -> Result<SampleBuffer> {
    check_power("tone power", p.power_j)?;
    let amp = (2.0 * p.power_j).sqrt();
    SampleBuffer::from_fn(sample_rate_hz, duration_s, |_, t| {
        Complex64::new(amp * (2.0 * PI * p.freq_hz * t + p.phase_rad).cos(), 0.0)
    })
}

pub fn gen_multi_tone(
    p: &MultiToneParams,
    sample_rate_hz: f64,
    duration_s: f64,
) -> Result<SampleBuffer> {
    for tone in &p.tones {
        check_power("tone power", tone.power_j)?;
    }
    let amps: Vec<f64> = p.tones.iter().map(|t| t.power_j.sqrt()).collect();
    SampleBuffer::from_fn(sample_rate_hz, duration_s, |_, t| {
        p.tones
            .iter()
            .zip(&amps)
            .map(|(tone, &a)| Complex64::from_polar(a, 2.0 * PI * tone.freq_hz * t + tone.phase_rad))
            .sum()
    })
}

pub fn gen_linear_sweep(p: &ChirpParams, sample_rate_hz: f64) -> Result<SampleBuffer> {
    check_power("chirp amplitude", p.amplitude)?;
    SampleBuffer::from_fn(sample_rate_hz, p.duration_s, |_, t| {
        let phase = 2.0 * PI * p.f0_hz * t + PI * p.slope_hz_per_s * t * t + p.phase_rad;
        Complex64::from_polar(p.amplitude, phase)
    })
}

/// Phase of the sawtooth sweep at time `t`: carrier phase plus the integral
/// of the ramp `k (t - n T_f)`. Phase stays continuous across resets.
pub(crate) fn sawtooth_phase(p: &SawtoothSweepParams, t: f64) -> f64 {
    let period = p.sweep_period_s;
    let n = (t / period).floor();
    let tau = t - n * period;
    let ramp = PI * p.sweep_slope_hz_per_s * (n * period * period + tau * tau);
    2.0 * PI * p.carrier_hz * t + ramp + p.init_phase_rad
}

pub fn gen_sawtooth_sweep(
    p: &SawtoothSweepParams,
    sample_rate_hz: f64,
    duration_s: f64,
    seed: u64,
) -> Result<SampleBuffer> {
    if !(p.sweep_period_s > 0.0) || !p.sweep_period_s.is_finite() {
        return Err(Error::config(format!(
            "sweep period must be positive, got {}",
            p.sweep_period_s
        )));
    }
    check_power("sweep amplitude", p.amplitude_uj)?;
    let mut r = rng::seeded(seed);
    SampleBuffer::from_fn(sample_rate_hz, duration_s, |_, t| {
        let envelope = match p.envelope_mode {
            EnvelopeMode::Constant => 1.0,
            EnvelopeMode::GaussianNoise => r.sample::<f64, _>(StandardNormal),
        };
        Complex64::from_polar(p.amplitude_uj * envelope, sawtooth_phase(p, t))
    })
}

/// Band-limited complex Gaussian noise occupying the jammer band (translated
/// to baseband around `comm_center_hz`), unit mean power. Bins outside the
/// Nyquist range are dropped.
pub fn gen_broadband(
    p: &BroadbandParams,
    sample_rate_hz: f64,
    duration_s: f64,
    seed: u64,
) -> Result<SampleBuffer> {
    if !(p.jam_bandwidth_hz > 0.0) || !(p.channel_bandwidth_hz > 0.0) {
        return Err(Error::config("broadband bandwidths must be positive"));
    }
    let n = sample_count(sample_rate_hz, duration_s)?;
    let df = sample_rate_hz / n as f64;
    let (lo, hi) = p.band();
    let (lo, hi) = (lo - p.comm_center_hz, hi - p.comm_center_hz);
    let mut r = rng::seeded(seed);
    let mut bins = vec![Complex64::new(0.0, 0.0); n];
    let mut any = false;
    for (k, bin) in bins.iter_mut().enumerate() {
        let f = if k < n.div_ceil(2) { k as f64 } else { k as f64 - n as f64 } * df;
        let re: f64 = r.sample(StandardNormal);
        let im: f64 = r.sample(StandardNormal);
        if lo <= f && f <= hi {
            *bin = Complex64::new(re, im);
            any = true;
        }
    }
    if !any {
        return Err(Error::config(format!(
            "jammer band [{lo}, {hi}] Hz (baseband) holds no DFT bin at {sample_rate_hz} Hz / {n} samples"
        )));
    }
    FftPlanner::<f64>::new().plan_fft_inverse(n).process(&mut bins);
    let mut buf = SampleBuffer::new(bins, sample_rate_hz)?;
    let p = buf.mean_power();
    buf.scale(1.0 / p.sqrt());
    Ok(buf)
}

/// One of the five jammer models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum JammerSpec {
    SingleTone(SingleToneParams),
    MultiTone(MultiToneParams),
    Chirp(ChirpParams),
    Sawtooth(SawtoothSweepParams),
    Broadband(BroadbandParams),
}

impl JammerSpec {
    pub fn kind(&self) -> JammerKind {
        match self {
            JammerSpec::SingleTone(_) => JammerKind::SingleTone,
            JammerSpec::MultiTone(_) => JammerKind::MultiTone,
            JammerSpec::Chirp(_) => JammerKind::Chirp,
            JammerSpec::Sawtooth(_) => JammerKind::Sawtooth,
            JammerSpec::Broadband(_) => JammerKind::Broadband,
        }
    }

    /// Renders `duration_s` of the jammer. Chirps are rendered over their own
    /// `T` and zero-padded or truncated to the requested length.
    pub fn generate(&self, sample_rate_hz: f64, duration_s: f64, seed: u64) -> Result<SampleBuffer> {
        match self {
            JammerSpec::SingleTone(p) => gen_single_tone(p, sample_rate_hz, duration_s),
            JammerSpec::MultiTone(p) => gen_multi_tone(p, sample_rate_hz, duration_s),
            JammerSpec::Chirp(p) => {
                let n = sample_count(sample_rate_hz, duration_s)?;
                let mut buf = gen_linear_sweep(p, sample_rate_hz)?;
                buf.samples.resize(n, Complex64::new(0.0, 0.0));
                Ok(buf)
            }
            JammerSpec::Sawtooth(p) => gen_sawtooth_sweep(p, sample_rate_hz, duration_s, seed),
            JammerSpec::Broadband(p) => gen_broadband(p, sample_rate_hz, duration_s, seed),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JammerKind {
    None,
    SingleTone,
    MultiTone,
    Chirp,
    Sawtooth,
    Broadband,
}

impl JammerKind {
    pub const JAMMERS: [JammerKind; 5] = [
        JammerKind::SingleTone,
        JammerKind::MultiTone,
        JammerKind::Chirp,
        JammerKind::Sawtooth,
        JammerKind::Broadband,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            JammerKind::None => "none",
            JammerKind::SingleTone => "single_tone",
            JammerKind::MultiTone => "multi_tone",
            JammerKind::Chirp => "chirp",
            JammerKind::Sawtooth => "sawtooth",
            JammerKind::Broadband => "broadband",
        }
    }
}

use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::buffer::{check_aligned, SampleBuffer};
use crate::error::{Error, Result};
use crate::rng;

/// Per-slot on/off gate for the jammer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotMask {
    pub active: Vec<bool>,
    pub slot_duration_s: f64,
}

impl SlotMask {
    pub fn new(active: Vec<bool>, slot_duration_s: f64) -> Result<Self> {
        if !(slot_duration_s > 0.0) || !slot_duration_s.is_finite() {
            return Err(Error::config(format!(
                "slot duration must be positive, got {slot_duration_s}"
            )));
        }
        if active.is_empty() {
            return Err(Error::config("slot mask needs at least one slot"));
        }
        Ok(SlotMask { active, slot_duration_s })
    }

    /// Mask of `n_slots` slots, all set to `on`.
    pub fn uniform(n_slots: usize, slot_duration_s: f64, on: bool) -> Result<Self> {
        Self::new(vec![on; n_slots.max(1)], slot_duration_s)
    }

    /// Mask covering `buf` exactly with every slot on.
    pub fn all_active(buf: &SampleBuffer, slot_duration_s: f64) -> Result<Self> {
        let spp = samples_per_slot(slot_duration_s, buf.sample_rate_hz);
        Self::uniform(buf.len().div_ceil(spp), slot_duration_s, true)
    }

    /// Expands to one gate per sample of a buffer of `len` samples.
    pub fn sample_gates(&self, len: usize, sample_rate_hz: f64) -> Result<Vec<bool>> {
        let spp = samples_per_slot(self.slot_duration_s, sample_rate_hz);
        let needed = len.div_ceil(spp);
        if self.active.len() < needed {
            return Err(Error::Alignment(format!(
                "mask has {} slots but the buffer spans {needed}",
                self.active.len()
            )));
        }
        Ok((0..len).map(|n| self.active[n / spp]).collect())
    }
}

fn samples_per_slot(slot_duration_s: f64, sample_rate_hz: f64) -> usize {
    ((slot_duration_s * sample_rate_hz).round() as usize).max(1)
}

pub fn db_to_ratio(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn ratio_to_db(r: f64) -> f64 {
    10.0 * r.log10()
}

fn mean_power_where(samples: &[Complex64], gates: &[bool]) -> f64 {
    let (sum, count) = samples
        .iter()
        .zip(gates)
        .filter(|(_, &g)| g)
        .fold((0.0, 0usize), |(s, c), (x, _)| (s + x.norm_sqr(), c + 1));
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}

/// Everything that went into a mixed buffer, for power bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct MixParts {
    pub output: SampleBuffer,
    /// Jammer after gain and gating.
    pub jammer: SampleBuffer,
    pub noise: SampleBuffer,
    pub jammer_gain: f64,
}

/// `signal + g * jammer * mask + awgn`.
///
/// `g` is chosen so that, over the mask-active samples, jammer power over
/// signal power equals `jsr_db`. The noise realization is rescaled so its
/// power over the whole buffer sits exactly `snr_db` below the signal power.
pub fn mix(
    signal: &SampleBuffer,
    jammer: Option<&SampleBuffer>,
    jsr_db: f64,
    snr_db: f64,
    mask: &SlotMask,
    seed: u64,
) -> Result<SampleBuffer> {
    mix_parts(signal, jammer, jsr_db, snr_db, mask, seed).map(|p| p.output)
}

pub fn mix_parts(
    signal: &SampleBuffer,
    jammer: Option<&SampleBuffer>,
    jsr_db: f64,
    snr_db: f64,
    mask: &SlotMask,
    seed: u64,
) -> Result<MixParts> {
    if signal.is_empty() {
        return Err(Error::Input("cannot mix an empty signal".into()));
    }
    let n = signal.len();
    let fs = signal.sample_rate_hz;
    let gates = mask.sample_gates(n, fs)?;

    let mut gated = SampleBuffer::zeros(n, fs)?;
    let mut gain = 0.0;
    if let Some(j) = jammer {
        check_aligned(signal, j)?;
        let pj = mean_power_where(&j.samples, &gates);
        let ps = mean_power_where(&signal.samples, &gates);
        if pj > 0.0 && ps > 0.0 {
            gain = (ps * db_to_ratio(jsr_db) / pj).sqrt();
        }
        for ((out, x), &g) in gated.samples.iter_mut().zip(&j.samples).zip(&gates) {
            if g {
                *out = x * gain;
            }
        }
    }

    let mut noise = SampleBuffer::zeros(n, fs)?;
    let mut r = rng::seeded(seed);
    for s in &mut noise.samples {
        let re: f64 = StandardNormal.sample(&mut r);
        let im: f64 = StandardNormal.sample(&mut r);
        *s = Complex64::new(re, im);
    }
    let target = signal.mean_power() / db_to_ratio(snr_db);
    let realized = noise.mean_power();
    noise.scale(if realized > 0.0 { (target / realized).sqrt() } else { 0.0 });

    let samples = signal
        .samples
        .iter()
        .zip(&gated.samples)
        .zip(&noise.samples)
        .map(|((s, j), w)| s + j + w)
        .collect();
    let output = SampleBuffer {
        samples,
        sample_rate_hz: fs,
        t0_s: signal.t0_s,
    };
    Ok(MixParts {
        output,
        jammer: gated,
        noise,
        jammer_gain: gain,
    })
}

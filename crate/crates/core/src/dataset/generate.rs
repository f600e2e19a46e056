use std::f64::consts::TAU;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{label_example, DatasetManifest, ExampleRecord, Split, MANIFEST_VERSION};
use crate::error::{Error, Result};
use crate::raster::{FeatureGrid, RasterProfile, StatsAccumulator};
use crate::rng;
use crate::synth::{
    gen_ofdm, mix, BroadbandParams, ChirpParams, EnvelopeMode, JammerKind, JammerSpec,
    MultiToneParams, OfdmConfig, SampleBuffer, SawtoothSweepParams, SingleToneParams, SlotMask,
    Tone, DEFAULT_SAMPLE_RATE_HZ,
};

/// Everything that shapes a generated corpus. Stored verbatim in the manifest
/// header.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenerationConfig {
    pub count: usize,
    pub train_fraction: f64,
    pub sample_rate_hz: f64,
    pub slot_durations_s: Vec<f64>,
    /// Jammer kinds cycled over the jammed examples.
    pub jammers: Vec<JammerKind>,
    pub jsr_range_db: (f64, f64),
    pub snr_range_db: (f64, f64),
    pub label_threshold_db: f64,
    /// Share of clean-labelled examples that still carry a jammer below the
    /// label threshold.
    pub weak_jammer_fraction: f64,
    /// Jammer frequencies are drawn from `[-band, band] * fs / 2`.
    pub band_fraction: f64,
    /// Jammer onset is uniform in `[min, max) * slot`.
    pub onset_fraction_range: (f64, f64),
    pub sawtooth_envelope: EnvelopeMode,
    pub ofdm: OfdmConfig,
    pub raster: RasterProfile,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        GenerationConfig {
            count: 1200,
            train_fraction: 0.8,
            sample_rate_hz: DEFAULT_SAMPLE_RATE_HZ,
            slot_durations_s: vec![0.5e-3, 1e-3, 2e-3],
            jammers: JammerKind::JAMMERS.to_vec(),
            jsr_range_db: (-10.0, 20.0),
            snr_range_db: (5.0, 25.0),
            label_threshold_db: -5.0,
            weak_jammer_fraction: 0.0,
            band_fraction: 0.8,
            onset_fraction_range: (0.0, 0.5),
            sawtooth_envelope: EnvelopeMode::Constant,
            ofdm: OfdmConfig::default(),
            raster: RasterProfile::CANONICAL,
        }
    }
}

fn ordered(name: &str, (lo, hi): (f64, f64)) -> Result<()> {
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
        return Err(Error::config(format!("{name} [{lo}, {hi}] is not an ordered finite range")));
    }
    Ok(())
}

impl GenerationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.count == 0 {
            return Err(Error::config("dataset count must be at least 1"));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::config(format!("train fraction {} outside (0, 1)", self.train_fraction)));
        }
        if !(self.sample_rate_hz > 0.0 && self.sample_rate_hz.is_finite()) {
            return Err(Error::config("sample rate must be positive"));
        }
        if self.slot_durations_s.is_empty() || self.slot_durations_s.iter().any(|&d| !(d > 0.0 && d.is_finite())) {
            return Err(Error::config("slot durations must be a non-empty set of positive values"));
        }
        if self.slot_durations_s.iter().any(|&d| (d * self.sample_rate_hz).round() < 2.0) {
            return Err(Error::config("every slot must span at least two samples"));
        }
        if self.jammers.is_empty() || self.jammers.contains(&JammerKind::None) {
            return Err(Error::config("jammer mix must list at least one jammer kind"));
        }
        ordered("JSR range", self.jsr_range_db)?;
        ordered("SNR range", self.snr_range_db)?;
        if self.jsr_range_db.1 < self.label_threshold_db {
            return Err(Error::config("JSR range lies entirely below the label threshold"));
        }
        if !(0.0..=1.0).contains(&self.weak_jammer_fraction) {
            return Err(Error::config("weak jammer fraction outside [0, 1]"));
        }
        if self.weak_jammer_fraction > 0.0 && self.jsr_range_db.0 >= self.label_threshold_db {
            return Err(Error::config("weak jammers need a JSR range reaching below the label threshold"));
        }
        if !(self.band_fraction > 0.0 && self.band_fraction <= 1.0) {
            return Err(Error::config(format!("jammer band fraction {} is empty or exceeds Nyquist", self.band_fraction)));
        }
        let (on_lo, on_hi) = self.onset_fraction_range;
        if !(0.0 <= on_lo && on_lo <= on_hi && on_hi < 1.0) {
            return Err(Error::config(format!("onset range [{on_lo}, {on_hi}) not inside [0, 1)")));
        }
        self.ofdm.validate()?;
        let r = &self.raster;
        if r.raster_height == 0 || r.raster_width == 0 || r.crop_to == 0 || r.crop_to > r.resize_to {
            return Err(Error::config(format!("raster profile {r:?} is inconsistent")));
        }
        Ok(())
    }

    fn band_hz(&self) -> f64 {
        self.band_fraction * self.sample_rate_hz / 2.0
    }
}

/// A generated corpus held in memory: the manifest plus the raw grid of every
/// record, in record order.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub manifest: DatasetManifest,
    pub grids: Vec<FeatureGrid>,
}

/// Signal and parameters of one example before rasterization.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthesizedExample {
    pub waveform: SampleBuffer,
    pub jammer: Option<JammerSpec>,
    pub jsr_db: Option<f64>,
    pub snr_db: f64,
    pub slot_duration_s: f64,
    pub onset_s: Option<f64>,
}

/// Draws a random jammer of `kind` for a slot of `slot_s` seconds.
pub fn random_jammer(cfg: &GenerationConfig, kind: JammerKind, slot_s: f64, seed: u64) -> Result<JammerSpec> {
    let mut r = rng::seeded(seed);
    let fs = cfg.sample_rate_hz;
    let band = cfg.band_hz();
    let phase = |r: &mut rng::Rng| r.random_range(0.0..TAU);
    Ok(match kind {
        JammerKind::None => return Err(Error::config("no jammer to draw for kind 'none'")),
        JammerKind::SingleTone => JammerSpec::SingleTone(SingleToneParams {
            power_j: 1.0,
            freq_hz: r.random_range(0.02 * fs..=band.max(0.02 * fs)),
            phase_rad: phase(&mut r),
        }),
        JammerKind::MultiTone => {
            let n = r.random_range(2..=4);
            let tones = (0..n)
                .map(|_| Tone { power_j: 1.0, freq_hz: r.random_range(-band..=band), phase_rad: phase(&mut r) })
                .collect();
            JammerSpec::MultiTone(MultiToneParams { tones })
        }
        JammerKind::Chirp => {
            let f0 = r.random_range(-band..=0.0);
            let f1 = r.random_range(0.0..=band);
            JammerSpec::Chirp(ChirpParams {
                amplitude: 1.0,
                f0_hz: f0,
                slope_hz_per_s: (f1 - f0) / slot_s,
                phase_rad: phase(&mut r),
                duration_s: slot_s,
            })
        }
        JammerKind::Sawtooth => {
            let period = slot_s / f64::from(r.random_range(2u32..=8));
            let span = r.random_range(0.25 * band..=band);
            JammerSpec::Sawtooth(SawtoothSweepParams {
                amplitude_uj: 1.0,
                carrier_hz: r.random_range(-band..=band - span),
                sweep_slope_hz_per_s: span / period,
                sweep_period_s: period,
                envelope_mode: cfg.sawtooth_envelope,
                init_phase_rad: phase(&mut r),
            })
        }
        JammerKind::Broadband => {
            let width = r.random_range(0.1 * band..=band);
            let center = r.random_range(-band + width / 2.0..=band - width / 2.0);
            JammerSpec::Broadband(BroadbandParams {
                jam_center_hz: center,
                jam_bandwidth_hz: width,
                channel_bandwidth_hz: cfg.ofdm.occupied_fraction * fs,
                comm_center_hz: 0.0,
            })
        }
    })
}

/// Builds one example: OFDM slot, optional jammer switched on at a random
/// onset, calibrated JSR and SNR.
pub fn synthesize_example(
    cfg: &GenerationConfig,
    jammer_kind: JammerKind,
    jsr_range_db: (f64, f64),
    seed: u64,
) -> Result<SynthesizedExample> {
    let mut r = rng::seeded(rng::derive(seed, 0));
    let fs = cfg.sample_rate_hz;
    let slot_s = *cfg.slot_durations_s.choose(&mut r).expect("validated non-empty");
    let snr_db = r.random_range(cfg.snr_range_db.0..=cfg.snr_range_db.1);
    let signal = gen_ofdm(&cfg.ofdm, fs, slot_s, rng::derive(seed, 1))?;
    let n = signal.len();
    let noise_seed = rng::derive(seed, 3);

    if jammer_kind == JammerKind::None {
        let waveform = mix(&signal, None, 0.0, snr_db, &SlotMask::all_active(&signal, slot_s)?, noise_seed)?;
        return Ok(SynthesizedExample { waveform, jammer: None, jsr_db: None, snr_db, slot_duration_s: slot_s, onset_s: None });
    }

    let (lo, hi) = jsr_range_db;
    let jsr_db = if lo < hi { r.random_range(lo..hi) } else { lo };
    let (on_lo, on_hi) = cfg.onset_fraction_range;
    let onset_frac = if on_lo < on_hi { r.random_range(on_lo..on_hi) } else { on_lo };
    let onset_n = ((onset_frac * n as f64).floor() as usize).min(n - 1);
    let spec = random_jammer(cfg, jammer_kind, slot_s, rng::derive(seed, 2))?;
    let jammer = spec.generate(fs, slot_s, rng::derive(seed, 4))?;
    // One mask slot per sample, so the onset has sample resolution.
    let mask = SlotMask::new((0..n).map(|i| i >= onset_n).collect(), 1.0 / fs)?;
    let waveform = mix(&signal, Some(&jammer), jsr_db, snr_db, &mask, noise_seed)?;
    Ok(SynthesizedExample {
        waveform,
        jammer: Some(spec),
        jsr_db: Some(jsr_db),
        snr_db,
        slot_duration_s: slot_s,
        onset_s: Some(onset_n as f64 / fs),
    })
}

pub fn record_id(index: usize) -> String {
    format!("ex{index:06}")
}

/// Plans labels, jammer kinds and splits, then synthesizes and renders every
/// example. Fully determined by `(cfg, master_seed)`.
pub fn build_dataset(cfg: &GenerationConfig, master_seed: u64) -> Result<Dataset> {
    cfg.validate()?;
    let n = cfg.count;
    let n_pos = n / 2;
    let n_neg = n - n_pos;

    // Plan: positives first in index order, then negatives; each class is
    // shuffled independently before taking the train share.
    let mut plan_rng = rng::seeded(rng::derive(master_seed, rng::hash_str("plan")));
    let mut split = vec![Split::Test; n];
    for (offset, size) in [(0, n_pos), (n_pos, n_neg)] {
        let mut idx: Vec<usize> = (offset..offset + size).collect();
        idx.shuffle(&mut plan_rng);
        let n_train = (size as f64 * cfg.train_fraction).round() as usize;
        for &i in &idx[..n_train] {
            split[i] = Split::Train;
        }
    }
    let n_weak = (n_neg as f64 * cfg.weak_jammer_fraction).round() as usize;

    let mut records = Vec::with_capacity(n);
    let mut grids = Vec::with_capacity(n);
    for i in 0..n {
        let id = record_id(i);
        let seed = rng::derive(master_seed, rng::hash_str(&id));
        let (kind, jsr_range) = if i < n_pos {
            (cfg.jammers[i % cfg.jammers.len()], (cfg.label_threshold_db, cfg.jsr_range_db.1))
        } else if i - n_pos < n_weak {
            let k = cfg.jammers[(i - n_pos) % cfg.jammers.len()];
            (k, (cfg.jsr_range_db.0, cfg.label_threshold_db))
        } else {
            (JammerKind::None, (0.0, 0.0))
        };
        let ex = synthesize_example(cfg, kind, jsr_range, seed)?;
        let grid = cfg.raster.render(&ex.waveform)?;
        let label = label_example(kind, ex.jsr_db, cfg.label_threshold_db);
        debug_assert_eq!(label == 1, i < n_pos);
        records.push(ExampleRecord {
            grid_path: format!("grids/{id}.jgrd"),
            id,
            label,
            jammer_kind: kind,
            jsr_db: ex.jsr_db,
            snr_db: ex.snr_db,
            slot_duration_s: ex.slot_duration_s,
            onset_s: ex.onset_s,
            seed,
            split: split[i],
            jammer: ex.jammer,
        });
        grids.push(grid);
    }

    let mut acc = StatsAccumulator::default();
    for (rec, g) in records.iter().zip(&grids) {
        if rec.split == Split::Train {
            acc.push(g)?;
        }
    }
    let manifest = DatasetManifest {
        version: MANIFEST_VERSION,
        master_seed,
        generation_config: cfg.clone(),
        norm_stats: acc.finish()?,
        records,
    };
    Ok(Dataset { manifest, grids })
}

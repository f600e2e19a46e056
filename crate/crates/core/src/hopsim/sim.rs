use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{choose_channel, indices, ChannelPlan, HopPolicyConfig, JammerProcess};
use crate::dataset::{synthesize_example, GenerationConfig};
use crate::detector::DetectorModel;
use crate::error::{Error, Result};
use crate::raster::{normalize, NormStats};
use crate::rng;
use crate::synth::JammerKind;

/// Classifies every channel's slot waveform with a trained detector.
#[derive(Debug, Clone)]
pub struct ModelPredictor {
    model: DetectorModel<f32>,
    generation: GenerationConfig,
    norm_stats: NormStats,
    threshold: f64,
}

impl ModelPredictor {
    /// `generation` fixes how each channel's slot is synthesized and
    /// rendered; `norm_stats` must be the statistics the model was trained
    /// with.
    pub fn new(
        model: DetectorModel<f32>,
        generation: GenerationConfig,
        norm_stats: NormStats,
        threshold: f64,
    ) -> Result<Self> {
        generation.validate()?;
        norm_stats.validate()?;
        let rendered = generation.raster.output_dims();
        let s = model.spec();
        let expected = (s.input_channels, s.input_height, s.input_width);
        if rendered != expected {
            return Err(Error::config(format!(
                "slot rasters are {rendered:?} but the model expects {expected:?}"
            )));
        }
        if norm_stats.mean.len() != s.input_channels {
            return Err(Error::config(format!(
                "normalization stats cover {} channels, model takes {}",
                norm_stats.mean.len(),
                s.input_channels
            )));
        }
        if !(0.0..=1.0).contains(&threshold) {
            return Err(Error::config(format!("decision threshold {threshold} outside [0, 1]")));
        }
        Ok(ModelPredictor { model, generation, norm_stats, threshold })
    }

    fn predict(&self, process: &JammerProcess, truth: &[bool], slot: usize, seed: u64) -> Result<Vec<bool>> {
        let g = &self.generation;
        let slot_seed = rng::derive(seed, slot as u64);
        let mut grids = Vec::with_capacity(truth.len());
        for (c, &jammed) in truth.iter().enumerate() {
            let kind = match (jammed, process) {
                (false, _) => JammerKind::None,
                (true, JammerProcess::Broadband { .. }) => JammerKind::Broadband,
                (true, _) => g.jammers[(slot + c) % g.jammers.len()],
            };
            let jsr = (g.label_threshold_db, g.jsr_range_db.1);
            let ex = synthesize_example(g, kind, jsr, rng::derive(slot_seed, c as u64))?;
            grids.push(normalize(&g.raster.render(&ex.waveform)?, &self.norm_stats)?);
        }
        let refs: Vec<_> = grids.iter().collect();
        Ok(self.model.predict_batch(&refs)?.into_iter().map(|p| p >= self.threshold).collect())
    }
}

#[derive(Debug, Clone)]
pub enum PredictionSource {
    /// Sees the true jammed set.
    Oracle,
    /// Never predicts a jammer.
    AlwaysClear,
    /// Marks each channel jammed with probability `p_jammed`.
    Random { p_jammed: f64, seed: u64 },
    TrainedModel(Box<ModelPredictor>),
}

impl PredictionSource {
    pub fn name(&self) -> &'static str {
        match self {
            PredictionSource::Oracle => "oracle",
            PredictionSource::AlwaysClear => "always_clear",
            PredictionSource::Random { .. } => "random",
            PredictionSource::TrainedModel(_) => "trained_model",
        }
    }

    fn predict(&self, process: &JammerProcess, truth: &[bool], slot: usize, seed: u64) -> Result<Vec<bool>> {
        Ok(match self {
            PredictionSource::Oracle => truth.to_vec(),
            PredictionSource::AlwaysClear => vec![false; truth.len()],
            PredictionSource::Random { p_jammed, seed } => {
                let mut r = rng::seeded(rng::derive(*seed, slot as u64));
                truth.iter().map(|_| r.random_bool(*p_jammed)).collect()
            }
            PredictionSource::TrainedModel(m) => m.predict(process, truth, slot, seed)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotRecord {
    pub slot: usize,
    pub previous_channel: usize,
    pub channel: usize,
    pub predicted_jammed: Vec<usize>,
    pub true_jammed: Vec<usize>,
    pub delivered: bool,
    pub hopped: bool,
}

/// Per (slot, channel) agreement between predictions and the true occupancy.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PredictionQuality {
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub true_negatives: usize,
    pub precision: f64,
    pub recall: f64,
}

impl PredictionQuality {
    fn push(&mut self, predicted: &[bool], truth: &[bool]) {
        for (&p, &t) in predicted.iter().zip(truth) {
            match (p, t) {
                (true, true) => self.true_positives += 1,
                (true, false) => self.false_positives += 1,
                (false, true) => self.false_negatives += 1,
                (false, false) => self.true_negatives += 1,
            }
        }
    }

    fn finish(&mut self) {
        let ratio = |a: usize, b: usize| if a + b == 0 { 0.0 } else { a as f64 / (a + b) as f64 };
        self.precision = ratio(self.true_positives, self.false_positives);
        self.recall = ratio(self.true_positives, self.false_negatives);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSummary {
    pub source: String,
    pub jammer: String,
    pub n_channels: usize,
    pub shift_limit_channels: Option<usize>,
    pub seed: u64,
    pub n_slots: usize,
    pub delivered: usize,
    pub delivery_ratio: f64,
    pub hop_count: usize,
    pub max_hop_distance: usize,
    pub prediction: PredictionQuality,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub slots: Vec<SlotRecord>,
    pub summary: SimulationSummary,
}

impl SimulationReport {
    pub fn delivery_ratio(&self) -> f64 {
        self.summary.delivery_ratio
    }

    /// One JSON object per slot.
    pub fn slots_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for s in &self.slots {
            out.push_str(&serde_json::to_string(s)?);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn summary_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.summary)?)
    }
}

/// Replays `n_slots` slots: predict, choose a channel, score against the
/// true jammed set. The transmitter starts on `policy.initial_channel`.
pub fn run_simulation(
    plan: &ChannelPlan,
    process: &JammerProcess,
    source: &PredictionSource,
    policy: &HopPolicyConfig,
    n_slots: usize,
    seed: u64,
) -> Result<SimulationReport> {
    plan.validate()?;
    process.validate(plan)?;
    policy.validate(plan)?;
    if n_slots == 0 {
        return Err(Error::config("simulation needs at least one slot"));
    }
    if let PredictionSource::Random { p_jammed, .. } = source {
        if !(0.0..=1.0).contains(p_jammed) {
            return Err(Error::config(format!("random prediction rate {p_jammed} outside [0, 1]")));
        }
    }

    let mut current = policy.initial_channel;
    let mut slots = Vec::with_capacity(n_slots);
    let mut quality = PredictionQuality::default();
    let (mut delivered, mut hops, mut max_hop) = (0, 0, 0);
    for slot in 0..n_slots {
        let truth = process.jammed_mask(plan, slot);
        let predicted = source.predict(process, &truth, slot, seed)?;
        quality.push(&predicted, &truth);
        let next = choose_channel(current, &predicted, policy);
        let ok = !truth[next];
        delivered += usize::from(ok);
        if next != current {
            hops += 1;
            max_hop = max_hop.max(next.abs_diff(current));
        }
        slots.push(SlotRecord {
            slot,
            previous_channel: current,
            channel: next,
            predicted_jammed: indices(&predicted),
            true_jammed: indices(&truth),
            delivered: ok,
            hopped: next != current,
        });
        current = next;
    }
    quality.finish();
    Ok(SimulationReport {
        slots,
        summary: SimulationSummary {
            source: source.name().into(),
            jammer: process.name().into(),
            n_channels: plan.n_channels,
            shift_limit_channels: policy.shift_limit_channels,
            seed,
            n_slots,
            delivered,
            delivery_ratio: delivered as f64 / n_slots as f64,
            hop_count: hops,
            max_hop_distance: max_hop,
            prediction: quality,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oracle_evades_static_jammer() {
        let plan = ChannelPlan::default();
        let p = JammerProcess::StaticBand { channels: vec![0, 3] };
        let r = run_simulation(&plan, &p, &PredictionSource::Oracle, &HopPolicyConfig::default(), 50, 1).unwrap();
        assert_eq!(r.delivery_ratio(), 1.0);
        assert_eq!(r.summary.hop_count, 1);
        assert_eq!(r.summary.prediction.precision, 1.0);
    }

    #[test]
    fn full_broadband_blocks_everything() {
        let plan = ChannelPlan::default();
        let p = JammerProcess::Broadband { center_hz: plan.center_hz(8), width_hz: 100.0 * plan.channel_bandwidth_hz };
        let r = run_simulation(&plan, &p, &PredictionSource::Oracle, &HopPolicyConfig::default(), 20, 1).unwrap();
        assert_eq!(r.delivery_ratio(), 0.0);
        assert_eq!(r.summary.hop_count, 0);
    }

    #[test]
    fn report_exports_one_line_per_slot() {
        let plan = ChannelPlan::default();
        let p = JammerProcess::Sweep { period_slots: 8, width: 2 };
        let r = run_simulation(&plan, &p, &PredictionSource::AlwaysClear, &HopPolicyConfig::default(), 12, 1).unwrap();
        assert_eq!(r.slots_jsonl().unwrap().lines().count(), 12);
        assert!(r.summary_json().unwrap().contains("delivery_ratio"));
    }

    #[test]
    fn rejects_bad_inputs() {
        let plan = ChannelPlan::default();
        let p = JammerProcess::StaticBand { channels: vec![16] };
        let src = PredictionSource::Oracle;
        let pol = HopPolicyConfig::default();
        assert!(matches!(run_simulation(&plan, &p, &src, &pol, 5, 1), Err(Error::Config(_))));
        let ok = JammerProcess::StaticBand { channels: vec![1] };
        assert!(run_simulation(&plan, &ok, &src, &pol, 0, 1).is_err());
        let bad_pol = HopPolicyConfig { shift_limit_channels: Some(0), ..pol };
        assert!(run_simulation(&plan, &ok, &src, &bad_pol, 5, 1).is_err());
    }
}

//! Slot-by-slot frequency-hopping simulator. A prediction source marks
//! channels it believes are jammed; the transmitter hops away within a
//! bounded frequency-shift reach.

mod sim;

pub use sim::{
    run_simulation, ModelPredictor, PredictionQuality, PredictionSource, SimulationReport,
    SimulationSummary, SlotRecord,
};

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChannelPlan {
    pub n_channels: usize,
    pub channel_bandwidth_hz: f64,
    /// Center frequency of channel 0; channel `i` sits `i` bandwidths above.
    pub base_freq_hz: f64,
}

impl Default for ChannelPlan {
    fn default() -> Self {
        ChannelPlan { n_channels: 16, channel_bandwidth_hz: 2e6, base_freq_hz: 2.405e9 }
    }
}

impl ChannelPlan {
    pub fn validate(&self) -> Result<()> {
        if self.n_channels < 2 {
            return Err(Error::config(format!("need at least 2 channels, got {}", self.n_channels)));
        }
        if !(self.channel_bandwidth_hz > 0.0 && self.channel_bandwidth_hz.is_finite()) {
            return Err(Error::config("channel bandwidth must be positive"));
        }
        if !self.base_freq_hz.is_finite() {
            return Err(Error::config("base frequency must be finite"));
        }
        Ok(())
    }

    pub fn center_hz(&self, channel: usize) -> f64 {
        self.base_freq_hz + channel as f64 * self.channel_bandwidth_hz
    }
}

/// Which channels an adversary occupies in each slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum JammerProcess {
    /// The same channels every slot.
    StaticBand { channels: Vec<usize> },
    /// Slot `s` jams `floor(s * n / period_slots) mod n` and the next
    /// `width - 1` channels.
    Sweep {
        period_slots: usize,
        #[serde(default = "one")]
        width: usize,
    },
    /// `count` distinct channels drawn afresh each slot.
    RandomHopper {
        seed: u64,
        #[serde(default = "one")]
        count: usize,
    },
    /// Every channel whose center lies in `[center - width/2, center + width/2]`.
    Broadband { center_hz: f64, width_hz: f64 },
}

fn one() -> usize {
    1
}

impl JammerProcess {
    pub fn name(&self) -> &'static str {
        match self {
            JammerProcess::StaticBand { .. } => "static_band",
            JammerProcess::Sweep { .. } => "sweep",
            JammerProcess::RandomHopper { .. } => "random_hopper",
            JammerProcess::Broadband { .. } => "broadband",
        }
    }

    pub fn validate(&self, plan: &ChannelPlan) -> Result<()> {
        let n = plan.n_channels;
        match self {
            JammerProcess::StaticBand { channels } => {
                if let Some(c) = channels.iter().find(|&&c| c >= n) {
                    return Err(Error::config(format!("static channel {c} outside 0..{n}")));
                }
            }
            JammerProcess::Sweep { period_slots, width } => {
                if *period_slots == 0 || *width == 0 || *width > n {
                    return Err(Error::config("sweep needs a positive period and a width in 1..=n_channels"));
                }
            }
            JammerProcess::RandomHopper { count, .. } => {
                if *count > n {
                    return Err(Error::config(format!("cannot hop over {count} of {n} channels")));
                }
            }
            JammerProcess::Broadband { center_hz, width_hz } => {
                if !(center_hz.is_finite() && *width_hz >= 0.0 && width_hz.is_finite()) {
                    return Err(Error::config("broadband footprint must be finite with non-negative width"));
                }
            }
        }
        Ok(())
    }

    /// Jammed flag per channel in `slot`.
    pub fn jammed_mask(&self, plan: &ChannelPlan, slot: usize) -> Vec<bool> {
        let n = plan.n_channels;
        let mut mask = vec![false; n];
        match self {
            JammerProcess::StaticBand { channels } => {
                for &c in channels.iter().filter(|&&c| c < n) {
                    mask[c] = true;
                }
            }
            JammerProcess::Sweep { period_slots, width } => {
                let start = (slot * n / (*period_slots).max(1)) % n;
                for k in 0..(*width).min(n) {
                    mask[(start + k) % n] = true;
                }
            }
            JammerProcess::RandomHopper { seed, count } => {
                let mut r = rng::seeded(rng::derive(*seed, slot as u64));
                for c in sample(&mut r, n, (*count).min(n)) {
                    mask[c] = true;
                }
            }
            JammerProcess::Broadband { center_hz, width_hz } => {
                let (lo, hi) = (center_hz - width_hz / 2.0, center_hz + width_hz / 2.0);
                for (c, m) in mask.iter_mut().enumerate() {
                    let f = plan.center_hz(c);
                    *m = lo <= f && f <= hi;
                }
            }
        }
        mask
    }

    /// Jammed channel indices in `slot`, ascending.
    pub fn jammed_channels(&self, plan: &ChannelPlan, slot: usize) -> Vec<usize> {
        indices(&self.jammed_mask(plan, slot))
    }
}

pub(crate) fn indices(mask: &[bool]) -> Vec<usize> {
    mask.iter().enumerate().filter(|(_, &m)| m).map(|(i, _)| i).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct HopPolicyConfig {
    /// Largest allowed `|new - old|` channel distance; `None` is unlimited.
    pub shift_limit_channels: Option<usize>,
    pub stay_if_clear: bool,
    pub initial_channel: usize,
}

impl Default for HopPolicyConfig {
    fn default() -> Self {
        HopPolicyConfig { shift_limit_channels: Some(4), stay_if_clear: true, initial_channel: 0 }
    }
}

impl HopPolicyConfig {
    pub fn unlimited() -> Self {
        HopPolicyConfig { shift_limit_channels: None, ..Self::default() }
    }

    pub fn validate(&self, plan: &ChannelPlan) -> Result<()> {
        if self.shift_limit_channels == Some(0) {
            return Err(Error::config("shift limit must be at least 1 channel"));
        }
        if self.initial_channel >= plan.n_channels {
            return Err(Error::config(format!("initial channel {} outside the plan", self.initial_channel)));
        }
        Ok(())
    }

    pub fn reachable(&self, from: usize, to: usize) -> bool {
        self.shift_limit_channels.is_none_or(|l| from.abs_diff(to) <= l)
    }
}

/// Next channel given per-channel jam predictions (`true` = predicted jammed).
///
/// Stays on a clear current channel when `stay_if_clear`; otherwise takes the
/// lowest-index predicted-clear channel within reach; with nothing clear in
/// reach it keeps the current channel.
pub fn choose_channel(current: usize, predicted_jammed: &[bool], cfg: &HopPolicyConfig) -> usize {
    if cfg.stay_if_clear && !predicted_jammed[current] {
        return current;
    }
    (0..predicted_jammed.len())
        .find(|&c| !predicted_jammed[c] && cfg.reachable(current, c))
        .unwrap_or(current)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_arithmetic() {
        let plan = ChannelPlan::default();
        let p = JammerProcess::Sweep { period_slots: 8, width: 1 };
        assert_eq!(p.jammed_channels(&plan, 5), vec![10]);
        assert_eq!(p.jammed_channels(&plan, 8), vec![0]);
        let wide = JammerProcess::Sweep { period_slots: 8, width: 3 };
        assert_eq!(wide.jammed_channels(&plan, 7), vec![0, 14, 15]);
    }

    #[test]
    fn static_and_hopper() {
        let plan = ChannelPlan::default();
        let s = JammerProcess::StaticBand { channels: vec![3, 4] };
        assert_eq!(s.jammed_channels(&plan, 0), vec![3, 4]);
        assert_eq!(s.jammed_channels(&plan, 999), vec![3, 4]);
        let h = JammerProcess::RandomHopper { seed: 4, count: 3 };
        for slot in 0..20 {
            let a = h.jammed_channels(&plan, slot);
            assert_eq!(a.len(), 3);
            assert_eq!(a, h.jammed_channels(&plan, slot));
        }
    }

    #[test]
    fn broadband_containment_is_edge_inclusive() {
        let plan = ChannelPlan { n_channels: 16, channel_bandwidth_hz: 1.0, base_freq_hz: 0.0 };
        let b = JammerProcess::Broadband { center_hz: 7.5, width_hz: 4.0 };
        assert_eq!(b.jammed_channels(&plan, 0), vec![6, 7, 8, 9]);
        let edge = JammerProcess::Broadband { center_hz: 7.0, width_hz: 2.0 };
        assert_eq!(edge.jammed_channels(&plan, 0), vec![6, 7, 8]);
    }

    #[test]
    fn policy_examples() {
        let cfg = HopPolicyConfig::default();
        let mut pred = vec![true; 16];
        pred[5] = false;
        assert_eq!(choose_channel(5, &pred, &cfg), 5);

        let mut pred = vec![true; 16];
        pred[2] = false;
        pred[9] = false;
        assert_eq!(choose_channel(5, &pred, &cfg), 2);

        assert_eq!(choose_channel(5, &[true; 16], &cfg), 5);

        let mut far = vec![true; 16];
        far[15] = false;
        assert_eq!(choose_channel(5, &far, &cfg), 5);
        assert_eq!(choose_channel(5, &far, &HopPolicyConfig::unlimited()), 15);
    }

    #[test]
    fn no_stay_preference_takes_lowest_clear() {
        let cfg = HopPolicyConfig { stay_if_clear: false, ..HopPolicyConfig::default() };
        let mut pred = vec![false; 16];
        pred[0] = true;
        assert_eq!(choose_channel(3, &pred, &cfg), 1);
    }
}

//! QPSK-OFDM traffic generator.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use rand::Rng;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::buffer::{sample_count, SampleBuffer};
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SubcarrierMod {
    #[default]
    Qpsk,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OfdmConfig {
    pub n_subcarriers: usize,
    pub cp_len: usize,
    #[serde(default)]
    pub subcarrier_mod: SubcarrierMod,
    /// Frame length used by [`gen_ofdm_frame`]; [`gen_ofdm`] emits as many
    /// symbols as the requested duration needs.
    pub n_symbols: usize,
    pub occupied_fraction: f64,
}

impl Default for OfdmConfig {
    fn default() -> Self {
        OfdmConfig {
            n_subcarriers: 64,
            cp_len: 16,
            subcarrier_mod: SubcarrierMod::Qpsk,
            n_symbols: 16,
            occupied_fraction: 0.8,
        }
    }
}

impl OfdmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_subcarriers == 0 || !self.n_subcarriers.is_power_of_two() {
            return Err(Error::config(format!(
                "n_subcarriers must be a power of two, got {}",
                self.n_subcarriers
            )));
        }
        if self.cp_len >= self.n_subcarriers {
            return Err(Error::config(format!(
                "cp_len {} must be smaller than n_subcarriers {}",
                self.cp_len, self.n_subcarriers
            )));
        }
        if self.n_symbols == 0 {
            return Err(Error::config("n_symbols must be positive"));
        }
        if !(self.occupied_fraction > 0.0 && self.occupied_fraction <= 1.0) {
            return Err(Error::config(format!(
                "occupied_fraction must lie in (0, 1], got {}",
                self.occupied_fraction
            )));
        }
        Ok(())
    }

    pub fn symbol_len(&self) -> usize {
        self.n_subcarriers + self.cp_len
    }

    /// FFT bin indices carrying data: a contiguous block centered on DC.
    pub fn active_bins(&self) -> Vec<usize> {
        let n = self.n_subcarriers;
        let k = ((self.occupied_fraction * n as f64).round() as usize).clamp(1, n);
        let lo = -((k / 2) as isize);
        (0..k as isize)
            .map(|i| (lo + i).rem_euclid(n as isize) as usize)
            .collect()
    }
}

fn qpsk(bits: u8) -> Complex64 {
    let re = if bits & 1 == 0 { FRAC_1_SQRT_2 } else { -FRAC_1_SQRT_2 };
    let im = if bits & 2 == 0 { FRAC_1_SQRT_2 } else { -FRAC_1_SQRT_2 };
    Complex64::new(re, im)
}

fn ofdm_samples(cfg: &OfdmConfig, n_symbols: usize, seed: u64) -> Vec<Complex64> {
    let n = cfg.n_subcarriers;
    let active = cfg.active_bins();
    let ifft = FftPlanner::<f64>::new().plan_fft_inverse(n);
    let mut r = rng::seeded(seed);
    let mut out = Vec::with_capacity(n_symbols * cfg.symbol_len());
    let mut freq = vec![Complex64::new(0.0, 0.0); n];
    for _ in 0..n_symbols {
        freq.iter_mut().for_each(|x| *x = Complex64::new(0.0, 0.0));
        for &k in &active {
            freq[k] = qpsk(r.random_range(0..4u8));
        }
        let mut time = freq.clone();
        ifft.process(&mut time);
        out.extend_from_slice(&time[n - cfg.cp_len..]);
        out.extend_from_slice(&time);
    }
    out
}

fn normalize_power(samples: &mut [Complex64]) {
    let p = samples.iter().map(|s| s.norm_sqr()).sum::<f64>() / samples.len() as f64;
    if p > 0.0 {
        let g = 1.0 / p.sqrt();
        samples.iter_mut().for_each(|s| *s *= g);
    }
}

/// `duration_s` of random QPSK-OFDM traffic, truncated mid-symbol if needed,
/// scaled to unit mean power.
pub fn gen_ofdm(
    cfg: &OfdmConfig,
    sample_rate_hz: f64,
    duration_s: f64,
    seed: u64,
) -> Result<SampleBuffer> {
    cfg.validate()?;
    let n = sample_count(sample_rate_hz, duration_s)?;
    let mut samples = ofdm_samples(cfg, n.div_ceil(cfg.symbol_len()), seed);
    samples.truncate(n);
    normalize_power(&mut samples);
    SampleBuffer::new(samples, sample_rate_hz)
}

/// Exactly `cfg.n_symbols` whole symbols (cyclic prefix included).
pub fn gen_ofdm_frame(cfg: &OfdmConfig, sample_rate_hz: f64, seed: u64) -> Result<SampleBuffer> {
    cfg.validate()?;
    let mut samples = ofdm_samples(cfg, cfg.n_symbols, seed);
    normalize_power(&mut samples);
    SampleBuffer::new(samples, sample_rate_hz)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_configs() {
        let base = OfdmConfig::default();
        for cfg in [
            OfdmConfig { cp_len: 64, ..base },
            OfdmConfig { cp_len: 80, ..base },
            OfdmConfig { n_subcarriers: 48, ..base },
            OfdmConfig { occupied_fraction: 0.0, ..base },
            OfdmConfig { occupied_fraction: 1.5, ..base },
            OfdmConfig { n_symbols: 0, ..base },
        ] {
            assert!(matches!(gen_ofdm(&cfg, 1e6, 1e-3, 1), Err(Error::Config(_))), "{cfg:?}");
        }
    }

    #[test]
    fn length_and_power() {
        let b = gen_ofdm(&OfdmConfig::default(), 1e6, 0.001, 7).unwrap();
        assert_eq!(b.len(), 1000);
        assert!((b.mean_power() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn deterministic_per_seed() {
        let cfg = OfdmConfig::default();
        assert_eq!(gen_ofdm(&cfg, 1e6, 1e-3, 7).unwrap(), gen_ofdm(&cfg, 1e6, 1e-3, 7).unwrap());
        assert_ne!(gen_ofdm(&cfg, 1e6, 1e-3, 7).unwrap(), gen_ofdm(&cfg, 1e6, 1e-3, 8).unwrap());
    }

    #[test]
    fn cyclic_prefix_copies_symbol_tail() {
        let cfg = OfdmConfig { n_symbols: 3, ..OfdmConfig::default() };
        let b = gen_ofdm_frame(&cfg, 1e6, 2).unwrap();
        assert_eq!(b.len(), 3 * 80);
        for s in 0..3 {
            let sym = &b.samples[s * 80..(s + 1) * 80];
            for i in 0..16 {
                assert!((sym[i] - sym[64 + i]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn active_bins_centered() {
        let cfg = OfdmConfig { occupied_fraction: 0.5, ..OfdmConfig::default() };
        let bins = cfg.active_bins();
        assert_eq!(bins.len(), 32);
        assert!(bins.contains(&0));
        assert!(bins.contains(&15) && bins.contains(&48) && !bins.contains(&16) && !bins.contains(&47));
        let full = OfdmConfig { occupied_fraction: 1.0, ..cfg };
        assert_eq!(full.active_bins().len(), 64);
    }
}

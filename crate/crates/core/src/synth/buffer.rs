use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

pub const JSIQ_MAGIC: &[u8; 4] = b"JSIQ";
pub const JSIQ_VERSION: u16 = 1;
const JSIQ_HEADER_LEN: usize = 16;

/// Complex baseband samples at a fixed sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBuffer {
    pub samples: Vec<Complex64>,
    pub sample_rate_hz: f64,
    pub t0_s: f64,
}

/// Number of samples covering `duration_s` at `sample_rate_hz`.
pub fn sample_count(sample_rate_hz: f64, duration_s: f64) -> Result<usize> {
    if !(sample_rate_hz > 0.0) || !sample_rate_hz.is_finite() {
        return Err(Error::config(format!(
            "sample rate must be positive, got {sample_rate_hz}"
        )));
    }
    if !(duration_s > 0.0) || !duration_s.is_finite() {
        return Err(Error::config(format!(
            "duration must be positive, got {duration_s}"
        )));
    }
    let n = (duration_s * sample_rate_hz).round();
    if n < 1.0 {
        return Err(Error::config(format!(
            "duration {duration_s} s is shorter than one sample at {sample_rate_hz} Hz"
        )));
    }
    Ok(n as usize)
}

impl SampleBuffer {
    pub fn new(samples: Vec<Complex64>, sample_rate_hz: f64) -> Result<Self> {
        if !(sample_rate_hz > 0.0) || !sample_rate_hz.is_finite() {
            return Err(Error::config(format!(
                "sample rate must be positive, got {sample_rate_hz}"
            )));
        }
        Ok(SampleBuffer {
            samples,
            sample_rate_hz,
            t0_s: 0.0,
        })
    }

    pub fn zeros(len: usize, sample_rate_hz: f64) -> Result<Self> {
        Self::new(vec![Complex64::new(0.0, 0.0); len], sample_rate_hz)
    }

    /// Builds a buffer by evaluating `f` at every sample time `t_n = n / fs`.
    pub(crate) fn from_fn(
        sample_rate_hz: f64,
        duration_s: f64,
        mut f: impl FnMut(usize, f64) -> Complex64,
    ) -> Result<Self> {
        let n = sample_count(sample_rate_hz, duration_s)?;
        let samples = (0..n)
            .map(|i| f(i, i as f64 / sample_rate_hz))
            .collect();
        Self::new(samples, sample_rate_hz)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz
    }

    pub fn time_at(&self, n: usize) -> f64 {
        self.t0_s + n as f64 / self.sample_rate_hz
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|s| s.norm_sqr()).sum()
    }

    /// Mean of |x|^2, zero for an empty buffer.
    pub fn mean_power(&self) -> f64 {
        if self.samples.is_empty() {
            0.0
        } else {
            self.energy() / self.samples.len() as f64
        }
    }

    pub fn scale(&mut self, gain: f64) {
        for s in &mut self.samples {
            *s *= gain;
        }
    }

    /// Unnormalized forward DFT of the whole buffer.
    pub fn spectrum(&self) -> Vec<Complex64> {
        let mut bins = self.samples.clone();
        if bins.is_empty() {
            return bins;
        }
        let fft = FftPlanner::<f64>::new().plan_fft_forward(bins.len());
        fft.process(&mut bins);
        bins
    }

    /// Two-sided power spectrum as (frequency Hz, |X_k|^2 / N^2) pairs, ordered
    /// from -fs/2 upward.
    pub fn power_spectrum(&self) -> Vec<(f64, f64)> {
        let n = self.samples.len();
        let bins = self.spectrum();
        let norm = (n * n) as f64;
        let mut out: Vec<(f64, f64)> = bins
            .iter()
            .enumerate()
            .map(|(k, x)| {
                let signed = if k < n.div_ceil(2) { k as f64 } else { k as f64 - n as f64 };
                (signed * self.sample_rate_hz / n as f64, x.norm_sqr() / norm)
            })
            .collect();
        out.sort_by(|a, b| a.0.total_cmp(&b.0));
        out
    }

    /// Serializes as the `JSIQ` format: 8-byte header (magic, version u16,
    /// reserved u16), sample rate as f64, then interleaved f32 I/Q, all
    /// little-endian.
    pub fn write_jsiq<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let mut bytes = Vec::with_capacity(JSIQ_HEADER_LEN + 8 * self.samples.len());
        bytes.extend_from_slice(JSIQ_MAGIC);
        bytes.extend_from_slice(&JSIQ_VERSION.to_le_bytes());
        bytes.extend_from_slice(&0u16.to_le_bytes());
        bytes.extend_from_slice(&self.sample_rate_hz.to_le_bytes());
        for s in &self.samples {
            bytes.extend_from_slice(&(s.re as f32).to_le_bytes());
            bytes.extend_from_slice(&(s.im as f32).to_le_bytes());
        }
        w.write_all(&bytes)
    }

    pub fn read_jsiq<R: Read>(mut r: R) -> Result<Self> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)
            .map_err(|e| Error::Format(format!("reading JSIQ stream: {e}")))?;
        Self::from_jsiq_bytes(&bytes)
    }

    pub fn from_jsiq_bytes(bytes: &[u8]) -> Result<Self> {
        let header = JsiqHeader::parse(bytes)?;
        let body = &bytes[JSIQ_HEADER_LEN..];
        if body.len() % 8 != 0 {
            return Err(Error::Format(format!(
                "JSIQ payload length {} is not a multiple of 8",
                body.len()
            )));
        }
        let samples = body
            .chunks_exact(8)
            .map(|c| {
                let re = f32::from_le_bytes(c[0..4].try_into().unwrap());
                let im = f32::from_le_bytes(c[4..8].try_into().unwrap());
                Complex64::new(f64::from(re), f64::from(im))
            })
            .collect();
        Self::new(samples, header.sample_rate_hz)
            .map_err(|e| Error::Format(format!("JSIQ header: {e}")))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut bytes = Vec::new();
        self.write_jsiq(&mut bytes).expect("writing to a Vec");
        fs::write(path, bytes).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_jsiq_bytes(&bytes)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JsiqHeader {
    pub version: u16,
    pub sample_rate_hz: f64,
    pub n_samples: usize,
}

impl JsiqHeader {
    pub fn parse(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < JSIQ_HEADER_LEN {
            return Err(Error::Format(format!(
                "JSIQ file too short ({} bytes)",
                bytes.len()
            )));
        }
        if &bytes[0..4] != JSIQ_MAGIC {
            return Err(Error::Format("bad JSIQ magic".into()));
        }
        let version = u16::from_le_bytes([bytes[4], bytes[5]]);
        if version != JSIQ_VERSION {
            return Err(Error::Format(format!("unsupported JSIQ version {version}")));
        }
        let sample_rate_hz = f64::from_le_bytes(bytes[8..16].try_into().unwrap());
        Ok(JsiqHeader {
            version,
            sample_rate_hz,
            n_samples: (bytes.len() - JSIQ_HEADER_LEN) / 8,
        })
    }
}

/// Sample-wise sum of two aligned buffers.
pub fn add(a: &SampleBuffer, b: &SampleBuffer) -> Result<SampleBuffer> {
    check_aligned(a, b)?;
    let samples = a.samples.iter().zip(&b.samples).map(|(x, y)| x + y).collect();
    Ok(SampleBuffer {
        samples,
        sample_rate_hz: a.sample_rate_hz,
        t0_s: a.t0_s,
    })
}

pub(crate) fn check_aligned(a: &SampleBuffer, b: &SampleBuffer) -> Result<()> {
    if a.sample_rate_hz != b.sample_rate_hz {
        return Err(Error::Alignment(format!(
            "sample rates differ: {} Hz vs {} Hz",
            a.sample_rate_hz, b.sample_rate_hz
        )));
    }
    if a.len() != b.len() {
        return Err(Error::Alignment(format!(
            "lengths differ: {} vs {} samples",
            a.len(),
            b.len()
        )));
    }
    Ok(())
}

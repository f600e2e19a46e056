use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const JGRD_MAGIC: &[u8; 4] = b"JGRD";
pub const JGRD_VERSION: u32 = 1;
const JGRD_HEADER_LEN: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormState {
    Raw,
    Normalized,
}

/// Channel-major `C x H x W` grid of `f32` values.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureGrid {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub values: Vec<f32>,
    pub norm_state: NormState,
}

impl FeatureGrid {
    pub fn filled(channels: usize, height: usize, width: usize, value: f32) -> Self {
        FeatureGrid {
            channels,
            height,
            width,
            values: vec![value; channels * height * width],
            norm_state: NormState::Raw,
        }
    }

    pub fn from_values(
        channels: usize,
        height: usize,
        width: usize,
        values: Vec<f32>,
    ) -> Result<Self> {
        if values.len() != channels * height * width {
            return Err(Error::Input(format!(
                "{} values do not fill a {channels}x{height}x{width} grid",
                values.len()
            )));
        }
        Ok(FeatureGrid {
            channels,
            height,
            width,
            values,
            norm_state: NormState::Raw,
        })
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.channels, self.height, self.width)
    }

    pub fn plane_len(&self) -> usize {
        self.height * self.width
    }

    pub fn plane(&self, c: usize) -> &[f32] {
        let n = self.plane_len();
        &self.values[c * n..(c + 1) * n]
    }

    pub fn get(&self, c: usize, y: usize, x: usize) -> f32 {
        self.values[(c * self.height + y) * self.width + x]
    }

    /// Per-channel (mean, population std) in double precision.
    pub fn channel_moments(&self) -> Vec<(f64, f64)> {
        (0..self.channels)
            .map(|c| {
                let p = self.plane(c);
                let n = p.len() as f64;
                let mean = p.iter().map(|&v| f64::from(v)).sum::<f64>() / n;
                let var = p.iter().map(|&v| (f64::from(v) - mean).powi(2)).sum::<f64>() / n;
                (mean, var.sqrt())
            })
            .collect()
    }

    pub fn to_jgrd_bytes(&self) -> Vec<u8> {
        let mut bytes = Vec::with_capacity(JGRD_HEADER_LEN + 4 * self.values.len());
        bytes.extend_from_slice(JGRD_MAGIC);
        for v in [JGRD_VERSION, self.channels as u32, self.height as u32, self.width as u32] {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        for v in &self.values {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        bytes
    }

    /// Parses a `JGRD` file. Grids are stored raw; the loaded state is always
    /// [`NormState::Raw`].
    pub fn from_jgrd_bytes(bytes: &[u8]) -> Result<Self> {
        let h = JgrdHeader::parse(bytes)?;
        let expected = JGRD_HEADER_LEN + 4 * h.channels * h.height * h.width;
        if bytes.len() != expected {
            return Err(Error::Format(format!(
                "JGRD payload is {} bytes, header implies {expected}",
                bytes.len()
            )));
        }
        let values = bytes[JGRD_HEADER_LEN..]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Self::from_values(h.channels, h.height, h.width, values)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_jgrd_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_jgrd_bytes(&bytes)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct JgrdHeader {
    pub version: u32,
    pub channels: usize,
    pub height: usize,
    pub width: usize,
}

impl JgrdHeader {
    pub fn parse(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < JGRD_HEADER_LEN {
            return Err(Error::Format(format!("JGRD file too short ({} bytes)", bytes.len())));
        }
        if &bytes[0..4] != JGRD_MAGIC {
            return Err(Error::Format("bad JGRD magic".into()));
        }
        let word = |i: usize| u32::from_le_bytes(bytes[4 + 4 * i..8 + 4 * i].try_into().unwrap());
        let version = word(0);
        if version != JGRD_VERSION {
            return Err(Error::Format(format!("unsupported JGRD version {version}")));
        }
        Ok(JgrdHeader {
            version,
            channels: word(1) as usize,
            height: word(2) as usize,
            width: word(3) as usize,
        })
    }
}

/// Per-channel standardization constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl NormStats {
    pub fn new(mean: Vec<f64>, std: Vec<f64>) -> Result<Self> {
        let s = NormStats { mean, std };
        s.validate()?;
        Ok(s)
    }

    pub fn identity(channels: usize) -> Self {
        NormStats {
            mean: vec![0.0; channels],
            std: vec![1.0; channels],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.mean.len() != self.std.len() {
            return Err(Error::Stats(format!(
                "{} means but {} stds",
                self.mean.len(),
                self.std.len()
            )));
        }
        if let Some((c, s)) = self.std.iter().enumerate().find(|(_, s)| !(**s > 0.0) || !s.is_finite()) {
            return Err(Error::Stats(format!("channel {c} std must be positive, got {s}")));
        }
        Ok(())
    }

    /// Stats of a single grid.
    pub fn of_grid(grid: &FeatureGrid) -> Result<Self> {
        let (mean, std) = grid.channel_moments().into_iter().unzip();
        Self::new(mean, std)
    }

    /// Pooled stats over a set of equally shaped grids.
    pub fn of_grids<'a>(grids: impl IntoIterator<Item = &'a FeatureGrid>) -> Result<Self> {
        let mut acc = StatsAccumulator::default();
        for g in grids {
            acc.push(g)?;
        }
        acc.finish()
    }
}

/// Streaming per-channel sum and sum of squares.
#[derive(Debug, Clone, Default)]
pub struct StatsAccumulator {
    sum: Vec<f64>,
    sum_sq: Vec<f64>,
    count: u64,
    dims: Option<(usize, usize, usize)>,
}

impl StatsAccumulator {
    pub fn push(&mut self, g: &FeatureGrid) -> Result<()> {
        match self.dims {
            None => {
                self.dims = Some(g.dims());
                self.sum = vec![0.0; g.channels];
                self.sum_sq = vec![0.0; g.channels];
            }
            Some(d) if d != g.dims() => {
                return Err(Error::Stats(format!("grid dims {:?} differ from {:?}", g.dims(), d)))
            }
            _ => {}
        }
        for c in 0..g.channels {
            for &v in g.plane(c) {
                let v = f64::from(v);
                self.sum[c] += v;
                self.sum_sq[c] += v * v;
            }
        }
        self.count += g.plane_len() as u64;
        Ok(())
    }

    pub fn finish(self) -> Result<NormStats> {
        if self.count == 0 {
            return Err(Error::Stats("no grids to compute stats from".into()));
        }
        let n = self.count as f64;
        let mean: Vec<f64> = self.sum.iter().map(|s| s / n).collect();
        let std = self
            .sum_sq
            .iter()
            .zip(&mean)
            .map(|(sq, m)| (sq / n - m * m).max(0.0).sqrt())
            .collect();
        NormStats::new(mean, std)
    }
}

use serde::{Deserialize, Serialize};

use super::grid::{FeatureGrid, NormState, NormStats};
use crate::error::{Error, Result};
use crate::synth::SampleBuffer;

pub const RASTER_CHANNELS: usize = 3;
const BACKGROUND: f32 = 1.0;
const STROKE: f32 = 0.0;

/// Row of amplitude `v` in `[-1, 1]` on a raster of `height` rows; +1 is row 0.
pub(crate) fn amplitude_row(v: f64, height: usize) -> usize {
    let y = (1.0 - v) * 0.5 * (height - 1) as f64;
    (y.round().max(0.0) as usize).min(height - 1)
}

fn stroke_segment(plane: &mut [f32], width: usize, height: usize, p0: (f64, f64), p1: (f64, f64)) {
    let (dx, dy) = (p1.0 - p0.0, p1.1 - p0.1);
    let steps = dx.abs().max(dy.abs()).ceil().max(1.0) as usize;
    for i in 0..=steps {
        let t = i as f64 / steps as f64;
        let x = (p0.0 + t * dx).round() as usize;
        let y = (p0.1 + t * dy).round() as usize;
        plane[y.min(height - 1) * width + x.min(width - 1)] = STROKE;
    }
}

/// Plots the real part of `buf` as an amplitude-vs-time polyline.
///
/// Amplitudes are divided by the peak `|re|` so the trace spans `[-1, 1]`
/// over the full height; time spans the full width. Strokes are binary
/// (0.0 on a 1.0 background) and the plane is replicated into 3 channels.
pub fn rasterize_waveform(buf: &SampleBuffer, height: usize, width: usize) -> Result<FeatureGrid> {
    if buf.is_empty() {
        return Err(Error::Input("cannot rasterize an empty buffer".into()));
    }
    if height == 0 || width == 0 {
        return Err(Error::Input(format!("raster size {height}x{width} is empty")));
    }
    let peak = buf.samples.iter().map(|s| s.re.abs()).fold(0.0, f64::max);
    let scale = if peak > 0.0 { 1.0 / peak } else { 1.0 };
    let n = buf.len();
    let x_step = if n > 1 { (width - 1) as f64 / (n - 1) as f64 } else { 0.0 };
    let point = |i: usize| {
        let v = (buf.samples[i].re * scale).clamp(-1.0, 1.0);
        (i as f64 * x_step, amplitude_row(v, height) as f64)
    };

    let mut plane = vec![BACKGROUND; height * width];
    let mut prev = point(0);
    stroke_segment(&mut plane, width, height, prev, prev);
    for i in 1..n {
        let next = point(i);
        stroke_segment(&mut plane, width, height, prev, next);
        prev = next;
    }

    let mut values = Vec::with_capacity(RASTER_CHANNELS * plane.len());
    for _ in 0..RASTER_CHANNELS {
        values.extend_from_slice(&plane);
    }
    FeatureGrid::from_values(RASTER_CHANNELS, height, width, values)
}

/// Source coordinate for half-pixel-centered bilinear sampling.
fn source_coord(dst: usize, scale: f64, src_len: usize) -> (usize, usize, f32) {
    let s = ((dst as f64 + 0.5) * scale - 0.5).max(0.0);
    let i0 = (s.floor() as usize).min(src_len - 1);
    let i1 = (i0 + 1).min(src_len - 1);
    (i0, i1, (s - i0 as f64) as f32)
}

/// Bilinear resample of every channel to `out_h x out_w`.
pub fn resize_bilinear(grid: &FeatureGrid, out_h: usize, out_w: usize) -> FeatureGrid {
    if (out_h, out_w) == (grid.height, grid.width) {
        return grid.clone();
    }
    let sy = grid.height as f64 / out_h as f64;
    let sx = grid.width as f64 / out_w as f64;
    let cols: Vec<_> = (0..out_w).map(|x| source_coord(x, sx, grid.width)).collect();
    let mut values = Vec::with_capacity(grid.channels * out_h * out_w);
    for c in 0..grid.channels {
        let plane = grid.plane(c);
        for y in 0..out_h {
            let (y0, y1, fy) = source_coord(y, sy, grid.height);
            let r0 = &plane[y0 * grid.width..(y0 + 1) * grid.width];
            let r1 = &plane[y1 * grid.width..(y1 + 1) * grid.width];
            for &(x0, x1, fx) in &cols {
                let top = r0[x0] + (r0[x1] - r0[x0]) * fx;
                let bottom = r1[x0] + (r1[x1] - r1[x0]) * fx;
                values.push(top + (bottom - top) * fy);
            }
        }
    }
    FeatureGrid {
        channels: grid.channels,
        height: out_h,
        width: out_w,
        values,
        norm_state: grid.norm_state,
    }
}

/// Output size when the shorter side is scaled to `target`, aspect preserved
/// (longer side truncated).
pub fn shortest_side_dims(height: usize, width: usize, target: usize) -> (usize, usize) {
    if height <= width {
        (target, (width * target / height).max(1))
    } else {
        ((height * target / width).max(1), target)
    }
}

pub fn resize_shortest_side(grid: &FeatureGrid, target: usize) -> FeatureGrid {
    let (h, w) = shortest_side_dims(grid.height, grid.width, target);
    resize_bilinear(grid, h, w)
}

/// Central `size x size` window, offsets `floor((dim - size) / 2)`.
pub fn center_crop(grid: &FeatureGrid, size: usize) -> Result<FeatureGrid> {
    if grid.height < size || grid.width < size {
        return Err(Error::Crop {
            size,
            height: grid.height,
            width: grid.width,
        });
    }
    let top = (grid.height - size) / 2;
    let left = (grid.width - size) / 2;
    let mut values = Vec::with_capacity(grid.channels * size * size);
    for c in 0..grid.channels {
        let plane = grid.plane(c);
        for y in top..top + size {
            let row = &plane[y * grid.width..(y + 1) * grid.width];
            values.extend_from_slice(&row[left..left + size]);
        }
    }
    Ok(FeatureGrid {
        channels: grid.channels,
        height: size,
        width: size,
        values,
        norm_state: grid.norm_state,
    })
}

/// `(value - mean_c) / std_c` per channel.
pub fn normalize(grid: &FeatureGrid, stats: &NormStats) -> Result<FeatureGrid> {
    stats.validate()?;
    if grid.norm_state == NormState::Normalized {
        return Err(Error::Input("grid is already normalized".into()));
    }
    if stats.mean.len() != grid.channels {
        return Err(Error::Stats(format!(
            "stats cover {} channels, grid has {}",
            stats.mean.len(),
            grid.channels
        )));
    }
    let n = grid.plane_len();
    let values = grid
        .values
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let c = i / n;
            ((f64::from(v) - stats.mean[c]) / stats.std[c]) as f32
        })
        .collect();
    Ok(FeatureGrid {
        channels: grid.channels,
        height: grid.height,
        width: grid.width,
        values,
        norm_state: NormState::Normalized,
    })
}

/// Raster geometry: native plot size, shortest-side resize target, and crop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RasterProfile {
    pub raster_height: usize,
    pub raster_width: usize,
    pub resize_to: usize,
    pub crop_to: usize,
}

impl RasterProfile {
    /// 300x300 plot, resized to 350 and center-cropped back to 300.
    pub const CANONICAL: RasterProfile = RasterProfile {
        raster_height: 300,
        raster_width: 300,
        resize_to: 350,
        crop_to: 300,
    };

    /// Same geometry at one third of the resolution, for fast runs.
    pub const REDUCED: RasterProfile = RasterProfile {
        raster_height: 100,
        raster_width: 100,
        resize_to: 117,
        crop_to: 100,
    };

    pub fn output_dims(&self) -> (usize, usize, usize) {
        (RASTER_CHANNELS, self.crop_to, self.crop_to)
    }

    /// rasterize -> resize -> crop; the result is still raw.
    pub fn render(&self, buf: &SampleBuffer) -> Result<FeatureGrid> {
        let g = rasterize_waveform(buf, self.raster_height, self.raster_width)?;
        let g = resize_shortest_side(&g, self.resize_to);
        center_crop(&g, self.crop_to)
    }
}

impl Default for RasterProfile {
    fn default() -> Self {
        RasterProfile::CANONICAL
    }
}

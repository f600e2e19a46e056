//! Waveform plots as detector input grids.

mod grid;
mod ops;

pub use grid::{
    FeatureGrid, JgrdHeader, NormState, NormStats, StatsAccumulator, JGRD_MAGIC, JGRD_VERSION,
};
pub use ops::{
    center_crop, normalize, rasterize_waveform, resize_bilinear, resize_shortest_side,
    shortest_side_dims, RasterProfile, RASTER_CHANNELS,
};

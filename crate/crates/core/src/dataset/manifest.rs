use std::collections::HashSet;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Component, Path, PathBuf};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::generate::{build_dataset, Dataset, GenerationConfig};
use super::{label_example, ExampleRecord, Split};
use crate::detector::ExampleSource;
use crate::error::{Error, Result};
use crate::raster::{normalize, FeatureGrid, NormStats};
use crate::rng;

pub const MANIFEST_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.jsonl";
const MANIFEST_FORMAT: &str = "jamlab-manifest";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub version: u32,
    pub master_seed: u64,
    pub generation_config: GenerationConfig,
    /// Per-channel statistics of the train split.
    pub norm_stats: NormStats,
    pub records: Vec<ExampleRecord>,
}

/// First line of the manifest file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestHeader {
    pub format: String,
    pub version: u32,
    pub master_seed: u64,
    pub record_count: usize,
    pub generation_config: GenerationConfig,
    pub norm_stats: NormStats,
}

impl DatasetManifest {
    pub fn split_of(&self, id: &str) -> Option<Split> {
        self.records.iter().find(|r| r.id == id).map(|r| r.split)
    }

    pub fn records_in(&self, split: Split) -> impl Iterator<Item = &ExampleRecord> {
        self.records.iter().filter(move |r| r.split == split)
    }

    /// `(count, positives)` of a split.
    pub fn split_counts(&self, split: Split) -> (usize, usize) {
        self.records_in(split).fold((0, 0), |(n, p), r| (n + 1, p + usize::from(r.label)))
    }

    pub fn header(&self) -> ManifestHeader {
        ManifestHeader {
            format: MANIFEST_FORMAT.into(),
            version: self.version,
            master_seed: self.master_seed,
            record_count: self.records.len(),
            generation_config: self.generation_config.clone(),
            norm_stats: self.norm_stats.clone(),
        }
    }

    /// Header line followed by one record per line.
    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = serde_json::to_string(&self.header())?;
        out.push('\n');
        for r in &self.records {
            out.push_str(&serde_json::to_string(r)?);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn from_jsonl<R: BufRead>(reader: R) -> Result<Self> {
        let mut lines = reader.lines();
        let first = lines
            .next()
            .ok_or_else(|| Error::Format("manifest is empty".into()))?
            .map_err(|e| Error::Format(e.to_string()))?;
        let header: ManifestHeader = serde_json::from_str(&first)?;
        if header.format != MANIFEST_FORMAT {
            return Err(Error::Format(format!("not a dataset manifest (format '{}')", header.format)));
        }
        if header.version != MANIFEST_VERSION {
            return Err(Error::Format(format!(
                "unsupported manifest version {}, expected {MANIFEST_VERSION}",
                header.version
            )));
        }
        let mut records = Vec::with_capacity(header.record_count);
        for (n, line) in lines.enumerate() {
            let line = line.map_err(|e| Error::Format(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: ExampleRecord = serde_json::from_str(&line)
                .map_err(|e| Error::Format(format!("manifest line {}: {e}", n + 2)))?;
            records.push(rec);
        }
        let m = DatasetManifest {
            version: header.version,
            master_seed: header.master_seed,
            generation_config: header.generation_config,
            norm_stats: header.norm_stats,
            records,
        };
        if m.records.len() != header.record_count {
            return Err(Error::Format(format!(
                "header announces {} records, found {}",
                header.record_count,
                m.records.len()
            )));
        }
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        self.norm_stats.validate()?;
        let mut seen = HashSet::new();
        let threshold = self.generation_config.label_threshold_db;
        for r in &self.records {
            let bad = |reason: String| Error::Integrity { id: r.id.clone(), reason };
            if !seen.insert(r.id.as_str()) {
                return Err(bad("duplicate id".into()));
            }
            if r.label != label_example(r.jammer_kind, r.jsr_db, threshold) {
                return Err(bad(format!("label {} disagrees with jammer and JSR", r.label)));
            }
            let p = Path::new(&r.grid_path);
            if !p.components().all(|c| matches!(c, Component::Normal(_))) {
                return Err(bad(format!("grid path '{}' escapes the dataset directory", r.grid_path)));
            }
        }
        Ok(())
    }
}

fn manifest_path(path: &Path) -> PathBuf {
    if path.is_dir() {
        path.join(MANIFEST_FILE)
    } else {
        path.to_path_buf()
    }
}

/// Writes `dir/manifest.jsonl` and one raw grid file per record.
pub fn save_dataset(ds: &Dataset, dir: &Path) -> Result<()> {
    let grid_dir = dir.join("grids");
    fs::create_dir_all(&grid_dir).map_err(|e| Error::io(&grid_dir, e))?;
    for (rec, g) in ds.manifest.records.iter().zip(&ds.grids) {
        g.save(&dir.join(&rec.grid_path))?;
    }
    let path = dir.join(MANIFEST_FILE);
    let file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(ds.manifest.to_jsonl()?.as_bytes()).map_err(|e| Error::io(&path, e))?;
    w.flush().map_err(|e| Error::io(&path, e))
}

/// Builds a dataset and stores it under `dir`.
pub fn generate_dataset(cfg: &GenerationConfig, master_seed: u64, dir: &Path) -> Result<DatasetManifest> {
    let ds = build_dataset(cfg, master_seed)?;
    save_dataset(&ds, dir)?;
    Ok(ds.manifest)
}

/// Accepts the manifest file or the directory holding it.
pub fn load_manifest(path: &Path) -> Result<DatasetManifest> {
    let path = manifest_path(path);
    let file = fs::File::open(&path).map_err(|e| Error::io(&path, e))?;
    DatasetManifest::from_jsonl(BufReader::new(file))
}

/// Records of one split, read from disk and normalized with the manifest's
/// statistics on access.
#[derive(Debug, Clone)]
pub struct SplitView {
    root: PathBuf,
    records: Vec<ExampleRecord>,
    stats: NormStats,
    dims: (usize, usize, usize),
}

impl SplitView {
    /// `root` is the directory that holds the manifest.
    pub fn new(manifest: &DatasetManifest, root: &Path, split: Split) -> Self {
        SplitView {
            root: root.to_path_buf(),
            records: manifest.records_in(split).cloned().collect(),
            stats: manifest.norm_stats.clone(),
            dims: manifest.generation_config.raster.output_dims(),
        }
    }

    pub fn records(&self) -> &[ExampleRecord] {
        &self.records
    }

    pub fn raw_grid(&self, index: usize) -> Result<FeatureGrid> {
        let rec = &self.records[index];
        let bad = |reason: String| Error::Integrity { id: rec.id.clone(), reason };
        let path = self.root.join(&rec.grid_path);
        let bytes = fs::read(&path).map_err(|e| bad(format!("{}: {e}", path.display())))?;
        let g = FeatureGrid::from_jgrd_bytes(&bytes).map_err(|e| bad(e.to_string()))?;
        if g.dims() != self.dims {
            return Err(bad(format!("grid is {:?}, dataset renders {:?}", g.dims(), self.dims)));
        }
        Ok(g)
    }

    /// Every example of the split, normalized, in record order.
    pub fn load_all(&self) -> Result<Vec<(FeatureGrid, u8)>> {
        (0..self.records.len()).map(|i| Ok((self.grid(i)?, self.label(i)))).collect()
    }
}

impl ExampleSource for SplitView {
    fn len(&self) -> usize {
        self.records.len()
    }

    fn label(&self, index: usize) -> u8 {
        self.records[index].label
    }

    fn grid(&self, index: usize) -> Result<FeatureGrid> {
        normalize(&self.raw_grid(index)?, &self.stats)
    }
}

/// Shuffled mini-batches over one split.
pub struct SplitBatches {
    view: SplitView,
    order: Vec<usize>,
    batch_size: usize,
    pos: usize,
}

impl Iterator for SplitBatches {
    type Item = Result<Vec<(FeatureGrid, u8)>>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.pos >= self.order.len() {
            return None;
        }
        let end = (self.pos + self.batch_size).min(self.order.len());
        let batch = self.order[self.pos..end]
            .iter()
            .map(|&i| Ok((self.view.grid(i)?, self.view.label(i))))
            .collect();
        self.pos = end;
        Some(batch)
    }
}

/// Each record of `split` exactly once, in an order fixed by `shuffle_seed`.
pub fn iterate_split(
    manifest: &DatasetManifest,
    root: &Path,
    split: Split,
    batch_size: usize,
    shuffle_seed: u64,
) -> Result<SplitBatches> {
    if batch_size == 0 {
        return Err(Error::config("batch size must be at least 1"));
    }
    let view = SplitView::new(manifest, root, split);
    let mut order: Vec<usize> = (0..view.records.len()).collect();
    order.shuffle(&mut rng::seeded(shuffle_seed));
    Ok(SplitBatches { view, order, batch_size, pos: 0 })
}

impl Dataset {
    /// Normalized in-memory examples of one split, in record order.
    pub fn split_examples(&self, split: Split) -> Result<Vec<(FeatureGrid, u8)>> {
        self.manifest
            .records
            .iter()
            .zip(&self.grids)
            .filter(|(r, _)| r.split == split)
            .map(|(r, g)| Ok((normalize(g, &self.manifest.norm_stats)?, r.label)))
            .collect()
    }
}

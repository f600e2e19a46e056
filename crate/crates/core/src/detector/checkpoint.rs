use std::fs;
use std::path::Path;

use super::model::DetectorModel;
use super::spec::NetworkSpec;
use crate::error::{Error, Result};

pub const JNET_MAGIC: &[u8; 4] = b"JNET";
pub const JNET_VERSION: u32 = 1;

/// Fixed-width prefix of a checkpoint file:
/// magic, u32 version, u64 spec fingerprint, u64 init seed, u32 spec length,
/// then the spec as JSON, a u64 parameter count and the f32 parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct JnetHeader {
    pub version: u32,
    pub fingerprint: u64,
    pub init_seed: u64,
    pub spec: NetworkSpec,
    pub param_count: u64,
    /// Byte offset of the first parameter.
    pub data_offset: usize,
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Checkpoint(msg.into())
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| bad(format!("truncated while reading {what}")))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }
}

impl JnetHeader {
    pub fn parse(bytes: &[u8]) -> Result<Self> {
        let mut c = Cursor { bytes, pos: 0 };
        if c.take(4, "magic")? != JNET_MAGIC {
            return Err(bad("not a JNET file"));
        }
        let version = c.u32("version")?;
        if version != JNET_VERSION {
            return Err(bad(format!("unsupported version {version}, expected {JNET_VERSION}")));
        }
        let fingerprint = c.u64("fingerprint")?;
        let init_seed = c.u64("init seed")?;
        let spec_len = c.u32("spec length")? as usize;
        let spec: NetworkSpec = serde_json::from_slice(c.take(spec_len, "spec")?)
            .map_err(|e| bad(format!("spec block: {e}")))?;
        if spec.fingerprint() != fingerprint {
            return Err(bad("spec does not match its fingerprint"));
        }
        let param_count = c.u64("parameter count")?;
        Ok(JnetHeader { version, fingerprint, init_seed, spec, param_count, data_offset: c.pos })
    }
}

pub fn model_to_bytes(model: &DetectorModel<f32>) -> Vec<u8> {
    let spec = serde_json::to_vec(model.spec()).expect("spec serializes");
    let params = model.params();
    let mut out = Vec::with_capacity(32 + spec.len() + 4 * params.len());
    out.extend_from_slice(JNET_MAGIC);
    out.extend_from_slice(&JNET_VERSION.to_le_bytes());
    out.extend_from_slice(&model.spec().fingerprint().to_le_bytes());
    out.extend_from_slice(&model.init_seed().to_le_bytes());
    out.extend_from_slice(&(spec.len() as u32).to_le_bytes());
    out.extend_from_slice(&spec);
    out.extend_from_slice(&(params.len() as u64).to_le_bytes());
    for p in params {
        out.extend_from_slice(&p.to_le_bytes());
    }
    out
}

pub fn model_from_bytes(bytes: &[u8]) -> Result<DetectorModel<f32>> {
    let h = JnetHeader::parse(bytes)?;
    let body = &bytes[h.data_offset..];
    let want = usize::try_from(h.param_count)
        .ok()
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| bad("parameter count overflows"))?;
    if body.len() != want {
        return Err(bad(format!(
            "expected {want} parameter bytes, found {}",
            body.len()
        )));
    }
    let params = body.chunks_exact(4).map(|b| f32::from_le_bytes(b.try_into().unwrap())).collect();
    DetectorModel::from_parts(h.spec, h.init_seed, params)
}

pub fn save_model(model: &DetectorModel<f32>, path: &Path) -> Result<()> {
    fs::write(path, model_to_bytes(model)).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<DetectorModel<f32>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    model_from_bytes(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> DetectorModel<f32> {
        DetectorModel::init(NetworkSpec::for_input(24), 11).unwrap()
    }

    #[test]
    fn roundtrip_is_bit_identical() {
        let m = small();
        let back = model_from_bytes(&model_to_bytes(&m)).unwrap();
        assert_eq!(back.spec(), m.spec());
        assert_eq!(back.init_seed(), 11);
        let a: Vec<u32> = m.params().iter().map(|p| p.to_bits()).collect();
        let b: Vec<u32> = back.params().iter().map(|p| p.to_bits()).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn truncation_and_version_are_checkpoint_errors() {
        let bytes = model_to_bytes(&small());
        for cut in [0, 3, 10, 30, bytes.len() - 1] {
            assert!(matches!(model_from_bytes(&bytes[..cut]), Err(Error::Checkpoint(_))), "cut {cut}");
        }
        let mut v = bytes.clone();
        v[4] = 9;
        assert!(matches!(model_from_bytes(&v), Err(Error::Checkpoint(_))));
        let mut extra = bytes;
        extra.push(0);
        assert!(matches!(model_from_bytes(&extra), Err(Error::Checkpoint(_))));
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let mut bytes = model_to_bytes(&small());
        let h = JnetHeader::parse(&bytes).unwrap();
        let at = h.data_offset - 8;
        bytes[at..at + 8].copy_from_slice(&(h.param_count - 1).to_le_bytes());
        bytes.truncate(bytes.len() - 4);
        assert!(matches!(model_from_bytes(&bytes), Err(Error::Checkpoint(_))));
    }
}

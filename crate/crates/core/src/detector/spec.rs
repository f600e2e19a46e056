use std::ops::Range;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Two valid-convolution + 2x2/2 max-pool stages followed by three fully
/// connected layers and a logistic output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub input_channels: usize,
    pub input_height: usize,
    pub input_width: usize,
    pub conv1_channels: usize,
    pub conv1_kernel: usize,
    pub conv2_channels: usize,
    pub conv2_kernel: usize,
    pub fc1_width: usize,
    pub fc2_width: usize,
    pub dropout_p: f64,
}

impl NetworkSpec {
    /// 3x300x300 input, conv 3->16 (7x7), pool, conv 16->32 (7x7), pool,
    /// fc 156800->256->84->1, dropout 0.2.
    pub fn canonical() -> Self {
        Self::for_input(300)
    }

    /// Canonical layer widths on a square `side x side` three-channel input;
    /// only the flatten length changes.
    pub fn for_input(side: usize) -> Self {
        NetworkSpec {
            input_channels: 3,
            input_height: side,
            input_width: side,
            conv1_channels: 16,
            conv1_kernel: 7,
            conv2_channels: 32,
            conv2_kernel: 7,
            fc1_width: 256,
            fc2_width: 84,
            dropout_p: 0.2,
        }
    }

    pub fn validate(&self) -> Result<ShapeChain> {
        let arch = |layer, reason: String| Error::Architecture { layer, reason };
        if self.input_channels == 0 || self.conv1_channels == 0 || self.conv2_channels == 0 {
            return Err(arch("conv1", "channel counts must be positive".into()));
        }
        if self.fc1_width == 0 || self.fc2_width == 0 {
            return Err(arch("fc1", "hidden widths must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.dropout_p) {
            return Err(arch("dropout", format!("rate {} outside [0, 1)", self.dropout_p)));
        }
        let valid = |layer, size: usize, k: usize| {
            if k == 0 || size < k {
                Err(arch(layer, format!("kernel {k} does not fit spatial size {size}")))
            } else {
                Ok(size - k + 1)
            }
        };
        let pooled = |layer, size: usize| {
            if size < 2 {
                Err(arch(layer, format!("cannot 2x2-pool spatial size {size}")))
            } else {
                Ok(size / 2)
            }
        };
        let c1 = (
            valid("conv1", self.input_height, self.conv1_kernel)?,
            valid("conv1", self.input_width, self.conv1_kernel)?,
        );
        let p1 = (pooled("pool1", c1.0)?, pooled("pool1", c1.1)?);
        let c2 = (valid("conv2", p1.0, self.conv2_kernel)?, valid("conv2", p1.1, self.conv2_kernel)?);
        let p2 = (pooled("pool2", c2.0)?, pooled("pool2", c2.1)?);
        Ok(ShapeChain {
            conv1: c1,
            pool1: p1,
            conv2: c2,
            pool2: p2,
            flatten: self.conv2_channels * p2.0 * p2.1,
        })
    }

    pub fn input_len(&self) -> usize {
        self.input_channels * self.input_height * self.input_width
    }

    /// Truncated SHA-256 over the spec's JSON form.
    pub fn fingerprint(&self) -> u64 {
        let text = serde_json::to_string(self).expect("spec serializes");
        let digest = Sha256::digest(text.as_bytes());
        u64::from_le_bytes(digest[..8].try_into().unwrap())
    }
}

impl Default for NetworkSpec {
    fn default() -> Self {
        Self::canonical()
    }
}

/// Spatial sizes after each stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShapeChain {
    pub conv1: (usize, usize),
    pub pool1: (usize, usize),
    pub conv2: (usize, usize),
    pub pool2: (usize, usize),
    pub flatten: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ParamId {
    Conv1Weight,
    Conv1Bias,
    Conv2Weight,
    Conv2Bias,
    Fc1Weight,
    Fc1Bias,
    Fc2Weight,
    Fc2Bias,
    Fc3Weight,
    Fc3Bias,
}

impl ParamId {
    pub const ALL: [ParamId; 10] = [
        ParamId::Conv1Weight,
        ParamId::Conv1Bias,
        ParamId::Conv2Weight,
        ParamId::Conv2Bias,
        ParamId::Fc1Weight,
        ParamId::Fc1Bias,
        ParamId::Fc2Weight,
        ParamId::Fc2Bias,
        ParamId::Fc3Weight,
        ParamId::Fc3Bias,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ParamId::Conv1Weight => "conv1.weight",
            ParamId::Conv1Bias => "conv1.bias",
            ParamId::Conv2Weight => "conv2.weight",
            ParamId::Conv2Bias => "conv2.bias",
            ParamId::Fc1Weight => "fc1.weight",
            ParamId::Fc1Bias => "fc1.bias",
            ParamId::Fc2Weight => "fc2.weight",
            ParamId::Fc2Bias => "fc2.bias",
            ParamId::Fc3Weight => "fc3.weight",
            ParamId::Fc3Bias => "fc3.bias",
        }
    }
}

/// Where each tensor lives in the flat parameter vector, in declared layer
/// order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamLayout {
    entries: Vec<(ParamId, Vec<usize>, Range<usize>)>,
    total: usize,
}

impl ParamLayout {
    pub fn new(spec: &NetworkSpec) -> Result<Self> {
        let chain = spec.validate()?;
        let (ci, c1, c2) = (spec.input_channels, spec.conv1_channels, spec.conv2_channels);
        let (k1, k2) = (spec.conv1_kernel, spec.conv2_kernel);
        let shapes: [(ParamId, Vec<usize>); 10] = [
            (ParamId::Conv1Weight, vec![c1, ci, k1, k1]),
            (ParamId::Conv1Bias, vec![c1]),
            (ParamId::Conv2Weight, vec![c2, c1, k2, k2]),
            (ParamId::Conv2Bias, vec![c2]),
            (ParamId::Fc1Weight, vec![spec.fc1_width, chain.flatten]),
            (ParamId::Fc1Bias, vec![spec.fc1_width]),
            (ParamId::Fc2Weight, vec![spec.fc2_width, spec.fc1_width]),
            (ParamId::Fc2Bias, vec![spec.fc2_width]),
            (ParamId::Fc3Weight, vec![1, spec.fc2_width]),
            (ParamId::Fc3Bias, vec![1]),
        ];
        let mut offset = 0;
        let entries = shapes
            .into_iter()
            .map(|(id, shape)| {
                let len: usize = shape.iter().product();
                let r = offset..offset + len;
                offset += len;
                (id, shape, r)
            })
            .collect();
        Ok(ParamLayout { entries, total: offset })
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn range(&self, id: ParamId) -> Range<usize> {
        self.entry(id).2.clone()
    }

    pub fn shape(&self, id: ParamId) -> &[usize] {
        &self.entry(id).1
    }

    /// Fan-in of the layer owning `id` (bias shares its weight's fan-in).
    pub fn fan_in(&self, id: ParamId) -> usize {
        use ParamId::*;
        let weight = match id {
            Conv1Bias => Conv1Weight,
            Conv2Bias => Conv2Weight,
            Fc1Bias => Fc1Weight,
            Fc2Bias => Fc2Weight,
            Fc3Bias => Fc3Weight,
            w => w,
        };
        self.shape(weight)[1..].iter().product()
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &[usize], Range<usize>)> {
        self.entries.iter().map(|(id, s, r)| (*id, s.as_slice(), r.clone()))
    }

    fn entry(&self, id: ParamId) -> &(ParamId, Vec<usize>, Range<usize>) {
        self.entries.iter().find(|e| e.0 == id).expect("every id is laid out")
    }
}

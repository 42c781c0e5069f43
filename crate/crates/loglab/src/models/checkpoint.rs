//! Binary checkpoint format.
//!
//! Layout: 8-byte magic `LOGLABCK`, little-endian u32 version, a
//! length-prefixed UTF-8 descriptor block (first line: architecture
//! string `name;key=value;...`; following lines: training metadata
//! `key=value`), then a u32 parameter count and for each parameter its
//! length-prefixed name, u32 rank, u32 dims, and the float-64 values in
//! little-endian order. Round trips are bit-exact.

use std::collections::BTreeMap;
use std::path::Path;

use crate::autodiff::Tensor;

use super::ModelError;

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"LOGLABCK";
pub const CHECKPOINT_VERSION: u32 = 1;

/// One named parameter array.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedParam {
    pub name: String,
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
}

impl NamedParam {
    pub fn of(name: &str, tensor: &Tensor) -> NamedParam {
        NamedParam {
            name: name.to_string(),
            shape: tensor.shape().to_vec(),
            values: tensor.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub version: u32,
    /// Architecture string, `name;key=value;...`.
    pub architecture: String,
    /// Training metadata (task, seed, epochs, preprocessing stats ref).
    pub metadata: BTreeMap<String, String>,
    pub params: Vec<NamedParam>,
}

impl Checkpoint {
    pub fn new(architecture: String, params: Vec<NamedParam>) -> Checkpoint {
        Checkpoint {
            version: CHECKPOINT_VERSION,
            architecture,
            metadata: BTreeMap::new(),
            params,
        }
    }

    pub fn with_meta(mut self, key: &str, value: &str) -> Checkpoint {
        debug_assert!(!key.contains('\n') && !value.contains('\n'));
        self.metadata.insert(key.to_string(), value.to_string());
        self
    }

    /// Architecture name: the part of the first descriptor line before
    /// the first `;`.
    pub fn arch(&self) -> &str {
        self.architecture.split(';').next().unwrap_or("")
    }

    /// Parse a `key=value` field out of the architecture string.
    pub fn descriptor_field<T: std::str::FromStr>(&self, key: &str) -> Result<T, ModelError> {
        for part in self.architecture.split(';').skip(1) {
            if let Some((k, v)) = part.split_once('=') {
                if k == key {
                    return v.parse().map_err(|_| {
                        ModelError::BadCheckpoint(format!("cannot parse field '{key}'='{v}'"))
                    });
                }
            }
        }
        Err(ModelError::BadCheckpoint(format!(
            "descriptor lacks field '{key}'"
        )))
    }

    pub fn param(&self, name: &str) -> Result<&NamedParam, ModelError> {
        self.params
            .iter()
            .find(|p| p.name == name)
            .ok_or_else(|| ModelError::BadCheckpoint(format!("missing parameter '{name}'")))
    }

    /// Rebuild a trainable tensor from a stored parameter.
    pub fn param_tensor(&self, name: &str) -> Result<Tensor, ModelError> {
        let p = self.param(name)?;
        Ok(Tensor::param(p.shape.clone(), p.values.clone()))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(CHECKPOINT_MAGIC);
        out.extend_from_slice(&self.version.to_le_bytes());

        let mut descriptor = self.architecture.clone();
        for (k, v) in &self.metadata {
            descriptor.push('\n');
            descriptor.push_str(k);
            descriptor.push('=');
            descriptor.push_str(v);
        }
        write_str(&mut out, &descriptor);

        out.extend_from_slice(&(self.params.len() as u32).to_le_bytes());
        for p in &self.params {
            write_str(&mut out, &p.name);
            out.extend_from_slice(&(p.shape.len() as u32).to_le_bytes());
            for &d in &p.shape {
                out.extend_from_slice(&(d as u32).to_le_bytes());
            }
            for v in &p.values {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Checkpoint, ModelError> {
        let mut r = Reader { bytes, pos: 0 };
        let magic = r.take(8)?;
        if magic != CHECKPOINT_MAGIC {
            return Err(ModelError::BadCheckpoint("bad magic".into()));
        }
        let version = r.u32()?;
        if version != CHECKPOINT_VERSION {
            return Err(ModelError::BadCheckpoint(format!(
                "unsupported version {version}"
            )));
        }
        let descriptor = r.string()?;
        let mut lines = descriptor.lines();
        let architecture = lines.next().unwrap_or("").to_string();
        let mut metadata = BTreeMap::new();
        for line in lines {
            let (k, v) = line.split_once('=').ok_or_else(|| {
                ModelError::BadCheckpoint(format!("bad metadata line '{line}'"))
            })?;
            metadata.insert(k.to_string(), v.to_string());
        }

        let count = r.u32()? as usize;
        let mut params = Vec::with_capacity(count);
        for _ in 0..count {
            let name = r.string()?;
            let rank = r.u32()? as usize;
            let mut shape = Vec::with_capacity(rank);
            for _ in 0..rank {
                shape.push(r.u32()? as usize);
            }
            let n: usize = shape.iter().product();
            let mut values = Vec::with_capacity(n);
            for _ in 0..n {
                let raw = r.take(8)?;
                values.push(f64::from_le_bytes(raw.try_into().expect("8 bytes")));
            }
            params.push(NamedParam {
                name,
                shape,
                values,
            });
        }
        if r.pos != bytes.len() {
            return Err(ModelError::BadCheckpoint("trailing bytes".into()));
        }
        Ok(Checkpoint {
            version,
            architecture,
            metadata,
            params,
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), ModelError> {
        std::fs::write(path, self.to_bytes()).map_err(|e| ModelError::CheckpointIo {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Checkpoint, ModelError> {
        let bytes = std::fs::read(path).map_err(|e| ModelError::CheckpointIo {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_bytes(&bytes)
    }
}

fn write_str(out: &mut Vec<u8>, s: &str) {
    out.extend_from_slice(&(s.len() as u32).to_le_bytes());
    out.extend_from_slice(s.as_bytes());
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], ModelError> {
        if self.pos + n > self.bytes.len() {
            return Err(ModelError::BadCheckpoint("truncated file".into()));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, ModelError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn string(&mut self) -> Result<String, ModelError> {
        let len = self.u32()? as usize;
        let raw = self.take(len)?;
        String::from_utf8(raw.to_vec())
            .map_err(|_| ModelError::BadCheckpoint("descriptor is not UTF-8".into()))
    }
}

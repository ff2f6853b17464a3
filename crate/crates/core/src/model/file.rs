//! Model container: `HWMODEL\0`, u32 LE header length, JSON header (spec and a
//! tensor manifest with shapes and payload byte offsets), then the payload as
//! little-endian f32.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::params::ModelParams;
use super::spec::ModelSpec;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"HWMODEL\0";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Header {
    format_version: u32,
    params_version: u32,
    spec: ModelSpec,
    tensors: Vec<TensorEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    shape: Vec<usize>,
    offset: usize,
    bytes: usize,
}

pub fn save_model<W: Write>(params: &ModelParams, mut w: W) -> Result<()> {
    let mut tensors = Vec::new();
    let mut payload = Vec::new();
    for (name, t) in params.named_all() {
        let offset = payload.len();
        for &v in &t.data {
            payload.extend_from_slice(&(v as f32).to_le_bytes());
        }
        tensors.push(TensorEntry {
            name,
            shape: t.shape.clone(),
            offset,
            bytes: payload.len() - offset,
        });
    }
    let header = serde_json::to_vec(&Header {
        format_version: FORMAT_VERSION,
        params_version: params.version,
        spec: params.spec.clone(),
        tensors,
    })?;
    w.write_all(MAGIC)?;
    w.write_all(&(header.len() as u32).to_le_bytes())?;
    w.write_all(&header)?;
    w.write_all(&payload)?;
    Ok(())
}

pub fn load_model<R: Read>(mut r: R) -> Result<ModelParams> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::ModelFile("bad magic".into()));
    }
    let mut len = [0u8; 4];
    r.read_exact(&mut len)?;
    let mut header = vec![0u8; u32::from_le_bytes(len) as usize];
    r.read_exact(&mut header)?;
    let header: Header = serde_json::from_slice(&header)?;
    if header.format_version != FORMAT_VERSION {
        return Err(Error::ModelFile(format!(
            "unsupported format version {}",
            header.format_version
        )));
    }
    let mut payload = Vec::new();
    r.read_to_end(&mut payload)?;

    let mut params = ModelParams::zeros(&header.spec)?;
    params.version = header.params_version;
    let names: Vec<(String, Vec<usize>)> = params
        .named_all()
        .into_iter()
        .map(|(n, t)| (n, t.shape.clone()))
        .collect();
    if names.len() != header.tensors.len() {
        return Err(Error::ModelFile(format!(
            "manifest lists {} tensors, spec implies {}",
            header.tensors.len(),
            names.len()
        )));
    }
    for ((tensor, (name, shape)), entry) in
        params.all_mut().into_iter().zip(names).zip(&header.tensors)
    {
        if entry.name != name || entry.shape != shape {
            return Err(Error::ModelFile(format!(
                "manifest entry {} {:?} does not match expected {} {:?}",
                entry.name, entry.shape, name, shape
            )));
        }
        if entry.bytes != tensor.len() * 4 || entry.offset + entry.bytes > payload.len() {
            return Err(Error::ModelFile(format!("tensor {name} out of bounds")));
        }
        for (i, v) in tensor.data.iter_mut().enumerate() {
            let o = entry.offset + 4 * i;
            *v = f32::from_le_bytes(payload[o..o + 4].try_into().expect("4 bytes")) as f64;
        }
    }
    Ok(params)
}

impl ModelParams {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        save_model(self, &mut buf).expect("writing to a Vec cannot fail");
        buf
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        load_model(bytes)
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}

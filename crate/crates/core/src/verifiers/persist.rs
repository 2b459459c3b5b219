//! Model files.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! "JWPR" | u16 version | u8 kind | u32 len | header JSON
//!        | u32 blob count | { u16 len | name | u64 count | count x f64 }*
//!        | u32 crc32 of everything before
//! ```
//!
//! The header holds configuration and shapes; every floating-point
//! parameter lives in a named blob so it round-trips bit for bit.

use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::lstm::{LstmConfig, LstmLayer, LstmModel, LstmParams};
use super::pipeline::{LstmInput, Scope, Verifier, VerifierModel};
use super::svm::{SvmConfig, SvmModel};
use super::VerifierError;
use crate::features::{FeatureDescriptor, NormalizerState};

pub const MAGIC: &[u8; 4] = b"JWPR";
pub const FORMAT_VERSION: u16 = 1;

const KIND_SVM: u8 = 1;
const KIND_LSTM: u8 = 2;

#[derive(Serialize, Deserialize)]
struct Header {
    user_id: String,
    scope: Scope,
    svm: Option<SvmHeader>,
    lstm: Option<LstmHeader>,
}

#[derive(Serialize, Deserialize)]
struct SvmHeader {
    config: SvmConfig,
    columns: Vec<FeatureDescriptor>,
    indices: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct LstmHeader {
    config: LstmConfig,
    input: LstmInput,
    input_dim: usize,
    units: usize,
}

fn corrupt(msg: impl Into<String>) -> VerifierError {
    VerifierError::CorruptModelFile(msg.into())
}

pub fn encode(v: &Verifier) -> Vec<u8> {
    let mut blobs: Vec<(String, Vec<f64>)> = Vec::new();
    let (kind, header) = match &v.model {
        VerifierModel::Svm { columns, indices, model } => {
            blobs.push(("weights".into(), model.weights.clone()));
            blobs.push(("bias".into(), vec![model.bias]));
            blobs.push(("platt".into(), vec![model.platt_a, model.platt_b]));
            blobs.push(("norm_mean".into(), model.normalizer.mean.clone()));
            blobs.push(("norm_std".into(), model.normalizer.std.clone()));
            let h = SvmHeader { config: model.config.clone(), columns: columns.clone(), indices: indices.clone() };
            (KIND_SVM, Header { user_id: v.user_id.clone(), scope: v.scope, svm: Some(h), lstm: None })
        }
        VerifierModel::Lstm { input, model } => {
            let p = &model.params;
            for (prefix, layer) in [("l1", &p.layer1), ("l2", &p.layer2)] {
                blobs.push((format!("{prefix}.w_in"), layer.w_in.iter().copied().collect()));
                blobs.push((format!("{prefix}.w_rec"), layer.w_rec.iter().copied().collect()));
                blobs.push((format!("{prefix}.bias"), layer.bias.to_vec()));
            }
            blobs.push(("head_w".into(), p.head_w.to_vec()));
            blobs.push(("head_b".into(), vec![p.head_b]));
            blobs.push(("norm_mean".into(), model.normalizer.mean.clone()));
            blobs.push(("norm_std".into(), model.normalizer.std.clone()));
            let h = LstmHeader {
                config: model.config.clone(),
                input: *input,
                input_dim: p.input_dim(),
                units: p.layer1.units(),
            };
            (KIND_LSTM, Header { user_id: v.user_id.clone(), scope: v.scope, svm: None, lstm: Some(h) })
        }
    };
    let json = serde_json::to_vec(&header).expect("header serializes");

    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.push(kind);
    out.extend_from_slice(&(json.len() as u32).to_le_bytes());
    out.extend_from_slice(&json);
    out.extend_from_slice(&(blobs.len() as u32).to_le_bytes());
    for (name, data) in &blobs {
        out.extend_from_slice(&(name.len() as u16).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.extend_from_slice(&(data.len() as u64).to_le_bytes());
        for x in data {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], VerifierError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len()).ok_or_else(|| corrupt("truncated"))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u16(&mut self) -> Result<u16, VerifierError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32, VerifierError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, VerifierError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn decode(bytes: &[u8]) -> Result<Verifier, VerifierError> {
    if bytes.len() < 4 + 2 + 1 + 4 + 4 + 4 {
        return Err(corrupt("truncated"));
    }
    if &bytes[..4] != MAGIC {
        return Err(corrupt("bad magic"));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != FORMAT_VERSION {
        return Err(VerifierError::VersionMismatch { found: version, supported: FORMAT_VERSION });
    }
    let (body, trailer) = bytes.split_at(bytes.len() - 4);
    if crc32fast::hash(body) != u32::from_le_bytes(trailer.try_into().unwrap()) {
        return Err(corrupt("checksum mismatch"));
    }

    let mut r = Reader { buf: body, pos: 6 };
    let kind = r.take(1)?[0];
    let hlen = r.u32()? as usize;
    let header: Header = serde_json::from_slice(r.take(hlen)?).map_err(|e| corrupt(format!("header: {e}")))?;
    let count = r.u32()? as usize;
    let mut blobs = std::collections::HashMap::new();
    for _ in 0..count {
        let nlen = r.u16()? as usize;
        let name = std::str::from_utf8(r.take(nlen)?).map_err(|_| corrupt("blob name"))?.to_string();
        let n = r.u64()? as usize;
        let raw = r.take(n.checked_mul(8).ok_or_else(|| corrupt("blob size"))?)?;
        let data: Vec<f64> = raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        blobs.insert(name, data);
    }
    if r.pos != body.len() {
        return Err(corrupt("trailing bytes"));
    }
    let mut blob = |name: &str, len: usize| -> Result<Vec<f64>, VerifierError> {
        let v = blobs.remove(name).ok_or_else(|| corrupt(format!("missing blob {name}")))?;
        if v.len() != len {
            return Err(corrupt(format!("blob {name} has {} values, expected {len}", v.len())));
        }
        Ok(v)
    };

    let model = match (kind, header.svm, header.lstm) {
        (KIND_SVM, Some(h), None) => {
            let d = h.indices.len();
            let platt = blob("platt", 2)?;
            let model = SvmModel {
                weights: blob("weights", d)?,
                bias: blob("bias", 1)?[0],
                platt_a: platt[0],
                platt_b: platt[1],
                normalizer: NormalizerState { mean: blob("norm_mean", d)?, std: blob("norm_std", d)? },
                config: h.config,
            };
            VerifierModel::Svm { columns: h.columns, indices: h.indices, model }
        }
        (KIND_LSTM, None, Some(h)) => {
            let (d, u) = (h.input_dim, h.units);
            let mut layer = |prefix: &str, input: usize| -> Result<LstmLayer, VerifierError> {
                let shape = |rows: usize, v: Vec<f64>| {
                    Array2::from_shape_vec((rows, 4 * u), v).map_err(|e| corrupt(e.to_string()))
                };
                Ok(LstmLayer {
                    w_in: shape(input, blob(&format!("{prefix}.w_in"), input * 4 * u)?)?,
                    w_rec: shape(u, blob(&format!("{prefix}.w_rec"), u * 4 * u)?)?,
                    bias: Array1::from(blob(&format!("{prefix}.bias"), 4 * u)?),
                })
            };
            let layer1 = layer("l1", d)?;
            let layer2 = layer("l2", u)?;
            let params = LstmParams {
                layer1,
                layer2,
                head_w: Array1::from(blob("head_w", u)?),
                head_b: blob("head_b", 1)?[0],
            };
            let normalizer = NormalizerState { mean: blob("norm_mean", d)?, std: blob("norm_std", d)? };
            VerifierModel::Lstm { input: h.input, model: LstmModel { params, normalizer, config: h.config } }
        }
        _ => return Err(corrupt(format!("unknown or inconsistent model kind {kind}"))),
    };
    Ok(Verifier { user_id: header.user_id, scope: header.scope, model })
}

pub fn save_model(v: &Verifier, path: &Path) -> Result<(), VerifierError> {
    std::fs::write(path, encode(v))?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<Verifier, VerifierError> {
    decode(&std::fs::read(path)?)
}

//! Binary checkpoint format (all integers and floats little-endian):
//!
//! ```text
//! magic        8 bytes  "RVGNCKPT"
//! version      u32      FORMAT_VERSION
//! hidden       u32
//! layers       u32
//! aux_dim      u32
//! n_chars      u32      vocabulary characters (START/END are implicit)
//! chars        n_chars × (u32 byte length, UTF-8 bytes)
//! n_params     u64
//! weights      n_params × f64, in `Weights::slices` order
//! has_opt      u8       0 or 1
//! [optimizer]  step u64, beta1 f64, beta2 f64, eps f64,
//!              first moments n_params × f64, second moments n_params × f64
//! crc32        u32      over every preceding byte
//! ```

use std::fs;
use std::path::Path;

use crate::corpus::{Vocabulary, AUX_DIM};
use crate::error::{Error, Result};

use super::optim::{AdamConfig, OptimizerState};
use super::{ModelDims, ModelParams, Weights};

pub const MAGIC: &[u8; 8] = b"RVGNCKPT";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub params: ModelParams,
    pub optimizer: Option<OptimizerState>,
}

pub fn save_checkpoint(params: &ModelParams, opt: Option<&OptimizerState>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, to_bytes(params, opt)?).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    from_bytes(&bytes)
}

fn put_u32(out: &mut Vec<u8>, x: u32) {
    out.extend_from_slice(&x.to_le_bytes());
}

fn put_floats(out: &mut Vec<u8>, w: &Weights) {
    for s in w.slices() {
        for x in s {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
}

pub fn to_bytes(params: &ModelParams, opt: Option<&OptimizerState>) -> Result<Vec<u8>> {
    params.validate()?;
    let mut out = Vec::with_capacity(64 + params.weights.len() * 8);
    out.extend_from_slice(MAGIC);
    put_u32(&mut out, FORMAT_VERSION);
    let dims = params.dims();
    put_u32(&mut out, dims.hidden as u32);
    put_u32(&mut out, dims.layers as u32);
    put_u32(&mut out, params.aux_dim as u32);
    put_u32(&mut out, params.vocab.chars().len() as u32);
    for c in params.vocab.chars() {
        let mut buf = [0u8; 4];
        let s = c.encode_utf8(&mut buf);
        put_u32(&mut out, s.len() as u32);
        out.extend_from_slice(s.as_bytes());
    }
    out.extend_from_slice(&(params.weights.len() as u64).to_le_bytes());
    put_floats(&mut out, &params.weights);
    match opt {
        None => out.push(0),
        Some(o) => {
            if !o.m.same_shape(&params.weights) || !o.v.same_shape(&params.weights) {
                return Err(Error::Validation("optimizer state does not match parameters".into()));
            }
            out.push(1);
            out.extend_from_slice(&o.step.to_le_bytes());
            for x in [o.config.beta1, o.config.beta2, o.config.eps] {
                out.extend_from_slice(&x.to_le_bytes());
            }
            put_floats(&mut out, &o.m);
            put_floats(&mut out, &o.v);
        }
    }
    let crc = crc32fast::hash(&out);
    put_u32(&mut out, crc);
    Ok(out)
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| Error::Integrity("truncated checkpoint".into()))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn fill(&mut self, w: &mut Weights) -> Result<()> {
        for s in w.slices_mut() {
            for x in s.iter_mut() {
                *x = self.f64()?;
            }
        }
        Ok(())
    }
}

pub fn from_bytes(bytes: &[u8]) -> Result<Checkpoint> {
    if bytes.len() < MAGIC.len() + 8 || &bytes[..MAGIC.len()] != MAGIC {
        return Err(Error::Integrity("not a checkpoint file (bad magic)".into()));
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(Error::Version {
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    let (body, tail) = bytes.split_at(bytes.len() - 4);
    let stored = u32::from_le_bytes(tail.try_into().unwrap());
    if crc32fast::hash(body) != stored {
        return Err(Error::Integrity("CRC-32 mismatch".into()));
    }

    let mut r = Reader { buf: body, pos: 12 };
    let hidden = r.u32()? as usize;
    let layers = r.u32()? as usize;
    let aux_dim = r.u32()? as usize;
    if aux_dim != AUX_DIM {
        return Err(Error::Integrity(format!("aux_dim {aux_dim}, expected {AUX_DIM}")));
    }
    let n_chars = r.u32()? as usize;
    let mut chars = Vec::with_capacity(n_chars);
    for _ in 0..n_chars {
        let len = r.u32()? as usize;
        let s = std::str::from_utf8(r.take(len)?)
            .map_err(|_| Error::Integrity("vocabulary entry is not UTF-8".into()))?;
        let mut it = s.chars();
        match (it.next(), it.next()) {
            (Some(c), None) => chars.push(c),
            _ => return Err(Error::Integrity("vocabulary entry is not one character".into())),
        }
    }
    let vocab = Vocabulary::from_chars(chars).map_err(|e| Error::Integrity(e.to_string()))?;
    let mut params = ModelParams::zeros(vocab, ModelDims { hidden, layers })
        .map_err(|e| Error::Integrity(e.to_string()))?;
    let n_params = r.u64()? as usize;
    if n_params != params.weights.len() {
        return Err(Error::Integrity(format!(
            "parameter count {n_params} does not match dimensions ({})",
            params.weights.len()
        )));
    }
    r.fill(&mut params.weights)?;

    let optimizer = match r.u8()? {
        0 => None,
        1 => {
            let step = r.u64()?;
            let config = AdamConfig {
                beta1: r.f64()?,
                beta2: r.f64()?,
                eps: r.f64()?,
            };
            let mut o = OptimizerState::new(&params.weights, config);
            o.step = step;
            r.fill(&mut o.m)?;
            r.fill(&mut o.v)?;
            Some(o)
        }
        other => return Err(Error::Integrity(format!("bad optimizer flag {other}"))),
    };
    if r.pos != body.len() {
        return Err(Error::Integrity("trailing bytes after checkpoint body".into()));
    }
    Ok(Checkpoint { params, optimizer })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ndmath::Prng;

    fn model() -> (ModelParams, OptimizerState) {
        let vocab = Vocabulary::from_chars(vec![' ', '!', 'a', 'é', '€']).unwrap();
        let p = ModelParams::init(vocab, ModelDims { hidden: 3, layers: 2 }, &mut Prng::new(5)).unwrap();
        let mut o = OptimizerState::new(&p.weights, AdamConfig::default());
        o.step = 17;
        o.m.fill(0.25);
        o.v.fill(1e-300);
        (p, o)
    }

    fn bits(w: &Weights) -> Vec<u64> {
        w.slices().iter().flat_map(|s| s.iter().map(|x| x.to_bits())).collect()
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let (p, o) = model();
        let ck = from_bytes(&to_bytes(&p, Some(&o)).unwrap()).unwrap();
        assert_eq!(bits(&ck.params.weights), bits(&p.weights));
        assert_eq!(ck.params.vocab, p.vocab);
        assert_eq!(ck.optimizer.as_ref(), Some(&o));

        let ck = from_bytes(&to_bytes(&p, None).unwrap()).unwrap();
        assert!(ck.optimizer.is_none());
        assert_eq!(ck.params, p);
    }

    #[test]
    fn flipped_version_byte() {
        let (p, _) = model();
        let mut b = to_bytes(&p, None).unwrap();
        b[8] ^= 0x01;
        assert!(matches!(from_bytes(&b), Err(Error::Version { found: 0, expected: 1 })));
    }

    #[test]
    fn corrupted_payload_fails_crc() {
        let (p, _) = model();
        let mut b = to_bytes(&p, None).unwrap();
        let mid = b.len() / 2;
        b[mid] ^= 0x40;
        assert!(matches!(from_bytes(&b), Err(Error::Integrity(_))));
        assert!(matches!(from_bytes(b"garbage!"), Err(Error::Integrity(_))));
        let good = to_bytes(&p, None).unwrap();
        assert!(matches!(from_bytes(&good[..good.len() - 9]), Err(Error::Integrity(_))));
    }
}

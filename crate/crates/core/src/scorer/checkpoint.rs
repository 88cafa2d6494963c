//! Binary checkpoints.
//!
//! ```text
//! magic "UMAUCCKP" | version u32 | kind u8 | input_dim u32 | n_heads u32
//! n_tensors u32 | per tensor: rank u32, dims u32...
//! payload: every tensor as f64 little-endian, in shape-table order
//! has_state u8 | optional state block:
//!   "MMST" | labels u32 | margin f64 | constrained u8 | steps u64 | a.. | b.. | alpha..
//! ```

use std::path::Path;

use super::{Dense, LinearScorer, MlpScorer, Model, ModelKind, Scorer};
use crate::minmax::MinMaxState;
use crate::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"UMAUCCKP";
const VERSION: u32 = 1;
const STATE_MAGIC: &[u8; 4] = b"MMST";

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: Model,
    pub state: Option<MinMaxState>,
}

pub fn encode_checkpoint<M: Scorer>(model: &M, state: Option<&MinMaxState>) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(match model.kind() {
        ModelKind::Linear => 0,
        ModelKind::Mlp => 1,
    });
    put_u32(&mut out, model.input_dim());
    put_u32(&mut out, model.n_heads());
    let shapes = model.shapes();
    put_u32(&mut out, shapes.len());
    for s in &shapes {
        put_u32(&mut out, s.len());
        for &d in s {
            put_u32(&mut out, d);
        }
    }
    for t in model.tensors() {
        for v in t {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    match state {
        None => out.push(0),
        Some(st) => {
            out.push(1);
            out.extend_from_slice(STATE_MAGIC);
            put_u32(&mut out, st.labels());
            out.extend_from_slice(&st.margin().to_le_bytes());
            out.push(st.constrained() as u8);
            out.extend_from_slice(&st.steps().to_le_bytes());
            for v in st.a().iter().chain(st.b()).chain(st.alpha()) {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
    out
}

fn put_u32(out: &mut Vec<u8>, v: usize) {
    out.extend_from_slice(&(v as u32).to_le_bytes());
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
            .ok_or_else(|| Error::Checkpoint(format!("truncated at byte {}", self.pos)))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<usize> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()) as usize)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        (0..n).map(|_| self.f64()).collect()
    }
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<Checkpoint> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(8)? != CHECKPOINT_MAGIC {
        return Err(Error::Checkpoint("bad magic".into()));
    }
    let version = r.u32()?;
    if version != VERSION as usize {
        return Err(Error::Checkpoint(format!("unsupported version {version}")));
    }
    let kind = match r.u8()? {
        0 => ModelKind::Linear,
        1 => ModelKind::Mlp,
        k => return Err(Error::Checkpoint(format!("unknown model kind {k}"))),
    };
    let input_dim = r.u32()?;
    let n_heads = r.u32()?;
    let n_tensors = r.u32()?;
    let mut shapes = Vec::with_capacity(n_tensors.min(1024));
    for _ in 0..n_tensors {
        let rank = r.u32()?;
        shapes.push((0..rank).map(|_| r.u32()).collect::<Result<Vec<_>>>()?);
    }
    let mut tensors = Vec::with_capacity(shapes.len());
    for s in &shapes {
        tensors.push(r.f64s(s.iter().product())?);
    }
    let model = build_model(kind, &shapes, tensors)?;
    if model.input_dim() != input_dim || model.n_heads() != n_heads {
        return Err(Error::Checkpoint(
            "header disagrees with tensor shapes".into(),
        ));
    }
    let state = match r.u8()? {
        0 => None,
        1 => {
            if r.take(4)? != STATE_MAGIC {
                return Err(Error::Checkpoint("bad state block".into()));
            }
            let labels = r.u32()?;
            let margin = r.f64()?;
            let constrained = r.u8()? != 0;
            let steps = r.u64()?;
            let a = r.f64s(labels)?;
            let b = r.f64s(labels)?;
            let alpha = r.f64s(labels)?;
            Some(
                MinMaxState::from_parts(a, b, alpha, margin, constrained, steps)
                    .map_err(|e| Error::Checkpoint(e.to_string()))?,
            )
        }
        f => return Err(Error::Checkpoint(format!("bad state flag {f}"))),
    };
    if r.pos != bytes.len() {
        return Err(Error::Checkpoint("trailing bytes".into()));
    }
    Ok(Checkpoint { model, state })
}

fn build_model(
    kind: ModelKind,
    shapes: &[Vec<usize>],
    mut tensors: Vec<Vec<f64>>,
) -> Result<Model> {
    let bad = || Error::Checkpoint("tensor shapes do not match model kind".into());
    if shapes.len() < 2 || shapes.len() % 2 != 0 {
        return Err(bad());
    }
    for pair in shapes.chunks_exact(2) {
        if pair[0].len() != 2 || pair[1].len() != 1 || pair[0][0] != pair[1][0] {
            return Err(bad());
        }
    }
    let mut layers = Vec::with_capacity(shapes.len() / 2);
    let mut drain = tensors.drain(..);
    for pair in shapes.chunks_exact(2) {
        let (w, b) = (drain.next().unwrap(), drain.next().unwrap());
        layers.push((pair[0][1], pair[0][0], w, b));
    }
    match kind {
        ModelKind::Linear => {
            if layers.len() != 1 {
                return Err(bad());
            }
            let (d, _, w, b) = layers.pop().unwrap();
            Ok(Model::Linear(
                LinearScorer::from_parts(d, w, b).map_err(|_| bad())?,
            ))
        }
        ModelKind::Mlp => {
            let mut dense = layers
                .into_iter()
                .map(|(n_in, n_out, w, b)| Dense::from_parts(n_in, n_out, w, b))
                .collect::<Result<Vec<_>>>()
                .map_err(|_| bad())?;
            let head = dense.pop().unwrap();
            Ok(Model::Mlp(
                MlpScorer::from_layers(dense, head).map_err(|_| bad())?,
            ))
        }
    }
}

pub fn write_checkpoint<M: Scorer>(
    path: &Path,
    model: &M,
    state: Option<&MinMaxState>,
) -> Result<()> {
    std::fs::write(path, encode_checkpoint(model, state))?;
    Ok(())
}

pub fn read_checkpoint(path: &Path) -> Result<Checkpoint> {
    decode_checkpoint(&std::fs::read(path)?)
}

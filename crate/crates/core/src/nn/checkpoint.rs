//! Binary parameter checkpoints.
//!
//! Layout, little-endian throughout:
//!
//! ```text
//! magic [4] | version u32 | K u32 | E u32 | n_dims u32 | dims u32 × n_dims
//! | n_params u64 | params f64 × n_params | fnv1a64 of everything before u64
//! ```

use std::path::Path;

use super::{Activation, Dense, Mlp, ProgressModel};
use crate::error::{Error, Result};
use crate::io::{write_atomic, ByteReader};
use crate::rng::fnv1a64;

pub const CHECKPOINT_VERSION: u32 = 1;
pub const PROGRESS_MAGIC: [u8; 4] = *b"TRWD";
pub const QNET_MAGIC: [u8; 4] = *b"TRQN";

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub magic: [u8; 4],
    /// Output width (two-hot bins, 1 for scalar regression, or action count).
    pub outputs: u32,
    /// Embedding width; 0 for plain feed-forward networks.
    pub embedding: u32,
    pub dims: Vec<u32>,
    pub params: Vec<f64>,
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(32 + 4 * self.dims.len() + 8 * self.params.len());
        out.extend_from_slice(&self.magic);
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        out.extend_from_slice(&self.outputs.to_le_bytes());
        out.extend_from_slice(&self.embedding.to_le_bytes());
        out.extend_from_slice(&(self.dims.len() as u32).to_le_bytes());
        for d in &self.dims {
            out.extend_from_slice(&d.to_le_bytes());
        }
        out.extend_from_slice(&(self.params.len() as u64).to_le_bytes());
        for p in &self.params {
            out.extend_from_slice(&p.to_le_bytes());
        }
        let sum = fnv1a64(&out);
        out.extend_from_slice(&sum.to_le_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8], expected_magic: [u8; 4]) -> Result<Self> {
        if bytes.len() < 8 {
            return Err(Error::Corrupt("checkpoint truncated".into()));
        }
        let (body, trailer) = bytes.split_at(bytes.len() - 8);
        let mut r = ByteReader::new(body);
        let magic: [u8; 4] = r.array()?;
        if magic != expected_magic {
            return Err(Error::Corrupt(format!(
                "bad magic {:?}, expected {:?}",
                String::from_utf8_lossy(&magic),
                String::from_utf8_lossy(&expected_magic)
            )));
        }
        let version = r.u32()?;
        if version != CHECKPOINT_VERSION {
            return Err(Error::Corrupt(format!("unsupported checkpoint version {version}")));
        }
        let stored = u64::from_le_bytes(trailer.try_into().expect("8 bytes"));
        let actual = fnv1a64(body);
        if stored != actual {
            return Err(Error::Corrupt(format!(
                "checksum mismatch: stored {stored:016x}, computed {actual:016x}"
            )));
        }
        let outputs = r.u32()?;
        let embedding = r.u32()?;
        let n_dims = r.u32()? as usize;
        let dims = (0..n_dims).map(|_| r.u32()).collect::<Result<Vec<_>>>()?;
        let n_params = r.u64()? as usize;
        if r.remaining() != n_params * 8 {
            return Err(Error::Corrupt(format!(
                "parameter block has {} bytes, header declares {n_params} values",
                r.remaining()
            )));
        }
        let params = (0..n_params).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
        Ok(Checkpoint { magic, outputs, embedding, dims, params })
    }
}

pub fn write_checkpoint(path: &Path, ckpt: &Checkpoint) -> Result<u64> {
    let bytes = ckpt.to_bytes();
    write_atomic(path, &bytes)?;
    Ok(fnv1a64(&bytes))
}

pub fn read_checkpoint(path: &Path, expected_magic: [u8; 4]) -> Result<Checkpoint> {
    let bytes = std::fs::read(path)?;
    Checkpoint::from_bytes(&bytes, expected_magic)
}

fn flatten(tensors: Vec<&[f64]>) -> Vec<f64> {
    tensors.into_iter().flatten().copied().collect()
}

fn fill(tensors: Vec<&mut [f64]>, params: &[f64]) -> Result<()> {
    let total: usize = tensors.iter().map(|t| t.len()).sum();
    if total != params.len() {
        return Err(Error::Corrupt(format!(
            "checkpoint holds {} parameters, architecture needs {total}",
            params.len()
        )));
    }
    let mut offset = 0;
    for t in tensors {
        t.copy_from_slice(&params[offset..offset + t.len()]);
        offset += t.len();
    }
    Ok(())
}

fn mlp_skeleton(dims: &[usize], activation: Activation) -> Result<Mlp> {
    if dims.len() < 2 || dims.contains(&0) {
        return Err(Error::Corrupt(format!("bad layer dimensions {dims:?}")));
    }
    let mut layers: Vec<Dense> = dims.windows(2).map(|w| Dense::zeros(w[0], w[1])).collect();
    layers[0].sparse_input = true;
    Ok(Mlp { layers, activation })
}

impl ProgressModel {
    pub fn to_checkpoint(&self) -> Checkpoint {
        Checkpoint {
            magic: PROGRESS_MAGIC,
            outputs: self.outputs() as u32,
            embedding: self.embedding_width() as u32,
            dims: self.encoder.dims().into_iter().map(|d| d as u32).collect(),
            params: flatten(self.tensors()),
        }
    }

    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<Self> {
        let dims: Vec<usize> = ckpt.dims.iter().map(|&d| d as usize).collect();
        if dims.last().copied() != Some(ckpt.embedding as usize) {
            return Err(Error::Corrupt("encoder output width disagrees with embedding width".into()));
        }
        let encoder = mlp_skeleton(&dims, Activation::Tanh)?;
        let head = Dense::zeros(2 * ckpt.embedding as usize, ckpt.outputs as usize);
        let mut model = ProgressModel { encoder, head };
        fill(model.tensors_mut(), &ckpt.params)?;
        Ok(model)
    }
}

impl Mlp {
    /// Checkpoint of a feed-forward network with ReLU hidden layers.
    pub fn to_checkpoint(&self, magic: [u8; 4]) -> Checkpoint {
        let dims = self.dims();
        Checkpoint {
            magic,
            outputs: self.output_width() as u32,
            embedding: dims[dims.len().saturating_sub(2)] as u32,
            dims: dims.into_iter().map(|d| d as u32).collect(),
            params: flatten(self.tensors()),
        }
    }

    pub fn from_checkpoint(ckpt: &Checkpoint, activation: Activation) -> Result<Self> {
        let dims: Vec<usize> = ckpt.dims.iter().map(|&d| d as usize).collect();
        let mut mlp = mlp_skeleton(&dims, activation)?;
        if mlp.output_width() != ckpt.outputs as usize {
            return Err(Error::Corrupt("output width disagrees with layer dimensions".into()));
        }
        fill(mlp.tensors_mut(), &ckpt.params)?;
        Ok(mlp)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::ProgressShape;
    use crate::rng::seeded;

    #[test]
    fn progress_model_round_trips() {
        let mut rng = seeded(0);
        let model = ProgressModel::new(&ProgressShape { input_width: 9, hidden: vec![5, 4], embedding: 3, outputs: 7 }, &mut rng)
            .unwrap();
        let bytes = model.to_checkpoint().to_bytes();
        assert_eq!(&bytes[..4], b"TRWD");
        let back = ProgressModel::from_checkpoint(&Checkpoint::from_bytes(&bytes, PROGRESS_MAGIC).unwrap()).unwrap();
        assert_eq!(back, model);
    }

    #[test]
    fn rejects_wrong_magic_version_and_corruption() {
        let mut rng = seeded(1);
        let mlp = Mlp::new(&[4, 3, 2], Activation::Relu, true, &mut rng).unwrap();
        let bytes = mlp.to_checkpoint(QNET_MAGIC).to_bytes();
        assert!(matches!(Checkpoint::from_bytes(&bytes, PROGRESS_MAGIC), Err(Error::Corrupt(_))));

        let mut versioned = bytes.clone();
        versioned[4] = 9;
        assert!(matches!(Checkpoint::from_bytes(&versioned, QNET_MAGIC), Err(Error::Corrupt(_))));

        let mut flipped = bytes.clone();
        flipped[40] ^= 1;
        assert!(matches!(Checkpoint::from_bytes(&flipped, QNET_MAGIC), Err(Error::Corrupt(_))));

        assert!(Checkpoint::from_bytes(&bytes[..bytes.len() - 3], QNET_MAGIC).is_err());

        let back = Mlp::from_checkpoint(&Checkpoint::from_bytes(&bytes, QNET_MAGIC).unwrap(), Activation::Relu).unwrap();
        assert_eq!(back, mlp);
    }
}

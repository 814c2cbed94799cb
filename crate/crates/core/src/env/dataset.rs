//! Demonstration dataset files.
//!
//! ```text
//! "TRDM" | version u32 | task u32 | height u32 | width u32 | count u32
//! | per trajectory: T u32, success u8, T × 3 × H × W f32
//! | fnv1a64 of everything before, u64
//! ```
//! All integers and floats little-endian.

use std::path::Path;

use super::{Frame, Task, Trajectory, CHANNELS};
use crate::error::{Error, Result};
use crate::io::{write_atomic, ByteReader};
use crate::rng::fnv1a64;

pub const DATASET_MAGIC: [u8; 4] = *b"TRDM";
pub const DATASET_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub task: Task,
    pub height: usize,
    pub width: usize,
    pub trajectories: Vec<Trajectory>,
}

impl Dataset {
    pub fn new(task: Task, height: usize, width: usize, trajectories: Vec<Trajectory>) -> Result<Self> {
        for t in &trajectories {
            if t.len() < 2 {
                return Err(Error::invalid("trajectory shorter than 2 frames"));
            }
            if t.frames.iter().any(|f| f.channels() != CHANNELS || f.height() != height || f.width() != width) {
                return Err(Error::invalid("frame geometry differs from dataset geometry"));
            }
        }
        Ok(Dataset { task, height, width, trajectories })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(&DATASET_MAGIC);
        out.extend_from_slice(&DATASET_VERSION.to_le_bytes());
        out.extend_from_slice(&self.task.id().to_le_bytes());
        out.extend_from_slice(&(self.height as u32).to_le_bytes());
        out.extend_from_slice(&(self.width as u32).to_le_bytes());
        out.extend_from_slice(&(self.trajectories.len() as u32).to_le_bytes());
        for t in &self.trajectories {
            out.extend_from_slice(&(t.len() as u32).to_le_bytes());
            out.push(u8::from(t.success));
            for f in &t.frames {
                for v in f.values() {
                    out.extend_from_slice(&v.to_le_bytes());
                }
            }
        }
        let sum = fnv1a64(&out);
        out.extend_from_slice(&sum.to_le_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 32 {
            return Err(Error::Corrupt(format!("dataset truncated ({} bytes)", bytes.len())));
        }
        let (body, trailer) = bytes.split_at(bytes.len() - 8);
        let mut r = ByteReader::new(body);
        if r.array::<4>()? != DATASET_MAGIC {
            return Err(Error::Corrupt("bad dataset magic".into()));
        }
        let version = r.u32()?;
        if version != DATASET_VERSION {
            return Err(Error::Corrupt(format!("unsupported dataset version {version}")));
        }
        let stored = u64::from_le_bytes(trailer.try_into().expect("8 bytes"));
        let actual = fnv1a64(body);
        if stored != actual {
            return Err(Error::Corrupt(format!(
                "dataset checksum mismatch: stored {stored:016x}, computed {actual:016x}"
            )));
        }
        let task = Task::from_id(r.u32()?).map_err(|e| Error::Corrupt(e.to_string()))?;
        let height = r.u32()? as usize;
        let width = r.u32()? as usize;
        let count = r.u32()? as usize;
        let frame_len = CHANNELS * height * width;
        let mut trajectories = Vec::with_capacity(count.min(1 << 16));
        for _ in 0..count {
            let len = r.u32()? as usize;
            let success = r.u8()? != 0;
            let mut frames = Vec::with_capacity(len);
            for _ in 0..len {
                let values = (0..frame_len).map(|_| r.f32()).collect::<Result<Vec<_>>>()?;
                frames.push(Frame::from_values(CHANNELS, height, width, values)?);
            }
            trajectories.push(Trajectory { frames, success, task, seed: None });
        }
        if r.remaining() != 0 {
            return Err(Error::Corrupt(format!("{} trailing bytes after last trajectory", r.remaining())));
        }
        Dataset::new(task, height, width, trajectories).map_err(|e| Error::Corrupt(e.to_string()))
    }
}

/// Write atomically; returns the file checksum (FNV-1a of the whole file).
pub fn write_dataset(path: &Path, dataset: &Dataset) -> Result<u64> {
    let bytes = dataset.to_bytes();
    write_atomic(path, &bytes)?;
    Ok(fnv1a64(&bytes))
}

pub fn read_dataset(path: &Path) -> Result<Dataset> {
    Dataset::from_bytes(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{generate_demos, GridWorld};

    fn sample() -> Dataset {
        let world = GridWorld::new(Task::Push);
        let demos = generate_demos(&world, 4, 1).unwrap();
        Dataset::new(Task::Push, 12, 12, demos).unwrap()
    }

    #[test]
    fn round_trip_drops_only_seeds() {
        let ds = sample();
        let back = Dataset::from_bytes(&ds.to_bytes()).unwrap();
        assert_eq!(back.task, ds.task);
        for (a, b) in back.trajectories.iter().zip(&ds.trajectories) {
            assert_eq!(a.frames, b.frames);
            assert_eq!(a.success, b.success);
        }
    }

    #[test]
    fn corruption_is_detected() {
        let bytes = sample().to_bytes();
        assert!(matches!(Dataset::from_bytes(&bytes[..bytes.len() / 2]), Err(Error::Corrupt(_))));
        let mut flipped = bytes.clone();
        flipped[100] ^= 0x40;
        assert!(matches!(Dataset::from_bytes(&flipped), Err(Error::Corrupt(_))));
        let mut magic = bytes.clone();
        magic[0] = b'X';
        assert!(matches!(Dataset::from_bytes(&magic), Err(Error::Corrupt(_))));
    }
}

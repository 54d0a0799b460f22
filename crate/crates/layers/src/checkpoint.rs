//! Named-tensor checkpoint files.
//!
//! Binary layout: magic `VRCK`, format version `u16`, tensor count `u32`,
//! then per tensor: name length `u16` + UTF-8 name, rank `u8`, each dim
//! `u32`, data as little-endian `f64`. A JSON manifest sidecar
//! (`<path>.manifest.json`) lists names, shapes, and the training step.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use tensor::Tensor;

use crate::LayersError;

const MAGIC: &[u8; 4] = b"VRCK";
const VERSION: u16 = 1;

/// An ordered set of named tensors plus the step they were captured at.
#[derive(Debug, Default)]
pub struct Checkpoint {
    pub tensors: Vec<(String, Tensor)>,
    pub step: u64,
}

impl Checkpoint {
    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.tensors.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    step: u64,
    tensors: BTreeMap<String, Vec<usize>>,
}

pub fn save_checkpoint(path: &Path, ckpt: &Checkpoint) -> Result<(), LayersError> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&u32::try_from(ckpt.tensors.len()).expect("tensor count fits u32").to_le_bytes())?;
    for (name, t) in &ckpt.tensors {
        let name_bytes = name.as_bytes();
        w.write_all(&u16::try_from(name_bytes.len()).expect("name fits u16").to_le_bytes())?;
        w.write_all(name_bytes)?;
        w.write_all(&[u8::try_from(t.shape().len()).expect("rank fits u8")])?;
        for &d in t.shape() {
            w.write_all(&u32::try_from(d).expect("dim fits u32").to_le_bytes())?;
        }
        for v in t.data().iter() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;

    let manifest = Manifest {
        step: ckpt.step,
        tensors: ckpt.tensors.iter().map(|(n, t)| (n.clone(), t.shape().to_vec())).collect(),
    };
    let mf = File::create(manifest_path(path))?;
    serde_json::to_writer_pretty(BufWriter::new(mf), &manifest)
        .map_err(|e| LayersError::Format(format!("manifest write: {e}")))?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint, LayersError> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(LayersError::Format(format!("bad magic {magic:?}, expected {MAGIC:?}")));
    }
    let version = read_u16(&mut r)?;
    if version != VERSION {
        return Err(LayersError::Format(format!("unsupported version {version}")));
    }
    let count = read_u32(&mut r)? as usize;
    let mut tensors = Vec::with_capacity(count);
    for _ in 0..count {
        let name_len = read_u16(&mut r)? as usize;
        let mut name = vec![0u8; name_len];
        r.read_exact(&mut name)?;
        let name = String::from_utf8(name).map_err(|e| LayersError::Format(format!("name: {e}")))?;
        let mut rank = [0u8; 1];
        r.read_exact(&mut rank)?;
        let shape: Vec<usize> =
            (0..rank[0]).map(|_| read_u32(&mut r).map(|d| d as usize)).collect::<Result<_, _>>()?;
        let n: usize = shape.iter().product();
        let mut data = Vec::with_capacity(n);
        let mut buf = [0u8; 8];
        for _ in 0..n {
            r.read_exact(&mut buf)?;
            data.push(f64::from_le_bytes(buf));
        }
        tensors.push((name, Tensor::param(&shape, data)));
    }

    let step = match File::open(manifest_path(path)) {
        Ok(f) => serde_json::from_reader::<_, Manifest>(BufReader::new(f))
            .map_err(|e| LayersError::Format(format!("manifest read: {e}")))?
            .step,
        Err(_) => 0,
    };
    Ok(Checkpoint { tensors, step })
}

fn manifest_path(path: &Path) -> std::path::PathBuf {
    let mut os = path.as_os_str().to_owned();
    os.push(".manifest.json");
    std::path::PathBuf::from(os)
}

fn read_u16(r: &mut impl Read) -> Result<u16, std::io::Error> {
    let mut b = [0u8; 2];
    r.read_exact(&mut b)?;
    Ok(u16::from_le_bytes(b))
}

fn read_u32(r: &mut impl Read) -> Result<u32, std::io::Error> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

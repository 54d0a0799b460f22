//! Binary dataset container.
//!
//! Layout, all integers little-endian:
//! `"VRDS"` · version `u16` · height `u16` · width `u16` · count `u32`, then
//! per sample: label `u8` followed by `height·width` row-major pixels.

use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::SvrtError;

pub const MAGIC: &[u8; 4] = b"VRDS";
pub const VERSION: u16 = 1;

/// A fully loaded dataset file.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub height: u16,
    pub width: u16,
    pub labels: Vec<u8>,
    /// Row-major pixels, one entry per sample.
    pub images: Vec<Vec<u8>>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

pub fn write_container<'a>(
    path: &Path,
    height: u16,
    width: u16,
    samples: impl ExactSizeIterator<Item = (u8, &'a [u8])>,
) -> Result<(), SvrtError> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&height.to_le_bytes())?;
    w.write_all(&width.to_le_bytes())?;
    w.write_all(&(samples.len() as u32).to_le_bytes())?;
    let pixels_per = height as usize * width as usize;
    for (label, pixels) in samples {
        assert_eq!(pixels.len(), pixels_per, "sample pixel count mismatch");
        w.write_all(&[label])?;
        w.write_all(pixels)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_container(path: &Path) -> Result<Dataset, SvrtError> {
    let mut r = BufReader::new(std::fs::File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(SvrtError::BadContainer(format!(
            "bad magic {magic:?} in {}",
            path.display()
        )));
    }
    let version = read_u16(&mut r)?;
    if version != VERSION {
        return Err(SvrtError::BadContainer(format!("unsupported version {version}")));
    }
    let height = read_u16(&mut r)?;
    let width = read_u16(&mut r)?;
    let mut count_bytes = [0u8; 4];
    r.read_exact(&mut count_bytes)?;
    let count = u32::from_le_bytes(count_bytes) as usize;
    let pixels_per = height as usize * width as usize;
    let mut labels = Vec::with_capacity(count);
    let mut images = Vec::with_capacity(count);
    for _ in 0..count {
        let mut label = [0u8; 1];
        r.read_exact(&mut label)?;
        if label[0] > 3 {
            return Err(SvrtError::BadContainer(format!("label {} out of range", label[0])));
        }
        let mut pixels = vec![0u8; pixels_per];
        r.read_exact(&mut pixels)?;
        labels.push(label[0]);
        images.push(pixels);
    }
    // Trailing garbage means the count field lied.
    let mut probe = [0u8; 1];
    if r.read(&mut probe)? != 0 {
        return Err(SvrtError::BadContainer("trailing bytes after last sample".into()));
    }
    Ok(Dataset { height, width, labels, images })
}

fn read_u16(r: &mut impl Read) -> Result<u16, SvrtError> {
    let mut b = [0u8; 2];
    r.read_exact(&mut b)?;
    Ok(u16::from_le_bytes(b))
}

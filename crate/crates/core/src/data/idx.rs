//! IDX binary format: big-endian, magic-tagged tensors of unsigned bytes.
//! Magic 0x00000801 tags a label vector, 0x00000803 an image cube.

use crate::error::DataError;

pub const MAGIC_LABELS: u32 = 0x0000_0801;
pub const MAGIC_IMAGES: u32 = 0x0000_0803;

/// Decoded image stack with pixels scaled to [0,1] by /255.
#[derive(Debug, Clone, PartialEq)]
pub struct Images {
    pub rows: usize,
    pub cols: usize,
    /// count · rows · cols scaled pixels, image-major, scanline order.
    pub pixels: Vec<f64>,
}

impl Images {
    pub fn count(&self) -> usize {
        let per = self.rows * self.cols;
        if per == 0 {
            0
        } else {
            self.pixels.len() / per
        }
    }

    /// Scanline-ordered pixels of image i.
    pub fn image(&self, i: usize) -> &[f64] {
        let per = self.rows * self.cols;
        &self.pixels[i * per..(i + 1) * per]
    }
}

fn read_u32(bytes: &[u8], offset: usize) -> Result<u32, DataError> {
    let end = offset + 4;
    if bytes.len() < end {
        return Err(DataError::Truncated {
            offset,
            needed: end - bytes.len(),
        });
    }
    Ok(u32::from_be_bytes([
        bytes[offset],
        bytes[offset + 1],
        bytes[offset + 2],
        bytes[offset + 3],
    ]))
}

pub fn parse_idx_labels(bytes: &[u8]) -> Result<Vec<u8>, DataError> {
    let magic = read_u32(bytes, 0)?;
    if magic != MAGIC_LABELS {
        return Err(DataError::BadMagic {
            got: magic,
            expected: MAGIC_LABELS,
            offset: 0,
        });
    }
    let count = read_u32(bytes, 4)? as usize;
    let need = 8 + count;
    if bytes.len() < need {
        return Err(DataError::Truncated {
            offset: bytes.len(),
            needed: need - bytes.len(),
        });
    }
    Ok(bytes[8..8 + count].to_vec())
}

pub fn parse_idx_images(bytes: &[u8]) -> Result<Images, DataError> {
    let magic = read_u32(bytes, 0)?;
    if magic != MAGIC_IMAGES {
        return Err(DataError::BadMagic {
            got: magic,
            expected: MAGIC_IMAGES,
            offset: 0,
        });
    }
    let count = read_u32(bytes, 4)? as usize;
    let rows = read_u32(bytes, 8)? as usize;
    let cols = read_u32(bytes, 12)? as usize;
    let need = 16 + count * rows * cols;
    if bytes.len() < need {
        return Err(DataError::Truncated {
            offset: bytes.len(),
            needed: need - bytes.len(),
        });
    }
    let pixels = bytes[16..need].iter().map(|&b| b as f64 / 255.0).collect();
    Ok(Images { rows, cols, pixels })
}

pub fn serialize_idx_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&MAGIC_LABELS.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}

pub fn serialize_idx_images(imgs: &Images) -> Vec<u8> {
    let count = imgs.count();
    let mut out = Vec::with_capacity(16 + imgs.pixels.len());
    out.extend_from_slice(&MAGIC_IMAGES.to_be_bytes());
    out.extend_from_slice(&(count as u32).to_be_bytes());
    out.extend_from_slice(&(imgs.rows as u32).to_be_bytes());
    out.extend_from_slice(&(imgs.cols as u32).to_be_bytes());
    for &v in &imgs.pixels {
        out.push((v * 255.0).round() as u8);
    }
    out
}

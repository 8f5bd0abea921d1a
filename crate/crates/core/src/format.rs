//! RLE JSON and binary PGM label-map formats.
//!
//! RLE JSON:
//!
//! ```text
//! {"width":W,"height":H,"instances":[{"id":1,"rle":[[start,length],...]},...]}
//! ```
//!
//! Offsets are zero-based and row-major. Output is compact with keys in the
//! order shown, so writing a parsed file reproduces it byte-for-byte.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instance::{Canvas, InstanceSet, Mask, MaskError};

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid canvas {width}x{height}")]
    InvalidCanvas { width: i64, height: i64 },
    #[error("instance {index}: id must be a positive integer, got {id}")]
    InvalidId { index: usize, id: i64 },
    #[error("instance {index}: negative run ({start}, {len})")]
    NegativeRun { index: usize, start: i64, len: i64 },
    #[error("instance {index} (id {id}): {source}")]
    Instance {
        index: usize,
        id: u32,
        #[source]
        source: MaskError,
    },
    #[error("PGM: expected magic \"P5\"")]
    PgmMagic,
    #[error("PGM: malformed header ({0})")]
    PgmHeader(&'static str),
    #[error("PGM: maxval must be in 1..=65535, got {0}")]
    PgmMaxval(u64),
    #[error("PGM: pixel payload truncated, expected {expected} bytes, found {found}")]
    PgmTruncated { expected: usize, found: usize },
    #[error("PGM: sample {value} at pixel {pixel} exceeds maxval {maxval}")]
    PgmSample {
        pixel: usize,
        value: u32,
        maxval: u32,
    },
    #[error("label maps cannot represent overlapping instances ({first} and {second} overlap)")]
    OverlapInLabelMap { first: usize, second: usize },
    #[error("label {0} does not fit in a 16-bit PGM")]
    LabelTooLarge(u32),
}

#[derive(Serialize, Deserialize)]
struct RleFile {
    width: i64,
    height: i64,
    instances: Vec<RleInstance>,
}

#[derive(Serialize, Deserialize)]
struct RleInstance {
    id: i64,
    rle: Vec<[i64; 2]>,
}

/// Parses an RLE JSON document. Instance order follows the array order.
pub fn parse_rle_json(bytes: &[u8]) -> Result<InstanceSet, FormatError> {
    let file: RleFile = serde_json::from_slice(bytes)?;
    if file.width < 1 || file.height < 1 {
        return Err(FormatError::InvalidCanvas {
            width: file.width,
            height: file.height,
        });
    }
    let canvas = Canvas::new(file.width as usize, file.height as usize).map_err(|_| {
        FormatError::InvalidCanvas {
            width: file.width,
            height: file.height,
        }
    })?;

    let mut masks = Vec::with_capacity(file.instances.len());
    let mut labels = Vec::with_capacity(file.instances.len());
    for (index, inst) in file.instances.into_iter().enumerate() {
        if inst.id < 1 || inst.id > u32::MAX as i64 {
            return Err(FormatError::InvalidId { index, id: inst.id });
        }
        let mut runs = Vec::with_capacity(inst.rle.len());
        for [start, len] in inst.rle {
            if start < 0 || len < 0 {
                return Err(FormatError::NegativeRun { index, start, len });
            }
            runs.push((start as usize, len as usize));
        }
        let mask = Mask::from_runs(canvas, runs).map_err(|source| FormatError::Instance {
            index,
            id: inst.id as u32,
            source,
        })?;
        masks.push(mask);
        labels.push(inst.id as u32);
    }
    Ok(InstanceSet::with_labels(canvas, masks, labels))
}

/// Writes the canonical RLE JSON form of `set`.
pub fn write_rle_json(set: &InstanceSet) -> Vec<u8> {
    let canvas = set.canvas();
    let file = RleFile {
        width: canvas.width() as i64,
        height: canvas.height() as i64,
        instances: set
            .instances()
            .iter()
            .zip(set.labels())
            .map(|(mask, &id)| RleInstance {
                id: id as i64,
                rle: mask
                    .runs()
                    .iter()
                    .map(|r| [r.start as i64, r.len as i64])
                    .collect(),
            })
            .collect(),
    };
    serde_json::to_vec(&file).expect("RLE file serialises")
}

/// Parses a binary (P5) PGM label map. Zero is background, every distinct
/// positive sample is one instance, ordered by ascending label.
pub fn parse_label_map_pgm(bytes: &[u8]) -> Result<InstanceSet, FormatError> {
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err(FormatError::PgmMagic);
    }
    let mut pos = 2;
    let width = header_field(bytes, &mut pos)?;
    let height = header_field(bytes, &mut pos)?;
    let maxval = header_field(bytes, &mut pos)?;
    // exactly one whitespace byte separates the header from the payload
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(FormatError::PgmHeader("missing whitespace after maxval"));
    }
    pos += 1;

    if maxval == 0 || maxval > 65535 {
        return Err(FormatError::PgmMaxval(maxval));
    }
    if width == 0 || height == 0 {
        return Err(FormatError::InvalidCanvas {
            width: width as i64,
            height: height as i64,
        });
    }
    let canvas = Canvas::new(width as usize, height as usize).expect("checked above");
    let sample_bytes = if maxval < 256 { 1 } else { 2 };
    let expected = canvas.pixel_count() * sample_bytes;
    let payload = &bytes[pos..];
    if payload.len() < expected {
        return Err(FormatError::PgmTruncated {
            expected,
            found: payload.len(),
        });
    }

    let maxval = maxval as u32;
    let labels: Vec<u32> = if sample_bytes == 1 {
        payload[..expected].iter().map(|&b| b as u32).collect()
    } else {
        payload[..expected]
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]) as u32)
            .collect()
    };
    if let Some((pixel, &value)) = labels.iter().enumerate().find(|(_, &v)| v > maxval) {
        return Err(FormatError::PgmSample {
            pixel,
            value,
            maxval,
        });
    }
    InstanceSet::from_label_map(canvas, &labels).map_err(|source| FormatError::Instance {
        index: 0,
        id: 0,
        source,
    })
}

fn header_field(bytes: &[u8], pos: &mut usize) -> Result<u64, FormatError> {
    loop {
        match bytes.get(*pos) {
            Some(b'#') => {
                while bytes.get(*pos).is_some_and(|&b| b != b'\n') {
                    *pos += 1;
                }
            }
            Some(b) if b.is_ascii_whitespace() => *pos += 1,
            Some(_) => break,
            None => return Err(FormatError::PgmHeader("unexpected end of header")),
        }
    }
    let begin = *pos;
    while bytes.get(*pos).is_some_and(u8::is_ascii_digit) {
        *pos += 1;
    }
    if begin == *pos {
        return Err(FormatError::PgmHeader("expected a decimal number"));
    }
    std::str::from_utf8(&bytes[begin..*pos])
        .expect("ascii digits")
        .parse()
        .map_err(|_| FormatError::PgmHeader("number out of range"))
}

/// Writes a non-overlapping set as a P5 label map using its labels as sample values.
pub fn write_label_map_pgm(set: &InstanceSet) -> Result<Vec<u8>, FormatError> {
    let canvas = set.canvas();
    let mut raster = vec![0u32; canvas.pixel_count()];
    let mut owner = vec![usize::MAX; canvas.pixel_count()];
    for (index, (mask, &label)) in set.instances().iter().zip(set.labels()).enumerate() {
        if label > 65535 {
            return Err(FormatError::LabelTooLarge(label));
        }
        for o in mask.offsets() {
            if owner[o] != usize::MAX {
                return Err(FormatError::OverlapInLabelMap {
                    first: owner[o],
                    second: index,
                });
            }
            owner[o] = index;
            raster[o] = label;
        }
    }
    let maxval = raster.iter().copied().max().unwrap_or(0).max(1);
    let mut out = format!("P5\n{} {}\n{}\n", canvas.width(), canvas.height(), maxval).into_bytes();
    if maxval < 256 {
        out.extend(raster.iter().map(|&v| v as u8));
    } else {
        out.extend(raster.iter().flat_map(|&v| (v as u16).to_be_bytes()));
    }
    Ok(out)
}

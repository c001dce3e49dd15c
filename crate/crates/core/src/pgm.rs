//! Netpbm graymap (PGM) reading and writing.
//!
//! Both the binary (`P5`) and plain (`P2`) variants are read, with any
//! `maxval` up to 65535. Samples are rescaled linearly onto `[0, 255]`.
//! Writing always produces binary `P5` with `maxval` 255.

use std::fs;
use std::path::Path;

use crate::image::GrayImage;
use crate::scalar::Real;

#[derive(Debug, thiserror::Error)]
pub enum PgmError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("unsupported format: magic number {0:?}")]
    UnsupportedFormat(String),
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("truncated raster: expected {expected} samples, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("sample {value} exceeds maxval {maxval}")]
    SampleOutOfRange { value: u32, maxval: u32 },
}

struct Header {
    binary: bool,
    width: usize,
    height: usize,
    maxval: u32,
    /// Offset of the first raster byte.
    data_start: usize,
}

fn skip_whitespace_and_comments(bytes: &[u8], mut pos: usize) -> usize {
    loop {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < bytes.len() && bytes[pos] == b'#' {
            while pos < bytes.len() && bytes[pos] != b'\n' && bytes[pos] != b'\r' {
                pos += 1;
            }
        } else {
            return pos;
        }
    }
}

fn read_uint(bytes: &[u8], pos: usize, what: &str) -> Result<(u32, usize), PgmError> {
    let start = skip_whitespace_and_comments(bytes, pos);
    let mut end = start;
    while end < bytes.len() && bytes[end].is_ascii_digit() {
        end += 1;
    }
    if end == start {
        return Err(PgmError::MalformedHeader(format!("missing {what}")));
    }
    let text = std::str::from_utf8(&bytes[start..end]).expect("ascii digits");
    let value = text
        .parse::<u32>()
        .map_err(|_| PgmError::MalformedHeader(format!("{what} out of range: {text}")))?;
    Ok((value, end))
}

fn parse_header(bytes: &[u8]) -> Result<Header, PgmError> {
    if bytes.len() < 2 {
        return Err(PgmError::MalformedHeader("file shorter than magic number".into()));
    }
    let binary = match &bytes[..2] {
        b"P5" => true,
        b"P2" => false,
        other => return Err(PgmError::UnsupportedFormat(String::from_utf8_lossy(other).into_owned())),
    };
    let (width, pos) = read_uint(bytes, 2, "width")?;
    let (height, pos) = read_uint(bytes, pos, "height")?;
    let (maxval, pos) = read_uint(bytes, pos, "maxval")?;
    if width == 0 || height == 0 {
        return Err(PgmError::MalformedHeader(format!("zero dimension {width}x{height}")));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(PgmError::MalformedHeader(format!("maxval {maxval} outside 1..=65535")));
    }
    // Exactly one whitespace byte separates the header from a binary raster.
    if (pos >= bytes.len() || !bytes[pos].is_ascii_whitespace())
        && (binary || pos < bytes.len()) {
            return Err(PgmError::MalformedHeader("missing whitespace after maxval".into()));
        }
    Ok(Header {
        binary,
        width: width as usize,
        height: height as usize,
        maxval,
        data_start: pos + 1,
    })
}

/// Decodes an in-memory PGM file.
pub fn decode_pgm<T: Real>(bytes: &[u8]) -> Result<GrayImage<T>, PgmError> {
    let header = parse_header(bytes)?;
    let n = header.width * header.height;
    let mut samples = Vec::with_capacity(n);
    if header.binary {
        let raster = bytes.get(header.data_start..).unwrap_or(&[]);
        if header.maxval < 256 {
            if raster.len() < n {
                return Err(PgmError::Truncated {
                    expected: n,
                    found: raster.len(),
                });
            }
            samples.extend(raster[..n].iter().map(|&b| b as u32));
        } else {
            if raster.len() < 2 * n {
                return Err(PgmError::Truncated {
                    expected: n,
                    found: raster.len() / 2,
                });
            }
            samples.extend(raster[..2 * n].chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]]) as u32));
        }
    } else {
        let mut pos = header.data_start.min(bytes.len());
        while samples.len() < n {
            match read_uint(bytes, pos, "sample") {
                Ok((v, next)) => {
                    samples.push(v);
                    pos = next;
                }
                Err(_) if skip_whitespace_and_comments(bytes, pos) >= bytes.len() => {
                    return Err(PgmError::Truncated {
                        expected: n,
                        found: samples.len(),
                    })
                }
                Err(e) => return Err(e),
            }
        }
    }
    if let Some(&value) = samples.iter().find(|&&v| v > header.maxval) {
        return Err(PgmError::SampleOutOfRange {
            value,
            maxval: header.maxval,
        });
    }
    let data = samples
        .into_iter()
        .map(|v| {
            if header.maxval == 255 {
                T::from_u32(v).expect("u8 representable")
            } else {
                T::lit(v as f64 * 255.0 / header.maxval as f64)
            }
        })
        .collect();
    Ok(GrayImage::new(header.width, header.height, data).expect("decoded raster is valid"))
}

/// Reads a PGM file from disk.
pub fn load_pgm<T: Real>(path: impl AsRef<Path>) -> Result<GrayImage<T>, PgmError> {
    decode_pgm(&fs::read(path)?)
}

/// Quantizes to 8 bits: round half away from zero, clamp to `[0, 255]`.
pub fn quantize<T: Real>(v: T) -> u8 {
    v.to_f64_lossy().round().clamp(0.0, 255.0) as u8
}

/// Encodes as binary `P5`, `maxval` 255.
pub fn encode_pgm<T: Real>(image: &GrayImage<T>) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", image.width(), image.height()).into_bytes();
    out.extend(image.data().iter().map(|&v| quantize(v)));
    out
}

pub fn save_pgm<T: Real>(image: &GrayImage<T>, path: impl AsRef<Path>) -> Result<(), PgmError> {
    fs::write(path, encode_pgm(image))?;
    Ok(())
}

//! Shared on-disk container: one JSON header line carrying a magic tag and
//! model metadata, followed by raw little-endian tables. Loaders check the
//! magic and version before touching the payload.

use std::io::{self, BufRead, Read, Write};

use serde::{de::DeserializeOwned, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ContainerError {
    #[error("io error: {0}")]
    Io(#[from] io::Error),
    #[error("bad header: {0}")]
    BadHeader(String),
    #[error("magic mismatch: expected {expected}, found {found}")]
    MagicMismatch { expected: String, found: String },
    #[error("payload truncated: wanted {wanted} bytes, got {got}")]
    Truncated { wanted: usize, got: usize },
}

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, serde::Deserialize)]
struct Envelope<H> {
    magic: String,
    version: u32,
    #[serde(flatten)]
    header: H,
}

/// Write the header line. Table payloads follow via the writer.
pub fn write_header<W: Write, H: Serialize>(
    w: &mut W,
    magic: &str,
    header: &H,
) -> Result<(), ContainerError> {
    let envelope = Envelope {
        magic: magic.to_string(),
        version: FORMAT_VERSION,
        header,
    };
    let line = serde_json::to_string(&envelope)
        .map_err(|e| ContainerError::BadHeader(e.to_string()))?;
    w.write_all(line.as_bytes())?;
    w.write_all(b"\n")?;
    Ok(())
}

/// Read and validate the header line.
pub fn read_header<R: BufRead, H: DeserializeOwned>(
    r: &mut R,
    magic: &str,
) -> Result<H, ContainerError> {
    let mut line = String::new();
    r.read_line(&mut line)?;
    let envelope: Envelope<H> = serde_json::from_str(line.trim_end())
        .map_err(|e| ContainerError::BadHeader(e.to_string()))?;
    if envelope.magic != magic {
        return Err(ContainerError::MagicMismatch {
            expected: magic.to_string(),
            found: envelope.magic,
        });
    }
    if envelope.version != FORMAT_VERSION {
        return Err(ContainerError::BadHeader(format!(
            "unsupported version {}",
            envelope.version
        )));
    }
    Ok(envelope.header)
}

/// Row-major f64 values written as little-endian f32.
pub fn write_f32_table<W: Write>(w: &mut W, values: &[f64]) -> Result<(), ContainerError> {
    let mut buf = Vec::with_capacity(values.len() * 4);
    for &v in values {
        buf.extend_from_slice(&(v as f32).to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_f32_table<R: Read>(r: &mut R, len: usize) -> Result<Vec<f64>, ContainerError> {
    let mut buf = vec![0u8; len * 4];
    read_exactly(r, &mut buf)?;
    Ok(buf
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect())
}

/// Non-negative counts written as little-endian i32.
pub fn write_i32_table<W: Write>(w: &mut W, values: &[u32]) -> Result<(), ContainerError> {
    let mut buf = Vec::with_capacity(values.len() * 4);
    for &v in values {
        buf.extend_from_slice(&(v as i32).to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_i32_table<R: Read>(r: &mut R, len: usize) -> Result<Vec<u32>, ContainerError> {
    let mut buf = vec![0u8; len * 4];
    read_exactly(r, &mut buf)?;
    buf.chunks_exact(4)
        .map(|c| {
            let v = i32::from_le_bytes([c[0], c[1], c[2], c[3]]);
            if v < 0 {
                Err(ContainerError::BadHeader(format!("negative count {v}")))
            } else {
                Ok(v as u32)
            }
        })
        .collect()
}

fn read_exactly<R: Read>(r: &mut R, buf: &mut [u8]) -> Result<(), ContainerError> {
    let mut got = 0;
    while got < buf.len() {
        match r.read(&mut buf[got..])? {
            0 => {
                return Err(ContainerError::Truncated {
                    wanted: buf.len(),
                    got,
                })
            }
            n => got += n,
        }
    }
    Ok(())
}

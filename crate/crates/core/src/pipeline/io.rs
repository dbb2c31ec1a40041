//! Stream ingestion and the binary side formats.
//!
//! Sample formats: `f64le` (8-byte IEEE-754 little-endian), `i16le` (signed
//! 16-bit little-endian, converted to real) and `csv` (one decimal per line,
//! blank lines and lines starting with '#' ignored). Non-finite values are
//! rejected with their offset.
//!
//! Bit files are packed most-significant-bit first behind an 8-byte
//! little-endian bit-count header.

use crate::error::{Error, Result};
use crate::series::Series;
use std::io::{Read, Write};
use std::path::Path;

/// Input sample encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputFormat {
    F64le,
    I16le,
    Csv,
}

impl std::str::FromStr for InputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "f64le" => Ok(Self::F64le),
            "i16le" => Ok(Self::I16le),
            "csv" => Ok(Self::Csv),
            other => Err(Error::InvalidConfig {
                reason: format!("unknown format {other:?}; expected f64le, i16le or csv"),
            }),
        }
    }
}

/// Decode raw bytes into sample values.
pub fn decode_values(bytes: &[u8], format: InputFormat) -> Result<Vec<f64>> {
    match format {
        InputFormat::F64le => {
            if !bytes.len().is_multiple_of(8) {
                return Err(Error::ParseError {
                    line: 0,
                    reason: format!("f64le payload of {} bytes is not a multiple of 8", bytes.len()),
                });
            }
            let mut values = Vec::with_capacity(bytes.len() / 8);
            for (i, chunk) in bytes.chunks_exact(8).enumerate() {
                let v = f64::from_le_bytes(chunk.try_into().expect("8-byte chunk"));
                if !v.is_finite() {
                    return Err(Error::NonFiniteValue {
                        offset: format!("byte offset {}", i * 8),
                    });
                }
                values.push(v);
            }
            Ok(values)
        }
        InputFormat::I16le => {
            if !bytes.len().is_multiple_of(2) {
                return Err(Error::ParseError {
                    line: 0,
                    reason: format!("i16le payload of {} bytes is not a multiple of 2", bytes.len()),
                });
            }
            Ok(bytes
                .chunks_exact(2)
                .map(|c| i16::from_le_bytes([c[0], c[1]]) as f64)
                .collect())
        }
        InputFormat::Csv => {
            let text = std::str::from_utf8(bytes).map_err(|e| Error::ParseError {
                line: 0,
                reason: format!("input is not valid UTF-8: {e}"),
            })?;
            let mut values = Vec::new();
            for (lineno, line) in text.lines().enumerate() {
                let trimmed = line.trim();
                if trimmed.is_empty() || trimmed.starts_with('#') {
                    continue;
                }
                let v: f64 = trimmed.parse().map_err(|e| Error::ParseError {
                    line: lineno + 1,
                    reason: format!("{e}: {trimmed:?}"),
                })?;
                if !v.is_finite() {
                    return Err(Error::NonFiniteValue {
                        offset: format!("line {}", lineno + 1),
                    });
                }
                values.push(v);
            }
            Ok(values)
        }
    }
}

/// Read a whole file as a series.
pub fn ingest(path: &Path, format: InputFormat) -> Result<Series> {
    Series::new(decode_values(&std::fs::read(path)?, format)?)
}

/// Write samples in the pipeline's binary format (f64le).
pub fn write_f64le(path: &Path, values: &[f64]) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    for v in values {
        out.write_all(&v.to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

/// Pack bits (values 0/1) MSB-first behind an 8-byte LE bit-count header.
pub fn encode_bit_file(bits: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + bits.len().div_ceil(8));
    out.extend_from_slice(&(bits.len() as u64).to_le_bytes());
    for chunk in bits.chunks(8) {
        let mut byte = 0u8;
        for (i, &b) in chunk.iter().enumerate() {
            byte |= (b & 1) << (7 - i);
        }
        out.push(byte);
    }
    out
}

/// Inverse of [`encode_bit_file`].
pub fn decode_bit_file(bytes: &[u8]) -> Result<Vec<u8>> {
    if bytes.len() < 8 {
        return Err(Error::ParseError {
            line: 0,
            reason: "bit file shorter than its 8-byte header".into(),
        });
    }
    let count = u64::from_le_bytes(bytes[..8].try_into().expect("8 bytes")) as usize;
    let payload = &bytes[8..];
    if payload.len() < count.div_ceil(8) {
        return Err(Error::ParseError {
            line: 0,
            reason: format!(
                "bit file payload holds {} bytes, header wants {} bits",
                payload.len(),
                count
            ),
        });
    }
    let mut bits = Vec::with_capacity(count);
    for i in 0..count {
        bits.push((payload[i / 8] >> (7 - i % 8)) & 1);
    }
    Ok(bits)
}

pub fn write_bit_file(path: &Path, bits: &[u8]) -> Result<()> {
    std::fs::write(path, encode_bit_file(bits))?;
    Ok(())
}

pub fn read_bit_file(path: &Path) -> Result<Vec<u8>> {
    decode_bit_file(&std::fs::read(path)?)
}

/// Streaming chunk reader for monitor mode.
pub struct ChunkReader<R: Read> {
    reader: R,
    format: InputFormat,
    chunk_size: usize,
    csv_buffer: String,
    csv_line: usize,
    done: bool,
}

impl<R: Read> ChunkReader<R> {
    pub fn new(reader: R, format: InputFormat, chunk_size: usize) -> Self {
        Self {
            reader,
            format,
            chunk_size,
            csv_buffer: String::new(),
            csv_line: 0,
            done: false,
        }
    }

    /// Next full chunk of `chunk_size` values; a trailing partial chunk is
    /// discarded. Decode errors are returned per chunk so the caller can mark
    /// the chunk errored and continue.
    pub fn next_chunk(&mut self) -> Option<Result<Vec<f64>>> {
        if self.done {
            return None;
        }
        match self.format {
            InputFormat::F64le | InputFormat::I16le => {
                let width = if self.format == InputFormat::F64le { 8 } else { 2 };
                let mut buf = vec![0u8; self.chunk_size * width];
                let mut filled = 0usize;
                while filled < buf.len() {
                    match self.reader.read(&mut buf[filled..]) {
                        Ok(0) => break,
                        Ok(k) => filled += k,
                        Err(e) => {
                            self.done = true;
                            return Some(Err(e.into()));
                        }
                    }
                }
                if filled < buf.len() {
                    self.done = true;
                    return None; // trailing partial chunk dropped
                }
                Some(decode_values(&buf, self.format))
            }
            InputFormat::Csv => {
                // Accumulate the remainder of the text stream once.
                if self.csv_line == 0 {
                    if let Err(e) = self.reader.read_to_string(&mut self.csv_buffer) {
                        self.done = true;
                        return Some(Err(e.into()));
                    }
                    self.csv_line = 1;
                }
                let mut values = Vec::with_capacity(self.chunk_size);
                let mut consumed = 0usize;
                for line in self.csv_buffer.lines().skip(self.csv_line - 1) {
                    consumed += 1;
                    let trimmed = line.trim();
                    if trimmed.is_empty() || trimmed.starts_with('#') {
                        continue;
                    }
                    match trimmed.parse::<f64>() {
                        Ok(v) if v.is_finite() => values.push(v),
                        Ok(_) => {
                            self.csv_line += consumed;
                            return Some(Err(Error::NonFiniteValue {
                                offset: format!("line {}", self.csv_line - 1),
                            }));
                        }
                        Err(e) => {
                            self.csv_line += consumed;
                            return Some(Err(Error::ParseError {
                                line: self.csv_line - 1,
                                reason: e.to_string(),
                            }));
                        }
                    }
                    if values.len() == self.chunk_size {
                        self.csv_line += consumed;
                        return Some(Ok(values));
                    }
                }
                self.done = true;
                None
            }
        }
    }
}

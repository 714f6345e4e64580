//! The FGR1 binary grid format.
//!
//! | offset | size | field |
//! |-------:|-----:|-------|
//! | 0  | 4  | magic `FGR1` |
//! | 4  | 1  | dtype: 0 bit-packed labels, 1 f32 scores, 2 f32 feature stack |
//! | 5  | 4  | `n_times` (u32 LE) |
//! | 9  | 4  | `n_rows` (u32 LE) |
//! | 13 | 4  | `n_cols` (u32 LE) |
//! | 17 | 12 | reserved; dtype 2 stores the channel count (u32 LE) in bytes 17..21, all else zero |
//!
//! Payloads are time-major, row-major within a slice. Labels are packed
//! least-significant bit first and each time slice is zero-padded to a byte
//! boundary. Feature stacks are laid out `(t, channel, row, col)`.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{GridSpec, LabelField, ScoreField};
use crate::heads::FeatureStack;

pub const MAGIC: &[u8; 4] = b"FGR1";
pub const HEADER_LEN: usize = 29;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Dtype {
    Labels = 0,
    Scores = 1,
    Features = 2,
}

impl Dtype {
    fn from_code(code: u8) -> Result<Self> {
        match code {
            0 => Ok(Dtype::Labels),
            1 => Ok(Dtype::Scores),
            2 => Ok(Dtype::Features),
            other => Err(Error::UnsupportedDtype(other)),
        }
    }

    fn name(self) -> &'static str {
        match self {
            Dtype::Labels => "labels",
            Dtype::Scores => "scores",
            Dtype::Features => "features",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridFileHeader {
    pub dtype: Dtype,
    pub n_times: u32,
    pub n_rows: u32,
    pub n_cols: u32,
    /// Feature channels; 1 for labels and scores.
    pub channels: u32,
}

impl GridFileHeader {
    fn for_spec(dtype: Dtype, spec: &GridSpec, channels: u32) -> Self {
        Self { dtype, n_times: spec.n_times(), n_rows: spec.n_rows(), n_cols: spec.n_cols(), channels }
    }

    pub fn encode(&self) -> [u8; HEADER_LEN] {
        let mut h = [0u8; HEADER_LEN];
        h[..4].copy_from_slice(MAGIC);
        h[4] = self.dtype as u8;
        h[5..9].copy_from_slice(&self.n_times.to_le_bytes());
        h[9..13].copy_from_slice(&self.n_rows.to_le_bytes());
        h[13..17].copy_from_slice(&self.n_cols.to_le_bytes());
        if self.dtype == Dtype::Features {
            h[17..21].copy_from_slice(&self.channels.to_le_bytes());
        }
        h
    }

    pub fn decode(bytes: &[u8], path: &Path) -> Result<Self> {
        if bytes.len() < 4 || &bytes[..4] != MAGIC {
            return Err(Error::BadMagic { path: path.into() });
        }
        if bytes.len() < HEADER_LEN {
            return Err(Error::TruncatedPayload {
                path: path.into(),
                expected: HEADER_LEN as u64,
                found: bytes.len() as u64,
            });
        }
        let u32_at = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().expect("4 bytes"));
        let dtype = Dtype::from_code(bytes[4])?;
        let channels = if dtype == Dtype::Features { u32_at(17) } else { 1 };
        let reserved_from = if dtype == Dtype::Features { 21 } else { 17 };
        if bytes[reserved_from..HEADER_LEN].iter().any(|&b| b != 0) {
            return Err(Error::InvalidGrid("reserved header bytes must be zero".into()));
        }
        if channels == 0 {
            return Err(Error::InvalidGrid("feature file with zero channels".into()));
        }
        Ok(Self { dtype, n_times: u32_at(5), n_rows: u32_at(9), n_cols: u32_at(13), channels })
    }

    pub fn spec(&self) -> Result<GridSpec> {
        GridSpec::new(self.n_times, self.n_rows, self.n_cols)
    }

    /// Payload bytes implied by the header.
    pub fn payload_len(&self) -> u64 {
        let slice = self.n_rows as u64 * self.n_cols as u64;
        match self.dtype {
            Dtype::Labels => self.n_times as u64 * slice.div_ceil(8),
            Dtype::Scores => self.n_times as u64 * slice * 4,
            Dtype::Features => self.n_times as u64 * slice * self.channels as u64 * 4,
        }
    }
}

/// Decoded contents of a grid file.
#[derive(Debug, Clone, PartialEq)]
pub enum GridData {
    Labels(LabelField),
    Scores(ScoreField),
    Features(FeatureStack),
}

fn f32_payload(values: &[f32]) -> impl Iterator<Item = u8> + '_ {
    values.iter().flat_map(|v| v.to_le_bytes())
}

pub fn encode_scores(field: &ScoreField) -> Vec<u8> {
    let mut out = GridFileHeader::for_spec(Dtype::Scores, field.spec(), 1).encode().to_vec();
    out.extend(f32_payload(field.values()));
    out
}

pub fn encode_features(stack: &FeatureStack) -> Vec<u8> {
    let header = GridFileHeader::for_spec(Dtype::Features, stack.spec(), stack.channels() as u32);
    let mut out = header.encode().to_vec();
    out.extend(f32_payload(stack.values()));
    out
}

pub fn encode_labels(field: &LabelField) -> Vec<u8> {
    let spec = field.spec();
    let header = GridFileHeader::for_spec(Dtype::Labels, spec, 1);
    let mut out = header.encode().to_vec();
    out.reserve(header.payload_len() as usize);
    for slice in field.values().chunks_exact(spec.slice_len()) {
        for chunk in slice.chunks(8) {
            out.push(chunk.iter().enumerate().fold(0u8, |b, (i, &y)| b | ((y as u8) << i)));
        }
    }
    out
}

/// Parses a complete file image. Nothing is returned unless the payload
/// length matches the header exactly.
pub fn decode_grid(bytes: &[u8], path: &Path) -> Result<GridData> {
    let header = GridFileHeader::decode(bytes, path)?;
    let spec = header.spec()?;
    let expected = header.payload_len();
    let found = (bytes.len() - HEADER_LEN) as u64;
    if found < expected {
        return Err(Error::TruncatedPayload { path: path.into(), expected, found });
    }
    if found > expected {
        return Err(Error::InvalidGrid(format!(
            "{}: {} trailing bytes after the payload",
            path.display(),
            found - expected
        )));
    }
    let payload = &bytes[HEADER_LEN..];
    let floats = || -> Vec<f32> {
        payload.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes"))).collect()
    };
    match header.dtype {
        Dtype::Scores => Ok(GridData::Scores(ScoreField::new(spec, floats())?)),
        Dtype::Features => Ok(GridData::Features(FeatureStack::new(spec, header.channels as usize, floats())?)),
        Dtype::Labels => {
            let slice = spec.slice_len();
            let mut values = Vec::with_capacity(spec.total_cells());
            for packed in payload.chunks_exact(slice.div_ceil(8)) {
                values.extend((0..slice).map(|i| packed[i / 8] >> (i % 8) & 1 == 1));
            }
            Ok(GridData::Labels(LabelField::new(spec, values)?))
        }
    }
}

pub fn read_grid(path: impl AsRef<Path>) -> Result<GridData> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_grid(&bytes, path)
}

fn wrong_kind(path: &Path, want: Dtype, got: &GridData) -> Error {
    let got = match got {
        GridData::Labels(_) => Dtype::Labels,
        GridData::Scores(_) => Dtype::Scores,
        GridData::Features(_) => Dtype::Features,
    };
    Error::ShapeError(format!("{} holds {}, expected {}", path.display(), got.name(), want.name()))
}

/// Reads scores; a label file is also accepted and read as 0/1 scores.
pub fn read_scores(path: impl AsRef<Path>) -> Result<ScoreField> {
    let path = path.as_ref();
    match read_grid(path)? {
        GridData::Scores(f) => Ok(f),
        GridData::Labels(y) => ScoreField::new(*y.spec(), y.values().iter().map(|&v| v as u8 as f32).collect()),
        other => Err(wrong_kind(path, Dtype::Scores, &other)),
    }
}

/// Reads labels; a score file whose values are all 0 or 1 is also accepted.
pub fn read_labels(path: impl AsRef<Path>) -> Result<LabelField> {
    let path = path.as_ref();
    match read_grid(path)? {
        GridData::Labels(f) => Ok(f),
        GridData::Scores(s) if s.values().iter().all(|&v| v == 0.0 || v == 1.0) => {
            LabelField::new(*s.spec(), s.values().iter().map(|&v| v == 1.0).collect())
        }
        other => Err(wrong_kind(path, Dtype::Labels, &other)),
    }
}

pub fn read_features(path: impl AsRef<Path>) -> Result<FeatureStack> {
    let path = path.as_ref();
    match read_grid(path)? {
        GridData::Features(f) => Ok(f),
        other => Err(wrong_kind(path, Dtype::Features, &other)),
    }
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn write_scores(field: &ScoreField, path: impl AsRef<Path>) -> Result<()> {
    write_bytes(path.as_ref(), &encode_scores(field))
}

pub fn write_labels(field: &LabelField, path: impl AsRef<Path>) -> Result<()> {
    write_bytes(path.as_ref(), &encode_labels(field))
}

pub fn write_features(stack: &FeatureStack, path: impl AsRef<Path>) -> Result<()> {
    write_bytes(path.as_ref(), &encode_features(stack))
}

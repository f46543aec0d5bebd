//! Minimal NPY (v1.0/v2.0) reader and canonical v1.0 writer.
//!
//! Supports C-order arrays of `|u1`, `<f4`, `<f8` and `<i8` only — exactly
//! what the corrupted-benchmark datasets ship in plus what we persist
//! ourselves. Fortran order is rejected. The writer always emits a v1.0
//! header padded to a 64-byte boundary, so write -> read -> write is
//! byte-identical.

use std::fs;
use std::path::Path;

use crate::{Error, Result};

const MAGIC: &[u8; 6] = b"\x93NUMPY";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dtype {
    U1,
    F4,
    F8,
    I8,
}

impl Dtype {
    fn descr(self) -> &'static str {
        match self {
            Dtype::U1 => "|u1",
            Dtype::F4 => "<f4",
            Dtype::F8 => "<f8",
            Dtype::I8 => "<i8",
        }
    }

    fn size(self) -> usize {
        match self {
            Dtype::U1 => 1,
            Dtype::F4 => 4,
            Dtype::F8 => 8,
            Dtype::I8 => 8,
        }
    }

    fn parse(descr: &str) -> Result<Self> {
        match descr {
            "|u1" | "u1" | "<u1" => Ok(Dtype::U1),
            "<f4" => Ok(Dtype::F4),
            "<f8" => Ok(Dtype::F8),
            "<i8" => Ok(Dtype::I8),
            other => Err(Error::Format(format!("unsupported npy dtype '{other}'"))),
        }
    }
}

/// An in-memory array with its on-disk element type.
///
/// Values are held as `f64` regardless of dtype; `u1` elements are the raw
/// byte values 0..=255 (scaling to [0,1] is the caller's policy).
#[derive(Debug, Clone, PartialEq)]
pub struct NpyArray {
    pub shape: Vec<usize>,
    pub dtype: Dtype,
    pub data: Vec<f64>,
}

impl NpyArray {
    pub fn new(shape: Vec<usize>, dtype: Dtype, data: Vec<f64>) -> Result<Self> {
        let expected: usize = shape.iter().product();
        if data.len() != expected {
            return Err(Error::Format(format!(
                "npy shape {shape:?} implies {expected} elements, got {}",
                data.len()
            )));
        }
        Ok(Self { shape, dtype, data })
    }
}

pub fn read(path: &Path) -> Result<NpyArray> {
    let bytes = fs::read(path)?;
    read_bytes(&bytes).map_err(|e| match e {
        Error::Format(msg) => Error::Format(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn read_bytes(bytes: &[u8]) -> Result<NpyArray> {
    if bytes.len() < 10 || &bytes[..6] != MAGIC {
        return Err(Error::Format("bad npy magic".into()));
    }
    let major = bytes[6];
    let (header_len, data_start) = match major {
        1 => {
            let len = u16::from_le_bytes([bytes[8], bytes[9]]) as usize;
            (len, 10)
        }
        2 => {
            if bytes.len() < 12 {
                return Err(Error::Format("truncated npy v2 header".into()));
            }
            let len = u32::from_le_bytes([bytes[8], bytes[9], bytes[10], bytes[11]]) as usize;
            (len, 12)
        }
        v => return Err(Error::Format(format!("unsupported npy version {v}"))),
    };
    let header_end = data_start + header_len;
    if bytes.len() < header_end {
        return Err(Error::Format("truncated npy header".into()));
    }
    let header = std::str::from_utf8(&bytes[data_start..header_end])
        .map_err(|_| Error::Format("npy header is not utf-8".into()))?;

    let descr = dict_str_value(header, "descr")?;
    let dtype = Dtype::parse(&descr)?;
    let fortran = dict_raw_value(header, "fortran_order")?;
    match fortran.as_str() {
        "False" => {}
        "True" => return Err(Error::Format("fortran_order npy files are not supported".into())),
        other => return Err(Error::Format(format!("bad fortran_order value '{other}'"))),
    }
    let shape = parse_shape(&dict_raw_value(header, "shape")?)?;

    let n: usize = shape.iter().product();
    let payload = &bytes[header_end..];
    if payload.len() != n * dtype.size() {
        return Err(Error::Format(format!(
            "npy payload has {} bytes, expected {} for shape {shape:?}",
            payload.len(),
            n * dtype.size()
        )));
    }
    let data: Vec<f64> = match dtype {
        Dtype::U1 => payload.iter().map(|&b| b as f64).collect(),
        Dtype::F4 => payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect(),
        Dtype::F8 => payload
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect(),
        Dtype::I8 => payload
            .chunks_exact(8)
            .map(|c| i64::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect(),
    };
    NpyArray::new(shape, dtype, data)
}

pub fn write(path: &Path, array: &NpyArray) -> Result<()> {
    fs::write(path, to_bytes(array))?;
    Ok(())
}

pub fn to_bytes(array: &NpyArray) -> Vec<u8> {
    let shape_str = match array.shape.len() {
        1 => format!("({},)", array.shape[0]),
        _ => format!(
            "({})",
            array
                .shape
                .iter()
                .map(|d| d.to_string())
                .collect::<Vec<_>>()
                .join(", ")
        ),
    };
    let mut header = format!(
        "{{'descr': '{}', 'fortran_order': False, 'shape': {}, }}",
        array.dtype.descr(),
        shape_str
    );
    // pad so that magic + version + len field + header is a multiple of 64
    let unpadded = 10 + header.len() + 1;
    let pad = (64 - unpadded % 64) % 64;
    header.push_str(&" ".repeat(pad));
    header.push('\n');

    let mut out = Vec::with_capacity(10 + header.len() + array.data.len() * array.dtype.size());
    out.extend_from_slice(MAGIC);
    out.push(1);
    out.push(0);
    out.extend_from_slice(&(header.len() as u16).to_le_bytes());
    out.extend_from_slice(header.as_bytes());
    for &x in &array.data {
        match array.dtype {
            Dtype::U1 => out.push(x as u8),
            Dtype::F4 => out.extend_from_slice(&(x as f32).to_le_bytes()),
            Dtype::F8 => out.extend_from_slice(&x.to_le_bytes()),
            Dtype::I8 => out.extend_from_slice(&(x as i64).to_le_bytes()),
        }
    }
    out
}

/// Extract a quoted string value from the header dict literal.
fn dict_str_value(header: &str, key: &str) -> Result<String> {
    let raw = dict_raw_value(header, key)?;
    let trimmed = raw.trim_matches(|c| c == '\'' || c == '"');
    Ok(trimmed.to_string())
}

/// Extract the raw token(s) following `'key':` up to the next top-level comma.
fn dict_raw_value(header: &str, key: &str) -> Result<String> {
    let pat = format!("'{key}'");
    let start = header
        .find(&pat)
        .ok_or_else(|| Error::Format(format!("npy header missing key '{key}'")))?;
    let after = &header[start + pat.len()..];
    let after = after
        .strip_prefix(':')
        .or_else(|| after.trim_start().strip_prefix(':'))
        .ok_or_else(|| Error::Format(format!("npy header key '{key}' not followed by ':'")))?;
    let mut depth = 0usize;
    let mut value = String::new();
    for c in after.chars() {
        match c {
            '(' | '[' => depth += 1,
            ')' | ']' if depth > 0 => depth -= 1,
            ',' | '}' if depth == 0 => break,
            _ => {}
        }
        value.push(c);
    }
    Ok(value.trim().to_string())
}

fn parse_shape(token: &str) -> Result<Vec<usize>> {
    let inner = token
        .strip_prefix('(')
        .and_then(|s| s.strip_suffix(')'))
        .ok_or_else(|| Error::Format(format!("bad npy shape token '{token}'")))?;
    inner
        .split(',')
        .map(|s| s.trim())
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<usize>()
                .map_err(|_| Error::Format(format!("bad npy shape dimension '{s}'")))
        })
        .collect()
}

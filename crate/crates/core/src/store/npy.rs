//! Minimal NPY (format version 1.0) codec for 2-D float matrices.
//!
//! Reads little-endian `<f4` and `<f8` in C order; `<f8` is narrowed to `f32`.
//! Always writes `<f4` with the header padded so the payload starts on a
//! 64-byte boundary, matching what NumPy itself emits.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

pub const MAGIC: &[u8; 6] = b"\x93NUMPY";
const ALIGN: usize = 64;

/// Element type found in a file's header.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Descriptor {
    F4,
    F8,
}

impl Descriptor {
    fn parse(descr: &str) -> Result<Self> {
        match descr {
            "<f4" => Ok(Descriptor::F4),
            "<f8" => Ok(Descriptor::F8),
            other => Err(Error::UnsupportedDescriptor(format!("descr {other:?}"))),
        }
    }

    fn width(self) -> usize {
        match self {
            Descriptor::F4 => 4,
            Descriptor::F8 => 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Value {
    Str(String),
    Bool(bool),
    Tuple(Vec<usize>),
}

/// Parser for the Python dict literal inside the header.
struct DictParser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> DictParser<'a> {
    fn new(src: &'a str) -> Self {
        DictParser {
            src: src.as_bytes(),
            pos: 0,
        }
    }

    fn err(&self, msg: &str) -> Error {
        Error::MalformedHeader(format!("{msg} at byte {}", self.pos))
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(&format!("expected '{}'", c as char)))
        }
    }

    fn string(&mut self) -> Result<String> {
        let quote = match self.peek() {
            Some(q @ (b'\'' | b'"')) => q,
            _ => return Err(self.err("expected string")),
        };
        self.pos += 1;
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos] != quote {
            if self.src[self.pos] == b'\\' {
                return Err(self.err("escape sequences are not supported"));
            }
            self.pos += 1;
        }
        if self.pos == self.src.len() {
            return Err(self.err("unterminated string"));
        }
        let s = std::str::from_utf8(&self.src[start..self.pos])
            .map_err(|_| self.err("non-utf8 string"))?
            .to_owned();
        self.pos += 1;
        Ok(s)
    }

    fn integer(&mut self) -> Result<usize> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err("expected integer"));
        }
        // Python 2 era writers append `L` to longs.
        if self.src.get(self.pos) == Some(&b'L') {
            self.pos += 1;
        }
        std::str::from_utf8(&self.src[start..self.pos])
            .unwrap()
            .trim_end_matches('L')
            .parse()
            .map_err(|_| self.err("integer overflow"))
    }

    fn tuple(&mut self) -> Result<Vec<usize>> {
        self.expect(b'(')?;
        let mut items = Vec::new();
        loop {
            if self.peek() == Some(b')') {
                self.pos += 1;
                return Ok(items);
            }
            items.push(self.integer()?);
            match self.peek() {
                Some(b',') => self.pos += 1,
                Some(b')') => {}
                _ => return Err(self.err("expected ',' or ')' in shape")),
            }
        }
    }

    fn keyword(&mut self, word: &str) -> bool {
        self.skip_ws();
        if self.src[self.pos..].starts_with(word.as_bytes()) {
            self.pos += word.len();
            true
        } else {
            false
        }
    }

    fn value(&mut self) -> Result<Value> {
        match self.peek() {
            Some(b'\'' | b'"') => Ok(Value::Str(self.string()?)),
            Some(b'(') => Ok(Value::Tuple(self.tuple()?)),
            _ if self.keyword("True") => Ok(Value::Bool(true)),
            _ if self.keyword("False") => Ok(Value::Bool(false)),
            _ => Err(self.err("unsupported value")),
        }
    }

    fn dict(mut self) -> Result<Vec<(String, Value)>> {
        self.expect(b'{')?;
        let mut entries = Vec::new();
        loop {
            if self.peek() == Some(b'}') {
                self.pos += 1;
                break;
            }
            let key = self.string()?;
            self.expect(b':')?;
            let value = self.value()?;
            entries.push((key, value));
            match self.peek() {
                Some(b',') => self.pos += 1,
                Some(b'}') => {}
                _ => return Err(self.err("expected ',' or '}'")),
            }
        }
        if self.peek().is_some() {
            return Err(self.err("trailing data after dict"));
        }
        Ok(entries)
    }
}

#[derive(Debug)]
struct Header {
    descr: Descriptor,
    shape: Vec<usize>,
}

fn parse_header_dict(text: &str) -> Result<Header> {
    let mut descr = None;
    let mut fortran = None;
    let mut shape = None;
    for (key, value) in DictParser::new(text).dict()? {
        match (key.as_str(), value) {
            ("descr", Value::Str(s)) if descr.is_none() => descr = Some(s),
            ("fortran_order", Value::Bool(b)) if fortran.is_none() => fortran = Some(b),
            ("shape", Value::Tuple(t)) if shape.is_none() => shape = Some(t),
            (k, _) => {
                return Err(Error::MalformedHeader(format!(
                    "unexpected or duplicate key {k:?}"
                )))
            }
        }
    }
    let (Some(descr), Some(fortran), Some(shape)) = (descr, fortran, shape) else {
        return Err(Error::MalformedHeader(
            "header must define descr, fortran_order and shape".into(),
        ));
    };
    if fortran {
        return Err(Error::UnsupportedDescriptor(
            "fortran_order=True (column-major) is not supported".into(),
        ));
    }
    let descr = Descriptor::parse(&descr)?;
    if shape.len() != 2 {
        return Err(Error::ShapeError(shape));
    }
    Ok(Header { descr, shape })
}

fn read_exact_or_header<R: Read>(r: &mut R, buf: &mut [u8], what: &str) -> Result<()> {
    r.read_exact(buf)
        .map_err(|_| Error::MalformedHeader(format!("file too short for {what}")))
}

/// Reads a matrix from an NPY stream, reporting the on-disk element type.
pub fn read_npy<R: Read>(mut reader: R) -> Result<(Matrix, Descriptor)> {
    let mut magic = [0u8; 6];
    read_exact_or_header(&mut reader, &mut magic, "magic")?;
    if &magic != MAGIC {
        return Err(Error::MalformedHeader("bad magic".into()));
    }
    let mut version = [0u8; 2];
    read_exact_or_header(&mut reader, &mut version, "version")?;
    if version != [1, 0] {
        return Err(Error::MalformedHeader(format!(
            "version {}.{} is not supported, only 1.0",
            version[0], version[1]
        )));
    }
    let mut len = [0u8; 2];
    read_exact_or_header(&mut reader, &mut len, "header length")?;
    let mut text = vec![0u8; u16::from_le_bytes(len) as usize];
    read_exact_or_header(&mut reader, &mut text, "header dict")?;
    let text = std::str::from_utf8(&text)
        .map_err(|_| Error::MalformedHeader("header is not ASCII".into()))?;
    let header = parse_header_dict(text)?;

    let (rows, cols) = (header.shape[0], header.shape[1]);
    let count = rows
        .checked_mul(cols)
        .ok_or_else(|| Error::ShapeError(header.shape.clone()))?;
    let expected = count * header.descr.width();
    let mut payload = Vec::with_capacity(expected);
    reader
        .take(expected as u64)
        .read_to_end(&mut payload)
        .map_err(|e| Error::MalformedHeader(format!("payload read failed: {e}")))?;
    if payload.len() != expected {
        return Err(Error::TruncatedPayload {
            expected,
            found: payload.len(),
        });
    }
    let data: Vec<f32> = match header.descr {
        Descriptor::F4 => payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect(),
        Descriptor::F8 => payload
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()) as f32)
            .collect(),
    };
    Ok((Matrix::new(rows, cols, data)?, header.descr))
}

/// Reads an NPY file. `<f8` input is narrowed to `f32` with a logged warning.
pub fn read_matrix(path: impl AsRef<Path>) -> Result<Matrix> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let (matrix, descr) = read_npy(BufReader::new(file))?;
    if descr == Descriptor::F8 {
        log::warn!(
            "{}: float64 data narrowed to float32",
            path.display()
        );
    }
    Ok(matrix)
}

fn header_bytes(rows: usize, cols: usize) -> Vec<u8> {
    let dict = format!("{{'descr': '<f4', 'fortran_order': False, 'shape': ({rows}, {cols}), }}");
    // magic + version + u16 length + dict + padding + '\n'
    let unpadded = MAGIC.len() + 2 + 2 + dict.len() + 1;
    let padding = (ALIGN - unpadded % ALIGN) % ALIGN;
    let header_len = dict.len() + padding + 1;

    let mut out = Vec::with_capacity(unpadded + padding);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&[1, 0]);
    out.extend_from_slice(&(header_len as u16).to_le_bytes());
    out.extend_from_slice(dict.as_bytes());
    out.extend(std::iter::repeat_n(b' ', padding));
    out.push(b'\n');
    out
}

/// Writes `matrix` as NPY 1.0 `<f4` in C order.
pub fn write_npy<W: Write>(matrix: &Matrix, mut writer: W) -> std::io::Result<()> {
    writer.write_all(&header_bytes(matrix.rows(), matrix.cols()))?;
    for x in matrix.as_slice() {
        writer.write_all(&x.to_le_bytes())?;
    }
    writer.flush()
}

pub fn write_matrix(matrix: &Matrix, path: impl AsRef<Path>) -> Result<()> {
    if matrix.is_empty() {
        return Err(Error::EmptyMatrix {
            rows: matrix.rows(),
            cols: matrix.cols(),
        });
    }
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_npy(matrix, BufWriter::new(file)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn raw_file(descr: &str, fortran: &str, shape: &str, payload: &[u8]) -> Vec<u8> {
        let dict = format!("{{'descr': '{descr}', 'fortran_order': {fortran}, 'shape': {shape}, }}\n");
        let mut out = MAGIC.to_vec();
        out.extend_from_slice(&[1, 0]);
        out.extend_from_slice(&(dict.len() as u16).to_le_bytes());
        out.extend_from_slice(dict.as_bytes());
        out.extend_from_slice(payload);
        out
    }

    fn f4_bytes(v: &[f32]) -> Vec<u8> {
        v.iter().flat_map(|x| x.to_le_bytes()).collect()
    }

    #[test]
    fn reads_2x3_f4() {
        let vals = [1.0f32, -2.5, 3.25, 0.0, 1e-3, 7.0];
        let bytes = raw_file("<f4", "False", "(2, 3)", &f4_bytes(&vals));
        let (m, d) = read_npy(&bytes[..]).unwrap();
        assert_eq!(d, Descriptor::F4);
        assert_eq!((m.rows(), m.cols()), (2, 3));
        assert_eq!(m.as_slice(), &vals);
    }

    #[test]
    fn narrows_f8() {
        let vals = [0.1f64, -1.0 / 3.0, 12345.678];
        let payload: Vec<u8> = vals.iter().flat_map(|x| x.to_le_bytes()).collect();
        let bytes = raw_file("<f8", "False", "(1, 3)", &payload);
        let (m, d) = read_npy(&bytes[..]).unwrap();
        assert_eq!(d, Descriptor::F8);
        for (got, want) in m.as_slice().iter().zip(vals) {
            // widening the narrowed value must land on the f32 cast of the source
            assert_eq!(f64::from(*got), f64::from(want as f32));
        }
    }

    #[test]
    fn rejects_fortran_order() {
        let bytes = raw_file("<f4", "True", "(1, 1)", &f4_bytes(&[1.0]));
        assert!(matches!(
            read_npy(&bytes[..]),
            Err(Error::UnsupportedDescriptor(_))
        ));
    }

    #[test]
    fn rejects_other_descriptors() {
        for descr in [">f4", "<i4", "|u1", "<f2"] {
            let bytes = raw_file(descr, "False", "(1, 1)", &[0; 8]);
            assert!(
                matches!(read_npy(&bytes[..]), Err(Error::UnsupportedDescriptor(_))),
                "{descr}"
            );
        }
    }

    #[test]
    fn rejects_non_2d_shapes() {
        for shape in ["(4,)", "(1, 2, 2)", "()"] {
            let bytes = raw_file("<f4", "False", shape, &[0; 16]);
            assert!(
                matches!(read_npy(&bytes[..]), Err(Error::ShapeError(_))),
                "{shape}"
            );
        }
    }

    #[test]
    fn rejects_bad_magic_and_version() {
        let mut bytes = raw_file("<f4", "False", "(1, 1)", &[0; 4]);
        bytes[1] = b'X';
        assert!(matches!(read_npy(&bytes[..]), Err(Error::MalformedHeader(_))));

        let mut bytes = raw_file("<f4", "False", "(1, 1)", &[0; 4]);
        bytes[6] = 2;
        assert!(matches!(read_npy(&bytes[..]), Err(Error::MalformedHeader(_))));

        assert!(matches!(read_npy(&b"\x93NU"[..]), Err(Error::MalformedHeader(_))));
    }

    #[test]
    fn rejects_garbled_dict() {
        for dict in ["{'descr': '<f4'", "{'descr' '<f4'}", "[1, 2]", "{'descr': '<f4', 'fortran_order': False}"] {
            let mut bytes = MAGIC.to_vec();
            bytes.extend_from_slice(&[1, 0]);
            bytes.extend_from_slice(&(dict.len() as u16).to_le_bytes());
            bytes.extend_from_slice(dict.as_bytes());
            assert!(
                matches!(read_npy(&bytes[..]), Err(Error::MalformedHeader(_))),
                "{dict}"
            );
        }
    }

    #[test]
    fn truncated_payload() {
        let bytes = raw_file("<f4", "False", "(2, 2)", &f4_bytes(&[1.0, 2.0, 3.0]));
        assert!(matches!(
            read_npy(&bytes[..]),
            Err(Error::TruncatedPayload { expected: 16, found: 12 })
        ));
    }

    #[test]
    fn single_cell_layout() {
        let m = Matrix::new(1, 1, vec![0.5]).unwrap();
        let mut buf = Vec::new();
        write_npy(&m, &mut buf).unwrap();
        assert_eq!(buf.len(), 128 + 4);
        assert_eq!(buf[127], b'\n');
        assert_eq!(&buf[128..], &0.5f32.to_le_bytes());
        let (back, _) = read_npy(&buf[..]).unwrap();
        assert_eq!(back.as_slice()[0].to_bits(), 0.5f32.to_bits());
    }

    #[test]
    fn header_matches_numpy_text() {
        let h = header_bytes(2, 3);
        let text = std::str::from_utf8(&h[10..]).unwrap();
        assert!(text.starts_with("{'descr': '<f4', 'fortran_order': False, 'shape': (2, 3), }"));
        assert_eq!(h.len() % ALIGN, 0);
    }

    #[test]
    fn empty_matrix_is_not_written() {
        let dir = tempfile::tempdir().unwrap();
        let m = Matrix::new(0, 3, vec![]).unwrap();
        assert!(matches!(
            write_matrix(&m, dir.path().join("x.npy")),
            Err(Error::EmptyMatrix { .. })
        ));
    }

    proptest! {
        #[test]
        fn roundtrip_is_bit_exact(
            rows in 1usize..6,
            cols in 1usize..70,
            seed in prop::collection::vec(any::<u32>(), 420),
        ) {
            // arbitrary bit patterns, including NaN payloads and subnormals
            let data: Vec<f32> = seed.iter().cycle().take(rows * cols).map(|&b| f32::from_bits(b)).collect();
            let m = Matrix::new(rows, cols, data).unwrap();
            let mut buf = Vec::new();
            write_npy(&m, &mut buf).unwrap();
            let (back, _) = read_npy(&buf[..]).unwrap();
            prop_assert_eq!((back.rows(), back.cols()), (rows, cols));
            let a: Vec<u32> = m.as_slice().iter().map(|x| x.to_bits()).collect();
            let b: Vec<u32> = back.as_slice().iter().map(|x| x.to_bits()).collect();
            prop_assert_eq!(a, b);
        }
    }
}

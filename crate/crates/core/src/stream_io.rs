//! Embedding stream files.
//!
//! Binary: `"MXS1" | u32 n | u32 d | n*d f32`, little-endian, row-major.
//! CSV: one vector per line, `d` comma-separated decimals.
//!
//! [`StreamReader`] detects the format from the first four bytes and hands
//! out bounded row chunks, so a file of any length is consumed in one pass
//! with constant buffering.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};

pub const STREAM_MAGIC: &[u8; 4] = b"MXS1";
const BINARY_HEADER_LEN: u64 = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamFormat {
    Binary,
    Csv,
}

/// Formats a real with 17 significant digits (exact `f64` round trip).
pub fn fmt_real(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_binary<W: Write>(mut w: W, rows: &[f64], dim: usize) -> Result<()> {
    if dim == 0 || !rows.len().is_multiple_of(dim) {
        return Err(Error::Dimension {
            expected: dim,
            actual: rows.len(),
        });
    }
    let n = u32::try_from(rows.len() / dim).map_err(|_| Error::param("n exceeds u32"))?;
    let d = u32::try_from(dim).map_err(|_| Error::param("d exceeds u32"))?;
    w.write_all(STREAM_MAGIC)?;
    w.write_all(&n.to_le_bytes())?;
    w.write_all(&d.to_le_bytes())?;
    let mut buf = Vec::with_capacity(4 * dim);
    for row in rows.chunks(dim) {
        buf.clear();
        for v in row {
            buf.extend_from_slice(&(*v as f32).to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    Ok(())
}

pub fn write_csv<W: Write>(mut w: W, rows: &[f64], dim: usize) -> Result<()> {
    if dim == 0 || !rows.len().is_multiple_of(dim) {
        return Err(Error::Dimension {
            expected: dim,
            actual: rows.len(),
        });
    }
    let mut line = String::new();
    for row in rows.chunks(dim) {
        line.clear();
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                line.push(',');
            }
            line.push_str(&fmt_real(*v));
        }
        line.push('\n');
        w.write_all(line.as_bytes())?;
    }
    Ok(())
}

/// Single-pass chunked reader over either stream format.
#[derive(Debug)]
pub struct StreamReader<R> {
    inner: R,
    format: Option<StreamFormat>,
    dim: Option<usize>,
    remaining: Option<u64>,
    offset: u64,
    rows_read: u64,
    line: String,
    cell: Vec<u8>,
}

impl<R: BufRead> StreamReader<R> {
    /// Reads the header (binary) or nothing (CSV, whose dimension comes from
    /// the first line). A zero-length input is a valid empty stream of
    /// unknown dimension.
    pub fn new(mut inner: R) -> Result<Self> {
        let head = inner.fill_buf()?;
        let (empty, binary) = match head.first() {
            None => (true, false),
            Some(&b) => (false, b == b'M'),
        };
        let mut reader = Self {
            format: None,
            dim: None,
            remaining: None,
            offset: 0,
            rows_read: 0,
            line: String::new(),
            cell: Vec::new(),
            inner,
        };
        if empty {
            return Ok(reader);
        }
        if binary {
            let mut header = [0u8; BINARY_HEADER_LEN as usize];
            reader.read_exact(&mut header, "truncated stream header")?;
            if &header[..4] != STREAM_MAGIC {
                return Err(Error::format(0, "bad stream magic, expected \"MXS1\""));
            }
            let n = u32::from_le_bytes(header[4..8].try_into().unwrap());
            let d = u32::from_le_bytes(header[8..12].try_into().unwrap());
            if d == 0 {
                return Err(Error::format(8, "stream dimension d must be >= 1"));
            }
            reader.format = Some(StreamFormat::Binary);
            reader.dim = Some(d as usize);
            reader.remaining = Some(n as u64);
            reader.cell = vec![0u8; 4 * d as usize];
        } else {
            reader.format = Some(StreamFormat::Csv);
        }
        Ok(reader)
    }

    pub fn format(&self) -> Option<StreamFormat> {
        self.format
    }

    /// Known once the header or first CSV line has been read.
    pub fn dim(&self) -> Option<usize> {
        self.dim
    }

    /// Vector count announced by a binary header.
    pub fn declared_len(&self) -> Option<u64> {
        match self.format {
            Some(StreamFormat::Binary) => Some(self.remaining.unwrap_or(0) + self.rows_read),
            _ => None,
        }
    }

    pub fn rows_read(&self) -> u64 {
        self.rows_read
    }

    pub fn bytes_read(&self) -> u64 {
        self.offset
    }

    /// Replaces `buf` with up to `max_rows` vectors; returns how many were
    /// read (0 at end of stream).
    pub fn next_chunk(&mut self, max_rows: usize, buf: &mut Vec<f64>) -> Result<usize> {
        buf.clear();
        match self.format {
            None => Ok(0),
            Some(StreamFormat::Binary) => self.next_binary(max_rows, buf),
            Some(StreamFormat::Csv) => self.next_csv(max_rows, buf),
        }
    }

    fn next_binary(&mut self, max_rows: usize, buf: &mut Vec<f64>) -> Result<usize> {
        let remaining = self.remaining.unwrap_or(0);
        let rows = (max_rows as u64).min(remaining) as usize;
        let mut cell = std::mem::take(&mut self.cell);
        for _ in 0..rows {
            self.read_exact(&mut cell, "stream ends before the declared n vectors")?;
            buf.extend(
                cell.chunks_exact(4)
                    .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64),
            );
        }
        self.cell = cell;
        self.remaining = Some(remaining - rows as u64);
        self.rows_read += rows as u64;
        if self.remaining == Some(0) {
            let rest = self.inner.fill_buf()?;
            if !rest.is_empty() {
                return Err(Error::format(self.offset, "trailing bytes after the last vector"));
            }
        }
        Ok(rows)
    }

    fn next_csv(&mut self, max_rows: usize, buf: &mut Vec<f64>) -> Result<usize> {
        let mut rows = 0;
        while rows < max_rows {
            self.line.clear();
            let line_start = self.offset;
            let read = self.inner.read_line(&mut self.line)?;
            if read == 0 {
                break;
            }
            self.offset += read as u64;
            let text = self.line.trim();
            if text.is_empty() {
                continue;
            }
            let before = buf.len();
            for field in text.split(',') {
                let v: f64 = field.trim().parse().map_err(|_| {
                    Error::format(line_start, format!("cannot parse {field:?} as a number"))
                })?;
                buf.push(v);
            }
            let width = buf.len() - before;
            match self.dim {
                None => self.dim = Some(width),
                Some(d) if d != width => {
                    return Err(Error::format(
                        line_start,
                        format!("row has {width} values, expected {d}"),
                    ))
                }
                Some(_) => {}
            }
            rows += 1;
        }
        self.rows_read += rows as u64;
        Ok(rows)
    }

    fn read_exact(&mut self, out: &mut [u8], msg: &str) -> Result<()> {
        let mut filled = 0;
        let start = self.offset;
        while filled < out.len() {
            let avail = self.inner.fill_buf()?;
            if avail.is_empty() {
                return Err(Error::format(start, msg));
            }
            let take = avail.len().min(out.len() - filled);
            out[filled..filled + take].copy_from_slice(&avail[..take]);
            self.inner.consume(take);
            filled += take;
            self.offset += take as u64;
        }
        Ok(())
    }
}

/// Reads a whole stream into memory: `(rows, d)`.
pub fn read_all<R: BufRead>(inner: R) -> Result<(Vec<f64>, Option<usize>)> {
    let mut reader = StreamReader::new(inner)?;
    let mut all = Vec::new();
    let mut buf = Vec::new();
    while reader.next_chunk(4096, &mut buf)? > 0 {
        all.extend_from_slice(&buf);
    }
    Ok((all, reader.dim()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_round_trip() {
        let rows = vec![1.0, 0.0, 0.0, 1.0, 0.6, 0.8];
        let mut bytes = Vec::new();
        write_binary(&mut bytes, &rows, 2).unwrap();
        assert_eq!(&bytes[..4], b"MXS1");
        assert_eq!(bytes.len(), 12 + 6 * 4);
        let (back, d) = read_all(&bytes[..]).unwrap();
        assert_eq!(d, Some(2));
        for (a, b) in rows.iter().zip(&back) {
            assert_eq!(*a as f32 as f64, *b);
        }
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let rows = vec![0.1, 0.2, -1.0 / 3.0, 0.7];
        let mut bytes = Vec::new();
        write_csv(&mut bytes, &rows, 2).unwrap();
        let (back, d) = read_all(&bytes[..]).unwrap();
        assert_eq!(d, Some(2));
        assert_eq!(back, rows);
    }

    #[test]
    fn chunked_reading() {
        let rows: Vec<f64> = (0..30).map(|i| i as f64).collect();
        let mut bytes = Vec::new();
        write_binary(&mut bytes, &rows, 3).unwrap();
        let mut r = StreamReader::new(&bytes[..]).unwrap();
        assert_eq!(r.declared_len(), Some(10));
        let mut buf = Vec::new();
        let sizes: Vec<usize> = std::iter::from_fn(|| match r.next_chunk(4, &mut buf).unwrap() {
            0 => None,
            n => Some(n),
        })
        .collect();
        assert_eq!(sizes, vec![4, 4, 2]);
        assert_eq!(r.bytes_read(), bytes.len() as u64);
    }

    #[test]
    fn empty_input() {
        let r = StreamReader::new(&b""[..]).unwrap();
        assert_eq!(r.format(), None);
        assert_eq!(r.dim(), None);
        let (rows, _) = read_all(&b""[..]).unwrap();
        assert!(rows.is_empty());
    }

    #[test]
    fn truncated_binary_reports_offset() {
        let mut bytes = Vec::new();
        write_binary(&mut bytes, &[1.0, 0.0, 0.0, 1.0], 2).unwrap();
        bytes.truncate(bytes.len() - 2);
        match read_all(&bytes[..]) {
            Err(Error::Format { offset, .. }) => assert_eq!(offset, 20),
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn bad_magic() {
        assert!(matches!(
            read_all(&b"MXS2\x00\x00\x00\x00\x01\x00\x00\x00"[..]),
            Err(Error::Format { offset: 0, .. })
        ));
    }

    #[test]
    fn ragged_csv_reports_line_offset() {
        let text = b"1,0\n0,1,0\n";
        match read_all(&text[..]) {
            Err(Error::Format { offset, .. }) => assert_eq!(offset, 4),
            other => panic!("expected format error, got {other:?}"),
        }
        assert!(matches!(read_all(&b"1,abc\n"[..]), Err(Error::Format { offset: 0, .. })));
    }
}

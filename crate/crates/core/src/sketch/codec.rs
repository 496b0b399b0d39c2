//! Versioned binary encoding of a [`MaxSketch`].
//!
//! ```text
//! "MXSK" | u16 version = 1 | u64 seed | u32 m | u32 d | u64 items_seen | m x f64
//! ```
//!
//! All integers and floats are little-endian. Empty slots are written as the
//! IEEE negative-infinity bit pattern.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::projection::{seeded_fingerprint, ProjectionSource};
use super::state::{Binding, MaxSketch};

pub const SKETCH_MAGIC: &[u8; 4] = b"MXSK";
pub const SKETCH_VERSION: u16 = 1;
const HEADER_LEN: usize = 4 + 2 + 8 + 4 + 4 + 8;

impl<T: Scalar> MaxSketch<T> {
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        let seed = match self.binding().source {
            ProjectionSource::Seeded(seed) => seed,
            ProjectionSource::Explicit => {
                return Err(Error::Binding(
                    "sketches over explicit projection matrices cannot be serialized".into(),
                ))
            }
        };
        let b = self.binding();
        let m = u32::try_from(b.count).map_err(|_| Error::param("m exceeds u32"))?;
        let d = u32::try_from(b.dim).map_err(|_| Error::param("d exceeds u32"))?;
        let mut buf = Vec::with_capacity(HEADER_LEN + 8 * b.count);
        buf.extend_from_slice(SKETCH_MAGIC);
        buf.extend_from_slice(&SKETCH_VERSION.to_le_bytes());
        buf.extend_from_slice(&seed.to_le_bytes());
        buf.extend_from_slice(&m.to_le_bytes());
        buf.extend_from_slice(&d.to_le_bytes());
        buf.extend_from_slice(&self.items_seen().to_le_bytes());
        for v in self.maxima() {
            buf.extend_from_slice(&v.to_f64_lossless().to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        self.write_to(&mut out)?;
        Ok(out)
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut header = [0u8; HEADER_LEN];
        read_exact_at(&mut r, &mut header, 0)?;
        if &header[0..4] != SKETCH_MAGIC {
            return Err(Error::format(0, "bad sketch magic, expected \"MXSK\""));
        }
        let version = u16::from_le_bytes([header[4], header[5]]);
        if version != SKETCH_VERSION {
            return Err(Error::format(
                4,
                format!("unsupported sketch version {version}, expected {SKETCH_VERSION}"),
            ));
        }
        let seed = u64::from_le_bytes(header[6..14].try_into().unwrap());
        let m = u32::from_le_bytes(header[14..18].try_into().unwrap()) as usize;
        let d = u32::from_le_bytes(header[18..22].try_into().unwrap()) as usize;
        let items_seen = u64::from_le_bytes(header[22..30].try_into().unwrap());
        if m == 0 || d == 0 {
            return Err(Error::format(14, "sketch header has m = 0 or d = 0"));
        }
        let mut maxima = Vec::with_capacity(m);
        let mut cell = [0u8; 8];
        for j in 0..m {
            let offset = (HEADER_LEN + 8 * j) as u64;
            read_exact_at(&mut r, &mut cell, offset)?;
            let v = f64::from_le_bytes(cell);
            maxima.push(T::from_f64_lossy(v));
        }
        let mut trailing = [0u8; 1];
        if r.read(&mut trailing)? != 0 {
            return Err(Error::format(
                (HEADER_LEN + 8 * m) as u64,
                "trailing bytes after sketch payload",
            ));
        }
        let binding = Binding {
            source: ProjectionSource::Seeded(seed),
            count: m,
            dim: d,
            fingerprint: seeded_fingerprint(seed, m, d),
        };
        MaxSketch::from_parts(maxima, items_seen, binding).map_err(|e| match e {
            Error::InvalidInput(msg) => Error::format(HEADER_LEN as u64, msg),
            other => other,
        })
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        Self::read_from(bytes)
    }
}

fn read_exact_at<R: Read>(r: &mut R, buf: &mut [u8], offset: u64) -> Result<()> {
    let mut filled = 0;
    while filled < buf.len() {
        match r.read(&mut buf[filled..]) {
            Ok(0) => {
                return Err(Error::format(
                    offset + filled as u64,
                    "unexpected end of sketch data",
                ))
            }
            Ok(n) => filled += n,
            Err(e) if e.kind() == std::io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e.into()),
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sketch::ProjectionSet;

    #[test]
    fn empty_round_trip() {
        let p = ProjectionSet::<f64>::new(3, 5, 99).unwrap();
        let s = MaxSketch::new(&p);
        let bytes = s.to_bytes().unwrap();
        assert_eq!(bytes.len(), HEADER_LEN + 5 * 8);
        assert_eq!(&bytes[HEADER_LEN..HEADER_LEN + 8], &f64::NEG_INFINITY.to_le_bytes());
        let back = MaxSketch::<f64>::from_bytes(&bytes).unwrap();
        assert_eq!(back, s);
        assert_eq!(back.fingerprint(), p.fingerprint());
    }

    #[test]
    fn layout() {
        let p = ProjectionSet::<f64>::new(2, 1, 0x0102030405060708).unwrap();
        let mut s = MaxSketch::new(&p);
        s.update_batch(&[1.0, 0.0], &p).unwrap();
        let b = s.to_bytes().unwrap();
        assert_eq!(&b[..4], b"MXSK");
        assert_eq!(&b[4..6], &[1, 0]);
        assert_eq!(&b[6..14], &[8, 7, 6, 5, 4, 3, 2, 1]);
        assert_eq!(&b[14..18], &[1, 0, 0, 0]);
        assert_eq!(&b[18..22], &[2, 0, 0, 0]);
        assert_eq!(&b[22..30], &[1, 0, 0, 0, 0, 0, 0, 0]);
        assert_eq!(&b[30..38], &s.maxima()[0].to_le_bytes());
    }

    #[test]
    fn round_trip_after_updates() {
        let p = ProjectionSet::<f64>::new(6, 40, 5).unwrap();
        let mut s = MaxSketch::new(&p);
        for i in 0..100 {
            let mut x = vec![0.0; 6];
            x[i % 6] = if i % 2 == 0 { 1.0 } else { -1.0 };
            x[(i + 1) % 6] = 0.01 * i as f64;
            let n: f64 = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            x.iter_mut().for_each(|v| *v /= n);
            s.update_batch(&x, &p).unwrap();
        }
        let back = MaxSketch::<f64>::from_bytes(&s.to_bytes().unwrap()).unwrap();
        let bits = |s: &MaxSketch<f64>| s.maxima().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&back), bits(&s));
        assert_eq!(back.items_seen(), 100);
        assert_eq!(back, s);
    }

    #[test]
    fn corrupt_inputs() {
        let p = ProjectionSet::<f64>::new(2, 3, 1).unwrap();
        let mut bytes = MaxSketch::new(&p).to_bytes().unwrap();
        let good = bytes.clone();

        bytes[0] = b'X';
        assert!(matches!(
            MaxSketch::<f64>::from_bytes(&bytes),
            Err(Error::Format { offset: 0, .. })
        ));

        let mut v = good.clone();
        v[4] = 2;
        assert!(matches!(
            MaxSketch::<f64>::from_bytes(&v),
            Err(Error::Format { offset: 4, .. })
        ));

        let truncated = &good[..good.len() - 3];
        assert!(matches!(
            MaxSketch::<f64>::from_bytes(truncated),
            Err(Error::Format { .. })
        ));

        let mut extra = good.clone();
        extra.push(0);
        assert!(MaxSketch::<f64>::from_bytes(&extra).is_err());

        // items_seen says non-empty but every slot is the empty sentinel
        let mut inconsistent = good;
        inconsistent[22] = 1;
        assert!(matches!(
            MaxSketch::<f64>::from_bytes(&inconsistent),
            Err(Error::Format { .. })
        ));
    }

    #[test]
    fn explicit_projection_sketch_is_not_serializable() {
        let p = ProjectionSet::from_rows(1, 1, vec![1.0f64]).unwrap();
        assert!(matches!(MaxSketch::new(&p).to_bytes(), Err(Error::Binding(_))));
    }
}

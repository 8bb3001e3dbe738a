//! Capture files: a fixed little-endian header followed by `f64` samples.
//!
//! ```text
//! offset  size  field
//!      0     6  magic "DDCAP1"
//!      6     2  flags (bit 0: complex samples, bit 1: aligned to 2 SPS)
//!      8     8  sample rate, Sa/s (f64)
//!     16     8  symbol rate, Bd (f64)
//!     24     8  sample count (u64; complex samples count once)
//!     32     -  payload, f64 LE (complex: re, im interleaved)
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 6] = b"DDCAP1";
pub const HEADER_LEN: usize = 32;

const FLAG_COMPLEX: u16 = 1;
const FLAG_ALIGNED: u16 = 2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CaptureMeta {
    /// Sa/s.
    pub sample_rate: f64,
    /// Bd.
    pub symbol_rate: f64,
    pub complex: bool,
    /// Samples sit at `k T / 2`, starting on a symbol instant.
    pub aligned: bool,
}

impl CaptureMeta {
    /// Metadata of a simulator output at two samples per symbol.
    pub fn two_sps(symbol_rate: f64) -> Self {
        Self {
            sample_rate: 2.0 * symbol_rate,
            symbol_rate,
            complex: false,
            aligned: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.symbol_rate > 0.0) || !(self.sample_rate >= 2.0 * self.symbol_rate) {
            return Err(Error::RateInconsistent {
                sample_rate: self.sample_rate,
                symbol_rate: self.symbol_rate,
            });
        }
        Ok(())
    }

    /// Input samples per symbol.
    pub fn oversampling(&self) -> f64 {
        self.sample_rate / self.symbol_rate
    }

    fn flags(&self) -> u16 {
        (if self.complex { FLAG_COMPLEX } else { 0 }) | (if self.aligned { FLAG_ALIGNED } else { 0 })
    }

    fn values_per_sample(&self) -> usize {
        if self.complex {
            2
        } else {
            1
        }
    }
}

/// A capture in memory; complex payloads keep their interleaved layout.
#[derive(Debug, Clone, PartialEq)]
pub struct Capture {
    pub meta: CaptureMeta,
    pub values: Vec<f64>,
}

impl Capture {
    pub fn new(meta: CaptureMeta, values: Vec<f64>) -> Result<Self> {
        meta.validate()?;
        if !values.len().is_multiple_of(meta.values_per_sample()) {
            return Err(Error::InvalidParameter(
                "complex payload needs an even number of values".into(),
            ));
        }
        Ok(Self { meta, values })
    }

    pub fn sample_count(&self) -> usize {
        self.values.len() / self.meta.values_per_sample()
    }

    /// Real intensity samples (the modulus squared of complex ones).
    pub fn intensities(&self) -> Vec<f64> {
        if self.meta.complex {
            self.values.chunks_exact(2).map(|c| c[0] * c[0] + c[1] * c[1]).collect()
        } else {
            self.values.clone()
        }
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        self.meta.validate()?;
        let mut header = [0u8; HEADER_LEN];
        header[..6].copy_from_slice(MAGIC);
        header[6..8].copy_from_slice(&self.meta.flags().to_le_bytes());
        header[8..16].copy_from_slice(&self.meta.sample_rate.to_le_bytes());
        header[16..24].copy_from_slice(&self.meta.symbol_rate.to_le_bytes());
        header[24..32].copy_from_slice(&(self.sample_count() as u64).to_le_bytes());
        w.write_all(&header)?;
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_from(mut r: impl Read) -> Result<Self> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
            return Err(Error::BadMagic);
        }
        if bytes.len() < HEADER_LEN {
            return Err(Error::TruncatedPayload {
                expected: HEADER_LEN as u64,
                got: bytes.len() as u64,
            });
        }
        let f64_at = |k: usize| f64::from_le_bytes(bytes[k..k + 8].try_into().unwrap());
        let flags = u16::from_le_bytes([bytes[6], bytes[7]]);
        if flags & !(FLAG_COMPLEX | FLAG_ALIGNED) != 0 {
            return Err(Error::Parse(format!("unknown capture flags {flags:#06x}")));
        }
        let meta = CaptureMeta {
            sample_rate: f64_at(8),
            symbol_rate: f64_at(16),
            complex: flags & FLAG_COMPLEX != 0,
            aligned: flags & FLAG_ALIGNED != 0,
        };
        meta.validate()?;
        let count = u64::from_le_bytes(bytes[24..32].try_into().unwrap());
        let expected = count
            .checked_mul(8 * meta.values_per_sample() as u64)
            .and_then(|b| b.checked_add(HEADER_LEN as u64))
            .ok_or_else(|| Error::Parse(format!("sample count {count} overflows")))?;
        let got = bytes.len() as u64;
        if got < expected {
            return Err(Error::TruncatedPayload { expected, got });
        }
        if got > expected {
            return Err(Error::Parse(format!(
                "{} trailing bytes after the payload",
                got - expected
            )));
        }
        let values = bytes[HEADER_LEN..]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(Self { meta, values })
    }
}

pub fn write_capture(path: impl AsRef<Path>, capture: &Capture) -> Result<()> {
    capture.write_to(BufWriter::new(File::create(path)?))
}

pub fn read_capture(path: impl AsRef<Path>) -> Result<Capture> {
    Capture::read_from(BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Capture {
        Capture::new(CaptureMeta::two_sps(30e9), vec![0.5, -1.25, f64::MIN_POSITIVE, 3e300]).unwrap()
    }

    #[test]
    fn header_layout() {
        let mut bytes = Vec::new();
        sample().write_to(&mut bytes).unwrap();
        assert_eq!(bytes.len(), HEADER_LEN + 4 * 8);
        assert_eq!(&bytes[..6], b"DDCAP1");
        assert_eq!(u16::from_le_bytes([bytes[6], bytes[7]]), 2);
        assert_eq!(f64::from_le_bytes(bytes[8..16].try_into().unwrap()), 60e9);
        assert_eq!(u64::from_le_bytes(bytes[24..32].try_into().unwrap()), 4);
        assert_eq!(f64::from_le_bytes(bytes[32..40].try_into().unwrap()), 0.5);
    }

    #[test]
    fn errors_are_distinct() {
        let mut bytes = Vec::new();
        sample().write_to(&mut bytes).unwrap();

        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(Capture::from_bytes(&bad), Err(Error::BadMagic)));
        assert!(matches!(Capture::from_bytes(b"DD"), Err(Error::BadMagic)));

        let short = &bytes[..bytes.len() - 3];
        assert!(matches!(
            Capture::from_bytes(short),
            Err(Error::TruncatedPayload { expected: 64, got: 61 })
        ));
        assert!(matches!(
            Capture::from_bytes(&bytes[..20]),
            Err(Error::TruncatedPayload { .. })
        ));

        let mut slow = bytes.clone();
        slow[8..16].copy_from_slice(&50e9f64.to_le_bytes());
        assert!(matches!(
            Capture::from_bytes(&slow),
            Err(Error::RateInconsistent { .. })
        ));

        let mut long = bytes;
        long.push(0);
        assert!(matches!(Capture::from_bytes(&long), Err(Error::Parse(_))));
    }

    #[test]
    fn complex_payload() {
        let meta = CaptureMeta {
            complex: true,
            aligned: false,
            ..CaptureMeta::two_sps(10e9)
        };
        let c = Capture::new(meta, vec![3.0, 4.0, 1.0, 0.0]).unwrap();
        assert_eq!(c.sample_count(), 2);
        assert_eq!(c.intensities(), vec![25.0, 1.0]);
        let mut bytes = Vec::new();
        c.write_to(&mut bytes).unwrap();
        assert_eq!(Capture::from_bytes(&bytes).unwrap(), c);
        assert!(Capture::new(meta, vec![1.0]).is_err());
    }
}

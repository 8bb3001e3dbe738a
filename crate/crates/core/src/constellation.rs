//! Q-ary ASK and PAM alphabets, i.i.d. symbol blocks, sign-differential
//! precoding and two-fold upsampling.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Bipolar (ASK) or unipolar (PAM) amplitude alphabet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Modulation {
    #[serde(rename = "ASK")]
    Ask,
    #[serde(rename = "PAM")]
    Pam,
}

impl Modulation {
    pub fn name(self) -> &'static str {
        match self {
            Modulation::Ask => "ASK",
            Modulation::Pam => "PAM",
        }
    }
}

impl fmt::Display for Modulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Modulation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "ASK" => Ok(Modulation::Ask),
            "PAM" => Ok(Modulation::Pam),
            other => Err(Error::Parse(format!("unknown modulation '{other}'"))),
        }
    }
}

/// An ordered set of `Q` real amplitude levels.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    kind: Modulation,
    order: usize,
    points: Vec<f64>,
}

pub const SUPPORTED_ORDERS: [usize; 4] = [2, 4, 8, 16];

impl Constellation {
    /// PAM uses `{0, 1, ..., Q-1}`; ASK uses the odd levels `{-(Q-1), ..., -1, 1, ..., Q-1}`.
    pub fn new(kind: Modulation, order: usize) -> Result<Self> {
        if !SUPPORTED_ORDERS.contains(&order) {
            return Err(Error::UnsupportedOrder(order));
        }
        let points = match kind {
            Modulation::Pam => (0..order).map(|k| k as f64).collect(),
            Modulation::Ask => (0..order).map(|k| (2 * k) as f64 - (order - 1) as f64).collect(),
        };
        Ok(Self { kind, order, points })
    }

    pub fn kind(&self) -> Modulation {
        self.kind
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn point(&self, index: usize) -> f64 {
        self.points[index]
    }

    /// Bits per symbol, `log2 Q`.
    pub fn bits(&self) -> f64 {
        (self.order as f64).log2()
    }

    /// Index of an exact constellation point.
    pub fn index_of(&self, value: f64) -> Option<usize> {
        // Points are small integers, so exact comparison is well defined.
        self.points.iter().position(|&p| p == value)
    }

    pub fn mean(&self) -> f64 {
        self.points.iter().sum::<f64>() / self.order as f64
    }

    /// Average of `x^2` over the alphabet.
    pub fn mean_power(&self) -> f64 {
        self.points.iter().map(|p| p * p).sum::<f64>() / self.order as f64
    }

    /// Binary-reflected Gray label of each level (metadata only; rates are symbol-wise).
    pub fn gray_labels(&self) -> Vec<u32> {
        (0..self.order as u32).map(|k| k ^ (k >> 1)).collect()
    }

    /// Short label such as `4-ASK`.
    pub fn label(&self) -> String {
        format!("{}-{}", self.order, self.kind)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymbolSource {
    Raw,
    Precoded,
}

/// A block of `n >= 1` symbols, every entry an exact constellation point.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolBlock {
    constellation: Constellation,
    symbols: Vec<f64>,
    source: SymbolSource,
}

impl SymbolBlock {
    pub fn new(constellation: Constellation, symbols: Vec<f64>, source: SymbolSource) -> Result<Self> {
        if symbols.is_empty() {
            return Err(Error::EmptyBlock("symbol block"));
        }
        if let Some(&bad) = symbols.iter().find(|&&s| constellation.index_of(s).is_none()) {
            return Err(Error::NotAConstellationPoint {
                value: bad,
                order: constellation.order(),
                kind: constellation.kind().name(),
            });
        }
        Ok(Self {
            constellation,
            symbols,
            source,
        })
    }

    pub fn constellation(&self) -> &Constellation {
        &self.constellation
    }

    pub fn symbols(&self) -> &[f64] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn source(&self) -> SymbolSource {
        self.source
    }

    pub fn indices(&self) -> Vec<usize> {
        self.symbols
            .iter()
            .map(|&s| self.constellation.index_of(s).expect("validated on construction"))
            .collect()
    }
}

/// Draws `n` uniform i.i.d. symbols; the same seed always yields the same block.
pub fn draw_symbols(constellation: &Constellation, n: usize, seed: u64) -> Result<SymbolBlock> {
    if n == 0 {
        return Err(Error::EmptyBlock("symbol block"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q = constellation.order();
    let symbols = (0..n).map(|_| constellation.point(rng.gen_range(0..q))).collect();
    SymbolBlock::new(constellation.clone(), symbols, SymbolSource::Raw)
}

/// Sign-differential precoder: `sign(s_i) = sign(s_{i-1}) * sign(x_i)` with `s_0 = +1`,
/// `|s_i| = |x_i|`. PAM blocks pass through unchanged (but are marked precoded).
pub fn differential_precode(block: &SymbolBlock) -> Result<SymbolBlock> {
    if block.source == SymbolSource::Precoded {
        return Err(Error::AlreadyPrecoded);
    }
    let symbols = match block.constellation.kind() {
        Modulation::Pam => block.symbols.clone(),
        Modulation::Ask => {
            let mut prev = 1.0_f64;
            block
                .symbols
                .iter()
                .map(|&x| {
                    let sign = prev * x.signum();
                    prev = sign;
                    sign * x.abs()
                })
                .collect()
        }
    };
    SymbolBlock::new(block.constellation.clone(), symbols, SymbolSource::Precoded)
}

/// Inverse of [`differential_precode`].
pub fn differential_decode(block: &SymbolBlock) -> Result<SymbolBlock> {
    if block.source != SymbolSource::Precoded {
        return Err(Error::NotPrecoded);
    }
    let symbols = match block.constellation.kind() {
        Modulation::Pam => block.symbols.clone(),
        Modulation::Ask => {
            let mut prev = 1.0_f64;
            block
                .symbols
                .iter()
                .map(|&s| {
                    let x = prev * s.signum() * s.abs();
                    prev = s.signum();
                    x
                })
                .collect()
        }
    };
    SymbolBlock::new(block.constellation.clone(), symbols, SymbolSource::Raw)
}

/// `[X1, 0, X2, 0, ..., Xn, 0]`.
#[derive(Debug, Clone, PartialEq)]
pub struct UpsampledSequence {
    samples: Vec<f64>,
}

impl UpsampledSequence {
    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Number of symbols `n` (half the sample count).
    pub fn symbol_count(&self) -> usize {
        self.samples.len() / 2
    }
}

pub fn upsample(block: &SymbolBlock) -> UpsampledSequence {
    upsample_values(block.symbols())
}

pub(crate) fn upsample_values(symbols: &[f64]) -> UpsampledSequence {
    let mut samples = Vec::with_capacity(2 * symbols.len());
    for &x in symbols {
        samples.push(x);
        samples.push(0.0);
    }
    UpsampledSequence { samples }
}

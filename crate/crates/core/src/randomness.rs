//! Reproducible bit sources and a compressor-based incompressibility proxy.
//!
//! Three kinds of source are supported: a seeded ChaCha20 stream, the raw
//! bytes of a file, and a literal `0`/`1` string. Bits are always read most
//! significant bit first. A source can be read sequentially through
//! [`BitSource`], or by absolute 64-bit word position through [`Tape`],
//! which is what lazy path refinement uses.
//!
//! Compression deficiency is `|word| - 8 * compressed_bytes`, headers
//! included. It is a diagnostic only; nothing in the crate gates on it.

use std::fmt;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;

use flate2::write::{DeflateEncoder, ZlibEncoder};
use flate2::Compression;
use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Description of a bit source; opening the same spec always yields the
/// same stream.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SourceSpec {
    Seeded { seed: u64 },
    File { path: PathBuf },
    Literal { bits: String },
}

impl fmt::Display for SourceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SourceSpec::Seeded { seed } => write!(f, "seed:{seed}"),
            SourceSpec::File { path } => write!(f, "file:{}", path.display()),
            SourceSpec::Literal { bits } => write!(f, "literal:{bits}"),
        }
    }
}

impl FromStr for SourceSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, rest) = s
            .split_once(':')
            .ok_or_else(|| Error::Format(format!("source spec `{s}` lacks a `kind:` prefix")))?;
        match kind {
            "seed" => rest
                .parse()
                .map(|seed| SourceSpec::Seeded { seed })
                .map_err(|_| Error::Format(format!("bad seed `{rest}`"))),
            "file" => Ok(SourceSpec::File {
                path: PathBuf::from(rest),
            }),
            "literal" => {
                if rest.chars().all(|c| c == '0' || c == '1') {
                    Ok(SourceSpec::Literal {
                        bits: rest.to_string(),
                    })
                } else {
                    Err(Error::Format(format!("literal `{rest}` is not a bit string")))
                }
            }
            _ => Err(Error::Format(format!("unknown source kind `{kind}`"))),
        }
    }
}

impl SourceSpec {
    pub fn seeded(seed: u64) -> Self {
        SourceSpec::Seeded { seed }
    }

    pub fn open(&self) -> Result<BitSource> {
        BitSource::open(self.clone())
    }
}

/// Random-access view of a source as a sequence of bits.
#[derive(Clone)]
pub enum Tape {
    Seeded(u64),
    Bytes(Arc<[u8]>),
    Literal(Arc<[bool]>),
}

impl fmt::Debug for Tape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tape::Seeded(s) => write!(f, "Tape::Seeded({s})"),
            Tape::Bytes(b) => write!(f, "Tape::Bytes({} bytes)", b.len()),
            Tape::Literal(b) => write!(f, "Tape::Literal({} bits)", b.len()),
        }
    }
}

impl Tape {
    pub fn open(spec: &SourceSpec) -> Result<Tape> {
        Ok(match spec {
            SourceSpec::Seeded { seed } => Tape::Seeded(*seed),
            SourceSpec::File { path } => {
                let bytes = std::fs::read(path)?;
                Tape::Bytes(bytes.into())
            }
            SourceSpec::Literal { bits } => {
                Tape::Literal(bits.chars().map(|c| c == '1').collect::<Vec<_>>().into())
            }
        })
    }

    /// Total number of bits, `None` for unbounded generators.
    pub fn len_bits(&self) -> Option<u128> {
        match self {
            Tape::Seeded(_) => None,
            Tape::Bytes(b) => Some(8 * b.len() as u128),
            Tape::Literal(b) => Some(b.len() as u128),
        }
    }

    fn check(&self, start: u128, n: u128) -> Result<()> {
        if let Some(len) = self.len_bits() {
            if start + n > len {
                return Err(Error::InsufficientBits {
                    needed: start + n,
                    available: len,
                });
            }
        }
        Ok(())
    }

    /// The 64 bits starting at absolute bit offset `bit`, first bit in the
    /// most significant position.
    pub fn u64_at(&self, bit: u128) -> Result<u64> {
        self.check(bit, 64)?;
        match self {
            Tape::Seeded(seed) => {
                let word = bit / 64;
                let shift = (bit % 64) as u32;
                let mut rng = ChaCha20Rng::seed_from_u64(*seed);
                rng.set_word_pos(2 * word);
                let a = rng.next_u64();
                if shift == 0 {
                    Ok(a)
                } else {
                    let b = rng.next_u64();
                    Ok((a << shift) | (b >> (64 - shift)))
                }
            }
            _ => {
                let mut w = 0u64;
                for i in 0..64 {
                    w = (w << 1) | self.bit_at(bit + i)? as u64;
                }
                Ok(w)
            }
        }
    }

    pub fn bit_at(&self, bit: u128) -> Result<bool> {
        self.check(bit, 1)?;
        Ok(match self {
            Tape::Seeded(_) => {
                let w = self.u64_at(bit - bit % 64)?;
                (w >> (63 - (bit % 64) as u32)) & 1 == 1
            }
            Tape::Bytes(b) => {
                let byte = b[(bit / 8) as usize];
                (byte >> (7 - (bit % 8) as u32)) & 1 == 1
            }
            Tape::Literal(b) => b[bit as usize],
        })
    }
}

/// A finite binary word.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct BitWord(pub Vec<bool>);

impl BitWord {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn zeros(n: usize) -> Self {
        BitWord(vec![false; n])
    }

    /// Packs MSB first; the last byte is zero-padded.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.0
            .chunks(8)
            .map(|c| {
                c.iter()
                    .enumerate()
                    .fold(0u8, |acc, (i, &b)| acc | ((b as u8) << (7 - i)))
            })
            .collect()
    }

    pub fn concat(&self, other: &BitWord) -> BitWord {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        BitWord(v)
    }
}

impl fmt::Display for BitWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for BitWord {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(Error::Format(format!("`{c}` is not a bit"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(BitWord)
    }
}

/// Sequential, single-consumer reader over a [`SourceSpec`].
///
/// Cloning gives an independent reader at the same position.
#[derive(Clone)]
pub struct BitSource {
    spec: SourceSpec,
    tape: Tape,
    cursor: u128,
    stream: Option<ChaCha20Rng>,
}

impl fmt::Debug for BitSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BitSource")
            .field("spec", &self.spec)
            .field("cursor", &self.cursor)
            .finish()
    }
}

impl BitSource {
    pub fn open(spec: SourceSpec) -> Result<Self> {
        let tape = Tape::open(&spec)?;
        let stream = match &spec {
            SourceSpec::Seeded { seed } => Some(ChaCha20Rng::seed_from_u64(*seed)),
            _ => None,
        };
        Ok(Self {
            spec,
            tape,
            cursor: 0,
            stream,
        })
    }

    pub fn seeded(seed: u64) -> Self {
        Self::open(SourceSpec::seeded(seed)).expect("seeded sources always open")
    }

    pub fn spec(&self) -> &SourceSpec {
        &self.spec
    }

    pub fn tape(&self) -> &Tape {
        &self.tape
    }

    /// Bits consumed so far.
    pub fn cursor(&self) -> u128 {
        self.cursor
    }

    /// Bits still available, `None` when unbounded.
    pub fn remaining(&self) -> Option<u128> {
        self.tape.len_bits().map(|l| l - self.cursor.min(l))
    }

    pub fn ensure_available(&self, n: u128) -> Result<()> {
        match self.remaining() {
            Some(r) if r < n => Err(Error::InsufficientBits {
                needed: n,
                available: r,
            }),
            _ => Ok(()),
        }
    }

    /// Next `n` bits; the cursor advances by `n`.
    pub fn bits(&mut self, n: usize) -> Result<BitWord> {
        self.ensure_available(n as u128)?;
        let mut out = Vec::with_capacity(n);
        let mut left = n;
        while left >= 64 && self.cursor % 64 == 0 {
            let w = self.next_u64()?;
            out.extend((0..64).map(|i| (w >> (63 - i)) & 1 == 1));
            left -= 64;
        }
        for _ in 0..left {
            out.push(self.tape.bit_at(self.cursor)?);
            self.cursor += 1;
        }
        if let (Some(rng), SourceSpec::Seeded { .. }) = (self.stream.as_mut(), &self.spec) {
            if self.cursor % 64 == 0 {
                rng.set_word_pos(2 * (self.cursor / 64));
            }
        }
        Ok(BitWord(out))
    }

    /// Next 64 bits as one word.
    pub fn next_u64(&mut self) -> Result<u64> {
        self.ensure_available(64)?;
        let w = match (&mut self.stream, self.cursor % 64) {
            (Some(rng), 0) => {
                let expected = 2 * (self.cursor / 64);
                if rng.get_word_pos() != expected {
                    rng.set_word_pos(expected);
                }
                rng.next_u64()
            }
            _ => self.tape.u64_at(self.cursor)?,
        };
        self.cursor += 64;
        Ok(w)
    }
}

/// Registered lossless compressors.
pub const COMPRESSORS: &[&str] = &["deflate", "zlib"];

/// Compression level shared by all registered compressors.
const LEVEL: u32 = 9;

fn compressed_len(bytes: &[u8], compressor: &str) -> Result<usize> {
    let out = match compressor {
        "deflate" => {
            let mut e = DeflateEncoder::new(Vec::new(), Compression::new(LEVEL));
            e.write_all(bytes)?;
            e.finish()?
        }
        "zlib" => {
            let mut e = ZlibEncoder::new(Vec::new(), Compression::new(LEVEL));
            e.write_all(bytes)?;
            e.finish()?
        }
        other => return Err(Error::UnknownCompressor(other.to_string())),
    };
    Ok(out.len())
}

/// Compression-based stand-in for prefix complexity of a word.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComplexityScore {
    pub word_bits: usize,
    pub compressor: String,
    pub compressed_bits: usize,
    /// `word_bits - compressed_bits`; large positive values mean the word
    /// is compressible.
    pub deficiency: i64,
}

pub fn incompressibility_score(word: &BitWord, compressor: &str) -> Result<ComplexityScore> {
    if word.is_empty() {
        return Err(Error::Empty("word"));
    }
    let compressed_bits = 8 * compressed_len(&word.to_bytes(), compressor)?;
    Ok(ComplexityScore {
        word_bits: word.len(),
        compressor: compressor.to_string(),
        compressed_bits,
        deficiency: word.len() as i64 - compressed_bits as i64,
    })
}

/// Outcome of checking a family of codes against a deficiency budget.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SequenceVerdict {
    pub scores: Vec<ComplexityScore>,
    /// Largest deficiency over the family.
    pub worst_deficiency: i64,
    /// Index (into the input) of the worst word.
    pub worst_index: usize,
    /// Threshold `d0` in bits.
    pub threshold: i64,
    /// True iff every word satisfies `compressed >= n - d0`.
    pub complex: bool,
}

/// Checks `compressed(c_k) >= k - d0` for every supplied `(k, c_k)`.
pub fn complex_sequence_check(
    codes: &[(usize, BitWord)],
    threshold_bits: i64,
    compressor: &str,
) -> Result<SequenceVerdict> {
    if codes.is_empty() {
        return Err(Error::Empty("codes"));
    }
    let mut scores = Vec::with_capacity(codes.len());
    for (k, w) in codes {
        if w.len() != *k {
            return Err(Error::LengthMismatch {
                declared: *k,
                actual: w.len(),
            });
        }
        scores.push(incompressibility_score(w, compressor)?);
    }
    let (worst_index, worst) = scores
        .iter()
        .enumerate()
        .max_by_key(|(i, s)| (s.deficiency, std::cmp::Reverse(*i)))
        .map(|(i, s)| (i, s.deficiency))
        .expect("nonempty");
    Ok(SequenceVerdict {
        complex: worst <= threshold_bits,
        scores,
        worst_deficiency: worst,
        worst_index,
        threshold: threshold_bits,
    })
}

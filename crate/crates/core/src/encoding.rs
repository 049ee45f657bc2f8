//! Bit-vector codecs for integer class indices.
//!
//! Three schemes are implemented over a class count `M`:
//!
//! - **one-hot** — width `M`, exactly one bit set;
//! - **binary** — width `ceil(log2 M)`, the index in zero-padded big-endian
//!   binary; patterns whose value is `>= M` decode to a distinguished
//!   [`BinaryDecode::OutOfIndex`] outcome;
//! - **residual bits** — `M - 1` is decomposed greedily into terms `2^b - 1`
//!   and an index is written as one big-endian binary value per block. The
//!   per-block values always sum to at most `M - 1`, so *every* bit pattern
//!   decodes to a valid index.
//!
//! The greedy block solver is paired with an exact dynamic-programming oracle
//! ([`optimal_block_lengths`]) that computes the provably minimal total width,
//! so tests can confirm the greedy decomposition is optimal rather than assume
//! it.
//!
//! A worked example for `M = 50`: `49 = 31 + 15 + 3` gives blocks `[5, 4, 2]`
//! (11 bits instead of 50). Index 39 splits as `31 + 8 + 0`, i.e. the first
//! block saturates and the second holds binary 8:
//! `(1,1,1,1,1 | 1,0,0,0 | 0,0)`.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Guard for the dynamic-programming oracle: table size is `M`.
pub const ORACLE_CLASS_COUNT_GUARD: usize = 1 << 20;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EncodingError {
    #[error("category space must contain at least one class")]
    EmptyCategorySpace,
    #[error("index {index} out of range for {class_count} classes")]
    IndexOutOfRange { index: usize, class_count: usize },
    #[error("code length {actual} does not match expected length {expected}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("one-hot code must contain exactly one set bit, found {ones}")]
    MalformedOneHot { ones: usize },
    #[error("bit value {value} is not 0 or 1")]
    InvalidBit { value: u8 },
    #[error("duplicate label {0:?} in category space")]
    DuplicateLabel(String),
    #[error("masked label {0:?} does not appear exactly once in the label list")]
    MaskedLabelMissing(String),
    #[error("class count {class_count} exceeds the oracle guard of {guard}")]
    OracleGuardExceeded { class_count: usize, guard: usize },
    #[error("unknown scheme {0:?} (expected onehot, binary, or resbit)")]
    UnknownScheme(String),
}

/// Encoding scheme for a categorical column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    #[serde(rename = "onehot")]
    OneHot,
    Binary,
    #[serde(rename = "resbit")]
    ResBit,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::OneHot, Scheme::Binary, Scheme::ResBit];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::OneHot => "onehot",
            Scheme::Binary => "binary",
            Scheme::ResBit => "resbit",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = EncodingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "onehot" => Ok(Scheme::OneHot),
            "binary" => Ok(Scheme::Binary),
            "resbit" => Ok(Scheme::ResBit),
            other => Err(EncodingError::UnknownScheme(other.to_string())),
        }
    }
}

/// Greedy residual block lengths for `class_count` classes.
///
/// Repeatedly subtracts the largest `2^b - 1 <= remaining` from
/// `remaining = M - 1`, recording each `b`, until the remainder is zero. The
/// result is non-increasing and satisfies `sum(2^b_i - 1) == M - 1`. A single
/// class needs no bits at all and yields the empty list. Lengths may repeat
/// (`M = 1000` produces two trailing blocks of length 1).
pub fn block_lengths(class_count: usize) -> Result<Vec<u32>, EncodingError> {
    if class_count == 0 {
        return Err(EncodingError::EmptyCategorySpace);
    }
    let mut remaining = (class_count - 1) as u64;
    let mut lengths = Vec::new();
    while remaining > 0 {
        let nbits = 64 - remaining.leading_zeros();
        if remaining == ones(nbits) {
            // All-ones remainder: one final block covers it exactly.
            lengths.push(nbits);
            break;
        }
        let b = nbits - 1;
        lengths.push(b);
        remaining -= ones(b);
    }
    Ok(lengths)
}

/// `2^b - 1` as u64.
fn ones(b: u32) -> u64 {
    (1u64 << b) - 1
}

/// Width of the plain binary code: `ceil(log2 M)`, and 1 for `M = 1`.
pub fn binary_width(class_count: usize) -> Result<usize, EncodingError> {
    if class_count == 0 {
        return Err(EncodingError::EmptyCategorySpace);
    }
    if class_count <= 2 {
        return Ok(1);
    }
    Ok(((class_count - 1) as u64).ilog2() as usize + 1)
}

/// Code width of `scheme` for `class_count` classes.
pub fn dims(class_count: usize, scheme: Scheme) -> Result<usize, EncodingError> {
    match scheme {
        Scheme::OneHot => {
            if class_count == 0 {
                Err(EncodingError::EmptyCategorySpace)
            } else {
                Ok(class_count)
            }
        }
        Scheme::Binary => binary_width(class_count),
        Scheme::ResBit => Ok(block_lengths(class_count)?
            .iter()
            .map(|&b| b as usize)
            .sum()),
    }
}

/// Exact minimal-width decomposition of `M - 1` into terms `2^k - 1`.
///
/// Unbounded knapsack over targets `0..M-1` with item set
/// `{(2^k - 1, cost k)}`, minimizing total cost. Returns the minimal total
/// width together with one optimal multiset of block lengths (non-increasing).
/// This exists to check the greedy solver, not to replace it; the table is
/// `O(M log M)` so the class count is guarded.
pub fn optimal_block_lengths(
    class_count: usize,
) -> Result<(usize, Vec<u32>), EncodingError> {
    if class_count == 0 {
        return Err(EncodingError::EmptyCategorySpace);
    }
    if class_count > ORACLE_CLASS_COUNT_GUARD {
        return Err(EncodingError::OracleGuardExceeded {
            class_count,
            guard: ORACLE_CLASS_COUNT_GUARD,
        });
    }
    let target = class_count - 1;
    const UNSET: u32 = u32::MAX;
    let mut cost = vec![UNSET; target + 1];
    let mut choice = vec![0u32; target + 1];
    cost[0] = 0;
    for n in 1..=target {
        let mut k = 1u32;
        while (ones(k) as usize) <= n {
            let below = cost[n - ones(k) as usize];
            if below != UNSET && below + k < cost[n] {
                cost[n] = below + k;
                choice[n] = k;
            }
            k += 1;
        }
    }
    let mut lengths = Vec::new();
    let mut n = target;
    while n > 0 {
        let k = choice[n];
        lengths.push(k);
        n -= ones(k) as usize;
    }
    lengths.sort_unstable_by(|a, b| b.cmp(a));
    Ok((cost[target] as usize, lengths))
}

/// A fitted vocabulary for one categorical column.
///
/// Owns the class count, the residual block layout, and the label <-> index
/// maps. Indices are assigned in the order labels are supplied (for fitted
/// pipelines: first occurrence in the training data).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CategorySpace {
    class_count: usize,
    block_lengths: Vec<u32>,
    labels: Vec<String>,
    masked_label: Option<String>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl CategorySpace {
    /// Builds a space from an ordered list of distinct labels.
    ///
    /// `masked_label`, when set, names the catch-all category for masked rare
    /// values and must appear exactly once in `labels`.
    pub fn from_labels(
        labels: Vec<String>,
        masked_label: Option<String>,
    ) -> Result<Self, EncodingError> {
        if labels.is_empty() {
            return Err(EncodingError::EmptyCategorySpace);
        }
        let mut index = HashMap::with_capacity(labels.len());
        for (i, label) in labels.iter().enumerate() {
            if index.insert(label.clone(), i).is_some() {
                return Err(EncodingError::DuplicateLabel(label.clone()));
            }
        }
        if let Some(masked) = &masked_label {
            if !index.contains_key(masked) {
                return Err(EncodingError::MaskedLabelMissing(masked.clone()));
            }
        }
        let class_count = labels.len();
        Ok(Self {
            class_count,
            block_lengths: block_lengths(class_count)?,
            labels,
            masked_label,
            index,
        })
    }

    /// Space over `class_count` synthetic labels `"0" .. "M-1"`, for purely
    /// index-based uses such as the simulation harness and CLI codec commands.
    pub fn with_anonymous_labels(class_count: usize) -> Result<Self, EncodingError> {
        if class_count == 0 {
            return Err(EncodingError::EmptyCategorySpace);
        }
        Self::from_labels((0..class_count).map(|i| i.to_string()).collect(), None)
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn block_lengths(&self) -> &[u32] {
        &self.block_lengths
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn masked_label(&self) -> Option<&str> {
        self.masked_label.as_deref()
    }

    /// Index of the masked catch-all category, if masking occurred at fit time.
    pub fn masked_index(&self) -> Option<usize> {
        self.masked_label
            .as_ref()
            .and_then(|label| self.index.get(label).copied())
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    pub fn label_of(&self, index: usize) -> Option<&str> {
        self.labels.get(index).map(String::as_str)
    }

    /// Total residual-bit width, `sum(block_lengths)`.
    pub fn resbit_width(&self) -> usize {
        self.block_lengths.iter().map(|&b| b as usize).sum()
    }

    /// Code width under `scheme`.
    pub fn width(&self, scheme: Scheme) -> usize {
        match scheme {
            Scheme::OneHot => self.class_count,
            // Width never fails for an already-validated class count.
            Scheme::Binary => binary_width(self.class_count).expect("valid class count"),
            Scheme::ResBit => self.resbit_width(),
        }
    }

    /// Residual-bit encoding of index `n`.
    ///
    /// Greedy canonical form: each block in turn emits all ones (value
    /// `2^b - 1`) while that value still fits in the remainder; the first
    /// block it does not fit in receives the zero-padded binary of the
    /// remainder, and every later block is zero.
    pub fn encode_resbit(&self, n: usize) -> Result<ResBitCode, EncodingError> {
        if n >= self.class_count {
            return Err(EncodingError::IndexOutOfRange {
                index: n,
                class_count: self.class_count,
            });
        }
        let mut bits = Vec::with_capacity(self.resbit_width());
        let mut remaining = n as u64;
        for &b in &self.block_lengths {
            let saturated = ones(b);
            if saturated <= remaining {
                push_big_endian(&mut bits, saturated, b);
                remaining -= saturated;
            } else {
                push_big_endian(&mut bits, remaining, b);
                remaining = 0;
            }
        }
        debug_assert_eq!(remaining, 0);
        Ok(ResBitCode { bits })
    }

    /// Decodes a residual-bit pattern to its index.
    ///
    /// The per-block binary values are summed, so any pattern of the correct
    /// width yields an index in `[0, M)`; decoding is total but not injective.
    pub fn decode_resbit(&self, code: &ResBitCode) -> Result<usize, EncodingError> {
        let expected = self.resbit_width();
        if code.bits.len() != expected {
            return Err(EncodingError::LengthMismatch {
                expected,
                actual: code.bits.len(),
            });
        }
        let mut total = 0u64;
        let mut offset = 0usize;
        for &b in &self.block_lengths {
            let width = b as usize;
            total += read_big_endian(&code.bits[offset..offset + width])?;
            offset += width;
        }
        debug_assert!(total < self.class_count as u64);
        Ok(total as usize)
    }
}

impl<'de> Deserialize<'de> for CategorySpace {
    fn deserialize<D>(deserializer: D) -> Result<Self, D::Error>
    where
        D: serde::Deserializer<'de>,
    {
        #[derive(Deserialize)]
        struct Raw {
            class_count: usize,
            block_lengths: Vec<u32>,
            labels: Vec<String>,
            masked_label: Option<String>,
        }
        let raw = Raw::deserialize(deserializer)?;
        let space = CategorySpace::from_labels(raw.labels, raw.masked_label)
            .map_err(serde::de::Error::custom)?;
        if raw.class_count != space.class_count {
            return Err(serde::de::Error::custom(format!(
                "class_count {} does not match {} labels",
                raw.class_count, space.class_count
            )));
        }
        if raw.block_lengths != space.block_lengths {
            return Err(serde::de::Error::custom(
                "block_lengths do not match the class count",
            ));
        }
        Ok(space)
    }
}

/// Residual-bit code; length equals the owning space's `resbit_width`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResBitCode {
    bits: Vec<u8>,
}

impl ResBitCode {
    /// Wraps raw bits (each 0 or 1) without checking length; length is checked
    /// against the space at decode time.
    pub fn from_bits(bits: Vec<u8>) -> Result<Self, EncodingError> {
        validate_bits(&bits)?;
        Ok(Self { bits })
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn into_bits(self) -> Vec<u8> {
        self.bits
    }
}

/// Plain binary code of width `ceil(log2 M)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryCode {
    bits: Vec<u8>,
}

impl BinaryCode {
    pub fn from_bits(bits: Vec<u8>) -> Result<Self, EncodingError> {
        validate_bits(&bits)?;
        Ok(Self { bits })
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn into_bits(self) -> Vec<u8> {
        self.bits
    }
}

/// One-hot code of width `M`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OneHotCode {
    bits: Vec<u8>,
}

impl OneHotCode {
    pub fn from_bits(bits: Vec<u8>) -> Result<Self, EncodingError> {
        validate_bits(&bits)?;
        Ok(Self { bits })
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn into_bits(self) -> Vec<u8> {
        self.bits
    }
}

fn validate_bits(bits: &[u8]) -> Result<(), EncodingError> {
    match bits.iter().find(|&&b| b > 1) {
        Some(&value) => Err(EncodingError::InvalidBit { value }),
        None => Ok(()),
    }
}

fn push_big_endian(bits: &mut Vec<u8>, value: u64, width: u32) {
    for shift in (0..width).rev() {
        bits.push(((value >> shift) & 1) as u8);
    }
}

fn read_big_endian(bits: &[u8]) -> Result<u64, EncodingError> {
    let mut value = 0u64;
    for &bit in bits {
        if bit > 1 {
            return Err(EncodingError::InvalidBit { value: bit });
        }
        value = (value << 1) | bit as u64;
    }
    Ok(value)
}

/// Zero-padded big-endian binary code of index `n`.
pub fn encode_binary(n: usize, class_count: usize) -> Result<BinaryCode, EncodingError> {
    if class_count == 0 {
        return Err(EncodingError::EmptyCategorySpace);
    }
    if n >= class_count {
        return Err(EncodingError::IndexOutOfRange {
            index: n,
            class_count,
        });
    }
    let width = binary_width(class_count)? as u32;
    let mut bits = Vec::with_capacity(width as usize);
    push_big_endian(&mut bits, n as u64, width);
    Ok(BinaryCode { bits })
}

/// Result of decoding a plain binary pattern.
///
/// An out-of-index pattern is a reportable outcome, not a failure: the decoded
/// value simply has no category to map to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryDecode {
    Index(usize),
    OutOfIndex(u64),
}

/// Decodes a binary pattern, distinguishing values with no category.
pub fn decode_binary(
    code: &BinaryCode,
    class_count: usize,
) -> Result<BinaryDecode, EncodingError> {
    let expected = binary_width(class_count)?;
    if code.bits.len() != expected {
        return Err(EncodingError::LengthMismatch {
            expected,
            actual: code.bits.len(),
        });
    }
    let value = read_big_endian(&code.bits)?;
    if value < class_count as u64 {
        Ok(BinaryDecode::Index(value as usize))
    } else {
        Ok(BinaryDecode::OutOfIndex(value))
    }
}

/// One-hot encoding of index `n`.
pub fn encode_onehot(n: usize, class_count: usize) -> Result<OneHotCode, EncodingError> {
    if class_count == 0 {
        return Err(EncodingError::EmptyCategorySpace);
    }
    if n >= class_count {
        return Err(EncodingError::IndexOutOfRange {
            index: n,
            class_count,
        });
    }
    let mut bits = vec![0u8; class_count];
    bits[n] = 1;
    Ok(OneHotCode { bits })
}

/// Decodes a one-hot pattern; exactly one set bit is required.
pub fn decode_onehot(code: &OneHotCode, class_count: usize) -> Result<usize, EncodingError> {
    if code.bits.len() != class_count {
        return Err(EncodingError::LengthMismatch {
            expected: class_count,
            actual: code.bits.len(),
        });
    }
    let ones = code.bits.iter().filter(|&&b| b == 1).count();
    if ones != 1 {
        return Err(EncodingError::MalformedOneHot { ones });
    }
    Ok(code.bits.iter().position(|&b| b == 1).expect("one set bit"))
}

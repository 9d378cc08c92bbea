//! Packed binary codes and Hamming-space arithmetic.
//!
//! Bit order convention, shared by every module and file format: bit
//! index 0 is the first character of a code line and the first action
//! index. Within the packed words, bit `i` lives in word `i / 64` at
//! position `i % 64`.

use crate::codebook::Codebook;
use crate::par;
use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CodeError {
    #[error("width mismatch: {0} vs {1}")]
    WidthMismatch(usize, usize),
    #[error("bit index {index} out of range for width {width}")]
    IndexOutOfRange { index: usize, width: usize },
    #[error("label set must be nonempty")]
    EmptyLabelSet,
    #[error("label set covers all {0} classes; no negatives remain")]
    NoNegativeClasses(usize),
    #[error("invalid code character {0:?} (expected '0' or '1')")]
    InvalidCodeChar(char),
}

/// A `width`-bit vertex of the Hamming cube, packed into 64-bit words.
///
/// Canonical form: bits at positions >= `width` are always zero.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryCode {
    width: usize,
    words: Vec<u64>,
}

impl BinaryCode {
    pub fn zeros(width: usize) -> Self {
        assert!(width > 0, "code width must be positive");
        BinaryCode {
            width,
            words: vec![0; width.div_ceil(64)],
        }
    }

    /// Builds a code from explicit bit values, index 0 first.
    pub fn from_bits(bits: &[bool]) -> Self {
        let mut code = BinaryCode::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b {
                code.words[i / 64] |= 1 << (i % 64);
            }
        }
        code
    }

    /// Parses a line of '0'/'1' characters, first character = bit 0.
    pub fn from_text(line: &str) -> Result<Self, CodeError> {
        let mut bits = Vec::with_capacity(line.len());
        for ch in line.chars() {
            match ch {
                '0' => bits.push(false),
                '1' => bits.push(true),
                other => return Err(CodeError::InvalidCodeChar(other)),
            }
        }
        if bits.is_empty() {
            return Err(CodeError::InvalidCodeChar('\n'));
        }
        Ok(BinaryCode::from_bits(&bits))
    }

    /// Uniformly random code of the given width.
    pub fn random<R: Rng>(width: usize, rng: &mut R) -> Self {
        let mut code = BinaryCode::zeros(width);
        for w in code.words.iter_mut() {
            *w = rng.gen();
        }
        code.mask_tail();
        code
    }

    fn mask_tail(&mut self) {
        let rem = self.width % 64;
        if rem != 0 {
            let last = self.words.len() - 1;
            self.words[last] &= (1u64 << rem) - 1;
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn bit(&self, index: usize) -> bool {
        assert!(
            index < self.width,
            "bit index {index} out of range for width {}",
            self.width
        );
        self.words[index / 64] >> (index % 64) & 1 == 1
    }

    pub fn set_bit(&mut self, index: usize, value: bool) {
        assert!(
            index < self.width,
            "bit index {index} out of range for width {}",
            self.width
        );
        if value {
            self.words[index / 64] |= 1 << (index % 64);
        } else {
            self.words[index / 64] &= !(1 << (index % 64));
        }
    }

    /// Number of set bits.
    pub fn weight(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Renders the code as a '0'/'1' line, bit 0 first.
    pub fn to_text(&self) -> String {
        (0..self.width)
            .map(|i| if self.bit(i) { '1' } else { '0' })
            .collect()
    }

    /// Hamming distance restricted to the first `prefix` bits.
    pub fn prefix_distance(&self, other: &BinaryCode, prefix: usize) -> usize {
        assert_eq!(self.width, other.width, "width mismatch");
        assert!(prefix <= self.width);
        let full_words = prefix / 64;
        let mut d = 0usize;
        for i in 0..full_words {
            d += (self.words[i] ^ other.words[i]).count_ones() as usize;
        }
        let rem = prefix % 64;
        if rem != 0 {
            let mask = (1u64 << rem) - 1;
            d += ((self.words[full_words] ^ other.words[full_words]) & mask).count_ones() as usize;
        }
        d
    }
}

/// Number of differing bit positions, via XOR + popcount over packed words.
///
/// Panics on width mismatch; equal widths are a precondition everywhere
/// codes meet.
pub fn hamming_distance(a: &BinaryCode, b: &BinaryCode) -> usize {
    assert_eq!(
        a.width, b.width,
        "hamming_distance: width mismatch {} vs {}",
        a.width, b.width
    );
    a.words
        .iter()
        .zip(&b.words)
        .map(|(x, y)| (x ^ y).count_ones() as usize)
        .sum()
}

/// Returns a copy of `code` with bit `k` flipped; the input is unmodified.
pub fn flip_bit(code: &BinaryCode, k: usize) -> BinaryCode {
    assert!(
        k < code.width,
        "flip_bit: index {k} out of range for width {}",
        code.width
    );
    let mut out = code.clone();
    out.words[k / 64] ^= 1 << (k % 64);
    out
}

/// Nonempty sorted set of class indices attached to an item.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelSet {
    classes: Vec<u32>,
}

impl LabelSet {
    pub fn new(mut classes: Vec<u32>) -> Result<Self, CodeError> {
        if classes.is_empty() {
            return Err(CodeError::EmptyLabelSet);
        }
        classes.sort_unstable();
        classes.dedup();
        Ok(LabelSet { classes })
    }

    pub fn single(class: u32) -> Self {
        LabelSet {
            classes: vec![class],
        }
    }

    pub fn classes(&self) -> &[u32] {
        &self.classes
    }

    pub fn contains(&self, class: u32) -> bool {
        self.classes.binary_search(&class).is_ok()
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        false // nonempty by construction
    }

    /// True when the query and candidate share at least one class.
    pub fn shares_class(&self, other: &LabelSet) -> bool {
        let (mut i, mut j) = (0, 0);
        while i < self.classes.len() && j < other.classes.len() {
            match self.classes[i].cmp(&other.classes[j]) {
                std::cmp::Ordering::Equal => return true,
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
            }
        }
        false
    }
}

/// Distance from `code` to the nearest ground-truth codeword.
pub fn d_pos(code: &BinaryCode, labels: &LabelSet, book: &Codebook) -> usize {
    labels
        .classes()
        .iter()
        .map(|&c| hamming_distance(code, book.codeword(c as usize)))
        .min()
        .expect("label set is nonempty")
}

/// Mean distance from `code` to the codewords of all non-label classes.
pub fn d_neg(code: &BinaryCode, labels: &LabelSet, book: &Codebook) -> Result<f64, CodeError> {
    let total_classes = book.num_classes();
    let neg_count = total_classes - labels.len();
    if neg_count == 0 {
        return Err(CodeError::NoNegativeClasses(total_classes));
    }
    let mut sum = 0usize;
    for c in 0..total_classes {
        if !labels.contains(c as u32) {
            sum += hamming_distance(code, book.codeword(c));
        }
    }
    Ok(sum as f64 / neg_count as f64)
}

/// Indices of the `top_k` nearest database codes, ascending distance,
/// ties broken by ascending database index. `top_k` is clamped to the
/// database size.
///
/// The distance scan parallelizes over the database; the result is
/// identical to the sequential order.
pub fn rank_by_distance(query: &BinaryCode, database: &[BinaryCode], top_k: usize) -> Vec<usize> {
    assert!(!database.is_empty(), "rank_by_distance: empty database");
    let k = top_k.min(database.len());
    let mut keyed: Vec<(usize, usize)> =
        par::map_indexed(database.len(), |i| (hamming_distance(query, &database[i]), i));
    keyed.sort_unstable();
    keyed.truncate(k);
    keyed.into_iter().map(|(_, i)| i).collect()
}

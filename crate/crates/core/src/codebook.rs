//! Per-class codebooks with a guaranteed pairwise Hamming margin.
//!
//! Classes are mapped to codewords of a BCH code whose length 2^m − 1 is
//! matched to the requested width `b` either by padding with seeded
//! random bits or by truncating (with an exhaustive distance recheck).
//! Codebooks are immutable after construction and safe to share across
//! threads.

use crate::bch::{build_bch, generator_degree, BchCode};
use crate::galois::{GaloisField, MAX_M, MIN_M};
use crate::hamming::BinaryCode;
use crate::rng::{self, domain};
use rand::Rng;
use std::fmt::Write as _;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CodebookError {
    #[error("no BCH parameters give 2^k >= {classes} classes with margin at width {width}")]
    TooManyClasses { classes: usize, width: usize },
    #[error("codebook file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Target codewords for `num_classes` classes at width `b`, with minimum
/// pairwise distance `min_distance` over the first `bch_length` bits and
/// non-overlapping balls of radius `radius`.
#[derive(Debug, Clone)]
pub struct Codebook {
    b: usize,
    num_classes: usize,
    codewords: Vec<BinaryCode>,
    bch_length: usize,
    min_distance: usize,
    radius: usize,
    pad_seed: u64,
}

impl Codebook {
    /// Builds a codebook for `num_classes` classes at width `b`.
    ///
    /// Picks the largest m with 2^m − 1 <= b and the largest designed t
    /// whose message space still covers the classes, then pads each
    /// codeword with per-class seeded random bits. When no field length
    /// fits under `b`, the smallest longer code is truncated instead and
    /// the minimum distance is recomputed exhaustively.
    pub fn build(num_classes: usize, b: usize, seed: u64) -> Result<Self, CodebookError> {
        assert!(num_classes >= 2, "need at least two classes");
        assert!(b >= 4, "code width must be at least 4");
        let kmin = usize::BITS as usize - (num_classes - 1).leading_zeros() as usize;
        let infeasible = || CodebookError::TooManyClasses {
            classes: num_classes,
            width: b,
        };

        // Padding path: the longest field length that fits inside b.
        let pad_m = (MIN_M..=MAX_M).filter(|&m| (1usize << m) - 1 <= b).max();
        if let Some(m) = pad_m {
            let field = GaloisField::new(m).expect("m in supported range");
            if let Some(t) = largest_feasible_t(&field, kmin) {
                let code = build_bch(&field, t).expect("degree bounded by feasibility scan");
                let min_distance = if code.k() <= 16 {
                    let d = code.exhaustive_min_distance();
                    debug_assert!(d >= code.designed_distance());
                    d
                } else {
                    code.designed_distance()
                };
                let codewords = materialize(&code, num_classes, b, seed, code.n());
                return Ok(Self::assemble(
                    b,
                    codewords,
                    code.n(),
                    min_distance,
                    seed,
                ));
            }
        }

        // Truncation path: shortest field length at least b, dropping the
        // tail bits. Distance must be re-established exhaustively, which
        // bounds the usable message sizes.
        let start_m = (MIN_M..=MAX_M)
            .find(|&m| (1usize << m) - 1 >= b)
            .ok_or_else(infeasible)?;
        for m in start_m..=MAX_M {
            let field = GaloisField::new(m).expect("m in supported range");
            let Some(t_max) = largest_feasible_t(&field, kmin) else {
                continue;
            };
            for t in (1..=t_max).rev() {
                let code = build_bch(&field, t).expect("degree bounded by feasibility scan");
                if code.k() < kmin || code.k() > 16 {
                    continue;
                }
                let truncated_distance = code.exhaustive_min_prefix_weight(b);
                if truncated_distance >= 3 {
                    let codewords = materialize(&code, num_classes, b, seed, b);
                    return Ok(Self::assemble(b, codewords, b, truncated_distance, seed));
                }
            }
        }
        Err(infeasible())
    }

    /// Wraps explicit codewords (all the same width) into a codebook,
    /// measuring the minimum pairwise distance exhaustively. Used for
    /// hand-built and randomized codebooks in tests and tools.
    pub fn from_codewords(codewords: Vec<BinaryCode>) -> Result<Self, CodebookError> {
        if codewords.len() < 2 {
            return Err(CodebookError::Format(
                "codebook needs at least two codewords".into(),
            ));
        }
        let b = codewords[0].width();
        if codewords.iter().any(|c| c.width() != b) {
            return Err(CodebookError::Format("codeword widths differ".into()));
        }
        let mut min_distance = b + 1;
        for i in 0..codewords.len() {
            for j in i + 1..codewords.len() {
                min_distance =
                    min_distance.min(crate::hamming::hamming_distance(&codewords[i], &codewords[j]));
            }
        }
        if min_distance == 0 {
            return Err(CodebookError::Format("duplicate codewords".into()));
        }
        Ok(Self::assemble(b, codewords, b, min_distance, 0))
    }

    fn assemble(
        b: usize,
        codewords: Vec<BinaryCode>,
        bch_length: usize,
        min_distance: usize,
        pad_seed: u64,
    ) -> Self {
        let book = Codebook {
            b,
            num_classes: codewords.len(),
            codewords,
            bch_length,
            min_distance,
            radius: (min_distance - 1) / 2,
            pad_seed,
        };
        book.check_invariants();
        book
    }

    fn check_invariants(&self) {
        for i in 0..self.num_classes {
            for j in i + 1..self.num_classes {
                assert_ne!(
                    self.codewords[i], self.codewords[j],
                    "codewords must be distinct"
                );
                let d = self.codewords[i].prefix_distance(&self.codewords[j], self.bch_length);
                assert!(
                    d >= self.min_distance,
                    "pairwise distance {d} below recorded minimum {}",
                    self.min_distance
                );
            }
        }
    }

    pub fn width(&self) -> usize {
        self.b
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn codeword(&self, class: usize) -> &BinaryCode {
        &self.codewords[class]
    }

    pub fn codewords(&self) -> &[BinaryCode] {
        &self.codewords
    }

    pub fn bch_length(&self) -> usize {
        self.bch_length
    }

    pub fn min_distance(&self) -> usize {
        self.min_distance
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn pad_seed(&self) -> u64 {
        self.pad_seed
    }

    /// Default termination threshold, half the ball radius.
    pub fn default_eta(&self) -> usize {
        self.radius / 2
    }

    /// Serializes to the codebook text format: a header line followed by
    /// one '0'/'1' line per class, bit 0 first.
    pub fn to_file_string(&self) -> String {
        let mut out = String::new();
        writeln!(
            out,
            "# drlh-codebook v1 b={} C={} n={} D={} R={} seed={}",
            self.b, self.num_classes, self.bch_length, self.min_distance, self.radius, self.pad_seed
        )
        .expect("string write");
        for cw in &self.codewords {
            out.push_str(&cw.to_text());
            out.push('\n');
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<(), CodebookError> {
        std::fs::write(path, self.to_file_string())?;
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self, CodebookError> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| CodebookError::Format("empty codebook file".into()))?;
        let fields = parse_header(header)?;
        let (b, c, n, d, r, seed) = fields;
        let mut codewords = Vec::with_capacity(c);
        for (idx, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let cw = BinaryCode::from_text(line)
                .map_err(|e| CodebookError::Format(format!("line {}: {e}", idx + 2)))?;
            if cw.width() != b {
                return Err(CodebookError::Format(format!(
                    "line {}: width {} != b={b}",
                    idx + 2,
                    cw.width()
                )));
            }
            codewords.push(cw);
        }
        if codewords.len() != c {
            return Err(CodebookError::Format(format!(
                "expected {c} codewords, found {}",
                codewords.len()
            )));
        }
        if r != (d - 1) / 2 {
            return Err(CodebookError::Format(format!(
                "radius {r} inconsistent with distance {d}"
            )));
        }
        // Re-verify the recorded margin over the BCH prefix.
        for i in 0..codewords.len() {
            for j in i + 1..codewords.len() {
                let dist = codewords[i].prefix_distance(&codewords[j], n);
                if dist < d {
                    return Err(CodebookError::Format(format!(
                        "codewords {i} and {j} at distance {dist} < D={d}"
                    )));
                }
            }
        }
        Ok(Codebook {
            b,
            num_classes: c,
            codewords,
            bch_length: n,
            min_distance: d,
            radius: r,
            pad_seed: seed,
        })
    }

    pub fn load(path: &Path) -> Result<Self, CodebookError> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }
}

/// Encodes messages 0..C−1 and fits them to width `b`: `keep` leading
/// bits of the BCH codeword (keep = n to pad, keep = b to truncate),
/// padded per class from the seeded stream.
fn materialize(
    code: &BchCode,
    num_classes: usize,
    b: usize,
    seed: u64,
    keep: usize,
) -> Vec<BinaryCode> {
    (0..num_classes)
        .map(|class| {
            let bits = code.encode(class as u64);
            let mut out = BinaryCode::zeros(b);
            for (p, &bit) in bits.iter().take(keep.min(b)).enumerate() {
                out.set_bit(p, bit);
            }
            if b > keep {
                let mut pad_rng = rng::stream(&[domain::CODEBOOK_PAD, seed, class as u64]);
                for p in keep..b {
                    out.set_bit(p, pad_rng.gen::<bool>());
                }
            }
            out
        })
        .collect()
}

/// Largest designed t whose generator still leaves k >= kmin message
/// bits (and k >= 1). Feasible t values form a prefix 1..=t_max because
/// the generator degree is non-decreasing in t.
fn largest_feasible_t(field: &GaloisField, kmin: usize) -> Option<usize> {
    let n = field.order();
    let need = kmin.max(1);
    let mut best = None;
    for t in 1..=n / 2 {
        let degree = generator_degree(field, t);
        if n - degree >= need {
            best = Some(t);
        } else {
            break;
        }
    }
    best
}

fn parse_header(header: &str) -> Result<(usize, usize, usize, usize, usize, u64), CodebookError> {
    let bad = |msg: &str| CodebookError::Format(format!("header: {msg}"));
    let rest = header
        .strip_prefix("# drlh-codebook v1 ")
        .ok_or_else(|| bad("missing '# drlh-codebook v1' magic"))?;
    let mut b = None;
    let mut c = None;
    let mut n = None;
    let mut d = None;
    let mut r = None;
    let mut seed = None;
    for token in rest.split_whitespace() {
        let (key, value) = token
            .split_once('=')
            .ok_or_else(|| bad(&format!("malformed field {token:?}")))?;
        let parsed: u64 = value
            .parse()
            .map_err(|_| bad(&format!("non-numeric value in {token:?}")))?;
        match key {
            "b" => b = Some(parsed as usize),
            "C" => c = Some(parsed as usize),
            "n" => n = Some(parsed as usize),
            "D" => d = Some(parsed as usize),
            "R" => r = Some(parsed as usize),
            "seed" => seed = Some(parsed),
            other => return Err(bad(&format!("unknown field {other:?}"))),
        }
    }
    match (b, c, n, d, r, seed) {
        (Some(b), Some(c), Some(n), Some(d), Some(r), Some(seed)) => Ok((b, c, n, d, r, seed)),
        _ => Err(bad("missing one of b/C/n/D/R/seed")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamming::hamming_distance;

    #[test]
    fn sixteen_bit_ten_classes() {
        // 15-bit BCH core, one padded bit, distance 7, radius 3.
        let book = Codebook::build(10, 16, 7).unwrap();
        assert_eq!(book.bch_length(), 15);
        assert_eq!(book.min_distance(), 7);
        assert_eq!(book.radius(), 3);
        assert_eq!(book.width() - book.bch_length(), 1);
        assert_eq!(book.default_eta(), 1);
    }

    #[test]
    fn thirty_two_bit_twenty_one_classes() {
        let book = Codebook::build(21, 32, 0).unwrap();
        assert_eq!(book.bch_length(), 31);
        assert_eq!(book.min_distance(), 15);
        assert_eq!(book.radius(), 7);
    }

    #[test]
    fn two_classes_width_seven() {
        // Exact field fit: n = 7, no padding. The repetition code wins.
        let book = Codebook::build(2, 7, 3).unwrap();
        assert_eq!(book.bch_length(), 7);
        for i in 0..2 {
            for j in i + 1..2 {
                let d = hamming_distance(book.codeword(i), book.codeword(j));
                assert!(d >= book.min_distance());
            }
        }
        assert_eq!(book.min_distance(), 7);
    }

    #[test]
    fn truncation_path_recomputes_distance() {
        // b=5 < 7 forces truncating the [7,1,7] repetition code.
        let book = Codebook::build(2, 5, 1).unwrap();
        assert_eq!(book.bch_length(), 5);
        assert_eq!(book.min_distance(), 5);
        assert_eq!(book.radius(), 2);
        let d = hamming_distance(book.codeword(0), book.codeword(1));
        assert_eq!(d, 5);
    }

    #[test]
    fn infeasible_parameters_rejected() {
        // Three classes cannot keep any margin in four bits.
        let err = Codebook::build(3, 4, 0);
        assert!(matches!(err, Err(CodebookError::TooManyClasses { .. })));
    }

    #[test]
    fn deterministic_per_seed_and_sensitive_to_it() {
        let a = Codebook::build(10, 16, 7).unwrap();
        let b = Codebook::build(10, 16, 7).unwrap();
        assert_eq!(a.to_file_string(), b.to_file_string());
        let c = Codebook::build(10, 16, 8).unwrap();
        // The BCH core is seed-independent; padding may differ.
        assert_eq!(
            a.codeword(0).prefix_distance(c.codeword(0), a.bch_length()),
            0
        );
    }

    #[test]
    fn padding_preserves_margin() {
        let book = Codebook::build(10, 24, 5).unwrap(); // 15-bit core + 9 pad bits
        for i in 0..book.num_classes() {
            for j in i + 1..book.num_classes() {
                assert!(
                    hamming_distance(book.codeword(i), book.codeword(j)) >= book.min_distance()
                );
            }
        }
    }

    #[test]
    fn exhaustive_margin_over_selected_codewords() {
        // No sampling: every pair over the BCH prefix.
        for (c, b) in [(10usize, 16usize), (21, 32), (4, 8)] {
            let book = Codebook::build(c, b, 9).unwrap();
            for i in 0..c {
                for j in i + 1..c {
                    let d = book.codeword(i).prefix_distance(book.codeword(j), book.bch_length());
                    assert!(d >= book.min_distance(), "C={c} b={b} pair ({i},{j})");
                }
            }
        }
    }

    #[test]
    fn file_round_trip() {
        let book = Codebook::build(10, 16, 7).unwrap();
        let text = book.to_file_string();
        assert!(text.starts_with("# drlh-codebook v1 b=16 C=10 n=15 D=7 R=3 seed=7\n"));
        let parsed = Codebook::parse(&text).unwrap();
        assert_eq!(parsed.to_file_string(), text);
        assert_eq!(parsed.codeword(3), book.codeword(3));
    }

    #[test]
    fn parse_rejects_corruption() {
        let book = Codebook::build(4, 8, 2).unwrap();
        let good = book.to_file_string();
        assert!(Codebook::parse(&good.replace("v1", "v2")).is_err());
        // Dropping a codeword line breaks the count.
        let mut lines: Vec<&str> = good.lines().collect();
        lines.pop();
        assert!(Codebook::parse(&lines.join("\n")).is_err());
        // Tampering a codeword into a duplicate breaks the margin check.
        let dup = {
            let mut ls: Vec<String> = good.lines().map(String::from).collect();
            ls[2] = ls[1].clone();
            ls.join("\n")
        };
        assert!(Codebook::parse(&dup).is_err());
    }

    #[test]
    fn from_codewords_measures_distance() {
        let cws = vec![
            BinaryCode::from_text("000").unwrap(),
            BinaryCode::from_text("111").unwrap(),
        ];
        let book = Codebook::from_codewords(cws).unwrap();
        assert_eq!(book.min_distance(), 3);
        assert_eq!(book.radius(), 1);
        let dup = vec![
            BinaryCode::from_text("101").unwrap(),
            BinaryCode::from_text("101").unwrap(),
        ];
        assert!(Codebook::from_codewords(dup).is_err());
    }
}

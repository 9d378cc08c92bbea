//! Binary BCH codes: generator construction and systematic encoding.
//!
//! Only encoding is needed here — the codewords serve as large-margin
//! class anchors, never as a channel code, so there is no decoder.

use crate::galois::{BinaryPolynomial, GaloisField};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BchError {
    #[error("designed distance too large: generator degree {degree} >= code length {n}")]
    DesignedDistanceTooLarge { degree: usize, n: usize },
}

/// A binary BCH code of length n = 2^m − 1 with designed error-correction
/// capability t. The generator is the lcm of the minimal polynomials of
/// α, α², …, α^{2t}, which guarantees minimum distance ≥ 2t + 1.
#[derive(Debug, Clone)]
pub struct BchCode {
    n: usize,
    k: usize,
    designed_t: usize,
    generator: BinaryPolynomial,
}

impl BchCode {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn designed_t(&self) -> usize {
        self.designed_t
    }

    /// Designed minimum distance 2t + 1.
    pub fn designed_distance(&self) -> usize {
        2 * self.designed_t + 1
    }

    pub fn generator(&self) -> &BinaryPolynomial {
        &self.generator
    }

    /// Systematic encoding of a k-bit message integer.
    ///
    /// Returns the codeword as bits indexed 0..n where bit p is the
    /// coefficient of x^{n-1-p}: message bits occupy the high-order
    /// positions (bit 0 = message bit k−1), parity fills the tail.
    pub fn encode(&self, message: u64) -> Vec<bool> {
        debug_assert!(self.k <= 64, "message integers limited to 64 bits");
        debug_assert!(self.k == 64 || message < (1u64 << self.k));
        let msg_bits: Vec<bool> = (0..self.k).map(|j| message >> j & 1 == 1).collect();
        let msg_poly = BinaryPolynomial::from_coefficients(&msg_bits);
        let shifted = msg_poly.shift(self.n - self.k);
        let parity = shifted.rem(&self.generator);
        let codeword_poly = shifted.add(&parity);
        (0..self.n)
            .map(|p| codeword_poly.coeff(self.n - 1 - p))
            .collect()
    }

    /// Exact minimum distance by exhaustive enumeration of all 2^k
    /// codewords (the code is linear, so this is the minimum weight of a
    /// nonzero codeword). Intended for k ≤ 16; cost grows as 2^k.
    pub fn exhaustive_min_distance(&self) -> usize {
        self.exhaustive_min_prefix_weight(self.n)
    }

    /// Minimum, over nonzero messages, of the codeword weight restricted
    /// to the first `prefix` bit positions. Returns 0 when two distinct
    /// codewords collide on the prefix.
    pub fn exhaustive_min_prefix_weight(&self, prefix: usize) -> usize {
        assert!(prefix <= self.n);
        assert!(self.k <= 24, "exhaustive enumeration limited to small k");
        let basis: Vec<Vec<bool>> = (0..self.k).map(|j| self.encode(1u64 << j)).collect();
        let mut best = prefix + 1;
        let mut current = vec![false; self.n];
        // Gray-code walk: message for step i is i ^ (i >> 1); consecutive
        // steps differ in exactly one basis row.
        let mut prev_gray = 0u64;
        for i in 1..(1u64 << self.k) {
            let gray = i ^ (i >> 1);
            let changed = (gray ^ prev_gray).trailing_zeros() as usize;
            prev_gray = gray;
            for (c, b) in current.iter_mut().zip(&basis[changed]) {
                *c ^= b;
            }
            let w = current[..prefix].iter().filter(|&&b| b).count();
            best = best.min(w);
        }
        best
    }
}

/// Builds the BCH code over `field` with designed error-correction
/// capability `designed_t`: generator = lcm of the minimal polynomials of
/// α^1 … α^{2t}.
pub fn build_bch(field: &GaloisField, designed_t: usize) -> Result<BchCode, BchError> {
    assert!(designed_t >= 1, "designed_t must be at least 1");
    let n = field.order();
    let mut generator = BinaryPolynomial::one();
    let mut covered = vec![false; n + 1];
    for e in 1..=(2 * designed_t) {
        let e = e % n;
        if e == 0 || covered[e] {
            continue;
        }
        for &j in &field.conjugacy_class(e) {
            covered[j] = true;
        }
        generator = generator.mul(&field.minimal_polynomial(e));
    }
    let degree = generator.degree().expect("generator is nonzero");
    if degree >= n {
        return Err(BchError::DesignedDistanceTooLarge { degree, n });
    }
    let code = BchCode {
        n,
        k: n - degree,
        designed_t,
        generator,
    };
    debug_assert!(
        code.generator.divides(&x_pow_n_minus_one(n)),
        "generator must divide x^n - 1"
    );
    Ok(code)
}

/// Degree of the lcm of the minimal polynomials of α^1 … α^{2t}, without
/// building the polynomial. Used to pick the largest feasible t.
pub fn generator_degree(field: &GaloisField, designed_t: usize) -> usize {
    let n = field.order();
    let mut covered = vec![false; n + 1];
    let mut degree = 0usize;
    for e in 1..=(2 * designed_t) {
        let e = e % n;
        if e == 0 || covered[e] {
            continue;
        }
        let class = field.conjugacy_class(e);
        degree += class.len();
        for j in class {
            covered[j] = true;
        }
    }
    degree
}

fn x_pow_n_minus_one(n: usize) -> BinaryPolynomial {
    BinaryPolynomial::monomial(n).add(&BinaryPolynomial::one())
}

//! GF(2^m) arithmetic and minimal polynomials.
//!
//! Fields are built over fixed primitive polynomials (one per extension
//! degree, from the standard tables) so that everything derived from them
//! — generator polynomials, codebooks — is reproducible. Multiplication
//! goes through log/antilog tables of the cyclic group generated by
//! α = x (element 2).

use thiserror::Error;

/// Largest supported extension degree.
pub const MAX_M: u32 = 16;
/// Smallest supported extension degree.
pub const MIN_M: u32 = 3;

/// Primitive polynomial bitmask for each m in `MIN_M..=MAX_M`
/// (bit i = coefficient of x^i).
const PRIMITIVE_POLYS: [u32; 14] = [
    0x000b,   // m=3:  x^3 + x + 1
    0x0013,   // m=4:  x^4 + x + 1
    0x0025,   // m=5:  x^5 + x^2 + 1
    0x0043,   // m=6:  x^6 + x + 1
    0x0089,   // m=7:  x^7 + x^3 + 1
    0x011d,   // m=8:  x^8 + x^4 + x^3 + x^2 + 1
    0x0211,   // m=9:  x^9 + x^4 + 1
    0x0409,   // m=10: x^10 + x^3 + 1
    0x0805,   // m=11: x^11 + x^2 + 1
    0x1053,   // m=12: x^12 + x^6 + x^4 + x + 1
    0x201b,   // m=13: x^13 + x^4 + x^3 + x + 1
    0x4443,   // m=14: x^14 + x^10 + x^6 + x + 1
    0x8003,   // m=15: x^15 + x + 1
    0x1100b,  // m=16: x^16 + x^12 + x^3 + x + 1
];

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GaloisError {
    #[error("extension degree m={0} outside supported range {MIN_M}..={MAX_M}")]
    UnsupportedDegree(u32),
}

/// The finite field GF(2^m) with log/antilog tables over a fixed
/// primitive polynomial. Elements are bitmasks of polynomials of degree
/// < m; addition is XOR.
#[derive(Debug, Clone)]
pub struct GaloisField {
    m: u32,
    primitive_poly: u32,
    /// log[x] = e such that α^e = x, for nonzero x; log[0] unused.
    log: Vec<u16>,
    /// antilog[e] = α^e for e in 0..2^m - 1.
    antilog: Vec<u16>,
}

impl GaloisField {
    pub fn new(m: u32) -> Result<Self, GaloisError> {
        if !(MIN_M..=MAX_M).contains(&m) {
            return Err(GaloisError::UnsupportedDegree(m));
        }
        let primitive_poly = PRIMITIVE_POLYS[(m - MIN_M) as usize];
        let order = (1usize << m) - 1;
        let mut log = vec![0u16; 1 << m];
        let mut antilog = vec![0u16; order];
        let mut x: u32 = 1;
        for e in 0..order {
            antilog[e] = x as u16;
            log[x as usize] = e as u16;
            x <<= 1;
            if x & (1 << m) != 0 {
                x ^= primitive_poly;
            }
        }
        debug_assert_eq!(x, 1, "alpha must have order exactly 2^m - 1");
        Ok(GaloisField {
            m,
            primitive_poly,
            log,
            antilog,
        })
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn primitive_poly(&self) -> u32 {
        self.primitive_poly
    }

    /// Group order 2^m - 1.
    pub fn order(&self) -> usize {
        self.antilog.len()
    }

    /// α^e, with e taken mod the group order.
    pub fn alpha_pow(&self, e: usize) -> u16 {
        self.antilog[e % self.order()]
    }

    /// log_α(x) for nonzero x.
    pub fn log(&self, x: u16) -> u16 {
        debug_assert!(x != 0, "log of zero is undefined");
        self.log[x as usize]
    }

    /// Product in GF(2^m); zero is absorbing.
    pub fn mul(&self, x: u16, y: u16) -> u16 {
        if x == 0 || y == 0 {
            return 0;
        }
        let e = self.log[x as usize] as usize + self.log[y as usize] as usize;
        self.antilog[e % self.order()]
    }

    /// Evaluates a binary polynomial at the field element `x`.
    pub fn eval_binary_poly(&self, poly: &BinaryPolynomial, x: u16) -> u16 {
        let mut acc = 0u16;
        let Some(deg) = poly.degree() else {
            return 0;
        };
        for i in (0..=deg).rev() {
            acc = self.mul(acc, x);
            if poly.coeff(i) {
                acc ^= 1;
            }
        }
        acc
    }

    /// Conjugacy class of α^exponent: the exponents {e·2^i mod (2^m − 1)}.
    pub fn conjugacy_class(&self, exponent: usize) -> Vec<usize> {
        let n = self.order();
        let start = exponent % n;
        let mut class = vec![start];
        let mut e = start * 2 % n;
        while e != start {
            class.push(e);
            e = e * 2 % n;
        }
        class
    }

    /// Minimal polynomial of α^exponent over GF(2): the monic binary
    /// polynomial of least degree with α^exponent as a root, expanded as
    /// ∏ (x + α^j) over the conjugacy class.
    pub fn minimal_polynomial(&self, exponent: usize) -> BinaryPolynomial {
        let class = self.conjugacy_class(exponent);
        // Coefficients live in GF(2^m) during the expansion and collapse
        // to GF(2) once the product runs over the whole class.
        let mut coeffs: Vec<u16> = vec![1];
        for &j in &class {
            let root = self.alpha_pow(j);
            let mut next = vec![0u16; coeffs.len() + 1];
            for (i, &c) in coeffs.iter().enumerate() {
                next[i + 1] ^= c; // x * c
                next[i] ^= self.mul(c, root); // root * c
            }
            coeffs = next;
        }
        let bits: Vec<bool> = coeffs
            .iter()
            .map(|&c| {
                debug_assert!(c <= 1, "minimal polynomial coefficient not binary");
                c == 1
            })
            .collect();
        BinaryPolynomial::from_coefficients(&bits)
    }
}

/// Polynomial over GF(2), coefficients packed lowest-degree-first in
/// 64-bit words. Canonical form: no trailing zero words, so the highest
/// stored coefficient is 1 unless the polynomial is zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryPolynomial {
    words: Vec<u64>,
}

impl BinaryPolynomial {
    pub fn zero() -> Self {
        BinaryPolynomial { words: Vec::new() }
    }

    pub fn one() -> Self {
        BinaryPolynomial { words: vec![1] }
    }

    /// x^k
    pub fn monomial(k: usize) -> Self {
        let mut words = vec![0u64; k / 64 + 1];
        words[k / 64] = 1 << (k % 64);
        BinaryPolynomial { words }
    }

    /// Builds from a low-degree-first coefficient list.
    pub fn from_coefficients(bits: &[bool]) -> Self {
        let mut words = vec![0u64; bits.len().div_ceil(64)];
        for (i, &b) in bits.iter().enumerate() {
            if b {
                words[i / 64] |= 1 << (i % 64);
            }
        }
        let mut p = BinaryPolynomial { words };
        p.trim();
        p
    }

    /// Bitmask constructor for small polynomials (bit i = coeff of x^i).
    pub fn from_mask(mask: u64) -> Self {
        let mut p = BinaryPolynomial { words: vec![mask] };
        p.trim();
        p
    }

    /// Low word as a bitmask; only meaningful for degree < 64.
    pub fn mask(&self) -> u64 {
        self.words.first().copied().unwrap_or(0)
    }

    fn trim(&mut self) {
        while self.words.last() == Some(&0) {
            self.words.pop();
        }
    }

    pub fn is_zero(&self) -> bool {
        self.words.is_empty()
    }

    /// Degree, or None for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        let last = self.words.last()?;
        Some((self.words.len() - 1) * 64 + (63 - last.leading_zeros() as usize))
    }

    pub fn coeff(&self, i: usize) -> bool {
        self.words
            .get(i / 64)
            .map_or(false, |w| w >> (i % 64) & 1 == 1)
    }

    pub fn add(&self, other: &BinaryPolynomial) -> BinaryPolynomial {
        let mut words = vec![0u64; self.words.len().max(other.words.len())];
        for (i, w) in words.iter_mut().enumerate() {
            *w = self.words.get(i).copied().unwrap_or(0) ^ other.words.get(i).copied().unwrap_or(0);
        }
        let mut p = BinaryPolynomial { words };
        p.trim();
        p
    }

    pub fn shift(&self, k: usize) -> BinaryPolynomial {
        if self.is_zero() {
            return BinaryPolynomial::zero();
        }
        let word_shift = k / 64;
        let bit_shift = k % 64;
        let mut words = vec![0u64; self.words.len() + word_shift + 1];
        for (i, &w) in self.words.iter().enumerate() {
            words[i + word_shift] |= w << bit_shift;
            if bit_shift != 0 {
                words[i + word_shift + 1] |= w >> (64 - bit_shift);
            }
        }
        let mut p = BinaryPolynomial { words };
        p.trim();
        p
    }

    pub fn mul(&self, other: &BinaryPolynomial) -> BinaryPolynomial {
        if self.is_zero() || other.is_zero() {
            return BinaryPolynomial::zero();
        }
        let deg = other.degree().expect("nonzero");
        let mut acc = BinaryPolynomial::zero();
        for i in 0..=deg {
            if other.coeff(i) {
                acc = acc.add(&self.shift(i));
            }
        }
        acc
    }

    /// Remainder of `self` divided by `divisor` (long division over GF(2)).
    pub fn rem(&self, divisor: &BinaryPolynomial) -> BinaryPolynomial {
        let ddeg = divisor.degree().expect("division by zero polynomial");
        let mut r = self.clone();
        while let Some(rdeg) = r.degree() {
            if rdeg < ddeg {
                break;
            }
            r = r.add(&divisor.shift(rdeg - ddeg));
        }
        r
    }

    /// True when `self` divides `other` exactly.
    pub fn divides(&self, other: &BinaryPolynomial) -> bool {
        other.rem(self).is_zero()
    }
}

impl std::fmt::Display for BinaryPolynomial {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let Some(deg) = self.degree() else {
            return write!(f, "0");
        };
        let mut first = true;
        for i in (0..=deg).rev() {
            if self.coeff(i) {
                if !first {
                    write!(f, " + ")?;
                }
                match i {
                    0 => write!(f, "1")?,
                    1 => write!(f, "x")?,
                    _ => write!(f, "x^{i}")?,
                }
                first = false;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_tables_consistent() {
        for m in MIN_M..=8 {
            let f = GaloisField::new(m).unwrap();
            // antilog[log[x]] = x for every nonzero x.
            for x in 1..(1u32 << m) as u16 {
                assert_eq!(f.antilog[f.log[x as usize] as usize], x);
            }
            // alpha generates the full multiplicative group.
            let mut seen = vec![false; 1 << m];
            for e in 0..f.order() {
                let v = f.alpha_pow(e);
                assert!(!seen[v as usize], "alpha order below 2^m - 1 for m={m}");
                seen[v as usize] = true;
            }
        }
    }

    #[test]
    fn mul_identity_and_zero() {
        let f = GaloisField::new(4).unwrap();
        assert_eq!(f.mul(1, 9), 9);
        assert_eq!(f.mul(0, 13), 0);
        assert_eq!(f.mul(13, 0), 0);
    }

    /// Brute-force product: carryless multiply then reduce mod the
    /// primitive polynomial; independent of the log tables.
    fn mul_oracle(m: u32, poly: u32, x: u16, y: u16) -> u16 {
        let mut prod: u64 = 0;
        for i in 0..16 {
            if y >> i & 1 == 1 {
                prod ^= (x as u64) << i;
            }
        }
        for bit in (m..32).rev() {
            if prod >> bit & 1 == 1 {
                prod ^= (poly as u64) << (bit - m);
            }
        }
        prod as u16
    }

    #[test]
    fn mul_alpha_powers() {
        // alpha * alpha^3 = alpha^4 = alpha + 1 under x^4 + x + 1.
        let f = GaloisField::new(4).unwrap();
        assert_eq!(f.mul(0b0010, 0b1000), 0b0011);
        assert_eq!(mul_oracle(4, f.primitive_poly(), 0b0010, 0b1000), 0b0011);
    }

    #[test]
    fn mul_matches_oracle_exhaustively_m4() {
        let f = GaloisField::new(4).unwrap();
        for x in 0..16u16 {
            for y in 0..16u16 {
                assert_eq!(f.mul(x, y), mul_oracle(4, f.primitive_poly(), x, y));
            }
        }
    }

    #[test]
    fn field_axioms_exhaustive_m4() {
        let f = GaloisField::new(4).unwrap();
        for x in 0..16u16 {
            for y in 0..16u16 {
                assert_eq!(f.mul(x, y), f.mul(y, x));
                for z in 0..16u16 {
                    assert_eq!(f.mul(f.mul(x, y), z), f.mul(x, f.mul(y, z)));
                    // distributes over XOR (field addition)
                    assert_eq!(f.mul(x, y ^ z), f.mul(x, y) ^ f.mul(x, z));
                }
            }
        }
    }

    #[test]
    fn minimal_polynomials_m4() {
        let f = GaloisField::new(4).unwrap();
        // conjugacy class {1,2,4,8} -> x^4 + x + 1
        assert_eq!(f.minimal_polynomial(1).mask(), 0b1_0011);
        // {3,6,12,9} -> x^4 + x^3 + x^2 + x + 1
        assert_eq!(f.minimal_polynomial(3).mask(), 0b1_1111);
        // {5,10} -> x^2 + x + 1
        assert_eq!(f.minimal_polynomial(5).mask(), 0b111);
    }

    #[test]
    fn conjugacy_classes_m4() {
        let f = GaloisField::new(4).unwrap();
        assert_eq!(f.conjugacy_class(1), vec![1, 2, 4, 8]);
        assert_eq!(f.conjugacy_class(3), vec![3, 6, 12, 9]);
        assert_eq!(f.conjugacy_class(5), vec![5, 10]);
    }

    #[test]
    fn minimal_polynomial_has_root_and_degree() {
        for m in [3u32, 4, 5, 6] {
            let f = GaloisField::new(m).unwrap();
            for e in 1..f.order() {
                let mp = f.minimal_polynomial(e);
                assert_eq!(mp.degree(), Some(f.conjugacy_class(e).len()));
                assert_eq!(f.eval_binary_poly(&mp, f.alpha_pow(e)), 0);
            }
        }
    }

    #[test]
    fn polynomial_arithmetic_basics() {
        let a = BinaryPolynomial::from_mask(0b1011); // x^3 + x + 1
        let b = BinaryPolynomial::from_mask(0b110); // x^2 + x
        assert_eq!(a.mul(&b).mask(), {
            // (x^3+x+1)(x^2+x) = x^5 + x^4 + x^3 + x
            0b111010
        });
        assert_eq!(a.degree(), Some(3));
        assert!(BinaryPolynomial::zero().degree().is_none());
        let m = BinaryPolynomial::monomial(7);
        assert_eq!(m.rem(&a).degree().unwrap() < 3, true);
        // x^7 mod (x^3+x+1): x^7 = (x^3+x+1) q(x) + r(x); check via divides
        let q_times = m.add(&m.rem(&a));
        assert!(a.divides(&q_times));
    }

    #[test]
    fn unsupported_degree_rejected() {
        assert!(GaloisField::new(2).is_err());
        assert!(GaloisField::new(17).is_err());
    }
}

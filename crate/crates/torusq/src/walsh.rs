//! Bit codecs, Walsh/Rademacher functions, the fast Walsh-Fourier transform,
//! the multi-index <-> bitstring encoding, and closed-form Walsh coefficients
//! of the diagonal evolution Hamiltonian.
//!
//! One bit-order convention holds project-wide: a bitstring's first bit is
//! the most significant bit of its integer value. Walsh functions pair the
//! plain binary digits of the order `j` with the *reversed* digits of the
//! argument `m`, which is what makes the Hamiltonian coefficients land on
//! powers of two.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::classical::{eigenfrequency, Frequencies};
use crate::rkha::{IndexSetN, MultiIndex, RkhaError};

#[derive(Debug, Error)]
pub enum WalshError {
    #[error("value {value} does not fit in {width} bits")]
    OutOfRange { value: u64, width: u32 },
    #[error("length {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("multi-index {0:?} lies outside the truncated index set")]
    IndexOutsideSet(Vec<i64>),
    #[error("bitstring has {got} bits, expected {expected}")]
    WidthMismatch { got: u32, expected: u32 },
    #[error(transparent)]
    Index(#[from] RkhaError),
}

/// An ordered n-bit register value. Bit 1 is the most significant bit, so
/// the integer value is `sum_i bit_i 2^(n-i)` and "110" reads as 6.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitString {
    n: u32,
    value: u64,
}

impl BitString {
    pub fn from_value(value: u64, n: u32) -> Result<Self, WalshError> {
        if n == 0 || n > 63 || value >> n != 0 {
            return Err(WalshError::OutOfRange { value, width: n });
        }
        Ok(Self { n, value })
    }

    /// Bits given most-significant first.
    pub fn from_bits(bits: &[bool]) -> Self {
        assert!(!bits.is_empty() && bits.len() <= 63);
        let mut value = 0u64;
        for &b in bits {
            value = (value << 1) | b as u64;
        }
        Self {
            n: bits.len() as u32,
            value,
        }
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn value(&self) -> u64 {
        self.value
    }

    /// Bits most-significant first.
    pub fn bits(&self) -> Vec<bool> {
        (0..self.n)
            .map(|i| (self.value >> (self.n - 1 - i)) & 1 == 1)
            .collect()
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.bits() {
            write!(f, "{}", b as u8)?;
        }
        Ok(())
    }
}

/// Reverse the low `width` bits of `m`.
pub fn bit_reverse(m: u64, width: u32) -> u64 {
    debug_assert!(width <= 63 && m >> width == 0);
    let mut out = 0u64;
    for i in 0..width {
        out |= ((m >> i) & 1) << (width - 1 - i);
    }
    out
}

/// Little-endian binary digit sequence of `j`: the first element is the
/// least significant digit, so as a [`BitString`] the integer value is the
/// bit reversal of `j`.
pub fn binary_expand(j: u64, width: u32) -> Result<BitString, WalshError> {
    if width == 0 || width > 63 || j >> width != 0 {
        return Err(WalshError::OutOfRange { value: j, width });
    }
    BitString::from_value(bit_reverse(j, width), width)
}

/// Digit-reversed counterpart: the first bit is the most significant digit
/// of `m`, so the integer value round-trips to `m`.
pub fn reversed_binary(m: u64, width: u32) -> Result<BitString, WalshError> {
    BitString::from_value(m, width)
}

/// Discrete Walsh function `w_j(m) = (-1)^(sum_i beta_i(j) * rev_beta_i(m))`,
/// which reduces to a parity of `j AND bit_reverse(m)`.
pub fn walsh_function(j: u64, m: u64, n: u32) -> i32 {
    debug_assert!(j >> n == 0 && m >> n == 0);
    if (j & bit_reverse(m, n)).count_ones() % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Rademacher function `R_(l+1)` sampled at `m/2^n`; equals the single-bit
/// Walsh function of order `2^l`.
pub fn rademacher(l: u32, m: u64, n: u32) -> i32 {
    walsh_function(1 << l, m, n)
}

/// Real Walsh-Fourier coefficients, keyed by order; absent keys are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct WalshCoeffs {
    n: u32,
    coeffs: BTreeMap<u64, f64>,
}

impl WalshCoeffs {
    pub fn new(n: u32, coeffs: BTreeMap<u64, f64>) -> Self {
        debug_assert!(coeffs.keys().all(|&k| k >> n == 0));
        Self { n, coeffs }
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn get(&self, k: u64) -> f64 {
        self.coeffs.get(&k).copied().unwrap_or(0.0)
    }

    /// Stored (nonzero) entries in ascending order of the Walsh order.
    pub fn entries(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.coeffs.iter().map(|(&k, &v)| (k, v))
    }

    pub fn support_len(&self) -> usize {
        self.coeffs.len()
    }

    /// Pointwise reconstruction `sum_j h_j w_j(m)`.
    pub fn reconstruct(&self, m: u64) -> f64 {
        self.coeffs
            .iter()
            .map(|(&k, &v)| v * walsh_function(k, m, self.n) as f64)
            .sum()
    }
}

fn fwht_in_place(values: &mut [f64]) {
    let n = values.len();
    let mut len = 1;
    while len < n {
        for block in values.chunks_exact_mut(2 * len) {
            let (lo, hi) = block.split_at_mut(len);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x + y;
                *b = x - y;
            }
        }
        len *= 2;
    }
}

/// Discrete Walsh-Fourier transform: `h_j = (1/N) sum_m w_j(m) values[m]`.
///
/// Computed in O(N log N): the digit-reversed pairing inside `w_j` is
/// absorbed by bit-reverse-permuting the input, after which the natural-order
/// fast transform applies. Exact zeros are dropped from the result map.
pub fn walsh_fourier_transform(values: &[f64]) -> Result<WalshCoeffs, WalshError> {
    let len = values.len();
    if !len.is_power_of_two() || len < 2 {
        return Err(WalshError::NotPowerOfTwo(len));
    }
    let n = len.trailing_zeros();
    let mut work: Vec<f64> = (0..len)
        .map(|m| values[bit_reverse(m as u64, n) as usize])
        .collect();
    fwht_in_place(&mut work);
    let scale = 1.0 / len as f64;
    let coeffs = work
        .into_iter()
        .enumerate()
        .filter(|&(_, v)| v != 0.0)
        .map(|(k, v)| (k as u64, v * scale))
        .collect();
    Ok(WalshCoeffs::new(n, coeffs))
}

/// Inverse transform: tabulates `sum_j h_j w_j(m)` for all m, fast.
pub fn walsh_inverse_transform(coeffs: &WalshCoeffs) -> Vec<f64> {
    let len = 1usize << coeffs.n;
    let mut work = vec![0.0; len];
    for (k, v) in coeffs.entries() {
        work[k as usize] = v;
    }
    fwht_in_place(&mut work);
    (0..len)
        .map(|m| work[bit_reverse(m as u64, coeffs.n) as usize])
        .collect()
}

/// Tabulated eigenfrequency function: entry `m` is `omega_j` for the
/// multi-index decoded from the register value `m`.
pub fn spectral_function(n: u32, d: usize, freqs: &Frequencies) -> Result<Vec<f64>, WalshError> {
    let iset = IndexSetN::new(n, d)?;
    Ok((0..iset.len())
        .map(|m| eigenfrequency(&iset.multi_index(m), freqs))
        .collect())
}

/// Walsh coefficients of a diagonal phase function `m -> sum_i a_i j_i(m)`
/// with arbitrary real weights, one coefficient per qubit at order
/// `2^(l + (i-1) n/d)` with value `-a_i (2^(n/d - l - 1) + [l == 0]) / 2`.
/// Used both for the evolution Hamiltonian (weights = rotation frequencies)
/// and the shallow preparation shift (weights = torus coordinates, which may
/// vanish).
pub fn shift_walsh_coeffs(n: u32, d: usize, weights: &[f64]) -> Result<WalshCoeffs, WalshError> {
    let iset = IndexSetN::new(n, d)?;
    if weights.len() != d {
        return Err(WalshError::Index(RkhaError::InvalidParams(format!(
            "weight vector has dimension {}, expected {d}",
            weights.len()
        ))));
    }
    let w = iset.width();
    let mut coeffs = BTreeMap::new();
    for (i, &alpha) in weights.iter().enumerate() {
        for l in 0..w {
            let order = 1u64 << (l + i as u32 * w);
            let magnitude = ((1u64 << (w - l - 1)) as f64 + if l == 0 { 1.0 } else { 0.0 }) / 2.0;
            coeffs.insert(order, -alpha * magnitude);
        }
    }
    Ok(WalshCoeffs::new(n, coeffs))
}

/// Closed-form Walsh coefficients of the evolution Hamiltonian: exactly one
/// coefficient per qubit. See [`shift_walsh_coeffs`] for the formula.
pub fn hamiltonian_walsh_coeffs(
    n: u32,
    d: usize,
    freqs: &Frequencies,
) -> Result<WalshCoeffs, WalshError> {
    shift_walsh_coeffs(n, d, freqs.alphas())
}

/// Encode a multi-index as a register value: per-dimension ordinals written
/// in binary, dimension 1 occupying the most significant block.
pub fn encode_index(j: &MultiIndex, n: u32, d: usize) -> Result<BitString, WalshError> {
    let iset = IndexSetN::new(n, d)?;
    let rank = iset
        .rank(j)
        .ok_or_else(|| WalshError::IndexOutsideSet(j.components().to_vec()))?;
    BitString::from_value(rank as u64, n)
}

/// Inverse of [`encode_index`].
pub fn decode_index(b: &BitString, n: u32, d: usize) -> Result<MultiIndex, WalshError> {
    let iset = IndexSetN::new(n, d)?;
    if b.n() != n {
        return Err(WalshError::WidthMismatch {
            got: b.n(),
            expected: n,
        });
    }
    Ok(iset.multi_index(b.value() as usize))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::TAU;

    #[test]
    fn binary_expansion_examples() {
        assert_eq!(binary_expand(2, 2).unwrap().bits(), vec![false, true]);
        assert_eq!(binary_expand(3, 2).unwrap().bits(), vec![true, true]);
        assert_eq!(
            binary_expand(4, 3).unwrap().bits(),
            vec![false, false, true]
        );
        let b6 = reversed_binary(6, 3).unwrap();
        assert_eq!(b6.bits(), vec![true, true, false]);
        assert_eq!(b6.to_string(), "110");
        assert_eq!(b6.value(), 6);
        assert!(binary_expand(4, 2).is_err());
    }

    #[test]
    fn bitstring_round_trips() {
        for m in 0..256u64 {
            assert_eq!(reversed_binary(m, 8).unwrap().value(), m);
            let b = binary_expand(m, 8).unwrap();
            assert_eq!(bit_reverse(b.value(), 8), m);
            assert_eq!(BitString::from_bits(&b.bits()), b);
        }
    }

    #[test]
    fn walsh_rows_order_two() {
        let rows: Vec<Vec<i32>> = (0..4)
            .map(|j| (0..4).map(|m| walsh_function(j, m, 2)).collect())
            .collect();
        assert_eq!(rows[0], vec![1, 1, 1, 1]);
        assert_eq!(rows[1], vec![1, 1, -1, -1]);
        assert_eq!(rows[2], vec![1, -1, 1, -1]);
        assert_eq!(rows[3], vec![1, -1, -1, 1]);
    }

    #[test]
    fn rademacher_reads_one_bit() {
        // R_(l+1)(m/2^n) = (-1)^(digit l+1 of m/2^n) with digits counted from
        // the binary point, i.e. bit n-1-l of m.
        let n = 6u32;
        for l in 0..n {
            for m in 0..(1u64 << n) {
                let digit = (m >> (n - 1 - l)) & 1;
                let expected = if digit == 0 { 1 } else { -1 };
                assert_eq!(rademacher(l, m, n), expected);
            }
        }
    }

    #[test]
    fn walsh_orthonormality() {
        let n = 6u32;
        let size = 1u64 << n;
        for j in 0..size {
            for k in j..size {
                let dot: i64 = (0..size)
                    .map(|m| (walsh_function(j, m, n) * walsh_function(k, m, n)) as i64)
                    .sum();
                assert_eq!(dot, if j == k { size as i64 } else { 0 });
            }
        }
    }

    #[test]
    fn transform_of_constant_and_single_row() {
        let values = vec![0.75; 16];
        let coeffs = walsh_fourier_transform(&values).unwrap();
        assert_eq!(coeffs.get(0), 0.75);
        for k in 1..16 {
            assert_eq!(coeffs.get(k), 0.0);
        }

        let row: Vec<f64> = (0..32).map(|m| walsh_function(5, m, 5) as f64).collect();
        let coeffs = walsh_fourier_transform(&row).unwrap();
        assert_eq!(coeffs.get(5), 1.0);
        assert_eq!(coeffs.support_len(), 1);

        assert!(walsh_fourier_transform(&vec![1.0; 12]).is_err());
    }

    #[test]
    fn fast_transform_matches_direct_sum() {
        let n = 6u32;
        let size = 1usize << n;
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let values: Vec<f64> = (0..size).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let fast = walsh_fourier_transform(&values).unwrap();
        for j in 0..size as u64 {
            let direct: f64 = (0..size as u64)
                .map(|m| walsh_function(j, m, n) as f64 * values[m as usize])
                .sum::<f64>()
                / size as f64;
            assert!((fast.get(j) - direct).abs() < 1e-12);
        }
        // Round trip.
        let back = walsh_inverse_transform(&fast);
        for (a, b) in values.iter().zip(&back) {
            assert!((a - b).abs() < 1e-12);
        }
        for m in 0..size as u64 {
            assert!((fast.reconstruct(m) - values[m as usize]).abs() < 1e-12);
        }
    }

    #[test]
    fn hamiltonian_coefficients_match_published_tables() {
        let alpha = TAU;
        let fr = Frequencies::new(vec![alpha]).unwrap();

        let h3 = hamiltonian_walsh_coeffs(3, 1, &fr).unwrap();
        assert_eq!(h3.support_len(), 3);
        assert_eq!(h3.get(1), -alpha * 2.5);
        assert_eq!(h3.get(2), -alpha * 1.0);
        assert_eq!(h3.get(4), -alpha * 0.5);

        let h7 = hamiltonian_walsh_coeffs(7, 1, &fr).unwrap();
        let expected = [32.5, 16.0, 8.0, 4.0, 2.0, 1.0, 0.5];
        for (l, &mag) in expected.iter().enumerate() {
            assert_eq!(h7.get(1 << l), -alpha * mag);
        }
        assert_eq!(h7.support_len(), 7);

        let fr2 = Frequencies::new(vec![3.0 * std::f64::consts::SQRT_2 * std::f64::consts::PI, TAU])
            .unwrap();
        let h8 = hamiltonian_walsh_coeffs(8, 2, &fr2).unwrap();
        let per_dim = [4.5, 2.0, 1.0, 0.5];
        for (i, &a) in fr2.alphas().iter().enumerate() {
            for (l, &mag) in per_dim.iter().enumerate() {
                assert_eq!(h8.get(1 << (l + 4 * i)), -a * mag);
            }
        }
        assert_eq!(h8.support_len(), 8);
    }

    #[test]
    fn hamiltonian_support_is_powers_of_two() {
        let fr = Frequencies::new(vec![1.0, 2.0]).unwrap();
        let h = hamiltonian_walsh_coeffs(8, 2, &fr).unwrap();
        assert_eq!(h.support_len(), 8);
        for (k, v) in h.entries() {
            assert!(k.is_power_of_two());
            assert!(v != 0.0);
        }
        assert!(hamiltonian_walsh_coeffs(7, 2, &fr).is_err());
    }

    #[test]
    fn spectral_function_tabulates_eigenfrequencies() {
        let (a1, a2) = (1.5, 0.75);
        let fr = Frequencies::new(vec![a1, a2]).unwrap();
        let h = spectral_function(4, 2, &fr).unwrap();
        // Row layout: register value = ordinal(j1)*4 + ordinal(j2) with
        // component order (-2, -1, +1, +2) per dimension.
        let comps = [-2.0, -1.0, 1.0, 2.0];
        for (b, &expect) in h.iter().enumerate().take(16) {
            let j1 = comps[b / 4];
            let j2 = comps[b % 4];
            assert_relative_eq!(expect, j1 * a1 + j2 * a2, epsilon = 1e-14);
        }
        let mean: f64 = h.iter().sum();
        assert!(mean.abs() < 1e-12);
    }

    #[test]
    fn closed_form_equals_transform_of_spectral_function() {
        for (n, d, alphas) in [
            (3u32, 1usize, vec![TAU]),
            (7, 1, vec![TAU]),
            (8, 2, vec![3.0 * std::f64::consts::SQRT_2 * std::f64::consts::PI, TAU]),
        ] {
            let fr = Frequencies::new(alphas).unwrap();
            let tabulated = spectral_function(n, d, &fr).unwrap();
            let transformed = walsh_fourier_transform(&tabulated).unwrap();
            let closed = hamiltonian_walsh_coeffs(n, d, &fr).unwrap();
            for k in 0..(1u64 << n) {
                assert!(
                    (transformed.get(k) - closed.get(k)).abs() < 1e-12,
                    "n={n} d={d} k={k}: {} vs {}",
                    transformed.get(k),
                    closed.get(k)
                );
            }
        }
    }

    #[test]
    fn encoding_matches_published_rows() {
        assert_eq!(
            encode_index(&MultiIndex::new(vec![-2, -2]), 4, 2)
                .unwrap()
                .value(),
            0
        );
        assert_eq!(
            encode_index(&MultiIndex::new(vec![2, 2]), 4, 2)
                .unwrap()
                .value(),
            15
        );
        let b = encode_index(&MultiIndex::new(vec![-1, 2]), 4, 2).unwrap();
        assert_eq!(b.value(), 7);
        assert_eq!(b.bits(), vec![false, true, true, true]);

        assert!(encode_index(&MultiIndex::new(vec![0, 1]), 4, 2).is_err());
        assert!(encode_index(&MultiIndex::new(vec![3, 1]), 4, 2).is_err());
    }

    #[test]
    fn encode_decode_round_trip() {
        let iset = IndexSetN::new(8, 2).unwrap();
        for j in iset.iter() {
            let b = encode_index(&j, 8, 2).unwrap();
            assert_eq!(decode_index(&b, 8, 2).unwrap(), j);
        }
    }

    #[test]
    fn encoding_is_order_compatible_for_one_dimension() {
        let n = 5u32;
        let iset = IndexSetN::new(n, 1).unwrap();
        for m in 0..(1u64 << n) {
            let b = reversed_binary(m, n).unwrap();
            let j = decode_index(&b, n, 1).unwrap();
            assert_eq!(iset.ordinal(j.components()[0]), Some(m));
        }
    }

    proptest! {
        #[test]
        fn walsh_function_is_symmetric_in_reversed_args(j in 0u64..64, m in 0u64..64) {
            // w_j(m) probes j against rev(m); reversing both arguments swaps
            // the roles exactly.
            let n = 6u32;
            prop_assert_eq!(
                walsh_function(j, m, n),
                walsh_function(bit_reverse(m, n), bit_reverse(j, n), n)
            );
        }

        #[test]
        fn transform_round_trip(seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let values: Vec<f64> = (0..16).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let coeffs = walsh_fourier_transform(&values).unwrap();
            let back = walsh_inverse_transform(&coeffs);
            for (a, b) in values.iter().zip(&back) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }
    }
}

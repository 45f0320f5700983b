//! Frequency-hopping code selection: bits <-> `M`-of-`K` sub-band combinations.
//!
//! Combinations are ranked in lexicographic order of their ascending element
//! lists, so rank 0 is `{0, 1, .., M-1}` and the last rank is
//! `{K-M, .., K-1}`. A hop carries `floor(log2 C(K, M))` bits; ranks at or
//! above `2^bits` are never transmitted and decode as codebook errors.

use crate::error::{Error, Result};

/// `C(n, r)`, or `None` on `u128` overflow.
pub fn binomial(n: usize, r: usize) -> Option<u128> {
    if r > n {
        return Some(0);
    }
    let r = r.min(n - r);
    let mut acc: u128 = 1;
    for i in 0..r {
        // acc * (n - i) / (i + 1) stays integral at every step.
        acc = acc.checked_mul((n - i) as u128)? / (i as u128 + 1);
    }
    Some(acc)
}

fn checked_count(k: usize, m: usize) -> Result<u128> {
    if m == 0 || m > k {
        return Err(Error::InvalidCombination(format!("need 0 < M <= K, got M={m}, K={k}")));
    }
    binomial(k, m).ok_or_else(|| Error::InvalidCombination(format!("C({k}, {m}) overflows u128")))
}

/// `floor(log2 C(K, M))`, the FHCS payload per hop.
pub fn bits_per_hop(k: usize, m: usize) -> Result<usize> {
    let count = checked_count(k, m)?;
    Ok((127 - count.leading_zeros()) as usize)
}

/// Combination of lexicographic rank `rank`.
pub fn unrank(rank: u128, k: usize, m: usize) -> Result<Vec<usize>> {
    let count = checked_count(k, m)?;
    if rank >= count {
        return Err(Error::RankOutOfRange { rank, k, m, count });
    }
    let mut rest = rank;
    let mut out = Vec::with_capacity(m);
    let mut next = 0usize;
    for slot in 0..m {
        let remaining = m - 1 - slot;
        let mut c = next;
        loop {
            // Combinations that put `c` in this slot.
            let block = binomial(k - 1 - c, remaining).unwrap_or(u128::MAX);
            if rest < block {
                break;
            }
            rest -= block;
            c += 1;
        }
        out.push(c);
        next = c + 1;
    }
    Ok(out)
}

/// Lexicographic rank of a strictly ascending combination.
pub fn rank(combination: &[usize], k: usize) -> Result<u128> {
    let m = combination.len();
    checked_count(k, m)?;
    if combination.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidCombination(format!("{combination:?} is not strictly ascending")));
    }
    if combination.last().is_some_and(|&x| x >= k) {
        return Err(Error::InvalidCombination(format!("{combination:?} has entries >= K={k}")));
    }
    let mut acc: u128 = 0;
    let mut next = 0usize;
    for (slot, &x) in combination.iter().enumerate() {
        let remaining = m - 1 - slot;
        for c in next..x {
            acc += binomial(k - 1 - c, remaining).unwrap_or(0);
        }
        next = x + 1;
    }
    Ok(acc)
}

/// MSB-first bits to integer.
pub fn bits_to_int(bits: &[bool]) -> u128 {
    bits.iter().fold(0u128, |acc, &b| (acc << 1) | u128::from(b))
}

/// Integer to `width` MSB-first bits.
pub fn int_to_bits(value: u128, width: usize) -> Vec<bool> {
    (0..width).rev().map(|i| (value >> i) & 1 == 1).collect()
}

/// Maps one hop's FHCS bits to its ascending sub-band combination.
pub fn encode(bits: &[bool], k: usize, m: usize) -> Result<Vec<usize>> {
    let width = bits_per_hop(k, m)?;
    if bits.len() != width {
        return Err(Error::BitLength { expected: width, got: bits.len() });
    }
    unrank(bits_to_int(bits), k, m)
}

/// Recovers the hop bits from a detected ascending combination.
///
/// Combinations outside the `2^bits` codebook return [`Error::OutOfCodebook`].
pub fn decode(combination: &[usize], k: usize) -> Result<Vec<bool>> {
    let m = combination.len();
    let width = bits_per_hop(k, m)?;
    let r = rank(combination, k)?;
    if r >> width != 0 {
        return Err(Error::OutOfCodebook { rank: r, bits: width });
    }
    Ok(int_to_bits(r, width))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn binomial_values() {
        assert_eq!(binomial(20, 10), Some(184_756));
        assert_eq!(binomial(4, 2), Some(6));
        assert_eq!(binomial(5, 0), Some(1));
        assert_eq!(binomial(3, 5), Some(0));
        assert_eq!(binomial(100, 50), Some(100_891_344_545_564_193_334_812_497_256));
    }

    #[test]
    fn payload_sizes() {
        assert_eq!(bits_per_hop(20, 10).unwrap(), 17);
        assert_eq!(bits_per_hop(4, 2).unwrap(), 2);
        assert_eq!(bits_per_hop(8, 3).unwrap(), 5);
        assert_eq!(bits_per_hop(5, 5).unwrap(), 0);
    }

    #[test]
    fn small_codebook_entries() {
        assert_eq!(encode(&[false, false], 4, 2).unwrap(), vec![0, 1]);
        assert_eq!(encode(&[false, true], 4, 2).unwrap(), vec![0, 2]);
    }

    #[test]
    fn minimum_combination_is_all_zero() {
        let comb: Vec<usize> = (0..10).collect();
        assert_eq!(decode(&comb, 20).unwrap(), vec![false; 17]);
    }

    #[test]
    fn rank_guard() {
        assert!(matches!(unrank(6, 4, 2), Err(Error::RankOutOfRange { count: 6, .. })));
    }

    #[test]
    fn out_of_codebook_flagged() {
        // C(4,2) = 6 but only ranks 0..4 are used.
        assert_eq!(decode(&[1, 3], 4), Err(Error::OutOfCodebook { rank: 4, bits: 2 }));
        assert_eq!(decode(&[2, 3], 4), Err(Error::OutOfCodebook { rank: 5, bits: 2 }));
    }

    #[test]
    fn rejects_malformed_combinations() {
        assert!(rank(&[2, 1], 4).is_err());
        assert!(rank(&[1, 1], 4).is_err());
        assert!(rank(&[1, 4], 4).is_err());
        assert!(encode(&[true], 4, 2).is_err());
    }

    #[test]
    fn bit_packing() {
        assert_eq!(int_to_bits(5, 4), vec![false, true, false, true]);
        assert_eq!(bits_to_int(&[true, true, false]), 6);
    }

    proptest! {
        #[test]
        fn unrank_is_ascending_and_inverts(k in 2usize..40, m_frac in 0.0f64..1.0, seed in any::<u64>()) {
            let m = 1 + ((k - 1) as f64 * m_frac) as usize;
            let count = binomial(k, m).unwrap();
            let r = u128::from(seed) % count;
            let comb = unrank(r, k, m).unwrap();
            prop_assert_eq!(comb.len(), m);
            prop_assert!(comb.windows(2).all(|w| w[0] < w[1]));
            prop_assert!(*comb.last().unwrap() < k);
            prop_assert_eq!(rank(&comb, k).unwrap(), r);
        }
    }
}

//! Packed bit vectors.
//!
//! [`BitBlock`] is the unit of message, codeword and key material throughout
//! the crate. Bits are stored little-endian inside `u64` words; the unused
//! high bits of the last word are always zero.

use std::fmt;

use rand::Rng;

use crate::error::{Error, Result};

const WORD: usize = 64;

/// Fixed-length sequence of bits.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct BitBlock {
    words: Vec<u64>,
    len: usize,
}

#[inline]
fn words_for(len: usize) -> usize {
    len.div_ceil(WORD)
}

impl BitBlock {
    /// All-zero block of `len` bits.
    pub fn zeros(len: usize) -> Self {
        Self {
            words: vec![0; words_for(len)],
            len,
        }
    }

    pub fn ones(len: usize) -> Self {
        let mut b = Self {
            words: vec![u64::MAX; words_for(len)],
            len,
        };
        b.clear_tail();
        b
    }

    /// Uniformly random block.
    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        let mut b = Self {
            words: (0..words_for(len)).map(|_| rng.next_u64()).collect(),
            len,
        };
        b.clear_tail();
        b
    }

    pub fn from_bits<I: IntoIterator<Item = bool>>(bits: I) -> Self {
        let mut b = Self::zeros(0);
        for bit in bits {
            b.push(bit);
        }
        b
    }

    /// Builds a block from the low `len` bits of `value`, bit 0 first.
    pub fn from_u64(value: u64, len: usize) -> Self {
        assert!(len <= WORD, "from_u64 supports at most 64 bits");
        let mut b = Self {
            words: if len == 0 { vec![] } else { vec![value] },
            len,
        };
        b.clear_tail();
        b
    }

    /// Parses a string of `'0'`/`'1'` characters.
    pub fn parse(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::invalid(
                    "bits",
                    format!("unexpected character {other:?}"),
                )),
            })
            .collect::<Result<Vec<_>>>()
            .map(Self::from_bits)
    }

    /// Little-endian packing of the first 64 bits.
    pub fn to_u64(&self) -> u64 {
        self.words.first().copied().unwrap_or(0)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        (self.words[i / WORD] >> (i % WORD)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, bit: bool) {
        debug_assert!(i < self.len);
        let mask = 1u64 << (i % WORD);
        if bit {
            self.words[i / WORD] |= mask;
        } else {
            self.words[i / WORD] &= !mask;
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        debug_assert!(i < self.len);
        self.words[i / WORD] ^= 1u64 << (i % WORD);
    }

    pub fn push(&mut self, bit: bool) {
        if self.len.is_multiple_of(WORD) {
            self.words.push(0);
        }
        self.len += 1;
        self.set(self.len - 1, bit);
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Parity of the bitwise AND with `other`, i.e. the GF(2) inner product.
    pub fn dot(&self, other: &BitBlock) -> bool {
        debug_assert_eq!(self.len, other.len);
        let acc = self
            .words
            .iter()
            .zip(&other.words)
            .fold(0u64, |acc, (a, b)| acc ^ (a & b));
        acc.count_ones() & 1 == 1
    }

    pub fn xor(&self, other: &BitBlock) -> Result<BitBlock> {
        check_len(self.len, other.len)?;
        let mut out = self.clone();
        out.xor_assign_unchecked(other);
        Ok(out)
    }

    pub(crate) fn xor_assign_unchecked(&mut self, other: &BitBlock) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    pub fn hamming_distance(&self, other: &BitBlock) -> Result<usize> {
        check_len(self.len, other.len)?;
        Ok(self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum())
    }

    /// `self ∥ other`.
    pub fn concat(&self, other: &BitBlock) -> BitBlock {
        let mut out = self.clone();
        out.extend(other);
        out
    }

    pub fn extend(&mut self, other: &BitBlock) {
        if self.len.is_multiple_of(WORD) {
            self.words.extend_from_slice(&other.words);
            self.len += other.len;
            return;
        }
        for bit in other.iter() {
            self.push(bit);
        }
    }

    /// Bits `start..start + len`.
    pub fn slice(&self, start: usize, len: usize) -> BitBlock {
        assert!(start + len <= self.len, "slice out of range");
        let first = start / WORD;
        let shift = start % WORD;
        let words = (0..words_for(len))
            .map(|k| {
                let lo = self.words[first + k] >> shift;
                let hi = match self.words.get(first + k + 1) {
                    Some(&next) if shift > 0 => next << (WORD - shift),
                    _ => 0,
                };
                lo | hi
            })
            .collect();
        let mut out = Self { words, len };
        out.clear_tail();
        out
    }

    pub fn reversed(&self) -> BitBlock {
        (0..self.len).rev().map(|i| self.get(i)).collect()
    }

    /// Serializes the bits as bytes, bit 0 in the least significant position.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out: Vec<u8> = self.words.iter().flat_map(|w| w.to_le_bytes()).collect();
        out.truncate(self.len.div_ceil(8));
        out
    }

    fn clear_tail(&mut self) {
        let rem = self.len % WORD;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }
}

pub(crate) fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::LengthMismatch { expected, actual })
    }
}

impl fmt::Debug for BitBlock {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitBlock[{}](", self.len)?;
        for bit in self.iter().take(128) {
            f.write_str(if bit { "1" } else { "0" })?;
        }
        if self.len > 128 {
            f.write_str("…")?;
        }
        f.write_str(")")
    }
}

impl fmt::Display for BitBlock {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for bit in self.iter() {
            f.write_str(if bit { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromIterator<bool> for BitBlock {
    fn from_iter<I: IntoIterator<Item = bool>>(iter: I) -> Self {
        Self::from_bits(iter)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn tail_bits_stay_clear() {
        let b = BitBlock::ones(70);
        assert_eq!(b.count_ones(), 70);
        assert_eq!(b.words()[1], (1 << 6) - 1);
    }

    #[test]
    fn parse_and_display() {
        let b = BitBlock::parse("1011").unwrap();
        assert_eq!(b.to_string(), "1011");
        assert_eq!(b.to_u64(), 0b1101);
        assert!(BitBlock::parse("10x").is_err());
    }

    #[test]
    fn xor_length_mismatch() {
        let err = BitBlock::zeros(3).xor(&BitBlock::zeros(4)).unwrap_err();
        assert!(matches!(
            err,
            Error::LengthMismatch {
                expected: 3,
                actual: 4
            }
        ));
    }

    proptest! {
        #[test]
        fn concat_then_slice_recovers_parts(
            a in proptest::collection::vec(any::<bool>(), 0..200),
            b in proptest::collection::vec(any::<bool>(), 0..200),
        ) {
            let ba = BitBlock::from_bits(a.iter().copied());
            let bb = BitBlock::from_bits(b.iter().copied());
            let joined = ba.concat(&bb);
            prop_assert_eq!(joined.len(), a.len() + b.len());
            prop_assert_eq!(joined.slice(0, a.len()), ba);
            prop_assert_eq!(joined.slice(a.len(), b.len()), bb);
        }

        #[test]
        fn hamming_matches_xor_weight(seed in any::<u64>(), len in 0usize..300) {
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let a = BitBlock::random(len, &mut rng);
            let b = BitBlock::random(len, &mut rng);
            let d = a.hamming_distance(&b).unwrap();
            prop_assert_eq!(d, a.xor(&b).unwrap().count_ones());
            prop_assert_eq!(d, a.iter().zip(b.iter()).filter(|(x, y)| x != y).count());
        }
    }
}

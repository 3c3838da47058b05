//! The Klein four-group `Z/2 x Z/2`, identified with the nucleotides, and
//! n-tuples of its elements (site patterns).

use std::fmt;
use std::ops::Add;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Largest supported pattern length. Pattern ids are stored in a `u64`.
pub const MAX_PATTERN_LEN: usize = 31;

/// A nucleotide viewed as an element of `Z/2 x Z/2`.
///
/// The discriminant packs the pair of bits: `A = (0,0)`, `C = (1,0)`,
/// `G = (0,1)`, `T = (1,1)`, with the first coordinate in bit 0.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[repr(u8)]
pub enum Nucleotide {
    A = 0,
    C = 1,
    G = 2,
    T = 3,
}

/// Spelling used throughout for the group element type.
pub type GroupElement = Nucleotide;

impl Nucleotide {
    pub const ALL: [Nucleotide; 4] = [Nucleotide::A, Nucleotide::C, Nucleotide::G, Nucleotide::T];

    #[inline]
    pub const fn from_bits(bits: u8) -> Nucleotide {
        match bits & 3 {
            0 => Nucleotide::A,
            1 => Nucleotide::C,
            2 => Nucleotide::G,
            _ => Nucleotide::T,
        }
    }

    #[inline]
    pub const fn bits(self) -> u8 {
        self as u8
    }

    #[inline]
    pub const fn index(self) -> usize {
        self as usize
    }

    /// Character value `chi^self(other)`.
    #[inline]
    pub const fn chi(self, other: Nucleotide) -> i8 {
        if (self.bits() & other.bits()).count_ones().is_multiple_of(2) {
            1
        } else {
            -1
        }
    }

    pub const fn letter(self) -> char {
        match self {
            Nucleotide::A => 'A',
            Nucleotide::C => 'C',
            Nucleotide::G => 'G',
            Nucleotide::T => 'T',
        }
    }

    /// Parses an uppercase or lowercase nucleotide letter.
    pub fn from_letter(c: char) -> Option<Nucleotide> {
        match c.to_ascii_uppercase() {
            'A' => Some(Nucleotide::A),
            'C' => Some(Nucleotide::C),
            'G' => Some(Nucleotide::G),
            'T' => Some(Nucleotide::T),
            _ => None,
        }
    }
}

impl Add for Nucleotide {
    type Output = Nucleotide;

    #[inline]
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn add(self, rhs: Nucleotide) -> Nucleotide {
        // Z/2 x Z/2 addition is bitwise xor.
        Nucleotide::from_bits(self.bits() ^ rhs.bits())
    }
}

impl std::iter::Sum for Nucleotide {
    fn sum<I: Iterator<Item = Nucleotide>>(iter: I) -> Nucleotide {
        iter.fold(Nucleotide::A, |acc, x| acc + x)
    }
}

impl fmt::Display for Nucleotide {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

/// Group addition.
#[inline]
pub fn add(g: Nucleotide, h: Nucleotide) -> Nucleotide {
    g + h
}

/// Character table entry `chi^g(h)`, symmetric in `g` and `h`.
#[inline]
pub fn chi(g: Nucleotide, h: Nucleotide) -> i8 {
    g.chi(h)
}

/// A site pattern: one nucleotide per leaf position.
///
/// Stored as its base-4 id, leaf position 1 in the least significant
/// digit, so patterns are `Copy` and order by id.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pattern {
    id: u64,
    len: u8,
}

impl Pattern {
    pub fn new(entries: &[Nucleotide]) -> Result<Pattern> {
        if entries.is_empty() || entries.len() > MAX_PATTERN_LEN {
            return Err(Error::PatternLength(entries.len()));
        }
        let id = entries
            .iter()
            .rev()
            .fold(0u64, |acc, x| (acc << 2) | u64::from(x.bits()));
        Ok(Pattern {
            id,
            len: entries.len() as u8,
        })
    }

    /// Pattern with every entry `A`.
    pub fn constant(len: usize, x: Nucleotide) -> Pattern {
        assert!((1..=MAX_PATTERN_LEN).contains(&len));
        Pattern::new(&vec![x; len]).expect("length checked")
    }

    pub fn decode(len: usize, id: u64) -> Result<Pattern> {
        if len == 0 || len > MAX_PATTERN_LEN {
            return Err(Error::PatternLength(len));
        }
        let bound = 1u64 << (2 * len);
        if id >= bound {
            return Err(Error::PatternIdOutOfRange { id, len });
        }
        Ok(Pattern { id, len: len as u8 })
    }

    /// Decode without the range check, for hot loops over `0..4^len`.
    #[inline]
    pub(crate) fn from_raw(len: usize, id: u64) -> Pattern {
        debug_assert!(id < 1u64 << (2 * len));
        Pattern { id, len: len as u8 }
    }

    #[inline]
    pub fn encode(&self) -> u64 {
        self.id
    }

    #[inline]
    pub fn id(&self) -> usize {
        self.id as usize
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len as usize
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Entry at 0-based leaf position `i`.
    #[inline]
    pub fn get(&self, i: usize) -> Nucleotide {
        debug_assert!(i < self.len());
        Nucleotide::from_bits((self.id >> (2 * i)) as u8)
    }

    pub fn entries(&self) -> Vec<Nucleotide> {
        (0..self.len()).map(|i| self.get(i)).collect()
    }

    /// Group sum of all entries.
    #[inline]
    pub fn sum(&self) -> Nucleotide {
        // XOR-fold the 2-bit digits.
        let mut acc = 0u64;
        let mut rest = self.id;
        while rest != 0 {
            acc ^= rest & 3;
            rest >>= 2;
        }
        Nucleotide::from_bits(acc as u8)
    }

    /// True when the entries sum to `A`, i.e. the pattern indexes a
    /// coordinate that the model can make nonzero.
    #[inline]
    pub fn on_slice(&self) -> bool {
        self.sum() == Nucleotide::A
    }

    /// Componentwise group sum of two patterns of the same length.
    pub fn add(&self, other: &Pattern) -> Pattern {
        assert_eq!(self.len, other.len, "pattern length mismatch");
        Pattern {
            id: self.id ^ other.id,
            len: self.len,
        }
    }

    /// Appends one entry at the next position.
    pub fn push(&self, x: Nucleotide) -> Pattern {
        assert!(self.len() < MAX_PATTERN_LEN);
        Pattern {
            id: self.id | (u64::from(x.bits()) << (2 * self.len())),
            len: self.len + 1,
        }
    }

    /// Rearranges entries: position `k` of the result takes the entry at
    /// position `source[k]` of `self`.
    pub fn permute(&self, source: &[usize]) -> Pattern {
        debug_assert_eq!(source.len(), self.len());
        let id = source
            .iter()
            .enumerate()
            .fold(0u64, |acc, (k, &s)| acc | (u64::from(self.get(s).bits()) << (2 * k)));
        Pattern { id, len: self.len }
    }
}

/// Pattern sum as a free function.
pub fn pattern_sum(p: &Pattern) -> Nucleotide {
    p.sum()
}

/// Number of patterns of length `n`, i.e. `4^n`.
#[inline]
pub fn pattern_count(n: usize) -> usize {
    1usize << (2 * n)
}

/// Iterates the `4^(n-1)` patterns of length `n` whose entries sum to `A`,
/// ordered by the id of their first `n - 1` entries.
pub fn slice_patterns(n: usize) -> impl Iterator<Item = Pattern> {
    assert!((1..=MAX_PATTERN_LEN).contains(&n));
    let shift = 2 * (n - 1);
    (0..1u64 << shift).map(move |low| {
        let head = Pattern::from_raw(n.max(2) - 1, low);
        let last = if n == 1 { 0 } else { u64::from(head.sum().bits()) };
        Pattern::from_raw(n, low | (last << shift))
    })
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len() {
            write!(f, "{}", self.get(i))?;
        }
        Ok(())
    }
}

impl fmt::Debug for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Pattern({self})")
    }
}

impl FromStr for Pattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Pattern> {
        let entries = s
            .chars()
            .map(|c| match c {
                'A' | 'C' | 'G' | 'T' => Ok(Nucleotide::from_letter(c).unwrap()),
                _ => Err(Error::InvalidPattern(s.to_string())),
            })
            .collect::<Result<Vec<_>>>()?;
        Pattern::new(&entries)
    }
}

impl serde::Serialize for Pattern {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for Pattern {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Pattern, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::Nucleotide::*;
    use super::*;

    fn pat(s: &str) -> Pattern {
        s.parse().unwrap()
    }

    #[test]
    fn addition() {
        assert_eq!(add(A, A), A);
        assert_eq!(add(C, G), T);
        assert_eq!(add(T, T), A);
        for g in Nucleotide::ALL {
            assert_eq!(g + g, A);
            assert_eq!(g + A, g);
        }
    }

    #[test]
    fn character_table() {
        for x in Nucleotide::ALL {
            assert_eq!(chi(A, x), 1);
        }
        assert_eq!(chi(C, G), 1);
        assert_eq!(chi(G, T), -1);
        let table = [[1, 1, 1, 1], [1, -1, 1, -1], [1, 1, -1, -1], [1, -1, -1, 1]];
        for g in Nucleotide::ALL {
            for h in Nucleotide::ALL {
                assert_eq!(chi(g, h), table[g.index()][h.index()]);
                assert_eq!(chi(g, h), chi(h, g));
            }
        }
    }

    #[test]
    fn characters_are_multiplicative_and_orthogonal() {
        for g in Nucleotide::ALL {
            for h1 in Nucleotide::ALL {
                for h2 in Nucleotide::ALL {
                    assert_eq!(chi(g, h1 + h2), chi(g, h1) * chi(g, h2));
                }
            }
            for g2 in Nucleotide::ALL {
                let s: i32 = Nucleotide::ALL
                    .iter()
                    .map(|&h| i32::from(chi(g, h) * chi(g2, h)))
                    .sum();
                assert_eq!(s, if g == g2 { 4 } else { 0 });
            }
        }
    }

    #[test]
    fn sums() {
        assert_eq!(pat("AAAA").sum(), A);
        assert_eq!(pat("CGTA").sum(), A);
        assert_eq!(pat("CCC").sum(), C);
    }

    #[test]
    fn encoding() {
        assert_eq!(pat("AAA").encode(), 0);
        assert_eq!(pat("TCG").encode(), 39);
        assert_eq!(Pattern::decode(3, 39).unwrap(), pat("TCG"));
        assert!(matches!(
            Pattern::decode(3, 64),
            Err(Error::PatternIdOutOfRange { id: 64, len: 3 })
        ));
        assert_eq!(pat("TCGA").to_string(), "TCGA");
        assert!("TCGX".parse::<Pattern>().is_err());
        assert!("".parse::<Pattern>().is_err());
    }

    #[test]
    fn slice_enumeration() {
        for n in 1..=6 {
            let all: Vec<_> = slice_patterns(n).collect();
            assert_eq!(all.len(), pattern_count(n) / 4);
            assert!(all.iter().all(Pattern::on_slice));
            let brute = (0..pattern_count(n) as u64)
                .filter(|&id| Pattern::decode(n, id).unwrap().on_slice())
                .count();
            assert_eq!(brute, all.len());
        }
    }

    #[test]
    fn permute_and_push() {
        let p = pat("CGT");
        assert_eq!(p.permute(&[2, 0, 1]).to_string(), "TCG");
        assert_eq!(p.push(A).to_string(), "CGTA");
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn pattern(n: usize) -> impl Strategy<Value = Pattern> {
            (0..1u64 << (2 * n)).prop_map(move |id| Pattern::decode(n, id).unwrap())
        }

        proptest! {
            #[test]
            fn sum_is_a_homomorphism((p, q) in (1usize..10).prop_flat_map(|n| (pattern(n), pattern(n)))) {
                prop_assert_eq!(p.add(&q).sum(), p.sum() + q.sum());
            }

            #[test]
            fn encode_round_trip(p in (1usize..12).prop_flat_map(pattern)) {
                prop_assert_eq!(Pattern::decode(p.len(), p.encode()).unwrap(), p);
                prop_assert_eq!(Pattern::new(&p.entries()).unwrap(), p);
                prop_assert_eq!(p.to_string().parse::<Pattern>().unwrap(), p);
            }
        }
    }
}

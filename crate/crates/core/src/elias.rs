//! Deterministic randomness extraction over fixed-length words.
//!
//! Every word of `N` symbols is exactly as probable as any other arrangement
//! of the same letters when the symbols are independent, whatever the
//! per-letter probabilities are. Counting those arrangements, ranking the
//! observed one lexicographically, and emitting the rank's offset inside a
//! power-of-two block therefore yields unbiased bits without knowing the
//! source distribution.
//!
//! All arithmetic on permutation counts is exact integer arithmetic; `u128`
//! intermediates keep every quantity exact for words up to [`MAX_WORD_LEN`]
//! symbols.

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::One;

use crate::bits::BitString;
use crate::error::{Error, Result};

/// Longest word the exact `u128` arithmetic supports.
pub const MAX_WORD_LEN: usize = 20;

/// A fixed-length word of symbols drawn from an `alphabet`-letter alphabet.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Word {
    symbols: Vec<u8>,
    alphabet: u8,
}

impl Word {
    pub fn new(symbols: Vec<u8>, alphabet: u8) -> Result<Word> {
        if alphabet == 0 {
            return Err(Error::Config("alphabet size must be positive".into()));
        }
        if symbols.is_empty() || symbols.len() > MAX_WORD_LEN {
            return Err(Error::Config(format!(
                "word length must be in 1..={MAX_WORD_LEN}, got {}",
                symbols.len()
            )));
        }
        if let Some(&bad) = symbols.iter().find(|&&s| s >= alphabet) {
            return Err(Error::Config(format!(
                "symbol {bad} outside alphabet of size {alphabet}"
            )));
        }
        Ok(Word { symbols, alphabet })
    }

    pub fn symbols(&self) -> &[u8] {
        &self.symbols
    }

    pub fn alphabet(&self) -> u8 {
        self.alphabet
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn letter_counts(&self) -> Vec<u32> {
        let mut counts = vec![0u32; self.alphabet as usize];
        for &s in &self.symbols {
            counts[s as usize] += 1;
        }
        counts
    }
}

/// Multinomial coefficient `(sum counts)! / prod(counts[i]!)`, exact.
///
/// Computed as a telescoping product of binomials so every intermediate stays
/// below `result * sum(counts)`.
fn multinomial(counts: &[u32]) -> u128 {
    let mut n: u128 = 0;
    let mut r: u128 = 1;
    for &c in counts {
        for i in 1..=c as u128 {
            n += 1;
            r = r * n / i;
        }
    }
    r
}

/// Number of distinct arrangements of the word's letters.
pub fn perm_count(word: &Word) -> u128 {
    multinomial(&word.letter_counts())
}

/// Lexicographic rank of `word` among all arrangements of its letters,
/// with letters ordered by symbol value. Inverse of [`unrank`].
pub fn lex_rank(word: &Word) -> u128 {
    let mut counts = word.letter_counts();
    let mut perms = multinomial(&counts);
    let mut remaining = word.len() as u128;
    let mut rank: u128 = 0;
    for &s in &word.symbols {
        for &c in &counts[..s as usize] {
            rank += perms * c as u128 / remaining;
        }
        perms = perms * counts[s as usize] as u128 / remaining;
        counts[s as usize] -= 1;
        remaining -= 1;
    }
    rank
}

/// Reconstructs the word with the given letter counts whose lexicographic
/// rank is `rank`.
///
/// Panics if `rank >= multinomial(counts)`.
pub fn unrank(counts: &[u32], mut rank: u128) -> Word {
    let alphabet = counts.len() as u8;
    let mut counts = counts.to_vec();
    let mut perms = multinomial(&counts);
    assert!(rank < perms, "rank {rank} out of range (P = {perms})");
    let mut remaining: u128 = counts.iter().map(|&c| c as u128).sum();
    let mut symbols = Vec::with_capacity(remaining as usize);
    while remaining > 0 {
        #[allow(clippy::needless_range_loop)] // counts[s] is decremented inside
        for s in 0..counts.len() {
            if counts[s] == 0 {
                continue;
            }
            let with_s = perms * counts[s] as u128 / remaining;
            if rank < with_s {
                symbols.push(s as u8);
                perms = with_s;
                counts[s] -= 1;
                remaining -= 1;
                break;
            }
            rank -= with_s;
        }
    }
    Word { symbols, alphabet }
}

/// Maps a rank `r` in `[0, p)` onto a variable-length unbiased bit string.
///
/// `p` is decomposed into its power-of-two blocks (set bits, largest first);
/// the block containing `r` emits the offset of `r` within it, MSB first,
/// using as many bits as the block size's exponent. `p = 1` emits nothing.
///
/// Panics if `r >= p` or `p == 0`.
pub fn elias_assign(p: u128, r: u128) -> BitString {
    assert!(p > 0, "permutation count must be positive");
    assert!(r < p, "rank {r} out of range (P = {p})");
    let mut offset = r;
    for a in (0..128 - p.leading_zeros()).rev() {
        if (p >> a) & 1 == 0 {
            continue;
        }
        let block = 1u128 << a;
        if offset < block {
            return BitString::new(offset, a);
        }
        offset -= block;
    }
    unreachable!("rank below p must land in a block");
}

/// Full per-word extraction: rank the word within its permutation class and
/// convert the rank to bits.
pub fn extract_word(word: &Word) -> BitString {
    elias_assign(perm_count(word), lex_rank(word))
}

/// The sorted letter-multiplicity pattern of a word. All words sharing a
/// pattern are equiprobable under independent symbols.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PatternClass {
    multiplicities: Vec<u32>,
}

impl PatternClass {
    /// Builds a class from positive multiplicities; sorts them descending.
    pub fn new(mut multiplicities: Vec<u32>) -> Result<PatternClass> {
        if multiplicities.is_empty() || multiplicities.contains(&0) {
            return Err(Error::Config(
                "pattern multiplicities must be non-empty and positive".into(),
            ));
        }
        multiplicities.sort_unstable_by(|a, b| b.cmp(a));
        Ok(PatternClass { multiplicities })
    }

    pub fn of(word: &Word) -> PatternClass {
        let mut m: Vec<u32> = word
            .letter_counts()
            .into_iter()
            .filter(|&c| c > 0)
            .collect();
        m.sort_unstable_by(|a, b| b.cmp(a));
        PatternClass { multiplicities: m }
    }

    /// Multiplicities, descending.
    pub fn multiplicities(&self) -> &[u32] {
        &self.multiplicities
    }

    pub fn word_len(&self) -> u32 {
        self.multiplicities.iter().sum()
    }

    /// Distinct letters used.
    pub fn distinct_letters(&self) -> u32 {
        self.multiplicities.len() as u32
    }

    /// Permutations per member word: `N! / prod(m_i!)`.
    pub fn perm_count(&self) -> u128 {
        multinomial(&self.multiplicities)
    }

    /// Number of words over an `alphabet`-letter alphabet with this pattern:
    /// the position arrangements times the ways of assigning distinct letters
    /// to the pattern's parts (parts of equal multiplicity interchangeable).
    pub fn word_count(&self, alphabet: u32) -> u128 {
        let k = self.multiplicities.len() as u32;
        assert!(k <= alphabet, "pattern uses more letters than the alphabet");
        let mut assignments: u128 = 1;
        for i in 0..k {
            assignments *= (alphabet - i) as u128;
        }
        let mut run = 1u32;
        for w in self.multiplicities.windows(2) {
            if w[0] == w[1] {
                run += 1;
                assignments /= run as u128;
            } else {
                run = 1;
            }
        }
        self.perm_count() * assignments
    }

    /// Share of all `alphabet^N` words that carry this pattern, exact.
    pub fn share(&self, alphabet: u32) -> BigRational {
        let total = BigUint::from(alphabet).pow(self.word_len());
        BigRational::new(
            BigUint::from(self.word_count(alphabet)).into(),
            total.into(),
        )
    }

    /// All patterns for words of length `n` over `alphabet` letters
    /// (integer partitions of `n` into at most `alphabet` parts).
    pub fn enumerate(n: u32, alphabet: u32) -> Vec<PatternClass> {
        let mut out = Vec::new();
        let mut parts = Vec::new();
        fn rec(
            n: u32,
            max_part: u32,
            slots: u32,
            parts: &mut Vec<u32>,
            out: &mut Vec<PatternClass>,
        ) {
            if n == 0 {
                out.push(PatternClass {
                    multiplicities: parts.clone(),
                });
                return;
            }
            if slots == 0 {
                return;
            }
            for first in (1..=n.min(max_part)).rev() {
                parts.push(first);
                rec(n - first, first, slots - 1, parts, out);
                parts.pop();
            }
        }
        rec(n, n, alphabet, &mut parts, &mut out);
        out
    }
}

/// Exact total of `share` over all patterns; must be one.
pub fn share_closure(n: u32, alphabet: u32) -> BigRational {
    PatternClass::enumerate(n, alphabet)
        .iter()
        .map(|c| c.share(alphabet))
        .fold(BigRational::from(num_bigint::BigInt::from(0)), |a, b| a + b)
}

pub fn share_closure_is_one(n: u32, alphabet: u32) -> bool {
    share_closure(n, alphabet) == BigRational::one()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;
    use proptest::prelude::*;
    use std::collections::HashMap;

    fn word(s: &str) -> Word {
        // Letters A..P as symbols 0..15, alphabet sized by the max letter + 1
        let symbols: Vec<u8> = s.bytes().map(|b| b - b'A').collect();
        let alphabet = symbols.iter().max().unwrap() + 1;
        Word::new(symbols, alphabet.max(2)).unwrap()
    }

    /// Oracle: all arrangements of the word's letters in lexicographic order,
    /// by direct recursive enumeration.
    fn enumerate_class(w: &Word) -> Vec<Vec<u8>> {
        fn rec(counts: &mut Vec<u32>, cur: &mut Vec<u8>, n: usize, out: &mut Vec<Vec<u8>>) {
            if cur.len() == n {
                out.push(cur.clone());
                return;
            }
            for s in 0..counts.len() {
                if counts[s] > 0 {
                    counts[s] -= 1;
                    cur.push(s as u8);
                    rec(counts, cur, n, out);
                    cur.pop();
                    counts[s] += 1;
                }
            }
        }
        let mut counts = vec![0u32; w.alphabet() as usize];
        for &s in w.symbols() {
            counts[s as usize] += 1;
        }
        let mut out = Vec::new();
        rec(&mut counts, &mut Vec::new(), w.len(), &mut out);
        out
    }

    #[test]
    fn perm_count_examples() {
        assert_eq!(perm_count(&word("AAAA")), 1);
        assert_eq!(perm_count(&word("ABCD")), 24);
        // multiplicities (3,3,2,2) at word length 10
        let w = Word::new(vec![0, 0, 0, 1, 1, 1, 2, 2, 3, 3], 4).unwrap();
        assert_eq!(perm_count(&w), 25_200);
        assert_eq!(
            PatternClass::new(vec![3, 3, 2, 2]).unwrap().perm_count(),
            25_200
        );
    }

    #[test]
    fn lex_rank_examples() {
        assert_eq!(lex_rank(&word("ABBB")), 0);
        // oracle: {ABBB, BABB, BBAB, BBBA} in lexicographic order
        let class = enumerate_class(&word("BBBA"));
        assert_eq!(
            class,
            vec![
                vec![0, 1, 1, 1],
                vec![1, 0, 1, 1],
                vec![1, 1, 0, 1],
                vec![1, 1, 1, 0],
            ]
        );
        assert_eq!(lex_rank(&word("BBBA")), 3);
        assert_eq!(lex_rank(&word("DCBA")), 23);
    }

    #[test]
    fn rank_matches_enumeration_order() {
        for w in [word("BACBC"), word("AABBCCDD"), word("CABAB")] {
            let class = enumerate_class(&w);
            assert_eq!(class.len() as u128, perm_count(&w));
            for (i, symbols) in class.iter().enumerate() {
                let member = Word::new(symbols.clone(), w.alphabet()).unwrap();
                assert_eq!(lex_rank(&member), i as u128, "member {symbols:?}");
                assert_eq!(unrank(&member.letter_counts(), i as u128), member);
            }
        }
    }

    #[test]
    fn elias_assign_examples() {
        assert_eq!(elias_assign(1, 0), BitString::EMPTY);
        assert_eq!(elias_assign(4, 2), BitString::parse("10"));
        // 24 = 16 + 8: ranks 16..24 fall in the 8-block, offset 4 as 3 bits
        assert_eq!(elias_assign(24, 20), BitString::parse("100"));
        // 6 = 4 + 2: rank 5 is offset 1 in the 2-block
        assert_eq!(elias_assign(6, 5), BitString::parse("1"));
    }

    #[test]
    #[should_panic(expected = "out of range")]
    fn elias_assign_rejects_out_of_range_rank() {
        elias_assign(6, 6);
    }

    /// Block accounting: for each set bit j of P, exactly 2^j ranks emit
    /// j bits, and the block sizes sum to P.
    #[test]
    fn block_accounting() {
        for p in [1u128, 2, 6, 24, 1023, 1 << 14, 25_200] {
            let mut by_len: HashMap<u32, u128> = HashMap::new();
            for r in 0..p {
                *by_len.entry(elias_assign(p, r).len()).or_insert(0) += 1;
            }
            let mut total = 0u128;
            for (len, count) in &by_len {
                assert_eq!(*count, 1 << len, "P={p} len={len}");
                assert_eq!((p >> len) & 1, 1, "P={p} has no block of len {len}");
                total += count;
            }
            assert_eq!(total, p);
        }
    }

    #[test]
    fn extract_word_examples() {
        assert_eq!(extract_word(&word("AAAA")), BitString::EMPTY);
        // class of BABB has P = 4; BABB is rank 1 -> two bits "01"
        assert_eq!(extract_word(&word("BABB")), BitString::parse("01"));
        assert_eq!(extract_word(&word("ABCD")), BitString::parse("0000"));
    }

    /// The M = 2, N = 2 case reproduces the von Neumann rule.
    #[test]
    fn von_neumann_equivalence() {
        let w = |a, b| Word::new(vec![a, b], 2).unwrap();
        assert_eq!(extract_word(&w(0, 0)), BitString::EMPTY);
        assert_eq!(extract_word(&w(1, 1)), BitString::EMPTY);
        assert_eq!(extract_word(&w(0, 1)), BitString::parse("0"));
        assert_eq!(extract_word(&w(1, 0)), BitString::parse("1"));
    }

    #[test]
    fn class_share_examples() {
        let all_same = PatternClass::new(vec![4]).unwrap();
        assert_eq!(all_same.word_count(4), 4);
        let all_distinct = PatternClass::new(vec![1, 1, 1, 1]).unwrap();
        assert_eq!(all_distinct.word_count(4), 24);

        // brute-force oracle over all 4^4 words
        let mut by_class: HashMap<PatternClass, u128> = HashMap::new();
        for code in 0..256u32 {
            let symbols: Vec<u8> = (0..4).map(|i| ((code >> (2 * i)) & 3) as u8).collect();
            let w = Word::new(symbols, 4).unwrap();
            *by_class.entry(PatternClass::of(&w)).or_insert(0) += 1;
        }
        for class in PatternClass::enumerate(4, 4) {
            assert_eq!(class.word_count(4), by_class[&class], "{class:?}");
        }
        assert!(share_closure_is_one(4, 4));
        assert!(share_closure_is_one(10, 4));
        assert!(share_closure_is_one(7, 3));
    }

    /// Exact unbiasedness at a small size: under a biased product
    /// distribution, each output-length class is exactly uniform.
    #[test]
    fn biased_input_gives_exactly_uniform_outputs() {
        let p: Vec<BigRational> = [2u32, 1]
            .iter()
            .map(|&num| BigRational::new(BigInt::from(num), BigInt::from(3)))
            .collect();
        let n = 3;
        let mut by_output: HashMap<(u32, u128), BigRational> = HashMap::new();
        for code in 0..(1u32 << n) {
            let symbols: Vec<u8> = (0..n).map(|i| ((code >> i) & 1) as u8).collect();
            let w = Word::new(symbols.clone(), 2).unwrap();
            let prob = symbols
                .iter()
                .map(|&s| p[s as usize].clone())
                .fold(BigRational::one(), |a, b| a * b);
            let bits = extract_word(&w);
            let entry = by_output
                .entry((bits.len(), bits.value()))
                .or_insert_with(|| BigRational::from(BigInt::from(0)));
            *entry += prob;
        }
        let mut by_len: HashMap<u32, Vec<BigRational>> = HashMap::new();
        for ((len, _), prob) in by_output {
            by_len.entry(len).or_default().push(prob);
        }
        for (len, probs) in by_len {
            assert_eq!(
                probs.len() as u128,
                1 << len,
                "missing outputs at len {len}"
            );
            for p in &probs {
                assert_eq!(p, &probs[0], "non-uniform at len {len}");
            }
        }
    }

    /// Two-word streams: the first j bits of the concatenation are exactly
    /// uniform for i.i.d. biased words (M = 2, N = 2).
    #[test]
    fn concatenation_prefix_is_uniform() {
        let p: Vec<BigRational> = [3u32, 2]
            .iter()
            .map(|&num| BigRational::new(BigInt::from(num), BigInt::from(5)))
            .collect();
        let word_prob = |sym: &[u8]| {
            sym.iter()
                .map(|&s| p[s as usize].clone())
                .fold(BigRational::one(), |a, b| a * b)
        };
        for j in 1..=2u32 {
            // distribution of the first j bits over all two-word combinations
            let mut dist: HashMap<Vec<u8>, BigRational> = HashMap::new();
            let mut total = BigRational::from(BigInt::from(0));
            for a in 0..4u8 {
                for b in 0..4u8 {
                    let wa = Word::new(vec![a >> 1, a & 1], 2).unwrap();
                    let wb = Word::new(vec![b >> 1, b & 1], 2).unwrap();
                    let prob = word_prob(wa.symbols()) * word_prob(wb.symbols());
                    let mut stream: Vec<u8> = extract_word(&wa).iter().collect();
                    stream.extend(extract_word(&wb).iter());
                    if stream.len() >= j as usize {
                        let prefix = stream[..j as usize].to_vec();
                        *dist
                            .entry(prefix)
                            .or_insert_with(|| BigRational::from(BigInt::from(0))) += prob.clone();
                        total += prob;
                    }
                }
            }
            assert_eq!(dist.len() as u32, 1 << j);
            let expected = total / BigRational::from(BigInt::from(1i64 << j));
            for (prefix, prob) in dist {
                assert_eq!(prob, expected, "prefix {prefix:?} biased at j={j}");
            }
        }
    }

    proptest! {
        #[test]
        fn unrank_inverts_lex_rank(
            symbols in proptest::collection::vec(0u8..4, 1..=6),
        ) {
            let w = Word::new(symbols, 4).unwrap();
            let rank = lex_rank(&w);
            prop_assert!(rank < perm_count(&w));
            prop_assert_eq!(unrank(&w.letter_counts(), rank), w);
        }
    }

    #[test]
    fn exhaustive_rank_bijectivity_small() {
        // every word over M = 3, N = 5 round-trips through rank/unrank
        for code in 0..3u32.pow(5) {
            let mut c = code;
            let symbols: Vec<u8> = (0..5)
                .map(|_| {
                    let s = (c % 3) as u8;
                    c /= 3;
                    s
                })
                .collect();
            let w = Word::new(symbols, 3).unwrap();
            assert_eq!(unrank(&w.letter_counts(), lex_rank(&w)), w);
        }
    }
}

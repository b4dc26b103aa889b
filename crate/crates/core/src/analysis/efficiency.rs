//! Exact extraction-efficiency computation by pattern-class enumeration.
//!
//! Instead of sampling words, every integer partition of the word length is
//! enumerated and weighted by its exact class probability, so the bits/symbol
//! figure is a rational number with no Monte Carlo error. Counts use big
//! integers throughout; nothing here is performance critical.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::elias::PatternClass;
use crate::error::{Error, Result};

/// One point of the efficiency-vs-buffer curve.
#[derive(Debug, Clone)]
pub struct EfficiencyPoint {
    /// Alphabet size M.
    pub alphabet: u32,
    /// Word length N.
    pub word_len: u32,
    /// Binary buffer needed for one word: `N * ceil(log2 M)`.
    pub buffer_bits: u32,
    pub exact: BigRational,
    pub bits_per_symbol: f64,
}

/// Input symbol distribution for the efficiency computation.
#[derive(Debug, Clone)]
pub enum SymbolDist {
    Uniform,
    /// Exact per-letter weights; must sum to one.
    Weights(Vec<BigRational>),
}

/// Mean output bits for a class with permutation count `p`: each set bit `j`
/// of `p` contributes a block of `2^j` ranks emitting `j` bits.
pub fn expected_bits_per_class(p: &BigUint) -> BigRational {
    assert!(!p.is_zero(), "permutation count must be positive");
    let mut total = BigUint::zero();
    for j in 0..p.bits() {
        if p.bit(j) {
            total += BigUint::from(j) << j;
        }
    }
    BigRational::new(total.into(), p.clone().into())
}

fn big_multinomial(parts: &[u32]) -> BigUint {
    let mut n = BigUint::zero();
    let mut r = BigUint::one();
    for &c in parts {
        for i in 1..=c {
            n += 1u32;
            r = r * &n / BigUint::from(i);
        }
    }
    r
}

fn class_perm_count(class: &PatternClass) -> BigUint {
    big_multinomial(class.multiplicities())
}

/// Words over the alphabet carrying this pattern, in big arithmetic so the
/// curve stays exact for any (M, N) a caller asks for.
fn class_word_count_big(class: &PatternClass, alphabet: u32) -> BigUint {
    let parts = class.multiplicities();
    let mut assignments = BigUint::one();
    for i in 0..parts.len() as u32 {
        assignments *= BigUint::from(alphabet - i);
    }
    let mut run = 1u32;
    for w in parts.windows(2) {
        if w[0] == w[1] {
            run += 1;
            assignments /= BigUint::from(run);
        } else {
            run = 1;
        }
    }
    class_perm_count(class) * assignments
}

/// Exact probability of the class under a product distribution: the
/// multinomial position count times the monomial symmetric sum of the letter
/// weights over all distinct assignments of parts to letters.
fn class_probability(class: &PatternClass, dist: &SymbolDist, alphabet: u32) -> BigRational {
    match dist {
        SymbolDist::Uniform => {
            let words: BigInt = class_word_count_big(class, alphabet).into();
            let total: BigInt = BigUint::from(alphabet).pow(class.word_len()).into();
            BigRational::new(words, total)
        }
        SymbolDist::Weights(p) => {
            let mut exponents = vec![0u32; alphabet as usize];
            let k = class.multiplicities().len();
            exponents[..k].copy_from_slice(class.multiplicities());
            // distinct permutations of the padded exponent vector, starting
            // from the lexicographically smallest arrangement
            exponents.sort_unstable();
            let mut monomial_sum = BigRational::zero();
            loop {
                let mut term = BigRational::one();
                for (w, &e) in p.iter().zip(&exponents) {
                    for _ in 0..e {
                        term *= w;
                    }
                }
                monomial_sum += term;
                if !next_permutation(&mut exponents) {
                    break;
                }
            }
            BigRational::from(BigInt::from(class_perm_count(class))) * monomial_sum
        }
    }
}

/// Lexicographic next permutation; returns false after the last one.
fn next_permutation(v: &mut [u32]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let mut i = v.len() - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = v.len() - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

fn validate_dist(dist: &SymbolDist, alphabet: u32) -> Result<()> {
    if let SymbolDist::Weights(p) = dist {
        if p.len() != alphabet as usize {
            return Err(Error::Config(format!(
                "distribution has {} weights for alphabet of {alphabet}",
                p.len()
            )));
        }
        if p.iter().any(|w| w.is_negative()) {
            return Err(Error::Config("negative symbol weight".into()));
        }
        let total: BigRational = p.iter().cloned().sum();
        if !total.is_one() {
            return Err(Error::Config(format!(
                "symbol weights sum to {total}, not 1"
            )));
        }
    }
    Ok(())
}

/// Exact extraction efficiency in bits per input symbol for words of length
/// `word_len` over an `alphabet`-letter alphabet.
pub fn efficiency(alphabet: u32, word_len: u32, dist: &SymbolDist) -> Result<EfficiencyPoint> {
    if alphabet < 2 {
        return Err(Error::Config(
            "alphabet must have at least 2 letters".into(),
        ));
    }
    if word_len == 0 {
        return Err(Error::Config("word length must be positive".into()));
    }
    validate_dist(dist, alphabet)?;

    let mut bits_per_word = BigRational::zero();
    let mut closure = BigRational::zero();
    for class in PatternClass::enumerate(word_len, alphabet) {
        let prob = class_probability(&class, dist, alphabet);
        bits_per_word += &prob * expected_bits_per_class(&class_perm_count(&class));
        closure += prob;
    }
    debug_assert!(closure.is_one(), "class probabilities sum to {closure}");

    let exact = bits_per_word / BigRational::from(BigInt::from(word_len));
    let bits_per_symbol = ratio_to_f64(&exact);
    Ok(EfficiencyPoint {
        alphabet,
        word_len,
        buffer_bits: word_len * bits_per_letter(alphabet),
        exact,
        bits_per_symbol,
    })
}

/// `ceil(log2 alphabet)`: binary digits needed per symbol.
pub fn bits_per_letter(alphabet: u32) -> u32 {
    32 - (alphabet - 1).leading_zeros()
}

fn ratio_to_f64(r: &BigRational) -> f64 {
    r.numer().to_f64().unwrap_or(f64::NAN) / r.denom().to_f64().unwrap_or(f64::NAN)
}

/// Efficiency for every buffer size up to `max_buffer_bits` for the given
/// alphabet sizes (word lengths where the buffer is a whole number of
/// symbols), uniform input.
pub fn efficiency_curve(alphabets: &[u32], max_buffer_bits: u32) -> Result<Vec<EfficiencyPoint>> {
    let mut out = Vec::new();
    for &m in alphabets {
        let step = bits_per_letter(m);
        let mut n = 1;
        while n * step <= max_buffer_bits {
            out.push(efficiency(m, n, &SymbolDist::Uniform)?);
            n += 1;
        }
    }
    Ok(out)
}

/// Plot-ready CSV: `M,N,b,bits_per_symbol`.
pub fn efficiency_csv(points: &[EfficiencyPoint]) -> String {
    let mut s = String::from("M,N,b,bits_per_symbol\n");
    for p in points {
        s.push_str(&format!(
            "{},{},{},{:.9}\n",
            p.alphabet, p.word_len, p.buffer_bits, p.bits_per_symbol
        ));
    }
    s
}

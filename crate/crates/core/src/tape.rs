//! Substitution systems as a desk-scale "random input, long output" machine.
//!
//! A short seed word is rewritten in parallel generation after generation.
//! Symbol counts evolve linearly through the incidence matrix `M`
//! (`M[a][b]` = occurrences of `b` in the image of `a`), so every count is a
//! combination of powers of the eigenvalues of `M`: growth modulated by
//! oscillation whenever an eigenvalue is complex or negative.
//!
//! Rules are written as `A->AB; B->A`. Symbols are single non-whitespace
//! characters other than `-`, `>`, `;` and `,`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

pub const MAX_ALPHABET: usize = 16;
pub const MAX_PATTERN_LEN: usize = 8;
/// Largest word [`expand`] will materialize.
pub const DEFAULT_OUTPUT_CAP: u128 = 100_000_000;
/// Words longer than this are counted in parallel chunks.
const PARALLEL_COUNT_THRESHOLD: usize = 1 << 16;
const COUNT_CHUNK: usize = 1 << 15;

/// Symbols are indices into the system's alphabet.
pub type Word = Vec<u8>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubstitutionSystem {
    alphabet: Vec<char>,
    rules: Vec<Word>,
    seed_word: Word,
    non_expanding: bool,
}

fn reserved(c: char) -> bool {
    c.is_whitespace() || matches!(c, '-' | '>' | ';' | ',')
}

impl SubstitutionSystem {
    /// Builds a system; `rules[a]` is the image of symbol `a`.
    pub fn new(alphabet: Vec<char>, rules: Vec<Word>, seed_word: Word, non_expanding: bool) -> Result<Self> {
        if alphabet.is_empty() {
            return Err(Error::config("alphabet", "must not be empty"));
        }
        if alphabet.len() > MAX_ALPHABET {
            return Err(Error::config(
                "alphabet",
                format!("{} symbols exceeds the maximum of {MAX_ALPHABET}", alphabet.len()),
            ));
        }
        for (i, c) in alphabet.iter().enumerate() {
            if reserved(*c) {
                return Err(Error::config("alphabet", format!("{c:?} is not a valid symbol")));
            }
            if alphabet[..i].contains(c) {
                return Err(Error::config("alphabet", format!("duplicate symbol {c:?}")));
            }
        }
        if rules.len() != alphabet.len() {
            return Err(Error::config(
                "rules",
                format!("{} rules for {} symbols", rules.len(), alphabet.len()),
            ));
        }
        let n = alphabet.len() as u8;
        for (a, image) in rules.iter().enumerate() {
            if image.is_empty() {
                return Err(Error::config("rules", format!("image of {:?} is empty", alphabet[a])));
            }
            if image.iter().any(|&s| s >= n) {
                return Err(Error::config(
                    "rules",
                    format!("image of {:?} uses unknown symbol", alphabet[a]),
                ));
            }
        }
        if !non_expanding && rules.iter().all(|r| r.len() < 2) {
            return Err(Error::config(
                "rules",
                "no rule grows the word; mark the system non-expanding",
            ));
        }
        if seed_word.is_empty() {
            return Err(Error::config("seed_word", "must not be empty"));
        }
        if seed_word.iter().any(|&s| s >= n) {
            return Err(Error::config("seed_word", "uses a symbol outside the alphabet"));
        }
        Ok(Self {
            alphabet,
            rules,
            seed_word,
            non_expanding,
        })
    }

    /// Parses `"A->AB; B->A"` with the given seed word. The alphabet is the
    /// left-hand sides in order of appearance.
    pub fn parse(rules: &str, seed_word: &str, non_expanding: bool) -> Result<Self> {
        let (alphabet, images) = parse_rules(rules)?;
        let encode = |w: &str, what: &str| -> Result<Word> {
            w.chars()
                .map(|c| {
                    alphabet
                        .iter()
                        .position(|&a| a == c)
                        .map(|i| i as u8)
                        .ok_or_else(|| Error::Parse(format!("{what}: unknown symbol {c:?}")))
                })
                .collect()
        };
        let rules = images
            .iter()
            .map(|img| encode(img, "rule image"))
            .collect::<Result<Vec<_>>>()?;
        let seed = encode(seed_word.trim(), "seed word")?;
        Self::new(alphabet, rules, seed, non_expanding)
    }

    /// `A→AB, B→A`, seed `A`.
    pub fn fibonacci() -> Self {
        Self::parse("A->AB; B->A", "A", false).expect("valid system")
    }

    /// `A→B, B→A`, seed `A`: counts oscillate with period 2.
    pub fn swap() -> Self {
        Self::parse("A->B; B->A", "A", true).expect("valid system")
    }

    /// `A→AB, B→BA`, seed `A`.
    pub fn thue_morse() -> Self {
        Self::parse("A->AB; B->BA", "A", false).expect("valid system")
    }

    /// `A→AB, B→AA`, seed `A`: eigenvalues 2 and −1.
    pub fn period_doubling() -> Self {
        Self::parse("A->AB; B->AA", "A", false).expect("valid system")
    }

    /// `A→AB, B→AC, C→A`, seed `A`: a complex-conjugate pair of subdominant eigenvalues.
    pub fn tribonacci() -> Self {
        Self::parse("A->AB; B->AC; C->A", "A", false).expect("valid system")
    }

    /// Looks up a built-in system by name.
    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            "fibonacci" => Some(Self::fibonacci()),
            "swap" => Some(Self::swap()),
            "thue-morse" => Some(Self::thue_morse()),
            "period-doubling" => Some(Self::period_doubling()),
            "tribonacci" => Some(Self::tribonacci()),
            _ => None,
        }
    }

    pub const BUILTIN_NAMES: [&'static str; 5] = ["fibonacci", "swap", "thue-morse", "period-doubling", "tribonacci"];

    pub fn with_seed_word(mut self, seed_word: Word) -> Result<Self> {
        self.seed_word = seed_word;
        Self::new(self.alphabet, self.rules, self.seed_word, self.non_expanding)
    }

    /// Replaces the seed word with `len` symbols drawn from random bytes:
    /// byte `b` of a `ChaCha8Rng` stream seeded with `seed` becomes symbol
    /// `b mod |alphabet|`.
    pub fn with_random_seed(self, len: usize, seed: u64) -> Result<Self> {
        let mut bytes = vec![0u8; len];
        ChaCha8Rng::seed_from_u64(seed).fill_bytes(&mut bytes);
        let n = self.alphabet.len() as u8;
        let word = bytes.into_iter().map(|b| b % n).collect();
        self.with_seed_word(word)
    }

    pub fn alphabet(&self) -> &[char] {
        &self.alphabet
    }

    pub fn rules(&self) -> &[Word] {
        &self.rules
    }

    pub fn seed_word(&self) -> &[u8] {
        &self.seed_word
    }

    pub fn is_non_expanding(&self) -> bool {
        self.non_expanding
    }

    pub fn symbol_count(&self) -> usize {
        self.alphabet.len()
    }

    /// Renders a word with the alphabet's characters.
    pub fn render(&self, word: &[u8]) -> String {
        word.iter().map(|&s| self.alphabet[s as usize]).collect()
    }

    /// Encodes a string over the alphabet.
    pub fn encode(&self, text: &str) -> Result<Word> {
        text.chars()
            .map(|c| {
                self.alphabet
                    .iter()
                    .position(|&a| a == c)
                    .map(|i| i as u8)
                    .ok_or_else(|| Error::Parse(format!("unknown symbol {c:?}")))
            })
            .collect()
    }

    /// Incidence matrix, `m[a][b]` = occurrences of `b` in the image of `a`.
    pub fn matrix(&self) -> Vec<Vec<u64>> {
        let n = self.alphabet.len();
        self.rules
            .iter()
            .map(|img| {
                let mut row = vec![0u64; n];
                for &s in img {
                    row[s as usize] += 1;
                }
                row
            })
            .collect()
    }

    pub fn eigenvalues(&self) -> Vec<Complex64> {
        let m = self.matrix();
        let n = m.len();
        let dense = DMatrix::from_fn(n, n, |r, c| m[r][c] as f64);
        dense.complex_eigenvalues().iter().copied().collect()
    }

    /// The eigenvalue of largest modulus (ties by larger real, then imaginary part).
    pub fn dominant_eigenvalue(&self) -> Complex64 {
        dominant(&self.eigenvalues())
    }

    /// Output length after `n` generations, saturating at `u128::MAX`.
    pub fn projected_length(&self, n: usize) -> u128 {
        match predict_counts(self, n) {
            Ok(c) => c.iter().fold(0u128, |a, &b| a.saturating_add(b)),
            Err(_) => u128::MAX,
        }
    }
}

/// Parses `X->IMAGE` rules separated by `;`, `,` or newlines.
pub fn parse_rules(text: &str) -> Result<(Vec<char>, Vec<String>)> {
    let mut alphabet = Vec::new();
    let mut images = Vec::new();
    for raw in text.split([';', ',', '\n']) {
        let rule = raw.trim();
        if rule.is_empty() {
            continue;
        }
        let (lhs, rhs) = rule
            .split_once("->")
            .ok_or_else(|| Error::Parse(format!("rule {rule:?} has no '->'")))?;
        let lhs = lhs.trim();
        let rhs = rhs.trim();
        let mut chars = lhs.chars();
        let symbol = match (chars.next(), chars.next()) {
            (Some(c), None) if !reserved(c) => c,
            _ => return Err(Error::Parse(format!("left-hand side {lhs:?} must be one symbol"))),
        };
        if alphabet.contains(&symbol) {
            return Err(Error::Parse(format!("duplicate rule for {symbol:?}")));
        }
        if rhs.is_empty() {
            return Err(Error::Parse(format!("rule for {symbol:?} has an empty image")));
        }
        if let Some(c) = rhs.chars().find(|&c| reserved(c)) {
            return Err(Error::Parse(format!("image of {symbol:?} contains {c:?}")));
        }
        if alphabet.len() == MAX_ALPHABET {
            return Err(Error::Parse(format!("more than {MAX_ALPHABET} symbols")));
        }
        alphabet.push(symbol);
        images.push(rhs.to_string());
    }
    if alphabet.is_empty() {
        return Err(Error::Parse("no rules".into()));
    }
    Ok((alphabet, images))
}

fn dominant(values: &[Complex64]) -> Complex64 {
    let max = values.iter().map(|z| z.norm()).fold(0.0f64, f64::max);
    let floor = max * (1.0 - 1e-9);
    values
        .iter()
        .copied()
        .filter(|z| z.norm() >= floor)
        .max_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)))
        .unwrap_or_default()
}

/// Rewrites the seed word `n_generations` times. Refuses to build a word
/// longer than `cap`, checked from the incidence matrix beforehand.
pub fn expand(system: &SubstitutionSystem, n_generations: usize, cap: u128) -> Result<Word> {
    let projected = system.projected_length(n_generations);
    if projected > cap {
        return Err(Error::OutputTooLarge { projected, cap });
    }
    let mut word = system.seed_word.clone();
    for _ in 0..n_generations {
        let mut next = Vec::with_capacity(word.iter().map(|&s| system.rules[s as usize].len()).sum());
        for &s in &word {
            next.extend_from_slice(&system.rules[s as usize]);
        }
        word = next;
    }
    Ok(word)
}

fn count_in_range(word: &[u8], pattern: &[u8], starts: std::ops::Range<usize>) -> u64 {
    let last = word.len().saturating_sub(pattern.len() - 1);
    let end = starts.end.min(last);
    (starts.start..end)
        .filter(|&i| word[i..i + pattern.len()] == *pattern)
        .count() as u64
}

/// Overlapping occurrence counts of each pattern (`"AA"` occurs twice in `"AAA"`).
pub fn count_substructures(word: &[u8], patterns: &[Word]) -> Result<Vec<u64>> {
    if patterns.is_empty() {
        return Err(Error::Empty("no patterns"));
    }
    for (i, p) in patterns.iter().enumerate() {
        if p.is_empty() || p.len() > MAX_PATTERN_LEN {
            return Err(Error::config(
                format!("patterns[{i}]"),
                format!("length must be in 1..={MAX_PATTERN_LEN}"),
            ));
        }
    }
    Ok(patterns
        .iter()
        .map(|p| {
            if word.len() < PARALLEL_COUNT_THRESHOLD {
                count_in_range(word, p, 0..word.len())
            } else {
                // Each chunk owns the occurrences that start inside it and
                // may read past its end.
                (0..word.len().div_ceil(COUNT_CHUNK))
                    .into_par_iter()
                    .map(|c| count_in_range(word, p, c * COUNT_CHUNK..((c + 1) * COUNT_CHUNK).min(word.len())))
                    .sum()
            }
        })
        .collect())
}

/// Exact symbol counts after `n` generations: seed census times `Mⁿ`.
pub fn predict_counts(system: &SubstitutionSystem, n: usize) -> Result<Vec<u128>> {
    let k = system.symbol_count();
    let m = system.matrix();
    let mut census = vec![0u128; k];
    for &s in &system.seed_word {
        census[s as usize] += 1;
    }
    for _ in 0..n {
        let mut next = vec![0u128; k];
        for a in 0..k {
            if census[a] == 0 {
                continue;
            }
            for b in 0..k {
                let add = census[a]
                    .checked_mul(m[a][b] as u128)
                    .and_then(|v| next[b].checked_add(v))
                    .ok_or_else(|| Error::Numerical("symbol count overflows u128".into()))?;
                next[b] = add;
            }
        }
        census = next;
    }
    Ok(census)
}

/// Count sequence model `s_n ≈ Re(c·λⁿ) + offset`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrowthFit {
    pub lambda: Complex64,
    pub coefficient: Complex64,
    /// Background level; zero unless fitted.
    pub offset: f64,
    /// RMS of the fit error divided by the RMS of the counts.
    pub residual: f64,
    /// Order of the linear recurrence found.
    pub order: usize,
    /// All roots of the recurrence.
    pub roots: Vec<Complex64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    /// Fit a constant background alongside the exponential.
    pub background: bool,
    /// Relative residual at which a recurrence order is accepted.
    pub tolerance: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            background: false,
            tolerance: 1e-9,
        }
    }
}

pub const MIN_FIT_GENERATIONS: usize = 6;

fn least_squares(a: DMatrix<f64>, b: DVector<f64>) -> Result<DVector<f64>> {
    a.svd(true, true)
        .solve(&b, 1e-12)
        .map_err(|e| Error::Numerical(format!("least squares failed: {e}")))
}

/// Finds the minimal linear recurrence of the sequence by linear
/// prediction and returns its coefficients `c` in `s_n = Σ c_i·s_{n−i}`.
fn minimal_recurrence(s: &[f64], tolerance: f64) -> Result<Vec<f64>> {
    let max_order = s.len() / 2;
    let mut best: Option<(f64, Vec<f64>)> = None;
    for p in 1..=max_order {
        let rows = s.len() - p;
        let a = DMatrix::from_fn(rows, p, |r, c| s[r + p - 1 - c]);
        let b = DVector::from_iterator(rows, s[p..].iter().copied());
        let coeffs = least_squares(a.clone(), b.clone())?;
        let bnorm = b.norm();
        let err = (a * &coeffs - &b).norm();
        let rel = if bnorm == 0.0 { err } else { err / bnorm };
        let coeffs: Vec<f64> = coeffs.iter().copied().collect();
        if rel <= tolerance {
            return Ok(coeffs);
        }
        if best.as_ref().is_none_or(|(r, _)| rel < *r) {
            best = Some((rel, coeffs));
        }
    }
    best.map(|(_, c)| c)
        .ok_or_else(|| Error::Numerical("sequence too short for a recurrence".into()))
}

fn recurrence_roots(coeffs: &[f64]) -> Vec<Complex64> {
    let p = coeffs.len();
    if p == 1 {
        return vec![Complex64::new(coeffs[0], 0.0)];
    }
    // Companion matrix of z^p − c_1 z^{p−1} − … − c_p.
    let companion = DMatrix::from_fn(p, p, |r, c| {
        if r == 0 {
            coeffs[c]
        } else if r == c + 1 {
            1.0
        } else {
            0.0
        }
    });
    companion.complex_eigenvalues().iter().copied().collect()
}

/// Fits `Re(c·λⁿ)` (plus an optional constant background) to a count
/// sequence. `λ` is the dominant root of the sequence's minimal linear
/// recurrence; for a conjugate pair the root with positive imaginary part is
/// reported.
pub fn fit_complex_exponential(counts: &[f64], opts: &FitOptions) -> Result<GrowthFit> {
    if counts.len() < MIN_FIT_GENERATIONS {
        return Err(Error::config(
            "counts",
            format!("need at least {MIN_FIT_GENERATIONS} generations, got {}", counts.len()),
        ));
    }
    if counts.iter().any(|c| !c.is_finite()) {
        return Err(Error::config("counts", "must be finite"));
    }
    if counts.iter().all(|&c| c == 0.0) {
        return Err(Error::Numerical("degenerate all-zero count sequence".into()));
    }
    let series: Vec<f64> = if opts.background {
        counts.windows(2).map(|w| w[1] - w[0]).collect()
    } else {
        counts.to_vec()
    };
    if series.iter().all(|&c| c == 0.0) {
        return Err(Error::Numerical("degenerate constant count sequence".into()));
    }
    let coeffs = minimal_recurrence(&series, opts.tolerance)?;
    let roots = recurrence_roots(&coeffs);
    let lambda = dominant(&roots);

    let n = counts.len();
    let cols = if opts.background { 3 } else { 2 };
    let powers: Vec<Complex64> = (0..n).map(|k| lambda.powi(k as i32)).collect();
    let a = DMatrix::from_fn(n, cols, |r, c| match c {
        0 => powers[r].re,
        1 => -powers[r].im,
        _ => 1.0,
    });
    let sol = least_squares(a.clone(), DVector::from_column_slice(counts))?;
    let coefficient = Complex64::new(sol[0], sol[1]);
    let offset = if opts.background { sol[2] } else { 0.0 };
    let fitted = a * &sol;
    let err: f64 = fitted.iter().zip(counts).map(|(f, c)| (f - c).powi(2)).sum::<f64>();
    let scale: f64 = counts.iter().map(|c| c * c).sum::<f64>();
    Ok(GrowthFit {
        lambda,
        coefficient,
        offset,
        residual: (err / scale).sqrt(),
        order: coeffs.len(),
        roots,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_rules_keep_seed() {
        let sys = SubstitutionSystem::parse("A->A; B->B", "ABBA", true).unwrap();
        let w = expand(&sys, 5, DEFAULT_OUTPUT_CAP).unwrap();
        assert_eq!(sys.render(&w), "ABBA");
    }

    #[test]
    fn fibonacci_hand_iteration() {
        let sys = SubstitutionSystem::fibonacci();
        let words: Vec<String> = (0..=4)
            .map(|n| sys.render(&expand(&sys, n, DEFAULT_OUTPUT_CAP).unwrap()))
            .collect();
        assert_eq!(words, ["A", "AB", "ABA", "ABAAB", "ABAABABA"]);
    }

    #[test]
    fn swap_alternates() {
        let sys = SubstitutionSystem::swap();
        let words: Vec<String> = (0..5)
            .map(|n| sys.render(&expand(&sys, n, DEFAULT_OUTPUT_CAP).unwrap()))
            .collect();
        assert_eq!(words, ["A", "B", "A", "B", "A"]);
    }

    #[test]
    fn parse_errors() {
        assert!(parse_rules("").is_err());
        assert!(parse_rules("AB->A").is_err());
        assert!(parse_rules("A->").is_err());
        assert!(parse_rules("A->B; A->A").is_err());
        assert!(parse_rules("A=>B").is_err());
        assert!(SubstitutionSystem::parse("A->AC; B->A", "A", false).is_err());
        assert!(SubstitutionSystem::parse("A->B; B->A", "A", false).is_err());
        assert!(SubstitutionSystem::parse("A->AB; B->A", "", false).is_err());
        assert!(SubstitutionSystem::parse("A->AB; B->A", "C", false).is_err());
        let many: String = "abcdefghijklmnopq".chars().map(|c| format!("{c}->{c}{c};")).collect();
        assert!(parse_rules(&many).is_err());
    }

    #[test]
    fn expansion_cap_reports_projection() {
        let sys = SubstitutionSystem::thue_morse();
        match expand(&sys, 30, DEFAULT_OUTPUT_CAP) {
            Err(Error::OutputTooLarge { projected, .. }) => assert_eq!(projected, 1 << 30),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn counting_conventions() {
        let sys = SubstitutionSystem::parse("A->AB; B->A", "A", false).unwrap();
        let w = sys.encode("AAA").unwrap();
        assert_eq!(count_substructures(&w, &[sys.encode("AA").unwrap()]).unwrap(), vec![2]);
        let w = expand(&sys, 10, DEFAULT_OUTPUT_CAP).unwrap();
        let singles = count_substructures(&w, &[vec![0], vec![1]]).unwrap();
        assert_eq!(singles.iter().sum::<u64>(), w.len() as u64);
        assert!(count_substructures(&w, &[]).is_err());
        assert!(count_substructures(&w, &[vec![]]).is_err());
        assert!(count_substructures(&w, &[vec![0; 9]]).is_err());
        assert_eq!(count_substructures(&[0], &[vec![0, 0]]).unwrap(), vec![0]);
    }

    #[test]
    fn chunked_counting_matches_sequential() {
        let sys = SubstitutionSystem::fibonacci();
        let w = expand(&sys, 25, DEFAULT_OUTPUT_CAP).unwrap();
        assert!(w.len() > PARALLEL_COUNT_THRESHOLD);
        let pats = vec![vec![0, 0], vec![0, 1, 0], vec![1, 0, 0, 1, 0]];
        let chunked = count_substructures(&w, &pats).unwrap();
        for (p, c) in pats.iter().zip(chunked) {
            assert_eq!(count_in_range(&w, p, 0..w.len()), c);
        }
    }

    #[test]
    fn geometric_fit() {
        let s: Vec<f64> = (0..8).map(|n| 2f64.powi(n)).collect();
        let fit = fit_complex_exponential(&s, &FitOptions::default()).unwrap();
        assert!((fit.lambda - Complex64::new(2.0, 0.0)).norm() < 1e-12);
        assert!(fit.residual < 1e-12);
        assert_eq!(fit.order, 1);
    }

    #[test]
    fn background_offset_fit() {
        let s: Vec<f64> = (0..10).map(|n| 3.0 * 1.5f64.powi(n) + 7.0).collect();
        let opts = FitOptions {
            background: true,
            ..Default::default()
        };
        let fit = fit_complex_exponential(&s, &opts).unwrap();
        assert!((fit.lambda.re - 1.5).abs() < 1e-10);
        assert!((fit.offset - 7.0).abs() < 1e-8);
        assert!((fit.coefficient.re - 3.0).abs() < 1e-8);
        assert!(fit.residual < 1e-10);
    }

    #[test]
    fn degenerate_fits_rejected() {
        assert!(fit_complex_exponential(&[0.0; 8], &FitOptions::default()).is_err());
        assert!(fit_complex_exponential(&[1.0, 2.0, 3.0], &FitOptions::default()).is_err());
        let flat = FitOptions {
            background: true,
            ..Default::default()
        };
        assert!(fit_complex_exponential(&[4.0; 8], &flat).is_err());
    }

    #[test]
    fn random_seed_word_is_deterministic() {
        let a = SubstitutionSystem::fibonacci().with_random_seed(12, 5).unwrap();
        let b = SubstitutionSystem::fibonacci().with_random_seed(12, 5).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.seed_word().len(), 12);
    }
}

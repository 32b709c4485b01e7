//! The word-series coefficient algebra.
//!
//! Coefficient maps live on words over a fixed finite alphabet, dense up to
//! a length cap. Letters are either named symbols or integer mode vectors
//! k ∈ ℤ^d; a word is stored as a sequence of letter indices. The
//! convolution product deconcatenates words into prefix/suffix pairs; group
//! elements are the maps satisfying the shuffle relations, Lie elements the
//! maps annihilating shuffles.
//!
//! Iterated-integral coefficients are computed in closed form: every
//! coefficient is an exponential polynomial Σ p_μ(t) e^{iμt} whose
//! frequencies are tracked as exact rationals, so μ = 0 (and any exact
//! cancellation of mode frequencies) takes the confluent polynomial branch
//! instead of dividing by a vanishing iμ.

use crate::scalar::{factorial, rat_from_f64, rat_to_f64, Rat, Scalar};
use num_complex::Complex64;
use num_traits::{One, Zero};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum WordError {
    #[error("alphabets or caps differ between operands")]
    AlphabetMismatch,
    #[error("map is not a group element: {0}")]
    NotGroupElement(String),
    #[error("map is not a Lie element: {0}")]
    NotLieElement(String),
    #[error("unknown letter {0:?}")]
    UnknownLetter(String),
    #[error("alphabet has no integer-vector modes")]
    NotModeAlphabet,
    #[error("invalid word map: {0}")]
    InvalidMap(String),
}

/// A word: sequence of letter indices into the owning alphabet.
pub type Word = Vec<u8>;

/// Finite alphabet description. `Named` letters are abstract symbols;
/// `Modes` letters are integer vectors k ∈ ℤ^d.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Alphabet {
    Named(Vec<String>),
    Modes(Vec<Vec<i64>>),
}

impl Alphabet {
    pub fn named(letters: &[&str]) -> Self {
        Alphabet::Named(letters.iter().map(|s| s.to_string()).collect())
    }

    pub fn modes(ks: Vec<Vec<i64>>) -> Self {
        assert!(!ks.is_empty(), "empty mode set");
        let d = ks[0].len();
        assert!(ks.iter().all(|k| k.len() == d), "mixed mode dimensions");
        Alphabet::Modes(ks)
    }

    pub fn len(&self) -> usize {
        match self {
            Alphabet::Named(v) => v.len(),
            Alphabet::Modes(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Dimension d of the mode vectors, if this is a mode alphabet.
    pub fn mode_dim(&self) -> Option<usize> {
        match self {
            Alphabet::Named(_) => None,
            Alphabet::Modes(v) => Some(v[0].len()),
        }
    }

    pub fn mode(&self, letter: u8) -> Option<&[i64]> {
        match self {
            Alphabet::Named(_) => None,
            Alphabet::Modes(v) => v.get(letter as usize).map(|k| k.as_slice()),
        }
    }

    pub fn label(&self, letter: u8) -> String {
        match self {
            Alphabet::Named(v) => v[letter as usize].clone(),
            Alphabet::Modes(v) => v[letter as usize]
                .iter()
                .map(|k| k.to_string())
                .collect::<Vec<_>>()
                .join(","),
        }
    }

    pub fn letter_from_label(&self, label: &str) -> Result<u8, WordError> {
        let idx = match self {
            Alphabet::Named(v) => v.iter().position(|s| s == label),
            Alphabet::Modes(v) => {
                let parsed: Result<Vec<i64>, _> =
                    label.split(',').map(|s| s.trim().parse::<i64>()).collect();
                match parsed {
                    Ok(k) => v.iter().position(|m| m == &k),
                    Err(_) => None,
                }
            }
        };
        idx.map(|i| i as u8)
            .ok_or_else(|| WordError::UnknownLetter(label.to_string()))
    }

    /// Dot-joined label of a word; the empty word maps to "".
    pub fn word_label(&self, w: &Word) -> String {
        w.iter()
            .map(|&l| self.label(l))
            .collect::<Vec<_>>()
            .join(".")
    }

    pub fn word_from_label(&self, label: &str) -> Result<Word, WordError> {
        if label.is_empty() {
            return Ok(Vec::new());
        }
        label
            .split('.')
            .map(|part| self.letter_from_label(part))
            .collect()
    }

    /// Sum of the mode vectors of a word's letters.
    pub fn mode_sum(&self, w: &[u8]) -> Result<Vec<i64>, WordError> {
        let d = self.mode_dim().ok_or(WordError::NotModeAlphabet)?;
        let mut sum = vec![0i64; d];
        for &l in w {
            let k = self.mode(l).ok_or(WordError::NotModeAlphabet)?;
            for (s, ki) in sum.iter_mut().zip(k) {
                *s += ki;
            }
        }
        Ok(sum)
    }
}

/// Dense coefficient map on all words of length ≤ cap.
#[derive(Debug, Clone, PartialEq)]
pub struct WMap<S> {
    alphabet: Alphabet,
    cap: usize,
    by_len: Vec<Vec<S>>,
}

fn word_index(alpha_len: usize, w: &[u8]) -> usize {
    let mut idx = 0usize;
    for &l in w {
        idx = idx * alpha_len + l as usize;
    }
    idx
}

/// All words of the given length in lexicographic order of letter indices.
pub fn words_of_len(alpha_len: usize, n: usize) -> Vec<Word> {
    let mut out = Vec::with_capacity(alpha_len.pow(n as u32));
    let mut w = vec![0u8; n];
    loop {
        out.push(w.clone());
        let mut i = n;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if (w[i] as usize) + 1 < alpha_len {
                w[i] += 1;
                for x in &mut w[i + 1..] {
                    *x = 0;
                }
                break;
            }
        }
    }
}

impl<S: Scalar> WMap<S> {
    pub fn zero(alphabet: Alphabet, cap: usize) -> Self {
        let a = alphabet.len();
        let by_len = (0..=cap).map(|n| vec![S::zero(); a.pow(n as u32)]).collect();
        WMap {
            alphabet,
            cap,
            by_len,
        }
    }

    /// The convolution unit 1 1: value 1 at ∅, 0 elsewhere.
    pub fn unit(alphabet: Alphabet, cap: usize) -> Self {
        let mut m = Self::zero(alphabet, cap);
        m.by_len[0][0] = S::one();
        m
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    pub fn coeff(&self, w: &[u8]) -> &S {
        &self.by_len[w.len()][word_index(self.alphabet.len(), w)]
    }

    pub fn set_coeff(&mut self, w: &[u8], v: S) {
        let idx = word_index(self.alphabet.len(), w);
        self.by_len[w.len()][idx] = v;
    }

    pub fn empty_coeff(&self) -> &S {
        &self.by_len[0][0]
    }

    /// Iterates (word, coefficient) over all words of length ≤ cap in
    /// length-then-lex order.
    pub fn iter(&self) -> impl Iterator<Item = (Word, &S)> {
        (0..=self.cap).flat_map(move |n| {
            words_of_len(self.alphabet.len(), n)
                .into_iter()
                .map(move |w| {
                    let c = self.coeff(&w);
                    (w, c)
                })
        })
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&Word, &S) -> T) -> WMap<T> {
        let mut out = WMap::zero(self.alphabet.clone(), self.cap);
        for n in 0..=self.cap {
            for w in words_of_len(self.alphabet.len(), n) {
                let v = f(&w, self.coeff(&w));
                out.set_coeff(&w, v);
            }
        }
        out
    }

    pub fn add(&self, other: &WMap<S>) -> Result<WMap<S>, WordError> {
        self.zip(other, |a, b| a.clone() + b.clone())
    }

    pub fn sub(&self, other: &WMap<S>) -> Result<WMap<S>, WordError> {
        self.zip(other, |a, b| a.clone() - b.clone())
    }

    pub fn scale(&self, s: &S) -> WMap<S> {
        self.map(|_, c| c.clone() * s.clone())
    }

    fn zip(&self, other: &WMap<S>, f: impl Fn(&S, &S) -> S) -> Result<WMap<S>, WordError> {
        if self.alphabet != other.alphabet || self.cap != other.cap {
            return Err(WordError::AlphabetMismatch);
        }
        let mut out = WMap::zero(self.alphabet.clone(), self.cap);
        for (n, row) in out.by_len.iter_mut().enumerate() {
            for (i, slot) in row.iter_mut().enumerate() {
                *slot = f(&self.by_len[n][i], &other.by_len[n][i]);
            }
        }
        Ok(out)
    }

    /// Largest absolute difference of coefficients against another map.
    pub fn max_abs_diff(&self, other: &WMap<S>) -> f64 {
        let mut m: f64 = 0.0;
        for n in 0..=self.cap.min(other.cap) {
            for (a, b) in self.by_len[n].iter().zip(&other.by_len[n]) {
                m = m.max((a.clone() - b.clone()).norm());
            }
        }
        m
    }

    /// JSON: {"alphabet": [...], "cap": N, "coeffs": {label: value}} with
    /// dot-joined word labels; values are [re, im] pairs for complex maps
    /// and rational strings for exact maps.
    pub fn to_json(&self, value: impl Fn(&S) -> serde_json::Value) -> serde_json::Value {
        let alphabet = match &self.alphabet {
            Alphabet::Named(v) => serde_json::json!(v),
            Alphabet::Modes(v) => serde_json::json!(v),
        };
        let mut coeffs = serde_json::Map::new();
        for (w, c) in self.iter() {
            coeffs.insert(self.alphabet.word_label(&w), value(c));
        }
        serde_json::json!({
            "alphabet": alphabet,
            "cap": self.cap,
            "coeffs": coeffs,
        })
    }
}

/// All interleavings of two words preserving internal letter order, with
/// multiplicity as repeats: (m+n)!/(m!n!) entries in total.
pub fn shuffle(w: &[u8], v: &[u8]) -> Vec<Word> {
    if w.is_empty() {
        return vec![v.to_vec()];
    }
    if v.is_empty() {
        return vec![w.to_vec()];
    }
    let mut out = Vec::new();
    for mut rest in shuffle(&w[1..], v) {
        let mut s = Vec::with_capacity(rest.len() + 1);
        s.push(w[0]);
        s.append(&mut rest);
        out.push(s);
    }
    for mut rest in shuffle(w, &v[1..]) {
        let mut s = Vec::with_capacity(rest.len() + 1);
        s.push(v[0]);
        s.append(&mut rest);
        out.push(s);
    }
    out
}

/// Convolution product by prefix/suffix deconcatenation:
/// (δ⋆δ')_w = Σ_{w = pq} δ_p δ'_q over all splits including both trivial
/// ones; at the empty word it is δ_∅ δ'_∅.
pub fn convolution<S: Scalar>(a: &WMap<S>, b: &WMap<S>) -> Result<WMap<S>, WordError> {
    if a.alphabet != b.alphabet || a.cap != b.cap {
        return Err(WordError::AlphabetMismatch);
    }
    let mut out = WMap::zero(a.alphabet.clone(), a.cap);
    for n in 0..=a.cap {
        for w in words_of_len(a.alphabet.len(), n) {
            let mut acc = S::zero();
            for j in 0..=n {
                acc = acc + a.coeff(&w[..j]).clone() * b.coeff(&w[j..]).clone();
            }
            out.set_coeff(&w, acc);
        }
    }
    Ok(out)
}

/// First shuffle relation γ_w γ_w' ≠ Σ γ_{shuffles} with |w|+|w'| ≤ n, or
/// the failure of γ_∅ = 1, reported as a witness pair. None means the map
/// satisfies the group (character) conditions within `tol`.
pub fn group_violation<S: Scalar>(gamma: &WMap<S>, n: usize, tol: f64) -> Option<(Word, Word)> {
    if !gamma.empty_coeff().approx_eq(&S::one(), tol) {
        return Some((Vec::new(), Vec::new()));
    }
    shuffle_violation(gamma, n, tol, true)
}

pub fn is_group_element<S: Scalar>(gamma: &WMap<S>, n: usize, tol: f64) -> bool {
    group_violation(gamma, n, tol).is_none()
}

/// First violation of β_∅ = 0 or of Σ β_{shuffles} = 0, or None.
pub fn lie_violation<S: Scalar>(beta: &WMap<S>, n: usize, tol: f64) -> Option<(Word, Word)> {
    if !beta.empty_coeff().approx_eq(&S::zero(), tol) {
        return Some((Vec::new(), Vec::new()));
    }
    shuffle_violation(beta, n, tol, false)
}

pub fn is_lie_element<S: Scalar>(beta: &WMap<S>, n: usize, tol: f64) -> bool {
    lie_violation(beta, n, tol).is_none()
}

fn shuffle_violation<S: Scalar>(
    map: &WMap<S>,
    n: usize,
    tol: f64,
    product_rhs: bool,
) -> Option<(Word, Word)> {
    let n = n.min(map.cap);
    let a = map.alphabet.len();
    for total in 2..=n {
        for lw in 1..total {
            let lv = total - lw;
            if lv < lw {
                continue; // (w, v) and (v, w) give the same relation
            }
            for w in words_of_len(a, lw) {
                for v in words_of_len(a, lv) {
                    let mut lhs = S::zero();
                    for s in shuffle(&w, &v) {
                        lhs = lhs + map.coeff(&s).clone();
                    }
                    let rhs = if product_rhs {
                        map.coeff(&w).clone() * map.coeff(&v).clone()
                    } else {
                        S::zero()
                    };
                    if !lhs.approx_eq(&rhs, tol) {
                        return Some((w, v));
                    }
                }
            }
        }
    }
    None
}

/// Inverse of a group element in the character group:
/// (γ⁻¹)_w = (−1)^{|w|} γ_{reverse(w)}.
pub fn antipode_inverse<S: Scalar>(
    gamma: &WMap<S>,
    tol: f64,
) -> Result<WMap<S>, WordError> {
    if let Some((w, v)) = group_violation(gamma, gamma.cap, tol) {
        return Err(WordError::NotGroupElement(format!(
            "shuffle relation fails at ({:?}, {:?})",
            w, v
        )));
    }
    Ok(gamma.map(|w, _| {
        let rev: Word = w.iter().rev().copied().collect();
        let sign = if w.len() % 2 == 0 { S::one() } else { -S::one() };
        sign * gamma.coeff(&rev).clone()
    }))
}

/// Lie bracket [β, β'] = β⋆β' − β'⋆β.
pub fn lie_bracket<S: Scalar>(a: &WMap<S>, b: &WMap<S>) -> Result<WMap<S>, WordError> {
    convolution(a, b)?.sub(&convolution(b, a)?)
}

/// One additive term c t^m e^{iμt} of a forcing function λ(t). The
/// frequency is kept as an exact rational so that cancellations detected
/// during integration are exact, not approximate.
#[derive(Debug, Clone)]
pub struct LambdaTerm {
    pub coeff: Complex64,
    pub power: u32,
    pub freq: Rat,
}

/// Per-letter exponential-polynomial forcings λ_a(t).
#[derive(Debug, Clone)]
pub struct LambdaSpec {
    per_letter: Vec<Vec<LambdaTerm>>,
}

impl LambdaSpec {
    pub fn new(per_letter: Vec<Vec<LambdaTerm>>) -> Self {
        LambdaSpec { per_letter }
    }

    /// λ_a ≡ 1 for every letter.
    pub fn ones(letters: usize) -> Self {
        LambdaSpec {
            per_letter: (0..letters)
                .map(|_| {
                    vec![LambdaTerm {
                        coeff: Complex64::new(1.0, 0.0),
                        power: 0,
                        freq: Rat::zero(),
                    }]
                })
                .collect(),
        }
    }

    /// λ_k(t) = e^{i(k·ω)t} for a mode alphabet; the frequency k·ω is
    /// assembled in exact rational arithmetic from the float entries of ω.
    pub fn oscillatory(alphabet: &Alphabet, omega: &[f64]) -> Result<Self, WordError> {
        let d = alphabet.mode_dim().ok_or(WordError::NotModeAlphabet)?;
        if omega.len() != d {
            return Err(WordError::InvalidMap(format!(
                "omega has {} entries, modes have dimension {d}",
                omega.len()
            )));
        }
        let omega_rat: Vec<Rat> = omega.iter().map(|&x| rat_from_f64(x)).collect();
        let per_letter = (0..alphabet.len())
            .map(|i| {
                let k = alphabet.mode(i as u8).expect("mode alphabet");
                let mut freq = Rat::zero();
                for (kj, wj) in k.iter().zip(&omega_rat) {
                    freq += Rat::from_integer((*kj).into()) * wj;
                }
                vec![LambdaTerm {
                    coeff: Complex64::new(1.0, 0.0),
                    power: 0,
                    freq,
                }]
            })
            .collect();
        Ok(LambdaSpec { per_letter })
    }

    pub fn letters(&self) -> usize {
        self.per_letter.len()
    }

    fn as_exp_poly(&self, letter: u8) -> ExpPoly {
        let mut p = ExpPoly::zero();
        for term in &self.per_letter[letter as usize] {
            p.add_term(term.freq.clone(), term.power as usize, term.coeff);
        }
        p
    }
}

/// Exponential polynomial Σ_μ p_μ(t) e^{iμt} with exact rational
/// frequencies and complex polynomial coefficients (ascending degree).
#[derive(Debug, Clone, PartialEq)]
pub struct ExpPoly {
    terms: BTreeMap<Rat, Vec<Complex64>>,
}

impl ExpPoly {
    pub fn zero() -> Self {
        ExpPoly {
            terms: BTreeMap::new(),
        }
    }

    pub fn one() -> Self {
        let mut p = Self::zero();
        p.add_term(Rat::zero(), 0, Complex64::new(1.0, 0.0));
        p
    }

    pub fn add_term(&mut self, freq: Rat, power: usize, coeff: Complex64) {
        if coeff == Complex64::new(0.0, 0.0) {
            return;
        }
        let poly = self.terms.entry(freq).or_default();
        if poly.len() <= power {
            poly.resize(power + 1, Complex64::new(0.0, 0.0));
        }
        poly[power] += coeff;
    }

    pub fn add(&self, other: &ExpPoly) -> ExpPoly {
        let mut out = self.clone();
        for (freq, poly) in &other.terms {
            for (m, c) in poly.iter().enumerate() {
                out.add_term(freq.clone(), m, *c);
            }
        }
        out
    }

    pub fn mul(&self, other: &ExpPoly) -> ExpPoly {
        let mut out = ExpPoly::zero();
        for (fa, pa) in &self.terms {
            for (fb, pb) in &other.terms {
                let freq = fa + fb;
                for (i, ca) in pa.iter().enumerate() {
                    for (j, cb) in pb.iter().enumerate() {
                        out.add_term(freq.clone(), i + j, ca * cb);
                    }
                }
            }
        }
        out
    }

    pub fn scale(&self, s: Complex64) -> ExpPoly {
        let mut out = ExpPoly::zero();
        for (f, p) in &self.terms {
            for (m, c) in p.iter().enumerate() {
                out.add_term(f.clone(), m, c * s);
            }
        }
        out
    }

    /// ∫₀ᵗ of the exponential polynomial, again an exponential polynomial.
    /// The μ = 0 block integrates termwise (degree bump); μ ≠ 0 blocks use
    /// the antiderivative e^{iμt} q(t) with q solved degree-descending,
    /// minus its value at 0.
    pub fn integrate(&self) -> ExpPoly {
        let mut out = ExpPoly::zero();
        for (freq, poly) in &self.terms {
            if freq.is_zero() {
                for (m, c) in poly.iter().enumerate() {
                    out.add_term(Rat::zero(), m + 1, c / (m as f64 + 1.0));
                }
            } else {
                let imu = Complex64::new(0.0, rat_to_f64(freq));
                let mut q = vec![Complex64::new(0.0, 0.0); poly.len()];
                for m in (0..poly.len()).rev() {
                    let higher = if m + 1 < q.len() {
                        q[m + 1] * (m as f64 + 1.0)
                    } else {
                        Complex64::new(0.0, 0.0)
                    };
                    q[m] = (poly[m] - higher) / imu;
                }
                for (m, c) in q.iter().enumerate() {
                    out.add_term(freq.clone(), m, *c);
                }
                out.add_term(Rat::zero(), 0, -q[0]);
            }
        }
        out
    }

    pub fn eval(&self, t: f64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (freq, poly) in &self.terms {
            let mut pval = Complex64::new(0.0, 0.0);
            for c in poly.iter().rev() {
                pval = pval * t + c;
            }
            acc += pval * Complex64::from_polar(1.0, rat_to_f64(freq) * t);
        }
        acc
    }
}

/// Iterated-integral coefficients α_w(t) for the given forcings, evaluated
/// at `t`. Each coefficient is built in closed form by the recursion
/// α_{wa}(t) = ∫₀ᵗ λ_a(s) α_w(s) ds with α_∅ = 1.
pub fn iterated_integral_coeffs(
    spec: &LambdaSpec,
    alphabet: &Alphabet,
    t: f64,
    cap: usize,
) -> WMap<Complex64> {
    let polys = iterated_integral_exp_polys(spec, alphabet, cap);
    let mut out = WMap::zero(alphabet.clone(), cap);
    for (w, p) in &polys {
        out.set_coeff(w, p.eval(t));
    }
    out
}

/// The symbolic exponential-polynomial form of every α_w, |w| ≤ cap.
pub fn iterated_integral_exp_polys(
    spec: &LambdaSpec,
    alphabet: &Alphabet,
    cap: usize,
) -> BTreeMap<Word, ExpPoly> {
    assert_eq!(spec.letters(), alphabet.len(), "spec/alphabet size mismatch");
    let a = alphabet.len();
    let mut polys: BTreeMap<Word, ExpPoly> = BTreeMap::new();
    polys.insert(Vec::new(), ExpPoly::one());
    for n in 1..=cap {
        for w in words_of_len(a, n) {
            let prefix = w[..n - 1].to_vec();
            let last = w[n - 1];
            let integrand = spec.as_exp_poly(last).mul(&polys[&prefix]);
            polys.insert(w, integrand.integrate());
        }
    }
    polys
}

/// Exact-rational Taylor coefficients t^n/n! on every n-letter word: the
/// λ ≡ 1 case of the iterated integrals at a rational time.
pub fn taylor_coeffs_exact(t: &Rat, alphabet: &Alphabet, cap: usize) -> WMap<Rat> {
    let mut out = WMap::zero(alphabet.clone(), cap);
    for n in 0..=cap {
        let mut tn = Rat::one();
        for _ in 0..n {
            tn *= t;
        }
        let val = tn / factorial(n as u32);
        for w in words_of_len(alphabet.len(), n) {
            out.set_coeff(&w, val.clone());
        }
    }
    out
}

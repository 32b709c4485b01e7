//! Splitting integrators for perturbed integrable problems: word
//! coefficients of the integrator in closed form and by ★-composition,
//! numerical-resonance detection, and construction of truncated modified
//! systems whose flow reproduces the integrator through a given grade.
//!
//! The integrator alternates exact rotations of the angles with flows of
//! the perturbation. Its extended coefficients are (h a ω, α̃(h)) where a
//! is the sum of the rotation coefficients and α̃ carries one oscillatory
//! closed-form sum per word.

use crate::extended::{bigstar, ExtCoeffs, ExtError, Frequencies};
use crate::scalar::{rat_from_f64, Rat};
use crate::words::{is_lie_element, words_of_len, Alphabet, ExpPoly, WMap, Word, WordError};
use num_complex::Complex64;
use num_traits::Zero;
use serde::Deserialize;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SplitError {
    #[error("numerical resonance at letters {letters:?}: phase is 2π·{j}")]
    Resonance { letters: Vec<Vec<i64>>, j: i64 },
    #[error("coefficient map is not a Lie element")]
    NotLieElement,
    #[error("invalid splitting scheme: {0}")]
    InvalidScheme(String),
    #[error(transparent)]
    Ext(#[from] ExtError),
    #[error(transparent)]
    Word(#[from] WordError),
}

/// |E(λ, h)| below this multiple of h is a hard resonance error.
pub const RESONANCE_TOL: f64 = 1e-8;
/// Between this band and the hard cut the solve proceeds with a warning.
pub const NEAR_RESONANCE_TOL: f64 = 1e-6;

/// Splitting scheme coefficients a_1..a_r (rotation sub-steps) and
/// b_1..b_r (perturbation sub-steps). Cumulative sums and the total are
/// always recomputed from the stored coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct SplittingScheme {
    pub name: String,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

#[derive(Deserialize)]
struct SchemeJson {
    #[serde(default)]
    name: String,
    a: Vec<f64>,
    b: Vec<f64>,
}

impl SplittingScheme {
    pub fn new(name: &str, a: Vec<f64>, b: Vec<f64>) -> Result<Self, SplitError> {
        if a.is_empty() || a.len() != b.len() {
            return Err(SplitError::InvalidScheme(format!(
                "need equal nonzero stage counts, got {} and {}",
                a.len(),
                b.len()
            )));
        }
        Ok(SplittingScheme {
            name: name.to_string(),
            a,
            b,
        })
    }

    pub fn stages(&self) -> usize {
        self.a.len()
    }

    /// Cumulative rotation times c_j = a_1 + ⋯ + a_j.
    pub fn c(&self) -> Vec<f64> {
        let mut acc = 0.0;
        self.a
            .iter()
            .map(|x| {
                acc += x;
                acc
            })
            .collect()
    }

    /// Total rotation coefficient a = Σ a_j.
    pub fn a_total(&self) -> f64 {
        self.a.iter().sum()
    }

    pub fn lie_trotter() -> Self {
        SplittingScheme::new("lie-trotter", vec![1.0], vec![1.0]).unwrap()
    }

    /// Strang splitting written with a trailing zero perturbation stage.
    pub fn strang() -> Self {
        SplittingScheme::new("strang", vec![0.5, 0.5], vec![1.0, 0.0]).unwrap()
    }

    pub fn from_json_str(s: &str) -> Result<Self, SplitError> {
        let raw: SchemeJson =
            serde_json::from_str(s).map_err(|e| SplitError::InvalidScheme(e.to_string()))?;
        SplittingScheme::new(&raw.name, raw.a, raw.b)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({"name": self.name, "a": self.a, "b": self.b})
    }
}

/// Taylor coefficients of the perturbation flow: τ_w(t) = tⁿ/n!.
pub fn taylor_coeffs(t: f64, alphabet: &Alphabet, cap: usize) -> WMap<Complex64> {
    let mut out = WMap::zero(alphabet.clone(), cap);
    for n in 0..=cap {
        let mut v = 1.0;
        for k in 1..=n {
            v *= t / k as f64;
        }
        for w in words_of_len(alphabet.len(), n) {
            out.set_coeff(&w, Complex64::new(v, 0.0));
        }
    }
    out
}

/// Closed-form integrator coefficients (h a ω, α̃(h)):
/// α̃_{k₁⋯kₙ}(h) = hⁿ Σ_{j₁≤⋯≤jₙ} (b_{j₁}⋯b_{jₙ}/σ) e^{i(c_{j₁}k₁+⋯+c_{jₙ}kₙ)·ωh}
/// where σ is the product of the factorials of the run lengths of equal
/// consecutive stage indices in (j₁,…,jₙ).
pub fn splitting_coeffs(
    scheme: &SplittingScheme,
    omega: &Frequencies,
    h: f64,
    alphabet: &Alphabet,
    cap: usize,
) -> Result<ExtCoeffs, ExtError> {
    let d = alphabet.mode_dim().ok_or(ExtError::NotModeAlphabet)?;
    if d != omega.d() {
        return Err(ExtError::DimensionMismatch(format!(
            "omega has {} entries, modes have dimension {d}",
            omega.d()
        )));
    }
    let c = scheme.c();
    // per-letter frequency k·ω
    let freqs: Vec<f64> = (0..alphabet.len())
        .map(|l| {
            alphabet
                .mode(l as u8)
                .expect("mode alphabet")
                .iter()
                .zip(omega.as_slice())
                .map(|(&k, &w)| k as f64 * w)
                .sum()
        })
        .collect();

    let mut words = WMap::zero(alphabet.clone(), cap);
    words.set_coeff(&[], Complex64::new(1.0, 0.0));
    for n in 1..=cap {
        let hn = h.powi(n as i32);
        for w in words_of_len(alphabet.len(), n) {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..scheme.stages() {
                stage_sum(&scheme.b, &c, &freqs, &w, 0, j, 1, 1.0, 0.0, h, &mut acc);
            }
            words.set_coeff(&w, acc * hn);
        }
    }
    let shift: Vec<Complex64> = omega
        .as_slice()
        .iter()
        .map(|&wj| Complex64::new(h * scheme.a_total() * wj, 0.0))
        .collect();
    ExtCoeffs::new(shift, words)
}

/// Accumulates b_{j₁}⋯b_{jₙ}/σ · e^{iφh} over the nondecreasing stage
/// assignments that put letter `pos` in `stage` as the `run`-th member of
/// its run; dividing by the running length builds σ as Π (run length)!.
#[allow(clippy::too_many_arguments)]
fn stage_sum(
    b: &[f64],
    c: &[f64],
    freqs: &[f64],
    w: &[u8],
    pos: usize,
    stage: usize,
    run: usize,
    coeff: f64,
    phase: f64,
    h: f64,
    acc: &mut Complex64,
) {
    let coeff = coeff * b[stage] / run as f64;
    if coeff == 0.0 {
        return;
    }
    let phase = phase + c[stage] * freqs[w[pos] as usize];
    if pos + 1 == w.len() {
        *acc += Complex64::from_polar(1.0, phase * h) * coeff;
        return;
    }
    stage_sum(b, c, freqs, w, pos + 1, stage, run + 1, coeff, phase, h, acc);
    for j in stage + 1..b.len() {
        stage_sum(b, c, freqs, w, pos + 1, j, 1, coeff, phase, h, acc);
    }
}

/// The same coefficients by direct ★-composition of the stage flows:
/// (a₁hω, 1 1) ★ (0, τ(b₁h)) ★ ⋯ ★ (a_r hω, 1 1) ★ (0, τ(b_r h)).
/// Serves as the independent oracle for `splitting_coeffs`.
pub fn splitting_coeffs_by_composition(
    scheme: &SplittingScheme,
    omega: &Frequencies,
    h: f64,
    alphabet: &Alphabet,
    cap: usize,
) -> Result<ExtCoeffs, ExtError> {
    let d = alphabet.mode_dim().ok_or(ExtError::NotModeAlphabet)?;
    let mut acc = ExtCoeffs::unit(alphabet.clone(), cap)?;
    let tol = 1e-9;
    for (aj, bj) in scheme.a.iter().zip(&scheme.b) {
        let rotation = ExtCoeffs::new(
            omega
                .as_slice()
                .iter()
                .map(|&wj| Complex64::new(aj * h * wj, 0.0))
                .collect::<Vec<_>>(),
            WMap::unit(alphabet.clone(), cap),
        )?;
        acc = bigstar(&acc, &rotation, tol)?;
        let perturbation = ExtCoeffs::new(
            vec![Complex64::new(0.0, 0.0); d],
            taylor_coeffs(bj * h, alphabet, cap),
        )?;
        acc = bigstar(&acc, &perturbation, tol)?;
    }
    Ok(acc)
}

/// A detected numerical resonance: a multiset of letters whose summed
/// frequency satisfies (k₁+⋯+k_r)·ωh = 2πj within `tol`, j ≠ 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Resonance {
    pub letters: Vec<Vec<i64>>,
    pub j: i64,
}

/// Enumerates all letter multisets of size ≤ n over the alphabet whose
/// phase (Σ k)·ωh is within `tol` of a nonzero multiple of 2π. The mode
/// sum is computed in integer arithmetic, so opposite letters cancel
/// exactly and are excluded by j ≠ 0.
pub fn detect_resonances(
    omega: &Frequencies,
    h: f64,
    n: usize,
    alphabet: &Alphabet,
    tol: f64,
) -> Result<Vec<Resonance>, ExtError> {
    let d = alphabet.mode_dim().ok_or(ExtError::NotModeAlphabet)?;
    let letters: Vec<Vec<i64>> = (0..alphabet.len())
        .map(|l| alphabet.mode(l as u8).expect("mode alphabet").to_vec())
        .collect();

    #[allow(clippy::too_many_arguments)]
    fn search(
        letters: &[Vec<i64>],
        omega: &[f64],
        h: f64,
        n: usize,
        tol: f64,
        start: usize,
        chosen: &mut Vec<usize>,
        d: usize,
        out: &mut Vec<Resonance>,
    ) {
        if !chosen.is_empty() {
            let mut ksum = vec![0i64; d];
            for &i in chosen.iter() {
                for (s, k) in ksum.iter_mut().zip(&letters[i]) {
                    *s += k;
                }
            }
            let phase: f64 = ksum
                .iter()
                .zip(omega)
                .map(|(&k, &w)| k as f64 * w)
                .sum::<f64>()
                * h;
            let j = (phase / (2.0 * std::f64::consts::PI)).round() as i64;
            if j != 0 && (phase - 2.0 * std::f64::consts::PI * j as f64).abs() < tol {
                out.push(Resonance {
                    letters: chosen.iter().map(|&i| letters[i].clone()).collect(),
                    j,
                });
            }
        }
        if chosen.len() == n {
            return;
        }
        for i in start..letters.len() {
            chosen.push(i);
            search(letters, omega, h, n, tol, i, chosen, d, out);
            chosen.pop();
        }
    }

    let mut out = Vec::new();
    let mut chosen = Vec::new();
    search(
        &letters,
        omega.as_slice(),
        h,
        n,
        tol,
        0,
        &mut chosen,
        d,
        &mut out,
    );
    Ok(out)
}

/// Divided-difference kernel E(λ, h) = (e^{iλh} − 1)/(iλ), the h-integral
/// of e^{iλt}; switches to the Taylor form when |λh| is small so the
/// removable singularity at λ = 0 does not amplify rounding.
pub fn phase_integral(lambda: f64, h: f64) -> Complex64 {
    let z = lambda * h;
    if z.abs() < 1e-6 {
        let iz = Complex64::new(0.0, z);
        let series = Complex64::new(1.0, 0.0) + iz / 2.0 + iz * iz / 6.0 + iz * iz * iz / 24.0;
        series * h
    } else {
        (Complex64::from_polar(1.0, z) - 1.0) / Complex64::new(0.0, lambda)
    }
}

/// Flow coefficients of the autonomous modified field W̄_{(ω,β)}: solves
/// A(0) = 1 1, A'(t) = A(t) ⋆ (Ξ_{tω} β) in closed form (entries are
/// exponential polynomials in t) and returns (hω, A(h)).
pub fn exp_modified(
    omega: &Frequencies,
    beta: &WMap<Complex64>,
    h: f64,
    cap: usize,
) -> Result<ExtCoeffs, SplitError> {
    if !is_lie_element(beta, beta.cap().min(cap), 1e-8) {
        return Err(SplitError::NotLieElement);
    }
    let alphabet = beta.alphabet().clone();
    let polys = exp_modified_polys(omega, beta, &alphabet, cap);
    let mut words = WMap::zero(alphabet.clone(), cap);
    for (w, p) in &polys {
        words.set_coeff(w, p.eval(h));
    }
    let shift = omega
        .as_slice()
        .iter()
        .map(|&wj| Complex64::new(wj * h, 0.0))
        .collect();
    Ok(ExtCoeffs::new(shift, words)?)
}

/// Symbolic exponential-polynomial solution A_w(t) of the modified-flow
/// recursion: A'_w(t) = Σ_j A_{w[..j]}(t) e^{iλ(w[j..])t} β_{w[j..]},
/// integrated word by word in increasing length. Frequencies are exact
/// rationals built from the integer mode sums, so confluent cancellations
/// take the polynomial branch of the integrator.
fn exp_modified_polys(
    omega: &Frequencies,
    beta: &WMap<Complex64>,
    alphabet: &Alphabet,
    cap: usize,
) -> BTreeMap<Word, ExpPoly> {
    let omega_rat: Vec<Rat> = omega.as_slice().iter().map(|&x| rat_from_f64(x)).collect();
    let suffix_freq = |w: &[u8]| -> Rat {
        let ksum = alphabet.mode_sum(w).expect("mode alphabet");
        let mut f = Rat::zero();
        for (k, wr) in ksum.iter().zip(&omega_rat) {
            f += Rat::from_integer((*k).into()) * wr;
        }
        f
    };
    let mut polys: BTreeMap<Word, ExpPoly> = BTreeMap::new();
    polys.insert(Vec::new(), ExpPoly::one());
    for n in 1..=cap {
        for w in words_of_len(alphabet.len(), n) {
            let mut integrand = ExpPoly::zero();
            for j in 0..n {
                let suffix = &w[j..];
                let bcoeff = *beta.coeff(suffix);
                if bcoeff.norm() == 0.0 {
                    continue;
                }
                let mut factor = ExpPoly::zero();
                factor.add_term(suffix_freq(suffix), 0, bcoeff);
                integrand = integrand.add(&polys[&w[..j].to_vec()].mul(&factor));
            }
            polys.insert(w, integrand.integrate());
        }
    }
    polys
}

/// The truncated modified system of a splitting integrator: a Lie element
/// β̃ supported on words of ≤ n letters whose flow coefficients match the
/// integrator's α̃(h) through n letters.
#[derive(Debug, Clone)]
pub struct ModifiedSystem {
    pub omega: Frequencies,
    pub h: f64,
    pub grade: usize,
    pub beta: WMap<Complex64>,
    pub warnings: Vec<String>,
}

/// Solves for the modified system grade by grade: at each word the new
/// unknown enters linearly through E(λ_w, h), so
/// β̃_w = (α̃_w(h) − lower-grade flow contribution)/E(λ_w, h).
/// Errors out when E vanishes, which happens exactly at the numerical
/// resonances λ_w h ∈ 2πℤ∖{0}.
pub fn modified_system(
    scheme: &SplittingScheme,
    omega: &Frequencies,
    h: f64,
    n: usize,
    alphabet: &Alphabet,
) -> Result<ModifiedSystem, SplitError> {
    let target = splitting_coeffs(scheme, omega, h, alphabet, n)?;
    let mut warnings = Vec::new();
    let mut beta = WMap::zero(alphabet.clone(), n);
    for grade in 1..=n {
        let flow = exp_modified(omega, &beta, h, n)?;
        for w in words_of_len(alphabet.len(), grade) {
            let ksum = alphabet.mode_sum(&w)?;
            let lambda: f64 = ksum
                .iter()
                .zip(omega.as_slice())
                .map(|(&k, &wj)| k as f64 * wj)
                .sum();
            let e = phase_integral(lambda, h);
            if e.norm() < RESONANCE_TOL * h.abs() {
                let j = (lambda * h / (2.0 * std::f64::consts::PI)).round() as i64;
                return Err(SplitError::Resonance {
                    letters: w
                        .iter()
                        .map(|&l| alphabet.mode(l).expect("mode alphabet").to_vec())
                        .collect(),
                    j,
                });
            }
            if e.norm() < NEAR_RESONANCE_TOL * h.abs() {
                warnings.push(format!(
                    "near-resonant divided difference at word {:?}: |E| = {:.3e}",
                    alphabet.word_label(&w),
                    e.norm()
                ));
            }
            let defect = target.words.coeff(&w) - flow.words.coeff(&w);
            beta.set_coeff(&w, defect / e);
        }
    }
    Ok(ModifiedSystem {
        omega: omega.clone(),
        h,
        grade: n,
        beta,
        warnings,
    })
}

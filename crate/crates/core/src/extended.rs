//! Extended word series for perturbed integrable problems.
//!
//! The phase space splits as x = (y, θ) with d rotating angles θ driven by
//! constant frequencies ω and a perturbation whose Fourier modes are
//! polynomial in y: f_k(y, θ) = e^{ik·θ} f̂_k(y). An extended coefficient
//! pair (v, δ) represents the map x ↦ (0; v) + Σ_w δ_w f_w(x); the ★
//! product composes such maps, with the phase operator Ξ transporting word
//! coefficients across a rigid rotation of the angles.
//!
//! Every word-basis function here is a single Fourier mode: its mode vector
//! is the sum of its letters' modes and its amplitude is polynomial in y.

use crate::jet::{poly_eval_jet, Jet};
use crate::poly::Poly;
use crate::vectorfields::{FieldError, PolyMap};
use crate::words::{
    convolution, is_group_element, is_lie_element, iterated_integral_coeffs, lie_bracket,
    words_of_len, Alphabet, LambdaSpec, WMap, Word, WordError,
};
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExtError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("left ★ operand is not a group element")]
    NotGroupElement,
    #[error("bracket operand is not a Lie element")]
    NotLieElement,
    #[error("alphabet letters must be integer mode vectors")]
    NotModeAlphabet,
    #[error("invalid perturbed problem: {0}")]
    InvalidProblem(String),
    #[error(transparent)]
    Word(#[from] WordError),
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Strictly positive rotation frequencies ω ∈ ℝ^d.
#[derive(Debug, Clone, PartialEq)]
pub struct Frequencies(Vec<f64>);

impl Frequencies {
    pub fn new(omega: Vec<f64>) -> Result<Self, ExtError> {
        if omega.is_empty() || omega.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
            return Err(ExtError::InvalidProblem(
                "frequencies must be finite and strictly positive".into(),
            ));
        }
        Ok(Frequencies(omega))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn d(&self) -> usize {
        self.0.len()
    }
}

/// Extended word-series coefficients: an angle shift v ∈ ℂ^d plus a word
/// coefficient map over a mode alphabet of matching dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtCoeffs {
    pub shift: Vec<Complex64>,
    pub words: WMap<Complex64>,
}

impl ExtCoeffs {
    pub fn new(shift: Vec<Complex64>, words: WMap<Complex64>) -> Result<Self, ExtError> {
        let d = words
            .alphabet()
            .mode_dim()
            .ok_or(ExtError::NotModeAlphabet)?;
        if shift.len() != d {
            return Err(ExtError::DimensionMismatch(format!(
                "shift has {} entries, modes have dimension {d}",
                shift.len()
            )));
        }
        Ok(ExtCoeffs { shift, words })
    }

    /// The ★ unit (0, 1 1).
    pub fn unit(alphabet: Alphabet, cap: usize) -> Result<Self, ExtError> {
        let d = alphabet.mode_dim().ok_or(ExtError::NotModeAlphabet)?;
        Ok(ExtCoeffs {
            shift: vec![Complex64::new(0.0, 0.0); d],
            words: WMap::unit(alphabet, cap),
        })
    }

    pub fn d(&self) -> usize {
        self.shift.len()
    }

    pub fn is_group(&self, tol: f64) -> bool {
        is_group_element(&self.words, self.words.cap(), tol)
    }

    /// Largest coefficient difference, shift entries included.
    pub fn max_abs_diff(&self, other: &ExtCoeffs) -> f64 {
        let mut m = self.words.max_abs_diff(&other.words);
        for (a, b) in self.shift.iter().zip(&other.shift) {
            m = m.max((a - b).norm());
        }
        m
    }
}

fn mode_dot_v(k: &[i64], v: &[Complex64]) -> Complex64 {
    k.iter().zip(v).map(|(&ki, vi)| vi * ki as f64).sum()
}

/// Phase operator: (Ξ_v δ)_w = e^{i(k₁+⋯+kₙ)·v} δ_w, identity at ∅.
pub fn xi_big(v: &[Complex64], delta: &WMap<Complex64>) -> Result<WMap<Complex64>, ExtError> {
    let alphabet = delta.alphabet().clone();
    if alphabet.mode_dim() != Some(v.len()) {
        return Err(ExtError::DimensionMismatch(format!(
            "shift has {} entries for mode dimension {:?}",
            v.len(),
            alphabet.mode_dim()
        )));
    }
    Ok(delta.map(|w, c| {
        let ksum = alphabet.mode_sum(w).expect("mode alphabet");
        let z = Complex64::new(0.0, 1.0) * mode_dot_v(&ksum, v);
        c * z.exp()
    }))
}

/// Infinitesimal phase operator: (ξ_v δ)_w = i(k₁+⋯+kₙ)·v δ_w, zero at ∅.
pub fn xi_small(v: &[Complex64], delta: &WMap<Complex64>) -> Result<WMap<Complex64>, ExtError> {
    let alphabet = delta.alphabet().clone();
    if alphabet.mode_dim() != Some(v.len()) {
        return Err(ExtError::DimensionMismatch(format!(
            "shift has {} entries for mode dimension {:?}",
            v.len(),
            alphabet.mode_dim()
        )));
    }
    Ok(delta.map(|w, c| {
        if w.is_empty() {
            return Complex64::new(0.0, 0.0);
        }
        let ksum = alphabet.mode_sum(w).expect("mode alphabet");
        c * Complex64::new(0.0, 1.0) * mode_dot_v(&ksum, v)
    }))
}

/// Composition product on extended coefficients:
/// (u, γ) ★ (v, δ) = (γ_∅ v + δ_∅ u, γ ⋆ Ξ_u δ).
/// The left operand is the inner map and must be a group element (within
/// `tol` on the shuffle relations).
pub fn bigstar(lhs: &ExtCoeffs, rhs: &ExtCoeffs, tol: f64) -> Result<ExtCoeffs, ExtError> {
    if !lhs.is_group(tol) {
        return Err(ExtError::NotGroupElement);
    }
    let gamma_empty = *lhs.words.empty_coeff();
    let delta_empty = *rhs.words.empty_coeff();
    let shift: Vec<Complex64> = lhs
        .shift
        .iter()
        .zip(&rhs.shift)
        .map(|(u, v)| gamma_empty * v + delta_empty * u)
        .collect();
    let words = convolution(&lhs.words, &xi_big(&lhs.shift, &rhs.words)?)?;
    ExtCoeffs::new(shift, words)
}

/// Lie bracket on extended coefficients:
/// [(v, δ), (u, η)] = (0, ξ_v η − ξ_u δ + δ⋆η − η⋆δ).
pub fn ext_bracket(a: &ExtCoeffs, b: &ExtCoeffs, tol: f64) -> Result<ExtCoeffs, ExtError> {
    if !is_lie_element(&a.words, a.words.cap(), tol)
        || !is_lie_element(&b.words, b.words.cap(), tol)
    {
        return Err(ExtError::NotLieElement);
    }
    let term1 = xi_small(&a.shift, &b.words)?;
    let term2 = xi_small(&b.shift, &a.words)?;
    let comm = lie_bracket(&a.words, &b.words)?;
    let words = term1.sub(&term2)?.add(&comm)?;
    ExtCoeffs::new(vec![Complex64::new(0.0, 0.0); a.d()], words)
}

/// Coefficients (tω, α(t)) of the exact flow of the perturbed problem: the
/// iterated integrals of the oscillatory forcings λ_k(t) = e^{i(k·ω)t}.
pub fn flow_coeffs(
    omega: &Frequencies,
    t: f64,
    alphabet: &Alphabet,
    cap: usize,
) -> Result<ExtCoeffs, ExtError> {
    let spec = LambdaSpec::oscillatory(alphabet, omega.as_slice())?;
    let words = iterated_integral_coeffs(&spec, alphabet, t, cap);
    let shift = omega
        .as_slice()
        .iter()
        .map(|&w| Complex64::new(w * t, 0.0))
        .collect();
    ExtCoeffs::new(shift, words)
}

/// One Fourier mode of the perturbation: f_k(y, θ) = e^{ik·θ} f̂_k(y),
/// with f̂_k polynomial in y and valued in the full (y, θ) tangent space.
#[derive(Debug, Clone, PartialEq)]
pub struct Mode {
    pub k: Vec<i64>,
    pub fhat: PolyMap<Complex64>,
}

/// A perturbed integrable problem: d angles with frequencies ω and a
/// trigonometric-polynomial perturbation given by its mode list.
#[derive(Debug, Clone)]
pub struct PerturbedProblem {
    d: usize,
    dim: usize,
    omega: Frequencies,
    modes: Vec<Mode>,
}

impl PerturbedProblem {
    pub fn new(omega: Frequencies, modes: Vec<Mode>) -> Result<Self, ExtError> {
        let d = omega.d();
        let dim = modes
            .first()
            .map(|m| m.fhat.len())
            .ok_or_else(|| ExtError::InvalidProblem("no modes".into()))?;
        if dim < d {
            return Err(ExtError::InvalidProblem(format!(
                "problem dimension {dim} smaller than angle count {d}"
            )));
        }
        for m in &modes {
            if m.k.len() != d {
                return Err(ExtError::InvalidProblem(format!(
                    "mode vector {:?} does not have dimension {d}",
                    m.k
                )));
            }
            if m.fhat.len() != dim || m.fhat.dim_in() != dim - d {
                return Err(ExtError::InvalidProblem(format!(
                    "mode {:?}: amplitude must map {} y-variables to {dim} components",
                    m.k,
                    dim - d
                )));
            }
        }
        // distinct modes, closed under negation with conjugate amplitudes
        for (i, m) in modes.iter().enumerate() {
            if modes.iter().skip(i + 1).any(|o| o.k == m.k) {
                return Err(ExtError::InvalidProblem(format!("duplicate mode {:?}", m.k)));
            }
            let neg: Vec<i64> = m.k.iter().map(|x| -x).collect();
            let partner = modes.iter().find(|o| o.k == neg).ok_or_else(|| {
                ExtError::InvalidProblem(format!("mode {:?} lacks its conjugate partner", m.k))
            })?;
            let conj = m.fhat.map_coeffs(|c| c.conj());
            let diff: f64 = partner
                .fhat
                .comps()
                .iter()
                .zip(conj.comps())
                .map(|(a, b)| a.sub(b).terms().map(|(_, c)| c.norm()).sum::<f64>())
                .sum();
            if diff > 1e-12 {
                return Err(ExtError::InvalidProblem(format!(
                    "mode {:?} is not the conjugate of mode {:?}",
                    neg, m.k
                )));
            }
        }
        Ok(PerturbedProblem {
            d,
            dim,
            omega,
            modes,
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn omega(&self) -> &Frequencies {
        &self.omega
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    /// The mode set as a word alphabet, in listed order.
    pub fn alphabet(&self) -> Alphabet {
        Alphabet::modes(self.modes.iter().map(|m| m.k.clone()).collect())
    }

    /// The letter field f_k as a single-mode function.
    pub fn mode_field(&self, letter: u8) -> ModeFn {
        let m = &self.modes[letter as usize];
        ModeFn {
            k: m.k.clone(),
            comps: m.fhat.clone(),
        }
    }

    /// Perturbation value Σ_k e^{ik·θ} f̂_k(y) at a real point, which is
    /// real by the conjugate-mode pairing.
    pub fn eval_perturbation(&self, x: &[f64]) -> Vec<f64> {
        let xc: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        let mut acc = vec![Complex64::new(0.0, 0.0); self.dim];
        for letter in 0..self.modes.len() {
            let val = self.mode_field(letter as u8).eval(self.d, &xc);
            for (a, v) in acc.iter_mut().zip(val) {
                *a += v;
            }
        }
        acc.iter().map(|c| c.re).collect()
    }

    /// Full right-hand side (0; ω) + perturbation at a real point.
    pub fn full_field(&self, x: &[f64]) -> Vec<f64> {
        let mut f = self.eval_perturbation(x);
        for (j, w) in self.omega.as_slice().iter().enumerate() {
            f[self.dim - self.d + j] += w;
        }
        f
    }

    /// Parses {"d": int, "omega": [...], "modes": [{"k": [...], "fhat": ...}]}.
    pub fn from_json_str(s: &str) -> Result<Self, ExtError> {
        let v: serde_json::Value =
            serde_json::from_str(s).map_err(|e| ExtError::InvalidProblem(e.to_string()))?;
        let d = v["d"]
            .as_u64()
            .ok_or_else(|| ExtError::InvalidProblem("missing d".into()))? as usize;
        let omega_raw = v["omega"]
            .as_array()
            .ok_or_else(|| ExtError::InvalidProblem("missing omega".into()))?;
        let omega: Vec<f64> = omega_raw
            .iter()
            .map(|x| {
                x.as_f64()
                    .ok_or_else(|| ExtError::InvalidProblem(format!("bad frequency {x}")))
            })
            .collect::<Result<_, _>>()?;
        if omega.len() != d {
            return Err(ExtError::InvalidProblem(format!(
                "omega has {} entries for d = {d}",
                omega.len()
            )));
        }
        let modes_raw = v["modes"]
            .as_array()
            .ok_or_else(|| ExtError::InvalidProblem("missing modes".into()))?;
        let modes = modes_raw
            .iter()
            .map(|m| {
                let k: Vec<i64> = m["k"]
                    .as_array()
                    .ok_or_else(|| ExtError::InvalidProblem("mode missing k".into()))?
                    .iter()
                    .map(|x| {
                        x.as_i64()
                            .ok_or_else(|| ExtError::InvalidProblem(format!("bad mode entry {x}")))
                    })
                    .collect::<Result<_, _>>()?;
                let fhat = crate::vectorfields::polymap_from_json(&m["fhat"])?;
                Ok(Mode { k, fhat })
            })
            .collect::<Result<Vec<_>, ExtError>>()?;
        PerturbedProblem::new(Frequencies::new(omega)?, modes)
    }
}

/// A single-mode function e^{ik·θ} g(y) valued in ℂ^dim.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeFn {
    pub k: Vec<i64>,
    pub comps: PolyMap<Complex64>,
}

impl ModeFn {
    /// Evaluates at x = (y, θ) with `d` trailing angle coordinates.
    pub fn eval(&self, d: usize, x: &[Complex64]) -> Vec<Complex64> {
        let dy = x.len() - d;
        let y = &x[..dy];
        let theta = &x[dy..];
        let phase = (Complex64::new(0.0, 1.0) * mode_dot_v(&self.k, theta)).exp();
        self.comps.eval(y).into_iter().map(|v| v * phase).collect()
    }

    /// Evaluates at a jet point; the phase of a jet-valued angle splits
    /// into the base phase times a finite exponential series in ε.
    pub fn eval_jet(&self, d: usize, x: &[Jet<Complex64>]) -> Vec<Jet<Complex64>> {
        let ord = x[0].ord();
        let dy = x.len() - d;
        let y = &x[..dy];
        let theta = &x[dy..];
        let mut z = Jet::zero(ord);
        for (ki, th) in self.k.iter().zip(theta) {
            z = z.add(&th.scale(&Complex64::new(0.0, *ki as f64)));
        }
        let phase = jet_exp(&z);
        self.comps
            .comps()
            .iter()
            .map(|c| poly_eval_jet(c, y).mul(&phase))
            .collect()
    }
}

/// exp of a complex jet: e^{z₀} · Σ_m (z − z₀)^m / m! truncated at the
/// jet order, where z₀ is the constant part.
fn jet_exp(z: &Jet<Complex64>) -> Jet<Complex64> {
    let ord = z.ord();
    let z0 = *z.coeff(0);
    let rest = z.add(&Jet::constant(ord, -z0));
    let mut acc = Jet::constant(ord, Complex64::new(1.0, 0.0));
    let mut term = Jet::constant(ord, Complex64::new(1.0, 0.0));
    for m in 1..=ord {
        term = term.mul(&rest).scale(&Complex64::new(1.0 / m as f64, 0.0));
        acc = acc.add(&term);
    }
    acc.scale(&z0.exp())
}

/// Word-basis function over the problem's modes: a single-mode function
/// whose mode vector is the letter sum, built by the Jacobian recursion
/// restricted to the (y, θ) block structure.
pub fn ext_word_basis(problem: &PerturbedProblem, w: &[u8]) -> Result<ModeFn, ExtError> {
    if w.is_empty() {
        return Err(ExtError::InvalidProblem(
            "empty word has no basis function".into(),
        ));
    }
    let mut g = problem.mode_field(w[w.len() - 1]);
    for &l in w[..w.len() - 1].iter().rev() {
        g = mode_step(problem, &g, &problem.mode_field(l));
    }
    Ok(g)
}

/// One Jacobian step f_{aw} = ∂f_w · f_a for single-mode functions: the
/// mode vectors add and the amplitude picks up ∂_y G · E_y + i(k_G·E_θ) G.
fn mode_step(problem: &PerturbedProblem, g: &ModeFn, e: &ModeFn) -> ModeFn {
    let d = problem.d();
    let dy = problem.dim() - d;
    let e_y = &e.comps.comps()[..dy];
    let e_theta = &e.comps.comps()[dy..];
    let mut phase_factor = Poly::zero(dy);
    for (kl, eth) in g.k.iter().zip(e_theta) {
        phase_factor = phase_factor.add(&eth.scale(&Complex64::new(0.0, *kl as f64)));
    }
    let comps: Vec<Poly<Complex64>> = g
        .comps
        .comps()
        .iter()
        .map(|gi| {
            let mut acc = Poly::zero(dy);
            for (j, ey) in e_y.iter().enumerate() {
                acc = acc.add(&gi.partial(j).mul(ey));
            }
            acc.add(&gi.mul(&phase_factor))
        })
        .collect();
    let k: Vec<i64> = g.k.iter().zip(&e.k).map(|(a, b)| a + b).collect();
    ModeFn {
        k,
        comps: PolyMap::new(dy, comps).expect("dimensions preserved"),
    }
}

/// Extended word series value W̄_{(v,δ)}(x) = (0; v) + Σ_w δ_w f_w(x),
/// truncated at word length n; the ∅ term contributes δ_∅ · x.
pub fn ext_eval(
    coeffs: &ExtCoeffs,
    problem: &PerturbedProblem,
    x: &[Complex64],
    n: usize,
) -> Result<Vec<Complex64>, ExtError> {
    Ok(ExtEvaluator::new(coeffs.clone(), problem, n)?.eval(x))
}

/// Same evaluation at a real point, taking the real part (exact for real
/// problems, where the conjugate-mode terms pair up).
pub fn ext_eval_real(
    coeffs: &ExtCoeffs,
    problem: &PerturbedProblem,
    x: &[f64],
    n: usize,
) -> Result<Vec<f64>, ExtError> {
    let xc: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    Ok(ext_eval(coeffs, problem, &xc, n)?
        .into_iter()
        .map(|c| c.re)
        .collect())
}

/// Jet evaluation grading by perturbation order: the length-g words enter
/// shifted by ε^g, so composition identities can be compared per grade.
pub fn ext_eval_jet(
    coeffs: &ExtCoeffs,
    problem: &PerturbedProblem,
    x: &[Jet<Complex64>],
    n: usize,
) -> Result<Vec<Jet<Complex64>>, ExtError> {
    Ok(ExtEvaluator::new(coeffs.clone(), problem, n)?.eval_jet(x))
}

/// Prebuilt evaluator: word-basis functions are constructed once so the
/// series can be evaluated repeatedly (e.g. inside an integrator loop).
pub struct ExtEvaluator {
    coeffs: ExtCoeffs,
    d: usize,
    basis: Vec<(Word, Complex64, ModeFn)>,
}

impl ExtEvaluator {
    pub fn new(coeffs: ExtCoeffs, problem: &PerturbedProblem, n: usize) -> Result<Self, ExtError> {
        if coeffs.words.alphabet() != &problem.alphabet() {
            return Err(ExtError::InvalidProblem(
                "coefficient alphabet does not match the problem modes".into(),
            ));
        }
        let n = n.min(coeffs.words.cap());
        let mut basis = Vec::new();
        for g in 1..=n {
            for w in words_of_len(problem.modes().len(), g) {
                let c = *coeffs.words.coeff(&w);
                if c.norm() == 0.0 {
                    continue;
                }
                let f = ext_word_basis(problem, &w)?;
                basis.push((w, c, f));
            }
        }
        Ok(ExtEvaluator {
            coeffs,
            d: problem.d(),
            basis,
        })
    }

    pub fn eval(&self, x: &[Complex64]) -> Vec<Complex64> {
        let dy = x.len() - self.d;
        let empty = *self.coeffs.words.empty_coeff();
        let mut acc: Vec<Complex64> = x.iter().map(|v| v * empty).collect();
        for (j, v) in self.coeffs.shift.iter().enumerate() {
            acc[dy + j] += v;
        }
        for (_, c, f) in &self.basis {
            for (a, v) in acc.iter_mut().zip(f.eval(self.d, x)) {
                *a += c * v;
            }
        }
        acc
    }

    pub fn eval_real(&self, x: &[f64]) -> Vec<f64> {
        let xc: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.eval(&xc).into_iter().map(|c| c.re).collect()
    }

    pub fn eval_jet(&self, x: &[Jet<Complex64>]) -> Vec<Jet<Complex64>> {
        let dy = x.len() - self.d;
        let ord = x[0].ord();
        let empty = *self.coeffs.words.empty_coeff();
        let mut acc: Vec<Jet<Complex64>> = x.iter().map(|v| v.scale(&empty)).collect();
        for (j, v) in self.coeffs.shift.iter().enumerate() {
            acc[dy + j] = acc[dy + j].add(&Jet::constant(ord, *v));
        }
        for (w, c, f) in &self.basis {
            for (a, v) in acc.iter_mut().zip(f.eval_jet(self.d, x)) {
                *a = a.add(&v.scale(c).shift(w.len()));
            }
        }
        acc
    }
}

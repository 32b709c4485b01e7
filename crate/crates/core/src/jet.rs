//! Truncated polynomials in a formal grading parameter ("jets").
//!
//! Composition identities for B-series and word series only hold after
//! consistent truncation: both sides must be expanded in a common small
//! parameter (the step h, or the perturbation strength) and compared grade
//! by grade. Jets make that comparison exact: a jet is a polynomial in the
//! parameter truncated at a fixed order, and evaluating a series at a jet
//! point propagates the grading through all the nonlinearities.

use crate::butcher::BMap;
use crate::scalar::{Rat, Scalar};
use crate::trees::enumerate_trees;
use crate::vectorfields::{FieldError, PolyMap};
use crate::words::{words_of_len, WMap};

/// Polynomial in the grading parameter, truncated at a fixed order:
/// coefficient k multiplies ε^k. All jets in one computation share `ord`.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet<S> {
    coeffs: Vec<S>,
}

impl<S: Scalar> Jet<S> {
    pub fn zero(ord: usize) -> Self {
        Jet {
            coeffs: vec![S::zero(); ord + 1],
        }
    }

    pub fn constant(ord: usize, c: S) -> Self {
        let mut j = Self::zero(ord);
        j.coeffs[0] = c;
        j
    }

    pub fn from_coeffs(ord: usize, coeffs: &[S]) -> Self {
        let mut j = Self::zero(ord);
        for (k, c) in coeffs.iter().enumerate().take(ord + 1) {
            j.coeffs[k] = c.clone();
        }
        j
    }

    pub fn ord(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, k: usize) -> &S {
        &self.coeffs[k]
    }

    pub fn coeffs(&self) -> &[S] {
        &self.coeffs
    }

    pub fn add(&self, other: &Jet<S>) -> Jet<S> {
        assert_eq!(self.coeffs.len(), other.coeffs.len());
        Jet {
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a.clone() + b.clone())
                .collect(),
        }
    }

    pub fn mul(&self, other: &Jet<S>) -> Jet<S> {
        assert_eq!(self.coeffs.len(), other.coeffs.len());
        let ord = self.ord();
        let mut out = Jet::<S>::zero(ord);
        for i in 0..=ord {
            if self.coeffs[i].is_zero() {
                continue;
            }
            for j in 0..=ord - i {
                let add = self.coeffs[i].clone() * other.coeffs[j].clone();
                out.coeffs[i + j] = out.coeffs[i + j].clone() + add;
            }
        }
        out
    }

    pub fn scale(&self, s: &S) -> Jet<S> {
        Jet {
            coeffs: self.coeffs.iter().map(|c| c.clone() * s.clone()).collect(),
        }
    }

    /// Multiplication by ε^k (drops overflowing orders).
    pub fn shift(&self, k: usize) -> Jet<S> {
        let ord = self.ord();
        let mut out = Jet::zero(ord);
        for i in 0..=ord {
            if i + k <= ord {
                out.coeffs[i + k] = self.coeffs[i].clone();
            }
        }
        out
    }

    pub fn powu(&self, n: u32) -> Jet<S> {
        let mut acc = Jet::constant(self.ord(), S::one());
        for _ in 0..n {
            acc = acc.mul(self);
        }
        acc
    }
}

/// Evaluates a polynomial at a jet-valued point.
pub fn poly_eval_jet<S: Scalar>(
    p: &crate::poly::Poly<S>,
    x: &[Jet<S>],
) -> Jet<S> {
    let ord = x.first().map(|j| j.ord()).unwrap_or(0);
    let mut acc = Jet::zero(ord);
    for (exps, c) in p.terms() {
        let mut term = Jet::constant(ord, c.clone());
        for (xi, &e) in x.iter().zip(exps) {
            if e > 0 {
                term = term.mul(&xi.powu(e));
            }
        }
        acc = acc.add(&term);
    }
    acc
}

/// Evaluates every component of a polynomial field at a jet point.
pub fn polymap_eval_jet<S: Scalar>(f: &PolyMap<S>, x: &[Jet<S>]) -> Vec<Jet<S>> {
    f.comps().iter().map(|c| poly_eval_jet(c, x)).collect()
}

/// Truncated B-series at a jet point, with the step h as the grading
/// parameter: the grade-g tree terms enter shifted by ε^g.
pub fn bseries_eval_jet<S: Scalar>(
    delta: &BMap,
    f: &PolyMap<S>,
    x: &[Jet<S>],
    n: usize,
) -> Result<Vec<Jet<S>>, FieldError> {
    assert!(n <= delta.cap());
    let ord = x[0].ord();
    let mut acc = vec![Jet::zero(ord); x.len()];
    for g in 0..=n {
        for u in enumerate_trees(g) {
            let w = S::from_rat(
                &(Rat::from_integer(u.symmetry().into()).recip() * delta.coeff(&u)),
            );
            if w.is_zero() {
                continue;
            }
            let fu = elementary_differential_jet(f, &u, x)?;
            for (a, v) in acc.iter_mut().zip(fu) {
                *a = a.add(&v.scale(&w).shift(g));
            }
        }
    }
    Ok(acc)
}

fn elementary_differential_jet<S: Scalar>(
    f: &PolyMap<S>,
    u: &crate::trees::RootedTree,
    x: &[Jet<S>],
) -> Result<Vec<Jet<S>>, FieldError> {
    if u.is_empty() {
        return Ok(x.to_vec());
    }
    let dirs: Vec<Vec<Jet<S>>> = u
        .children()
        .iter()
        .map(|c| elementary_differential_jet(f, c, x))
        .collect::<Result<_, _>>()?;
    let out = f
        .comps()
        .iter()
        .map(|comp| {
            // iterated directional derivatives with jet coefficients are
            // evaluated by differentiating symbolically one level at a time
            let mut polys = vec![(comp.clone(), Jet::constant(x[0].ord(), S::one()))];
            for d in &dirs {
                let mut next = Vec::new();
                for (p, jet_coeff) in &polys {
                    for (j, dj) in d.iter().enumerate() {
                        let dp = p.partial(j);
                        if dp.is_zero() {
                            continue;
                        }
                        next.push((dp, jet_coeff.mul(dj)));
                    }
                }
                polys = next;
            }
            let mut acc = Jet::zero(x[0].ord());
            for (p, jet_coeff) in &polys {
                acc = acc.add(&poly_eval_jet(p, x).mul(jet_coeff));
            }
            acc
        })
        .collect();
    Ok(out)
}

/// Truncated word series at a jet point, grading by word length: the
/// length-g terms enter shifted by ε^g. f_∅ contributes the point itself.
pub fn wordseries_eval_jet<S: Scalar>(
    delta: &WMap<S>,
    fields: &[PolyMap<S>],
    x: &[Jet<S>],
    n: usize,
) -> Result<Vec<Jet<S>>, FieldError> {
    assert!(n <= delta.cap());
    let mut acc: Vec<Jet<S>> = x
        .iter()
        .map(|xi| xi.scale(delta.empty_coeff()))
        .collect();
    for g in 1..=n {
        for w in words_of_len(delta.alphabet().len(), g) {
            let c = delta.coeff(&w);
            if c.is_zero() {
                continue;
            }
            let field = crate::vectorfields::word_basis_field(fields, &w)?;
            let vals = polymap_eval_jet(&field, x);
            for (a, v) in acc.iter_mut().zip(vals) {
                *a = a.add(&v.scale(c).shift(g));
            }
        }
    }
    Ok(acc)
}

/// Plain-point wrapper: lifts an ordinary point to constant jets.
pub fn lift_point<S: Scalar>(x: &[S], ord: usize) -> Vec<Jet<S>> {
    x.iter().map(|c| Jet::constant(ord, c.clone())).collect()
}

// re-exported so downstream oracles can evaluate basis functions directly
pub use crate::vectorfields::word_basis_field;

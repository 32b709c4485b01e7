//! Exact polynomial vector fields and the differential-geometric side of
//! the series algebra: elementary differentials indexed by rooted trees,
//! word-basis functions built by the Jacobian recursion, Jacobi and Poisson
//! brackets, Hamiltonian fields, and the Dynkin–Specht–Wever rewriting of
//! Lie-element word series as iterated commutators.
//!
//! Fields are multivariate polynomials rather than black-box callables, so
//! every quantity here evaluates exactly in rational mode and identities
//! become equality tests instead of float comparisons.

use crate::butcher::BMap;
use crate::poly::Poly;
use crate::scalar::{rat, Rat, Scalar};
use crate::trees::RootedTree;
use crate::words::{is_lie_element, words_of_len, WMap};
use num_complex::Complex64;
use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FieldError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("coefficient map is not a Lie element")]
    NotLieElement,
    #[error("dimension must be even for the symplectic structure")]
    OddDimension,
    #[error("invalid field description: {0}")]
    Invalid(String),
}

/// A vector field with polynomial components. `dim_in` is the number of
/// variables; the number of components may differ (used for fields defined
/// on a sub-block of the phase space).
#[derive(Debug, Clone, PartialEq)]
pub struct PolyMap<S> {
    dim_in: usize,
    comps: Vec<Poly<S>>,
}

impl<S: Scalar> PolyMap<S> {
    pub fn new(dim_in: usize, comps: Vec<Poly<S>>) -> Result<Self, FieldError> {
        for c in &comps {
            if c.dim() != dim_in {
                return Err(FieldError::DimensionMismatch(format!(
                    "component over {} variables in a {}-variable field",
                    c.dim(),
                    dim_in
                )));
            }
        }
        Ok(PolyMap { dim_in, comps })
    }

    pub fn zero(dim_in: usize, comps: usize) -> Self {
        PolyMap {
            dim_in,
            comps: (0..comps).map(|_| Poly::zero(dim_in)).collect(),
        }
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn comps(&self) -> &[Poly<S>] {
        &self.comps
    }

    pub fn comp(&self, i: usize) -> &Poly<S> {
        &self.comps[i]
    }

    pub fn len(&self) -> usize {
        self.comps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.comps.is_empty()
    }

    pub fn eval(&self, x: &[S]) -> Vec<S> {
        self.comps.iter().map(|c| c.eval(x)).collect()
    }

    pub fn add(&self, other: &PolyMap<S>) -> PolyMap<S> {
        assert_eq!(self.dim_in, other.dim_in);
        assert_eq!(self.len(), other.len());
        PolyMap {
            dim_in: self.dim_in,
            comps: self
                .comps
                .iter()
                .zip(&other.comps)
                .map(|(a, b)| a.add(b))
                .collect(),
        }
    }

    pub fn sub(&self, other: &PolyMap<S>) -> PolyMap<S> {
        self.add(&other.scale(&(-S::one())))
    }

    pub fn scale(&self, s: &S) -> PolyMap<S> {
        PolyMap {
            dim_in: self.dim_in,
            comps: self.comps.iter().map(|c| c.scale(s)).collect(),
        }
    }

    /// Jacobian-vector product with a polynomial vector: (∂self)·g.
    pub fn jacobian_apply(&self, g: &[Poly<S>]) -> PolyMap<S> {
        assert_eq!(g.len(), self.dim_in);
        let comps = self
            .comps
            .iter()
            .map(|c| {
                let mut acc = Poly::zero(self.dim_in);
                for (j, gj) in g.iter().enumerate() {
                    acc = acc.add(&c.partial(j).mul(gj));
                }
                acc
            })
            .collect();
        PolyMap {
            dim_in: self.dim_in,
            comps,
        }
    }

    /// Pullback under the affine change x = M x̄ + c:
    /// f̄(x̄) = M⁻¹ f(M x̄ + c), with `minv` the inverse of `m`.
    pub fn affine_transform(&self, m: &[Vec<S>], minv: &[Vec<S>], c: &[S]) -> PolyMap<S> {
        let composed: Vec<Poly<S>> = self.comps.iter().map(|p| p.compose_affine(m, c)).collect();
        let comps = (0..self.len())
            .map(|i| {
                let mut acc = Poly::zero(self.dim_in);
                for (j, cj) in composed.iter().enumerate() {
                    acc = acc.add(&cj.scale(&minv[i][j]));
                }
                acc
            })
            .collect();
        PolyMap {
            dim_in: self.dim_in,
            comps,
        }
    }

    pub fn map_coeffs<T: Scalar>(&self, f: impl Fn(&S) -> T + Copy) -> PolyMap<T> {
        PolyMap {
            dim_in: self.dim_in,
            comps: self.comps.iter().map(|c| c.map_coeffs(f)).collect(),
        }
    }
}

#[derive(Deserialize)]
struct PolyMapJson {
    dim: usize,
    components: Vec<Vec<TermJson>>,
}

#[derive(Deserialize)]
struct TermJson {
    coeff: serde_json::Value,
    exps: Vec<u32>,
}

fn parse_coeff(v: &serde_json::Value) -> Result<Complex64, FieldError> {
    match v {
        serde_json::Value::String(s) => {
            let r = crate::scalar::parse_rat(s).map_err(FieldError::Invalid)?;
            Ok(Complex64::new(crate::scalar::rat_to_f64(&r), 0.0))
        }
        serde_json::Value::Array(a) if a.len() == 2 => {
            let re = a[0]
                .as_f64()
                .ok_or_else(|| FieldError::Invalid(format!("bad real part {}", a[0])))?;
            let im = a[1]
                .as_f64()
                .ok_or_else(|| FieldError::Invalid(format!("bad imaginary part {}", a[1])))?;
            Ok(Complex64::new(re, im))
        }
        other => Err(FieldError::Invalid(format!(
            "coefficient must be a rational string or [re, im]: {other}"
        ))),
    }
}

/// Parses the PolyMap JSON form with complex coefficients:
/// {"dim": D, "components": [[{"coeff": "p/q" | [re,im], "exps": [..]}]]}.
pub fn polymap_from_json(v: &serde_json::Value) -> Result<PolyMap<Complex64>, FieldError> {
    let raw: PolyMapJson =
        serde_json::from_value(v.clone()).map_err(|e| FieldError::Invalid(e.to_string()))?;
    let comps = raw
        .components
        .iter()
        .map(|terms| {
            let mut p = Poly::zero(raw.dim);
            for t in terms {
                if t.exps.len() != raw.dim {
                    return Err(FieldError::Invalid(format!(
                        "exponent vector {:?} does not match dim {}",
                        t.exps, raw.dim
                    )));
                }
                p.add_term(t.exps.clone(), parse_coeff(&t.coeff)?);
            }
            Ok(p)
        })
        .collect::<Result<Vec<_>, _>>()?;
    PolyMap::new(raw.dim, comps)
}

/// Parses the same JSON form restricted to exact rational coefficients.
pub fn polymap_from_json_exact(v: &serde_json::Value) -> Result<PolyMap<Rat>, FieldError> {
    let raw: PolyMapJson =
        serde_json::from_value(v.clone()).map_err(|e| FieldError::Invalid(e.to_string()))?;
    let comps = raw
        .components
        .iter()
        .map(|terms| {
            let mut p = Poly::zero(raw.dim);
            for t in terms {
                let s = t.coeff.as_str().ok_or_else(|| {
                    FieldError::Invalid("exact mode requires rational string coefficients".into())
                })?;
                let r = crate::scalar::parse_rat(s).map_err(FieldError::Invalid)?;
                if t.exps.len() != raw.dim {
                    return Err(FieldError::Invalid(format!(
                        "exponent vector {:?} does not match dim {}",
                        t.exps, raw.dim
                    )));
                }
                p.add_term(t.exps.clone(), r);
            }
            Ok(p)
        })
        .collect::<Result<Vec<_>, _>>()?;
    PolyMap::new(raw.dim, comps)
}

/// m-th Frechet derivative of `f` at `x` applied to the given directions.
pub fn frechet_apply<S: Scalar>(f: &PolyMap<S>, x: &[S], dirs: &[Vec<S>]) -> Vec<S> {
    f.comps
        .iter()
        .map(|c| {
            let mut p = c.clone();
            for d in dirs {
                p = p.directional(d);
            }
            p.eval(x)
        })
        .collect()
}

/// Elementary differential F_u(x): the vertex structure of the tree mirrors
/// the nesting of Frechet derivatives, with F_•(x) = f(x) and F_∅(x) = x.
pub fn elementary_differential<S: Scalar>(
    f: &PolyMap<S>,
    u: &RootedTree,
    x: &[S],
) -> Result<Vec<S>, FieldError> {
    if f.dim_in != f.len() {
        return Err(FieldError::DimensionMismatch(
            "elementary differentials need a square field".into(),
        ));
    }
    if x.len() != f.dim_in {
        return Err(FieldError::DimensionMismatch(format!(
            "point has {} coordinates, field has {}",
            x.len(),
            f.dim_in
        )));
    }
    if u.is_empty() {
        return Ok(x.to_vec());
    }
    let dirs: Vec<Vec<S>> = u
        .children()
        .iter()
        .map(|c| elementary_differential(f, c, x))
        .collect::<Result<_, _>>()?;
    Ok(frechet_apply(f, x, &dirs))
}

/// Truncated B-series B_δ(x) = Σ_{|u| ≤ n} h^{|u|} (1/σ(u)) δ_u F_u(x).
pub fn bseries_eval<S: Scalar>(
    delta: &BMap,
    f: &PolyMap<S>,
    x: &[S],
    h: &S,
    n: usize,
) -> Result<Vec<S>, FieldError> {
    let grades = bseries_eval_grades(delta, f, x, n)?;
    let mut acc = vec![S::zero(); x.len()];
    for (g, term) in grades.iter().enumerate() {
        let hp = h.powu(g as u32);
        for (a, t) in acc.iter_mut().zip(term) {
            *a = a.clone() + hp.clone() * t.clone();
        }
    }
    Ok(acc)
}

/// Per-grade contributions of a truncated B-series: entry g holds
/// Σ_{|u| = g} (1/σ(u)) δ_u F_u(x), so the series is Σ_g h^g · entry_g.
pub fn bseries_eval_grades<S: Scalar>(
    delta: &BMap,
    f: &PolyMap<S>,
    x: &[S],
    n: usize,
) -> Result<Vec<Vec<S>>, FieldError> {
    assert!(n <= delta.cap(), "truncation beyond the grade cap");
    let mut out = Vec::with_capacity(n + 1);
    for g in 0..=n {
        let mut acc = vec![S::zero(); x.len()];
        for u in crate::trees::enumerate_trees(g) {
            let fu = elementary_differential(f, &u, x)?;
            let w =
                S::from_rat(&(Rat::from_integer(u.symmetry().into()).recip() * delta.coeff(&u)));
            for (a, v) in acc.iter_mut().zip(fu) {
                *a = a.clone() + w.clone() * v;
            }
        }
        out.push(acc);
    }
    Ok(out)
}

/// Word-basis function f_w as a symbolic polynomial field, built by the
/// Jacobian recursion f_{aw}(x) = ∂_x f_w(x) · f_a(x). The empty word is
/// the identity map and is handled by the evaluation entry points.
pub fn word_basis_field<S: Scalar>(
    fields: &[PolyMap<S>],
    w: &[u8],
) -> Result<PolyMap<S>, FieldError> {
    let first = w
        .first()
        .ok_or_else(|| FieldError::Invalid("empty word has no basis field".into()))?;
    let dim = fields
        .first()
        .ok_or_else(|| FieldError::Invalid("no letter fields".into()))?
        .dim_in;
    for f in fields {
        if f.dim_in != dim || f.len() != dim {
            return Err(FieldError::DimensionMismatch(
                "letter fields must be square and share a dimension".into(),
            ));
        }
    }
    let letter = |l: u8| -> Result<&PolyMap<S>, FieldError> {
        fields
            .get(l as usize)
            .ok_or_else(|| FieldError::Invalid(format!("unknown letter index {l}")))
    };
    if w.len() == 1 {
        return Ok(letter(*first)?.clone());
    }
    let tail = word_basis_field(fields, &w[1..])?;
    Ok(tail.jacobian_apply(letter(*first)?.comps()))
}

/// Word-basis function value f_w(x), with f_∅(x) = x.
pub fn word_basis<S: Scalar>(
    fields: &[PolyMap<S>],
    w: &[u8],
    x: &[S],
) -> Result<Vec<S>, FieldError> {
    if w.is_empty() {
        return Ok(x.to_vec());
    }
    let field = word_basis_field(fields, w)?;
    if x.len() != field.dim_in {
        return Err(FieldError::DimensionMismatch(format!(
            "point has {} coordinates, field has {}",
            x.len(),
            field.dim_in
        )));
    }
    Ok(field.eval(x))
}

/// Truncated word series W_δ(x) = Σ_{|w| ≤ n} δ_w f_w(x).
pub fn wordseries_eval<S: Scalar>(
    delta: &WMap<S>,
    fields: &[PolyMap<S>],
    x: &[S],
    n: usize,
) -> Result<Vec<S>, FieldError> {
    let grades = wordseries_eval_grades(delta, fields, x, n)?;
    let mut acc = vec![S::zero(); x.len()];
    for term in grades {
        for (a, t) in acc.iter_mut().zip(term) {
            *a = a.clone() + t;
        }
    }
    Ok(acc)
}

/// Per-word-length contributions Σ_{|w| = g} δ_w f_w(x) of a word series.
pub fn wordseries_eval_grades<S: Scalar>(
    delta: &WMap<S>,
    fields: &[PolyMap<S>],
    x: &[S],
    n: usize,
) -> Result<Vec<Vec<S>>, FieldError> {
    assert!(n <= delta.cap(), "truncation beyond the word-length cap");
    if fields.len() != delta.alphabet().len() {
        return Err(FieldError::Invalid(format!(
            "{} letter fields for an alphabet of {}",
            fields.len(),
            delta.alphabet().len()
        )));
    }
    let mut out = Vec::with_capacity(n + 1);
    for g in 0..=n {
        let mut acc = vec![S::zero(); x.len()];
        for w in words_of_len(delta.alphabet().len(), g) {
            let fw = word_basis(fields, &w, x)?;
            let c = delta.coeff(&w);
            for (a, v) in acc.iter_mut().zip(fw) {
                *a = a.clone() + c.clone() * v;
            }
        }
        out.push(acc);
    }
    Ok(out)
}

/// Jacobi bracket [f, g] = (∂g)f − (∂f)g, exactly as polynomials.
pub fn jacobi_bracket<S: Scalar>(f: &PolyMap<S>, g: &PolyMap<S>) -> Result<PolyMap<S>, FieldError> {
    if f.dim_in != g.dim_in || f.len() != g.len() || f.dim_in != f.len() {
        return Err(FieldError::DimensionMismatch(
            "bracket needs square fields of equal dimension".into(),
        ));
    }
    Ok(g.jacobian_apply(f.comps()).sub(&f.jacobian_apply(g.comps())))
}

/// Poisson bracket for the block structure J = [[O, I], [−I, O]]: with
/// m = D/2 and variable i paired with variable m+i,
/// {A, B} = Σ_{i<m} (∂A/∂x_i ∂B/∂x_{m+i} − ∂A/∂x_{m+i} ∂B/∂x_i),
/// so {x_i, x_{m+i}} = +1. The sign is the one for which the Hamiltonian
/// field correspondence [f_A, f_B] = J⁻¹∇{A, B} holds with the Jacobi
/// bracket [f, g] = (∂g)f − (∂f)g used throughout this crate; the word
/// Hamiltonians below depend on it.
pub fn poisson_bracket<S: Scalar>(a: &Poly<S>, b: &Poly<S>) -> Result<Poly<S>, FieldError> {
    let d = a.dim();
    if b.dim() != d {
        return Err(FieldError::DimensionMismatch(
            "polynomials over different variable counts".into(),
        ));
    }
    if !d.is_multiple_of(2) {
        return Err(FieldError::OddDimension);
    }
    let m = d / 2;
    let mut acc = Poly::zero(d);
    for i in 0..m {
        acc = acc.add(&a.partial(i).mul(&b.partial(m + i)));
        acc = acc.sub(&a.partial(m + i).mul(&b.partial(i)));
    }
    Ok(acc)
}

/// Hamiltonian vector field J⁻¹∇H for the same block convention: the first
/// m components are −∂H/∂x_{m+i}, the last m are +∂H/∂x_i.
pub fn hamiltonian_vector_field<S: Scalar>(h: &Poly<S>) -> Result<PolyMap<S>, FieldError> {
    let d = h.dim();
    if !d.is_multiple_of(2) {
        return Err(FieldError::OddDimension);
    }
    let m = d / 2;
    let mut comps = Vec::with_capacity(d);
    for i in 0..m {
        comps.push(h.partial(m + i).scale(&(-S::one())));
    }
    for i in 0..m {
        comps.push(h.partial(i));
    }
    PolyMap::new(d, comps)
}

/// Hamiltonian of a word: H_w = (1/n) {{…{{H_{a₁},H_{a₂}},H_{a₃}}…},H_{aₙ}}.
pub fn hamiltonian_word<S: Scalar>(hs: &[Poly<S>], w: &[u8]) -> Result<Poly<S>, FieldError> {
    let first = w
        .first()
        .ok_or_else(|| FieldError::Invalid("empty word has no Hamiltonian".into()))?;
    let mut acc = hs
        .get(*first as usize)
        .ok_or_else(|| FieldError::Invalid(format!("unknown letter index {first}")))?
        .clone();
    for l in &w[1..] {
        let next = hs
            .get(*l as usize)
            .ok_or_else(|| FieldError::Invalid(format!("unknown letter index {l}")))?;
        acc = poisson_bracket(&acc, next)?;
    }
    Ok(acc.scale(&S::from_rat(&rat(1, w.len() as i64))))
}

/// Evaluates a Lie-element word series through the Dynkin–Specht–Wever
/// form: W_β(x) = Σ_n (1/n) Σ_{|w|=n} β_w [[…[f_{a₁},f_{a₂}]…],f_{aₙ}](x).
/// Agrees with `wordseries_eval` exactly when β is a Lie element; inputs
/// failing the Lie check within `tol` are rejected.
pub fn dsw_eval<S: Scalar>(
    beta: &WMap<S>,
    fields: &[PolyMap<S>],
    x: &[S],
    n: usize,
    tol: f64,
) -> Result<Vec<S>, FieldError> {
    if !is_lie_element(beta, n, tol) {
        return Err(FieldError::NotLieElement);
    }
    let mut acc = vec![S::zero(); x.len()];
    for g in 1..=n.min(beta.cap()) {
        let inv_n = S::from_rat(&rat(1, g as i64));
        for w in words_of_len(beta.alphabet().len(), g) {
            let c = beta.coeff(&w);
            if c.is_zero() {
                continue;
            }
            let val = iterated_commutator(fields, &w)?.eval(x);
            let scale = c.clone() * inv_n.clone();
            for (a, v) in acc.iter_mut().zip(val) {
                *a = a.clone() + scale.clone() * v;
            }
        }
    }
    Ok(acc)
}

fn iterated_commutator<S: Scalar>(
    fields: &[PolyMap<S>],
    w: &[u8],
) -> Result<PolyMap<S>, FieldError> {
    let mut acc = fields[w[0] as usize].clone();
    for l in &w[1..] {
        acc = jacobi_bracket(&acc, &fields[*l as usize])?;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::butcher::{elementary_weights, tableaux};
    use crate::scalar::rat;
    use crate::trees::RootedTree;
    use crate::words::Alphabet;

    fn tr(levels: &[u32]) -> RootedTree {
        RootedTree::from_levels(levels).unwrap()
    }

    /// f(x, y) = (x²y + 1, x − y³) on ℚ².
    fn sample_field() -> PolyMap<Rat> {
        let x = Poly::var(2, 0);
        let y = Poly::var(2, 1);
        let one = Poly::constant(2, rat(1, 1));
        PolyMap::new(2, vec![x.mul(&x).mul(&y).add(&one), x.sub(&y.mul(&y).mul(&y))]).unwrap()
    }

    #[test]
    fn leaf_differential_is_field_value() {
        let f = sample_field();
        let x = vec![rat(1, 2), rat(-1, 3)];
        assert_eq!(
            elementary_differential(&f, &RootedTree::leaf(), &x).unwrap(),
            f.eval(&x)
        );
        assert_eq!(
            elementary_differential(&f, &RootedTree::empty(), &x).unwrap(),
            x
        );
    }

    #[test]
    fn branchy_tree_matches_handwritten_frechet() {
        // the tree [1,2,3,2] evaluates as ∂²f[f, ∂f[f]]
        let f = sample_field();
        let x = vec![rat(1, 1), rat(2, 1)];
        let fx = f.eval(&x);
        let dff = frechet_apply(&f, &x, std::slice::from_ref(&fx));
        let expect = frechet_apply(&f, &x, &[fx, dff]);
        assert_eq!(
            elementary_differential(&f, &tr(&[1, 2, 3, 2]), &x).unwrap(),
            expect
        );
    }

    #[test]
    fn second_derivative_of_linear_field_vanishes() {
        let a1 = Poly::var(2, 0).scale(&rat(2, 1)).add(&Poly::var(2, 1));
        let a2 = Poly::var(2, 0).sub(&Poly::var(2, 1).scale(&rat(3, 1)));
        let f = PolyMap::new(2, vec![a1, a2]).unwrap();
        let x = vec![rat(5, 7), rat(-2, 9)];
        let v = elementary_differential(&f, &tr(&[1, 2, 2]), &x).unwrap();
        assert_eq!(v, vec![rat(0, 1), rat(0, 1)]);
    }

    #[test]
    fn bseries_of_unit_is_identity_and_euler_is_one_step() {
        let f = sample_field();
        let x = vec![rat(1, 3), rat(2, 5)];
        let h = rat(1, 10);
        let unit = BMap::unit(3);
        assert_eq!(bseries_eval(&unit, &f, &x, &h, 3).unwrap(), x);

        let euler = elementary_weights(&tableaux::euler(), 3);
        let fx = f.eval(&x);
        let expect: Vec<Rat> = x
            .iter()
            .zip(&fx)
            .map(|(xi, fi)| xi + h.clone() * fi)
            .collect();
        assert_eq!(bseries_eval(&euler, &f, &x, &h, 3).unwrap(), expect);
    }

    #[test]
    fn scalar_exponential_flow_series() {
        // f(x) = x in one dimension: the grade-n flow term is x hⁿ/n!
        let f = PolyMap::new(1, vec![Poly::var(1, 0)]).unwrap();
        let x = vec![rat(3, 1)];
        let h = rat(1, 2);
        let flow = BMap::exact_flow(4);
        let val = bseries_eval(&flow, &f, &x, &h, 4).unwrap();
        let mut expect = Rat::from_integer(0.into());
        let mut term = x[0].clone();
        for n in 0..=4u32 {
            if n > 0 {
                term = term * h.clone() / Rat::from_integer(n.into());
            }
            expect += term.clone();
        }
        assert_eq!(val[0], expect);
    }

    #[test]
    fn word_basis_recursion_examples() {
        let fa = sample_field();
        let x2 = Poly::var(2, 0);
        let y2 = Poly::var(2, 1);
        let fb = PolyMap::new(2, vec![y2.mul(&y2), x2.scale(&rat(-1, 1))]).unwrap();
        let fields = vec![fa.clone(), fb.clone()];
        let x = vec![rat(1, 2), rat(1, 3)];

        // f_ba = ∂f_a · f_b
        let ba = word_basis(&fields, &[1, 0], &x).unwrap();
        let expect = frechet_apply(&fa, &x, &[fb.eval(&x)]);
        assert_eq!(ba, expect);

        // f_cba = ∂²f_a[f_b, f_c] + ∂f_a ∂f_b f_c  (with c = b here)
        let cba = word_basis(&fields, &[1, 1, 0], &x).unwrap();
        let d2 = frechet_apply(&fa, &x, &[fb.eval(&x), fb.eval(&x)]);
        let inner = frechet_apply(&fb, &x, &[fb.eval(&x)]);
        let d1 = frechet_apply(&fa, &x, &[inner]);
        let expect: Vec<Rat> = d2.iter().zip(&d1).map(|(a, b)| a + b).collect();
        assert_eq!(cba, expect);

        assert_eq!(word_basis(&fields, &[], &x).unwrap(), x);
    }

    #[test]
    fn wordseries_unit_is_identity() {
        let fields = vec![sample_field(), sample_field()];
        let alpha = Alphabet::named(&["a", "b"]);
        let unit = WMap::<Rat>::unit(alpha, 3);
        let x = vec![rat(2, 7), rat(1, 9)];
        assert_eq!(wordseries_eval(&unit, &fields, &x, 3).unwrap(), x);
    }

    #[test]
    fn single_letter_taylor_series_is_matrix_exponential_sum() {
        // one letter with λ ≡ 1 on a linear field: the truncated word
        // series is the matrix-exponential partial sum Σ tⁿAⁿ/n! · x
        let a = [[rat(1, 2), rat(-1, 3)], [rat(1, 4), rat(1, 5)]];
        let f = PolyMap::new(
            2,
            (0..2)
                .map(|i| {
                    Poly::var(2, 0)
                        .scale(&a[i][0])
                        .add(&Poly::var(2, 1).scale(&a[i][1]))
                })
                .collect(),
        )
        .unwrap();
        let alpha = Alphabet::named(&["a"]);
        let t = rat(2, 5);
        let n = 4;
        let delta = crate::words::taylor_coeffs_exact(&t, &alpha, n);
        let x = vec![rat(1, 1), rat(-1, 2)];
        let value = wordseries_eval(&delta, &[f], &x, n).unwrap();

        // independent oracle: iterate v ← (t/k) A v and accumulate
        let mut expect = x.clone();
        let mut term = x.clone();
        for k in 1..=n as i64 {
            let next: Vec<Rat> = (0..2)
                .map(|i| {
                    (a[i][0].clone() * &term[0] + a[i][1].clone() * &term[1]) * &t
                        / Rat::from_integer(k.into())
                })
                .collect();
            term = next;
            for (e, v) in expect.iter_mut().zip(&term) {
                *e += v;
            }
        }
        assert_eq!(value, expect);
    }

    #[test]
    fn taylor_word_series_matches_bseries_of_sum_per_grade() {
        // λ ≡ 1 on two letters: grade n of the word series for f_a + f_b
        // equals tⁿ · grade n of the exact-flow B-series of the summed field
        let fa = sample_field();
        let x2 = Poly::var(2, 0);
        let y2 = Poly::var(2, 1);
        let fb = PolyMap::new(2, vec![x2.mul(&y2), y2.mul(&y2)]).unwrap();
        let fields = vec![fa.clone(), fb.clone()];
        let total = fa.add(&fb);
        let alpha = Alphabet::named(&["a", "b"]);
        let x = vec![rat(1, 4), rat(-1, 5)];
        let t = rat(2, 3);

        let delta = crate::words::taylor_coeffs_exact(&t, &alpha, 3);
        let word_grades = wordseries_eval_grades(&delta, &fields, &x, 3).unwrap();
        let tree_grades = bseries_eval_grades(&BMap::exact_flow(3), &total, &x, 3).unwrap();
        for g in 0..=3usize {
            let mut tn = Rat::from_integer(1.into());
            for _ in 0..g {
                tn *= t.clone();
            }
            let scaled: Vec<Rat> = tree_grades[g].iter().map(|v| v * tn.clone()).collect();
            assert_eq!(word_grades[g], scaled, "grade {g}");
        }
    }

    #[test]
    fn jacobi_bracket_rules() {
        let f = sample_field();
        let x2 = Poly::var(2, 0);
        let y2 = Poly::var(2, 1);
        let g = PolyMap::new(2, vec![y2.clone(), x2.mul(&x2)]).unwrap();
        assert!(jacobi_bracket(&f, &f)
            .unwrap()
            .comps()
            .iter()
            .all(|c| c.is_zero()));

        // linear fields: [Ax, Bx] = (BA − AB)x
        let ax = PolyMap::new(
            2,
            vec![
                Poly::var(2, 0).add(&Poly::var(2, 1).scale(&rat(2, 1))),
                Poly::var(2, 0).scale(&rat(-1, 1)),
            ],
        )
        .unwrap();
        let bx = PolyMap::new(
            2,
            vec![Poly::var(2, 1), Poly::var(2, 0).add(&Poly::var(2, 1))],
        )
        .unwrap();
        let br = jacobi_bracket(&ax, &bx).unwrap();
        let a = [[rat(1, 1), rat(2, 1)], [rat(-1, 1), rat(0, 1)]];
        let b = [[rat(0, 1), rat(1, 1)], [rat(1, 1), rat(1, 1)]];
        let mut m = [[rat(0, 1), rat(0, 1)], [rat(0, 1), rat(0, 1)]];
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    let add =
                        b[i][k].clone() * a[k][j].clone() - a[i][k].clone() * b[k][j].clone();
                    m[i][j] = m[i][j].clone() + add;
                }
            }
        }
        for (i, comp) in br.comps().iter().enumerate() {
            let expect = Poly::var(2, 0)
                .scale(&m[i][0])
                .add(&Poly::var(2, 1).scale(&m[i][1]));
            assert_eq!(comp, &expect);
        }

        // bilinearity spot check
        let s = rat(3, 4);
        let lhs = jacobi_bracket(&f.scale(&s), &g).unwrap();
        let rhs = jacobi_bracket(&f, &g).unwrap().scale(&s);
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn poisson_conventions() {
        // D = 2: variable 0 is paired with variable 1, {x₀, x₁} = +1
        let p = Poly::<Rat>::var(2, 0);
        let q = Poly::<Rat>::var(2, 1);
        assert_eq!(poisson_bracket(&p, &q).unwrap(), Poly::constant(2, rat(1, 1)));
        assert_eq!(poisson_bracket(&q, &p).unwrap(), Poly::constant(2, rat(-1, 1)));
        let a = p.mul(&p).add(&q.mul(&q).scale(&rat(3, 1)));
        assert!(poisson_bracket(&a, &a).unwrap().is_zero());
        assert!(poisson_bracket(&Poly::<Rat>::var(3, 0), &Poly::var(3, 1)).is_err());
    }

    #[test]
    fn poisson_jacobi_identity() {
        let p = Poly::<Rat>::var(2, 0);
        let q = Poly::<Rat>::var(2, 1);
        let a = p.mul(&p).add(&q);
        let b = p.mul(&q);
        let c = q.mul(&q).sub(&p);
        let j1 = poisson_bracket(&poisson_bracket(&a, &b).unwrap(), &c).unwrap();
        let j2 = poisson_bracket(&poisson_bracket(&b, &c).unwrap(), &a).unwrap();
        let j3 = poisson_bracket(&poisson_bracket(&c, &a).unwrap(), &b).unwrap();
        assert!(j1.add(&j2).add(&j3).is_zero());
    }

    #[test]
    fn hamiltonian_field_of_quadratic_is_rotation() {
        // H = (x² + y²)/2 gives the rotation field (−y, x)
        let p = Poly::<Rat>::var(2, 0);
        let q = Poly::<Rat>::var(2, 1);
        let h = p.mul(&p).add(&q.mul(&q)).scale(&rat(1, 2));
        let f = hamiltonian_vector_field(&h).unwrap();
        assert_eq!(f.comp(0), &q.scale(&rat(-1, 1)));
        assert_eq!(f.comp(1), &p);
        let zero = hamiltonian_vector_field(&Poly::<Rat>::constant(2, rat(7, 1))).unwrap();
        assert!(zero.comps().iter().all(|c| c.is_zero()));
        let h2 = h.scale(&rat(5, 2));
        assert_eq!(hamiltonian_vector_field(&h2).unwrap(), f.scale(&rat(5, 2)));
    }

    #[test]
    fn bracket_of_hamiltonian_fields_is_hamiltonian_field_of_bracket() {
        let p = Poly::<Rat>::var(2, 0);
        let q = Poly::<Rat>::var(2, 1);
        let a = p.mul(&p).scale(&rat(1, 2)).add(&q.mul(&q).mul(&p));
        let b = q.mul(&q).scale(&rat(1, 2)).sub(&p.mul(&q));
        let fa = hamiltonian_vector_field(&a).unwrap();
        let fb = hamiltonian_vector_field(&b).unwrap();
        let lhs = jacobi_bracket(&fa, &fb).unwrap();
        let rhs = hamiltonian_vector_field(&poisson_bracket(&a, &b).unwrap()).unwrap();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn hamiltonian_word_prefactors() {
        let p = Poly::<Rat>::var(2, 0);
        let q = Poly::<Rat>::var(2, 1);
        let h1 = p.mul(&p);
        let h2 = q.mul(&q);
        let h3 = p.mul(&q);
        let hs = vec![h1.clone(), h2.clone(), h3.clone()];
        assert_eq!(hamiltonian_word(&hs, &[0]).unwrap(), h1);
        let w2 = hamiltonian_word(&hs, &[0, 1]).unwrap();
        assert_eq!(w2, poisson_bracket(&h1, &h2).unwrap().scale(&rat(1, 2)));
        let w3 = hamiltonian_word(&hs, &[0, 1, 2]).unwrap();
        let expect = poisson_bracket(&poisson_bracket(&h1, &h2).unwrap(), &h3)
            .unwrap()
            .scale(&rat(1, 3));
        assert_eq!(w3, expect);
        assert!(hamiltonian_word(&hs, &[]).is_err());
    }

    #[test]
    fn dsw_matches_wordseries_on_brackets() {
        let fa = sample_field();
        let x2 = Poly::var(2, 0);
        let y2 = Poly::var(2, 1);
        let fb = PolyMap::new(2, vec![x2.mul(&x2), y2.clone()]).unwrap();
        let fields = vec![fa.clone(), fb.clone()];
        let alpha = Alphabet::named(&["a", "b"]);
        let x = vec![rat(1, 3), rat(1, 2)];

        // single-letter support evaluates to β_a f_a(x)
        let mut single = WMap::<Rat>::zero(alpha.clone(), 3);
        single.set_coeff(&[0], rat(4, 3));
        let lhs = dsw_eval(&single, &fields, &x, 3, 0.0).unwrap();
        let fx = fa.eval(&x);
        let expect: Vec<Rat> = fx.iter().map(|v| v * rat(4, 3)).collect();
        assert_eq!(lhs, expect);

        // bracket of two single-letter elements evaluates to the commutator
        let mut ea = WMap::<Rat>::zero(alpha.clone(), 3);
        ea.set_coeff(&[0], rat(1, 1));
        let mut eb = WMap::<Rat>::zero(alpha, 3);
        eb.set_coeff(&[1], rat(1, 1));
        let beta = crate::words::lie_bracket(&ea, &eb).unwrap();
        let lhs = dsw_eval(&beta, &fields, &x, 3, 0.0).unwrap();
        let rhs = wordseries_eval(&beta, &fields, &x, 3).unwrap();
        assert_eq!(lhs, rhs);
        let comm = jacobi_bracket(&fa, &fb).unwrap().eval(&x);
        assert_eq!(lhs, comm);

        // zero map evaluates to zero, non-Lie maps are rejected
        let zero = WMap::<Rat>::zero(beta.alphabet().clone(), 3);
        assert_eq!(
            dsw_eval(&zero, &fields, &x, 3, 0.0).unwrap(),
            vec![rat(0, 1), rat(0, 1)]
        );
        let mut bad = WMap::<Rat>::zero(beta.alphabet().clone(), 3);
        bad.set_coeff(&[0, 1], rat(1, 1));
        assert!(matches!(
            dsw_eval(&bad, &fields, &x, 3, 0.0),
            Err(FieldError::NotLieElement)
        ));
    }

    #[test]
    fn polymap_json_parsing() {
        let js = serde_json::json!({
            "dim": 2,
            "components": [
                [{"coeff": "1/2", "exps": [1, 0]}, {"coeff": "-1", "exps": [0, 2]}],
                [{"coeff": [0.5, -0.25], "exps": [0, 0]}]
            ]
        });
        let f = polymap_from_json(&js).unwrap();
        assert_eq!(f.dim_in(), 2);
        assert_eq!(f.len(), 2);
        let v = f.eval(&[Complex64::new(2.0, 0.0), Complex64::new(1.0, 0.0)]);
        assert!((v[0] - Complex64::new(0.0, 0.0)).norm() < 1e-15);
        assert!((v[1] - Complex64::new(0.5, -0.25)).norm() < 1e-15);
        assert!(polymap_from_json_exact(&js).is_err());
        let bad = serde_json::json!({"dim": 2, "components": [[{"coeff": "1", "exps": [1]}]]});
        assert!(polymap_from_json(&bad).is_err());
    }
}

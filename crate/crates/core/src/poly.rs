//! Multivariate polynomials over an exact or floating scalar.
//!
//! Terms are stored sparsely, keyed by exponent vector; zero coefficients
//! are pruned on construction and after every operation, so structural
//! equality of rational polynomials is mathematical equality.

use crate::scalar::Scalar;
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq)]
pub struct Poly<S> {
    dim: usize,
    terms: BTreeMap<Vec<u32>, S>,
}

impl<S: Scalar> Poly<S> {
    pub fn zero(dim: usize) -> Self {
        Poly {
            dim,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(dim: usize, c: S) -> Self {
        let mut p = Poly::zero(dim);
        p.add_term(vec![0; dim], c);
        p
    }

    /// The coordinate polynomial x_j.
    pub fn var(dim: usize, j: usize) -> Self {
        assert!(j < dim);
        let mut exps = vec![0; dim];
        exps[j] = 1;
        let mut p = Poly::zero(dim);
        p.add_term(exps, S::one());
        p
    }

    pub fn from_terms(dim: usize, terms: impl IntoIterator<Item = (Vec<u32>, S)>) -> Self {
        let mut p = Poly::zero(dim);
        for (exps, c) in terms {
            assert_eq!(exps.len(), dim, "exponent vector length mismatch");
            p.add_term(exps, c);
        }
        p
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &S)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, exps: Vec<u32>, c: S) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(exps) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let v = e.get().clone() + c;
                if v.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = v;
                }
            }
        }
    }

    pub fn add(&self, other: &Poly<S>) -> Poly<S> {
        assert_eq!(self.dim, other.dim);
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Poly<S>) -> Poly<S> {
        self.add(&other.scale(&(-S::one())))
    }

    pub fn scale(&self, s: &S) -> Poly<S> {
        if s.is_zero() {
            return Poly::zero(self.dim);
        }
        Poly {
            dim: self.dim,
            terms: self
                .terms
                .iter()
                .map(|(e, c)| (e.clone(), c.clone() * s.clone()))
                .collect(),
        }
    }

    pub fn mul(&self, other: &Poly<S>) -> Poly<S> {
        assert_eq!(self.dim, other.dim);
        let mut out = Poly::zero(self.dim);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let exps: Vec<u32> = ea.iter().zip(eb).map(|(x, y)| x + y).collect();
                out.add_term(exps, ca.clone() * cb.clone());
            }
        }
        out
    }

    /// Partial derivative with respect to variable `j`.
    pub fn partial(&self, j: usize) -> Poly<S> {
        assert!(j < self.dim);
        let mut out = Poly::zero(self.dim);
        for (e, c) in &self.terms {
            if e[j] == 0 {
                continue;
            }
            let mut exps = e.clone();
            exps[j] -= 1;
            out.add_term(exps, c.clone() * S::from_int(e[j] as i64));
        }
        out
    }

    pub fn gradient(&self) -> Vec<Poly<S>> {
        (0..self.dim).map(|j| self.partial(j)).collect()
    }

    /// Directional derivative Σ_j dir_j ∂_j p with scalar direction entries.
    pub fn directional(&self, dir: &[S]) -> Poly<S> {
        assert_eq!(dir.len(), self.dim);
        let mut out = Poly::zero(self.dim);
        for (j, d) in dir.iter().enumerate() {
            if d.is_zero() {
                continue;
            }
            out = out.add(&self.partial(j).scale(d));
        }
        out
    }

    pub fn eval(&self, x: &[S]) -> S {
        assert_eq!(x.len(), self.dim, "point dimension mismatch");
        let mut acc = S::zero();
        for (e, c) in &self.terms {
            let mut term = c.clone();
            for (xi, &p) in x.iter().zip(e) {
                if p > 0 {
                    term = term * xi.powu(p);
                }
            }
            acc = acc + term;
        }
        acc
    }

    /// Substitutes x_i = Σ_j m[i][j] y_j + c[i], giving a polynomial in y.
    pub fn compose_affine(&self, m: &[Vec<S>], c: &[S]) -> Poly<S> {
        assert_eq!(m.len(), self.dim);
        assert_eq!(c.len(), self.dim);
        let out_dim = if self.dim == 0 { 0 } else { m[0].len() };
        let images: Vec<Poly<S>> = (0..self.dim)
            .map(|i| {
                let mut p = Poly::constant(out_dim, c[i].clone());
                for (j, coeff) in m[i].iter().enumerate() {
                    p = p.add(&Poly::var(out_dim, j).scale(coeff));
                }
                p
            })
            .collect();
        let mut out = Poly::zero(out_dim);
        for (e, coeff) in &self.terms {
            let mut term = Poly::constant(out_dim, coeff.clone());
            for (i, &p) in e.iter().enumerate() {
                for _ in 0..p {
                    term = term.mul(&images[i]);
                }
            }
            out = out.add(&term);
        }
        out
    }

    /// Total degree, or None for the zero polynomial.
    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(|e| e.iter().sum()).max()
    }

    pub fn map_coeffs<T: Scalar>(&self, f: impl Fn(&S) -> T) -> Poly<T> {
        let mut out = Poly::zero(self.dim);
        for (e, c) in &self.terms {
            out.add_term(e.clone(), f(c));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{rat, Rat};

    fn xy() -> (Poly<Rat>, Poly<Rat>) {
        (Poly::var(2, 0), Poly::var(2, 1))
    }

    #[test]
    fn arithmetic_and_pruning() {
        let (x, y) = xy();
        let p = x.mul(&y).add(&x.scale(&rat(2, 1)));
        let q = p.sub(&p);
        assert!(q.is_zero());
        assert_eq!(p.eval(&[rat(3, 1), rat(5, 1)]), rat(21, 1));
    }

    #[test]
    fn derivative_rules() {
        let (x, y) = xy();
        // p = x^2 y + y
        let p = x.mul(&x).mul(&y).add(&y);
        assert_eq!(p.partial(0), x.mul(&y).scale(&rat(2, 1)));
        assert_eq!(p.partial(1), x.mul(&x).add(&Poly::constant(2, rat(1, 1))));
        let d = p.directional(&[rat(1, 1), rat(2, 1)]);
        let expect = p.partial(0).add(&p.partial(1).scale(&rat(2, 1)));
        assert_eq!(d, expect);
    }

    #[test]
    fn affine_composition() {
        let (x, y) = xy();
        let p = x.mul(&x).add(&y); // x² + y
        // x = u + v + 1, y = 2v
        let m = vec![vec![rat(1, 1), rat(1, 1)], vec![rat(0, 1), rat(2, 1)]];
        let c = vec![rat(1, 1), rat(0, 1)];
        let q = p.compose_affine(&m, &c);
        let direct = |u: Rat, v: Rat| {
            let xe = u.clone() + v.clone() + rat(1, 1);
            xe.clone() * xe + rat(2, 1) * v
        };
        for (u, v) in [(rat(0, 1), rat(0, 1)), (rat(2, 3), rat(-1, 2))] {
            assert_eq!(q.eval(&[u.clone(), v.clone()]), direct(u, v));
        }
    }
}

//! B-series coefficient maps and the Butcher group.
//!
//! A `BMap` assigns an exact rational coefficient to every rooted tree up to
//! a grade cap. Group-like maps (coefficient 1 at ∅) form the Butcher group
//! under the composition product induced by tree pruning; algebra-like maps
//! (coefficient 0 at ∅) form its Lie algebra and represent modified vector
//! fields. The exp/log pair connects the two grade-by-grade.
//!
//! All arithmetic is exact: order conditions are identities between
//! rationals and the triangular solves would not survive float noise.

use crate::scalar::{format_rat, parse_rat, rat, Rat};
use crate::trees::{enumerate_trees, tree_from_key, tree_key, trees_up_to, RootedTree};
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ButcherError {
    #[error("map is not group-like (coefficient at ∅ must be 1)")]
    NotGroupLike,
    #[error("grade caps differ: {0} vs {1}")]
    CapMismatch(usize, usize),
    #[error("invalid tableau: {0}")]
    InvalidTableau(String),
    #[error("invalid coefficient map: {0}")]
    InvalidMap(String),
}

/// Coefficient map on rooted trees of order ≤ cap, dense within the cap.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BMap {
    cap: usize,
    vals: BTreeMap<RootedTree, Rat>,
}

impl BMap {
    /// The map with the given value at ∅ and zero on every nonempty tree.
    fn constant_at_empty(cap: usize, at_empty: Rat) -> Self {
        let mut vals = BTreeMap::new();
        for u in trees_up_to(cap) {
            vals.insert(u, Rat::zero());
        }
        vals.insert(RootedTree::empty(), at_empty);
        BMap { cap, vals }
    }

    /// Group unit: 1 at ∅, 0 elsewhere.
    pub fn unit(cap: usize) -> Self {
        Self::constant_at_empty(cap, Rat::one())
    }

    /// The zero map (algebra-like).
    pub fn zero(cap: usize) -> Self {
        Self::constant_at_empty(cap, Rat::zero())
    }

    /// Coefficients of the exact solution flow: 1/u! on every tree.
    pub fn exact_flow(cap: usize) -> Self {
        let mut vals = BTreeMap::new();
        for u in trees_up_to(cap) {
            let d = Rat::from_integer(u.density().into());
            vals.insert(u, d.recip());
        }
        BMap { cap, vals }
    }

    /// Builds a map by evaluating `f` on every tree of order ≤ cap.
    pub fn from_fn(cap: usize, mut f: impl FnMut(&RootedTree) -> Rat) -> Self {
        let mut vals = BTreeMap::new();
        for u in trees_up_to(cap) {
            let v = f(&u);
            vals.insert(u, v);
        }
        BMap { cap, vals }
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    pub fn coeff(&self, u: &RootedTree) -> &Rat {
        self.vals
            .get(u)
            .unwrap_or_else(|| panic!("tree {u:?} beyond grade cap {}", self.cap))
    }

    pub fn set_coeff(&mut self, u: RootedTree, v: Rat) {
        assert!(u.order() <= self.cap, "tree beyond grade cap");
        self.vals.insert(u, v);
    }

    pub fn is_group_like(&self) -> bool {
        self.coeff(&RootedTree::empty()).is_one()
    }

    pub fn is_algebra_like(&self) -> bool {
        self.coeff(&RootedTree::empty()).is_zero()
    }

    /// θ^{|u|}-scaling of every coefficient; absorbs a step rescaling
    /// h → θh into the map.
    pub fn scale(&self, theta: &Rat) -> BMap {
        BMap {
            cap: self.cap,
            vals: self
                .vals
                .iter()
                .map(|(u, v)| (u.clone(), theta_pow(theta, u.order()) * v))
                .collect(),
        }
    }

    /// Composition product: coefficients of B_self(B_inner(x)). `self` is
    /// evaluated at the rooted subtree left after pruning, `inner` at the
    /// removed pieces. `inner` must be group-like.
    pub fn compose(&self, inner: &BMap) -> Result<BMap, ButcherError> {
        if !inner.is_group_like() {
            return Err(ButcherError::NotGroupLike);
        }
        if self.cap != inner.cap {
            return Err(ButcherError::CapMismatch(self.cap, inner.cap));
        }
        Ok(self.star(inner))
    }

    /// Bilinear extension of the composition product, no group check.
    fn star(&self, inner: &BMap) -> BMap {
        BMap::from_fn(self.cap, |u| {
            let mut acc = Rat::zero();
            for term in u.coproduct() {
                let mut prod = self.coeff(&term.remainder).clone();
                for v in term.removed.trees() {
                    prod *= inner.coeff(v);
                }
                acc += prod * Rat::from_integer(term.multiplicity.into());
            }
            acc
        })
    }

    /// Group inverse, solved grade by grade. The map must be group-like.
    pub fn inverse(&self) -> BMap {
        assert!(self.is_group_like(), "inverse requires a group-like map");
        let mut inv = BMap::unit(self.cap);
        for n in 1..=self.cap {
            for u in enumerate_trees(n) {
                // (self ⋆ inv)_u = 0 isolates inv_u with unit coefficient
                let mut acc = Rat::zero();
                for term in u.coproduct() {
                    if term.remainder.is_empty() && term.removed.trees() == [u.clone()] {
                        continue;
                    }
                    let mut prod = self.coeff(&term.remainder).clone();
                    for v in term.removed.trees() {
                        prod *= inv.coeff(v);
                    }
                    acc += prod * Rat::from_integer(term.multiplicity.into());
                }
                inv.set_coeff(u, -acc);
            }
        }
        inv
    }

    /// The adjoint integrator: inverse map at step −h.
    pub fn adjoint(&self) -> BMap {
        self.inverse().scale(&rat(-1, 1))
    }

    /// Largest ν ≤ max_order with coefficient 1/u! on every tree of order
    /// ≤ ν. Group-like maps of order ν approximate the flow to O(h^{ν+1}).
    pub fn order_of(&self, max_order: usize) -> usize {
        let max_order = max_order.min(self.cap);
        for n in 1..=max_order {
            for u in enumerate_trees(n) {
                let target = Rat::from_integer(u.density().into()).recip();
                if self.coeff(&u) != &target {
                    return n - 1;
                }
            }
        }
        max_order
    }

    /// Formal time-1 flow of the vector field with these (algebra-like)
    /// coefficients. Integrates γ'(t) = self ⋆ γ(t), γ(0) = unit, exactly:
    /// every coefficient is a rational polynomial in the flow time.
    pub fn exp_star(&self) -> BMap {
        assert!(
            self.is_algebra_like(),
            "exp_star requires an algebra-like map"
        );
        // polynomial in t per tree, ascending degree
        let mut polys: BTreeMap<RootedTree, Vec<Rat>> = BTreeMap::new();
        polys.insert(RootedTree::empty(), vec![Rat::one()]);
        for n in 1..=self.cap {
            for u in enumerate_trees(n) {
                let mut rhs: Vec<Rat> = Vec::new();
                for term in u.coproduct() {
                    if term.remainder.is_empty() {
                        continue; // self is algebra-like
                    }
                    let mut prod = vec![self.coeff(&term.remainder).clone()];
                    for v in term.removed.trees() {
                        prod = poly_mul(&prod, &polys[v]);
                    }
                    poly_add_scaled(
                        &mut rhs,
                        &prod,
                        &Rat::from_integer(term.multiplicity.into()),
                    );
                }
                polys.insert(u, poly_integrate(&rhs));
            }
        }
        BMap::from_fn(self.cap, |u| poly_eval_at_one(&polys[u]))
    }

    /// Inverse of `exp_star`: the unique algebra-like map whose formal flow
    /// has these (group-like) coefficients. Triangular solve by grade.
    pub fn log_star(&self) -> BMap {
        assert!(self.is_group_like(), "log_star requires a group-like map");
        let mut beta = BMap::zero(self.cap);
        for n in 1..=self.cap {
            // the flow of the partial log reproduces self below grade n; the
            // grade-n defect is exactly the missing grade-n component
            let partial = beta.exp_star();
            for u in enumerate_trees(n) {
                let v = self.coeff(&u) - partial.coeff(&u);
                beta.set_coeff(u, v);
            }
        }
        beta
    }

    /// Serializes as a flat JSON object keyed by comma-joined level
    /// sequences ("" for ∅), values as rational strings.
    pub fn to_json(&self) -> serde_json::Value {
        let mut map = serde_json::Map::new();
        for (u, v) in &self.vals {
            map.insert(tree_key(u), serde_json::Value::String(format_rat(v)));
        }
        serde_json::Value::Object(map)
    }

    pub fn from_json(v: &serde_json::Value, cap: usize) -> Result<BMap, ButcherError> {
        let obj = v
            .as_object()
            .ok_or_else(|| ButcherError::InvalidMap("expected a JSON object".into()))?;
        let mut parsed: BTreeMap<RootedTree, Rat> = BTreeMap::new();
        for (k, val) in obj {
            let u = tree_from_key(k).map_err(|e| ButcherError::InvalidMap(e.to_string()))?;
            let s = val
                .as_str()
                .ok_or_else(|| ButcherError::InvalidMap(format!("value for {k:?} not a string")))?;
            let r = parse_rat(s).map_err(ButcherError::InvalidMap)?;
            if u.order() <= cap {
                parsed.insert(u, r);
            }
        }
        for u in trees_up_to(cap) {
            if !parsed.contains_key(&u) {
                return Err(ButcherError::InvalidMap(format!(
                    "missing coefficient for tree {u} within cap {cap}"
                )));
            }
        }
        Ok(BMap { cap, vals: parsed })
    }
}

fn theta_pow(theta: &Rat, n: usize) -> Rat {
    let mut acc = Rat::one();
    for _ in 0..n {
        acc *= theta;
    }
    acc
}

// dense rational polynomials in the flow time, ascending degree

fn poly_mul(a: &[Rat], b: &[Rat]) -> Vec<Rat> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![Rat::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn poly_add_scaled(acc: &mut Vec<Rat>, p: &[Rat], s: &Rat) {
    if acc.len() < p.len() {
        acc.resize(p.len(), Rat::zero());
    }
    for (i, x) in p.iter().enumerate() {
        acc[i] += x * s;
    }
}

fn poly_integrate(p: &[Rat]) -> Vec<Rat> {
    let mut out = vec![Rat::zero(); p.len() + 1];
    for (i, x) in p.iter().enumerate() {
        out[i + 1] = x / Rat::from_integer(((i + 1) as u64).into());
    }
    out
}

fn poly_eval_at_one(p: &[Rat]) -> Rat {
    let mut acc = Rat::zero();
    for x in p {
        acc += x;
    }
    acc
}

/// One order condition per tree of order ≤ p: elementary weight = 1/u!.
pub fn order_conditions(p: usize) -> Vec<(RootedTree, Rat)> {
    let mut out = Vec::new();
    for n in 1..=p {
        for u in enumerate_trees(n) {
            let rhs = Rat::from_integer(u.density().into()).recip();
            out.push((u, rhs));
        }
    }
    out
}

/// First pair of nonempty trees with |u|+|v| ≤ n violating the group-level
/// symplecticness identity δ_{u∘v} + δ_{v∘u} = δ_u δ_v, or None.
pub fn symplectic_violation(delta: &BMap, n: usize) -> Option<(RootedTree, RootedTree)> {
    check_product_identity(delta, n, true)
}

/// First violation of the algebra-level identity β_{u∘v} + β_{v∘u} = 0 for
/// a modified vector field to be Hamiltonian, or None.
pub fn hamiltonian_violation(beta: &BMap, n: usize) -> Option<(RootedTree, RootedTree)> {
    check_product_identity(beta, n, false)
}

fn check_product_identity(
    map: &BMap,
    n: usize,
    rhs_is_product: bool,
) -> Option<(RootedTree, RootedTree)> {
    let n = n.min(map.cap());
    for total in 2..=n {
        for ku in 1..total {
            let kv = total - ku;
            for u in enumerate_trees(ku) {
                for v in enumerate_trees(kv) {
                    let uv = u.butcher_product(&v).expect("nonempty");
                    let vu = v.butcher_product(&u).expect("nonempty");
                    let lhs = map.coeff(&uv) + map.coeff(&vu);
                    let rhs = if rhs_is_product {
                        map.coeff(&u) * map.coeff(&v)
                    } else {
                        Rat::zero()
                    };
                    if lhs != rhs {
                        return Some((u, v));
                    }
                }
            }
        }
    }
    None
}

/// Order of the processed integrator χ⁻¹ ∘ ψ ∘ χ.
pub fn effective_order(psi: &BMap, chi: &BMap, max_order: usize) -> usize {
    assert!(psi.is_group_like() && chi.is_group_like());
    let processed = chi
        .inverse()
        .compose(&psi.compose(chi).expect("group-like"))
        .expect("group-like");
    processed.order_of(max_order)
}

/// A Runge-Kutta tableau with exact rational entries. Abscissae c_i are
/// derived row sums, never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct RKTableau {
    pub name: String,
    pub a: Vec<Vec<Rat>>,
    pub b: Vec<Rat>,
}

#[derive(Serialize, Deserialize)]
struct TableauJson {
    #[serde(default)]
    name: String,
    #[serde(rename = "A")]
    a: Vec<Vec<String>>,
    b: Vec<String>,
}

impl RKTableau {
    pub fn new(name: &str, a: Vec<Vec<Rat>>, b: Vec<Rat>) -> Result<Self, ButcherError> {
        let s = b.len();
        if a.len() != s || a.iter().any(|row| row.len() != s) {
            return Err(ButcherError::InvalidTableau(format!(
                "A must be {s}×{s} to match b"
            )));
        }
        Ok(RKTableau {
            name: name.to_string(),
            a,
            b,
        })
    }

    pub fn stages(&self) -> usize {
        self.b.len()
    }

    /// Row sums c_i = Σ_j a_ij.
    pub fn row_sums(&self) -> Vec<Rat> {
        self.a
            .iter()
            .map(|row| row.iter().fold(Rat::zero(), |acc, x| acc + x))
            .collect()
    }

    /// Exact check of the symplecticness identities
    /// b_i a_ij + b_j a_ji = b_i b_j for all stage pairs.
    pub fn is_symplectic(&self) -> bool {
        let s = self.stages();
        for i in 0..s {
            for j in 0..s {
                let lhs = &self.b[i] * &self.a[i][j] + &self.b[j] * &self.a[j][i];
                let rhs = &self.b[i] * &self.b[j];
                if lhs != rhs {
                    return false;
                }
            }
        }
        true
    }

    pub fn from_json_str(s: &str) -> Result<Self, ButcherError> {
        let raw: TableauJson =
            serde_json::from_str(s).map_err(|e| ButcherError::InvalidTableau(e.to_string()))?;
        let a = raw
            .a
            .iter()
            .map(|row| row.iter().map(|x| parse_rat(x)).collect::<Result<Vec<_>, _>>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(ButcherError::InvalidTableau)?;
        let b = raw
            .b
            .iter()
            .map(|x| parse_rat(x))
            .collect::<Result<Vec<_>, _>>()
            .map_err(ButcherError::InvalidTableau)?;
        RKTableau::new(&raw.name, a, b)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "name": self.name,
            "A": self.a.iter().map(|row| row.iter().map(format_rat).collect::<Vec<_>>()).collect::<Vec<_>>(),
            "b": self.b.iter().map(format_rat).collect::<Vec<_>>(),
        })
    }
}

/// Elementary weights c_u of a tableau for every tree of order ≤ cap, as a
/// group-like coefficient map. The weight of a tree is built from per-stage
/// values that mirror the tree structure:
/// Φ_i([u_1..u_m]) = Π_l Σ_j a_ij Φ_j(u_l), and c_u = Σ_i b_i Φ_i(u).
pub fn elementary_weights(t: &RKTableau, cap: usize) -> BMap {
    let s = t.stages();
    let mut stage_values: BTreeMap<RootedTree, Vec<Rat>> = BTreeMap::new();

    fn phi(
        u: &RootedTree,
        t: &RKTableau,
        s: usize,
        memo: &mut BTreeMap<RootedTree, Vec<Rat>>,
    ) -> Vec<Rat> {
        if let Some(v) = memo.get(u) {
            return v.clone();
        }
        let children = u.children();
        let mut out = vec![Rat::one(); s];
        for c in &children {
            let inner = phi(c, t, s, memo);
            for (i, out_i) in out.iter_mut().enumerate() {
                let mut sum = Rat::zero();
                for (aij, inner_j) in t.a[i].iter().zip(&inner) {
                    sum += aij * inner_j;
                }
                *out_i *= sum;
            }
        }
        memo.insert(u.clone(), out.clone());
        out
    }

    BMap::from_fn(cap, |u| {
        if u.is_empty() {
            return Rat::one();
        }
        let stage = phi(u, t, s, &mut stage_values);
        let mut acc = Rat::zero();
        for (bi, si) in t.b.iter().zip(&stage) {
            acc += bi * si;
        }
        acc
    })
}

/// Classical reference tableaux used across the tests and the CLI fixtures.
pub mod tableaux {
    use super::RKTableau;
    use crate::scalar::rat;

    pub fn euler() -> RKTableau {
        RKTableau::new("euler", vec![vec![rat(0, 1)]], vec![rat(1, 1)]).unwrap()
    }

    pub fn implicit_midpoint() -> RKTableau {
        RKTableau::new("implicit midpoint", vec![vec![rat(1, 2)]], vec![rat(1, 1)]).unwrap()
    }

    pub fn rk4() -> RKTableau {
        let z = || rat(0, 1);
        RKTableau::new(
            "classical RK4",
            vec![
                vec![z(), z(), z(), z()],
                vec![rat(1, 2), z(), z(), z()],
                vec![z(), rat(1, 2), z(), z()],
                vec![z(), z(), rat(1, 1), z()],
            ],
            vec![rat(1, 6), rat(1, 3), rat(1, 3), rat(1, 6)],
        )
        .unwrap()
    }
}

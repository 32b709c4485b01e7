//! Canonical rooted trees and forests.
//!
//! A rooted tree is stored as its level sequence: a depth-first list of
//! vertex depths starting with `1` at the root, each entry at most one more
//! than its predecessor. The encoding is canonical — the subtrees under every
//! vertex are ordered by descending lexicographic comparison of their own
//! encodings — so structural equality is plain encoding equality. The empty
//! tree is the empty sequence and is a first-class value with order 0,
//! symmetry 1 and density 1.

use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TreeError {
    #[error("invalid level sequence: {0}")]
    InvalidLevels(String),
    #[error("operation requires a nonempty tree")]
    EmptyOperand,
}

/// A rooted tree in canonical level-sequence form.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RootedTree {
    levels: Vec<u32>,
}

impl fmt::Debug for RootedTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "t{:?}", self.levels)
    }
}

impl fmt::Display for RootedTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, l) in self.levels.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{l}")?;
        }
        write!(f, "]")
    }
}

impl RootedTree {
    /// The empty tree ∅.
    pub fn empty() -> Self {
        RootedTree { levels: Vec::new() }
    }

    /// The single-vertex tree •.
    pub fn leaf() -> Self {
        RootedTree { levels: vec![1] }
    }

    /// Builds a tree from a level sequence, validating the shape and
    /// canonicalizing the child order. The empty sequence gives ∅.
    pub fn from_levels(levels: &[u32]) -> Result<Self, TreeError> {
        if levels.is_empty() {
            return Ok(Self::empty());
        }
        if levels[0] != 1 {
            return Err(TreeError::InvalidLevels(format!(
                "first entry must be 1, got {}",
                levels[0]
            )));
        }
        for i in 1..levels.len() {
            if levels[i] < 2 || levels[i] > levels[i - 1] + 1 {
                return Err(TreeError::InvalidLevels(format!(
                    "entry {} after {} at position {}",
                    levels[i],
                    levels[i - 1],
                    i
                )));
            }
        }
        Ok(Self::canonicalize(levels))
    }

    fn canonicalize(levels: &[u32]) -> Self {
        let children = split_children(levels);
        let mut canon: Vec<RootedTree> = children
            .into_iter()
            .map(|c| {
                let shifted: Vec<u32> = c.iter().map(|l| l - 1).collect();
                Self::canonicalize(&shifted)
            })
            .collect();
        canon.sort_by(|a, b| b.levels.cmp(&a.levels));
        let mut out = vec![levels[0]];
        let base = levels[0];
        for c in canon {
            out.extend(c.levels.iter().map(|l| l + base));
        }
        RootedTree { levels: out }
    }

    /// Builds the canonical tree whose root has the given subtrees.
    pub fn from_children(children: &[RootedTree]) -> Self {
        let mut sorted: Vec<&RootedTree> = children.iter().filter(|c| !c.is_empty()).collect();
        sorted.sort_by(|a, b| b.levels.cmp(&a.levels));
        let mut levels = vec![1];
        for c in sorted {
            levels.extend(c.levels.iter().map(|l| l + 1));
        }
        RootedTree { levels }
    }

    pub fn levels(&self) -> &[u32] {
        &self.levels
    }

    /// Number of vertices |u|.
    pub fn order(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    /// The subtrees hanging off the root, in stored (descending) order.
    pub fn children(&self) -> Vec<RootedTree> {
        if self.is_empty() {
            return Vec::new();
        }
        split_children(&self.levels)
            .into_iter()
            .map(|c| RootedTree {
                levels: c.iter().map(|l| l - 1).collect(),
            })
            .collect()
    }

    /// σ(u): the order of the symmetry group of u; σ(∅) = 1.
    pub fn symmetry(&self) -> u64 {
        if self.is_empty() {
            return 1;
        }
        let mut groups: BTreeMap<Vec<u32>, (u64, u64)> = BTreeMap::new();
        for c in self.children() {
            let sigma = c.symmetry();
            let e = groups.entry(c.levels).or_insert((0, sigma));
            e.0 += 1;
        }
        let mut acc = 1u64;
        for (_, (mult, sigma)) in groups {
            for k in 1..=mult {
                acc *= k;
            }
            for _ in 0..mult {
                acc *= sigma;
            }
        }
        acc
    }

    /// u!: the density, with ∅! = 1.
    pub fn density(&self) -> u64 {
        if self.is_empty() {
            return 1;
        }
        let mut acc = self.order() as u64;
        for c in self.children() {
            acc *= c.density();
        }
        acc
    }

    /// Butcher product u∘v: grafts the root of `v` onto the root of `self`.
    /// Defined for nonempty operands only.
    pub fn butcher_product(&self, v: &RootedTree) -> Result<RootedTree, TreeError> {
        if self.is_empty() || v.is_empty() {
            return Err(TreeError::EmptyOperand);
        }
        let mut children = self.children();
        children.push(v.clone());
        Ok(RootedTree::from_children(&children))
    }

    /// All prunings of the tree. Each term records the rooted subtree that
    /// remains at the root (∅ for complete uprooting), the forest of removed
    /// pieces, and how many distinct cuts produce that pair.
    pub fn coproduct(&self) -> Vec<CoproductTerm> {
        let mut merged: BTreeMap<(RootedTree, Forest), u64> = BTreeMap::new();
        for (rem, forest, mult) in prunings(self) {
            *merged.entry((rem, forest)).or_insert(0) += mult;
        }
        merged
            .into_iter()
            .map(|((remainder, removed), multiplicity)| CoproductTerm {
                remainder,
                removed,
                multiplicity,
            })
            .collect()
    }
}

/// One pruning term of the composition coproduct.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoproductTerm {
    pub remainder: RootedTree,
    pub removed: Forest,
    pub multiplicity: u64,
}

/// Every admissible pruning including no pruning and complete uprooting.
fn prunings(u: &RootedTree) -> Vec<(RootedTree, Forest, u64)> {
    if u.is_empty() {
        return vec![(RootedTree::empty(), Forest::empty(), 1)];
    }
    // Root kept: combine an independent pruning choice per child, where the
    // child's own uprooting corresponds to cutting the edge above it.
    let mut combos: Vec<(Vec<RootedTree>, Vec<RootedTree>, u64)> =
        vec![(Vec::new(), Vec::new(), 1)];
    for child in u.children() {
        let child_terms = prunings(&child);
        let mut next = Vec::with_capacity(combos.len() * child_terms.len());
        for (kept, removed, mult) in &combos {
            for (c_rem, c_removed, c_mult) in &child_terms {
                let mut kept = kept.clone();
                if !c_rem.is_empty() {
                    kept.push(c_rem.clone());
                }
                let mut removed = removed.clone();
                removed.extend(c_removed.trees().iter().cloned());
                next.push((kept, removed, mult * c_mult));
            }
        }
        combos = next;
    }
    let mut out: Vec<(RootedTree, Forest, u64)> = combos
        .into_iter()
        .map(|(kept, removed, mult)| {
            (
                RootedTree::from_children(&kept),
                Forest::from_trees(removed),
                mult,
            )
        })
        .collect();
    out.push((RootedTree::empty(), Forest::from_trees(vec![u.clone()]), 1));
    out
}

fn split_children(levels: &[u32]) -> Vec<&[u32]> {
    let base = levels[0];
    let mut out = Vec::new();
    let mut start = 1;
    for i in 2..=levels.len() {
        if i == levels.len() || levels[i] == base + 1 {
            if start < i {
                out.push(&levels[start..i]);
            }
            start = i;
        }
    }
    out
}

/// A multiset of nonempty rooted trees. Order-insensitive equality.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Forest {
    trees: Vec<RootedTree>,
}

impl fmt::Debug for Forest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(&self.trees).finish()
    }
}

impl Forest {
    pub fn empty() -> Self {
        Forest { trees: Vec::new() }
    }

    /// Builds a forest, dropping any empty trees and sorting for canonical
    /// multiset storage.
    pub fn from_trees(trees: Vec<RootedTree>) -> Self {
        let mut trees: Vec<RootedTree> = trees.into_iter().filter(|t| !t.is_empty()).collect();
        trees.sort();
        Forest { trees }
    }

    pub fn trees(&self) -> &[RootedTree] {
        &self.trees
    }

    pub fn is_empty(&self) -> bool {
        self.trees.is_empty()
    }

    pub fn len(&self) -> usize {
        self.trees.len()
    }
}

/// All distinct rooted trees with `n` vertices in ascending lexicographic
/// level-sequence order; `n = 0` yields `[∅]`.
pub fn enumerate_trees(n: usize) -> Vec<RootedTree> {
    if n == 0 {
        return vec![RootedTree::empty()];
    }
    // Successor algorithm on canonical level sequences, starting from the
    // chain [1,2,...,n]; each step produces the next sequence in descending
    // lexicographic order.
    let mut out = Vec::new();
    let mut levels: Vec<u32> = (1..=n as u32).collect();
    loop {
        out.push(RootedTree {
            levels: levels.clone(),
        });
        let Some(p) = levels.iter().rposition(|&l| l > 2) else {
            break;
        };
        let q = (0..p).rfind(|&i| levels[i] == levels[p] - 1).expect("parent level");
        let period = p - q;
        for i in p..levels.len() {
            levels[i] = levels[i - period];
        }
    }
    out.sort_by(|a, b| a.levels.cmp(&b.levels));
    out
}

/// All rooted trees of every order `0..=cap`, concatenated in order.
pub fn trees_up_to(cap: usize) -> Vec<RootedTree> {
    (0..=cap).flat_map(enumerate_trees).collect()
}

/// JSON form: a tree is an array of level integers, ∅ is `[]`.
pub fn tree_to_json(u: &RootedTree) -> serde_json::Value {
    serde_json::Value::Array(
        u.levels()
            .iter()
            .map(|&l| serde_json::Value::from(l))
            .collect(),
    )
}

pub fn tree_from_json(v: &serde_json::Value) -> Result<RootedTree, TreeError> {
    let arr = v
        .as_array()
        .ok_or_else(|| TreeError::InvalidLevels(format!("expected array, got {v}")))?;
    let levels: Result<Vec<u32>, TreeError> = arr
        .iter()
        .map(|x| {
            x.as_u64()
                .map(|n| n as u32)
                .ok_or_else(|| TreeError::InvalidLevels(format!("bad level entry {x}")))
        })
        .collect();
    RootedTree::from_levels(&levels?)
}

/// Comma-joined level-sequence key used for trees in JSON object positions;
/// ∅ maps to the empty string.
pub fn tree_key(u: &RootedTree) -> String {
    u.levels()
        .iter()
        .map(|l| l.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

pub fn tree_from_key(key: &str) -> Result<RootedTree, TreeError> {
    if key.is_empty() {
        return Ok(RootedTree::empty());
    }
    let levels: Result<Vec<u32>, _> = key
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<u32>()
                .map_err(|e| TreeError::InvalidLevels(format!("bad key {key:?}: {e}")))
        })
        .collect();
    RootedTree::from_levels(&levels?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(levels: &[u32]) -> RootedTree {
        RootedTree::from_levels(levels).unwrap()
    }

    #[test]
    fn enumeration_counts_small() {
        assert_eq!(enumerate_trees(0).len(), 1);
        assert!(enumerate_trees(0)[0].is_empty());
        assert_eq!(enumerate_trees(1).len(), 1);
        assert_eq!(enumerate_trees(4).len(), 4);
        assert_eq!(enumerate_trees(5).len(), 9);
    }

    #[test]
    fn enumeration_is_lexicographic_and_canonical() {
        for n in 1..=6 {
            let trees = enumerate_trees(n);
            for w in trees.windows(2) {
                assert!(w[0].levels() < w[1].levels());
            }
            for u in &trees {
                assert_eq!(u.order(), n);
                let again = RootedTree::from_levels(u.levels()).unwrap();
                assert_eq!(&again, u);
            }
        }
    }

    #[test]
    fn canonical_form_sorts_children() {
        // leaf-then-chain input normalizes to chain-then-leaf
        assert_eq!(t(&[1, 2, 2, 3]), t(&[1, 2, 3, 2]));
        assert_eq!(t(&[1, 2, 3, 2]).levels(), &[1, 2, 3, 2]);
    }

    #[test]
    fn symmetry_table_values() {
        assert_eq!(t(&[1, 2, 3, 4]).symmetry(), 1);
        assert_eq!(t(&[1, 2, 2, 2]).symmetry(), 6);
        assert_eq!(t(&[1, 2, 2]).symmetry(), 2);
        assert_eq!(RootedTree::empty().symmetry(), 1);
    }

    #[test]
    fn density_table_values() {
        assert_eq!(t(&[1, 2, 3]).density(), 6);
        assert_eq!(t(&[1, 2, 3, 3]).density(), 12);
        assert_eq!(t(&[1, 2, 2, 2]).density(), 4);
        assert_eq!(RootedTree::empty().density(), 1);
    }

    #[test]
    fn butcher_product_examples() {
        let leaf = RootedTree::leaf();
        let chain2 = t(&[1, 2]);
        assert_eq!(leaf.butcher_product(&chain2).unwrap(), t(&[1, 2, 3]));
        assert_eq!(chain2.butcher_product(&leaf).unwrap(), t(&[1, 2, 2]));
        assert_eq!(leaf.butcher_product(&leaf).unwrap(), t(&[1, 2]));
        assert_eq!(
            RootedTree::empty().butcher_product(&leaf),
            Err(TreeError::EmptyOperand)
        );
        // not commutative in general, order always adds
        let a = t(&[1, 2]).butcher_product(&leaf).unwrap();
        let b = leaf.butcher_product(&t(&[1, 2])).unwrap();
        assert_ne!(a, b);
        assert_eq!(a.order(), 3);
    }

    #[test]
    fn coproduct_of_empty_and_leaf() {
        let e = RootedTree::empty().coproduct();
        assert_eq!(e.len(), 1);
        assert!(e[0].remainder.is_empty() && e[0].removed.is_empty());

        let l = RootedTree::leaf().coproduct();
        assert_eq!(l.len(), 2);
        let uproot = l.iter().find(|c| c.remainder.is_empty()).unwrap();
        assert_eq!(uproot.removed.trees(), &[RootedTree::leaf()]);
        let keep = l.iter().find(|c| !c.remainder.is_empty()).unwrap();
        assert!(keep.removed.is_empty());
    }

    #[test]
    fn coproduct_seven_terms() {
        // the 4-vertex tree whose root carries a 2-chain and a leaf
        let u = t(&[1, 2, 3, 2]);
        let terms = u.coproduct();
        assert_eq!(terms.len(), 7);
        assert!(terms.iter().all(|c| c.multiplicity == 1));
        let expect = |rem: &[u32], removed: Vec<&[u32]>| {
            let rem = t(rem);
            let forest = Forest::from_trees(removed.iter().map(|r| t(r)).collect());
            assert!(
                terms
                    .iter()
                    .any(|c| c.remainder == rem && c.removed == forest),
                "missing term {rem:?} ⊗ {forest:?}"
            );
        };
        expect(&[], vec![&[1, 2, 3, 2]]);
        expect(&[1], vec![&[1], &[1, 2]]);
        expect(&[1, 2], vec![&[1, 2]]);
        expect(&[1, 2], vec![&[1], &[1]]);
        expect(&[1, 2, 3], vec![&[1]]);
        expect(&[1, 2, 2], vec![&[1]]);
        expect(&[1, 2, 3, 2], vec![]);
    }

    #[test]
    fn coproduct_multiplicity_counts_cuts() {
        let cherry = t(&[1, 2, 2]);
        let terms = cherry.coproduct();
        let chain2 = t(&[1, 2]);
        let single_leaf_cut = terms
            .iter()
            .find(|c| c.remainder == chain2)
            .expect("cut of one leaf");
        assert_eq!(single_leaf_cut.multiplicity, 2);
        // total multiplicity equals the recursive count of admissible cuts
        fn cut_count(u: &RootedTree) -> u64 {
            if u.is_empty() {
                return 1;
            }
            1 + u.children().iter().map(cut_count).product::<u64>()
        }
        for n in 0..=6 {
            for u in enumerate_trees(n) {
                let total: u64 = u.coproduct().iter().map(|c| c.multiplicity).sum();
                assert_eq!(total, cut_count(&u), "cut count mismatch for {u:?}");
            }
        }
    }

    #[test]
    fn coproduct_contains_both_extremes_once() {
        for n in 1..=6 {
            for u in enumerate_trees(n) {
                let terms = u.coproduct();
                let unpruned: Vec<_> = terms
                    .iter()
                    .filter(|c| c.remainder == u && c.removed.is_empty())
                    .collect();
                assert_eq!(unpruned.len(), 1);
                assert_eq!(unpruned[0].multiplicity, 1);
                let uprooted: Vec<_> = terms
                    .iter()
                    .filter(|c| {
                        c.remainder.is_empty() && c.removed.trees() == std::slice::from_ref(&u)
                    })
                    .collect();
                assert_eq!(uprooted.len(), 1);
                assert_eq!(uprooted[0].multiplicity, 1);
            }
        }
    }

    #[test]
    fn forest_is_order_insensitive() {
        let a = Forest::from_trees(vec![t(&[1]), t(&[1, 2]), t(&[1])]);
        let b = Forest::from_trees(vec![t(&[1, 2]), t(&[1]), t(&[1])]);
        assert_eq!(a, b);
        assert_eq!(a.len(), 3);
    }

    #[test]
    fn json_round_trip() {
        for n in 0..=5 {
            for u in enumerate_trees(n) {
                assert_eq!(tree_from_json(&tree_to_json(&u)).unwrap(), u);
                assert_eq!(tree_from_key(&tree_key(&u)).unwrap(), u);
            }
        }
        assert!(tree_from_json(&serde_json::json!([2, 2])).is_err());
        assert!(tree_from_json(&serde_json::json!([1, 3])).is_err());
    }
}

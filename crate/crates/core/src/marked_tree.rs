//! Finite typed plane trees with the local (ultrametric) topology.
//!
//! Nodes are addressed by Ulam-Harris words: the root is the empty word and
//! the children of `u` are `u1, ..., uk` with no gaps. Each address carries a
//! type in `0..d`. Trees are canonical by construction: node storage is an
//! ordered map over addresses, so tree equality is set equality of
//! `(address, mark)` pairs.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A single typed node: Ulam-Harris address plus a 0-based type index.
///
/// External (JSON, CLI) representations use 1-based marks; the shift happens
/// only at the serialization boundary.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TypedNode {
    pub addr: Vec<u32>,
    pub mark: usize,
}

impl TypedNode {
    pub fn new(addr: Vec<u32>, mark: usize) -> Self {
        TypedNode { addr, mark }
    }

    pub fn height(&self) -> usize {
        self.addr.len()
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TreeError {
    #[error("tree must contain the root (empty address)")]
    MissingRoot,
    #[error("node {0:?} has no parent in the tree")]
    MissingAncestor(Vec<u32>),
    #[error("children of {0:?} are not contiguous 1..k")]
    ChildGap(Vec<u32>),
    #[error("mark {mark} out of range for {d} types")]
    MarkOutOfRange { mark: usize, d: usize },
    #[error("address components must be positive")]
    BadAddress,
    #[error("leaf {0:?} is not a leaf of the base tree")]
    NotALeaf(Vec<u32>),
    #[error("malformed tree JSON: {0}")]
    Json(String),
}

/// A finite marked plane tree over `d` types.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MarkedTree {
    d: usize,
    nodes: BTreeMap<Vec<u32>, usize>,
}

impl MarkedTree {
    /// The single-node tree.
    pub fn leaf(d: usize, root_mark: usize) -> Self {
        assert!(root_mark < d, "root mark out of range");
        let mut nodes = BTreeMap::new();
        nodes.insert(Vec::new(), root_mark);
        MarkedTree { d, nodes }
    }

    /// Builds a tree from `(address, mark)` pairs, validating the tree
    /// conditions: root present, ancestor-closed, gap-free children, marks in
    /// range.
    pub fn from_nodes<I>(d: usize, nodes: I) -> Result<Self, TreeError>
    where
        I: IntoIterator<Item = (Vec<u32>, usize)>,
    {
        let mut map = BTreeMap::new();
        for (addr, mark) in nodes {
            if mark >= d {
                return Err(TreeError::MarkOutOfRange { mark, d });
            }
            if addr.iter().any(|&i| i == 0) {
                return Err(TreeError::BadAddress);
            }
            map.insert(addr, mark);
        }
        let tree = MarkedTree { d, nodes: map };
        tree.validate()?;
        Ok(tree)
    }

    fn validate(&self) -> Result<(), TreeError> {
        if !self.nodes.contains_key(&Vec::new()) {
            return Err(TreeError::MissingRoot);
        }
        for addr in self.nodes.keys() {
            if !addr.is_empty() {
                let parent = &addr[..addr.len() - 1];
                if !self.nodes.contains_key(parent) {
                    return Err(TreeError::MissingAncestor(addr.clone()));
                }
                let last = *addr.last().unwrap();
                if last > 1 {
                    let mut sibling = addr.clone();
                    *sibling.last_mut().unwrap() = last - 1;
                    if !self.nodes.contains_key(&sibling) {
                        return Err(TreeError::ChildGap(parent.to_vec()));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn root_mark(&self) -> usize {
        self.mark(&[]).expect("valid trees contain the root")
    }

    pub fn mark(&self, addr: &[u32]) -> Option<usize> {
        self.nodes.get(addr).copied()
    }

    pub fn contains(&self, addr: &[u32]) -> bool {
        self.nodes.contains_key(addr)
    }

    pub fn nodes(&self) -> impl Iterator<Item = (&Vec<u32>, usize)> {
        self.nodes.iter().map(|(a, &m)| (a, m))
    }

    pub fn height(&self) -> usize {
        self.nodes.keys().map(|a| a.len()).max().unwrap_or(0)
    }

    /// Number of children of the node at `addr`.
    pub fn num_children(&self, addr: &[u32]) -> usize {
        let mut k = 0u32;
        let mut child = addr.to_vec();
        child.push(0);
        loop {
            *child.last_mut().unwrap() = k + 1;
            if self.nodes.contains_key(&child) {
                k += 1;
            } else {
                break;
            }
        }
        k as usize
    }

    /// Offspring counts by type: `k_u(t)`.
    pub fn offspring_counts(&self, addr: &[u32]) -> Vec<u64> {
        let mut counts = vec![0u64; self.d];
        let k = self.num_children(addr);
        let mut child = addr.to_vec();
        child.push(0);
        for i in 1..=k as u32 {
            *child.last_mut().unwrap() = i;
            counts[self.nodes[&child]] += 1;
        }
        counts
    }

    pub fn is_leaf(&self, addr: &[u32]) -> bool {
        self.contains(addr) && self.num_children(addr) == 0
    }

    /// The set of leaves `L_0(t)`.
    pub fn leaves(&self) -> Vec<TypedNode> {
        self.nodes
            .iter()
            .filter(|(a, _)| self.num_children(a) == 0)
            .map(|(a, &m)| TypedNode::new(a.clone(), m))
            .collect()
    }

    /// Census by types: the vector `|t|`.
    pub fn type_counts(&self) -> Vec<u64> {
        let mut counts = vec![0u64; self.d];
        for &m in self.nodes.values() {
            counts[m] += 1;
        }
        counts
    }

    /// The restriction `r_h(t)`: all nodes of height at most `h`.
    pub fn restrict(&self, h: usize) -> MarkedTree {
        let nodes = self
            .nodes
            .iter()
            .filter(|(a, _)| a.len() <= h)
            .map(|(a, &m)| (a.clone(), m))
            .collect();
        MarkedTree { d: self.d, nodes }
    }

    /// Replaces the full subtree rooted at `addr` by the single node at
    /// `addr` (keeping its mark).
    pub fn prune_at(&self, addr: &[u32]) -> MarkedTree {
        assert!(self.contains(addr), "prune point not in tree");
        let nodes = self
            .nodes
            .iter()
            .filter(|(a, _)| !(a.len() > addr.len() && a.starts_with(addr)))
            .map(|(a, &m)| (a.clone(), m))
            .collect();
        MarkedTree { d: self.d, nodes }
    }

    /// Grafts `scion` at the leaf `x`: if the scion's root mark equals the
    /// leaf's mark, returns `t ∪ {xv : v ∈ scion}`; otherwise returns `t`
    /// unchanged.
    pub fn graft(&self, scion: &MarkedTree, x: &TypedNode) -> MarkedTree {
        assert_eq!(self.d, scion.d, "type-count mismatch");
        assert_eq!(self.mark(&x.addr), Some(x.mark), "graft point not in tree");
        assert!(self.is_leaf(&x.addr), "graft point is not a leaf");
        if scion.root_mark() != x.mark {
            return self.clone();
        }
        let mut nodes = self.nodes.clone();
        for (v, &m) in &scion.nodes {
            let mut addr = x.addr.clone();
            addr.extend_from_slice(v);
            nodes.insert(addr, m);
        }
        MarkedTree { d: self.d, nodes }
    }

    /// How far two trees agree under restrictions.
    pub fn agreement(&self, other: &MarkedTree) -> Agreement {
        assert_eq!(self.d, other.d, "type-count mismatch");
        if self.root_mark() != other.root_mark() {
            return Agreement::RootsDiffer;
        }
        if self == other {
            return Agreement::Identical;
        }
        let max_h = self.height().max(other.height());
        for h in 1..=max_h {
            if self.restrict(h) != other.restrict(h) {
                return Agreement::UpTo(h - 1);
            }
        }
        // Same height-restrictions everywhere but unequal cannot happen.
        unreachable!("trees differ but all restrictions agree")
    }

    /// The ultrametric distance `2^{-max{h : r_h(t) = r_h(t')}}`, with the
    /// convention that trees whose roots differ (so that no `h` qualifies)
    /// are at the metric's supremum 1.
    pub fn local_distance(&self, other: &MarkedTree) -> BigRational {
        match self.agreement(other) {
            Agreement::Identical => BigRational::from_integer(0.into()),
            Agreement::RootsDiffer => BigRational::one(),
            Agreement::UpTo(h) => {
                BigRational::new(BigInt::one(), BigInt::from(2u32).pow(h as u32))
            }
        }
    }

    /// Canonical JSON: array of `{"addr":[...],"mark":m}` with 1-based
    /// marks, children sorted by address.
    pub fn to_json(&self) -> String {
        let repr: Vec<NodeRepr> = self
            .nodes
            .iter()
            .map(|(a, &m)| NodeRepr { addr: a.clone(), mark: m + 1 })
            .collect();
        serde_json::to_string(&repr).expect("tree serialization cannot fail")
    }

    pub fn from_json(d: usize, s: &str) -> Result<Self, TreeError> {
        let repr: Vec<NodeRepr> =
            serde_json::from_str(s).map_err(|e| TreeError::Json(e.to_string()))?;
        let mut nodes = Vec::with_capacity(repr.len());
        for n in repr {
            if n.mark == 0 || n.mark > d {
                return Err(TreeError::MarkOutOfRange { mark: n.mark, d });
            }
            nodes.push((n.addr, n.mark - 1));
        }
        MarkedTree::from_nodes(d, nodes)
    }
}

#[derive(Serialize, Deserialize)]
struct NodeRepr {
    addr: Vec<u32>,
    mark: usize,
}

/// Result of comparing two trees level by level.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Agreement {
    Identical,
    /// Restrictions agree up to height `h` and differ at `h + 1`.
    UpTo(usize),
    /// Already the roots differ; the distance maximum is taken over an
    /// empty set and we return the conventional supremum.
    RootsDiffer,
}

/// The event `T(t, x)`: all trees obtained by grafting some tree at the
/// leaf `x` of `base`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraftClass {
    base: MarkedTree,
    leaf: TypedNode,
}

impl GraftClass {
    pub fn new(base: MarkedTree, leaf: TypedNode) -> Result<Self, TreeError> {
        if base.mark(&leaf.addr) != Some(leaf.mark) || !base.is_leaf(&leaf.addr) {
            return Err(TreeError::NotALeaf(leaf.addr));
        }
        Ok(GraftClass { base, leaf })
    }

    pub fn base(&self) -> &MarkedTree {
        &self.base
    }

    pub fn leaf(&self) -> &TypedNode {
        &self.leaf
    }

    /// Membership test: `t ∈ T(base, x)` iff pruning `t` at the leaf address
    /// recovers the base tree.
    pub fn matches(&self, t: &MarkedTree) -> bool {
        if t.d() != self.base.d() || !t.contains(&self.leaf.addr) {
            return false;
        }
        t.prune_at(&self.leaf.addr) == self.base
    }
}

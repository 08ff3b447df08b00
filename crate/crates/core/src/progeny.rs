//! Exact total-progeny-by-type laws, by two independent routes:
//!
//! 1. summation of the tree law over all trees with a given census
//!    (organized as a census-bounded recursion over offspring vectors), and
//! 2. the random-walk determinant representation, which expresses the census
//!    probability through `d` independent `d`-dimensional walks and the
//!    determinant of the matrix built from their realized sums.
//!
//! Also: the elementary-forest determinant expansion, the type-tree
//! expansion of the walk determinant, and the joint law of type-pair counts.
//!
//! All engines here use exact rational arithmetic; the determinant carries
//! signed terms and cancellation, so floats are never good enough.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::lattice::{self, Atoms};
use crate::linalg::RatMatrix;
use crate::marked_tree::MarkedTree;
use crate::offspring::OffspringSpec;
use crate::ratio;

pub const DEFAULT_CENSUS_CAP: usize = 10;

/// Forest determinant expansions are enumerations over rooted forests on the
/// type set; they grow like `(d+1)^(d-1)`.
pub const MAX_FOREST_DIMENSION: usize = 8;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ProgenyError {
    #[error("census total {total} exceeds the cap {cap}")]
    CapExceeded { total: u64, cap: usize },
    #[error("forest expansion limited to d <= {max}, got {d}", max = MAX_FOREST_DIMENSION)]
    DimensionTooLarge { d: usize },
}

/// Exact n-step law of one of the census walks: the n-fold convolution of an
/// offspring law viewed on the lattice.
#[derive(Debug, Clone)]
pub struct WalkAtomTable {
    pub dimension: usize,
    pub steps: u64,
    pub atoms: Atoms,
}

impl WalkAtomTable {
    pub fn prob(&self, x: &[i64]) -> BigRational {
        self.atoms.get(x).cloned().unwrap_or_else(BigRational::zero)
    }
}

fn law_as_atoms(spec: &OffspringSpec, i: usize) -> Atoms {
    spec.law(i)
        .iter()
        .map(|(k, p)| (k.iter().map(|&x| x as i64).collect(), p.clone()))
        .collect()
}

/// Exact law of `S_{i,n}`, the sum of `n` independent offspring vectors of
/// type `i`. `n = 0` gives the point mass at the origin.
pub fn walk_pmf(spec: &OffspringSpec, i: usize, n: u64) -> WalkAtomTable {
    let base = law_as_atoms(spec, i);
    WalkAtomTable {
        dimension: spec.d(),
        steps: n,
        atoms: lattice::convolve_power(&base, n, spec.d()),
    }
}

/// Probability of the finite tree `t` under the Galton-Watson law rooted at
/// the tree's own root type:
/// `prod_u [k^(1)_u! ... k^(d)_u! / k_u!] p^(M(u))(k_u(t))`.
pub fn tree_probability(spec: &OffspringSpec, t: &MarkedTree) -> BigRational {
    assert_eq!(spec.d(), t.d(), "type-count mismatch");
    let mut acc = BigRational::one();
    for (addr, mark) in t.nodes() {
        let counts = t.offspring_counts(addr);
        let p = spec.prob(mark, &counts);
        if p.is_zero() {
            return BigRational::zero();
        }
        acc *= ratio::type_order_factor(&counts) * p;
    }
    acc
}

/// Memoizing engine for exact census probabilities `P_r(|tau| = k)`.
///
/// State of the recursion: the multiset of types of the sub-trees still to
/// be generated, plus the census they must jointly produce. Sub-trees are
/// independent, so the value depends on the pending roots only through
/// their type counts.
pub struct ProgenyEngine<'a> {
    spec: &'a OffspringSpec,
    memo: HashMap<(Vec<u64>, Vec<u64>), BigRational>,
}

impl<'a> ProgenyEngine<'a> {
    pub fn new(spec: &'a OffspringSpec) -> Self {
        ProgenyEngine { spec, memo: HashMap::new() }
    }

    /// `P_r(|tau| = k)`, exact.
    pub fn census_prob(&mut self, r: usize, k: &[u64]) -> BigRational {
        if k[r] == 0 {
            return BigRational::zero();
        }
        let mut pending = vec![0u64; self.spec.d()];
        pending[r] = 1;
        self.forest_prob(pending, k.to_vec())
    }

    fn forest_prob(&mut self, pending: Vec<u64>, census: Vec<u64>) -> BigRational {
        if pending.iter().all(|&x| x == 0) {
            return if census.iter().all(|&x| x == 0) {
                BigRational::one()
            } else {
                BigRational::zero()
            };
        }
        // each pending root still needs its own census slot
        if pending.iter().zip(&census).any(|(&p, &m)| p > m) {
            return BigRational::zero();
        }
        if let Some(v) = self.memo.get(&(pending.clone(), census.clone())) {
            return v.clone();
        }
        let i = pending.iter().position(|&x| x > 0).unwrap();
        let mut rest = pending.clone();
        rest[i] -= 1;
        let mut remaining = census.clone();
        remaining[i] -= 1;

        let mut acc = BigRational::zero();
        let law: Vec<(Vec<u64>, BigRational)> =
            self.spec.law(i).iter().map(|(k, p)| (k.clone(), p.clone())).collect();
        for (c, p) in law {
            let next_pending: Vec<u64> =
                rest.iter().zip(&c).map(|(&a, &b)| a + b).collect();
            if next_pending.iter().zip(&remaining).any(|(&a, &m)| a > m) {
                continue;
            }
            acc += p * self.forest_prob(next_pending, remaining.clone());
        }
        self.memo.insert((pending, census), acc.clone());
        acc
    }
}

/// All census vectors `k` in `N^d` with `|k| <= cap`.
pub fn censuses_up_to(d: usize, cap: usize) -> Vec<Vec<u64>> {
    let mut out = Vec::new();
    let mut current = vec![0u64; d];
    fn rec(d: usize, pos: usize, left: u64, current: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
        if pos == d {
            out.push(current.clone());
            return;
        }
        for v in 0..=left {
            current[pos] = v;
            rec(d, pos + 1, left - v, current, out);
        }
        current[pos] = 0;
    }
    rec(d, 0, cap as u64, &mut current, &mut out);
    out.sort();
    out
}

/// `P_r(|tau| = k)` by direct summation over trees; the brute-force side of
/// the dual-route check.
pub fn enumerate_progeny(
    spec: &OffspringSpec,
    r: usize,
    k: &[u64],
    cap: usize,
) -> Result<BigRational, ProgenyError> {
    let total: u64 = k.iter().sum();
    if total > cap as u64 {
        return Err(ProgenyError::CapExceeded { total, cap });
    }
    Ok(ProgenyEngine::new(spec).census_prob(r, k))
}

/// All census probabilities with `|k| <= cap` for root type `r`; zero rows
/// are omitted.
pub fn progeny_table(
    spec: &OffspringSpec,
    r: usize,
    cap: usize,
) -> std::collections::BTreeMap<Vec<u64>, BigRational> {
    let mut engine = ProgenyEngine::new(spec);
    let mut out = std::collections::BTreeMap::new();
    for k in censuses_up_to(spec.d(), cap) {
        let p = engine.census_prob(r, &k);
        if !p.is_zero() {
            out.insert(k, p);
        }
    }
    out
}

/// Explicitly enumerates every supported plane tree with root type `r` and
/// census exactly `k`. Intended for small censuses (oracles, conditional
/// laws); the census cap guards runaway enumeration.
pub fn enumerate_trees(
    spec: &OffspringSpec,
    r: usize,
    k: &[u64],
    cap: usize,
) -> Result<Vec<MarkedTree>, ProgenyError> {
    let total: u64 = k.iter().sum();
    if total > cap as u64 {
        return Err(ProgenyError::CapExceeded { total, cap });
    }
    let mut out = Vec::new();
    if k[r] == 0 {
        return Ok(out);
    }
    let mut remaining = k.to_vec();
    remaining[r] -= 1;
    let mut nodes: Vec<(Vec<u32>, usize)> = vec![(Vec::new(), r)];
    let mut queue: Vec<(Vec<u32>, usize)> = vec![(Vec::new(), r)];
    extend_tree(spec, &mut nodes, &mut queue, 0, &mut remaining, &mut out);
    Ok(out)
}

fn extend_tree(
    spec: &OffspringSpec,
    nodes: &mut Vec<(Vec<u32>, usize)>,
    queue: &mut Vec<(Vec<u32>, usize)>,
    next: usize,
    remaining: &mut Vec<u64>,
    out: &mut Vec<MarkedTree>,
) {
    if next == queue.len() {
        if remaining.iter().all(|&x| x == 0) {
            out.push(
                MarkedTree::from_nodes(spec.d(), nodes.clone())
                    .expect("generated trees are valid"),
            );
        }
        return;
    }
    let (addr, mark) = queue[next].clone();
    let atoms: Vec<Vec<u64>> = spec.law(mark).keys().cloned().collect();
    for c in atoms {
        if c.iter().zip(remaining.iter()).any(|(&ci, &mi)| ci > mi) {
            continue;
        }
        for (i, &ci) in c.iter().enumerate() {
            remaining[i] -= ci;
        }
        // all ordered type words with count vector c
        let mut word = Vec::new();
        emit_words(spec, &c.clone(), &mut word, addr.clone(), nodes, queue, next, remaining, out);
        for (i, &ci) in c.iter().enumerate() {
            remaining[i] += ci;
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn emit_words(
    spec: &OffspringSpec,
    counts_left: &[u64],
    word: &mut Vec<usize>,
    addr: Vec<u32>,
    nodes: &mut Vec<(Vec<u32>, usize)>,
    queue: &mut Vec<(Vec<u32>, usize)>,
    next: usize,
    remaining: &mut Vec<u64>,
    out: &mut Vec<MarkedTree>,
) {
    if counts_left.iter().all(|&x| x == 0) {
        let base_nodes = nodes.len();
        let base_queue = queue.len();
        for (pos, &ty) in word.iter().enumerate() {
            let mut child = addr.clone();
            child.push(pos as u32 + 1);
            nodes.push((child.clone(), ty));
            queue.push((child, ty));
        }
        extend_tree(spec, nodes, queue, next + 1, remaining, out);
        nodes.truncate(base_nodes);
        queue.truncate(base_queue);
        return;
    }
    for ty in 0..counts_left.len() {
        if counts_left[ty] == 0 {
            continue;
        }
        let mut left = counts_left.to_vec();
        left[ty] -= 1;
        word.push(ty);
        emit_words(spec, &left, word, addr.clone(), nodes, queue, next, remaining, out);
        word.pop();
    }
}

/// The walk-representation engine. Atoms giving birth outside the kept
/// type set are dropped when a census has zero components, which makes the
/// projected laws sub-probabilities; the determinant identity is formal in
/// the atom weights, so that is fine.
///
/// Step laws are cached incrementally per kept-type set, so sweeping a
/// whole census range costs one convolution ladder instead of one
/// convolution power per census.
pub struct WalksEngine<'a> {
    spec: &'a OffspringSpec,
    ladders: HashMap<Vec<usize>, Vec<Ladder>>,
}

struct Ladder {
    law: Atoms,
    /// `tables[n]` is the exact n-step law of the projected walk.
    tables: Vec<Atoms>,
}

impl Ladder {
    fn ensure(&mut self, steps: u64) {
        while self.tables.len() <= steps as usize {
            let next = lattice::convolve(self.tables.last().unwrap(), &self.law);
            self.tables.push(next);
        }
    }
}

impl<'a> WalksEngine<'a> {
    pub fn new(spec: &'a OffspringSpec) -> Self {
        WalksEngine { spec, ladders: HashMap::new() }
    }

    fn ladders_for(&mut self, kept: &[usize]) -> &mut Vec<Ladder> {
        if !self.ladders.contains_key(kept) {
            let d2 = kept.len();
            let built: Vec<Ladder> = kept
                .iter()
                .map(|&i| {
                    let law: Atoms = self
                        .spec
                        .law(i)
                        .iter()
                        .filter(|(c, _)| {
                            (0..self.spec.d()).all(|j| kept.contains(&j) || c[j] == 0)
                        })
                        .map(|(c, p)| {
                            let proj: Vec<i64> =
                                kept.iter().map(|&j| c[j] as i64).collect();
                            (proj, p.clone())
                        })
                        .collect();
                    Ladder { law, tables: vec![lattice::origin_mass(d2)] }
                })
                .collect();
            self.ladders.insert(kept.to_vec(), built);
        }
        self.ladders.get_mut(kept).unwrap()
    }

    /// `P_r(|tau| = k)` through the determinant representation:
    /// `(1 / prod k_i) E[det S(k, r); S_k + e_r = k]`.
    pub fn census_prob(&mut self, r: usize, k: &[u64]) -> BigRational {
        if k[r] == 0 {
            return BigRational::zero();
        }
        let kept: Vec<usize> = (0..self.spec.d()).filter(|&i| k[i] >= 1).collect();
        let root = kept.iter().position(|&i| i == r).expect("k[r] >= 1");
        let counts: Vec<u64> = kept.iter().map(|&i| k[i]).collect();
        let ladders = self.ladders_for(&kept);
        for (ladder, &n) in ladders.iter_mut().zip(&counts) {
            ladder.ensure(n);
        }
        let tables: Vec<&Atoms> = ladders
            .iter()
            .zip(&counts)
            .map(|(ladder, &n)| &ladder.tables[n as usize])
            .collect();
        let mut target: Vec<i64> = counts.iter().map(|&x| x as i64).collect();
        target[root] -= 1;

        let mut acc = BigRational::zero();
        let mut realized: Vec<Vec<i64>> = Vec::with_capacity(kept.len());
        sum_tuples(&tables, &target, root, &mut realized, &BigRational::one(), &mut acc);

        let denom = counts.iter().fold(BigInt::one(), |a, &ki| a * BigInt::from(ki));
        acc / BigRational::from(denom)
    }

    /// Exact probability `P_r(B = kappa)` of the full matrix of type-pair
    /// counts: `det(Delta(k) - kappa) prod_j P(S_{j,k_j} = kappa_j) / k_j`.
    pub fn pair_counts_pmf(&mut self, r: usize, kappa: &TypePairCounts) -> BigRational {
        let d = self.spec.d();
        let k = kappa.census(r);
        // types that never appear cannot have children
        for j in 0..d {
            if k[j] == 0 && (0..d).any(|i| kappa.kappa[i][j] > 0) {
                return BigRational::zero();
            }
        }
        if k[r] == 0 {
            return BigRational::zero();
        }
        let kept: Vec<usize> = (0..d).filter(|&i| k[i] >= 1).collect();
        let counts: Vec<u64> = kept.iter().map(|&i| k[i]).collect();
        let d2 = kept.len();
        let matrix: RatMatrix = (0..d2)
            .map(|i| {
                (0..d2)
                    .map(|j| {
                        let diag = if i == j { counts[i] as i64 } else { 0 };
                        let v = diag - kappa.kappa[kept[i]][kept[j]] as i64;
                        BigRational::from(BigInt::from(v))
                    })
                    .collect()
            })
            .collect();
        let det = crate::linalg::rat_det(&matrix);
        if det.is_zero() {
            return BigRational::zero();
        }
        let ladders = self.ladders_for(&kept);
        let mut acc = det;
        for (jj, &j) in kept.iter().enumerate() {
            ladders[jj].ensure(counts[jj]);
            let table = &ladders[jj].tables[counts[jj] as usize];
            let col: Vec<i64> = kept.iter().map(|&i| kappa.kappa[i][j] as i64).collect();
            let p = table.get(&col).cloned().unwrap_or_else(BigRational::zero);
            if p.is_zero() {
                return BigRational::zero();
            }
            acc *= p / BigRational::from(BigInt::from(counts[jj]));
        }
        acc
    }
}

/// One-shot convenience wrapper around [`WalksEngine::census_prob`].
///
/// Censuses with zero components are handled by projecting the system onto
/// the types actually present and applying the formula there.
pub fn progeny_via_walks(
    spec: &OffspringSpec,
    r: usize,
    k: &[u64],
    cap: usize,
) -> Result<BigRational, ProgenyError> {
    let total: u64 = k.iter().sum();
    if total > cap as u64 {
        return Err(ProgenyError::CapExceeded { total, cap });
    }
    Ok(WalksEngine::new(spec).census_prob(r, k))
}

fn sum_tuples(
    tables: &[&Atoms],
    target: &[i64],
    root: usize,
    realized: &mut Vec<Vec<i64>>,
    weight: &BigRational,
    acc: &mut BigRational,
) {
    let level = realized.len();
    let partial: Vec<i64> = (0..target.len())
        .map(|j| realized.iter().map(|s| s[j]).sum())
        .collect();
    if level == tables.len() - 1 {
        let need: Vec<i64> = target.iter().zip(&partial).map(|(t, p)| t - p).collect();
        if need.iter().any(|&x| x < 0) {
            return;
        }
        if let Some(p) = tables[level].get(&need) {
            realized.push(need);
            let det = dets_tree_expansion(realized, root);
            if !det.is_zero() {
                *acc += weight * p * BigRational::from(det);
            }
            realized.pop();
        }
        return;
    }
    for (s, p) in tables[level] {
        if s.iter().zip(target.iter().zip(&partial)).any(|(&si, (&t, &pa))| pa + si > t) {
            continue;
        }
        realized.push(s.clone());
        let w = weight * p;
        sum_tuples(tables, target, root, realized, &w, acc);
        realized.pop();
    }
}

/// The matrix `S(k, r)` built from realized per-type walk sums:
/// `S_ij = -S_i^(j) + (S^(j) + 1_{r=i}) 1_{i=j}` where `S^(j)` is the j-th
/// coordinate of the total sum.
pub fn build_s_matrix(realized: &[Vec<i64>], r: usize) -> RatMatrix {
    let d = realized.len();
    let totals: Vec<i64> = (0..d).map(|j| realized.iter().map(|s| s[j]).sum()).collect();
    (0..d)
        .map(|i| {
            (0..d)
                .map(|j| {
                    let mut v = -realized[i][j];
                    if i == j {
                        v += totals[j] + i64::from(r == i);
                    }
                    BigRational::from(BigInt::from(v))
                })
                .collect()
        })
        .collect()
}

/// A rooted tree on the type set, one node per type, encoded as a parent
/// map (`None` for the root). The set of such trees is in bijection with
/// the marked trees carrying one individual of each type.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeTree {
    pub root: usize,
    pub parent: Vec<Option<usize>>,
}

/// All rooted trees on `d` labeled vertices with a fixed root `r`; there
/// are `d^(d-2)` of them for `d >= 2`.
pub fn enumerate_type_trees(d: usize, r: usize) -> Result<Vec<TypeTree>, ProgenyError> {
    if d > MAX_FOREST_DIMENSION {
        return Err(ProgenyError::DimensionTooLarge { d });
    }
    let mut out = Vec::new();
    let mut parent: Vec<Option<usize>> = vec![None; d];
    fn assign(
        d: usize,
        r: usize,
        v: usize,
        parent: &mut Vec<Option<usize>>,
        out: &mut Vec<TypeTree>,
    ) {
        if v == d {
            out.push(TypeTree { root: r, parent: parent.clone() });
            return;
        }
        if v == r {
            assign(d, r, v + 1, parent, out);
            return;
        }
        for p in 0..d {
            if p == v {
                continue;
            }
            // adding the edge v -> p must not close a cycle through v
            let mut cur = Some(p);
            let mut cycle = false;
            while let Some(c) = cur {
                if c == v {
                    cycle = true;
                    break;
                }
                cur = parent[c];
            }
            if cycle {
                continue;
            }
            parent[v] = Some(p);
            assign(d, r, v + 1, parent, out);
            parent[v] = None;
        }
    }
    assign(d, r, 0, &mut parent, &mut out);
    Ok(out)
}

/// All rooted forests on `d` labeled vertices (every vertex has a parent in
/// the vertex set or is a root), as parent maps.
fn enumerate_forests(d: usize) -> Vec<Vec<Option<usize>>> {
    let mut out = Vec::new();
    let mut parent: Vec<Option<usize>> = vec![None; d];
    fn assign(d: usize, v: usize, parent: &mut Vec<Option<usize>>, out: &mut Vec<Vec<Option<usize>>>) {
        if v == d {
            out.push(parent.clone());
            return;
        }
        // v may be a root,
        parent[v] = None;
        assign(d, v + 1, parent, out);
        // or attach to any other vertex without closing a cycle
        for p in 0..d {
            if p == v {
                continue;
            }
            let mut cur = Some(p);
            let mut cycle = false;
            while let Some(c) = cur {
                if c == v {
                    cycle = true;
                    break;
                }
                cur = parent[c];
            }
            if cycle {
                continue;
            }
            parent[v] = Some(p);
            assign(d, v + 1, parent, out);
            parent[v] = None;
        }
    }
    assign(d, 0, &mut parent, &mut out);
    out
}

/// Determinant of a `d x d` matrix via the elementary-forest expansion
/// `(-1)^d sum_f prod_j m_{j_f, j}` with the convention
/// `m_{0,j} = -sum_i m_{ij}`. Equals the ordinary determinant.
pub fn det_elementary_forests(m: &RatMatrix) -> Result<BigRational, ProgenyError> {
    let d = m.len();
    if d > MAX_FOREST_DIMENSION {
        return Err(ProgenyError::DimensionTooLarge { d });
    }
    let column_sums: Vec<BigRational> = (0..d)
        .map(|j| -(0..d).fold(BigRational::zero(), |s, i| s + &m[i][j]))
        .collect();
    let mut acc = BigRational::zero();
    for forest in enumerate_forests(d) {
        let mut term = BigRational::one();
        for j in 0..d {
            let factor = match forest[j] {
                None => column_sums[j].clone(),
                Some(i) => m[i][j].clone(),
            };
            if factor.is_zero() {
                term = BigRational::zero();
                break;
            }
            term *= factor;
        }
        acc += term;
    }
    if d % 2 == 1 {
        acc = -acc;
    }
    Ok(acc)
}

/// The type-tree expansion of `det S(k, r)` at a realization of the walk
/// sums: `sum_{t in T_r} prod_{j != r} S^(j)_{j_t}` where `j_t` is the type
/// of the parent of `j` in `t`. Equals the ordinary determinant of
/// [`build_s_matrix`] for every realization.
pub fn dets_tree_expansion(realized: &[Vec<i64>], r: usize) -> BigInt {
    let d = realized.len();
    let trees = enumerate_type_trees(d, r).expect("dimension checked by caller");
    let mut acc = BigInt::zero();
    for t in trees {
        let mut term = BigInt::one();
        for j in 0..d {
            if j == r {
                continue;
            }
            let p = t.parent[j].expect("non-root has a parent");
            term *= BigInt::from(realized[p][j]);
            if term.is_zero() {
                break;
            }
        }
        acc += term;
    }
    acc
}

/// Joint counts `kappa_ij` = number of type-i individuals whose parent has
/// type j.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypePairCounts {
    pub kappa: Vec<Vec<u64>>,
}

impl TypePairCounts {
    pub fn new(kappa: Vec<Vec<u64>>) -> Self {
        TypePairCounts { kappa }
    }

    /// Column `j`: the offspring-type counts produced by all type-j parents.
    pub fn column(&self, j: usize) -> Vec<u64> {
        (0..self.kappa.len()).map(|i| self.kappa[i][j]).collect()
    }

    /// Census implied by the pair counts with root type `r`.
    pub fn census(&self, r: usize) -> Vec<u64> {
        let d = self.kappa.len();
        (0..d)
            .map(|i| u64::from(i == r) + (0..d).map(|j| self.kappa[i][j]).sum::<u64>())
            .collect()
    }
}

/// One-shot convenience wrapper around [`WalksEngine::pair_counts_pmf`].
pub fn pair_counts_pmf(
    spec: &OffspringSpec,
    r: usize,
    kappa: &TypePairCounts,
) -> BigRational {
    WalksEngine::new(spec).pair_counts_pmf(r, kappa)
}

/// All pair-count matrices consistent with census `k` and root `r`
/// (columns sum to `k - e_r`).
pub fn pair_counts_for_census(r: usize, k: &[u64]) -> Vec<TypePairCounts> {
    let d = k.len();
    let mut residual = k.to_vec();
    if residual[r] == 0 {
        return Vec::new();
    }
    residual[r] -= 1;
    // enumerate kappa row by row: row i splits residual[i] over d columns
    let mut rows: Vec<Vec<Vec<u64>>> = Vec::with_capacity(d);
    for i in 0..d {
        let mut splits = Vec::new();
        let mut cur = vec![0u64; d];
        fn split(pos: usize, left: u64, d: usize, cur: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
            if pos == d - 1 {
                cur[pos] = left;
                out.push(cur.clone());
                return;
            }
            for v in 0..=left {
                cur[pos] = v;
                split(pos + 1, left - v, d, cur, out);
            }
        }
        split(0, residual[i], d, &mut cur, &mut splits);
        rows.push(splits);
    }
    let mut out = Vec::new();
    let mut chosen: Vec<Vec<u64>> = Vec::with_capacity(d);
    fn combine(
        rows: &[Vec<Vec<u64>>],
        chosen: &mut Vec<Vec<u64>>,
        out: &mut Vec<TypePairCounts>,
    ) {
        if chosen.len() == rows.len() {
            out.push(TypePairCounts::new(chosen.clone()));
            return;
        }
        for row in &rows[chosen.len()] {
            chosen.push(row.clone());
            combine(rows, chosen, out);
            chosen.pop();
        }
    }
    combine(&rows, &mut chosen, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::rat_det;
    use crate::presets;
    use crate::ratio::q;

    #[test]
    fn tree_probability_examples() {
        let spec = presets::two_type_uniform();
        let single = MarkedTree::leaf(2, 0);
        assert_eq!(tree_probability(&spec, &single), q(1, 4));

        let with_child =
            MarkedTree::from_nodes(2, vec![(vec![], 0), (vec![1], 1)]).unwrap();
        assert_eq!(tree_probability(&spec, &with_child), q(1, 16));

        let mono = presets::monotype_binary();
        let three = MarkedTree::from_nodes(
            1,
            vec![(vec![], 0), (vec![1], 0), (vec![2], 0)],
        )
        .unwrap();
        assert_eq!(tree_probability(&mono, &three), q(1, 8));
    }

    #[test]
    fn enumerate_progeny_examples() {
        let spec = presets::two_type_uniform();
        assert_eq!(enumerate_progeny(&spec, 0, &[1, 0], 10).unwrap(), q(1, 4));
        assert_eq!(enumerate_progeny(&spec, 0, &[2, 0], 10).unwrap(), q(1, 16));
        assert_eq!(enumerate_progeny(&spec, 0, &[1, 1], 10).unwrap(), q(1, 16));
        assert_eq!(
            enumerate_progeny(&spec, 0, &[15, 0], 10),
            Err(ProgenyError::CapExceeded { total: 15, cap: 10 })
        );
    }

    #[test]
    fn enumeration_matches_literal_tree_sum() {
        // the recursion must equal the literal sum of tree_probability over
        // all plane trees with the census
        for spec in [presets::two_type_uniform(), presets::asymmetric_critical()] {
            for k in censuses_up_to(2, 4) {
                for r in 0..2 {
                    let direct = enumerate_progeny(&spec, r, &k, 10).unwrap();
                    let trees = enumerate_trees(&spec, r, &k, 10).unwrap();
                    let literal = trees
                        .iter()
                        .map(|t| tree_probability(&spec, t))
                        .fold(BigRational::zero(), |a, b| a + b);
                    assert_eq!(direct, literal, "spec mismatch at r={r}, k={k:?}");
                }
            }
        }
    }

    #[test]
    fn walk_pmf_examples() {
        let spec = presets::two_type_uniform();
        let t0 = walk_pmf(&spec, 0, 0);
        assert_eq!(t0.atoms.len(), 1);
        assert_eq!(t0.prob(&[0, 0]), q(1, 1));

        let t2 = walk_pmf(&spec, 0, 2);
        assert_eq!(t2.prob(&[2, 2]), q(1, 16));

        let mono = presets::monotype_binary();
        let t3 = walk_pmf(&mono, 0, 3);
        assert_eq!(t3.prob(&[0]), q(1, 8));
        assert_eq!(t3.prob(&[2]), q(3, 8));
        assert_eq!(t3.prob(&[4]), q(3, 8));
        assert_eq!(t3.prob(&[6]), q(1, 8));
    }

    #[test]
    fn walks_match_enumeration_small() {
        let spec = presets::two_type_uniform();
        assert_eq!(progeny_via_walks(&spec, 0, &[1, 1], 10).unwrap(), q(1, 16));
        assert_eq!(
            progeny_via_walks(&spec, 0, &[2, 1], 10).unwrap(),
            enumerate_progeny(&spec, 0, &[2, 1], 10).unwrap()
        );

        let mono = presets::monotype_binary();
        assert_eq!(progeny_via_walks(&mono, 0, &[3], 10).unwrap(), q(1, 8));
    }

    #[test]
    fn walks_handle_zero_components() {
        let spec = presets::two_type_uniform();
        // census without any type-2 individuals: projected one-type system
        assert_eq!(progeny_via_walks(&spec, 0, &[2, 0], 10).unwrap(), q(1, 16));
        assert_eq!(progeny_via_walks(&spec, 0, &[0, 2], 10).unwrap(), q(0, 1));
        assert_eq!(
            progeny_via_walks(&spec, 1, &[0, 1], 10).unwrap(),
            enumerate_progeny(&spec, 1, &[0, 1], 10).unwrap()
        );
    }

    #[test]
    fn forest_determinant_examples() {
        let identity = vec![vec![q(1, 1), q(0, 1)], vec![q(0, 1), q(1, 1)]];
        assert_eq!(det_elementary_forests(&identity).unwrap(), q(1, 1));

        let m = vec![vec![q(1, 1), q(2, 1)], vec![q(3, 1), q(4, 1)]];
        assert_eq!(det_elementary_forests(&m).unwrap(), q(-2, 1));
        assert_eq!(det_elementary_forests(&m).unwrap(), rat_det(&m));
    }

    #[test]
    fn forest_determinant_random_3x3() {
        let mut seed = 0x2545F4914F6CDD1Du64;
        let mut next = move || {
            seed ^= seed << 13;
            seed ^= seed >> 7;
            seed ^= seed << 17;
            (seed % 21) as i64 - 10
        };
        for _ in 0..200 {
            let m: RatMatrix = (0..3)
                .map(|_| (0..3).map(|_| q(next(), 1)).collect())
                .collect();
            assert_eq!(det_elementary_forests(&m).unwrap(), rat_det(&m));
        }
    }

    #[test]
    fn dimension_guard() {
        let m: RatMatrix = (0..9)
            .map(|i| (0..9).map(|j| q((i == j) as i64, 1)).collect())
            .collect();
        assert_eq!(
            det_elementary_forests(&m),
            Err(ProgenyError::DimensionTooLarge { d: 9 })
        );
    }

    #[test]
    fn type_tree_counts() {
        assert_eq!(enumerate_type_trees(1, 0).unwrap().len(), 1);
        assert_eq!(enumerate_type_trees(2, 0).unwrap().len(), 1);
        let t3 = enumerate_type_trees(3, 0).unwrap();
        assert_eq!(t3.len(), 3);
        // parent maps: {1<-0, 2<-0}, {1<-0, 2<-1}, {2<-0, 1<-2}
        let expected: Vec<Vec<Option<usize>>> = vec![
            vec![None, Some(0), Some(0)],
            vec![None, Some(0), Some(1)],
            vec![None, Some(2), Some(0)],
        ];
        for e in expected {
            assert!(t3.iter().any(|t| t.parent == e), "missing {e:?}");
        }
        // Cayley: d^(d-2) rooted trees with a fixed root
        assert_eq!(enumerate_type_trees(4, 2).unwrap().len(), 16);
    }

    #[test]
    fn dets_expansion_examples() {
        // d = 1: empty product, determinant of the 1x1 matrix [1]
        let realized = vec![vec![7]];
        assert_eq!(dets_tree_expansion(&realized, 0), BigInt::one());
        assert_eq!(rat_det(&build_s_matrix(&realized, 0)), q(1, 1));

        // d = 2, zero realizations
        let realized = vec![vec![0, 0], vec![0, 0]];
        let expansion = BigRational::from(dets_tree_expansion(&realized, 0));
        assert_eq!(expansion, rat_det(&build_s_matrix(&realized, 0)));
    }

    #[test]
    fn dets_expansion_random() {
        let mut seed = 0x9E3779B97F4A7C15u64;
        let mut next = move || {
            seed ^= seed << 13;
            seed ^= seed >> 7;
            seed ^= seed << 17;
            (seed % 9) as i64
        };
        for d in 1..=4usize {
            for _ in 0..100 {
                let realized: Vec<Vec<i64>> =
                    (0..d).map(|_| (0..d).map(|_| next()).collect()).collect();
                let r = (next().unsigned_abs() as usize) % d;
                let expansion = BigRational::from(dets_tree_expansion(&realized, r));
                assert_eq!(expansion, rat_det(&build_s_matrix(&realized, r)));
            }
        }
    }

    #[test]
    fn pair_counts_examples() {
        let spec = presets::two_type_uniform();
        // root's only child is type 2: kappa_21 = 1 (0-based kappa[1][0])
        let kappa = TypePairCounts::new(vec![vec![0, 0], vec![1, 0]]);
        assert_eq!(kappa.census(0), vec![1, 1]);
        assert_eq!(pair_counts_pmf(&spec, 0, &kappa), q(1, 16));

        // degenerate: no children at all, census (1, 0)
        let kappa = TypePairCounts::new(vec![vec![0, 0], vec![0, 0]]);
        assert_eq!(pair_counts_pmf(&spec, 0, &kappa), q(1, 4));
    }

    #[test]
    fn pair_counts_marginalize_to_census_law() {
        let spec = presets::two_type_uniform();
        for k in censuses_up_to(2, 5) {
            if k.iter().sum::<u64>() == 0 {
                continue;
            }
            for r in 0..2 {
                let total: BigRational = pair_counts_for_census(r, &k)
                    .iter()
                    .map(|kappa| pair_counts_pmf(&spec, r, kappa))
                    .fold(BigRational::zero(), |a, b| a + b);
                let expected = progeny_via_walks(&spec, r, &k, 10).unwrap();
                assert_eq!(total, expected, "marginalization at r={r}, k={k:?}");
            }
        }
    }

    #[test]
    fn census_mass_is_dominated_by_one() {
        let spec = presets::two_type_uniform();
        let table = progeny_table(&spec, 0, 8);
        let total: BigRational =
            table.values().fold(BigRational::zero(), |a, b| a + b);
        assert!(total < BigRational::one());
    }
}

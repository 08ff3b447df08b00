//! Partition embedding of a mono-type offspring law: individuals are typed
//! by which cell of a partition of the support their offspring count falls
//! into, which turns the mono-type tree into a multi-type one with a rank-1
//! mean matrix. Conditioning on a non-standard type proportion is absorbed
//! by an exponential tilt of the mono-type law.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::ConvergenceError;
use crate::marked_tree::MarkedTree;
use crate::offspring::OffspringSpec;
use crate::ratio;

/// Mono-type pmf with a cell partition of its support and a target
/// proportion for the cell census.
#[derive(Debug, Clone)]
pub struct MonotypePartition {
    q: BTreeMap<u64, BigRational>,
    cells: Vec<BTreeSet<u64>>,
    target: Vec<BigRational>,
}

impl MonotypePartition {
    pub fn new(
        q: Vec<(u64, BigRational)>,
        cells: Vec<BTreeSet<u64>>,
        target: Vec<BigRational>,
    ) -> Result<Self, ConvergenceError> {
        let q: BTreeMap<u64, BigRational> =
            q.into_iter().filter(|(_, p)| !p.is_zero()).collect();
        let mass = q.values().fold(BigRational::zero(), |a, b| a + b);
        if !mass.is_one() {
            return Err(ConvergenceError::InvalidPartition(format!(
                "q must sum to 1, got {}",
                ratio::render(&mass)
            )));
        }
        let support: BTreeSet<u64> = q.keys().copied().collect();
        let mut seen = BTreeSet::new();
        for cell in &cells {
            if cell.is_empty() {
                return Err(ConvergenceError::InvalidPartition("empty cell".into()));
            }
            for l in cell {
                if !support.contains(l) {
                    return Err(ConvergenceError::InvalidPartition(format!(
                        "cell element {l} outside supp(q)"
                    )));
                }
                if !seen.insert(*l) {
                    return Err(ConvergenceError::InvalidPartition(format!(
                        "element {l} in two cells"
                    )));
                }
            }
        }
        if seen != support {
            return Err(ConvergenceError::InvalidPartition(
                "cells must cover supp(q)".into(),
            ));
        }
        if cells.is_empty() || !cells[0].contains(&0) {
            return Err(ConvergenceError::InvalidPartition(
                "the first cell must contain 0".into(),
            ));
        }
        if cells[0].len() <= 1 {
            return Err(ConvergenceError::InvalidPartition(
                "the first cell must have more than one element".into(),
            ));
        }
        if target.len() != cells.len() {
            return Err(ConvergenceError::InvalidPartition(
                "target proportion has wrong length".into(),
            ));
        }
        if target.iter().any(|x| !x.is_positive()) {
            return Err(ConvergenceError::InvalidPartition(
                "target proportion must be positive".into(),
            ));
        }
        let tsum = target.iter().fold(BigRational::zero(), |a, b| a + b);
        if !tsum.is_one() {
            return Err(ConvergenceError::InvalidPartition(
                "target proportion must sum to 1".into(),
            ));
        }
        Ok(MonotypePartition { q, cells, target })
    }

    pub fn d(&self) -> usize {
        self.cells.len()
    }

    pub fn q(&self) -> &BTreeMap<u64, BigRational> {
        &self.q
    }

    pub fn cells(&self) -> &[BTreeSet<u64>] {
        &self.cells
    }

    pub fn target(&self) -> &[BigRational] {
        &self.target
    }

    /// Cell index of an offspring count.
    pub fn cell_of(&self, l: u64) -> Option<usize> {
        self.cells.iter().position(|c| c.contains(&l))
    }

    /// Cell masses `alpha(i) = sum_{l in A_i} q(l)`.
    pub fn alpha(&self) -> Vec<BigRational> {
        self.cells
            .iter()
            .map(|cell| {
                cell.iter()
                    .map(|l| self.q[l].clone())
                    .fold(BigRational::zero(), |a, b| a + b)
            })
            .collect()
    }

    /// `m_x = sum_i x_i inf A_i` at the target proportion.
    pub fn m_inf(&self) -> BigRational {
        self.cells
            .iter()
            .zip(&self.target)
            .map(|(cell, t)| {
                BigRational::from(BigInt::from(*cell.iter().next().unwrap())) * t
            })
            .fold(BigRational::zero(), |a, b| a + b)
    }
}

/// The embedded multi-type spec together with its rank-1 eigen-data.
#[derive(Debug, Clone)]
pub struct MonotypeEmbedding {
    pub spec: OffspringSpec,
    pub alpha: Vec<BigRational>,
    pub alpha_star: Vec<BigRational>,
}

/// Builds the multi-type offspring law
/// `p^(i)(k) = 1_{|k| in A_i} (q(|k|)/alpha(i)) binom(|k|, k) alpha^k`
/// and checks the rank-1 structure `M = alpha* alpha^T`, the unit Perron
/// root and primitivity.
pub fn monotype_embed(mp: &MonotypePartition) -> Result<MonotypeEmbedding, ConvergenceError> {
    let d = mp.d();
    let alpha = mp.alpha();
    let alpha_star: Vec<BigRational> = mp
        .cells()
        .iter()
        .zip(&alpha)
        .map(|(cell, a)| {
            cell.iter()
                .map(|&l| BigRational::from(BigInt::from(l)) * &mp.q()[&l])
                .fold(BigRational::zero(), |acc, x| acc + x)
                / a
        })
        .collect();
    let mut laws: Vec<Vec<(Vec<u64>, BigRational)>> = Vec::with_capacity(d);
    for (i, cell) in mp.cells().iter().enumerate() {
        let mut law = Vec::new();
        for &l in cell {
            for k in compositions(l, d) {
                let mut w = &mp.q()[&l] / &alpha[i] * BigRational::from(ratio::multinomial(&k));
                for (j, &kj) in k.iter().enumerate() {
                    for _ in 0..kj {
                        w *= &alpha[j];
                    }
                }
                law.push((k, w));
            }
        }
        laws.push(law);
    }
    let spec = OffspringSpec::from_laws(d, laws)
        .map_err(|e| ConvergenceError::InvalidPartition(format!("embedded law invalid: {e}")))?;
    // rank-1 mean matrix, critical by construction when q is critical
    let mean = spec.mean_matrix();
    for i in 0..d {
        for j in 0..d {
            assert_eq!(
                mean[i][j],
                &alpha_star[i] * &alpha[j],
                "mean matrix must be alpha* alpha^T"
            );
        }
    }
    let inner = alpha
        .iter()
        .zip(&alpha_star)
        .fold(BigRational::zero(), |a, (x, y)| a + x * y);
    assert!(inner.is_one(), "unit Perron root requires <alpha, alpha*> = 1");
    assert!(
        alpha_star.iter().all(|x| x.is_positive()),
        "primitivity of the rank-1 matrix"
    );
    Ok(MonotypeEmbedding { spec, alpha, alpha_star })
}

/// All vectors `k` in `N^d` with `|k| = total`.
fn compositions(total: u64, d: usize) -> Vec<Vec<u64>> {
    let mut out = Vec::new();
    let mut cur = vec![0u64; d];
    fn rec(pos: usize, left: u64, d: usize, cur: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
        if pos == d - 1 {
            cur[pos] = left;
            out.push(cur.clone());
            return;
        }
        for v in 0..=left {
            cur[pos] = v;
            rec(pos + 1, left - v, d, cur, out);
        }
    }
    rec(0, total, d, &mut cur, &mut out);
    out
}

#[derive(Debug, Clone)]
pub struct PartitionFunctions {
    pub f: Vec<f64>,
    pub f_prime: Vec<f64>,
    /// `h_x(gamma) = sum_i x_i f'_{A_i}(gamma) / f_{A_i}(gamma)` at the
    /// target proportion.
    pub h: f64,
    pub m_inf: f64,
}

/// Cell generating functions `f_{A_i}(gamma) = sum_{l in A_i} gamma^l q(l)`
/// with their derivatives and the target-weighted mean
/// `h_x(gamma) = sum_i x_i gamma f'_{A_i}(gamma) / f_{A_i}(gamma)`: the
/// mean offspring count of the cell-conditioned tilted laws. This is the
/// version with `h(0+) = m_x` and `h = 1` exactly when the tilted law is
/// critical.
pub fn partition_functions(mp: &MonotypePartition, gamma: f64) -> PartitionFunctions {
    let mut f = Vec::with_capacity(mp.d());
    let mut f_prime = Vec::with_capacity(mp.d());
    for cell in mp.cells() {
        let mut v = 0.0;
        let mut dv = 0.0;
        for &l in cell {
            let ql = ratio::to_f64(&mp.q()[&l]);
            v += gamma.powi(l as i32) * ql;
            if l > 0 {
                dv += l as f64 * gamma.powi(l as i32 - 1) * ql;
            }
        }
        f.push(v);
        f_prime.push(dv);
    }
    let h = mp
        .target()
        .iter()
        .zip(f.iter().zip(&f_prime))
        .map(|(t, (fv, dfv))| ratio::to_f64(t) * gamma * dfv / fv)
        .sum();
    PartitionFunctions { f, f_prime, h, m_inf: ratio::to_f64(&mp.m_inf()) }
}

/// Exact twin of [`partition_functions`] for rational `gamma`; returns
/// `(f, f', h)`.
pub fn partition_functions_exact(
    mp: &MonotypePartition,
    gamma: &BigRational,
) -> (Vec<BigRational>, Vec<BigRational>, BigRational) {
    let pow = |g: &BigRational, e: u64| -> BigRational {
        let mut acc = BigRational::one();
        for _ in 0..e {
            acc *= g;
        }
        acc
    };
    let mut f = Vec::with_capacity(mp.d());
    let mut f_prime = Vec::with_capacity(mp.d());
    for cell in mp.cells() {
        let mut v = BigRational::zero();
        let mut dv = BigRational::zero();
        for &l in cell {
            let ql = &mp.q()[&l];
            v += pow(gamma, l) * ql;
            if l > 0 {
                dv += BigRational::from(BigInt::from(l)) * pow(gamma, l - 1) * ql;
            }
        }
        f.push(v);
        f_prime.push(dv);
    }
    let h = mp
        .target()
        .iter()
        .zip(f.iter().zip(&f_prime))
        .fold(BigRational::zero(), |acc, (t, (fv, dfv))| acc + t * gamma * dfv / fv);
    (f, f_prime, h)
}

#[derive(Debug, Clone, Copy)]
pub struct GammaRoot {
    pub gamma: f64,
    /// True when `gamma = 1` was certified exactly (target equals the cell
    /// masses of a critical law).
    pub exact_one: bool,
    pub residual: f64,
}

/// Solves `h_target(gamma) = 1` for the unique positive root. `h` is
/// strictly increasing, so bisection on a geometrically grown bracket
/// converges; the residual tolerance is 1e-12.
pub fn solve_gamma(mp: &MonotypePartition) -> Result<GammaRoot, ConvergenceError> {
    let m_inf = mp.m_inf();
    if m_inf >= BigRational::one() {
        return Err(ConvergenceError::PreconditionFailed(format!(
            "m_target = {} >= 1",
            ratio::render(&m_inf)
        )));
    }
    // exact short-circuit at gamma = 1
    let (_, _, h1) = partition_functions_exact(mp, &BigRational::one());
    if h1.is_one() {
        return Ok(GammaRoot { gamma: 1.0, exact_one: true, residual: 0.0 });
    }
    let h = |g: f64| partition_functions(mp, g).h;
    // bracket the root: h is increasing with h(0+) = m_inf < 1
    let mut lo = 1.0;
    while h(lo) >= 1.0 {
        lo /= 2.0;
        if lo < 1e-300 {
            return Err(ConvergenceError::NoRoot);
        }
    }
    let mut hi = lo;
    let mut steps = 0;
    while h(hi) < 1.0 {
        hi *= 2.0;
        steps += 1;
        if steps > 60 {
            return Err(ConvergenceError::NoRoot);
        }
    }
    let mut mid = 0.5 * (lo + hi);
    for _ in 0..200 {
        mid = 0.5 * (lo + hi);
        let v = h(mid);
        if (v - 1.0).abs() <= 1e-12 {
            return Ok(GammaRoot { gamma: mid, exact_one: false, residual: v - 1.0 });
        }
        if v < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let v = h(mid);
    if (v - 1.0).abs() <= 1e-12 {
        Ok(GammaRoot { gamma: mid, exact_one: false, residual: v - 1.0 })
    } else {
        Err(ConvergenceError::NoRoot)
    }
}

/// The tilted mono-type law
/// `q~(l) = (target(i) / f_{A_i}(gamma)) gamma^l q(l)` for `l in A_i`.
/// Sums to 1 exactly for every positive rational `gamma`; its mean is 1
/// exactly when `gamma` solves the root equation.
pub fn tilted_q(mp: &MonotypePartition, gamma: &BigRational) -> BTreeMap<u64, BigRational> {
    let (f, _, _) = partition_functions_exact(mp, gamma);
    let pow = |e: u64| -> BigRational {
        let mut acc = BigRational::one();
        for _ in 0..e {
            acc *= gamma;
        }
        acc
    };
    let mut out = BTreeMap::new();
    for (i, cell) in mp.cells().iter().enumerate() {
        for &l in cell {
            let v = &mp.target()[i] / &f[i] * pow(l) * &mp.q()[&l];
            out.insert(l, v);
        }
    }
    let mass = out.values().fold(BigRational::zero(), |a, b| a + b);
    assert!(mass.is_one(), "tilted law must sum to 1 exactly");
    out
}

/// Mean of a mono-type pmf, exact.
pub fn pmf_mean(q: &BTreeMap<u64, BigRational>) -> BigRational {
    q.iter()
        .map(|(&l, p)| BigRational::from(BigInt::from(l)) * p)
        .fold(BigRational::zero(), |a, b| a + b)
}

/// The cell census of a mono-type tree: entry `i` counts the nodes whose
/// offspring count lies in cell `A_i`.
pub fn census_of_monotype_tree(mp: &MonotypePartition, t: &MarkedTree) -> Option<Vec<u64>> {
    assert_eq!(t.d(), 1, "mono-type trees have a single mark");
    let mut counts = vec![0u64; mp.d()];
    for (addr, _) in t.nodes() {
        let k = t.num_children(addr) as u64;
        counts[mp.cell_of(k)?] += 1;
    }
    Some(counts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::progeny::{enumerate_trees, tree_probability};
    use crate::ratio::q;

    fn uniform012_partition(target: Vec<BigRational>) -> MonotypePartition {
        MonotypePartition::new(
            vec![(0, q(1, 3)), (1, q(1, 3)), (2, q(1, 3))],
            vec![
                [0u64, 1].iter().copied().collect(),
                [2u64].iter().copied().collect(),
            ],
            target,
        )
        .unwrap()
    }

    #[test]
    fn partition_validation() {
        // |A_1| = 1 rejected
        let bad = MonotypePartition::new(
            vec![(0, q(1, 2)), (2, q(1, 2))],
            vec![
                [0u64].iter().copied().collect(),
                [2u64].iter().copied().collect(),
            ],
            vec![q(1, 2), q(1, 2)],
        );
        assert!(matches!(bad, Err(ConvergenceError::InvalidPartition(_))));

        // valid: q uniform on {0,1,2}, A_1 = {0,1}, A_2 = {2}
        let mp = uniform012_partition(vec![q(2, 3), q(1, 3)]);
        assert_eq!(mp.alpha(), vec![q(2, 3), q(1, 3)]);
    }

    #[test]
    fn embedding_law_values() {
        let mp = uniform012_partition(vec![q(2, 3), q(1, 3)]);
        let emb = monotype_embed(&mp).unwrap();
        assert_eq!(emb.alpha, vec![q(2, 3), q(1, 3)]);
        // alpha*(1) = (0*1/3 + 1*1/3) / (2/3) = 1/2; alpha*(2) = 2
        assert_eq!(emb.alpha_star, vec![q(1, 2), q(2, 1)]);
        // p^(2)((1,1)) = q(2)/alpha(2) * binom(2;1,1) * alpha^(1,1) = 4/9
        assert_eq!(emb.spec.prob(1, &[1, 1]), q(4, 9));
    }

    #[test]
    fn embedded_census_matches_cell_census() {
        // the multi-type census law agrees with the law of the per-cell
        // offspring-count census of the mono-type tree
        let mp = uniform012_partition(vec![q(2, 3), q(1, 3)]);
        let emb = monotype_embed(&mp).unwrap();
        let mono = crate::presets::monotype_uniform012();

        let mut by_census: BTreeMap<Vec<u64>, BigRational> = BTreeMap::new();
        for total in 1..=6u64 {
            for t in enumerate_trees(&mono, 0, &[total], 6).unwrap() {
                let census = census_of_monotype_tree(&mp, &t).unwrap();
                *by_census.entry(census).or_insert_with(BigRational::zero) +=
                    tree_probability(&mono, &t);
            }
        }
        let mut engine = crate::progeny::ProgenyEngine::new(&emb.spec);
        for (census, mass) in by_census {
            let multi: BigRational = (0..2)
                .map(|r| emb.alpha[r].clone() * engine.census_prob(r, &census))
                .fold(BigRational::zero(), |a, b| a + b);
            assert_eq!(multi, mass, "census {census:?}");
        }
    }

    #[test]
    fn h_at_one_is_one_for_the_cell_masses() {
        let mp = uniform012_partition(vec![q(2, 3), q(1, 3)]);
        let (_, _, h) = partition_functions_exact(&mp, &BigRational::one());
        assert!(h.is_one());
        let root = solve_gamma(&mp).unwrap();
        assert!(root.exact_one);
        assert_eq!(root.gamma, 1.0);
    }

    #[test]
    fn boundary_proportion_flagged() {
        // target (1/2, 1/2): m = 0*1/2 + 2*1/2 = 1, violating the strict
        // inequality
        let mp = uniform012_partition(vec![q(1, 2), q(1, 2)]);
        assert_eq!(mp.m_inf(), q(1, 1));
        assert!(matches!(
            solve_gamma(&mp),
            Err(ConvergenceError::PreconditionFailed(_))
        ));
    }

    #[test]
    fn h_is_increasing() {
        let mp = uniform012_partition(vec![q(7, 10), q(3, 10)]);
        let h1 = partition_functions(&mp, 0.5).h;
        let h2 = partition_functions(&mp, 1.5).h;
        assert!(h1 < h2);
    }

    #[test]
    fn gamma_root_for_skewed_target() {
        let mp = uniform012_partition(vec![q(7, 10), q(3, 10)]);
        let root = solve_gamma(&mp).unwrap();
        assert!(!root.exact_one);
        assert!(root.residual.abs() <= 1e-12);
        // h(g) = 0.7 g / (1 + g) + 0.6, so the root solves 0.3 g = 0.4
        let expected = 4.0 / 3.0;
        assert!((root.gamma - expected).abs() < 1e-9, "gamma = {}", root.gamma);
    }

    #[test]
    fn tilted_q_examples() {
        let mp = uniform012_partition(vec![q(2, 3), q(1, 3)]);
        // gamma = 1 with the natural proportion: q~ = q
        let t = tilted_q(&mp, &BigRational::one());
        assert_eq!(t[&0], q(1, 3));
        assert_eq!(t[&1], q(1, 3));
        assert_eq!(t[&2], q(1, 3));

        // solved gamma for the skewed target: mean 1 within 1e-10
        let mp = uniform012_partition(vec![q(7, 10), q(3, 10)]);
        let root = solve_gamma(&mp).unwrap();
        let gamma = ratio::from_f64(root.gamma);
        let t = tilted_q(&mp, &gamma);
        let mean = ratio::to_f64(&pmf_mean(&t));
        assert!((mean - 1.0).abs() < 1e-10, "tilted mean {mean}");
    }

    #[test]
    fn conditional_law_invariant_under_tilting() {
        // P_q(tau = t | cell census = k) = P_q~(tau = t | cell census = k)
        // exactly, for any rational gamma: the tilt factor depends on the
        // tree only through its census.
        let mp = uniform012_partition(vec![q(7, 10), q(3, 10)]);
        let gamma = q(1, 2);
        let tilted = tilted_q(&mp, &gamma);

        let mono_q = crate::presets::monotype_uniform012();
        let mono_tilted = OffspringSpec::from_laws(
            1,
            vec![tilted.iter().map(|(&l, p)| (vec![l], p.clone())).collect()],
        )
        .unwrap();

        let mut by_census: BTreeMap<Vec<u64>, Vec<MarkedTree>> = BTreeMap::new();
        for total in 1..=6u64 {
            for t in enumerate_trees(&mono_q, 0, &[total], 6).unwrap() {
                let census = census_of_monotype_tree(&mp, &t).unwrap();
                by_census.entry(census).or_default().push(t);
            }
        }
        for (census, trees) in by_census {
            let mass_q: BigRational = trees
                .iter()
                .map(|t| tree_probability(&mono_q, t))
                .fold(BigRational::zero(), |a, b| a + b);
            let mass_t: BigRational = trees
                .iter()
                .map(|t| tree_probability(&mono_tilted, t))
                .fold(BigRational::zero(), |a, b| a + b);
            for t in &trees {
                let lhs = tree_probability(&mono_q, t) / &mass_q;
                let rhs = tree_probability(&mono_tilted, t) / &mass_t;
                assert_eq!(lhs, rhs, "census {census:?}");
            }
        }
    }
}

//! End-to-end machinery around the local convergence of conditioned
//! critical trees to Kesten's tree: exact graft-class probabilities under
//! the unconditioned, Kesten and conditioned laws, the desk-scale
//! convergence experiment with its key progeny ratio, and the partition
//! embedding of a mono-type law ([`MonotypePartition`] and friends).

mod monotype;

pub use monotype::{
    census_of_monotype_tree, monotype_embed, partition_functions, partition_functions_exact,
    pmf_mean, solve_gamma, tilted_q, GammaRoot, MonotypeEmbedding, MonotypePartition,
    PartitionFunctions,
};

use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;
use thiserror::Error;

use crate::marked_tree::{GraftClass, MarkedTree, TypedNode};
use crate::offspring::{size_biased_offspring, OffspringSpec, SpectralData};
use crate::progeny::{censuses_up_to, enumerate_trees, ProgenyEngine};
use crate::ratio;
use crate::sampler::{sample_conditioned, SampleError};

#[derive(Debug, Error)]
pub enum ConvergenceError {
    #[error("operation requires a certified critical spec")]
    NotCritical,
    #[error("census {0:?} has zero probability")]
    ZeroDenominator(Vec<u64>),
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("no root of h = 1 within the bracket cap")]
    NoRoot,
    #[error("precondition failed: {0}")]
    PreconditionFailed(String),
}

/// `P_r(tau in T(t, x))`: the product of the tree-law factors over the base
/// tree minus its distinguished leaf, whose subtree is unconstrained.
pub fn gw_graft_prob(spec: &OffspringSpec, class: &GraftClass) -> BigRational {
    let base = class.base();
    let leaf = class.leaf();
    let mut acc = BigRational::one();
    for (addr, mark) in base.nodes() {
        if addr == &leaf.addr {
            continue;
        }
        let counts = base.offspring_counts(addr);
        let p = spec.prob(mark, &counts);
        if p.is_zero() {
            return BigRational::zero();
        }
        acc *= ratio::type_order_factor(&counts) * p;
    }
    acc
}

/// `P_r(tau* in T(t, x)) = (a*_i / a*_r) P_r(tau in T(t, x))` where `i` is
/// the mark of the distinguished leaf.
pub fn kesten_graft_prob(
    spec: &OffspringSpec,
    spectral: &SpectralData,
    class: &GraftClass,
) -> Result<BigRational, ConvergenceError> {
    let eigen = spectral.exact.as_ref().ok_or(ConvergenceError::NotCritical)?;
    let r = class.base().root_mark();
    let i = class.leaf().mark;
    Ok(&eigen.a_star[i] / &eigen.a_star[r] * gw_graft_prob(spec, class))
}

/// `P_r(tau in T(t, x) | |tau| = k)`, computed by both routes — through the
/// Kesten class probability and directly from the unconditioned class
/// probability — which must agree exactly.
pub fn conditioned_graft_prob(
    spec: &OffspringSpec,
    spectral: &SpectralData,
    class: &GraftClass,
    k: &[u64],
    engine: &mut ProgenyEngine,
) -> Result<BigRational, ConvergenceError> {
    let eigen = spectral.exact.as_ref().ok_or(ConvergenceError::NotCritical)?;
    let base = class.base();
    let r = base.root_mark();
    let i = class.leaf().mark;
    let den = engine.census_prob(r, k);
    if den.is_zero() {
        return Err(ConvergenceError::ZeroDenominator(k.to_vec()));
    }
    // census of the completion: k - |t| + e_i, zero probability if negative
    let counts = base.type_counts();
    let mut completion = Vec::with_capacity(k.len());
    for j in 0..k.len() {
        let adjust = u64::from(j == i);
        let need = counts[j].saturating_sub(adjust);
        if k[j] < need {
            return Ok(BigRational::zero());
        }
        completion.push(k[j] - need);
    }
    if completion[i] == 0 {
        return Ok(BigRational::zero());
    }
    let num = engine.census_prob(i, &completion);
    let direct = gw_graft_prob(spec, class) * &num / &den;
    let via_kesten = &eigen.a_star[r] / &eigen.a_star[i]
        * kesten_graft_prob(spec, spectral, class)?
        * &num
        / &den;
    assert_eq!(direct, via_kesten, "the two conditioning routes must agree");
    Ok(direct)
}

/// `P_r(r_h(tau) = t)`: restriction probability of the plain tree;
/// offspring factors of the nodes strictly above height `h` only.
pub fn gw_restriction_pmf(spec: &OffspringSpec, t: &MarkedTree, h: usize) -> BigRational {
    let mut acc = BigRational::one();
    for (addr, mark) in t.nodes() {
        if addr.len() >= h {
            continue;
        }
        let counts = t.offspring_counts(addr);
        let p = spec.prob(mark, &counts);
        if p.is_zero() {
            return BigRational::zero();
        }
        acc *= ratio::type_order_factor(&counts) * p;
    }
    acc
}

/// `P_r(r_h(tau*) = t, v*_h = x)`, computed from the Kesten construction
/// itself: size-biased offspring along the spine and the proportional
/// special-child selection, plain offspring elsewhere. This is the route
/// that gets compared against `(a*_i / a*_r) P_r(r_h(tau) = t)`.
pub fn kesten_truncation_pmf(
    spec: &OffspringSpec,
    spectral: &SpectralData,
    t: &MarkedTree,
    h: usize,
    x: &TypedNode,
) -> Result<BigRational, ConvergenceError> {
    let eigen = spectral.exact.as_ref().ok_or(ConvergenceError::NotCritical)?;
    assert_eq!(t.mark(&x.addr), Some(x.mark), "x must be a node of t");
    assert_eq!(x.addr.len(), h, "the special node at height h");
    let biased =
        size_biased_offspring(spec, spectral).map_err(|_| ConvergenceError::NotCritical)?;
    let mut acc = BigRational::one();
    for (addr, mark) in t.nodes() {
        if addr.len() >= h {
            continue;
        }
        let counts = t.offspring_counts(addr);
        let on_spine = x.addr.starts_with(addr);
        let factor = if on_spine {
            let hat = biased[mark]
                .get(&counts)
                .cloned()
                .unwrap_or_else(BigRational::zero);
            if hat.is_zero() {
                return Ok(BigRational::zero());
            }
            // the next spine node is the child of `addr` along x
            let next_mark = t
                .mark(&x.addr[..addr.len() + 1])
                .expect("spine stays inside the tree");
            let weight_sum = counts
                .iter()
                .zip(&eigen.a_star)
                .fold(BigRational::zero(), |s, (&c, a)| {
                    s + BigRational::from(num_bigint::BigInt::from(c)) * a
                });
            hat * &eigen.a_star[next_mark] / weight_sum
        } else {
            let p = spec.prob(mark, &counts);
            if p.is_zero() {
                return Ok(BigRational::zero());
            }
            p
        };
        acc *= ratio::type_order_factor(&counts) * factor;
    }
    Ok(acc)
}

/// All supported trees of height at most `h` with the given root type:
/// every node above height `h` carries an offspring vector from the law's
/// support, in every type arrangement.
pub fn enumerate_restriction_trees(
    spec: &OffspringSpec,
    r: usize,
    h: usize,
) -> Vec<MarkedTree> {
    let mut out = Vec::new();
    let mut nodes: Vec<(Vec<u32>, usize)> = vec![(Vec::new(), r)];
    let mut queue: Vec<(Vec<u32>, usize)> = vec![(Vec::new(), r)];
    fn expand(
        spec: &OffspringSpec,
        h: usize,
        nodes: &mut Vec<(Vec<u32>, usize)>,
        queue: &mut Vec<(Vec<u32>, usize)>,
        next: usize,
        out: &mut Vec<MarkedTree>,
    ) {
        if next == queue.len() {
            out.push(
                MarkedTree::from_nodes(spec.d(), nodes.clone())
                    .expect("generated trees are valid"),
            );
            return;
        }
        let (addr, mark) = queue[next].clone();
        for counts in spec.law(mark).keys() {
            for word in type_words(counts) {
                let base_nodes = nodes.len();
                let base_queue = queue.len();
                for (pos, &ty) in word.iter().enumerate() {
                    let mut child = addr.clone();
                    child.push(pos as u32 + 1);
                    nodes.push((child.clone(), ty));
                    if child.len() < h {
                        queue.push((child, ty));
                    }
                }
                expand(spec, h, nodes, queue, next + 1, out);
                nodes.truncate(base_nodes);
                queue.truncate(base_queue);
            }
        }
    }
    if h == 0 {
        return vec![MarkedTree::leaf(spec.d(), r)];
    }
    expand(spec, h, &mut nodes, &mut queue, 0, &mut out);
    out
}

/// All ordered type words with the given per-type counts.
pub(crate) fn type_words(counts: &[u64]) -> Vec<Vec<usize>> {
    let total: u64 = counts.iter().sum();
    let mut out = Vec::new();
    let mut word = Vec::with_capacity(total as usize);
    fn rec(left: &mut Vec<u64>, word: &mut Vec<usize>, total: u64, out: &mut Vec<Vec<usize>>) {
        if word.len() as u64 == total {
            out.push(word.clone());
            return;
        }
        for ty in 0..left.len() {
            if left[ty] == 0 {
                continue;
            }
            left[ty] -= 1;
            word.push(ty);
            rec(left, word, total, out);
            word.pop();
            left[ty] += 1;
        }
    }
    rec(&mut counts.to_vec(), &mut word, total, &mut out);
    out
}

/// The convergence-determining probe family: every supported base tree of
/// size at most `max_base` with root type `r`, paired with each of its
/// leaves whose mark equals the root mark.
pub fn probe_family(spec: &OffspringSpec, r: usize, max_base: usize) -> Vec<GraftClass> {
    let mut probes = Vec::new();
    for k in censuses_up_to(spec.d(), max_base) {
        if k.iter().sum::<u64>() == 0 {
            continue;
        }
        let trees = enumerate_trees(spec, r, &k, max_base).expect("cap respected");
        for t in trees {
            for leaf in t.leaves() {
                if leaf.mark == r {
                    probes.push(
                        GraftClass::new(t.clone(), leaf).expect("leaf comes from the tree"),
                    );
                }
            }
        }
    }
    probes
}

#[derive(Debug, Clone)]
pub struct ExperimentPlan {
    pub probes: Vec<(String, GraftClass)>,
    /// `(n, k(n))` pairs, already adjusted for feasibility.
    pub censuses: Vec<(u64, Vec<u64>)>,
    /// Offset `b` for the key ratio `P_r(|tau| = k - b) / P_r(|tau| = k)`.
    pub ratio_offset: Vec<u64>,
}

#[derive(Debug, Clone)]
pub struct ConvergenceRow {
    pub probe: String,
    pub n: u64,
    pub conditioned: BigRational,
    pub kesten: BigRational,
    pub delta: BigRational,
    pub key_ratio: Option<BigRational>,
}

#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
    /// Census indices skipped because the census had zero probability.
    pub skipped: Vec<u64>,
    /// Per probe: were the deltas non-increasing over the tail (second half)
    /// of the run?
    pub tail_decreasing: Vec<(String, bool)>,
    pub final_key_ratio: Option<BigRational>,
}

impl ConvergenceReport {
    pub fn all_tails_decreasing(&self) -> bool {
        self.tail_decreasing.iter().all(|(_, ok)| *ok)
    }
}

/// Runs the exact convergence experiment: for each probe and census,
/// `|conditioned - kesten|` plus the key progeny ratio at the probe's root.
pub fn convergence_experiment(
    spec: &OffspringSpec,
    spectral: &SpectralData,
    plan: &ExperimentPlan,
) -> Result<ConvergenceReport, ConvergenceError> {
    let mut engine = ProgenyEngine::new(spec);
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for (n, k) in &plan.censuses {
        let mut census_ok = true;
        for (name, class) in &plan.probes {
            let r = class.base().root_mark();
            let kesten = kesten_graft_prob(spec, spectral, class)?;
            let conditioned = match conditioned_graft_prob(spec, spectral, class, k, &mut engine)
            {
                Ok(v) => v,
                Err(ConvergenceError::ZeroDenominator(_)) => {
                    census_ok = false;
                    break;
                }
                Err(e) => return Err(e),
            };
            let delta = ratio::abs(&(conditioned.clone() - &kesten));
            let key_ratio = {
                let num_k: Option<Vec<u64>> = k
                    .iter()
                    .zip(&plan.ratio_offset)
                    .map(|(&ki, &bi)| ki.checked_sub(bi))
                    .collect();
                num_k.and_then(|shifted| {
                    let den = engine.census_prob(r, k);
                    let num = engine.census_prob(r, &shifted);
                    if den.is_zero() {
                        None
                    } else {
                        Some(num / den)
                    }
                })
            };
            rows.push(ConvergenceRow {
                probe: name.clone(),
                n: *n,
                conditioned,
                kesten,
                delta,
                key_ratio,
            });
        }
        if !census_ok {
            rows.retain(|row| row.n != *n);
            skipped.push(*n);
        }
    }
    let tail_decreasing = plan
        .probes
        .iter()
        .map(|(name, _)| {
            let deltas: Vec<&BigRational> = rows
                .iter()
                .filter(|row| &row.probe == name)
                .map(|row| &row.delta)
                .collect();
            let tail_start = deltas.len() / 2;
            let ok = deltas
                .windows(2)
                .skip(tail_start.saturating_sub(1))
                .all(|w| w[1] <= w[0]);
            (name.clone(), ok)
        })
        .collect();
    let final_key_ratio = rows.iter().rev().find_map(|row| row.key_ratio.clone());
    Ok(ConvergenceReport { rows, skipped, tail_decreasing, final_key_ratio })
}

/// Builds the census sequence `k(n) = round(n a)`, adjusted by a minimal
/// l1 correction (up to 2) to land on a positive-probability census;
/// infeasible `n` are dropped.
pub fn census_sequence(
    spec: &OffspringSpec,
    spectral: &SpectralData,
    roots: &[usize],
    n_range: std::ops::RangeInclusive<u64>,
) -> Vec<(u64, Vec<u64>)> {
    let d = spec.d();
    let mut engine = ProgenyEngine::new(spec);
    let mut out = Vec::new();
    for n in n_range {
        let base: Vec<i64> = spectral
            .a
            .iter()
            .map(|ai| (ai * n as f64).round() as i64)
            .collect();
        let mut candidates: Vec<Vec<i64>> = vec![base.clone()];
        for j in 0..d {
            for sign in [1i64, -1] {
                let mut c = base.clone();
                c[j] += sign;
                candidates.push(c);
            }
        }
        for j in 0..d {
            for l in 0..d {
                for (s1, s2) in [(1i64, 1i64), (1, -1), (-1, 1), (-1, -1)] {
                    let mut c = base.clone();
                    c[j] += s1;
                    c[l] += s2;
                    candidates.push(c);
                }
            }
        }
        let feasible = candidates.into_iter().find_map(|c| {
            if c.iter().any(|&v| v < 0) {
                return None;
            }
            let k: Vec<u64> = c.iter().map(|&v| v as u64).collect();
            let ok = roots
                .iter()
                .all(|&r| !engine.census_prob(r, &k).is_zero());
            ok.then_some(k)
        });
        if let Some(k) = feasible {
            out.push((n, k));
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct McFreq {
    pub probe: String,
    pub matches: u64,
    pub samples: u64,
    pub frequency: f64,
    /// One standard deviation of the frequency estimate.
    pub sigma: f64,
}

/// Monte-Carlo frequencies of the probe classes among conditioned samples.
pub fn mc_class_frequencies<R: Rng + ?Sized>(
    spec: &OffspringSpec,
    r: usize,
    k: &[u64],
    probes: &[(String, GraftClass)],
    accepted_target: u64,
    max_attempts_per_sample: u64,
    rng: &mut R,
) -> Result<Vec<McFreq>, SampleError> {
    let mut matches = vec![0u64; probes.len()];
    for _ in 0..accepted_target {
        let tree = sample_conditioned(spec, r, k, max_attempts_per_sample, rng)?;
        for (idx, (_, class)) in probes.iter().enumerate() {
            if class.matches(&tree) {
                matches[idx] += 1;
            }
        }
    }
    Ok(probes
        .iter()
        .zip(&matches)
        .map(|((name, _), &m)| {
            let f = m as f64 / accepted_target as f64;
            McFreq {
                probe: name.clone(),
                matches: m,
                samples: accepted_target,
                frequency: f,
                sigma: (f * (1.0 - f) / accepted_target as f64).sqrt(),
            }
        })
        .collect())
}

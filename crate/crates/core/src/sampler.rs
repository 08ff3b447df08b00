//! Random generation of Galton-Watson trees, height-truncated Kesten trees
//! with their distinguished spine, and rejection-sampled conditioned trees.
//!
//! Offspring vectors are drawn from the exact laws (converted to cumulative
//! float tables); children are materialized in exchangeable order — the
//! offspring vector fixes the per-type counts and the type word is uniform
//! among arrangements — so the sampled plane-tree law matches the tree law
//! with its multinomial factor, atom by atom.

use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

use crate::marked_tree::{MarkedTree, TypedNode};
use crate::offspring::{Criticality, OffspringSpec, SpectralData};
use crate::ratio;

#[derive(Debug, Error)]
pub enum SampleError {
    #[error("live population would pass the node budget {budget}")]
    BudgetExceeded { budget: usize },
    #[error("no accepted sample after {attempts} attempts")]
    Exhausted { attempts: u64 },
    #[error("sampler requires a critical spec")]
    NotCritical,
}

/// Height-`h` truncation of a Kesten tree together with its special spine
/// `v*_0, ..., v*_h`.
#[derive(Debug, Clone)]
pub struct SampledKesten {
    pub tree: MarkedTree,
    pub spine: Vec<TypedNode>,
}

struct CumTable {
    entries: Vec<(Vec<u64>, f64)>,
    total: f64,
}

impl CumTable {
    fn from_weights(weights: Vec<(Vec<u64>, f64)>) -> Self {
        let mut entries = Vec::with_capacity(weights.len());
        let mut acc = 0.0;
        for (k, w) in weights {
            acc += w;
            entries.push((k, acc));
        }
        CumTable { entries, total: acc }
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> &Vec<u64> {
        let u: f64 = rng.random::<f64>() * self.total;
        let idx = self
            .entries
            .partition_point(|(_, cum)| *cum < u)
            .min(self.entries.len() - 1);
        &self.entries[idx].0
    }
}

fn law_tables(spec: &OffspringSpec) -> Vec<CumTable> {
    (0..spec.d())
        .map(|i| {
            CumTable::from_weights(
                spec.law(i)
                    .iter()
                    .map(|(k, p)| (k.clone(), ratio::to_f64(p)))
                    .collect(),
            )
        })
        .collect()
}

fn draw_index<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    let u: f64 = rng.random::<f64>() * total;
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    weights.len() - 1
}

/// Uniformly interleaved type word with the given per-type counts.
fn shuffled_word<R: Rng + ?Sized>(counts: &[u64], rng: &mut R) -> Vec<usize> {
    let mut word = Vec::with_capacity(counts.iter().sum::<u64>() as usize);
    for (ty, &c) in counts.iter().enumerate() {
        for _ in 0..c {
            word.push(ty);
        }
    }
    word.shuffle(rng);
    word
}

/// Samples an unconditioned Galton-Watson tree breadth-first. Fails with
/// `BudgetExceeded` as soon as the materialized population passes
/// `node_budget`.
pub fn sample_gw<R: Rng + ?Sized>(
    spec: &OffspringSpec,
    root_law: &[f64],
    node_budget: usize,
    rng: &mut R,
) -> Result<MarkedTree, SampleError> {
    let tables = law_tables(spec);
    let root = draw_index(root_law, rng);
    sample_gw_inner(spec, &tables, root, node_budget, None, rng)
        .map(|compact| compact.materialize(spec.d()))
}

/// Shared BFS generation; when `census_cap` is given, aborts as soon as any
/// per-type count exceeds it. Nodes are kept as (parent, child-rank, mark)
/// triples during generation; addresses are materialized only for accepted
/// trees.
fn sample_gw_inner<R: Rng + ?Sized>(
    spec: &OffspringSpec,
    tables: &[CumTable],
    root_mark: usize,
    node_budget: usize,
    census_cap: Option<&[u64]>,
    rng: &mut R,
) -> Result<CompactTree, SampleError> {
    let d = spec.d();
    let mut compact = CompactTree {
        parent: vec![usize::MAX],
        rank: vec![0],
        marks: vec![root_mark],
        counts: vec![0u64; d],
    };
    let mut queue: usize = 0;
    compact.counts[root_mark] += 1;
    if let Some(cap) = census_cap {
        if compact.counts[root_mark] > cap[root_mark] {
            return Err(SampleError::BudgetExceeded { budget: node_budget });
        }
    }
    let mut word = Vec::new();
    while queue < compact.marks.len() {
        let mark = compact.marks[queue];
        let offspring = tables[mark].draw(rng);
        word.clear();
        for (ty, &c) in offspring.iter().enumerate() {
            for _ in 0..c {
                word.push(ty);
            }
        }
        word.shuffle(rng);
        if compact.marks.len() + word.len() > node_budget {
            return Err(SampleError::BudgetExceeded { budget: node_budget });
        }
        for (pos, &ty) in word.iter().enumerate() {
            compact.counts[ty] += 1;
            if let Some(cap) = census_cap {
                if compact.counts[ty] > cap[ty] {
                    return Err(SampleError::BudgetExceeded { budget: node_budget });
                }
            }
            compact.parent.push(queue);
            compact.rank.push(pos as u32 + 1);
            compact.marks.push(ty);
        }
        queue += 1;
    }
    Ok(compact)
}

/// Generation-time tree representation: (parent index, child rank, mark)
/// per node, parents before children. Addresses are materialized only for
/// accepted trees.
struct CompactTree {
    parent: Vec<usize>,
    rank: Vec<u32>,
    marks: Vec<usize>,
    counts: Vec<u64>,
}

impl CompactTree {
    fn materialize(self, d: usize) -> MarkedTree {
        let mut addrs: Vec<Vec<u32>> = Vec::with_capacity(self.marks.len());
        for i in 0..self.marks.len() {
            if self.parent[i] == usize::MAX {
                addrs.push(Vec::new());
            } else {
                let mut a = addrs[self.parent[i]].clone();
                a.push(self.rank[i]);
                addrs.push(a);
            }
        }
        MarkedTree::from_nodes(d, addrs.into_iter().zip(self.marks).collect::<Vec<_>>())
            .expect("sampled trees are valid")
    }
}

/// Samples the height-`h` truncation of the Kesten tree: the root is
/// special with type law `alpha-hat`; special individuals reproduce by the
/// size-biased law and pass the special mark to one child chosen with
/// probability proportional to `a*` of its type; normal individuals
/// reproduce by the plain law. Generation stops at height `h`.
pub fn sample_kesten<R: Rng + ?Sized>(
    spec: &OffspringSpec,
    spectral: &SpectralData,
    root_law: &[f64],
    h: usize,
    rng: &mut R,
) -> Result<SampledKesten, SampleError> {
    if spectral.criticality != Criticality::Critical {
        return Err(SampleError::NotCritical);
    }
    let d = spec.d();
    let a_star = &spectral.a_star;
    let normal_tables = law_tables(spec);
    let biased_tables: Vec<CumTable> = (0..d)
        .map(|i| {
            CumTable::from_weights(
                spec.law(i)
                    .iter()
                    .map(|(k, p)| {
                        let weight: f64 =
                            k.iter().zip(a_star).map(|(&kj, aj)| kj as f64 * aj).sum();
                        (k.clone(), weight / a_star[i] * ratio::to_f64(p))
                    })
                    .collect(),
            )
        })
        .collect();

    let hat_alpha: Vec<f64> = root_law.iter().zip(a_star).map(|(al, st)| al * st).collect();
    let root_mark = draw_index(&hat_alpha, rng);

    let mut nodes: Vec<(Vec<u32>, usize)> = vec![(Vec::new(), root_mark)];
    let mut spine: Vec<TypedNode> = vec![TypedNode::new(Vec::new(), root_mark)];
    // frontier entries: (addr, mark, special)
    let mut frontier: Vec<(Vec<u32>, usize, bool)> = vec![(Vec::new(), root_mark, true)];
    let mut cursor = 0;
    while cursor < frontier.len() {
        let (addr, mark, special) = frontier[cursor].clone();
        cursor += 1;
        if addr.len() >= h {
            continue;
        }
        if special {
            let offspring = biased_tables[mark].draw(rng).clone();
            let word = shuffled_word(&offspring, rng);
            let weights: Vec<f64> = word.iter().map(|&ty| a_star[ty]).collect();
            let special_pos = draw_index(&weights, rng);
            for (pos, &ty) in word.iter().enumerate() {
                let mut child = addr.clone();
                child.push(pos as u32 + 1);
                nodes.push((child.clone(), ty));
                let is_special = pos == special_pos;
                if is_special {
                    spine.push(TypedNode::new(child.clone(), ty));
                }
                frontier.push((child, ty, is_special));
            }
        } else {
            let offspring = normal_tables[mark].draw(rng).clone();
            let word = shuffled_word(&offspring, rng);
            for (pos, &ty) in word.iter().enumerate() {
                let mut child = addr.clone();
                child.push(pos as u32 + 1);
                nodes.push((child.clone(), ty));
                frontier.push((child, ty, false));
            }
        }
    }
    let tree = MarkedTree::from_nodes(d, nodes).expect("sampled trees are valid");
    debug_assert_eq!(spine.len(), h + 1, "one special individual per generation");
    Ok(SampledKesten { tree, spine })
}

/// Rejection sampler for the conditioned tree: Galton-Watson draws with a
/// budget of `|k| + 1` nodes, accepted exactly when the census matches `k`.
/// The returned tree's law is the conditioned law.
pub fn sample_conditioned<R: Rng + ?Sized>(
    spec: &OffspringSpec,
    r: usize,
    k: &[u64],
    max_attempts: u64,
    rng: &mut R,
) -> Result<MarkedTree, SampleError> {
    let tables = law_tables(spec);
    let budget = k.iter().sum::<u64>() as usize + 1;
    for _ in 0..max_attempts {
        match sample_gw_inner(spec, &tables, r, budget, Some(k), rng) {
            Ok(compact) => {
                if compact.counts == k {
                    return Ok(compact.materialize(spec.d()));
                }
            }
            Err(SampleError::BudgetExceeded { .. }) => {}
            Err(other) => return Err(other),
        }
    }
    Err(SampleError::Exhausted { attempts: max_attempts })
}

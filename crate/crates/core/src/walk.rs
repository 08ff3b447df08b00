//! Numerical verification toolkit for lattice-walk asymptotics: the uniform
//! local central limit theorem (as a discrepancy to the Gaussian kernel),
//! the strong ratio limit, the large-deviation lower bound, the weighted
//! ratio extension, and the embedding of the multi-type census walks into a
//! single random walk on `Z^{2d-1}`.
//!
//! Probabilities of `n`-step sums are exact rational numbers throughout;
//! only the Gaussian comparison and the conjugate values use floats.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::laplace::{LatticeDistribution, Legendre};
use crate::lattice::{self, Atoms};
use crate::linalg;
use crate::offspring::{OffspringSpec, SpectralData};
use crate::progeny::{walk_pmf, WalkAtomTable};
use crate::ratio;

#[derive(Debug, Error)]
pub enum WalkError {
    #[error("distribution is not aperiodic")]
    NotAperiodic,
    #[error("operation requires a certified critical spec")]
    NotCritical,
    #[error("denominator probability vanishes at n = {n}")]
    ZeroDenominator { n: u64 },
}

/// Exact law of the `n`-step sum `S_n` (binary-splitting convolution).
pub fn sum_pmf(f: &LatticeDistribution, n: u64) -> WalkAtomTable {
    WalkAtomTable {
        dimension: f.dim(),
        steps: n,
        atoms: lattice::convolve_power(f.atoms(), n, f.dim()),
    }
}

/// Exact laws of `S_0, S_1, ..., S_n` by stepwise convolution; much cheaper
/// than independent binary powers when a whole range is needed.
pub fn sum_pmf_range(f: &LatticeDistribution, n: u64) -> Vec<WalkAtomTable> {
    let mut out = Vec::with_capacity(n as usize + 1);
    let mut current = lattice::origin_mass(f.dim());
    out.push(WalkAtomTable { dimension: f.dim(), steps: 0, atoms: current.clone() });
    for step in 1..=n {
        current = lattice::convolve(&current, f.atoms());
        out.push(WalkAtomTable { dimension: f.dim(), steps: step, atoms: current.clone() });
    }
    out
}

/// `s_n = round(n E[X])`, the mean-directed lattice sequence.
pub fn mean_directed_census(f: &LatticeDistribution, n: u64) -> Vec<i64> {
    f.mean_exact()
        .iter()
        .map(|m| ratio::round_to_i64(&(m * BigRational::from(BigInt::from(n)))))
        .collect()
}

#[derive(Debug, Clone)]
pub struct GnedenkoReport {
    pub n: u64,
    /// Supremum of the local-CLT discrepancy over the tilt grid and the
    /// support of the exact law, including the off-support Gaussian term.
    pub sup_discrepancy: f64,
    pub on_support_sup: f64,
    /// Maximum of the Gaussian term over lattice points where the exact
    /// probability is zero (there the discrepancy is the Gaussian alone).
    pub off_support_gauss_max: f64,
    /// Per tilt-grid point: the discrepancy supremum over `s`.
    pub per_theta: Vec<f64>,
}

/// Uniform local-CLT discrepancy
/// `sup |n^{D/2} |Sigma|^{1/2} P_theta(S_n = s) - (2 pi)^{-D/2} e^{-|z|^2/2}|`
/// over the tilt grid and `s in Z^D`, with
/// `z = n^{-1/2} Sigma^{-1/2} (s - n m_theta)`.
///
/// The tilted `n`-step law is exact: tilting commutes with convolution, so
/// `P_theta(S_n = s) = e^{<theta, s> - n phi(theta)} P(S_n = s)`.
pub fn gnedenko_discrepancy(
    f: &LatticeDistribution,
    theta_grid: &[Vec<f64>],
    n: u64,
) -> Result<GnedenkoReport, WalkError> {
    if !f.lattice_aperiodic() {
        return Err(WalkError::NotAperiodic);
    }
    let dim = f.dim();
    let table = sum_pmf(f, n);
    let nf = n as f64;
    let mut on_sup: f64 = 0.0;
    let mut off_max: f64 = 0.0;

    // bounding box of the support, with margin for the off-support scan
    let margin = 3i64;
    let mut lo = vec![i64::MAX; dim];
    let mut hi = vec![i64::MIN; dim];
    for s in table.atoms.keys() {
        for j in 0..dim {
            lo[j] = lo[j].min(s[j]);
            hi[j] = hi[j].max(s[j]);
        }
    }

    let mut per_theta = Vec::with_capacity(theta_grid.len());
    for theta in theta_grid {
        let view = f.tilt(theta);
        let det = view.covariance_det();
        assert!(det > 0.0, "aperiodicity forces a non-degenerate covariance");
        let inv = linalg::inverse_f64(&view.covariance);
        let phi = view.log_normalizer;
        let scale = nf.powf(dim as f64 / 2.0) * det.sqrt();
        let gauss_norm = (2.0 * std::f64::consts::PI).powf(-(dim as f64) / 2.0);

        let gauss_at = |s: &[i64]| -> f64 {
            let centered: Vec<f64> =
                s.iter().zip(&view.mean).map(|(&si, m)| si as f64 - nf * m).collect();
            let z2 = linalg::dot(&centered, &linalg::mat_vec(&inv, &centered)) / nf;
            gauss_norm * (-z2 / 2.0).exp()
        };

        let mut theta_sup: f64 = 0.0;
        for (s, p) in &table.atoms {
            let tilted = ((inner_if64(theta, s)) - nf * phi).exp() * ratio::to_f64(p);
            let diff = (scale * tilted - gauss_at(s)).abs();
            theta_sup = theta_sup.max(diff);
        }

        // off the support the exact term vanishes; the Gaussian part peaks
        // near n m_theta which is inside the support region, so a bounded
        // margin around the box captures its off-support maximum
        let mut theta_off: f64 = 0.0;
        let mut cursor = lo.iter().map(|&v| v - margin).collect::<Vec<i64>>();
        loop {
            if !table.atoms.contains_key(&cursor) {
                theta_off = theta_off.max(gauss_at(&cursor));
            }
            let mut pos = 0;
            loop {
                if pos == dim {
                    break;
                }
                cursor[pos] += 1;
                if cursor[pos] <= hi[pos] + margin {
                    break;
                }
                cursor[pos] = lo[pos] - margin;
                pos += 1;
            }
            if pos == dim {
                break;
            }
        }
        on_sup = on_sup.max(theta_sup);
        off_max = off_max.max(theta_off);
        per_theta.push(theta_sup.max(theta_off));
    }
    Ok(GnedenkoReport {
        n,
        sup_discrepancy: on_sup.max(off_max),
        on_support_sup: on_sup,
        off_support_gauss_max: off_max,
        per_theta,
    })
}

fn inner_if64(theta: &[f64], s: &[i64]) -> f64 {
    theta.iter().zip(s).map(|(t, &x)| t * x as f64).sum()
}

/// Exact ratio `P(S_{n-m} = s_n - b) / P(S_n = s_n)`.
pub fn strong_ratio(
    f: &LatticeDistribution,
    n: u64,
    m: u64,
    b: &[i64],
    s_n: &[i64],
) -> Result<BigRational, WalkError> {
    let den = sum_pmf(f, n).prob(s_n);
    if den.is_zero() {
        return Err(WalkError::ZeroDenominator { n });
    }
    let shifted: Vec<i64> = s_n.iter().zip(b).map(|(s, o)| s - o).collect();
    let num = sum_pmf(f, n - m).prob(&shifted);
    Ok(num / den)
}

#[derive(Debug, Clone, Copy)]
pub struct LowerBoundCheck {
    pub n: u64,
    pub holds: bool,
    /// `log(P(S_n = s_n)) + n psi(s_n/n) - n log(1 - eta)`, non-negative
    /// when the bound holds.
    pub log_margin: f64,
    pub lhs_log: f64,
}

/// Checks `P(S_n = s_n) e^{n psi(s_n/n)} >= (1 - eta)^n`.
pub fn lower_bound_check(
    f: &LatticeDistribution,
    n: u64,
    s_n: &[i64],
    eta: f64,
) -> LowerBoundCheck {
    assert!(eta > 0.0 && eta < 1.0, "eta must lie in (0, 1)");
    let p = sum_pmf(f, n).prob(s_n);
    let x: Vec<f64> = s_n.iter().map(|&v| v as f64 / n as f64).collect();
    let psi = match f.legendre(&x) {
        Legendre::Finite(v) => v,
        Legendre::Infinite => f64::INFINITY,
    };
    let lhs_log = if p.is_zero() {
        f64::NEG_INFINITY
    } else {
        ratio::to_f64(&p).ln() + n as f64 * psi
    };
    let rhs_log = n as f64 * (1.0 - eta).ln();
    LowerBoundCheck { n, holds: lhs_log >= rhs_log, log_margin: lhs_log - rhs_log, lhs_log }
}

/// Same check across a range of `n`, with the step laws shared; reports the
/// first index from which the bound holds through the end of the range.
pub fn lower_bound_sweep(
    f: &LatticeDistribution,
    n_range: std::ops::RangeInclusive<u64>,
    eta: f64,
) -> (Vec<LowerBoundCheck>, Option<u64>) {
    let n_max = *n_range.end();
    let tables = sum_pmf_range(f, n_max);
    let mut checks = Vec::new();
    for n in n_range {
        let s_n = mean_directed_census(f, n);
        let p = tables[n as usize].prob(&s_n);
        let x: Vec<f64> = s_n.iter().map(|&v| v as f64 / n as f64).collect();
        let psi = match f.legendre(&x) {
            Legendre::Finite(v) => v,
            Legendre::Infinite => f64::INFINITY,
        };
        let lhs_log = if p.is_zero() {
            f64::NEG_INFINITY
        } else {
            ratio::to_f64(&p).ln() + n as f64 * psi
        };
        let rhs_log = n as f64 * (1.0 - eta).ln();
        checks.push(LowerBoundCheck {
            n,
            holds: lhs_log >= rhs_log,
            log_margin: lhs_log - rhs_log,
            lhs_log,
        });
    }
    let empirical_n0 = checks
        .iter()
        .rev()
        .take_while(|c| c.holds)
        .last()
        .map(|c| c.n);
    (checks, empirical_n0)
}

/// A finite joint law of a scalar weight `G` and a lattice shift `H'`,
/// independent of the walk, with the domination `G <= |H'|^c`.
#[derive(Debug, Clone)]
pub struct WeightPair {
    atoms: Vec<(u64, Vec<i64>, BigRational)>,
    pub exponent: u32,
}

impl WeightPair {
    pub fn new(atoms: Vec<(u64, Vec<i64>, BigRational)>, exponent: u32) -> Result<Self, String> {
        assert!(exponent >= 1);
        let mass = atoms
            .iter()
            .fold(BigRational::zero(), |a, (_, _, p)| a + p);
        if !mass.is_one() {
            return Err(format!("weight atoms must sum to 1, got {}", ratio::render(&mass)));
        }
        let all_zero = atoms.iter().all(|(g, _, p)| *g == 0 || p.is_zero());
        if all_zero {
            return Err("P(G = 0) must be < 1".into());
        }
        for (g, h, p) in &atoms {
            if p.is_zero() {
                continue;
            }
            let l1: u64 = h.iter().map(|v| v.unsigned_abs()).sum();
            let bound = (l1 as u128).pow(exponent);
            if (*g as u128) > bound {
                return Err(format!("atom violates G <= |H'|^{exponent}: g={g}, |h|={l1}"));
            }
        }
        Ok(WeightPair { atoms, exponent })
    }

    /// Degenerate weights `G = 1`, `H' = h0`; reduces the weighted ratio to
    /// the plain strong ratio.
    pub fn trivial(h0: Vec<i64>) -> Self {
        WeightPair { atoms: vec![(1, h0, BigRational::one())], exponent: 1 }
    }

    pub fn atoms(&self) -> &[(u64, Vec<i64>, BigRational)] {
        &self.atoms
    }
}

/// Exact weighted ratio
/// `E[G; H' + W_{n-l} = w_n - b] / E[G; H' + W_n = w_n]`.
pub fn weighted_ratio(
    f: &LatticeDistribution,
    w: &WeightPair,
    n: u64,
    l: u64,
    b: &[i64],
    w_n: &[i64],
) -> Result<BigRational, WalkError> {
    let expectation = |steps: u64, target: &[i64]| -> BigRational {
        let table = sum_pmf(f, steps);
        w.atoms
            .iter()
            .map(|(g, h, p)| {
                let need: Vec<i64> = target.iter().zip(h).map(|(t, hh)| t - hh).collect();
                BigRational::from(BigInt::from(*g)) * p * table.prob(&need)
            })
            .fold(BigRational::zero(), |a, x| a + x)
    };
    let den = expectation(n, w_n);
    if den.is_zero() {
        return Err(WalkError::ZeroDenominator { n });
    }
    let shifted: Vec<i64> = w_n.iter().zip(b).map(|(t, o)| t - o).collect();
    Ok(expectation(n - l, &shifted) / den)
}

/// The embedding of the `d` census walks into a single walk on `Z^{2d-1}`:
/// `Y = (U, V)` picks a type `i` with probability `a_i`, reports the
/// offspring vector of that type in the first `d` coordinates and the type
/// indicator (types `1..d-1`; the last type maps to the zero vector) in the
/// remaining `d-1`.
#[derive(Debug, Clone)]
pub struct EmbeddedWalk {
    pub law: LatticeDistribution,
    pub d: usize,
    pub a: Vec<BigRational>,
}

pub fn embed_multitype(
    spec: &OffspringSpec,
    spectral: &SpectralData,
) -> Result<EmbeddedWalk, WalkError> {
    let eigen = spectral.exact.as_ref().ok_or(WalkError::NotCritical)?;
    if !spec.is_aperiodic() {
        return Err(WalkError::NotAperiodic);
    }
    let d = spec.d();
    let total_dim = 2 * d - 1;
    let mut atoms = Atoms::new();
    for i in 0..d {
        for (u, p) in spec.law(i) {
            let mut point: Vec<i64> = u.iter().map(|&x| x as i64).collect();
            for j in 0..d - 1 {
                point.push(i64::from(j == i));
            }
            *atoms.entry(point).or_insert_with(BigRational::zero) += &eigen.a[i] * p;
        }
    }
    let law = LatticeDistribution::new(total_dim, atoms)
        .expect("mixture of probability laws is a probability law");
    if !law.lattice_aperiodic() {
        return Err(WalkError::NotAperiodic);
    }
    // E[Y] = delta(a, a) at criticality
    debug_assert_eq!(
        law.mean_exact(),
        EmbeddedWalk::delta_exact(&eigen.a, &eigen.a),
        "embedded mean must be delta(a, a)"
    );
    Ok(EmbeddedWalk { law, d, a: eigen.a.clone() })
}

impl EmbeddedWalk {
    /// `D(k) = (|k|! / prod k_i!) prod a_i^{k_i}`.
    pub fn d_factor(&self, k: &[u64]) -> BigRational {
        let mut acc = BigRational::from(ratio::multinomial(k));
        for (i, &ki) in k.iter().enumerate() {
            for _ in 0..ki {
                acc *= &self.a[i];
            }
        }
        acc
    }

    /// `delta(x, z) = (x, z_1, ..., z_{d-1})`.
    pub fn delta(x: &[i64], z: &[i64]) -> Vec<i64> {
        let mut out = x.to_vec();
        out.extend_from_slice(&z[..z.len() - 1]);
        out
    }

    fn delta_exact(x: &[BigRational], z: &[BigRational]) -> Vec<BigRational> {
        let mut out = x.to_vec();
        out.extend_from_slice(&z[..z.len() - 1]);
        out
    }

    /// Exact check of `P(W_{|k|} = delta(s, k)) = D(k) P(S_k = s)`.
    pub fn sy_identity_holds(&self, spec: &OffspringSpec, k: &[u64], s: &[i64]) -> bool {
        let total: u64 = k.iter().sum();
        let lhs = sum_pmf(&self.law, total).prob(&Self::delta(
            s,
            &k.iter().map(|&x| x as i64).collect::<Vec<_>>(),
        ));
        let rhs = self.d_factor(k) * census_walk_sum_pmf(spec, k).prob(s);
        lhs == rhs
    }
}

/// Exact law of `S_k = sum_i S_{i, k_i}`, the joint census-walk sum.
pub fn census_walk_sum_pmf(spec: &OffspringSpec, k: &[u64]) -> WalkAtomTable {
    let d = spec.d();
    let mut atoms = lattice::origin_mass(d);
    for (i, &ki) in k.iter().enumerate() {
        atoms = lattice::convolve(&atoms, &walk_pmf(spec, i, ki).atoms);
    }
    WalkAtomTable { dimension: d, steps: k.iter().sum(), atoms }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::offspring::perron;
    use crate::presets;
    use crate::ratio::q;

    fn coin() -> LatticeDistribution {
        LatticeDistribution::uniform(1, &[vec![0], vec![1]])
    }

    fn die3() -> LatticeDistribution {
        LatticeDistribution::uniform(1, &[vec![0], vec![1], vec![2]])
    }

    fn binom(n: u64, k: u64) -> BigInt {
        let mut acc = BigInt::one();
        for i in 0..k {
            acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
        }
        acc
    }

    #[test]
    fn sum_pmf_binomial_spot() {
        let t = sum_pmf(&coin(), 100);
        let expected = BigRational::new(binom(100, 50), BigInt::from(2u8).pow(100));
        assert_eq!(t.prob(&[50]), expected);

        let t0 = sum_pmf(&die3(), 0);
        assert_eq!(t0.prob(&[0]), q(1, 1));
    }

    #[test]
    fn sum_pmf_product_structure() {
        // independent coordinates: product of binomials
        let square =
            LatticeDistribution::uniform(2, &[vec![0, 0], vec![1, 0], vec![0, 1], vec![1, 1]]);
        let t = sum_pmf(&square, 10);
        let expected = BigRational::new(binom(10, 3), BigInt::from(2u8).pow(10))
            * BigRational::new(binom(10, 7), BigInt::from(2u8).pow(10));
        assert_eq!(t.prob(&[3, 7]), expected);
    }

    #[test]
    fn range_matches_binary_power() {
        let f = die3();
        let range = sum_pmf_range(&f, 12);
        for n in [0u64, 1, 5, 12] {
            assert_eq!(range[n as usize].atoms, sum_pmf(&f, n).atoms);
        }
    }

    #[test]
    fn gnedenko_spot_value() {
        // binomial(100, 1/2) at the center vs the Gaussian peak height
        let report = gnedenko_discrepancy(&coin(), &[vec![0.0]], 100).unwrap();
        let expected = 0.39894 - 0.39794; // ~1.0e-3
        assert!(
            (report.sup_discrepancy - expected).abs() < 0.1 * expected,
            "discrepancy {} vs expected {}",
            report.sup_discrepancy,
            expected
        );
    }

    #[test]
    fn gnedenko_decays() {
        let grid = vec![vec![-1.0], vec![0.0], vec![1.0]];
        let d16 = gnedenko_discrepancy(&die3(), &grid, 16).unwrap();
        let d64 = gnedenko_discrepancy(&die3(), &grid, 64).unwrap();
        assert!(d64.sup_discrepancy < d16.sup_discrepancy);
    }

    #[test]
    fn gnedenko_rejects_periodic() {
        let pm = LatticeDistribution::point_mass(vec![1]);
        assert!(matches!(
            gnedenko_discrepancy(&pm, &[vec![0.0]], 4),
            Err(WalkError::NotAperiodic)
        ));
    }

    #[test]
    fn strong_ratio_binomial_identity() {
        // 2 C(99,49) / C(100,50) = 1 exactly
        let r = strong_ratio(&coin(), 100, 1, &[1], &[50]).unwrap();
        assert_eq!(r, q(1, 1));

        // m = 0, b = 0: trivially 1
        let r = strong_ratio(&die3(), 37, 0, &[0], &[37]).unwrap();
        assert_eq!(r, q(1, 1));
    }

    #[test]
    fn strong_ratio_converges() {
        let f = die3();
        let r200 = strong_ratio(&f, 200, 1, &[0], &[200]).unwrap();
        let dev = (ratio::to_f64(&r200) - 1.0).abs();
        assert!(dev < 0.05, "|ratio - 1| = {dev}");
        let r50 = strong_ratio(&f, 50, 1, &[0], &[50]).unwrap();
        assert!(dev <= (ratio::to_f64(&r50) - 1.0).abs());
    }

    #[test]
    fn strong_ratio_zero_denominator() {
        let even = LatticeDistribution::uniform(1, &[vec![0], vec![2]]);
        assert!(matches!(
            strong_ratio(&even, 9, 1, &[0], &[9]),
            Err(WalkError::ZeroDenominator { n: 9 })
        ));
    }

    #[test]
    fn lower_bound_examples() {
        // uniform{0,1} at the center beats (1-eta)^n quickly
        let c = lower_bound_check(&coin(), 40, &[20], 0.1);
        assert!(c.holds);

        // eta = 0.2 holds over the whole range
        let (checks, n0) = lower_bound_sweep(&die3(), 20..=60, 0.2);
        assert!(checks.iter().all(|c| c.holds));
        assert_eq!(n0, Some(20));

        // eta = 0.05 needs n of order 1/eta * log(1/eta): the probability
        // at the mean is ~ c/sqrt(n) while (0.95)^20 is still 0.36
        let c = lower_bound_check(&die3(), 20, &[20], 0.05);
        assert!(!c.holds);
        let c = lower_bound_check(&die3(), 60, &[60], 0.05);
        assert!(c.holds);

        // eta close to 1: trivially true
        let c = lower_bound_check(&die3(), 5, &[5], 0.99);
        assert!(c.holds);
    }

    #[test]
    fn weighted_ratio_trivial_weights() {
        let f = die3();
        let w = WeightPair::trivial(vec![0]);
        for n in [40u64, 80] {
            let plain = strong_ratio(&f, n, 1, &[1], &[n as i64]).unwrap();
            let weighted = weighted_ratio(&f, &w, n, 1, &[1], &[n as i64]).unwrap();
            assert_eq!(plain, weighted);
        }
    }

    #[test]
    fn weighted_ratio_converges() {
        // G = |H'|, H' uniform on {1, 2}
        let w = WeightPair::new(
            vec![(1, vec![1], q(1, 2)), (2, vec![2], q(1, 2))],
            1,
        )
        .unwrap();
        let f = die3();
        let r = weighted_ratio(&f, &w, 200, 1, &[0], &[200]).unwrap();
        assert!((ratio::to_f64(&r) - 1.0).abs() < 0.05);

        // l = 0, b = 0: exactly 1
        let r = weighted_ratio(&f, &w, 60, 0, &[0], &[60]).unwrap();
        assert_eq!(r, q(1, 1));
    }

    #[test]
    fn weight_pair_validation() {
        assert!(WeightPair::new(vec![(0, vec![0], q(1, 1))], 1).is_err());
        assert!(WeightPair::new(vec![(5, vec![1], q(1, 1))], 1).is_err());
        assert!(WeightPair::new(vec![(5, vec![1], q(1, 2))], 1).is_err()); // mass 1/2
        assert!(WeightPair::new(vec![(2, vec![1, 1], q(1, 1))], 1).is_ok());
    }

    #[test]
    fn embedding_e1() {
        let spec = presets::two_type_uniform();
        let spectral = perron(&spec).unwrap();
        let e = embed_multitype(&spec, &spectral).unwrap();
        assert_eq!(e.law.dim(), 3);
        assert!(e.law.lattice_aperiodic());

        // D((n, 0)) = a_1^n
        assert_eq!(e.d_factor(&[3, 0]), q(1, 8));

        // eq between the embedded walk and the census walks at small (k, s)
        assert!(e.sy_identity_holds(&spec, &[1, 1], &[0, 1]));
        assert!(e.sy_identity_holds(&spec, &[2, 1], &[1, 2]));
        assert!(e.sy_identity_holds(&spec, &[1, 2], &[2, 0]));
    }

    #[test]
    fn embedding_identity_full_sweep() {
        // P(W_{|k|} = delta(s, k)) = D(k) P(S_k = s) as an exact identity
        // of whole tables, for every census with |k| <= 6 on E1
        let spec = presets::two_type_uniform();
        let spectral = perron(&spec).unwrap();
        let e = embed_multitype(&spec, &spectral).unwrap();
        for k in crate::progeny::censuses_up_to(2, 6) {
            let total: u64 = k.iter().sum();
            if total == 0 {
                continue;
            }
            let joint = census_walk_sum_pmf(&spec, &k);
            let embedded = sum_pmf(&e.law, total);
            let d_factor = e.d_factor(&k);
            let k_i64: Vec<i64> = k.iter().map(|&x| x as i64).collect();
            // every census atom matches through the embedding
            for (s, p) in &joint.atoms {
                let lhs = embedded.prob(&EmbeddedWalk::delta(s, &k_i64));
                assert_eq!(lhs, d_factor.clone() * p, "k={k:?}, s={s:?}");
            }
            // and the embedded walk puts no extra mass on the k-slice:
            // the last coordinate counts the type-1 steps
            let slice_mass: BigRational = embedded
                .atoms
                .iter()
                .filter(|(point, _)| point[2] == k_i64[0])
                .map(|(_, p)| p.clone())
                .fold(BigRational::zero(), |a, b| a + b);
            let joint_mass: BigRational = joint
                .atoms
                .values()
                .fold(BigRational::zero(), |a, b| a + b);
            assert_eq!(slice_mass, d_factor * joint_mass, "slice mass at k={k:?}");
        }
    }

    #[test]
    fn embedding_requires_aperiodicity() {
        let spec = presets::monotype_binary(); // support {0,2}: periodic
        let spectral = perron(&spec).unwrap();
        assert!(matches!(
            embed_multitype(&spec, &spectral),
            Err(WalkError::NotAperiodic)
        ));
    }
}

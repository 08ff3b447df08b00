//! Offspring distributions with exact rational weights, their spectral data
//! (Perron root and eigenvectors), criticality and aperiodicity
//! classification, and the size-biased laws driving Kesten's tree.
//!
//! Weights stay rational throughout; eigen-data is computed in floats by
//! power iteration and, whenever the Perron root is certified to be exactly
//! 1 (or rational for d <= 2), re-derived exactly by rational elimination.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::{self, LatticeBasis};
use crate::linalg::{self, RatMatrix};
use crate::ratio;

/// A finite-support probability law on `N^d`, exact weights.
pub type MultiPmf = BTreeMap<Vec<u64>, BigRational>;

#[derive(Debug, Error)]
pub enum OffspringError {
    #[error("law {law} does not sum to 1 (sum = {sum})")]
    NotNormalized { law: usize, sum: String },
    #[error("law {law} has a weight outside [0, 1]")]
    WeightOutOfRange { law: usize },
    #[error("law {law}: offspring vector has wrong dimension")]
    BadDimension { law: usize },
    #[error("expected {expected} laws, got {got}")]
    WrongLawCount { expected: usize, got: usize },
    #[error("mean matrix is not primitive (no positive power up to the Wielandt bound)")]
    NotPrimitive,
    #[error("operation requires a certified critical spec (Perron root exactly 1)")]
    NotCritical,
    #[error("size-biasing weight <alpha, a*> vanishes")]
    ZeroMass,
    #[error("malformed offspring JSON: {0}")]
    Json(String),
}

/// The offspring specification: `d` laws on `N^d`, one per parent type.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OffspringSpec {
    d: usize,
    laws: Vec<MultiPmf>,
}

impl OffspringSpec {
    pub fn from_laws(d: usize, laws: Vec<Vec<(Vec<u64>, BigRational)>>) -> Result<Self, OffspringError> {
        if laws.len() != d {
            return Err(OffspringError::WrongLawCount { expected: d, got: laws.len() });
        }
        let mut built = Vec::with_capacity(d);
        for (i, law) in laws.into_iter().enumerate() {
            let mut pmf = MultiPmf::new();
            let mut sum = BigRational::zero();
            for (k, p) in law {
                if k.len() != d {
                    return Err(OffspringError::BadDimension { law: i });
                }
                if p.is_negative() || p > BigRational::one() {
                    return Err(OffspringError::WeightOutOfRange { law: i });
                }
                sum += &p;
                if !p.is_zero() {
                    *pmf.entry(k).or_insert_with(BigRational::zero) += p;
                }
            }
            if !sum.is_one() {
                return Err(OffspringError::NotNormalized { law: i, sum: ratio::render(&sum) });
            }
            built.push(pmf);
        }
        Ok(OffspringSpec { d, laws: built })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// The law of the offspring vector of a type-`i` parent.
    pub fn law(&self, i: usize) -> &MultiPmf {
        &self.laws[i]
    }

    /// Probability of offspring vector `k` for a type-`i` parent (0 when the
    /// atom is absent).
    pub fn prob(&self, i: usize, k: &[u64]) -> BigRational {
        self.laws[i].get(k).cloned().unwrap_or_else(BigRational::zero)
    }

    /// Mean matrix `m_ij = E[# type-j children of a type-i parent]`, exact.
    pub fn mean_matrix(&self) -> RatMatrix {
        (0..self.d)
            .map(|i| {
                (0..self.d)
                    .map(|j| {
                        self.laws[i]
                            .iter()
                            .map(|(k, p)| BigRational::from(BigInt::from(k[j])) * p)
                            .fold(BigRational::zero(), |a, b| a + b)
                    })
                    .collect()
            })
            .collect()
    }

    /// Aperiodicity of the offspring distribution: the subgroup of `Z^d`
    /// generated by the union over types of `supp p^(i) - supp p^(i)` must
    /// be all of `Z^d`.
    pub fn is_aperiodic(&self) -> bool {
        let mut gens: Vec<Vec<i64>> = Vec::new();
        for law in &self.laws {
            let support: Vec<Vec<i64>> = law
                .keys()
                .map(|k| k.iter().map(|&x| x as i64).collect())
                .collect();
            gens.extend(lattice::difference_generators(support.iter()));
        }
        lattice::generates_full_lattice(&gens, self.d)
    }

    /// JSON form `{"d":2,"laws":[[{"k":[0,0],"p":"1/4"},...],...]}` with
    /// probabilities as rational strings.
    pub fn to_json(&self) -> String {
        let repr = SpecRepr {
            d: self.d,
            laws: self
                .laws
                .iter()
                .map(|law| {
                    law.iter()
                        .map(|(k, p)| AtomRepr { k: k.clone(), p: ratio::render(p) })
                        .collect()
                })
                .collect(),
        };
        serde_json::to_string_pretty(&repr).expect("spec serialization cannot fail")
    }

    pub fn from_json(s: &str) -> Result<Self, OffspringError> {
        let repr: SpecRepr =
            serde_json::from_str(s).map_err(|e| OffspringError::Json(e.to_string()))?;
        let mut laws = Vec::with_capacity(repr.laws.len());
        for (i, law) in repr.laws.into_iter().enumerate() {
            let mut atoms = Vec::with_capacity(law.len());
            for atom in law {
                let p = ratio::parse(&atom.p)
                    .map_err(|e| OffspringError::Json(format!("law {i}: {e}")))?;
                atoms.push((atom.k, p));
            }
            laws.push(atoms);
        }
        OffspringSpec::from_laws(repr.d, laws)
    }
}

#[derive(Serialize, Deserialize)]
struct SpecRepr {
    d: usize,
    laws: Vec<Vec<AtomRepr>>,
}

#[derive(Serialize, Deserialize)]
struct AtomRepr {
    k: Vec<u64>,
    p: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Criticality {
    Subcritical,
    Critical,
    Supercritical,
}

impl std::fmt::Display for Criticality {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Criticality::Subcritical => write!(f, "subcritical"),
            Criticality::Critical => write!(f, "critical"),
            Criticality::Supercritical => write!(f, "supercritical"),
        }
    }
}

/// Exact eigen-data, available when the Perron root is certified rational
/// (in practice: certified equal to 1).
#[derive(Debug, Clone)]
pub struct ExactEigen {
    /// Left eigenvector, normalized to sum to 1.
    pub a: Vec<BigRational>,
    /// Right eigenvector, normalized so that `<a, a*> = 1`.
    pub a_star: Vec<BigRational>,
}

#[derive(Debug, Clone)]
pub struct SpectralData {
    pub mean: RatMatrix,
    pub rho: f64,
    /// Left Perron eigenvector (probability vector).
    pub a: Vec<f64>,
    /// Right Perron eigenvector with `<a, a*> = 1`.
    pub a_star: Vec<f64>,
    pub primitive: bool,
    pub criticality: Criticality,
    /// Whether the criticality call is certified by exact arithmetic rather
    /// than decided from the float Perron root.
    pub certified: bool,
    pub exact: Option<ExactEigen>,
}

impl SpectralData {
    pub fn exact(&self) -> Result<&ExactEigen, OffspringError> {
        self.exact.as_ref().ok_or(OffspringError::NotCritical)
    }
}

/// Wielandt's bound: a non-negative d x d matrix is primitive iff some power
/// up to `(d-1)^2 + 1` is strictly positive. Positivity of powers only
/// depends on the zero pattern, so the check is boolean.
fn is_primitive(mean: &RatMatrix) -> bool {
    let d = mean.len();
    let pattern: Vec<Vec<bool>> =
        mean.iter().map(|row| row.iter().map(|x| x.is_positive()).collect()).collect();
    let bound = (d - 1) * (d - 1) + 1;
    let mut power = pattern.clone();
    for _ in 0..bound {
        if power.iter().all(|row| row.iter().all(|&b| b)) {
            return true;
        }
        let mut next = vec![vec![false; d]; d];
        for i in 0..d {
            for j in 0..d {
                next[i][j] = (0..d).any(|k| power[i][k] && pattern[k][j]);
            }
        }
        power = next;
    }
    power.iter().all(|row| row.iter().all(|&b| b))
}

/// Is `x` the square of a rational? Returns the positive square root.
fn rational_sqrt(x: &BigRational) -> Option<BigRational> {
    if x.is_negative() {
        return None;
    }
    let ns = x.numer().sqrt();
    let ds = x.denom().sqrt();
    if &ns * &ns == *x.numer() && &ds * &ds == *x.denom() {
        Some(BigRational::new(ns, ds))
    } else {
        None
    }
}

/// For d <= 2 the Perron root is algebraic of degree <= 2; decide exactly
/// whether it is rational, and if so return it.
fn exact_perron_root(mean: &RatMatrix) -> Option<BigRational> {
    match mean.len() {
        1 => Some(mean[0][0].clone()),
        2 => {
            let tr = &mean[0][0] + &mean[1][1];
            let det = &mean[0][0] * &mean[1][1] - &mean[0][1] * &mean[1][0];
            let disc = &tr * &tr - BigRational::from_integer(4.into()) * det;
            let root = rational_sqrt(&disc)?;
            Some((tr + root) / BigRational::from_integer(2.into()))
        }
        _ => None,
    }
}

fn exact_eigenvectors(mean: &RatMatrix) -> Option<ExactEigen> {
    let d = mean.len();
    let shifted = linalg::rat_sub(mean, &linalg::rat_identity(d));
    let a_star_raw = linalg::rat_nullspace_1d(&shifted)?;
    let a_raw = linalg::rat_nullspace_1d(&linalg::rat_transpose(&shifted))?;
    // Perron vectors can be normalized positive; fix signs first.
    let fix_sign = |v: Vec<BigRational>| -> Option<Vec<BigRational>> {
        if v.iter().all(|x| x.is_positive()) {
            Some(v)
        } else if v.iter().all(|x| x.is_negative()) {
            Some(v.into_iter().map(|x| -x).collect())
        } else {
            None
        }
    };
    let a_star_raw = fix_sign(a_star_raw)?;
    let a_raw = fix_sign(a_raw)?;
    let a_sum = a_raw.iter().fold(BigRational::zero(), |s, x| s + x);
    let a: Vec<BigRational> = a_raw.iter().map(|x| x / &a_sum).collect();
    let inner = a
        .iter()
        .zip(&a_star_raw)
        .fold(BigRational::zero(), |s, (x, y)| s + x * y);
    let a_star: Vec<BigRational> = a_star_raw.iter().map(|x| x / &inner).collect();
    Some(ExactEigen { a, a_star })
}

/// Perron-Frobenius analysis of the spec's mean matrix.
pub fn perron(spec: &OffspringSpec) -> Result<SpectralData, OffspringError> {
    let mean = spec.mean_matrix();
    perron_of_matrix(&mean)
}

/// Same as [`perron`], starting from an explicit non-negative matrix.
pub fn perron_of_matrix(mean: &RatMatrix) -> Result<SpectralData, OffspringError> {
    let d = mean.len();
    if !is_primitive(mean) {
        return Err(OffspringError::NotPrimitive);
    }
    let float_mean = linalg::to_f64_matrix(mean);
    let pi = linalg::power_iteration(&float_mean);

    // Certified criticality: 1 is an exact eigenvalue and the float Perron
    // root sits at 1. For d <= 2 the root itself is decided exactly.
    let shifted = linalg::rat_sub(mean, &linalg::rat_identity(d));
    let one_is_eigenvalue = linalg::rat_det(&shifted).is_zero();
    let mut criticality;
    let mut certified;
    if one_is_eigenvalue && (pi.rho - 1.0).abs() <= 1e-10 {
        criticality = Criticality::Critical;
        certified = true;
    } else {
        criticality = match pi.rho {
            r if (r - 1.0).abs() <= 1e-10 => Criticality::Critical,
            r if r < 1.0 => Criticality::Subcritical,
            _ => Criticality::Supercritical,
        };
        certified = false;
    }
    if !certified {
        if let Some(root) = exact_perron_root(mean) {
            criticality = if root == BigRational::one() {
                Criticality::Critical
            } else if root < BigRational::one() {
                Criticality::Subcritical
            } else {
                Criticality::Supercritical
            };
            certified = true;
        }
    }
    let exact = if criticality == Criticality::Critical && certified {
        exact_eigenvectors(mean)
    } else {
        None
    };
    let (rho, a, a_star) = match &exact {
        Some(e) => (
            1.0,
            e.a.iter().map(ratio::to_f64).collect(),
            e.a_star.iter().map(ratio::to_f64).collect(),
        ),
        None => (pi.rho, pi.left, pi.right),
    };
    Ok(SpectralData {
        mean: mean.clone(),
        rho,
        a,
        a_star,
        primitive: true,
        criticality,
        certified,
        exact,
    })
}

#[derive(Debug, Clone)]
pub struct Classification {
    pub criticality: Criticality,
    pub certified: bool,
    pub non_singular: bool,
}

/// Criticality plus the non-singularity flag. The generating function obeys
/// `f(s) = Ms` identically exactly when every individual has exactly one
/// child, i.e. every law is supported on the unit vectors.
pub fn classify(spec: &OffspringSpec) -> Result<Classification, OffspringError> {
    let spectral = perron(spec)?;
    let singular = (0..spec.d()).all(|i| {
        spec.law(i)
            .keys()
            .all(|k| k.iter().sum::<u64>() == 1)
    });
    Ok(Classification {
        criticality: spectral.criticality,
        certified: spectral.certified,
        non_singular: !singular,
    })
}

/// The size-biased offspring laws `p̂^(i)(k) = (<k, a*> / a*_i) p^(i)(k)`.
/// Exact; requires certified criticality so that each `p̂^(i)` is a
/// probability.
pub fn size_biased_offspring(
    spec: &OffspringSpec,
    spectral: &SpectralData,
) -> Result<Vec<MultiPmf>, OffspringError> {
    let eigen = spectral.exact()?;
    let mut out = Vec::with_capacity(spec.d());
    for i in 0..spec.d() {
        let mut law = MultiPmf::new();
        for (k, p) in spec.law(i) {
            let weight = k
                .iter()
                .zip(&eigen.a_star)
                .fold(BigRational::zero(), |s, (&kj, aj)| {
                    s + BigRational::from(BigInt::from(kj)) * aj
                });
            let w = weight / &eigen.a_star[i] * p;
            if !w.is_zero() {
                law.insert(k.clone(), w);
            }
        }
        debug_assert!(lattice_mass(&law).is_one(), "size-biased law must sum to rho = 1");
        out.push(law);
    }
    Ok(out)
}

fn lattice_mass(law: &MultiPmf) -> BigRational {
    law.values().fold(BigRational::zero(), |a, b| a + b)
}

/// Size-biased root law `α̂(i) = α(i) a*_i / <α, a*>`.
pub fn size_biased_root(
    alpha: &[BigRational],
    a_star: &[BigRational],
) -> Result<Vec<BigRational>, OffspringError> {
    let inner = alpha
        .iter()
        .zip(a_star)
        .fold(BigRational::zero(), |s, (x, y)| s + x * y);
    if inner.is_zero() {
        return Err(OffspringError::ZeroMass);
    }
    Ok(alpha.iter().zip(a_star).map(|(x, y)| x * y / &inner).collect())
}

/// Transition matrix of the spine-type Markov chain:
/// `Q_ij = (a*_j / a*_i) m_ij`. Rows sum to 1 at criticality.
pub fn spine_transition(
    spec: &OffspringSpec,
    spectral: &SpectralData,
) -> Result<RatMatrix, OffspringError> {
    let eigen = spectral.exact()?;
    let mean = spec.mean_matrix();
    Ok((0..spec.d())
        .map(|i| {
            (0..spec.d())
                .map(|j| &eigen.a_star[j] / &eigen.a_star[i] * &mean[i][j])
                .collect()
        })
        .collect())
}

/// The difference group of one law around one of its support points
/// (`G_x`); used as a cross-check that the group does not depend on the
/// base point.
pub fn law_difference_basis(law: &MultiPmf, d: usize, base: &[u64]) -> LatticeBasis {
    let gens: Vec<Vec<i64>> = law
        .keys()
        .map(|k| k.iter().zip(base).map(|(&a, &b)| a as i64 - b as i64).collect())
        .collect();
    LatticeBasis::from_generators(d, gens.iter())
}

pub fn rho_float(spec: &OffspringSpec) -> Result<f64, OffspringError> {
    Ok(perron(spec)?.rho)
}

impl SpectralData {
    /// Mean offspring of type j from type i, as float.
    pub fn mean_f64(&self) -> Vec<Vec<f64>> {
        linalg::to_f64_matrix(&self.mean)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;
    use crate::ratio::q;

    #[test]
    fn mean_matrix_e1() {
        let spec = presets::two_type_uniform();
        let m = spec.mean_matrix();
        for row in &m {
            for x in row {
                assert_eq!(*x, q(1, 2));
            }
        }
    }

    #[test]
    fn mean_matrix_degenerate() {
        let spec = OffspringSpec::from_laws(
            2,
            vec![
                vec![(vec![0, 0], q(1, 1))],
                vec![(vec![0, 0], q(1, 1))],
            ],
        )
        .unwrap();
        let m = spec.mean_matrix();
        assert!(m.iter().all(|r| r.iter().all(|x| x.is_zero())));
    }

    #[test]
    fn mean_matrix_monotype_binary() {
        let spec = presets::monotype_binary();
        assert_eq!(spec.mean_matrix()[0][0], q(1, 1));
    }

    #[test]
    fn perron_e1() {
        let s = perron(&presets::two_type_uniform()).unwrap();
        assert_eq!(s.criticality, Criticality::Critical);
        assert!(s.certified);
        let e = s.exact().unwrap();
        assert_eq!(e.a, vec![q(1, 2), q(1, 2)]);
        assert_eq!(e.a_star, vec![q(1, 1), q(1, 1)]);
    }

    #[test]
    fn perron_monotype() {
        let s = perron(&presets::monotype_binary()).unwrap();
        assert!(s.certified && s.criticality == Criticality::Critical);
        assert_eq!(s.exact().unwrap().a, vec![q(1, 1)]);
        assert_eq!(s.exact().unwrap().a_star, vec![q(1, 1)]);
    }

    #[test]
    fn perron_matches_characteristic_polynomial() {
        // spec with mean [[1/4,1/2],[3/4,1/4]]
        let spec = OffspringSpec::from_laws(
            2,
            vec![
                vec![
                    (vec![0, 0], q(1, 4)),
                    (vec![1, 0], q(1, 4)),
                    (vec![0, 1], q(1, 2)),
                ],
                vec![(vec![1, 0], q(3, 4)), (vec![0, 1], q(1, 4))],
            ],
        )
        .unwrap();
        let s = perron(&spec).unwrap();
        // rho = (1/2 + sqrt(3/2)) / 2 from the quadratic formula
        let expected = (0.5 + 1.5f64.sqrt()) / 2.0;
        assert!((s.rho - expected).abs() < 1e-12, "rho = {}", s.rho);
        assert_eq!(s.criticality, Criticality::Subcritical);
    }

    #[test]
    fn float_eigen_residuals() {
        // irrational Perron root: the float path must still satisfy the
        // eigenvector identities to 1e-12
        let spec = OffspringSpec::from_laws(
            2,
            vec![
                vec![
                    (vec![0, 0], q(1, 4)),
                    (vec![1, 0], q(1, 4)),
                    (vec![0, 1], q(1, 2)),
                ],
                vec![(vec![1, 0], q(3, 4)), (vec![0, 1], q(1, 4))],
            ],
        )
        .unwrap();
        let s = perron(&spec).unwrap();
        assert!(!s.certified || s.exact.is_none());
        let m = s.mean_f64();
        for i in 0..2 {
            let right_residual: f64 =
                (0..2).map(|j| m[i][j] * s.a_star[j]).sum::<f64>() - s.rho * s.a_star[i];
            assert!(right_residual.abs() < 1e-12, "right residual {right_residual}");
            let left_residual: f64 =
                (0..2).map(|j| s.a[j] * m[j][i]).sum::<f64>() - s.rho * s.a[i];
            assert!(left_residual.abs() < 1e-12, "left residual {left_residual}");
        }
        let a_sum: f64 = s.a.iter().sum();
        assert!((a_sum - 1.0).abs() < 1e-12);
        let inner: f64 = s.a.iter().zip(&s.a_star).map(|(x, y)| x * y).sum();
        assert!((inner - 1.0).abs() < 1e-12);
    }

    #[test]
    fn not_primitive_detected() {
        // two isolated types reproducing among themselves
        let spec = OffspringSpec::from_laws(
            2,
            vec![
                vec![(vec![0, 0], q(1, 2)), (vec![2, 0], q(1, 2))],
                vec![(vec![0, 0], q(1, 2)), (vec![0, 2], q(1, 2))],
            ],
        )
        .unwrap();
        assert!(matches!(perron(&spec), Err(OffspringError::NotPrimitive)));
    }

    #[test]
    fn aperiodicity_examples() {
        assert!(presets::two_type_uniform().is_aperiodic());

        let diagonal = OffspringSpec::from_laws(
            2,
            vec![
                vec![(vec![0, 0], q(1, 2)), (vec![1, 1], q(1, 2))],
                vec![(vec![0, 0], q(1, 2)), (vec![1, 1], q(1, 2))],
            ],
        )
        .unwrap();
        assert!(!diagonal.is_aperiodic());

        assert!(!presets::monotype_binary().is_aperiodic()); // support {0,2}
        assert!(presets::monotype_uniform012().is_aperiodic());
    }

    #[test]
    fn aperiodicity_shift_invariance() {
        // Adding a constant vector to every support point of one type does
        // not change the difference group.
        let base = presets::two_type_uniform();
        let law0: Vec<(Vec<u64>, BigRational)> = base
            .law(0)
            .iter()
            .map(|(k, p)| (vec![k[0] + 3, k[1] + 1], p.clone()))
            .collect();
        let law1: Vec<(Vec<u64>, BigRational)> =
            base.law(1).iter().map(|(k, p)| (k.clone(), p.clone())).collect();
        let shifted = OffspringSpec::from_laws(2, vec![law0, law1]).unwrap();
        assert_eq!(base.is_aperiodic(), shifted.is_aperiodic());
    }

    #[test]
    fn classify_examples() {
        let c = classify(&presets::two_type_uniform()).unwrap();
        assert_eq!(c.criticality, Criticality::Critical);
        assert!(c.non_singular && c.certified);

        // q = delta_1 in one type: every individual exactly one child
        let singular = OffspringSpec::from_laws(1, vec![vec![(vec![1], q(1, 1))]]).unwrap();
        let c = classify(&singular).unwrap();
        assert!(!c.non_singular);

        let c = classify(&presets::monotype_binary()).unwrap();
        assert_eq!(c.criticality, Criticality::Critical);
        assert!(c.non_singular);
    }

    #[test]
    fn size_biased_e1() {
        let spec = presets::two_type_uniform();
        let spectral = perron(&spec).unwrap();
        let hat = size_biased_offspring(&spec, &spectral).unwrap();
        assert_eq!(hat[0].get([0u64, 0].as_slice()), None);
        assert_eq!(hat[0][&vec![1, 0]], q(1, 4));
        assert_eq!(hat[0][&vec![0, 1]], q(1, 4));
        assert_eq!(hat[0][&vec![1, 1]], q(1, 2));
    }

    #[test]
    fn size_biased_monotype_binary() {
        let spec = presets::monotype_binary();
        let spectral = perron(&spec).unwrap();
        let hat = size_biased_offspring(&spec, &spectral).unwrap();
        assert_eq!(hat[0].len(), 1);
        assert_eq!(hat[0][&vec![2]], q(1, 1));
    }

    #[test]
    fn size_biased_sums_to_one_when_critical() {
        for spec in [
            presets::two_type_uniform(),
            presets::asymmetric_critical(),
            presets::monotype_binary(),
        ] {
            let spectral = perron(&spec).unwrap();
            let hat = size_biased_offspring(&spec, &spectral).unwrap();
            for law in &hat {
                assert!(lattice_mass(law).is_one());
            }
        }
    }

    #[test]
    fn size_biased_rejects_non_critical() {
        let sub = OffspringSpec::from_laws(
            1,
            vec![vec![(vec![0], q(2, 3)), (vec![2], q(1, 3))]],
        )
        .unwrap();
        let spectral = perron(&sub).unwrap();
        assert!(matches!(
            size_biased_offspring(&sub, &spectral),
            Err(OffspringError::NotCritical)
        ));
    }

    #[test]
    fn size_biased_root_examples() {
        let half = vec![q(1, 2), q(1, 2)];
        let unit = vec![q(1, 1), q(1, 1)];
        assert_eq!(size_biased_root(&half, &unit).unwrap(), half);

        let dirac = vec![q(1, 1), q(0, 1)];
        assert_eq!(size_biased_root(&dirac, &unit).unwrap(), dirac);

        let skew = vec![q(2, 1), q(1, 1)];
        assert_eq!(
            size_biased_root(&half, &skew).unwrap(),
            vec![q(2, 3), q(1, 3)]
        );

        let zero = vec![q(0, 1), q(0, 1)];
        assert!(matches!(
            size_biased_root(&half, &zero),
            Err(OffspringError::ZeroMass)
        ));
    }

    #[test]
    fn spine_transition_examples() {
        let spec = presets::two_type_uniform();
        let spectral = perron(&spec).unwrap();
        let tr = spine_transition(&spec, &spectral).unwrap();
        for row in &tr {
            for x in row {
                assert_eq!(*x, q(1, 2));
            }
        }

        let mono = presets::monotype_binary();
        let spectral = perron(&mono).unwrap();
        assert_eq!(spine_transition(&mono, &spectral).unwrap(), vec![vec![q(1, 1)]]);

        // rows sum to 1; stationary distribution proportional to a_i a*_i
        let spec = presets::asymmetric_critical();
        let spectral = perron(&spec).unwrap();
        let tr = spine_transition(&spec, &spectral).unwrap();
        for row in &tr {
            let sum = row.iter().fold(BigRational::zero(), |a, b| a + b);
            assert!(sum.is_one());
        }
        let e = spectral.exact().unwrap();
        let pi: Vec<BigRational> = e.a.iter().zip(&e.a_star).map(|(x, y)| x * y).collect();
        // pi Q = pi
        for j in 0..2 {
            let lhs = (0..2).fold(BigRational::zero(), |s, i| s + &pi[i] * &tr[i][j]);
            assert_eq!(lhs, pi[j]);
        }
    }

    #[test]
    fn g_x_independent_of_base_point() {
        let spec = presets::two_type_uniform();
        for i in 0..spec.d() {
            let law = spec.law(i);
            let bases: Vec<Vec<u64>> = law.keys().cloned().collect();
            let first = law_difference_basis(law, spec.d(), &bases[0]);
            for b in &bases[1..] {
                assert!(first.same_lattice(&law_difference_basis(law, spec.d(), b)));
            }
        }
    }

    #[test]
    fn json_round_trip_and_validation() {
        let spec = presets::two_type_uniform();
        let s = spec.to_json();
        assert_eq!(OffspringSpec::from_json(&s).unwrap(), spec);

        let bad = r#"{"d":1,"laws":[[{"k":[0],"p":"1/2"},{"k":[1],"p":"1/3"}]]}"#;
        match OffspringSpec::from_json(bad) {
            Err(OffspringError::NotNormalized { law: 0, sum }) => assert_eq!(sum, "5/6"),
            other => panic!("expected NotNormalized, got {other:?}"),
        }
    }
}

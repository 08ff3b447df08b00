//! Legendre-Laplace toolbox for finite-support lattice distributions:
//! log-Laplace transform, convex conjugate, exponential tilting with its
//! inverse, and exact convex-hull predicates on the support.
//!
//! Supports are finite, so the log-Laplace transform is finite everywhere
//! and everything about the hull can be decided in exact rational
//! arithmetic; the transform itself and the tilting solve are `f64`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::lattice::{self, Atoms, LatticeBasis};
use crate::linalg;
use crate::ratio;

#[derive(Debug, Error)]
pub enum LaplaceError {
    #[error("atoms must sum to 1 (got {0})")]
    NotNormalized(String),
    #[error("distribution must have at least one atom")]
    Empty,
    #[error("atom dimension mismatch")]
    BadDimension,
    #[error("target is not an interior point of the convex support hull")]
    NotInteriorPoint,
    #[error("tilt solve did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
}

/// A probability distribution on `Z^D` with finite support and exact
/// rational weights.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatticeDistribution {
    dim: usize,
    atoms: Atoms,
}

impl LatticeDistribution {
    pub fn new(dim: usize, atoms: Atoms) -> Result<Self, LaplaceError> {
        if atoms.is_empty() {
            return Err(LaplaceError::Empty);
        }
        if atoms.keys().any(|x| x.len() != dim) {
            return Err(LaplaceError::BadDimension);
        }
        let mass = lattice::total_mass(&atoms);
        if !mass.is_one() {
            return Err(LaplaceError::NotNormalized(ratio::render(&mass)));
        }
        Ok(LatticeDistribution { dim, atoms })
    }

    pub fn from_weights(dim: usize, weights: Vec<(Vec<i64>, BigRational)>) -> Result<Self, LaplaceError> {
        let mut atoms = Atoms::new();
        for (x, p) in weights {
            if !p.is_zero() {
                *atoms.entry(x).or_insert_with(BigRational::zero) += p;
            }
        }
        LatticeDistribution::new(dim, atoms)
    }

    /// Uniform distribution on the given points.
    pub fn uniform(dim: usize, points: &[Vec<i64>]) -> Self {
        let w = BigRational::new(BigInt::one(), BigInt::from(points.len() as u64));
        LatticeDistribution::from_weights(
            dim,
            points.iter().map(|x| (x.clone(), w.clone())).collect(),
        )
        .expect("uniform weights are normalized")
    }

    pub fn point_mass(x: Vec<i64>) -> Self {
        let dim = x.len();
        LatticeDistribution::from_weights(dim, vec![(x, BigRational::one())])
            .expect("point mass is normalized")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn atoms(&self) -> &Atoms {
        &self.atoms
    }

    pub fn support(&self) -> Vec<&Vec<i64>> {
        self.atoms.keys().collect()
    }

    /// Exact mean vector.
    pub fn mean_exact(&self) -> Vec<BigRational> {
        (0..self.dim)
            .map(|j| {
                self.atoms
                    .iter()
                    .map(|(x, p)| BigRational::from(BigInt::from(x[j])) * p)
                    .fold(BigRational::zero(), |a, b| a + b)
            })
            .collect()
    }

    pub fn mean_f64(&self) -> Vec<f64> {
        self.mean_exact().iter().map(ratio::to_f64).collect()
    }

    /// The log-Laplace transform `phi(theta) = log sum_x e^<theta,x> F(x)`,
    /// evaluated with a max shift for stability.
    pub fn log_laplace(&self, theta: &[f64]) -> f64 {
        let exponents: Vec<(f64, f64)> = self
            .atoms
            .iter()
            .map(|(x, p)| {
                let e: f64 = x.iter().zip(theta).map(|(&xi, t)| xi as f64 * t).sum();
                (e, ratio::to_f64(p))
            })
            .collect();
        let m = exponents.iter().map(|(e, _)| *e).fold(f64::NEG_INFINITY, f64::max);
        let s: f64 = exponents.iter().map(|(e, p)| p * (e - m).exp()).sum();
        m + s.ln()
    }

    /// The exponentially tilted view `P_theta`.
    pub fn tilt(&self, theta: &[f64]) -> TiltedView {
        let phi = self.log_laplace(theta);
        let masses: Vec<(Vec<i64>, f64)> = self
            .atoms
            .iter()
            .map(|(x, p)| {
                let e: f64 = x.iter().zip(theta).map(|(&xi, t)| xi as f64 * t).sum();
                (x.clone(), (e - phi).exp() * ratio::to_f64(p))
            })
            .collect();
        let total: f64 = masses.iter().map(|(_, w)| w).sum();
        debug_assert!((total - 1.0).abs() < 1e-12, "tilted masses must renormalize");
        let mean: Vec<f64> = (0..self.dim)
            .map(|j| masses.iter().map(|(x, w)| x[j] as f64 * w).sum())
            .collect();
        let covariance: Vec<Vec<f64>> = (0..self.dim)
            .map(|i| {
                (0..self.dim)
                    .map(|j| {
                        masses
                            .iter()
                            .map(|(x, w)| {
                                (x[i] as f64 - mean[i]) * (x[j] as f64 - mean[j]) * w
                            })
                            .sum()
                    })
                    .collect()
            })
            .collect();
        TiltedView {
            theta: theta.to_vec(),
            log_normalizer: phi,
            mean,
            covariance,
            masses,
        }
    }

    /// The convex conjugate `psi(x) = sup_theta (<theta, x> - phi(theta))`.
    pub fn legendre(&self, x: &[f64]) -> Legendre {
        let x_exact: Vec<BigRational> = x.iter().map(|&v| ratio::from_f64(v)).collect();
        match self.hull_membership(&x_exact) {
            HullPosition::Outside => Legendre::Infinite,
            HullPosition::Interior => {
                let theta = self
                    .solve_tilt(x)
                    .expect("tilt solve converges on interior points");
                let inner: f64 = theta.iter().zip(x).map(|(t, v)| t * v).sum();
                Legendre::Finite(inner - self.log_laplace(&theta))
            }
            HullPosition::Boundary => Legendre::Finite(self.boundary_supremum(x)),
        }
    }

    /// One-sided supremum for boundary points: damped ascent on the concave
    /// objective with an iteration cap. For finite support the supremum at a
    /// hull boundary point is a finite limit, approached as the tilt norm
    /// grows; the cap makes this a documented numerical convention rather
    /// than an exact value.
    fn boundary_supremum(&self, x: &[f64]) -> f64 {
        let mut theta = vec![0.0; self.dim];
        let mut value = -self.log_laplace(&theta);
        for _ in 0..1000 {
            let view = self.tilt(&theta);
            let grad: Vec<f64> = x.iter().zip(&view.mean).map(|(a, b)| a - b).collect();
            // regularized Newton direction
            let mut h = view.covariance.clone();
            for (i, row) in h.iter_mut().enumerate() {
                row[i] += 1e-12;
            }
            let dir = linalg::mat_vec(&linalg::inverse_f64(&h), &grad);
            let mut step = 1.0;
            let mut improved = false;
            for _ in 0..60 {
                let cand: Vec<f64> =
                    theta.iter().zip(&dir).map(|(t, d)| t + step * d).collect();
                let inner: f64 = cand.iter().zip(x).map(|(t, v)| t * v).sum();
                let cand_value = inner - self.log_laplace(&cand);
                if cand_value > value {
                    theta = cand;
                    value = cand_value;
                    improved = true;
                    break;
                }
                step *= 0.5;
            }
            if !improved {
                break;
            }
        }
        value
    }

    /// Inverts the mean map: finds `theta` with `m_theta = target` within
    /// 1e-10, by damped Newton started at 0. The target must lie in the
    /// interior of the convex hull of the support.
    pub fn solve_tilt(&self, target: &[f64]) -> Result<Vec<f64>, LaplaceError> {
        let target_exact: Vec<BigRational> =
            target.iter().map(|&v| ratio::from_f64(v)).collect();
        if self.hull_membership(&target_exact) != HullPosition::Interior {
            return Err(LaplaceError::NotInteriorPoint);
        }
        let mut theta = vec![0.0; self.dim];
        // minimize phi(theta) - <theta, target>
        let objective = |t: &[f64]| {
            self.log_laplace(t) - t.iter().zip(target).map(|(a, b)| a * b).sum::<f64>()
        };
        let mut value = objective(&theta);
        for iter in 0..1000 {
            let view = self.tilt(&theta);
            let grad: Vec<f64> =
                view.mean.iter().zip(target).map(|(m, t)| m - t).collect();
            let residual = linalg::norm2(&grad);
            if residual <= 1e-10 {
                return Ok(theta);
            }
            let dir = linalg::mat_vec(&linalg::inverse_f64(&view.covariance), &grad);
            let mut step = 1.0;
            let mut accepted = false;
            for _ in 0..60 {
                let cand: Vec<f64> =
                    theta.iter().zip(&dir).map(|(t, d)| t - step * d).collect();
                let cand_value = objective(&cand);
                // allow float-plateau steps near the optimum
                if cand_value <= value + 1e-14 * (1.0 + value.abs()) {
                    theta = cand;
                    value = cand_value;
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if !accepted {
                let view = self.tilt(&theta);
                let grad: Vec<f64> =
                    view.mean.iter().zip(target).map(|(m, t)| m - t).collect();
                return Err(LaplaceError::NoConvergence {
                    iterations: iter,
                    residual: linalg::norm2(&grad),
                });
            }
        }
        let view = self.tilt(&theta);
        let grad: Vec<f64> = view.mean.iter().zip(target).map(|(m, t)| m - t).collect();
        let residual = linalg::norm2(&grad);
        if residual <= 1e-10 {
            Ok(theta)
        } else {
            Err(LaplaceError::NoConvergence { iterations: 1000, residual })
        }
    }

    /// Exact position of `x` relative to the convex hull of the support.
    pub fn hull_membership(&self, x: &[BigRational]) -> HullPosition {
        let points: Vec<Vec<BigRational>> = self
            .atoms
            .keys()
            .map(|p| p.iter().map(|&v| BigRational::from(BigInt::from(v))).collect())
            .collect();
        hull_classify(&points, x)
    }

    /// Strong aperiodicity: the subgroup generated by `supp(F) - supp(F)`
    /// is all of `Z^D`. As a self-check, verifies that the group generated
    /// by `-x + supp(F)` does not depend on the support point `x`.
    pub fn lattice_aperiodic(&self) -> bool {
        let support: Vec<Vec<i64>> = self.atoms.keys().cloned().collect();
        let r0 = LatticeBasis::from_generators(
            self.dim,
            lattice::difference_generators(support.iter()).iter(),
        );
        let mut g_bases = support.iter().map(|x| {
            let gens: Vec<Vec<i64>> = support
                .iter()
                .map(|s| s.iter().zip(x).map(|(a, b)| a - b).collect())
                .collect();
            LatticeBasis::from_generators(self.dim, gens.iter())
        });
        debug_assert!(
            g_bases.all(|g| g.same_lattice(&r0)),
            "difference group must not depend on the base point"
        );
        r0.is_full()
    }

    /// Conditional law given `|x| <= bound` (l1 ball), renormalized.
    pub fn truncate(&self, bound: i64) -> Result<LatticeDistribution, LaplaceError> {
        let kept: Vec<(Vec<i64>, BigRational)> = self
            .atoms
            .iter()
            .filter(|(x, _)| x.iter().map(|v| v.abs()).sum::<i64>() <= bound)
            .map(|(x, p)| (x.clone(), p.clone()))
            .collect();
        let mass = kept
            .iter()
            .fold(BigRational::zero(), |a, (_, p)| a + p);
        if mass.is_zero() {
            return Err(LaplaceError::Empty);
        }
        LatticeDistribution::from_weights(
            self.dim,
            kept.into_iter().map(|(x, p)| (x, p / &mass)).collect(),
        )
    }
}

/// Exponentially tilted view of a lattice distribution.
#[derive(Debug, Clone)]
pub struct TiltedView {
    pub theta: Vec<f64>,
    pub log_normalizer: f64,
    pub mean: Vec<f64>,
    pub covariance: Vec<Vec<f64>>,
    pub masses: Vec<(Vec<i64>, f64)>,
}

impl TiltedView {
    pub fn covariance_det(&self) -> f64 {
        linalg::det_f64(&self.covariance)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Legendre {
    Finite(f64),
    Infinite,
}

impl Legendre {
    pub fn finite(self) -> Option<f64> {
        match self {
            Legendre::Finite(v) => Some(v),
            Legendre::Infinite => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HullPosition {
    Interior,
    Boundary,
    Outside,
}

/// Exact hull classification by facet enumeration, recursing into the
/// affine hull when the point set is not full-dimensional (in that case
/// nothing is `Interior` in the ambient space and relative-interior points
/// are reported as `Boundary`).
fn hull_classify(points: &[Vec<BigRational>], x: &[BigRational]) -> HullPosition {
    let dim = x.len();
    // affine rank around the first point
    let base = &points[0];
    let diffs: Vec<Vec<BigRational>> = points[1..]
        .iter()
        .map(|p| p.iter().zip(base).map(|(a, b)| a - b).collect())
        .collect();
    if dim == 0 {
        return HullPosition::Boundary;
    }
    let rank = if diffs.is_empty() {
        0
    } else {
        let square: Vec<Vec<BigRational>> = pad_square(&diffs, dim);
        linalg::rat_rank(&square)
    };
    if rank < dim {
        // project onto a basis of the affine hull and recurse, if x lies in
        // the hull's affine span at all
        return match project_affine(points, x, rank) {
            None => HullPosition::Outside,
            Some((proj_points, proj_x)) => match hull_classify(&proj_points, &proj_x) {
                HullPosition::Outside => HullPosition::Outside,
                _ => HullPosition::Boundary,
            },
        };
    }
    full_dim_classify(points, x, dim)
}

fn pad_square(rows: &[Vec<BigRational>], dim: usize) -> Vec<Vec<BigRational>> {
    let mut out: Vec<Vec<BigRational>> = rows.to_vec();
    while out.len() < dim {
        out.push(vec![BigRational::zero(); dim]);
    }
    out
}

/// Writes `x - p0` and all support differences in coordinates of a rational
/// basis of the affine span. Returns `None` when `x` is off the span.
fn project_affine(
    points: &[Vec<BigRational>],
    x: &[BigRational],
    rank: usize,
) -> Option<(Vec<Vec<BigRational>>, Vec<BigRational>)> {
    if rank == 0 {
        return if points[0] == x {
            Some((vec![vec![]; points.len()], vec![]))
        } else {
            None
        };
    }
    let dim = x.len();
    let base = points[0].clone();
    let diffs: Vec<Vec<BigRational>> = points
        .iter()
        .map(|p| p.iter().zip(&base).map(|(a, b)| a - b).collect())
        .collect();
    // greedy rational basis
    let mut basis: Vec<Vec<BigRational>> = Vec::new();
    for dvec in &diffs {
        if basis.len() == rank {
            break;
        }
        let mut trial = basis.clone();
        trial.push(dvec.clone());
        let square = pad_square(&trial, dim);
        if linalg::rat_rank(&square) == trial.len() {
            basis.push(dvec.clone());
        }
    }
    // coordinates: solve basis^T coeffs = v by least... exactly: the system
    // is consistent iff v lies in the span.
    let coords = |v: &[BigRational]| -> Option<Vec<BigRational>> {
        solve_in_span(&basis, v)
    };
    let x_diff: Vec<BigRational> = x.iter().zip(&base).map(|(a, b)| a - b).collect();
    let proj_x = coords(&x_diff)?;
    let proj_points: Option<Vec<Vec<BigRational>>> =
        diffs.iter().map(|dv| coords(dv)).collect();
    Some((proj_points?, proj_x))
}

/// Solves `sum_i c_i basis_i = v` exactly; `None` if `v` is off the span.
fn solve_in_span(basis: &[Vec<BigRational>], v: &[BigRational]) -> Option<Vec<BigRational>> {
    let n = basis.len();
    let dim = v.len();
    // Gaussian elimination on the (dim x (n+1)) augmented system
    let mut aug: Vec<Vec<BigRational>> = (0..dim)
        .map(|row| {
            let mut r: Vec<BigRational> = basis.iter().map(|b| b[row].clone()).collect();
            r.push(v[row].clone());
            r
        })
        .collect();
    let mut pivot_rows = Vec::new();
    let mut r = 0;
    for c in 0..n {
        let Some(p) = (r..dim).find(|&i| !aug[i][c].is_zero()) else {
            continue;
        };
        aug.swap(p, r);
        let pv = aug[r][c].clone();
        for entry in &mut aug[r] {
            *entry = &*entry / &pv;
        }
        for i in 0..dim {
            if i != r && !aug[i][c].is_zero() {
                let f = aug[i][c].clone();
                for j in 0..=n {
                    let sub = &f * &aug[r][j];
                    aug[i][j] = &aug[i][j] - sub;
                }
            }
        }
        pivot_rows.push((r, c));
        r += 1;
    }
    // consistency: zero rows must have zero rhs
    for i in r..dim {
        if !aug[i][n].is_zero() {
            return None;
        }
    }
    let mut coeffs = vec![BigRational::zero(); n];
    for (row, col) in pivot_rows {
        coeffs[col] = aug[row][n].clone();
    }
    Some(coeffs)
}

fn full_dim_classify(points: &[Vec<BigRational>], x: &[BigRational], dim: usize) -> HullPosition {
    let n = points.len();
    let mut on_boundary = false;
    let mut subset = vec![0usize; dim];
    let mut facets_seen = false;
    // enumerate all dim-subsets as facet candidates
    fn rec(
        points: &[Vec<BigRational>],
        x: &[BigRational],
        dim: usize,
        n: usize,
        start: usize,
        pos: usize,
        subset: &mut Vec<usize>,
        on_boundary: &mut bool,
        facets_seen: &mut bool,
    ) -> Option<HullPosition> {
        if pos == dim {
            let pts: Vec<&Vec<BigRational>> = subset.iter().map(|&i| &points[i]).collect();
            let Some((normal, offset)) = hyperplane(&pts, dim) else {
                return None;
            };
            // orient: all support points on one side?
            let mut le = true;
            let mut ge = true;
            for p in points {
                let v = inner(&normal, p);
                if v > offset {
                    le = false;
                }
                if v < offset {
                    ge = false;
                }
                if !le && !ge {
                    return None; // not a facet
                }
            }
            *facets_seen = true;
            let (normal, offset) = if le {
                (normal, offset)
            } else {
                debug_assert!(ge);
                (normal.iter().map(|v| -v).collect::<Vec<_>>(), -offset)
            };
            let vx = inner(&normal, x);
            if vx > offset {
                return Some(HullPosition::Outside);
            }
            if vx == offset {
                *on_boundary = true;
            }
            None
        } else {
            for i in start..n {
                subset[pos] = i;
                if let Some(out) = rec(
                    points,
                    x,
                    dim,
                    n,
                    i + 1,
                    pos + 1,
                    subset,
                    on_boundary,
                    facets_seen,
                ) {
                    return Some(out);
                }
            }
            None
        }
    }
    if let Some(outside) = rec(
        points,
        x,
        dim,
        n,
        0,
        0,
        &mut subset,
        &mut on_boundary,
        &mut facets_seen,
    ) {
        return outside;
    }
    debug_assert!(facets_seen, "full-dimensional hull must have facets");
    if on_boundary {
        HullPosition::Boundary
    } else {
        HullPosition::Interior
    }
}

fn inner(a: &[BigRational], b: &[BigRational]) -> BigRational {
    a.iter().zip(b).fold(BigRational::zero(), |s, (x, y)| s + x * y)
}

/// Hyperplane through `dim` affinely independent points; `None` if they are
/// dependent.
fn hyperplane(pts: &[&Vec<BigRational>], dim: usize) -> Option<(Vec<BigRational>, BigRational)> {
    if dim == 1 {
        // a point is a hyperplane in dimension 1
        return Some((vec![BigRational::one()], pts[0][0].clone()));
    }
    let rows: Vec<Vec<BigRational>> = pts[1..]
        .iter()
        .map(|p| p.iter().zip(pts[0].iter()).map(|(a, b)| a - b).collect())
        .collect();
    let square = pad_square(&rows, dim);
    let normal = linalg::rat_nullspace_1d(&square)?;
    if normal.iter().all(|v| v.is_zero()) {
        return None;
    }
    let offset = inner(&normal, pts[0]);
    Some((normal, offset))
}

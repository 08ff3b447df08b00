//! Ready-made offspring specifications used by the experiments, the test
//! suite and the CLI demos.

use num_rational::BigRational;

use crate::offspring::OffspringSpec;
use crate::ratio::q;

/// Two types, each offspring law uniform on `{0,1}^2`. Critical, primitive,
/// aperiodic, non-singular, with `a = (1/2, 1/2)` and `a* = (1, 1)`.
pub fn two_type_uniform() -> OffspringSpec {
    let law = || -> Vec<(Vec<u64>, BigRational)> {
        vec![
            (vec![0, 0], q(1, 4)),
            (vec![1, 0], q(1, 4)),
            (vec![0, 1], q(1, 4)),
            (vec![1, 1], q(1, 4)),
        ]
    };
    OffspringSpec::from_laws(2, vec![law(), law()]).expect("static spec is valid")
}

/// Two types with mean matrix `[[1/2, 1/4], [1, 1/2]]`: critical and
/// primitive with asymmetric eigenvectors `a = (2/3, 1/3)`,
/// `a* = (3/4, 3/2)`.
pub fn asymmetric_critical() -> OffspringSpec {
    OffspringSpec::from_laws(
        2,
        vec![
            vec![
                (vec![0, 0], q(1, 4)),
                (vec![1, 0], q(1, 2)),
                (vec![0, 1], q(1, 4)),
            ],
            vec![(vec![1, 0], q(1, 2)), (vec![1, 1], q(1, 2))],
        ],
    )
    .expect("static spec is valid")
}

/// Mono-type critical binary law `q(0) = q(2) = 1/2`.
pub fn monotype_binary() -> OffspringSpec {
    OffspringSpec::from_laws(1, vec![vec![(vec![0], q(1, 2)), (vec![2], q(1, 2))]])
        .expect("static spec is valid")
}

/// Mono-type law uniform on `{0, 1, 2}`: critical and aperiodic.
pub fn monotype_uniform012() -> OffspringSpec {
    OffspringSpec::from_laws(
        1,
        vec![vec![(vec![0], q(1, 3)), (vec![1], q(1, 3)), (vec![2], q(1, 3))]],
    )
    .expect("static spec is valid")
}

/// Every type dies immediately: all laws are the point mass at 0.
pub fn all_extinct(d: usize) -> OffspringSpec {
    let laws = (0..d).map(|_| vec![(vec![0u64; d], q(1, 1))]).collect();
    OffspringSpec::from_laws(d, laws).expect("static spec is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::offspring::{classify, perron, Criticality};

    #[test]
    fn presets_are_critical_where_claimed() {
        for spec in [
            two_type_uniform(),
            asymmetric_critical(),
            monotype_binary(),
            monotype_uniform012(),
        ] {
            let c = classify(&spec).unwrap();
            assert_eq!(c.criticality, Criticality::Critical);
            assert!(c.certified);
        }
    }

    #[test]
    fn asymmetric_eigen_data() {
        let s = perron(&asymmetric_critical()).unwrap();
        let e = s.exact.as_ref().unwrap();
        assert_eq!(e.a, vec![q(2, 3), q(1, 3)]);
        assert_eq!(e.a_star, vec![q(3, 4), q(3, 2)]);
    }
}

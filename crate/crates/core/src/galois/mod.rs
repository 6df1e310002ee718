//! Frobenius traces of elliptic curves over `Q` and what they certify about
//! mod-`p` Galois images: surjectivity, Goursat pairs, lifting to `p^2`.

pub mod curve;
pub mod groups;
pub mod image;

pub use curve::{
    count_points, count_points_bsgs, count_points_exhaustive, frobenius_sample, EllipticCurve, FrobeniusSample,
};
pub use groups::{
    goursat_decompose, lifting_check, standard_lifts, GoursatDecomposition, LiftingReport, ProductSubgroup,
};
pub use image::{
    certify_from_sample, certify_goursat_pair, certify_goursat_pair_with, certify_mod_p_image,
    certify_mod_p_image_with, excludes, CartanKind, GoursatCertificate, GoursatVerdict, ImageCertificate, ImageVerdict,
    ObstructionClass, Witness,
};

use alloc::string::String;

use crate::congruence::CongruenceError;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum GaloisError {
    #[error("singular curve (zero discriminant)")]
    Singular,
    #[error("bad reduction at {0}")]
    BadReduction(u64),
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("prime {0} is beyond the point-counting range")]
    PrimeTooLarge(u64),
    #[error("prime {0} is not supported")]
    UnsupportedPrime(u64),
    #[error("sampling bound {0} is too small")]
    BoundTooSmall(u64),
    #[error("generators reduce to a subgroup of order {mod_p_order} mod p")]
    NotGeneratingModP { mod_p_order: usize },
    #[error("a generator does not have determinant 1")]
    BadDeterminant,
    #[error("subgroup does not project onto both factors")]
    NotSubdirect,
    #[error("cannot parse curve: {0}")]
    Parse(String),
    #[error(transparent)]
    Level(CongruenceError),
}

//! Parabolic visual boundaries of Heisenberg groups: graded derivations,
//! adapted bases, quasimetrics, quasiisometry classification, and boundary
//! isometries, with a CLI in `bin/heisvis`.

pub mod classify;
pub mod cli;
pub mod coset;
pub mod derivation;
pub mod error;
pub mod heis;
pub mod linalg;
pub mod metric;
pub mod report;
pub mod rng;

pub use classify::{
    almost_similarity_fit, apply_map, build_isometry, classify, default_probe_radii,
    distortion_probe, distortion_report, eta1_samples, eta_envelope, qi_invariants,
    quasisimilarity_fit, verify_isometry, BoundaryMap, Classification, DistortionProbe,
    DistortionReport, EtaEnvelope, IsometryCheck, PointMap, QIInvariants, QuasisimilarityFit,
    SimilarityFit,
};
pub use coset::{
    coset_dist_h, coset_dist_u1, dist_da, hausdorff_profile, point_to_coset_dist, slice_chart,
    slice_dist, subgroup_defect, CosetSpec, HausdorffProfile, SubgroupKind,
};
pub use derivation::{
    automorphism_defect, conjugate, random_automorphism, verify_structure, AdaptedBasis,
    BlockPair, DarbouxBlock, DerivationForm, DerivationSpec, GradedStructure, SpectralBlock,
    StructureCheck, StructureReport,
};
pub use error::{HeisError, Result};
pub use heis::{solv_mul, LieElement, SolvElement};
pub use linalg::Mat;
pub use metric::{
    chain_dist, norm_0, quasi_triangle_max, regularity_estimate, ChainNet, NetConfig,
    Quasimetric, RegularityReport,
};
pub use report::{parse_spec, serialize_spec, ParsedSpec, SpecError};
pub use rng::SampleStream;

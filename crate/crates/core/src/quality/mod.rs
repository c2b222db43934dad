//! Validity, diversity and performance audit of a latent design space.

pub mod audit;
pub mod diversity;
pub mod kde;
pub mod nonfinite;
pub mod validity;

pub use audit::{
    audit_space, performance_stats, AuditProtocol, DesignRecord, PerformanceStats, QualityReport, ResidualSummary,
    DEFAULT_SAMPLE_COUNT, DEFAULT_SUBSETS,
};
pub use diversity::{
    diversity_score, log_det, median_bandwidth, similarity_kernel, subset_score, Bandwidth, DiversityScore, LogDet,
    LogDetPath, JITTER,
};
pub use kde::{kde, silverman_bandwidth, trapezoid, Kde, KDE_GRID};
pub use validity::{
    check_validity, check_validity_with, circumcircle_curvature, count_self_intersections, curvature_sign_changes,
    outline_segments, segments_intersect, ValidityOptions, ValidityReport, CURVATURE_DEADBAND, MAX_SIGN_CHANGES,
};

//! Coordinate-file parsing and dataset construction.

mod dat;
mod dataset;
mod polyline;

pub use dat::{detect_format, parse_dat, parse_dat_as, serialize_selig, DatFormat};
pub use dataset::{
    build_dataset_d1, filter_near_duplicates, load_external_dataset, parse_params, perturb_params,
    random_params, ExternalLoad, FoilDataset, LoadOptions, LoadWarning, ManifestEntry, SourceLabel,
    DUPLICATE_TOL, MANIFEST_FILE, PERTURBATIONS_PER_BASE, PERTURBATION_FRACTION,
};
pub use polyline::{Closure, PolylineFoil, Provenance, CLOSED_TOL, MIN_SPACING};

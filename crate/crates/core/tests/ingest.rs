use std::fs;
use std::path::Path;

use foilspace::discretize::{discretize, Scheme};
use foilspace::geometry::{make_foil, Point2};
use foilspace::ingest::{
    build_dataset_d1, detect_format, load_external_dataset, parse_dat, perturb_params, random_params,
    serialize_selig, Closure, DatFormat, FoilDataset, LoadOptions, ManifestEntry, Provenance, SourceLabel,
    MANIFEST_FILE,
};
use foilspace::{Error, ErrorKind};

fn fixture(name: &str) -> String {
    fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)).unwrap()
}

fn pts(pairs: &[(f64, f64)]) -> Vec<Point2> {
    pairs.iter().map(|&(x, y)| Point2::new(x, y)).collect()
}

#[test]
fn selig_fixture_reads_through() {
    let pf = parse_dat(&fixture("selig_five.dat")).unwrap();
    assert_eq!(pf.name(), "SELIG FIVE");
    assert_eq!(pf.points(), pts(&[(1.0, 0.0), (0.5, 0.06), (0.0, 0.0), (0.5, -0.04), (1.0, 0.0)]));
    assert_eq!(pf.closure(), Closure::Closed);
}

#[test]
fn lednicer_fixture_is_reordered() {
    let text = fixture("lednicer_six.dat");
    assert_eq!(detect_format(&text), DatFormat::Lednicer);
    let pf = parse_dat(&text).unwrap();
    assert_eq!(pf.len(), 6);
    assert_eq!(
        pf.points(),
        pts(&[(1.0, 0.0), (0.5, 0.08), (0.0, 0.0), (0.02, -0.01), (0.5, -0.05), (1.0, 0.0)])
    );
    assert_eq!(pf.points().iter().filter(|p| **p == Point2::ZERO).count(), 1);
}

#[test]
fn lednicer_shared_nose_is_kept_once() {
    let pf = parse_dat(&fixture("lednicer_shared_nose.dat")).unwrap();
    assert_eq!(pf.points(), pts(&[(1.0, 0.0), (0.5, 0.08), (0.0, 0.0), (0.5, -0.05), (1.0, 0.0)]));
}

#[test]
fn open_trailing_edge_is_flagged() {
    let pf = parse_dat(&fixture("open_te.dat")).unwrap();
    assert_eq!(pf.closure(), Closure::OpenTrailingEdge);
    assert!(pf.closed_copy().is_closed());
}

#[test]
fn selig_serialization_round_trips_exactly() {
    let foil = make_foil(&random_params(1, 3)[0]).unwrap();
    // odd N under uniform-parametric spacing samples the nose at x = 0, so
    // the chord is already normalized
    let pf = discretize(&foil, Scheme::UniformParametric, 121).unwrap().with_name("round trip");
    assert!(pf.is_chord_normalized(0.0));
    let back = parse_dat(&serialize_selig(&pf)).unwrap();
    assert_eq!(back.points(), pf.points());
    assert_eq!(back.name(), "round trip");
}

#[test]
fn full_scale_dataset_size() {
    // 1263 bases with 5 perturbations each
    let bases = random_params(1263, 1);
    let total: usize = bases
        .iter()
        .enumerate()
        .map(|(i, b)| 1 + perturb_params(b, 5, 0.05, i as u64).unwrap().len())
        .sum();
    assert_eq!(total, 7578);
}

#[test]
fn d1_members_share_point_count() {
    let ds = build_dataset_d1(&random_params(4, 8), Scheme::Cosine, 200, 8).unwrap();
    assert_eq!(ds.len(), 24);
    assert!(ds.members().iter().all(|m| m.len() == 200));
    assert_eq!(ds.source(), SourceLabel::D1);
    let again = build_dataset_d1(&random_params(4, 8), Scheme::Cosine, 200, 8).unwrap();
    assert_eq!(ds, again);
}

fn write_selig(dir: &Path, name: &str, seed: u64, n: usize) {
    let foil = make_foil(&random_params(1, seed)[0]).unwrap();
    let pf = discretize(&foil, Scheme::UniformParametric, n).unwrap().with_name(name);
    fs::write(dir.join(format!("{name}.dat")), serialize_selig(&pf)).unwrap();
}

#[test]
fn directory_of_selig_files() {
    let dir = tempfile::tempdir().unwrap();
    for i in 0..10 {
        write_selig(dir.path(), &format!("foil{i:02}"), i, 81 + 10 * i as usize);
    }
    let load = load_external_dataset(dir.path(), &LoadOptions::new(Scheme::Cosine, 150)).unwrap();
    assert_eq!(load.dataset.len(), 10);
    assert!(load.dataset.members().iter().all(|m| m.len() == 150));
    assert!(load.warnings.is_empty());
    assert_eq!(load.dataset.members()[3].name(), "foil03");
    assert_eq!(load.dataset.members()[3].provenance(), Provenance::ExternalSynthesized);
    assert!(load.max_hausdorff < 1e-2);
}

#[test]
fn mixed_formats_come_out_in_selig_order() {
    let dir = tempfile::tempdir().unwrap();
    write_selig(dir.path(), "a", 1, 101);
    fs::write(dir.path().join("b.dat"), fixture("lednicer_shared_nose.dat")).unwrap();
    fs::write(dir.path().join("c.dat"), fixture("lednicer_six.dat")).unwrap();
    let load = load_external_dataset(dir.path(), &LoadOptions::new(Scheme::Cosine, 60)).unwrap();
    assert_eq!(load.dataset.len(), 3);
    for m in load.dataset.members() {
        let p = m.points();
        let le = m.leading_edge_index();
        // trailing edge first, then the upper surface (above the lower one)
        assert!(p[0].x > 0.99 && p[p.len() - 1].x > 0.99, "{}", m.name());
        assert!(p[le / 2].y > p[le + (p.len() - le) / 2].y, "{}", m.name());
    }
}

#[test]
fn corrupt_file_becomes_a_warning() {
    let dir = tempfile::tempdir().unwrap();
    for i in 0..4 {
        write_selig(dir.path(), &format!("ok{i}"), i, 90);
    }
    fs::write(dir.path().join("broken.dat"), "BROKEN\n1.0 0.0\n0.5 zz\n0.0 0.0\n0.5 -0.1\n1.0 0.0\n").unwrap();
    let load = load_external_dataset(dir.path(), &LoadOptions::new(Scheme::Cosine, 80)).unwrap();
    assert_eq!(load.dataset.len(), 4);
    assert_eq!(load.warnings.len(), 1);
    assert!(load.warnings[0].path.ends_with("broken.dat"));
    assert!(load.warnings[0].message.contains("line 3"), "{}", load.warnings[0].message);
}

#[test]
fn empty_directory_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("junk.dat"), "nothing here\n").unwrap();
    let err = load_external_dataset(dir.path(), &LoadOptions::new(Scheme::Cosine, 80)).unwrap_err();
    assert!(matches!(err, Error::EmptyDataset(_)));
    assert_eq!(err.kind(), ErrorKind::Data);
}

#[test]
fn manifest_sets_labels_and_provenance() {
    let dir = tempfile::tempdir().unwrap();
    write_selig(dir.path(), "x", 1, 90);
    write_selig(dir.path(), "y", 2, 90);
    let manifest = vec![ManifestEntry {
        path: "x.dat".into(),
        label: Some("uiuc-x".into()),
        provenance: Some(Provenance::File),
    }];
    fs::write(dir.path().join(MANIFEST_FILE), serde_json::to_string(&manifest).unwrap()).unwrap();
    let mut opts = LoadOptions::new(Scheme::UniformPoint, 70);
    opts.exclude = vec!["y".into()];
    let load = load_external_dataset(dir.path(), &opts).unwrap();
    assert_eq!(load.dataset.len(), 1);
    assert_eq!(load.dataset.members()[0].name(), "uiuc-x");
    assert_eq!(load.dataset.members()[0].provenance(), Provenance::File);
}

#[test]
fn near_duplicates_are_filtered() {
    let dir = tempfile::tempdir().unwrap();
    write_selig(dir.path(), "a", 5, 90);
    write_selig(dir.path(), "b", 5, 91);
    write_selig(dir.path(), "c", 6, 90);
    let mut opts = LoadOptions::new(Scheme::Cosine, 70);
    opts.duplicate_tol = Some(1e-3);
    let load = load_external_dataset(dir.path(), &opts).unwrap();
    assert_eq!(load.dataset.len(), 2);
    assert!(load.warnings.iter().any(|w| w.message.contains("near-duplicate")));
}

#[test]
fn dataset_csv_round_trip_through_disk() {
    let ds = build_dataset_d1(&random_params(2, 3), Scheme::UniformParametric, 40, 3).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.csv");
    ds.write_csv(&path).unwrap();
    let back = FoilDataset::read_csv(&path, Scheme::UniformParametric, SourceLabel::D1).unwrap();
    assert_eq!(back.members().len(), ds.members().len());
    for (a, b) in back.members().iter().zip(ds.members()) {
        assert_eq!(a.points(), b.points());
        assert_eq!(a.name(), b.name());
    }
}

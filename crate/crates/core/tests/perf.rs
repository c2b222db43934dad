use std::fs;
use std::os::unix::fs::PermissionsExt;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use foilspace::geometry::Point2;
use foilspace::ingest::{parse_dat, PolylineFoil, Provenance};
use foilspace::perf::{Evaluator, FlowCondition, PolarSource, SurrogateEvaluator, XfoilEvaluator, XFOIL_MAX_POINTS};
use foilspace::quality::performance_stats;
use foilspace::Error;
use proptest::prelude::*;
use std::f64::consts::PI;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn naca2410() -> PolylineFoil {
    parse_dat(&fs::read_to_string(fixture("naca2410.dat")).unwrap()).unwrap()
}

fn fake_xfoil(dir: &Path, body: &str) -> XfoilEvaluator {
    let path = dir.join("xfoil");
    fs::write(&path, format!("#!/bin/sh\n{body}\n")).unwrap();
    fs::set_permissions(&path, fs::Permissions::from_mode(0o755)).unwrap();
    let mut ev = XfoilEvaluator::new(path);
    ev.workdir = Some(dir.to_path_buf());
    ev
}

const HEADER: &str = "   alpha    CL        CD       CDp       CM\n  ------ -------- --------- --------- --------\n";

fn polar_writer(rows: &str) -> String {
    format!("cat > stdin.txt\nprintf '{}{rows}' > polar.txt", HEADER.replace('\n', "\\n"))
}

#[test]
fn fake_solver_happy_path() {
    let dir = tempfile::tempdir().unwrap();
    let ev = fake_xfoil(dir.path(), &polar_writer("   3.000   0.5432   0.00812   0.003  -0.05\\n"));
    let p = ev.evaluate(&naca2410(), &FlowCondition::default()).unwrap();
    assert!(p.converged);
    assert_eq!((p.cl, p.cd, p.source), (0.5432, 0.00812, PolarSource::Xfoil));
    assert!((p.lift_to_drag().unwrap() - 0.5432 / 0.00812).abs() < 1e-12);
    // scratch directories are removed
    let left: Vec<_> = fs::read_dir(dir.path()).unwrap().filter(|e| e.as_ref().unwrap().path().is_dir()).collect();
    assert!(left.is_empty());
}

#[test]
fn solver_sees_the_command_stream_and_a_bounded_foil() {
    let dir = tempfile::tempdir().unwrap();
    // echo the command stream and the foil size back through the polar file
    let body = format!(
        "cat > {0}/stdin.txt\ncp foil.dat {0}/foil.dat\nprintf '{1}   3.000   0.5   0.01\\n' > polar.txt",
        dir.path().display(),
        HEADER.replace('\n', "\\n")
    );
    let ev = fake_xfoil(dir.path(), &body);
    let dense: Vec<Point2> = (0..320)
        .map(|i| {
            let t = 2.0 * PI * i as f64 / 320.0;
            Point2::new(0.5 + 0.5 * t.cos(), 0.06 * t.sin())
        })
        .collect();
    let pf = PolylineFoil::new(dense, "dense", Provenance::File, None).unwrap();
    ev.evaluate(&pf, &FlowCondition::default()).unwrap();
    let stdin = fs::read_to_string(dir.path().join("stdin.txt")).unwrap();
    assert!(stdin.contains("VISC 500000") && stdin.contains("ALFA 3") && stdin.ends_with("QUIT\n"));
    let foil = fs::read_to_string(dir.path().join("foil.dat")).unwrap();
    assert_eq!(foil.lines().count() - 1, XFOIL_MAX_POINTS);
}

#[test]
fn hung_solver_is_killed() {
    let dir = tempfile::tempdir().unwrap();
    let mut ev = fake_xfoil(dir.path(), "exec sleep 30");
    ev.timeout = Duration::from_millis(300);
    let start = Instant::now();
    let err = ev.evaluate(&naca2410(), &FlowCondition::default()).unwrap_err();
    assert!(matches!(err, Error::Timeout(_)), "{err}");
    assert!(start.elapsed() < Duration::from_secs(10));
}

#[test]
fn missing_solver_is_an_environment_error() {
    let ev = XfoilEvaluator::new("/nonexistent/xfoil");
    let err = ev.evaluate(&naca2410(), &FlowCondition::default()).unwrap_err();
    assert!(matches!(err, Error::Environment(_)), "{err}");
}

#[test]
fn garbage_polar_is_a_protocol_error_with_output() {
    let dir = tempfile::tempdir().unwrap();
    let ev = fake_xfoil(dir.path(), "cat > /dev/null\necho 'solver chatter'\necho 'not a polar' > polar.txt");
    match ev.evaluate(&naca2410(), &FlowCondition::default()) {
        Err(Error::Protocol { output, .. }) => {
            assert!(output.contains("solver chatter") && output.contains("not a polar"));
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn empty_or_missing_polar_is_non_converged() {
    let dir = tempfile::tempdir().unwrap();
    let ev = fake_xfoil(dir.path(), &polar_writer(""));
    let p = ev.evaluate(&naca2410(), &FlowCondition::default()).unwrap();
    assert!(!p.converged && p.lift_to_drag().is_none());
    let ev = fake_xfoil(dir.path(), "cat > /dev/null");
    assert!(!ev.evaluate(&naca2410(), &FlowCondition::default()).unwrap().converged);
}

#[test]
fn stats_over_a_failing_solver_report_the_census() {
    let dir = tempfile::tempdir().unwrap();
    let ev = fake_xfoil(dir.path(), "cat > /dev/null");
    let foils = vec![naca2410(); 3];
    let err = performance_stats(&foils, &ev, &FlowCondition::default(), 2).unwrap_err();
    assert!(err.to_string().contains("3 non-converged"), "{err}");
    let missing = XfoilEvaluator::new("/nonexistent/xfoil");
    assert!(matches!(
        performance_stats(&foils, &missing, &FlowCondition::default(), 2),
        Err(Error::Environment(_))
    ));
}

#[derive(serde::Deserialize)]
struct Golden {
    cl: f64,
    cd: f64,
}

#[test]
fn naca2410_matches_golden_polar() {
    let Ok(ev) = XfoilEvaluator::from_env() else {
        eprintln!("xfoil not available; golden polar check skipped");
        return;
    };
    let golden = fixture("naca2410_golden.json");
    let text = fs::read_to_string(&golden).unwrap_or_else(|_| {
        panic!("xfoil is available but {} is missing; record it from a local run", golden.display())
    });
    let g: Golden = serde_json::from_str(&text).unwrap();
    let p = ev.evaluate(&naca2410(), &FlowCondition::default()).unwrap();
    assert!(p.converged);
    assert!((p.cl - g.cl).abs() <= 0.02 * g.cl.abs(), "cl {} vs {}", p.cl, g.cl);
    assert!((p.cd - g.cd).abs() <= 0.02 * g.cd.abs(), "cd {} vs {}", p.cd, g.cd);
}

fn naca_symmetric(t: f64, n: usize) -> PolylineFoil {
    let h = |x: f64| 5.0 * t * (0.2969 * x.sqrt() - 0.126 * x - 0.3516 * x * x + 0.2843 * x.powi(3) - 0.1036 * x.powi(4));
    let xs: Vec<f64> = (0..=n).map(|i| 0.5 * (1.0 - (PI * i as f64 / n as f64).cos())).collect();
    let mut pts: Vec<Point2> = xs.iter().rev().map(|&x| Point2::new(x, h(x))).collect();
    pts.extend(xs.iter().skip(1).map(|&x| Point2::new(x, -h(x))));
    PolylineFoil::from_points_unchecked(pts, "naca00", Provenance::File, None)
}

#[test]
fn surrogate_symmetric_foil_has_exactly_zero_lift() {
    let fc = FlowCondition::new(5e5, 0.0, 0.0, 100).unwrap();
    for t in [0.06, 0.12, 0.18] {
        assert_eq!(SurrogateEvaluator.evaluate(&naca_symmetric(t, 90), &fc).unwrap().cl, 0.0);
    }
}

#[test]
fn surrogate_flat_plate_lift_at_three_degrees() {
    let pts = vec![Point2::new(1.0, 0.0), Point2::new(0.5, 0.0), Point2::new(0.0, 0.0), Point2::new(0.5, 0.0), Point2::new(1.0, 0.0)];
    let pf = PolylineFoil::from_points_unchecked(pts, "plate", Provenance::File, None);
    let p = SurrogateEvaluator.evaluate(&pf, &FlowCondition::default()).unwrap();
    assert!((p.cl - 0.3290).abs() < 1e-4, "{}", p.cl);
}

#[test]
fn surrogate_cambered_foil_lifts_more() {
    let fc = FlowCondition::default();
    let cambered = SurrogateEvaluator.evaluate(&naca2410(), &fc).unwrap();
    let symmetric = SurrogateEvaluator.evaluate(&naca_symmetric(0.10, 100), &fc).unwrap();
    assert!(cambered.cl > symmetric.cl);
    // thin-airfoil zero-lift angle of NACA 2410 is about -2.1°
    assert!((cambered.cl - 2.0 * PI * (3.0f64 + 2.08).to_radians()).abs() < 0.01, "{}", cambered.cl);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn surrogate_ignores_translation_and_scale(dx in -100.0f64..100.0, dy in -100.0f64..100.0, s in 0.01f64..100.0) {
        let base = naca2410();
        let moved: Vec<Point2> = base.points().iter().map(|p| Point2::new(p.x * s + dx, p.y * s + dy)).collect();
        let moved = PolylineFoil::from_points_unchecked(moved, "m", Provenance::File, None);
        let fc = FlowCondition::default();
        let a = SurrogateEvaluator.evaluate(&base, &fc).unwrap();
        let b = SurrogateEvaluator.evaluate(&moved, &fc).unwrap();
        prop_assert!((a.cl - b.cl).abs() < 1e-9 * a.cl.abs());
        prop_assert!((a.cd - b.cd).abs() < 1e-9 * a.cd);
    }
}

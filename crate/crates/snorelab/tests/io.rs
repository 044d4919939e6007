use std::path::Path;

use proptest::prelude::*;
use snorelab::config::ExperimentConfig;
use snorelab::io::{
    parse_pgm, parse_sidecar, parse_trace, pgm_bytes, quantize, read_mask, read_pgm, read_sidecar,
    sidecar_text, trace_csv, write_mask, write_pgm, Provenance,
};
use snorelab::{build_problem, Error};
use snorelab_core::solvers::run_with_reference;

fn prov() -> Provenance {
    Provenance::new("cafe", 7)
}

#[test]
fn mid_gray_quantizes_to_128() {
    assert_eq!(quantize(0.5), 128);
    assert_eq!(quantize(0.0), 0);
    assert_eq!(quantize(1.0), 255);
    assert_eq!(quantize(-3.0), 0);
    assert_eq!(quantize(7.0), 255);
    assert_eq!(quantize(f64::NAN), 0);
}

#[test]
fn pgm_round_trips_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("img.pgm");
    let data = [0.0, 0.5, 1.0, 0.25, 0.75, 2.0];
    write_pgm(&path, &data, 2, 3, &prov()).unwrap();

    let img = read_pgm(&path).unwrap();
    assert_eq!((img.height, img.width), (2, 3));
    let bytes: Vec<u8> = img.data.iter().map(|&v| quantize(v)).collect();
    assert_eq!(bytes, [0, 128, 255, 64, 191, 255]);

    let side = read_sidecar(&path.with_extension("txt")).unwrap();
    assert_eq!(side.data, data);
    let text = std::fs::read(&path).unwrap();
    assert!(String::from_utf8_lossy(&text).contains("config_hash=cafe seed=7"));
}

#[test]
fn pgm_dimension_mismatch_is_an_error() {
    let mut bytes = pgm_bytes(&[0.1; 6], 2, 3, &prov());
    bytes.pop();
    let err = parse_pgm(&bytes, Path::new("short.pgm")).unwrap_err();
    assert!(matches!(err, Error::Malformed { what: "PGM", .. }));
    assert!(err.to_string().contains("6 pixels"), "{err}");

    let bytes = b"P5\n2 2\n65535\n\0\0\0\0\0\0\0\0";
    assert!(parse_pgm(bytes, Path::new("deep.pgm")).is_err());
    assert!(parse_pgm(b"P2\n1 1\n255\n0", Path::new("ascii.pgm")).is_err());
}

#[test]
fn sidecar_shape_mismatch_is_an_error() {
    let text = sidecar_text(&[1.0, 2.0, 3.0], 1, 3, &prov()).replace("shape 1 3", "shape 2 2");
    assert!(parse_sidecar(&text, Path::new("x.txt")).is_err());
}

#[test]
fn mask_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("mask.txt");
    let mask = [true, false, false, true, true, true];
    write_mask(&path, &mask, 3, &prov()).unwrap();
    assert_eq!(read_mask(&path).unwrap(), mask);
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 2);
}

#[test]
fn trace_round_trips_and_detects_edits() {
    let mut cfg = ExperimentConfig::default();
    cfg.solver.iters = 20;
    let problem = build_problem(&cfg.problem, 0).unwrap();
    let trace = run_with_reference(
        &cfg.solver_config(3).unwrap(),
        &problem.fid,
        &problem.den,
        &problem.x0,
        Some(&problem.truth),
    )
    .unwrap();
    let csv = trace_csv(&trace, "constant", &Provenance::new(cfg.hash(), 3));
    let (back, header) = parse_trace(&csv, Path::new("t.csv")).unwrap();
    assert!(header.digest_ok);
    assert_eq!(header.schedule, "constant");
    assert_eq!(header.provenance.config_hash, cfg.hash());
    assert_eq!(back.records, trace.records);
    assert_eq!(back.metadata, trace.metadata);
    assert_eq!(back.abort, trace.abort);

    // change one digit in the last row
    let last = csv.trim_end().rsplit('\n').next().unwrap();
    let cells: Vec<&str> = last.split(',').collect();
    let edited_cell = cells[4].replacen('e', "1e", 1);
    let edited = csv.replace(last, &last.replacen(cells[4], &edited_cell, 1));
    let (_, header) = parse_trace(&edited, Path::new("t.csv")).unwrap();
    assert!(!header.digest_ok);
}

proptest! {
    #[test]
    fn sidecar_is_lossless(data in prop::collection::vec(-1e6f64..1e6, 1..40)) {
        let text = sidecar_text(&data, 1, data.len(), &prov());
        let img = parse_sidecar(&text, Path::new("p.txt")).unwrap();
        prop_assert_eq!(img.data, data);
    }

    #[test]
    fn quantize_is_monotone(a in -0.5f64..1.5, b in -0.5f64..1.5) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(quantize(lo) <= quantize(hi));
    }

    #[test]
    fn pgm_bytes_reread_within_half_a_level(data in prop::collection::vec(0.0f64..=1.0, 6)) {
        let img = parse_pgm(&pgm_bytes(&data, 3, 2, &prov()), Path::new("p.pgm")).unwrap();
        for (a, b) in img.data.iter().zip(&data) {
            prop_assert!((a - b).abs() <= 0.5 / 255.0 + 1e-12);
        }
    }
}

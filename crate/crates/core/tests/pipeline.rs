mod common;

use selfsim::pipeline::{run_full, PipelineConfig, Source};
use std::collections::BTreeMap;
use std::path::Path;

fn config(out: &Path) -> PipelineConfig {
    PipelineConfig { directions: vec![0.4, 2.0], out: out.to_path_buf(), ..PipelineConfig::default() }
}

fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap())).collect()
}

#[test]
fn full_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let first = run_full(config(dir.path())).unwrap();
    let a = snapshot(dir.path());
    let second = run_full(config(dir.path())).unwrap();
    let b = snapshot(dir.path());
    assert_eq!(a.keys().collect::<Vec<_>>(), b.keys().collect::<Vec<_>>());
    for (name, bytes) in &a {
        assert!(bytes == &b[name], "{name} differs between runs");
    }
    assert_eq!(first.summary(), second.summary());
    for name in ["summary.json", "components.svg", "affine.svg", "psi_8.svg", "fractal_2_14.svg", "fractal_2_14.csv"] {
        assert!(a.contains_key(name), "missing {name}");
    }
    let summary: serde_json::Value = serde_json::from_slice(&a["summary.json"]).unwrap();
    assert_eq!(summary["schema"], 1);
    for c in summary["checks"].as_array().unwrap() {
        assert_eq!(c["pass"], true, "{c}");
    }
}

#[test]
fn figures_have_the_expected_shape() {
    let dir = tempfile::tempdir().unwrap();
    run_full(config(dir.path())).unwrap();
    let read = |n: &str| std::fs::read_to_string(dir.path().join(n)).unwrap();
    let comps = read("components.svg");
    assert_eq!(comps.matches("<g id=\"component-").count(), 2);
    assert!(comps.starts_with("<svg") && comps.trim_end().ends_with("</svg>"));
    assert_eq!(read("psi_8.svg").matches("<line").count(), 0);
    assert_eq!(read("psi_2.svg").matches("<line").count(), 2);
    let csv = read("fractal_2_14.csv");
    let svg = read("fractal_2_14.svg");
    assert_eq!(csv.lines().count() - 1, svg.matches("<circle").count());
}

#[test]
fn invalid_configurations_are_rejected() {
    let bad = [
        PipelineConfig { theta: 1.0, ..PipelineConfig::default() },
        PipelineConfig { eps_arc: 0.0, ..PipelineConfig::default() },
        PipelineConfig { window: 0, ..PipelineConfig::default() },
        PipelineConfig { directions: vec![f64::NAN], ..PipelineConfig::default() },
    ];
    for cfg in bad {
        assert!(matches!(cfg.validate(), Err(selfsim::Error::Config(_))));
    }
    let missing = PipelineConfig { source: Source::parse("/nonexistent/rules.json"), ..PipelineConfig::default() };
    assert!(matches!(selfsim::pipeline::Workbench::new(missing), Err(selfsim::Error::Config(_))));
}

#[test]
fn seeded_directions_are_reproducible() {
    let a = PipelineConfig::default().resolved_directions();
    assert_eq!(a, PipelineConfig::default().resolved_directions());
    assert_eq!(a.len(), 8);
    assert!(a.iter().all(|x| (0.0..std::f64::consts::TAU).contains(x)));
    let other = PipelineConfig { seed: 2, ..PipelineConfig::default() }.resolved_directions();
    assert_ne!(a, other);
}

//! End-to-end acceptance checks. Each prints one PASS/FAIL line.

use std::time::{Duration, Instant};

use solvrigid::config::RunConfig;
use solvrigid::report::Section;
use solvrigid::run::{run, Command};

fn section(cmd: Command, cfg: &RunConfig) -> (Section, Duration) {
    let start = Instant::now();
    let mut report = run(cmd, cfg);
    (report.sections.remove(0), start.elapsed())
}

/// Every invariant whose name starts with one of `prefixes` must pass, and at least one must exist.
fn criterion(id: u32, title: &str, s: &Section, prefixes: &[&str], elapsed: Duration, budget_s: f64, extra: bool) {
    let picked: Vec<_> = s.invariants.iter().filter(|i| prefixes.iter().any(|p| i.name.starts_with(p))).collect();
    let mut ok = extra && elapsed.as_secs_f64() < budget_s;
    for p in prefixes {
        ok &= picked.iter().any(|i| i.name.starts_with(p));
    }
    ok &= picked.iter().all(|i| i.pass);
    println!(
        "{} criterion {id} {title} ({:.2}s of {budget_s}s)",
        if ok { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64()
    );
    for i in picked.iter().filter(|i| !i.pass) {
        println!("    failed {} value={:?} tol={:?} detail={:?}", i.name, i.value, i.tolerance, i.detail);
    }
    assert!(ok, "criterion {id} failed");
}

#[test]
fn criterion_1_metric_axioms() {
    let cfg = RunConfig::default();
    let ranks: Vec<usize> = cfg.metric.specs.iter().map(|s| s.spec.rank()).collect();
    let shape = cfg.metric.triples == 10_000 && ranks == [1, 2, 3] && cfg.metric.tolerance == 1e-12;
    let (s, t) = section(Command::Metric, &cfg);
    criterion(1, "metric axioms", &s, &["triangle_inequality", "dilation_similarity"], t, 5.0, shape);
}

#[test]
fn criterion_2_chain_functional() {
    let cfg = RunConfig::default();
    let c = &cfg.metric.chain;
    let shape = c.beta_above == 3.0 && c.beta_equal == 2.0 && c.grid_above.max_depth == 12 && c.zero_tolerance == 1e-4 && c.gap_tolerance == 1e-6;
    let (s, t) = section(Command::Metric, &cfg);
    criterion(2, "chain functional", &s, &["chain_vanishes_above_first_exponent", "chain_equals_gap_at_first_exponent"], t, 30.0, shape);
}

#[test]
fn criterion_3_boundary_correspondence() {
    let cfg = RunConfig::default();
    let shape = cfg.geodesic.pairs == 10_000 && cfg.geodesic.tolerance == 1e-12;
    let (s, t) = section(Command::Geodesic, &cfg);
    criterion(
        3,
        "boundary correspondence",
        &s,
        &["pair_to_point_matches_distance", "height_isometry_is_dilation", "height_isometry_composition"],
        t,
        5.0,
        shape,
    );
}

#[test]
fn criterion_4_symmetric_space() {
    let cfg = RunConfig::default();
    let c = &cfg.conformal;
    let shape = c.triples == 1000
        && c.metric_tolerance == 1e-10
        && c.sets == 100
        && c.set_size == 5
        && c.equivariance_tolerance == 1e-6
        && c.two_point_tolerance == 1e-9;
    let (s, t) = section(Command::Conformal, &cfg);
    criterion(4, "symmetric space", &s, &["kdist_", "circumcenter_equivariant", "two_point_circumcenter_is_identity"], t, 60.0, shape);
}

#[test]
fn criterion_5_one_dimensional_conjugation() {
    let cfg = RunConfig::default();
    let c = &cfg.conjugate;
    let shape = c.word_len == 12 && c.grid.x.step == 1e-3 && c.tolerance == 1e-3;
    let (s, t) = section(Command::Conjugate, &cfg);
    criterion(5, "1-D conjugation", &s, &["measure_nonvanishing", "conjugated_derivative_oscillation"], t, 120.0, shape);
}

#[test]
fn criterion_6_stretch_rotation_normalization() {
    let cfg = RunConfig::default();
    let shape = cfg.conjugate.normalize.tolerance == 1e-6 && !cfg.conjugate.rigidity.constant_angles.is_empty();
    let (s, t) = section(Command::Conjugate, &cfg);
    criterion(
        6,
        "stretch/rotation normalization",
        &s,
        &["normalized_stretch_matches_quotient", "rotating_fiber_has_witness", "constant_rotation_passes"],
        t,
        30.0,
        shape,
    );
}

#[test]
fn criterion_7_nilpotent_algorithms() {
    let cfg = RunConfig::default();
    let shape = cfg.roots.sample_points == 10_000 && cfg.roots.cases.len() >= 2;
    let (s, t) = section(Command::Roots, &cfg);
    criterion(
        7,
        "nilpotent algorithms",
        &s,
        &[
            "root_decomposition",
            "root_power",
            "root_top_level_bound",
            "root_residual_identity",
            "shuffle_identities",
            "epsilon_dominates_oscillation",
            "displacement_bound_dominates",
        ],
        t,
        30.0,
        shape,
    );
}

#[test]
fn criterion_8_reciprocity_and_homomorphisms() {
    let cfg = RunConfig::default();
    let shape = cfg.classify.reciprocity.mismatch == (2.0, 1.0 / 3.0) && cfg.classify.homomorphisms.composites == 1000 && cfg.classify.homomorphisms.tolerance == 1e-9;
    let (s, t) = section(Command::Classify, &cfg);
    criterion(
        8,
        "reciprocity and homomorphisms",
        &s,
        &[
            "reciprocity[",
            "reciprocity_mismatch_detected",
            "stretch_is_multiplicative",
            "rotation_is_multiplicative",
            "height_is_additive",
        ],
        t,
        10.0,
        shape,
    );
}

#[test]
fn criterion_9_determinism() {
    let bin = env!("CARGO_BIN_EXE_solvrigid");
    let config = concat!(env!("CARGO_MANIFEST_DIR"), "/configs/default.json");
    let start = Instant::now();
    let mut reports = vec![];
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &dirs {
        let out = std::process::Command::new(bin)
            .args(["all", "--config", config, "--seed", "11", "--out"])
            .arg(d.path())
            .output()
            .unwrap();
        let path = String::from_utf8(out.stdout).unwrap().trim().to_string();
        reports.push((out.status.success(), std::fs::read(path).unwrap_or_default()));
    }
    let ok = reports.iter().all(|(pass, bytes)| *pass && !bytes.is_empty()) && reports[0].1 == reports[1].1;
    println!("{} criterion 9 determinism ({:.2}s)", if ok { "PASS" } else { "FAIL" }, start.elapsed().as_secs_f64());
    assert!(ok, "criterion 9 failed");
}

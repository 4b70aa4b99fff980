//! Property suites behind each subcommand.
//!
//! Every suite draws from its own seeded stream, so a section's numbers do not
//! depend on which other sections ran.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde_json::json;

use crate::conformal::{act, circumcenter, invariant_structure, kdist, ConfClass};
use crate::config::*;
use crate::error::{Error, Result};
use crate::fixtures;
use crate::mapalg::expr::{constant, coord, cos, scale, sin, FuncExpr};
use crate::mapalg::group::Letter;
use crate::mapalg::{
    check_reciprocity, classify, height_hom, rotation_hom, rotation_rigidity_witness, stretch_hom, ASimMap,
    AlmostTranslation, BoundaryMap, BoundaryPair, MapClass, RigidityVerdict, SimMap,
};
use crate::nilpotent::{
    approx_lth_root, displacement_bound, epsilon_bounds, estimation_check, orbit_growth, orbit_growth_csv,
    sampled_displacement, sampled_oscillation, shuffle_check,
};
use crate::quasimetric::{chain_energy, dilate, distance};
use crate::report::{Invariant, Report, Section};
use crate::sampling::{multiscale_point, rng, uniform_pairs, uniform_point, SampleRng};
use crate::solvgroup::{
    boundary_of_height_isometry, height_isometry_pair, inverse, multiply, pair_to_height_bisect, pair_to_point,
    suspend_boundary_map, SolvPoint, VerticalGeodesic,
};
use crate::tukia::{self, conjugator_1d, sup_measure_1d, verify_conjugation, GroupSample};
use crate::{BlockPoint, PointMap, SpectralData};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Metric,
    Geodesic,
    Classify,
    Conformal,
    Conjugate,
    Roots,
    All,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Metric => "metric",
            Command::Geodesic => "geodesic",
            Command::Classify => "classify",
            Command::Conformal => "conformal",
            Command::Conjugate => "conjugate",
            Command::Roots => "roots",
            Command::All => "all",
        }
    }

    fn sections(self) -> Vec<Command> {
        use Command::*;
        match self {
            All => vec![Metric, Geodesic, Classify, Conformal, Conjugate, Roots],
            c => vec![c],
        }
    }

    fn stream(self) -> u64 {
        self as u64 + 1
    }
}

/// Run a subcommand; the caller decides what to do with the report.
pub fn run(cmd: Command, cfg: &RunConfig) -> Report {
    let mut report = Report::new(cmd.name(), cfg.seed, &cfg.to_json());
    for c in cmd.sections() {
        log::info!("running {}", c.name());
        let mut r = rng(cfg.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(c.stream()));
        let section = match c {
            Command::Metric => metric(&cfg.metric, &mut r),
            Command::Geodesic => geodesic(&cfg.geodesic, &mut r),
            Command::Classify => classify_suite(&cfg.classify, &mut r),
            Command::Conformal => conformal_suite(&cfg.conformal, &mut r),
            Command::Conjugate => conjugate(&cfg.conjugate, &mut r),
            Command::Roots => roots(&cfg.roots, &mut r),
            Command::All => unreachable!("expanded above"),
        };
        log::info!("{}: {}", c.name(), if section.pass { "pass" } else { "FAIL" });
        report.add(section);
    }
    report
}

fn max_rel(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(f64::MIN_POSITIVE);
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max) / scale
}

// metric

fn metric(cfg: &MetricConfig, r: &mut SampleRng) -> Section {
    let mut s = Section::new("metric");
    let (lo, hi) = cfg.scale_decades;
    for ns in &cfg.specs {
        let spec = &ns.spec;
        let a1 = spec.alpha(0);
        let (mut tri, mut sym, mut dil) = (0.0f64, 0.0f64, 0.0f64);
        let mut sep = true;
        for _ in 0..cfg.triples {
            let p = multiscale_point(spec, r, lo, hi);
            let q = multiscale_point(spec, r, lo, hi);
            let w = multiscale_point(spec, r, lo, hi);
            let d = |a: &BlockPoint, b: &BlockPoint| distance(spec, a, b).expect("same spectral data");
            let (pq, qw, pw) = (d(&p, &q), d(&q, &w), d(&p, &w));
            let rhs = pq.powf(a1) + qw.powf(a1);
            if rhs > 0.0 {
                tri = tri.max((pw.powf(a1) - rhs) / rhs);
            }
            sym = sym.max((pq - d(&q, &p)).abs() / pq.max(f64::MIN_POSITIVE));
            sep &= d(&p, &p) == 0.0 && (pq > 0.0 || p == q);
            let t = 10f64.powf(r.gen_range(-2.0..=2.0));
            if pq > 0.0 {
                let dt = d(&dilate(spec, t, &p).expect("t > 0"), &dilate(spec, t, &q).expect("t > 0"));
                dil = dil.max((dt / (t * pq) - 1.0).abs());
            }
        }
        s.push(Invariant::at_most(format!("triangle_inequality[{}]", ns.name), tri.max(0.0), cfg.tolerance));
        s.push(Invariant::at_most(format!("symmetry[{}]", ns.name), sym, cfg.tolerance));
        s.push(Invariant::flag(format!("separation[{}]", ns.name), sep));
        s.push(Invariant::at_most(format!("dilation_similarity[{}]", ns.name), dil, cfg.tolerance));
    }
    let c = &cfg.chain;
    let rank = c.spec.rank();
    let p = c.spec.zero();
    let mut q = p.clone();
    q.blocks[0][0] = c.gap;
    s.check(
        "chain_vanishes_above_first_exponent",
        chain_energy(&c.spec, c.beta_above, &p, &q, &c.grid_above)
            .map(|e| Invariant::at_most("chain_vanishes_above_first_exponent", e.value, c.zero_tolerance).with_detail(&e.history)),
    );
    s.check(
        "chain_equals_gap_at_first_exponent",
        chain_energy(&c.spec, c.beta_equal, &p, &q, &c.grid_equal).map(|e| {
            Invariant::at_most("chain_equals_gap_at_first_exponent", (e.value - c.gap.abs()).abs(), c.gap_tolerance)
                .with_detail(json!({ "value": e.value, "rank": rank }))
        }),
    );
    s
}

// geodesic

fn geodesic(cfg: &GeodesicConfig, r: &mut SampleRng) -> Section {
    let mut s = Section::new("geodesic");
    let spec = &cfg.spec;
    let low = &spec.lower;
    let (lo, hi) = cfg.scale_decades;
    let (mut rho, mut bis) = (0.0f64, 0.0f64);
    let mut dumped = String::new();
    for k in 0..cfg.pairs {
        let p = multiscale_point(low, r, lo, hi);
        let q = multiscale_point(low, r, lo, hi);
        let d = distance(low, &p, &q).expect("same spectral data");
        if d == 0.0 {
            continue;
        }
        let t = pair_to_point(spec, &p, &q).expect("distinct points").height;
        rho = rho.max((t.exp() / d - 1.0).abs());
        if let Ok(b) = pair_to_height_bisect(spec, &p, &q) {
            bis = bis.max((b - t).abs());
        }
        if k < 2 {
            let anchor = pair_to_point(spec, &p, &q).expect("distinct points");
            for upward in [true, false] {
                let g = VerticalGeodesic { anchor: anchor.clone(), upward };
                dumped.push_str(&format!("# pair {k} upward={upward}\n{}", g.csv(&cfg.geodesic_ts)));
            }
        }
    }
    s.push(Invariant::at_most("pair_to_point_matches_distance", rho, cfg.tolerance));
    s.push(Invariant::at_most("bisection_agrees", bis, cfg.bisect_tolerance));

    let (a, b) = cfg.heights;
    let mut dil: f64 = 0.0;
    let mut comp: f64 = 0.0;
    let res = (|| -> Result<()> {
        let fa = boundary_of_height_isometry(spec, a)?;
        let fb = boundary_of_height_isometry(spec, b)?;
        let fab = fa.compose(&fb)?;
        let direct = boundary_of_height_isometry(spec, a + b)?;
        comp = comp.max((fab.stretch() / (a + b).exp() - 1.0).abs());
        for _ in 0..cfg.pairs.min(2000) {
            let p = uniform_point(low, r, 10.0);
            dil = dil.max(max_rel(&fa.apply(&p).flat(), &dilate(low, a.exp(), &p)?.flat()));
            comp = comp.max(max_rel(&fab.apply(&p).flat(), &direct.apply(&p).flat()));
        }
        Ok(())
    })();
    match res {
        Ok(()) => {
            s.push(Invariant::at_most("height_isometry_is_dilation", dil, cfg.tolerance));
            s.push(Invariant::at_most("height_isometry_composition", comp, cfg.tolerance));
        }
        Err(e) => s.push(Invariant::error("height_isometry", &e)),
    }

    let draw = |r: &mut SampleRng| SolvPoint {
        height: r.gen_range(-2.0..=2.0),
        x: uniform_point(low, r, 3.0),
        z: uniform_point(&spec.upper, r, 3.0),
    };
    let (mut assoc, mut inv) = (0.0f64, 0.0f64);
    for _ in 0..1000 {
        let (x, y, z) = (draw(r), draw(r), draw(r));
        let m = |u: &SolvPoint, v: &SolvPoint| multiply(spec, u, v).expect("same spec");
        let lhs = m(&m(&x, &y), &z);
        let rhs = m(&x, &m(&y, &z));
        let flat = |p: &SolvPoint| [vec![p.height], p.x.flat(), p.z.flat()].concat();
        assoc = assoc.max(max_rel(&flat(&lhs), &flat(&rhs)));
        let e = m(&x, &inverse(spec, &x).expect("finite"));
        inv = inv.max(flat(&e).iter().fold(0.0, |acc, v| acc.max(v.abs())));
    }
    s.push(Invariant::at_most("group_law_associative", assoc, cfg.associativity_tolerance));
    s.push(Invariant::at_most("group_law_inverse", inv, 1e-9));

    let probes: Vec<BlockPoint> = (0..20).map(|_| uniform_point(low, r, 3.0)).collect();
    let samples: Vec<(f64, BlockPoint, BlockPoint)> =
        (0..1000).map(|_| (r.gen_range(-2.0..=2.0), uniform_point(low, r, 3.0), uniform_point(low, r, 3.0))).collect();
    s.check(
        "suspended_dilation_preserves_levels",
        (|| {
            let g = SimMap::dilation(low, a.exp())?.to_block_map();
            let sus = suspend_boundary_map(spec, &g, a, &probes, r)?;
            let (lo, hi) = sus.level_distortion(&samples)?;
            Ok(Invariant::at_most("suspended_dilation_preserves_levels", (lo - 1.0).abs().max((hi - 1.0).abs()), 1e-9))
        })(),
    );
    s.csv("vertical_geodesics", dumped);
    s
}

// classify

fn class_name(c: &MapClass) -> &'static str {
    match c {
        MapClass::Sim { .. } => "sim",
        MapClass::Asim { .. } => "asim",
        MapClass::Bilip { .. } => "bilip",
        MapClass::Qsim { .. } => "qsim",
    }
}

fn rotation2(theta: f64) -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[theta.cos(), -theta.sin(), theta.sin(), theta.cos()])
}

/// Random almost similarity on `α = [1, 2]`, `n = [2, 1]` with stretch `exp(log_t)`.
fn random_asim(spec: &SpectralData, log_t: f64, r: &mut SampleRng) -> Result<ASimMap> {
    let sign = if r.gen_bool(0.5) { 1.0 } else { -1.0 };
    let sim = SimMap::new(
        spec.clone(),
        log_t.exp(),
        vec![rotation2(r.gen_range(0.0..std::f64::consts::TAU)), DMatrix::from_element(1, 1, sign)],
        vec![DVector::from_fn(2, |_, _| r.gen_range(-2.0..=2.0)), DVector::from_element(1, r.gen_range(-2.0..=2.0))],
    )?;
    let (u, v) = (r.gen_range(-1.0..=1.0), r.gen_range(-1.0..=1.0));
    let first = FuncExpr::Concat { parts: vec![scale(u, sin(coord(1, 0))), scale(v, cos(coord(1, 0)))] };
    let almost = AlmostTranslation::new(spec.clone(), vec![first, constant(vec![r.gen_range(-1.0..=1.0)])], 1.0 + u.abs() + v.abs())?;
    ASimMap::new(sim, almost)
}

fn homomorphism_laws(cfg: &HomConfig, s: &mut Section, r: &mut SampleRng) -> Result<()> {
    let spec = SpectralData::new(vec![1.0, 2.0], vec![2, 1])?;
    let upper = SpectralData::simple(&[0.5])?;
    let (mut st, mut rot, mut ht, mut hom) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for _ in 0..cfg.composites {
        let v = [r.gen_range(-1.0..=1.0), r.gen_range(-1.0..=1.0)];
        let sf = [r.gen_range(-1.0..=1.0), r.gen_range(-1.0..=1.0)];
        let sg = [r.gen_range(-1.0..=1.0), r.gen_range(-1.0..=1.0)];
        let dot = |a: &[f64; 2]| a[0] * v[0] + a[1] * v[1];
        let f = BoundaryMap::Asim { map: random_asim(&spec, dot(&sf), r)? };
        let g = BoundaryMap::Asim { map: random_asim(&spec, dot(&sg), r)? };
        let fg = f.compose(&g)?;
        let (tf, tg, tfg) = (f.stretch().unwrap_or(f64::NAN), g.stretch().unwrap_or(f64::NAN), fg.stretch().unwrap_or(f64::NAN));
        st = st.max((tfg.ln() - tf.ln() - tg.ln()).abs());
        let (rf, rg, rfg) = (rotation_hom(&f)?, rotation_hom(&g)?, rotation_hom(&fg)?);
        for i in 0..rf.len() {
            rot = rot.max((&rfg[i] - &rf[i] * &rg[i]).abs().max());
        }
        let lift = |m: &BoundaryMap| -> Result<BoundaryPair> {
            let t = m.stretch().unwrap_or(f64::NAN);
            Ok(BoundaryPair { lower: m.clone(), upper: BoundaryMap::Sim { map: SimMap::dilation(&upper, 1.0 / t)? } })
        };
        let pf = lift(&f)?;
        let pg = lift(&g)?;
        let pfg = BoundaryPair { lower: pf.lower.compose(&pg.lower)?, upper: pf.upper.compose(&pg.upper)? };
        ht = ht.max((height_hom(&pfg)? - height_hom(&pf)? - height_hom(&pg)?).abs());
        let sfg = [sf[0] + sg[0], sf[1] + sg[1]];
        let w = stretch_hom(&[f.clone(), g.clone(), fg], &[sf.to_vec(), sg.to_vec(), sfg.to_vec()])?;
        hom = hom.max((w[0] - v[0]).abs().max((w[1] - v[1]).abs()));
    }
    s.push(Invariant::at_most("stretch_is_multiplicative", st, cfg.tolerance));
    s.push(Invariant::at_most("rotation_is_multiplicative", rot, cfg.tolerance));
    s.push(Invariant::at_most("height_is_additive", ht, cfg.tolerance));
    s.push(Invariant::at_most("stretch_hom_recovers_vector", hom, cfg.tolerance));
    Ok(())
}

fn classify_suite(cfg: &ClassifyConfig, r: &mut SampleRng) -> Section {
    let mut s = Section::new("classify");
    let pairs = uniform_pairs(&cfg.spec, r, cfg.pairs, cfg.radius);
    let probes: Vec<BlockPoint> = (0..cfg.probes).map(|_| uniform_point(&cfg.spec, r, cfg.radius)).collect();
    for case in &cfg.cases {
        let name = format!("class[{}]", case.name);
        let map = case.map.to_block_map();
        match classify(&cfg.spec, &map, &pairs, &probes, r) {
            Ok(c) => {
                let got = class_name(&c.class);
                let pass = case.expect.as_deref().map_or(true, |e| e == got);
                s.push(Invariant::flag(name, pass).with_detail(&c));
            }
            Err(e) => s.push(Invariant::error(name, &e)),
        }
    }

    let rc = &cfg.reciprocity;
    for &a in &rc.heights {
        let name = format!("reciprocity[{a}]");
        s.check(&name, height_isometry_pair(&rc.spec, a).and_then(|p| check_reciprocity(&p)).map(|rep| {
            Invariant::at_most(name.clone(), rep.log_product.abs(), crate::mapalg::homs::RECIPROCITY_TOL).with_detail(&rep)
        }));
    }
    s.check(
        "reciprocity_mismatch_detected",
        (|| {
            let (tl, tu) = rc.mismatch;
            let pair = BoundaryPair {
                lower: BoundaryMap::Sim { map: SimMap::dilation(&rc.spec.lower, tl)? },
                upper: BoundaryMap::Sim { map: SimMap::dilation(&rc.spec.upper, tu)? },
            };
            let rep = check_reciprocity(&pair)?;
            let ratio = tl * tu;
            let geometric = rep.drift.iter().enumerate().map(|(k, d)| (d / ratio.powi(k as i32 + 1) - 1.0).abs()).fold(0.0, f64::max);
            let pass = !rep.pass && geometric <= 1e-9;
            Ok(Invariant::flag("reciprocity_mismatch_detected", pass).with_value(geometric).with_detail(&rep))
        })(),
    );
    if let Err(e) = homomorphism_laws(&cfg.homomorphisms, &mut s, r) {
        s.push(Invariant::error("homomorphism_laws", &e));
    }
    s
}

// conformal

/// `exp(S)` normalized, for a random symmetric `S` with entries in `[-w, w]`.
fn random_class(n: usize, w: f64, r: &mut SampleRng) -> ConfClass {
    let mut m = DMatrix::from_fn(n, n, |_, _| r.gen_range(-w..=w));
    m = (&m + m.transpose()) * 0.5;
    let e = m.symmetric_eigen();
    let x = &e.eigenvectors * DMatrix::from_diagonal(&e.eigenvalues.map(f64::exp)) * e.eigenvectors.transpose();
    ConfClass::normalized(&((&x + x.transpose()) * 0.5)).expect("positive definite")
}

/// Random matrix with condition number at most 10.
fn random_gl(n: usize, r: &mut SampleRng) -> DMatrix<f64> {
    loop {
        let m = DMatrix::from_fn(n, n, |_, _| r.gen_range(-2.0..=2.0));
        let sv = m.clone().singular_values();
        let (lo, hi) = (sv.min(), sv.max());
        if lo > 0.0 && hi / lo <= 10.0 {
            return m;
        }
    }
}

fn conformal_suite(cfg: &ConformalConfig, r: &mut SampleRng) -> Section {
    let mut s = Section::new("conformal");
    let n = cfg.dim;
    let (mut sym, mut tri, mut ident, mut inv) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for _ in 0..cfg.triples {
        let (a, b, c) = (random_class(n, 1.0, r), random_class(n, 1.0, r), random_class(n, 1.0, r));
        let x = random_gl(n, r);
        sym = sym.max((kdist(&a, &b) - kdist(&b, &a)).abs());
        tri = tri.max(kdist(&a, &c) - kdist(&a, &b) - kdist(&b, &c));
        ident = ident.max(kdist(&a, &a));
        match (act(&x, &a), act(&x, &b)) {
            (Ok(xa), Ok(xb)) => inv = inv.max((kdist(&xa, &xb) - kdist(&a, &b)).abs()),
            _ => inv = f64::INFINITY,
        }
    }
    s.push(Invariant::at_most("kdist_symmetric", sym, cfg.metric_tolerance));
    s.push(Invariant::at_most("kdist_triangle", tri.max(0.0), cfg.metric_tolerance));
    s.push(Invariant::at_most("kdist_identity", ident, cfg.metric_tolerance));
    s.push(Invariant::at_most("kdist_gl_invariant", inv, cfg.metric_tolerance));

    let mut eq: f64 = 0.0;
    let mut failures = 0usize;
    for _ in 0..cfg.sets {
        let set: Vec<ConfClass> = (0..cfg.set_size).map(|_| random_class(n, 1.0, r)).collect();
        let x = random_gl(n, r);
        let moved: Result<Vec<ConfClass>> = set.iter().map(|a| act(&x, a)).collect();
        let res = moved.and_then(|m| {
            let c0 = circumcenter(&set, &cfg.circumcenter)?;
            let c1 = circumcenter(&m, &cfg.circumcenter)?;
            Ok(kdist(&c1.center, &act(&x, &c0.center)?))
        });
        match res {
            Ok(d) => eq = eq.max(d),
            Err(_) => failures += 1,
        }
    }
    s.push(Invariant::at_most("circumcenter_equivariant", if failures > 0 { f64::INFINITY } else { eq }, cfg.equivariance_tolerance));

    let a = random_class(n, 1.5, r);
    s.check(
        "two_point_circumcenter_is_identity",
        circumcenter(&[a.clone(), a.inverse()], &cfg.circumcenter).map(|c| {
            let d = (c.center.matrix() - DMatrix::<f64>::identity(n, n)).abs().max();
            Invariant::at_most("two_point_circumcenter_is_identity", d, cfg.two_point_tolerance)
        }),
    );

    let e = &cfg.elliptic;
    let res = (|| -> Result<()> {
        let sample = fixtures::elliptic_sample(e.theta, e.word_len)?;
        let inv = invariant_structure(&sample.generators, &e.grid, e.word_len, &cfg.circumcenter)?;
        let expected = ConfClass::normalized(&DMatrix::from_row_slice(2, 2, &[0.25, 0.0, 0.0, 1.0]))?;
        let mut off: f64 = 0.0;
        let mut csv = String::from("x1,x2,y,m11,m12,m21,m22,defect\n");
        for smp in &inv.field.samples {
            off = off.max(kdist(&smp.class()?, &expected));
            let p = smp.point.flat();
            let row: Vec<String> = p.iter().chain(&smp.matrix).chain([&smp.defect]).map(|v| v.to_string()).collect();
            csv.push_str(&row.join(","));
            csv.push('\n');
        }
        s.push(Invariant::flag("elliptic_field_defined", inv.flagged.is_empty()));
        s.push(Invariant::at_most("elliptic_field_invariant", inv.max_defect, e.tolerance));
        s.push(Invariant::at_most("elliptic_field_matches_closed_form", off, e.tolerance));
        s.csv("elliptic_mu", csv);
        Ok(())
    })();
    if let Err(err) = res {
        s.push(Invariant::error("elliptic_field", &err));
    }
    s
}

// conjugate

fn conjugation_sample(cfg: &ConjugateConfig) -> Result<GroupSample> {
    match &cfg.sample {
        SampleSource::Piecewise1d => fixtures::piecewise_1d(cfg.word_len),
        SampleSource::Explicit { spec, generators, uniform_k } => {
            GroupSample::new(spec.clone(), generators.clone(), cfg.word_len, *uniform_k)
        }
    }
}

fn pipeline(cfg: &ConjugateConfig, s: &mut Section, r: &mut SampleRng) -> Result<()> {
    let sample = conjugation_sample(cfg)?;
    let field = sup_measure_1d(&sample, &cfg.grid)?;
    s.push(Invariant::flag("measure_nonvanishing", field.flagged.is_empty()).with_detail(json!({ "words": field.words })));
    let conj = conjugator_1d(&sample.spec, &field)?;
    let mut probes = Vec::with_capacity(cfg.probes);
    for _ in 0..cfg.probes {
        let mut p = uniform_point(&sample.spec, r, 1.0);
        p.blocks[0][0] = r.gen_range(-cfg.probe_box..=cfg.probe_box);
        probes.push(p);
    }
    let rep = verify_conjugation(&sample, &conj.map, &probes, cfg.tolerance)?;
    s.push(
        Invariant::at_most("conjugated_derivative_oscillation", rep.max_after, cfg.tolerance)
            .with_detail(json!({ "before": rep.max_before, "richardson": conj.richardson, "words": rep.words.len() })),
    );
    if cfg.sample == SampleSource::Piecewise1d {
        let exact = fixtures::piecewise_1d_exact_conjugator()?;
        let gap = probes
            .iter()
            .map(|p| (conj.map.apply(p).blocks[0][0] - exact.apply(p).blocks[0][0]).abs())
            .fold(0.0, f64::max);
        s.push(Invariant::at_most("conjugator_matches_closed_form", gap, 1e-4));
    }
    let stride = (field.xs.len() / 2000).max(1);
    let mut csv = String::from("x,mu_plus,mu_minus\n");
    for k in (0..field.xs.len()).step_by(stride) {
        csv.push_str(&format!("{},{},{}\n", field.xs[k], field.plus[k], field.minus[k]));
    }
    s.csv("mu", csv);
    let mut csv = String::from("x,nu\n");
    for k in (0..conj.nu.len().min(field.xs.len())).step_by(stride) {
        csv.push_str(&format!("{},{}\n", field.xs[k], conj.nu[k]));
    }
    s.csv("nu", csv);
    Ok(())
}

fn normalize(cfg: &NormalizeConfig, s: &mut Section) -> Result<()> {
    let sample = fixtures::oscillating_stretch(cfg.amplitude, cfg.word_len)?;
    let ys: Vec<BlockPoint> = cfg.ys.nodes()?.into_iter().map(|y| BlockPoint::scalars(&[y])).collect();
    let out = tukia::normalize_stretch(&sample, &ys, &cfg.x_probes)?;
    let closed = ys
        .iter()
        .zip(&out.mu)
        .map(|(y, m)| (m - fixtures::oscillating_stretch_mu(cfg.amplitude, y.blocks[0][0])).abs())
        .fold(0.0, f64::max);
    s.push(Invariant::at_most("normalized_stretch_matches_quotient", out.stretch_error, cfg.tolerance));
    s.push(Invariant::at_most("stretch_cocycle", out.cocycle_defect, cfg.tolerance));
    s.push(Invariant::at_most("stretch_measure_matches_closed_form", closed, cfg.tolerance));
    Ok(())
}

fn rigidity(cfg: &RigidityConfig, s: &mut Section, r: &mut SampleRng) -> Result<()> {
    let rotating = fixtures::rotating_fiber()?;
    let v = rotation_rigidity_witness(&rotating, cfg.k, cfg.radius, cfg.samples, r)?;
    let ok = matches!(v, RigidityVerdict::Witness { ratio, .. } if ratio > cfg.k);
    s.push(Invariant::flag("rotating_fiber_has_witness", ok).with_detail(&v));
    for &theta in &cfg.constant_angles {
        let g = fixtures::constant_rotation_fiber(theta)?;
        let v = rotation_rigidity_witness(&g, cfg.k, cfg.radius, cfg.samples, r)?;
        s.push(Invariant::flag(format!("constant_rotation_passes[{theta}]"), matches!(v, RigidityVerdict::Pass { .. })).with_detail(&v));
    }
    Ok(())
}

fn radial(cfg: &RadialConfig, s: &mut Section) -> Result<()> {
    let sample = fixtures::radial_sample(cfg.c, 2)?;
    let escape: Vec<Vec<Letter>> = (1..=cfg.steps).map(|i| vec![Letter { gen: 0, inv: false }; i]).collect();
    let probes: Vec<BlockPoint> = (0..cfg.probes)
        .map(|k| {
            let f = |m: f64| 2.0 * ((k as f64 * m) % 1.0) - 1.0;
            BlockPoint::new(vec![vec![f(0.618), f(0.414)], vec![f(0.732)]])
        })
        .collect();
    let rep = tukia::radial_conjugator(&sample, &escape, &DMatrix::identity(2, 2), &probes)?;
    let last = rep.steps.last().ok_or_else(|| Error::Empty("no radial steps".into()))?;
    s.push(Invariant::at_most("radial_sequence_cauchy", last.cauchy, cfg.cauchy_tolerance).with_detail(&rep.steps));
    Ok(())
}

fn conjugate(cfg: &ConjugateConfig, r: &mut SampleRng) -> Section {
    let mut s = Section::new("conjugate");
    if let Err(e) = pipeline(cfg, &mut s, r) {
        s.push(Invariant::error("pipeline", &e));
    }
    if let Err(e) = normalize(&cfg.normalize, &mut s) {
        s.push(Invariant::error("normalize_stretch", &e));
    }
    if let Err(e) = rigidity(&cfg.rigidity, &mut s, r) {
        s.push(Invariant::error("rotation_rigidity", &e));
    }
    if let Err(e) = radial(&cfg.radial, &mut s) {
        s.push(Invariant::error("radial_conjugator", &e));
    }
    s
}

// roots

fn root_case(case: &RootCase, cfg: &RootsConfig, s: &mut Section, r: &mut SampleRng) -> Result<()> {
    let cert = approx_lth_root(&case.generators, &case.gamma_p, case.l, cfg.probe_count)?;
    let c = &cert.checks;
    let tag = |n: &str| format!("{n}[{}]", case.name);
    s.push(Invariant::flag(tag("root_decomposition"), c.decomposition));
    s.push(Invariant::flag(tag("root_power"), c.power));
    s.push(Invariant::flag(tag("root_top_level_bound"), c.top_level_bound));
    s.push(Invariant::flag(tag("root_residual_identity"), c.residual_identity).with_detail(json!({
        "gamma_prime": cert.gamma_prime_label,
        "eta": cert.eta_label,
        "power": cert.power_label,
        "exponents": cert.exponents,
        "levels": cert.levels,
    })));
    let spec = case.gamma_p.spec();
    let pts: Vec<BlockPoint> = (0..cfg.sample_points).map(|_| uniform_point(spec, r, cfg.sample_box)).collect();
    let bound = displacement_bound(&cert.gamma_prime, &case.generators)?;
    let seen = sampled_displacement(&cert.gamma_prime, &pts);
    s.push(
        Invariant::flag(tag("displacement_bound_dominates"), seen <= bound.total + 1e-12)
            .with_value(bound.total - seen)
            .with_detail(json!({ "bound": bound, "sampled": seen })),
    );
    let eta = case.generators.iter().fold(AlmostTranslation::identity(spec), |acc, g| acc.compose(g).unwrap_or(acc));
    let est = estimation_check(&case.gamma_p, &eta, case.l, &pts[..pts.len().min(2000)])?;
    s.push(Invariant::flag(tag("sup_estimates"), est.pass).with_detail(&est));
    Ok(())
}

fn roots(cfg: &RootsConfig, r: &mut SampleRng) -> Section {
    let mut s = Section::new("roots");
    for case in &cfg.cases {
        if let Err(e) = root_case(case, cfg, &mut s, r) {
            s.push(Invariant::error(format!("root[{}]", case.name), &e));
        }
    }
    for k in &cfg.kernels {
        let g = &k.element;
        let name = format!("epsilon_dominates_oscillation[{}]", k.name);
        let pts: Vec<BlockPoint> = (0..cfg.sample_points).map(|_| uniform_point(g.spec(), r, cfg.sample_box)).collect();
        s.check(
            &name,
            epsilon_bounds(g).map(|eps| {
                let margins: Vec<f64> = (0..eps.len()).map(|i| eps[i] - sampled_oscillation(g, i, &pts)).collect();
                let worst = margins.iter().copied().fold(f64::INFINITY, f64::min);
                Invariant::flag(name.clone(), worst >= -1e-12).with_value(worst).with_detail(json!({ "epsilon": eps }))
            }),
        );
    }
    s.check(
        "shuffle_identities",
        (|| {
            let reps = vec![
                shuffle_check(
                    &fixtures::conjugated_translation(0.5, 1.5)?,
                    &fixtures::conjugated_translation(2.0, 0.0)?,
                    &fixtures::conjugated_translation(0.0, 0.0)?,
                    1,
                    cfg.probe_count,
                )?,
                shuffle_check(
                    &fixtures::conjugated_translation(-1.0, 0.5)?,
                    &fixtures::conjugated_translation(1.5, 0.0)?,
                    &fixtures::conjugated_translation(0.0, 0.5)?,
                    1,
                    cfg.probe_count,
                )?,
            ];
            let pass = reps.iter().all(|r| r.above && r.at_level && r.cancellation != Some(false));
            Ok(Invariant::flag("shuffle_identities", pass).with_detail(&reps))
        })(),
    );
    if let Some(case) = cfg.cases.iter().max_by_key(|c| c.gamma_p.spec().rank()) {
        let x0 = case.gamma_p.spec().zero();
        match orbit_growth(&case.generators, &x0, &cfg.growth_ks, cfg.growth_max_len) {
            Ok(c) => {
                let monotone = c.windows(2).all(|w| w[0].count <= w[1].count);
                s.push(Invariant::flag("orbit_growth_monotone", monotone).with_detail(&c));
                s.csv("orbit_growth", orbit_growth_csv(&c));
            }
            Err(e) => s.push(Invariant::error("orbit_growth_monotone", &e)),
        }
    }
    s
}

//! Run configuration for the command-line driver.
//!
//! Every section has defaults, so `{}` is a valid config. Unknown keys are rejected
//! and parse errors carry the JSON path of the offending value.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::conformal::CircumcenterOpts;
use crate::error::{Error, Result};
use crate::fixtures;
use crate::mapalg::expr::{constant, coord, periodic_pwl, project, sin, sum};
use crate::mapalg::{ASimMap, AlmostTranslation, BlockMap, BoundaryMap, Generator, SimMap};
use crate::quasimetric::ChainGrid;
use crate::solvgroup::SolvSpec;
use crate::tukia::{LineGrid, MeasureGrid};
use crate::{BlockPoint, SpectralData};

#[derive(Clone, Debug, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Overridden by `--seed`.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub metric: MetricConfig,
    #[serde(default)]
    pub geodesic: GeodesicConfig,
    #[serde(default)]
    pub classify: ClassifyConfig,
    #[serde(default)]
    pub conformal: ConformalConfig,
    #[serde(default)]
    pub conjugate: ConjugateConfig,
    #[serde(default)]
    pub roots: RootsConfig,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| Error::Config {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    fn validate(&self) -> Result<()> {
        let bad = |path: &str, message: &str| Err(Error::Config { path: path.into(), message: message.into() });
        if self.metric.triples == 0 {
            return bad("metric.triples", "must be positive");
        }
        if self.geodesic.pairs == 0 {
            return bad("geodesic.pairs", "must be positive");
        }
        if self.conformal.set_size == 0 {
            return bad("conformal.set_size", "must be positive");
        }
        if self.conjugate.probes == 0 {
            return bad("conjugate.probes", "must be positive");
        }
        for (i, c) in self.roots.cases.iter().enumerate() {
            if c.l == 0 {
                return bad(&format!("roots.cases[{i}].l"), "root order must be positive");
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct NamedSpec {
    pub name: String,
    pub spec: SpectralData,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct MetricConfig {
    pub specs: Vec<NamedSpec>,
    pub triples: usize,
    /// Points are drawn at scales `10^-a .. 10^b`.
    pub scale_decades: (f64, f64),
    pub tolerance: f64,
    pub chain: ChainConfig,
}

impl Default for MetricConfig {
    fn default() -> Self {
        MetricConfig {
            specs: fixtures::metric_specs().into_iter().map(|(n, s)| NamedSpec { name: n.into(), spec: s }).collect(),
            triples: 10_000,
            scale_decades: (3.0, 3.0),
            tolerance: 1e-12,
            chain: ChainConfig::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct ChainConfig {
    pub spec: SpectralData,
    /// Gap in the first coordinate.
    pub gap: f64,
    /// Exponent above `α_1`; the functional should vanish.
    pub beta_above: f64,
    pub grid_above: ChainGrid,
    pub zero_tolerance: f64,
    /// Exponent equal to `α_1`; the functional should equal the gap.
    pub beta_equal: f64,
    pub grid_equal: ChainGrid,
    pub gap_tolerance: f64,
}

impl Default for ChainConfig {
    fn default() -> Self {
        ChainConfig {
            spec: SpectralData::simple(&[2.0, 3.0]).expect("valid"),
            gap: 1.0,
            beta_above: 3.0,
            grid_above: ChainGrid { resolution: 32768, max_depth: 12, min_decrement: 0.0 },
            zero_tolerance: 1e-4,
            beta_equal: 2.0,
            grid_equal: ChainGrid { resolution: 4, max_depth: 6, min_decrement: 0.0 },
            gap_tolerance: 1e-6,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct GeodesicConfig {
    pub spec: SolvSpec,
    pub pairs: usize,
    pub scale_decades: (f64, f64),
    /// Heights `a, b` for the composition law.
    pub heights: (f64, f64),
    pub tolerance: f64,
    pub bisect_tolerance: f64,
    pub associativity_tolerance: f64,
    /// Parameters of the dumped vertical geodesics.
    pub geodesic_ts: Vec<f64>,
}

impl Default for GeodesicConfig {
    fn default() -> Self {
        GeodesicConfig {
            spec: SolvSpec::new(SpectralData::simple(&[2.0, 3.0]).expect("valid"), SpectralData::simple(&[1.0]).expect("valid"))
                .expect("valid"),
            pairs: 10_000,
            scale_decades: (3.0, 3.0),
            heights: (0.3, -1.1),
            tolerance: 1e-12,
            bisect_tolerance: 1e-9,
            associativity_tolerance: 1e-10,
            geodesic_ts: (0..=20).map(|k| k as f64 * 0.25).collect(),
        }
    }
}

/// One map to classify, with the class it should land in.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ClassifyCase {
    pub name: String,
    pub map: BoundaryMap,
    #[serde(default)]
    pub expect: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct ClassifyConfig {
    pub spec: SpectralData,
    pub cases: Vec<ClassifyCase>,
    pub pairs: usize,
    pub probes: usize,
    pub radius: f64,
    pub reciprocity: ReciprocityConfig,
    pub homomorphisms: HomConfig,
}

fn tent_map(spec: &SpectralData) -> BlockMap {
    let first = sum(vec![coord(0, 0), periodic_pwl(vec![0.0, 1.0, 2.0], vec![0.0, 0.5, 0.0], coord(0, 0))]);
    BlockMap::new(spec.clone(), vec![first, project(1)]).expect("triangular")
}

fn default_cases(spec: &SpectralData) -> Vec<ClassifyCase> {
    let sim = SimMap::new(
        spec.clone(),
        2.0,
        vec![DMatrix::from_element(1, 1, -1.0), DMatrix::identity(1, 1)],
        vec![DVector::from_element(1, 0.3), DVector::from_element(1, -1.0)],
    )
    .expect("similarity");
    let shift = AlmostTranslation::new(spec.clone(), vec![sin(coord(1, 0)), constant(vec![0.0])], 2.0).expect("bounded");
    let asim = ASimMap::new(SimMap::dilation(spec, 2.0).expect("positive"), shift).expect("same spec");
    let qsim = SimMap::dilation(spec, 4.0).expect("positive").to_block_map().compose(&tent_map(spec)).expect("same spec");
    let case = |name: &str, map, expect: &str| ClassifyCase { name: name.into(), map, expect: Some(expect.into()) };
    vec![
        case("similarity", BoundaryMap::Sim { map: sim }, "sim"),
        case("almost_similarity", BoundaryMap::Asim { map: asim }, "asim"),
        case("tent", BoundaryMap::Block { map: tent_map(spec) }, "bilip"),
        case("dilated_tent", BoundaryMap::Block { map: qsim }, "qsim"),
    ]
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        let spec = SpectralData::simple(&[1.0, 2.0]).expect("valid");
        ClassifyConfig {
            cases: default_cases(&spec),
            spec,
            pairs: 4000,
            probes: 40,
            radius: 4.0,
            reciprocity: ReciprocityConfig::default(),
            homomorphisms: HomConfig::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct ReciprocityConfig {
    pub spec: SolvSpec,
    /// Heights of the suspended isometries that must pass.
    pub heights: Vec<f64>,
    /// `(t_l, t_u)` of a pair that must fail.
    pub mismatch: (f64, f64),
}

impl Default for ReciprocityConfig {
    fn default() -> Self {
        ReciprocityConfig {
            spec: SolvSpec::new(SpectralData::simple(&[1.0, 2.0]).expect("valid"), SpectralData::simple(&[0.5]).expect("valid"))
                .expect("valid"),
            heights: vec![-1.3, 0.0, 0.8, 2.0],
            mismatch: (2.0, 1.0 / 3.0),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct HomConfig {
    pub composites: usize,
    pub tolerance: f64,
}

impl Default for HomConfig {
    fn default() -> Self {
        HomConfig { composites: 1000, tolerance: 1e-9 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConformalConfig {
    pub dim: usize,
    pub triples: usize,
    pub metric_tolerance: f64,
    pub sets: usize,
    pub set_size: usize,
    pub equivariance_tolerance: f64,
    pub two_point_tolerance: f64,
    pub circumcenter: CircumcenterOpts,
    pub elliptic: EllipticConfig,
}

impl Default for ConformalConfig {
    fn default() -> Self {
        ConformalConfig {
            dim: 3,
            triples: 1000,
            metric_tolerance: 1e-10,
            sets: 100,
            set_size: 5,
            equivariance_tolerance: 1e-6,
            two_point_tolerance: 1e-9,
            circumcenter: CircumcenterOpts::default(),
            elliptic: EllipticConfig::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct EllipticConfig {
    pub theta: f64,
    pub word_len: usize,
    pub grid: Vec<BlockPoint>,
    pub tolerance: f64,
}

impl Default for EllipticConfig {
    fn default() -> Self {
        EllipticConfig {
            theta: 0.9,
            word_len: 4,
            grid: (0..8).map(|k| BlockPoint::new(vec![vec![0.3 * k as f64, -0.2 + 0.1 * k as f64], vec![0.5 * k as f64]])).collect(),
            tolerance: 1e-6,
        }
    }
}

/// Where the conjugation pipeline gets its generators.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SampleSource {
    /// The bundled piecewise-derivative group, compared against its known conjugator.
    Piecewise1d,
    Explicit { spec: SpectralData, generators: Vec<Generator>, uniform_k: f64 },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConjugateConfig {
    pub sample: SampleSource,
    pub word_len: usize,
    pub grid: MeasureGrid,
    /// Probes for the conjugated derivatives lie in `[-probe_box, probe_box]`.
    pub probe_box: f64,
    pub probes: usize,
    pub tolerance: f64,
    pub normalize: NormalizeConfig,
    pub rigidity: RigidityConfig,
    pub radial: RadialConfig,
}

impl Default for ConjugateConfig {
    fn default() -> Self {
        ConjugateConfig {
            sample: SampleSource::Piecewise1d,
            word_len: 12,
            grid: MeasureGrid { x: LineGrid { lo: -30.0, hi: 30.0, step: 1e-3 }, ys: vec![], offset: 1e-3 },
            probe_box: 10.0,
            probes: 60,
            tolerance: 1e-3,
            normalize: NormalizeConfig::default(),
            rigidity: RigidityConfig::default(),
            radial: RadialConfig::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct NormalizeConfig {
    pub amplitude: f64,
    pub word_len: usize,
    pub ys: LineGrid,
    pub x_probes: Vec<Vec<f64>>,
    pub tolerance: f64,
}

impl Default for NormalizeConfig {
    fn default() -> Self {
        NormalizeConfig {
            amplitude: 0.3,
            word_len: 4,
            ys: LineGrid { lo: -2.0, hi: 2.0, step: 1.0 / 16.0 },
            x_probes: vec![vec![0.0], vec![1.3], vec![-2.1]],
            tolerance: 1e-6,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct RigidityConfig {
    pub k: f64,
    pub radius: f64,
    pub samples: usize,
    /// Angles of the constant-rotation fixtures, which must pass.
    pub constant_angles: Vec<f64>,
}

impl Default for RigidityConfig {
    fn default() -> Self {
        RigidityConfig { k: 2.0, radius: 5.0, samples: 30, constant_angles: vec![0.0, 0.7, 2.0, -2.5] }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct RadialConfig {
    pub c: f64,
    pub steps: usize,
    pub probes: usize,
    pub cauchy_tolerance: f64,
}

impl Default for RadialConfig {
    fn default() -> Self {
        RadialConfig { c: 0.8, steps: 14, probes: 10, cauchy_tolerance: 1e-4 }
    }
}

/// Input of the root algorithm.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RootCase {
    pub name: String,
    pub generators: Vec<AlmostTranslation>,
    pub gamma_p: AlmostTranslation,
    pub l: u32,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct NamedKernel {
    pub name: String,
    pub element: AlmostTranslation,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct RootsConfig {
    pub cases: Vec<RootCase>,
    pub probe_count: usize,
    /// Kernel elements whose ε-bounds are checked.
    pub kernels: Vec<NamedKernel>,
    pub sample_points: usize,
    pub sample_box: f64,
    pub growth_ks: Vec<f64>,
    pub growth_max_len: usize,
}

impl Default for RootsConfig {
    fn default() -> Self {
        let cases = [fixtures::root_one_level(), fixtures::root_two_level()]
            .into_iter()
            .map(|f| {
                let f = f.expect("fixture");
                RootCase { name: f.name.into(), generators: f.generators, gamma_p: f.gamma_p, l: f.l }
            })
            .collect();
        let kernel = |name: &str, element: crate::Result<AlmostTranslation>| NamedKernel { name: name.into(), element: element.expect("fixture") };
        RootsConfig {
            cases,
            probe_count: 8,
            kernels: vec![
                kernel("sine", fixtures::sine_kernel()),
                kernel("lattice_half", fixtures::conjugated_translation(0.5, 0.5)),
                kernel("lattice_vertical", fixtures::conjugated_translation(0.0, 1.0)),
                kernel("lattice_mixed", fixtures::conjugated_translation(1.5, -2.5)),
            ],
            sample_points: 10_000,
            sample_box: 10.0,
            growth_ks: vec![0.5, 1.0, 2.0, 3.0, 4.0],
            growth_max_len: 8,
        }
    }
}

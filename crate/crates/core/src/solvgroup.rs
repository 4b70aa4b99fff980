//! The solvable group `G_{M_l, M_u}`, its horospherical level distances, vertical
//! geodesics and the correspondence between boundary pairs and points.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::mapalg::{check_triangularity, BlockMap, BoundaryMap, BoundaryPair, SimMap};
use crate::quasimetric::{block_gaps, distance};
use crate::sampling::SampleRng;
use crate::space::{BlockPoint, PointMap, SpectralData};

/// Lower and upper spectral data; an empty upper part gives the pure case.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolvSpec {
    pub lower: SpectralData,
    pub upper: SpectralData,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSolv {
    lower: SpectralData,
    #[serde(default = "SpectralData::empty")]
    upper: SpectralData,
}

impl<'de> Deserialize<'de> for SolvSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = RawSolv::deserialize(d)?;
        SolvSpec::new(r.lower, r.upper).map_err(serde::de::Error::custom)
    }
}

impl SolvSpec {
    pub fn new(lower: SpectralData, upper: SpectralData) -> Result<Self> {
        if lower.is_empty() && upper.is_empty() {
            return Err(Error::InvalidSpectral("both lower and upper are empty".into()));
        }
        Ok(SolvSpec { lower, upper })
    }

    pub fn pure(lower: SpectralData) -> Result<Self> {
        SolvSpec::new(lower, SpectralData::empty())
    }

    pub fn is_pure(&self) -> bool {
        self.upper.is_empty()
    }

    pub fn identity(&self) -> SolvPoint {
        SolvPoint { height: 0.0, x: self.lower.zero(), z: self.upper.zero() }
    }

    pub fn check(&self, p: &SolvPoint) -> Result<()> {
        if !p.height.is_finite() {
            return domain("height must be finite");
        }
        self.lower.check(&p.x)?;
        self.upper.check(&p.z)
    }
}

/// `(t, x, z)`: height, lower coordinates and upper coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolvPoint {
    pub height: f64,
    pub x: BlockPoint,
    pub z: BlockPoint,
}

fn scaled(spec: &SpectralData, t: f64, sign: f64, p: &BlockPoint) -> BlockPoint {
    BlockPoint::new(
        p.blocks
            .iter()
            .enumerate()
            .map(|(i, b)| {
                let s = (sign * t * spec.alpha(i)).exp();
                b.iter().map(|v| s * v).collect()
            })
            .collect(),
    )
}

/// `(t, x, z)(s, y, w) = (t + s, x + e^{tα} y, z + e^{-tβ} w)`.
pub fn multiply(spec: &SolvSpec, p: &SolvPoint, q: &SolvPoint) -> Result<SolvPoint> {
    spec.check(p)?;
    spec.check(q)?;
    Ok(SolvPoint {
        height: p.height + q.height,
        x: p.x.add(&scaled(&spec.lower, p.height, 1.0, &q.x)),
        z: p.z.add(&scaled(&spec.upper, p.height, -1.0, &q.z)),
    })
}

pub fn inverse(spec: &SolvSpec, p: &SolvPoint) -> Result<SolvPoint> {
    spec.check(p)?;
    let neg = |b: BlockPoint| BlockPoint::new(b.blocks.into_iter().map(|v| v.into_iter().map(|x| -x).collect()).collect());
    Ok(SolvPoint {
        height: -p.height,
        x: neg(scaled(&spec.lower, p.height, -1.0, &p.x)),
        z: neg(scaled(&spec.upper, p.height, 1.0, &p.z)),
    })
}

/// Distance on the lower horosphere at height `t`: `max_i e^{-tα_i} |x_i - y_i|`.
pub fn level_distance_lower(lower: &SpectralData, t: f64, x: &BlockPoint, y: &BlockPoint) -> Result<f64> {
    lower.check(x)?;
    lower.check(y)?;
    if !t.is_finite() {
        return domain("height must be finite");
    }
    Ok(block_gaps(x, y)
        .iter()
        .enumerate()
        .map(|(i, g)| (-t * lower.alpha(i)).exp() * g)
        .fold(0.0, f64::max))
}

/// Level distance between the spatial parts of two points at height `t`:
/// `max(e^{-tα_i} |Δx_i|, e^{tβ_j} |Δz_j|)`.
pub fn level_distance(spec: &SolvSpec, t: f64, p: &SolvPoint, q: &SolvPoint) -> Result<f64> {
    let lo = level_distance_lower(&spec.lower, t, &p.x, &q.x)?;
    spec.upper.check(&p.z)?;
    spec.upper.check(&q.z)?;
    let up = block_gaps(&p.z, &q.z)
        .iter()
        .enumerate()
        .map(|(j, g)| (t * spec.upper.alpha(j)).exp() * g)
        .fold(0.0, f64::max);
    Ok(lo.max(up))
}

/// The point of the vertical geodesic over `p` at height `log D_M(p, q)`.
pub fn pair_to_point(spec: &SolvSpec, p: &BlockPoint, q: &BlockPoint) -> Result<SolvPoint> {
    let d = distance(&spec.lower, p, q)?;
    if d == 0.0 {
        return domain("pair of equal boundary points");
    }
    Ok(SolvPoint { height: d.ln(), x: p.clone(), z: spec.upper.zero() })
}

/// Height where the lower level distance between `p` and `q` equals one, by bisection
/// on `[log D - 1, log D + 1]`.
pub fn pair_to_height_bisect(spec: &SolvSpec, p: &BlockPoint, q: &BlockPoint) -> Result<f64> {
    let d = distance(&spec.lower, p, q)?;
    if d == 0.0 {
        return domain("pair of equal boundary points");
    }
    let (mut lo, mut hi) = (d.ln() - 1.0, d.ln() + 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        // level distance decreases in t
        if level_distance_lower(&spec.lower, mid, p, q)? > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * (1.0 + mid.abs()) {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `s ↦ (±s, x, z)`: upward geodesics climb in height.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerticalGeodesic {
    pub anchor: SolvPoint,
    pub upward: bool,
}

impl VerticalGeodesic {
    pub fn at(&self, s: f64) -> SolvPoint {
        let sign = if self.upward { 1.0 } else { -1.0 };
        SolvPoint { height: self.anchor.height + sign * s, x: self.anchor.x.clone(), z: self.anchor.z.clone() }
    }

    /// CSV rows `t,coords...`.
    pub fn csv(&self, params: &[f64]) -> String {
        let mut out = String::from("t");
        let n = self.anchor.x.flat().len() + self.anchor.z.flat().len();
        for k in 0..n {
            out.push_str(&format!(",c{k}"));
        }
        out.push('\n');
        for &s in params {
            let p = self.at(s);
            let mut row = format!("{}", p.height);
            for v in p.x.flat().into_iter().chain(p.z.flat()) {
                row.push_str(&format!(",{v}"));
            }
            out.push_str(&row);
            out.push('\n');
        }
        out
    }
}

/// Boundary map on the lower boundary of the height isometry `(t, x, z) ↦ (a, 0, 0)(t, x, z)`.
pub fn boundary_of_height_isometry(spec: &SolvSpec, a: f64) -> Result<SimMap> {
    SimMap::dilation(&spec.lower, a.exp())
}

/// Both boundary maps of the height isometry by `a`.
pub fn height_isometry_pair(spec: &SolvSpec, a: f64) -> Result<BoundaryPair> {
    Ok(BoundaryPair {
        lower: BoundaryMap::Sim { map: SimMap::dilation(&spec.lower, a.exp())? },
        upper: BoundaryMap::Sim { map: SimMap::dilation(&spec.upper, (-a).exp())? },
    })
}

/// `(t, x, z) ↦ (t + a, G(x), z)`.
pub struct Suspension<'a> {
    spec: SolvSpec,
    map: &'a BlockMap,
    shift: f64,
}

impl<'a> Suspension<'a> {
    pub fn apply(&self, p: &SolvPoint) -> SolvPoint {
        SolvPoint { height: p.height + self.shift, x: self.map.apply(&p.x), z: p.z.clone() }
    }

    /// Smallest and largest `d_{t+a}(Gx, Gy) / d_t(x, y)` over the samples.
    pub fn level_distortion(&self, samples: &[(f64, BlockPoint, BlockPoint)]) -> Result<(f64, f64)> {
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        for (t, x, y) in samples {
            let d0 = level_distance_lower(&self.spec.lower, *t, x, y)?;
            if d0 == 0.0 {
                continue;
            }
            let d1 = level_distance_lower(&self.spec.lower, t + self.shift, &self.map.apply(x), &self.map.apply(y))?;
            lo = lo.min(d1 / d0);
            hi = hi.max(d1 / d0);
        }
        if hi == 0.0 {
            return Err(Error::Empty("no nondegenerate samples".into()));
        }
        Ok((lo, hi))
    }
}

/// Suspend a boundary map to the solvable group, after checking it is triangular.
pub fn suspend_boundary_map<'a>(
    spec: &SolvSpec,
    g: &'a BlockMap,
    a: f64,
    probes: &[BlockPoint],
    rng: &mut SampleRng,
) -> Result<Suspension<'a>> {
    if g.spec() != &spec.lower {
        return Err(Error::DimensionMismatch { expected: format!("{:?}", spec.lower), got: format!("{:?}", g.spec()) });
    }
    let tri = check_triangularity(&spec.lower, g, probes, rng)?;
    if !tri.pass {
        let (i, j) = tri.worst_pair.unwrap_or((0, 0));
        return Err(Error::NotTriangular { component: i, block: j });
    }
    Ok(Suspension { spec: spec.clone(), map: g, shift: a })
}

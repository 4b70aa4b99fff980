//! Similarities, almost translations and almost similarities in normal form.

use nalgebra::{DMatrix, DVector};
use num::BigRational;
use serde::{Deserialize, Serialize};

use super::blockmap::{translate_expr, BlockMap};
use super::expr::{constant, linear, project, scale, sum, Certificate, FuncExpr};
use crate::error::{Error, Result};
use crate::space::{BlockPoint, PointMap, SpectralData};

const ORTHO_TOL: f64 = 1e-12;

fn ortho_defect(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    (a.transpose() * a - DMatrix::identity(n, n)).abs().max()
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

fn from_rows(r: &[Vec<f64>]) -> DMatrix<f64> {
    let n = r.len();
    let m = if n == 0 { 0 } else { r[0].len() };
    DMatrix::from_fn(n, m, |i, j| r[i][j])
}

/// `x ↦ δ_t(A_1(x_1 + B_1), ..., A_r(x_r + B_r))`.
#[derive(Clone, Debug, PartialEq)]
pub struct SimMap {
    spec: SpectralData,
    stretch: f64,
    rotations: Vec<DMatrix<f64>>,
    translations: Vec<DVector<f64>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSim {
    spec: SpectralData,
    stretch: f64,
    rotations: Vec<Vec<Vec<f64>>>,
    translations: Vec<Vec<f64>>,
}

impl Serialize for SimMap {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        RawSim {
            spec: self.spec.clone(),
            stretch: self.stretch,
            rotations: self.rotations.iter().map(rows).collect(),
            translations: self.translations.iter().map(|v| v.iter().copied().collect()).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for SimMap {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = RawSim::deserialize(d)?;
        SimMap::new(
            r.spec,
            r.stretch,
            r.rotations.iter().map(|m| from_rows(m)).collect(),
            r.translations.into_iter().map(DVector::from_vec).collect(),
        )
        .map_err(serde::de::Error::custom)
    }
}

impl SimMap {
    pub fn new(
        spec: SpectralData,
        stretch: f64,
        rotations: Vec<DMatrix<f64>>,
        translations: Vec<DVector<f64>>,
    ) -> Result<Self> {
        if !(stretch > 0.0) || !stretch.is_finite() {
            return Err(Error::Domain(format!("stretch must be positive, got {stretch}")));
        }
        if rotations.len() != spec.rank() || translations.len() != spec.rank() {
            return Err(Error::DimensionMismatch {
                expected: format!("{} blocks", spec.rank()),
                got: format!("{} rotations, {} translations", rotations.len(), translations.len()),
            });
        }
        for (i, (a, b)) in rotations.iter().zip(&translations).enumerate() {
            let n = spec.mults()[i];
            if a.nrows() != n || a.ncols() != n || b.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: format!("block {i} of size {n}"),
                    got: format!("{}x{} rotation, {} translation", a.nrows(), a.ncols(), b.len()),
                });
            }
            let d = ortho_defect(a);
            if d > ORTHO_TOL {
                return Err(Error::NotOrthogonal(d));
            }
        }
        Ok(SimMap { spec, stretch, rotations, translations })
    }

    pub fn dilation(spec: &SpectralData, t: f64) -> Result<Self> {
        SimMap::new(
            spec.clone(),
            t,
            spec.mults().iter().map(|&n| DMatrix::identity(n, n)).collect(),
            spec.mults().iter().map(|&n| DVector::zeros(n)).collect(),
        )
    }

    pub fn translation(spec: &SpectralData, b: &BlockPoint) -> Result<Self> {
        spec.check(b)?;
        SimMap::new(
            spec.clone(),
            1.0,
            spec.mults().iter().map(|&n| DMatrix::identity(n, n)).collect(),
            b.blocks.iter().map(|v| DVector::from_vec(v.clone())).collect(),
        )
    }

    pub fn identity(spec: &SpectralData) -> Self {
        SimMap::dilation(spec, 1.0).expect("identity is a similarity")
    }

    pub fn spec(&self) -> &SpectralData {
        &self.spec
    }

    pub fn stretch(&self) -> f64 {
        self.stretch
    }

    pub fn rotations(&self) -> &[DMatrix<f64>] {
        &self.rotations
    }

    pub fn translations(&self) -> &[DVector<f64>] {
        &self.translations
    }

    /// `self ∘ g`, kept in normal form.
    pub fn compose(&self, g: &SimMap) -> Result<SimMap> {
        if self.spec != g.spec {
            return Err(Error::DimensionMismatch { expected: format!("{:?}", self.spec), got: format!("{:?}", g.spec) });
        }
        let mut rotations = Vec::with_capacity(self.spec.rank());
        let mut translations = Vec::with_capacity(self.spec.rank());
        for i in 0..self.spec.rank() {
            let a = self.spec.alpha(i);
            rotations.push(&self.rotations[i] * &g.rotations[i]);
            let back = g.rotations[i].transpose() * &self.translations[i] * g.stretch.powf(-a);
            translations.push(&g.translations[i] + back);
        }
        Ok(SimMap { spec: self.spec.clone(), stretch: self.stretch * g.stretch, rotations, translations })
    }

    pub fn inverse(&self) -> SimMap {
        let mut rotations = Vec::with_capacity(self.spec.rank());
        let mut translations = Vec::with_capacity(self.spec.rank());
        for i in 0..self.spec.rank() {
            let a = self.spec.alpha(i);
            rotations.push(self.rotations[i].transpose());
            translations.push(-(&self.rotations[i] * &self.translations[i]) * self.stretch.powf(a));
        }
        SimMap { spec: self.spec.clone(), stretch: 1.0 / self.stretch, rotations, translations }
    }

    /// Block `i` of the map as an expression.
    pub(crate) fn block_expr(&self, i: usize) -> FuncExpr {
        let s = self.stretch.powf(self.spec.alpha(i));
        let inner = sum(vec![project(i), constant(self.translations[i].iter().copied().collect())]).simplify();
        scale(s, linear(rows(&self.rotations[i]), inner))
    }

    pub fn to_block_map(&self) -> BlockMap {
        BlockMap::new(self.spec.clone(), (0..self.spec.rank()).map(|i| self.block_expr(i)).collect())
            .expect("similarity components are diagonal")
    }
}

impl PointMap for SimMap {
    fn apply(&self, p: &BlockPoint) -> BlockPoint {
        BlockPoint::new(
            p.blocks
                .iter()
                .enumerate()
                .map(|(i, b)| {
                    let s = self.stretch.powf(self.spec.alpha(i));
                    let v = DVector::from_column_slice(b) + &self.translations[i];
                    (&self.rotations[i] * v * s).iter().copied().collect()
                })
                .collect(),
        )
    }
}

/// `x_i ↦ x_i + B_i(x_{i+1}, ..., x_r)` with `B_r` constant.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AlmostTranslation {
    spec: SpectralData,
    shifts: Vec<FuncExpr>,
    /// Bilipschitz constant certificate.
    bilip: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAlmost {
    spec: SpectralData,
    shifts: Vec<FuncExpr>,
    bilip: f64,
}

impl<'de> Deserialize<'de> for AlmostTranslation {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = RawAlmost::deserialize(d)?;
        AlmostTranslation::new(r.spec, r.shifts, r.bilip).map_err(serde::de::Error::custom)
    }
}

impl AlmostTranslation {
    pub fn new(spec: SpectralData, shifts: Vec<FuncExpr>, bilip: f64) -> Result<Self> {
        if shifts.len() != spec.rank() {
            return Err(Error::DimensionMismatch {
                expected: format!("{} shifts", spec.rank()),
                got: shifts.len().to_string(),
            });
        }
        if !(bilip >= 1.0) || !bilip.is_finite() {
            return Err(Error::MissingCertificate(format!("bilipschitz constant {bilip}")));
        }
        for (i, b) in shifts.iter().enumerate() {
            let d = b.dim(spec.mults())?;
            if d != spec.mults()[i] {
                return Err(Error::DimensionMismatch {
                    expected: format!("shift {i} of dimension {}", spec.mults()[i]),
                    got: d.to_string(),
                });
            }
            if let Some(&j) = b.depends_on().iter().find(|&&j| j <= i) {
                return Err(Error::NotTriangular { component: i, block: j });
            }
        }
        Ok(AlmostTranslation { spec, shifts: shifts.into_iter().map(|s| s.simplify()).collect(), bilip })
    }

    pub fn identity(spec: &SpectralData) -> Self {
        AlmostTranslation {
            spec: spec.clone(),
            shifts: spec.mults().iter().map(|&n| constant(vec![0.0; n])).collect(),
            bilip: 1.0,
        }
    }

    /// Pure translation by `b`.
    pub fn translation(spec: &SpectralData, b: &BlockPoint) -> Result<Self> {
        spec.check(b)?;
        AlmostTranslation::new(spec.clone(), b.blocks.iter().map(|v| constant(v.clone())).collect(), 1.0)
    }

    pub fn spec(&self) -> &SpectralData {
        &self.spec
    }

    pub fn shifts(&self) -> &[FuncExpr] {
        &self.shifts
    }

    pub fn bilip(&self) -> f64 {
        self.bilip
    }

    pub fn with_bilip(mut self, k: f64) -> Self {
        self.bilip = k;
        self
    }

    pub fn shift_certificate(&self, i: usize) -> Certificate {
        self.shifts[i].certificate(self.spec.mults())
    }

    /// Certified `sup |B_i|`; errors when the certificate is infinite.
    pub fn shift_sup(&self, i: usize) -> Result<f64> {
        let s = self.shift_certificate(i).sup;
        if s.is_finite() {
            Ok(s)
        } else {
            Err(Error::MissingCertificate(format!("sup bound of B_{}", i + 1)))
        }
    }

    /// `B_i` evaluated at a point (blocks `<= i` are ignored).
    pub fn shift_at(&self, i: usize, p: &BlockPoint) -> Vec<f64> {
        self.shifts[i].eval(p)
    }

    fn block_exprs(&self) -> Vec<FuncExpr> {
        self.shifts.iter().enumerate().map(|(i, b)| translate_expr(i, b.clone())).collect()
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &AlmostTranslation) -> Result<AlmostTranslation> {
        if self.spec != inner.spec {
            return Err(Error::DimensionMismatch { expected: format!("{:?}", self.spec), got: format!("{:?}", inner.spec) });
        }
        let xs = inner.block_exprs();
        let shifts = self
            .shifts
            .iter()
            .zip(&inner.shifts)
            .map(|(outer, b)| sum(vec![b.clone(), outer.substitute(&xs)]).simplify())
            .collect();
        Ok(AlmostTranslation { spec: self.spec.clone(), shifts, bilip: self.bilip * inner.bilip })
    }

    /// Inverse, solved from the last block upward.
    pub fn inverse(&self) -> AlmostTranslation {
        let r = self.spec.rank();
        let mut xs: Vec<FuncExpr> = (0..r).map(project).collect();
        let mut shifts = vec![FuncExpr::Const { value: vec![] }; r];
        for i in (0..r).rev() {
            let b = scale(-1.0, self.shifts[i].substitute(&xs)).simplify();
            xs[i] = translate_expr(i, b.clone());
            shifts[i] = b;
        }
        AlmostTranslation { spec: self.spec.clone(), shifts, bilip: self.bilip }
    }

    pub fn power(&self, n: i64) -> AlmostTranslation {
        let base = if n < 0 { self.inverse() } else { self.clone() };
        let mut acc = AlmostTranslation::identity(&self.spec);
        for _ in 0..n.unsigned_abs() {
            acc = acc.compose(&base).expect("same spectral data");
        }
        acc
    }

    /// `s ∘ self ∘ s^{-1}`, again an almost translation.
    pub fn conjugate(&self, s: &SimMap) -> AlmostTranslation {
        let inv = s.inverse();
        let ys: Vec<FuncExpr> = (0..self.spec.rank()).map(|j| inv.block_expr(j)).collect();
        let shifts = self
            .shifts
            .iter()
            .enumerate()
            .map(|(i, b)| {
                let f = s.stretch().powf(self.spec.alpha(i));
                scale(f, linear(rows(&s.rotations()[i]), b.substitute(&ys))).simplify()
            })
            .collect();
        AlmostTranslation { spec: self.spec.clone(), shifts, bilip: self.bilip }
    }

    pub fn to_block_map(&self) -> BlockMap {
        BlockMap::new(self.spec.clone(), self.block_exprs()).expect("almost translations are triangular")
    }

    /// Exact image of a rational point, when every shift is rational-valued.
    pub fn apply_exact(&self, p: &[Vec<BigRational>]) -> Option<Vec<Vec<BigRational>>> {
        let mut out = Vec::with_capacity(p.len());
        for (i, b) in self.shifts.iter().enumerate() {
            let s = b.eval_exact(p)?;
            out.push(p[i].iter().zip(s).map(|(x, y)| x + y).collect());
        }
        Some(out)
    }
}

impl PointMap for AlmostTranslation {
    fn apply(&self, p: &BlockPoint) -> BlockPoint {
        BlockPoint::new(
            self.shifts
                .iter()
                .enumerate()
                .map(|(i, b)| p.blocks[i].iter().zip(b.eval(p)).map(|(x, y)| x + y).collect())
                .collect(),
        )
    }
}

/// `sim ∘ almost`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ASimMap {
    pub sim: SimMap,
    pub almost: AlmostTranslation,
}

impl ASimMap {
    pub fn new(sim: SimMap, almost: AlmostTranslation) -> Result<Self> {
        if sim.spec() != almost.spec() {
            return Err(Error::DimensionMismatch {
                expected: format!("{:?}", sim.spec()),
                got: format!("{:?}", almost.spec()),
            });
        }
        Ok(ASimMap { sim, almost })
    }

    pub fn spec(&self) -> &SpectralData {
        self.sim.spec()
    }

    pub fn stretch(&self) -> f64 {
        self.sim.stretch()
    }

    /// `(S1 A1) ∘ (S2 A2) = (S1 S2) ∘ (S2^{-1} A1 S2) ∘ A2`.
    pub fn compose(&self, g: &ASimMap) -> Result<ASimMap> {
        let sim = self.sim.compose(&g.sim)?;
        let moved = self.almost.conjugate(&g.sim.inverse());
        Ok(ASimMap { sim, almost: moved.compose(&g.almost)? })
    }

    /// `(S A)^{-1} = S^{-1} ∘ (S A^{-1} S^{-1})`.
    pub fn inverse(&self) -> ASimMap {
        ASimMap { sim: self.sim.inverse(), almost: self.almost.inverse().conjugate(&self.sim) }
    }

    pub fn to_block_map(&self) -> BlockMap {
        self.sim.to_block_map().compose(&self.almost.to_block_map()).expect("same spectral data")
    }
}

impl PointMap for ASimMap {
    fn apply(&self, p: &BlockPoint) -> BlockPoint {
        self.sim.apply(&self.almost.apply(p))
    }
}

/// A boundary map in the strongest normal form available.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BoundaryMap {
    Block { map: BlockMap },
    Sim { map: SimMap },
    Asim { map: ASimMap },
}

impl BoundaryMap {
    pub fn spec(&self) -> &SpectralData {
        match self {
            BoundaryMap::Block { map } => map.spec(),
            BoundaryMap::Sim { map } => map.spec(),
            BoundaryMap::Asim { map } => map.spec(),
        }
    }

    pub fn stretch(&self) -> Option<f64> {
        match self {
            BoundaryMap::Block { .. } => None,
            BoundaryMap::Sim { map } => Some(map.stretch()),
            BoundaryMap::Asim { map } => Some(map.stretch()),
        }
    }

    pub fn rotations(&self) -> Option<&[DMatrix<f64>]> {
        match self {
            BoundaryMap::Block { .. } => None,
            BoundaryMap::Sim { map } => Some(map.rotations()),
            BoundaryMap::Asim { map } => Some(map.sim.rotations()),
        }
    }

    pub fn evaluate(&self, p: &BlockPoint) -> Result<BlockPoint> {
        self.spec().check(p)?;
        Ok(self.apply(p))
    }

    fn as_asim(&self) -> Option<ASimMap> {
        match self {
            BoundaryMap::Sim { map } => Some(ASimMap { sim: map.clone(), almost: AlmostTranslation::identity(map.spec()) }),
            BoundaryMap::Asim { map } => Some(map.clone()),
            BoundaryMap::Block { .. } => None,
        }
    }

    pub fn to_block_map(&self) -> BlockMap {
        match self {
            BoundaryMap::Block { map } => map.clone(),
            BoundaryMap::Sim { map } => map.to_block_map(),
            BoundaryMap::Asim { map } => map.to_block_map(),
        }
    }

    /// `self ∘ g`; similarities compose to similarities and almost similarities to
    /// almost similarities.
    pub fn compose(&self, g: &BoundaryMap) -> Result<BoundaryMap> {
        match (self, g) {
            (BoundaryMap::Sim { map: a }, BoundaryMap::Sim { map: b }) => Ok(BoundaryMap::Sim { map: a.compose(b)? }),
            (BoundaryMap::Block { .. }, _) | (_, BoundaryMap::Block { .. }) => {
                Ok(BoundaryMap::Block { map: self.to_block_map().compose(&g.to_block_map())? })
            }
            _ => {
                let (a, b) = (self.as_asim().unwrap(), g.as_asim().unwrap());
                Ok(BoundaryMap::Asim { map: a.compose(&b)? })
            }
        }
    }

    pub fn inverse(&self) -> Result<BoundaryMap> {
        match self {
            BoundaryMap::Sim { map } => Ok(BoundaryMap::Sim { map: map.inverse() }),
            BoundaryMap::Asim { map } => Ok(BoundaryMap::Asim { map: map.inverse() }),
            BoundaryMap::Block { .. } => Err(Error::Domain("only similarities and almost similarities have closed-form inverses".into())),
        }
    }
}

impl PointMap for BoundaryMap {
    fn apply(&self, p: &BlockPoint) -> BlockPoint {
        match self {
            BoundaryMap::Block { map } => map.apply(p),
            BoundaryMap::Sim { map } => map.apply(p),
            BoundaryMap::Asim { map } => map.apply(p),
        }
    }
}

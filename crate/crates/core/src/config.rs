//! Run configuration: one TOML file per instance.
//!
//! ```toml
//! name = "example_4_6"
//!
//! [geometry.outer]
//! kind = "circle"
//! radius = 2.0
//! vertices = 4096
//!
//! [geometry.inner]
//! kind = "circle"
//! radius = 1.0
//! vertices = 4096
//!
//! [data.outer]
//! kind = "linear_in_y"
//! scale = 0.5
//! offset = 0.5
//! lo = 0.0
//! hi = 1.0
//!
//! [data.inner]
//! kind = "linear_in_y"
//! offset = 0.5
//! lo = 0.0
//! hi = 1.0
//!
//! [solver]
//! atoms = 256
//! norm = "euclidean"
//!
//! [grid]
//! h = 0.02
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::boundary::{BoundaryFunction, ComponentFunction};
use crate::error::{Error, Result};
use crate::geometry::{Annulus, ConvexBoundary, Point, Side};
use crate::instances::Instance;
use crate::transport::CostNorm;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CurveSpec {
    Circle {
        #[serde(default)]
        center: [f64; 2],
        radius: f64,
        #[serde(default = "default_vertices")]
        vertices: usize,
    },
    Ellipse {
        #[serde(default)]
        center: [f64; 2],
        a: f64,
        b: f64,
        #[serde(default = "default_vertices")]
        vertices: usize,
    },
    Polygon { vertices: Vec<[f64; 2]> },
}

fn default_vertices() -> usize {
    4096
}

impl CurveSpec {
    pub fn build(&self, side: Side) -> Result<ConvexBoundary> {
        match self {
            CurveSpec::Circle { center, radius, vertices } => {
                ConvexBoundary::circle(side, Point::new(center[0], center[1]), *radius, *vertices)
            }
            CurveSpec::Ellipse { center, a, b, vertices } => {
                ConvexBoundary::ellipse(side, Point::new(center[0], center[1]), *a, *b, *vertices)
            }
            CurveSpec::Polygon { vertices } => {
                ConvexBoundary::polygon(side, vertices.iter().map(|v| Point::new(v[0], v[1])).collect())
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeometrySpec {
    pub outer: CurveSpec,
    pub inner: CurveSpec,
}

/// Boundary datum on one curve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSpec {
    Constant {
        value: f64,
    },
    /// `clamp(scale * y + offset, lo, hi)`.
    LinearInY {
        #[serde(default = "one")]
        scale: f64,
        #[serde(default)]
        offset: f64,
        lo: Option<f64>,
        hi: Option<f64>,
    },
    LinearInX {
        #[serde(default = "one")]
        scale: f64,
        #[serde(default)]
        offset: f64,
        lo: Option<f64>,
        hi: Option<f64>,
    },
    /// `clamp(a x + b y + c, lo, hi)`.
    Linear {
        a: f64,
        b: f64,
        #[serde(default)]
        c: f64,
        lo: Option<f64>,
        hi: Option<f64>,
    },
    /// Piecewise linear in arclength through `(s, value)` breakpoints, with
    /// `(s, jump)` discontinuities.
    Table {
        breakpoints: Vec<[f64; 2]>,
        #[serde(default)]
        jumps: Vec<[f64; 2]>,
    },
}

fn one() -> f64 {
    1.0
}

impl DataSpec {
    pub fn build(&self, boundary: &ConvexBoundary) -> Result<ComponentFunction> {
        let lim = |lo: &Option<f64>, hi: &Option<f64>| (lo.unwrap_or(f64::NEG_INFINITY), hi.unwrap_or(f64::INFINITY));
        match self {
            DataSpec::Constant { value } => ComponentFunction::constant(boundary.side(), boundary.perimeter(), *value),
            DataSpec::LinearInY { scale, offset, lo, hi } => {
                let (l, h) = lim(lo, hi);
                ComponentFunction::clamped_linear(boundary, 0.0, *scale, *offset, l, h)
            }
            DataSpec::LinearInX { scale, offset, lo, hi } => {
                let (l, h) = lim(lo, hi);
                ComponentFunction::clamped_linear(boundary, *scale, 0.0, *offset, l, h)
            }
            DataSpec::Linear { a, b, c, lo, hi } => {
                let (l, h) = lim(lo, hi);
                ComponentFunction::clamped_linear(boundary, *a, *b, *c, l, h)
            }
            DataSpec::Table { breakpoints, jumps } => {
                let bp: Vec<(f64, f64)> = breakpoints.iter().map(|v| (v[0], v[1])).collect();
                let jp: Vec<(f64, f64)> = jumps.iter().map(|v| (v[0], v[1])).collect();
                ComponentFunction::from_table(boundary.side(), boundary.perimeter(), &bp, &jp)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DataBlock {
    pub outer: DataSpec,
    pub inner: DataSpec,
    /// Constant added to both components.
    #[serde(default)]
    pub shift: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverBlock {
    #[serde(default = "default_atoms")]
    pub atoms: usize,
    #[serde(default = "default_norm")]
    pub norm: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_trials")]
    pub monotonicity_trials: usize,
}

fn default_atoms() -> usize {
    256
}
fn default_norm() -> String {
    "euclidean".into()
}
fn default_trials() -> usize {
    10_000
}

impl Default for SolverBlock {
    fn default() -> Self {
        SolverBlock { atoms: default_atoms(), norm: default_norm(), seed: 0, monotonicity_trials: default_trials() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    #[serde(default = "default_h")]
    pub h: f64,
}

fn default_h() -> f64 {
    0.02
}

impl Default for GridBlock {
    fn default() -> Self {
        GridBlock { h: default_h() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub geometry: GeometrySpec,
    pub data: DataBlock,
    #[serde(default)]
    pub solver: SolverBlock,
    #[serde(default)]
    pub grid: GridBlock,
    #[serde(default)]
    pub output: Option<String>,
}

fn default_name() -> String {
    "instance".into()
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.solver.atoms < 2 {
            return Err(Error::Config(format!("solver.atoms must be at least 2, got {}", self.solver.atoms)));
        }
        if !(self.grid.h > 0.0 && self.grid.h.is_finite()) {
            return Err(Error::Config(format!("grid.h must be positive, got {}", self.grid.h)));
        }
        self.norm()?;
        Ok(())
    }

    pub fn norm(&self) -> Result<CostNorm> {
        CostNorm::parse(&self.solver.norm)
    }

    pub fn build_instance(&self) -> Result<Instance> {
        let annulus = Annulus::new(self.geometry.outer.build(Side::Outer)?, self.geometry.inner.build(Side::Inner)?)?;
        let data = BoundaryFunction::new(self.data.outer.build(&annulus.outer)?, self.data.inner.build(&annulus.inner)?)?
            .shifted(self.data.shift);
        Ok(Instance { name: self.name.clone(), annulus, data })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
name = "t"
[geometry.outer]
kind = "circle"
radius = 2.0
vertices = 64
[geometry.inner]
kind = "polygon"
vertices = [[1,0],[0.9238795,0.3826834],[0.7071068,0.7071068],[0.3826834,0.9238795],[0,1],[-0.3826834,0.9238795],[-0.7071068,0.7071068],[-0.9238795,0.3826834],[-1,0],[-0.9238795,-0.3826834],[-0.7071068,-0.7071068],[-0.3826834,-0.9238795],[0,-1],[0.3826834,-0.9238795],[0.7071068,-0.7071068],[0.9238795,-0.3826834]]
[data.outer]
kind = "linear_in_y"
lo = -1.0
hi = 1.0
[data.inner]
kind = "constant"
value = 0.0
[solver]
atoms = 8
norm = "3"
"#;

    #[test]
    fn parses_and_builds() {
        let cfg = RunConfig::parse(SAMPLE).unwrap();
        assert_eq!(cfg.solver.atoms, 8);
        assert_eq!(cfg.norm().unwrap(), CostNorm::PNorm { p: 3.0 });
        assert_eq!(cfg.grid.h, 0.02);
        let inst = cfg.build_instance().unwrap();
        assert_eq!(inst.annulus.inner.len(), 16);
        assert_eq!(inst.data.outer.range(), (-1.0, 1.0));
    }

    #[test]
    fn rejects_bad_values() {
        assert!(matches!(RunConfig::parse(&SAMPLE.replace("atoms = 8", "atoms = 1")), Err(Error::Config(_))));
        assert!(matches!(RunConfig::parse(&SAMPLE.replace("norm = \"3\"", "norm = \"1\"")), Err(Error::Config(_))));
        assert!(matches!(RunConfig::parse(&SAMPLE.replace("kind = \"constant\"", "kind = \"cubic\"")), Err(Error::Config(_))));
        let bad_geom = SAMPLE.replace("radius = 2.0", "radius = 0.5");
        assert!(matches!(RunConfig::parse(&bad_geom).unwrap().build_instance(), Err(Error::Geometry(_))));
    }
}

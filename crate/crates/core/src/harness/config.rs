use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::dynamics::{ModelSpec, Multifunction, SdeModel, TimeGrid};
use crate::geometry::{ConvexBody, Point, HULL_DISTANCE_TOL};

/// The constraint family `t -> C(t)` of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SetSpec {
    Interval { lo: f64, hi: f64 },
    Ball { center: Vec<f64>, radius: f64 },
    Box { lo: Vec<f64>, hi: Vec<f64> },
    /// `[lo, hi]^dim` as an H-polytope.
    Cube { dim: usize, lo: f64, hi: f64 },
    Polytope { normals: Vec<Vec<f64>>, offsets: Vec<f64> },
    ShrinkingBall { center: Vec<f64>, r0: f64, rate: f64 },
    ShrinkingBox { lo: Vec<f64>, hi: Vec<f64>, rate: f64 },
}

impl SetSpec {
    pub fn build(&self, horizon: f64) -> Result<Multifunction, HarnessError> {
        let v = |x: &[f64]| Point::from_column_slice(x);
        Ok(match self {
            Self::Interval { lo, hi } => Multifunction::Constant(ConvexBody::interval(*lo, *hi)?),
            Self::Ball { center, radius } => Multifunction::Constant(ConvexBody::ball(v(center), *radius)?),
            Self::Box { lo, hi } => Multifunction::Constant(ConvexBody::axis_box(v(lo), v(hi))?),
            Self::Cube { dim, lo, hi } => Multifunction::Constant(ConvexBody::cube_polytope(*dim, *lo, *hi)?),
            Self::Polytope { normals, offsets } => {
                let cols = normals.first().map_or(0, Vec::len);
                if normals.iter().any(|r| r.len() != cols) || normals.len() != offsets.len() {
                    return Err(HarnessError::Invalid("polytope normals and offsets disagree in shape".into()));
                }
                let a = DMatrix::from_fn(normals.len(), cols, |r, c| normals[r][c]);
                Multifunction::Constant(ConvexBody::hpolytope(&a, &DVector::from_column_slice(offsets))?)
            }
            Self::ShrinkingBall { center, r0, rate } => Multifunction::shrinking_ball(v(center), *r0, *rate, horizon)?,
            Self::ShrinkingBox { lo, hi, rate } => Multifunction::shrinking_box(v(lo), v(hi), *rate, horizon)?,
        })
    }
}

/// A convergence experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub name: String,
    pub model: ModelSpec,
    pub x0: Vec<f64>,
    pub set: SetSpec,
    pub horizon: f64,
    pub steps: usize,
    pub n_grid: Vec<usize>,
    pub replications: usize,
    pub seed: u64,
    pub time_indices: Vec<usize>,
    /// Probe points for `m > 1`; `None` selects `center +- 0.8 r_in e_k` of `C(t_j)`.
    pub probes: Option<Vec<Vec<f64>>>,
    /// Minimum distance of every probe from the boundary of every `C(t_j)`.
    pub probe_margin: f64,
    /// Keep pre-projection points on the diagnostic ensemble and run the hitting check.
    pub keep_h: bool,
    /// Run the one-step bound check on the diagnostic ensemble.
    pub step1_check: bool,
    pub hit_radius: f64,
    /// Copy count of the diagnostic ensemble.
    pub diagnostic_copies: usize,
    pub hull_tol: f64,
    pub output: Option<String>,
}

/// Everything built from a validated config.
pub struct Prepared {
    pub model: SdeModel,
    pub mf: Multifunction,
    pub grid: TimeGrid,
    pub bodies: Vec<ConvexBody>,
    /// Probes per requested time index, in the order of `time_indices`.
    pub probes: Vec<Vec<Point>>,
}

impl ExperimentConfig {
    pub fn dim(&self) -> usize {
        self.x0.len()
    }

    /// Checks every invariant and builds model, multifunction, grid and probes.
    pub fn prepare(&self) -> Result<Prepared, HarnessError> {
        let invalid = |msg: String| Err(HarnessError::Invalid(msg));
        if self.name.is_empty() || !self.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
            return invalid(format!("name {:?} must be nonempty [A-Za-z0-9_-]", self.name));
        }
        if self.n_grid.is_empty() || self.n_grid[0] == 0 || self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return invalid(format!("N grid {:?} must be nonempty, positive and strictly ascending", self.n_grid));
        }
        if self.replications == 0 {
            return invalid("replications must be >= 1".into());
        }
        if self.time_indices.is_empty()
            || self.time_indices.iter().any(|&j| j == 0 || j > self.steps)
            || self.time_indices.windows(2).any(|w| w[0] >= w[1])
        {
            return invalid(format!(
                "time indices {:?} must be strictly ascending within 1..={}",
                self.time_indices, self.steps
            ));
        }
        if !(self.probe_margin > 0.0 && self.probe_margin.is_finite()) {
            return invalid(format!("probe margin must be positive, got {}", self.probe_margin));
        }
        if !(self.hit_radius > 0.0 && self.hit_radius.is_finite()) {
            return invalid(format!("hit radius must be positive, got {}", self.hit_radius));
        }
        if !(self.hull_tol > 0.0 && self.hull_tol.is_finite()) {
            return invalid(format!("hull tolerance must be positive, got {}", self.hull_tol));
        }
        if self.diagnostic_copies == 0 {
            return invalid("diagnostic copies must be >= 1".into());
        }
        if self.step1_check && !self.keep_h {
            return invalid("the step-1 check needs keep_h".into());
        }
        let grid = TimeGrid::new(self.horizon, self.steps)?;
        let model = self.model.build(Point::from_column_slice(&self.x0))?;
        let mf = self.set.build(self.horizon)?;
        let bodies = mf.bodies_on(&grid)?;
        let m = bodies[0].dim();
        if m != model.dim() {
            return invalid(format!("x0 has dimension {}, the set has dimension {m}", model.dim()));
        }
        if !bodies[0].is_member(model.x0(), crate::geometry::GEOMETRIC_TOL) {
            return invalid(format!("x0 {:?} lies outside C(0)", self.x0));
        }
        let mut probes = Vec::with_capacity(self.time_indices.len());
        for &j in &self.time_indices {
            let body = &bodies[j];
            let points: Vec<Point> = if m == 1 {
                Vec::new()
            } else if let Some(explicit) = &self.probes {
                if explicit.is_empty() {
                    return invalid("probe list is empty".into());
                }
                explicit.iter().map(|p| Point::from_column_slice(p)).collect()
            } else {
                default_probes(body)
            };
            for (k, p) in points.iter().enumerate() {
                if p.len() != m {
                    return invalid(format!("probe {k} has dimension {}, expected {m}", p.len()));
                }
                let depth = body.depth(p);
                if depth < self.probe_margin {
                    return invalid(format!(
                        "probe {k} {:?} is {depth:.3e} inside C(t_{j}), below margin {}",
                        p.as_slice(),
                        self.probe_margin
                    ));
                }
            }
            probes.push(points);
        }
        Ok(Prepared {
            model,
            mf,
            grid,
            bodies,
            probes,
        })
    }

    /// Parses the flat `key = value` format. `#` starts a comment; lists are
    /// comma separated and point lists separate points by `;`.
    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        let mut map = BTreeMap::new();
        for (index, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| HarnessError::Parse {
                line: index + 1,
                message: format!("expected key = value, got {line:?}"),
            })?;
            let key = key.trim().to_string();
            if map.insert(key.clone(), (index + 1, value.trim().to_string())).is_some() {
                return Err(HarnessError::Parse {
                    line: index + 1,
                    message: format!("duplicate key {key}"),
                });
            }
        }
        let mut kv = Keys { map };
        let config = kv.build()?;
        if let Some((key, (line, _))) = kv.map.into_iter().next() {
            return Err(HarnessError::Parse {
                line,
                message: format!("unknown or unused key {key}"),
            });
        }
        Ok(config)
    }

    pub fn from_file(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Invalid(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Renders the config in the format read by [`ExperimentConfig::parse`].
    pub fn to_text(&self) -> String {
        let list = |v: &[f64]| v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", ");
        let points = |v: &[Vec<f64>]| v.iter().map(|p| list(p)).collect::<Vec<_>>().join("; ");
        let mut out = String::new();
        let mut put = |k: &str, v: String| writeln!(out, "{k} = {v}").expect("writing to a string");
        put("name", self.name.clone());
        put("model.kind", self.model.name().into());
        match self.model {
            ModelSpec::Ou { theta, sigma } => {
                put("model.theta", format!("{theta:?}"));
                put("model.sigma", format!("{sigma:?}"));
            }
            ModelSpec::Brownian { sigma } | ModelSpec::TanhDrift { sigma } => put("model.sigma", format!("{sigma:?}")),
            ModelSpec::TanhDiffusion { base, amplitude } => {
                put("model.base", format!("{base:?}"));
                put("model.amplitude", format!("{amplitude:?}"));
            }
        }
        put("model.x0", list(&self.x0));
        match &self.set {
            SetSpec::Interval { lo, hi } => {
                put("set.kind", "interval".into());
                put("set.lo", format!("{lo:?}"));
                put("set.hi", format!("{hi:?}"));
            }
            SetSpec::Ball { center, radius } => {
                put("set.kind", "ball".into());
                put("set.center", list(center));
                put("set.radius", format!("{radius:?}"));
            }
            SetSpec::Box { lo, hi } => {
                put("set.kind", "box".into());
                put("set.lo", list(lo));
                put("set.hi", list(hi));
            }
            SetSpec::Cube { dim, lo, hi } => {
                put("set.kind", "cube".into());
                put("set.dim", dim.to_string());
                put("set.lo", format!("{lo:?}"));
                put("set.hi", format!("{hi:?}"));
            }
            SetSpec::Polytope { normals, offsets } => {
                put("set.kind", "polytope".into());
                put("set.normals", points(normals));
                put("set.offsets", list(offsets));
            }
            SetSpec::ShrinkingBall { center, r0, rate } => {
                put("set.kind", "shrinking_ball".into());
                put("set.center", list(center));
                put("set.r0", format!("{r0:?}"));
                put("set.rate", format!("{rate:?}"));
            }
            SetSpec::ShrinkingBox { lo, hi, rate } => {
                put("set.kind", "shrinking_box".into());
                put("set.lo", list(lo));
                put("set.hi", list(hi));
                put("set.rate", format!("{rate:?}"));
            }
        }
        put("grid.horizon", format!("{:?}", self.horizon));
        put("grid.steps", self.steps.to_string());
        let ints = |v: &[usize]| v.iter().map(usize::to_string).collect::<Vec<_>>().join(", ");
        put("experiment.n_grid", ints(&self.n_grid));
        put("experiment.replications", self.replications.to_string());
        put("experiment.seed", self.seed.to_string());
        put("experiment.time_indices", ints(&self.time_indices));
        put("experiment.hull_tol", format!("{:?}", self.hull_tol));
        if let Some(p) = &self.probes {
            put("probes.points", points(p));
        }
        put("probes.margin", format!("{:?}", self.probe_margin));
        put("diagnostics.keep_h", self.keep_h.to_string());
        put("diagnostics.step1", self.step1_check.to_string());
        put("diagnostics.hit_radius", format!("{:?}", self.hit_radius));
        put("diagnostics.copies", self.diagnostic_copies.to_string());
        if let Some(o) = &self.output {
            put("output.path", o.clone());
        }
        out
    }
}

fn default_probes(body: &ConvexBody) -> Vec<Point> {
    let center = body.center();
    let reach = 0.8 * body.inradius();
    let m = center.len();
    let mut out = Vec::with_capacity(2 * m);
    for k in 0..m {
        for s in [1.0, -1.0] {
            let mut p = center.clone();
            p[k] += s * reach;
            out.push(p);
        }
    }
    out
}

struct Keys {
    map: BTreeMap<String, (usize, String)>,
}

impl Keys {
    fn take(&mut self, key: &str) -> Option<(usize, String)> {
        self.map.remove(key)
    }

    fn parsed<T>(&mut self, key: &str, f: impl Fn(&str) -> Option<T>) -> Result<Option<T>, HarnessError> {
        match self.take(key) {
            None => Ok(None),
            Some((line, value)) => f(&value).map(Some).ok_or_else(|| HarnessError::Parse {
                line,
                message: format!("cannot parse {key} = {value:?}"),
            }),
        }
    }

    fn required<T>(&mut self, key: &str, f: impl Fn(&str) -> Option<T>) -> Result<T, HarnessError> {
        self.parsed(key, f)?
            .ok_or_else(|| HarnessError::Invalid(format!("missing key {key}")))
    }

    fn build(&mut self) -> Result<ExperimentConfig, HarnessError> {
        let name = self.required("name", |s| Some(s.to_string()))?;
        let kind = self.required("model.kind", |s| Some(s.to_string()))?;
        let model = match kind.as_str() {
            "ou" => ModelSpec::Ou {
                theta: self.required("model.theta", real)?,
                sigma: self.required("model.sigma", real)?,
            },
            "brownian" => ModelSpec::Brownian {
                sigma: self.required("model.sigma", real)?,
            },
            "tanh_drift" => ModelSpec::TanhDrift {
                sigma: self.required("model.sigma", real)?,
            },
            "tanh_diffusion" => ModelSpec::TanhDiffusion {
                base: self.required("model.base", real)?,
                amplitude: self.required("model.amplitude", real)?,
            },
            other => return Err(HarnessError::Invalid(format!("unknown model.kind {other:?}"))),
        };
        let x0 = self.required("model.x0", reals)?;
        let set_kind = self.required("set.kind", |s| Some(s.to_string()))?;
        let set = match set_kind.as_str() {
            "interval" => SetSpec::Interval {
                lo: self.required("set.lo", real)?,
                hi: self.required("set.hi", real)?,
            },
            "ball" => SetSpec::Ball {
                center: self.required("set.center", reals)?,
                radius: self.required("set.radius", real)?,
            },
            "box" => SetSpec::Box {
                lo: self.required("set.lo", reals)?,
                hi: self.required("set.hi", reals)?,
            },
            "cube" => SetSpec::Cube {
                dim: self.required("set.dim", integer)?,
                lo: self.required("set.lo", real)?,
                hi: self.required("set.hi", real)?,
            },
            "polytope" => SetSpec::Polytope {
                normals: self.required("set.normals", point_list)?,
                offsets: self.required("set.offsets", reals)?,
            },
            "shrinking_ball" => SetSpec::ShrinkingBall {
                center: self.required("set.center", reals)?,
                r0: self.required("set.r0", real)?,
                rate: self.required("set.rate", real)?,
            },
            "shrinking_box" => SetSpec::ShrinkingBox {
                lo: self.required("set.lo", reals)?,
                hi: self.required("set.hi", reals)?,
                rate: self.required("set.rate", real)?,
            },
            other => return Err(HarnessError::Invalid(format!("unknown set.kind {other:?}"))),
        };
        Ok(ExperimentConfig {
            name,
            model,
            x0,
            set,
            horizon: self.required("grid.horizon", real)?,
            steps: self.required("grid.steps", integer)?,
            n_grid: self.required("experiment.n_grid", integers)?,
            replications: self.required("experiment.replications", integer)?,
            seed: self.required("experiment.seed", |s| s.parse().ok())?,
            time_indices: self.required("experiment.time_indices", integers)?,
            hull_tol: self.parsed("experiment.hull_tol", real)?.unwrap_or(HULL_DISTANCE_TOL),
            probes: self.parsed("probes.points", point_list)?,
            probe_margin: self.parsed("probes.margin", real)?.unwrap_or(DEFAULT_PROBE_MARGIN),
            keep_h: self.parsed("diagnostics.keep_h", boolean)?.unwrap_or(false),
            step1_check: self.parsed("diagnostics.step1", boolean)?.unwrap_or(false),
            hit_radius: self.parsed("diagnostics.hit_radius", real)?.unwrap_or(DEFAULT_HIT_RADIUS),
            diagnostic_copies: self.parsed("diagnostics.copies", integer)?.unwrap_or(DEFAULT_DIAGNOSTIC_COPIES),
            output: self.parsed("output.path", |s| Some(s.to_string()))?,
        })
    }
}

pub const DEFAULT_PROBE_MARGIN: f64 = 0.05;
pub const DEFAULT_HIT_RADIUS: f64 = 0.1;
pub const DEFAULT_DIAGNOSTIC_COPIES: usize = 10_000;

fn real(s: &str) -> Option<f64> {
    s.parse().ok().filter(|v: &f64| v.is_finite())
}

fn integer(s: &str) -> Option<usize> {
    s.parse().ok()
}

fn boolean(s: &str) -> Option<bool> {
    s.parse().ok()
}

fn reals(s: &str) -> Option<Vec<f64>> {
    s.split(',').map(|t| real(t.trim())).collect()
}

fn integers(s: &str) -> Option<Vec<usize>> {
    s.split(',').map(|t| integer(t.trim())).collect()
}

fn point_list(s: &str) -> Option<Vec<Vec<f64>>> {
    s.split(';').map(|p| reals(p.trim())).collect()
}

/// Names of the default suite, in run order.
pub const PRESETS: [&str; 4] = ["e1", "e2", "e3", "e4"];

/// Master seed of the default suite.
pub const DEFAULT_SEED: u64 = 12345;

/// The default suite: `e1` constant sigma in 1D, `e2` state-dependent sigma
/// in 1D, `e3` a shrinking disc, `e4` the square `[-1, 1]^2` as a polytope.
pub fn preset(name: &str) -> Option<ExperimentConfig> {
    let one_d = |name: &str, model: ModelSpec, x0: f64| ExperimentConfig {
        name: name.into(),
        model,
        x0: vec![x0],
        set: SetSpec::Interval { lo: -1.0, hi: 1.0 },
        horizon: 1.0,
        steps: 20,
        n_grid: vec![100, 1000, 10000],
        replications: 100,
        seed: DEFAULT_SEED,
        time_indices: vec![20],
        probes: None,
        probe_margin: DEFAULT_PROBE_MARGIN,
        keep_h: false,
        step1_check: false,
        hit_radius: DEFAULT_HIT_RADIUS,
        diagnostic_copies: DEFAULT_DIAGNOSTIC_COPIES,
        hull_tol: HULL_DISTANCE_TOL,
        output: None,
    };
    let two_d = |name: &str, set: SetSpec| ExperimentConfig {
        name: name.into(),
        model: ModelSpec::Ou { theta: 1.0, sigma: 0.35 },
        x0: vec![0.0, 0.0],
        set,
        horizon: 1.0,
        steps: 20,
        n_grid: vec![200, 2000, 20000],
        replications: 100,
        seed: DEFAULT_SEED,
        time_indices: vec![20],
        probes: None,
        probe_margin: DEFAULT_PROBE_MARGIN,
        keep_h: true,
        step1_check: true,
        hit_radius: DEFAULT_HIT_RADIUS,
        diagnostic_copies: DEFAULT_DIAGNOSTIC_COPIES,
        hull_tol: HULL_DISTANCE_TOL,
        output: None,
    };
    match name {
        "e1" => Some(one_d("e1", ModelSpec::Ou { theta: 1.0, sigma: 0.5 }, 0.0)),
        "e2" => Some(one_d("e2", ModelSpec::TanhDiffusion { base: 0.3, amplitude: 0.1 }, -0.1)),
        "e3" => Some(two_d(
            "e3",
            SetSpec::ShrinkingBall {
                center: vec![0.0, 0.0],
                r0: 1.2,
                rate: 0.2,
            },
        )),
        "e4" => Some(two_d("e4", SetSpec::Cube { dim: 2, lo: -1.0, hi: 1.0 })),
        _ => None,
    }
}

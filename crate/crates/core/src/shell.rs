//! File formats: group specs as JSON, field grids as CSV, figures as SVG.
//!
//! Every JSON record carries a [`Provenance`] header so that an output file
//! says which tool version, depth and tolerances produced it.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constructor::{BoundaryArcSet, ConstructionConfig, ConstructionState, Level};
use crate::group::{
    BallConfig, FuchsianGroupSpec, Generator, GroupError, OrbitBall, DEFAULT_MAX_BALL,
};
use crate::leafmetrics::{self, MetricsError};
use crate::moebius::{
    CircleArc, Complex, DiskAutomorphism, Geodesic, GeometryError, HalfPlane, Horocycle,
};

pub const SCHEMA_VERSION: &str = "leafscope/1";
/// Environment variable overriding the word-ball element cap.
pub const MAX_BALL_ENV: &str = "LEAFSCOPE_MAX_BALL";
/// Largest accepted `| |a|² − |b|² − 1 |`, relative to `max(1, |a|²)`.
pub const NORMALIZATION_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum ShellError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("invalid file: {0}")]
    Format(String),
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StripRecord {
    /// `(start, length)` of the boundary arc of `H₊`.
    pub plus: (f64, f64),
    pub minus: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorRecord {
    pub label: String,
    pub a_re: f64,
    pub a_im: f64,
    pub b_re: f64,
    pub b_im: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strip: Option<StripRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelRecord {
    pub index: usize,
    /// Closed arcs as `(start, end)` angles, counterclockwise.
    pub arcs: Vec<(f64, f64)>,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstructionExtension {
    pub levels: Vec<LevelRecord>,
    pub deltas: Vec<f64>,
    pub epsilons: Vec<f64>,
    pub anchors: Vec<f64>,
    pub config: ConstructionConfig,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Extensions {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub construction: Option<ConstructionExtension>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSpecFile {
    pub schema_version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
    pub generators: Vec<GeneratorRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extensions: Option<Extensions>,
}

fn arc_pair(h: &HalfPlane) -> (f64, f64) {
    (h.arc().start, h.arc().length)
}

impl GroupSpecFile {
    pub fn from_spec(spec: &FuchsianGroupSpec) -> Self {
        let generators = spec
            .generators()
            .iter()
            .map(|g| GeneratorRecord {
                label: g.label.clone(),
                a_re: g.map.a().re,
                a_im: g.map.a().im,
                b_re: g.map.b().re,
                b_im: g.map.b().im,
                strip: g.strip.map(|(p, m)| StripRecord {
                    plus: arc_pair(&p),
                    minus: arc_pair(&m),
                }),
            })
            .collect();
        Self {
            schema_version: SCHEMA_VERSION.to_string(),
            provenance: None,
            generators,
            extensions: None,
        }
    }

    pub fn from_state(state: &ConstructionState) -> Self {
        let mut file = Self::from_spec(&state.group);
        file.extensions = Some(Extensions {
            construction: Some(ConstructionExtension {
                levels: state
                    .levels
                    .iter()
                    .map(|l| LevelRecord {
                        index: l.index,
                        arcs: l.arcs.intervals().to_vec(),
                        radius: l.radius,
                    })
                    .collect(),
                deltas: state.deltas.clone(),
                epsilons: state.epsilons.clone(),
                anchors: state.anchors.clone(),
                config: state.config.clone(),
            }),
        });
        file
    }

    /// Rebuilds the group, rejecting generators that are not normalized.
    pub fn to_spec(&self) -> Result<FuchsianGroupSpec, ShellError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(ShellError::Format(format!(
                "schema version {:?}, expected {SCHEMA_VERSION:?}",
                self.schema_version
            )));
        }
        let mut gens = Vec::with_capacity(self.generators.len());
        for r in &self.generators {
            let (a, b) = (Complex::new(r.a_re, r.a_im), Complex::new(r.b_re, r.b_im));
            let tol = NORMALIZATION_TOL * a.norm_sqr().max(1.0);
            let map = DiskAutomorphism::from_normalized(a, b, tol)
                .map_err(|e| ShellError::Format(format!("generator {}: {e}", r.label)))?;
            let mut g = Generator::new(r.label.clone(), map);
            if let Some(s) = &r.strip {
                let plus = HalfPlane::new(CircleArc::new(s.plus.0, s.plus.1))?;
                let minus = HalfPlane::new(CircleArc::new(s.minus.0, s.minus.1))?;
                g = g.with_strip(plus, minus);
            }
            gens.push(g);
        }
        Ok(FuchsianGroupSpec::new(gens)?)
    }

    pub fn to_state(&self) -> Result<ConstructionState, ShellError> {
        let ext = self
            .extensions
            .as_ref()
            .and_then(|e| e.construction.as_ref())
            .ok_or_else(|| ShellError::Format("no construction block".into()))?;
        let levels = ext
            .levels
            .iter()
            .map(|l| Level {
                index: l.index,
                arcs: BoundaryArcSet::from_intervals(l.arcs.clone()),
                radius: l.radius,
            })
            .collect();
        Ok(ConstructionState {
            group: self.to_spec()?,
            levels,
            deltas: ext.deltas.clone(),
            epsilons: ext.epsilons.clone(),
            anchors: ext.anchors.clone(),
            config: ext.config.clone(),
        })
    }

    pub fn to_json(&self) -> Result<String, ShellError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self, ShellError> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn read(mut r: impl Read) -> Result<Self, ShellError> {
        let mut s = String::new();
        r.read_to_string(&mut s)?;
        Self::from_json(&s)
    }

    pub fn write(&self, mut w: impl Write) -> Result<(), ShellError> {
        w.write_all(self.to_json()?.as_bytes())?;
        w.write_all(b"\n")?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub schema_version: String,
    pub tool_version: String,
    pub command: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth: Option<usize>,
    pub tolerances: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub parallel: bool,
}

impl Provenance {
    pub fn new(command: impl Into<String>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.into(),
            depth: None,
            tolerances: BTreeMap::new(),
            seed: None,
            parallel: crate::par::is_parallel(),
        }
    }

    pub fn depth(mut self, depth: usize) -> Self {
        self.depth = Some(depth);
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn tolerance(mut self, name: &str, value: f64) -> Self {
        self.tolerances.insert(name.to_string(), value);
        self
    }
}

/// `{"provenance": …, "result": …}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Record<T> {
    pub provenance: Provenance,
    pub result: T,
}

impl<T: Serialize> Record<T> {
    pub fn new(provenance: Provenance, result: T) -> Self {
        Self { provenance, result }
    }

    pub fn to_json(&self) -> Result<String, ShellError> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Ball configuration, with the element cap taken from
/// `LEAFSCOPE_MAX_BALL` when set.
pub fn ball_config_from_env() -> Result<BallConfig, ShellError> {
    let mut config = BallConfig::default();
    match std::env::var(MAX_BALL_ENV) {
        Ok(v) => {
            config.max_elements = v.trim().parse().map_err(|_| {
                ShellError::Format(format!("{MAX_BALL_ENV}={v:?} is not a positive integer"))
            })?;
            if config.max_elements == 0 {
                return Err(ShellError::Format(format!(
                    "{MAX_BALL_ENV} must be positive"
                )));
            }
        }
        Err(std::env::VarError::NotPresent) => config.max_elements = DEFAULT_MAX_BALL,
        Err(e) => return Err(ShellError::Format(format!("{MAX_BALL_ENV}: {e}"))),
    }
    Ok(config)
}

/// Polar grid of `n_r × n_θ` points, radii `r_max·i/n_r` for `i = 1..=n_r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarGrid {
    pub n_r: usize,
    pub n_theta: usize,
    pub r_max: f64,
}

impl PolarGrid {
    pub fn points(&self) -> Vec<Complex> {
        (1..=self.n_r)
            .flat_map(|i| {
                let r = self.r_max * i as f64 / self.n_r as f64;
                (0..self.n_theta)
                    .map(move |j| Complex::from_polar(r, TAU * j as f64 / self.n_theta as f64))
            })
            .collect()
    }

    pub fn len(&self) -> usize {
        self.n_r * self.n_theta
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldKind {
    Alpha,
    Beta,
    Rho,
}

/// One CSV row; fields that were not requested are `NaN`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldRow {
    pub zeta_re: f64,
    pub zeta_im: f64,
    pub beta: f64,
    pub beta_certified: bool,
    pub alpha: f64,
    pub alpha_lo: f64,
    pub alpha_hi: f64,
    pub rho_lower: f64,
}

/// Evaluates the requested field on the grid; `α` needs the full product,
/// `β` and `ρ` only the minimal displacement.
pub fn field_rows(
    ball: &OrbitBall,
    grid: &PolarGrid,
    kind: FieldKind,
    tol: f64,
) -> Result<Vec<FieldRow>, ShellError> {
    let points = grid.points();
    let rows = crate::par::map(&points, |z| -> Result<FieldRow, MetricsError> {
        let beta = leafmetrics::beta_at(ball, *z)?;
        let rho = if beta.lower_bound > 0.0 {
            leafmetrics::injectivity_radius_bound(beta.lower_bound.min(1.0))?
        } else {
            0.0
        };
        let (alpha, lo, hi) = if kind == FieldKind::Alpha {
            let a = leafmetrics::alpha_at(ball, *z, tol)?;
            (a.value, a.lower_bound, a.upper_bound)
        } else {
            (f64::NAN, f64::NAN, f64::NAN)
        };
        Ok(FieldRow {
            zeta_re: z.re,
            zeta_im: z.im,
            beta: beta.value,
            beta_certified: beta.certified,
            alpha,
            alpha_lo: lo,
            alpha_hi: hi,
            rho_lower: rho,
        })
    });
    Ok(rows.into_iter().collect::<Result<Vec<_>, _>>()?)
}

// keep I/O failures visible as such
fn csv_error(e: csv::Error) -> ShellError {
    if e.is_io_error() {
        if let csv::ErrorKind::Io(io) = e.into_kind() {
            return ShellError::Io(io);
        }
        unreachable!("is_io_error implies an Io kind");
    }
    ShellError::Csv(e)
}

pub fn write_field_csv(rows: &[FieldRow], w: impl Write) -> Result<(), ShellError> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r).map_err(csv_error)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_field_csv(r: impl Read) -> Result<Vec<FieldRow>, ShellError> {
    let mut rd = csv::Reader::from_reader(r);
    Ok(rd.deserialize().collect::<Result<Vec<FieldRow>, _>>()?)
}

/// Static figure of the disk: geodesics, points, horocycles, boundary arcs.
#[derive(Debug, Clone, Default)]
pub struct Figure {
    pub geodesics: Vec<Geodesic>,
    pub points: Vec<Complex>,
    pub horocycles: Vec<Horocycle>,
    pub arcs: Vec<CircleArc>,
}

impl Figure {
    pub fn to_svg(&self, size: u32) -> String {
        let s = size as f64;
        let half = s / 2.0;
        let scale = 0.45 * s;
        let xy = |z: Complex| (half + scale * z.re, half - scale * z.im);
        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">"#
        );
        let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            out,
            r#"<circle cx="{half}" cy="{half}" r="{scale}" fill="none" stroke="black" stroke-width="1"/>"#
        );
        for a in &self.arcs {
            let n = ((a.length / TAU * 360.0).ceil() as usize).max(2);
            let pts: Vec<String> = (0..=n)
                .map(|k| {
                    let (x, y) = xy(Complex::from_polar(
                        1.0,
                        a.start + a.length * k as f64 / n as f64,
                    ));
                    format!("{x:.2},{y:.2}")
                })
                .collect();
            let _ = writeln!(
                out,
                r#"<polyline points="{}" fill="none" stroke="seagreen" stroke-width="3"/>"#,
                pts.join(" ")
            );
        }
        for g in &self.geodesics {
            let pts: Vec<String> = g
                .polyline(64)
                .into_iter()
                .map(|z| {
                    let (x, y) = xy(z);
                    format!("{x:.2},{y:.2}")
                })
                .collect();
            let _ = writeln!(
                out,
                r#"<polyline points="{}" fill="none" stroke="steelblue" stroke-width="1"/>"#,
                pts.join(" ")
            );
        }
        for h in &self.horocycles {
            let d = h.disk();
            let (x, y) = xy(d.center);
            let _ = writeln!(
                out,
                r#"<circle cx="{x:.2}" cy="{y:.2}" r="{:.2}" fill="none" stroke="darkorange" stroke-width="1"/>"#,
                d.radius * scale
            );
        }
        for p in &self.points {
            let (x, y) = xy(*p);
            let _ = writeln!(
                out,
                r#"<circle cx="{x:.2}" cy="{y:.2}" r="1.2" fill="crimson"/>"#
            );
        }
        out.push_str("</svg>\n");
        out
    }
}

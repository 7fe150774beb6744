//! Finite truncations of finitely generated Fuchsian groups.
//!
//! Words are enumerated freely reduced, breadth first, and deduplicated by
//! projective equality of their automorphisms.  When the generators admit a
//! ping-pong configuration (pairwise disjoint half-planes that avoid the
//! origin) every omitted word has a rigorous displacement floor, which is
//! what turns finite sums and minima into certified values.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::moebius::{
    poincare_from_defect, BoundaryPoint, CircleArc, Classification, Complex, DiskAutomorphism,
    Geodesic, GeometryError, HalfPlane, PROJECTIVE_TOL,
};
use crate::par;

pub const DEFAULT_MAX_BALL: usize = 1_000_000;
pub const DEFAULT_LIMIT_EPS: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GroupError {
    #[error("word length must be at least 1")]
    ZeroDepth,
    #[error("word ball exceeds the cap of {cap} elements")]
    CapExceeded { cap: usize },
    #[error("generator {label} is {class:?}, expected hyperbolic")]
    NotHyperbolic {
        label: String,
        class: Classification,
    },
    #[error("strip of generator {label} is not mapped onto its partner: {reason}")]
    BadStrip { label: String, reason: String },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// A value with enclosing bounds and a truncation certificate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertifiedValue {
    pub value: f64,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub depth: usize,
    pub certified: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl CertifiedValue {
    pub fn exact(value: f64, depth: usize) -> Self {
        Self {
            value,
            lower_bound: value,
            upper_bound: value,
            depth,
            certified: true,
            warnings: Vec::new(),
        }
    }

    pub fn width(&self) -> f64 {
        self.upper_bound - self.lower_bound
    }
}

/// A generator or its inverse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Letter {
    pub generator: usize,
    pub inverse: bool,
}

impl Letter {
    pub fn new(generator: usize, inverse: bool) -> Self {
        Self { generator, inverse }
    }

    pub fn inv(self) -> Self {
        Self {
            generator: self.generator,
            inverse: !self.inverse,
        }
    }

    /// Dense index in `0..2k`: `2·generator + inverse`.
    pub fn index(self) -> usize {
        2 * self.generator + self.inverse as usize
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    pub label: String,
    pub map: DiskAutomorphism,
    /// Optional ping-pong half-planes `(D₊, D₋)`: the map sends the
    /// exterior of `D₋` onto the closure of `D₊`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strip: Option<(HalfPlane, HalfPlane)>,
}

impl Generator {
    pub fn new(label: impl Into<String>, map: DiskAutomorphism) -> Self {
        Self {
            label: label.into(),
            map,
            strip: None,
        }
    }

    pub fn with_strip(mut self, plus: HalfPlane, minus: HalfPlane) -> Self {
        self.strip = Some((plus, minus));
        self
    }

    pub fn letter_map(&self, inverse: bool) -> DiskAutomorphism {
        if inverse {
            self.map.inverse()
        } else {
            self.map
        }
    }

    /// The two ping-pong half-planes `(H_g, H_{g⁻¹})`, either the explicit
    /// strip or the Dirichlet bisector half-planes at the origin.
    pub fn half_planes(&self) -> Result<(HalfPlane, HalfPlane), GeometryError> {
        match self.strip {
            Some(s) => Ok(s),
            None => Ok((
                bisector_half_plane(&self.map)?,
                bisector_half_plane(&self.map.inverse())?,
            )),
        }
    }
}

/// The half-plane beyond the perpendicular bisector of `0` and `γ(0)`.
/// Its arc is centered at `arg γ(0)` with half-width `arccos |γ(0)|`.
pub fn bisector_half_plane(g: &DiskAutomorphism) -> Result<HalfPlane, GeometryError> {
    let b = g.b();
    if b.norm() == 0.0 {
        return Err(GeometryError::Degenerate(
            "element fixes the origin, no bisector".into(),
        ));
    }
    let mid = g.origin_image().arg();
    let half = 1f64.atan2(b.norm());
    HalfPlane::new(CircleArc::centered(mid, 2.0 * half))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuchsianGroupSpec {
    generators: Vec<Generator>,
}

impl FuchsianGroupSpec {
    pub fn new(generators: Vec<Generator>) -> Result<Self, GroupError> {
        for g in &generators {
            let class = g.map.classify();
            if class != Classification::Hyperbolic {
                return Err(GroupError::NotHyperbolic {
                    label: g.label.clone(),
                    class,
                });
            }
            if let Some((plus, minus)) = g.strip {
                check_strip(&g.label, &g.map, &plus, &minus)?;
            }
        }
        Ok(Self { generators })
    }

    pub fn trivial() -> Self {
        Self {
            generators: Vec::new(),
        }
    }

    pub fn cyclic(r: f64) -> Result<Self, GroupError> {
        let map = DiskAutomorphism::hyperbolic(r)?;
        let (plus, minus) = crate::moebius::strip_half_planes(r)?;
        Self::new(vec![Generator::new("g1", map).with_strip(plus, minus)])
    }

    pub fn from_maps(maps: &[DiskAutomorphism]) -> Result<Self, GroupError> {
        Self::new(
            maps.iter()
                .enumerate()
                .map(|(i, m)| Generator::new(format!("g{}", i + 1), *m))
                .collect(),
        )
    }

    pub fn generators(&self) -> &[Generator] {
        &self.generators
    }

    pub fn rank(&self) -> usize {
        self.generators.len()
    }

    pub fn is_trivial(&self) -> bool {
        self.generators.is_empty()
    }

    pub fn letter_map(&self, l: Letter) -> DiskAutomorphism {
        self.generators[l.generator].letter_map(l.inverse)
    }

    pub fn push(&mut self, g: Generator) -> Result<(), GroupError> {
        let mut all = std::mem::take(&mut self.generators);
        all.push(g);
        match Self::new(all.clone()) {
            Ok(s) => {
                *self = s;
                Ok(())
            }
            Err(e) => {
                all.pop();
                self.generators = all;
                Err(e)
            }
        }
    }

    /// Conjugates every generator (and strip) by `φ`.
    pub fn conjugate_by(&self, phi: &DiskAutomorphism) -> Self {
        Self {
            generators: self
                .generators
                .iter()
                .map(|g| Generator {
                    label: g.label.clone(),
                    map: g.map.conjugate_by(phi),
                    strip: g.strip.map(|(p, m)| (p.map_by(phi), m.map_by(phi))),
                })
                .collect(),
        }
    }

    /// Rigorous word-length displacement floor, if the ping-pong half-planes
    /// are pairwise disjoint and avoid the origin.
    pub fn schottky_bound(&self) -> Option<SchottkyBound> {
        if self.generators.is_empty() {
            return None;
        }
        let mut planes = Vec::with_capacity(2 * self.rank());
        for g in &self.generators {
            let (p, m) = g.half_planes().ok()?;
            planes.push(p);
            planes.push(m);
        }
        if planes.iter().any(|h| h.contains_origin()) {
            return None;
        }
        let mut delta = f64::INFINITY;
        for i in 0..planes.len() {
            for j in (i + 1)..planes.len() {
                if !planes[i].disjoint(&planes[j]) {
                    return None;
                }
                delta = delta.min(planes[i].geodesic().distance_to(&planes[j].geodesic()));
            }
        }
        let d0 = planes
            .iter()
            .map(|h| h.origin_clearance())
            .fold(f64::INFINITY, f64::min);
        if !(delta > 0.0 && d0 > 0.0) {
            return None;
        }
        Some(SchottkyBound {
            origin_clearance: d0,
            separation: delta,
            letters: planes.len(),
            half_planes: planes,
        })
    }
}

fn check_strip(
    label: &str,
    map: &DiskAutomorphism,
    plus: &HalfPlane,
    minus: &HalfPlane,
) -> Result<(), GroupError> {
    let image = minus.map_by(map).arc();
    let p = plus.arc();
    let start_err = crate::moebius::angular_distance(image.start, p.end());
    let len_err = (image.length - (2.0 * PI - p.length)).abs();
    // boundary images lose precision in proportion to |a|^2
    let tol = 1e-9 + 1e-14 * map.a().norm_sqr();
    if start_err > tol || len_err > tol {
        return Err(GroupError::BadStrip {
            label: label.to_string(),
            reason: format!("endpoint error {start_err:e}, length error {len_err:e}"),
        });
    }
    Ok(())
}

/// Displacement floor for reduced words in a ping-pong group:
/// `d_P(0, w(0)) ≥ 2·d₀ + (|w| − 1)·δ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchottkyBound {
    /// Minimum Poincaré distance from 0 to a ping-pong geodesic.
    pub origin_clearance: f64,
    /// Minimum Poincaré distance between two distinct ping-pong geodesics.
    pub separation: f64,
    /// Number of letters `2k`.
    pub letters: usize,
    pub half_planes: Vec<HalfPlane>,
}

impl SchottkyBound {
    pub fn floor(&self, length: usize) -> f64 {
        if length == 0 {
            return 0.0;
        }
        2.0 * self.origin_clearance + (length as f64 - 1.0) * self.separation
    }

    /// Number of reduced words of exactly this length.
    pub fn word_count(&self, length: usize) -> f64 {
        if length == 0 {
            return 1.0;
        }
        let k2 = self.letters as f64;
        k2 * (k2 - 1.0).powi(length as i32 - 1)
    }

    /// Upper bound on `Σ −log d_M(z, γz)` over all reduced words longer than
    /// `depth`, where `radius = d_P(0, z)`.  `None` when the bound does not
    /// converge at this depth.
    pub fn log_tail(&self, depth: usize, radius: f64) -> Option<f64> {
        let ratio = (self.letters as f64 - 1.0) * (-2.0 * self.separation).exp();
        let exponent = self.floor(depth + 1) - 2.0 * radius;
        if !(ratio < 1.0) || !(exponent > 0.0) {
            return None;
        }
        let q = (-2.0 * exponent).exp();
        // −log tanh(D) = 2·artanh(e^{−2D}) ≤ 2q/(1 − q²) for q = e^{−2D}
        Some(2.0 / (1.0 - q * q) * self.word_count(depth + 1) * q / (1.0 - ratio))
    }
}

/// A freely reduced word with its cached automorphism.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupElement {
    pub word: Vec<Letter>,
    pub map: DiskAutomorphism,
}

impl GroupElement {
    pub fn identity() -> Self {
        Self {
            word: Vec::new(),
            map: DiskAutomorphism::identity(),
        }
    }

    pub fn len(&self) -> usize {
        self.word.len()
    }

    pub fn is_empty(&self) -> bool {
        self.word.is_empty()
    }

    pub fn inverse_word(&self) -> Vec<Letter> {
        self.word.iter().rev().map(|l| l.inv()).collect()
    }

    /// Recomputes the map from the word.
    pub fn evaluate(word: &[Letter], spec: &FuchsianGroupSpec) -> DiskAutomorphism {
        word.iter().fold(DiskAutomorphism::identity(), |m, l| {
            m.compose(&spec.letter_map(*l))
        })
    }

    pub fn label(&self, spec: &FuchsianGroupSpec) -> String {
        if self.word.is_empty() {
            return "id".into();
        }
        self.word
            .iter()
            .map(|l| {
                let name = &spec.generators()[l.generator].label;
                if l.inverse {
                    format!("{name}^-1")
                } else {
                    name.clone()
                }
            })
            .collect::<Vec<_>>()
            .join(" ")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BallConfig {
    pub max_elements: usize,
    pub tolerance: f64,
}

impl Default for BallConfig {
    fn default() -> Self {
        Self {
            max_elements: DEFAULT_MAX_BALL,
            tolerance: PROJECTIVE_TOL,
        }
    }
}

/// All nontrivial reduced words of length at most `depth`, deduplicated.
#[derive(Debug, Clone)]
pub struct OrbitBall {
    spec: FuchsianGroupSpec,
    depth: usize,
    elements: Vec<GroupElement>,
    /// `offsets[ℓ]..offsets[ℓ+1]` indexes the words of length `ℓ + 1`.
    offsets: Vec<usize>,
    schottky: Option<SchottkyBound>,
    warnings: Vec<String>,
}

fn bucket(m: &DiskAutomorphism) -> i64 {
    // saturating cast keeps the ±1 neighbours in range
    ((m.a().norm().ln() / 1e-6).round() as i64).clamp(i64::MIN + 1, i64::MAX - 1)
}

/// Enumerates the word ball with the default configuration.
pub fn word_ball(spec: &FuchsianGroupSpec, depth: usize) -> Result<OrbitBall, GroupError> {
    word_ball_with(spec, depth, &BallConfig::default())
}

pub fn word_ball_with(
    spec: &FuchsianGroupSpec,
    depth: usize,
    config: &BallConfig,
) -> Result<OrbitBall, GroupError> {
    if depth == 0 {
        return Err(GroupError::ZeroDepth);
    }
    let mut elements: Vec<GroupElement> = Vec::new();
    let mut offsets = vec![0usize];
    let mut warnings = Vec::new();
    let mut index: HashMap<i64, Vec<usize>> = HashMap::new();
    let letters: Vec<Letter> = (0..spec.rank())
        .flat_map(|g| [Letter::new(g, false), Letter::new(g, true)])
        .collect();
    let mut frontier = vec![GroupElement::identity()];

    for _ in 0..depth {
        let candidates = par::flat_map(&frontier, |e| {
            let last = e.word.last().copied();
            letters
                .iter()
                .filter(|l| Some(l.inv()) != last)
                .map(|l| {
                    let mut word = e.word.clone();
                    word.push(*l);
                    GroupElement {
                        map: e.map.compose(&spec.letter_map(*l)),
                        word,
                    }
                })
                .collect::<Vec<_>>()
        });
        let mut next = Vec::with_capacity(candidates.len());
        for cand in candidates {
            if cand.map.is_identity(config.tolerance) {
                warnings.push(format!(
                    "relation detected: {} is the identity",
                    cand.label(spec)
                ));
                continue;
            }
            let key = bucket(&cand.map);
            let dup = (key - 1..=key + 1).find_map(|k| {
                index.get(&k).and_then(|ids| {
                    ids.iter()
                        .copied()
                        .find(|&i| elements[i].map.approx_eq(&cand.map, config.tolerance))
                })
            });
            if let Some(i) = dup {
                warnings.push(format!(
                    "relation detected: {} coincides with {}",
                    cand.label(spec),
                    elements[i].label(spec)
                ));
                continue;
            }
            if elements.len() >= config.max_elements {
                return Err(GroupError::CapExceeded {
                    cap: config.max_elements,
                });
            }
            index.entry(key).or_default().push(elements.len());
            elements.push(cand.clone());
            next.push(cand);
        }
        offsets.push(elements.len());
        frontier = next;
        if frontier.is_empty() {
            // every extension collapsed, deeper lengths are empty
            while offsets.len() <= depth {
                offsets.push(elements.len());
            }
            break;
        }
    }
    Ok(OrbitBall {
        schottky: spec.schottky_bound(),
        spec: spec.clone(),
        depth,
        elements,
        offsets,
        warnings,
    })
}

impl OrbitBall {
    pub fn spec(&self) -> &FuchsianGroupSpec {
        &self.spec
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn elements(&self) -> &[GroupElement] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Elements whose word has exactly this length.
    pub fn of_length(&self, length: usize) -> &[GroupElement] {
        if length == 0 || length > self.depth {
            return &[];
        }
        &self.elements[self.offsets[length - 1]..self.offsets[length]]
    }

    pub fn schottky(&self) -> Option<&SchottkyBound> {
        self.schottky.as_ref()
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn relation_detected(&self) -> bool {
        !self.warnings.is_empty()
    }

    pub fn origin_orbit(&self) -> Vec<Complex> {
        self.elements.iter().map(|e| e.map.origin_image()).collect()
    }

    /// Index of the element projectively equal to `m`, if present.
    pub fn find(&self, m: &DiskAutomorphism, tol: f64) -> Option<usize> {
        self.elements.iter().position(|e| e.map.approx_eq(m, tol))
    }
}

const CHUNK: usize = 4096;

fn check_point(z: Complex) -> Result<(), GroupError> {
    if !(z.norm_sqr() < 1.0) {
        return Err(GroupError::Geometry(GeometryError::Domain(format!(
            "point {z} is not inside the unit disk"
        ))));
    }
    Ok(())
}

/// `(max defect, index)` of `1 − d_M(z, γz)²` over a slice.
fn max_defect(elements: &[GroupElement], z: Complex, base: usize) -> (f64, usize) {
    let chunks: Vec<&[GroupElement]> = elements.chunks(CHUNK).collect();
    let partial = par::map_range(chunks.len(), |c| {
        let mut best = (f64::NEG_INFINITY, usize::MAX);
        for (i, e) in chunks[c].iter().enumerate() {
            let d = e.map.displacement_defect(z);
            if d > best.0 {
                best = (d, base + c * CHUNK + i);
            }
        }
        best
    });
    partial
        .into_iter()
        .fold((f64::NEG_INFINITY, usize::MAX), |a, b| {
            if b.0 > a.0 {
                b
            } else {
                a
            }
        })
}

/// Result of the minimal-displacement search at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct Displacement {
    /// `min d_M(z, γz)` with its certificate.
    pub value: CertifiedValue,
    /// The matching Poincaré displacement `artanh` of the value.
    pub poincare: f64,
    /// Index into the ball of a minimizing element.
    pub nearest: Option<usize>,
}

/// Minimal Möbius displacement `min_{γ≠id} d_M(z, γz)` over the ball.
///
/// The value is certified when the ping-pong floor shows that no omitted
/// word can do better: `floor(L + 1) − 2·d_P(0, z) > artanh(m_L)`.
pub fn displacement(ball: &OrbitBall, z: Complex) -> Result<CertifiedValue, GroupError> {
    Ok(displacement_detailed(ball, z)?.value)
}

pub fn displacement_detailed(ball: &OrbitBall, z: Complex) -> Result<Displacement, GroupError> {
    check_point(z)?;
    if ball.spec.is_trivial() || ball.is_empty() {
        let mut v = CertifiedValue::exact(1.0, ball.depth);
        if !ball.spec.is_trivial() {
            v.certified = false;
            v.warnings.push("word ball is empty".into());
        }
        return Ok(Displacement {
            value: v,
            poincare: f64::INFINITY,
            nearest: None,
        });
    }
    let (defect, idx) = max_defect(&ball.elements, z, 0);
    let d = (1.0 - defect).max(0.0).sqrt();
    let dp = poincare_from_defect(d, defect);
    let radius = z.norm().atanh();
    let mut value = CertifiedValue::exact(d, ball.depth);
    match &ball.schottky {
        Some(s) => {
            let floor = s.floor(ball.depth + 1) - 2.0 * radius;
            if floor <= dp {
                value.certified = false;
                value.lower_bound = floor.max(0.0).tanh().min(d);
                value.warnings.push(format!(
                    "omitted words may displace less: floor {floor:.6} ≤ {dp:.6}"
                ));
            }
        }
        None => {
            value.certified = false;
            value.lower_bound = 0.0;
            value
                .warnings
                .push("no ping-pong structure, minimum is over the ball only".into());
        }
    }
    Ok(Displacement {
        value,
        poincare: dp,
        nearest: Some(idx),
    })
}

/// Per-length sums `Σ_{|γ| = ℓ} −log d_M(z, γz)` for `ℓ = 1..=L`.
pub fn log_sums_by_length(ball: &OrbitBall, z: Complex) -> Result<Vec<f64>, GroupError> {
    check_point(z)?;
    Ok((1..=ball.depth)
        .map(|len| {
            let slice = ball.of_length(len);
            let chunks: Vec<&[GroupElement]> = slice.chunks(CHUNK).collect();
            par::map_range(chunks.len(), |c| {
                chunks[c]
                    .iter()
                    .map(|e| -0.5 * (-e.map.displacement_defect(z)).ln_1p())
                    .sum::<f64>()
            })
            .into_iter()
            .sum()
        })
        .collect())
}

/// A region of the disk intended as a fundamental domain.
pub trait FundamentalRegion: Sync {
    /// Strict interior membership.
    fn contains(&self, z: Complex) -> bool;
    /// Closed membership with slack.
    fn contains_closed(&self, z: Complex, slack: f64) -> bool;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirichletConstraint {
    pub element: GroupElement,
    pub bisector: Geodesic,
    /// The side of the bisector containing `γ(0)`.
    pub excluded: HalfPlane,
}

/// Depth-`L` Dirichlet domain centred at the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirichletDomain {
    pub depth: usize,
    pub constraints: Vec<DirichletConstraint>,
}

fn arc_within(inner: &CircleArc, outer: &CircleArc) -> bool {
    let off = (inner.start - outer.start).rem_euclid(2.0 * PI);
    off + inner.length <= outer.length + 1e-15
}

/// Dirichlet domain of the ball; constraints whose excluded half-plane lies
/// inside another one are pruned.
pub fn dirichlet_domain(ball: &OrbitBall) -> DirichletDomain {
    let mut cands: Vec<(HalfPlane, &GroupElement)> = ball
        .elements
        .iter()
        .filter_map(|e| bisector_half_plane(&e.map).ok().map(|h| (h, e)))
        .collect();
    cands.sort_by(|x, y| y.0.arc().length.total_cmp(&x.0.arc().length));
    let mut kept: Vec<(HalfPlane, &GroupElement)> = Vec::new();
    for (h, e) in cands {
        if !kept.iter().any(|(k, _)| arc_within(&h.arc(), &k.arc())) {
            kept.push((h, e));
        }
    }
    DirichletDomain {
        depth: ball.depth,
        constraints: kept
            .into_iter()
            .map(|(h, e)| DirichletConstraint {
                element: e.clone(),
                bisector: h.geodesic(),
                excluded: h,
            })
            .collect(),
    }
}

impl DirichletDomain {
    /// `min_γ |a − conj(b)·z|`; the point is inside iff this exceeds 1.
    fn margin(&self, z: Complex) -> f64 {
        self.constraints
            .iter()
            .map(|c| (c.element.map.a() - c.element.map.b().conj() * z).norm())
            .fold(f64::INFINITY, f64::min)
    }
}

impl FundamentalRegion for DirichletDomain {
    fn contains(&self, z: Complex) -> bool {
        z.norm_sqr() < 1.0 && self.margin(z) > 1.0
    }

    fn contains_closed(&self, z: Complex, slack: f64) -> bool {
        z.norm_sqr() < 1.0 && self.margin(z) >= 1.0 - slack
    }
}

/// The complement of the ping-pong half-planes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PingPongDomain {
    pub half_planes: Vec<HalfPlane>,
}

impl PingPongDomain {
    pub fn of(spec: &FuchsianGroupSpec) -> Result<Self, GroupError> {
        let mut half_planes = Vec::new();
        for g in spec.generators() {
            let (p, m) = g.half_planes()?;
            half_planes.push(p);
            half_planes.push(m);
        }
        Ok(Self { half_planes })
    }
}

impl FundamentalRegion for PingPongDomain {
    fn contains(&self, z: Complex) -> bool {
        z.norm_sqr() < 1.0 && self.half_planes.iter().all(|h| h.side(z) < 0.0)
    }

    fn contains_closed(&self, z: Complex, slack: f64) -> bool {
        z.norm_sqr() < 1.0 && self.half_planes.iter().all(|h| h.side(z) <= slack)
    }
}

/// A pair of domain points identified by a ball element.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub sample: usize,
    pub point: Complex,
    pub image: Complex,
    pub word: Vec<Letter>,
}

/// Every `(z, γz)` with both points strictly inside the region.
pub fn fundamental_domain_violations<R: FundamentalRegion>(
    ball: &OrbitBall,
    region: &R,
    samples: &[Complex],
) -> Vec<Violation> {
    par::map_range(samples.len(), |i| {
        let z = samples[i];
        if !region.contains(z) {
            return Vec::new();
        }
        ball.elements
            .iter()
            .filter_map(|e| {
                let w = e.map.apply(z);
                region.contains(w).then(|| Violation {
                    sample: i,
                    point: z,
                    image: w,
                    word: e.word.clone(),
                })
            })
            .collect()
    })
    .into_iter()
    .flatten()
    .collect()
}

/// Fraction of samples that some element (or the identity) maps into the
/// closed region.
pub fn coverage_fraction<R: FundamentalRegion>(
    ball: &OrbitBall,
    region: &R,
    samples: &[Complex],
    slack: f64,
) -> f64 {
    if samples.is_empty() {
        return 1.0;
    }
    let hits = par::map(samples, |z| {
        region.contains_closed(*z, slack)
            || ball
                .elements
                .iter()
                .any(|e| region.contains_closed(e.map.apply(*z), slack))
    });
    hits.iter().filter(|h| **h).count() as f64 / samples.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitSample {
    pub point: BoundaryPoint,
    /// `|γ(0)|` of the orbit point it came from.
    pub modulus: f64,
}

/// Radial projections of orbit points with `|γ(0)| > 1 − eps`.
pub fn limit_set_sample(ball: &OrbitBall, eps: f64) -> Vec<LimitSample> {
    ball.elements
        .iter()
        .filter_map(|e| {
            let p = e.map.origin_image();
            let m = e.map.b().norm() / e.map.a().norm();
            (m > 1.0 - eps).then(|| LimitSample {
                point: BoundaryPoint::from_complex(p),
                modulus: m,
            })
        })
        .collect()
}

/// Partial sums of `Σ (1 − |γ(0)|)` over words of length `≤ ℓ`, `ℓ = 1..=L`.
pub fn convergence_sum(ball: &OrbitBall) -> Vec<f64> {
    let mut total = 0.0;
    (1..=ball.depth)
        .map(|len| {
            total += ball
                .of_length(len)
                .iter()
                .map(|e| {
                    let m = e.map.b().norm() / e.map.a().norm();
                    e.map.origin_defect() / (1.0 + m)
                })
                .sum::<f64>();
            total
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilizerReport {
    pub elements: Vec<GroupElement>,
    pub shortest: Option<GroupElement>,
    /// Every found element is a power of the shortest one.
    pub cyclic_chain: bool,
}

fn power(m: &DiskAutomorphism, k: i64) -> DiskAutomorphism {
    let base = if k < 0 { m.inverse() } else { *m };
    (0..k.unsigned_abs()).fold(DiskAutomorphism::identity(), |acc, _| acc.compose(&base))
}

/// Elements with a fixed point within `tol` (angular) of `s`.
pub fn boundary_stabilizer(ball: &OrbitBall, s: BoundaryPoint, tol: f64) -> StabilizerReport {
    let elements: Vec<GroupElement> = ball
        .elements
        .iter()
        .filter(|e| match e.map.fixed_points() {
            Ok((p, q)) => p.angular_distance(&s) <= tol || q.angular_distance(&s) <= tol,
            Err(_) => false,
        })
        .cloned()
        .collect();
    let shortest = elements
        .iter()
        .min_by(|x, y| {
            x.map
                .translation_length()
                .total_cmp(&y.map.translation_length())
        })
        .cloned();
    let cyclic_chain = match &shortest {
        None => true,
        Some(g) => {
            let unit = g.map.translation_length();
            elements.iter().all(|e| {
                let k = (e.map.translation_length() / unit).round() as i64;
                k >= 1
                    && (e.map.approx_eq(&power(&g.map, k), 1e-6)
                        || e.map.approx_eq(&power(&g.map, -k), 1e-6))
            })
        }
    };
    StabilizerReport {
        elements,
        shortest,
        cyclic_chain,
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.inverse {
            write!(f, "g{}^-1", self.generator + 1)
        } else {
            write!(f, "g{}", self.generator + 1)
        }
    }
}

//! Inductive construction of infinite Fuchsian groups by ping-pong, and the
//! staged construction of a group with injective horocycles on boundary sets
//! of almost full measure.
//!
//! Each new generator is a conjugate of the basic hyperbolic element whose
//! two strip half-planes are squeezed into a small Euclidean disk `D_ε(a)`
//! around a boundary point `a` of the current ping-pong domain.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::group::{
    self, dirichlet_domain, word_ball, FuchsianGroupSpec, Generator, GroupError, OrbitBall,
    PingPongDomain,
};
use crate::horocycles::{horocycle_injectivity, HorocycleError, PingPongCertifier};
use crate::moebius::{
    strip_half_planes, BoundaryPoint, CircleArc, Complex, DiskAutomorphism, EuclideanDisk,
    GeometryError, HalfPlane, Horocycle,
};
use crate::par;

/// Words visited when collecting the shadow of a new generator.
const MAX_SHADOW_NODES: usize = 200_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConstructionError {
    #[error("at least one stage is required")]
    NoStages,
    #[error("D_ε(a) with ε = {epsilon} meets the half-plane of generator {label}")]
    Overlap { epsilon: f64, label: String },
    #[error("could not squeeze the strip into D_ε(a) with ε = {0}")]
    NoConjugation(f64),
    #[error("stage {stage}: infeasible schedule: {reason}")]
    Infeasible { stage: usize, reason: String },
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Horocycle(#[from] HorocycleError),
}

/// A finite union of closed arcs of the unit circle.
///
/// Stored as sorted disjoint angle intervals inside `[0, 2π]`; an arc
/// through angle 0 is split in two.  The measure is the plain sum of
/// interval lengths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryArcSet {
    intervals: Vec<(f64, f64)>,
}

impl BoundaryArcSet {
    pub fn empty() -> Self {
        Self {
            intervals: Vec::new(),
        }
    }

    pub fn full() -> Self {
        Self {
            intervals: vec![(0.0, TAU)],
        }
    }

    pub fn from_arcs(arcs: Vec<CircleArc>) -> Self {
        let mut raw = Vec::new();
        for a in arcs {
            if a.length >= TAU {
                return Self::full();
            }
            if a.length <= 0.0 {
                continue;
            }
            let s = a.start.rem_euclid(TAU);
            let e = s + a.length;
            if e <= TAU {
                raw.push((s, e));
            } else {
                raw.push((s, TAU));
                raw.push((0.0, e - TAU));
            }
        }
        Self::from_intervals(raw)
    }

    /// Sorted union of `(start, end)` intervals inside `[0, 2π]`.
    pub fn from_intervals(mut raw: Vec<(f64, f64)>) -> Self {
        raw.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut out: Vec<(f64, f64)> = Vec::with_capacity(raw.len());
        for (s, e) in raw {
            match out.last_mut() {
                Some(last) if s <= last.1 => last.1 = last.1.max(e),
                _ => out.push((s, e)),
            }
        }
        Self { intervals: out }
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    /// Arcs with the pieces through angle 0 rejoined.
    pub fn arcs(&self) -> Vec<CircleArc> {
        let iv = &self.intervals;
        if iv.is_empty() {
            return Vec::new();
        }
        if iv.len() == 1 && iv[0].0 == 0.0 && iv[0].1 == TAU {
            return vec![CircleArc::new(0.0, TAU)];
        }
        let wraps = iv.len() > 1 && iv[0].0 == 0.0 && iv[iv.len() - 1].1 == TAU;
        let mut arcs = Vec::new();
        let (lo, hi) = if wraps {
            (1, iv.len() - 1)
        } else {
            (0, iv.len())
        };
        for &(s, e) in &iv[lo..hi] {
            arcs.push(CircleArc::new(s, e - s));
        }
        if wraps {
            let (s, _) = iv[iv.len() - 1];
            arcs.push(CircleArc::new(s, TAU - s + iv[0].1));
        }
        arcs
    }

    pub fn measure(&self) -> f64 {
        self.intervals.iter().map(|(s, e)| e - s).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn contains(&self, angle: f64) -> bool {
        let a = angle.rem_euclid(TAU);
        self.intervals.iter().any(|(s, e)| *s <= a && a <= *e)
    }

    /// Closed intersection test.
    pub fn intersects(&self, arc: &CircleArc) -> bool {
        self.contains(arc.start) || self.intervals.iter().any(|(s, _)| arc.contains_angle(*s))
    }

    pub fn complement(&self) -> Self {
        let mut out = Vec::new();
        let mut cur = 0.0;
        for &(s, e) in &self.intervals {
            if s > cur {
                out.push((cur, s));
            }
            cur = e;
        }
        if cur < TAU {
            out.push((cur, TAU));
        }
        Self { intervals: out }
    }

    pub fn union(&self, other: &Self) -> Self {
        let mut raw = self.intervals.clone();
        raw.extend_from_slice(&other.intervals);
        Self::from_intervals(raw)
    }

    pub fn intersection(&self, other: &Self) -> Self {
        let mut out = Vec::new();
        for &(s1, e1) in &self.intervals {
            for &(s2, e2) in &other.intervals {
                let (s, e) = (s1.max(s2), e1.min(e2));
                if e > s {
                    out.push((s, e));
                }
            }
        }
        Self::from_intervals(out)
    }

    pub fn subtract(&self, other: &Self) -> Self {
        self.intersection(&other.complement())
    }

    /// Every arc widened by `pad` on both sides.
    pub fn padded(&self, pad: f64) -> Self {
        Self::from_arcs(
            self.arcs()
                .into_iter()
                .map(|a| CircleArc::new(a.start - pad, a.length + 2.0 * pad))
                .collect(),
        )
    }

    pub fn largest_arc(&self) -> Option<CircleArc> {
        self.arcs()
            .into_iter()
            .max_by(|x, y| x.length.total_cmp(&y.length))
    }

    /// The first `amount` of measure met walking counter-clockwise from
    /// `angle`.  Returns fewer when the set is smaller.
    pub fn leading_measure(&self, angle: f64, amount: f64) -> Self {
        let a = angle.rem_euclid(TAU);
        let mut order: Vec<(f64, f64)> = Vec::new();
        for &(s, e) in &self.intervals {
            if e > a {
                order.push((s.max(a), e));
            }
        }
        for &(s, e) in &self.intervals {
            if s < a {
                order.push((s, e.min(a)));
            }
        }
        let mut left = amount;
        let mut taken = Vec::new();
        for (s, e) in order {
            if left <= 0.0 {
                break;
            }
            let l = (e - s).min(left);
            taken.push((s, s + l));
            left -= l;
        }
        Self::from_intervals(taken)
    }

    /// `per_arc` evenly spaced angles on each arc, endpoints included.
    pub fn sample(&self, per_arc: usize) -> Vec<BoundaryPoint> {
        let n = per_arc.max(2);
        self.arcs()
            .iter()
            .flat_map(|a| {
                (0..n).map(move |k| {
                    BoundaryPoint::new(a.start + a.length * k as f64 / (n - 1) as f64)
                })
            })
            .collect()
    }
}

/// `rot(θ_a − π/2) ∘ M_t`, where `M_t` translates 0 to `t·i`.
fn squeeze(anchor: f64, t: f64) -> Result<DiskAutomorphism, GeometryError> {
    let m = DiskAutomorphism::translation(Complex::new(0.0, t))?;
    Ok(DiskAutomorphism::rotation(anchor - PI / 2.0).compose(&m))
}

fn plane_disk(h: &HalfPlane) -> EuclideanDisk {
    h.euclidean_disk().unwrap_or(EuclideanDisk {
        center: Complex::new(0.0, 0.0),
        radius: 1.0,
    })
}

/// A hyperbolic generator whose strip half-planes lie inside `D_ε(a)`.
///
/// The containment test is conservative: the Euclidean disk bounded by each
/// geodesic must fit in `D_ε(a)`.  Fails if `D_ε(a)` meets an existing
/// ping-pong half-plane.
pub fn next_generator(
    spec: &FuchsianGroupSpec,
    anchor: BoundaryPoint,
    epsilon: f64,
    base_r: f64,
    label: impl Into<String>,
) -> Result<Generator, ConstructionError> {
    let label = label.into();
    let target = EuclideanDisk {
        center: anchor.to_complex(),
        radius: epsilon,
    };
    for g in spec.generators() {
        let (p, m) = g.half_planes()?;
        for h in [p, m] {
            if plane_disk(&h).intersects(&target) {
                return Err(ConstructionError::Overlap {
                    epsilon,
                    label: g.label.clone(),
                });
            }
        }
    }
    let base = DiskAutomorphism::hyperbolic(base_r)?;
    let (plus, minus) = strip_half_planes(base_r)?;
    for k in 1..=60 {
        let t = 1.0 - 0.5f64.powi(k);
        let psi = squeeze(anchor.angle(), t)?;
        let (p, m) = (plus.map_by(&psi), minus.map_by(&psi));
        let fits = [p, m].iter().all(|h| {
            let d = plane_disk(h);
            (d.center - target.center).norm() + d.radius <= epsilon
        });
        if fits {
            let map = base.conjugate_by(&psi);
            return Ok(Generator {
                label,
                map,
                strip: Some((p, m)),
            });
        }
    }
    Err(ConstructionError::NoConjugation(epsilon))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitGroupReport {
    /// Both complementary half-planes of the new element avoid every
    /// excluded half-plane of the depth-`L` Dirichlet domain.
    pub disks_inside_domain: bool,
    /// Minimum sampled Euclidean distance between the new geodesics and the
    /// Dirichlet bisectors.
    pub min_gap: f64,
    pub margin: f64,
    pub gap_ok: bool,
}

impl LimitGroupReport {
    pub fn passed(&self) -> bool {
        self.disks_inside_domain && self.gap_ok
    }
}

/// Half-planes whose complement is the group's fundamental domain: the
/// ping-pong half-planes when they exist, else the depth-`L` Dirichlet
/// constraints.
fn domain_half_planes(
    spec: &FuchsianGroupSpec,
    depth: usize,
) -> Result<Vec<HalfPlane>, ConstructionError> {
    if let Some(s) = spec.schottky_bound() {
        return Ok(s.half_planes);
    }
    let ball = word_ball(spec, depth)?;
    Ok(dirichlet_domain(&ball)
        .constraints
        .into_iter()
        .map(|c| c.excluded)
        .collect())
}

/// Finite-depth check of the hypotheses for adjoining `new` to `spec`.
///
/// The domain is the inductive ping-pong domain when the group has one,
/// otherwise the depth-`L` Dirichlet domain.
pub fn limitgroup_hypotheses(
    spec: &FuchsianGroupSpec,
    new: &Generator,
    depth: usize,
    margin: f64,
) -> Result<LimitGroupReport, ConstructionError> {
    let (p, m) = new.half_planes()?;
    if spec.is_trivial() {
        return Ok(LimitGroupReport {
            disks_inside_domain: true,
            min_gap: f64::INFINITY,
            margin,
            gap_ok: true,
        });
    }
    let excluded = domain_half_planes(spec, depth)?;
    let mut inside = true;
    for e in &excluded {
        for h in [p, m] {
            if !h.disjoint(e) {
                inside = false;
            }
        }
    }
    let new_pts: Vec<Complex> = [p, m]
        .iter()
        .flat_map(|h| h.geodesic().polyline(64))
        .collect();
    let interior = |z: &Complex| z.norm() < 1.0 - 1e-12;
    if new_pts
        .iter()
        .filter(|z| interior(z))
        .any(|z| excluded.iter().any(|e| e.contains(*z)))
    {
        inside = false;
    }
    let mut gap = f64::INFINITY;
    for e in &excluded {
        for q in e.geodesic().polyline(64) {
            for z in &new_pts {
                gap = gap.min((q - z).norm());
            }
        }
    }
    Ok(LimitGroupReport {
        disks_inside_domain: inside,
        min_gap: gap,
        margin,
        gap_ok: gap > margin,
    })
}

/// Fraction of samples mapped into the closed depth-`L` Dirichlet domain by
/// some element of the ball.
pub fn coverage_check(
    spec: &FuchsianGroupSpec,
    depth: usize,
    samples: &[Complex],
) -> Result<f64, ConstructionError> {
    if spec.is_trivial() {
        return Ok(1.0);
    }
    let ball = word_ball(spec, depth)?;
    let dom = dirichlet_domain(&ball);
    Ok(group::coverage_fraction(&ball, &dom, samples, 1e-9))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstructionConfig {
    /// Parameter `r` of the basic hyperbolic element behind every generator.
    pub base_r: f64,
    /// Word length used for certificates.
    pub depth: usize,
    pub samples_per_arc: usize,
    /// Stored radius as a fraction of the largest certified common radius.
    pub radius_safety: f64,
    /// Minimum gap required by [`limitgroup_hypotheses`].
    pub margin: f64,
    pub max_halvings: usize,
}

impl Default for ConstructionConfig {
    fn default() -> Self {
        Self {
            base_r: 0.8,
            depth: 4,
            samples_per_arc: 64,
            radius_safety: 0.9,
            margin: 1e-3,
            max_halvings: 30,
        }
    }
}

/// `δ_j = 2^{−j−2}` for `j = 2..=m`.
pub fn default_deltas(stages: usize) -> Vec<f64> {
    (2..=stages).map(|j| 0.5f64.powi(j as i32 + 2)).collect()
}

/// Level `i`: a boundary set with injective horocycles of one radius.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Level {
    pub index: usize,
    pub arcs: BoundaryArcSet,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstructionState {
    pub group: FuchsianGroupSpec,
    pub levels: Vec<Level>,
    /// `δ_j` for `j = 2..=m`.
    pub deltas: Vec<f64>,
    /// `ε` used for generators `2..=m`.
    pub epsilons: Vec<f64>,
    /// Anchor angles for generators `2..=m`.
    pub anchors: Vec<f64>,
    pub config: ConstructionConfig,
}

impl ConstructionState {
    pub fn stage(&self) -> usize {
        self.group.rank()
    }

    /// `2π − 1/i − Σ_{j=i+1}^{m} δ_j`.
    pub fn expected_measure(&self, i: usize) -> f64 {
        let spent: f64 = self
            .deltas
            .iter()
            .enumerate()
            .filter(|(k, _)| k + 2 > i)
            .map(|(_, d)| d)
            .sum();
        TAU - 1.0 / i as f64 - spent
    }

    /// Ping-pong geodesic pairs, one per generator.
    pub fn domain_geodesics(&self) -> Vec<(crate::moebius::Geodesic, crate::moebius::Geodesic)> {
        self.group
            .generators()
            .iter()
            .filter_map(|g| g.strip.map(|(p, m)| (p.geodesic(), m.geodesic())))
            .collect()
    }

    pub fn domain(&self) -> Result<PingPongDomain, ConstructionError> {
        Ok(PingPongDomain::of(&self.group)?)
    }

    /// Re-checks every level against the full group through the ping-pong
    /// tiling, independent of word length.
    pub fn certify_levels_exact(&self) -> Result<Vec<bool>, ConstructionError> {
        let cert = PingPongCertifier::new(&self.group)?;
        Ok(self
            .levels
            .iter()
            .map(|l| level_certified_exact(&cert, &l.arcs, l.radius, self.config.samples_per_arc))
            .collect())
    }

    /// Re-runs every level certificate on a ball of the given depth.
    pub fn certify_levels(&self, depth: usize) -> Result<Vec<bool>, ConstructionError> {
        let ball = word_ball(&self.group, depth)?;
        Ok(self
            .levels
            .iter()
            .map(|l| level_certified(&ball, &l.arcs, l.radius, self.config.samples_per_arc))
            .collect())
    }
}

fn level_certified(ball: &OrbitBall, arcs: &BoundaryArcSet, radius: f64, per_arc: usize) -> bool {
    let pts = arcs.sample(per_arc);
    par::map(&pts, |z| match Horocycle::new(*z, radius) {
        Ok(h) => horocycle_injectivity(ball, &h).is_injective(),
        Err(_) => false,
    })
    .into_iter()
    .all(|ok| ok)
}

fn level_certified_exact(
    cert: &PingPongCertifier,
    arcs: &BoundaryArcSet,
    radius: f64,
    per_arc: usize,
) -> bool {
    par::map(&arcs.sample(per_arc), |z| cert.is_injective(*z, radius))
        .into_iter()
        .all(|ok| ok)
}

/// Smallest injective radius over the sample points.
fn common_sigma(cert: &PingPongCertifier, pts: &[BoundaryPoint]) -> f64 {
    par::map(pts, |z| cert.sigma(*z))
        .into_iter()
        .fold(f64::INFINITY, f64::min)
}

/// Boundary points whose horodisk of radius `r` meets the orthogonal disk.
///
/// The horodisk at `ζ` misses the disk `(c, R)` iff `r ≤ (1 − p)/(1 − p + R)`
/// with `p = Re(ζ̄c)`, which is an arc centered at `arg c`.
fn shadow_arc(disk: &EuclideanDisk, r: f64) -> CircleArc {
    let threshold = 1.0 - r * disk.radius / (1.0 - r);
    let cos = threshold / disk.center.norm();
    if cos <= -1.0 {
        return CircleArc::new(0.0, TAU);
    }
    let half = cos.min(1.0).acos();
    CircleArc::centered(disk.center.arg(), 2.0 * half)
}

/// Points of `level` whose horodisk of radius `r` meets some translate
/// `w(H)` of the new half-planes by the old group.
///
/// Translates through words starting with `w·x` lie inside `w(H_x)`, so a
/// subtree is skipped once the shadow of `w(H_x)` misses the level.
fn translate_shadow(
    old: &FuchsianGroupSpec,
    new_planes: &[HalfPlane],
    level: &BoundaryArcSet,
    r: f64,
    max_nodes: usize,
) -> Result<Option<BoundaryArcSet>, ConstructionError> {
    let mut letters = Vec::new();
    for (k, g) in old.generators().iter().enumerate() {
        let (p, m) = g.half_planes()?;
        for (h, inverse) in [(p, false), (m, true)] {
            let l = group::Letter::new(k, inverse);
            letters.push((l, h, old.letter_map(l)));
        }
    }
    let shadow_of = |h: &HalfPlane| h.euclidean_disk().map(|d| shadow_arc(&d, r));
    let mut hits = Vec::new();
    let mut stack: Vec<(DiskAutomorphism, Option<group::Letter>)> =
        vec![(DiskAutomorphism::identity(), None)];
    let mut visited = 0usize;
    while let Some((w, last)) = stack.pop() {
        visited += 1;
        if visited > max_nodes {
            return Ok(None);
        }
        for h in new_planes {
            let Some(arc) = shadow_of(&h.map_by(&w)) else {
                return Ok(None);
            };
            hits.push(arc);
        }
        for (l, h, m) in &letters {
            if last.is_some_and(|p| p.inv() == *l) {
                continue;
            }
            let Some(arc) = shadow_of(&h.map_by(&w)) else {
                return Ok(None);
            };
            if level.intersects(&arc) {
                stack.push((w.compose(m), Some(*l)));
            }
        }
    }
    Ok(Some(BoundaryArcSet::from_arcs(hits).intersection(level)))
}

/// Closed arcs covering the limit set.
///
/// Every limit point lies in a nested chain `w(H_x) ⊃ w·x(H_y) ⊃ …` of
/// ping-pong half-plane images.  Arcs longer than a threshold are refined
/// into their children; the threshold is halved until the cover has total
/// measure at most `budget` or `max_nodes` arcs would be needed.
pub fn limit_set_cover(
    spec: &FuchsianGroupSpec,
    budget: f64,
    max_nodes: usize,
) -> Result<BoundaryArcSet, ConstructionError> {
    let planes: Vec<(HalfPlane, HalfPlane)> = spec
        .generators()
        .iter()
        .map(|g| g.half_planes())
        .collect::<Result<_, _>>()?;
    let letters: Vec<(group::Letter, HalfPlane)> = planes
        .iter()
        .enumerate()
        .flat_map(|(g, (p, m))| {
            [
                (group::Letter::new(g, false), *p),
                (group::Letter::new(g, true), *m),
            ]
        })
        .collect();
    let mut threshold = 0.5;
    let mut best = BoundaryArcSet::from_arcs(letters.iter().map(|(_, h)| h.arc()).collect());
    while best.measure() > budget {
        let mut leaves = Vec::new();
        // (prefix map, last letter, arc of prefix·H_last)
        let mut stack: Vec<(DiskAutomorphism, group::Letter, CircleArc)> = letters
            .iter()
            .map(|(l, h)| (DiskAutomorphism::identity(), *l, h.arc()))
            .collect();
        let mut overflow = false;
        while let Some((w, last, arc)) = stack.pop() {
            if arc.length <= threshold {
                leaves.push(arc);
                continue;
            }
            if leaves.len() + stack.len() > max_nodes {
                overflow = true;
                break;
            }
            let wl = w.compose(&spec.letter_map(last));
            for (l, h) in &letters {
                if *l == last.inv() {
                    continue;
                }
                stack.push((wl, *l, h.map_by(&wl).arc()));
            }
        }
        if overflow {
            break;
        }
        best = BoundaryArcSet::from_arcs(leaves);
        threshold /= 2.0;
    }
    Ok(best)
}

/// A closed set of measure exactly `2π − removal` avoiding the limit-set
/// cover.
fn level_set(cover: &BoundaryArcSet, removal: f64) -> BoundaryArcSet {
    let mut removed = cover.clone();
    let count = removed.arcs().len().max(1);
    let extra = removal - removed.measure();
    if extra > 0.0 {
        removed = removed.padded(extra / (2.0 * count as f64));
    }
    let residual = removal - removed.measure();
    if residual > 0.0 {
        let start = removed.largest_arc().map(|a| a.end()).unwrap_or(0.0);
        removed = removed.union(&removed.complement().leading_measure(start, residual));
    }
    removed.complement()
}

fn free_arcs(spec: &FuchsianGroupSpec) -> Result<BoundaryArcSet, ConstructionError> {
    let mut used = Vec::new();
    for g in spec.generators() {
        let (p, m) = g.half_planes()?;
        used.push(p.arc());
        used.push(m.arc());
    }
    Ok(BoundaryArcSet::from_arcs(used).complement())
}

/// Runs the staged construction up to `stages` generators.
///
/// Stage 1 uses the basic hyperbolic element.  Stage `j ≥ 2` places a new
/// generator at the midpoint of the largest free boundary arc, spends
/// exactly `δ_j` of every existing level around that anchor, halves `ε`
/// until the hypotheses hold and every existing level re-certifies, and then
/// opens level `j` of measure `2π − 1/j` away from the limit set.
pub fn fullmeasure_construct(
    stages: usize,
    deltas: &[f64],
    config: &ConstructionConfig,
) -> Result<ConstructionState, ConstructionError> {
    if stages == 0 {
        return Err(ConstructionError::NoStages);
    }
    let deltas: Vec<f64> = if deltas.is_empty() {
        default_deltas(stages)
    } else {
        deltas.to_vec()
    };
    if deltas.len() + 1 < stages {
        return Err(ConstructionError::Infeasible {
            stage: deltas.len() + 2,
            reason: "delta schedule is too short".into(),
        });
    }
    let deltas = deltas[..stages - 1].to_vec();
    if let Some(d) = deltas.iter().find(|d| !(**d > 0.0)) {
        return Err(ConstructionError::Infeasible {
            stage: 0,
            reason: format!("delta {d} must be positive"),
        });
    }
    for i in 1..=stages {
        let spent: f64 = deltas.iter().skip(i.saturating_sub(1)).sum();
        if TAU - 1.0 / i as f64 - spent <= 0.0 {
            return Err(ConstructionError::Infeasible {
                stage: i,
                reason: "level measure would be nonpositive".into(),
            });
        }
    }

    let (plus, minus) = strip_half_planes(config.base_r)?;
    let first =
        Generator::new("g1", DiskAutomorphism::hyperbolic(config.base_r)?).with_strip(plus, minus);
    let mut state = ConstructionState {
        group: FuchsianGroupSpec::new(vec![first])?,
        levels: Vec::new(),
        deltas: Vec::new(),
        epsilons: Vec::new(),
        anchors: Vec::new(),
        config: config.clone(),
    };
    open_level(&mut state, 1)?;

    for j in 2..=stages {
        let delta = deltas[j - 2];
        let anchor_arc = free_arcs(&state.group)?.largest_arc().ok_or_else(|| {
            ConstructionError::Infeasible {
                stage: j,
                reason: "no free boundary arc".into(),
            }
        })?;
        let anchor = BoundaryPoint::new(anchor_arc.midpoint());
        // D_ε(a) meets the circle within angle ≈ ε of a; keep it in the window
        let mut eps = 0.45 * delta.min(anchor_arc.length);
        let mut accepted = None;
        for _ in 0..config.max_halvings {
            if let Some(found) = try_stage(&state, anchor, eps, delta, j)? {
                accepted = Some(found);
                break;
            }
            eps /= 2.0;
        }
        let (spec, levels) = accepted.ok_or_else(|| ConstructionError::Infeasible {
            stage: j,
            reason: "no ε passed the hypotheses and recertification".into(),
        })?;
        state.group = spec;
        state.levels = levels;
        state.deltas.push(delta);
        state.epsilons.push(eps);
        state.anchors.push(anchor.angle());
        open_level(&mut state, j)?;
    }
    Ok(state)
}

/// One attempt at stage `j` with the given `ε`; `None` asks for a smaller one.
fn try_stage(
    state: &ConstructionState,
    anchor: BoundaryPoint,
    eps: f64,
    delta: f64,
    j: usize,
) -> Result<Option<(FuchsianGroupSpec, Vec<Level>)>, ConstructionError> {
    let config = &state.config;
    let Ok(g) = next_generator(&state.group, anchor, eps, config.base_r, format!("g{j}")) else {
        return Ok(None);
    };
    if !limitgroup_hypotheses(&state.group, &g, config.depth, config.margin)?.passed() {
        return Ok(None);
    }
    let (p, m) = g.half_planes()?;
    let mut levels = Vec::with_capacity(state.levels.len());
    for l in &state.levels {
        let r = (l.radius * (1.0 + 1e-3)).min(0.999);
        let Some(shadow) = translate_shadow(&state.group, &[p, m], &l.arcs, r, MAX_SHADOW_NODES)?
        else {
            return Ok(None);
        };
        if shadow.measure() >= delta {
            return Ok(None);
        }
        // spend the rest of δ from the window around the anchor
        let rest = l
            .arcs
            .subtract(&shadow)
            .leading_measure(anchor.angle() - delta / 2.0, delta - shadow.measure());
        let removed = shadow.union(&rest);
        if (removed.measure() - delta).abs() > 1e-12 {
            return Err(ConstructionError::Infeasible {
                stage: j,
                reason: format!("level {} has less than δ = {delta} left", l.index),
            });
        }
        levels.push(Level {
            index: l.index,
            arcs: l.arcs.subtract(&removed),
            radius: l.radius,
        });
    }
    let mut spec = state.group.clone();
    spec.push(g)?;
    let cert = PingPongCertifier::new(&spec)?;
    let ok = levels
        .iter()
        .all(|l| level_certified_exact(&cert, &l.arcs, l.radius, config.samples_per_arc));
    Ok(ok.then_some((spec, levels)))
}

fn open_level(state: &mut ConstructionState, j: usize) -> Result<(), ConstructionError> {
    let removal = 1.0 / j as f64;
    let cover = limit_set_cover(&state.group, 0.5 * removal, 200_000)?;
    if cover.measure() > removal {
        return Err(ConstructionError::Infeasible {
            stage: j,
            reason: format!(
                "limit-set cover has measure {} > {removal}",
                cover.measure()
            ),
        });
    }
    let arcs = level_set(&cover, removal);
    let cert = PingPongCertifier::new(&state.group)?;
    let sigma = common_sigma(&cert, &arcs.sample(state.config.samples_per_arc));
    if !(sigma > 0.0) {
        return Err(ConstructionError::Infeasible {
            stage: j,
            reason: "no injective horocycle radius on the new level".into(),
        });
    }
    state.levels.push(Level {
        index: j,
        arcs,
        radius: state.config.radius_safety * sigma,
    });
    Ok(())
}

/// Pairs identified inside the ping-pong domain, at the given depth.
pub fn stage_violations(
    state: &ConstructionState,
    depth: usize,
    samples: &[Complex],
) -> Result<Vec<group::Violation>, ConstructionError> {
    let ball = word_ball(&state.group, depth)?;
    Ok(group::fundamental_domain_violations(
        &ball,
        &state.domain()?,
        samples,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moebius::Classification;

    #[test]
    fn arc_set_bookkeeping() {
        let s =
            BoundaryArcSet::from_arcs(vec![CircleArc::new(-0.5, 1.0), CircleArc::new(0.2, 0.5)]);
        assert!((s.measure() - 1.2).abs() < 1e-15);
        assert_eq!(s.arcs().len(), 1);
        assert!(s.contains(0.0) && s.contains(TAU - 0.4) && !s.contains(1.0));
        let c = s.complement();
        assert!((c.measure() + s.measure() - TAU).abs() < 1e-15);
        let cut = c.leading_measure(1.0, 0.3);
        assert!((cut.measure() - 0.3).abs() < 1e-15);
        assert!(cut.contains(1.1) && !cut.contains(1.4));
        // walking past the end of an arc continues on the next one
        let two =
            BoundaryArcSet::from_arcs(vec![CircleArc::new(1.0, 0.1), CircleArc::new(2.0, 0.5)]);
        let walk = two.leading_measure(1.05, 0.2);
        assert!((walk.measure() - 0.2).abs() < 1e-15);
        assert!(walk.contains(2.1) && !walk.contains(2.2));
        assert!(two.intersects(&CircleArc::new(1.05, 0.01)));
        assert!(!two.intersects(&CircleArc::new(1.2, 0.5)));
        assert!(BoundaryArcSet::full().complement().is_empty());
    }

    #[test]
    fn next_generator_squeezes_into_window() {
        let g = next_generator(
            &FuchsianGroupSpec::trivial(),
            BoundaryPoint::new(0.0),
            0.1,
            0.5,
            "g1",
        )
        .unwrap();
        assert_eq!(g.map.classify(), Classification::Hyperbolic);
        let (p, m) = g.strip.unwrap();
        for h in [p, m] {
            let (u, v) = h.geodesic().endpoints();
            for e in [u, v] {
                assert!((e.to_complex() - Complex::new(1.0, 0.0)).norm() <= 0.1);
            }
        }
        let mut spec = FuchsianGroupSpec::new(vec![g]).unwrap();
        let g2 = next_generator(&spec, BoundaryPoint::new(PI), 0.1, 0.5, "g2").unwrap();
        spec.push(g2).unwrap();
        let ball = word_ball(&spec, 6).unwrap();
        let dom = PingPongDomain::of(&spec).unwrap();
        let samples: Vec<Complex> = (0..500)
            .map(|k| {
                Complex::from_polar(0.999 * ((k as f64 + 0.5) / 500.0).sqrt(), k as f64 * 2.399)
            })
            .collect();
        assert!(group::fundamental_domain_violations(&ball, &dom, &samples).is_empty());
    }

    #[test]
    fn next_generator_rejects_overlap() {
        let spec = FuchsianGroupSpec::cyclic(0.5).unwrap();
        let err = next_generator(&spec, BoundaryPoint::new(0.0), 0.1, 0.5, "g2").unwrap_err();
        assert!(matches!(err, ConstructionError::Overlap { .. }));
    }

    #[test]
    fn limitgroup_checks() {
        let spec = FuchsianGroupSpec::cyclic(0.5).unwrap();
        let g = next_generator(&spec, BoundaryPoint::new(PI / 2.0), 0.05, 0.5, "g2").unwrap();
        let rep = limitgroup_hypotheses(&spec, &g, 6, 1e-3).unwrap();
        assert!(rep.passed(), "{rep:?}");
        let same = spec.generators()[0].clone();
        assert!(!limitgroup_hypotheses(&spec, &same, 6, 1e-3)
            .unwrap()
            .passed());
    }

    #[test]
    fn coverage() {
        let samples: Vec<Complex> = (0..300)
            .map(|k| {
                Complex::from_polar(0.99 * ((k as f64 + 0.5) / 300.0).sqrt(), k as f64 * 2.399)
            })
            .collect();
        assert_eq!(
            coverage_check(&FuchsianGroupSpec::trivial(), 3, &samples).unwrap(),
            1.0
        );
        assert!(
            coverage_check(&FuchsianGroupSpec::cyclic(0.6).unwrap(), 12, &samples).unwrap() >= 0.99
        );
    }

    #[test]
    fn single_stage() {
        assert_eq!(
            fullmeasure_construct(0, &[], &ConstructionConfig::default()).unwrap_err(),
            ConstructionError::NoStages
        );
        let st = fullmeasure_construct(1, &[], &ConstructionConfig::default()).unwrap();
        assert_eq!(st.levels.len(), 1);
        let l = &st.levels[0];
        assert!((l.arcs.measure() - (TAU - 1.0)).abs() < 1e-12);
        assert!(!l.arcs.contains(0.0) && !l.arcs.contains(PI));
        assert!(l.radius > 0.0);
    }
}

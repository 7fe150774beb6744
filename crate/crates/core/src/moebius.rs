//! Möbius geometry of the unit disk.
//!
//! Automorphisms are stored as normalized SU(1,1) pairs `(a, b)` acting by
//! `z ↦ (a·z + b) / (conj(b)·z + conj(a))` with `|a|² − |b|² = 1`.  Distances
//! use the convention `d_P = artanh(d_M)`, where `d_M(z, w) = |z − w| / |1 − conj(w)·z|`
//! is the pseudo-hyperbolic (Möbius) distance; with this convention the
//! translation length of `(a, b)` is `acosh |Re a|`.
//!
//! Geodesics and half-planes additionally carry a Minkowski-space normal so
//! that side tests and geodesic distances are exact closed forms.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::ops::Mul;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Complex = Complex64;

/// Normalization defect tolerated on `|a|² − |b|² = 1`.
pub const NORMALIZATION_TOL: f64 = 1e-12;
/// Default tolerance for projective equality of automorphisms.
pub const PROJECTIVE_TOL: f64 = 1e-9;
/// Tolerance on `|Re a| − 1` used by [`DiskAutomorphism::classify`].
pub const CLASSIFY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("expected a hyperbolic element, found {0:?}")]
    NotHyperbolic(Classification),
    #[error("degenerate input: {0}")]
    Degenerate(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Classification {
    Identity,
    Elliptic,
    Parabolic,
    Hyperbolic,
}

fn check_interior(z: Complex, what: &str) -> Result<(), GeometryError> {
    if !(z.norm_sqr() < 1.0) {
        return Err(GeometryError::Domain(format!(
            "{what} = {z} is not inside the unit disk"
        )));
    }
    Ok(())
}

/// A holomorphic automorphism of the unit disk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiskAutomorphism {
    a: Complex,
    b: Complex,
}

impl DiskAutomorphism {
    /// Builds an automorphism from an arbitrary positive-determinant pair,
    /// rescaling it to the normalized representative.
    pub fn new(a: Complex, b: Complex) -> Result<Self, GeometryError> {
        let det = a.norm_sqr() - b.norm_sqr();
        if !(det > 0.0) || !det.is_finite() {
            return Err(GeometryError::Domain(format!(
                "|a|² − |b|² = {det} must be positive"
            )));
        }
        let s = det.sqrt().recip();
        Ok(Self { a: a * s, b: b * s })
    }

    /// Accepts an already normalized pair, rejecting it if the defect
    /// exceeds `tol`.
    pub fn from_normalized(a: Complex, b: Complex, tol: f64) -> Result<Self, GeometryError> {
        let defect = (a.norm_sqr() - b.norm_sqr() - 1.0).abs();
        if defect > tol {
            return Err(GeometryError::Domain(format!(
                "normalization defect {defect:e} exceeds {tol:e}"
            )));
        }
        Ok(Self { a, b })
    }

    pub fn identity() -> Self {
        Self {
            a: Complex::new(1.0, 0.0),
            b: Complex::new(0.0, 0.0),
        }
    }

    /// `z ↦ e^{iθ}·z`.
    pub fn rotation(theta: f64) -> Self {
        Self {
            a: Complex::from_polar(1.0, theta / 2.0),
            b: Complex::new(0.0, 0.0),
        }
    }

    /// `z ↦ (z + p) / (1 + conj(p)·z)`, the transvection sending 0 to `p`.
    pub fn translation(p: Complex) -> Result<Self, GeometryError> {
        check_interior(p, "translation target")?;
        let s = (1.0 - p.norm_sqr()).sqrt().recip();
        Ok(Self {
            a: Complex::new(s, 0.0),
            b: p * s,
        })
    }

    /// The basic hyperbolic element `ζ ↦ (ζ + r) / (1 + r·ζ)`.
    pub fn hyperbolic(r: f64) -> Result<Self, GeometryError> {
        if !(r > 0.0 && r < 1.0) {
            return Err(GeometryError::Domain(format!("r = {r} must lie in (0, 1)")));
        }
        let s = (1.0 - r * r).sqrt().recip();
        Ok(Self {
            a: Complex::new(s, 0.0),
            b: Complex::new(r * s, 0.0),
        })
    }

    /// The basic hyperbolic element moving 0 to `tanh(x)`, built from `x`
    /// so that long translations do not round `r` to 1.
    pub fn hyperbolic_by_displacement(x: f64) -> Result<Self, GeometryError> {
        let (a, b) = (x.cosh(), x.sinh());
        if !(x > 0.0 && a.is_finite()) {
            return Err(GeometryError::Domain(format!(
                "displacement {x} must be positive and finite"
            )));
        }
        Ok(Self {
            a: Complex::new(a, 0.0),
            b: Complex::new(b, 0.0),
        })
    }

    /// The basic hyperbolic element rotated so that its attracting fixed
    /// point sits at angle `axis`.
    pub fn hyperbolic_along(axis: f64, r: f64) -> Result<Self, GeometryError> {
        Ok(Self::hyperbolic(r)?.conjugate_by(&Self::rotation(axis)))
    }

    pub fn a(&self) -> Complex {
        self.a
    }

    pub fn b(&self) -> Complex {
        self.b
    }

    pub fn apply(&self, z: Complex) -> Complex {
        (self.a * z + self.b) / (self.b.conj() * z + self.a.conj())
    }

    pub fn apply_boundary(&self, p: BoundaryPoint) -> BoundaryPoint {
        BoundaryPoint::from_complex(self.apply(p.to_complex()))
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Self) -> Self {
        let a = self.a * other.a + self.b * other.b.conj();
        let b = self.a * other.b + self.b * other.a.conj();
        // The exact determinant is 1.  Rescaling only helps while |a|² − |b|²
        // is computed without heavy cancellation.
        let scale = a.norm_sqr();
        if scale < 1e8 {
            let det = scale - b.norm_sqr();
            let s = det.sqrt().recip();
            Self { a: a * s, b: b * s }
        } else {
            Self { a, b }
        }
    }

    pub fn inverse(&self) -> Self {
        Self {
            a: self.a.conj(),
            b: -self.b,
        }
    }

    /// `φ ∘ self ∘ φ⁻¹`; fixed points are transported by `φ`.
    pub fn conjugate_by(&self, phi: &Self) -> Self {
        phi.compose(self).compose(&phi.inverse())
    }

    /// `γ(0) = b / conj(a)`.
    pub fn origin_image(&self) -> Complex {
        self.b / self.a.conj()
    }

    /// `1 − |γ(0)|² = 1/|a|²`, exact even when `γ(0)` rounds onto the circle.
    pub fn origin_defect(&self) -> f64 {
        self.a.norm_sqr().recip()
    }

    /// `d_P(0, γ(0)) = acosh |a|`.
    pub fn origin_poincare_displacement(&self) -> f64 {
        self.a.norm().max(1.0).acosh()
    }

    pub fn normalization_defect(&self) -> f64 {
        (self.a.norm_sqr() - self.b.norm_sqr() - 1.0).abs()
    }

    /// Absolute projective distance: max coefficient difference, minimized
    /// over the sign of the representative.
    pub fn projective_distance(&self, other: &Self) -> f64 {
        let plus = (self.a - other.a).norm().max((self.b - other.b).norm());
        let minus = (self.a + other.a).norm().max((self.b + other.b).norm());
        plus.min(minus)
    }

    /// Projective distance scaled by the coefficient size, which keeps the
    /// comparison meaningful for long words whose coefficients are large.
    pub fn relative_projective_distance(&self, other: &Self) -> f64 {
        let scale = self.a.norm().max(other.a.norm()).max(1.0);
        self.projective_distance(other) / scale
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.relative_projective_distance(other) <= tol
    }

    pub fn is_identity(&self, tol: f64) -> bool {
        self.projective_distance(&Self::identity()) <= tol
    }

    /// Half the trace.
    pub fn half_trace(&self) -> f64 {
        self.a.re
    }

    pub fn classify(&self) -> Classification {
        let t = self.a.re.abs();
        if t > 1.0 + CLASSIFY_TOL {
            Classification::Hyperbolic
        } else if t < 1.0 - CLASSIFY_TOL {
            Classification::Elliptic
        } else if self.is_identity(CLASSIFY_TOL.sqrt()) {
            Classification::Identity
        } else {
            Classification::Parabolic
        }
    }

    /// Poincaré translation length `acosh |Re a|` of a hyperbolic element.
    pub fn translation_length(&self) -> f64 {
        self.a.re.abs().max(1.0).acosh()
    }

    /// The two boundary fixed points, attracting first.
    pub fn fixed_points(&self) -> Result<(BoundaryPoint, BoundaryPoint), GeometryError> {
        let class = self.classify();
        if class != Classification::Hyperbolic {
            return Err(GeometryError::NotHyperbolic(class));
        }
        // conj(b)·z² − 2i·Im(a)·z − b = 0
        let root = (self.a.re * self.a.re - 1.0).sqrt();
        let bc = self.b.conj();
        let i_im = Complex::new(0.0, self.a.im);
        let z1 = (i_im + root) / bc;
        let z2 = (i_im - root) / bc;
        // multiplier at a fixed point is 1 / (conj(b)·z + conj(a))²
        let m1 = (bc * z1 + self.a.conj()).norm();
        let (p1, p2) = (
            BoundaryPoint::from_complex(z1),
            BoundaryPoint::from_complex(z2),
        );
        if m1 > 1.0 {
            Ok((p1, p2))
        } else {
            Ok((p2, p1))
        }
    }

    /// `1 − d_M(z, γz)²`, evaluated without cancellation:
    /// `(1 − |z|²)² / (|conj(b)·z + conj(a)|² · |1 − conj(γz)·z|²)`.
    pub fn displacement_defect(&self, z: Complex) -> f64 {
        let den = self.b.conj() * z + self.a.conj();
        let w = (self.a * z + self.b) / den;
        let one_minus = 1.0 - z.norm_sqr();
        let cross = (Complex::new(1.0, 0.0) - w.conj() * z).norm_sqr();
        (one_minus * one_minus) / (den.norm_sqr() * cross)
    }

    /// `d_M(z, γz)`.
    pub fn moebius_displacement(&self, z: Complex) -> f64 {
        (1.0 - self.displacement_defect(z)).max(0.0).sqrt()
    }
}

impl Mul for DiskAutomorphism {
    type Output = DiskAutomorphism;

    fn mul(self, rhs: Self) -> Self {
        self.compose(&rhs)
    }
}

impl fmt::Display for DiskAutomorphism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[a = {}, b = {}]", self.a, self.b)
    }
}

/// A point of the unit circle, stored by its angle in `[0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct BoundaryPoint {
    angle: f64,
}

impl BoundaryPoint {
    pub fn new(angle: f64) -> Self {
        let mut a = angle.rem_euclid(TAU);
        if a >= TAU {
            a = 0.0;
        }
        Self { angle: a }
    }

    pub fn from_complex(z: Complex) -> Self {
        Self::new(z.im.atan2(z.re))
    }

    pub fn angle(&self) -> f64 {
        self.angle
    }

    pub fn to_complex(&self) -> Complex {
        Complex::from_polar(1.0, self.angle)
    }

    /// Angular distance in `[0, π]`.
    pub fn angular_distance(&self, other: &Self) -> f64 {
        angular_distance(self.angle, other.angle)
    }
}

pub fn angular_distance(x: f64, y: f64) -> f64 {
    let d = (x - y).rem_euclid(TAU);
    d.min(TAU - d)
}

/// `d_M(z, w) = |z − w| / |1 − conj(w)·z|`.
pub fn moebius_distance(z: Complex, w: Complex) -> Result<f64, GeometryError> {
    check_interior(z, "z")?;
    check_interior(w, "w")?;
    Ok(((z - w) / (Complex::new(1.0, 0.0) - w.conj() * z)).norm())
}

/// `d_P(z, w) = ½·log((1 + d_M)/(1 − d_M))`.
pub fn poincare_distance(z: Complex, w: Complex) -> Result<f64, GeometryError> {
    check_interior(z, "z")?;
    check_interior(w, "w")?;
    let d = moebius_distance(z, w)?;
    // 1 − d_M² in cancellation-free form
    let defect = (1.0 - z.norm_sqr()) * (1.0 - w.norm_sqr())
        / (Complex::new(1.0, 0.0) - w.conj() * z).norm_sqr();
    Ok(poincare_from_defect(d, defect))
}

/// `artanh(d)` given `d` and `1 − d²`.
pub(crate) fn poincare_from_defect(d: f64, defect: f64) -> f64 {
    if defect <= 0.0 {
        return f64::INFINITY;
    }
    (1.0 + d).ln() - 0.5 * defect.ln()
}

pub fn moebius_to_poincare(d: f64) -> f64 {
    d.atanh()
}

pub fn poincare_to_moebius(p: f64) -> f64 {
    p.tanh()
}

// Minkowski space R^{2,1} with ⟨u, v⟩ = u0·v0 + u1·v1 − u2·v2.
pub(crate) type Minkowski = [f64; 3];

pub(crate) fn mink_dot(u: &Minkowski, v: &Minkowski) -> f64 {
    u[0] * v[0] + u[1] * v[1] - u[2] * v[2]
}

pub(crate) fn hyperboloid_point(z: Complex) -> Minkowski {
    let s = 1.0 - z.norm_sqr();
    [2.0 * z.re / s, 2.0 * z.im / s, (1.0 + z.norm_sqr()) / s]
}

fn null_vector(p: BoundaryPoint) -> Minkowski {
    let (s, c) = p.angle.sin_cos();
    [c, s, 1.0]
}

fn normal_through(p: BoundaryPoint, q: BoundaryPoint) -> Minkowski {
    let u = null_vector(p);
    let v = null_vector(q);
    let cross = [
        u[1] * v[2] - u[2] * v[1],
        u[2] * v[0] - u[0] * v[2],
        u[0] * v[1] - u[1] * v[0],
    ];
    let n = [cross[0], cross[1], -cross[2]];
    let norm = mink_dot(&n, &n).sqrt();
    [n[0] / norm, n[1] / norm, n[2] / norm]
}

/// Euclidean realisation of a geodesic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GeodesicShape {
    /// Arc of the circle `|z − center| = radius`, orthogonal to the unit circle.
    Circle { center: Complex, radius: f64 },
    /// A diameter along `±direction`.
    Diameter { direction: Complex },
}

/// A complete geodesic, given by its two ideal endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Geodesic {
    endpoints: (BoundaryPoint, BoundaryPoint),
}

impl Geodesic {
    pub fn new(p: BoundaryPoint, q: BoundaryPoint) -> Result<Self, GeometryError> {
        if p.angular_distance(&q) < 1e-14 {
            return Err(GeometryError::Degenerate(format!(
                "geodesic endpoints coincide at angle {}",
                p.angle()
            )));
        }
        let endpoints = if p.angle() <= q.angle() {
            (p, q)
        } else {
            (q, p)
        };
        Ok(Self { endpoints })
    }

    pub fn endpoints(&self) -> (BoundaryPoint, BoundaryPoint) {
        self.endpoints
    }

    pub(crate) fn normal(&self) -> Minkowski {
        normal_through(self.endpoints.0, self.endpoints.1)
    }

    pub fn shape(&self) -> GeodesicShape {
        let p = self.endpoints.0.to_complex();
        let q = self.endpoints.1.to_complex();
        let s = p + q;
        if s.norm() < 1e-12 {
            return GeodesicShape::Diameter { direction: p };
        }
        let center = s * (2.0 / s.norm_sqr());
        GeodesicShape::Circle {
            center,
            radius: (center.norm_sqr() - 1.0).max(0.0).sqrt(),
        }
    }

    /// Poincaré distance from `z` to the geodesic.
    pub fn distance_to_point(&self, z: Complex) -> f64 {
        let x = hyperboloid_point(z);
        0.5 * mink_dot(&x, &self.normal()).abs().asinh()
    }

    /// Poincaré distance between two geodesics; zero when they meet or are
    /// asymptotic.
    pub fn distance_to(&self, other: &Geodesic) -> f64 {
        let c = mink_dot(&self.normal(), &other.normal()).abs();
        if c <= 1.0 {
            0.0
        } else {
            0.5 * c.acosh()
        }
    }

    pub fn map_by(&self, g: &DiskAutomorphism) -> Geodesic {
        let (p, q) = self.endpoints;
        Geodesic::new(g.apply_boundary(p), g.apply_boundary(q))
            .expect("automorphisms keep endpoints distinct")
    }

    /// Point where the geodesic meets the ray through `direction`, if the
    /// Euclidean circle is centered on that ray.
    pub fn closest_point_to_origin(&self) -> Complex {
        match self.shape() {
            GeodesicShape::Diameter { .. } => Complex::new(0.0, 0.0),
            GeodesicShape::Circle { center, radius } => {
                center * ((center.norm() - radius) / center.norm())
            }
        }
    }

    /// Polyline approximation of the Euclidean arc inside the disk.
    pub fn polyline(&self, n: usize) -> Vec<Complex> {
        let (p, q) = self.endpoints;
        let (pz, qz) = (p.to_complex(), q.to_complex());
        match self.shape() {
            GeodesicShape::Diameter { .. } => (0..=n)
                .map(|k| pz + (qz - pz) * (k as f64 / n as f64))
                .collect(),
            GeodesicShape::Circle { center, radius } => {
                let t0 = (pz - center).arg();
                let mut dt = (qz - center).arg() - t0;
                // take the branch that stays inside the unit disk
                if dt > PI {
                    dt -= TAU;
                } else if dt < -PI {
                    dt += TAU;
                }
                (0..=n)
                    .map(|k| center + Complex::from_polar(radius, t0 + dt * k as f64 / n as f64))
                    .collect()
            }
        }
    }
}

/// An arc of the unit circle running counter-clockwise from `start`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircleArc {
    pub start: f64,
    pub length: f64,
}

impl CircleArc {
    pub fn new(start: f64, length: f64) -> Self {
        Self {
            start: start.rem_euclid(TAU),
            length,
        }
    }

    pub fn centered(mid: f64, length: f64) -> Self {
        Self::new(mid - length / 2.0, length)
    }

    pub fn end(&self) -> f64 {
        (self.start + self.length).rem_euclid(TAU)
    }

    pub fn midpoint(&self) -> f64 {
        (self.start + self.length / 2.0).rem_euclid(TAU)
    }

    pub fn contains_angle(&self, angle: f64) -> bool {
        (angle - self.start).rem_euclid(TAU) <= self.length
    }

    /// Whether the two closed arcs share no point.
    pub fn disjoint(&self, other: &CircleArc) -> bool {
        !(self.contains_angle(other.start)
            || other.contains_angle(self.start)
            || self.contains_angle(other.end())
            || other.contains_angle(self.end()))
    }

    /// Angular gap between two disjoint arcs (zero when they meet).
    pub fn gap(&self, other: &CircleArc) -> f64 {
        if !self.disjoint(other) {
            return 0.0;
        }
        let g1 = (other.start - self.end()).rem_euclid(TAU);
        let g2 = (self.start - other.end()).rem_euclid(TAU);
        g1.min(g2)
    }
}

/// The closed region of the disk cut off by a geodesic, on the side of the
/// boundary arc it subtends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HalfPlane {
    arc: CircleArc,
}

impl HalfPlane {
    pub fn new(arc: CircleArc) -> Result<Self, GeometryError> {
        if !(arc.length > 1e-14 && arc.length < TAU - 1e-14) {
            return Err(GeometryError::Degenerate(format!(
                "half-plane arc length {} is outside (0, 2π)",
                arc.length
            )));
        }
        Ok(Self { arc })
    }

    pub fn arc(&self) -> CircleArc {
        self.arc
    }

    pub fn geodesic(&self) -> Geodesic {
        Geodesic::new(
            BoundaryPoint::new(self.arc.start),
            BoundaryPoint::new(self.arc.end()),
        )
        .expect("arc endpoints are distinct")
    }

    /// Minkowski normal pointing into the half-plane.
    pub(crate) fn inward_normal(&self) -> Minkowski {
        let n = self.geodesic().normal();
        let mid = null_vector(BoundaryPoint::new(self.arc.midpoint()));
        if mink_dot(&mid, &n) >= 0.0 {
            n
        } else {
            [-n[0], -n[1], -n[2]]
        }
    }

    /// Signed side value: positive inside.
    pub fn side(&self, z: Complex) -> f64 {
        mink_dot(&hyperboloid_point(z), &self.inward_normal())
    }

    pub fn contains(&self, z: Complex) -> bool {
        self.side(z) > 0.0
    }

    pub fn contains_origin(&self) -> bool {
        self.arc.length >= PI
    }

    /// Poincaré distance from the origin to the bounding geodesic.
    pub fn origin_clearance(&self) -> f64 {
        self.geodesic().distance_to_point(Complex::new(0.0, 0.0))
    }

    /// The Euclidean disk whose intersection with the unit disk is this
    /// half-plane, when the arc is shorter than a half circle.
    pub fn euclidean_disk(&self) -> Option<EuclideanDisk> {
        if self.arc.length >= PI {
            return None;
        }
        let half = 0.5 * self.arc.length;
        Some(EuclideanDisk {
            center: Complex::from_polar(1.0 / half.cos(), self.arc.midpoint()),
            radius: half.tan(),
        })
    }

    pub fn map_by(&self, g: &DiskAutomorphism) -> HalfPlane {
        let s = g.apply_boundary(BoundaryPoint::new(self.arc.start)).angle();
        let e = g.apply_boundary(BoundaryPoint::new(self.arc.end())).angle();
        let mut length = (e - s).rem_euclid(TAU);
        if length > PI {
            // rounding can flip an arc of a few ulps into nearly the whole circle
            let m = g
                .apply_boundary(BoundaryPoint::new(self.arc.midpoint()))
                .angle();
            if !(CircleArc { start: s, length }).contains_angle(m) {
                length = 0.0;
            }
        }
        HalfPlane {
            arc: CircleArc { start: s, length },
        }
    }

    pub fn disjoint(&self, other: &HalfPlane) -> bool {
        self.arc.disjoint(&other.arc)
    }
}

/// The two boundary geodesics `(l₊, l₋)` of the fundamental strip of the
/// basic hyperbolic element with parameter `r`.
pub fn strip_geodesics(r: f64) -> Result<(Geodesic, Geodesic), GeometryError> {
    let (plus, minus) = strip_half_planes(r)?;
    Ok((plus.geodesic(), minus.geodesic()))
}

/// The complementary half-planes of the fundamental strip: `(D₊, D₋)`
/// around `+1` and `−1`.  The basic hyperbolic element maps the exterior of
/// `D₋` onto the closure of `D₊`.
pub fn strip_half_planes(r: f64) -> Result<(HalfPlane, HalfPlane), GeometryError> {
    if !(r > 0.0 && r < 1.0) {
        return Err(GeometryError::Domain(format!("r = {r} must lie in (0, 1)")));
    }
    let half = PI / 2.0 - r.asin();
    Ok((
        HalfPlane::new(CircleArc::centered(0.0, 2.0 * half))?,
        HalfPlane::new(CircleArc::centered(PI, 2.0 * half))?,
    ))
}

/// Real-axis crossing `(1 − √(1 − r²))/r` of `l₊`.
pub fn strip_crossing(r: f64) -> f64 {
    (1.0 - (1.0 - r * r).sqrt()) / r
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EuclideanDisk {
    pub center: Complex,
    pub radius: f64,
}

impl EuclideanDisk {
    pub fn contains(&self, z: Complex) -> bool {
        (z - self.center).norm() < self.radius
    }

    /// Open disks intersect.
    pub fn intersects(&self, other: &EuclideanDisk) -> bool {
        (self.center - other.center).norm() < self.radius + other.radius
    }

    /// Image under a disk automorphism, valid whenever the pole
    /// `−conj(a)/conj(b)` lies outside the closed disk.
    pub fn image_under(&self, g: &DiskAutomorphism) -> Option<EuclideanDisk> {
        let (a, b) = (g.a(), g.b());
        if b.norm() < 1e-300 {
            return Some(EuclideanDisk {
                center: g.apply(self.center),
                radius: self.radius,
            });
        }
        let pole = -a.conj() / b.conj();
        let offset = pole - self.center;
        if offset.norm() <= self.radius {
            return None;
        }
        // the reflection of the pole in the circle is sent to the image center
        let mirror = self.center + self.radius * self.radius / offset.conj();
        let center = g.apply(mirror);
        let far = self.center - offset * (self.radius / offset.norm());
        Some(EuclideanDisk {
            center,
            radius: (g.apply(far) - center).norm(),
        })
    }

    pub fn boundary_points(&self, n: usize) -> Vec<Complex> {
        (0..n)
            .map(|k| self.center + Complex::from_polar(self.radius, TAU * k as f64 / n as f64))
            .collect()
    }
}

/// The horodisk `D_r((1 − r)·ζ)`, internally tangent to the circle at `ζ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Horocycle {
    base: BoundaryPoint,
    radius: f64,
}

impl Horocycle {
    pub fn new(base: BoundaryPoint, radius: f64) -> Result<Self, GeometryError> {
        if !(radius > 0.0 && radius < 1.0) {
            return Err(GeometryError::Domain(format!(
                "horocycle radius {radius} must lie in (0, 1)"
            )));
        }
        Ok(Self { base, radius })
    }

    pub fn base(&self) -> BoundaryPoint {
        self.base
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn center(&self) -> Complex {
        self.base.to_complex() * (1.0 - self.radius)
    }

    pub fn disk(&self) -> EuclideanDisk {
        EuclideanDisk {
            center: self.center(),
            radius: self.radius,
        }
    }

    pub fn contains(&self, z: Complex) -> bool {
        (z - self.center()).norm() < self.radius
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex {
        Complex::new(re, im)
    }

    #[test]
    fn basic_hyperbolic() {
        let g = DiskAutomorphism::hyperbolic(0.6).unwrap();
        assert!((g.apply(c(0.0, 0.0)) - c(0.6, 0.0)).norm() < 1e-15);
        assert!((g.a().re - 1.25).abs() < 1e-15);
        assert!((g.b().re - 0.75).abs() < 1e-15);
        let (att, rep) = g.fixed_points().unwrap();
        assert!(att.angle().abs() < 1e-12);
        assert!((rep.angle() - PI).abs() < 1e-12);
        let g9 = DiskAutomorphism::hyperbolic(0.9).unwrap();
        assert!(g9.normalization_defect() < 1e-12);
        assert!(DiskAutomorphism::hyperbolic(1.0).is_err());
        assert!(DiskAutomorphism::hyperbolic(0.0).is_err());
    }

    #[test]
    fn composition() {
        let g = DiskAutomorphism::hyperbolic(0.6).unwrap();
        assert!(g.compose(&g.inverse()).is_identity(1e-14));
        let gg = g * g;
        assert!((gg.apply(c(0.0, 0.0)).re - 1.2 / 1.36).abs() < 1e-14);
        let flipped = DiskAutomorphism::from_normalized(-g.a(), -g.b(), 1e-12).unwrap();
        assert!(flipped.compose(&g).approx_eq(&gg, 1e-12));
        assert!(flipped.approx_eq(&g, 1e-15));
    }

    #[test]
    fn classification() {
        assert_eq!(
            DiskAutomorphism::hyperbolic(0.6).unwrap().classify(),
            Classification::Hyperbolic
        );
        assert_eq!(
            DiskAutomorphism::identity().classify(),
            Classification::Identity
        );
        assert_eq!(
            DiskAutomorphism::rotation(PI / 3.0).classify(),
            Classification::Elliptic
        );
        // z ↦ z + 1 on the upper half-plane, transported to the disk
        let p = DiskAutomorphism::new(c(1.0, 0.5), c(0.0, 0.5)).unwrap();
        assert_eq!(p.classify(), Classification::Parabolic);
        assert!(matches!(
            p.fixed_points(),
            Err(GeometryError::NotHyperbolic(Classification::Parabolic))
        ));
    }

    #[test]
    fn conjugated_fixed_points() {
        let g = DiskAutomorphism::hyperbolic(0.5)
            .unwrap()
            .conjugate_by(&DiskAutomorphism::rotation(PI / 2.0));
        let (p, q) = g.fixed_points().unwrap();
        assert!((p.angle() - PI / 2.0).abs() < 1e-12);
        assert!((q.angle() - 3.0 * PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn distances() {
        assert!((moebius_distance(c(0.0, 0.0), c(0.3, 0.0)).unwrap() - 0.3).abs() < 1e-15);
        let dp = poincare_distance(c(0.0, 0.0), c(0.5, 0.0)).unwrap();
        assert!((dp - 0.5 * 3f64.ln()).abs() < 1e-14);
        assert!(poincare_distance(c(1.0, 0.0), c(0.0, 0.0)).is_err());
        for (nn, n) in [(2.0f64, 4.0f64), (3.0, 9.0), (5.0, 6.0)] {
            let expected = 0.5 * (n * (2.0 - 1.0 / n) / (nn * (2.0 - 1.0 / nn))).ln();
            let got = poincare_distance(c(1.0 - 1.0 / nn, 0.0), c(1.0 - 1.0 / n, 0.0)).unwrap();
            assert!((got - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn strip_geometry() {
        let (plus, minus) = strip_geodesics(0.6).unwrap();
        let x = plus.closest_point_to_origin();
        assert!((x.re - 1.0 / 3.0).abs() < 1e-14 && x.im.abs() < 1e-14);
        assert!((minus.closest_point_to_origin().re + 1.0 / 3.0).abs() < 1e-14);
        assert!(strip_crossing(1e-6) < 1e-6);
        let g = DiskAutomorphism::hyperbolic(0.6).unwrap();
        let image = minus.map_by(&g);
        let (p, q) = image.endpoints();
        let (u, v) = plus.endpoints();
        assert!(p.angular_distance(&u) < 1e-12 && q.angular_distance(&v) < 1e-12);
    }

    #[test]
    fn strip_half_planes_ping_pong() {
        let r = 0.7;
        let g = DiskAutomorphism::hyperbolic(r).unwrap();
        let (dp, dm) = strip_half_planes(r).unwrap();
        let mapped = dm.map_by(&g);
        // exterior of D₋ goes onto the closure of D₊, so D₋ goes onto the exterior
        let ext = HalfPlane::new(CircleArc::new(dp.arc().end(), TAU - dp.arc().length)).unwrap();
        assert!((mapped.arc().start - ext.arc().start).abs() < 1e-12);
        assert!((mapped.arc().length - ext.arc().length).abs() < 1e-12);
        assert!(dp.contains(c(0.9, 0.0)) && !dp.contains(c(0.0, 0.0)));
        assert!((dp.origin_clearance() - 0.5 * g.translation_length()).abs() < 1e-12);
    }

    #[test]
    fn horocycle_membership() {
        let h = Horocycle::new(BoundaryPoint::new(0.0), 0.5).unwrap();
        assert!(h.contains(c(0.75, 0.0)));
        assert!(!h.contains(c(0.0, 0.0)));
        let h2 = Horocycle::new(BoundaryPoint::new(1.0), 0.3).unwrap();
        assert!(!h2.contains(h2.base().to_complex() * (1.0 - 2.1 * 0.3)));
    }

    #[test]
    fn disk_image_matches_sampling() {
        let g = DiskAutomorphism::new(c(1.3, 0.4), c(0.2, -0.9)).unwrap();
        let d = EuclideanDisk {
            center: c(0.1, 0.5),
            radius: 0.3,
        };
        let img = d.image_under(&g).unwrap();
        for z in d.boundary_points(64) {
            let w = g.apply(z);
            assert!(((w - img.center).norm() - img.radius).abs() < 1e-9);
        }
    }

    #[test]
    fn geodesic_distances() {
        let (plus, minus) = strip_geodesics(0.6).unwrap();
        // the strip width equals the translation length
        let g = DiskAutomorphism::hyperbolic(0.6).unwrap();
        assert!((plus.distance_to(&minus) - g.translation_length()).abs() < 1e-12);
        let d = plus.distance_to_point(c(0.0, 0.0));
        assert!((d - (1.0f64 / 3.0).atanh()).abs() < 1e-12);
    }
}

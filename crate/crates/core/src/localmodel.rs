//! Local model at a hyperbolic singular point.
//!
//! Near the singularity the foliation is spanned by `∂/∂z₁ + λ∂/∂z₂`, its
//! leaves are the curves `z ↦ (x₀eᶻ, y₀e^{λz})`, and the separatrix
//! `{z₂ = 0}` carries the annuli `A(a, b)` whose hyperbolic geometry forces
//! long loops.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::moebius::Complex;
use crate::par;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LocalModelError {
    #[error("domain error: {0}")]
    Domain(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingularModelSpec {
    pub lambda: Complex,
    pub base: (Complex, Complex),
}

impl SingularModelSpec {
    pub fn new(lambda: Complex, x0: Complex, y0: Complex) -> Result<Self, LocalModelError> {
        if lambda.norm() == 0.0 || !lambda.is_finite() {
            return Err(LocalModelError::Domain(format!(
                "λ = {lambda} must be finite and nonzero"
            )));
        }
        if x0.norm() == 0.0 && y0.norm() == 0.0 {
            return Err(LocalModelError::Domain(
                "base point is the singularity".into(),
            ));
        }
        Ok(Self {
            lambda,
            base: (x0, y0),
        })
    }

    /// `λ ∉ ℝ`, the standing hyperbolicity assumption.
    pub fn is_nonreal(&self) -> bool {
        self.lambda.im != 0.0
    }
}

/// `φ(z) = (x₀eᶻ, y₀e^{λz})`.
pub fn flow(spec: &SingularModelSpec, z: Complex) -> (Complex, Complex) {
    let (x0, y0) = spec.base;
    (x0 * z.exp(), y0 * (spec.lambda * z).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnulusSpec {
    pub inner: f64,
    pub outer: f64,
}

impl AnnulusSpec {
    pub fn new(inner: f64, outer: f64) -> Result<Self, LocalModelError> {
        if !(inner > 0.0 && outer > inner && outer.is_finite()) {
            return Err(LocalModelError::Domain(format!(
                "need 0 < a < b, got a = {inner}, b = {outer}"
            )));
        }
        Ok(Self { inner, outer })
    }

    /// `log(b/a)`.
    pub fn log_modulus(&self) -> f64 {
        (self.outer / self.inner).ln()
    }

    pub fn core_radius(&self) -> f64 {
        (self.inner * self.outer).sqrt()
    }

    pub fn contains(&self, z: Complex) -> bool {
        let s = z.norm();
        s > self.inner && s < self.outer
    }

    /// `|z|·λ_A(z)` as a function of `u = log(|z|/a)/log(b/a)`.
    fn scaled_density(&self, u: f64) -> f64 {
        PI / self.log_modulus() / (PI * u).sin()
    }
}

/// Poincaré density `λ_A(z) = (π/L) / (|z| sin(π log(|z|/a)/L))`, `L = log(b/a)`.
pub fn annulus_density(annulus: &AnnulusSpec, z: Complex) -> Result<f64, LocalModelError> {
    if !annulus.contains(z) {
        return Err(LocalModelError::Domain(format!(
            "|z| = {} is outside ({}, {})",
            z.norm(),
            annulus.inner,
            annulus.outer
        )));
    }
    let s = z.norm();
    let u = (s / annulus.inner).ln() / annulus.log_modulus();
    Ok(annulus.scaled_density(u) / s)
}

/// Trapezoidal length of a polyline in the annulus metric.
pub fn curve_length(annulus: &AnnulusSpec, points: &[Complex]) -> Result<f64, LocalModelError> {
    let dens = points
        .iter()
        .map(|z| annulus_density(annulus, *z))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(points
        .windows(2)
        .zip(dens.windows(2))
        .map(|(p, d)| (p[1] - p[0]).norm() * 0.5 * (d[0] + d[1]))
        .sum())
}

/// Composite Simpson rule with `n` (even) panels.
fn simpson(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (hi - lo) / n as f64;
    let inner: f64 = (1..n)
        .map(|k| {
            let w = if k % 2 == 1 { 4.0 } else { 2.0 };
            w * f(lo + k as f64 * h)
        })
        .sum();
    h / 3.0 * (f(lo) + f(hi) + inner)
}

/// Length of the radial segment between radii `from` and `to`.
///
/// With `u = log(s/a)/L` and `u = 1/(1 + e^{−w})` the length element becomes
/// `π u(1 − u)/sin(πu) dw`, which is smooth and bounded by 1, and Simpson's
/// rule with `panels` panels is applied in `w`.
pub fn radial_length(
    annulus: &AnnulusSpec,
    from: f64,
    to: f64,
    panels: usize,
) -> Result<f64, LocalModelError> {
    for s in [from, to] {
        if !(s > annulus.inner && s < annulus.outer) {
            return Err(LocalModelError::Domain(format!(
                "radius {s} is outside the annulus"
            )));
        }
    }
    let l = annulus.log_modulus();
    let logit = |s: f64| {
        let u = (s / annulus.inner).ln() / l;
        (u / (1.0 - u)).ln()
    };
    let (w0, w1) = (logit(from), logit(to));
    let (lo, hi) = if w0 <= w1 { (w0, w1) } else { (w1, w0) };
    let element = |w: f64| {
        let u = 1.0 / (1.0 + (-w).exp());
        PI * u * (1.0 - u) / (PI * u).sin()
    };
    Ok(simpson(element, lo, hi, panels))
}

/// Radius `s < x₀` at which the radial distance from the core circle is
/// exactly `m`: with `u = log(s/a)/L`, the distance is `−log tan(πu/2)`.
fn escape_u(m: f64) -> f64 {
    2.0 / PI * (-m).exp().atan()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindingCertificate {
    pub annulus: AnnulusSpec,
    pub x0: f64,
    /// Target length.
    pub m: f64,
    /// Winding number `N`.
    pub n: u64,
    /// Circles every escaping curve must cross, `(inner, outer)`.
    pub escape_radii: (f64, f64),
    /// Quadrature lengths from `x₀` to the escape circles.
    pub escape_lengths: (f64, f64),
    /// `2πN · min_s s·λ_A(s)`.
    pub winding_bound: f64,
    pub panels: usize,
    pub certified: bool,
}

impl WindingCertificate {
    /// Recomputes the radial lengths with `factor` times as many panels.
    pub fn refine(&self, factor: usize) -> Result<Self, LocalModelError> {
        certify(
            self.annulus,
            self.x0,
            self.m,
            self.n,
            self.escape_radii,
            self.panels * factor,
        )
    }
}

fn certify(
    annulus: AnnulusSpec,
    x0: f64,
    m: f64,
    n: u64,
    escape_radii: (f64, f64),
    panels: usize,
) -> Result<WindingCertificate, LocalModelError> {
    let inner = radial_length(&annulus, x0, escape_radii.0, panels)?;
    let outer = radial_length(&annulus, x0, escape_radii.1, panels)?;
    let l = annulus.log_modulus();
    // s·λ_A(s) is smallest on the core circle, where it equals π/L
    let winding_bound = 2.0 * PI * n as f64 * PI / l;
    Ok(WindingCertificate {
        annulus,
        x0,
        m,
        n,
        escape_radii,
        escape_lengths: (inner, outer),
        winding_bound,
        panels,
        certified: inner >= m && outer >= m && winding_bound >= m,
    })
}

/// Annulus `A(x₀/K, x₀K)` and winding number `N` such that curves from `x₀`
/// that leave the annulus or wind `N` times have length at least `m`.
///
/// Any curve reaching the boundary crosses the circle at which the radial
/// distance from `x₀` is `1.01·m`, and since the density is radial its length
/// is at least the radial integral; that integral is certified by quadrature.
/// A curve winding `N` times has length at least `2πN` times the smallest
/// value of `s·λ_A(s)`.
pub fn choose_annulus_and_winding(
    x0: f64,
    m: f64,
    scale: f64,
    panels: usize,
) -> Result<WindingCertificate, LocalModelError> {
    if !(x0 > 0.0 && x0.is_finite()) {
        return Err(LocalModelError::Domain(format!(
            "x₀ = {x0} must be positive"
        )));
    }
    if !(m > 0.0 && m.is_finite()) {
        return Err(LocalModelError::Domain(format!(
            "target length {m} must be positive"
        )));
    }
    if !(scale > 1.0) {
        return Err(LocalModelError::Domain(format!(
            "scale {scale} must exceed 1"
        )));
    }
    let annulus = AnnulusSpec::new(x0 / scale, x0 * scale)?;
    let l = annulus.log_modulus();
    let n = ((m * l / (2.0 * PI * PI)).ceil() as u64).max(1);
    let u = escape_u(1.01 * m);
    let inner = annulus.inner * (u * l).exp();
    let outer = annulus.outer * (-u * l).exp();
    let cert = certify(annulus, x0, m, n, (inner, outer), panels)?;
    if !cert.certified {
        return Err(LocalModelError::Domain(format!(
            "quadrature with {panels} panels does not certify length {m}"
        )));
    }
    Ok(cert)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StripSpec {
    /// `N`: the strip is `log a < Re z < log b`, `|Im z| < 2πN`.
    pub n: u64,
    pub log_a: f64,
    pub log_b: f64,
}

impl StripSpec {
    pub fn new(annulus: &AnnulusSpec, n: u64) -> Result<Self, LocalModelError> {
        if n == 0 {
            return Err(LocalModelError::Domain(
                "N must be a positive integer".into(),
            ));
        }
        Ok(Self {
            n,
            log_a: annulus.inner.ln(),
            log_b: annulus.outer.ln(),
        })
    }

    pub fn re_range(&self) -> (f64, f64) {
        (self.log_a, self.log_b)
    }

    pub fn im_range(&self) -> (f64, f64) {
        let h = 2.0 * PI * self.n as f64;
        (-h, h)
    }

    pub fn contains(&self, z: Complex) -> bool {
        let (lo, hi) = self.re_range();
        let (ilo, ihi) = self.im_range();
        z.re > lo && z.re < hi && z.im > ilo && z.im < ihi
    }

    pub fn annulus(&self) -> AnnulusSpec {
        AnnulusSpec {
            inner: self.log_a.exp(),
            outer: self.log_b.exp(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StripVerdict {
    pub injective: bool,
    /// Smallest `k > 0` with `λk ∈ ℤ` and `k < 2N`.
    pub witness: Option<u64>,
}

/// `φ(z) = φ(z′)` forces `z − z′ = 2πik` with `|k| < 2N` from the first
/// coordinate, and then `λk ∈ ℤ` from the second.
pub fn strip_injectivity(
    spec: &SingularModelSpec,
    strip: &StripSpec,
) -> Result<StripVerdict, LocalModelError> {
    if spec.base.0.norm() == 0.0 || spec.base.1.norm() == 0.0 {
        return Err(LocalModelError::Domain(
            "both base coordinates must be nonzero".into(),
        ));
    }
    let witness = (1..2 * strip.n).find(|&k| {
        let v = spec.lambda * k as f64;
        v.im.abs() < 1e-12 && (v.re - v.re.round()).abs() < 1e-12
    });
    Ok(StripVerdict {
        injective: witness.is_none(),
        witness,
    })
}

/// Pairs of grid points of the strip whose images agree to relative
/// tolerance `tol` in each coordinate.
///
/// Both coordinates are nonzero exponentials spanning many orders of
/// magnitude over a tall strip, so an absolute gap would flag distinct
/// points whose images are merely tiny.
///
/// The grid has `n_re × n_im` cell midpoints; choosing `n_im` divisible by
/// `2N` makes it invariant under the shifts `z ↦ z + 2πik`.
pub fn strip_coincidences(
    spec: &SingularModelSpec,
    strip: &StripSpec,
    n_re: usize,
    n_im: usize,
    tol: f64,
) -> Vec<(Complex, Complex)> {
    let (lo, hi) = strip.re_range();
    let (ilo, ihi) = strip.im_range();
    let pts: Vec<Complex> = (0..n_re)
        .flat_map(|i| {
            (0..n_im).map(move |j| {
                Complex::new(
                    lo + (i as f64 + 0.5) * (hi - lo) / n_re as f64,
                    ilo + (j as f64 + 0.5) * (ihi - ilo) / n_im as f64,
                )
            })
        })
        .collect();
    let images: Vec<(Complex, Complex)> = pts.iter().map(|z| flow(spec, *z)).collect();
    let found = par::map_range(pts.len(), |i| {
        let mut out = Vec::new();
        for j in i + 1..pts.len() {
            let rel = |u: Complex, v: Complex| (u - v).norm() / u.norm().max(v.norm());
            let d = rel(images[i].0, images[j].0).max(rel(images[i].1, images[j].1));
            if d < tol {
                out.push((pts[i], pts[j]));
            }
        }
        out
    });
    found.into_iter().flatten().collect()
}

/// Number of complete sheets of `eᶻ` over the annulus inside the strip.
pub fn covering_projection_degree(strip: &StripSpec) -> u64 {
    2 * strip.n - 1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FiberCount {
    /// Solutions of `eᶻ = w` in the strip.
    pub preimages: u64,
    /// Those whose sheet `|Im z − 2πk| ≤ π` lies in the strip.
    pub complete_sheets: u64,
}

pub fn fiber_count(strip: &StripSpec, w: Complex) -> Result<FiberCount, LocalModelError> {
    if !strip.annulus().contains(w) {
        return Err(LocalModelError::Domain(format!(
            "{w} is outside the annulus"
        )));
    }
    let theta = w.arg();
    let (ilo, ihi) = strip.im_range();
    let n = strip.n as i64;
    let (mut preimages, mut complete) = (0, 0);
    for k in -n - 1..=n + 1 {
        let y = theta + 2.0 * PI * k as f64;
        if y > ilo && y < ihi {
            preimages += 1;
            let centre = 2.0 * PI * k as f64;
            if centre - PI > ilo && centre + PI < ihi {
                complete += 1;
            }
        }
    }
    Ok(FiberCount {
        preimages,
        complete_sheets: complete,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flow_at_i_pi() {
        let y0 = Complex::new(0.3, 0.1);
        let lambda = Complex::new(0.2, 1.0);
        let spec = SingularModelSpec::new(lambda, Complex::new(1.0, 0.0), y0).unwrap();
        let (x, y) = flow(&spec, Complex::new(0.0, PI));
        assert!((x - Complex::new(-1.0, 0.0)).norm() < 1e-15);
        assert!((y - y0 * (Complex::new(0.0, PI) * lambda).exp()).norm() < 1e-15);
        assert_eq!(flow(&spec, Complex::new(0.0, 0.0)), spec.base);
    }

    #[test]
    fn density_on_core_circle() {
        let a = AnnulusSpec::new(0.5, 2.0).unwrap();
        let l = a.log_modulus();
        let z = Complex::new(0.0, a.core_radius());
        assert!((annulus_density(&a, z).unwrap() - PI / (a.core_radius() * l)).abs() < 1e-14);
        assert!(annulus_density(&a, Complex::new(2.5, 0.0)).is_err());
    }

    #[test]
    fn core_circle_length() {
        let a = AnnulusSpec::new(0.2, 3.0).unwrap();
        let r = a.core_radius();
        let pts: Vec<Complex> = (0..=4000)
            .map(|k| Complex::from_polar(r, 2.0 * PI * k as f64 / 4000.0))
            .collect();
        let exact = 2.0 * PI * PI / a.log_modulus();
        // chords are slightly shorter than the arc
        assert!((curve_length(&a, &pts).unwrap() - exact).abs() < 1e-5);
        assert_eq!(curve_length(&a, &pts[..1]).unwrap(), 0.0);
    }

    #[test]
    fn escape_radius_is_exact() {
        let a = AnnulusSpec::new(0.1, 10.0).unwrap();
        let u = escape_u(3.0);
        let s = a.inner * (u * a.log_modulus()).exp();
        let len = radial_length(&a, a.core_radius(), s, 2000).unwrap();
        assert!((len - 3.0).abs() < 1e-8, "{len}");
    }

    #[test]
    fn strip_examples() {
        let one = Complex::new(1.0, 0.0);
        let ann = AnnulusSpec::new(0.5, 2.0).unwrap();
        let half = SingularModelSpec::new(Complex::new(0.5, 0.0), one, one).unwrap();
        let s1 = StripSpec::new(&ann, 1).unwrap();
        let s2 = StripSpec::new(&ann, 2).unwrap();
        assert!(strip_injectivity(&half, &s1).unwrap().injective);
        assert_eq!(strip_injectivity(&half, &s2).unwrap().witness, Some(2));
        let imag = SingularModelSpec::new(Complex::new(0.0, 1.0), one, one).unwrap();
        assert!(
            strip_injectivity(&imag, &StripSpec::new(&ann, 7).unwrap())
                .unwrap()
                .injective
        );
        assert!(StripSpec::new(&ann, 0).is_err());
    }

    #[test]
    fn sheets() {
        let ann = AnnulusSpec::new(0.5, 2.0).unwrap();
        let s = StripSpec::new(&ann, 3).unwrap();
        assert_eq!(covering_projection_degree(&s), 5);
        let generic = fiber_count(&s, Complex::from_polar(1.0, 0.7)).unwrap();
        assert_eq!(
            generic,
            FiberCount {
                preimages: 6,
                complete_sheets: 5
            }
        );
        let seam = fiber_count(&s, Complex::new(1.0, 0.0)).unwrap();
        assert_eq!(seam.preimages, 5);
    }
}

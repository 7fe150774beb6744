//! Mass of the currents `f_*G_r` and the ray integrals that control it.
//!
//! For an analytic disk `f` the current `T_r = f_*G_r` with
//! `⟨G_r, α⟩ = ∫∫ log⁺(r/|ζ|) α` has mass
//! `M(r) = ∫∫_{|ζ|<r} log(r/|ζ|) |f′(ζ)|² dA` against the Euclidean area form
//! of the target chart.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::moebius::{Complex, DiskAutomorphism};
use crate::par;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CurrentsError {
    #[error("domain error: {0}")]
    Domain(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MapKind {
    Identity,
    /// Universal cover of `A(a, b)` through the strip `|Im w| < π/2`.
    AnnulusCover {
        a: f64,
        b: f64,
    },
    /// `Σ c_k ζ^k`.
    Polynomial {
        coefficients: Vec<Complex>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticMapSpec {
    #[serde(flatten)]
    pub kind: MapKind,
    /// Constant factor applied to `f`.
    pub scale: Complex,
}

impl AnalyticMapSpec {
    pub fn identity() -> Self {
        Self {
            kind: MapKind::Identity,
            scale: Complex::new(1.0, 0.0),
        }
    }

    pub fn polynomial(coefficients: Vec<Complex>) -> Result<Self, CurrentsError> {
        if coefficients.is_empty() || coefficients.iter().any(|c| !c.is_finite()) {
            return Err(CurrentsError::Domain(
                "need finite polynomial coefficients".into(),
            ));
        }
        Ok(Self {
            kind: MapKind::Polynomial { coefficients },
            scale: Complex::new(1.0, 0.0),
        })
    }

    pub fn scaled(mut self, c: Complex) -> Self {
        self.scale *= c;
        self
    }

    /// `κ = log(b/a)/π`, so `f = √(ab)·exp(−iκ w)` with `w = log((1+ζ)/(1−ζ))`.
    fn kappa(a: f64, b: f64) -> f64 {
        (b / a).ln() / PI
    }

    pub fn eval(&self, z: Complex) -> Complex {
        let one = Complex::new(1.0, 0.0);
        let v = match &self.kind {
            MapKind::Identity => z,
            MapKind::AnnulusCover { a, b } => {
                let w = ((one + z) / (one - z)).ln();
                let k = Self::kappa(*a, *b);
                (a * b).sqrt() * (Complex::new(0.0, -k) * w).exp()
            }
            MapKind::Polynomial { coefficients } => coefficients
                .iter()
                .rev()
                .fold(Complex::new(0.0, 0.0), |acc, c| acc * z + c),
        };
        self.scale * v
    }

    pub fn derivative(&self, z: Complex) -> Complex {
        let one = Complex::new(1.0, 0.0);
        let v = match &self.kind {
            MapKind::Identity => one,
            MapKind::AnnulusCover { a, b } => {
                let k = Self::kappa(*a, *b);
                let w = ((one + z) / (one - z)).ln();
                let f = (a * b).sqrt() * (Complex::new(0.0, -k) * w).exp();
                f * Complex::new(0.0, -k) * 2.0 / (one - z * z)
            }
            MapKind::Polynomial { coefficients } => coefficients
                .iter()
                .enumerate()
                .skip(1)
                .rev()
                .fold(Complex::new(0.0, 0.0), |acc, (k, c)| acc * z + c * k as f64),
        };
        self.scale * v
    }

    /// Generator of the deck group, for the annulus cover.
    ///
    /// Deck transformations translate the strip by `2π/κ`, which is the
    /// hyperbolic element moving 0 by `π²/log(b/a)`.
    pub fn deck_generator(&self) -> Option<DiskAutomorphism> {
        match self.kind {
            MapKind::AnnulusCover { a, b } => {
                DiskAutomorphism::hyperbolic_by_displacement(PI * PI / (b / a).ln()).ok()
            }
            _ => None,
        }
    }

    /// Largest relative discrepancy between `f′` and a central difference
    /// of step `h` over the given points.
    pub fn derivative_check(&self, points: &[Complex], h: f64) -> f64 {
        points
            .iter()
            .map(|z| {
                let fd = (self.eval(z + h) - self.eval(z - h)) / (2.0 * h);
                let d = self.derivative(*z);
                (fd - d).norm() / d.norm().max(1e-300)
            })
            .fold(0.0, f64::max)
    }
}

pub fn annulus_cover(a: f64, b: f64) -> Result<AnalyticMapSpec, CurrentsError> {
    if !(a > 0.0 && b > a && b.is_finite()) {
        return Err(CurrentsError::Domain(format!(
            "need 0 < a < b, got a = {a}, b = {b}"
        )));
    }
    Ok(AnalyticMapSpec {
        kind: MapKind::AnnulusCover { a, b },
        scale: Complex::new(1.0, 0.0),
    })
}

// Gauss–Kronrod 7/15 nodes on [−1, 1]; the Gauss nodes are the odd entries.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// `(Kronrod estimate, |Kronrod − Gauss|)` on `[a, b]`.
fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for i in 0..7 {
        let s = f(c - h * XGK[i]) + f(c + h * XGK[i]);
        k += WGK[i] * s;
        if i % 2 == 1 {
            g += WG[i / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Adaptive Gauss–Kronrod by bisection; returns `(value, error estimate)`.
pub fn integrate(
    f: impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    rel_tol: f64,
    max_depth: usize,
) -> (f64, f64) {
    fn rec(
        f: &impl Fn(f64) -> f64,
        a: f64,
        b: f64,
        whole: (f64, f64),
        tol: f64,
        depth: usize,
    ) -> (f64, f64) {
        let (v, e) = whole;
        if e <= tol || depth == 0 {
            return (v, e);
        }
        let m = 0.5 * (a + b);
        let (l, r) = (gk15(f, a, m), gk15(f, m, b));
        let (lv, le) = rec(f, a, m, l, 0.5 * tol, depth - 1);
        let (rv, re) = rec(f, m, b, r, 0.5 * tol, depth - 1);
        (lv + rv, le + re)
    }
    let first = gk15(&f, a, b);
    let tol = (rel_tol * first.0.abs()).max(1e-300);
    rec(&f, a, b, first, tol, max_depth)
}

/// Integral of `|f′(se^{iφ})|²` over `φ ∈ [0, 2π)`.
fn angular(f: &AnalyticMapSpec, s: f64, rel_tol: f64) -> f64 {
    // four quarters keep the peaks of covers of ±1 at panel ends
    (0..4)
        .map(|q| {
            let lo = q as f64 * PI / 2.0;
            integrate(
                |phi| f.derivative(Complex::from_polar(s, phi)).norm_sqr(),
                lo,
                lo + PI / 2.0,
                rel_tol,
                40,
            )
            .0
        })
        .sum()
}

/// Outer panels: uniform up to `r/2`, then geometric towards `r`.
fn outer_panels(r: f64) -> Vec<(f64, f64)> {
    let mut cuts = vec![0.0, 0.25 * r, 0.5 * r];
    let mut gap = 0.5 * r;
    while gap > 1e-7 * r {
        gap *= 0.5;
        cuts.push(r - gap);
    }
    cuts.push(r);
    cuts.windows(2).map(|w| (w[0], w[1])).collect()
}

fn mass_at(f: &AnalyticMapSpec, r: f64, rel_tol: f64) -> f64 {
    let panels = outer_panels(r);
    let parts = par::map(&panels, |(a, b)| {
        integrate(
            |s| {
                if s <= 0.0 {
                    0.0
                } else {
                    (r / s).ln() * s * angular(f, s, rel_tol)
                }
            },
            *a,
            *b,
            rel_tol,
            30,
        )
        .0
    });
    // panel order is fixed, so the sum is reproducible
    parts.iter().sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MassValue {
    pub r: f64,
    pub value: f64,
    /// Value at a ten times tighter tolerance.
    pub refined: f64,
    pub relative_change: f64,
    /// Refinement moved the value by more than `1e−3` relative.
    pub flagged: bool,
}

/// `M(r) = ∫∫_{|ζ|<r} log(r/|ζ|) |f′|² dA` by nested adaptive quadrature.
pub fn nevanlinna_mass(
    f: &AnalyticMapSpec,
    r: f64,
    rel_tol: f64,
) -> Result<MassValue, CurrentsError> {
    if !(r > 0.0 && r < 1.0) {
        return Err(CurrentsError::Domain(format!(
            "radius {r} is outside (0, 1)"
        )));
    }
    if !(rel_tol > 0.0) {
        return Err(CurrentsError::Domain("tolerance must be positive".into()));
    }
    let value = mass_at(f, r, rel_tol);
    let refined = mass_at(f, r, 0.1 * rel_tol);
    let relative_change = (refined - value).abs() / refined.abs().max(1e-300);
    Ok(MassValue {
        r,
        value,
        refined,
        relative_change,
        flagged: relative_change > 1e-3,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MassCurve {
    pub grid: Vec<f64>,
    pub masses: Vec<f64>,
    pub flagged: Vec<bool>,
}

impl MassCurve {
    pub fn is_nondecreasing(&self) -> bool {
        self.masses.windows(2).all(|w| w[1] >= w[0])
    }

    pub fn is_increasing(&self) -> bool {
        self.masses.windows(2).all(|w| w[1] > w[0])
    }

    /// `M(r_last)/M(r_first)`.
    pub fn growth(&self) -> Option<f64> {
        Some(self.masses.last()? / self.masses.first()?)
    }
}

pub fn mass_curve(
    f: &AnalyticMapSpec,
    grid: &[f64],
    rel_tol: f64,
) -> Result<MassCurve, CurrentsError> {
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CurrentsError::Domain("radii must increase".into()));
    }
    let values = grid
        .iter()
        .map(|r| nevanlinna_mass(f, *r, rel_tol))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(MassCurve {
        grid: grid.to_vec(),
        masses: values.iter().map(|v| v.value).collect(),
        flagged: values.iter().map(|v| v.flagged).collect(),
    })
}

/// `r ∈ {0.9, 0.99, 0.999, 0.9999}`.
pub fn default_mass_grid() -> Vec<f64> {
    vec![0.9, 0.99, 0.999, 0.9999]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

fn fit_line(x: &[f64], y: &[f64]) -> Option<LinearFit> {
    let n = x.len() as f64;
    if x.len() < 2 {
        return None;
    }
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(u, v)| (u - mx) * (v - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        sxy * sxy / (sxx * syy)
    };
    Some(LinearFit {
        slope,
        intercept: my - slope * mx,
        r_squared,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RayDivergence {
    pub theta: f64,
    pub grid: Vec<f64>,
    /// `∫_{s₀}^{s_k} (1 − s)|f′(se^{iθ})|² ds` by the trapezoid rule.
    pub cumulative: Vec<f64>,
    /// Fit of the cumulative values against `log(1/(1 − s))`; absent for
    /// grids with fewer than three points.
    pub fit: Option<LinearFit>,
}

pub fn ray_divergence(
    f: &AnalyticMapSpec,
    theta: f64,
    grid: &[f64],
) -> Result<RayDivergence, CurrentsError> {
    if grid.is_empty() || grid.iter().any(|s| !(*s >= 0.0 && *s < 1.0)) {
        return Err(CurrentsError::Domain(
            "grid must be nonempty inside [0, 1)".into(),
        ));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CurrentsError::Domain("grid must increase".into()));
    }
    let g: Vec<f64> = grid
        .iter()
        .map(|s| (1.0 - s) * f.derivative(Complex::from_polar(*s, theta)).norm_sqr())
        .collect();
    let mut cumulative = vec![0.0];
    for k in 1..grid.len() {
        let step = 0.5 * (grid[k] - grid[k - 1]) * (g[k] + g[k - 1]);
        cumulative.push(cumulative[k - 1] + step);
    }
    let fit = if grid.len() >= 3 {
        let x: Vec<f64> = grid.iter().map(|s| -(1.0 - s).ln()).collect();
        fit_line(&x, &cumulative)
    } else {
        None
    };
    Ok(RayDivergence {
        theta,
        grid: grid.to_vec(),
        cumulative,
        fit,
    })
}

/// `s_k = 1 − 10^{−t_k}` with `t` uniform on `[t_lo, t_hi]`.
pub fn log_grid(t_lo: f64, t_hi: f64, points: usize) -> Vec<f64> {
    (0..points)
        .map(|k| {
            let t = t_lo + (t_hi - t_lo) * k as f64 / (points.max(2) - 1) as f64;
            1.0 - 10f64.powf(-t)
        })
        .collect()
}

/// Compact target region `{|w − center| ≤ radius}` for the lower bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetDisk {
    pub center: Complex,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivativeProfile {
    /// `max (1 − s)|f′(se^{iθ})|` over the grid.
    pub c0: f64,
    /// `min (1 − s)|f′(se^{iθ})|` over grid points mapped into the target.
    pub c_k: Option<f64>,
    pub points_in_target: usize,
}

pub fn derivative_bound_profile(
    f: &AnalyticMapSpec,
    s_grid: &[f64],
    theta_grid: &[f64],
    target: Option<TargetDisk>,
) -> Result<DerivativeProfile, CurrentsError> {
    if s_grid.is_empty() || theta_grid.is_empty() {
        return Err(CurrentsError::Domain("grids must be nonempty".into()));
    }
    if s_grid.iter().any(|s| !(*s >= 0.0 && *s < 1.0)) {
        return Err(CurrentsError::Domain("radii must lie in [0, 1)".into()));
    }
    let rows = par::map(s_grid, |s| {
        theta_grid
            .iter()
            .map(|t| {
                let z = Complex::from_polar(*s, *t);
                let v = (1.0 - s) * f.derivative(z).norm();
                let inside = target.is_some_and(|k| (f.eval(z) - k.center).norm() <= k.radius);
                (v, inside)
            })
            .collect::<Vec<_>>()
    });
    let all: Vec<(f64, bool)> = rows.into_iter().flatten().collect();
    let c0 = all.iter().map(|(v, _)| *v).fold(0.0, f64::max);
    let hits: Vec<f64> = all.iter().filter(|(_, i)| *i).map(|(v, _)| *v).collect();
    Ok(DerivativeProfile {
        c0,
        c_k: hits.iter().copied().reduce(f64::min),
        points_in_target: hits.len(),
    })
}

/// Evenly spaced angles on `[0, 2π)`.
pub fn angle_grid(n: usize) -> Vec<f64> {
    (0..n).map(|k| TAU * k as f64 / n as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_mass_is_half_pi_r_squared() {
        for r in [0.1, 0.5, 0.9] {
            let m = nevanlinna_mass(&AnalyticMapSpec::identity(), r, 1e-8).unwrap();
            assert!(
                (m.value - PI * r * r / 2.0).abs() < 1e-9,
                "{r}: {}",
                m.value
            );
            assert!(!m.flagged);
        }
    }

    #[test]
    fn polynomial_mass() {
        // f = ζ²: ∫₀^r log(r/s)·4s²·2πs ds = πr⁴/2
        let f = AnalyticMapSpec::polynomial(vec![
            Complex::new(0.0, 0.0),
            Complex::new(0.0, 0.0),
            Complex::new(1.0, 0.0),
        ])
        .unwrap();
        let m = nevanlinna_mass(&f, 0.8, 1e-8).unwrap().value;
        assert!((m - PI * 0.8f64.powi(4) / 2.0).abs() < 1e-9);
    }

    #[test]
    fn annulus_cover_basics() {
        let f = annulus_cover(0.5, 2.0).unwrap();
        assert!((f.eval(Complex::new(0.0, 0.0)).norm() - 1.0).abs() < 1e-15);
        let near_i = f.eval(Complex::new(0.0, 1.0 - 1e-9)).norm();
        let near_mi = f.eval(Complex::new(0.0, -1.0 + 1e-9)).norm();
        assert!((near_i - 2.0).abs() < 1e-6 || (near_i - 0.5).abs() < 1e-6);
        assert!((near_i * near_mi - 1.0).abs() < 1e-6);
        let g = f.deck_generator().unwrap();
        for z in [
            Complex::new(0.3, 0.2),
            Complex::new(-0.5, 0.6),
            Complex::new(0.1, -0.9),
        ] {
            assert!((f.eval(g.apply(z)) - f.eval(z)).norm() < 1e-9);
        }
        let pts = [Complex::new(0.2, 0.1), Complex::new(-0.4, 0.5)];
        assert!(f.derivative_check(&pts, 1e-6) < 1e-6);
    }

    #[test]
    fn identity_ray_is_bounded() {
        let ray =
            ray_divergence(&AnalyticMapSpec::identity(), 0.3, &log_grid(0.0, 6.0, 400)).unwrap();
        // ∫₀¹ (1 − s) ds
        assert!((ray.cumulative.last().unwrap() - 0.5).abs() < 1e-3);
        let single = ray_divergence(&AnalyticMapSpec::identity(), 0.0, &[0.5]).unwrap();
        assert!(single.fit.is_none());
    }
}

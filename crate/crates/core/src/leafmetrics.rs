//! The leaf invariants `β`, `α` and bounds on `ρ`, evaluated in the covering
//! coordinate of a disk quotient.
//!
//! * `β(ζ) = min_{γ≠id} d_M(ζ, γζ)`, the minimal Möbius displacement.
//! * `α(ζ) = Π_{γ≠id} d_M(ζ, γζ)`, the Myrberg product, with a certified
//!   tail when the group is ping-pong.
//! * `ρ(ζ) ≥ i(β(ζ))`, and conversely `β ≥ ((1 − √(1 − ρ²))/ρ)²`.
//!
//! On the disk itself (no nontrivial elements) all three equal 1.

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use crate::group::CertifiedValue;
use crate::group::{self, GroupError, OrbitBall, DEFAULT_LIMIT_EPS};
use crate::moebius::{BoundaryPoint, Complex, DiskAutomorphism};
use crate::par;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("direction θ = {theta} lies within {distance:.4} of the sampled limit set")]
    NearLimitSet { theta: f64, distance: f64 },
    #[error(transparent)]
    Group(#[from] GroupError),
}

/// `β` at a point of the covering disk.
pub fn beta_at(ball: &OrbitBall, zeta: Complex) -> Result<CertifiedValue, MetricsError> {
    Ok(group::displacement(ball, zeta)?)
}

/// How the omitted part of the product was bounded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailMethod {
    /// No nontrivial element: the product is empty.
    Empty,
    /// Rigorous ping-pong tail bound.
    PingPong,
    /// Geometric extrapolation of per-length sums; not rigorous.
    Extrapolated,
    /// Per-length sums do not decay; the product may vanish.
    Divergent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaReport {
    pub value: CertifiedValue,
    /// `Σ_{|γ|=ℓ} −log d_M(ζ, γζ)` for `ℓ = 1..=L`.
    pub log_sums: Vec<f64>,
    /// Bound (or estimate) on the omitted `−log` mass.
    pub tail: f64,
    pub method: TailMethod,
}

/// `α` at a point of the covering disk, certified to width `tol` if possible.
pub fn alpha_at(ball: &OrbitBall, zeta: Complex, tol: f64) -> Result<CertifiedValue, MetricsError> {
    Ok(alpha_detailed(ball, zeta, tol)?.value)
}

pub fn alpha_detailed(
    ball: &OrbitBall,
    zeta: Complex,
    tol: f64,
) -> Result<AlphaReport, MetricsError> {
    let depth = ball.depth();
    if ball.spec().is_trivial() {
        return Ok(AlphaReport {
            value: CertifiedValue::exact(1.0, depth),
            log_sums: vec![0.0; depth],
            tail: 0.0,
            method: TailMethod::Empty,
        });
    }
    let log_sums = group::log_sums_by_length(ball, zeta)?;
    let partial: f64 = log_sums.iter().sum();
    let alpha_l = (-partial).exp();
    let radius = zeta.norm().atanh();

    let rigorous = ball.schottky().and_then(|s| s.log_tail(depth, radius));
    let (tail, method, lower, value) = match rigorous {
        Some(t) => (t, TailMethod::PingPong, alpha_l * (-t).exp(), alpha_l),
        None => match extrapolate(&log_sums) {
            Some(t) => (
                t,
                TailMethod::Extrapolated,
                alpha_l * (-2.0 * t).exp(),
                alpha_l * (-t).exp(),
            ),
            None => (f64::INFINITY, TailMethod::Divergent, 0.0, alpha_l),
        },
    };
    let mut out = CertifiedValue {
        value,
        lower_bound: lower,
        upper_bound: alpha_l,
        depth,
        certified: false,
        warnings: Vec::new(),
    };
    match method {
        TailMethod::PingPong => {
            out.certified = out.width() <= tol;
            if !out.certified {
                out.warnings.push(format!(
                    "tail width {:e} exceeds tolerance {tol:e}",
                    out.width()
                ));
            }
        }
        TailMethod::Extrapolated => out
            .warnings
            .push("tail extrapolated from per-length sums, not certified".into()),
        TailMethod::Divergent => out
            .warnings
            .push("per-length log sums do not decay: divergence suspected".into()),
        TailMethod::Empty => out.certified = true,
    }
    Ok(AlphaReport {
        value: out,
        log_sums,
        tail,
        method,
    })
}

/// Geometric tail estimate from the last per-length sums, or `None` when
/// they are not decaying.
fn extrapolate(sums: &[f64]) -> Option<f64> {
    let n = sums.len();
    if n < 3 {
        return None;
    }
    let (a, b, c) = (sums[n - 3], sums[n - 2], sums[n - 1]);
    if !(b < a && c < b) || c <= 0.0 {
        return if c == 0.0 { Some(0.0) } else { None };
    }
    let q = (c / b).max(b / a);
    (q < 1.0).then(|| c * q / (1.0 - q))
}

/// Per-term upper bound for `−log d_M(ζ, γζ)` in terms of the fixed points
/// `ζ₁, ζ₂` of a hyperbolic `γ`:
/// `(1 − |ζ|²)²·(1 − |γ(0)|²) / (|γ(0)|²·|ζ − ζ₁|²·|ζ − ζ₂|²)`.
pub fn rao_term_bound(g: &DiskAutomorphism, zeta: Complex) -> Result<f64, MetricsError> {
    let (p, q) = g
        .fixed_points()
        .map_err(|e| MetricsError::Domain(e.to_string()))?;
    let m2 = g.origin_image().norm_sqr();
    let s = 1.0 - zeta.norm_sqr();
    Ok(s * s * g.origin_defect()
        / (m2 * (zeta - p.to_complex()).norm_sqr() * (zeta - q.to_complex()).norm_sqr()))
}

/// `i(β) = ((1+β)^{1/3} − (1−β)^{1/3}) / ((1+β)^{1/3} + (1−β)^{1/3})`.
pub fn injectivity_radius_bound(beta: f64) -> Result<f64, MetricsError> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(MetricsError::Domain(format!(
            "β = {beta} must lie in (0, 1]"
        )));
    }
    let p = (1.0 + beta).cbrt();
    let m = (1.0 - beta).cbrt();
    Ok((p - m) / (p + m))
}

/// Radius of the disk covered by a self-map of the disk fixing 0 with
/// derivative of modulus `λ` there: `((1 − √(1 − λ²))/λ)²`.
pub fn koebe_disk_radius(lambda: f64) -> Result<f64, MetricsError> {
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(MetricsError::Domain(format!(
            "λ = {lambda} must lie in (0, 1]"
        )));
    }
    // (1 − √(1 − λ²))/λ = λ/(1 + √(1 − λ²)) avoids cancellation
    let t = lambda / (1.0 + (1.0 - lambda * lambda).sqrt());
    Ok(t * t)
}

/// Lower bound on `β` implied by `ρ`.
pub fn beta_lower_from_rho(rho: f64) -> Result<f64, MetricsError> {
    koebe_disk_radius(rho)
}

/// `i(β)` applied to the certified lower bound of `β`.
pub fn rho_lower_at(ball: &OrbitBall, zeta: Complex) -> Result<f64, MetricsError> {
    let beta = beta_at(ball, zeta)?;
    if beta.lower_bound <= 0.0 {
        return Ok(0.0);
    }
    injectivity_radius_bound(beta.lower_bound.min(1.0))
}

/// Kobayashi density `1/(1 − |ζ|²)` in the covering coordinate.
pub fn kobayashi_density(zeta: Complex) -> f64 {
    1.0 / (1.0 - zeta.norm_sqr())
}

/// Suita density `α·k` in the covering coordinate.
pub fn suita_density_at(ball: &OrbitBall, zeta: Complex, tol: f64) -> Result<f64, MetricsError> {
    Ok(alpha_at(ball, zeta, tol)?.value * kobayashi_density(zeta))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeafMetricReport {
    pub point: Complex,
    pub beta: CertifiedValue,
    pub alpha: CertifiedValue,
    pub rho_lower: f64,
    pub suita_density: f64,
    pub kobayashi_density: f64,
}

pub fn leaf_metric_report(
    ball: &OrbitBall,
    zeta: Complex,
    tol: f64,
) -> Result<LeafMetricReport, MetricsError> {
    let beta = beta_at(ball, zeta)?;
    let alpha = alpha_at(ball, zeta, tol)?;
    let rho_lower = if beta.lower_bound > 0.0 {
        injectivity_radius_bound(beta.lower_bound.min(1.0))?
    } else {
        0.0
    };
    let k = kobayashi_density(zeta);
    Ok(LeafMetricReport {
        point: zeta,
        suita_density: alpha.value * k,
        kobayashi_density: k,
        beta,
        alpha,
        rho_lower,
    })
}

/// Reports for many points, evaluated in parallel.
pub fn leaf_metric_grid(
    ball: &OrbitBall,
    points: &[Complex],
    tol: f64,
) -> Result<Vec<LeafMetricReport>, MetricsError> {
    par::map(points, |z| leaf_metric_report(ball, *z, tol))
        .into_iter()
        .collect()
}

/// Lower bound `m − 2R` (clamped at 0) for the minimal Poincaré displacement
/// at any point within Poincaré distance `R` of a point where it equals `m`.
pub fn displacement_propagation(m: f64, radius: f64) -> f64 {
    (m - 2.0 * radius).max(0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayProfile {
    pub theta: f64,
    /// `(r, −log α(r·e^{iθ}))`.
    pub points: Vec<(f64, f64)>,
    /// `(−log α)/(1 − r²)` at each grid radius.
    pub ratios: Vec<f64>,
    /// Fitted constant: the maximum ratio.
    pub fitted_constant: f64,
    /// `max / min` of the ratios.
    pub spread: f64,
    pub nonincreasing: bool,
    /// The ratio ends higher than it starts.
    pub growth: bool,
    pub all_certified: bool,
}

/// `−log α` along a ray, refusing directions near the sampled limit set.
pub fn alpha_decay_profile(
    ball: &OrbitBall,
    theta: f64,
    r_grid: &[f64],
    tol: f64,
) -> Result<DecayProfile, MetricsError> {
    let dir = BoundaryPoint::new(theta);
    let mut near = group::limit_set_sample(ball, DEFAULT_LIMIT_EPS)
        .iter()
        .map(|s| s.point.angular_distance(&dir))
        .fold(f64::INFINITY, f64::min);
    for g in ball.spec().generators() {
        if let Ok((p, q)) = g.map.fixed_points() {
            near = near
                .min(p.angular_distance(&dir))
                .min(q.angular_distance(&dir));
        }
    }
    if near < DEFAULT_LIMIT_EPS {
        return Err(MetricsError::NearLimitSet {
            theta,
            distance: near,
        });
    }
    let values: Vec<Result<CertifiedValue, MetricsError>> = par::map(r_grid, |r| {
        alpha_at(ball, Complex::from_polar(*r, theta), tol)
    });
    let mut points = Vec::with_capacity(r_grid.len());
    let mut ratios = Vec::with_capacity(r_grid.len());
    let mut all_certified = true;
    for (r, v) in r_grid.iter().zip(values) {
        let v = v?;
        all_certified &= v.certified;
        let l = -v.value.ln();
        points.push((*r, l));
        ratios.push(l / (1.0 - r * r));
    }
    let max = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let spread = if min > 0.0 {
        max / min
    } else if max > 0.0 {
        f64::INFINITY
    } else {
        1.0
    };
    Ok(DecayProfile {
        theta,
        nonincreasing: ratios.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)),
        growth: ratios.len() > 1 && ratios[ratios.len() - 1] > ratios[0] * (1.0 + 1e-12),
        fitted_constant: if ratios.is_empty() { 0.0 } else { max },
        spread,
        points,
        ratios,
        all_certified,
    })
}

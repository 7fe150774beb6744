//! Horocycle injectivity certificates and the displacement floor they imply.
//!
//! A group element `γ` identifies two points of a horodisk `D` exactly when
//! `γ(D) ∩ D ≠ ∅`.  Möbius images of disks are disks, so the test is a
//! closed-form comparison of centers and radii.

use num_rational::Ratio;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constructor::BoundaryArcSet;
use crate::group::{self, FuchsianGroupSpec, GroupError, Letter, OrbitBall};
use crate::moebius::{
    BoundaryPoint, CircleArc, Complex, DiskAutomorphism, EuclideanDisk, GeometryError, HalfPlane,
    Horocycle,
};
use crate::par;

/// Resolution of the radius grid used by [`sigma_estimate`].
pub const SIGMA_RESOLUTION: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HorocycleError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("precondition failed: horocycle of radius {radius} at angle {angle} is not injective at depth {depth}")]
    NotInjective {
        angle: f64,
        radius: f64,
        depth: usize,
    },
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    InjectiveAtDepth,
    Identified {
        word: Vec<Letter>,
        /// `(z, γz)`, both inside the horodisk.
        witness: (Complex, Complex),
    },
    Unknown {
        reason: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InjectivityCertificate {
    pub horocycle: Horocycle,
    pub depth: usize,
    pub verdict: Verdict,
}

impl InjectivityCertificate {
    pub fn is_injective(&self) -> bool {
        matches!(self.verdict, Verdict::InjectiveAtDepth)
    }
}

enum Overlap {
    None,
    Yes(Complex),
    Marginal,
}

/// A point of `D₁ ∩ D₂`, taken in the middle of the overlap along the line
/// of centers.
fn overlap(d1: &EuclideanDisk, d2: &EuclideanDisk) -> Overlap {
    let delta = d2.center - d1.center;
    let dist = delta.norm();
    let depth = d1.radius + d2.radius - dist;
    if depth <= 0.0 {
        return Overlap::None;
    }
    if depth < 1e-12 {
        return Overlap::Marginal;
    }
    if dist < 1e-300 {
        return Overlap::Yes(d1.center);
    }
    let u = delta / dist;
    // overlap along the line: from max(−r1, dist − r2) to min(r1, dist + r2)
    let lo = (-d1.radius).max(dist - d2.radius);
    let hi = d1.radius.min(dist + d2.radius);
    Overlap::Yes(d1.center + u * (0.5 * (lo + hi)))
}

/// Tests `γ(D) ∩ D = ∅` for every element of the ball.
pub fn horocycle_injectivity(ball: &OrbitBall, h: &Horocycle) -> InjectivityCertificate {
    let disk = h.disk();
    let found = par::map(ball.elements(), |e| match disk.image_under(&e.map) {
        None => Some(Err("image is not a disk".to_string())),
        Some(img) => match overlap(&disk, &img) {
            Overlap::None => None,
            Overlap::Marginal => Some(Err("tangent image".to_string())),
            Overlap::Yes(w) => Some(Ok(w)),
        },
    });
    let mut verdict = Verdict::InjectiveAtDepth;
    for (e, f) in ball.elements().iter().zip(found) {
        match f {
            None => {}
            Some(Ok(w)) => {
                let z = e.map.inverse().apply(w);
                if h.contains(z) && h.contains(w) {
                    verdict = Verdict::Identified {
                        word: e.word.clone(),
                        witness: (z, w),
                    };
                } else {
                    verdict = Verdict::Unknown {
                        reason: "overlap witness failed re-verification".into(),
                    };
                }
                break;
            }
            Some(Err(reason)) => {
                verdict = Verdict::Unknown { reason };
                break;
            }
        }
    }
    InjectivityCertificate {
        horocycle: *h,
        depth: ball.depth(),
        verdict,
    }
}

/// Largest grid radius (step `1e−4`) whose horodisk at `ζ` is injective at
/// the ball's depth; 0 when none is.  A lower bound for the depth-`L` value
/// of `σ(ζ)`.
pub fn sigma_estimate(ball: &OrbitBall, zeta: BoundaryPoint) -> f64 {
    let steps = (1.0 / SIGMA_RESOLUTION).round() as usize;
    let ok = |k: usize| {
        let h = Horocycle::new(zeta, k as f64 * SIGMA_RESOLUTION).expect("grid radius in (0, 1)");
        horocycle_injectivity(ball, &h).is_injective()
    };
    // injectivity is monotone in the radius: smaller horodisks are nested
    let (mut lo, mut hi) = (0usize, steps);
    if ok(steps - 1) {
        return (steps - 1) as f64 * SIGMA_RESOLUTION;
    }
    hi -= 1;
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo as f64 * SIGMA_RESOLUTION
}

/// Whether `w₂·u·w₁⁻¹` reduces to the empty word.
fn is_trivial_word(w2: &[Letter], u: Option<Letter>, w1: &[Letter]) -> bool {
    let mut stack: Vec<Letter> = Vec::new();
    let rest = u.into_iter().chain(w1.iter().rev().map(|l| l.inv()));
    for l in w2.iter().copied().chain(rest) {
        if stack.last().is_some_and(|p| p.inv() == l) {
            stack.pop();
        } else {
            stack.push(l);
        }
    }
    stack.is_empty()
}

/// Descent steps after which a boundary point is treated as a limit point.
const MAX_DESCENT: usize = 4096;
/// Tiles a single horodisk may meet before the check gives up.
const MAX_TILES: usize = 512;

/// Horodisk injectivity for every word length, from the ping-pong structure.
///
/// The closure of the complement `F` of the ping-pong half-planes tiles the
/// disk, and two tiles `s₁F̄`, `s₂F̄` touch only when `s₂⁻¹s₁` is trivial or a
/// single letter.  A horodisk is first pulled back along the letters that
/// take its base point onto a free arc; the finitely many tiles it meets are
/// then found by descending into the nested half-plane images, and only
/// `γ ∈ s₂·{1, letters}·s₁⁻¹` can identify two of its points.
#[derive(Debug, Clone)]
pub struct PingPongCertifier {
    /// `(letter, H_x, letter map sending the outside of H_{x⁻¹} into H_x)`.
    letters: Vec<(Letter, HalfPlane, DiskAutomorphism)>,
}

impl PingPongCertifier {
    pub fn new(spec: &FuchsianGroupSpec) -> Result<Self, HorocycleError> {
        let mut letters = Vec::with_capacity(2 * spec.rank());
        for (k, g) in spec.generators().iter().enumerate() {
            let (plus, minus) = g.half_planes()?;
            for (h, inverse) in [(plus, false), (minus, true)] {
                let l = Letter::new(k, inverse);
                letters.push((l, h, spec.letter_map(l)));
            }
        }
        Ok(Self { letters })
    }

    /// Pulls `ζ` back onto a free arc: returns `(ζ′, w)` with `w(ζ′) = ζ`.
    fn descend(&self, zeta: BoundaryPoint) -> Option<(BoundaryPoint, DiskAutomorphism)> {
        let mut w = DiskAutomorphism::identity();
        let mut z = zeta;
        for _ in 0..MAX_DESCENT {
            match self
                .letters
                .iter()
                .find(|(_, h, _)| h.arc().contains_angle(z.angle()))
            {
                None => return Some((z, w)),
                Some((_, _, m)) => {
                    z = m.inverse().apply_boundary(z);
                    w = w.compose(m);
                }
            }
        }
        None
    }

    /// Whether the horodisk of Euclidean radius `r` at `ζ` is injective for
    /// the whole group.  Tangencies and inconclusive cases count as failures.
    pub fn is_injective(&self, zeta: BoundaryPoint, r: f64) -> bool {
        if !(r > 0.0 && r < 1.0) {
            return false;
        }
        let Some((base, w)) = self.descend(zeta) else {
            return false;
        };
        // the Poisson kernel scales by 1/|w'(ζ′)| and horodisks are its
        // superlevel sets {P > (1 − r)/r}
        let (a, b) = (w.a(), w.b());
        let deriv =
            (a.norm_sqr() - b.norm_sqr()) / (b.conj() * base.to_complex() + a.conj()).norm_sqr();
        let level = (1.0 - r) / r * deriv;
        let local = 1.0 / (1.0 + level);
        if !(local > 0.0 && local < 1.0) {
            return false;
        }
        let disk = match Horocycle::new(base, local) {
            Ok(h) => h.disk(),
            Err(_) => return false,
        };
        // tiles met by the disk, as (map, reduced word)
        let mut tiles: Vec<(DiskAutomorphism, Vec<Letter>)> =
            vec![(DiskAutomorphism::identity(), Vec::new())];
        let mut next = 0;
        while next < tiles.len() {
            let (v, word) = tiles[next].clone();
            next += 1;
            for (l, h, m) in &self.letters {
                if word.last().is_some_and(|p| p.inv() == *l) {
                    continue;
                }
                let region = match h.map_by(&v).euclidean_disk() {
                    Some(d) => d,
                    None => return false,
                };
                let dist = (region.center - disk.center).norm();
                if dist < region.radius + disk.radius + 1e-12 {
                    if tiles.len() >= MAX_TILES {
                        return false;
                    }
                    let mut child = word.clone();
                    child.push(*l);
                    tiles.push((v.compose(m), child));
                }
            }
        }
        let mut steps: Vec<(Option<Letter>, DiskAutomorphism)> =
            vec![(None, DiskAutomorphism::identity())];
        steps.extend(self.letters.iter().map(|(l, _, m)| (Some(*l), *m)));
        for (s1, w1) in &tiles {
            let s1_inv = s1.inverse();
            for (s2, w2) in &tiles {
                for (ul, u) in &steps {
                    if is_trivial_word(w2, *ul, w1) {
                        continue;
                    }
                    let g = s2.compose(u).compose(&s1_inv);
                    match disk.image_under(&g) {
                        None => return false,
                        Some(img) => {
                            if !matches!(overlap(&disk, &img), Overlap::None) {
                                return false;
                            }
                        }
                    }
                }
            }
        }
        true
    }

    /// Largest injective radius at `ζ`, found by bisection in `log r` to a
    /// relative precision of about `1e−6`; 0 near the limit set.
    pub fn sigma(&self, zeta: BoundaryPoint) -> f64 {
        let (mut lo, mut hi) = (1e-14f64.ln(), 0.999f64.ln());
        if self.is_injective(zeta, hi.exp()) {
            return hi.exp();
        }
        if !self.is_injective(zeta, lo.exp()) {
            return 0.0;
        }
        while hi - lo > 1e-6 {
            let mid = 0.5 * (lo + hi);
            if self.is_injective(zeta, mid.exp()) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo.exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisplacementFloor {
    /// `n(2 − 1/n) / (N(2 − 1/N)) = (2n − 1)/(2N − 1)`.
    pub ratio: f64,
    /// `m(N, n) = ½ log ratio`, a Poincaré distance.
    pub m: f64,
    /// `M(N, n) = (ratio − 1)/(ratio + 1)`, a Möbius distance.
    #[serde(rename = "M")]
    pub big_m: f64,
}

fn check_order(big_n: u64, n: u64) -> Result<(), HorocycleError> {
    if big_n < 1 || n <= big_n {
        return Err(HorocycleError::Domain(format!(
            "need n > N ≥ 1, got N = {big_n}, n = {n}"
        )));
    }
    Ok(())
}

pub fn displacement_floor(big_n: u64, n: u64) -> Result<DisplacementFloor, HorocycleError> {
    check_order(big_n, n)?;
    let (num, den) = ((2 * n - 1) as f64, (2 * big_n - 1) as f64);
    Ok(DisplacementFloor {
        ratio: num / den,
        m: 0.5 * (num / den).ln(),
        big_m: (n - big_n) as f64 / (n + big_n - 1) as f64,
    })
}

/// Exact `(ratio, M)` in rational arithmetic.
pub fn displacement_floor_exact(
    big_n: u64,
    n: u64,
) -> Result<(Ratio<u64>, Ratio<u64>), HorocycleError> {
    check_order(big_n, n)?;
    let ratio = Ratio::new(2 * n - 1, 2 * big_n - 1);
    let one = Ratio::from_integer(1);
    Ok((ratio, (ratio - one) / (ratio + one)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FloorReport {
    pub floor: DisplacementFloor,
    pub samples: usize,
    /// Minimal Poincaré displacement over the samples.
    pub min_displacement: f64,
    /// `min_displacement / m`, at least 1 when the floor holds.
    pub ratio_to_floor: f64,
    pub below_floor: usize,
}

impl FloorReport {
    pub fn passed(&self) -> bool {
        self.below_floor == 0
    }
}

/// Uniform sample of the open disk `D`.
pub fn sample_disk<R: Rng>(disk: &EuclideanDisk, count: usize, rng: &mut R) -> Vec<Complex> {
    (0..count)
        .map(|_| {
            let r = disk.radius * rng.gen::<f64>().sqrt() * (1.0 - 1e-12);
            let t = rng.gen::<f64>() * std::f64::consts::TAU;
            disk.center + Complex::from_polar(r, t)
        })
        .collect()
}

/// Checks the floor `m(N, n)` on random points of `D_{1/n}((1 − 1/n)ζ)`,
/// after certifying injectivity on `D_{1/N}((1 − 1/N)ζ)`.
pub fn displacement_floor_empirical<R: Rng>(
    ball: &OrbitBall,
    zeta: BoundaryPoint,
    big_n: u64,
    n: u64,
    samples: usize,
    rng: &mut R,
) -> Result<FloorReport, HorocycleError> {
    let floor = displacement_floor(big_n, n)?;
    let outer = Horocycle::new(zeta, 1.0 / big_n as f64)?;
    if !horocycle_injectivity(ball, &outer).is_injective() {
        return Err(HorocycleError::NotInjective {
            angle: zeta.angle(),
            radius: outer.radius(),
            depth: ball.depth(),
        });
    }
    let inner = Horocycle::new(zeta, 1.0 / n as f64)?;
    let points = sample_disk(&inner.disk(), samples, rng);
    let disp: Vec<f64> = points
        .iter()
        .map(|z| group::displacement_detailed(ball, *z).map(|d| d.poincare))
        .collect::<Result<_, _>>()?;
    let min = disp.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(FloorReport {
        floor,
        samples,
        min_displacement: min,
        ratio_to_floor: min / floor.m,
        below_floor: disp.iter().filter(|d| **d < floor.m - 1e-9).count(),
    })
}

/// Membership in `U_n = (∪_{ζ∈E} D_{1/n}((1 − 1/n)ζ)) ∪ D_{1−1/n}(0)`.
///
/// `z` lies in the horodisk at `ζ` iff the angle of `ζ` is within an explicit
/// half-width of `arg z`, so the union test reduces to an arc intersection.
pub fn u_n_contains(e: &BoundaryArcSet, n: u64, z: Complex) -> bool {
    let inv = 1.0 / n as f64;
    let rho = z.norm();
    if rho < 1.0 - inv {
        return true;
    }
    if rho >= 1.0 {
        return false;
    }
    let c = 1.0 - inv;
    let cos_w = (rho * rho + c * c - inv * inv) / (2.0 * rho * c);
    if cos_w >= 1.0 {
        return false;
    }
    let w = cos_w.max(-1.0).acos();
    // open condition: shrink the closed arc test by a hair
    e.intersects(&CircleArc::centered(z.arg(), 2.0 * w * (1.0 - 1e-15)))
}

//! Independent oracles and random inputs shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::{PI, TAU};
use std::io::Write;
use std::sync::{Mutex, MutexGuard};

use leafscope::group::FuchsianGroupSpec;
use leafscope::{Complex, DiskAutomorphism};
use rand::Rng;

/// Timed tests share one core; run them one at a time.
pub fn serial() -> MutexGuard<'static, ()> {
    static LOCK: Mutex<()> = Mutex::new(());
    LOCK.lock().unwrap_or_else(|e| e.into_inner())
}

/// Written to the process stdout handle, which the test harness does not
/// capture, so every verdict shows up in a plain `cargo test` run.
pub fn report(criterion: u32, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "\ncriterion {criterion}: {verdict} ({detail})");
    let _ = out.flush();
}

/// One or two hyperbolic generators with well separated axes, so that the
/// Dirichlet bisector arcs are pairwise disjoint.
pub fn random_pingpong<R: Rng>(rng: &mut R) -> FuchsianGroupSpec {
    let phase = rng.gen_range(0.0..TAU);
    let maps = if rng.gen_bool(0.5) {
        vec![DiskAutomorphism::hyperbolic_along(phase, rng.gen_range(0.3..0.9)).unwrap()]
    } else {
        // half-widths acos r < π/4 − 0.05 keep the four arcs apart
        let second = phase + PI / 2.0 + rng.gen_range(-0.05..0.05);
        vec![
            DiskAutomorphism::hyperbolic_along(phase, rng.gen_range(0.8..0.95)).unwrap(),
            DiskAutomorphism::hyperbolic_along(second, rng.gen_range(0.8..0.95)).unwrap(),
        ]
    };
    let spec = FuchsianGroupSpec::from_maps(&maps).unwrap();
    assert!(
        spec.schottky_bound().is_some(),
        "random group is not ping-pong"
    );
    spec
}

pub fn random_point<R: Rng>(rng: &mut R, radius: f64) -> Complex {
    Complex::from_polar(radius * rng.gen::<f64>().sqrt(), rng.gen_range(0.0..TAU))
}

/// `h(ζ) = c·ζ·Π (ζ − a_k)/(1 − ā_k ζ)`.
#[derive(Debug, Clone)]
pub struct BlaschkeMap {
    pub scale: Complex,
    pub zeros: Vec<Complex>,
}

impl BlaschkeMap {
    pub fn eval(&self, z: Complex) -> Complex {
        let one = Complex::new(1.0, 0.0);
        self.zeros.iter().fold(self.scale * z, |acc, a| {
            acc * (z - a) / (one - a.conj() * z)
        })
    }

    /// `|h′(0)|`.
    pub fn lambda(&self) -> f64 {
        self.zeros
            .iter()
            .fold(self.scale.norm(), |acc, a| acc * a.norm())
    }
}

pub fn random_blaschke<R: Rng>(rng: &mut R) -> BlaschkeMap {
    loop {
        let degree = rng.gen_range(0..=3);
        let zeros: Vec<Complex> = (0..degree)
            .map(|_| Complex::from_polar(rng.gen_range(0.05..0.95), rng.gen_range(0.0..TAU)))
            .collect();
        let modulus = if rng.gen_bool(0.5) {
            1.0
        } else {
            rng.gen_range(0.2..1.0)
        };
        let map = BlaschkeMap {
            scale: Complex::from_polar(modulus, rng.gen_range(0.0..TAU)),
            zeros,
        };
        if map.lambda() > 1e-3 {
            return map;
        }
    }
}

/// Winding number of `f(ρe^{it}) − w` about 0, i.e. the number of solutions
/// of `f = w` in `|ζ| < ρ` for holomorphic `f` without zeros of `f − w` on
/// the circle.  Steps whose argument increment is not small are bisected.
pub fn winding_count(f: &impl Fn(Complex) -> Complex, w: Complex, rho: f64) -> i64 {
    fn increment(
        g: &impl Fn(f64) -> Complex,
        t0: f64,
        t1: f64,
        v0: Complex,
        v1: Complex,
        depth: u32,
    ) -> f64 {
        let d = (v1 / v0).arg();
        if d.abs() < 0.25 || depth == 0 {
            return d;
        }
        let tm = 0.5 * (t0 + t1);
        let vm = g(tm);
        increment(g, t0, tm, v0, vm, depth - 1) + increment(g, tm, t1, vm, v1, depth - 1)
    }
    let g = |t: f64| f(Complex::from_polar(rho, t)) - w;
    let n = 256;
    let mut total = 0.0;
    let mut prev = g(0.0);
    for k in 1..=n {
        let t1 = TAU * k as f64 / n as f64;
        let t0 = TAU * (k - 1) as f64 / n as f64;
        let v = g(t1);
        total += increment(&g, t0, t1, prev, v, 40);
        prev = v;
    }
    (total / TAU).round() as i64
}

/// `Π_{n≥1} tanh²(n·artanh r)` with the omitted factors bounded.
///
/// With `q = e^{−2 artanh r}`, `−log tanh x = log((1 + u)/(1 − u))` for
/// `u = e^{−2x}`, which is at most `2u/(1 − u)`, so the tail after `K`
/// factors is at most `4q^{K+1}/((1 − q)(1 − q^{K+1}))` in `−log`.
pub fn cyclic_orbit_product(r: f64) -> (f64, f64) {
    let x = r.atanh();
    let q = (-2.0 * x).exp();
    let mut log_sum = 0.0;
    let mut k = 0u32;
    loop {
        k += 1;
        log_sum += 2.0 * (k as f64 * x).tanh().ln();
        let qk = q.powi(k as i32 + 1);
        let tail = 4.0 * qk / ((1.0 - q) * (1.0 - qk));
        if tail < 1e-15 || k > 10_000 {
            return (log_sum.exp(), tail);
        }
    }
}

/// Point at Poincaré distance `d` from `z` (with `d_P = artanh d_M`).
pub fn point_at_distance(z: Complex, d: f64, direction: f64) -> Complex {
    DiskAutomorphism::translation(z)
        .unwrap()
        .apply(Complex::from_polar(d.tanh(), direction))
}

#![allow(dead_code)]

use convint_core::constraint::{ConstraintParams, DomainBox, EnergyProfile, ProfileKind};
use convint_core::field::{serialize, CompositeField};
use convint_core::solver::SolverConfig;
use rand::Rng;
use rand_distr::StandardNormal;

const GOLDEN: f64 = 0.618_033_988_749_894_8;

/// Squared distance from `z` to `(σf, σfβ, β)`.
fn dist2_at(z: &[f64], f: f64, sigma: f64, beta: &[f64]) -> f64 {
    let d = beta.len();
    let sf = sigma * f;
    let mut s = (z[0] - sf).powi(2);
    for i in 0..d {
        s += (z[1 + i] - sf * beta[i]).powi(2) + (z[1 + d + i] - beta[i]).powi(2);
    }
    s
}

fn golden_min<F: Fn(f64) -> f64>(g: F, mut a: f64, mut b: f64, iters: usize) -> (f64, f64) {
    let mut x1 = b - GOLDEN * (b - a);
    let mut x2 = a + GOLDEN * (b - a);
    let (mut f1, mut f2) = (g(x1), g(x2));
    for _ in 0..iters {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - GOLDEN * (b - a);
            f1 = g(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + GOLDEN * (b - a);
            f2 = g(x2);
        }
    }
    if f1 < f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

fn sphere(theta: f64, phi: f64) -> [f64; 3] {
    [
        theta.sin() * phi.cos(),
        theta.sin() * phi.sin(),
        theta.cos(),
    ]
}

/// Brute-force `dist(z, K)`: a dense `(σ, β)` grid followed by
/// golden-section refinement around the best grid point.
pub fn dist_oracle(z: &[f64], f: f64) -> f64 {
    let d = (z.len() - 1) / 2;
    let mut best = f64::INFINITY;
    for sigma in [1.0, -1.0] {
        if d == 2 {
            let n = 10_000;
            let step = std::f64::consts::TAU / n as f64;
            let g = |a: f64| dist2_at(z, f, sigma, &[a.cos(), a.sin()]);
            let (mut ba, mut bv) = (0.0, f64::INFINITY);
            for i in 0..n {
                let a = i as f64 * step;
                let v = g(a);
                if v < bv {
                    ba = a;
                    bv = v;
                }
            }
            let (_, v) = golden_min(g, ba - step, ba + step, 80);
            best = best.min(bv.min(v));
        } else {
            let n = 100;
            let (dt, dp) = (
                std::f64::consts::PI / n as f64,
                std::f64::consts::TAU / n as f64,
            );
            let g = |t: f64, p: f64| dist2_at(z, f, sigma, &sphere(t, p));
            let (mut bt, mut bp, mut bv) = (0.0, 0.0, f64::INFINITY);
            for i in 0..=n {
                for j in 0..n {
                    let (t, p) = (i as f64 * dt, j as f64 * dp);
                    let v = g(t, p);
                    if v < bv {
                        bt = t;
                        bp = p;
                        bv = v;
                    }
                }
            }
            // alternating golden-section passes with shrinking brackets
            let (mut wt, mut wp) = (dt, dp);
            for _ in 0..40 {
                let (t, _) = golden_min(|t| g(t, bp), bt - wt, bt + wt, 60);
                bt = t;
                let (p, v) = golden_min(|p| g(bt, p), bp - wp, bp + wp, 60);
                bp = p;
                bv = bv.min(v);
                wt *= 0.7;
                wp *= 0.7;
            }
            best = best.min(bv);
        }
    }
    best.sqrt()
}

pub fn normal_vec<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n)
        .map(|_| rng.sample::<f64, _>(StandardNormal))
        .collect()
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn unit_params(d: usize) -> ConstraintParams {
    ConstraintParams::new(
        DomainBox::unit(d),
        EnergyProfile::constant(0.0, 1.0, 1.0).unwrap(),
    )
    .unwrap()
}

pub fn bump_params() -> ConstraintParams {
    ConstraintParams::new(
        DomainBox::unit(2),
        EnergyProfile::new(0.0, 1.0, ProfileKind::Bump { amplitude: 1.0 }).unwrap(),
    )
    .unwrap()
}

/// The `E ≡ 1`, `d = 2`, 64-cell fixture.
pub fn unit_config(seed: u64) -> SolverConfig {
    let mut c = SolverConfig::new(unit_params(2));
    c.seed = seed;
    c
}

pub fn field_bytes(field: &CompositeField) -> Vec<u8> {
    let mut buf = Vec::new();
    serialize(field, &mut buf).unwrap();
    buf
}

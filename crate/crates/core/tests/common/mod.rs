#![allow(dead_code)]

use mfcir::CirParams;

/// `(k, m)` realized with σ = r0 = 1 and θ = (m + 1)/(2k).
pub fn params_km(k: f64, m: f64) -> CirParams {
    CirParams::new(k, (m + 1.0) / (2.0 * k), 1.0, 1.0).unwrap()
}

/// Independent root of φ(x) = x − b(x)·dt − z_prev − dm by bisection.
pub fn bisect_step(z_prev: f64, dm: f64, dt: f64, p: &CirParams) -> f64 {
    let c = z_prev + dm;
    let phi = |x: f64| x - ((p.m() + 0.5) / x - 0.5 * p.k() * x) * dt - c;
    let mut lo = f64::MIN_POSITIVE;
    let mut hi = c.abs().max(1.0);
    while phi(hi) <= 0.0 {
        hi *= 2.0;
    }
    // Shrink geometrically first so tiny roots are located in few steps.
    while lo < hi && phi(hi * 1e-3) > 0.0 && hi * 1e-3 > lo {
        hi *= 1e-3;
    }
    for _ in 0..4000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if phi(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Reads a CSV body into a header and rows of fields.
pub fn read_csv(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.lines();
    let header = lines
        .next()
        .expect("empty csv")
        .split(',')
        .map(str::to_string)
        .collect();
    let rows = lines
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect();
    (header, rows)
}

/// Correctly rounded sum of `xs` (Shewchuk's exact partials, as in Python's `math.fsum`).
pub fn exact_sum(xs: &[f64]) -> f64 {
    let mut partials: Vec<f64> = Vec::new();
    for &x in xs {
        let mut x = x;
        let mut kept = 0;
        for i in 0..partials.len() {
            let mut y = partials[i];
            if x.abs() < y.abs() {
                std::mem::swap(&mut x, &mut y);
            }
            let hi = x + y;
            let lo = y - (hi - x);
            if lo != 0.0 {
                partials[kept] = lo;
                kept += 1;
            }
            x = hi;
        }
        partials.truncate(kept);
        partials.push(x);
    }
    partials.iter().rev().fold(0.0, |acc, p| acc + p)
}

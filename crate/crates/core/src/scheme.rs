//! Drift-implicit Euler scheme for the transformed square-root equation.
//!
//! With `z = (2/σ)√r` the rate equation `dr = k(θ − r)dt + σ√r dM` becomes
//!
//! ```text
//! dz = b(z) dt + dM,    b(z) = (m + ½)/z − (k/2) z,    m = (2kθ − σ²)/σ²
//! ```
//!
//! and each step solves `z' = z + b(z')Δt + ΔM` for the unique positive `z'`.
//! Multiplying through by `z'` turns the step into the quadratic
//! `a z'² − c z' − d = 0` with `a = 1 + kΔt/2`, `c = z + ΔM` and
//! `d = (m + ½)Δt`, whose positive root is taken in closed form.

use crate::error::{Error, Result};
use crate::noise::{GridSpec, NoisePath};

/// Model constants of the short-rate equation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CirParams {
    k: f64,
    theta: f64,
    sigma: f64,
    r0: f64,
    m: f64,
}

impl CirParams {
    pub fn new(k: f64, theta: f64, sigma: f64, r0: f64) -> Result<Self> {
        for (field, value) in [("k", k), ("theta", theta), ("sigma", sigma), ("r0", r0)] {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::invalid(field, format!("{value} is not a positive number")));
            }
        }
        let m = (2.0 * k * theta - sigma * sigma) / (sigma * sigma);
        Ok(CirParams {
            k,
            theta,
            sigma,
            r0,
            m,
        })
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn r0(&self) -> f64 {
        self.r0
    }

    /// `m = (2kθ − σ²)/σ²`.
    pub fn m(&self) -> f64 {
        self.m
    }

    /// Feller condition `2kθ > σ²`.
    pub fn feller_ok(&self) -> bool {
        2.0 * self.k * self.theta > self.sigma * self.sigma
    }

    /// Whether the implicit step has a positive root (`m > −½`).
    pub fn scheme_solvable(&self) -> bool {
        self.m > -0.5
    }

    /// Initial value `(2/σ)√r0` of the transformed process.
    pub fn z0(&self) -> f64 {
        2.0 * self.r0.sqrt() / self.sigma
    }

    /// Positive zero of the drift, `√((2m + 1)/k)`.
    pub fn z_star(&self) -> f64 {
        ((2.0 * self.m + 1.0) / self.k).sqrt()
    }

    /// The same model started from `r0`.
    pub fn with_r0(self, r0: f64) -> Result<Self> {
        CirParams::new(self.k, self.theta, self.sigma, r0)
    }
}

/// Drift `b(z) = (m + ½)/z − (k/2) z` of the transformed equation.
pub fn drift_b(z: f64, params: &CirParams) -> Result<f64> {
    if !(z > 0.0) {
        return Err(Error::Domain { what: "z", value: z });
    }
    Ok(drift_unchecked(z, params))
}

#[inline]
fn drift_unchecked(z: f64, params: &CirParams) -> f64 {
    (params.m + 0.5) / z - 0.5 * params.k * z
}

/// Solves `z = z_prev + b(z) dt + dm` for its positive root.
///
/// Requires `z_prev > 0`, `dt > 0` and `m > −½`; under those conditions the
/// root exists for every real `dm`.
#[inline]
pub fn implicit_step(z_prev: f64, dm: f64, dt: f64, params: &CirParams) -> f64 {
    debug_assert!(z_prev > 0.0 && dt > 0.0 && params.scheme_solvable());
    let a = 1.0 + 0.5 * params.k * dt;
    let c = z_prev + dm;
    let d = (params.m + 0.5) * dt;
    let disc = (c * c + 4.0 * a * d).sqrt();
    if c >= 0.0 {
        (c + disc) / (2.0 * a)
    } else {
        2.0 * d / (disc - c)
    }
}

/// `r = (σ z / 2)²`.
pub fn z_to_r(z: f64, sigma: f64) -> Result<f64> {
    if !(z > 0.0) {
        return Err(Error::Domain { what: "z", value: z });
    }
    let half = 0.5 * sigma * z;
    Ok(half * half)
}

/// `z = (2/σ)√r`.
pub fn r_to_z(r: f64, sigma: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::Domain { what: "r", value: r });
    }
    Ok(2.0 * r.sqrt() / sigma)
}

/// Scheme output on a grid: the transformed values and the rates.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    grid: GridSpec,
    z: Vec<f64>,
    r: Vec<f64>,
    params: CirParams,
    seed: u64,
}

impl Trajectory {
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn z_values(&self) -> &[f64] {
        &self.z
    }

    pub fn r_values(&self) -> &[f64] {
        &self.r
    }

    pub fn params(&self) -> &CirParams {
        &self.params
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn min_z(&self) -> f64 {
        self.z.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max_z(&self) -> f64 {
        self.z.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Piecewise-linear interpolant of the z-values; `t = 0` maps to `z_0`.
    pub fn interpolate(&self, t: f64) -> Result<f64> {
        let horizon = self.grid.horizon();
        if !(0.0..=horizon).contains(&t) {
            return Err(Error::Domain { what: "t", value: t });
        }
        let n = self.grid.steps();
        let dt = self.grid.dt();
        let nearest = ((t / dt).round() as usize).min(n);
        if self.grid.time(nearest) == t {
            return Ok(self.z[nearest]);
        }
        // t lies in (t_k, t_{k+1}].
        let k = (((t / dt).ceil() as usize).max(1) - 1).min(n - 1);
        let (t0, t1) = (self.grid.time(k), self.grid.time(k + 1));
        let (z0, z1) = (self.z[k], self.z[k + 1]);
        Ok(z0 + (z1 - z0) / (t1 - t0) * (t - t0))
    }
}

/// Runs the implicit scheme along `noise`, starting from `(2/σ)√r0`.
///
/// Only `m > −½` is required; trajectories outside the Feller regime are
/// still produced.
pub fn simulate_z(params: &CirParams, noise: &NoisePath) -> Result<Trajectory> {
    if !params.scheme_solvable() {
        return Err(Error::Unsolvable { m: params.m });
    }
    let grid = *noise.grid();
    let dt = grid.dt();
    let mut z = Vec::with_capacity(grid.steps() + 1);
    let mut current = params.z0();
    z.push(current);
    for &dm in noise.increments() {
        current = implicit_step(current, dm, dt, params);
        z.push(current);
    }
    let half_sigma = 0.5 * params.sigma;
    let r = z.iter().map(|v| (half_sigma * v) * (half_sigma * v)).collect();
    Ok(Trajectory {
        grid,
        z,
        r,
        params: *params,
        seed: noise.seed(),
    })
}

/// A priori bound `z_0 + |b(z_0)| T + 2 max_k |M_{t_k}|` on every scheme value.
pub fn uniform_bound(params: &CirParams, noise: &NoisePath) -> f64 {
    let z0 = params.z0();
    z0 + drift_unchecked(z0, params).abs() * noise.grid().horizon() + 2.0 * noise.sup_abs()
}

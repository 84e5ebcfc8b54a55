//! Exact Gaussian samplers for Brownian and fractional Brownian increments.
//!
//! Two fBm generators are provided and cross-checked in the test suite:
//!
//! * [`CholeskyFbm`] factors the covariance of the path values
//!   `E[B^H_s B^H_t] = ½(s^{2H} + t^{2H} − |t−s|^{2H})` and is exact up to
//!   factorization rounding. It is O(n³) and capped at [`CHOLESKY_CAP`] steps.
//! * [`DaviesHarteFbm`] embeds the stationary increment autocovariance in a
//!   circulant matrix of size 2n and samples through two FFTs, O(n log n).

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::rng::standard_normals;

/// Largest step count accepted by the Cholesky generator.
pub const CHOLESKY_CAP: usize = 1 << 11;

/// Relative tolerance for negative circulant eigenvalues. Values in
/// `[-EIGEN_TOL * max, 0)` are clamped to zero.
pub const EIGEN_TOL: f64 = 1e-8;

/// Hurst index in the open interval (0, 1).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct HurstParam(f64);

impl HurstParam {
    pub fn new(h: f64) -> Result<Self> {
        if h.is_finite() && h > 0.0 && h < 1.0 {
            Ok(HurstParam(h))
        } else {
            Err(Error::invalid("hurst", format!("{h} is not in (0, 1)")))
        }
    }

    /// Hurst index accepted by the mixed CIR model, which needs `h > 1/2`.
    pub fn for_model(h: f64) -> Result<Self> {
        let hurst = Self::new(h)?;
        if h <= 0.5 {
            return Err(Error::invalid(
                "hurst",
                format!("{h} must exceed 1/2 for the mixed model"),
            ));
        }
        Ok(hurst)
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Uniform partition `t_k = k T / n` of `[0, T]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    horizon: f64,
    steps: usize,
}

impl GridSpec {
    pub fn new(horizon: f64, steps: usize) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::invalid("T", format!("{horizon} is not a positive horizon")));
        }
        if steps == 0 {
            return Err(Error::invalid("n", "step count must be positive"));
        }
        Ok(GridSpec { horizon, steps })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    /// Grid time `t_k`; `time(n)` is exactly `T`.
    pub fn time(&self, k: usize) -> f64 {
        if k == self.steps {
            self.horizon
        } else {
            k as f64 * self.horizon / self.steps as f64
        }
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.steps).map(|k| self.time(k))
    }
}

/// Which driver produced a [`NoisePath`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseKind {
    Brownian,
    Fractional(HurstParam),
    Mixed(HurstParam),
    /// Caller-supplied increments, e.g. zero noise for ODE checks.
    Deterministic,
}

/// Increments of one driver realization on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisePath {
    grid: GridSpec,
    increments: Vec<f64>,
    kind: NoiseKind,
    seed: u64,
}

impl NoisePath {
    pub fn new(grid: GridSpec, increments: Vec<f64>, kind: NoiseKind, seed: u64) -> Result<Self> {
        if increments.len() != grid.steps() {
            return Err(Error::invalid(
                "increments",
                format!("length {} does not match {} steps", increments.len(), grid.steps()),
            ));
        }
        if let Some(bad) = increments.iter().find(|x| !x.is_finite()) {
            return Err(Error::invalid("increments", format!("non-finite value {bad}")));
        }
        Ok(NoisePath {
            grid,
            increments,
            kind,
            seed,
        })
    }

    /// Deterministic path with the given increments.
    pub fn deterministic(grid: GridSpec, increments: Vec<f64>) -> Result<Self> {
        Self::new(grid, increments, NoiseKind::Deterministic, 0)
    }

    /// The zero path.
    pub fn zero(grid: GridSpec) -> Self {
        NoisePath {
            grid,
            increments: vec![0.0; grid.steps()],
            kind: NoiseKind::Deterministic,
            seed: 0,
        }
    }

    pub(crate) fn from_parts(grid: GridSpec, increments: Vec<f64>, kind: NoiseKind, seed: u64) -> Self {
        debug_assert_eq!(increments.len(), grid.steps());
        NoisePath {
            grid,
            increments,
            kind,
            seed,
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn increments(&self) -> &[f64] {
        &self.increments
    }

    pub fn kind(&self) -> NoiseKind {
        self.kind
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Path values `M_{t_0}, ..., M_{t_n}` with `M_0 = 0`.
    pub fn values(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.increments.len() + 1);
        let mut acc = 0.0;
        out.push(acc);
        for dx in &self.increments {
            acc += dx;
            out.push(acc);
        }
        out
    }

    /// Value at the horizon.
    pub fn terminal(&self) -> f64 {
        self.increments.iter().sum()
    }

    /// `max_k |M_{t_k}|`.
    pub fn sup_abs(&self) -> f64 {
        let mut acc = 0.0_f64;
        let mut sup = 0.0_f64;
        for dx in &self.increments {
            acc += dx;
            sup = sup.max(acc.abs());
        }
        sup
    }
}

/// Covariance of fractional Brownian motion at times `s` and `t`.
pub fn fbm_covariance(h: HurstParam, s: f64, t: f64) -> f64 {
    let two_h = 2.0 * h.value();
    0.5 * (s.powf(two_h) + t.powf(two_h) - (t - s).abs().powf(two_h))
}

/// Autocovariance of unit-step fractional Gaussian noise at lag `j`.
pub fn fgn_autocovariance(h: HurstParam, j: usize) -> f64 {
    let two_h = 2.0 * h.value();
    let j = j as f64;
    0.5 * ((j + 1.0).powf(two_h) - 2.0 * j.powf(two_h) + (j - 1.0).abs().powf(two_h))
}

/// Independent `N(0, Δt)` increments.
pub fn sample_brownian_increments(grid: GridSpec, seed: u64) -> NoisePath {
    let scale = grid.dt().sqrt();
    let increments = standard_normals(seed, grid.steps())
        .into_iter()
        .map(|z| z * scale)
        .collect();
    NoisePath::from_parts(grid, increments, NoiseKind::Brownian, seed)
}

/// Cholesky factor of the fBm path covariance on a grid, reusable across seeds.
#[derive(Debug, Clone)]
pub struct CholeskyFbm {
    hurst: HurstParam,
    grid: GridSpec,
    // Lower-triangular factor, row-major packed: row i holds i + 1 entries.
    factor: Vec<f64>,
}

impl CholeskyFbm {
    pub fn new(hurst: HurstParam, grid: GridSpec) -> Result<Self> {
        let n = grid.steps();
        if n > CHOLESKY_CAP {
            return Err(Error::CholeskyCapExceeded { n, cap: CHOLESKY_CAP });
        }
        let row_start = |i: usize| i * (i + 1) / 2;
        let mut factor = vec![0.0; row_start(n)];
        for i in 0..n {
            let ti = grid.time(i + 1);
            for j in 0..=i {
                let tj = grid.time(j + 1);
                let (ri, rj) = (row_start(i), row_start(j));
                let dot: f64 = (0..j).map(|p| factor[ri + p] * factor[rj + p]).sum();
                let value = fbm_covariance(hurst, ti, tj) - dot;
                if i == j {
                    if !(value > 0.0) {
                        return Err(Error::NotPositiveDefinite { pivot: i, value });
                    }
                    factor[ri + i] = value.sqrt();
                } else {
                    factor[ri + j] = value / factor[rj + j];
                }
            }
        }
        Ok(CholeskyFbm { hurst, grid, factor })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn sample(&self, seed: u64) -> NoisePath {
        let n = self.grid.steps();
        let z = standard_normals(seed, n);
        let mut increments = Vec::with_capacity(n);
        let mut prev = 0.0;
        let mut start = 0;
        for i in 0..n {
            let row = &self.factor[start..start + i + 1];
            let value: f64 = row.iter().zip(&z).map(|(l, x)| l * x).sum();
            increments.push(value - prev);
            prev = value;
            start += i + 1;
        }
        NoisePath::from_parts(self.grid, increments, NoiseKind::Fractional(self.hurst), seed)
    }
}

/// Circulant-embedding sampler for stationary fGn increments.
#[derive(Clone)]
pub struct DaviesHarteFbm {
    hurst: HurstParam,
    grid: GridSpec,
    // sqrt(λ_j / (2m)) for j = 0..=n, where m = 2n is the embedding size.
    weights: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for DaviesHarteFbm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DaviesHarteFbm")
            .field("hurst", &self.hurst)
            .field("grid", &self.grid)
            .finish_non_exhaustive()
    }
}

impl DaviesHarteFbm {
    pub fn new(hurst: HurstParam, grid: GridSpec) -> Result<Self> {
        let n = grid.steps();
        let size = 2 * n;
        let mut row: Vec<Complex<f64>> = (0..size)
            .map(|j| {
                let lag = if j <= n { j } else { size - j };
                Complex::new(fgn_autocovariance(hurst, lag), 0.0)
            })
            .collect();
        let fft = FftPlanner::new().plan_fft_forward(size);
        fft.process(&mut row);

        let eigen: Vec<f64> = row.iter().map(|c| c.re).collect();
        let max = eigen.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut weights = Vec::with_capacity(n + 1);
        for (index, &value) in eigen.iter().enumerate().take(n + 1) {
            let lambda = if value >= 0.0 {
                value
            } else if value >= -EIGEN_TOL * max {
                0.0
            } else {
                return Err(Error::NegativeEigenvalue { index, value, max });
            };
            weights.push((lambda / size as f64).sqrt());
        }
        // The eigenvalues are symmetric (λ_j = λ_{2n-j}); check the upper half too.
        for (index, &value) in eigen.iter().enumerate().skip(n + 1) {
            if value < -EIGEN_TOL * max {
                return Err(Error::NegativeEigenvalue { index, value, max });
            }
        }
        Ok(DaviesHarteFbm {
            hurst,
            grid,
            weights,
            fft,
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn sample(&self, seed: u64) -> NoisePath {
        let n = self.grid.steps();
        let size = 2 * n;
        let z = standard_normals(seed, size);
        let mut w = vec![Complex::new(0.0, 0.0); size];
        w[0] = Complex::new(self.weights[0] * z[0], 0.0);
        w[n] = Complex::new(self.weights[n] * z[1], 0.0);
        let half = std::f64::consts::FRAC_1_SQRT_2;
        for j in 1..n {
            let a = self.weights[j] * half;
            let v = Complex::new(a * z[2 * j], a * z[2 * j + 1]);
            w[j] = v;
            w[size - j] = v.conj();
        }
        self.fft.process(&mut w);
        let scale = self.grid.dt().powf(self.hurst.value());
        let increments = w[..n].iter().map(|c| c.re * scale).collect();
        NoisePath::from_parts(self.grid, increments, NoiseKind::Fractional(self.hurst), seed)
    }
}

/// Exact fBm increments by Cholesky factorization of the path covariance.
pub fn sample_fbm_cholesky(h: HurstParam, grid: GridSpec, seed: u64) -> Result<NoisePath> {
    Ok(CholeskyFbm::new(h, grid)?.sample(seed))
}

/// fBm increments by circulant embedding.
pub fn sample_fbm_davies_harte(h: HurstParam, grid: GridSpec, seed: u64) -> Result<NoisePath> {
    Ok(DaviesHarteFbm::new(h, grid)?.sample(seed))
}

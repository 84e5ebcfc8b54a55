//! Ensemble harnesses: self-convergence order, positivity audit, Monte
//! Carlo moments and bracket statistics.
//!
//! Every harness is a pure function of its arguments. Paths run in parallel
//! on the rayon pool; results are gathered in seed order before any
//! reduction, so outputs do not depend on the thread count.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mixed::{CoupledNoise, MixedSampler, MixedSpec};
use crate::noise::{GridSpec, NoisePath};
use crate::rng::path_seeds;
use crate::roughpath::{discrete_ito_iterated, quadratic_variation};
use crate::scheme::{simulate_z, uniform_bound, CirParams};
use crate::stats::{fit_line, mean, median, quantile, sample_variance};

/// Margin added to the a priori bound when counting violations.
pub const BOUND_SLACK: f64 = 1e-9;

/// Pathwise errors against a fine reference, with fitted orders.
///
/// The primary metric is the uniform norm `sup_{t∈[0,T]} |z^n_t − z^ref_t|`
/// of the piecewise-linear interpolants. Every coarse node is a reference
/// node, so this supremum is attained on the reference grid and is computed
/// exactly there. The error restricted to the coarse nodes is reported
/// alongside it.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub n_list: Vec<usize>,
    /// Median over seeds of the uniform error for each n.
    pub sup_errors: Vec<f64>,
    pub q25: Vec<f64>,
    pub q75: Vec<f64>,
    /// Minus the least-squares slope of `ln error` against `ln n`.
    pub fitted_order: f64,
    pub fit_r2: f64,
    /// Intercept of the same fit, `ln C`.
    pub fit_intercept: f64,
    /// Median over seeds of `max_k |z^n_k − z^ref(t_k)|` over coarse nodes.
    pub nodal_errors: Vec<f64>,
    pub nodal_order: f64,
    pub nodal_r2: f64,
    pub n_ref: usize,
    pub seeds_used: Vec<u64>,
    /// Entries of `n_list` left out of the uniform-error fit because their
    /// error was zero.
    pub excluded_from_fit: Vec<usize>,
    /// Trajectories (coarse and reference) exceeding the a priori bound.
    pub bound_violations: usize,
}

impl ConvergenceReport {
    /// Whether the median error strictly decreases along `n_list`.
    pub fn strictly_decreasing(&self) -> bool {
        self.sup_errors.windows(2).all(|w| w[1] < w[0])
    }
}

fn check_grids(n_list: &[usize], n_ref: usize) -> Result<()> {
    if n_list.is_empty() {
        return Err(Error::invalid("n-list", "at least one grid size is required"));
    }
    if let Some(&n) = n_list.iter().find(|&&n| n == 0 || n_ref % n != 0) {
        return Err(Error::NotDivisor { n, n_fine: n_ref });
    }
    let largest = *n_list.iter().max().unwrap();
    if n_ref < 8 * largest {
        return Err(Error::invalid(
            "n-ref",
            format!("{n_ref} must be at least 8 x the largest tested n ({largest})"),
        ));
    }
    Ok(())
}

/// `(uniform, nodal)` errors of a coarse trajectory against a reference on
/// a grid refining it.
fn pathwise_errors(coarse: &[f64], reference: &[f64]) -> (f64, f64) {
    let n = coarse.len() - 1;
    let stride = (reference.len() - 1) / n;
    let mut uniform = 0.0_f64;
    let mut nodal = 0.0_f64;
    for k in 0..n {
        let (left, right) = (coarse[k], coarse[k + 1]);
        nodal = nodal.max((left - reference[k * stride]).abs());
        for j in 0..stride {
            let value = left + (right - left) * (j as f64 / stride as f64);
            uniform = uniform.max((value - reference[k * stride + j]).abs());
        }
    }
    let last = (coarse[n] - reference[n * stride]).abs();
    (uniform.max(last), nodal.max(last))
}

/// Least-squares order `(order, r2, intercept)` over the positive errors,
/// plus the grid sizes whose error was zero.
fn fit_order(n_list: &[usize], errors: &[f64]) -> ((f64, f64, f64), Vec<usize>) {
    let mut excluded = Vec::new();
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for (&n, &e) in n_list.iter().zip(errors) {
        if e > 0.0 {
            xs.push((n as f64).ln());
            ys.push(e.ln());
        } else {
            excluded.push(n);
        }
    }
    let fit = match fit_line(&xs, &ys) {
        Some(fit) => (-fit.slope, fit.r2, fit.intercept),
        None => (f64::NAN, f64::NAN, f64::NAN),
    };
    (fit, excluded)
}

/// Self-convergence study on arbitrary coupled noise.
///
/// `make_noise(seed)` must return a realization on `n_ref` steps with views
/// for every entry of `n_list`.
pub fn convergence_study<F>(
    params: &CirParams,
    n_list: &[usize],
    n_ref: usize,
    seeds: &[u64],
    make_noise: F,
) -> Result<ConvergenceReport>
where
    F: Fn(u64) -> Result<CoupledNoise> + Sync,
{
    if !params.feller_ok() {
        return Err(Error::FellerViolated { m: params.m() });
    }
    check_grids(n_list, n_ref)?;
    if seeds.is_empty() {
        return Err(Error::invalid("paths", "at least one seed is required"));
    }

    let per_seed: Vec<(Vec<(f64, f64)>, usize)> = seeds
        .par_iter()
        .map(|&seed| {
            let noise = make_noise(seed)?;
            let fine = noise.fine();
            if fine.grid().steps() != n_ref {
                return Err(Error::invalid("n-ref", "coupled noise has the wrong fine grid"));
            }
            let reference = simulate_z(params, fine)?;
            let mut violations = usize::from(reference.max_z() > uniform_bound(params, fine) + BOUND_SLACK);
            let mut errors = Vec::with_capacity(n_list.len());
            for &n in n_list {
                let view = noise.view(n).ok_or(Error::NotDivisor { n, n_fine: n_ref })?;
                let coarse = simulate_z(params, view)?;
                if coarse.max_z() > uniform_bound(params, view) + BOUND_SLACK {
                    violations += 1;
                }
                errors.push(pathwise_errors(coarse.z_values(), reference.z_values()));
            }
            Ok((errors, violations))
        })
        .collect::<Result<_>>()?;

    let bound_violations = per_seed.iter().map(|(_, v)| v).sum();
    let mut sup_errors = Vec::with_capacity(n_list.len());
    let mut q25 = Vec::with_capacity(n_list.len());
    let mut q75 = Vec::with_capacity(n_list.len());
    let mut nodal_errors = Vec::with_capacity(n_list.len());
    for i in 0..n_list.len() {
        let uniform: Vec<f64> = per_seed.iter().map(|(e, _)| e[i].0).collect();
        let nodal: Vec<f64> = per_seed.iter().map(|(e, _)| e[i].1).collect();
        sup_errors.push(median(&uniform));
        q25.push(quantile(&uniform, 0.25));
        q75.push(quantile(&uniform, 0.75));
        nodal_errors.push(median(&nodal));
    }

    let (fit, excluded_from_fit) = fit_order(n_list, &sup_errors);
    let (nodal_fit, _) = fit_order(n_list, &nodal_errors);

    Ok(ConvergenceReport {
        n_list: n_list.to_vec(),
        sup_errors,
        q25,
        q75,
        fitted_order: fit.0,
        fit_r2: fit.1,
        fit_intercept: fit.2,
        nodal_errors,
        nodal_order: nodal_fit.0,
        nodal_r2: nodal_fit.1,
        n_ref,
        seeds_used: seeds.to_vec(),
        excluded_from_fit,
        bound_violations,
    })
}

/// Self-convergence of the scheme driven by `spec` noise: each seed's noise
/// is generated on `n_ref` steps and aggregated onto every `n` in `n_list`.
pub fn run_convergence(
    params: &CirParams,
    spec: &MixedSpec,
    horizon: f64,
    n_list: &[usize],
    n_ref: usize,
    seeds: &[u64],
) -> Result<ConvergenceReport> {
    if !params.feller_ok() {
        return Err(Error::FellerViolated { m: params.m() });
    }
    check_grids(n_list, n_ref)?;
    let sampler = MixedSampler::new(*spec, GridSpec::new(horizon, n_ref)?)?;
    convergence_study(params, n_list, n_ref, seeds, |seed| {
        CoupledNoise::from_fine(sampler.sample(seed), n_list)
    })
}

/// Extremes of the scheme over an ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct PositivityReport {
    pub n_paths: usize,
    pub min_z: f64,
    pub min_r: f64,
    pub max_z: f64,
    pub feller_ok: bool,
    pub params: CirParams,
    pub grid: GridSpec,
    /// Trajectories exceeding the a priori bound.
    pub bound_violations: usize,
}

fn positivity_over<F>(params: &CirParams, grid: GridSpec, seeds: &[u64], noise: F) -> Result<PositivityReport>
where
    F: Fn(u64) -> NoisePath + Sync,
{
    let extremes: Vec<(f64, f64, bool)> = seeds
        .par_iter()
        .map(|&seed| {
            let path = noise(seed);
            let traj = simulate_z(params, &path)?;
            let max_z = traj.max_z();
            Ok((traj.min_z(), max_z, max_z > uniform_bound(params, &path) + BOUND_SLACK))
        })
        .collect::<Result<_>>()?;
    let min_z = extremes.iter().map(|e| e.0).fold(f64::INFINITY, f64::min);
    let max_z = extremes.iter().map(|e| e.1).fold(f64::NEG_INFINITY, f64::max);
    let half = 0.5 * params.sigma() * min_z;
    Ok(PositivityReport {
        n_paths: seeds.len(),
        min_z,
        min_r: half * half,
        max_z,
        feller_ok: params.feller_ok(),
        params: *params,
        grid,
        bound_violations: extremes.iter().filter(|e| e.2).count(),
    })
}

/// Simulates `n_paths` trajectories and records the smallest value reached.
/// Runs whether or not the Feller condition holds.
pub fn run_positivity(
    params: &CirParams,
    spec: &MixedSpec,
    grid: GridSpec,
    n_paths: usize,
    master_seed: u64,
) -> Result<PositivityReport> {
    if n_paths == 0 {
        return Err(Error::invalid("paths", "must be positive"));
    }
    let sampler = MixedSampler::new(*spec, grid)?;
    positivity_over(params, grid, &path_seeds(master_seed, n_paths), |s| sampler.sample(s))
}

/// Positivity audit on the zero driver.
pub fn run_positivity_zero_noise(params: &CirParams, grid: GridSpec) -> Result<PositivityReport> {
    positivity_over(params, grid, &[0], |_| NoisePath::zero(grid))
}

/// Monte Carlo moments of `r` at one grid time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McStats {
    /// Grid time actually used (nearest node to the requested time).
    pub t_eval: f64,
    pub sample_mean: f64,
    pub sample_se: f64,
    pub n_paths: usize,
    /// `θ + (r0 − θ)e^{−kt}`, reported only for a purely Brownian driver.
    pub closed_form_mean: Option<f64>,
}

/// Classical square-root mean `θ + (r0 − θ)e^{−kt}`.
pub fn classical_mean(params: &CirParams, t: f64) -> f64 {
    params.theta() + (params.r0() - params.theta()) * (-params.k() * t).exp()
}

pub fn run_mc_stats(
    params: &CirParams,
    spec: &MixedSpec,
    grid: GridSpec,
    t_eval: f64,
    n_paths: usize,
    master_seed: u64,
) -> Result<McStats> {
    if !(t_eval > 0.0 && t_eval <= grid.horizon()) {
        return Err(Error::Domain {
            what: "t-eval",
            value: t_eval,
        });
    }
    if n_paths < 2 {
        return Err(Error::invalid("paths", "at least two paths are needed for a standard error"));
    }
    let index = ((t_eval / grid.dt()).round() as usize).clamp(1, grid.steps());
    let sampler = MixedSampler::new(*spec, grid)?;
    let values: Vec<f64> = path_seeds(master_seed, n_paths)
        .par_iter()
        .map(|&s| Ok(simulate_z(params, &sampler.sample(s))?.r_values()[index]))
        .collect::<Result<_>>()?;
    let t = grid.time(index);
    Ok(McStats {
        t_eval: t,
        sample_mean: mean(&values),
        sample_se: (sample_variance(&values) / n_paths as f64).sqrt(),
        n_paths,
        closed_form_mean: (spec.weight_fbm == 0.0).then(|| classical_mean(params, t)),
    })
}

/// Median bracket statistics at one refinement level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BracketRow {
    /// Outer step count.
    pub n: usize,
    pub refinement: usize,
    /// Median outer quadratic variation.
    pub qv: f64,
    /// Median refined bracket.
    pub bracket_value: f64,
}

/// Bracket estimates for each refinement of a fine grid, medians over seeds.
pub fn run_bracket(
    spec: &MixedSpec,
    fine_grid: GridSpec,
    refinements: &[usize],
    seeds: &[u64],
) -> Result<Vec<BracketRow>> {
    if seeds.is_empty() {
        return Err(Error::invalid("paths", "at least one seed is required"));
    }
    let n_fine = fine_grid.steps();
    if let Some(&r) = refinements.iter().find(|&&r| r == 0 || n_fine % r != 0) {
        return Err(Error::NotDivisor { n: r, n_fine });
    }
    let sampler = MixedSampler::new(*spec, fine_grid)?;
    let per_seed: Vec<Vec<(f64, f64)>> = seeds
        .par_iter()
        .map(|&s| {
            let path = sampler.sample(s);
            refinements
                .iter()
                .map(|&r| discrete_ito_iterated(&path, r).map(|e| (e.qv_sum, e.bracket_value)))
                .collect::<Result<_>>()
        })
        .collect::<Result<_>>()?;
    Ok(refinements
        .iter()
        .enumerate()
        .map(|(i, &refinement)| {
            let qv: Vec<f64> = per_seed.iter().map(|row| row[i].0).collect();
            let bracket: Vec<f64> = per_seed.iter().map(|row| row[i].1).collect();
            BracketRow {
                n: n_fine / refinement,
                refinement,
                qv: median(&qv),
                bracket_value: median(&bracket),
            }
        })
        .collect())
}

/// Quadratic variation of the fractional component alone, one value per seed.
pub fn fbm_only_qv(spec: &MixedSpec, grid: GridSpec, seeds: &[u64]) -> Result<Vec<f64>> {
    let fbm_only = MixedSpec {
        weight_bm: 0.0,
        ..*spec
    };
    let sampler = MixedSampler::new(fbm_only, grid)?;
    Ok(seeds
        .par_iter()
        .map(|&s| quadratic_variation(&sampler.sample(s)))
        .collect())
}

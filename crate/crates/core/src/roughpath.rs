//! Empirical bracket and Itô-formula checks on sampled driver paths.
//!
//! The level-2 Itô lift of a path over an outer interval `[t_i, t_{i+1}]` is
//! realized as a left-point Riemann sum over the fine nodes inside it:
//!
//! ```text
//! 𝕄_{t_i,t_{i+1}} ≈ Σ_j M_{t_i,s_j} (M_{s_{j+1}} − M_{s_j})
//! ```
//!
//! and the bracket increment is `(M_{t_i,t_{i+1}})² − 2 𝕄_{t_i,t_{i+1}}`, which
//! telescopes exactly to the fine-grid quadratic variation over the block.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mixed::MixedSampler;
use crate::noise::{GridSpec, NoisePath};

/// Realized quadratic variation `Σ_k (ΔM_k)²`.
pub fn quadratic_variation(noise: &NoisePath) -> f64 {
    noise.increments().iter().map(|x| x * x).sum()
}

/// Bracket estimate on an outer grid refined by `refinement` inner steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BracketEstimate {
    /// Outer grid.
    pub grid: GridSpec,
    /// Σ over outer increments squared.
    pub qv_sum: f64,
    /// Twice the summed inner iterated integrals.
    pub iterated_correction: f64,
    pub bracket_value: f64,
    pub refinement: usize,
}

/// Per-block view of `fine` with `refinement` inner steps per outer step.
fn blocks(fine: &NoisePath, refinement: usize) -> Result<std::slice::ChunksExact<'_, f64>> {
    let n_fine = fine.grid().steps();
    if refinement == 0 || n_fine % refinement != 0 {
        return Err(Error::NotDivisor {
            n: refinement,
            n_fine,
        });
    }
    Ok(fine.increments().chunks_exact(refinement))
}

/// Left-point iterated integral of one block of increments, and its sum.
#[inline]
fn block_lift(block: &[f64]) -> (f64, f64) {
    let mut partial = 0.0;
    let mut iterated = 0.0;
    for dx in block {
        iterated += partial * dx;
        partial += dx;
    }
    (partial, iterated)
}

/// Bracket of the path on the outer grid `n_fine / refinement`, using the
/// fine path for the inner iterated integrals.
pub fn discrete_ito_iterated(fine: &NoisePath, refinement: usize) -> Result<BracketEstimate> {
    let mut qv_sum = 0.0;
    let mut iterated_sum = 0.0;
    for block in blocks(fine, refinement)? {
        let (dx, lift) = block_lift(block);
        qv_sum += dx * dx;
        iterated_sum += lift;
    }
    let grid = GridSpec::new(fine.grid().horizon(), fine.grid().steps() / refinement)?;
    let iterated_correction = 2.0 * iterated_sum;
    Ok(BracketEstimate {
        grid,
        qv_sum,
        iterated_correction,
        bracket_value: qv_sum - iterated_correction,
        refinement,
    })
}

/// `|f(M_T) − f(M_0) − ∫ Df(M) d𝐌 − ½ ∫ D²f(M) d[𝐌]|` with the rough
/// integral taken as the compensated sum `Σ Df(M_i) M_{i,i+1} + D²f(M_i) 𝕄_{i,i+1}`
/// on the outer grid.
pub fn rough_ito_residual<F, D1, D2>(
    fine: &NoisePath,
    refinement: usize,
    f: F,
    df: D1,
    d2f: D2,
) -> Result<f64>
where
    F: Fn(f64) -> f64,
    D1: Fn(f64) -> f64,
    D2: Fn(f64) -> f64,
{
    let mut level = 0.0;
    let mut integral = 0.0;
    let mut bracket_term = 0.0;
    for block in blocks(fine, refinement)? {
        let (dx, lift) = block_lift(block);
        let second = d2f(level);
        integral += df(level) * dx + second * lift;
        bracket_term += 0.5 * second * (dx * dx - 2.0 * lift);
        level += dx;
    }
    Ok((f(level) - f(0.0) - integral - bracket_term).abs())
}

/// Itô-formula residual for `f(x) = x²`.
pub fn ito_formula_residual(fine: &NoisePath, refinement: usize) -> Result<f64> {
    rough_ito_residual(fine, refinement, |x| x * x, |x| 2.0 * x, |_| 2.0)
}

/// Result of checking `M_T² = 2 Σ M_{t_k} ΔM_k + Σ ΔM_k²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityCheck {
    pub residual: f64,
    /// `M_T² + Σ ΔM² + 2 Σ |M_{t_k} ΔM_k|`, the magnitude of the summed terms.
    pub scale: f64,
}

impl IdentityCheck {
    pub fn relative(&self) -> f64 {
        if self.scale == 0.0 {
            self.residual
        } else {
            self.residual / self.scale
        }
    }
}

/// Discrete square identity on raw increments.
pub fn square_identity(increments: &[f64]) -> IdentityCheck {
    let mut level = 0.0;
    let mut cross = 0.0;
    let mut cross_abs = 0.0;
    let mut qv = 0.0;
    for dx in increments {
        cross += level * dx;
        cross_abs += (level * dx).abs();
        qv += dx * dx;
        level += dx;
    }
    let terminal = level * level;
    IdentityCheck {
        residual: (terminal - 2.0 * cross - qv).abs(),
        scale: terminal + qv + 2.0 * cross_abs,
    }
}

/// Quadratic variation of `sampler` paths, one per seed, in seed order.
pub fn qv_ensemble(sampler: &MixedSampler, seeds: &[u64]) -> Vec<f64> {
    seeds
        .par_iter()
        .map(|&s| quadratic_variation(&sampler.sample(s)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mixed::{build_mixed, MixedSpec};
    use crate::noise::{sample_brownian_increments, HurstParam};
    use crate::rng::path_seeds;
    use crate::stats::median;

    fn linear_path(n: usize) -> NoisePath {
        let grid = GridSpec::new(1.0, n).unwrap();
        NoisePath::deterministic(grid, vec![grid.dt(); n]).unwrap()
    }

    fn mixed_spec() -> MixedSpec {
        MixedSpec::new(HurstParam::new(0.75).unwrap())
    }

    #[test]
    fn smooth_path_has_vanishing_qv() {
        let coarse = quadratic_variation(&linear_path(16));
        let fine = quadratic_variation(&linear_path(1024));
        assert!((coarse - 1.0 / 16.0).abs() < 1e-15);
        assert!(fine < coarse / 32.0);
    }

    #[test]
    fn unit_refinement_has_no_correction() {
        let grid = GridSpec::new(1.0, 64).unwrap();
        let p = build_mixed(mixed_spec(), grid, 1).unwrap();
        let est = discrete_ito_iterated(&p, 1).unwrap();
        assert_eq!(est.iterated_correction, 0.0);
        assert_eq!(est.bracket_value, est.qv_sum);
        assert_eq!(est.grid.steps(), 64);
    }

    #[test]
    fn refined_bracket_equals_fine_qv() {
        let grid = GridSpec::new(1.0, 1 << 14).unwrap();
        let p = build_mixed(mixed_spec(), grid, 12).unwrap();
        let est = discrete_ito_iterated(&p, 1 << 8).unwrap();
        assert_eq!(est.grid.steps(), 1 << 6);
        let fine_qv = quadratic_variation(&p);
        assert!((est.bracket_value - fine_qv).abs() < 1e-10 * fine_qv.max(1.0));
    }

    #[test]
    fn refined_bracket_is_near_horizon() {
        let grid = GridSpec::new(1.0, 1 << 14).unwrap();
        let sampler = MixedSampler::new(mixed_spec(), grid).unwrap();
        let values: Vec<f64> = path_seeds(31, 100)
            .into_iter()
            .map(|s| discrete_ito_iterated(&sampler.sample(s), 1 << 8).unwrap().bracket_value)
            .collect();
        let inside = values.iter().filter(|v| (*v - 1.0).abs() <= 0.05).count();
        assert!(inside >= 99, "{inside} of 100 within 0.05");
    }

    #[test]
    fn smooth_bracket_vanishes_with_refinement() {
        let p = linear_path(1 << 12);
        let coarse = discrete_ito_iterated(&p, 4).unwrap().bracket_value;
        let fine = discrete_ito_iterated(&p, 64).unwrap().bracket_value;
        assert!(fine <= coarse);
        assert!(fine < 1e-3);
    }

    #[test]
    fn refinement_must_divide() {
        let p = linear_path(10);
        assert!(matches!(discrete_ito_iterated(&p, 3), Err(Error::NotDivisor { .. })));
        assert!(discrete_ito_iterated(&p, 0).is_err());
        assert!(ito_formula_residual(&p, 4).is_err());
    }

    #[test]
    fn square_residual_vanishes() {
        // Linear path: residual → 0 (exactly the telescoping identity).
        assert!(ito_formula_residual(&linear_path(1000), 1).unwrap() < 1e-12);
        let grid = GridSpec::new(1.0, 1 << 16).unwrap();
        let bm = sample_brownian_increments(grid, 3);
        assert!(ito_formula_residual(&bm, 1).unwrap() < 1e-10);
        let mixed = build_mixed(mixed_spec(), grid, 3).unwrap();
        assert!(ito_formula_residual(&mixed, 1).unwrap() < 1e-10);
        assert!(ito_formula_residual(&mixed, 256).unwrap() < 1e-10);
    }

    #[test]
    fn sine_residual_converges() {
        let grid = GridSpec::new(1.0, 1 << 16).unwrap();
        let sampler = MixedSampler::new(mixed_spec(), grid).unwrap();
        let residuals: Vec<f64> = path_seeds(5, 20)
            .into_iter()
            .map(|s| rough_ito_residual(&sampler.sample(s), 1, f64::sin, f64::cos, |x| -x.sin()).unwrap())
            .collect();
        assert!(residuals.iter().all(|r| *r < 1e-2), "{residuals:?}");
    }

    #[test]
    fn square_identity_is_exact_algebra() {
        let grid = GridSpec::new(1.0, 4096).unwrap();
        let p = build_mixed(mixed_spec(), grid, 9).unwrap();
        let check = square_identity(p.increments());
        assert!(check.relative() < 1e-12);
        assert_eq!(square_identity(&[]).residual, 0.0);
    }

    #[test]
    fn qv_ensemble_is_ordered_and_near_horizon() {
        let grid = GridSpec::new(1.0, 1 << 12).unwrap();
        let sampler = MixedSampler::new(mixed_spec(), grid).unwrap();
        let seeds = path_seeds(2, 16);
        let qv = qv_ensemble(&sampler, &seeds);
        assert_eq!(qv[3], quadratic_variation(&sampler.sample(seeds[3])));
        assert!((median(&qv) - 1.0).abs() < 0.1);
    }
}

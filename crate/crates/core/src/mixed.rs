//! Mixed drivers `M = a·B + b·B^H` and exact coarse-grid coupling.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::noise::{
    sample_brownian_increments, CholeskyFbm, DaviesHarteFbm, GridSpec, HurstParam, NoiseKind,
    NoisePath, CHOLESKY_CAP,
};
use crate::rng::{derive_seed, Stream};

/// Weights and Hurst index of a mixed driver. The default weights (1, 1)
/// give `M = B + B^H`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixedSpec {
    pub hurst: HurstParam,
    pub weight_bm: f64,
    pub weight_fbm: f64,
}

impl MixedSpec {
    pub fn new(hurst: HurstParam) -> Self {
        MixedSpec {
            hurst,
            weight_bm: 1.0,
            weight_fbm: 1.0,
        }
    }

    pub fn with_weights(hurst: HurstParam, weight_bm: f64, weight_fbm: f64) -> Result<Self> {
        if !weight_bm.is_finite() {
            return Err(Error::invalid("weight-bm", format!("{weight_bm} is not finite")));
        }
        if !weight_fbm.is_finite() {
            return Err(Error::invalid("weight-fbm", format!("{weight_fbm} is not finite")));
        }
        Ok(MixedSpec {
            hurst,
            weight_bm,
            weight_fbm,
        })
    }

    fn kind(&self) -> NoiseKind {
        if self.weight_fbm == 0.0 {
            NoiseKind::Brownian
        } else if self.weight_bm == 0.0 {
            NoiseKind::Fractional(self.hurst)
        } else {
            NoiseKind::Mixed(self.hurst)
        }
    }
}

/// fBm generator selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FbmMethod {
    /// Davies–Harte, falling back to Cholesky when the embedding fails and
    /// the grid is within the Cholesky cap.
    #[default]
    Auto,
    Cholesky,
    DaviesHarte,
}

#[derive(Debug, Clone)]
enum FbmSampler {
    Cholesky(CholeskyFbm),
    DaviesHarte(DaviesHarteFbm),
}

impl FbmSampler {
    fn new(method: FbmMethod, hurst: HurstParam, grid: GridSpec) -> Result<Self> {
        match method {
            FbmMethod::Cholesky => Ok(FbmSampler::Cholesky(CholeskyFbm::new(hurst, grid)?)),
            FbmMethod::DaviesHarte => Ok(FbmSampler::DaviesHarte(DaviesHarteFbm::new(hurst, grid)?)),
            FbmMethod::Auto => match DaviesHarteFbm::new(hurst, grid) {
                Ok(dh) => Ok(FbmSampler::DaviesHarte(dh)),
                Err(err @ Error::NegativeEigenvalue { .. }) => {
                    if grid.steps() <= CHOLESKY_CAP {
                        Ok(FbmSampler::Cholesky(CholeskyFbm::new(hurst, grid)?))
                    } else {
                        Err(err)
                    }
                }
                Err(err) => Err(err),
            },
        }
    }

    fn sample(&self, seed: u64) -> NoisePath {
        match self {
            FbmSampler::Cholesky(c) => c.sample(seed),
            FbmSampler::DaviesHarte(d) => d.sample(seed),
        }
    }
}

/// Prepared mixed-driver sampler for one `(spec, grid)`; the fBm
/// factorization is computed once and shared by every seed.
#[derive(Debug, Clone)]
pub struct MixedSampler {
    spec: MixedSpec,
    grid: GridSpec,
    fbm: Option<FbmSampler>,
}

impl MixedSampler {
    pub fn new(spec: MixedSpec, grid: GridSpec) -> Result<Self> {
        Self::with_method(spec, grid, FbmMethod::Auto)
    }

    pub fn with_method(spec: MixedSpec, grid: GridSpec, method: FbmMethod) -> Result<Self> {
        let fbm = if spec.weight_fbm == 0.0 {
            None
        } else {
            Some(FbmSampler::new(method, spec.hurst, grid)?)
        };
        Ok(MixedSampler { spec, grid, fbm })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn spec(&self) -> &MixedSpec {
        &self.spec
    }

    /// Brownian component; drawn from the `Brownian` sub-stream of `seed`.
    pub fn brownian(&self, seed: u64) -> NoisePath {
        sample_brownian_increments(self.grid, derive_seed(seed, Stream::Brownian, 0))
    }

    /// Fractional component; drawn from the `Fractional` sub-stream of `seed`.
    pub fn fractional(&self, seed: u64) -> Option<NoisePath> {
        self.fbm
            .as_ref()
            .map(|f| f.sample(derive_seed(seed, Stream::Fractional, 0)))
    }

    pub fn sample(&self, seed: u64) -> NoisePath {
        let MixedSpec {
            weight_bm,
            weight_fbm,
            ..
        } = self.spec;
        let mut increments = if weight_bm == 0.0 {
            vec![0.0; self.grid.steps()]
        } else {
            let mut bm = self.brownian(seed).increments().to_vec();
            if weight_bm != 1.0 {
                bm.iter_mut().for_each(|x| *x *= weight_bm);
            }
            bm
        };
        if let Some(fbm) = self.fractional(seed) {
            for (acc, x) in increments.iter_mut().zip(fbm.increments()) {
                *acc += weight_fbm * x;
            }
        }
        NoisePath::from_parts(self.grid, increments, self.spec.kind(), seed)
    }
}

/// One realization of `M` on `grid`. `B` and `B^H` use independent
/// sub-streams of `seed`.
pub fn build_mixed(spec: MixedSpec, grid: GridSpec, seed: u64) -> Result<NoisePath> {
    Ok(MixedSampler::new(spec, grid)?.sample(seed))
}

/// Neumaier-compensated sum.
fn compensated_sum(xs: &[f64]) -> f64 {
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    for &x in xs {
        let t = sum + x;
        comp += if sum.abs() >= x.abs() {
            (sum - t) + x
        } else {
            (x - t) + sum
        };
        sum = t;
    }
    sum + comp
}

/// Block sums of `fine` onto a grid of `n_coarse` steps.
pub fn aggregate(fine: &NoisePath, n_coarse: usize) -> Result<NoisePath> {
    let n_fine = fine.grid().steps();
    if n_coarse == 0 || n_fine % n_coarse != 0 {
        return Err(Error::NotDivisor {
            n: n_coarse,
            n_fine,
        });
    }
    let block = n_fine / n_coarse;
    let increments = fine
        .increments()
        .chunks_exact(block)
        .map(compensated_sum)
        .collect();
    let grid = GridSpec::new(fine.grid().horizon(), n_coarse)?;
    Ok(NoisePath::from_parts(grid, increments, fine.kind(), fine.seed()))
}

/// A fine-grid realization together with exact coarse aggregations of it.
#[derive(Debug, Clone)]
pub struct CoupledNoise {
    fine: NoisePath,
    coarse: BTreeMap<usize, NoisePath>,
}

impl CoupledNoise {
    pub fn from_fine(fine: NoisePath, coarse_list: &[usize]) -> Result<Self> {
        let coarse = coarse_list
            .iter()
            .map(|&n| aggregate(&fine, n).map(|p| (n, p)))
            .collect::<Result<_>>()?;
        Ok(CoupledNoise { fine, coarse })
    }

    pub fn fine(&self) -> &NoisePath {
        &self.fine
    }

    /// Coarse view with `n` steps, if requested at construction.
    pub fn view(&self, n: usize) -> Option<&NoisePath> {
        if n == self.fine.grid().steps() {
            Some(&self.fine)
        } else {
            self.coarse.get(&n)
        }
    }

    pub fn coarse_views(&self) -> &BTreeMap<usize, NoisePath> {
        &self.coarse
    }
}

/// Generates `M` on `n_fine` steps and aggregates it onto every entry of
/// `coarse_list`.
pub fn derive_coupled(
    spec: MixedSpec,
    horizon: f64,
    n_fine: usize,
    coarse_list: &[usize],
    seed: u64,
) -> Result<CoupledNoise> {
    if let Some(&n) = coarse_list.iter().find(|&&n| n == 0 || n_fine % n != 0) {
        return Err(Error::NotDivisor { n, n_fine });
    }
    let grid = GridSpec::new(horizon, n_fine)?;
    CoupledNoise::from_fine(build_mixed(spec, grid, seed)?, coarse_list)
}

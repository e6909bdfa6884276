use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::budget::PrivacyBudget;
use super::clip::{ClipKind, ClipProfile};
use super::laplace::{laplace, laplace_sum};
use crate::contrast::contrast_from_drift;
use crate::diffusion_sim::PathPanel;
use crate::error::{Error, Result};
use crate::estimator::ThetaGrid;
use crate::model::DiffusionModel;
use crate::rng::{substream, Domain};

/// How the Laplace perturbation is generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseMode {
    /// `α_j → ∞`: the public values are the clipped contrasts.
    Disabled,
    /// One independent draw per `(i, j, ℓ, k)`, from a stream keyed by `(seed, i, j)`.
    #[default]
    PerCell,
    /// Only for aggregates: the sum over `(i, j)` of the noise at each `(ℓ, k)`
    /// is drawn directly from its exact law.
    AggregateInLaw,
}

/// Laplace scale `2 B L (a + 1) / α`.
pub fn laplace_scale(clip: &ClipProfile, grid_len: usize, a: usize, alpha: f64) -> f64 {
    2.0 * clip.sup() * grid_len as f64 * (a + 1) as f64 / alpha
}

/// Everything the channel needs besides the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    pub grid: ThetaGrid,
    pub a: usize,
    pub budget: PrivacyBudget,
    pub clip: ClipProfile,
    pub noise: NoiseMode,
}

impl ChannelParams {
    pub fn new(
        grid: ThetaGrid,
        a: usize,
        budget: PrivacyBudget,
        clip: ClipProfile,
        noise: NoiseMode,
    ) -> Result<Self> {
        if a == 0 {
            return Err(Error::Config("smoothness order a must be at least 1".into()));
        }
        if noise != NoiseMode::Disabled && clip.kind() == ClipKind::Disabled {
            return Err(Error::Config(
                "Laplace noise needs a bounded clipping map; disable noise or enable clipping".into(),
            ));
        }
        Ok(Self {
            grid,
            a,
            budget,
            clip,
            noise,
        })
    }

    /// Values per cell, `L (a + 1)`.
    pub fn width(&self) -> usize {
        self.grid.len() * (self.a + 1)
    }

    pub fn scales(&self) -> Vec<f64> {
        self.budget
            .alphas()
            .iter()
            .map(|&al| laplace_scale(&self.clip, self.grid.len(), self.a, al))
            .collect()
    }

    fn check_panel(&self, panel: &PathPanel) -> Result<()> {
        if self.budget.len() != panel.grid().steps() {
            return Err(Error::Shape(format!(
                "{} privacy levels for {} observation steps",
                self.budget.len(),
                panel.grid().steps()
            )));
        }
        Ok(())
    }
}

/// Clipped contrast derivatives of one cell, `out[ℓ (a+1) + k]`.
pub(crate) struct CellEvaluator<'m, M: ?Sized> {
    model: &'m M,
    thetas: Vec<f64>,
    orders: usize,
    delta: f64,
    db: Vec<f64>,
}

impl<'m, M: DiffusionModel<f64> + ?Sized> CellEvaluator<'m, M> {
    pub(crate) fn new(model: &'m M, grid: &ThetaGrid, a: usize, delta: f64) -> Result<Self> {
        model.check_orders(a)?;
        Ok(Self {
            model,
            thetas: grid.points(),
            orders: a + 1,
            delta,
            db: vec![0.0; grid.len() * (a + 1)],
        })
    }

    /// Raw (unclipped) contrast derivatives at every grid point.
    pub(crate) fn raw(&mut self, x_prev: f64, x_next: f64, out: &mut [f64]) -> Result<()> {
        let sigma = self.model.diffusion(x_prev);
        if !(sigma > 0.0) {
            return Err(Error::Config(format!(
                "non-positive diffusion coefficient {sigma} at x = {x_prev}"
            )));
        }
        let inv_s2 = 1.0 / (sigma * sigma);
        self.model
            .drift_derivatives_on_grid(&self.thetas, x_prev, self.orders, &mut self.db)?;
        let w = self.orders;
        for l in 0..self.thetas.len() {
            contrast_from_drift(
                &self.db[l * w..(l + 1) * w],
                x_next - x_prev,
                self.delta,
                inv_s2,
                &mut out[l * w..(l + 1) * w],
            );
        }
        Ok(())
    }
}

/// Privatized panel `Z_j^{i,(k)}(θ_ℓ)`, stored `z[((i n + j) L + ℓ)(a + 1) + k]`
/// with `j` zero-based.
#[derive(Debug, Clone, PartialEq)]
pub struct PublicPanel {
    pub n_paths: usize,
    pub n_steps: usize,
    pub params: ChannelParams,
    pub laplace_scale_by_j: Vec<f64>,
    pub seed: u64,
    pub z: Vec<f64>,
}

impl PublicPanel {
    pub fn width(&self) -> usize {
        self.params.width()
    }

    pub fn cell(&self, i: usize, j: usize) -> &[f64] {
        let w = self.width();
        let o = (i * self.n_steps + j) * w;
        &self.z[o..o + w]
    }

    pub fn get(&self, i: usize, j: usize, l: usize, k: usize) -> f64 {
        self.cell(i, j)[l * (self.params.a + 1) + k]
    }

    /// `Σ_i Σ_j Z_j^{i,(k)}(θ_ℓ)`, summed per path then across paths in order.
    pub fn aggregate(&self) -> PublicAggregate {
        let w = self.width();
        let mut sums = vec![0.0; w];
        for i in 0..self.n_paths {
            let mut acc = vec![0.0; w];
            for j in 0..self.n_steps {
                for (a, v) in acc.iter_mut().zip(self.cell(i, j)) {
                    *a += v;
                }
            }
            for (s, a) in sums.iter_mut().zip(acc) {
                *s += a;
            }
        }
        PublicAggregate {
            n_paths: self.n_paths,
            n_steps: self.n_steps,
            params: self.params.clone(),
            seed: self.seed,
            sums,
        }
    }
}

/// Per-`(ℓ, k)` sums of the public values; all the estimator needs.
#[derive(Debug, Clone, PartialEq)]
pub struct PublicAggregate {
    pub n_paths: usize,
    pub n_steps: usize,
    pub params: ChannelParams,
    pub seed: u64,
    /// `sums[ℓ (a + 1) + k]`.
    pub sums: Vec<f64>,
}

impl PublicAggregate {
    pub fn get(&self, l: usize, k: usize) -> f64 {
        self.sums[l * (self.params.a + 1) + k]
    }
}

fn cell_stream(seed: u64, n_steps: usize, i: usize, j: usize) -> rand_chacha::ChaCha8Rng {
    substream(seed, Domain::Noise, (i as u64) * (n_steps as u64) + j as u64)
}

/// Release the full public tensor. `AggregateInLaw` is not available here.
pub fn privatize<M: DiffusionModel<f64> + ?Sized>(
    panel: &PathPanel,
    model: &M,
    params: &ChannelParams,
    seed: u64,
) -> Result<PublicPanel> {
    params.check_panel(panel)?;
    if params.noise == NoiseMode::AggregateInLaw {
        return Err(Error::Config(
            "the in-law noise mode only produces aggregates; use privatize_aggregate".into(),
        ));
    }
    let n = panel.grid().steps();
    let w = params.width();
    let scales = params.scales();
    let delta = panel.grid().delta();
    let mut z = vec![0.0; panel.n_paths() * n * w];
    z.par_chunks_mut(n * w)
        .enumerate()
        .try_for_each(|(i, block)| -> Result<()> {
            let mut eval = CellEvaluator::new(model, &params.grid, params.a, delta)?;
            let row = panel.path(i);
            for j in 0..n {
                let out = &mut block[j * w..(j + 1) * w];
                eval.raw(row[j], row[j + 1], out)?;
                for v in out.iter_mut() {
                    *v = params.clip.apply(*v);
                }
                if params.noise == NoiseMode::PerCell {
                    let mut rng = cell_stream(seed, n, i, j);
                    for v in out.iter_mut() {
                        *v += laplace(&mut rng, scales[j]);
                    }
                }
            }
            Ok(())
        })?;
    Ok(PublicPanel {
        n_paths: panel.n_paths(),
        n_steps: n,
        params: params.clone(),
        laplace_scale_by_j: scales,
        seed,
        z,
    })
}

/// Stream the channel and keep only the per-`(ℓ, k)` sums.
///
/// With `PerCell` noise the result equals `privatize(..).aggregate()` up to
/// summation order; with `AggregateInLaw` the noise sums are drawn from their
/// exact law.
pub fn privatize_aggregate<M: DiffusionModel<f64> + ?Sized>(
    panel: &PathPanel,
    model: &M,
    params: &ChannelParams,
    seed: u64,
) -> Result<PublicAggregate> {
    params.check_panel(panel)?;
    let n = panel.grid().steps();
    let w = params.width();
    let scales = params.scales();
    let delta = panel.grid().delta();
    let per_cell = params.noise == NoiseMode::PerCell;
    let partial: Vec<Vec<f64>> = (0..panel.n_paths())
        .into_par_iter()
        .map(|i| -> Result<Vec<f64>> {
            let mut eval = CellEvaluator::new(model, &params.grid, params.a, delta)?;
            let row = panel.path(i);
            let mut out = vec![0.0; w];
            let mut acc = vec![0.0; w];
            for j in 0..n {
                eval.raw(row[j], row[j + 1], &mut out)?;
                for v in out.iter_mut() {
                    *v = params.clip.apply(*v);
                }
                if per_cell {
                    let mut rng = cell_stream(seed, n, i, j);
                    for v in out.iter_mut() {
                        *v += laplace(&mut rng, scales[j]);
                    }
                }
                for (a, v) in acc.iter_mut().zip(&out) {
                    *a += v;
                }
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    let mut sums = vec![0.0; w];
    for acc in partial {
        for (s, a) in sums.iter_mut().zip(acc) {
            *s += a;
        }
    }
    if params.noise == NoiseMode::AggregateInLaw {
        // Cells sharing a privacy level share a scale; group them by level.
        let mut groups: BTreeMap<u64, (f64, u64)> = BTreeMap::new();
        for (&al, &sc) in params.budget.alphas().iter().zip(&scales) {
            groups.entry(al.to_bits()).or_insert((sc, 0)).1 += panel.n_paths() as u64;
        }
        for (cell, s) in sums.iter_mut().enumerate() {
            let mut rng = substream(seed, Domain::AggregateNoise, cell as u64);
            for &(scale, count) in groups.values() {
                *s += laplace_sum(&mut rng, scale, count)?;
            }
        }
    }
    Ok(PublicAggregate {
        n_paths: panel.n_paths(),
        n_steps: n,
        params: params.clone(),
        seed,
        sums,
    })
}

/// Fraction of cells `(i, j, ℓ, k)` with `|f^{(k)}(θ_ℓ)| > τ_n`.
pub fn clip_exceedance_rate<M: DiffusionModel<f64> + ?Sized>(
    panel: &PathPanel,
    model: &M,
    grid: &ThetaGrid,
    a: usize,
    clip: &ClipProfile,
) -> Result<f64> {
    let n = panel.grid().steps();
    let w = grid.len() * (a + 1);
    let delta = panel.grid().delta();
    let counts: Vec<u64> = (0..panel.n_paths())
        .into_par_iter()
        .map(|i| -> Result<u64> {
            let mut eval = CellEvaluator::new(model, grid, a, delta)?;
            let row = panel.path(i);
            let mut out = vec![0.0; w];
            let mut c = 0u64;
            for j in 0..n {
                eval.raw(row[j], row[j + 1], &mut out)?;
                c += out.iter().filter(|v| v.abs() > clip.tau()).count() as u64;
            }
            Ok(c)
        })
        .collect::<Result<_>>()?;
    let total = (panel.n_paths() * n * w) as f64;
    Ok(counts.iter().sum::<u64>() as f64 / total)
}

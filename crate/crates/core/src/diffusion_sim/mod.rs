//! Euler–Maruyama simulation of independent diffusion paths and Monte Carlo
//! oracles for the population quantities entering the limit theorems.

mod io;
mod oracle;

pub use io::{read_panel_binary, read_panel_csv, write_panel_binary, write_panel_csv};
pub use oracle::{estimate_c_infinity, estimate_sigma0, MonteCarloEstimate};

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::DiffusionModel;
use crate::rng::{substream, Domain};

/// Uniform observation grid `t_j = j T / n`, `j = 0..=n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    horizon: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, steps: usize) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::Config(format!("horizon must be positive, got {horizon}")));
        }
        if steps == 0 {
            return Err(Error::Config("number of steps must be positive".into()));
        }
        Ok(Self { horizon, steps })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn delta(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    pub fn time(&self, j: usize) -> f64 {
        if j == self.steps {
            self.horizon
        } else {
            j as f64 * self.horizon / self.steps as f64
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.steps).map(|j| self.time(j)).collect()
    }
}

/// Law of `X_0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialLaw {
    Point { value: f64 },
    Gaussian { mean: f64, sd: f64 },
}

impl Default for InitialLaw {
    fn default() -> Self {
        InitialLaw::Point { value: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationOptions {
    /// Euler sub-steps per observation interval.
    #[serde(default = "default_substeps")]
    pub substeps: usize,
    #[serde(default)]
    pub initial: InitialLaw,
}

fn default_substeps() -> usize {
    10
}

impl Default for SimulationOptions {
    fn default() -> Self {
        Self {
            substeps: default_substeps(),
            initial: InitialLaw::default(),
        }
    }
}

/// Observations `X^i_{t_j}` of `N` independent individuals, row-major `N × (n+1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathPanel {
    n_paths: usize,
    grid: TimeGrid,
    data: Vec<f64>,
    theta_star: f64,
    seed: u64,
}

impl PathPanel {
    pub fn from_rows(
        n_paths: usize,
        grid: TimeGrid,
        data: Vec<f64>,
        theta_star: f64,
        seed: u64,
    ) -> Result<Self> {
        let width = grid.steps() + 1;
        if data.len() != n_paths * width {
            return Err(Error::Shape(format!(
                "expected {} values for a {}x{} panel, got {}",
                n_paths * width,
                n_paths,
                width,
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                i: pos / width,
                j: pos % width,
            });
        }
        Ok(Self {
            n_paths,
            grid,
            data,
            theta_star,
            seed,
        })
    }

    pub fn n_paths(&self) -> usize {
        self.n_paths
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn theta_star(&self) -> f64 {
        self.theta_star
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn path(&self, i: usize) -> &[f64] {
        let w = self.grid.steps() + 1;
        &self.data[i * w..(i + 1) * w]
    }

    pub fn paths(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.grid.steps() + 1)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * (self.grid.steps() + 1) + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Stack two panels observed on the same grid.
    pub fn concat(&self, other: &PathPanel) -> Result<PathPanel> {
        if self.grid != other.grid {
            return Err(Error::Shape("panels observed on different grids".into()));
        }
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        PathPanel::from_rows(
            self.n_paths + other.n_paths,
            self.grid,
            data,
            self.theta_star,
            self.seed,
        )
    }
}

/// Simulate `n_paths` independent Euler–Maruyama paths under `θ* = theta_star`.
///
/// Path `i` consumes its own counter-based substream, so the output is a pure
/// function of `(model, theta_star, grid, options, seed)` and of `i`, never of
/// `n_paths` or the thread schedule.
pub fn simulate_panel<M: DiffusionModel<f64> + ?Sized>(
    model: &M,
    theta_star: f64,
    n_paths: usize,
    grid: TimeGrid,
    options: &SimulationOptions,
    seed: u64,
) -> Result<PathPanel> {
    if n_paths == 0 {
        return Err(Error::Config("at least one path is required".into()));
    }
    if options.substeps == 0 {
        return Err(Error::Config("sub-stepping factor must be at least 1".into()));
    }
    let width = grid.steps() + 1;
    let mut data = vec![0.0; n_paths * width];
    data.par_chunks_mut(width)
        .enumerate()
        .try_for_each(|(i, row)| simulate_row(model, theta_star, grid, options, seed, i, row))?;
    Ok(PathPanel {
        n_paths,
        grid,
        data,
        theta_star,
        seed,
    })
}

pub(crate) fn simulate_row<M: DiffusionModel<f64> + ?Sized>(
    model: &M,
    theta: f64,
    grid: TimeGrid,
    options: &SimulationOptions,
    seed: u64,
    i: usize,
    row: &mut [f64],
) -> Result<()> {
    let mut rng = substream(seed, Domain::Paths, i as u64);
    let mut x = match options.initial {
        InitialLaw::Point { value } => value,
        InitialLaw::Gaussian { mean, sd } => {
            let z: f64 = rng.sample(StandardNormal);
            mean + sd * z
        }
    };
    row[0] = x;
    let dt = grid.delta() / options.substeps as f64;
    let sqrt_dt = dt.sqrt();
    for j in 1..row.len() {
        for _ in 0..options.substeps {
            let sigma = model.diffusion(x);
            if !(sigma > 0.0) {
                return Err(Error::Config(format!(
                    "non-positive diffusion coefficient {sigma} at x = {x} (path {i})"
                )));
            }
            let z: f64 = rng.sample(StandardNormal);
            x += model.drift(theta, x) * dt + sigma * sqrt_dt * z;
        }
        if !x.is_finite() {
            return Err(Error::NonFinite { i, j });
        }
        row[j] = x;
    }
    Ok(())
}

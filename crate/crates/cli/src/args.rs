//! Flag groups shared across subcommands.

use anyhow::Result;
use clap::Args;
use rankfield::{ConvergenceSpec, RankModel};

#[derive(Args, Debug)]
pub struct SolverOpts {
    /// Jump (teleportation) probability.
    #[arg(short, long, default_value_t = 0.15)]
    pub q: f64,
    /// Per-vertex relative convergence tolerance.
    #[arg(long, default_value_t = 1e-5)]
    pub tolerance: f64,
    /// Iteration budget before giving up.
    #[arg(long, default_value_t = 200)]
    pub max_iterations: usize,
    /// Update threads; 1 guarantees bit-reproducible output.
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
}

impl SolverOpts {
    pub fn spec(&self) -> Result<ConvergenceSpec> {
        Ok(ConvergenceSpec::new(self.tolerance, self.max_iterations)?)
    }

    pub fn config_json(&self) -> serde_json::Value {
        serde_json::json!({
            "q": self.q,
            "tolerance": self.tolerance,
            "max_iterations": self.max_iterations,
            "threads": self.threads,
        })
    }
}

#[derive(Args, Debug)]
pub struct ModelOpts {
    /// Rank-curve amplitude A.
    #[arg(long, alias = "A", default_value_t = 1.5e-4)]
    pub amplitude: f64,
    /// Rank-curve exponent.
    #[arg(long, default_value_t = 1.1)]
    pub alpha: f64,
    /// Total page count of the modeled web.
    #[arg(long, default_value_t = 8.1e9)]
    pub web_size: f64,
    /// Mean in-degree of the modeled web.
    #[arg(long = "mean-k-in", alias = "mean-kin", default_value_t = 10.0)]
    pub mean_k_in: f64,
    /// Jump probability.
    #[arg(short, long, default_value_t = 0.15)]
    pub q: f64,
}

impl ModelOpts {
    pub fn model(&self) -> Result<RankModel> {
        Ok(RankModel {
            amplitude: self.amplitude,
            alpha: self.alpha,
            web_size: self.web_size,
            mean_k_in: self.mean_k_in,
            q: self.q,
        }
        .validated()?)
    }
}

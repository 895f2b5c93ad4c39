//! Multi-threaded drivers around the core simulation kernel.
//!
//! Replicate `r` always draws from stream `r`, and rows are placed by index,
//! so stored ensembles do not depend on the thread count. Streaming summaries
//! use the core's fixed block partition and fold blocks left to right.

use rayon::prelude::*;
use trendlab_core::rng::SeedSpec;
use trendlab_core::sim::{
    check_memory, check_streaming, simulate_replicates, stream_blocks, summarize_block, validate_grid, Ensemble,
    StreamingSummary,
};
use trendlab_core::{Error, ModelParams};

use crate::error::{config_error, Result};

/// Replicates per parallel task when storing full ensembles.
const TASK_REPLICATES: u64 = 256;

pub struct Engine {
    pool: rayon::ThreadPool,
}

impl Engine {
    /// `threads = None` uses every available core.
    pub fn new(threads: Option<usize>) -> Result<Self> {
        if threads == Some(0) {
            return Err(config_error("threads must be at least 1"));
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads.unwrap_or(0))
            .build()
            .map_err(|e| config_error(format!("thread pool: {e}")))?;
        Ok(Engine { pool })
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }

    pub fn monte_carlo(
        &self,
        params: &ModelParams,
        steps: u64,
        grid: &[u64],
        replicates: u64,
        seed: SeedSpec,
        memory_cap: u64,
    ) -> Result<Ensemble> {
        validate_grid(grid, steps)?;
        if replicates == 0 {
            return Err(Error::DomainError("replicate count must be at least 1").into());
        }
        check_memory(replicates, grid.len(), memory_cap)?;
        let tasks: Vec<(u64, u64)> = (0..replicates.div_ceil(TASK_REPLICATES))
            .map(|t| (t * TASK_REPLICATES, ((t + 1) * TASK_REPLICATES).min(replicates)))
            .collect();
        let chunks: Vec<Vec<u64>> = self
            .pool
            .install(|| tasks.par_iter().map(|&(lo, hi)| simulate_replicates(params, grid, seed, lo..hi)).collect());
        let rows = chunks.concat();
        Ok(Ensemble::from_rows(*params, seed, steps, grid.to_vec(), &rows)?)
    }

    pub fn streaming(
        &self,
        params: &ModelParams,
        steps: u64,
        grid: &[u64],
        pairs: &[(usize, usize)],
        replicates: u64,
        seed: SeedSpec,
    ) -> Result<StreamingSummary> {
        check_streaming(steps, grid, pairs, replicates)?;
        let blocks: Vec<_> = stream_blocks(replicates).collect();
        let parts: Vec<StreamingSummary> = self.pool.install(|| {
            blocks.par_iter().map(|range| summarize_block(params, grid, pairs, seed, range.clone())).collect()
        });
        Ok(parts.iter().fold(StreamingSummary::empty(grid, pairs), |acc, b| acc.merge(b)))
    }
}

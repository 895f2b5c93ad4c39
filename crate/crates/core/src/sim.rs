//! Monte Carlo engine.
//!
//! Each step draws exactly two uniforms from the replicate's stream: the first
//! picks the trend by inverse CDF over `(+1, -1, 0)` in that order, the second
//! decides the opinion. This holds even when `b = 0`, so paths stay aligned
//! across parameter changes.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use rand_core::RngCore;

use crate::error::{Error, Result};
use crate::model::{ModelParams, PopulationState};
use crate::moments::{CoMoment, Moments};
use crate::rng::{uniform01, SeedSpec, GENERATOR_NAME};

/// Default limit on stored `replicate × snapshot` cells (8 bytes each).
pub const DEFAULT_MEMORY_CAP: u64 = 1 << 25;

/// Replicates per block in streaming mode. Blocks are summarized independently
/// and merged in index order, so this constant fixes the floating-point result.
pub const STREAM_BLOCK: u64 = 1024;

/// Precomputed per-step constants.
#[derive(Debug, Clone, Copy)]
struct Kernel {
    a: f64,
    b: f64,
    alpha: f64,
    alpha_beta: f64,
}

impl Kernel {
    fn new(params: &ModelParams) -> Self {
        Kernel { a: params.a(), b: params.b(), alpha: params.alpha(), alpha_beta: params.alpha() + params.beta() }
    }

    /// One decision. `X = 1` iff `u2 < a + bY n/t`, tested as `u2 t < a t + bY n`.
    #[inline(always)]
    fn decide<R: RngCore + ?Sized>(&self, n: f64, t: f64, rng: &mut R) -> bool {
        let u1 = uniform01(rng);
        let u2 = uniform01(rng);
        // branch-free inverse CDF: +1 below alpha, -1 below alpha + beta, else 0
        let follower = (u1 < self.alpha) as u8 as f64;
        let against = ((u1 >= self.alpha) & (u1 < self.alpha_beta)) as u8 as f64;
        u2 * t < self.a * t + self.b * (follower - against) * n
    }
}

/// Advances the population by one decision.
pub fn step<R: RngCore + ?Sized>(state: &PopulationState, params: &ModelParams, rng: &mut R) -> PopulationState {
    let kernel = Kernel::new(params);
    let mut next = *state;
    if kernel.decide(state.n_count as f64, state.total() as f64, rng) {
        next.n_count += 1;
    } else {
        next.m_count += 1;
    }
    next.step += 1;
    next
}

/// Checks that `grid` is non-empty, strictly increasing and within `[0, steps]`.
pub fn validate_grid(grid: &[u64], steps: u64) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::DomainError("snapshot grid is empty"));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::DomainError("snapshot grid must be strictly increasing"));
    }
    if grid[grid.len() - 1] > steps {
        return Err(Error::DomainError("snapshot beyond the final step"));
    }
    Ok(())
}

/// Runs one path and writes `n_count` at each grid step into `out`.
/// The grid must already be validated.
fn simulate_into<R: RngCore + ?Sized>(
    kernel: &Kernel,
    params: &ModelParams,
    grid: &[u64],
    rng: &mut R,
    out: &mut [u64],
) {
    let mut n = params.n0();
    let mut t = params.initial_total() as f64;
    let mut done = 0u64;
    for (slot, &target) in out.iter_mut().zip(grid) {
        while done < target {
            n += kernel.decide(n as f64, t, rng) as u64;
            t += 1.0;
            done += 1;
        }
        *slot = n;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub params: ModelParams,
    pub snapshots: Vec<PopulationState>,
}

pub fn run_trajectory<R: RngCore + ?Sized>(
    params: &ModelParams,
    steps: u64,
    grid: &[u64],
    rng: &mut R,
) -> Result<Trajectory> {
    validate_grid(grid, steps)?;
    let kernel = Kernel::new(params);
    let mut counts = vec![0u64; grid.len()];
    simulate_into(&kernel, params, grid, rng, &mut counts);
    // the path continues to `steps` even past the last snapshot
    let snapshots = grid
        .iter()
        .zip(&counts)
        .map(|(&s, &n)| PopulationState { n_count: n, m_count: params.initial_total() + s - n, step: s })
        .collect();
    Ok(Trajectory { params: *params, snapshots })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnsembleMetadata {
    pub generator: &'static str,
    pub version: &'static str,
}

impl Default for EnsembleMetadata {
    fn default() -> Self {
        EnsembleMetadata { generator: GENERATOR_NAME, version: env!("CARGO_PKG_VERSION") }
    }
}

/// Replicate values of `n_count`, stored column-major: `values[s * R + r]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    pub params: ModelParams,
    pub seed: SeedSpec,
    pub steps: u64,
    grid: Vec<u64>,
    replicates: usize,
    values: Vec<u64>,
    pub metadata: EnsembleMetadata,
}

impl Ensemble {
    /// Assembles an ensemble from per-replicate rows (`rows[r * |grid| + s]`),
    /// the layout produced by [`simulate_replicates`].
    pub fn from_rows(params: ModelParams, seed: SeedSpec, steps: u64, grid: Vec<u64>, rows: &[u64]) -> Result<Self> {
        validate_grid(&grid, steps)?;
        let g = grid.len();
        if rows.is_empty() || rows.len() % g != 0 {
            return Err(Error::DomainError("row buffer does not match the grid"));
        }
        let replicates = rows.len() / g;
        let mut values = vec![0u64; rows.len()];
        for (r, row) in rows.chunks_exact(g).enumerate() {
            for (s, &v) in row.iter().enumerate() {
                values[s * replicates + r] = v;
            }
        }
        Ok(Ensemble { params, seed, steps, grid, replicates, values, metadata: EnsembleMetadata::default() })
    }

    pub fn grid(&self) -> &[u64] {
        &self.grid
    }

    pub fn replicates(&self) -> usize {
        self.replicates
    }

    /// All replicate values of `n_count` at snapshot index `s`.
    pub fn column(&self, s: usize) -> &[u64] {
        &self.values[s * self.replicates..(s + 1) * self.replicates]
    }

    pub fn n_count(&self, s: usize, r: usize) -> u64 {
        self.values[s * self.replicates + r]
    }

    pub fn m_count(&self, s: usize, r: usize) -> u64 {
        self.params.initial_total() + self.grid[s] - self.n_count(s, r)
    }

    pub fn state(&self, s: usize, r: usize) -> PopulationState {
        PopulationState { n_count: self.n_count(s, r), m_count: self.m_count(s, r), step: self.grid[s] }
    }

    /// Snapshot index of `step`, if present.
    pub fn snapshot_index(&self, step: u64) -> Option<usize> {
        self.grid.binary_search(&step).ok()
    }
}

/// Checks `replicates × |grid|` against `cap`.
pub fn check_memory(replicates: u64, grid_len: usize, cap: u64) -> Result<()> {
    let requested = replicates.saturating_mul(grid_len as u64);
    if requested > cap {
        return Err(Error::ResourceLimit { requested, cap });
    }
    Ok(())
}

/// Simulates replicates `range` and returns their rows (`|grid|` values each).
/// The grid must already be validated.
pub fn simulate_replicates(params: &ModelParams, grid: &[u64], seed: SeedSpec, range: Range<u64>) -> Vec<u64> {
    let kernel = Kernel::new(params);
    let g = grid.len();
    let mut rows = vec![0u64; (range.end - range.start) as usize * g];
    for (r, row) in range.zip(rows.chunks_exact_mut(g)) {
        let mut rng = seed.stream(r);
        simulate_into(&kernel, params, grid, &mut rng, row);
    }
    rows
}

/// Serial Monte Carlo. Errors with `ResourceLimit` when `replicates × |grid|`
/// exceeds `memory_cap`; use [`streaming_monte_carlo`] then.
pub fn monte_carlo(
    params: &ModelParams,
    steps: u64,
    grid: &[u64],
    replicates: u64,
    seed: SeedSpec,
    memory_cap: u64,
) -> Result<Ensemble> {
    validate_grid(grid, steps)?;
    if replicates == 0 {
        return Err(Error::DomainError("replicate count must be at least 1"));
    }
    check_memory(replicates, grid.len(), memory_cap)?;
    let rows = simulate_replicates(params, grid, seed, 0..replicates);
    Ensemble::from_rows(*params, seed, steps, grid.to_vec(), &rows)
}

/// Moment accumulators of `n_count` per snapshot, plus co-moments for the
/// requested snapshot pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamingSummary {
    pub grid: Vec<u64>,
    pub pairs: Vec<(usize, usize)>,
    pub moments: Vec<Moments>,
    pub comoments: Vec<CoMoment>,
}

impl StreamingSummary {
    pub fn empty(grid: &[u64], pairs: &[(usize, usize)]) -> Self {
        StreamingSummary {
            grid: grid.to_vec(),
            pairs: pairs.to_vec(),
            moments: vec![Moments::new(); grid.len()],
            comoments: vec![CoMoment::new(); pairs.len()],
        }
    }

    pub fn push_row(&mut self, row: &[u64]) {
        for (m, &v) in self.moments.iter_mut().zip(row) {
            m.push(v as f64);
        }
        for (c, &(i, j)) in self.comoments.iter_mut().zip(&self.pairs) {
            c.push(row[i] as f64, row[j] as f64);
        }
    }

    pub fn merge(&self, other: &StreamingSummary) -> StreamingSummary {
        StreamingSummary {
            grid: self.grid.clone(),
            pairs: self.pairs.clone(),
            moments: self.moments.iter().zip(&other.moments).map(|(a, b)| a.merge(b)).collect(),
            comoments: self.comoments.iter().zip(&other.comoments).map(|(a, b)| a.merge(b)).collect(),
        }
    }

    pub fn count(&self) -> u64 {
        self.moments.first().map_or(0, Moments::count)
    }
}

fn check_pairs(pairs: &[(usize, usize)], grid_len: usize) -> Result<()> {
    if pairs.iter().any(|&(i, j)| i >= grid_len || j >= grid_len) {
        return Err(Error::DomainError("snapshot pair index out of range"));
    }
    Ok(())
}

/// Replicate ranges of the fixed streaming partition.
pub fn stream_blocks(replicates: u64) -> impl Iterator<Item = Range<u64>> + Clone {
    (0..replicates.div_ceil(STREAM_BLOCK)).map(move |b| b * STREAM_BLOCK..((b + 1) * STREAM_BLOCK).min(replicates))
}

/// Summarizes one block of replicates. The grid must already be validated.
pub fn summarize_block(
    params: &ModelParams,
    grid: &[u64],
    pairs: &[(usize, usize)],
    seed: SeedSpec,
    range: Range<u64>,
) -> StreamingSummary {
    let kernel = Kernel::new(params);
    let mut summary = StreamingSummary::empty(grid, pairs);
    let mut row = vec![0u64; grid.len()];
    for r in range {
        let mut rng = seed.stream(r);
        simulate_into(&kernel, params, grid, &mut rng, &mut row);
        summary.push_row(&row);
    }
    summary
}

/// Validates inputs shared by the streaming drivers.
pub fn check_streaming(steps: u64, grid: &[u64], pairs: &[(usize, usize)], replicates: u64) -> Result<()> {
    validate_grid(grid, steps)?;
    check_pairs(pairs, grid.len())?;
    if replicates == 0 {
        return Err(Error::DomainError("replicate count must be at least 1"));
    }
    Ok(())
}

/// Serial streaming Monte Carlo: blocks of [`STREAM_BLOCK`] replicates merged
/// left to right.
pub fn streaming_monte_carlo(
    params: &ModelParams,
    steps: u64,
    grid: &[u64],
    pairs: &[(usize, usize)],
    replicates: u64,
    seed: SeedSpec,
) -> Result<StreamingSummary> {
    check_streaming(steps, grid, pairs, replicates)?;
    Ok(stream_blocks(replicates)
        .map(|range| summarize_block(params, grid, pairs, seed, range))
        .fold(StreamingSummary::empty(grid, pairs), |acc, b| acc.merge(&b)))
}

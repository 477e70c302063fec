//! Grid-indexed epsilon self-join.
//!
//! Cells are planned into batches; within a batch, workers claim whole
//! cells, so queries grouped into one tile always share a cell and thus a
//! candidate list. Per-cell outputs are merged in cell order, which makes
//! the emitted stream independent of scheduling.

mod plan;
mod strategy;

pub use plan::{plan_batches, Batch, BatchPlan};
pub use strategy::{
    CellOutput, CellRefiner, KernelRegistry, RefineKernel, RefineRequest, ScalarKernel,
    TileKernel, WorkCounters, WorkEvent,
};

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{reorder_dims_by_variance, Dataset};
use crate::error::{Error, Result};
use crate::grid::{default_k_idx, GridIndex};

/// `batch_size` value meaning "one batch for everything".
pub const UNBOUNDED: u64 = u64::MAX;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JoinConfig {
    pub epsilon: f64,
    /// Registry name of the refinement kernel.
    pub kernel: String,
    pub short_circuit: bool,
    /// Indexed dimensions; `None` means `min(d, 6)`.
    pub k_idx: Option<usize>,
    /// Target estimated pairs per batch.
    pub batch_size: u64,
    pub thread_count: usize,
    pub reorder_dims: bool,
    /// Upper bound on result pairs; exceeding it is a resource error.
    pub max_pairs: Option<u64>,
    pub record_events: bool,
}

impl JoinConfig {
    pub fn new(epsilon: f64) -> Self {
        Self {
            epsilon,
            kernel: "tile".to_string(),
            short_circuit: true,
            k_idx: None,
            batch_size: 1 << 22,
            thread_count: 1,
            reorder_dims: false,
            max_pairs: None,
            record_events: false,
        }
    }

    pub fn with_kernel(mut self, kernel: impl Into<String>) -> Self {
        self.kernel = kernel.into();
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::validation(format!(
                "epsilon must be positive and finite, got {}",
                self.epsilon
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::validation("batch_size must be at least 1"));
        }
        if self.thread_count == 0 {
            return Err(Error::validation("thread_count must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pair {
    pub query: u32,
    pub neighbor: u32,
    pub sq_dist: f64,
}

impl Pair {
    pub fn new(query: u32, neighbor: u32, sq_dist: f64) -> Self {
        Self {
            query,
            neighbor,
            sq_dist,
        }
    }

    pub fn ids(&self) -> (u32, u32) {
        (self.query, self.neighbor)
    }
}

/// Receives each batch's pairs in deterministic order.
pub trait PairSink {
    fn accept(&mut self, batch: usize, pairs: &[Pair]) -> Result<()>;
}

/// Collects all pairs in memory.
#[derive(Debug, Default)]
pub struct VecSink {
    pub pairs: Vec<Pair>,
}

impl PairSink for VecSink {
    fn accept(&mut self, _batch: usize, pairs: &[Pair]) -> Result<()> {
        self.pairs.extend_from_slice(pairs);
        Ok(())
    }
}

/// Discards pairs; only the count survives.
#[derive(Debug, Default)]
pub struct CountSink {
    pub count: u64,
}

impl PairSink for CountSink {
    fn accept(&mut self, _batch: usize, pairs: &[Pair]) -> Result<()> {
        self.count += pairs.len() as u64;
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct JoinStats {
    pub kernel: String,
    pub k_idx: usize,
    pub cells: u64,
    pub batches: u64,
    #[serde(flatten)]
    pub work: WorkCounters,
    pub index_secs: f64,
    pub refine_secs: f64,
    pub total_secs: f64,
    /// Candidate pairs evaluated per second of refinement.
    pub candidates_per_sec: f64,
    pub pairs_per_sec: f64,
}

/// Outcome of a join streamed into a caller-supplied sink.
#[derive(Debug, Clone, Default)]
pub struct JoinRun {
    pub total_pairs: u64,
    pub stats: JoinStats,
    pub events: Vec<WorkEvent>,
    /// Column order used for indexing, when dimensions were reordered.
    pub permutation: Option<Vec<usize>>,
}

#[derive(Debug, Clone)]
pub struct JoinResult {
    /// Sorted by `(query, neighbor)`.
    pub pairs: Vec<Pair>,
    pub n: usize,
    pub stats: JoinStats,
    pub events: Vec<WorkEvent>,
}

impl JoinResult {
    pub fn total_pairs(&self) -> u64 {
        self.pairs.len() as u64
    }

    pub fn selectivity(&self) -> f64 {
        selectivity(self.total_pairs(), self.n)
    }

    pub fn pair_ids(&self) -> Vec<(u32, u32)> {
        self.pairs.iter().map(Pair::ids).collect()
    }
}

/// Average neighbors per point excluding the point itself: `(|R| - n) / n`.
pub fn selectivity(total_pairs: u64, n: usize) -> f64 {
    (total_pairs as f64 - n as f64) / n as f64
}

pub fn self_join(dataset: &Dataset, config: &JoinConfig) -> Result<JoinResult> {
    self_join_with(dataset, config, &KernelRegistry::default())
}

pub fn self_join_with(
    dataset: &Dataset,
    config: &JoinConfig,
    registry: &KernelRegistry,
) -> Result<JoinResult> {
    let mut sink = VecSink::default();
    let run = run_join(dataset, config, registry, &mut sink)?;
    let mut pairs = sink.pairs;
    pairs.sort_unstable_by_key(Pair::ids);
    Ok(JoinResult {
        pairs,
        n: dataset.len(),
        stats: run.stats,
        events: run.events,
    })
}

/// Runs the join, streaming each batch into `sink`.
pub fn run_join(
    dataset: &Dataset,
    config: &JoinConfig,
    registry: &KernelRegistry,
    sink: &mut dyn PairSink,
) -> Result<JoinRun> {
    config.validate()?;
    let kernel = registry.get(&config.kernel)?;
    let k_idx = config.k_idx.unwrap_or_else(|| default_k_idx(dataset.dims()));
    let started = Instant::now();

    let (reordered, permutation) = if config.reorder_dims && dataset.len() >= 2 {
        let (ds, perm) = reorder_dims_by_variance(dataset)?;
        (Some(ds), Some(perm))
    } else {
        (None, None)
    };
    let data = reordered.as_ref().unwrap_or(dataset);

    let index = GridIndex::build(data, config.epsilon, k_idx)?;
    let plan = plan_batches(&index, config);
    let index_secs = started.elapsed().as_secs_f64();

    let refine_start = Instant::now();
    let refiner = kernel.prepare(data)?;
    let pool = if config.thread_count > 1 {
        Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(config.thread_count)
                .build()
                .map_err(|e| Error::Resource(format!("cannot start worker pool: {e}")))?,
        )
    } else {
        None
    };

    let epsilon_sq = config.epsilon * config.epsilon;
    let refine_cell = |slot: usize| -> Result<CellOutput> {
        let candidates = index.candidates_for_slot(slot);
        let mut out = CellOutput::default();
        refiner.refine(
            &RefineRequest {
                queries: index.members_at(slot),
                candidates: &candidates,
                epsilon_sq,
                short_circuit: config.short_circuit,
                record_events: config.record_events,
            },
            &mut out,
        )?;
        Ok(out)
    };

    let mut work = WorkCounters::default();
    let mut events = Vec::new();
    let mut total_pairs = 0u64;
    let mut batch_pairs = Vec::new();
    for (b, batch) in plan.batches.iter().enumerate() {
        let outputs: Vec<Result<CellOutput>> = match &pool {
            Some(pool) => pool.install(|| batch.cells.clone().into_par_iter().map(refine_cell).collect()),
            None => batch.cells.clone().map(refine_cell).collect(),
        };
        batch_pairs.clear();
        for out in outputs {
            let out = out?;
            work.add(&out.counters);
            events.extend(out.events);
            batch_pairs.extend(out.pairs);
        }
        total_pairs += batch_pairs.len() as u64;
        if let Some(limit) = config.max_pairs {
            if total_pairs > limit {
                return Err(Error::Resource(format!(
                    "batch {b} brings the result to {total_pairs} pairs, over the capacity of {limit}"
                )));
            }
        }
        sink.accept(b, &batch_pairs)?;
    }

    let refine_secs = refine_start.elapsed().as_secs_f64();
    let per_sec = |v: u64| if refine_secs > 0.0 { v as f64 / refine_secs } else { 0.0 };
    let stats = JoinStats {
        kernel: kernel.name().to_string(),
        k_idx,
        cells: index.cell_count() as u64,
        batches: plan.len() as u64,
        work,
        index_secs,
        refine_secs,
        total_secs: started.elapsed().as_secs_f64(),
        candidates_per_sec: per_sec(work.candidates_refined),
        pairs_per_sec: per_sec(total_pairs),
    };
    Ok(JoinRun {
        total_pairs,
        stats,
        events,
        permutation,
    })
}

//! Refinement kernels. Each kernel turns (queries of one cell, that cell's
//! candidates) into emitted pairs, and is looked up by name at run time.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::Pair;
use crate::dataset::{chunk_count, Dataset};
use crate::error::{Error, Result};
use crate::kernels::{expanded_tile, precompute_chunk_norms, scalar_sq_unchecked, ChunkNorms, Panel, ScalarOutcome};
use crate::tile::M;

/// Work for one group of queries that share a candidate list.
#[derive(Debug, Clone, Copy)]
pub struct RefineRequest<'a> {
    pub queries: &'a [u32],
    pub candidates: &'a [u32],
    pub epsilon_sq: f64,
    pub short_circuit: bool,
    pub record_events: bool,
}

/// Counters kernels report for every unit of work.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkCounters {
    pub tiles_processed: u64,
    pub chunks_executed: u64,
    pub chunks_skipped: u64,
    pub candidates_refined: u64,
    pub pairs_emitted: u64,
}

impl WorkCounters {
    pub fn add(&mut self, other: &WorkCounters) {
        self.tiles_processed += other.tiles_processed;
        self.chunks_executed += other.chunks_executed;
        self.chunks_skipped += other.chunks_skipped;
        self.candidates_refined += other.candidates_refined;
        self.pairs_emitted += other.pairs_emitted;
    }
}

/// One unit of refinement work, recorded when event logging is on. The
/// tile kernel logs one event per tile, the scalar kernel one per query.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkEvent {
    pub tile: bool,
    pub queries: u32,
    pub candidates: u32,
    pub chunks_executed: u32,
    pub chunks_skipped: u32,
    pub pairs: u32,
}

#[derive(Debug, Default)]
pub struct CellOutput {
    pub pairs: Vec<Pair>,
    pub counters: WorkCounters,
    pub events: Vec<WorkEvent>,
}

pub trait RefineKernel: Send + Sync {
    fn name(&self) -> &'static str;

    /// Per-dataset setup (e.g. norm precompute), shared by all workers.
    fn prepare<'a>(&self, dataset: &'a Dataset) -> Result<Box<dyn CellRefiner + 'a>>;
}

pub trait CellRefiner: Send + Sync {
    fn refine(&self, request: &RefineRequest<'_>, out: &mut CellOutput) -> Result<()>;
}

/// Expanded-form distance tiles: up to 8 queries x 8 candidates per tile,
/// one multiply-accumulate per 4-dimension chunk.
#[derive(Debug, Default, Clone, Copy)]
pub struct TileKernel;

struct TileRefiner<'a> {
    dataset: &'a Dataset,
    norms: ChunkNorms,
}

impl RefineKernel for TileKernel {
    fn name(&self) -> &'static str {
        "tile"
    }

    fn prepare<'a>(&self, dataset: &'a Dataset) -> Result<Box<dyn CellRefiner + 'a>> {
        let norms = precompute_chunk_norms(dataset)?;
        Ok(Box::new(TileRefiner { dataset, norms }))
    }
}

impl CellRefiner for TileRefiner<'_> {
    fn refine(&self, req: &RefineRequest<'_>, out: &mut CellOutput) -> Result<()> {
        if req.candidates.is_empty() {
            return Ok(());
        }
        let mut cand = Panel::new();
        cand.gather(self.dataset, &self.norms, req.candidates);
        let mut query = Panel::new();
        for group in req.queries.chunks(M) {
            query.gather(self.dataset, &self.norms, group);
            for block in 0..cand.blocks() {
                let tile = expanded_tile(&query, &cand, block, req.epsilon_sq, req.short_circuit)?;
                let mut emitted = 0u32;
                if !tile.pruned {
                    let cands = &req.candidates[block * 8..block * 8 + tile.valid_candidates];
                    for (q, &qid) in group.iter().enumerate() {
                        for (c, &cid) in cands.iter().enumerate() {
                            let sq = tile.get(q, c);
                            if sq <= req.epsilon_sq {
                                out.pairs.push(Pair::new(qid, cid, sq));
                                emitted += 1;
                            }
                        }
                    }
                }
                let skipped = tile.chunks_skipped();
                out.counters.add(&WorkCounters {
                    tiles_processed: 1,
                    chunks_executed: tile.chunks_executed as u64,
                    chunks_skipped: skipped as u64,
                    candidates_refined: (tile.valid_queries * tile.valid_candidates) as u64,
                    pairs_emitted: emitted as u64,
                });
                if req.record_events {
                    out.events.push(WorkEvent {
                        tile: true,
                        queries: tile.valid_queries as u32,
                        candidates: tile.valid_candidates as u32,
                        chunks_executed: tile.chunks_executed as u32,
                        chunks_skipped: skipped as u32,
                        pairs: emitted,
                    });
                }
            }
        }
        Ok(())
    }
}

/// Per-pair running-sum refinement, testing the threshold every
/// `min(8, d)` dimensions.
#[derive(Debug, Default, Clone, Copy)]
pub struct ScalarKernel;

struct ScalarRefiner<'a> {
    dataset: &'a Dataset,
    unroll: usize,
    chunks: u64,
}

impl RefineKernel for ScalarKernel {
    fn name(&self) -> &'static str {
        "scalar"
    }

    fn prepare<'a>(&self, dataset: &'a Dataset) -> Result<Box<dyn CellRefiner + 'a>> {
        Ok(Box::new(ScalarRefiner {
            dataset,
            unroll: dataset.dims().min(8),
            chunks: chunk_count(dataset.dims()) as u64,
        }))
    }
}

impl CellRefiner for ScalarRefiner<'_> {
    fn refine(&self, req: &RefineRequest<'_>, out: &mut CellOutput) -> Result<()> {
        for &qid in req.queries {
            let q = self.dataset.point(qid as usize);
            let mut local = WorkCounters::default();
            for &cid in req.candidates {
                let c = self.dataset.point(cid as usize);
                local.candidates_refined += 1;
                match scalar_sq_unchecked(q, c, req.epsilon_sq, req.short_circuit, self.unroll) {
                    ScalarOutcome::Distance(sq) => {
                        local.chunks_executed += self.chunks;
                        if sq <= req.epsilon_sq {
                            out.pairs.push(Pair::new(qid, cid, sq));
                            local.pairs_emitted += 1;
                        }
                    }
                    ScalarOutcome::Pruned { dims_evaluated } => {
                        let ran = chunk_count(dims_evaluated) as u64;
                        local.chunks_executed += ran;
                        local.chunks_skipped += self.chunks - ran;
                    }
                }
            }
            out.counters.add(&local);
            if req.record_events {
                out.events.push(WorkEvent {
                    tile: false,
                    queries: 1,
                    candidates: req.candidates.len() as u32,
                    chunks_executed: local.chunks_executed as u32,
                    chunks_skipped: local.chunks_skipped as u32,
                    pairs: local.pairs_emitted as u32,
                });
            }
        }
        Ok(())
    }
}

/// Named refinement kernels.
#[derive(Clone)]
pub struct KernelRegistry {
    kernels: BTreeMap<&'static str, Arc<dyn RefineKernel>>,
}

impl KernelRegistry {
    pub fn empty() -> Self {
        Self {
            kernels: BTreeMap::new(),
        }
    }

    /// Registry holding the `tile` and `scalar` kernels.
    pub fn with_builtins() -> Self {
        let mut r = Self::empty();
        r.register(Arc::new(TileKernel));
        r.register(Arc::new(ScalarKernel));
        r
    }

    /// Adds a kernel, replacing any previous one with the same name.
    pub fn register(&mut self, kernel: Arc<dyn RefineKernel>) -> &mut Self {
        self.kernels.insert(kernel.name(), kernel);
        self
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn RefineKernel>> {
        self.kernels.get(name).cloned().ok_or_else(|| {
            Error::validation(format!(
                "unknown kernel '{name}' (available: {})",
                self.names().collect::<Vec<_>>().join(", ")
            ))
        })
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.kernels.keys().copied()
    }
}

impl Default for KernelRegistry {
    fn default() -> Self {
        Self::with_builtins()
    }
}

impl fmt::Debug for KernelRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.names()).finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_registered() {
        let r = KernelRegistry::default();
        assert_eq!(r.names().collect::<Vec<_>>(), vec!["scalar", "tile"]);
        assert_eq!(r.get("tile").unwrap().name(), "tile");
        let err = r.get("gpu").err().unwrap().to_string();
        assert!(err.contains("scalar, tile"), "{err}");
    }

    #[test]
    fn kernels_agree_on_a_cell() {
        let ds = Dataset::from_rows(&[[0.0, 0.0], [0.1, 0.0], [0.5, 0.5], [0.05, 0.05]]).unwrap();
        let ids: Vec<u32> = (0..4).collect();
        let req = RefineRequest {
            queries: &ids,
            candidates: &ids,
            epsilon_sq: 0.1 * 0.1,
            short_circuit: true,
            record_events: true,
        };
        let mut got = Vec::new();
        for k in [&TileKernel as &dyn RefineKernel, &ScalarKernel] {
            let r = k.prepare(&ds).unwrap();
            let mut out = CellOutput::default();
            r.refine(&req, &mut out).unwrap();
            let mut ids: Vec<_> = out.pairs.iter().map(|p| (p.query, p.neighbor)).collect();
            ids.sort_unstable();
            assert_eq!(out.counters.candidates_refined, 16);
            assert_eq!(out.counters.pairs_emitted as usize, ids.len());
            got.push(ids);
        }
        assert_eq!(got[0], got[1]);
        assert!(got[0].contains(&(0, 1)) && got[0].contains(&(3, 0)) && !got[0].contains(&(0, 2)));
    }
}

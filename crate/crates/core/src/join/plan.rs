use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::JoinConfig;
use crate::grid::GridIndex;

/// A contiguous run of cell slots (lexicographic order) processed together.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Batch {
    pub cells: Range<usize>,
    /// Sum over cells of `members * candidates`.
    pub estimated_pairs: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BatchPlan {
    pub batches: Vec<Batch>,
}

impl BatchPlan {
    pub fn len(&self) -> usize {
        self.batches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.batches.is_empty()
    }
}

/// Greedily packs cells, in index order, into batches whose estimated
/// pair count reaches `config.batch_size`. A batch closes on the cell that
/// meets the target, so it overshoots by at most that cell's estimate.
pub fn plan_batches(index: &GridIndex, config: &JoinConfig) -> BatchPlan {
    let target = config.batch_size.max(1);
    let mut batches = Vec::new();
    let mut start = 0;
    let mut running = 0u64;
    for slot in 0..index.cell_count() {
        let members = index.members_at(slot).len() as u64;
        let estimate = members.saturating_mul(index.candidate_count(slot) as u64);
        running = running.saturating_add(estimate);
        if running >= target {
            batches.push(Batch {
                cells: start..slot + 1,
                estimated_pairs: running,
            });
            start = slot + 1;
            running = 0;
        }
    }
    if start < index.cell_count() {
        batches.push(Batch {
            cells: start..index.cell_count(),
            estimated_pairs: running,
        });
    }
    BatchPlan { batches }
}

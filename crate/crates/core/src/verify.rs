//! Engine-versus-oracle comparison.

use crate::dataset::Dataset;
use crate::error::Result;
use crate::join::{self_join_with, JoinConfig, KernelRegistry};
use crate::oracle::brute_force_join;

/// Entries listed per side of a mismatch report.
pub const MAX_LISTED_DIFFERENCES: usize = 100;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerifyReport {
    pub engine_pairs: u64,
    pub oracle_pairs: u64,
    /// Pairs the oracle found and the engine did not (capped).
    pub missing: Vec<(u32, u32)>,
    /// Pairs the engine reported that the oracle did not (capped).
    pub extra: Vec<(u32, u32)>,
    pub total_differences: u64,
}

impl VerifyReport {
    pub fn matches(&self) -> bool {
        self.total_differences == 0
    }
}

pub fn verify_join(
    dataset: &Dataset,
    config: &JoinConfig,
    registry: &KernelRegistry,
    force: bool,
) -> Result<VerifyReport> {
    let oracle = brute_force_join(dataset, config.epsilon, force)?;
    let engine = self_join_with(dataset, config, registry)?.pair_ids();

    let (mut missing, mut extra) = (Vec::new(), Vec::new());
    let mut total = 0u64;
    let (mut i, mut j) = (0, 0);
    let (a, b) = (&oracle.pairs, &engine);
    while i < a.len() || j < b.len() {
        let take_missing = j >= b.len() || (i < a.len() && a[i] < b[j]);
        let take_extra = i >= a.len() || (j < b.len() && b[j] < a[i]);
        if take_missing {
            if missing.len() < MAX_LISTED_DIFFERENCES {
                missing.push(a[i]);
            }
            total += 1;
            i += 1;
        } else if take_extra {
            if extra.len() < MAX_LISTED_DIFFERENCES {
                extra.push(b[j]);
            }
            total += 1;
            j += 1;
        } else {
            i += 1;
            j += 1;
        }
    }
    Ok(VerifyReport {
        engine_pairs: engine.len() as u64,
        oracle_pairs: oracle.len() as u64,
        missing,
        extra,
        total_differences: total,
    })
}

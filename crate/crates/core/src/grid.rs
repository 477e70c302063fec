//! Sparse epsilon-width grid over the leading `k_idx` dimensions.
//!
//! Points sharing a cell share one candidate set: the members of all
//! occupied cells within Chebyshev distance 1. Adjacency bounds each
//! indexed coordinate difference by epsilon, so that set is a superset of
//! every member's true neighbors.

use std::collections::HashMap;

use crate::dataset::Dataset;
use crate::error::{Error, Result};

/// Dimensions indexed when the caller does not choose.
pub const DEFAULT_MAX_INDEXED_DIMS: usize = 6;

pub fn default_k_idx(d: usize) -> usize {
    d.min(DEFAULT_MAX_INDEXED_DIMS)
}

/// Integer cell coordinates, `floor(p_j / epsilon)` per indexed dimension.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellCoord(Box<[i64]>);

impl CellCoord {
    pub fn new(coords: impl Into<Box<[i64]>>) -> Self {
        Self(coords.into())
    }

    pub fn of_point(point: &[f64], epsilon: f64, k_idx: usize) -> Self {
        Self(
            point[..k_idx]
                .iter()
                .map(|&v| (v / epsilon).floor() as i64)
                .collect(),
        )
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    pub fn dims(&self) -> usize {
        self.0.len()
    }

    pub fn chebyshev(&self, other: &CellCoord) -> u64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| a.abs_diff(*b))
            .max()
            .unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq)]
struct CellEntry {
    coord: CellCoord,
    start: usize,
    end: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridIndex {
    epsilon: f64,
    k_idx: usize,
    n: usize,
    /// Occupied cells in lexicographic order.
    cells: Vec<CellEntry>,
    lookup: HashMap<CellCoord, usize>,
    /// Point ids grouped by cell, ascending within each cell.
    point_order: Vec<u32>,
}

impl GridIndex {
    pub fn build(dataset: &Dataset, epsilon: f64, k_idx: usize) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::validation(format!(
                "epsilon must be positive and finite, got {epsilon}"
            )));
        }
        if k_idx == 0 || k_idx > dataset.dims() {
            return Err(Error::validation(format!(
                "k_idx must be in 1..={}, got {k_idx}",
                dataset.dims()
            )));
        }
        if dataset.len() > u32::MAX as usize {
            return Err(Error::Resource(format!(
                "{} points exceed the u32 id space",
                dataset.len()
            )));
        }
        let mut keyed: Vec<(CellCoord, u32)> = dataset
            .points()
            .enumerate()
            .map(|(i, p)| (CellCoord::of_point(p, epsilon, k_idx), i as u32))
            .collect();
        keyed.sort_unstable();

        let mut cells: Vec<CellEntry> = Vec::new();
        let mut point_order = Vec::with_capacity(keyed.len());
        for (i, (coord, id)) in keyed.into_iter().enumerate() {
            match cells.last_mut() {
                Some(last) if last.coord == coord => last.end = i + 1,
                _ => cells.push(CellEntry {
                    coord,
                    start: i,
                    end: i + 1,
                }),
            }
            point_order.push(id);
        }
        let lookup = cells
            .iter()
            .enumerate()
            .map(|(i, c)| (c.coord.clone(), i))
            .collect();
        Ok(Self {
            epsilon,
            k_idx,
            n: dataset.len(),
            cells,
            lookup,
            point_order,
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn k_idx(&self) -> usize {
        self.k_idx
    }

    pub fn point_count(&self) -> usize {
        self.n
    }

    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    pub fn point_order(&self) -> &[u32] {
        &self.point_order
    }

    /// Occupied cells in lexicographic order.
    pub fn cells(&self) -> impl Iterator<Item = &CellCoord> + '_ {
        self.cells.iter().map(|c| &c.coord)
    }

    pub fn cell_at(&self, slot: usize) -> &CellCoord {
        &self.cells[slot].coord
    }

    /// Position of `cell` in lexicographic order, if occupied.
    pub fn slot_of(&self, cell: &CellCoord) -> Option<usize> {
        self.lookup.get(cell).copied()
    }

    pub fn members(&self, cell: &CellCoord) -> &[u32] {
        self.slot_of(cell)
            .map(|s| self.members_at(s))
            .unwrap_or(&[])
    }

    pub fn members_at(&self, slot: usize) -> &[u32] {
        let c = &self.cells[slot];
        &self.point_order[c.start..c.end]
    }

    /// Slots of occupied cells within Chebyshev distance 1 of `cell`, in
    /// lexicographic order.
    pub fn neighbor_slots(&self, cell: &CellCoord) -> Vec<usize> {
        let k = cell.dims();
        if k != self.k_idx {
            return Vec::new();
        }
        let offsets = 3usize.checked_pow(k as u32);
        let mut out = match offsets {
            // Probe the 3^k block when that is cheaper than scanning every
            // occupied cell.
            Some(total) if total <= self.cells.len() => {
                let mut out = Vec::new();
                let mut probe = cell.coords().to_vec();
                for code in 0..total {
                    let mut rem = code;
                    for (j, p) in probe.iter_mut().enumerate() {
                        *p = cell.coords()[j] + (rem % 3) as i64 - 1;
                        rem /= 3;
                    }
                    if let Some(&slot) = self.lookup.get(&CellCoord::new(probe.clone())) {
                        out.push(slot);
                    }
                }
                out
            }
            _ => self
                .cells
                .iter()
                .enumerate()
                .filter(|(_, c)| c.coord.chebyshev(cell) <= 1)
                .map(|(i, _)| i)
                .collect(),
        };
        out.sort_unstable();
        out
    }

    pub fn neighbor_cells(&self, cell: &CellCoord) -> Vec<CellCoord> {
        self.neighbor_slots(cell)
            .into_iter()
            .map(|s| self.cells[s].coord.clone())
            .collect()
    }

    /// Members of every neighboring cell, concatenated in cell order.
    pub fn candidates_for_cell(&self, cell: &CellCoord) -> Result<Vec<u32>> {
        if self.slot_of(cell).is_none() {
            return Err(Error::validation(format!("cell {:?} is empty", cell.coords())));
        }
        Ok(self.candidates_for_slot(self.slot_of(cell).unwrap()))
    }

    pub fn candidates_for_slot(&self, slot: usize) -> Vec<u32> {
        let mut out = Vec::new();
        self.candidates_into(slot, &mut out);
        out
    }

    pub(crate) fn candidates_into(&self, slot: usize, out: &mut Vec<u32>) {
        out.clear();
        for s in self.neighbor_slots(&self.cells[slot].coord) {
            out.extend_from_slice(self.members_at(s));
        }
    }

    pub fn candidate_count(&self, slot: usize) -> usize {
        self.neighbor_slots(&self.cells[slot].coord)
            .into_iter()
            .map(|s| self.cells[s].end - self.cells[s].start)
            .sum()
    }
}

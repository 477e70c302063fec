//! Euclidean distance kernels built on the tile engine, plus the scalar
//! reference kernel.
//!
//! The tile path uses the expanded form of the squared distance,
//! `sum_i (a_i^2 - 2 a_i b_i + b_i^2)`. Per 4-dimension chunk, the tile
//! engine computes `-2 a.b + |b_chunk|^2` for an 8x8 block of
//! (query, candidate) pairs, and the query's `|a_chunk|^2` is added with
//! scalar arithmetic afterwards. Chunk norms are precomputed once per
//! dataset.

use crate::dataset::{chunk_count, padded_dims, Dataset, CHUNK};
use crate::error::{Error, Result};
use crate::tile::{mma, TileA, TileAcc, TileB, M, N};

/// Per-point partial squared norms, one entry per 4-dimension chunk.
#[derive(Debug, Clone, PartialEq)]
pub struct ChunkNorms {
    chunks: usize,
    values: Vec<f64>,
}

impl ChunkNorms {
    /// Computes chunk norms for arbitrary points of equal dimensionality.
    pub fn from_points<P: AsRef<[f64]>>(points: &[P]) -> Result<Self> {
        let d = points
            .first()
            .map(|p| p.as_ref().len())
            .ok_or_else(|| Error::validation("chunk norms need at least one point"))?;
        if d == 0 {
            return Err(Error::validation("points must have at least one dimension"));
        }
        let chunks = chunk_count(d);
        let mut values = Vec::with_capacity(points.len() * chunks);
        for (i, p) in points.iter().enumerate() {
            let p = p.as_ref();
            if p.len() != d {
                return Err(Error::validation(format!(
                    "point {i} has {} dimensions, expected {d}",
                    p.len()
                )));
            }
            if let Some(j) = p.iter().position(|v| !v.is_finite()) {
                return Err(Error::validation(format!(
                    "point {i} has non-finite coordinate in dimension {j}"
                )));
            }
            push_chunk_norms(p, &mut values);
        }
        Ok(Self { chunks, values })
    }

    pub fn chunks_per_point(&self) -> usize {
        self.chunks
    }

    pub fn point_count(&self) -> usize {
        self.values.len() / self.chunks
    }

    /// Total stored entries, `points * ceil(d / 4)`.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn of(&self, point: usize) -> &[f64] {
        &self.values[point * self.chunks..(point + 1) * self.chunks]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

fn push_chunk_norms(p: &[f64], out: &mut Vec<f64>) {
    for chunk in p.chunks(CHUNK) {
        let mut s = chunk[0] * chunk[0];
        for &v in &chunk[1..] {
            s += v * v;
        }
        out.push(s);
    }
}

pub fn precompute_chunk_norms(dataset: &Dataset) -> Result<ChunkNorms> {
    // Padding columns are zero, so norms over logical points suffice.
    let chunks = dataset.chunks();
    let mut values = Vec::with_capacity(dataset.len() * chunks);
    for (i, p) in dataset.points().enumerate() {
        if let Some(j) = p.iter().position(|v| !v.is_finite()) {
            return Err(Error::validation(format!(
                "point {i} has non-finite coordinate in dimension {j}"
            )));
        }
        push_chunk_norms(p, &mut values);
    }
    Ok(ChunkNorms { chunks, values })
}

/// Rows of points staged contiguously for tile loads.
///
/// `coords` holds `rows_padded` rows of `padded_dims` values (absent rows
/// are zero); `norms` is chunk-major, `chunks x rows_padded`, so one
/// chunk's norms for eight consecutive rows are contiguous.
#[derive(Debug, Clone, Default)]
pub struct Panel {
    len: usize,
    rows_padded: usize,
    padded_dims: usize,
    chunks: usize,
    coords: Vec<f64>,
    norms: Vec<f64>,
}

impl Panel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Number of 8-wide blocks.
    pub fn blocks(&self) -> usize {
        self.rows_padded / N
    }

    /// Restages this panel with the points `ids` of `dataset`.
    pub fn gather(&mut self, dataset: &Dataset, norms: &ChunkNorms, ids: &[u32]) {
        let dp = dataset.padded_dims();
        let chunks = dataset.chunks();
        self.reset(ids.len(), dp, chunks);
        for (row, &id) in ids.iter().enumerate() {
            let id = id as usize;
            self.coords[row * dp..(row + 1) * dp].copy_from_slice(dataset.padded_point(id));
            for (j, &v) in norms.of(id).iter().enumerate() {
                self.norms[j * self.rows_padded + row] = v;
            }
        }
    }

    /// Stages raw points with their chunk norms.
    pub fn from_points<P: AsRef<[f64]>, Q: AsRef<[f64]>>(points: &[P], norms: &[Q]) -> Result<Self> {
        let d = points.first().map(|p| p.as_ref().len()).unwrap_or(0);
        if d == 0 {
            return Err(Error::validation("a panel needs at least one point with d >= 1"));
        }
        if norms.len() != points.len() {
            return Err(Error::validation(format!(
                "{} norm slices supplied for {} points",
                norms.len(),
                points.len()
            )));
        }
        let dp = padded_dims(d);
        let chunks = chunk_count(d);
        let mut panel = Self::new();
        panel.reset(points.len(), dp, chunks);
        for (row, (p, nrm)) in points.iter().zip(norms).enumerate() {
            let (p, nrm) = (p.as_ref(), nrm.as_ref());
            if p.len() != d {
                return Err(Error::validation(format!(
                    "point {row} has {} dimensions, expected {d}",
                    p.len()
                )));
            }
            if nrm.len() != chunks {
                return Err(Error::validation(format!(
                    "point {row} has {} chunk norms, expected {chunks}",
                    nrm.len()
                )));
            }
            panel.coords[row * dp..row * dp + d].copy_from_slice(p);
            for (j, &v) in nrm.iter().enumerate() {
                panel.norms[j * panel.rows_padded + row] = v;
            }
        }
        Ok(panel)
    }

    fn reset(&mut self, len: usize, padded_dims: usize, chunks: usize) {
        self.len = len;
        self.rows_padded = len.div_ceil(N).max(1) * N;
        self.padded_dims = padded_dims;
        self.chunks = chunks;
        self.coords.clear();
        self.coords.resize(self.rows_padded * padded_dims, 0.0);
        self.norms.clear();
        self.norms.resize(chunks * self.rows_padded, 0.0);
    }
}

/// An 8x8 block of squared distances between query slots (rows) and
/// candidate slots (columns). Entries outside the valid sub-rectangle carry
/// no meaning.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceTile {
    pub sq_dists: [[f64; N]; M],
    pub valid_queries: usize,
    pub valid_candidates: usize,
    pub chunks_executed: usize,
    pub chunks_total: usize,
    /// Every valid entry exceeded the threshold before the last chunk, and
    /// the remaining chunks were skipped.
    pub pruned: bool,
}

impl DistanceTile {
    pub fn get(&self, query: usize, candidate: usize) -> f64 {
        self.sq_dists[query][candidate]
    }

    pub fn chunks_skipped(&self) -> usize {
        self.chunks_total - self.chunks_executed
    }
}

/// Evaluates one 8x8 tile between the first eight rows of `queries` and
/// candidate block `block` of `candidates`.
///
/// Chunks run in ascending order. With `short_circuit`, once every valid
/// partial sum exceeds `epsilon_sq` the remaining chunks are skipped and
/// the tile is flagged as pruned. Complete results are clamped at zero.
pub fn expanded_tile(
    queries: &Panel,
    candidates: &Panel,
    block: usize,
    epsilon_sq: f64,
    short_circuit: bool,
) -> Result<DistanceTile> {
    if queries.len > M {
        return Err(Error::validation(format!(
            "a tile holds at most {M} queries, got {}",
            queries.len
        )));
    }
    if queries.padded_dims != candidates.padded_dims {
        return Err(Error::validation("query and candidate dimensionality differ"));
    }
    if block >= candidates.blocks() {
        return Err(Error::validation(format!("candidate block {block} out of range")));
    }
    let dp = queries.padded_dims;
    let chunks = queries.chunks;
    let valid_q = queries.len;
    let valid_c = candidates.len.saturating_sub(block * N).min(N);
    let first = block * N;

    let mut acc = [[0.0f64; N]; M];
    let mut executed = 0;
    let mut pruned = false;
    for j in 0..chunks {
        let mut a = TileA::load_row_major(&queries.coords, j * CHUNK, dp)?;
        a.scale(-2.0);
        let b = TileB::load_col_major(&candidates.coords, first * dp + j * CHUNK, dp)?;
        let c = TileAcc::load_row_major(&candidates.norms, j * candidates.rows_padded + first, 0)?;
        let d = mma(&a, &b, &c);
        let qn = &queries.norms[j * queries.rows_padded..j * queries.rows_padded + M];
        for (q, row) in acc.iter_mut().enumerate() {
            let dr = &d.rows()[q];
            for (cell, &dv) in row.iter_mut().zip(dr) {
                *cell = *cell + dv + qn[q];
            }
        }
        executed += 1;

        if short_circuit
            && j + 1 < chunks
            && acc[..valid_q]
                .iter()
                .all(|row| row[..valid_c].iter().all(|&v| v > epsilon_sq))
        {
            pruned = true;
            break;
        }
    }
    if !pruned {
        for v in acc.iter_mut().flatten() {
            *v = v.max(0.0);
        }
    }
    Ok(DistanceTile {
        sq_dists: acc,
        valid_queries: valid_q,
        valid_candidates: valid_c,
        chunks_executed: executed,
        chunks_total: chunks,
        pruned,
    })
}

/// Full 8x8 squared-distance tile between up to eight queries and up to
/// eight candidates, using caller-supplied chunk norms.
pub fn distance_tile_v2<P, Q, R, S>(
    queries: &[P],
    candidates: &[Q],
    query_norms: &[R],
    candidate_norms: &[S],
    epsilon_sq: f64,
    short_circuit: bool,
) -> Result<DistanceTile>
where
    P: AsRef<[f64]>,
    Q: AsRef<[f64]>,
    R: AsRef<[f64]>,
    S: AsRef<[f64]>,
{
    if epsilon_sq.is_nan() || epsilon_sq < 0.0 {
        return Err(Error::validation("epsilon_sq must be non-negative"));
    }
    if queries.is_empty() || queries.len() > M {
        return Err(Error::validation(format!("need 1..={M} queries, got {}", queries.len())));
    }
    if candidates.is_empty() || candidates.len() > N {
        return Err(Error::validation(format!(
            "need 1..={N} candidates, got {}",
            candidates.len()
        )));
    }
    let qd = queries[0].as_ref().len();
    if candidates.iter().any(|c| c.as_ref().len() != qd) {
        return Err(Error::validation("query and candidate dimensionality differ"));
    }
    let qp = Panel::from_points(queries, query_norms)?;
    let cp = Panel::from_points(candidates, candidate_norms)?;
    expanded_tile(&qp, &cp, 0, epsilon_sq, short_circuit)
}

/// Difference-then-square formulation: the query is replicated across all
/// rows of A, candidate differences are formed with an identity multiply,
/// and their self-product lands on the diagonal. Returns one squared
/// distance per candidate.
pub fn distance_tile_v1<P: AsRef<[f64]>>(
    query: &[f64],
    candidates: &[P],
    identity: &TileB,
) -> Result<Vec<f64>> {
    let d = query.len();
    if d == 0 {
        return Err(Error::validation("query must have at least one dimension"));
    }
    if candidates.is_empty() || candidates.len() > M {
        return Err(Error::validation(format!(
            "need 1..={M} candidates, got {}",
            candidates.len()
        )));
    }
    if let Some(i) = candidates.iter().position(|c| c.as_ref().len() != d) {
        return Err(Error::validation(format!(
            "candidate {i} has {} dimensions, expected {d}",
            candidates[i].as_ref().len()
        )));
    }
    let dp = padded_dims(d);
    let mut qbuf = vec![0.0; dp];
    qbuf[..d].copy_from_slice(query);

    let mut staged = [0.0f64; M * N];
    let mut tmp = [0.0f64; M * N];
    let mut dist = TileAcc::zeros();
    for j in 0..dp / CHUNK {
        let a = TileA::load_row_major(&qbuf, j * CHUNK, 0)?;
        staged.fill(0.0);
        for (r, cand) in candidates.iter().enumerate() {
            let cand = cand.as_ref();
            for k in 0..CHUNK {
                if let Some(&v) = cand.get(j * CHUNK + k) {
                    staged[r * N + k] = v;
                }
            }
        }
        let mut neg = TileAcc::load_row_major(&staged, 0, N)?;
        neg.scale(-1.0);
        let diff = mma(&a, identity, &neg);
        diff.store_row_major(&mut tmp, 0, N)?;
        let a2 = TileA::load_row_major(&tmp, 0, N)?;
        let b2 = TileB::load_col_major(&tmp, 0, N)?;
        dist = mma(&a2, &b2, &dist);
    }
    Ok((0..candidates.len()).map(|i| dist.get(i, i)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScalarOutcome {
    Distance(f64),
    /// The partial sum exceeded the threshold after `dims_evaluated` dimensions.
    Pruned { dims_evaluated: usize },
}

impl ScalarOutcome {
    pub fn distance(self) -> Option<f64> {
        match self {
            ScalarOutcome::Distance(v) => Some(v),
            ScalarOutcome::Pruned { .. } => None,
        }
    }
}

/// Running sum of squared differences in ascending dimension order.
pub fn scalar_distance_sq(
    a: &[f64],
    b: &[f64],
    epsilon_sq: f64,
    short_circuit: bool,
) -> Result<ScalarOutcome> {
    scalar_distance_sq_unrolled(a, b, epsilon_sq, short_circuit, 1)
}

/// As [`scalar_distance_sq`], but tests the threshold only after every
/// `unroll` dimensions. The sum is accumulated in the same order, so the
/// returned distance is bit-identical.
pub fn scalar_distance_sq_unrolled(
    a: &[f64],
    b: &[f64],
    epsilon_sq: f64,
    short_circuit: bool,
    unroll: usize,
) -> Result<ScalarOutcome> {
    if a.len() != b.len() {
        return Err(Error::validation(format!(
            "dimension mismatch: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    Ok(scalar_sq_unchecked(a, b, epsilon_sq, short_circuit, unroll.max(1)))
}

#[inline]
pub(crate) fn scalar_sq_unchecked(
    a: &[f64],
    b: &[f64],
    epsilon_sq: f64,
    short_circuit: bool,
    unroll: usize,
) -> ScalarOutcome {
    let mut sum = 0.0;
    let mut done = 0;
    for (ca, cb) in a.chunks(unroll).zip(b.chunks(unroll)) {
        for (x, y) in ca.iter().zip(cb) {
            let diff = x - y;
            sum += diff * diff;
        }
        done += ca.len();
        if short_circuit && sum > epsilon_sq && done < a.len() {
            return ScalarOutcome::Pruned {
                dims_evaluated: done,
            };
        }
    }
    ScalarOutcome::Distance(sum)
}

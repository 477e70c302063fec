//! Fixed-shape FP64 matrix fragments and the multiply-accumulate primitive.
//!
//! Three shapes exist: operand A is `M x K` (8x4), operand B is `K x N`
//! (4x8) and the accumulator is `M x N` (8x8). Elements are held row-major.
//! Every operation on a tile is one logically atomic step; tiles carry no
//! shared state and may be moved across threads freely.

use crate::error::{Error, Result};

/// Accumulator rows.
pub const M: usize = 8;
/// Accumulator columns.
pub const N: usize = 8;
/// Inner (reduction) dimension.
pub const K: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tile<const R: usize, const C: usize> {
    data: [[f64; C]; R],
}

pub type TileA = Tile<M, K>;
pub type TileB = Tile<K, N>;
pub type TileAcc = Tile<M, N>;

impl<const R: usize, const C: usize> Default for Tile<R, C> {
    fn default() -> Self {
        Self::zeros()
    }
}

impl<const R: usize, const C: usize> Tile<R, C> {
    pub const ROWS: usize = R;
    pub const COLS: usize = C;

    pub fn zeros() -> Self {
        Self {
            data: [[0.0; C]; R],
        }
    }

    pub fn from_rows(data: [[f64; C]; R]) -> Self {
        Self { data }
    }

    pub fn from_fn(mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut t = Self::zeros();
        for r in 0..R {
            for c in 0..C {
                t.data[r][c] = f(r, c);
            }
        }
        t
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row][col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[row][col] = value;
    }

    pub fn rows(&self) -> &[[f64; C]; R] {
        &self.data
    }

    /// Loads a tile whose element `(r, c)` is `buf[offset + r * stride + c]`.
    ///
    /// A stride of zero replicates one row across the whole tile.
    pub fn load_row_major(buf: &[f64], offset: usize, stride: usize) -> Result<Self> {
        check_region(buf.len(), offset, stride, R, C, "row")?;
        let mut t = Self::zeros();
        for (r, row) in t.data.iter_mut().enumerate() {
            let start = offset + r * stride;
            row.copy_from_slice(&buf[start..start + C]);
        }
        Ok(t)
    }

    /// Loads a tile whose element `(r, c)` is `buf[offset + c * stride + r]`.
    pub fn load_col_major(buf: &[f64], offset: usize, stride: usize) -> Result<Self> {
        check_region(buf.len(), offset, stride, C, R, "column")?;
        let mut t = Self::zeros();
        for c in 0..C {
            let start = offset + c * stride;
            for (r, &v) in buf[start..start + R].iter().enumerate() {
                t.data[r][c] = v;
            }
        }
        Ok(t)
    }

    /// Writes element `(r, c)` to `buf[offset + r * stride + c]`. Elements of
    /// `buf` outside the addressed region are left untouched.
    pub fn store_row_major(&self, buf: &mut [f64], offset: usize, stride: usize) -> Result<()> {
        check_region(buf.len(), offset, stride, R, C, "row")?;
        for (r, row) in self.data.iter().enumerate() {
            let start = offset + r * stride;
            buf[start..start + C].copy_from_slice(row);
        }
        Ok(())
    }

    pub fn fill(&mut self, value: f64) {
        for row in &mut self.data {
            row.fill(value);
        }
    }

    pub fn filled(value: f64) -> Self {
        Self {
            data: [[value; C]; R],
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for v in self.data.iter_mut().flatten() {
            *v *= factor;
        }
    }

    pub fn scaled(mut self, factor: f64) -> Self {
        self.scale(factor);
        self
    }

    pub fn transpose(&self) -> Tile<C, R> {
        Tile::<C, R>::from_fn(|r, c| self.data[c][r])
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.data.iter().flatten().copied()
    }
}

fn check_region(
    len: usize,
    offset: usize,
    stride: usize,
    lines: usize,
    line_len: usize,
    axis: &'static str,
) -> Result<()> {
    for line in 0..lines {
        let needed = line
            .checked_mul(stride)
            .and_then(|v| v.checked_add(offset))
            .and_then(|v| v.checked_add(line_len))
            .unwrap_or(usize::MAX);
        if needed > len {
            return Err(Error::Bounds {
                axis,
                index: line,
                needed,
                len,
            });
        }
    }
    Ok(())
}

impl TileB {
    /// The leading 4x4 identity block padded with zero columns.
    pub fn identity() -> Self {
        Self::from_fn(|r, c| if r == c { 1.0 } else { 0.0 })
    }
}

/// `D = A x B + C`.
///
/// Each output is the 4-term dot product accumulated in ascending `k`,
/// with `C` added last. The order is fixed so results are reproducible
/// bit for bit.
#[inline]
pub fn mma(a: &TileA, b: &TileB, c: &TileAcc) -> TileAcc {
    let mut d = TileAcc::zeros();
    for r in 0..M {
        let ar = &a.data[r];
        for col in 0..N {
            let mut sum = ar[0] * b.data[0][col];
            sum += ar[1] * b.data[1][col];
            sum += ar[2] * b.data[2][col];
            sum += ar[3] * b.data[3][col];
            d.data[r][col] = sum + c.data[r][col];
        }
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iota(n: usize) -> Vec<f64> {
        (0..n).map(|i| i as f64).collect()
    }

    #[test]
    fn row_major_identity_layout() {
        let buf = iota(32);
        let a = TileA::load_row_major(&buf, 0, 4).unwrap();
        for r in 0..8 {
            for c in 0..4 {
                assert_eq!(a.get(r, c), (4 * r + c) as f64);
            }
        }
        let buf = iota(64);
        let acc = TileAcc::load_row_major(&buf, 0, 8).unwrap();
        assert_eq!(acc.iter().collect::<Vec<_>>(), buf);
    }

    #[test]
    fn col_major_identity_layout() {
        // stride 8 over 8 columns addresses up to element 59
        let buf = iota(64);
        let b = TileB::load_col_major(&buf, 0, 8).unwrap();
        for r in 0..4 {
            for c in 0..8 {
                assert_eq!(b.get(r, c), (8 * c + r) as f64);
            }
        }
    }

    #[test]
    fn col_major_is_transpose_of_row_major() {
        let buf: Vec<f64> = (0..200).map(|i| (i as f64).sin()).collect();
        let row = Tile::<8, 4>::load_row_major(&buf, 7, 9).unwrap();
        let col = Tile::<4, 8>::load_col_major(&buf, 7, 9).unwrap();
        assert_eq!(col, row.transpose());
    }

    #[test]
    fn stride_zero_replicates() {
        let buf = [1.0, 2.0, 3.0, 4.0];
        let a = TileA::load_row_major(&buf, 0, 0).unwrap();
        for r in 0..8 {
            assert_eq!(a.rows()[r], buf);
        }
    }

    #[test]
    fn out_of_bounds_load_names_row() {
        let buf = iota(30);
        match TileA::load_row_major(&buf, 0, 4) {
            Err(Error::Bounds { axis, index, .. }) => {
                assert_eq!(axis, "row");
                assert_eq!(index, 7);
            }
            other => panic!("expected bounds error, got {other:?}"),
        }
        assert!(TileB::load_col_major(&buf, 0, 8).is_err());
        assert!(TileAcc::load_row_major(&buf, usize::MAX - 2, 1).is_err());
    }

    #[test]
    fn out_of_bounds_store() {
        let mut buf = vec![0.0; 63];
        assert!(TileAcc::zeros().store_row_major(&mut buf, 0, 8).is_err());
    }

    #[test]
    fn fill_and_store() {
        let mut t = TileAcc::filled(9.0);
        t.fill(-3.5);
        let mut buf = vec![0.0; 64];
        t.store_row_major(&mut buf, 0, 8).unwrap();
        assert!(buf.iter().all(|&v| v == -3.5));
        t.fill(0.0);
        t.store_row_major(&mut buf, 0, 8).unwrap();
        assert!(buf.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn strided_store_leaves_gaps() {
        let mut buf = vec![f64::NAN; 8 * 13 + 5];
        let src = TileAcc::from_fn(|r, c| (r * 8 + c) as f64);
        src.store_row_major(&mut buf, 5, 13).unwrap();
        for (i, v) in buf.iter().enumerate() {
            let in_region = i >= 5 && (i - 5) % 13 < 8 && (i - 5) / 13 < 8;
            if in_region {
                let (r, c) = ((i - 5) / 13, (i - 5) % 13);
                assert_eq!(*v, (r * 8 + c) as f64);
            } else {
                assert!(v.is_nan(), "gap at {i} was overwritten");
            }
        }
    }

    #[test]
    fn scale_identity_and_zero() {
        let t = TileA::from_fn(|r, c| (r as f64) - 2.5 * c as f64);
        assert_eq!(t.scaled(1.0), t);
        assert!(t.scaled(0.0).iter().all(|v| v == 0.0));
        let s = t.scaled(-2.0);
        for r in 0..8 {
            for c in 0..4 {
                assert_eq!(s.get(r, c), t.get(r, c) * -2.0);
            }
        }
    }

    #[test]
    fn mma_identity_and_zero() {
        let x = TileA::from_fn(|r, c| (r * 10 + c) as f64 + 0.25);
        let d = mma(&x, &TileB::identity(), &TileAcc::zeros());
        for r in 0..8 {
            for c in 0..8 {
                let expect = if c < 4 { x.get(r, c) } else { 0.0 };
                assert_eq!(d.get(r, c), expect);
            }
        }
        let y = TileAcc::from_fn(|r, c| (r as f64) * 0.5 - c as f64);
        let b = TileB::from_fn(|r, c| (r + c) as f64);
        assert_eq!(mma(&TileA::zeros(), &b, &y), y);
    }

    #[test]
    fn mma_ones_accumulator_offsets_product() {
        let a = TileA::from_fn(|r, c| (r + 2 * c) as f64);
        let b = TileB::from_fn(|r, c| (3 * r) as f64 - c as f64);
        let plain = mma(&a, &b, &TileAcc::zeros());
        let ones = mma(&a, &b, &TileAcc::filled(1.0));
        for (p, o) in plain.iter().zip(ones.iter()) {
            assert_eq!(p + 1.0, o);
        }
    }
}

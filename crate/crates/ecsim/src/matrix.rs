//! Dense matrices over GF(2^8), row-major.

use crate::gf256;

/// Error from [`GfMatrix::inverted`]: no usable pivot in some column.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SingularMatrix {
    /// Column in which elimination found no nonzero pivot.
    pub pivot_col: usize,
}

impl std::fmt::Display for SingularMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "matrix is singular: no pivot in column {}", self.pivot_col)
    }
}

impl std::error::Error for SingularMatrix {}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GfMatrix {
    rows: usize,
    cols: usize,
    data: Vec<u8>,
}

impl GfMatrix {
    pub fn zeros(rows: usize, cols: usize) -> GfMatrix {
        GfMatrix { rows, cols, data: vec![0; rows * cols] }
    }

    pub fn identity(n: usize) -> GfMatrix {
        let mut m = GfMatrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1);
        }
        m
    }

    pub fn from_rows(rows: &[Vec<u8>]) -> GfMatrix {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut m = GfMatrix::zeros(r, c);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), c, "ragged rows");
            m.data[i * c..(i + 1) * c].copy_from_slice(row);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> u8 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: u8) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[u8] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// New matrix made of the given rows of `self`, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> GfMatrix {
        let mut m = GfMatrix::zeros(indices.len(), self.cols);
        for (i, &src) in indices.iter().enumerate() {
            let dst = &mut m.data[i * self.cols..(i + 1) * self.cols];
            dst.copy_from_slice(self.row(src));
        }
        m
    }

    /// Matrix product `self * rhs`.
    pub fn mul(&self, rhs: &GfMatrix) -> GfMatrix {
        assert_eq!(self.cols, rhs.rows, "dimension mismatch");
        let mut out = GfMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for l in 0..self.cols {
                let a = self.get(i, l);
                if a == 0 {
                    continue;
                }
                for j in 0..rhs.cols {
                    let t = gf256::mul(a, rhs.get(l, j));
                    out.set(i, j, gf256::add(out.get(i, j), t));
                }
            }
        }
        out
    }

    /// Inverse by Gauss-Jordan elimination with row swaps.
    pub fn inverted(&self) -> Result<GfMatrix, SingularMatrix> {
        assert_eq!(self.rows, self.cols, "only square matrices invert");
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = GfMatrix::identity(n);
        for col in 0..n {
            // find a row at or below the diagonal with a nonzero pivot
            let pivot = (col..n).find(|&r| a.get(r, col) != 0);
            let pivot = pivot.ok_or(SingularMatrix { pivot_col: col })?;
            if pivot != col {
                a.swap_rows(pivot, col);
                inv.swap_rows(pivot, col);
            }
            let p = a.get(col, col);
            let p_inv = gf256::inv(p).expect("pivot checked nonzero");
            a.scale_row(col, p_inv);
            inv.scale_row(col, p_inv);
            for r in 0..n {
                if r == col {
                    continue;
                }
                let factor = a.get(r, col);
                if factor != 0 {
                    a.add_scaled_row(r, col, factor);
                    inv.add_scaled_row(r, col, factor);
                }
            }
        }
        Ok(inv)
    }

    fn swap_rows(&mut self, r1: usize, r2: usize) {
        if r1 == r2 {
            return;
        }
        for c in 0..self.cols {
            self.data.swap(r1 * self.cols + c, r2 * self.cols + c);
        }
    }

    fn scale_row(&mut self, r: usize, factor: u8) {
        for c in 0..self.cols {
            let v = self.get(r, c);
            self.set(r, c, gf256::mul(v, factor));
        }
    }

    /// row[dst] += factor * row[src]
    fn add_scaled_row(&mut self, dst: usize, src: usize, factor: u8) {
        for c in 0..self.cols {
            let t = gf256::mul(factor, self.get(src, c));
            let v = self.get(dst, c);
            self.set(dst, c, gf256::add(v, t));
        }
    }
}

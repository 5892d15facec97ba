//! Dense linear algebra over GF(2): matrix-vector products, triangular
//! solves and Toeplitz hashing.

use rand::Rng;

use crate::bits::{check_len, BitBlock};
use crate::error::{Error, Result};

/// Row-major binary matrix; each row is a packed [`BitBlock`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BitMatrix {
    rows: Vec<BitBlock>,
    cols: usize,
}

impl BitMatrix {
    pub fn identity(n: usize) -> Self {
        let rows = (0..n)
            .map(|i| {
                let mut r = BitBlock::zeros(n);
                r.set(i, true);
                r
            })
            .collect();
        Self { rows, cols: n }
    }

    pub fn from_rows(rows: Vec<BitBlock>, cols: usize) -> Result<Self> {
        for r in &rows {
            check_len(cols, r.len())?;
        }
        Ok(Self { rows, cols })
    }

    /// Random unit-diagonal lower-triangular matrix.
    pub fn random_unit_lower<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let rows = (0..n)
            .map(|i| {
                let mut r = BitBlock::random(n, rng);
                for j in i..n {
                    r.set(j, j == i);
                }
                r
            })
            .collect();
        Self { rows, cols: n }
    }

    /// Random unit-diagonal upper-triangular matrix.
    pub fn random_unit_upper<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let rows = (0..n)
            .map(|i| {
                let mut r = BitBlock::random(n, rng);
                for j in 0..=i {
                    r.set(j, j == i);
                }
                r
            })
            .collect();
        Self { rows, cols: n }
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &BitBlock {
        &self.rows[i]
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.rows[i].get(j)
    }

    /// `self · v` over GF(2).
    pub fn mul_vec(&self, v: &BitBlock) -> Result<BitBlock> {
        check_len(self.cols, v.len())?;
        Ok(self.rows.iter().map(|r| r.dot(v)).collect())
    }

    /// `self · other` over GF(2).
    pub fn mul(&self, other: &BitMatrix) -> Result<BitMatrix> {
        check_len(self.cols, other.nrows())?;
        let rows = self
            .rows
            .iter()
            .map(|r| {
                let mut acc = BitBlock::zeros(other.cols);
                for (k, orow) in other.rows.iter().enumerate() {
                    if r.get(k) {
                        acc.xor_assign_unchecked(orow);
                    }
                }
                acc
            })
            .collect();
        Ok(BitMatrix {
            rows,
            cols: other.cols,
        })
    }

    /// Solves `self · x = y` for a unit-diagonal lower-triangular `self`.
    pub fn solve_unit_lower(&self, y: &BitBlock) -> Result<BitBlock> {
        check_len(self.nrows(), y.len())?;
        let n = y.len();
        let mut x = BitBlock::zeros(n);
        for i in 0..n {
            // x has zeros at positions >= i, so the full-row dot only sees j < i.
            let bit = y.get(i) ^ self.rows[i].dot(&x);
            x.set(i, bit);
        }
        Ok(x)
    }

    /// Solves `self · x = y` for a unit-diagonal upper-triangular `self`.
    pub fn solve_unit_upper(&self, y: &BitBlock) -> Result<BitBlock> {
        check_len(self.nrows(), y.len())?;
        let n = y.len();
        let mut x = BitBlock::zeros(n);
        for i in (0..n).rev() {
            let bit = y.get(i) ^ self.rows[i].dot(&x);
            x.set(i, bit);
        }
        Ok(x)
    }

    /// Rank by Gaussian elimination.
    pub fn rank(&self) -> usize {
        let mut rows = self.rows.clone();
        let mut rank = 0;
        for col in 0..self.cols {
            let Some(pivot) = (rank..rows.len()).find(|&r| rows[r].get(col)) else {
                continue;
            };
            rows.swap(rank, pivot);
            let p = rows[rank].clone();
            for (r, row) in rows.iter_mut().enumerate() {
                if r != rank && row.get(col) {
                    row.xor_assign_unchecked(&p);
                }
            }
            rank += 1;
        }
        rank
    }
}

/// Binary Toeplitz matrix with `out_len` rows and `in_len` columns, defined by
/// a seed of `in_len + out_len - 1` bits. Entry `(i, j)` is
/// `seed[i + in_len - 1 - j]`, so each diagonal is constant.
///
/// The family of such matrices is 2-universal.
#[derive(Clone, Debug)]
pub struct Toeplitz {
    matrix: BitMatrix,
}

impl Toeplitz {
    pub fn new(seed: &BitBlock, in_len: usize, out_len: usize) -> Result<Self> {
        if in_len == 0 || out_len == 0 {
            return Err(Error::invalid(
                "toeplitz shape",
                "dimensions must be positive",
            ));
        }
        check_len(in_len + out_len - 1, seed.len())?;
        let reversed = seed.reversed();
        // Row i is seed[i..i + in_len] reversed, i.e. reversed[out_len-1-i ..][..in_len].
        let rows = (0..out_len)
            .map(|i| reversed.slice(out_len - 1 - i, in_len))
            .collect();
        Ok(Self {
            matrix: BitMatrix { rows, cols: in_len },
        })
    }

    pub fn in_len(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn out_len(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn hash(&self, input: &BitBlock) -> Result<BitBlock> {
        self.matrix.mul_vec(input)
    }

    pub fn matrix(&self) -> &BitMatrix {
        &self.matrix
    }
}

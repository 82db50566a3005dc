//! Dense bit-packed linear algebra over GF(2).
//!
//! Rows are stored as contiguous runs of `u64` words so that row elimination
//! is a linear XOR sweep. All eliminating routines work on a private copy.

use std::fmt;

use thiserror::Error;

const WORD_BITS: usize = 64;

#[inline]
fn words_for(bits: usize) -> usize {
    bits.div_ceil(WORD_BITS)
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Gf2Error {
    #[error("index ({row}, {col}) out of range for {rows}x{cols} matrix")]
    MatrixIndex {
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
    },
    #[error("index {index} out of range for vector of length {len}")]
    VectorIndex { index: usize, len: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
}

/// A packed vector over GF(2).
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitVector {
    len: usize,
    words: Vec<u64>,
}

impl BitVector {
    pub fn zeros(len: usize) -> Self {
        BitVector {
            len,
            words: vec![0; words_for(len)],
        }
    }

    /// Builds a vector from `0`/`1` entries; any nonzero byte counts as one.
    pub fn from_bits(bits: &[u8]) -> Self {
        let mut v = BitVector::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b != 0 {
                v.set_unchecked(i, true);
            }
        }
        v
    }

    pub fn from_support(len: usize, support: impl IntoIterator<Item = usize>) -> Result<Self, Gf2Error> {
        let mut v = BitVector::zeros(len);
        for i in support {
            v.set(i, true)?;
        }
        Ok(v)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, index: usize) -> Result<bool, Gf2Error> {
        if index >= self.len {
            return Err(Gf2Error::VectorIndex { index, len: self.len });
        }
        Ok(self.bit(index))
    }

    pub fn set(&mut self, index: usize, value: bool) -> Result<(), Gf2Error> {
        if index >= self.len {
            return Err(Gf2Error::VectorIndex { index, len: self.len });
        }
        self.set_unchecked(index, value);
        Ok(())
    }

    #[inline]
    pub(crate) fn bit(&self, index: usize) -> bool {
        (self.words[index / WORD_BITS] >> (index % WORD_BITS)) & 1 == 1
    }

    #[inline]
    pub(crate) fn set_unchecked(&mut self, index: usize, value: bool) {
        let mask = 1u64 << (index % WORD_BITS);
        if value {
            self.words[index / WORD_BITS] |= mask;
        } else {
            self.words[index / WORD_BITS] &= !mask;
        }
    }

    #[inline]
    pub(crate) fn flip(&mut self, index: usize) {
        self.words[index / WORD_BITS] ^= 1u64 << (index % WORD_BITS);
    }

    pub fn weight(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// Indices of the one entries, ascending.
    pub fn support(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.weight());
        for (wi, &w) in self.words.iter().enumerate() {
            let mut w = w;
            while w != 0 {
                let tz = w.trailing_zeros() as usize;
                out.push(wi * WORD_BITS + tz);
                w &= w - 1;
            }
        }
        out
    }

    pub fn xor_assign(&mut self, other: &BitVector) -> Result<(), Gf2Error> {
        if self.len != other.len {
            return Err(Gf2Error::DimensionMismatch {
                expected: self.len,
                found: other.len,
            });
        }
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
        Ok(())
    }

    pub fn dot(&self, other: &BitVector) -> Result<bool, Gf2Error> {
        if self.len != other.len {
            return Err(Gf2Error::DimensionMismatch {
                expected: self.len,
                found: other.len,
            });
        }
        let ones: u32 = self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones())
            .sum();
        Ok(ones % 2 == 1)
    }

    pub(crate) fn words(&self) -> &[u64] {
        &self.words
    }
}

impl fmt::Debug for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitVector(")?;
        for i in 0..self.len {
            write!(f, "{}", self.bit(i) as u8)?;
        }
        write!(f, ")")
    }
}

/// A row-major packed matrix over GF(2).
#[derive(Clone, PartialEq, Eq)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    stride: usize,
    data: Vec<u64>,
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let stride = words_for(cols);
        BitMatrix {
            rows,
            cols,
            stride,
            data: vec![0; rows * stride],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = BitMatrix::zeros(n, n);
        for i in 0..n {
            m.set_unchecked(i, i, true);
        }
        m
    }

    /// Builds a matrix from dense `0`/`1` rows. All rows must share one length.
    pub fn from_rows<R: AsRef<[u8]>>(rows: &[R]) -> Result<Self, Gf2Error> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut m = BitMatrix::zeros(rows.len(), cols);
        for (r, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != cols {
                return Err(Gf2Error::DimensionMismatch {
                    expected: cols,
                    found: row.len(),
                });
            }
            for (c, &b) in row.iter().enumerate() {
                if b != 0 {
                    m.set_unchecked(r, c, true);
                }
            }
        }
        Ok(m)
    }

    /// Builds a `rows x cols` matrix whose row `r` has ones at `supports[r]`.
    pub fn from_supports<I, S>(cols: usize, supports: I) -> Result<Self, Gf2Error>
    where
        I: IntoIterator<Item = S>,
        S: IntoIterator<Item = usize>,
    {
        let supports: Vec<Vec<usize>> = supports.into_iter().map(|s| s.into_iter().collect()).collect();
        let mut m = BitMatrix::zeros(supports.len(), cols);
        for (r, s) in supports.iter().enumerate() {
            for &c in s {
                m.set(r, c, true)?;
            }
        }
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> Result<bool, Gf2Error> {
        self.check_index(row, col)?;
        Ok(self.bit(row, col))
    }

    pub fn set(&mut self, row: usize, col: usize, value: bool) -> Result<(), Gf2Error> {
        self.check_index(row, col)?;
        self.set_unchecked(row, col, value);
        Ok(())
    }

    fn check_index(&self, row: usize, col: usize) -> Result<(), Gf2Error> {
        if row >= self.rows || col >= self.cols {
            return Err(Gf2Error::MatrixIndex {
                row,
                col,
                rows: self.rows,
                cols: self.cols,
            });
        }
        Ok(())
    }

    #[inline]
    fn bit(&self, row: usize, col: usize) -> bool {
        (self.data[row * self.stride + col / WORD_BITS] >> (col % WORD_BITS)) & 1 == 1
    }

    #[inline]
    pub(crate) fn set_unchecked(&mut self, row: usize, col: usize, value: bool) {
        let idx = row * self.stride + col / WORD_BITS;
        let mask = 1u64 << (col % WORD_BITS);
        if value {
            self.data[idx] |= mask;
        } else {
            self.data[idx] &= !mask;
        }
    }

    #[inline]
    fn row_words(&self, row: usize) -> &[u64] {
        &self.data[row * self.stride..(row + 1) * self.stride]
    }

    pub fn row(&self, row: usize) -> Result<BitVector, Gf2Error> {
        if row >= self.rows {
            return Err(Gf2Error::MatrixIndex {
                row,
                col: 0,
                rows: self.rows,
                cols: self.cols,
            });
        }
        Ok(BitVector {
            len: self.cols,
            words: self.row_words(row).to_vec(),
        })
    }

    /// `dst ^= src` on whole rows.
    #[inline]
    fn xor_rows(&mut self, dst: usize, src: usize) {
        debug_assert_ne!(dst, src);
        let s = self.stride;
        let (a, b) = if dst < src {
            let (lo, hi) = self.data.split_at_mut(src * s);
            (&mut lo[dst * s..(dst + 1) * s], &hi[..s])
        } else {
            let (lo, hi) = self.data.split_at_mut(dst * s);
            (&mut hi[..s], &lo[src * s..(src + 1) * s])
        };
        for (x, y) in a.iter_mut().zip(b) {
            *x ^= y;
        }
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        let s = self.stride;
        for w in 0..s {
            self.data.swap(a * s + w, b * s + w);
        }
    }

    pub fn transpose(&self) -> BitMatrix {
        let mut t = BitMatrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for (wi, &w) in self.row_words(r).iter().enumerate() {
                let mut w = w;
                while w != 0 {
                    let c = wi * WORD_BITS + w.trailing_zeros() as usize;
                    t.set_unchecked(c, r, true);
                    w &= w - 1;
                }
            }
        }
        t
    }

    /// Matrix-vector product over GF(2).
    pub fn mul_vec(&self, x: &BitVector) -> Result<BitVector, Gf2Error> {
        if x.len != self.cols {
            return Err(Gf2Error::DimensionMismatch {
                expected: self.cols,
                found: x.len,
            });
        }
        let mut out = BitVector::zeros(self.rows);
        for r in 0..self.rows {
            let ones: u32 = self
                .row_words(r)
                .iter()
                .zip(&x.words)
                .map(|(a, b)| (a & b).count_ones())
                .sum();
            if ones % 2 == 1 {
                out.set_unchecked(r, true);
            }
        }
        Ok(out)
    }

    /// Brings a private copy to reduced row echelon form, pivoting on the
    /// lowest available column. Returns the pivot columns in row order.
    fn reduce_in_place(&mut self, limit_cols: usize) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut next = 0;
        for col in 0..limit_cols {
            if next == self.rows {
                break;
            }
            let Some(p) = (next..self.rows).find(|&r| self.bit(r, col)) else {
                continue;
            };
            self.swap_rows(p, next);
            for r in 0..self.rows {
                if r != next && self.bit(r, col) {
                    self.xor_rows(r, next);
                }
            }
            pivots.push(col);
            next += 1;
        }
        pivots
    }
}

impl fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BitMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            write!(f, "  ")?;
            for c in 0..self.cols {
                write!(f, "{}", self.bit(r, c) as u8)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// GF(2) row rank.
pub fn rank(m: &BitMatrix) -> usize {
    let mut work = m.clone();
    work.reduce_in_place(m.cols).len()
}

/// Result of a restricted solve: one particular solution and a basis of the
/// homogeneous solutions supported on the same columns.
#[derive(Debug, Clone)]
pub struct RestrictedSolution {
    pub solution: BitVector,
    pub kernel: Vec<BitVector>,
}

/// Solves `A x = b` with `x` supported on `support`, returning the solution
/// together with a kernel basis. `None` when the system is inconsistent.
///
/// Columns of `support` are eliminated in ascending index order and free
/// variables are set to zero.
pub fn solve_restricted_full(
    a: &BitMatrix,
    b: &BitVector,
    support: &[usize],
) -> Result<Option<RestrictedSolution>, Gf2Error> {
    if b.len != a.rows {
        return Err(Gf2Error::DimensionMismatch {
            expected: a.rows,
            found: b.len,
        });
    }
    let mut cols: Vec<usize> = support.to_vec();
    cols.sort_unstable();
    cols.dedup();
    if let Some(&bad) = cols.iter().find(|&&c| c >= a.cols) {
        return Err(Gf2Error::MatrixIndex {
            row: 0,
            col: bad,
            rows: a.rows,
            cols: a.cols,
        });
    }

    // Compact augmented system: restricted columns followed by b.
    let k = cols.len();
    let mut aug = BitMatrix::zeros(a.rows, k + 1);
    for r in 0..a.rows {
        for (j, &c) in cols.iter().enumerate() {
            if a.bit(r, c) {
                aug.set_unchecked(r, j, true);
            }
        }
        if b.bit(r) {
            aug.set_unchecked(r, k, true);
        }
    }
    let pivots = aug.reduce_in_place(k);
    let consistent = (pivots.len()..aug.rows).all(|r| !aug.bit(r, k));
    if !consistent {
        return Ok(None);
    }

    let mut solution = BitVector::zeros(a.cols);
    for (row, &pc) in pivots.iter().enumerate() {
        if aug.bit(row, k) {
            solution.set_unchecked(cols[pc], true);
        }
    }

    let mut is_pivot = vec![false; k];
    for &pc in &pivots {
        is_pivot[pc] = true;
    }
    let mut kernel = Vec::new();
    for free in (0..k).filter(|&j| !is_pivot[j]) {
        let mut v = BitVector::zeros(a.cols);
        v.set_unchecked(cols[free], true);
        for (row, &pc) in pivots.iter().enumerate() {
            if aug.bit(row, free) {
                v.set_unchecked(cols[pc], true);
            }
        }
        kernel.push(v);
    }
    Ok(Some(RestrictedSolution { solution, kernel }))
}

/// Solves `A x = b` with `x_j = 0` outside `support`. Among the solutions,
/// returns the one with every free variable set to zero.
pub fn solve_restricted(a: &BitMatrix, b: &BitVector, support: &[usize]) -> Result<Option<BitVector>, Gf2Error> {
    Ok(solve_restricted_full(a, b, support)?.map(|s| s.solution))
}

/// Echelon basis of a row space, for repeated membership queries.
#[derive(Debug, Clone)]
pub struct RowSpace {
    basis: BitMatrix,
    pivots: Vec<usize>,
}

impl RowSpace {
    pub fn new(m: &BitMatrix) -> Self {
        let mut work = m.clone();
        let pivots = work.reduce_in_place(m.cols);
        let mut basis = BitMatrix::zeros(pivots.len(), m.cols);
        basis.data.copy_from_slice(&work.data[..pivots.len() * work.stride]);
        RowSpace { basis, pivots }
    }

    pub fn dim(&self) -> usize {
        self.pivots.len()
    }

    pub fn cols(&self) -> usize {
        self.basis.cols
    }

    pub fn contains(&self, v: &BitVector) -> Result<bool, Gf2Error> {
        if v.len != self.basis.cols {
            return Err(Gf2Error::DimensionMismatch {
                expected: self.basis.cols,
                found: v.len,
            });
        }
        // Reduced echelon form: each pivot column is zero in every other basis row.
        let mut w = v.clone();
        for (row, &pc) in self.pivots.iter().enumerate() {
            if w.bit(pc) {
                for (x, y) in w.words.iter_mut().zip(self.basis.row_words(row)) {
                    *x ^= y;
                }
            }
        }
        Ok(w.is_zero())
    }
}

/// True iff `v` is a GF(2) combination of the rows of `m`.
pub fn in_rowspace(m: &BitMatrix, v: &BitVector) -> Result<bool, Gf2Error> {
    if v.len != m.cols {
        return Err(Gf2Error::DimensionMismatch {
            expected: m.cols,
            found: v.len,
        });
    }
    RowSpace::new(m).contains(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mat(rows: &[&[u8]]) -> BitMatrix {
        BitMatrix::from_rows(rows).unwrap()
    }

    #[test]
    fn rank_small_cases() {
        assert_eq!(rank(&BitMatrix::identity(3)), 3);
        assert_eq!(rank(&BitMatrix::zeros(2, 2)), 0);
        assert_eq!(rank(&mat(&[&[1, 1], &[1, 1]])), 1);
    }

    #[test]
    fn rank_leaves_input_untouched() {
        let m = mat(&[&[1, 1, 0], &[1, 1, 0], &[0, 1, 1]]);
        let before = m.clone();
        assert_eq!(rank(&m), 2);
        assert_eq!(m, before);
    }

    #[test]
    fn solve_restricted_examples() {
        let a = mat(&[&[1, 1]]);
        let x = solve_restricted(&a, &BitVector::from_bits(&[0]), &[]).unwrap().unwrap();
        assert_eq!(x, BitVector::from_bits(&[0, 0]));

        let x = solve_restricted(&a, &BitVector::from_bits(&[1]), &[0]).unwrap().unwrap();
        assert_eq!(x, BitVector::from_bits(&[1, 0]));

        let id = BitMatrix::identity(2);
        assert!(solve_restricted(&id, &BitVector::from_bits(&[1, 1]), &[0]).unwrap().is_none());
    }

    #[test]
    fn solve_restricted_rejects_bad_shapes() {
        let a = mat(&[&[1, 1]]);
        assert!(matches!(
            solve_restricted(&a, &BitVector::zeros(2), &[0]),
            Err(Gf2Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            solve_restricted(&a, &BitVector::zeros(1), &[2]),
            Err(Gf2Error::MatrixIndex { .. })
        ));
    }

    #[test]
    fn solve_free_variables_are_zero() {
        // x0 + x1 = 1 with both columns free to use: pivot is column 0.
        let a = mat(&[&[1, 1, 0]]);
        let s = solve_restricted_full(&a, &BitVector::from_bits(&[1]), &[1, 0]).unwrap().unwrap();
        assert_eq!(s.solution, BitVector::from_bits(&[1, 0, 0]));
        assert_eq!(s.kernel, vec![BitVector::from_bits(&[1, 1, 0])]);
    }

    #[test]
    fn rowspace_examples() {
        let m = mat(&[&[1, 1, 0], &[0, 1, 1]]);
        assert!(in_rowspace(&m, &BitVector::zeros(3)).unwrap());
        assert!(in_rowspace(&m, &BitVector::from_bits(&[1, 0, 1])).unwrap());
        let m = mat(&[&[1, 1, 0]]);
        assert!(!in_rowspace(&m, &BitVector::from_bits(&[1, 0, 0])).unwrap());
        assert!(in_rowspace(&m, &BitVector::zeros(2)).is_err());
    }

    #[test]
    fn out_of_range_access_is_an_error() {
        let mut m = BitMatrix::zeros(2, 3);
        assert!(m.get(2, 0).is_err());
        assert!(m.set(0, 3, true).is_err());
        assert!(BitVector::zeros(4).get(4).is_err());
    }

    fn arb_matrix(max_rows: usize, max_cols: usize) -> impl Strategy<Value = BitMatrix> {
        (1..=max_rows, 1..=max_cols).prop_flat_map(|(r, c)| {
            proptest::collection::vec(proptest::collection::vec(0u8..2, c), r)
                .prop_map(|rows| BitMatrix::from_rows(&rows).unwrap())
        })
    }

    proptest! {
        #[test]
        fn rank_is_transpose_invariant(m in arb_matrix(64, 64)) {
            prop_assert_eq!(rank(&m), rank(&m.transpose()));
        }

        #[test]
        fn rowspace_matches_brute_force(m in arb_matrix(12, 20), pick in any::<u16>()) {
            // Enumerate every combination of rows and compare membership.
            let rows = m.rows();
            let target = {
                let mut v = BitVector::zeros(m.cols());
                for r in 0..rows {
                    if (pick >> r) & 1 == 1 {
                        v.xor_assign(&m.row(r).unwrap()).unwrap();
                    }
                }
                v
            };
            prop_assert!(in_rowspace(&m, &target).unwrap());

            let mut probe = target.clone();
            probe.flip((pick as usize) % m.cols());
            let brute = (0u32..(1 << rows)).any(|mask| {
                let mut v = BitVector::zeros(m.cols());
                for r in 0..rows {
                    if (mask >> r) & 1 == 1 {
                        v.xor_assign(&m.row(r).unwrap()).unwrap();
                    }
                }
                v == probe
            });
            prop_assert_eq!(in_rowspace(&m, &probe).unwrap(), brute);
        }

        #[test]
        fn full_support_solve_matches_rank_test(m in arb_matrix(20, 20), bseed in any::<u32>()) {
            let b = BitVector::from_bits(&(0..m.rows()).map(|i| ((bseed >> (i % 32)) & 1) as u8).collect::<Vec<_>>());
            let all: Vec<usize> = (0..m.cols()).collect();
            let mut aug = BitMatrix::zeros(m.rows(), m.cols() + 1);
            for r in 0..m.rows() {
                for c in 0..m.cols() {
                    aug.set(r, c, m.get(r, c).unwrap()).unwrap();
                }
                aug.set(r, m.cols(), b.get(r).unwrap()).unwrap();
            }
            let solvable = rank(&aug) == rank(&m);
            let sol = solve_restricted(&m, &b, &all).unwrap();
            prop_assert_eq!(sol.is_some(), solvable);
            if let Some(x) = sol {
                prop_assert_eq!(m.mul_vec(&x).unwrap(), b);
            }
        }
    }
}

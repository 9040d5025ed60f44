//! Bit-packed GF(2) matrices and the column-subset predicates behind the
//! rank/covering equivalence.
//!
//! A row is one `u64`; column `j` lives at bit `j`. Matrices are limited to
//! [`MAX_COLS`] columns, which is enough for a length-31 code extended by a
//! 21-wide identity block.

use std::fmt;

use crate::error::{Error, Result};

/// Widest supported matrix.
pub const MAX_COLS: usize = 64;

/// Largest dimension for which codewords are enumerated exhaustively.
pub const MAX_ENUM_DIM: usize = 28;

#[inline]
fn low_mask(width: usize) -> u64 {
    if width >= 64 {
        u64::MAX
    } else {
        (1u64 << width) - 1
    }
}

/// A set of column indices, stored as a bit mask.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct ColumnSubset {
    mask: u64,
}

impl ColumnSubset {
    pub const fn from_mask(mask: u64) -> Self {
        ColumnSubset { mask }
    }

    pub const fn empty() -> Self {
        ColumnSubset { mask: 0 }
    }

    /// All of `0..cols`.
    pub fn all(cols: usize) -> Self {
        ColumnSubset { mask: low_mask(cols) }
    }

    pub fn from_indices(indices: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut mask = 0u64;
        for i in indices {
            if i >= MAX_COLS {
                return Err(Error::domain(format!("column index {i} exceeds {MAX_COLS}")));
            }
            mask |= 1 << i;
        }
        Ok(ColumnSubset { mask })
    }

    pub fn mask(self) -> u64 {
        self.mask
    }

    pub fn size(self) -> usize {
        self.mask.count_ones() as usize
    }

    pub fn contains(self, col: usize) -> bool {
        col < 64 && self.mask >> col & 1 == 1
    }

    /// The columns of `0..cols` not in `self`.
    pub fn complement(self, cols: usize) -> Self {
        ColumnSubset {
            mask: !self.mask & low_mask(cols),
        }
    }

    pub fn indices(self) -> impl Iterator<Item = usize> {
        let mut m = self.mask;
        std::iter::from_fn(move || {
            if m == 0 {
                None
            } else {
                let i = m.trailing_zeros() as usize;
                m &= m - 1;
                Some(i)
            }
        })
    }

    fn check_within(self, cols: usize) -> Result<()> {
        if self.mask & !low_mask(cols) != 0 {
            Err(Error::domain(format!(
                "column subset {:#x} reaches beyond {cols} columns",
                self.mask
            )))
        } else {
            Ok(())
        }
    }
}

/// A dense binary matrix with at most 64 columns.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Gf2Matrix {
    rows: usize,
    cols: usize,
    data: Vec<u64>,
}

impl Gf2Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        check_cols(cols)?;
        Ok(Gf2Matrix {
            rows,
            cols,
            data: vec![0; rows],
        })
    }

    pub fn identity(size: usize) -> Result<Self> {
        check_cols(size)?;
        Ok(Gf2Matrix {
            rows: size,
            cols: size,
            data: (0..size).map(|i| 1u64 << i).collect(),
        })
    }

    /// Builds a matrix from packed rows. Bits at or beyond `cols` must be zero.
    pub fn from_rows(cols: usize, rows: Vec<u64>) -> Result<Self> {
        check_cols(cols)?;
        let stray = !low_mask(cols);
        if let Some(r) = rows.iter().position(|&w| w & stray != 0) {
            return Err(Error::domain(format!("row {r} has bits beyond column {cols}")));
        }
        Ok(Gf2Matrix {
            rows: rows.len(),
            cols,
            data: rows,
        })
    }

    /// Builds a matrix from strings over `{0,1}`, one per row.
    pub fn from_bit_strings<S: AsRef<str>>(rows: &[S]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len());
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::domain(format!(
                    "row {i} has {} columns, expected {cols}",
                    r.len()
                )));
            }
            data.push(parse_bits(r).map_err(|c| Error::domain(format!("row {i}: invalid character `{c}`")))?);
        }
        Self::from_rows(cols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Packed row `r`.
    pub fn row(&self, r: usize) -> u64 {
        self.data[r]
    }

    pub fn row_words(&self) -> &[u64] {
        &self.data
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        self.data[r] >> c & 1 == 1
    }

    pub fn set(&mut self, r: usize, c: usize, value: bool) {
        assert!(c < self.cols, "column {c} out of range");
        if value {
            self.data[r] |= 1 << c;
        } else {
            self.data[r] &= !(1 << c);
        }
    }

    /// Column `c` packed with row `r` at bit `r`; requires `rows <= 64`.
    pub fn column(&self, c: usize) -> u64 {
        debug_assert!(self.rows <= 64);
        self.data
            .iter()
            .enumerate()
            .fold(0u64, |acc, (r, &w)| acc | ((w >> c & 1) << r))
    }

    /// All columns, packed as in [`Gf2Matrix::column`].
    pub fn columns(&self) -> Vec<u64> {
        (0..self.cols).map(|c| self.column(c)).collect()
    }

    /// Adds row `src` into row `dst`.
    pub fn add_row(&mut self, dst: usize, src: usize) {
        let s = self.data[src];
        self.data[dst] ^= s;
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        self.data.swap(a, b);
    }

    /// `[self | other]`.
    pub fn hconcat(&self, other: &Gf2Matrix) -> Result<Gf2Matrix> {
        if self.rows != other.rows {
            return Err(Error::domain(format!(
                "cannot concatenate {} rows with {} rows",
                self.rows, other.rows
            )));
        }
        check_cols(self.cols + other.cols)?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| a | (b << self.cols))
            .collect();
        Ok(Gf2Matrix {
            rows: self.rows,
            cols: self.cols + other.cols,
            data,
        })
    }

    pub fn transpose(&self) -> Result<Gf2Matrix> {
        check_cols(self.rows)?;
        Ok(Gf2Matrix {
            rows: self.cols,
            cols: self.rows,
            data: self.columns(),
        })
    }

    /// Dimension of the row space.
    pub fn rank(&self) -> usize {
        rank_of_rows(&self.data)
    }

    /// Rows x |subset| submatrix, columns kept in ascending order.
    pub fn select_columns(&self, subset: ColumnSubset) -> Result<Gf2Matrix> {
        subset.check_within(self.cols)?;
        let data = self.data.iter().map(|&w| pext(w, subset.mask)).collect();
        Ok(Gf2Matrix {
            rows: self.rows,
            cols: subset.size(),
            data,
        })
    }

    /// Reduced row echelon form and its pivot columns (one per nonzero row).
    pub fn rref(&self) -> (Gf2Matrix, Vec<usize>) {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut next = 0;
        for c in 0..self.cols {
            let bit = 1u64 << c;
            let Some(p) = (next..m.rows).find(|&r| m.data[r] & bit != 0) else {
                continue;
            };
            m.data.swap(next, p);
            let pivot_row = m.data[next];
            for r in 0..m.rows {
                if r != next && m.data[r] & bit != 0 {
                    m.data[r] ^= pivot_row;
                }
            }
            pivots.push(c);
            next += 1;
            if next == m.rows {
                break;
            }
        }
        (m, pivots)
    }

    /// A basis of the right null space, one vector per row: a parity-check
    /// matrix when `self` is a generator matrix.
    pub fn null_space(&self) -> Gf2Matrix {
        let (r, pivots) = self.rref();
        let pivot_mask = pivots.iter().fold(0u64, |m, &c| m | 1 << c);
        let free = ColumnSubset::from_mask(!pivot_mask & low_mask(self.cols));
        let data = free
            .indices()
            .map(|f| {
                let mut v = 1u64 << f;
                for (i, &p) in pivots.iter().enumerate() {
                    if r.data[i] >> f & 1 == 1 {
                        v |= 1 << p;
                    }
                }
                v
            })
            .collect();
        Gf2Matrix {
            rows: free.size(),
            cols: self.cols,
            data,
        }
    }

    /// The codeword `u G` for information word `u` (bit `i` selects row `i`).
    pub fn encode(&self, info: u64) -> u64 {
        let mut c = 0;
        let mut u = info;
        while u != 0 {
            let i = u.trailing_zeros() as usize;
            c ^= self.data[i];
            u &= u - 1;
        }
        c
    }

    /// All `2^rows` pairs `(u, uG)` in Gray-code order, starting at zero.
    pub fn enumerate_codewords(&self) -> Result<Codewords<'_>> {
        if self.rows > MAX_ENUM_DIM {
            return Err(Error::Capacity {
                what: format!("codeword enumeration over 2^{} information words", self.rows),
                limit: MAX_ENUM_DIM,
            });
        }
        Ok(Codewords {
            matrix: self,
            step: 0,
            info: 0,
            word: 0,
        })
    }

    /// Parses the `.gmat` text format: a header line `n k` followed by `k`
    /// rows of `n` characters over `{0,1}`.
    pub fn parse_gmat(text: &str) -> Result<Gf2Matrix> {
        let mut lines = text.lines().enumerate();
        let missing = || Error::Parse {
            line: 1,
            message: "missing `n k` header".into(),
        };
        let (i, line) = lines.next().ok_or_else(missing)?;
        let line = line.trim_end();
        if line.is_empty() {
            return Err(missing());
        }
        let mut parts = line.split(' ');
        let parse = |s: Option<&str>| s.and_then(|s| s.parse::<usize>().ok());
        let (n, k) = match (parse(parts.next()), parse(parts.next()), parts.next()) {
            (Some(n), Some(k), None) => (n, k),
            _ => {
                return Err(Error::Parse {
                    line: i + 1,
                    message: format!("expected `n k`, found `{line}`"),
                })
            }
        };
        if n > MAX_COLS {
            return Err(Error::Parse {
                line: 1,
                message: format!("n = {n} exceeds {MAX_COLS}"),
            });
        }
        let mut data = Vec::with_capacity(k);
        for (i, line) in lines {
            let line = line.trim_end();
            if data.len() == k {
                if line.is_empty() {
                    continue;
                }
                return Err(Error::Parse {
                    line: i + 1,
                    message: format!("unexpected content after {k} rows"),
                });
            }
            if line.len() != n {
                return Err(Error::Parse {
                    line: i + 1,
                    message: format!("expected {n} characters, found {}", line.len()),
                });
            }
            let row = parse_bits(line).map_err(|c| Error::Parse {
                line: i + 1,
                message: format!("invalid character `{c}`"),
            })?;
            data.push(row);
        }
        if data.len() != k {
            return Err(Error::Parse {
                line: data.len() + 2,
                message: format!("expected {k} rows, found {}", data.len()),
            });
        }
        Gf2Matrix::from_rows(n, data)
    }

    pub fn to_gmat(&self) -> String {
        let mut s = format!("{} {}\n", self.cols, self.rows);
        for r in 0..self.rows {
            s.push_str(&self.row_string(r));
            s.push('\n');
        }
        s
    }

    fn row_string(&self, r: usize) -> String {
        (0..self.cols).map(|c| if self.get(r, c) { '1' } else { '0' }).collect()
    }
}

impl fmt::Debug for Gf2Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Gf2Matrix {}x{}", self.rows, self.cols)?;
        for r in 0..self.rows {
            writeln!(f, "  {}", self.row_string(r))?;
        }
        Ok(())
    }
}

/// Gray-code iterator over `(information word, codeword)` pairs.
pub struct Codewords<'a> {
    matrix: &'a Gf2Matrix,
    step: u64,
    info: u64,
    word: u64,
}

impl Iterator for Codewords<'_> {
    type Item = (u64, u64);

    fn next(&mut self) -> Option<(u64, u64)> {
        let total = 1u64 << self.matrix.rows;
        if self.step >= total {
            return None;
        }
        if self.step > 0 {
            let flip = self.step.trailing_zeros() as usize;
            self.info ^= 1 << flip;
            self.word ^= self.matrix.data[flip];
        }
        self.step += 1;
        Some((self.info, self.word))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = ((1u64 << self.matrix.rows) - self.step) as usize;
        (left, Some(left))
    }
}

/// True iff the removed column set covers the non-null `codeword` of length
/// `len`: every `1` of the codeword sits in a removed column.
pub fn covers(removed: ColumnSubset, codeword: u64, len: usize) -> Result<bool> {
    if len > MAX_COLS || codeword & !low_mask(len) != 0 {
        return Err(Error::domain(format!(
            "codeword {codeword:#x} does not fit in {len} positions"
        )));
    }
    removed.check_within(len)?;
    Ok(codeword != 0 && codeword & !removed.mask == 0)
}

/// True iff removing `cols` from `g` lowers its rank.
pub fn is_independent_set(g: &Gf2Matrix, cols: ColumnSubset) -> Result<bool> {
    let kept = g.select_columns(cols.complement(g.cols()))?;
    Ok(kept.rank() < g.rank())
}

/// Rank of a list of packed vectors.
pub fn rank_of_rows(rows: &[u64]) -> usize {
    let mut basis = XorBasis::default();
    rows.iter().filter(|&&r| basis.insert(r)).count()
}

/// Incremental basis of a GF(2) vector space, indexed by leading bit.
#[derive(Clone, Debug)]
pub struct XorBasis {
    slots: [u64; 64],
    rank: usize,
}

impl Default for XorBasis {
    fn default() -> Self {
        XorBasis {
            slots: [0; 64],
            rank: 0,
        }
    }
}

impl XorBasis {
    /// Reduces `v` against the basis; returns the leading bit of the residue
    /// (or `None` if `v` is in the span).
    #[inline]
    pub fn reduce(&self, mut v: u64) -> Option<(usize, u64)> {
        while v != 0 {
            let top = 63 - v.leading_zeros() as usize;
            let b = self.slots[top];
            if b == 0 {
                return Some((top, v));
            }
            v ^= b;
        }
        None
    }

    /// Inserts `v`; returns true if the rank grew.
    #[inline]
    pub fn insert(&mut self, v: u64) -> bool {
        match self.reduce(v) {
            Some((top, r)) => {
                self.slots[top] = r;
                self.rank += 1;
                true
            }
            None => false,
        }
    }

    #[inline]
    pub(crate) fn put(&mut self, slot: usize, residue: u64) {
        self.slots[slot] = residue;
        self.rank += 1;
    }

    #[inline]
    pub(crate) fn take(&mut self, slot: usize) {
        self.slots[slot] = 0;
        self.rank -= 1;
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn contains(&self, v: u64) -> bool {
        self.reduce(v).is_none()
    }
}

/// Gathers the bits of `word` selected by `mask` into the low bits.
#[inline]
fn pext(word: u64, mask: u64) -> u64 {
    let mut out = 0;
    let mut m = mask;
    let mut k = 0;
    while m != 0 {
        let i = m.trailing_zeros();
        out |= (word >> i & 1) << k;
        k += 1;
        m &= m - 1;
    }
    out
}

fn parse_bits(s: &str) -> std::result::Result<u64, char> {
    let mut w = 0u64;
    for (j, ch) in s.chars().enumerate() {
        match ch {
            '0' => {}
            '1' => w |= 1 << j,
            other => return Err(other),
        }
    }
    Ok(w)
}

fn check_cols(cols: usize) -> Result<()> {
    if cols > MAX_COLS {
        Err(Error::Capacity {
            what: format!("{cols}-column matrix"),
            limit: MAX_COLS,
        })
    } else {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn simplex() -> Gf2Matrix {
        Gf2Matrix::from_bit_strings(&["1001101", "0101011", "0010111"]).unwrap()
    }

    /// Column-by-column copy used as a reference for `select_columns`.
    fn naive_select(m: &Gf2Matrix, cols: &[usize]) -> Gf2Matrix {
        let mut out = Gf2Matrix::zeros(m.rows(), cols.len()).unwrap();
        for r in 0..m.rows() {
            for (j, &c) in cols.iter().enumerate() {
                out.set(r, j, m.get(r, c));
            }
        }
        out
    }

    /// Gaussian elimination on a Vec<Vec<bool>>, independent of the packed path.
    fn naive_rank(m: &Gf2Matrix) -> usize {
        let mut a: Vec<Vec<bool>> = (0..m.rows())
            .map(|r| (0..m.cols()).map(|c| m.get(r, c)).collect())
            .collect();
        let mut rank = 0;
        for c in 0..m.cols() {
            if let Some(p) = (rank..a.len()).find(|&r| a[r][c]) {
                a.swap(rank, p);
                for r in 0..a.len() {
                    if r != rank && a[r][c] {
                        let pivot = a[rank].clone();
                        for (x, y) in a[r].iter_mut().zip(pivot) {
                            *x ^= y;
                        }
                    }
                }
                rank += 1;
            }
        }
        rank
    }

    #[test]
    fn rank_examples() {
        assert_eq!(Gf2Matrix::identity(4).unwrap().rank(), 4);
        assert_eq!(simplex().rank(), 3);
        assert_eq!(Gf2Matrix::zeros(3, 5).unwrap().rank(), 0);
    }

    #[test]
    fn select_examples() {
        let g = simplex();
        assert_eq!(g.select_columns(ColumnSubset::all(7)).unwrap(), g);
        let last_two = g.select_columns(ColumnSubset::from_indices([5, 6]).unwrap()).unwrap();
        assert_eq!(last_two, Gf2Matrix::from_bit_strings(&["01", "11", "11"]).unwrap());
        let none = g.select_columns(ColumnSubset::empty()).unwrap();
        assert_eq!((none.rows(), none.cols(), none.rank()), (3, 0, 0));
        assert!(g.select_columns(ColumnSubset::from_indices([7]).unwrap()).is_err());
    }

    #[test]
    fn covering_examples() {
        let removed = ColumnSubset::from_indices(0..5).unwrap();
        // [0,1,1,1,1,0,0]
        let c = 0b0011110;
        assert!(covers(removed, c, 7).unwrap());
        // the only non-null codeword covered by the first five columns
        let covered: Vec<u64> = simplex()
            .enumerate_codewords()
            .unwrap()
            .filter(|&(_, w)| covers(removed, w, 7).unwrap())
            .map(|(_, w)| w)
            .collect();
        assert_eq!(covered, vec![c]);
        assert!(covers(ColumnSubset::all(7), c, 7).unwrap());
        assert!(!covers(ColumnSubset::empty(), c, 7).unwrap());
        assert!(!covers(ColumnSubset::all(7), 0, 7).unwrap());
        assert!(covers(removed, 1 << 7, 7).is_err());
    }

    #[test]
    fn independent_set_examples() {
        let g = simplex();
        let s = ColumnSubset::from_indices([0, 1, 2, 6]).unwrap();
        assert!(is_independent_set(&g, s).unwrap());
        for mask in 0u64..128 {
            if mask.count_ones() <= 3 {
                assert!(!is_independent_set(&g, ColumnSubset::from_mask(mask)).unwrap());
            }
        }
    }

    #[test]
    fn codeword_enumeration() {
        let rep2 = Gf2Matrix::from_bit_strings(&["11"]).unwrap();
        let all: Vec<_> = rep2.enumerate_codewords().unwrap().collect();
        assert_eq!(all, vec![(0, 0), (1, 0b11)]);

        let words: Vec<_> = simplex().enumerate_codewords().unwrap().collect();
        assert_eq!(words.len(), 8);
        assert_eq!(words[0], (0, 0));
        assert!(words[1..].iter().all(|&(_, w)| w.count_ones() == 4));

        let spc3 = Gf2Matrix::from_bit_strings(&["101", "011"]).unwrap();
        let mut set: Vec<u64> = spc3.enumerate_codewords().unwrap().map(|p| p.1).collect();
        set.sort();
        // {000, 101, 011, 110} with column j at bit j
        assert_eq!(set, vec![0, 0b011, 0b101, 0b110]);

        let big = Gf2Matrix::zeros(29, 4).unwrap();
        assert!(matches!(big.enumerate_codewords(), Err(Error::Capacity { .. })));
    }

    #[test]
    fn null_space_is_orthogonal() {
        let g = simplex();
        let h = g.null_space();
        assert_eq!(h.rows(), 4);
        assert_eq!(h.rank(), 4);
        for r in 0..g.rows() {
            for s in 0..h.rows() {
                assert_eq!((g.row(r) & h.row(s)).count_ones() % 2, 0);
            }
        }
    }

    #[test]
    fn gmat_round_trip_and_errors() {
        let g = simplex();
        let text = g.to_gmat();
        assert_eq!(Gf2Matrix::parse_gmat(&text).unwrap(), g);
        assert_eq!(
            Gf2Matrix::parse_gmat("3 1  \n101   \n").unwrap(),
            Gf2Matrix::from_bit_strings(&["101"]).unwrap()
        );
        match Gf2Matrix::parse_gmat("3 2\n101\n0x1\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(Gf2Matrix::parse_gmat("3 2\n101\n"), Err(Error::Parse { .. })));
        assert!(matches!(
            Gf2Matrix::parse_gmat("3 a\n101\n"),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    fn matrix_strategy() -> impl Strategy<Value = Gf2Matrix> {
        (1usize..8, 1usize..14).prop_flat_map(|(rows, cols)| {
            proptest::collection::vec(0u64..(1 << cols), rows)
                .prop_map(move |data| Gf2Matrix::from_rows(cols, data).unwrap())
        })
    }

    proptest! {
        #[test]
        fn rank_matches_naive(m in matrix_strategy()) {
            prop_assert_eq!(m.rank(), naive_rank(&m));
            prop_assert!(m.rank() <= m.rows().min(m.cols()));
        }

        #[test]
        fn rank_invariant_under_row_ops(m in matrix_strategy(), ops in proptest::collection::vec((0usize..8, 0usize..8, any::<bool>()), 0..20)) {
            let mut t = m.clone();
            for (a, b, swap) in ops {
                let (a, b) = (a % t.rows(), b % t.rows());
                if swap {
                    t.swap_rows(a, b);
                } else if a != b {
                    t.add_row(a, b);
                }
            }
            prop_assert_eq!(t.rank(), m.rank());
        }

        #[test]
        fn select_matches_naive(m in matrix_strategy(), mask in any::<u64>()) {
            let subset = ColumnSubset::from_mask(mask & ((1 << m.cols()) - 1));
            let cols: Vec<usize> = subset.indices().collect();
            let fast = m.select_columns(subset).unwrap();
            let slow = naive_select(&m, &cols);
            prop_assert_eq!(&fast, &slow);
            prop_assert_eq!(fast.rank(), naive_rank(&slow));
        }
    }
}

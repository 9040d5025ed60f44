//! Exact sums of ranks over all column subsets of a binary matrix.
//!
//! The columns are split into a left block (the generator matrix) and a right
//! block (an appended identity, possibly empty). The result is the table
//! `sums[g][h]` = sum of `rank` over every submatrix made of `g` left columns
//! and `h` right columns.
//!
//! The traversal walks subsets in lexicographic "next column to add" order,
//! keeping an incremental XOR basis that is updated in place and restored on
//! backtrack. Once a subset reaches the full rank of the matrix every superset
//! has that rank too, so the whole subtree is accounted for with binomial
//! coefficients instead of being visited. Work is split into independent
//! tasks by the include/exclude pattern of the first few columns; per-task
//! integer accumulators are summed, so the result is independent of the
//! execution policy.

use crate::gf2::XorBasis;
use crate::par::Exec;

const PREFIX_DEPTH: usize = 12;
const TASKS_PER_BATCH: usize = 64;

/// `sums[g][h]` over `columns[..split]` (left) and `columns[split..]` (right).
/// Columns are packed vectors over the rows of the matrix.
pub fn rank_sums(columns: &[u64], split: usize, exec: Exec) -> Vec<Vec<u128>> {
    assert!(split <= columns.len());
    assert!(columns.len() <= 64, "at most 64 columns");
    let full_rank = crate::gf2::rank_of_rows(columns);
    let shape = Shape {
        total: columns.len(),
        split,
        right: columns.len() - split,
    };
    let depth = PREFIX_DEPTH.min(columns.len());
    let prefixes: Vec<u64> = (0..1u64 << depth).collect();
    let batches: Vec<Vec<u64>> = prefixes.chunks(TASKS_PER_BATCH).map(<[u64]>::to_vec).collect();

    let partials = exec.map(batches, |batch| {
        let mut walker = Walker::new(columns, shape, full_rank);
        for prefix in batch {
            walker.run_prefix(prefix, depth);
        }
        walker.acc
    });

    let mut total = Accumulator::new(shape);
    for p in &partials {
        total.merge(p);
    }
    total.finish(shape, full_rank)
}

#[derive(Clone, Copy)]
struct Shape {
    total: usize,
    split: usize,
    right: usize,
}

impl Shape {
    #[inline]
    fn cell(&self, g: usize, h: usize) -> usize {
        g * (self.right + 1) + h
    }

    fn cells(&self) -> usize {
        (self.split + 1) * (self.right + 1)
    }
}

/// Per-task integer accumulators.
struct Accumulator {
    sums: Vec<u64>,
    /// `pruned[start][cell]`: number of full-rank subsets whose supersets
    /// draw extra columns from `start..total` only.
    pruned: Vec<u64>,
}

impl Accumulator {
    fn new(shape: Shape) -> Self {
        Accumulator {
            sums: vec![0; shape.cells()],
            pruned: vec![0; (shape.total + 1) * shape.cells()],
        }
    }

    fn merge(&mut self, other: &Accumulator) {
        for (a, b) in self.sums.iter_mut().zip(&other.sums) {
            *a += b;
        }
        for (a, b) in self.pruned.iter_mut().zip(&other.pruned) {
            *a += b;
        }
    }

    fn finish(&self, shape: Shape, full_rank: usize) -> Vec<Vec<u128>> {
        let mut out: Vec<Vec<u128>> = (0..=shape.split)
            .map(|g| (0..=shape.right).map(|h| self.sums[shape.cell(g, h)] as u128).collect())
            .collect();
        let binom = binomial_table(shape.total);
        let cells = shape.cells();
        for start in 0..=shape.total {
            let rem_left = shape.split.saturating_sub(start);
            let rem_right = shape.total - start.max(shape.split);
            for g in 0..=shape.split {
                for h in 0..=shape.right {
                    let count = self.pruned[start * cells + shape.cell(g, h)] as u128;
                    if count == 0 {
                        continue;
                    }
                    for a in 0..=rem_left {
                        for b in 0..=rem_right {
                            if a + b == 0 {
                                continue;
                            }
                            out[g + a][h + b] += count * full_rank as u128 * binom[rem_left][a] * binom[rem_right][b];
                        }
                    }
                }
            }
        }
        out
    }
}

struct Walker<'a> {
    columns: &'a [u64],
    shape: Shape,
    full_rank: usize,
    basis: XorBasis,
    acc: Accumulator,
}

impl<'a> Walker<'a> {
    fn new(columns: &'a [u64], shape: Shape, full_rank: usize) -> Self {
        Walker {
            columns,
            shape,
            full_rank,
            basis: XorBasis::default(),
            acc: Accumulator::new(shape),
        }
    }

    fn run_prefix(&mut self, prefix: u64, depth: usize) {
        let mut basis = XorBasis::default();
        let (mut g, mut h) = (0, 0);
        for j in 0..depth {
            if prefix >> j & 1 == 1 {
                basis.insert(self.columns[j]);
                if j < self.shape.split {
                    g += 1;
                } else {
                    h += 1;
                }
            }
        }
        self.basis = basis;
        self.visit(depth, g, h);
    }

    /// Accounts for the current subset, then for every extension by columns
    /// from `start` onwards.
    fn visit(&mut self, start: usize, g: usize, h: usize) {
        let cell = self.shape.cell(g, h);
        let rank = self.basis.rank();
        self.acc.sums[cell] += rank as u64;
        if rank == self.full_rank {
            if start < self.shape.total {
                self.acc.pruned[start * self.shape.cells() + cell] += 1;
            }
            return;
        }
        for j in start..self.shape.total {
            let (ng, nh) = if j < self.shape.split { (g + 1, h) } else { (g, h + 1) };
            match self.basis.reduce(self.columns[j]) {
                Some((slot, residue)) => {
                    self.basis.put(slot, residue);
                    self.visit(j + 1, ng, nh);
                    self.basis.take(slot);
                }
                None => self.visit(j + 1, ng, nh),
            }
        }
    }
}

/// Pascal's triangle up to `n`, as `u128`.
pub fn binomial_table(n: usize) -> Vec<Vec<u128>> {
    let mut t = vec![vec![0u128; n + 1]; n + 1];
    for i in 0..=n {
        t[i][0] = 1;
        for j in 1..=i {
            t[i][j] = t[i - 1][j - 1] + if j < i { t[i - 1][j] } else { 0 };
        }
    }
    t
}

pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

//! Monte Carlo estimate of MAP EXIT functions by explicit erasure decoding.
//!
//! This is an oracle for the table-based formulas in [`crate::exitfn`] and
//! shares no code with them: each sample draws a random codeword and an
//! erasure pattern, then decides for every extrinsic position whether the
//! withheld bit is fixed by the known coordinates. The linear system is
//! solved with the parity-check matrix: bit `i` is recoverable iff some dual
//! codeword has `i` in its support and no other unknown position. The
//! recovered value is checked against the transmitted bit.
//!
//! Random numbers come from ChaCha8 (`rand_chacha::ChaCha8Rng`): the seed
//! selects the key and each block of samples uses its own stream, so results
//! are identical for any thread count.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::codebook::ComponentCode;
use crate::error::{check_probability, Error, Result};
use crate::gf2::Gf2Matrix;
use crate::par::Exec;

const BLOCK: u64 = 8192;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Role {
    Vn,
    Cn,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
}

/// Simulates MAP erasure decoding of `code` and returns the estimated
/// extrinsic mutual information. `q` is ignored in CN role.
pub fn mc_exit(
    code: &ComponentCode,
    role: Role,
    p: f64,
    q: f64,
    samples: u64,
    seed: u64,
    exec: Exec,
) -> Result<McEstimate> {
    check_probability("p", p)?;
    check_probability("q", q)?;
    if samples == 0 {
        return Err(Error::domain("at least one sample is required"));
    }
    let n = code.n();
    let (generator, channel_bits) = match role {
        Role::Cn => (code.generator().clone(), 0),
        Role::Vn => (code.extended_generator()?, code.k()),
    };
    let parity = generator.null_space();
    let setup = Setup {
        generator: &generator,
        parity: &parity,
        n,
        channel_bits,
        p,
        q,
    };

    let blocks: Vec<u64> = (0..samples.div_ceil(BLOCK)).collect();
    let partial = exec.map(blocks, |b| {
        let count = BLOCK.min(samples - b * BLOCK);
        setup.run_block(seed, b, count)
    });
    let (mut s1, mut s2) = (0u64, 0u64);
    for (a, b) in partial {
        s1 += a;
        s2 += b;
    }
    let nf = n as f64;
    let m = samples as f64;
    let mean = s1 as f64 / m / nf;
    let var = if samples > 1 {
        ((s2 as f64 / (nf * nf)) - m * mean * mean).max(0.0) / (m - 1.0)
    } else {
        0.0
    };
    Ok(McEstimate {
        estimate: 1.0 - mean,
        std_error: (var / m).sqrt(),
    })
}

struct Setup<'a> {
    generator: &'a Gf2Matrix,
    parity: &'a Gf2Matrix,
    n: usize,
    channel_bits: usize,
    p: f64,
    q: f64,
}

impl Setup<'_> {
    /// Returns (sum of undetermined counts, sum of squared counts).
    fn run_block(&self, seed: u64, block: u64, count: u64) -> (u64, u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(block);
        let k = self.generator.rows();
        let scored = (1u64 << self.n) - 1;
        let (mut s1, mut s2) = (0u64, 0u64);
        let mut rows = [0u64; 64];
        for _ in 0..count {
            let info = if k == 64 {
                rng.next_u64()
            } else {
                rng.next_u64() & ((1 << k) - 1)
            };
            let word = self.generator.encode(info);
            let mut erased = 0u64;
            for i in 0..self.n {
                if bernoulli(&mut rng, self.p) {
                    erased |= 1 << i;
                }
            }
            for i in 0..self.channel_bits {
                if bernoulli(&mut rng, self.q) {
                    erased |= 1 << (self.n + i);
                }
            }
            let x = undetermined(self.parity.row_words(), &mut rows, erased, scored, word) as u64;
            s1 += x;
            s2 += x * x;
        }
        (s1, s2)
    }
}

#[inline]
fn bernoulli(rng: &mut ChaCha8Rng, p: f64) -> bool {
    if p <= 0.0 {
        false
    } else if p >= 1.0 {
        true
    } else {
        rng.gen::<f64>() < p
    }
}

/// Number of scored positions whose bit cannot be recovered when it is
/// withheld and the positions in `erased` are unknown.
fn undetermined(parity: &[u64], rows: &mut [u64; 64], erased: u64, scored: u64, word: u64) -> u32 {
    let m = parity.len();
    rows[..m].copy_from_slice(parity);
    // Reduced echelon form on the erased columns only.
    let mut pivot_row = [usize::MAX; 64];
    let mut next = 0;
    let mut cols = erased;
    while cols != 0 && next < m {
        let c = cols.trailing_zeros() as usize;
        cols &= cols - 1;
        let bit = 1u64 << c;
        let Some(r) = (next..m).find(|&r| rows[r] & bit != 0) else {
            continue;
        };
        rows.swap(next, r);
        let pr = rows[next];
        for (i, row) in rows[..m].iter_mut().enumerate() {
            if i != next && *row & bit != 0 {
                *row ^= pr;
            }
        }
        pivot_row[c] = next;
        next += 1;
    }
    let known_checks = &rows[next..m];
    let known_cover = known_checks.iter().fold(0u64, |a, &r| a | r);

    let mut missing = 0;
    let mut s = scored;
    while s != 0 {
        let i = s.trailing_zeros() as usize;
        s &= s - 1;
        let bit = 1u64 << i;
        let check = if erased & bit != 0 {
            let r = pivot_row[i];
            (r != usize::MAX && rows[r] & erased == bit).then(|| rows[r])
        } else if known_cover & bit != 0 {
            known_checks.iter().copied().find(|&r| r & bit != 0)
        } else {
            None
        };
        match check {
            Some(h) => {
                let recovered = ((h & !bit & word).count_ones() & 1) as u64;
                assert_eq!(recovered, word >> i & 1, "erasure decoder recovered a wrong bit");
            }
            None => missing += 1,
        }
    }
    missing
}

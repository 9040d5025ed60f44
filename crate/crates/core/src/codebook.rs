//! Component codes: the builtin catalog, minimum distance, weight-2 spectra
//! and the (split) information functions that every EXIT formula is built on.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::gf2::{Gf2Matrix, MAX_ENUM_DIM};
use crate::par::Exec;
use crate::subsets::{binomial, rank_sums};

/// Longest code whose information functions are computed exactly.
pub const MAX_INFO_LEN: usize = 31;
/// Widest `[G | I_k]` for which split information functions are computed.
pub const MAX_SPLIT_WIDTH: usize = 32;

pub const CATALOG: &str = "rep-<j>, spc-sys-<n>, spc-cyc-<n>, hamming-7-4, simplex-7-3, bch-31-21";

/// Narrow-sense double-error-correcting BCH(31,21): g(x) = m1(x) m3(x) over
/// GF(32) with primitive polynomial x^5 + x^2 + 1.
const BCH_M1: u64 = 0b100101; // x^5 + x^2 + 1
const BCH_M3: u64 = 0b111101; // x^5 + x^4 + x^3 + x^2 + 1

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CodeKind {
    Repetition,
    SpcSystematic,
    SpcCyclic,
    Generic,
}

/// Un-normalized information functions, `e[g]` for `g = 0..=n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InfoFunctions {
    pub e: Vec<u128>,
}

impl InfoFunctions {
    pub fn n(&self) -> usize {
        self.e.len() - 1
    }

    /// `a_t = (n-t) e[n-t] - (t+1) e[n-t-1]` for `t = 0..n`.
    pub fn exit_coefficients(&self) -> Vec<i128> {
        let n = self.n();
        (0..n)
            .map(|t| (n - t) as i128 * self.e[n - t] as i128 - (t + 1) as i128 * self.e[n - t - 1] as i128)
            .collect()
    }
}

/// Un-normalized split information functions, `e[g][h]` for `g = 0..=n`,
/// `h = 0..=k`, taken over `[G | I_k]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplitInfoFunctions {
    pub e: Vec<Vec<u128>>,
}

impl SplitInfoFunctions {
    pub fn n(&self) -> usize {
        self.e.len() - 1
    }

    pub fn k(&self) -> usize {
        self.e[0].len() - 1
    }

    /// `a[t][z] = (n-t) e[n-t][k-z] - (t+1) e[n-t-1][k-z]`.
    pub fn exit_coefficients(&self) -> Vec<Vec<i128>> {
        let (n, k) = (self.n(), self.k());
        (0..n)
            .map(|t| {
                (0..=k)
                    .map(|z| {
                        (n - t) as i128 * self.e[n - t][k - z] as i128
                            - (t + 1) as i128 * self.e[n - t - 1][k - z] as i128
                    })
                    .collect()
            })
            .collect()
    }
}

/// Weight-2 codeword counts, in total and by information-word weight.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Weight2Spectrum {
    pub a2: u64,
    /// Indexed by information weight `u`; entry 0 is always 0.
    pub a2_by_u: Vec<u64>,
}

/// Real polynomial with coefficients in increasing power order.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial {
    pub coefficients: Vec<f64>,
}

impl Polynomial {
    pub fn zero() -> Self {
        Polynomial {
            coefficients: Vec::new(),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coefficients.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn derivative(&self) -> Polynomial {
        Polynomial {
            coefficients: self
                .coefficients
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, &c)| i as f64 * c)
                .collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coefficients.iter().all(|&c| c == 0.0)
    }

    /// `self + w * other`.
    pub fn add_scaled(&mut self, w: f64, other: &Polynomial) {
        if self.coefficients.len() < other.coefficients.len() {
            self.coefficients.resize(other.coefficients.len(), 0.0);
        }
        for (a, b) in self.coefficients.iter_mut().zip(&other.coefficients) {
            *a += w * b;
        }
    }
}

/// An `(n, k)` binary linear block code with a fixed generator matrix.
pub struct ComponentCode {
    name: String,
    kind: CodeKind,
    generator: Gf2Matrix,
    d_min: usize,
    info: OnceLock<InfoFunctions>,
    split: OnceLock<SplitInfoFunctions>,
    weight2: OnceLock<Weight2Spectrum>,
}

impl fmt::Debug for ComponentCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ComponentCode")
            .field("name", &self.name)
            .field("n", &self.n())
            .field("k", &self.k())
            .field("d_min", &self.d_min)
            .finish()
    }
}

impl ComponentCode {
    /// Wraps a full-row-rank generator matrix.
    pub fn new(name: impl Into<String>, generator: Gf2Matrix, kind: CodeKind) -> Result<Self> {
        let k = generator.rows();
        if k == 0 {
            return Err(Error::domain("generator matrix has no rows"));
        }
        if generator.rank() != k {
            return Err(Error::domain(format!(
                "generator matrix is not full rank (rank {} < {k})",
                generator.rank()
            )));
        }
        let d_min = generator
            .enumerate_codewords()?
            .skip(1)
            .map(|(_, c)| c.count_ones() as usize)
            .min()
            .unwrap_or(0);
        Ok(ComponentCode {
            name: name.into(),
            kind,
            generator,
            d_min,
            info: OnceLock::new(),
            split: OnceLock::new(),
            weight2: OnceLock::new(),
        })
    }

    /// Looks up a code in the builtin catalog.
    pub fn builtin(name: &str) -> Result<Self> {
        let unknown = || Error::UnknownCode {
            name: name.to_string(),
            catalog: CATALOG.to_string(),
        };
        let param = |prefix: &str| -> Option<usize> { name.strip_prefix(prefix).and_then(|s| s.parse().ok()) };
        let (g, kind) = if let Some(j) = param("rep-") {
            if !(1..=64).contains(&j) {
                return Err(unknown());
            }
            (repetition(j)?, CodeKind::Repetition)
        } else if let Some(n) = param("spc-sys-") {
            if !(2..=64).contains(&n) {
                return Err(unknown());
            }
            (spc_systematic(n)?, CodeKind::SpcSystematic)
        } else if let Some(n) = param("spc-cyc-") {
            if !(2..=64).contains(&n) {
                return Err(unknown());
            }
            (spc_cyclic(n)?, CodeKind::SpcCyclic)
        } else {
            match name {
                "hamming-7-4" => (
                    Gf2Matrix::from_bit_strings(&["1101000", "1010100", "0110010", "1110001"])?,
                    CodeKind::Generic,
                ),
                "simplex-7-3" => (
                    Gf2Matrix::from_bit_strings(&["1001101", "0101011", "0010111"])?,
                    CodeKind::Generic,
                ),
                "bch-31-21" => (bch_31_21()?, CodeKind::Generic),
                _ => return Err(unknown()),
            }
        };
        ComponentCode::new(name, g, kind)
    }

    /// The process-wide shared instance of a builtin code, so that its
    /// tables are computed (or loaded) once.
    pub fn builtin_shared(name: &str) -> Result<Arc<Self>> {
        static SHARED: OnceLock<Mutex<HashMap<String, Arc<ComponentCode>>>> = OnceLock::new();
        let map = SHARED.get_or_init(Default::default);
        if let Some(c) = map.lock().expect("builtin map poisoned").get(name) {
            return Ok(c.clone());
        }
        let code = Arc::new(Self::builtin(name)?);
        Ok(map
            .lock()
            .expect("builtin map poisoned")
            .entry(name.to_string())
            .or_insert(code)
            .clone())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> CodeKind {
        self.kind
    }

    pub fn generator(&self) -> &Gf2Matrix {
        &self.generator
    }

    pub fn n(&self) -> usize {
        self.generator.cols()
    }

    pub fn k(&self) -> usize {
        self.generator.rows()
    }

    pub fn rate(&self) -> f64 {
        self.k() as f64 / self.n() as f64
    }

    pub fn min_distance(&self) -> usize {
        self.d_min
    }

    /// A parity-check matrix: a generator of the dual code.
    pub fn parity_check(&self) -> Gf2Matrix {
        self.generator.null_space()
    }

    /// `[G | I_k]`, the generator of the extended code seen by a VN.
    pub fn extended_generator(&self) -> Result<Gf2Matrix> {
        self.generator.hconcat(&Gf2Matrix::identity(self.k())?)
    }

    /// Hex SHA-256 of the generator matrix in `.gmat` form.
    pub fn content_hash(&self) -> String {
        hex::encode(Sha256::digest(self.generator.to_gmat().as_bytes()))
    }

    /// Cached information functions, computed on first use.
    pub fn information_functions(&self) -> Result<&InfoFunctions> {
        if let Some(info) = self.info.get() {
            return Ok(info);
        }
        let info = self.compute_information_functions(Exec::default())?;
        Ok(self.info.get_or_init(|| info))
    }

    /// Cached split information functions, computed on first use.
    pub fn split_information_functions(&self) -> Result<&SplitInfoFunctions> {
        if let Some(split) = self.split.get() {
            return Ok(split);
        }
        let split = self.compute_split_information_functions(Exec::default())?;
        Ok(self.split.get_or_init(|| split))
    }

    pub fn has_information_functions(&self) -> bool {
        self.info.get().is_some()
    }

    pub fn has_split_information_functions(&self) -> bool {
        self.split.get().is_some()
    }

    /// Installs precomputed information functions (e.g. from a cache).
    pub fn preload_information_functions(&self, info: InfoFunctions) -> Result<()> {
        if info.e.len() != self.n() + 1 {
            return Err(Error::domain(format!(
                "information table has {} entries, expected {}",
                info.e.len(),
                self.n() + 1
            )));
        }
        let _ = self.info.set(info);
        Ok(())
    }

    pub fn preload_split_information_functions(&self, split: SplitInfoFunctions) -> Result<()> {
        if split.e.len() != self.n() + 1 || split.e.iter().any(|r| r.len() != self.k() + 1) {
            return Err(Error::domain("split information table has the wrong shape"));
        }
        let _ = self.split.set(split);
        Ok(())
    }

    /// Exact information functions. Works on whichever of the code and its
    /// dual has fewer rows, using
    /// `e_g(C) = e_{n-g}(C_dual) + (k - n + g) C(n, g)`.
    pub fn compute_information_functions(&self, exec: Exec) -> Result<InfoFunctions> {
        self.check_info_capacity()?;
        if self.n() - self.k() < self.k() {
            Ok(self.information_functions_via_dual(exec))
        } else {
            Ok(self.information_functions_direct(exec))
        }
    }

    /// Rank sums over the columns of `G` itself.
    pub fn information_functions_direct(&self, exec: Exec) -> InfoFunctions {
        let table = rank_sums(&self.generator.columns(), self.n(), exec);
        InfoFunctions {
            e: table.into_iter().map(|row| row[0]).collect(),
        }
    }

    /// Rank sums over the columns of a parity-check matrix, mapped back.
    pub fn information_functions_via_dual(&self, exec: Exec) -> InfoFunctions {
        let (n, k) = (self.n() as i128, self.k() as i128);
        let h = self.parity_check();
        let dual = rank_sums(&h.columns(), self.n(), exec);
        let e = (0..=self.n())
            .map(|g| {
                let v = dual[self.n() - g][0] as i128 + (k - n + g as i128) * binomial(self.n(), g) as i128;
                debug_assert!(v >= 0);
                v as u128
            })
            .collect();
        InfoFunctions { e }
    }

    /// Exact split information functions over `[G | I_k]`.
    pub fn compute_split_information_functions(&self, exec: Exec) -> Result<SplitInfoFunctions> {
        let width = self.n() + self.k();
        if width > MAX_SPLIT_WIDTH {
            return Err(Error::Capacity {
                what: format!("split information functions of {} ({width} columns)", self.name),
                limit: MAX_SPLIT_WIDTH,
            });
        }
        let ext = self.extended_generator()?;
        Ok(SplitInfoFunctions {
            e: rank_sums(&ext.columns(), self.n(), exec),
        })
    }

    fn check_info_capacity(&self) -> Result<()> {
        if self.n() > MAX_INFO_LEN {
            Err(Error::Capacity {
                what: format!("information functions of a length-{} code", self.n()),
                limit: MAX_INFO_LEN,
            })
        } else {
            Ok(())
        }
    }

    /// Weight-2 codewords, also split by the weight of their information word.
    pub fn weight2_spectrum(&self) -> Result<&Weight2Spectrum> {
        if let Some(w) = self.weight2.get() {
            return Ok(w);
        }
        let mut by_u = vec![0u64; self.k() + 1];
        for (u, c) in self.generator.enumerate_codewords()? {
            if c.count_ones() == 2 {
                by_u[u.count_ones() as usize] += 1;
            }
        }
        let w = Weight2Spectrum {
            a2: by_u.iter().sum(),
            a2_by_u: by_u,
        };
        Ok(self.weight2.get_or_init(|| w))
    }

    /// `P_i(x) = sum_u 2 A_{2,u} / n x^u`; zero when `d_min >= 3`.
    pub fn stability_polynomial(&self) -> Result<Polynomial> {
        let w = self.weight2_spectrum()?;
        let n = self.n() as f64;
        Ok(Polynomial {
            coefficients: w.a2_by_u.iter().map(|&a| 2.0 * a as f64 / n).collect(),
        })
    }

    /// `C_i = 2 A_2 / n`; zero when `d_min >= 3`.
    pub fn stability_cn_constant(&self) -> Result<f64> {
        Ok(2.0 * self.weight2_spectrum()?.a2 as f64 / self.n() as f64)
    }

    /// Errors unless the code may be used as an ensemble component.
    pub fn check_admissible(&self) -> Result<()> {
        if self.d_min < 2 {
            return Err(Error::Config(format!(
                "component code {} has minimum distance {} < 2",
                self.name, self.d_min
            )));
        }
        if self.k() > MAX_ENUM_DIM {
            return Err(Error::Capacity {
                what: format!("component code {} of dimension {}", self.name, self.k()),
                limit: MAX_ENUM_DIM,
            });
        }
        Ok(())
    }
}

fn repetition(j: usize) -> Result<Gf2Matrix> {
    Gf2Matrix::from_rows(j, vec![crate::gf2::ColumnSubset::all(j).mask()])
}

fn spc_systematic(n: usize) -> Result<Gf2Matrix> {
    Gf2Matrix::from_rows(n, (0..n - 1).map(|i| 1u64 << i | 1u64 << (n - 1)).collect())
}

fn spc_cyclic(n: usize) -> Result<Gf2Matrix> {
    Gf2Matrix::from_rows(n, (0..n - 1).map(|i| 0b11u64 << i).collect())
}

/// Carry-less product of two GF(2) polynomials (bit i = coefficient of x^i).
fn poly_mul(a: u64, b: u64) -> u64 {
    (0..64).filter(|i| b >> i & 1 == 1).fold(0, |acc, i| acc ^ (a << i))
}

fn bch_31_21() -> Result<Gf2Matrix> {
    let g = poly_mul(BCH_M1, BCH_M3);
    debug_assert_eq!(63 - g.leading_zeros(), 10);
    Gf2Matrix::from_rows(31, (0..21).map(|i| g << i).collect())
}

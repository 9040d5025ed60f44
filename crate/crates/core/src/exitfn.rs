//! MAP EXIT functions of component codes over the BEC.
//!
//! Both roles are evaluated in the basis `p^t (1-p)^(n-1-t)` with
//! coefficients taken from the exact integer tables:
//!
//! * CN: `I_E(p) = 1 - (1/n) sum_t a_t p^t (1-p)^(n-1-t)`,
//!   `a_t = (n-t) e[n-t] - (t+1) e[n-t-1]`.
//! * VN: `I_E(p,q) = 1 - (1/n) sum_t sum_z a_{t,z} p^t (1-p)^(n-1-t) q^z (1-q)^(k-z)`,
//!   `a_{t,z} = (n-t) e[n-t][k-z] - (t+1) e[n-t-1][k-z]`.
//!
//! The coefficients are nonnegative, so in-domain evaluation has no
//! cancellation; the absolute error stays below `1e-12` for `n <= 31`.

use crate::codebook::ComponentCode;
use crate::error::{check_probability, Result};

/// `f(x) = sum_t c[t] x^t (1-x)^(m-t)` with `m = c.len() - 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct BernsteinForm {
    coeffs: Vec<f64>,
}

impl BernsteinForm {
    pub fn new(coeffs: Vec<f64>) -> Self {
        assert!(!coeffs.is_empty());
        BernsteinForm { coeffs }
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Evaluates at any real `x` (outside `[0,1]` only for finite differences).
    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        let m = self.degree() as i32;
        if x <= 0.5 {
            let y = 1.0 - x;
            let r = x / y;
            let s = self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * r + c);
            s * y.powi(m)
        } else {
            let r = (1.0 - x) / x;
            let s = self.coeffs.iter().fold(0.0, |acc, &c| acc * r + c);
            s * x.powi(m)
        }
    }
}

/// CN-role EXIT function of one code: `I_E(p) = 1 - erasure(p)`.
#[derive(Clone, Debug)]
pub struct CnExit {
    erasure: BernsteinForm,
}

impl CnExit {
    pub fn new(code: &ComponentCode) -> Result<Self> {
        let info = code.information_functions()?;
        let n = code.n() as f64;
        let coeffs = info.exit_coefficients().into_iter().map(|a| a as f64 / n).collect();
        Ok(CnExit {
            erasure: BernsteinForm::new(coeffs),
        })
    }

    /// Extrinsic erasure probability.
    #[inline]
    pub fn erasure(&self, p: f64) -> f64 {
        self.erasure.eval(p)
    }

    #[inline]
    pub fn exit(&self, p: f64) -> f64 {
        1.0 - self.erasure.eval(p)
    }

    /// `dI_E/dp` at `p = 0`: `((n-1) a_0 - a_1) / n`.
    pub fn derivative_at_zero(&self) -> f64 {
        let c = self.erasure.coefficients();
        let m = self.erasure.degree() as f64;
        let c1 = c.get(1).copied().unwrap_or(0.0);
        m * c[0] - c1
    }
}

/// VN-role EXIT function of one code.
#[derive(Clone, Debug)]
pub struct VnExit {
    /// `per_t[t]` is the polynomial in `q` with coefficients `a_{t,z} / n`.
    per_t: Vec<BernsteinForm>,
}

impl VnExit {
    pub fn new(code: &ComponentCode) -> Result<Self> {
        let split = code.split_information_functions()?;
        let n = code.n() as f64;
        let per_t = split
            .exit_coefficients()
            .into_iter()
            .map(|row| BernsteinForm::new(row.into_iter().map(|a| a as f64 / n).collect()))
            .collect();
        Ok(VnExit { per_t })
    }

    /// Extrinsic erasure probability as a function of `p` for fixed `q`.
    pub fn erasure_at(&self, q: f64) -> BernsteinForm {
        BernsteinForm::new(self.per_t.iter().map(|f| f.eval(q)).collect())
    }

    pub fn exit(&self, p: f64, q: f64) -> f64 {
        1.0 - self.erasure_at(q).eval(p)
    }

    /// `dI_E/dp` at `p = 0` for channel erasure probability `q`.
    pub fn derivative_at_zero(&self, q: f64) -> f64 {
        let f = self.erasure_at(q);
        let c = f.coefficients();
        let c1 = c.get(1).copied().unwrap_or(0.0);
        f.degree() as f64 * c[0] - c1
    }
}

/// MAP EXIT function of `code` in CN role.
pub fn cn_exit(code: &ComponentCode, p: f64) -> Result<f64> {
    check_probability("p", p)?;
    Ok(CnExit::new(code)?.exit(p))
}

/// MAP EXIT function of `code` in VN role.
pub fn vn_exit(code: &ComponentCode, p: f64, q: f64) -> Result<f64> {
    check_probability("p", p)?;
    check_probability("q", q)?;
    Ok(VnExit::new(code)?.exit(p, q))
}

/// `-2 A_2 / n`, the CN EXIT slope at `p = 0` for a `d_min >= 2` code.
pub fn cn_exit_derivative_at_zero(code: &ComponentCode) -> Result<f64> {
    Ok(-code.stability_cn_constant()?)
}

/// `1 - q p^(j-1)`.
pub fn repetition_vn_exit(j: usize, p: f64, q: f64) -> f64 {
    1.0 - q * p.powi(j as i32 - 1)
}

/// `(1-p)^(j-1)`.
pub fn spc_cn_exit(j: usize, p: f64) -> f64 {
    (1.0 - p).powi(j as i32 - 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codebook::ComponentCode;

    fn code(name: &str) -> ComponentCode {
        ComponentCode::builtin(name).unwrap()
    }

    #[test]
    fn bernstein_matches_direct_sum() {
        let f = BernsteinForm::new(vec![0.5, 2.0, 0.0, 1.25]);
        for x in [-0.1f64, 0.0, 0.2, 0.5, 0.51, 0.9, 1.0] {
            let direct: f64 = f
                .coefficients()
                .iter()
                .enumerate()
                .map(|(t, c)| c * x.powi(t as i32) * (1.0 - x).powi(3 - t as i32))
                .sum();
            assert!((f.eval(x) - direct).abs() < 1e-14, "{x}");
        }
    }

    #[test]
    fn cn_examples() {
        for name in ["rep-2", "spc-sys-4", "hamming-7-4", "simplex-7-3"] {
            assert_eq!(cn_exit(&code(name), 0.0).unwrap(), 1.0, "{name}");
            assert!(cn_exit(&code(name), 1.0).unwrap().abs() < 1e-15, "{name}");
        }
        for n in 2..=12 {
            let c = code(&format!("spc-cyc-{n}"));
            let f = CnExit::new(&c).unwrap();
            for i in 0..=20 {
                let p = i as f64 / 20.0;
                assert!((f.exit(p) - spc_cn_exit(n, p)).abs() < 1e-12);
            }
        }
        assert!(cn_exit(&code("rep-2"), 1.5).is_err());
    }

    #[test]
    fn vn_examples() {
        for j in 2..=8 {
            let c = code(&format!("rep-{j}"));
            let f = VnExit::new(&c).unwrap();
            for (p, q) in [(0.3, 0.6), (0.9, 0.1), (0.5, 0.5), (1.0, 1.0)] {
                assert!((f.exit(p, q) - repetition_vn_exit(j, p, q)).abs() < 1e-12);
            }
        }
        let c = code("spc-sys-5");
        assert_eq!(vn_exit(&c, 0.0, 0.7).unwrap(), 1.0);
        assert!(vn_exit(&c, 0.5, -0.1).is_err());
    }

    #[test]
    fn vn_at_full_erasure_channel_is_cn() {
        for name in ["rep-3", "spc-sys-6", "spc-cyc-6", "hamming-7-4", "simplex-7-3"] {
            let c = code(name);
            let (vn, cn) = (VnExit::new(&c).unwrap(), CnExit::new(&c).unwrap());
            for i in 0..=20 {
                let p = i as f64 / 20.0;
                assert!((vn.exit(p, 1.0) - cn.exit(p)).abs() < 1e-12, "{name} {p}");
            }
        }
    }

    #[test]
    fn derivative_at_zero_matches_finite_difference() {
        let h = 1e-5;
        for name in ["spc-sys-5", "spc-cyc-9", "rep-2", "hamming-7-4", "simplex-7-3"] {
            let c = code(name);
            let f = CnExit::new(&c).unwrap();
            let fd = (f.exit(h) - f.exit(-h)) / (2.0 * h);
            let exact = cn_exit_derivative_at_zero(&c).unwrap();
            assert!((fd - exact).abs() < 1e-6, "{name}: {fd} vs {exact}");
            assert!((f.derivative_at_zero() - exact).abs() < 1e-12);
        }
        assert_eq!(cn_exit_derivative_at_zero(&code("spc-sys-7")).unwrap(), -6.0);
        assert_eq!(cn_exit_derivative_at_zero(&code("hamming-7-4")).unwrap(), 0.0);
    }

    #[test]
    fn monotone_on_grid() {
        for name in ["spc-cyc-7", "spc-sys-7", "hamming-7-4", "rep-4"] {
            let c = code(name);
            let (vn, cn) = (VnExit::new(&c).unwrap(), CnExit::new(&c).unwrap());
            for i in 0..20 {
                let (p0, p1) = (i as f64 / 20.0, (i + 1) as f64 / 20.0);
                assert!(cn.exit(p1) <= cn.exit(p0) + 1e-15);
                for j in 0..=20 {
                    let q = j as f64 / 20.0;
                    assert!(vn.exit(p1, q) <= vn.exit(p0, q) + 1e-15);
                    assert!(vn.exit(q, p1) <= vn.exit(q, p0) + 1e-15);
                }
            }
        }
    }
}

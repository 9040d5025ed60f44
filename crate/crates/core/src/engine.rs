//! EXIT fixed-point analysis on the BEC: the erasure recursion, threshold
//! bisection, derivative matching at `p = 0`, and EXIT-chart samples.
//!
//! One decoding iteration maps the VN-to-CN erasure probability `p_v` to
//! `1 - I_{E,V}(1 - I_{E,C}(p_v), q)`, starting from `p_v = 1`.
//!
//! When the decoder converges along the tangent at `p = 0` (the derivative
//! matching case) the recursion contracts by a factor close to 1 in the last
//! stretch, and a fixed iteration budget would declare such channels
//! non-convergent. Each run therefore also stops successfully once `p_v` is
//! small, the slope of the recursion at 0 is below 1, and the recursion is
//! strictly below the identity on a dense grid down to `eps`: the
//! remaining iterations are then known to reach 0.

use std::fmt::Write as _;

use crate::ensemble::{Ensemble, ExitMixture, VndAtQ};
use crate::error::{check_probability, Error, Result};
use crate::par::Exec;

pub const DEFAULT_MAX_ITERS: usize = 20_000;
pub const DEFAULT_EPS: f64 = 1e-12;

/// Iteration budget and stopping rules for one channel probe.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Settings {
    pub max_iters: usize,
    pub eps: f64,
    /// Enables the small-`p` contraction certificate.
    pub certificate: bool,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            max_iters: DEFAULT_MAX_ITERS,
            eps: DEFAULT_EPS,
            certificate: true,
        }
    }
}

/// `p_v` below which the contraction certificate is attempted.
const CERTIFY_BELOW: f64 = 1e-3;
const CERTIFY_GRID: usize = 400;

#[derive(Clone, Debug, PartialEq)]
pub struct Convergence {
    pub converged: bool,
    pub iterations: usize,
    /// Stopped by the contraction certificate rather than by reaching `eps`.
    pub certified: bool,
    /// `p_v` after each iteration, starting with the initial value 1.
    pub trace: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ThresholdReport {
    pub q_star: f64,
    pub q_bound: f64,
    /// `q_bound - q_star`.
    pub matching_gap: f64,
    pub iterations_at_threshold: usize,
    pub tolerance: f64,
    /// Erasure trace of the decoder at `q_star`.
    pub trace: Vec<f64>,
}

impl ThresholdReport {
    /// `iteration,p` rows of the trace at `q_star`.
    pub fn trace_csv(&self) -> String {
        let mut s = String::from("iteration,p\n");
        for (i, p) in self.trace.iter().enumerate() {
            let _ = writeln!(s, "{i},{p:.12e}");
        }
        s
    }
}

/// One decoding iteration for fixed `q`.
#[derive(Clone, Debug)]
pub struct Recursion<'a> {
    exits: &'a ExitMixture,
    vnd: VndAtQ,
    /// Slope of the recursion at `p = 0`.
    slope: f64,
}

impl<'a> Recursion<'a> {
    pub fn new(exits: &'a ExitMixture, q: f64) -> Self {
        let slope = exits.vnd_derivative_at_zero(q) * exits.cnd_derivative_at_zero();
        Recursion {
            exits,
            vnd: exits.vnd_at(q),
            slope,
        }
    }

    #[inline]
    pub fn step(&self, p_v: f64) -> f64 {
        self.vnd.erasure(self.exits.cnd_erasure(p_v)).clamp(0.0, 1.0)
    }

    pub fn slope_at_zero(&self) -> f64 {
        self.slope
    }

    fn certify(&self, from: f64, eps: f64) -> bool {
        if self.slope >= 1.0 {
            return false;
        }
        let ratio = (eps / from).powf(1.0 / CERTIFY_GRID as f64);
        let mut x = from;
        for _ in 0..=CERTIFY_GRID {
            if self.step(x) >= x {
                return false;
            }
            x *= ratio;
        }
        true
    }

    pub fn run(&self, settings: &Settings, record: bool) -> Convergence {
        let mut p = 1.0;
        let mut trace = if record { vec![p] } else { Vec::new() };
        let mut tried_certificate = false;
        for it in 1..=settings.max_iters {
            let next = self.step(p);
            if record {
                trace.push(next);
            }
            if next <= settings.eps {
                return Convergence {
                    converged: true,
                    iterations: it,
                    certified: false,
                    trace,
                };
            }
            if next >= p {
                break;
            }
            p = next;
            if settings.certificate && !tried_certificate && p <= CERTIFY_BELOW {
                tried_certificate = true;
                if self.certify(p, settings.eps) {
                    return Convergence {
                        converged: true,
                        iterations: it,
                        certified: true,
                        trace,
                    };
                }
            }
        }
        Convergence {
            converged: false,
            iterations: trace.len().saturating_sub(1).max(usize::from(!record)),
            certified: false,
            trace,
        }
    }
}

/// `p_v' = 1 - I_{E,V}(1 - I_{E,C}(p_v), q)`.
pub fn de_step(e: &Ensemble, p_v: f64, q: f64) -> Result<f64> {
    check_probability("p_v", p_v)?;
    check_probability("q", q)?;
    Ok(Recursion::new(e.exits()?, q).step(p_v))
}

/// Iterates from `p_v = 1` and reports whether `p_v <= eps` is reached.
pub fn converges(e: &Ensemble, q: f64, max_iters: usize, eps: f64) -> Result<Convergence> {
    converges_with(
        e,
        q,
        &Settings {
            max_iters,
            eps,
            ..Settings::default()
        },
    )
}

pub fn converges_with(e: &Ensemble, q: f64, settings: &Settings) -> Result<Convergence> {
    check_probability("q", q)?;
    check_settings(settings)?;
    Ok(Recursion::new(e.exits()?, q).run(settings, true))
}

fn check_settings(s: &Settings) -> Result<()> {
    if !(s.eps > 0.0 && s.eps < 1.0) {
        return Err(Error::domain(format!("eps must lie in (0, 1), got {}", s.eps)));
    }
    if s.max_iters == 0 {
        return Err(Error::domain("max_iters must be at least 1"));
    }
    Ok(())
}

/// Threshold by bisection on `q` with default settings.
pub fn threshold(e: &Ensemble, tol: f64) -> Result<ThresholdReport> {
    threshold_with(e, tol, &Settings::default())
}

pub fn threshold_with(e: &Ensemble, tol: f64, settings: &Settings) -> Result<ThresholdReport> {
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::domain(format!("tolerance must lie in (0, 1), got {tol}")));
    }
    check_settings(settings)?;
    let exits = e.exits()?;
    let probe = |q: f64| Recursion::new(exits, q).run(settings, false).converged;

    let q_star = if probe(1.0) {
        1.0
    } else {
        let (mut lo, mut hi) = (0.0, 1.0);
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            if probe(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    };
    let at = Recursion::new(exits, q_star).run(settings, true);
    let q_bound = e.stability_bound()?.q_bound;
    Ok(ThresholdReport {
        q_star,
        q_bound,
        matching_gap: q_bound - q_star,
        iterations_at_threshold: at.iterations,
        tolerance: tol,
        trace: at.trace,
    })
}

/// Thresholds of many ensembles.
pub fn thresholds(ensembles: Vec<Ensemble>, tol: f64, exec: Exec) -> Vec<Result<ThresholdReport>> {
    exec.map(ensembles, |e| threshold(&e, tol))
}

/// One row of an EXIT chart.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChartPoint {
    pub ia: f64,
    /// `I_{E,V}(I_A, q)`.
    pub iev: f64,
    /// `I_A` of the CND that yields `I_{E,C} = ia`.
    pub iec_inv: f64,
}

impl ChartPoint {
    pub fn gap(&self) -> f64 {
        self.iev - self.iec_inv
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExitChart {
    pub q: f64,
    pub points: Vec<ChartPoint>,
}

impl ExitChart {
    /// Smallest vertical gap between the VND curve and the inverse CND, and
    /// its grid index.
    pub fn min_gap(&self) -> (usize, f64) {
        self.points
            .iter()
            .map(ChartPoint::gap)
            .enumerate()
            .fold(
                (0, f64::INFINITY),
                |best, (i, g)| if g < best.1 { (i, g) } else { best },
            )
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("IA,IEV,IECinv\n");
        for p in &self.points {
            let _ = writeln!(s, "{:.9},{:.9},{:.9}", p.ia, p.iev, p.iec_inv);
        }
        s
    }
}

/// Samples the VND curve and the inverted CND curve on a uniform `I_A` grid.
pub fn exit_chart(e: &Ensemble, q: f64, grid_size: usize) -> Result<ExitChart> {
    check_probability("q", q)?;
    if grid_size < 2 {
        return Err(Error::domain("grid size must be at least 2"));
    }
    let exits = e.exits()?;
    let vnd = exits.vnd_at(q);
    let points = (0..grid_size)
        .map(|i| {
            let ia = i as f64 / (grid_size - 1) as f64;
            ChartPoint {
                ia,
                iev: 1.0 - vnd.erasure(1.0 - ia),
                iec_inv: 1.0 - invert_cnd(exits, ia),
            }
        })
        .collect();
    Ok(ExitChart { q, points })
}

/// Erasure probability `p` with `I_{E,C}(p) = target`; `I_{E,C}` is
/// nonincreasing in `p`.
fn invert_cnd(exits: &ExitMixture, target: f64) -> f64 {
    let ie = |p: f64| 1.0 - exits.cnd_erasure(p);
    if target >= ie(0.0) {
        return 0.0;
    }
    if target <= ie(1.0) {
        return 1.0;
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..64 {
        let mid = 0.5 * (lo + hi);
        if ie(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Both sides of the slope condition at `p = 0`: the VND slope
/// `-P(q)` against the inverse-CND slope `-1/C`, with finite-difference
/// counterparts from the mixture EXIT functions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DerivativeCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub lhs_fd: f64,
    pub rhs_fd: f64,
}

impl DerivativeCheck {
    /// The decoder can leave the neighborhood of `p = 0` only if this holds.
    pub fn holds(&self) -> bool {
        self.lhs >= self.rhs
    }
}

const FD_STEP: f64 = 1e-5;

pub fn derivative_check(e: &Ensemble, q: f64) -> Result<DerivativeCheck> {
    check_probability("q", q)?;
    let exits = e.exits()?;
    let lhs = -e.stability_p(q)?;
    let c = e.stability_c()?;
    let rhs = if c > 0.0 { -1.0 / c } else { f64::NEG_INFINITY };

    let vnd = exits.vnd_at(q);
    // I_{E,V} = 1 - erasure, so its slope is minus the erasure slope.
    let lhs_fd = -(vnd.erasure(FD_STEP) - vnd.erasure(-FD_STEP)) / (2.0 * FD_STEP);
    let cnd_slope = -(exits.cnd_erasure(FD_STEP) - exits.cnd_erasure(-FD_STEP)) / (2.0 * FD_STEP);
    let rhs_fd = if cnd_slope < 0.0 {
        1.0 / cnd_slope
    } else {
        f64::NEG_INFINITY
    };
    Ok(DerivativeCheck {
        lhs,
        rhs,
        lhs_fd,
        rhs_fd,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codebook::ComponentCode;

    fn ens(vns: &[(&str, f64)], cns: &[(&str, f64)]) -> Ensemble {
        let f = |s: &[(&str, f64)]| {
            s.iter()
                .map(|(n, w)| (ComponentCode::builtin_shared(n).unwrap(), *w))
                .collect::<Vec<_>>()
        };
        Ensemble::from_pairs("t", &f(vns), &f(cns)).unwrap()
    }

    fn regular_3_6() -> Ensemble {
        ens(&[("rep-3", 1.0)], &[("spc-sys-6", 1.0)])
    }

    #[test]
    fn step_examples() {
        let e = regular_3_6();
        assert_eq!(de_step(&e, 0.0, 0.7).unwrap(), 0.0);
        assert!((de_step(&e, 1.0, 0.5).unwrap() - 0.5).abs() < 1e-15);
        for p in [0.1, 0.5, 0.9] {
            assert_eq!(de_step(&e, p, 0.0).unwrap(), 0.0);
            let x = 1.0 - (1.0 - p).powi(5);
            assert!((de_step(&e, p, 0.45).unwrap() - 0.45 * x * x).abs() < 1e-13);
        }
        assert!(de_step(&e, 1.5, 0.5).is_err());
    }

    #[test]
    fn convergence_examples() {
        let e = regular_3_6();
        let c = converges(&e, 0.0, DEFAULT_MAX_ITERS, DEFAULT_EPS).unwrap();
        assert!(c.converged && c.iterations <= 2);
        let c = converges(&e, 0.5, DEFAULT_MAX_ITERS, DEFAULT_EPS).unwrap();
        assert!(!c.converged);
        assert!((c.trace.last().unwrap() - 0.43).abs() < 0.03);
        let c = converges(&e, 0.42, DEFAULT_MAX_ITERS, DEFAULT_EPS).unwrap();
        assert!(c.converged);
        assert!(c.trace.windows(2).all(|w| w[1] <= w[0]));
        assert!(converges(&e, 0.42, 0, DEFAULT_EPS).is_err());
    }

    #[test]
    fn regular_threshold() {
        let r = threshold(&regular_3_6(), 1e-6).unwrap();
        assert!((r.q_star - 0.4294).abs() < 5e-4, "{}", r.q_star);
        assert_eq!(r.q_bound, 1.0);
        assert!(r.matching_gap > 0.0);
    }

    #[test]
    fn rep2_threshold_matches_bound() {
        // all degree-2 VNs: the recursion is linear in the VN, tangency at 0
        let e = ens(&[("rep-2", 1.0)], &[("spc-sys-6", 1.0)]);
        let r = threshold(&e, 1e-7).unwrap();
        assert!((r.q_bound - 0.2).abs() < 1e-12);
        assert!((r.q_star - 0.2).abs() < 2e-7, "{}", r.q_star);
    }

    #[test]
    fn certificate_only_changes_the_stopping_time() {
        let e = ens(&[("rep-2", 0.3), ("rep-3", 0.7)], &[("spc-sys-6", 1.0)]);
        let plain = Settings {
            certificate: false,
            max_iters: 2_000_000,
            ..Settings::default()
        };
        for q in [0.2, 0.35, 0.4, 0.45] {
            let a = converges_with(&e, q, &Settings::default()).unwrap();
            let b = converges_with(&e, q, &plain).unwrap();
            assert_eq!(a.converged, b.converged, "q = {q}");
        }
    }

    #[test]
    fn chart_endpoints_and_tunnel() {
        let e = regular_3_6();
        let chart = exit_chart(&e, 0.4, 101).unwrap();
        let last = chart.points.last().unwrap();
        assert!((last.iev - 1.0).abs() < 1e-12 && (last.iec_inv - 1.0).abs() < 1e-9);
        assert!(chart.min_gap().1 > -1e-9);
        let closed = exit_chart(&e, 0.45, 101).unwrap();
        assert!(closed.min_gap().1 < 0.0);
        assert!(chart.to_csv().starts_with("IA,IEV,IECinv\n"));
        assert!(exit_chart(&e, 0.4, 1).is_err());
    }

    #[test]
    fn ldpc_derivative_check() {
        let e = ens(&[("rep-2", 0.4), ("rep-3", 0.6)], &[("spc-sys-6", 1.0)]);
        let d = derivative_check(&e, 0.3).unwrap();
        assert!((d.lhs + 0.3 * 0.4).abs() < 1e-12);
        assert!((d.rhs + 0.2).abs() < 1e-12);
        assert!((d.lhs - d.lhs_fd).abs() < 1e-6);
        assert!((d.rhs - d.rhs_fd).abs() < 1e-6);
        let b = e.stability_bound().unwrap().q_bound;
        let at = derivative_check(&e, b).unwrap();
        assert!((at.lhs - at.rhs).abs() < 1e-9);
    }
}

//! D-GLDPC ensembles in the edge perspective: EXIT mixtures, design rate and
//! the stability quantities `P(x)`, `C` and the bound `P^{-1}(1/C)`.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::{Arc, OnceLock};

use serde::Deserialize;

use crate::codebook::{CodeKind, ComponentCode, Polynomial};
use crate::error::{check_probability, Error, Result};
use crate::exitfn::{BernsteinForm, CnExit, VnExit};
use crate::gf2::Gf2Matrix;

/// Maximum deviation of a side's fraction sum from 1 before rejection.
/// Printed distributions carry six decimals, so their sums can be off by
/// one unit in the last place.
pub const FRACTION_TOLERANCE: f64 = 1e-6;

const BOUND_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeRole {
    Vn,
    Cn,
}

/// One node type: a component code and its edge fraction.
#[derive(Clone, Debug)]
pub struct NodeType {
    pub code: Arc<ComponentCode>,
    pub fraction: f64,
}

impl NodeType {
    pub fn new(code: Arc<ComponentCode>, fraction: f64) -> Self {
        NodeType { code, fraction }
    }
}

/// Result of the stability-bound computation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StabilityBound {
    /// `P^{-1}(1/C)` clamped to `[0, 1]`; 1 when the bound is vacuous.
    pub q_bound: f64,
    pub c: f64,
    /// True when no `d_min = 2` VN or CN type exists.
    pub vacuous: bool,
}

/// A degree distribution over VN and CN component codes.
#[derive(Debug)]
pub struct Ensemble {
    name: String,
    vns: Vec<NodeType>,
    cns: Vec<NodeType>,
    exits: OnceLock<ExitMixture>,
}

impl Clone for Ensemble {
    fn clone(&self) -> Self {
        Ensemble {
            name: self.name.clone(),
            vns: self.vns.clone(),
            cns: self.cns.clone(),
            exits: OnceLock::new(),
        }
    }
}

impl Ensemble {
    /// Validates and renormalizes the two distributions.
    pub fn new(name: impl Into<String>, vns: Vec<NodeType>, cns: Vec<NodeType>) -> Result<Self> {
        let vns = normalize("VN", vns)?;
        let cns = normalize("CN", cns)?;
        Ok(Ensemble {
            name: name.into(),
            vns,
            cns,
            exits: OnceLock::new(),
        })
    }

    /// Convenience constructor from `(code, fraction)` pairs.
    pub fn from_pairs(
        name: impl Into<String>,
        vns: &[(Arc<ComponentCode>, f64)],
        cns: &[(Arc<ComponentCode>, f64)],
    ) -> Result<Self> {
        let wrap = |side: &[(Arc<ComponentCode>, f64)]| {
            side.iter()
                .map(|(c, f)| NodeType::new(c.clone(), *f))
                .collect::<Vec<_>>()
        };
        Ensemble::new(name, wrap(vns), wrap(cns))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn vns(&self) -> &[NodeType] {
        &self.vns
    }

    pub fn cns(&self) -> &[NodeType] {
        &self.cns
    }

    /// Compiled per-type EXIT functions (computed once).
    pub fn exits(&self) -> Result<&ExitMixture> {
        if let Some(e) = self.exits.get() {
            return Ok(e);
        }
        let e = ExitMixture::new(self)?;
        Ok(self.exits.get_or_init(|| e))
    }

    /// `I_{E,V}(p, q) = sum_i lambda_i I^{(i)}_{E,V}(p, q)`.
    pub fn vnd_exit(&self, p: f64, q: f64) -> Result<f64> {
        check_probability("p", p)?;
        check_probability("q", q)?;
        Ok(1.0 - self.exits()?.vnd_at(q).erasure(p))
    }

    /// `I_{E,C}(p) = sum_i rho_i I^{(i)}_{E,C}(p)`.
    pub fn cnd_exit(&self, p: f64) -> Result<f64> {
        check_probability("p", p)?;
        Ok(1.0 - self.exits()?.cnd_erasure(p))
    }

    /// `R = 1 - sum_j rho_j (1 - r_Cj) / sum_i lambda_i r_Vi`.
    pub fn design_rate(&self) -> f64 {
        design_rate(
            self.vns.iter().map(|t| (t.fraction, t.code.rate())),
            self.cns.iter().map(|t| (t.fraction, t.code.rate())),
        )
    }

    /// `C = sum over d_min = 2 CN types of rho_i 2 A_2 / n_i`.
    pub fn stability_c(&self) -> Result<f64> {
        let mut c = 0.0;
        for t in self.cns.iter().filter(|t| t.code.min_distance() == 2) {
            c += t.fraction * t.code.stability_cn_constant()?;
        }
        Ok(c)
    }

    /// `P(x) = sum over d_min = 2 VN types of lambda_i P_i(x)`.
    pub fn stability_polynomial(&self) -> Result<Polynomial> {
        let mut p = Polynomial::zero();
        for t in self.vns.iter().filter(|t| t.code.min_distance() == 2) {
            p.add_scaled(t.fraction, &t.code.stability_polynomial()?);
        }
        Ok(p)
    }

    pub fn stability_p(&self, x: f64) -> Result<f64> {
        Ok(self.stability_polynomial()?.eval(x))
    }

    /// `q* <= P^{-1}(1/C)`.
    pub fn stability_bound(&self) -> Result<StabilityBound> {
        let p = self.stability_polynomial()?;
        let c = self.stability_c()?;
        if p.is_zero() || c == 0.0 {
            return Ok(StabilityBound {
                q_bound: 1.0,
                c,
                vacuous: true,
            });
        }
        let x = invert_increasing(&p, 1.0 / c);
        Ok(StabilityBound {
            q_bound: x.clamp(0.0, 1.0),
            c,
            vacuous: false,
        })
    }

    /// Fraction of edges on length-2 repetition VNs.
    pub fn lambda2_rep(&self) -> f64 {
        self.vns
            .iter()
            .filter(|t| t.code.kind() == CodeKind::Repetition && t.code.n() == 2)
            .map(|t| t.fraction)
            .sum()
    }

    /// Ensemble spec text that parses back to this ensemble.
    pub fn to_spec_string(&self) -> String {
        let mut s = format!("name = \"{}\"\n", self.name);
        for (section, side) in [("vn", &self.vns), ("cn", &self.cns)] {
            for t in side.iter() {
                let _ = write!(
                    s,
                    "\n[[{section}]]\ncode = \"{}\"\nfraction = {:.12}\n",
                    t.code.name(),
                    t.fraction
                );
            }
        }
        s
    }
}

fn normalize(side: &str, mut types: Vec<NodeType>) -> Result<Vec<NodeType>> {
    if types.is_empty() {
        return Err(Error::Config(format!("ensemble needs at least one {side} type")));
    }
    for t in &types {
        if !(t.fraction > 0.0 && t.fraction <= 1.0 + FRACTION_TOLERANCE) {
            return Err(Error::Config(format!(
                "{side} fraction {} for {} is outside (0, 1]",
                t.fraction,
                t.code.name()
            )));
        }
        t.code.check_admissible()?;
    }
    let sum: f64 = types.iter().map(|t| t.fraction).sum();
    if (sum - 1.0).abs() > FRACTION_TOLERANCE + 1e-12 {
        return Err(Error::Config(format!(
            "{side} edge fractions sum to {sum:.9}, expected 1"
        )));
    }
    for t in &mut types {
        t.fraction /= sum;
    }
    Ok(types)
}

/// Design rate from `(fraction, component rate)` pairs.
pub fn design_rate(vns: impl Iterator<Item = (f64, f64)>, cns: impl Iterator<Item = (f64, f64)>) -> f64 {
    let v: f64 = vns.map(|(f, r)| f * r).sum();
    let c: f64 = cns.map(|(f, r)| f * (1.0 - r)).sum();
    1.0 - c / v
}

/// Smallest `x >= 0` with `p(x) = target` for a polynomial with nonnegative
/// coefficients, by bracketing and bisection.
pub fn invert_increasing(p: &Polynomial, target: f64) -> f64 {
    if target <= 0.0 {
        return 0.0;
    }
    let mut hi = 1.0;
    while p.eval(hi) < target {
        hi *= 2.0;
        assert!(hi < 1e300, "polynomial does not reach {target}");
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        if hi - lo <= BOUND_TOLERANCE * hi.max(1.0) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if p.eval(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Closed-form `P^{-1}(x)` when the only `d_min = 2` VNs are length-2
/// repetition (fraction `lambda`) and systematic length-`n` SPC (fraction
/// `mu`) codes.
pub fn mixture_inverse(lambda: f64, mu: f64, n: usize, x: f64) -> Result<f64> {
    if n < 3 || lambda < 0.0 || mu < 0.0 || x < 0.0 {
        return Err(Error::domain(format!(
            "mixture inverse needs n >= 3 and nonnegative lambda, mu, x (got n={n}, lambda={lambda}, mu={mu}, x={x})"
        )));
    }
    if mu == 0.0 {
        if lambda == 0.0 {
            return Err(Error::domain("lambda and mu are both zero"));
        }
        return Ok(x / lambda);
    }
    let nf = n as f64;
    let a = (nf - 2.0) * (nf - 1.0) * mu;
    let b = nf * lambda + 2.0 * (nf - 1.0) * mu;
    // Root of a y^2 + b y - n x = 0, rationalized to avoid cancellation.
    Ok(2.0 * nf * x / (b + (b * b + 4.0 * a * nf * x).sqrt()))
}

/// Per-type EXIT functions of an ensemble, ready for repeated evaluation.
#[derive(Clone, Debug)]
pub struct ExitMixture {
    vns: Vec<(f64, VnExit)>,
    cns: Vec<(f64, CnExit)>,
}

impl ExitMixture {
    pub fn new(e: &Ensemble) -> Result<Self> {
        Ok(ExitMixture {
            vns: e
                .vns
                .iter()
                .map(|t| Ok((t.fraction, VnExit::new(&t.code)?)))
                .collect::<Result<_>>()?,
            cns: e
                .cns
                .iter()
                .map(|t| Ok((t.fraction, CnExit::new(&t.code)?)))
                .collect::<Result<_>>()?,
        })
    }

    /// Mixture CND erasure probability `1 - I_{E,C}(p)`.
    #[inline]
    pub fn cnd_erasure(&self, p: f64) -> f64 {
        self.cns.iter().map(|(w, f)| w * f.erasure(p)).sum()
    }

    /// VND with the channel erasure probability fixed.
    pub fn vnd_at(&self, q: f64) -> VndAtQ {
        VndAtQ {
            parts: self.vns.iter().map(|(w, f)| (*w, f.erasure_at(q))).collect(),
        }
    }

    /// `dI_{E,C}/dp` at `p = 0`.
    pub fn cnd_derivative_at_zero(&self) -> f64 {
        self.cns.iter().map(|(w, f)| w * f.derivative_at_zero()).sum()
    }

    /// `dI_{E,V}/dp` at `p = 0` for channel parameter `q`.
    pub fn vnd_derivative_at_zero(&self, q: f64) -> f64 {
        self.vns.iter().map(|(w, f)| w * f.derivative_at_zero(q)).sum()
    }
}

/// The VND erasure function for one channel parameter.
#[derive(Clone, Debug)]
pub struct VndAtQ {
    parts: Vec<(f64, BernsteinForm)>,
}

impl VndAtQ {
    /// `1 - I_{E,V}(p, q)`.
    #[inline]
    pub fn erasure(&self, p: f64) -> f64 {
        self.parts.iter().map(|(w, f)| w * f.eval(p)).sum()
    }
}

/// Shares component codes (and their cached tables) between ensembles.
#[derive(Default, Debug)]
pub struct CodeRegistry {
    codes: HashMap<String, Arc<ComponentCode>>,
}

impl CodeRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// A builtin name, or a path to a `.gmat` file (relative to `base`).
    pub fn resolve(&mut self, spec: &str, base: Option<&Path>) -> Result<Arc<ComponentCode>> {
        if let Some(c) = self.codes.get(spec) {
            return Ok(c.clone());
        }
        let code = if spec.ends_with(".gmat") {
            let path = match base {
                Some(b) if Path::new(spec).is_relative() => b.join(spec),
                _ => PathBuf::from(spec),
            };
            let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            let g = Gf2Matrix::parse_gmat(&text)?;
            Arc::new(ComponentCode::new(spec, g, CodeKind::Generic)?)
        } else {
            ComponentCode::builtin_shared(spec)?
        };
        self.codes.insert(spec.to_string(), code.clone());
        Ok(code)
    }

    pub fn codes(&self) -> impl Iterator<Item = &Arc<ComponentCode>> {
        self.codes.values()
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecFile {
    name: Option<String>,
    #[serde(default)]
    vn: Vec<SpecEntry>,
    #[serde(default)]
    cn: Vec<SpecEntry>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecEntry {
    code: String,
    fraction: f64,
}

impl Ensemble {
    /// Parses the ensemble spec format: `[[vn]]` / `[[cn]]` tables with
    /// `code` and `fraction` keys, plus an optional top-level `name`.
    pub fn parse_spec(text: &str, registry: &mut CodeRegistry, base: Option<&Path>) -> Result<Ensemble> {
        let spec: SpecFile = toml::from_str(text).map_err(|e| Error::Parse {
            line: e.span().map(|s| text[..s.start].matches('\n').count() + 1).unwrap_or(0),
            message: e.message().to_string(),
        })?;
        let mut side = |entries: &[SpecEntry]| -> Result<Vec<NodeType>> {
            entries
                .iter()
                .map(|e| Ok(NodeType::new(registry.resolve(&e.code, base)?, e.fraction)))
                .collect()
        };
        let vns = side(&spec.vn)?;
        let cns = side(&spec.cn)?;
        Ensemble::new(spec.name.unwrap_or_else(|| "ensemble".into()), vns, cns)
    }

    pub fn load_spec(path: &Path, registry: &mut CodeRegistry) -> Result<Ensemble> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ensemble::parse_spec(&text, registry, path.parent())
    }
}

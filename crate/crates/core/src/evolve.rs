//! Differential evolution over edge-fraction distributions, maximizing the
//! BEC threshold at a fixed design rate.
//!
//! The search vector is `(lambda, rho)`, one entry per pool code. Every trial
//! vector is repaired before scoring and the repaired vector replaces the
//! trial (Lamarckian repair):
//!
//! 1. negative entries are clamped to 0 and each side is rescaled to sum 1
//!    with fraction floors enforced;
//! 2. the rate equation is solved along a segment from `lambda` towards the
//!    floor-feasible VN mix of highest (or lowest) rate;
//! 3. if that segment does not reach the target, `lambda` stays at the end
//!    of the segment and the same is done for `rho`.
//!
//! Candidates that still miss the rate are rejected with fitness `-inf`.
//! Trial vectors are drawn sequentially from a ChaCha8 stream seeded by the
//! spec, then scored in parallel, so the run depends only on the seed.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::codebook::ComponentCode;
use crate::engine::{self, ThresholdReport};
use crate::ensemble::{CodeRegistry, Ensemble, NodeType};
use crate::error::{Error, Result};
use crate::par::Exec;

/// Threshold tolerance for re-scoring fixed distributions.
pub const FIXED_TOLERANCE: f64 = 1e-7;

#[derive(Clone, Debug)]
pub struct SearchSpec {
    pub name: String,
    pub vn_pool: Vec<Arc<ComponentCode>>,
    pub cn_pool: Vec<Arc<ComponentCode>>,
    /// Minimum fractions, indexed like `vn_pool` / `cn_pool`.
    pub vn_floors: Vec<f64>,
    pub cn_floors: Vec<f64>,
    pub target_rate: f64,
    pub rate_tolerance: f64,
    pub population: usize,
    pub generations: usize,
    pub mutation: f64,
    pub crossover: f64,
    pub seed: u64,
    pub threshold_tol: f64,
}

impl SearchSpec {
    /// A spec with the default DE settings and no floors.
    pub fn new(
        name: impl Into<String>,
        vn_pool: Vec<Arc<ComponentCode>>,
        cn_pool: Vec<Arc<ComponentCode>>,
        target_rate: f64,
    ) -> Self {
        SearchSpec {
            name: name.into(),
            vn_floors: vec![0.0; vn_pool.len()],
            cn_floors: vec![0.0; cn_pool.len()],
            vn_pool,
            cn_pool,
            target_rate,
            rate_tolerance: 1e-4,
            population: 40,
            generations: 200,
            mutation: 0.6,
            crossover: 0.85,
            seed: 1,
            threshold_tol: 1e-5,
        }
    }

    /// Sets a floor on the pool entry named `code` (either side).
    pub fn with_floor(mut self, code: &str, min: f64) -> Result<Self> {
        let vn = self.vn_pool.iter().position(|c| c.name() == code);
        let cn = self.cn_pool.iter().position(|c| c.name() == code);
        match (vn, cn) {
            (Some(i), _) => self.vn_floors[i] = min,
            (None, Some(i)) => self.cn_floors[i] = min,
            (None, None) => return Err(Error::Config(format!("floor for {code}, which is in neither pool"))),
        }
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let cfg = |m: String| Err(Error::Config(m));
        if self.vn_pool.is_empty() || self.cn_pool.is_empty() {
            return cfg("both code pools must be nonempty".into());
        }
        if !(self.target_rate > 0.0 && self.target_rate < 1.0) {
            return cfg(format!("target rate {} is outside (0, 1)", self.target_rate));
        }
        if !(self.mutation > 0.0 && self.mutation <= 2.0) {
            return cfg(format!("mutation factor {} is outside (0, 2]", self.mutation));
        }
        if !(0.0..=1.0).contains(&self.crossover) {
            return cfg(format!("crossover rate {} is outside [0, 1]", self.crossover));
        }
        if self.population < 4 {
            return cfg("population must be at least 4".into());
        }
        if !(self.rate_tolerance > 0.0 && self.threshold_tol > 0.0) {
            return cfg("tolerances must be positive".into());
        }
        for floors in [&self.vn_floors, &self.cn_floors] {
            if floors.iter().any(|f| !(0.0..=1.0).contains(f)) || floors.iter().sum::<f64>() > 1.0 {
                return cfg("floors must lie in [0, 1] and sum to at most 1".into());
            }
        }
        for c in self.vn_pool.iter().chain(&self.cn_pool) {
            c.check_admissible()?;
        }
        Ok(())
    }

    fn dims(&self) -> (usize, usize) {
        (self.vn_pool.len(), self.cn_pool.len())
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecFile {
    name: Option<String>,
    vn_pool: Vec<String>,
    cn_pool: Vec<String>,
    target_rate: f64,
    rate_tolerance: Option<f64>,
    population: Option<usize>,
    generations: Option<usize>,
    mutation: Option<f64>,
    crossover: Option<f64>,
    seed: Option<u64>,
    threshold_tol: Option<f64>,
    #[serde(default)]
    floors: BTreeMap<String, f64>,
}

impl SearchSpec {
    /// Parses the search-spec format (TOML keys `vn_pool`, `cn_pool`,
    /// `target_rate`, optional DE settings and a `[floors]` table).
    pub fn parse(text: &str, registry: &mut CodeRegistry, base: Option<&Path>) -> Result<Self> {
        let f: SpecFile = toml::from_str(text).map_err(|e| Error::Parse {
            line: e.span().map(|s| text[..s.start].matches('\n').count() + 1).unwrap_or(0),
            message: e.message().to_string(),
        })?;
        let resolve = |names: &[String], reg: &mut CodeRegistry| {
            names.iter().map(|n| reg.resolve(n, base)).collect::<Result<Vec<_>>>()
        };
        let vn = resolve(&f.vn_pool, registry)?;
        let cn = resolve(&f.cn_pool, registry)?;
        let mut s = SearchSpec::new(f.name.unwrap_or_else(|| "search".into()), vn, cn, f.target_rate);
        if let Some(v) = f.rate_tolerance {
            s.rate_tolerance = v;
        }
        if let Some(v) = f.population {
            s.population = v;
        }
        if let Some(v) = f.generations {
            s.generations = v;
        }
        if let Some(v) = f.mutation {
            s.mutation = v;
        }
        if let Some(v) = f.crossover {
            s.crossover = v;
        }
        if let Some(v) = f.seed {
            s.seed = v;
        }
        if let Some(v) = f.threshold_tol {
            s.threshold_tol = v;
        }
        for (code, min) in &f.floors {
            s = s.with_floor(code, *min)?;
        }
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path, registry: &mut CodeRegistry) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        SearchSpec::parse(&text, registry, path.parent())
    }
}

/// One scored (or rejected) candidate.
#[derive(Clone, Debug, PartialEq)]
pub struct Candidate {
    pub generation: usize,
    pub lambda: Vec<f64>,
    pub rho: Vec<f64>,
    pub rate: f64,
    /// `None` when the candidate was rejected by the repair step.
    pub threshold: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GenerationStats {
    pub generation: usize,
    pub best: f64,
    pub mean: f64,
    pub feasible: usize,
    pub rejected: usize,
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub best: Ensemble,
    pub report: ThresholdReport,
    pub history: Vec<GenerationStats>,
    pub candidates: Vec<Candidate>,
}

impl Outcome {
    pub fn history_csv(&self) -> String {
        let mut s = String::from("generation,best,mean,feasible,rejected\n");
        for g in &self.history {
            let _ = writeln!(
                s,
                "{},{:.9},{:.9},{},{}",
                g.generation, g.best, g.mean, g.feasible, g.rejected
            );
        }
        s
    }
}

/// Runs the search.
pub fn optimize(spec: &SearchSpec, exec: Exec) -> Result<Outcome> {
    spec.validate()?;
    for c in &spec.vn_pool {
        c.split_information_functions()?;
        c.weight2_spectrum()?;
    }
    for c in &spec.cn_pool {
        c.information_functions()?;
        c.weight2_spectrum()?;
    }
    let repair = Repair::new(spec);
    let (nv, nc) = spec.dims();
    let dim = nv + nc;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut candidates = Vec::new();
    let mut history = Vec::new();

    let initial: Vec<Vec<f64>> = (0..spec.population)
        .map(|_| (0..dim).map(|_| rng.gen::<f64>()).collect())
        .collect();
    let (mut pop, mut fit) = score(spec, &repair, initial, 0, exec, &mut candidates);
    if fit.iter().all(|f| f.is_infinite()) {
        return Err(Error::Config(
            "no member of the initial population satisfies the constraints".into(),
        ));
    }
    history.push(stats(0, &fit));

    for generation in 1..=spec.generations {
        let trials: Vec<Vec<f64>> = (0..spec.population)
            .map(|i| trial(spec, &pop, i, dim, &mut rng))
            .collect();
        let (tpop, tfit) = score(spec, &repair, trials, generation, exec, &mut candidates);
        for (i, (x, f)) in tpop.into_iter().zip(tfit).enumerate() {
            if f >= fit[i] {
                pop[i] = x;
                fit[i] = f;
            }
        }
        history.push(stats(generation, &fit));
    }

    let best = (0..pop.len()).fold(0, |b, i| if fit[i] > fit[b] { i } else { b });
    let ensemble = to_ensemble(spec, &pop[best])?;
    let report = engine::threshold(&ensemble, spec.threshold_tol)?;
    Ok(Outcome {
        best: ensemble,
        report,
        history,
        candidates,
    })
}

fn trial(spec: &SearchSpec, pop: &[Vec<f64>], i: usize, dim: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = pop.len();
    let mut pick = |taken: &[usize]| loop {
        let r = rng.gen_range(0..n);
        if !taken.contains(&r) {
            break r;
        }
    };
    let r1 = pick(&[i]);
    let r2 = pick(&[i, r1]);
    let r3 = pick(&[i, r1, r2]);
    let forced = rng.gen_range(0..dim);
    (0..dim)
        .map(|j| {
            if j == forced || rng.gen::<f64>() < spec.crossover {
                pop[r1][j] + spec.mutation * (pop[r2][j] - pop[r3][j])
            } else {
                pop[i][j]
            }
        })
        .collect()
}

fn score(
    spec: &SearchSpec,
    repair: &Repair,
    raw: Vec<Vec<f64>>,
    generation: usize,
    exec: Exec,
    log: &mut Vec<Candidate>,
) -> (Vec<Vec<f64>>, Vec<f64>) {
    let results = exec.map(raw, |x| {
        let repaired = repair.apply(&x);
        let threshold = match &repaired {
            Some(y) => to_ensemble(spec, y)
                .and_then(|e| engine::threshold(&e, spec.threshold_tol))
                .ok()
                .map(|r| r.q_star),
            None => None,
        };
        (repaired.unwrap_or(x), threshold)
    });
    let (nv, _) = spec.dims();
    let mut pop = Vec::with_capacity(results.len());
    let mut fit = Vec::with_capacity(results.len());
    for (x, t) in results {
        log.push(Candidate {
            generation,
            lambda: x[..nv].to_vec(),
            rho: x[nv..].to_vec(),
            rate: repair.rate(&x),
            threshold: t,
        });
        fit.push(t.unwrap_or(f64::NEG_INFINITY));
        pop.push(x);
    }
    (pop, fit)
}

fn stats(generation: usize, fit: &[f64]) -> GenerationStats {
    let feasible: Vec<f64> = fit.iter().copied().filter(|f| f.is_finite()).collect();
    GenerationStats {
        generation,
        best: feasible.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        mean: if feasible.is_empty() {
            f64::NAN
        } else {
            feasible.iter().sum::<f64>() / feasible.len() as f64
        },
        feasible: feasible.len(),
        rejected: fit.len() - feasible.len(),
    }
}

/// Builds the ensemble for a repaired vector, dropping zero fractions.
pub fn to_ensemble(spec: &SearchSpec, x: &[f64]) -> Result<Ensemble> {
    let (nv, _) = spec.dims();
    let side = |pool: &[Arc<ComponentCode>], w: &[f64]| {
        pool.iter()
            .zip(w)
            .filter(|(_, &f)| f > 0.0)
            .map(|(c, &f)| NodeType::new(c.clone(), f))
            .collect::<Vec<_>>()
    };
    Ensemble::new(
        spec.name.clone(),
        side(&spec.vn_pool, &x[..nv]),
        side(&spec.cn_pool, &x[nv..]),
    )
}

/// Scores a fixed distribution.
pub fn evaluate_fixed(e: &Ensemble) -> Result<ThresholdReport> {
    engine::threshold(e, FIXED_TOLERANCE)
}

/// The repair operator of the search.
struct Repair {
    nv: usize,
    vn_rate: Vec<f64>,
    /// `1 - r` of each CN.
    cn_red: Vec<f64>,
    vn_floors: Vec<f64>,
    cn_floors: Vec<f64>,
    /// Wanted `sum rho (1 - r_C) / sum lambda r_V`.
    ratio: f64,
    tolerance: f64,
    target: f64,
}

impl Repair {
    fn new(spec: &SearchSpec) -> Self {
        Repair {
            nv: spec.vn_pool.len(),
            vn_rate: spec.vn_pool.iter().map(|c| c.rate()).collect(),
            cn_red: spec.cn_pool.iter().map(|c| 1.0 - c.rate()).collect(),
            vn_floors: spec.vn_floors.clone(),
            cn_floors: spec.cn_floors.clone(),
            ratio: 1.0 - spec.target_rate,
            tolerance: spec.rate_tolerance,
            target: spec.target_rate,
        }
    }

    fn rate(&self, x: &[f64]) -> f64 {
        let a = dot(&x[..self.nv], &self.vn_rate);
        let b = dot(&x[self.nv..], &self.cn_red);
        1.0 - b / a
    }

    fn apply(&self, x: &[f64]) -> Option<Vec<f64>> {
        let mut lambda = project(&x[..self.nv], &self.vn_floors);
        let mut rho = project(&x[self.nv..], &self.cn_floors);

        // a(t) = sum lambda r_V must equal b / ratio.
        let a = dot(&lambda, &self.vn_rate);
        let b = dot(&rho, &self.cn_red);
        let want_a = b / self.ratio;
        let towards = if want_a > a {
            vertex(&self.vn_floors, &self.vn_rate, true)
        } else {
            vertex(&self.vn_floors, &self.vn_rate, false)
        };
        let t = solve_segment(a, dot(&towards, &self.vn_rate), want_a);
        mix(&mut lambda, &towards, t);

        if t >= 1.0 {
            let a = dot(&lambda, &self.vn_rate);
            let want_b = a * self.ratio;
            let towards = vertex(&self.cn_floors, &self.cn_red, want_b > b);
            let s = solve_segment(b, dot(&towards, &self.cn_red), want_b);
            mix(&mut rho, &towards, s);
        }

        let mut y = lambda;
        y.extend(rho);
        ((self.rate(&y) - self.target).abs() <= self.tolerance).then_some(y)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Parameter in `[0, 1]` moving a linear functional from `from` towards
/// `to` so that it hits `want` (saturating at the ends).
fn solve_segment(from: f64, to: f64, want: f64) -> f64 {
    if (to - from).abs() < 1e-300 {
        return if (want - from).abs() < 1e-15 { 0.0 } else { 1.0 };
    }
    ((want - from) / (to - from)).clamp(0.0, 1.0)
}

fn mix(x: &mut [f64], towards: &[f64], t: f64) {
    for (a, b) in x.iter_mut().zip(towards) {
        *a = (1.0 - t) * *a + t * b;
    }
}

/// Floor-feasible point putting all free mass on the entry with the largest
/// (or smallest) `score`.
fn vertex(floors: &[f64], score: &[f64], largest: bool) -> Vec<f64> {
    let mut v = floors.to_vec();
    let free = 1.0 - floors.iter().sum::<f64>();
    let best = (0..score.len()).fold(0, |b, i| {
        let better = if largest {
            score[i] > score[b]
        } else {
            score[i] < score[b]
        };
        if better {
            i
        } else {
            b
        }
    });
    v[best] += free;
    v
}

/// Nonnegative, sums to 1, respects the floors; free mass is shared in
/// proportion to the input.
fn project(x: &[f64], floors: &[f64]) -> Vec<f64> {
    let mut v: Vec<f64> = x
        .iter()
        .map(|&a| if a.is_finite() { a.max(0.0) } else { 0.0 })
        .collect();
    let mut fixed = vec![false; v.len()];
    loop {
        let fixed_mass: f64 = (0..v.len()).filter(|&i| fixed[i]).map(|i| floors[i]).sum();
        let free_mass: f64 = (0..v.len()).filter(|&i| !fixed[i]).map(|i| v[i]).sum();
        let budget = 1.0 - fixed_mass;
        let free_count = fixed.iter().filter(|f| !**f).count();
        for i in 0..v.len() {
            if fixed[i] {
                v[i] = floors[i];
            } else if free_mass > 0.0 {
                v[i] *= budget / free_mass;
            } else {
                v[i] = budget / free_count as f64;
            }
        }
        let mut changed = false;
        for i in 0..v.len() {
            if !fixed[i] && v[i] < floors[i] {
                fixed[i] = true;
                changed = true;
            }
        }
        if !changed {
            return v;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pool(names: &[&str]) -> Vec<Arc<ComponentCode>> {
        names
            .iter()
            .map(|n| ComponentCode::builtin_shared(n).unwrap())
            .collect()
    }

    fn small_spec() -> SearchSpec {
        let mut s = SearchSpec::new(
            "small",
            pool(&["rep-2", "rep-3", "rep-6", "spc-cyc-6"]),
            pool(&["spc-sys-5", "spc-sys-8", "hamming-7-4"]),
            0.5,
        )
        .with_floor("hamming-7-4", 0.2)
        .unwrap();
        s.population = 8;
        s.generations = 6;
        s
    }

    #[test]
    fn projection_respects_floors() {
        let v = project(&[0.5, -1.0, 3.0, 0.1], &[0.0, 0.3, 0.0, 0.6]);
        assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(v[1] >= 0.3 - 1e-12 && v[3] >= 0.6 - 1e-12);
        assert!(v.iter().all(|&a| a >= 0.0));
        let u = project(&[0.0, 0.0], &[0.0, 0.0]);
        assert_eq!(u, vec![0.5, 0.5]);
    }

    #[test]
    fn repair_hits_rate_or_rejects() {
        let spec = small_spec();
        let r = Repair::new(&spec);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..500 {
            let x: Vec<f64> = (0..7).map(|_| rng.gen_range(-0.5..1.5)).collect();
            if let Some(y) = r.apply(&x) {
                assert!((r.rate(&y) - 0.5).abs() <= 1e-4);
                assert!((y[..4].iter().sum::<f64>() - 1.0).abs() < 1e-12);
                assert!((y[4..].iter().sum::<f64>() - 1.0).abs() < 1e-12);
                assert!(y[6] >= 0.2 - 1e-12);
                let e = to_ensemble(&spec, &y).unwrap();
                assert!((e.design_rate() - 0.5).abs() <= 1e-4);
            }
        }
    }

    #[test]
    fn deterministic_and_monotone() {
        let spec = small_spec();
        let a = optimize(&spec, Exec::Parallel).unwrap();
        let b = optimize(&spec, Exec::Sequential).unwrap();
        assert_eq!(a.history, b.history);
        assert_eq!(a.candidates, b.candidates);
        assert!(a.history.windows(2).all(|w| w[1].best >= w[0].best));
        assert!((a.best.design_rate() - 0.5).abs() <= 1e-4);
        assert!(a.report.q_star <= a.report.q_bound + spec.threshold_tol);
        assert!(a.history_csv().starts_with("generation,best,mean,feasible,rejected\n"));
    }

    #[test]
    fn infeasible_spec_is_a_config_error() {
        // rate 0.9 is unreachable with these pools
        let mut s = SearchSpec::new("x", pool(&["rep-2", "rep-3"]), pool(&["spc-sys-5"]), 0.9);
        s.population = 4;
        s.generations = 1;
        assert!(matches!(optimize(&s, Exec::Sequential), Err(Error::Config(_))));
        assert!(SearchSpec::new("x", pool(&["rep-2"]), vec![], 0.5).validate().is_err());
        let mut bad = small_spec();
        bad.mutation = 3.0;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn parse_search_spec() {
        let text = r#"
name = "demo"
vn_pool = ["rep-2", "rep-3"]
cn_pool = ["spc-sys-6", "hamming-7-4"]
target_rate = 0.5
population = 10
seed = 3
[floors]
"hamming-7-4" = 0.25
"#;
        let mut reg = CodeRegistry::new();
        let s = SearchSpec::parse(text, &mut reg, None).unwrap();
        assert_eq!(s.population, 10);
        assert_eq!(s.cn_floors, vec![0.0, 0.25]);
        assert_eq!(s.mutation, 0.6);
        let unknown_floor = text.replace("\"hamming-7-4\" = 0.25", "\"rep-9\" = 0.25");
        assert!(SearchSpec::parse(&unknown_floor, &mut reg, None).is_err());
    }
}

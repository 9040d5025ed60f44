//! Reference distributions and curve families: the two BCH-heavy rate-1/2
//! ensembles, their optimization setups, and the `P^{-1}` mixture family for
//! length-2 repetition plus length-7 SPC VNs.

use std::fmt::Write as _;
use std::sync::Arc;

use crate::codebook::ComponentCode;
use crate::engine::ThresholdReport;
use crate::ensemble::{mixture_inverse, Ensemble};
use crate::error::Result;
use crate::evolve::{evaluate_fixed, SearchSpec};

fn code(name: &str) -> Result<Arc<ComponentCode>> {
    ComponentCode::builtin_shared(name)
}

/// GLDPC: length-2 repetition VNs with BCH and SPC CNs.
pub fn gldpc_table() -> Result<Ensemble> {
    Ensemble::from_pairs(
        "GLDPC",
        &[(code("rep-2")?, 1.0)],
        &[
            (code("bch-31-21")?, 0.7),
            (code("spc-sys-12")?, 0.174190),
            (code("spc-sys-13")?, 0.125810),
        ],
    )
}

/// D-GLDPC: adds cyclic-form length-15 SPC VNs.
pub fn dgldpc_table() -> Result<Ensemble> {
    Ensemble::from_pairs(
        "D-GLDPC",
        &[
            (code("spc-cyc-15")?, 0.521581),
            (code("rep-2")?, 0.132836),
            (code("rep-14")?, 0.145293),
            (code("rep-15")?, 0.200291),
        ],
        &[(code("bch-31-21")?, 0.721799), (code("spc-sys-5")?, 0.278201)],
    )
}

/// Regular (3,6) LDPC.
pub fn regular_ldpc() -> Result<Ensemble> {
    Ensemble::from_pairs("(3,6) LDPC", &[(code("rep-3")?, 1.0)], &[(code("spc-sys-6")?, 1.0)])
}

/// Rate-1/2 search: repetition VNs of length 2..=15, SPC CNs of length
/// 5..=15 and BCH CNs carrying at least 70% of the edges.
pub fn gldpc_search() -> Result<SearchSpec> {
    let vn = (2..=15)
        .map(|j| code(&format!("rep-{j}")))
        .collect::<Result<Vec<_>>>()?;
    let mut cn = (5..=15)
        .map(|j| code(&format!("spc-sys-{j}")))
        .collect::<Result<Vec<_>>>()?;
    cn.push(code("bch-31-21")?);
    SearchSpec::new("GLDPC search", vn, cn, 0.5).with_floor("bch-31-21", 0.7)
}

/// As [`gldpc_search`], with cyclic-form length-15 SPC VNs added.
pub fn dgldpc_search() -> Result<SearchSpec> {
    let mut s = gldpc_search()?;
    s.name = "D-GLDPC search".into();
    s.vn_pool.push(code("spc-cyc-15")?);
    s.vn_floors.push(0.0);
    Ok(s)
}

#[derive(Clone, Debug)]
pub struct TableRow {
    pub name: String,
    pub design_rate: f64,
    pub c: f64,
    pub report: ThresholdReport,
}

/// Thresholds and stability bounds of both table distributions.
pub fn table1() -> Result<Vec<TableRow>> {
    [gldpc_table()?, dgldpc_table()?]
        .into_iter()
        .map(|e| {
            Ok(TableRow {
                name: e.name().to_string(),
                design_rate: e.design_rate(),
                c: e.stability_c()?,
                report: evaluate_fixed(&e)?,
            })
        })
        .collect()
}

pub fn format_table1(rows: &[TableRow]) -> String {
    let mut s = format!("{:<14}", "");
    for r in rows {
        let _ = write!(s, "{:>12}", r.name);
    }
    s.push('\n');
    let mut line = |label: &str, f: &dyn Fn(&TableRow) -> f64| {
        let _ = write!(s, "{label:<14}");
        for r in rows {
            let _ = write!(s, "{:>12.6}", f(r));
        }
        s.push('\n');
    };
    line("rate", &|r| r.design_rate);
    line("C", &|r| r.c);
    line("q*", &|r| r.report.q_star);
    line("P^-1(1/C)", &|r| r.report.q_bound);
    line("gap", &|r| r.report.matching_gap);
    s
}

pub const FIG2_MUS: [f64; 7] = [0.0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3];
pub const FIG2_TOTAL: f64 = 0.3;
pub const FIG2_N: usize = 7;

/// `x,mu,P^-1(x)` on `points` values of `x` in `[0, x_max]` for every `mu`.
pub fn fig2(points: usize, x_max: f64) -> Result<String> {
    let mut s = String::from("x,mu,Pinv\n");
    for &mu in &FIG2_MUS {
        let lambda = FIG2_TOTAL - mu;
        for i in 0..points {
            let x = x_max * i as f64 / (points.max(2) - 1) as f64;
            let y = mixture_inverse(lambda, mu, FIG2_N, x)?;
            let _ = writeln!(s, "{x:.6},{mu:.2},{y:.9}");
        }
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_distributions_have_rate_one_half() {
        for e in [gldpc_table().unwrap(), dgldpc_table().unwrap()] {
            assert!((e.design_rate() - 0.5).abs() < 1e-4, "{}", e.name());
        }
        assert!((regular_ldpc().unwrap().design_rate() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn search_pools() {
        let g = gldpc_search().unwrap();
        assert_eq!((g.vn_pool.len(), g.cn_pool.len()), (14, 12));
        assert_eq!(g.cn_floors[11], 0.7);
        let d = dgldpc_search().unwrap();
        assert_eq!(d.vn_pool.last().unwrap().name(), "spc-cyc-15");
        d.validate().unwrap();
    }

    #[test]
    fn fig2_csv_shape() {
        let csv = fig2(11, 2.0).unwrap();
        assert_eq!(csv.lines().count(), 1 + 7 * 11);
        assert!(csv.starts_with("x,mu,Pinv\n0.000000,0.00,0.000000000\n"));
    }
}

//! Benchmark grid: run a strategy x system x method grid to a fixed
//! residual-improvement target and emit one CSV table per strategy.

use std::path::{Path, PathBuf};
use std::time::Duration;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::mix;
use crate::solver::{solve, Method, TerminationCriteria};
use crate::system::{
    gen_banded, gen_prescribed_svd, load_matrix_market, make_consistent_system, LinearSystem,
    SpectrumSpec,
};

/// Value reported for a grid cell whose run hit its budget before reaching
/// the improvement target.
pub const TIMEOUT_SENTINEL: f64 = 1.0e99;

/// Where a benchmark system comes from.
#[derive(Clone, Debug)]
pub enum SystemSource {
    PrescribedSvd {
        name: String,
        n: usize,
        d: usize,
        cond: f64,
        seed: u64,
    },
    Banded {
        name: String,
        n: usize,
        half_bandwidth: usize,
        seed: u64,
    },
    MatrixMarket { name: String, path: PathBuf },
    Identity { name: String, n: usize },
}

impl SystemSource {
    pub fn name(&self) -> &str {
        match self {
            SystemSource::PrescribedSvd { name, .. }
            | SystemSource::Banded { name, .. }
            | SystemSource::MatrixMarket { name, .. }
            | SystemSource::Identity { name, .. } => name,
        }
    }

    /// Builds the consistent system (right-hand side drawn from the seed).
    pub fn realize(&self, fallback_seed: u64) -> Result<LinearSystem> {
        match self {
            SystemSource::PrescribedSvd { n, d, cond, seed, .. } => {
                let spec = SpectrumSpec::power_law((*n).min(*d), *cond, *seed)?;
                let a = gen_prescribed_svd(*n, *d, &spec)?;
                Ok(make_consistent_system(a, mix(*seed, &[1])))
            }
            SystemSource::Banded {
                n,
                half_bandwidth,
                seed,
                ..
            } => {
                let a = gen_banded(*n, *half_bandwidth, *seed)?;
                Ok(make_consistent_system(a, mix(*seed, &[1])))
            }
            SystemSource::MatrixMarket { path, .. } => {
                let a = load_matrix_market(path)?;
                Ok(make_consistent_system(a, fallback_seed))
            }
            SystemSource::Identity { n, .. } => Ok(make_consistent_system(
                nalgebra::DMatrix::identity(*n, *n),
                fallback_seed,
            )),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Metric {
    WallClock,
    AdvancedIterations,
}

impl Metric {
    pub fn parse(token: &str) -> Result<Self> {
        match token {
            "wall" | "wallclock" | "time" => Ok(Metric::WallClock),
            "iters" | "iterations" => Ok(Metric::AdvancedIterations),
            _ => Err(Error::InvalidParameter(format!("unknown metric `{token}`"))),
        }
    }
}

/// Full description of a benchmark run.
#[derive(Clone, Debug)]
pub struct BenchConfig {
    pub systems: Vec<SystemSource>,
    pub strategies: Vec<String>,
    pub methods: Vec<Method>,
    pub improvement_factor: f64,
    pub time_budget: Duration,
    /// Deterministic budget used by the iteration metric.
    pub max_iterations: usize,
    pub metric: Metric,
    pub seed: u64,
    pub repetitions: usize,
}

impl BenchConfig {
    /// Desk-scale default: ten ill-conditioned synthetic systems at 200x200
    /// with condition numbers log-spaced between 1e3 and 1e8.
    pub fn desk_default(seed: u64) -> Self {
        Self::sized(200, seed)
    }

    /// Full-scale variant: 500x500 systems with the three-second wall budget.
    pub fn paper_scale(seed: u64) -> Self {
        Self::sized(500, seed)
    }

    fn sized(n: usize, seed: u64) -> Self {
        let systems = (0..10)
            .map(|i| {
                let cond = 10f64.powf(3.0 + 5.0 * i as f64 / 9.0);
                SystemSource::PrescribedSvd {
                    name: format!("svd{n}_c{:.0e}", cond),
                    n,
                    d: n,
                    cond,
                    seed: mix(seed, &[i as u64]),
                }
            })
            .collect();
        Self {
            systems,
            strategies: vec!["countsketch:10".into()],
            methods: vec![
                Method::Base,
                Method::Partial { m: 5 },
                Method::Partial { m: 10 },
                Method::Complete,
            ],
            improvement_factor: 0.1,
            time_budget: Duration::from_secs(3),
            max_iterations: 400_000,
            metric: Metric::AdvancedIterations,
            seed,
            repetitions: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.systems.is_empty() || self.strategies.is_empty() || self.methods.is_empty() {
            return Err(Error::InvalidParameter(
                "benchmark needs systems, strategies, and methods".into(),
            ));
        }
        if !(self.improvement_factor > 0.0 && self.improvement_factor < 1.0) {
            return Err(Error::InvalidParameter(
                "improvement factor must lie in (0, 1)".into(),
            ));
        }
        if self.time_budget.is_zero() {
            return Err(Error::InvalidParameter("time budget must be positive".into()));
        }
        if self.repetitions == 0 {
            return Err(Error::InvalidParameter("repetitions must be positive".into()));
        }
        Ok(())
    }
}

/// One CSV row: the system name plus one value per method.
#[derive(Clone, Debug)]
pub struct BenchRow {
    pub matrix_name: String,
    pub values: Vec<f64>,
}

/// All rows for one strategy.
#[derive(Clone, Debug)]
pub struct StrategyGrid {
    pub strategy: String,
    pub rows: Vec<BenchRow>,
}

/// Grid results plus the names of systems that failed to resolve.
pub struct GridOutcome {
    pub grids: Vec<StrategyGrid>,
    pub skipped: Vec<String>,
}

fn cell_criteria(cfg: &BenchConfig, method: &Method) -> TerminationCriteria {
    // The full-memory method converges in few, expensive iterations; check
    // its residual every step. The cheap methods amortize the check.
    let check_every = match method {
        Method::Complete => 1,
        _ => 10,
    };
    let base = TerminationCriteria::residual(cfg.improvement_factor).with_check_every(check_every);
    match cfg.metric {
        Metric::AdvancedIterations => base.with_max_iterations(cfg.max_iterations),
        Metric::WallClock => base.with_budget(cfg.time_budget),
    }
}

fn run_cell(
    cfg: &BenchConfig,
    system: &LinearSystem,
    strategy: &str,
    method: &Method,
    cell_seed: u64,
) -> Result<f64> {
    let criteria = cell_criteria(cfg, method);
    let mut values = Vec::with_capacity(cfg.repetitions);
    for rep in 0..cfg.repetitions {
        let report = solve(
            system,
            strategy,
            method,
            &criteria,
            mix(cell_seed, &[rep as u64]),
        )?;
        let value = if report.timed_out {
            TIMEOUT_SENTINEL
        } else {
            match cfg.metric {
                Metric::AdvancedIterations => report.advanced_steps as f64,
                Metric::WallClock => report.elapsed_seconds,
            }
        };
        values.push(value);
    }
    // Lower median: deterministic and robust to stray slow repetitions.
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    Ok(values[(values.len() - 1) / 2])
}

/// Runs the whole grid. Unresolvable systems are skipped with a warning on
/// stderr; cells run in parallel under the iteration metric and sequentially
/// under the wall-clock metric to keep timings honest.
pub fn run_grid(cfg: &BenchConfig) -> Result<GridOutcome> {
    cfg.validate()?;
    let mut resolved = Vec::new();
    let mut skipped = Vec::new();
    for source in &cfg.systems {
        match source.realize(cfg.seed) {
            Ok(system) => resolved.push((source.name().to_string(), system)),
            Err(err) => {
                eprintln!("warning: skipping system `{}`: {err}", source.name());
                skipped.push(source.name().to_string());
            }
        }
    }

    struct Cell {
        si: usize,
        yi: usize,
        mi: usize,
    }
    let mut cells = Vec::new();
    for si in 0..cfg.strategies.len() {
        for yi in 0..resolved.len() {
            for mi in 0..cfg.methods.len() {
                cells.push(Cell { si, yi, mi });
            }
        }
    }
    let run_one = |cell: &Cell| -> Result<f64> {
        run_cell(
            cfg,
            &resolved[cell.yi].1,
            &cfg.strategies[cell.si],
            &cfg.methods[cell.mi],
            mix(cfg.seed, &[cell.si as u64, cell.yi as u64, cell.mi as u64]),
        )
    };
    let values: Vec<Result<f64>> = match cfg.metric {
        Metric::AdvancedIterations => cells.par_iter().map(run_one).collect(),
        Metric::WallClock => cells.iter().map(run_one).collect(),
    };

    let mut grids: Vec<StrategyGrid> = cfg
        .strategies
        .iter()
        .map(|s| StrategyGrid {
            strategy: s.clone(),
            rows: resolved
                .iter()
                .map(|(name, _)| BenchRow {
                    matrix_name: name.clone(),
                    values: vec![0.0; cfg.methods.len()],
                })
                .collect(),
        })
        .collect();
    for (cell, value) in cells.iter().zip(values) {
        grids[cell.si].rows[cell.yi].values[cell.mi] = value?;
    }
    Ok(GridOutcome { grids, skipped })
}

/// Column label for a method, matching the published table layout.
pub fn method_column_name(method: &Method) -> String {
    match method {
        Method::Base => "Base".into(),
        Method::Partial { m: 5 } => "PartFive".into(),
        Method::Partial { m: 10 } => "PartTen".into(),
        Method::Partial { m } => format!("Part{m}"),
        Method::Complete => "Comp".into(),
    }
}

/// File label for a strategy token, mirroring the published CSV names.
pub fn strategy_file_label(token: &str) -> String {
    let head = token.split(':').next().unwrap_or(token);
    match head {
        "gaussian" => "Gaussian".into(),
        "countsketch" => "CountSketch".into(),
        "uniform" => "KaczmarzWR".into(),
        "cyclic" => "KaczmarzCyc".into(),
        "rownorm" => "KaczmarzRowNorm".into(),
        "colcyclic" => "GaussSeidelCyc".into(),
        "maxres" => "MaxResidual".into(),
        "maxdist" => "MaxDistance".into(),
        "grk" => "GRK".into(),
        "skm" => "SKM".into(),
        other => other.to_string(),
    }
}

pub fn grid_csv_filename(tag: &str, strategy_token: &str) -> String {
    format!(
        "{tag}_{}_10x-Improve-Time.csv",
        strategy_file_label(strategy_token)
    )
}

/// Formats a cell: scientific notation with three significant digits, with
/// the timeout sentinel spelled exactly `1.0e99`.
pub fn csv_value(v: f64) -> String {
    if v == TIMEOUT_SENTINEL {
        "1.0e99".into()
    } else {
        format!("{v:.2e}")
    }
}

/// Writes one strategy's table atomically (temp file + rename).
pub fn emit_csv(rows: &[BenchRow], methods: &[Method], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut content = String::from("Matrix");
    for m in methods {
        content.push(',');
        content.push_str(&method_column_name(m));
    }
    content.push('\n');
    for row in rows {
        content.push_str(&row.matrix_name);
        for v in &row.values {
            content.push(',');
            content.push_str(&csv_value(*v));
        }
        content.push('\n');
    }
    let tmp = path.with_extension("csv.tmp");
    std::fs::write(&tmp, content)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn default_methods() -> Vec<Method> {
        vec![
            Method::Base,
            Method::Partial { m: 5 },
            Method::Partial { m: 10 },
            Method::Complete,
        ]
    }

    #[test]
    fn csv_format_contract() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        let rows = vec![BenchRow {
            matrix_name: "id100".into(),
            values: vec![1.234e-3, 5.6e-4, 7.8e-4, 2.3e-2],
        }];
        emit_csv(&rows, &default_methods(), &path).unwrap();
        let content = std::fs::read_to_string(&path).unwrap();
        assert_eq!(
            content,
            "Matrix,Base,PartFive,PartTen,Comp\nid100,1.23e-3,5.60e-4,7.80e-4,2.30e-2\n"
        );
    }

    #[test]
    fn csv_sentinel_and_empty_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        let rows = vec![BenchRow {
            matrix_name: "slow".into(),
            values: vec![TIMEOUT_SENTINEL, 1.0, 2.0, 3.0],
        }];
        emit_csv(&rows, &default_methods(), &path).unwrap();
        let content = std::fs::read_to_string(&path).unwrap();
        assert!(content.contains("slow,1.0e99,1.00e0,2.00e0,3.00e0"));

        emit_csv(&[], &default_methods(), &path).unwrap();
        let content = std::fs::read_to_string(&path).unwrap();
        assert_eq!(content, "Matrix,Base,PartFive,PartTen,Comp\n");
    }

    #[test]
    fn grid_on_identity_is_fast_and_deterministic() {
        let cfg = BenchConfig {
            systems: vec![SystemSource::Identity {
                name: "id100".into(),
                n: 100,
            }],
            strategies: vec!["cyclic".into()],
            methods: default_methods(),
            improvement_factor: 0.1,
            time_budget: Duration::from_secs(3),
            max_iterations: 5_000,
            metric: Metric::AdvancedIterations,
            seed: 7,
            repetitions: 3,
        };
        let out1 = run_grid(&cfg).unwrap();
        let out2 = run_grid(&cfg).unwrap();
        assert!(out1.skipped.is_empty());
        let row = &out1.grids[0].rows[0];
        // Orthonormal rows: any improvement factor is reached within one sweep.
        assert!(row.values[0] <= 100.0);
        for (a, b) in row.values.iter().zip(&out2.grids[0].rows[0].values) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn unresolvable_systems_are_skipped() {
        let cfg = BenchConfig {
            systems: vec![
                SystemSource::MatrixMarket {
                    name: "ghost".into(),
                    path: "/nonexistent/ghost.mtx".into(),
                },
                SystemSource::Identity {
                    name: "id4".into(),
                    n: 4,
                },
            ],
            strategies: vec!["cyclic".into()],
            methods: vec![Method::Base],
            improvement_factor: 0.1,
            time_budget: Duration::from_secs(1),
            max_iterations: 100,
            metric: Metric::AdvancedIterations,
            seed: 0,
            repetitions: 1,
        };
        let out = run_grid(&cfg).unwrap();
        assert_eq!(out.skipped, vec!["ghost".to_string()]);
        assert_eq!(out.grids[0].rows.len(), 1);
    }

    #[test]
    fn filenames_mirror_the_published_layout() {
        assert_eq!(
            grid_csv_filename("MatrixMarket", "countsketch:10"),
            "MatrixMarket_CountSketch_10x-Improve-Time.csv"
        );
        assert_eq!(
            grid_csv_filename("Synthetic", "cyclic"),
            "Synthetic_KaczmarzCyc_10x-Improve-Time.csv"
        );
    }

    #[test]
    fn sentinel_is_exact() {
        assert_eq!(csv_value(TIMEOUT_SENTINEL), "1.0e99");
        assert_eq!(csv_value(1.234e-3), "1.23e-3");
    }
}

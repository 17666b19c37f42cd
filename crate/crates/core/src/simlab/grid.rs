use std::io::Write;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mcmc::run_chain;
use crate::model::{center_columns, GroupData, Hyperparams};
use crate::scalar::Scalar;

use super::metrics::{average_roc, evaluate, EvalReport, Roc};
use super::scenario::{generate_scenario, Scenario, ScenarioConfig};

/// Points on the FPR axis used when averaging ROC curves.
pub const ROC_GRID: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CellConfig {
    pub q: usize,
    pub xi: f64,
    pub n1: usize,
    pub n2: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridConfig {
    pub qs: Vec<usize>,
    pub xis: Vec<f64>,
    pub sizes: Vec<(usize, usize)>,
    pub replications: usize,
    pub iterations: usize,
    pub burn_in: usize,
    pub x_tilde: f64,
    pub seed: u64,
    /// Worker cap; `None` uses the global rayon pool.
    pub threads: Option<usize>,
    /// Run the large dense cells that need more than 1000 rows to be informative.
    pub include_skipped: bool,
}

impl GridConfig {
    pub fn validate(&self) -> Result<()> {
        if self.qs.is_empty() || self.xis.is_empty() || self.sizes.is_empty() {
            return Err(Error::Validation("grid has no cells".into()));
        }
        if self.replications == 0 {
            return Err(Error::Validation("need at least one replication".into()));
        }
        if self.burn_in >= self.iterations {
            return Err(Error::Validation(format!(
                "burn-in {} leaves no kept iterations out of {}",
                self.burn_in, self.iterations
            )));
        }
        if let Some(&q) = self.qs.iter().find(|&&q| q < 2) {
            return Err(Error::Validation(format!("q = {q} is below 2")));
        }
        if let Some(&xi) = self.xis.iter().find(|&&x| !(x > 0.0 && x < 1.0)) {
            return Err(Error::Validation(format!("xi = {xi} is outside (0, 1)")));
        }
        if self.sizes.iter().any(|&(a, b)| a == 0 || b == 0) {
            return Err(Error::Validation("group sizes must be positive".into()));
        }
        Ok(())
    }

    /// Cells in (xi, sizes, q) order, with warnings for cells that are skipped.
    pub fn cells(&self) -> (Vec<CellConfig>, Vec<String>) {
        let mut cells = Vec::new();
        let mut warnings = Vec::new();
        for &xi in &self.xis {
            for &(n1, n2) in &self.sizes {
                for &q in &self.qs {
                    let c = CellConfig { q, xi, n1, n2 };
                    if is_oversized(q, xi) && !self.include_skipped {
                        warnings.push(format!(
                            "skipping q={q}, xi={xi}, n=({n1},{n2}): this graph size needs more than 1000 rows per group"
                        ));
                    } else {
                        cells.push(c);
                    }
                }
            }
        }
        (cells, warnings)
    }
}

fn is_oversized(q: usize, xi: f64) -> bool {
    (q >= 50 && xi >= 0.3 - 1e-12) || (q >= 40 && xi >= 0.4 - 1e-12)
}

/// Seed for replication `rep` of cell `cell`.
pub fn replication_rng(seed: u64, cell: usize, rep: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((cell as u64) << 32) | rep as u64);
    rng
}

/// Groups as the fit sees them: observed covariates centered.
pub fn fit_inputs<T: Scalar>(scenario: &Scenario<T>) -> Result<Vec<GroupData<T>>> {
    scenario
        .data
        .iter()
        .map(|g| {
            let mut x = g.x_obs();
            center_columns(&mut x);
            GroupData::new(g.y().to_vec(), &x)
        })
        .collect()
}

pub fn replication_hyper<T: Scalar>(cell: &CellConfig, iterations: usize, burn_in: usize, x_tilde: f64) -> Hyperparams<T> {
    let mut h = Hyperparams::defaults(cell.q, &[cell.n1, cell.n2]);
    h.xi = T::of(cell.xi);
    h.iterations = iterations;
    h.burn_in = burn_in;
    h.x_tilde = T::of(x_tilde);
    h
}

/// Scenario, fit and metrics for one replication.
pub fn run_replication<T: Scalar>(
    cell: &CellConfig,
    hyper: &Hyperparams<T>,
    rng: &mut ChaCha8Rng,
) -> Result<EvalReport> {
    let start = Instant::now();
    let scenario: Scenario<T> = generate_scenario(&ScenarioConfig::new(cell.q, cell.n1, cell.n2, cell.xi), rng)?;
    let trace = run_chain(&fit_inputs(&scenario)?, hyper, rng)?;
    let mut report = evaluate(&scenario.truth, &trace, hyper.x_tilde)?;
    report.wall_time = start.elapsed().as_secs_f64();
    Ok(report)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CellReport {
    pub cell: CellConfig,
    pub reports: Vec<(usize, EvalReport)>,
    pub failures: Vec<(usize, String)>,
    /// AUC of the vertically averaged ROC curve.
    pub average_roc: Option<Roc>,
}

impl CellReport {
    pub fn is_partial(&self) -> bool {
        !self.failures.is_empty()
    }

    fn mean(&self, f: impl Fn(&EvalReport) -> f64) -> f64 {
        if self.reports.is_empty() {
            return f64::NAN;
        }
        self.reports.iter().map(|(_, r)| f(r)).sum::<f64>() / self.reports.len() as f64
    }

    pub fn auc(&self) -> f64 {
        self.average_roc.as_ref().map_or(f64::NAN, |r| r.auc)
    }

    pub fn mean_auc(&self) -> f64 {
        self.mean(|r| r.auc)
    }

    pub fn partial_err_mean(&self) -> f64 {
        self.mean(|r| r.partial_err_mean)
    }

    pub fn partial_err_abs(&self) -> f64 {
        self.mean(|r| r.partial_err_abs)
    }

    pub fn theta_err(&self) -> f64 {
        self.mean(|r| r.theta_err)
    }

    pub fn theta_coverage(&self) -> f64 {
        self.mean(|r| f64::from(u8::from(r.theta.covered)))
    }

    /// Largest |effect error| over every replication; 0 when no true edges
    /// point into the response.
    pub fn max_effect_err(&self) -> f64 {
        self.reports
            .iter()
            .flat_map(|(_, r)| r.effect_err.iter().map(|e| e.2.abs()))
            .fold(0.0, f64::max)
    }

    pub fn wall_time(&self) -> f64 {
        self.reports.iter().map(|(_, r)| r.wall_time).sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridReport {
    pub cells: Vec<CellReport>,
    pub warnings: Vec<String>,
}

/// Runs every replication of every cell in parallel and reduces per cell.
pub fn run_grid<T: Scalar>(config: &GridConfig) -> Result<GridReport> {
    config.validate()?;
    let (cells, warnings) = config.cells();
    let jobs: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..config.replications).map(move |r| (c, r)))
        .collect();
    let work = || {
        jobs.par_iter()
            .map(|&(c, r)| {
                let hyper = replication_hyper::<T>(&cells[c], config.iterations, config.burn_in, config.x_tilde);
                let mut rng = replication_rng(config.seed, c, r);
                (c, r, run_replication(&cells[c], &hyper, &mut rng))
            })
            .collect::<Vec<_>>()
    };
    let results = match config.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Validation(format!("thread pool: {e}")))?
            .install(work),
        None => work(),
    };
    let mut out: Vec<CellReport> = cells
        .iter()
        .map(|&cell| CellReport {
            cell,
            reports: Vec::new(),
            failures: Vec::new(),
            average_roc: None,
        })
        .collect();
    for (c, r, res) in results {
        match res {
            Ok(rep) => out[c].reports.push((r, rep)),
            Err(e) => out[c].failures.push((r, e.to_string())),
        }
    }
    for cell in &mut out {
        if !cell.reports.is_empty() {
            let curves: Vec<Roc> = cell.reports.iter().map(|(_, r)| r.roc.clone()).collect();
            cell.average_roc = Some(average_roc(&curves, ROC_GRID)?);
        }
    }
    Ok(GridReport { cells: out, warnings })
}

fn io_err(e: impl std::fmt::Display) -> Error {
    Error::Validation(format!("grid csv: {e}"))
}

impl GridReport {
    /// One row per cell. Wall time is left out so the file is reproducible.
    pub fn write_metrics_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record([
            "q",
            "xi",
            "n1",
            "n2",
            "replications",
            "failed",
            "auc",
            "mean_auc",
            "partial_err_mean",
            "partial_err_abs",
            "theta_err",
            "theta_coverage",
            "max_effect_err",
        ])
        .map_err(io_err)?;
        for c in &self.cells {
            w.write_record([
                c.cell.q.to_string(),
                c.cell.xi.to_string(),
                c.cell.n1.to_string(),
                c.cell.n2.to_string(),
                c.reports.len().to_string(),
                c.failures.len().to_string(),
                c.auc().to_string(),
                c.mean_auc().to_string(),
                c.partial_err_mean().to_string(),
                c.partial_err_abs().to_string(),
                c.theta_err().to_string(),
                c.theta_coverage().to_string(),
                c.max_effect_err().to_string(),
            ])
            .map_err(io_err)?;
        }
        w.flush().map_err(io_err)?;
        Ok(())
    }

    pub fn write_timing_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["q", "xi", "n1", "n2", "replication", "wall_time"]).map_err(io_err)?;
        for c in &self.cells {
            for (r, rep) in &c.reports {
                w.write_record([
                    c.cell.q.to_string(),
                    c.cell.xi.to_string(),
                    c.cell.n1.to_string(),
                    c.cell.n2.to_string(),
                    r.to_string(),
                    rep.wall_time.to_string(),
                ])
                .map_err(io_err)?;
            }
        }
        w.flush().map_err(io_err)?;
        Ok(())
    }

    /// Averaged ROC points per cell.
    pub fn write_roc_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["q", "xi", "n1", "n2", "fpr", "tpr"]).map_err(io_err)?;
        for c in &self.cells {
            if let Some(roc) = &c.average_roc {
                for (f, t) in &roc.points {
                    w.write_record([
                        c.cell.q.to_string(),
                        c.cell.xi.to_string(),
                        c.cell.n1.to_string(),
                        c.cell.n2.to_string(),
                        f.to_string(),
                        t.to_string(),
                    ])
                    .map_err(io_err)?;
                }
            }
        }
        w.flush().map_err(io_err)?;
        Ok(())
    }

    /// Rows are (xi, n1, n2), columns are q; empty where a cell was skipped
    /// or every replication failed.
    pub fn write_auc_table<W: Write>(&self, writer: W) -> Result<()> {
        let mut qs: Vec<usize> = self.cells.iter().map(|c| c.cell.q).collect();
        qs.sort_unstable();
        qs.dedup();
        let mut rows: Vec<(f64, usize, usize)> = Vec::new();
        for c in &self.cells {
            let key = (c.cell.xi, c.cell.n1, c.cell.n2);
            if !rows.contains(&key) {
                rows.push(key);
            }
        }
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["xi".to_string(), "n1".to_string(), "n2".to_string()];
        header.extend(qs.iter().map(|q| format!("q{q}")));
        w.write_record(&header).map_err(io_err)?;
        for (xi, n1, n2) in rows {
            let mut row = vec![xi.to_string(), n1.to_string(), n2.to_string()];
            for &q in &qs {
                let cell = self
                    .cells
                    .iter()
                    .find(|c| c.cell == CellConfig { q, xi, n1, n2 });
                row.push(match cell {
                    Some(c) if c.average_roc.is_some() => c.auc().to_string(),
                    _ => String::new(),
                });
            }
            w.write_record(&row).map_err(io_err)?;
        }
        w.flush().map_err(io_err)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(reps: usize) -> GridConfig {
        GridConfig {
            qs: vec![4],
            xis: vec![0.3],
            sizes: vec![(40, 40)],
            replications: reps,
            iterations: 60,
            burn_in: 20,
            x_tilde: 1.0,
            seed: 11,
            threads: Some(2),
            include_skipped: false,
        }
    }

    #[test]
    fn single_cell_equals_direct_call() {
        let cfg = tiny(1);
        let grid = run_grid::<f64>(&cfg).unwrap();
        let cell = grid.cells[0].cell;
        let hyper = replication_hyper::<f64>(&cell, cfg.iterations, cfg.burn_in, cfg.x_tilde);
        let mut rng = replication_rng(cfg.seed, 0, 0);
        let direct = run_replication(&cell, &hyper, &mut rng).unwrap();
        assert!(grid.cells[0].failures.is_empty(), "{:?}", grid.cells[0].failures);
        let (rep, got) = &grid.cells[0].reports[0];
        assert_eq!(*rep, 0);
        assert_eq!(got.roc, direct.roc);
        assert_eq!(got.partial_err_abs, direct.partial_err_abs);
        assert_eq!(got.theta, direct.theta);
        assert_eq!(got.effect_err, direct.effect_err);
    }

    #[test]
    fn metrics_do_not_depend_on_thread_count() {
        let mut a = tiny(3);
        a.threads = Some(1);
        let mut b = tiny(3);
        b.threads = Some(3);
        let (mut ca, mut cb) = (Vec::new(), Vec::new());
        run_grid::<f64>(&a).unwrap().write_metrics_csv(&mut ca).unwrap();
        run_grid::<f64>(&b).unwrap().write_metrics_csv(&mut cb).unwrap();
        assert_eq!(ca, cb);
    }

    #[test]
    fn failures_mark_the_cell_partial() {
        // a = q makes no sense when n is tiny: the initial estimate needs n > q - 1
        let mut cfg = tiny(2);
        cfg.sizes = vec![(2, 2)];
        let grid = run_grid::<f64>(&cfg).unwrap();
        assert!(grid.cells[0].is_partial());
        assert!(grid.cells[0].reports.is_empty());
        assert!(grid.cells[0].auc().is_nan());
        let mut table = Vec::new();
        grid.write_auc_table(&mut table).unwrap();
        assert_eq!(String::from_utf8(table).unwrap(), "xi,n1,n2,q4\n0.3,2,2,\n");
    }

    #[test]
    fn skipped_cells_warn() {
        let mut cfg = tiny(1);
        cfg.qs = vec![10, 40, 50];
        cfg.xis = vec![0.1, 0.3, 0.4];
        let (cells, warnings) = cfg.cells();
        assert_eq!(warnings.len(), 3);
        assert_eq!(cells.len(), 6);
        assert!(!cells.iter().any(|c| c.q == 50 && c.xi >= 0.3));
        cfg.include_skipped = true;
        assert_eq!(cfg.cells().0.len(), 9);
    }

    #[test]
    fn table_layout() {
        let mut cfg = tiny(1);
        cfg.qs = vec![3, 4];
        cfg.sizes = vec![(30, 30), (30, 40)];
        let grid = run_grid::<f64>(&cfg).unwrap();
        let mut table = Vec::new();
        grid.write_auc_table(&mut table).unwrap();
        let text = String::from_utf8(table).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "xi,n1,n2,q3,q4");
        assert_eq!(lines.len(), 3);
        assert!(lines[2].starts_with("0.3,30,40,"));
        for line in &lines[1..] {
            for v in line.split(',').skip(3) {
                let auc: f64 = v.parse().unwrap();
                assert!((0.0..=1.0).contains(&auc));
            }
        }
    }

    #[test]
    fn rejects_bad_grids() {
        let mut cfg = tiny(0);
        assert!(run_grid::<f64>(&cfg).is_err());
        cfg.replications = 1;
        cfg.burn_in = 60;
        assert!(run_grid::<f64>(&cfg).is_err());
    }
}

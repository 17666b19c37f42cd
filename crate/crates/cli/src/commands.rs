use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use dagprobit::causal::{bma_effects, write_effects_csv, EffectEstimate};
use dagprobit::mcmc::{run_chain, ChainTrace};
use dagprobit::model::{center_columns, GroupData, Hyperparams};
use dagprobit::simlab::{evaluate, generate_scenario, run_grid, GridConfig, Scenario, ScenarioConfig};
use dagprobit::{partial_correlations, Error, Matrix, Result, RESPONSE};

use crate::config::{
    config_hash, EffectsSettings, EvaluateSettings, FitSettings, GridSettings, SimulateSettings,
};
use crate::io::{
    read_group, read_truth, write_group, write_matrix, write_truth, Output, Provenance, TRUTH_FILES,
};

pub const TRACE_FILE: &str = "trace.csv";

fn csv_err(e: csv::Error) -> Error {
    Error::Validation(format!("csv: {e}"))
}

fn key_values(out: &mut Output, rows: &[(&str, String)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["name", "value"]).map_err(csv_err)?;
    for (k, v) in rows {
        w.write_record([*k, v.as_str()]).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io("csv", e))?;
    Ok(())
}

pub fn simulate(settings: &SimulateSettings, seed: u64, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let prov = Provenance {
        seed,
        config_hash: config_hash("simulate", settings),
    };
    let cfg = ScenarioConfig {
        q: settings.q,
        n: [settings.n1, settings.n2],
        xi: settings.xi,
        coef_range: settings.coef_range,
        d_range: settings.d_range,
        theta_range: settings.theta_range,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scenario: Scenario<f64> = generate_scenario(&cfg, &mut rng)?;
    let mut written = Vec::new();
    for (k, g) in scenario.data.iter().enumerate() {
        let mut out = Output::create(out_dir, &format!("group{}.csv", k + 1), &prov)?;
        write_group(&mut out, g.y(), &g.x_obs())?;
        written.push(out.finish()?);
    }
    let truth_dir = out_dir.join("truth");
    write_truth(&truth_dir, &scenario.truth, &prov)?;
    written.extend(TRUTH_FILES.iter().map(|f| truth_dir.join(f)));
    Ok(written)
}

/// Reads both groups, checks they share a schema, and centers covariates
/// unless told not to.
pub fn load_groups(paths: &[PathBuf; 2], center: bool) -> Result<Vec<GroupData<f64>>> {
    let tables = [read_group(&paths[0])?, read_group(&paths[1])?];
    if tables[0].columns != tables[1].columns {
        return Err(Error::Ingestion(format!(
            "groups have different columns: [{}] vs [{}]",
            tables[0].columns.join(", "),
            tables[1].columns.join(", ")
        )));
    }
    tables
        .into_iter()
        .map(|t| {
            let mut x = t.x;
            if center {
                center_columns(&mut x);
            }
            GroupData::new(t.y, &x)
        })
        .collect()
}

pub fn fit_hyper(settings: &FitSettings, q: usize, ns: &[usize]) -> Result<Hyperparams<f64>> {
    let mut h = Hyperparams::defaults(q, ns);
    h.iterations = settings.iterations;
    h.burn_in = settings.burn_in;
    h.xi = settings.xi;
    if let Some(a) = settings.a {
        h.a = a;
    }
    for (k, g) in [settings.g1, settings.g2].iter().enumerate() {
        if let Some(g) = g {
            h.g[k] = *g;
        }
    }
    h.sigma0_sq = settings.sigma0_sq;
    h.edge_threshold = settings.edge_threshold;
    h.zero_tol = settings.zero_tol;
    h.x_tilde = settings.x_tilde;
    h.exact_proposal_ratio = settings.exact_proposal_ratio;
    h.targets = match &settings.targets {
        Some(t) => Some(to_zero_based(t, q)?),
        None => None,
    };
    Ok(h)
}

/// 1-based node labels to indices; the response (node 1) is refused.
fn to_zero_based(nodes: &[usize], q: usize) -> Result<Vec<usize>> {
    nodes
        .iter()
        .map(|&s| {
            if s == 1 {
                Err(Error::Validation("node 1 is the latent response and cannot be intervened on".into()))
            } else if s == 0 || s > q {
                Err(Error::Validation(format!("node {s} is outside 1..={q}")))
            } else {
                Ok(s - 1)
            }
        })
        .collect()
}

pub fn fit(settings: &FitSettings, seed: u64, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let prov = Provenance {
        seed,
        config_hash: config_hash("fit", settings),
    };
    let groups = load_groups(&settings.data, settings.center)?;
    let q = groups[0].q();
    let ns: Vec<usize> = groups.iter().map(GroupData::n).collect();
    let hyper = fit_hyper(settings, q, &ns)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = Instant::now();
    let trace = run_chain(&groups, &hyper, &mut rng)?;
    let wall = start.elapsed().as_secs_f64();

    let mut written = Vec::new();
    let mut out = Output::create(out_dir, TRACE_FILE, &prov)?;
    trace.write_csv(&mut out)?;
    written.push(out.finish()?);

    for k in 0..2 {
        let probs = trace.edge_probabilities(k)?;
        let mut out = Output::create(out_dir, &format!("edge_probs_g{}.csv", k + 1), &prov)?;
        write_matrix(&mut out, &probs)?;
        written.push(out.finish()?);

        let adj = Matrix::from_fn(q, q, |i, j| f64::from(u8::from(probs[(i, j)] > hyper.edge_threshold)));
        let mut out = Output::create(out_dir, &format!("dag_g{}.csv", k + 1), &prov)?;
        write_matrix(&mut out, &adj)?;
        written.push(out.finish()?);

        let mut out = Output::create(out_dir, &format!("partial_corr_g{}.csv", k + 1), &prov)?;
        write_matrix(&mut out, &mean_partial_correlations(&trace, k)?)?;
        written.push(out.finish()?);
    }

    let mut out = Output::create(out_dir, "theta.csv", &prov)?;
    {
        let mut w = csv::Writer::from_writer(&mut out);
        w.write_record(["iteration", "theta"]).map_err(csv_err)?;
        for r in &trace.records {
            w.write_record([r.iteration.to_string(), r.theta.to_string()]).map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::io("theta.csv", e))?;
    }
    written.push(out.finish()?);

    let mut out = Output::create(out_dir, "summary.csv", &prov)?;
    key_values(
        &mut out,
        &[
            ("q", q.to_string()),
            ("n1", ns[0].to_string()),
            ("n2", ns[1].to_string()),
            ("iterations", hyper.iterations.to_string()),
            ("burn_in", hyper.burn_in.to_string()),
            ("kept", trace.records.len().to_string()),
            ("dag_accept_g1", trace.dag_moves[0].rate().to_string()),
            ("dag_accept_g2", trace.dag_moves[1].rate().to_string()),
            ("theta_accept", trace.theta_moves.rate().to_string()),
        ],
    )?;
    written.push(out.finish()?);

    let mut out = Output::create(out_dir, "timing.csv", &prov)?;
    key_values(&mut out, &[("wall_time", wall.to_string())])?;
    written.push(out.finish()?);
    Ok(written)
}

/// Posterior mean of the partial correlation matrix of group `k`.
pub fn mean_partial_correlations(trace: &ChainTrace<f64>, k: usize) -> Result<Matrix<f64>> {
    let q = trace.q;
    let mut acc = Matrix::zeros(q, q);
    for rec in &trace.records {
        let rho = partial_correlations(&trace.factors(rec, k).precision())?;
        for i in 0..q {
            for j in 0..q {
                acc[(i, j)] += rho[(i, j)];
            }
        }
    }
    let n = trace.records.len() as f64;
    Ok(acc.map(|v| v / n))
}

pub fn read_trace(path: &Path) -> Result<ChainTrace<f64>> {
    ChainTrace::read_csv(crate::io::open(path)?)
}

pub fn effects(settings: &EffectsSettings, seed: u64, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let prov = Provenance {
        seed,
        config_hash: config_hash("effects", settings),
    };
    let trace = read_trace(&settings.trace)?;
    let q = trace.q;
    let nodes = match &settings.nodes {
        Some(n) => to_zero_based(n, q)?,
        None => (0..q).filter(|&s| s != RESPONSE).collect(),
    };
    let mut rows: Vec<(usize, EffectEstimate<f64>)> = Vec::new();
    for k in 0..trace.groups() {
        for &s in &nodes {
            for &x in &settings.x_tilde {
                rows.push((k, bma_effects(&trace, k, s, x)?));
            }
        }
    }
    let mut out = Output::create(out_dir, "effects.csv", &prov)?;
    write_effects_csv(&mut out, &rows).map_err(csv_err)?;
    Ok(vec![out.finish()?])
}

pub fn evaluate_cmd(settings: &EvaluateSettings, seed: u64, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let prov = Provenance {
        seed,
        config_hash: config_hash("evaluate", settings),
    };
    match settings {
        EvaluateSettings::Pair { truth_dir, fit_dir, .. } => evaluate_pair(truth_dir, fit_dir, &prov, out_dir),
        EvaluateSettings::Grid(g) => evaluate_grid(g, seed, &prov, out_dir),
    }
}

fn evaluate_pair(truth_dir: &Path, fit_dir: &Path, prov: &Provenance, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let start = Instant::now();
    let truth = read_truth(truth_dir)?;
    let trace = read_trace(&fit_dir.join(TRACE_FILE))?;
    if trace.q != truth.q() || trace.groups() != truth.dags.len() {
        return Err(Error::Validation(format!(
            "truth has {} nodes in {} groups but the fit has {} nodes in {} groups",
            truth.q(),
            truth.dags.len(),
            trace.q,
            trace.groups()
        )));
    }
    let report = evaluate(&truth, &trace, trace.x_tilde)?;
    let wall = start.elapsed().as_secs_f64();
    let mut written = Vec::new();

    let mut out = Output::create(out_dir, "metrics.csv", prov)?;
    key_values(
        &mut out,
        &[
            ("auc", report.auc.to_string()),
            ("partial_err_mean", report.partial_err_mean.to_string()),
            ("partial_err_abs", report.partial_err_abs.to_string()),
            ("theta_mean", report.theta.mean.to_string()),
            ("theta_lower", report.theta.lower.to_string()),
            ("theta_upper", report.theta.upper.to_string()),
            ("theta_err", report.theta_err.to_string()),
            ("theta_covered", u8::from(report.theta.covered).to_string()),
        ],
    )?;
    written.push(out.finish()?);

    let mut out = Output::create(out_dir, "effect_errors.csv", prov)?;
    {
        let mut w = csv::Writer::from_writer(&mut out);
        w.write_record(["group", "node", "x_tilde", "error"]).map_err(csv_err)?;
        for (k, s, e) in &report.effect_err {
            w.write_record([(k + 1).to_string(), (s + 1).to_string(), trace.x_tilde.to_string(), e.to_string()])
                .map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::io("effect_errors.csv", e))?;
    }
    written.push(out.finish()?);

    let mut out = Output::create(out_dir, "roc.csv", prov)?;
    {
        let mut w = csv::Writer::from_writer(&mut out);
        w.write_record(["fpr", "tpr"]).map_err(csv_err)?;
        for (f, t) in &report.roc.points {
            w.write_record([f.to_string(), t.to_string()]).map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::io("roc.csv", e))?;
    }
    written.push(out.finish()?);

    let mut out = Output::create(out_dir, "timing.csv", prov)?;
    key_values(&mut out, &[("wall_time", wall.to_string())])?;
    written.push(out.finish()?);
    Ok(written)
}

fn evaluate_grid(g: &GridSettings, seed: u64, prov: &Provenance, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let cfg = GridConfig {
        qs: g.q.clone(),
        xis: g.xi.clone(),
        sizes: g.sizes.iter().map(|s| (s[0], s[1])).collect(),
        replications: g.replications,
        iterations: g.iterations,
        burn_in: g.burn_in,
        x_tilde: g.x_tilde,
        seed,
        threads: None,
        include_skipped: g.include_skipped,
    };
    let report = run_grid::<f64>(&cfg)?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    for c in report.cells.iter().filter(|c| c.is_partial()) {
        for (r, msg) in &c.failures {
            eprintln!(
                "warning: q={}, xi={}, n=({},{}) replication {r} failed: {msg}",
                c.cell.q, c.cell.xi, c.cell.n1, c.cell.n2
            );
        }
    }
    let mut written = Vec::new();
    let mut out = Output::create(out_dir, "grid_metrics.csv", prov)?;
    report.write_metrics_csv(&mut out)?;
    written.push(out.finish()?);
    let mut out = Output::create(out_dir, "grid_roc.csv", prov)?;
    report.write_roc_csv(&mut out)?;
    written.push(out.finish()?);
    let mut out = Output::create(out_dir, "auc_table.csv", prov)?;
    report.write_auc_table(&mut out)?;
    written.push(out.finish()?);
    let mut out = Output::create(out_dir, "grid_timing.csv", prov)?;
    report.write_timing_csv(&mut out)?;
    written.push(out.finish()?);
    Ok(written)
}

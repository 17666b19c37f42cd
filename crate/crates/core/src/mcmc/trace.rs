use std::io::{Read, Write};

use crate::cholesky::CholeskyFactors;
use crate::error::{Error, Result};
use crate::graph::{Dag, RESPONSE};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

/// Proposal and acceptance counts for one kind of Metropolis move.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct MoveStats {
    pub proposed: usize,
    pub accepted: usize,
}

impl MoveStats {
    pub fn rate(&self) -> f64 {
        if self.proposed == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }

    pub(crate) fn record(&mut self, accepted: bool) {
        self.proposed += 1;
        self.accepted += usize::from(accepted);
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroupRecord<T> {
    pub dag: Dag,
    /// Coefficients on the edges of `dag`, in `dag.edges()` order.
    pub l: Vec<T>,
    /// One value per trace target.
    pub effects: Vec<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceRecord<T> {
    pub iteration: usize,
    pub theta: T,
    pub d: Vec<T>,
    pub groups: Vec<GroupRecord<T>>,
}

/// Post-burn-in draws plus move statistics.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainTrace<T> {
    pub q: usize,
    pub targets: Vec<usize>,
    pub x_tilde: T,
    pub records: Vec<TraceRecord<T>>,
    pub dag_moves: Vec<MoveStats>,
    pub theta_moves: MoveStats,
}

impl<T: Scalar> ChainTrace<T> {
    pub fn groups(&self) -> usize {
        self.records.first().map_or(self.dag_moves.len(), |r| r.groups.len())
    }

    /// Factors of group `k` at one record.
    pub fn factors(&self, rec: &TraceRecord<T>, k: usize) -> CholeskyFactors<T> {
        let g = &rec.groups[k];
        let mut f = CholeskyFactors {
            l: Matrix::identity(self.q),
            d: rec.d.clone(),
        };
        for ((i, j), &v) in g.dag.edges().zip(&g.l) {
            f.l[(i, j)] = v;
        }
        f
    }

    /// Posterior inclusion frequency of every directed edge in group `k`.
    pub fn edge_probabilities(&self, k: usize) -> Result<Matrix<T>> {
        if self.records.is_empty() {
            return Err(Error::Validation("empty trace".into()));
        }
        let q = self.q;
        let mut counts = vec![0usize; q * q];
        for rec in &self.records {
            for (i, j) in rec.groups[k].dag.edges() {
                counts[i * q + j] += 1;
            }
        }
        let n = T::of_usize(self.records.len());
        Ok(Matrix::from_fn(q, q, |i, j| T::of_usize(counts[i * q + j]) / n))
    }

    pub fn thetas(&self) -> Vec<T> {
        self.records.iter().map(|r| r.theta).collect()
    }

    /// Per-iteration effect values of group `k` for the `t`-th target.
    pub fn effect_values(&self, k: usize, t: usize) -> Vec<T> {
        self.records.iter().map(|r| r.groups[k].effects[t]).collect()
    }

    /// Columnar trace: one row per kept iteration. Edge indicators and
    /// coefficients cover every ordered pair whose tail is a covariate.
    /// Labels are 1-based.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let q = self.q;
        let pairs = slot_pairs(q);
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["iteration".to_string(), "theta".to_string(), "x_tilde".to_string()];
        header.extend((1..=q).map(|j| format!("d{j}")));
        for k in 1..=self.groups() {
            header.extend(pairs.iter().map(|(i, j)| format!("g{k}_e{}_{}", i + 1, j + 1)));
            header.extend(pairs.iter().map(|(i, j)| format!("g{k}_l{}_{}", i + 1, j + 1)));
            header.extend(self.targets.iter().map(|s| format!("g{k}_do{}", s + 1)));
        }
        w.write_record(&header).map_err(csv_err)?;
        for rec in &self.records {
            let mut row = vec![rec.iteration.to_string(), rec.theta.to_string(), self.x_tilde.to_string()];
            row.extend(rec.d.iter().map(|v| v.to_string()));
            for (k, g) in rec.groups.iter().enumerate() {
                let f = self.factors(rec, k);
                row.extend(pairs.iter().map(|&(i, j)| u8::from(g.dag.has_edge(i, j)).to_string()));
                row.extend(pairs.iter().map(|&(i, j)| f.l[(i, j)].to_string()));
                row.extend(g.effects.iter().map(|v| v.to_string()));
            }
            w.write_record(&row).map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::Io {
            path: "trace".into(),
            source: e,
        })?;
        Ok(())
    }

    /// Reads a trace written by [`ChainTrace::write_csv`]; `#` lines are
    /// skipped. Move statistics are not part of the file and come back empty.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rd = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(reader);
        let header: Vec<String> = rd.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
        let bad = |m: String| Error::Validation(format!("trace: {m}"));
        if header.len() < 3 || header[0] != "iteration" || header[1] != "theta" || header[2] != "x_tilde" {
            return Err(bad("missing iteration/theta/x_tilde columns".into()));
        }
        let q = header[3..].iter().take_while(|h| h.starts_with('d')).count();
        if q < 2 {
            return Err(bad("fewer than two variance columns".into()));
        }
        let pairs = slot_pairs(q);
        let mut groups = 0;
        let mut targets: Vec<usize> = Vec::new();
        let mut col = 3 + q;
        while col < header.len() {
            let k = groups + 1;
            for block in ["e", "l"] {
                for (p, &(i, j)) in pairs.iter().enumerate() {
                    let want = format!("g{k}_{block}{}_{}", i + 1, j + 1);
                    if header.get(col + p) != Some(&want) {
                        return Err(bad(format!("expected column {want}")));
                    }
                }
                col += pairs.len();
            }
            let prefix = format!("g{k}_do");
            let mut these = Vec::new();
            while let Some(h) = header.get(col).filter(|h| h.starts_with(&prefix)) {
                let s: usize = h[prefix.len()..]
                    .parse()
                    .map_err(|_| bad(format!("bad effect column {h}")))?;
                if s < 2 || s > q {
                    return Err(bad(format!("effect column {h} is not a covariate")));
                }
                these.push(s - 1);
                col += 1;
            }
            if groups == 0 {
                targets = these;
            } else if these != targets {
                return Err(bad("groups list different effect targets".into()));
            }
            groups += 1;
        }
        if groups == 0 {
            return Err(bad("no group columns".into()));
        }
        let mut records = Vec::new();
        let mut x_tilde = T::one();
        for (line, row) in rd.records().enumerate() {
            let row = row.map_err(csv_err)?;
            if row.len() != header.len() {
                return Err(bad(format!("row {} has {} fields", line + 1, row.len())));
            }
            let num = |c: usize| -> Result<T> {
                row[c]
                    .trim()
                    .parse::<f64>()
                    .map(T::of)
                    .map_err(|_| bad(format!("row {}: `{}` is not a number", line + 1, &row[c])))
            };
            let iteration: usize = row[0]
                .trim()
                .parse()
                .map_err(|_| bad(format!("row {}: bad iteration", line + 1)))?;
            let theta = num(1)?;
            x_tilde = num(2)?;
            let d = (0..q).map(|j| num(3 + j)).collect::<Result<Vec<T>>>()?;
            let mut col = 3 + q;
            let mut grs = Vec::with_capacity(groups);
            for _ in 0..groups {
                let mut adj = vec![false; q * q];
                for (p, &(i, j)) in pairs.iter().enumerate() {
                    adj[i * q + j] = match row[col + p].trim() {
                        "1" => true,
                        "0" => false,
                        other => return Err(bad(format!("row {}: edge flag `{other}`", line + 1))),
                    };
                }
                col += pairs.len();
                let dag = Dag::from_adjacency(q, adj)?;
                let mut l = Vec::with_capacity(dag.edge_count());
                for (i, j) in dag.edges() {
                    let p = pairs.iter().position(|&e| e == (i, j)).expect("edges are slots");
                    l.push(num(col + p)?);
                }
                col += pairs.len();
                let effects = (0..targets.len()).map(|t| num(col + t)).collect::<Result<Vec<T>>>()?;
                col += targets.len();
                grs.push(GroupRecord { dag, l, effects });
            }
            records.push(TraceRecord {
                iteration,
                theta,
                d,
                groups: grs,
            });
        }
        Ok(Self {
            q,
            targets,
            x_tilde,
            records,
            dag_moves: vec![MoveStats::default(); groups],
            theta_moves: MoveStats::default(),
        })
    }
}

/// Ordered pairs (i, j), i ≠ j, whose tail is not the response.
fn slot_pairs(q: usize) -> Vec<(usize, usize)> {
    (0..q)
        .filter(|&i| i != RESPONSE)
        .flat_map(|i| (0..q).filter(move |&j| j != i).map(move |j| (i, j)))
        .collect()
}

fn csv_err(e: csv::Error) -> Error {
    Error::Validation(format!("trace csv: {e}"))
}

/// Thresholds a probability matrix into a graph. Returns an error if the
/// thresholded edge set is cyclic or bidirected.
pub fn threshold_dag<T: Scalar>(probs: &Matrix<T>, threshold: T) -> Result<Dag> {
    let q = probs.rows();
    let adj = (0..q * q)
        .map(|idx| {
            let (i, j) = (idx / q, idx % q);
            i != j && probs[(i, j)] > threshold
        })
        .collect();
    Dag::from_adjacency(q, adj)
}

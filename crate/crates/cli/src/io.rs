use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use dagprobit::simlab::Truth;
use dagprobit::{CholeskyFactors, Dag, Error, Matrix, Result};

/// Provenance written as the first line of every output file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Provenance {
    pub seed: u64,
    pub config_hash: String,
}

impl Provenance {
    pub fn line(&self) -> String {
        format!(
            "# seed={}, config_hash={}, version={}\n",
            self.seed,
            self.config_hash,
            env!("CARGO_PKG_VERSION")
        )
    }
}

/// An output file that already holds the provenance line.
pub struct Output {
    path: PathBuf,
    inner: BufWriter<File>,
}

impl Output {
    pub fn create(dir: &Path, name: &str, prov: &Provenance) -> Result<Self> {
        let path = dir.join(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut out = Self {
            path,
            inner: BufWriter::new(file),
        };
        out.write_all(prov.line().as_bytes()).map_err(|e| Error::io(&out.path, e))?;
        Ok(out)
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn finish(mut self) -> Result<PathBuf> {
        self.inner.flush().map_err(|e| Error::io(&self.path, e))?;
        Ok(self.path)
    }
}

impl Write for Output {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        self.inner.write(buf)
    }

    fn flush(&mut self) -> std::io::Result<()> {
        self.inner.flush()
    }
}

pub fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::io(path, e))
}

fn csv_reader<R: Read>(reader: R, headers: bool) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(headers)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(reader)
}

/// One group's data file: `y` then the covariates in node order.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupTable {
    pub columns: Vec<String>,
    pub y: Vec<bool>,
    pub x: Matrix<f64>,
}

pub fn read_group(path: &Path) -> Result<GroupTable> {
    let mut rd = csv_reader(open(path)?, true);
    let columns: Vec<String> = rd
        .headers()
        .map_err(|e| Error::parse(path, e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    if columns.first().map(String::as_str) != Some("y") {
        return Err(Error::Ingestion(format!(
            "{}: first column must be `y`, found {:?}",
            path.display(),
            columns.first()
        )));
    }
    let p = columns.len() - 1;
    let mut y = Vec::new();
    let mut values = Vec::new();
    for (line, rec) in rd.records().enumerate() {
        let rec = rec.map_err(|e| Error::parse(path, e.to_string()))?;
        let row = line + 1;
        y.push(match &rec[0] {
            "0" => false,
            "1" => true,
            other => {
                return Err(Error::Ingestion(format!(
                    "{}: row {row}: y = {other:?} is not 0 or 1",
                    path.display()
                )))
            }
        });
        for (c, field) in rec.iter().enumerate().skip(1) {
            let v: f64 = field.parse().map_err(|_| {
                Error::Ingestion(format!(
                    "{}: row {row}, column {}: {field:?} is not a number",
                    path.display(),
                    columns[c]
                ))
            })?;
            if !v.is_finite() {
                return Err(Error::Ingestion(format!(
                    "{}: row {row}, column {}: value is not finite",
                    path.display(),
                    columns[c]
                )));
            }
            values.push(v);
        }
    }
    let x = Matrix::from_row_major(y.len(), p, values);
    Ok(GroupTable { columns, y, x })
}

pub fn write_group<W: Write>(writer: W, y: &[bool], x: &Matrix<f64>) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["y".to_string()];
    header.extend((0..x.cols()).map(|j| format!("x{}", j + 2)));
    w.write_record(&header).map_err(csv_err)?;
    for (i, &yi) in y.iter().enumerate() {
        let mut row = vec![u8::from(yi).to_string()];
        row.extend(x.row(i).iter().map(f64::to_string));
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io("csv", e))?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    Error::Validation(format!("csv: {e}"))
}

/// Headerless numeric matrix.
pub fn write_matrix<W: Write>(writer: W, m: &Matrix<f64>) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    for i in 0..m.rows() {
        w.write_record(m.row(i).iter().map(f64::to_string)).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io("csv", e))?;
    Ok(())
}

pub fn read_matrix(path: &Path) -> Result<Matrix<f64>> {
    let mut rd = csv_reader(open(path)?, false);
    let mut rows = Vec::new();
    for rec in rd.records() {
        let rec = rec.map_err(|e| Error::parse(path, e.to_string()))?;
        let row = rec
            .iter()
            .map(|f| f.parse::<f64>().map_err(|_| Error::parse(path, format!("{f:?} is not a number"))))
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    if rows.is_empty() || rows.iter().any(|r| r.len() != rows[0].len()) {
        return Err(Error::parse(path, "matrix rows are empty or ragged"));
    }
    Ok(Matrix::from_rows(&rows))
}

pub fn read_dag(path: &Path) -> Result<Dag> {
    Dag::read_csv(open(path)?).map_err(|e| Error::parse(path, e.to_string()))
}

pub const TRUTH_FILES: [&str; 5] = ["dag1.csv", "dag2.csv", "l1.csv", "l2.csv", "params.csv"];

pub fn write_truth(dir: &Path, truth: &Truth<f64>, prov: &Provenance) -> Result<()> {
    for k in 0..2 {
        let mut out = Output::create(dir, TRUTH_FILES[k], prov)?;
        truth.dags[k].write_csv(&mut out).map_err(|e| Error::io(out.path(), e))?;
        out.finish()?;
        let mut out = Output::create(dir, TRUTH_FILES[2 + k], prov)?;
        write_matrix(&mut out, &truth.factors[k].l)?;
        out.finish()?;
    }
    let mut out = Output::create(dir, TRUTH_FILES[4], prov)?;
    {
        let mut w = csv::Writer::from_writer(&mut out);
        w.write_record(["name", "value"]).map_err(csv_err)?;
        w.write_record(["theta".to_string(), truth.theta.to_string()]).map_err(csv_err)?;
        for (j, d) in truth.factors[0].d.iter().enumerate() {
            w.write_record([format!("d{}", j + 1), d.to_string()]).map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::io("params.csv", e))?;
    }
    out.finish()?;
    Ok(())
}

pub fn read_truth(dir: &Path) -> Result<Truth<f64>> {
    let params_path = dir.join(TRUTH_FILES[4]);
    let mut rd = csv_reader(open(&params_path)?, true);
    let mut theta = None;
    let mut d = Vec::new();
    for rec in rd.records() {
        let rec = rec.map_err(|e| Error::parse(&params_path, e.to_string()))?;
        let v: f64 = rec[1]
            .parse()
            .map_err(|_| Error::parse(&params_path, format!("{:?} is not a number", &rec[1])))?;
        match &rec[0] {
            "theta" => theta = Some(v),
            name if name.strip_prefix('d') == Some(&(d.len() + 1).to_string()) => d.push(v),
            other => return Err(Error::parse(&params_path, format!("unexpected parameter {other:?}"))),
        }
    }
    let theta = theta.ok_or_else(|| Error::parse(&params_path, "missing theta"))?;
    let mut dags = Vec::new();
    let mut factors = Vec::new();
    for k in 0..2 {
        let dag = read_dag(&dir.join(TRUTH_FILES[k]))?;
        let l_path = dir.join(TRUTH_FILES[2 + k]);
        let l = read_matrix(&l_path)?;
        if dag.q() != d.len() || l.rows() != d.len() || l.cols() != d.len() {
            return Err(Error::Validation(format!(
                "truth bundle in {} mixes graph sizes {}, {}x{} and {} variances",
                dir.display(),
                dag.q(),
                l.rows(),
                l.cols(),
                d.len()
            )));
        }
        let f = CholeskyFactors { l, d: d.clone() };
        f.check_against(&dag).map_err(|e| Error::parse(&l_path, e.to_string()))?;
        dags.push(dag);
        factors.push(f);
    }
    Ok(Truth { dags, factors, theta })
}

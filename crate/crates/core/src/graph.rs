//! Directed acyclic graphs over `q` labelled nodes, the local edit operators
//! used by the structure sampler, and the Bernoulli edge prior.
//!
//! Nodes are indexed from 0 internally. Node 0 is the latent response and is
//! kept childless: every edge into it is allowed, no edge out of it is.
//! Random graphs are generated in parent order, i.e. edges run from a higher
//! index to a lower one, which makes the coefficient matrix lower triangular.

use std::fmt;
use std::io::{Read, Write};

use rand::Rng;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Index of the latent response node.
pub const RESPONSE: usize = 0;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Dag {
    q: usize,
    adj: Vec<bool>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum OperatorKind {
    Insert,
    Delete,
    Reverse,
}

/// A single-edge edit `kind(from → to)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Operator {
    pub kind: OperatorKind,
    pub from: usize,
    pub to: usize,
}

impl Operator {
    pub fn insert(from: usize, to: usize) -> Self {
        Self {
            kind: OperatorKind::Insert,
            from,
            to,
        }
    }

    pub fn delete(from: usize, to: usize) -> Self {
        Self {
            kind: OperatorKind::Delete,
            from,
            to,
        }
    }

    pub fn reverse(from: usize, to: usize) -> Self {
        Self {
            kind: OperatorKind::Reverse,
            from,
            to,
        }
    }

    /// Nodes whose parent sets change when the operator is applied.
    pub fn affected_nodes(&self) -> Vec<usize> {
        match self.kind {
            OperatorKind::Insert | OperatorKind::Delete => vec![self.to],
            OperatorKind::Reverse => vec![self.from, self.to],
        }
    }
}

impl fmt::Display for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}({}->{})", self.kind, self.from + 1, self.to + 1)
    }
}

/// True iff the square boolean matrix `adj` (row-major, `q × q`) admits a
/// topological order.
pub fn is_acyclic(adj: &[bool], q: usize) -> bool {
    assert_eq!(adj.len(), q * q, "adjacency buffer must be q*q");
    // Kahn's algorithm.
    let mut indegree = vec![0usize; q];
    for i in 0..q {
        for j in 0..q {
            if adj[i * q + j] {
                indegree[j] += 1;
            }
        }
    }
    let mut stack: Vec<usize> = (0..q).filter(|&v| indegree[v] == 0).collect();
    let mut seen = 0;
    while let Some(v) = stack.pop() {
        seen += 1;
        for w in 0..q {
            if adj[v * q + w] {
                indegree[w] -= 1;
                if indegree[w] == 0 {
                    stack.push(w);
                }
            }
        }
    }
    seen == q
}

impl Dag {
    /// Edgeless graph on `q` nodes.
    pub fn empty(q: usize) -> Self {
        Self {
            q,
            adj: vec![false; q * q],
        }
    }

    /// Builds a graph from a row-major adjacency buffer, checking every
    /// structural invariant.
    pub fn from_adjacency(q: usize, adj: Vec<bool>) -> Result<Self> {
        if q < 2 {
            return Err(Error::Domain(format!("a graph needs at least 2 nodes, got {q}")));
        }
        if adj.len() != q * q {
            return Err(Error::Domain(format!(
                "adjacency has {} entries, expected {}",
                adj.len(),
                q * q
            )));
        }
        for i in 0..q {
            if adj[i * q + i] {
                return Err(Error::Domain(format!("self-loop on node {}", i + 1)));
            }
            for j in 0..i {
                if adj[i * q + j] && adj[j * q + i] {
                    return Err(Error::Domain(format!(
                        "edges in both directions between nodes {} and {}",
                        j + 1,
                        i + 1
                    )));
                }
            }
        }
        if let Some(j) = (0..q).find(|&j| adj[RESPONSE * q + j]) {
            return Err(Error::Domain(format!(
                "the response node may not have children (found 1->{})",
                j + 1
            )));
        }
        if !is_acyclic(&adj, q) {
            return Err(Error::Cycle);
        }
        Ok(Self { q, adj })
    }

    pub fn from_edges(q: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut adj = vec![false; q * q];
        for &(i, j) in edges {
            if i >= q {
                return Err(Error::Index { index: i, q });
            }
            if j >= q {
                return Err(Error::Index { index: j, q });
            }
            adj[i * q + j] = true;
        }
        Self::from_adjacency(q, adj)
    }

    pub fn q(&self) -> usize {
        self.q
    }

    #[inline]
    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.adj[from * self.q + to]
    }

    pub fn adjacency(&self) -> &[bool] {
        &self.adj
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().filter(|&&e| e).count()
    }

    /// Edges in row-major order of the adjacency matrix.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let q = self.q;
        self.adj
            .iter()
            .enumerate()
            .filter(|(_, &e)| e)
            .map(move |(k, _)| (k / q, k % q))
    }

    /// Ascending parent list of `j`.
    pub fn parents(&self, j: usize) -> Result<Vec<usize>> {
        if j >= self.q {
            return Err(Error::Index { index: j, q: self.q });
        }
        Ok(self.parents_of(j))
    }

    pub(crate) fn parents_of(&self, j: usize) -> Vec<usize> {
        (0..self.q).filter(|&i| self.has_edge(i, j)).collect()
    }

    pub fn children(&self, i: usize) -> Result<Vec<usize>> {
        if i >= self.q {
            return Err(Error::Index { index: i, q: self.q });
        }
        Ok((0..self.q).filter(|&j| self.has_edge(i, j)).collect())
    }

    /// `{j} ∪ pa(j)`, with `j` first.
    pub fn family(&self, j: usize) -> Result<Vec<usize>> {
        let mut fa = vec![j];
        fa.extend(self.parents(j)?);
        Ok(fa)
    }

    /// Whether a directed path `start ⇝ target` exists, optionally ignoring one edge.
    fn reaches(&self, start: usize, target: usize, skip: Option<(usize, usize)>) -> bool {
        let mut visited = vec![false; self.q];
        let mut stack = vec![start];
        visited[start] = true;
        while let Some(v) = stack.pop() {
            for w in 0..self.q {
                if !self.has_edge(v, w) || visited[w] || skip == Some((v, w)) {
                    continue;
                }
                if w == target {
                    return true;
                }
                visited[w] = true;
                stack.push(w);
            }
        }
        false
    }

    fn insert_is_valid(&self, from: usize, to: usize) -> bool {
        from != to
            && from != RESPONSE
            && !self.has_edge(from, to)
            && !self.has_edge(to, from)
            && !self.reaches(to, from, None)
    }

    fn reverse_is_valid(&self, from: usize, to: usize) -> bool {
        self.has_edge(from, to) && to != RESPONSE && !self.reaches(from, to, Some((from, to)))
    }

    pub fn is_valid_operator(&self, op: &Operator) -> bool {
        if op.from >= self.q || op.to >= self.q || op.from == op.to {
            return false;
        }
        match op.kind {
            OperatorKind::Insert => self.insert_is_valid(op.from, op.to),
            OperatorKind::Delete => self.has_edge(op.from, op.to),
            OperatorKind::Reverse => self.reverse_is_valid(op.from, op.to),
        }
    }

    /// All operators whose result is again a valid graph: a Delete and (where
    /// acyclic) a Reverse per edge, then every acyclic Insert orientation over
    /// vacant unordered pairs.
    pub fn valid_operators(&self) -> Vec<Operator> {
        let mut ops = Vec::new();
        for (i, j) in self.edges() {
            ops.push(Operator::delete(i, j));
            if self.reverse_is_valid(i, j) {
                ops.push(Operator::reverse(i, j));
            }
        }
        for i in 0..self.q {
            for j in (i + 1)..self.q {
                if self.has_edge(i, j) || self.has_edge(j, i) {
                    continue;
                }
                if self.insert_is_valid(i, j) {
                    ops.push(Operator::insert(i, j));
                }
                if self.insert_is_valid(j, i) {
                    ops.push(Operator::insert(j, i));
                }
            }
        }
        ops
    }

    /// Number of valid operators, without materialising them.
    pub fn valid_operator_count(&self) -> usize {
        let mut count = 0;
        for (i, j) in self.edges() {
            count += 1;
            if self.reverse_is_valid(i, j) {
                count += 1;
            }
        }
        for i in 0..self.q {
            for j in (i + 1)..self.q {
                if self.has_edge(i, j) || self.has_edge(j, i) {
                    continue;
                }
                count += usize::from(self.insert_is_valid(i, j));
                count += usize::from(self.insert_is_valid(j, i));
            }
        }
        count
    }

    /// Applies `op`, returning a fresh graph.
    pub fn apply(&self, op: &Operator) -> Result<Dag> {
        if op.from >= self.q {
            return Err(Error::Index { index: op.from, q: self.q });
        }
        if op.to >= self.q {
            return Err(Error::Index { index: op.to, q: self.q });
        }
        let q = self.q;
        let mut adj = self.adj.clone();
        match op.kind {
            OperatorKind::Insert => {
                if op.from == op.to || self.has_edge(op.from, op.to) || self.has_edge(op.to, op.from) {
                    return Err(Error::Operator(op.to_string()));
                }
                adj[op.from * q + op.to] = true;
            }
            OperatorKind::Delete | OperatorKind::Reverse => {
                if !self.has_edge(op.from, op.to) {
                    return Err(Error::Operator(op.to_string()));
                }
                adj[op.from * q + op.to] = false;
                if op.kind == OperatorKind::Reverse {
                    adj[op.to * q + op.from] = true;
                }
            }
        }
        if adj[RESPONSE * q..(RESPONSE + 1) * q].iter().any(|&e| e) {
            return Err(Error::Operator(format!("{op} gives the response node a child")));
        }
        if !is_acyclic(&adj, q) {
            return Err(Error::Cycle);
        }
        Ok(Dag { q, adj })
    }

    /// Writes the adjacency as headerless 0/1 CSV, row `i` holding the
    /// out-edges of node `i`.
    pub fn write_csv<W: Write>(&self, writer: W) -> std::io::Result<()> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
        for i in 0..self.q {
            w.write_record((0..self.q).map(|j| if self.has_edge(i, j) { "1" } else { "0" }))?;
        }
        w.flush()
    }

    /// Parses the format written by [`Dag::write_csv`]; lines starting with
    /// `#` are skipped.
    pub fn read_csv<R: Read>(reader: R) -> Result<Dag> {
        let mut r = csv::ReaderBuilder::new()
            .has_headers(false)
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut rows: Vec<Vec<bool>> = Vec::new();
        for rec in r.records() {
            let rec = rec.map_err(|e| Error::Ingestion(e.to_string()))?;
            let row = rec
                .iter()
                .map(|f| match f {
                    "0" => Ok(false),
                    "1" => Ok(true),
                    other => Err(Error::Ingestion(format!("adjacency entry {other:?} is not 0/1"))),
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        let q = rows.len();
        if rows.iter().any(|r| r.len() != q) {
            return Err(Error::Ingestion("adjacency matrix is not square".into()));
        }
        Dag::from_adjacency(q, rows.concat())
    }
}

impl fmt::Debug for Dag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let edges: Vec<String> = self.edges().map(|(i, j)| format!("{}->{}", i + 1, j + 1)).collect();
        write!(f, "Dag(q={}, {{{}}})", self.q, edges.join(", "))
    }
}

fn check_xi(xi: f64) -> Result<()> {
    if !(xi > 0.0 && xi < 1.0) {
        return Err(Error::Domain(format!("edge probability must lie in (0,1), got {xi}")));
    }
    Ok(())
}

/// Parent-ordered random graph: each slot `i → j` with `i > j` is included
/// independently with probability `xi`.
pub fn random_dag<R: Rng + ?Sized>(q: usize, xi: f64, rng: &mut R) -> Result<Dag> {
    check_xi(xi)?;
    if q < 2 {
        return Err(Error::Domain(format!("a graph needs at least 2 nodes, got {q}")));
    }
    let mut adj = vec![false; q * q];
    for i in 1..q {
        for j in 0..i {
            adj[i * q + j] = rng.random::<f64>() < xi;
        }
    }
    Ok(Dag { q, adj })
}

/// ln f(A) = |A| ln ξ + (q(q−1)/2 − |A|) ln(1 − ξ).
pub fn log_prior<T: Scalar>(dag: &Dag, xi: T) -> T {
    let q = dag.q();
    let edges = dag.edge_count();
    let slots = q * (q - 1) / 2;
    T::of_usize(edges) * xi.ln() + T::of_usize(slots - edges) * (T::one() - xi).ln()
}

/// f(D′)/f(D) for a single operator.
pub fn prior_ratio<T: Scalar>(op: &Operator, xi: T) -> T {
    match op.kind {
        OperatorKind::Insert => xi / (T::one() - xi),
        OperatorKind::Delete => (T::one() - xi) / xi,
        OperatorKind::Reverse => T::one(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    // Tests use 1-based labels to read like the model's notation.
    fn dag(q: usize, edges: &[(usize, usize)]) -> Dag {
        let e: Vec<_> = edges.iter().map(|&(i, j)| (i - 1, j - 1)).collect();
        Dag::from_edges(q, &e).unwrap()
    }

    fn adj_from(q: usize, edges: &[(usize, usize)]) -> Vec<bool> {
        let mut a = vec![false; q * q];
        for &(i, j) in edges {
            a[(i - 1) * q + (j - 1)] = true;
        }
        a
    }

    #[test]
    fn acyclicity() {
        assert!(is_acyclic(&[false; 9], 3));
        assert!(!is_acyclic(&adj_from(3, &[(1, 2), (2, 3), (3, 1)]), 3));
        assert!(is_acyclic(&adj_from(3, &[(3, 2), (2, 1)]), 3));
    }

    #[test]
    fn parent_sets() {
        let chain = dag(3, &[(3, 2), (2, 1)]);
        assert_eq!(chain.parents(0).unwrap(), vec![1]);
        assert!(chain.parents(2).unwrap().is_empty());
        let v = dag(3, &[(2, 1), (3, 1)]);
        assert_eq!(v.parents(0).unwrap(), vec![1, 2]);
        assert!(matches!(v.parents(3), Err(Error::Index { index: 3, q: 3 })));
        assert_eq!(v.family(0).unwrap(), vec![0, 1, 2]);
    }

    #[test]
    fn invariants_rejected() {
        assert!(Dag::from_edges(3, &[(0, 1)]).is_err());
        assert!(Dag::from_edges(3, &[(1, 1)]).is_err());
        assert!(Dag::from_edges(3, &[(1, 2), (2, 1)]).is_err());
        assert!(matches!(Dag::from_edges(4, &[(1, 2), (2, 3), (3, 1)]), Err(Error::Cycle)));
    }

    /// Brute force over all ordered pairs and kinds, filtered by applying the
    /// edit and checking the invariants from scratch.
    fn brute_force_operators(d: &Dag) -> Vec<Operator> {
        let q = d.q();
        let mut out = Vec::new();
        for i in 0..q {
            for j in 0..q {
                if i == j {
                    continue;
                }
                for op in [Operator::insert(i, j), Operator::delete(i, j), Operator::reverse(i, j)] {
                    let mut adj = d.adjacency().to_vec();
                    let ok = match op.kind {
                        OperatorKind::Insert => {
                            if adj[i * q + j] || adj[j * q + i] {
                                false
                            } else {
                                adj[i * q + j] = true;
                                true
                            }
                        }
                        OperatorKind::Delete => {
                            let present = adj[i * q + j];
                            adj[i * q + j] = false;
                            present
                        }
                        OperatorKind::Reverse => {
                            let present = adj[i * q + j];
                            adj[i * q + j] = false;
                            adj[j * q + i] = true;
                            present
                        }
                    };
                    if ok && Dag::from_adjacency(q, adj).is_ok() {
                        out.push(op);
                    }
                }
            }
        }
        out
    }

    fn sorted(mut v: Vec<Operator>) -> Vec<(usize, usize, u8)> {
        let mut k: Vec<_> = v
            .drain(..)
            .map(|o| (o.from, o.to, o.kind as u8))
            .collect();
        k.sort();
        k
    }

    #[test]
    fn operator_enumeration_examples() {
        let e = Dag::empty(3);
        let ops = e.valid_operators();
        assert_eq!(ops.len(), 4);
        assert_eq!(sorted(ops), sorted(brute_force_operators(&e)));

        let single = dag(2, &[(2, 1)]);
        assert_eq!(single.valid_operators(), vec![Operator::delete(1, 0)]);

        let complete = dag(3, &[(2, 1), (3, 1), (3, 2)]);
        assert!(complete
            .valid_operators()
            .iter()
            .all(|o| o.kind != OperatorKind::Insert));
    }

    #[test]
    fn apply_examples() {
        let d = dag(2, &[(2, 1)]);
        assert_eq!(d.apply(&Operator::delete(1, 0)).unwrap(), Dag::empty(2));
        let r = dag(3, &[(3, 2)]).apply(&Operator::reverse(2, 1)).unwrap();
        assert_eq!(r, dag(3, &[(2, 3)]));
        let i = Dag::empty(3).apply(&Operator::insert(2, 1)).unwrap();
        assert_eq!(i, dag(3, &[(3, 2)]));
        assert!(matches!(
            Dag::empty(3).apply(&Operator::delete(2, 1)),
            Err(Error::Operator(_))
        ));
        assert!(matches!(
            dag(3, &[(3, 2), (2, 1)]).apply(&Operator::insert(0, 2)),
            Err(Error::Operator(_))
        ));
        assert!(matches!(
            dag(4, &[(4, 3), (3, 2)]).apply(&Operator::insert(1, 3)),
            Err(Error::Cycle)
        ));
    }

    #[test]
    fn prior_examples() {
        let ln = f64::ln;
        assert!((log_prior::<f64>(&Dag::empty(3), 0.1) - 3.0 * ln(0.9)).abs() < 1e-14);
        assert!((log_prior::<f64>(&dag(3, &[(2, 1)]), 0.1) - ln(0.1 * 0.81)).abs() < 1e-14);
        let complete = dag(3, &[(2, 1), (3, 1), (3, 2)]);
        assert!((log_prior::<f64>(&complete, 0.5) - 3.0 * ln(0.5)).abs() < 1e-14);

        assert!((prior_ratio::<f64>(&Operator::insert(1, 0), 0.5) - 1.0).abs() < 1e-15);
        assert!((prior_ratio::<f64>(&Operator::delete(1, 0), 0.1) - 9.0).abs() < 1e-12);
        assert_eq!(prior_ratio::<f64>(&Operator::reverse(2, 1), 0.37), 1.0);
    }

    #[test]
    fn prior_sums_to_one_over_parent_ordered_graphs() {
        for q in 2..=4 {
            let slots: Vec<(usize, usize)> =
                (1..q).flat_map(|i| (0..i).map(move |j| (i, j))).collect();
            let total: f64 = (0u32..(1 << slots.len()))
                .map(|mask| {
                    let edges: Vec<_> = slots
                        .iter()
                        .enumerate()
                        .filter(|(b, _)| mask >> b & 1 == 1)
                        .map(|(_, &e)| e)
                        .collect();
                    log_prior::<f64>(&Dag::from_edges(q, &edges).unwrap(), 0.3).exp()
                })
                .sum();
            assert!((total - 1.0).abs() < 1e-12, "q = {q}: {total}");
        }
    }

    #[test]
    fn random_dag_mean_edge_count() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let draws = 20_000;
        let total: usize = (0..draws)
            .map(|_| random_dag(10, 0.1, &mut rng).unwrap().edge_count())
            .sum();
        let mean = total as f64 / draws as f64;
        let se = (45.0f64 * 0.1 * 0.9 / draws as f64).sqrt();
        assert!((mean - 4.5).abs() < 3.0 * se, "mean {mean}");
    }

    #[test]
    fn random_dag_edge_count_is_binomial() {
        use statrs::distribution::{Binomial, ChiSquared, ContinuousCDF, Discrete};
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (q, xi, draws) = (6usize, 0.3, 20_000usize);
        let slots = 15u64;
        let mut counts = vec![0usize; slots as usize + 1];
        for _ in 0..draws {
            counts[random_dag(q, xi, &mut rng).unwrap().edge_count()] += 1;
        }
        let binom = Binomial::new(xi, slots).unwrap();
        // Pool cells with expected count below 5 into the tails.
        let mut observed = Vec::new();
        let mut expected = Vec::new();
        let (mut o_acc, mut e_acc) = (0.0, 0.0);
        for k in 0..=slots {
            o_acc += counts[k as usize] as f64;
            e_acc += binom.pmf(k) * draws as f64;
            if e_acc >= 5.0 {
                observed.push(o_acc);
                expected.push(e_acc);
                o_acc = 0.0;
                e_acc = 0.0;
            }
        }
        *observed.last_mut().unwrap() += o_acc;
        *expected.last_mut().unwrap() += e_acc;
        let stat: f64 = observed
            .iter()
            .zip(&expected)
            .map(|(o, e)| (o - e) * (o - e) / e)
            .sum();
        let df = (observed.len() - 1) as f64;
        let p = 1.0 - ChiSquared::new(df).unwrap().cdf(stat);
        assert!(p > 0.001, "chi2 = {stat}, df = {df}, p = {p}");
    }

    #[test]
    fn random_dag_domain_and_determinism() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(random_dag(5, 0.0, &mut rng).is_err());
        assert!(random_dag(5, 1.0, &mut rng).is_err());
        let a = random_dag(8, 0.3, &mut ChaCha8Rng::seed_from_u64(42)).unwrap();
        let b = random_dag(8, 0.3, &mut ChaCha8Rng::seed_from_u64(42)).unwrap();
        assert_eq!(a, b);
        let tiny = random_dag(8, 1e-12, &mut rng).unwrap();
        assert_eq!(tiny.edge_count(), 0);
    }

    #[test]
    fn csv_round_trip() {
        let d = dag(4, &[(2, 1), (4, 2), (3, 4)]);
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap().lines().next().unwrap(), "0,0,0,0");
        let mut with_comment = b"# seed=1\n".to_vec();
        with_comment.extend(buf);
        assert_eq!(Dag::read_csv(&with_comment[..]).unwrap(), d);
        assert!(Dag::read_csv(&b"0,1\n0,0\n"[..]).is_err());
    }

    fn arb_dag() -> impl Strategy<Value = Dag> {
        (2usize..7, any::<u64>(), 0.05f64..0.9).prop_map(|(q, seed, xi)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut d = random_dag(q, xi, &mut rng).unwrap();
            // Scramble orientations with a few random valid moves.
            for _ in 0..10 {
                let ops = d.valid_operators();
                if ops.is_empty() {
                    break;
                }
                let op = ops[rng.random_range(0..ops.len())];
                d = d.apply(&op).unwrap();
            }
            d
        })
    }

    proptest! {
        #[test]
        fn every_valid_operator_preserves_invariants(d in arb_dag()) {
            let ops = d.valid_operators();
            prop_assert_eq!(ops.len(), d.valid_operator_count());
            prop_assert_eq!(sorted(ops.clone()), sorted(brute_force_operators(&d)));
            for op in ops {
                let next = d.apply(&op).unwrap();
                prop_assert!(Dag::from_adjacency(next.q(), next.adjacency().to_vec()).is_ok());
            }
        }

        #[test]
        fn insert_then_delete_is_identity(d in arb_dag()) {
            for op in d.valid_operators().into_iter().filter(|o| o.kind == OperatorKind::Insert) {
                let back = d.apply(&op).unwrap().apply(&Operator::delete(op.from, op.to)).unwrap();
                prop_assert_eq!(&back, &d);
            }
        }
    }
}

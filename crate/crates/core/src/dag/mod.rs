//! DAG structure learning over composed household tables.
//!
//! Six construction strategies share the same machinery: score-based hill
//! climbing (AIC), edge constraints (fixed / forbidden), least-squares and
//! random-forest edge discovery, and union-with-cycle-repair merging. The
//! winner is picked by mean cross-validated score.

pub mod discover;
pub mod forest;
pub mod hill_climb;
pub mod score;

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bn::{self, BnError};
use crate::compose::ComposedTable;
use crate::tabular::Tabular;

pub use discover::DiscoverError;
pub use forest::ForestParams;
pub use score::{aic_score, ScoreError, PARENT_CAP};

#[derive(Debug, Error)]
pub enum DagError {
    #[error("node index out of range")]
    NodeBounds,
    #[error("self-loop on `{0}` is not allowed")]
    SelfLoop(String),
    #[error("edge set contains a cycle: {}", .cycle.join(" -> "))]
    Cycle { cycle: Vec<String> },
    #[error("cycle consists entirely of protected edges: {}", .cycle.join(" -> "))]
    ProtectedCycle { cycle: Vec<String> },
    #[error("invalid edge constraints: {0}")]
    InvalidConstraint(String),
    #[error("dag nodes do not match data columns")]
    LabelMismatch,
    #[error("{0}")]
    InvalidArg(String),
    #[error(transparent)]
    Score(#[from] ScoreError),
    #[error(transparent)]
    Discover(#[from] DiscoverError),
    #[error(transparent)]
    Fit(#[from] BnError),
}

/// Materialized categorical data: column labels, level counts, and rows of
/// level indices. The substrate for scoring and edge discovery.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub labels: Vec<String>,
    pub cards: Vec<usize>,
    pub rows: Vec<Vec<u32>>,
}

impl Dataset {
    pub fn new(
        labels: Vec<String>,
        cards: Vec<usize>,
        rows: Vec<Vec<u32>>,
    ) -> Result<Self, DagError> {
        if labels.len() != cards.len() {
            return Err(DagError::InvalidArg(
                "labels and cardinalities differ in length".into(),
            ));
        }
        if cards.iter().any(|&c| c == 0) {
            return Err(DagError::InvalidArg("zero-cardinality column".into()));
        }
        for row in &rows {
            if row.len() != labels.len() {
                return Err(DagError::InvalidArg("row arity mismatch".into()));
            }
            for (i, &v) in row.iter().enumerate() {
                if v as usize >= cards[i] {
                    return Err(DagError::InvalidArg(format!(
                        "value {v} out of range for column `{}`",
                        labels[i]
                    )));
                }
            }
        }
        Ok(Dataset { labels, cards, rows })
    }

    pub fn from_tabular<T: Tabular>(t: &T) -> Self {
        Dataset {
            labels: t.column_labels(),
            cards: t.column_cardinalities(),
            rows: t.rows().to_vec(),
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// A directed acyclic graph over named nodes. Acyclicity is enforced on
/// every mutation, so a constructed `Dag` is always sound.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dag {
    labels: Vec<String>,
    edges: BTreeSet<(usize, usize)>,
}

impl Dag {
    pub fn new(labels: Vec<String>) -> Result<Self, DagError> {
        if labels.is_empty() {
            return Err(DagError::InvalidArg("dag needs at least one node".into()));
        }
        let unique: BTreeSet<&String> = labels.iter().collect();
        if unique.len() != labels.len() {
            return Err(DagError::InvalidArg("duplicate node label".into()));
        }
        Ok(Dag {
            labels,
            edges: BTreeSet::new(),
        })
    }

    pub fn from_edges(
        labels: Vec<String>,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self, DagError> {
        let mut dag = Dag::new(labels)?;
        for (u, v) in edges {
            dag.add_edge(u, v)?;
        }
        Ok(dag)
    }

    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn node_index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.edges.contains(&(u, v))
    }

    /// Insert an edge; rejects self-loops, out-of-range nodes, and edges
    /// that would close a directed cycle. Inserting an existing edge is a
    /// no-op.
    pub fn add_edge(&mut self, u: usize, v: usize) -> Result<(), DagError> {
        let n = self.labels.len();
        if u >= n || v >= n {
            return Err(DagError::NodeBounds);
        }
        if u == v {
            return Err(DagError::SelfLoop(self.labels[u].clone()));
        }
        if self.edges.contains(&(u, v)) {
            return Ok(());
        }
        if self.reaches(v, u) {
            let mut cycle = self.path(v, u).expect("reachability implies a path");
            cycle.push(u); // `path` stops short of its endpoint
            cycle.push(v); // close the loop through the rejected edge
            return Err(DagError::Cycle {
                cycle: cycle.into_iter().map(|i| self.labels[i].clone()).collect(),
            });
        }
        self.edges.insert((u, v));
        Ok(())
    }

    pub fn remove_edge(&mut self, u: usize, v: usize) -> bool {
        self.edges.remove(&(u, v))
    }

    pub fn parents(&self, v: usize) -> Vec<usize> {
        self.edges
            .iter()
            .filter(|&&(_, b)| b == v)
            .map(|&(a, _)| a)
            .collect()
    }

    pub fn children(&self, u: usize) -> Vec<usize> {
        self.edges
            .range((u, 0)..=(u, usize::MAX))
            .map(|&(_, b)| b)
            .collect()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn edge_set(&self) -> &BTreeSet<(usize, usize)> {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// True when a directed path from `from` to `to` exists (including the
    /// trivial path when they are equal).
    pub fn reaches(&self, from: usize, to: usize) -> bool {
        self.path(from, to).is_some() || from == to
    }

    fn path(&self, from: usize, to: usize) -> Option<Vec<usize>> {
        // BFS with predecessor tracking; returns from..=to exclusive of `to`.
        let n = self.labels.len();
        let mut pred = vec![usize::MAX; n];
        let mut queue = std::collections::VecDeque::from([from]);
        let mut seen = vec![false; n];
        seen[from] = true;
        while let Some(x) = queue.pop_front() {
            for y in self.children(x) {
                if !seen[y] {
                    seen[y] = true;
                    pred[y] = x;
                    if y == to {
                        let mut rev = vec![to];
                        let mut cur = to;
                        while cur != from {
                            cur = pred[cur];
                            rev.push(cur);
                        }
                        rev.reverse();
                        rev.pop();
                        return Some(rev);
                    }
                    queue.push_back(y);
                }
            }
        }
        None
    }

    /// Kahn's algorithm with an index-ordered frontier: stable, and the
    /// identity permutation on an edgeless graph.
    pub fn topological_order(&self) -> Vec<usize> {
        let n = self.labels.len();
        let mut indegree = vec![0usize; n];
        for &(_, v) in &self.edges {
            indegree[v] += 1;
        }
        let mut ready: BTreeSet<usize> = (0..n).filter(|&v| indegree[v] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(&v) = ready.iter().next() {
            ready.remove(&v);
            order.push(v);
            for c in self.children(v) {
                indegree[c] -= 1;
                if indegree[c] == 0 {
                    ready.insert(c);
                }
            }
        }
        debug_assert_eq!(order.len(), n, "dag invariant violated");
        order
    }
}

/// Hard constraints on structure search: `fixed` edges are always present
/// and never removed or reversed; `forbidden` edges are never added.
#[derive(Debug, Clone, Default)]
pub struct EdgeConstraints {
    fixed: BTreeSet<(usize, usize)>,
    forbidden: BTreeSet<(usize, usize)>,
}

impl EdgeConstraints {
    pub fn new(
        node_count: usize,
        fixed: BTreeSet<(usize, usize)>,
        forbidden: BTreeSet<(usize, usize)>,
    ) -> Result<Self, DagError> {
        for &(u, v) in fixed.iter().chain(&forbidden) {
            if u >= node_count || v >= node_count {
                return Err(DagError::NodeBounds);
            }
        }
        if let Some(&(u, v)) = fixed.intersection(&forbidden).next() {
            return Err(DagError::InvalidConstraint(format!(
                "edge ({u}, {v}) is both fixed and forbidden"
            )));
        }
        // the fixed set must itself be realizable, i.e. acyclic
        let labels = (0..node_count).map(|i| format!("n{i}")).collect();
        if let Err(DagError::Cycle { .. } | DagError::SelfLoop(_)) =
            Dag::from_edges(labels, fixed.iter().copied())
        {
            return Err(DagError::InvalidConstraint(
                "fixed edge set is cyclic or self-looping".into(),
            ));
        }
        Ok(EdgeConstraints { fixed, forbidden })
    }

    pub fn none() -> Self {
        EdgeConstraints::default()
    }

    pub fn fixed(&self) -> &BTreeSet<(usize, usize)> {
        &self.fixed
    }

    pub fn forbidden(&self) -> &BTreeSet<(usize, usize)> {
        &self.forbidden
    }

    pub fn may_add(&self, u: usize, v: usize) -> bool {
        !self.forbidden.contains(&(u, v))
    }

    pub fn may_remove(&self, u: usize, v: usize) -> bool {
        !self.fixed.contains(&(u, v))
    }

    pub fn may_reverse(&self, u: usize, v: usize) -> bool {
        self.may_remove(u, v) && self.may_add(v, u)
    }
}

/// The six construction strategies, in tie-break precedence order.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub enum DagMethod {
    #[serde(rename = "FEB")]
    Feb,
    #[serde(rename = "SL")]
    Sl,
    #[serde(rename = "HASL")]
    Hasl,
    #[serde(rename = "FEB+SL")]
    FebSl,
    #[serde(rename = "OLSAFE")]
    Olsafe,
    #[serde(rename = "RLAFE")]
    Rlafe,
}

impl DagMethod {
    pub const ALL: [DagMethod; 6] = [
        DagMethod::Feb,
        DagMethod::Sl,
        DagMethod::Hasl,
        DagMethod::FebSl,
        DagMethod::Olsafe,
        DagMethod::Rlafe,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            DagMethod::Feb => "FEB",
            DagMethod::Sl => "SL",
            DagMethod::Hasl => "HASL",
            DagMethod::FebSl => "FEB+SL",
            DagMethod::Olsafe => "OLSAFE",
            DagMethod::Rlafe => "RLAFE",
        }
    }

    /// Lowercase, filesystem-safe name used in artifact file names.
    pub fn file_stem(&self) -> &'static str {
        match self {
            DagMethod::Feb => "feb",
            DagMethod::Sl => "sl",
            DagMethod::Hasl => "hasl",
            DagMethod::FebSl => "feb_sl",
            DagMethod::Olsafe => "olsafe",
            DagMethod::Rlafe => "rlafe",
        }
    }
}

impl std::fmt::Display for DagMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for DagMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.to_ascii_uppercase().replace('_', "+");
        match norm.as_str() {
            "FEB" => Ok(DagMethod::Feb),
            "SL" => Ok(DagMethod::Sl),
            "HASL" => Ok(DagMethod::Hasl),
            "FEB+SL" => Ok(DagMethod::FebSl),
            "OLSAFE" => Ok(DagMethod::Olsafe),
            "RLAFE" => Ok(DagMethod::Rlafe),
            _ => Err(format!("unknown dag method `{s}`")),
        }
    }
}

/// A candidate structure with its cross-validated score.
#[derive(Debug, Clone)]
pub struct ScoredDag {
    pub method: DagMethod,
    pub dag: Dag,
    pub mean_aic: f64,
    pub std_aic: f64,
    pub fold_scores: Vec<f64>,
}

/// Everything structure learning needs besides the data itself.
#[derive(Debug, Clone)]
pub struct LearnOptions {
    /// Analyst-required edges; fixed in every method except SL.
    pub focused: BTreeSet<(usize, usize)>,
    /// Edges no method may add (e.g. anything into a conditional root).
    pub forbidden: BTreeSet<(usize, usize)>,
    /// Edges kept per target by the discovery methods.
    pub top_m: usize,
    /// F-test significance level for least-squares discovery.
    pub ols_alpha: f64,
    pub forest: ForestParams,
}

impl Default for LearnOptions {
    fn default() -> Self {
        LearnOptions {
            focused: BTreeSet::new(),
            forbidden: BTreeSet::new(),
            top_m: 2,
            ols_alpha: 0.01,
            forest: ForestParams::default(),
        }
    }
}

/// Union `primary`'s edges with `additions`, then repair cycles by deleting,
/// one at a time, the in-cycle non-protected edge whose removal costs the
/// least score (ties broken by lexicographic edge labels). Protected edges
/// are never deleted; a cycle made only of protected edges is infeasible.
pub fn merge_dags(
    data: &Dataset,
    primary: &Dag,
    additions: &BTreeSet<(usize, usize)>,
    protected: &BTreeSet<(usize, usize)>,
) -> Result<Dag, DagError> {
    let n = primary.node_count();
    if data.labels != primary.labels() {
        return Err(DagError::LabelMismatch);
    }
    let mut edges: BTreeSet<(usize, usize)> = primary.edges().collect();
    for &(u, v) in additions {
        if u >= n || v >= n {
            return Err(DagError::NodeBounds);
        }
        if u == v {
            return Err(DagError::SelfLoop(primary.label(u).to_string()));
        }
        edges.insert((u, v));
    }
    if let Some(&(u, v)) = protected.difference(&edges).next() {
        return Err(DagError::InvalidConstraint(format!(
            "protected edge ({u}, {v}) is in neither input"
        )));
    }

    while let Some(cycle) = find_cycle(n, &edges) {
        let mut best: Option<((usize, usize), f64)> = None;
        for &(u, v) in &cycle {
            if protected.contains(&(u, v)) {
                continue;
            }
            let contribution = edge_contribution(data, &edges, u, v)?;
            let better = match &best {
                None => true,
                Some((cur, cur_c)) => {
                    contribution < *cur_c
                        || (contribution == *cur_c
                            && (data.labels[u].as_str(), data.labels[v].as_str())
                                < (data.labels[cur.0].as_str(), data.labels[cur.1].as_str()))
                }
            };
            if better {
                best = Some(((u, v), contribution));
            }
        }
        match best {
            Some((edge, _)) => {
                edges.remove(&edge);
            }
            None => {
                let mut names: Vec<String> =
                    cycle.iter().map(|&(u, _)| data.labels[u].clone()).collect();
                names.push(data.labels[cycle[0].0].clone());
                return Err(DagError::ProtectedCycle { cycle: names });
            }
        }
    }
    Dag::from_edges(primary.labels().to_vec(), edges)
}

/// Score attributable to one edge in the (possibly still cyclic) working
/// graph: family score of the child with the edge minus without it. An edge
/// that pushes its family past the parent-configuration cap counts as
/// unboundedly expensive, i.e. the first to go.
fn edge_contribution(
    data: &Dataset,
    edges: &BTreeSet<(usize, usize)>,
    u: usize,
    v: usize,
) -> Result<f64, DagError> {
    let parents: Vec<usize> = edges
        .iter()
        .filter(|&&(_, b)| b == v)
        .map(|&(a, _)| a)
        .collect();
    let without: Vec<usize> = parents.iter().copied().filter(|&p| p != u).collect();
    let base = score::family_score(data, v, &without)?;
    match score::family_score(data, v, &parents) {
        Ok(with) => Ok(with.value() - base.value()),
        Err(ScoreError::ParentCapExceeded { .. }) => Ok(f64::NEG_INFINITY),
    }
}

/// Find one directed cycle as an edge list, or None if the graph is acyclic.
fn find_cycle(n: usize, edges: &BTreeSet<(usize, usize)>) -> Option<Vec<(usize, usize)>> {
    let mut adj = vec![Vec::new(); n];
    for &(u, v) in edges {
        adj[u].push(v);
    }
    // 0 = unvisited, 1 = on the current path, 2 = done
    let mut color = vec![0u8; n];
    let mut path: Vec<usize> = Vec::new();

    fn visit(
        x: usize,
        adj: &[Vec<usize>],
        color: &mut [u8],
        path: &mut Vec<usize>,
    ) -> Option<Vec<(usize, usize)>> {
        color[x] = 1;
        path.push(x);
        for &y in &adj[x] {
            match color[y] {
                0 => {
                    if let Some(c) = visit(y, adj, color, path) {
                        return Some(c);
                    }
                }
                1 => {
                    let start = path.iter().position(|&p| p == y).unwrap();
                    let loop_nodes = &path[start..];
                    let mut cycle: Vec<(usize, usize)> = loop_nodes
                        .windows(2)
                        .map(|w| (w[0], w[1]))
                        .collect();
                    cycle.push((x, y));
                    return Some(cycle);
                }
                _ => {}
            }
        }
        path.pop();
        color[x] = 2;
        None
    }

    for s in 0..n {
        if color[s] == 0 {
            if let Some(c) = visit(s, &adj, &mut color, &mut path) {
                return Some(c);
            }
        }
    }
    None
}

/// Run one construction strategy. Prefer [`build_dags`] when several
/// methods are wanted: the SL and FEB prerequisites are shared there.
pub fn build_dag(
    method: DagMethod,
    data: &Dataset,
    opts: &LearnOptions,
) -> Result<Dag, DagError> {
    let mut out = build_dags(data, &[method], opts)?;
    Ok(out.pop().expect("one method requested").dag)
}

/// Built structure for one method, before cross-validation.
#[derive(Debug, Clone)]
pub struct BuiltDag {
    pub method: DagMethod,
    pub dag: Dag,
}

/// Run the requested strategies, sharing the SL / FEB runs the hybrid
/// methods build on. Results come back in `methods` order.
pub fn build_dags(
    data: &Dataset,
    methods: &[DagMethod],
    opts: &LearnOptions,
) -> Result<Vec<BuiltDag>, DagError> {
    if data.is_empty() {
        return Err(DagError::InvalidArg("empty dataset".into()));
    }
    let n = data.labels.len();
    // validates disjointness and that the focused edges are realizable
    let base_constraints =
        EdgeConstraints::new(n, opts.focused.clone(), opts.forbidden.clone())?;

    let needs_sl = methods
        .iter()
        .any(|m| matches!(m, DagMethod::Sl | DagMethod::Hasl | DagMethod::FebSl));
    let needs_feb = methods
        .iter()
        .any(|m| matches!(m, DagMethod::Feb | DagMethod::FebSl));

    let sl = if needs_sl {
        let constraints =
            EdgeConstraints::new(n, BTreeSet::new(), opts.forbidden.clone())?;
        let start = Dag::new(data.labels.clone())?;
        Some(hill_climb::hill_climb(data, &start, &constraints)?)
    } else {
        None
    };
    let feb = if needs_feb {
        let start = Dag::from_edges(data.labels.clone(), opts.focused.iter().copied())?;
        Some(hill_climb::hill_climb(data, &start, &base_constraints)?)
    } else {
        None
    };

    let mut out = Vec::with_capacity(methods.len());
    for &method in methods {
        let dag = match method {
            DagMethod::Feb => feb.clone().expect("feb computed"),
            DagMethod::Sl => sl.clone().expect("sl computed"),
            DagMethod::Hasl => {
                let sl = sl.as_ref().expect("sl computed");
                merge_dags(data, sl, &opts.focused, &opts.focused)?
            }
            DagMethod::FebSl => {
                let feb = feb.as_ref().expect("feb computed");
                let sl_edges: BTreeSet<_> = sl.as_ref().expect("sl computed").edges().collect();
                merge_dags(data, feb, &sl_edges, &opts.focused)?
            }
            DagMethod::Olsafe | DagMethod::Rlafe => {
                // targets: every column that may still receive a parent
                let targets: Vec<usize> = (0..n)
                    .filter(|&v| (0..n).any(|u| u != v && base_constraints.may_add(u, v)))
                    .collect();
                let discovered = match method {
                    DagMethod::Olsafe => {
                        discover::discover_edges_ols(data, &targets, opts.top_m, opts.ols_alpha)?
                    }
                    _ => discover::discover_edges_rf(data, &targets, opts.top_m, &opts.forest)?,
                };
                let additions: BTreeSet<(usize, usize)> = discovered
                    .into_iter()
                    .filter(|&(u, v)| base_constraints.may_add(u, v))
                    .collect();
                let base = Dag::from_edges(data.labels.clone(), opts.focused.iter().copied())?;
                let merged = merge_dags(data, &base, &additions, &opts.focused)?;
                // the merged skeleton is kept intact; the climb may only add
                let all_fixed: BTreeSet<_> = merged.edges().collect();
                let constraints =
                    EdgeConstraints::new(n, all_fixed, opts.forbidden.clone())?;
                hill_climb::hill_climb(data, &merged, &constraints)?
            }
        };
        out.push(BuiltDag { method, dag });
    }
    Ok(out)
}

/// Per-fold and aggregate cross-validation scores.
#[derive(Debug, Clone, PartialEq)]
pub struct CvScore {
    pub mean: f64,
    pub std: f64,
    pub folds: Vec<f64>,
}

/// K-fold score of a structure: rows are shuffled once (seeded), split into
/// contiguous blocks, and each fold is scored as held-out log-likelihood of
/// the train-fitted model minus the model's parameter count.
pub fn cross_validate(
    dag: &Dag,
    data: &ComposedTable,
    folds: usize,
    seed: u64,
    alpha: f64,
) -> Result<CvScore, DagError> {
    let n = data.rows.len();
    if folds < 2 {
        return Err(DagError::InvalidArg("need at least 2 folds".into()));
    }
    if n < folds {
        return Err(DagError::InvalidArg(format!(
            "{n} rows cannot fill {folds} folds"
        )));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    idx.shuffle(&mut rng);

    let slice_table = |take: &dyn Fn(usize) -> bool| ComposedTable {
        size: data.size,
        columns: data.columns.clone(),
        household_ids: Vec::new(),
        rows: idx
            .iter()
            .enumerate()
            .filter(|(pos, _)| take(*pos))
            .map(|(_, &r)| data.rows[r].clone())
            .collect(),
    };

    let mut scores = Vec::with_capacity(folds);
    for f in 0..folds {
        let lo = f * n / folds;
        let hi = (f + 1) * n / folds;
        let train = slice_table(&|pos| pos < lo || pos >= hi);
        let test = slice_table(&|pos| pos >= lo && pos < hi);
        let net = bn::fit_cpts(dag, &train, alpha)?;
        let ll = bn::log_likelihood(&net, &test)?;
        scores.push(ll - net.param_count() as f64);
    }
    let mean = scores.iter().sum::<f64>() / folds as f64;
    let var = scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / folds as f64;
    Ok(CvScore {
        mean,
        std: var.sqrt(),
        folds: scores,
    })
}

/// Winner by mean score; ties go to the sparser structure, then to method
/// declaration order.
pub fn select_best(scored: &[ScoredDag]) -> Result<&ScoredDag, DagError> {
    scored
        .iter()
        .min_by(|a, b| {
            b.mean_aic
                .total_cmp(&a.mean_aic)
                .then(a.dag.edge_count().cmp(&b.dag.edge_count()))
                .then(a.method.cmp(&b.method))
        })
        .ok_or_else(|| DagError::InvalidArg("no candidates to select from".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn add_edge_rejects_self_loop_and_cycle() {
        let mut dag = Dag::new(labels(&["A", "B", "C"])).unwrap();
        assert!(matches!(dag.add_edge(1, 1), Err(DagError::SelfLoop(_))));
        dag.add_edge(0, 1).unwrap();
        dag.add_edge(1, 2).unwrap();
        match dag.add_edge(2, 0) {
            Err(DagError::Cycle { cycle }) => {
                // the reported walk starts at the rejected edge's head
                assert_eq!(cycle, vec!["A", "B", "C", "A"]);
            }
            other => panic!("expected cycle error, got {other:?}"),
        }
        // the failed insert must not have mutated the graph
        assert_eq!(dag.edge_count(), 2);
    }

    #[test]
    fn topological_order_edge_cases() {
        let dag = Dag::new(labels(&["X", "Y", "Z"])).unwrap();
        assert_eq!(dag.topological_order(), vec![0, 1, 2]);

        let chain = Dag::from_edges(labels(&["A", "B", "C"]), [(0, 1), (1, 2)]).unwrap();
        assert_eq!(chain.topological_order(), vec![0, 1, 2]);

        // diamond: A before everything, D after everything
        let diamond =
            Dag::from_edges(labels(&["A", "B", "C", "D"]), [(0, 1), (0, 2), (1, 3), (2, 3)])
                .unwrap();
        let order = diamond.topological_order();
        assert_eq!(order[0], 0);
        assert_eq!(order[3], 3);
    }

    #[test]
    fn constraints_reject_overlap_and_cyclic_fixed() {
        let fixed = BTreeSet::from([(0, 1)]);
        let forbidden = BTreeSet::from([(0, 1)]);
        assert!(matches!(
            EdgeConstraints::new(2, fixed, forbidden),
            Err(DagError::InvalidConstraint(_))
        ));

        let cyclic = BTreeSet::from([(0, 1), (1, 0)]);
        assert!(matches!(
            EdgeConstraints::new(2, cyclic, BTreeSet::new()),
            Err(DagError::InvalidConstraint(_))
        ));
    }

    fn toy_data(n_cols: usize) -> Dataset {
        // deterministic pseudo-rows; enough structure for scoring to work
        let rows: Vec<Vec<u32>> = (0..40)
            .map(|r| (0..n_cols).map(|c| ((r / (c + 1)) % 2) as u32).collect())
            .collect();
        Dataset::new(
            (0..n_cols).map(|i| format!("N{i}")).collect(),
            vec![2; n_cols],
            rows,
        )
        .unwrap()
    }

    #[test]
    fn merge_additions_subset_is_identity() {
        let data = toy_data(3);
        let primary = Dag::from_edges(data.labels.clone(), [(0, 1), (1, 2)]).unwrap();
        let additions = BTreeSet::from([(0, 1)]);
        let merged = merge_dags(&data, &primary, &additions, &BTreeSet::new()).unwrap();
        assert_eq!(merged, primary);
    }

    #[test]
    fn merge_keeps_protected_edge_over_reverse_addition() {
        let data = toy_data(2);
        let primary = Dag::from_edges(data.labels.clone(), [(0, 1)]).unwrap();
        let additions = BTreeSet::from([(1, 0)]);
        let protected = BTreeSet::from([(0, 1)]);
        let merged = merge_dags(&data, &primary, &additions, &protected).unwrap();
        assert!(merged.has_edge(0, 1));
        assert!(!merged.has_edge(1, 0));
        assert_eq!(merged.edge_count(), 1);
    }

    #[test]
    fn merge_breaks_three_cycle() {
        let data = toy_data(3);
        let primary = Dag::from_edges(data.labels.clone(), [(0, 1), (1, 2)]).unwrap();
        let additions = BTreeSet::from([(2, 0)]);
        let merged = merge_dags(&data, &primary, &additions, &BTreeSet::new()).unwrap();
        assert_eq!(merged.edge_count(), 2);
        assert!(merged.topological_order().len() == 3);
    }

    #[test]
    fn merge_fully_protected_cycle_is_infeasible() {
        let data = toy_data(2);
        let primary = Dag::from_edges(data.labels.clone(), [(0, 1)]).unwrap();
        let additions = BTreeSet::from([(1, 0)]);
        let protected = BTreeSet::from([(0, 1), (1, 0)]);
        assert!(matches!(
            merge_dags(&data, &primary, &additions, &protected),
            Err(DagError::ProtectedCycle { .. })
        ));
    }

    #[test]
    fn select_best_rules() {
        let dag3 = Dag::from_edges(labels(&["A", "B", "C", "D"]), [(0, 1), (1, 2), (2, 3)])
            .unwrap();
        let dag5 = Dag::from_edges(
            labels(&["A", "B", "C", "D"]),
            [(0, 1), (1, 2), (2, 3), (0, 2), (0, 3)],
        )
        .unwrap();
        let entry = |method, dag: &Dag, mean: f64| ScoredDag {
            method,
            dag: dag.clone(),
            mean_aic: mean,
            std_aic: 0.0,
            fold_scores: vec![mean],
        };

        // single candidate
        let single = [entry(DagMethod::Sl, &dag3, -10.0)];
        assert_eq!(select_best(&single).unwrap().method, DagMethod::Sl);

        // equal means: fewer edges wins
        let tie = [
            entry(DagMethod::Feb, &dag5, -8.0),
            entry(DagMethod::Sl, &dag3, -8.0),
        ];
        assert_eq!(select_best(&tie).unwrap().dag.edge_count(), 3);

        // equal means and edges: method order wins
        let tie2 = [
            entry(DagMethod::Rlafe, &dag3, -8.0),
            entry(DagMethod::Hasl, &dag3, -8.0),
        ];
        assert_eq!(select_best(&tie2).unwrap().method, DagMethod::Hasl);

        // plain maximum
        let plain = [
            entry(DagMethod::Feb, &dag3, -10.0),
            entry(DagMethod::Sl, &dag3, -8.0),
            entry(DagMethod::Hasl, &dag3, -9.0),
        ];
        assert!((select_best(&plain).unwrap().mean_aic - -8.0).abs() < 1e-15);

        assert!(select_best(&[]).is_err());
    }

    #[test]
    fn method_round_trips_strings() {
        for m in DagMethod::ALL {
            assert_eq!(m.as_str().parse::<DagMethod>().unwrap(), m);
            let json = serde_json::to_string(&m).unwrap();
            let back: DagMethod = serde_json::from_str(&json).unwrap();
            assert_eq!(back, m);
        }
        assert!("bogus".parse::<DagMethod>().is_err());
    }
}

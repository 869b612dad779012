//! Steepest-ascent local search over DAG structures.
//!
//! Moves are single edge additions, removals, and reversals, subject to
//! acyclicity and the caller's edge constraints. Family scores depend only
//! on (node, parent set), so they are memoized across iterations and deltas
//! touch at most two families per move.

use std::collections::HashMap;

use super::score::{family_score, FamilyScore, ScoreError};
use super::{Dag, DagError, Dataset, EdgeConstraints};

/// Minimum score gain for a move to count as an improvement; guards against
/// floating-point noise producing endless neutral churn.
const IMPROVE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Move {
    Add(usize, usize),
    Remove(usize, usize),
    Reverse(usize, usize),
}

type Memo = HashMap<(usize, Vec<usize>), FamilyScore>;

/// Memoized family score; `None` means the parent-configuration cap was hit,
/// which makes any move leading there illegal rather than an error.
fn family_cached(
    memo: &mut Memo,
    data: &Dataset,
    v: usize,
    parents: Vec<usize>,
) -> Option<FamilyScore> {
    if let Some(f) = memo.get(&(v, parents.clone())) {
        return Some(*f);
    }
    match family_score(data, v, &parents) {
        Ok(f) => {
            memo.insert((v, parents), f);
            Some(f)
        }
        Err(ScoreError::ParentCapExceeded { .. }) => None,
    }
}

fn insert_sorted(mut parents: Vec<usize>, u: usize) -> Vec<usize> {
    let pos = parents.binary_search(&u).unwrap_err();
    parents.insert(pos, u);
    parents
}

/// Enumerate all legal moves (adds, then removals, then reversals, each in
/// index order) and return the strictly best one. First-enumerated wins on
/// exact ties, which pins down the orientation of score-equivalent edges.
fn best_move(
    data: &Dataset,
    dag: &mut Dag,
    constraints: &EdgeConstraints,
    memo: &mut Memo,
    fam: &[FamilyScore],
) -> Option<(Move, f64)> {
    let n = dag.node_count();
    let mut best: Option<(Move, f64)> = None;
    let consider = |best: &mut Option<(Move, f64)>, mv: Move, delta: f64| {
        if delta > IMPROVE_EPS && best.as_ref().is_none_or(|&(_, d)| delta > d) {
            *best = Some((mv, delta));
        }
    };

    for u in 0..n {
        for v in 0..n {
            if u == v || dag.has_edge(u, v) || !constraints.may_add(u, v) || dag.reaches(v, u) {
                continue;
            }
            let parents = insert_sorted(dag.parents(v), u);
            let Some(f) = family_cached(memo, data, v, parents) else {
                continue;
            };
            consider(&mut best, Move::Add(u, v), f.value() - fam[v].value());
        }
    }

    let edges: Vec<(usize, usize)> = dag.edges().collect();
    for &(u, v) in &edges {
        if !constraints.may_remove(u, v) {
            continue;
        }
        let parents: Vec<usize> = dag.parents(v).into_iter().filter(|&p| p != u).collect();
        let Some(f) = family_cached(memo, data, v, parents) else {
            continue;
        };
        consider(&mut best, Move::Remove(u, v), f.value() - fam[v].value());
    }

    for &(u, v) in &edges {
        if !constraints.may_reverse(u, v) {
            continue;
        }
        // legal only if no alternative directed path u -> v remains
        dag.remove_edge(u, v);
        let blocked = dag.reaches(u, v);
        dag.add_edge(u, v).expect("restoring an edge that was just present");
        if blocked {
            continue;
        }
        let pv: Vec<usize> = dag.parents(v).into_iter().filter(|&p| p != u).collect();
        let pu = insert_sorted(dag.parents(u), v);
        let (Some(fv), Some(fu)) = (
            family_cached(memo, data, v, pv),
            family_cached(memo, data, u, pu),
        ) else {
            continue;
        };
        let delta = fv.value() + fu.value() - fam[v].value() - fam[u].value();
        consider(&mut best, Move::Reverse(u, v), delta);
    }
    best
}

fn starting_families(
    data: &Dataset,
    dag: &Dag,
    constraints: &EdgeConstraints,
) -> Result<Vec<FamilyScore>, DagError> {
    if data.labels != dag.labels() {
        return Err(DagError::LabelMismatch);
    }
    if data.is_empty() {
        return Err(DagError::InvalidArg("empty dataset".into()));
    }
    for &(u, v) in constraints.fixed() {
        if !dag.has_edge(u, v) {
            return Err(DagError::InvalidConstraint(format!(
                "fixed edge {} -> {} missing from the starting dag",
                dag.label(u),
                dag.label(v)
            )));
        }
    }
    for (u, v) in dag.edges() {
        if !constraints.may_add(u, v) {
            return Err(DagError::InvalidConstraint(format!(
                "starting dag contains forbidden edge {} -> {}",
                dag.label(u),
                dag.label(v)
            )));
        }
    }
    (0..dag.node_count())
        .map(|v| family_score(data, v, &dag.parents(v)).map_err(DagError::from))
        .collect()
}

/// Climb from `start` until no legal single move improves the score.
pub fn hill_climb(
    data: &Dataset,
    start: &Dag,
    constraints: &EdgeConstraints,
) -> Result<Dag, DagError> {
    let mut dag = start.clone();
    let mut fam = starting_families(data, &dag, constraints)?;
    let mut memo = Memo::new();

    while let Some((mv, _)) = best_move(data, &mut dag, constraints, &mut memo, &fam) {
        match mv {
            Move::Add(u, v) => {
                dag.add_edge(u, v).expect("move was checked for acyclicity");
                fam[v] = family_cached(&mut memo, data, v, dag.parents(v))
                    .expect("score was computed when the move was evaluated");
            }
            Move::Remove(u, v) => {
                dag.remove_edge(u, v);
                fam[v] = family_cached(&mut memo, data, v, dag.parents(v))
                    .expect("score was computed when the move was evaluated");
            }
            Move::Reverse(u, v) => {
                dag.remove_edge(u, v);
                dag.add_edge(v, u).expect("move was checked for acyclicity");
                for x in [u, v] {
                    fam[x] = family_cached(&mut memo, data, x, dag.parents(x))
                        .expect("score was computed when the move was evaluated");
                }
            }
        }
    }
    Ok(dag)
}

/// Exhaustively verify that no legal single move improves `dag`'s score —
/// the postcondition of [`hill_climb`], checkable for any structure.
pub fn is_local_optimum(
    data: &Dataset,
    dag: &Dag,
    constraints: &EdgeConstraints,
) -> Result<bool, DagError> {
    let fam = starting_families(data, dag, constraints)?;
    let mut memo = Memo::new();
    let mut work = dag.clone();
    Ok(best_move(data, &mut work, constraints, &mut memo, &fam).is_none())
}

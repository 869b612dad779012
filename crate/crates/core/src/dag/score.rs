//! Decomposable structure score: maximized log-likelihood minus parameter
//! count, computed family by family.

use std::collections::HashMap;

use thiserror::Error;

use super::{Dag, DagError, Dataset};

/// Upper bound on parent configurations per node, to bound count storage.
pub const PARENT_CAP: u64 = 1_000_000;

#[derive(Debug, Error)]
pub enum ScoreError {
    #[error("node `{node}` has {cells} parent configurations (cap {PARENT_CAP})")]
    ParentCapExceeded { node: String, cells: u128 },
}

/// One node's contribution: maximized log-likelihood of the node given its
/// parents, and the free-parameter count (levels − 1 per configuration).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FamilyScore {
    pub log_lik: f64,
    pub params: u64,
}

impl FamilyScore {
    pub fn value(&self) -> f64 {
        self.log_lik - self.params as f64
    }
}

/// Count parent configurations, or fail the cap.
fn config_count(data: &Dataset, node: usize, parents: &[usize]) -> Result<u64, ScoreError> {
    let mut q: u128 = 1;
    for &p in parents {
        q *= data.cards[p] as u128;
        if q > PARENT_CAP as u128 {
            return Err(ScoreError::ParentCapExceeded {
                node: data.labels[node].clone(),
                cells: q,
            });
        }
    }
    Ok(q as u64)
}

/// Mixed-radix encoding of a row's parent values.
#[inline]
fn config_code(row: &[u32], cards: &[usize], parents: &[usize]) -> u64 {
    let mut code = 0u64;
    for &p in parents {
        code = code * cards[p] as u64 + row[p] as u64;
    }
    code
}

enum Counts {
    Dense(Vec<u32>),
    Sparse(HashMap<u64, Vec<u32>>),
}

/// Score one family. Log-likelihood uses maximum-likelihood cell
/// probabilities (counts over configuration totals); empty configurations
/// contribute nothing.
pub fn family_score(
    data: &Dataset,
    node: usize,
    parents: &[usize],
) -> Result<FamilyScore, ScoreError> {
    let r = data.cards[node] as u64;
    let q = config_count(data, node, parents)?;
    let params = (r - 1) * q;

    let mut counts = if q * r <= 1 << 22 {
        Counts::Dense(vec![0u32; (q * r) as usize])
    } else {
        Counts::Sparse(HashMap::new())
    };
    for row in &data.rows {
        let code = config_code(row, &data.cards, parents);
        let level = row[node] as usize;
        match &mut counts {
            Counts::Dense(v) => v[code as usize * r as usize + level] += 1,
            Counts::Sparse(m) => {
                m.entry(code).or_insert_with(|| vec![0u32; r as usize])[level] += 1
            }
        }
    }

    let cell_ll = |cells: &[u32]| -> f64 {
        let total: u32 = cells.iter().sum();
        if total == 0 {
            return 0.0;
        }
        cells
            .iter()
            .filter(|&&n| n > 0)
            .map(|&n| f64::from(n) * (f64::from(n) / f64::from(total)).ln())
            .sum()
    };
    let log_lik = match &counts {
        Counts::Dense(v) => v.chunks_exact(r as usize).map(cell_ll).sum(),
        Counts::Sparse(m) => m.values().map(|v| cell_ll(v)).sum(),
    };
    Ok(FamilyScore { log_lik, params })
}

/// Full-structure score: sum of family log-likelihoods minus the total
/// parameter count. Higher is better.
pub fn aic_score(data: &Dataset, dag: &Dag) -> Result<f64, DagError> {
    if data.labels != dag.labels() {
        return Err(DagError::LabelMismatch);
    }
    let mut total = 0.0;
    for v in 0..dag.node_count() {
        total += family_score(data, v, &dag.parents(v))?.value();
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dataset(cards: Vec<usize>, rows: Vec<Vec<u32>>) -> Dataset {
        let labels = (0..cards.len()).map(|i| format!("N{i}")).collect();
        Dataset::new(labels, cards, rows).unwrap()
    }

    #[test]
    fn single_binary_node_hand_case() {
        // counts (1, 1): LL = 2 ln 0.5, one free parameter
        let data = dataset(vec![2], vec![vec![0], vec![1]]);
        let dag = Dag::new(vec!["N0".into()]).unwrap();
        let score = aic_score(&data, &dag).unwrap();
        assert_relative_eq!(score, 2.0 * 0.5f64.ln() - 1.0, epsilon = 1e-12);
    }

    #[test]
    fn independent_parent_costs_exactly_one_parameter() {
        // exact independence: conditional distributions equal the marginal,
        // so LL is unchanged and the score drops by the K increment
        let mut rows = Vec::new();
        for a in 0..2u32 {
            for b in 0..2u32 {
                for _ in 0..25 {
                    rows.push(vec![a, b]);
                }
            }
        }
        let data = dataset(vec![2, 2], rows);
        let empty = Dag::new(vec!["N0".into(), "N1".into()]).unwrap();
        let edge = Dag::from_edges(vec!["N0".into(), "N1".into()], [(0, 1)]).unwrap();
        let s0 = aic_score(&data, &empty).unwrap();
        let s1 = aic_score(&data, &edge).unwrap();
        assert_relative_eq!(s0 - s1, 1.0, epsilon = 1e-9);
    }

    /// Independent re-derivation: explicit nested maps, no shared helpers.
    fn brute_force_aic(data: &Dataset, parents_of: &[Vec<usize>]) -> f64 {
        let mut total = 0.0;
        for (v, parents) in parents_of.iter().enumerate() {
            let r = data.cards[v];
            let mut by_config: std::collections::BTreeMap<Vec<u32>, Vec<u64>> =
                std::collections::BTreeMap::new();
            for row in &data.rows {
                let key: Vec<u32> = parents.iter().map(|&p| row[p]).collect();
                by_config.entry(key).or_insert_with(|| vec![0; r])[row[v] as usize] += 1;
            }
            for counts in by_config.values() {
                let n_c: u64 = counts.iter().sum();
                for &n in counts {
                    if n > 0 {
                        total += n as f64 * (n as f64 / n_c as f64).ln();
                    }
                }
            }
            let q: usize = parents.iter().map(|&p| data.cards[p]).product();
            total -= ((r - 1) * q) as f64;
        }
        total
    }

    /// Every acyclic directed graph over `n` nodes, as edge lists.
    fn all_dags(n: usize) -> Vec<Vec<(usize, usize)>> {
        let pairs: Vec<(usize, usize)> = (0..n)
            .flat_map(|u| (0..n).filter(move |&v| v != u).map(move |v| (u, v)))
            .collect();
        let mut out = Vec::new();
        'subset: for mask in 0u32..(1 << pairs.len()) {
            let edges: Vec<(usize, usize)> = pairs
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, &e)| e)
                .collect();
            // acyclic iff repeatedly removing indegree-zero nodes empties the graph
            let mut remaining = edges.clone();
            let mut nodes: Vec<usize> = (0..n).collect();
            while !nodes.is_empty() {
                let Some(pos) = nodes
                    .iter()
                    .position(|&v| remaining.iter().all(|&(_, b)| b != v))
                else {
                    continue 'subset;
                };
                let v = nodes.remove(pos);
                remaining.retain(|&(a, _)| a != v);
            }
            out.push(edges);
        }
        out
    }

    #[test]
    fn matches_brute_force_on_all_three_node_dags() {
        let dags = all_dags(3);
        assert_eq!(dags.len(), 25, "3-node acyclic graph count");
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let rows: Vec<Vec<u32>> = (0..200)
                .map(|_| (0..3).map(|_| rng.random_range(0..2u32)).collect())
                .collect();
            let data = dataset(vec![2, 2, 2], rows);
            for edges in &dags {
                let dag = Dag::from_edges(data.labels.clone(), edges.iter().copied()).unwrap();
                let parents_of: Vec<Vec<usize>> = (0..3).map(|v| dag.parents(v)).collect();
                let fast = aic_score(&data, &dag).unwrap();
                let slow = brute_force_aic(&data, &parents_of);
                assert_relative_eq!(fast, slow, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn never_beats_saturated_joint_likelihood() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let cards = vec![2usize, 2, 2, 2];
        let rows: Vec<Vec<u32>> = (0..300)
            .map(|_| cards.iter().map(|&c| rng.random_range(0..c as u32)).collect())
            .collect();
        let data = dataset(cards, rows);
        // empirical joint log-likelihood
        let mut joint: std::collections::BTreeMap<Vec<u32>, u64> = Default::default();
        for row in &data.rows {
            *joint.entry(row.clone()).or_default() += 1;
        }
        let n = data.rows.len() as f64;
        let joint_ll: f64 = joint
            .values()
            .map(|&c| c as f64 * (c as f64 / n).ln())
            .sum();

        for edges in all_dags(4).into_iter().step_by(97) {
            let dag = Dag::from_edges(data.labels.clone(), edges).unwrap();
            assert!(aic_score(&data, &dag).unwrap() <= joint_ll + 1e-9);
        }
    }

    #[test]
    fn monotonicity_of_likelihood_and_params_under_edge_addition() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let rows: Vec<Vec<u32>> = (0..150)
            .map(|_| vec![rng.random_range(0..3u32), rng.random_range(0..2u32), rng.random_range(0..2u32)])
            .collect();
        let data = dataset(vec![3, 2, 2], rows);
        let before = family_score(&data, 2, &[1]).unwrap();
        let after = family_score(&data, 2, &[0, 1]).unwrap();
        assert!(after.log_lik >= before.log_lik - 1e-9);
        assert!(after.params >= before.params);
    }

    #[test]
    fn parent_cap_errors_with_node_name() {
        let data = dataset(vec![101, 101, 101, 2], vec![vec![0, 0, 0, 0]]);
        match family_score(&data, 3, &[0, 1, 2]) {
            Err(ScoreError::ParentCapExceeded { node, cells }) => {
                assert_eq!(node, "N3");
                assert_eq!(cells, 101u128 * 101 * 101);
            }
            other => panic!("expected cap error, got {other:?}"),
        }
    }
}

//! Minimal classification forest used only for predictor importance.
//!
//! Trees split on one-hot (column, level) indicator features with the Gini
//! criterion. Nothing here is tuned for predictive accuracy; the product is
//! the per-column sum of impurity decreases, which ranks candidate parents.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Dataset;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForestParams {
    pub trees: usize,
    pub max_depth: usize,
    pub min_leaf: usize,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            trees: 50,
            max_depth: 8,
            min_leaf: 5,
            seed: 0,
        }
    }
}

/// One candidate split feature: indicator `row[column] == level`.
#[derive(Debug, Clone, Copy)]
struct Feature {
    predictor_pos: usize,
    column: usize,
    level: u32,
}

/// Gini impurity times the sample count: n · (1 − Σ p²). Working with the
/// unnormalized form makes the parent − children difference the standard
/// "total impurity decrease".
fn weighted_gini(counts: &[u32]) -> f64 {
    let n: u32 = counts.iter().sum();
    if n == 0 {
        return 0.0;
    }
    let n = f64::from(n);
    let sum_sq: f64 = counts.iter().map(|&c| f64::from(c) * f64::from(c)).sum();
    n - sum_sq / n
}

struct Grower<'a> {
    data: &'a Dataset,
    target: usize,
    target_card: usize,
    features: &'a [Feature],
    m_try: usize,
    max_depth: usize,
    min_leaf: usize,
    importances: &'a mut [f64],
}

impl Grower<'_> {
    fn grow(&mut self, rows: Vec<usize>, depth: usize, rng: &mut ChaCha8Rng) {
        if depth >= self.max_depth || rows.len() < 2 * self.min_leaf {
            return;
        }
        let mut parent_counts = vec![0u32; self.target_card];
        for &r in &rows {
            parent_counts[self.data.rows[r][self.target] as usize] += 1;
        }
        let parent_gini = weighted_gini(&parent_counts);
        if parent_gini <= 0.0 {
            return; // pure node
        }

        // feature subsample; sorted so equal-gain ties resolve by feature index
        let mut candidates: Vec<usize> =
            rand::seq::index::sample(rng, self.features.len(), self.m_try).into_vec();
        candidates.sort_unstable();

        let mut best: Option<(usize, f64)> = None;
        for &fi in &candidates {
            let feature = self.features[fi];
            let mut yes_counts = vec![0u32; self.target_card];
            let mut yes_n = 0usize;
            for &r in &rows {
                if self.data.rows[r][feature.column] == feature.level {
                    yes_counts[self.data.rows[r][self.target] as usize] += 1;
                    yes_n += 1;
                }
            }
            let no_n = rows.len() - yes_n;
            if yes_n < self.min_leaf || no_n < self.min_leaf {
                continue;
            }
            let no_counts: Vec<u32> = parent_counts
                .iter()
                .zip(&yes_counts)
                .map(|(&p, &y)| p - y)
                .collect();
            let decrease = parent_gini - weighted_gini(&yes_counts) - weighted_gini(&no_counts);
            if decrease > 1e-12 && best.is_none_or(|(_, d)| decrease > d) {
                best = Some((fi, decrease));
            }
        }
        let Some((fi, decrease)) = best else {
            return;
        };
        let feature = self.features[fi];
        self.importances[feature.predictor_pos] += decrease;

        let (yes_rows, no_rows): (Vec<usize>, Vec<usize>) = rows
            .into_iter()
            .partition(|&r| self.data.rows[r][feature.column] == feature.level);
        self.grow(yes_rows, depth + 1, rng);
        self.grow(no_rows, depth + 1, rng);
    }
}

/// Total Gini impurity decrease attributed to each predictor column across
/// a bootstrapped forest. Output is aligned with `predictors`.
pub(super) fn column_importances(
    data: &Dataset,
    target: usize,
    predictors: &[usize],
    params: &ForestParams,
) -> Vec<f64> {
    let features: Vec<Feature> = predictors
        .iter()
        .enumerate()
        .flat_map(|(pos, &j)| {
            (0..data.cards[j] as u32).map(move |level| Feature {
                predictor_pos: pos,
                column: j,
                level,
            })
        })
        .collect();
    let m_try = ((features.len() as f64).sqrt().ceil() as usize).clamp(1, features.len());
    let n = data.rows.len();
    let mut importances = vec![0.0; predictors.len()];

    for tree in 0..params.trees {
        // independent, reproducible stream per tree
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        rng.set_stream(tree as u64);
        let bootstrap: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
        let mut grower = Grower {
            data,
            target,
            target_card: data.cards[target],
            features: &features,
            m_try,
            max_depth: params.max_depth,
            min_leaf: params.min_leaf,
            importances: &mut importances,
        };
        grower.grow(bootstrap, 0, &mut rng);
    }
    importances
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dag::Dataset;
    use rand::{Rng, SeedableRng};

    #[test]
    fn weighted_gini_hand_values() {
        assert_eq!(weighted_gini(&[0, 0]), 0.0);
        assert_eq!(weighted_gini(&[4, 0]), 0.0);
        // 4 + 4: 8 * (1 - 0.5) = 4
        assert!((weighted_gini(&[4, 4]) - 4.0).abs() < 1e-12);
        // 6 + 2: 8 * (1 - (36+4)/64) = 3
        assert!((weighted_gini(&[6, 2]) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn informative_column_dominates() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let rows: Vec<Vec<u32>> = (0..500)
            .map(|_| {
                let signal = rng.random_range(0..3u32);
                let noise = rng.random_range(0..3u32);
                vec![signal, noise, signal]
            })
            .collect();
        let data = Dataset::new(
            vec!["S".into(), "Z".into(), "T".into()],
            vec![3, 3, 3],
            rows,
        )
        .unwrap();
        let imps = column_importances(&data, 2, &[0, 1], &ForestParams::default());
        assert!(
            imps[0] > 10.0 * imps[1],
            "signal {} vs noise {}",
            imps[0],
            imps[1]
        );
    }

    #[test]
    fn importances_are_reproducible() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let rows: Vec<Vec<u32>> = (0..200)
            .map(|_| vec![rng.random_range(0..2u32), rng.random_range(0..2u32)])
            .collect();
        let data =
            Dataset::new(vec!["A".into(), "B".into()], vec![2, 2], rows).unwrap();
        let p = ForestParams {
            trees: 10,
            ..ForestParams::default()
        };
        let a = column_importances(&data, 1, &[0], &p);
        let b = column_importances(&data, 1, &[0], &p);
        assert_eq!(a, b);
    }
}

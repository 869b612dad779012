//! Seeded data builders shared by the benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use popsynth_core::compose::ComposedTable;
use popsynth_core::fixture::fixture_schema;

/// A composed table of `size`-member households with `n_rows` rows. Later
/// columns frequently copy an earlier column, so learners, rakers and
/// metrics all see realistic association rather than white noise.
pub fn composed_table(size: usize, n_rows: usize, seed: u64) -> ComposedTable {
    let schema = fixture_schema();
    let columns = ComposedTable::layout(&schema, size);
    let cards: Vec<usize> = columns.iter().map(|c| c.spec.cardinality()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows: Vec<Vec<u32>> = (0..n_rows)
        .map(|_| {
            let mut row = vec![0u32; cards.len()];
            for v in 0..cards.len() {
                let card = cards[v] as u32;
                row[v] = if v > 0 && rng.random_bool(0.7) {
                    row[rng.random_range(0..v)] % card
                } else {
                    rng.random_range(0..card)
                };
            }
            row
        })
        .collect();
    ComposedTable {
        size,
        columns,
        household_ids: (0..n_rows).map(|i| format!("h{i}")).collect(),
        rows,
    }
}

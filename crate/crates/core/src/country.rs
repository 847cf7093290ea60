//! Quartile-balanced random-search selection of a subset of entities.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, HashMap};
use thiserror::Error;

pub const INDICATORS: [&str; 5] = ["hdi", "gdp_per_capita", "trade_openness", "area", "population"];

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum CountryError {
    #[error("table has no entities")]
    Empty,
    #[error("entity {id}: indicator {indicator} is missing or not finite")]
    MissingIndicator { id: String, indicator: &'static str },
    #[error("duplicate entity id {0}")]
    DuplicateId(String),
    #[error("forced id {0} is not in the table")]
    UnknownForced(String),
    #[error("{forced} forced ids exceed the subset size {m}")]
    TooManyForced { forced: usize, m: usize },
    #[error("subset size {m} exceeds the {n} entities available")]
    SubsetTooLarge { m: usize, n: usize },
}

/// One row of the raw indicator table, in `INDICATORS` order.
#[derive(Debug, Clone, PartialEq)]
pub struct RawEntity {
    pub id: String,
    pub indicators: [Option<f64>; 5],
}

#[derive(Debug, Clone, PartialEq)]
pub struct CountryTable {
    ids: Vec<String>,
    values: Vec<[f64; 5]>,
    /// Quartile 1..=4 per entity and indicator; 1 holds the smallest values.
    quartiles: Vec<[u8; 5]>,
    index: HashMap<String, usize>,
}

impl CountryTable {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn values(&self, i: usize) -> [f64; 5] {
        self.values[i]
    }

    pub fn quartiles(&self, i: usize) -> [u8; 5] {
        self.quartiles[i]
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    /// Quartile counts (indicator x quartile) of a subset given by row positions.
    pub fn representation(&self, rows: &[usize]) -> [[usize; 4]; 5] {
        let mut counts = [[0usize; 4]; 5];
        for &r in rows {
            for (j, q) in self.quartiles[r].iter().enumerate() {
                counts[j][*q as usize - 1] += 1;
            }
        }
        counts
    }
}

/// Population standard deviation of the 20 quartile counts.
pub fn spread(counts: &[[usize; 4]; 5]) -> f64 {
    let flat: Vec<f64> = counts.iter().flatten().map(|&c| c as f64).collect();
    let mean = flat.iter().sum::<f64>() / flat.len() as f64;
    (flat.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / flat.len() as f64).sqrt()
}

/// Rank-based quartiles per indicator. Groups have size `ceil(N/4)` or
/// `floor(N/4)`, the larger ones first; equal values are ordered by id.
pub fn assign_quartiles(entities: &[RawEntity]) -> Result<CountryTable, CountryError> {
    if entities.is_empty() {
        return Err(CountryError::Empty);
    }
    let mut index = HashMap::new();
    let mut values = Vec::with_capacity(entities.len());
    for (i, e) in entities.iter().enumerate() {
        if index.insert(e.id.clone(), i).is_some() {
            return Err(CountryError::DuplicateId(e.id.clone()));
        }
        let mut row = [0.0; 5];
        for (j, v) in e.indicators.iter().enumerate() {
            match v {
                Some(v) if v.is_finite() => row[j] = *v,
                _ => return Err(CountryError::MissingIndicator { id: e.id.clone(), indicator: INDICATORS[j] }),
            }
        }
        values.push(row);
    }

    let n = entities.len();
    let (base, extra) = (n / 4, n % 4);
    // quartile of each rank position
    let mut label = Vec::with_capacity(n);
    for q in 0..4 {
        let size = base + usize::from(q < extra);
        label.extend(std::iter::repeat_n(q as u8 + 1, size));
    }
    let mut quartiles = vec![[0u8; 5]; n];
    for j in 0..5 {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| values[a][j].total_cmp(&values[b][j]).then_with(|| entities[a].id.cmp(&entities[b].id)));
        for (rank, &i) in order.iter().enumerate() {
            quartiles[i][j] = label[rank];
        }
    }
    let ids = entities.iter().map(|e| e.id.clone()).collect();
    Ok(CountryTable { ids, values, quartiles, index })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum SearchStrategy {
    /// Every iteration draws a completely new subset.
    #[default]
    FreshDraw,
    /// Every iteration swaps one non-forced member for one outsider.
    Swap,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectConfig {
    pub m: usize,
    pub forced: Vec<String>,
    pub iterations: usize,
    pub seed: u64,
    pub strategy: SearchStrategy,
}

impl SelectConfig {
    pub fn new(m: usize, seed: u64) -> Self {
        Self { m, forced: Vec::new(), iterations: 5000, seed, strategy: SearchStrategy::FreshDraw }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AcceptedStep {
    /// 0 for the initial draw.
    pub iteration: usize,
    pub spread: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionOutcome {
    /// Sorted ids.
    pub chosen: Vec<String>,
    pub forced: Vec<String>,
    /// Counts per indicator (in `INDICATORS` order) and quartile.
    pub representation: [[usize; 4]; 5],
    pub spread: f64,
    pub iterations: usize,
    pub accepted: Vec<AcceptedStep>,
}

impl SelectionOutcome {
    /// Times each quartile appears, pooled over the five indicators.
    pub fn quartile_totals(&self) -> [usize; 4] {
        let mut t = [0; 4];
        for row in &self.representation {
            for (q, c) in row.iter().enumerate() {
                t[q] += c;
            }
        }
        t
    }
}

/// Keep-best random search for a balanced `m`-subset that always contains
/// the forced ids. A candidate replaces the incumbent only if its spread is
/// strictly lower.
pub fn select(table: &CountryTable, config: &SelectConfig) -> Result<SelectionOutcome, CountryError> {
    let n = table.len();
    let m = config.m;
    if m > n {
        return Err(CountryError::SubsetTooLarge { m, n });
    }
    let forced: BTreeSet<usize> = config
        .forced
        .iter()
        .map(|id| table.position(id).ok_or_else(|| CountryError::UnknownForced(id.clone())))
        .collect::<Result<_, _>>()?;
    if forced.len() > m {
        return Err(CountryError::TooManyForced { forced: forced.len(), m });
    }
    let pool: Vec<usize> = (0..n).filter(|i| !forced.contains(i)).collect();
    let free = m - forced.len();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let draw = |rng: &mut ChaCha8Rng| -> Vec<usize> {
        let mut rows: Vec<usize> = forced.iter().copied().collect();
        rows.extend(index::sample(rng, pool.len(), free).iter().map(|k| pool[k]));
        rows
    };

    let mut current = draw(&mut rng);
    let mut best = spread(&table.representation(&current));
    let mut accepted = vec![AcceptedStep { iteration: 0, spread: best }];
    for it in 1..=config.iterations {
        let candidate = match config.strategy {
            SearchStrategy::FreshDraw => draw(&mut rng),
            SearchStrategy::Swap => {
                if free == 0 || free == pool.len() {
                    continue;
                }
                let mut c = current.clone();
                let inside: BTreeSet<usize> = c.iter().copied().collect();
                let outside: Vec<usize> = pool.iter().copied().filter(|i| !inside.contains(i)).collect();
                // non-forced members sit after the forced prefix
                let slot = forced.len() + rng.random_range(0..free);
                c[slot] = outside[rng.random_range(0..outside.len())];
                c
            }
        };
        let s = spread(&table.representation(&candidate));
        if s < best {
            best = s;
            current = candidate;
            accepted.push(AcceptedStep { iteration: it, spread: s });
        }
    }

    let mut chosen: Vec<String> = current.iter().map(|&i| table.ids[i].clone()).collect();
    chosen.sort();
    let forced_ids = forced.iter().map(|&i| table.ids[i].clone()).collect();
    Ok(SelectionOutcome {
        chosen,
        forced: forced_ids,
        representation: table.representation(&current),
        spread: best,
        iterations: config.iterations,
        accepted,
    })
}

//! Encoding order: the padded path matrix, pairwise edge costs `|W_Δ|`, and a
//! fixed-endpoint TSP over its columns.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bitcore::BinaryVector;
use crate::decomposer::Decomposer;
use crate::error::{Error, Result};
use crate::preprocess::EncodingMatrix;

/// Largest number of middle nodes [`OrderMode::Auto`] solves exactly.
pub const EXACT_CROSSOVER: usize = 10;
/// Hard limit for a forced exact solve (`2^m · m` DP states).
pub const MAX_EXACT_NODES: usize = 20;

/// `P = (0, B_{:,0}, …, B_{:,L-1}, 0)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathMatrix {
    columns: Vec<BinaryVector>,
}

impl PathMatrix {
    pub fn columns(&self) -> &[BinaryVector] {
        &self.columns
    }

    pub fn column(&self, i: usize) -> &BinaryVector {
        &self.columns[i]
    }

    /// `L + 2`.
    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn n(&self) -> u32 {
        self.columns[0].n()
    }
}

pub fn build_path_matrix(b: &EncodingMatrix) -> PathMatrix {
    let zero = BinaryVector::zeros(b.n()).expect("matrix has valid n");
    let mut columns = Vec::with_capacity(b.columns().len() + 2);
    columns.push(zero.clone());
    columns.extend(b.columns().iter().cloned());
    columns.push(zero);
    PathMatrix { columns }
}

/// Square, symmetric, zero-diagonal matrix of non-negative edge costs.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostMatrix {
    size: usize,
    data: Vec<u64>,
}

impl CostMatrix {
    pub fn new(rows: Vec<Vec<u64>>) -> Result<Self> {
        let size = rows.len();
        if size < 2 {
            return Err(Error::CostMatrix(format!("need at least 2 nodes, got {size}")));
        }
        if let Some(r) = rows.iter().find(|r| r.len() != size) {
            return Err(Error::CostMatrix(format!("row of length {} in a {size}x{size} matrix", r.len())));
        }
        for i in 0..size {
            if rows[i][i] != 0 {
                return Err(Error::CostMatrix(format!("nonzero diagonal at {i}")));
            }
            for j in 0..i {
                if rows[i][j] != rows[j][i] {
                    return Err(Error::CostMatrix(format!("asymmetric at ({i}, {j})")));
                }
            }
        }
        Ok(Self {
            size,
            data: rows.concat(),
        })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.data[i * self.size + j]
    }

    pub fn rows(&self) -> Vec<Vec<u64>> {
        self.data.chunks(self.size).map(<[u64]>::to_vec).collect()
    }

    /// Cost of a path visiting `sigma` in order.
    pub fn path_cost(&self, sigma: &[usize]) -> u64 {
        sigma.windows(2).map(|w| self.get(w[0], w[1])).sum()
    }
}

/// `cost(P_{:,i} ⊕ P_{:,j})` for every pair under the unit MCX cost.
pub fn edge_costs(p: &PathMatrix, decomposer: &Decomposer) -> Result<CostMatrix> {
    edge_costs_with(p, |delta| Ok(decomposer.cost(delta)? as u64))
}

/// [`edge_costs`] with a pluggable per-edge cost. Each distinct `Δ` is priced once.
pub fn edge_costs_with<F>(p: &PathMatrix, cost: F) -> Result<CostMatrix>
where
    F: Fn(&BinaryVector) -> Result<u64> + Sync,
{
    let size = p.len();
    let mut unique: Vec<BinaryVector> = Vec::new();
    let mut slot: HashMap<BinaryVector, usize> = HashMap::new();
    let mut pairs = Vec::new();
    for i in 0..size {
        for j in i + 1..size {
            let delta = p.column(i) ^ p.column(j);
            let k = *slot.entry(delta.clone()).or_insert_with(|| {
                unique.push(delta);
                unique.len() - 1
            });
            pairs.push((i, j, k));
        }
    }
    let priced = unique.par_iter().map(&cost).collect::<Result<Vec<_>>>()?;
    let mut rows = vec![vec![0u64; size]; size];
    for (i, j, k) in pairs {
        rows[i][j] = priced[k];
        rows[j][i] = priced[k];
    }
    CostMatrix::new(rows)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OrderMode {
    /// Exact up to [`EXACT_CROSSOVER`] middle nodes, heuristic above.
    #[default]
    Auto,
    Exact,
    Heuristic,
    /// Columns in their natural order (the linear-path circuit).
    Identity,
}

impl fmt::Display for OrderMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OrderMode::Auto => "auto",
            OrderMode::Exact => "exact",
            OrderMode::Heuristic => "heuristic",
            OrderMode::Identity => "identity",
        })
    }
}

impl FromStr for OrderMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(OrderMode::Auto),
            "exact" => Ok(OrderMode::Exact),
            "heuristic" => Ok(OrderMode::Heuristic),
            "identity" => Ok(OrderMode::Identity),
            other => Err(Error::InputSpec(format!("unknown order mode {other:?}"))),
        }
    }
}

/// A path over all columns with `sigma[0] = 0` and `sigma[last] = last`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tour {
    pub sigma: Vec<usize>,
    pub total_cost: u64,
}

impl Tour {
    /// Validates `sigma` and prices it.
    pub fn new(sigma: Vec<usize>, costs: &CostMatrix) -> Result<Self> {
        let size = costs.size();
        if sigma.len() != size {
            return Err(Error::Tour(format!("expected {size} nodes, got {}", sigma.len())));
        }
        if sigma[0] != 0 || sigma[size - 1] != size - 1 {
            return Err(Error::Tour("endpoints must stay at the zero columns".into()));
        }
        let mut seen = vec![false; size];
        for &s in &sigma {
            if s >= size || std::mem::replace(&mut seen[s], true) {
                return Err(Error::Tour(format!("{sigma:?} is not a permutation")));
            }
        }
        let total_cost = costs.path_cost(&sigma);
        Ok(Self { sigma, total_cost })
    }

    pub fn identity(costs: &CostMatrix) -> Self {
        Self::new((0..costs.size()).collect(), costs).expect("identity is a valid tour")
    }

    /// `L + 2` nodes.
    pub fn len(&self) -> usize {
        self.sigma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigma.is_empty()
    }
}

pub fn solve_tsp(costs: &CostMatrix, mode: OrderMode) -> Result<Tour> {
    let middle = costs.size() - 2;
    match mode {
        OrderMode::Identity => Ok(Tour::identity(costs)),
        OrderMode::Exact => held_karp(costs),
        OrderMode::Heuristic => Ok(two_opt(costs)),
        OrderMode::Auto if middle <= EXACT_CROSSOVER => held_karp(costs),
        OrderMode::Auto => Ok(two_opt(costs)),
    }
}

/// Exact fixed-endpoint path by dynamic programming over subsets; ties go to
/// the lexicographically smallest `sigma`.
pub fn held_karp(costs: &CostMatrix) -> Result<Tour> {
    let size = costs.size();
    let m = size - 2;
    if m > MAX_EXACT_NODES {
        return Err(Error::CostMatrix(format!("{m} middle nodes exceed the exact limit {MAX_EXACT_NODES}")));
    }
    let end = size - 1;
    let node = |k: usize| k + 1;
    // rest[r][k]: cheapest way from middle node k through the set r (k ∉ r) to the end.
    let full = (1usize << m) - 1;
    let mut rest = vec![u64::MAX; (1usize << m) * m.max(1)];
    for r in 0..=full {
        for k in 0..m {
            if r >> k & 1 == 1 {
                continue;
            }
            let best = if r == 0 {
                costs.get(node(k), end)
            } else {
                ones(r)
                    .map(|j| costs.get(node(k), node(j)) + rest[(r & !(1 << j)) * m + j])
                    .min()
                    .expect("r is non-empty")
            };
            rest[r * m + k] = best;
        }
    }
    let through = |from: usize, r: usize, j: usize| costs.get(from, node(j)) + rest[(r & !(1 << j)) * m + j];

    // Walk forward taking the smallest node that stays optimal.
    let mut sigma = vec![0];
    let mut r = full;
    let mut from = 0;
    while r != 0 {
        let best = ones(r).map(|j| through(from, r, j)).min().expect("r is non-empty");
        let j = ones(r).find(|&j| through(from, r, j) == best).expect("minimum attained");
        sigma.push(node(j));
        r &= !(1 << j);
        from = node(j);
    }
    sigma.push(end);
    Tour::new(sigma, costs)
}

fn ones(mut r: usize) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        if r == 0 {
            return None;
        }
        let j = r.trailing_zeros() as usize;
        r &= r - 1;
        Some(j)
    })
}

/// Nearest-neighbour construction followed by first-improvement 2-opt. Falls back
/// to the identity order when that is no worse, so the result never loses to it.
pub fn two_opt(costs: &CostMatrix) -> Tour {
    let size = costs.size();
    let end = size - 1;
    let mut sigma = vec![0];
    let mut left: Vec<usize> = (1..end).collect();
    while !left.is_empty() {
        let from = *sigma.last().expect("starts non-empty");
        // min_by_key keeps the first (smallest) index on ties
        let (pos, _) = left
            .iter()
            .enumerate()
            .min_by_key(|(_, &j)| costs.get(from, j))
            .expect("left is non-empty");
        sigma.push(left.remove(pos));
    }
    sigma.push(end);

    let mut improved = true;
    while improved {
        improved = false;
        for i in 1..end {
            for k in i + 1..end {
                // reverse sigma[i..=k]
                let (a, b, c, d) = (sigma[i - 1], sigma[i], sigma[k], sigma[k + 1]);
                let before = costs.get(a, b) + costs.get(c, d);
                let after = costs.get(a, c) + costs.get(b, d);
                if after < before {
                    sigma[i..=k].reverse();
                    improved = true;
                }
            }
        }
    }
    let tour = Tour::new(sigma, costs).expect("construction yields a permutation");
    let identity = Tour::identity(costs);
    if identity.total_cost <= tour.total_cost {
        identity
    } else {
        tour
    }
}

/// `Δ_j = P_{:,σ(j)} ⊕ P_{:,σ(j+1)}` for `j = 0..=L`.
pub fn deltas(p: &PathMatrix, tour: &Tour) -> Result<Vec<BinaryVector>> {
    if tour.len() != p.len() {
        return Err(Error::Tour(format!("tour over {} nodes for a path of {}", tour.len(), p.len())));
    }
    Ok(tour.sigma.windows(2).map(|w| p.column(w[0]) ^ p.column(w[1])).collect())
}

//! Reproducible random test instances.
//!
//! A random instance is a random positive definite correlation matrix
//! masked to a random chordal pattern.
//!
//! * Pattern: vertices are inserted in a random order. Each new vertex
//!   picks a random earlier vertex `u` and joins a random clique inside
//!   `u`'s closed neighbourhood, taking each candidate with probability
//!   [`EDGE_PROB`] as long as it stays adjacent to everything taken so far.
//!   With probability [`ISOLATE_PROB`] it starts a new component instead.
//!   Every vertex is simplicial when inserted, so the pattern is chordal.
//! * Values: the Gram matrix of `n` random unit vectors in `2n` dimensions.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::graph::PatternGraph;
use crate::linalg::SymMatrix;
use crate::pattern::{DenseCorrMatrix, Label, PartialMatrix};

/// Probability of keeping a candidate neighbour.
pub const EDGE_PROB: f64 = 0.3;
/// Probability that a new vertex starts a new component.
pub const ISOLATE_PROB: f64 = 0.05;

/// Seeded generator used for all sampling.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random chordal graph on `n` vertices.
pub fn random_chordal_graph<R: Rng>(n: usize, rng: &mut R) -> PatternGraph {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut adj = vec![vec![false; n]; n];
    let mut edges = Vec::new();
    for (k, &v) in order.iter().enumerate() {
        if k == 0 || rng.gen_bool(ISOLATE_PROB) {
            continue;
        }
        let u = order[rng.gen_range(0..k)];
        let mut candidates: Vec<usize> = order[..k].iter().copied().filter(|&w| adj[u][w]).collect();
        candidates.shuffle(rng);
        let mut chosen = vec![u];
        for w in candidates {
            if rng.gen_bool(EDGE_PROB) && chosen.iter().all(|&c| adj[c][w]) {
                chosen.push(w);
            }
        }
        for c in chosen {
            adj[v][c] = true;
            adj[c][v] = true;
            edges.push((v, c));
        }
    }
    PatternGraph::from_edges(n, edges).expect("generated edges are valid")
}

/// Random positive definite correlation matrix: normalized Gram matrix of
/// `n` Gaussian vectors in `2n` dimensions.
pub fn random_correlation<R: Rng>(n: usize, rng: &mut R) -> SymMatrix {
    let dim = 2 * n.max(1);
    let vectors: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.into_iter().map(|x| x / norm).collect()
        })
        .collect();
    SymMatrix::from_upper(n, |i, j| {
        if i == j {
            1.0
        } else {
            let d: f64 = vectors[i].iter().zip(&vectors[j]).map(|(a, b)| a * b).sum();
            d.clamp(-0.999_999, 0.999_999)
        }
    })
}

/// Labels `v0, v1, …`.
pub fn default_labels(n: usize) -> Vec<Label> {
    (0..n)
        .map(|i| Label::new(format!("v{i}")).expect("generated label"))
        .collect()
}

/// A random chordal instance together with the full matrix it was masked
/// from.
#[derive(Debug, Clone)]
pub struct RandomInstance {
    pub partial: PartialMatrix,
    pub source: DenseCorrMatrix,
    pub pattern: PatternGraph,
}

pub fn random_instance<R: Rng>(n: usize, rng: &mut R) -> RandomInstance {
    let pattern = random_chordal_graph(n, rng);
    let values = random_correlation(n, rng);
    let labels = default_labels(n);
    let partial = PartialMatrix::from_entries(
        labels.clone(),
        pattern.edges().map(|(i, j)| (i, j, values.get(i, j))).collect::<Vec<_>>(),
    )
    .expect("sampled entries are valid");
    let source = DenseCorrMatrix::new(labels, values).expect("sampled matrix is valid");
    RandomInstance {
        partial,
        source,
        pattern,
    }
}

/// Instance reproducible from `(n, seed)`; used by `gen random`.
pub fn seeded_instance(n: usize, seed: u64) -> RandomInstance {
    random_instance(n, &mut rng_from_seed(seed))
}

/// Random instance with between `1` and `max_free` unspecified pairs.
pub fn instance_with_few_free<R: Rng>(max_free: usize, rng: &mut R) -> RandomInstance {
    loop {
        let n = rng.gen_range(3..=8);
        let inst = random_instance(n, rng);
        let free = inst.partial.unspecified().len();
        if (1..=max_free).contains(&free) {
            return inst;
        }
    }
}

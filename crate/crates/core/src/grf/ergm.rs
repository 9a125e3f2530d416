//! Undirected exponential random graph model with edge and two-star
//! statistics.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{ForwardSampler, GrfModel, SimConfig};
use crate::error::{Error, Result};
use crate::parallel::rng_from_seed;
use crate::stats::log_sum_exp;

/// Largest node count accepted by [`ergm_log_partition_bruteforce`].
pub const MAX_BRUTEFORCE_NODES: usize = 5;

/// Simple undirected graph stored as a dense symmetric adjacency matrix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Graph {
    n: usize,
    adj: Vec<u8>,
    degree: Vec<u32>,
}

impl Graph {
    pub fn empty(n: usize) -> Self {
        Self {
            n,
            adj: vec![0; n * n],
            degree: vec![0; n],
        }
    }

    /// Row-major `n × n` adjacency matrix of zeros and ones.
    pub fn from_adjacency(n: usize, adj: Vec<u8>) -> Result<Self> {
        if adj.len() != n * n {
            return Err(Error::invalid(format!(
                "adjacency matrix has {} entries (expected {})",
                adj.len(),
                n * n
            )));
        }
        for i in 0..n {
            if adj[i * n + i] != 0 {
                return Err(Error::invalid(format!("self-loop at node {i}")));
            }
            for j in 0..n {
                let v = adj[i * n + j];
                if v > 1 {
                    return Err(Error::invalid(format!("entry ({i},{j}) is {v}, not 0/1")));
                }
                if v != adj[j * n + i] {
                    return Err(Error::invalid(format!("adjacency not symmetric at ({i},{j})")));
                }
            }
        }
        let degree = (0..n)
            .map(|i| adj[i * n..(i + 1) * n].iter().map(|&v| u32::from(v)).sum())
            .collect();
        Ok(Self { n, adj, degree })
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = Self::empty(n);
        for &(i, j) in edges {
            if i >= n || j >= n {
                return Err(Error::invalid(format!("edge ({i},{j}) outside 0..{n}")));
            }
            if i == j {
                return Err(Error::invalid(format!("self-loop at node {i}")));
            }
            if !g.has_edge(i, j) {
                g.set_edge(i, j, true);
            }
        }
        Ok(g)
    }

    pub fn nodes(&self) -> usize {
        self.n
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adj[i * self.n + j] == 1
    }

    pub fn degree(&self, i: usize) -> u32 {
        self.degree[i]
    }

    pub fn set_edge(&mut self, i: usize, j: usize, present: bool) {
        let was = self.has_edge(i, j);
        if was == present {
            return;
        }
        let v = u8::from(present);
        self.adj[i * self.n + j] = v;
        self.adj[j * self.n + i] = v;
        if present {
            self.degree[i] += 1;
            self.degree[j] += 1;
        } else {
            self.degree[i] -= 1;
            self.degree[j] -= 1;
        }
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in i + 1..self.n {
                if self.has_edge(i, j) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub fn adjacency(&self) -> &[u8] {
        &self.adj
    }
}

/// `(s1, s2)`: edge count and two-star count `Σ_v C(deg v, 2)`.
pub fn ergm_suff_stats(graph: &Graph) -> (u64, u64) {
    let twice_edges: u64 = graph.degree.iter().map(|&d| u64::from(d)).sum();
    let two_stars = graph
        .degree
        .iter()
        .map(|&d| u64::from(d) * u64::from(d.saturating_sub(1)) / 2)
        .sum();
    (twice_edges / 2, two_stars)
}

fn stats_vec(graph: &Graph) -> Vec<f64> {
    let (s1, s2) = ergm_suff_stats(graph);
    vec![s1 as f64, s2 as f64]
}

/// Systematic-scan dyad-toggle Gibbs sampler.
struct ErgmChain {
    graph: Graph,
    /// `P(edge | other-edge degree sum = k)`.
    p_edge: Vec<f64>,
    pos: (usize, usize),
}

impl ErgmChain {
    fn new(theta: [f64; 2], n: usize, rng: &mut impl Rng) -> Self {
        let mut graph = Graph::empty(n);
        for i in 0..n {
            for j in i + 1..n {
                if rng.random::<bool>() {
                    graph.set_edge(i, j, true);
                }
            }
        }
        let max_k = 2 * n.saturating_sub(2);
        let p_edge = (0..=max_k)
            .map(|k| 1.0 / (1.0 + (-(theta[0] + theta[1] * k as f64)).exp()))
            .collect();
        Self {
            graph,
            p_edge,
            pos: (0, 1),
        }
    }

    fn advance(&mut self) {
        let n = self.graph.n;
        let (i, j) = self.pos;
        self.pos = if j + 1 < n {
            (i, j + 1)
        } else if i + 2 < n {
            (i + 1, i + 2)
        } else {
            (0, 1)
        };
    }

    fn update(&mut self, count: usize, rng: &mut impl Rng) {
        if self.graph.n < 2 {
            return;
        }
        for _ in 0..count {
            let (i, j) = self.pos;
            let present = u32::from(self.graph.has_edge(i, j));
            // Two-star change statistic of adding (i, j) to the graph without it.
            let k = (self.graph.degree(i) + self.graph.degree(j) - 2 * present) as usize;
            let on = rng.random::<f64>() < self.p_edge[k];
            self.graph.set_edge(i, j, on);
            self.advance();
        }
    }
}

fn gibbs_graphs(
    theta: [f64; 2],
    n: usize,
    burn_in: usize,
    lag: usize,
    k: usize,
    seed: u64,
) -> Vec<Graph> {
    let mut rng = rng_from_seed(seed);
    let mut chain = ErgmChain::new(theta, n, &mut rng);
    chain.update(burn_in, &mut rng);
    let mut out = Vec::with_capacity(k);
    for i in 0..k {
        if i > 0 {
            chain.update(lag, &mut rng);
        }
        out.push(chain.graph.clone());
    }
    out
}

/// `k` graphs from one dyad-toggle Gibbs chain; `burn_in` and `lag` count
/// single-dyad updates.
pub fn ergm_gibbs_forward(
    theta: [f64; 2],
    n: usize,
    burn_in: usize,
    lag: usize,
    k: usize,
    seed: u64,
) -> Result<Vec<Graph>> {
    if n < 2 {
        return Err(Error::invalid("an ERGM needs at least two nodes"));
    }
    if k == 0 {
        return Err(Error::invalid("need at least one draw"));
    }
    if !theta.iter().all(|t| t.is_finite()) {
        return Err(Error::invalid("theta must be finite"));
    }
    Ok(gibbs_graphs(theta, n, burn_in, lag, k, seed))
}

/// Exact `log Σ_y exp(θᵀ s(y))` over all `2^{n(n−1)/2}` graphs.
pub fn ergm_log_partition_bruteforce(theta: [f64; 2], n: usize) -> Result<f64> {
    if n > MAX_BRUTEFORCE_NODES {
        return Err(Error::Resource(format!(
            "brute-force partition limited to {MAX_BRUTEFORCE_NODES} nodes (got {n})"
        )));
    }
    let dyads: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect();
    let terms: Vec<f64> = (0..1u32 << dyads.len())
        .map(|code| {
            let edges: Vec<_> = dyads
                .iter()
                .enumerate()
                .filter(|(b, _)| code >> b & 1 == 1)
                .map(|(_, &e)| e)
                .collect();
            let (s1, s2) = ergm_suff_stats(&Graph::from_edges(n, &edges).expect("valid dyads"));
            theta[0] * s1 as f64 + theta[1] * s2 as f64
        })
        .collect();
    Ok(log_sum_exp(&terms))
}

struct ErgmSampler {
    theta: [f64; 2],
    n: usize,
    config: SimConfig,
}

impl ForwardSampler for ErgmSampler {
    fn draw_stats(&self, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
        Ok(gibbs_graphs(
            self.theta,
            self.n,
            self.config.burn_in,
            self.config.lag,
            count,
            seed,
        )
        .iter()
        .map(stats_vec)
        .collect())
    }

    fn draws_per_stream(&self) -> usize {
        self.config.draws_per_chain.max(1)
    }
}

#[derive(Debug, Clone)]
pub struct ErgmModel {
    data: Graph,
    config: SimConfig,
    obs: Vec<f64>,
}

impl ErgmModel {
    pub fn new(data: Graph, config: SimConfig) -> Result<Self> {
        if data.nodes() < 2 {
            return Err(Error::invalid("an ERGM needs at least two nodes"));
        }
        let obs = stats_vec(&data);
        Ok(Self { data, config, obs })
    }

    pub fn data(&self) -> &Graph {
        &self.data
    }
}

impl GrfModel for ErgmModel {
    fn name(&self) -> &str {
        "ergm"
    }

    fn dim(&self) -> usize {
        2
    }

    fn observed_stats(&self) -> &[f64] {
        &self.obs
    }

    fn sampler_at(&self, theta: &[f64]) -> Result<Box<dyn ForwardSampler + '_>> {
        if theta.len() != 2 || !theta.iter().all(|t| t.is_finite()) {
            return Err(Error::invalid("ERGM theta must be two finite values"));
        }
        Ok(Box::new(ErgmSampler {
            theta: [theta[0], theta[1]],
            n: self.data.nodes(),
            config: self.config,
        }))
    }

    fn exact_log_partition(&self, theta: &[f64]) -> Option<Result<f64>> {
        (self.data.nodes() <= MAX_BRUTEFORCE_NODES)
            .then(|| ergm_log_partition_bruteforce([theta[0], theta[1]], self.data.nodes()))
    }
}

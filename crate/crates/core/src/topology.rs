//! Directed reservoir connectivity: Watts–Strogatz small-world graphs with
//! random edge orientation, and directed Erdős–Rényi graphs as a control.
//!
//! Both families are parameterised by the presynaptic connection density
//! `beta`, so that the expected in-degree of every neuron is `beta * N`.

use std::collections::BTreeSet;

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::seeds;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GraphFamily {
    WattsStrogatz,
    ErdosRenyi,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologySpec {
    pub n_neurons: usize,
    /// Presynaptic connection density: expected in-degree over N.
    pub beta: f64,
    pub rewiring_prob: f64,
    pub family: GraphFamily,
    #[serde(default)]
    pub seed: u64,
}

impl TopologySpec {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.rewiring_prob) {
            return Err(Error::invalid(
                "topology",
                format!("rewiring_prob {} outside [0, 1]", self.rewiring_prob),
            ));
        }
        if !(self.beta > 0.0) {
            return Err(Error::invalid("topology", format!("beta {} must be > 0", self.beta)));
        }
        match self.family {
            GraphFamily::WattsStrogatz => {
                if self.n_neurons < 4 {
                    return Err(Error::invalid(
                        "topology",
                        format!("Watts-Strogatz needs N >= 4, got {}", self.n_neurons),
                    ));
                }
                if self.beta >= 0.5 {
                    return Err(Error::invalid(
                        "topology",
                        format!("beta {} must be < 0.5", self.beta),
                    ));
                }
                let k = self.lattice_degree();
                if k < 2 || k >= self.n_neurons {
                    return Err(Error::invalid(
                        "topology",
                        format!("lattice degree {k} must lie in [2, N)"),
                    ));
                }
            }
            GraphFamily::ErdosRenyi => {
                if self.n_neurons < 2 {
                    return Err(Error::invalid("topology", "Erdos-Renyi needs N >= 2"));
                }
                let q = self.edge_probability();
                if q > 1.0 {
                    return Err(Error::invalid(
                        "topology",
                        format!("edge probability {q} exceeds 1"),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Ring-lattice degree: `2 * beta * N` rounded to the nearest even integer.
    pub fn lattice_degree(&self) -> usize {
        2 * (self.beta * self.n_neurons as f64).round() as usize
    }

    /// Erdős–Rényi probability of each ordered pair, `beta * N / (N - 1)`.
    pub fn edge_probability(&self) -> f64 {
        self.beta * self.n_neurons as f64 / (self.n_neurons as f64 - 1.0)
    }
}

/// A directed graph without self-loops or parallel edges. Edges are kept
/// sorted by `(pre, post)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirectedGraph {
    n_neurons: usize,
    edges: Vec<(u32, u32)>,
}

impl DirectedGraph {
    pub fn from_edges(n_neurons: usize, mut edges: Vec<(u32, u32)>) -> Result<Self> {
        edges.sort_unstable();
        for w in edges.windows(2) {
            if w[0] == w[1] {
                return Err(Error::invalid("graph", format!("duplicate edge {:?}", w[0])));
            }
        }
        for &(a, b) in &edges {
            if a == b {
                return Err(Error::invalid("graph", format!("self-loop at {a}")));
            }
            if a as usize >= n_neurons || b as usize >= n_neurons {
                return Err(Error::invalid("graph", format!("edge ({a}, {b}) out of range")));
            }
        }
        Ok(Self { n_neurons, edges })
    }

    pub fn n_neurons(&self) -> usize {
        self.n_neurons
    }

    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn in_degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.n_neurons];
        for &(_, post) in &self.edges {
            d[post as usize] += 1;
        }
        d
    }

    pub fn out_degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.n_neurons];
        for &(pre, _) in &self.edges {
            d[pre as usize] += 1;
        }
        d
    }

    /// SHA-256 over the node count and the sorted edge list.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.n_neurons as u64).to_le_bytes());
        for &(a, b) in &self.edges {
            h.update(a.to_le_bytes());
            h.update(b.to_le_bytes());
        }
        hex::encode(h.finalize())
    }
}

pub fn generate(spec: &TopologySpec) -> Result<DirectedGraph> {
    match spec.family {
        GraphFamily::WattsStrogatz => generate_watts_strogatz(spec),
        GraphFamily::ErdosRenyi => generate_erdos_renyi(spec),
    }
}

pub fn generate_watts_strogatz(spec: &TopologySpec) -> Result<DirectedGraph> {
    generate_watts_strogatz_with_retention(spec, 0.5)
}

/// Watts–Strogatz generation where each direction of every undirected edge is
/// kept independently with probability `retention` (0.5 in normal use; 1.0
/// keeps both directions).
pub fn generate_watts_strogatz_with_retention(
    spec: &TopologySpec,
    retention: f64,
) -> Result<DirectedGraph> {
    if spec.family != GraphFamily::WattsStrogatz {
        return Err(Error::invalid("topology", "expected the WattsStrogatz family"));
    }
    spec.validate()?;
    if !(0.0..=1.0).contains(&retention) {
        return Err(Error::invalid("topology", format!("retention {retention} outside [0, 1]")));
    }
    let n = spec.n_neurons;
    let half_k = spec.lattice_degree() / 2;
    let mut rng = seeds::rng(seeds::derive(spec.seed, "watts-strogatz"));

    let mut adj: Vec<BTreeSet<u32>> = vec![BTreeSet::new(); n];
    for i in 0..n {
        for j in 1..=half_k {
            let t = (i + j) % n;
            adj[i].insert(t as u32);
            adj[t].insert(i as u32);
        }
    }

    // Rewire lattice edge (i, i+j) to (i, u), u uniform over the nodes that
    // are neither i nor already adjacent to i (rejection sampling).
    for j in 1..=half_k {
        for i in 0..n {
            let t = ((i + j) % n) as u32;
            if !rng.random_bool(spec.rewiring_prob) {
                continue;
            }
            if !adj[i].contains(&t) || adj[i].len() >= n - 1 {
                continue;
            }
            let u = loop {
                let u = rng.random_range(0..n as u32);
                if u as usize != i && !adj[i].contains(&u) {
                    break u;
                }
            };
            adj[i].remove(&t);
            adj[t as usize].remove(&(i as u32));
            adj[i].insert(u);
            adj[u as usize].insert(i as u32);
        }
    }

    let mut edges = Vec::new();
    for (a, nbrs) in adj.iter().enumerate() {
        for &b in nbrs.range(a as u32 + 1..) {
            if rng.random_bool(retention) {
                edges.push((a as u32, b));
            }
            if rng.random_bool(retention) {
                edges.push((b, a as u32));
            }
        }
    }
    DirectedGraph::from_edges(n, edges)
}

pub fn generate_erdos_renyi(spec: &TopologySpec) -> Result<DirectedGraph> {
    if spec.family != GraphFamily::ErdosRenyi {
        return Err(Error::invalid("topology", "expected the ErdosRenyi family"));
    }
    spec.validate()?;
    let n = spec.n_neurons;
    let q = spec.edge_probability();
    let mut rng = seeds::rng(seeds::derive(spec.seed, "erdos-renyi"));
    let mut edges = Vec::with_capacity((q * (n * (n - 1)) as f64 * 1.1) as usize);
    for i in 0..n as u32 {
        for j in 0..n as u32 {
            if i != j && rng.random_bool(q) {
                edges.push((i, j));
            }
        }
    }
    DirectedGraph::from_edges(n, edges)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DegreeSummary {
    pub mean: f64,
    pub min: usize,
    pub max: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DegreeStats {
    pub n_neurons: usize,
    pub n_edges: usize,
    pub in_degree: DegreeSummary,
    pub out_degree: DegreeSummary,
}

fn summarize(degrees: &[usize]) -> DegreeSummary {
    if degrees.is_empty() {
        return DegreeSummary { mean: 0.0, min: 0, max: 0 };
    }
    DegreeSummary {
        mean: degrees.iter().sum::<usize>() as f64 / degrees.len() as f64,
        min: *degrees.iter().min().unwrap(),
        max: *degrees.iter().max().unwrap(),
    }
}

pub fn degree_stats(graph: &DirectedGraph) -> DegreeStats {
    DegreeStats {
        n_neurons: graph.n_neurons(),
        n_edges: graph.n_edges(),
        in_degree: summarize(&graph.in_degrees()),
        out_degree: summarize(&graph.out_degrees()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ws(n: usize, beta: f64, p: f64, seed: u64) -> TopologySpec {
        TopologySpec {
            n_neurons: n,
            beta,
            rewiring_prob: p,
            family: GraphFamily::WattsStrogatz,
            seed,
        }
    }

    fn er(n: usize, beta: f64, seed: u64) -> TopologySpec {
        TopologySpec {
            n_neurons: n,
            beta,
            rewiring_prob: 0.0,
            family: GraphFamily::ErdosRenyi,
            seed,
        }
    }

    #[test]
    fn ring_lattice_keeps_degree_four() {
        let g = generate_watts_strogatz_with_retention(&ws(10, 0.2, 0.0, 1), 1.0).unwrap();
        assert!(g.in_degrees().iter().all(|&d| d == 4));
        assert!(g.out_degrees().iter().all(|&d| d == 4));
        let stats = degree_stats(&g);
        // brute-force count of incoming edges per node
        let mut count = 0;
        for v in 0..10u32 {
            count += g.edges().iter().filter(|e| e.1 == v).count();
        }
        assert_eq!(stats.in_degree.mean, count as f64 / 10.0);
        assert_eq!(stats.in_degree.mean, 4.0);
    }

    #[test]
    fn lattice_in_degree_is_2_beta_n_when_unrewired() {
        for &(n, beta) in &[(50, 0.2), (40, 0.3), (30, 0.1)] {
            let spec = ws(n, beta, 0.0, 3);
            let k = spec.lattice_degree();
            let g = generate_watts_strogatz_with_retention(&spec, 1.0).unwrap();
            assert!(g.in_degrees().iter().all(|&d| d == k));
        }
    }

    #[test]
    fn rejects_degenerate_lattices() {
        assert!(generate_watts_strogatz(&ws(3, 0.2, 0.2, 0)).is_err());
        assert!(generate_watts_strogatz(&ws(10, 0.04, 0.2, 0)).is_err()); // k = 0
        assert!(generate_watts_strogatz(&ws(10, 0.5, 0.2, 0)).is_err());
        assert!(generate_watts_strogatz(&ws(10, 0.2, 1.5, 0)).is_err());
        assert!(generate_erdos_renyi(&er(10, 0.95, 0)).is_err()); // q > 1
        assert!(generate_erdos_renyi(&ws(10, 0.2, 0.2, 0)).is_err());
    }

    #[test]
    fn complete_erdos_renyi_when_q_is_one() {
        let g = generate_erdos_renyi(&er(2, 0.5, 9)).unwrap();
        assert_eq!(g.edges(), &[(0, 1), (1, 0)]);
        let spec = er(1000, 0.3, 0);
        assert!((spec.edge_probability() - 300.0 / 999.0).abs() < 1e-15);
        assert!((spec.edge_probability() - 0.3003).abs() < 1e-4);
    }

    #[test]
    fn degree_stats_edge_cases() {
        let empty = DirectedGraph::from_edges(4, vec![]).unwrap();
        let s = degree_stats(&empty);
        assert_eq!(s.in_degree, DegreeSummary { mean: 0.0, min: 0, max: 0 });
        assert_eq!(s.out_degree, DegreeSummary { mean: 0.0, min: 0, max: 0 });

        let mut edges = vec![];
        for a in 0..5u32 {
            for b in 0..5u32 {
                if a != b {
                    edges.push((a, b));
                }
            }
        }
        let full = DirectedGraph::from_edges(5, edges).unwrap();
        assert_eq!(degree_stats(&full).in_degree.mean, 4.0);
    }

    #[test]
    fn graph_rejects_bad_edges() {
        assert!(DirectedGraph::from_edges(3, vec![(0, 0)]).is_err());
        assert!(DirectedGraph::from_edges(3, vec![(0, 1), (0, 1)]).is_err());
        assert!(DirectedGraph::from_edges(3, vec![(0, 3)]).is_err());
    }

    #[test]
    fn same_seed_same_edges() {
        let a = generate_watts_strogatz(&ws(200, 0.2, 0.2, 11)).unwrap();
        let b = generate_watts_strogatz(&ws(200, 0.2, 0.2, 11)).unwrap();
        let c = generate_watts_strogatz(&ws(200, 0.2, 0.2, 12)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.edges(), c.edges());
        let a = generate_erdos_renyi(&er(200, 0.2, 11)).unwrap();
        let b = generate_erdos_renyi(&er(200, 0.2, 11)).unwrap();
        assert_eq!(a.digest(), b.digest());
    }

    #[test]
    fn rewiring_preserves_undirected_edge_count() {
        let spec = ws(100, 0.2, 0.5, 4);
        let g = generate_watts_strogatz_with_retention(&spec, 1.0).unwrap();
        assert_eq!(g.n_edges(), 100 * spec.lattice_degree());
        // both directions kept, so the graph is symmetric
        let set: BTreeSet<_> = g.edges().iter().copied().collect();
        assert!(g.edges().iter().all(|&(a, b)| set.contains(&(b, a))));
    }
}

//! Device graphs, round-robin activation and per-round neighbor selection.

use std::collections::BTreeSet;

use rand::seq::index;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::{self, Stream};
use crate::Scheme;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TopologyError {
    #[error("edge ({0}, {0}) is a self-loop")]
    SelfLoop(usize),
    #[error("node {node} is out of range for a {count}-node topology")]
    OutOfRange { node: usize, count: usize },
    #[error("custom topology requires an edge list")]
    MissingEdges,
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
    #[error("invalid neighbor request: {0}")]
    InvalidNeighbors(String),
    #[error("node {0} has no neighbors")]
    NoNeighbors(usize),
    #[error("topology is not connected; components: {components:?}")]
    Disconnected { components: Vec<Vec<usize>> },
    #[error("topology has no nodes")]
    Empty,
}

pub type Result<T> = std::result::Result<T, TopologyError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TopologyKind {
    /// Device 0 is the hub.
    Star,
    FullMesh,
    Ring,
    Custom,
}

/// Undirected device graph over ids `0..node_count`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topology {
    kind: TopologyKind,
    adjacency: Vec<Vec<usize>>,
}

impl Topology {
    pub fn star(k: usize) -> Self {
        let edges: Vec<_> = (1..k).map(|d| (0, d)).collect();
        Self::build(TopologyKind::Star, k, &edges)
    }

    pub fn full_mesh(k: usize) -> Self {
        let mut edges = Vec::new();
        for a in 0..k {
            for b in a + 1..k {
                edges.push((a, b));
            }
        }
        Self::build(TopologyKind::FullMesh, k, &edges)
    }

    /// Cycle `0 - 1 - ... - (k-1) - 0`. Two nodes give a single edge.
    pub fn ring(k: usize) -> Self {
        let edges: Vec<_> = if k < 2 {
            Vec::new()
        } else {
            (0..k).map(|a| (a, (a + 1) % k)).collect()
        };
        Self::build(TopologyKind::Ring, k, &edges)
    }

    /// Undirected edge list; duplicates are merged.
    pub fn custom(k: usize, edges: &[(usize, usize)]) -> Result<Self> {
        for &(a, b) in edges {
            if a == b {
                return Err(TopologyError::SelfLoop(a));
            }
            for node in [a, b] {
                if node >= k {
                    return Err(TopologyError::OutOfRange { node, count: k });
                }
            }
        }
        Ok(Self::build(TopologyKind::Custom, k, edges))
    }

    pub fn from_kind(kind: TopologyKind, k: usize, edges: Option<&[(usize, usize)]>) -> Result<Self> {
        match kind {
            TopologyKind::Star => Ok(Self::star(k)),
            TopologyKind::FullMesh => Ok(Self::full_mesh(k)),
            TopologyKind::Ring => Ok(Self::ring(k)),
            TopologyKind::Custom => Self::custom(k, edges.ok_or(TopologyError::MissingEdges)?),
        }
    }

    fn build(kind: TopologyKind, k: usize, edges: &[(usize, usize)]) -> Self {
        let mut sets = vec![BTreeSet::new(); k];
        for &(a, b) in edges {
            if a != b {
                sets[a].insert(b);
                sets[b].insert(a);
            }
        }
        Self {
            kind,
            adjacency: sets.into_iter().map(|s| s.into_iter().collect()).collect(),
        }
    }

    pub fn kind(&self) -> TopologyKind {
        self.kind
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    /// Sorted neighbor ids.
    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.adjacency[node]
    }

    pub fn degree(&self, node: usize) -> usize {
        self.adjacency[node].len()
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (a, adj) in self.adjacency.iter().enumerate() {
            out.extend(adj.iter().filter(|&&b| b > a).map(|&b| (a, b)));
        }
        out
    }

    /// Connected components, each sorted, ordered by smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let k = self.node_count();
        let mut seen = vec![false; k];
        let mut out = Vec::new();
        for start in 0..k {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            let mut stack = vec![start];
            let mut comp = Vec::new();
            while let Some(v) = stack.pop() {
                comp.push(v);
                for &w in &self.adjacency[v] {
                    if !seen[w] {
                        seen[w] = true;
                        stack.push(w);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }
}

/// Checks that a topology can carry the scheme.
///
/// CL and FL reach the center through the access network, so any non-empty
/// device graph is accepted. CFL needs a connected graph in which every
/// device has at least one neighbor.
pub fn validate_topology(topology: &Topology, scheme: Scheme) -> Result<()> {
    let k = topology.node_count();
    if k == 0 {
        return Err(TopologyError::Empty);
    }
    if scheme != Scheme::Cfl {
        return Ok(());
    }
    let components = topology.components();
    if components.len() > 1 {
        return Err(TopologyError::Disconnected { components });
    }
    if let Some(isolated) = (0..k).find(|&v| topology.degree(v) == 0) {
        return Err(TopologyError::NoNeighbors(isolated));
    }
    Ok(())
}

/// Active device ids per round (each sorted).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActiveSchedule {
    rounds: Vec<Vec<usize>>,
}

impl ActiveSchedule {
    pub fn rounds(&self) -> &[Vec<usize>] {
        &self.rounds
    }

    /// Active set of round `t` (0-based).
    pub fn round(&self, t: usize) -> &[usize] {
        &self.rounds[t]
    }

    pub fn len(&self) -> usize {
        self.rounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rounds.is_empty()
    }

    /// How often each id in `0..devices` is active.
    pub fn activation_counts(&self, devices: usize) -> Vec<usize> {
        let mut counts = vec![0; devices];
        for r in &self.rounds {
            for &d in r {
                counts[d] += 1;
            }
        }
        counts
    }
}

/// Round `t` activates `{(t*active + i) mod devices : i < active}`.
pub fn round_robin_schedule(devices: usize, active: usize, rounds: usize) -> Result<ActiveSchedule> {
    let pool: Vec<usize> = (0..devices).collect();
    round_robin_over(&pool, active, rounds)
}

/// Round-robin over an explicit pool of device ids (e.g. only devices that
/// hold data). Positions rotate through `pool` in order.
pub fn round_robin_over(pool: &[usize], active: usize, rounds: usize) -> Result<ActiveSchedule> {
    if active == 0 || active > pool.len() {
        return Err(TopologyError::InvalidSchedule(format!(
            "active_per_round must be in 1..={}, got {active}",
            pool.len()
        )));
    }
    let p = pool.len();
    let rounds = (0..rounds)
        .map(|t| {
            let mut ids: Vec<usize> = (0..active).map(|i| pool[(t * active + i) % p]).collect();
            ids.sort_unstable();
            ids
        })
        .collect();
    Ok(ActiveSchedule { rounds })
}

/// Up to `count` distinct neighbors of `node` for round `round`, drawn
/// uniformly without replacement from a stream keyed on
/// `(seed, node, round)`. Returned sorted.
pub fn select_neighbors(
    topology: &Topology,
    node: usize,
    round: usize,
    count: usize,
    seed: u64,
) -> Result<Vec<usize>> {
    if count == 0 {
        return Err(TopologyError::InvalidNeighbors("N must be at least 1".into()));
    }
    if node >= topology.node_count() {
        return Err(TopologyError::OutOfRange {
            node,
            count: topology.node_count(),
        });
    }
    let adj = topology.neighbors(node);
    if adj.is_empty() {
        return Err(TopologyError::NoNeighbors(node));
    }
    let take = count.min(adj.len());
    let mut rng = rng::keyed(seed, Stream::Neighbors, node as u64, round as u64);
    let mut picked: Vec<usize> = index::sample(&mut rng, adj.len(), take)
        .into_iter()
        .map(|i| adj[i])
        .collect();
    picked.sort_unstable();
    Ok(picked)
}

//! Exact transportation solver: successive shortest augmenting paths on the
//! bipartite flow network `source -> pool items -> selected slots -> sink`.
//!
//! With integer supplies and demands the transportation polytope has
//! integral vertices, so unit augmentations reach an optimal vertex. Meant
//! for small instances; it is the independent check on the closed form.

use super::{cluster_sizes, row_distance};
use crate::feature_store::FeaturePool;
use crate::matching::SelectionResult;
use crate::{Error, Result};

/// Largest pool [`emd_lp_oracle`] accepts.
pub const ORACLE_CAP: usize = 64;

const EPS: f64 = 1e-12;

#[derive(Debug, Clone)]
struct Edge {
    to: usize,
    rev: usize,
    cap: i64,
    cost: f64,
}

struct Network {
    adj: Vec<Vec<Edge>>,
}

impl Network {
    fn new(nodes: usize) -> Self {
        Self {
            adj: vec![Vec::new(); nodes],
        }
    }

    fn add_edge(&mut self, from: usize, to: usize, cap: i64, cost: f64) {
        let rev_from = self.adj[to].len();
        let rev_to = self.adj[from].len();
        self.adj[from].push(Edge { to, rev: rev_from, cap, cost });
        self.adj[to].push(Edge {
            to: from,
            rev: rev_to,
            cap: 0,
            cost: -cost,
        });
    }

    /// Bellman-Ford shortest path on the residual graph; returns the
    /// predecessor edge of every reached node.
    fn shortest_path(&self, source: usize) -> Vec<Option<(usize, usize)>> {
        let nodes = self.adj.len();
        let mut dist = vec![f64::INFINITY; nodes];
        let mut prev = vec![None; nodes];
        dist[source] = 0.0;
        for _ in 0..nodes {
            let mut changed = false;
            for u in 0..nodes {
                if dist[u] == f64::INFINITY {
                    continue;
                }
                for (k, e) in self.adj[u].iter().enumerate() {
                    if e.cap > 0 && dist[u] + e.cost < dist[e.to] - EPS {
                        dist[e.to] = dist[u] + e.cost;
                        prev[e.to] = Some((u, k));
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        prev
    }

    /// Pushes `amount` units from `source` to `sink` along cheapest paths.
    fn min_cost_flow(&mut self, source: usize, sink: usize, amount: i64) -> Result<()> {
        let mut sent = 0;
        while sent < amount {
            let prev = self.shortest_path(source);
            if prev[sink].is_none() {
                return Err(Error::invalid("transport problem is infeasible"));
            }
            let mut push = amount - sent;
            let mut v = sink;
            while let Some((u, k)) = prev[v] {
                push = push.min(self.adj[u][k].cap);
                v = u;
            }
            let mut v = sink;
            while let Some((u, k)) = prev[v] {
                self.adj[u][k].cap -= push;
                let (to, rev) = (self.adj[u][k].to, self.adj[u][k].rev);
                self.adj[to][rev].cap += push;
                v = u;
            }
            sent += push;
        }
        Ok(())
    }
}

/// Minimum-cost transport of integer `supply` (rows) to integer `demand`
/// (columns) under `cost[i][j]`. Returns the optimal cost and flow matrix.
pub fn min_cost_transport(supply: &[u32], demand: &[u32], cost: &[Vec<f64>]) -> Result<(f64, Vec<Vec<u32>>)> {
    let (rows, cols) = (supply.len(), demand.len());
    let total: u64 = supply.iter().map(|&s| u64::from(s)).sum();
    if total != demand.iter().map(|&d| u64::from(d)).sum::<u64>() {
        return Err(Error::invalid("supply and demand totals differ"));
    }
    if cost.len() != rows || cost.iter().any(|r| r.len() != cols) {
        return Err(Error::invalid("cost matrix shape does not match supply and demand"));
    }
    let source = rows + cols;
    let sink = source + 1;
    let mut net = Network::new(rows + cols + 2);
    for (i, &s) in supply.iter().enumerate() {
        net.add_edge(source, i, i64::from(s), 0.0);
    }
    for (i, row) in cost.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            net.add_edge(i, rows + j, i64::from(supply[i]), c);
        }
    }
    for (j, &d) in demand.iter().enumerate() {
        net.add_edge(rows + j, sink, i64::from(d), 0.0);
    }
    net.min_cost_flow(source, sink, total as i64)?;

    let mut flow = vec![vec![0u32; cols]; rows];
    let mut value = 0.0;
    for (i, row) in flow.iter_mut().enumerate() {
        for e in &net.adj[i] {
            if e.to >= rows && e.to < rows + cols {
                let j = e.to - rows;
                let used = i64::from(supply[i]) - e.cap;
                row[j] = used as u32;
                value += used as f64 * cost[i][j];
            }
        }
    }
    Ok((value, flow))
}

/// Earth mover's distance by solving the transportation problem exactly:
/// pool items carry mass `1/N`, selected slot `j` carries `|C_j| / N`, and
/// moving mass costs Euclidean distance. Scaled by `N` this is an integer
/// problem with unit supplies.
pub fn emd_lp_oracle(pool: &FeaturePool, selection: &SelectionResult) -> Result<f64> {
    if pool.n() > ORACLE_CAP {
        return Err(Error::TooLarge {
            n: pool.n(),
            cap: ORACLE_CAP,
        });
    }
    let demand: Vec<u32> = cluster_sizes(pool, selection)?.into_iter().map(|c| c as u32).collect();
    let supply = vec![1u32; pool.n()];
    let cost: Vec<Vec<f64>> = pool
        .rows()
        .map(|f| selection.indices.iter().map(|&s| row_distance(f, pool.row(s))).collect())
        .collect();
    let (value, _) = min_cost_transport(&supply, &demand, &cost)?;
    Ok(value / pool.n() as f64)
}

//! Dinic max-flow on real capacities.

use std::collections::VecDeque;

#[derive(Debug, Clone)]
struct Edge {
    to: usize,
    cap: f64,
    initial: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct FlowNetwork {
    adj: Vec<Vec<usize>>,
    edges: Vec<Edge>,
    eps: f64,
    level: Vec<i32>,
    cursor: Vec<usize>,
}

impl FlowNetwork {
    /// Residual capacities at or below `eps` count as saturated.
    pub fn new(nodes: usize, eps: f64) -> Self {
        FlowNetwork {
            adj: vec![Vec::new(); nodes],
            edges: Vec::new(),
            eps,
            level: vec![0; nodes],
            cursor: vec![0; nodes],
        }
    }

    /// Adds `u -> v` and returns its handle for [`FlowNetwork::flow`].
    pub fn add_edge(&mut self, u: usize, v: usize, cap: f64) -> usize {
        let id = self.edges.len();
        self.edges.push(Edge {
            to: v,
            cap,
            initial: cap,
        });
        self.edges.push(Edge {
            to: u,
            cap: 0.0,
            initial: 0.0,
        });
        self.adj[u].push(id);
        self.adj[v].push(id + 1);
        id
    }

    pub fn flow(&self, edge: usize) -> f64 {
        let e = &self.edges[edge];
        (e.initial - e.cap).max(0.0)
    }

    fn bfs(&mut self, s: usize, t: usize) -> bool {
        self.level.iter_mut().for_each(|l| *l = -1);
        self.level[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &id in &self.adj[u] {
                let e = &self.edges[id];
                if e.cap > self.eps && self.level[e.to] < 0 {
                    self.level[e.to] = self.level[u] + 1;
                    queue.push_back(e.to);
                }
            }
        }
        self.level[t] >= 0
    }

    fn dfs(&mut self, u: usize, t: usize, pushed: f64) -> f64 {
        if u == t {
            return pushed;
        }
        while self.cursor[u] < self.adj[u].len() {
            let id = self.adj[u][self.cursor[u]];
            let (to, cap) = (self.edges[id].to, self.edges[id].cap);
            if cap > self.eps && self.level[to] == self.level[u] + 1 {
                let got = self.dfs(to, t, pushed.min(cap));
                if got > 0.0 {
                    self.edges[id].cap -= got;
                    self.edges[id ^ 1].cap += got;
                    return got;
                }
            }
            self.cursor[u] += 1;
        }
        0.0
    }

    pub fn max_flow(&mut self, s: usize, t: usize) -> f64 {
        let mut total = 0.0;
        while self.bfs(s, t) {
            self.cursor.iter_mut().for_each(|c| *c = 0);
            loop {
                let f = self.dfs(s, t, f64::INFINITY);
                if f <= 0.0 {
                    break;
                }
                total += f;
            }
        }
        total
    }

    /// Largest source side of a minimum cut: every node that cannot reach
    /// `t` through unsaturated residual edges. Call after [`max_flow`].
    ///
    /// [`max_flow`]: FlowNetwork::max_flow
    pub fn maximal_source_side(&self, t: usize) -> Vec<bool> {
        // Walk backwards from t: u reaches t if some edge u->v has residual.
        let mut reaches = vec![false; self.adj.len()];
        reaches[t] = true;
        let mut queue = VecDeque::from([t]);
        while let Some(v) = queue.pop_front() {
            for &id in &self.adj[v] {
                // id is v->u; its pair id^1 is u->v.
                let u = self.edges[id].to;
                if !reaches[u] && self.edges[id ^ 1].cap > self.eps {
                    reaches[u] = true;
                    queue.push_back(u);
                }
            }
        }
        reaches.into_iter().map(|r| !r).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classic_small_network() {
        // s=0, t=5
        let mut g = FlowNetwork::new(6, 1e-12);
        g.add_edge(0, 1, 10.0);
        g.add_edge(0, 2, 10.0);
        g.add_edge(1, 2, 2.0);
        g.add_edge(1, 3, 4.0);
        g.add_edge(1, 4, 8.0);
        g.add_edge(2, 4, 9.0);
        g.add_edge(3, 5, 10.0);
        g.add_edge(4, 3, 6.0);
        g.add_edge(4, 5, 10.0);
        assert!((g.max_flow(0, 5) - 19.0).abs() < 1e-12);
    }

    #[test]
    fn maximal_cut_side_includes_indifferent_nodes() {
        // s -> a (1), a -> t (1): a can sit on either side; maximal side keeps it.
        let mut g = FlowNetwork::new(3, 1e-12);
        let e = g.add_edge(0, 1, 1.0);
        g.add_edge(1, 2, 1.0);
        assert_eq!(g.max_flow(0, 2), 1.0);
        assert_eq!(g.flow(e), 1.0);
        assert_eq!(g.maximal_source_side(2), vec![true, true, false]);
    }
}

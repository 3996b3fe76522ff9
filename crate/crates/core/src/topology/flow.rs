//! Unit-capacity vertex-split max flow.

use std::collections::VecDeque;

struct Arc {
    to: usize,
    cap: u32,
    rev: usize,
}

pub(crate) struct FlowNetwork {
    arcs: Vec<Vec<Arc>>,
}

impl FlowNetwork {
    pub(crate) fn new(nodes: usize) -> Self {
        FlowNetwork {
            arcs: (0..nodes).map(|_| Vec::new()).collect(),
        }
    }

    /// Returns a handle for reading the arc's flow later.
    pub(crate) fn add_arc(&mut self, from: usize, to: usize, cap: u32) -> (usize, usize) {
        let (fi, ti) = (self.arcs[from].len(), self.arcs[to].len() + usize::from(from == to));
        self.arcs[from].push(Arc { to, cap, rev: ti });
        self.arcs[to].push(Arc { to: from, cap: 0, rev: fi });
        (from, fi)
    }

    /// Flow currently carried by the arc created as `handle` with capacity `cap`.
    pub(crate) fn flow(&self, handle: (usize, usize), cap: u32) -> u32 {
        cap - self.arcs[handle.0][handle.1].cap
    }

    /// Edmonds-Karp; stops early once the flow exceeds `limit`.
    pub(crate) fn max_flow(&mut self, source: usize, sink: usize, limit: u32) -> u32 {
        let mut total = 0;
        while total <= limit {
            let mut parent: Vec<Option<(usize, usize)>> = vec![None; self.arcs.len()];
            let mut queue = VecDeque::from([source]);
            let mut seen = vec![false; self.arcs.len()];
            seen[source] = true;
            while let Some(u) = queue.pop_front() {
                if u == sink {
                    break;
                }
                for (i, arc) in self.arcs[u].iter().enumerate() {
                    if arc.cap > 0 && !seen[arc.to] {
                        seen[arc.to] = true;
                        parent[arc.to] = Some((u, i));
                        queue.push_back(arc.to);
                    }
                }
            }
            if !seen[sink] {
                break;
            }
            let mut bottleneck = u32::MAX;
            let mut v = sink;
            while let Some((u, i)) = parent[v] {
                bottleneck = bottleneck.min(self.arcs[u][i].cap);
                v = u;
            }
            let mut v = sink;
            while let Some((u, i)) = parent[v] {
                self.arcs[u][i].cap -= bottleneck;
                let rev = self.arcs[u][i].rev;
                self.arcs[v][rev].cap += bottleneck;
                v = u;
            }
            total += bottleneck;
        }
        total
    }

    /// Nodes reachable from `source` in the residual network.
    pub(crate) fn residual_reachable(&self, source: usize) -> Vec<bool> {
        let mut seen = vec![false; self.arcs.len()];
        seen[source] = true;
        let mut stack = vec![source];
        while let Some(u) = stack.pop() {
            for arc in &self.arcs[u] {
                if arc.cap > 0 && !seen[arc.to] {
                    seen[arc.to] = true;
                    stack.push(arc.to);
                }
            }
        }
        seen
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_disjoint_paths() {
        let mut net = FlowNetwork::new(4);
        net.add_arc(0, 1, 1);
        net.add_arc(0, 2, 1);
        net.add_arc(1, 3, 1);
        net.add_arc(2, 3, 1);
        net.add_arc(1, 2, 1);
        assert_eq!(net.max_flow(0, 3, 100), 2);
        let reach = net.residual_reachable(0);
        assert!(reach[0] && !reach[3]);
    }
}

//! Minimum-cost flow via successive shortest paths with node potentials.
//!
//! Capacities are integral, so augmenting along shortest paths yields an
//! integral optimum. Arc costs must be nonnegative (they are service costs
//! and penalties here), which lets the potentials start at zero and Dijkstra
//! handle every iteration. The struct is reusable: `clear` keeps the
//! allocated buffers, which matters in the solver loops where one network
//! is built per scenario.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::scalar::Scalar;

#[derive(Debug, Clone)]
struct Arc<T> {
    to: usize,
    residual: i64,
    cost: T,
}

#[derive(Debug, Clone)]
pub struct MinCostFlow<T> {
    n_nodes: usize,
    adj: Vec<Vec<usize>>,
    arcs: Vec<Arc<T>>,
    dist: Vec<T>,
    potential: Vec<T>,
    parent_arc: Vec<usize>,
    heap: BinaryHeap<HeapEntry<T>>,
}

#[derive(Clone, Debug)]
struct HeapEntry<T>(T, usize);

impl<T: Scalar> PartialEq for HeapEntry<T> {
    fn eq(&self, other: &Self) -> bool {
        self.0 == other.0 && self.1 == other.1
    }
}
impl<T: Scalar> Eq for HeapEntry<T> {}
impl<T: Scalar> PartialOrd for HeapEntry<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T: Scalar> Ord for HeapEntry<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on cost; ties broken on node id for determinism
        other
            .0
            .partial_cmp(&self.0)
            .expect("finite costs")
            .then_with(|| other.1.cmp(&self.1))
    }
}

impl<T: Scalar> MinCostFlow<T> {
    pub fn new(n_nodes: usize) -> Self {
        let mut flow = MinCostFlow {
            n_nodes: 0,
            adj: Vec::new(),
            arcs: Vec::new(),
            dist: Vec::new(),
            potential: Vec::new(),
            parent_arc: Vec::new(),
            heap: BinaryHeap::new(),
        };
        flow.clear(n_nodes);
        flow
    }

    /// Resets to an empty network with `n_nodes` nodes, keeping buffers.
    pub fn clear(&mut self, n_nodes: usize) {
        self.arcs.clear();
        for list in self.adj.iter_mut() {
            list.clear();
        }
        if self.adj.len() < n_nodes {
            self.adj.resize_with(n_nodes, Vec::new);
        }
        self.n_nodes = n_nodes;
    }

    /// Adds a forward arc and its zero-capacity reverse; returns the forward
    /// arc id. Costs must be nonnegative and finite.
    pub fn add_arc(&mut self, from: usize, to: usize, capacity: i64, cost: T) -> usize {
        debug_assert!(cost >= T::zero() && cost.is_finite());
        debug_assert!(from < self.n_nodes && to < self.n_nodes);
        let id = self.arcs.len();
        self.adj[from].push(id);
        self.arcs.push(Arc {
            to,
            residual: capacity,
            cost,
        });
        self.adj[to].push(id + 1);
        self.arcs.push(Arc {
            to: from,
            residual: 0,
            cost: -cost,
        });
        id
    }

    /// Flow pushed through a forward arc.
    pub fn flow_on(&self, arc_id: usize) -> i64 {
        self.arcs[arc_id + 1].residual
    }

    /// Sends up to `target` units from `source` to `sink`; returns the flow
    /// actually sent and its total cost. Costs are re-accumulated from the
    /// final arc flows, so the result does not drift with the number of
    /// augmentations.
    pub fn solve(&mut self, source: usize, sink: usize, target: i64) -> (i64, T) {
        let n = self.n_nodes;
        self.dist.resize(n, T::infinity());
        self.potential.resize(n, T::zero());
        self.parent_arc.resize(n, usize::MAX);
        self.potential[..n].fill(T::zero());
        let mut sent = 0i64;

        while sent < target {
            self.dist[..n].fill(T::infinity());
            self.parent_arc[..n].fill(usize::MAX);
            self.dist[source] = T::zero();
            self.heap.clear();
            self.heap.push(HeapEntry(T::zero(), source));
            while let Some(HeapEntry(d, u)) = self.heap.pop() {
                if d > self.dist[u] {
                    continue;
                }
                for &arc_id in &self.adj[u] {
                    let arc = &self.arcs[arc_id];
                    if arc.residual <= 0 {
                        continue;
                    }
                    // Reduced cost is nonnegative in exact arithmetic; clamp
                    // the float rounding so Dijkstra's invariant holds.
                    let reduced =
                        (arc.cost + self.potential[u] - self.potential[arc.to]).max(T::zero());
                    let candidate = d + reduced;
                    if candidate < self.dist[arc.to] {
                        self.dist[arc.to] = candidate;
                        self.parent_arc[arc.to] = arc_id;
                        self.heap.push(HeapEntry(candidate, arc.to));
                    }
                }
            }
            if self.parent_arc[sink] == usize::MAX {
                break;
            }
            for v in 0..n {
                if self.dist[v].is_finite() {
                    self.potential[v] = self.potential[v] + self.dist[v];
                }
            }
            // bottleneck along the path
            let mut bottleneck = target - sent;
            let mut v = sink;
            while v != source {
                let arc_id = self.parent_arc[v];
                bottleneck = bottleneck.min(self.arcs[arc_id].residual);
                v = self.arcs[arc_id ^ 1].to;
            }
            let mut v = sink;
            while v != source {
                let arc_id = self.parent_arc[v];
                self.arcs[arc_id].residual -= bottleneck;
                self.arcs[arc_id ^ 1].residual += bottleneck;
                v = self.arcs[arc_id ^ 1].to;
            }
            sent += bottleneck;
        }

        let mut cost = T::zero();
        for id in (0..self.arcs.len()).step_by(2) {
            let flow = self.arcs[id + 1].residual;
            if flow > 0 {
                cost = cost + T::from_f64_lossy(flow as f64) * self.arcs[id].cost;
            }
        }
        (sent, cost)
    }
}

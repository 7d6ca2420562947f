//! Augmenting-path max-flow with search-tree reuse (Boykov-Kolmogorov).
//!
//! Two search trees grow from the terminals; when they touch, the path is
//! augmented and the trees are repaired by re-adopting orphaned nodes instead
//! of being rebuilt. Capacities are exact 64-bit integers.

use std::collections::VecDeque;

const NONE: u32 = u32::MAX;
const TERMINAL: u32 = u32::MAX - 1;
const ORPHAN: u32 = u32::MAX - 2;

const FREE: u8 = 0;
const SOURCE: u8 = 1;
const SINK: u8 = 2;

#[derive(Clone, Debug, Default)]
pub struct FlowNetwork {
    first: Vec<u32>,
    // Net terminal capacity: positive towards the source, negative towards the sink.
    tr_cap: Vec<i64>,
    head: Vec<u32>,
    next: Vec<u32>,
    rcap: Vec<i64>,
    flow: i64,
    // Search state.
    tree: Vec<u8>,
    parent: Vec<u32>,
    ts: Vec<u32>,
    dist: Vec<u32>,
    active: Vec<bool>,
}

impl FlowNetwork {
    pub fn new(n_nodes: usize) -> Self {
        FlowNetwork {
            first: vec![NONE; n_nodes],
            tr_cap: vec![0; n_nodes],
            ..Default::default()
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.first.len()
    }

    pub fn n_arcs(&self) -> usize {
        self.head.len()
    }

    pub fn add_node(&mut self) -> usize {
        self.first.push(NONE);
        self.tr_cap.push(0);
        self.first.len() - 1
    }

    /// Adds `i -> j` with capacity `cap` and `j -> i` with capacity `rev_cap`.
    pub fn add_edge(&mut self, i: usize, j: usize, cap: i64, rev_cap: i64) {
        debug_assert!(cap >= 0 && rev_cap >= 0 && i != j);
        let a = self.head.len() as u32;
        self.head.push(j as u32);
        self.next.push(self.first[i]);
        self.rcap.push(cap);
        self.first[i] = a;
        self.head.push(i as u32);
        self.next.push(self.first[j]);
        self.rcap.push(rev_cap);
        self.first[j] = a + 1;
    }

    /// Adds terminal arcs `source -> i` and `i -> sink`. The common part of the
    /// two is routed straight through and counted as flow.
    pub fn add_tweights(&mut self, i: usize, source_cap: i64, sink_cap: i64) {
        debug_assert!(source_cap >= 0 && sink_cap >= 0);
        let t = &mut self.tr_cap[i];
        let (mut s, mut k) = (source_cap, sink_cap);
        if *t > 0 {
            s += *t;
        } else {
            k -= *t;
        }
        self.flow += s.min(k);
        *t = s - k;
    }

    pub fn flow(&self) -> i64 {
        self.flow
    }

    fn outgoing(&self, i: usize) -> ArcIter<'_> {
        ArcIter {
            next: &self.next,
            cur: self.first[i],
        }
    }

    /// Runs max-flow to completion and returns the flow value.
    pub fn maxflow(&mut self) -> i64 {
        let n = self.n_nodes();
        self.tree = vec![FREE; n];
        self.parent = vec![NONE; n];
        self.ts = vec![0; n];
        self.dist = vec![0; n];
        self.active = vec![false; n];
        let mut queue: VecDeque<u32> = VecDeque::new();
        let mut orphans: VecDeque<u32> = VecDeque::new();
        for i in 0..n {
            if self.tr_cap[i] != 0 {
                self.tree[i] = if self.tr_cap[i] > 0 { SOURCE } else { SINK };
                self.parent[i] = TERMINAL;
                self.dist[i] = 1;
                self.active[i] = true;
                queue.push_back(i as u32);
            }
        }
        let mut time: u32 = 0;

        while let Some(i) = queue.pop_front() {
            let i = i as usize;
            self.active[i] = false;
            if self.parent[i] == NONE {
                continue;
            }
            let Some((s_node, t_node, arc)) = self.grow(i, &mut queue) else {
                continue;
            };
            // The node may find further paths; look at it again next.
            if !self.active[i] {
                self.active[i] = true;
                queue.push_front(i as u32);
            }
            time += 1;
            self.augment(s_node, t_node, arc, &mut orphans);
            while let Some(o) = orphans.pop_front() {
                self.adopt(o as usize, time, &mut queue, &mut orphans);
            }
        }
        self.flow
    }

    /// Expands the tree at `i`; returns the connecting arc when the trees meet,
    /// oriented from the source-tree node to the sink-tree node.
    fn grow(&mut self, i: usize, queue: &mut VecDeque<u32>) -> Option<(usize, usize, usize)> {
        let from_source = self.tree[i] == SOURCE;
        let mut a = self.first[i];
        while a != NONE {
            let au = a as usize;
            let j = self.head[au] as usize;
            let cap = if from_source {
                self.rcap[au]
            } else {
                self.rcap[au ^ 1]
            };
            if cap > 0 {
                if self.parent[j] == NONE {
                    self.tree[j] = self.tree[i];
                    self.parent[j] = (au ^ 1) as u32;
                    self.ts[j] = self.ts[i];
                    self.dist[j] = self.dist[i] + 1;
                    if !self.active[j] {
                        self.active[j] = true;
                        queue.push_back(j as u32);
                    }
                } else if self.tree[j] != self.tree[i] {
                    return Some(if from_source {
                        (i, j, au)
                    } else {
                        (j, i, au ^ 1)
                    });
                } else if self.ts[j] <= self.ts[i] && self.dist[j] > self.dist[i] {
                    // Shorter route to the terminal through i.
                    self.parent[j] = (au ^ 1) as u32;
                    self.ts[j] = self.ts[i];
                    self.dist[j] = self.dist[i] + 1;
                }
            }
            a = self.next[au];
        }
        None
    }

    fn augment(&mut self, s_node: usize, t_node: usize, arc: usize, orphans: &mut VecDeque<u32>) {
        let mut bottleneck = self.rcap[arc];
        let mut v = s_node;
        while self.parent[v] != TERMINAL {
            let pa = self.parent[v] as usize;
            bottleneck = bottleneck.min(self.rcap[pa ^ 1]);
            v = self.head[pa] as usize;
        }
        bottleneck = bottleneck.min(self.tr_cap[v]);
        let mut v = t_node;
        while self.parent[v] != TERMINAL {
            let pa = self.parent[v] as usize;
            bottleneck = bottleneck.min(self.rcap[pa]);
            v = self.head[pa] as usize;
        }
        bottleneck = bottleneck.min(-self.tr_cap[v]);
        debug_assert!(bottleneck > 0);

        self.rcap[arc] -= bottleneck;
        self.rcap[arc ^ 1] += bottleneck;
        let mut v = s_node;
        while self.parent[v] != TERMINAL {
            let pa = self.parent[v] as usize;
            self.rcap[pa] += bottleneck;
            self.rcap[pa ^ 1] -= bottleneck;
            if self.rcap[pa ^ 1] == 0 {
                self.parent[v] = ORPHAN;
                orphans.push_back(v as u32);
            }
            v = self.head[pa] as usize;
        }
        self.tr_cap[v] -= bottleneck;
        if self.tr_cap[v] == 0 {
            self.parent[v] = ORPHAN;
            orphans.push_back(v as u32);
        }
        let mut v = t_node;
        while self.parent[v] != TERMINAL {
            let pa = self.parent[v] as usize;
            self.rcap[pa ^ 1] += bottleneck;
            self.rcap[pa] -= bottleneck;
            if self.rcap[pa] == 0 {
                self.parent[v] = ORPHAN;
                orphans.push_back(v as u32);
            }
            v = self.head[pa] as usize;
        }
        self.tr_cap[v] += bottleneck;
        if self.tr_cap[v] == 0 {
            self.parent[v] = ORPHAN;
            orphans.push_back(v as u32);
        }
        self.flow += bottleneck;
    }

    /// Finds a new parent for an orphan in its own tree, or frees it.
    fn adopt(
        &mut self,
        v: usize,
        time: u32,
        queue: &mut VecDeque<u32>,
        orphans: &mut VecDeque<u32>,
    ) {
        let in_source = self.tree[v] == SOURCE;
        let mut best: Option<(u32, u32)> = None;
        let mut a0 = self.first[v];
        while a0 != NONE {
            let a = a0 as usize;
            a0 = self.next[a];
            // Residual capacity along the tree direction (parent -> v for the source tree).
            let cap = if in_source {
                self.rcap[a ^ 1]
            } else {
                self.rcap[a]
            };
            let j = self.head[a] as usize;
            if cap == 0 || self.tree[j] != self.tree[v] || self.parent[j] == NONE {
                continue;
            }
            // Walk to the root, checking that the origin is the terminal.
            let mut k = j;
            let mut d: u32 = 0;
            let valid = loop {
                if self.ts[k] == time {
                    d += self.dist[k];
                    break true;
                }
                let pk = self.parent[k];
                d += 1;
                if pk == TERMINAL {
                    self.ts[k] = time;
                    self.dist[k] = 1;
                    break true;
                }
                if pk == ORPHAN {
                    break false;
                }
                k = self.head[pk as usize] as usize;
            };
            if !valid {
                continue;
            }
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((a as u32, d));
            }
            let mut k = j;
            while self.ts[k] != time {
                self.ts[k] = time;
                self.dist[k] = d;
                d -= 1;
                k = self.head[self.parent[k] as usize] as usize;
            }
        }
        if let Some((a, d)) = best {
            self.parent[v] = a;
            self.ts[v] = time;
            self.dist[v] = d + 1;
            return;
        }
        // No valid parent: v leaves the tree, its neighbours may reclaim it.
        let mut a0 = self.first[v];
        while a0 != NONE {
            let a = a0 as usize;
            a0 = self.next[a];
            let j = self.head[a] as usize;
            if self.tree[j] != self.tree[v] || self.parent[j] == NONE {
                continue;
            }
            let cap = if in_source {
                self.rcap[a ^ 1]
            } else {
                self.rcap[a]
            };
            if cap > 0 && !self.active[j] {
                self.active[j] = true;
                queue.push_back(j as u32);
            }
            let pj = self.parent[j];
            if pj != TERMINAL && pj != ORPHAN && self.head[pj as usize] as usize == v {
                self.parent[j] = ORPHAN;
                orphans.push_back(j as u32);
            }
        }
        self.tree[v] = FREE;
        self.parent[v] = NONE;
    }

    /// Nodes reachable from the source in the residual network.
    pub fn source_reachable(&self) -> Vec<bool> {
        let n = self.n_nodes();
        let mut seen = vec![false; n];
        let mut stack: Vec<usize> = (0..n).filter(|&i| self.tr_cap[i] > 0).collect();
        for &i in &stack {
            seen[i] = true;
        }
        while let Some(i) = stack.pop() {
            for a in self.outgoing(i) {
                let j = self.head[a] as usize;
                if self.rcap[a] > 0 && !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen
    }

    /// Nodes from which the sink is reachable in the residual network.
    pub fn sink_reaching(&self) -> Vec<bool> {
        let n = self.n_nodes();
        let mut seen = vec![false; n];
        let mut stack: Vec<usize> = (0..n).filter(|&i| self.tr_cap[i] < 0).collect();
        for &i in &stack {
            seen[i] = true;
        }
        while let Some(i) = stack.pop() {
            for a in self.outgoing(i) {
                let j = self.head[a] as usize;
                // Arc j -> i is the sister of a.
                if self.rcap[a ^ 1] > 0 && !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen
    }
}

struct ArcIter<'a> {
    next: &'a [u32],
    cur: u32,
}

impl Iterator for ArcIter<'_> {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        if self.cur == NONE {
            return None;
        }
        let a = self.cur as usize;
        self.cur = self.next[a];
        Some(a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_node_cut_takes_the_cheaper_arc() {
        let mut g = FlowNetwork::new(1);
        g.add_tweights(0, 2, 1);
        assert_eq!(g.maxflow(), 1);
        assert_eq!(g.source_reachable(), vec![true]);
        assert_eq!(g.sink_reaching(), vec![false]);
    }

    #[test]
    fn tie_exposes_both_cuts() {
        let mut g = FlowNetwork::new(1);
        g.add_tweights(0, 1, 1);
        assert_eq!(g.maxflow(), 1);
        assert_eq!(g.source_reachable(), vec![false]);
        assert_eq!(g.sink_reaching(), vec![false]);
    }

    #[test]
    fn chain() {
        // s -5-> 0 -3-> 1 -4-> t, plus 0 -> 2 -> 1 with capacity 1.
        let mut g = FlowNetwork::new(3);
        g.add_tweights(0, 5, 0);
        g.add_tweights(1, 0, 4);
        g.add_edge(0, 1, 3, 0);
        g.add_edge(0, 2, 1, 0);
        g.add_edge(2, 1, 1, 0);
        assert_eq!(g.maxflow(), 4);
        assert_eq!(g.source_reachable(), vec![true, false, false]);
        // Node 1's sink arc is saturated, so no node can still reach the sink.
        assert_eq!(g.sink_reaching(), vec![false, false, false]);
    }
}

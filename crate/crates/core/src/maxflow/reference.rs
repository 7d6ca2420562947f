//! Shortest-augmenting-path max-flow (Edmonds-Karp). Slow and simple; kept as
//! an independent check on the tree-reuse solver.

use std::collections::VecDeque;

#[derive(Clone, Debug)]
pub struct ReferenceNetwork {
    n: usize,
    // Node n is the source, n + 1 the sink.
    adj: Vec<Vec<usize>>,
    to: Vec<usize>,
    cap: Vec<i64>,
}

impl ReferenceNetwork {
    pub fn new(n_nodes: usize) -> Self {
        ReferenceNetwork {
            n: n_nodes,
            adj: vec![Vec::new(); n_nodes + 2],
            to: Vec::new(),
            cap: Vec::new(),
        }
    }

    pub fn source(&self) -> usize {
        self.n
    }

    pub fn sink(&self) -> usize {
        self.n + 1
    }

    pub fn add_edge(&mut self, i: usize, j: usize, cap: i64, rev_cap: i64) {
        let a = self.to.len();
        self.to.extend([j, i]);
        self.cap.extend([cap, rev_cap]);
        self.adj[i].push(a);
        self.adj[j].push(a + 1);
    }

    pub fn add_tweights(&mut self, i: usize, source_cap: i64, sink_cap: i64) {
        if source_cap > 0 {
            self.add_edge(self.source(), i, source_cap, 0);
        }
        if sink_cap > 0 {
            self.add_edge(i, self.sink(), sink_cap, 0);
        }
    }

    pub fn maxflow(&mut self) -> i64 {
        let (s, t) = (self.source(), self.sink());
        let mut total = 0;
        loop {
            let mut pred = vec![usize::MAX; self.n + 2];
            let mut queue = VecDeque::from([s]);
            let mut reached = false;
            while let Some(u) = queue.pop_front() {
                for &a in &self.adj[u] {
                    let v = self.to[a];
                    if self.cap[a] > 0 && pred[v] == usize::MAX && v != s {
                        pred[v] = a;
                        if v == t {
                            reached = true;
                            break;
                        }
                        queue.push_back(v);
                    }
                }
                if reached {
                    break;
                }
            }
            if !reached {
                return total;
            }
            let mut b = i64::MAX;
            let mut v = t;
            while v != s {
                let a = pred[v];
                b = b.min(self.cap[a]);
                v = self.to[a ^ 1];
            }
            let mut v = t;
            while v != s {
                let a = pred[v];
                self.cap[a] -= b;
                self.cap[a ^ 1] += b;
                v = self.to[a ^ 1];
            }
            total += b;
        }
    }
}

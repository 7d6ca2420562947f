//! Turning a [`BinaryEnergy`] into a flow network.

use super::{BinaryEnergy, CutGraph, Encoding};
use crate::error::{Error, Result};

const ABSENT: u32 = u32::MAX;
const UNBUILT: u32 = u32::MAX - 1;

/// Network under construction. Every node carries a signed unary cost, paid
/// when the node ends up on the source side; it becomes a terminal arc at the end.
struct Net {
    unary: Vec<i64>,
    arcs: Vec<(u32, u32, i64, i64)>,
    inf: Vec<(u32, u32)>,
    offset: i64,
}

impl Net {
    fn node(&mut self) -> u32 {
        self.unary.push(0);
        (self.unary.len() - 1) as u32
    }

    /// `c * max(children)`.
    fn charge_or(&mut self, children: &[u32], c: i64) {
        if let [only] = children {
            self.unary[*only as usize] += c;
            return;
        }
        let y = self.node();
        self.unary[y as usize] += c;
        self.inf.extend(children.iter().map(|&i| (i, y)));
    }

    /// `-c * min(children)`.
    fn credit_and(&mut self, children: &[u32], c: i64) {
        if let [only] = children {
            self.unary[*only as usize] -= c;
            return;
        }
        let z = self.node();
        self.unary[z as usize] -= c;
        self.inf.extend(children.iter().map(|&i| (z, i)));
    }

    /// `w * |theta - l|` for a partner with fixed label `l`.
    fn abs_to_fixed(&mut self, node: u32, l: bool, w: i64) {
        if l {
            self.offset += w;
            self.unary[node as usize] -= w;
        } else {
            self.unary[node as usize] += w;
        }
    }
}

/// Lazily built OR (or AND) nodes over the free cells of `[x, x + 2^k)` in a row.
struct SegmentTable {
    or: bool,
    width: usize,
    levels: Vec<Vec<u32>>,
}

impl SegmentTable {
    fn new(or: bool, width: usize, n_cells: usize, max_len: usize) -> Self {
        let mut k = 0;
        while (1usize << (k + 1)) <= max_len {
            k += 1;
        }
        SegmentTable {
            or,
            width,
            levels: vec![vec![UNBUILT; n_cells]; k],
        }
    }

    fn get(&mut self, net: &mut Net, cell_node: &[u32], k: usize, x: usize, y: usize) -> u32 {
        let idx = y * self.width + x;
        if k == 0 {
            return cell_node[idx];
        }
        let memo = self.levels[k - 1][idx];
        if memo != UNBUILT {
            return memo;
        }
        let half = 1usize << (k - 1);
        let a = self.get(net, cell_node, k - 1, x, y);
        let b = if x + half < self.width {
            self.get(net, cell_node, k - 1, x + half, y)
        } else {
            ABSENT
        };
        let node = if a == ABSENT {
            b
        } else if b == ABSENT {
            a
        } else {
            let p = net.node();
            if self.or {
                net.inf.extend([(a, p), (b, p)]);
            } else {
                net.inf.extend([(p, a), (p, b)]);
            }
            p
        };
        self.levels[k - 1][idx] = node;
        node
    }

    /// Nodes covering the free cells of `[a, b]` in row `y` (at most two).
    fn cover(
        &mut self,
        net: &mut Net,
        cell_node: &[u32],
        y: usize,
        a: usize,
        b: usize,
        out: &mut Vec<u32>,
    ) {
        let len = b - a + 1;
        let k = (usize::BITS - 1 - len.leading_zeros()) as usize;
        let n1 = self.get(net, cell_node, k, a, y);
        let n2 = self.get(net, cell_node, k, b + 1 - (1 << k), y);
        for n in [n1, n2] {
            if n != ABSENT && !out.contains(&n) {
                out.push(n);
            }
        }
    }
}

/// Row-wise prefix counts of fixed-one, fixed-zero and free cells.
struct RowCounts {
    stride: usize,
    ones: Vec<u32>,
    zeros: Vec<u32>,
    free: Vec<u32>,
}

impl RowCounts {
    fn new(width: usize, height: usize, fixed: &[Option<bool>]) -> Self {
        let stride = width + 1;
        let mut ones = vec![0; stride * height];
        let mut zeros = vec![0; stride * height];
        let mut free = vec![0; stride * height];
        for y in 0..height {
            for x in 0..width {
                let (o, z, f) = match fixed[y * width + x] {
                    Some(true) => (1, 0, 0),
                    Some(false) => (0, 1, 0),
                    None => (0, 0, 1),
                };
                let i = y * stride + x;
                ones[i + 1] = ones[i] + o;
                zeros[i + 1] = zeros[i] + z;
                free[i + 1] = free[i] + f;
            }
        }
        RowCounts {
            stride,
            ones,
            zeros,
            free,
        }
    }

    /// (fixed ones, fixed zeros, free) in `[a, b]` of row `y`.
    fn range(&self, y: usize, a: usize, b: usize) -> (u32, u32, u32) {
        let (i, j) = (y * self.stride + a, y * self.stride + b + 1);
        (
            self.ones[j] - self.ones[i],
            self.zeros[j] - self.zeros[i],
            self.free[j] - self.free[i],
        )
    }
}

/// A window's rows as `(dy, half width)`.
fn ball_rows(offsets: &[(isize, isize)]) -> Vec<(isize, isize)> {
    let mut rows: Vec<(isize, isize)> = Vec::new();
    for &(i, j) in offsets {
        match rows.iter_mut().find(|(dy, _)| *dy == j) {
            Some((_, hw)) => *hw = (*hw).max(i.abs()),
            None => rows.push((j, i.abs())),
        }
    }
    rows
}

impl BinaryEnergy {
    /// Builds the flow network for the quantized energy.
    pub fn build_graph(&self, quantum: f64) -> Result<CutGraph> {
        let q = self.effective_quantum(quantum)?;
        let round = |v: f64| (v / q).round() as i64;
        let (w, h) = (self.grid.width(), self.grid.height());
        let n_cells = self.grid.len();
        let mut cell_node = vec![ABSENT; n_cells];
        let mut n_pixel = 0usize;
        for i in 0..n_cells {
            if self.fixed[i].is_none() {
                cell_node[i] = n_pixel as u32;
                n_pixel += 1;
            }
        }
        let mut net = Net {
            unary: vec![0; n_pixel],
            arcs: Vec::new(),
            inf: Vec::new(),
            offset: 0,
        };
        for i in 0..n_cells {
            match self.fixed[i] {
                None => net.unary[cell_node[i] as usize] += round(self.unary[i]),
                Some(true) => net.offset += round(self.unary[i]),
                Some(false) => {}
            }
        }

        // Centres whose windows can reach a free cell.
        let mut bbox = (usize::MAX, usize::MAX, 0usize, 0usize);
        for i in 0..n_cells {
            if self.fixed[i].is_none() {
                let (x, y) = self.grid.coords(i);
                bbox = (bbox.0.min(x), bbox.1.min(y), bbox.2.max(x), bbox.3.max(y));
            }
        }
        let counts = RowCounts::new(w, h, &self.fixed);
        let max_len = self
            .windows
            .iter()
            .map(|(b, _)| 2 * b.reach() as usize + 1)
            .max()
            .unwrap_or(1);
        let mut or_table = SegmentTable::new(true, w, n_cells, max_len.min(w));
        let mut and_table = SegmentTable::new(false, w, n_cells, max_len.min(w));
        let mut children: Vec<u32> = Vec::new();

        for (ball, c) in &self.windows {
            let cq = round(*c);
            if cq == 0 {
                continue;
            }
            let rows = ball_rows(ball.offsets());
            let reach = ball.reach();
            for center in 0..n_cells {
                let (x, y) = self.grid.coords(center);
                let near = n_pixel > 0
                    && x as isize + reach >= bbox.0 as isize
                    && y as isize + reach >= bbox.1 as isize
                    && x as isize - reach <= bbox.2 as isize
                    && y as isize - reach <= bbox.3 as isize;
                if !near && self.skip_frozen {
                    continue;
                }
                let (mut ones, mut zeros, mut free) = (0u32, 0u32, 0u32);
                let mut sticks_out = false;
                for &(dy, hw) in &rows {
                    let yy = y as isize + dy;
                    if yy < 0 || yy >= h as isize {
                        sticks_out = true;
                        continue;
                    }
                    let a = x as isize - hw;
                    let b = x as isize + hw;
                    if a < 0 || b >= w as isize {
                        sticks_out = true;
                    }
                    let (o, z, f) = counts.range(
                        yy as usize,
                        a.max(0) as usize,
                        b.min(w as isize - 1) as usize,
                    );
                    ones += o;
                    zeros += z;
                    free += f;
                }
                let (mut has1, mut has0) = (ones > 0, zeros > 0);
                if sticks_out {
                    match self.outside {
                        Some(true) => has1 = true,
                        Some(false) => has0 = true,
                        None => {}
                    }
                }
                if free == 0 {
                    if !self.skip_frozen && has1 && has0 {
                        net.offset += cq;
                    }
                    continue;
                }
                if has1 && has0 {
                    net.offset += cq;
                    continue;
                }
                if free == 1 && !has1 && !has0 {
                    continue;
                }
                if has1 {
                    net.offset += cq;
                } else {
                    self.collect(
                        &mut net,
                        &mut or_table,
                        &cell_node,
                        &rows,
                        (x, y),
                        &mut children,
                    );
                    net.charge_or(&children, cq);
                }
                if !has0 {
                    self.collect(
                        &mut net,
                        &mut and_table,
                        &cell_node,
                        &rows,
                        (x, y),
                        &mut children,
                    );
                    net.credit_and(&children, cq);
                }
            }
        }

        for &(off, pw) in &self.pairs {
            let wq = round(pw);
            if wq == 0 {
                continue;
            }
            for i in 0..n_cells {
                let Some(j) = self.pair_partner(i, off) else {
                    continue;
                };
                let lj = match j {
                    Some(j) => self.fixed[j],
                    None => self.outside,
                };
                match (self.fixed[i], lj) {
                    (None, None) => {
                        let j = j.expect("outside cells always carry a label");
                        net.arcs.push((cell_node[i], cell_node[j], wq, wq));
                    }
                    (None, Some(l)) => net.abs_to_fixed(cell_node[i], l, wq),
                    (Some(l), None) => {
                        let j = j.expect("outside cells always carry a label");
                        net.abs_to_fixed(cell_node[j], l, wq)
                    }
                    (Some(a), Some(b)) => {
                        if a != b {
                            net.offset += wq
                        }
                    }
                }
            }
        }

        let n_nodes = net.unary.len();
        let mut source_cap = vec![0i64; n_nodes];
        let mut sink_cap = vec![0i64; n_nodes];
        for (k, &u) in net.unary.iter().enumerate() {
            if u > 0 {
                sink_cap[k] = u;
            } else {
                source_cap[k] = -u;
                net.offset += u;
            }
        }
        let finite: i128 = source_cap
            .iter()
            .chain(&sink_cap)
            .map(|&c| c as i128)
            .sum::<i128>()
            + net.arcs.iter().map(|a| (a.2 + a.3) as i128).sum::<i128>();
        let infinite = finite + 1;
        if infinite > i64::MAX as i128 / 4 {
            return Err(Error::Internal(format!(
                "capacity overflow: total {finite}"
            )));
        }
        let infinite = infinite as i64;
        let mut arcs = net.arcs;
        arcs.extend(net.inf.into_iter().map(|(a, b)| (a, b, infinite, 0)));
        Ok(CutGraph {
            grid: self.grid,
            cell_node,
            fixed: self.fixed.clone(),
            n_pixel_nodes: n_pixel,
            source_cap,
            sink_cap,
            arcs,
            offset: net.offset,
            infinite,
            quantum: q,
        })
    }

    /// Nodes whose OR (or AND) is that of the window's free cells.
    fn collect(
        &self,
        net: &mut Net,
        table: &mut SegmentTable,
        cell_node: &[u32],
        rows: &[(isize, isize)],
        (x, y): (usize, usize),
        out: &mut Vec<u32>,
    ) {
        out.clear();
        let (w, h) = (self.grid.width() as isize, self.grid.height() as isize);
        for &(dy, hw) in rows {
            let yy = y as isize + dy;
            if yy < 0 || yy >= h {
                continue;
            }
            let a = (x as isize - hw).max(0) as usize;
            let b = (x as isize + hw).min(w - 1) as usize;
            match self.encoding {
                Encoding::SharedRows => table.cover(net, cell_node, yy as usize, a, b, out),
                Encoding::PerWindow => {
                    let base = yy as usize * w as usize;
                    out.extend(
                        cell_node[base + a..=base + b]
                            .iter()
                            .copied()
                            .filter(|&n| n != ABSENT),
                    );
                }
            }
        }
    }
}

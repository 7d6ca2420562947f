//! Exact minimization of binary oscillation energies by min-cut.
//!
//! A labeling `theta` is encoded by the cut: `theta_i = 1` iff pixel `i` stays
//! on the source side. For a window `w`, `osc_w(theta) = OR_w - AND_w`; the OR
//! is an auxiliary node `y >= theta_i` charged `c_w` when set, the AND a node
//! `z <= theta_i` credited `c_w` when set. All constraint arcs are "infinite".
//!
//! Real coefficients are rounded to integer multiples of a quantum, so every
//! statement of optimality here is about the quantized energy.

mod bk;
mod build;
mod reference;

pub use bk::FlowNetwork;
pub use reference::ReferenceNetwork;

use crate::error::{Error, Result};
use crate::grid::{BinarySet, Boundary, DiscreteBall, Grid2D, ScalarField};
use std::fmt::Write as _;

/// Default capacity quantum, 2^-32.
pub const DEFAULT_QUANTUM: f64 = 1.0 / 4_294_967_296.0;

// Keep the sum of finite capacities (and hence the infinite capacity) well inside i64.
const CAPACITY_BUDGET: f64 = 2_305_843_009_213_693_952.0; // 2^61

/// Binary energy `sum_w c_w osc_w(theta) + sum_{ij} w_ij |theta_i - theta_j| + sum_i g_i theta_i`
/// over the cells of a grid, with optional cells whose label is fixed.
#[derive(Clone, Debug)]
pub struct BinaryEnergy {
    grid: Grid2D,
    windows: Vec<(DiscreteBall, f64)>,
    pairs: Vec<((isize, isize), f64)>,
    unary: Vec<f64>,
    fixed: Vec<Option<bool>>,
    outside: Option<bool>,
    encoding: Encoding,
    skip_frozen: bool,
}

/// How window oscillations are turned into auxiliary nodes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Encoding {
    /// One OR node and one AND node per window, each wired to every free member.
    #[default]
    PerWindow,
    /// Windows are unions of row segments; segment ORs/ANDs are built once per
    /// power-of-two length and shared between windows, so a window only wires
    /// two nodes per row.
    SharedRows,
}

impl BinaryEnergy {
    /// Out-of-grid cells take the label `pad > 1/2` in pad mode and are ignored when clipping.
    pub fn new(
        grid: Grid2D,
        windows: Vec<(DiscreteBall, f64)>,
        pairs: Vec<((isize, isize), f64)>,
        unary: Vec<f64>,
    ) -> Result<Self> {
        if unary.len() != grid.len() {
            return Err(Error::ShapeMismatch {
                expected: grid.len(),
                got: unary.len(),
            });
        }
        if let Some(i) = unary.iter().position(|g| !g.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        for &(_, c) in &windows {
            if !(c.is_finite() && c > 0.0) {
                return Err(Error::InvalidEnergy(format!(
                    "window weight {c} must be positive"
                )));
            }
        }
        for &((dx, dy), w) in &pairs {
            if !(w.is_finite() && w > 0.0) || (dx, dy) == (0, 0) {
                return Err(Error::InvalidEnergy(format!(
                    "pair ({dx},{dy}) weight {w} must be positive"
                )));
            }
        }
        let outside = match grid.boundary() {
            Boundary::PadConstant(v) => Some(v > 0.5),
            Boundary::Clip => None,
        };
        let fixed = vec![None; grid.len()];
        Ok(BinaryEnergy {
            grid,
            windows,
            pairs,
            unary,
            fixed,
            outside,
            encoding: Encoding::PerWindow,
            skip_frozen: false,
        })
    }

    /// Overrides the label of out-of-grid cells (`None` clips the windows).
    pub fn with_outside(mut self, outside: Option<bool>) -> Self {
        self.outside = outside;
        self
    }

    pub fn with_encoding(mut self, encoding: Encoding) -> Self {
        self.encoding = encoding;
        self
    }

    /// Leaves out windows without free cells. They only add a constant, so the
    /// minimizers are unchanged, but that constant is then missing from the
    /// reported energy.
    pub fn with_frozen_windows_skipped(mut self) -> Self {
        self.skip_frozen = true;
        self
    }

    /// Fixes the labels of some cells; they stay constants of the problem.
    pub fn with_fixed(mut self, fixed: Vec<Option<bool>>) -> Result<Self> {
        if fixed.len() != self.grid.len() {
            return Err(Error::ShapeMismatch {
                expected: self.grid.len(),
                got: fixed.len(),
            });
        }
        self.fixed = fixed;
        Ok(self)
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn unary(&self) -> &[f64] {
        &self.unary
    }

    pub fn fixed(&self) -> &[Option<bool>] {
        &self.fixed
    }

    pub fn set_fixed(&mut self, cell: usize, label: Option<bool>) {
        self.fixed[cell] = label;
    }

    pub fn free_cells(&self) -> Vec<usize> {
        (0..self.grid.len())
            .filter(|&i| self.fixed[i].is_none())
            .collect()
    }

    fn for_each_window_member(
        &self,
        center: usize,
        ball: &DiscreteBall,
        mut f: impl FnMut(Option<usize>),
    ) {
        let c = self.grid.coords(center);
        for &(i, j) in ball.offsets() {
            match self.grid.offset(c, i, j) {
                Some(n) => f(Some(self.grid.index(n.0, n.1))),
                None => {
                    if self.outside.is_some() {
                        f(None)
                    }
                }
            }
        }
    }

    fn label(&self, labels: &[bool], cell: Option<usize>) -> bool {
        match cell {
            Some(i) => self.fixed[i].unwrap_or(labels[i]),
            None => self.outside.unwrap_or(false),
        }
    }

    fn window_osc(&self, labels: &[bool], center: usize, ball: &DiscreteBall) -> bool {
        let (mut one, mut zero) = (false, false);
        self.for_each_window_member(center, ball, |m| {
            if self.label(labels, m) {
                one = true
            } else {
                zero = true
            }
        });
        one && zero
    }

    fn pair_partner(&self, i: usize, (dx, dy): (isize, isize)) -> Option<Option<usize>> {
        match self.grid.offset(self.grid.coords(i), dx, dy) {
            Some(n) => Some(Some(self.grid.index(n.0, n.1))),
            None => self.outside.map(|_| None),
        }
    }

    /// Energy of a full labeling; fixed cells read their fixed label.
    pub fn evaluate(&self, labels: &[bool]) -> f64 {
        let mut e = 0.0;
        for (ball, c) in &self.windows {
            let n = (0..self.grid.len())
                .filter(|&k| self.window_osc(labels, k, ball))
                .count();
            e += c * n as f64;
        }
        for &(off, w) in &self.pairs {
            for i in 0..self.grid.len() {
                if let Some(j) = self.pair_partner(i, off) {
                    if self.label(labels, Some(i)) != self.label(labels, j) {
                        e += w;
                    }
                }
            }
        }
        for i in 0..self.grid.len() {
            if self.label(labels, Some(i)) {
                e += self.unary[i];
            }
        }
        e
    }

    /// The same energy with every coefficient rounded to a multiple of `quantum`,
    /// in units of `quantum`.
    pub fn evaluate_quantized(&self, labels: &[bool], quantum: f64) -> i128 {
        let q = |v: f64| (v / quantum).round() as i128;
        let mut e: i128 = 0;
        for (ball, c) in &self.windows {
            let n = (0..self.grid.len())
                .filter(|&k| self.window_osc(labels, k, ball))
                .count();
            e += q(*c) * n as i128;
        }
        for &(off, w) in &self.pairs {
            for i in 0..self.grid.len() {
                if let Some(j) = self.pair_partner(i, off) {
                    if self.label(labels, Some(i)) != self.label(labels, j) {
                        e += q(w);
                    }
                }
            }
        }
        for i in 0..self.grid.len() {
            if self.label(labels, Some(i)) {
                e += q(self.unary[i]);
            }
        }
        e
    }

    /// `evaluate_quantized` after toggling the cells in `flip`, minus before,
    /// visiting only the terms those cells take part in. Fixed cells in `flip`
    /// are toggled as if free.
    pub fn delta_quantized(&self, labels: &[bool], flip: &[usize], quantum: f64) -> i128 {
        if self.fixed.iter().any(Option::is_some) {
            let free = self
                .clone()
                .with_fixed(vec![None; self.grid.len()])
                .expect("length matches");
            let labels: Vec<bool> = (0..self.grid.len())
                .map(|i| self.label(labels, Some(i)))
                .collect();
            return free.delta_quantized(&labels, flip, quantum);
        }
        let q = |v: f64| (v / quantum).round() as i128;
        let mut after = labels.to_vec();
        for &i in flip {
            after[i] = !after[i];
        }
        let mut seen = vec![false; self.grid.len()];
        let mut e: i128 = 0;
        for (ball, c) in &self.windows {
            seen.iter_mut().for_each(|s| *s = false);
            let mut n: i64 = 0;
            for &i in flip {
                let cell = self.grid.coords(i);
                // Balls are symmetric: the windows holding `i` are centred at `i + offset`.
                for &(dx, dy) in ball.offsets() {
                    let Some(k) = self.grid.offset(cell, dx, dy) else {
                        continue;
                    };
                    let k = self.grid.index(k.0, k.1);
                    if !std::mem::replace(&mut seen[k], true) {
                        n += self.window_osc(&after, k, ball) as i64
                            - self.window_osc(labels, k, ball) as i64;
                    }
                }
            }
            e += q(*c) * n as i128;
        }
        let mut flipped = vec![false; self.grid.len()];
        for &i in flip {
            flipped[i] = true;
        }
        for &(off, w) in &self.pairs {
            let cut =
                |l: &[bool], i: usize, j: Option<usize>| self.label(l, Some(i)) != self.label(l, j);
            for &i in flip {
                let cell = self.grid.coords(i);
                if let Some(j) = self.pair_partner(i, off) {
                    e += q(w) * (cut(&after, i, j) as i128 - cut(labels, i, j) as i128);
                }
                // As the partner of `i - off`, unless that cell was counted above.
                if let Some(n) = self.grid.offset(cell, -off.0, -off.1) {
                    let k = self.grid.index(n.0, n.1);
                    if !flipped[k] {
                        e += q(w)
                            * (cut(&after, k, Some(i)) as i128 - cut(labels, k, Some(i)) as i128);
                    }
                }
            }
        }
        for &i in flip {
            let s = if after[i] { 1 } else { -1 };
            e += s * q(self.unary[i]);
        }
        e
    }

    /// Quantum actually used for a requested one: doubled until the total
    /// capacity is guaranteed to fit the integer budget.
    pub fn effective_quantum(&self, quantum: f64) -> Result<f64> {
        if !(quantum.is_finite() && quantum > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "capacity quantum must be positive, got {quantum}"
            )));
        }
        let n = self.grid.len() as f64;
        let bound: f64 = self.windows.iter().map(|(_, c)| 2.0 * c * n).sum::<f64>()
            + self.pairs.iter().map(|(_, w)| 2.0 * w * n).sum::<f64>()
            + self.unary.iter().map(|g| g.abs()).sum::<f64>()
            + 4.0 * n;
        let mut q = quantum;
        while bound / q > CAPACITY_BUDGET {
            q *= 2.0;
        }
        Ok(q)
    }
}

/// Flow network encoding a binary energy, plus the bookkeeping to read labelings back.
#[derive(Clone, Debug)]
pub struct CutGraph {
    grid: Grid2D,
    cell_node: Vec<u32>,
    fixed: Vec<Option<bool>>,
    n_pixel_nodes: usize,
    source_cap: Vec<i64>,
    sink_cap: Vec<i64>,
    arcs: Vec<(u32, u32, i64, i64)>,
    offset: i64,
    infinite: i64,
    quantum: f64,
}

impl CutGraph {
    pub fn n_nodes(&self) -> usize {
        self.source_cap.len()
    }

    pub fn n_pixel_nodes(&self) -> usize {
        self.n_pixel_nodes
    }

    pub fn n_arcs(&self) -> usize {
        self.arcs.len()
    }

    pub fn quantum(&self) -> f64 {
        self.quantum
    }

    /// Constant added to the cut value to obtain the energy, in quanta.
    pub fn offset(&self) -> i64 {
        self.offset
    }

    pub fn infinite_capacity(&self) -> i64 {
        self.infinite
    }

    /// Plain-text dump: a `p` line with node and arc counts, then `t node source sink`
    /// lines for terminal capacities and `a from to cap rev_cap` lines for arcs.
    pub fn to_dimacs(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "c quantum {} offset {}", self.quantum, self.offset);
        let _ = writeln!(s, "p max {} {}", self.n_nodes(), self.arcs.len());
        for k in 0..self.n_nodes() {
            if self.source_cap[k] != 0 || self.sink_cap[k] != 0 {
                let _ = writeln!(s, "t {} {} {}", k, self.source_cap[k], self.sink_cap[k]);
            }
        }
        for &(a, b, c, r) in &self.arcs {
            let _ = writeln!(s, "a {a} {b} {c} {r}");
        }
        s
    }

    pub fn to_network(&self) -> FlowNetwork {
        let mut g = FlowNetwork::new(self.n_nodes());
        for k in 0..self.n_nodes() {
            if self.source_cap[k] != 0 || self.sink_cap[k] != 0 {
                g.add_tweights(k, self.source_cap[k], self.sink_cap[k]);
            }
        }
        for &(a, b, c, r) in &self.arcs {
            g.add_edge(a as usize, b as usize, c, r);
        }
        g
    }

    pub fn to_reference_network(&self) -> ReferenceNetwork {
        let mut g = ReferenceNetwork::new(self.n_nodes());
        for k in 0..self.n_nodes() {
            g.add_tweights(k, self.source_cap[k], self.sink_cap[k]);
        }
        for &(a, b, c, r) in &self.arcs {
            g.add_edge(a as usize, b as usize, c, r);
        }
        g
    }

    fn labeling(&self, on_source_side: &[bool]) -> BinarySet {
        let mask = (0..self.grid.len())
            .map(|i| match self.fixed[i] {
                Some(l) => l,
                None => on_source_side[self.cell_node[i] as usize],
            })
            .collect();
        BinarySet::new(self.grid, mask).expect("mask built from the grid")
    }
}

/// Optimal value and both extremal minimizers of a cut problem.
#[derive(Clone, Debug)]
pub struct CutSolution {
    /// Intersection of all minimizers.
    pub min_labeling: BinarySet,
    /// Union of all minimizers.
    pub max_labeling: BinarySet,
    /// Max-flow value in world units (`flow_quanta * quantum`).
    pub flow_value: f64,
    pub flow_quanta: i64,
    /// Minimal energy in quanta: `flow_quanta + offset`.
    pub energy_quanta: i64,
    pub quantum: f64,
}

impl CutSolution {
    /// Minimal energy in world units.
    pub fn energy(&self) -> f64 {
        self.energy_quanta as f64 * self.quantum
    }
}

pub fn solve_min_cut(graph: &CutGraph) -> CutSolution {
    let mut net = graph.to_network();
    let flow = net.maxflow();
    let src = net.source_reachable();
    let snk = net.sink_reaching();
    let not_snk: Vec<bool> = snk.iter().map(|b| !b).collect();
    CutSolution {
        min_labeling: graph.labeling(&src),
        max_labeling: graph.labeling(&not_snk),
        flow_value: flow as f64 * graph.quantum,
        flow_quanta: flow,
        energy_quanta: flow + graph.offset,
        quantum: graph.quantum,
    }
}

/// Max-flow value computed by the shortest-augmenting-path solver.
pub fn solve_min_cut_reference(graph: &CutGraph) -> i64 {
    graph.to_reference_network().maxflow()
}

/// Graph for `sum_w c_w osc_w(theta) + sum_i g_i theta_i` on a clipped or padded grid.
pub fn build_binary_osc_graph(
    grid: &Grid2D,
    balls_with_weights: &[(DiscreteBall, f64)],
    unary: &ScalarField,
) -> Result<CutGraph> {
    BinaryEnergy::new(
        *grid,
        balls_with_weights.to_vec(),
        Vec::new(),
        unary.values().to_vec(),
    )?
    .build_graph(DEFAULT_QUANTUM)
}

/// Every minimizer of a small binary energy, found by enumeration.
#[derive(Clone, Debug)]
pub struct BruteForceResult {
    pub minimizers: Vec<BinarySet>,
    /// Minimal quantized energy, in quanta.
    pub value_quanta: i128,
    pub quantum: f64,
}

impl BruteForceResult {
    pub fn value(&self) -> f64 {
        self.value_quanta as f64 * self.quantum
    }

    /// Intersection of all minimizers.
    pub fn lattice_min(&self) -> BinarySet {
        self.minimizers
            .iter()
            .skip(1)
            .fold(self.minimizers[0].clone(), |a, b| a.intersection(b))
    }

    /// Union of all minimizers.
    pub fn lattice_max(&self) -> BinarySet {
        self.minimizers
            .iter()
            .skip(1)
            .fold(self.minimizers[0].clone(), |a, b| a.union(b))
    }
}

/// Exhaustive search over the free cells (at most 20) of the quantized energy.
pub fn brute_force_binary_min(energy: &BinaryEnergy, quantum: f64) -> Result<BruteForceResult> {
    let q = energy.effective_quantum(quantum)?;
    let free = energy.free_cells();
    if free.len() > 20 {
        return Err(Error::TooLarge(free.len()));
    }
    let grid = *energy.grid();
    let mut labels: Vec<bool> = energy.fixed().iter().map(|f| f.unwrap_or(false)).collect();
    let mut best = i128::MAX;
    let mut minimizers = Vec::new();
    for bits in 0u32..(1u32 << free.len()) {
        for (k, &i) in free.iter().enumerate() {
            labels[i] = bits >> k & 1 == 1;
        }
        let e = energy.evaluate_quantized(&labels, q);
        if e < best {
            best = e;
            minimizers.clear();
        }
        if e == best {
            minimizers.push(BinarySet::new(grid, labels.clone())?);
        }
    }
    Ok(BruteForceResult {
        minimizers,
        value_quanta: best,
        quantum: q,
    })
}

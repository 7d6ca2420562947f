//! Minimizing-movements time stepping.
//!
//! A set step solves `min_F energy(F) + (1/h) sum_{x in F} d_E(x) |cell|` by one
//! cut; a function step solves `min_v J(v) + (1/2h) |v - u|^2` one threshold at
//! a time, the superlevel sets of the minimizer being the cuts of
//! `J(theta) + (1/h) sum theta (s - u) |cell|`.
//!
//! Cuts are solved on a narrow band: cells far from the front keep their
//! current label. When a solution reaches the edge of the band, the band is
//! widened around the contact and the cut is solved again.

use crate::energy::{energy_osc_binary, energy_profile, energy_tv, EnergyConfig};
use crate::error::{Error, Result};
use crate::experiments::components;
use crate::fastmarch::{redistance, signed_distance, SeedRule};
use crate::grid::{BinarySet, Boundary, Cell, Grid2D, ScalarField};
use crate::levels::Quantization;
use crate::maxflow::{solve_min_cut, BinaryEnergy, CutSolution, Encoding, DEFAULT_QUANTUM};
use std::fmt::Write as _;

/// Which of the two extremal minimizers to keep.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Selection {
    #[default]
    Minimal,
    Maximal,
}

/// Which cells take part in a cut.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BandMode {
    /// Every cell is a variable.
    Full,
    /// Cells whose fidelity margin exceeds `width` cells keep their current label
    /// unless the solution reaches them. Faster, but not exact: a step that
    /// moves the boundary further than the band, or fills a clipped corner,
    /// can be missed.
    Narrow { width: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepConfig {
    pub h: f64,
    pub energy: EnergyConfig,
    /// Quantization levels of a function step.
    pub n_levels: usize,
    /// For function steps this picks the minimal or maximal superlevel cuts; in
    /// [`flow`] it picks the minimal or maximal evolving set `{u <= 0}`.
    pub selection: Selection,
    pub band: BandMode,
    /// Capacity quantum of the cuts.
    pub quantum: f64,
}

impl StepConfig {
    pub fn new(h: f64, energy: EnergyConfig) -> Self {
        StepConfig {
            h,
            energy,
            n_levels: 64,
            selection: Selection::Minimal,
            band: BandMode::Full,
            quantum: DEFAULT_QUANTUM,
        }
    }

    pub fn with_levels(mut self, n_levels: usize) -> Self {
        self.n_levels = n_levels;
        self
    }

    pub fn with_selection(mut self, selection: Selection) -> Self {
        self.selection = selection;
        self
    }

    pub fn with_band(mut self, band: BandMode) -> Self {
        self.band = band;
        self
    }

    pub fn with_quantum(mut self, quantum: f64) -> Self {
        self.quantum = quantum;
        self
    }

    pub fn validate(&self, grid: &Grid2D) -> Result<()> {
        if !(self.h.is_finite() && self.h > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "time step h must be positive, got {}",
                self.h
            )));
        }
        if self.n_levels < 2 {
            return Err(Error::InvalidParameter(format!(
                "n_levels must be >= 2, got {}",
                self.n_levels
            )));
        }
        if !(self.quantum.is_finite() && self.quantum > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "capacity quantum must be positive, got {}",
                self.quantum
            )));
        }
        if let BandMode::Narrow { width } = self.band {
            if !(width.is_finite() && width > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "band width must be positive, got {width}"
                )));
            }
        }
        self.energy.validate(grid)
    }
}

/// Both extremal outcomes of one set step.
#[derive(Clone, Debug, PartialEq)]
pub struct SetStep {
    pub minus: BinarySet,
    pub plus: BinarySet,
    /// The input was empty or full and was returned as is.
    pub unchanged: bool,
}

impl SetStep {
    pub fn selected(&self, selection: Selection) -> &BinarySet {
        match selection {
            Selection::Minimal => &self.minus,
            Selection::Maximal => &self.plus,
        }
    }
}

fn binary_energy(
    grid: &Grid2D,
    cfg: &StepConfig,
    unary: Vec<f64>,
    outside: Option<bool>,
) -> Result<BinaryEnergy> {
    Ok(BinaryEnergy::new(
        *grid,
        cfg.energy.window_terms(grid)?,
        cfg.energy.pair_terms(grid),
        unary,
    )?
    .with_outside(outside)
    .with_encoding(Encoding::SharedRows)
    .with_frozen_windows_skipped())
}

/// Solves the cut with cells of large `|margin|` fixed to `margin < 0`,
/// widening the band wherever the solution touches a fixed cell of the other label
/// or a component holding fixed cells is cheaper removed (a hole cheaper filled).
/// Cells with `pinned[i]` set keep that label whatever the band does.
fn solve_banded(
    energy: BinaryEnergy,
    margin: &[f64],
    pinned: Option<&[Option<bool>]>,
    band: BandMode,
    quantum: f64,
) -> Result<CutSolution> {
    let grid = *energy.grid();
    let pin = |i: usize| pinned.and_then(|p| p[i]);
    let width = match band {
        BandMode::Full => {
            let energy = match pinned {
                Some(p) => energy.with_fixed(p.to_vec())?,
                None => energy,
            };
            return Ok(solve_min_cut(&energy.build_graph(quantum)?));
        }
        BandMode::Narrow { width } => width,
    };
    let limit = width * grid.spacing();
    let mut fixed: Vec<Option<bool>> = margin
        .iter()
        .enumerate()
        .map(|(i, &m)| pin(i).or(if m.abs() > limit { Some(m < 0.0) } else { None }))
        .collect();
    let grow = (width.ceil() as isize).max(2);
    let base = energy.clone();
    let mut energy = energy;
    loop {
        energy = energy.with_fixed(fixed.clone())?;
        let sol = solve_min_cut(&energy.build_graph(quantum)?);
        let (lo, hi) = (sol.min_labeling.mask(), sol.max_labeling.mask());
        let mut touched = Vec::new();
        for i in 0..grid.len() {
            let Some(l) = fixed[i] else { continue };
            if pin(i).is_some() {
                continue;
            }
            let c = grid.coords(i);
            let contact = grid.neighbors4(c).any(|n| {
                let j = grid.index(n.0, n.1);
                fixed[j].is_none() && (lo[j] != l || hi[j] != l)
            });
            if contact {
                touched.push(c);
            }
        }
        if touched.is_empty() {
            touched = islands(&base, &sol, &fixed, pinned, quantum)?;
            if touched.is_empty() {
                return Ok(sol);
            }
        }
        for c in touched {
            for dy in -grow..=grow {
                for dx in -grow..=grow {
                    if let Some(n) = grid.offset(c, dx, dy) {
                        let j = grid.index(n.0, n.1);
                        fixed[j] = pin(j);
                    }
                }
            }
        }
    }
}

/// Cells of the solution's components (and holes) that hold band-fixed cells
/// and cost no more removed (filled). Contact with the band cannot see these moves.
fn islands(
    energy: &BinaryEnergy,
    sol: &CutSolution,
    fixed: &[Option<bool>],
    pinned: Option<&[Option<bool>]>,
    quantum: f64,
) -> Result<Vec<Cell>> {
    let grid = *energy.grid();
    let q = energy.effective_quantum(quantum)?;
    let band_fixed = |i: usize| fixed[i].is_some() && pinned.and_then(|p| p[i]).is_none();
    let mut out = Vec::new();
    for (labeling, holes) in [(&sol.max_labeling, false), (&sol.min_labeling, true)] {
        let region = if holes {
            labeling.complement()
        } else {
            labeling.clone()
        };
        for comp in components(&region) {
            if !comp.iter().any(|&i| band_fixed(i))
                || comp.iter().any(|&i| pinned.and_then(|p| p[i]).is_some())
            {
                continue;
            }
            if holes && comp.iter().any(|&i| on_border(&grid, grid.coords(i))) {
                continue;
            }
            if energy.delta_quantized(labeling.mask(), &comp, q) <= 0 {
                out.extend(
                    comp.iter()
                        .filter(|&&i| band_fixed(i))
                        .map(|&i| grid.coords(i)),
                );
            }
        }
    }
    Ok(out)
}

fn on_border(grid: &Grid2D, (x, y): Cell) -> bool {
    x == 0 || y == 0 || x + 1 == grid.width() || y + 1 == grid.height()
}

/// One step of the set scheme; returns the minimal and maximal minimizers.
pub fn evolve_set_once(set: &BinarySet, cfg: &StepConfig) -> Result<SetStep> {
    let grid = *set.grid();
    cfg.validate(&grid)?;
    if set.is_empty() || set.is_full() {
        return Ok(SetStep {
            minus: set.clone(),
            plus: set.clone(),
            unchanged: true,
        });
    }
    let d = signed_distance(set);
    let scale = grid.cell_area() / cfg.h;
    let unary = d.values().iter().map(|v| v * scale).collect();
    let outside = match grid.boundary() {
        Boundary::PadConstant(v) => Some(v > 0.5),
        Boundary::Clip => None,
    };
    let energy = binary_energy(&grid, cfg, unary, outside)?;
    let sol = solve_banded(energy, d.values(), None, cfg.band, cfg.quantum)?;
    Ok(SetStep {
        minus: sol.min_labeling,
        plus: sol.max_labeling,
        unchanged: false,
    })
}

/// Minimal and maximal superlevel cuts for every threshold, checked for nestedness.
pub fn solve_levels(
    u: &ScalarField,
    cfg: &StepConfig,
    quant: &Quantization,
) -> Result<(Vec<BinarySet>, Vec<BinarySet>)> {
    solve_levels_pinned(u, cfg, quant, None)
}

/// As [`solve_levels`], with cells at `u <= -plateau` kept out of every
/// superlevel set and cells at `u >= plateau` kept in.
fn solve_levels_pinned(
    u: &ScalarField,
    cfg: &StepConfig,
    quant: &Quantization,
    plateau: Option<f64>,
) -> Result<(Vec<BinarySet>, Vec<BinarySet>)> {
    let grid = *u.grid();
    let pinned: Option<Vec<Option<bool>>> = plateau.map(|b| {
        u.values()
            .iter()
            .map(|&v| {
                if v <= -b {
                    Some(false)
                } else if v >= b {
                    Some(true)
                } else {
                    None
                }
            })
            .collect()
    });
    cfg.validate(&grid)?;
    let scale = grid.cell_area() / cfg.h;
    let solve = |&s: &f64| -> Result<(BinarySet, BinarySet)> {
        let margin: Vec<f64> = u.values().iter().map(|&v| s - v).collect();
        let unary = margin.iter().map(|m| m * scale).collect();
        let outside = match grid.boundary() {
            Boundary::PadConstant(v) => Some(v > s),
            Boundary::Clip => None,
        };
        let energy = binary_energy(&grid, cfg, unary, outside)?;
        let sol = solve_banded(energy, &margin, pinned.as_deref(), cfg.band, cfg.quantum)?;
        Ok((sol.min_labeling, sol.max_labeling))
    };
    #[cfg(feature = "parallel")]
    let solved: Vec<Result<(BinarySet, BinarySet)>> = {
        use rayon::prelude::*;
        quant.thresholds().par_iter().map(solve).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let solved: Vec<Result<(BinarySet, BinarySet)>> =
        quant.thresholds().iter().map(solve).collect();
    let mut mins = Vec::with_capacity(solved.len());
    let mut maxs = Vec::with_capacity(solved.len());
    for r in solved {
        let (a, b) = r?;
        mins.push(a);
        maxs.push(b);
    }
    for l in 1..mins.len() {
        if !mins[l].is_subset(&mins[l - 1]) || !maxs[l].is_subset(&maxs[l - 1]) {
            return Err(Error::Internal(format!(
                "superlevel cuts not nested between thresholds {} and {}",
                quant.thresholds()[l - 1],
                quant.thresholds()[l]
            )));
        }
    }
    Ok((mins, maxs))
}

/// Smallest and largest minimizers of `J(v) + (1/2h)|v - u|^2` over fields taking
/// the quantization values of `u`.
pub fn evolve_function_bounds(
    u: &ScalarField,
    cfg: &StepConfig,
) -> Result<(ScalarField, ScalarField)> {
    cfg.validate(u.grid())?;
    let quant = Quantization::of_field(u, cfg.n_levels)?;
    evolve_with_levels(u, cfg, &quant, None)
}

fn evolve_with_levels(
    u: &ScalarField,
    cfg: &StepConfig,
    quant: &Quantization,
    plateau: Option<f64>,
) -> Result<(ScalarField, ScalarField)> {
    if quant.thresholds().is_empty() {
        return Ok((u.clone(), u.clone()));
    }
    let (mins, maxs) = solve_levels_pinned(u, cfg, quant, plateau)?;
    Ok((quant.reconstruct(&mins)?, quant.reconstruct(&maxs)?))
}

/// One function step; `cfg.selection` picks the minimal or maximal superlevel cuts.
pub fn evolve_function_once(u: &ScalarField, cfg: &StepConfig) -> Result<ScalarField> {
    let (lo, hi) = evolve_function_bounds(u, cfg)?;
    Ok(match cfg.selection {
        Selection::Minimal => lo,
        Selection::Maximal => hi,
    })
}

/// One function step of the classical perimeter (total variation) flow.
pub fn evolve_tv_once(u: &ScalarField, h: f64) -> Result<ScalarField> {
    evolve_function_once(u, &StepConfig::new(h, EnergyConfig::TvBaseline))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum FlowMode {
    /// One cut per step on the current set, fidelity = its signed distance.
    Set,
    /// Level-stacked function steps on the clamped signed distance.
    #[default]
    Function,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlowConfig {
    pub step: StepConfig,
    pub n_steps: usize,
    /// Redistance the working field every this many steps (function mode).
    pub redistance_every: usize,
    pub mode: FlowMode,
    /// Function mode: the distance is clamped to `[-level_band, level_band]` cells
    /// and quantized uniformly there; cells on the clamped plateaus keep their side.
    pub level_band: f64,
}

impl FlowConfig {
    pub fn new(step: StepConfig, n_steps: usize) -> Self {
        FlowConfig {
            step,
            n_steps,
            redistance_every: 1,
            mode: FlowMode::Function,
            level_band: 2.0,
        }
    }

    pub fn with_mode(mut self, mode: FlowMode) -> Self {
        self.mode = mode;
        self
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepDiagnostics {
    pub step: usize,
    pub time: f64,
    /// Energy of the evolving set.
    pub energy: f64,
    /// Area of `{u <= 0}`, with sub-cell coverage read off the distance.
    pub area: f64,
    /// `sqrt(area / pi)`.
    pub radius: f64,
    pub boundary_cells: usize,
    /// Largest change of the working field over the step.
    pub sup_change: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlowTrajectory {
    pub times: Vec<f64>,
    pub fields: Vec<ScalarField>,
    /// One entry per completed step.
    pub diagnostics: Vec<StepDiagnostics>,
    /// Step at which the set became empty.
    pub extinction_step: Option<usize>,
}

pub const DIAGNOSTICS_HEADER: &str = "step,time,energy,area,radius,sup_change";

impl FlowTrajectory {
    /// The evolving sets `{u <= 0}`.
    pub fn sets(&self) -> Vec<BinarySet> {
        self.fields.iter().map(|f| f.sublevel(0.0)).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(DIAGNOSTICS_HEADER);
        s.push('\n');
        for d in &self.diagnostics {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                d.step, d.time, d.energy, d.area, d.radius, d.sup_change
            );
        }
        s
    }
}

/// Area of `{d <= 0}` counting each cell by the part of it the distance puts inside.
pub fn fractional_area(d: &ScalarField) -> f64 {
    let sp = d.grid().spacing();
    d.values()
        .iter()
        .map(|&v| (0.5 - v / sp).clamp(0.0, 1.0))
        .sum::<f64>()
        * d.grid().cell_area()
}

/// Energy of a set under the step's energy.
pub fn set_energy(set: &BinarySet, energy: &EnergyConfig) -> Result<f64> {
    match energy {
        EnergyConfig::OscSingle { rho } => energy_osc_binary(set, *rho),
        EnergyConfig::OscProfile(p) => energy_profile(&set.to_field(), p),
        EnergyConfig::TvBaseline => Ok(energy_tv(&set.to_field())),
    }
}

fn diagnostics(
    step: usize,
    cfg: &FlowConfig,
    d: &ScalarField,
    prev: &ScalarField,
) -> Result<StepDiagnostics> {
    let inside = d.sublevel(0.0);
    let area = fractional_area(d);
    Ok(StepDiagnostics {
        step,
        time: step as f64 * cfg.step.h,
        energy: set_energy(&inside, &cfg.step.energy)?,
        area,
        radius: (area / std::f64::consts::PI).sqrt(),
        boundary_cells: inside.boundary_count(),
        sup_change: d.sup_distance(prev),
    })
}

/// Runs the scheme from a level-set function whose evolving set is `{u0 <= 0}`.
pub fn flow(u0: &ScalarField, cfg: &FlowConfig) -> Result<FlowTrajectory> {
    let grid = *u0.grid();
    cfg.step.validate(&grid)?;
    if cfg.redistance_every == 0 {
        return Err(Error::InvalidParameter(
            "redistance_every must be >= 1".into(),
        ));
    }
    if !(cfg.level_band.is_finite() && cfg.level_band > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "level band must be positive, got {}",
            cfg.level_band
        )));
    }
    let mut traj = FlowTrajectory {
        times: vec![0.0],
        fields: vec![u0.clone()],
        diagnostics: Vec::new(),
        extinction_step: None,
    };
    if cfg.n_steps == 0 {
        return Ok(traj);
    }
    let bound = cfg.level_band * grid.spacing();
    let quant = Quantization::uniform(-bound, bound, cfg.step.n_levels)?;
    let mut u = match cfg.mode {
        FlowMode::Set => signed_distance(&u0.sublevel(0.0)).into_field(),
        FlowMode::Function => redistance(u0, SeedRule::AxisCombined)?.into_field(),
    };
    for step in 1..=cfg.n_steps {
        let next = match cfg.mode {
            FlowMode::Set => {
                let out = evolve_set_once(&u.sublevel(0.0), &cfg.step)?;
                signed_distance(out.selected(cfg.step.selection)).into_field()
            }
            FlowMode::Function => {
                let clamped = u.map(|v| v.clamp(-bound, bound))?;
                let (lo, hi) = evolve_with_levels(&clamped, &cfg.step, &quant, Some(bound))?;
                // The evolving set is a sublevel set: larger superlevel cuts mean a smaller set.
                let v = match cfg.step.selection {
                    Selection::Minimal => hi,
                    Selection::Maximal => lo,
                };
                if step % cfg.redistance_every == 0 {
                    redistance(&v, SeedRule::AxisCombined)?.into_field()
                } else {
                    v
                }
            }
        };
        traj.diagnostics.push(diagnostics(step, cfg, &next, &u)?);
        traj.times.push(step as f64 * cfg.step.h);
        let extinct = next.values().iter().all(|&v| v > 0.0);
        traj.fields.push(next.clone());
        u = next;
        if extinct {
            traj.extinction_step = Some(step);
            break;
        }
    }
    Ok(traj)
}

/// Runs the scheme from a set.
pub fn flow_set(set: &BinarySet, cfg: &FlowConfig) -> Result<FlowTrajectory> {
    flow(&signed_distance(set).into_field(), cfg)
}

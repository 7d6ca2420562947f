//! The two reference experiments: a disk evolved against the ball ODE, and a
//! stripe pattern evolved under the oscillation and the total-variation flows.

use crate::energy::EnergyConfig;
use crate::error::{Error, Result};
use crate::fastmarch::signed_distance;
use crate::grid::{BinarySet, Grid2D};
use crate::oracle::{ball_ode_integrate, BallOdeConfig};
use crate::profile::WeightProfile;
use crate::scheme::{
    flow, fractional_area, FlowConfig, FlowMode, FlowTrajectory, Selection, StepConfig,
};
use std::fmt::Write as _;

#[derive(Clone, Debug, PartialEq)]
pub struct BallExperiment {
    pub grid_size: usize,
    pub r0: f64,
    pub profile: WeightProfile,
    pub h: f64,
    pub steps: usize,
    pub n_levels: usize,
    /// Deviation is measured up to this fraction of the extinction time.
    pub horizon: f64,
}

impl BallExperiment {
    pub fn new(grid_size: usize, r0: f64, profile: WeightProfile, h: f64, steps: usize) -> Self {
        BallExperiment {
            grid_size,
            r0,
            profile,
            h,
            steps,
            n_levels: 64,
            horizon: 0.8,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BallRow {
    pub step: usize,
    pub time: f64,
    pub r_minus: Option<f64>,
    pub r_plus: Option<f64>,
    pub r_ode: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BallReport {
    pub rows: Vec<BallRow>,
    pub extinction_time: f64,
    /// Largest `|r_discrete - r_ode|` over both flows up to `horizon * T*`.
    pub max_deviation: f64,
}

pub const BALL_HEADER: &str = "step,time,r_discrete_minus,r_discrete_plus,r_ode";

impl BallReport {
    pub fn to_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let mut s = format!("{BALL_HEADER}\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{}",
                r.step,
                r.time,
                opt(r.r_minus),
                opt(r.r_plus),
                r.r_ode
            );
        }
        s
    }
}

fn radii(traj: &FlowTrajectory) -> Vec<f64> {
    traj.fields
        .iter()
        .map(|f| (fractional_area(f) / std::f64::consts::PI).sqrt())
        .collect()
}

/// Evolves a centred disk under both selections and the ODE.
pub fn run_ball(exp: &BallExperiment) -> Result<BallReport> {
    let grid = Grid2D::new(exp.grid_size, exp.grid_size)?;
    let c = (exp.grid_size as f64 - 1.0) / 2.0;
    let disk = BinarySet::disk(grid, [c, c], exp.r0);
    let ode = ball_ode_integrate(&BallOdeConfig {
        r0: exp.r0,
        profile: exp.profile.clone(),
        d: 2,
        dt: 0.01,
    })?;
    let mut rows: Vec<BallRow> = (0..=exp.steps)
        .map(|k| {
            let time = k as f64 * exp.h;
            BallRow {
                step: k,
                time,
                r_minus: None,
                r_plus: None,
                r_ode: ode.radius_at(time),
            }
        })
        .collect();
    if disk.is_empty() {
        return Ok(BallReport {
            rows: rows.into_iter().take(1).collect(),
            extinction_time: ode.extinction,
            max_deviation: 0.0,
        });
    }
    let u0 = signed_distance(&disk).into_field();
    let mut max_deviation: f64 = 0.0;
    for selection in [Selection::Minimal, Selection::Maximal] {
        let step = StepConfig::new(exp.h, EnergyConfig::OscProfile(exp.profile.clone()))
            .with_levels(exp.n_levels)
            .with_selection(selection);
        let traj = flow(&u0, &FlowConfig::new(step, exp.steps))?;
        for (k, r) in radii(&traj).into_iter().enumerate() {
            let row = &mut rows[k];
            match selection {
                Selection::Minimal => row.r_minus = Some(r),
                Selection::Maximal => row.r_plus = Some(r),
            }
            if row.time <= exp.horizon * ode.extinction {
                max_deviation = max_deviation.max((r - row.r_ode).abs());
            }
        }
        // After extinction the discrete radius stays zero.
        for row in rows.iter_mut().skip(traj.fields.len()) {
            match selection {
                Selection::Minimal => row.r_minus = Some(0.0),
                Selection::Maximal => row.r_plus = Some(0.0),
            }
            if row.time <= exp.horizon * ode.extinction {
                max_deviation = max_deviation.max(row.r_ode);
            }
        }
    }
    Ok(BallReport {
        rows,
        extinction_time: ode.extinction,
        max_deviation,
    })
}

/// Vertical stripes of the given period (dark half first), clipped to a centred disk.
pub fn stripe_pattern(grid: Grid2D, period: usize, radius: f64) -> BinarySet {
    let cx = (grid.width() as f64 - 1.0) / 2.0;
    let cy = (grid.height() as f64 - 1.0) / 2.0;
    let disk = BinarySet::disk(grid, [cx, cy], radius);
    let half = period / 2;
    BinarySet::from_fn(grid, |x, y| x % period < half && disk.contains((x, y)))
}

/// 4-connected components, each as a sorted list of cell indices.
pub fn components(set: &BinarySet) -> Vec<Vec<usize>> {
    let g = *set.grid();
    let mut label = vec![usize::MAX; g.len()];
    let mut out = Vec::new();
    for start in 0..g.len() {
        if !set.mask()[start] || label[start] != usize::MAX {
            continue;
        }
        let id = out.len();
        let mut cells = vec![start];
        label[start] = id;
        let mut k = 0;
        while k < cells.len() {
            let c = g.coords(cells[k]);
            for n in g.neighbors4(c) {
                let j = g.index(n.0, n.1);
                if set.mask()[j] && label[j] == usize::MAX {
                    label[j] = id;
                    cells.push(j);
                }
            }
            k += 1;
        }
        cells.sort_unstable();
        out.push(cells);
    }
    out
}

/// First step at which each component's footprint no longer meets the set.
pub fn component_extinction(footprints: &[Vec<usize>], sets: &[BinarySet]) -> Vec<Option<usize>> {
    footprints
        .iter()
        .map(|cells| {
            sets.iter()
                .position(|s| cells.iter().all(|&i| !s.mask()[i]))
        })
        .collect()
}

/// Survival steps with components alive at the end counted as `steps + 1`.
fn censored(ext: &[Option<usize>], steps: usize) -> Vec<usize> {
    ext.iter().map(|e| e.unwrap_or(steps + 1)).collect()
}

pub fn median(values: &[usize]) -> f64 {
    let mut v = values.to_vec();
    v.sort_unstable();
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2] as f64
    } else {
        (v[n / 2 - 1] + v[n / 2]) as f64 / 2.0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompareConfig {
    pub h: f64,
    pub rho: f64,
    pub mode: FlowMode,
    pub n_levels: usize,
    /// Steps of the total-variation flow; `None` runs it until half the
    /// components are gone (at most `max_steps`).
    pub tv_steps: Option<usize>,
    /// The oscillation flow runs `osc_factor` times as many steps as the TV flow.
    pub osc_factor: usize,
    pub max_steps: usize,
}

impl CompareConfig {
    pub fn new(h: f64, rho: f64) -> Self {
        CompareConfig {
            h,
            rho,
            mode: FlowMode::Set,
            n_levels: 64,
            tv_steps: None,
            osc_factor: 3,
            max_steps: 200,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComponentSurvival {
    pub id: usize,
    pub size: usize,
    pub tv: Option<usize>,
    pub osc: Option<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompareReport {
    pub components: Vec<ComponentSurvival>,
    pub tv_steps: usize,
    pub osc_steps: usize,
    pub tv_median: f64,
    pub osc_median: f64,
    /// `osc_median / tv_median`, survivors counted at one past the last step.
    pub ratio: f64,
    /// The oscillation median is a survivor count, so `ratio` is a lower bound.
    pub osc_censored: bool,
    /// The TV median is a survivor count as well; `ratio` then bounds nothing.
    pub tv_censored: bool,
    pub tv_sets: Vec<BinarySet>,
    pub osc_sets: Vec<BinarySet>,
}

pub const SURVIVAL_HEADER: &str = "component,size,tv_extinction_step,osc_extinction_step";

impl CompareReport {
    pub fn to_csv(&self) -> String {
        let opt = |v: Option<usize>| v.map(|x| x.to_string()).unwrap_or_default();
        let mut s = format!("{SURVIVAL_HEADER}\n");
        for c in &self.components {
            let _ = writeln!(s, "{},{},{},{}", c.id, c.size, opt(c.tv), opt(c.osc));
        }
        s
    }
}

fn run_flow(
    set: &BinarySet,
    energy: EnergyConfig,
    cfg: &CompareConfig,
    steps: usize,
) -> Result<Vec<BinarySet>> {
    let step = StepConfig::new(cfg.h, energy).with_levels(cfg.n_levels);
    let fc = FlowConfig::new(step, steps).with_mode(cfg.mode);
    Ok(flow(&signed_distance(set).into_field(), &fc)?.sets())
}

/// Runs both flows from `set` and compares how long its components survive.
pub fn compare_flows(set: &BinarySet, cfg: &CompareConfig) -> Result<CompareReport> {
    let footprints = components(set);
    if footprints.is_empty() {
        return Err(Error::Domain("the input has no components".into()));
    }
    let tv_sets = match cfg.tv_steps {
        Some(n) => run_flow(set, EnergyConfig::TvBaseline, cfg, n)?,
        None => {
            // Grow the horizon until at least half the components are gone.
            let mut n = 4usize.min(cfg.max_steps);
            loop {
                let sets = run_flow(set, EnergyConfig::TvBaseline, cfg, n)?;
                let gone = component_extinction(&footprints, &sets)
                    .iter()
                    .filter(|e| e.is_some())
                    .count();
                if 2 * gone >= footprints.len() || n >= cfg.max_steps {
                    break sets;
                }
                n = (2 * n).min(cfg.max_steps);
            }
        }
    };
    let tv_steps = tv_sets.len() - 1;
    let tv_ext = component_extinction(&footprints, &tv_sets);
    let tv_median = median(&censored(&tv_ext, tv_steps));
    let tv_censored = tv_median > tv_steps as f64;
    let osc_steps = ((cfg.osc_factor as f64 * tv_median).ceil() as usize).max(1);
    let osc_sets = run_flow(
        set,
        EnergyConfig::OscSingle { rho: cfg.rho },
        cfg,
        osc_steps,
    )?;
    let osc_steps = osc_sets.len() - 1;
    let osc_ext = component_extinction(&footprints, &osc_sets);
    let osc_surv = censored(&osc_ext, osc_steps);
    let osc_median = median(&osc_surv);
    let osc_censored = osc_median > osc_steps as f64;
    let components = footprints
        .iter()
        .enumerate()
        .map(|(id, cells)| ComponentSurvival {
            id,
            size: cells.len(),
            tv: tv_ext[id],
            osc: osc_ext[id],
        })
        .collect();
    Ok(CompareReport {
        components,
        tv_steps,
        osc_steps,
        tv_median,
        osc_median,
        ratio: osc_median / tv_median,
        osc_censored,
        tv_censored,
        tv_sets,
        osc_sets,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stripes_and_components() {
        let g = Grid2D::new(32, 32).unwrap();
        let s = stripe_pattern(g, 6, 12.0);
        let comps = components(&s);
        assert!(comps.len() >= 4);
        assert_eq!(comps.iter().map(Vec::len).sum::<usize>(), s.count());
        for c in &comps {
            let xs: Vec<usize> = c.iter().map(|&i| g.coords(i).0 / 6).collect();
            assert!(xs.windows(2).all(|w| w[0] == w[1]));
        }
    }

    #[test]
    fn extinction_and_median() {
        let g = Grid2D::new(4, 1).unwrap();
        let fp = vec![vec![0], vec![3]];
        let sets = vec![
            BinarySet::from_fn(g, |x, _| x == 0 || x == 3),
            BinarySet::from_fn(g, |x, _| x == 3),
            BinarySet::from_fn(g, |x, _| x == 3),
        ];
        assert_eq!(component_extinction(&fp, &sets), vec![Some(1), None]);
        assert_eq!(median(&[3, 1, 2]), 2.0);
        assert_eq!(median(&[4, 1, 2, 3]), 2.5);
    }

    #[test]
    fn blank_input_has_nothing_to_compare() {
        let g = Grid2D::new(8, 8).unwrap();
        assert!(compare_flows(&BinarySet::empty(g), &CompareConfig::new(2.0, 2.0)).is_err());
    }
}

//! Invariant suites with a TAP report.

use crate::curvature::{
    hamiltonian_f_f, hamiltonian_f_s, kappa_f, HamiltonianArgs, Matrix, SmoothSetDescriptor,
};
use crate::energy::{mixed_windows, osc_sum};
use crate::error::{Error, Result};
use crate::grid::{make_discrete_ball, BinarySet, Boundary, Grid2D, ScalarField};
use crate::maxflow::{brute_force_binary_min, solve_min_cut, BinaryEnergy, Encoding};
use crate::profile::make_trapezoid_profile;
use crate::scheme::{evolve_set_once, BandMode, StepConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fmt::Write as _;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Energy,
    Cut,
    Hamiltonian,
    Scheme,
}

impl Suite {
    pub const ALL: [Suite; 4] = [Suite::Energy, Suite::Cut, Suite::Hamiltonian, Suite::Scheme];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Energy => "energy",
            Suite::Cut => "cut",
            Suite::Hamiltonian => "hamiltonian",
            Suite::Scheme => "scheme",
        }
    }

    pub fn parse(s: &str) -> Result<Suite> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown suite {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckConfig {
    pub seed: u64,
    pub suites: Vec<Suite>,
    /// Capacity quantum handed to the cut solver.
    pub quantum: f64,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig {
            seed: 1,
            suites: Suite::ALL.to_vec(),
            quantum: crate::maxflow::DEFAULT_QUANTUM,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckOutcome {
    pub name: String,
    pub failure: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckReport {
    pub outcomes: Vec<CheckOutcome>,
    pub bailed_out: Option<String>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.bailed_out.is_none() && self.outcomes.iter().all(|o| o.failure.is_none())
    }

    pub fn to_tap(&self) -> String {
        let mut s = String::from("TAP version 13\n");
        if let Some(reason) = &self.bailed_out {
            let _ = writeln!(s, "Bail out! {reason}");
            return s;
        }
        let _ = writeln!(s, "1..{}", self.outcomes.len());
        for (k, o) in self.outcomes.iter().enumerate() {
            match &o.failure {
                None => {
                    let _ = writeln!(s, "ok {} - {}", k + 1, o.name);
                }
                Some(why) => {
                    let _ = writeln!(s, "not ok {} - {}\n  # {}", k + 1, o.name, why);
                }
            }
        }
        s
    }
}

fn outcome(name: &str, r: std::result::Result<(), String>) -> CheckOutcome {
    CheckOutcome {
        name: name.to_string(),
        failure: r.err(),
    }
}

pub fn run_checks(cfg: &CheckConfig) -> CheckReport {
    if !(cfg.quantum.is_finite() && cfg.quantum > 0.0) {
        return CheckReport {
            outcomes: Vec::new(),
            bailed_out: Some(format!("capacity quantum {} is not positive", cfg.quantum)),
        };
    }
    let mut outcomes = Vec::new();
    for &suite in &cfg.suites {
        let mut rng = ChaCha8Rng::seed_from_u64(
            cfg.seed ^ (suite as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15),
        );
        match suite {
            Suite::Energy => {
                outcomes.push(outcome(
                    "energy: submodularity on 200 random pairs",
                    submodularity(&mut rng, 200),
                ));
                outcomes.push(outcome(
                    "energy: coarea on 200 quantized fields",
                    coarea(&mut rng, 200),
                ));
            }
            Suite::Cut => {
                outcomes.push(outcome(
                    "cut: 100 instances match exhaustive search",
                    cut_vs_brute_force(&mut rng, 100, cfg.quantum),
                ));
            }
            Suite::Hamiltonian => {
                outcomes.push(outcome(
                    "hamiltonian: F_f = |p| kappa_f on disks",
                    hamil_curv(&mut rng, 100),
                ));
                outcomes.push(outcome(
                    "hamiltonian: geometricity",
                    geometricity(&mut rng, 100),
                ));
                outcomes.push(outcome(
                    "hamiltonian: degenerate ellipticity",
                    ellipticity(&mut rng, 100),
                ));
                outcomes.push(outcome(
                    "hamiltonian: monotone in the set",
                    monotone_in_set(&mut rng, 100),
                ));
            }
            Suite::Scheme => {
                outcomes.push(outcome(
                    "scheme: comparison on nested blobs",
                    comparison(&mut rng, 5, cfg.quantum),
                ));
                outcomes.push(outcome(
                    "scheme: translation invariance",
                    translation(&mut rng, 3, cfg.quantum),
                ));
            }
        }
    }
    CheckReport {
        outcomes,
        bailed_out: None,
    }
}

pub fn random_set(rng: &mut impl Rng, grid: Grid2D, density: f64) -> BinarySet {
    BinarySet::from_fn(grid, |_, _| rng.gen_bool(density))
}

/// Union of a few random disks.
pub fn random_blob(
    rng: &mut impl Rng,
    grid: Grid2D,
    n_disks: usize,
    r_range: (f64, f64),
) -> BinarySet {
    let (w, h) = (grid.width() as f64, grid.height() as f64);
    let mut set = BinarySet::empty(grid);
    for _ in 0..n_disks {
        let r = rng.gen_range(r_range.0..r_range.1);
        let c = [rng.gen_range(r..w - r), rng.gen_range(r..h - r)];
        set = set.union(&BinarySet::disk(grid, c, r));
    }
    set
}

/// Cells within Chebyshev distance `k` of the set.
pub fn dilate(set: &BinarySet, k: isize) -> BinarySet {
    let g = *set.grid();
    BinarySet::from_fn(g, |x, y| {
        (-k..=k)
            .any(|dy| (-k..=k).any(|dx| g.offset((x, y), dx, dy).is_some_and(|c| set.contains(c))))
    })
}

fn submodularity(rng: &mut ChaCha8Rng, n: usize) -> std::result::Result<(), String> {
    let g = Grid2D::new(32, 32).map_err(|e| e.to_string())?;
    for k in 0..n {
        let rho = [1.0, 1.5, 2.0, 3.0][k % 4];
        let ball = make_discrete_ball(rho).map_err(|e| e.to_string())?;
        let (da, db) = (rng.gen_range(0.1..0.9), rng.gen_range(0.1..0.9));
        let a = random_set(rng, g, da);
        let b = random_set(rng, g, db);
        let e = |s: &BinarySet| mixed_windows(s, &ball);
        let lhs = e(&a.union(&b)) + e(&a.intersection(&b));
        let rhs = e(&a) + e(&b);
        if lhs > rhs {
            return Err(format!("pair {k} (rho {rho}): {lhs} > {rhs} mixed windows"));
        }
    }
    Ok(())
}

fn coarea(rng: &mut ChaCha8Rng, n: usize) -> std::result::Result<(), String> {
    let g = Grid2D::new(32, 32).map_err(|e| e.to_string())?;
    for k in 0..n {
        let rho = [1.0, 1.5, 2.0, 3.0][k % 4];
        let ball = make_discrete_ball(rho).map_err(|e| e.to_string())?;
        let levels = rng.gen_range(1..8u32);
        let u = ScalarField::from_fn(g, |_, _| rng.gen_range(0..=levels) as f64)
            .map_err(|e| e.to_string())?;
        let total = osc_sum(&u, &ball);
        let sliced: u64 = (1..=levels)
            .map(|l| mixed_windows(&u.sublevel(l as f64 - 0.5).complement(), &ball))
            .sum();
        if total != sliced as f64 {
            return Err(format!(
                "field {k}: oscillation sum {total} != {sliced} summed over levels"
            ));
        }
    }
    Ok(())
}

fn cut_vs_brute_force(
    rng: &mut ChaCha8Rng,
    n: usize,
    quantum: f64,
) -> std::result::Result<(), String> {
    for k in 0..n {
        let (w, h) = [(4, 4), (5, 3), (3, 5), (8, 2), (4, 3)][k % 5];
        let boundary = if k % 3 == 0 {
            Boundary::PadConstant(rng.gen_range(0..2) as f64)
        } else {
            Boundary::Clip
        };
        let g = Grid2D::new(w, h)
            .and_then(|g| g.with_boundary(boundary))
            .map_err(|e| e.to_string())?;
        let rho = if rng.gen_bool(0.5) { 1.0 } else { 1.5 };
        let ball = make_discrete_ball(rho).map_err(|e| e.to_string())?;
        let unary = (0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let base = BinaryEnergy::new(g, vec![(ball, 1.0 / (2.0 * rho))], vec![], unary)
            .map_err(|e| e.to_string())?;
        let bf = brute_force_binary_min(&base, quantum).map_err(|e| e.to_string())?;
        for enc in [Encoding::PerWindow, Encoding::SharedRows] {
            let graph = base
                .clone()
                .with_encoding(enc)
                .build_graph(quantum)
                .map_err(|e| e.to_string())?;
            let sol = solve_min_cut(&graph);
            if sol.energy_quanta as i128 != bf.value_quanta {
                return Err(format!(
                    "instance {k} ({enc:?}): cut {} vs exhaustive {}",
                    sol.energy_quanta, bf.value_quanta
                ));
            }
            if sol.min_labeling != bf.lattice_min() || sol.max_labeling != bf.lattice_max() {
                return Err(format!(
                    "instance {k} ({enc:?}): extremal labelings differ from the lattice bounds"
                ));
            }
        }
    }
    Ok(())
}

fn disk_point(rng: &mut ChaCha8Rng) -> (SmoothSetDescriptor, [f64; 2], f64) {
    let r = rng.gen_range(4.0..40.0);
    let c = [rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)];
    let a = rng.gen_range(0.0..std::f64::consts::TAU);
    (
        SmoothSetDescriptor::Disk {
            center: c,
            radius: r,
        },
        [c[0] + r * a.cos(), c[1] + r * a.sin()],
        a,
    )
}

/// Gradient and Hessian of `lambda (R - |y - c|)` at a boundary point.
fn disk_jet(a: f64, r: f64, lambda: f64) -> ([f64; 2], Matrix) {
    let n = [a.cos(), a.sin()];
    let p = [-lambda * n[0], -lambda * n[1]];
    let k = lambda / r;
    (
        p,
        [
            [-k * (1.0 - n[0] * n[0]), k * n[0] * n[1]],
            [k * n[0] * n[1], -k * (1.0 - n[1] * n[1])],
        ],
    )
}

fn radius_of(d: &SmoothSetDescriptor) -> f64 {
    match d {
        SmoothSetDescriptor::Disk { radius, .. } => *radius,
        _ => unreachable!(),
    }
}

fn hamil_curv(rng: &mut ChaCha8Rng, n: usize) -> std::result::Result<(), String> {
    for k in 0..n {
        let (disk, x, a) = disk_point(rng);
        let r = radius_of(&disk);
        let delta = rng.gen_range(0.2..2.0);
        let rho0 = rng.gen_range(delta + 0.5..2.0 * r);
        let prof =
            make_trapezoid_profile(rho0, delta, rng.gen_range(1..12)).map_err(|e| e.to_string())?;
        let lambda = rng.gen_range(0.1..5.0);
        let (p, xx) = disk_jet(a, r, lambda);
        let f = hamiltonian_f_f(&HamiltonianArgs::new(x, p, xx, &disk), &prof)
            .map_err(|e| e.to_string())?;
        let kf = kappa_f(&disk, x, &prof).map_err(|e| e.to_string())?.value;
        if (f - lambda * kf).abs() > 1e-10 {
            return Err(format!(
                "config {k}: F_f = {f}, |p| kappa_f = {}",
                lambda * kf
            ));
        }
    }
    Ok(())
}

fn random_symmetric(rng: &mut ChaCha8Rng, scale: f64) -> Matrix {
    let (a, b, c) = (
        rng.gen_range(-scale..scale),
        rng.gen_range(-scale..scale),
        rng.gen_range(-scale..scale),
    );
    [[a, b], [b, c]]
}

fn geometricity(rng: &mut ChaCha8Rng, n: usize) -> std::result::Result<(), String> {
    for k in 0..n {
        let (disk, x, a) = disk_point(rng);
        let (p, _) = disk_jet(a, radius_of(&disk), rng.gen_range(0.2..3.0));
        let xx = random_symmetric(rng, 0.5);
        let s = rng.gen_range(0.5..10.0);
        let lambda = rng.gen_range(1e-3..10.0);
        let mu = rng.gen_range(-5.0..5.0);
        let base = hamiltonian_f_s(&HamiltonianArgs::new(x, p, xx, &disk), s)
            .map_err(|e| e.to_string())?;
        let p2 = [lambda * p[0], lambda * p[1]];
        let mut xx2 = xx;
        for i in 0..2 {
            for j in 0..2 {
                xx2[i][j] = lambda * xx[i][j] + mu * p[i] * p[j];
            }
        }
        let scaled = hamiltonian_f_s(&HamiltonianArgs::new(x, p2, xx2, &disk), s)
            .map_err(|e| e.to_string())?;
        if (scaled - lambda * base).abs() > 1e-12 * (1.0 + (lambda * base).abs()) {
            return Err(format!("config {k}: {scaled} != {lambda} * {base}"));
        }
    }
    Ok(())
}

fn ellipticity(rng: &mut ChaCha8Rng, n: usize) -> std::result::Result<(), String> {
    for k in 0..n {
        let (disk, x, a) = disk_point(rng);
        let (p, _) = disk_jet(a, radius_of(&disk), rng.gen_range(0.2..3.0));
        let xx = random_symmetric(rng, 0.5);
        // Y = X + v v^T is above X.
        let v = [rng.gen_range(-0.7..0.7), rng.gen_range(-0.7..0.7)];
        let yy = [
            [xx[0][0] + v[0] * v[0], xx[0][1] + v[0] * v[1]],
            [xx[1][0] + v[1] * v[0], xx[1][1] + v[1] * v[1]],
        ];
        let s = rng.gen_range(0.5..10.0);
        let fx = hamiltonian_f_s(&HamiltonianArgs::new(x, p, xx, &disk), s)
            .map_err(|e| e.to_string())?;
        let fy = hamiltonian_f_s(&HamiltonianArgs::new(x, p, yy, &disk), s)
            .map_err(|e| e.to_string())?;
        if fx < fy - 1e-12 {
            return Err(format!("config {k}: F(X) = {fx} < F(Y) = {fy} with X <= Y"));
        }
    }
    Ok(())
}

fn monotone_in_set(rng: &mut ChaCha8Rng, n: usize) -> std::result::Result<(), String> {
    for k in 0..n {
        // Two disks internally tangent at x: E inside G.
        let r1 = rng.gen_range(2.0..20.0);
        let r2 = r1 + rng.gen_range(0.5..20.0);
        let a = rng.gen_range(0.0..std::f64::consts::TAU);
        let n_out = [a.cos(), a.sin()];
        let x = [r2 * n_out[0], r2 * n_out[1]];
        let e = SmoothSetDescriptor::Disk {
            center: [(r2 - r1) * n_out[0], (r2 - r1) * n_out[1]],
            radius: r1,
        };
        let g = SmoothSetDescriptor::Disk {
            center: [0.0, 0.0],
            radius: r2,
        };
        let p = [-n_out[0], -n_out[1]];
        let xx = random_symmetric(rng, 0.5);
        let s = rng.gen_range(0.5..30.0);
        let fe =
            hamiltonian_f_s(&HamiltonianArgs::new(x, p, xx, &e), s).map_err(|e| e.to_string())?;
        let fg =
            hamiltonian_f_s(&HamiltonianArgs::new(x, p, xx, &g), s).map_err(|e| e.to_string())?;
        if fe < fg - 1e-12 {
            return Err(format!(
                "config {k}: F(E) = {fe} < F(G) = {fg} with E inside G"
            ));
        }
    }
    Ok(())
}

fn comparison(rng: &mut ChaCha8Rng, n: usize, quantum: f64) -> std::result::Result<(), String> {
    let g = Grid2D::new(32, 32).map_err(|e| e.to_string())?;
    let cfg = StepConfig::new(2.0, crate::energy::EnergyConfig::OscSingle { rho: 2.0 })
        .with_band(BandMode::Full)
        .with_quantum(quantum);
    for k in 0..n {
        let e = random_blob(rng, g, 3, (3.0, 7.0));
        let e2 = dilate(&e, rng.gen_range(1..3));
        let a = evolve_set_once(&e, &cfg).map_err(|e| e.to_string())?;
        let b = evolve_set_once(&e2, &cfg).map_err(|e| e.to_string())?;
        if !a.plus.is_subset(&b.minus) {
            return Err(format!("pair {k}: T+ E is not inside T- E'"));
        }
        if !a.minus.is_subset(&a.plus) {
            return Err(format!("pair {k}: T- E is not inside T+ E"));
        }
    }
    Ok(())
}

fn translation(rng: &mut ChaCha8Rng, n: usize, quantum: f64) -> std::result::Result<(), String> {
    let g = Grid2D::new(40, 40)
        .and_then(|g| g.with_boundary(Boundary::PadConstant(0.0)))
        .map_err(|e| e.to_string())?;
    let cfg = StepConfig::new(2.0, crate::energy::EnergyConfig::OscSingle { rho: 2.0 })
        .with_quantum(quantum);
    for k in 0..n {
        let e = random_blob(rng, g, 2, (3.0, 6.0))
            .intersection(&BinarySet::from_fn(g, |x, y| x < 28 && y < 28));
        let (dx, dy) = (rng.gen_range(1..6), rng.gen_range(1..6));
        let a = evolve_set_once(&e, &cfg).map_err(|e| e.to_string())?;
        let b = evolve_set_once(&e.shifted(dx, dy), &cfg).map_err(|e| e.to_string())?;
        if a.minus.shifted(dx, dy) != b.minus || a.plus.shifted(dx, dy) != b.plus {
            return Err(format!(
                "blob {k}: step does not commute with the shift ({dx}, {dy})"
            ));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_suites_pass() {
        let report = run_checks(&CheckConfig::default());
        assert!(report.passed(), "{}", report.to_tap());
        let tap = report.to_tap();
        assert!(tap.starts_with("TAP version 13\n1..9\nok 1 - "));
    }

    #[test]
    fn zero_quantum_bails_out() {
        let report = run_checks(&CheckConfig {
            quantum: 0.0,
            ..CheckConfig::default()
        });
        assert!(!report.passed());
        assert!(report.to_tap().contains("Bail out!"));
    }

    #[test]
    fn suite_filter() {
        let report = run_checks(&CheckConfig {
            suites: vec![Suite::Energy],
            ..CheckConfig::default()
        });
        assert_eq!(report.outcomes.len(), 2);
        assert!(Suite::parse("nope").is_err());
        assert_eq!(Suite::parse("cut").unwrap(), Suite::Cut);
    }
}

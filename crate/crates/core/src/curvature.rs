//! Pointwise non-local curvatures and the level-set Hamiltonians built on them.
//!
//! Everything is two-dimensional. At a boundary point with outer normal `nu`
//! and Euclidean curvature `k`, the radius-`s` curvature is the sum of
//!
//! - `kappa_s^+ = (1 + s k) / 2s`, active when the outer ball `B(x + s nu, s)` misses the set;
//! - `kappa_s^- = -(1 - s k)^+ / 2s`, active when the inner ball `B(x - s nu, s)` lies inside it.
//!
//! The Hamiltonian form takes a gradient `p` and Hessian `X` of a level-set
//! function whose superlevel set is `K`, with `p` pointing into `K`.

use crate::error::{Error, Result};
use crate::fastmarch::SignedDistanceField;
use crate::grid::ScalarField;
use crate::profile::WeightProfile;

pub type Point = [f64; 2];
pub type Matrix = [[f64; 2]; 2];

/// Distance queries against a set `K`.
pub trait SetQuery {
    /// `dist(y, K)`; zero on `K`.
    fn dist_to_set(&self, y: Point) -> f64;
    /// `dist(y, K^c)`; zero off `K`.
    fn dist_to_complement(&self, y: Point) -> f64;
    /// Slack allowed when testing ball activation conditions.
    fn tolerance(&self) -> f64;
}

/// Closed-form sets.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SmoothSetDescriptor {
    Disk {
        center: Point,
        radius: f64,
    },
    /// `{y : <y, normal> <= offset}` with `normal` a unit vector.
    HalfPlane {
        normal: Point,
        offset: f64,
    },
    /// Axis-aligned, centred at the origin.
    Rectangle {
        width: f64,
        height: f64,
    },
    /// The whole plane.
    Whole,
}

fn norm(v: Point) -> f64 {
    v[0].hypot(v[1])
}

impl SmoothSetDescriptor {
    /// Negative inside, positive outside.
    pub fn signed_distance(&self, y: Point) -> f64 {
        match *self {
            SmoothSetDescriptor::Disk { center, radius } => {
                norm([y[0] - center[0], y[1] - center[1]]) - radius
            }
            SmoothSetDescriptor::HalfPlane { normal, offset } => {
                y[0] * normal[0] + y[1] * normal[1] - offset
            }
            SmoothSetDescriptor::Rectangle { width, height } => {
                let qx = y[0].abs() - width / 2.0;
                let qy = y[1].abs() - height / 2.0;
                norm([qx.max(0.0), qy.max(0.0)]) + qx.max(qy).min(0.0)
            }
            SmoothSetDescriptor::Whole => f64::NEG_INFINITY,
        }
    }

    fn check_boundary(&self, x: Point) -> Result<()> {
        let d = self.signed_distance(x);
        let scale = match *self {
            SmoothSetDescriptor::Disk { radius, .. } => radius.max(1.0),
            SmoothSetDescriptor::Rectangle { width, height } => width.max(height).max(1.0),
            _ => 1.0 + norm(x),
        };
        if d.is_finite() && d.abs() <= 1e-9 * scale {
            Ok(())
        } else {
            Err(Error::NotOnBoundary(d))
        }
    }

    /// Outer unit normal and Euclidean curvature at a boundary point.
    pub fn normal_and_curvature(&self, x: Point) -> Result<(Point, f64)> {
        self.check_boundary(x)?;
        match *self {
            SmoothSetDescriptor::Disk { center, radius } => {
                let v = [x[0] - center[0], x[1] - center[1]];
                let n = norm(v);
                Ok(([v[0] / n, v[1] / n], 1.0 / radius))
            }
            SmoothSetDescriptor::HalfPlane { normal, .. } => Ok((normal, 0.0)),
            SmoothSetDescriptor::Rectangle { width, height } => {
                let ex = (x[0].abs() - width / 2.0).abs();
                let ey = (x[1].abs() - height / 2.0).abs();
                let tol = 1e-9 * width.max(height);
                if ex <= tol && ey <= tol {
                    return Err(Error::Domain("the normal is undefined at a corner".into()));
                }
                if ex <= tol {
                    Ok(([x[0].signum(), 0.0], 0.0))
                } else {
                    Ok(([0.0, x[1].signum()], 0.0))
                }
            }
            SmoothSetDescriptor::Whole => unreachable!("the whole plane has no boundary"),
        }
    }
}

impl SetQuery for SmoothSetDescriptor {
    fn dist_to_set(&self, y: Point) -> f64 {
        self.signed_distance(y).max(0.0)
    }

    fn dist_to_complement(&self, y: Point) -> f64 {
        match self {
            SmoothSetDescriptor::Whole => f64::INFINITY,
            _ => (-self.signed_distance(y)).max(0.0),
        }
    }

    fn tolerance(&self) -> f64 {
        1e-9
    }
}

/// A set read off a fast-marched distance, interpolated bilinearly.
#[derive(Clone, Copy, Debug)]
pub struct GridSetQuery<'a> {
    sdf: &'a SignedDistanceField,
}

impl<'a> GridSetQuery<'a> {
    pub fn new(sdf: &'a SignedDistanceField) -> Self {
        GridSetQuery { sdf }
    }

    /// Distance at a world point; cell `(i, j)` sits at `(i, j) * spacing`.
    pub fn signed_distance(&self, y: Point) -> f64 {
        bilinear(self.sdf.field(), y)
    }
}

fn bilinear(f: &ScalarField, y: Point) -> f64 {
    let g = f.grid();
    let sp = g.spacing();
    let fx = (y[0] / sp).clamp(0.0, (g.width() - 1) as f64);
    let fy = (y[1] / sp).clamp(0.0, (g.height() - 1) as f64);
    let (x0, y0) = (fx.floor() as usize, fy.floor() as usize);
    let (x1, y1) = ((x0 + 1).min(g.width() - 1), (y0 + 1).min(g.height() - 1));
    let (tx, ty) = (fx - x0 as f64, fy - y0 as f64);
    let a = f.get((x0, y0)) * (1.0 - tx) + f.get((x1, y0)) * tx;
    let b = f.get((x0, y1)) * (1.0 - tx) + f.get((x1, y1)) * tx;
    a * (1.0 - ty) + b * ty
}

impl SetQuery for GridSetQuery<'_> {
    fn dist_to_set(&self, y: Point) -> f64 {
        self.signed_distance(y).max(0.0)
    }

    fn dist_to_complement(&self, y: Point) -> f64 {
        (-self.signed_distance(y)).max(0.0)
    }

    fn tolerance(&self) -> f64 {
        self.sdf.grid().spacing()
    }
}

/// Value of a branch whose activation condition holds with equality.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OneSided {
    pub active: f64,
    pub inactive: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KappaS {
    pub plus: f64,
    pub minus: f64,
    /// Set for a branch sitting exactly on its activation threshold; `plus` and
    /// `minus` then report the active value.
    pub plus_tie: Option<OneSided>,
    pub minus_tie: Option<OneSided>,
}

impl KappaS {
    pub fn sum(&self) -> f64 {
        self.plus + self.minus
    }

    pub fn is_degenerate(&self) -> bool {
        self.plus_tie.is_some() || self.minus_tie.is_some()
    }
}

/// Margin of the outward condition `dist(x + s nu, E) >= s` and of the inward
/// condition `dist(x - s nu, E^c) >= s`.
fn activation_margins(set: &SmoothSetDescriptor, x: Point, nu: Point, s: f64) -> (f64, f64) {
    let out = [x[0] + s * nu[0], x[1] + s * nu[1]];
    let inn = [x[0] - s * nu[0], x[1] - s * nu[1]];
    (set.dist_to_set(out) - s, set.dist_to_complement(inn) - s)
}

pub fn kappa_s(set: &SmoothSetDescriptor, x: Point, s: f64) -> Result<KappaS> {
    if !(s.is_finite() && s > 0.0) {
        return Err(Error::Domain(format!("radius must be positive, got {s}")));
    }
    let (nu, k) = set.normal_and_curvature(x)?;
    let (m_out, m_in) = activation_margins(set, x, nu, s);
    // A condition holding at s but failing for any larger radius is on its threshold.
    let (n_out, n_in) = activation_margins(set, x, nu, s * (1.0 + 1e-7));
    let tie = 1e-9 * (1.0 + s);
    let plus_value = (1.0 + s * k).max(0.0) / (2.0 * s);
    let minus_value = -(1.0 - s * k).max(0.0) / (2.0 * s);
    let branch = |margin: f64, next: f64, value: f64| -> (f64, Option<OneSided>) {
        if margin < -tie {
            (0.0, None)
        } else if next < -tie && value != 0.0 {
            (
                value,
                Some(OneSided {
                    active: value,
                    inactive: 0.0,
                }),
            )
        } else {
            (value, None)
        }
    };
    let (plus, plus_tie) = branch(m_out, n_out, plus_value);
    let (minus, minus_tie) = branch(m_in, n_in, minus_value);
    Ok(KappaS {
        plus,
        minus,
        plus_tie,
        minus_tie,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KappaF {
    pub value: f64,
    /// Radius at which an activation switches inside the profile's support,
    /// located by bisection between quadrature nodes.
    pub switch_radius: Option<f64>,
    /// `kappa_s` just below and just above the switch.
    pub one_sided: Option<(KappaS, KappaS)>,
}

impl KappaF {
    pub fn is_degenerate(&self) -> bool {
        self.switch_radius.is_some()
    }
}

pub fn kappa_f(set: &SmoothSetDescriptor, x: Point, profile: &WeightProfile) -> Result<KappaF> {
    let nodes = profile.quadrature();
    let mut value = 0.0;
    let mut states = Vec::with_capacity(nodes.len());
    for q in nodes {
        let ks = kappa_s(set, x, q.radius)?;
        value += q.weight * ks.sum();
        states.push((
            q.radius,
            ks.plus != 0.0,
            ks.minus != 0.0,
            ks.is_degenerate(),
        ));
    }
    let (nu, _) = set.normal_and_curvature(x)?;
    let mut switch_radius = states.iter().find(|s| s.3).map(|s| s.0);
    if switch_radius.is_none() {
        for w in states.windows(2) {
            let (a, b) = (w[0], w[1]);
            if a.1 == b.1 && a.2 == b.2 {
                continue;
            }
            let (mut lo, mut hi) = (a.0, b.0);
            let flips = |s: f64| {
                let (m_out, m_in) = activation_margins(set, x, nu, s);
                let tie = 1e-9 * (1.0 + s);
                ((m_out >= -tie) != a.1) || ((m_in >= -tie) != a.2)
            };
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                if flips(mid) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            switch_radius = Some(0.5 * (lo + hi));
            break;
        }
    }
    let one_sided = match switch_radius {
        Some(s) => {
            let eps = 1e-6 * s;
            Some((kappa_s(set, x, s - eps)?, kappa_s(set, x, s + eps)?))
        }
        None => None,
    };
    Ok(KappaF {
        value,
        switch_radius,
        one_sided,
    })
}

/// Arguments of the level-set Hamiltonian.
#[derive(Clone, Copy)]
pub struct HamiltonianArgs<'a> {
    pub x: Point,
    pub p: Point,
    pub xx: Matrix,
    pub k: &'a dyn SetQuery,
}

impl<'a> HamiltonianArgs<'a> {
    pub fn new(x: Point, p: Point, xx: Matrix, k: &'a dyn SetQuery) -> Self {
        HamiltonianArgs { x, p, xx, k }
    }
}

/// Unit gradient, `|p|`, and the tangential entry of `P X P`.
fn frame(args: &HamiltonianArgs<'_>) -> Result<(Point, f64, f64)> {
    let np = norm(args.p);
    if !(np > 0.0) || !np.is_finite() {
        return Err(Error::SingularGradient);
    }
    let ph = [args.p[0] / np, args.p[1] / np];
    let t = [-ph[1], ph[0]];
    let x = args.xx;
    let xtt = t[0] * (x[0][0] * t[0] + x[0][1] * t[1]) + t[1] * (x[1][0] * t[0] + x[1][1] * t[1]);
    Ok((ph, np, xtt))
}

/// Activation margins `dist(x - s p^, K) - s` and `dist(x + s p^, K^c) - s`.
fn hamiltonian_margins(args: &HamiltonianArgs<'_>, ph: Point, s: f64) -> (f64, f64) {
    let x = args.x;
    let out = [x[0] - s * ph[0], x[1] - s * ph[1]];
    let inn = [x[0] + s * ph[0], x[1] + s * ph[1]];
    (
        args.k.dist_to_set(out) - s,
        args.k.dist_to_complement(inn) - s,
    )
}

fn branch_values(np: f64, xtt: f64, s: f64) -> (f64, f64) {
    let plus = np / (2.0 * s) * (1.0 - s * xtt / np).max(0.0);
    let minus = -np / (2.0 * s) * (1.0 + s * xtt / np).max(0.0);
    (plus, minus)
}

fn check_radius(s: f64) -> Result<()> {
    if s.is_finite() && s > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("radius must be positive, got {s}")))
    }
}

pub fn hamiltonian_f_s(args: &HamiltonianArgs<'_>, s: f64) -> Result<f64> {
    check_radius(s)?;
    let (ph, np, xtt) = frame(args)?;
    let (m_out, m_in) = hamiltonian_margins(args, ph, s);
    let tol = args.k.tolerance() * (1.0 + s);
    let (plus, minus) = branch_values(np, xtt, s);
    let plus = if m_out >= -tol { plus } else { 0.0 };
    let minus = if m_in >= -tol { minus } else { 0.0 };
    Ok(plus + minus)
}

pub fn hamiltonian_f_f(args: &HamiltonianArgs<'_>, profile: &WeightProfile) -> Result<f64> {
    let mut total = 0.0;
    for q in profile.quadrature() {
        total += q.weight * hamiltonian_f_s(args, q.radius)?;
    }
    Ok(total)
}

/// The ramp `H_eps(t)`: 0 for `t <= -eps`, 1 for `t >= 0`.
pub fn ramp(t: f64, eps: f64) -> f64 {
    ((t + eps) / eps).clamp(0.0, 1.0)
}

/// `F_s` with both activation indicators replaced by `H_eps` of the margin.
pub fn hamiltonian_f_eps(args: &HamiltonianArgs<'_>, s: f64, eps: f64) -> Result<f64> {
    check_radius(s)?;
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::Domain(format!("eps must be positive, got {eps}")));
    }
    let (ph, np, xtt) = frame(args)?;
    let (m_out, m_in) = hamiltonian_margins(args, ph, s);
    let (plus, minus) = branch_values(np, xtt, s);
    Ok(ramp(m_out, eps) * plus + ramp(m_in, eps) * minus)
}

/// Growth bound `(|p|/2s)((1 + s/|p|) + (1 - s/|p|)^+)` for `X = +-I` in two dimensions.
pub fn f_eps_growth_bound(np: f64, s: f64) -> f64 {
    np / (2.0 * s) * ((1.0 + s / np) + (1.0 - s / np).max(0.0))
}

/// Superlevel set `{u >= level}` of a grid field, distances by scanning cells.
struct LevelQuery<'a> {
    u: &'a ScalarField,
    level: f64,
    /// Scan radius; larger distances are reported as infinite.
    reach: f64,
}

impl LevelQuery<'_> {
    fn nearest(&self, y: Point, inside: bool) -> f64 {
        let g = self.u.grid();
        let sp = g.spacing();
        let r = (self.reach / sp).ceil() as isize + 1;
        let cx = (y[0] / sp).round() as isize;
        let cy = (y[1] / sp).round() as isize;
        let mut best = f64::INFINITY;
        for j in (cy - r).max(0)..=(cy + r).min(g.height() as isize - 1) {
            for i in (cx - r).max(0)..=(cx + r).min(g.width() as isize - 1) {
                let v = self.u.get((i as usize, j as usize));
                if (v >= self.level) == inside {
                    let d = norm([i as f64 * sp - y[0], j as f64 * sp - y[1]]);
                    best = best.min(d);
                }
            }
        }
        if best > self.reach {
            f64::INFINITY
        } else {
            best
        }
    }
}

impl SetQuery for LevelQuery<'_> {
    fn dist_to_set(&self, y: Point) -> f64 {
        self.nearest(y, true)
    }

    fn dist_to_complement(&self, y: Point) -> f64 {
        self.nearest(y, false)
    }

    fn tolerance(&self) -> f64 {
        self.u.grid().spacing()
    }
}

/// Gradients below this are treated as zero and the cell is frozen.
pub const FROZEN_GRADIENT: f64 = 1e-8;

/// Forward Euler step `u <- u - dt F_eps(x, Du, D^2u, {u >= u(x)})` with
/// central differences. Margins are measured with one cell of slack.
///
/// Refuses steps above `0.25 spacing^2 |p|_min / sup|F|`.
pub fn explicit_levelset_step(u: &ScalarField, dt: f64, s: f64, eps: f64) -> Result<ScalarField> {
    check_radius(s)?;
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::Domain(format!("dt must be positive, got {dt}")));
    }
    let g = *u.grid();
    let sp = g.spacing();
    let (w, h) = (g.width() as isize, g.height() as isize);
    let at = |x: isize, y: isize| u.get((x.clamp(0, w - 1) as usize, y.clamp(0, h - 1) as usize));
    let mut speed = vec![0.0; g.len()];
    let mut min_grad = f64::INFINITY;
    let mut max_speed: f64 = 0.0;
    for i in 0..g.len() {
        let (cx, cy) = g.coords(i);
        let (x, y) = (cx as isize, cy as isize);
        let c = at(x, y);
        let px = (at(x + 1, y) - at(x - 1, y)) / (2.0 * sp);
        let py = (at(x, y + 1) - at(x, y - 1)) / (2.0 * sp);
        if norm([px, py]) < FROZEN_GRADIENT {
            continue;
        }
        let uxx = (at(x + 1, y) - 2.0 * c + at(x - 1, y)) / (sp * sp);
        let uyy = (at(x, y + 1) - 2.0 * c + at(x, y - 1)) / (sp * sp);
        let uxy = (at(x + 1, y + 1) - at(x + 1, y - 1) - at(x - 1, y + 1) + at(x - 1, y - 1))
            / (4.0 * sp * sp);
        let k = LevelQuery {
            u,
            level: c,
            reach: s + eps + 2.0 * sp,
        };
        let pos = g.position((cx, cy));
        let args = HamiltonianArgs::new(pos, [px, py], [[uxx, uxy], [uxy, uyy]], &k);
        let (ph, np, xtt) = frame(&args)?;
        let (m_out, m_in) = hamiltonian_margins(&args, ph, s);
        let (plus, minus) = branch_values(np, xtt, s);
        let slack = k.tolerance();
        let f = ramp(m_out + slack, eps) * plus + ramp(m_in + slack, eps) * minus;
        speed[i] = f;
        min_grad = min_grad.min(np);
        max_speed = max_speed.max(f.abs());
    }
    if max_speed > 0.0 {
        let bound = 0.25 * sp * sp * min_grad / max_speed;
        if dt > bound {
            return Err(Error::Cfl { dt, bound });
        }
    }
    let values = u
        .values()
        .iter()
        .zip(&speed)
        .map(|(v, f)| v - dt * f)
        .collect();
    ScalarField::new(g, values)
}

/// `d/dR` of the closed-form disk energy (by central difference) and
/// `int_{dB_R} kappa_rho`, for `rho < R`.
pub fn disk_first_variation(big_r: f64, rho: f64) -> Result<(f64, f64)> {
    if !(rho > 0.0 && rho < big_r) {
        return Err(Error::Domain(format!(
            "need 0 < rho < R, got rho={rho}, R={big_r}"
        )));
    }
    let e = (big_r - rho).min(rho) / 2.0;
    let derivative = (crate::oracle::disk_energy_exact(big_r + e, rho)
        - crate::oracle::disk_energy_exact(big_r - e, rho))
        / (2.0 * e);
    let disk = SmoothSetDescriptor::Disk {
        center: [0.0, 0.0],
        radius: big_r,
    };
    let ks = kappa_s(&disk, [big_r, 0.0], rho)?;
    Ok((derivative, 2.0 * std::f64::consts::PI * big_r * ks.sum()))
}

//! Closed-form and ODE reference values for balls.
//!
//! A ball of radius `r` moves with normal velocity
//! `g(r) = int f'(s) [(1 + s/r)^(d-1) - ((1 - s/r)^+)^(d-1)] ds`, and one
//! minimizing-movements step of size `h` from radius `R` lands on a root of
//! `(r - R)/h = g(r)`. For the trapezoid profile `f' = -a` on `[delta, rho0]`,
//! so both the velocity and the energy of a ball have closed forms.

use crate::error::{Error, Result};
use crate::profile::WeightProfile;
use std::f64::consts::PI;

/// Volume of the unit ball in dimension `d`.
pub fn unit_ball_volume(d: u32) -> f64 {
    match d {
        0 => 1.0,
        1 => 2.0,
        _ => 2.0 * PI / d as f64 * unit_ball_volume(d - 2),
    }
}

fn check_dim(d: u32) -> Result<()> {
    if d < 2 {
        return Err(Error::Domain(format!(
            "dimension must be at least 2, got {d}"
        )));
    }
    Ok(())
}

fn pos(x: f64) -> f64 {
    x.max(0.0)
}

/// Ball velocity `g(r)`, integrated exactly over the ramp of the profile.
pub fn ball_rhs(r: f64, profile: &WeightProfile, d: u32) -> Result<f64> {
    check_dim(d)?;
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::Domain(format!(
            "ball radius must be positive, got {r}"
        )));
    }
    let (rho0, delta, a) = (profile.rho0(), profile.delta_inner(), profile.slope());
    let n = d as i32;
    let bracket = (1.0 + rho0 / r).powi(n) - (1.0 + delta / r).powi(n)
        + pos(1.0 - rho0 / r).powi(n)
        - pos(1.0 - delta / r).powi(n);
    Ok(-a * r / d as f64 * bracket)
}

/// Ball velocity from the profile's quadrature nodes:
/// `g(r) = -sum_k w_k / (2 s_k) [(1 + s_k/r)^(d-1) - ((1 - s_k/r)^+)^(d-1)]`.
pub fn ball_rhs_quadrature(r: f64, profile: &WeightProfile, d: u32) -> Result<f64> {
    check_dim(d)?;
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::Domain(format!(
            "ball radius must be positive, got {r}"
        )));
    }
    let n = d as i32 - 1;
    Ok(-profile
        .quadrature()
        .iter()
        .map(|q| {
            q.weight / (2.0 * q.radius)
                * ((1.0 + q.radius / r).powi(n) - pos(1.0 - q.radius / r).powi(n))
        })
        .sum::<f64>())
}

#[derive(Clone, Debug, PartialEq)]
pub struct BallOdeConfig {
    pub r0: f64,
    pub profile: WeightProfile,
    pub d: u32,
    pub dt: f64,
}

/// Radius samples of the ball ODE up to extinction.
#[derive(Clone, Debug, PartialEq)]
pub struct BallTrajectory {
    pub times: Vec<f64>,
    pub radii: Vec<f64>,
    /// Velocity at each sample, used for Hermite interpolation.
    pub rates: Vec<f64>,
    pub extinction: f64,
}

impl BallTrajectory {
    /// Radius at time `t` (cubic Hermite between samples, 0 after extinction).
    pub fn radius_at(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return self.radii[0];
        }
        if t >= self.extinction {
            return 0.0;
        }
        let k = self.times.partition_point(|&s| s <= t);
        if k >= self.times.len() {
            // Between the last sample and extinction: linear.
            let (t1, r1) = (*self.times.last().unwrap(), *self.radii.last().unwrap());
            return r1 * (self.extinction - t) / (self.extinction - t1);
        }
        let (t0, t1) = (self.times[k - 1], self.times[k]);
        let (r0, r1) = (self.radii[k - 1], self.radii[k]);
        let (m0, m1) = (self.rates[k - 1], self.rates[k]);
        let dt = t1 - t0;
        let s = (t - t0) / dt;
        let (s2, s3) = (s * s, s * s * s);
        (2.0 * s3 - 3.0 * s2 + 1.0) * r0
            + (s3 - 2.0 * s2 + s) * dt * m0
            + (-2.0 * s3 + 3.0 * s2) * r1
            + (s3 - s2) * dt * m1
    }
}

/// RK4 integration of `r' = g(r)` until the radius vanishes. Near extinction
/// the step shrinks with `r / |g(r)|`; the last sliver is closed by a linear step.
pub fn ball_ode_integrate(cfg: &BallOdeConfig) -> Result<BallTrajectory> {
    check_dim(cfg.d)?;
    if !(cfg.r0 > 0.0 && cfg.dt > 0.0 && cfg.r0.is_finite() && cfg.dt.is_finite()) {
        return Err(Error::Domain(format!(
            "need r0 > 0 and dt > 0, got r0={}, dt={}",
            cfg.r0, cfg.dt
        )));
    }
    let g = |r: f64| ball_rhs(r, &cfg.profile, cfg.d);
    let mut t = 0.0;
    let mut r = cfg.r0;
    let mut times = vec![0.0];
    let mut radii = vec![r];
    let mut rates = vec![g(r)?];
    let floor = cfg.r0 * 1e-7;
    loop {
        let gr = g(r)?;
        if r <= floor {
            return Ok(BallTrajectory {
                times,
                radii,
                rates,
                extinction: t + r / gr.abs(),
            });
        }
        let h = cfg.dt.min(0.05 * r / gr.abs());
        let k1 = gr;
        let k2 = g(r + 0.5 * h * k1)?;
        let k3 = g(r + 0.5 * h * k2)?;
        let k4 = g(r + h * k3)?;
        let next = r + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if next <= 0.0 {
            return Ok(BallTrajectory {
                times,
                radii,
                rates,
                extinction: t + r / gr.abs(),
            });
        }
        t += h;
        r = next;
        times.push(t);
        radii.push(r);
        rates.push(g(r)?);
    }
}

/// Constants of the extinction bound: `c = max_{0<r<=1} r^(d-1) |g(r)|` and
/// `c0 = 1/(d c)`, so that `T*(r0) >= c0 r0^d` for `r0 <= 1`.
pub fn extinction_constants(profile: &WeightProfile, d: u32) -> Result<(f64, f64)> {
    let n = 100_000;
    let mut c: f64 = 0.0;
    for k in 1..=n {
        let r = k as f64 / n as f64;
        c = c.max(r.powi(d as i32 - 1) * ball_rhs(r, profile, d)?.abs());
    }
    Ok((c, 1.0 / (d as f64 * c)))
}

/// Energy of the ball of radius `r` under the profile-averaged oscillation energy:
/// `int w(s) omega_d ((r+s)^d - ((r-s)^+)^d) / (2s) ds`.
pub fn ball_energy(r: f64, profile: &WeightProfile, d: u32) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    let (rho0, delta, a) = (profile.rho0(), profile.delta_inner(), profile.slope());
    let n = d as i32 + 1;
    a * unit_ball_volume(d)
        * ((r + rho0).powi(n) - (r + delta).powi(n) + pos(r - rho0).powi(n)
            - pos(r - delta).powi(n))
        / n as f64
}

/// Objective of one step from the ball `B_R`, evaluated at `B_r`:
/// ball energy plus `(1/h) int_{B_r} d_{B_R}`. The empty set scores 0.
pub fn proximal_step_energy(r: f64, big_r: f64, h: f64, profile: &WeightProfile, d: u32) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    let df = d as f64;
    let fidelity = df * unit_ball_volume(d) / h
        * (r.powi(d as i32 + 1) / (df + 1.0) - big_r * r.powi(d as i32) / df);
    ball_energy(r, profile, d) + fidelity
}

/// Radius after one step from `B_R`: the largest root of `(r - R)/h = g(r)` in
/// `(0, R]`, or 0 when there is none or when the empty set has lower energy.
pub fn proximal_ball_radius(big_r: f64, h: f64, profile: &WeightProfile, d: u32) -> Result<f64> {
    if !(big_r > 0.0 && h > 0.0) {
        return Err(Error::Domain(format!(
            "need R > 0 and h > 0, got R={big_r}, h={h}"
        )));
    }
    let phi = |r: f64| -> Result<f64> { Ok((r - big_r) / h - ball_rhs(r, profile, d)?) };
    // phi > 0 at R and near 0; scan downwards for the first negative sample.
    let n = 20_000;
    let mut hi = big_r;
    let mut lo = None;
    for k in (1..n).rev() {
        let r = big_r * k as f64 / n as f64;
        if phi(r)? < 0.0 {
            lo = Some(r);
            break;
        }
        hi = r;
    }
    let Some(mut lo) = lo else { return Ok(0.0) };
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if phi(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let root = 0.5 * (lo + hi);
    if proximal_step_energy(root, big_r, h, profile, d) >= 0.0 {
        return Ok(0.0);
    }
    Ok(root)
}

/// Radii of the iterated proximal steps `r_{i+1} = proximal_ball_radius(r_i)`,
/// starting with `r0`, stopping after `n_steps` or at extinction.
pub fn proximal_ball_radii(
    r0: f64,
    h: f64,
    profile: &WeightProfile,
    d: u32,
    n_steps: usize,
) -> Result<Vec<f64>> {
    let mut radii = vec![r0];
    let mut r = r0;
    for _ in 0..n_steps {
        r = if r > 0.0 {
            proximal_ball_radius(r, h, profile, d)?
        } else {
            0.0
        };
        radii.push(r);
        if r == 0.0 {
            break;
        }
    }
    Ok(radii)
}

/// Oscillation energy of a disk: `pi ((R + rho)^2 - ((R - rho)^+)^2) / (2 rho)`.
pub fn disk_energy_exact(big_r: f64, rho: f64) -> f64 {
    PI * ((big_r + rho).powi(2) - pos(big_r - rho).powi(2)) / (2.0 * rho)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::make_trapezoid_profile;

    fn profile() -> WeightProfile {
        make_trapezoid_profile(6.0, 2.0, 64).unwrap()
    }

    #[test]
    fn large_balls_move_with_minus_one_over_r() {
        let p = profile();
        for &r in &[6.0, 7.5, 24.0, 100.0] {
            assert!((ball_rhs(r, &p, 2).unwrap() + 1.0 / r).abs() < 1e-14);
            assert!((ball_rhs_quadrature(r, &p, 2).unwrap() + 1.0 / r).abs() < 1e-12);
        }
    }

    #[test]
    fn small_balls() {
        let p = profile();
        for &r in &[0.01, 0.5, 1.0, 1.9] {
            let g = ball_rhs(r, &p, 2).unwrap();
            assert!((g - (-1.0 / 8.0 - 0.5 / r)).abs() < 1e-12);
        }
        for k in 1..200 {
            assert!(ball_rhs(k as f64 * 0.1, &p, 2).unwrap() < 0.0);
            assert!(ball_rhs(k as f64 * 0.1, &p, 3).unwrap() < 0.0);
        }
        assert!(ball_rhs(0.0, &p, 2).is_err());
        assert!(ball_rhs(1.0, &p, 1).is_err());
    }

    #[test]
    fn closed_form_matches_fine_integration() {
        let p = profile();
        for &d in &[2u32, 3] {
            for &r in &[0.3, 1.7, 2.5, 4.0, 5.9, 8.0] {
                let n = 1_000_000;
                let ds = (p.rho0() - p.delta_inner()) / n as f64;
                let bracket =
                    |s: f64| (1.0 + s / r).powi(d as i32 - 1) - pos(1.0 - s / r).powi(d as i32 - 1);
                let mut acc = 0.0;
                for k in 0..=n {
                    let s = p.delta_inner() + k as f64 * ds;
                    let w = if k == 0 || k == n { 0.5 } else { 1.0 };
                    acc += w * p.f_prime(s) * bracket(s);
                }
                let g = ball_rhs(r, &p, d).unwrap();
                assert!(
                    (acc * ds - g).abs() < 1e-8,
                    "d={d} r={r}: {} vs {g}",
                    acc * ds
                );
            }
        }
    }

    #[test]
    fn classical_regime_follows_the_square_root_law() {
        let traj = ball_ode_integrate(&BallOdeConfig {
            r0: 24.0,
            profile: profile(),
            d: 2,
            dt: 0.01,
        })
        .unwrap();
        for (t, r) in traj.times.iter().zip(&traj.radii) {
            if *r >= 6.0 {
                assert!((r - (576.0 - 2.0 * t).sqrt()).abs() < 1e-6);
            }
        }
        assert!(traj.radii.windows(2).all(|w| w[1] < w[0]));
        // Below rho0 the ball moves slower than -1/r, so it outlives the classical 288.
        assert!(
            traj.extinction > 288.0 && traj.extinction < 295.0,
            "{}",
            traj.extinction
        );
        let t = 100.3;
        assert!((traj.radius_at(t) - (576.0 - 2.0 * t).sqrt()).abs() < 1e-6);
    }

    #[test]
    fn halving_the_step_barely_changes_the_trajectory() {
        let p = profile();
        let a = ball_ode_integrate(&BallOdeConfig {
            r0: 10.0,
            profile: p.clone(),
            d: 2,
            dt: 0.1,
        })
        .unwrap();
        let b = ball_ode_integrate(&BallOdeConfig {
            r0: 10.0,
            profile: p,
            d: 2,
            dt: 0.05,
        })
        .unwrap();
        for k in 0..=90 {
            let t = a.extinction * 0.9 * k as f64 / 90.0;
            assert!((a.radius_at(t) - b.radius_at(t)).abs() < 1e-6);
        }
        assert!((a.extinction - b.extinction).abs() < 1e-4);
    }

    #[test]
    fn extinction_bound_for_small_balls() {
        let p = profile();
        let (c, c0) = extinction_constants(&p, 2).unwrap();
        assert!((c - (1.0 / 8.0 + 0.5)).abs() < 1e-12);
        for k in 1..=10 {
            let r0 = k as f64 / 10.0;
            let traj = ball_ode_integrate(&BallOdeConfig {
                r0,
                profile: p.clone(),
                d: 2,
                dt: 1e-3,
            })
            .unwrap();
            assert!(traj.extinction >= c0 * r0 * r0);
        }
    }

    #[test]
    fn one_step_from_a_large_ball() {
        let p = profile();
        let r = proximal_ball_radius(24.0, 8.0, &p, 2).unwrap();
        let exact = (24.0 + (576.0f64 - 32.0).sqrt()) / 2.0;
        assert!((r - exact).abs() < 1e-9, "{r} vs {exact}");
        assert!((proximal_ball_radius(24.0, 1e-6, &p, 2).unwrap() - 24.0).abs() < 1e-6);
        assert_eq!(proximal_ball_radius(0.5, 50.0, &p, 2).unwrap(), 0.0);
    }

    #[test]
    fn the_root_is_the_global_minimizer() {
        let p = profile();
        for &(big_r, h) in &[(24.0, 8.0), (10.0, 4.0), (6.0, 2.0), (3.0, 1.0), (2.0, 1.0)] {
            let r = proximal_ball_radius(big_r, h, &p, 2).unwrap();
            let best = proximal_step_energy(r, big_r, h, &p, 2);
            for k in 0..=10_000 {
                let s = big_r * k as f64 / 10_000.0;
                assert!(
                    proximal_step_energy(s, big_r, h, &p, 2) >= best - 1e-9,
                    "R={big_r} h={h} s={s}"
                );
            }
        }
    }

    #[test]
    fn step_radius_is_monotone() {
        let p = profile();
        let mut prev = 0.0;
        for k in 1..60 {
            let r = proximal_ball_radius(k as f64 * 0.5, 2.0, &p, 2).unwrap();
            assert!(r >= prev);
            prev = r;
        }
        let mut prev = f64::INFINITY;
        for k in 1..40 {
            let r = proximal_ball_radius(12.0, k as f64 * 0.5, &p, 2).unwrap();
            assert!(r <= prev);
            prev = r;
        }
    }

    #[test]
    fn disk_energies() {
        assert!((disk_energy_exact(16.0, 4.0) - 100.530_964_914_873_4).abs() < 1e-9);
        assert!((disk_energy_exact(1.0, 2.0) - 7.068_583_470_577_035).abs() < 1e-12);
        assert!((disk_energy_exact(16.0, 1e-7) - 32.0 * PI).abs() < 1e-5);
        assert!((unit_ball_volume(3) - 4.0 * PI / 3.0).abs() < 1e-15);
    }
}

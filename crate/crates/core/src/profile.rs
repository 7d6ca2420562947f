//! The radial weight profile `f` and the measure `-2 s f'(s) ds` it induces.
//!
//! The concrete family is a trapezoid: `f` is flat at `plateau_height` on
//! `[0, delta_inner]`, decreases linearly to zero at `rho0`, and is even.
//! The plateau height is chosen so that `-2 s f'(s)` integrates to one, which
//! makes the averaged energy of a large disk equal to its perimeter.

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadNode {
    pub radius: f64,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WeightProfile {
    rho0: f64,
    delta_inner: f64,
    plateau_height: f64,
    quadrature: Vec<QuadNode>,
}

pub fn make_trapezoid_profile(rho0: f64, delta_inner: f64, n_quad: usize) -> Result<WeightProfile> {
    if !(rho0.is_finite() && delta_inner.is_finite() && delta_inner > 0.0 && delta_inner < rho0) {
        return Err(Error::InvalidProfile(format!(
            "need 0 < delta_inner < rho0, got delta_inner={delta_inner}, rho0={rho0}"
        )));
    }
    if n_quad == 0 {
        return Err(Error::InvalidProfile("at least one quadrature node".into()));
    }
    let plateau_height = 1.0 / (rho0 + delta_inner);
    let slope = plateau_height / (rho0 - delta_inner);
    let ds = (rho0 - delta_inner) / n_quad as f64;
    let mut quadrature: Vec<QuadNode> = (0..n_quad)
        .map(|k| {
            let s = delta_inner + (k as f64 + 0.5) * ds;
            QuadNode {
                radius: s,
                weight: 2.0 * s * slope * ds,
            }
        })
        .collect();
    let total: f64 = quadrature.iter().map(|q| q.weight).sum();
    if !(total > 0.0) {
        return Err(Error::InvalidProfile("quadrature weights vanish".into()));
    }
    for q in &mut quadrature {
        q.weight /= total;
    }
    // Fold the rounding residue into the largest node so the sum is 1 to the last bit we can get.
    let residue = 1.0 - quadrature.iter().map(|q| q.weight).sum::<f64>();
    if let Some(last) = quadrature.last_mut() {
        last.weight += residue;
    }
    Ok(WeightProfile {
        rho0,
        delta_inner,
        plateau_height,
        quadrature,
    })
}

impl WeightProfile {
    pub fn rho0(&self) -> f64 {
        self.rho0
    }

    pub fn delta_inner(&self) -> f64 {
        self.delta_inner
    }

    pub fn plateau_height(&self) -> f64 {
        self.plateau_height
    }

    pub fn quadrature(&self) -> &[QuadNode] {
        &self.quadrature
    }

    /// Magnitude of `f'` on the ramp `(delta_inner, rho0)`.
    pub fn slope(&self) -> f64 {
        self.plateau_height / (self.rho0 - self.delta_inner)
    }

    pub fn f(&self, s: f64) -> f64 {
        let s = s.abs();
        if s <= self.delta_inner {
            self.plateau_height
        } else if s >= self.rho0 {
            0.0
        } else {
            self.slope() * (self.rho0 - s)
        }
    }

    /// `f'(s)`; the kinks at `delta_inner` and `rho0` take the one-sided value from the ramp.
    pub fn f_prime(&self, s: f64) -> f64 {
        let a = s.abs();
        if a < self.delta_inner || a > self.rho0 {
            0.0
        } else {
            -self.slope() * s.signum()
        }
    }

    /// Density `-2 s f'(s)` of the radius measure.
    pub fn density(&self, s: f64) -> f64 {
        -2.0 * s * self.f_prime(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plateau_normalizes_the_measure() {
        let p = make_trapezoid_profile(3.0, 1.0, 16).unwrap();
        assert!((p.plateau_height() - 0.25).abs() < 1e-15);
        let sum: f64 = p.quadrature().iter().map(|q| q.weight).sum();
        assert!((sum - 1.0).abs() < 1e-12);
        // Fine Riemann sum of the density.
        let n = 200_000;
        let ds = 2.0 / n as f64;
        let integral: f64 = (0..n)
            .map(|k| p.density(1.0 + (k as f64 + 0.5) * ds) * ds)
            .sum();
        assert!((integral - 1.0).abs() < 1e-9);
    }

    #[test]
    fn single_node_is_the_midpoint() {
        let p = make_trapezoid_profile(2.0, 1.0, 1).unwrap();
        assert_eq!(p.quadrature().len(), 1);
        assert_eq!(p.quadrature()[0].radius, 1.5);
        assert_eq!(p.quadrature()[0].weight, 1.0);
    }

    #[test]
    fn near_degenerate_profile_still_normalized() {
        let p = make_trapezoid_profile(1.0001, 1.0, 7).unwrap();
        let sum: f64 = p.quadrature().iter().map(|q| q.weight).sum();
        assert!((sum - 1.0).abs() < 1e-12);
        assert!(p
            .quadrature()
            .iter()
            .all(|q| q.radius >= 1.0 && q.radius <= 1.0001 && q.weight >= 0.0));
    }

    #[test]
    fn invalid_profiles() {
        assert!(make_trapezoid_profile(1.0, 1.0, 4).is_err());
        assert!(make_trapezoid_profile(1.0, 2.0, 4).is_err());
        assert!(make_trapezoid_profile(3.0, 0.0, 4).is_err());
        assert!(make_trapezoid_profile(3.0, 1.0, 0).is_err());
    }

    #[test]
    fn f_shape() {
        let p = make_trapezoid_profile(6.0, 2.0, 8).unwrap();
        assert_eq!(p.f(0.0), p.f(-1.5));
        assert_eq!(p.f(7.0), 0.0);
        assert!(p.f(3.0) > p.f(5.0));
        assert_eq!(p.f(4.0), p.f(-4.0));
        assert!(p.f_prime(4.0) < 0.0 && p.f_prime(-4.0) > 0.0);
    }
}

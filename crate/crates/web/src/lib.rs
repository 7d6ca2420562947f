//! wasm-bindgen surface of the browser demo. Masks are row-major bytes,
//! nonzero meaning inside.

use oscflow::energy::{energy_osc_binary, energy_tv, EnergyConfig};
use oscflow::oracle::{ball_ode_integrate, BallOdeConfig};
use oscflow::scheme::{evolve_set_once, StepConfig};
use oscflow::{make_trapezoid_profile, BinarySet, Error, Grid2D};
use wasm_bindgen::prelude::*;

fn js(e: Error) -> JsError {
    JsError::new(&e.to_string())
}

fn mask_set(width: usize, height: usize, mask: &[u8]) -> Result<BinarySet, Error> {
    BinarySet::new(
        Grid2D::new(width, height)?,
        mask.iter().map(|&m| m != 0).collect(),
    )
}

fn energy_config(rho: f64) -> EnergyConfig {
    if rho > 0.0 {
        EnergyConfig::OscSingle { rho }
    } else {
        EnergyConfig::TvBaseline
    }
}

/// One minimizing-movement step of the drawn set. `rho <= 0` selects total variation.
pub fn step_set(
    width: usize,
    height: usize,
    mask: &[u8],
    h: f64,
    rho: f64,
) -> Result<Vec<u8>, Error> {
    let set = mask_set(width, height, mask)?;
    let cfg = StepConfig::new(h, energy_config(rho));
    cfg.validate(set.grid())?;
    let out = evolve_set_once(&set, &cfg)?;
    Ok(out
        .selected(cfg.selection)
        .mask()
        .iter()
        .map(|&m| m as u8)
        .collect())
}

/// `[oscillation energy, total variation]` of the drawn set.
pub fn set_energies(width: usize, height: usize, mask: &[u8], rho: f64) -> Result<Vec<f64>, Error> {
    let set = mask_set(width, height, mask)?;
    let osc = energy_osc_binary(&set, rho)?;
    let tv = energy_tv(&set.to_field());
    Ok(vec![osc, tv])
}

/// Ball ODE radius sampled at `samples` equally spaced times up to extinction,
/// as interleaved `(t, r)` pairs.
pub fn ball_curve(
    r0: f64,
    rho0: f64,
    delta_inner: f64,
    n_quad: usize,
    samples: usize,
) -> Result<Vec<f64>, Error> {
    let profile = make_trapezoid_profile(rho0, delta_inner, n_quad)?;
    let traj = ball_ode_integrate(&BallOdeConfig {
        r0,
        profile,
        d: 2,
        dt: r0 / 200.0,
    })?;
    let n = samples.max(2);
    Ok((0..n)
        .flat_map(|k| {
            let t = traj.extinction * k as f64 / (n - 1) as f64;
            [t, traj.radius_at(t)]
        })
        .collect())
}

#[wasm_bindgen(js_name = stepSet)]
pub fn step_set_js(
    width: usize,
    height: usize,
    mask: &[u8],
    h: f64,
    rho: f64,
) -> Result<Vec<u8>, JsError> {
    step_set(width, height, mask, h, rho).map_err(js)
}

#[wasm_bindgen(js_name = setEnergies)]
pub fn set_energies_js(
    width: usize,
    height: usize,
    mask: &[u8],
    rho: f64,
) -> Result<Vec<f64>, JsError> {
    set_energies(width, height, mask, rho).map_err(js)
}

#[wasm_bindgen(js_name = ballCurve)]
pub fn ball_curve_js(
    r0: f64,
    rho0: f64,
    delta_inner: f64,
    n_quad: usize,
    samples: usize,
) -> Result<Vec<f64>, JsError> {
    ball_curve(r0, rho0, delta_inner, n_quad, samples).map_err(js)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_shrinks_a_drawn_disk() {
        let g = Grid2D::new(32, 32).unwrap();
        let disk = BinarySet::disk(g, [16.0, 16.0], 8.0);
        let mask: Vec<u8> = disk.mask().iter().map(|&m| m as u8).collect();
        let out = step_set(32, 32, &mask, 4.0, 2.0).unwrap();
        let before = mask.iter().filter(|&&m| m != 0).count();
        let after = out.iter().filter(|&&m| m != 0).count();
        assert!(after < before && after > 0);
    }

    #[test]
    fn energies_of_an_empty_mask_vanish() {
        assert_eq!(set_energies(8, 8, &[0; 64], 2.0).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn ball_curve_starts_at_r0_and_ends_at_zero() {
        let c = ball_curve(10.0, 6.0, 2.0, 4, 11).unwrap();
        assert_eq!(c.len(), 22);
        assert_eq!(c[1], 10.0);
        assert_eq!(c[21], 0.0);
    }

    #[test]
    fn bad_mask_length_is_an_error() {
        assert!(step_set(4, 4, &[0; 3], 1.0, 1.0).is_err());
    }
}

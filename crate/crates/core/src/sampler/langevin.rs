//! Explicit Euler-Maruyama dynamics and its Metropolis-adjusted variant.
//!
//! The continuous dynamics `d phi_t(x) = sum_{y~x} V'(phi_t(y) - phi_t(x)) dt
//! + sqrt(2) dB_t(x)` holds boundary sites fixed and leaves the Gibbs measure
//! invariant; the Euler step inherits an O(dt) bias that MALA removes.

use crate::error::{Error, Result};
use crate::lattice::{Field, Site};
use crate::potential::Potential;
use crate::rng::CounterRng;

use super::drift_at;

const STABILITY_LIMIT: f64 = 1e6;

/// One explicit Euler-Maruyama step:
/// `phi <- phi + dt * drift + sqrt(2 dt) * xi`, boundary fixed.
pub fn langevin_step(
    field: &mut Field,
    potential: &Potential,
    dt: f64,
    rng: &mut CounterRng,
) -> Result<()> {
    let domain = field.domain;
    let interior: Vec<Site> = domain.interior_sites().collect();
    let sqrt2dt = (2.0 * dt).sqrt();
    let mut new_vals = Vec::with_capacity(interior.len());
    for &s in &interior {
        let b = drift_at(field, potential, s);
        new_vals.push(field.get(s) + dt * b + sqrt2dt * rng.standard_normal());
    }
    for (&s, &v) in interior.iter().zip(&new_vals) {
        if !v.is_finite() || v.abs() > STABILITY_LIMIT {
            return Err(Error::Instability {
                x: s.x,
                y: s.y,
                value: v,
            });
        }
        field.set(s, v);
    }
    Ok(())
}

/// Deterministic half of the step (noise zeroed); used by tests.
pub fn langevin_drift_step(field: &mut Field, potential: &Potential, dt: f64) {
    let domain = field.domain;
    let interior: Vec<Site> = domain.interior_sites().collect();
    let new_vals: Vec<f64> = interior
        .iter()
        .map(|&s| field.get(s) + dt * drift_at(field, potential, s))
        .collect();
    for (&s, &v) in interior.iter().zip(&new_vals) {
        field.set(s, v);
    }
}

/// One Metropolis-adjusted step. Proposes a full Euler-Maruyama update and
/// accepts with the standard log ratio, so the Gibbs measure is exactly
/// invariant. Returns whether the proposal was accepted.
pub fn mala_step(
    field: &mut Field,
    potential: &Potential,
    dt: f64,
    rng: &mut CounterRng,
) -> Result<bool> {
    let domain = field.domain;
    let interior: Vec<Site> = domain.interior_sites().collect();
    let sqrt2dt = (2.0 * dt).sqrt();

    let drift_cur: Vec<f64> = interior
        .iter()
        .map(|&s| drift_at(field, potential, s))
        .collect();
    let cur: Vec<f64> = interior.iter().map(|&s| field.get(s)).collect();
    let prop: Vec<f64> = cur
        .iter()
        .zip(&drift_cur)
        .map(|(&v, &b)| v + dt * b + sqrt2dt * rng.standard_normal())
        .collect();
    for (&s, &v) in interior.iter().zip(&prop) {
        if !v.is_finite() || v.abs() > STABILITY_LIMIT {
            return Err(Error::Instability {
                x: s.x,
                y: s.y,
                value: v,
            });
        }
    }

    let mut proposal = field.clone();
    for (&s, &v) in interior.iter().zip(&prop) {
        proposal.set(s, v);
    }
    let drift_prop: Vec<f64> = interior
        .iter()
        .map(|&s| drift_at(&proposal, potential, s))
        .collect();

    // log alpha = -[H(prop) - H(cur)] + log q(prop -> cur) - log q(cur -> prop)
    let dh = super::energy(&proposal, potential) - super::energy(field, potential);
    let mut log_q = 0.0;
    for i in 0..interior.len() {
        let fwd = prop[i] - cur[i] - dt * drift_cur[i];
        let rev = cur[i] - prop[i] - dt * drift_prop[i];
        log_q += (fwd * fwd - rev * rev) / (4.0 * dt);
    }
    let log_alpha = -dh + log_q;
    let accept = log_alpha >= 0.0 || rng.uniform().ln() < log_alpha;
    if accept {
        *field = proposal;
    }
    Ok(accept)
}

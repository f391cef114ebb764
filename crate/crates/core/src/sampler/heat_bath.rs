//! Heat-bath sweeps via an exact slice draw from each site's full conditional.
//!
//! The conditional density at a site given its four neighbors is
//! `g(t) = exp(-sum_y V(t - phi(y)))`, strictly log-concave with curvature in
//! `[4 c_minus, 4 c_plus]`. The update samples the slice level from the current
//! value, computes the slice interval `{t : log g(t) >= level}` exactly by
//! safeguarded Newton root finding, and places the new value uniformly in it.
//! Two uniforms per site; the interval endpoints are monotone in the neighbor
//! values, so updates driven by shared randomness couple monotonely.

use crate::error::{Error, Result};
use crate::lattice::{Field, Site};
use crate::potential::Potential;
use crate::rng::{stream, CounterRng};
use rayon::prelude::*;

/// The one-dimensional full conditional `g(t) = exp(-sum_i V(t - w_i))`.
///
/// Quadratic and cosine-perturbed potentials use reduced forms: the quadratic
/// conditional is an explicit Gaussian, and the cosine sum collapses by
/// harmonic addition to `S_c cos t + S_s sin t`, so every evaluation costs one
/// `sin_cos` instead of four.
enum Conditional<'a> {
    Quadratic {
        mean: f64,
    },
    Cosine {
        w_sum: f64,
        kappa: f64,
        s_c: f64,
        s_s: f64,
    },
    Generic {
        neighbors: [f64; 4],
        pot: &'a Potential,
    },
}

impl<'a> Conditional<'a> {
    fn build(neighbors: [f64; 4], pot: &'a Potential) -> Conditional<'a> {
        match pot {
            Potential::Quadratic => Conditional::Quadratic {
                mean: 0.25 * neighbors.iter().sum::<f64>(),
            },
            Potential::CosinePerturbed { kappa } => {
                let (mut s_c, mut s_s) = (0.0, 0.0);
                for &w in &neighbors {
                    let (s, c) = w.sin_cos();
                    s_c += c;
                    s_s += s;
                }
                Conditional::Cosine {
                    w_sum: neighbors.iter().sum(),
                    kappa: *kappa,
                    s_c,
                    s_s,
                }
            }
            _ => Conditional::Generic { neighbors, pot },
        }
    }
}

impl Conditional<'_> {
    /// log g up to a variant-fixed constant (all comparisons stay within one
    /// conditional, so constants cancel).
    #[inline]
    fn log_g(&self, t: f64) -> f64 {
        match self {
            Conditional::Quadratic { mean } => -2.0 * (t - mean) * (t - mean),
            Conditional::Cosine {
                w_sum,
                kappa,
                s_c,
                s_s,
            } => {
                let (st, ct) = t.sin_cos();
                -2.0 * t * t + w_sum * t + kappa * (s_c * ct + s_s * st)
            }
            Conditional::Generic { neighbors, pot } => {
                let mut s = 0.0;
                for &w in neighbors {
                    s += pot.v(t - w);
                }
                -s
            }
        }
    }

    /// (log g, d/dt log g) in one pass.
    #[inline]
    fn log_g_and_d1(&self, t: f64) -> (f64, f64) {
        match self {
            Conditional::Quadratic { mean } => {
                let d = t - mean;
                (-2.0 * d * d, -4.0 * d)
            }
            Conditional::Cosine {
                w_sum,
                kappa,
                s_c,
                s_s,
            } => {
                let (st, ct) = t.sin_cos();
                (
                    -2.0 * t * t + w_sum * t + kappa * (s_c * ct + s_s * st),
                    -4.0 * t + w_sum + kappa * (s_s * ct - s_c * st),
                )
            }
            Conditional::Generic { neighbors, pot } => {
                let (mut v, mut d1) = (0.0, 0.0);
                for &w in neighbors {
                    let (pv, pd, _) = pot.evaluate(t - w);
                    v -= pv;
                    d1 -= pd;
                }
                (v, d1)
            }
        }
    }

    /// d/dt log g and its derivative.
    #[inline]
    fn dlog_g(&self, t: f64) -> (f64, f64) {
        match self {
            Conditional::Quadratic { mean } => (-4.0 * (t - mean), -4.0),
            Conditional::Cosine {
                w_sum,
                kappa,
                s_c,
                s_s,
            } => {
                let (st, ct) = t.sin_cos();
                (
                    -4.0 * t + w_sum + kappa * (s_s * ct - s_c * st),
                    -4.0 - kappa * (s_c * ct + s_s * st),
                )
            }
            Conditional::Generic { neighbors, pot } => {
                let (mut d1, mut d2) = (0.0, 0.0);
                for &w in neighbors {
                    let (_, dv, ddv) = pot.evaluate(t - w);
                    d1 -= dv;
                    d2 -= ddv;
                }
                (d1, d2)
            }
        }
    }

    fn c_minus(&self) -> f64 {
        match self {
            Conditional::Quadratic { .. } => 1.0,
            Conditional::Cosine { kappa, .. } => 1.0 - kappa,
            Conditional::Generic { pot, .. } => pot.convexity_bounds().0,
        }
    }

    fn neighbor_bounds(&self) -> (f64, f64) {
        match self {
            Conditional::Quadratic { mean } => (*mean, *mean),
            Conditional::Cosine { w_sum, .. } => {
                // The mode lies within the neighbor hull; bracket generously.
                (w_sum / 4.0 - 2.0, w_sum / 4.0 + 2.0)
            }
            Conditional::Generic { neighbors, .. } => (
                neighbors.iter().cloned().fold(f64::INFINITY, f64::min),
                neighbors.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            ),
        }
    }

    /// Mode of the log-concave conditional (Newton with bisection safeguard);
    /// returns the mode and the curvature there.
    fn mode(&self) -> (f64, f64) {
        if let Conditional::Quadratic { mean } = self {
            return (*mean, -4.0);
        }
        let (mut lo, mut hi) = self.neighbor_bounds();
        let mut t = 0.5 * (lo + hi);
        if lo >= hi {
            return (lo, self.dlog_g(lo).1);
        }
        // Widen until the derivative brackets zero (d1 decreasing in t).
        while self.dlog_g(lo).0 < 0.0 {
            lo -= 1.0 + (hi - lo);
        }
        while self.dlog_g(hi).0 > 0.0 {
            hi += 1.0 + (hi - lo);
        }
        let mut d2 = -4.0;
        for _ in 0..60 {
            let (d1, dd2) = self.dlog_g(t);
            d2 = dd2;
            if d1 > 0.0 {
                lo = t;
            } else {
                hi = t;
            }
            let step = d1 / d2; // d2 < 0
            let mut next = t - step;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - t).abs() <= 1e-12 * (1.0 + t.abs()) {
                return (next, d2);
            }
            t = next;
        }
        (t, d2)
    }

    /// Root of `log g(t) = level` on the given side of the mode. `d2_mode` is
    /// the curvature at the mode, used for the Newton starting point.
    fn slice_root(&self, mode: f64, log_g_mode: f64, d2_mode: f64, level: f64, right: bool) -> f64 {
        let drop = (log_g_mode - level).max(0.0);
        if let Conditional::Quadratic { .. } = self {
            // Exact: log g = log g(mode) - 2 (t - mode)^2.
            let delta = (drop / 2.0).sqrt();
            return if right { mode + delta } else { mode - delta };
        }
        let c_minus = self.c_minus();
        // Curvature >= 4 c_minus brackets the root within this distance.
        let reach = (drop / (2.0 * c_minus)).sqrt() + 1e-12;
        let (mut lo, mut hi) = if right {
            (mode, mode + reach)
        } else {
            (mode - reach, mode)
        };
        // Gaussian-approximation starting point from the mode curvature.
        let guess = (2.0 * drop / d2_mode.abs().max(1e-12)).sqrt();
        let mut t = if right {
            (mode + guess).min(hi)
        } else {
            (mode - guess).max(lo)
        };
        for _ in 0..60 {
            let (g, d1) = self.log_g_and_d1(t);
            let f = g - level;
            // Maintain the bracket: the slice side of the root keeps f >= 0.
            if right {
                if f >= 0.0 {
                    lo = t;
                } else {
                    hi = t;
                }
            } else if f >= 0.0 {
                hi = t;
            } else {
                lo = t;
            }
            let mut next = if d1.abs() > 1e-300 { t - f / d1 } else { t };
            if !(next >= lo && next <= hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - t).abs() <= 1e-12 * (1.0 + t.abs()) {
                return next;
            }
            t = next;
        }
        t
    }
}

/// Exact slice draw from the full conditional at a site.
///
/// `u_level`, `u_pos` are the two uniforms consumed by the update.
pub fn slice_conditional_update(
    current: f64,
    neighbors: [f64; 4],
    potential: &Potential,
    u_level: f64,
    u_pos: f64,
) -> f64 {
    let cond = Conditional::build(neighbors, potential);
    let (mode, d2_mode) = cond.mode();
    let log_g_mode = cond.log_g(mode);
    let level = cond.log_g(current) + u_level.ln();
    let a = cond.slice_root(mode, log_g_mode, d2_mode, level, false);
    let b = cond.slice_root(mode, log_g_mode, d2_mode, level, true);
    a + u_pos * (b - a)
}

/// One checkerboard sweep: every interior site resampled once from its exact
/// full conditional. Sites of one color update concurrently; randomness is
/// keyed by `(replica, sweep, site index)` so the schedule cannot change the
/// result.
pub fn heat_bath_sweep(
    field: &mut Field,
    potential: &Potential,
    root: &CounterRng,
    replica: u64,
    sweep: u64,
) -> Result<()> {
    let domain = field.domain;
    // Per-color site lists with cached stream labels.
    let mut colors: [Vec<(Site, u64)>; 2] = [Vec::new(), Vec::new()];
    for s in domain.interior_sites() {
        let c = ((s.x + s.y).rem_euclid(2)) as usize;
        colors[c].push((s, domain.site_index(s).unwrap() as u64));
    }
    // One key derivation for the sweep; per-site streams branch off it.
    let sweep_stream = root.substream(&[stream::HEAT_BATH, replica, sweep]);
    for sites in &colors {
        let updates: Vec<f64> = sites
            .par_iter()
            .with_min_len(256)
            .map(|&(s, idx)| {
                let mut rng = sweep_stream.substream(&[idx]);
                let u_level = rng.uniform();
                let u_pos = rng.uniform();
                let neighbors = neighbor_values(field, s);
                slice_conditional_update(field.get(s), neighbors, potential, u_level, u_pos)
            })
            .collect();
        for (&(s, _), &v) in sites.iter().zip(&updates) {
            if !v.is_finite() {
                return Err(Error::Instability {
                    x: s.x,
                    y: s.y,
                    value: v,
                });
            }
            field.set(s, v);
        }
    }
    Ok(())
}

#[inline]
fn neighbor_values(field: &Field, s: Site) -> [f64; 4] {
    let n = s.neighbors();
    [
        field.get(n[0]),
        field.get(n[1]),
        field.get(n[2]),
        field.get(n[3]),
    ]
}

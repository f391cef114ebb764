//! Multiscale increment decomposition of a field:
//! radii schedule, mollified square averages, increments, boundary layers,
//! telescoping identity, and the good events.
//!
//! Radii: `r_k = N e^{-k}`, `r_{k,+/-} = r_k +/- r_k^{1-omega}`. The smoothed
//! square average `S_{k,+/-}(x, phi)` is a bump-mollified average over integer
//! radii of the harmonic boundary averages `Gamma_{Q_r(x)}(x, phi)`, normalized
//! by the weight sum so constants are reproduced exactly. Increments
//! `I_k = S_{k+1,+} - S_{k,-}` and boundary layers `B_k = S_{k,-} - S_{k,+}`
//! telescope back to `phi(x)`.

use crate::error::{Error, Result};
use crate::harmonic::harmonic_measure_kernel;
use crate::lattice::{round_ties_up, Field, Site};
use crate::sampler::Ensemble;
use crate::stats;
use serde::{Deserialize, Serialize};
use std::sync::OnceLock;

/// Radii schedule for a box of radius `N`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScaleSchedule {
    pub n_box: i32,
    pub omega: f64,
    pub k_min: i32,
    pub k_max: i32,
}

impl ScaleSchedule {
    /// The asymptotic theory takes `omega <= 1/8`; at desk-scale box sizes that
    /// choice makes the mollifier bands of consecutive scales overlap, so any
    /// `omega` in `(0,1)` is accepted and the schedule is validated per scale.
    pub fn new(n_box: i32, omega: f64, k_min: i32, k_max: i32) -> Result<ScaleSchedule> {
        if !(omega > 0.0 && omega < 1.0) {
            return Err(Error::invalid(format!("omega must lie in (0,1), got {omega}")));
        }
        if k_min > k_max {
            return Err(Error::invalid("k_min must be <= k_max"));
        }
        let s = ScaleSchedule {
            n_box,
            omega,
            k_min,
            k_max,
        };
        for k in k_min..=k_max {
            if s.r_minus(k) <= 0.0 {
                return Err(Error::invalid(format!(
                    "r_minus({k}) = {:.3} not positive",
                    s.r_minus(k)
                )));
            }
        }
        Ok(s)
    }

    #[inline]
    pub fn r(&self, k: i32) -> f64 {
        self.n_box as f64 * (-(k as f64)).exp()
    }

    #[inline]
    pub fn smoothing_width(&self, k: i32) -> f64 {
        self.r(k).powf(1.0 - self.omega)
    }

    #[inline]
    pub fn r_plus(&self, k: i32) -> f64 {
        self.r(k) + self.smoothing_width(k)
    }

    #[inline]
    pub fn r_minus(&self, k: i32) -> f64 {
        self.r(k) - self.smoothing_width(k)
    }
}

/// Fixed smooth bump supported in (-1,1) with integral one:
/// `eta(t) = C exp(-1/(1-t^2))`.
pub fn bump(t: f64) -> f64 {
    if t.abs() >= 1.0 {
        0.0
    } else {
        bump_norm() * (-1.0 / (1.0 - t * t)).exp()
    }
}

fn bump_norm() -> f64 {
    static NORM: OnceLock<f64> = OnceLock::new();
    *NORM.get_or_init(|| {
        // Adaptive Simpson of exp(-1/(1-t^2)) over (-1,1).
        fn raw(t: f64) -> f64 {
            if t.abs() >= 1.0 {
                0.0
            } else {
                (-1.0 / (1.0 - t * t)).exp()
            }
        }
        fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64, eps: f64, depth: u32) -> f64 {
            let m = 0.5 * (a + b);
            let lm = 0.5 * (a + m);
            let rm = 0.5 * (m + b);
            let flm = raw(lm);
            let frm = raw(rm);
            let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
            let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            if depth > 40 || (left + right - whole).abs() < 15.0 * eps {
                left + right + (left + right - whole) / 15.0
            } else {
                simpson(a, m, fa, flm, fm, eps / 2.0, depth + 1)
                    + simpson(m, b, fm, frm, fb, eps / 2.0, depth + 1)
            }
        }
        let integral = simpson(-1.0, 1.0, 0.0, raw(0.0), 0.0, 1e-15, 0);
        1.0 / integral
    })
}

/// `eta_rho(r - center)` over the inclusive integer range `r_grid`.
pub fn mollifier_weights(rho: f64, center: f64, r_grid: (i32, i32)) -> Result<Vec<f64>> {
    if rho < 2.0 {
        return Err(Error::invalid(format!(
            "mollifier width must be >= 2, got {rho:.3}"
        )));
    }
    let (lo, hi) = r_grid;
    if lo > hi {
        return Err(Error::invalid("empty radius grid"));
    }
    Ok((lo..=hi)
        .map(|r| bump((r as f64 - center) / rho) / rho)
        .collect())
}

/// The integer radius band `(center - rho, center + rho)` of a smoothed
/// average, with the width check. Errors if the band leaves the positive
/// radii or is too narrow for the mollifier.
fn radius_band(schedule: &ScaleSchedule, k: i32, plus: bool) -> Result<(i32, i32, f64, f64)> {
    let rho = schedule.smoothing_width(k);
    if rho < 2.0 {
        return Err(Error::geometry(format!(
            "scale k={k}: smoothing width {rho:.2} < 2 (radius {:.2} too small)",
            schedule.r(k)
        )));
    }
    let center = if plus {
        schedule.r_plus(k)
    } else {
        schedule.r_minus(k)
    };
    let lo = center - rho;
    let hi = center + rho;
    if lo < 1.0 {
        return Err(Error::geometry(format!(
            "scale k={k} ({}) : mollifier support [{lo:.2}, {hi:.2}] exits the radius grid",
            if plus { "plus" } else { "minus" }
        )));
    }
    Ok((lo.ceil() as i32, hi.floor() as i32, center, rho))
}

/// Smoothed square average `S_{k,+/-}(x, phi)`.
pub fn smoothed_average(
    field: &Field,
    x: Site,
    k: i32,
    plus: bool,
    schedule: &ScaleSchedule,
) -> Result<f64> {
    let (lo, hi, center, rho) = radius_band(schedule, k, plus)?;
    let mut num = 0.0;
    let mut den = 0.0;
    for r in lo..=hi {
        let w = bump((r as f64 - center) / rho) / rho;
        if w == 0.0 {
            continue;
        }
        let gamma = crate::harmonic::harmonic_average(field, x, r)?;
        num += w * gamma;
        den += w;
    }
    if den <= 0.0 {
        return Err(Error::geometry(format!(
            "scale k={k}: no integer radii under the mollifier"
        )));
    }
    Ok(num / den)
}

/// The same smoothed average as a weight vector over boundary sites of the
/// radius band, for exact variance computations: returns `(sites, weights)`.
pub fn smoothed_average_functional(
    x: Site,
    k: i32,
    plus: bool,
    schedule: &ScaleSchedule,
) -> Result<Vec<(Site, f64)>> {
    let (lo, hi, center, rho) = radius_band(schedule, k, plus)?;
    let mut den = 0.0;
    let mut parts: Vec<(i32, f64)> = Vec::new();
    for r in lo..=hi {
        let w = bump((r as f64 - center) / rho) / rho;
        if w == 0.0 {
            continue;
        }
        den += w;
        parts.push((r, w));
    }
    let mut out: std::collections::HashMap<(i32, i32), f64> = std::collections::HashMap::new();
    for (r, w) in parts {
        let kernel = harmonic_measure_kernel(r)?;
        let ring = crate::lattice::Domain::make_box(r, Site::new(0, 0))?;
        for (s, &kw) in ring.boundary_sites().zip(&kernel.weights) {
            *out.entry((x.x + s.x, x.y + s.y)).or_insert(0.0) += w * kw / den;
        }
    }
    let mut v: Vec<(Site, f64)> = out
        .into_iter()
        .map(|((sx, sy), w)| (Site::new(sx, sy), w))
        .collect();
    v.sort_by_key(|(s, _)| (s.y, s.x));
    Ok(v)
}

/// Good-event thresholds (the defaults follow the construction's constants).
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct EventParams {
    /// Oscillation threshold `rough_coeff * (ln r_k)^rough_power`.
    pub rough_coeff: f64,
    pub rough_power: f64,
    /// Boundary-layer threshold `r_k^{-omega * bdry_exponent_factor}`.
    pub bdry_exponent_factor: f64,
}

impl Default for EventParams {
    fn default() -> Self {
        EventParams {
            rough_coeff: 4.0,
            rough_power: 2.0,
            bdry_exponent_factor: 0.25,
        }
    }
}

/// Per-point, per-scale record of the decomposition.
#[derive(Clone, Debug, Serialize)]
pub struct MultiscaleDecomposition {
    pub x: Site,
    pub k0: i32,
    pub k_inf: i32,
    pub omega: f64,
    /// `S_{k,+}` for k in `k0..=k_inf`.
    pub s_plus: Vec<f64>,
    /// `S_{k,-}` for k in `k0..=k_inf`.
    pub s_minus: Vec<f64>,
    /// `I_k = S_{k+1,+} - S_{k,-}` for k in `k0..=k_inf-1`.
    pub increments: Vec<f64>,
    /// `B_k = S_{k,-} - S_{k,+}` for k in `k0..=k_inf`.
    pub boundary_layers: Vec<f64>,
    /// `phi(x) - S_{k_inf,+}`.
    pub remainder_fine: f64,
    /// `S_{k0,-}`.
    pub coarse: f64,
    pub phi_x: f64,
    /// Rough-event flags (true = non-rough, the good event) for k in `k0..=k_inf`.
    pub rough_flags: Vec<bool>,
    /// Boundary-layer flags (true = small, the good event) for k in `k0..=k_inf`.
    pub bdry_flags: Vec<bool>,
}

impl MultiscaleDecomposition {
    #[inline]
    fn k_index(&self, k: i32) -> usize {
        (k - self.k0) as usize
    }

    pub fn s_plus_at(&self, k: i32) -> f64 {
        self.s_plus[self.k_index(k)]
    }

    pub fn s_minus_at(&self, k: i32) -> f64 {
        self.s_minus[self.k_index(k)]
    }

    pub fn increment_at(&self, k: i32) -> f64 {
        self.increments[self.k_index(k)]
    }

    pub fn boundary_layer_at(&self, k: i32) -> f64 {
        self.boundary_layers[self.k_index(k)]
    }

    /// Reconstruction of `phi(x)` from the telescoping identity:
    /// `sum_k I_k + sum_{k>k0} B_k + (phi(x) - S_{k_inf,+}) + S_{k0,-}`.
    /// The degenerate range `k_inf == k0` has both sums empty and needs the
    /// `B_{k0}` correction, since the remainders alone add `S_{k0,-} - S_{k0,+}`.
    pub fn reconstruct(&self) -> f64 {
        if self.k_inf == self.k0 {
            return self.remainder_fine + self.coarse - self.boundary_layer_at(self.k0);
        }
        let inc: f64 = self.increments.iter().sum();
        let bl: f64 = (self.k0 + 1..=self.k_inf - 1)
            .map(|k| self.boundary_layer_at(k))
            .sum();
        inc + bl + self.remainder_fine + self.coarse
    }

    pub fn telescoping_residual(&self) -> f64 {
        (self.reconstruct() - self.phi_x).abs()
    }
}

/// Rough event at scale `k`: true iff the oscillation of the field over the
/// boundary of `Q_{round(r_k)}(x)` is at most `coeff (ln r_k)^power`.
pub fn event_rough(
    field: &Field,
    x: Site,
    k: i32,
    schedule: &ScaleSchedule,
    params: &EventParams,
) -> Result<bool> {
    let rk = schedule.r(k);
    let radius = round_ties_up(rk).max(1);
    let osc = crate::lattice::boundary_oscillation(field, x, radius)?;
    Ok(osc <= params.rough_coeff * rk.ln().max(0.0).powf(params.rough_power))
}

/// Boundary-layer event at scale `k`: true iff `|B_k| <= r_k^{-omega/4}`
/// (with a configurable exponent factor).
pub fn event_boundary_layer(
    decomp: &MultiscaleDecomposition,
    k: i32,
    schedule: &ScaleSchedule,
    params: &EventParams,
) -> bool {
    let threshold = schedule
        .r(k)
        .powf(-schedule.omega * params.bdry_exponent_factor);
    decomp.boundary_layer_at(k).abs() <= threshold
}

/// Full decomposition of `phi(x)` between scales `k0` and `k_inf`.
pub fn decompose(
    field: &Field,
    x: Site,
    k0: i32,
    k_inf: i32,
    omega: f64,
    params: &EventParams,
) -> Result<MultiscaleDecomposition> {
    let n_box = field.domain.radius;
    if k_inf < k0 {
        return Err(Error::invalid("k_inf must be >= k0"));
    }
    let dist = field.domain.dist_to_boundary(x).max(1) as f64;
    let k_floor = (n_box as f64 / dist).ln().ceil() as i32;
    if k0 < k_floor.max(0) {
        return Err(Error::invalid(format!(
            "k0 = {k0} below the admissible floor {} for x=({},{})",
            k_floor.max(0),
            x.x,
            x.y
        )));
    }
    if (k_inf as f64) > (n_box as f64).ln() {
        return Err(Error::invalid(format!(
            "k_inf = {k_inf} above ln N = {:.2}",
            (n_box as f64).ln()
        )));
    }
    let schedule = ScaleSchedule::new(n_box, omega, k0, k_inf + 1)?;

    let ks: Vec<i32> = (k0..=k_inf).collect();
    let mut s_plus = Vec::with_capacity(ks.len());
    let mut s_minus = Vec::with_capacity(ks.len());
    for &k in &ks {
        s_plus.push(smoothed_average(field, x, k, true, &schedule)?);
        s_minus.push(smoothed_average(field, x, k, false, &schedule)?);
    }
    let mut increments = Vec::with_capacity(ks.len().saturating_sub(1));
    for i in 0..ks.len().saturating_sub(1) {
        // I_k = S_{k+1,+} - S_{k,-}
        increments.push(s_plus[i + 1] - s_minus[i]);
    }
    let boundary_layers: Vec<f64> = (0..ks.len()).map(|i| s_minus[i] - s_plus[i]).collect();
    let phi_x = field.get(x);
    let remainder_fine = phi_x - s_plus[ks.len() - 1];
    let coarse = s_minus[0];

    let mut decomp = MultiscaleDecomposition {
        x,
        k0,
        k_inf,
        omega,
        s_plus,
        s_minus,
        increments,
        boundary_layers,
        remainder_fine,
        coarse,
        phi_x,
        rough_flags: Vec::new(),
        bdry_flags: Vec::new(),
    };
    let mut rough = Vec::with_capacity(ks.len());
    let mut bdry = Vec::with_capacity(ks.len());
    for &k in &ks {
        rough.push(event_rough(field, x, k, &schedule, params)?);
        bdry.push(event_boundary_layer(&decomp, k, &schedule, params));
    }
    decomp.rough_flags = rough;
    decomp.bdry_flags = bdry;
    Ok(decomp)
}

/// Increment statistics across an ensemble.
#[derive(Clone, Debug, Serialize)]
pub struct IncrementReport {
    pub k_values: Vec<i32>,
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
    pub skewness: Vec<f64>,
    pub excess_kurtosis: Vec<f64>,
    /// Pairwise correlations across scales, row-major over `k_values`.
    pub correlation: Vec<Vec<f64>>,
    /// Correlation standard error `1/sqrt(n_eff)` per entry.
    pub correlation_se: f64,
    pub lambda_grid: Vec<f64>,
    /// Empirical log-MGF per scale: `log_mgf[i][j]` at `(k_values[i], lambda_grid[j])`.
    pub log_mgf: Vec<Vec<f64>>,
    /// `lambda^2 g_hat / 2` on the same grid.
    pub gaussian_reference: Vec<f64>,
    /// `sup over |lambda| <= 1 of |log_mgf - reference|` per scale.
    pub mgf_deviation: Vec<f64>,
    pub samples: usize,
}

/// Per-scale increment statistics over an ensemble, pooled across `sites`.
///
/// Increments are computed directly as `I_k = S_{k+1,+} - S_{k,-}`, which only
/// needs the plus-average at `k+1` and the minus-average at `k`; this reaches
/// one scale deeper than the full decomposition, whose bookkeeping would also
/// require `S_{k_inf,-}`.
pub fn increment_statistics(
    ensemble: &Ensemble,
    sites: &[Site],
    k0: i32,
    k_inf: i32,
    omega: f64,
    g_hat: f64,
) -> Result<IncrementReport> {
    if ensemble.len() * sites.len() < 1000 {
        return Err(Error::InsufficientSamples {
            needed: 1000,
            got: ensemble.len() * sites.len(),
        });
    }
    let n_box = ensemble.domain.radius;
    let schedule = ScaleSchedule::new(n_box, omega, k0, k_inf)?;
    let k_values: Vec<i32> = (k0..k_inf).collect();
    let mut series: Vec<Vec<f64>> = vec![Vec::new(); k_values.len()];
    for snap in &ensemble.snapshots {
        for &x in sites {
            for (i, &k) in k_values.iter().enumerate() {
                let s_plus = smoothed_average(snap, x, k + 1, true, &schedule)?;
                let s_minus = smoothed_average(snap, x, k, false, &schedule)?;
                series[i].push(s_plus - s_minus);
            }
        }
    }
    let lambda_grid: Vec<f64> = (-10..=10).map(|i| i as f64 * 0.2).collect();
    let mut report = IncrementReport {
        k_values: k_values.clone(),
        mean: Vec::new(),
        variance: Vec::new(),
        skewness: Vec::new(),
        excess_kurtosis: Vec::new(),
        correlation: Vec::new(),
        correlation_se: 1.0 / (series[0].len() as f64).sqrt(),
        lambda_grid: lambda_grid.clone(),
        log_mgf: Vec::new(),
        gaussian_reference: lambda_grid.iter().map(|l| l * l * g_hat / 2.0).collect(),
        mgf_deviation: Vec::new(),
        samples: series[0].len(),
    };
    for xs in &series {
        let (m, v, s, k) = stats::four_moments(xs);
        report.mean.push(m);
        report.variance.push(v);
        report.skewness.push(s);
        report.excess_kurtosis.push(k);
        let mut row = Vec::with_capacity(lambda_grid.len());
        for &l in &lambda_grid {
            let mgf = xs.iter().map(|x| (l * x).exp()).sum::<f64>() / xs.len() as f64;
            row.push(mgf.ln());
        }
        let dev = row
            .iter()
            .zip(&report.gaussian_reference)
            .zip(&lambda_grid)
            .filter(|(_, l)| l.abs() <= 1.0 + 1e-12)
            .map(|((a, b), _)| (a - b).abs())
            .fold(0.0f64, f64::max);
        report.log_mgf.push(row);
        report.mgf_deviation.push(dev);
    }
    for i in 0..k_values.len() {
        let mut row = Vec::with_capacity(k_values.len());
        for j in 0..k_values.len() {
            row.push(if i == j {
                1.0
            } else {
                stats::correlation(&series[i], &series[j])
            });
        }
        report.correlation.push(row);
    }
    Ok(report)
}

/// CSV dump of decompositions:
/// `snapshotId,x1,x2,k,sPlus,sMinus,increment,boundaryLayer,roughFlag,bdryFlag`.
pub fn decomposition_csv(decomps: &[(usize, &MultiscaleDecomposition)]) -> String {
    let mut out =
        String::from("snapshotId,x1,x2,k,sPlus,sMinus,increment,boundaryLayer,roughFlag,bdryFlag\n");
    for (id, d) in decomps {
        for (i, k) in (d.k0..=d.k_inf).enumerate() {
            let inc = if k < d.k_inf {
                format!("{:.12e}", d.increments[i])
            } else {
                String::new()
            };
            out.push_str(&format!(
                "{},{},{},{},{:.12e},{:.12e},{},{:.12e},{},{}\n",
                id,
                d.x.x,
                d.x.y,
                k,
                d.s_plus[i],
                d.s_minus[i],
                inc,
                d.boundary_layers[i],
                d.rough_flags[i],
                d.bdry_flags[i],
            ));
        }
    }
    out
}

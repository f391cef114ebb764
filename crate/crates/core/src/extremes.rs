//! Maximum statistics, centering, tail diagnostics, tightness reports, and
//! field-level barrier events.

use crate::error::{Error, Result};
use crate::lattice::{Field, Site};
use crate::multiscale::{self, EventParams};
use crate::rng::{stream, CounterRng};
use crate::sampler::Ensemble;
use crate::stats;
use serde::{Deserialize, Serialize};

/// Centering `sqrt(g) * (2 ln N - (3/4) ln ln N)`.
pub fn centering(n_box: u32, g_hat: f64) -> Result<f64> {
    if n_box < 3 {
        return Err(Error::invalid("centering needs N >= 3"));
    }
    if !(g_hat > 0.0) {
        return Err(Error::invalid("g_hat must be positive"));
    }
    let n = n_box as f64;
    Ok(g_hat.sqrt() * (2.0 * n.ln() - 0.75 * n.ln().ln()))
}

/// Centering without the log log term (ablation diagnostic).
pub fn centering_ablated(n_box: u32, g_hat: f64) -> Result<f64> {
    if n_box < 3 {
        return Err(Error::invalid("centering needs N >= 3"));
    }
    Ok(g_hat.sqrt() * 2.0 * (n_box as f64).ln())
}

/// Argmax of the field over the interior, deterministic tie-break by the
/// canonical site order.
pub fn field_max(field: &Field) -> (Site, f64) {
    let mut best_site = None;
    let mut best = f64::NEG_INFINITY;
    for s in field.domain.interior_sites() {
        let v = field.get(s);
        if v > best {
            best = v;
            best_site = Some(s);
        }
    }
    (best_site.expect("non-empty interior"), best)
}

/// Empirical upper tail of `phi(x)` with analytic envelopes.
#[derive(Clone, Debug, Serialize)]
pub struct TailProfile {
    pub x: Site,
    pub t_grid: Vec<f64>,
    pub empirical: Vec<f64>,
    pub stderr: Vec<f64>,
    /// `exp(-t^2 / (2 g_hat ln dist))`.
    pub sharp_envelope: Vec<f64>,
    /// `exp(-c_minus t^2 / (2 Var_DGFF(x)))`, the log-concavity comparison.
    pub bl_envelope: Vec<f64>,
    /// Grid points where the empirical tail exceeds `safety * sharp envelope`
    /// beyond 3 binomial sigmas.
    pub violations: Vec<f64>,
    pub safety_factor: f64,
}

/// Tail profile at a site: empirical `P(phi(x) >= t)` plus envelopes.
pub fn tail_profile(
    ensemble: &Ensemble,
    x: Site,
    g_hat: f64,
    c_minus: f64,
) -> Result<TailProfile> {
    if ensemble.len() < 10_000 {
        return Err(Error::InsufficientSamples {
            needed: 10_000,
            got: ensemble.len(),
        });
    }
    let dist = ensemble.domain.dist_to_boundary(x);
    if dist < ensemble.domain.radius / 2 {
        return Err(Error::geometry("tail profile site must be mid-domain"));
    }
    let xs: Vec<f64> = ensemble.snapshots.iter().map(|f| f.get(x)).collect();
    let sd = stats::variance(&xs).sqrt();
    let log_dist = (dist as f64).ln();

    // Exact DGFF variance at x for the comparison envelope.
    let var_dgff = crate::harmonic::green_function(ensemble.domain, x)?.get(x) / 4.0;

    let t_grid: Vec<f64> = (0..=30).map(|i| i as f64 * 0.1 * sd).collect();
    let n = xs.len() as f64;
    let safety_factor = 2.0;
    let mut profile = TailProfile {
        x,
        t_grid: t_grid.clone(),
        empirical: Vec::new(),
        stderr: Vec::new(),
        sharp_envelope: Vec::new(),
        bl_envelope: Vec::new(),
        violations: Vec::new(),
        safety_factor,
    };
    for &t in &t_grid {
        let hits = xs.iter().filter(|v| **v >= t).count();
        let p = hits as f64 / n;
        let se = stats::binomial_stderr(p.max(1.0 / n), xs.len());
        let sharp = (-t * t / (2.0 * g_hat * log_dist)).exp();
        let bl = (-c_minus * t * t / (2.0 * var_dgff)).exp();
        if p > safety_factor * sharp + 3.0 * se {
            profile.violations.push(t);
        }
        profile.empirical.push(p);
        profile.stderr.push(se);
        profile.sharp_envelope.push(sharp);
        profile.bl_envelope.push(bl);
    }
    Ok(profile)
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BarrierKind {
    Upper,
    LowerCorridor,
}

/// Barrier specification for field-level events.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BarrierSpec {
    pub kind: BarrierKind,
    /// Offset grid (upper) or count offset (lower).
    pub gamma_grid: Vec<f64>,
    /// `k_inf = round(ln N) - delta`.
    pub delta: i32,
    pub ell: i32,
    pub g_hat: f64,
    pub omega: f64,
    /// Upsilon for the lower-corridor counting variable.
    pub upsilon: f64,
}

impl BarrierSpec {
    pub fn k_inf(&self, n_box: i32) -> i32 {
        crate::lattice::round_ties_up((n_box as f64).ln()) - self.delta
    }

    /// Upper barrier `B(j) = slope * j + (j ^ (k_inf - j))^{2/5}` with
    /// `slope = sqrt(g) (m_N - 2 delta_g) / k_inf` where `delta_g` is the
    /// drop `delta * sqrt(g)` in field units; the crossing event adds `Gamma`.
    pub fn upper_barrier_value(&self, j: i32, n_box: i32) -> f64 {
        let k_inf = self.k_inf(n_box);
        let m_n = 2.0 * (n_box as f64).ln() - 0.75 * (n_box as f64).ln().ln();
        let slope = self.g_hat.sqrt() * (m_n - 2.0 * self.delta as f64) / k_inf as f64;
        let hump = (j.min(k_inf - j).max(0) as f64).powf(0.4);
        slope * j as f64 + hump
    }

    /// Lower corridor bounds at `j` relative to `k0`:
    /// `slope (j - k0) - ((j-k0) ^ (k_inf-j))^{3/5 or 2/5}`.
    pub fn lower_corridor(&self, j: i32, k0: i32, n_box: i32) -> (f64, f64) {
        let k_inf = self.k_inf(n_box);
        let m_n = 2.0 * (n_box as f64).ln() - 0.75 * (n_box as f64).ln().ln();
        let slope = self.g_hat.sqrt() * (m_n - 4.0 * self.delta as f64) / (k_inf - k0) as f64;
        let arg = (j - k0).min(k_inf - j).max(0) as f64;
        let line = slope * (j - k0) as f64;
        (line - arg.powf(0.6), line - arg.powf(0.4))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct UpperBarrierReport {
    pub gamma_grid: Vec<f64>,
    /// Fraction of snapshots where some site/scale exceeds the barrier plus Gamma.
    pub crossing_frequency: Vec<f64>,
    pub stderr: Vec<f64>,
    pub sites: usize,
    pub snapshots: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct LowerCorridorReport {
    /// Distribution of the counting variable over snapshots.
    pub counts: Vec<usize>,
    pub mean_count: f64,
    pub nonzero_fraction: f64,
    pub sites: usize,
}

#[derive(Clone, Debug, Serialize)]
pub enum BarrierReport {
    Upper(UpperBarrierReport),
    LowerCorridor(LowerCorridorReport),
}

/// Evaluate barrier events on an ensemble over a site set.
pub fn barrier_crossing_stats(
    ensemble: &Ensemble,
    spec: &BarrierSpec,
    sites: &[Site],
) -> Result<BarrierReport> {
    if ensemble.is_empty() || sites.is_empty() {
        return Err(Error::invalid("empty ensemble or site set"));
    }
    let n_box = ensemble.domain.radius;
    let k_inf = spec.k_inf(n_box);
    let params = EventParams::default();
    match spec.kind {
        BarrierKind::Upper => {
            let k_top = k_inf - spec.ell;
            let mut crossings = vec![0usize; spec.gamma_grid.len()];
            for snap in &ensemble.snapshots {
                let mut max_excess = f64::NEG_INFINITY;
                for &x in sites {
                    let dist = ensemble.domain.dist_to_boundary(x).max(1) as f64;
                    let k0 = ((n_box as f64 / dist).ln().ceil() as i32).max(1);
                    let dec = multiscale::decompose(snap, x, k0, k_top, spec.omega, &params)?;
                    for j in k0..=k_top {
                        let excess =
                            dec.s_plus_at(j) - spec.upper_barrier_value(j, n_box);
                        max_excess = max_excess.max(excess);
                    }
                }
                for (gi, &g) in spec.gamma_grid.iter().enumerate() {
                    if max_excess > g {
                        crossings[gi] += 1;
                    }
                }
            }
            let n = ensemble.len() as f64;
            let freq: Vec<f64> = crossings.iter().map(|&c| c as f64 / n).collect();
            let stderr = freq
                .iter()
                .map(|&p| stats::binomial_stderr(p, ensemble.len()))
                .collect();
            Ok(BarrierReport::Upper(UpperBarrierReport {
                gamma_grid: spec.gamma_grid.clone(),
                crossing_frequency: freq,
                stderr,
                sites: sites.len(),
                snapshots: ensemble.len(),
            }))
        }
        BarrierKind::LowerCorridor => {
            let k0 = spec.delta;
            let k0p = k0 + spec.ell;
            let k_top = k_inf - spec.ell;
            let m_n = 2.0 * (n_box as f64).ln() - 0.75 * (n_box as f64).ln().ln();
            let target = spec.g_hat.sqrt() * (m_n - 4.0 * spec.delta as f64);
            let mut counts = Vec::with_capacity(ensemble.len());
            for snap in &ensemble.snapshots {
                let mut count = 0usize;
                for &x in sites {
                    let dec =
                        multiscale::decompose(snap, x, k0, k_inf, spec.omega, &params)?;
                    // Corridor on partial sums of increments.
                    let mut ok = true;
                    let mut partial = 0.0;
                    let mut sums = vec![0.0; (k_inf - k0 + 1) as usize];
                    for j in k0..k_inf {
                        partial += dec.increment_at(j);
                        sums[(j - k0 + 1) as usize] = partial;
                    }
                    for j in k0p..=k_top {
                        let s = sums[(j - k0) as usize];
                        let (lo, hi) = spec.lower_corridor(j, k0, n_box);
                        if s < lo || s > hi {
                            ok = false;
                            break;
                        }
                    }
                    let total = sums[(k_inf - k0) as usize];
                    if total < target - 1.0 || total > target {
                        ok = false;
                    }
                    // Good events at every scale.
                    if ok {
                        ok = dec.rough_flags.iter().all(|&b| b)
                            && dec.bdry_flags.iter().all(|&b| b);
                    }
                    // Peak condition.
                    if ok && dec.phi_x - dec.s_minus_at(k0)
                        >= spec.g_hat.sqrt() * m_n - spec.upsilon
                    {
                        count += 1;
                    }
                }
                counts.push(count);
            }
            let mean_count = counts.iter().sum::<usize>() as f64 / counts.len() as f64;
            let nonzero = counts.iter().filter(|&&c| c > 0).count() as f64
                / counts.len() as f64;
            Ok(BarrierReport::LowerCorridor(LowerCorridorReport {
                counts,
                mean_count,
                nonzero_fraction: nonzero,
                sites: sites.len(),
            }))
        }
    }
}

/// Centered-maximum quantile table across box sizes.
#[derive(Clone, Debug, Serialize)]
pub struct TightnessReport {
    pub n_values: Vec<u32>,
    pub g_hat: f64,
    pub g_hat_stderr: f64,
    pub quantile_levels: Vec<f64>,
    /// Per-N rows of centered-max quantiles at `quantile_levels`.
    pub quantiles: Vec<Vec<f64>>,
    pub ensemble_sizes: Vec<usize>,
    /// 10-90% interquantile widths per N.
    pub widths: Vec<f64>,
    /// Max over N-pairs of the two-sample KS distance between centered-max laws.
    pub tightness_score: f64,
    /// Medians of the centered maxima with bootstrap standard errors.
    pub medians: Vec<f64>,
    pub median_se: Vec<f64>,
    /// Medians under the ablated centering (no log log term).
    pub medians_ablated: Vec<f64>,
    /// Largest |median drift| between N-pairs, proper and ablated centering.
    pub median_drift: f64,
    pub median_drift_ablated: f64,
}

/// Build the tightness report from per-N samples of the raw maxima.
pub fn tightness_report(
    n_values: &[u32],
    maxima: &[Vec<f64>],
    g_hat: f64,
    g_hat_stderr: f64,
    seed: u128,
) -> Result<TightnessReport> {
    if n_values.len() < 3 {
        return Err(Error::invalid("tightness report needs >= 3 box sizes"));
    }
    if maxima.iter().any(|m| m.len() < 500) {
        return Err(Error::InsufficientSamples {
            needed: 500,
            got: maxima.iter().map(|m| m.len()).min().unwrap_or(0),
        });
    }
    let levels = vec![0.05, 0.10, 0.25, 0.50, 0.75, 0.90, 0.95];
    let mut centered_all: Vec<Vec<f64>> = Vec::new();
    let mut ablated_all: Vec<Vec<f64>> = Vec::new();
    for (i, &n) in n_values.iter().enumerate() {
        let c = centering(n, g_hat)?;
        let ca = centering_ablated(n, g_hat)?;
        centered_all.push(maxima[i].iter().map(|m| m - c).collect());
        ablated_all.push(maxima[i].iter().map(|m| m - ca).collect());
    }
    let mut quantiles = Vec::new();
    let mut widths = Vec::new();
    let mut medians = Vec::new();
    let mut median_se = Vec::new();
    let mut medians_ablated = Vec::new();
    let mut rng = CounterRng::root(seed).substream(&[stream::BOOTSTRAP]);
    for (i, cent) in centered_all.iter().enumerate() {
        let mut sorted = cent.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let row: Vec<f64> = levels
            .iter()
            .map(|&l| stats::quantile_sorted(&sorted, l))
            .collect();
        widths.push(stats::quantile_sorted(&sorted, 0.9) - stats::quantile_sorted(&sorted, 0.1));
        medians.push(stats::quantile_sorted(&sorted, 0.5));
        median_se.push(stats::bootstrap_quantile_se(cent, 0.5, 200, &mut rng));
        let mut sa = ablated_all[i].clone();
        sa.sort_by(|a, b| a.partial_cmp(b).unwrap());
        medians_ablated.push(stats::quantile_sorted(&sa, 0.5));
        quantiles.push(row);
    }
    let mut score = 0.0f64;
    for i in 0..centered_all.len() {
        for j in i + 1..centered_all.len() {
            score = score.max(stats::ks_two_sample(&centered_all[i], &centered_all[j]));
        }
    }
    let drift = |ms: &[f64]| -> f64 {
        let mut d = 0.0f64;
        for i in 0..ms.len() {
            for j in i + 1..ms.len() {
                d = d.max((ms[i] - ms[j]).abs());
            }
        }
        d
    };
    Ok(TightnessReport {
        n_values: n_values.to_vec(),
        g_hat,
        g_hat_stderr,
        quantile_levels: levels,
        quantiles,
        ensemble_sizes: maxima.iter().map(|m| m.len()).collect(),
        widths,
        tightness_score: score,
        medians: medians.clone(),
        median_se,
        medians_ablated: medians_ablated.clone(),
        median_drift: drift(&medians),
        median_drift_ablated: drift(&medians_ablated),
    })
}

/// Sample DGFF maxima for the tightness diagnostics.
pub fn dgff_maxima(n_box: i32, samples: usize, seed: u128) -> Result<Vec<f64>> {
    use rayon::prelude::*;
    let domain = crate::lattice::Domain::make_box(n_box, Site::new(0, 0))?;
    let bc = Field::zeros(domain);
    let root = CounterRng::root(seed);
    (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = root.substream(&[stream::DGFF, n_box as u64, i as u64]);
            let f = crate::sampler::sample_dgff_exact(domain, &bc, &mut rng)?;
            Ok(field_max(&f).1)
        })
        .collect()
}

//! Discrete harmonic measure, Green's functions, Dirichlet solves, and the
//! constants `c*` and `g_hat`.
//!
//! Normalization: the lattice Laplacian is `Delta phi(x) = (1/4) sum_{y~x}
//! (phi(y) - phi(x))` and Green's functions satisfy `-Delta G = delta`, i.e.
//! `G = 4 (4I - A)^{-1} delta`. The five-point inverse `(4I - A)^{-1}` itself
//! matches the continuum Dirichlet Green's function of `-Delta` on the scaled
//! box, which is the matching used by `compute_cstar`.

use crate::dst;
use crate::error::{Error, Result};
use crate::lattice::{round_ties_up, Domain, Field, Site, SiteClass};
use crate::sampler::Ensemble;
use crate::stats;
use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

/// Exit distribution of simple random walk from the center of `Q_r(0)`,
/// stored over the boundary ring in canonical boundary order.
#[derive(Clone, Debug)]
pub struct HarmonicKernel {
    pub radius: i32,
    pub weights: Vec<f64>,
}

impl HarmonicKernel {
    fn compute(r: i32) -> HarmonicKernel {
        let domain = Domain::make_box(r, Site::new(0, 0)).unwrap();
        let n = 2 * r as usize - 1;
        let mut f = vec![0.0; n * n];
        let mid = r as usize - 1;
        f[mid * n + mid] = 1.0;
        dst::solve_neg_lap5(&mut f, n); // g = (4I - A)^{-1} delta_0
        let at = |s: Site| -> f64 {
            if domain.classify(s) == SiteClass::Interior {
                let row = (s.y + r - 1) as usize;
                let col = (s.x + r - 1) as usize;
                f[row * n + col]
            } else {
                0.0
            }
        };
        // Last-step decomposition: a(y) = sum_{z ~ y, z interior} g(z).
        let weights: Vec<f64> = domain
            .boundary_sites()
            .map(|y| y.neighbors().iter().map(|&z| at(z)).sum())
            .collect();
        HarmonicKernel { radius: r, weights }
    }

    pub fn weight_sum(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Kernel cache keyed by radius, with an approximate byte budget (LRU).
pub struct KernelCache {
    map: Mutex<(HashMap<i32, (std::sync::Arc<HarmonicKernel>, u64)>, u64, usize)>,
    budget_bytes: usize,
}

impl KernelCache {
    fn new(budget_bytes: usize) -> KernelCache {
        KernelCache {
            map: Mutex::new((HashMap::new(), 0, 0)),
            budget_bytes,
        }
    }

    pub fn get(&self, r: i32) -> std::sync::Arc<HarmonicKernel> {
        {
            let mut guard = self.map.lock().unwrap();
            let (map, clock, _) = &mut *guard;
            *clock += 1;
            let stamp = *clock;
            if let Some((k, used)) = map.get_mut(&r) {
                *used = stamp;
                return k.clone();
            }
        }
        let kernel = std::sync::Arc::new(HarmonicKernel::compute(r));
        let bytes = kernel.weights.len() * 8 + 16;
        let mut guard = self.map.lock().unwrap();
        let (map, clock, used_bytes) = &mut *guard;
        *clock += 1;
        let stamp = *clock;
        *used_bytes += bytes;
        map.insert(r, (kernel.clone(), stamp));
        while *used_bytes > self.budget_bytes && map.len() > 1 {
            let (&oldest, _) = map
                .iter()
                .min_by_key(|(_, (_, stamp))| *stamp)
                .map(|(k, v)| (k, v))
                .unwrap();
            if oldest == r {
                break;
            }
            if let Some((k, _)) = map.remove(&oldest) {
                *used_bytes -= k.weights.len() * 8 + 16;
            }
        }
        kernel
    }
}

/// The process-wide kernel cache (default budget 2 GiB).
pub fn kernel_cache() -> &'static KernelCache {
    static CACHE: OnceLock<KernelCache> = OnceLock::new();
    CACHE.get_or_init(|| KernelCache::new(2 << 30))
}

/// Harmonic-measure kernel for radius `r`, cached.
pub fn harmonic_measure_kernel(r: i32) -> Result<std::sync::Arc<HarmonicKernel>> {
    if r < 1 {
        return Err(Error::invalid(format!("kernel radius must be >= 1, got {r}")));
    }
    Ok(kernel_cache().get(r))
}

/// CSV export of a kernel: `x,y,weight` over the boundary ring.
pub fn kernel_csv(kernel: &HarmonicKernel) -> String {
    let domain = Domain::make_box(kernel.radius, Site::new(0, 0)).unwrap();
    let mut out = String::from("x,y,weight\n");
    for (s, w) in domain.boundary_sites().zip(&kernel.weights) {
        out.push_str(&format!("{},{},{:.17e}\n", s.x, s.y, w));
    }
    out
}

/// CSV export of a Green table: `x,y,value` over the interior.
pub fn green_csv(table: &GreenTable) -> String {
    let mut out = String::from("x,y,value\n");
    for s in table.domain.interior_sites() {
        out.push_str(&format!("{},{},{:.17e}\n", s.x, s.y, table.get(s)));
    }
    out
}

/// Weighted boundary average `Gamma_{Q_r(x)}(x, phi)`.
pub fn harmonic_average(field: &Field, x: Site, r: i32) -> Result<f64> {
    let sub = field.domain.subbox(x, r)?;
    let kernel = harmonic_measure_kernel(r)?;
    let mut acc = 0.0;
    for (s, w) in sub.boundary_sites().zip(&kernel.weights) {
        acc += w
            * field
                .try_get(s)
                .ok_or_else(|| Error::geometry(format!("site ({},{}) missing", s.x, s.y)))?;
    }
    Ok(acc)
}

/// Discrete harmonic function with the given boundary data (canonical boundary
/// order). The residual of the five-point equation is checked against
/// `1e-10 * osc(boundary)`.
pub fn solve_dirichlet(domain: Domain, boundary_values: &[f64]) -> Result<Field> {
    if boundary_values.len() != domain.boundary_count() {
        return Err(Error::invalid(format!(
            "boundary data needs {} values, got {}",
            domain.boundary_count(),
            boundary_values.len()
        )));
    }
    if boundary_values.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("boundary values must be finite"));
    }
    let mut bc = Field::zeros(domain);
    for (s, &v) in domain.boundary_sites().zip(boundary_values) {
        bc.set(s, v);
    }
    let ext = crate::sampler::harmonic_extension(domain, &bc)?;
    // Residual check.
    let lo = boundary_values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = boundary_values
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    let osc = hi - lo;
    let mut worst = 0.0f64;
    for s in domain.interior_sites() {
        let mut acc = 4.0 * ext.get(s);
        for nb in s.neighbors() {
            acc -= ext.get(nb);
        }
        worst = worst.max(acc.abs());
    }
    let tol = 1e-10 * osc.max(1e-30);
    if worst > tol && osc > 0.0 {
        return Err(Error::SolverFailure {
            residual: worst,
            tolerance: tol,
        });
    }
    Ok(ext)
}

/// Green's function table for `-Delta G = delta_source` with the `(1/4)`
/// Laplacian normalization (`G = 4 (4I - A)^{-1} delta`).
#[derive(Clone, Debug)]
pub struct GreenTable {
    pub domain: Domain,
    pub source: Site,
    /// Interior values in canonical interior order; zero on the boundary.
    pub values: Vec<f64>,
}

impl GreenTable {
    pub fn get(&self, s: Site) -> f64 {
        match self.domain.classify(s) {
            SiteClass::Interior => {
                let r = self.domain.radius;
                let c = self.domain.center;
                let n = 2 * r as usize - 1;
                let row = (s.y - c.y + r - 1) as usize;
                let col = (s.x - c.x + r - 1) as usize;
                self.values[row * n + col]
            }
            _ => 0.0,
        }
    }
}

pub fn green_function(domain: Domain, source: Site) -> Result<GreenTable> {
    if domain.classify(source) != SiteClass::Interior {
        return Err(Error::geometry("green_function source must be interior"));
    }
    let r = domain.radius;
    let c = domain.center;
    let n = 2 * r as usize - 1;
    let mut f = vec![0.0; n * n];
    let row = (source.y - c.y + r - 1) as usize;
    let col = (source.x - c.x + r - 1) as usize;
    f[row * n + col] = 4.0;
    dst::solve_neg_lap5(&mut f, n);
    Ok(GreenTable {
        domain,
        source,
        values: f,
    })
}

/// Discrete approximation of the harmonic-average variance constant `c*`.
///
/// `w` is the harmonic measure of `Q_inner` from 0 minus that of `Q_M` from 0;
/// the value is `w^T (4I-A)^{-1} w` on `Q_M`, whose five-point inverse matches
/// the continuum `-Delta` Green's function of the scaled box (the outer-ring
/// part of `w` sits where the Green's function vanishes and drops out).
pub fn compute_cstar(resolution: i32) -> Result<f64> {
    if resolution < 32 {
        return Err(Error::invalid(format!(
            "compute_cstar needs resolution >= 32, got {resolution}"
        )));
    }
    let inner = round_ties_up(resolution as f64 / std::f64::consts::E);
    compute_cstar_with_inner(resolution, inner)
}

/// `c*` with an explicit inner radius (testing hook; `inner == resolution`
/// makes the signed measure vanish).
pub fn compute_cstar_with_inner(resolution: i32, inner: i32) -> Result<f64> {
    if inner < 1 || inner > resolution {
        return Err(Error::invalid("inner radius out of range"));
    }
    if inner == resolution {
        return Ok(0.0);
    }
    let kernel = harmonic_measure_kernel(inner)?;
    let inner_domain = Domain::make_box(inner, Site::new(0, 0))?;
    let n = 2 * resolution as usize - 1;
    let mut f = vec![0.0; n * n];
    let origin_off = resolution - 1;
    for (s, &w) in inner_domain.boundary_sites().zip(&kernel.weights) {
        let row = (s.y + origin_off) as usize;
        let col = (s.x + origin_off) as usize;
        f[row * n + col] += w;
    }
    let rhs = f.clone();
    dst::solve_neg_lap5(&mut f, n);
    let mut c = 0.0;
    for (u, w) in f.iter().zip(&rhs) {
        c += u * w;
    }
    Ok(c)
}

/// Cached `c*` at the reference resolution 256.
pub fn cstar_reference() -> f64 {
    static CSTAR: OnceLock<f64> = OnceLock::new();
    *CSTAR.get_or_init(|| compute_cstar(256).expect("reference c* computation"))
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StiffnessMethod {
    Covariance,
    CltVariance,
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct StiffnessEstimate {
    pub method: StiffnessMethod,
    pub g_hat: f64,
    pub stderr: f64,
    /// Homogenized coefficient estimate (clt-variance method).
    pub a_hat: Option<f64>,
    pub c_star: f64,
    pub details: String,
}

/// Estimate the effective stiffness from an ensemble.
pub fn estimate_stiffness(ensemble: &Ensemble, method: StiffnessMethod) -> Result<StiffnessEstimate> {
    if ensemble.len() < 100 {
        return Err(Error::InsufficientSamples {
            needed: 100,
            got: ensemble.len(),
        });
    }
    ensemble.check_stationary(4.0)?;
    match method {
        StiffnessMethod::Covariance => stiffness_covariance(ensemble),
        StiffnessMethod::CltVariance => stiffness_clt(ensemble),
    }
}

/// Mesoscopic pair set for the covariance fit.
fn covariance_pairs(radius: i32) -> Vec<(Site, Site)> {
    let anchors = [
        Site::new(0, 0),
        Site::new(radius / 8, radius / 10),
        Site::new(-radius / 9, radius / 7),
        Site::new(-radius / 8, -radius / 8),
        Site::new(radius / 10, -radius / 7),
    ];
    let mut dists = vec![3i32, 4, 6, 8];
    let mut d = 12;
    while d <= radius / 4 {
        dists.push(d);
        d = (d as f64 * 1.5).round() as i32;
    }
    let mut pairs = Vec::new();
    for &a in &anchors {
        for &d in &dists {
            for (ux, uy) in [(1, 0), (0, 1), (1, 1)] {
                let step = if ux * uy != 0 {
                    ((d as f64) / std::f64::consts::SQRT_2).round() as i32
                } else {
                    d
                };
                let b = Site::new(a.x + ux * step, a.y + uy * step);
                if a.linf_dist(Site::new(0, 0)).max(b.linf_dist(Site::new(0, 0))) < radius / 2 {
                    pairs.push((a, b));
                }
            }
        }
    }
    pairs
}

fn stiffness_covariance(ensemble: &Ensemble) -> Result<StiffnessEstimate> {
    let radius = ensemble.domain.radius;
    let center = ensemble.domain.center;
    let pairs: Vec<(Site, Site)> = covariance_pairs(radius)
        .into_iter()
        .map(|(a, b)| {
            (
                Site::new(a.x + center.x, a.y + center.y),
                Site::new(b.x + center.x, b.y + center.y),
            )
        })
        .collect();
    if pairs.len() < 8 {
        return Err(Error::invalid(
            "domain too small for the covariance pair set",
        ));
    }
    let n_field = radius as f64;
    let log_dist: Vec<f64> = pairs
        .iter()
        .map(|(a, b)| (n_field / (1.0 + a.l2_dist(*b))).ln())
        .collect();

    // Slope estimate per snapshot batch, then batch-means stderr.
    let nb = 16usize.min(ensemble.len() / 8).max(2);
    let bl = ensemble.len() / nb;
    let mut slopes = Vec::with_capacity(nb);
    for b in 0..nb {
        let snaps = &ensemble.snapshots[b * bl..(b + 1) * bl];
        let mut covs = Vec::with_capacity(pairs.len());
        for (a, bsite) in &pairs {
            let xs: Vec<f64> = snaps.iter().map(|f| f.get(*a)).collect();
            let ys: Vec<f64> = snaps.iter().map(|f| f.get(*bsite)).collect();
            covs.push(stats::covariance(&xs, &ys));
        }
        let (slope, _icpt) = stats::linear_fit(&log_dist, &covs);
        slopes.push(slope);
    }
    let g_hat = stats::mean(&slopes);
    let stderr = (stats::variance(&slopes) / nb as f64).sqrt();
    Ok(StiffnessEstimate {
        method: StiffnessMethod::Covariance,
        g_hat,
        stderr,
        a_hat: None,
        c_star: cstar_reference(),
        details: format!("{} pairs, {} batches of {}", pairs.len(), nb, bl),
    })
}

/// Smooth mean-zero test profile on `[-1,1]^2`: the (2,1) Dirichlet sine mode.
pub fn clt_test_profile(xt: f64, yt: f64) -> f64 {
    (std::f64::consts::PI * (xt + 1.0)).sin()
        * (std::f64::consts::PI * (yt + 1.0) / 2.0).sin()
}

/// Continuum Dirichlet energy form `int g~ (-Delta)^{-1} g~` for a profile on
/// `[-1,1]^2`, by sine-mode quadrature (Gauss-Legendre nodes per mode).
pub fn continuum_quadratic_form(profile: impl Fn(f64, f64) -> f64, max_mode: usize) -> f64 {
    let (nodes, weights) = gauss_legendre_64();
    // Per-axis mode integrals of profile against sin(pi p (x+1)/2).
    let mut total = 0.0;
    for p in 1..=max_mode {
        for q in 1..=max_mode {
            let mut coef = 0.0;
            for (i, &xi) in nodes.iter().enumerate() {
                for (j, &yj) in nodes.iter().enumerate() {
                    let e = (std::f64::consts::PI * p as f64 * (xi + 1.0) / 2.0).sin()
                        * (std::f64::consts::PI * q as f64 * (yj + 1.0) / 2.0).sin();
                    coef += weights[i] * weights[j] * profile(xi, yj) * e;
                }
            }
            let mu = std::f64::consts::PI.powi(2) * (p * p + q * q) as f64 / 4.0;
            total += coef * coef / mu;
        }
    }
    total
}

fn stiffness_clt(ensemble: &Ensemble) -> Result<StiffnessEstimate> {
    let radius = ensemble.domain.radius as f64;
    let center = ensemble.domain.center;
    // <phi, g> per snapshot with g(x) = profile(x / N).
    let sites: Vec<(Site, f64)> = ensemble
        .domain
        .interior_sites()
        .map(|s| {
            let xt = (s.x - center.x) as f64 / radius;
            let yt = (s.y - center.y) as f64 / radius;
            (s, clt_test_profile(xt, yt))
        })
        .collect();
    let series: Vec<f64> = ensemble
        .snapshots
        .iter()
        .map(|f| sites.iter().map(|&(s, g)| g * f.get(s)).sum::<f64>())
        .collect();
    let var = stats::variance(&series);
    let var_se = stats::variance_stderr_batch(&series, 16);
    let iform = continuum_form_reference();
    let scale = radius.powi(4) * iform;
    let inv_a = var / scale;
    let a_hat = 1.0 / inv_a;
    let c_star = cstar_reference();
    let g_hat = c_star * inv_a;
    let stderr = c_star * var_se / scale;
    Ok(StiffnessEstimate {
        method: StiffnessMethod::CltVariance,
        g_hat,
        stderr,
        a_hat: Some(a_hat),
        c_star,
        details: format!("Var<phi,g> = {var:.4e} (se {var_se:.2e}), continuum form {iform:.6e}"),
    })
}

/// Cached continuum form for the reference profile.
pub fn continuum_form_reference() -> f64 {
    static FORM: OnceLock<f64> = OnceLock::new();
    *FORM.get_or_init(|| continuum_quadratic_form(clt_test_profile, 24))
}

/// 64-point Gauss-Legendre nodes and weights on [-1, 1].
fn gauss_legendre_64() -> (&'static [f64; 64], &'static [f64; 64]) {
    static NW: OnceLock<([f64; 64], [f64; 64])> = OnceLock::new();
    let nw = NW.get_or_init(|| {
        let n = 64usize;
        let mut nodes = [0.0; 64];
        let mut weights = [0.0; 64];
        for i in 0..n {
            // Newton iteration from the Chebyshev estimate.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            for _ in 0..100 {
                let (p, dp) = legendre_pair(n, x);
                let dx = p / dp;
                x -= dx;
                if dx.abs() < 1e-15 {
                    break;
                }
            }
            let (_, dp) = legendre_pair(n, x);
            nodes[i] = -x;
            weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
        }
        (nodes, weights)
    });
    (&nw.0, &nw.1)
}

fn legendre_pair(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

//! Barrier-crossing probabilities for independent-increment walks, exponential
//! tilting, and a randomized two-point Skorokhod embedding.

use crate::error::{Error, Result};
use crate::rng::{stream, CounterRng};
use crate::stats;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

// ---------------------------------------------------------------------------
// Increment laws
// ---------------------------------------------------------------------------

/// A one-dimensional increment law with a bounded density.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum IncrementLaw {
    Gaussian { mean: f64, sd: f64 },
    Logistic { location: f64, scale: f64 },
    /// Piecewise-linear density on a uniform grid.
    Tabulated(TabulatedLaw),
}

impl IncrementLaw {
    pub fn mean(&self) -> f64 {
        match self {
            IncrementLaw::Gaussian { mean, .. } => *mean,
            IncrementLaw::Logistic { location, .. } => *location,
            IncrementLaw::Tabulated(t) => t.mean,
        }
    }

    pub fn variance(&self) -> f64 {
        match self {
            IncrementLaw::Gaussian { sd, .. } => sd * sd,
            IncrementLaw::Logistic { scale, .. } => {
                scale * scale * std::f64::consts::PI.powi(2) / 3.0
            }
            IncrementLaw::Tabulated(t) => t.variance,
        }
    }

    pub fn sample(&self, rng: &mut CounterRng) -> f64 {
        match self {
            IncrementLaw::Gaussian { mean, sd } => rng.normal(*mean, *sd),
            IncrementLaw::Logistic { location, scale } => {
                let u = rng.uniform();
                location + scale * (u / (1.0 - u)).ln()
            }
            IncrementLaw::Tabulated(t) => t.sample(rng),
        }
    }

    /// Exponential tilt by `e^{lambda x} / MGF(lambda)`.
    pub fn tilt(&self, lambda: f64) -> Result<IncrementLaw> {
        if lambda == 0.0 {
            return Ok(self.clone());
        }
        match self {
            IncrementLaw::Gaussian { mean, sd } => Ok(IncrementLaw::Gaussian {
                mean: mean + lambda * sd * sd,
                sd: *sd,
            }),
            IncrementLaw::Logistic { location, scale } => {
                if (lambda * scale).abs() >= 1.0 {
                    return Err(Error::invalid(format!(
                        "logistic MGF diverges at lambda = {lambda} (scale {scale})"
                    )));
                }
                let base = TabulatedLaw::from_density(
                    |x| {
                        let z = (x - location) / scale;
                        let e = (-z.abs()).exp();
                        e / (scale * (1.0 + e) * (1.0 + e))
                    },
                    location - 40.0 * scale,
                    location + 40.0 * scale,
                    16_001,
                )?;
                base.tilt(lambda)
            }
            IncrementLaw::Tabulated(t) => t.tilt(lambda),
        }
    }
}

/// Piecewise-linear density on a uniform grid; moments and normalization by
/// Simpson quadrature on the grid (grid sizes are odd).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TabulatedLaw {
    pub lo: f64,
    pub hi: f64,
    pub pdf: Vec<f64>,
    #[serde(skip)]
    pub cdf: Vec<f64>,
    pub mean: f64,
    pub variance: f64,
}

impl TabulatedLaw {
    pub fn from_density(
        density: impl Fn(f64) -> f64,
        lo: f64,
        hi: f64,
        points: usize,
    ) -> Result<TabulatedLaw> {
        if points < 5 || points % 2 == 0 {
            return Err(Error::invalid("tabulated law needs an odd grid >= 5"));
        }
        let h = (hi - lo) / (points - 1) as f64;
        let mut pdf: Vec<f64> = (0..points)
            .map(|i| density(lo + i as f64 * h).max(0.0))
            .collect();
        let norm = simpson_weights_sum(&pdf, h);
        if !(norm > 0.0) {
            return Err(Error::invalid("density integrates to zero"));
        }
        for v in pdf.iter_mut() {
            *v /= norm;
        }
        let mean = simpson_moment(&pdf, lo, h, 1, 0.0);
        let variance = simpson_moment(&pdf, lo, h, 2, mean);
        let mut law = TabulatedLaw {
            lo,
            hi,
            pdf,
            cdf: Vec::new(),
            mean,
            variance,
        };
        law.rebuild_cdf();
        Ok(law)
    }

    /// Rebuild the (trapezoid) CDF used by the piecewise-linear sampler.
    pub fn rebuild_cdf(&mut self) {
        let n = self.pdf.len();
        let h = (self.hi - self.lo) / (n - 1) as f64;
        let mut cdf = Vec::with_capacity(n);
        let mut acc = 0.0;
        cdf.push(0.0);
        for i in 1..n {
            acc += 0.5 * (self.pdf[i - 1] + self.pdf[i]) * h;
            cdf.push(acc);
        }
        let total = *cdf.last().unwrap();
        for v in cdf.iter_mut() {
            *v /= total;
        }
        self.cdf = cdf;
    }

    pub fn sample(&self, rng: &mut CounterRng) -> f64 {
        let u = rng.uniform();
        let n = self.cdf.len();
        let h = (self.hi - self.lo) / (n - 1) as f64;
        let i = match self
            .cdf
            .binary_search_by(|c| c.partial_cmp(&u).unwrap())
        {
            Ok(i) => i.min(n - 2),
            Err(i) => i.saturating_sub(1).min(n - 2),
        };
        // Piecewise-linear density on [x_i, x_{i+1}]: invert the quadratic CDF.
        let p0 = self.pdf[i];
        let p1 = self.pdf[i + 1];
        let seg = (self.cdf[i + 1] - self.cdf[i]).max(1e-300);
        let frac = ((u - self.cdf[i]) / seg).clamp(0.0, 1.0);
        let x0 = self.lo + i as f64 * h;
        if (p1 - p0).abs() < 1e-14 * (p0 + p1) {
            return x0 + frac * h;
        }
        let a = 0.5 * (p1 - p0) / h;
        let area = frac * seg;
        // Solve a s^2 + p0 s = area for s in [0, h].
        let disc = (p0 * p0 + 4.0 * a * area).max(0.0);
        let s = (disc.sqrt() - p0) / (2.0 * a);
        x0 + s.clamp(0.0, h)
    }

    pub fn tilt(&self, lambda: f64) -> Result<IncrementLaw> {
        let n = self.pdf.len();
        let h = (self.hi - self.lo) / (n - 1) as f64;
        let mut pdf: Vec<f64> = (0..n)
            .map(|i| {
                let x = self.lo + i as f64 * h;
                self.pdf[i] * (lambda * x).exp()
            })
            .collect();
        let norm = simpson_weights_sum(&pdf, h);
        if !norm.is_finite() || norm <= 0.0 {
            return Err(Error::invalid("tilted density not normalizable"));
        }
        // Reject tilts whose mass concentrates at the grid edge.
        let edge = pdf[0].max(pdf[n - 1]);
        if edge > 1e-10 * norm / (self.hi - self.lo) {
            return Err(Error::invalid(
                "tilt pushes mass to the tabulation boundary; enlarge the grid",
            ));
        }
        for v in pdf.iter_mut() {
            *v /= norm;
        }
        let mean = simpson_moment(&pdf, self.lo, h, 1, 0.0);
        let variance = simpson_moment(&pdf, self.lo, h, 2, mean);
        let mut law = TabulatedLaw {
            lo: self.lo,
            hi: self.hi,
            pdf,
            cdf: Vec::new(),
            mean,
            variance,
        };
        law.rebuild_cdf();
        Ok(IncrementLaw::Tabulated(law))
    }
}

fn simpson_weights_sum(vals: &[f64], h: f64) -> f64 {
    let n = vals.len();
    let mut acc = vals[0] + vals[n - 1];
    for (i, v) in vals.iter().enumerate().take(n - 1).skip(1) {
        acc += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    acc * h / 3.0
}

fn simpson_moment(pdf: &[f64], lo: f64, h: f64, power: i32, center: f64) -> f64 {
    let n = pdf.len();
    let weighted: Vec<f64> = (0..n)
        .map(|i| {
            let x = lo + i as f64 * h;
            pdf[i] * (x - center).powi(power)
        })
        .collect();
    simpson_weights_sum(&weighted, h)
}

// ---------------------------------------------------------------------------
// Walk specifications
// ---------------------------------------------------------------------------

/// Distributional description of an independent-increment walk.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WalkSpec {
    /// Horizon: increments `X_0 .. X_{m-1}`, partial sums `Sigma_0 .. Sigma_m`.
    pub m: usize,
    pub laws: WalkLaws,
    /// `(C, gamma)` with `|E X_j| <= C e^{gamma (j - m)}`.
    pub mean_envelope: (f64, f64),
    /// Variance target `g`: `|E X_j^2 - g| <= C e^{gamma (j - m)}`.
    pub variance_target: f64,
    /// Sub-Gaussian certificate `(lambda_star, c_star)`.
    pub sub_gaussian: (f64, f64),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum WalkLaws {
    Homogeneous(IncrementLaw),
    PerStep(Vec<IncrementLaw>),
}

impl WalkSpec {
    pub fn iid(m: usize, law: IncrementLaw) -> WalkSpec {
        let g = law.variance() + law.mean() * law.mean();
        let c = law.mean().abs().max(1.0);
        WalkSpec {
            m,
            laws: WalkLaws::Homogeneous(law),
            mean_envelope: (c, 0.5),
            variance_target: g,
            sub_gaussian: (0.25 / g.max(1e-12), 2.0),
        }
    }

    pub fn law(&self, j: usize) -> &IncrementLaw {
        match &self.laws {
            WalkLaws::Homogeneous(l) => l,
            WalkLaws::PerStep(v) => &v[j],
        }
    }

    /// Check the declared envelopes against the laws' analytic moments.
    pub fn validate_envelopes(&self) -> Result<()> {
        let (c, gamma) = self.mean_envelope;
        for j in 0..self.m {
            let law = self.law(j);
            let bound = c * (gamma * (j as f64 - self.m as f64)).exp();
            if law.mean().abs() > bound + 1e-12 {
                return Err(Error::invalid(format!(
                    "mean envelope violated at j={j}: |{}| > {bound}",
                    law.mean()
                )));
            }
            let second = law.variance() + law.mean() * law.mean();
            if (second - self.variance_target).abs() > bound + 1e-9 {
                return Err(Error::invalid(format!(
                    "variance envelope violated at j={j}: |{second} - {}| > {bound}",
                    self.variance_target
                )));
            }
        }
        Ok(())
    }

    /// Tilt every increment law by `lambda`.
    pub fn exponential_tilt(&self, lambda: f64) -> Result<WalkSpec> {
        let (lambda_star, _) = self.sub_gaussian;
        if lambda.abs() > lambda_star {
            return Err(Error::invalid(format!(
                "|lambda| = {} exceeds the declared lambda_star = {lambda_star}",
                lambda.abs()
            )));
        }
        let laws = match &self.laws {
            WalkLaws::Homogeneous(l) => WalkLaws::Homogeneous(l.tilt(lambda)?),
            WalkLaws::PerStep(v) => WalkLaws::PerStep(
                v.iter().map(|l| l.tilt(lambda)).collect::<Result<Vec<_>>>()?,
            ),
        };
        let mut out = self.clone();
        out.laws = laws;
        Ok(out)
    }
}

/// One sample path `Sigma_0 .. Sigma_m`.
pub fn simulate_walk(spec: &WalkSpec, rng: &mut CounterRng) -> Vec<f64> {
    let mut path = Vec::with_capacity(spec.m + 1);
    let mut acc = 0.0;
    path.push(0.0);
    for j in 0..spec.m {
        acc += spec.law(j).sample(rng);
        path.push(acc);
    }
    path
}

// ---------------------------------------------------------------------------
// Barrier queries
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QueryKind {
    OneSidedUp,
    OneSidedDown,
    Corridor,
}

/// Barrier event description over a walk of horizon `m`.
///
/// With `c(j) = (j ^ (m-j))` and exponents `(2/5, 3/5)`:
///   one-sided-up:   `-a + Sigma_j <= c(j)^{2/5}` for all `j in [ell, m-ell]`
///   one-sided-down: `-a + Sigma_j <= -c(j)^{2/5}` for all `j in [ell, m-ell]`
///   corridor:       `Sigma_j in [-c(j)^{3/5}, -c(j)^{2/5}]` on the same range
/// plus the endpoint condition `Sigma_{m-1} in window - t`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BarrierQuery {
    pub kind: QueryKind,
    /// `a` (or `h`) >= 0.
    pub offset: f64,
    /// Endpoint shift `t >= 0`.
    pub t_offset: f64,
    pub ell: usize,
    /// Base endpoint window (before the `t` shift), e.g. `(-1, 0)`.
    pub window: (f64, f64),
    pub exponent_up: f64,
    pub exponent_low: f64,
}

impl BarrierQuery {
    pub fn new(kind: QueryKind, offset: f64, t_offset: f64, ell: usize) -> Result<BarrierQuery> {
        if offset < 0.0 || t_offset < 0.0 {
            return Err(Error::invalid("barrier offsets must be nonnegative"));
        }
        if ell < 1 {
            return Err(Error::invalid("ell must be >= 1"));
        }
        Ok(BarrierQuery {
            kind,
            offset,
            t_offset,
            ell,
            window: (-1.0, 0.0),
            exponent_up: 0.4,
            exponent_low: 0.6,
        })
    }

    #[inline]
    fn curve(&self, j: usize, m: usize, exponent: f64) -> f64 {
        (j.min(m - j) as f64).powf(exponent)
    }

    /// Constraint check at index `j` (1-based partial sums, `sigma = Sigma_j`).
    #[inline]
    fn admits(&self, j: usize, m: usize, sigma: f64) -> bool {
        if j < self.ell || j > m - self.ell {
            return true;
        }
        match self.kind {
            QueryKind::OneSidedUp => sigma - self.offset <= self.curve(j, m, self.exponent_up),
            QueryKind::OneSidedDown => {
                sigma - self.offset <= -self.curve(j, m, self.exponent_up)
            }
            QueryKind::Corridor => {
                sigma >= -self.curve(j, m, self.exponent_low)
                    && sigma <= -self.curve(j, m, self.exponent_up)
            }
        }
    }

    fn endpoint_ok(&self, sigma_m1: f64) -> bool {
        sigma_m1 >= self.window.0 - self.t_offset && sigma_m1 <= self.window.1 - self.t_offset
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BallotEstimate {
    pub estimate: f64,
    pub stderr: f64,
    pub trials: usize,
    pub hits: u64,
    /// One-sided 95% upper bound when no hits were observed (rule of three).
    pub zero_hit_upper_bound: Option<f64>,
}

/// Plain Monte Carlo estimate of a barrier event probability.
pub fn barrier_probability(
    spec: &WalkSpec,
    query: &BarrierQuery,
    trials: usize,
    seed: u128,
) -> Result<BallotEstimate> {
    if trials < 10_000 {
        return Err(Error::InsufficientSamples {
            needed: 10_000,
            got: trials,
        });
    }
    if query.window.1 <= query.window.0 {
        return Ok(BallotEstimate {
            estimate: 0.0,
            stderr: 0.0,
            trials,
            hits: 0,
            zero_hit_upper_bound: Some(3.0 / trials as f64),
        });
    }
    let root = CounterRng::root(seed);
    let chunk = 1 << 14;
    let nchunks = trials.div_ceil(chunk);
    let hits: u64 = (0..nchunks)
        .into_par_iter()
        .map(|ci| {
            let lo = ci * chunk;
            let hi = ((ci + 1) * chunk).min(trials);
            let mut local = 0u64;
            for trial in lo..hi {
                let mut rng = root.substream(&[stream::WALK, trial as u64]);
                let mut sigma = 0.0;
                let mut ok = true;
                let mut endpoint = f64::NAN;
                for j in 1..=spec.m {
                    sigma += spec.law(j - 1).sample(&mut rng);
                    if j == spec.m - 1 {
                        endpoint = sigma;
                    }
                    if !query.admits(j, spec.m, sigma) {
                        ok = false;
                        break;
                    }
                }
                if ok && query.endpoint_ok(endpoint) {
                    local += 1;
                }
            }
            local
        })
        .sum();
    let p = hits as f64 / trials as f64;
    Ok(BallotEstimate {
        estimate: p,
        stderr: stats::binomial_stderr(p, trials),
        trials,
        hits,
        zero_hit_upper_bound: if hits == 0 {
            Some(3.0 / trials as f64)
        } else {
            None
        },
    })
}

// ---------------------------------------------------------------------------
// Skorokhod embedding
// ---------------------------------------------------------------------------

/// Zero-mean target laws for the embedding.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum TargetLaw {
    Gaussian { sd: f64 },
    /// Uniform on {-a, +a}.
    TwoPoint { a: f64 },
    Tabulated(TabulatedLaw),
}

impl TargetLaw {
    pub fn variance(&self) -> f64 {
        match self {
            TargetLaw::Gaussian { sd } => sd * sd,
            TargetLaw::TwoPoint { a } => a * a,
            TargetLaw::Tabulated(t) => t.variance,
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            TargetLaw::Gaussian { .. } => 0.0,
            TargetLaw::TwoPoint { .. } => 0.0,
            TargetLaw::Tabulated(t) => t.mean,
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            TargetLaw::Gaussian { sd } => stats::normal_cdf(x / sd),
            TargetLaw::TwoPoint { a } => {
                if x < -a {
                    0.0
                } else if x < *a {
                    0.5
                } else {
                    1.0
                }
            }
            TargetLaw::Tabulated(t) => {
                if x <= t.lo {
                    0.0
                } else if x >= t.hi {
                    1.0
                } else {
                    let n = t.cdf.len();
                    let h = (t.hi - t.lo) / (n - 1) as f64;
                    let pos = (x - t.lo) / h;
                    let i = (pos.floor() as usize).min(n - 2);
                    let frac = pos - i as f64;
                    t.cdf[i] * (1.0 - frac) + t.cdf[i + 1] * frac
                }
            }
        }
    }

    /// Sample the Hall pair `(U, V)` with `U <= 0 <= V` from the joint density
    /// proportional to `(v - u) mu(du) mu(dv)` on `{u < 0 < v}`.
    fn sample_hall_pair(&self, rng: &mut CounterRng) -> (f64, f64) {
        match self {
            TargetLaw::Gaussian { sd } => {
                // Symmetric: branches have weight 1/2 each. Size-biased
                // half-normal is Rayleigh; conditional half is |N|.
                let size_biased = sd * (2.0 * rng.exponential()).sqrt();
                let plain = sd * rng.standard_normal().abs();
                if rng.uniform() < 0.5 {
                    (-plain, size_biased)
                } else {
                    (-size_biased, plain)
                }
            }
            TargetLaw::TwoPoint { a } => (-a, *a),
            TargetLaw::Tabulated(t) => {
                // Split at zero; grids for the conditional and size-biased parts.
                let n = t.pdf.len();
                let h = (t.hi - t.lo) / (n - 1) as f64;
                let xs: Vec<f64> = (0..n).map(|i| t.lo + i as f64 * h).collect();
                let pos_mass: f64 = xs
                    .iter()
                    .zip(&t.pdf)
                    .filter(|(x, _)| **x > 0.0)
                    .map(|(_, p)| p * h)
                    .sum();
                let neg_mass: f64 = xs
                    .iter()
                    .zip(&t.pdf)
                    .filter(|(x, _)| **x < 0.0)
                    .map(|(_, p)| p * h)
                    .sum();
                let w_a = neg_mass / (neg_mass + pos_mass);
                let pick = |rng: &mut CounterRng, positive: bool, size_biased: bool| -> f64 {
                    let weights: Vec<f64> = xs
                        .iter()
                        .zip(&t.pdf)
                        .map(|(&x, &p)| {
                            if (positive && x > 0.0) || (!positive && x < 0.0) {
                                if size_biased {
                                    p * x.abs()
                                } else {
                                    p
                                }
                            } else {
                                0.0
                            }
                        })
                        .collect();
                    let total: f64 = weights.iter().sum();
                    let mut u = rng.uniform() * total;
                    for (i, w) in weights.iter().enumerate() {
                        if u < *w {
                            return xs[i];
                        }
                        u -= w;
                    }
                    xs[n - 1]
                };
                if rng.uniform() < w_a {
                    let v = pick(rng, true, true);
                    let u = pick(rng, false, false);
                    (u, v)
                } else {
                    let u = pick(rng, false, true);
                    let v = pick(rng, true, false);
                    (u, v)
                }
            }
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SkorokhodDraw {
    pub tau: f64,
    pub w_tau: f64,
    pub sup_abs_w: f64,
    pub steps: usize,
}

/// CDF of the exit time of standard Brownian motion from [-1, 1].
pub fn exit_time_cdf(t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if t < 0.35 {
        // Reflection series 4 [ Phi-bar(1/sqrt t) - Phi-bar(3/sqrt t) + ... ].
        let s = t.sqrt();
        let mut acc = 0.0;
        let mut sign = 1.0;
        let mut k = 0;
        loop {
            let arg = (2 * k + 1) as f64 / s;
            let term = 0.5 * stats::erfc(arg / std::f64::consts::SQRT_2);
            acc += sign * term;
            if term < 1e-18 || k > 40 {
                break;
            }
            sign = -sign;
            k += 1;
        }
        4.0 * acc
    } else {
        // Spectral series 1 - (4/pi) sum (-1)^k/(2k+1) exp(-(2k+1)^2 pi^2 t / 8).
        let mut acc = 0.0;
        let mut k = 0u32;
        loop {
            let q = (2 * k + 1) as f64;
            let term = (if k % 2 == 0 { 1.0 } else { -1.0 }) / q
                * (-q * q * std::f64::consts::PI.powi(2) * t / 8.0).exp();
            acc += term;
            if term.abs() < 1e-18 || k > 60 {
                break;
            }
            k += 1;
        }
        1.0 - 4.0 / std::f64::consts::PI * acc
    }
}

fn exit_time_pdf(t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if t < 0.35 {
        let mut acc = 0.0;
        let mut sign = 1.0;
        let mut k = 0;
        loop {
            let a = (2 * k + 1) as f64;
            let term = a / (t * t.sqrt()) * stats::normal_pdf(a / t.sqrt());
            acc += sign * term;
            if term < 1e-18 || k > 40 {
                break;
            }
            sign = -sign;
            k += 1;
        }
        2.0 * acc
    } else {
        let mut acc = 0.0;
        let mut k = 0u32;
        loop {
            let q = (2 * k + 1) as f64;
            let term = (if k % 2 == 0 { 1.0 } else { -1.0 })
                * q
                * (-q * q * std::f64::consts::PI.powi(2) * t / 8.0).exp();
            acc += term;
            if term.abs() < 1e-18 || k > 60 {
                break;
            }
            k += 1;
        }
        std::f64::consts::PI / 2.0 * acc
    }
}

/// Inverse-CDF sample of the unit-interval exit time.
pub fn sample_exit_time(rng: &mut CounterRng) -> f64 {
    let u = rng.uniform();
    // Initial guess from the asymptotic inversions.
    let mut t = if u < 0.2 {
        let q = stats::normal_quantile(1.0 - (u / 4.0).clamp(1e-300, 0.25));
        1.0 / (q * q)
    } else {
        let arg = (std::f64::consts::PI * (1.0 - u) / 4.0).max(1e-300);
        (-(8.0 / std::f64::consts::PI.powi(2)) * arg.ln()).max(0.36)
    };
    for _ in 0..60 {
        let f = exit_time_cdf(t) - u;
        let d = exit_time_pdf(t).max(1e-300);
        let step = f / d;
        let next = (t - step).max(t * 0.25);
        if (next - t).abs() <= 1e-13 * t {
            return next;
        }
        t = next;
    }
    t
}

/// Randomized two-point Skorokhod embedding.
///
/// Draws the Hall pair `(U, V)`, then runs Brownian motion by exact symmetric
/// interval-exit steps until it hits `U` or `V`. Per-step maxima toward both
/// sides are sampled from their exact conditional laws, so `sup |W|` carries
/// no discretization error.
pub fn skorokhod_embed(target: &TargetLaw, rng: &mut CounterRng) -> Result<SkorokhodDraw> {
    if target.mean().abs() > 1e-8 * (1.0 + target.variance().sqrt()) {
        return Err(Error::invalid(format!(
            "skorokhod_embed needs a zero-mean target (mean = {:.3e})",
            target.mean()
        )));
    }
    let (u_low, v_high) = target.sample_hall_pair(rng);
    let mut w = 0.0f64;
    let mut tau = 0.0f64;
    let mut sup = 0.0f64;
    let mut steps = 0usize;
    if u_low == 0.0 && v_high == 0.0 {
        return Ok(SkorokhodDraw {
            tau: 0.0,
            w_tau: 0.0,
            sup_abs_w: 0.0,
            steps: 0,
        });
    }
    loop {
        let d_low = w - u_low;
        let d_high = v_high - w;
        if d_low <= 0.0 || d_high <= 0.0 {
            break;
        }
        let h = d_low.min(d_high);
        steps += 1;
        if steps > 100_000 {
            return Err(Error::invalid("interval-exit walk failed to terminate"));
        }
        tau += h * h * sample_exit_time(rng);
        let up = rng.uniform() < 0.5;
        // Conditional maximum toward the non-exited side:
        // P(M >= a | exit other side) = (h - a)/(h + a), so a = u h / (2 - u).
        let u = rng.uniform();
        let back = u * h / (2.0 - u);
        if up {
            sup = sup.max((w + h).abs()).max((w - back).abs());
            w = if h == d_high { v_high } else { w + h };
        } else {
            sup = sup.max((w - h).abs()).max((w + back).abs());
            w = if h == d_low { u_low } else { w - h };
        }
    }
    Ok(SkorokhodDraw {
        tau,
        w_tau: w,
        sup_abs_w: sup,
        steps,
    })
}

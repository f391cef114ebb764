//! Interaction potentials with certified uniform-convexity bounds.
//!
//! Admissible potentials are even, with `c_minus <= V''(x) <= c_plus` for
//! certified constants `0 < c_minus <= c_plus` and Lipschitz `V''`.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

pub const POTENTIAL_ID_QUADRATIC: u32 = 0;
pub const POTENTIAL_ID_COSINE: u32 = 1;
pub const POTENTIAL_ID_USER_TABLE: u32 = 2;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum Potential {
    /// `V(x) = x^2 / 2`.
    Quadratic,
    /// `V(x) = x^2/2 + kappa (1 - cos x)`, requires `kappa < 1`.
    CosinePerturbed { kappa: f64 },
    /// Natural cubic spline through `(x, V)` knots, quadratic continuation
    /// outside the knot range. Knots must be symmetric about 0.
    UserTable(Spline),
}

impl Potential {
    pub fn quadratic() -> Potential {
        Potential::Quadratic
    }

    pub fn cosine_perturbed(kappa: f64) -> Result<Potential> {
        if !(kappa >= 0.0) || !kappa.is_finite() {
            return Err(Error::invalid(format!("kappa must be finite >= 0, got {kappa}")));
        }
        if kappa >= 1.0 {
            return Err(Error::invalid(format!(
                "cosine-perturbed potential with kappa = {kappa} loses uniform convexity (needs kappa < 1)"
            )));
        }
        Ok(Potential::CosinePerturbed { kappa })
    }

    pub fn user_table(xs: Vec<f64>, vs: Vec<f64>) -> Result<Potential> {
        Ok(Potential::UserTable(Spline::fit(xs, vs)?))
    }

    /// Value, first and second derivative at `x`.
    #[inline]
    pub fn evaluate(&self, x: f64) -> (f64, f64, f64) {
        match self {
            Potential::Quadratic => (0.5 * x * x, x, 1.0),
            Potential::CosinePerturbed { kappa } => {
                let (s, c) = x.sin_cos();
                (0.5 * x * x + kappa * (1.0 - c), x + kappa * s, 1.0 + kappa * c)
            }
            Potential::UserTable(sp) => sp.evaluate(x),
        }
    }

    #[inline]
    pub fn v(&self, x: f64) -> f64 {
        self.evaluate(x).0
    }

    #[inline]
    pub fn dv(&self, x: f64) -> f64 {
        self.evaluate(x).1
    }

    /// Certified `(c_minus, c_plus)` with `c_minus <= V'' <= c_plus`.
    pub fn convexity_bounds(&self) -> (f64, f64) {
        match self {
            Potential::Quadratic => (1.0, 1.0),
            Potential::CosinePerturbed { kappa } => (1.0 - kappa, 1.0 + kappa),
            Potential::UserTable(sp) => (sp.c_minus, sp.c_plus),
        }
    }

    /// Certified Lipschitz constant of `V''`.
    pub fn lipschitz_v2(&self) -> f64 {
        match self {
            Potential::Quadratic => 0.0,
            Potential::CosinePerturbed { kappa } => *kappa,
            Potential::UserTable(sp) => sp.lipschitz_v2,
        }
    }

    pub fn id(&self) -> u32 {
        match self {
            Potential::Quadratic => POTENTIAL_ID_QUADRATIC,
            Potential::CosinePerturbed { .. } => POTENTIAL_ID_COSINE,
            Potential::UserTable(_) => POTENTIAL_ID_USER_TABLE,
        }
    }

    /// Snapshot parameter block.
    pub fn params(&self) -> Vec<f64> {
        match self {
            Potential::Quadratic => vec![],
            Potential::CosinePerturbed { kappa } => vec![*kappa],
            Potential::UserTable(sp) => {
                let mut p = Vec::with_capacity(2 * sp.xs.len());
                p.extend_from_slice(&sp.xs);
                p.extend_from_slice(&sp.vs);
                p
            }
        }
    }
}

/// Natural cubic spline with quadratic continuation beyond the knots.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Spline {
    xs: Vec<f64>,
    vs: Vec<f64>,
    /// Second derivatives at the knots.
    m2: Vec<f64>,
    pub c_minus: f64,
    pub c_plus: f64,
    pub lipschitz_v2: f64,
}

impl Spline {
    fn fit(xs: Vec<f64>, vs: Vec<f64>) -> Result<Spline> {
        let n = xs.len();
        if n < 4 {
            return Err(Error::invalid("user-table potential needs at least 4 knots"));
        }
        if vs.len() != n {
            return Err(Error::invalid("knot xs and vs lengths differ"));
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("knot xs must be strictly increasing"));
        }
        // Evenness: knots symmetric about 0 with matching values.
        for i in 0..n {
            let j = n - 1 - i;
            if (xs[i] + xs[j]).abs() > 1e-9 || (vs[i] - vs[j]).abs() > 1e-9 {
                return Err(Error::invalid(
                    "user-table potential must be even: knots must be symmetric about 0",
                ));
            }
        }

        // Cubic spline second derivatives with parabolic-runout ends
        // (M_0 = M_1, M_{n-1} = M_{n-2}): a natural spline would clamp the
        // end curvature to zero and void any convexity certificate there.
        let mut a = vec![0.0; n];
        let mut b = vec![0.0; n];
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        b[0] = 1.0;
        c[0] = -1.0;
        a[n - 1] = -1.0;
        b[n - 1] = 1.0;
        for i in 1..n - 1 {
            let h0 = xs[i] - xs[i - 1];
            let h1 = xs[i + 1] - xs[i];
            a[i] = h0 / 6.0;
            b[i] = (h0 + h1) / 3.0;
            c[i] = h1 / 6.0;
            d[i] = (vs[i + 1] - vs[i]) / h1 - (vs[i] - vs[i - 1]) / h0;
        }
        // Thomas algorithm.
        let mut cp = vec![0.0; n];
        let mut dp = vec![0.0; n];
        cp[0] = c[0] / b[0];
        dp[0] = d[0] / b[0];
        for i in 1..n {
            let m = b[i] - a[i] * cp[i - 1];
            cp[i] = c[i] / m;
            dp[i] = (d[i] - a[i] * dp[i - 1]) / m;
        }
        let mut m2 = vec![0.0; n];
        m2[n - 1] = dp[n - 1];
        for i in (0..n - 1).rev() {
            m2[i] = dp[i] - cp[i] * m2[i + 1];
        }

        // Convexity certificate on the knot grid: V'' is piecewise linear in
        // each interval, so its extrema over the knot range sit at knots.
        let mut c_minus = f64::INFINITY;
        let mut c_plus = f64::NEG_INFINITY;
        for &v2 in &m2 {
            c_minus = c_minus.min(v2);
            c_plus = c_plus.max(v2);
        }
        if !(c_minus > 0.0) {
            return Err(Error::invalid(format!(
                "user-table potential is not uniformly convex on the knot grid (min V'' = {c_minus:.3e})"
            )));
        }
        let mut lip = 0.0f64;
        for i in 0..n - 1 {
            lip = lip.max(((m2[i + 1] - m2[i]) / (xs[i + 1] - xs[i])).abs());
        }
        Ok(Spline {
            xs,
            vs,
            m2,
            c_minus,
            c_plus,
            lipschitz_v2: lip,
        })
    }

    fn evaluate(&self, x: f64) -> (f64, f64, f64) {
        let n = self.xs.len();
        if x < self.xs[0] {
            // Quadratic continuation with the end knot's slope and curvature.
            let (v0, d1, d2) = self.knot_state(0);
            let t = x - self.xs[0];
            return (v0 + d1 * t + 0.5 * d2 * t * t, d1 + d2 * t, d2);
        }
        if x > self.xs[n - 1] {
            let (v0, d1, d2) = self.knot_state(n - 1);
            let t = x - self.xs[n - 1];
            return (v0 + d1 * t + 0.5 * d2 * t * t, d1 + d2 * t, d2);
        }
        let i = match self
            .xs
            .binary_search_by(|p| p.partial_cmp(&x).unwrap())
        {
            Ok(i) => i.min(n - 2),
            Err(i) => i - 1,
        };
        let h = self.xs[i + 1] - self.xs[i];
        let a = (self.xs[i + 1] - x) / h;
        let b = (x - self.xs[i]) / h;
        let v = a * self.vs[i]
            + b * self.vs[i + 1]
            + ((a * a * a - a) * self.m2[i] + (b * b * b - b) * self.m2[i + 1]) * h * h / 6.0;
        let d1 = (self.vs[i + 1] - self.vs[i]) / h
            - (3.0 * a * a - 1.0) / 6.0 * h * self.m2[i]
            + (3.0 * b * b - 1.0) / 6.0 * h * self.m2[i + 1];
        let d2 = a * self.m2[i] + b * self.m2[i + 1];
        (v, d1, d2)
    }

    fn knot_state(&self, i: usize) -> (f64, f64, f64) {
        let x = self.xs[i];
        // One-sided evaluation from the adjacent interval.
        let j = if i == 0 { 0 } else { i - 1 };
        let h = self.xs[j + 1] - self.xs[j];
        let a = (self.xs[j + 1] - x) / h;
        let b = (x - self.xs[j]) / h;
        let v = a * self.vs[j]
            + b * self.vs[j + 1]
            + ((a * a * a - a) * self.m2[j] + (b * b * b - b) * self.m2[j + 1]) * h * h / 6.0;
        let d1 = (self.vs[j + 1] - self.vs[j]) / h
            - (3.0 * a * a - 1.0) / 6.0 * h * self.m2[j]
            + (3.0 * b * b - 1.0) / 6.0 * h * self.m2[j + 1];
        let d2 = a * self.m2[j] + b * self.m2[j + 1];
        (v, d1, d2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_values() {
        let p = Potential::quadratic();
        let (v, d1, d2) = p.evaluate(3.0);
        assert_eq!((v, d1, d2), (4.5, 3.0, 1.0));
        assert_eq!(p.convexity_bounds(), (1.0, 1.0));
    }

    #[test]
    fn cosine_values_and_bounds() {
        let p = Potential::cosine_perturbed(0.3).unwrap();
        let (v, d1, d2) = p.evaluate(0.0);
        assert!(v.abs() < 1e-15 && d1.abs() < 1e-15);
        assert!((d2 - 1.3).abs() < 1e-15);
        assert_eq!(p.convexity_bounds(), (0.7, 1.3));
        assert!(Potential::cosine_perturbed(1.5).is_err());
        assert!(Potential::cosine_perturbed(1.0).is_err());
    }

    #[test]
    fn cosine_d2_range_on_grid() {
        let p = Potential::cosine_perturbed(0.3).unwrap();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..=20_000 {
            let x = -50.0 + 100.0 * i as f64 / 20_000.0;
            let d2 = p.evaluate(x).2;
            lo = lo.min(d2);
            hi = hi.max(d2);
        }
        assert!(lo >= 0.7 - 1e-12 && hi <= 1.3 + 1e-12, "({lo}, {hi})");
    }

    #[test]
    fn evenness_and_finite_differences() {
        let pots = [
            Potential::quadratic(),
            Potential::cosine_perturbed(0.45).unwrap(),
        ];
        let mut rng = crate::rng::CounterRng::root(11).substream(&[1]);
        for p in &pots {
            for _ in 0..1000 {
                let x = rng.uniform_in(-20.0, 20.0);
                let (v, d1, d2) = p.evaluate(x);
                let (vm, d1m, d2m) = p.evaluate(-x);
                assert!((v - vm).abs() <= 1e-12 * (1.0 + v.abs()));
                assert!((d1 + d1m).abs() <= 1e-12 * (1.0 + d1.abs()));
                assert!((d2 - d2m).abs() <= 1e-12 * (1.0 + d2.abs()));

                let h = 1e-4;
                let fd1 = (p.v(x + h) - p.v(x - h)) / (2.0 * h);
                let fd2 = (p.v(x + h) - 2.0 * v + p.v(x - h)) / (h * h);
                assert!((fd1 - d1).abs() <= 1e-6 * (1.0 + d1.abs()), "d1 at {x}");
                assert!((fd2 - d2).abs() <= 1e-4 * (1.0 + d2.abs()), "d2 at {x}");
            }
        }
    }

    #[test]
    fn user_table_tracks_quadratic() {
        let xs: Vec<f64> = (-40..=40).map(|i| i as f64 * 0.25).collect();
        let vs: Vec<f64> = xs.iter().map(|x| 0.5 * x * x).collect();
        let p = Potential::user_table(xs, vs).unwrap();
        let (lo, hi) = p.convexity_bounds();
        assert!(lo > 0.9 && hi < 1.1, "({lo},{hi})");
        for &x in &[-9.7, -2.0, 0.3, 5.5] {
            let (v, d1, d2) = p.evaluate(x);
            assert!((v - 0.5 * x * x).abs() < 1e-3, "V({x}) = {v}");
            assert!((d1 - x).abs() < 1e-2);
            assert!((d2 - 1.0).abs() < 0.1);
        }
        // Quadratic continuation far outside the knots stays convex.
        let (_, _, d2) = p.evaluate(100.0);
        assert!(d2 > 0.5);
    }

    #[test]
    fn user_table_rejects_bad_tables() {
        // Asymmetric.
        let xs = vec![-2.0, -1.0, 0.0, 1.0, 2.5];
        let vs = vec![2.0, 0.5, 0.0, 0.5, 3.0];
        assert!(Potential::user_table(xs, vs).is_err());
        // Concave region.
        let xs: Vec<f64> = (-10..=10).map(|i| i as f64 * 0.5).collect();
        let vs: Vec<f64> = xs.iter().map(|x| -(0.5 * x * x)).collect();
        assert!(Potential::user_table(xs, vs).is_err());
    }
}

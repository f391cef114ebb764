//! Lattice boxes, their outer boundaries, and field storage.
//!
//! A box of radius `R` centered at `c` has interior `(c1-R, c1+R) x (c2-R, c2+R)`
//! intersected with `Z^2` (an open box, `(2R-1)^2` sites) and outer boundary equal
//! to the sites outside the interior that share a lattice edge with it. For a box
//! this is the surrounding square ring minus its four corners.
//!
//! Site enumeration is row-major over `(y, x)` (y outer, x inner) and skips the
//! four corners of the closed square, so interior and boundary interleave in one
//! canonical sweep order. All serialization and kernel storage uses this order.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// A lattice site.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub struct Site {
    pub x: i32,
    pub y: i32,
}

impl Site {
    pub const fn new(x: i32, y: i32) -> Self {
        Site { x, y }
    }

    /// The four lattice neighbors.
    pub fn neighbors(self) -> [Site; 4] {
        [
            Site::new(self.x + 1, self.y),
            Site::new(self.x - 1, self.y),
            Site::new(self.x, self.y + 1),
            Site::new(self.x, self.y - 1),
        ]
    }

    pub fn linf_dist(self, other: Site) -> i32 {
        (self.x - other.x).abs().max((self.y - other.y).abs())
    }

    pub fn l2_dist(self, other: Site) -> f64 {
        let dx = (self.x - other.x) as f64;
        let dy = (self.y - other.y) as f64;
        dx.hypot(dy)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum DomainKind {
    Box,
    Subbox,
}

/// A lattice box domain: interior plus outer boundary.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct Domain {
    pub kind: DomainKind,
    pub center: Site,
    pub radius: i32,
}

/// Classification of a site relative to a domain.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum SiteClass {
    Interior,
    Boundary,
    Outside,
}

impl Domain {
    /// `make_box(N, center)`: the box `(-N,N)^2 ∩ Z^2` shifted to `center`.
    pub fn make_box(radius: i32, center: Site) -> Result<Domain> {
        if radius < 1 {
            return Err(Error::invalid(format!(
                "box radius must be >= 1, got {radius}"
            )));
        }
        Ok(Domain {
            kind: DomainKind::Box,
            center,
            radius,
        })
    }

    /// `subbox(self, x, r)`: the box of radius `r` at `x`, aliasing this domain's
    /// coordinates. Errors if `Q_r(x)` plus its outer boundary is not contained in
    /// this domain's interior plus boundary.
    pub fn subbox(&self, x: Site, r: i32) -> Result<Domain> {
        if r < 1 {
            return Err(Error::invalid(format!("subbox radius must be >= 1, got {r}")));
        }
        let sub = Domain {
            kind: DomainKind::Subbox,
            center: x,
            radius: r,
        };
        // Bounding square containment.
        let (pc, pr) = (self.center, self.radius);
        if (x.x - r) < pc.x - pr
            || (x.x + r) > pc.x + pr
            || (x.y - r) < pc.y - pr
            || (x.y + r) > pc.y + pr
        {
            return Err(Error::geometry(format!(
                "subbox Q_{r}(({},{})) exceeds parent Q_{} at ({},{})",
                x.x, x.y, pr, pc.x, pc.y
            )));
        }
        // The parent is missing its four corner sites; the subbox must not need them.
        for &cx in &[pc.x - pr, pc.x + pr] {
            for &cy in &[pc.y - pr, pc.y + pr] {
                let corner = Site::new(cx, cy);
                if sub.classify(corner) != SiteClass::Outside {
                    return Err(Error::geometry(format!(
                        "subbox needs parent corner site ({cx},{cy})"
                    )));
                }
            }
        }
        Ok(sub)
    }

    /// Side length of the closed square, `2R + 1`.
    #[inline]
    fn span(&self) -> i64 {
        2 * self.radius as i64 + 1
    }

    #[inline]
    pub fn interior_count(&self) -> usize {
        let m = 2 * self.radius as usize - 1;
        m * m
    }

    #[inline]
    pub fn boundary_count(&self) -> usize {
        4 * (2 * self.radius as usize - 1)
    }

    /// Interior plus boundary site count.
    #[inline]
    pub fn site_count(&self) -> usize {
        self.interior_count() + self.boundary_count()
    }

    #[inline]
    pub fn classify(&self, s: Site) -> SiteClass {
        let dx = (s.x - self.center.x).abs();
        let dy = (s.y - self.center.y).abs();
        let r = self.radius;
        if dx < r && dy < r {
            SiteClass::Interior
        } else if (dx == r && dy < r) || (dy == r && dx < r) {
            SiteClass::Boundary
        } else {
            SiteClass::Outside
        }
    }

    #[inline]
    pub fn contains(&self, s: Site) -> bool {
        self.classify(s) != SiteClass::Outside
    }

    /// Index of a site in the canonical sweep order over interior ∪ boundary,
    /// or `None` if outside. Row-major over `(y, x)`, corners skipped.
    pub fn site_index(&self, s: Site) -> Option<usize> {
        if self.classify(s) == SiteClass::Outside {
            return None;
        }
        let r = self.radius as i64;
        let u = (s.x - self.center.x) as i64 + r; // 0..=2R
        let v = (s.y - self.center.y) as i64 + r;
        let span = self.span();
        let full = v * span + u;
        // Corners precede (u,v) at linear positions 0, 2R, 2R(2R+1), (2R+1)^2-1.
        let mut skipped = 0i64;
        if full > 0 {
            skipped += 1; // (0,0)
        }
        if full > 2 * r {
            skipped += 1; // (2R, 0)
        }
        if full > 2 * r * span {
            skipped += 1; // (0, 2R)
        }
        Some((full - skipped) as usize)
    }

    /// All sites (interior and boundary) in canonical order.
    pub fn sites(&self) -> impl Iterator<Item = Site> + '_ {
        let r = self.radius;
        let c = self.center;
        (-r..=r).flat_map(move |dy| {
            (-r..=r).filter_map(move |dx| {
                if dx.abs() == r && dy.abs() == r {
                    None
                } else {
                    Some(Site::new(c.x + dx, c.y + dy))
                }
            })
        })
    }

    /// Interior sites in canonical order.
    pub fn interior_sites(&self) -> impl Iterator<Item = Site> + '_ {
        let r = self.radius;
        let c = self.center;
        ((-r + 1)..r)
            .flat_map(move |dy| ((-r + 1)..r).map(move |dx| Site::new(c.x + dx, c.y + dy)))
    }

    /// Outer-boundary sites in canonical order.
    pub fn boundary_sites(&self) -> impl Iterator<Item = Site> + '_ {
        let r = self.radius;
        let c = self.center;
        self.sites().filter(move |s| {
            let dx = (s.x - c.x).abs();
            let dy = (s.y - c.y).abs();
            dx == r || dy == r
        })
    }

    /// Distance from `s` to the outer boundary (in the L-infinity box sense):
    /// the number of unit steps before leaving the interior, plus one.
    pub fn dist_to_boundary(&self, s: Site) -> i32 {
        let dx = (s.x - self.center.x).abs();
        let dy = (s.y - self.center.y).abs();
        self.radius - dx.max(dy)
    }
}

/// A real-valued field on a domain's interior and boundary.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    pub domain: Domain,
    values: Vec<f64>,
}

impl Field {
    /// Constant field.
    pub fn constant(domain: Domain, c: f64) -> Field {
        Field {
            domain,
            values: vec![c; domain.site_count()],
        }
    }

    pub fn zeros(domain: Domain) -> Field {
        Field::constant(domain, 0.0)
    }

    pub fn from_values(domain: Domain, values: Vec<f64>) -> Result<Field> {
        if values.len() != domain.site_count() {
            return Err(Error::invalid(format!(
                "field needs {} values, got {}",
                domain.site_count(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("field values must be finite"));
        }
        Ok(Field { domain, values })
    }

    /// Build a field from a function of site coordinates.
    pub fn from_fn(domain: Domain, f: impl FnMut(Site) -> f64) -> Field {
        let values = domain.sites().map(f).collect();
        Field { domain, values }
    }

    #[inline]
    pub fn get(&self, s: Site) -> f64 {
        self.values[self.domain.site_index(s).expect("site outside domain")]
    }

    #[inline]
    pub fn try_get(&self, s: Site) -> Option<f64> {
        self.domain.site_index(s).map(|i| self.values[i])
    }

    #[inline]
    pub fn set(&mut self, s: Site, v: f64) {
        let i = self.domain.site_index(s).expect("site outside domain");
        self.values[i] = v;
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Interior values in canonical interior order.
    pub fn interior_values(&self) -> Vec<f64> {
        self.domain
            .interior_sites()
            .map(|s| self.get(s))
            .collect()
    }

    /// Boundary values in canonical boundary order.
    pub fn boundary_values(&self) -> Vec<f64> {
        self.domain
            .boundary_sites()
            .map(|s| self.get(s))
            .collect()
    }

    /// Restriction of this field to a subdomain (aliasing coordinates).
    pub fn restrict(&self, sub: Domain) -> Result<Field> {
        let mut vals = Vec::with_capacity(sub.site_count());
        for s in sub.sites() {
            match self.try_get(s) {
                Some(v) => vals.push(v),
                None => {
                    return Err(Error::geometry(format!(
                        "site ({},{}) of subdomain not in parent field",
                        s.x, s.y
                    )))
                }
            }
        }
        Ok(Field {
            domain: sub,
            values: vals,
        })
    }
}

/// Max minus min of the field over the given sites.
pub fn oscillation(field: &Field, sites: &[Site]) -> Result<f64> {
    if sites.is_empty() {
        return Err(Error::invalid("oscillation over an empty site set"));
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &s in sites {
        let v = field.try_get(s).ok_or_else(|| {
            Error::geometry(format!("site ({},{}) carries no value", s.x, s.y))
        })?;
        lo = lo.min(v);
        hi = hi.max(v);
    }
    Ok(hi - lo)
}

/// Oscillation over the outer boundary of `Q_r(x)` inside `field`.
pub fn boundary_oscillation(field: &Field, x: Site, r: i32) -> Result<f64> {
    let sub = field.domain.subbox(x, r)?;
    let sites: Vec<Site> = sub.boundary_sites().collect();
    oscillation(field, &sites)
}

/// Round a positive real to the nearest integer, ties up.
pub fn round_ties_up(x: f64) -> i32 {
    (x + 0.5).floor() as i32
}

//! Shared oracle machinery for integration tests: dense linear algebra on
//! small boxes, absorbing-chain enumeration, and slow-path reference
//! implementations kept independent of the fast production code paths.

#![allow(dead_code)]

use glx_core::lattice::{Domain, Field, Site, SiteClass};

/// Dense solve of `A x = b` by Gaussian elimination with partial pivoting.
pub fn dense_solve(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = a.iter().cloned().collect();
    let mut x = b.to_vec();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| m[i][col].abs().partial_cmp(&m[j][col].abs()).unwrap())
            .unwrap();
        m.swap(col, piv);
        x.swap(col, piv);
        let p = m[col][col];
        for j in col..n {
            m[col][j] /= p;
        }
        x[col] /= p;
        for i in 0..n {
            if i != col && m[i][col] != 0.0 {
                let f = m[i][col];
                for j in col..n {
                    m[i][j] -= f * m[col][j];
                }
                x[i] -= f * x[col];
            }
        }
    }
    x
}

/// Interior sites of a domain in canonical order with an index lookup.
pub struct InteriorIndex {
    pub sites: Vec<Site>,
    pub domain: Domain,
}

impl InteriorIndex {
    pub fn new(domain: Domain) -> InteriorIndex {
        InteriorIndex {
            sites: domain.interior_sites().collect(),
            domain,
        }
    }

    pub fn index(&self, s: Site) -> Option<usize> {
        if self.domain.classify(s) != SiteClass::Interior {
            return None;
        }
        self.sites.iter().position(|&t| t == s)
    }

    /// Dense `4I - A` with Dirichlet boundary.
    pub fn neg_lap5(&self) -> Vec<Vec<f64>> {
        let n = self.sites.len();
        let mut m = vec![vec![0.0; n]; n];
        for (i, &s) in self.sites.iter().enumerate() {
            m[i][i] = 4.0;
            for nb in s.neighbors() {
                if let Some(j) = self.index(nb) {
                    m[i][j] = -1.0;
                }
            }
        }
        m
    }
}

/// Dense Dirichlet solve: harmonic extension of boundary data by direct
/// elimination (independent of the spectral solver).
pub fn dense_harmonic_extension(domain: Domain, boundary: &Field) -> Field {
    let idx = InteriorIndex::new(domain);
    let a = idx.neg_lap5();
    let mut b = vec![0.0; idx.sites.len()];
    for (i, &s) in idx.sites.iter().enumerate() {
        for nb in s.neighbors() {
            if domain.classify(nb) == SiteClass::Boundary {
                b[i] += boundary.get(nb);
            }
        }
    }
    let x = dense_solve(&a, &b);
    let mut out = Field::zeros(domain);
    for s in domain.boundary_sites() {
        out.set(s, boundary.get(s));
    }
    for (i, &s) in idx.sites.iter().enumerate() {
        out.set(s, x[i]);
    }
    out
}

/// Exit distribution of simple random walk from `start` by dense absorbing-
/// chain computation: expected visit counts `(I - P)^{-1}` then one last step.
pub fn dense_exit_distribution(r: i32, start: Site) -> Vec<(Site, f64)> {
    let domain = Domain::make_box(r, Site::new(0, 0)).unwrap();
    let idx = InteriorIndex::new(domain);
    let n = idx.sites.len();
    // (I - P) with P = A/4 on the interior.
    let mut m = vec![vec![0.0; n]; n];
    for (i, &s) in idx.sites.iter().enumerate() {
        m[i][i] = 1.0;
        for nb in s.neighbors() {
            if let Some(j) = idx.index(nb) {
                m[i][j] -= 0.25;
            }
        }
    }
    let mut b = vec![0.0; n];
    b[idx.index(start).expect("start interior")] = 1.0;
    // visits^T = b^T (I-P)^{-1}  <=> solve (I-P)^T v = b; the chain is
    // symmetric here so no transpose is needed.
    let visits = dense_solve(&m, &b);
    domain
        .boundary_sites()
        .map(|y| {
            let w: f64 = y
                .neighbors()
                .iter()
                .filter_map(|&z| idx.index(z))
                .map(|j| visits[j] * 0.25)
                .sum();
            (y, w)
        })
        .collect()
}

/// Conjugate gradient for the dense-free five-point system `(4I - A) u = f`
/// on a box interior; an iterative path independent of the DST solver.
pub fn cg_neg_lap5(domain: Domain, f: &[f64], tol: f64) -> Vec<f64> {
    let idx = FastInteriorIndex::new(domain);
    let n = idx.sites.len();
    assert_eq!(f.len(), n);
    let neighbors: Vec<[Option<usize>; 4]> = idx
        .sites
        .iter()
        .map(|s| {
            let nb = s.neighbors();
            [
                idx.index(nb[0]),
                idx.index(nb[1]),
                idx.index(nb[2]),
                idx.index(nb[3]),
            ]
        })
        .collect();
    let apply = |x: &[f64], out: &mut [f64]| {
        for i in 0..n {
            let mut acc = 4.0 * x[i];
            for j in neighbors[i].iter().flatten() {
                acc -= x[*j];
            }
            out[i] = acc;
        }
    };
    let mut x = vec![0.0; n];
    let mut r = f.to_vec();
    let mut p = r.clone();
    let mut ap = vec![0.0; n];
    let mut rs: f64 = r.iter().map(|v| v * v).sum();
    let rs0 = rs.max(1e-300);
    for _ in 0..20 * n {
        apply(&p, &mut ap);
        let denom: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        let alpha = rs / denom;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rs_new: f64 = r.iter().map(|v| v * v).sum();
        if (rs_new / rs0).sqrt() < tol {
            break;
        }
        let beta = rs_new / rs;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
        rs = rs_new;
    }
    x
}

/// Position lookup in canonical interior order is O(n); cache-heavy callers
/// should use a map.
pub struct FastInteriorIndex {
    pub sites: Vec<Site>,
    map: std::collections::HashMap<(i32, i32), usize>,
    pub domain: Domain,
}

impl FastInteriorIndex {
    pub fn new(domain: Domain) -> FastInteriorIndex {
        let sites: Vec<Site> = domain.interior_sites().collect();
        let map = sites
            .iter()
            .enumerate()
            .map(|(i, s)| ((s.x, s.y), i))
            .collect();
        FastInteriorIndex { sites, map, domain }
    }

    pub fn index(&self, s: Site) -> Option<usize> {
        self.map.get(&(s.x, s.y)).copied()
    }
}

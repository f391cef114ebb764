//! Samplers for the Ginzburg-Landau measure with Dirichlet boundary data.
//!
//! The Gibbs density is `exp(-H(phi))` with `H(phi) = sum_edges V(phi(b) - phi(a))`,
//! each undirected edge of the box (interior plus boundary ring) counted once.
//! See the README's normalization notes for how this convention anchors every
//! constant measured by the crate.

mod dgff;
mod heat_bath;
mod langevin;

pub use dgff::{harmonic_extension, sample_dgff_exact};
pub use heat_bath::{heat_bath_sweep, slice_conditional_update};
pub use langevin::{langevin_drift_step, langevin_step, mala_step};

use crate::error::{Error, Result};
use crate::lattice::{Domain, Field};
use crate::potential::Potential;
use crate::rng::{stream, CounterRng};
use crate::stats;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    HeatBath,
    Langevin,
    Mala,
    ExactGaussian,
}

/// Chain configuration. `seed` is the only entropy source.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChainConfig {
    pub algorithm: Algorithm,
    /// Time step for langevin / mala.
    pub step_size: Option<f64>,
    pub burn_in_sweeps: usize,
    pub thinning_sweeps: usize,
    pub samples: usize,
    pub seed: u128,
}

impl ChainConfig {
    pub fn validate(&self, potential: &Potential) -> Result<()> {
        if self.samples < 1 {
            return Err(Error::invalid("samples must be >= 1"));
        }
        if self.thinning_sweeps < 1 {
            return Err(Error::invalid("thinning_sweeps must be >= 1"));
        }
        match self.algorithm {
            Algorithm::Langevin | Algorithm::Mala => {
                let dt = self
                    .step_size
                    .ok_or_else(|| Error::invalid("step_size required for langevin/mala"))?;
                if !(dt > 0.0) {
                    return Err(Error::invalid("step_size must be positive"));
                }
                let (_, c_plus) = potential.convexity_bounds();
                if dt * c_plus * 8.0 >= 1.0 {
                    return Err(Error::invalid(format!(
                        "step_size {dt} violates stability bound step*c_plus*8 < 1 (c_plus = {c_plus})"
                    )));
                }
            }
            _ => {}
        }
        Ok(())
    }
}

/// Per-snapshot diagnostics.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SnapshotDiag {
    pub energy: f64,
    /// MALA acceptance fraction since the previous snapshot (1.0 for exact
    /// samplers and heat bath).
    pub acceptance: f64,
    pub replica: usize,
    pub sweep_index: u64,
}

/// A collection of field snapshots sharing one domain and boundary datum.
#[derive(Clone, Debug)]
pub struct Ensemble {
    pub domain: Domain,
    /// Boundary values in canonical boundary order.
    pub boundary: Vec<f64>,
    pub config: ChainConfig,
    pub snapshots: Vec<Field>,
    pub diagnostics: Vec<SnapshotDiag>,
}

impl Ensemble {
    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    /// Geweke-style stationarity check: compares first and second half means
    /// of the snapshot energies; returns the |z| score.
    pub fn stationarity_z(&self) -> f64 {
        if self.snapshots.len() < 8 {
            return 0.0;
        }
        let e: Vec<f64> = self.diagnostics.iter().map(|d| d.energy).collect();
        let half = e.len() / 2;
        let (a, b) = (&e[..half], &e[half..]);
        let sa = stats::batch_means_stderr(a, 8);
        let sb = stats::batch_means_stderr(b, 8);
        (stats::mean(a) - stats::mean(b)).abs() / (sa * sa + sb * sb).sqrt().max(1e-300)
    }

    pub fn check_stationary(&self, z_max: f64) -> Result<()> {
        let z = self.stationarity_z();
        if z > z_max {
            return Err(Error::NonStationary(format!(
                "first/second half energy z-score {z:.2} exceeds {z_max}"
            )));
        }
        Ok(())
    }
}

/// Energy `H(phi) = sum_edges V(phi(b) - phi(a))` over edges with both ends in
/// the domain (interior or boundary ring).
pub fn energy(field: &Field, potential: &Potential) -> f64 {
    let d = field.domain;
    let mut h = 0.0;
    for s in d.sites() {
        let v = field.get(s);
        for n in [
            crate::lattice::Site::new(s.x + 1, s.y),
            crate::lattice::Site::new(s.x, s.y + 1),
        ] {
            if let Some(w) = field.try_get(n) {
                h += potential.v(w - v);
            }
        }
    }
    h
}

/// Drift `b(x) = sum_{y ~ x} V'(phi(y) - phi(x))`, the negative energy gradient.
pub(crate) fn drift_at(field: &Field, potential: &Potential, s: crate::lattice::Site) -> f64 {
    let v = field.get(s);
    let mut b = 0.0;
    for n in s.neighbors() {
        if let Some(w) = field.try_get(n) {
            b += potential.dv(w - v);
        }
    }
    b
}

/// Run one chain. The `initial` field carries the Dirichlet boundary data on
/// its boundary ring and the starting interior configuration.
pub fn run_chain(
    initial: &Field,
    potential: &Potential,
    config: &ChainConfig,
) -> Result<Ensemble> {
    run_chain_replica(initial, potential, config, 0, None)
}

/// Run `replicas` independent chains with disjoint substreams and merge their
/// snapshots (replica-major order).
pub fn run_replicas(
    initial: &Field,
    potential: &Potential,
    config: &ChainConfig,
    replicas: usize,
) -> Result<Ensemble> {
    use rayon::prelude::*;
    let parts: Vec<Result<Ensemble>> = (0..replicas)
        .into_par_iter()
        .map(|r| run_chain_replica(initial, potential, config, r as u64, None))
        .collect();
    let mut merged: Option<Ensemble> = None;
    for part in parts {
        let part = part?;
        match &mut merged {
            None => merged = Some(part),
            Some(m) => {
                m.snapshots.extend(part.snapshots);
                m.diagnostics.extend(part.diagnostics);
            }
        }
    }
    Ok(merged.expect("replicas >= 1"))
}

/// Chain driver. `resume_from` continues from `(field, sweeps_done, samples_done)`.
pub fn run_chain_replica(
    initial: &Field,
    potential: &Potential,
    config: &ChainConfig,
    replica: u64,
    resume_from: Option<(Field, u64, usize)>,
) -> Result<Ensemble> {
    config.validate(potential)?;
    let root = CounterRng::root(config.seed);
    let mut ensemble = Ensemble {
        domain: initial.domain,
        boundary: initial.boundary_values(),
        config: config.clone(),
        snapshots: Vec::with_capacity(config.samples),
        diagnostics: Vec::with_capacity(config.samples),
    };

    if config.algorithm == Algorithm::ExactGaussian {
        if !matches!(potential, Potential::Quadratic) {
            return Err(Error::invalid(
                "exact-gaussian sampling requires the quadratic potential",
            ));
        }
        let start = resume_from.as_ref().map(|r| r.2).unwrap_or(0);
        for i in start..config.samples {
            let mut rng = root.substream(&[stream::DGFF, replica, i as u64]);
            let f = sample_dgff_exact(initial.domain, initial, &mut rng)?;
            ensemble.diagnostics.push(SnapshotDiag {
                energy: energy(&f, potential),
                acceptance: 1.0,
                replica: replica as usize,
                sweep_index: i as u64,
            });
            ensemble.snapshots.push(f);
        }
        return Ok(ensemble);
    }

    let (mut field, mut sweeps_done, samples_done) = match resume_from {
        Some((f, s, k)) => (f, s, k),
        None => (initial.clone(), 0, 0),
    };
    let mut accepted = 0u64;
    let mut proposed = 0u64;

    let step = |field: &mut Field, sweep: u64| -> Result<bool> {
        match config.algorithm {
            Algorithm::HeatBath => {
                heat_bath_sweep(field, potential, &root, replica, sweep)?;
                Ok(true)
            }
            Algorithm::Langevin => {
                let mut rng = root.substream(&[stream::LANGEVIN, replica, sweep]);
                langevin_step(field, potential, config.step_size.unwrap(), &mut rng)?;
                Ok(true)
            }
            Algorithm::Mala => {
                let mut rng = root.substream(&[stream::MALA, replica, sweep]);
                mala_step(field, potential, config.step_size.unwrap(), &mut rng)
            }
            Algorithm::ExactGaussian => unreachable!(),
        }
    };

    let wrap_abort = |e: Error, taken: usize| match e {
        Error::Instability { x, y, value } => Error::ChainAborted {
            reason: format!("instability: |phi({x},{y})| = {value:.3e}"),
            snapshots_taken: taken,
        },
        other => other,
    };

    // Burn-in (skipped when resuming past it).
    while sweeps_done < config.burn_in_sweeps as u64 {
        step(&mut field, sweeps_done).map_err(|e| wrap_abort(e, ensemble.len()))?;
        sweeps_done += 1;
    }
    for i in samples_done..config.samples {
        for _ in 0..config.thinning_sweeps {
            let acc = step(&mut field, sweeps_done).map_err(|e| wrap_abort(e, ensemble.len()))?;
            proposed += 1;
            if acc {
                accepted += 1;
            }
            sweeps_done += 1;
        }
        ensemble.diagnostics.push(SnapshotDiag {
            energy: energy(&field, potential),
            acceptance: if proposed == 0 {
                1.0
            } else {
                accepted as f64 / proposed as f64
            },
            replica: replica as usize,
            sweep_index: sweeps_done,
        });
        ensemble.snapshots.push(field.clone());
        accepted = 0;
        proposed = 0;
        let _ = i;
    }
    Ok(ensemble)
}

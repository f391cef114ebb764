//! Experiment orchestration: run a validated config, persist artifacts
//! (manifest, data files, snapshots), and resume interrupted sampling runs.

use crate::ballot::{self, BarrierQuery, IncrementLaw, QueryKind, TargetLaw, WalkSpec};
use crate::config::{ExperimentConfig, ExperimentKind};
use crate::error::{Error, Result};
use crate::extremes;
use crate::harmonic::{self, StiffnessMethod};
use crate::lattice::{Domain, Field, Site};
use crate::multiscale::{self, EventParams};
use crate::rng::CounterRng;
use crate::sampler::{self, Algorithm, ChainConfig, Ensemble};
use crate::sha256;
use crate::snapshot::{self, SnapshotHeader};
use crate::stats;
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

pub const CRATE_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Names of the randomness streams, recorded for reproducibility audits.
pub const STREAM_NAMES: &[&str] = &[
    "heat-bath(replica, sweep, site)",
    "langevin(replica, sweep)",
    "mala(replica, sweep)",
    "dgff(replica, sample)",
    "walk(trial)",
    "skorokhod(draw)",
    "bootstrap",
    "analysis",
];

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DataFile {
    pub path: String,
    pub sha256: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReplicaProgress {
    pub replica: usize,
    pub snapshots_done: usize,
    pub sweeps_done: u64,
    pub checkpoint: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub experiment: ExperimentKind,
    pub config: ExperimentConfig,
    pub crate_version: String,
    pub wall_seconds: f64,
    pub stream_names: Vec<String>,
    pub data_files: Vec<DataFile>,
    pub progress: Vec<ReplicaProgress>,
    pub complete: bool,
    #[serde(default)]
    pub recovery_note: Option<String>,
}

/// Write `bytes` to `path` atomically (temp file + rename).
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let tmp = path.with_extension("tmp~");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub struct RunOutcome {
    pub manifest_path: PathBuf,
    pub summary: String,
    /// Present when the run aborted with partial artifacts.
    pub abort: Option<Error>,
}

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    out: PathBuf,
    seed: u128,
    files: Vec<DataFile>,
    progress: Vec<ReplicaProgress>,
}

impl Ctx<'_> {
    fn record(&mut self, rel: &str) -> Result<()> {
        let p = self.out.join(rel);
        let digest = sha256::hex_digest_file(&p)?;
        self.files.retain(|f| f.path != rel);
        self.files.push(DataFile {
            path: rel.to_string(),
            sha256: digest,
        });
        Ok(())
    }

    fn write_json<T: Serialize>(&mut self, rel: &str, value: &T) -> Result<()> {
        let text = serde_json::to_string_pretty(value)
            .map_err(|e| Error::Format(format!("json: {e}")))?;
        atomic_write(&self.out.join(rel), text.as_bytes())?;
        self.record(rel)
    }

    fn write_text(&mut self, rel: &str, text: &str) -> Result<()> {
        atomic_write(&self.out.join(rel), text.as_bytes())?;
        self.record(rel)
    }
}

/// Run a validated experiment config; artifacts land in `out_dir`.
pub fn run_experiment(cfg: &ExperimentConfig, out_dir: &Path) -> Result<RunOutcome> {
    cfg.validate()?;
    let started = Instant::now();
    let mut ctx = Ctx {
        cfg,
        out: out_dir.to_path_buf(),
        seed: cfg.seed_value()?,
        files: Vec::new(),
        progress: Vec::new(),
    };
    fs::create_dir_all(out_dir)?;
    let run = match cfg.experiment {
        ExperimentKind::Cstar => run_cstar(&mut ctx),
        ExperimentKind::Sample => run_sample(&mut ctx, None),
        ExperimentKind::Stiffness => run_stiffness(&mut ctx),
        ExperimentKind::Multiscale => run_multiscale(&mut ctx),
        ExperimentKind::Extremes => run_extremes(&mut ctx),
        ExperimentKind::Tightness => run_tightness(&mut ctx),
        ExperimentKind::Ballot => run_ballot(&mut ctx),
        ExperimentKind::Skorokhod => run_skorokhod(&mut ctx),
    };
    let (summary, abort) = match run {
        Ok(s) => (s, None),
        Err(e @ Error::ChainAborted { .. }) => (
            format!("run aborted with partial artifacts: {e}"),
            Some(e),
        ),
        Err(e) => return Err(e),
    };
    let manifest = Manifest {
        experiment: cfg.experiment,
        config: cfg.clone(),
        crate_version: CRATE_VERSION.into(),
        wall_seconds: started.elapsed().as_secs_f64(),
        stream_names: STREAM_NAMES.iter().map(|s| s.to_string()).collect(),
        data_files: ctx.files.clone(),
        progress: ctx.progress.clone(),
        complete: abort.is_none(),
        recovery_note: abort.as_ref().map(|e| {
            format!("{e}; resume with `glx resume <manifest>` to continue from the last checkpoint")
        }),
    };
    let mpath = out_dir.join("manifest.json");
    atomic_write(
        &mpath,
        serde_json::to_string_pretty(&manifest)
            .map_err(|e| Error::Format(format!("json: {e}")))?
            .as_bytes(),
    )?;
    atomic_write(&out_dir.join("summary.txt"), summary.as_bytes())?;
    Ok(RunOutcome {
        manifest_path: mpath,
        summary,
        abort,
    })
}

/// Resume an interrupted `sample` run from its manifest.
pub fn resume(manifest_path: &Path) -> Result<RunOutcome> {
    let text = fs::read_to_string(manifest_path)?;
    let manifest: Manifest =
        serde_json::from_str(&text).map_err(|e| Error::Format(format!("manifest: {e}")))?;
    let out_dir = manifest_path
        .parent()
        .ok_or_else(|| Error::invalid("manifest has no parent directory"))?;
    // Verify recorded checksums before trusting any artifact.
    for f in &manifest.data_files {
        let path = out_dir.join(&f.path);
        let actual = sha256::hex_digest_file(&path)
            .map_err(|_| Error::Checksum {
                path: f.path.clone(),
                expected: f.sha256.clone(),
                actual: "<missing>".into(),
            })?;
        if actual != f.sha256 {
            return Err(Error::Checksum {
                path: f.path.clone(),
                expected: f.sha256.clone(),
                actual,
            });
        }
    }
    if manifest.complete {
        return Ok(RunOutcome {
            manifest_path: manifest_path.to_path_buf(),
            summary: "run already complete; nothing to do".into(),
            abort: None,
        });
    }
    if manifest.experiment != ExperimentKind::Sample {
        return Err(Error::invalid(
            "resume is supported for sampling runs only",
        ));
    }
    let cfg = manifest.config.clone();
    let started = Instant::now();
    let mut ctx = Ctx {
        cfg: &cfg,
        out: out_dir.to_path_buf(),
        seed: cfg.seed_value()?,
        files: manifest.data_files.clone(),
        progress: manifest.progress.clone(),
    };
    let summary = run_sample(&mut ctx, Some(&manifest))?;
    let new_manifest = Manifest {
        wall_seconds: manifest.wall_seconds + started.elapsed().as_secs_f64(),
        data_files: ctx.files.clone(),
        progress: ctx.progress.clone(),
        complete: true,
        recovery_note: None,
        ..manifest
    };
    atomic_write(
        manifest_path,
        serde_json::to_string_pretty(&new_manifest)
            .map_err(|e| Error::Format(format!("json: {e}")))?
            .as_bytes(),
    )?;
    atomic_write(&out_dir.join("summary.txt"), summary.as_bytes())?;
    Ok(RunOutcome {
        manifest_path: manifest_path.to_path_buf(),
        summary,
        abort: None,
    })
}

fn initial_field(cfg: &ExperimentConfig, n_box: u32) -> Result<Field> {
    let domain = Domain::make_box(n_box as i32, Site::new(0, 0))?;
    let bval = cfg.model.boundary.value_at()?;
    let mut f = Field::constant(domain, bval);
    for s in domain.interior_sites() {
        f.set(s, bval);
    }
    Ok(f)
}

fn build_ensemble(cfg: &ExperimentConfig, n_box: u32) -> Result<Ensemble> {
    let sampler_cfg = cfg
        .sampler
        .as_ref()
        .ok_or_else(|| Error::config("sampler", "required"))?;
    let potential = cfg.model.potential.build()?;
    let chain = sampler_cfg.chain_config(n_box, cfg.seed_value()?)?;
    let init = initial_field(cfg, n_box)?;
    sampler::run_replicas(&init, &potential, &chain, sampler_cfg.replicas)
}

// ---------------------------------------------------------------------------
// Runners
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct CstarReport {
    resolution: i32,
    inner_radius: i32,
    cstar: f64,
    /// `c*(M/2)` and `c*(M/4)` for the Cauchy-in-M diagnostic.
    coarser: Vec<(i32, f64)>,
    cauchy_increments: Vec<f64>,
}

fn run_cstar(ctx: &mut Ctx) -> Result<String> {
    let m = ctx.cfg.analysis.cstar_resolution.unwrap_or(256);
    let c = harmonic::compute_cstar(m)?;
    let mut coarser = Vec::new();
    let mut res = m / 2;
    while res >= 32 && coarser.len() < 2 {
        coarser.push((res, harmonic::compute_cstar(res)?));
        res /= 2;
    }
    let mut cauchy = Vec::new();
    let mut prev = c;
    for &(_, v) in &coarser {
        cauchy.push((prev - v).abs());
        prev = v;
    }
    let report = CstarReport {
        resolution: m,
        inner_radius: crate::lattice::round_ties_up(m as f64 / std::f64::consts::E),
        cstar: c,
        coarser,
        cauchy_increments: cauchy,
    };
    let kernel = harmonic::harmonic_measure_kernel(report.inner_radius)?;
    ctx.write_text("inner_kernel.csv", &harmonic::kernel_csv(&kernel))?;
    ctx.write_json("cstar.json", &report)?;
    Ok(format!(
        "c*({m}) = {c:.6} (1/(2 pi) = {:.6})",
        1.0 / std::f64::consts::TAU
    ))
}

fn snapshot_header(cfg: &ExperimentConfig, n_box: u32, seed: u128) -> Result<SnapshotHeader> {
    let p = cfg.model.potential.build()?;
    Ok(SnapshotHeader {
        radius: n_box,
        center: (0, 0),
        potential_id: p.id(),
        params: p.params(),
        seed,
    })
}

fn run_sample(ctx: &mut Ctx, resume_from: Option<&Manifest>) -> Result<String> {
    let cfg = ctx.cfg;
    let sampler_cfg = cfg
        .sampler
        .as_ref()
        .ok_or_else(|| Error::config("sampler", "required"))?;
    let potential = cfg.model.potential.build()?;
    let n_box = cfg.model.n[0];
    let chain = sampler_cfg.chain_config(n_box, ctx.seed)?;
    let init = initial_field(cfg, n_box)?;
    let header = snapshot_header(cfg, n_box, ctx.seed)?;
    let abort_after = sampler_cfg.abort_after_snapshots;

    if ctx.progress.is_empty() {
        ctx.progress = (0..sampler_cfg.replicas)
            .map(|r| ReplicaProgress {
                replica: r,
                snapshots_done: 0,
                sweeps_done: 0,
                checkpoint: None,
            })
            .collect();
    }
    let _ = resume_from;

    let mut taken_total = 0usize;
    for r in 0..sampler_cfg.replicas {
        let mut state: Option<(Field, u64, usize)> = {
            let prog = &ctx.progress[r];
            if prog.snapshots_done > 0 {
                let chk = prog
                    .checkpoint
                    .as_ref()
                    .ok_or_else(|| Error::invalid("missing checkpoint in manifest"))?;
                let bytes = fs::read(ctx.out.join(chk))?;
                let (_, field) = snapshot::read_snapshot(&mut bytes.as_slice())?;
                Some((field, prog.sweeps_done, prog.snapshots_done))
            } else {
                None
            }
        };
        let done = state.as_ref().map(|s| s.2).unwrap_or(0);
        taken_total += done;
        for i in done..chain.samples {
            let step_cfg = ChainConfig {
                samples: i + 1,
                ..chain.clone()
            };
            let ens =
                sampler::run_chain_replica(&init, &potential, &step_cfg, r as u64, state.take())?;
            let snap = ens
                .snapshots
                .last()
                .ok_or_else(|| Error::invalid("chain produced no snapshot"))?;
            let diag = ens.diagnostics.last().unwrap();
            let rel = format!("snapshots/replica{r:03}_sample{i:05}.glf");
            let bytes = snapshot::snapshot_to_bytes(&header, snap);
            atomic_write(&ctx.out.join(&rel), &bytes)?;
            ctx.record(&rel)?;
            ctx.progress[r] = ReplicaProgress {
                replica: r,
                snapshots_done: i + 1,
                sweeps_done: diag.sweep_index,
                checkpoint: Some(rel),
            };
            state = Some((snap.clone(), diag.sweep_index, i + 1));
            taken_total += 1;
            if let Some(cap) = abort_after {
                if taken_total >= cap {
                    return Err(Error::ChainAborted {
                        reason: format!("abort_after_snapshots = {cap} reached"),
                        snapshots_taken: taken_total,
                    });
                }
            }
        }
    }
    Ok(format!(
        "sampled {} snapshots ({} replicas) at N = {n_box}",
        taken_total, sampler_cfg.replicas
    ))
}

#[derive(Serialize)]
struct StiffnessReport {
    n_box: u32,
    covariance: harmonic::StiffnessEstimate,
    clt_variance: harmonic::StiffnessEstimate,
    agreement_z: f64,
}

fn run_stiffness(ctx: &mut Ctx) -> Result<String> {
    let n_box = ctx.cfg.model.n[0];
    let ensemble = build_ensemble(ctx.cfg, n_box)?;
    let cov = harmonic::estimate_stiffness(&ensemble, StiffnessMethod::Covariance)?;
    let clt = harmonic::estimate_stiffness(&ensemble, StiffnessMethod::CltVariance)?;
    let z = (cov.g_hat - clt.g_hat).abs()
        / (cov.stderr * cov.stderr + clt.stderr * clt.stderr).sqrt();
    let report = StiffnessReport {
        n_box,
        covariance: cov,
        clt_variance: clt,
        agreement_z: z,
    };
    ctx.write_json("stiffness.json", &report)?;
    Ok(format!(
        "g_hat: covariance {:.4} +- {:.4}, clt {:.4} +- {:.4} (z = {:.2})",
        report.covariance.g_hat,
        report.covariance.stderr,
        report.clt_variance.g_hat,
        report.clt_variance.stderr,
        z
    ))
}

#[derive(Serialize)]
struct MultiscaleReport {
    n_box: u32,
    omega: f64,
    k0: i32,
    k_inf: i32,
    sites: Vec<[i32; 2]>,
    increment: multiscale::IncrementReport,
    rough_failure_frequency: Vec<f64>,
    bdry_failure_frequency: Vec<f64>,
    max_telescoping_residual: f64,
}

fn run_multiscale(ctx: &mut Ctx) -> Result<String> {
    let cfg = ctx.cfg;
    let n_box = cfg.model.n[0];
    let ensemble = build_ensemble(cfg, n_box)?;
    let omega = cfg.analysis.omega;
    let k0 = cfg.analysis.k0.unwrap_or(1);
    let k_inf = cfg.analysis.k_inf.unwrap_or(3);
    let sites: Vec<Site> = if cfg.analysis.sites.is_empty() {
        vec![Site::new(0, 0)]
    } else {
        cfg.analysis
            .sites
            .iter()
            .map(|&[x, y]| Site::new(x, y))
            .collect()
    };
    let g_hat = cfg
        .analysis
        .g_hat
        .unwrap_or_else(harmonic::cstar_reference);
    let params = EventParams::default();

    let mut csv_rows: Vec<(usize, multiscale::MultiscaleDecomposition)> = Vec::new();
    let mut rough_fail = vec![0usize; (k_inf - k0 + 1) as usize];
    let mut bdry_fail = vec![0usize; (k_inf - k0 + 1) as usize];
    let mut worst_residual = 0.0f64;
    for (si, snap) in ensemble.snapshots.iter().enumerate() {
        for &x in &sites {
            let dec = multiscale::decompose(snap, x, k0, k_inf, omega, &params)?;
            worst_residual = worst_residual
                .max(dec.telescoping_residual() / (1.0 + dec.phi_x.abs()));
            for (i, (&rf, &bf)) in dec.rough_flags.iter().zip(&dec.bdry_flags).enumerate() {
                if !rf {
                    rough_fail[i] += 1;
                }
                if !bf {
                    bdry_fail[i] += 1;
                }
            }
            if si < 50 {
                csv_rows.push((si, dec));
            }
        }
    }
    let total = (ensemble.len() * sites.len()) as f64;
    let increment =
        multiscale::increment_statistics(&ensemble, &sites, k0, k_inf, omega, g_hat)?;
    let report = MultiscaleReport {
        n_box,
        omega,
        k0,
        k_inf,
        sites: sites.iter().map(|s| [s.x, s.y]).collect(),
        increment,
        rough_failure_frequency: rough_fail.iter().map(|&c| c as f64 / total).collect(),
        bdry_failure_frequency: bdry_fail.iter().map(|&c| c as f64 / total).collect(),
        max_telescoping_residual: worst_residual,
    };
    let refs: Vec<(usize, &multiscale::MultiscaleDecomposition)> =
        csv_rows.iter().map(|(i, d)| (*i, d)).collect();
    ctx.write_text("decompositions.csv", &multiscale::decomposition_csv(&refs))?;
    ctx.write_json("multiscale.json", &report)?;
    Ok(format!(
        "multiscale at N={n_box}: {} increments per scale, worst residual {:.2e}",
        report.increment.samples, report.max_telescoping_residual
    ))
}

#[derive(Serialize)]
struct ExtremesReport {
    n_box: u32,
    max_mean: f64,
    max_sd: f64,
    tail: extremes::TailProfile,
    upper_barrier: extremes::BarrierReport,
}

fn run_extremes(ctx: &mut Ctx) -> Result<String> {
    let cfg = ctx.cfg;
    let n_box = cfg.model.n[0];
    let ensemble = build_ensemble(cfg, n_box)?;
    let g_hat = cfg
        .analysis
        .g_hat
        .unwrap_or_else(harmonic::cstar_reference);
    let potential = cfg.model.potential.build()?;
    let (c_minus, _) = potential.convexity_bounds();
    let maxima: Vec<f64> = ensemble
        .snapshots
        .iter()
        .map(|f| extremes::field_max(f).1)
        .collect();
    let tail = extremes::tail_profile(&ensemble, Site::new(0, 0), g_hat, c_minus)?;
    let spec = extremes::BarrierSpec {
        kind: extremes::BarrierKind::Upper,
        gamma_grid: if cfg.analysis.gamma_grid.is_empty() {
            vec![0.0, 1.0, 2.0, 4.0, 8.0]
        } else {
            cfg.analysis.gamma_grid.clone()
        },
        delta: 3,
        ell: cfg.analysis.ell.unwrap_or(1) as i32,
        g_hat,
        omega: cfg.analysis.omega,
        upsilon: 0.0,
    };
    let sites: Vec<Site> = if cfg.analysis.sites.is_empty() {
        vec![Site::new(0, 0)]
    } else {
        cfg.analysis
            .sites
            .iter()
            .map(|&[x, y]| Site::new(x, y))
            .collect()
    };
    let upper = extremes::barrier_crossing_stats(&ensemble, &spec, &sites)?;
    let report = ExtremesReport {
        n_box,
        max_mean: stats::mean(&maxima),
        max_sd: stats::variance(&maxima).sqrt(),
        tail,
        upper_barrier: upper,
    };
    // Gnuplot-friendly tail table.
    let mut dat = String::from("# t empirical stderr sharp_envelope bl_envelope\n");
    for i in 0..report.tail.t_grid.len() {
        dat.push_str(&format!(
            "{:.6} {:.6e} {:.6e} {:.6e} {:.6e}\n",
            report.tail.t_grid[i],
            report.tail.empirical[i],
            report.tail.stderr[i],
            report.tail.sharp_envelope[i],
            report.tail.bl_envelope[i]
        ));
    }
    ctx.write_text("tail.dat", &dat)?;
    let mut csv = String::from("t,empirical,stderr,sharp_envelope,bl_envelope\n");
    for i in 0..report.tail.t_grid.len() {
        csv.push_str(&format!(
            "{:.6},{:.6e},{:.6e},{:.6e},{:.6e}\n",
            report.tail.t_grid[i],
            report.tail.empirical[i],
            report.tail.stderr[i],
            report.tail.sharp_envelope[i],
            report.tail.bl_envelope[i]
        ));
    }
    ctx.write_text("tail.csv", &csv)?;
    ctx.write_json("extremes.json", &report)?;
    Ok(format!(
        "extremes at N={n_box}: max mean {:.3}, sd {:.3}",
        report.max_mean, report.max_sd
    ))
}

fn run_tightness(ctx: &mut Ctx) -> Result<String> {
    let cfg = ctx.cfg;
    let g_hat = cfg
        .analysis
        .g_hat
        .unwrap_or_else(harmonic::cstar_reference);
    let samples = cfg.sampler.as_ref().map(|s| s.samples).unwrap_or(500);
    let use_exact = cfg
        .sampler
        .as_ref()
        .map(|s| s.algorithm().ok() == Some(Algorithm::ExactGaussian))
        .unwrap_or(true);
    let mut maxima = Vec::new();
    for &n in &cfg.model.n {
        if use_exact {
            maxima.push(extremes::dgff_maxima(n as i32, samples, ctx.seed)?);
        } else {
            let ens = build_ensemble(cfg, n)?;
            maxima.push(
                ens.snapshots
                    .iter()
                    .map(|f| extremes::field_max(f).1)
                    .collect(),
            );
        }
    }
    let report = extremes::tightness_report(&cfg.model.n, &maxima, g_hat, 0.0, ctx.seed)?;
    let mut dat = String::from("# N q05 q10 q25 q50 q75 q90 q95 width\n");
    let mut csv = String::from("N,q05,q10,q25,q50,q75,q90,q95,width\n");
    for (i, n) in report.n_values.iter().enumerate() {
        dat.push_str(&format!("{n}"));
        csv.push_str(&format!("{n}"));
        for q in &report.quantiles[i] {
            dat.push_str(&format!(" {q:.5}"));
            csv.push_str(&format!(",{q:.6}"));
        }
        dat.push_str(&format!(" {:.5}\n", report.widths[i]));
        csv.push_str(&format!(",{:.6}\n", report.widths[i]));
    }
    ctx.write_text("tightness.dat", &dat)?;
    ctx.write_text("tightness.csv", &csv)?;
    ctx.write_json("tightness.json", &report)?;
    Ok(format!(
        "tightness: score {:.4}, widths {:?}",
        report.tightness_score, report.widths
    ))
}

#[derive(Serialize)]
struct BallotQueryResult {
    m: usize,
    kind: QueryKind,
    ell: usize,
    estimate: f64,
    stderr: f64,
    trials: usize,
    hits: u64,
    m32_estimate_scaled: f64,
}

#[derive(Serialize)]
struct BallotReport {
    walk_sd: f64,
    results: Vec<BallotQueryResult>,
    /// Corridor `ell` scan: (ell, m, scaled estimate).
    ell_scan: Vec<(usize, usize, f64, f64)>,
}

fn run_ballot(ctx: &mut Ctx) -> Result<String> {
    let cfg = ctx.cfg;
    let trials = cfg.analysis.trials.unwrap_or(1_000_000);
    let ell = cfg.analysis.ell.unwrap_or(5);
    let sd = cfg.analysis.walk_sd.unwrap_or(1.0);
    let mut results = Vec::new();
    for &m in &cfg.analysis.m_values {
        let spec = WalkSpec::iid(
            m,
            IncrementLaw::Gaussian {
                mean: 0.0,
                sd,
            },
        );
        for kind in [QueryKind::Corridor, QueryKind::OneSidedUp] {
            let q = BarrierQuery::new(kind, 0.0, 0.0, ell)?;
            let est = ballot::barrier_probability(&spec, &q, trials, ctx.seed)?;
            results.push(BallotQueryResult {
                m,
                kind,
                ell,
                estimate: est.estimate,
                stderr: est.stderr,
                trials,
                hits: est.hits,
                m32_estimate_scaled: (m as f64).powf(1.5) * est.estimate,
            });
        }
    }
    let mut ell_scan = Vec::new();
    for &scan_ell in &cfg.analysis.corridor_ell_scan {
        for &m in &cfg.analysis.m_values {
            if m < 2 * scan_ell {
                continue;
            }
            let spec = WalkSpec::iid(
                m,
                IncrementLaw::Gaussian {
                    mean: 0.0,
                    sd,
                },
            );
            let q = BarrierQuery::new(QueryKind::Corridor, 0.0, 0.0, scan_ell)?;
            let est = ballot::barrier_probability(&spec, &q, trials, ctx.seed)?;
            ell_scan.push((
                scan_ell,
                m,
                (m as f64).powf(1.5) * est.estimate,
                est.stderr * (m as f64).powf(1.5),
            ));
        }
    }
    let report = BallotReport {
        walk_sd: sd,
        results,
        ell_scan,
    };
    ctx.write_json("ballot.json", &report)?;
    Ok(format!(
        "ballot: {} queries at {} trials",
        report.results.len(),
        trials
    ))
}

#[derive(Serialize)]
struct SkorokhodReport {
    draws: usize,
    target_sd: f64,
    mean_tau: f64,
    mean_tau_stderr: f64,
    ks_w_tau: f64,
    /// Fitted Gaussian tail coefficient for sup |W| and the observed maximum z.
    sup_tail_coeff: f64,
    sup_tail_violations: usize,
}

fn run_skorokhod(ctx: &mut Ctx) -> Result<String> {
    let cfg = ctx.cfg;
    let draws = cfg.analysis.draws.unwrap_or(100_000);
    let sd = cfg.analysis.target_sd.unwrap_or(1.0);
    let target = TargetLaw::Gaussian { sd };
    let root = CounterRng::root(ctx.seed);
    use rayon::prelude::*;
    let results: Vec<(f64, f64, f64)> = (0..draws)
        .into_par_iter()
        .map(|i| {
            let mut rng = root.substream(&[crate::rng::stream::SKOROKHOD, i as u64]);
            let d = ballot::skorokhod_embed(&target, &mut rng).unwrap();
            (d.tau, d.w_tau, d.sup_abs_w)
        })
        .collect();
    let taus: Vec<f64> = results.iter().map(|r| r.0).collect();
    let ws: Vec<f64> = results.iter().map(|r| r.1).collect();
    let sups: Vec<f64> = results.iter().map(|r| r.2).collect();
    let mean_tau = stats::mean(&taus);
    let ks = stats::ks_distance(&ws, |x| target.cdf(x));
    let (coeff, violations) = sup_tail_fit(&sups);
    let report = SkorokhodReport {
        draws,
        target_sd: sd,
        mean_tau,
        mean_tau_stderr: (stats::variance(&taus) / draws as f64).sqrt(),
        ks_w_tau: ks,
        sup_tail_coeff: coeff,
        sup_tail_violations: violations,
    };
    ctx.write_json("skorokhod.json", &report)?;
    Ok(format!(
        "skorokhod: E tau = {:.4} (target {:.4}), KS = {:.5}",
        mean_tau,
        sd * sd,
        ks
    ))
}

/// Fit a Gaussian envelope `P(sup > x) ~ C exp(-c x^2)` to the tail by
/// regressing `ln P` on `x^2` between the 90th and 99.9th percentiles, then
/// count grid points where the empirical tail exceeds twice the fitted
/// envelope by more than 3 binomial sigmas (one-sided check that the decay is
/// at least Gaussian).
pub fn sup_tail_fit(sups: &[f64]) -> (f64, usize) {
    let n = sups.len() as f64;
    let x0 = stats::quantile(sups, 0.9);
    let xmax = stats::quantile(sups, 1.0 - 50.0 / n);
    let grid = 14;
    let mut xs2 = Vec::new();
    let mut lps = Vec::new();
    let mut points = Vec::new();
    for i in 0..=grid {
        let x = x0 + (xmax - x0) * i as f64 / grid as f64;
        let p = sups.iter().filter(|&&s| s > x).count() as f64 / n;
        if p > 0.0 {
            xs2.push(x * x);
            lps.push(p.ln());
            points.push((x, p));
        }
    }
    let (slope, intercept) = stats::linear_fit(&xs2, &lps);
    let coeff = -slope;
    let big_c = intercept.exp();
    let mut violations = 0usize;
    for (x, p) in points {
        let envelope = 2.0 * big_c * (-coeff * x * x).exp();
        let se = stats::binomial_stderr(p.max(1.0 / n), sups.len());
        if p > envelope + 3.0 * se {
            violations += 1;
        }
    }
    (coeff, violations)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tmpdir(tag: &str) -> PathBuf {
        let dir = std::env::temp_dir().join(format!("glx-test-{tag}-{}", std::process::id()));
        let _ = fs::remove_dir_all(&dir);
        fs::create_dir_all(&dir).unwrap();
        dir
    }

    #[test]
    fn cstar_experiment_roundtrip() {
        let toml = r#"
experiment = "cstar"
seed = "42"

[model]
n = [32]
potential = { id = "quadratic" }

[analysis]
cstar_resolution = 64
"#;
        let cfg = ExperimentConfig::from_toml(toml).unwrap();
        let dir = tmpdir("cstar");
        let out = run_experiment(&cfg, &dir).unwrap();
        assert!(out.abort.is_none());
        let manifest: Manifest =
            serde_json::from_str(&fs::read_to_string(out.manifest_path).unwrap()).unwrap();
        assert!(manifest.complete);
        assert!(dir.join("cstar.json").exists());
        let _ = fs::remove_dir_all(&dir);
    }

    #[test]
    fn sample_run_deterministic_and_resumable() {
        let toml = r#"
experiment = "sample"
seed = "0xABCD"

[model]
n = [4]
potential = { id = "quadratic" }

[sampler]
algorithm = "heat-bath"
burn_in_sweeps = 5
thinning_sweeps = 2
samples = 6
"#;
        let cfg = ExperimentConfig::from_toml(toml).unwrap();
        let dir_a = tmpdir("sample-a");
        let dir_b = tmpdir("sample-b");
        run_experiment(&cfg, &dir_a).unwrap();
        run_experiment(&cfg, &dir_b).unwrap();
        // Same config + seed: identical SHA-256 of every data file.
        let ma: Manifest =
            serde_json::from_str(&fs::read_to_string(dir_a.join("manifest.json")).unwrap())
                .unwrap();
        let mb: Manifest =
            serde_json::from_str(&fs::read_to_string(dir_b.join("manifest.json")).unwrap())
                .unwrap();
        let mut fa: Vec<(String, String)> = ma
            .data_files
            .iter()
            .map(|f| (f.path.clone(), f.sha256.clone()))
            .collect();
        let mut fb: Vec<(String, String)> = mb
            .data_files
            .iter()
            .map(|f| (f.path.clone(), f.sha256.clone()))
            .collect();
        fa.sort();
        fb.sort();
        assert_eq!(fa, fb);

        // Interrupted run + resume reproduces the same files.
        let toml_abort = toml.replace(
            "samples = 6",
            "samples = 6\nabort_after_snapshots = 3",
        );
        let cfg_abort = ExperimentConfig::from_toml(&toml_abort).unwrap();
        let dir_c = tmpdir("sample-c");
        let out = run_experiment(&cfg_abort, &dir_c).unwrap();
        assert!(out.abort.is_some());
        // Remove the abort knob and resume.
        let mpath = dir_c.join("manifest.json");
        let mut manifest: Manifest =
            serde_json::from_str(&fs::read_to_string(&mpath).unwrap()).unwrap();
        manifest.config.sampler.as_mut().unwrap().abort_after_snapshots = None;
        atomic_write(
            &mpath,
            serde_json::to_string_pretty(&manifest).unwrap().as_bytes(),
        )
        .unwrap();
        resume(&mpath).unwrap();
        let mc: Manifest = serde_json::from_str(&fs::read_to_string(&mpath).unwrap()).unwrap();
        assert!(mc.complete);
        let mut fc: Vec<(String, String)> = mc
            .data_files
            .iter()
            .map(|f| (f.path.clone(), f.sha256.clone()))
            .collect();
        fc.sort();
        assert_eq!(fa, fc);

        // Resume of a completed run is a no-op.
        let again = resume(&mpath).unwrap();
        assert!(again.summary.contains("already complete"));

        // Corrupting a snapshot breaks the checksum on resume.
        let victim = dir_c.join(&mc.data_files[0].path);
        let mut bytes = fs::read(&victim).unwrap();
        let last = bytes.len() - 1;
        bytes[last] ^= 0xFF;
        fs::write(&victim, &bytes).unwrap();
        let mut manifest: Manifest =
            serde_json::from_str(&fs::read_to_string(&mpath).unwrap()).unwrap();
        manifest.complete = false;
        atomic_write(
            &mpath,
            serde_json::to_string_pretty(&manifest).unwrap().as_bytes(),
        )
        .unwrap();
        assert!(matches!(resume(&mpath), Err(Error::Checksum { .. })));

        for d in [dir_a, dir_b, dir_c] {
            let _ = fs::remove_dir_all(&d);
        }
    }
}

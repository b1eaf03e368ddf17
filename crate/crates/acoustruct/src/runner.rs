//! Batch front-end: dispatches experiments from a config file and writes
//! reproducible artifacts (config echo, manifest, CSV series, JSON
//! summaries). Outputs are deterministic given `(config, seed)`: parallel
//! runs use per-index seeds and results are assembled in index order.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::config::{ConfigError, ExperimentKind, InitialConfig, RunConfig, SweepInner};
use crate::diagnostics::{
    self, attractor_bound_functional, dist_to_equilibria, fractal_dimension, random_state_in_wr,
    stabilizability_fit, AttractorSampleConfig, DiagnosticsError, SemicontinuityConfig,
    SpectralBasis,
};
use crate::equilibria::{enumerate_equilibria, EquilibriaSet};
use crate::integrator::{simulate, SimOptions, SimState, Trajectory};
use crate::model::ModelParams;
use crate::operators::DiscreteOperators;
use crate::Real;

use rand::SeedableRng;

#[derive(Debug, Error)]
pub enum RunnerError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Diagnostics(#[from] DiagnosticsError),
    #[error("simulation failed at t = {t}: {message}")]
    Simulation { t: f64, message: String },
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("thread pool: {0}")]
    ThreadPool(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> RunnerError + '_ {
    move |source| RunnerError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Command-line overrides applied on top of the config file.
#[derive(Clone, Debug, Default)]
pub struct RunOverrides {
    pub out_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
}

#[derive(Debug)]
pub struct RunArtifacts {
    pub dir: PathBuf,
    pub summary: serde_json::Value,
}

#[derive(Serialize)]
struct StateSnapshot {
    t: Real,
    z: Vec<Real>,
    zt: Vec<Real>,
    v: Vec<Real>,
    vt: Vec<Real>,
    theta: Vec<Real>,
}

impl StateSnapshot {
    fn of(s: &SimState<Real>) -> Self {
        StateSnapshot {
            t: s.t,
            z: s.z.0.clone(),
            zt: s.zt.0.clone(),
            v: s.v.0.clone(),
            vt: s.vt.0.clone(),
            theta: s.theta.0.clone(),
        }
    }
}

fn write_json<P: Serialize>(path: &Path, value: &P) -> Result<(), RunnerError> {
    let text = serde_json::to_string_pretty(value).expect("json serialization");
    fs::write(path, text).map_err(io_err(path))
}

fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<(), RunnerError> {
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    fs::write(path, out).map_err(io_err(path))
}

fn fmt(v: Real) -> String {
    format!("{v}")
}

/// Deterministic per-trajectory seed derivation.
fn traj_seed(base: u64, index: usize) -> u64 {
    base ^ (index as u64).wrapping_mul(0x9e3779b97f4a7c15)
}

fn build_initial(
    cfg: &RunConfig,
    params: &ModelParams<Real>,
    ops: &DiscreteOperators<Real>,
) -> SimState<Real> {
    let g = *ops.grid();
    match &cfg.initial {
        InitialConfig::Zero => SimState::zeros(&g),
        InitialConfig::LowMode {
            z_amp,
            zt_amp,
            v_amp,
            vt_amp,
            theta_amp,
        } => {
            let mut st = SimState::zeros(&g);
            let pi = std::f64::consts::PI;
            for j in 0..=g.ny() {
                for i in 0..=g.nx() {
                    let (x, y) = (g.node_x::<Real>(i), g.node_y::<Real>(j));
                    st.z.0[g.node(i, j)] = z_amp * (pi * x).cos() * (pi * y).cos();
                    st.zt.0[g.node(i, j)] = zt_amp * (2.0 * pi * x).cos();
                }
            }
            for k in 0..g.beam_len() {
                let x = g.beam_x::<Real>(k);
                st.v.0[k] = v_amp * (pi * x).sin();
                st.vt.0[k] = vt_amp * (2.0 * pi * x).sin();
                st.theta.0[k] = theta_amp * (pi * x).sin();
            }
            st
        }
        InitialConfig::RandomWr { r } => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            random_state_in_wr(*r, params, ops, &mut rng)
        }
    }
}

fn sim_options(cfg: &RunConfig, store_states: bool) -> SimOptions<Real> {
    SimOptions {
        dt: cfg.time.dt,
        t_end: cfg.time.t_end,
        save_every: cfg.time.save_every,
        tol: cfg.time.tol,
        store_states,
    }
}

fn run_sim(
    initial: &SimState<Real>,
    opts: &SimOptions<Real>,
    params: &ModelParams<Real>,
    ops: &DiscreteOperators<Real>,
) -> Result<Trajectory<Real>, RunnerError> {
    simulate(initial, opts, params, ops).map_err(|e| RunnerError::Simulation {
        t: e.t,
        message: e.source.to_string(),
    })
}

/// Per-save-interval maxima of the step reports.
fn interval_maxima(traj: &Trajectory<Real>, save_every: usize) -> Vec<(Real, Real)> {
    let n_steps = traj.reports.len();
    let mut out = vec![(0.0, 0.0)];
    let mut cur = (0.0f64, 0.0f64);
    for (k, r) in traj.reports.iter().enumerate() {
        cur.0 = cur.0.max(r.energy_residual.abs());
        cur.1 = cur.1.max(r.newton_residual);
        let step = k + 1;
        if step % save_every.max(1) == 0 || step == n_steps {
            out.push(cur);
            cur = (0.0, 0.0);
        }
    }
    out
}

fn energy_csv(
    dir: &Path,
    traj: &Trajectory<Real>,
    save_every: usize,
    extra: Option<(&str, &[Real])>,
) -> Result<(), RunnerError> {
    let maxima = interval_maxima(traj, save_every);
    let mut header = vec![
        "t",
        "e_total",
        "e_plus",
        "ez0",
        "ev0",
        "etheta",
        "pi",
        "phi",
        "diss_wave_accum",
        "diss_heat_accum",
        "max_energy_residual",
        "max_newton_residual",
    ];
    if let Some((name, _)) = extra {
        header.push(name);
    }
    let mut rows = Vec::with_capacity(traj.times.len());
    for (i, (&t, l)) in traj.times.iter().zip(traj.ledgers.iter()).enumerate() {
        let (er, nr) = maxima.get(i).copied().unwrap_or((0.0, 0.0));
        let mut row = vec![
            fmt(t),
            fmt(l.e_total),
            fmt(l.e_plus),
            fmt(l.ez0),
            fmt(l.ev0),
            fmt(l.etheta),
            fmt(l.pi),
            fmt(l.phi),
            fmt(l.d_wave_accum),
            fmt(l.d_heat_accum),
            fmt(er),
            fmt(nr),
        ];
        if let Some((_, vals)) = extra {
            row.push(fmt(vals[i]));
        }
        rows.push(row);
    }
    write_csv(&dir.join("energy.csv"), &header, &rows)
}

fn equilibria_artifacts(
    dir: &Path,
    set: &EquilibriaSet<Real>,
    params: &ModelParams<Real>,
    ops: &DiscreteOperators<Real>,
) -> Result<serde_json::Value, RunnerError> {
    let snap_dir = dir.join("snapshots");
    fs::create_dir_all(&snap_dir).map_err(io_err(&snap_dir))?;
    let mut entries = Vec::new();
    for (k, eq) in set.list.iter().enumerate() {
        let st = eq.to_state(ops);
        let y = diagnostics::y_norm(&st, &SimState::zeros(ops.grid()), params, ops)?;
        entries.push(json!({
            "index": k,
            "label": eq.label,
            "residual_wave": eq.residual_wave,
            "residual_plate": eq.residual_plate,
            "y_norm": y,
        }));
        write_json(
            &snap_dir.join(format!("equilibrium_{k}.json")),
            &StateSnapshot::of(&st),
        )?;
    }
    let value = json!({
        "count": set.list.len(),
        "max_y_norm": set.max_y_norm,
        "equilibria": entries,
    });
    write_json(&dir.join("equilibria.json"), &value)?;
    Ok(value)
}

fn schema_for(experiment: ExperimentKind) -> serde_json::Value {
    let energy = json!({
        "t": "save time",
        "e_total": "total energy of the state at t",
        "e_plus": "positive-part energy",
        "ez0": "free wave energy",
        "ev0": "free beam energy",
        "etheta": "thermal energy",
        "pi": "wave potential",
        "phi": "beam potential",
        "diss_wave_accum": "integral of (g(z_t), z_t) up to t",
        "diss_heat_accum": "integral of the squared thermal gradient norm up to t",
        "max_energy_residual": "max |per-step energy residual| since the previous save",
        "max_newton_residual": "max newton residual since the previous save",
    });
    match experiment {
        ExperimentKind::Simulate => json!({ "energy.csv": energy }),
        ExperimentKind::Equilibria => json!({
            "equilibria.json": "list of stationary points with residuals and labels",
        }),
        ExperimentKind::Decay => json!({
            "decay.csv": {
                "run": "trajectory index",
                "t": "save time",
                "dist_to_equilibria": "Y-distance to the nearest stationary point",
                "e_total": "total energy",
            },
            "equilibria.json": "stationary set used for the distance",
        }),
        ExperimentKind::Stabilizability => json!({
            "stabilizability.csv": {
                "pair": "trajectory-pair index",
                "c1": "fitted exponential prefactor",
                "omega": "fitted decay rate",
                "c2": "fitted lower-order coefficient",
                "violations": "pointwise violations after the fit (0 = valid)",
                "feasible": "1 when the lower-order term could absorb all slack",
                "d0": "initial squared Y-distance of the pair",
            },
        }),
        ExperimentKind::Dimension => json!({
            "dimension.csv": {
                "epsilon": "box size",
                "count": "number of occupied boxes N(M, eps)",
            },
        }),
        ExperimentKind::Sweep => json!({
            "sweep.csv": {
                "gamma": "rotational inertia",
                "kappa": "coupling strength",
                "status": "ok or error message",
                "metric": "inner-experiment metric (see summary.json)",
            },
        }),
        ExperimentKind::Semicontinuity => json!({
            "semidistances.csv": {
                "gamma": "cell gamma",
                "kappa": "cell kappa",
                "semidist_y": "one-sided Hausdorff semidistance to the reference sample",
                "semidist_product": "semidistance to the cross-combined product sample (empty unless kappa0 = 0)",
                "semidist_plate_h": "plate marginal semidistance in the H-norm (empty unless kappa = kappa0 = 0)",
            },
        }),
    }
}

/// Run the experiment named in the config. Validation (including the
/// nonlinearity assumption gates) happens before any output directory is
/// created or any compute starts.
pub fn run(config_path: &Path, overrides: &RunOverrides) -> Result<RunArtifacts, RunnerError> {
    let text = fs::read_to_string(config_path).map_err(|source| {
        RunnerError::Config(ConfigError::Io {
            path: config_path.display().to_string(),
            source,
        })
    })?;
    let mut cfg = RunConfig::parse(&text)?;
    if let Some(seed) = overrides.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;

    let config_sha = {
        let mut h = Sha256::new();
        h.update(text.as_bytes());
        format!("{:x}", h.finalize())
    };

    let dir = overrides.out_dir.clone().unwrap_or_else(|| {
        let stem = config_path
            .file_stem()
            .map(|s| s.to_string_lossy().to_string())
            .unwrap_or_else(|| "run".into());
        PathBuf::from("runs").join(stem)
    });
    fs::create_dir_all(&dir).map_err(io_err(&dir))?;

    let started = Instant::now();
    let threads = overrides.threads.unwrap_or(0);
    let summary = if threads > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| RunnerError::ThreadPool(e.to_string()))?;
        pool.install(|| dispatch(&cfg, &dir))?
    } else {
        dispatch(&cfg, &dir)?
    };

    // config echo + manifest + schema
    let echo = toml::to_string_pretty(&cfg).expect("config echo");
    fs::write(dir.join("config.resolved.toml"), echo)
        .map_err(io_err(&dir.join("config.resolved.toml")))?;
    let manifest = json!({
        "version": env!("CARGO_PKG_VERSION"),
        "experiment": cfg.experiment.name(),
        "seed": cfg.seed,
        "config_sha256": config_sha,
        "wall_time_s": started.elapsed().as_secs_f64(),
        "threads": threads,
    });
    write_json(&dir.join("manifest.json"), &manifest)?;
    write_json(&dir.join("schema.json"), &schema_for(cfg.experiment))?;
    let mut summary = summary;
    summary["experiment"] = json!(cfg.experiment.name());
    summary["seed"] = json!(cfg.seed);
    summary["config_sha256"] = json!(config_sha);
    write_json(&dir.join("summary.json"), &summary)?;

    Ok(RunArtifacts { dir, summary })
}

/// `sweep <config>`: the config must name the sweep experiment.
pub fn sweep(config_path: &Path, overrides: &RunOverrides) -> Result<RunArtifacts, RunnerError> {
    let text = fs::read_to_string(config_path).map_err(|source| {
        RunnerError::Config(ConfigError::Io {
            path: config_path.display().to_string(),
            source,
        })
    })?;
    let cfg = RunConfig::parse(&text)?;
    if cfg.experiment != ExperimentKind::Sweep {
        return Err(RunnerError::Config(ConfigError::Invalid(
            "sweep subcommand requires experiment = \"sweep\"".into(),
        )));
    }
    run(config_path, overrides)
}

fn dispatch(cfg: &RunConfig, dir: &Path) -> Result<serde_json::Value, RunnerError> {
    match cfg.experiment {
        ExperimentKind::Simulate => run_simulate(cfg, dir),
        ExperimentKind::Equilibria => run_equilibria(cfg, dir),
        ExperimentKind::Decay => run_decay(cfg, dir),
        ExperimentKind::Stabilizability => run_stabilizability(cfg, dir),
        ExperimentKind::Dimension => run_dimension(cfg, dir),
        ExperimentKind::Sweep => run_sweep(cfg, dir),
        ExperimentKind::Semicontinuity => run_semicontinuity(cfg, dir),
    }
}

fn run_simulate(cfg: &RunConfig, dir: &Path) -> Result<serde_json::Value, RunnerError> {
    let ops = cfg.build_operators()?;
    let params = cfg.build_params(ops.grid())?;
    let initial = build_initial(cfg, &params, &ops);
    let want_snaps = cfg.time.snapshot_every.is_some();
    let traj = run_sim(&initial, &sim_options(cfg, want_snaps), &params, &ops)?;
    energy_csv(dir, &traj, cfg.time.save_every, None)?;

    let snap_dir = dir.join("snapshots");
    fs::create_dir_all(&snap_dir).map_err(io_err(&snap_dir))?;
    write_json(
        &snap_dir.join("state_initial.json"),
        &StateSnapshot::of(&initial),
    )?;
    write_json(
        &snap_dir.join("state_final.json"),
        &StateSnapshot::of(&traj.final_state),
    )?;
    if let Some(every) = cfg.time.snapshot_every {
        for (i, st) in traj.states.iter().enumerate().step_by(every.max(1)) {
            write_json(
                &snap_dir.join(format!("state_{i:05}.json")),
                &StateSnapshot::of(st),
            )?;
        }
    }

    // largest energy rise over the saved series (monotonicity slack)
    let mut run_min = f64::INFINITY;
    let mut worst_rise: f64 = 0.0;
    for l in &traj.ledgers {
        worst_rise = worst_rise.max(l.e_total - run_min);
        run_min = run_min.min(l.e_total);
    }
    Ok(json!({
        "e_initial": traj.ledgers.first().map(|l| l.e_total),
        "e_final": traj.ledgers.last().map(|l| l.e_total),
        "max_abs_energy_residual": traj.max_abs_energy_residual,
        "monotonicity_worst_rise": worst_rise.max(0.0),
        "stiffness_warning": traj.stiffness_warning,
        "steps": traj.reports.len(),
    }))
}

fn run_equilibria(cfg: &RunConfig, dir: &Path) -> Result<serde_json::Value, RunnerError> {
    let ops = cfg.build_operators()?;
    let params = cfg.build_params(ops.grid())?;
    let n_starts = cfg.equilibria.as_ref().map(|b| b.n_starts).unwrap_or(8);
    let set = enumerate_equilibria(&params, &ops, n_starts, cfg.time.tol, cfg.seed);
    equilibria_artifacts(dir, &set, &params, &ops)
}

fn run_decay(cfg: &RunConfig, dir: &Path) -> Result<serde_json::Value, RunnerError> {
    let ops = cfg.build_operators()?;
    let params = cfg.build_params(ops.grid())?;
    let block = cfg.decay.as_ref().expect("validated");
    let set = enumerate_equilibria(&params, &ops, 8, cfg.time.tol, cfg.seed);
    equilibria_artifacts(dir, &set, &params, &ops)?;

    let opts = sim_options(cfg, true);
    let runs: Vec<Result<(usize, Trajectory<Real>), RunnerError>> = (0..block.n_starts)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(traj_seed(cfg.seed, i));
            let initial = random_state_in_wr(block.r, &params, &ops, &mut rng);
            run_sim(&initial, &opts, &params, &ops).map(|t| (i, t))
        })
        .collect();

    let mut rows = Vec::new();
    let mut final_dists = Vec::new();
    for r in runs {
        let (i, traj) = r?;
        let mut last = f64::NAN;
        for (t, s) in traj.times.iter().zip(traj.states.iter()) {
            let d = dist_to_equilibria(s, &set.list, &params, &ops)?;
            let e = s.energy_ledger(&params, &ops).e_total;
            rows.push(vec![i.to_string(), fmt(*t), fmt(d), fmt(e)]);
            last = d;
        }
        final_dists.push(last);
    }
    write_csv(
        &dir.join("decay.csv"),
        &["run", "t", "dist_to_equilibria", "e_total"],
        &rows,
    )?;
    let max_final = final_dists.iter().cloned().fold(0.0f64, f64::max);
    Ok(json!({
        "n_starts": block.n_starts,
        "final_dists": final_dists,
        "max_final_dist": max_final,
        "equilibria_count": set.list.len(),
    }))
}

fn run_stabilizability(cfg: &RunConfig, dir: &Path) -> Result<serde_json::Value, RunnerError> {
    let ops = cfg.build_operators()?;
    let params = cfg.build_params(ops.grid())?;
    let block = cfg.stabilizability.as_ref().expect("validated");
    let basis = SpectralBasis::new(&ops);
    let opts = sim_options(cfg, true);

    let fits: Vec<Result<_, RunnerError>> = (0..block.n_pairs)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(traj_seed(cfg.seed, 2 * i));
            let a = random_state_in_wr(block.r, &params, &ops, &mut rng);
            let mut rng = ChaCha8Rng::seed_from_u64(traj_seed(cfg.seed, 2 * i + 1));
            let b = random_state_in_wr(block.r, &params, &ops, &mut rng);
            let ta = run_sim(&a, &opts, &params, &ops)?;
            let tb = run_sim(&b, &opts, &params, &ops)?;
            let diag = stabilizability_fit(&ta, &tb, &params, &ops, &basis, block.delta)?;
            Ok((i, diag))
        })
        .collect();

    let mut rows = Vec::new();
    let mut all_omega_positive = true;
    let mut total_violations = 0usize;
    for f in fits {
        let (i, diag) = f?;
        let fit = diag.stabilizability.expect("fit present");
        all_omega_positive &= fit.omega_positive && fit.feasible;
        total_violations += fit.violations;
        rows.push(vec![
            i.to_string(),
            fmt(fit.c1),
            fmt(fit.omega),
            fmt(fit.c2),
            fit.violations.to_string(),
            (fit.feasible as u8).to_string(),
            fmt(diag.y_sq_series[0]),
        ]);
    }
    write_csv(
        &dir.join("stabilizability.csv"),
        &["pair", "c1", "omega", "c2", "violations", "feasible", "d0"],
        &rows,
    )?;
    Ok(json!({
        "n_pairs": block.n_pairs,
        "all_omega_positive": all_omega_positive,
        "total_violations": total_violations,
    }))
}

fn run_dimension(cfg: &RunConfig, dir: &Path) -> Result<serde_json::Value, RunnerError> {
    let ops = cfg.build_operators()?;
    let params = cfg.build_params(ops.grid())?;
    let block = cfg.dimension.as_ref().expect("validated");
    let sample_cfg = AttractorSampleConfig {
        r: block.r,
        dt: cfg.time.dt,
        tol: cfg.time.tol,
        sample_every: block.sample_every,
        seed: cfg.seed,
    };
    let sample = diagnostics::attractor_sample(
        &params,
        &ops,
        block.n_trajectories,
        block.t_burn,
        block.t_sample,
        &sample_cfg,
    )?;
    let est = fractal_dimension(&sample, block.projection_dim, &params, &ops)?;
    let rows: Vec<Vec<String>> = est
        .epsilons
        .iter()
        .zip(est.counts.iter())
        .map(|(&e, &c)| vec![fmt(e), c.to_string()])
        .collect();
    write_csv(&dir.join("dimension.csv"), &["epsilon", "count"], &rows)?;
    Ok(json!({
        "n_sample": sample.len(),
        "projection": est.projection,
        "slope": est.slope,
        "slope_stderr": est.slope_stderr,
    }))
}

fn run_sweep(cfg: &RunConfig, dir: &Path) -> Result<serde_json::Value, RunnerError> {
    let block = cfg.sweep.as_ref().expect("validated");
    let cells: Vec<(Real, Real)> = block
        .gammas
        .iter()
        .flat_map(|&g| block.kappas.iter().map(move |&k| (g, k)))
        .collect();

    let results: Vec<(Real, Real, Result<Real, String>)> = cells
        .par_iter()
        .map(|&(gamma, kappa)| {
            let sub = cfg.with_gamma_kappa(gamma, kappa);
            let metric = sweep_cell(&sub);
            (gamma, kappa, metric.map_err(|e| e.to_string()))
        })
        .collect();

    let mut rows = Vec::new();
    let mut cells_json = Vec::new();
    let mut failures = 0usize;
    for (gamma, kappa, res) in &results {
        match res {
            Ok(metr) => {
                rows.push(vec![fmt(*gamma), fmt(*kappa), "ok".into(), fmt(*metr)]);
                cells_json.push(json!({"gamma": gamma, "kappa": kappa, "metric": metr}));
            }
            Err(msg) => {
                failures += 1;
                rows.push(vec![fmt(*gamma), fmt(*kappa), msg.clone(), String::new()]);
                cells_json.push(json!({"gamma": gamma, "kappa": kappa, "error": msg}));
            }
        }
    }
    write_csv(
        &dir.join("sweep.csv"),
        &["gamma", "kappa", "status", "metric"],
        &rows,
    )?;
    let metric_name = match block.inner {
        SweepInner::Decay => "max_final_dist",
        SweepInner::AttractorBound => "r_tilde",
    };
    Ok(json!({
        "inner": metric_name,
        "cells": cells_json,
        "failures": failures,
    }))
}

/// One sweep cell: run the inner experiment and reduce it to one metric.
fn sweep_cell(cfg: &RunConfig) -> Result<Real, RunnerError> {
    let block = cfg.sweep.as_ref().expect("validated");
    let ops = cfg.build_operators()?;
    let params = cfg.build_params(ops.grid())?;
    match block.inner {
        SweepInner::Decay => {
            let decay = cfg.decay.as_ref().expect("validated");
            let set = enumerate_equilibria(&params, &ops, 8, cfg.time.tol, cfg.seed);
            let opts = sim_options(cfg, true);
            let mut worst: Real = 0.0;
            for i in 0..decay.n_starts {
                let mut rng = ChaCha8Rng::seed_from_u64(traj_seed(cfg.seed, i));
                let initial = random_state_in_wr(decay.r, &params, &ops, &mut rng);
                let traj = run_sim(&initial, &opts, &params, &ops)?;
                let d = dist_to_equilibria(&traj.final_state, &set.list, &params, &ops)?;
                worst = worst.max(d);
            }
            Ok(worst)
        }
        SweepInner::AttractorBound => {
            let at = cfg.attractor.as_ref().expect("validated");
            let sample_cfg = AttractorSampleConfig {
                r: at.r,
                dt: cfg.time.dt,
                tol: cfg.time.tol,
                sample_every: at.sample_every,
                seed: cfg.seed,
            };
            let sample = diagnostics::attractor_sample(
                &params,
                &ops,
                at.n_trajectories,
                at.t_burn,
                at.t_sample,
                &sample_cfg,
            )?;
            let mut sup: Real = 0.0;
            for s in &sample {
                sup = sup.max(attractor_bound_functional(s, &ops));
            }
            Ok(sup.sqrt())
        }
    }
}

fn run_semicontinuity(cfg: &RunConfig, dir: &Path) -> Result<serde_json::Value, RunnerError> {
    let ops = cfg.build_operators()?;
    let params = cfg.build_params(ops.grid())?;
    let block = cfg.semicontinuity.as_ref().expect("validated");
    let sc_cfg = SemicontinuityConfig {
        n_trajectories: block.n_trajectories,
        t_burn: block.t_burn,
        t_sample: block.t_sample,
        sample: AttractorSampleConfig {
            r: block.r,
            dt: cfg.time.dt,
            tol: cfg.time.tol,
            sample_every: block.sample_every,
            seed: cfg.seed,
        },
    };
    let rows = diagnostics::semicontinuity_experiment(
        &block.lambdas,
        block.lambda0,
        &params,
        &ops,
        &sc_cfg,
    )?;
    let csv_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                fmt(r.gamma),
                fmt(r.kappa),
                fmt(r.semidist_y),
                r.semidist_product.map(fmt).unwrap_or_default(),
                r.semidist_plate_h.map(fmt).unwrap_or_default(),
            ]
        })
        .collect();
    write_csv(
        &dir.join("semidistances.csv"),
        &[
            "gamma",
            "kappa",
            "semidist_y",
            "semidist_product",
            "semidist_plate_h",
        ],
        &csv_rows,
    )?;
    let cells: Vec<serde_json::Value> = rows
        .iter()
        .map(|r| {
            json!({
                "gamma": r.gamma,
                "kappa": r.kappa,
                "semidist_y": r.semidist_y,
                "semidist_product": r.semidist_product,
                "semidist_plate_h": r.semidist_plate_h,
            })
        })
        .collect();
    Ok(json!({ "cells": cells }))
}

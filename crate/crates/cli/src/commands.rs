use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use koopid_core::analysis::{
    basin_map, duffing_history_init, eigenmode_spectrum, estimate_prc, find_fixed_point,
    find_limit_cycle, l2_error, phase_grid, CycleResult, Pulse,
};
use koopid_core::estimators::{training_residual, PreparedFit};
use koopid_core::simulators::{gen_input, simulate_burgers, simulate_duffing, simulate_hopf};
use koopid_core::{
    assemble, delay_init, pod_basis, reduce, rollout, Dynamics, KoopError, KoopmanModel, Matrix,
    ObservableSeries, Rank,
};

use crate::archive::ModelArchive;
use crate::config::{CycleConfig, InitialConfig, InputConfig, RunConfig, SystemConfig};
use crate::series::{
    manifest_path, read_series, series_header, write_series, write_table, SeriesManifest,
};

#[derive(Debug, Parser)]
#[command(
    name = "koopid",
    version,
    about = "Nonlinear Koopman-operator system identification"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate the configured reference system and write its series.
    Simulate(Common),
    /// Fit a model to a series and write a model archive.
    Fit(Common),
    /// Roll a model out against a recorded series.
    Predict(Common),
    /// Run an analysis on a fitted model.
    Analyze {
        #[arg(value_enum)]
        task: Task,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Task {
    Basins,
    Cycle,
    Prc,
    FixedPoint,
    Spectrum,
}

#[derive(Debug, Args)]
pub struct Common {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Output directory; overrides `[output] directory`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, env = "KOOPID_THREADS")]
    pub threads: Option<usize>,
}

/// Parses `args`, runs the command and returns the process exit code:
/// 0 on success, 1 for usage or configuration errors, 2 for numerical failures.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &anyhow::Error) -> i32 {
    match e.chain().find_map(|c| c.downcast_ref::<KoopError>()) {
        Some(k) if k.is_numerical() => 2,
        _ => 1,
    }
}

pub fn execute(cli: Cli) -> Result<()> {
    let (common, task) = match &cli.command {
        Command::Simulate(c) | Command::Fit(c) | Command::Predict(c) => (c, None),
        Command::Analyze { task, common } => (common, Some(*task)),
    };
    if let Some(n) = common.threads {
        ensure!(n > 0, "--threads must be positive");
        // A second call in the same process keeps the first pool.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    let mut cfg = RunConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    let out = common
        .out
        .clone()
        .unwrap_or_else(|| cfg.output.directory.clone());
    fs::create_dir_all(&out)
        .with_context(|| format!("creating output directory {}", out.display()))?;
    match (&cli.command, task) {
        (Command::Simulate(_), _) => simulate(&cfg, &out),
        (Command::Fit(_), _) => fit(&cfg, common, &out),
        (Command::Predict(_), _) => predict(&cfg, common, &out),
        (_, Some(task)) => analyze(&cfg, common, task, &out),
        _ => unreachable!(),
    }
}

fn channel(
    input: Option<&InputConfig>,
    seed: u64,
    k: usize,
    t_end: f64,
    dt: f64,
) -> Result<Vec<f64>> {
    match input {
        Some(i) => Ok(gen_input(&i.channel(seed, k, t_end), dt)?),
        None => Ok(vec![0.0; (t_end / dt).round() as usize + 1]),
    }
}

fn simulate(cfg: &RunConfig, out: &Path) -> Result<()> {
    let system = cfg
        .system
        .as_ref()
        .context("simulate needs a [system] section")?;
    let input = cfg.input.as_ref();
    let series = match system {
        SystemConfig::Duffing { params, x0, t_end } => {
            let u = channel(input, cfg.seed, 0, *t_end, params.dt_sample)?;
            simulate_duffing(*params, *x0, &u, *t_end)?.series
        }
        SystemConfig::Hopf { params, x0, t_end } => {
            let u = channel(input, cfg.seed, 0, *t_end, params.dt_sample)?;
            simulate_hopf(*params, *x0, Some(&u), *t_end)?.series
        }
        SystemConfig::Burgers {
            params,
            observation,
            w0,
            t_end,
        } => {
            let dt = params.dt_sample;
            let wl = channel(input, cfg.seed, 0, *t_end, dt)?;
            let wr = channel(input, cfg.seed, 1, *t_end, dt)?;
            let n = params.grid_points;
            let w0 = match w0 {
                Some(w) => w.clone(),
                None => (0..n)
                    .map(|k| wl[0] + (wr[0] - wl[0]) * k as f64 / (n.max(2) - 1) as f64)
                    .collect(),
            };
            let speed = w0
                .iter()
                .map(|v| v.abs())
                .fold(input.map_or(0.0, InputConfig::max_abs), f64::max);
            simulate_burgers(params.params(speed), *observation, &w0, &wl, &wr, *t_end)?.series
        }
        SystemConfig::ExternalCsv { .. } => {
            bail!("external-csv systems are read by fit and predict, not simulated")
        }
    };
    let path = out.join("series.csv");
    write_series(&path, &series)?;
    SeriesManifest {
        samples: series.len(),
        dt: series.dt,
        m: series.m(),
        q: series.q(),
        seed: cfg.seed,
        system: cfg.system.clone(),
        input: cfg.input.clone(),
    }
    .save(&manifest_path(&path))?;
    println!("wrote {} samples to {}", series.len(), path.display());
    Ok(())
}

fn data_path(cfg: &RunConfig, common: &Common) -> Result<PathBuf> {
    if let Some(p) = &common.data {
        return Ok(p.clone());
    }
    match &cfg.system {
        Some(SystemConfig::ExternalCsv { path }) => Ok(path.clone()),
        _ => bail!("no series given: pass --data or use an external-csv system"),
    }
}

/// Reads the series and matches its inputs to the dictionary; autonomous
/// dictionaries ignore recorded inputs.
fn load_series(path: &Path, m: usize, q: usize) -> Result<ObservableSeries> {
    let series = read_series(path)?;
    ensure!(
        series.m() == m,
        "series has {} observables, the dictionary expects {m}",
        series.m()
    );
    if q == 0 && series.q() > 0 {
        return Ok(ObservableSeries::new(series.y, None, series.dt)?);
    }
    ensure!(
        series.q() == q,
        "series has {} inputs, the dictionary expects {q}",
        series.q()
    );
    Ok(series)
}

fn fit(cfg: &RunConfig, common: &Common, out: &Path) -> Result<()> {
    let spec = cfg
        .dictionary
        .as_ref()
        .context("fit needs a [dictionary] section")?
        .spec(cfg.seed)?;
    let fit_cfg = cfg.fit.as_ref().context("fit needs a [fit] section")?;
    let series = load_series(&data_path(cfg, common)?, spec.m, spec.q)?;
    let data = assemble(&series, &spec)?;
    let prep = PreparedFit::new(&data, fit_cfg.kind()?)?;
    let rank: Rank = fit_cfg.rank.into();
    let mut model = prep.fit(rank)?;
    model.dt = series.dt;
    for w in &model.warnings {
        eprintln!("warning: {w}");
    }
    let reduced = match fit_cfg.pod_rho {
        Some(rho) => Some(reduce(&model, &pod_basis(&data.gamma, rho)?)?),
        None => None,
    };
    let residual = training_residual(&model, &data)?;
    println!("family      {}", model.family.name());
    println!(
        "m q z b     {} {} {} {}",
        spec.m,
        spec.q,
        spec.z,
        spec.pre_lift_dim()?
    );
    println!("L           {}", model.lift_dim());
    println!("M           {}", model.delay_dim());
    println!("snapshots   {}", data.len());
    println!("rank        {} of {}", rank_label(rank), prep.max_rank());
    if let Some(r) = &reduced {
        println!(
            "pod rho     {} ({:.6} energy)",
            r.rho(),
            r.basis.energy_fraction
        );
    }
    println!("residual    {residual:.6e}");
    let path = out.join("model.koop");
    ModelArchive::new(model, reduced).save(&path)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn rank_label(rank: Rank) -> String {
    match rank {
        Rank::Full => "full".into(),
        Rank::Truncated(r) => r.to_string(),
    }
}

fn load_model(common: &Common) -> Result<ModelArchive> {
    let path = common
        .model
        .as_ref()
        .context("this command needs --model")?;
    ModelArchive::load(path)
}

/// Delay state seeded from `series` at sample `start`.
fn seed_state(model: &KoopmanModel, series: &ObservableSeries, start: usize) -> Result<Vec<f64>> {
    let z = model.spec.z;
    if start < z {
        return Err(KoopError::InsufficientHistory {
            index: start,
            needed: z,
        }
        .into());
    }
    ensure!(
        start < series.len(),
        "start index {start} is past the end of the series"
    );
    let history = series.y.col_block(start - z, start + 1);
    let past = match (&series.u, model.spec.q) {
        (Some(u), q) if q > 0 => Some(u.col_block(start - z, start)),
        _ => None,
    };
    Ok(delay_init(model, &history, past.as_ref())?)
}

fn predict(cfg: &RunConfig, common: &Common, out: &Path) -> Result<()> {
    let archive = load_model(common)?;
    let model = &archive.model;
    let pc = cfg
        .predict
        .as_ref()
        .context("predict needs a [predict] section")?;
    let series = load_series(&data_path(cfg, common)?, model.m(), model.spec.q)?;
    let start = pc.start.unwrap_or(model.spec.z);
    let steps = pc.steps;
    ensure!(
        start + steps < series.len(),
        "series has {} samples; start {start} plus {steps} steps runs past the end",
        series.len()
    );
    let g0 = seed_state(model, &series, start)?;
    let drive = series
        .u
        .as_ref()
        .filter(|_| model.spec.q > 0)
        .map(|u| u.col_block(start, start + steps));
    let traj = match &archive.reduced {
        Some(r) => rollout(r, &g0, drive.as_ref(), steps)?,
        None => rollout(model, &g0, drive.as_ref(), steps)?,
    };
    let m = model.m();
    let pred = traj.observables(m);
    let n = pred.cols();
    let truth = series.y.col_block(start, start + n);
    let dx = pc
        .dx
        .unwrap_or(if m > 1 { 1.0 / (m - 1) as f64 } else { 1.0 });
    let err = l2_error(&truth, &pred, dx)?;
    let time = |k: usize| (start + k) as f64 * series.dt;
    let mut header = series_header(m, 0);
    write_table(
        &out.join("prediction.csv"),
        &header,
        (0..n).map(|k| {
            std::iter::once(time(k))
                .chain(pred.col(k).iter().copied())
                .collect()
        }),
    )?;
    header.truncate(1);
    header.push("l2".into());
    write_table(
        &out.join("error.csv"),
        &header,
        err.iter().enumerate().map(|(k, e)| vec![time(k), *e]),
    )?;
    if let Some(step) = traj.diverged_at {
        return Err(KoopError::Diverged { step }.into());
    }
    let mean = err.iter().sum::<f64>() / err.len() as f64;
    println!("predicted {steps} steps from sample {start}; mean L2 error {mean:.6e}");
    Ok(())
}

/// Full delay state for an analysis starting point.
fn initial_state(
    model: &KoopmanModel,
    init: &InitialConfig,
    common: &Common,
    cfg: &RunConfig,
) -> Result<Vec<f64>> {
    match (&init.observables, init.start) {
        (Some(_), Some(_)) => bail!("give either initial.start or initial.observables, not both"),
        (Some(obs), None) => {
            ensure!(
                obs.len() == model.m(),
                "initial.observables needs {} values",
                model.m()
            );
            let z = model.spec.z;
            let hist = Matrix::from_fn(model.m(), z + 1, |i, _| obs[i])?;
            Ok(delay_init(model, &hist, None)?)
        }
        (None, start) => {
            let series = load_series(&data_path(cfg, common)?, model.m(), model.spec.q)
                .context("analysis needs initial.observables or a series to start from")?;
            seed_state(model, &series, start.unwrap_or(model.spec.z))
        }
    }
}

fn analyze(cfg: &RunConfig, common: &Common, task: Task, out: &Path) -> Result<()> {
    let archive = load_model(common)?;
    match &archive.reduced {
        Some(r) => analyze_with(cfg, common, task, out, &archive.model, r),
        None => analyze_with(cfg, common, task, out, &archive.model, &archive.model),
    }
}

fn cycle_of<D: Dynamics>(
    dynamics: &D,
    model: &KoopmanModel,
    cc: &CycleConfig,
    common: &Common,
    cfg: &RunConfig,
) -> Result<CycleResult> {
    let x0 = initial_state(model, &cc.initial, common, cfg)?;
    Ok(find_limit_cycle(
        dynamics,
        &x0,
        cc.observable,
        cc.threshold,
        cc.transient,
        cc.max_steps,
    )?)
}

/// `dynamics` is what gets iterated (the model or its reduction); `model`
/// supplies the dictionary for seeding states.
fn analyze_with<D: Dynamics>(
    cfg: &RunConfig,
    common: &Common,
    task: Task,
    out: &Path,
    model: &KoopmanModel,
    dynamics: &D,
) -> Result<()> {
    let names = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    match task {
        Task::Basins => {
            let bc = cfg
                .analysis
                .basins
                .as_ref()
                .context("basins needs [analysis.basins]")?;
            let (x1, x2) = (bc.x1.axis()?, bc.x2.axis()?);
            let map = basin_map(
                dynamics,
                |a, b| duffing_history_init(model, a, b),
                x1,
                x2,
                bc.u,
                bc.observable,
                bc.horizon,
                bc.settle_tol,
            )?;
            let rows = (0..x1.count)
                .flat_map(|i| (0..x2.count).map(move |j| (i, j)))
                .map(|(i, j)| vec![x1.value(i), x2.value(j), map.get(i, j)]);
            write_table(
                &out.join("basins.csv"),
                &names(&["x1", "x2", "label"]),
                rows,
            )?;
            println!("wrote {} basin cells", x1.count * x2.count);
        }
        Task::Cycle => {
            let cc = cfg.analysis.cycle.clone().unwrap_or_default();
            let cycle = cycle_of(dynamics, model, &cc, common, cfg)?;
            write_table(
                &out.join("cycle_summary.csv"),
                &names(&["period", "period_steps", "transient_steps", "converged"]),
                [vec![
                    cycle.period,
                    cycle.period_steps,
                    cycle.transient_steps as f64,
                    f64::from(u8::from(cycle.converged)),
                ]],
            )?;
            let m = model.m();
            let dt = dynamics.dt();
            let s = &cycle.samples;
            write_table(
                &out.join("cycle_orbit.csv"),
                &series_header(m, 0),
                (0..s.cols()).map(|k| {
                    std::iter::once(k as f64 * dt)
                        .chain(s.col(k)[..m].iter().copied())
                        .collect()
                }),
            )?;
            if !cycle.converged {
                return Err(KoopError::NoConvergence {
                    iterations: cc.max_steps,
                    reason: "no sustained oscillation".into(),
                }
                .into());
            }
            println!(
                "period {:.6} ({:.3} samples)",
                cycle.period, cycle.period_steps
            );
        }
        Task::Prc => {
            let pc = cfg
                .analysis
                .prc
                .as_ref()
                .context("prc needs [analysis.prc]")?;
            let cc = cfg.analysis.cycle.clone().unwrap_or_default();
            let cycle = cycle_of(dynamics, model, &cc, common, cfg)?;
            let pulse = Pulse {
                magnitude: pc.magnitude,
                duration: pc.duration,
                channel: pc.channel,
            };
            let points = estimate_prc(dynamics, &cycle, pulse, &phase_grid(pc.phases))?;
            write_table(
                &out.join("prc.csv"),
                &names(&["theta", "shift", "z"]),
                points.iter().map(|p| vec![p.theta, p.shift, p.z]),
            )?;
            println!(
                "wrote {} PRC points (period {:.6})",
                points.len(),
                cycle.period
            );
        }
        Task::FixedPoint => {
            let fc = cfg.analysis.fixed_point.clone().unwrap_or_default();
            let guess = initial_state(model, &fc.initial, common, cfg)?;
            let fp = find_fixed_point(model, fc.u, &guess, fc.tol)?;
            write_table(
                &out.join("fixed_point.csv"),
                &names(&["index", "value"]),
                fp.state.iter().enumerate().map(|(i, v)| vec![i as f64, *v]),
            )?;
            write_table(
                &out.join("fixed_point_eigenvalues.csv"),
                &names(&["re", "im", "modulus"]),
                fp.eigenvalues.iter().map(|l| vec![l.re, l.im, l.norm()]),
            )?;
            println!(
                "fixed point after {} iterations, residual {:.3e}, spectral radius {:.6}",
                fp.iterations,
                fp.residual,
                fp.spectral_radius()
            );
        }
        Task::Spectrum => {
            let series = load_series(&data_path(cfg, common)?, model.m(), model.spec.q)
                .context("spectrum needs the training series for mode amplitudes")?;
            let data = assemble(&series, &model.spec)?;
            let report = eigenmode_spectrum(model, &data)?;
            if report.nearly_defective() {
                eprintln!(
                    "warning: eigenvector matrix is nearly defective (condition {:.3e})",
                    report.condition
                );
            }
            write_table(
                &out.join("spectrum.csv"),
                &names(&["re", "im", "frequency", "amplitude"]),
                report
                    .modes
                    .iter()
                    .map(|m| vec![m.eigenvalue.re, m.eigenvalue.im, m.frequency, m.amplitude]),
            )?;
            println!("wrote {} eigenmodes", report.modes.len());
        }
    }
    Ok(())
}

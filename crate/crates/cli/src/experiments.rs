//! Figure sweeps on top of the core library.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use macrosync_core::dynamics::Diagnostics;
use macrosync_core::microscopic::{
    driven_steady_state, phase_distribution, sync_bitmap, BlockadeCell, PhaseGrid, RelativePhaseGrid,
};
use macrosync_core::signal::{
    analyze_two_groups, locking_map_from, spectrum, LockingCell, OrderWindow, Spectrum, TwoGroupProtocol,
};
use macrosync_core::stability::default_v_max;
use macrosync_core::{
    coherence_02, critical_coupling, default_initial, derive_equations, integrate, integrate_cumulant,
    integrate_with_states, lifetime, spectral_abscissa, Closure, Group, GroupSize, MeanFieldState, ModelParams64,
    MomentState, Trajectory64,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{apply_sweep, ExperimentConfig, ExperimentId, SweepParam};
use crate::error::{CliError, CliResult};
use crate::output::{fmt_e12, Cell, Table};
use crate::svg::{render, ColorScale, Heatmap};

/// A run fails when more than this fraction of its cells fail.
pub const FAILURE_BUDGET: f64 = 0.01;

#[derive(Clone, Debug, PartialEq)]
pub struct OutputFile {
    pub name: String,
    pub contents: String,
}

/// Run bookkeeping stored next to the payload.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunInfo {
    pub version: String,
    pub wall_time_s: f64,
    pub cells: usize,
    pub failed_cells: usize,
    pub failures: Vec<String>,
    /// Worst per-sample invariant violations over all mean-field integrations of the run.
    pub max_trace_error: f64,
    pub max_hermiticity_error: f64,
    pub min_eigenvalue: f64,
    pub notes: BTreeMap<String, String>,
}

impl Default for RunInfo {
    fn default() -> Self {
        Self {
            version: env!("CARGO_PKG_VERSION").into(),
            wall_time_s: 0.0,
            cells: 0,
            failed_cells: 0,
            failures: Vec::new(),
            max_trace_error: 0.0,
            max_hermiticity_error: 0.0,
            min_eigenvalue: 1.0,
            notes: BTreeMap::new(),
        }
    }
}

impl RunInfo {
    fn absorb(&mut self, d: &Diagnostics<f64>) {
        self.max_trace_error = self.max_trace_error.max(d.max_trace_error);
        self.max_hermiticity_error = self.max_hermiticity_error.max(d.max_hermiticity_error);
        self.min_eigenvalue = self.min_eigenvalue.min(d.min_eigenvalue);
    }

    fn cell<T>(&mut self, label: impl FnOnce() -> String, r: &macrosync_core::Result<T>) {
        self.cells += 1;
        if let Err(e) = r {
            self.failed_cells += 1;
            self.failures.push(format!("{}: {e}", label()));
        }
    }

    fn note(&mut self, key: &str, value: impl ToString) {
        self.notes.insert(key.into(), value.to_string());
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResultBundle {
    pub config: ExperimentConfig,
    pub files: Vec<OutputFile>,
    pub run: RunInfo,
}

#[derive(Serialize)]
struct MetadataFile<'a> {
    config: &'a ExperimentConfig,
    run: &'a RunInfo,
}

impl ResultBundle {
    pub fn metadata_name(&self) -> String {
        format!("{}_metadata.toml", self.config.experiment.name())
    }

    /// TOML with a `[config]` table (loadable as a config file) and a `[run]` table.
    pub fn metadata_toml(&self) -> String {
        toml::to_string(&MetadataFile { config: &self.config, run: &self.run }).expect("metadata serializes")
    }

    pub fn file(&self, name: &str) -> Option<&str> {
        self.files.iter().find(|f| f.name == name).map(|f| f.contents.as_str())
    }

    /// Fails when more than [`FAILURE_BUDGET`] of the cells failed.
    pub fn check_budget(&self) -> CliResult<()> {
        if self.run.cells > 0 && self.run.failed_cells as f64 > FAILURE_BUDGET * self.run.cells as f64 {
            return Err(CliError::Simulation(format!(
                "{} of {} cells failed; first: {}",
                self.run.failed_cells,
                self.run.cells,
                self.run.failures.first().map(String::as_str).unwrap_or("")
            )));
        }
        Ok(())
    }

    pub fn write(&self, dir: &Path) -> CliResult<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut paths = Vec::new();
        for f in &self.files {
            let p = dir.join(&f.name);
            std::fs::write(&p, &f.contents)?;
            paths.push(p);
        }
        let p = dir.join(self.metadata_name());
        std::fs::write(&p, self.metadata_toml())?;
        paths.push(p);
        Ok(paths)
    }
}

/// Runs the configured sweep on a pool of `cfg.workers` threads.
pub fn run(cfg: &ExperimentConfig) -> CliResult<ResultBundle> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| CliError::Config(format!("worker pool: {e}")))?;
    let start = Instant::now();
    let mut run = RunInfo::default();
    let files = pool.install(|| dispatch(cfg, &mut run))?;
    run.wall_time_s = start.elapsed().as_secs_f64();
    Ok(ResultBundle { config: cfg.clone(), files, run })
}

/// [`run`], then writes the payload and metadata to `cfg.out_dir` and applies the failure budget.
pub fn execute(cfg: &ExperimentConfig) -> CliResult<ResultBundle> {
    let bundle = run(cfg)?;
    bundle.write(Path::new(&cfg.out_dir))?;
    bundle.check_budget()?;
    Ok(bundle)
}

fn dispatch(cfg: &ExperimentConfig, run: &mut RunInfo) -> CliResult<Vec<OutputFile>> {
    match cfg.experiment {
        ExperimentId::Fig2a => fig2a(cfg, run),
        ExperimentId::Fig2b => fig2b(cfg, run),
        ExperimentId::Fig2c => fig2c(cfg, run),
        ExperimentId::Fig2d => fig2d(cfg, run),
        ExperimentId::Fig3 | ExperimentId::Fig4 => locking_experiment(cfg, run),
        ExperimentId::FigS1 => fig_s1(cfg, run),
        ExperimentId::FigS2 | ExperimentId::FigS3 => spectra_experiment(cfg, run),
        ExperimentId::FigS4 => fig_s4(cfg, run),
        ExperimentId::Custom => custom(cfg, run),
    }
}

fn csv(cfg: &ExperimentConfig, suffix: &str, table: &Table) -> OutputFile {
    OutputFile { name: format!("{}{suffix}.csv", cfg.experiment.name()), contents: table.render() }
}

fn svg(cfg: &ExperimentConfig, suffix: &str, map: &Heatmap, scale: ColorScale) -> CliResult<OutputFile> {
    Ok(OutputFile { name: format!("{}{suffix}.svg", cfg.experiment.name()), contents: render(map, scale)? })
}

fn initial_state(cfg: &ExperimentConfig) -> MeanFieldState<f64> {
    MeanFieldState { rho_a: default_initial(cfg.initial.a.into()), rho_b: default_initial(cfg.initial.b.into()) }
}

fn order_window(cfg: &ExperimentConfig) -> OrderWindow<f64> {
    match cfg.analysis.order_last {
        0 => OrderWindow::Fraction(cfg.analysis.order_fraction),
        n => OrderWindow::LastSamples(n),
    }
}

fn order_of(cfg: &ExperimentConfig, traj: &Trajectory64, g: Group) -> macrosync_core::Result<f64> {
    match order_window(cfg) {
        OrderWindow::Fraction(f) => macrosync_core::order_parameter(traj, g, f),
        OrderWindow::LastSamples(n) => macrosync_core::order_parameter_last(traj, g, n.min(traj.len())),
    }
}

fn protocol(cfg: &ExperimentConfig) -> TwoGroupProtocol<f64> {
    TwoGroupProtocol {
        integrator: cfg.integrator.config(),
        spectrum_fraction: cfg.analysis.spectrum_fraction,
        order_window: order_window(cfg),
        sync_threshold: cfg.analysis.sync_threshold,
    }
}

/// Row-major `(y, x)` grid of parameter points.
struct Grid {
    x_param: SweepParam,
    y_param: SweepParam,
    xs: Vec<f64>,
    ys: Vec<f64>,
    points: Vec<ModelParams64>,
}

impl Grid {
    fn new(cfg: &ExperimentConfig) -> Self {
        let (x, y) = (cfg.x.expect("validated"), cfg.y.expect("validated"));
        let xs = x.values(cfg.resolution_scale);
        let ys = y.values(cfg.resolution_scale);
        let base = cfg.params.model();
        let points = ys
            .iter()
            .flat_map(|&yv| xs.iter().map(move |&xv| (xv, yv)))
            .map(|(xv, yv)| apply_sweep(&base, &[(x.param, xv), (y.param, yv)]))
            .collect();
        Self { x_param: x.param, y_param: y.param, xs, ys, points }
    }

    fn coords(&self, idx: usize) -> (f64, f64) {
        (self.xs[idx % self.xs.len()], self.ys[idx / self.xs.len()])
    }

    fn label(&self, idx: usize) -> String {
        let (x, y) = self.coords(idx);
        format!("{}={x}, {}={y}", self.x_param.name(), self.y_param.name())
    }

    fn heatmap(&self, values: impl Fn(usize) -> f64) -> Heatmap {
        let nx = self.xs.len();
        Heatmap {
            xs: self.xs.clone(),
            ys: self.ys.clone(),
            values: (0..self.ys.len()).map(|i| (0..nx).map(|j| values(i * nx + j)).collect()).collect(),
            x_label: self.x_param.name().into(),
            y_label: self.y_param.name().into(),
        }
    }
}

fn fig2a(cfg: &ExperimentConfig, run: &mut RunInfo) -> CliResult<Vec<OutputFile>> {
    let series = cfg.series.as_ref().expect("validated");
    let base = cfg.params.model();
    let init = initial_state(cfg);
    let mut table = Table::new(&[series.param.name(), "t", "re_splus", "im_splus", "re_coherence_02", "im_coherence_02"]);
    for &s in &series.values {
        let p = apply_sweep(&base, &[(series.param, s)]);
        let traj = integrate_with_states(&p, &init, &cfg.integrator.config());
        run.cell(|| format!("{}={s}", series.param.name()), &traj);
        let traj = traj?;
        run.absorb(&traj.diagnostics);
        let coh = coherence_02(&traj, Group::A)?;
        for (k, &t) in traj.times.iter().enumerate() {
            let a = traj.amps_a[k];
            table.push(vec![s.into(), t.into(), a.re.into(), a.im.into(), coh[k].re.into(), coh[k].im.into()]);
        }
        run.note(&format!("order_parameter[{}={s}]", series.param.name()), fmt_e12(order_of(cfg, &traj, Group::A)?));
    }
    Ok(vec![csv(cfg, "", &table)])
}

fn fig2b(cfg: &ExperimentConfig, run: &mut RunInfo) -> CliResult<Vec<OutputFile>> {
    let axis = cfg.x.expect("validated");
    let base = cfg.params.model();
    let init = initial_state(cfg);
    let xs = axis.values(cfg.resolution_scale);
    let window = cfg.analysis.order_fraction;
    let results: Vec<macrosync_core::Result<(ModelParams64, f64, f64, f64, Diagnostics<f64>)>> = xs
        .par_iter()
        .map(|&x| {
            let p = apply_sweep(&base, &[(axis.param, x)]);
            let traj = integrate_with_states(&p, &init, &cfg.integrator.config())?;
            let op = order_of(cfg, &traj, Group::A)?;
            let coh = coherence_02(&traj, Group::A)?;
            let tail = ((coh.len() as f64 * window).round() as usize).clamp(1, coh.len());
            let coh_mean = coh[coh.len() - tail..].iter().map(|z| z.norm()).sum::<f64>() / tail as f64;
            let abscissa = spectral_abscissa(&p)?.spectral_abscissa;
            Ok((p, op, coh_mean, abscissa, traj.diagnostics))
        })
        .collect();
    let mut table = Table::new(&[axis.param.name(), "v", "order_parameter", "coherence_02_mean", "spectral_abscissa"]);
    for (&x, r) in xs.iter().zip(&results) {
        run.cell(|| format!("{}={x}", axis.param.name()), r);
        match r {
            Ok((p, op, coh, abs, d)) => {
                run.absorb(d);
                table.push(vec![x.into(), p.v.into(), (*op).into(), (*coh).into(), (*abs).into()]);
            }
            Err(_) => table.push(vec![x.into(), f64::NAN.into(), f64::NAN.into(), f64::NAN.into(), f64::NAN.into()]),
        }
    }
    let vc = critical_coupling(&base, default_v_max(&base))?;
    run.note("critical_coupling", vc.map_or("none".to_string(), fmt_e12));
    Ok(vec![csv(cfg, "", &table)])
}

fn fig2c(cfg: &ExperimentConfig, run: &mut RunInfo) -> CliResult<Vec<OutputFile>> {
    let grid = Grid::new(cfg);
    let init = initial_state(cfg);
    let results: Vec<macrosync_core::Result<(f64, Diagnostics<f64>)>> = grid
        .points
        .par_iter()
        .map(|p| {
            let traj = integrate(p, &init, &cfg.integrator.config())?;
            Ok((order_of(cfg, &traj, Group::A)?, traj.diagnostics))
        })
        .collect();
    let mut table = Table::new(&[grid.x_param.name(), grid.y_param.name(), "order_parameter"]);
    let mut values = Vec::with_capacity(results.len());
    for (idx, r) in results.iter().enumerate() {
        run.cell(|| grid.label(idx), r);
        let (x, y) = grid.coords(idx);
        let op = match r {
            Ok((op, d)) => {
                run.absorb(d);
                *op
            }
            Err(_) => f64::NAN,
        };
        values.push(op);
        table.push(vec![x.into(), y.into(), op.into()]);
    }

    // critical coupling curves along the y axis, one per series value
    let series = cfg.series.clone().unwrap_or(crate::config::Series { param: SweepParam::KRatio, values: vec![0.0] });
    let base = cfg.params.model();
    let y_param = grid.y_param;
    let jobs: Vec<(f64, f64)> = series.values.iter().flat_map(|&s| grid.ys.iter().map(move |&y| (s, y))).collect();
    let curves: Vec<macrosync_core::Result<Option<f64>>> = jobs
        .par_iter()
        .map(|&(s, y)| {
            let p = apply_sweep(&base, &[(y_param, y), (series.param, s)]);
            critical_coupling(&p, default_v_max(&p))
        })
        .collect();
    let mut vc = Table::new(&[series.param.name(), y_param.name(), "critical_coupling"]);
    for (&(s, y), r) in jobs.iter().zip(&curves) {
        run.cell(|| format!("critical coupling at {}={s}, {}={y}", series.param.name(), y_param.name()), r);
        let v = match r {
            Ok(Some(v)) => *v,
            _ => f64::NAN,
        };
        vc.push(vec![s.into(), y.into(), v.into()]);
    }
    let map = grid.heatmap(|i| values[i]);
    Ok(vec![csv(cfg, "", &table), csv(cfg, "_critical", &vc), svg(cfg, "", &map, ColorScale::Gray)?])
}

fn fig2d(cfg: &ExperimentConfig, run: &mut RunInfo) -> CliResult<Vec<OutputFile>> {
    let series = cfg.series.as_ref().expect("validated");
    let base = cfg.params.model();
    let outer: Vec<(SweepParam, f64)> = match cfg.y {
        Some(y) => y.values(cfg.resolution_scale).into_iter().map(|v| (y.param, v)).collect(),
        None => vec![(SweepParam::GammaPlus, base.gamma_plus)],
    };
    let grid = PhaseGrid { theta_nodes: cfg.analysis.theta_nodes, phi_points: cfg.analysis.phi_points };
    let mut table = Table::new(&[outer[0].0.name(), series.param.name(), "phi", "s"]);
    for &(op, ov) in &outer {
        for &s in &series.values {
            let p = apply_sweep(&base, &[(op, ov), (series.param, s)]);
            let dist = driven_steady_state(&p).and_then(|rho| phase_distribution(&rho, grid));
            run.cell(|| format!("{}={ov}, {}={s}", op.name(), series.param.name()), &dist);
            let dist = dist?;
            for (&phi, &v) in dist.phis.iter().zip(&dist.values) {
                table.push(vec![ov.into(), s.into(), phi.into(), v.into()]);
            }
            let (phi_max, _) = dist.peak();
            run.note(&format!("peak_phi[{}={ov}, {}={s}]", op.name(), series.param.name()), fmt_e12(phi_max));
            run.note(&format!("normalization[{}={ov}, {}={s}]", op.name(), series.param.name()), fmt_e12(dist.normalization));
        }
    }
    Ok(vec![csv(cfg, "", &table)])
}

fn opt(x: Option<f64>) -> Cell {
    Cell::Num(x.unwrap_or(f64::NAN))
}

fn locking_row(x: f64, y: f64, r: &macrosync_core::Result<LockingCell<f64>>, threshold: f64) -> Vec<Cell> {
    match r {
        Ok(c) => vec![
            x.into(),
            y.into(),
            c.order_a.into(),
            c.order_b.into(),
            opt(c.omega_a),
            opt(c.omega_b),
            opt(c.frequency_difference(threshold)),
            opt(c.synchronized(threshold).then_some(c.relative_phase)),
            c.bin_width.into(),
            0usize.into(),
        ],
        Err(_) => {
            let mut row = vec![x.into(), y.into()];
            row.extend(std::iter::repeat(Cell::Num(f64::NAN)).take(7));
            row.push(1usize.into());
            row
        }
    }
}

const LOCKING_HEADER: [&str; 8] =
    ["order_a", "order_b", "omega_a", "omega_b", "frequency_difference", "relative_phase", "bin_width", "failed"];

fn locking_experiment(cfg: &ExperimentConfig, run: &mut RunInfo) -> CliResult<Vec<OutputFile>> {
    let grid = Grid::new(cfg);
    let proto = protocol(cfg);
    let cells = locking_map_from(&grid.points, &initial_state(cfg), &proto);
    let mut header = vec![grid.x_param.name(), grid.y_param.name()];
    header.extend(LOCKING_HEADER);
    let mut table = Table::new(&header);
    for (idx, r) in cells.iter().enumerate() {
        run.cell(|| grid.label(idx), r);
        if let Ok(c) = r {
            run.absorb(&c.diagnostics);
        }
        let (x, y) = grid.coords(idx);
        table.push(locking_row(x, y, r, proto.sync_threshold));
    }
    let th = proto.sync_threshold;
    let get = |f: &dyn Fn(&LockingCell<f64>) -> Option<f64>| {
        grid.heatmap(|i| cells[i].as_ref().ok().and_then(f).unwrap_or(f64::NAN))
    };
    let diff = get(&|c| c.frequency_difference(th));
    let order = get(&|c| Some(c.order_a.min(c.order_b)));
    let phase = get(&|c| c.synchronized(th).then_some(c.relative_phase));
    Ok(vec![
        csv(cfg, "", &table),
        svg(cfg, "_frequency_difference", &diff, ColorScale::Diverging)?,
        svg(cfg, "_order_parameter", &order, ColorScale::Gray)?,
        svg(cfg, "_relative_phase", &phase, ColorScale::Diverging)?,
    ])
}

fn fig_s1(cfg: &ExperimentConfig, run: &mut RunInfo) -> CliResult<Vec<OutputFile>> {
    let grid = Grid::new(cfg);
    let a = &cfg.analysis;
    let rel = RelativePhaseGrid {
        theta_a: a.relative_theta_nodes,
        theta_b: a.relative_theta_nodes,
        phi_b: a.relative_phi_b_points,
        phi_ab: a.relative_phi_points,
    };
    let cells = sync_bitmap(&grid.points, rel, a.phase_threshold);
    let mut table = Table::new(&[grid.x_param.name(), grid.y_param.name(), "max", "argmax", "sync", "failed"]);
    for (idx, r) in cells.iter().enumerate() {
        run.cell(|| grid.label(idx), r);
        let (x, y) = grid.coords(idx);
        table.push(match r {
            Ok(BlockadeCell { max, argmax, sync }) => {
                vec![x.into(), y.into(), (*max).into(), (*argmax).into(), (*sync).into(), 0usize.into()]
            }
            Err(_) => vec![x.into(), y.into(), f64::NAN.into(), f64::NAN.into(), 0usize.into(), 1usize.into()],
        });
    }
    let field = |f: fn(&BlockadeCell<f64>) -> f64| grid.heatmap(|i| cells[i].as_ref().map(f).unwrap_or(f64::NAN));
    Ok(vec![
        csv(cfg, "", &table),
        svg(cfg, "_max", &field(|c| c.max), ColorScale::Gray)?,
        svg(cfg, "_argmax", &field(|c| c.argmax), ColorScale::Gray)?,
        svg(cfg, "_bitmap", &field(|c| if c.sync { 1.0 } else { 0.0 }), ColorScale::Gray)?,
    ])
}

type SpectraCell = (LockingCell<f64>, Spectrum<f64>, Spectrum<f64>);

fn spectra_experiment(cfg: &ExperimentConfig, run: &mut RunInfo) -> CliResult<Vec<OutputFile>> {
    let axis = cfg.x.expect("validated");
    let series = cfg.series.as_ref().expect("validated");
    let base = cfg.params.model();
    let proto = protocol(cfg);
    let init = initial_state(cfg);
    let xs = axis.values(cfg.resolution_scale);
    let jobs: Vec<(f64, f64)> = series.values.iter().flat_map(|&s| xs.iter().map(move |&x| (s, x))).collect();
    let results: Vec<macrosync_core::Result<SpectraCell>> = jobs
        .par_iter()
        .map(|&(s, x)| {
            let p = apply_sweep(&base, &[(series.param, s), (axis.param, x)]);
            let traj = integrate(&p, &init, &proto.integrator)?;
            let cell = analyze_two_groups(&traj, &proto)?;
            let sa = spectrum(&traj, Group::A, proto.spectrum_fraction)?;
            let sb = spectrum(&traj, Group::B, proto.spectrum_fraction)?;
            Ok((cell, sa, sb))
        })
        .collect();
    let mut header = vec![series.param.name(), axis.param.name()];
    header.extend(LOCKING_HEADER);
    let mut summary = Table::new(&header);
    let mut spectra = Table::new(&[series.param.name(), axis.param.name(), "omega", "p_a", "p_b"]);
    let band = cfg.analysis.omega_max;
    for (&(s, x), r) in jobs.iter().zip(&results) {
        run.cell(|| format!("{}={s}, {}={x}", series.param.name(), axis.param.name()), r);
        let cell = r.as_ref().map(|t| t.0).map_err(|e| macrosync_core::Error::InvalidParameter(e.to_string()));
        summary.push(locking_row(s, x, &cell, proto.sync_threshold));
        if let Ok((c, sa, sb)) = r {
            run.absorb(&c.diagnostics);
            for ((&w, &pa), &pb) in sa.freqs.iter().zip(&sa.mags).zip(&sb.mags) {
                if w.abs() <= band {
                    spectra.push(vec![s.into(), x.into(), w.into(), pa.into(), pb.into()]);
                }
            }
        }
    }
    Ok(vec![csv(cfg, "", &summary), csv(cfg, "_spectra", &spectra)])
}

fn fig_s4(cfg: &ExperimentConfig, run: &mut RunInfo) -> CliResult<Vec<OutputFile>> {
    let c = cfg.cumulant.as_ref().expect("validated");
    let base = cfg.params.model();
    let rho0 = default_initial::<f64>(cfg.initial.a.into());
    let init = MomentState::product(&rho0)?;
    let icfg = cfg.integrator.config();
    let size = |n: usize| if n == 0 { GroupSize::Infinite } else { GroupSize::Finite(n) };
    let closure = |n: usize| if n == 0 { Closure::Factorized } else { Closure::SecondOrder };

    let jobs: Vec<(f64, usize)> = c.v_values.iter().flat_map(|&v| c.n_values.iter().map(move |&n| (v, n))).collect();
    let lifetimes: Vec<macrosync_core::Result<Option<f64>>> = jobs
        .par_iter()
        .map(|&(v, n)| {
            let p = ModelParams64 { v, ..base };
            let sys = derive_equations(&p, size(n))?;
            let tr = integrate_cumulant(&sys, &init, &icfg, closure(n))?;
            lifetime(&tr.times, &tr.abs_amplitude())
        })
        .collect();
    let mut table = Table::new(&["n", "v", "lifetime"]);
    for (&(v, n), r) in jobs.iter().zip(&lifetimes) {
        run.cell(|| format!("n={n}, v={v}"), r);
        let t = match r {
            Ok(Some(t)) => *t,
            _ => f64::NAN,
        };
        table.push(vec![n.into(), v.into(), t.into()]);
    }

    // time series: requested sizes at series_v, plus the uncoupled reference
    let mut series_jobs: Vec<(f64, usize)> = c.series_n.iter().map(|&n| (c.series_v, n)).collect();
    series_jobs.push((0.0, 0));
    let traces: Vec<_> = series_jobs
        .par_iter()
        .map(|&(v, n)| {
            let p = ModelParams64 { v, ..base };
            let sys = derive_equations(&p, size(n))?;
            integrate_cumulant(&sys, &init, &icfg, closure(n))
        })
        .collect();
    let mut ts = Table::new(&["n", "v", "t", "abs_splus"]);
    for (&(v, n), r) in series_jobs.iter().zip(&traces) {
        run.cell(|| format!("series n={n}, v={v}"), r);
        if let Ok(tr) = r {
            for (&t, a) in tr.times.iter().zip(tr.abs_amplitude()) {
                ts.push(vec![n.into(), v.into(), t.into(), a.into()]);
            }
        }
    }
    run.note("lifetime_reference", "initial amplitude |<S+>|(0)");
    run.note("lifetime_reference_value", fmt_e12(init.amplitude().norm()));
    run.note("lifetime_confirmation_samples", macrosync_core::cumulant::LIFETIME_CONFIRMATION);
    run.note("series_n_zero", "mean-field limit (factorized closure)");
    Ok(vec![csv(cfg, "", &table), csv(cfg, "_series", &ts)])
}

fn custom(cfg: &ExperimentConfig, run: &mut RunInfo) -> CliResult<Vec<OutputFile>> {
    let p = cfg.params.model();
    let traj = integrate(&p, &initial_state(cfg), &cfg.integrator.config());
    run.cell(|| "single point".into(), &traj);
    let traj = traj?;
    run.absorb(&traj.diagnostics);
    let mut table = Table::new(&["t", "re_splus_a", "im_splus_a", "re_splus_b", "im_splus_b"]);
    for (k, &t) in traj.times.iter().enumerate() {
        let (a, b) = (traj.amps_a[k], traj.amps_b[k]);
        table.push(vec![t.into(), a.re.into(), a.im.into(), b.re.into(), b.im.into()]);
    }
    run.note("order_parameter_a", fmt_e12(order_of(cfg, &traj, Group::A)?));
    run.note("order_parameter_b", fmt_e12(order_of(cfg, &traj, Group::B)?));
    Ok(vec![csv(cfg, "", &table)])
}

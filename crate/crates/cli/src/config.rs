//! Experiment configuration: per-figure defaults, TOML overlay, `key=value` overrides.

use std::path::Path;

use macrosync_core::{InitialKind, IntegratorConfig64, ModelParams64};
use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::error::{CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExperimentId {
    #[serde(rename = "fig2a")]
    Fig2a,
    #[serde(rename = "fig2b")]
    Fig2b,
    #[serde(rename = "fig2c")]
    Fig2c,
    #[serde(rename = "fig2d")]
    Fig2d,
    #[serde(rename = "fig3")]
    Fig3,
    #[serde(rename = "fig4")]
    Fig4,
    #[serde(rename = "figS1")]
    FigS1,
    #[serde(rename = "figS2")]
    FigS2,
    #[serde(rename = "figS3")]
    FigS3,
    #[serde(rename = "figS4")]
    FigS4,
    #[serde(rename = "custom")]
    Custom,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 11] = [
        Self::Fig2a,
        Self::Fig2b,
        Self::Fig2c,
        Self::Fig2d,
        Self::Fig3,
        Self::Fig4,
        Self::FigS1,
        Self::FigS2,
        Self::FigS3,
        Self::FigS4,
        Self::Custom,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Fig2a => "fig2a",
            Self::Fig2b => "fig2b",
            Self::Fig2c => "fig2c",
            Self::Fig2d => "fig2d",
            Self::Fig3 => "fig3",
            Self::Fig4 => "fig4",
            Self::FigS1 => "figS1",
            Self::FigS2 => "figS2",
            Self::FigS3 => "figS3",
            Self::FigS4 => "figS4",
            Self::Custom => "custom",
        }
    }

    pub fn parse(s: &str) -> CliResult<Self> {
        Self::ALL
            .into_iter()
            .find(|id| id.name() == s)
            .ok_or_else(|| CliError::Config(format!("unknown experiment '{s}'")))
    }
}

/// Parameter an axis or series sweeps over. The `*_ratio` variants are in units of `γ₋ + γ₊`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    Delta,
    K,
    V,
    VAb,
    GammaPlus,
    GammaMinus,
    Omega,
    KRatio,
    VRatio,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            Self::Delta => "delta",
            Self::K => "k",
            Self::V => "v",
            Self::VAb => "v_ab",
            Self::GammaPlus => "gamma_plus",
            Self::GammaMinus => "gamma_minus",
            Self::Omega => "omega",
            Self::KRatio => "k_ratio",
            Self::VRatio => "v_ratio",
        }
    }

    fn is_ratio(self) -> bool {
        matches!(self, Self::KRatio | Self::VRatio)
    }
}

/// Sets swept parameters on top of `base`; absolute values first, then ratios.
pub fn apply_sweep(base: &ModelParams64, assignments: &[(SweepParam, f64)]) -> ModelParams64 {
    let mut p = *base;
    for &(param, x) in assignments.iter().filter(|(q, _)| !q.is_ratio()) {
        match param {
            SweepParam::Delta => p.delta = x,
            SweepParam::K => p.k = x,
            SweepParam::V => p.v = x,
            SweepParam::VAb => p.v_ab = x,
            SweepParam::GammaPlus => p.gamma_plus = x,
            SweepParam::GammaMinus => p.gamma_minus = x,
            SweepParam::Omega => p.omega = x,
            SweepParam::KRatio | SweepParam::VRatio => unreachable!(),
        }
    }
    let total = p.gamma_minus + p.gamma_plus;
    for &(param, x) in assignments.iter().filter(|(q, _)| q.is_ratio()) {
        match param {
            SweepParam::KRatio => p.k = x * total,
            SweepParam::VRatio => p.v = x * total,
            _ => unreachable!(),
        }
    }
    p
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub param: SweepParam,
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl Axis {
    fn new(param: SweepParam, min: f64, max: f64, points: usize) -> Self {
        Self { param, min, max, points }
    }

    /// Point count after applying the resolution scale (at least 2).
    pub fn scaled_points(&self, scale: f64) -> usize {
        ((self.points as f64 * scale).round() as usize).max(2)
    }

    /// Uniform grid including both ends.
    pub fn values(&self, scale: f64) -> Vec<f64> {
        let n = self.scaled_points(scale);
        (0..n).map(|i| self.min + (self.max - self.min) * i as f64 / (n - 1) as f64).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Series {
    pub param: SweepParam,
    pub values: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ParamsSection {
    pub delta: f64,
    pub k: f64,
    pub v: f64,
    pub v_ab: f64,
    pub gamma_plus: f64,
    pub gamma_minus: f64,
    pub omega: f64,
}

impl Default for ParamsSection {
    fn default() -> Self {
        Self::from(ModelParams64::default())
    }
}

impl From<ModelParams64> for ParamsSection {
    fn from(p: ModelParams64) -> Self {
        Self {
            delta: p.delta,
            k: p.k,
            v: p.v,
            v_ab: p.v_ab,
            gamma_plus: p.gamma_plus,
            gamma_minus: p.gamma_minus,
            omega: p.omega,
        }
    }
}

impl ParamsSection {
    pub fn model(&self) -> ModelParams64 {
        ModelParams64 {
            delta: self.delta,
            k: self.k,
            v: self.v,
            v_ab: self.v_ab,
            gamma_plus: self.gamma_plus,
            gamma_minus: self.gamma_minus,
            omega: self.omega,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSection {
    pub t_final: f64,
    pub n_samples: usize,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
}

impl IntegratorSection {
    fn new(t_final: f64, n_samples: usize) -> Self {
        let d = IntegratorConfig64::new(t_final, n_samples);
        Self { t_final, n_samples, rel_tol: d.rel_tol, abs_tol: d.abs_tol, max_step: d.max_step }
    }

    pub fn config(&self) -> IntegratorConfig64 {
        IntegratorConfig64 {
            t_final: self.t_final,
            n_samples: self.n_samples,
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            max_step: self.max_step,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialState {
    Perturbed,
    Uniform,
    PerturbedComplex,
}

impl From<InitialState> for InitialKind {
    fn from(s: InitialState) -> Self {
        match s {
            InitialState::Perturbed => InitialKind::Perturbed,
            InitialState::Uniform => InitialKind::Uniform,
            InitialState::PerturbedComplex => InitialKind::PerturbedComplex,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    pub a: InitialState,
    pub b: InitialState,
}

/// Averaging windows, thresholds and quadrature sizes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisSection {
    /// Trailing fraction of samples used for spectra.
    pub spectrum_fraction: f64,
    /// Trailing fraction of samples for the order parameter (used when `order_last` is 0).
    pub order_fraction: f64,
    /// Trailing sample count for the order parameter; 0 selects `order_fraction`.
    pub order_last: usize,
    /// Order parameter below which a group counts as unsynchronized.
    pub sync_threshold: f64,
    /// Threshold on the relative-phase peak for the microscopic bitmap.
    pub phase_threshold: f64,
    /// Spectra are written only for `|ω| ≤ omega_max`.
    pub omega_max: f64,
    pub theta_nodes: usize,
    pub phi_points: usize,
    pub relative_theta_nodes: usize,
    pub relative_phi_b_points: usize,
    pub relative_phi_points: usize,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        let rel = macrosync_core::microscopic::RelativePhaseGrid::default();
        let single = macrosync_core::microscopic::PhaseGrid::default();
        Self {
            spectrum_fraction: 0.5,
            order_fraction: 0.5,
            order_last: 0,
            sync_threshold: macrosync_core::signal::NO_SYNC_THRESHOLD,
            phase_threshold: macrosync_core::microscopic::SYNC_THRESHOLD,
            omega_max: 5.0,
            theta_nodes: single.theta_nodes,
            phi_points: single.phi_points,
            relative_theta_nodes: rel.theta_a,
            relative_phi_b_points: rel.phi_b,
            relative_phi_points: rel.phi_ab,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CumulantSection {
    /// Group sizes for the lifetime table.
    pub n_values: Vec<usize>,
    /// Couplings `V/γ₋` for the lifetime table.
    pub v_values: Vec<f64>,
    /// Group sizes for the time-series output; 0 stands for the mean-field limit.
    pub series_n: Vec<usize>,
    /// Coupling for the time-series output.
    pub series_v: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentId,
    pub out_dir: String,
    /// Worker threads; 0 uses all available cores.
    pub workers: usize,
    /// Multiplies the point count of every axis (desk-scale runs).
    pub resolution_scale: f64,
    pub params: ParamsSection,
    pub integrator: IntegratorSection,
    pub initial: InitialSection,
    #[serde(default)]
    pub analysis: AnalysisSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<Axis>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<Axis>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub series: Option<Series>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cumulant: Option<CumulantSection>,
}

/// Order parameter window of the Fig. 2(b) protocol.
pub const FIG2B_ORDER_FRACTION: f64 = 0.5;
/// Order parameter window of the Fig. 2(c) and Fig. 4 protocols.
pub const MAP_ORDER_LAST: usize = 1000;

impl ExperimentConfig {
    /// Protocol defaults for `id`, in units of `γ₋`.
    pub fn defaults(id: ExperimentId) -> Self {
        use SweepParam as P;
        let half = ModelParams64 { gamma_plus: 0.5, ..ModelParams64::default() };
        let perturbed = InitialSection { a: InitialState::Perturbed, b: InitialState::Perturbed };
        let two_group = InitialSection { a: InitialState::Perturbed, b: InitialState::Uniform };
        let mut cfg = Self {
            experiment: id,
            out_dir: "out".into(),
            workers: 0,
            resolution_scale: 1.0,
            params: half.into(),
            integrator: IntegratorSection::new(100.0, 1001),
            initial: perturbed,
            analysis: AnalysisSection::default(),
            x: None,
            y: None,
            series: None,
            cumulant: None,
        };
        match id {
            ExperimentId::Fig2a => {
                cfg.initial = InitialSection { a: InitialState::PerturbedComplex, b: InitialState::PerturbedComplex };
                cfg.series = Some(Series { param: P::VRatio, values: vec![0.2, 0.6] });
            }
            ExperimentId::Fig2b => {
                cfg.integrator = IntegratorSection::new(5000.0, 5000);
                cfg.analysis.order_fraction = FIG2B_ORDER_FRACTION;
                cfg.x = Some(Axis::new(P::VRatio, 0.0, 1.0, 320));
            }
            ExperimentId::Fig2c => {
                cfg.integrator = IntegratorSection::new(10000.0, 10000);
                cfg.analysis.order_last = MAP_ORDER_LAST;
                cfg.x = Some(Axis::new(P::V, 0.0, 3.0, 255));
                cfg.y = Some(Axis::new(P::GammaPlus, 0.05, 2.0, 255));
                cfg.series = Some(Series { param: P::KRatio, values: vec![0.0, -0.1, 0.1] });
            }
            ExperimentId::Fig2d => {
                cfg.params.omega = 0.1;
                cfg.analysis.phi_points = 256;
                cfg.y = Some(Axis::new(P::GammaPlus, 0.5, 1.0, 2));
                cfg.series = Some(Series { param: P::KRatio, values: vec![0.0, -0.1, 0.1] });
            }
            ExperimentId::Fig3 => {
                cfg.params.v = 1.0;
                cfg.integrator = IntegratorSection::new(1000.0, 10_000);
                cfg.initial = two_group;
                cfg.x = Some(Axis::new(P::Delta, -2.0, 2.0, 255));
                cfg.y = Some(Axis::new(P::VAb, 0.0, 1.0, 255));
            }
            ExperimentId::Fig4 => {
                cfg.params.v = 1.0;
                cfg.params.v_ab = 1.0;
                cfg.integrator = IntegratorSection::new(500.0, 10_000);
                cfg.analysis.order_last = MAP_ORDER_LAST;
                cfg.initial = two_group;
                cfg.x = Some(Axis::new(P::Delta, -20.0, 20.0, 255));
                cfg.y = Some(Axis::new(P::K, -20.0, 20.0, 255));
            }
            ExperimentId::FigS1 => {
                cfg.params.v_ab = 0.05;
                cfg.x = Some(Axis::new(P::Delta, -20.0, 20.0, 255));
                cfg.y = Some(Axis::new(P::K, -20.0, 20.0, 255));
            }
            ExperimentId::FigS2 => {
                cfg.params.v = 1.0;
                cfg.integrator = IntegratorSection::new(1000.0, 10_000);
                cfg.initial = two_group;
                cfg.analysis.omega_max = 4.0;
                cfg.x = Some(Axis::new(P::Delta, -2.0, 2.0, 255));
                cfg.series = Some(Series { param: P::VAb, values: vec![0.25, 0.5, 1.0] });
            }
            ExperimentId::FigS3 => {
                cfg.params.v = 1.0;
                cfg.params.v_ab = 1.0;
                cfg.integrator = IntegratorSection::new(500.0, 10_000);
                cfg.analysis.order_last = MAP_ORDER_LAST;
                cfg.analysis.omega_max = 30.0;
                cfg.initial = two_group;
                cfg.x = Some(Axis::new(P::Delta, -20.0, 20.0, 255));
                cfg.series = Some(Series { param: P::K, values: vec![-10.0, 0.0, 10.0] });
            }
            ExperimentId::FigS4 => {
                cfg.integrator = IntegratorSection::new(200.0, 2001);
                cfg.cumulant = Some(CumulantSection {
                    n_values: vec![100, 250, 500, 1000, 2000],
                    v_values: vec![0.0, 0.75, 1.0, 1.25, 1.5],
                    series_n: vec![100, 500, 1000, 2000, 0],
                    series_v: 1.0,
                });
            }
            ExperimentId::Custom => {
                cfg.params = ModelParams64::default().into();
                cfg.initial = two_group;
            }
        }
        cfg
    }

    pub fn validate(&self) -> CliResult<()> {
        let bad = |m: String| Err(CliError::Config(m));
        if !(self.resolution_scale.is_finite() && self.resolution_scale > 0.0) {
            return bad("resolution_scale must be positive".into());
        }
        self.params.model().validate().map_err(|e| CliError::Config(e.to_string()))?;
        self.integrator.config().validate().map_err(|e| CliError::Config(e.to_string()))?;
        for (name, axis) in [("x", &self.x), ("y", &self.y)] {
            if let Some(a) = axis {
                if a.points < 2 {
                    return bad(format!("axis {name} needs at least 2 points"));
                }
                if !(a.min.is_finite() && a.max.is_finite()) {
                    return bad(format!("axis {name} range must be finite"));
                }
            }
        }
        if let Some(s) = &self.series {
            if s.values.is_empty() || s.values.iter().any(|v| !v.is_finite()) {
                return bad("series values must be finite and non-empty".into());
            }
        }
        let a = &self.analysis;
        for (name, f) in [("spectrum_fraction", a.spectrum_fraction), ("order_fraction", a.order_fraction)] {
            if !(f > 0.0 && f <= 1.0) {
                return bad(format!("{name} must lie in (0, 1]"));
            }
        }
        if a.order_last > self.integrator.n_samples {
            return bad("order_last exceeds n_samples".into());
        }
        let needs = |what: &str, ok: bool| if ok { Ok(()) } else { bad(format!("{} needs {what}", self.experiment.name())) };
        match self.experiment {
            ExperimentId::Fig2a | ExperimentId::Fig2d => needs("a series", self.series.is_some())?,
            ExperimentId::Fig2b => needs("an x axis", self.x.is_some())?,
            ExperimentId::Fig2c | ExperimentId::Fig3 | ExperimentId::Fig4 | ExperimentId::FigS1 => {
                needs("x and y axes", self.x.is_some() && self.y.is_some())?
            }
            ExperimentId::FigS2 | ExperimentId::FigS3 => needs("an x axis and a series", self.x.is_some() && self.series.is_some())?,
            ExperimentId::FigS4 => {
                let c = self.cumulant.as_ref().ok_or_else(|| CliError::Config("figS4 needs a [cumulant] section".into()))?;
                if c.n_values.iter().any(|&n| n < 2) || c.series_n.iter().any(|&n| n == 1) {
                    return bad("group sizes must be at least 2 (0 = mean-field limit in series_n)".into());
                }
            }
            ExperimentId::Custom => {}
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

fn merge(base: &mut Table, overlay: Table) {
    for (k, v) in overlay {
        match (base.get_mut(&k), v) {
            (Some(Value::Table(b)), Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

/// Parses one `key=value` override; the value is TOML, bare words are taken as strings.
fn parse_override(s: &str) -> CliResult<Table> {
    let (key, value) = s
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override '{s}' is not key=value")))?;
    let (key, value) = (key.trim(), value.trim());
    toml::from_str::<Table>(&format!("{key} = {value}"))
        .or_else(|_| toml::from_str::<Table>(&format!("{key} = {}", Value::String(value.into()))))
        .map_err(|e| CliError::Config(format!("override '{s}': {e}")))
}

/// Command-line view of a run request.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub experiment: Option<ExperimentId>,
    pub config_text: Option<String>,
    pub sets: Vec<String>,
    pub out_dir: Option<String>,
    pub workers: Option<usize>,
    pub resolution_scale: Option<f64>,
}

/// Resolves defaults, config file, `--set` pairs and flags (in that order) into a validated config.
///
/// A metadata file written by a previous run is accepted as a config file: its
/// `[config]` table is used and everything else is ignored.
pub fn resolve(ov: &Overrides) -> CliResult<ExperimentConfig> {
    let mut file = match &ov.config_text {
        Some(text) => toml::from_str::<Table>(text).map_err(|e| CliError::Config(e.to_string()))?,
        None => Table::new(),
    };
    if let Some(Value::Table(inner)) = file.remove("config") {
        file = inner;
    }
    let id = match (ov.experiment, file.get("experiment")) {
        (Some(id), _) => id,
        (None, Some(Value::String(s))) => ExperimentId::parse(s)?,
        (None, Some(_)) => return Err(CliError::Config("experiment must be a string".into())),
        (None, None) => return Err(CliError::Config("no experiment given".into())),
    };
    let defaults = ExperimentConfig::defaults(id);
    let mut table = Table::try_from(&defaults).map_err(|e| CliError::Config(e.to_string()))?;
    merge(&mut table, file);
    for s in &ov.sets {
        merge(&mut table, parse_override(s)?);
    }
    table.insert("experiment".into(), Value::String(id.name().into()));
    let mut cfg: ExperimentConfig =
        table.try_into().map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
    if let Some(o) = &ov.out_dir {
        cfg.out_dir = o.clone();
    }
    if let Some(w) = ov.workers {
        cfg.workers = w;
    }
    if let Some(r) = ov.resolution_scale {
        cfg.resolution_scale = r;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn read_config_file(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

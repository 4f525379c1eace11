use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, LabError, Result};
use crate::functional::{Cutoff, Engine, Family, FunctionalSpec, IntegrationPlan, DEFAULT_TAIL_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Constants,
    Eval,
    Oracle,
    Sweep,
    Scan,
    GammaRecovery,
    Poincare,
    Report,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::Constants => "constants",
            Command::Eval => "eval",
            Command::Oracle => "oracle",
            Command::Sweep => "sweep",
            Command::Scan => "scan",
            Command::GammaRecovery => "gamma-recovery",
            Command::Poincare => "poincare",
            Command::Report => "report",
        }
    }
}

/// Geometric ladder `start * ratio^j`, `j < len`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LadderSpec {
    pub start: Option<f64>,
    pub ratio: Option<f64>,
    pub len: usize,
}

impl Default for LadderSpec {
    fn default() -> Self {
        Self {
            start: None,
            ratio: None,
            len: 6,
        }
    }
}

/// Fully resolved description of one run; also the JSON config schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    pub field: String,
    pub family: Family,
    /// Single `p` for evaluations, the grid for `constants` and `scan`.
    pub p: Vec<f64>,
    /// Single `gamma` for evaluations, the grid for `scan`.
    pub gamma: Vec<f64>,
    /// `eps`, `delta` or `lambda`.
    pub param: Option<f64>,
    pub r: Option<f64>,
    pub dims: Vec<usize>,
    pub ladder: LadderSpec,
    pub engine: Option<Engine>,
    pub samples: Option<u64>,
    pub outer_nodes: Option<usize>,
    pub radial_nodes: Option<usize>,
    pub strata: Option<usize>,
    pub seed: u64,
    pub h_min: Cutoff,
    pub h_max: Cutoff,
    pub tail_tol: Option<f64>,
    pub k: Vec<u32>,
    pub schedule_base: f64,
    pub delta: Vec<f64>,
    pub ball: Option<[f64; 2]>,
    pub target: Option<f64>,
    pub tolerance: f64,
    pub plot: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            command: Command::Eval,
            field: "step1d".into(),
            family: Family::Bsvy,
            p: vec![],
            gamma: vec![],
            param: None,
            r: None,
            dims: vec![],
            ladder: LadderSpec::default(),
            engine: None,
            samples: None,
            outer_nodes: None,
            radial_nodes: None,
            strata: None,
            seed: 0,
            h_min: Cutoff::Auto,
            h_max: Cutoff::Auto,
            tail_tol: None,
            k: vec![],
            schedule_base: 0.5,
            delta: vec![],
            ball: None,
            target: None,
            tolerance: 0.05,
            plot: false,
            out: None,
        }
    }
}

fn single(name: &str, v: &[f64]) -> Result<Option<f64>> {
    match v {
        [] => Ok(None),
        [x] => Ok(Some(*x)),
        _ => invalid(format!("--{name} takes a single value for this command")),
    }
}

impl RunConfig {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| LabError::Io(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| LabError::InvalidParameter(format!("malformed config {}: {e}", path.display())))
    }

    pub fn p_single(&self) -> Result<f64> {
        Ok(single("p", &self.p)?.unwrap_or(1.0))
    }

    pub fn gamma_single(&self) -> Result<Option<f64>> {
        single("gamma", &self.gamma)
    }

    /// The functional at the configured parameter (or `fallback` for sweeps).
    pub fn spec(&self, fallback: Option<f64>) -> Result<FunctionalSpec> {
        let p = self.p_single()?;
        let param = match self.param.or(fallback) {
            Some(v) => v,
            None => return invalid(format!("missing --{} for family {}", self.family.param_name(), self.family.as_str())),
        };
        let spec = match self.family {
            Family::Bbm => FunctionalSpec::bbm(p, param, self.r.unwrap_or(1.0)),
            Family::Bn => FunctionalSpec::bn(p, param),
            Family::Bsvy => match self.gamma_single()? {
                Some(g) => FunctionalSpec::bsvy(p, g, param),
                None => return invalid("family bsvy needs --gamma"),
            },
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn plan(&self) -> IntegrationPlan {
        let d = IntegrationPlan::default();
        IntegrationPlan {
            engine: self.engine.unwrap_or(d.engine),
            outer_nodes: self.outer_nodes.unwrap_or(d.outer_nodes),
            radial_nodes: self.radial_nodes.unwrap_or(d.radial_nodes),
            samples: self.samples.unwrap_or(d.samples),
            h_min: self.h_min,
            h_max: self.h_max,
            seed: self.seed,
            strata: self.strata.unwrap_or(d.strata),
            tail_tol: self.tail_tol.unwrap_or(DEFAULT_TAIL_TOL),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "nllab", version, about = "Non-local functional laboratory")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Sub,
}

#[derive(Debug, Subcommand)]
pub enum Sub {
    /// Table of sphere constants K_{N,p}.
    Constants(Flags),
    /// One functional evaluation, printed as a JSON line.
    Eval(Flags),
    /// Closed-form step value, printed as JSON.
    Oracle(Flags),
    /// Parameter ladder with limit extrapolation.
    Sweep(Flags),
    /// Small/large-lambda classification of the step field.
    Scan(Flags),
    /// Dyadic recovery sequence.
    GammaRecovery(Flags),
    /// Empirical Poincaré constants.
    Poincare(Flags),
    /// Summary table over run directories.
    Report(ReportFlags),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TableFormat {
    Csv,
    Md,
}

#[derive(Debug, Args)]
pub struct ReportFlags {
    /// Run directories, each holding a manifest.json.
    pub runs: Vec<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: TableFormat,
    /// Also write the table to this file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Default, Args)]
pub struct Flags {
    /// JSON config file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub field: Option<String>,
    #[arg(long)]
    pub family: Option<String>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub p: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub gamma: Vec<f64>,
    /// Sweep parameter: eps, delta or lambda.
    #[arg(long, visible_aliases = ["lambda", "eps"], allow_negative_numbers = true)]
    pub param: Option<f64>,
    /// BN threshold, or the delta grid for `poincare`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub delta: Vec<f64>,
    /// BBM radial restriction.
    #[arg(long, allow_negative_numbers = true)]
    pub r: Option<f64>,
    #[arg(long = "N", value_delimiter = ',')]
    pub dims: Vec<usize>,
    #[arg(long)]
    pub ladder_start: Option<f64>,
    #[arg(long)]
    pub ladder_ratio: Option<f64>,
    #[arg(long)]
    pub ladder_len: Option<usize>,
    #[arg(long)]
    pub engine: Option<String>,
    #[arg(long)]
    pub samples: Option<u64>,
    #[arg(long)]
    pub outer_nodes: Option<usize>,
    #[arg(long)]
    pub radial_nodes: Option<usize>,
    #[arg(long)]
    pub strata: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub h_min: Option<f64>,
    #[arg(long)]
    pub h_max: Option<f64>,
    #[arg(long)]
    pub tail_tol: Option<f64>,
    /// Quantization levels for `gamma-recovery`.
    #[arg(long, value_delimiter = ',')]
    pub k: Vec<u32>,
    #[arg(long)]
    pub schedule_base: Option<f64>,
    /// Interval `lo,hi` for `poincare`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub ball: Vec<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub target: Option<f64>,
    /// Relative gap accepted as a pass.
    #[arg(long)]
    pub tolerance: Option<f64>,
    #[arg(long)]
    pub plot: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl Flags {
    /// Loads the config file (if any) and applies the flags on top.
    pub fn resolve(&self, command: Command) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(path) => RunConfig::from_json_file(path)?,
            None => RunConfig::default(),
        };
        c.command = command;
        if let Some(v) = &self.field {
            c.field = v.clone();
        }
        if let Some(v) = &self.family {
            c.family = Family::parse(v)?;
        }
        if !self.p.is_empty() {
            c.p = self.p.clone();
        }
        if !self.gamma.is_empty() {
            c.gamma = self.gamma.clone();
        }
        if let Some(v) = self.param {
            c.param = Some(v);
        }
        if !self.delta.is_empty() {
            c.delta = self.delta.clone();
        }
        if c.family == Family::Bn && command != Command::Poincare && c.param.is_none() {
            c.param = single("delta", &c.delta)?;
        }
        if let Some(v) = self.r {
            c.r = Some(v);
        }
        if !self.dims.is_empty() {
            c.dims = self.dims.clone();
        }
        if let Some(v) = self.ladder_start {
            c.ladder.start = Some(v);
        }
        if let Some(v) = self.ladder_ratio {
            c.ladder.ratio = Some(v);
        }
        if let Some(v) = self.ladder_len {
            c.ladder.len = v;
        }
        if let Some(v) = &self.engine {
            c.engine = Some(Engine::parse(v)?);
        }
        macro_rules! set {
            ($($f:ident),*) => {$(if let Some(v) = self.$f { c.$f = Some(v); })*};
        }
        set!(samples, outer_nodes, radial_nodes, strata, tail_tol, target);
        if let Some(v) = self.seed {
            c.seed = v;
        }
        if let Some(v) = self.h_min {
            c.h_min = Cutoff::Explicit(v);
        }
        if let Some(v) = self.h_max {
            c.h_max = Cutoff::Explicit(v);
        }
        if !self.k.is_empty() {
            c.k = self.k.clone();
        }
        if let Some(v) = self.schedule_base {
            c.schedule_base = v;
        }
        match self.ball[..] {
            [] => {}
            [lo, hi] => c.ball = Some([lo, hi]),
            _ => return invalid("--ball takes exactly two values lo,hi"),
        }
        if let Some(v) = self.tolerance {
            c.tolerance = v;
        }
        c.plot |= self.plot;
        if let Some(v) = &self.out {
            c.out = Some(v.clone());
        }
        Ok(c)
    }
}

//! The `nllab` command-line front end.
//!
//! Every experiment run writes `results.csv`, `manifest.json` and, with
//! `--plot`, `plot.svg` into its output directory. The run id is a SHA-256
//! digest of the resolved config, so identical configs share an id.

mod config;
pub mod report;
pub mod svg;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Parser;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

pub use config::{Cli, Command, Flags, LadderSpec, ReportFlags, RunConfig, Sub, TableFormat};

use crate::constants::sphere_constant;
use crate::corpus::{corpus_field, CORPUS_IDS};
use crate::error::{invalid, LabError, Result};
use crate::experiments::{
    default_ball, gamma_recovery_experiment, geometric_ladder, max_constant, poincare_study, reference_target, regime_scan,
    run_sweep,
};
use crate::field::ScalarField;
use crate::functional::{eval_functional, Engine, Family};
use crate::geometry::Aabb;
use crate::oracle::step_phi_lambda;
use svg::{loglog, Reference, Series};

/// Exit status for an error.
pub fn exit_code(e: &LabError) -> i32 {
    match e {
        LabError::InvalidParameter(_)
        | LabError::UnsupportedEngine { .. }
        | LabError::NotSobolev { .. }
        | LabError::NoFiniteCutoff(_) => 2,
        LabError::UnknownField(_) => 3,
        LabError::BudgetExceeded { .. } => 4,
        LabError::Io(_) => 5,
        LabError::SweepDiverged { .. } => 6,
    }
}

/// Parses `args` (including the program name), runs, and returns the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = match &cli.command {
        Sub::Report(r) => run_report(r),
        other => {
            let (command, flags) = split(other);
            flags.resolve(command).and_then(|c| run(&c))
        }
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn split(sub: &Sub) -> (Command, &Flags) {
    match sub {
        Sub::Constants(f) => (Command::Constants, f),
        Sub::Eval(f) => (Command::Eval, f),
        Sub::Oracle(f) => (Command::Oracle, f),
        Sub::Sweep(f) => (Command::Sweep, f),
        Sub::Scan(f) => (Command::Scan, f),
        Sub::GammaRecovery(f) => (Command::GammaRecovery, f),
        Sub::Poincare(f) => (Command::Poincare, f),
        Sub::Report(_) => unreachable!("report has its own flags"),
    }
}

/// Executes a resolved config; returns the exit status.
pub fn run(config: &RunConfig) -> Result<i32> {
    match config.command {
        Command::Constants => run_constants(config),
        Command::Eval => run_eval(config),
        Command::Oracle => run_oracle(config),
        Command::Sweep => run_sweep_command(config),
        Command::Scan => run_scan(config),
        Command::GammaRecovery => run_recovery(config),
        Command::Poincare => run_poincare(config),
        Command::Report => invalid("report takes run directories, not a config"),
    }
}

/// Short SHA-256 digest of the config without its output directory.
pub fn run_id(config: &RunConfig) -> String {
    let mut c = config.clone();
    c.out = None;
    let bytes = serde_json::to_vec(&c).unwrap_or_default();
    Sha256::digest(&bytes).iter().take(8).fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

fn io_err(path: &Path, e: std::io::Error) -> LabError {
    LabError::Io(format!("{}: {e}", path.display()))
}

struct Artifacts<'a> {
    config: &'a RunConfig,
    csv: String,
    seeds: Vec<u64>,
    summary: Value,
    plot: Option<String>,
    started: Instant,
}

impl Artifacts<'_> {
    /// Writes the run directory and returns its path.
    fn write(self) -> Result<PathBuf> {
        let id = run_id(self.config);
        let dir = self
            .config
            .out
            .clone()
            .unwrap_or_else(|| PathBuf::from("nllab-runs").join(format!("{}-{id}", self.config.command.as_str())));
        std::fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
        let csv_path = dir.join("results.csv");
        std::fs::write(&csv_path, &self.csv).map_err(|e| io_err(&csv_path, e))?;
        if let Some(svg) = self.plot.filter(|_| self.config.plot) {
            let p = dir.join("plot.svg");
            std::fs::write(&p, svg).map_err(|e| io_err(&p, e))?;
        }
        let manifest = json!({
            "run_id": id,
            "command": self.config.command.as_str(),
            "version": env!("CARGO_PKG_VERSION"),
            "config": self.config,
            "seeds": self.seeds,
            "wall_time_s": self.started.elapsed().as_secs_f64(),
            "summary": self.summary,
        });
        let m = dir.join("manifest.json");
        let text = serde_json::to_string_pretty(&manifest).map_err(|e| LabError::Io(e.to_string()))? + "\n";
        std::fs::write(&m, text).map_err(|e| io_err(&m, e))?;
        Ok(dir)
    }
}

fn csv_row(cells: &[String]) -> String {
    let mut s = cells.join(",");
    s.push('\n');
    s
}

fn num(v: f64) -> String {
    format!("{v:?}")
}

fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), num)
}

/// Field plus the engine appropriate for its dimension unless one was given.
fn field_and_config(config: &RunConfig) -> Result<(ScalarField, RunConfig)> {
    let u = corpus_field(&config.field)?;
    let mut c = config.clone();
    if c.engine.is_none() {
        c.engine = Some(if u.dim() == 1 { Engine::Deterministic1d } else { Engine::MonteCarlo });
    }
    Ok((u, c))
}

fn run_constants(config: &RunConfig) -> Result<i32> {
    let started = Instant::now();
    let mut c = config.clone();
    if c.dims.is_empty() {
        c.dims = vec![1, 2, 3];
    }
    if c.p.is_empty() {
        c.p = vec![1.0, 2.0];
    }
    let mut csv = String::from("N,p,value,method\n");
    for &n in &c.dims {
        if n == 0 {
            return invalid("N must be at least 1");
        }
        for &p in &c.p {
            let k = sphere_constant(n, p)?;
            let method = serde_json::to_value(k.method).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
            csv += &csv_row(&[n.to_string(), num(p), num(k.value), method]);
        }
    }
    print!("{csv}");
    if c.out.is_some() {
        Artifacts {
            config: &c,
            csv,
            seeds: vec![],
            summary: json!({}),
            plot: None,
            started,
        }
        .write()?;
    }
    Ok(0)
}

fn run_eval(config: &RunConfig) -> Result<i32> {
    let started = Instant::now();
    let (u, c) = field_and_config(config)?;
    let spec = c.spec(None)?;
    let est = eval_functional(&u, &spec, &c.plan())?;
    let mut record = serde_json::to_value(&est).map_err(|e| LabError::Io(e.to_string()))?;
    if let Value::Object(m) = &mut record {
        m.insert("field".into(), json!(u.id()));
        m.insert("family".into(), json!(spec.family));
        m.insert("p".into(), json!(spec.p));
        m.insert("gamma".into(), json!(spec.gamma));
        m.insert(spec.family.param_name().into(), json!(spec.param));
    }
    println!("{record}");
    if c.out.is_some() {
        let csv = String::from("field,family,p,gamma,param,value,error,diverged,tail_bound,n_evaluations\n")
            + &csv_row(&[
                u.id().to_string(),
                spec.family.as_str().into(),
                num(spec.p),
                opt(spec.gamma),
                num(spec.param),
                num(est.value),
                num(est.error),
                est.diverged.to_string(),
                num(est.tail_bound),
                est.n_evaluations.to_string(),
            ]);
        Artifacts {
            config: &c,
            csv,
            seeds: vec![c.seed],
            summary: record,
            plot: None,
            started,
        }
        .write()?;
    }
    Ok(0)
}

fn run_oracle(config: &RunConfig) -> Result<i32> {
    let p = config.p_single()?;
    let gamma = config.gamma_single()?.ok_or_else(|| LabError::InvalidParameter("oracle needs --gamma".into()))?;
    let lambda = config.param.ok_or_else(|| LabError::InvalidParameter("oracle needs --lambda".into()))?;
    let r = step_phi_lambda(gamma, p, lambda)?;
    let mut v = serde_json::to_value(r).map_err(|e| LabError::Io(e.to_string()))?;
    if let Value::Object(m) = &mut v {
        m.insert("gamma".into(), json!(gamma));
        m.insert("p".into(), json!(p));
        m.insert("lambda".into(), json!(lambda));
    }
    println!("{v}");
    Ok(0)
}

fn default_ladder(config: &RunConfig) -> (f64, f64) {
    match (config.family, config.gamma.first()) {
        (Family::Bsvy, Some(g)) if *g > 0.0 => (10.0, 2.0),
        _ => (0.2, 0.5),
    }
}

fn run_sweep_command(config: &RunConfig) -> Result<i32> {
    let started = Instant::now();
    let (u, mut c) = field_and_config(config)?;
    let (start, ratio) = default_ladder(&c);
    c.ladder.start.get_or_insert(start);
    c.ladder.ratio.get_or_insert(ratio);
    let ladder = geometric_ladder(c.ladder.start.unwrap_or(start), c.ladder.ratio.unwrap_or(ratio), c.ladder.len);
    let spec = c.spec(ladder.first().copied())?;
    c.param = Some(spec.param);
    let target = match c.target {
        Some(t) => Some(t),
        None => reference_target(&u, &spec)?,
    };
    let res = run_sweep(&u, &spec, &ladder, &c.plan(), target)?;

    let mut csv = String::from("index,param,seed,value,error,diverged,tail_bound,n_evaluations,h_min,h_max\n");
    for (i, e) in res.estimates.iter().enumerate() {
        csv += &csv_row(&[
            i.to_string(),
            num(res.ladder[i]),
            res.seeds[i].to_string(),
            num(e.value),
            num(e.error),
            e.diverged.to_string(),
            num(e.tail_bound),
            e.n_evaluations.to_string(),
            num(e.h_min),
            num(e.h_max),
        ]);
    }
    let pass = res.relative_gap.map(|g| !res.diverged && g <= c.tolerance);
    let summary = json!({
        "field": res.field,
        "family": res.family,
        "p": res.p,
        "gamma": res.gamma,
        "radial_cut": res.radial_cut,
        "ladder": res.ladder,
        "diverged": res.diverged,
        "extrapolated_limit": res.extrapolated_limit,
        "limit_uncertainty": res.limit_uncertainty,
        "fitted_rate": res.fitted_rate,
        "rate_uncertainty": res.rate_uncertainty,
        "fit_stable": res.fit_stable,
        "outside_hull": res.outside_hull,
        "reference_target": res.reference_target,
        "relative_gap": res.relative_gap,
        "tolerance": c.tolerance,
        "pass": pass,
    });
    let mut series = vec![Series {
        name: format!("{} on {}", res.family.as_str(), res.field),
        points: res.ladder.iter().zip(&res.estimates).map(|(&s, e)| (s, e.value)).collect(),
    }];
    if let Some(a) = res.extrapolated_limit {
        let pts: Vec<(f64, f64)> = res.ladder.iter().zip(&res.estimates).map(|(&s, e)| (s, (e.value - a).abs())).collect();
        series.push(Series {
            name: "|value - limit|".into(),
            points: pts,
        });
    }
    let reference = target.map(|t| Reference {
        name: "target".into(),
        value: t,
    });
    let plot = loglog(
        &format!("{} sweep, p = {}", res.family.as_str(), res.p),
        res.family.param_name(),
        "value",
        &series,
        reference.as_ref(),
    );
    let seeds = res.seeds.clone();
    let dir = Artifacts {
        config: &c,
        csv,
        seeds,
        summary: summary.clone(),
        plot: Some(plot),
        started,
    }
    .write()?;
    println!("{}", json!({ "run_dir": dir, "summary": summary }));
    if res.diverged {
        let index = res.estimates.iter().position(|e| e.diverged).unwrap_or(0);
        return Err(LabError::SweepDiverged {
            index,
            param: res.ladder[index],
        });
    }
    Ok(0)
}

fn run_scan(config: &RunConfig) -> Result<i32> {
    let started = Instant::now();
    if config.field != "step1d" {
        return invalid(format!("scan works on step1d only, got `{}`", config.field));
    }
    let mut c = config.clone();
    if c.p.is_empty() {
        c.p = vec![1.0, 2.0];
    }
    if c.gamma.is_empty() {
        c.gamma = vec![-3.0, -2.0, -1.5, -1.0, -0.5, 0.5, 1.0, 2.0];
    }
    let rows = regime_scan(&c.p, &c.gamma)?;
    let tag = |v| serde_json::to_value(v).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
    let mut csv = String::from("p,gamma,beta,regime,small_lambda,small_value,large_lambda,large_value,checks,pass\n");
    let mut all_pass = true;
    for r in &rows {
        let passed = r.checks.iter().filter(|c| c.pass).count();
        let pass = passed == r.checks.len();
        all_pass &= pass;
        csv += &csv_row(&[
            num(r.p),
            num(r.gamma),
            num(r.beta),
            tag(serde_json::to_value(r.regime).unwrap_or_default()),
            tag(serde_json::to_value(r.small_lambda.class).unwrap_or_default()),
            r.small_lambda.last_value.map_or("inf".into(), num),
            tag(serde_json::to_value(r.large_lambda.class).unwrap_or_default()),
            r.large_lambda.last_value.map_or("inf".into(), num),
            format!("{passed}/{}", r.checks.len()),
            pass.to_string(),
        ]);
    }
    let summary = json!({ "field": "step1d", "rows": rows, "all_checks_pass": all_pass });
    let dir = Artifacts {
        config: &c,
        csv,
        seeds: vec![],
        summary,
        plot: None,
        started,
    }
    .write()?;
    println!("{}", json!({ "run_dir": dir, "rows": rows.len(), "all_checks_pass": all_pass }));
    Ok(0)
}

fn run_recovery(config: &RunConfig) -> Result<i32> {
    let started = Instant::now();
    let (u, mut c) = field_and_config(config)?;
    if c.k.is_empty() {
        c.k = (2..=7).collect();
    }
    if c.gamma.is_empty() {
        c.gamma = vec![-0.5];
    }
    let p = c.p_single()?;
    let gamma = c.gamma_single()?.unwrap_or(-0.5);
    let rep = gamma_recovery_experiment(&u, p, gamma, &c.k, c.schedule_base, &c.plan())?;
    let mut csv = String::from("k,lambda,lp_error,phi,phi_error,diverged\n");
    for r in &rep.rows {
        csv += &csv_row(&[
            r.k.to_string(),
            num(r.lambda),
            num(r.lp_error),
            num(r.phi.value),
            num(r.phi.error),
            r.phi.diverged.to_string(),
        ]);
    }
    let summary = json!({
        "field": rep.field,
        "p": rep.p,
        "gamma": rep.gamma,
        "schedule_base": rep.schedule_base,
        "seminorm": rep.seminorm,
        "lp_strictly_decreasing": rep.lp_strictly_decreasing,
        "phi_decreasing": rep.phi_decreasing,
        "final_phi": rep.final_phi,
    });
    let plot = loglog(
        &format!("recovery sequence for {}", rep.field),
        "lambda_k",
        "value",
        &[
            Series {
                name: "Phi_lambda_k(u_k)".into(),
                points: rep.rows.iter().map(|r| (r.lambda, r.phi.value)).collect(),
            },
            Series {
                name: "||u_k - u||_p".into(),
                points: rep.rows.iter().map(|r| (r.lambda, r.lp_error)).collect(),
            },
        ],
        None,
    );
    let seeds = c.k.iter().map(|&k| c.seed ^ k as u64).collect();
    let dir = Artifacts {
        config: &c,
        csv,
        seeds,
        summary: summary.clone(),
        plot: Some(plot),
        started,
    }
    .write()?;
    println!("{}", json!({ "run_dir": dir, "summary": summary }));
    Ok(0)
}

fn poincare_fields(spec: &str) -> Result<Vec<ScalarField>> {
    if spec == "corpus-1d" {
        return Ok(CORPUS_IDS
            .iter()
            .filter_map(|id| corpus_field(id).ok())
            .filter(|u| u.dim() == 1)
            .collect());
    }
    spec.split(',').map(|id| corpus_field(id.trim())).collect()
}

fn run_poincare(config: &RunConfig) -> Result<i32> {
    let started = Instant::now();
    let mut c = config.clone();
    if c.delta.is_empty() {
        c.delta = vec![0.1, 0.3, 0.5];
    }
    c.engine.get_or_insert(Engine::Deterministic1d);
    let p = c.p_single()?;
    let mut csv = String::from(
        "field,delta,ball_lo,ball_hi,lhs,functional,functional_error,diverged,rhs_functional_term,rhs_delta_term,empirical_constant\n",
    );
    let mut all = Vec::new();
    for u in poincare_fields(&c.field)? {
        let ball = match c.ball {
            Some([lo, hi]) => Aabb::interval(lo, hi),
            None => default_ball(&u),
        };
        let reports = poincare_study(&u, &ball, p, &c.delta, &c.plan())?;
        for r in &reports {
            csv += &csv_row(&[
                r.field.clone(),
                num(r.delta),
                num(r.ball.lo[0]),
                num(r.ball.hi[0]),
                num(r.lhs),
                num(r.functional.value),
                num(r.functional.error),
                r.functional_diverged.to_string(),
                num(r.rhs_functional_term),
                num(r.rhs_delta_term),
                num(r.empirical_constant),
            ]);
        }
        all.extend(reports);
    }
    let max = max_constant(&all);
    let summary = json!({
        "field": c.field,
        "p": p,
        "deltas": c.delta,
        "max_empirical_constant": max,
        "all_finite": all.iter().all(|r| r.empirical_constant.is_finite()),
    });
    let plot = loglog(
        "empirical Poincare constants",
        "delta",
        "constant",
        &[Series {
            name: "per field and delta".into(),
            points: all.iter().map(|r| (r.delta, r.empirical_constant)).collect(),
        }],
        None,
    );
    let dir = Artifacts {
        config: &c,
        csv,
        seeds: vec![c.seed],
        summary: summary.clone(),
        plot: Some(plot),
        started,
    }
    .write()?;
    println!("{}", json!({ "run_dir": dir, "summary": summary }));
    Ok(0)
}

fn run_report(flags: &ReportFlags) -> Result<i32> {
    let rows = report::collect(&flags.runs);
    let table = match flags.format {
        TableFormat::Csv => report::render_csv(&rows),
        TableFormat::Md => report::render_markdown(&rows),
    };
    print!("{table}");
    if let Some(path) = &flags.out {
        std::fs::write(path, &table).map_err(|e| io_err(path, e))?;
    }
    let all_unreadable = !rows.is_empty() && rows.iter().all(|r| r.status == report::Status::Unreadable);
    Ok(if all_unreadable { 2 } else { 0 })
}

//! Batch front end: scenario configs, subcommands and report files.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use num_rational::BigRational;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::arith::{format_rational, gcd, parse_rational, primes_up_to};
use crate::conv::Kernel;
use crate::counting::{count_mixed, count_representations, fit_omega, mean_value};
use crate::error::{Error, Result};
use crate::expsum::{fit_rho, minor_arc_sweep, PolySystem, SearchConfig};
use crate::predict::{
    applicability, compare, compute_y, main_term, Constituents, Measurements, PredictionReport, Theorem, TheoremId,
    YInputs, YVariant,
};
use crate::psi::{build_psi_star, li_profile, PsiApprox};
use crate::sets::{
    check_condition_c, check_convexity, estimate_kappa, generate_set, log_density, to_f64, DistributionProfile,
    SetSpec, WeightedSet,
};
use crate::singular::{
    euler_product, local_factors, schmidt_wt, IntegralConfig, IntegralEngine, IntegralReport, SchmidtConfig,
    SeriesEngine, SeriesMode, TailPolicy,
};

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NONCONVERGENCE: i32 = 3;
pub const EXIT_BUDGET: i32 = 4;

/// The set a scenario works with.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SetConfig {
    Naturals,
    Primes,
    Ellipsephic { p: u64, digits: Vec<u64> },
    Smooth { q: u64 },
    /// `[n, "weight"]` pairs.
    Explicit { pairs: Vec<(u64, String)> },
    File { path: PathBuf },
}

impl SetConfig {
    pub fn to_spec(&self) -> Result<SetSpec> {
        Ok(match self {
            SetConfig::Naturals => SetSpec::Naturals,
            SetConfig::Primes => SetSpec::Primes,
            SetConfig::Ellipsephic { p, digits } => SetSpec::Ellipsephic {
                p: *p,
                digits: digits.clone(),
            },
            SetConfig::Smooth { q } => SetSpec::Smooth { q: *q },
            SetConfig::Explicit { pairs } => SetSpec::Explicit {
                pairs: pairs
                    .iter()
                    .map(|(n, w)| {
                        parse_rational(w)
                            .map(|w| (*n, w))
                            .ok_or_else(|| Error::Config(format!("bad weight {w:?} for {n}")))
                    })
                    .collect::<Result<_>>()?,
            },
            SetConfig::File { path } => SetSpec::FromFile { path: path.clone() },
        })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PsiConfig {
    /// Piecewise-linear interpolation of the counting function.
    #[default]
    Star,
    Li { tau: f64 },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TheoremKind {
    #[default]
    Waring,
    Mixed,
    MeanValue,
    PrimeWaring,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SingularParts {
    pub series: bool,
    pub local: bool,
    pub integral: bool,
    pub schmidt: bool,
}

impl Default for SingularParts {
    fn default() -> Self {
        SingularParts {
            series: true,
            local: true,
            integral: false,
            schmidt: false,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PredictConfig {
    pub theorem: TheoremKind,
    /// Fixed constants instead of computed ones.
    pub series: Option<f64>,
    pub integral: Option<f64>,
    /// Truncation of the integral; defaults to `q_max`.
    pub integral_q: Option<f64>,
    pub checks: Vec<TheoremId>,
    pub measurements: Measurements,
    pub y: Option<YInputs>,
    pub y_variant: Option<YVariant>,
}

/// One scenario. Every key is optional; unknown keys are rejected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub set: SetConfig,
    pub k: u32,
    /// `(coefficient, exponent)` terms; defaults to `x^k`.
    pub phi: Option<Vec<(i64, u32)>>,
    pub s: Vec<u32>,
    pub u: Vec<u32>,
    pub t: Vec<u32>,
    pub x: u64,
    pub x_grid: Vec<u64>,
    pub n_min: u64,
    pub n_max: u64,
    /// Sample this many `n` from `[n_min, n_max]` instead of taking all.
    pub n_samples: Option<usize>,
    /// Target for the singular subcommand.
    pub target: u64,
    pub q_max: u64,
    pub q_list: Vec<u64>,
    pub h_max: u32,
    pub p_max: u64,
    pub t_list: Vec<f64>,
    pub kernel: Kernel,
    pub psi: PsiConfig,
    pub integral: IntegralConfig,
    pub schmidt: SchmidtConfig,
    pub search: SearchConfig,
    pub tail_policy: TailPolicy,
    pub singular: SingularParts,
    pub predict: PredictConfig,
    pub seed: u64,
    pub out: Option<PathBuf>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            set: SetConfig::Naturals,
            k: 2,
            phi: None,
            s: vec![2],
            u: Vec::new(),
            t: Vec::new(),
            x: 1000,
            x_grid: Vec::new(),
            n_min: 1,
            n_max: 100,
            n_samples: None,
            target: 1,
            q_max: 50,
            q_list: vec![4, 8, 16, 32],
            h_max: 4,
            p_max: 20,
            t_list: vec![4.0, 8.0, 16.0, 32.0],
            kernel: Kernel::Auto,
            psi: PsiConfig::Star,
            integral: IntegralConfig::default(),
            schmidt: SchmidtConfig::default(),
            search: SearchConfig::default(),
            tail_policy: TailPolicy::PowerFit,
            singular: SingularParts::default(),
            predict: PredictConfig::default(),
            seed: 1,
            out: None,
        }
    }
}

impl ScenarioConfig {
    /// Parses a config document and applies `KEY=VAL` overrides on dotted paths.
    pub fn load(text: Option<&str>, overrides: &[String]) -> Result<Self> {
        let mut doc: Value = match text {
            Some(t) => serde_json::from_str(t).map_err(|e| Error::Config(e.to_string()))?,
            None => Value::Object(Map::new()),
        };
        for o in overrides {
            apply_override(&mut doc, o)?;
        }
        let cfg: ScenarioConfig = serde_json::from_value(doc).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.into()));
        if self.k == 0 {
            return bad("k must be positive");
        }
        if self.s.is_empty() || self.s.contains(&0) {
            return bad("s must be a nonempty list of positive integers");
        }
        if self.n_min > self.n_max {
            return bad("n_min exceeds n_max");
        }
        if self.q_max == 0 {
            return bad("q_max must be positive");
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON, ignoring the output directory.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.out = None;
        let text = serde_json::to_string(&c).expect("config serializes");
        Sha256::digest(text.as_bytes()).iter().fold(String::new(), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }

    fn phi(&self) -> Result<PolySystem> {
        match &self.phi {
            Some(terms) => PolySystem::new(terms.clone()),
            None => Ok(PolySystem::monomial(self.k)),
        }
    }

    fn mode(&self, n: u64) -> SeriesMode {
        let s = self.s[0];
        match self.predict.theorem {
            TheoremKind::Waring | TheoremKind::PrimeWaring => SeriesMode::Waring { s, n },
            TheoremKind::Mixed => SeriesMode::Mixed {
                s,
                u: self.u.first().copied().unwrap_or(0),
                n,
            },
            TheoremKind::MeanValue => SeriesMode::MeanValue { s },
        }
    }

    fn integral_config(&self) -> IntegralConfig {
        let mut c = self.integral;
        c.seed = c.seed.wrapping_add(self.seed);
        c
    }

    fn schmidt_config(&self) -> SchmidtConfig {
        let mut c = self.schmidt;
        c.seed = c.seed.wrapping_add(self.seed);
        c
    }

    /// The `n` values a batch runs over, sorted.
    fn n_values(&self) -> Vec<u64> {
        let span = self.n_max - self.n_min + 1;
        match self.n_samples {
            Some(m) if (m as u64) < span => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                let mut v: Vec<u64> =
                    sample(&mut rng, span as usize, m).into_iter().map(|i| self.n_min + i as u64).collect();
                v.sort_unstable();
                v
            }
            _ => (self.n_min..=self.n_max).collect(),
        }
    }
}

fn apply_override(doc: &mut Value, spec: &str) -> Result<()> {
    let (key, val) = spec
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override {spec:?} is not KEY=VAL")))?;
    let value = serde_json::from_str(val).unwrap_or_else(|_| Value::String(val.to_string()));
    let mut cur = doc;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        if part.is_empty() {
            return Err(Error::Config(format!("empty path segment in {key:?}")));
        }
        let Value::Object(map) = cur else {
            return Err(Error::Config(format!("{key:?} does not address an object")));
        };
        if i + 1 == parts.len() {
            map.insert(part.to_string(), value);
            return Ok(());
        }
        cur = map.entry(part.to_string()).or_insert_with(|| Value::Object(Map::new()));
    }
    Ok(())
}

/// Exit status for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Budget { .. } => EXIT_BUDGET,
        Error::NonConvergence(_) | Error::Unstabilized(_) | Error::DegenerateFit(_) | Error::PathMismatch { .. } => {
            EXIT_NONCONVERGENCE
        }
        Error::Io(_) => 1,
        _ => EXIT_CONFIG,
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "circleforge", version, about = "Circle-method laboratory")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Scenario config (JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Override a config key, e.g. `--set predict.theorem=mixed`.
    #[arg(long = "set", value_name = "KEY=VAL", global = true)]
    pub overrides: Vec<String>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Format of tabular reports.
    #[arg(long, value_enum, default_value_t = Format::Csv, global = true)]
    pub format: Format,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Generate a set and describe it.
    Set,
    /// Residue distribution, condition (C) and Y(X).
    Dist,
    /// Representation counts and mean values.
    Count,
    /// Minor-arc suprema and the Weyl exponent.
    Weyl,
    /// Singular series, local factors, singular integral, W_T.
    Singular,
    /// Main terms and theorem applicability.
    Predict,
    /// Exact counts against predicted main terms.
    Compare,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Set => "set",
            Command::Dist => "dist",
            Command::Count => "count",
            Command::Weyl => "weyl",
            Command::Singular => "singular",
            Command::Predict => "predict",
            Command::Compare => "compare",
        }
    }
}

/// Writes report files under one directory, each stamped with the config hash.
pub struct Reporter {
    dir: PathBuf,
    meta: Value,
    format: Format,
    written: Vec<PathBuf>,
}

impl Reporter {
    pub fn new(dir: &Path, cfg: &ScenarioConfig, command: &str, format: Format) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Reporter {
            dir: dir.to_path_buf(),
            meta: json!({
                "tool": "circleforge",
                "version": env!("CARGO_PKG_VERSION"),
                "command": command,
                "config_hash": cfg.hash(),
                "seed": cfg.seed,
            }),
            format,
            written: Vec::new(),
        })
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    fn put(&mut self, file: &str, text: &str) -> Result<()> {
        let path = self.dir.join(file);
        std::fs::write(&path, text)?;
        self.written.push(path);
        Ok(())
    }

    pub fn json(&mut self, name: &str, body: Value) -> Result<()> {
        let mut doc = Map::new();
        doc.insert("meta".into(), self.meta.clone());
        match body {
            Value::Object(m) => doc.extend(m),
            other => {
                doc.insert("data".into(), other);
            }
        }
        let text = serde_json::to_string_pretty(&Value::Object(doc))? + "\n";
        self.put(&format!("{name}.json"), &text)
    }

    pub fn table(&mut self, name: &str, columns: &[&str], rows: &[Vec<String>]) -> Result<()> {
        match self.format {
            Format::Csv => {
                let mut text = String::new();
                let _ = writeln!(
                    text,
                    "# circleforge {} config {}",
                    self.meta["version"].as_str().unwrap_or(""),
                    self.meta["config_hash"].as_str().unwrap_or("")
                );
                let _ = writeln!(text, "{}", columns.join(","));
                for r in rows {
                    let _ = writeln!(text, "{}", r.join(","));
                }
                self.put(&format!("{name}.csv"), &text)
            }
            Format::Json => self.json(name, json!({ "columns": columns, "rows": rows })),
        }
    }
}

/// Runs the CLI on `args` and returns the exit status.
pub fn main_from_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { 0 };
        }
    };
    match run(&cli) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// Loads the config, applies flags and runs the subcommand.
pub fn run(cli: &Cli) -> Result<Vec<PathBuf>> {
    let text = match &cli.config {
        Some(p) => Some(std::fs::read_to_string(p).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?),
        None => None,
    };
    let mut cfg = ScenarioConfig::load(text.as_deref(), &cli.overrides)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.out = Some(out.clone());
    }
    if let Some(n) = cli.threads {
        // a second build in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    let mut rep = Reporter::new(&dir, &cfg, cli.command.name(), cli.format)?;
    run_command(cli.command, &cfg, &mut rep)?;
    Ok(rep.written().to_vec())
}

pub fn run_command(command: Command, cfg: &ScenarioConfig, rep: &mut Reporter) -> Result<()> {
    match command {
        Command::Set => cmd_set(cfg, rep),
        Command::Dist => cmd_dist(cfg, rep),
        Command::Count => cmd_count(cfg, rep),
        Command::Weyl => cmd_weyl(cfg, rep),
        Command::Singular => cmd_singular(cfg, rep),
        Command::Predict => cmd_predict(cfg, rep),
        Command::Compare => cmd_compare(cfg, rep),
    }
}

fn set_at(cfg: &ScenarioConfig, x: u64) -> Result<WeightedSet> {
    generate_set(&cfg.set.to_spec()?, x.max(2))
}

fn approx_for(cfg: &ScenarioConfig, a: &WeightedSet) -> Result<PsiApprox> {
    match cfg.psi {
        PsiConfig::Star => build_psi_star(a),
        PsiConfig::Li { tau } => li_profile(tau, a.bound()),
    }
}

fn profile_for(cfg: &ScenarioConfig, a: &WeightedSet, level: u64) -> Result<DistributionProfile> {
    match &cfg.set {
        SetConfig::Naturals => Ok(DistributionProfile::classical(level)),
        SetConfig::Primes => Ok(DistributionProfile::primes(level)),
        SetConfig::Ellipsephic { p, digits } => DistributionProfile::ellipsephic(*p, digits, level),
        _ => {
            let grid = if cfg.x_grid.len() >= 2 {
                cfg.x_grid.clone()
            } else {
                vec![(a.bound() / 4).max(2), (a.bound() / 2).max(2), a.bound()]
            };
            estimate_kappa(a, cfg.q_max, &grid)
        }
    }
}

/// Profile level covering `q_max` and every `p^h` a local factor needs.
fn level_for(cfg: &ScenarioConfig) -> u64 {
    let mut level = cfg.q_max;
    if cfg.singular.local {
        for p in primes_up_to(cfg.p_max) {
            level = level.max(p.saturating_pow(cfg.h_max));
        }
    }
    level
}

fn cmd_set(cfg: &ScenarioConfig, rep: &mut Reporter) -> Result<()> {
    let a = set_at(cfg, cfg.x)?;
    rep.put("set.txt", &a.to_file_string())?;
    let mut body = json!({
        "label": a.label(),
        "bound": a.bound(),
        "support": a.len(),
        "mass": format_rational(&a.count_up_to(a.bound())?),
        "convexity": { "holds": check_convexity(&a)?.holds },
    });
    if cfg.x_grid.len() >= 2 {
        body["log_density"] = serde_json::to_value(log_density(&a, &cfg.x_grid)?)?;
    }
    rep.json("set", body)
}

fn coprime_pairs(q_max: u64) -> Vec<(u64, u64)> {
    let mut out = Vec::new();
    for q in 2..=q_max {
        for q2 in q + 1..=q_max / q {
            if gcd(q, q2) == 1 {
                out.push((q, q2));
            }
        }
    }
    out
}

fn cmd_dist(cfg: &ScenarioConfig, rep: &mut Reporter) -> Result<()> {
    let a = set_at(cfg, cfg.x)?;
    let profile = profile_for(cfg, &a, cfg.q_max)?;
    let mut body = json!({
        "q_max": cfg.q_max,
        "kappa": profile.to_json(cfg.q_max)?,
        "condition_c": serde_json::to_value(check_condition_c(&profile, &coprime_pairs(cfg.q_max))?)?,
    });
    if let Some(b) = profile.max_error_bound() {
        body["max_error_bound"] = Value::String(format_rational(&b));
    }
    if let Some(y) = &cfg.predict.y {
        let variant = cfg.predict.y_variant.unwrap_or(YVariant::Waring);
        body["y"] = serde_json::to_value(compute_y(y, variant)?)?;
    }
    rep.json("dist", body)
}

fn cmd_count(cfg: &ScenarioConfig, rep: &mut Reporter) -> Result<()> {
    let x = cfg.x.max(crate::arith::iroot(cfg.n_max, cfg.k));
    let a = set_at(cfg, x)?;
    let us = if cfg.u.is_empty() { vec![0] } else { cfg.u.clone() };
    let mut summary = Map::new();
    for &s in &cfg.s {
        for &u in &us {
            let table = if u == 0 {
                count_representations(&a, cfg.k, s, cfg.n_max, cfg.kernel)?
            } else {
                count_mixed(&a, cfg.k, s, u, cfg.n_max, cfg.kernel)?
            };
            let rows: Vec<Vec<String>> = (cfg.n_min..=cfg.n_max)
                .map(|n| vec![n.to_string(), format_rational(&table.get(n))])
                .collect();
            let name = if u == 0 { format!("count_s{s}") } else { format!("count_s{s}_u{u}") };
            rep.table(&name, &["n", "count"], &rows)?;
            summary.insert(name, json!({ "verified_windows": table.verified_windows }));
        }
    }
    if !cfg.t.is_empty() && !cfg.x_grid.is_empty() {
        let phi = cfg.phi()?;
        let big = set_at(cfg, *cfg.x_grid.iter().max().unwrap())?;
        for &t in &cfg.t {
            let mut rows = Vec::new();
            let mut pts = Vec::new();
            for &xg in &cfg.x_grid {
                let rec = mean_value(&big, &phi, t, xg)?;
                let scale = (xg as f64).min(to_f64(&big.count_up_to(xg)?));
                pts.push((scale, rec.delta_hat));
                rows.push(vec![
                    xg.to_string(),
                    format_rational(&rec.value),
                    rec.delta_hat.to_string(),
                    rec.display_ratio.to_string(),
                ]);
            }
            rep.table(&format!("energy_t{t}"), &["X", "value", "delta_hat", "display_ratio"], &rows)?;
            if let Ok((omega, residual)) = fit_omega(&pts) {
                summary.insert(format!("omega_t{t}"), json!({ "omega": omega, "residual_max": residual }));
            }
        }
    }
    rep.json("count", Value::Object(summary))
}

fn cmd_weyl(cfg: &ScenarioConfig, rep: &mut Reporter) -> Result<()> {
    let a = set_at(cfg, cfg.x)?;
    let phi = cfg.phi()?;
    let sups = minor_arc_sweep(&a, &phi, cfg.x, &cfg.q_list, &cfg.search)?;
    let rows: Vec<Vec<String>> = sups
        .iter()
        .map(|e| vec![e.q.to_string(), e.sup.to_string(), e.argmax.to_string(), e.grid_points.to_string()])
        .collect();
    rep.table("weyl", &["Q", "sup", "argmax", "grid_points"], &rows)?;
    let a_x = to_f64(&a.count_up_to(cfg.x)?);
    let table: Vec<(f64, f64)> = sups.iter().map(|e| (e.q as f64, e.sup)).collect();
    rep.json("weyl", json!({ "a_x": a_x, "fit": serde_json::to_value(fit_rho(&table, a_x)?)? }))
}

fn cmd_singular(cfg: &ScenarioConfig, rep: &mut Reporter) -> Result<()> {
    let a = set_at(cfg, cfg.x)?;
    let phi = cfg.phi()?;
    let mode = cfg.mode(cfg.target);
    let profile = profile_for(cfg, &a, level_for(cfg))?;
    let mut body = Map::new();
    body.insert("mode".into(), serde_json::to_value(mode)?);
    if cfg.singular.series {
        let s = SeriesEngine::new(&profile, &phi).series(&mode, cfg.q_max)?;
        let rows: Vec<Vec<String>> = s.per_q.iter().map(|(q, t)| vec![q.to_string(), format!("{t:e}")]).collect();
        rep.table("series_terms", &["q", "term"], &rows)?;
        body.insert("series".into(), serde_json::to_value(&s)?);
    }
    if cfg.singular.local {
        let mut factors = Vec::new();
        let target = mode.target().unwrap_or(0);
        for p in primes_up_to(cfg.p_max) {
            factors.extend(local_factors(&profile, &phi, &mode, p, cfg.h_max, &[target])?);
        }
        let rows: Vec<Vec<String>> = factors
            .iter()
            .map(|f| vec![f.p.to_string(), format_rational(&f.exact), f.value.to_string(), f.stabilized.to_string()])
            .collect();
        rep.table("local_factors", &["p", "exact", "value", "stabilized"], &rows)?;
        let ep = euler_product(&factors, cfg.p_max, cfg.tail_policy)?;
        body.insert("euler_product".into(), serde_json::to_value(&ep)?);
    }
    rep.json("singular", Value::Object(body.clone()))?;
    if cfg.singular.integral {
        let approx = approx_for(cfg, &a)?;
        let mut eng = IntegralEngine::new(&approx, &phi, cfg.x, cfg.integral_config())?;
        let q = cfg.predict.integral_q.unwrap_or(cfg.q_max as f64);
        let r = eng.truncated(&mode, q)?;
        body.insert("integral".into(), serde_json::to_value(&r)?);
        rep.json("singular", Value::Object(body.clone()))?;
    }
    if cfg.singular.schmidt {
        let approx = approx_for(cfg, &a)?;
        let sc = cfg.schmidt_config();
        let mut rows = Vec::new();
        for &t in &cfg.t_list {
            let e = schmidt_wt(&approx, &phi, mode.s(), cfg.x, t, &sc)?;
            rows.push(vec![t.to_string(), e.value.to_string(), e.std_error.to_string()]);
        }
        rep.table("schmidt", &["T", "value", "std_error"], &rows)?;
    }
    Ok(())
}

/// Predictions for each `n` (or each `X` in mean-value mode).
struct Predictions {
    reports: Vec<(u64, PredictionReport)>,
    integral: Option<IntegralReport>,
}

fn predictions(cfg: &ScenarioConfig, points: &[u64]) -> Result<Predictions> {
    let phi = cfg.phi()?;
    let s = cfg.s[0];
    let theorem_kind = cfg.predict.theorem;
    let top = *points.iter().max().ok_or_else(|| Error::Config("no points to predict".into()))?;
    let x_top = match theorem_kind {
        TheoremKind::MeanValue => top,
        _ => crate::arith::iroot(top, phi.k_max()) + 2,
    };
    let a = set_at(cfg, x_top)?;
    let approx = approx_for(cfg, &a)?;
    let profile = profile_for(cfg, &a, cfg.q_max)?;
    let mut engine = SeriesEngine::new(&profile, &phi);

    let mut integral = None;
    let integral_value = match (theorem_kind, cfg.predict.integral) {
        (TheoremKind::PrimeWaring, _) => 1.0,
        (_, Some(v)) => v,
        (_, None) => {
            let mut eng = IntegralEngine::new(&approx, &phi, x_top, cfg.integral_config())?;
            let q = cfg.predict.integral_q.unwrap_or(cfg.q_max as f64);
            let r = eng.truncated(&cfg.mode(1), q)?;
            let v = r.value;
            integral = Some(r);
            v
        }
    };
    let integral_delta = integral.as_ref().and_then(|r| r.tail.as_ref()).and_then(|t| t.delta);

    let mut reports = Vec::with_capacity(points.len());
    let mut mv_series = None;
    for &n in points {
        let mode = cfg.mode(n);
        let (series, series_delta) = match cfg.predict.series {
            Some(v) => (v, None),
            None if theorem_kind == TheoremKind::MeanValue && mv_series.is_some() => mv_series.unwrap(),
            None => {
                let r = engine.series(&mode, cfg.q_max)?;
                let v = (r.value, r.tail.as_ref().and_then(|t| t.delta));
                if theorem_kind == TheoremKind::MeanValue {
                    mv_series = Some(v);
                }
                v
            }
        };
        let (theorem, a_value) = match theorem_kind {
            TheoremKind::Waring => (
                Theorem::Waring { k: cfg.k, s, n },
                approx.evaluate((n as f64).powf(1.0 / cfg.k as f64))?.0,
            ),
            TheoremKind::Mixed => (
                Theorem::Mixed {
                    k: cfg.k,
                    s,
                    u: mode.u(),
                    n,
                },
                approx.evaluate((n as f64).powf(1.0 / cfg.k as f64))?.0,
            ),
            TheoremKind::MeanValue => (
                Theorem::MeanValue {
                    big_k: phi.big_k(),
                    s,
                    x: n,
                },
                to_f64(&a.count_up_to(n)?),
            ),
            TheoremKind::PrimeWaring => (Theorem::PrimeWaring { k: cfg.k, s, n }, 0.0),
        };
        let c = Constituents {
            a: a_value,
            series,
            series_q: cfg.predict.series.is_none().then_some(cfg.q_max),
            series_delta,
            integral: integral_value,
            integral_q: integral.as_ref().map(|r| r.q_max),
            integral_delta,
        };
        reports.push((n, main_term(&theorem, &c, Some(&mode), None)?));
    }
    Ok(Predictions { reports, integral })
}

fn cmd_predict(cfg: &ScenarioConfig, rep: &mut Reporter) -> Result<()> {
    let points = match cfg.predict.theorem {
        TheoremKind::MeanValue if !cfg.x_grid.is_empty() => cfg.x_grid.clone(),
        _ => cfg.n_values(),
    };
    let p = predictions(cfg, &points)?;
    let rows: Vec<Vec<String>> = p
        .reports
        .iter()
        .map(|(n, r)| {
            vec![
                n.to_string(),
                r.main_term.to_string(),
                r.constituents.a.to_string(),
                r.constituents.series.to_string(),
                r.constituents.integral.to_string(),
            ]
        })
        .collect();
    rep.table("predict", &["n", "main_term", "a", "series", "integral"], &rows)?;
    let mut body = Map::new();
    let verdicts = cfg
        .predict
        .checks
        .iter()
        .map(|t| applicability(*t, &cfg.predict.measurements))
        .collect::<Result<Vec<_>>>()?;
    body.insert("applicability".into(), serde_json::to_value(verdicts)?);
    if let Some(y) = &cfg.predict.y {
        body.insert(
            "y".into(),
            serde_json::to_value(compute_y(y, cfg.predict.y_variant.unwrap_or(YVariant::Waring))?)?,
        );
    }
    if let Some(r) = &p.integral {
        body.insert("integral".into(), serde_json::to_value(r)?);
    }
    rep.json("predict", Value::Object(body))
}

fn cmd_compare(cfg: &ScenarioConfig, rep: &mut Reporter) -> Result<()> {
    let s = cfg.s[0];
    let (points, exact): (Vec<u64>, Vec<(u64, BigRational)>) = if cfg.predict.theorem == TheoremKind::MeanValue {
        if cfg.x_grid.is_empty() {
            return Err(Error::Config("mean-value comparison needs x_grid".into()));
        }
        let phi = cfg.phi()?;
        let a = set_at(cfg, *cfg.x_grid.iter().max().unwrap())?;
        let exact = cfg
            .x_grid
            .iter()
            .map(|&x| Ok((x, mean_value(&a, &phi, s, x)?.value)))
            .collect::<Result<Vec<_>>>()?;
        (cfg.x_grid.clone(), exact)
    } else {
        let ns = cfg.n_values();
        let x = crate::arith::iroot(cfg.n_max, cfg.k).max(2);
        let a = set_at(cfg, x)?;
        let table = match cfg.predict.theorem {
            TheoremKind::Mixed => {
                count_mixed(&a, cfg.k, s, cfg.u.first().copied().unwrap_or(0), cfg.n_max, cfg.kernel)?
            }
            _ => count_representations(&a, cfg.k, s, cfg.n_max, cfg.kernel)?,
        };
        let exact = ns.iter().map(|&n| (n, table.get(n))).collect();
        (ns, exact)
    };
    let p = predictions(cfg, &points)?;
    let pred: Vec<(u64, f64)> = p.reports.iter().map(|(n, r)| (*n, r.main_term)).collect();
    let c = compare(&exact, &pred, None)?;
    let rows: Vec<Vec<String>> = c
        .points
        .iter()
        .map(|pt| {
            vec![
                pt.n.to_string(),
                pt.exact.clone(),
                pt.predicted.to_string(),
                pt.ratio.map(|r| r.to_string()).unwrap_or_default(),
            ]
        })
        .collect();
    rep.table("compare", &["n", "exact", "predicted", "ratio"], &rows)?;
    let confidence = p.reports.iter().filter_map(|r| r.1.confidence).reduce(f64::min);
    let mut body = json!({
        "window": c.window,
        "points": c.points.len(),
        "mean_ratio": c.mean_ratio,
        "max_deviation": c.max_deviation,
        "flagged": c.flagged,
        "flags": c.points.iter().filter_map(|p| p.flag.as_ref().map(|f| json!({"n": p.n, "flag": f}))).collect::<Vec<_>>(),
        "confidence": confidence,
    });
    if let Some(r) = &p.integral {
        body["integral"] = json!({ "value": r.value, "q_max": r.q_max, "error_estimate": r.error_estimate });
    }
    rep.json("compare", body)
}

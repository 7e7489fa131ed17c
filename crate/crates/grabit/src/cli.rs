//! Command-line interface: train/predict/simulate/evaluate/compare/
//! explain. Every command is deterministic given its flags, never
//! mutates its inputs, and exits 0 only after writing all declared
//! outputs. Exit codes: 2 usage, 3 data/file, 4 numerical.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::boost::{fit_boosted, BoostConfig, BoostedEnsemble};
use crate::data::{lower_median, read_csv, read_feature_csv, Dataset, Matrix};
use crate::error::{Error, Result};
use crate::eval::band::RocBand;
use crate::eval::delong::delong_test;
use crate::eval::roc::RocCurve;
use crate::eval::temporal::{temporal_cv, Scorer, TemporalCvConfig};
use crate::interpret::{
    local_partial_dependence, partial_dependence, variable_importance, IntervalStrategy,
};
use crate::linear::{fit_linear_tobit, fit_logit};
use crate::loss::{CensoringBounds, Loss};
use crate::model::{Model, ModelBody};
use crate::plot::SvgPlot;
use crate::sigma::{select_sigma, SigmaSearchConfig};
use crate::sim::{run_study, SimulationScenario, StudyModel, TuningGrids};

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidConfig(_) | Error::InvalidBounds { .. } | Error::UnknownPreset(_) => {
            EXIT_USAGE
        }
        Error::Io(_)
        | Error::Csv(_)
        | Error::Json(_)
        | Error::Data(_)
        | Error::Model(_)
        | Error::EmptyDataset
        | Error::LengthMismatch { .. }
        | Error::DimensionMismatch { .. }
        | Error::ResponseOutsideBounds { .. }
        | Error::NonBinaryResponse(_) => EXIT_DATA,
        _ => EXIT_NUMERIC,
    }
}

#[derive(Parser)]
#[command(
    name = "grabit",
    version,
    about = "Gradient tree boosting for censored regression and default prediction"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a model on a CSV dataset and write a versioned model file
    Train(TrainArgs),
    /// Score a feature CSV with a saved model
    Predict(PredictArgs),
    /// Run a replication study on synthetic data
    Simulate(SimulateArgs),
    /// Temporal cross-validation of model specs on timestamped data
    Evaluate(EvaluateArgs),
    /// DeLong test between two score files
    Compare(CompareArgs),
    /// Variable importance, partial dependence, or local curves
    Explain(ExplainArgs),
}

/// Entry point used by main; returns the process exit code.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    let result = match cli.command {
        Command::Train(a) => cmd_train(a),
        Command::Predict(a) => cmd_predict(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Explain(a) => cmd_explain(a),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

// ---------------------------------------------------------------- train

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModelKindArg {
    Grabit,
    Tobit,
    Logit,
    BoostedLogit,
}

#[derive(Args)]
struct TrainArgs {
    /// Training CSV with a header row
    #[arg(long)]
    data: PathBuf,
    /// Response column name
    #[arg(long)]
    target: String,
    #[arg(long, value_enum)]
    model: ModelKindArg,
    /// Lower censoring bound (grabit/tobit; use -inf for none)
    #[arg(long, allow_hyphen_values = true)]
    lower: Option<f64>,
    /// Upper censoring bound (grabit/tobit; use inf for none)
    #[arg(long, allow_hyphen_values = true)]
    upper: Option<f64>,
    /// Fixed latent scale for grabit
    #[arg(long, conflicts_with = "sigma_search")]
    sigma: Option<f64>,
    /// Select sigma by profile likelihood over the default grid
    #[arg(long)]
    sigma_search: bool,
    /// Number of boosting stages
    #[arg(long, default_value_t = 100)]
    trees: usize,
    #[arg(long, default_value_t = 0.1)]
    shrinkage: f64,
    /// Maximum tree depth
    #[arg(long, default_value_t = 3)]
    depth: usize,
    /// Comma-separated columns to log-transform before fitting
    #[arg(long, value_delimiter = ',')]
    log_transform: Vec<String>,
    /// Reserved for stochastic variants; fitting is deterministic
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output model file (JSON)
    #[arg(long)]
    out: PathBuf,
}

/// Replace missing feature values by the per-column lower median;
/// returns the number of imputed cells.
fn impute_missing(ds: &mut Dataset) -> usize {
    let mut count = 0;
    for j in 0..ds.features.n_cols() {
        let col = ds.features.column(j);
        if !col.iter().any(|v| v.is_nan()) {
            continue;
        }
        let fill = lower_median(&col).unwrap_or(0.0);
        for i in 0..ds.features.n_rows() {
            if ds.features.get(i, j).is_nan() {
                ds.features.set(i, j, fill);
                count += 1;
            }
        }
    }
    count
}

fn bounds_from_flags(lower: Option<f64>, upper: Option<f64>) -> Result<CensoringBounds> {
    if lower.is_none() && upper.is_none() {
        return Err(Error::InvalidConfig(
            "censored models require --lower and/or --upper".into(),
        ));
    }
    CensoringBounds::new(
        lower.unwrap_or(f64::NEG_INFINITY),
        upper.unwrap_or(f64::INFINITY),
    )
}

fn cmd_train(a: TrainArgs) -> Result<()> {
    let mut ds = read_csv(&a.data, &a.target, None)?;
    ds.log_transform(&a.log_transform)?;
    let imputed = impute_missing(&mut ds);
    let _ = a.seed; // reserved

    let model = match a.model {
        ModelKindArg::Grabit => {
            let bounds = bounds_from_flags(a.lower, a.upper)?;
            let snapped = ds.snap_responses(&bounds)?;
            let sigma = if a.sigma_search {
                let base = BoostConfig::new(
                    a.trees,
                    a.shrinkage,
                    a.depth,
                    Loss::tobit(bounds.clone(), 1.0)?,
                );
                let (s, diag) =
                    select_sigma(&ds.features, &ds.response, &base, &SigmaSearchConfig::default())?;
                println!("sigma search (profile log-likelihood):");
                println!("sigma,profile_loglik");
                for (sig, ll) in &diag.trace {
                    println!("{sig},{ll}");
                }
                if let Some((sig, ll)) = diag.refined {
                    println!("refined,{sig},{ll}");
                }
                s
            } else {
                a.sigma.unwrap_or(1.0)
            };
            let cfg = BoostConfig::new(a.trees, a.shrinkage, a.depth, Loss::tobit(bounds, sigma)?);
            let ens = fit_boosted(&ds.features, &ds.response, &cfg)?;
            let loss = ens.empirical_loss(&ds.features, &ds.response)?;
            println!("model: boosted tobit");
            println!("sigma: {sigma}");
            println!("trees: {}", ens.n_trees());
            println!("final training loss: {loss}");
            println!("snapped responses: {snapped}");
            Model::boosted(ens, ds.feature_names.clone(), a.log_transform.clone())
        }
        ModelKindArg::BoostedLogit => {
            let cfg = BoostConfig::new(a.trees, a.shrinkage, a.depth, Loss::BernoulliLogit);
            let ens = fit_boosted(&ds.features, &ds.response, &cfg)?;
            let loss = ens.empirical_loss(&ds.features, &ds.response)?;
            println!("model: boosted logit");
            println!("trees: {}", ens.n_trees());
            println!("final training loss: {loss}");
            Model::boosted(ens, ds.feature_names.clone(), a.log_transform.clone())
        }
        ModelKindArg::Tobit => {
            let bounds = bounds_from_flags(a.lower, a.upper)?;
            let snapped = ds.snap_responses(&bounds)?;
            let fit = fit_linear_tobit(&ds.features, &ds.response, bounds)?;
            println!("model: linear tobit");
            println!("sigma: {}", fit.model.sigma.unwrap());
            println!("converged: {}", fit.converged);
            println!("snapped responses: {snapped}");
            if let Some(w) = &fit.warning {
                eprintln!("warning: {w}");
            }
            Model::linear(fit.model, ds.feature_names.clone(), a.log_transform.clone())
        }
        ModelKindArg::Logit => {
            let fit = fit_logit(&ds.features, &ds.response)?;
            println!("model: logit");
            println!("converged: {}", fit.converged);
            if let Some(w) = &fit.warning {
                eprintln!("warning: {w}");
            }
            Model::linear(fit.model, ds.feature_names.clone(), a.log_transform.clone())
        }
    };
    if imputed > 0 {
        println!("imputed missing feature values: {imputed}");
    }
    model.save(&a.out)?;
    println!("wrote {}", a.out.display());
    Ok(())
}

// -------------------------------------------------------------- predict

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputKind {
    Latent,
    Prob,
    Both,
}

#[derive(Args)]
struct PredictArgs {
    /// Saved model file
    #[arg(long)]
    model: PathBuf,
    /// Feature CSV with a header row
    #[arg(long)]
    data: PathBuf,
    /// Output CSV
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = OutputKind::Both)]
    output: OutputKind,
}

/// Map the model's training columns onto the CSV's columns by name; a
/// model without stored names requires a width match instead.
fn column_mapping(model: &Model, csv_names: &[String]) -> Result<Vec<usize>> {
    if model.feature_names.is_empty() {
        if csv_names.len() != model.n_features() {
            return Err(Error::DimensionMismatch {
                expected: model.n_features(),
                got: csv_names.len(),
            });
        }
        return Ok((0..csv_names.len()).collect());
    }
    model
        .feature_names
        .iter()
        .map(|name| {
            csv_names
                .iter()
                .position(|c| c == name)
                .ok_or_else(|| Error::Data(format!("column '{name}' missing from input data")))
        })
        .collect()
}

/// Assemble a prediction row in training column order with the model's
/// log transform applied.
fn model_row(model: &Model, mapping: &[usize], raw: &[f64]) -> Result<Vec<f64>> {
    let mut x: Vec<f64> = mapping.iter().map(|&j| raw[j]).collect();
    for name in &model.log_transform {
        let j = model
            .feature_names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::Model(format!("log-transform column '{name}' unknown")))?;
        let v = x[j];
        if v.is_nan() {
            continue;
        }
        if v <= 0.0 {
            return Err(Error::Data(format!(
                "column '{name}' has non-positive value {v}; log transform undefined"
            )));
        }
        x[j] = v.ln();
    }
    Ok(x)
}

fn cmd_predict(a: PredictArgs) -> Result<()> {
    let model = Model::load(&a.model)?;
    let (names, rows) = read_feature_csv(&a.data)?;
    let mapping = column_mapping(&model, &names)?;

    let mut out = String::new();
    match a.output {
        OutputKind::Latent => out.push_str("row,latent\n"),
        OutputKind::Prob => out.push_str("row,prob\n"),
        OutputKind::Both => out.push_str("row,latent,prob\n"),
    }
    for (i, raw) in rows.iter().enumerate() {
        let x = model_row(&model, &mapping, raw)?;
        match a.output {
            OutputKind::Latent => {
                let _ = writeln!(out, "{i},{}", model.predict_latent(&x)?);
            }
            OutputKind::Prob => {
                let _ = writeln!(out, "{i},{}", model.predict_default_prob(&x)?);
            }
            OutputKind::Both => {
                let _ = writeln!(
                    out,
                    "{i},{},{}",
                    model.predict_latent(&x)?,
                    model.predict_default_prob(&x)?
                );
            }
        }
    }
    fs::write(&a.out, out)?;
    println!("wrote {} ({} rows)", a.out.display(), rows.len());
    Ok(())
}

// ------------------------------------------------------------- simulate

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum GridChoice {
    /// M in {10,100,1000}, nu in {0.1,0.01,0.001}, T in {3,5,10}
    Full,
    /// M in {100,1000}, nu in {0.1,0.01}, T in {3,5}
    Reduced,
}

#[derive(Args)]
struct SimulateArgs {
    /// Named scenario preset
    #[arg(long, conflicts_with = "scenario")]
    preset: Option<String>,
    /// Scenario file: one `key = value` per line, `#` comments; keys are
    /// preset, decision_fn, sigma_eps, y_u, mu_a, sigma_a,
    /// zero_correlation, n_train, n_valid, n_test, replications, seed
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Comma-separated roster: grabit, boosted-logit, logit, tobit
    #[arg(long, value_delimiter = ',', default_values_t = [
        "grabit".to_string(), "boosted-logit".to_string(),
        "logit".to_string(), "tobit".to_string()
    ])]
    models: Vec<String>,
    #[arg(long)]
    replications: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = GridChoice::Full)]
    grids: GridChoice,
    #[arg(long)]
    outdir: PathBuf,
}

fn parse_bool(v: &str) -> Result<bool> {
    match v {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::InvalidConfig(format!("invalid boolean '{v}'"))),
    }
}

fn parse_scenario_file(path: &Path) -> Result<SimulationScenario> {
    let text = fs::read_to_string(path)?;
    let mut pairs = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            Error::Data(format!("scenario line {}: expected 'key = value'", ln + 1))
        })?;
        pairs.push((k.trim().to_string(), v.trim().to_string()));
    }
    let mut sc = match pairs.iter().find(|(k, _)| k == "preset") {
        Some((_, name)) => SimulationScenario::preset(name)?,
        None => SimulationScenario::preset("corr0.5")?,
    };
    let f = |v: &str| -> Result<f64> {
        v.parse()
            .map_err(|_| Error::InvalidConfig(format!("invalid number '{v}'")))
    };
    let u = |v: &str| -> Result<usize> {
        v.parse()
            .map_err(|_| Error::InvalidConfig(format!("invalid integer '{v}'")))
    };
    for (k, v) in &pairs {
        match k.as_str() {
            "preset" => {}
            "decision_fn" => {
                sc.decision_fn = match v.as_str() {
                    "nonlinear_interaction" => crate::sim::DecisionFn::NonlinearInteraction,
                    "linear" => crate::sim::DecisionFn::Linear,
                    "highly_nonlinear" => crate::sim::DecisionFn::HighlyNonlinear,
                    _ => {
                        return Err(Error::InvalidConfig(format!(
                            "unknown decision_fn '{v}'"
                        )))
                    }
                }
            }
            "sigma_eps" => sc.sigma_eps = f(v)?,
            "y_u" => sc.y_u = f(v)?,
            "mu_a" => sc.mu_a = f(v)?,
            "sigma_a" => sc.sigma_a = f(v)?,
            "zero_correlation" => sc.zero_correlation = parse_bool(v)?,
            "n_train" => sc.n_train = u(v)?,
            "n_valid" => sc.n_valid = u(v)?,
            "n_test" => sc.n_test = u(v)?,
            "replications" => sc.replications = u(v)?,
            "seed" => {
                sc.seed = v
                    .parse()
                    .map_err(|_| Error::InvalidConfig(format!("invalid seed '{v}'")))?
            }
            _ => return Err(Error::InvalidConfig(format!("unknown scenario key '{k}'"))),
        }
    }
    Ok(sc)
}

fn parse_roster(names: &[String]) -> Result<Vec<StudyModel>> {
    names
        .iter()
        .map(|n| match n.as_str() {
            "grabit" => Ok(StudyModel::Grabit),
            "boosted-logit" => Ok(StudyModel::BoostedLogit),
            "logit" => Ok(StudyModel::Logit),
            "tobit" => Ok(StudyModel::LinearTobit),
            _ => Err(Error::InvalidConfig(format!("unknown model '{n}'"))),
        })
        .collect()
}

fn band_csv(band: &RocBand) -> String {
    let mut s = String::from("fpr,mean_tpr,lower_tpr,upper_tpr\n");
    for i in 0..band.grid.len() {
        let _ = writeln!(
            s,
            "{},{},{},{}",
            band.grid[i], band.mean_tpr[i], band.lower_tpr[i], band.upper_tpr[i]
        );
    }
    s
}

fn cmd_simulate(a: SimulateArgs) -> Result<()> {
    let mut scenario = match (&a.preset, &a.scenario) {
        (Some(name), None) => SimulationScenario::preset(name)?,
        (None, Some(path)) => parse_scenario_file(path)?,
        (None, None) => {
            return Err(Error::InvalidConfig(
                "one of --preset or --scenario is required".into(),
            ))
        }
        (Some(_), Some(_)) => unreachable!("clap conflicts_with"),
    };
    if let Some(r) = a.replications {
        scenario.replications = r;
    }
    if let Some(s) = a.seed {
        scenario.seed = s;
    }
    let roster = parse_roster(&a.models)?;
    let grids = match a.grids {
        GridChoice::Full => TuningGrids::default(),
        GridChoice::Reduced => TuningGrids::reduced(),
    };

    let report = run_study(&scenario, &roster, &grids)?;
    fs::create_dir_all(&a.outdir)?;

    let mut auroc_csv = String::from("model,mean_auroc,q2.5,q97.5\n");
    let mut panel = SvgPlot::new(
        "ROC across replications",
        "false positive rate",
        "true positive rate",
    )
    .with_ranges((0.0, 1.0), (0.0, 1.0))
    .with_diagonal();
    for (slot, r) in report.results.iter().enumerate() {
        let _ = writeln!(
            auroc_csv,
            "{},{:.4},{:.4},{:.4}",
            r.model.name(),
            r.band.mean_auroc,
            r.band.auroc_ci.0,
            r.band.auroc_ci.1
        );
        fs::write(
            a.outdir.join(format!("roc_band_{}.csv", r.model.name())),
            band_csv(&r.band),
        )?;
        panel.add_band(slot, &r.band.grid, &r.band.lower_tpr, &r.band.upper_tpr);
    }
    for r in &report.results {
        panel.add_line(
            &format!("{} (AUROC {:.4})", r.model.name(), r.band.mean_auroc),
            &r.band.grid,
            &r.band.mean_tpr,
        );
    }
    fs::write(a.outdir.join("auroc.csv"), &auroc_csv)?;
    panel.save(&a.outdir.join("panel.svg"))?;
    fs::write(
        a.outdir.join("summary.txt"),
        format!(
            "replications_used: {}\ndegenerate_replications: {}\n",
            report.replications_used, report.degenerate_replications
        ),
    )?;
    print!("{auroc_csv}");
    println!(
        "replications used: {} (degenerate: {})",
        report.replications_used, report.degenerate_replications
    );
    println!("wrote {}", a.outdir.display());
    Ok(())
}

// ------------------------------------------------------------- evaluate

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    data: PathBuf,
    /// Response column name
    #[arg(long)]
    target: String,
    /// Timestamp column name
    #[arg(long)]
    time_col: String,
    /// Semicolon-separated model specs, e.g.
    /// "grabit:upper=60,lower=0,sigma=grid;logit;tobit:upper=60"
    #[arg(long, value_delimiter = ';')]
    models: Vec<String>,
    /// Minimum mature past rows needed to score a row
    #[arg(long, default_value_t = 100)]
    min_train: usize,
    /// Days before an outcome is considered mature
    #[arg(long, default_value_t = 61.0)]
    maturity_days: f64,
    #[arg(long)]
    outdir: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum SpecKind {
    Grabit,
    BoostedLogit,
    Logit,
    Tobit,
    /// Scores every row 0.5; chance-level reference.
    Constant,
}

#[derive(Clone, Copy, PartialEq)]
enum SigmaSpec {
    Fixed(f64),
    Grid,
}

#[derive(Clone)]
struct ModelSpec {
    kind: SpecKind,
    label: String,
    lower: Option<f64>,
    upper: Option<f64>,
    sigma: SigmaSpec,
    trees: usize,
    shrinkage: f64,
    depth: usize,
}

impl ModelSpec {
    /// Parse `kind[:key=value,...]` with keys lower, upper, sigma
    /// (number or `grid`), trees, shrinkage, depth.
    fn parse(text: &str) -> Result<ModelSpec> {
        let text = text.trim();
        let (name, rest) = match text.split_once(':') {
            Some((n, r)) => (n.trim(), Some(r)),
            None => (text, None),
        };
        let kind = match name {
            "grabit" => SpecKind::Grabit,
            "boosted-logit" => SpecKind::BoostedLogit,
            "logit" => SpecKind::Logit,
            "tobit" => SpecKind::Tobit,
            "constant" => SpecKind::Constant,
            _ => return Err(Error::InvalidConfig(format!("unknown model '{name}'"))),
        };
        let mut spec = ModelSpec {
            kind,
            label: name.to_string(),
            lower: None,
            upper: None,
            sigma: SigmaSpec::Fixed(1.0),
            trees: 100,
            shrinkage: 0.1,
            depth: 3,
        };
        if let Some(rest) = rest {
            for part in rest.split(',') {
                let part = part.trim();
                if part.is_empty() {
                    continue;
                }
                let (k, v) = part.split_once('=').ok_or_else(|| {
                    Error::InvalidConfig(format!("model spec option '{part}' is not key=value"))
                })?;
                let num = || -> Result<f64> {
                    v.parse()
                        .map_err(|_| Error::InvalidConfig(format!("invalid number '{v}'")))
                };
                match k.trim() {
                    "lower" => spec.lower = Some(num()?),
                    "upper" => spec.upper = Some(num()?),
                    "sigma" => {
                        spec.sigma = if v.trim() == "grid" {
                            SigmaSpec::Grid
                        } else {
                            SigmaSpec::Fixed(num()?)
                        }
                    }
                    "trees" => {
                        spec.trees = v.parse().map_err(|_| {
                            Error::InvalidConfig(format!("invalid integer '{v}'"))
                        })?
                    }
                    "shrinkage" => spec.shrinkage = num()?,
                    "depth" => {
                        spec.depth = v.parse().map_err(|_| {
                            Error::InvalidConfig(format!("invalid integer '{v}'"))
                        })?
                    }
                    other => {
                        return Err(Error::InvalidConfig(format!(
                            "unknown model spec key '{other}'"
                        )))
                    }
                }
            }
        }
        if matches!(spec.kind, SpecKind::Grabit | SpecKind::Tobit)
            && spec.lower.is_none()
            && spec.upper.is_none()
        {
            return Err(Error::InvalidConfig(format!(
                "model spec '{text}' needs lower= and/or upper="
            )));
        }
        Ok(spec)
    }

    fn bounds(&self) -> Result<CensoringBounds> {
        bounds_from_flags(self.lower, self.upper)
    }
}

fn sigmoid(f: f64) -> f64 {
    1.0 / (1.0 + (-f).exp())
}

/// Binary default labels for the evaluation protocol: the first spec with
/// an upper bound defines default as response at (or snapped to) that
/// bound; without any bound the response must already be binary.
fn derive_labels(response: &[f64], specs: &[ModelSpec]) -> Result<Vec<f64>> {
    if let Some(spec) = specs.iter().find(|s| s.upper.is_some()) {
        let bounds = spec.bounds()?;
        return Ok(response
            .iter()
            .map(|&y| f64::from(bounds.snap(y) == bounds.upper))
            .collect());
    }
    for &y in response {
        if y != 0.0 && y != 1.0 {
            return Err(Error::NonBinaryResponse(y));
        }
    }
    Ok(response.to_vec())
}

/// Factory for temporal CV. Windows where a class-based fit is impossible
/// (single-class labels, or no uncensored rows for a Tobit fit) fall back
/// to a constant scorer so early windows do not abort the protocol.
fn spec_factory(spec: &ModelSpec) -> impl FnMut(&Matrix, &[f64]) -> Result<Scorer> + '_ {
    move |features: &Matrix, response: &[f64]| -> Result<Scorer> {
        match spec.kind {
            SpecKind::Grabit => {
                let bounds = spec.bounds()?;
                let y: Vec<f64> = response.iter().map(|&v| bounds.snap(v)).collect();
                let sigma = match spec.sigma {
                    SigmaSpec::Fixed(s) => s,
                    SigmaSpec::Grid => {
                        let base = BoostConfig::new(
                            spec.trees,
                            spec.shrinkage,
                            spec.depth,
                            Loss::tobit(bounds.clone(), 1.0)?,
                        );
                        select_sigma(features, &y, &base, &SigmaSearchConfig::default())?.0
                    }
                };
                let cfg = BoostConfig::new(
                    spec.trees,
                    spec.shrinkage,
                    spec.depth,
                    Loss::tobit(bounds, sigma)?,
                );
                let model = fit_boosted(features, &y, &cfg)?;
                Ok(Box::new(move |x| {
                    model.predict_default_prob(x).unwrap_or(f64::NAN)
                }))
            }
            SpecKind::BoostedLogit => {
                // response here is the binary label series (see cmd_evaluate)
                let labels = response.to_vec();
                if labels.iter().all(|&l| l == labels[0]) {
                    let p = labels[0];
                    return Ok(Box::new(move |_| p));
                }
                let cfg = BoostConfig::new(
                    spec.trees,
                    spec.shrinkage,
                    spec.depth,
                    Loss::BernoulliLogit,
                );
                let model = fit_boosted(features, &labels, &cfg)?;
                Ok(Box::new(move |x| {
                    model.predict_latent(x).map(sigmoid).unwrap_or(f64::NAN)
                }))
            }
            SpecKind::Logit => {
                // response here is the binary label series (see cmd_evaluate)
                let labels = response.to_vec();
                if labels.iter().all(|&l| l == labels[0]) {
                    let p = labels[0];
                    return Ok(Box::new(move |_| p));
                }
                let fit = fit_logit(features, &labels)?;
                Ok(Box::new(move |x| {
                    fit.model.predict_latent(x).map(sigmoid).unwrap_or(f64::NAN)
                }))
            }
            SpecKind::Tobit => {
                let bounds = spec.bounds()?;
                let y: Vec<f64> = response.iter().map(|&v| bounds.snap(v)).collect();
                match fit_linear_tobit(features, &y, bounds) {
                    Ok(fit) => Ok(Box::new(move |x| {
                        fit.model.predict_default_prob(x).unwrap_or(f64::NAN)
                    })),
                    Err(Error::NoInteriorObservations) => Ok(Box::new(|_| 0.5)),
                    Err(e) => Err(e),
                }
            }
            SpecKind::Constant => Ok(Box::new(|_| 0.5)),
        }
    }
}

fn roc_points_csv(roc: &RocCurve) -> String {
    let mut s = String::from("fpr,tpr\n");
    for (fpr, tpr) in &roc.points {
        let _ = writeln!(s, "{fpr},{tpr}");
    }
    s
}

fn cmd_evaluate(a: EvaluateArgs) -> Result<()> {
    let specs: Vec<ModelSpec> = a
        .models
        .iter()
        .filter(|s| !s.trim().is_empty())
        .map(|s| ModelSpec::parse(s))
        .collect::<Result<Vec<_>>>()?;
    if specs.is_empty() {
        return Err(Error::InvalidConfig("no model specs given".into()));
    }
    let mut ds = read_csv(&a.data, &a.target, Some(&a.time_col))?;
    let timestamps = ds
        .timestamps
        .take()
        .ok_or_else(|| Error::Data("timestamp column missing".into()))?;
    let labels = derive_labels(&ds.response, &specs)?;
    let cfg = TemporalCvConfig {
        min_train_size: a.min_train,
        maturity_lag: a.maturity_days,
    };

    fs::create_dir_all(&a.outdir)?;
    let mut results = Vec::new();
    for spec in &specs {
        // censored-regression specs train on the raw response; the
        // logistic specs train on the derived binary labels
        let train_on: &[f64] = match spec.kind {
            SpecKind::Grabit | SpecKind::Tobit => &ds.response,
            SpecKind::Logit | SpecKind::BoostedLogit | SpecKind::Constant => &labels,
        };
        let mut factory = spec_factory(spec);
        let res = temporal_cv(
            &ds.features,
            train_on,
            &labels,
            &timestamps,
            &mut factory,
            &cfg,
        )?;
        fs::write(
            a.outdir.join(format!("roc_{}.csv", spec.label)),
            roc_points_csv(&res.roc),
        )?;
        results.push(res);
    }

    let mut plot = SvgPlot::new(
        "Temporal cross-validation ROC",
        "false positive rate",
        "true positive rate",
    )
    .with_ranges((0.0, 1.0), (0.0, 1.0))
    .with_diagonal();
    for (spec, res) in specs.iter().zip(&results) {
        let xs: Vec<f64> = res.roc.points.iter().map(|p| p.0).collect();
        let ys: Vec<f64> = res.roc.points.iter().map(|p| p.1).collect();
        plot.add_line(
            &format!("{} (AUROC {:.4})", spec.label, res.roc.auroc),
            &xs,
            &ys,
        );
    }
    plot.save(&a.outdir.join("roc.svg"))?;

    let mut table = String::from("model_a,model_b,auroc_a,auroc_b,diff,p_value\n");
    for i in 0..results.len() {
        for j in i + 1..results.len() {
            let d = delong_test(&results[i].scores, &results[j].scores, &results[i].labels)?;
            let _ = writeln!(
                table,
                "{},{},{:.4},{:.4},{:.4},{}",
                specs[i].label, specs[j].label, d.auroc_a, d.auroc_b, d.diff, d.p_value
            );
        }
    }
    fs::write(a.outdir.join("delong.csv"), &table)?;

    println!("model,auroc,rows_scored");
    for (spec, res) in specs.iter().zip(&results) {
        println!("{},{:.4},{}", spec.label, res.roc.auroc, res.scores.len());
    }
    if results.len() > 1 {
        print!("{table}");
    }
    println!("wrote {}", a.outdir.display());
    Ok(())
}

// -------------------------------------------------------------- compare

#[derive(Args)]
struct CompareArgs {
    /// CSV/text file with one score per line (optional header)
    #[arg(long)]
    scores_a: PathBuf,
    #[arg(long)]
    scores_b: PathBuf,
    /// Binary labels file aligned with the scores
    #[arg(long)]
    labels: PathBuf,
}

fn read_column(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let cell = line.split(',').next().unwrap().trim();
        if cell.is_empty() {
            continue;
        }
        match cell.parse::<f64>() {
            Ok(v) => out.push(v),
            Err(_) if i == 0 => {} // header
            Err(_) => {
                return Err(Error::Data(format!(
                    "{}:{}: not a number: '{cell}'",
                    path.display(),
                    i + 1
                )))
            }
        }
    }
    Ok(out)
}

fn cmd_compare(a: CompareArgs) -> Result<()> {
    let scores_a = read_column(&a.scores_a)?;
    let scores_b = read_column(&a.scores_b)?;
    let labels = read_column(&a.labels)?;
    let d = delong_test(&scores_a, &scores_b, &labels)?;
    println!("auroc_a: {}", d.auroc_a);
    println!("auroc_b: {}", d.auroc_b);
    println!("diff: {}", d.diff);
    println!("p_value: {}", d.p_value);
    Ok(())
}

// -------------------------------------------------------------- explain

#[derive(Args)]
struct ExplainArgs {
    /// Saved model file (must be a boosted model)
    #[arg(long)]
    model: PathBuf,
    /// Feature CSV providing the background data
    #[arg(long)]
    data: PathBuf,
    /// Emit the variable importance table
    #[arg(long)]
    importance: bool,
    /// Partial dependence on one variable or "var1,var2"
    #[arg(long, conflicts_with = "importance")]
    pd: Option<String>,
    /// Local curve at a data row index or a comma-separated vector
    #[arg(long, conflicts_with_all = ["importance", "pd"])]
    local: Option<String>,
    /// Variable for --local
    #[arg(long)]
    var: Option<String>,
    /// Interval strategy for --local: i (data range), ii (2.5-97.5%
    /// quantiles), iii (x' +/- sd), iv:<delta> (x' +/- delta)
    #[arg(long, default_value = "i")]
    interval: String,
    #[arg(long, default_value_t = 50)]
    grid_size: usize,
    #[arg(long)]
    outdir: PathBuf,
}

fn resolve_var(name: &str, names: &[String]) -> Result<usize> {
    names
        .iter()
        .position(|n| n == name)
        .ok_or_else(|| Error::Data(format!("unknown variable '{name}'")))
}

fn parse_interval(text: &str) -> Result<IntervalStrategy> {
    match text {
        "i" => Ok(IntervalStrategy::DataRange),
        "ii" => Ok(IntervalStrategy::WinsorizedRange),
        "iii" => Ok(IntervalStrategy::LocalSd),
        other => match other.strip_prefix("iv:") {
            Some(d) => {
                let delta: f64 = d
                    .parse()
                    .map_err(|_| Error::InvalidConfig(format!("invalid delta '{d}'")))?;
                Ok(IntervalStrategy::LocalDelta(delta))
            }
            None => Err(Error::InvalidConfig(format!(
                "interval must be i, ii, iii, or iv:<delta>, got '{other}'"
            ))),
        },
    }
}

fn boosted_body(model: &Model) -> Result<&BoostedEnsemble> {
    match &model.body {
        ModelBody::Boosted(e) => Ok(e),
        ModelBody::Linear(_) => Err(Error::InvalidConfig(
            "interpretation tools require a boosted model".into(),
        )),
    }
}

fn cmd_explain(a: ExplainArgs) -> Result<()> {
    let model = Model::load(&a.model)?;
    let ensemble = boosted_body(&model)?;
    let (csv_names, rows) = read_feature_csv(&a.data)?;
    let mapping = column_mapping(&model, &csv_names)?;
    let prepared: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| model_row(&model, &mapping, r))
        .collect::<Result<Vec<_>>>()?;
    let data = Matrix::from_rows(&prepared)?;
    let names: &[String] = if model.feature_names.is_empty() {
        &csv_names
    } else {
        &model.feature_names
    };
    fs::create_dir_all(&a.outdir)?;

    if a.importance {
        let report = variable_importance(ensemble, data.n_cols());
        let mut csv = String::from("variable,score\n");
        for &(idx, score) in &report.scores {
            let _ = writeln!(csv, "{},{}", names[idx], score);
        }
        fs::write(a.outdir.join("importance.csv"), &csv)?;
        let by_var = report.by_variable(data.n_cols());
        let xs: Vec<f64> = (0..by_var.len()).map(|i| (i + 1) as f64).collect();
        let mut plot = SvgPlot::new("Variable importance", "variable index", "importance");
        plot.add_line("importance", &xs, &by_var);
        plot.save(&a.outdir.join("importance.svg"))?;
        print!("{csv}");
        println!("wrote {}", a.outdir.display());
        return Ok(());
    }

    if let Some(spec) = &a.pd {
        let vars: Vec<usize> = spec
            .split(',')
            .map(|v| resolve_var(v.trim(), names))
            .collect::<Result<Vec<_>>>()?;
        let pd = partial_dependence(ensemble, &data, &vars, a.grid_size)?;
        let mut csv = String::new();
        let mut plot = SvgPlot::new("Partial dependence", &names[vars[0]].clone(), "prediction");
        if vars.len() == 1 {
            let _ = writeln!(csv, "{},pd", names[vars[0]]);
            for (g, v) in pd.grids[0].iter().zip(&pd.values) {
                let _ = writeln!(csv, "{g},{v}");
            }
            plot.add_line(&names[vars[0]].clone(), &pd.grids[0], &pd.values);
        } else {
            let _ = writeln!(csv, "{},{},pd", names[vars[0]], names[vars[1]]);
            let k1 = pd.grids[1].len();
            for (i, g0) in pd.grids[0].iter().enumerate() {
                for (j, g1) in pd.grids[1].iter().enumerate() {
                    let _ = writeln!(csv, "{g0},{g1},{}", pd.values[i * k1 + j]);
                }
            }
            // one curve in the first variable per value of the second
            for (j, g1) in pd.grids[1].iter().enumerate() {
                let ys: Vec<f64> = (0..pd.grids[0].len())
                    .map(|i| pd.values[i * k1 + j])
                    .collect();
                plot.add_line(&format!("{}={g1:.3}", names[vars[1]]), &pd.grids[0], &ys);
            }
        }
        fs::write(a.outdir.join("pd.csv"), &csv)?;
        plot.save(&a.outdir.join("pd.svg"))?;
        println!("wrote {}", a.outdir.display());
        return Ok(());
    }

    if let Some(point) = &a.local {
        let var_name = a
            .var
            .as_ref()
            .ok_or_else(|| Error::InvalidConfig("--local requires --var".into()))?;
        let var = resolve_var(var_name, names)?;
        let strategy = parse_interval(&a.interval)?;
        let x_prime: Vec<f64> = if point.contains(',') {
            point
                .split(',')
                .map(|v| {
                    v.trim()
                        .parse()
                        .map_err(|_| Error::InvalidConfig(format!("invalid value '{v}'")))
                })
                .collect::<Result<Vec<_>>>()?
        } else {
            let idx: usize = point
                .parse()
                .map_err(|_| Error::InvalidConfig(format!("invalid row index '{point}'")))?;
            if idx >= data.n_rows() {
                return Err(Error::Data(format!(
                    "row {idx} out of range (data has {} rows)",
                    data.n_rows()
                )));
            }
            data.row(idx).to_vec()
        };
        let curve =
            local_partial_dependence(ensemble, &data, &x_prime, var, &strategy, a.grid_size)?;
        let mut csv = format!("{},prediction\n", names[var]);
        for (g, v) in curve.grid.iter().zip(&curve.values) {
            let _ = writeln!(csv, "{g},{v}");
        }
        fs::write(a.outdir.join("local_pd.csv"), &csv)?;
        let mut plot = SvgPlot::new(
            "Local dependence",
            &names[var].clone(),
            "prediction",
        );
        plot.add_line(&names[var].clone(), &curve.grid, &curve.values);
        plot.add_marker(curve.marker.0, curve.marker.1);
        plot.save(&a.outdir.join("local_pd.svg"))?;
        println!("prediction at x': {}", curve.marker.1);
        println!("wrote {}", a.outdir.display());
        return Ok(());
    }

    Err(Error::InvalidConfig(
        "one of --importance, --pd, or --local is required".into(),
    ))
}

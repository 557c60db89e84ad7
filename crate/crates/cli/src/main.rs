//! `ess`: equivalent sample size of a fixed prediction rule from the command line.

mod config;
mod error;
mod ingest;
mod prompts;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ess_core::cate::{arm_specific_ess, cate_ess, CateDataset, DEFAULT_OVERLAP_EPSILON};
use ess_core::report::{curve_report, CurveReport};
use ess_core::simulate::{
    clt_experiment, coverage_experiment, fwer_experiment, grid_comparison, variance_consistency, CltConfig,
    SimulationConfig, VarianceConfig,
};
use ess_core::{error_curve, sequential_ess, Dataset, Family, LearnerSpec, LossKind, OutcomeType, SequentialResult};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use config::{parse_grid, RunConfig};
use error::CliError;
use ingest::Schema;

#[derive(Parser)]
#[command(name = "ess", version, about = "Equivalent sample size of a fixed prediction rule")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Full error curve over the grid, plus the sequential interval.
    Curve(AnalysisArgs),
    /// Sequential procedure: stop at the first non-rejection.
    Ess(AnalysisArgs),
    /// ESS for predicting the CATE through the transformed outcome.
    Cate(CateArgs),
    /// ESS within one treatment arm.
    Arm(ArmArgs),
    /// Monte Carlo validation experiments.
    Simulate(SimulateArgs),
    /// Render one prompt per row from a template.
    Prompts(PromptArgs),
    /// Join id-keyed predictions onto the data as the fixed-rule column.
    Join(JoinArgs),
}

#[derive(Args, Clone)]
struct DataArgs {
    /// Delimited text file with a header row.
    #[arg(long)]
    data: PathBuf,
    /// Schema JSON, inline or as a file path.
    #[arg(long)]
    schema: String,
    #[arg(long, default_value = ",")]
    delimiter: char,
    /// `id<TAB>value` lines used as the fixed-rule prediction.
    #[arg(long)]
    predictions: Option<PathBuf>,
    #[arg(long, default_value = "\t")]
    predictions_delimiter: char,
    #[arg(long, default_value = "fixed_rule_prediction")]
    prediction_name: String,
}

#[derive(Args, Clone)]
struct AnalysisArgs {
    #[command(flatten)]
    data: DataArgs,
    /// lasso, logit_l1, random_forest, knn, baseline_mean or baseline_majority.
    #[arg(long)]
    learner: String,
    /// Full learner spec as JSON (file or inline); overrides --learner options.
    #[arg(long)]
    learner_spec: Option<String>,
    /// Train on log1p of the outcome.
    #[arg(long)]
    log_outcome: bool,
    /// `10,20,40`, `geom:START:END:COUNT` or `range:START:END:STEP`.
    #[arg(long)]
    grid: String,
    /// squared or zero_one; defaults by outcome type.
    #[arg(long)]
    loss: Option<String>,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value = "diff")]
    variance_mode: String,
    #[arg(long, default_value_t = ess_core::variance::DEFAULT_REGIME_THRESHOLD)]
    regime_threshold: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Use rows in file order instead of a seeded permutation.
    #[arg(long)]
    no_shuffle: bool,
    /// Output prefix: writes PREFIX.json and PREFIX.tsv.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    outcome_label: Option<String>,
    #[arg(long)]
    rule_label: Option<String>,
}

#[derive(Args, Clone)]
struct CateArgs {
    #[command(flatten)]
    analysis: AnalysisArgs,
    #[arg(long, default_value_t = DEFAULT_OVERLAP_EPSILON)]
    overlap_epsilon: f64,
}

#[derive(Args, Clone)]
struct ArmArgs {
    #[command(flatten)]
    cate: CateArgs,
    #[arg(long, value_parser = clap::value_parser!(u8).range(0..=1))]
    arm: u8,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum Experiment {
    Coverage,
    Fwer,
    Grids,
    Clt,
    Variance,
}

#[derive(Args, Clone)]
struct SimulateArgs {
    #[arg(value_enum)]
    experiment: Experiment,
    /// Experiment config JSON (file or inline).
    #[arg(long)]
    config: String,
    /// Output path for the experiment report.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct PromptArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Template file with `{column}` placeholders.
    #[arg(long, conflicts_with = "template_text")]
    template: Option<PathBuf>,
    #[arg(long)]
    template_text: Option<String>,
    /// Prompt file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct JoinArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Joined data file.
    #[arg(long)]
    out: PathBuf,
    /// Where to write the schema of the joined file.
    #[arg(long)]
    schema_out: Option<PathBuf>,
}

fn delimiter_byte(c: char) -> Result<u8, CliError> {
    u8::try_from(c)
        .ok()
        .filter(u8::is_ascii)
        .ok_or_else(|| CliError::Usage(format!("delimiter must be a single ASCII character, got {c:?}")))
}

fn load_json<T: for<'de> Deserialize<'de>>(spec: &str, what: &str) -> Result<T, CliError> {
    let text = if spec.trim_start().starts_with('{') {
        spec.to_string()
    } else {
        std::fs::read_to_string(spec).map_err(|e| CliError::Usage(format!("cannot read {what} '{spec}': {e}")))?
    };
    serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("invalid {what}: {e}")))
}

fn load_data(args: &DataArgs) -> Result<(Schema, ingest::RawTable, Dataset), CliError> {
    let schema = Schema::load(&args.schema)?;
    let (table, mut data) = ingest::ingest(&args.data, &schema, delimiter_byte(args.delimiter)?)?;
    if let Some(p) = &args.predictions {
        let preds = ingest::read_predictions(p, delimiter_byte(args.predictions_delimiter)?)?;
        data = ingest::join_predictions(&data, &preds, &args.prediction_name)?;
    }
    Ok((schema, table, data))
}

fn run_config(command: &str, args: &AnalysisArgs, schema: Schema, outcome: OutcomeType) -> Result<RunConfig, CliError> {
    let learner = match &args.learner_spec {
        Some(spec) => load_json::<LearnerSpec>(spec, "learner spec")?,
        None => {
            let family: Family = args.learner.parse().map_err(|e: ess_core::EssError| CliError::Usage(e.to_string()))?;
            let mut spec = LearnerSpec::new(family);
            spec.log_outcome = args.log_outcome;
            spec
        }
    };
    let loss = match &args.loss {
        Some(l) => l.parse::<LossKind>().map_err(|e| CliError::Usage(e.to_string()))?,
        None => match outcome {
            OutcomeType::Numeric => LossKind::Squared,
            OutcomeType::Label => LossKind::ZeroOne,
        },
    };
    let grid = parse_grid(&args.grid)?;
    let config = RunConfig {
        command: command.to_string(),
        data: args.data.data.display().to_string(),
        delimiter: args.data.delimiter.to_string(),
        schema,
        predictions: args.data.predictions.as_ref().map(|p| p.display().to_string()),
        learner,
        grid_spec: args.grid.clone(),
        grid: grid.sizes().to_vec(),
        loss,
        alpha: args.alpha,
        variance_mode: args.variance_mode.parse().map_err(|e: ess_core::EssError| CliError::Usage(e.to_string()))?,
        regime_threshold: args.regime_threshold,
        seed: args.seed,
        shuffle: !args.no_shuffle,
        overlap_epsilon: None,
        arm: None,
        out: args.out.as_ref().map(|p| p.display().to_string()),
    };
    config.validate()?;
    Ok(config)
}

/// Result file contents: provenance first, then the report.
#[derive(Serialize)]
struct ResultFile<'a, T: Serialize, C: Serialize> {
    tool: &'static str,
    version: &'static str,
    config: &'a C,
    result: T,
}

fn result_json<T: Serialize, C: Serialize>(config: &C, result: T) -> Result<String, CliError> {
    let file = ResultFile {
        tool: "ess",
        version: ess_core::VERSION,
        config,
        result,
    };
    let mut s = serde_json::to_string_pretty(&file).map_err(|e| CliError::Numeric(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| CliError::Usage(format!("cannot write '{}': {e}", path.display())))
}

fn with_ext(prefix: &Path, ext: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

fn emit(config: &RunConfig, result: &SequentialResult, report: &CurveReport) -> Result<(), CliError> {
    if let Some(prefix) = &config.out {
        let prefix = Path::new(prefix);
        let body = json!({ "report": report, "sequential": result });
        write_file(&with_ext(prefix, "json"), &result_json(config, body)?)?;
        write_file(&with_ext(prefix, "tsv"), &report.to_tsv())?;
    }
    print!("{}", report.table_block());
    Ok(())
}

fn analysis(command: &str, args: &AnalysisArgs, cate: Option<(f64, Option<u8>)>) -> Result<(), CliError> {
    let (schema, _, data) = load_data(&args.data)?;
    let mut config = run_config(command, args, schema, data.outcome_type())?;
    let grid = parse_grid(&args.grid)?;
    let ess_cfg = config.ess_config();
    let (result, outcome_name, rule_name) = match cate {
        None => {
            if data.prediction().is_none() {
                return Err(CliError::Data(
                    "no fixed_rule_prediction column: declare one in the schema or pass --predictions".into(),
                ));
            }
            let res = if command == "curve" {
                error_curve(&data, &config.learner, &grid, &ess_cfg)?
            } else {
                sequential_ess(&data, &config.learner, &grid, &ess_cfg)?
            };
            (res, data.outcome_name().to_string(), data.prediction_name().unwrap_or("rule").to_string())
        }
        Some((eps, arm)) => {
            config.overlap_epsilon = Some(eps);
            config.arm = arm;
            let cd = CateDataset::new(data, eps)?;
            match arm {
                Some(t) => {
                    let res = arm_specific_ess(&cd, &config.learner, &grid, &ess_cfg, t)?;
                    let d = cd.data();
                    (
                        res,
                        format!("{} (T={t})", d.outcome_name()),
                        d.prediction_name().unwrap_or("rule").to_string(),
                    )
                }
                None => {
                    ess_core::cate::check_numeric(cd.data())?;
                    let res = cate_ess(&cd, &config.learner, &grid, &ess_cfg)?;
                    (res, format!("CATE of {}", cd.data().outcome_name()), "CATE rule".to_string())
                }
            }
        }
    };
    let outcome = args.outcome_label.clone().unwrap_or(outcome_name);
    let rule = args.rule_label.clone().unwrap_or(rule_name);
    let report = curve_report(&result, &outcome, &rule, config.learner.family.display_name(), config.loss)?;
    emit(&config, &result, &report)
}

/// Experiment configs for `simulate grids`: the base config plus a coarse grid.
#[derive(Serialize, Deserialize)]
struct GridsConfig {
    #[serde(flatten)]
    base: SimulationConfig,
    coarse: Vec<usize>,
}

fn simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let (config, result, pass): (Value, Value, bool) = match args.experiment {
        Experiment::Coverage | Experiment::Fwer => {
            let cfg: SimulationConfig = load_json(&args.config, "simulation config")?;
            let rep = if args.experiment == Experiment::Coverage {
                coverage_experiment(&cfg)?
            } else {
                fwer_experiment(&cfg)?
            };
            let pass = rep.pass && rep.duality_violations == 0;
            (json!(cfg), json!(rep), pass)
        }
        Experiment::Grids => {
            let cfg: GridsConfig = load_json(&args.config, "simulation config")?;
            let rep = grid_comparison(&cfg.base, &cfg.coarse)?;
            let pass = rep.fine.pass && rep.coarse.pass && rep.coarse_above_fine == 0;
            (json!(cfg), json!(rep), pass)
        }
        Experiment::Clt => {
            let cfg: CltConfig = load_json(&args.config, "CLT config")?;
            let rep = clt_experiment(&cfg)?;
            let pass = rep.pass;
            (json!(cfg), json!(rep), pass)
        }
        Experiment::Variance => {
            let cfg: VarianceConfig = load_json(&args.config, "variance config")?;
            let rep = variance_consistency(&cfg)?;
            (json!(cfg), json!(rep), true)
        }
    };
    let body = json!({ "experiment": args.experiment, "pass": pass, "report": result });
    let text = result_json(&config, body)?;
    match &args.out {
        Some(p) => write_file(p, &text)?,
        None => print!("{text}"),
    }
    let name = serde_json::to_value(args.experiment).ok().and_then(|v| v.as_str().map(str::to_string));
    eprintln!("{}: {}", name.unwrap_or_default(), if pass { "PASS" } else { "FAIL" });
    Ok(())
}

fn prompts(args: &PromptArgs) -> Result<(), CliError> {
    let text = match (&args.template, &args.template_text) {
        (Some(p), None) => std::fs::read_to_string(p)
            .map_err(|e| CliError::Usage(format!("cannot read template '{}': {e}", p.display())))?,
        (None, Some(t)) => t.clone(),
        _ => return Err(CliError::Usage("pass exactly one of --template or --template-text".into())),
    };
    let template = prompts::Template::parse(text.trim_end_matches(['\n', '\r']))?;
    let (_, _, data) = load_data(&args.data)?;
    let out = prompts::render_prompts(&data, &template)?;
    match &args.out {
        Some(p) => write_file(p, &out),
        None => {
            print!("{out}");
            Ok(())
        }
    }
}

fn join(args: &JoinArgs) -> Result<(), CliError> {
    let Some(pred_path) = &args.data.predictions else {
        return Err(CliError::Usage("join needs --predictions".into()));
    };
    let (mut schema, table, data) = load_data(&args.data)?;
    let preds = ingest::read_predictions(pred_path, delimiter_byte(args.data.predictions_delimiter)?)?;
    let cells = ingest::align_predictions(data.ids(), &preds)?;
    let name = &args.data.prediction_name;
    if table.header.iter().any(|h| h == name) {
        return Err(CliError::Data(format!("the data already has a column named '{name}'")));
    }
    let mut w = csv::WriterBuilder::new()
        .delimiter(delimiter_byte(args.data.delimiter)?)
        .from_path(&args.out)
        .map_err(|e| CliError::Usage(format!("cannot write '{}': {e}", args.out.display())))?;
    let io = |e: csv::Error| CliError::Usage(format!("cannot write '{}': {e}", args.out.display()));
    let mut header = table.header.clone();
    header.push(name.clone());
    w.write_record(&header).map_err(io)?;
    for (row, cell) in table.rows.iter().zip(&cells) {
        let mut rec = row.clone();
        rec.push(cell.clone());
        w.write_record(&rec).map_err(io)?;
    }
    w.flush().map_err(|e| CliError::Usage(e.to_string()))?;
    schema.columns.retain(|_, r| *r != ess_core::Role::FixedRulePrediction);
    schema.columns.insert(name.clone(), ess_core::Role::FixedRulePrediction);
    let schema_text = serde_json::to_string_pretty(&schema).map_err(|e| CliError::Numeric(e.to_string()))? + "\n";
    match &args.schema_out {
        Some(p) => write_file(p, &schema_text)?,
        None => print!("{schema_text}"),
    }
    eprintln!("joined {} predictions", cells.len());
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Curve(a) => analysis("curve", &a, None),
        Command::Ess(a) => analysis("ess", &a, None),
        Command::Cate(a) => analysis("cate", &a.analysis, Some((a.overlap_epsilon, None))),
        Command::Arm(a) => analysis("arm", &a.cate.analysis, Some((a.cate.overlap_epsilon, Some(a.arm)))),
        Command::Simulate(a) => simulate(&a),
        Command::Prompts(a) => prompts(&a),
        Command::Join(a) => join(&a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            if !e.use_stderr() {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let err = CliError::Usage(e.to_string().trim_end().to_string());
            eprintln!("{}", err.record());
            return ExitCode::from(err.exit_code() as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{}", err.record());
            ExitCode::from(err.exit_code() as u8)
        }
    }
}

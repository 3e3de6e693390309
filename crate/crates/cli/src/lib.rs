//! The `asrscale` command-line tool: fixtures, ingestion, CER scoring,
//! scaling-law fits, predictions, budget planning, strategy comparison,
//! Pareto frontiers, cost estimation, and SVG charts.
//!
//! Everything routes through [`run_command`], which never touches the
//! filesystem except to read named inputs and to write the paths given via
//! `--out` and `--store`.

use std::collections::HashMap;
use std::fmt;
use std::path::{Path, PathBuf};

use asrscale_core::analysis::{compare_strategies, pareto_frontier, AnalysisError, StrategyOutcome};
use asrscale_core::chart::{render_chart, Axes, ChartError, ChartSpec, LabeledFit, Series};
use asrscale_core::config::{ConfigDocument, ConfigError};
use asrscale_core::fit::{
    fit_power_law, fit_saturating_power_law, predict_error, required_budget, FitError, FitMethod,
    GridSearchConfig, PowerLawFit, SamplePoint,
};
use asrscale_core::flops::{strategy_flops, FlopsError};
use asrscale_core::ingest::{parse_runs_csv, serialize_runs_csv, IngestError, RunRecord, Source};
use asrscale_core::metrics::{
    corpus_cer, edit_distance, format_cer, normalize, round_half_up, MetricsError,
    NormalizationOptions, UtterancePair,
};
use asrscale_core::model::ModelError;
use asrscale_core::store::{RunStore, StoreError, StoreFilter};

use clap::{Parser, Subcommand, ValueEnum};

/// Exit code plus captured standard streams of one invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommandOutput {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Runs one command given its arguments (without the program name).
///
/// Exit codes: 0 on success, 1 for domain errors (unattainable targets,
/// degenerate fits, missing baselines, conflicts), 2 for usage and parse
/// errors.
pub fn run_command<I, S>(argv: I) -> CommandOutput
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let mut full: Vec<String> = vec!["asrscale".into()];
    full.extend(argv.into_iter().map(Into::into));
    let cli = match Cli::try_parse_from(&full) {
        Ok(cli) => cli,
        Err(e) => {
            let rendered = e.render().to_string();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    CommandOutput { code: 0, stdout: rendered, stderr: String::new() }
                }
                _ => CommandOutput { code: 2, stdout: String::new(), stderr: rendered },
            };
        }
    };
    match dispatch(cli.command) {
        Ok(stdout) => CommandOutput { code: 0, stdout, stderr: String::new() },
        Err(e) => {
            CommandOutput { code: e.code(), stdout: String::new(), stderr: format!("error: {e}\n") }
        }
    }
}

#[derive(Parser)]
#[command(
    name = "asrscale",
    version,
    about = "Training-budget planning and scaling-law analysis for speech-to-text pipelines"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
enum Format {
    #[default]
    Table,
    Csv,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
enum MethodArg {
    #[default]
    Loglog,
    Nonlinear,
}

impl From<MethodArg> for FitMethod {
    fn from(m: MethodArg) -> FitMethod {
        match m {
            MethodArg::Loglog => FitMethod::LogLogOls,
            MethodArg::Nonlinear => FitMethod::NonlinearLs,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
enum AxesArg {
    #[default]
    LogLog,
    Linear,
}

impl From<AxesArg> for Axes {
    fn from(a: AxesArg) -> Axes {
        match a {
            AxesArg::LogLog => Axes::LogLog,
            AxesArg::Linear => Axes::Linear,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Print a bundled reference table (1-4) of published runs
    Fixtures {
        /// Table number
        table: u8,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Parse a runs CSV and append its records to the store
    Ingest {
        /// CSV file of runs
        csv: PathBuf,
        /// JSONL store path
        #[arg(long, env = "ASRSCALE_STORE")]
        store: PathBuf,
    },
    /// Score a hypothesis TSV against a reference TSV by corpus CER
    Cer {
        /// Reference TSV (utterance id <TAB> text)
        #[arg(long = "ref")]
        reference: PathBuf,
        /// Hypothesis TSV (utterance id <TAB> text)
        #[arg(long = "hyp")]
        hypothesis: PathBuf,
        /// Also remove punctuation during normalization
        #[arg(long)]
        strip_punctuation: bool,
        /// Permit empty reference texts (scored as pure insertions)
        #[arg(long)]
        allow_empty_reference: bool,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Fit a power law to (total FLOPs, average CER) points
    Fit {
        /// Runs CSV path or fixture:tableN[:strategy-or-encoder]
        #[arg(long)]
        input: String,
        #[arg(long, value_enum, default_value_t)]
        method: MethodArg,
        /// Fit the saturating form with an irreducible error floor
        #[arg(long)]
        saturating: bool,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Evaluate a power-law curve at a budget
    Predict {
        #[arg(long, allow_negative_numbers = true)]
        alpha: f64,
        #[arg(long)]
        beta: f64,
        /// Irreducible error floor
        #[arg(long, default_value_t = 0.0)]
        linf: f64,
        /// Compute budget in 1e15 FLOPs
        #[arg(long)]
        budget: f64,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Invert a fitted curve: the budget needed to reach a target CER
    Plan {
        /// Target CER in percent
        #[arg(long = "target-cer")]
        target_cer: f64,
        /// Fit document (JSON, as produced by `fit --format json`)
        #[arg(long = "fit")]
        fit: PathBuf,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Compare strategies against a baseline on CER and FLOPs
    Compare {
        /// Baseline strategy id
        #[arg(long)]
        baseline: String,
        /// Runs CSV path or fixture:tableN[:strategy-or-encoder]
        #[arg(long)]
        input: String,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Pareto frontier of runs on the (FLOPs, CER) plane
    Pareto {
        /// Runs CSV path or fixture:tableN[:strategy-or-encoder]
        #[arg(long)]
        input: String,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Render runs (and per-strategy fits) as an SVG chart
    Chart {
        /// Runs CSV path or fixture:tableN[:strategy-or-encoder]
        #[arg(long)]
        input: String,
        /// Output SVG path
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        title: Option<String>,
        #[arg(long, value_enum, default_value_t)]
        axes: AxesArg,
        /// Draw markers only, no fitted curves
        #[arg(long)]
        no_fit: bool,
        /// Fit the saturating form where a series has enough points
        #[arg(long)]
        saturating: bool,
    },
    /// Estimate the FLOPs of a strategy described by a plan document
    Estimate {
        /// Plan document (JSON)
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// List records from the store
    Runs {
        /// JSONL store path
        #[arg(long, env = "ASRSCALE_STORE")]
        store: PathBuf,
        /// Keep only this strategy id
        #[arg(long)]
        strategy: Option<String>,
        /// Keep only this encoder tag
        #[arg(long)]
        encoder: Option<String>,
        /// Keep only this source ("ingested" or "fixture:tableN")
        #[arg(long)]
        source: Option<String>,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Domain(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Domain(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Domain(m) => f.write_str(m),
        }
    }
}

fn usage(message: impl Into<String>) -> CliError {
    CliError::Usage(message.into())
}

fn domain(message: impl Into<String>) -> CliError {
    CliError::Domain(message.into())
}

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> Self {
        usage(e.to_string())
    }
}

impl From<StoreError> for CliError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::Conflict { .. } => domain(e.to_string()),
            _ => usage(e.to_string()),
        }
    }
}

impl From<FitError> for CliError {
    fn from(e: FitError) -> Self {
        domain(e.to_string())
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        domain(e.to_string())
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        domain(e.to_string())
    }
}

impl From<FlopsError> for CliError {
    fn from(e: FlopsError) -> Self {
        domain(e.to_string())
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        domain(e.to_string())
    }
}

impl From<ChartError> for CliError {
    fn from(e: ChartError) -> Self {
        match e {
            ChartError::NoSeries | ChartError::EmptySeries { .. } => usage(e.to_string()),
            _ => domain(e.to_string()),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Parse(_) => usage(e.to_string()),
            _ => domain(e.to_string()),
        }
    }
}

fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| usage(format!("cannot read {}: {e}", path.display())))
}

/// Shortest decimal that parses back to exactly the same value.
fn num(v: f64) -> String {
    format!("{v}")
}

fn csv_field(text: &str) -> String {
    if text.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", text.replace('"', "\"\""))
    } else {
        text.to_string()
    }
}

fn render_table(headers: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = headers.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (i, cell) in row.iter().enumerate() {
            widths[i] = widths[i].max(cell.chars().count());
        }
    }
    let mut out = String::new();
    let mut push_row = |cells: &[String]| {
        let mut line = String::new();
        for (i, cell) in cells.iter().enumerate() {
            if i > 0 {
                line.push_str("  ");
            }
            line.push_str(cell);
            let pad = widths[i] - cell.chars().count();
            if i + 1 < cells.len() {
                line.extend(std::iter::repeat_n(' ', pad));
            }
        }
        out.push_str(line.trim_end());
        out.push('\n');
    };
    push_row(&headers.iter().map(|h| h.to_string()).collect::<Vec<_>>());
    push_row(&widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>());
    for row in rows {
        push_row(row);
    }
    out
}

/// Loads run records from a CSV path or a `fixture:tableN[:filter]`
/// pseudo-path, where the filter matches either a strategy id or an
/// encoder tag.
fn resolve_input(spec: &str) -> Result<Vec<RunRecord>, CliError> {
    if let Some(rest) = spec.strip_prefix("fixture:table") {
        let (table_str, filter) = match rest.split_once(':') {
            Some((t, f)) => (t, Some(f)),
            None => (rest, None),
        };
        let table: u8 = table_str
            .parse()
            .map_err(|_| usage(format!("invalid fixture table {table_str:?} in {spec:?}")))?;
        let mut records =
            asrscale_core::load_fixtures(table).map_err(|e| usage(e.to_string()))?;
        if let Some(f) = filter {
            records.retain(|r| r.strategy_id == f || r.encoder_tag == f);
            if records.is_empty() {
                return Err(usage(format!("no rows in table {table} match {f:?}")));
            }
        }
        Ok(records)
    } else {
        let text = read_file(Path::new(spec))?;
        Ok(parse_runs_csv(&text)?)
    }
}

fn outcomes_of(records: &[RunRecord]) -> Result<Vec<StrategyOutcome>, CliError> {
    records.iter().map(|r| r.outcome().map_err(CliError::from)).collect()
}

fn points_of(records: &[RunRecord]) -> Result<Vec<SamplePoint>, CliError> {
    records
        .iter()
        .map(|r| Ok(SamplePoint::new(r.total_flops, r.avg_cer()?)))
        .collect()
}

/// One TSV line per utterance: id <TAB> text. Ids must be unique.
fn parse_tsv(text: &str, label: &Path) -> Result<Vec<(String, String)>, CliError> {
    let mut rows = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (i, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let Some((id, utterance)) = line.split_once('\t') else {
            return Err(usage(format!(
                "{}:{}: expected <id>\\t<text>, got {line:?}",
                label.display(),
                i + 1
            )));
        };
        if !seen.insert(id.to_string()) {
            return Err(usage(format!(
                "{}:{}: duplicate utterance id {id:?}",
                label.display(),
                i + 1
            )));
        }
        rows.push((id.to_string(), utterance.to_string()));
    }
    Ok(rows)
}

fn record_rows(records: &[RunRecord], with_source: bool) -> Result<Vec<Vec<String>>, CliError> {
    let mut rows = Vec::with_capacity(records.len());
    for r in records {
        let scores = r
            .scores
            .iter()
            .map(|s| format!("{}={}", s.test_set, num(s.cer)))
            .collect::<Vec<_>>()
            .join(" ");
        let mut row = vec![
            r.run_id.clone(),
            r.strategy_id.clone(),
            r.encoder_tag.clone(),
            num(r.data_hours),
            scores,
            format_cer(r.avg_cer()?),
            num(r.total_flops),
        ];
        if with_source {
            row.push(r.source.to_string());
        }
        rows.push(row);
    }
    Ok(rows)
}

fn records_output(records: &[RunRecord], format: Format, with_source: bool) -> Result<String, CliError> {
    match format {
        Format::Table => {
            let mut headers =
                vec!["run_id", "strategy_id", "encoder_tag", "data_hours", "scores", "avg_cer", "total_flops"];
            if with_source {
                headers.push("source");
            }
            Ok(render_table(&headers, &record_rows(records, with_source)?))
        }
        Format::Csv => Ok(serialize_runs_csv(records)),
        Format::Json => Ok(format!(
            "{}\n",
            serde_json::to_string_pretty(records).expect("records serialize")
        )),
    }
}

fn dispatch(command: Command) -> Result<String, CliError> {
    match command {
        Command::Fixtures { table, format } => {
            let records =
                asrscale_core::load_fixtures(table).map_err(|e| usage(e.to_string()))?;
            records_output(&records, format, false)
        }

        Command::Ingest { csv, store } => {
            let records = parse_runs_csv(&read_file(&csv)?)?;
            let store = RunStore::open(&store);
            let mut out = String::new();
            for record in &records {
                store.put(record)?;
                out.push_str(&format!("  {}\n", record.run_id));
            }
            Ok(format!(
                "ingested {} run(s) into {}\n{out}",
                records.len(),
                store.path().display()
            ))
        }

        Command::Cer { reference, hypothesis, strip_punctuation, allow_empty_reference, format } => {
            let refs = parse_tsv(&read_file(&reference)?, &reference)?;
            let hyps = parse_tsv(&read_file(&hypothesis)?, &hypothesis)?;
            let hyp_map: HashMap<&str, &str> =
                hyps.iter().map(|(id, text)| (id.as_str(), text.as_str())).collect();
            let ref_ids: std::collections::HashSet<&str> =
                refs.iter().map(|(id, _)| id.as_str()).collect();

            let mut missing_hyp: Vec<&str> = refs
                .iter()
                .map(|(id, _)| id.as_str())
                .filter(|id| !hyp_map.contains_key(id))
                .collect();
            let mut missing_ref: Vec<&str> = hyps
                .iter()
                .map(|(id, _)| id.as_str())
                .filter(|id| !ref_ids.contains(id))
                .collect();
            if !missing_hyp.is_empty() || !missing_ref.is_empty() {
                missing_hyp.sort_unstable();
                missing_ref.sort_unstable();
                let mut parts = Vec::new();
                if !missing_hyp.is_empty() {
                    parts.push(format!("missing from hypothesis: {}", missing_hyp.join(", ")));
                }
                if !missing_ref.is_empty() {
                    parts.push(format!("missing from reference: {}", missing_ref.join(", ")));
                }
                return Err(domain(format!("unmatched utterance ids: {}", parts.join("; "))));
            }

            let options = NormalizationOptions { strip_punctuation };
            let mut pairs = Vec::with_capacity(refs.len());
            let mut edits = 0usize;
            let mut ref_chars = 0usize;
            for (id, text) in &refs {
                let hyp_text = hyp_map[id.as_str()];
                let pair = if allow_empty_reference {
                    UtterancePair::allowing_empty_reference(text.clone(), hyp_text)
                } else {
                    UtterancePair::new(text.clone(), hyp_text)
                        .map_err(|e| domain(format!("utterance {id:?}: {e}")))?
                };
                let r = normalize(&pair.reference, &options);
                let h = normalize(&pair.hypothesis, &options);
                edits += edit_distance(&r, &h);
                ref_chars += r.chars().count();
                pairs.push(pair);
            }
            let cer_percent = 100.0 * corpus_cer(&pairs, &options)?;

            match format {
                Format::Table => Ok(render_table(
                    &["utterances", "reference_chars", "edits", "cer_percent"],
                    &[vec![
                        refs.len().to_string(),
                        ref_chars.to_string(),
                        edits.to_string(),
                        format_cer(cer_percent),
                    ]],
                )),
                Format::Csv => Ok(format!(
                    "utterances,reference_chars,edits,cer_percent\n{},{},{},{}\n",
                    refs.len(),
                    ref_chars,
                    edits,
                    num(cer_percent)
                )),
                Format::Json => Ok(format!(
                    "{}\n",
                    serde_json::to_string_pretty(&serde_json::json!({
                        "utterances": refs.len(),
                        "reference_chars": ref_chars,
                        "edits": edits,
                        "cer_percent": cer_percent,
                    }))
                    .expect("json object serializes")
                )),
            }
        }

        Command::Fit { input, method, saturating, format } => {
            let records = resolve_input(&input)?;
            let points = points_of(&records)?;
            let fit = if saturating {
                fit_saturating_power_law(&points, &GridSearchConfig::default())?
            } else {
                fit_power_law(&points, method.into())?
            };
            fit_output(&fit, format)
        }

        Command::Predict { alpha, beta, linf, budget, format } => {
            let fit = raw_fit(alpha, beta, linf);
            let predicted = predict_error(&fit, budget)?;
            match format {
                Format::Table => Ok(render_table(
                    &["budget", "predicted_error", "rounded_2dp"],
                    &[vec![num(budget), num(predicted), format_cer(predicted)]],
                )),
                Format::Csv => {
                    Ok(format!("budget,predicted_error\n{},{}\n", num(budget), num(predicted)))
                }
                Format::Json => Ok(format!(
                    "{}\n",
                    serde_json::to_string_pretty(&serde_json::json!({
                        "budget": budget,
                        "predicted_error": predicted,
                    }))
                    .expect("json object serializes")
                )),
            }
        }

        Command::Plan { target_cer, fit, format } => {
            let document = read_file(&fit)?;
            let fit: PowerLawFit = serde_json::from_str(&document)
                .map_err(|e| usage(format!("invalid fit document {}: {e}", fit.display())))?;
            let budget = required_budget(&fit, target_cer)?;
            let check = predict_error(&fit, budget)?;
            match format {
                Format::Table => Ok(render_table(
                    &["target_cer", "required_budget", "check_predicted"],
                    &[vec![num(target_cer), num(budget), num(check)]],
                )),
                Format::Csv => Ok(format!(
                    "target_cer,required_budget\n{},{}\n",
                    num(target_cer),
                    num(budget)
                )),
                Format::Json => Ok(format!(
                    "{}\n",
                    serde_json::to_string_pretty(&serde_json::json!({
                        "target_cer": target_cer,
                        "required_budget": budget,
                    }))
                    .expect("json object serializes")
                )),
            }
        }

        Command::Compare { baseline, input, format } => {
            let records = resolve_input(&input)?;
            let rows = compare_strategies(&outcomes_of(&records)?, &baseline)?;
            match format {
                Format::Table => {
                    let body: Vec<Vec<String>> = rows
                        .iter()
                        .map(|r| {
                            vec![
                                r.strategy_id.clone(),
                                format_cer(r.avg_cer),
                                num(r.total_flops),
                                format!("{:.1}%", round_half_up(100.0 * r.cerr_vs_baseline, 1)),
                                format!(
                                    "{:.1}%",
                                    round_half_up(100.0 * r.flops_ratio_vs_baseline, 1)
                                ),
                            ]
                        })
                        .collect();
                    Ok(render_table(
                        &["strategy_id", "avg_cer", "total_flops", "cerr_vs_baseline", "flops_ratio_vs_baseline"],
                        &body,
                    ))
                }
                Format::Csv => {
                    let mut out = String::from(
                        "strategy_id,avg_cer,total_flops,cerr_vs_baseline,flops_ratio_vs_baseline\n",
                    );
                    for r in &rows {
                        out.push_str(&format!(
                            "{},{},{},{},{}\n",
                            csv_field(&r.strategy_id),
                            num(r.avg_cer),
                            num(r.total_flops),
                            num(r.cerr_vs_baseline),
                            num(r.flops_ratio_vs_baseline)
                        ));
                    }
                    Ok(out)
                }
                Format::Json => Ok(format!(
                    "{}\n",
                    serde_json::to_string_pretty(&rows).expect("rows serialize")
                )),
            }
        }

        Command::Pareto { input, format } => {
            let records = resolve_input(&input)?;
            let frontier = pareto_frontier(&outcomes_of(&records)?);
            match format {
                Format::Table => {
                    let body: Vec<Vec<String>> = frontier
                        .iter()
                        .map(|o| {
                            vec![
                                o.strategy_id.clone(),
                                num(o.data_hours),
                                format_cer(o.avg_cer),
                                num(o.total_flops),
                            ]
                        })
                        .collect();
                    Ok(render_table(&["strategy_id", "data_hours", "avg_cer", "total_flops"], &body))
                }
                Format::Csv => {
                    let mut out = String::from("strategy_id,data_hours,avg_cer,total_flops\n");
                    for o in &frontier {
                        out.push_str(&format!(
                            "{},{},{},{}\n",
                            csv_field(&o.strategy_id),
                            num(o.data_hours),
                            num(o.avg_cer),
                            num(o.total_flops)
                        ));
                    }
                    Ok(out)
                }
                Format::Json => Ok(format!(
                    "{}\n",
                    serde_json::to_string_pretty(&frontier).expect("outcomes serialize")
                )),
            }
        }

        Command::Chart { input, out, title, axes, no_fit, saturating } => {
            let records = resolve_input(&input)?;
            let mut spec = ChartSpec::new(
                title.unwrap_or_else(|| "CER vs training compute".to_string()),
                axes.into(),
            );

            // One series per strategy in first-seen order; strategies run
            // with several encoders split into one series per encoder.
            // Points are sorted by budget so identical inputs render
            // identically.
            let mut tags_by_strategy: HashMap<&str, Vec<&str>> = HashMap::new();
            for record in &records {
                let tags = tags_by_strategy.entry(&record.strategy_id).or_default();
                if !tags.contains(&record.encoder_tag.as_str()) {
                    tags.push(&record.encoder_tag);
                }
            }
            let mut order: Vec<String> = Vec::new();
            let mut grouped: HashMap<String, Vec<SamplePoint>> = HashMap::new();
            for record in &records {
                let label = if tags_by_strategy[record.strategy_id.as_str()].len() > 1 {
                    format!("{} ({})", record.strategy_id, record.encoder_tag)
                } else {
                    record.strategy_id.clone()
                };
                let point = SamplePoint::new(record.total_flops, record.avg_cer()?);
                if !grouped.contains_key(&label) {
                    order.push(label.clone());
                }
                grouped.entry(label).or_default().push(point);
            }
            for label in order {
                let mut points = grouped.remove(&label).expect("grouped above");
                points.sort_by(|a, b| {
                    a.budget.total_cmp(&b.budget).then(a.error.total_cmp(&b.error))
                });
                if !no_fit {
                    let fit = if saturating && points.len() >= 3 {
                        fit_saturating_power_law(&points, &GridSearchConfig::default()).ok()
                    } else if points.len() >= 2 {
                        fit_power_law(&points, FitMethod::LogLogOls).ok()
                    } else {
                        None
                    };
                    if let Some(fit) = fit {
                        spec.fits.push(LabeledFit { label: format!("{label} fit"), fit });
                    }
                }
                spec.series.push(Series { label, points });
            }

            let svg = render_chart(&spec)?;
            std::fs::write(&out, svg)
                .map_err(|e| usage(format!("cannot write {}: {e}", out.display())))?;
            Ok(format!("wrote {}\n", out.display()))
        }

        Command::Estimate { config, format } => {
            let document = ConfigDocument::from_json(&read_file(&config)?)?;
            let strategy = document.strategy();
            let flops = strategy_flops(&strategy, &document.architecture()?, &document.cost_model())?;
            match format {
                Format::Table => {
                    let mut body = Vec::new();
                    for (stage, breakdown) in strategy.stages.iter().zip(&flops.stages) {
                        for m in &breakdown.modules {
                            body.push(vec![
                                stage.kind.to_string(),
                                m.module.clone(),
                                num(m.forward),
                                num(m.activation_backward),
                                num(m.weight_gradient),
                                num(m.total()),
                            ]);
                        }
                        body.push(vec![
                            stage.kind.to_string(),
                            "(stage total)".to_string(),
                            String::new(),
                            String::new(),
                            String::new(),
                            num(breakdown.total),
                        ]);
                    }
                    body.push(vec![
                        "(strategy total)".to_string(),
                        String::new(),
                        String::new(),
                        String::new(),
                        String::new(),
                        num(flops.total),
                    ]);
                    Ok(render_table(
                        &["stage", "module", "forward", "activation_backward", "weight_gradient", "total"],
                        &body,
                    ))
                }
                Format::Csv => {
                    let mut out = String::from(
                        "stage,module,forward,activation_backward,weight_gradient,total\n",
                    );
                    for (stage, breakdown) in strategy.stages.iter().zip(&flops.stages) {
                        for m in &breakdown.modules {
                            out.push_str(&format!(
                                "{},{},{},{},{},{}\n",
                                stage.kind,
                                csv_field(&m.module),
                                num(m.forward),
                                num(m.activation_backward),
                                num(m.weight_gradient),
                                num(m.total())
                            ));
                        }
                    }
                    Ok(out)
                }
                Format::Json => Ok(format!(
                    "{}\n",
                    serde_json::to_string_pretty(&serde_json::json!({
                        "id": strategy.id,
                        "total": flops.total,
                        "stages": flops.stages,
                    }))
                    .expect("breakdown serializes")
                )),
            }
        }

        Command::Runs { store, strategy, encoder, source, format } => {
            let source = source
                .map(|s| s.parse::<Source>())
                .transpose()
                .map_err(usage)?;
            let filter = StoreFilter { strategy_id: strategy, encoder_tag: encoder, source };
            let records = RunStore::open(&store).list(&filter)?;
            records_output(&records, format, true)
        }
    }
}

fn raw_fit(alpha: f64, beta: f64, l_infinity: f64) -> PowerLawFit {
    PowerLawFit {
        alpha,
        beta,
        l_infinity,
        method: FitMethod::LogLogOls,
        r2_log: 1.0,
        r2_linear: 1.0,
        n_points: 0,
        degenerate: false,
    }
}

fn fit_output(fit: &PowerLawFit, format: Format) -> Result<String, CliError> {
    match format {
        Format::Table => {
            let rows = vec![
                vec!["alpha".to_string(), num(fit.alpha)],
                vec!["beta".to_string(), num(fit.beta)],
                vec!["l_infinity".to_string(), num(fit.l_infinity)],
                vec!["method".to_string(), fit.method.to_string()],
                vec!["r2_log".to_string(), num(fit.r2_log)],
                vec!["r2_linear".to_string(), num(fit.r2_linear)],
                vec!["n_points".to_string(), fit.n_points.to_string()],
                vec!["degenerate".to_string(), fit.degenerate.to_string()],
            ];
            Ok(render_table(&["field", "value"], &rows))
        }
        Format::Csv => Ok(format!(
            "alpha,beta,l_infinity,method,r2_log,r2_linear,n_points\n{},{},{},{},{},{},{}\n",
            num(fit.alpha),
            num(fit.beta),
            num(fit.l_infinity),
            fit.method,
            num(fit.r2_log),
            num(fit.r2_linear),
            fit.n_points
        )),
        Format::Json => Ok(format!(
            "{}\n",
            serde_json::to_string_pretty(fit).expect("fit serializes")
        )),
    }
}

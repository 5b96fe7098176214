use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand};
use momdet::conditions::{parse_condition_list, ConditionId};
use momdet::pipeline::{analyze_with, resolve_case, AnalysisOptions, CaseChoice};
use momdet::{catalog, maximizer, moments, report, Config, SpecRecipe};
use rayon::prelude::*;

const EXIT_INPUT: u8 = 1;
const EXIT_CONTRADICTION: u8 = 2;
const EXIT_MISMATCH: u8 = 3;

/// Moment determinacy diagnostics.
#[derive(Parser)]
#[command(name = "momdet", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the condition battery and print the verdict JSON.
    Analyze(RunArgs),
    /// Condition reports as CSV.
    Conditions(RunArgs),
    /// Log-moments and Carleman terms as CSV.
    Moments(RunArgs),
    /// Maximizer sequence and the moment bound slack as CSV.
    Trace(RunArgs),
    /// Built-in regression catalog.
    Catalog {
        #[command(subcommand)]
        action: CatalogAction,
    },
}

#[derive(Subcommand)]
enum CatalogAction {
    /// Entry names and parameters.
    List,
    /// Analyze every entry and compare with its expected verdict.
    Run {
        #[command(flatten)]
        settings: Settings,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Spec JSON file: {"family", "params", "transforms", "threshold"}.
    #[arg(long)]
    spec: PathBuf,
    #[arg(long, default_value = "auto", value_parser = parse_case)]
    case: CaseChoice,
    /// Highest moment order.
    #[arg(long, value_parser = clap::value_parser!(u32).range(8..=200))]
    kmax: Option<u32>,
    /// Comma-separated condition names, e.g. KstarH,KreinH.
    #[arg(long)]
    only: Option<String>,
    /// Also write JSON here.
    #[arg(long)]
    json: Option<PathBuf>,
    /// Also write CSV here.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[command(flatten)]
    settings: Settings,
}

#[derive(Args)]
struct Settings {
    /// Numeric override, e.g. tailfit.tau_q=0.2 (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl Settings {
    fn config(&self) -> Result<Config> {
        let mut cfg = Config::default();
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| anyhow!("--set expects KEY=VALUE, got {kv:?}"))?;
            cfg.set(k.trim(), v)?;
        }
        Ok(cfg)
    }
}

fn parse_case(s: &str) -> std::result::Result<CaseChoice, String> {
    s.parse().map_err(|e: momdet::Error| e.to_string())
}

/// Failure with a specific exit code.
struct Exit(u8);

fn load_recipe(path: &Path) -> Result<SpecRecipe> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| {
        anyhow!(
            "{}:{}:{}: {}",
            path.display(),
            e.line(),
            e.column(),
            e
        )
    })
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn only_list(args: &RunArgs) -> Result<Option<Vec<ConditionId>>> {
    Ok(match &args.only {
        Some(list) => Some(parse_condition_list(list)?),
        None => None,
    })
}

fn options(args: &RunArgs) -> Result<AnalysisOptions> {
    Ok(AnalysisOptions {
        case: args.case,
        only: only_list(args)?,
        k_max: args.kmax,
    })
}

fn cmd_analyze(args: &RunArgs) -> Result<Option<Exit>> {
    let cfg = args.settings.config()?;
    let recipe = load_recipe(&args.spec)?;
    let a = analyze_with(&recipe, &options(args)?, &cfg)?;
    let json = report::analysis_json(&a)?;
    println!("{json}");
    if let Some(p) = &args.json {
        write_file(p, &json)?;
    }
    if let Some(p) = &args.csv {
        write_file(p, &report::conditions_csv(&a.reports)?)?;
    }
    Ok(a.verdict.contradiction().map(|c| {
        eprintln!("error: {c}");
        Exit(EXIT_CONTRADICTION)
    }))
}

fn cmd_conditions(args: &RunArgs) -> Result<Option<Exit>> {
    let cfg = args.settings.config()?;
    let recipe = load_recipe(&args.spec)?;
    let a = analyze_with(&recipe, &options(args)?, &cfg)?;
    let csv = report::conditions_csv(&a.reports)?;
    print!("{csv}");
    if let Some(p) = &args.csv {
        write_file(p, &csv)?;
    }
    if let Some(p) = &args.json {
        let v = report::to_rounded_value(&a.reports)?;
        write_file(p, &serde_json::to_string_pretty(&v)?)?;
    }
    Ok(None)
}

fn cmd_moments(args: &RunArgs) -> Result<Option<Exit>> {
    let spec = resolve_case(load_recipe(&args.spec)?.build()?, args.case)?;
    let k_max = args.kmax.unwrap_or_else(|| moments::default_kmax(&spec));
    let table = moments::listing_table(&spec, k_max)?;
    let csv = report::moments_csv(&table)?;
    print!("{csv}");
    if let Some(p) = &args.csv {
        write_file(p, &csv)?;
    }
    if let Some(p) = &args.json {
        write_file(p, &serde_json::to_string_pretty(&report::to_rounded_value(&table)?)?)?;
    }
    Ok(None)
}

fn cmd_trace(args: &RunArgs) -> Result<Option<Exit>> {
    let spec = resolve_case(load_recipe(&args.spec)?.build()?, args.case)?;
    let k_max = args.kmax.unwrap_or_else(|| moments::default_kmax(&spec));
    let trace = maximizer::build_trace(&spec, k_max)?;
    let bounds = maximizer::verify_step5_bound(&spec, &trace)?;
    let csv = report::trace_csv(&trace, &bounds)?;
    print!("{csv}");
    for d in &trace.diagnostics {
        eprintln!("note: {d}");
    }
    if let Some(p) = &args.csv {
        write_file(p, &csv)?;
    }
    if let Some(p) = &args.json {
        write_file(p, &serde_json::to_string_pretty(&report::to_rounded_value(&trace)?)?)?;
    }
    Ok(None)
}

fn cmd_catalog_list() -> Result<Option<Exit>> {
    for e in catalog() {
        let params: Vec<String> = e
            .parameters
            .iter()
            .map(|(k, v)| format!("{k}={}", report::fmt_num(*v)))
            .collect();
        println!("{:<28} {:<32} {}", e.name, params.join(","), e.notes);
    }
    Ok(None)
}

fn cmd_catalog_run(settings: &Settings) -> Result<Option<Exit>> {
    let cfg = settings.config()?;
    let entries = catalog();
    let rows: Vec<(String, bool)> = entries
        .par_iter()
        .map(|e| {
            let opts = AnalysisOptions::default();
            match analyze_with(&e.recipe, &opts, &cfg) {
                Ok(a) => {
                    let rules: Vec<String> = a.verdict.rule_ids().iter().map(|r| r.to_string()).collect();
                    let (expected, ok) = match e.expected {
                        Some(x) => (
                            format!("{} via {}", x.conclusion, x.rule),
                            a.verdict.conclusion == x.conclusion && a.verdict.fired(x.rule),
                        ),
                        None => ("-".to_string(), true),
                    };
                    let line = format!(
                        "{:<28} {:<14} {:<44} {:<34} {}",
                        e.name,
                        a.verdict.conclusion.to_string(),
                        rules.join(","),
                        expected,
                        if ok { "ok" } else { "MISMATCH" }
                    );
                    (line, ok)
                }
                Err(err) => (format!("{:<28} error: {err}", e.name), false),
            }
        })
        .collect();
    println!(
        "{:<28} {:<14} {:<44} {:<34} match",
        "name", "conclusion", "fired", "expected"
    );
    let mut mismatches = 0;
    for (line, ok) in rows {
        println!("{line}");
        mismatches += usize::from(!ok);
    }
    if mismatches > 0 {
        eprintln!("{mismatches} catalog entries did not match");
        return Ok(Some(Exit(EXIT_MISMATCH)));
    }
    Ok(None)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(EXIT_INPUT);
        }
    };
    let outcome = match &cli.command {
        Command::Analyze(a) => cmd_analyze(a),
        Command::Conditions(a) => cmd_conditions(a),
        Command::Moments(a) => cmd_moments(a),
        Command::Trace(a) => cmd_trace(a),
        Command::Catalog { action: CatalogAction::List } => cmd_catalog_list(),
        Command::Catalog { action: CatalogAction::Run { settings } } => cmd_catalog_run(settings),
    };
    match outcome {
        Ok(None) => ExitCode::SUCCESS,
        Ok(Some(Exit(code))) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_INPUT)
        }
    }
}

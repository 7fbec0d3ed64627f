//! `rauzy` — command line laboratory for complete non-classical exchanges:
//! seeded expansions, distortion reports, stopping decompositions, and the
//! recurrence / transport / decay experiments. Every run embeds its resolved
//! configuration and seed in the output header and reruns are byte-identical.

mod fmt;

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use num_rational::BigRational;
use serde_json::{json, Value};

use rauzy_core::experiments::{
    decay_experiment, eq1_transport_check, recurrence_experiment, DecayConfig, RecurrenceConfig,
};
use rauzy_core::numeric::render_f64;
use rauzy_core::projective::{distortion, DistortionMode};
use rauzy_core::selector::{SelectorKind, SelectorSpec};
use rauzy_core::{
    expand, stopping_decomposition, CarriedPolytope, Error, ExpansionTrace, NonclassicalExchange,
    NumericMode, Scalar, TraceProvenance, TransitionMatrix, WeightVector, SCHEMA_VERSION,
};

#[derive(Parser)]
#[command(name = "rauzy", version, about = "Rauzy induction laboratory for non-classical exchanges")]
struct Cli {
    /// Experiment seed; all randomness is derived from it.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Weight arithmetic: exact rationals or fast doubles.
    #[arg(long, global = true, value_enum, default_value_t = ModeArg::Fast)]
    mode: ModeArg,
    /// Primary output file; experiments also write a CSV next to it.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Suppress the one-line summary on stdout.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Exact,
    Fast,
}

impl From<ModeArg> for NumericMode {
    fn from(mode: ModeArg) -> Self {
        match mode {
            ModeArg::Exact => NumericMode::Exact,
            ModeArg::Fast => NumericMode::Fast,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum RegionArg {
    /// First coordinate at most 1/2.
    Half,
    /// Halfspace resolved at the target proportion.
    Halfspace,
    /// Cap toward the first vertex at the target proportion.
    Cap,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SelectorArg {
    Halfspace,
    Cap,
}

#[derive(Subcommand)]
enum Command {
    /// Expand a weight vector by iterated induction and write the trace.
    Expand {
        /// Exchange rows, e.g. "a a b | b c c".
        #[arg(long)]
        exchange: String,
        /// Comma-separated weights, e.g. "a=0.25,b=0.5,c=0.25"; sampled
        /// from the carried polytope when omitted.
        #[arg(long)]
        weights: Option<String>,
        #[arg(long, default_value_t = 100)]
        steps: usize,
    },
    /// Print the carried polytope: exact vertices and dimension.
    Polytope {
        #[arg(long)]
        exchange: String,
    },
    /// Distortion reports and the stopping decomposition at a threshold C.
    Distort {
        /// Trace file written by `expand`.
        #[arg(long, conflicts_with = "stage")]
        trace: Option<PathBuf>,
        /// Inline stage matrix as JSON rows, e.g. "[[2,1],[1,1]]".
        #[arg(long)]
        stage: Option<String>,
        /// Exchange providing the polytope for an inline stage; defaults to
        /// the full simplex of matching size.
        #[arg(long)]
        exchange: Option<String>,
        #[arg(long = "C", default_value_t = 4.0)]
        c: f64,
    },
    /// Uniform-distortion recurrence experiment.
    Recurrence {
        #[arg(long)]
        exchange: String,
        #[arg(long = "C", default_value_t = 16.0)]
        c: f64,
        #[arg(long, default_value_t = 500)]
        steps: usize,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
    },
    /// Nested measure-decay simulation.
    Decay {
        #[arg(long)]
        exchange: String,
        #[arg(long = "C", default_value_t = 2.0)]
        c: f64,
        /// Target selector proportion per polytope.
        #[arg(long = "K", default_value_t = 0.3)]
        k: f64,
        #[arg(long, default_value_t = 10)]
        depth: usize,
        #[arg(long, default_value_t = 2000)]
        samples: usize,
        #[arg(long, default_value_t = 1_000_000)]
        budget: usize,
        #[arg(long, default_value_t = 2000)]
        segment_steps: usize,
        #[arg(long, value_enum, default_value_t = SelectorArg::Halfspace)]
        selector: SelectorArg,
    },
    /// Measure-transport sandwich check for a stage matrix.
    Transport {
        /// Stage matrix as JSON rows, e.g. "[[2,1],[1,1]]".
        #[arg(long)]
        stage: String,
        /// Exchange providing the domain polytope; defaults to the full
        /// simplex of matching size.
        #[arg(long)]
        exchange: Option<String>,
        #[arg(long, value_enum, default_value_t = RegionArg::Half)]
        region: RegionArg,
        /// Target region proportion (used by halfspace and cap regions).
        #[arg(long = "K", default_value_t = 0.5)]
        k: f64,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
    },
}

enum Failure {
    Config(String),
    Domain(String),
    Budget(String),
    Io(String),
}

impl Failure {
    fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) => 2,
            Failure::Domain(_) => 3,
            Failure::Budget(_) => 4,
            Failure::Io(_) => 1,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Domain(m) | Failure::Budget(m) | Failure::Io(m) => m,
        }
    }
}

fn domain(err: Error) -> Failure {
    match err {
        Error::Parse(m) => Failure::Config(m),
        Error::Io(e) => Failure::Io(e.to_string()),
        other => Failure::Domain(other.to_string()),
    }
}

fn main() {
    if let Ok(threads) = std::env::var("RAUZY_THREADS") {
        match threads.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => {
                eprintln!("error: RAUZY_THREADS must be a positive integer");
                std::process::exit(2);
            }
        }
    }
    let cli = Cli::parse();
    if let Err(failure) = run(cli) {
        eprintln!("error: {}", failure.message());
        std::process::exit(failure.exit_code());
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match NumericMode::from(cli.mode) {
        NumericMode::Exact => dispatch::<BigRational>(cli),
        NumericMode::Fast => dispatch::<f64>(cli),
    }
}

fn dispatch<S: Scalar>(cli: Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Expand {
            exchange,
            weights,
            steps,
        } => cmd_expand::<S>(&cli, exchange, weights.as_deref(), *steps),
        Command::Polytope { exchange } => cmd_polytope(&cli, exchange),
        Command::Distort {
            trace,
            stage,
            exchange,
            c,
        } => cmd_distort::<S>(&cli, trace.as_deref(), stage.as_deref(), exchange.as_deref(), *c),
        Command::Recurrence {
            exchange,
            c,
            steps,
            trials,
        } => cmd_recurrence::<S>(&cli, exchange, *c, *steps, *trials),
        Command::Decay {
            exchange,
            c,
            k,
            depth,
            samples,
            budget,
            segment_steps,
            selector,
        } => cmd_decay::<S>(
            &cli,
            exchange,
            *c,
            *k,
            *depth,
            *samples,
            *budget,
            *segment_steps,
            *selector,
        ),
        Command::Transport {
            stage,
            exchange,
            region,
            k,
            samples,
        } => cmd_transport::<S>(&cli, stage, exchange.as_deref(), *region, *k, *samples),
    }
}

fn parse_exchange(text: &str) -> Result<NonclassicalExchange, Failure> {
    NonclassicalExchange::parse(text)
        .map_err(|e| Failure::Config(format!("bad exchange `{text}`: {e}")))
}

fn parse_weights<S: Scalar>(
    ex: &NonclassicalExchange,
    text: &str,
) -> Result<WeightVector<S>, Failure> {
    let mut pairs = Vec::new();
    for item in text.split(',') {
        let (label, value) = item
            .split_once('=')
            .ok_or_else(|| Failure::Config(format!("bad weight entry `{item}`")))?;
        let value = S::parse(value.trim())
            .map_err(|e| Failure::Config(format!("bad weight `{item}`: {e}")))?;
        pairs.push((label.trim().to_owned(), value));
    }
    WeightVector::from_pairs(ex.alphabet().clone(), &pairs)
        .map_err(|e| Failure::Config(format!("bad weights: {e}")))
}

fn parse_stage(text: &str) -> Result<TransitionMatrix, Failure> {
    let value: Value = serde_json::from_str(text)
        .map_err(|e| Failure::Config(format!("bad stage matrix `{text}`: {e}")))?;
    TransitionMatrix::from_json(&value).map_err(domain)
}

/// Full simplex stand-in when an inline stage has no exchange: the
/// classical exchange on synthetic labels x0..x(n-1).
fn synthetic_exchange(n: usize) -> NonclassicalExchange {
    let labels: Vec<String> = (0..n).map(|i| format!("x{i}")).collect();
    let reversed: Vec<String> = labels.iter().rev().cloned().collect();
    NonclassicalExchange::new(&labels, &reversed).expect("synthetic exchange is valid")
}

fn document(cli: &Cli, command: &str, config: Value, results: Value) -> Value {
    json!({
        "schema": SCHEMA_VERSION,
        "tool": "rauzy",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "mode": NumericMode::from(cli.mode).to_string(),
        "seed": cli.seed,
        "config": config,
        "results": results,
    })
}

fn write_output(cli: &Cli, text: &str) -> Result<(), Failure> {
    match &cli.out {
        Some(path) => fs::write(path, text).map_err(|e| Failure::Io(e.to_string())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn csv_meta(cli: &Cli, command: &str, config: &Value) -> String {
    format!(
        "# rauzy {} schema={} command={} mode={} seed={}\n# config: {}\n",
        env!("CARGO_PKG_VERSION"),
        SCHEMA_VERSION,
        command,
        NumericMode::from(cli.mode),
        cli.seed,
        config
    )
}

fn write_csv(cli: &Cli, meta: &str, header: &str, rows: &[String]) -> Result<(), Failure> {
    let Some(path) = &cli.out else {
        return Ok(());
    };
    let csv_path: PathBuf = path.with_extension("csv");
    let mut out = String::new();
    out.push_str(meta);
    out.push_str(header);
    out.push('\n');
    for row in rows {
        out.push_str(row);
        out.push('\n');
    }
    fs::write(&csv_path, out).map_err(|e| Failure::Io(e.to_string()))
}

fn summary(cli: &Cli, line: &str) {
    if !cli.quiet {
        println!("{line}");
    }
}

fn cmd_expand<S: Scalar>(
    cli: &Cli,
    exchange: &str,
    weights: Option<&str>,
    steps: usize,
) -> Result<(), Failure> {
    let ex = parse_exchange(exchange)?;
    let poly = CarriedPolytope::of(&ex).map_err(domain)?;
    let w: WeightVector<S> = match weights {
        Some(text) => {
            let parsed = parse_weights::<S>(&ex, text)?;
            let defect = ex.switch_defect(&parsed).map_err(domain)?;
            if defect.abs().to_f64() > S::defect_tolerance() {
                return Err(Failure::Domain(format!(
                    "weights are not carried: switch defect {}",
                    defect.render()
                )));
            }
            parsed.normalized()
        }
        None => poly.sample_seeded(cli.seed),
    };
    let config = json!({
        "exchange": ex.to_string(),
        "weights": w.to_json(),
        "steps": steps,
    });
    let mut trace = expand(&ex, &w, steps);
    trace.set_provenance(TraceProvenance {
        version: env!("CARGO_PKG_VERSION").to_owned(),
        seed: Some(cli.seed),
        config: config.clone(),
    });
    let text = trace.to_jsonl_string();
    write_output(cli, &text)?;
    summary(
        cli,
        &format!(
            "expand: {} steps, termination {}",
            trace.len(),
            trace.termination()
        ),
    );
    Ok(())
}

fn cmd_polytope(cli: &Cli, exchange: &str) -> Result<(), Failure> {
    let ex = parse_exchange(exchange)?;
    let poly = CarriedPolytope::of(&ex).map_err(domain)?;
    let vertices: Vec<Value> = poly.vertices().iter().map(|v| v.to_json()).collect();
    let config = json!({ "exchange": ex.to_string() });
    let results = json!({
        "dimension": poly.dimension(),
        "classical": ex.is_classical(),
        "vertices": vertices,
    });
    let doc = document(cli, "polytope", config, results);
    write_output(cli, &fmt::to_pretty_json(&doc))?;
    summary(
        cli,
        &format!(
            "polytope: {} vertices, dimension {}",
            poly.vertices().len(),
            poly.dimension()
        ),
    );
    Ok(())
}

fn cmd_distort<S: Scalar>(
    cli: &Cli,
    trace: Option<&Path>,
    stage: Option<&str>,
    exchange: Option<&str>,
    c: f64,
) -> Result<(), Failure> {
    match (trace, stage) {
        (Some(path), None) => {
            let file = fs::File::open(path).map_err(|e| Failure::Io(e.to_string()))?;
            let trace =
                ExpansionTrace::<S>::read_jsonl(std::io::BufReader::new(file)).map_err(domain)?;
            let dec = stopping_decomposition(&trace, c);
            let stages: Vec<Value> = dec
                .stage_matrices
                .iter()
                .zip(&dec.distortion_reports)
                .enumerate()
                .map(|(i, (m, report))| {
                    json!({
                        "from": dec.stop_indices[i],
                        "to": dec.stop_indices[i + 1],
                        "matrix": m.to_json(),
                        "distortion": report.to_json(),
                    })
                })
                .collect();
            let config = json!({
                "trace": path.display().to_string(),
                "C": c,
                "exchange": trace.initial_exchange().to_string(),
            });
            let results = json!({
                "steps": trace.len(),
                "termination": trace.termination().to_string(),
                "stop_indices": dec.stop_indices,
                "stages": stages,
                "remainder": dec.remainder.map(|(lo, hi)| json!([lo, hi])),
            });
            let doc = document(cli, "distort", config, results);
            write_output(cli, &fmt::to_pretty_json(&doc))?;
            summary(
                cli,
                &format!(
                    "distort: {} stages at C={}, first stop {:?}, remainder {:?}",
                    dec.stages(),
                    c,
                    dec.first_stop(),
                    dec.remainder
                ),
            );
            Ok(())
        }
        (None, Some(text)) => {
            let q = parse_stage(text)?;
            let ex = match exchange {
                Some(t) => parse_exchange(t)?,
                None => synthetic_exchange(q.size()),
            };
            let poly = CarriedPolytope::of(&ex).map_err(domain)?;
            let exact = distortion(&q, &poly, DistortionMode::Exact).map_err(domain)?;
            let bound = distortion(&q, &poly, DistortionMode::ColsumBound).map_err(domain)?;
            let config = json!({
                "stage": q.to_json(),
                "exchange": ex.to_string(),
                "C": c,
            });
            let results = json!({
                "exact": exact.to_json(),
                "colsum_bound": bound.to_json(),
                "c_distorted": exact.value() <= c,
            });
            let doc = document(cli, "distort", config, results);
            write_output(cli, &fmt::to_pretty_json(&doc))?;
            summary(
                cli,
                &format!(
                    "distort: exact {} colsum-bound {} (C={} -> {})",
                    render_f64(exact.value()),
                    render_f64(bound.colsum_bound),
                    c,
                    if exact.value() <= c { "C-distorted" } else { "not C-distorted" }
                ),
            );
            Ok(())
        }
        _ => Err(Failure::Config(
            "distort needs exactly one of --trace or --stage".into(),
        )),
    }
}

fn cmd_recurrence<S: Scalar>(
    cli: &Cli,
    exchange: &str,
    c: f64,
    steps: usize,
    trials: usize,
) -> Result<(), Failure> {
    let ex = parse_exchange(exchange)?;
    let config = RecurrenceConfig::new(c, steps, trials, cli.seed);
    let stats = recurrence_experiment::<S>(&ex, &config).map_err(domain)?;
    let config_json = serde_json::to_value(&config).expect("config serializes");
    let results = serde_json::to_value(&stats).expect("stats serialize");
    let doc = document(cli, "recurrence", config_json.clone(), results);
    write_output(cli, &fmt::to_pretty_json(&doc))?;
    let rows: Vec<String> = stats
        .per_trial
        .iter()
        .map(|t| {
            format!(
                "{},{},{},{},{}",
                t.trial,
                t.stages,
                t.first_stop.map_or(String::new(), |v| v.to_string()),
                t.steps,
                t.termination
            )
        })
        .collect();
    write_csv(
        cli,
        &csv_meta(cli, "recurrence", &config_json),
        "trial,stages,first_stop,steps,termination",
        &rows,
    )?;
    summary(
        cli,
        &format!(
            "recurrence: fraction(>=1)={} fraction(>=5)={} over {} trials",
            render_f64(stats.fraction_at_least(1)),
            render_f64(stats.fraction_at_least(5)),
            trials
        ),
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_decay<S: Scalar>(
    cli: &Cli,
    exchange: &str,
    c: f64,
    k: f64,
    depth: usize,
    samples: usize,
    budget: usize,
    segment_steps: usize,
    selector: SelectorArg,
) -> Result<(), Failure> {
    let ex = parse_exchange(exchange)?;
    let kind = match selector {
        SelectorArg::Halfspace => SelectorKind::Halfspace,
        SelectorArg::Cap => SelectorKind::VertexCap,
    };
    let spec = SelectorSpec::new(kind, k);
    let config = DecayConfig {
        c,
        depth,
        samples,
        budget,
        segment_max_steps: segment_steps,
        seed: cli.seed,
    };
    let config_json = json!({
        "exchange": ex.to_string(),
        "C": c,
        "K": k,
        "depth": depth,
        "samples": samples,
        "budget": budget,
        "segment_max_steps": segment_steps,
        "selector": spec,
    });
    let (experiment, budget_hit) = match decay_experiment::<S>(&ex, &spec, &config) {
        Ok(result) => (result, false),
        Err(Error::BudgetExhausted { partial, .. }) => (*partial, true),
        Err(other) => return Err(domain(other)),
    };
    let results = serde_json::to_value(&experiment).expect("experiment serializes");
    let doc = document(cli, "decay", config_json.clone(), results);
    write_output(cli, &fmt::to_pretty_json(&doc))?;
    let rows: Vec<String> = experiment
        .levels
        .iter()
        .map(|l| {
            format!(
                "{},{},{},{},{}",
                l.level,
                render_f64(l.residual),
                render_f64(l.standard_error),
                l.stages,
                render_f64(l.bound)
            )
        })
        .collect();
    write_csv(
        cli,
        &csv_meta(cli, "decay", &config_json),
        "level,residual,standard_error,stages,bound",
        &rows,
    )?;
    let last = experiment.levels.last().expect("level zero always present");
    summary(
        cli,
        &format!(
            "decay: residual {} vs bound {} after level {}{}",
            render_f64(last.residual),
            render_f64(last.bound),
            last.level,
            if budget_hit { " (budget exhausted, partial)" } else { "" }
        ),
    );
    if budget_hit {
        return Err(Failure::Budget(format!(
            "stage budget {budget} exhausted; partial results written"
        )));
    }
    Ok(())
}

fn cmd_transport<S: Scalar>(
    cli: &Cli,
    stage: &str,
    exchange: Option<&str>,
    region: RegionArg,
    k: f64,
    samples: usize,
) -> Result<(), Failure> {
    let q = parse_stage(stage)?;
    let ex = match exchange {
        Some(t) => parse_exchange(t)?,
        None => synthetic_exchange(q.size()),
    };
    let poly = CarriedPolytope::of(&ex).map_err(domain)?;
    let first_label = ex.alphabet().labels()[0].clone();
    let spec = match region {
        RegionArg::Half => SelectorSpec::half(&first_label),
        RegionArg::Halfspace => SelectorSpec::new(SelectorKind::Halfspace, k),
        RegionArg::Cap => SelectorSpec::new(SelectorKind::VertexCap, k),
    };
    let report = eq1_transport_check::<S>(&q, &poly, &spec, samples, cli.seed).map_err(domain)?;
    let config_json = json!({
        "stage": q.to_json(),
        "exchange": ex.to_string(),
        "region": spec,
        "samples": samples,
    });
    let results = serde_json::to_value(&report).expect("report serializes");
    let doc = document(cli, "transport", config_json.clone(), results);
    write_output(cli, &fmt::to_pretty_json(&doc))?;
    let row = format!(
        "{},{},{},{},{},{},{}",
        render_f64(report.distortion),
        render_f64(report.transport),
        render_f64(report.source_ratio),
        render_f64(report.target_ratio),
        render_f64(report.lower),
        render_f64(report.upper),
        report.sandwich_holds
    );
    write_csv(
        cli,
        &csv_meta(cli, "transport", &config_json),
        "distortion,transport,source_ratio,target_ratio,lower,upper,sandwich_holds",
        &[row],
    )?;
    summary(
        cli,
        &format!(
            "transport: sandwich-holds: {} margin={} target={} in [{}, {}]",
            report.sandwich_holds,
            render_f64(report.margin),
            render_f64(report.target_ratio),
            render_f64(report.lower),
            render_f64(report.upper)
        ),
    );
    Ok(())
}

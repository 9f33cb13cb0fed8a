use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use flowcheck::encoder::{build_lts, compile, find_deadlocks, BuildError, Limits, Lts};
use flowcheck::fltl::{
    check, parse_props, validate_fluents, with_builtin_fluents, Assertion, CheckError, CheckOptions, Props, Verdict,
};
use flowcheck::fsp::{emit_fsp_model, process_name};
use flowcheck::model::{event_alphabet, normalize, parse_yawl, validate, WorkflowSpec};
use flowcheck::templates::{load_catalog, Catalog, TemplateError};
use rayon::prelude::*;
use serde::Serialize;

const DIAGNOSTICS: u8 = 1;
const PARSE: u8 = 2;
const STATE_LIMIT: u8 = 3;
const PRODUCT_LIMIT: u8 = 4;
const USAGE: u8 = 5;

#[derive(Parser)]
#[command(name = "flowcheck", version, about = "Verify temporal properties of YAWL workflows")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Report structural problems in a workflow model.
    Validate { model: PathBuf },
    /// Build the state space of a workflow model.
    Compile(CompileArgs),
    /// Check the assertions of a property file against a workflow model.
    Check(CheckArgs),
    /// Browse and instantiate property templates.
    Templates(TemplatesArgs),
}

#[derive(Args)]
struct ExploreArgs {
    /// Maximum tokens per place.
    #[arg(long, default_value_t = 1)]
    bound: u16,
    /// Maximum number of states to explore.
    #[arg(long, default_value_t = Limits::default().max_states)]
    max_states: usize,
}

#[derive(Args)]
struct CompileArgs {
    model: PathBuf,
    #[command(flatten)]
    explore: ExploreArgs,
    /// Write the state space as an FSP process.
    #[arg(long, value_name = "FILE")]
    fsp: Option<PathBuf>,
    /// Write the state space as tab-separated edges.
    #[arg(long, value_name = "FILE")]
    dump: Option<PathBuf>,
    /// Print state and transition counts with build time.
    #[arg(long)]
    stats: bool,
    /// List deadlocked states with a shortest path to each.
    #[arg(long)]
    deadlocks: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Args)]
struct CheckArgs {
    model: PathBuf,
    /// Property file with fluent and assert declarations.
    #[arg(long, value_name = "FILE")]
    props: PathBuf,
    /// Assertion to check; repeatable. Defaults to all of them.
    #[arg(long = "prop", value_name = "NAME")]
    names: Vec<String>,
    #[command(flatten)]
    explore: ExploreArgs,
    /// Maximum number of product states per check.
    #[arg(long, default_value_t = CheckOptions::default().max_product_states)]
    max_product_states: usize,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

#[derive(Args)]
struct TemplatesArgs {
    /// Catalog merged over the built-in templates. Defaults to ./templates.xml if present.
    #[arg(long, env = "FLOWCHECK_TEMPLATES", value_name = "FILE")]
    catalog: Option<PathBuf>,
    #[command(subcommand)]
    action: TemplatesAction,
}

#[derive(Subcommand)]
enum TemplatesAction {
    /// One line per template: id and title.
    List,
    /// Describe one template.
    Show { id: String },
    /// Print an assert declaration for the template with its parameters bound.
    Instantiate {
        id: String,
        /// Parameter binding, e.g. A=flight.start. Repeatable.
        #[arg(long = "bind", value_name = "PARAM=NAME", value_parser = parse_binding)]
        bindings: Vec<(String, String)>,
        /// Assertion name. Defaults to the template id in CamelCase.
        #[arg(long)]
        name: Option<String>,
        /// Only accept events of this model (and fluents of --props).
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long, requires = "model")]
        props: Option<PathBuf>,
    },
}

fn parse_binding(s: &str) -> Result<(String, String), String> {
    let (k, v) = s.split_once('=').ok_or("expected PARAM=NAME")?;
    Ok((k.trim().to_string(), v.trim().to_string()))
}

/// Terminates a command with an exit code and a message for standard error.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Failure { code, message: message.into() }
    }
}

type Outcome = Result<u8, Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::new(PARSE, format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| Failure::new(USAGE, format!("{}: {e}", path.display())))
}

/// Parses, normalizes and validates a model. Diagnostics fail with exit 1.
fn load_model(path: &Path) -> Result<WorkflowSpec, Failure> {
    let raw = parse_yawl(&read(path)?).map_err(|e| Failure::new(PARSE, format!("{}: {e}", path.display())))?;
    let spec = normalize(&raw);
    let diags = validate(&spec);
    if !diags.is_empty() {
        let lines: Vec<String> = diags.iter().map(ToString::to_string).collect();
        return Err(Failure::new(DIAGNOSTICS, lines.join("\n")));
    }
    Ok(spec)
}

fn load_props(path: &Path) -> Result<Props, Failure> {
    parse_props(&read(path)?).map_err(|e| Failure::new(PARSE, format!("{}:{e}", path.display())))
}

fn explore(spec: &WorkflowSpec, args: &ExploreArgs) -> Result<Lts, Failure> {
    let net = compile(spec, args.bound).map_err(|e| Failure::new(USAGE, e.to_string()))?;
    build_lts(&net, Limits { max_states: args.max_states }).map_err(|e| {
        let mut message = e.to_string();
        if let BuildError::BoundExceeded { witness, .. } = &e {
            message.push_str("\nwitness:");
            for ev in witness {
                let _ = write!(message, "\n  {ev}");
            }
        }
        Failure::new(STATE_LIMIT, message)
    })
}

fn cmd_validate(model: &Path) -> Outcome {
    load_model(model).map(|_| 0)
}

fn cmd_compile(args: &CompileArgs, out: &mut String) -> Outcome {
    let spec = load_model(&args.model)?;
    let start = Instant::now();
    let lts = explore(&spec, &args.explore)?;
    let build_ms = start.elapsed().as_millis();
    if let Some(path) = &args.fsp {
        let stem = args.model.file_stem().and_then(|s| s.to_str()).unwrap_or("model");
        write(path, &emit_fsp_model(&lts, &process_name(stem)))?;
    }
    if let Some(path) = &args.dump {
        write(path, &lts.dump())?;
    }
    if args.stats {
        let _ = writeln!(out, "states={} transitions={} build_ms={build_ms}", lts.num_states(), lts.num_transitions());
    }
    if args.deadlocks {
        for d in find_deadlocks(&lts) {
            let path: Vec<&str> = d.path.iter().map(|e| e.as_str()).collect();
            let _ = writeln!(out, "deadlock\t{}\t{}", d.state, path.join(" "));
        }
    }
    Ok(0)
}

#[derive(Serialize)]
struct NamedVerdict<'a> {
    name: &'a str,
    #[serde(flatten)]
    verdict: &'a Verdict,
}

fn error_code(e: &CheckError) -> u8 {
    match e {
        CheckError::ProductLimitExceeded { .. } => PRODUCT_LIMIT,
        _ => DIAGNOSTICS,
    }
}

fn cmd_check(args: &CheckArgs, out: &mut String, err: &mut String) -> Outcome {
    let spec = load_model(&args.model)?;
    let props = load_props(&args.props)?;
    let selected: Vec<&Assertion> = if args.names.is_empty() {
        props.assertions.iter().collect()
    } else {
        let mut picked = Vec::new();
        for n in &args.names {
            picked.push(props.assertion(n).ok_or_else(|| Failure::new(USAGE, format!("no assertion named {n}")))?);
        }
        picked
    };
    let lts = explore(&spec, &args.explore)?;
    let diags = validate_fluents(&props.fluents, lts.alphabet());
    if !diags.is_empty() {
        let lines: Vec<String> = diags.iter().map(ToString::to_string).collect();
        return Err(Failure::new(DIAGNOSTICS, lines.join("\n")));
    }
    let fluents = with_builtin_fluents(&spec, &props.fluents);
    let opts = CheckOptions { max_product_states: args.max_product_states };
    let results: Vec<Result<Verdict, CheckError>> =
        selected.par_iter().map(|a| check(&lts, &fluents, &a.formula, opts)).collect();

    let mut code = 0;
    let mut verdicts = Vec::new();
    for (a, r) in selected.iter().zip(&results) {
        match r {
            Ok(v) => {
                if !v.holds() {
                    code = code.max(DIAGNOSTICS);
                }
                verdicts.push(NamedVerdict { name: &a.name, verdict: v });
            }
            Err(e) => {
                code = code.max(error_code(e));
                let _ = writeln!(err, "ERROR {}: {e}", a.name);
            }
        }
    }
    match args.format {
        Format::Json => {
            out.push_str(&serde_json::to_string_pretty(&verdicts).expect("verdicts serialize"));
            out.push('\n');
        }
        Format::Text => {
            for nv in &verdicts {
                match nv.verdict {
                    Verdict::Holds => {
                        let _ = writeln!(out, "PASS {}", nv.name);
                    }
                    Verdict::Violation { prefix, cycle } => {
                        let _ = writeln!(out, "FAIL {}", nv.name);
                        out.push_str("prefix:\n");
                        for e in prefix {
                            let _ = writeln!(out, "  {e}");
                        }
                        out.push_str("cycle:\n");
                        for e in cycle {
                            let _ = writeln!(out, "  {e}");
                        }
                    }
                }
            }
        }
    }
    Ok(code)
}

fn template_code(e: &TemplateError) -> u8 {
    match e {
        TemplateError::CatalogSyntax(_) | TemplateError::DuplicateTemplateId(_) | TemplateError::Io { .. } => PARSE,
        _ => USAGE,
    }
}

fn load_templates(path: Option<&Path>) -> Result<Catalog, Failure> {
    let default = Path::new("templates.xml");
    let path = match path {
        Some(p) => p,
        None if default.exists() => default,
        None => return Ok(Catalog::builtin()),
    };
    load_catalog(path).map_err(|e| Failure::new(template_code(&e), e.to_string()))
}

fn camel_case(id: &str) -> String {
    id.split(|c: char| !c.is_ascii_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(|w| {
            let mut cs = w.chars();
            cs.next().map(|c| c.to_ascii_uppercase()).into_iter().chain(cs).collect::<String>()
        })
        .collect()
}

fn cmd_templates(args: &TemplatesArgs, out: &mut String) -> Outcome {
    let catalog = load_templates(args.catalog.as_deref())?;
    let find = |id: &str| {
        catalog.get(id).ok_or_else(|| {
            let e = TemplateError::UnknownTemplate(id.to_string());
            Failure::new(template_code(&e), e.to_string())
        })
    };
    match &args.action {
        TemplatesAction::List => {
            for t in &catalog.templates {
                let _ = writeln!(out, "{}\t{}", t.id, t.title);
            }
        }
        TemplatesAction::Show { id } => {
            let t = find(id)?;
            let _ = writeln!(out, "id: {}\ntitle: {}\nparams: {}\nformula: {}", t.id, t.title, t.params.join(" "), t.skeleton);
            let _ = writeln!(out, "\n{}", t.description.trim());
        }
        TemplatesAction::Instantiate { id, bindings, name, model, props } => {
            let t = find(id)?;
            let bindings: BTreeMap<String, String> = bindings.iter().cloned().collect();
            let fail = |e: TemplateError| Failure::new(template_code(&e), e.to_string());
            let formula = match model {
                None => t.bind(&bindings).map_err(fail)?,
                Some(m) => {
                    let spec = load_model(m)?;
                    let props = match props {
                        Some(p) => load_props(p)?,
                        None => Props::default(),
                    };
                    let alphabet = event_alphabet(&spec);
                    let fluents = with_builtin_fluents(&spec, &props.fluents);
                    let known = |n: &str| {
                        alphabet.iter().any(|e| e.as_str() == n) || fluents.iter().any(|f| f.name == n)
                    };
                    t.instantiate(&bindings, known).map_err(fail)?
                }
            };
            let name = name.clone().unwrap_or_else(|| camel_case(&t.id));
            let _ = writeln!(out, "assert {name} = {formula}");
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { USAGE } else { 0 });
        }
    };
    let mut out = String::new();
    let mut err = String::new();
    let result = match &cli.command {
        Command::Validate { model } => cmd_validate(model),
        Command::Compile(args) => cmd_compile(args, &mut out),
        Command::Check(args) => cmd_check(args, &mut out, &mut err),
        Command::Templates(args) => cmd_templates(args, &mut out),
    };
    let code = match result {
        Ok(code) => code,
        Err(f) => {
            err.push_str(&f.message);
            err.push('\n');
            f.code
        }
    };
    let _ = std::io::stdout().write_all(out.as_bytes());
    let _ = std::io::stderr().write_all(err.as_bytes());
    ExitCode::from(code)
}

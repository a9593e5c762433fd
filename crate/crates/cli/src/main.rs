//! `hopf`: batch front-end reading germ specifications and writing JSON reports.
//!
//! Exit codes: 0 success, 2 resonant input or obstructed connection (the
//! report is still written), 3 ill-conditioned or failed numerical check,
//! 4 malformed input or a non-contraction.

mod report;
mod spec;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use report::Outcome;
use spec::{named_bundle, parse_constant, read_spec, tensor_bundle_json, InputError, SpecFile};

#[derive(Parser)]
#[command(name = "hopf", version, about = "Resonances, normal forms, equivariant connections and Hopf cohomology")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Args, Clone)]
struct Flags {
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Tolerance, overriding the spec; decimal or "p/q".
    #[arg(long, global = true, value_parser = parse_tolerance)]
    tol: Option<f64>,
    /// Truncation degree, overriding the spec.
    #[arg(long, global = true)]
    degree: Option<usize>,
    /// Seed for the randomized self-checks; without it none are run.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// No summary line on stderr.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand, Clone)]
enum Command {
    /// Eigenvalues and multiplicative resonance relations of the linear part.
    Resonance { spec: PathBuf },
    /// Poincaré linearization by the graded homological equation.
    Linearize { spec: PathBuf },
    /// Poincaré–Dulac normal form.
    NormalForm { spec: PathBuf },
    /// Equivariant flat connection; on the tangent bundle also the linearizing coordinates.
    Connection { spec: PathBuf },
    /// Mall cohomology dimensions of a tensor bundle on a diagonal Hopf manifold.
    Cohomology {
        #[arg(required_unless_present = "alpha")]
        spec: Option<PathBuf>,
        /// Diagonal eigenvalues, e.g. `0.5,1/3,0.2`.
        #[arg(long, conflicts_with = "spec")]
        alpha: Option<String>,
        /// trivial, canonical, tangent, cotangent, forms:l, endomorphisms, tensor:p,q,k or line:λ.
        #[arg(long)]
        bundle: Option<String>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Resonance { .. } => "resonance",
            Command::Linearize { .. } => "linearize",
            Command::NormalForm { .. } => "normal-form",
            Command::Connection { .. } => "connection",
            Command::Cohomology { .. } => "cohomology",
        }
    }
}

fn parse_tolerance(s: &str) -> Result<f64, String> {
    let c = parse_constant(s).map_err(|e| e.to_string())?;
    if c.im != 0.0 || !(c.re > 0.0 && c.re.is_finite()) {
        return Err("tolerance must be a positive real".into());
    }
    Ok(c.re)
}

fn load(path: &Path) -> Result<SpecFile, InputError> {
    let text = std::fs::read_to_string(path).map_err(|e| InputError(format!("{}: {e}", path.display())))?;
    read_spec(&text)
}

/// The effective spec for `cohomology --alpha`, as a diagonal linear germ.
fn alpha_spec(alpha: &str, bundle: Option<&str>, tol: Option<f64>) -> Result<SpecFile, InputError> {
    let parts: Vec<&str> = alpha.split(',').map(str::trim).collect();
    for p in &parts {
        parse_constant(p).map_err(|e| InputError::field("alpha", format!("`{p}`: {e}")))?;
    }
    let bundle = bundle.map(|b| named_bundle(b).map_err(|e| InputError::field("bundle", e))).transpose()?;
    Ok(SpecFile {
        dimension: parts.len(),
        truncation_degree: 2,
        map: parts.iter().enumerate().map(|(i, p)| format!("({p})*z{}", i + 1)).collect(),
        tolerance: tol.map(|t| json!(t)),
        bundle: bundle.as_ref().map(tensor_bundle_json),
    })
}

fn input_hash(spec: &Value, seed: Option<u64>) -> String {
    let mut h = Sha256::new();
    h.update(serde_json::to_vec(spec).expect("spec serializes"));
    h.update(format!("seed={seed:?}").as_bytes());
    hex::encode(h.finalize())
}

fn run(cli: &Cli) -> Result<(Value, Outcome), InputError> {
    let flags = &cli.flags;
    let mut spec_file = match &cli.command {
        Command::Resonance { spec }
        | Command::Linearize { spec }
        | Command::NormalForm { spec }
        | Command::Connection { spec } => load(spec)?,
        Command::Cohomology { spec: Some(spec), .. } => load(spec)?,
        Command::Cohomology { spec: None, alpha, bundle } => {
            alpha_spec(alpha.as_deref().unwrap_or_default(), bundle.as_deref(), flags.tol)?
        }
    };
    let parsed = spec_file.parse(flags.tol, flags.degree)?;
    let bundle_flag = match &cli.command {
        Command::Cohomology { bundle: Some(b), .. } => {
            Some(named_bundle(b).map_err(|e| InputError::field("bundle", e))?)
        }
        _ => None,
    };
    if let Some(b) = &bundle_flag {
        spec_file.bundle = Some(tensor_bundle_json(b));
    }
    let echoed = serde_json::to_value(&spec_file).expect("spec serializes");
    let ctx =
        report::Context { germ: parsed.germ, tolerance: parsed.tolerance, bundle: parsed.bundle, seed: flags.seed };
    let (payload, outcome) = match &cli.command {
        Command::Resonance { .. } => report::resonance_report(&ctx)?,
        Command::Linearize { .. } => report::linearize_report(&ctx)?,
        Command::NormalForm { .. } => report::normal_form_report(&ctx)?,
        Command::Connection { .. } => report::connection_report(&ctx)?,
        Command::Cohomology { .. } => report::cohomology_report(&ctx, bundle_flag)?,
    };
    let mut doc = json!({
        "command": { "name": cli.command.name(), "spec": echoed, "seed": flags.seed },
        "input_sha256": input_hash(&echoed, flags.seed),
        "conventions": report::conventions(),
    });
    let map = doc.as_object_mut().expect("object");
    for (k, v) in payload.as_object().expect("payload object") {
        map.insert(k.clone(), v.clone());
    }
    map.insert("status".into(), json!(outcome.status));
    map.insert("exit_code".into(), json!(outcome.code));
    Ok((doc, outcome))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let started = Instant::now();
    let (mut doc, outcome) = match run(&cli) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("hopf {}: {e}", cli.command.name());
            return ExitCode::from(4);
        }
    };
    doc["wall_time_seconds"] = json!(started.elapsed().as_secs_f64());
    let text = serde_json::to_string_pretty(&doc).expect("report serializes") + "\n";
    match &cli.flags.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, text) {
                eprintln!("hopf: cannot write {}: {e}", path.display());
                return ExitCode::from(4);
            }
        }
        None => print!("{text}"),
    }
    if !cli.flags.quiet {
        eprintln!("hopf {}: {} (exit {})", cli.command.name(), outcome.status, outcome.code);
        for line in &outcome.notes {
            eprintln!("  {line}");
        }
    }
    ExitCode::from(outcome.code)
}

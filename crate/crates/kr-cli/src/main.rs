//! `kr`: exact transport distances with certificates, certified
//! invariant-measure iteration, Lipschitz envelope and extension queries,
//! ball-cover searches, and the built-in diagnostic scenarios.
//!
//! Exit codes: 0 on success, 1 on malformed input or violated
//! preconditions (diagnostics on stderr), 2 when an iteration ends without
//! reaching its tolerance (the partial report is still emitted).

mod inputs;
mod output;
mod scenario;

use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use serde_json::json;

use kr_core::hutchinson::DEFAULT_STEP_LIMIT;
use kr_core::{
    build_witness, cauchy_profile, envelope, iterate_invariant_with, kr_distance,
    mcshane_extend, tightness_cover, verify_witness, CertificateDescriptor, ContractionSystem,
    CoverOutcome, DiscreteMeasure, FunctionDescriptor, IterationDescriptor, MetricSpace,
};

use output::{cell, emit, render_csv, render_json, Format, Row};

#[derive(Parser)]
#[command(
    name = "kr",
    version,
    about = "Exact Kantorovich-Rubinshtein distances, certified invariant measures, and diagnostic scenarios"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Write the artifact here instead of stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Artifact format; cover and witness artifacts are JSON-only
    #[arg(long, global = true, value_enum, default_value = "json")]
    format: Format,

    /// Reserved for randomized sweeps; accepted for interface stability,
    /// every current command is deterministic and ignores it
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Exact transport distance between two measure files, with primal and
    /// dual certificates
    Dist {
        /// First measure (JSON descriptor)
        #[arg(long)]
        mu: PathBuf,
        /// Second measure (JSON descriptor)
        #[arg(long)]
        nu: PathBuf,
    },
    /// Iterate a contraction system to its invariant measure with a
    /// certified a posteriori bound
    Invariant {
        /// Contraction system (JSON descriptor)
        #[arg(long)]
        system: PathBuf,
        /// Starting measure; defaults to a Dirac at the origin
        #[arg(long)]
        nu0: Option<PathBuf>,
        /// Stop once the certified bound falls under this tolerance
        #[arg(long, default_value_t = 1e-3)]
        tol: f64,
        /// Coarsen every iterate to at most this many atoms
        #[arg(long, default_value_t = 4096)]
        cap: usize,
    },
    /// Run a named built-in scenario
    Scenario {
        /// One of: assertion-1.1, lemma-3.7, escaping-dirac (distance
        /// profiles); bernoulli, cantor (certified iterations);
        /// example-5.1 (truncated family, fixed-step run)
        name: String,
        /// Profile depth, or step count for example-5.1
        #[arg(long)]
        horizon: Option<usize>,
        /// Tolerance for the iteration scenarios
        #[arg(long, default_value_t = 1e-3)]
        tol: f64,
        /// Support cap for the iteration scenarios
        #[arg(long)]
        cap: Option<usize>,
        /// Ambient dimension for example-5.1
        #[arg(long, default_value_t = 6)]
        dim: usize,
        /// Kept maps for example-5.1
        #[arg(long, default_value_t = 4)]
        trunc: usize,
    },
    /// Least n-Lipschitz majorant of a function file
    Envelope {
        /// Function (JSON descriptor with total values)
        #[arg(long)]
        function: PathBuf,
        /// Slope bound n of the majorant
        #[arg(long)]
        slope: f64,
    },
    /// Largest 1-Lipschitz extension of a partial function file
    Extend {
        /// Function (JSON descriptor; values may cover part of the space)
        #[arg(long)]
        function: PathBuf,
    },
    /// Search for a finite ball cover catching all but delta of every
    /// measure's mass
    Cover {
        /// Measure files; repeat the flag for a family
        #[arg(long = "measure")]
        measures: Vec<PathBuf>,
        /// Take the first --horizon measures of a sequence scenario instead
        #[arg(long, conflicts_with = "measures")]
        scenario: Option<String>,
        /// Sequence prefix length when --scenario is given
        #[arg(long, default_value_t = 8)]
        horizon: usize,
        /// Ball radius
        #[arg(long)]
        eps: f64,
        /// Mass allowed to escape every measure
        #[arg(long)]
        delta: f64,
        /// Largest number of balls to allow
        #[arg(long)]
        budget: Option<usize>,
    },
    /// Construct and verify the oscillating witness for a sequence that
    /// escapes every finite cover
    Witness {
        /// Sequence scenario: assertion-1.1, lemma-3.7, or escaping-dirac
        #[arg(long)]
        scenario: String,
        /// Escape radius
        #[arg(long)]
        eps: f64,
        /// Escape mass
        #[arg(long)]
        delta: f64,
        /// Selected subsequence length
        #[arg(long, default_value_t = 4)]
        count: usize,
        /// Give up probing for escapes past this index
        #[arg(long, default_value_t = 32)]
        horizon: usize,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

/// The step-limit override: `KR_STEP_LIMIT` bounds every iteration run.
fn step_limit() -> Result<usize> {
    match std::env::var("KR_STEP_LIMIT") {
        Ok(raw) => {
            let limit: usize =
                raw.parse().with_context(|| format!("KR_STEP_LIMIT {raw:?} is not a count"))?;
            if limit == 0 {
                bail!("KR_STEP_LIMIT must be at least 1");
            }
            Ok(limit)
        }
        Err(std::env::VarError::NotPresent) => Ok(DEFAULT_STEP_LIMIT),
        Err(e) => Err(e).context("KR_STEP_LIMIT is not valid unicode"),
    }
}

fn origin_dirac(dim: usize) -> Result<DiscreteMeasure> {
    let space = Arc::new(MetricSpace::euclidean(vec![vec![0.0; dim]])?);
    Ok(DiscreteMeasure::dirac(space, 0)?)
}

fn run(cli: Cli) -> Result<u8> {
    let out = cli.out.as_ref();
    let format = cli.format;
    match cli.command {
        Command::Dist { mu, nu } => {
            let mu = inputs::load_measure(&mu)?;
            let nu = inputs::load_measure(&nu)?;
            let cert = kr_distance(&mu, &nu)?;
            let descriptor = CertificateDescriptor::from_certificate(&cert);
            let body = match format {
                Format::Json => render_json(serde_json::to_value(&descriptor)?),
                Format::Csv => render_csv("value", vec![Row(vec![cell(cert.value)])]),
            };
            emit(out, &body)?;
            Ok(0)
        }
        Command::Invariant { system, nu0, tol, cap } => {
            let sys = inputs::load_system(&system)?;
            let start = match nu0 {
                Some(path) => inputs::load_measure(&path)?,
                None => origin_dirac(sys.dim())?,
            };
            let report = iterate_invariant_with(&sys, &start, tol, cap, step_limit()?)?;
            let descriptor = IterationDescriptor::from_report(&report);
            emit_iteration(out, format, serde_json::to_value(&descriptor)?, &descriptor)?;
            Ok(if report.converged { 0 } else { 2 })
        }
        Command::Scenario { name, horizon, tol, cap, dim, trunc } => match name.as_str() {
            "bernoulli" | "cantor" => {
                let sys = scenario::system(&name)?;
                run_iteration_scenario(out, format, &name, &sys, tol, cap.unwrap_or(4096))
            }
            "example-5.1" => {
                let (sys, tail) = scenario::example_truncation(dim, trunc)?;
                let start = origin_dirac(dim)?;
                let steps = horizon.unwrap_or(10).min(step_limit()?);
                let report =
                    iterate_invariant_with(&sys, &start, f64::MIN_POSITIVE, cap.unwrap_or(300), steps)?;
                let descriptor = IterationDescriptor::from_report(&report);
                let value = json!({
                    "scenario": name,
                    "dim": dim,
                    "trunc": trunc,
                    "tail": {
                        "mass": tail.mass,
                        "moment": tail.moment,
                        "kept_probability": tail.kept_probability,
                    },
                    "report": serde_json::to_value(&descriptor)?,
                });
                emit_iteration(out, format, value, &descriptor)?;
                Ok(0)
            }
            _ => {
                let mut seq = scenario::sequence(&name)?;
                let depth = horizon.unwrap_or(12);
                let profile = cauchy_profile(&mut seq, depth)?;
                let mut rows: Vec<(usize, usize, f64)> = Vec::new();
                if name == "lemma-3.7" {
                    let space = Arc::clone(seq.space());
                    let base = DiscreteMeasure::dirac(space, 0)?;
                    for n in 1..=depth {
                        let h = kr_distance(&base, &seq.measure(n)?)?.value;
                        rows.push((0, n, h));
                    }
                }
                rows.extend(profile.rows.iter().copied());
                let body = match format {
                    Format::Json => render_json(json!({
                        "scenario": name,
                        "rows": rows,
                        "sup_tail": profile.sup_tail,
                    })),
                    Format::Csv => render_csv(
                        "n,m,H",
                        rows.iter()
                            .map(|&(n, m, h)| {
                                Row(vec![n.to_string(), m.to_string(), cell(h)])
                            })
                            .collect(),
                    ),
                };
                emit(out, &body)?;
                Ok(0)
            }
        },
        Command::Envelope { function, slope } => {
            let (descriptor, space) = inputs::load_function(&function)?;
            let f = descriptor.build_on(&space)?;
            let majorant = envelope(&f, slope, &space)?;
            emit_function(out, format, &majorant, &space)?;
            Ok(0)
        }
        Command::Extend { function } => {
            let (descriptor, space) = inputs::load_function(&function)?;
            let partial = descriptor.partial_values()?;
            let extension = mcshane_extend(&partial, &space)?;
            emit_function(out, format, &extension, &space)?;
            Ok(0)
        }
        Command::Cover { measures, scenario: seq_name, horizon, eps, delta, budget } => {
            let family: Vec<DiscreteMeasure> = match seq_name {
                Some(name) => {
                    let mut seq = scenario::sequence(&name)?;
                    (1..=horizon).map(|n| Ok(seq.measure(n)?)).collect::<Result<_>>()?
                }
                None => {
                    if measures.is_empty() {
                        bail!("cover needs --measure files or a --scenario");
                    }
                    measures.iter().map(|p| inputs::load_measure(p)).collect::<Result<_>>()?
                }
            };
            let outcome = tightness_cover(&family, eps, delta, budget)?;
            let value = match &outcome {
                CoverOutcome::Covered { centers } => json!({
                    "eps": eps,
                    "delta": delta,
                    "covered": true,
                    "centers": centers,
                }),
                CoverOutcome::Uncoverable { measure, uncovered_mass, budget } => json!({
                    "eps": eps,
                    "delta": delta,
                    "covered": false,
                    "witness_measure": measure,
                    "uncovered_mass": uncovered_mass,
                    "budget": budget,
                }),
            };
            require_json(format, "cover")?;
            emit(out, &render_json(value))?;
            Ok(0)
        }
        Command::Witness { scenario: seq_name, eps, delta, count, horizon } => {
            let mut seq = scenario::sequence(&seq_name)?;
            let artifacts = build_witness(&mut seq, eps, delta, count, horizon)?;
            let report = verify_witness(&artifacts, &mut seq)?;
            let space = Arc::clone(seq.space());
            let value = json!({
                "scenario": seq_name,
                "eps": eps,
                "delta": delta,
                "indices": artifacts.indices,
                "covering_sets": artifacts.a_sets,
                "escape_sets": artifacts.d_sets,
                "bumps": artifacts
                    .bumps
                    .iter()
                    .map(|b| FunctionDescriptor::from_function(b, &space))
                    .collect::<Vec<_>>(),
                "witness": FunctionDescriptor::from_function(&artifacts.witness, &space),
                "report": {
                    "indices_increasing": report.indices_increasing,
                    "escapes_are_atoms": report.escapes_are_atoms,
                    "min_escape_distance": report.min_escape_distance,
                    "nested_covers": report.nested_covers,
                    "min_escape_mass": report.min_escape_mass,
                    "max_leak": report.max_leak,
                    "lip_constant": report.lip_constant,
                    "min_oscillation": report.min_oscillation,
                    "min_value": report.min_value,
                    "max_value": report.max_value,
                    "escape_separation": report.escape_separation,
                    "passes": report.passes(eps, delta),
                },
            });
            require_json(format, "witness")?;
            emit(out, &render_json(value))?;
            Ok(0)
        }
    }
}

fn require_json(format: Format, what: &str) -> Result<()> {
    if format == Format::Csv {
        bail!("{what} artifacts carry nested structure; use --format json");
    }
    Ok(())
}

fn run_iteration_scenario(
    out: Option<&PathBuf>,
    format: Format,
    name: &str,
    sys: &ContractionSystem,
    tol: f64,
    cap: usize,
) -> Result<u8> {
    let start = origin_dirac(sys.dim())?;
    let report = iterate_invariant_with(sys, &start, tol, cap, step_limit()?)?;
    let descriptor = IterationDescriptor::from_report(&report);
    let value = json!({
        "scenario": name,
        "report": serde_json::to_value(&descriptor)?,
    });
    emit_iteration(out, format, value, &descriptor)?;
    Ok(if report.converged { 0 } else { 2 })
}

fn emit_iteration(
    out: Option<&PathBuf>,
    format: Format,
    value: serde_json::Value,
    descriptor: &IterationDescriptor,
) -> Result<()> {
    let body = match format {
        Format::Json => render_json(value),
        Format::Csv => render_csv(
            "n,H",
            descriptor
                .step_distances
                .iter()
                .enumerate()
                .map(|(i, &d)| Row(vec![(i + 1).to_string(), cell(d)]))
                .collect(),
        ),
    };
    emit(out, &body)
}

fn emit_function(
    out: Option<&PathBuf>,
    format: Format,
    f: &kr_core::LipFunction,
    space: &Arc<MetricSpace>,
) -> Result<()> {
    let body = match format {
        Format::Json => {
            render_json(serde_json::to_value(FunctionDescriptor::from_function(f, space))?)
        }
        Format::Csv => render_csv(
            "i,f",
            f.values().iter().map(|(&i, &v)| Row(vec![i.to_string(), cell(v)])).collect(),
        ),
    };
    emit(out, &body)
}

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value as Json};

use barylab::construct::{self, FilterFlags, OpenProblem, ProbeOutcome};
use barylab::factorization::FactorError;
use barylab::io;
use barylab::{
    check, check_equivalence_suite, factorize, from_sections, m_z, named_builtin, BuiltinParams,
    PropertyId, PropertyReport, SearchConfig, Status, Str, Value, VarFn,
};

/// Exit codes: 0 all checks passed, 1 some property failed, 2 usage or
/// configuration error, 3 evaluation budget exceeded.
const EXIT_OK: u8 = 0;
const EXIT_FAILED: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_BUDGET: u8 = 3;

#[derive(Parser)]
#[command(name = "barylab", version, about = "Variadic aggregation function laboratory")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker cap for embarrassingly parallel phases (checks are
    /// deterministic regardless).
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Args, Clone)]
struct FnArgs {
    /// Builtin function name (arith_mean, geom_mean, harm_mean, sum, product,
    /// length_fn, first_proj, last_proj, max_op, f_a, abs_mean, clamped_sum,
    /// barycenter, m_z, quasi_arithmetic_ln).
    #[arg(long = "fn")]
    name: Option<String>,
    /// Path to a tabulated-function JSON file.
    #[arg(long)]
    table: Option<PathBuf>,
    /// Inline JSON function spec, e.g. '{"name":"m_z","z":2.0}'.
    #[arg(long)]
    fn_json: Option<String>,
    /// Parameter z for m_z.
    #[arg(long)]
    z: Option<f64>,
    /// Distinguished atom for f_a.
    #[arg(long)]
    a: Option<String>,
    /// Comma-separated atoms for finite-domain builtins.
    #[arg(long)]
    atoms: Option<String>,
    /// Dimension for barycenter.
    #[arg(long)]
    dim: Option<usize>,
}

impl FnArgs {
    fn resolve(&self) -> Result<VarFn> {
        if let Some(path) = &self.table {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            return Ok(io::table_from_str(&text)?);
        }
        if let Some(spec) = &self.fn_json {
            let doc: Json = serde_json::from_str(spec).context("parsing --fn-json")?;
            return Ok(io::fn_from_spec_json(&doc)?);
        }
        let name = self
            .name
            .as_deref()
            .ok_or_else(|| anyhow!("one of --fn, --table, --fn-json is required"))?;
        let params = BuiltinParams {
            z: self.z,
            a: self.a.as_deref().map(parse_atom),
            atoms: self
                .atoms
                .as_deref()
                .map(|s| s.split(',').map(parse_atom).collect()),
            dim: self.dim,
        };
        Ok(named_builtin(name, &params)?)
    }
}

#[derive(Args, Clone)]
struct SearchArgs {
    /// Maximum string length of the quantifier space.
    #[arg(long, default_value_t = 4)]
    max_len: usize,
    /// Samples per instance shape in sampled mode.
    #[arg(long, default_value_t = 64)]
    samples: usize,
    /// Seed for sampled draws (recorded in every report).
    #[arg(long, default_value_t = 0x5EED)]
    seed: u64,
    /// Evaluation budget (overridden by BARYLAB_BUDGET).
    #[arg(long, default_value_t = 10_000_000)]
    budget: u64,
}

impl SearchArgs {
    fn config(&self) -> SearchConfig {
        let budget = std::env::var("BARYLAB_BUDGET")
            .ok()
            .and_then(|v| v.parse().ok())
            .unwrap_or(self.budget);
        SearchConfig::default()
            .with_max_len(self.max_len)
            .with_samples(self.samples)
            .with_seed(self.seed)
            .with_budget(budget)
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Check properties of a function.
    Check {
        #[command(flatten)]
        function: FnArgs,
        /// Comma-separated property ids, e.g. b_associative,b_preassociative.
        #[arg(long)]
        props: String,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Run the equivalence-theorem cross-check suite.
    Equiv {
        #[command(flatten)]
        function: FnArgs,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Factorize into an inner B-associative operation and injective outers.
    Factorize {
        #[command(flatten)]
        function: FnArgs,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Build an operation from section coefficients and verify it.
    Construct {
        /// Build the linear family member with this parameter from its
        /// section coefficients.
        #[arg(long)]
        mz: f64,
        #[arg(long, default_value_t = 5)]
        max_arity: usize,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Enumerate all B-associative ε-standard tables on a tiny domain.
    Enumerate {
        #[arg(long, default_value_t = 2)]
        domain_size: usize,
        #[arg(long, default_value_t = 2)]
        max_arity: usize,
        /// Keep only tables with these properties (comma-separated:
        /// idempotent, associative, symmetric).
        #[arg(long)]
        filter: Option<String>,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Search for counterexamples to the open problems at a finite bound.
    Probe {
        /// Problem id: "a" (idempotent factor) or "b" (idempotence descent).
        #[arg(long)]
        problem: String,
        #[arg(long, default_value_t = 2)]
        domain_size: usize,
        #[arg(long, default_value_t = 2)]
        max_arity: usize,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Evaluate a function on one input string.
    Eval {
        #[command(flatten)]
        function: FnArgs,
        /// Comma-separated atoms; points use ';' between atoms and ',' inside.
        #[arg(long)]
        input: String,
    },
}

fn parse_atom(text: &str) -> Value {
    match text.trim().parse::<f64>() {
        Ok(x) => Value::num(x),
        Err(_) => Value::sym(text.trim()),
    }
}

fn parse_input(text: &str) -> Str {
    if text.trim().is_empty() {
        return Str::empty();
    }
    if text.contains(';') {
        // vector input: points separated by ';', coordinates by ','
        let points: Vec<Value> = text
            .split(';')
            .map(|p| {
                Value::point(
                    p.split(',')
                        .map(|c| c.trim().parse::<f64>().unwrap_or(f64::NAN))
                        .collect(),
                )
            })
            .collect();
        return Str::from(points);
    }
    Str::from(text.split(',').map(parse_atom).collect::<Vec<_>>())
}

fn emit(out: &Option<PathBuf>, doc: &Json) -> Result<()> {
    let text = serde_json::to_string_pretty(doc).expect("serializable");
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display()))?,
        None => println!("{text}"),
    }
    Ok(())
}

fn summarize(report: &PropertyReport) {
    eprintln!("{report}");
}

fn status_exit(reports: &[PropertyReport]) -> u8 {
    if reports.iter().any(|r| r.budget_exceeded()) {
        EXIT_BUDGET
    } else if reports.iter().any(|r| r.status == Status::Fail) {
        EXIT_FAILED
    } else {
        EXIT_OK
    }
}

/// Runs one check per property across at most `jobs` workers. Each check is
/// deterministic on its own, and reports are assembled in input order, so
/// the output is independent of scheduling.
fn run_checks(f: &VarFn, ids: &[PropertyId], cfg: &SearchConfig, jobs: usize) -> Vec<PropertyReport> {
    if jobs <= 1 || ids.len() <= 1 {
        return ids.iter().map(|p| check(f, *p, cfg)).collect();
    }
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Mutex;
    let slots: Vec<Mutex<Option<PropertyReport>>> =
        ids.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..jobs.min(ids.len()) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= ids.len() {
                    break;
                }
                let report = check(f, ids[i], cfg);
                *slots[i].lock().expect("no poisoning") = Some(report);
            });
        }
    });
    slots
        .into_iter()
        .map(|m| m.into_inner().expect("no poisoning").expect("worker filled the slot"))
        .collect()
}

fn run(cli: Cli) -> Result<u8> {
    match cli.cmd {
        Cmd::Check { function, props, search } => {
            let f = function.resolve()?;
            let cfg = search.config();
            let ids: Vec<PropertyId> = props
                .split(',')
                .map(|p| p.trim().parse::<PropertyId>())
                .collect::<Result<_, _>>()
                .map_err(|e| anyhow!("{e}"))?;
            let reports = run_checks(&f, &ids, &cfg, cli.jobs.unwrap_or(1));
            for r in &reports {
                summarize(r);
            }
            let doc = json!({
                "command": "check",
                "function": f.name(),
                "seed": cfg.seed,
                "reports": reports.iter().map(|r| r.to_json()).collect::<Vec<_>>(),
            });
            emit(&cli.out, &doc)?;
            Ok(status_exit(&reports))
        }
        Cmd::Equiv { function, search } => {
            let f = function.resolve()?;
            let cfg = search.config();
            let suite = check_equivalence_suite(&f, &cfg);
            for r in &suite.reports {
                summarize(r);
            }
            let findings: Vec<Json> = suite
                .findings
                .iter()
                .map(|fd| {
                    json!({
                        "relation": fd.relation,
                        "ids": fd.ids.iter().map(|i| i.to_string()).collect::<Vec<_>>(),
                        "statuses": fd.statuses.iter().map(|s| s.as_str()).collect::<Vec<_>>(),
                        "agreement": fd.agreement,
                        "decided": fd.decided,
                        "critical": fd.critical,
                    })
                })
                .collect();
            let doc = json!({
                "command": "equiv",
                "function": f.name(),
                "seed": cfg.seed,
                "reports": suite.reports.iter().map(|r| r.to_json()).collect::<Vec<_>>(),
                "findings": findings,
            });
            emit(&cli.out, &doc)?;
            if suite.findings.iter().any(|fd| fd.critical) {
                bail!("CRITICAL: equivalence-theorem disagreement (implementation bug)");
            }
            Ok(status_exit(&suite.reports))
        }
        Cmd::Factorize { function, search } => {
            let f = function.resolve()?;
            let cfg = search.config();
            match factorize(&f, &cfg) {
                Ok(result) => {
                    let all_ok = result.checks.all_ok();
                    eprintln!(
                        "factorized {} through {} ({} outer maps): checks {}",
                        f.name(),
                        result.h.name(),
                        result.outer.len(),
                        if all_ok { "pass" } else { "FAIL" }
                    );
                    let doc = json!({
                        "command": "factorize",
                        "function": f.name(),
                        "seed": cfg.seed,
                        "result": io::factorization_to_json(&result)?,
                    });
                    emit(&cli.out, &doc)?;
                    Ok(if all_ok { EXIT_OK } else { EXIT_FAILED })
                }
                Err(e @ (FactorError::NotBPreassociative { .. }
                | FactorError::NotQuasiRangeIdempotent { .. }
                | FactorError::DiagonalNotInjective { .. })) => {
                    eprintln!("factorization rejected: {e}");
                    let doc = json!({
                        "command": "factorize",
                        "function": f.name(),
                        "seed": cfg.seed,
                        "rejected": e.to_string(),
                    });
                    emit(&cli.out, &doc)?;
                    Ok(EXIT_FAILED)
                }
                Err(e) => Err(e.into()),
            }
        }
        Cmd::Construct { mz, max_arity, search } => {
            let cfg = search.config();
            let spec = construct::mz_sections(mz, max_arity);
            let built = from_sections(&spec, max_arity, &cfg)
                .map_err(|e| anyhow!("construction failed: {e}"))?;
            // compare against the direct definition on the sample grid
            let direct = m_z(mz);
            let report = barylab::check_determination(
                &built,
                &direct,
                &[barylab::Side::R],
                &cfg,
            );
            summarize(&report);
            let doc = json!({
                "command": "construct",
                "z": mz,
                "max_arity": max_arity,
                "seed": cfg.seed,
                "reports": [report.to_json()],
            });
            emit(&cli.out, &doc)?;
            Ok(status_exit(&[report]))
        }
        Cmd::Enumerate { domain_size, max_arity, filter, search } => {
            let cfg = search.config();
            let domain = barylab::FiniteDomain::indexed(domain_size);
            let mut flags = FilterFlags::default();
            if let Some(filter) = filter {
                for part in filter.split(',') {
                    match part.trim() {
                        "idempotent" => flags.idempotent = true,
                        "associative" => flags.associative = true,
                        "symmetric" => flags.symmetric = true,
                        other => bail!("unknown filter: {other}"),
                    }
                }
            }
            match construct::enumerate_b_associative(&domain, max_arity, flags, &cfg) {
                Ok(enumeration) => {
                    eprintln!(
                        "{} B-associative tables of {} total",
                        enumeration.census.b_associative, enumeration.census.total
                    );
                    let examples: Vec<Json> = enumeration
                        .functions
                        .iter()
                        .take(8)
                        .map(|f| io::table_to_json(f).expect("tabulated"))
                        .collect();
                    let doc = json!({
                        "command": "enumerate",
                        "census": serde_json::to_value(&enumeration.census)?,
                        "yielded": enumeration.functions.len(),
                        "examples": examples,
                    });
                    emit(&cli.out, &doc)?;
                    Ok(EXIT_OK)
                }
                Err(construct::ConstructionError::BudgetExceeded { examined }) => {
                    eprintln!("budget exceeded after {examined} candidates");
                    Ok(EXIT_BUDGET)
                }
                Err(e) => Err(e.into()),
            }
        }
        Cmd::Probe { problem, domain_size, max_arity, search } => {
            let cfg = search.config();
            let domain = barylab::FiniteDomain::indexed(domain_size);
            let problem = match problem.as_str() {
                "a" => OpenProblem::IdempotentFactor,
                "b" => OpenProblem::IdempotenceDescent,
                other => bail!("unknown problem id: {other} (use \"a\" or \"b\")"),
            };
            match construct::probe_open_problems(problem, &domain, max_arity, &cfg) {
                Ok(report) => {
                    let outcome = match &report.outcome {
                        ProbeOutcome::NoCounterexampleAtBound => {
                            json!({"kind": "no_counterexample_at_bound"})
                        }
                        ProbeOutcome::Counterexample { description } => {
                            json!({"kind": "counterexample", "description": description})
                        }
                    };
                    eprintln!("probe: {}", report.note);
                    let doc = json!({
                        "command": "probe",
                        "problem": format!("{:?}", report.problem),
                        "domain_size": report.domain_size,
                        "max_arity": report.max_arity,
                        "searched": report.searched,
                        "outcome": outcome,
                        "note": report.note,
                    });
                    emit(&cli.out, &doc)?;
                    Ok(EXIT_OK)
                }
                Err(construct::ConstructionError::BudgetExceeded { examined }) => {
                    eprintln!("budget exceeded after {examined} candidates");
                    Ok(EXIT_BUDGET)
                }
                Err(e) => Err(e.into()),
            }
        }
        Cmd::Eval { function, input } => {
            let f = function.resolve()?;
            let s = parse_input(&input);
            let v = f.eval(&s).map_err(|e| anyhow!("{e}"))?;
            println!("{v}");
            Ok(EXIT_OK)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}

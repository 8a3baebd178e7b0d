use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use blindiqp::gf2lin::BinVector;
use blindiqp::graphs::ExtendedIqpGraph;
use blindiqp::hypothesis::{self, Backend, Decision, TestConfig};
use blindiqp::protocol::{
    adversary_by_name, exact_output_distribution, run_once, Checkpoint, Instance, Runner, ServerStrategy,
};
use blindiqp::security::{self, CheckResult, EquivalenceMode, SecurityReport};
use blindiqp::xprog::{self, OutcomeDistribution, XProgram};

/// Experiments on blind delegation of IQP computations.
#[derive(Parser)]
#[command(name = "blindiqp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact output distribution of an X-program as CSV.
    Distribution {
        program: PathBuf,
        #[command(flatten)]
        out: Output,
    },
    /// Seeded samples from an X-program as CSV.
    Sample {
        program: PathBuf,
        #[arg(long, default_value_t = 1000)]
        count: usize,
        #[command(flatten)]
        seed: Seed,
        #[command(flatten)]
        out: Output,
    },
    /// Bias along a direction, by the codeword formula and by brute force.
    Bias {
        program: PathBuf,
        /// Bit string, first character is the first primary.
        #[arg(long)]
        direction: String,
        #[command(flatten)]
        out: Output,
    },
    /// Run a protocol variant on a program hidden in an extended graph.
    Protocol {
        program: PathBuf,
        graph: PathBuf,
        #[arg(long, default_value = "blind")]
        runner: String,
        #[arg(long, default_value = "honest")]
        adversary: String,
        /// Enumerate every branch instead of sampling.
        #[arg(long, conflicts_with = "samples")]
        exact: bool,
        #[arg(long)]
        samples: Option<usize>,
        #[command(flatten)]
        seed: Seed,
        #[command(flatten)]
        out: Output,
    },
    /// Exhaustive blindness or simulator-equivalence checks.
    Security {
        program: PathBuf,
        graph: PathBuf,
        #[arg(long, value_enum)]
        check: SecurityCheck,
        #[arg(long, value_enum, default_value = "after-corrections")]
        phase: Phase,
        #[arg(long, default_value = "honest")]
        adversary: String,
        /// Compare only client output distributions.
        #[arg(long)]
        output_only: bool,
        #[command(flatten)]
        out: Output,
    },
    /// The hidden-codeword hypothesis test.
    Hypothesis {
        #[arg(long = "na", default_value_t = 7)]
        n_a: usize,
        #[arg(long, default_value_t = hypothesis::DEFAULT_SAMPLES)]
        samples: usize,
        #[arg(long, default_value_t = hypothesis::DEFAULT_THRESHOLD)]
        threshold: f64,
        #[arg(long, default_value = "honest")]
        adversary: String,
        /// `blind` or `direct`; defaults to blind where it fits.
        #[arg(long)]
        backend: Option<String>,
        #[arg(long)]
        reveal_secrets: bool,
        #[command(flatten)]
        seed: Seed,
        #[command(flatten)]
        out: Output,
    },
    /// The quadratic-residue generator matrix.
    QrMatrix {
        #[arg(long = "na")]
        n_a: usize,
        #[command(flatten)]
        out: Output,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SecurityCheck {
    Blindness,
    Simulator,
}

#[derive(Clone, Copy, ValueEnum)]
enum Phase {
    AfterState,
    #[value(alias = "after-api")]
    AfterCorrections,
}

#[derive(Args)]
struct Seed {
    /// Drawn from the clock and reported when omitted.
    #[arg(long)]
    seed: Option<u64>,
}

impl Seed {
    fn resolve(&self) -> u64 {
        self.seed.unwrap_or_else(|| {
            let now = std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_nanos() as u64)
                .unwrap_or(0);
            eprintln!("{}", json!({ "seed": now }));
            now
        })
    }
}

#[derive(Args)]
struct Output {
    /// Write here instead of stdout.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

impl Output {
    fn write(&self, text: &str) -> Result<()> {
        match &self.out {
            Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
            None => {
                let mut o = std::io::stdout().lock();
                o.write_all(text.as_bytes())?;
                Ok(())
            }
        }
    }

    fn json<T: Serialize>(&self, value: &T) -> Result<()> {
        self.write(&(serde_json::to_string_pretty(value)? + "\n"))
    }
}

/// Outcome of a command: `false` when its declared check failed.
type Verdict = bool;

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_program(path: &Path) -> Result<XProgram> {
    XProgram::from_json(&read(path)?).with_context(|| format!("parsing program {}", path.display()))
}

fn load_graph(path: &Path) -> Result<ExtendedIqpGraph> {
    ExtendedIqpGraph::from_json(&read(path)?).with_context(|| format!("parsing extended graph {}", path.display()))
}

fn distribution_csv(dist: &OutcomeDistribution) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["bitstring", "probability"])?;
    for (bits, p) in dist.sorted_rows() {
        w.write_record([bits, format!("{p:.17e}")])?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

fn distribution_rows(dist: &OutcomeDistribution) -> Vec<serde_json::Value> {
    dist.sorted_rows()
        .into_iter()
        .map(|(x, p)| json!({ "x": x, "p": p }))
        .collect()
}

fn cmd_distribution(program: &Path, out: &Output) -> Result<Verdict> {
    let dist = xprog::exact_distribution(&load_program(program)?)?;
    out.write(&distribution_csv(&dist)?)?;
    Ok((dist.total() - 1.0).abs() <= 1e-12)
}

fn cmd_sample(program: &Path, count: usize, seed: u64, out: &Output) -> Result<Verdict> {
    let xp = load_program(program)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["index", "bitstring"])?;
    for (i, x) in xprog::sample(&xp, seed, count)?.iter().enumerate() {
        w.write_record([i.to_string(), x.to_string()])?;
    }
    out.write(&String::from_utf8(w.into_inner()?)?)?;
    Ok(true)
}

fn cmd_bias(program: &Path, direction: &str, out: &Output) -> Result<Verdict> {
    let xp = load_program(program)?;
    let s = BinVector::parse(direction)?;
    let formula = xprog::bias_codeword_formula(&xp, &s)?;
    let direct = xprog::bias_direct(&xprog::exact_distribution(&xp)?, &s)?;
    let check = CheckResult::new("formula vs brute force", (formula.value - direct).abs(), 1e-9);
    let pass = check.pass;
    out.json(&json!({ "formula": formula, "direct": direct, "check": check }))?;
    Ok(pass)
}

#[allow(clippy::too_many_arguments)]
fn cmd_protocol(
    program: &Path,
    graph: &Path,
    runner: &str,
    adversary: &str,
    exact: bool,
    samples: Option<usize>,
    seed: &Seed,
    out: &Output,
) -> Result<Verdict> {
    let runner: Runner = runner.parse()?;
    let inst = Instance::new(load_program(program)?, load_graph(graph)?)?;
    let server = adversary_by_name(adversary, inst.qt().n_b())?;
    let want = xprog::exact_distribution(inst.xp())?;
    if exact {
        let got = exact_output_distribution(runner, &inst, server.as_ref())?;
        let check = CheckResult::new("TV to exact distribution", got.tv_distance(&want), 1e-9);
        let pass = check.pass;
        out.json(&json!({
            "runner": runner,
            "adversary": server.name(),
            "mode": "exact",
            "distribution": distribution_rows(&got),
            "check": check,
        }))?;
        return Ok(pass);
    }
    let seed = seed.resolve();
    let count = samples.unwrap_or(1000);
    let mut counts = vec![0usize; 1 << inst.q().cols()];
    let mut first = None;
    for index in 0..count as u64 {
        let (x, transcript, _) = run_once(runner, &inst, server.as_ref(), seed, index)?;
        counts[BinVector::from_bits(&x).to_index() as usize] += 1;
        if first.is_none() {
            first = Some(transcript);
        }
    }
    let freq = OutcomeDistribution::new(
        inst.q().cols(),
        counts.iter().map(|&c| c as f64 / count as f64).collect(),
    )?;
    out.json(&json!({
        "runner": runner,
        "adversary": server.name(),
        "mode": "samples",
        "samples": count,
        "seed": seed,
        "frequencies": distribution_rows(&freq),
        "tv_to_exact": freq.tv_distance(&want),
        "first_transcript": first,
    }))?;
    Ok(true)
}

fn cmd_security(
    program: &Path,
    graph: &Path,
    check: SecurityCheck,
    phase: Phase,
    adversary: &str,
    output_only: bool,
    out: &Output,
) -> Result<Verdict> {
    let xp = load_program(program)?;
    let qt = load_graph(graph)?;
    let inst = Instance::new(xp.clone(), qt.clone())?;
    let report = match check {
        SecurityCheck::Blindness => match phase {
            Phase::AfterState => {
                let honest = adversary_by_name("honest", qt.n_b())?;
                let v = security::server_view(Runner::Blind, &inst, Checkpoint::AfterState, honest.as_ref())?;
                let (herm, trace, neg, table) = v.validity();
                SecurityReport::new(
                    "blindness[after-state]",
                    vec![
                        CheckResult::new(
                            "after-state register vs I/2^n",
                            security::distance_from_maximally_mixed(&v.avg_state()),
                            1e-12,
                        ),
                        CheckResult::new("hermiticity", herm, 1e-10),
                        CheckResult::new("trace", trace, 1e-10),
                        CheckResult::new("negative eigenvalue", neg, 1e-10),
                        CheckResult::new("classical normalisation", table, 1e-12),
                    ],
                )
            }
            Phase::AfterCorrections => SecurityReport::from_sweep(&security::blindness_sweep(&qt, xp.theta())?),
        },
        SecurityCheck::Simulator => {
            let server: Box<dyn ServerStrategy> = adversary_by_name(adversary, qt.n_b())?;
            let mode = if output_only {
                EquivalenceMode::OutputOnly
            } else {
                EquivalenceMode::Full
            };
            SecurityReport::from_equivalence(&security::simulator_equivalence(&inst, server.as_ref(), mode)?)
        }
    };
    out.json(&report)?;
    Ok(report.pass)
}

fn cmd_hypothesis(cfg: TestConfig, out: &Output) -> Result<Verdict> {
    let report = hypothesis::run_hypothesis_test(&cfg)?;
    out.json(&report)?;
    Ok(report.decision == Decision::Pass)
}

fn cmd_qr_matrix(n_a: usize, out: &Output) -> Result<Verdict> {
    let m = hypothesis::qr_generator_matrix(n_a)?;
    out.json(&json!({
        "n_a": n_a,
        "residues": hypothesis::quadratic_residues(n_a)?,
        "qr": m.to_rows(),
    }))?;
    Ok(true)
}

fn run(cli: Cli) -> Result<Verdict> {
    match cli.command {
        Command::Distribution { program, out } => cmd_distribution(&program, &out),
        Command::Sample { program, count, seed, out } => cmd_sample(&program, count, seed.resolve(), &out),
        Command::Bias { program, direction, out } => cmd_bias(&program, &direction, &out),
        Command::Protocol {
            program,
            graph,
            runner,
            adversary,
            exact,
            samples,
            seed,
            out,
        } => cmd_protocol(&program, &graph, &runner, &adversary, exact, samples, &seed, &out),
        Command::Security {
            program,
            graph,
            check,
            phase,
            adversary,
            output_only,
            out,
        } => cmd_security(&program, &graph, check, phase, &adversary, output_only, &out),
        Command::Hypothesis {
            n_a,
            samples,
            threshold,
            adversary,
            backend,
            reveal_secrets,
            seed,
            out,
        } => {
            let backend = match backend {
                Some(b) => b.parse::<Backend>()?,
                None => Backend::auto(n_a),
            };
            let cfg = TestConfig {
                n_a,
                samples,
                threshold,
                seed: seed.resolve(),
                adversary,
                backend,
                reveal_secrets,
            };
            cmd_hypothesis(cfg, &out)
        }
        Command::QrMatrix { n_a, out } => cmd_qr_matrix(n_a, &out),
    }
}

fn error_kind(e: &anyhow::Error) -> &'static str {
    match e.chain().find_map(|c| c.downcast_ref::<blindiqp::Error>()) {
        Some(blindiqp::Error::Guard { .. }) => "guard",
        Some(blindiqp::Error::Dimension(_)) => "dimension",
        Some(blindiqp::Error::Singular) => "singular",
        Some(blindiqp::Error::Invalid(_)) => "invalid",
        Some(blindiqp::Error::Json(_)) => "parse",
        None if e.chain().any(|c| c.is::<std::io::Error>()) => "io",
        None => "error",
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("{}", json!({ "check": "failed" }));
            ExitCode::from(2)
        }
        Err(e) => {
            let chain: Vec<String> = e.chain().map(|c| c.to_string()).collect();
            eprintln!("{}", json!({ "error": chain.join(": "), "kind": error_kind(&e) }));
            ExitCode::from(1)
        }
    }
}

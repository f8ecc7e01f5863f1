mod params;
mod registry;

use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, ensure, Context as _, Result};
use clap::{Parser, Subcommand};
use fanout::qft::pow2::{qfp, QfpMode};
use fanout::verify::{self, run_suite, Context, SUITES};
use fanout::{BasisState, Circuit, Simulator};
use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use params::{parse_range, Params};
use registry::{Built, CONSTRUCTIONS};

#[derive(Parser)]
#[command(name = "fanout", version, about = "Build, simulate and check constant-depth fan-out circuits")]
struct Cli {
    /// Seed for every sampled quantity.
    #[arg(long, global = true, default_value_t = 2024)]
    seed: u64,
    /// Sampled shots per input (0 reports exact probabilities only).
    #[arg(long, global = true, default_value_t = 0)]
    shots: usize,
    /// Largest superposition the simulator may hold, as a power of two.
    #[arg(long, global = true, default_value_t = fanout::sim::DEFAULT_QUBIT_BUDGET)]
    qubit_budget: usize,
    /// Write the report (or, for `build`, the circuit) here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a construction and write it as JSON; the stats row goes to stdout
    /// (stderr when the circuit itself goes to stdout).
    Build {
        construction: String,
        /// Construction parameters as key=value.
        params: Vec<String>,
    },
    /// Exact output distribution per input, plus sampled counts with --shots.
    Simulate {
        /// A construction name, or `qfp` for the sampled phase read-out.
        construction: Option<String>,
        params: Vec<String>,
        /// Simulate a circuit file instead of a construction.
        #[arg(long, conflicts_with = "construction")]
        circuit: Option<PathBuf>,
        /// Input bits (character i is input qubit i) or `all`.
        #[arg(long, default_value = "all")]
        input: String,
    },
    /// Run a verification suite by name or number, or `all`.
    Verify {
        suite: String,
        /// Report measured run times instead of the budget verdict.
        #[arg(long)]
        timings: bool,
    },
    /// Stats-only scaling table; n and d accept ranges (a..b doubles, a..b+s steps, a,b,c lists).
    Bench {
        construction: String,
        params: Vec<String>,
    },
    /// List constructions and suites.
    List,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn output(out: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(File::create(p).with_context(|| format!("creating {}", p.display()))?),
        None => Box::new(io::stdout().lock()),
    })
}

/// Runs the command; `Ok(false)` means a check failed.
fn run(cli: &Cli) -> Result<bool> {
    let sim = Simulator::new(cli.qubit_budget);
    match &cli.command {
        Command::Build { construction, params } => build(cli, construction, &Params::parse(params)?),
        Command::Simulate { construction, params, circuit, input } => {
            let p = Params::parse(params)?;
            let mut w = csv::Writer::from_writer(output(&cli.out)?);
            match (construction.as_deref(), circuit) {
                (Some("qfp"), _) => simulate_qfp(cli, &p, input, &sim, &mut w)?,
                (Some(name), _) => simulate(cli, &registry::find(name)?.build(&p)?, input, &sim, &mut w)?,
                (None, Some(path)) => simulate(cli, &Built::from_roles(read_circuit(path)?), input, &sim, &mut w)?,
                (None, None) => bail!("give a construction or --circuit"),
            }
            w.flush()?;
            Ok(true)
        }
        Command::Verify { suite, timings } => verify_suites(cli, suite, *timings, sim),
        Command::Bench { construction, params } => bench(cli, construction, params),
        Command::List => {
            let mut w = output(&cli.out)?;
            for c in CONSTRUCTIONS {
                writeln!(w, "construction {:<20} {:<16} {}", c.name, c.keys.join(","), c.about)?;
            }
            writeln!(w, "construction {:<20} {:<16} sampled read-out of m Fourier-state copies", "qfp", "n,m,mode")?;
            for s in SUITES {
                writeln!(w, "suite {:>2} {:<17} {}", s.id, s.name, s.summary)?;
            }
            Ok(true)
        }
    }
}

fn read_circuit(path: &Path) -> Result<Circuit> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(Circuit::from_json(&text)?)
}

fn stats_row(w: &mut csv::Writer<impl Write>, name: &str, p: &Params, b: &Built) -> Result<()> {
    let s = b.circuit.stats();
    let notes: Vec<String> = b.nominal.iter().map(|(k, v)| format!("{k}={v}")).collect();
    w.write_record(["construction", "params", "qubits", "depth", "size", "ancillas", "nominal_depth", "notes"])?;
    w.write_record([
        name.to_string(),
        p.render(),
        b.circuit.qubit_count.to_string(),
        s.depth.to_string(),
        s.size.to_string(),
        s.ancilla_count.to_string(),
        s.nominal_depth.to_string(),
        notes.join(";"),
    ])?;
    Ok(w.flush()?)
}

fn build(cli: &Cli, name: &str, p: &Params) -> Result<bool> {
    if name == "qfp" {
        bail!("qfp is a sampled procedure, not a circuit; use `simulate qfp`");
    }
    let b = registry::find(name)?.build(p)?;
    let json = b.circuit.to_json_pretty();
    match &cli.out {
        Some(path) => {
            std::fs::write(path, json + "\n").with_context(|| format!("writing {}", path.display()))?;
            stats_row(&mut csv::Writer::from_writer(io::stdout().lock()), name, p, &b)?;
        }
        None => {
            println!("{json}");
            stats_row(&mut csv::Writer::from_writer(io::stderr().lock()), name, p, &b)?;
        }
    }
    Ok(true)
}

fn bits(value: u64, width: usize) -> String {
    (0..width).map(|i| if value >> i & 1 == 1 { '1' } else { '0' }).collect()
}

/// Input values to run: every value of `width` bits, or the one given.
fn inputs(spec: &str, width: usize) -> Result<Vec<u64>> {
    if spec == "all" {
        ensure!(width <= 20, "{width} inputs are too many to enumerate; give --input");
        return Ok((0..1u64 << width).collect());
    }
    let b = BasisState::parse(spec).with_context(|| format!("input `{spec}` is not a bit string"))?;
    ensure!(b.bits.len() == width, "input has {} bits, the circuit takes {width}", b.bits.len());
    Ok(vec![b.register(&(0..width).collect::<Vec<_>>())])
}

fn simulate(cli: &Cli, b: &Built, input: &str, sim: &Simulator, w: &mut csv::Writer<impl Write>) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
    w.write_record(["input", "outcome", "probability", "count"])?;
    for x in inputs(input, b.inputs.len())? {
        let start = BasisState::zeros(b.circuit.qubit_count).with_register(&b.inputs, x);
        let dist = sim.run(&b.circuit, &start)?.register_distribution(&b.outputs);
        let mut counts = vec![0usize; dist.len()];
        if cli.shots > 0 {
            let pick = WeightedIndex::new(dist.values())?;
            for _ in 0..cli.shots {
                counts[pick.sample(&mut rng)] += 1;
            }
        }
        for ((&y, &prob), count) in dist.iter().zip(counts) {
            if prob < 1e-12 && count == 0 {
                continue;
            }
            let count = if cli.shots > 0 { count.to_string() } else { String::new() };
            w.write_record([bits(x, b.inputs.len()), bits(y, b.outputs.len()), format!("{prob:.12}"), count])?;
        }
    }
    Ok(())
}

fn simulate_qfp(cli: &Cli, p: &Params, input: &str, sim: &Simulator, w: &mut csv::Writer<impl Write>) -> Result<()> {
    for k in p.keys() {
        ensure!(["n", "m", "mode"].contains(&k), "`qfp` takes n, m, mode; got `{k}`");
    }
    let (n, m): (usize, usize) = (p.get("n")?, p.get("m")?);
    ensure!(n >= 1 && m >= 1, "n and m must be at least 1");
    ensure!(cli.shots > 0, "qfp is sampled; give --shots");
    let mode = match p.choice("mode", &["marginal", "collapse"])? {
        "marginal" => QfpMode::Marginal,
        _ => QfpMode::Collapse,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
    w.write_record(["input", "shots", "successes", "flagged", "success_rate"])?;
    for x in inputs(input, n)? {
        let (mut wins, mut flagged) = (0usize, 0usize);
        for _ in 0..cli.shots {
            let o = qfp(x, n, m, mode, sim, &mut rng)?;
            wins += (o.estimate == x && !o.flagged) as usize;
            flagged += o.flagged as usize;
        }
        let rate = wins as f64 / cli.shots as f64;
        w.write_record([bits(x, n), cli.shots.to_string(), wins.to_string(), flagged.to_string(), format!("{rate:.6}")])?;
    }
    Ok(())
}

fn verify_suites(cli: &Cli, name: &str, timings: bool, sim: Simulator) -> Result<bool> {
    let suites: Vec<&verify::Suite> = match name {
        "all" => SUITES.iter().collect(),
        _ => vec![verify::find(name).with_context(|| format!("unknown suite `{name}`; see `fanout list`"))?],
    };
    let ctx = Context { sim, seed: cli.seed };
    let mut w = csv::Writer::from_writer(output(&cli.out)?);
    w.write_record(["suite", "check", "measured", "expected", "pass"])?;
    let (mut passed, mut total) = (0, 0);
    for s in suites {
        let report = run_suite(s, &ctx);
        for c in &report.checks {
            let measured = match (c.id.as_str(), timings) {
                ("runtime", false) if c.pass => "within budget".to_string(),
                ("runtime", false) => "over budget".to_string(),
                _ => c.measured.clone(),
            };
            w.write_record([s.name, &c.id, &measured, &c.expected, if c.pass { "pass" } else { "FAIL" }])?;
        }
        total += report.checks.len();
        passed += report.checks.iter().filter(|c| c.pass).count();
        w.flush()?;
    }
    eprintln!("{passed} of {total} checks passed");
    Ok(passed == total)
}

fn bench(cli: &Cli, name: &str, raw: &[String]) -> Result<bool> {
    let c = registry::find(name)?;
    let p = Params::parse(raw)?;
    let ns = parse_range(p.raw("n").context("bench needs n")?)?;
    let ds: Vec<Option<usize>> = match p.raw("d") {
        Some(spec) => parse_range(spec)?.into_iter().map(Some).collect(),
        None => vec![None],
    };
    let mut w = csv::Writer::from_writer(output(&cli.out)?);
    let label = c.size_ratio(1, 0).0;
    w.write_record(["construction", "n", "d", "qubits", "depth", "size", "ancillas", "nominal_depth", label])?;
    for &n in &ns {
        for &d in &ds {
            let mut q = p.with("n", n);
            if let Some(d) = d {
                q = q.with("d", d);
            }
            let b = c.build(&q)?;
            let s = b.circuit.stats();
            w.write_record([
                name.to_string(),
                n.to_string(),
                d.map(|d| d.to_string()).unwrap_or_default(),
                b.circuit.qubit_count.to_string(),
                s.depth.to_string(),
                s.size.to_string(),
                s.ancilla_count.to_string(),
                s.nominal_depth.to_string(),
                format!("{:.6}", c.size_ratio(n, s.size).1),
            ])?;
        }
        w.flush()?;
    }
    Ok(true)
}

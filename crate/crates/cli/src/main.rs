use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Deserialize;
use swlearn::benchgen::{random_system, run_benchmark, BenchRow, GenConfig};
use swlearn::learner::{learn, LearnResult, LearnerConfig};
use swlearn::linalg::Matrix;
use swlearn::oracle::{
    systems_equivalent, BoundedTestingEquivalence, WhiteBoxEquivalence, WhiteBoxObservation,
};
use swlearn::output_query::compute_output;
use swlearn::SwitchedSystem;

const EXIT_NOT_EQUIVALENT: u8 = 1;
const EXIT_RUNTIME: u8 = 3;

#[derive(Parser)]
#[command(
    name = "swlearn",
    version,
    about = "Learn switched linear systems from executions"
)]
struct Cli {
    /// Significant digits for printed numbers.
    #[arg(long, global = true, default_value_t = 6)]
    precision: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random switched system.
    Gen {
        #[arg(long)]
        nodes: usize,
        #[arg(long)]
        events: usize,
        #[arg(long)]
        labels: usize,
        #[arg(long)]
        dim: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the execution of a model from one initial state.
    Simulate {
        #[arg(long)]
        model: PathBuf,
        /// Comma-separated initial state.
        #[arg(long, allow_hyphen_values = true)]
        x0: String,
        /// Space-separated event names; empty for the empty word.
        #[arg(long, default_value = "")]
        word: String,
    },
    /// Recover the output matrix of a word from executions alone.
    Output {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value = "")]
        word: String,
    },
    /// Learn a model treating the given file as the hidden system.
    Learn {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, value_enum, default_value_t = EqMode::Exact)]
        eq: EqMode,
        /// Longest word the bounded tester tries (default: 2 * nodes + 1).
        #[arg(long = "L")]
        max_len: Option<usize>,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Stats file; CSV if the name ends in `.csv`, JSON otherwise.
        #[arg(long)]
        stats: Option<PathBuf>,
    },
    /// Check two models for language equivalence.
    Equiv {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
    /// Write a model's automaton as Graphviz DOT.
    ExportDot {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate and learn every system of a grid, writing one CSV row each.
    Bench {
        #[arg(long)]
        grid: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum EqMode {
    Exact,
    Bounded,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Grid {
    List(Vec<GenConfig>),
    Runs { runs: Vec<GenConfig> },
}

/// `%g`-style formatting with `p` significant digits.
fn fmt_num(x: f64, p: usize) -> String {
    let p = p.max(1);
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{:.*e}", p - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= p as i32 {
        format!("{}e{exp}", trim_zeros(mantissa))
    } else {
        let decimals = (p as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn fmt_vec(v: &[f64], p: usize) -> String {
    let parts: Vec<String> = v.iter().map(|&x| fmt_num(x, p)).collect();
    format!("[{}]", parts.join(", "))
}

fn fmt_matrix(m: &Matrix, p: usize) -> String {
    let rows: Vec<String> = m.to_rows().iter().map(|r| fmt_vec(r, p)).collect();
    format!("[{}]", rows.join(", "))
}

fn load(path: &Path) -> Result<SwitchedSystem> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    SwitchedSystem::load_json(&text).with_context(|| format!("loading {}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn parse_vector(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .with_context(|| format!("bad number {s:?} in initial state"))
        })
        .collect()
}

fn write_stats(path: &Path, result: &LearnResult) -> Result<()> {
    let summary = result.stats.summary();
    if path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"))
    {
        let mut w = csv::Writer::from_path(path)?;
        w.serialize(&summary)?;
        w.flush()?;
        Ok(())
    } else {
        write(path, &serde_json::to_string_pretty(&summary)?)
    }
}

fn run(cli: Cli) -> Result<u8> {
    let p = cli.precision;
    match cli.command {
        Command::Gen {
            nodes,
            events,
            labels,
            dim,
            seed,
            out,
        } => {
            let sys = random_system(&GenConfig::new(nodes, events, labels, dim, seed))?;
            write(&out, &sys.save_json())?;
            println!(
                "wrote {} ({} nodes, {} labels, d = {})",
                out.display(),
                sys.num_nodes(),
                sys.matrices().len(),
                sys.dim()
            );
        }
        Command::Simulate { model, x0, word } => {
            let sys = load(&model)?;
            let w = sys.alphabet().parse_word(&word)?;
            let x = Matrix::column_vector(&parse_vector(&x0)?)?;
            for (i, s) in sys.exec(&x, &w)?.iter().enumerate() {
                println!("x{i} = {}", fmt_vec(&s.column(0), p));
            }
        }
        Command::Output { model, word } => {
            let sys = load(&model)?;
            let w = sys.alphabet().parse_word(&word)?;
            let obs = WhiteBoxObservation::new(sys);
            let a = compute_output(&obs, &w, &Default::default())?;
            println!("{}", fmt_matrix(&a, p));
        }
        Command::Learn {
            model,
            eq,
            max_len,
            tol,
            out,
            stats,
        } => {
            let hidden = load(&model)?;
            let cfg = LearnerConfig {
                label_tol: tol,
                ..LearnerConfig::default()
            };
            let obs = WhiteBoxObservation::new(hidden.clone());
            let result = match eq {
                EqMode::Exact => learn(&obs, &WhiteBoxEquivalence::new(hidden.clone(), tol), cfg)?,
                EqMode::Bounded => {
                    let l = max_len.unwrap_or(2 * hidden.num_nodes() + 1);
                    let oracle = BoundedTestingEquivalence::new(&obs, l, tol, cfg.output);
                    learn(&obs, &oracle, cfg)?
                }
            };
            let s = result.stats.summary();
            println!(
                "learned {} nodes: io_queries={} output_computations={} equivalence_queries={} rounds={} wall_ms={}",
                result.system.num_nodes(),
                s.io_queries,
                s.output_computations,
                s.equivalence_queries,
                s.rounds,
                s.wall_ms
            );
            if let Some(out) = out {
                write(&out, &result.to_json())?;
            }
            if let Some(path) = stats {
                write_stats(&path, &result)?;
            }
        }
        Command::Equiv { a, b, tol } => {
            let (a, b) = (load(&a)?, load(&b)?);
            if a.alphabet() != b.alphabet() {
                bail!("models have different event alphabets");
            }
            match systems_equivalent(&a, &b, tol)? {
                None => println!("equivalent"),
                Some(w) => {
                    println!("not equivalent");
                    println!("counterexample: {}", a.alphabet().format_word(&w));
                    return Ok(EXIT_NOT_EQUIVALENT);
                }
            }
        }
        Command::ExportDot { model, out } => {
            write(&out, &load(&model)?.fa().to_dot())?;
        }
        Command::Bench { grid, out, tol } => {
            let text =
                fs::read_to_string(&grid).with_context(|| format!("reading {}", grid.display()))?;
            let configs = match serde_json::from_str::<Grid>(&text)
                .with_context(|| format!("parsing {}", grid.display()))?
            {
                Grid::List(c) | Grid::Runs { runs: c } => c,
            };
            let learner = LearnerConfig {
                label_tol: tol,
                ..LearnerConfig::default()
            };
            let outcomes: Vec<_> = configs
                .par_iter()
                .map(|c| run_benchmark(c, &learner))
                .collect::<swlearn::Result<_>>()?;
            let mut w = csv::Writer::from_path(&out)
                .with_context(|| format!("writing {}", out.display()))?;
            for o in &outcomes {
                w.serialize(&o.row)?;
            }
            w.flush()?;
            let failed: Vec<&BenchRow> = outcomes
                .iter()
                .filter(|o| !o.verified)
                .map(|o| &o.row)
                .collect();
            println!("wrote {} rows to {}", outcomes.len(), out.display());
            if !failed.is_empty() {
                bail!("{} runs learned a non-equivalent model", failed.len());
            }
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}

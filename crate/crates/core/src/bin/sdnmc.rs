use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use sdnmc::bench;
use sdnmc::explore::{self, TraceDoc, Verdict};
use sdnmc::model::pack;
use sdnmc::scenario::{Checker, Scenario};

#[global_allocator]
static GLOBAL: mimalloc::MiMalloc = mimalloc::MiMalloc;

const EXIT_USAGE: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "sdnmc", version, about = "Explicit-state model checker for SDN controller programs")]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,
    #[command(flatten)]
    check: CheckArgs,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum OnOff {
    On,
    Off,
}

impl OnOff {
    fn get(self) -> bool {
        matches!(self, OnOff::On)
    }
}

#[derive(Args, Debug, Default)]
struct CheckArgs {
    /// Scenario file.
    #[arg(long, global = true)]
    scenario: Option<PathBuf>,
    #[arg(long, value_enum)]
    por: Option<OnOff>,
    #[arg(long, value_enum)]
    merge_chains: Option<OnOff>,
    /// Check the ample-set conditions on the reduced graph.
    #[arg(long)]
    validate_por: bool,
    /// Explore without reduction.
    #[arg(long)]
    full: bool,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    max_states: Option<usize>,
    /// Stop exploring after this many seconds.
    #[arg(long, value_name = "SECS")]
    duration_cap: Option<u64>,
    /// Write the counterexample here, plus a `.json` copy next to it.
    #[arg(long)]
    emit_trace: Option<PathBuf>,
    /// Print run statistics as key=value lines.
    #[arg(long)]
    stats: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a benchmark suite and print a table.
    Bench { suite: PathBuf },
    /// Replay a JSON trace against a scenario.
    Replay { trace: PathBuf },
    /// Run full and reduced exploration and compare them.
    Compare,
    /// Search for controller actions whose order matters.
    OrderCheck {
        #[arg(long, default_value_t = 1_000_000)]
        bound: usize,
    },
    /// Print the packed initial state.
    Dump,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}

fn load(args: &CheckArgs) -> Result<(Scenario, Checker)> {
    let Some(path) = &args.scenario else { bail!("--scenario is required") };
    let sc = Scenario::load(path).with_context(|| format!("reading {}", path.display()))?;
    let checker = sc.build()?;
    Ok((sc, checker))
}

fn options(sc: &Scenario, args: &CheckArgs) -> explore::Options {
    let mut o = sc.explore_options();
    if let Some(p) = args.por {
        o.por = p.get();
    }
    if args.full {
        o.por = false;
    }
    if let Some(m) = args.merge_chains {
        o.merge_chains = m.get();
    }
    if let Some(t) = args.threads {
        o.threads = t.max(1);
    }
    if let Some(m) = args.max_states {
        o.max_states = m;
    }
    if let Some(s) = args.duration_cap {
        o.time_limit = Some(std::time::Duration::from_secs(s));
    }
    o
}

fn run(cli: Cli) -> Result<u8> {
    let args = &cli.check;
    match cli.command {
        None => check(args),
        Some(Command::Bench { suite }) => {
            let text = std::fs::read_to_string(&suite).with_context(|| format!("reading {}", suite.display()))?;
            let rows = bench::run(&bench::parse_suite(&text)?)?;
            print!("{}", bench::render(&rows));
            Ok(0)
        }
        Some(Command::Replay { trace }) => {
            let (_, c) = load(args)?;
            let text = std::fs::read_to_string(&trace).with_context(|| format!("reading {}", trace.display()))?;
            let doc: TraceDoc = serde_json::from_str(&text).context("parsing trace")?;
            let actions = doc.actions(&c.model)?;
            let out = explore::replay(&c.model, &c.property, &actions)?;
            match out.violation {
                Some((step, v)) => {
                    println!("violation reproduced at step {step}: {v:?}");
                    Ok(1)
                }
                None => {
                    println!("replayed {} steps without violation", actions.len());
                    Ok(0)
                }
            }
        }
        Some(Command::Compare) => {
            let (sc, c) = load(args)?;
            let cmp = explore::compare_modes(&c.model, &c.property, &options(&sc, args))?;
            println!("full_verdict={}", cmp.full.verdict.name());
            println!("reduced_verdict={}", cmp.reduced.verdict.name());
            println!("full_visited={}", cmp.full.stats.visited);
            println!("reduced_visited={}", cmp.reduced.stats.visited);
            println!("verdicts_equal={}", cmp.verdicts_equal);
            println!("reduced_subset_of_full={}", cmp.subset());
            println!("ratio={:.2}", cmp.ratio);
            Ok(if cmp.verdicts_equal && cmp.subset() { 0 } else { 1 })
        }
        Some(Command::OrderCheck { bound }) => {
            let (_, c) = load(args)?;
            let r = explore::validate_order_sensitivity(&c.model, bound)?;
            let declared = c.model.program().metadata().order_sensitive;
            println!("declared_order_sensitive={declared}");
            println!("states_checked={}", r.states_checked);
            match (&r.witness, r.sensitive()) {
                (Some(w), _) => {
                    println!("observed=sensitive");
                    println!("witness={} ; {}", c.model.describe_action(&w.first), c.model.describe_action(&w.second));
                }
                (None, Some(false)) => println!("observed=insensitive"),
                _ => println!("observed=inconclusive"),
            }
            Ok(match r.sensitive() {
                Some(s) if s == declared => 0,
                Some(_) => 1,
                None => 2,
            })
        }
        Some(Command::Dump) => {
            let (_, c) = load(args)?;
            let s = c.model.initial_state();
            let bytes = pack::dump(&c.model.pack(&s), c.model.schema_hash());
            let hex: String = bytes.iter().map(|b| format!("{b:02x}")).collect();
            println!("{hex}");
            Ok(0)
        }
    }
}

fn check(args: &CheckArgs) -> Result<u8> {
    let (sc, c) = load(args)?;
    let opts = options(&sc, args);
    if args.validate_por {
        let r = explore::validate_por(&c.model, &c.property, &opts)?;
        println!(
            "validate_por states={} reduced={} c1={} c3={} c4={} cyclic_components={}",
            r.states, r.reduced_states, r.c1_violations, r.c3_violations, r.c4_violations, r.cyclic_components
        );
        if !r.ok() {
            eprintln!("ample-set conditions violated");
            return Ok(1);
        }
    }
    let run = explore::explore(&c.model, &c.property, &opts)?;
    println!("verdict={}", run.verdict);
    if args.stats {
        print!("{}", run.stats.to_kv());
    }
    if let Verdict::Violated(cx) = &run.verdict {
        let text = cx.render(&c.model, &c.property);
        match &args.emit_trace {
            Some(path) => {
                std::fs::write(path, &text).with_context(|| format!("writing {}", path.display()))?;
                let doc = cx.to_doc(&c.model, &c.property, args.scenario.as_deref().and_then(Path::to_str));
                std::fs::write(json_path(path), serde_json::to_string_pretty(&doc)?)?;
            }
            None => print!("{text}"),
        }
    }
    Ok(run.verdict.exit_code() as u8)
}

fn json_path(p: &Path) -> PathBuf {
    let mut s = p.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

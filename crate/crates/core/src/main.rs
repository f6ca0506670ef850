use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use difuzz_core::bench::{self, render_report, BenchConfig, ReportFormat};
use difuzz_core::engine::{fuzz_loop, write_campaign, Clock, ExecLimits, FuzzConfig, Mode, ScheduleConfig};
use difuzz_core::graph::{build_graphs, GraphSet};
use difuzz_core::instrument::{instrument_program, InstrumentedProgram};
use difuzz_core::minilang::load_dir;
use difuzz_core::preprocess::{compute_ets, preprocess, read_ets_toml, read_targets, write_ets_toml};

#[derive(Parser)]
#[command(name = "difuzz", version, about = "Directed greybox fuzzing for MiniProc programs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct FuzzArgs {
    #[arg(long, default_value = "directed")]
    mode: Mode,
    /// Campaign timeout in clock seconds.
    #[arg(long, default_value_t = 60.0)]
    timeout: f64,
    #[arg(long, default_value_t = 0)]
    rng_seed: u64,
    /// Exploitation time of the annealing schedule, in seconds.
    #[arg(long, default_value_t = ScheduleConfig::default().t_exploit_s)]
    t_exploit: f64,
    /// Use an execution-count clock with this many executions per second.
    #[arg(long)]
    exec_clock: Option<f64>,
    #[arg(long, default_value_t = ExecLimits::default().step_limit)]
    step_limit: u64,
    /// Directory of extra initial inputs.
    #[arg(long)]
    seeds: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Write the call graph and per-function CFGs of a program as DOT files.
    Graph {
        #[arg(long)]
        src: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Compute the ETS of a target file from a graphs directory.
    Preprocess {
        #[arg(long)]
        graphs: PathBuf,
        #[arg(long)]
        targets: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Insert ETS probes and coverage guards.
    Instrument {
        #[arg(long)]
        src: PathBuf,
        #[arg(long)]
        ets: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Fuzz an instrumented program.
    Fuzz {
        #[arg(long)]
        program: PathBuf,
        #[arg(long)]
        ets: PathBuf,
        #[command(flatten)]
        args: FuzzArgs,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Run a TTE benchmark.
    Bench {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Write the synthetic benchmark suite and its bench.toml.
    Suite {
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Graph, preprocess, instrument and fuzz in one go.
    Run {
        #[arg(long)]
        src: PathBuf,
        #[arg(long)]
        targets: PathBuf,
        #[command(flatten)]
        args: FuzzArgs,
        #[arg(short, long)]
        out: PathBuf,
    },
}

type Result<T> = std::result::Result<T, Box<dyn std::error::Error>>;

fn fuzz_config(a: &FuzzArgs) -> Result<FuzzConfig> {
    let mut seeds = Vec::new();
    if let Some(dir) = &a.seeds {
        let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)?.map(|e| e.map(|e| e.path())).collect::<std::io::Result<_>>()?;
        paths.sort();
        for p in paths.into_iter().filter(|p| p.is_file()) {
            seeds.push(std::fs::read(p)?);
        }
    }
    Ok(FuzzConfig {
        schedule: ScheduleConfig { t_exploit_s: a.t_exploit, ..ScheduleConfig::default() },
        clock: a.exec_clock.map_or(Clock::Wall, |per_second| Clock::Executions { per_second }),
        limits: ExecLimits { step_limit: a.step_limit },
        seeds,
        ..FuzzConfig::new(a.mode, a.timeout, a.rng_seed)
    })
}

fn report_campaign(r: &difuzz_core::engine::CampaignResult, out: &Path) {
    match (r.tte_s, &r.crash_position) {
        (Some(t), Some(p)) => println!(
            "target {} reached after {t:.3} s ({} executions) at {}:{}",
            r.target_id.as_deref().unwrap_or("?"),
            r.tte_executions.unwrap_or(0),
            p.file,
            p.line
        ),
        _ => println!("timeout after {} executions", r.executions),
    }
    println!("corpus {} entries, {} edges; results in {}", r.corpus_size, r.edges, out.display());
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Graph { src, out } => {
            let graphs = build_graphs(&load_dir(&src)?);
            graphs.write_dir(&out)?;
            println!("{} CFGs written to {}", graphs.cfgs.len(), out.display());
        }
        Command::Preprocess { graphs, targets, out } => {
            let ets = preprocess(&graphs, &targets, &out)?;
            println!("{} ETS blocks, max distance {}", ets.blocks.len(), ets.max_block_distance);
        }
        Command::Instrument { src, ets, out } => {
            let r = instrument_program(&src, &ets, &out)?;
            println!("{} guards, {} ETS probes, {} unplaceable", r.guards, r.ets_probes, r.unplaceable.len());
        }
        Command::Fuzz { program, ets, args, out } => {
            let ets = read_ets_toml(&ets)?;
            let program = InstrumentedProgram::load(&program)?;
            let r = fuzz_loop(&program, &ets, &fuzz_config(&args)?)?;
            write_campaign(&out, &r)?;
            report_campaign(&r, &out);
        }
        Command::Bench { config, trials, jobs, out } => {
            let mut cfg = BenchConfig::read(&config)?;
            cfg.trials = trials.unwrap_or(cfg.trials);
            cfg.jobs = jobs.unwrap_or(cfg.jobs);
            let base = config.parent().unwrap_or(Path::new("."));
            let m = bench::run_bench(&cfg, base, Some(&out))?;
            print!("{}", render_report(&m, ReportFormat::Text));
        }
        Command::Suite { out } => {
            let programs = bench::suite::write_suite(&out)?;
            println!("{} programs written to {}", programs.len(), out.display());
        }
        Command::Run { src, targets, args, out } => {
            let ast = load_dir(&src)?;
            let graphs: GraphSet = build_graphs(&ast);
            graphs.write_dir(&out.join("graphs"))?;
            let ets = compute_ets(&graphs, &read_targets(&targets)?)?;
            let ets_path = out.join("ets.toml");
            write_ets_toml(&ets, &ets_path)?;
            let inst = out.join("instrumented");
            instrument_program(&src, &ets_path, &inst)?;
            let program = InstrumentedProgram::load(&inst)?;
            let campaign = out.join("campaign");
            let r = fuzz_loop(&program, &ets, &fuzz_config(&args)?)?;
            write_campaign(&campaign, &r)?;
            report_campaign(&r, &campaign);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("difuzz: {e}");
            ExitCode::FAILURE
        }
    }
}

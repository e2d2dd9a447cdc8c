use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use larsim::config::{parse_config, ScenarioConfig, ScenarioId};
use larsim::engine::{run_with, RunOptions};
use larsim::error::{Error, Result};
use larsim::mobility::Trajectory;
use larsim::plot::write_plots;
use larsim::report::{read_rows_from_path, CsvRow, ResultsWriter};
use larsim::sweep::run_sweep;
use larsim::trace::{export_trace, import_trace_for};

#[derive(Parser)]
#[command(name = "larsim", version, about = "LAR1 routing over Manhattan-grid vehicle mobility")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a single run and print one CSV row.
    Run(RunArgs),
    /// Run every (scenario, node count, seed) combination and write results.csv.
    Sweep(SweepArgs),
    /// Draw PDR and delay charts from a results CSV.
    Plot {
        /// Results CSV written by `sweep`.
        csv: PathBuf,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Generate a mobility trace without simulating traffic.
    GenTrace {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long)]
        nodes: Option<usize>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        trace_out: PathBuf,
    },
}

#[derive(Args)]
struct ScenarioArgs {
    /// Scenario file of key=value lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Preset 1, 2 or 3; overrides the file's scenario.
    #[arg(long)]
    scenario: Option<u8>,
    /// Simulated seconds.
    #[arg(long)]
    sim_time: Option<f64>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[arg(long)]
    nodes: Option<usize>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Replay positions from this trace instead of generating mobility.
    #[arg(long)]
    trace_in: Option<PathBuf>,
    /// Save the generated mobility trace.
    #[arg(long)]
    trace_out: Option<PathBuf>,
    /// Write every simulation event to this file.
    #[arg(long)]
    event_log: Option<PathBuf>,
    /// Write the CSV row here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Comma-separated node counts.
    #[arg(long, value_delimiter = ',')]
    nodes: Option<Vec<usize>>,
    /// Number of seeds, starting at 1.
    #[arg(long)]
    seeds: Option<u64>,
    /// Sweep presets 1, 2 and 3 instead of a single scenario.
    #[arg(long, conflicts_with_all = ["config", "scenario"])]
    all_scenarios: bool,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// Also draw the charts next to results.csv.
    #[arg(long)]
    plot: bool,
}

fn load_scenario(args: &ScenarioArgs) -> Result<ScenarioConfig> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            parse_config(&text)?
        }
        None => ScenarioConfig::preset(ScenarioId::Preset(1)),
    };
    if let Some(id) = args.scenario {
        let preset = ScenarioConfig::preset(ScenarioId::Preset(id));
        cfg.scenario = preset.scenario;
        cfg.mobility = preset.mobility;
    }
    if let Some(t) = args.sim_time {
        cfg.sim_time = t;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let sc = load_scenario(&args.scenario)?;
    let nodes = args.nodes.unwrap_or(sc.node_counts[0]);
    let cfg = sc.run_config(nodes);
    cfg.validate()?;
    let trajectory = match &args.trace_in {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            Some(import_trace_for(&text, nodes)?)
        }
        None => None,
    };
    if let Some(path) = &args.trace_out {
        let t = match &trajectory {
            Some(t) => t.clone(),
            None => Trajectory::generate(nodes, &cfg.grid, &cfg.mobility, cfg.sim_time, args.seed)?,
        };
        let mut w = create(path)?;
        w.write_all(export_trace(&t).as_bytes()).map_err(|e| Error::io(path, e))?;
        w.flush().map_err(|e| Error::io(path, e))?;
    }
    let outcome = run_with(
        &cfg,
        args.seed,
        RunOptions {
            event_log: args.event_log.is_some(),
            trajectory,
            flows: None,
        },
    )?;
    if let Some(path) = &args.event_log {
        let mut w = create(path)?;
        w.write_all(outcome.log_text().as_bytes()).map_err(|e| Error::io(path, e))?;
        w.flush().map_err(|e| Error::io(path, e))?;
    }
    let row = CsvRow::from(&outcome.report);
    match &args.out {
        Some(path) => {
            let mut w = ResultsWriter::new(create(path)?)?;
            w.write(&row)?;
            w.flush()?;
        }
        None => {
            let mut w = ResultsWriter::new(io::stdout().lock())?;
            w.write(&row)?;
            w.flush()?;
        }
    }
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<()> {
    let base = load_scenario(&args.scenario)?;
    let mut configs = if args.all_scenarios {
        (1..=3)
            .map(|id| {
                let mut c = ScenarioConfig::preset(ScenarioId::Preset(id));
                c.sim_time = base.sim_time;
                c
            })
            .collect()
    } else {
        vec![base]
    };
    for c in &mut configs {
        if let Some(nodes) = &args.nodes {
            c.node_counts = nodes.clone();
        }
        if let Some(n) = args.seeds {
            c.seeds = (1..=n).collect();
        }
        c.validate()?;
    }
    fs::create_dir_all(&args.out_dir).map_err(|e| Error::io(&args.out_dir, e))?;
    let csv_path = args.out_dir.join("results.csv");
    let file = create(&csv_path)?;
    let progress = |done: usize, total: usize| eprint!("\r{done}/{total} runs");
    let outcome = run_sweep(&configs, file, &progress)?;
    eprintln!();
    for s in &outcome.summaries {
        eprintln!(
            "scenario {} nodes {:>3}: pdr {:.4} (sd {:.4}) delay {:.6} s over {} runs",
            s.scenario, s.node_count, s.pdr.mean, s.pdr.stddev, s.avg_delay.mean, s.runs
        );
    }
    eprintln!("wrote {}", csv_path.display());
    if args.plot {
        let rows = read_rows_from_path(&csv_path)?;
        for p in write_plots(&rows, &args.out_dir)? {
            eprintln!("wrote {}", p.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Plot { csv, out_dir } => {
            read_rows_from_path(&csv).and_then(|rows| write_plots(&rows, &out_dir)).map(|files| {
                for f in files {
                    println!("{}", f.display());
                }
            })
        }
        Command::GenTrace {
            scenario,
            nodes,
            seed,
            trace_out,
        } => load_scenario(&scenario).and_then(|sc| {
            let nodes = nodes.unwrap_or(sc.node_counts[0]);
            let t = Trajectory::generate(nodes, &sc.grid, &sc.mobility, sc.sim_time, seed)?;
            let mut w = create(&trace_out)?;
            w.write_all(export_trace(&t).as_bytes()).map_err(|e| Error::io(&trace_out, e))?;
            w.flush().map_err(|e| Error::io(&trace_out, e))
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use olmdisf::bench::{
    compare_table, load_results, run_experiment, run_grid, write_outputs, CerTable, Comparison, GridConfig,
    OutputOptions, RunConfig, RunResult, TiePolicy,
};
use olmdisf::stream::write_stream;
use olmdisf::{Error, Result};

const OUTPUT_ROOT_ENV: &str = "OLMDISF_OUTPUT_ROOT";

#[derive(Parser)]
#[command(name = "olmdisf", version, about = "Online learning over incomplete, mixed-type, drifting streams")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct OutputArgs {
    /// Output directory; overrides the config and the OLMDISF_OUTPUT_ROOT default.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Plot every n-th step.
    #[arg(long, default_value_t = 1)]
    downsample: usize,
    #[arg(long)]
    no_plots: bool,
}

impl OutputArgs {
    fn options(&self) -> OutputOptions {
        OutputOptions { downsample: self.downsample.max(1), plots: !self.no_plots }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Ties {
    Exclude,
    ReferenceWins,
}

impl From<Ties> for TiePolicy {
    fn from(t: Ties) -> Self {
        match t {
            Ties::Exclude => TiePolicy::Exclude,
            Ties::ReferenceWins => TiePolicy::ReferenceWins,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment from a TOML config.
    Run {
        config: PathBuf,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Run a dataset x regime x ratio x method x seed grid.
    Grid {
        config: PathBuf,
        /// Worker threads; defaults to the config value.
        #[arg(long)]
        parallelism: Option<usize>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Rebuild tables and plots from an output directory, or compare a
    /// summary table given as CSV.
    Report {
        dir: Option<PathBuf>,
        /// Summary-table CSV to compare instead of (or besides) the runs.
        #[arg(long)]
        table: Option<PathBuf>,
        #[arg(long, default_value = "OL-MDISF")]
        reference: String,
        #[arg(long, value_enum, default_value = "exclude")]
        ties: Ties,
        #[arg(long, default_value_t = 1)]
        downsample: usize,
        #[arg(long)]
        no_plots: bool,
    },
    /// Write the stream a run config would see, one instance per line.
    Synth {
        config: PathBuf,
        /// Destination file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn config_dir(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

/// `--out`, else the config's `out_dir` (under the env root when relative),
/// else `<root>/<config stem>` with the root from the environment or `.`.
fn output_dir(cli_out: Option<&Path>, config_out: Option<&Path>, config_path: &Path) -> PathBuf {
    if let Some(p) = cli_out {
        return p.to_path_buf();
    }
    let root = std::env::var_os(OUTPUT_ROOT_ENV).map(PathBuf::from);
    match (config_out, root) {
        (Some(p), Some(r)) if p.is_relative() => r.join(p),
        (Some(p), _) => p.to_path_buf(),
        (None, root) => {
            let stem = config_path.file_stem().map(|s| s.to_os_string()).unwrap_or_else(|| "run".into());
            root.unwrap_or_else(|| PathBuf::from("olmdisf-out")).join(stem)
        }
    }
}

fn load_run_config(path: &Path) -> Result<RunConfig> {
    let mut c = RunConfig::from_toml(&read_text(path)?)?;
    c.data.resolve(&config_dir(path));
    Ok(c)
}

fn print_comparison(cmp: &Comparison) {
    println!("loss/win against {} (ties: {:?})", cmp.reference, cmp.policy);
    for r in &cmp.regimes {
        let cells: Vec<String> = r
            .competitors
            .iter()
            .chain(std::iter::once(&r.total))
            .map(|t| format!("{} {}", t.method, t.cell()))
            .collect();
        println!("  {:<12} {}", r.regime, cells.join("  "));
    }
    if !cmp.gaps.is_empty() {
        eprintln!("warning: partial comparison, {} cells missing:", cmp.gaps.len());
        for g in &cmp.gaps {
            eprintln!("  {g}");
        }
    }
}

fn print_run(r: &RunResult) {
    let (acc, n) = r.pseudo_audit();
    print!("{:<48} cer {:.4}  n {}  drifts {}", r.run_id(), r.final_cer, r.trace.len(), r.events.len());
    if n > 0 {
        print!("  pseudo {n} @ {acc:.3}");
    }
    println!("  {:.2}s", r.wall_clock_secs);
}

fn cmd_run(config: &Path, output: &OutputArgs) -> Result<bool> {
    let c = load_run_config(config)?;
    let dir = output_dir(output.out.as_deref(), c.out_dir.as_deref(), config);
    let r = run_experiment(&c)?;
    print_run(&r);
    write_outputs(std::slice::from_ref(&r), &dir, output.options())?;
    println!("outputs in {}", dir.display());
    Ok(true)
}

fn cmd_grid(config: &Path, parallelism: Option<usize>, output: &OutputArgs) -> Result<bool> {
    let mut g = GridConfig::from_toml(&read_text(config)?)?;
    let base = config_dir(config);
    for d in &mut g.datasets {
        d.resolve(&base);
    }
    let dir = output_dir(output.out.as_deref(), g.out_dir.as_deref(), config);
    let cells = g.expand();
    let started = std::time::Instant::now();
    let outcomes = run_grid(&cells, parallelism.unwrap_or(g.parallelism));
    let mut ok = Vec::with_capacity(outcomes.len());
    let mut failed = 0;
    for (cell, outcome) in cells.iter().zip(outcomes) {
        match outcome {
            Ok(r) => {
                print_run(&r);
                ok.push(r);
            }
            Err(e) => {
                failed += 1;
                eprintln!("error: {}: {e}", cell.run_id());
            }
        }
    }
    write_outputs(&ok, &dir, output.options())?;
    let table = CerTable::from_results(&ok);
    if !table.rows.is_empty() {
        print_comparison(&compare_table(&table, "OL-MDISF", TiePolicy::Exclude)?);
    }
    println!(
        "{} of {} cells completed in {:.1}s; outputs in {}",
        ok.len(),
        cells.len(),
        started.elapsed().as_secs_f64(),
        dir.display()
    );
    Ok(failed == 0)
}

fn cmd_report(
    dir: Option<&Path>,
    table: Option<&Path>,
    reference: &str,
    ties: TiePolicy,
    opts: OutputOptions,
) -> Result<bool> {
    if dir.is_none() && table.is_none() {
        return Err(Error::Config("report needs an output directory or --table".into()));
    }
    if let Some(path) = table {
        let f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let t = CerTable::read_csv(f)?;
        print_comparison(&compare_table(&t, reference, ties)?);
    }
    if let Some(dir) = dir {
        let results = load_results(dir)?;
        write_outputs(&results, dir, opts)?;
        let t = CerTable::from_results(&results);
        if !t.rows.is_empty() {
            print_comparison(&compare_table(&t, reference, ties)?);
        }
        println!("rebuilt outputs for {} runs in {}", results.len(), dir.display());
    }
    Ok(true)
}

fn cmd_synth(config: &Path, out: Option<&Path>) -> Result<bool> {
    let c = load_run_config(config)?;
    c.validate()?;
    let ds = c.load_dataset()?;
    let stream = c.build_stream(&ds)?;
    match out {
        Some(p) => {
            let f = fs::File::create(p).map_err(|e| Error::io(p, e))?;
            let mut w = BufWriter::new(f);
            write_stream(&stream, &mut w)?;
            w.flush().map_err(|e| Error::io(p, e))?;
        }
        None => {
            let mut w = BufWriter::new(std::io::stdout().lock());
            write_stream(&stream, &mut w)?;
            w.flush().map_err(|e| Error::io("<stdout>", e))?;
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Run { config, output } => cmd_run(config, output),
        Command::Grid { config, parallelism, output } => cmd_grid(config, *parallelism, output),
        Command::Report { dir, table, reference, ties, downsample, no_plots } => cmd_report(
            dir.as_deref(),
            table.as_deref(),
            reference,
            (*ties).into(),
            OutputOptions { downsample: (*downsample).max(1), plots: !no_plots },
        ),
        Command::Synth { config, out } => cmd_synth(config, out.as_deref()),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

use clap::{Parser, Subcommand};
use releu::cli_io::config::{parse_config, SimConfig};
use releu::cli_io::report;
use releu::cli_io::snapshot::{read_snapshot, snapshot_name, write_snapshot, Snapshot};
use releu::diagnostics::{derivative_snapshot, SeriesDiagnostics};
use releu::eos::Eos;
use releu::initial_data::validate_physical_vacuum;
use releu::integrator::{self, Model};
use releu::verify::{run_suite, Suite};
use releu::{Error, Result};
use std::path::{Path, PathBuf};
use std::sync::mpsc::sync_channel;

#[derive(Parser)]
#[command(name = "releu", version, about = "Lagrangian relativistic Euler simulator with a vacuum boundary")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the initial slice and the data validation report.
    Init {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Integrate to `run.t_end`, writing snapshots and `monitor.csv`.
    Run {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Norm, energy and vorticity reports for a snapshot series.
    Diagnose {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        snapshots: String,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Also write every slice with its tau-derivative fields.
        #[arg(long)]
        dump_derivatives: bool,
    },
    /// Identity, lemma and convergence checks.
    Verify {
        #[arg(long, value_enum, default_value = "all")]
        suite: Suite,
    },
}

fn load_config(path: Option<&Path>) -> Result<SimConfig> {
    match path {
        Some(p) => parse_config(&std::fs::read_to_string(p)?),
        None => Ok(SimConfig::default()),
    }
}

fn init(config: &SimConfig, out: &Path) -> Result<()> {
    std::fs::create_dir_all(out)?;
    let (model, data, flow) = integrator::setup(config)?;
    write_snapshot(&out.join(snapshot_name(0)), &Snapshot::from_state(&model.grid, &flow, &data))?;
    let r = validate_physical_vacuum(&data, &model.grid, config.data.eps);
    report::write_csv(
        &out.join("data_validation.csv"),
        "c1,c2,sup_n,sup_n_ok,smallness_ok,d3_F_min,physical_vacuum_ok,ok",
        [format!(
            "{:.17e},{:.17e},{:.17e},{},{},{:.17e},{},{}",
            r.c1,
            r.c2,
            r.sup_n,
            r.sup_n_ok,
            r.eq125_ok,
            r.d_f3_min,
            r.physical_vacuum_ok,
            r.ok()
        )],
    )?;
    if !r.ok() {
        return Err(Error::Hypothesis(format!("initial data rejected: {r:?}")));
    }
    Ok(())
}

fn run(config: &SimConfig, out: &Path) -> Result<()> {
    std::fs::create_dir_all(out)?;
    let (tx, rx) = sync_channel::<(PathBuf, Snapshot)>(1);
    let writer = std::thread::spawn(move || -> Result<()> {
        for (path, snap) in rx {
            write_snapshot(&path, &snap)?;
        }
        Ok(())
    });
    let (model, data, flow) = integrator::setup(config)?;
    let grid = model.grid;
    let data_for_emit = data.clone();
    let mut index = 0;
    let result = integrator::run_model(model, data, flow, config, |f| {
        let snap = Snapshot::from_state(&grid, f, &data_for_emit);
        let path = out.join(snapshot_name(index));
        index += 1;
        tx.send((path, snap))
            .map_err(|_| Error::Io(std::io::Error::other("snapshot writer stopped")))
    });
    drop(tx);
    let written = writer.join().expect("snapshot writer panicked");
    let output = result?;
    written?;
    report::write_monitor(&out.join("monitor.csv"), &output.monitor)?;
    match output.abort {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn diagnose(config: &SimConfig, pattern: &str, out: &Path, dump: bool) -> Result<()> {
    std::fs::create_dir_all(out)?;
    let mut paths: Vec<PathBuf> = glob::glob(pattern)
        .map_err(|e| Error::Config(vec![format!("bad snapshot pattern `{pattern}`: {e}")]))?
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::Io(e.into()))?;
    paths.sort();
    if paths.is_empty() {
        return Err(Error::Io(std::io::Error::new(
            std::io::ErrorKind::NotFound,
            format!("no snapshots match `{pattern}`"),
        )));
    }
    let eos = Eos::new(config.eos.gamma)?;
    let p_max = config.diagnostics.p_max;
    let mut series = SeriesDiagnostics::new(p_max, config.diagnostics.tau_fd_step, config.run.cfl_safety);
    let mut reports = Vec::new();
    let mut failure = None;
    for (i, path) in paths.iter().enumerate() {
        let (grid, flow, data) = read_snapshot(path)?.to_state(path)?;
        let slice = Model::from_data(grid, eos, &data).and_then(|model| {
            let stack = series.stack(&model, &flow)?;
            let r = series.process_stack(&model, &stack)?;
            if dump {
                let name = format!("deriv_{i:06}.bin");
                write_snapshot(&out.join(name), &derivative_snapshot(&model, &data, &stack, p_max)?)?;
            }
            Ok(r)
        });
        match slice {
            Ok(r) => reports.push(r),
            Err(e @ (Error::Io(_) | Error::Snapshot { .. })) => return Err(e),
            Err(e) => {
                eprintln!("{}: skipped ({e})", path.display());
                failure.get_or_insert(e);
            }
        }
    }
    report::write_slice_reports(out, &reports)?;
    match failure {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn verify(suite: Suite) -> Result<()> {
    let checks = run_suite(suite)?;
    for c in &checks {
        println!("{c}");
    }
    let failed: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Error::Verification(failed.join(", ")))
    }
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Init { config, out } => load_config(config.as_deref()).and_then(|c| init(&c, &out)),
        Command::Run { config, out } => load_config(config.as_deref()).and_then(|c| run(&c, &out)),
        Command::Diagnose {
            config,
            snapshots,
            out,
            dump_derivatives,
        } => load_config(config.as_deref()).and_then(|c| diagnose(&c, &snapshots, &out, dump_derivatives)),
        Command::Verify { suite } => verify(suite),
    };
    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}

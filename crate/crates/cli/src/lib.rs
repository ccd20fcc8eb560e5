//! Command-line front end: `cvqkd <command> [--config FILE] [--out FILE] [--key=value ...]`.

pub mod config;
pub mod output;
pub mod validate;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::Parser;
use cvqkd::{run_figure3, run_figure4, run_figure5, run_sweep, SweepTable};

use config::{parse_config, Command, ConfigError, Format, Origin, RunConfig};
use validate::{run_validation, ValidateOptions};

/// Process exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Success = 0,
    ValidationFailed = 1,
    ConfigError = 2,
    NoConvergence = 3,
}

impl Status {
    pub fn code(self) -> i32 {
        self as i32
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "cvqkd",
    about = "Key rates for photon-subtracted CV-QKD over fixed and fading channels",
    after_help = "Any config key may also be given as --key=value, overriding the file."
)]
struct Cli {
    /// keyrate, fig3, fig4, fig5, validate or sweep
    command: String,
    /// `key = value` configuration file
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Output file; fig5 derives three files from its stem
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

/// Splits `--key=value` overrides for config keys from the clap-owned arguments.
fn split_overrides(args: Vec<String>) -> (Vec<String>, Vec<(String, String)>) {
    let mut rest = Vec::new();
    let mut overrides = Vec::new();
    for (i, a) in args.into_iter().enumerate() {
        let kv = a
            .strip_prefix("--")
            .and_then(|s| s.split_once('='))
            .filter(|(k, _)| i > 0 && *k != "config" && *k != "out");
        match kv {
            Some((k, v)) => overrides.push((k.to_string(), v.to_string())),
            None => rest.push(a),
        }
    }
    (rest, overrides)
}

fn load_config(
    path: Option<&Path>,
    overrides: &[(String, String)],
) -> Result<RunConfig, String> {
    let mut config = match path {
        Some(p) => {
            let text =
                fs::read_to_string(p).map_err(|e| format!("cannot read {}: {e}", p.display()))?;
            parse_config(&text).map_err(|e| format!("{}: {e}", p.display()))?
        }
        None => RunConfig::default(),
    };
    for (k, v) in overrides {
        config.set(k, v, Origin::CommandLine).map_err(|e: ConfigError| e.to_string())?;
    }
    config.validate().map_err(|e| e.to_string())?;
    Ok(config)
}

fn extension(format: Format) -> &'static str {
    format.as_str()
}

/// `<stem>_<suffix>.<ext>` next to `path`.
pub fn derived_path(path: &Path, suffix: &str, format: Format) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "fig5".into());
    path.with_file_name(format!("{stem}_{suffix}.{}", extension(format)))
}

struct Io<'a> {
    stdout: &'a mut dyn Write,
    stderr: &'a mut dyn Write,
}

impl Io<'_> {
    fn fail(&mut self, status: Status, message: impl std::fmt::Display) -> Status {
        let _ = writeln!(self.stderr, "cvqkd: {message}");
        status
    }
}

fn emit(
    io: &mut Io<'_>,
    out: Option<&Path>,
    table: &SweepTable,
    meta: &[String],
    format: Format,
) -> Result<(), String> {
    match out {
        Some(p) => output::write_table_file(p, table, meta, format).map_err(|e| e.to_string()),
        None => output::emit_table(&mut *io.stdout, table, meta, format)
            .map_err(|e| format!("cannot write standard output: {e}")),
    }
}

fn table_status(io: &mut Io<'_>, tables: &[&SweepTable]) -> Status {
    for t in tables {
        for f in &t.failures {
            if f.error.is_convergence_failure() {
                return io.fail(
                    Status::NoConvergence,
                    format!(
                        "{} {} dB at {} dB ({}): {}",
                        f.state, f.squeezing_db, f.mean_loss_db, f.channel, f.error
                    ),
                );
            }
        }
    }
    Status::Success
}

fn library_failure(io: &mut Io<'_>, e: cvqkd::Error) -> Status {
    let status = if e.is_convergence_failure() {
        Status::NoConvergence
    } else {
        Status::ConfigError
    };
    io.fail(status, e)
}

fn execute(io: &mut Io<'_>, command: Command, config: &RunConfig, out: Option<&Path>) -> Status {
    let format = config.format();
    let meta = config.describe(command);
    match command {
        Command::Validate => {
            let opts = ValidateOptions {
                cutoff: config.cutoff(),
                aperture_h: config.aperture_h.unwrap_or(1.0),
                quadrature_nodes: config
                    .quadrature_nodes
                    .unwrap_or(cvqkd::fading::DEFAULT_NODES),
            };
            let report = run_validation(&opts);
            let mut text = String::new();
            for m in &meta {
                text.push_str(&format!("# {m}\n"));
            }
            for c in &report.checks {
                text.push_str(&format!("{c}\n"));
            }
            let written = match out {
                Some(p) => fs::write(p, &text).map_err(|e| format!("cannot write {}: {e}", p.display())),
                None => io
                    .stdout
                    .write_all(text.as_bytes())
                    .map_err(|e| format!("cannot write standard output: {e}")),
            };
            if let Err(e) = written {
                return io.fail(Status::ConfigError, e);
            }
            if report.passed() {
                Status::Success
            } else {
                io.fail(Status::ValidationFailed, "validation failed")
            }
        }
        Command::Fig5 => {
            let tables = match run_figure5(&config.figure5()) {
                Ok(t) => t,
                Err(e) => return library_failure(io, e),
            };
            let parts = [
                ("xi", &tables.xi_surface),
                ("squeezing", &tables.squeezing_surface),
                ("xi1", &tables.ideal_xi_slice),
            ];
            for (suffix, table) in parts {
                let mut m = meta.clone();
                m.push(format!("table = {suffix}"));
                let path = out.map(|p| derived_path(p, suffix, format));
                if let Err(e) = emit(io, path.as_deref(), table, &m, format) {
                    return io.fail(Status::ConfigError, e);
                }
            }
            table_status(
                io,
                &[&tables.xi_surface, &tables.squeezing_surface, &tables.ideal_xi_slice],
            )
        }
        Command::Keyrate | Command::Fig3 | Command::Fig4 | Command::Sweep => {
            let spec = config.experiment(command);
            let result = match command {
                Command::Fig3 => run_figure3(&spec),
                Command::Fig4 => run_figure4(&spec),
                _ => run_sweep(&spec),
            };
            let table = match result {
                Ok(t) => t,
                Err(e) => return library_failure(io, e),
            };
            if let Err(e) = emit(io, out, &table, &meta, format) {
                return io.fail(Status::ConfigError, e);
            }
            table_status(io, &[&table])
        }
    }
}

/// Runs the CLI on `args` (including the program name) and returns the exit
/// status.
pub fn run(args: Vec<String>, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Status {
    let mut io = Io { stdout, stderr };
    let (rest, overrides) = split_overrides(args);
    let cli = match Cli::try_parse_from(rest) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let kind = e.kind();
            let text = e.render().to_string();
            if matches!(kind, ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(io.stdout, "{text}");
                return Status::Success;
            }
            let _ = write!(io.stderr, "{text}");
            return Status::ConfigError;
        }
    };
    let command: Command = match cli.command.parse() {
        Ok(c) => c,
        Err(e) => {
            let names: Vec<&str> = Command::ALL.iter().map(|c| c.as_str()).collect();
            return io.fail(Status::ConfigError, format!("{e} (expected one of {})", names.join(", ")));
        }
    };
    let config = match load_config(cli.config.as_deref(), &overrides) {
        Ok(c) => c,
        Err(e) => return io.fail(Status::ConfigError, e),
    };
    let out = cli.out.or_else(|| config.output.clone());
    execute(&mut io, command, &config, out.as_deref())
}

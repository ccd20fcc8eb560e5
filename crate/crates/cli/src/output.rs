//! Delimited table output.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use cvqkd::{SweepFailure, SweepTable};

use crate::config::Format;

pub const HEADER: [&str; 9] = [
    "state",
    "squeezing_db",
    "xi",
    "mean_loss_db",
    "channel",
    "T_opt",
    "P_c",
    "K",
    "PcK",
];

#[derive(Debug, thiserror::Error)]
#[error("cannot write {}: {source}", path.display())]
pub struct OutputError {
    pub path: PathBuf,
    #[source]
    pub source: io::Error,
}

/// Twelve significant digits in scientific notation.
pub fn number(x: f64) -> String {
    format!("{x:.11e}")
}

fn failure_line(f: &SweepFailure) -> String {
    format!(
        "# skipped: state={} squeezing_db={} xi={} mean_loss_db={} channel={}: {}",
        f.state, f.squeezing_db, f.xi, f.mean_loss_db, f.channel, f.error
    )
}

/// Writes `#` metadata, one `#` line per skipped grid point, the header and
/// the rows in table order. TMSV rows leave `T_opt` empty.
pub fn emit_table(
    mut out: impl Write,
    table: &SweepTable,
    metadata: &[String],
    format: Format,
) -> io::Result<()> {
    let sep = format.separator().to_string();
    for m in metadata {
        writeln!(out, "# {m}")?;
    }
    for f in &table.failures {
        writeln!(out, "{}", failure_line(f))?;
    }
    writeln!(out, "{}", HEADER.join(&sep))?;
    for r in &table.rows {
        let fields = [
            r.state.to_string(),
            number(r.squeezing_db),
            number(r.xi),
            number(r.mean_loss_db),
            r.channel.to_string(),
            r.t_opt.map(number).unwrap_or_default(),
            number(r.creation_probability),
            number(r.key_rate),
            number(r.weighted_rate),
        ];
        writeln!(out, "{}", fields.join(&sep))?;
    }
    out.flush()
}

/// [`emit_table`] into a freshly created file.
pub fn write_table_file(
    path: &Path,
    table: &SweepTable,
    metadata: &[String],
    format: Format,
) -> Result<(), OutputError> {
    let wrap = |source| OutputError {
        path: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(wrap)?;
    emit_table(BufWriter::new(file), table, metadata, format).map_err(wrap)
}

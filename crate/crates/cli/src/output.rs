use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use tempfile::NamedTempFile;

/// A temporary file beside the target, with ordinary permissions.
fn temp_in(dir: &Path) -> io::Result<NamedTempFile> {
    let mut builder = tempfile::Builder::new();
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        builder.permissions(std::fs::Permissions::from_mode(0o644));
    }
    builder.tempfile_in(dir)
}

use crate::CliError;

/// Provenance lines written at the top of every output file. Lines start
/// with `# @` so readers that skip comments also skip these.
#[derive(Debug, Clone)]
pub struct Metadata {
    pub command: &'static str,
    pub config_sha256: String,
    pub seed: u64,
    pub timestamp: bool,
}

impl Metadata {
    pub fn write<W: Write>(&self, out: &mut W) -> io::Result<()> {
        writeln!(out, "# @version cascade {}", env!("CARGO_PKG_VERSION"))?;
        writeln!(out, "# @command {}", self.command)?;
        writeln!(out, "# @config_sha256 {}", self.config_sha256)?;
        writeln!(out, "# @seed {}", self.seed)?;
        if self.timestamp {
            let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
            writeln!(out, "# @created_unix {secs}")?;
        }
        Ok(())
    }
}

/// Output directory; files are written to a temporary name beside the
/// target and renamed into place only once complete.
pub struct OutDir {
    dir: PathBuf,
    meta: Metadata,
    written: Vec<PathBuf>,
}

impl OutDir {
    pub fn create(dir: &Path, meta: Metadata) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Runtime(format!("cannot create output directory {}: {e}", dir.display())))?;
        Ok(OutDir { dir: dir.to_path_buf(), meta, written: Vec::new() })
    }

    pub fn write(
        &mut self,
        name: &str,
        body: impl FnOnce(&mut dyn Write) -> io::Result<()>,
    ) -> Result<PathBuf, CliError> {
        let path = self.dir.join(name);
        let io_err = |e: io::Error| CliError::Runtime(format!("writing {}: {e}", path.display()));
        let tmp = temp_in(&self.dir).map_err(io_err)?;
        {
            let mut w = BufWriter::new(tmp.as_file());
            self.meta.write(&mut w).map_err(io_err)?;
            body(&mut w).map_err(io_err)?;
            w.flush().map_err(io_err)?;
        }
        tmp.persist(&path).map_err(|e| io_err(e.error))?;
        self.written.push(path.clone());
        Ok(path)
    }

    /// A gnuplot script stub, written without metadata.
    pub fn write_plain(&mut self, name: &str, text: &str) -> Result<PathBuf, CliError> {
        let path = self.dir.join(name);
        let io_err = |e: io::Error| CliError::Runtime(format!("writing {}: {e}", path.display()));
        let mut tmp = temp_in(&self.dir).map_err(io_err)?;
        tmp.write_all(text.as_bytes()).map_err(io_err)?;
        tmp.persist(&path).map_err(|e| io_err(e.error))?;
        self.written.push(path.clone());
        Ok(path)
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }
}

/// Plot recipes, one per pipeline.
pub fn gnuplot_stub(command: &str) -> Option<&'static str> {
    Some(match command {
        "simulate" => {
            "set datafile separator ','\nset key autotitle columnhead\nset xlabel 'day'\nset ylabel 'fraction'\n\
             plot 'trajectory.csv' using 1:2 with lines title 'f', '' using 1:3 with lines title 'n_int', \
             '' using 1:4 with lines title 'n_ext'\n"
        }
        "sweep" => {
            "set datafile separator ','\nset xlabel 'p_int'\nset ylabel 'f'\n\
             plot '< grep ^up hysteresis.csv' using 2:3 with lines title 'up', \
             '< grep ^down hysteresis.csv' using 2:3 with lines title 'down'\n"
        }
        "riskmap" => {
            "set datafile separator ','\nset view map\nset palette maxcolors 3\n\
             regime(s) = (s eq 'I') ? 1 : (s eq 'II') ? 2 : 3\n\
             plot 'riskmap.csv' every ::1 using 1:2:(regime(strcol(3))) with image notitle\n"
        }
        "warning" => {
            "set datafile separator ','\nset key autotitle columnhead\nset xlabel 'p_ext'\nset ylabel 'rolling s.d.'\n\
             plot 'early_warning.csv' using 1:2 with linespoints title 'f', '' using 1:3 with linespoints title 'n_ext'\n"
        }
        "dfa" => {
            "set datafile separator ','\nset logscale xy\nset xlabel 'l'\nset ylabel 'F(l)'\n\
             plot 'dfa.csv' every ::1 using 1:2 with linespoints title 'F(l)'\n"
        }
        "calibrate" => {
            "set datafile separator ','\nset key autotitle columnhead\nset xlabel 'evaluation'\nset ylabel 'objective'\n\
             set logscale y\nplot 'trace.csv' using 1:6 with lines title 'objective'\n"
        }
        _ => return None,
    })
}

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use serde::Serialize;

use crate::error::CliError;
use crate::Format;

/// Where results go, and in which format.
pub struct Sink {
    path: Option<PathBuf>,
    pub format: Format,
}

impl Sink {
    pub fn new(path: Option<PathBuf>, format: Format) -> Self {
        Sink { path, format }
    }

    pub fn writer(&self) -> Result<Box<dyn Write>, CliError> {
        Ok(match &self.path {
            Some(p) => Box::new(BufWriter::new(
                File::create(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?,
            )),
            None => Box::new(BufWriter::new(io::stdout().lock())),
        })
    }

    pub fn json<T: Serialize>(&self, value: &T) -> Result<(), CliError> {
        let mut w = self.writer()?;
        serde_json::to_writer_pretty(&mut w, value)?;
        writeln!(w)?;
        w.flush()?;
        Ok(())
    }

    /// Writes `# key=value` comment lines, a header and the rows.
    pub fn csv(&self, comments: &[(&str, String)], header: &[String], rows: &[Vec<String>]) -> Result<(), CliError> {
        let mut w = self.writer()?;
        for (k, v) in comments {
            writeln!(w, "# {k}={v}")?;
        }
        {
            let mut out = csv::Writer::from_writer(&mut w);
            out.write_record(header)?;
            for r in rows {
                out.write_record(r)?;
            }
            out.flush()?;
        }
        w.flush()?;
        Ok(())
    }
}

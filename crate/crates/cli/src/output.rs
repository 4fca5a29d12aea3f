use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

use crate::error::{CliError, CliResult};

/// CSV writer over a file or standard output.
pub struct Output {
    writer: csv::Writer<Box<dyn Write>>,
    what: String,
}

impl Output {
    pub fn open(path: Option<&Path>) -> CliResult<Self> {
        let (sink, what): (Box<dyn Write>, String) = match path {
            Some(p) => (
                Box::new(File::create(p).map_err(|e| CliError::in_file(p, e))?),
                p.display().to_string(),
            ),
            None => (Box::new(io::stdout().lock()), "standard output".into()),
        };
        Ok(Output {
            writer: csv::Writer::from_writer(sink),
            what,
        })
    }

    pub fn row<I, T>(&mut self, record: I) -> CliResult<()>
    where
        I: IntoIterator<Item = T>,
        T: AsRef<[u8]>,
    {
        self.writer
            .write_record(record)
            .map_err(|e| CliError::Input(format!("{}: {e}", self.what)))
    }

    pub fn finish(mut self) -> CliResult<()> {
        self.writer
            .flush()
            .map_err(|e| CliError::Input(format!("{}: {e}", self.what)))
    }
}

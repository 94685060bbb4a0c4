//! JSON Lines ingestion and emission: one record per line, UTF-8, blank
//! lines ignored. Every parse error names the file and line.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::marker::PhantomData;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::CliError;

/// Streaming line-by-line reader producing one `T` per non-blank line.
pub struct JsonlReader<T> {
    lines: io::Lines<BufReader<File>>,
    path: String,
    line: usize,
    _marker: PhantomData<T>,
}

impl<T: DeserializeOwned> JsonlReader<T> {
    pub fn open(path: &Path) -> Result<JsonlReader<T>, CliError> {
        let shown = path.display().to_string();
        let file = File::open(path).map_err(|e| CliError::io(&shown, e))?;
        Ok(JsonlReader {
            lines: BufReader::new(file).lines(),
            path: shown,
            line: 0,
            _marker: PhantomData,
        })
    }

    /// 1-based line number of the most recently returned record.
    pub fn line(&self) -> usize {
        self.line
    }

    pub fn path(&self) -> &str {
        &self.path
    }
}

impl<T: DeserializeOwned> Iterator for JsonlReader<T> {
    type Item = Result<T, CliError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            self.line += 1;
            match self.lines.next()? {
                Err(e) => return Some(Err(CliError::io(&self.path, e))),
                Ok(text) if text.trim().is_empty() => continue,
                Ok(text) => {
                    return Some(serde_json::from_str(&text).map_err(|e| {
                        CliError::schema(&self.path, self.line, strip_position(&e))
                    }))
                }
            }
        }
    }
}

/// Serde reports positions within the single line it parsed; the reader's
/// own line number is the useful one, so the suffix goes.
pub fn strip_position(e: &serde_json::Error) -> String {
    let text = e.to_string();
    match text.rfind(" at line ") {
        Some(cut) => text[..cut].to_string(),
        None => text,
    }
}

/// Line-buffered sink: a file when a path is given, stdout otherwise.
pub struct JsonlWriter {
    out: BufWriter<Box<dyn Write>>,
    path: String,
}

impl JsonlWriter {
    pub fn create(path: Option<&Path>) -> Result<JsonlWriter, CliError> {
        let (sink, shown): (Box<dyn Write>, String) = match path {
            Some(p) => {
                let shown = p.display().to_string();
                let file = File::create(p).map_err(|e| CliError::io(&shown, e))?;
                (Box::new(file), shown)
            }
            None => (Box::new(io::stdout().lock()), "<stdout>".to_string()),
        };
        Ok(JsonlWriter { out: BufWriter::new(sink), path: shown })
    }

    pub fn write<T: Serialize>(&mut self, value: &T) -> Result<(), CliError> {
        serde_json::to_writer(&mut self.out, value)
            .map_err(|e| CliError::io(&self.path, e.into()))?;
        writeln!(self.out).map_err(|e| CliError::io(&self.path, e))
    }

    pub fn finish(mut self) -> Result<(), CliError> {
        self.out.flush().map_err(|e| CliError::io(&self.path, e))
    }
}

/// Writes arbitrary text output to a file or stdout.
pub fn write_text(path: Option<&Path>, content: &str) -> Result<(), CliError> {
    match path {
        Some(p) => {
            let shown = p.display().to_string();
            std::fs::write(p, content).map_err(|e| CliError::io(&shown, e))
        }
        None => {
            let mut out = io::stdout().lock();
            out.write_all(content.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| CliError::io("<stdout>", e))
        }
    }
}

use std::fmt;
use std::io::Write;
use std::path::Path;

use mixfan::classifier::{from_json, to_json};
use mixfan::{Classifier, Dataset, Schema};

#[derive(Debug)]
pub enum CliError {
    /// Bad invocation: exit status 2.
    Usage(String),
    /// Failure inside the pipeline: exit status 1.
    Pipeline(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Pipeline(m) => f.write_str(m),
        }
    }
}

impl From<mixfan::Error> for CliError {
    fn from(e: mixfan::Error) -> Self {
        CliError::Pipeline(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn usage<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Usage(msg.into()))
}

pub fn require_file(path: &Path) -> CliResult<()> {
    if path.is_file() {
        Ok(())
    } else {
        usage(format!("file not found: {}", path.display()))
    }
}

fn read(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::Pipeline(format!("{}: {e}", path.display())))
}

pub fn read_schema(path: &Path) -> CliResult<Schema> {
    Schema::from_json(&read(path)?).map_err(|e| CliError::Pipeline(format!("{}: {e}", path.display())))
}

pub fn read_model(path: &Path) -> CliResult<Classifier> {
    from_json(&read(path)?).map_err(|e| CliError::Pipeline(format!("{}: {e}", path.display())))
}

pub fn read_dataset(path: &Path, schema: &Schema, missing: &str) -> CliResult<Dataset> {
    Dataset::parse_csv(&read(path)?, schema, missing).map_err(|e| CliError::Pipeline(format!("{}: {e}", path.display())))
}

/// Writes through a temporary file in the target directory, so readers never
/// see a partial file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> CliResult<()> {
    let fail = |e: std::io::Error| CliError::Pipeline(format!("cannot write {}: {e}", path.display()));
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(fail)?;
    tmp.write_all(contents).map_err(fail)?;
    tmp.persist(path).map_err(|e| fail(e.error))?;
    Ok(())
}

pub fn write_model(path: &Path, model: &Classifier) -> CliResult<()> {
    write_atomic(path, to_json(model).as_bytes())
}

pub fn write_dataset(path: &Path, ds: &Dataset, missing: &str) -> CliResult<()> {
    let mut buf = Vec::new();
    ds.write_csv(&mut buf, missing)?;
    write_atomic(path, &buf)
}

/// Prints to stdout; a closed pipe (`| head`) is not an error.
pub fn say(text: &str) {
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(text.as_bytes()).and_then(|()| out.flush());
}

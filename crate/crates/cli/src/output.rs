//! Error reporting, exit codes and atomic file output.

use std::fmt;
use std::io::Write;
use std::path::Path;

use serde_json::{json, Value};

pub const EXIT_INPUT: i32 = 2;
pub const EXIT_PAYLOAD: i32 = 3;

#[derive(Debug)]
pub struct CliError {
    pub kind: &'static str,
    pub message: String,
    pub code: i32,
}

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        Self {
            kind: "input",
            message: message.into(),
            code: EXIT_INPUT,
        }
    }

    pub fn io(path: &Path, err: std::io::Error) -> Self {
        Self {
            kind: "io",
            message: format!("{}: {err}", path.display()),
            code: EXIT_INPUT,
        }
    }

    pub fn to_json(&self) -> Value {
        json!({
            "error": self.kind,
            "message": self.message,
            "exit_code": self.code,
        })
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.kind, self.message)
    }
}

impl From<anchor_mesh::Error> for CliError {
    fn from(e: anchor_mesh::Error) -> Self {
        use anchor_mesh::Error;
        match e {
            Error::Payload(_) | Error::BaseMismatch => Self {
                kind: "payload",
                message: e.to_string(),
                code: EXIT_PAYLOAD,
            },
            _ => Self {
                kind: "input",
                message: e.to_string(),
                code: EXIT_INPUT,
            },
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Writes through a temporary file in the destination directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(path, e))?;
    tmp.as_file()
        .sync_all()
        .map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

pub fn read_bytes(path: &Path) -> CliResult<Vec<u8>> {
    std::fs::read(path).map_err(|e| CliError::io(path, e))
}

pub fn read_mesh(path: &Path) -> CliResult<anchor_mesh::Mesh> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    anchor_mesh::mesh::load_mesh(&text)
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

/// JSON number, or the string `"inf"` for an infinite PSNR.
pub fn psnr_json(v: f64) -> Value {
    if v.is_infinite() {
        json!("inf")
    } else {
        json!(v)
    }
}

pub fn psnr_text(v: f64) -> String {
    if v.is_infinite() {
        "inf".to_string()
    } else {
        format!("{v:.6}")
    }
}

pub fn pretty(value: &Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("JSON values serialize");
    s.push('\n');
    s
}

/// Writes to stdout; a closed pipe (e.g. `| head`) is not an error.
pub fn stdout(text: &str) {
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(text.as_bytes()).and_then(|()| out.flush());
}

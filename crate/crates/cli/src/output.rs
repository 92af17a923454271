//! Tables for people, canonical JSON for scripts.

use std::io::Write;

use serde::Serialize;
use videomap_core::{canonical, Error};

pub struct Output {
    json: bool,
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    code: &'a str,
    message: String,
}

impl Output {
    pub fn new(json: bool) -> Self {
        Output { json }
    }

    /// Prints `value` as JSON or the rows produced by `table`.
    pub fn emit<T: Serialize>(&self, value: &T, table: impl FnOnce() -> Vec<String>) -> videomap_core::Result<()> {
        let mut stdout = std::io::stdout().lock();
        if self.json {
            let bytes = canonical::to_vec_pretty(value)?;
            stdout.write_all(&bytes)?;
        } else {
            for line in table() {
                writeln!(stdout, "{line}")?;
            }
        }
        Ok(())
    }

    pub fn warn(&self, message: &str) {
        log::warn!("{message}");
        if !self.json {
            eprintln!("warning: {message}");
        }
    }

    pub fn error(&self, err: &Error) {
        if self.json {
            let body = ErrorBody {
                code: err.code(),
                message: err.to_string(),
            };
            if let Ok(bytes) = canonical::to_vec(&body) {
                eprintln!("{}", String::from_utf8_lossy(&bytes));
            }
        } else {
            eprintln!("error [{}]: {err}", err.code());
        }
    }
}

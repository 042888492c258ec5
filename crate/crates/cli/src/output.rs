use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use fhn_core::Error;
use serde::Serialize;
use serde_json::{Map, Value};

/// A failed run and the exit code it maps to.
#[derive(Debug)]
pub enum Failure {
    Config(String),
    Integration(String),
    Search(String),
    Io(String),
}

impl Failure {
    pub fn code(&self) -> i32 {
        match self {
            Failure::Config(_) => 2,
            Failure::Integration(_) => 3,
            Failure::Search(_) => 4,
            Failure::Io(_) => 1,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Integration(m) | Failure::Search(m) | Failure::Io(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let m = e.to_string();
        match e {
            Error::StepSizeCollapse { .. } | Error::NonFinite { .. } => Failure::Integration(m),
            Error::NoCycle
            | Error::ConvergedToEquilibrium(_)
            | Error::BracketFailure { .. }
            | Error::NoRelaxationCycle
            | Error::DegenerateLoop(_) => Failure::Search(m),
            _ => Failure::Config(m),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

pub type Outcome = std::result::Result<(), Failure>;

#[derive(Debug, Serialize)]
pub struct Timing {
    pub op: String,
    pub seconds: f64,
}

/// Written to `manifest.json` at the end of every run.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config: Value,
    pub status: &'static str,
    pub exit_code: i32,
    pub error: Option<String>,
    pub warnings: Vec<String>,
    pub timings: Vec<Timing>,
    pub outputs: Vec<String>,
    pub results: Map<String, Value>,
}

/// Output directory plus the manifest being assembled.
pub struct Run {
    pub out: PathBuf,
    pub tol: f64,
    pub manifest: RunManifest,
}

/// 17 significant digits.
pub fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

pub fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

impl Run {
    pub fn new(out: &Path, tol: f64, command: &str, config: Value) -> Self {
        Self {
            out: out.to_path_buf(),
            tol,
            manifest: RunManifest {
                tool: "fhn",
                version: env!("CARGO_PKG_VERSION"),
                command: command.to_string(),
                config,
                status: "ok",
                exit_code: 0,
                error: None,
                warnings: Vec::new(),
                timings: Vec::new(),
                outputs: Vec::new(),
                results: Map::new(),
            },
        }
    }

    pub fn timed<T>(&mut self, op: &str, f: impl FnOnce() -> T) -> T {
        let t = Instant::now();
        let v = f();
        self.manifest.timings.push(Timing { op: op.to_string(), seconds: t.elapsed().as_secs_f64() });
        v
    }

    pub fn warn(&mut self, w: impl Into<String>) {
        let w = w.into();
        eprintln!("warning: {w}");
        self.manifest.warnings.push(w);
    }

    pub fn result(&mut self, key: &str, v: impl Serialize) {
        let v = serde_json::to_value(v).unwrap_or(Value::Null);
        self.manifest.results.insert(key.to_string(), v);
    }

    fn ensure_dir(&self) -> std::io::Result<()> {
        fs::create_dir_all(&self.out)
    }

    /// Writes a CSV file; every row must match the header width.
    pub fn csv(&mut self, name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Outcome {
        self.ensure_dir()?;
        let path = self.out.join(name);
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_path(&path)?;
        w.write_record(header)?;
        for r in rows {
            debug_assert_eq!(r.len(), header.len());
            w.write_record(&r)?;
        }
        w.flush()?;
        self.manifest.outputs.push(name.to_string());
        Ok(())
    }

    pub fn json(&mut self, name: &str, v: &impl Serialize) -> Outcome {
        self.ensure_dir()?;
        let s = serde_json::to_string_pretty(v).map_err(|e| Failure::Io(e.to_string()))?;
        fs::write(self.out.join(name), s + "\n")?;
        self.manifest.outputs.push(name.to_string());
        Ok(())
    }

    /// Records the outcome and writes `manifest.json`; returns the exit code.
    pub fn finish(mut self, outcome: &Outcome) -> i32 {
        if let Err(f) = outcome {
            self.manifest.status = "error";
            self.manifest.exit_code = f.code();
            self.manifest.error = Some(f.message().to_string());
            eprintln!("error: {}", f.message());
        }
        let code = self.manifest.exit_code;
        let write = self
            .ensure_dir()
            .and_then(|_| {
                let s = serde_json::to_string_pretty(&self.manifest).expect("manifest serializes");
                fs::write(self.out.join("manifest.json"), s + "\n")
            });
        if let Err(e) = write {
            eprintln!("error: cannot write manifest: {e}");
            return if code == 0 { 1 } else { code };
        }
        code
    }
}

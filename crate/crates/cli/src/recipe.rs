//! Recipes: a TOML file with one `[[run]]` table per command line.
//!
//! ```toml
//! description = "trajectories for several eps"
//! [[run]]
//! name = "eps-0.1"
//! command = "simulate"
//! args = { eps = 0.1, x0 = -2.8, y0 = 1.64, tmax = 20.0 }
//! ```
//!
//! Keys become `--key value` flags (underscores turn into hyphens), `true`
//! becomes a bare flag and arrays repeat the flag. Each run writes into
//! `<out>/<name>/`.

use std::fs;

use clap::Parser;
use serde::Deserialize;
use serde_json::json;
use toml::Value;

use crate::args::{Cli, RecipeArgs};
use crate::output::{Failure, Outcome, Run};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Recipe {
    #[serde(default)]
    description: String,
    run: Vec<Entry>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Entry {
    name: String,
    command: String,
    #[serde(default)]
    args: toml::Table,
}

fn scalar(v: &Value) -> Result<String, Failure> {
    match v {
        Value::Float(f) => Ok(format!("{f:?}")),
        Value::Integer(i) => Ok(i.to_string()),
        Value::String(s) => Ok(s.clone()),
        other => Err(Failure::Config(format!("unsupported recipe value {other}"))),
    }
}

fn argv(entry: &Entry, cli: &Cli) -> Result<Vec<String>, Failure> {
    if entry.command == "recipe" {
        return Err(Failure::Config("recipes cannot nest".into()));
    }
    if entry.name.is_empty() || entry.name.contains(['/', '\\']) || entry.name.starts_with('.') {
        return Err(Failure::Config(format!("bad run name {:?}", entry.name)));
    }
    let out = cli.out.join(&entry.name);
    let mut v = vec!["fhn".to_string(), "--out".into(), out.to_string_lossy().into_owned(), "--tol".into(), cli.tol.to_string()];
    v.push(entry.command.clone());
    for (k, val) in &entry.args {
        let flag = format!("--{}", k.replace('_', "-"));
        match val {
            Value::Boolean(true) => v.push(flag),
            Value::Boolean(false) => {}
            Value::Array(items) => {
                for it in items {
                    v.push(flag.clone());
                    v.push(scalar(it)?);
                }
            }
            other => {
                v.push(flag);
                v.push(scalar(other)?);
            }
        }
    }
    Ok(v)
}

pub fn run_recipe(run: &mut Run, cli: &Cli, a: &RecipeArgs) -> Outcome {
    let text = fs::read_to_string(&a.file).map_err(|e| Failure::Config(format!("{}: {e}", a.file.display())))?;
    let recipe: Recipe = toml::from_str(&text).map_err(|e| Failure::Config(format!("{}: {e}", a.file.display())))?;
    // parse everything before running anything
    let mut parsed = Vec::new();
    for e in &recipe.run {
        let v = argv(e, cli)?;
        let c = Cli::try_parse_from(&v).map_err(|err| Failure::Config(format!("run {:?}: {}", e.name, err.kind())))?;
        parsed.push((e.name.clone(), c));
    }
    run.result("description", &recipe.description);
    let mut codes = Vec::new();
    let mut first_failure = None;
    for (name, c) in &parsed {
        let code = crate::execute(c);
        codes.push(json!({ "name": name, "exit_code": code }));
        if code != 0 && first_failure.is_none() {
            first_failure = Some((name.clone(), code));
        }
    }
    run.result("runs", codes);
    match first_failure {
        None => Ok(()),
        Some((name, 3)) => Err(Failure::Integration(format!("run {name:?} failed"))),
        Some((name, 4)) => Err(Failure::Search(format!("run {name:?} failed"))),
        Some((name, 1)) => Err(Failure::Io(format!("run {name:?} failed"))),
        Some((name, _)) => Err(Failure::Config(format!("run {name:?} failed"))),
    }
}

//! Cartesian parameter sweeps over any subcommand.

use std::collections::{BTreeMap, BTreeSet};
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use super::{execute, CliError, Metrics, EXIT_OK};
use crate::io::{describe_cell, RunDir, SweepConfig};

/// Environment variable capping the number of concurrently running cells.
pub const THREADS_ENV: &str = "FCHLAB_THREADS";

/// Keys folded into `--u0` when no explicit `u0` is given.
const PROFILE_KEYS: [&str; 4] = ["profile", "amp", "k", "width"];

/// Subcommands that take `--out-dir`.
const WRITES_DIR: [&str; 4] = ["simulate", "picard", "bony-check", "commutator-audit"];

struct CellResult {
    status: &'static str,
    exit_code: i32,
    message: String,
    metrics: Metrics,
    stdout: Vec<u8>,
}

fn cell_argv(command: &str, cell: &[(String, String)], cell_dir: &Path) -> Vec<OsString> {
    let mut argv: Vec<OsString> = vec!["fchlab".into(), command.into()];
    let lookup = |k: &str| cell.iter().find(|(key, _)| key == k).map(|(_, v)| v.as_str());
    for (k, v) in cell {
        if k == "command" || k == "out_dir" || k == "out-dir" {
            continue;
        }
        if PROFILE_KEYS.contains(&k.as_str()) && lookup("u0").is_none() {
            continue;
        }
        let flag = format!("--{}", k.replace('_', "-"));
        match v.as_str() {
            "true" => argv.push(flag.into()),
            "false" => {}
            _ => {
                argv.push(flag.into());
                argv.push(v.into());
            }
        }
    }
    if lookup("u0").is_none() && PROFILE_KEYS.iter().any(|k| lookup(k).is_some()) {
        let kind = lookup("profile").unwrap_or("cosine");
        let amp = lookup("amp").unwrap_or("0.05");
        let second = if kind == "cosine" {
            lookup("k").unwrap_or("1")
        } else {
            lookup("width").unwrap_or("1")
        };
        argv.push("--u0".into());
        argv.push(format!("{kind}:{amp},{second}").into());
    }
    if WRITES_DIR.contains(&command) {
        argv.push("--out-dir".into());
        argv.push(cell_dir.as_os_str().to_owned());
    }
    argv
}

fn run_cell(command: &str, cell: &[(String, String)], cell_dir: &Path) -> CellResult {
    let argv = cell_argv(command, cell, cell_dir);
    let mut stdout = Vec::new();
    if let Err(e) = fs::create_dir_all(cell_dir) {
        return CellResult {
            status: "invalid",
            exit_code: 1,
            message: e.to_string(),
            metrics: Metrics::new(),
            stdout,
        };
    }
    match execute(&argv, &mut stdout) {
        Ok(metrics) => CellResult {
            status: "ok",
            exit_code: EXIT_OK,
            message: String::new(),
            metrics,
            stdout,
        },
        Err(e) => {
            let code = e.exit_code();
            CellResult {
                status: if code == super::EXIT_NUMERICAL { "numerical_failure" } else { "invalid" },
                exit_code: code,
                message: e.to_string().lines().next().unwrap_or("").to_string(),
                metrics: Metrics::new(),
                stdout,
            }
        }
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn thread_cap() -> Result<Option<usize>, CliError> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::Invalid(format!("{THREADS_ENV} = {v:?} is not a positive integer"))),
        },
        Err(_) => Ok(None),
    }
}

pub(super) fn run_sweep(
    config: &Path,
    out_dir: &Path,
    flags: BTreeMap<String, String>,
    out: &mut dyn Write,
) -> Result<Metrics, CliError> {
    let text = fs::read_to_string(config).map_err(|e| CliError::Invalid(format!("{}: {e}", config.display())))?;
    let cfg = SweepConfig::parse(&text)?;
    let command = match cfg.get("command") {
        Some([c]) => c.clone(),
        Some(_) => return Err(CliError::Invalid("exactly one command = line is required".into())),
        None => return Err(CliError::Invalid("config lacks a command = line".into())),
    };
    if command == "sweep" {
        return Err(CliError::Invalid("sweeps cannot nest".into()));
    }
    let threads = thread_cap()?;
    let axes: Vec<String> = cfg.axes().into_iter().map(String::from).collect();
    let cells = cfg.cells();

    let mut dir = RunDir::create(out_dir, "sweep", flags)?;
    dir.set_params(serde_json::json!({ "config": text, "command": command, "cells": cells.len() }));

    let work = |(i, cell): (usize, &Vec<(String, String)>)| run_cell(&command, cell, &out_dir.join(format!("cell_{i:04}")));
    let results: Vec<CellResult> = match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Invalid(e.to_string()))?
            .install(|| cells.par_iter().enumerate().map(work).collect()),
        None => cells.par_iter().enumerate().map(work).collect(),
    };

    let metric_keys: BTreeSet<&String> = results.iter().flat_map(|r| r.metrics.keys()).collect();
    let mut header: Vec<String> = vec!["cell".into()];
    header.extend(axes.iter().cloned());
    header.extend(["status", "exit_code", "message"].map(String::from));
    header.extend(metric_keys.iter().map(|k| k.to_string()));
    let mut summary = header.iter().map(|h| csv_field(h)).collect::<Vec<_>>().join(",");
    summary.push('\n');
    let mut failures = 0;
    for (i, (cell, r)) in cells.iter().zip(&results).enumerate() {
        if r.exit_code != EXIT_OK {
            failures += 1;
        }
        let mut row = vec![format!("cell_{i:04}")];
        for a in &axes {
            row.push(cell.iter().find(|(k, _)| k == a).map_or(String::new(), |(_, v)| v.clone()));
        }
        row.push(r.status.to_string());
        row.push(r.exit_code.to_string());
        row.push(r.message.clone());
        for k in &metric_keys {
            row.push(r.metrics.get(*k).cloned().unwrap_or_default());
        }
        summary.push_str(&row.iter().map(|c| csv_field(c)).collect::<Vec<_>>().join(","));
        summary.push('\n');
        dir.write(&format!("cell_{i:04}/stdout.txt"), &r.stdout)?;
        dir.write(&format!("cell_{i:04}/cell.txt"), describe_cell(cell).as_bytes())?;
    }
    dir.write("summary.csv", summary.as_bytes())?;
    dir.finish()?;
    writeln!(
        out,
        "sweep: {} cells, {} failed, summary in {}",
        cells.len(),
        failures,
        out_dir.join("summary.csv").display()
    )?;
    let mut m = Metrics::new();
    m.insert("cells".into(), cells.len().to_string());
    m.insert("failures".into(), failures.to_string());
    Ok(m)
}

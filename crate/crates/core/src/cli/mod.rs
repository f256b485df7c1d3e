//! Command-line front end. Exit codes: 0 success, 1 invalid input or usage,
//! 2 numerical failure (blow-up, iteration failure, non-finite values).

mod sweep;

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::analyticity::{decay_series, es_series, DECAY_FLOOR};
use crate::bony::{bony_check, commutator_bound_audit, AuditConfig};
use crate::error::FchError;
use crate::evolution::{integrate, SolverConfig, TrajectoryRecord};
use crate::io::{fmt_f64, read_run_snapshots, read_snapshot, Csv, NamedProfile, RunDir, Snapshot, MANIFEST_NAME};
use crate::littlewood_paley::{besov_blocks, besov_norm, BesovSpec, Lebesgue, Summation};
use crate::model::{FchParams, Form};
use crate::picard::{audited_c_hat, bound_check, lifespan, picard_run};
use crate::spectral::GridSpec;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{}", .0.render())]
    Usage(#[from] clap::Error),
    #[error(transparent)]
    Fch(#[from] FchError),
    #[error("{0}")]
    Invalid(String),
    #[error("cannot write output: {0}")]
    Output(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Fch(e) if e.is_numerical() => EXIT_NUMERICAL,
            _ => EXIT_INVALID,
        }
    }
}

/// Headline numbers of a finished command, used for sweep summaries.
pub type Metrics = BTreeMap<String, String>;

#[derive(Parser, Debug)]
#[command(name = "fchlab", version, about = "Fractional Camassa-Holm numerical laboratory")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Integrate the equation and record norms and snapshots
    Simulate(SimulateArgs),
    /// Run the constructive iteration and its diagnostics
    Picard(PicardArgs),
    /// Besov norm and per-block breakdown of a snapshot
    Besov(BesovArgs),
    /// Bony closure and commutator-splitting defects on a random ensemble
    BonyCheck(BonyCheckArgs),
    /// Empirical commutator-bound ratios on a random ensemble
    CommutatorAudit(AuditArgs),
    /// Lifespan estimate for given data and constant
    Lifespan(LifespanArgs),
    /// Analyticity diagnostics over a simulation run directory
    Analyticity(AnalyticityArgs),
    /// Run a parameter sweep from a key = value config file
    Sweep(SweepArgs),
}

#[derive(Args, Debug, Clone)]
struct GridArgs {
    /// Grid points [default: 256, or the snapshot's]
    #[arg(long)]
    n: Option<usize>,
    /// Period length [default: 2π, or the snapshot's]
    #[arg(long)]
    length: Option<f64>,
}

impl GridArgs {
    fn resolve(&self, profile: &NamedProfile) -> Result<GridSpec, CliError> {
        if let Some(g) = profile.snapshot_grid()? {
            if self.n.is_some_and(|n| n != g.n()) || self.length.is_some_and(|l| l != g.length()) {
                return Err(CliError::Invalid(format!(
                    "--n/--length disagree with the snapshot grid (L = {}, N = {})",
                    g.length(),
                    g.n()
                )));
            }
            return Ok(g);
        }
        Ok(GridSpec::new(self.length.unwrap_or(TAU), self.n.unwrap_or(256))?)
    }
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long)]
    nu: f64,
    /// direct_11, nonlocal_31 or simplified_32
    #[arg(long, default_value = "nonlocal_31")]
    form: Form,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long, default_value_t = 1e-3)]
    dt: f64,
    #[arg(long, default_value_t = 1.0)]
    t_end: f64,
    /// cosine:amp,k | gaussian:amp,width | sech:amp,width | snapshot path
    #[arg(long)]
    u0: NamedProfile,
    #[arg(long)]
    out_dir: PathBuf,
    /// Steps between recorded snapshots
    #[arg(long, default_value_t = 10)]
    monitor_stride: usize,
    #[arg(long, default_value_t = 0.5)]
    cfl: f64,
    /// ‖u_x‖∞ above which the run stops with a blow-up report
    #[arg(long, default_value_t = 1e3)]
    blowup_threshold: f64,
}

#[derive(Args, Debug)]
struct PicardArgs {
    #[arg(long)]
    nu: f64,
    #[arg(long, default_value_t = 12)]
    n_max: usize,
    #[arg(long, required_unless_present = "auto_c", conflicts_with = "auto_c")]
    c_hat: Option<f64>,
    /// Estimate the constant with a commutator audit on the same grid
    #[arg(long)]
    auto_c: bool,
    /// Audit ensemble size for --auto-c
    #[arg(long, default_value_t = 64)]
    ensemble: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    u0: NamedProfile,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long, default_value_t = 40)]
    time_steps: usize,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args, Debug)]
struct BesovArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    s: f64,
    /// 2 or inf
    #[arg(long, default_value = "2")]
    p: Lebesgue,
    /// 1, 2 or inf
    #[arg(long, default_value = "1")]
    r: Summation,
}

#[derive(Args, Debug)]
struct BonyCheckArgs {
    /// Exponents for the splitting check (repeatable)
    #[arg(long = "nu", default_values_t = [1.2, 1.5, 2.0])]
    nus: Vec<f64>,
    #[arg(long, default_value_t = 512)]
    n: usize,
    #[arg(long, default_value_t = TAU)]
    length: f64,
    #[arg(long, default_value_t = 100)]
    ensemble: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct AuditArgs {
    #[arg(long)]
    nu: f64,
    #[arg(long, default_value_t = 256)]
    grid_n: usize,
    #[arg(long, default_value_t = TAU)]
    length: f64,
    #[arg(long, default_value_t = 64)]
    ensemble: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct LifespanArgs {
    #[arg(long)]
    u0: NamedProfile,
    #[arg(long)]
    nu: f64,
    #[arg(long)]
    c_hat: f64,
    #[command(flatten)]
    grid: GridArgs,
}

#[derive(Args, Debug)]
struct AnalyticityArgs {
    #[arg(long)]
    run_dir: PathBuf,
    /// Scale parameters in (0, 1] (repeatable)
    #[arg(long = "s", default_values_t = [0.3, 0.6])]
    scales: Vec<f64>,
    #[arg(long, default_value_t = 24)]
    kmax: usize,
    /// Decay-fit floor relative to the largest coefficient
    #[arg(long, default_value_t = DECAY_FLOOR)]
    floor: f64,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
}

/// Parses `args` (program name first), runs the command and returns the
/// exit code. Help and version requests print to `out` and succeed.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = args.into_iter().map(Into::into).collect();
    match execute(&argv, out) {
        Ok(_) => EXIT_OK,
        Err(CliError::Usage(e)) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = write!(out, "{}", e.render());
            EXIT_OK
        }
        Err(CliError::Usage(e)) => {
            let _ = write!(err, "{}", e.render());
            EXIT_INVALID
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

/// Parses and runs one command, writing its report to `out`.
pub fn execute(argv: &[OsString], out: &mut dyn Write) -> Result<Metrics, CliError> {
    let cli = Cli::try_parse_from(argv)?;
    let flags = flag_map(argv);
    match cli.command {
        Command::Simulate(a) => simulate(&a, flags, out),
        Command::Picard(a) => picard(&a, flags, out),
        Command::Besov(a) => besov(&a, out),
        Command::BonyCheck(a) => bony(&a, flags, out),
        Command::CommutatorAudit(a) => audit(&a, flags, out),
        Command::Lifespan(a) => lifespan_cmd(&a, out),
        Command::Analyticity(a) => analyticity(&a, flags, out),
        Command::Sweep(a) => sweep::run_sweep(&a.config, &a.out_dir, flags, out),
    }
}

/// `--key value` pairs after the subcommand; repeated keys are joined by
/// commas and bare switches map to `true`.
fn flag_map(argv: &[OsString]) -> BTreeMap<String, String> {
    let words: Vec<String> = argv.iter().skip(2).map(|a| a.to_string_lossy().into_owned()).collect();
    let mut map: BTreeMap<String, String> = BTreeMap::new();
    let mut i = 0;
    while i < words.len() {
        if let Some(key) = words[i].strip_prefix("--") {
            let (key, value) = match key.split_once('=') {
                Some((k, v)) => (k.to_string(), v.to_string()),
                None if i + 1 < words.len() && !words[i + 1].starts_with("--") => {
                    i += 1;
                    (key.to_string(), words[i].clone())
                }
                None => (key.to_string(), "true".to_string()),
            };
            map.entry(key)
                .and_modify(|v| {
                    v.push(',');
                    v.push_str(&value);
                })
                .or_insert(value);
        }
        i += 1;
    }
    map
}

fn metric(m: &mut Metrics, key: &str, v: f64) {
    m.insert(key.to_string(), fmt_f64(v));
}

fn write_record(dir: &mut RunDir, record: &TrajectoryRecord) -> Result<(), CliError> {
    for (i, (u, &t)) in record.snapshots.iter().zip(&record.times).enumerate() {
        dir.write_snapshot(&format!("snap_{i:05}.bin"), &Snapshot::new(u.clone(), t, record.nu))?;
    }
    let mut csv = Csv::with_header(&["t", "besov_s0", "l2", "linf_ux", "mass"]);
    for s in &record.norms {
        csv.numeric_row(&[s.t, s.besov_s0, s.l2, s.linf_ux, s.mass]);
    }
    dir.write("norms.csv", csv.as_str().as_bytes())?;
    Ok(())
}

fn simulate(a: &SimulateArgs, flags: BTreeMap<String, String>, out: &mut dyn Write) -> Result<Metrics, CliError> {
    let grid = a.grid.resolve(&a.u0)?;
    let params = FchParams::new(a.nu, a.form, grid)?;
    let u0 = a.u0.field(grid)?;
    let cfg = SolverConfig {
        dt: a.dt,
        t_end: a.t_end,
        cfl_safety: a.cfl,
        monitor_stride: a.monitor_stride,
        blowup_threshold: a.blowup_threshold,
    };
    cfg.validate()?;
    let mut dir = RunDir::create(&a.out_dir, "simulate", flags)?;
    dir.set_grid(&grid);
    dir.set_params(json!({
        "nu": a.nu,
        "form": a.form.tag(),
        "dt": a.dt,
        "t_end": a.t_end,
        "cfl_safety": a.cfl,
        "monitor_stride": a.monitor_stride,
        "blowup_threshold": a.blowup_threshold,
    }));
    let (record, blowup) = match integrate(&u0, &cfg, &params) {
        Ok(r) => (r, None),
        Err(FchError::BlowUp(rep)) => (rep.record.clone(), Some(rep)),
        Err(e) => return Err(e.into()),
    };
    write_record(&mut dir, &record)?;
    if let Some(rep) = &blowup {
        let text = json!({
            "reason": rep.reason,
            "t_cross": rep.t_cross,
            "step": rep.step,
            "t_last": rep.t_last,
            "linf_ux": rep.linf_ux,
        });
        dir.write("blowup.json", serde_json::to_string_pretty(&text).unwrap().as_bytes())?;
        dir.write_snapshot("blowup_last.bin", &Snapshot::new(rep.field.clone(), rep.t_last, a.nu))?;
    }
    dir.finish()?;
    if let Some(rep) = blowup {
        return Err(FchError::BlowUp(rep).into());
    }

    let mut m = Metrics::new();
    let last = record.norms.last().copied();
    metric(&mut m, "final_t", record.final_time().unwrap_or(0.0));
    metric(&mut m, "mass_drift", record.mass_drift());
    if let Some(s) = last {
        metric(&mut m, "final_besov_s0", s.besov_s0);
        metric(&mut m, "final_linf_ux", s.linf_ux);
    }
    m.insert("snapshots".into(), record.snapshots.len().to_string());
    writeln!(
        out,
        "simulate: {} snapshots to t = {}, mass drift {:.3e}, output in {}",
        record.snapshots.len(),
        record.final_time().unwrap_or(0.0),
        record.mass_drift(),
        a.out_dir.display()
    )?;
    Ok(m)
}

fn picard(a: &PicardArgs, flags: BTreeMap<String, String>, out: &mut dyn Write) -> Result<Metrics, CliError> {
    let grid = a.grid.resolve(&a.u0)?;
    let params = FchParams::new(a.nu, Form::Simplified32, grid)?;
    let u0 = a.u0.field(grid)?;
    let (c_hat, c_source) = match a.c_hat {
        Some(c) => (c, "given"),
        None => (audited_c_hat(&grid, a.nu, a.ensemble, a.seed)?, "audit"),
    };
    let est = lifespan(&u0, c_hat, a.nu)?;
    let trace = picard_run(&u0, a.n_max, est.t, &params, a.time_steps)?;
    let bound = bound_check(&trace, c_hat, est.u0_norm)?;
    let margins = trace.bound_margins(c_hat, est.u0_norm);

    let mut dir = RunDir::create(&a.out_dir, "picard", flags)?;
    dir.set_grid(&grid);
    dir.set_seed(a.seed);
    dir.set_params(json!({
        "nu": a.nu,
        "form": Form::Simplified32.tag(),
        "n_max": a.n_max,
        "time_steps": a.time_steps,
        "c_hat": c_hat,
        "c_source": c_source,
    }));
    let mut csv = Csv::with_header(&["n", "t", "w_n1", "bound_margin"]);
    for (n, row) in trace.w_n1.iter().enumerate() {
        for (j, &w) in row.iter().enumerate() {
            csv.row(&[
                n.to_string(),
                fmt_f64(trace.times[j]),
                fmt_f64(w),
                fmt_f64(margins[n + 1][j]),
            ]);
        }
    }
    dir.write("diffs.csv", csv.as_str().as_bytes())?;
    for (n, it) in trace.iterates.iter().enumerate() {
        let last = it.fields.len() - 1;
        dir.write_snapshot(
            &format!("iterate_{n:02}.bin"),
            &Snapshot::new(it.fields[last].clone(), it.times[last], a.nu),
        )?;
    }
    let sup_w = trace.sup_w_n1();
    let ratios = trace.decay_ratios();
    let sup_w_nn: Vec<f64> = trace
        .w_nn
        .iter()
        .map(|w| w.iter().copied().fold(0.0, f64::max))
        .collect();
    let summary = json!({
        "c_hat": c_hat,
        "c_source": c_source,
        "s0": est.s0,
        "u0_norm": est.u0_norm,
        "lifespan": est.t,
        "sup_w_n1": sup_w,
        "decay_ratios": ratios,
        "sup_w_nn": sup_w_nn,
        "bound_checked": bound.checked,
        "bound_violations": bound.violations,
        "bound_min_margin": bound.min_margin,
    });
    dir.write("summary.json", serde_json::to_string_pretty(&summary).unwrap().as_bytes())?;
    dir.finish()?;

    writeln!(
        out,
        "picard: C = {c_hat:.6} ({c_source}), T = {:.6}, final sup w = {:.3e}, bound violations {}",
        est.t,
        sup_w.last().copied().unwrap_or(0.0),
        bound.violations.len()
    )?;
    if let Some(v) = bound.violations.first() {
        return Err(FchError::IterationFailure(format!(
            "induction bound violated at n = {}, t = {}: {} > {}",
            v.n, v.t, v.norm, v.bound
        ))
        .into());
    }
    let mut m = Metrics::new();
    metric(&mut m, "c_hat", c_hat);
    metric(&mut m, "lifespan", est.t);
    metric(&mut m, "final_sup_w", sup_w.last().copied().unwrap_or(0.0));
    metric(&mut m, "max_decay_ratio", ratios.iter().skip(2).copied().fold(0.0, f64::max));
    metric(&mut m, "bound_min_margin", bound.min_margin);
    Ok(m)
}

fn besov(a: &BesovArgs, out: &mut dyn Write) -> Result<Metrics, CliError> {
    let snap = read_snapshot(&a.input)?;
    let spec = BesovSpec { s: a.s, p: a.p, r: a.r };
    let norm = besov_norm(&snap.field, &spec);
    writeln!(out, "norm,{}", fmt_f64(norm))?;
    let mut csv = Csv::with_header(&["q", "block_l2", "block_linf", "weighted"]);
    for b in besov_blocks(&snap.field, &spec) {
        csv.row(&[b.q.to_string(), fmt_f64(b.block_l2), fmt_f64(b.block_linf), fmt_f64(b.weighted)]);
    }
    write!(out, "{}", csv.as_str())?;
    let mut m = Metrics::new();
    metric(&mut m, "norm", norm);
    Ok(m)
}

fn bony(a: &BonyCheckArgs, flags: BTreeMap<String, String>, out: &mut dyn Write) -> Result<Metrics, CliError> {
    let grid = GridSpec::new(a.length, a.n)?;
    let report = bony_check(&grid, &a.nus, a.ensemble, a.seed)?;
    let mut header = vec!["sample".to_string(), "closure".into(), "prime_defect".into()];
    header.extend(a.nus.iter().map(|nu| format!("split_nu_{nu}")));
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut csv = Csv::with_header(&header_refs);
    for s in &report.samples {
        let mut row = vec![s.sample.to_string(), fmt_f64(s.closure), fmt_f64(s.prime_defect)];
        row.extend(s.split_defects.iter().map(|&d| fmt_f64(d)));
        csv.row(&row);
    }
    let summary = json!({
        "n": report.n,
        "length": report.length,
        "seed": report.seed,
        "nus": report.nus,
        "max_closure": report.max_closure,
        "max_prime_defect": report.max_prime_defect,
        "max_split_defects": report.max_split_defects,
    });
    let summary_text = serde_json::to_string(&summary).unwrap();
    match &a.out_dir {
        Some(d) => {
            let mut dir = RunDir::create(d, "bony-check", flags)?;
            dir.set_grid(&grid);
            dir.set_seed(a.seed);
            dir.write("bony_check.csv", csv.as_str().as_bytes())?;
            dir.write("summary.json", summary_text.as_bytes())?;
            dir.finish()?;
        }
        None => write!(out, "{}", csv.as_str())?,
    }
    writeln!(out, "{summary_text}")?;
    let mut m = Metrics::new();
    metric(&mut m, "max_closure", report.max_closure);
    metric(&mut m, "max_prime_defect", report.max_prime_defect);
    for (nu, d) in a.nus.iter().zip(&report.max_split_defects) {
        metric(&mut m, &format!("max_split_nu_{nu}"), *d);
    }
    Ok(m)
}

fn audit(a: &AuditArgs, flags: BTreeMap<String, String>, out: &mut dyn Write) -> Result<Metrics, CliError> {
    let grid = GridSpec::new(a.length, a.grid_n)?;
    let report = commutator_bound_audit(&grid, &AuditConfig::new(a.ensemble, a.nu, a.seed))?;
    let mut csv = Csv::with_header(&["sample", "ratio_e1", "ratio_e2", "ratio_e3", "ratio_product"]);
    for s in &report.samples {
        csv.row(&[
            s.sample.to_string(),
            fmt_f64(s.ratio_e1),
            fmt_f64(s.ratio_e2),
            fmt_f64(s.ratio_e3),
            fmt_f64(s.ratio_product),
        ]);
    }
    let summary = json!({
        "nu": report.nu,
        "s0": report.s0,
        "n": report.n,
        "seed": report.seed,
        "max": report.max,
        "mean": report.mean,
        "empirical_C": report.empirical_c,
    });
    let summary_text = serde_json::to_string(&summary).unwrap();
    match &a.out_dir {
        Some(d) => {
            let mut dir = RunDir::create(d, "commutator-audit", flags)?;
            dir.set_grid(&grid);
            dir.set_seed(a.seed);
            dir.write("audit.csv", csv.as_str().as_bytes())?;
            dir.write("summary.json", summary_text.as_bytes())?;
            dir.finish()?;
        }
        None => write!(out, "{}", csv.as_str())?,
    }
    writeln!(out, "{summary_text}")?;
    let mut m = Metrics::new();
    metric(&mut m, "empirical_C", report.empirical_c);
    metric(&mut m, "max_e1", report.max.e1);
    metric(&mut m, "max_e2", report.max.e2);
    metric(&mut m, "max_e3", report.max.e3);
    Ok(m)
}

fn lifespan_cmd(a: &LifespanArgs, out: &mut dyn Write) -> Result<Metrics, CliError> {
    let grid = a.grid.resolve(&a.u0)?;
    let u0 = a.u0.field(grid)?;
    let est = lifespan(&u0, a.c_hat, a.nu)?;
    let mut csv = Csv::with_header(&["quantity", "value"]);
    csv.row(&["s0", &fmt_f64(est.s0)]);
    csv.row(&["u0_norm", &fmt_f64(est.u0_norm)]);
    csv.row(&["c_hat", &fmt_f64(est.c_hat)]);
    csv.row(&["T", &fmt_f64(est.t)]);
    write!(out, "{}", csv.as_str())?;
    let mut m = Metrics::new();
    metric(&mut m, "u0_norm", est.u0_norm);
    metric(&mut m, "T", est.t);
    Ok(m)
}

fn analyticity(a: &AnalyticityArgs, flags: BTreeMap<String, String>, out: &mut dyn Write) -> Result<Metrics, CliError> {
    let snaps = read_run_snapshots(&a.run_dir)?;
    let Some(first) = snaps.first() else {
        return Err(CliError::Invalid(format!("no snap_*.bin files in {}", a.run_dir.display())));
    };
    let nu = first.nu;
    if snaps.iter().any(|s| s.nu != nu) {
        return Err(CliError::Invalid("snapshots disagree on ν".into()));
    }
    let times: Vec<f64> = snaps.iter().map(|s| s.t).collect();
    let fields: Vec<_> = snaps.into_iter().map(|s| s.field).collect();
    let es = es_series(&times, &fields, &a.scales, a.kmax, nu)?;
    let decay = decay_series(&times, &fields, a.floor)?;

    let mut es_csv = Csv::with_header(&["t", "s", "value", "argmax_k", "converged"]);
    for p in &es {
        es_csv.row(&[
            fmt_f64(p.t),
            fmt_f64(p.s),
            fmt_f64(p.value),
            p.argmax_k.to_string(),
            p.converged.to_string(),
        ]);
    }
    let mut decay_csv = Csv::with_header(&["t", "A", "sigma", "residual"]);
    for d in &decay {
        let (amp, sigma, res) = d
            .fit
            .map_or((f64::NAN, f64::NAN, f64::NAN), |f| (f.a, f.sigma.unwrap_or(f64::NAN), f.residual));
        decay_csv.numeric_row(&[d.t, amp, sigma, res]);
    }
    let mut dir = if a.run_dir.join(MANIFEST_NAME).exists() {
        RunDir::append(&a.run_dir)?
    } else {
        RunDir::create(&a.run_dir, "analyticity", flags)?
    };
    dir.write("es.csv", es_csv.as_str().as_bytes())?;
    dir.write("decay.csv", decay_csv.as_str().as_bytes())?;
    dir.finish()?;

    let converged = es.iter().all(|p| p.converged);
    let min_sigma = decay
        .iter()
        .filter_map(|d| d.fit.and_then(|f| f.sigma))
        .reduce(f64::min)
        .unwrap_or(f64::NAN);
    writeln!(
        out,
        "analyticity: {} snapshots, all E_s flags converged: {converged}, min sigma {min_sigma:.6}",
        times.len()
    )?;
    let mut m = Metrics::new();
    m.insert("all_converged".into(), converged.to_string());
    metric(&mut m, "min_sigma", min_sigma);
    Ok(m)
}

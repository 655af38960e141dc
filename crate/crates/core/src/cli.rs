//! Batch front end. Every data command writes one table as CSV or JSON and,
//! when `--out` is given, a `<out>.meta.json` sidecar echoing the
//! configuration.
//!
//! Exit codes: 0 success, 1 configuration error, 2 verification failure,
//! 3 I/O error.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::measures::{concurrence, linear_entropy};
use crate::states::{
    mems_curve_point, random_density, ChannelFamily, ChannelSpec, TargetForm, TargetSpec,
};
use crate::teleport::{
    analytic_c_out, analytic_fidelity, locate_threshold, sweep, teleport_rigid, threshold_r,
    FidelityLaw, Grid, SweepConfig,
};
use crate::verify::{self, VerifyOptions};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Io(String),
    VerificationFailed,
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::VerificationFailed => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl From<crate::Error> for CliError {
    fn from(e: crate::Error) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(
    name = "mems-teleport",
    version,
    about = "Entanglement teleportation through MEMS channels"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// C_out and rigid-outcome fidelity over an (r, c_in) grid.
    Sweep(SweepArgs),
    /// Random two-qubit targets and their images under two channel choices.
    RandomMap(RandomMapArgs),
    /// Simulated fidelity next to the closed-form fidelity law.
    Fidelity(FidelityArgs),
    /// Channel quality below which the phi target arrives separable.
    Threshold(ThresholdArgs),
    /// Run every simulation-versus-closed-form check.
    Verify(VerifyArgs),
    /// (r, C, S) along both MEMS families.
    MemsCurve(CurveArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TargetArg {
    Phi,
    Psi,
}

impl From<TargetArg> for TargetForm {
    fn from(t: TargetArg) -> Self {
        match t {
            TargetArg::Phi => TargetForm::Phi,
            TargetArg::Psi => TargetForm::Psi,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyArg {
    Mems1,
    Mems2,
    Werner,
}

impl From<FamilyArg> for ChannelFamily {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::Mems1 => ChannelFamily::Mems1,
            FamilyArg::Mems2 => ChannelFamily::Mems2,
            FamilyArg::Werner => ChannelFamily::Werner,
        }
    }
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Output file; stdout when absent (no sidecar is written then).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Prefix CSV output with gnuplot comment lines.
    #[arg(long)]
    pub gnuplot: bool,
}

#[derive(Debug, Args)]
pub struct RGridArgs {
    /// Defaults to the family's full range.
    #[arg(long)]
    pub r_min: Option<f64>,
    #[arg(long)]
    pub r_max: Option<f64>,
    #[arg(long, default_value_t = 25)]
    pub r_steps: usize,
}

#[derive(Debug, Args)]
pub struct CinGridArgs {
    #[arg(long, default_value_t = 0.0)]
    pub cin_min: f64,
    #[arg(long, default_value_t = 1.0)]
    pub cin_max: f64,
    #[arg(long, default_value_t = 25)]
    pub cin_steps: usize,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, value_enum, default_value_t = TargetArg::Phi)]
    pub target: TargetArg,
    #[arg(long, value_enum, default_value_t = FamilyArg::Mems1)]
    pub family1: FamilyArg,
    /// Defaults to `--family1`.
    #[arg(long, value_enum)]
    pub family2: Option<FamilyArg>,
    #[command(flatten)]
    pub r: RGridArgs,
    /// Giving any `--r2-*` flag sweeps channel two independently.
    #[arg(long)]
    pub r2_min: Option<f64>,
    #[arg(long)]
    pub r2_max: Option<f64>,
    #[arg(long)]
    pub r2_steps: Option<usize>,
    #[command(flatten)]
    pub cin: CinGridArgs,
    /// Add the probability-weighted fidelity over all 16 corrected outcomes.
    #[arg(long)]
    pub average: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct RandomMapArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 3000)]
    pub samples: usize,
    /// Quality of the mems1 channel pair.
    #[arg(long, default_value_t = 1.0)]
    pub mems1_r: f64,
    /// Quality of the mems2 channel pair.
    #[arg(long, default_value_t = 2.0 / 3.0)]
    pub mems2_r: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct FidelityArgs {
    /// Both channels come from this family.
    #[arg(long = "family1", alias = "family", value_enum, default_value_t = FamilyArg::Mems1)]
    pub family: FamilyArg,
    #[command(flatten)]
    pub r: RGridArgs,
    #[command(flatten)]
    pub cin: CinGridArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct ThresholdArgs {
    #[arg(long, default_value_t = 0.05)]
    pub cin_min: f64,
    #[arg(long, default_value_t = 1.0)]
    pub cin_max: f64,
    #[arg(long, default_value_t = 20)]
    pub cin_steps: usize,
    /// Bisection stopping width in r.
    #[arg(long, default_value_t = 1e-10)]
    pub r_tol: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Replace every check tolerance (also read from MEMS_TELEPORT_CHECK_TOL).
    #[arg(long)]
    pub tolerance: Option<f64>,
    #[arg(long, default_value_t = 25)]
    pub grid_points: usize,
    #[arg(long, default_value_t = 3000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Emit the report as JSON instead of text.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct CurveArgs {
    #[arg(long, default_value_t = 101)]
    pub steps: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

/// A numeric table in output order.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    fn new(columns: Vec<&'static str>) -> Self {
        Self {
            columns,
            rows: Vec::new(),
        }
    }

    pub fn write_csv<W: Write>(&self, w: W, gnuplot: Option<&str>) -> io::Result<()> {
        let mut w = BufWriter::new(w);
        if let Some(title) = gnuplot {
            writeln!(w, "# gnuplot: set datafile separator ','")?;
            writeln!(w, "# gnuplot: set key autotitle columnhead")?;
            writeln!(w, "# gnuplot: set title '{title}'")?;
        }
        {
            let mut csv = csv::Writer::from_writer(&mut w);
            csv.write_record(&self.columns).map_err(io::Error::other)?;
            for row in &self.rows {
                csv.write_record(row.iter().map(|v| format_number(*v)))
                    .map_err(io::Error::other)?;
            }
            csv.flush()?;
        }
        w.flush()
    }

    pub fn to_json(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|row| {
                    let mut rec = Map::new();
                    for (name, v) in self.columns.iter().zip(row) {
                        rec.insert((*name).to_string(), json!(v));
                    }
                    Value::Object(rec)
                })
                .collect(),
        )
    }
}

/// Seventeen significant digits.
pub fn format_number(v: f64) -> String {
    format!("{v:.16e}")
}

fn config<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Config(msg.into()))
}

fn family_grid(args: &RGridArgs, family: ChannelFamily) -> CliResult<Grid> {
    let (lo, hi) = family.range();
    let grid = Grid::new(
        args.r_min.unwrap_or(lo),
        args.r_max.unwrap_or(hi),
        args.r_steps,
    )?;
    if !family.contains(grid.min) || !family.contains(grid.max) {
        return config(format!(
            "r range [{}, {}] outside {family} range [{lo}, {hi}]",
            grid.min, grid.max
        ));
    }
    Ok(grid)
}

fn cin_grid(min: f64, max: f64, steps: usize) -> CliResult<Grid> {
    let grid = Grid::new(min, max, steps)?;
    if grid.min < 0.0 || grid.max > 1.0 {
        return config("c_in range must lie in [0, 1]");
    }
    Ok(grid)
}

fn emit(table: &Table, output: &OutputArgs, title: &str, meta: Value) -> CliResult<()> {
    let gnuplot = output.gnuplot.then_some(title);
    match &output.out {
        None => {
            let stdout = io::stdout();
            match output.format {
                Format::Csv => table.write_csv(stdout.lock(), gnuplot)?,
                Format::Json => {
                    let mut lock = stdout.lock();
                    serde_json::to_writer_pretty(&mut lock, &table.to_json())
                        .map_err(io::Error::other)?;
                    writeln!(lock)?;
                }
            }
        }
        Some(path) => {
            write_table(table, path, output.format, gnuplot)?;
            let mut meta = meta;
            meta["columns"] = json!(table.columns);
            meta["rows"] = json!(table.rows.len());
            meta["format"] = json!(match output.format {
                Format::Csv => "csv",
                Format::Json => "json",
            });
            meta["version"] = json!(env!("CARGO_PKG_VERSION"));
            write_json(&meta, &sidecar_path(path))?;
        }
    }
    Ok(())
}

fn write_table(
    table: &Table,
    path: &Path,
    format: Format,
    gnuplot: Option<&str>,
) -> io::Result<()> {
    match format {
        Format::Csv => table.write_csv(File::create(path)?, gnuplot),
        Format::Json => write_json(&table.to_json(), path),
    }
}

fn write_json(value: &Value, path: &Path) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value).map_err(io::Error::other)?;
    writeln!(w)?;
    w.flush()
}

pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".meta.json");
    PathBuf::from(name)
}

fn family_name(f: ChannelFamily) -> &'static str {
    f.name()
}

fn target_name(t: TargetForm) -> &'static str {
    match t {
        TargetForm::Phi => "phi",
        TargetForm::Psi => "psi",
        TargetForm::Explicit => "explicit",
    }
}

pub fn sweep_table(args: &SweepArgs) -> CliResult<(Table, Value)> {
    let family1 = ChannelFamily::from(args.family1);
    let family2 = args.family2.map(ChannelFamily::from).unwrap_or(family1);
    let r_grid = family_grid(&args.r, family1)?;
    let mixed = args.r2_min.is_some() || args.r2_max.is_some() || args.r2_steps.is_some();
    let r2_grid = if mixed {
        let r2 = RGridArgs {
            r_min: args.r2_min,
            r_max: args.r2_max,
            r_steps: args.r2_steps.unwrap_or(args.r.r_steps),
        };
        Some(family_grid(&r2, family2)?)
    } else {
        if family1 != family2 {
            family_grid(&args.r, family2)?;
        }
        None
    };
    let cfg = SweepConfig {
        target: args.target.into(),
        family1,
        family2,
        r_grid,
        r2_grid,
        c_in_grid: cin_grid(args.cin.cin_min, args.cin.cin_max, args.cin.cin_steps)?,
        average_outcomes: args.average,
    };
    let rows = sweep(&cfg)?;
    let mut columns = if mixed { vec!["r1", "r2"] } else { vec!["r"] };
    columns.extend(["c_in", "c_out", "signed_c_out", "fidelity_rigid"]);
    if args.average {
        columns.push("fidelity_average");
    }
    columns.extend(["probability", "locc_bound"]);
    let mut table = Table::new(columns);
    for row in rows {
        let mut v = if mixed {
            vec![row.r1, row.r2]
        } else {
            vec![row.r1]
        };
        v.extend([row.c_in, row.c_out, row.signed_c_out, row.fidelity_rigid]);
        if let Some(avg) = row.fidelity_average {
            v.push(avg);
        }
        v.extend([row.probability, row.locc_bound]);
        table.rows.push(v);
    }
    let meta = json!({
        "command": "sweep",
        "target": target_name(cfg.target),
        "family1": family_name(family1),
        "family2": family_name(family2),
        "r_grid": cfg.r_grid,
        "r2_grid": cfg.r2_grid,
        "c_in_grid": cfg.c_in_grid,
        "average_outcomes": cfg.average_outcomes,
    });
    Ok((table, meta))
}

pub fn random_map_table(args: &RandomMapArgs) -> CliResult<(Table, Value)> {
    if args.samples == 0 {
        return config("--samples must be at least 1");
    }
    let ch1 = ChannelSpec::mems1(args.mems1_r)?;
    let ch2 = ChannelSpec::mems2(args.mems2_r)?;
    let seeds: Vec<u64> = (0..args.samples as u64)
        .map(|i| args.seed.wrapping_add(i))
        .collect();
    let rows: Vec<Vec<f64>> = seeds
        .into_par_iter()
        .map(|seed| -> crate::Result<Vec<f64>> {
            let rho = random_density(seed, 2)?;
            let (_, c_in) = concurrence(&rho)?;
            let s_in = linear_entropy(&rho)?;
            let target = TargetSpec::explicit(rho)?;
            let mut row = vec![seed as f64, c_in, s_in];
            for ch in [&ch1, &ch2] {
                let out = teleport_rigid(&target, ch, ch)?;
                row.extend([
                    out.signed_c_out,
                    linear_entropy(&out.output_state)?,
                    out.output_state.purity(),
                ]);
            }
            Ok(row)
        })
        .collect::<crate::Result<_>>()?;
    let mut table = Table::new(vec![
        "seed",
        "signed_c_in",
        "s_in",
        "signed_c_out_mems1",
        "s_out_mems1",
        "purity_out_mems1",
        "signed_c_out_mems2",
        "s_out_mems2",
        "purity_out_mems2",
    ]);
    table.rows = rows;
    let meta = json!({
        "command": "random-map",
        "seed": args.seed,
        "samples": args.samples,
        "sample_seeds": "seed + i for sample i",
        "unitary": "Haar, composite Euler angles",
        "diagonal": "uniform on the simplex, sorted uniform spacings",
        "rng": "ChaCha20, seed_from_u64",
        "mems1_r": args.mems1_r,
        "mems2_r": args.mems2_r,
    });
    Ok((table, meta))
}

pub fn fidelity_table(args: &FidelityArgs) -> CliResult<(Table, Value)> {
    let family = ChannelFamily::from(args.family);
    let Some(law) = FidelityLaw::for_family(family) else {
        return config("fidelity laws exist for mems1 and mems2 only");
    };
    let r_grid = family_grid(&args.r, family)?;
    let c_grid = cin_grid(args.cin.cin_min, args.cin.cin_max, args.cin.cin_steps)?;
    let points: Vec<(f64, f64)> = r_grid
        .points()
        .into_iter()
        .flat_map(|r| c_grid.points().into_iter().map(move |c| (r, c)))
        .collect();
    let rows: Vec<Vec<f64>> = points
        .into_par_iter()
        .map(|(r, c)| -> crate::Result<Vec<f64>> {
            let ch = ChannelSpec::new(family, r)?;
            let out = teleport_rigid(&TargetSpec::psi(c)?, &ch, &ch)?;
            let f = out.fidelity.expect("pure target");
            let law_f = analytic_fidelity(law, r, c)?;
            Ok(vec![
                r,
                c,
                f,
                law_f,
                f - law_f,
                out.c_out,
                analytic_c_out(family, r, c)?,
            ])
        })
        .collect::<crate::Result<_>>()?;
    let mut table = Table::new(vec![
        "r",
        "c_in",
        "fidelity_sim",
        "fidelity_law",
        "deviation",
        "c_out_sim",
        "c_out_law",
    ]);
    table.rows = rows;
    let meta = json!({
        "command": "fidelity",
        "target": "psi",
        "family": family_name(family),
        "law": format!("{law:?}"),
        "r_grid": r_grid,
        "c_in_grid": c_grid,
    });
    Ok((table, meta))
}

pub fn threshold_table(args: &ThresholdArgs) -> CliResult<(Table, Value)> {
    let grid = cin_grid(args.cin_min, args.cin_max, args.cin_steps)?;
    if grid.min <= 0.0 {
        return config("the threshold is undefined at c_in = 0");
    }
    if args.r_tol.is_nan() || args.r_tol <= 0.0 {
        return config("--r-tol must be positive");
    }
    let mut table = Table::new(vec![
        "c_in",
        "r_threshold_law",
        "r_threshold_bisection",
        "deviation",
    ]);
    for c in grid.points() {
        let law = threshold_r(c)?;
        let found = locate_threshold(c, args.r_tol)?;
        table.rows.push(vec![c, law, found, found - law]);
    }
    let meta = json!({
        "command": "threshold",
        "target": "phi",
        "channels": "mems1 x mems1",
        "c_in_grid": grid,
        "r_tol": args.r_tol,
    });
    Ok((table, meta))
}

pub fn mems_curve_table(args: &CurveArgs) -> CliResult<(Table, Value)> {
    if args.steps < 2 {
        return config("--steps must be at least 2");
    }
    let mut table = Table::new(vec!["family", "r", "concurrence", "linear_entropy"]);
    for (id, family) in [(1.0, ChannelFamily::Mems1), (2.0, ChannelFamily::Mems2)] {
        let (lo, hi) = family.range();
        for r in Grid::new(lo, hi, args.steps)?.points() {
            let (c, s) = mems_curve_point(family, r)?;
            table.rows.push(vec![id, r, c, s]);
        }
    }
    let meta = json!({ "command": "mems-curve", "steps": args.steps, "family_ids": {"1": "mems1", "2": "mems2"} });
    Ok((table, meta))
}

fn cmd_verify(args: &VerifyArgs) -> CliResult<()> {
    let mut opts = VerifyOptions::from_env().map_err(CliError::Config)?;
    if args.tolerance.is_some() {
        opts.tolerance_override = args.tolerance;
    }
    if args.grid_points < 2 || args.samples == 0 {
        return config("--grid-points must be at least 2 and --samples at least 1");
    }
    opts.grid_points = args.grid_points;
    opts.random_samples = args.samples;
    opts.seed = args.seed;
    let outcomes = verify::run_all(&opts)?;
    if args.json {
        let v = json!({ "checks": outcomes, "failed": verify::any_failed(&outcomes) });
        println!(
            "{}",
            serde_json::to_string_pretty(&v).map_err(io::Error::other)?
        );
    } else {
        print!("{}", verify::render_report(&outcomes));
    }
    if verify::any_failed(&outcomes) {
        Err(CliError::VerificationFailed)
    } else {
        Ok(())
    }
}

pub fn execute(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Sweep(a) => {
            let (t, m) = sweep_table(a)?;
            emit(&t, &a.output, "C_out over (r, c_in)", m)
        }
        Command::RandomMap(a) => {
            let (t, m) = random_map_table(a)?;
            emit(&t, &a.output, "random targets in the C-S plane", m)
        }
        Command::Fidelity(a) => {
            let (t, m) = fidelity_table(a)?;
            emit(&t, &a.output, "fidelity over (r, c_in)", m)
        }
        Command::Threshold(a) => {
            let (t, m) = threshold_table(a)?;
            emit(&t, &a.output, "separability threshold", m)
        }
        Command::MemsCurve(a) => {
            let (t, m) = mems_curve_table(a)?;
            emit(&t, &a.output, "MEMS boundary", m)
        }
        Command::Verify(a) => cmd_verify(a),
    }
}

pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            match &e {
                CliError::Config(m) => eprintln!("error: {m}"),
                CliError::Io(m) => eprintln!("i/o error: {m}"),
                CliError::VerificationFailed => eprintln!("verification failed"),
            }
            ExitCode::from(e.exit_code())
        }
    }
}

pub fn run_from_env() -> ExitCode {
    run(std::env::args_os())
}

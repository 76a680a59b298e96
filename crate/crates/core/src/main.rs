//! `darboux-heat`: tables of dressed potentials, heat kernels, heat traces
//! and zeta values, the one-loop kink correction, and the validation suite.

// `!(x > 0.0)` is used deliberately: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use darboux_heat::dressing::{dressed_potential, DressingChain, Parity, SeedFunction};
use darboux_heat::kink::{ClosedFormKernel, Variant};
use darboux_heat::transmutation::{HeatKernel, Kernel};
use darboux_heat::validate::{self, CRITERIA};
use darboux_heat::zeta::{quantum_correction, zeta_function, HeatTrace, TraceSource};
use darboux_heat::Error;

#[derive(Parser, Debug)]
#[command(
    name = "darboux-heat",
    version,
    about = "Heat kernels of reflectionless potentials and the one-loop kink correction"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Kink mass m (> 0).
    #[arg(long = "m", global = true, default_value_t = 1.0, value_parser = positive)]
    m: f64,

    /// Subtraction shift Λ of the heat trace [default: 4m²].
    #[arg(long, global = true, allow_hyphen_values = true)]
    shift: Option<f64>,

    /// Closed-form kernel variant.
    #[arg(long, global = true, default_value = "exp-corrected", value_parser = parse_variant)]
    variant: Variant,

    /// Custom dressing chain as parity:b pairs, e.g. `cosh:1,sinh:2`.
    #[arg(long, global = true, value_parser = parse_chain, conflicts_with = "preset")]
    chain: Option<DressingChain>,

    /// Named chain preset (the kink of mass m).
    #[arg(long, global = true, value_enum)]
    preset: Option<Preset>,

    /// Output file [default: standard output].
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Preset {
    Kink,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Format {
    Csv,
    Json,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Construction {
    /// The closed-form two-soliton kernel (kink only).
    ClosedForm,
    /// Dressing of the freely propagated triangular kernel (any chain).
    Dressed,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
enum SourceArg {
    ClosedForm,
    NumericDiagonal,
}

impl From<SourceArg> for TraceSource {
    fn from(s: SourceArg) -> Self {
        match s {
            SourceArg::ClosedForm => TraceSource::ClosedForm,
            SourceArg::NumericDiagonal => TraceSource::NumericDiagonal,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Table of x, u[N](x).
    Potential {
        /// Positions min:max:step.
        #[arg(long, allow_hyphen_values = true, value_parser = parse_range)]
        x: Range,
    },
    /// Table of τ, x, y, ρ(τ, x, y).
    Kernel {
        #[arg(long, allow_hyphen_values = true, value_parser = parse_range)]
        tau: Range,
        #[arg(long, allow_hyphen_values = true, value_parser = parse_range)]
        x: Range,
        #[arg(long, allow_hyphen_values = true, value_parser = parse_range)]
        y: Range,
        /// Kernel construction [default: closed-form for the kink, dressed for a custom chain].
        #[arg(long, value_enum)]
        construction: Option<Construction>,
    },
    /// Table of t, γ(t).
    Trace {
        #[arg(long, allow_hyphen_values = true, value_parser = parse_range)]
        t: Range,
        #[arg(long, value_enum, default_value_t = SourceArg::ClosedForm)]
        source: SourceArg,
    },
    /// Table of s, ζ(s).
    Zeta {
        #[arg(long, allow_hyphen_values = true, value_parser = parse_range)]
        s: Range,
        /// Mass scale M.
        #[arg(long, default_value_t = 1.0, value_parser = positive)]
        mass_scale: f64,
    },
    /// ζ(0), ζ′(0), S_q = −ζ′(0) and the quadrature error estimate.
    Correction {
        #[arg(long, default_value_t = 1.0, value_parser = positive)]
        mass_scale: f64,
    },
    /// Run the validation suite; nonzero exit on any failure.
    Validate {
        /// Run only these criteria (1–8) [default: all].
        #[arg(long, value_delimiter = ',', value_parser = clap::value_parser!(u8).range(1..=8))]
        criterion: Vec<u8>,
    },
}

/// A sampling range `min:max:step`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
struct Range {
    min: f64,
    max: f64,
    step: f64,
}

impl Range {
    fn values(&self) -> Vec<f64> {
        let n = ((self.max - self.min) / self.step + 1e-9).floor() as usize + 1;
        (0..n).map(|i| self.min + i as f64 * self.step).collect()
    }
}

impl FromStr for Range {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let [min, max, step] = parts.as_slice() else {
            return Err(format!("expected min:max:step, got `{s}`"));
        };
        let num = |p: &str| p.trim().parse::<f64>().map_err(|e| format!("`{p}`: {e}"));
        let (min, max, step) = (num(min)?, num(max)?, num(step)?);
        if !(min.is_finite() && max.is_finite() && step.is_finite()) {
            return Err("range bounds must be finite".into());
        }
        if !(step > 0.0) {
            return Err(format!("step must be positive, got {step}"));
        }
        if max < min {
            return Err(format!("empty range: max {max} < min {min}"));
        }
        Ok(Range { min, max, step })
    }
}

fn parse_range(s: &str) -> Result<Range, String> {
    s.parse()
}

fn positive(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("`{s}`: {e}"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("must be positive, got {v}"))
    }
}

fn parse_variant(s: &str) -> Result<Variant, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_chain(s: &str) -> Result<DressingChain, String> {
    let seeds = s
        .split(',')
        .map(|pair| {
            let (parity, b) = pair.split_once(':').ok_or_else(|| format!("expected parity:b, got `{pair}`"))?;
            let parity = match parity.trim() {
                "cosh" | "even" => Parity::Even,
                "sinh" | "odd" => Parity::Odd,
                other => return Err(format!("unknown parity `{other}` (expected cosh or sinh)")),
            };
            let b = b.trim().parse::<f64>().map_err(|e| format!("`{b}`: {e}"))?;
            Ok(SeedFunction { parity, b })
        })
        .collect::<Result<Vec<_>, String>>()?;
    DressingChain::new(seeds).map_err(|e| e.to_string())
}

/// Failures after flag parsing, mapped to exit codes.
enum Failure {
    /// Bad input detected by the library (exit 2).
    Input(String),
    /// A numerical method failed (exit 3).
    Numerical(String),
    /// The validation suite found a failing check (exit 1).
    Validation,
    Io(io::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_numerical() {
            Failure::Numerical(e.to_string())
        } else {
            Failure::Input(e.to_string())
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e)
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Io(e.into())
    }
}

/// A table of numeric rows with named columns.
struct Table {
    columns: Vec<&'static str>,
    rows: Vec<Vec<f64>>,
}

/// 17 significant digits; negative zero printed as zero.
fn format_number(v: f64) -> String {
    let v = if v == 0.0 { 0.0 } else { v };
    format!("{v:.16e}")
}

fn write_config_header(out: &mut dyn Write, command: &str, config: &Value) -> io::Result<()> {
    writeln!(out, "# darboux-heat {command}")?;
    if let Value::Object(map) = config {
        for (k, v) in map {
            writeln!(out, "# {k} = {v}")?;
        }
    }
    Ok(())
}

fn emit_table(
    out: &mut dyn Write,
    format: Format,
    command: &str,
    config: &Value,
    table: &Table,
) -> Result<(), Failure> {
    match format {
        Format::Csv => {
            write_config_header(out, command, config)?;
            writeln!(out, "# columns: {}", table.columns.join(","))?;
            for row in &table.rows {
                let cells: Vec<String> = row.iter().map(|&v| format_number(v)).collect();
                writeln!(out, "{}", cells.join(","))?;
            }
        }
        Format::Json => {
            let doc = json!({ "command": command, "config": config, "columns": table.columns, "rows": table.rows });
            serde_json::to_writer_pretty(&mut *out, &doc)?;
            writeln!(out)?;
        }
    }
    Ok(())
}

/// Evaluate `f` over `inputs` in parallel, keeping input order.
fn sweep<T: Sync, F>(inputs: &[T], f: F) -> Result<Vec<Vec<f64>>, Failure>
where
    F: Fn(&T) -> darboux_heat::Result<Vec<f64>> + Sync + Send,
{
    let rows: darboux_heat::Result<Vec<Vec<f64>>> = inputs.par_iter().map(f).collect();
    Ok(rows?)
}

impl Common {
    fn chain(&self) -> darboux_heat::Result<DressingChain> {
        match &self.chain {
            Some(c) => Ok(c.clone()),
            None => DressingChain::kink(self.m),
        }
    }

    fn shift(&self) -> f64 {
        self.shift.unwrap_or(4.0 * self.m * self.m)
    }

    fn chain_description(&self) -> String {
        match &self.chain {
            Some(c) => c
                .seeds()
                .iter()
                .map(|s| format!("{}:{}", if s.parity == Parity::Even { "cosh" } else { "sinh" }, s.b))
                .collect::<Vec<_>>()
                .join(","),
            None => "kink".to_string(),
        }
    }

    fn config(&self, extra: Value) -> Value {
        let mut base = json!({
            "m": self.m,
            "shift": self.shift(),
            "variant": self.variant.name(),
            "chain": self.chain_description(),
            "format": self.format,
        });
        if let (Value::Object(b), Value::Object(e)) = (&mut base, extra) {
            b.extend(e);
        }
        base
    }
}

fn run(cli: Cli, out: &mut dyn Write) -> Result<(), Failure> {
    let common = &cli.common;
    match cli.command {
        Command::Potential { x } => {
            let chain = common.chain()?;
            let rows = sweep(&x.values(), |&x| Ok(vec![x, dressed_potential(&chain, x)?]))?;
            let config = common.config(json!({ "x": x }));
            emit_table(out, common.format, "potential", &config, &Table { columns: vec!["x", "u"], rows })
        }
        Command::Kernel { tau, x, y, construction } => {
            let construction = construction.unwrap_or(if common.chain.is_some() {
                Construction::Dressed
            } else {
                Construction::ClosedForm
            });
            let kernel = match construction {
                Construction::Dressed => HeatKernel::Dressed(common.chain()?),
                Construction::ClosedForm => {
                    if common.chain.is_some() {
                        return Err(Failure::Input("the closed-form kernel exists for the kink only".into()));
                    }
                    HeatKernel::ClosedForm(ClosedFormKernel::new(common.m, common.variant)?)
                }
            };
            let mut points = Vec::new();
            for &t in &tau.values() {
                for &xv in &x.values() {
                    for &yv in &y.values() {
                        points.push((t, xv, yv));
                    }
                }
            }
            let rows = sweep(&points, |&(t, x, y)| Ok(vec![t, x, y, kernel.eval(t, x, y)?]))?;
            let config = common.config(json!({ "tau": tau, "x": x, "y": y, "construction": construction }));
            emit_table(out, common.format, "kernel", &config, &Table { columns: vec!["tau", "x", "y", "rho"], rows })
        }
        Command::Trace { t, source } => {
            let trace = HeatTrace::new(common.m, common.shift(), common.variant, source.into())?;
            let rows = sweep(&t.values(), |&t| Ok(vec![t, trace.eval(t)?]))?;
            let config = common.config(json!({ "t": t, "source": source }));
            emit_table(out, common.format, "trace", &config, &Table { columns: vec!["t", "gamma"], rows })
        }
        Command::Zeta { s, mass_scale } => {
            let trace = HeatTrace::closed_form(common.m, common.shift(), common.variant)?;
            let rows = sweep(&s.values(), |&s| Ok(vec![s, zeta_function(&trace, s, mass_scale)?]))?;
            let config = common.config(json!({ "s": s, "mass_scale": mass_scale }));
            emit_table(out, common.format, "zeta", &config, &Table { columns: vec!["s", "zeta"], rows })
        }
        Command::Correction { mass_scale } => {
            let trace = HeatTrace::closed_form(common.m, common.shift(), common.variant)?;
            let r = quantum_correction(&trace, mass_scale)?;
            let config = common.config(json!({ "mass_scale": mass_scale }));
            let table = Table {
                columns: vec!["zeta0", "zeta_prime0", "s_q", "mass_scale", "error_estimate"],
                rows: vec![vec![r.zeta0, r.zeta_prime0, r.s_q, r.mass_scale, r.error_estimate]],
            };
            emit_table(out, common.format, "correction", &config, &table)
        }
        Command::Validate { criterion } => {
            let selected: Vec<u8> =
                if criterion.is_empty() { CRITERIA.iter().map(|c| c.0).collect() } else { criterion };
            let reports: Vec<_> = selected.iter().map(|&c| validate::run_criterion(c)).collect();
            match common.format {
                Format::Csv => {
                    for report in &reports {
                        for check in &report.checks {
                            writeln!(out, "{}", check.summary())?;
                        }
                        writeln!(out, "{}", report.summary())?;
                    }
                }
                Format::Json => {
                    serde_json::to_writer_pretty(&mut *out, &reports)?;
                    writeln!(out)?;
                }
            }
            let failed = reports.iter().filter(|r| !r.passed()).count();
            writeln!(out, "{} of {} criteria passed", reports.len() - failed, reports.len())?;
            if failed > 0 {
                Err(Failure::Validation)
            } else {
                Ok(())
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = (|| {
        let mut out: Box<dyn Write> = match &cli.common.output {
            Some(path) => Box::new(BufWriter::new(File::create(path)?)),
            None => Box::new(BufWriter::new(io::stdout().lock())),
        };
        let r = run(cli, &mut *out);
        out.flush()?;
        r
    })();
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation) => {
            eprintln!("darboux-heat: validation failed");
            ExitCode::from(1)
        }
        Err(Failure::Input(msg)) => {
            eprintln!("darboux-heat: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("darboux-heat: numerical failure: {msg}");
            ExitCode::from(3)
        }
        Err(Failure::Io(e)) => {
            eprintln!("darboux-heat: {e}");
            ExitCode::from(2)
        }
    }
}

//! `bjcalc`: quantize, dequantize and convert polynomial symbols in the
//! Weyl and Born-Jordan schemes, evaluate the Cohen kernel and its zero-set
//! geometry, solve for Born-Jordan symbols of translation operators, and
//! run sampled-grid versions of the symbol map.
//!
//! Exit codes: 0 success, 1 internal error, 2 parse/usage error,
//! 3 verification failure, 4 threshold violation.

mod format;

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use bjcalc_core::expjet::{bj_to_weyl_exp, kernel_witness, solve_heisenberg_bj, ExpSymbol};
use bjcalc_core::grid::{
    condition_number, grid_forward, grid_inverse, read_binary, synthesize, write_binary, write_csv,
    GridError, GridSymbol,
};
use bjcalc_core::theta::{
    check_hormander_bounds, cone_forward, cone_inverse, theta, theta_gradient, zero_set_distance,
    PhasePoint, ThetaContext,
};
use bjcalc_core::{quantize, NormalOperator, PolySymbol, Scheme};

use format::{fmt_float, format_exp_symbol, join_floats};

#[derive(Parser)]
#[command(
    name = "bjcalc",
    version,
    about = "Born-Jordan / Weyl quantization calculus"
)]
struct Cli {
    /// Planck constant for the numeric commands; decimal ("0.1") or
    /// rational ("1/10"). Defaults to $BJCALC_HBAR, then 1. The exact
    /// symbol/operator commands keep hbar symbolic and ignore this.
    #[arg(long, global = true)]
    hbar: Option<String>,

    /// Degrees of freedom for the numeric commands.
    #[arg(long, global = true, default_value_t = 1)]
    dim: usize,

    /// Output mode: free text or one key=value pair per line.
    #[arg(long, global = true, value_enum, default_value_t = OutputMode::Text)]
    output: OutputMode,

    /// Display digits for floating-point output.
    #[arg(long, global = true, default_value_t = 12)]
    precision: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputMode {
    Text,
    Records,
}

#[derive(Subcommand)]
enum Command {
    /// Quantize a polynomial symbol into a normal-ordered operator.
    Quantize {
        #[arg(long)]
        scheme: Scheme,
        symbol: String,
    },
    /// Recover the symbol of a normal-ordered operator.
    Dequantize {
        #[arg(long)]
        scheme: Scheme,
        operator: String,
    },
    /// Convert a symbol between the two schemes (same operator).
    Convert {
        #[arg(long = "from")]
        from: Scheme,
        #[arg(long = "to")]
        to: Scheme,
        symbol: String,
    },
    /// Cohen kernel evaluation and zero-set geometry.
    #[command(subcommand)]
    Theta(ThetaCommand),
    /// Born-Jordan symbol of the phase-space translation operator at z0.
    Heisenberg {
        /// Flat coordinates x_1,..,x_n,p_1,..,p_n.
        #[arg(long, value_delimiter = ',', num_args = 1, allow_hyphen_values = true)]
        z0: Vec<f64>,
    },
    /// A nonzero symbol of exponential type r annihilated by the
    /// Born-Jordan -> Weyl map, if r reaches the sqrt(4 pi hbar) threshold.
    KernelWitness {
        /// Exponential type r.
        #[arg(long, conflicts_with = "r_ratio")]
        r: Option<f64>,
        /// r as a multiple of sqrt(4 pi hbar).
        #[arg(long = "r-ratio")]
        r_ratio: Option<f64>,
    },
    /// Sampled covariant symbols on a grid.
    #[command(subcommand)]
    Grid(GridCommand),
}

#[derive(Subcommand)]
enum ThetaCommand {
    /// Evaluate Theta(z) = sinc(x.p / 2 hbar).
    Eval {
        #[arg(long, value_delimiter = ',', num_args = 1, allow_hyphen_values = true)]
        z: Vec<f64>,
    },
    /// Gradient of Theta at z (flat layout).
    Grad {
        #[arg(long, value_delimiter = ',', num_args = 1, allow_hyphen_values = true)]
        z: Vec<f64>,
    },
    /// Distance from z to the zero set (optionally to a fixed branch).
    Dist {
        #[arg(long, value_delimiter = ',', num_args = 1, allow_hyphen_values = true)]
        z: Vec<f64>,
        /// Restrict to the branch x.p = 2 pi k hbar.
        #[arg(long)]
        k: Option<i64>,
    },
    /// Sampled lower-bound checks (division estimates).
    Bounds {
        /// Half-width of the sampling box, in units of sqrt(hbar).
        #[arg(long, alias = "box", default_value_t = 10.0)]
        box_half_width: f64,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Homogeneous degree-2 cone coordinates (forward, or inverse with --y).
    Coords {
        #[arg(
            long,
            value_delimiter = ',',
            num_args = 1,
            allow_hyphen_values = true,
            conflicts_with = "y"
        )]
        z: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',', num_args = 1, allow_hyphen_values = true)]
        y: Option<Vec<f64>>,
    },
}

#[derive(Subcommand)]
enum GridCommand {
    /// Forward then inverse symbol map on the Gaussian-bump fixture;
    /// reports the round-trip error and the conditioning.
    Roundtrip {
        #[arg(long = "r-ratio", default_value_t = 0.9)]
        r_ratio: f64,
        #[arg(long = "N", alias = "n", default_value_t = 128)]
        resolution: usize,
        /// Optionally write the forward image as a binary grid file.
        #[arg(long)]
        out: Option<String>,
    },
    /// Condition numbers across support radii (as threshold ratios).
    Cond {
        #[arg(long = "r-ratios", value_delimiter = ',', num_args = 1,
              default_values_t = [0.3, 0.6, 0.9, 0.99])]
        r_ratios: Vec<f64>,
    },
    /// Write the Gaussian-bump fixture as a binary grid file.
    Write {
        #[arg(long = "r-ratio", default_value_t = 0.9)]
        r_ratio: f64,
        #[arg(long = "N", alias = "n", default_value_t = 128)]
        resolution: usize,
        #[arg(long)]
        out: String,
    },
    /// Export a binary grid file as CSV (z1,z2,re,im).
    Csv {
        #[arg(long = "in")]
        input: String,
        #[arg(long)]
        out: String,
    },
    /// Print the header of a binary grid file and sample statistics.
    Info {
        #[arg(long = "in")]
        input: String,
    },
    /// Evaluate the symbol at a phase-space point from a grid file.
    Eval {
        #[arg(long = "in")]
        input: String,
        #[arg(long, value_delimiter = ',', num_args = 1, allow_hyphen_values = true)]
        z: Vec<f64>,
    },
}

enum CliError {
    Internal(String),
    Usage(String),
    Verification(String),
    Threshold(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Internal(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Verification(_) => 3,
            CliError::Threshold(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Internal(m)
            | CliError::Usage(m)
            | CliError::Verification(m)
            | CliError::Threshold(m) => m,
        }
    }
}

impl From<bjcalc_core::parse::ParseError> for CliError {
    fn from(e: bjcalc_core::parse::ParseError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<bjcalc_core::quantize::QuantizeError> for CliError {
    fn from(e: bjcalc_core::quantize::QuantizeError) -> Self {
        CliError::Internal(e.to_string())
    }
}

impl From<bjcalc_core::theta::ThetaError> for CliError {
    fn from(e: bjcalc_core::theta::ThetaError) -> Self {
        match e {
            bjcalc_core::theta::ThetaError::Domain(_) => CliError::Usage(e.to_string()),
            _ => CliError::Internal(e.to_string()),
        }
    }
}

impl From<bjcalc_core::expjet::JetError> for CliError {
    fn from(e: bjcalc_core::expjet::JetError) -> Self {
        CliError::Internal(e.to_string())
    }
}

impl From<GridError> for CliError {
    fn from(e: GridError) -> Self {
        match e {
            GridError::ThresholdViolation { .. } | GridError::NearSingular { .. } => {
                CliError::Threshold(e.to_string())
            }
            GridError::Invalid(_) => CliError::Usage(e.to_string()),
            GridError::Io(_) | GridError::Format(_) => CliError::Internal(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

struct Output {
    mode: OutputMode,
    precision: usize,
}

impl Output {
    /// Print the primary result: bare in text mode, keyed in records mode.
    fn result(&self, key: &str, value: &str) {
        match self.mode {
            OutputMode::Text => println!("{value}"),
            OutputMode::Records => println!("{key}={value}"),
        }
    }

    /// Print a secondary field: records mode only.
    fn field(&self, key: &str, value: &str) {
        if self.mode == OutputMode::Records {
            println!("{key}={value}");
        }
    }

    /// Print in both modes, keyed.
    fn line(&self, key: &str, value: &str) {
        match self.mode {
            OutputMode::Text => println!("{key} = {value}"),
            OutputMode::Records => println!("{key}={value}"),
        }
    }

    fn float(&self, v: f64) -> String {
        fmt_float(v, self.precision)
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let out = Output {
        mode: cli.output,
        precision: cli.precision,
    };
    match &cli.command {
        Command::Quantize { scheme, symbol } => {
            let a = PolySymbol::parse(symbol)?;
            out.result("result", &quantize::quantize(&a, *scheme).to_string());
            Ok(())
        }
        Command::Dequantize { scheme, operator } => {
            let op = NormalOperator::parse(operator)?;
            out.result("result", &quantize::dequantize(&op, *scheme).to_string());
            Ok(())
        }
        Command::Convert { from, to, symbol } => {
            let a = PolySymbol::parse(symbol)?;
            let converted = match (from, to) {
                (Scheme::BornJordan, Scheme::Weyl) => quantize::bj_to_weyl_poly(&a)?,
                (Scheme::Weyl, Scheme::BornJordan) => quantize::weyl_to_bj_poly(&a)?,
                _ => a,
            };
            out.result("result", &converted.to_string());
            Ok(())
        }
        Command::Theta(sub) => run_theta(cli, &out, sub),
        Command::Heisenberg { z0 } => {
            let ctx = context(cli)?;
            let z0 = phase_point(cli, z0)?;
            let term = solve_heisenberg_bj(&ctx, &z0);
            out.result(
                "result",
                &format_exp_symbol(&ExpSymbol::from_term(term), cli.precision),
            );
            Ok(())
        }
        Command::KernelWitness { r, r_ratio } => {
            let ctx = context(cli)?;
            let radius = match (r, r_ratio) {
                (Some(r), None) => *r,
                (None, Some(ratio)) => ratio * ctx.zero_threshold(),
                (None, None) => return Err(CliError::Usage("pass --r or --r-ratio".into())),
                _ => unreachable!("clap enforces the conflict"),
            };
            if radius < 0.0 {
                return Err(CliError::Usage("radius must be non-negative".into()));
            }
            out.field("r", &out.float(radius));
            out.field("threshold", &out.float(ctx.zero_threshold()));
            match kernel_witness(&ctx, radius) {
                Some(w) => {
                    let image = bj_to_weyl_exp(&ctx, &ExpSymbol::from_term(w.clone()));
                    out.result(
                        "witness",
                        &format_exp_symbol(&ExpSymbol::from_term(w), cli.precision),
                    );
                    out.field("image_max_coeff", &format!("{:e}", image.max_coeff_norm()));
                }
                None => out.result("witness", "none"),
            }
            Ok(())
        }
        Command::Grid(sub) => run_grid(cli, &out, sub),
    }
}

fn run_theta(cli: &Cli, out: &Output, sub: &ThetaCommand) -> Result<(), CliError> {
    let ctx = context(cli)?;
    match sub {
        ThetaCommand::Eval { z } => {
            let z = phase_point(cli, z)?;
            out.result("theta", &out.float(theta(&ctx, &z)));
            Ok(())
        }
        ThetaCommand::Grad { z } => {
            let z = phase_point(cli, z)?;
            let g = theta_gradient(&ctx, &z);
            out.result("grad", &join_floats(&g, cli.precision));
            Ok(())
        }
        ThetaCommand::Dist { z, k } => {
            let z = phase_point(cli, z)?;
            let proj = match k {
                Some(k) => {
                    if *k == 0 {
                        return Err(CliError::Usage("branch index k must be nonzero".into()));
                    }
                    bjcalc_core::theta::branch_distance(&ctx, &z, *k)?
                }
                None => zero_set_distance(&ctx, &z)?,
            };
            out.result("distance", &out.float(proj.distance));
            out.field("nearest", &join_floats(&proj.nearest.flat(), cli.precision));
            out.field("k", &proj.k.to_string());
            Ok(())
        }
        ThetaCommand::Bounds {
            box_half_width,
            samples,
            seed,
        } => {
            if *samples == 0 {
                return Err(CliError::Usage("samples must be at least 1".into()));
            }
            if !(*box_half_width > 0.0 && box_half_width.is_finite()) {
                return Err(CliError::Usage("box half-width must be positive".into()));
            }
            let half = box_half_width * ctx.hbar.sqrt();
            let report = check_hormander_bounds(&ctx, half, *samples, *seed)?;
            match cli.output {
                OutputMode::Text => println!("{report}"),
                OutputMode::Records => {
                    for c in &report.checks {
                        println!(
                            "{}={} min={:e} floor={:e}",
                            c.name,
                            if c.pass { "PASS" } else { "FAIL" },
                            c.empirical_min,
                            c.floor
                        );
                    }
                    println!("overall={}", if report.pass() { "PASS" } else { "FAIL" });
                }
            }
            if report.pass() {
                Ok(())
            } else {
                Err(CliError::Verification("bound check failed".into()))
            }
        }
        ThetaCommand::Coords { z, y } => match (z, y) {
            (Some(z), None) => {
                let z = phase_point(cli, z)?;
                let y = cone_forward(&z)?;
                out.result("y", &join_floats(&y, cli.precision));
                Ok(())
            }
            (None, Some(y)) => {
                if y.len() != 2 * cli.dim {
                    return Err(CliError::Usage(format!(
                        "expected {} coordinates for dim {}, got {}",
                        2 * cli.dim,
                        cli.dim,
                        y.len()
                    )));
                }
                let z = cone_inverse(y, cli.dim)?;
                out.result("z", &join_floats(&z.flat(), cli.precision));
                Ok(())
            }
            _ => Err(CliError::Usage("pass exactly one of --z or --y".into())),
        },
    }
}

fn run_grid(cli: &Cli, out: &Output, sub: &GridCommand) -> Result<(), CliError> {
    let ctx = context(cli)?;
    if ctx.n != 1 {
        return Err(CliError::Usage("grid commands require --dim 1".into()));
    }
    let fixture = |ratio: f64, n: usize| -> Result<GridSymbol, CliError> {
        let threshold = ctx.zero_threshold();
        let r = ratio * threshold;
        let half_width = 1.25 * threshold.max(r);
        Ok(GridSymbol::gaussian_bump(ctx.hbar, half_width, n, r)?)
    };
    match sub {
        GridCommand::Roundtrip {
            r_ratio,
            resolution,
            out: out_file,
        } => {
            let a = fixture(*r_ratio, *resolution)?;
            let forward = grid_forward(&a);
            if let Some(path) = out_file {
                let f = File::create(path).map_err(|e| CliError::Internal(e.to_string()))?;
                write_binary(&forward, BufWriter::new(f))?;
            }
            let back = grid_inverse(&forward)?;
            let err = back.relative_distance(&a);
            let cond = condition_number(&a)?;
            out.line("max_rel_err", &format!("{err:e}"));
            out.line("condition_number", &out.float(cond));
            if err <= 1e-12 {
                out.line("status", "PASS: max_rel_err < 1e-12");
                Ok(())
            } else {
                out.line("status", "FAIL: max_rel_err >= 1e-12");
                Err(CliError::Verification(format!(
                    "round-trip error {err:e} exceeds 1e-12"
                )))
            }
        }
        GridCommand::Cond { r_ratios } => {
            let mut prev: Option<f64> = None;
            let mut monotone = true;
            for ratio in r_ratios {
                let b = fixture(*ratio, 96)?;
                let cond = condition_number(&b)?;
                match cli.output {
                    OutputMode::Text => {
                        println!("r_ratio {} -> condition_number {}", ratio, out.float(cond))
                    }
                    OutputMode::Records => println!("cond_{ratio}={}", out.float(cond)),
                }
                if let Some(p) = prev {
                    monotone &= cond >= p;
                }
                prev = Some(cond);
            }
            out.line("monotone", if monotone { "true" } else { "false" });
            Ok(())
        }
        GridCommand::Write {
            r_ratio,
            resolution,
            out: path,
        } => {
            let a = fixture(*r_ratio, *resolution)?;
            let f = File::create(path).map_err(|e| CliError::Internal(e.to_string()))?;
            write_binary(&a, BufWriter::new(f))?;
            out.line("written", path);
            Ok(())
        }
        GridCommand::Csv { input, out: path } => {
            let f = File::open(input).map_err(|e| CliError::Internal(e.to_string()))?;
            let grid = read_binary(BufReader::new(f))?;
            let g = File::create(path).map_err(|e| CliError::Internal(e.to_string()))?;
            write_csv(&grid, BufWriter::new(g))?;
            out.line("written", path);
            Ok(())
        }
        GridCommand::Info { input } => {
            let f = File::open(input).map_err(|e| CliError::Internal(e.to_string()))?;
            let grid = read_binary(BufReader::new(f))?;
            out.line("N", &grid.resolution().to_string());
            out.line("L", &out.float(grid.half_width()));
            out.line("hbar", &out.float(grid.hbar()));
            out.line("r", &out.float(grid.support_radius()));
            out.line("max_norm", &format!("{:e}", grid.max_norm()));
            Ok(())
        }
        GridCommand::Eval { input, z } => {
            let f = File::open(input).map_err(|e| CliError::Internal(e.to_string()))?;
            let grid = read_binary(BufReader::new(f))?;
            if z.len() != 2 {
                return Err(CliError::Usage("grid eval expects --z x,p".into()));
            }
            let v = synthesize(&grid, &[PhasePoint::dim1(z[0], z[1])])[0];
            out.result(
                "value",
                &format!("{} + {} i", out.float(v.re), out.float(v.im)),
            );
            Ok(())
        }
    }
}

fn context(cli: &Cli) -> Result<ThetaContext, CliError> {
    if cli.dim == 0 {
        return Err(CliError::Usage("--dim must be at least 1".into()));
    }
    Ok(ThetaContext::new(resolve_hbar(cli)?, cli.dim))
}

fn resolve_hbar(cli: &Cli) -> Result<f64, CliError> {
    let text = match &cli.hbar {
        Some(t) => t.clone(),
        None => match std::env::var("BJCALC_HBAR") {
            Ok(t) if !t.trim().is_empty() => t,
            _ => return Ok(1.0),
        },
    };
    let value = parse_hbar(&text).map_err(CliError::Usage)?;
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(CliError::Usage(format!(
            "hbar must be positive, got {text}"
        )))
    }
}

/// Accepts a decimal ("0.25") or a rational ("1/4").
fn parse_hbar(text: &str) -> Result<f64, String> {
    let text = text.trim();
    if let Some((num, den)) = text.split_once('/') {
        let n: f64 = num
            .trim()
            .parse()
            .map_err(|_| format!("bad rational numerator in hbar '{text}'"))?;
        let d: f64 = den
            .trim()
            .parse()
            .map_err(|_| format!("bad rational denominator in hbar '{text}'"))?;
        if d == 0.0 {
            return Err("hbar denominator is zero".into());
        }
        Ok(n / d)
    } else {
        text.parse().map_err(|_| format!("bad hbar value '{text}'"))
    }
}

fn phase_point(cli: &Cli, coords: &[f64]) -> Result<PhasePoint, CliError> {
    if coords.len() != 2 * cli.dim {
        return Err(CliError::Usage(format!(
            "expected {} coordinates (x_1..x_n,p_1..p_n) for dim {}, got {}",
            2 * cli.dim,
            cli.dim,
            coords.len()
        )));
    }
    Ok(PhasePoint::from_flat(coords))
}

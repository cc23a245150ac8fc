//! `ckn`: command-line front end.
//!
//! Exit codes: `check` returns 0 (symmetry breaking), 10 (radial proved) or
//! 11 (inconclusive); every other command returns 0 on success. Invalid input
//! exits with 2 and a failed numerical method with 3; `verify` exits 1 when a
//! battery fails.

mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ckn::extremal::{PhiMethod, RadialExtremal};
use ckn::scan::{self, AxisRange, GridOverride, ScanFormat, ScanJob};
use ckn::second_variation::{self, a_star, argmin_beta, classify, discriminant_d, Classification};
use ckn::spectral::{self, LogGrid, DEFAULT_PENCIL_NODES};
use ckn::verify::{self, VerifyLevel};
use ckn::{CknParams, Error};

use report::{Format, Report, Table};

#[derive(Parser)]
#[command(name = "ckn", version, about = "Symmetry breaking for weighted CKN best constants")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output format.
    #[arg(long, value_enum, default_value = "table", global = true)]
    format: Format,
    /// Write output here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Args, Clone, Copy)]
struct ParamArgs {
    #[arg(long)]
    n: u32,
    #[arg(long)]
    p: f64,
    #[arg(long)]
    q: f64,
    #[arg(long, allow_hyphen_values = true)]
    a: f64,
}

impl ParamArgs {
    fn validate(&self) -> Result<CknParams, Error> {
        CknParams::validate(self.n, self.p, self.q, self.a)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Classify (n, p, q, a); the exit code carries the verdict.
    Check(ParamArgs),
    /// Closed-form threshold a*(n, p, q).
    Astar {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        q: f64,
    },
    /// Samples of the radial extremal with its equation residual.
    Extremal {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, default_value_t = 1e-3)]
        r_min: f64,
        #[arg(long, default_value_t = 1e3)]
        r_max: f64,
        #[arg(long, default_value_t = 25)]
        samples: usize,
    },
    /// Closed-form second variation along the test direction with exponent beta.
    Secondvar {
        #[command(flatten)]
        params: ParamArgs,
        /// `auto` (the minimizing choice Q/p) or a number.
        #[arg(long, default_value = "auto", allow_hyphen_values = true)]
        beta: String,
    },
    /// Smallest eigenvalue of the discretized stability pencil.
    Eigen {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, default_value_t = DEFAULT_PENCIL_NODES)]
        grid_count: usize,
        /// Symmetric window [-S, S] in log r; adaptive when omitted.
        #[arg(long)]
        s_halfwidth: Option<f64>,
        /// Write the eigenvector as CSV with columns r,v.
        #[arg(long)]
        eigvec_out: Option<PathBuf>,
    },
    /// Classify a (q, a) grid at fixed (n, p).
    Scan(ScanArgs),
    /// Run the self-consistency batteries.
    Verify {
        /// `fast` (12 fixed tuples) or `full` (100 seeded random tuples).
        #[arg(long, default_value = "fast")]
        level: VerifyLevel,
    },
}

#[derive(Args)]
struct ScanArgs {
    /// JSON job file; inline flags are ignored when given.
    #[arg(long, conflicts_with_all = ["n", "p", "q_lo", "q_hi", "q_steps", "a_lo", "a_hi", "a_steps"])]
    job: Option<PathBuf>,
    #[arg(long, required_unless_present = "job")]
    n: Option<u32>,
    #[arg(long, required_unless_present = "job")]
    p: Option<f64>,
    #[arg(long, required_unless_present = "job")]
    q_lo: Option<f64>,
    #[arg(long, required_unless_present = "job")]
    q_hi: Option<f64>,
    #[arg(long, default_value_t = 10)]
    q_steps: usize,
    #[arg(long, required_unless_present = "job", allow_hyphen_values = true)]
    a_lo: Option<f64>,
    #[arg(long, required_unless_present = "job", allow_hyphen_values = true)]
    a_hi: Option<f64>,
    #[arg(long, default_value_t = 10)]
    a_steps: usize,
    #[arg(long)]
    with_spectral: bool,
    #[arg(long)]
    grid_count: Option<usize>,
    #[arg(long)]
    s_halfwidth: Option<f64>,
}

/// Error paired with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Convergence(_) | Error::Tail(_) => 3,
            _ => 2,
        };
        Failure {
            code,
            message: format!("error: {e}"),
        }
    }
}

fn usage(message: String) -> Failure {
    Failure { code: 2, message: format!("error: {message}") }
}

fn write_output(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|source| {
            Failure::from(Error::Io {
                path: path.to_path_buf(),
                source,
            })
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn params_report(prm: &CknParams) -> Report {
    Report::new()
        .field("n", prm.n())
        .field("p", prm.p())
        .field("q", prm.q())
        .field("a", prm.a())
}

fn check(cli: &Cli, args: &ParamArgs) -> Result<u8, Failure> {
    let prm = args.validate()?;
    let class = classify(&prm);
    let at = a_star(prm.n(), prm.p(), prm.q())?;
    let mut rep = params_report(&prm)
        .field("classification", class.as_str())
        .field("D", discriminant_d(&prm))
        .field("a_star", at)
        .field("margin", prm.a() - at);
    if class == Classification::Inconclusive && prm.p() >= f64::from(prm.n()) {
        rep = rep.field("note", "for p >= n it is UNKNOWN whether the true threshold exceeds p - n");
    }
    write_output(cli.out.as_deref(), &rep.render(cli.format))?;
    Ok(match class {
        Classification::SymmetryBreaking => 0,
        Classification::RadialProved => 10,
        Classification::Inconclusive => 11,
    })
}

fn astar(cli: &Cli, n: u32, p: f64, q: f64) -> Result<u8, Failure> {
    let at = a_star(n, p, q)?;
    let text = match cli.format {
        Format::Table => format!("{at}\n"),
        f => Report::new()
            .field("n", n)
            .field("p", p)
            .field("q", q)
            .field("a_star", at)
            .render(f),
    };
    write_output(cli.out.as_deref(), &text)?;
    Ok(0)
}

fn extremal(cli: &Cli, args: &ParamArgs, r_min: f64, r_max: f64, samples: usize) -> Result<u8, Failure> {
    let prm = args.validate()?;
    if !(r_min > 0.0 && r_max >= r_min && r_max.is_finite()) || samples == 0 {
        return Err(usage(format!(
            "need 0 < r-min <= r-max and samples >= 1, got [{r_min}, {r_max}] x {samples}"
        )));
    }
    let ext = RadialExtremal::new(&prm);
    let rows = (0..samples)
        .map(|i| {
            let r = match i {
                0 => r_min,
                i if i + 1 == samples => r_max,
                i => (r_min.ln() + i as f64 / (samples - 1) as f64 * (r_max.ln() - r_min.ln())).exp(),
            };
            let res = ext.el_residual_terms(r).relative();
            vec![r, ext.u(r), ext.du(r), res]
        })
        .collect();
    let table = Table {
        header: vec!["r", "U", "dU", "residual"],
        rows,
        meta: params_report(&prm).field("C", ext.c()).field("gamma", ext.gamma()),
    };
    // the dump is CSV unless another format is asked for explicitly
    let format = if cli.format == Format::Table { Format::Csv } else { cli.format };
    write_output(cli.out.as_deref(), &table.render(format))?;
    Ok(0)
}

fn secondvar(cli: &Cli, args: &ParamArgs, beta: &str) -> Result<u8, Failure> {
    let prm = args.validate()?;
    let beta = match beta {
        "auto" => argmin_beta(&prm),
        v => v
            .parse::<f64>()
            .map_err(|_| usage(format!("--beta must be `auto` or a number, got {v:?}")))?,
    };
    let r = second_variation::report(&prm, beta, PhiMethod::Closed)?;
    let reductions_ok = r.reduction_defect_1 <= 1e-9 && r.reduction_defect_2 <= 1e-9;
    let rep = params_report(&prm)
        .field("beta", r.beta)
        .field("I0", r.i0)
        .field("I1", r.i1)
        .field("I2", r.i2)
        .field("s1", r.s1)
        .field("s2", r.s2)
        .field("M", r.m)
        .field("P", r.p_value)
        .field("D", r.d)
        .field("a_star", r.a_star)
        .field("classification", r.classification.as_str())
        .field("reduction_defect_1", r.reduction_defect_1)
        .field("reduction_defect_2", r.reduction_defect_2)
        .field("reductions", if reductions_ok { "OK" } else { "FAILED" });
    write_output(cli.out.as_deref(), &rep.render(cli.format))?;
    Ok(0)
}

fn eigen(
    cli: &Cli,
    args: &ParamArgs,
    grid_count: usize,
    s_halfwidth: Option<f64>,
    eigvec_out: Option<&Path>,
) -> Result<u8, Failure> {
    let prm = args.validate()?;
    let grid = match s_halfwidth {
        Some(s) => LogGrid::symmetric(s, grid_count)?,
        None => LogGrid::for_pencil(&prm, grid_count)?,
    };
    let r = spectral::mu_min(&prm, &grid)?;
    if let Some(path) = eigvec_out {
        let table = Table {
            header: vec!["r", "v"],
            rows: r
                .eigvec
                .grid()
                .radii()
                .zip(r.eigvec.values())
                .map(|(x, v)| vec![x, *v])
                .collect(),
            meta: Report::new(),
        };
        write_output(Some(path), &table.render(Format::Csv))?;
    }
    let rep = params_report(&prm)
        .field("mu_min", r.mu_min)
        .field("threshold", r.threshold)
        .field("certified_breaking", r.certified_breaking)
        .field("witness_ratio", r.witness_ratio)
        .field("residual", r.residual)
        .field("sign_changes", r.sign_changes)
        .field("s_min", grid.s_min())
        .field("s_max", grid.s_max())
        .field("grid_count", grid.count())
        .field("D", discriminant_d(&prm))
        .field("a_star", a_star(prm.n(), prm.p(), prm.q())?);
    write_output(cli.out.as_deref(), &rep.render(cli.format))?;
    Ok(0)
}

fn scan_job(args: &ScanArgs, cli: &Cli) -> Result<ScanJob, Failure> {
    if let Some(path) = &args.job {
        let text = std::fs::read_to_string(path).map_err(|source| {
            Failure::from(Error::Io {
                path: path.clone(),
                source,
            })
        })?;
        let mut job: ScanJob = serde_json::from_str(&text)
            .map_err(|e| usage(format!("invalid job file {}: {e}", path.display())))?;
        if cli.out.is_some() {
            job.output_path = cli.out.clone();
        }
        return Ok(job);
    }
    let required = |v: Option<f64>| v.expect("clap enforces required scan flags");
    let grid_override = (args.grid_count.is_some() || args.s_halfwidth.is_some()).then_some(GridOverride {
        count: args.grid_count,
        s_halfwidth: args.s_halfwidth,
    });
    Ok(ScanJob {
        n: args.n.expect("clap enforces required scan flags"),
        p: required(args.p),
        q_range: AxisRange {
            lo: required(args.q_lo),
            hi: required(args.q_hi),
            steps: args.q_steps,
        },
        a_range: AxisRange {
            lo: required(args.a_lo),
            hi: required(args.a_hi),
            steps: args.a_steps,
        },
        with_spectral: args.with_spectral,
        grid_override,
        output_path: cli.out.clone(),
        format: if cli.format == Format::Json { ScanFormat::Json } else { ScanFormat::Csv },
    })
}

fn scan_cmd(cli: &Cli, args: &ScanArgs) -> Result<u8, Failure> {
    let job = scan_job(args, cli)?;
    let records = scan::run_scan(&job)?;
    let Some(path) = &job.output_path else {
        print!("{}", scan::render(&records, job.format)?);
        return Ok(0);
    };
    scan::emit(&records, job.format, path)?;
    let breaking = records
        .iter()
        .filter(|r| r.classification == Classification::SymmetryBreaking)
        .count();
    let failed = records.iter().filter(|r| r.error.is_some()).count();
    let mut rep = Report::new()
        .field("n", job.n)
        .field("p", job.p)
        .field("records", records.len())
        .field("symmetry_breaking", breaking)
        .field("errors", failed)
        .field("output", path.display().to_string());
    if job.p >= f64::from(job.n) {
        rep = rep.field("threshold_above_hardy", "UNKNOWN");
    }
    // the file holds the records; only the summary goes to the terminal
    let format = if cli.format == Format::Csv { Format::Table } else { cli.format };
    print!("{}", rep.render(format));
    Ok(0)
}

fn verify_cmd(cli: &Cli, level: VerifyLevel) -> Result<u8, Failure> {
    let rep = verify::run(level);
    let text = match cli.format {
        Format::Json => format!(
            "{}\n",
            serde_json::to_string_pretty(&rep).map_err(|e| usage(e.to_string()))?
        ),
        Format::Table | Format::Csv => {
            let mut out = String::new();
            for c in &rep.checks {
                out.push_str(&format!(
                    "{:<30} {} cases={} worst={:.2e} tol={:.0e}\n",
                    c.name,
                    if c.passed { "PASS" } else { "FAIL" },
                    c.cases,
                    c.worst,
                    c.tolerance
                ));
                if let Some(d) = &c.detail {
                    out.push_str(&format!("    {d}\n"));
                }
            }
            out
        }
    };
    write_output(cli.out.as_deref(), &text)?;
    Ok(if rep.passed() { 0 } else { 1 })
}

fn run(cli: &Cli) -> Result<u8, Failure> {
    match &cli.command {
        Command::Check(args) => check(cli, args),
        Command::Astar { n, p, q } => astar(cli, *n, *p, *q),
        Command::Extremal {
            params,
            r_min,
            r_max,
            samples,
        } => extremal(cli, params, *r_min, *r_max, *samples),
        Command::Secondvar { params, beta } => secondvar(cli, params, beta),
        Command::Eigen {
            params,
            grid_count,
            s_halfwidth,
            eigvec_out,
        } => eigen(cli, params, *grid_count, *s_halfwidth, eigvec_out.as_deref()),
        Command::Scan(args) => scan_cmd(cli, args),
        Command::Verify { level } => verify_cmd(cli, *level),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("{}", f.message);
            ExitCode::from(f.code)
        }
    }
}

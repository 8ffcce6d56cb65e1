use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use dilation_forge::builder::{self, BuildError, BuildOptions};
use dilation_forge::io::{self, IoError, ReportBody, ReportFile, MODEL_KIND};
use dilation_forge::linalg::c;
use dilation_forge::random::{self, Style};
use dilation_forge::tuple::{ClassReport, PurityVerdict, TupleSpec, PSD_TOL};
use dilation_forge::verifier::{self, VerificationReport, VerifyOptions};

const EXIT_OK: u8 = 0;
const EXIT_INPUT: u8 = 1;
const EXIT_NOT_IN_CLASS: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;
const EXIT_RESIDUAL: u8 = 4;
const EXIT_VERIFY_FAILED: u8 = 5;

const THREADS_ENV: &str = "DILATION_FORGE_THREADS";

#[derive(Parser)]
#[command(name = "dilation-forge", version, about = "Classify tuples of twisted-commuting contractions and build, store and verify their Fock-space dilations.")]
#[command(after_help = "Exit codes: 0 success / in class; 1 input or IO error; 2 not in class or unsupported multiplicity; \
3 infeasible finite padding; 4 construction identity above tolerance; 5 verification failed.\n\
Cost grows like C(n-1+N, n-1) * dim D in the truncation degree N.\n\
DILATION_FORGE_THREADS is accepted as a parallelism hint; results do not depend on it.")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Args)]
struct Common {
    /// Output format for reports printed to stdout.
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
    /// Write the report (classify, verify) or file (dilate, random) here.
    #[arg(long)]
    output: Option<String>,
}

#[derive(Args)]
struct BuildArgs {
    /// Truncation degree N of the Fock model.
    #[arg(long, default_value_t = 4)]
    degree: usize,
    /// Relative PSD tolerance of the class test.
    #[arg(long, default_value_t = PSD_TOL)]
    tol: f64,
    /// Auxiliary padding dimension (scalar mode) or lower bound on the
    /// per-component search bound (covariant mode).
    #[arg(long = "aux-pad", default_value_t = 0)]
    aux_pad: usize,
    /// Seed for the completion of the coupling unitary; 0 is canonical.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl BuildArgs {
    fn options(&self) -> BuildOptions {
        BuildOptions { degree: self.degree, aux_pad: self.aux_pad, completion_seed: self.seed, psd_tol: self.tol, ..BuildOptions::default() }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Test a tuple file against the class conditions.
    Classify {
        #[arg(long)]
        input: String,
        #[arg(long, default_value_t = PSD_TOL)]
        tol: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Build the dilation of a tuple and write the model file.
    Dilate {
        #[arg(long)]
        input: String,
        #[command(flatten)]
        build: BuildArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Verify a model file, or build and verify a tuple file.
    Verify {
        #[arg(long)]
        input: String,
        #[command(flatten)]
        build: BuildArgs,
        /// Largest |α| in the moment check.
        #[arg(long = "moment-degree", default_value_t = 3)]
        moment_degree: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Emit a seeded random class member as a tuple file.
    Random {
        #[arg(long, default_value_t = 3)]
        n: usize,
        #[arg(long = "dimH", default_value_t = 3)]
        dim_h: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "scaled-commuting")]
        style: Style,
        #[arg(long)]
        output: Option<String>,
    },
    /// Dilate and verify the scalar triple (0.5, 0.4, 0.3).
    Demo {
        #[arg(long, default_value_t = 4)]
        degree: usize,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
}

struct Failure {
    code: u8,
    message: String,
}

impl From<IoError> for Failure {
    fn from(e: IoError) -> Self {
        let code = match &e {
            IoError::Build(b) => build_code(b),
            _ => EXIT_INPUT,
        };
        Failure { code, message: e.to_string() }
    }
}

impl From<BuildError> for Failure {
    fn from(e: BuildError) -> Self {
        Failure { code: build_code(&e), message: e.to_string() }
    }
}

fn build_code(e: &BuildError) -> u8 {
    match e {
        BuildError::Malformed(_) => EXIT_INPUT,
        BuildError::NotInClass(_) | BuildError::UnsupportedMultiplicity(_) => EXIT_NOT_IN_CLASS,
        BuildError::InfeasibleFinitePadding { .. } => EXIT_INFEASIBLE,
        BuildError::IdentityResidualExceeded { .. } | BuildError::Linalg(_) => EXIT_RESIDUAL,
    }
}

fn emit(text: &str, output: Option<&str>) -> Result<(), Failure> {
    match output {
        Some(path) => Ok(io::write_file(path, text)?),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

fn class_text(r: &ClassReport) -> String {
    let mut s = format!("tuple: n = {}, dimH = {}, d = {}\n", r.n, r.dim_h, r.d);
    let norms: Vec<String> = r.row_norms.iter().map(|x| format!("{x:.6}")).collect();
    s += &format!("row norms: [{}] (contraction tuple: {})\n", norms.join(", "), yes_no(r.is_contraction_tuple));
    s += &format!("commutation residual: {:.3e}\n", r.commutation_residual);
    if let Some(cv) = r.covariance_residual {
        s += &format!("covariance residual: {cv:.3e}\n");
    }
    for (label, z) in [("omitting t_1", &r.szego_hat1), ("omitting t_n", &r.szego_hatn)] {
        s += &format!("Szegő operator {label} over {:?}: min eigenvalue {:.6e} ({})\n", z.subset, z.min_eig, if z.psd { "PSD" } else { "NOT PSD" });
    }
    for p in &r.hatn_purity {
        s += &format!("t_{}: spectral radius of its CP map {:.12} ({:?})\n", p.index, p.spectral_radius, p.verdict);
    }
    let gk: Vec<String> = r.gkvw.iter().filter(|g| g.holds).map(|g| format!("({},{})", g.p, g.q)).collect();
    s += &format!("pairs (p,q) with both omitted Szegő operators PSD: [{}]\n", gk.join(", "));
    s += &format!("in class: {}\n", yes_no(r.in_t1n));
    for reason in failing_conditions(r) {
        s += &format!("failing: {reason}\n");
    }
    s
}

fn failing_conditions(r: &ClassReport) -> Vec<String> {
    let mut out = Vec::new();
    if !r.szego_hat1.psd {
        out.push(format!("Szegő operator omitting t_1 is not PSD (min eigenvalue {:.6e})", r.szego_hat1.min_eig));
    }
    if !r.szego_hatn.psd {
        out.push(format!("Szegő operator omitting t_n is not PSD (min eigenvalue {:.6e})", r.szego_hatn.min_eig));
    }
    for p in r.hatn_purity.iter().filter(|p| p.verdict != PurityVerdict::Pure) {
        out.push(format!("t_{} is not certified pure ({:?})", p.index, p.verdict));
    }
    out
}

fn verification_text(r: &VerificationReport) -> String {
    let mut s = format!("truncation degree N = {}\n", r.degree);
    s += &format!("{:<34} {:>12} {:>10}  {}\n", "identity", "residual", "tol", "status");
    for e in &r.entries {
        let (tol, status) = match e.tol {
            Some(t) => (format!("{t:.0e}"), if e.passed() { "PASS" } else { "FAIL" }),
            None => ("-".to_string(), "info"),
        };
        s += &format!("{:<34} {:>12.3e} {:>10}  {}\n", e.name, e.residual, tol, status);
    }
    s += &format!("all gated identities pass: {}\n", yes_no(r.passed()));
    s
}

fn report_out(body: ReportBody, format: Format, output: Option<&str>) -> Result<(), Failure> {
    let file = ReportFile::new(body);
    if let Some(path) = output {
        io::write_file(path, &file.to_json())?;
    }
    let text = match (&file.body, format) {
        (_, Format::Json) => file.to_json(),
        (ReportBody::Classification(r), Format::Text) => class_text(r),
        (ReportBody::Verification(r), Format::Text) => verification_text(r),
    };
    if output.is_none() || format == Format::Text {
        print!("{text}");
    }
    Ok(())
}

fn classify(input: &str, tol: f64, common: &Common) -> Result<u8, Failure> {
    let spec = io::parse_tuple(&io::read_file(input)?)?;
    let target = builder::embed_single(&spec);
    let report = target.classify_with_tol(tol).map_err(IoError::from)?;
    let code = if report.in_t1n { EXIT_OK } else { EXIT_NOT_IN_CLASS };
    report_out(ReportBody::Classification(report), common.format, common.output.as_deref())?;
    Ok(code)
}

fn dilate(input: &str, args: &BuildArgs, common: &Common) -> Result<u8, Failure> {
    let spec = io::parse_tuple(&io::read_file(input)?)?;
    let model = builder::dilate(&spec, &args.options())?;
    if let Some(path) = &common.output {
        io::write_file(path, &io::model_to_string(&model))?;
    }
    let summary = serde_json::json!({
        "schema_version": io::SCHEMA_VERSION,
        "kind": "dilation_summary",
        "degree": model.degree(),
        "generators": model.fock.m,
        "cells": model.fock.num_cells(),
        "coeff_dim": model.coeff_dim(),
        "fock_dim": model.fock.dim(),
        "aux_dim": model.coupling.aux_dim,
        "output": common.output,
    });
    match common.format {
        Format::Json => println!("{}", serde_json::to_string_pretty(&summary).expect("summary serializes")),
        Format::Text => {
            println!("dilation built at truncation degree N = {}", model.degree());
            println!("Fock cells: {} over {} generators; coefficient space dimension {} (aux {})", model.fock.num_cells(), model.fock.m, model.coeff_dim(), model.coupling.aux_dim);
            println!("model dimension: {}", model.fock.dim());
            if let Some(path) = &common.output {
                println!("model written to {path}");
            }
        }
    }
    Ok(EXIT_OK)
}

fn verify(input: &str, args: &BuildArgs, moment_degree: usize, common: &Common) -> Result<u8, Failure> {
    let value = io::parse_json(&io::read_file(input)?)?;
    let options = VerifyOptions { moment_degree };
    let report = if value.get("kind").and_then(|k| k.as_str()) == Some(MODEL_KIND) {
        let loaded = io::model_from_value(&value)?;
        let mut report = verifier::verify_all(&loaded.model, &options);
        report.entries.extend(loaded.consistency);
        report
    } else {
        let spec = io::tuple_from_value(&value, "$")?;
        let model = builder::build(&spec, &args.options())?;
        verifier::verify_all(&model, &options)
    };
    let code = if report.passed() { EXIT_OK } else { EXIT_VERIFY_FAILED };
    report_out(ReportBody::Verification(report), common.format, common.output.as_deref())?;
    Ok(code)
}

fn random_cmd(n: usize, dim_h: usize, seed: u64, style: Style, output: Option<&str>) -> Result<u8, Failure> {
    let spec = random::generate(style, n, dim_h, seed).map_err(|e| Failure { code: EXIT_INPUT, message: e.to_string() })?;
    emit(&io::tuple_to_string(&spec), output)?;
    Ok(EXIT_OK)
}

fn demo(degree: usize, format: Format) -> Result<u8, Failure> {
    let spec = TupleSpec::scalars(&[c(0.5, 0.0), c(0.4, 0.0), c(0.3, 0.0)]);
    let options = BuildOptions { degree, ..BuildOptions::default() };
    let model = builder::dilate(&spec, &options)?;
    let report = verifier::verify_all(&model, &VerifyOptions::default());
    if format == Format::Text {
        println!("scalar triple t = (0.5, 0.4, 0.3) on C");
        let d = &model.defects;
        println!("D_1^2 = {:.4}, D_n^2 = {:.4}, D_1n^2 = {:.4}", d.d1_sq[(0, 0)].re, d.dn_sq[(0, 0)].re, d.d1n_sq[(0, 0)].re);
        println!("Fock cells: {} per coefficient dimension {}", model.fock.num_cells(), model.coeff_dim());
    }
    let code = if report.passed() { EXIT_OK } else { EXIT_VERIFY_FAILED };
    report_out(ReportBody::Verification(report), format, None)?;
    Ok(code)
}

fn threads_hint() {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        if v.trim().parse::<usize>().map_or(true, |t| t == 0) {
            eprintln!("warning: ignoring {THREADS_ENV}={v:?}; expected a positive integer");
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    threads_hint();
    let result = match &cli.command {
        Command::Classify { input, tol, common } => classify(input, *tol, common),
        Command::Dilate { input, build, common } => dilate(input, build, common),
        Command::Verify { input, build, moment_degree, common } => verify(input, build, *moment_degree, common),
        Command::Random { n, dim_h, seed, style, output } => random_cmd(*n, *dim_h, *seed, *style, output.as_deref()),
        Command::Demo { degree, format } => demo(*degree, *format),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

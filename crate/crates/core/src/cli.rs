//! Command-line front end. Exit codes: 0 verified/passed, 1 refuted or a
//! hypothesis failed, 2 bad input (unreadable file, schema, dimensions, flags).

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::battery;
use crate::constructions::{
    perturbation_estimate, perturbation_predict, operator_image_construct, commuting_image_construct, OperatorImageReport,
    CommutingImageReport,
};
use crate::error::Error;
use crate::fusion::WeightedSubspaceSystem;
use crate::generator::{generate, Flavor, GenSpec};
use crate::io::{self, GeneratedDocument, LoadError};
use crate::kfusion::{kfusion_verify, norm_chain_check, AtomicDecomposer};
use crate::linalg::{self, sym_eig, Matrix};
use crate::report::{Hypothesis, Outcome};
use crate::vector_frames::local_to_global;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_REFUTED: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "fusionlab", version, about = "Fusion frame and K-fusion frame verification")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub opts: Options,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Command {
    /// K-fusion frame verification (fusion frame bounds without --operator).
    Verify,
    /// Optimal fusion frame bounds and the frame operator spectrum.
    Bounds,
    /// Atomic decomposition of K·f (K defaults to the identity).
    Decompose,
    /// Image system under --operator-t (commuting case) or under K itself.
    Transform,
    /// Perturbation parameters and predicted bounds for --system-b against --system.
    Perturb,
    /// Local frames to the flattened global vector frame.
    LocalGlobal,
    /// Generate a seeded instance.
    Gen,
    /// Run the full property suite.
    CheckAll,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FlavorArg {
    Arbitrary,
    GuaranteedFusionFrame,
    GuaranteedKFusionFrame,
    OperatorImageCompatible,
}

impl From<FlavorArg> for Flavor {
    fn from(f: FlavorArg) -> Self {
        match f {
            FlavorArg::Arbitrary => Flavor::Arbitrary,
            FlavorArg::GuaranteedFusionFrame => Flavor::GuaranteedFusionFrame,
            FlavorArg::GuaranteedKFusionFrame => Flavor::GuaranteedKFusionFrame,
            FlavorArg::OperatorImageCompatible => Flavor::OperatorImageCompatible,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct Options {
    /// Weighted subspace system (JSON), or a `gen` bundle.
    #[arg(long, global = true)]
    pub system: Option<PathBuf>,
    /// Operator K (JSON matrix), or a `gen` bundle.
    #[arg(long, global = true)]
    pub operator: Option<PathBuf>,
    /// Operator T for `transform`.
    #[arg(long = "operator-t", global = true)]
    pub operator_t: Option<PathBuf>,
    /// Vector f (JSON array) for `decompose`.
    #[arg(long, global = true)]
    pub vector: Option<PathBuf>,
    /// Perturbed system for `perturb`.
    #[arg(long = "system-b", global = true)]
    pub system_b: Option<PathBuf>,
    /// Generator spec (JSON) for `gen`.
    #[arg(long, global = true)]
    pub spec: Option<PathBuf>,
    /// Flavor for `gen` when no --spec is given.
    #[arg(long, global = true, value_enum)]
    pub flavor: Option<FlavorArg>,
    /// Relative decision tolerance; must be positive.
    #[arg(long, global = true, default_value_t = 1e-9, allow_negative_numbers = true)]
    pub tol: f64,
    /// Seed for `gen` (default 0) and `check-all` (default 1).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

/// A finished command: exit code plus the report in both renderings.
#[derive(Debug)]
pub struct Report {
    pub code: i32,
    pub json: Value,
    pub text: String,
}

#[derive(Debug)]
pub enum Failure {
    Input(String),
    Refuted(String),
}

impl Failure {
    pub fn code(&self) -> i32 {
        match self {
            Failure::Input(_) => EXIT_INPUT,
            Failure::Refuted(_) => EXIT_REFUTED,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Input(m) | Failure::Refuted(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Input(_) | Error::Dimension(_) | Error::NotSymmetric { .. } => Failure::Input(e.to_string()),
            _ => Failure::Refuted(e.to_string()),
        }
    }
}

impl From<LoadError> for Failure {
    fn from(e: LoadError) -> Self {
        Failure::Input(e.to_string())
    }
}

type CmdResult = std::result::Result<Report, Failure>;

/// Twelve significant digits, trailing zeros trimmed.
pub fn sig(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let e = x.abs().log10().floor() as i32;
    if (-4..12).contains(&e) {
        let decimals = (11 - e).max(0) as usize;
        let s = format!("{x:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        format!("{x:.11e}")
    }
}

fn vec_text(v: &[f64]) -> String {
    format!("[{}]", v.iter().map(|&x| sig(x)).collect::<Vec<_>>().join(", "))
}

fn to_json<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("reports serialize")
}

fn need<'a>(p: &'a Option<PathBuf>, flag: &str) -> std::result::Result<&'a Path, Failure> {
    p.as_deref().ok_or_else(|| Failure::Input(format!("missing required --{flag}")))
}

fn load_system(p: &Option<PathBuf>, flag: &str) -> std::result::Result<WeightedSubspaceSystem, Failure> {
    Ok(io::load_system(need(p, flag)?)?)
}

fn load_operator_or_identity(opts: &Options, n: usize) -> std::result::Result<Matrix, Failure> {
    match &opts.operator {
        Some(p) => Ok(io::load_operator(p)?),
        None => Ok(Matrix::identity(n)),
    }
}

fn hypotheses_text(out: &mut String, hyps: &[Hypothesis]) {
    for h in hyps {
        let _ = writeln!(out, "  {:<34} {} (margin {})", h.name, if h.holds { "holds" } else { "FAILS" }, sig(h.margin));
    }
}

fn outcome_code(o: Outcome) -> i32 {
    if o == Outcome::Confirmed {
        EXIT_PASS
    } else {
        EXIT_REFUTED
    }
}

fn cmd_bounds(opts: &Options, with_spectrum: bool) -> CmdResult {
    let sys = load_system(&opts.system, "system")?;
    let b = sys.bounds(opts.tol)?;
    let mut json = json!({"verdict": b.verdict, "lower": b.lower, "upper": b.upper});
    let mut text = format!("verdict: {}\nlower:   {}\nupper:   {}\n", to_json(&b.verdict).as_str().unwrap_or(""), sig(b.lower), sig(b.upper));
    if with_spectrum {
        let spec = sym_eig(&sys.frame_operator())?;
        json["spectrum"] = to_json(&spec.eigenvalues);
        let _ = writeln!(text, "spectrum: {}", vec_text(&spec.eigenvalues));
    }
    Ok(Report { code: if b.verdict.is_frame() { EXIT_PASS } else { EXIT_REFUTED }, json, text })
}

fn cmd_verify(opts: &Options) -> CmdResult {
    if opts.operator.is_none() {
        return cmd_bounds(opts, false);
    }
    let sys = load_system(&opts.system, "system")?;
    let k = io::load_operator(need(&opts.operator, "operator")?)?;
    let r = kfusion_verify(&sys, &k, opts.tol)?;
    let mut parts = serde_json::Map::new();
    let mut text = format!(
        "is_kff:   {}\nlower:    {}\nupper:    {}\nresidual: {}\n",
        r.is_kff,
        sig(r.optimal_lower),
        sig(r.optimal_upper),
        sig(r.residual)
    );
    if let Some(t) = &r.factor_t {
        parts.insert("factor_t".into(), to_json(t));
        let p = norm_chain_check(&sys, &k, opts.tol)?;
        let _ = writeln!(text, "inequality chain: {}", if p.passed { "holds" } else { "VIOLATED" });
        parts.insert("inequality_chain".into(), to_json(&p));
    }
    if let Some(d) = &r.defect_direction {
        let _ = writeln!(text, "defect direction: {}", vec_text(d));
        parts.insert("defect_direction".into(), to_json(d));
    }
    let json = json!({
        "is_kff": r.is_kff,
        "lower": r.optimal_lower,
        "upper": r.optimal_upper,
        "residual": r.residual,
        "parts": parts,
    });
    Ok(Report { code: if r.is_kff { EXIT_PASS } else { EXIT_REFUTED }, json, text })
}

fn cmd_decompose(opts: &Options) -> CmdResult {
    let sys = load_system(&opts.system, "system")?;
    let k = load_operator_or_identity(opts, sys.ambient_dim())?;
    let f = io::load_vector(need(&opts.vector, "vector")?)?;
    sys.check_operator(&k, "K")?;
    let dec = AtomicDecomposer::new(&sys, &k, opts.tol)?;
    let bundle = dec.decompose(&f)?;
    let kf = k.matvec(&f);
    let recon = sys.synthesis(&bundle)?;
    let residual = linalg::norm(&linalg::matrix::sub(&recon, &kf));
    let c = dec.constant();
    let mut text = String::new();
    for (i, b) in bundle.blocks.iter().enumerate() {
        let _ = writeln!(text, "a[{i}] = {}", vec_text(b));
    }
    let _ = writeln!(text, "constant C:             {}", sig(c));
    let _ = writeln!(text, "coefficient norm:       {}", sig(bundle.norm()));
    let _ = writeln!(text, "reconstruction residual: {}", sig(residual));
    let json = json!({
        "blocks": bundle.blocks,
        "constant_c": c,
        "coefficient_norm": bundle.norm(),
        "reconstruction_residual": residual,
    });
    Ok(Report { code: EXIT_PASS, json, text })
}

fn transform_text(hyps: &[Hypothesis], outcome: Outcome, lower: f64, upper: f64, is_kff: bool) -> String {
    let mut text = String::from("hypotheses:\n");
    hypotheses_text(&mut text, hyps);
    let _ = writeln!(text, "transformed is_kff: {is_kff}\ntransformed lower:  {}\ntransformed upper:  {}", sig(lower), sig(upper));
    let _ = writeln!(text, "outcome: {}", to_json(&outcome).as_str().unwrap_or(""));
    text
}

fn cmd_transform(opts: &Options) -> CmdResult {
    let sys = load_system(&opts.system, "system")?;
    let k = io::load_operator(need(&opts.operator, "operator")?)?;
    if let Some(tp) = &opts.operator_t {
        let t = io::load_operator(tp)?;
        let r: CommutingImageReport = commuting_image_construct(&sys, &k, &t, opts.tol)?;
        let mut text = transform_text(&r.hypotheses, r.outcome, r.transformed.optimal_lower, r.transformed.optimal_upper, r.transformed.is_kff);
        if let (Some(a), Some(b)) = (r.predicted_lower, r.predicted_upper) {
            let _ = writeln!(text, "predicted interval: [{}, {}]", sig(a), sig(b));
        }
        let mut json = to_json(&r);
        json["construction"] = json!("commuting_operator");
        Ok(Report { code: outcome_code(r.outcome), json, text })
    } else {
        let r: OperatorImageReport = operator_image_construct(&sys, &k, opts.tol)?;
        let text = transform_text(&r.hypotheses, r.outcome, r.transformed.optimal_lower, r.transformed.optimal_upper, r.transformed.is_kff);
        let mut json = to_json(&r);
        json["construction"] = json!("operator_image");
        Ok(Report { code: outcome_code(r.outcome), json, text })
    }
}

fn cmd_perturb(opts: &Options) -> CmdResult {
    let w = load_system(&opts.system, "system")?;
    let v = load_system(&opts.system_b, "system-b")?;
    let k = load_operator_or_identity(opts, w.ambient_dim())?;
    let p = perturbation_estimate(&w, &v, opts.tol)?;
    let base = kfusion_verify(&w, &k, opts.tol)?;
    if !base.is_kff {
        return Err(Failure::Refuted("the original system is not a K-fusion frame".into()));
    }
    let actual = kfusion_verify(&v, &k, opts.tol)?;
    let admissible = p.admissible(base.optimal_lower);
    let predicted = if admissible { Some(perturbation_predict(base.optimal_lower, base.optimal_upper, &p)?) } else { None };
    let within = predicted.map(|(a, b)| {
        actual.is_kff && actual.optimal_lower >= a * (1.0 - opts.tol) && actual.optimal_upper <= b * (1.0 + opts.tol)
    });
    let mut text = format!(
        "lambda1: {}\nlambda2: {}\nmu:      {}\nadmissible: {admissible}\n",
        sig(p.lambda1),
        sig(p.lambda2),
        sig(p.mu)
    );
    let _ = writeln!(text, "original bounds:  [{}, {}]", sig(base.optimal_lower), sig(base.optimal_upper));
    if let Some((a, b)) = predicted {
        let _ = writeln!(text, "predicted bounds: [{}, {}]", sig(a), sig(b));
    }
    let _ = writeln!(text, "perturbed bounds: [{}, {}] (is_kff {})", sig(actual.optimal_lower), sig(actual.optimal_upper), actual.is_kff);
    if let Some(ok) = within {
        let _ = writeln!(text, "within prediction: {ok}");
    }
    let json = json!({
        "params": p,
        "admissible": admissible,
        "original": {"lower": base.optimal_lower, "upper": base.optimal_upper},
        "predicted": predicted.map(|(a, b)| json!({"lower": a, "upper": b})),
        "perturbed": {"is_kff": actual.is_kff, "lower": actual.optimal_lower, "upper": actual.optimal_upper},
        "within_prediction": within,
    });
    let code = if within == Some(true) { EXIT_PASS } else { EXIT_REFUTED };
    Ok(Report { code, json, text })
}

fn cmd_local_global(opts: &Options) -> CmdResult {
    let sys = load_system(&opts.system, "system")?;
    let r = local_to_global(&sys, opts.tol)?;
    let mut text = String::new();
    for (i, lb) in r.local_bounds.iter().enumerate() {
        match lb {
            Some(b) => {
                let _ = writeln!(text, "member {i}: local bounds [{}, {}]{}", sig(b.lower), sig(b.upper), if b.spans { "" } else { " (not spanning)" });
            }
            None => {
                let _ = writeln!(text, "member {i}: zero subspace");
            }
        }
    }
    let _ = writeln!(text, "C = {}, D = {}", sig(r.c), sig(r.d));
    let _ = writeln!(text, "fusion bounds: [{}, {}]", sig(r.fusion.lower), sig(r.fusion.upper));
    let _ = writeln!(text, "global bounds: [{}, {}]", sig(r.global.lower), sig(r.global.upper));
    let _ = writeln!(text, "verdicts agree: {}\nwithin [A·C, B·D]: {}", r.equivalence_holds, r.interval_holds);
    let _ = writeln!(text, "outcome: {}", to_json(&r.outcome).as_str().unwrap_or(""));
    let json = to_json(&r);
    Ok(Report { code: outcome_code(r.outcome), json, text })
}

fn cmd_gen(opts: &Options) -> CmdResult {
    let mut spec = match &opts.spec {
        Some(p) => io::load_spec(p)?,
        None => GenSpec::new(0, opts.flavor.map(Flavor::from).unwrap_or(Flavor::Arbitrary)),
    };
    if let Some(seed) = opts.seed {
        spec.seed = seed;
    }
    if let (Some(f), Some(_)) = (opts.flavor, &opts.spec) {
        spec.flavor = f.into();
    }
    let inst = generate(&spec)?;
    let doc = GeneratedDocument { spec, system: inst.system, operator: inst.operator };
    let json = to_json(&doc);
    let text = serde_json::to_string_pretty(&json).expect("serializable") + "\n";
    Ok(Report { code: EXIT_PASS, json, text })
}

fn cmd_check_all(opts: &Options) -> CmdResult {
    let seed = opts.seed.unwrap_or(battery::DEFAULT_SEED);
    let r = battery::run_all(seed);
    let mut text = format!("seed {seed}\n");
    for c in &r.checks {
        let _ = writeln!(
            text,
            "{:<4} {:<28} trials {:>4}  confirmed {:>4}  vacuous {:>4}  failures {:>3}",
            if c.passed() { "ok" } else { "FAIL" },
            c.name,
            c.trials,
            c.confirmed,
            c.vacuous,
            c.failures
        );
        for t in &c.failed_trials {
            let _ = writeln!(text, "       {t}");
        }
    }
    let _ = writeln!(text, "total failures: {}", r.failures);
    let json = to_json(&r);
    Ok(Report { code: if r.passed() { EXIT_PASS } else { EXIT_REFUTED }, json, text })
}

pub fn execute(cli: &Cli) -> CmdResult {
    if !(cli.opts.tol > 0.0 && cli.opts.tol.is_finite()) {
        return Err(Failure::Input(format!("--tol must be positive and finite, got {}", cli.opts.tol)));
    }
    match cli.command {
        Command::Verify => cmd_verify(&cli.opts),
        Command::Bounds => cmd_bounds(&cli.opts, true),
        Command::Decompose => cmd_decompose(&cli.opts),
        Command::Transform => cmd_transform(&cli.opts),
        Command::Perturb => cmd_perturb(&cli.opts),
        Command::LocalGlobal => cmd_local_global(&cli.opts),
        Command::Gen => cmd_gen(&cli.opts),
        Command::CheckAll => cmd_check_all(&cli.opts),
    }
}

fn emit(opts: &Options, body: &str) -> i32 {
    match &opts.out {
        Some(p) => match fs::write(p, body) {
            Ok(()) => EXIT_PASS,
            Err(e) => {
                eprintln!("error: cannot write {}: {e}", p.display());
                EXIT_INPUT
            }
        },
        None => {
            print!("{body}");
            EXIT_PASS
        }
    }
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: &Cli) -> i32 {
    let result = execute(cli);
    let (code, body) = match result {
        Ok(r) => {
            let body = match cli.opts.format {
                Format::Json => serde_json::to_string_pretty(&r.json).expect("serializable") + "\n",
                Format::Text => r.text,
            };
            (r.code, body)
        }
        Err(f) => {
            eprintln!("error: {}", f.message());
            if cli.opts.format == Format::Text {
                return f.code();
            }
            let body = serde_json::to_string_pretty(&json!({"error": f.message(), "exit_code": f.code()})).expect("serializable") + "\n";
            (f.code(), body)
        }
    };
    let written = emit(&cli.opts, &body);
    if written != EXIT_PASS {
        return written;
    }
    code
}

pub fn main() -> i32 {
    run(&Cli::parse())
}

//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage or input error, 2 model is not completely
//! positive (`validate`), 3 numerical tolerance breach.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::basis::BasisKind;
use crate::dynamics::{entanglement_onset, negativity_curve, uniform_grid, DensityMatrix, Onset};
use crate::generator::{validate_cp, GeneratorModel};
use crate::linalg::{CMatrix, CVector};
use crate::model::{parse_state, ModelFile, ScanOutput, ScanSpec};
use crate::search::{capability_in_basis, find_entangling_state, oracle_confirms, SearchVerdict};
use crate::witness::{flip_vectors, resolve_verdict, ProductState, DEFAULT_TOL_MINOR};
use crate::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NOT_CP: i32 = 2;
pub const EXIT_TOLERANCE: i32 = 3;

pub const EVOLVE_HEADER: &str = "t,negativity,min_pt_eigenvalue,trace_error";
pub const SCAN_HEADER: &str = "p1,p2,is_cp,min_minor,verdict,onset_t";

#[derive(Debug, Parser)]
#[command(name = "lindblad-witness", version, about = "Entanglement-generation witnesses for two-party Lindblad dynamics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct ModelArgs {
    /// Model file (TOML)
    #[arg(long)]
    model: PathBuf,
    /// Override a model parameter, e.g. `--param x=1.2`
    #[arg(long = "param", value_name = "NAME=VALUE", value_parser = parse_param)]
    params: Vec<(String, f64)>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check complete positivity of the Kossakowski matrix
    Validate {
        #[command(flatten)]
        model: ModelArgs,
    },
    /// First-order witness analysis at one product state
    Witness {
        #[command(flatten)]
        model: ModelArgs,
        /// "00", "0000" (tensor-Pauli qubits) or "psi=a,b;phi=c,d"
        #[arg(long)]
        state: String,
        #[arg(long, default_value_t = DEFAULT_TOL_MINOR)]
        tol: f64,
    },
    /// Negativity along exp(tL)[Q] as CSV
    Evolve {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        state: String,
        #[arg(long)]
        tmax: f64,
        #[arg(long, default_value_t = 200)]
        steps: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Parameter sweep as CSV
    Scan {
        #[command(flatten)]
        model: ModelArgs,
        /// Scan specification (TOML)
        #[arg(long)]
        scan: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Multistart search for an entangling product state
    Search {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 16)]
        budget: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_TOL_MINOR)]
        tol: f64,
    },
    /// Entangling capability of the coupling Hamiltonian
    Capability {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 8)]
        budget: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn parse_param(s: &str) -> std::result::Result<(String, f64), String> {
    let (name, value) = s.split_once('=').ok_or("expected NAME=VALUE")?;
    let value: f64 = value.trim().parse().map_err(|_| format!("bad value {value:?}"))?;
    Ok((name.trim().to_string(), value))
}

/// Runs the CLI on `args` (including the program name) and returns the exit
/// code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{e}");
                    EXIT_USAGE
                }
            };
            return code;
        }
    };
    match dispatch(cli.command, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::ToleranceBreach(_) | Error::NonFinite(_) => EXIT_TOLERANCE,
        _ => EXIT_USAGE,
    }
}

fn load(args: &ModelArgs) -> Result<(ModelFile, GeneratorModel)> {
    let file = ModelFile::load(&args.model)?;
    let overrides: Vec<(&str, f64)> = args.params.iter().map(|(n, v)| (n.as_str(), *v)).collect();
    let model = file.to_model_with(&overrides)?;
    Ok((file, model))
}

fn dispatch(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    match command {
        Command::Validate { model } => cmd_validate(&model, out),
        Command::Witness { model, state, tol } => cmd_witness(&model, &state, tol, out, err),
        Command::Evolve {
            model,
            state,
            tmax,
            steps,
            out: path,
        } => cmd_evolve(&model, &state, tmax, steps, path.as_deref(), out),
        Command::Scan { model, scan, out: path } => cmd_scan(&model, &scan, path.as_deref(), out),
        Command::Search { model, budget, seed, tol } => cmd_search(&model, budget, seed, tol, out),
        Command::Capability { model, budget, seed } => cmd_capability(&model, budget, seed, out),
    }
}

fn fmt_c(z: Complex64) -> String {
    format!("{:.10}{:+.10}i", z.re, z.im)
}

fn fmt_vec(v: &CVector) -> String {
    let parts: Vec<String> = v.iter().map(|z| fmt_c(*z)).collect();
    format!("[{}]", parts.join(", "))
}

fn write_matrix(out: &mut dyn Write, m: &CMatrix) -> Result<()> {
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| fmt_c(m[(i, j)])).collect();
        writeln!(out, "  {}", row.join("  "))?;
    }
    Ok(())
}

fn write_state(out: &mut dyn Write, s: &ProductState) -> Result<()> {
    writeln!(out, "psi: {}", fmt_vec(&s.psi))?;
    writeln!(out, "phi: {}", fmt_vec(&s.phi))?;
    Ok(())
}

fn basis_description(model: &GeneratorModel) -> String {
    let kind = match model.basis.kind {
        BasisKind::Pauli => "pauli".to_string(),
        BasisKind::GellMann => "gellmann".to_string(),
        BasisKind::TensorPauli { qubits } => format!("tensor_pauli ({qubits} qubits)"),
    };
    format!("{kind}, d = {}, n = {}", model.d(), model.n())
}

fn cmd_validate(args: &ModelArgs, out: &mut dyn Write) -> Result<i32> {
    let (_, model) = load(args)?;
    let report = validate_cp(&model.kossakowski);
    writeln!(out, "basis: {}", basis_description(&model))?;
    let ev: Vec<String> = report.eigenvalues.iter().map(|v| format!("{v:.16e}")).collect();
    writeln!(out, "kossakowski_eigenvalues: {}", ev.join(" "))?;
    writeln!(out, "min_eigenvalue: {:.16e}", report.min_eigenvalue)?;
    writeln!(out, "is_cp: {}", report.is_cp)?;
    Ok(if report.is_cp { EXIT_OK } else { EXIT_NOT_CP })
}

fn indices_1based(indices: &[usize]) -> String {
    let v: Vec<String> = indices.iter().map(|i| (i + 1).to_string()).collect();
    format!("{{{}}}", v.join(","))
}

fn cmd_witness(args: &ModelArgs, state: &str, tol: f64, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let (_, model) = load(args)?;
    let state = parse_state(state, &model.basis)?;
    if !validate_cp(&model.kossakowski).is_cp {
        writeln!(err, "warning: Kossakowski matrix is not positive semidefinite")?;
    }
    let resolution = resolve_verdict(&model, &state, tol)?;
    let analysis = &resolution.analysis;
    let flips = flip_vectors(&state, &model.basis)?;
    write_state(out, &state)?;
    for (k, u) in flips.u.iter().enumerate() {
        writeln!(out, "u[{}]: {}", k + 2, fmt_vec(u))?;
    }
    for (k, v) in flips.v.iter().enumerate() {
        writeln!(out, "v[{}]: {}", k + 2, fmt_vec(v))?;
    }
    writeln!(out, "M:")?;
    write_matrix(out, &analysis.matrix.m)?;
    writeln!(out, "minors:")?;
    for r in analysis.minors.iter().filter(|r| !r.skipped) {
        writeln!(out, "  {} order {}: {:.16e}", indices_1based(&r.indices), r.order(), r.value)?;
    }
    writeln!(out, "first_order: {}", analysis.verdict.label())?;
    if let crate::witness::FirstOrderVerdict::Entangling { certificate } = &analysis.verdict {
        writeln!(
            out,
            "certificate: {} = {:.16e}",
            indices_1based(&certificate.indices),
            certificate.value
        )?;
    }
    for step in &resolution.steps {
        writeln!(
            out,
            "expansion k={}: min_coefficient {:.16e} band {:.3e} candidates {}",
            step.order, step.min_coefficient, step.band, step.candidates
        )?;
    }
    writeln!(out, "verdict: {}", resolution.verdict.label())?;
    Ok(EXIT_OK)
}

fn write_output(path: Option<&Path>, text: &str, out: &mut dyn Write) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn cmd_evolve(
    args: &ModelArgs,
    state: &str,
    tmax: f64,
    steps: usize,
    path: Option<&Path>,
    out: &mut dyn Write,
) -> Result<i32> {
    let (_, model) = load(args)?;
    let state = parse_state(state, &model.basis)?;
    let grid = uniform_grid(tmax, steps)?;
    let superop = model.generator().superoperator();
    let curve = negativity_curve(&superop, &DensityMatrix::from_product_state(&state), model.d(), &grid)?;
    let mut text = String::from(EVOLVE_HEADER);
    text.push('\n');
    for i in 0..curve.len() {
        text.push_str(&format!(
            "{:.16e},{:.16e},{:.16e},{:.16e}\n",
            curve.times[i], curve.negativities[i], curve.min_pt_eigenvalues[i], curve.trace_errors[i]
        ));
    }
    write_output(path, &text, out)?;
    Ok(EXIT_OK)
}

/// One evaluated scan point.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanRow {
    pub p1: f64,
    pub p2: Option<f64>,
    pub is_cp: Option<bool>,
    pub min_minor: Option<f64>,
    pub verdict: Option<String>,
    pub onset: Option<Onset>,
}

impl ScanRow {
    pub fn to_csv(&self) -> String {
        let f = |v: Option<f64>| v.map(|x| format!("{x:.16e}")).unwrap_or_default();
        let onset = match self.onset {
            None => String::new(),
            Some(Onset::NoneFound) => "none".into(),
            Some(Onset::Found { t, .. }) => format!("{t:.16e}"),
        };
        format!(
            "{},{},{},{},{},{}",
            f(Some(self.p1)),
            f(self.p2),
            self.is_cp.map(|b| b.to_string()).unwrap_or_default(),
            f(self.min_minor),
            self.verdict.clone().unwrap_or_default(),
            onset
        )
    }
}

fn scan_point(file: &ModelFile, spec: &ScanSpec, p1: f64, p2: Option<f64>) -> Result<ScanRow> {
    let mut overrides = vec![(spec.p1.name.as_str(), p1)];
    if let (Some(r), Some(v)) = (&spec.p2, p2) {
        overrides.push((r.name.as_str(), v));
    }
    let model = file.to_model_with(&overrides)?;
    let state = if spec.state.trim() == "search" {
        find_entangling_state(&model, spec.budget, spec.seed, DEFAULT_TOL_MINOR)?.best_state
    } else {
        parse_state(&spec.state, &model.basis)?
    };
    let needs_witness = spec.wants(ScanOutput::Minors) || spec.wants(ScanOutput::Verdict);
    let resolution = if needs_witness {
        Some(resolve_verdict(&model, &state, DEFAULT_TOL_MINOR)?)
    } else {
        None
    };
    let onset = match &spec.onset {
        Some(g) if spec.wants(ScanOutput::Onset) => {
            Some(entanglement_onset(&model, &state, &uniform_grid(g.tmax, g.steps)?)?)
        }
        _ => None,
    };
    Ok(ScanRow {
        p1,
        p2,
        is_cp: spec.wants(ScanOutput::Cp).then(|| validate_cp(&model.kossakowski).is_cp),
        min_minor: resolution
            .as_ref()
            .filter(|_| spec.wants(ScanOutput::Minors))
            .and_then(|r| r.analysis.min_minor().map(|m| m.value)),
        verdict: resolution
            .as_ref()
            .filter(|_| spec.wants(ScanOutput::Verdict))
            .map(|r| r.verdict.label()),
        onset,
    })
}

/// Evaluates every grid point of `spec` in parallel, returning rows in grid
/// order.
pub fn run_scan(file: &ModelFile, spec: &ScanSpec) -> Result<Vec<ScanRow>> {
    for name in std::iter::once(&spec.p1.name).chain(spec.p2.as_ref().map(|r| &r.name)) {
        if !file.params.contains_key(name) {
            return Err(Error::model("scan", format!("model has no parameter {name:?}")));
        }
    }
    if spec.wants(ScanOutput::Onset) && spec.onset.is_none() {
        return Err(Error::model("scan", "onset output needs an [onset] grid"));
    }
    spec.points()
        .into_par_iter()
        .map(|(p1, p2)| scan_point(file, spec, p1, p2))
        .collect()
}

fn cmd_scan(args: &ModelArgs, scan: &Path, path: Option<&Path>, out: &mut dyn Write) -> Result<i32> {
    let (file, _) = load(args)?;
    let spec = ScanSpec::load(scan)?;
    let rows = run_scan(&file, &spec)?;
    let mut text = String::from(SCAN_HEADER);
    text.push('\n');
    for row in &rows {
        text.push_str(&row.to_csv());
        text.push('\n');
    }
    write_output(path, &text, out)?;
    Ok(EXIT_OK)
}

fn cmd_search(args: &ModelArgs, budget: usize, seed: u64, tol: f64, out: &mut dyn Write) -> Result<i32> {
    let (_, model) = load(args)?;
    let report = find_entangling_state(&model, budget, seed, tol)?;
    write_state(out, &report.best_state)?;
    writeln!(
        out,
        "best_minor: {} = {:.16e}",
        indices_1based(&report.best_minor.indices),
        report.best_minor.value
    )?;
    writeln!(out, "starts: {}", report.starts)?;
    writeln!(out, "evaluations: {}", report.evaluations)?;
    match report.verdict {
        SearchVerdict::CertificateFound => {
            writeln!(out, "verdict: certificate_found")?;
            writeln!(out, "oracle_confirmed: {}", oracle_confirms(&model, &report.best_state)?)?;
        }
        SearchVerdict::NoViolationFound => {
            writeln!(out, "verdict: no_violation_found (heuristic, {} starts)", report.starts)?;
        }
    }
    Ok(EXIT_OK)
}

fn cmd_capability(args: &ModelArgs, budget: usize, seed: u64, out: &mut dyn Write) -> Result<i32> {
    let (file, model) = load(args)?;
    if !file.has_h12() {
        return Err(Error::model("hamiltonian.h12", "capability needs h12"));
    }
    let report = capability_in_basis(&model.hamiltonian.h12, &model.basis, budget, seed)?;
    let sv: Vec<String> = report.singular_values.iter().map(|v| format!("{v:.16e}")).collect();
    writeln!(out, "singular_values: {}", sv.join(" "))?;
    writeln!(out, "eta_max: {:.16e}", report.eta_max)?;
    writeln!(out, "closed_form: {}", report.closed_form)?;
    writeln!(out, "eta_found: {:.16e}", report.eta_found)?;
    write_state(out, &report.maximizer)?;
    Ok(EXIT_OK)
}

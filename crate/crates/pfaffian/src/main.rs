//! Command-line surface for the Pfaffian-system engine.
//!
//! Exit codes: 0 success, 1 mathematical failure (inconsistent system,
//! aborted solve, rejected solution), 2 invalid input.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use serde_json::json;

use pfaffian::diagnostics::{degree_profile, gevrey_fit, radius_estimate, Ray};
use pfaffian::docs::{SolutionDocument, SystemDocument};
use pfaffian::integrability::DefectSet;
use pfaffian::rat::parse_rat;
use pfaffian::series::MultiIndex;
use pfaffian::solver::{solve_formal, verify, FreePolicy, LedgerEntry, SolveStatus};
use pfaffian::system::PfaffianSystem;
use pfaffian::{is_completely_integrable, run_all, CriteriaOptions, VerdictStatus};

#[derive(Parser)]
#[command(
    name = "pfaffian",
    about = "Exact truncated power-series solutions and convergence checks \
             for meromorphic Pfaffian systems x_i^p_i dy/dx_i = f_i(x, y)",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the truncated formal solution of a system document
    Solve(SolveArgs),
    /// Verify a solution document and run all convergence criteria
    Check(CheckArgs),
    /// Report the compatibility defects F_ij and the integrability verdict
    #[command(alias = "defect")]
    Integrability(IntegrabilityArgs),
    /// Growth profile, Gevrey fit, and radius estimates for a solution
    Diagnose(DiagnoseArgs),
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Emit {
    Text,
    Json,
    Csv,
}

#[derive(Args)]
struct SolveArgs {
    /// System document (JSON)
    system: PathBuf,
    /// Truncation order (total degree)
    #[arg(long, default_value_t = 12)]
    order: u32,
    /// zero | fail | value:<assignments.json>
    #[arg(long, default_value = "zero")]
    free_policy: String,
    /// Write the solution document here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Emit::Text)]
    emit: Emit,
}

#[derive(Args)]
struct CheckArgs {
    system: PathBuf,
    solution: PathBuf,
    /// Override the eigenvalue scan bound for Theorems B and 1
    #[arg(long)]
    eig_bound: Option<u32>,
    #[arg(long, value_enum, default_value_t = Emit::Text)]
    emit: Emit,
}

#[derive(Args)]
struct IntegrabilityArgs {
    system: PathBuf,
    #[arg(long, value_enum, default_value_t = Emit::Text)]
    emit: Emit,
}

#[derive(Args)]
struct DiagnoseArgs {
    solution: PathBuf,
    /// axis<k> (e.g. axis1) or diagonal
    #[arg(long, default_value = "diagonal")]
    ray: String,
    #[arg(long, value_enum, default_value_t = Emit::Text)]
    emit: Emit,
    /// Write the emitted report here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Free-parameter assignments for `--free-policy value:<file>`:
/// `{"assignments": [{"k": [1,1], "c": ["1"]}]}`.
#[derive(Deserialize)]
struct AssignmentDocument {
    assignments: Vec<AssignmentEntry>,
}

#[derive(Deserialize)]
struct AssignmentEntry {
    k: Vec<u32>,
    c: Vec<String>,
}

fn input_err(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(2)
}

fn load_system(path: &PathBuf) -> Result<PfaffianSystem, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let doc = SystemDocument::from_json(&text).map_err(|e| e.to_string())?;
    doc.to_system().map_err(|e| e.to_string())
}

fn load_solution(path: &PathBuf) -> Result<pfaffian::SeriesVec, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let doc = SolutionDocument::from_json(&text).map_err(|e| e.to_string())?;
    doc.to_series_vec().map_err(|e| e.to_string())
}

fn parse_policy(text: &str) -> Result<FreePolicy, String> {
    match text {
        "zero" => Ok(FreePolicy::Zero),
        "fail" => Ok(FreePolicy::Fail),
        other => {
            let Some(path) = other.strip_prefix("value:") else {
                return Err(format!(
                    "unknown free policy '{other}' (expected zero, fail, or value:<file>)"
                ));
            };
            let text = std::fs::read_to_string(path)
                .map_err(|e| format!("cannot read {path}: {e}"))?;
            let doc: AssignmentDocument =
                serde_json::from_str(&text).map_err(|e| e.to_string())?;
            let mut map = BTreeMap::new();
            for entry in doc.assignments {
                let values = entry
                    .c
                    .iter()
                    .map(|s| parse_rat(s))
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| e.to_string())?;
                map.insert(MultiIndex(entry.k), values);
            }
            Ok(FreePolicy::Value(map))
        }
    }
}

fn write_or_print(out: &Option<PathBuf>, content: &str) -> Result<(), String> {
    match out {
        Some(path) => std::fs::write(path, content)
            .map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => {
            println!("{content}");
            Ok(())
        }
    }
}

fn cmd_solve(args: &SolveArgs) -> ExitCode {
    let sys = match load_system(&args.system) {
        Ok(s) => s,
        Err(e) => return input_err(e),
    };
    let policy = match parse_policy(&args.free_policy) {
        Ok(p) => p,
        Err(e) => return input_err(e),
    };
    let (solution, report) = match solve_formal(&sys, args.order, &policy) {
        Ok(v) => v,
        Err(e) => return input_err(e),
    };
    let doc = SolutionDocument::from_series_vec(&solution.phi);
    let free: Vec<String> = report
        .free_locations
        .iter()
        .map(|k| format!("{:?}", k.0))
        .collect();
    match args.emit {
        Emit::Json => {
            let status = match &report.status {
                SolveStatus::Solved => json!({"kind": "solved"}),
                SolveStatus::Inconsistent {
                    index,
                    equation,
                    row,
                } => json!({
                    "kind": "inconsistent",
                    "index": index.0,
                    "equation": equation,
                    "row": row,
                }),
                SolveStatus::Aborted { index, reason } => json!({
                    "kind": "aborted",
                    "index": index.0,
                    "reason": reason,
                }),
            };
            let payload = json!({
                "status": status,
                "order": solution.order,
                "free_indices": report.free_locations.iter().map(|k| k.0.clone()).collect::<Vec<_>>(),
                "solution": serde_json::to_value(&doc).unwrap(),
            });
            if let Some(path) = &args.out {
                if let Err(e) = std::fs::write(path, doc.to_json()) {
                    eprintln!("error: cannot write {}: {e}", path.display());
                    return ExitCode::from(2);
                }
            }
            println!("{}", serde_json::to_string_pretty(&payload).unwrap());
        }
        _ => {
            match &report.status {
                SolveStatus::Solved => {
                    eprintln!("status: solved through order {}", solution.order);
                }
                SolveStatus::Inconsistent {
                    index,
                    equation,
                    row,
                } => {
                    eprintln!(
                        "status: inconsistent at index {:?}, stacked row {row}: {equation}",
                        index.0
                    );
                }
                SolveStatus::Aborted { index, reason } => {
                    eprintln!("status: aborted at index {:?}: {reason}", index.0);
                }
            }
            let determined = solution
                .ledger
                .values()
                .filter(|e| matches!(e, LedgerEntry::Determined(_)))
                .count();
            eprintln!(
                "ledger: {determined} determined, {} free",
                report.free_locations.len()
            );
            if !free.is_empty() {
                eprintln!("free indices: {}", free.join(", "));
            }
            if write_or_print(&args.out, &doc.to_json()).is_err() {
                return ExitCode::from(2);
            }
        }
    }
    match report.status {
        SolveStatus::Solved => ExitCode::SUCCESS,
        _ => ExitCode::from(1),
    }
}

fn cmd_check(args: &CheckArgs) -> ExitCode {
    let sys = match load_system(&args.system) {
        Ok(s) => s,
        Err(e) => return input_err(e),
    };
    let phi = match load_solution(&args.solution) {
        Ok(p) => p,
        Err(e) => return input_err(e),
    };
    let vrep = match verify(&sys, &phi) {
        Ok(v) => v,
        Err(e) => return input_err(e),
    };
    if !vrep.residual_ok {
        let monomial = vrep.failing_monomial.as_deref().unwrap_or("?");
        match args.emit {
            Emit::Json => {
                let payload = json!({
                    "residual_verified_through": vrep.verified_through,
                    "residual_ok": false,
                    "failing_monomial": monomial,
                    "verdicts": [],
                    "certified": false,
                    "conclusion": "solution rejected: residual does not vanish",
                });
                println!("{}", serde_json::to_string_pretty(&payload).unwrap());
            }
            _ => {
                println!(
                    "residual fails at degree {}: first offending monomial {monomial}",
                    vrep.verified_through + 1
                );
                println!("solution rejected before criteria run");
            }
        }
        return ExitCode::from(1);
    }
    let options = CriteriaOptions {
        eig_bound: args.eig_bound,
        ..CriteriaOptions::default()
    };
    let report = match run_all(&sys, Some(&phi), &options) {
        Ok(r) => r,
        Err(e) => return input_err(e),
    };
    match args.emit {
        Emit::Json => {
            let payload = json!({
                "residual_verified_through": vrep.verified_through,
                "residual_ok": true,
                "defect_checks": vrep
                    .defect_checks
                    .iter()
                    .map(|((i, j), ok)| json!({"pair": [i, j], "vanishes": ok}))
                    .collect::<Vec<_>>(),
                "verdicts": serde_json::to_value(&report.verdicts).unwrap(),
                "certified": report.certified,
                "conclusion": report.conclusion,
            });
            println!("{}", serde_json::to_string_pretty(&payload).unwrap());
        }
        _ => {
            println!(
                "residual verified through degree {}",
                vrep.verified_through
            );
            for ((i, j), ok) in &vrep.defect_checks {
                println!(
                    "defect F_{i}{j} on solution: {}",
                    if *ok { "vanishes" } else { "NONZERO" }
                );
            }
            for v in &report.verdicts {
                println!("{v}");
            }
            println!("{}", report.conclusion);
        }
    }
    ExitCode::SUCCESS
}

fn cmd_integrability(args: &IntegrabilityArgs) -> ExitCode {
    let sys = match load_system(&args.system) {
        Ok(s) => s,
        Err(e) => return input_err(e),
    };
    let verdict = match is_completely_integrable(&sys) {
        Ok(v) => v,
        Err(e) => return input_err(e),
    };
    let defects = match DefectSet::compute(&sys) {
        Ok(d) => d,
        Err(e) => return input_err(e),
    };
    match args.emit {
        Emit::Json => {
            let payload = json!({
                "integrable": verdict.status == VerdictStatus::Holds,
                "conclusion": verdict.conclusion,
                "defects": defects
                    .iter()
                    .map(|((i, j), fij)| json!({
                        "pair": [i, j],
                        "components": fij
                            .comps()
                            .iter()
                            .map(|p| p.to_string())
                            .collect::<Vec<_>>(),
                    }))
                    .collect::<Vec<_>>(),
            });
            println!("{}", serde_json::to_string_pretty(&payload).unwrap());
        }
        _ => {
            for ((i, j), fij) in defects.iter() {
                for (c, comp) in fij.comps().iter().enumerate() {
                    if fij.len() == 1 {
                        println!("F_{i}{j} = {comp}");
                    } else {
                        println!("F_{i}{j}[{}] = {comp}", c + 1);
                    }
                }
            }
            println!("{}", verdict.conclusion);
        }
    }
    ExitCode::SUCCESS
}

fn ray_from_arg(text: &str, m: usize) -> Result<Ray, String> {
    if text == "diagonal" {
        return Ok(Ray::Diagonal);
    }
    if let Some(rest) = text.strip_prefix("axis") {
        let axis: usize = rest
            .parse()
            .map_err(|_| format!("bad ray '{text}' (expected axis<k> or diagonal)"))?;
        if axis == 0 || axis > m {
            return Err(format!("axis {axis} out of range 1..={m}"));
        }
        return Ok(Ray::Axis(axis));
    }
    Err(format!("bad ray '{text}' (expected axis<k> or diagonal)"))
}

fn cmd_diagnose(args: &DiagnoseArgs) -> ExitCode {
    let phi = match load_solution(&args.solution) {
        Ok(p) => p,
        Err(e) => return input_err(e),
    };
    let ray = match ray_from_arg(&args.ray, phi.var_count()) {
        Ok(r) => r,
        Err(e) => return input_err(e),
    };
    let profile = degree_profile(&phi);
    if args.emit == Emit::Csv {
        if write_or_print(&args.out, profile.to_csv().trim_end()).is_err() {
            return ExitCode::from(2);
        }
        return ExitCode::SUCCESS;
    }
    let fit = gevrey_fit(&profile);
    let radius = radius_estimate(&phi, ray);
    match args.emit {
        Emit::Json => {
            let payload = json!({
                "order": profile.order(),
                "maxima": profile.maxima,
                "zero_degrees": profile.zero_degrees,
                "gevrey": match &fit {
                    Ok(f) => json!({
                        "s": f.s,
                        "log_a": f.log_a,
                        "log_c": f.log_c,
                        "r_squared": f.r_squared,
                        "degrees_used": f.degrees_used,
                    }),
                    Err(e) => json!({"warning": e.to_string()}),
                },
                "radius": match &radius {
                    Ok(r) => json!(r),
                    Err(e) => json!({"warning": e.to_string()}),
                },
            });
            println!("{}", serde_json::to_string_pretty(&payload).unwrap());
        }
        _ => {
            println!("degrees: {}", profile.order());
            match &fit {
                Ok(f) => {
                    println!(
                        "gevrey fit: s = {:.4}, logA = {:.4}, logC = {:.4}, r² = {:.6}",
                        f.s, f.log_a, f.log_c, f.r_squared
                    );
                    if f.s > 0.5 {
                        println!("factorial-type growth: likely divergent");
                    } else {
                        println!("bounded-type growth: consistent with convergence");
                    }
                }
                Err(e) => println!("warning: gevrey fit skipped ({e})"),
            }
            match &radius {
                Ok(r) => println!("radius estimate along {}: {r:.4}", args.ray),
                Err(e) => println!("warning: radius estimate skipped ({e})"),
            }
        }
    }
    ExitCode::SUCCESS
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match &cli.command {
        Command::Solve(args) => cmd_solve(args),
        Command::Check(args) => cmd_check(args),
        Command::Integrability(args) => cmd_integrability(args),
        Command::Diagnose(args) => cmd_diagnose(args),
    }
}

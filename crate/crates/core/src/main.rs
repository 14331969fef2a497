use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use meda::algsolve::{solve_numeric, verify_candidate, Candidate, SolveConfig};
use meda::compat::run_all;
use meda::expr::{eval_complex, parse_expr, Bindings, Expr, Scope, Symbol};
use meda::pde::{eliminate, integrate_once, reduce_to_ode, PdeProblem, TravelingWaveOde};
use meda::pipeline::{derive, DeriveOptions, TransformChoice};
use meda::poly::to_ratfunc;
use meda::solution::{assemble, Branch, VerifiedCandidate};
use meda::verify::{pde_residual, Grid, ParamValues, RESIDUAL_TOL};
use meda::{Error, Result};

#[derive(Parser)]
#[command(
    name = "meda",
    version,
    about = "Traveling-wave solutions by the modified extended direct algebraic method"
)]
struct Cli {
    /// Emit JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
    /// Seed for the numeric solver.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Residual tolerance (verify) or convergence tolerance (solve).
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Residual grid, `x0:x1:nx,t0:t1:nt`.
    #[arg(long, global = true, default_value = "-2:2:21,0:1:11")]
    grid: Grid,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Reduce a problem to its traveling-wave ODE.
    Reduce {
        problem: PathBuf,
        /// Integrate each equation once in z.
        #[arg(long)]
        integrate: bool,
        /// Eliminate this unknown (or its profile) from a two-equation system.
        #[arg(long)]
        eliminate: Option<String>,
    },
    /// Derive the algebraic system for the expansion coefficients.
    Derive {
        problem: PathBuf,
        #[command(flatten)]
        transform: TransformArgs,
    },
    /// Check a candidate against the derived system and the original equations.
    Verify {
        problem: PathBuf,
        candidate: PathBuf,
        #[command(flatten)]
        transform: TransformArgs,
        /// Parameter values for the residual check, `k=v,...`.
        #[arg(long)]
        params: Option<String>,
        /// φ branch used to build the closed form.
        #[arg(long)]
        branch: Option<Branch>,
    },
    /// Search numerically for roots of the system at fixed parameters.
    Solve {
        problem: PathBuf,
        #[command(flatten)]
        transform: TransformArgs,
        #[arg(long)]
        params: Option<String>,
        /// Unknowns held fixed, `k=v,...`.
        #[arg(long)]
        pin: Option<String>,
        #[arg(long, default_value_t = 200)]
        starts: usize,
    },
    /// Run the shipped solution cases and tabulate the outcome.
    Compat {
        #[arg(long)]
        case: Option<String>,
    },
}

#[derive(Args)]
struct TransformArgs {
    /// Power transform U = V^p.
    #[arg(long, allow_hyphen_values = true)]
    transform: Option<String>,
    /// Override the balance order.
    #[arg(long = "M")]
    m: Option<i64>,
}

impl TransformArgs {
    fn options(&self, auto: bool) -> Result<DeriveOptions> {
        let transform = match &self.transform {
            Some(p) => TransformChoice::Explicit(parse_expr(p, &Scope::open())?),
            None if auto => TransformChoice::Auto,
            None => TransformChoice::Never,
        };
        Ok(DeriveOptions {
            transform,
            m: self.m,
            constants: Vec::new(),
        })
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn fixtures_dir() -> PathBuf {
    if let Some(d) = std::env::var_os("MEDA_FIXTURES") {
        return PathBuf::from(d);
    }
    let local = Path::new("fixtures");
    if local.is_dir() {
        return local.to_path_buf();
    }
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

/// The path as given, else relative to the fixture directory.
fn locate(path: &Path) -> PathBuf {
    if path.exists() {
        return path.to_path_buf();
    }
    let alt = fixtures_dir().join(path);
    if alt.exists() {
        alt
    } else {
        path.to_path_buf()
    }
}

fn load_problem(path: &Path) -> Result<PdeProblem> {
    PdeProblem::from_file(locate(path))
}

fn read(path: &Path) -> Result<String> {
    let p = locate(path);
    std::fs::read_to_string(&p).map_err(|e| Error::Fixture(format!("{}: {e}", p.display())))
}

/// `k=v,...` with exact values.
fn parse_assignments(text: Option<&str>) -> Result<ParamValues> {
    let mut out = ParamValues::new();
    for part in text
        .unwrap_or("")
        .split(',')
        .filter(|p| !p.trim().is_empty())
    {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| Error::Fixture(format!("expected `name=value`, got `{part}`")))?;
        out.insert(Symbol::new(k.trim()), parse_expr(v.trim(), &Scope::open())?);
    }
    Ok(out)
}

fn numeric(values: &ParamValues) -> Result<Bindings> {
    values
        .iter()
        .map(|(k, v)| Ok((k.clone(), eval_complex(v, &Bindings::new())?)))
        .collect()
}

fn print_json(v: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(v).unwrap_or_default());
}

fn ode_json(ode: &TravelingWaveOde) -> serde_json::Value {
    json!({
        "z": ode.z.name(),
        "wave": ode.wave.to_string(),
        "profiles": ode.profiles.iter().map(Symbol::name).collect::<Vec<_>>(),
        "params": ode.params.iter().map(Symbol::name).collect::<Vec<_>>(),
        "equations": ode.equations.iter().map(Expr::to_string).collect::<Vec<_>>(),
        "integrated": ode.constants.is_some(),
        "elimination": ode.elimination.as_ref().map(|e| json!({"var": e.var.name(), "expr": e.expr.to_string()})),
    })
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.cmd {
        Cmd::Reduce {
            problem,
            integrate,
            eliminate: var,
        } => {
            let problem = load_problem(problem)?;
            let mut ode = reduce_to_ode(&problem)?;
            if *integrate {
                ode = integrate_once(&ode, &[])?;
            }
            if let Some(v) = var {
                let sym = Symbol::new(v);
                let k = problem.unknowns.iter().position(|u| *u == sym);
                let profile = match k {
                    Some(k) => problem.profiles()[k].clone(),
                    None => sym,
                };
                ode = eliminate_polynomial(&ode, &profile)?;
            }
            if cli.json {
                print_json(&ode_json(&ode));
            } else {
                println!("wave: {}", ode.wave);
                if let Some(el) = &ode.elimination {
                    println!("{} = {}", el.var, el.expr);
                }
                for e in &ode.equations {
                    println!("{e} = 0");
                }
            }
        }
        Cmd::Derive { problem, transform } => {
            let problem = load_problem(problem)?;
            let d = derive(&problem, &transform.options(false)?)?;
            if cli.json {
                print_json(&json!({
                    "balance": d.balance.to_string(),
                    "transform": d.working.transform.as_ref().map(|t| t.p.to_string()),
                    "ode": d.working.equations[0].to_string(),
                    "system": d.system.to_json(),
                }));
            } else {
                println!("balance: M = {}", d.balance);
                if let Some(t) = &d.working.transform {
                    println!("transform: {} = {}^({})", t.old_profile, t.new_profile, t.p);
                    println!("transformed: {} = 0", d.working.equations[0]);
                }
                println!("M = {}; unknowns: {}", d.m, names(&d.system.unknowns));
                println!(
                    "{} equations, multiplied by phi^{}",
                    d.system.len(),
                    d.system.clearing
                );
                print!("{}", d.system);
            }
        }
        Cmd::Verify {
            problem,
            candidate,
            transform,
            params,
            branch,
        } => {
            let problem = load_problem(problem)?;
            let (cand, directives) = Candidate::parse(&read(candidate)?)?;
            let mut opts = transform.options(true)?;
            let mut branch = *branch;
            let mut instances = Vec::new();
            for d in &directives {
                match d.key.as_str() {
                    "transform" if transform.transform.is_none() => {
                        opts.transform =
                            TransformChoice::Explicit(parse_expr(&d.value, &Scope::open())?)
                    }
                    "branch" if branch.is_none() => branch = Some(d.value.parse()?),
                    "instantiate" if params.is_none() => {
                        instances.push(parse_assignments(Some(&d.value))?)
                    }
                    _ => {}
                }
            }
            if params.is_some() {
                instances = vec![parse_assignments(params.as_deref())?];
            }
            let branch = branch.unwrap_or(Branch::Tan);
            let d = derive(&problem, &opts)?;
            let report = verify_candidate(&d.system, &cand)?;
            let tol = cli.tol.unwrap_or(RESIDUAL_TOL);
            let mut residuals = Vec::new();
            let mut fields = None;
            if report.pass {
                let vc = VerifiedCandidate::new(&d.system, cand.clone())?;
                let sol = assemble(&d.problem, &d.working, &d.system, &vc, branch)?;
                if instances.is_empty() && cand.arbitrary.is_empty() && d.problem.params.is_empty()
                {
                    instances.push(ParamValues::new());
                }
                for inst in &instances {
                    let mut values = inst.clone();
                    for (k, v) in cand.resolved() {
                        values.insert(k, v.substitute(inst));
                    }
                    residuals.push((
                        inst.clone(),
                        pde_residual(&d.problem, sol.fields(), &cli.grid, &values)?,
                    ));
                }
                fields = Some(sol);
            }
            let within = residuals.iter().all(|(_, r)| r.max() < tol);
            if cli.json {
                print_json(&json!({
                    "verification": report,
                    "solution": fields.as_ref().map(|s| s.to_json()),
                    "residuals": residuals.iter().map(|(inst, r)| json!({
                        "params": inst.iter().map(|(k, v)| (k.name().to_string(), v.to_string())).collect::<std::collections::BTreeMap<_, _>>(),
                        "report": r,
                    })).collect::<Vec<_>>(),
                    "tol": tol,
                    "within_tol": within,
                }));
            } else {
                println!(
                    "{}: {}",
                    report.source,
                    if report.pass { "pass" } else { "fail" }
                );
                for e in &report.equations {
                    if let Some(r) = &e.residual {
                        println!("  phi^{}: {r} != 0", e.power);
                    }
                }
                for n in &report.notes {
                    println!("  {n}");
                }
                if let Some(s) = &fields {
                    for (u, f) in s.fields() {
                        println!("{u}(x,t) = {f}");
                    }
                }
                for (inst, r) in &residuals {
                    let at: Vec<String> = inst.iter().map(|(k, v)| format!("{k}={v}")).collect();
                    println!(
                        "residual at {}: max {:.3e} ({} evaluated, {} skipped) {}",
                        if at.is_empty() {
                            "-".to_string()
                        } else {
                            at.join(",")
                        },
                        r.max(),
                        r.evaluated,
                        r.skipped,
                        if r.max() < tol {
                            "ok"
                        } else {
                            "above tolerance"
                        },
                    );
                }
            }
        }
        Cmd::Solve {
            problem,
            transform,
            params,
            pin,
            starts,
        } => {
            let problem = load_problem(problem)?;
            let d = derive(&problem, &transform.options(true)?)?;
            let params = numeric(&parse_assignments(params.as_deref())?)?;
            let pinned = numeric(&parse_assignments(pin.as_deref())?)?;
            let mut cfg = SolveConfig {
                starts: *starts,
                seed: cli.seed,
                ..SolveConfig::default()
            };
            if let Some(t) = cli.tol {
                cfg.tol = t;
            }
            let out = solve_numeric(&d.system, &params, &pinned, &cfg)?;
            if cli.json {
                print_json(&out.to_json());
            } else {
                println!(
                    "{}: {} candidate(s) from {} converged starts ({} constant-profile roots left out)",
                    out.status(),
                    out.candidates.len(),
                    out.converged_starts,
                    out.constant_roots
                );
                for (k, c) in out.candidates.iter().enumerate() {
                    let vals: Vec<String> = out
                        .unknowns
                        .iter()
                        .filter_map(|u| {
                            c.numeric
                                .get(u)
                                .map(|v| format!("{u} = {}", fmt_complex(v.re, v.im)))
                        })
                        .collect();
                    println!("[{k}] {}", vals.join(", "));
                }
            }
        }
        Cmd::Compat { case } => {
            let report = run_all(&fixtures_dir(), case.as_deref())?;
            if cli.json {
                print_json(&report.to_json());
            } else {
                print!("{}", report.to_markdown());
            }
        }
    }
    Ok(())
}

/// Substitutes into whichever equation stays free of denominators.
fn eliminate_polynomial(ode: &TravelingWaveOde, var: &Symbol) -> Result<TravelingWaveOde> {
    let mut first_err = None;
    let mut fallback = None;
    for into in [1, 0] {
        match eliminate(ode, var, into) {
            Ok(r) => {
                let polynomial = r
                    .expanded()?
                    .iter()
                    .all(|e| to_ratfunc(e).is_ok_and(|f| f.is_polynomial()));
                if polynomial {
                    return Ok(r);
                }
                fallback.get_or_insert(r);
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    fallback.ok_or_else(|| {
        first_err.unwrap_or_else(|| Error::Elimination(format!("cannot eliminate `{var}`")))
    })
}

fn names(s: &[Symbol]) -> String {
    s.iter().map(Symbol::name).collect::<Vec<_>>().join(", ")
}

fn fmt_complex(re: f64, im: f64) -> String {
    let clean = |v: f64| if v.abs() < 5e-7 { 0.0 } else { v };
    let (re, im) = (clean(re), clean(im));
    match (re == 0.0, im == 0.0) {
        (_, true) => format!("{re:.6}"),
        (true, false) => format!("{im:.6}i"),
        _ => format!("{re:.6}{im:+.6}i"),
    }
}

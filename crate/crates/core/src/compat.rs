//! Runs shipped solution-case fixtures through the whole pipeline and
//! tabulates which of them actually satisfy the derived system.
//!
//! A case file is a candidate (see [`Candidate::parse`]) plus directives:
//!
//! ```text
//! problem: boussinesq
//! transform: -1/(n - 1)          # optional power transform
//! branch: tanh                   # φ branch used to assemble a passing case
//! instantiate: a0 = 1            # repeatable; exact parameter values
//! printed_u: a0*(1 + i*tan(...)) # optional closed forms to check as given
//! printed_v: ...
//! expected: fail
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::Serialize;

use crate::algsolve::{verify_candidate, Candidate};
use crate::error::{Error, Result};
use crate::expr::{parse_expr, Expr, Scope, Symbol};
use crate::pde::PdeProblem;
use crate::pipeline::{derive, Derivation, DeriveOptions, TransformChoice};
use crate::solution::{assemble, Branch, VerifiedCandidate};
use crate::verify::{
    default_z_samples, ode_residual, pde_residual, Grid, ParamValues, RESIDUAL_TOL,
};

const Z_SAMPLES: usize = 41;

#[derive(Clone, Debug)]
pub struct CaseFile {
    pub name: String,
    pub problem: String,
    pub transform: Option<Expr>,
    pub branch: Branch,
    pub candidate: Candidate,
    pub instantiations: Vec<ParamValues>,
    pub printed: Vec<Vec<(Symbol, Expr)>>,
    pub expected: Option<bool>,
}

impl CaseFile {
    pub fn parse(name: &str, text: &str) -> Result<Self> {
        let (mut candidate, directives) = Candidate::parse(text)?;
        if candidate.source.is_empty() {
            candidate.source = name.to_string();
        }
        let scope = Scope::open();
        let mut case = CaseFile {
            name: name.to_string(),
            problem: String::new(),
            transform: None,
            branch: Branch::Tanh,
            candidate,
            instantiations: Vec::new(),
            printed: Vec::new(),
            expected: None,
        };
        for d in directives {
            let dsl = |msg: String| Error::Dsl { line: d.line, msg };
            let expr = |s: &str| parse_expr(s, &scope).map_err(|e| dsl(e.to_string()));
            match d.key.as_str() {
                "problem" => case.problem = d.value.clone(),
                "transform" => case.transform = Some(expr(&d.value)?),
                "branch" => case.branch = d.value.parse()?,
                "instantiate" => {
                    let mut values = ParamValues::new();
                    for part in d.value.split(',').filter(|p| !p.trim().is_empty()) {
                        let (k, v) = part
                            .split_once('=')
                            .ok_or_else(|| dsl(format!("expected `name = value`, got `{part}`")))?;
                        values.insert(Symbol::new(k.trim()), expr(v)?);
                    }
                    case.instantiations.push(values);
                }
                "printed_u" => case.printed.push(vec![(Symbol::new("u"), expr(&d.value)?)]),
                "printed_v" => case
                    .printed
                    .last_mut()
                    .ok_or_else(|| dsl("printed_v before printed_u".into()))?
                    .push((Symbol::new("v"), expr(&d.value)?)),
                "expected" => {
                    case.expected = match d.value.as_str() {
                        "pass" => Some(true),
                        "fail" => Some(false),
                        other => {
                            return Err(dsl(format!(
                                "expected must be pass or fail, got `{other}`"
                            )))
                        }
                    }
                }
                other => return Err(dsl(format!("unknown directive `{other}`"))),
            }
        }
        if case.problem.is_empty() {
            return Err(Error::Fixture(format!("{name}: missing `problem:`")));
        }
        Ok(case)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CaseRow {
    pub case: String,
    pub source: String,
    pub problem: String,
    pub pass: bool,
    pub expected: Option<bool>,
    /// φ-powers whose coefficient does not vanish.
    pub failing_powers: Vec<i64>,
    pub first_residual: Option<String>,
    /// Worst reduced-ODE residual over all instantiations (passes only).
    pub ode_residual: Option<f64>,
    /// Worst PDE residual over all instantiations (passes only).
    pub pde_residual: Option<f64>,
    /// Worst PDE residual of each printed closed form.
    pub printed_residuals: Vec<Option<f64>>,
    pub notes: Vec<String>,
}

impl CaseRow {
    pub fn agrees(&self) -> bool {
        self.expected.is_none_or(|e| e == self.pass)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CompatReport {
    pub rows: Vec<CaseRow>,
}

impl CompatReport {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).unwrap_or(serde_json::Value::Null)
    }

    pub fn to_markdown(&self) -> String {
        let sci = |v: Option<f64>| v.map(|v| format!("{v:.2e}")).unwrap_or_else(|| "-".into());
        let mut out =
            String::from("| case | problem | symbolic | ODE residual | PDE residual | notes |\n");
        out.push_str("|---|---|---|---|---|---|\n");
        for r in &self.rows {
            let mut notes = r.notes.clone();
            if !r.failing_powers.is_empty() {
                notes.insert(0, format!("nonzero at phi^{:?}", r.failing_powers));
            }
            for (k, p) in r.printed_residuals.iter().enumerate() {
                notes.push(format!("printed form {}: {}", k + 1, sci(*p)));
            }
            if !r.agrees() {
                notes.push("differs from expected".into());
            }
            let _ = writeln!(
                out,
                "| {} | {} | {} | {} | {} | {} |",
                r.case,
                r.problem,
                if r.pass { "pass" } else { "fail" },
                sci(r.ode_residual),
                sci(r.pde_residual),
                notes.join("; ").replace('|', "\\|"),
            );
        }
        out
    }
}

/// Case files in `dir/cases`, sorted by name.
pub fn case_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let cases = dir.join("cases");
    let entries = std::fs::read_dir(&cases).map_err(|e| Error::io(&cases, e))?;
    let mut out = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(&cases, e))?.path();
        if path.extension().is_some_and(|x| x == "case") {
            out.push(path);
        }
    }
    out.sort();
    if out.is_empty() {
        return Err(Error::Fixture(format!(
            "no .case files in {}",
            cases.display()
        )));
    }
    Ok(out)
}

/// Runs every case in `dir/cases`, or only the one named `only`.
pub fn run_all(dir: &Path, only: Option<&str>) -> Result<CompatReport> {
    let mut cases = Vec::new();
    for path in case_files(dir)? {
        let name = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or_default()
            .to_string();
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let case = CaseFile::parse(&name, &text)
            .map_err(|e| Error::Fixture(format!("{}: {e}", path.display())))?;
        if only.is_none_or(|o| o == name || o == case.candidate.source) {
            cases.push(case);
        }
    }
    if let Some(o) = only {
        if cases.is_empty() {
            return Err(Error::Fixture(format!("no case named `{o}`")));
        }
    }
    let runner = Runner {
        dir,
        cache: Mutex::new(BTreeMap::new()),
    };
    let rows = cases.iter().map(|c| runner.run(c)).collect::<Result<_>>()?;
    Ok(CompatReport { rows })
}

struct Runner<'a> {
    dir: &'a Path,
    cache: Mutex<BTreeMap<(String, Option<String>), Derivation>>,
}

impl Runner<'_> {
    fn derivation(&self, case: &CaseFile) -> Result<Derivation> {
        let key = (
            case.problem.clone(),
            case.transform.as_ref().map(Expr::to_string),
        );
        if let Some(d) = self.cache.lock().expect("cache poisoned").get(&key) {
            return Ok(d.clone());
        }
        let problem = PdeProblem::from_file(self.dir.join(format!("{}.meda", case.problem)))?;
        let opts = DeriveOptions {
            transform: case
                .transform
                .clone()
                .map(TransformChoice::Explicit)
                .unwrap_or_default(),
            ..DeriveOptions::default()
        };
        let d = derive(&problem, &opts)?;
        self.cache
            .lock()
            .expect("cache poisoned")
            .insert(key, d.clone());
        Ok(d)
    }

    fn run(&self, case: &CaseFile) -> Result<CaseRow> {
        let d = self.derivation(case)?;
        let report = verify_candidate(&d.system, &case.candidate)?;
        let failing: Vec<_> = report.equations.iter().filter(|e| !e.zero).collect();
        let mut row = CaseRow {
            case: case.name.clone(),
            source: case.candidate.source.clone(),
            problem: case.problem.clone(),
            pass: report.pass,
            expected: case.expected,
            failing_powers: failing.iter().map(|e| e.power).collect(),
            first_residual: failing.first().and_then(|e| e.residual.clone()),
            ode_residual: None,
            pde_residual: None,
            printed_residuals: Vec::new(),
            notes: report.notes,
        };

        let values: Vec<ParamValues> = case
            .instantiations
            .iter()
            .map(|inst| self.values(case, inst))
            .collect();
        if report.pass {
            let vc = VerifiedCandidate::new(&d.system, case.candidate.clone())?;
            match assemble(&d.problem, &d.working, &d.system, &vc, case.branch) {
                Ok(sol) => {
                    let mut ode_max = 0.0f64;
                    let mut pde_max = 0.0f64;
                    for v in &values {
                        match ode_residual(
                            &d.reduced,
                            &sol.profiles_z,
                            &default_z_samples(Z_SAMPLES),
                            v,
                        ) {
                            Ok(r) => ode_max = ode_max.max(r.max()),
                            Err(e) => row.notes.push(format!("ODE residual: {e}")),
                        }
                        match pde_residual(&d.problem, sol.fields(), &Grid::default(), v) {
                            Ok(r) => pde_max = pde_max.max(r.max()),
                            Err(e) => row.notes.push(format!("PDE residual: {e}")),
                        }
                    }
                    if !values.is_empty() {
                        row.ode_residual = Some(ode_max);
                        row.pde_residual = Some(pde_max);
                        if ode_max >= RESIDUAL_TOL {
                            row.notes
                                .push(format!("ODE residual above {RESIDUAL_TOL:e}"));
                        }
                    }
                }
                Err(e) => row
                    .notes
                    .push(format!("assembly on the {} branch: {e}", case.branch)),
            }
        }

        for form in &case.printed {
            let fields: Vec<(Symbol, Expr)> = form
                .iter()
                .map(|(k, e)| (k.clone(), case.candidate.expand_abbreviations(e)))
                .collect();
            let mut worst = Some(0.0f64);
            for v in &values {
                match pde_residual(&d.problem, &fields, &Grid::default(), v) {
                    Ok(r) => worst = worst.map(|w| w.max(r.max())),
                    Err(e) => {
                        row.notes.push(format!(
                            "printed form {}: {e}",
                            row.printed_residuals.len() + 1
                        ));
                        worst = None;
                        break;
                    }
                }
            }
            row.printed_residuals.push(worst);
        }
        Ok(row)
    }

    /// Instantiated parameters plus every candidate binding evaluated there.
    fn values(&self, case: &CaseFile, inst: &ParamValues) -> ParamValues {
        let mut out = inst.clone();
        for (k, v) in case.candidate.resolved() {
            out.insert(k, v.substitute(inst));
        }
        out
    }
}

//! Suites: a TOML file of `[[run]]` tables, each a flat experiment config
//! plus `[[run.assert]]` entries checked against the report rows.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};
use crate::experiments::run_experiment;
use crate::report::{emit_report, format_num, Formats, Row};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Comparator {
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "==")]
    Eq,
}

impl Comparator {
    pub fn holds(self, lhs: f64, rhs: f64) -> bool {
        match self {
            Comparator::Lt => lhs < rhs,
            Comparator::Le => lhs <= rhs,
            Comparator::Gt => lhs > rhs,
            Comparator::Ge => lhs >= rhs,
            Comparator::Eq => lhs == rhs,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Comparator::Lt => "<",
            Comparator::Le => "<=",
            Comparator::Gt => ">",
            Comparator::Ge => ">=",
            Comparator::Eq => "==",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Assertion {
    pub row: String,
    pub op: Comparator,
    pub value: f64,
    /// Optional label shown in pass/fail output.
    #[serde(default)]
    pub label: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SuiteRun {
    pub config: ExperimentConfig,
    pub asserts: Vec<Assertion>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Suite {
    pub runs: Vec<SuiteRun>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SuiteFile {
    #[serde(default)]
    run: Vec<toml::Table>,
}

fn parse_err(message: impl Into<String>) -> HarnessError {
    HarnessError::Parse { what: "suite".into(), message: message.into() }
}

impl Suite {
    pub fn from_toml(text: &str) -> Result<Self> {
        let file: SuiteFile = toml::from_str(text).map_err(|e| parse_err(e.to_string()))?;
        let mut runs = Vec::new();
        for (i, mut table) in file.run.into_iter().enumerate() {
            let asserts = match table.remove("assert") {
                None => Vec::new(),
                Some(v) => v.try_into().map_err(|e: toml::de::Error| parse_err(format!("run {i}: assert: {e}")))?,
            };
            let config: ExperimentConfig = toml::Value::Table(table)
                .try_into()
                .map_err(|e: toml::de::Error| parse_err(format!("run {i}: {e}")))?;
            runs.push(SuiteRun { config, asserts });
        }
        Ok(Self { runs })
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_toml(&text)
    }

    /// Validate every run before anything executes.
    pub fn validate(&self) -> Result<()> {
        for (i, r) in self.runs.iter().enumerate() {
            r.config.validate().map_err(|e| match e {
                HarnessError::Config { field, message } => {
                    HarnessError::Config { field: format!("run[{i}].{field}"), message }
                }
                other => other,
            })?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AssertionResult {
    pub assertion: Assertion,
    pub actual: Option<f64>,
    pub passed: bool,
}

impl AssertionResult {
    pub fn describe(&self) -> String {
        let a = &self.assertion;
        let label = a.label.as_deref().map(|l| format!("[{l}] ")).unwrap_or_default();
        match self.actual {
            Some(v) => format!("{label}{} = {} {} {}", a.row, format_num(v), a.op.symbol(), format_num(a.value)),
            None => format!("{label}{}: row missing", a.row),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunOutcome {
    pub index: usize,
    pub experiment: String,
    pub output: PathBuf,
    pub rows: Vec<Row>,
    pub checks: Vec<AssertionResult>,
    pub error: Option<String>,
}

impl RunOutcome {
    pub fn passed(&self) -> bool {
        self.error.is_none() && self.checks.iter().all(|c| c.passed)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SuiteOutcome {
    pub runs: Vec<RunOutcome>,
}

impl SuiteOutcome {
    pub fn passed(&self) -> bool {
        self.runs.iter().all(|r| r.passed())
    }

    pub fn failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        for r in &self.runs {
            if let Some(e) = &r.error {
                out.push(format!("run {} ({}): {e}", r.index, r.experiment));
            }
            for c in r.checks.iter().filter(|c| !c.passed) {
                out.push(format!("run {} ({}): {}", r.index, r.experiment, c.describe()));
            }
        }
        out
    }
}

fn execute(index: usize, run: &SuiteRun, root: &Path, formats: Formats) -> RunOutcome {
    let output = root.join(format!("{index:02}-{}", run.config.experiment));
    let mut outcome = RunOutcome {
        index,
        experiment: run.config.experiment.clone(),
        output: output.clone(),
        rows: Vec::new(),
        checks: Vec::new(),
        error: None,
    };
    let rep = match run_experiment(&run.config).and_then(|rep| emit_report(&rep, &output, formats).map(|_| rep)) {
        Ok(r) => r,
        Err(e) => {
            outcome.error = Some(e.to_string());
            return outcome;
        }
    };
    for a in &run.asserts {
        let actual = rep.get(&a.row);
        let passed = actual.is_some_and(|v| a.op.holds(v, a.value));
        outcome.checks.push(AssertionResult { assertion: a.clone(), actual, passed });
    }
    outcome.rows = rep.rows;
    outcome
}

/// Run every experiment, at most `jobs` at a time, each into its own
/// subdirectory of `root`. Results come back in suite order.
pub fn run_suite(suite: &Suite, jobs: usize, root: &Path, formats: Formats) -> Result<SuiteOutcome> {
    suite.validate()?;
    let jobs = jobs.max(1).min(suite.runs.len().max(1));
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<RunOutcome>>> = Mutex::new(vec![None; suite.runs.len()]);
    std::thread::scope(|s| {
        for _ in 0..jobs {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= suite.runs.len() {
                    break;
                }
                let out = execute(i, &suite.runs[i], root, formats);
                slots.lock().expect("no poisoned runs")[i] = Some(out);
            });
        }
    });
    let runs = slots.into_inner().expect("no poisoned runs").into_iter().map(|r| r.expect("every run executed")).collect();
    Ok(SuiteOutcome { runs })
}

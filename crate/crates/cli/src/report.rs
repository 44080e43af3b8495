//! Run reports and tabular output.

use serde::Serialize;

use crate::config::ExperimentConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = ">=")]
    AtLeast,
    #[serde(rename = "<")]
    Below,
}

impl Relation {
    pub fn symbol(self) -> &'static str {
        match self {
            Relation::AtMost => "<=",
            Relation::AtLeast => ">=",
            Relation::Below => "<",
        }
    }

    fn holds(self, value: f64, tolerance: f64) -> bool {
        match self {
            Relation::AtMost => value <= tolerance,
            Relation::AtLeast => value >= tolerance,
            Relation::Below => value < tolerance,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub relation: Relation,
    pub pass: bool,
    #[serde(skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

impl CheckResult {
    pub fn new(name: &str, value: f64, relation: Relation, tolerance: f64) -> CheckResult {
        CheckResult {
            name: name.to_string(),
            value,
            tolerance,
            relation,
            // NaN never passes.
            pass: relation.holds(value, tolerance),
            detail: String::new(),
        }
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> CheckResult {
        self.detail = detail.into();
        self
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Num(f64),
    Text(String),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(x) => fmt_num(*x),
            Cell::Text(s) => s.clone(),
        }
    }
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    /// Extra `key: value` pairs written as `#` lines.
    pub metadata: Vec<(String, String)>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Table {
        Table {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            ..Table::default()
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn push_nums(&mut self, row: &[f64]) {
        self.push(row.iter().map(|&x| Cell::Num(x)).collect());
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| c == name)?;
        self.rows
            .iter()
            .map(|r| match &r[k] {
                Cell::Num(x) => Some(*x),
                Cell::Text(_) => None,
            })
            .collect()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Environment {
    pub version: String,
    pub seed: u64,
    pub tolerance_scale: f64,
    pub negative_control: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fault: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub command: String,
    pub config: ExperimentConfig,
    pub checks: Vec<CheckResult>,
    pub pass: bool,
    pub failures: Vec<String>,
    pub environment: Environment,
    pub timing: Timing,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data: Option<Table>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Timing {
    pub seconds: f64,
}

impl RunReport {
    pub fn new(
        command: &str,
        config: ExperimentConfig,
        checks: Vec<CheckResult>,
        environment: Environment,
        seconds: f64,
        data: Option<Table>,
    ) -> RunReport {
        let failures = checks
            .iter()
            .filter(|c| !c.pass)
            .map(|c| c.name.clone())
            .collect::<Vec<_>>();
        RunReport {
            command: command.to_string(),
            config,
            pass: failures.is_empty(),
            checks,
            failures,
            environment,
            timing: Timing { seconds },
            data,
        }
    }

    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }

    /// CSV body: the data table when present, otherwise the checks. Check
    /// outcomes always appear as `#` lines; no timing is written, so equal
    /// inputs give equal bytes.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("# davies {}\n", self.environment.version));
        out.push_str(&format!("# command: {}\n", self.command));
        out.push_str(&format!("# seed: {}\n", self.environment.seed));
        out.push_str(&format!("# tolerance_scale: {}\n", fmt_num(self.environment.tolerance_scale)));
        if self.environment.negative_control {
            out.push_str("# negative_control: true\n");
        }
        if let Some(f) = &self.environment.fault {
            out.push_str(&format!("# fault: {f}\n"));
        }
        let table = match &self.data {
            Some(t) => {
                for c in &self.checks {
                    out.push_str(&format!(
                        "# check {}: {} {} {} {}\n",
                        c.name,
                        fmt_num(c.value),
                        c.relation.symbol(),
                        fmt_num(c.tolerance),
                        if c.pass { "pass" } else { "fail" }
                    ));
                }
                t.clone()
            }
            None => {
                let mut t = Table::new(&["check", "value", "relation", "tolerance", "pass"]);
                for c in &self.checks {
                    t.push(vec![
                        Cell::Text(c.name.clone()),
                        Cell::Num(c.value),
                        Cell::Text(c.relation.symbol().into()),
                        Cell::Num(c.tolerance),
                        Cell::Text(c.pass.to_string()),
                    ]);
                }
                t
            }
        };
        for (k, v) in &table.metadata {
            out.push_str(&format!("# {k}: {v}\n"));
        }
        out.push_str(&format!("# pass: {}\n", self.pass));
        out.push_str(&table.columns.join(","));
        out.push('\n');
        for row in &table.rows {
            let cells: Vec<String> = row.iter().map(Cell::csv).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    /// One line per check, for the terminal.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            out.push_str(&format!(
                "{} {}: {:.3e} {} {:.3e}{}\n",
                if c.pass { "PASS" } else { "FAIL" },
                c.name,
                c.value,
                c.relation.symbol(),
                c.tolerance,
                if c.detail.is_empty() {
                    String::new()
                } else {
                    format!(" ({})", c.detail)
                }
            ));
        }
        out.push_str(&format!(
            "{}: {} ({} checks, {:.2} s)\n",
            self.command,
            if self.pass { "pass" } else { "FAIL" },
            self.checks.len(),
            self.timing.seconds
        ));
        if !self.pass {
            out.push_str(&format!("failed: {}\n", self.failures.join(", ")));
        }
        out
    }
}

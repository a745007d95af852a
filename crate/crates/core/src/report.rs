//! Scenario reports: named checks with measured and expected values, a
//! tolerance and a pass flag, plus optional tables for CSV export.

use serde::Serialize;

/// How `measured` is compared with `expected`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// `|measured − expected| ≤ tolerance`.
    Within,
    /// `measured ≥ expected − tolerance`.
    AtLeast,
    /// `measured ≤ expected + tolerance`.
    AtMost,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub expected: f64,
    pub tolerance: f64,
    pub relation: Relation,
    pub pass: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, measured: f64, expected: f64, tolerance: f64, relation: Relation) -> Self {
        let pass = match relation {
            Relation::Within => (measured - expected).abs() <= tolerance,
            Relation::AtLeast => measured >= expected - tolerance,
            Relation::AtMost => measured <= expected + tolerance,
        };
        Check {
            name: name.into(),
            measured,
            expected,
            tolerance,
            relation,
            pass,
        }
    }

    pub fn within(name: impl Into<String>, measured: f64, expected: f64, tolerance: f64) -> Self {
        Self::new(name, measured, expected, tolerance, Relation::Within)
    }

    /// A residual that must not exceed `bound`.
    pub fn residual(name: impl Into<String>, measured: f64, bound: f64) -> Self {
        Self::new(name, measured, 0.0, bound, Relation::AtMost)
    }

    pub fn at_least(name: impl Into<String>, measured: f64, bound: f64) -> Self {
        Self::new(name, measured, bound, 0.0, Relation::AtLeast)
    }

    /// Integer-valued, compared exactly.
    pub fn count(name: impl Into<String>, measured: usize, expected: usize) -> Self {
        Self::new(name, measured as f64, expected as f64, 0.0, Relation::Within)
    }

    pub fn holds(name: impl Into<String>, ok: bool) -> Self {
        Self::new(name, f64::from(u8::from(ok)), 1.0, 0.0, Relation::Within)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: impl Into<String>, header: &[&str]) -> Self {
        Table {
            name: name.into(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
    }
}

/// Field order is the serialized order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioReport {
    pub scenario: String,
    pub seed: u64,
    pub pass: bool,
    pub checks: Vec<Check>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub tables: Vec<Table>,
    /// Wall-clock seconds; only set on request so reports stay reproducible.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub runtime_seconds: Option<f64>,
}

impl ScenarioReport {
    pub fn new(scenario: impl Into<String>, seed: u64) -> Self {
        ScenarioReport {
            scenario: scenario.into(),
            seed,
            pass: true,
            checks: Vec::new(),
            notes: Vec::new(),
            tables: Vec::new(),
            runtime_seconds: None,
        }
    }

    pub fn check(&mut self, c: Check) {
        self.pass &= c.pass;
        self.checks.push(c);
    }

    pub fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    pub fn table(&mut self, t: Table) {
        self.tables.push(t);
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// `scenario,name,measured,expected,tolerance,relation,pass`.
    pub fn checks_csv(&self) -> String {
        let mut t = Table::new("checks", &["scenario", "name", "measured", "expected", "tolerance", "relation", "pass"]);
        for c in &self.checks {
            let relation = serde_json::to_value(c.relation).expect("relation serializes");
            t.push(vec![
                self.scenario.clone(),
                c.name.clone(),
                c.measured.to_string(),
                c.expected.to_string(),
                c.tolerance.to_string(),
                relation.as_str().unwrap_or_default().to_string(),
                c.pass.to_string(),
            ]);
        }
        t.to_csv()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relations() {
        assert!(Check::within("a", 1.0, 1.05, 0.1).pass);
        assert!(!Check::within("a", 1.0, 1.2, 0.1).pass);
        assert!(Check::residual("r", 1e-13, 1e-12).pass);
        assert!(!Check::residual("r", 1e-11, 1e-12).pass);
        assert!(!Check::residual("r", f64::NAN, 1.0).pass);
        assert!(Check::at_least("m", 2.9, 2.8).pass);
        assert!(!Check::count("n", 7, 8).pass);
        assert!(!Check::holds("b", false).pass);
    }

    #[test]
    fn overall_pass_is_conjunction() {
        let mut r = ScenarioReport::new("s", 0);
        r.check(Check::holds("a", true));
        assert!(r.pass);
        r.check(Check::holds("b", false));
        r.check(Check::holds("c", true));
        assert!(!r.pass);
        assert_eq!(r.failures().count(), 1);
    }

    #[test]
    fn json_field_order_is_stable() {
        let mut r = ScenarioReport::new("s", 3);
        r.check(Check::residual("x", 0.0, 1e-12));
        let json = r.to_json();
        let order = ["\"scenario\"", "\"seed\"", "\"pass\"", "\"checks\""];
        let pos: Vec<usize> = order.iter().map(|k| json.find(k).unwrap()).collect();
        assert!(pos.windows(2).all(|w| w[0] < w[1]));
        assert!(!json.contains("runtime"));
        assert!(r.checks_csv().starts_with("scenario,name,measured"));
        assert!(r.checks_csv().contains(",at_most,true"));
    }
}

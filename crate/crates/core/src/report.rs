//! Run reports: named scalars tagged with their defining formula, identity
//! checks with pass/fail, and the list of emitted files.

use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scalar {
    pub name: String,
    pub value: f64,
    /// The formula defining the value, e.g. `Z_j = Re[Σ_i B_i A_ji / Σ_i A_ji]`.
    pub definition: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub name: String,
    pub definition: String,
    /// Row label, e.g. `"j"`, and column label, e.g. `"i"`.
    pub axes: [String; 2],
    pub values: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// Measured deviation (or the checked quantity).
    pub value: f64,
    pub tolerance: f64,
    #[serde(skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub experiment: String,
    pub scenario_digest: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    pub scalars: Vec<Scalar>,
    pub tables: Vec<Table>,
    pub checks: Vec<Check>,
    pub outputs: Vec<String>,
    pub notes: Vec<String>,
    pub passed: bool,
}

impl RunReport {
    pub fn new(experiment: &str, digest: &str, kind: Option<&str>, seed: u64) -> Self {
        Self {
            experiment: experiment.to_string(),
            scenario_digest: digest.to_string(),
            kind: kind.map(str::to_string),
            seed,
            trials: None,
            scalars: Vec::new(),
            tables: Vec::new(),
            checks: Vec::new(),
            outputs: Vec::new(),
            notes: Vec::new(),
            passed: true,
        }
    }

    pub fn scalar(&mut self, name: impl Into<String>, value: f64, definition: &str) {
        self.scalars.push(Scalar {
            name: name.into(),
            value,
            definition: definition.to_string(),
            tolerance: None,
        });
    }

    pub fn scalar_tol(
        &mut self,
        name: impl Into<String>,
        value: f64,
        definition: &str,
        tolerance: f64,
    ) {
        self.scalars.push(Scalar {
            name: name.into(),
            value,
            definition: definition.to_string(),
            tolerance: Some(tolerance),
        });
    }

    pub fn table(&mut self, name: &str, definition: &str, axes: [&str; 2], values: Vec<Vec<f64>>) {
        self.tables.push(Table {
            name: name.to_string(),
            definition: definition.to_string(),
            axes: axes.map(str::to_string),
            values,
        });
    }

    /// Passes when `value <= tolerance` (NaN fails).
    pub fn check_le(&mut self, name: impl Into<String>, value: f64, tolerance: f64) {
        self.check(name, value <= tolerance, value, tolerance, "");
    }

    pub fn check(
        &mut self,
        name: impl Into<String>,
        passed: bool,
        value: f64,
        tolerance: f64,
        detail: &str,
    ) {
        self.passed &= passed;
        self.checks.push(Check {
            name: name.into(),
            passed,
            value,
            tolerance,
            detail: detail.to_string(),
        });
    }

    pub fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.scalars
            .iter()
            .find(|s| s.name == name)
            .map(|s| s.value)
    }

    pub fn find_check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report is serializable") + "\n"
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn failing_check_fails_report() {
        let mut r = RunReport::new("x", "sha256:00", None, 1);
        r.check_le("ok", 1e-13, 1e-12);
        assert!(r.passed);
        r.check_le("nan", f64::NAN, 1.0);
        assert!(!r.passed);
        r.scalar("z", -12.7, "Z = Re[w]");
        assert_eq!(r.get("z"), Some(-12.7));
        let json = r.to_json();
        assert!(json.contains("\"definition\": \"Z = Re[w]\""));
        assert!(json.ends_with("}\n"));
    }
}

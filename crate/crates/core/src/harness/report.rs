use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// `|measured − predicted| / |predicted|`.
    Relative,
    /// `|measured − predicted|`.
    Absolute,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub name: String,
    pub predicted: f64,
    /// Absent when the observable could not be extracted.
    pub measured: Option<f64>,
    pub error: Option<f64>,
    pub tolerance: f64,
    pub metric: Metric,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl ComparisonRow {
    pub fn new(name: impl Into<String>, predicted: f64, measured: f64, tolerance: f64, metric: Metric) -> Self {
        let diff = (measured - predicted).abs();
        let error = match metric {
            Metric::Relative => diff / predicted.abs(),
            Metric::Absolute => diff,
        };
        Self { name: name.into(), predicted, measured: Some(measured), error: Some(error), tolerance, metric, pass: error <= tolerance, note: None }
    }

    /// A row whose observable could not be measured; it always fails.
    pub fn unmeasured(name: impl Into<String>, predicted: f64, tolerance: f64, metric: Metric, note: impl Into<String>) -> Self {
        Self { name: name.into(), predicted, measured: None, error: None, tolerance, metric, pass: false, note: Some(note.into()) }
    }

    pub fn from_result(name: impl Into<String>, predicted: f64, measured: crate::Result<f64>, tolerance: f64, metric: Metric) -> Self {
        match measured {
            Ok(m) if m.is_finite() => Self::new(name, predicted, m, tolerance, metric),
            Ok(m) => Self::unmeasured(name, predicted, tolerance, metric, format!("measured value {m} is not finite")),
            Err(e) => Self::unmeasured(name, predicted, tolerance, metric, e.to_string()),
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    pub fn prefixed(mut self, prefix: &str) -> Self {
        self.name = format!("{prefix}/{}", self.name);
        self
    }

    /// Values, error and tolerance on one line.
    pub fn describe(&self) -> String {
        let fmt = |v: Option<f64>| v.map_or("n/a".to_string(), |x| format!("{x:.6e}"));
        format!(
            "predicted {:.6e} measured {} {:?} error {} tolerance {:.3e}{}",
            self.predicted,
            fmt(self.measured),
            self.metric,
            fmt(self.error),
            self.tolerance,
            self.note.as_deref().map(|n| format!(" ({n})")).unwrap_or_default()
        )
    }

    pub fn summary(&self) -> String {
        format!("{} {}: {}", if self.pass { "PASS" } else { "FAIL" }, self.name, self.describe())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonReport {
    /// Rows sorted by name.
    pub fn new(mut rows: Vec<ComparisonRow>) -> Self {
        rows.sort_by(|a, b| a.name.cmp(&b.name));
        Self { rows }
    }

    pub fn merge(reports: impl IntoIterator<Item = ComparisonReport>) -> Self {
        Self::new(reports.into_iter().flat_map(|r| r.rows).collect())
    }

    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn row(&self, name: &str) -> Option<&ComparisonRow> {
        self.rows.iter().find(|r| r.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &ComparisonRow> {
        self.rows.iter().filter(|r| !r.pass)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pass_iff_error_within_tolerance() {
        let r = ComparisonRow::new("a", -2.0, -2.09, 0.05, Metric::Relative);
        assert!(r.pass);
        assert!((r.error.unwrap() - 0.045).abs() < 1e-12);
        let r = ComparisonRow::new("b", 0.0, 0.2, 0.1, Metric::Absolute);
        assert!(!r.pass);
        let r = ComparisonRow::from_result("c", 1.0, Ok(f64::NAN), 1.0, Metric::Absolute);
        assert!(!r.pass && r.measured.is_none());
    }

    #[test]
    fn rows_sorted() {
        let rep = ComparisonReport::new(vec![
            ComparisonRow::new("z", 1.0, 1.0, 0.0, Metric::Absolute),
            ComparisonRow::new("a", 1.0, 1.0, 0.0, Metric::Absolute),
        ]);
        assert_eq!(rep.rows[0].name, "a");
        assert!(rep.all_pass());
        let json = serde_json::to_string(&rep).unwrap();
        assert_eq!(serde_json::from_str::<ComparisonReport>(&json).unwrap(), rep);
    }
}

/// Tabular probe output with a key=value summary.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbeReport {
    pub kind: &'static str,
    pub inputs: Vec<(String, String)>,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<f64>>,
    pub measured: Vec<(String, f64)>,
    pub passed: bool,
    pub notes: Vec<String>,
}

impl ProbeReport {
    pub fn new(kind: &'static str, columns: &[&'static str]) -> Self {
        ProbeReport {
            kind,
            inputs: Vec::new(),
            columns: columns.to_vec(),
            rows: Vec::new(),
            measured: Vec::new(),
            passed: true,
            notes: Vec::new(),
        }
    }

    pub fn input(&mut self, key: &str, value: impl ToString) {
        self.inputs.push((key.to_string(), value.to_string()));
    }

    pub fn measure(&mut self, key: &str, value: f64) {
        self.measured.push((key.to_string(), value));
    }

    pub fn row(&mut self, values: Vec<f64>) {
        debug_assert_eq!(values.len(), self.columns.len());
        self.rows.push(values);
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.measured.iter().find(|(k, _)| k == key).map(|(_, v)| *v)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let c = self.columns.iter().position(|&k| k == name)?;
        Some(self.rows.iter().map(|r| r[c]).collect())
    }

    pub fn csv(&self) -> String {
        let mut s = self.columns.join(",");
        s.push('\n');
        for r in &self.rows {
            let cells: Vec<String> = r.iter().map(|v| format!("{v:e}")).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }

    pub fn summary(&self) -> String {
        let mut s = format!("probe={}\n", self.kind);
        for (k, v) in &self.inputs {
            s.push_str(&format!("{k}={v}\n"));
        }
        for (k, v) in &self.measured {
            s.push_str(&format!("{k}={v:e}\n"));
        }
        s.push_str(&format!("passed={}\n", self.passed));
        for n in &self.notes {
            s.push_str(&format!("note={n}\n"));
        }
        s
    }
}

/// An inequality `lhs ≤ rhs`; passes when the slack is at least `−10⁻⁸·rhs`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Audit {
    pub lhs: f64,
    pub rhs: f64,
}

impl Audit {
    pub fn slack(&self) -> f64 {
        self.rhs - self.lhs
    }

    pub fn passes(&self) -> bool {
        self.slack() >= -1e-8 * self.rhs.abs()
    }
}

/// Least-squares slope of `log y` against `log x`, skipping non-positive entries.
pub fn log_slope(x: &[f64], y: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(a, b)| **a > 0.0 && **b > 0.0)
        .map(|(a, b)| (a.ln(), b.ln()))
        .collect();
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return f64::NAN;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

//! CNOT cost reports.

use std::fmt;

#[derive(Clone, Debug, PartialEq)]
pub struct CostReport {
    pub total_cnots: usize,
    /// Labelled partial counts; they always sum to `total_cnots`.
    pub breakdown: Vec<(String, usize)>,
    pub baseline_cnots: Option<usize>,
    /// `baseline / total`.
    pub ratio: Option<f64>,
}

impl CostReport {
    pub fn from_breakdown(breakdown: Vec<(String, usize)>) -> Self {
        CostReport {
            total_cnots: breakdown.iter().map(|(_, c)| c).sum(),
            breakdown,
            baseline_cnots: None,
            ratio: None,
        }
    }

    pub fn with_baseline(mut self, baseline: usize) -> Self {
        self.baseline_cnots = Some(baseline);
        self.ratio = (self.total_cnots > 0).then(|| baseline as f64 / self.total_cnots as f64);
        self
    }

    pub fn is_consistent(&self) -> bool {
        self.total_cnots == self.breakdown.iter().map(|(_, c)| c).sum::<usize>()
    }
}

impl fmt::Display for CostReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (label, count) in &self.breakdown {
            writeln!(f, "{label}: {count}")?;
        }
        writeln!(f, "total: {}", self.total_cnots)?;
        if let Some(b) = self.baseline_cnots {
            writeln!(f, "baseline: {b}")?;
        }
        if let Some(r) = self.ratio {
            writeln!(f, "ratio: {r:.4}")?;
        }
        Ok(())
    }
}

//! Residual reports: per-equation maxima over a point sample with a
//! pass/fail verdict against a tolerance. Serializable to JSON (schema 1).

use serde::Serialize;

pub const SCHEMA_VERSION: u32 = 1;

/// Default normalized-residual tolerance used across the crate.
pub const DEFAULT_TOL: f64 = 1e-8;

/// Normalize a residual so products of large derivative values cannot mask
/// failures: |residual| / (1 + max |individual term|).
pub fn normalized(residual: f64, max_term: f64) -> f64 {
    residual.abs() / (1.0 + max_term.abs())
}

#[derive(Clone, Debug, Serialize)]
pub struct EquationResidual {
    pub label: String,
    pub max_residual: f64,
}

/// Per-system residual summary over a point sample.
#[derive(Clone, Debug, Serialize)]
pub struct ResidualReport {
    pub schema: u32,
    pub system: String,
    pub equations: Vec<EquationResidual>,
    pub sample_size: usize,
    pub tolerance: f64,
    pub pass: bool,
}

impl ResidualReport {
    /// Build from (label, max residual) pairs; the verdict is pass iff
    /// every residual is within tolerance.
    pub fn new(
        system: &str,
        residuals: Vec<(String, f64)>,
        sample_size: usize,
        tolerance: f64,
    ) -> Self {
        let equations: Vec<EquationResidual> = residuals
            .into_iter()
            .map(|(label, max_residual)| EquationResidual {
                label,
                max_residual,
            })
            .collect();
        let pass = equations
            .iter()
            .all(|e| e.max_residual.is_finite() && e.max_residual <= tolerance);
        ResidualReport {
            schema: SCHEMA_VERSION,
            system: system.to_string(),
            equations,
            sample_size,
            tolerance,
            pass,
        }
    }

    /// Largest per-equation residual (0 for an empty report).
    pub fn max_residual(&self) -> f64 {
        self.equations
            .iter()
            .map(|e| e.max_residual)
            .fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization")
    }

    /// One-line human rendering, derived from the same data as the JSON.
    pub fn summary_line(&self) -> String {
        format!(
            "{}: {} (max residual {:.3e}, {} eqs, {} points, tol {:.1e})",
            self.system,
            if self.pass { "PASS" } else { "FAIL" },
            self.max_residual(),
            self.equations.len(),
            self.sample_size,
            self.tolerance,
        )
    }
}

/// Accumulates the running maximum of normalized residuals per label.
#[derive(Debug, Default)]
pub struct MaxTracker {
    entries: Vec<(String, f64)>,
}

impl MaxTracker {
    pub fn new(labels: &[&str]) -> Self {
        MaxTracker {
            entries: labels.iter().map(|l| (l.to_string(), 0.0)).collect(),
        }
    }

    pub fn record(&mut self, idx: usize, value: f64) {
        let slot = &mut self.entries[idx].1;
        if value > *slot || !value.is_finite() {
            *slot = value;
        }
    }

    pub fn into_report(self, system: &str, sample_size: usize, tolerance: f64) -> ResidualReport {
        ResidualReport::new(system, self.entries, sample_size, tolerance)
    }
}

//! Report structure written as `report.json`. Contains no timings or
//! timestamps, so identical configurations give byte-identical reports.

use serde::Serialize;
use trace_bounds::ld::LdBoundReport;
use trace_bounds::matnorm::{EquivalenceRow, NormKind, Side};
use trace_bounds::sobolev::{IdentityCheck, Refinement, TraceReport};

use crate::config::RunConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ToleranceKind {
    Absolute,
    Relative,
    /// `eps_disc = C h Σ∫|f|`
    EpsDisc,
}

/// One pass/fail claim: `value relation limit`, where the limit already
/// includes the tolerance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub relation: &'static str,
    pub limit: f64,
    pub tolerance: f64,
    pub tolerance_kind: ToleranceKind,
    pub h: Option<f64>,
}

impl Check {
    pub fn at_most(name: String, value: f64, limit: f64, tolerance: f64, kind: ToleranceKind, h: Option<f64>) -> Self {
        Self {
            name,
            passed: value <= limit,
            value,
            relation: "<=",
            limit,
            tolerance,
            tolerance_kind: kind,
            h,
        }
    }

    pub fn at_least(name: String, value: f64, limit: f64, tolerance: f64, kind: ToleranceKind, h: Option<f64>) -> Self {
        Self {
            name,
            passed: value >= limit,
            value,
            relation: ">=",
            limit,
            tolerance,
            tolerance_kind: kind,
            h,
        }
    }

    /// A check whose computation itself reported the violation.
    pub fn violated(name: String, message: String, h: Option<f64>) -> Self {
        Self {
            name: format!("{name}: {message}"),
            passed: false,
            value: f64::NAN,
            relation: "ok",
            limit: f64::NAN,
            tolerance: 0.0,
            tolerance_kind: ToleranceKind::Absolute,
            h,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SobolevLevel {
    pub h: f64,
    pub interior_nodes: usize,
    pub boundary_nodes: usize,
    pub volume: f64,
    pub area: f64,
    pub b: f64,
    pub motron: f64,
    pub sup_div_closure: f64,
    pub max_normal_norm: f64,
    pub argmax_div: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RefinementRow {
    #[serde(flatten)]
    pub pair: Refinement<f64>,
    pub relative_change: f64,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct SobolevSection {
    pub levels: Vec<SobolevLevel>,
    pub refinement: Vec<RefinementRow>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TraceRow {
    pub field: String,
    #[serde(flatten)]
    pub report: TraceReport<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct IdentityRow {
    pub field: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(flatten)]
    pub check: IdentityCheck<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BatterySection {
    pub h: f64,
    pub b: f64,
    pub trace: Vec<TraceRow>,
    pub divergence_identity: Vec<IdentityRow>,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct LdSection {
    pub levels: Vec<LdBoundReport<f64>>,
    pub refinement: Vec<RefinementRow>,
    pub battery: Vec<TraceRow>,
    pub virtual_work: Vec<IdentityRow>,
}

#[derive(Debug, Clone, Serialize)]
pub struct WitnessRow {
    pub pair: String,
    pub side: Side,
    pub witness: String,
    pub ratio: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MatnormDim {
    pub n: usize,
    pub samples: usize,
    pub seed: u64,
    pub relations: Vec<EquivalenceRow>,
    pub witnesses: Vec<WitnessRow>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepSection {
    pub norm: NormKind,
    pub dim: usize,
    pub steps: usize,
    pub resolution: usize,
    pub max_entry_diff: f64,
    pub max_closed_value: f64,
    pub max_brute_value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub worst_case_d: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub tool: &'static str,
    pub version: &'static str,
    pub config: RunConfig,
    pub eps_disc_c: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sobolev: Option<SobolevSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub battery: Option<BatterySection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ld: Option<LdSection>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub matnorm: Vec<MatnormDim>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    pub checks: Vec<Check>,
    pub passed: bool,
    pub first_failure: Option<String>,
    pub files: Vec<String>,
}

impl Report {
    pub fn new(config: RunConfig) -> Self {
        Self {
            tool: "trace-bounds",
            version: env!("CARGO_PKG_VERSION"),
            config,
            eps_disc_c: trace_bounds::sobolev::EPS_DISC_C,
            sobolev: None,
            battery: None,
            ld: None,
            matnorm: Vec::new(),
            sweep: None,
            checks: Vec::new(),
            passed: true,
            first_failure: None,
            files: Vec::new(),
        }
    }

    pub fn finish(&mut self) {
        self.first_failure = self.checks.iter().find(|c| !c.passed).map(|c| c.name.clone());
        self.passed = self.first_failure.is_none();
    }
}

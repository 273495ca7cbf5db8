use super::{Bands, StudyKind};
use crate::io::sig17;
use crate::lattice::Grid;
use serde::Serialize;

pub const CSV_HEADER: &str = "n,sup_err,fl1_err,minfty1_norm,weakstar_max_gap,m1_slice_err,boundary_mass";

/// Metrics of e_{n,t} against the oracle u_t at one n.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub n: usize,
    /// Step count actually used (bumped past exceptional t/n).
    pub n_used: usize,
    pub sup_err: f64,
    pub fl1_err: f64,
    /// None at exceptional t, where the phase Φ_t does not exist.
    pub minfty1_norm: Option<f64>,
    pub weakstar_max_gap: f64,
    pub weakstar_gaps: Vec<f64>,
    pub m1_slice_err: f64,
    /// L¹, L², L^∞ grid norms of the worst slice difference.
    pub lp_slice_err: [f64; 3],
    pub boundary_mass: f64,
    pub wall_seconds: f64,
}

/// One acceptance band evaluated on a report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BandCheck {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub bound: f64,
}

impl BandCheck {
    pub(crate) fn new(name: &str, passed: bool, value: f64, bound: f64) -> Self {
        Self { name: name.into(), passed, value, bound }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub scenario: String,
    pub study: StudyKind,
    pub t: f64,
    pub det_b: f64,
    pub schedule: Vec<usize>,
    pub grid: Grid,
    pub window_width: f64,
    pub compact_fraction: f64,
    pub minfty1_stride: usize,
    pub atom_count: usize,
    pub bands: Bands,
    pub rows: Vec<ConvergenceRow>,
    pub checks: Vec<BandCheck>,
}

impl ConvergenceReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failed_checks(&self) -> Vec<&BandCheck> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }

    pub fn column(&self, f: impl Fn(&ConvergenceRow) -> f64) -> Vec<f64> {
        self.rows.iter().map(f).collect()
    }

    /// The convergence table, every float with 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let minfty = r.minfty1_norm.map(sig17).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.n,
                sig17(r.sup_err),
                sig17(r.fl1_err),
                minfty,
                sig17(r.weakstar_max_gap),
                sig17(r.m1_slice_err),
                sig17(r.boundary_mass)
            ));
        }
        out
    }

    /// A header line with the metadata and checks, then one line per row.
    pub fn to_json_lines(&self) -> String {
        #[derive(Serialize)]
        struct Header<'a> {
            kind: &'static str,
            #[serde(flatten)]
            report: &'a ConvergenceReport,
        }
        let header = Header { kind: "report", report: &Self { rows: Vec::new(), ..self.clone() } };
        let mut out = serde_json::to_string(&header).expect("report serialises");
        out.push('\n');
        for r in &self.rows {
            #[derive(Serialize)]
            struct Row<'a> {
                kind: &'static str,
                #[serde(flatten)]
                row: &'a ConvergenceRow,
            }
            out.push_str(&serde_json::to_string(&Row { kind: "row", row: r }).expect("row serialises"));
            out.push('\n');
        }
        out
    }
}

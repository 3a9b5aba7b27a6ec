//! Report documents: serializable snapshots of computation results with a
//! versioned schema, plus aligned-column text rendering.
//!
//! Every document derives `Serialize` with plain struct fields (no maps),
//! so JSON output is byte-identical across runs for identical inputs.
//! Numbers render in text through one shared formatter to keep the two
//! output forms consistent.

use crate::abl::{AadReport, RobertsonReport};
use crate::ensemble::McComparison;
use crate::fallacies::FallacyReport;
use crate::verify::SweepReport;
use serde::Serialize;

pub const SCHEMA_VERSION: u32 = 1;

// ---- documents ---------------------------------------------------------

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct ExactRow {
    pub labels: Vec<String>,
    pub probability: f64,
}

/// Closed-form sequence distribution of one protocol.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct ExactDoc {
    pub schema: u32,
    pub pre_label: String,
    pub post_label: String,
    pub rows: Vec<ExactRow>,
    pub total: f64,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct McRow {
    pub labels: Vec<String>,
    pub count: u64,
    pub ratio: Option<f64>,
    pub exact: Option<f64>,
    pub deviation: Option<f64>,
    pub ci_pass: Option<bool>,
}

/// Monte Carlo frequencies next to their closed-form counterparts.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct McDoc {
    pub schema: u32,
    pub n_total: u64,
    pub n_preselected: u64,
    pub n_selected: u64,
    pub post_selected: bool,
    pub seed: u64,
    pub rows: Vec<McRow>,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct VerifyRow {
    pub name: String,
    pub description: String,
    pub instances: u64,
    pub tolerance: f64,
    pub max_deviation: f64,
    pub passed: bool,
}

/// Outcome of a randomized invariant sweep.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct VerifyDoc {
    pub schema: u32,
    pub all_passed: bool,
    pub vacuous: bool,
    pub checks: Vec<VerifyRow>,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct RobertsonDoc {
    pub schema: u32,
    pub delta_first: f64,
    pub delta_second: f64,
    pub product: f64,
    pub bound: f64,
    pub slack: f64,
    pub satisfied: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<RobertsonSweepDoc>,
}

/// Summary of a randomized uncertainty sweep.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct RobertsonSweepDoc {
    pub instances: u64,
    pub violations: u64,
    pub max_violation: f64,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct AadRowDoc {
    pub mid_label: String,
    pub designated: bool,
    pub selected: Option<f64>,
    pub unselected: f64,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct AadBranchDoc {
    pub ensemble: String,
    pub mid_observable: String,
    pub impossible_post_selection: bool,
    pub rows: Vec<AadRowDoc>,
}

/// The three-ensemble comparison. Branches stay separate tables because
/// they are separate experiments.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct AadDoc {
    pub schema: u32,
    pub pre_label: String,
    pub post_label: String,
    pub distinct_ensembles: bool,
    pub branches: Vec<AadBranchDoc>,
}

// ---- builders ----------------------------------------------------------

pub fn exact_doc(
    pre_label: &str,
    post_label: &str,
    rows: Vec<(Vec<String>, f64)>,
) -> ExactDoc {
    let total = rows.iter().map(|(_, p)| p).sum();
    ExactDoc {
        schema: SCHEMA_VERSION,
        pre_label: pre_label.to_string(),
        post_label: post_label.to_string(),
        rows: rows
            .into_iter()
            .map(|(labels, probability)| ExactRow {
                labels,
                probability,
            })
            .collect(),
        total,
    }
}

pub fn mc_doc(cmp: &McComparison) -> McDoc {
    McDoc {
        schema: SCHEMA_VERSION,
        n_total: cmp.n_total,
        n_preselected: cmp.n_preselected,
        n_selected: cmp.n_selected,
        post_selected: cmp.post_selected,
        seed: cmp.seed,
        rows: cmp
            .rows
            .iter()
            .map(|r| McRow {
                labels: r.labels.clone(),
                count: r.count,
                ratio: r.ratio,
                exact: r.exact,
                deviation: r.deviation,
                ci_pass: r.ci_pass,
            })
            .collect(),
    }
}

pub fn verify_doc(report: &SweepReport) -> VerifyDoc {
    VerifyDoc {
        schema: SCHEMA_VERSION,
        all_passed: report.all_passed,
        vacuous: report.vacuous,
        checks: report
            .outcomes
            .iter()
            .map(|o| VerifyRow {
                name: o.name.to_string(),
                description: o.description.to_string(),
                instances: o.instances,
                tolerance: o.tolerance,
                max_deviation: o.max_deviation,
                passed: o.passed,
            })
            .collect(),
    }
}

pub fn robertson_doc(report: &RobertsonReport, sweep: Option<RobertsonSweepDoc>) -> RobertsonDoc {
    RobertsonDoc {
        schema: SCHEMA_VERSION,
        delta_first: report.delta_first,
        delta_second: report.delta_second,
        product: report.product,
        bound: report.bound,
        slack: report.slack,
        satisfied: report.satisfied,
        sweep,
    }
}

pub fn aad_doc(report: &AadReport) -> AadDoc {
    AadDoc {
        schema: SCHEMA_VERSION,
        pre_label: report.pre_label.clone(),
        post_label: report.post_label.clone(),
        distinct_ensembles: report.distinct_ensembles,
        branches: report
            .branches
            .iter()
            .map(|b| AadBranchDoc {
                ensemble: b.ensemble.clone(),
                mid_observable: b.mid_observable.clone(),
                impossible_post_selection: b.impossible_post_selection,
                rows: b
                    .rows
                    .iter()
                    .map(|r| AadRowDoc {
                        mid_label: r.mid_label.clone(),
                        designated: r.designated,
                        selected: r.selected,
                        unselected: r.unselected,
                    })
                    .collect(),
            })
            .collect(),
    }
}

// ---- rendering ---------------------------------------------------------

/// Fixed-precision float with trailing zeros trimmed: 0.25 renders as
/// "0.25", one third as "0.3333333333".
pub fn fmt_value(x: f64) -> String {
    let mut s = format!("{x:.10}");
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.push('0');
        }
    }
    s
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "n/a".to_string(), fmt_value)
}

fn fmt_flag(x: Option<bool>) -> String {
    match x {
        Some(true) => "pass".to_string(),
        Some(false) => "FAIL".to_string(),
        None => "n/a".to_string(),
    }
}

/// Render rows under headers with every column padded to its widest cell.
pub fn render_table(headers: &[&str], rows: &[Vec<String>]) -> String {
    let n_cols = headers.len();
    let mut widths: Vec<usize> = headers.iter().map(|h| h.len()).collect();
    for row in rows {
        debug_assert_eq!(row.len(), n_cols);
        for (i, cell) in row.iter().enumerate() {
            widths[i] = widths[i].max(cell.len());
        }
    }
    let mut out = String::new();
    let mut push_row = |cells: &[String]| {
        let mut line = String::new();
        for (i, cell) in cells.iter().enumerate() {
            if i > 0 {
                line.push_str("  ");
            }
            line.push_str(cell);
            let pad = widths[i].saturating_sub(cell.len());
            if i + 1 < n_cols {
                line.extend(std::iter::repeat_n(' ', pad));
            }
        }
        out.push_str(line.trim_end());
        out.push('\n');
    };
    push_row(&headers.iter().map(|h| h.to_string()).collect::<Vec<_>>());
    push_row(
        &widths
            .iter()
            .map(|w| "-".repeat(*w))
            .collect::<Vec<_>>(),
    );
    for row in rows {
        push_row(row);
    }
    out
}

fn join_labels(labels: &[String]) -> String {
    if labels.is_empty() {
        "(none)".to_string()
    } else {
        labels.join(", ")
    }
}

pub fn render_exact_text(doc: &ExactDoc) -> String {
    let rows: Vec<Vec<String>> = doc
        .rows
        .iter()
        .map(|r| vec![join_labels(&r.labels), fmt_value(r.probability)])
        .collect();
    let mut out = format!(
        "conditional sequence probabilities given ({}, {})\n",
        doc.pre_label, doc.post_label
    );
    out.push_str(&render_table(&["sequence", "probability"], &rows));
    out.push_str(&format!("total: {}\n", fmt_value(doc.total)));
    out
}

pub fn render_mc_text(doc: &McDoc) -> String {
    let rows: Vec<Vec<String>> = doc
        .rows
        .iter()
        .map(|r| {
            vec![
                join_labels(&r.labels),
                r.count.to_string(),
                fmt_opt(r.ratio),
                fmt_opt(r.exact),
                fmt_opt(r.deviation),
                fmt_flag(r.ci_pass),
            ]
        })
        .collect();
    let selection = if doc.post_selected {
        "pre- and post-selected"
    } else {
        "pre-selected only (no post-selection)"
    };
    let mut out = format!(
        "trials: {}  preselected: {}  selected: {}  seed: {}  [{selection}]\n",
        doc.n_total, doc.n_preselected, doc.n_selected, doc.seed
    );
    out.push_str(&render_table(
        &["sequence", "count", "ratio", "exact", "deviation", "3-sigma"],
        &rows,
    ));
    out
}

pub fn render_verify_text(doc: &VerifyDoc) -> String {
    let rows: Vec<Vec<String>> = doc
        .checks
        .iter()
        .map(|c| {
            vec![
                c.name.clone(),
                c.instances.to_string(),
                format!("{:.1e}", c.tolerance),
                format!("{:.3e}", c.max_deviation),
                fmt_flag(Some(c.passed)),
            ]
        })
        .collect();
    let mut out = render_table(
        &["check", "instances", "tolerance", "max deviation", "status"],
        &rows,
    );
    if doc.vacuous {
        out.push_str("warning: zero instances requested; the pass is vacuous\n");
    }
    out.push_str(if doc.all_passed {
        "all checks passed\n"
    } else {
        "VERIFICATION FAILED\n"
    });
    out
}

pub fn render_robertson_text(doc: &RobertsonDoc) -> String {
    let mut out = String::new();
    out.push_str(&format!("spread of first observable:  {}\n", fmt_value(doc.delta_first)));
    out.push_str(&format!("spread of second observable: {}\n", fmt_value(doc.delta_second)));
    out.push_str(&format!("product:                     {}\n", fmt_value(doc.product)));
    out.push_str(&format!("commutator bound:            {}\n", fmt_value(doc.bound)));
    out.push_str(&format!("slack (product - bound):     {}\n", fmt_value(doc.slack)));
    out.push_str(&format!(
        "bound satisfied:             {}\n",
        if doc.satisfied { "yes" } else { "NO" }
    ));
    if let Some(sweep) = &doc.sweep {
        out.push_str(&format!(
            "sweep: {} random instances, {} violations, worst violation {}\n",
            sweep.instances,
            sweep.violations,
            fmt_value(sweep.max_violation)
        ));
    }
    out
}

pub fn render_aad_text(doc: &AadDoc) -> String {
    let mut out = format!(
        "three distinct ensembles for boundaries ({}, {}); each table is a separate experiment\n",
        doc.pre_label, doc.post_label
    );
    for branch in &doc.branches {
        out.push('\n');
        out.push_str(&format!(
            "ensemble {} (middle observable {})\n",
            branch.ensemble, branch.mid_observable
        ));
        if branch.impossible_post_selection {
            out.push_str("post-selection impossible for this ensemble; conditionals undefined\n");
        }
        let rows: Vec<Vec<String>> = branch
            .rows
            .iter()
            .map(|r| {
                vec![
                    r.mid_label.clone(),
                    if r.designated { "*".to_string() } else { String::new() },
                    fmt_opt(r.selected),
                    fmt_value(r.unselected),
                ]
            })
            .collect();
        out.push_str(&render_table(
            &["mid outcome", "designated", "selected", "unselected"],
            &rows,
        ));
    }
    out
}

pub fn render_fallacy_text(report: &FallacyReport) -> String {
    let mut out = format!(
        "scenario: {}  trials: {}  seed: {}\n",
        report.scenario, report.n_trials, report.seed
    );
    out.push_str(&format!(
        "flags: post_selected={} ensemble_level={}{}\n",
        report.post_selected,
        report.ensemble_level,
        match report.distinct_ensembles {
            Some(v) => format!(" distinct_ensembles={v}"),
            None => String::new(),
        }
    ));
    if !report.counts.is_empty() {
        let rows: Vec<Vec<String>> = report
            .counts
            .iter()
            .map(|c| vec![c.name.clone(), c.value.to_string()])
            .collect();
        out.push_str(&render_table(&["count", "value"], &rows));
    }
    let rows: Vec<Vec<String>> = report
        .quantities
        .iter()
        .map(|q| {
            vec![
                q.name.clone(),
                fmt_opt(q.empirical),
                fmt_opt(q.exact),
            ]
        })
        .collect();
    out.push_str(&render_table(&["quantity", "empirical", "exact"], &rows));
    for note in &report.notes {
        out.push_str(&format!("note: {note}\n"));
    }
    out
}

/// Pretty JSON with a trailing newline; field order follows the struct
/// definitions, so equal documents serialize to equal bytes.
pub fn to_json<T: Serialize>(doc: &T) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("report structs always serialize");
    s.push('\n');
    s
}

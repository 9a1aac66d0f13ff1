//! CSV tables and SVG convergence plots.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::averaging::Estimate;
use crate::error::Result;
use crate::verdict::{Outcome, Verdict};

/// One row of `estimates.csv`: an estimate at its last window.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EstimateRow {
    pub label: String,
    pub n: u64,
    pub window_volume: u128,
    pub value: f64,
    pub sup_translate: String,
    pub stabilized: bool,
}

impl EstimateRow {
    pub fn of(e: &Estimate) -> EstimateRow {
        let last = e.last();
        EstimateRow {
            label: e.label.clone(),
            n: last.n,
            window_volume: last.window_volume,
            value: e.value,
            sup_translate: last.sup_translate.as_ref().map(|g| g.to_string()).unwrap_or_default(),
            stabilized: e.stabilized,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerdictRow {
    pub check: String,
    pub params: String,
    pub outcome: Outcome,
    pub lhs: f64,
    pub rhs: f64,
    pub tolerance: f64,
}

impl VerdictRow {
    pub fn of(v: &Verdict) -> VerdictRow {
        VerdictRow { check: v.check.clone(), params: v.params.clone(), outcome: v.outcome, lhs: v.lhs, rhs: v.rhs, tolerance: v.tolerance }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SummaryRow {
    pub system: String,
    pub check: String,
    pub verdict: Outcome,
    pub scale_params: String,
}

/// Writes `rows` with a header taken from `T`'s fields, even when empty.
pub fn write_csv<T: Serialize>(path: &Path, header: &[&str], rows: &[T]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub const ESTIMATE_HEADER: [&str; 6] = ["label", "n", "window_volume", "value", "sup_translate", "stabilized"];
pub const VERDICT_HEADER: [&str; 6] = ["check", "params", "outcome", "lhs", "rhs", "tolerance"];
pub const SUMMARY_HEADER: [&str; 4] = ["system", "check", "verdict", "scale_params"];
pub const REGULARITY_HEADER: [&str; 6] = ["fiber_y", "eps", "diam_estimate", "density_estimate", "stabilized", "verdict"];
pub const DME_HEADER: [&str; 7] = ["point", "eps", "delta", "estimate", "stabilized", "density", "verdict"];

/// Lowercase alphanumerics and underscores, for file names.
pub fn slug(s: &str) -> String {
    let mut out = String::new();
    for c in s.chars() {
        if c.is_ascii_alphanumeric() {
            out.push(c.to_ascii_lowercase());
        } else if !out.ends_with('_') {
            out.push('_');
        }
    }
    out.trim_matches('_').to_string()
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

const W: f64 = 640.0;
const H: f64 = 400.0;
const PAD: f64 = 56.0;

/// Value against window index, with the tail marked and, in Banach mode,
/// `|h|∞` of the maximizing translate on a right-hand axis.
pub fn plot_svg(e: &Estimate) -> String {
    let k = e.trace.len();
    let vals: Vec<f64> = e.trace.iter().map(|t| t.value).collect();
    let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min).min(0.0);
    let mut hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        hi = lo + 1.0;
    }
    let x = |i: usize| PAD + (W - 2.0 * PAD) * if k > 1 { i as f64 / (k - 1) as f64 } else { 0.5 };
    let y = |v: f64| H - PAD - (H - 2.0 * PAD) * (v - lo) / (hi - lo);
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{PAD}" y="24" font-family="monospace" font-size="12">{}</text>"#, escape(&e.label));
    let _ = writeln!(
        s,
        r#"<path d="M{PAD} {PAD} L{PAD} {b} L{r} {b}" stroke="black" fill="none"/>"#,
        b = H - PAD,
        r = W - PAD
    );
    for (v, anchor) in [(lo, "lo"), (hi, "hi")] {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.1}" font-family="monospace" font-size="10" text-anchor="end" class="{anchor}">{v:.4}</text>"#,
            PAD - 4.0,
            y(v) + 3.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{}" font-family="monospace" font-size="10" text-anchor="middle">window index (n = {} … {})</text>"#,
        W / 2.0,
        H - PAD + 20.0,
        e.trace.first().map(|t| t.n).unwrap_or(0),
        e.last().n
    );
    let tail_x = x(e.tail_start);
    let _ = writeln!(s, r#"<line x1="{tail_x:.1}" y1="{PAD}" x2="{tail_x:.1}" y2="{}" stroke="gray" stroke-dasharray="4 3"/>"#, H - PAD);
    let _ = writeln!(s, r#"<line x1="{PAD}" y1="{v:.1}" x2="{}" y2="{v:.1}" stroke="green" stroke-dasharray="2 2"/>"#, W - PAD, v = y(e.value));
    let pts: Vec<String> = vals.iter().enumerate().map(|(i, &v)| format!("{:.1},{:.1}", x(i), y(v))).collect();
    let _ = writeln!(s, r#"<polyline points="{}" stroke="blue" fill="none"/>"#, pts.join(" "));
    if e.search_radius > 0 && e.trace.iter().any(|t| t.sup_translate.is_some()) {
        let r = e.search_radius as f64;
        let ty = |h: f64| H - PAD - (H - 2.0 * PAD) * h / r;
        let pts: Vec<String> = e
            .trace
            .iter()
            .enumerate()
            .filter_map(|(i, t)| t.sup_translate.as_ref().map(|h| format!("{:.1},{:.1}", x(i), ty(h.norm_inf() as f64))))
            .collect();
        let _ = writeln!(s, r#"<polyline points="{}" stroke="orange" fill="none" stroke-dasharray="5 2"/>"#, pts.join(" "));
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{PAD}" font-family="monospace" font-size="10">|h|={}</text>"#,
            W - PAD + 4.0,
            e.search_radius
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Accumulates tables and plots for one command and writes them at the end.
#[derive(Default)]
pub struct Outputs {
    pub estimates: Vec<EstimateRow>,
    pub verdicts: Vec<VerdictRow>,
    pub summary: Vec<SummaryRow>,
    pub regularity: Vec<(String, Vec<crate::factors::RegularityRow>)>,
    pub dme: Vec<(String, Vec<crate::equicontinuity::DmeRow>)>,
    plots: Vec<(String, String)>,
    plot_counts: Vec<(String, usize)>,
}

impl Outputs {
    /// Records an estimate row and its plot `{check}_{system}_{n}.svg`, `n`
    /// counting plots per check and system.
    pub fn estimate(&mut self, check: &str, system: &str, e: &Estimate) {
        self.estimates.push(EstimateRow::of(e));
        let stem = format!("{}_{}", slug(check), slug(system));
        let n = match self.plot_counts.iter_mut().find(|(s, _)| *s == stem) {
            Some((_, c)) => {
                *c += 1;
                *c
            }
            None => {
                self.plot_counts.push((stem.clone(), 0));
                0
            }
        };
        self.plots.push((format!("{stem}_{n}.svg"), plot_svg(e)));
    }

    pub fn verdict(&mut self, v: &Verdict) {
        self.verdicts.push(VerdictRow::of(v));
    }

    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut files = Vec::new();
        let mut put = |name: String| {
            let p = dir.join(name);
            files.push(p.clone());
            p
        };
        write_csv(&put("estimates.csv".into()), &ESTIMATE_HEADER, &self.estimates)?;
        write_csv(&put("verdicts.csv".into()), &VERDICT_HEADER, &self.verdicts)?;
        if !self.summary.is_empty() {
            write_csv(&put("summary.csv".into()), &SUMMARY_HEADER, &self.summary)?;
        }
        for (name, rows) in &self.regularity {
            write_csv(&put(format!("regularity_{}.csv", slug(name))), &REGULARITY_HEADER, rows)?;
        }
        for (name, rows) in &self.dme {
            write_csv(&put(format!("dme_{}.csv", slug(name))), &DME_HEADER, rows)?;
        }
        for (name, svg) in &self.plots {
            fs::write(put(name.clone()), svg)?;
        }
        Ok(files)
    }
}

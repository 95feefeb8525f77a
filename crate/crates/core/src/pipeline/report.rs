//! Report rendering: score tables, beeswarm-style summary SVG, waterfall
//! SVG, and the ranking-correlation CSV.

use std::fmt::Write as _;

use crate::explain::{SummaryRanking, WaterfallData};
use crate::metrics::ScoreReport;

const SUMMARY_TOP: usize = 10;

/// Subject ids become file names; anything outside [A-Za-z0-9._-] is
/// replaced so ids cannot escape the output directory.
pub fn safe_file_stem(id: &str) -> String {
    id.chars()
        .map(|c| if c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '-') { c } else { '_' })
        .collect()
}

/// Score table with one row per cohort, columns in the order
/// ACC, BACC, AUROC, F1, MCC.
pub fn scores_csv(rows: &[(String, ScoreReport)]) -> String {
    let mut out = format!("cohort,{},no_information_rate\n", ScoreReport::CSV_HEADER);
    for (name, report) in rows {
        let _ = writeln!(out, "{name},{},{:.6}", report.csv_row(), report.no_information_rate);
    }
    out
}

/// Deterministic jitter in [-0.5, 0.5) from a subject id.
fn id_jitter(id: &str) -> f64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in id.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    (h >> 11) as f64 / (1u64 << 53) as f64 - 0.5
}

fn color_for(value: Option<f64>, lo: f64, hi: f64) -> String {
    match value {
        None => "#999999".to_string(),
        Some(v) => {
            let t = if hi > lo { ((v - lo) / (hi - lo)).clamp(0.0, 1.0) } else { 0.5 };
            let r = (40.0 + t * 180.0) as u8;
            let b = (220.0 - t * 180.0) as u8;
            format!("#{r:02x}30{b:02x}")
        }
    }
}

/// Jittered-scatter approximation of a SHAP summary (beeswarm) plot, capped
/// at the top ten features by mean |phi|. Points take their vertical jitter
/// from the subject id so the plot is reproducible.
pub fn summary_svg(ranking: &SummaryRanking, subject_ids: &[String]) -> String {
    let entries = ranking.top(SUMMARY_TOP);
    let rows = entries.len();
    let (width, row_h, left) = (800.0, 36.0, 230.0);
    let height = rows as f64 * row_h + 50.0;

    let phi_max = entries
        .iter()
        .flat_map(|e| e.points.iter().map(|(p, _)| p.abs()))
        .fold(1e-12, f64::max);
    let x_of = |phi: f64| left + (phi / phi_max) * (width - left - 30.0) / 2.0 + (width - left - 30.0) / 2.0;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let zero_x = x_of(0.0);
    let _ = writeln!(
        svg,
        r##"<line x1="{zero_x:.2}" y1="20" x2="{zero_x:.2}" y2="{:.2}" stroke="#cccccc"/>"##,
        height - 30.0
    );
    for (row, e) in entries.iter().enumerate() {
        let cy = 30.0 + row as f64 * row_h + row_h / 2.0;
        let _ = writeln!(
            svg,
            r#"<text x="8" y="{:.2}" dominant-baseline="middle">{}</text>"#,
            cy,
            xml_escape(&e.feature)
        );
        let values: Vec<f64> = e.points.iter().filter_map(|(_, v)| *v).collect();
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for (i, (phi, value)) in e.points.iter().enumerate() {
            let jitter = subject_ids.get(i).map(|id| id_jitter(id)).unwrap_or(0.0);
            let cx = x_of(*phi);
            let jy = cy + jitter * (row_h - 10.0);
            let fill = color_for(*value, lo, hi);
            let _ = writeln!(
                svg,
                r#"<circle cx="{cx:.2}" cy="{jy:.2}" r="3" fill="{fill}" fill-opacity="0.75"/>"#
            );
        }
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">shapley value</text>"#,
        left + (width - left) / 2.0,
        height - 10.0
    );
    svg.push_str("</svg>\n");
    svg
}

/// Waterfall plot: bars run from the base value to the prediction, red for
/// risk-increasing contributions and blue for protective ones.
pub fn waterfall_svg(data: &WaterfallData, subject_id: &str) -> String {
    let steps = &data.steps;
    let rows = steps.len();
    let (width, row_h, left) = (800.0, 28.0, 250.0);
    let height = rows as f64 * row_h + 80.0;

    let lo = steps
        .iter()
        .flat_map(|s| [s.start, s.end])
        .fold(data.base_value.min(data.prediction), f64::min);
    let hi = steps
        .iter()
        .flat_map(|s| [s.start, s.end])
        .fold(data.base_value.max(data.prediction), f64::max);
    let span = (hi - lo).max(1e-9);
    let x_of = |v: f64| left + (v - lo) / span * (width - left - 30.0);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="8" y="18">subject {} | base {:.3} | prediction {:.3}</text>"#,
        xml_escape(subject_id),
        data.base_value,
        data.prediction
    );
    let base_x = x_of(data.base_value);
    let _ = writeln!(
        svg,
        r##"<line x1="{base_x:.2}" y1="30" x2="{base_x:.2}" y2="{:.2}" stroke="#888888" stroke-dasharray="4 3"/>"##,
        height - 40.0
    );
    for (row, s) in steps.iter().enumerate() {
        let y = 36.0 + row as f64 * row_h;
        let (x1, x2) = (x_of(s.start), x_of(s.end));
        let (bx, bw) = if x2 >= x1 { (x1, x2 - x1) } else { (x2, x1 - x2) };
        let fill = if s.phi >= 0.0 { "#d62728" } else { "#1f77b4" };
        let label = match s.value {
            Some(v) => format!("{} = {v:.3}", s.feature),
            None => s.feature.clone(),
        };
        let _ = writeln!(
            svg,
            r#"<text x="8" y="{:.2}" dominant-baseline="middle">{}</text>"#,
            y + row_h / 2.0,
            xml_escape(&label)
        );
        let _ = writeln!(
            svg,
            r#"<rect x="{bx:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{fill}"/>"#,
            y + 4.0,
            bw.max(0.5),
            row_h - 8.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" dominant-baseline="middle" font-size="10">{:+.3}</text>"#,
            bx + bw.max(0.5) + 4.0,
            y + row_h / 2.0,
            s.phi
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">model prediction</text>"#,
        left + (width - left) / 2.0,
        height - 14.0
    );
    svg.push_str("</svg>\n");
    svg
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

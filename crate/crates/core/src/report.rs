//! Plot-ready views of a result document. Pure transforms: nothing here
//! re-runs an experiment.

use std::fmt::Write as _;

use crate::results::ResultDocument;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportKind {
    /// `prevalence,score_mean`, ascending prevalence.
    Scatter,
    /// `parameter_id,score_mean,score_std`, catalog order.
    Bars,
}

struct Point<'a> {
    id: &'a str,
    prevalence: f64,
    mean: f64,
    std: f64,
}

fn scored(doc: &ResultDocument) -> Vec<Point<'_>> {
    doc.parameters
        .iter()
        .filter_map(|p| {
            Some(Point {
                id: &p.parameter_id,
                prevalence: p.prevalence,
                mean: p.score_mean?,
                std: p.score_std.unwrap_or(0.0),
            })
        })
        .collect()
}

fn scatter_points(doc: &ResultDocument) -> Vec<Point<'_>> {
    let mut pts = scored(doc);
    // stable: ties keep catalog order
    pts.sort_by(|a, b| a.prevalence.total_cmp(&b.prevalence));
    pts
}

pub fn scatter_csv(doc: &ResultDocument) -> String {
    let mut out = String::from("prevalence,score_mean\n");
    for p in scatter_points(doc) {
        writeln!(out, "{},{}", p.prevalence, p.mean).expect("write to String");
    }
    out
}

pub fn bars_csv(doc: &ResultDocument) -> String {
    let mut out = String::from("parameter_id,score_mean,score_std\n");
    for p in scored(doc) {
        writeln!(out, "{},{},{}", p.id, p.mean, p.std).expect("write to String");
    }
    out
}

pub fn render_csv(doc: &ResultDocument, kind: ReportKind) -> String {
    match kind {
        ReportKind::Scatter => scatter_csv(doc),
        ReportKind::Bars => bars_csv(doc),
    }
}

/// `id: reason` lines for skipped parameters.
pub fn skipped_listing(doc: &ResultDocument) -> String {
    doc.skipped
        .iter()
        .map(|s| format!("{}: {}\n", s.parameter_id, s.reason))
        .collect()
}

const W: f64 = 640.0;
const H: f64 = 400.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Upper axis limit: a "nice" value at or above `max`.
fn nice_ceiling(max: f64) -> f64 {
    if max <= 0.0 {
        return 1.0;
    }
    let mag = 10f64.powf(max.log10().floor());
    for step in [1.0, 2.0, 2.5, 5.0, 10.0] {
        if step * mag >= max {
            return step * mag;
        }
    }
    10.0 * mag
}

fn frame(out: &mut String, title: &str, x_label: &str, y_label: &str, y_max: f64) {
    let (x0, y0, x1, y1) = (LEFT, H - BOTTOM, W - RIGHT, TOP);
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">"#
    )
    .unwrap();
    writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#).unwrap();
    writeln!(
        out,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        W / 2.0,
        escape(title)
    )
    .unwrap();
    writeln!(out, r#"<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>"#).unwrap();
    writeln!(out, r#"<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>"#).unwrap();
    for k in 0..=4 {
        let v = y_max * k as f64 / 4.0;
        let y = y0 - (y0 - y1) * k as f64 / 4.0;
        writeln!(
            out,
            r#"<line x1="{}" y1="{y:.1}" x2="{x0}" y2="{y:.1}" stroke="black"/>"#,
            x0 - 4.0
        )
        .unwrap();
        writeln!(
            out,
            r#"<text x="{}" y="{:.1}" text-anchor="end">{v:.2}</text>"#,
            x0 - 6.0,
            y + 4.0
        )
        .unwrap();
    }
    writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        (x0 + x1) / 2.0,
        H - 12.0,
        escape(x_label)
    )
    .unwrap();
    writeln!(
        out,
        r#"<text x="14" y="{:.1}" text-anchor="middle" transform="rotate(-90 14 {:.1})">{}</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        escape(y_label)
    )
    .unwrap();
}

/// Self-contained SVG scatter of score against prevalence.
pub fn scatter_svg(doc: &ResultDocument) -> String {
    let pts = scatter_points(doc);
    let y_max = nice_ceiling(pts.iter().map(|p| p.mean).fold(0.0, f64::max));
    let mut out = String::new();
    let title = format!("Prevalence and recoverability ({})", doc.kind.name());
    frame(&mut out, &title, "prevalence", "mean Hamming distance", y_max);
    let (x0, y0, x1, y1) = (LEFT, H - BOTTOM, W - RIGHT, TOP);
    for k in 0..=4 {
        let v = k as f64 / 4.0;
        let x = x0 + (x1 - x0) * v;
        writeln!(
            out,
            r#"<text x="{x:.1}" y="{}" text-anchor="middle">{v:.2}</text>"#,
            y0 + 16.0
        )
        .unwrap();
    }
    for p in &pts {
        let x = x0 + (x1 - x0) * p.prevalence;
        let y = y0 - (y0 - y1) * p.mean / y_max;
        writeln!(
            out,
            r#"<circle cx="{x:.1}" cy="{y:.1}" r="4" fill="steelblue"><title>{} ({:.3}, {:.3})</title></circle>"#,
            escape(p.id),
            p.prevalence,
            p.mean
        )
        .unwrap();
    }
    out.push_str("</svg>\n");
    out
}

/// Self-contained SVG bar chart with ±1 standard deviation whiskers.
pub fn bars_svg(doc: &ResultDocument) -> String {
    let pts = scored(doc);
    let y_max = nice_ceiling(pts.iter().map(|p| p.mean + p.std).fold(0.0, f64::max));
    let mut out = String::new();
    let title = format!("Corruption score by parameter ({})", doc.kind.name());
    frame(&mut out, &title, "parameter", "mean Hamming distance", y_max);
    let (x0, y0, x1, y1) = (LEFT, H - BOTTOM, W - RIGHT, TOP);
    let slot = (x1 - x0) / pts.len().max(1) as f64;
    let scale = |v: f64| (y0 - y1) * v / y_max;
    for (i, p) in pts.iter().enumerate() {
        let cx = x0 + slot * (i as f64 + 0.5);
        let h = scale(p.mean);
        writeln!(
            out,
            r#"<rect x="{:.1}" y="{:.1}" width="{:.1}" height="{h:.1}" fill="steelblue"><title>{}: {:.4} ± {:.4}</title></rect>"#,
            cx - slot * 0.35,
            y0 - h,
            slot * 0.7,
            escape(p.id),
            p.mean,
            p.std
        )
        .unwrap();
        let (lo, hi) = (y0 - scale((p.mean - p.std).max(0.0)), y0 - scale(p.mean + p.std));
        writeln!(
            out,
            r#"<line x1="{cx:.1}" y1="{lo:.1}" x2="{cx:.1}" y2="{hi:.1}" stroke="black"/>"#
        )
        .unwrap();
        writeln!(
            out,
            r#"<text x="{cx:.1}" y="{:.1}" text-anchor="end" transform="rotate(-60 {cx:.1} {:.1})">{}</text>"#,
            y0 + 12.0,
            y0 + 12.0,
            escape(p.id)
        )
        .unwrap();
    }
    out.push_str("</svg>\n");
    out
}

pub fn render_svg(doc: &ResultDocument, kind: ReportKind) -> String {
    match kind {
        ReportKind::Scatter => scatter_svg(doc),
        ReportKind::Bars => bars_svg(doc),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::SkipMarker;
    use crate::experiments::{ExperimentConfig, ParameterScore, RunMetadata};
    use crate::results::{ExperimentKind, SCHEMA_VERSION};

    fn doc(prevs: &[(&str, f64, Option<f64>)]) -> ResultDocument {
        ResultDocument {
            schema_version: SCHEMA_VERSION,
            kind: ExperimentKind::Corruption,
            metadata: RunMetadata {
                config: ExperimentConfig::new(21),
                master_seed: 0,
                dataset_digest: String::new(),
                dataset_rows: 0,
                synthetic_rows: None,
                dimension: 21,
                radius_min: None,
                radius_max: None,
                total_probes: 0,
                skipped_probes: 0,
            },
            parameters: prevs
                .iter()
                .map(|&(id, prevalence, score)| ParameterScore {
                    parameter_id: id.into(),
                    label: id.into(),
                    prevalence,
                    score_mean: score,
                    score_std: score.map(|_| 0.1),
                    trials: 1,
                    probes: 1,
                    skipped_probes: 0,
                    subset_size: None,
                    subset_prevalence: None,
                })
                .collect(),
            skipped: vec![],
            stats: None,
            stats_note: None,
        }
    }

    #[test]
    fn scatter_sorted_by_prevalence() {
        let d = doc(&[("01", 0.6, Some(1.5)), ("02", 0.2, Some(1.0)), ("03", 0.4, Some(2.0))]);
        assert_eq!(scatter_csv(&d), "prevalence,score_mean\n0.2,1\n0.4,2\n0.6,1.5\n");
    }

    #[test]
    fn bars_keep_catalog_order_and_drop_unscored() {
        let mut d = doc(&[("01", 0.6, Some(1.5)), ("02", 0.2, None), ("03", 0.4, Some(2.0))]);
        d.skipped.push(SkipMarker {
            parameter_index: 3,
            parameter_id: "04".into(),
            reason: "strata".into(),
        });
        assert_eq!(
            bars_csv(&d),
            "parameter_id,score_mean,score_std\n01,1.5,0.1\n03,2,0.1\n"
        );
        assert_eq!(skipped_listing(&d), "04: strata\n");
    }

    #[test]
    fn svg_is_self_contained() {
        let d = doc(&[("01", 0.6, Some(1.5)), ("A<1", 0.2, Some(1.0))]);
        for svg in [scatter_svg(&d), bars_svg(&d)] {
            assert!(svg.starts_with("<svg"));
            assert!(svg.trim_end().ends_with("</svg>"));
            assert!(!svg.contains("href"));
            assert!(svg.contains("A&lt;1"));
        }
        assert_eq!(scatter_svg(&d).matches("<circle").count(), 2);
        assert_eq!(bars_svg(&d).matches("<rect").count(), 3);
    }

    #[test]
    fn nice_ceilings() {
        assert_eq!(nice_ceiling(1.7), 2.0);
        assert_eq!(nice_ceiling(0.3), 0.5);
        assert_eq!(nice_ceiling(6.6), 10.0);
        assert_eq!(nice_ceiling(0.0), 1.0);
    }
}

//! CSV and SVG renderings of a [`CvReport`].

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::cv::{CvReport, Summary};
use super::fusion::BRANCHES;
use crate::error::{Error, Result};

fn stamp(report: &CvReport, what: &str) -> String {
    format!(
        "# leafkit {what} mode={} seed={} config={} partial={}",
        report.mode, report.seed, report.config_hash, report.partial
    )
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Per-fold table followed by `mean` and `std` rows over completed folds.
/// The first line is a `#` stamp; the rest depends only on the results.
pub fn report_csv(report: &CvReport) -> String {
    let mut out = stamp(report, if report.partial { "cv report (partial)" } else { "cv report" });
    out.push('\n');
    let mut header = vec![
        "fold",
        "status",
        "valid_accuracy",
        "test_accuracy",
        "c",
        "gamma",
        "kkt_violation",
        "separation",
    ];
    header.extend(BRANCHES.iter().map(|b| b.name()));
    out.push_str(&header.join(","));
    out.push('\n');
    for f in &report.folds {
        let mut row = vec![f.fold.to_string()];
        match &f.metrics {
            Some(m) => {
                row.push("ok".into());
                for v in [m.valid_accuracy, m.test_accuracy, m.c, m.gamma, m.kkt_violation, m.separation] {
                    row.push(v.to_string());
                }
                row.extend(m.branch_accuracy.iter().map(|v| v.to_string()));
            }
            None => {
                row.push("failed".into());
                row.extend(std::iter::repeat_n(String::new(), header.len() - 2));
            }
        }
        out.push_str(&row.join(","));
        out.push('\n');
    }
    let pick = |s: Option<Summary>, std: bool| cell(s.map(|s| if std { s.std } else { s.mean }));
    for (name, std) in [("mean", false), ("std", true)] {
        let mut row = vec![name.to_string(), String::new()];
        row.push(pick(report.valid(), std));
        row.push(pick(report.test(), std));
        row.extend(std::iter::repeat_n(String::new(), 4));
        row.extend(BRANCHES.iter().map(|&b| pick(report.branch(b), std)));
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Summed test confusion counts, rows are true classes.
pub fn confusion_csv(report: &CvReport) -> String {
    let mut out = stamp(report, "confusion");
    out.push('\n');
    out.push_str("true\\predicted,");
    out.push_str(&report.classes.join(","));
    out.push('\n');
    for (name, row) in report.classes.iter().zip(report.confusion()) {
        out.push_str(name);
        for v in row {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}

/// Bar chart of mean test accuracy per branch and for the fused model, with
/// one-standard-deviation whiskers.
pub fn report_svg(report: &CvReport) -> String {
    let mut bars: Vec<(String, Option<Summary>)> =
        BRANCHES.iter().map(|&b| (b.name().to_string(), report.branch(b))).collect();
    bars.push(("fused".into(), report.test()));
    let (w, h, left, bottom, top) = (640.0, 360.0, 50.0, 60.0, 30.0);
    let plot_h = h - bottom - top;
    let slot = (w - left - 10.0) / bars.len() as f64;
    let y = |acc: f64| top + plot_h * (1.0 - acc.clamp(0.0, 1.0));
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="11">"#);
    let _ = writeln!(s, "<!-- {} -->", &stamp(report, "cv chart")[2..]);
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    for tick in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let ty = y(tick);
        let _ = writeln!(s, r##"<line x1="{left}" y1="{ty:.1}" x2="{:.1}" y2="{ty:.1}" stroke="#ddd"/>"##, w - 10.0);
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{tick:.2}</text>"#, left - 4.0, ty + 4.0);
    }
    for (i, (name, sum)) in bars.iter().enumerate() {
        let x = left + slot * i as f64 + slot * 0.15;
        let bw = slot * 0.7;
        let cx = x + bw / 2.0;
        if let Some(sm) = sum {
            let fill = if name == "fused" { "#2f6f3e" } else { "#7fb069" };
            let _ = writeln!(
                s,
                r#"<rect x="{x:.1}" y="{:.1}" width="{bw:.1}" height="{:.1}" fill="{fill}"/>"#,
                y(sm.mean),
                y(0.0) - y(sm.mean)
            );
            let _ = writeln!(
                s,
                r#"<line x1="{cx:.1}" y1="{:.1}" x2="{cx:.1}" y2="{:.1}" stroke="black"/>"#,
                y(sm.mean + sm.std),
                y(sm.mean - sm.std)
            );
            let _ = writeln!(
                s,
                r#"<text x="{cx:.1}" y="{:.1}" text-anchor="middle">{:.1}%</text>"#,
                y(sm.mean + sm.std) - 4.0,
                sm.mean * 100.0
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{cx:.1}" y="{:.1}" text-anchor="middle">{name}</text>"#,
            h - bottom + 16.0
        );
    }
    let title = if report.partial { "test accuracy by branch (partial)" } else { "test accuracy by branch" };
    let _ = writeln!(s, r#"<text x="{left}" y="18" font-size="13">{title}</text>"#);
    s.push_str("</svg>\n");
    s
}

/// Write `report.csv`, `confusion.csv`, `report.svg` and `report.json`.
pub fn write_report(report: &CvReport, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let json = serde_json::to_string_pretty(report).map_err(|e| Error::FeatureFile(e.to_string()))?;
    for (name, body) in [
        ("report.csv", report_csv(report)),
        ("confusion.csv", confusion_csv(report)),
        ("report.svg", report_svg(report)),
        ("report.json", json),
    ] {
        let p = dir.join(name);
        fs::write(&p, body).map_err(|e| Error::io(&p, e))?;
    }
    Ok(())
}

/// Everything after the leading `#` lines.
pub fn csv_body(text: &str) -> String {
    text.lines()
        .skip_while(|l| l.starts_with('#'))
        .map(|l| format!("{l}\n"))
        .collect()
}

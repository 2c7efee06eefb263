//! Bar chart of mean accuracies with per-run markers, drawn as standalone SVG.
//!
//! Every bar carries `data-variant` and `data-mean` attributes, and the root
//! element records the axis range and plot height, so the chart can be checked
//! against the reports it was drawn from.

use std::fmt::Write;

use crate::pipeline::EvaluationReport;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const PLOT_H: f64 = HEIGHT - TOP - BOTTOM;
const PLOT_W: f64 = WIDTH - LEFT - RIGHT;

const COLORS: [&str; 3] = ["#5b7fa6", "#c8873a", "#4f9a6b"];

/// Lower end of the accuracy axis: 0.05 below the smallest plotted value,
/// rounded down to a multiple of 0.05. The upper end is always 1.
pub fn axis_min(reports: &[&EvaluationReport]) -> f64 {
    let lowest = reports
        .iter()
        .flat_map(|r| r.runs.iter().map(|m| m.metrics.accuracy).chain([r.mean_accuracy]))
        .fold(1.0_f64, f64::min);
    (((lowest - 0.05) * 20.0).floor() / 20.0).clamp(0.0, 0.95)
}

/// Height in pixels of a bar for `value` on an axis starting at `min`.
pub fn bar_height(value: f64, min: f64) -> f64 {
    ((value - min) / (1.0 - min)).clamp(0.0, 1.0) * PLOT_H
}

fn y_of(value: f64, min: f64) -> f64 {
    TOP + PLOT_H - bar_height(value, min)
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Renders the chart. Bars appear in the order given.
pub fn accuracy_chart(reports: &[&EvaluationReport]) -> String {
    let min = axis_min(reports);
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" data-axis-min="{min}" data-axis-max="1" data-plot-height="{PLOT_H}">"#
    );
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="24" font-family="sans-serif" font-size="16" text-anchor="middle">Mean test accuracy</text>"#,
        WIDTH / 2.0
    );

    // Axis and ticks every 0.05.
    let ticks = ((1.0 - min) / 0.05).round() as usize;
    for t in 0..=ticks {
        let v = min + t as f64 * 0.05;
        let y = y_of(v, min);
        let _ = writeln!(
            svg,
            r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#dddddd"/>"##,
            LEFT + PLOT_W
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11" text-anchor="end">{v:.2}</text>"#,
            LEFT - 6.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        svg,
        r##"<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{:.2}" stroke="#333333"/>"##,
        TOP + PLOT_H
    );

    let slot = PLOT_W / reports.len().max(1) as f64;
    let bar_w = slot * 0.5;
    for (i, report) in reports.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let x = LEFT + slot * i as f64 + (slot - bar_w) / 2.0;
        let h = bar_height(report.mean_accuracy, min);
        let name = escape(&report.variant);
        let _ = writeln!(
            svg,
            r#"<rect class="bar" x="{x:.2}" y="{:.2}" width="{bar_w:.2}" height="{h}" fill="{color}" data-variant="{name}" data-mean="{}"/>"#,
            TOP + PLOT_H - h,
            report.mean_accuracy
        );
        let cx = x + bar_w / 2.0;
        let _ = writeln!(
            svg,
            r#"<text x="{cx:.2}" y="{:.2}" font-family="sans-serif" font-size="12" text-anchor="middle">{:.4}</text>"#,
            TOP + PLOT_H - h - 6.0,
            report.mean_accuracy
        );
        let runs = report.runs.len();
        for (r, run) in report.runs.iter().enumerate() {
            // Spread markers across the bar so equal accuracies stay visible.
            let dx = if runs > 1 { (r as f64 / (runs - 1) as f64 - 0.5) * bar_w * 0.7 } else { 0.0 };
            let _ = writeln!(
                svg,
                r##"<circle class="run" cx="{:.2}" cy="{:.2}" r="3" fill="#222222" fill-opacity="0.7" data-variant="{name}" data-seed="{}" data-accuracy="{}"/>"##,
                cx + dx,
                y_of(run.metrics.accuracy, min),
                run.seed,
                run.metrics.accuracy
            );
        }
        let _ = writeln!(
            svg,
            r#"<text x="{cx:.2}" y="{:.2}" font-family="sans-serif" font-size="12" text-anchor="middle">{name}</text>"#,
            TOP + PLOT_H + 22.0
        );
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::{DatasetFingerprint, EvaluationReport, Metrics, RunMetrics};

    fn report(name: &str, accs: &[f64]) -> EvaluationReport {
        let runs: Vec<RunMetrics> = accs
            .iter()
            .enumerate()
            .map(|(i, &a)| RunMetrics {
                seed: i as u64,
                metrics: Metrics {
                    accuracy: a,
                    ..Metrics::default()
                },
            })
            .collect();
        EvaluationReport {
            variant: name.into(),
            mean_accuracy: accs.iter().sum::<f64>() / accs.len() as f64,
            std_accuracy: 0.0,
            runs,
            precl_leakage: 0,
            dataset: DatasetFingerprint { seed: 0, train: 0, test: 0 },
            selected_run: None,
            config: None,
        }
    }

    #[test]
    fn axis_rounds_down() {
        let r = report("a", &[0.97, 0.98]);
        assert!((axis_min(&[&r]) - 0.9).abs() < 1e-12);
        let low = report("b", &[0.01]);
        assert_eq!(axis_min(&[&low]), 0.0);
    }

    #[test]
    fn one_bar_and_marker_per_run() {
        let a = report("DeepNN", &[0.97, 0.975]);
        let b = report("A<B", &[0.98, 0.99, 0.985]);
        let svg = accuracy_chart(&[&a, &b]);
        assert_eq!(svg.matches("class=\"bar\"").count(), 2);
        assert_eq!(svg.matches("class=\"run\"").count(), 5);
        assert!(svg.contains("data-variant=\"A&lt;B\""));
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
    }

    #[test]
    fn taller_bar_for_higher_mean() {
        assert!(bar_height(0.99, 0.9) > bar_height(0.95, 0.9));
        assert_eq!(bar_height(1.0, 0.9), PLOT_H);
        assert_eq!(bar_height(0.9, 0.9), 0.0);
    }
}

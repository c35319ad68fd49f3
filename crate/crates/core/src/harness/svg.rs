//! Minimal SVG line-chart renderer for experiment CSVs.

use std::fmt::Write as _;
use std::path::Path;

use super::{HarnessError, HarnessResult};

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 30.0;
const MARGIN_B: f64 = 55.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

struct Series {
    name: String,
    points: Vec<(f64, f64)>,
    dashed: bool,
}

/// Renders the selected CSV columns as line charts over the `step` column.
/// Columns whose name contains "bound" are drawn dashed.
pub fn render_svg(csv_path: &Path, svg_path: &Path, columns: &[String]) -> HarnessResult<()> {
    let text = std::fs::read_to_string(csv_path)?;
    let mut lines = text.lines();
    let header: Vec<&str> = lines
        .next()
        .ok_or_else(|| HarnessError::Config("empty CSV".into()))?
        .split(',')
        .collect();
    let step_idx = header
        .iter()
        .position(|&h| h == "step")
        .ok_or_else(|| HarnessError::Config("CSV has no 'step' column".into()))?;
    let mut series: Vec<(usize, Series)> = Vec::new();
    for name in columns {
        let idx = header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| HarnessError::Config(format!("CSV has no column '{name}'")))?;
        series.push((
            idx,
            Series {
                name: name.clone(),
                points: Vec::new(),
                dashed: name.contains("bound"),
            },
        ));
    }
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let step: f64 = fields
            .get(step_idx)
            .and_then(|f| f.parse().ok())
            .ok_or_else(|| HarnessError::Config("bad step value in CSV".into()))?;
        for (idx, s) in series.iter_mut() {
            if let Some(field) = fields.get(*idx) {
                if let Ok(v) = field.parse::<f64>() {
                    if v.is_finite() {
                        s.points.push((step, v));
                    }
                }
            }
        }
    }
    let series: Vec<Series> = series.into_iter().map(|(_, s)| s).collect();

    let all_points = series.iter().flat_map(|s| s.points.iter());
    let (mut x_min, mut x_max, mut y_min, mut y_max) =
        (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in all_points {
        x_min = x_min.min(x);
        x_max = x_max.max(x);
        y_min = y_min.min(y);
        y_max = y_max.max(y);
    }
    if !x_min.is_finite() {
        return Err(HarnessError::Config("no finite data points to plot".into()));
    }
    if x_max == x_min {
        x_max = x_min + 1.0;
    }
    y_min = y_min.min(0.0);
    if y_max == y_min {
        y_max = y_min + 1.0;
    }

    let plot_w = WIDTH - MARGIN_L - MARGIN_R;
    let plot_h = HEIGHT - MARGIN_T - MARGIN_B;
    let sx = |x: f64| MARGIN_L + (x - x_min) / (x_max - x_min) * plot_w;
    let sy = |y: f64| MARGIN_T + plot_h - (y - y_min) / (y_max - y_min) * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(
        svg,
        r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    // Axes.
    let _ = writeln!(
        svg,
        r#"<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>
<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>"#,
        x0 = MARGIN_L,
        y0 = MARGIN_T + plot_h,
        x1 = MARGIN_L + plot_w,
        y1 = MARGIN_T
    );
    // Ticks and grid.
    for i in 0..=5 {
        let fx = x_min + (x_max - x_min) * i as f64 / 5.0;
        let fy = y_min + (y_max - y_min) * i as f64 / 5.0;
        let px = sx(fx);
        let py = sy(fy);
        let _ = writeln!(
            svg,
            r#"<line x1="{px}" y1="{yb}" x2="{px}" y2="{yb2}" stroke="black"/>
<text x="{px}" y="{ylab}" font-size="12" text-anchor="middle">{fx:.0}</text>"#,
            yb = MARGIN_T + plot_h,
            yb2 = MARGIN_T + plot_h + 5.0,
            ylab = MARGIN_T + plot_h + 20.0,
        );
        let _ = writeln!(
            svg,
            r#"<line x1="{xb}" y1="{py}" x2="{xb2}" y2="{py}" stroke="black"/>
<text x="{xlab}" y="{ytext}" font-size="12" text-anchor="end">{fy:.3}</text>"#,
            xb = MARGIN_L - 5.0,
            xb2 = MARGIN_L,
            xlab = MARGIN_L - 8.0,
            ytext = py + 4.0,
        );
    }
    // Axis labels.
    let _ = writeln!(
        svg,
        r#"<text x="{cx}" y="{cy}" font-size="14" text-anchor="middle">step</text>"#,
        cx = MARGIN_L + plot_w / 2.0,
        cy = HEIGHT - 12.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{cy}" font-size="14" text-anchor="middle" transform="rotate(-90 16 {cy})">value</text>"#,
        cy = MARGIN_T + plot_h / 2.0
    );
    // Series.
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let dash = if s.dashed { r#" stroke-dasharray="6 4""# } else { "" };
        let pts: Vec<String> = s.points.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5"{dash} points="{}"/>"#,
            pts.join(" ")
        );
    }
    // Legend.
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let y = MARGIN_T + 16.0 * i as f64 + 8.0;
        let dash = if s.dashed { r#" stroke-dasharray="6 4""# } else { "" };
        let _ = writeln!(
            svg,
            r#"<line x1="{x0}" y1="{y}" x2="{x1}" y2="{y}" stroke="{color}" stroke-width="1.5"{dash}/>
<text x="{xt}" y="{yt}" font-size="12">{name}</text>"#,
            x0 = MARGIN_L + 10.0,
            x1 = MARGIN_L + 40.0,
            xt = MARGIN_L + 46.0,
            yt = y + 4.0,
            name = xml_escape(&s.name),
        );
    }
    svg.push_str("</svg>\n");
    if let Some(dir) = svg_path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    std::fs::write(svg_path, svg)?;
    Ok(())
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_wellformed_single_root_svg() {
        let dir = tempfile::tempdir().unwrap();
        let csv = dir.path().join("trace.csv");
        std::fs::write(
            &csv,
            "step,mean_cum_regret,se_cum_regret,lemma5_bound\n1,0.5,0.01,3.0\n2,0.9,0.02,\n3,1.2,0.02,2.5\n",
        )
        .unwrap();
        let svg = dir.path().join("trace.svg");
        render_svg(&csv, &svg, &["mean_cum_regret".into(), "lemma5_bound".into()]).unwrap();
        let text = std::fs::read_to_string(&svg).unwrap();
        assert!(text.starts_with("<?xml"));
        assert_eq!(text.matches("<svg").count(), 1);
        assert_eq!(text.matches("</svg>").count(), 1);
        assert!(text.contains("stroke-dasharray"));
        assert!(text.contains("polyline"));
        // Every opened tag family is balanced for the simple subset we emit.
        for tag in ["text", "svg"] {
            assert_eq!(
                text.matches(&format!("<{tag}")).count(),
                text.matches(&format!("</{tag}>")).count(),
                "unbalanced {tag}"
            );
        }
    }

    #[test]
    fn missing_column_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let csv = dir.path().join("t.csv");
        std::fs::write(&csv, "step,a\n1,2\n").unwrap();
        let svg = dir.path().join("t.svg");
        assert!(render_svg(&csv, &svg, &["nope".into()]).is_err());
    }
}

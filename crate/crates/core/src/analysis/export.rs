//! Text renderings of analysis results. Output depends only on the input
//! values, so identical runs produce identical bytes.

use std::fmt::Write;

use super::attention::AttentionTrace;
use super::category::Category;
use super::heatmap::Heatmap;
use super::pca::ProjectionPoint;

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn html_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

pub fn projection_csv(points: &[ProjectionPoint]) -> String {
    let mut out = String::from("id,x,y,type,category\n");
    for p in points {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            p.id,
            p.x,
            p.y,
            csv_field(&p.sentence_type),
            csv_field(p.category.as_str())
        );
    }
    out
}

fn category_colour(c: Category) -> &'static str {
    match c {
        Category::Conditional => "#d62728",
        Category::DataManipulation => "#1f77b4",
        Category::Looping => "#2ca02c",
        Category::Io => "#ff7f0e",
        Category::Kwds => "#7f7f7f",
    }
}

/// Self-contained SVG scatter plot; hovering a point shows its id, type and
/// category. The points are also embedded as JSON.
pub fn projection_html(points: &[ProjectionPoint], title: &str) -> String {
    const SIZE: f64 = 640.0;
    const PAD: f64 = 30.0;
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for p in points {
        x0 = x0.min(p.x);
        x1 = x1.max(p.x);
        y0 = y0.min(p.y);
        y1 = y1.max(p.y);
    }
    let span = |lo: f64, hi: f64| if hi > lo { hi - lo } else { 1.0 };
    let sx = |x: f64| PAD + (x - x0) / span(x0, x1) * (SIZE - 2.0 * PAD);
    let sy = |y: f64| SIZE - PAD - (y - y0) / span(y0, y1) * (SIZE - 2.0 * PAD);

    let mut out = String::new();
    let _ = write!(
        out,
        "<!DOCTYPE html>\n<html>\n<head>\n<meta charset=\"utf-8\">\n<title>{t}</title>\n</head>\n<body>\n<h1>{t}</h1>\n",
        t = html_escape(title)
    );
    let _ = writeln!(out, "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SIZE}\" height=\"{SIZE}\">");
    let _ = writeln!(out, "<rect width=\"100%\" height=\"100%\" fill=\"white\" stroke=\"#ccc\"/>");
    for p in points {
        let _ = writeln!(
            out,
            "<circle cx=\"{:.3}\" cy=\"{:.3}\" r=\"4\" fill=\"{}\"><title>{} {} ({})</title></circle>",
            sx(p.x),
            sy(p.y),
            category_colour(p.category),
            p.id,
            html_escape(&p.sentence_type),
            html_escape(p.category.as_str())
        );
    }
    out.push_str("</svg>\n<ul>\n");
    for c in Category::ALL {
        let _ = writeln!(
            out,
            "<li><span style=\"color:{}\">&#9679;</span> {}</li>",
            category_colour(c),
            html_escape(c.as_str())
        );
    }
    out.push_str("</ul>\n<script type=\"application/json\" id=\"points\">\n");
    let json = serde_json::to_string(points).expect("points serialize");
    out.push_str(&json.replace("</", "<\\/"));
    out.push_str("\n</script>\n</body>\n</html>\n");
    out
}

/// Header row `id,type,category,<ids…>`, then one row per record.
pub fn heatmap_csv(h: &Heatmap) -> String {
    let mut out = String::from("id,type,category");
    for id in &h.ids {
        let _ = write!(out, ",{id}");
    }
    out.push('\n');
    for (i, row) in h.matrix.iter().enumerate() {
        let _ = write!(
            out,
            "{},{},{}",
            h.ids[i],
            csv_field(&h.types[i]),
            csv_field(h.categories[i].as_str())
        );
        for v in row {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}

/// Header row `step,token,<source tokens…>`, then one row per decode step.
pub fn attention_csv(trace: &AttentionTrace) -> String {
    let mut out = String::from("step,token");
    for t in &trace.source_tokens {
        let _ = write!(out, ",{}", csv_field(t));
    }
    out.push('\n');
    for (k, row) in trace.weights.iter().enumerate() {
        let _ = write!(out, "{k},{}", csv_field(&trace.decoded_tokens[k]));
        for w in row {
            let _ = write!(out, ",{w}");
        }
        out.push('\n');
    }
    out
}

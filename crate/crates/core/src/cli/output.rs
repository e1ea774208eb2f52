//! CSV and SVG writers.

use std::fmt::Write as _;
use std::path::Path;

/// One numeric table: `#` provenance lines, a header row, data rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub title: String,
    pub provenance: Vec<String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    Empty,
}

/// 17 significant digits, enough to round-trip any f64.
pub fn format_number(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{v:.16e}")
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(v) => format_number(*v),
            Cell::Int(v) => v.to_string(),
            // commas and line breaks would break the row
            Cell::Text(s) => s.replace([',', '\n', '\r'], ";"),
            Cell::Empty => String::new(),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Num(v) => Some(*v),
            Cell::Int(v) => Some(*v as f64),
            _ => None,
        }
    }
}

impl Dataset {
    pub fn new(title: impl Into<String>, provenance: Vec<String>, columns: Vec<String>) -> Self {
        Dataset {
            title: title.into(),
            provenance,
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// A copy holding only the named columns, in the given order.
    pub fn select(&self, title: impl Into<String>, names: &[&str]) -> Dataset {
        let idx: Vec<usize> = names
            .iter()
            .map(|n| self.column(n).unwrap_or_else(|| panic!("no column {n}")))
            .collect();
        Dataset {
            title: title.into(),
            provenance: self.provenance.clone(),
            columns: names.iter().map(|s| s.to_string()).collect(),
            rows: self
                .rows
                .iter()
                .map(|r| idx.iter().map(|&i| r[i].clone()).collect())
                .collect(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# {}", self.title);
        for line in &self.provenance {
            let _ = writeln!(out, "# {line}");
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::render).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, self.to_csv())
    }

    /// Line chart of the named columns against `x`.
    pub fn to_svg(&self, x: &str, ys: &[&str]) -> String {
        let xi = self.column(x);
        let series: Vec<(String, Vec<(f64, f64)>)> = ys
            .iter()
            .filter_map(|&name| {
                let yi = self.column(name)?;
                let xi = xi?;
                let pts = self
                    .rows
                    .iter()
                    .map(|r| (r[xi].as_f64().unwrap_or(f64::NAN), r[yi].as_f64().unwrap_or(f64::NAN)))
                    .collect();
                Some((name.to_string(), pts))
            })
            .collect();
        line_chart(&self.title, x, &series)
    }
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 450.0;
const MARGIN: f64 = 60.0;
const COLORS: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Standalone SVG with one polyline per series. Non-finite points break the
/// line. The y axis is logarithmic when every value is positive and the data
/// span more than a decade.
pub fn line_chart(title: &str, x_label: &str, series: &[(String, Vec<(f64, f64)>)]) -> String {
    let finite: Vec<(f64, f64)> = series
        .iter()
        .flat_map(|(_, p)| p.iter().copied())
        .filter(|(x, y)| x.is_finite() && y.is_finite())
        .collect();
    let (mut x0, mut x1, mut y0, mut y1) = finite.iter().fold(
        (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY),
        |(a, b, c, d), &(x, y)| (a.min(x), b.max(x), c.min(y), d.max(y)),
    );
    if finite.is_empty() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    let log_y = y0 > 0.0 && y1 / y0 > 10.0;
    let ty = |y: f64| if log_y { y.log10() } else { y };
    let (ly0, mut ly1) = (ty(y0), ty(y1));
    if ly1 <= ly0 {
        ly1 = ly0 + 1.0;
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    let px = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let py = |y: f64| HEIGHT - MARGIN - (ty(y) - ly0) / (ly1 - ly0) * (HEIGHT - 2.0 * MARGIN);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    let _ = writeln!(
        s,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        WIDTH - 2.0 * MARGIN,
        HEIGHT - 2.0 * MARGIN
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        HEIGHT - 15.0,
        escape(x_label)
    );
    let fmt = |v: f64| format!("{v:.4e}");
    for (x, anchor, label) in [(MARGIN, "start", fmt(x0)), (WIDTH - MARGIN, "end", fmt(x1))] {
        let _ = writeln!(
            s,
            r#"<text x="{x}" y="{}" text-anchor="{anchor}">{label}</text>"#,
            HEIGHT - MARGIN + 15.0
        );
    }
    for (y, label) in [(HEIGHT - MARGIN, fmt(y0)), (MARGIN, fmt(y1))] {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{y}" text-anchor="end">{label}</text>"#,
            MARGIN - 4.0
        );
    }
    if log_y {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-size="10">log scale</text>"#,
            MARGIN + 4.0,
            MARGIN - 4.0
        );
    }
    for (k, (name, pts)) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let mut segment: Vec<String> = Vec::new();
        let flush = |seg: &mut Vec<String>, s: &mut String| {
            if seg.len() > 1 {
                let _ = writeln!(
                    s,
                    r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                    seg.join(" ")
                );
            }
            seg.clear();
        };
        for &(x, y) in pts {
            if x.is_finite() && y.is_finite() && (!log_y || y > 0.0) {
                segment.push(format!("{:.2},{:.2}", px(x), py(y)));
            } else {
                flush(&mut segment, &mut s);
            }
        }
        flush(&mut segment, &mut s);
        let ly = MARGIN + 15.0 + 15.0 * k as f64;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{ly}" fill="{color}">{}</text>"#,
            WIDTH - MARGIN - 150.0,
            escape(name)
        );
    }
    s.push_str("</svg>\n");
    s
}

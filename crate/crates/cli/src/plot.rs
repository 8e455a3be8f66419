//! Self-contained SVG line plots from CSV text. Output is a pure function of
//! the inputs: no timestamps, fixed number formatting.

use std::fmt::Write as _;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PlotError {
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("line {line}: cannot parse `{value}` in column `{column}`")]
    BadValue { line: usize, column: String, value: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub column: String,
    pub label: String,
    /// Keep only rows whose `filter.0` column equals `filter.1`.
    pub filter: Option<(String, String)>,
}

impl Series {
    pub fn new(column: &str, label: &str) -> Self {
        Self { column: column.into(), label: label.into(), filter: None }
    }

    pub fn filtered(mut self, column: &str, value: &str) -> Self {
        self.filter = Some((column.into(), value.into()));
        self
    }
}

/// `y = exp(intercept + slope x)` on a log axis, `intercept + slope x` otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct FitLine {
    pub slope: f64,
    pub intercept: f64,
    pub x_range: (f64, f64),
    pub label: String,
}

/// Vertical marker at `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct Marker {
    pub x: f64,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PlotSpec {
    pub title: String,
    pub x_column: String,
    pub x_label: String,
    pub y_label: String,
    pub log_y: bool,
    pub series: Vec<Series>,
    pub fits: Vec<FitLine>,
    pub markers: Vec<Marker>,
}

const W: f64 = 720.0;
const H: f64 = 440.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 56.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

struct Table<'a> {
    header: Vec<&'a str>,
    rows: Vec<(usize, Vec<&'a str>)>,
}

impl<'a> Table<'a> {
    fn parse(csv: &'a str) -> Self {
        let mut lines = csv.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let header = lines.next().map(|(_, l)| l.split(',').map(str::trim).collect()).unwrap_or_default();
        let rows = lines.map(|(i, l)| (i + 1, l.split(',').map(str::trim).collect())).collect();
        Self { header, rows }
    }

    fn col(&self, name: &str) -> Result<usize, PlotError> {
        self.header.iter().position(|h| *h == name).ok_or_else(|| PlotError::MissingColumn(name.to_string()))
    }

    fn number(&self, line: usize, row: &[&str], idx: usize) -> Result<Option<f64>, PlotError> {
        match row.get(idx).copied().unwrap_or("") {
            "" => Ok(None),
            s => s.parse().map(Some).map_err(|_| PlotError::BadValue {
                line,
                column: self.header[idx].to_string(),
                value: s.to_string(),
            }),
        }
    }
}

fn matches(a: &str, b: &str) -> bool {
    match (a.parse::<f64>(), b.parse::<f64>()) {
        (Ok(x), Ok(y)) => x == y,
        _ => a == b,
    }
}

fn fmt_num(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if (1e-2..1e4).contains(&a) {
        let s = format!("{v:.3}");
        let s = s.trim_end_matches('0').trim_end_matches('.');
        s.to_string()
    } else {
        format!("{v:.1e}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn nice_ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = hi - lo;
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| span / s <= 6.0).unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|i| i as f64 * step).collect()
}

/// Renders the series of `spec` from `csv`. An empty selection still yields
/// a valid document carrying a "no data" annotation.
pub fn render_plot(csv: &str, spec: &PlotSpec) -> Result<String, PlotError> {
    let table = Table::parse(csv);
    let xi = table.col(&spec.x_column)?;
    let mut data: Vec<Vec<(f64, f64)>> = Vec::with_capacity(spec.series.len());
    for s in &spec.series {
        let yi = table.col(&s.column)?;
        let fi = s.filter.as_ref().map(|(c, v)| table.col(c).map(|i| (i, v.as_str()))).transpose()?;
        let mut pts = Vec::new();
        for (line, row) in &table.rows {
            if let Some((i, v)) = fi {
                if !matches(row.get(i).copied().unwrap_or(""), v) {
                    continue;
                }
            }
            let (Some(x), Some(y)) = (table.number(*line, row, xi)?, table.number(*line, row, yi)?) else {
                continue;
            };
            if !x.is_finite() || !y.is_finite() || (spec.log_y && y <= 0.0) {
                continue;
            }
            pts.push((x, if spec.log_y { y.log10() } else { y }));
        }
        data.push(pts);
    }

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#, LEFT + (W - LEFT - RIGHT) / 2.0, escape(&spec.title));

    let all: Vec<(f64, f64)> = data.iter().flatten().copied().collect();
    if all.is_empty() {
        let _ = writeln!(out, r##"<text x="{}" y="{}" text-anchor="middle" font-size="18" fill="#777">no data</text>"##, W / 2.0, H / 2.0);
        out.push_str("</svg>\n");
        return Ok(out);
    }

    let (mut x0, mut x1) = all.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.0), b.max(p.0)));
    let (mut y0, mut y1) = all.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.1), b.max(p.1)));
    if x1 <= x0 {
        x0 -= 0.5;
        x1 += 0.5;
    }
    if y1 <= y0 {
        let pad = if y0 == 0.0 { 1.0 } else { 0.1 * y0.abs() };
        y0 -= pad;
        y1 += pad;
    }
    if spec.log_y {
        y0 = y0.floor();
        y1 = y1.ceil();
    } else {
        let pad = 0.05 * (y1 - y0);
        y0 -= pad;
        y1 += pad;
    }
    let (pw, ph) = (W - LEFT - RIGHT, H - TOP - BOTTOM);
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| TOP + (1.0 - (y - y0) / (y1 - y0)) * ph;

    // axes and ticks
    let _ = writeln!(out, r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);
    for t in nice_ticks(x0, x1) {
        let x = sx(t);
        let _ = writeln!(out, r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/>"#, TOP + ph, TOP + ph + 5.0);
        let _ = writeln!(out, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, TOP + ph + 18.0, fmt_num(t));
    }
    let yt: Vec<f64> = if spec.log_y {
        let step = ((y1 - y0) / 8.0).ceil().max(1.0);
        (0..).map(|i| y0 + i as f64 * step).take_while(|v| *v <= y1 + 1e-9).collect()
    } else {
        nice_ticks(y0, y1)
    };
    for t in yt {
        let y = sy(t);
        let label = if spec.log_y { format!("1e{}", t as i64) } else { fmt_num(t) };
        let _ = writeln!(out, r#"<line x1="{:.2}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="black"/>"#, LEFT - 5.0);
        let _ = writeln!(out, r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#ddd"/>"##, LEFT + pw);
        let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{label}</text>"#, LEFT - 8.0, y + 4.0);
    }
    let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, LEFT + pw / 2.0, H - 12.0, escape(&spec.x_label));
    let _ = writeln!(
        out,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        escape(&spec.y_label)
    );

    let mut legend = Vec::new();
    for (i, (s, pts)) in spec.series.iter().zip(&data).enumerate() {
        let color = COLORS[i % COLORS.len()];
        if !pts.is_empty() {
            let path: Vec<String> = pts.iter().map(|(x, y)| format!("{:.2},{:.2}", sx(*x), sy(*y))).collect();
            let _ = writeln!(out, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, path.join(" "));
        }
        legend.push((color, s.label.clone(), ""));
    }
    for (i, f) in spec.fits.iter().enumerate() {
        let color = COLORS[(i + 1) % COLORS.len()];
        let at = |x: f64| {
            let v = f.intercept + f.slope * x;
            if spec.log_y {
                v / std::f64::consts::LN_10
            } else {
                v
            }
        };
        let (a, b) = (f.x_range.0.max(x0), f.x_range.1.min(x1));
        if b > a {
            let _ = writeln!(
                out,
                r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{color}" stroke-width="1.5" stroke-dasharray="6 4"/>"#,
                sx(a),
                sy(at(a).clamp(y0, y1)),
                sx(b),
                sy(at(b).clamp(y0, y1))
            );
        }
        legend.push((color, f.label.clone(), "6 4"));
    }
    for m in &spec.markers {
        if m.x < x0 || m.x > x1 {
            continue;
        }
        let x = sx(m.x);
        let _ = writeln!(out, r##"<line x1="{x:.2}" y1="{TOP}" x2="{x:.2}" y2="{:.2}" stroke="#555" stroke-dasharray="2 3"/>"##, TOP + ph);
        let _ = writeln!(out, r##"<text x="{:.2}" y="{:.2}" font-size="10" fill="#555">{}</text>"##, x + 3.0, TOP + 12.0, escape(&m.label));
    }
    for (i, (color, label, dash)) in legend.iter().enumerate() {
        let y = TOP + 14.0 + 18.0 * i as f64;
        let lx = LEFT + pw + 12.0;
        let _ = writeln!(
            out,
            r#"<line x1="{lx:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{color}" stroke-width="2" stroke-dasharray="{dash}"/>"#,
            lx + 22.0
        );
        let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}">{}</text>"#, lx + 28.0, y + 4.0, escape(label));
    }
    out.push_str("</svg>\n");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exp_csv() -> String {
        let mut s = String::from("t,k,abs\n");
        for i in 0..50 {
            let t = i as f64 * 0.2;
            let _ = writeln!(s, "{t},1,{:e}", (-1.5 * t).exp());
            let _ = writeln!(s, "{t},2,{:e}", (-3.0 * t).exp());
        }
        s
    }

    fn spec() -> PlotSpec {
        PlotSpec {
            title: "decay".into(),
            x_column: "t".into(),
            log_y: true,
            series: vec![Series::new("abs", "|rho(1)|").filtered("k", "1")],
            ..Default::default()
        }
    }

    fn polyline(svg: &str) -> Vec<(f64, f64)> {
        let start = svg.find("points=\"").unwrap() + 8;
        let end = start + svg[start..].find('"').unwrap();
        svg[start..end]
            .split(' ')
            .map(|p| {
                let (a, b) = p.split_once(',').unwrap();
                (a.parse().unwrap(), b.parse().unwrap())
            })
            .collect()
    }

    #[test]
    fn exponential_is_straight_on_log_axis() {
        let svg = render_plot(&exp_csv(), &spec()).unwrap();
        let p = polyline(&svg);
        assert_eq!(p.len(), 50);
        let slope = (p[49].1 - p[0].1) / (p[49].0 - p[0].0);
        for q in &p {
            let line = p[0].1 + slope * (q.0 - p[0].0);
            assert!((q.1 - line).abs() < 0.02, "{q:?}");
        }
    }

    #[test]
    fn empty_series_is_annotated() {
        let svg = render_plot("t,abs\n", &PlotSpec { x_column: "t".into(), series: vec![Series::new("abs", "a")], ..Default::default() }).unwrap();
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        assert!(svg.contains("no data"));
    }

    #[test]
    fn output_is_deterministic() {
        let mut s = spec();
        s.fits.push(FitLine { slope: -1.5, intercept: 0.0, x_range: (0.0, 9.8), label: "fit".into() });
        s.markers.push(Marker { x: 4.0, label: "kick".into() });
        assert_eq!(render_plot(&exp_csv(), &s).unwrap(), render_plot(&exp_csv(), &s).unwrap());
    }

    #[test]
    fn missing_column_is_reported() {
        let mut s = spec();
        s.series[0].column = "re".into();
        assert_eq!(render_plot(&exp_csv(), &s), Err(PlotError::MissingColumn("re".into())));
    }

    #[test]
    fn bad_value_names_line() {
        let err = render_plot("t,abs\n0,1\n1,x\n", &PlotSpec { x_column: "t".into(), series: vec![Series::new("abs", "a")], ..Default::default() });
        assert!(matches!(err, Err(PlotError::BadValue { line: 3, .. })));
    }
}

//! CSV, JSON and minimal SVG writers for experiment tables.

use std::fmt::Write as _;
use std::io;
use std::path::{Path, PathBuf};

use super::config::OutputFormat;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Int(u64),
    Num(f64),
    Bool(bool),
}

impl Cell {
    pub fn as_f64(&self) -> f64 {
        match *self {
            Cell::Int(v) => v as f64,
            Cell::Num(v) => v,
            Cell::Bool(b) => f64::from(u8::from(b)),
        }
    }

    /// CSV text; reals carry 17 significant digits.
    fn csv(&self) -> String {
        match *self {
            Cell::Int(v) => v.to_string(),
            Cell::Num(v) if v.is_nan() => "NaN".into(),
            Cell::Num(v) => format!("{v:.16e}"),
            Cell::Bool(b) => b.to_string(),
        }
    }

    fn json(&self) -> serde_json::Value {
        match *self {
            Cell::Int(v) => v.into(),
            Cell::Num(v) => serde_json::Number::from_f64(v).map_or(serde_json::Value::Null, Into::into),
            Cell::Bool(b) => b.into(),
        }
    }
}

/// One experiment's result rows under a fixed header.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: &'static str,
    pub headers: &'static [&'static str],
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &'static str, headers: &'static [&'static str]) -> Self {
        Self { name, headers, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.headers.iter().position(|h| *h == name)?;
        Some(self.rows.iter().map(|r| r[i].as_f64()).collect())
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.headers.join(",");
        s.push('\n');
        for r in &self.rows {
            let cells: Vec<String> = r.iter().map(Cell::csv).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }

    pub fn to_json(&self) -> String {
        let records: Vec<serde_json::Value> = self
            .rows
            .iter()
            .map(|r| {
                let map = self.headers.iter().zip(r).map(|(h, c)| (h.to_string(), c.json())).collect();
                serde_json::Value::Object(map)
            })
            .collect();
        serde_json::to_string_pretty(&records).unwrap_or_default() + "\n"
    }

    /// Line plot of the second column against the first.
    pub fn to_svg(&self) -> String {
        const W: f64 = 640.0;
        const H: f64 = 400.0;
        const PAD: f64 = 50.0;
        let pts: Vec<(f64, f64)> = self
            .rows
            .iter()
            .filter(|r| r.len() >= 2)
            .map(|r| (r[0].as_f64(), r[1].as_f64()))
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .collect();
        let range = |vals: &mut dyn Iterator<Item = f64>| {
            let (lo, hi) = vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
            if !lo.is_finite() {
                (0.0, 1.0)
            } else if hi - lo < 1e-12 {
                (lo - 0.5, hi + 0.5)
            } else {
                (lo, hi)
            }
        };
        let (x0, x1) = range(&mut pts.iter().map(|p| p.0));
        let (y0, y1) = range(&mut pts.iter().map(|p| p.1));
        let sx = |x: f64| PAD + (x - x0) / (x1 - x0) * (W - 2.0 * PAD);
        let sy = |y: f64| H - PAD - (y - y0) / (y1 - y0) * (H - 2.0 * PAD);
        let mut s = String::new();
        let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
        let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
        let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<path d="M{PAD} {PAD} L{PAD} {b} L{r} {b}" fill="none" stroke="black"/>"#,
            b = H - PAD,
            r = W - PAD
        );
        let path: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        if !path.is_empty() {
            let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="steelblue" stroke-width="2"/>"#, path.join(" "));
        }
        let label = |v: f64| format!("{v:.3}");
        let _ = writeln!(s, r#"<text x="{}" y="{}" font-size="12" text-anchor="middle">{}</text>"#, W / 2.0, H - 10.0, self.headers[0]);
        let _ = writeln!(
            s,
            r#"<text x="14" y="{}" font-size="12" transform="rotate(-90 14 {})" text-anchor="middle">{}</text>"#,
            H / 2.0,
            H / 2.0,
            self.headers.get(1).unwrap_or(&"")
        );
        let _ = writeln!(s, r#"<text x="{PAD}" y="{}" font-size="10">{}</text>"#, H - PAD + 15.0, label(x0));
        let _ = writeln!(s, r#"<text x="{}" y="{}" font-size="10" text-anchor="end">{}</text>"#, W - PAD, H - PAD + 15.0, label(x1));
        let _ = writeln!(s, r#"<text x="{}" y="{}" font-size="10" text-anchor="end">{}</text>"#, PAD - 4.0, H - PAD, label(y0));
        let _ = writeln!(s, r#"<text x="{}" y="{}" font-size="10" text-anchor="end">{}</text>"#, PAD - 4.0, PAD + 4.0, label(y1));
        s.push_str("</svg>\n");
        s
    }
}

/// Writes the table in `format`, plus an SVG when asked. Returns the paths.
pub fn emit(table: &Table, dir: &Path, format: OutputFormat, svg: bool) -> io::Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let (ext, body) = match format {
        OutputFormat::Csv => ("csv", table.to_csv()),
        OutputFormat::Json => ("json", table.to_json()),
    };
    let path = dir.join(format!("{}.{ext}", table.name));
    std::fs::write(&path, body)?;
    written.push(path);
    if svg {
        let path = dir.join(format!("{}.svg", table.name));
        std::fs::write(&path, table.to_svg())?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Table {
        let mut t = Table::new("demo", &["x", "y", "ok"]);
        t.push(vec![Cell::Int(1), Cell::Num(0.1), Cell::Bool(true)]);
        t.push(vec![Cell::Int(2), Cell::Num(f64::NAN), Cell::Bool(false)]);
        t
    }

    #[test]
    fn csv_has_seventeen_digits() {
        let csv = sample().to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "x,y,ok");
        assert_eq!(lines[1], "1,1.0000000000000001e-1,true");
        assert_eq!(lines[2], "2,NaN,false");
        let y: f64 = lines[1].split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(y, 0.1);
    }

    #[test]
    fn json_records() {
        let v: serde_json::Value = serde_json::from_str(&sample().to_json()).unwrap();
        assert_eq!(v[0]["x"], 1);
        assert_eq!(v[0]["y"], 0.1);
        assert!(v[1]["y"].is_null());
        assert_eq!(v[1]["ok"], false);
    }

    #[test]
    fn svg_is_balanced() {
        let svg = sample().to_svg();
        assert!(svg.starts_with("<?xml"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<svg").count(), 1);
        assert_eq!(svg.matches("<text").count(), svg.matches("</text>").count());
    }
}

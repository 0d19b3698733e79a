//! Deterministic SVG heatmaps.

use std::fmt::Write;

use crate::error::{CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ColorScale {
    /// Black (min) to white (max).
    Gray,
    /// Blue (negative) through white (zero) to red (positive), symmetric about zero.
    Diverging,
}

impl ColorScale {
    pub fn parse(s: &str) -> CliResult<Self> {
        match s {
            "gray" => Ok(Self::Gray),
            "diverging" => Ok(Self::Diverging),
            _ => Err(CliError::Config(format!("unknown color scale '{s}'"))),
        }
    }
}

/// Row-major matrix with axis coordinates; `values[i][j]` sits at `(xs[j], ys[i])`.
#[derive(Clone, Debug, PartialEq)]
pub struct Heatmap {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub values: Vec<Vec<f64>>,
    pub x_label: String,
    pub y_label: String,
}

impl Heatmap {
    pub fn check(&self) -> CliResult<()> {
        if self.values.len() != self.ys.len() || self.values.iter().any(|r| r.len() != self.xs.len()) {
            return Err(CliError::Config("heatmap matrix is not rectangular".into()));
        }
        Ok(())
    }
}

const CELL: usize = 4;
const MARGIN: usize = 40;
/// Color for NaN cells (masked regions).
const MASK: (u8, u8, u8) = (0, 0, 0);

fn color(scale: ColorScale, x: f64, lo: f64, hi: f64) -> (u8, u8, u8) {
    if !x.is_finite() {
        return MASK;
    }
    let to_u8 = |f: f64| (f.clamp(0.0, 1.0) * 255.0).round() as u8;
    match scale {
        ColorScale::Gray => {
            let t = if hi > lo { (x - lo) / (hi - lo) } else { 0.5 };
            let g = to_u8(t);
            (g, g, g)
        }
        ColorScale::Diverging => {
            let m = lo.abs().max(hi.abs());
            let t = if m > 0.0 { x / m } else { 0.0 };
            if t >= 0.0 {
                (255, to_u8(1.0 - t), to_u8(1.0 - t))
            } else {
                (to_u8(1.0 + t), to_u8(1.0 + t), 255)
            }
        }
    }
}

/// Renders `map`; identical input gives identical bytes. Rows are drawn with the
/// largest `y` at the top.
pub fn render(map: &Heatmap, scale: ColorScale) -> CliResult<String> {
    map.check()?;
    let finite = map.values.iter().flatten().copied().filter(|v| v.is_finite());
    let (lo, hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    let (nx, ny) = (map.xs.len(), map.ys.len());
    let (w, h) = (nx * CELL + 2 * MARGIN, ny * CELL + 2 * MARGIN);
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    for (i, row) in map.values.iter().enumerate() {
        let yp = MARGIN + (ny - 1 - i) * CELL;
        for (j, &v) in row.iter().enumerate() {
            let (r, g, b) = color(scale, v, lo, hi);
            let xp = MARGIN + j * CELL;
            let _ = writeln!(s, r##"<rect x="{xp}" y="{yp}" width="{CELL}" height="{CELL}" fill="#{r:02x}{g:02x}{b:02x}"/>"##);
        }
    }
    let first = |v: &[f64]| v.first().copied().unwrap_or(0.0);
    let last = |v: &[f64]| v.last().copied().unwrap_or(0.0);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-size="10" text-anchor="middle">{} [{:.3}, {:.3}]</text>"#,
        w / 2,
        h - MARGIN / 3,
        map.x_label,
        first(&map.xs),
        last(&map.xs)
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-size="10" text-anchor="middle" transform="rotate(-90 {} {})">{} [{:.3}, {:.3}]</text>"#,
        MARGIN / 3,
        h / 2,
        MARGIN / 3,
        h / 2,
        map.y_label,
        first(&map.ys),
        last(&map.ys)
    );
    s.push_str("</svg>\n");
    Ok(s)
}

/// Builds a heatmap from a long-form CSV with columns `x`, `y`, `value`.
pub fn from_csv(text: &str, x: &str, y: &str, value: &str) -> CliResult<Heatmap> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let header = rdr.headers().map_err(|e| CliError::Config(e.to_string()))?.clone();
    let col = |name: &str| {
        header.iter().position(|h| h == name).ok_or_else(|| CliError::Config(format!("no column '{name}'")))
    };
    let (cx, cy, cv) = (col(x)?, col(y)?, col(value)?);
    let mut triples = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| CliError::Config(e.to_string()))?;
        let num = |k: usize| -> CliResult<f64> {
            rec[k].parse::<f64>().map_err(|e| CliError::Config(format!("'{}': {e}", &rec[k])))
        };
        triples.push((num(cx)?, num(cy)?, num(cv)?));
    }
    let mut xs: Vec<f64> = triples.iter().map(|t| t.0).collect();
    let mut ys: Vec<f64> = triples.iter().map(|t| t.1).collect();
    for v in [&mut xs, &mut ys] {
        v.sort_by(f64::total_cmp);
        v.dedup();
    }
    if xs.len() * ys.len() != triples.len() {
        return Err(CliError::Config("heatmap input is not a full rectangular grid".into()));
    }
    let mut values = vec![vec![f64::NAN; xs.len()]; ys.len()];
    let mut seen = vec![vec![false; xs.len()]; ys.len()];
    for (a, b, v) in triples {
        let j = xs.binary_search_by(|p| p.total_cmp(&a)).expect("present");
        let i = ys.binary_search_by(|p| p.total_cmp(&b)).expect("present");
        if seen[i][j] {
            return Err(CliError::Config("duplicate grid point in heatmap input".into()));
        }
        seen[i][j] = true;
        values[i][j] = v;
    }
    Ok(Heatmap { xs, ys, values, x_label: x.into(), y_label: y.into() })
}

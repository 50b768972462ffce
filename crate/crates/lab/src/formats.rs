//! Text formats: CSV, `slitmesh v1`, coordinate matrices, SVG plots.
//!
//! Every float is written with 17 significant digits, which round-trips
//! any `f64` exactly.

use std::fmt::Write;

use abslit_core::geometry::PoleConfig;
use abslit_core::mesh::{EdgeTag, SlitMesh, TaggedEdge};
use abslit_core::sparse::CsrMatrix;
use abslit_core::Point;

pub fn fmt17(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

/// Comma-separated table with a header line.
#[derive(Debug)]
pub struct Csv {
    width: usize,
    writer: csv::Writer<Vec<u8>>,
}

impl Csv {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        let mut writer = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        writer.write_record(header.iter().map(|s| s.as_ref())).expect("in-memory write");
        Self { width: header.len(), writer }
    }

    pub fn push(&mut self, row: &[f64]) {
        self.push_cells(row.iter().map(|&x| fmt17(x)).collect());
    }

    /// Row with one leading integer column.
    pub fn push_indexed(&mut self, i: usize, row: &[f64]) {
        let mut cells = vec![i.to_string()];
        cells.extend(row.iter().map(|&x| fmt17(x)));
        self.push_cells(cells);
    }

    fn push_cells(&mut self, cells: Vec<String>) {
        assert_eq!(cells.len(), self.width, "row width differs from header");
        self.writer.write_record(&cells).expect("in-memory write");
    }

    pub fn render(self) -> String {
        let bytes = self.writer.into_inner().expect("in-memory flush");
        String::from_utf8(bytes).expect("cells are UTF-8")
    }
}

/// Reads a numeric column from CSV text with a header line.
pub fn read_csv_column(text: &str, column: &str) -> Result<Vec<f64>, String> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let idx = reader
        .headers()
        .map_err(|e| e.to_string())?
        .iter()
        .position(|h| h == column)
        .ok_or_else(|| format!("no column '{column}'"))?;
    reader
        .records()
        .enumerate()
        .map(|(i, rec)| {
            let rec = rec.map_err(|e| e.to_string())?;
            let cell = rec.get(idx).ok_or_else(|| format!("line {} is short", i + 2))?;
            cell.parse::<f64>().map_err(|_| format!("line {}: '{cell}' is not a number", i + 2))
        })
        .collect()
}

pub fn write_slitmesh(mesh: &SlitMesh) -> String {
    let mut s = String::from("slitmesh v1\n");
    let tip = mesh.tip_dof.map_or("-".to_string(), |t| t.to_string());
    writeln!(s, "meta {} {} {} {}", mesh.n_geometric, fmt17(mesh.h), fmt17(mesh.grading), tip).unwrap();
    match &mesh.pole {
        Some(p) => writeln!(
            s,
            "pole {} {} {} {} {} {} {}",
            fmt17(p.a.x),
            fmt17(p.a.y),
            fmt17(p.p_a.x),
            fmt17(p.p_a.y),
            fmt17(p.d_a),
            fmt17(p.omega_a),
            fmt17(p.boundary_param)
        )
        .unwrap(),
        None => s.push_str("pole -\n"),
    }
    writeln!(s, "vertices {}", mesh.vertices.len()).unwrap();
    for (v, t) in mesh.vertices.iter().zip(&mesh.boundary_params) {
        let t = t.map_or("-".to_string(), fmt17);
        writeln!(s, "{} {} {}", fmt17(v.x), fmt17(v.y), t).unwrap();
    }
    writeln!(s, "triangles {}", mesh.triangles.len()).unwrap();
    for t in &mesh.triangles {
        writeln!(s, "{} {} {}", t[0], t[1], t[2]).unwrap();
    }
    writeln!(s, "crack_pairs {}", mesh.crack_pairs.len()).unwrap();
    for (p, m) in &mesh.crack_pairs {
        writeln!(s, "{p} {m}").unwrap();
    }
    writeln!(s, "edges {}", mesh.edges.len()).unwrap();
    for e in &mesh.edges {
        let tag = match e.tag {
            EdgeTag::Outer => "outer",
            EdgeTag::CrackPlus => "plus",
            EdgeTag::CrackMinus => "minus",
        };
        writeln!(s, "{} {} {tag}", e.v[0], e.v[1]).unwrap();
    }
    s.push_str("end\n");
    s
}

struct Lines<'a> {
    it: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self) -> Result<Vec<&'a str>, String> {
        let (i, l) = self.it.next().ok_or("unexpected end of file")?;
        self.line = i + 1;
        Ok(l.split_whitespace().collect())
    }

    fn err(&self, what: &str) -> String {
        format!("line {}: {what}", self.line)
    }

    fn section(&mut self, name: &str) -> Result<usize, String> {
        let f = self.next()?;
        match f[..] {
            [n, c] if n == name => c.parse().map_err(|_| self.err("bad count")),
            _ => Err(self.err(&format!("expected '{name} <count>'"))),
        }
    }

    fn float(&self, s: &str) -> Result<f64, String> {
        s.parse().map_err(|_| self.err(&format!("'{s}' is not a number")))
    }

    fn index(&self, s: &str, bound: usize) -> Result<usize, String> {
        match s.parse::<usize>() {
            Ok(i) if i < bound => Ok(i),
            _ => Err(self.err(&format!("'{s}' is not a vertex index below {bound}"))),
        }
    }
}

pub fn read_slitmesh(text: &str) -> Result<SlitMesh, String> {
    let mut r = Lines { it: text.lines().enumerate(), line: 0 };
    if r.next()? != ["slitmesh", "v1"] {
        return Err(r.err("expected header 'slitmesh v1'"));
    }
    let meta = r.next()?;
    let (n_geometric, h, grading, tip) = match meta[..] {
        ["meta", n, h, g, t] => {
            let n = n.parse::<usize>().map_err(|_| r.err("bad n_geometric"))?;
            let tip = if t == "-" { None } else { Some(t.parse::<usize>().map_err(|_| r.err("bad tip"))?) };
            (n, r.float(h)?, r.float(g)?, tip)
        }
        _ => return Err(r.err("expected 'meta n_geometric h grading tip'")),
    };
    let pl = r.next()?;
    let pole = match pl[..] {
        ["pole", "-"] => None,
        ["pole", ax, ay, px, py, d, w, t] => Some(PoleConfig {
            a: Point::new(r.float(ax)?, r.float(ay)?),
            p_a: Point::new(r.float(px)?, r.float(py)?),
            d_a: r.float(d)?,
            omega_a: r.float(w)?,
            boundary_param: r.float(t)?,
        }),
        _ => return Err(r.err("expected 'pole ...' or 'pole -'")),
    };
    let nv = r.section("vertices")?;
    let mut vertices = Vec::with_capacity(nv);
    let mut boundary_params = Vec::with_capacity(nv);
    for _ in 0..nv {
        let f = r.next()?;
        match f[..] {
            [x, y, t] => {
                vertices.push(Point::new(r.float(x)?, r.float(y)?));
                boundary_params.push(if t == "-" { None } else { Some(r.float(t)?) });
            }
            _ => return Err(r.err("expected 'x y t'")),
        }
    }
    let nt = r.section("triangles")?;
    let mut triangles = Vec::with_capacity(nt);
    for _ in 0..nt {
        let f = r.next()?;
        match f[..] {
            [a, b, c] => triangles.push([r.index(a, nv)?, r.index(b, nv)?, r.index(c, nv)?]),
            _ => return Err(r.err("expected three vertex indices")),
        }
    }
    let nc = r.section("crack_pairs")?;
    let mut crack_pairs = Vec::with_capacity(nc);
    for _ in 0..nc {
        let f = r.next()?;
        match f[..] {
            [p, m] => crack_pairs.push((r.index(p, nv)?, r.index(m, nv)?)),
            _ => return Err(r.err("expected 'plus minus'")),
        }
    }
    let ne = r.section("edges")?;
    let mut edges = Vec::with_capacity(ne);
    for _ in 0..ne {
        let f = r.next()?;
        let tag = match f.get(2).copied() {
            Some("outer") => EdgeTag::Outer,
            Some("plus") => EdgeTag::CrackPlus,
            Some("minus") => EdgeTag::CrackMinus,
            _ => return Err(r.err("expected 'a b outer|plus|minus'")),
        };
        if f.len() != 3 {
            return Err(r.err("expected 'a b tag'"));
        }
        edges.push(TaggedEdge { v: [r.index(f[0], nv)?, r.index(f[1], nv)?], tag });
    }
    if r.next()? != ["end"] {
        return Err(r.err("expected 'end'"));
    }
    if n_geometric > nv || tip.is_some_and(|t| t >= nv) {
        return Err("meta indices exceed the vertex count".into());
    }
    Ok(SlitMesh {
        vertices,
        triangles,
        crack_pairs,
        tip_dof: tip,
        edges,
        boundary_params,
        n_geometric,
        h,
        grading,
        pole,
    })
}

/// MatrixMarket coordinate format, 1-based, all stored entries.
pub fn write_coordinate(a: &CsrMatrix) -> String {
    let mut s = String::from("%%MatrixMarket matrix coordinate real general\n");
    writeln!(s, "{} {} {}", a.n, a.n, a.nnz()).unwrap();
    for i in 0..a.n {
        for (j, v) in a.row(i) {
            writeln!(s, "{} {} {}", i + 1, j + 1, fmt17(v)).unwrap();
        }
    }
    s
}

/// One series of a log-law plot.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    /// `(d, Δλ)` pairs.
    pub points: Vec<(f64, f64)>,
}

const W: f64 = 640.0;
const H: f64 = 400.0;
const PAD: f64 = 56.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn nice_range(lo: f64, hi: f64) -> (f64, f64) {
    if hi.partial_cmp(&lo) != Some(std::cmp::Ordering::Greater) {
        return (lo - 0.5, hi + 0.5);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

/// `Δλ·|log d|` against `1/|log d|`, with an optional horizontal
/// reference line. The output depends only on the data.
pub fn loglaw_svg(title: &str, series: &[Series], reference: Option<(f64, &str)>) -> String {
    let pts: Vec<Vec<(f64, f64)>> = series
        .iter()
        .map(|s| s.points.iter().map(|&(d, y)| (1.0 / d.ln().abs(), y * d.ln().abs())).collect())
        .collect();
    let all = pts.iter().flatten();
    let (mut x0, mut x1, mut y0, mut y1) = (0.0f64, f64::MIN, f64::MAX, f64::MIN);
    for &(x, y) in all {
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if let Some((r, _)) = reference {
        y0 = y0.min(r);
        y1 = y1.max(r);
    }
    if x1 == f64::MIN {
        (x1, y0, y1) = (1.0, 0.0, 1.0);
    }
    y0 = y0.min(0.0);
    let (xa, xb) = (x0, x1 * 1.05);
    x0 = xa;
    let (ya, yb) = nice_range(y0, y1);
    let sx = |x: f64| PAD + (x - x0) / (xb - xa) * (W - 2.0 * PAD);
    let sy = |y: f64| H - PAD - (y - ya) / (yb - ya) * (H - 2.0 * PAD);
    let mut s = String::new();
    writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#).unwrap();
    writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#).unwrap();
    writeln!(
        s,
        r#"<text x="{}" y="24" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#,
        W / 2.0,
        escape(title)
    )
    .unwrap();
    writeln!(
        s,
        r#"<path d="M{:.2} {:.2} L{:.2} {:.2} L{:.2} {:.2}" stroke="black" fill="none"/>"#,
        PAD,
        PAD,
        PAD,
        H - PAD,
        W - PAD,
        H - PAD
    )
    .unwrap();
    for i in 0..=4 {
        let x = xa + (xb - xa) * i as f64 / 4.0;
        let y = ya + (yb - ya) * i as f64 / 4.0;
        writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="10" text-anchor="middle">{:.3}</text>"#,
            sx(x),
            H - PAD + 16.0,
            x
        )
        .unwrap();
        writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="10" text-anchor="end">{:.3}</text>"#,
            PAD - 6.0,
            sy(y) + 3.0,
            y
        )
        .unwrap();
    }
    writeln!(
        s,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle">1/|log d|</text>"#,
        W / 2.0,
        H - 12.0
    )
    .unwrap();
    writeln!(s, r#"<text x="16" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle" transform="rotate(-90 16 {})">Δλ·|log d|</text>"#, H / 2.0, H / 2.0).unwrap();
    if let Some((r, label)) = reference {
        writeln!(
            s,
            r##"<path d="M{:.2} {:.2} L{:.2} {:.2}" stroke="#888" stroke-dasharray="6 4" fill="none"/>"##,
            PAD,
            sy(r),
            W - PAD,
            sy(r)
        )
        .unwrap();
        writeln!(s, r##"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="10" fill="#555" text-anchor="end">{}</text>"##, W - PAD, sy(r) - 4.0, escape(label)).unwrap();
    }
    for (i, (ser, p)) in series.iter().zip(&pts).enumerate() {
        let c = COLORS[i % COLORS.len()];
        if p.len() > 1 {
            let path: Vec<String> = p.iter().map(|&(x, y)| format!("{:.2} {:.2}", sx(x), sy(y))).collect();
            writeln!(s, r#"<path d="M{}" stroke="{c}" fill="none"/>"#, path.join(" L")).unwrap();
        }
        for &(x, y) in p {
            writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{c}"/>"#, sx(x), sy(y)).unwrap();
        }
        writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11" fill="{c}">{}</text>"#,
            PAD + 10.0,
            PAD + 14.0 * (i as f64 + 1.0),
            escape(&ser.label)
        )
        .unwrap();
    }
    s.push_str("</svg>\n");
    s
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

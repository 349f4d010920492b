//! CSV and SVG artifact writers.

use std::fmt::Write as _;
use std::io;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::PlanePoint;

fn csv_err(e: csv::Error) -> Error {
    Error::InvalidArgument(format!("csv output: {e}"))
}

/// Write `rows` as CSV with a header row taken from the field names.
pub fn write_csv<W: io::Write, T: Serialize>(out: W, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row).map_err(csv_err)?;
    }
    w.flush()
        .map_err(|e| Error::InvalidArgument(format!("csv output: {e}")))
}

/// Render a CSV document with a header but no rows (used when `rows` is
/// empty and the header must still appear).
pub fn write_csv_header<W: io::Write>(out: W, header: &[&str]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header).map_err(csv_err)?;
    w.flush()
        .map_err(|e| Error::InvalidArgument(format!("csv output: {e}")))
}

/// Minimal static SVG canvas in data coordinates (y pointing up).
#[derive(Debug, Clone)]
pub struct SvgCanvas {
    min: PlanePoint,
    max: PlanePoint,
    size: f64,
    body: String,
}

impl SvgCanvas {
    /// Canvas showing the box `[min, max]` with a 5% margin.
    pub fn new(min: PlanePoint, max: PlanePoint, size: f64) -> Self {
        let span = (max - min).max_abs().max(1e-9);
        let pad = PlanePoint::new(0.05 * span, 0.05 * span);
        Self {
            min: min - pad,
            max: max + pad,
            size,
            body: String::new(),
        }
    }

    /// Canvas fitted to `points`.
    pub fn fitted(points: &[PlanePoint], size: f64) -> Self {
        let (mut lo, mut hi) = (
            PlanePoint::new(f64::INFINITY, f64::INFINITY),
            PlanePoint::new(f64::NEG_INFINITY, f64::NEG_INFINITY),
        );
        for p in points.iter().filter(|p| p.is_finite()) {
            lo = PlanePoint::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = PlanePoint::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        if !lo.is_finite() {
            lo = PlanePoint::new(-1.0, -1.0);
            hi = PlanePoint::new(1.0, 1.0);
        }
        Self::new(lo, hi, size)
    }

    fn map(&self, p: PlanePoint) -> (f64, f64) {
        let span = (self.max - self.min).max_abs();
        let s = self.size / span;
        ((p.x - self.min.x) * s, self.size - (p.y - self.min.y) * s)
    }

    pub fn polygon(&mut self, vertices: &[PlanePoint], fill: &str, stroke: &str) {
        let pts: Vec<String> = vertices
            .iter()
            .map(|&v| {
                let (x, y) = self.map(v);
                format!("{x:.3},{y:.3}")
            })
            .collect();
        let _ = writeln!(
            self.body,
            r#"<polygon points="{}" fill="{fill}" fill-opacity="0.3" stroke="{stroke}" stroke-width="1"/>"#,
            pts.join(" ")
        );
    }

    pub fn polyline(&mut self, vertices: &[PlanePoint], stroke: &str) {
        let pts: Vec<String> = vertices
            .iter()
            .map(|&v| {
                let (x, y) = self.map(v);
                format!("{x:.3},{y:.3}")
            })
            .collect();
        let _ = writeln!(
            self.body,
            r#"<polyline points="{}" fill="none" stroke="{stroke}" stroke-width="1"/>"#,
            pts.join(" ")
        );
    }

    pub fn points(&mut self, points: &[PlanePoint], radius: f64, fill: &str) {
        for &p in points {
            let (x, y) = self.map(p);
            let _ = writeln!(
                self.body,
                r#"<circle cx="{x:.3}" cy="{y:.3}" r="{radius}" fill="{fill}"/>"#
            );
        }
    }

    /// Finished document, prefixed by an XML comment carrying `note`.
    pub fn finish(&self, note: &str) -> String {
        let size = self.size;
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{size}\" height=\"{size}\" viewBox=\"0 0 {size} {size}\">\n<!-- {} -->\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{}</svg>\n",
            note.replace("--", "- -"),
            self.body
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    struct Row {
        a: f64,
        b: String,
    }

    #[test]
    fn csv_rows_with_header() {
        let mut buf = Vec::new();
        write_csv(&mut buf, &[Row { a: 0.5, b: "x".into() }]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "a,b\n0.5,x\n");
    }

    #[test]
    fn svg_is_well_formed() {
        let mut c = SvgCanvas::new(PlanePoint::new(-1.0, -1.0), PlanePoint::new(1.0, 1.0), 200.0);
        c.polygon(
            &[
                PlanePoint::new(0.0, 0.0),
                PlanePoint::new(1.0, 0.0),
                PlanePoint::new(0.0, 1.0),
            ],
            "blue",
            "black",
        );
        let doc = c.finish("note");
        assert!(doc.starts_with("<svg") && doc.trim_end().ends_with("</svg>"));
        assert!(doc.contains("<polygon"));
    }
}

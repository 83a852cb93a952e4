//! CSV and legacy VTK writers.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use crate::mesh::Mesh;

/// Formats like C's `%.17g`: 17 significant digits, trailing zeros removed,
/// exponent form when the decimal exponent is below -4 or at least 17.
pub fn fmt_g17(x: f64) -> String {
    const PRECISION: i32 = 17;
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{:.*e}", (PRECISION - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent in scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    let negative = mantissa.starts_with('-');
    let digits: String = mantissa.chars().filter(|c| c.is_ascii_digit()).collect();
    let sign = if negative { "-" } else { "" };
    if !(-4..PRECISION).contains(&exp) {
        let (head, tail) = digits.split_at(1);
        let tail = tail.trim_end_matches('0');
        let esign = if exp < 0 { '-' } else { '+' };
        if tail.is_empty() {
            format!("{sign}{head}e{esign}{:02}", exp.abs())
        } else {
            format!("{sign}{head}.{tail}e{esign}{:02}", exp.abs())
        }
    } else {
        let point = exp + 1;
        let s = if point <= 0 {
            format!("0.{}{}", "0".repeat((-point) as usize), digits)
        } else {
            let (int, frac) = digits.split_at(point as usize);
            format!("{int}.{frac}")
        };
        let s = s.trim_end_matches('0').trim_end_matches('.');
        format!("{sign}{s}")
    }
}

/// Comma-separated writer with a fixed header.
pub struct CsvWriter {
    out: csv::Writer<File>,
}

/// One CSV cell.
pub enum Cell<'a> {
    Num(f64),
    Int(usize),
    Text(&'a str),
}

fn csv_io(e: csv::Error) -> io::Error {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => e,
        other => io::Error::other(format!("{other:?}")),
    }
}

impl CsvWriter {
    pub fn create(path: &Path, header: &[&str]) -> io::Result<Self> {
        let mut out = csv::Writer::from_writer(File::create(path)?);
        out.write_record(header).map_err(csv_io)?;
        Ok(Self { out })
    }

    pub fn row(&mut self, cells: &[Cell<'_>]) -> io::Result<()> {
        let fields = cells.iter().map(|c| match c {
            Cell::Num(v) => fmt_g17(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.to_string(),
        });
        self.out.write_record(fields).map_err(csv_io)
    }

    pub fn flush(&mut self) -> io::Result<()> {
        self.out.flush()
    }
}

/// Point field attached to a VTK file.
pub enum PointField<'a> {
    /// Interleaved 2D vectors, written with a zero third component.
    Vector(&'a str, &'a [f64]),
    Scalar(&'a str, &'a [f64]),
}

/// Legacy 3.0 ASCII unstructured grid of triangles (cell type 5).
pub fn write_vtk(path: &Path, title: &str, mesh: &Mesh, fields: &[PointField<'_>]) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "{title}")?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(w, "POINTS {} double", mesh.n_vertices())?;
    for p in &mesh.vertices {
        writeln!(w, "{} {} 0", fmt_g17(p[0]), fmt_g17(p[1]))?;
    }
    let nt = mesh.triangles.len();
    writeln!(w, "CELLS {} {}", nt, 4 * nt)?;
    for t in &mesh.triangles {
        writeln!(w, "3 {} {} {}", t[0], t[1], t[2])?;
    }
    writeln!(w, "CELL_TYPES {nt}")?;
    for _ in 0..nt {
        writeln!(w, "5")?;
    }
    if !fields.is_empty() {
        writeln!(w, "POINT_DATA {}", mesh.n_vertices())?;
    }
    for f in fields {
        match f {
            PointField::Vector(name, v) => {
                writeln!(w, "VECTORS {name} double")?;
                for c in v.chunks_exact(2) {
                    writeln!(w, "{} {} 0", fmt_g17(c[0]), fmt_g17(c[1]))?;
                }
            }
            PointField::Scalar(name, v) => {
                writeln!(w, "SCALARS {name} double 1")?;
                writeln!(w, "LOOKUP_TABLE default")?;
                for x in v.iter() {
                    writeln!(w, "{}", fmt_g17(*x))?;
                }
            }
        }
    }
    w.flush()
}

//! Plain-text field dumps: header `nx ny h`, then one node per line in
//! row-major order. Values are written in shortest round-trip form.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{Grid, ScalarField, VectorField};
use crate::error::{Error, Result};

pub trait FieldDump: Sized {
    fn to_dump(&self) -> String;
    fn from_dump(text: &str) -> Result<Self>;
}

fn header(g: Grid) -> String {
    format!("{} {} {:e}\n", g.nx(), g.ny(), g.h())
}

fn parse_header(line: Option<&str>) -> Result<Grid> {
    let line = line.ok_or_else(|| Error::Format("missing header".into()))?;
    let parts: Vec<&str> = line.split_whitespace().collect();
    if parts.len() != 3 {
        return Err(Error::Format(format!("bad header '{line}'")));
    }
    let nx: usize = parts[0]
        .parse()
        .map_err(|_| Error::Format(format!("bad nx '{}'", parts[0])))?;
    let ny: usize = parts[1]
        .parse()
        .map_err(|_| Error::Format(format!("bad ny '{}'", parts[1])))?;
    let h: f64 = parts[2]
        .parse()
        .map_err(|_| Error::Format(format!("bad h '{}'", parts[2])))?;
    let g = Grid::new(nx, ny)?;
    if (g.h() - h).abs() > 1e-12 * g.h() {
        return Err(Error::Format(format!("spacing {h} inconsistent with nx = {nx}")));
    }
    Ok(g)
}

fn parse_value(tok: &str, line: usize) -> Result<f64> {
    tok.parse()
        .map_err(|_| Error::Format(format!("line {line}: bad value '{tok}'")))
}

impl FieldDump for ScalarField {
    fn to_dump(&self) -> String {
        let mut out = header(self.grid());
        for v in self.values() {
            writeln!(out, "{v:e}").unwrap();
        }
        out
    }

    fn from_dump(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let g = parse_header(lines.next())?;
        let mut values = Vec::with_capacity(g.len());
        for (k, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() != 1 {
                return Err(Error::Format(format!("line {}: expected 1 column", k + 2)));
            }
            values.push(parse_value(toks[0], k + 2)?);
        }
        ScalarField::from_values(g, values)
    }
}

impl FieldDump for VectorField {
    fn to_dump(&self) -> String {
        let mut out = header(self.grid());
        for (a, b) in self.c1().iter().zip(self.c2()) {
            writeln!(out, "{a:e} {b:e}").unwrap();
        }
        out
    }

    fn from_dump(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let g = parse_header(lines.next())?;
        let mut c1 = Vec::with_capacity(g.len());
        let mut c2 = Vec::with_capacity(g.len());
        for (k, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() != 2 {
                return Err(Error::Format(format!("line {}: expected 2 columns", k + 2)));
            }
            c1.push(parse_value(toks[0], k + 2)?);
            c2.push(parse_value(toks[1], k + 2)?);
        }
        VectorField::from_components(g, c1, c2)
    }
}

pub fn write_scalar(path: &Path, s: &ScalarField) -> Result<()> {
    fs::write(path, s.to_dump()).map_err(|e| Error::io(path, e))
}

pub fn write_vector(path: &Path, v: &VectorField) -> Result<()> {
    fs::write(path, v.to_dump()).map_err(|e| Error::io(path, e))
}

pub fn read_scalar(path: &Path) -> Result<ScalarField> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    ScalarField::from_dump(&text)
}

pub fn read_vector(path: &Path) -> Result<VectorField> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    VectorField::from_dump(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn vector_dump_round_trips_bit_exact(vals in proptest::collection::vec(-1e300f64..1e300, 2 * 81)) {
            let g = Grid::square(9).unwrap();
            let v = VectorField::from_stacked(g, &vals).unwrap();
            let back = VectorField::from_dump(&v.to_dump()).unwrap();
            prop_assert_eq!(back, v);
        }

        #[test]
        fn scalar_dump_round_trips_bit_exact(vals in proptest::collection::vec(any::<f64>().prop_filter("finite", |x| x.is_finite()), 81)) {
            let g = Grid::square(9).unwrap();
            let s = ScalarField::from_values(g, vals).unwrap();
            let back = ScalarField::from_dump(&s.to_dump()).unwrap();
            prop_assert_eq!(back, s);
        }
    }

    #[test]
    fn header_layout() {
        let g = Grid::square(9).unwrap();
        let text = ScalarField::zeros(g).to_dump();
        assert_eq!(text.lines().next().unwrap(), "9 9 1.25e-1");
        assert_eq!(text.lines().count(), 82);
    }

    #[test]
    fn rejects_wrong_column_count() {
        let text = "9 9 1.25e-1\n1 2\n";
        assert!(ScalarField::from_dump(text).is_err());
    }
}

//! Selig and Lednicer coordinate files.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::polyline::{PolylineFoil, Provenance, MIN_SPACING};
use crate::error::{Error, Result};
use crate::geometry::Point2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatFormat {
    Selig,
    Lednicer,
}

impl FromStr for DatFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "selig" => Ok(DatFormat::Selig),
            "lednicer" => Ok(DatFormat::Lednicer),
            _ => Err(Error::Domain(format!("unknown coordinate format '{s}'"))),
        }
    }
}

/// Nonempty lines with their 1-based line numbers.
fn lines(content: &str) -> Vec<(usize, &str)> {
    content
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
        .collect()
}

fn parse_pair(line_no: usize, line: &str) -> Result<(f64, f64)> {
    let mut it = line.split(|c: char| c.is_whitespace() || c == ',').filter(|s| !s.is_empty());
    let mut next = || -> Result<f64> {
        let tok = it.next().ok_or_else(|| Error::Parse {
            line: line_no,
            msg: "expected two numbers".into(),
        })?;
        tok.parse::<f64>().map_err(|_| Error::Parse {
            line: line_no,
            msg: format!("'{tok}' is not a number"),
        })
    };
    let a = next()?;
    let b = next()?;
    if it.next().is_some() {
        return Err(Error::Parse {
            line: line_no,
            msg: "expected two numbers".into(),
        });
    }
    Ok((a, b))
}

/// Lednicer when the first line after the name holds two numbers both
/// greater than 1 (the surface point counts); Selig otherwise.
pub fn detect_format(content: &str) -> DatFormat {
    let ls = lines(content);
    match ls.get(1).map(|(n, l)| parse_pair(*n, l)) {
        Some(Ok((a, b))) if a > 1.0 && b > 1.0 => DatFormat::Lednicer,
        _ => DatFormat::Selig,
    }
}

/// Parses a coordinate file, detecting its format.
pub fn parse_dat(content: &str) -> Result<PolylineFoil> {
    parse_dat_as(content, detect_format(content))
}

/// Parses a coordinate file in the given format. The result is in Selig
/// ordering, chord-normalized, with consecutive repeats removed.
pub fn parse_dat_as(content: &str, format: DatFormat) -> Result<PolylineFoil> {
    let ls = lines(content);
    let Some(&(_, name)) = ls.first() else {
        return Err(Error::Malformed("empty file".into()));
    };
    let points = match format {
        DatFormat::Selig => ls[1..]
            .iter()
            .map(|(n, l)| parse_pair(*n, l).map(|(x, y)| Point2::new(x, y)))
            .collect::<Result<Vec<_>>>()?,
        DatFormat::Lednicer => lednicer_points(&ls)?,
    };
    let mut cleaned: Vec<Point2> = Vec::with_capacity(points.len());
    for p in points {
        if cleaned.last().is_none_or(|q| q.dist(p) > MIN_SPACING) {
            cleaned.push(p);
        }
    }
    if cleaned.len() < 4 {
        return Err(Error::Malformed(format!(
            "need at least 4 points, got {}",
            cleaned.len()
        )));
    }
    PolylineFoil::new(cleaned, name, Provenance::File, None)?.chord_normalized()
}

fn lednicer_points(ls: &[(usize, &str)]) -> Result<Vec<Point2>> {
    let Some(&(count_line, counts)) = ls.get(1) else {
        return Err(Error::Malformed("missing point counts".into()));
    };
    let (nu, nl) = parse_pair(count_line, counts)?;
    if nu.fract() != 0.0 || nl.fract() != 0.0 || nu < 2.0 || nl < 2.0 {
        return Err(Error::Parse {
            line: count_line,
            msg: format!("invalid surface counts {nu} {nl}"),
        });
    }
    let (nu, nl) = (nu as usize, nl as usize);
    let body = &ls[2..];
    if body.len() != nu + nl {
        let line = body.last().map_or(count_line, |(n, _)| *n);
        return Err(Error::Parse {
            line,
            msg: format!("counts give {} points, body has {}", nu + nl, body.len()),
        });
    }
    let pts = body
        .iter()
        .map(|(n, l)| parse_pair(*n, l).map(|(x, y)| Point2::new(x, y)))
        .collect::<Result<Vec<_>>>()?;
    let (upper, lower) = pts.split_at(nu);
    let mut out: Vec<Point2> = upper.iter().rev().copied().collect();
    let skip = usize::from(lower[0].dist(upper[0]) <= MIN_SPACING);
    out.extend_from_slice(&lower[skip..]);
    Ok(out)
}

/// Selig text with shortest round-trip formatting of every coordinate.
pub fn serialize_selig(pf: &PolylineFoil) -> String {
    let mut out = String::new();
    out.push_str(if pf.name().is_empty() { "foil" } else { pf.name() });
    out.push('\n');
    for p in pf.points() {
        out.push_str(&format!("{:?} {:?}\n", p.x, p.y));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const SELIG: &str = "TEST FOIL\n1.0 0.0\n0.5 0.06\n0.0 0.0\n0.5 -0.04\n1.0 0.0\n";

    #[test]
    fn selig_read_through() {
        let pf = parse_dat(SELIG).unwrap();
        assert_eq!(pf.name(), "TEST FOIL");
        assert_eq!(pf.len(), 5);
        assert_eq!(pf.points()[1], Point2::new(0.5, 0.06));
        assert!(pf.is_closed());
    }

    #[test]
    fn second_line_coordinate_means_selig() {
        let s = "X\n0.99 0.002\n0.5 0.05\n0.0 0.0\n0.5 -0.05\n0.99 -0.002\n";
        assert_eq!(detect_format(s), DatFormat::Selig);
        assert_eq!(detect_format("X\n35. 35.\n"), DatFormat::Lednicer);
    }

    #[test]
    fn non_numeric_line_reports_line_number() {
        let s = "X\n1 0\n0.5 abc\n0 0\n0.5 -0.1\n1 0\n";
        match parse_dat(s) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn too_few_points_is_malformed() {
        assert!(matches!(parse_dat("X\n1 0\n0 0\n1 0\n"), Err(Error::Malformed(_))));
    }

    #[test]
    fn lednicer_count_mismatch() {
        let s = "X\n3. 3.\n\n0 0\n0.5 0.05\n1 0\n\n0 0\n0.5 -0.05\n";
        assert!(matches!(parse_dat(s), Err(Error::Parse { .. })));
    }

    #[test]
    fn chord_is_normalized_on_load() {
        let s = "X\n2.0 0.0\n1.0 0.1\n0.0 0.0\n1.0 -0.1\n2.0 0.0\n";
        let pf = parse_dat(s).unwrap();
        assert_eq!(pf.x_range(), (0.0, 1.0));
        assert_eq!(pf.points()[1], Point2::new(0.5, 0.05));
    }
}

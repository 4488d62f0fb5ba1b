//! Point files: a first line holding `n`, then `n` lines of `x y`.
//! Blank lines are ignored.

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::Point;

pub fn parse_points<R: Read>(input: R) -> Result<Vec<Point>> {
    let mut lines = BufReader::new(input)
        .lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l))
        .filter(|(_, l)| l.as_ref().map_or(true, |s| !s.trim().is_empty()));
    let (first, header) = match lines.next() {
        Some((k, l)) => (k, l?),
        None => {
            return Err(Error::Parse {
                line: 1,
                msg: "empty input".into(),
            })
        }
    };
    let n: usize = header.trim().parse().map_err(|e| Error::Parse {
        line: first,
        msg: format!("point count: {e}"),
    })?;
    let mut points = Vec::with_capacity(n);
    for (k, l) in lines {
        let l = l?;
        if points.len() == n {
            return Err(Error::Parse {
                line: k,
                msg: format!("more than {n} points"),
            });
        }
        let mut fields = l.split_whitespace();
        let mut coord = |name: &str| -> Result<i64> {
            fields
                .next()
                .ok_or_else(|| Error::Parse {
                    line: k,
                    msg: format!("missing {name}"),
                })?
                .parse()
                .map_err(|e| Error::Parse {
                    line: k,
                    msg: format!("{name}: {e}"),
                })
        };
        let (x, y) = (coord("x")?, coord("y")?);
        if fields.next().is_some() {
            return Err(Error::Parse {
                line: k,
                msg: "expected two fields".into(),
            });
        }
        points.push(Point::try_new(x, y).map_err(|e| Error::Parse {
            line: k,
            msg: e.to_string(),
        })?);
    }
    if points.len() != n {
        return Err(Error::Parse {
            line: first,
            msg: format!("header says {n} points, found {}", points.len()),
        });
    }
    Ok(points)
}

pub fn write_points<W: Write>(mut out: W, points: &[Point]) -> std::io::Result<()> {
    writeln!(out, "{}", points.len())?;
    for p in points {
        writeln!(out, "{} {}", p.x(), p.y())?;
    }
    Ok(())
}

pub fn read_points_file(path: &Path) -> Result<Vec<Point>> {
    parse_points(fs::File::open(path)?)
}

pub fn write_points_file(path: &Path, points: &[Point]) -> Result<()> {
    let mut buf = Vec::with_capacity(16 * points.len() + 8);
    write_points(&mut buf, points)?;
    fs::write(path, buf)?;
    Ok(())
}

/// Parses `"x,y"`.
pub fn parse_query(s: &str) -> Result<Point> {
    let bad = |msg: String| Error::Parse { line: 0, msg };
    let (x, y) = s
        .split_once(',')
        .ok_or_else(|| bad(format!("query {s:?} is not of the form x,y")))?;
    let x: i64 = x.trim().parse().map_err(|e| bad(format!("query x: {e}")))?;
    let y: i64 = y.trim().parse().map_err(|e| bad(format!("query y: {e}")))?;
    Point::try_new(x, y)
}

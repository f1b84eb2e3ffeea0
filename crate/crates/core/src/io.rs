//! Plain-text correspondence files: one point per line, `x1 y1 x2 y2` or
//! `x y`, with `#` comments. An optional `<path>.labels` sidecar holds one
//! `0`/`1` ground-truth inlier flag per point.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::points::PointSet;

pub fn labels_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".labels");
    PathBuf::from(s)
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

/// Parses correspondence text; line numbers in errors are 1-based.
pub fn parse_correspondences(text: &str) -> Result<PointSet> {
    let mut dim = None;
    let mut coords = Vec::new();
    for (line, content) in data_lines(text) {
        let fields: Vec<&str> = content.split_whitespace().collect();
        if fields.len() != 2 && fields.len() != 4 {
            return Err(Error::Parse {
                line,
                message: format!("expected 2 or 4 values, found {}", fields.len()),
            });
        }
        match dim {
            None => dim = Some(fields.len()),
            Some(d) if d != fields.len() => {
                return Err(Error::Parse {
                    line,
                    message: format!("expected {d} values like the first point, found {}", fields.len()),
                })
            }
            _ => {}
        }
        for f in fields {
            let v: f64 = f.parse().map_err(|_| Error::Parse {
                line,
                message: format!("'{f}' is not a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    line,
                    message: format!("'{f}' is not finite"),
                });
            }
            coords.push(v);
        }
    }
    let Some(dim) = dim else {
        return Err(Error::Parse {
            line: 0,
            message: "no points found".into(),
        });
    };
    PointSet::new(dim, coords)
}

/// Parses a labels sidecar into an inlier mask.
pub fn parse_labels(text: &str) -> Result<Vec<bool>> {
    data_lines(text)
        .map(|(line, l)| match l {
            "1" => Ok(true),
            "0" => Ok(false),
            other => Err(Error::Parse {
                line,
                message: format!("label must be 0 or 1, found '{other}'"),
            }),
        })
        .collect()
}

/// Loads a correspondence file and, when present, its labels sidecar.
pub fn load_correspondences(path: impl AsRef<Path>) -> Result<PointSet> {
    let path = path.as_ref();
    let points = parse_correspondences(&fs::read_to_string(path)?)?;
    let lp = labels_path(path);
    if lp.exists() {
        let mask = parse_labels(&fs::read_to_string(&lp)?)?;
        return points.with_gt_mask(mask);
    }
    Ok(points)
}

/// Text form of a point set; floats are written in shortest round-trip form.
pub fn format_correspondences(points: &PointSet) -> String {
    let mut out = String::new();
    for p in points.iter() {
        let line: Vec<String> = p.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(out, "{}", line.join(" "));
    }
    out
}

/// Writes the points and, if the set carries a ground-truth mask, the labels sidecar.
pub fn save_correspondences(path: impl AsRef<Path>, points: &PointSet) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_correspondences(points))?;
    if let Some(mask) = points.gt_inlier_mask() {
        let labels: String = mask.iter().map(|&b| if b { "1\n" } else { "0\n" }).collect();
        fs::write(labels_path(path), labels)?;
    }
    Ok(())
}

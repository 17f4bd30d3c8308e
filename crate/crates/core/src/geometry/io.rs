use std::fmt::Write as _;
use std::path::Path;

use super::{NodeSet, Point, Rect};
use crate::error::{Error, Result};

/// Writes `# N h` followed by one `x y flag nx ny` line per node. Values are
/// printed with 17 significant digits so that reading them back is exact.
pub fn write_nodes(nodes: &NodeSet, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, format_nodes(nodes)).map_err(|e| Error::io(path, e))
}

pub(crate) fn format_nodes(nodes: &NodeSet) -> String {
    let mut s = String::with_capacity(80 * nodes.len() + 32);
    let _ = writeln!(s, "# {} {:.16e}", nodes.len(), nodes.h);
    for i in 0..nodes.len() {
        let p = nodes.points[i];
        let n = nodes.normals[i];
        let _ = writeln!(
            s,
            "{:.16e} {:.16e} {} {:.16e} {:.16e}",
            p.x,
            p.y,
            u8::from(nodes.boundary[i]),
            n.x,
            n.y
        );
    }
    s
}

/// Reads a node file written by [`write_nodes`]. The domain is recovered as
/// the bounding box of the points.
pub fn read_nodes(path: impl AsRef<Path>) -> Result<NodeSet> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_nodes(&text, path)
}

pub(crate) fn parse_nodes(text: &str, path: &Path) -> Result<NodeSet> {
    let perr = |line: usize, reason: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        reason,
    };
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (hl, header) = lines.next().ok_or_else(|| perr(1, "empty file".into()))?;
    let fields: Vec<&str> = header
        .trim()
        .strip_prefix('#')
        .ok_or_else(|| perr(hl + 1, "header must start with `#`".into()))?
        .split_whitespace()
        .collect();
    if fields.len() != 2 {
        return Err(perr(hl + 1, "header must be `# N h`".into()));
    }
    let count: usize = fields[0]
        .parse()
        .map_err(|_| perr(hl + 1, format!("bad node count `{}`", fields[0])))?;
    let h: f64 = fields[1]
        .parse()
        .map_err(|_| perr(hl + 1, format!("bad spacing `{}`", fields[1])))?;
    if !(h > 0.0 && h.is_finite()) {
        return Err(perr(hl + 1, format!("spacing must be positive, got {h}")));
    }

    let mut points = Vec::with_capacity(count);
    let mut boundary = Vec::with_capacity(count);
    let mut normals = Vec::with_capacity(count);
    for (ln, line) in lines {
        let tok: Vec<&str> = line.split_whitespace().collect();
        if tok.len() != 5 {
            return Err(perr(ln + 1, format!("expected 5 fields, found {}", tok.len())));
        }
        let num = |t: &str| -> Result<f64> {
            let v: f64 = t.parse().map_err(|_| perr(ln + 1, format!("bad number `{t}`")))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(perr(ln + 1, format!("non-finite value `{t}`")))
            }
        };
        let flag = match tok[2] {
            "0" => false,
            "1" => true,
            other => return Err(perr(ln + 1, format!("flag must be 0 or 1, got `{other}`"))),
        };
        points.push(Point::new(num(tok[0])?, num(tok[1])?));
        boundary.push(flag);
        normals.push(Point::new(num(tok[3])?, num(tok[4])?));
    }
    if points.len() != count {
        return Err(perr(
            hl + 1,
            format!("header announces {count} nodes, file has {}", points.len()),
        ));
    }
    if points.is_empty() {
        return Err(perr(hl + 1, "no nodes".into()));
    }
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for p in &points {
        x0 = x0.min(p.x);
        x1 = x1.max(p.x);
        y0 = y0.min(p.y);
        y1 = y1.max(p.y);
    }
    let nodes = NodeSet {
        points,
        boundary,
        normals,
        h,
        domain: Rect::new(x0, x1, y0, y1)?,
    };
    nodes.validate()?;
    Ok(nodes)
}

//! Text formats for points, frames, operators, spectra and embeddings.
//!
//! Every float is written with 17 significant digits so that `f64` values
//! survive a write/read cycle exactly.

use std::io::{BufRead, Write};

use nalgebra::DMatrix;

use crate::error::{HodgeError, Result};
use crate::extderiv::BlockSparseOperator;
use crate::frames::TangentFrameSet;
use crate::geometry::PointCloud;
use crate::hodge::{EmbeddingMatrix, HodgeSpectrum};
use crate::scalar::Real;

pub fn fmt_float<T: Real>(v: T) -> String {
    format!("{:.16e}", v.as_f64())
}

fn parse_float<T: Real>(s: &str, line: usize) -> Result<T> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| HodgeError::Parse { line, msg: format!("not a number: {s:?}") })?;
    Ok(T::lit(v))
}

fn parse_usize(s: &str, line: usize) -> Result<usize> {
    s.trim()
        .parse()
        .map_err(|_| HodgeError::Parse { line, msg: format!("not an integer: {s:?}") })
}

/// Non-empty lines that are not `#` comments, with 1-based line numbers.
fn content_lines<R: BufRead>(reader: R) -> Result<Vec<(usize, String)>> {
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        out.push((idx + 1, trimmed.to_string()));
    }
    Ok(out)
}

fn expect_line<'a>(lines: &'a [(usize, String)], pos: usize, what: &str) -> Result<&'a (usize, String)> {
    lines.get(pos).ok_or_else(|| HodgeError::Parse {
        line: lines.last().map_or(0, |l| l.0),
        msg: format!("unexpected end of input, expected {what}"),
    })
}

fn header_fields(lines: &[(usize, String)], count: usize) -> Result<(usize, Vec<String>)> {
    let (ln, text) = expect_line(lines, 0, "header")?;
    let fields: Vec<String> = text.split_whitespace().map(str::to_string).collect();
    if fields.len() != count {
        return Err(HodgeError::Parse { line: *ln, msg: format!("expected {count} header fields, got {}", fields.len()) });
    }
    Ok((*ln, fields))
}

// ---------------------------------------------------------------- points

/// Points CSV: one point per row, comma-separated coordinates. `#` lines are
/// comments; a first row that is not numeric is taken as a header.
pub fn read_points<T: Real, R: BufRead>(reader: R) -> Result<PointCloud<T>> {
    let lines = content_lines(reader)?;
    let mut rows: Vec<Vec<T>> = Vec::with_capacity(lines.len());
    for (pos, (ln, text)) in lines.iter().enumerate() {
        let parsed: Result<Vec<T>> = text.split(',').map(|f| parse_float(f, *ln)).collect();
        match parsed {
            Ok(row) => {
                if let Some(first) = rows.first() {
                    if first.len() != row.len() {
                        return Err(HodgeError::Parse {
                            line: *ln,
                            msg: format!("expected {} columns, got {}", first.len(), row.len()),
                        });
                    }
                }
                rows.push(row);
            }
            Err(_) if pos == 0 => continue,
            Err(e) => return Err(e),
        }
    }
    PointCloud::from_rows(&rows)
}

pub fn write_points<T: Real, W: Write>(mut w: W, cloud: &PointCloud<T>) -> Result<()> {
    for i in 0..cloud.len() {
        let row: Vec<String> = cloud.point(i).into_iter().map(fmt_float).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

// ---------------------------------------------------------------- frames

/// Header `N n d`, then for every point `d` lines of `n` floats, one line per
/// frame column.
pub fn write_frames<T: Real, W: Write>(mut w: W, frames: &TangentFrameSet<T>) -> Result<()> {
    writeln!(w, "{} {} {}", frames.len(), frames.ambient_dim(), frames.intrinsic_dimension())?;
    for f in frames.frames() {
        for col in f.column_iter() {
            let vals: Vec<String> = col.iter().map(|&v| fmt_float(v)).collect();
            writeln!(w, "{}", vals.join(" "))?;
        }
    }
    Ok(())
}

pub fn read_frames<T: Real, R: BufRead>(reader: R) -> Result<TangentFrameSet<T>> {
    let lines = content_lines(reader)?;
    let (ln, h) = header_fields(&lines, 3)?;
    let (n_points, n, d) = (parse_usize(&h[0], ln)?, parse_usize(&h[1], ln)?, parse_usize(&h[2], ln)?);
    let mut frames = Vec::with_capacity(n_points);
    let mut pos = 1;
    for _ in 0..n_points {
        let mut f = DMatrix::zeros(n, d);
        for c in 0..d {
            let (ln, text) = expect_line(&lines, pos, "frame column")?;
            pos += 1;
            let vals: Vec<T> = text.split_whitespace().map(|s| parse_float(s, *ln)).collect::<Result<_>>()?;
            if vals.len() != n {
                return Err(HodgeError::Parse { line: *ln, msg: format!("expected {n} floats, got {}", vals.len()) });
            }
            for (r, v) in vals.into_iter().enumerate() {
                f[(r, c)] = v;
            }
        }
        frames.push(f);
    }
    TangentFrameSet::from_frames(frames)
}

// ---------------------------------------------------------------- operators

/// Header `N d k t`, then one line per stored block: `i j` and the block's
/// `C(d,k+1)·C(d,k)` values row-major.
pub fn write_operator<T: Real, W: Write>(mut w: W, ed: &BlockSparseOperator<T>) -> Result<()> {
    writeln!(w, "{} {} {} {}", ed.n_points(), ed.intrinsic_dim(), ed.order(), fmt_float(ed.bandwidth()))?;
    for (i, j, b) in ed.blocks() {
        let mut line = format!("{i} {j}");
        for &v in b {
            line.push(' ');
            line.push_str(&fmt_float(v));
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}

pub fn read_operator<T: Real, R: BufRead>(reader: R) -> Result<BlockSparseOperator<T>> {
    let lines = content_lines(reader)?;
    let (ln, h) = header_fields(&lines, 4)?;
    let (n, d, k) = (parse_usize(&h[0], ln)?, parse_usize(&h[1], ln)?, parse_usize(&h[2], ln)?);
    let t: T = parse_float(&h[3], ln)?;
    let mut blocks = Vec::new();
    for (ln, text) in &lines[1..] {
        let mut fields = text.split_whitespace();
        let i = parse_usize(fields.next().unwrap_or(""), *ln)?;
        let j = parse_usize(fields.next().unwrap_or(""), *ln)?;
        let vals = fields.map(|s| parse_float(s, *ln)).collect::<Result<Vec<T>>>()?;
        blocks.push((i, j, vals));
    }
    BlockSparseOperator::from_blocks(k, d, n, t, blocks)
}

// ---------------------------------------------------------------- spectra

/// One eigenvalue per line, descending.
pub fn write_eigenvalues<T: Real, W: Write>(mut w: W, eigenvalues: &[T]) -> Result<()> {
    for &v in eigenvalues {
        writeln!(w, "{}", fmt_float(v))?;
    }
    Ok(())
}

pub fn read_eigenvalues<T: Real, R: BufRead>(reader: R) -> Result<Vec<T>> {
    content_lines(reader)?.iter().map(|(ln, s)| parse_float(s, *ln)).collect()
}

/// Spectrum cache: header `k c N t tm count raw_min`, a line of `count`
/// eigenvalues, then `count` lines each holding one eigenvector.
pub fn write_spectrum<T: Real, W: Write>(mut w: W, spec: &HodgeSpectrum<T>) -> Result<()> {
    writeln!(
        w,
        "{} {} {} {} {} {} {}",
        spec.order,
        spec.block_len,
        spec.n_points,
        fmt_float(spec.bandwidth),
        spec.tm,
        spec.count(),
        fmt_float(spec.raw_min_eigenvalue)
    )?;
    let vals: Vec<String> = spec.eigenvalues.iter().map(|&v| fmt_float(v)).collect();
    writeln!(w, "{}", vals.join(" "))?;
    for col in spec.vectors.column_iter() {
        let vals: Vec<String> = col.iter().map(|&v| fmt_float(v)).collect();
        writeln!(w, "{}", vals.join(" "))?;
    }
    Ok(())
}

pub fn read_spectrum<T: Real, R: BufRead>(reader: R) -> Result<HodgeSpectrum<T>> {
    let lines = content_lines(reader)?;
    let (ln, h) = header_fields(&lines, 7)?;
    let order = parse_usize(&h[0], ln)?;
    let block_len = parse_usize(&h[1], ln)?;
    let n_points = parse_usize(&h[2], ln)?;
    let bandwidth = parse_float(&h[3], ln)?;
    let tm = parse_usize(&h[4], ln)? as u32;
    let count = parse_usize(&h[5], ln)?;
    let raw_min_eigenvalue = parse_float(&h[6], ln)?;
    let dim = n_points * block_len;
    let parse_row = |pos: usize, len: usize, what: &str| -> Result<Vec<T>> {
        let (ln, text) = expect_line(&lines, pos, what)?;
        let vals: Vec<T> = text.split_whitespace().map(|s| parse_float(s, *ln)).collect::<Result<_>>()?;
        if vals.len() != len {
            return Err(HodgeError::Parse { line: *ln, msg: format!("expected {len} values, got {}", vals.len()) });
        }
        Ok(vals)
    };
    let eigenvalues = parse_row(1, count, "eigenvalues")?;
    let mut vectors = DMatrix::zeros(dim, count);
    for l in 0..count {
        let v = parse_row(2 + l, dim, "eigenvector")?;
        vectors.column_mut(l).copy_from_slice(&v);
    }
    Ok(HodgeSpectrum { order, block_len, n_points, bandwidth, tm, eigenvalues, vectors, raw_min_eigenvalue })
}

// ---------------------------------------------------------------- embeddings

/// Header `index,eta_1_1,eta_1_2,…` (upper triangle, `l1 ≤ l2`, row-major,
/// 1-based), then one row per point.
pub fn write_embedding<T: Real, W: Write>(mut w: W, emb: &EmbeddingMatrix<T>) -> Result<()> {
    let m = emb.m;
    let mut header = vec!["index".to_string()];
    for l1 in 0..m {
        for l2 in l1..m {
            header.push(format!("eta_{}_{}", l1 + 1, l2 + 1));
        }
    }
    writeln!(w, "{}", header.join(","))?;
    for (i, eta) in emb.points.iter().enumerate() {
        let mut row = vec![i.to_string()];
        for l1 in 0..m {
            for l2 in l1..m {
                row.push(fmt_float(eta[(l1, l2)]));
            }
        }
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

pub fn read_embedding<T: Real, R: BufRead>(reader: R) -> Result<EmbeddingMatrix<T>> {
    let lines = content_lines(reader)?;
    let (ln, header) = expect_line(&lines, 0, "header")?;
    let columns = header.split(',').count() - 1;
    // columns = m(m+1)/2
    let m = ((((8 * columns + 1) as f64).sqrt() - 1.0) / 2.0).round() as usize;
    if m * (m + 1) / 2 != columns {
        return Err(HodgeError::Parse { line: *ln, msg: format!("{columns} columns is not a triangle number") });
    }
    let mut points = Vec::with_capacity(lines.len() - 1);
    for (ln, text) in &lines[1..] {
        let fields: Vec<&str> = text.split(',').collect();
        if fields.len() != columns + 1 {
            return Err(HodgeError::Parse { line: *ln, msg: format!("expected {} fields", columns + 1) });
        }
        let mut eta = DMatrix::zeros(m, m);
        let mut f = fields[1..].iter();
        for l1 in 0..m {
            for l2 in l1..m {
                let v: T = parse_float(f.next().expect("counted"), *ln)?;
                eta[(l1, l2)] = v;
                eta[(l2, l1)] = v;
            }
        }
        points.push(eta);
    }
    Ok(EmbeddingMatrix { m, points })
}

/// Header `index,eta_1_1,…,eta_c_c`, the first `count` diagonal entries per
/// point.
pub fn write_diagonal<T: Real, W: Write>(mut w: W, emb: &EmbeddingMatrix<T>, count: usize) -> Result<()> {
    let count = count.min(emb.m);
    let header: Vec<String> = std::iter::once("index".to_string())
        .chain((1..=count).map(|l| format!("eta_{l}_{l}")))
        .collect();
    writeln!(w, "{}", header.join(","))?;
    for i in 0..emb.len() {
        let row: Vec<String> = std::iter::once(i.to_string())
            .chain(emb.diagonal(i, count).into_iter().map(fmt_float))
            .collect();
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

/// Header `index,psi_1,…,psi_m`, one row per point.
pub fn write_coordinates<T: Real, W: Write>(mut w: W, prefix: &str, coords: &DMatrix<T>) -> Result<()> {
    let header: Vec<String> = std::iter::once("index".to_string())
        .chain((1..=coords.ncols()).map(|l| format!("{prefix}_{l}")))
        .collect();
    writeln!(w, "{}", header.join(","))?;
    for (i, row) in coords.row_iter().enumerate() {
        let fields: Vec<String> = std::iter::once(i.to_string()).chain(row.iter().map(|&v| fmt_float(v))).collect();
        writeln!(w, "{}", fields.join(","))?;
    }
    Ok(())
}

/// Minimal SVG scatter plot of 2-D coordinates, coloured by `labels`
/// (a hue per distinct label value).
pub fn write_svg_scatter<W: Write>(mut w: W, xy: &[(f64, f64)], labels: &[usize]) -> Result<()> {
    const SIZE: f64 = 600.0;
    const PAD: f64 = 20.0;
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for &(x, y) in xy {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    let sx = if x1 > x0 { (SIZE - 2.0 * PAD) / (x1 - x0) } else { 1.0 };
    let sy = if y1 > y0 { (SIZE - 2.0 * PAD) / (y1 - y0) } else { 1.0 };
    let max_label = labels.iter().copied().max().unwrap_or(0).max(1) as f64;
    writeln!(w, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}">"#)?;
    writeln!(w, r#"<rect width="100%" height="100%" fill="white"/>"#)?;
    for (idx, &(x, y)) in xy.iter().enumerate() {
        let hue = 300.0 * labels.get(idx).copied().unwrap_or(0) as f64 / max_label;
        let cx = PAD + (x - x0) * sx;
        let cy = SIZE - PAD - (y - y0) * sy;
        writeln!(w, r#"<circle cx="{cx:.2}" cy="{cy:.2}" r="2" fill="hsl({hue:.0},80%,45%)"/>"#)?;
    }
    writeln!(w, "</svg>")?;
    Ok(())
}

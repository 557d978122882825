//! Trajectory files and norm tables. The layouts are documented in
//! `docs/formats.md`; `tests/golden` holds one sample of each.

use std::io::Write;
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::params::{Params, Sign};
use crate::spaces::{SnapshotNorms, Trajectory};
use crate::spectral::{Field, Grid};

pub const BINARY_MAGIC: &[u8; 8] = b"GKDVTRJ1";
pub const TEXT_HEADER: &str = "# gkdv trajectory text v1";
/// Bytes before the time table in the binary layout.
pub const BINARY_HEADER_LEN: usize = 64;

fn sign_text(s: Sign) -> &'static str {
    match s {
        Sign::Plus => "plus",
        Sign::Minus => "minus",
    }
}

/// Shortest round-trip form of `v`.
fn num(v: f64) -> String {
    format!("{v:e}")
}

pub fn trajectory_to_text(traj: &Trajectory) -> String {
    let g = traj.grid();
    let p = traj.params();
    let mut out = String::new();
    out.push_str(TEXT_HEADER);
    out.push('\n');
    let band = g.band_limit().map_or_else(|| "none".to_string(), num);
    let header = [
        ("n_points", g.n_points().to_string()),
        ("half_width", num(g.half_width())),
        ("band_limit", band),
        ("j", p.j().to_string()),
        ("alpha", num(p.alpha())),
        ("sign", sign_text(p.sign()).to_string()),
        ("s", p.s().to_string()),
        ("n_snapshots", traj.len().to_string()),
        (
            "times",
            traj.times().iter().map(|&t| num(t)).collect::<Vec<_>>().join(","),
        ),
    ];
    for (k, v) in header {
        out.push_str(k);
        out.push(' ');
        out.push_str(&v);
        out.push('\n');
    }
    out.push_str("data\n");
    for snap in traj.snapshots() {
        let row: Vec<String> = snap.values().iter().flat_map(|v| [num(v.re), num(v.im)]).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Parser state tracking the byte offset of the current line.
struct Lines<'a> {
    text: &'a str,
    offset: usize,
}

impl<'a> Lines<'a> {
    fn next_line(&mut self, what: &str) -> Result<(usize, &'a str)> {
        if self.offset >= self.text.len() {
            return Err(Error::Format {
                offset: self.offset as u64,
                message: format!("unexpected end of file, expected {what}"),
            });
        }
        let start = self.offset;
        let rest = &self.text[start..];
        let (line, used) = match rest.find('\n') {
            Some(i) => (&rest[..i], i + 1),
            None => (rest, rest.len()),
        };
        self.offset += used;
        Ok((start, line.trim_end_matches('\r')))
    }

    fn field(&mut self, key: &str) -> Result<(usize, &'a str)> {
        let (at, line) = self.next_line(key)?;
        match line.split_once(' ') {
            Some((k, v)) if k == key => Ok((at + k.len() + 1, v.trim())),
            _ => Err(Error::Format {
                offset: at as u64,
                message: format!("expected `{key} <value>`, found {line:?}"),
            }),
        }
    }
}

fn parse_at<T: std::str::FromStr>(text: &str, at: usize, what: &str) -> Result<T> {
    text.parse().map_err(|_| Error::Format {
        offset: at as u64,
        message: format!("cannot parse {what} from {text:?}"),
    })
}

/// Header fields shared by both layouts.
struct Header {
    n: usize,
    half_width: f64,
    band: Option<f64>,
    j: u32,
    alpha: f64,
    sign: Sign,
    s: u32,
}

fn build(at: usize, h: Header) -> Result<(Grid, Params)> {
    let Header {
        n,
        half_width,
        band,
        j,
        alpha,
        sign,
        s,
    } = h;
    let bad = |e: Error| Error::Format {
        offset: at as u64,
        message: format!("invalid header: {e}"),
    };
    let mut grid = Grid::new(n, half_width).map_err(bad)?;
    if let Some(b) = band {
        grid = grid.with_band_limit(b).map_err(bad)?;
    }
    let params = Params::new(j, alpha, sign, s).map_err(bad)?;
    Ok((grid, params))
}

fn assemble(at: usize, params: Params, times: Vec<f64>, snaps: Vec<Field>) -> Result<Trajectory> {
    Trajectory::new(params, times, snaps).map_err(|e| Error::Format {
        offset: at as u64,
        message: format!("invalid trajectory: {e}"),
    })
}

pub fn trajectory_from_text(text: &str) -> Result<Trajectory> {
    let mut lines = Lines { text, offset: 0 };
    let (at, first) = lines.next_line("header")?;
    if first != TEXT_HEADER {
        return Err(Error::Format {
            offset: at as u64,
            message: format!("expected {TEXT_HEADER:?}"),
        });
    }
    let (at, v) = lines.field("n_points")?;
    let n: usize = parse_at(v, at, "n_points")?;
    let (at, v) = lines.field("half_width")?;
    let half_width: f64 = parse_at(v, at, "half_width")?;
    let (at, v) = lines.field("band_limit")?;
    let band = if v == "none" {
        None
    } else {
        Some(parse_at::<f64>(v, at, "band_limit")?)
    };
    let (at, v) = lines.field("j")?;
    let j: u32 = parse_at(v, at, "j")?;
    let (at, v) = lines.field("alpha")?;
    let alpha: f64 = parse_at(v, at, "alpha")?;
    let (at, v) = lines.field("sign")?;
    let sign = match v {
        "plus" => Sign::Plus,
        "minus" => Sign::Minus,
        _ => {
            return Err(Error::Format {
                offset: at as u64,
                message: format!("sign must be plus or minus, got {v:?}"),
            })
        }
    };
    let (at, v) = lines.field("s")?;
    let s: u32 = parse_at(v, at, "s")?;
    let (grid, params) = build(
        at,
        Header {
            n,
            half_width,
            band,
            j,
            alpha,
            sign,
            s,
        },
    )?;
    let (at, v) = lines.field("n_snapshots")?;
    let count: usize = parse_at(v, at, "n_snapshots")?;
    let (at, v) = lines.field("times")?;
    let times: Vec<f64> = v
        .split(',')
        .map(|t| parse_at(t.trim(), at, "a time"))
        .collect::<Result<_>>()?;
    if times.len() != count {
        return Err(Error::Format {
            offset: at as u64,
            message: format!("{} times for {count} snapshots", times.len()),
        });
    }
    let (at, v) = lines.next_line("data marker")?;
    if v != "data" {
        return Err(Error::Format {
            offset: at as u64,
            message: format!("expected `data`, found {v:?}"),
        });
    }
    let mut snaps = Vec::with_capacity(count);
    for k in 0..count {
        let (at, row) = lines.next_line(&format!("snapshot row {k}"))?;
        let nums: Vec<f64> = row
            .split(',')
            .map(|x| parse_at(x.trim(), at, "a sample"))
            .collect::<Result<_>>()?;
        if nums.len() != 2 * n {
            return Err(Error::Format {
                offset: at as u64,
                message: format!("snapshot row {k} has {} numbers, expected {}", nums.len(), 2 * n),
            });
        }
        let values = nums.chunks_exact(2).map(|c| Complex64::new(c[0], c[1])).collect();
        snaps.push(Field::new(grid, values).map_err(|e| Error::Format {
            offset: at as u64,
            message: e.to_string(),
        })?);
    }
    if lines.text[lines.offset..].trim().is_empty() {
        assemble(lines.offset, params, times, snaps)
    } else {
        Err(Error::Format {
            offset: lines.offset as u64,
            message: "trailing content after the last snapshot".into(),
        })
    }
}

pub fn trajectory_to_binary(traj: &Trajectory) -> Vec<u8> {
    let g = traj.grid();
    let p = traj.params();
    let n = g.n_points();
    let mut out = Vec::with_capacity(BINARY_HEADER_LEN + 8 * traj.len() * (1 + 2 * n));
    out.extend_from_slice(BINARY_MAGIC);
    out.extend_from_slice(&(n as u64).to_le_bytes());
    out.extend_from_slice(&(traj.len() as u64).to_le_bytes());
    out.extend_from_slice(&g.half_width().to_le_bytes());
    out.extend_from_slice(&g.band_limit().unwrap_or(0.0).to_le_bytes());
    out.extend_from_slice(&p.j().to_le_bytes());
    out.extend_from_slice(&(p.sign().value() as i32).to_le_bytes());
    out.extend_from_slice(&p.alpha().to_le_bytes());
    out.extend_from_slice(&p.s().to_le_bytes());
    out.extend_from_slice(&0u32.to_le_bytes());
    debug_assert_eq!(out.len(), BINARY_HEADER_LEN);
    for t in traj.times() {
        out.extend_from_slice(&t.to_le_bytes());
    }
    for snap in traj.snapshots() {
        for v in snap.values() {
            out.extend_from_slice(&v.re.to_le_bytes());
            out.extend_from_slice(&v.im.to_le_bytes());
        }
    }
    out
}

struct Bytes<'a> {
    data: &'a [u8],
    pos: usize,
}

impl Bytes<'_> {
    fn take<const N: usize>(&mut self, what: &str) -> Result<[u8; N]> {
        let end = self.pos + N;
        if end > self.data.len() {
            return Err(Error::Format {
                offset: self.data.len() as u64,
                message: format!(
                    "file truncated while reading {what} (needed {N} bytes at offset {})",
                    self.pos
                ),
            });
        }
        let mut buf = [0u8; N];
        buf.copy_from_slice(&self.data[self.pos..end]);
        self.pos = end;
        Ok(buf)
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(what)?))
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(what)?))
    }

    fn i32(&mut self, what: &str) -> Result<i32> {
        Ok(i32::from_le_bytes(self.take(what)?))
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(what)?))
    }
}

pub fn trajectory_from_binary(data: &[u8]) -> Result<Trajectory> {
    let mut b = Bytes { data, pos: 0 };
    let magic: [u8; 8] = b.take("magic")?;
    if &magic != BINARY_MAGIC {
        return Err(Error::Format {
            offset: 0,
            message: "bad magic, expected GKDVTRJ1".into(),
        });
    }
    let n = b.u64("n_points")? as usize;
    let count = b.u64("n_snapshots")? as usize;
    let half_width = b.f64("half_width")?;
    let band = b.f64("band_limit")?;
    let j = b.u32("j")?;
    let sign_at = b.pos;
    let sign = Sign::from_value(b.i32("sign")? as i64).ok_or_else(|| Error::Format {
        offset: sign_at as u64,
        message: "sign must be +1 or -1".into(),
    })?;
    let alpha = b.f64("alpha")?;
    let s = b.u32("s")?;
    let _reserved = b.u32("reserved")?;
    let band = (band != 0.0).then_some(band);
    let (grid, params) = build(
        8,
        Header {
            n,
            half_width,
            band,
            j,
            alpha,
            sign,
            s,
        },
    )?;
    let expected = BINARY_HEADER_LEN as u64 + 8 * count as u64 * (1 + 2 * n as u64);
    if (data.len() as u64) > expected {
        return Err(Error::Format {
            offset: expected,
            message: format!("{} trailing bytes", data.len() as u64 - expected),
        });
    }
    let times = (0..count).map(|_| b.f64("times")).collect::<Result<Vec<_>>>()?;
    let mut snaps = Vec::with_capacity(count);
    for k in 0..count {
        let at = b.pos;
        let values = (0..n)
            .map(|_| {
                let re = b.f64(&format!("snapshot {k}"))?;
                let im = b.f64(&format!("snapshot {k}"))?;
                Ok(Complex64::new(re, im))
            })
            .collect::<Result<Vec<_>>>()?;
        snaps.push(Field::new(grid, values).map_err(|e| Error::Format {
            offset: at as u64,
            message: e.to_string(),
        })?);
    }
    assemble(BINARY_HEADER_LEN, params, times, snaps)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(bytes)?;
    f.flush()?;
    Ok(())
}

pub fn write_trajectory_text(traj: &Trajectory, path: &Path) -> Result<()> {
    write_file(path, trajectory_to_text(traj).as_bytes())
}

pub fn read_trajectory_text(path: &Path) -> Result<Trajectory> {
    trajectory_from_text(&std::fs::read_to_string(path)?)
}

pub fn write_trajectory_binary(traj: &Trajectory, path: &Path) -> Result<()> {
    write_file(path, &trajectory_to_binary(traj))
}

pub fn read_trajectory_binary(path: &Path) -> Result<Trajectory> {
    trajectory_from_binary(&std::fs::read(path)?)
}

/// Comma-separated norm table, one row per snapshot.
pub fn norm_series_csv(series: &[SnapshotNorms]) -> String {
    let Some(first) = series.first() else {
        return String::new();
    };
    let mut header = vec!["t".to_string(), "l2".into(), "h_s".into(), "weighted_sup".into()];
    header.extend((1..=first.weighted_deriv.len()).map(|g| format!("weighted_d{g}")));
    header.extend((0..first.smoothing_sup.len()).map(|l| format!("smoothing_sup_l{l}")));
    let mut out = header.join(",");
    out.push('\n');
    for row in series {
        let mut cells = vec![num(row.t), num(row.l2), num(row.h_s), num(row.weighted_sup)];
        cells.extend(row.weighted_deriv.iter().map(|&v| num(v)));
        cells.extend(row.smoothing_sup.iter().map(|&v| num(v)));
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

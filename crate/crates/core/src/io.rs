//! File formats.
//!
//! Binary arrays (sinograms, images, backprojection fields) are a one-line
//! JSON header terminated by `\n`, followed by little-endian `f64` samples
//! and, when masked, one byte per sample (`1` = measured).
//!
//! A sinogram payload holds the `n_views` regular rows, then the `φ = 0` and
//! `φ = π` rows. Image payloads are row-major with `x1` varying fastest.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cht::StandardLine;
use crate::dbp::BField;
use crate::error::{Error, Result};
use crate::grid::ImageGrid;
use crate::interp::cubic_interpolate;
use crate::sinogram::{SinoMask, Sinogram};
use crate::tables::chebyshev_nodes;

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum Header {
    Sinogram {
        n_views: usize,
        n_rays: usize,
        s_max: f64,
        mu0: f64,
        has_mask: bool,
    },
    Image {
        n1: usize,
        n2: usize,
        extent: f64,
    },
    Bfield {
        n1: usize,
        n2: usize,
        extent: f64,
        mu0: f64,
    },
}

fn format_err(msg: impl Into<String>) -> Error {
    Error::Format(msg.into())
}

fn write_header(w: &mut impl Write, header: &Header) -> Result<()> {
    serde_json::to_writer(&mut *w, header)?;
    w.write_all(b"\n")?;
    Ok(())
}

fn write_f64s(w: &mut impl Write, values: &[f64]) -> Result<()> {
    for v in values {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn write_mask(w: &mut impl Write, mask: &[bool]) -> Result<()> {
    let bytes: Vec<u8> = mask.iter().map(|&m| m as u8).collect();
    w.write_all(&bytes)?;
    Ok(())
}

fn read_header(r: &mut impl BufRead) -> Result<Header> {
    let mut line = String::new();
    r.read_line(&mut line)?;
    if !line.ends_with('\n') {
        return Err(format_err("missing header line"));
    }
    serde_json::from_str(line.trim_end()).map_err(|e| format_err(format!("bad header: {e}")))
}

fn read_f64s(r: &mut impl Read, n: usize) -> Result<Vec<f64>> {
    let mut buf = vec![0u8; n * 8];
    r.read_exact(&mut buf)
        .map_err(|_| format_err(format!("payload too short, expected {n} samples")))?;
    Ok(buf
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect())
}

fn read_mask(r: &mut impl Read, n: usize) -> Result<Vec<bool>> {
    let mut buf = vec![0u8; n];
    r.read_exact(&mut buf)
        .map_err(|_| format_err(format!("mask too short, expected {n} bytes")))?;
    buf.into_iter()
        .map(|b| match b {
            0 => Ok(false),
            1 => Ok(true),
            other => Err(format_err(format!("mask byte {other}"))),
        })
        .collect()
}

fn expect_eof(r: &mut impl Read) -> Result<()> {
    let mut extra = [0u8; 1];
    match r.read(&mut extra)? {
        0 => Ok(()),
        _ => Err(format_err("trailing bytes after payload")),
    }
}

pub fn write_sinogram(path: &Path, g: &Sinogram) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_header(
        &mut w,
        &Header::Sinogram {
            n_views: g.n_views,
            n_rays: g.n_rays,
            s_max: g.s_max,
            mu0: g.mu0,
            has_mask: g.mask.is_some(),
        },
    )?;
    write_f64s(&mut w, &g.values)?;
    write_f64s(&mut w, &g.endpoint_rows[0])?;
    write_f64s(&mut w, &g.endpoint_rows[1])?;
    if let Some(mask) = &g.mask {
        write_mask(&mut w, &mask.views)?;
        write_mask(&mut w, &mask.endpoints[0])?;
        write_mask(&mut w, &mask.endpoints[1])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_sinogram(path: &Path) -> Result<Sinogram> {
    let mut r = BufReader::new(File::open(path)?);
    let Header::Sinogram {
        n_views,
        n_rays,
        s_max,
        mu0,
        has_mask,
    } = read_header(&mut r)?
    else {
        return Err(format_err(format!("{} is not a sinogram", path.display())));
    };
    let mut g = Sinogram::zeros(n_views, n_rays, s_max, mu0)?;
    g.values = read_f64s(&mut r, n_views * n_rays)?;
    g.endpoint_rows = [read_f64s(&mut r, n_rays)?, read_f64s(&mut r, n_rays)?];
    if has_mask {
        g.mask = Some(SinoMask {
            views: read_mask(&mut r, n_views * n_rays)?,
            endpoints: [read_mask(&mut r, n_rays)?, read_mask(&mut r, n_rays)?],
        });
    }
    expect_eof(&mut r)?;
    Ok(g)
}

pub fn write_image(path: &Path, img: &ImageGrid) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_header(
        &mut w,
        &Header::Image {
            n1: img.n1,
            n2: img.n2,
            extent: img.extent,
        },
    )?;
    write_f64s(&mut w, &img.values)?;
    w.flush()?;
    Ok(())
}

pub fn read_image(path: &Path) -> Result<ImageGrid> {
    let mut r = BufReader::new(File::open(path)?);
    let Header::Image { n1, n2, extent } = read_header(&mut r)? else {
        return Err(format_err(format!("{} is not an image", path.display())));
    };
    let mut img = ImageGrid::zeros(n1, n2, extent)?;
    img.values = read_f64s(&mut r, n1 * n2)?;
    expect_eof(&mut r)?;
    Ok(img)
}

pub fn write_bfield(path: &Path, b: &BField) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_header(
        &mut w,
        &Header::Bfield {
            n1: b.grid.n1,
            n2: b.grid.n2,
            extent: b.grid.extent,
            mu0: b.mu0,
        },
    )?;
    write_f64s(&mut w, &b.grid.values)?;
    write_mask(&mut w, &b.valid)?;
    w.flush()?;
    Ok(())
}

pub fn read_bfield(path: &Path) -> Result<BField> {
    let mut r = BufReader::new(File::open(path)?);
    let Header::Bfield {
        n1,
        n2,
        extent,
        mu0,
    } = read_header(&mut r)?
    else {
        return Err(format_err(format!(
            "{} is not a backprojection field",
            path.display()
        )));
    };
    let mut grid = ImageGrid::zeros(n1, n2, extent)?;
    grid.values = read_f64s(&mut r, n1 * n2)?;
    let valid = read_mask(&mut r, n1 * n2)?;
    expect_eof(&mut r)?;
    Ok(BField { grid, mu0, valid })
}

/// Text form of one standardized line:
///
/// ```text
/// mu1 <value>
/// c_mu1 <value>
/// <t> <h(t)>
/// ...
/// ```
///
/// The `(t, h)` samples may sit anywhere in `(-1, 1)`; they are resampled to
/// `n` first-kind Chebyshev nodes by cubic interpolation (or used as-is when
/// they already are those nodes).
pub fn parse_line_text(text: &str, n: Option<usize>) -> Result<StandardLine> {
    let mut mu1 = None;
    let mut c_mu1 = None;
    let mut samples = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let bad = |msg: &str| format_err(format!("line {}: {msg}", lineno + 1));
        let mut fields = line.split_whitespace();
        let (Some(a), Some(b), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(bad("expected two fields"));
        };
        let value: f64 = b.parse().map_err(|_| bad("bad number"))?;
        match a {
            "mu1" => mu1 = Some(value),
            "c_mu1" => c_mu1 = Some(value),
            t => samples.push((t.parse::<f64>().map_err(|_| bad("bad number"))?, value)),
        }
    }
    let mu1 = mu1.ok_or_else(|| format_err("missing mu1"))?;
    let c_mu1 = c_mu1.ok_or_else(|| format_err("missing c_mu1"))?;
    if samples.len() < 4 {
        return Err(format_err("need at least four (t, h) samples"));
    }
    let n = n.unwrap_or(samples.len());
    let nodes = chebyshev_nodes(n);
    let as_given = samples.len() == n
        && samples
            .iter()
            .zip(&nodes)
            .all(|(s, q)| (s.0 - q).abs() <= 1e-12);
    let h_nodes = if as_given {
        samples.iter().map(|s| s.1).collect()
    } else {
        samples.sort_by(|a, b| a.0.total_cmp(&b.0));
        let ts: Vec<f64> = samples.iter().map(|s| s.0).collect();
        let hs: Vec<f64> = samples.iter().map(|s| s.1).collect();
        nodes
            .iter()
            .map(|&q| cubic_interpolate(&ts, &hs, q))
            .collect::<Result<Vec<f64>>>()?
    };
    StandardLine::new(mu1, h_nodes, c_mu1)
}

pub fn format_line_text(line: &StandardLine) -> String {
    let mut out = format!("mu1 {:e}\nc_mu1 {:e}\n", line.mu1, line.c_mu1);
    for (t, h) in line.nodes().iter().zip(&line.h_nodes) {
        out.push_str(&format!("{t:e} {h:e}\n"));
    }
    out
}

/// 16-bit binary PGM with min/max windowing, `+x2` up. Returns the window.
pub fn write_pgm(path: &Path, img: &ImageGrid) -> Result<(f64, f64)> {
    let (lo, hi) = img
        .values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let scale = if hi > lo { 65535.0 / (hi - lo) } else { 0.0 };
    let mut w = BufWriter::new(File::create(path)?);
    write!(w, "P5\n{} {}\n65535\n", img.n1, img.n2)?;
    for i2 in (0..img.n2).rev() {
        for i1 in 0..img.n1 {
            let level = ((img.get(i1, i2) - lo) * scale).round().clamp(0.0, 65535.0) as u16;
            w.write_all(&level.to_be_bytes())?;
        }
    }
    w.flush()?;
    Ok((lo, hi))
}

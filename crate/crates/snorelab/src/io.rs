//! Artifact formats: trace CSV, 8-bit PGM with a raw-double sidecar, and mask
//! text files. Every artifact carries a provenance line with the artifact
//! version, config hash and seed.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use snorelab_core::trace::{RunAbort, RunMetadata};
use snorelab_core::{Method, RunTrace, TraceRecord, Vector};

use sha2::{Digest, Sha256};

use crate::config::ARTIFACT_VERSION;
use crate::error::{io, Error, Result};

pub const TRACE_COLUMNS: [&str; 10] = [
    "k",
    "delta_k",
    "lambda_k",
    "sigma_k",
    "residual",
    "F_est",
    "F_stderr",
    "gradF_sq_est",
    "gradF_sq_stderr",
    "psnr",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub version: String,
    pub config_hash: String,
    pub seed: u64,
}

impl Provenance {
    pub fn new(config_hash: impl Into<String>, seed: u64) -> Self {
        Self {
            version: ARTIFACT_VERSION.to_string(),
            config_hash: config_hash.into(),
            seed,
        }
    }

    fn line(&self) -> String {
        format!(
            "snorelab version={} config_hash={} seed={}",
            self.version, self.config_hash, self.seed
        )
    }
}

/// Row-major image with values nominally in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pub data: Vec<f64>,
    pub height: usize,
    pub width: usize,
}

fn malformed(path: &Path, what: &'static str, reason: impl Into<String>) -> Error {
    Error::Malformed {
        path: path.to_path_buf(),
        what,
        reason: reason.into(),
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io(dir))?;
    }
    fs::write(path, bytes).map_err(io(path))
}

/// `round(clamp(v, 0, 1)·255)` with halves rounded up; NaN maps to 0.
pub fn quantize(v: f64) -> u8 {
    let c = if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
    (c * 255.0 + 0.5).floor() as u8
}

pub fn pgm_bytes(data: &[f64], height: usize, width: usize, prov: &Provenance) -> Vec<u8> {
    assert_eq!(data.len(), height * width, "image shape");
    let mut out = format!("P5\n# {}\n{width} {height}\n255\n", prov.line()).into_bytes();
    out.extend(data.iter().map(|&v| quantize(v)));
    out
}

/// Sidecar path next to a PGM: same stem, `.txt` extension.
pub fn sidecar_path(pgm: &Path) -> PathBuf {
    pgm.with_extension("txt")
}

/// Writes the 8-bit PGM and its lossless sidecar.
pub fn write_pgm(
    path: &Path,
    data: &[f64],
    height: usize,
    width: usize,
    prov: &Provenance,
) -> Result<()> {
    write_file(path, &pgm_bytes(data, height, width, prov))?;
    write_sidecar(&sidecar_path(path), data, height, width, prov)
}

fn header_tokens<'a>(bytes: &'a [u8], path: &Path) -> Result<(Vec<&'a [u8]>, usize)> {
    let mut tokens = Vec::with_capacity(4);
    let mut i = 0;
    while tokens.len() < 4 {
        match bytes.get(i) {
            None => return Err(malformed(path, "PGM", "truncated header")),
            Some(b'#') => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            }
            Some(b) if b.is_ascii_whitespace() => i += 1,
            Some(_) => {
                let start = i;
                while i < bytes.len() && !bytes[i].is_ascii_whitespace() && bytes[i] != b'#' {
                    i += 1;
                }
                tokens.push(&bytes[start..i]);
            }
        }
    }
    // exactly one whitespace byte separates the header from the raster
    match bytes.get(i) {
        Some(b) if b.is_ascii_whitespace() => Ok((tokens, i + 1)),
        _ => Err(malformed(path, "PGM", "missing whitespace after maxval")),
    }
}

pub fn parse_pgm(bytes: &[u8], path: &Path) -> Result<Image> {
    let (tokens, start) = header_tokens(bytes, path)?;
    if tokens[0] != b"P5" {
        return Err(malformed(path, "PGM", "magic is not P5"));
    }
    let number = |t: &[u8], name: &str| -> Result<usize> {
        std::str::from_utf8(t)
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| malformed(path, "PGM", format!("bad {name}")))
    };
    let width = number(tokens[1], "width")?;
    let height = number(tokens[2], "height")?;
    if number(tokens[3], "maxval")? != 255 {
        return Err(malformed(path, "PGM", "maxval must be 255"));
    }
    let raster = &bytes[start..];
    if raster.len() != width * height || width * height == 0 {
        return Err(malformed(
            path,
            "PGM",
            format!(
                "header says {width}×{height} = {} pixels, file holds {}",
                width * height,
                raster.len()
            ),
        ));
    }
    Ok(Image {
        data: raster.iter().map(|&b| b as f64 / 255.0).collect(),
        height,
        width,
    })
}

pub fn read_pgm(path: &Path) -> Result<Image> {
    let bytes = fs::read(path).map_err(io(path))?;
    parse_pgm(&bytes, path)
}

pub fn sidecar_text(data: &[f64], height: usize, width: usize, prov: &Provenance) -> String {
    let mut s = format!("# {}\nshape {height} {width}\n", prov.line());
    for v in data {
        writeln!(s, "{v:e}").unwrap();
    }
    s
}

pub fn write_sidecar(
    path: &Path,
    data: &[f64],
    height: usize,
    width: usize,
    prov: &Provenance,
) -> Result<()> {
    write_file(path, sidecar_text(data, height, width, prov).as_bytes())
}

pub fn parse_sidecar(text: &str, path: &Path) -> Result<Image> {
    let mut lines = text.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty());
    let shape = lines
        .next()
        .ok_or_else(|| malformed(path, "sidecar", "missing shape line"))?;
    let dims: Vec<usize> = match shape.strip_prefix("shape ") {
        Some(rest) => rest
            .split_whitespace()
            .map(|t| t.parse())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| malformed(path, "sidecar", "bad shape line"))?,
        None => return Err(malformed(path, "sidecar", "missing shape line")),
    };
    let [height, width] = dims[..] else {
        return Err(malformed(path, "sidecar", "shape needs two sides"));
    };
    let data: Vec<f64> = lines
        .map(|l| l.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| malformed(path, "sidecar", e.to_string()))?;
    if data.len() != height * width {
        return Err(malformed(
            path,
            "sidecar",
            format!("shape {height}×{width} but {} values", data.len()),
        ));
    }
    Ok(Image {
        data,
        height,
        width,
    })
}

pub fn read_sidecar(path: &Path) -> Result<Image> {
    let text = fs::read_to_string(path).map_err(io(path))?;
    parse_sidecar(&text, path)
}

/// One row of `0`/`1` per image row.
pub fn mask_text(mask: &[bool], width: usize, prov: &Provenance) -> String {
    let mut s = format!("# {}\n", prov.line());
    for row in mask.chunks(width.max(1)) {
        let cells: Vec<&str> = row.iter().map(|&m| if m { "1" } else { "0" }).collect();
        s.push_str(&cells.join(" "));
        s.push('\n');
    }
    s
}

pub fn write_mask(path: &Path, mask: &[bool], width: usize, prov: &Provenance) -> Result<()> {
    write_file(path, mask_text(mask, width, prov).as_bytes())
}

pub fn parse_mask(text: &str, path: &Path) -> Result<Vec<bool>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .flat_map(str::split_whitespace)
        .map(|t| match t {
            "0" => Ok(false),
            "1" => Ok(true),
            other => Err(malformed(path, "mask", format!("unexpected token `{other}`"))),
        })
        .collect()
}

pub fn read_mask(path: &Path) -> Result<Vec<bool>> {
    let text = fs::read_to_string(path).map_err(io(path))?;
    parse_mask(&text, path)
}

/// Header fields of a trace file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceHeader {
    pub provenance: Provenance,
    /// Step law of the run (`constant` or `power-decay`).
    pub schedule: String,
    /// The rows hash to the digest recorded when the file was written.
    pub digest_ok: bool,
}

fn digest(body: &str) -> String {
    Sha256::digest(body.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn real(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn trace_csv(trace: &RunTrace, schedule: &str, prov: &Provenance) -> String {
    let m = &trace.metadata;
    let mut body = String::with_capacity(160 * (trace.records.len() + 1));
    body.push_str(&TRACE_COLUMNS.join(","));
    body.push('\n');
    for r in &trace.records {
        let psnr = r.psnr.map(real).unwrap_or_default();
        writeln!(
            body,
            "{},{},{},{},{},{},{},{},{},{}",
            r.k,
            real(r.delta),
            real(r.lambda),
            real(r.sigma),
            real(r.residual),
            real(r.f_est),
            real(r.f_stderr),
            real(r.grad_sq_est),
            real(r.grad_sq_stderr),
            psnr
        )
        .unwrap();
    }
    let meta: [(&str, String); 12] = [
        ("snorelab_version", prov.version.clone()),
        ("config_hash", prov.config_hash.clone()),
        ("seed", m.seed.to_string()),
        ("method", m.method.to_string()),
        ("schedule", schedule.to_string()),
        ("fingerprint", format!("{:016x}", m.fingerprint)),
        ("iters", m.iters.to_string()),
        ("record_every", m.record_every.to_string()),
        ("practical_mode", m.practical_mode.to_string()),
        ("lipschitz_exact", m.lipschitz_exact.to_string()),
        (
            "abort",
            trace
                .abort
                .as_ref()
                .map_or("none".into(), |a| format!("{} {}", a.k, a.reason)),
        ),
        ("data_sha256", digest(&body)),
    ];
    let mut s = String::with_capacity(body.len() + 1024);
    for (k, v) in meta {
        writeln!(s, "# {k}={v}").unwrap();
    }
    s.push_str(&body);
    s
}

pub fn write_trace(path: &Path, trace: &RunTrace, schedule: &str, prov: &Provenance) -> Result<()> {
    write_file(path, trace_csv(trace, schedule, prov).as_bytes())
}

/// Parses a trace file. The final iterate is not stored in the CSV; the
/// returned trace carries a one-entry placeholder.
pub fn parse_trace(text: &str, path: &Path) -> Result<(RunTrace, TraceHeader)> {
    let bad = |line: usize, reason: String| malformed(path, "trace", format!("line {line}: {reason}"));
    let mut meta = std::collections::HashMap::new();
    let mut records = Vec::new();
    let mut saw_header = false;
    let mut body = String::with_capacity(text.len());
    for (i, line) in text.lines().enumerate() {
        let n = i + 1;
        if let Some(rest) = line.strip_prefix("# ") {
            let (k, v) = rest
                .split_once('=')
                .ok_or_else(|| bad(n, "metadata needs key=value".into()))?;
            meta.insert(k.to_string(), v.to_string());
            continue;
        }
        body.push_str(line);
        body.push('\n');
        if !saw_header {
            if line != TRACE_COLUMNS.join(",") {
                return Err(bad(n, "unexpected column header".into()));
            }
            saw_header = true;
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != TRACE_COLUMNS.len() {
            return Err(bad(n, format!("{} cells, expected 10", cells.len())));
        }
        let num = |j: usize| -> Result<f64> {
            cells[j]
                .parse::<f64>()
                .map_err(|_| bad(n, format!("bad {} `{}`", TRACE_COLUMNS[j], cells[j])))
        };
        records.push(TraceRecord {
            k: cells[0]
                .parse()
                .map_err(|_| bad(n, format!("bad k `{}`", cells[0])))?,
            delta: num(1)?,
            lambda: num(2)?,
            sigma: num(3)?,
            residual: num(4)?,
            f_est: num(5)?,
            f_stderr: num(6)?,
            grad_sq_est: num(7)?,
            grad_sq_stderr: num(8)?,
            psnr: if cells[9].is_empty() { None } else { Some(num(9)?) },
        });
    }
    let get = |k: &str| -> Result<&String> {
        meta.get(k)
            .ok_or_else(|| malformed(path, "trace", format!("missing metadata `{k}`")))
    };
    let parse_meta = |k: &str| -> Result<u64> {
        get(k)?
            .parse()
            .map_err(|_| malformed(path, "trace", format!("bad metadata `{k}`")))
    };
    let flag = |k: &str| -> Result<bool> {
        get(k)?
            .parse()
            .map_err(|_| malformed(path, "trace", format!("bad metadata `{k}`")))
    };
    let method: Method = get("method")?
        .parse()
        .map_err(|_| malformed(path, "trace", "unknown method"))?;
    let fingerprint = u64::from_str_radix(get("fingerprint")?, 16)
        .map_err(|_| malformed(path, "trace", "bad fingerprint"))?;
    let abort = match get("abort")?.as_str() {
        "none" => None,
        other => {
            let (k, reason) = other.split_once(' ').unwrap_or((other, ""));
            Some(RunAbort {
                k: k.parse().map_err(|_| malformed(path, "trace", "bad abort"))?,
                reason: reason.to_string(),
            })
        }
    };
    let seed = parse_meta("seed")?;
    let trace = RunTrace {
        records,
        metadata: RunMetadata {
            seed,
            method,
            fingerprint,
            iters: parse_meta("iters")? as usize,
            record_every: parse_meta("record_every")? as usize,
            practical_mode: flag("practical_mode")?,
            lipschitz_exact: flag("lipschitz_exact")?,
        },
        final_state: Vector::zeros(1),
        abort,
    };
    let header = TraceHeader {
        provenance: Provenance {
            version: get("snorelab_version")?.clone(),
            config_hash: get("config_hash")?.clone(),
            seed,
        },
        schedule: get("schedule")?.clone(),
        digest_ok: *get("data_sha256")? == digest(&body),
    };
    Ok((trace, header))
}

pub fn read_trace(path: &Path) -> Result<(RunTrace, TraceHeader)> {
    let text = fs::read_to_string(path).map_err(io(path))?;
    parse_trace(&text, path)
}

/// Plain text artifact with a provenance line on top.
pub fn write_text(path: &Path, body: &str, prov: &Provenance) -> Result<()> {
    write_file(path, format!("# {}\n{body}", prov.line()).as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantization_rounds_half_up() {
        assert_eq!(quantize(0.5), 128);
        assert_eq!(quantize(0.0), 0);
        assert_eq!(quantize(1.0), 255);
        assert_eq!(quantize(-3.0), 0);
        assert_eq!(quantize(7.0), 255);
        assert_eq!(quantize(f64::NAN), 0);
        assert_eq!(quantize(1.5 / 255.0), 2);
    }

    #[test]
    fn header_comments_are_skipped() {
        let bytes = b"P5\n# hi\n2 1\n# mid\n255\n\x00\xff";
        let img = parse_pgm(bytes, Path::new("x.pgm")).unwrap();
        assert_eq!((img.height, img.width), (1, 2));
        assert_eq!(img.data, vec![0.0, 1.0]);
    }
}

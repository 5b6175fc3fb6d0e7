//! On-disk formats.
//!
//! * State files come in pairs: `<name>.meta` holds `key=value` lines
//!   (representation, lattice, norm, parameter echo) and `<name>.dat` holds
//!   the amplitude as little-endian IEEE-754 `f64`, interleaved `(re, im)`,
//!   row-major with particle a as the row index.
//! * CSV files start with a `# params:` line echoing the configuration and a
//!   single `#`-prefixed header naming the columns. Floats are written with
//!   17 significant digits so identical runs give identical bytes.
//! * Config files are flat `key=value` text with `#` comments.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{BipartiteAmplitude, ModelParams, MomentumGrid, Representation};

/// Round-trip exact float formatting (17 significant digits).
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Parses `key=value` lines. Blank lines and `#` comments are skipped;
/// duplicate keys are rejected.
pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Config(format!("line {}: expected key=value", lineno + 1))
        })?;
        let key = key.trim().to_string();
        if key.is_empty() {
            return Err(Error::Config(format!("line {}: empty key", lineno + 1)));
        }
        if map.insert(key.clone(), value.trim().to_string()).is_some() {
            return Err(Error::Config(format!("duplicate key `{key}`")));
        }
    }
    Ok(map)
}

/// `key=value` echo of the model parameters, using the config key names.
pub fn params_echo(params: &ModelParams) -> Vec<(&'static str, String)> {
    vec![
        ("kc", fmt_f64(params.k_c)),
        ("sigma", fmt_f64(params.sigma)),
        ("delta", fmt_f64(params.delta)),
        ("gamma", fmt_f64(params.gamma_rate)),
        ("em", fmt_f64(params.em_over_hbar)),
        ("detuning", fmt_f64(params.detuning)),
        ("t", fmt_f64(params.t)),
    ]
}

fn stem(path: &Path) -> PathBuf {
    match path.extension().and_then(|e| e.to_str()) {
        Some("meta") | Some("dat") => path.with_extension(""),
        _ => path.to_path_buf(),
    }
}

fn with_suffix(stem: &Path, ext: &str) -> PathBuf {
    let mut s = stem.as_os_str().to_os_string();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

/// Writes `<dir>/<name>.meta` and `<dir>/<name>.dat`; returns both paths.
pub fn write_state(
    dir: &Path,
    name: &str,
    amplitude: &BipartiteAmplitude,
    params: &ModelParams,
    extra: &[(&str, String)],
) -> Result<[PathBuf; 2]> {
    let base = dir.join(name);
    let meta_path = with_suffix(&base, "meta");
    let dat_path = with_suffix(&base, "dat");

    let mut meta = String::new();
    meta.push_str(&format!("name={name}\n"));
    meta.push_str(&format!(
        "representation={}\n",
        amplitude.representation().as_str()
    ));
    meta.push_str(&format!("n_points={}\n", amplitude.grid().n_points()));
    meta.push_str(&format!("extent={}\n", fmt_f64(amplitude.grid().extent())));
    meta.push_str(&format!("norm={}\n", fmt_f64(amplitude.norm_sqr())));
    for (k, v) in params_echo(params) {
        meta.push_str(&format!("{k}={v}\n"));
    }
    for (k, v) in extra {
        meta.push_str(&format!("{k}={v}\n"));
    }
    fs::write(&meta_path, meta)?;

    let mut out = BufWriter::new(fs::File::create(&dat_path)?);
    for z in amplitude.values().iter() {
        out.write_all(&z.re.to_le_bytes())?;
        out.write_all(&z.im.to_le_bytes())?;
    }
    out.flush()?;
    Ok([meta_path, dat_path])
}

/// A state file read back from disk.
#[derive(Debug, Clone)]
pub struct StateFile {
    pub amplitude: BipartiteAmplitude,
    pub params: ModelParams,
    pub meta: BTreeMap<String, String>,
}

fn meta_f64(meta: &BTreeMap<String, String>, key: &str) -> Result<f64> {
    let raw = meta
        .get(key)
        .ok_or_else(|| Error::Format(format!("missing `{key}` in state metadata")))?;
    raw.parse()
        .map_err(|_| Error::Format(format!("bad number for `{key}`: {raw}")))
}

/// Reads a state from `<stem>.meta` / `<stem>.dat`. `path` may name either
/// file or the common stem.
pub fn read_state(path: &Path) -> Result<StateFile> {
    let base = stem(path);
    let meta = parse_key_values(&fs::read_to_string(with_suffix(&base, "meta"))?)
        .map_err(|e| Error::Format(e.to_string()))?;
    let representation = meta
        .get("representation")
        .and_then(|r| Representation::parse(r))
        .ok_or_else(|| Error::Format("missing or unknown representation".into()))?;
    let n: usize = meta
        .get("n_points")
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| Error::Format("missing or bad n_points".into()))?;
    let extent = meta_f64(&meta, "extent")?;
    let params = ModelParams {
        k_c: meta_f64(&meta, "kc")?,
        sigma: meta_f64(&meta, "sigma")?,
        delta: meta_f64(&meta, "delta")?,
        gamma_rate: meta_f64(&meta, "gamma")?,
        em_over_hbar: meta_f64(&meta, "em")?,
        detuning: meta_f64(&meta, "detuning")?,
        t: meta_f64(&meta, "t")?,
    };

    let bytes = fs::read(with_suffix(&base, "dat"))?;
    let expected = n
        .checked_mul(n)
        .and_then(|c| c.checked_mul(16))
        .ok_or_else(|| Error::Format("n_points overflows".into()))?;
    if bytes.len() != expected {
        return Err(Error::Format(format!(
            "data file has {} bytes, expected {expected}",
            bytes.len()
        )));
    }
    let word = |k: usize| {
        let mut b = [0u8; 8];
        b.copy_from_slice(&bytes[8 * k..8 * k + 8]);
        f64::from_le_bytes(b)
    };
    let values = Array2::from_shape_fn((n, n), |(i, j)| {
        let k = 2 * (i * n + j);
        Complex64::new(word(k), word(k + 1))
    });
    let grid = MomentumGrid::from_raw(n, extent)?;
    Ok(StateFile {
        amplitude: BipartiteAmplitude::new(values, grid, representation)?,
        params,
        meta,
    })
}

/// One CSV cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<i64> for Cell {
    fn from(x: i64) -> Self {
        Cell::Int(x)
    }
}

/// Writes a self-describing CSV file.
pub fn write_csv<I>(path: &Path, params_line: &str, columns: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<Cell>>,
{
    let mut out = BufWriter::new(fs::File::create(path)?);
    writeln!(out, "# params: {params_line}")?;
    writeln!(out, "# {}", columns.join(","))?;
    let mut line = String::new();
    for row in rows {
        if row.len() != columns.len() {
            return Err(Error::Format(format!(
                "row has {} cells, header has {}",
                row.len(),
                columns.len()
            )));
        }
        line.clear();
        for (idx, cell) in row.iter().enumerate() {
            if idx > 0 {
                line.push(',');
            }
            match cell {
                Cell::Int(v) => line.push_str(&v.to_string()),
                Cell::Float(v) => line.push_str(&fmt_f64(*v)),
            }
        }
        writeln!(out, "{line}")?;
    }
    out.flush()?;
    Ok(())
}

/// Parses a comma-separated float list. Empty input is an empty list.
pub fn parse_list(raw: &str) -> Result<Vec<f64>> {
    let raw = raw.trim();
    if raw.is_empty() {
        return Ok(Vec::new());
    }
    raw.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("bad number `{}` in list", s.trim())))
        })
        .collect()
}

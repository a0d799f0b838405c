//! Plain-text exports: CSV tables with JSON sidecars, coordinate-format
//! matrix dumps and collapse inputs.
//!
//! Floats are written with the shortest representation that round-trips,
//! so identical values always produce identical bytes.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dynamics::TimeSeries;
use crate::error::{Error, Result};
use crate::hamiltonian::SparseHamiltonian;
use crate::scalar::Real;
use crate::scaling::{CollapsePoint, CollapseResult};
use crate::spectral::{DosProfile, EigenSolution};

/// `data.csv` → `data.json`.
pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

pub fn write_json<S: Serialize + ?Sized>(path: &Path, value: &S) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_json<D: for<'a> Deserialize<'a>>(path: &Path) -> Result<D> {
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}

fn write_table<I, R>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Spectrum as `(E, epsilon)` rows plus a sidecar with `meta`.
pub fn write_spectrum<T: Real, M: Serialize>(path: &Path, sol: &EigenSolution<T>, meta: &M) -> Result<()> {
    let eps = sol.normalized()?;
    write_table(path, &["E", "epsilon"], sol.energies().iter().zip(&eps).map(|(e, x)| [e.to_string(), x.to_string()]))?;
    write_json(&sidecar_path(path), meta)
}

/// Density of states as `(epsilon, density)` rows at bin centres.
pub fn write_dos<T: Real, M: Serialize>(path: &Path, dos: &DosProfile<T>, meta: &M) -> Result<()> {
    write_table(path, &["epsilon", "density"], dos.centers().iter().zip(&dos.density).map(|(c, d)| [c.to_string(), d.to_string()]))?;
    #[derive(Serialize)]
    struct Sidecar<'a, M> {
        total_states: usize,
        bins: usize,
        warnings: &'a [String],
        #[serde(flatten)]
        meta: &'a M,
    }
    write_json(&sidecar_path(path), &Sidecar { total_states: dos.total_states, bins: dos.bins(), warnings: &dos.warnings, meta })
}

/// `(time, value, smoothed_value)` rows; the last column is empty when the
/// series has not been smoothed. The sidecar holds the series metadata.
pub fn write_series<T: Real>(path: &Path, series: &TimeSeries<T>) -> Result<()> {
    let smoothed = series.smoothed.as_deref();
    write_table(
        path,
        &["time", "value", "smoothed_value"],
        series.grid.points().iter().zip(&series.values).enumerate().map(|(k, (t, v))| {
            [t.to_string(), v.to_string(), smoothed.map(|s| s[k].to_string()).unwrap_or_default()]
        }),
    )?;
    write_json(&sidecar_path(path), &series.meta)
}

/// Coordinate-format dump: one `# key=value ...` header, then `row col value`
/// lines with 17 significant digits, zero-based, row-major.
pub fn write_hamiltonian_coo<T: Real>(path: &Path, h: &SparseHamiltonian<T>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write!(w, "# model={}", h.model().tag())?;
    for (k, v) in h.model().summary() {
        write!(w, " {k}={v}")?;
    }
    writeln!(w, " N={} max_occ={} dim={} nnz={}", h.basis().particles(), h.basis().max_occ(), h.dim(), h.nnz())?;
    for r in 0..h.dim() {
        for (c, v) in h.row(r) {
            writeln!(w, "{r} {c} {:.16e}", v.to_f64_lossy())?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Entries of a dump written by [`write_hamiltonian_coo`].
pub fn read_hamiltonian_coo(path: &Path) -> Result<Vec<(usize, usize, f64)>> {
    let mut out = Vec::new();
    for (n, line) in BufReader::new(File::open(path)?).lines().enumerate() {
        let line = line?;
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        let bad = || Error::parameter(format!("{}:{}: malformed entry", path.display(), n + 1));
        let mut it = line.split_whitespace();
        let r = it.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
        let c = it.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
        let v = it.next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
        out.push((r, c, v));
    }
    Ok(out)
}

#[derive(Deserialize)]
struct ExponentRow {
    gamma: f64,
    xi: f64,
}

/// Collapse input with header `L,gamma,y`.
pub fn read_collapse_points(path: &Path) -> Result<Vec<CollapsePoint<f64>>> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

pub fn write_collapse_points<T: Real + Serialize>(path: &Path, points: &[CollapsePoint<T>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for p in points {
        w.serialize(p)?;
    }
    w.flush()?;
    Ok(())
}

/// Exponent table with header `gamma,xi`.
pub fn read_exponent_points(path: &Path) -> Result<Vec<(f64, f64)>> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    r.deserialize::<ExponentRow>().map(|row| Ok(row.map(|e| (e.gamma, e.xi))?)).collect()
}

pub fn write_exponent_points(path: &Path, points: &[(f64, f64)]) -> Result<()> {
    write_table(path, &["gamma", "xi"], points.iter().map(|(g, x)| [g.to_string(), x.to_string()]))
}

/// Result record as JSON and collapsed `(L, gamma, x, y)` rows as CSV.
pub fn write_collapse<T: Real + Serialize + for<'a> Deserialize<'a>>(
    json: &Path,
    csv_path: &Path,
    result: &CollapseResult<T>,
    coordinates: &[(usize, T, T, T)],
) -> Result<()> {
    write_json(json, result)?;
    write_table(
        csv_path,
        &["L", "gamma", "x", "y"],
        coordinates.iter().map(|(l, g, x, y)| [l.to_string(), g.to_string(), x.to_string(), y.to_string()]),
    )
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn file_sha256(path: &Path) -> Result<String> {
    Ok(sha256_hex(&std::fs::read(path)?))
}
